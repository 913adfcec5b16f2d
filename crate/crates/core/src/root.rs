//! Bracketed scalar root finding: bisection to localize, then a safeguarded
//! secant (Illinois false position) to polish.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Expands `[-s, s]` by factor 2 (starting from `s = start`) until `f(-s) >= 0 >= f(s)`.
///
/// Returns `(a, f(a), b, f(b))` for a decreasing function, `None` when no
/// bracket is found within `max_doublings`.
pub fn bracket_decreasing(
    f: &mut impl FnMut(f64) -> f64,
    start: f64,
    max_doublings: usize,
) -> Option<(f64, f64, f64, f64)> {
    let mut s = start.abs().max(f64::MIN_POSITIVE);
    for _ in 0..=max_doublings {
        let (fa, fb) = (f(-s), f(s));
        if !(fa.is_finite() && fb.is_finite()) {
            return None;
        }
        if fa >= 0.0 && fb <= 0.0 {
            return Some((-s, fa, s, fb));
        }
        s *= 2.0;
    }
    None
}

/// Root of `f` on `[a, b]` with `f(a)` and `f(b)` of opposite sign (or zero).
///
/// Terminates when `|f(x)| <= ftol` or the bracket shrinks to rounding level.
pub fn solve_bracketed(
    f: &mut impl FnMut(f64) -> f64,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    ftol: f64,
    max_iter: usize,
) -> Root {
    if fa == 0.0 {
        return Root { x: a, fx: fa, iterations: 0, converged: true };
    }
    if fb == 0.0 {
        return Root { x: b, fx: fb, iterations: 0, converged: true };
    }
    debug_assert!(fa.signum() != fb.signum());
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    // last endpoint that was kept, for the Illinois halving
    let mut side = 0i8;
    for it in 1..=max_iter {
        let width = (b - a).abs();
        let mid = 0.5 * (a + b);
        let coarse = width > 1e-3 * (1.0 + mid.abs());
        let x = if coarse {
            mid
        } else {
            let s = b - fb * (b - a) / (fb - fa);
            if s.is_finite() && s > a.min(b) && s < a.max(b) {
                s
            } else {
                mid
            }
        };
        let fx = f(x);
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() <= ftol {
            return Root { x, fx, iterations: it, converged: true };
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == -1 && !coarse {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 && !coarse {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= 4.0 * f64::EPSILON * (a.abs().max(b.abs()).max(1.0)) {
            return Root { x: best.0, fx: best.1, iterations: it, converged: true };
        }
    }
    Root { x: best.0, fx: best.1, iterations: max_iter, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let mut f = |x: f64| 2.0 - x * x * x;
        let (a, fa, b, fb) = bracket_decreasing(&mut f, 0.5, 60).unwrap();
        let r = solve_bracketed(&mut f, a, fa, b, fb, 1e-14, 200);
        assert!(r.converged);
        assert!((r.x - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn piecewise_linear_exact() {
        let mut f = |x: f64| -(x - 0.3) - 0.5 * (x - 1.0).max(0.0);
        let (a, fa, b, fb) = bracket_decreasing(&mut f, 1.0, 60).unwrap();
        let r = solve_bracketed(&mut f, a, fa, b, fb, 1e-15, 200);
        assert!((r.x - 0.3).abs() < 1e-14);
    }

    #[test]
    fn no_bracket_for_positive_function() {
        let mut f = |x: f64| 1.0 + x * x;
        assert!(bracket_decreasing(&mut f, 1.0, 10).is_none());
    }
}
