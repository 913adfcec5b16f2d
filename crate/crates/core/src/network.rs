//! Sparse regression with a small smoothed network:
//! `f(W, b) = sum_i sqrt((W2 s(W1 s(W0 x_i + b0) + b1) + b2 - y_i)^2 + eps^2)`
//! with activation `s(a) = sqrt(a^2 + eps^2)` and `g = lambda * sum_j |W_j|_1`.

use crate::error::{Error, Result};
use crate::layout::{BlockLayout, BlockSpec};
use crate::problem::SmoothObjective;
use crate::prox::NonsmoothSpec;
use crate::rng::Rng;
use crate::vector::check_len;

pub const N_SAMPLES: usize = 80;
pub const NOISE_SIGMA: f64 = 1.5;
pub const N_OUTLIERS: usize = 20;
pub const OUTLIER_SCALE: (f64, f64) = (4.0, 8.0);
pub const INIT_STD: f64 = 0.5;

const DATA_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;

/// The target function `x^3 + cos(5x)`.
pub fn target_fn(x: f64) -> f64 {
    x * x * x + (5.0 * x).cos()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Sorted indices of the scaled-noise samples.
    pub outliers: Vec<usize>,
    pub noise_sigma: f64,
}

/// 80 equispaced samples on `[-3, 3]`, Gaussian noise with std 1.5, and 20
/// distinct samples whose noise is multiplied by a factor from `U[4, 8)`.
pub fn generate_data(seed: u64) -> RegressionDataset {
    let mut rng = Rng::derived(seed, DATA_STREAM);
    let x: Vec<f64> = (0..N_SAMPLES).map(|i| -3.0 + 6.0 * i as f64 / (N_SAMPLES - 1) as f64).collect();
    let mut noise: Vec<f64> = rng.normal_vec(N_SAMPLES).into_iter().map(|e| NOISE_SIGMA * e).collect();
    let mut outliers = rng.choose_indices(N_SAMPLES, N_OUTLIERS);
    outliers.sort_unstable();
    for &i in &outliers {
        noise[i] *= rng.uniform(OUTLIER_SCALE.0, OUTLIER_SCALE.1);
    }
    let y = x.iter().zip(&noise).map(|(xi, e)| target_fn(*xi) + e).collect();
    RegressionDataset { x, y, outliers, noise_sigma: NOISE_SIGMA }
}

impl RegressionDataset {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Comma-separated `x,y,is_outlier` with a header row; floats round-trip exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,is_outlier\n");
        for i in 0..self.len() {
            let flag = u8::from(self.outliers.binary_search(&i).is_ok());
            out.push_str(&format!("{},{},{}\n", self.x[i], self.y[i], flag));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "x,y,is_outlier" => {}
            _ => return Err(Error::Config("dataset csv: missing header x,y,is_outlier".into())),
        }
        let mut data = RegressionDataset { x: vec![], y: vec![], outliers: vec![], noise_sigma: NOISE_SIGMA };
        for (i, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Config(format!("dataset csv: malformed row {}: {line}", i + 2));
            if cols.len() != 3 {
                return Err(bad());
            }
            data.x.push(cols[0].parse().map_err(|_| bad())?);
            data.y.push(cols[1].parse().map_err(|_| bad())?);
            match cols[2] {
                "1" => data.outliers.push(i),
                "0" => {}
                _ => return Err(bad()),
            }
        }
        Ok(data)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub dims: [usize; 4],
    pub eps: f64,
    pub lambda: f64,
    pub layout: BlockLayout,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self::new([1, 10, 10, 1], 0.1, 1.0)
    }
}

impl NetworkSpec {
    pub fn new(dims: [usize; 4], eps: f64, lambda: f64) -> Self {
        let mut blocks = Vec::new();
        for j in 0..3 {
            blocks.push(BlockSpec::new(format!("W{j}"), dims[j + 1], dims[j], true));
            blocks.push(BlockSpec::new(format!("b{j}"), dims[j + 1], 1, false));
        }
        Self { dims, eps, lambda, layout: BlockLayout::new(blocks) }
    }

    pub fn n_params(&self) -> usize {
        self.layout.total()
    }

    /// `lambda * |W|_1` over the weight blocks only.
    pub fn regularizer(&self) -> NonsmoothSpec {
        NonsmoothSpec::l1(self.lambda).with_mask(self.layout.regularized_mask())
    }

    fn sigma(&self, a: f64) -> f64 {
        (a * a + self.eps * self.eps).sqrt()
    }

    fn dsigma(&self, a: f64) -> f64 {
        a / (a * a + self.eps * self.eps).sqrt()
    }
}

/// Per-layer slices `(W, b)` into a flat parameter vector.
fn layers<'a>(spec: &NetworkSpec, params: &'a [f64]) -> [(&'a [f64], &'a [f64]); 3] {
    let off = spec.layout.offsets();
    let bl = &spec.layout.blocks;
    std::array::from_fn(|j| {
        let (w, b) = (2 * j, 2 * j + 1);
        (&params[off[w]..off[w] + bl[w].len()], &params[off[b]..off[b] + bl[b].len()])
    })
}

/// Activations of one sample: pre-activations of layers 0 and 1 and the output.
struct Pass {
    pre: [Vec<f64>; 2],
    act: [Vec<f64>; 2],
    out: Vec<f64>,
}

fn affine(w: &[f64], b: &[f64], input: &[f64]) -> Vec<f64> {
    let cols = input.len();
    b.iter().enumerate().map(|(r, br)| br + w[r * cols..(r + 1) * cols].iter().zip(input).map(|(a, c)| a * c).sum::<f64>()).collect()
}

fn forward_one(spec: &NetworkSpec, ls: &[(&[f64], &[f64]); 3], x: &[f64]) -> Pass {
    let a0 = affine(ls[0].0, ls[0].1, x);
    let h0: Vec<f64> = a0.iter().map(|a| spec.sigma(*a)).collect();
    let a1 = affine(ls[1].0, ls[1].1, &h0);
    let h1: Vec<f64> = a1.iter().map(|a| spec.sigma(*a)).collect();
    let out = affine(ls[2].0, ls[2].1, &h1);
    Pass { pre: [a0, a1], act: [h0, h1], out }
}

fn check_params(spec: &NetworkSpec, params: &[f64]) -> Result<()> {
    check_len(spec.n_params(), params.len()).map_err(|_| {
        Error::Layout(format!("expected {} network parameters, got {}", spec.n_params(), params.len()))
    })
}

/// Predictions for scalar inputs (`D0 = D3 = 1`), one per entry of `x`.
pub fn nn_forward(params: &[f64], spec: &NetworkSpec, x: &[f64]) -> Result<Vec<f64>> {
    check_params(spec, params)?;
    let d0 = spec.dims[0];
    if d0 == 0 || !x.len().is_multiple_of(d0) {
        return Err(Error::Layout(format!("input length {} is not a multiple of {d0}", x.len())));
    }
    let ls = layers(spec, params);
    Ok(x.chunks(d0).flat_map(|xi| forward_one(spec, &ls, xi).out).collect())
}

/// Smoothed absolute loss and its gradient by reverse-mode differentiation.
pub fn nn_value_grad(params: &[f64], spec: &NetworkSpec, data: &RegressionDataset) -> Result<(f64, Vec<f64>)> {
    check_params(spec, params)?;
    let ls = layers(spec, params);
    let off = spec.layout.offsets();
    let [d0, d1, d2, d3] = spec.dims;
    if d0 != 1 || d3 != 1 {
        return Err(Error::Layout("regression data needs scalar input and output".into()));
    }
    let mut grad = vec![0.0; params.len()];
    let mut value = 0.0;
    let eps2 = spec.eps * spec.eps;
    for (xi, yi) in data.x.iter().zip(&data.y) {
        let p = forward_one(spec, &ls, std::slice::from_ref(xi));
        let r = p.out[0] - yi;
        let loss = (r * r + eps2).sqrt();
        value += loss;
        let d_out = r / loss;
        // layer 2
        for c in 0..d2 {
            grad[off[4] + c] += d_out * p.act[1][c];
        }
        grad[off[5]] += d_out;
        let d_a1: Vec<f64> = (0..d2).map(|c| d_out * ls[2].0[c] * spec.dsigma(p.pre[1][c])).collect();
        // layer 1
        for r1 in 0..d2 {
            for c in 0..d1 {
                grad[off[2] + r1 * d1 + c] += d_a1[r1] * p.act[0][c];
            }
            grad[off[3] + r1] += d_a1[r1];
        }
        let d_a0: Vec<f64> = (0..d1)
            .map(|c| (0..d2).map(|r1| ls[1].0[r1 * d1 + c] * d_a1[r1]).sum::<f64>() * spec.dsigma(p.pre[0][c]))
            .collect();
        // layer 0
        for r0 in 0..d1 {
            grad[off[0] + r0] += d_a0[r0] * xi;
            grad[off[1] + r0] += d_a0[r0];
        }
    }
    Ok((value, grad))
}

/// Gaussian weights with std 0.5, zero biases, from a stream independent of the data.
pub fn init_params(spec: &NetworkSpec, seed: u64) -> Vec<f64> {
    let mut rng = Rng::derived(seed, INIT_STREAM);
    let mask = spec.layout.regularized_mask();
    mask.iter().map(|&w| if w { INIT_STD * rng.normal() } else { 0.0 }).collect()
}

/// Fraction of regularized coordinates with `|x_i| <= tol`.
pub fn sparsity_level(x: &[f64], layout: &BlockLayout, tol: f64) -> f64 {
    let mask = layout.regularized_mask();
    let total = mask.iter().filter(|m| **m).count();
    if total == 0 {
        return 1.0;
    }
    let zeros = x.iter().zip(&mask).filter(|(v, m)| **m && v.abs() <= tol).count();
    zeros as f64 / total as f64
}

/// The smooth part of the network regression as an optimization oracle.
#[derive(Debug, Clone)]
pub struct NetworkProblem {
    pub spec: NetworkSpec,
    pub data: RegressionDataset,
}

impl NetworkProblem {
    pub fn new(spec: NetworkSpec, data: RegressionDataset) -> Self {
        Self { spec, data }
    }

    /// The default instance for `seed`: data, regularizer and initial point.
    pub fn seeded(seed: u64) -> (Self, NonsmoothSpec, Vec<f64>) {
        let spec = NetworkSpec::default();
        let g = spec.regularizer();
        let x0 = init_params(&spec, seed);
        (Self::new(spec, generate_data(seed)), g, x0)
    }
}

impl SmoothObjective for NetworkProblem {
    fn dim(&self) -> usize {
        self.spec.n_params()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value_grad(x).0
    }

    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        nn_value_grad(x, &self.spec, &self.data).expect("parameter vector matches the network layout")
    }
}
