//! Packing of named matrix blocks into one flat parameter vector.
//!
//! Blocks are laid out in layout order, row-major within each block, so the
//! coordinates a proximal mapping acts on are fixed by the layout alone.

use crate::error::{Error, Result};
use crate::vector::ParamVector;

/// Dense row-major matrix used for packed blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Layout(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Column vector.
    pub fn column(data: Vec<f64>) -> Self {
        Self { rows: data.len(), cols: 1, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Whether the nonsmooth term acts on this block.
    pub regularized: bool,
}

impl BlockSpec {
    pub fn new(name: impl Into<String>, rows: usize, cols: usize, regularized: bool) -> Self {
        Self { name: name.into(), rows, cols, regularized }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BlockLayout {
    pub blocks: Vec<BlockSpec>,
}

impl BlockLayout {
    pub fn new(blocks: Vec<BlockSpec>) -> Self {
        Self { blocks }
    }

    /// Total number of packed coordinates.
    pub fn total(&self) -> usize {
        self.blocks.iter().map(BlockSpec::len).sum()
    }

    /// Start offset of every block in the packed vector.
    pub fn offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.blocks
            .iter()
            .map(|b| {
                let o = off;
                off += b.len();
                o
            })
            .collect()
    }

    /// `true` for coordinates that belong to a regularized block.
    pub fn regularized_mask(&self) -> Vec<bool> {
        self.blocks
            .iter()
            .flat_map(|b| std::iter::repeat_n(b.regularized, b.len()))
            .collect()
    }

    pub fn find(&self, name: &str) -> Option<(usize, &BlockSpec)> {
        let offsets = self.offsets();
        self.blocks.iter().enumerate().find(|(_, b)| b.name == name).map(|(i, b)| (offsets[i], b))
    }
}

pub fn pack(blocks: &[Matrix], layout: &BlockLayout) -> Result<ParamVector> {
    if blocks.len() != layout.blocks.len() {
        return Err(Error::Layout(format!(
            "layout has {} blocks, got {}",
            layout.blocks.len(),
            blocks.len()
        )));
    }
    let mut out = Vec::with_capacity(layout.total());
    for (m, spec) in blocks.iter().zip(&layout.blocks) {
        if m.rows != spec.rows || m.cols != spec.cols {
            return Err(Error::Layout(format!(
                "block `{}` expects {}x{}, got {}x{}",
                spec.name, spec.rows, spec.cols, m.rows, m.cols
            )));
        }
        out.extend_from_slice(&m.data);
    }
    ParamVector::new(out)
}

pub fn unpack(v: &[f64], layout: &BlockLayout) -> Result<Vec<Matrix>> {
    if v.len() != layout.total() {
        return Err(Error::Layout(format!(
            "vector of length {} does not match layout total {}",
            v.len(),
            layout.total()
        )));
    }
    let mut off = 0;
    Ok(layout
        .blocks
        .iter()
        .map(|spec| {
            let m = Matrix { rows: spec.rows, cols: spec.cols, data: v[off..off + spec.len()].to_vec() };
            off += spec.len();
            m
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalars() -> BlockLayout {
        BlockLayout::new(vec![BlockSpec::new("a", 1, 1, true), BlockSpec::new("b", 1, 1, false)])
    }

    #[test]
    fn two_scalar_blocks() {
        let l = scalars();
        let v = pack(&[Matrix::column(vec![2.0]), Matrix::column(vec![3.0])], &l).unwrap();
        assert_eq!(v.as_slice(), &[2.0, 3.0]);
        let blocks = unpack(&v, &l).unwrap();
        assert_eq!(blocks[0].data, vec![2.0]);
        assert_eq!(blocks[1].data, vec![3.0]);
        assert_eq!(l.regularized_mask(), vec![true, false]);
    }

    #[test]
    fn empty_layout() {
        let l = BlockLayout::default();
        assert_eq!(pack(&[], &l).unwrap().len(), 0);
    }

    #[test]
    fn shape_and_length_errors() {
        let l = scalars();
        assert!(matches!(
            pack(&[Matrix::zeros(2, 1), Matrix::zeros(1, 1)], &l),
            Err(Error::Layout(_))
        ));
        assert!(matches!(unpack(&[1.0, 2.0, 3.0], &l), Err(Error::Layout(_))));
        assert!(Matrix::new(2, 2, vec![1.0]).is_err());
    }
}
