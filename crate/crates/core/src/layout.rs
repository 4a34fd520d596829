use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::C64;

/// Kind of one block of the per-point value space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BlockKind {
    Scalar,
    Vector,
    SymMatrix,
    FullMatrix,
}

impl BlockKind {
    pub fn size(self, dim: usize) -> usize {
        match self {
            BlockKind::Scalar => 1,
            BlockKind::Vector => dim,
            BlockKind::SymMatrix => dim * (dim + 1) / 2,
            BlockKind::FullMatrix => dim * dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Block {
    pub kind: BlockKind,
    pub label: String,
}

impl Block {
    pub fn new(kind: BlockKind, label: &str) -> Block {
        Block { kind, label: String::from(label) }
    }
}

/// Ordered blocks making up the `m` components stored at each point.
///
/// Symmetric matrices use the orthonormal (Mandel) basis: diagonal entries first, then off-diagonal
/// entries stored as `√2·a_ij`, so the plain component dot product is the Frobenius product.
/// Full matrices are row-major with the first index belonging to the gradient. Every component
/// therefore carries unit weight in the inner product.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Layout {
    dim: usize,
    blocks: Vec<Block>,
}

impl Layout {
    pub fn new(dim: usize, blocks: Vec<Block>) -> Result<Layout> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension { expected: 3, found: dim });
        }
        if blocks.is_empty() {
            return Err(Error::Shape(String::from("layout needs at least one block")));
        }
        Ok(Layout { dim, blocks })
    }

    pub fn single(dim: usize, kind: BlockKind, label: &str) -> Layout {
        Layout { dim, blocks: alloc::vec![Block::new(kind, label)] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn m(&self) -> usize {
        self.blocks.iter().map(|b| b.kind.size(self.dim)).sum()
    }

    pub fn block_size(&self, block: usize) -> usize {
        self.blocks[block].kind.size(self.dim)
    }

    pub fn offset(&self, block: usize) -> usize {
        self.blocks[..block].iter().map(|b| b.kind.size(self.dim)).sum()
    }

    /// Component range of `block`.
    pub fn range(&self, block: usize) -> core::ops::Range<usize> {
        let o = self.offset(block);
        o..o + self.block_size(block)
    }

    /// Inner-product weights, one per component.
    pub fn weights(&self) -> Vec<f64> {
        alloc::vec![1.0; self.m()]
    }

    /// Concatenation of two layouts of the same dimension.
    pub fn concat(&self, other: &Layout) -> Result<Layout> {
        if self.dim != other.dim {
            return Err(Error::Shape(String::from("layouts of different dimension")));
        }
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        Ok(Layout { dim: self.dim, blocks })
    }

    pub fn kinds(&self) -> Vec<BlockKind> {
        self.blocks.iter().map(|b| b.kind).collect()
    }
}

/// Index pairs `(i, j)` of the symmetric-matrix basis in storage order.
pub fn sym_pairs(dim: usize) -> &'static [(usize, usize)] {
    match dim {
        2 => &[(0, 0), (1, 1), (0, 1)],
        _ => &[(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)],
    }
}

/// Symmetric-block coefficients of a `dim × dim` row-major matrix (its symmetric part).
pub fn sym_from_matrix(dim: usize, a: &[C64], out: &mut [C64]) {
    for (c, &(i, j)) in sym_pairs(dim).iter().enumerate() {
        out[c] = if i == j {
            a[i * dim + i]
        } else {
            (a[i * dim + j] + a[j * dim + i]) * (0.5 * SQRT_2)
        };
    }
}

/// Row-major `dim × dim` matrix of symmetric-block coefficients.
pub fn matrix_from_sym(dim: usize, v: &[C64], out: &mut [C64]) {
    for (c, &(i, j)) in sym_pairs(dim).iter().enumerate() {
        if i == j {
            out[i * dim + i] = v[c];
        } else {
            let a = v[c] / SQRT_2;
            out[i * dim + j] = a;
            out[j * dim + i] = a;
        }
    }
}

/// Coefficients of the identity matrix in the symmetric basis.
pub fn sym_identity(dim: usize) -> Vec<C64> {
    let mut v = alloc::vec![C64::new(0.0, 0.0); dim * (dim + 1) / 2];
    for c in v.iter_mut().take(dim) {
        *c = C64::new(1.0, 0.0);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_add_up() {
        let l = Layout::new(
            3,
            alloc::vec![
                Block::new(BlockKind::SymMatrix, "s"),
                Block::new(BlockKind::Vector, "v"),
                Block::new(BlockKind::FullMatrix, "m"),
                Block::new(BlockKind::Scalar, "t"),
            ],
        )
        .unwrap();
        assert_eq!(l.m(), 6 + 3 + 9 + 1);
        assert_eq!(l.range(2), 9..18);
    }

    #[test]
    fn sym_basis_preserves_frobenius_product() {
        for dim in [2, 3] {
            let a: Vec<C64> = (0..dim * dim).map(|t| C64::new(t as f64 + 1.0, 0.5 * t as f64)).collect();
            let mut sa = alloc::vec![C64::new(0.0, 0.0); dim * dim];
            for i in 0..dim {
                for j in 0..dim {
                    sa[i * dim + j] = (a[i * dim + j] + a[j * dim + i]) * 0.5;
                }
            }
            let frob: C64 = sa.iter().map(|x| x.conj() * x).sum();
            let mut v = alloc::vec![C64::new(0.0, 0.0); dim * (dim + 1) / 2];
            sym_from_matrix(dim, &a, &mut v);
            let dot: C64 = v.iter().map(|x| x.conj() * x).sum();
            assert!((frob - dot).norm() < 1e-12);
            let mut back = alloc::vec![C64::new(0.0, 0.0); dim * dim];
            matrix_from_sym(dim, &v, &mut back);
            for (x, y) in back.iter().zip(&sa) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }
}
