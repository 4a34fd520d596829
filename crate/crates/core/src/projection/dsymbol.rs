use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::layout;
use crate::C64;

/// One monomial `coeff · Π_a (i k_a)^{exponents[a]}` of a matrix symbol.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DTerm {
    pub exponents: Vec<u32>,
    /// Row-major `rows × cols`.
    pub coeff: Vec<C64>,
}

/// Polynomial matrix symbol `D(ik)` mapping potential components to field components.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DSymbol {
    rows: usize,
    cols: usize,
    dim: usize,
    terms: Vec<DTerm>,
}

fn unit_entries(rows: usize, cols: usize, entries: &[(usize, usize, C64)]) -> Vec<C64> {
    let mut c = alloc::vec![C64::new(0.0, 0.0); rows * cols];
    for &(i, j, v) in entries {
        c[i * cols + j] += v;
    }
    c
}

fn axis_exponent(dim: usize, axis: usize) -> Vec<u32> {
    let mut e = alloc::vec![0; dim];
    e[axis] = 1;
    e
}

impl DSymbol {
    pub fn new(dim: usize, rows: usize, cols: usize, terms: Vec<DTerm>) -> Result<DSymbol> {
        for t in &terms {
            if t.exponents.len() != dim || t.coeff.len() != rows * cols {
                return Err(Error::Shape(format!(
                    "term with {} exponents and {} coefficients for a {rows}x{cols} symbol in {dim}-d",
                    t.exponents.len(),
                    t.coeff.len()
                )));
            }
        }
        Ok(DSymbol { rows, cols, dim, terms })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[DTerm] {
        &self.terms
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim {
            return Err(Error::UnsupportedDimension { expected: self.dim, found: dim });
        }
        Ok(())
    }

    /// True when every term has the same total degree, so the projection is degree-0 homogeneous.
    pub fn is_homogeneous(&self) -> bool {
        let mut deg = self.terms.iter().map(|t| t.exponents.iter().sum::<u32>());
        match deg.next() {
            None => true,
            Some(first) => deg.all(|d| d == first),
        }
    }

    /// `D(ik)`, row-major.
    pub fn evaluate(&self, k: &[f64]) -> Result<Vec<C64>> {
        self.check_dim(k.len())?;
        let mut out = alloc::vec![C64::new(0.0, 0.0); self.rows * self.cols];
        for t in &self.terms {
            let mut w = C64::new(1.0, 0.0);
            for (a, &e) in t.exponents.iter().enumerate() {
                for _ in 0..e {
                    w *= C64::new(0.0, k[a]);
                }
            }
            for (o, c) in out.iter_mut().zip(&t.coeff) {
                *o += c * w;
            }
        }
        Ok(out)
    }

    /// `∇φ` for a scalar potential.
    pub fn gradient(dim: usize) -> DSymbol {
        let terms = (0..dim)
            .map(|a| DTerm { exponents: axis_exponent(dim, a), coeff: unit_entries(dim, 1, &[(a, 0, C64::new(1.0, 0.0))]) })
            .collect();
        DSymbol { rows: dim, cols: 1, dim, terms }
    }

    /// `[∇u + (∇u)ᵀ]/2` in the orthonormal symmetric basis.
    pub fn symmetrized_gradient(dim: usize) -> DSymbol {
        let pairs = layout::sym_pairs(dim);
        let rows = pairs.len();
        let terms = (0..dim)
            .map(|a| {
                let mut entries = Vec::new();
                for (c, &(i, j)) in pairs.iter().enumerate() {
                    if i == j {
                        if a == i {
                            entries.push((c, i, C64::new(1.0, 0.0)));
                        }
                    } else {
                        // √2 · ½(∂_i u_j + ∂_j u_i)
                        if a == i {
                            entries.push((c, j, C64::new(FRAC_1_SQRT_2, 0.0)));
                        }
                        if a == j {
                            entries.push((c, i, C64::new(FRAC_1_SQRT_2, 0.0)));
                        }
                    }
                }
                DTerm { exponents: axis_exponent(dim, a), coeff: unit_entries(rows, dim, &entries) }
            })
            .collect();
        DSymbol { rows, cols: dim, dim, terms }
    }

    /// `(−∂₂ψ, ∂₁ψ)`: divergence-free fields in two dimensions.
    pub fn rotated_gradient() -> DSymbol {
        let one = C64::new(1.0, 0.0);
        DSymbol {
            rows: 2,
            cols: 1,
            dim: 2,
            terms: alloc::vec![
                DTerm { exponents: alloc::vec![1, 0], coeff: unit_entries(2, 1, &[(1, 0, one)]) },
                DTerm { exponents: alloc::vec![0, 1], coeff: unit_entries(2, 1, &[(0, 0, -one)]) },
            ],
        }
    }

    /// `∇ × a`: divergence-free fields in three dimensions.
    pub fn curl() -> DSymbol {
        let one = C64::new(1.0, 0.0);
        // (∇×a)_i = ε_ijk ∂_j a_k
        let mut terms = Vec::new();
        for j in 0..3 {
            let mut entries = Vec::new();
            for i in 0..3 {
                for k in 0..3 {
                    let s = levi_civita(i, j, k);
                    if s != 0 {
                        entries.push((i, k, one * s as f64));
                    }
                }
            }
            terms.push(DTerm { exponents: axis_exponent(3, j), coeff: unit_entries(3, 3, &entries) });
        }
        DSymbol { rows: 3, cols: 3, dim: 3, terms }
    }

    /// Divergence-free potential form for the dimension: rotated gradient or curl.
    pub fn divergence_free(dim: usize) -> DSymbol {
        if dim == 2 {
            DSymbol::rotated_gradient()
        } else {
            DSymbol::curl()
        }
    }

    /// `(∇w, w)` with `(∇w)_ij = ∂_i w_j`, on a (full matrix, vector) layout.
    pub fn gradient_pair(dim: usize) -> DSymbol {
        let rows = dim * dim + dim;
        let one = C64::new(1.0, 0.0);
        let mut terms: Vec<DTerm> = (0..dim)
            .map(|a| {
                let entries: Vec<(usize, usize, C64)> = (0..dim).map(|j| (a * dim + j, j, one)).collect();
                DTerm { exponents: axis_exponent(dim, a), coeff: unit_entries(rows, dim, &entries) }
            })
            .collect();
        let entries: Vec<(usize, usize, C64)> = (0..dim).map(|j| (dim * dim + j, j, one)).collect();
        terms.push(DTerm { exponents: alloc::vec![0; dim], coeff: unit_entries(rows, dim, &entries) });
        DSymbol { rows, cols: dim, dim, terms }
    }

    /// Block-diagonal combination acting on concatenated potentials.
    pub fn block_diag(parts: &[DSymbol]) -> Result<DSymbol> {
        let dim = parts.first().map(|p| p.dim).unwrap_or(2);
        if parts.iter().any(|p| p.dim != dim) {
            return Err(Error::Shape(format!("symbols of different dimension")));
        }
        let rows: usize = parts.iter().map(|p| p.rows).sum();
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut terms = Vec::new();
        let (mut ro, mut co) = (0, 0);
        for p in parts {
            for t in &p.terms {
                let mut coeff = alloc::vec![C64::new(0.0, 0.0); rows * cols];
                for i in 0..p.rows {
                    for j in 0..p.cols {
                        coeff[(ro + i) * cols + co + j] = t.coeff[i * p.cols + j];
                    }
                }
                terms.push(DTerm { exponents: t.exponents.clone(), coeff });
            }
            ro += p.rows;
            co += p.cols;
        }
        Ok(DSymbol { rows, cols, dim, terms })
    }
}

fn levi_civita(i: usize, j: usize, k: usize) -> i32 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}
