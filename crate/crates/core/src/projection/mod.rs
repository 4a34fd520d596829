//! Fourier-space projections `Γ₁(k)` onto the admissible fields of each theory.
//!
//! Every [`ProjectionSpec`] evaluates to the zero matrix at `k = 0`; the mean is handled separately
//! by the periodic cell solver.

mod dsymbol;
mod verify;

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;
#[allow(unused_imports)]
use num_traits::Float;

pub use dsymbol::{DSymbol, DTerm};
pub use verify::{verify_projection, verify_symbol, VerifyReport};

use crate::error::{Error, Result};
use crate::layout::{self, BlockKind};
use crate::linalg;
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Description of a projection symbol `Γ₁(k)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields))]
pub enum ProjectionSpec {
    /// `k⊗k/k²` on a vector block: gradients of scalar potentials.
    Grad,
    /// `I − k⊗k/k²` on a vector block: divergence-free fields.
    DivFree,
    /// Projection onto symmetrized gradients `a⊗k + k⊗a` on a symmetric-matrix block.
    Elastic,
    /// `(ik, 1)(−ik, 1)ᵀ/(1+k²)` per column on a (full matrix, vector) pair: the pairs `(∇w, w)`.
    Z,
    /// Zero on one block: the block carries only a constant.
    Zero { block: BlockKind },
    /// Block-diagonal assembly.
    Block { children: Vec<ProjectionSpec> },
    /// `I − Γ` for the child `Γ`.
    Complement { child: Box<ProjectionSpec> },
    /// `D(ik) [D(ik)†D(ik)]⁺ D(ik)†` from a differential-operator symbol.
    FromD { symbol: DSymbol },
}

impl ProjectionSpec {
    pub fn block(children: Vec<ProjectionSpec>) -> ProjectionSpec {
        ProjectionSpec::Block { children }
    }

    pub fn complement(child: ProjectionSpec) -> ProjectionSpec {
        ProjectionSpec::Complement { child: Box::new(child) }
    }

    pub fn zero(block: BlockKind) -> ProjectionSpec {
        ProjectionSpec::Zero { block }
    }

    pub fn from_d(symbol: DSymbol) -> ProjectionSpec {
        ProjectionSpec::FromD { symbol }
    }

    /// Matrix size in dimension `dim`.
    pub fn size(&self, dim: usize) -> usize {
        match self {
            ProjectionSpec::Grad | ProjectionSpec::DivFree => dim,
            ProjectionSpec::Elastic => dim * (dim + 1) / 2,
            ProjectionSpec::Z => dim * dim + dim,
            ProjectionSpec::Zero { block } => block.size(dim),
            ProjectionSpec::Block { children } => children.iter().map(|c| c.size(dim)).sum(),
            ProjectionSpec::Complement { child } => child.size(dim),
            ProjectionSpec::FromD { symbol } => symbol.rows(),
        }
    }

    /// Block kinds this projection acts on, when the kind alone determines them.
    pub fn block_kinds(&self) -> Option<Vec<BlockKind>> {
        match self {
            ProjectionSpec::Grad | ProjectionSpec::DivFree => Some(alloc::vec![BlockKind::Vector]),
            ProjectionSpec::Elastic => Some(alloc::vec![BlockKind::SymMatrix]),
            ProjectionSpec::Z => Some(alloc::vec![BlockKind::FullMatrix, BlockKind::Vector]),
            ProjectionSpec::Zero { block } => Some(alloc::vec![*block]),
            ProjectionSpec::Block { children } => {
                let mut out = Vec::new();
                for c in children {
                    out.extend(c.block_kinds()?);
                }
                Some(out)
            }
            ProjectionSpec::Complement { child } => child.block_kinds(),
            ProjectionSpec::FromD { .. } => None,
        }
    }

    /// Checks that this projection acts on `layout`.
    pub fn check_layout(&self, layout: &layout::Layout) -> Result<()> {
        let dim = layout.dim();
        if let ProjectionSpec::FromD { symbol } = self {
            symbol.check_dim(dim)?;
        }
        if let Some(kinds) = self.block_kinds() {
            if kinds != layout.kinds() {
                return Err(Error::Shape(format!(
                    "projection acts on blocks {:?}, layout has {:?}",
                    kinds,
                    layout.kinds()
                )));
            }
        } else if self.size(dim) != layout.m() {
            return Err(Error::Shape(format!(
                "projection of size {} on a layout of {} components",
                self.size(dim),
                layout.m()
            )));
        }
        Ok(())
    }

    /// True when `Γ(λk) = Γ(k)` for all `λ > 0`.
    pub fn is_homogeneous(&self) -> bool {
        match self {
            ProjectionSpec::Z => false,
            ProjectionSpec::Block { children } => children.iter().all(|c| c.is_homogeneous()),
            ProjectionSpec::Complement { child } => child.is_homogeneous(),
            ProjectionSpec::FromD { symbol } => symbol.is_homogeneous(),
            _ => true,
        }
    }

    /// Row-major `Γ₁(k)`; zero at `k = 0`.
    pub fn evaluate(&self, k: &[f64]) -> Result<Vec<C64>> {
        let m = self.size(k.len());
        let mut out = alloc::vec![ZERO; m * m];
        if !is_zero(k) {
            self.write(k, &mut out, m, 0)?;
        }
        Ok(out)
    }

    /// Writes the symbol into rows and columns `off..off+size` of a matrix with row stride `ld`.
    fn write(&self, k: &[f64], out: &mut [C64], ld: usize, off: usize) -> Result<()> {
        let dim = k.len();
        let m = self.size(dim);
        match self {
            ProjectionSpec::Block { children } => {
                let mut o = off;
                for c in children {
                    c.write(k, out, ld, o)?;
                    o += c.size(dim);
                }
            }
            ProjectionSpec::Complement { child } => {
                child.write(k, out, ld, off)?;
                for i in 0..m {
                    for j in 0..m {
                        let e = &mut out[(off + i) * ld + off + j];
                        *e = if i == j { C64::new(1.0, 0.0) - *e } else { -*e };
                    }
                }
            }
            ProjectionSpec::FromD { symbol } => {
                let g = gamma_from_d(symbol, k)?;
                for i in 0..m {
                    out[(off + i) * ld + off..(off + i) * ld + off + m].copy_from_slice(&g[i * m..(i + 1) * m]);
                }
            }
            ProjectionSpec::Zero { .. } => {}
            _ => {
                // Columns of the identity pushed through the fast path.
                let mut col = alloc::vec![ZERO; m];
                for j in 0..m {
                    col.iter_mut().for_each(|c| *c = ZERO);
                    col[j] = C64::new(1.0, 0.0);
                    self.apply_nonzero(k, &mut col)?;
                    for i in 0..m {
                        out[(off + i) * ld + off + j] = col[i];
                    }
                }
            }
        }
        Ok(())
    }

    /// `x ← Γ₁(k) x` in place; zero at `k = 0`.
    pub fn apply_at(&self, k: &[f64], x: &mut [C64]) -> Result<()> {
        if is_zero(k) {
            x.iter_mut().for_each(|v| *v = ZERO);
            return Ok(());
        }
        self.apply_nonzero(k, x)
    }

    fn apply_nonzero(&self, k: &[f64], x: &mut [C64]) -> Result<()> {
        let dim = k.len();
        match self {
            ProjectionSpec::Grad => {
                let kh = unit(k);
                let s = dot_real(&kh[..dim], x);
                for a in 0..dim {
                    x[a] = s * kh[a];
                }
            }
            ProjectionSpec::DivFree => {
                let kh = unit(k);
                let s = dot_real(&kh[..dim], x);
                for a in 0..dim {
                    x[a] -= s * kh[a];
                }
            }
            ProjectionSpec::Elastic => elastic_apply(k, x),
            ProjectionSpec::Z => z_apply(k, x),
            ProjectionSpec::Zero { .. } => x.iter_mut().for_each(|v| *v = ZERO),
            ProjectionSpec::Block { children } => {
                let mut o = 0;
                for c in children {
                    let s = c.size(dim);
                    c.apply_nonzero(k, &mut x[o..o + s])?;
                    o += s;
                }
            }
            ProjectionSpec::Complement { child } => {
                let m = x.len();
                let mut buf = [ZERO; 32];
                let mut heap;
                let y: &mut [C64] = if m <= 32 {
                    &mut buf[..m]
                } else {
                    heap = alloc::vec![ZERO; m];
                    &mut heap
                };
                y.copy_from_slice(x);
                child.apply_nonzero(k, y)?;
                for (a, b) in x.iter_mut().zip(y.iter()) {
                    *a -= b;
                }
            }
            ProjectionSpec::FromD { symbol } => {
                let m = x.len();
                let g = gamma_from_d(symbol, k)?;
                let mut y = alloc::vec![ZERO; m];
                linalg::mat_vec(m, m, &g, x, &mut y);
                x.copy_from_slice(&y);
            }
        }
        Ok(())
    }
}

fn is_zero(k: &[f64]) -> bool {
    k.iter().all(|&v| v == 0.0)
}

fn unit(k: &[f64]) -> [f64; 3] {
    let n = k.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = [0.0; 3];
    for (o, v) in out.iter_mut().zip(k) {
        *o = v / n;
    }
    out
}

fn dot_real(k: &[f64], x: &[C64]) -> C64 {
    k.iter().zip(x).fold(ZERO, |s, (a, b)| s + b * *a)
}

fn elastic_apply(k: &[f64], x: &mut [C64]) {
    let d = k.len();
    let kh = unit(k);
    let mut a = [ZERO; 9];
    layout::matrix_from_sym(d, x, &mut a[..d * d]);
    let mut ak = [ZERO; 3];
    for i in 0..d {
        ak[i] = dot_real(&kh[..d], &a[i * d..(i + 1) * d]);
    }
    let s = dot_real(&kh[..d], &ak[..d]);
    for (c, &(i, j)) in layout::sym_pairs(d).iter().enumerate() {
        let pij = ak[i] * kh[j] + ak[j] * kh[i] - s * (kh[i] * kh[j]);
        x[c] = if i == j { pij } else { pij * SQRT_2 };
    }
}

fn z_apply(k: &[f64], x: &mut [C64]) {
    let d = k.len();
    let k2: f64 = k.iter().map(|v| v * v).sum();
    let scale = 1.0 / (1.0 + k2);
    let i = C64::new(0.0, 1.0);
    for j in 0..d {
        // u = (ik, 1); coefficient u†y with y = (M_{·j}, v_j).
        let mut c = x[d * d + j];
        for a in 0..d {
            c -= i * k[a] * x[a * d + j];
        }
        c *= scale;
        for a in 0..d {
            x[a * d + j] = i * k[a] * c;
        }
        x[d * d + j] = c;
    }
}

/// `k⊗k/k²` (zero at `k = 0`).
pub fn gamma_grad(k: &[f64]) -> Vec<C64> {
    ProjectionSpec::Grad.evaluate(k).expect("closed form")
}

/// `I − k⊗k/k²` (zero at `k = 0`).
pub fn gamma_divfree(k: &[f64]) -> Vec<C64> {
    ProjectionSpec::DivFree.evaluate(k).expect("closed form")
}

/// Projection onto symmetrized gradients, in the orthonormal symmetric basis (zero at `k = 0`).
pub fn gamma_elastic(k: &[f64]) -> Vec<C64> {
    ProjectionSpec::Elastic.evaluate(k).expect("closed form")
}

/// `Z(k)` on a (full matrix, vector) layout, defined at every `k`; `Z(0)` keeps the vector block.
pub fn gamma_z(k: &[f64]) -> Vec<C64> {
    let d = k.len();
    let m = d * d + d;
    let mut out = alloc::vec![ZERO; m * m];
    let mut col = alloc::vec![ZERO; m];
    for j in 0..m {
        col.iter_mut().for_each(|c| *c = ZERO);
        col[j] = C64::new(1.0, 0.0);
        z_apply(k, &mut col);
        for i in 0..m {
            out[i * m + j] = col[i];
        }
    }
    out
}

/// `η(k)` with `η(k) a = k × a`; three dimensions only.
pub fn eta_cross(k: &[f64]) -> Result<Vec<C64>> {
    if k.len() != 3 {
        return Err(Error::UnsupportedDimension { expected: 3, found: k.len() });
    }
    let r = |v: f64| C64::new(v, 0.0);
    Ok(alloc::vec![
        r(0.0), r(-k[2]), r(k[1]),
        r(k[2]), r(0.0), r(-k[0]),
        r(-k[1]), r(k[0]), r(0.0),
    ])
}

/// `D(ik) F⁺ D(ik)†` with `F = D(ik)†D(ik)`; eigenvalues of `F` below `1e-12·‖F‖` count as zero.
pub fn gamma_from_d(symbol: &DSymbol, k: &[f64]) -> Result<Vec<C64>> {
    let (r, c) = (symbol.rows(), symbol.cols());
    if is_zero(k) {
        return Ok(alloc::vec![ZERO; r * r]);
    }
    let d = symbol.evaluate(k)?;
    let dh = linalg::adjoint(r, c, &d);
    let f = linalg::mat_mul(c, r, c, &dh, &d);
    let (fp, rank) = linalg::psd_pseudo_inverse(c, &f, 1e-12);
    if rank == 0 {
        return Err(Error::DegenerateSymbol { k: k.to_vec() });
    }
    let t = linalg::mat_mul(r, c, c, &d, &fp);
    Ok(linalg::mat_mul(r, c, r, &t, &dh))
}
