use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{Convention, Problem, ProblemMeta};
use crate::error::{Error, Result};
use crate::field::{Field, Space};
use crate::fourier::FourierBackend;
use crate::grid::Grid;
use crate::layout::{sym_identity, Block, BlockKind, Layout};
use crate::linalg;
use crate::operator::{LocalOperator, MatrixField, Penalty};
use crate::projection::ProjectionSpec;
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Penalty factor applied to the largest finite modulus when no penalty is given.
pub const DEFAULT_PENALTY_FACTOR: f64 = 1e8;

fn layout_of(dim: usize, blocks: &[(BlockKind, &str)]) -> Layout {
    Layout::new(dim, blocks.iter().map(|&(k, l)| Block::new(k, l)).collect()).expect("builder layouts are valid")
}

fn check_size(name: &str, f: &MatrixField, points: usize, rows: usize, cols: usize) -> Result<()> {
    if f.points() != points || f.rows() != rows || f.cols() != cols {
        return Err(Error::Shape(format!(
            "{name}: expected {rows}x{cols} matrices on {points} points, got {}x{} on {}",
            f.rows(),
            f.cols(),
            f.points()
        )));
    }
    Ok(())
}

/// Sum of the given real-space sources, or zero.
fn total_source(grid: &Grid, layout: &Layout, parts: &[Option<&Field>]) -> Result<Field> {
    let mut s = Field::zeros(grid, layout, Space::Real);
    for f in parts.iter().flatten() {
        s = s.add_scaled(C64::new(1.0, 0.0), &f.with_layout(layout)?)?;
    }
    Ok(s)
}

/// Assembles a block matrix field; `blocks[(r, c)]` entries that are `None` are zero.
fn assemble(sizes: &[usize], blocks: &[(usize, usize, &MatrixField, bool)]) -> Result<MatrixField> {
    let m: usize = sizes.iter().sum();
    let offsets: Vec<usize> = sizes.iter().scan(0, |o, s| {
        let r = *o;
        *o += s;
        Some(r)
    }).collect();
    let inputs: Vec<&MatrixField> = blocks.iter().map(|b| b.2).collect();
    MatrixField::zip_map(&inputs, m, m, |_, mats, out| {
        out.iter_mut().for_each(|v| *v = ZERO);
        for (b, mat) in blocks.iter().zip(mats) {
            let (r, c, f, transpose) = (b.0, b.1, b.2, b.3);
            let (ro, co) = (offsets[r], offsets[c]);
            let (fr, fc) = (f.rows(), f.cols());
            for i in 0..fr {
                for j in 0..fc {
                    let v = mat[i * fc + j];
                    if transpose {
                        out[(ro + j) * m + co + i] += v;
                    } else {
                        out[(ro + i) * m + co + j] += v;
                    }
                }
            }
        }
        Ok(())
    })
}

/// Hydrostatic projector on row-major `d × d` matrices: `M ↦ (tr M / d) I`.
pub fn trace_projector(dim: usize) -> Vec<C64> {
    let n = dim * dim;
    let mut p = alloc::vec![ZERO; n * n];
    for i in 0..dim {
        for j in 0..dim {
            p[(i * dim + i) * n + j * dim + j] = C64::new(1.0 / dim as f64, 0.0);
        }
    }
    p
}

/// Projector onto trace-free matrices: `I − trace_projector`.
pub fn tracefree_projector(dim: usize) -> Vec<C64> {
    linalg::sub(&linalg::identity(dim * dim), &trace_projector(dim))
}

/// Projector onto symmetric trace-free matrices.
pub fn symmetric_tracefree_projector(dim: usize) -> Vec<C64> {
    let n = dim * dim;
    let mut p = alloc::vec![ZERO; n * n];
    for i in 0..dim {
        for j in 0..dim {
            p[(i * dim + j) * n + i * dim + j] += C64::new(0.5, 0.0);
            p[(i * dim + j) * n + j * dim + i] += C64::new(0.5, 0.0);
        }
    }
    linalg::sub(&p, &trace_projector(dim))
}

/// Isotropic stiffness `d·κ·Λ_h + 2μ·Λ_dev` in the orthonormal symmetric basis.
pub fn isotropic_stiffness(dim: usize, kappa: C64, mu: C64) -> Vec<C64> {
    let n = dim * (dim + 1) / 2;
    let id = sym_identity(dim);
    let mut c = alloc::vec![ZERO; n * n];
    for a in 0..n {
        for b in 0..n {
            let hyd = id[a] * id[b] / dim as f64;
            let dev = if a == b { C64::new(1.0, 0.0) } else { ZERO } - hyd;
            c[a * n + b] = kappa * dim as f64 * hyd + mu * 2.0 * dev;
        }
    }
    c
}

/// Bulk modulus of a compliance tensor in the orthonormal symmetric basis: `1 / (Iᵀ S I)`.
pub fn bulk_modulus_from_compliance(dim: usize, s: &[C64]) -> C64 {
    let id = sym_identity(dim);
    let n = id.len();
    let mut si = alloc::vec![ZERO; n];
    linalg::mat_vec(n, n, s, &id, &mut si);
    let q: C64 = id.iter().zip(&si).map(|(a, b)| a * b).sum();
    C64::new(1.0, 0.0) / q
}

fn default_penalty(finite_max: f64, lambda: Option<f64>) -> f64 {
    lambda.unwrap_or(DEFAULT_PENALTY_FACTOR * finite_max.max(f64::MIN_POSITIVE))
}

/// Conductivity, dielectrics, diffusion: `J = σE − s` with `E` a gradient.
pub fn build_conductivity(grid: &Grid, sigma: MatrixField, source: Option<&Field>) -> Result<Problem> {
    let d = grid.dim();
    check_size("sigma", &sigma, grid.points(), d, d)?;
    let layout = layout_of(d, &[(BlockKind::Vector, "e")]);
    let op = LocalOperator::new(grid, &layout, sigma)?;
    let s = total_source(grid, &layout, &[source])?;
    Problem::new(ProjectionSpec::Grad, op, s, ProblemMeta::new("conductivity"))
}

/// Magnetostatics in induction form: `h' = μ⁻¹ b − (m + s_j)` with `b` divergence free.
pub fn build_magnetostatics(
    grid: &Grid,
    mu: MatrixField,
    magnetization: Option<&Field>,
    current_potential: Option<&Field>,
) -> Result<Problem> {
    let d = grid.dim();
    check_size("mu", &mu, grid.points(), d, d)?;
    let layout = layout_of(d, &[(BlockKind::Vector, "b")]);
    let inv = mu.map(d, d, |p, a, out| {
        let v = linalg::inverse(d, a).ok_or(Error::Singular { point: p, context: "permeability" })?;
        out.copy_from_slice(&v);
        Ok(())
    })?;
    let op = LocalOperator::new(grid, &layout, inv)?;
    let s = total_source(grid, &layout, &[magnetization, current_potential])?;
    Problem::new(ProjectionSpec::DivFree, op, s, ProblemMeta::new("magnetostatics"))
}

/// Coupled pair of conductivity-type equations (thermoelectricity, magnetoelectricity).
pub fn build_thermoelectric(
    grid: &Grid,
    l11: MatrixField,
    l12: MatrixField,
    l21: MatrixField,
    l22: MatrixField,
    source: Option<&Field>,
) -> Result<Problem> {
    let d = grid.dim();
    for (n, f) in [("l11", &l11), ("l12", &l12), ("l21", &l21), ("l22", &l22)] {
        check_size(n, f, grid.points(), d, d)?;
    }
    let layout = layout_of(d, &[(BlockKind::Vector, "e1"), (BlockKind::Vector, "e2")]);
    let l = assemble(&[d, d], &[(0, 0, &l11, false), (0, 1, &l12, false), (1, 0, &l21, false), (1, 1, &l22, false)])?;
    let op = LocalOperator::new(grid, &layout, l)?;
    let s = total_source(grid, &layout, &[source])?;
    Problem::new(ProjectionSpec::block(alloc::vec![ProjectionSpec::Grad, ProjectionSpec::Grad]), op, s, ProblemMeta::new("thermoelectric"))
}

/// Hermitian block operator of the doubled (Cherkaev–Gibiansky) form for `ε = ε' + iε''`,
/// and the `2n × n` map taking the source `s` to `s₀`.
pub(crate) fn cg_blocks(
    eps_real: &MatrixField,
    eps_imag: &MatrixField,
) -> Result<(MatrixField, MatrixField)> {
    let n = eps_real.rows();
    let mut worst: Option<(usize, f64)> = None;
    for (p, a) in eps_imag.distinct() {
        let lam = linalg::min_eigenvalue(n, a);
        if worst.map_or(true, |(_, w)| lam < w) {
            worst = Some((p, lam));
        }
    }
    if let Some((point, eigenvalue)) = worst {
        if !(eigenvalue > 0.0) {
            return Err(Error::NotPositiveDefinite { point, eigenvalue });
        }
    }
    let l = MatrixField::zip_map(&[eps_real, eps_imag], 2 * n, 2 * n, |p, mats, out| {
        let (e1, e2) = (linalg::hermitian_part(n, mats[0]), linalg::hermitian_part(n, mats[1]));
        let ainv = linalg::inverse(n, &e2).ok_or(Error::Singular { point: p, context: "imaginary part" })?;
        let ainv = linalg::hermitian_part(n, &ainv);
        let b = linalg::scale(&linalg::mat_mul(n, n, n, &ainv, &e1), I);
        let c = linalg::adjoint(n, n, &b);
        let dd = linalg::hermitian_part(n, &linalg::add(&e2, &linalg::mat_mul(n, n, n, &linalg::mat_mul(n, n, n, &e1, &ainv), &e1)));
        let m = 2 * n;
        for i in 0..n {
            for j in 0..n {
                out[i * m + j] = ainv[i * n + j];
                out[i * m + n + j] = b[i * n + j];
                out[(n + i) * m + j] = c[i * n + j];
                out[(n + i) * m + n + j] = dd[i * n + j];
            }
        }
        Ok(())
    })?;
    let q = MatrixField::zip_map(&[eps_real, eps_imag], 2 * n, n, |p, mats, out| {
        let (e1, e2) = (linalg::hermitian_part(n, mats[0]), linalg::hermitian_part(n, mats[1]));
        let ainv = linalg::inverse(n, &e2).ok_or(Error::Singular { point: p, context: "imaginary part" })?;
        let ea = linalg::scale(&linalg::mat_mul(n, n, n, &e1, &ainv), I);
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = -ainv[i * n + j];
                out[(n + i) * n + j] = ea[i * n + j] + if i == j { C64::new(1.0, 0.0) } else { ZERO };
            }
        }
        Ok(())
    })?;
    Ok((l, q))
}

/// `s₀(x) = Q(x) s(x)` for the doubled layout.
pub(crate) fn cg_source(q: &MatrixField, s: &Field, layout: &Layout) -> Result<Field> {
    let n = q.cols();
    let m = q.rows();
    let mut out = Field::zeros(s.grid(), layout, Space::Real);
    for p in 0..s.grid().points() {
        let mut y = alloc::vec![ZERO; m];
        linalg::mat_vec(m, n, q.at(p), s.at(p), &mut y);
        out.at_mut(p).copy_from_slice(&y);
    }
    Ok(out)
}

/// Quasistatic dielectric problem in the doubled Hermitian form. Fields are `(−i d', e)`;
/// `eps_imag` must be positive definite.
pub fn build_dielectric_cg(grid: &Grid, eps_real: MatrixField, eps_imag: MatrixField, source: Option<&Field>) -> Result<Problem> {
    let d = grid.dim();
    check_size("eps_real", &eps_real, grid.points(), d, d)?;
    check_size("eps_imag", &eps_imag, grid.points(), d, d)?;
    let base = layout_of(d, &[(BlockKind::Vector, "e")]);
    let layout = layout_of(d, &[(BlockKind::Vector, "minus-i-d"), (BlockKind::Vector, "e")]);
    let (l, q) = cg_blocks(&eps_real, &eps_imag)?;
    let s = total_source(grid, &base, &[source])?;
    let s0 = cg_source(&q, &s, &layout)?;
    let op = LocalOperator::new(grid, &layout, l)?;
    let mut meta = ProblemMeta::new("dielectric-cg");
    meta.convention = Some(Convention::Permittivity);
    Problem::new(ProjectionSpec::block(alloc::vec![ProjectionSpec::DivFree, ProjectionSpec::Grad]), op, s0, meta)
}

/// Antisymmetric part of a magnetotransport or convective-diffusion conductivity.
#[derive(Debug, Clone)]
pub enum Antisymmetric<'a> {
    /// `σ_a` given directly (only its antisymmetric part is used).
    Sigma(MatrixField),
    /// A divergence-free velocity `v`; `σ_a` is reconstructed with `∇·σ_a = v`.
    Velocity(&'a Field),
}

/// Spectral relative divergence `‖k·v̂‖ / ‖|k| v̂‖` of a real-space vector field.
pub fn relative_divergence(v: &Field, backend: &dyn FourierBackend) -> Result<f64> {
    let grid = v.grid();
    let d = grid.dim();
    let vh = v.to_fourier(backend)?;
    let (mut num, mut den) = (0.0, 0.0);
    for p in 0..grid.points() {
        let k = grid.wave_vector(p);
        let x = vh.at(p);
        let div: C64 = (0..d).map(|a| x[a] * k[a]).sum();
        let k2: f64 = k[..d].iter().map(|v| v * v).sum();
        num += div.norm_sqr();
        den += k2 * x.iter().map(|c| c.norm_sqr()).sum::<f64>();
    }
    Ok(if den == 0.0 { 0.0 } else { (num / den).sqrt() })
}

/// Antisymmetric matrix field with `Σ_i ∂_i σ_a,ij = v_j`, from a divergence-free, zero-mean `v`.
/// Two dimensions use `σ_a = ψR⊥`; three dimensions use `σ_a = η(w)` with `k·ŵ = 0`.
pub fn antisymmetric_from_velocity(v: &Field, backend: &dyn FourierBackend) -> Result<MatrixField> {
    let grid = v.grid();
    let d = grid.dim();
    if v.m() != d {
        return Err(Error::Shape(format!("velocity must have {d} components")));
    }
    let div = relative_divergence(v, backend)?;
    if div > 1e-10 {
        return Err(Error::Constraint { what: "velocity must be divergence free", residual: div });
    }
    let mean = v.average();
    let vnorm = v.norm();
    let mnorm = mean.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if mnorm > 1e-12 * vnorm.max(f64::MIN_POSITIVE) {
        return Err(Error::Constraint { what: "velocity must have zero cell mean", residual: mnorm / vnorm });
    }
    let real_input = v.max_imag() == 0.0;
    let vh = v.to_fourier(backend)?;
    let ncomp = if d == 2 { 1 } else { 3 };
    let pot_layout = if d == 2 {
        Layout::single(d, BlockKind::Scalar, "psi")
    } else {
        Layout::single(d, BlockKind::Vector, "w")
    };
    let mut pot = Field::zeros(grid, &pot_layout, Space::Fourier);
    for p in 1..grid.points() {
        let k = grid.wave_vector(p);
        let k2: f64 = k[..d].iter().map(|x| x * x).sum();
        if k2 == 0.0 {
            continue;
        }
        let x = vh.at(p);
        let out = pot.at_mut(p);
        if d == 2 {
            out[0] = (x[0] * k[1] - x[1] * k[0]) / (I * k2);
        } else {
            let c = [
                x[2] * k[1] - x[1] * k[2],
                x[0] * k[2] - x[2] * k[0],
                x[1] * k[0] - x[0] * k[1],
            ];
            for a in 0..3 {
                out[a] = I * c[a] / k2;
            }
        }
    }
    let mut pr = pot.to_real(backend)?;
    if real_input {
        for val in pr.values_mut() {
            *val = C64::new(val.re, 0.0);
        }
    }
    Ok(MatrixField::from_fn(grid.points(), d, d, |p, out| {
        let w = &pr.at(p)[..ncomp];
        if d == 2 {
            out.copy_from_slice(&[ZERO, -w[0], w[0], ZERO]);
        } else {
            out.copy_from_slice(&[ZERO, -w[2], w[1], w[2], ZERO, -w[0], -w[1], w[0], ZERO]);
        }
    }))
}

/// Magnetotransport or convective diffusion in the doubled Hermitian form with
/// `L = [[σ_s⁻¹, −σ_s⁻¹σ_a], [σ_aσ_s⁻¹, σ_s − σ_aσ_s⁻¹σ_a]]`.
pub fn build_magnetotransport(
    grid: &Grid,
    sigma_s: MatrixField,
    antisymmetric: Antisymmetric<'_>,
    source: Option<&Field>,
    backend: &dyn FourierBackend,
) -> Result<Problem> {
    let d = grid.dim();
    check_size("sigma_s", &sigma_s, grid.points(), d, d)?;
    let sigma_a = match antisymmetric {
        Antisymmetric::Sigma(a) => {
            check_size("sigma_a", &a, grid.points(), d, d)?;
            a.map(d, d, |_, m, out| {
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] = (m[i * d + j] - m[j * d + i]) * 0.5;
                    }
                }
                Ok(())
            })?
        }
        Antisymmetric::Velocity(v) => antisymmetric_from_velocity(v, backend)?,
    };
    let sym = sigma_s.map(d, d, |_, m, out| {
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = (m[i * d + j] + m[j * d + i]) * 0.5;
            }
        }
        Ok(())
    })?;
    // ε = iσ: ε' = iσ_a, ε'' = σ_s.
    let eps_real = sigma_a.map(d, d, |_, m, out| {
        for (o, v) in out.iter_mut().zip(m) {
            *o = v * I;
        }
        Ok(())
    })?;
    let base = layout_of(d, &[(BlockKind::Vector, "e")]);
    let layout = layout_of(d, &[(BlockKind::Vector, "j"), (BlockKind::Vector, "e")]);
    let (l, q) = cg_blocks(&eps_real, &sym)?;
    // The doubled blocks are real for real σ; drop rounding residue in the imaginary parts.
    let l = l.map(2 * d, 2 * d, |_, m, out| {
        for (o, v) in out.iter_mut().zip(m) {
            *o = if v.im.abs() <= 1e-15 * v.norm().max(1.0) { C64::new(v.re, 0.0) } else { *v };
        }
        Ok(())
    })?;
    let s = total_source(grid, &base, &[source])?;
    let s0 = cg_source(&q, &s, &layout)?;
    let op = LocalOperator::new(grid, &layout, l)?;
    let mut meta = ProblemMeta::new("magnetotransport");
    meta.convention = Some(Convention::Conductivity);
    Problem::new(ProjectionSpec::block(alloc::vec![ProjectionSpec::DivFree, ProjectionSpec::Grad]), op, s0, meta)
}

/// Linear elasticity `σ' = C ε − s` on symmetric matrices, `s = p_e + s_f`.
pub fn build_elasticity(
    grid: &Grid,
    stiffness: MatrixField,
    body_source: Option<&Field>,
    polarization: Option<&Field>,
) -> Result<Problem> {
    let d = grid.dim();
    let n = d * (d + 1) / 2;
    check_size("stiffness", &stiffness, grid.points(), n, n)?;
    let layout = layout_of(d, &[(BlockKind::SymMatrix, "strain")]);
    let op = LocalOperator::new(grid, &layout, stiffness)?;
    let s = total_source(grid, &layout, &[body_source, polarization])?;
    Problem::new(ProjectionSpec::Elastic, op, s, ProblemMeta::new("elasticity"))
}

/// Compliance-form elasticity: stress is divergence free, strain a symmetrized gradient.
pub fn build_compliance_elasticity(grid: &Grid, compliance: MatrixField, source: Option<&Field>) -> Result<Problem> {
    let d = grid.dim();
    let n = d * (d + 1) / 2;
    check_size("compliance", &compliance, grid.points(), n, n)?;
    let layout = layout_of(d, &[(BlockKind::SymMatrix, "stress")]);
    let op = LocalOperator::new(grid, &layout, compliance)?;
    let s = total_source(grid, &layout, &[source])?;
    Problem::new(ProjectionSpec::complement(ProjectionSpec::Elastic), op, s, ProblemMeta::new("compliance-elasticity"))
}

/// Saint-Venant torsion and antiplane shear: conductivity form with
/// `s = L (τx₂, −τx₁) + s'`, coordinates measured from the cell center.
pub fn build_torsion(
    grid: &Grid,
    c1313: MatrixField,
    c1323: MatrixField,
    c2323: MatrixField,
    tau: f64,
    s_prime: Option<&Field>,
) -> Result<Problem> {
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension { expected: 2, found: grid.dim() });
    }
    let pts = grid.points();
    for (name, f) in [("c1313", &c1313), ("c1323", &c1323), ("c2323", &c2323)] {
        check_size(name, f, pts, 1, 1)?;
    }
    let l = MatrixField::zip_map(&[&c1313, &c1323, &c2323], 2, 2, |_, m, out| {
        out.copy_from_slice(&[m[0][0], m[1][0], m[1][0], m[2][0]]);
        Ok(())
    })?;
    let layout = layout_of(2, &[(BlockKind::Vector, "grad-u")]);
    let mut s = total_source(grid, &layout, &[s_prime])?;
    let mut warnings = Vec::new();
    if tau != 0.0 {
        let (cx, cy) = (0.5 * grid.lengths()[0], 0.5 * grid.lengths()[1]);
        for p in 0..pts {
            let x = grid.position(p);
            let r = [C64::new(tau * (x[1] - cy), 0.0), C64::new(-tau * (x[0] - cx), 0.0)];
            let mut lr = [ZERO; 2];
            linalg::mat_vec(2, 2, l.at(p), &r, &mut lr);
            let out = s.at_mut(p);
            out[0] += lr[0];
            out[1] += lr[1];
        }
        let touches = (0..pts).any(|p| {
            let idx = grid.multi_index(p);
            (idx[0] == 0 || idx[1] == 0) && linalg::frobenius(l.at(p)) > 0.0
        });
        if touches {
            warnings.push(String::from(
                "torsion: L is nonzero on the cell boundary, so the periodic source is not square integrable over the plane",
            ));
        }
    }
    let op = LocalOperator::new(grid, &layout, l)?;
    let mut meta = ProblemMeta::new(if tau == 0.0 { "antiplane" } else { "torsion" }).param(format!("tau={tau}"));
    meta.warnings = warnings;
    Problem::new(ProjectionSpec::Grad, op, s, meta)
}

/// Thermoelasticity or poroelasticity in compliance form on `(σ', θ)` with
/// `L = [[S, α], [αᵀ, c/T₀]]`; `θ` is constant over the cell.
pub fn build_thermoelasticity(
    grid: &Grid,
    compliance: MatrixField,
    alpha: MatrixField,
    c_over_t0: MatrixField,
    source: Option<&Field>,
) -> Result<Problem> {
    let d = grid.dim();
    let n = d * (d + 1) / 2;
    let pts = grid.points();
    check_size("compliance", &compliance, pts, n, n)?;
    check_size("alpha", &alpha, pts, n, 1)?;
    check_size("c_over_t0", &c_over_t0, pts, 1, 1)?;
    let l = assemble(
        &[n, 1],
        &[(0, 0, &compliance, false), (0, 1, &alpha, false), (1, 0, &alpha, true), (1, 1, &c_over_t0, false)],
    )?;
    let layout = layout_of(d, &[(BlockKind::SymMatrix, "stress"), (BlockKind::Scalar, "theta")]);
    let op = LocalOperator::new(grid, &layout, l)?;
    let s = total_source(grid, &layout, &[source])?;
    Problem::new(
        ProjectionSpec::block(alloc::vec![ProjectionSpec::complement(ProjectionSpec::Elastic), ProjectionSpec::zero(BlockKind::Scalar)]),
        op,
        s,
        ProblemMeta::new("thermoelasticity"),
    )
}

/// Coupled elastic, electric and magnetic fields on `(σ', −∇V, h')` with
/// `L = [[S, D, Q], [Dᵀ, ε, β], [Qᵀ, βᵀ, μ]]`.
#[allow(clippy::too_many_arguments)]
pub fn build_coupled_eme(
    grid: &Grid,
    compliance: MatrixField,
    piezoelectric: MatrixField,
    piezomagnetic: MatrixField,
    permittivity: MatrixField,
    magnetoelectric: MatrixField,
    permeability: MatrixField,
    source: Option<&Field>,
) -> Result<Problem> {
    let d = grid.dim();
    let n = d * (d + 1) / 2;
    let pts = grid.points();
    check_size("compliance", &compliance, pts, n, n)?;
    check_size("piezoelectric", &piezoelectric, pts, n, d)?;
    check_size("piezomagnetic", &piezomagnetic, pts, n, d)?;
    check_size("permittivity", &permittivity, pts, d, d)?;
    check_size("magnetoelectric", &magnetoelectric, pts, d, d)?;
    check_size("permeability", &permeability, pts, d, d)?;
    let l = assemble(
        &[n, d, d],
        &[
            (0, 0, &compliance, false),
            (0, 1, &piezoelectric, false),
            (0, 2, &piezomagnetic, false),
            (1, 0, &piezoelectric, true),
            (1, 1, &permittivity, false),
            (1, 2, &magnetoelectric, false),
            (2, 0, &piezomagnetic, true),
            (2, 1, &magnetoelectric, true),
            (2, 2, &permeability, false),
        ],
    )?;
    let layout = layout_of(d, &[(BlockKind::SymMatrix, "stress"), (BlockKind::Vector, "e"), (BlockKind::Vector, "h")]);
    let op = LocalOperator::new(grid, &layout, l)?;
    let s = total_source(grid, &layout, &[source])?;
    let gamma = ProjectionSpec::block(alloc::vec![
        ProjectionSpec::complement(ProjectionSpec::Elastic),
        ProjectionSpec::Grad,
        ProjectionSpec::Grad,
    ]);
    Problem::new(gamma, op, s, ProblemMeta::new("coupled-eme"))
}

/// Quasistatic viscoelasticity in the doubled Hermitian form on `(−iσ', ε)`; `stiffness_imag`
/// must be positive definite.
pub fn build_viscoelastic_cg(grid: &Grid, stiffness_real: MatrixField, stiffness_imag: MatrixField, source: Option<&Field>) -> Result<Problem> {
    let d = grid.dim();
    let n = d * (d + 1) / 2;
    check_size("stiffness_real", &stiffness_real, grid.points(), n, n)?;
    check_size("stiffness_imag", &stiffness_imag, grid.points(), n, n)?;
    let base = layout_of(d, &[(BlockKind::SymMatrix, "strain")]);
    let layout = layout_of(d, &[(BlockKind::SymMatrix, "minus-i-stress"), (BlockKind::SymMatrix, "strain")]);
    let (l, q) = cg_blocks(&stiffness_real, &stiffness_imag)?;
    let s = total_source(grid, &base, &[source])?;
    let s0 = cg_source(&q, &s, &layout)?;
    let op = LocalOperator::new(grid, &layout, l)?;
    let mut meta = ProblemMeta::new("viscoelastic-cg");
    meta.convention = Some(Convention::Permittivity);
    Problem::new(
        ProjectionSpec::block(alloc::vec![ProjectionSpec::complement(ProjectionSpec::Elastic), ProjectionSpec::Elastic]),
        op,
        s0,
        meta,
    )
}

/// Viscous electron flow in two dimensions on `(∇j, j)`:
/// `L = diag((D_ℓ/σ₀)Λ_f + λΛ_h, 1/σ₀)`, forcing `s_v` in the vector slot.
/// `Λ_h` is the trace projector; its penalty drives `∇·j` to zero.
pub fn build_graphene(
    grid: &Grid,
    sigma0: MatrixField,
    d_ell: MatrixField,
    penalty: Option<f64>,
    forcing: Option<&Field>,
) -> Result<Problem> {
    if grid.dim() != 2 {
        return Err(Error::UnsupportedDimension { expected: 2, found: grid.dim() });
    }
    let pts = grid.points();
    check_size("sigma0", &sigma0, pts, 1, 1)?;
    check_size("d_ell", &d_ell, pts, 1, 1)?;
    for (p, v) in sigma0.distinct() {
        if !(v[0].re > 0.0) {
            return Err(Error::NotPositiveDefinite { point: p, eigenvalue: v[0].re });
        }
    }
    for (p, v) in d_ell.distinct() {
        if v[0].re < 0.0 {
            return Err(Error::Invalid(format!("D_ell must be nonnegative (point {p})")));
        }
    }
    let lf = tracefree_projector(2);
    let l = MatrixField::zip_map(&[&sigma0, &d_ell], 6, 6, |_, m, out| {
        out.iter_mut().for_each(|v| *v = ZERO);
        let (s0, dl) = (m[0][0], m[1][0]);
        for i in 0..4 {
            for j in 0..4 {
                out[i * 6 + j] = lf[i * 4 + j] * (dl / s0);
            }
        }
        out[4 * 6 + 4] = C64::new(1.0, 0.0) / s0;
        out[5 * 6 + 5] = C64::new(1.0, 0.0) / s0;
        Ok(())
    })?;
    let lambda = default_penalty(l.max_abs(), penalty);
    let layout = layout_of(2, &[(BlockKind::FullMatrix, "grad-j"), (BlockKind::Vector, "j")]);
    let op = LocalOperator::new(grid, &layout, l)?.with_penalty(Penalty { block: 0, projector: trace_projector(2), lambda })?;
    let mut s = Field::zeros(grid, &layout, Space::Real);
    if let Some(f) = forcing {
        if f.m() != 2 || f.grid() != grid {
            return Err(Error::Shape(format!("graphene forcing must be a 2-vector field on the grid")));
        }
        f.require_space(Space::Real)?;
        for p in 0..pts {
            s.at_mut(p)[4..].copy_from_slice(f.at(p));
        }
    }
    let mut meta = ProblemMeta::new("graphene").param(format!("penalty={lambda:e}"));
    meta.penalty = Some(lambda);
    Problem::new(ProjectionSpec::Z, op, s, meta)
}

/// Sign of the convective block in the Oseen operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum OseenSign {
    /// Lower-left block `+ρV·`, so `∇·(σ − PI) = ρ(V·∇)w − f`.
    Plus,
    /// Lower-left block `−ρV·`, matching the momentum balance `−ρ(V·∇)w = −∇P + η∇²w + f`.
    Minus,
}

/// Oseen flow on `(∇w, w)` with `(∇w)_ij = ∂_i w_j`:
/// `L = [[ηΛ_s + λΛ_h, 0], [±ρV·, 0]]`, body force `f` in the vector slot.
#[allow(clippy::too_many_arguments)]
pub fn build_oseen(
    grid: &Grid,
    rho: f64,
    velocity: &[f64],
    eta: MatrixField,
    penalty: Option<f64>,
    force: Option<&Field>,
    sign: OseenSign,
) -> Result<Problem> {
    let d = grid.dim();
    let pts = grid.points();
    check_size("eta", &eta, pts, 1, 1)?;
    if velocity.len() != d {
        return Err(Error::Shape(format!("velocity must have {d} components")));
    }
    for (p, v) in eta.distinct() {
        if !(v[0].re > 0.0) {
            return Err(Error::NotPositiveDefinite { point: p, eigenvalue: v[0].re });
        }
    }
    let m = d * d + d;
    let ls = symmetric_tracefree_projector(d);
    let sgn = match sign {
        OseenSign::Plus => 1.0,
        OseenSign::Minus => -1.0,
    };
    let l = eta.map(m, m, |_, e, out| {
        out.iter_mut().for_each(|v| *v = ZERO);
        let n = d * d;
        for i in 0..n {
            for j in 0..n {
                out[i * m + j] = ls[i * n + j] * e[0];
            }
        }
        for i in 0..d {
            for j in 0..d {
                out[(n + j) * m + i * d + j] = C64::new(sgn * rho * velocity[i], 0.0);
            }
        }
        Ok(())
    })?;
    let lambda = default_penalty(l.max_abs(), penalty);
    let layout = layout_of(d, &[(BlockKind::FullMatrix, "grad-w"), (BlockKind::Vector, "w")]);
    let op = LocalOperator::new(grid, &layout, l)?.with_penalty(Penalty { block: 0, projector: trace_projector(d), lambda })?;
    let mut s = Field::zeros(grid, &layout, Space::Real);
    if let Some(f) = force {
        if f.m() != d || f.grid() != grid {
            return Err(Error::Shape(format!("Oseen force must be a {d}-vector field on the grid")));
        }
        f.require_space(Space::Real)?;
        for p in 0..pts {
            s.at_mut(p)[d * d..].copy_from_slice(f.at(p));
        }
    }
    let mut meta = ProblemMeta::new("oseen")
        .param(format!("rho={rho}"))
        .param(format!("velocity={velocity:?}"))
        .param(format!("sign={sign:?}"))
        .param(format!("penalty={lambda:e}"));
    meta.penalty = Some(lambda);
    if rho != 0.0 && velocity.iter().any(|&v| v != 0.0) {
        meta.warnings.push(String::from("oseen: convective block makes L non-Hermitian"));
    }
    Problem::new(ProjectionSpec::Z, op, s, meta)
}
