use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::builders::{cg_blocks, cg_source};
use super::{Convention, NullTRecord, Problem};
use crate::error::{Error, Result};
use crate::field::{Field, Space};
use crate::layout::{Block, Layout};
use crate::linalg;
use crate::operator::{LocalOperator, MatrixField};
use crate::projection::ProjectionSpec;
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn complement(g: &ProjectionSpec) -> ProjectionSpec {
    match g {
        ProjectionSpec::Complement { child } => (**child).clone(),
        ProjectionSpec::Grad => ProjectionSpec::DivFree,
        ProjectionSpec::DivFree => ProjectionSpec::Grad,
        other => ProjectionSpec::complement(other.clone()),
    }
}

/// Dual form: `E = L⁻¹J + L⁻¹s`, so the roles of `E` and `J` swap with `Γ₁ → Γ₂`.
pub fn dualize(p: &Problem) -> Result<Problem> {
    let inv = p.operator().inverse()?;
    let s = inv.apply(p.source())?.scaled(C64::new(-1.0, 0.0));
    let mut meta = p.meta.clone();
    meta.params.push(String::from("dual"));
    meta.penalty = None;
    Problem::new(complement(p.gamma()), inv, s, meta)
}

/// Hermitian doubled form of a problem with non-Hermitian `L`. The convention names how `L`
/// is read: `Conductivity` uses `ε = iL` and `s` unchanged; `Permittivity` uses `ε = L` and
/// `−is`. Requires the dissipative part `(ε − ε†)/(2i)` positive definite. The new fields are
/// `(J, E)` for conductivity and `(−iJ, E)` for permittivity.
pub fn cg_transform(p: &Problem, convention: Convention) -> Result<Problem> {
    let m = p.m();
    let eps = p.operator().effective();
    let eps = match convention {
        Convention::Conductivity => eps.map(m, m, |_, a, out| {
            for (o, v) in out.iter_mut().zip(a) {
                *o = v * I;
            }
            Ok(())
        })?,
        Convention::Permittivity => eps,
    };
    let eps_real = eps.map(m, m, |_, a, out| {
        out.copy_from_slice(&linalg::hermitian_part(m, a));
        Ok(())
    })?;
    let eps_imag = eps.map(m, m, |_, a, out| {
        out.copy_from_slice(&linalg::anti_hermitian_part(m, a));
        Ok(())
    })?;
    let (l, q) = cg_blocks(&eps_real, &eps_imag)?;
    let s = match convention {
        Convention::Conductivity => p.source().clone(),
        Convention::Permittivity => p.source().scaled(-I),
    };
    let mut blocks: Vec<Block> = p
        .layout()
        .blocks()
        .iter()
        .map(|b| Block { kind: b.kind, label: format!("{}-flux", b.label) })
        .collect();
    blocks.extend(p.layout().blocks().iter().cloned());
    let layout = Layout::new(p.layout().dim(), blocks)?;
    let s0 = cg_source(&q, &s, &layout)?;
    let op = LocalOperator::new(p.grid(), &layout, l)?;
    let gamma = ProjectionSpec::block(alloc::vec![complement(p.gamma()), p.gamma().clone()]);
    let mut meta = p.meta.clone();
    meta.convention = Some(convention);
    meta.params.push(String::from("cg-doubled"));
    Problem::new(gamma, op, s0, meta)
}

/// Splits a doubled-form field back into `(E, J)` of the original problem.
pub fn cg_recover(doubled: &Field, original: &Layout, convention: Convention) -> Result<(Field, Field)> {
    let m = original.m();
    if doubled.m() != 2 * m {
        return Err(Error::Shape(format!("doubled field must have {} components", 2 * m)));
    }
    let flux = doubled.extract(0..m, original)?;
    let e = doubled.extract(m..2 * m, original)?;
    let j = match convention {
        Convention::Conductivity => flux,
        Convention::Permittivity => flux.scaled(I),
    };
    Ok((e, j))
}

fn random_k(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    loop {
        let k: Vec<f64> = (0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        if k.iter().any(|&v| v != 0.0) {
            return k;
        }
    }
}

/// Largest `‖Γ₁(k) T Γ₁(k)‖` relative to `max(1, ‖T‖)` over `samples` random wave vectors,
/// with the wave vector where it occurred.
pub fn null_t_defect(gamma: &ProjectionSpec, dim: usize, t: &[C64], samples: usize, seed: u64) -> Result<(f64, Vec<f64>)> {
    let m = gamma.size(dim);
    if t.len() != m * m {
        return Err(Error::Shape(format!("T must be {m}x{m}")));
    }
    let scale = linalg::frobenius(t).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (0.0, Vec::new());
    for _ in 0..samples {
        let k = random_k(&mut rng, dim);
        let g = gamma.evaluate(&k)?;
        let gt = linalg::mat_mul(m, m, m, &g, t);
        let gtg = linalg::mat_mul(m, m, m, &gt, &g);
        let defect = linalg::frobenius(&gtg) / scale;
        if defect > worst.0 || worst.1.is_empty() {
            worst = (defect, k);
        }
    }
    Ok(worst)
}

/// Number of random wave vectors used to certify a null-T operator.
pub const NULL_T_SAMPLES: usize = 200;
/// Relative tolerance for `Γ₁TΓ₁ = 0`.
pub const NULL_T_TOLERANCE: f64 = 1e-12;

/// `L → L + cT` for a constant null-T operator `T`; `E` is unchanged and `J` becomes `J + cTE`.
pub fn null_t_shift(p: &Problem, t: &[C64], c: f64, seed: u64) -> Result<Problem> {
    let (defect, k) = null_t_defect(p.gamma(), p.grid().dim(), t, NULL_T_SAMPLES, seed)?;
    if !(defect <= NULL_T_TOLERANCE) {
        return Err(Error::InvalidNullT { k, defect });
    }
    let op = p.operator().add_constant(t, c)?;
    let mut q = p.with_operator(op)?;
    q.meta.null_t = Some(NullTRecord { t: t.to_vec(), c });
    Ok(q)
}

/// Rotation by a quarter turn, `R⊥ = [[0, −1], [1, 0]]`.
pub fn rotation_2d() -> Vec<C64> {
    alloc::vec![C64::new(0.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
}

/// Perturbation problem about a base solution: operator `L'`, same projection,
/// source `s' − L'E_base`.
pub fn linearize(p: &Problem, l_prime: LocalOperator, s_prime: &Field, e_base: &Field) -> Result<Problem> {
    let e = match e_base.space() {
        Space::Real => e_base.clone(),
        Space::Fourier => return Err(Error::Space { expected: Space::Real, found: Space::Fourier }),
    };
    let le = l_prime.apply(&e)?;
    let s = s_prime.sub(&le)?;
    let mut meta = p.meta.clone();
    meta.params.push(String::from("linearized"));
    Problem::new(p.gamma().clone(), l_prime, s, meta)
}

/// Two-point extrapolation to `λ → ∞` assuming `x(λ) = x∞ + c/λ`.
pub fn richardson(lambda1: f64, x1: &[C64], lambda2: f64, x2: &[C64]) -> Result<Vec<C64>> {
    if x1.len() != x2.len() {
        return Err(Error::Shape(String::from("Richardson inputs differ in length")));
    }
    if lambda1 == lambda2 {
        return Err(Error::Degenerate("Richardson extrapolation needs two distinct penalties"));
    }
    let d = lambda2 - lambda1;
    Ok(x1.iter().zip(x2).map(|(a, b)| (b * lambda2 - a * lambda1) / d).collect())
}

/// Relative defect of the reality condition `ε(ω) = conj(ε(−ω̄))` for constant tensors.
pub fn reciprocity_defect(eps_omega: &[C64], eps_minus_conj_omega: &[C64]) -> Result<f64> {
    if eps_omega.len() != eps_minus_conj_omega.len() {
        return Err(Error::Shape(String::from("tensors differ in size")));
    }
    let diff: Vec<C64> = eps_omega.iter().zip(eps_minus_conj_omega).map(|(a, b)| a - b.conj()).collect();
    Ok(linalg::frobenius(&diff) / linalg::frobenius(eps_omega).max(f64::MIN_POSITIVE))
}

/// Pointwise relative Hermitian defect and smallest eigenvalue of a matrix field.
pub fn hermitian_pd_report(f: &MatrixField) -> (f64, f64) {
    let m = f.rows();
    let mut defect: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for (_, a) in f.distinct() {
        let n = linalg::frobenius(a).max(f64::MIN_POSITIVE);
        defect = defect.max(linalg::hermitian_defect(m, a) / n);
        min_eig = min_eig.min(linalg::min_eigenvalue(m, a));
    }
    (defect, min_eig)
}
