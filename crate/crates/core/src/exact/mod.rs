//! Algebra of exact relations: the reference operator `Γ(k)`, the `K ↔ L` transformation,
//! subspace closure checks and Levin's formula.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::projection::ProjectionSpec;
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Closure tolerance on the relative distance from the subspace.
pub const CLOSURE_TOLERANCE: f64 = 1e-10;
/// Fresh wave vectors used to re-verify a passing closure check.
pub const REVERIFY_SAMPLES: usize = 10;

fn square(m: usize, a: &[C64], what: &str) -> Result<()> {
    if a.len() != m * m {
        return Err(Error::Shape(format!("{what} must be {m}x{m}")));
    }
    Ok(())
}

/// `Γ(k) = Γ₁[Γ₁L₀Γ₁]⁻¹Γ₁` with the inverse taken on the range of `Γ₁(k)`.
pub fn gamma_reference(gamma: &ProjectionSpec, l0: &[C64], k: &[f64]) -> Result<Vec<C64>> {
    let m = gamma.size(k.len());
    square(m, l0, "L0")?;
    if k.iter().all(|&v| v == 0.0) {
        return Err(Error::Invalid(format!("reference operator needs k != 0")));
    }
    let g = gamma.evaluate(k)?;
    linalg::restricted_inverse(m, &g, l0).ok_or_else(|| Error::RestrictedSingular { k: k.to_vec() })
}

/// `K = (L − L₀)[I + Γ(k₀)(L − L₀)]⁻¹`.
pub fn w_transform(l: &[C64], l0: &[C64], gamma_k0: &[C64]) -> Result<Vec<C64>> {
    let m = (l.len() as f64).sqrt().round() as usize;
    square(m, l, "L")?;
    square(m, l0, "L0")?;
    square(m, gamma_k0, "Gamma(k0)")?;
    let d = linalg::sub(l, l0);
    let res = linalg::add(&linalg::identity(m), &linalg::mat_mul(m, m, m, gamma_k0, &d));
    let inv = linalg::inverse(m, &res).ok_or(Error::Singular { point: 0, context: "resolvent I + Γ(L − L0)" })?;
    Ok(linalg::mat_mul(m, m, m, &d, &inv))
}

/// `L = L₀ + (I − KΓ(k₀))⁻¹K`, the inverse of [`w_transform`].
pub fn inverse_w_transform(k: &[C64], l0: &[C64], gamma_k0: &[C64]) -> Result<Vec<C64>> {
    let m = (k.len() as f64).sqrt().round() as usize;
    square(m, k, "K")?;
    square(m, l0, "L0")?;
    square(m, gamma_k0, "Gamma(k0)")?;
    let res = linalg::sub(&linalg::identity(m), &linalg::mat_mul(m, m, m, k, gamma_k0));
    let inv = linalg::inverse(m, &res).ok_or(Error::Singular { point: 0, context: "resolvent I − KΓ" })?;
    Ok(linalg::add(l0, &linalg::mat_mul(m, m, m, &inv, k)))
}

/// Span of `m × m` matrices with a Frobenius-orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Subspace {
    m: usize,
    basis: Vec<Vec<C64>>,
}

fn frob_dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

impl Subspace {
    /// Orthonormalizes `matrices`; linearly dependent input is rejected.
    pub fn new(m: usize, matrices: &[Vec<C64>]) -> Result<Subspace> {
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(matrices.len());
        for a in matrices {
            square(m, a, "basis element")?;
            let norm0 = linalg::frobenius(a);
            let mut v = a.clone();
            // Two Gram–Schmidt passes.
            for _ in 0..2 {
                for b in &basis {
                    let c = frob_dot(b, &v);
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi -= c * bi;
                    }
                }
            }
            let n = linalg::frobenius(&v);
            if !(n > 1e-10 * norm0.max(f64::MIN_POSITIVE)) || norm0 == 0.0 {
                return Err(Error::Degenerate("subspace basis is linearly dependent"));
            }
            basis.push(v.iter().map(|x| x / n).collect());
        }
        Ok(Subspace { m, basis })
    }

    /// All `m × m` matrices.
    pub fn full(m: usize) -> Subspace {
        let basis = (0..m * m)
            .map(|i| {
                let mut e = vec![ZERO; m * m];
                e[i] = C64::new(1.0, 0.0);
                e
            })
            .collect();
        Subspace { m, basis }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn basis(&self) -> &[Vec<C64>] {
        &self.basis
    }

    pub fn project(&self, a: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; a.len()];
        for b in &self.basis {
            let c = frob_dot(b, a);
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }

    /// Frobenius distance from the span.
    pub fn distance(&self, a: &[C64]) -> f64 {
        linalg::frobenius(&linalg::sub(a, &self.project(a)))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClosureWitness {
    pub k: Vec<f64>,
    /// Basis indices of `K₁` and `K₂`.
    pub pair: (usize, usize),
    /// `‖K₁Γ(k)K₂ − P(K₁Γ(k)K₂)‖ / ‖Γ(k)‖`.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClosureReport {
    pub samples: usize,
    pub max_distance: f64,
    /// Worst product seen.
    pub witness: Option<ClosureWitness>,
    pub passed: bool,
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

fn closure_scan(sub: &Subspace, gamma: &ProjectionSpec, l0: &[C64], dim: usize, samples: usize, rng: &mut ChaCha8Rng, report: &mut ClosureReport) -> Result<()> {
    let m = sub.m;
    for _ in 0..samples {
        let k = random_k(rng, dim);
        let g = gamma_reference(gamma, l0, &k)?;
        let gn = linalg::frobenius(&g).max(f64::MIN_POSITIVE);
        for (i, k1) in sub.basis.iter().enumerate() {
            let k1g = linalg::mat_mul(m, m, m, k1, &g);
            for (j, k2) in sub.basis.iter().enumerate() {
                let prod = linalg::mat_mul(m, m, m, &k1g, k2);
                let dist = sub.distance(&prod) / gn;
                if dist > report.max_distance || report.witness.is_none() {
                    report.max_distance = report.max_distance.max(dist);
                    report.witness = Some(ClosureWitness { k: k.clone(), pair: (i, j), distance: dist });
                }
            }
        }
    }
    Ok(())
}

/// Checks `K₁Γ(k)K₂ ∈ 𝒦` for all basis pairs at `samples` random wave vectors; a pass is
/// confirmed at [`REVERIFY_SAMPLES`] further wave vectors.
pub fn check_closure(sub: &Subspace, gamma: &ProjectionSpec, l0: &[C64], dim: usize, samples: usize, seed: u64) -> Result<ClosureReport> {
    if samples == 0 {
        return Err(Error::Invalid(format!("closure check needs at least one sample")));
    }
    if gamma.size(dim) != sub.m {
        return Err(Error::Shape(format!("projection acts on {} components, subspace on {}", gamma.size(dim), sub.m)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ClosureReport { samples, max_distance: 0.0, witness: None, passed: false };
    closure_scan(sub, gamma, l0, dim, samples, &mut rng, &mut report)?;
    if report.max_distance <= CLOSURE_TOLERANCE {
        let mut fresh = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        closure_scan(sub, gamma, l0, dim, REVERIFY_SAMPLES, &mut fresh, &mut report)?;
        report.samples += REVERIFY_SAMPLES;
    }
    report.passed = report.max_distance <= CLOSURE_TOLERANCE;
    Ok(report)
}

/// Levin's formula for the effective thermal expansion of a two-phase isotropic composite:
/// `α* = [α₁(1/κ* − 1/κ₂) − α₂(1/κ* − 1/κ₁)] / (1/κ₁ − 1/κ₂)`.
pub fn levin_alpha(kappa1: f64, kappa2: f64, alpha1: f64, alpha2: f64, kappa_star: f64) -> Result<f64> {
    if !(kappa1 > 0.0 && kappa2 > 0.0 && kappa_star > 0.0) {
        return Err(Error::Invalid(format!("bulk moduli must be positive")));
    }
    if kappa1 == kappa2 {
        return Err(Error::Degenerate("Levin's formula is indeterminate for equal bulk moduli"));
    }
    let (i1, i2, is) = (1.0 / kappa1, 1.0 / kappa2, 1.0 / kappa_star);
    Ok((alpha1 * (is - i2) - alpha2 * (is - i1)) / (i1 - i2))
}

#[cfg(test)]
mod tests;
