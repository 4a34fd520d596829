use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ProjectionSpec;
use crate::error::Result;
use crate::linalg;
use crate::C64;

/// Outcome of sampling a symbol at random wave vectors.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerifyReport {
    pub samples: usize,
    /// Largest Frobenius norm of `Γ² − Γ`.
    pub idempotence: f64,
    /// Wave vector where `idempotence` was attained.
    pub idempotence_at: Vec<f64>,
    /// Largest Frobenius norm of `Γ − Γ†`.
    pub hermitian: f64,
    pub hermitian_at: Vec<f64>,
    /// Largest Frobenius norm of `Γ(λk) − Γ(k)`, when the symbol is homogeneous.
    pub homogeneity: Option<f64>,
    pub rank_min: usize,
    pub rank_max: usize,
    pub passed: bool,
}

/// Samples `symbol` at random nonzero wave vectors of varied length. Passes iff the idempotence
/// and Hermitian defects stay at or below 1e-10.
pub fn verify_symbol<F>(dim: usize, samples: usize, seed: u64, homogeneous: bool, symbol: F) -> Result<VerifyReport>
where
    F: Fn(&[f64]) -> Result<Vec<C64>>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport {
        samples,
        idempotence: 0.0,
        idempotence_at: Vec::new(),
        hermitian: 0.0,
        hermitian_at: Vec::new(),
        homogeneity: if homogeneous { Some(0.0) } else { None },
        rank_min: usize::MAX,
        rank_max: 0,
        passed: false,
    };
    for _ in 0..samples.max(1) {
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let k: Vec<f64> = loop {
            let k: Vec<f64> = (0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            if k.iter().any(|&v| v != 0.0) {
                break k;
            }
        };
        let g = symbol(&k)?;
        let m = (g.len() as f64).sqrt().round() as usize;
        let g2 = linalg::mat_mul(m, m, m, &g, &g);
        let idem = linalg::frobenius(&linalg::sub(&g2, &g));
        if idem > report.idempotence || report.idempotence_at.is_empty() {
            report.idempotence = idem;
            report.idempotence_at = k.clone();
        }
        let herm = linalg::hermitian_defect(m, &g);
        if herm > report.hermitian || report.hermitian_at.is_empty() {
            report.hermitian = herm;
            report.hermitian_at = k.clone();
        }
        let rank = linalg::rank_hermitian(m, &g, 0.5);
        report.rank_min = report.rank_min.min(rank);
        report.rank_max = report.rank_max.max(rank);
        if let Some(h) = report.homogeneity.as_mut() {
            let lam = 10f64.powf(rng.random_range(-1.0..1.0));
            let kl: Vec<f64> = k.iter().map(|v| v * lam).collect();
            let gl = symbol(&kl)?;
            *h = h.max(linalg::frobenius(&linalg::sub(&gl, &g)));
        }
    }
    report.passed = report.idempotence <= 1e-10 && report.hermitian <= 1e-10;
    Ok(report)
}

/// [`verify_symbol`] applied to a projection spec in dimension `dim`.
pub fn verify_projection(spec: &ProjectionSpec, dim: usize, samples: usize, seed: u64) -> Result<VerifyReport> {
    verify_symbol(dim, samples, seed, spec.is_homogeneous(), |k| spec.evaluate(k))
}
