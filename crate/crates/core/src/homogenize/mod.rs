//! Effective tensors and sources of periodic media, the adjoint identity, and the
//! first-order perturbation of effective tensors.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{Field, Space};
use crate::fourier::FourierBackend;
use crate::linalg;
use crate::operator::{LocalOperator, PhaseMap};
use crate::physics::Problem;
use crate::solver::{SolveOptions, SolveReport, Solver};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Effective law `J₀ = L* E₀ + s*` on the space of constant fields.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EffectiveResponse {
    pub m: usize,
    /// Row-major `m × m`.
    pub l_star: Vec<C64>,
    pub s_star: Vec<C64>,
    /// Label of each mean-field coordinate, `block[component]`.
    pub basis: Vec<String>,
    /// One report per column of `L*`, then one for `s*` when the source is nonzero.
    pub reports: Vec<SolveReport>,
    /// Columns whose solve did not converge.
    pub failed: Vec<bool>,
}

impl EffectiveResponse {
    pub fn all_converged(&self) -> bool {
        !self.failed.iter().any(|&f| f) && self.reports.iter().all(|r| r.converged)
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.l_star[i * self.m + j]
    }
}

/// Labels of the canonical basis of constant fields.
pub fn basis_labels(p: &Problem) -> Vec<String> {
    let layout = p.layout();
    let mut out = Vec::with_capacity(layout.m());
    for (b, block) in layout.blocks().iter().enumerate() {
        for c in 0..layout.block_size(b) {
            out.push(format!("{}[{c}]", block.label));
        }
    }
    out
}

fn unit(m: usize, j: usize) -> Vec<C64> {
    let mut e = vec![ZERO; m];
    e[j] = ONE;
    e
}

fn unforced(p: &Problem) -> Result<Problem> {
    p.with_source(Field::zeros(p.grid(), p.layout(), Space::Real))
}

/// Cell solutions for unit applied fields with zero source; column `j` uses `e_j`.
pub fn unit_solutions(p: &Problem, options: &SolveOptions, backend: &dyn FourierBackend) -> Result<Vec<crate::solver::Solution>> {
    let q = unforced(p)?;
    let solver = Solver::new(&q, backend, options.clone())?;
    (0..p.m()).map(|j| solver.solve_cell(&unit(p.m(), j))).collect()
}

/// `L*` column by column from `average(J)` at unit `E₀` with `s = 0`, and `s* = average(J)` at
/// `E₀ = 0` with the problem's source.
pub fn effective_tensor(p: &Problem, options: &SolveOptions, backend: &dyn FourierBackend) -> Result<EffectiveResponse> {
    effective_tensor_with_fields(p, options, backend).map(|(r, _)| r)
}

/// [`effective_tensor`] together with the unit-field cell solutions, one per column.
pub fn effective_tensor_with_fields(
    p: &Problem,
    options: &SolveOptions,
    backend: &dyn FourierBackend,
) -> Result<(EffectiveResponse, Vec<crate::solver::Solution>)> {
    let m = p.m();
    let cols = unit_solutions(p, options, backend)?;
    let mut l_star = vec![ZERO; m * m];
    let mut reports = Vec::with_capacity(m + 1);
    let mut failed = Vec::with_capacity(m);
    for (j, sol) in cols.iter().enumerate() {
        for i in 0..m {
            l_star[i * m + j] = sol.j0[i];
        }
        failed.push(!sol.report.converged);
        reports.push(sol.report.clone());
    }
    let s_star = if p.source().max_abs() == 0.0 {
        vec![ZERO; m]
    } else {
        let sol = Solver::new(p, backend, options.clone())?.solve_cell(&vec![ZERO; m])?;
        reports.push(sol.report);
        sol.j0
    };
    Ok((EffectiveResponse { m, l_star, s_star, basis: basis_labels(p), reports, failed }, cols))
}

/// `s* = average(J)` from the cell solve with `E₀ = 0`, so that `J₀ = L*E₀ + s*`.
pub fn effective_source(p: &Problem, options: &SolveOptions, backend: &dyn FourierBackend) -> Result<(Vec<C64>, SolveReport)> {
    let sol = Solver::new(p, backend, options.clone())?.solve_cell(&vec![ZERO; p.m()])?;
    Ok((sol.j0, sol.report))
}

/// Linear map from piecewise-constant phase sources to `s*`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResponseTensor {
    pub m: usize,
    pub phases: usize,
    /// Row-major `m × (phases · m)`; column `a·m + j` is the response to `e_j` in phase `a`.
    pub matrix: Vec<C64>,
    pub reports: Vec<SolveReport>,
}

impl ResponseTensor {
    /// `s* = 𝒮* S` for per-phase sources `S = (s₁, …, s_N)`.
    pub fn apply(&self, sources: &[Vec<C64>]) -> Result<Vec<C64>> {
        if sources.len() != self.phases || sources.iter().any(|s| s.len() != self.m) {
            return Err(Error::Shape(format!("expected {} phase sources of length {}", self.phases, self.m)));
        }
        let flat: Vec<C64> = sources.iter().flatten().copied().collect();
        let mut out = vec![ZERO; self.m];
        linalg::mat_vec(self.m, self.phases * self.m, &self.matrix, &flat, &mut out);
        Ok(out)
    }
}

/// Assembles `𝒮*` from unit sources supported on one phase at a time.
pub fn response_tensor(p: &Problem, phases: &PhaseMap, options: &SolveOptions, backend: &dyn FourierBackend) -> Result<ResponseTensor> {
    if phases.grid() != p.grid() {
        return Err(Error::Shape(String::from("phase map lives on a different grid")));
    }
    let m = p.m();
    let np = phases.phases();
    let cols = np * m;
    let mut matrix = vec![ZERO; m * cols];
    let mut reports = Vec::with_capacity(cols);
    for a in 0..np {
        for j in 0..m {
            let s = Field::from_fn(p.grid(), p.layout(), |q, out| {
                if phases.label(q) as usize == a + 1 {
                    out[j] = ONE;
                }
            });
            let (s_star, report) = effective_source(&p.with_source(s)?, options, backend)?;
            for i in 0..m {
                matrix[i * cols + a * m + j] = s_star[i];
            }
            reports.push(report);
        }
    }
    Ok(ResponseTensor { m, phases: np, matrix, reports })
}

/// Outcome of comparing `(L†)*` with `(L*)†`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdjointCheck {
    /// Frobenius norm of `(L†)* − (L*)†`.
    pub defect: f64,
    pub l_star: Vec<C64>,
    pub l_star_of_adjoint: Vec<C64>,
    pub converged: bool,
}

pub fn check_adjoint(p: &Problem, options: &SolveOptions, backend: &dyn FourierBackend) -> Result<AdjointCheck> {
    let m = p.m();
    let direct = effective_tensor(&unforced(p)?, options, backend)?;
    let adjoint = effective_tensor(&p.adjoint()?, options, backend)?;
    let diff = linalg::sub(&adjoint.l_star, &linalg::adjoint(m, m, &direct.l_star));
    Ok(AdjointCheck {
        defect: linalg::frobenius(&diff),
        converged: direct.all_converged() && adjoint.all_converged(),
        l_star: direct.l_star,
        l_star_of_adjoint: adjoint.l_star,
    })
}

/// First-order change of `L*` under `L → L + L'`: `(L*')_ij = ⟨E_adj⁽ⁱ⁾, L' E⁽ʲ⁾⟩` with `E⁽ʲ⁾`
/// the unit-field solutions of `p` and `E_adj⁽ⁱ⁾` those of the adjoint problem.
pub fn perturb_effective(p: &Problem, l_prime: &LocalOperator, options: &SolveOptions, backend: &dyn FourierBackend) -> Result<Vec<C64>> {
    let m = p.m();
    if l_prime.layout() != p.layout() || l_prime.grid() != p.grid() {
        return Err(Error::Shape(String::from("perturbation does not match the problem layout")));
    }
    let direct = unit_solutions(p, options, backend)?;
    let self_adjoint = p.operator().hermitian_defect() <= 1e-13;
    let adjoint = if self_adjoint { None } else { Some(unit_solutions(&p.adjoint()?, options, backend)?) };
    let adj = adjoint.as_ref().unwrap_or(&direct);
    let mut out = vec![ZERO; m * m];
    for j in 0..m {
        let le = l_prime.apply(&direct[j].e)?;
        for i in 0..m {
            out[i * m + j] = adj[i].e.inner_product(&le)?;
        }
    }
    Ok(out)
}
