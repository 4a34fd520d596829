//! Matrix-free Krylov solution of `Γ₁ L Γ₁ E = Γ₁ s` on the range of `Γ₁`, for the
//! infinite-body form and for the periodic cell problem with an applied mean field.

mod krylov;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{Field, Space};
use crate::fourier::{Direction, FourierBackend};
use crate::linalg;
use crate::operator::MatrixField;
use crate::physics::Problem;
use crate::projection::ProjectionSpec;
use crate::C64;
use krylov::{Stop, System};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Preconditioner tables larger than this many complex entries are evaluated on the fly.
const PRECONDITIONER_CACHE_LIMIT: usize = 1 << 22;
/// Krylov basis storage budget in complex entries.
const GMRES_BASIS_BUDGET: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Method {
    /// Conjugate gradients when `L` is Hermitian, otherwise GMRES.
    Auto,
    HermitianCg,
    GeneralKrylov,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative residual target, in `(0, 1)`.
    pub tolerance: f64,
    /// Defaults to `10 · m · max samples per axis`.
    pub max_iterations: Option<usize>,
    pub method: Method,
    /// Constant reference medium for the preconditioner; defaults to the cell mean of `L`.
    pub reference_medium: Option<Vec<C64>>,
    pub precondition: bool,
    pub gmres_restart: usize,
    /// Record the quadratic energy after every conjugate-gradient step.
    pub record_energy: bool,
    /// Monotone clock in seconds used to time the solve.
    pub clock: Option<fn() -> f64>,
}

impl Default for SolveOptions {
    fn default() -> SolveOptions {
        SolveOptions {
            tolerance: 1e-10,
            max_iterations: None,
            method: Method::Auto,
            reference_medium: None,
            precondition: true,
            gmres_restart: 40,
            record_energy: false,
            clock: None,
        }
    }
}

impl SolveOptions {
    pub fn with_tolerance(mut self, tolerance: f64) -> SolveOptions {
        self.tolerance = tolerance;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::Invalid(format!("tolerance must lie in (0, 1), got {}", self.tolerance)));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::Invalid(String::from("max_iterations must be at least 1")));
        }
        Ok(())
    }
}

/// Krylov method that produced the final iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum MethodUsed {
    HermitianCg,
    GeneralKrylov,
}

/// Separate norms of the three defining conditions of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualReport {
    /// `‖J − (L E − s)‖`.
    pub constitutive: f64,
    /// `‖Γ̄₂ E‖`: fluctuations of `E` outside the range of `Γ₁`.
    pub compatibility: f64,
    /// `‖Γ̄₁ J‖`: fluctuations of `J` inside the range of `Γ₁`.
    pub equilibrium: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub method: MethodUsed,
    pub preconditioned: bool,
    /// `‖Γ₁(L E − s)‖ / ‖b‖`, recomputed from the returned fields. Convergence also accepts
    /// residuals at roundoff level of `‖F(s − L E₀)‖` when `b` itself is that small.
    pub relative_residual: f64,
    /// The iteration's own final residual estimate, relative to `‖b‖`.
    pub residual_estimate: f64,
    /// `‖b‖` with `b = Γ₁ F(s − L E₀)`.
    pub rhs_norm: f64,
    /// Relative residual floor set by rounding in the penalty entries, `1e-15·λ·‖E − E₀‖ / ‖b‖`,
    /// when a penalty is active. Convergence is judged against the larger of this and the tolerance.
    pub penalty_floor: Option<f64>,
    pub residuals: ResidualReport,
    pub non_hermitian: bool,
    pub penalty_active: bool,
    pub warnings: Vec<String>,
    /// Seconds, when a clock was supplied.
    pub wall_time: Option<f64>,
    /// Quadratic energy after each conjugate-gradient step, when requested.
    pub energy: Vec<f64>,
}

/// Fields solving a cell or infinite-body problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Real-space field `E`.
    pub e: Field,
    /// Real-space flux `J = L E − s`.
    pub j: Field,
    /// Cell average of `J`.
    pub j0: Vec<C64>,
    pub report: SolveReport,
}

/// Reusable state for repeated solves on one problem.
pub struct Solver<'a> {
    problem: &'a Problem,
    backend: &'a dyn FourierBackend,
    l: MatrixField,
    gamma: ProjectionSpec,
    precond: Option<Preconditioner>,
    options: SolveOptions,
    warnings: Vec<String>,
    hermitian: bool,
}

struct Preconditioner {
    l0: Vec<C64>,
    table: Option<Vec<C64>>,
}

/// `Γ₁(Γ₁L₀Γ₁ + I − Γ₁)⁻¹Γ₁` at `k`, or `None` when the restricted operator is singular.
fn reference_operator(gamma: &ProjectionSpec, l0: &[C64], m: usize, k: &[f64]) -> Result<Option<Vec<C64>>> {
    if k.iter().all(|&v| v == 0.0) {
        return Ok(Some(vec![ZERO; m * m]));
    }
    let g = gamma.evaluate(k)?;
    Ok(linalg::restricted_inverse(m, &g, l0))
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a Problem, backend: &'a dyn FourierBackend, options: SolveOptions) -> Result<Solver<'a>> {
        options.validate()?;
        let m = problem.m();
        let grid = problem.grid();
        let l = problem.operator().effective();
        let hermitian = problem.operator().is_hermitian(1e-12);
        let mut warnings = Vec::new();
        let precond = if options.precondition {
            let l0 = match &options.reference_medium {
                Some(l0) if l0.len() == m * m => l0.clone(),
                Some(_) => return Err(Error::Shape(format!("reference medium must be {m}x{m}"))),
                None => problem.operator().mean_matrix(),
            };
            let n = grid.points();
            let mut ok = true;
            let table = if n * m * m <= PRECONDITIONER_CACHE_LIMIT {
                let mut t = vec![ZERO; n * m * m];
                for p in 0..n {
                    let k = grid.symbol_wave_vector(p);
                    match reference_operator(problem.gamma(), &l0, m, &k[..grid.dim()])? {
                        Some(a) => t[p * m * m..(p + 1) * m * m].copy_from_slice(&a),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                Some(t)
            } else {
                // Probe a few wave vectors before committing to on-the-fly evaluation.
                for p in [1, n / 3, n / 2, n - 1] {
                    let k = grid.symbol_wave_vector(p);
                    if reference_operator(problem.gamma(), &l0, m, &k[..grid.dim()])?.is_none() {
                        ok = false;
                    }
                }
                None
            };
            if ok {
                Some(Preconditioner { l0, table })
            } else {
                warnings.push(String::from("reference medium is singular on the range of the projection; solving without preconditioner"));
                None
            }
        } else {
            None
        };
        Ok(Solver { problem, backend, l, gamma: problem.gamma().clone(), precond, options, warnings, hermitian })
    }

    fn max_iterations(&self) -> usize {
        self.options
            .max_iterations
            .unwrap_or(10 * self.problem.m() * self.problem.grid().max_samples())
    }

    /// `x ← Γ₁(k) x` at every wave vector.
    fn project(&self, x: &mut [C64]) -> Result<()> {
        let grid = self.problem.grid();
        let m = self.problem.m();
        let d = grid.dim();
        for p in 0..grid.points() {
            let k = grid.symbol_wave_vector(p);
            self.gamma.apply_at(&k[..d], &mut x[p * m..(p + 1) * m])?;
        }
        Ok(())
    }

    fn forward(&self, x: &mut [C64]) {
        let grid = self.problem.grid();
        self.backend.transform(grid, self.problem.m(), x, Direction::Forward);
        let s = 1.0 / grid.points() as f64;
        x.iter_mut().for_each(|v| *v *= s);
    }

    fn inverse(&self, x: &mut [C64]) {
        self.backend.transform(self.problem.grid(), self.problem.m(), x, Direction::Inverse);
    }

    fn multiply(&self, x: &mut [C64]) {
        let m = self.problem.m();
        let mut tmp = [ZERO; 64];
        let mut heap;
        let y: &mut [C64] = if m <= 64 {
            &mut tmp[..m]
        } else {
            heap = vec![ZERO; m];
            &mut heap
        };
        for p in 0..self.problem.grid().points() {
            let xp = &mut x[p * m..(p + 1) * m];
            linalg::mat_vec(m, m, self.l.at(p), xp, y);
            xp.copy_from_slice(y);
        }
    }

    /// `Γ₁ F(L F⁻¹ x)` on Fourier coefficients.
    fn apply_coefficients(&self, x: &[C64], y: &mut [C64]) -> Result<()> {
        y.copy_from_slice(x);
        self.inverse(y);
        self.multiply(y);
        self.forward(y);
        self.project(y)
    }

    fn precondition_coefficients(&self, r: &[C64], z: &mut [C64]) -> Result<()> {
        let m = self.problem.m();
        let Some(pc) = &self.precond else {
            z.copy_from_slice(r);
            return Ok(());
        };
        let grid = self.problem.grid();
        for p in 0..grid.points() {
            let rp = &r[p * m..(p + 1) * m];
            let zp = &mut z[p * m..(p + 1) * m];
            match &pc.table {
                Some(t) => linalg::mat_vec(m, m, &t[p * m * m..(p + 1) * m * m], rp, zp),
                None => {
                    let k = grid.symbol_wave_vector(p);
                    let a = reference_operator(&self.gamma, &pc.l0, m, &k[..grid.dim()])?
                        .ok_or(Error::RestrictedSingular { k: k[..grid.dim()].to_vec() })?;
                    linalg::mat_vec(m, m, &a, rp, zp);
                }
            }
        }
        Ok(())
    }

    /// Solves the cell problem with applied mean field `e0`.
    pub fn solve_cell(&self, e0: &[C64]) -> Result<Solution> {
        let p = self.problem;
        let m = p.m();
        if e0.len() != m {
            return Err(Error::Shape(format!("applied field must have {m} components")));
        }
        let start = self.options.clock.map(|c| c());
        let grid = p.grid();
        let n = grid.points();
        // rhs = Γ₁ F(s − L E₀)
        let mut rhs = vec![ZERO; n * m];
        let mut le0 = vec![ZERO; m];
        for q in 0..n {
            linalg::mat_vec(m, m, self.l.at(q), e0, &mut le0);
            let s = p.source().at(q);
            for a in 0..m {
                rhs[q * m + a] = s[a] - le0[a];
            }
        }
        self.forward(&mut rhs);
        let reference = krylov::norm(&rhs);
        self.project(&mut rhs)?;
        let b_norm = krylov::norm(&rhs);
        // Residuals below roundoff of the unprojected right-hand side are not resolvable.
        let noise = 1e-14 * reference;
        let target = (self.options.tolerance * b_norm).max(0.1 * noise);
        let sys = CoefficientSystem { solver: self };
        let max_iter = self.max_iterations();
        let mut warnings = self.warnings.clone();
        let use_cg = match self.options.method {
            Method::Auto => self.hermitian,
            Method::HermitianCg => true,
            Method::GeneralKrylov => false,
        };
        if use_cg && !self.hermitian {
            warnings.push(String::from("conjugate gradients requested for a non-Hermitian operator"));
        }
        let restart = self.options.gmres_restart.min((GMRES_BASIS_BUDGET / (n * m).max(1)).max(8));
        let (outcome, method) = if b_norm == 0.0 {
            (
                krylov::Outcome { x: vec![ZERO; n * m], iterations: 0, estimate: 0.0, stop: Stop::Converged, energy: Vec::new() },
                if use_cg { MethodUsed::HermitianCg } else { MethodUsed::GeneralKrylov },
            )
        } else if use_cg {
            let o = krylov::pcg(&sys, &rhs, vec![ZERO; n * m], target, max_iter, self.options.record_energy)?;
            if o.stop == Stop::Indefinite {
                warnings.push(String::from(
                    "operator is not positive definite on the range of the projection; switched to GMRES (a null-T shift may restore definiteness)",
                ));
                let used = o.iterations;
                let mut g = krylov::gmres(&sys, &rhs, vec![ZERO; n * m], target, max_iter.saturating_sub(used).max(1), restart)?;
                g.iterations += used;
                g.energy = o.energy;
                (g, MethodUsed::GeneralKrylov)
            } else {
                (o, MethodUsed::HermitianCg)
            }
        } else {
            (krylov::gmres(&sys, &rhs, vec![ZERO; n * m], target, max_iter, restart)?, MethodUsed::GeneralKrylov)
        };
        // Fields from the coefficients.
        let mut ev = outcome.x.clone();
        self.inverse(&mut ev);
        for q in 0..n {
            for a in 0..m {
                ev[q * m + a] += e0[a];
            }
        }
        let e = Field::new(grid, p.layout(), Space::Real, ev)?;
        let mut jv = e.values().to_vec();
        self.multiply(&mut jv);
        for (jq, sq) in jv.iter_mut().zip(p.source().values()) {
            *jq -= sq;
        }
        let j = Field::new(grid, p.layout(), Space::Real, jv)?;
        let j0 = j.average();
        let residuals = self.residual_fields(&e, &j)?;
        let relative_residual = if b_norm == 0.0 { 0.0 } else { residuals.equilibrium / b_norm };
        // Rounding of E is amplified by λ in the penalized entries of J; residuals below that
        // level carry no information about the finite part of the problem.
        let lambda_max = p.operator().penalties().iter().map(|q| q.lambda.abs()).fold(0.0, f64::max);
        let penalty_noise = (lambda_max > 0.0).then(|| 1e-15 * lambda_max * krylov::norm(&outcome.x));
        let floor = noise.max(penalty_noise.unwrap_or(0.0));
        // Stagnation at the penalty floor is acceptable.
        let stopped = outcome.stop == Stop::Converged || (penalty_noise.is_some() && outcome.stop == Stop::Stagnated);
        let converged = stopped && residuals.equilibrium <= (10.0 * self.options.tolerance * b_norm).max(floor);
        match outcome.stop {
            Stop::MaxIterations => warnings.push(format!("no convergence within {max_iter} iterations")),
            Stop::Stagnated => warnings.push(String::from("GMRES stagnated")),
            _ => {}
        }
        let wall_time = match (self.options.clock, start) {
            (Some(c), Some(s)) => Some(c() - s),
            _ => None,
        };
        let report = SolveReport {
            iterations: outcome.iterations,
            converged,
            method,
            preconditioned: self.precond.is_some(),
            relative_residual,
            residual_estimate: if b_norm == 0.0 { 0.0 } else { outcome.estimate / b_norm },
            rhs_norm: b_norm,
            penalty_floor: penalty_noise.map(|v| if b_norm == 0.0 { 0.0 } else { v / b_norm }),
            residuals,
            non_hermitian: !self.hermitian,
            penalty_active: !p.operator().penalties().is_empty(),
            warnings,
            wall_time,
            energy: outcome.energy,
        };
        Ok(Solution { e, j, j0, report })
    }

    /// Decomposed residual norms of candidate fields, measured in Fourier space.
    pub fn residual_fields(&self, e: &Field, j: &Field) -> Result<ResidualReport> {
        let p = self.problem;
        let m = p.m();
        e.require_space(Space::Real)?;
        j.require_space(Space::Real)?;
        if e.m() != m || j.m() != m || e.grid() != p.grid() || j.grid() != p.grid() {
            return Err(Error::Shape(String::from("fields do not match the problem")));
        }
        let mut law = e.values().to_vec();
        self.multiply(&mut law);
        for ((l, jv), s) in law.iter_mut().zip(j.values()).zip(p.source().values()) {
            *l = jv - (*l - s);
        }
        self.forward(&mut law);
        let constitutive = krylov::norm(&law);
        let mut ev = e.values().to_vec();
        self.forward(&mut ev);
        let mut pe = ev.clone();
        self.project(&mut pe)?;
        // Γ̄₂E = E − ⟨E⟩ − Γ₁E
        for a in 0..m {
            ev[a] = ZERO;
        }
        for (x, y) in ev.iter_mut().zip(&pe) {
            *x -= y;
        }
        let compatibility = krylov::norm(&ev);
        let mut jv = j.values().to_vec();
        self.forward(&mut jv);
        self.project(&mut jv)?;
        let equilibrium = krylov::norm(&jv);
        Ok(ResidualReport { constitutive, compatibility, equilibrium })
    }
}

struct CoefficientSystem<'s, 'a> {
    solver: &'s Solver<'a>,
}

impl System for CoefficientSystem<'_, '_> {
    fn len(&self) -> usize {
        self.solver.problem.grid().points() * self.solver.problem.m()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) -> Result<()> {
        self.solver.apply_coefficients(x, y)
    }

    fn precondition(&self, r: &[C64], z: &mut [C64]) -> Result<()> {
        self.solver.precondition_coefficients(r, z)
    }
}

/// One application of `Γ₁ F L F⁻¹` to a Fourier-space field. The input is projected first.
pub fn apply_projected(p: &Problem, e: &Field, backend: &dyn FourierBackend) -> Result<Field> {
    e.require_space(Space::Fourier)?;
    if e.m() != p.m() || e.grid() != p.grid() {
        return Err(Error::Shape(String::from("field does not match the problem")));
    }
    let s = Solver::new(p, backend, SolveOptions { precondition: false, ..SolveOptions::default() })?;
    let mut x = e.values().to_vec();
    s.project(&mut x)?;
    let mut y = vec![ZERO; x.len()];
    s.apply_coefficients(&x, &mut y)?;
    Field::new(p.grid(), p.layout(), Space::Fourier, y)
}

/// Cell problem: `E = E₀ + Ẽ` with `Γ₁Ẽ = Ẽ`, `Γ₁J = 0` away from `k = 0`.
pub fn solve_cell(p: &Problem, e0: &[C64], options: &SolveOptions, backend: &dyn FourierBackend) -> Result<Solution> {
    Solver::new(p, backend, options.clone())?.solve_cell(e0)
}

/// `E = (Γ₁LΓ₁)⁻¹Γ₁s` on the periodic cell, which stands in for the unbounded body.
pub fn solve_infinite(p: &Problem, options: &SolveOptions, backend: &dyn FourierBackend) -> Result<Solution> {
    let zero = vec![ZERO; p.m()];
    solve_cell(p, &zero, options, backend)
}

/// Decomposed residual of candidate fields for `p`.
pub fn residual(p: &Problem, e: &Field, j: &Field, backend: &dyn FourierBackend) -> Result<ResidualReport> {
    let s = Solver::new(p, backend, SolveOptions { precondition: false, ..SolveOptions::default() })?;
    s.residual_fields(e, j)
}
