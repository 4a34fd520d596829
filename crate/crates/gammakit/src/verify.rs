//! Named invariant batteries run by `gammakit verify`.

use gammakit_core::exact::{self, Subspace};
use gammakit_core::homogenize::{check_adjoint, effective_source, effective_tensor, perturb_effective, unit_solutions};
use gammakit_core::physics::{self, OseenSign};
use gammakit_core::projection::{gamma_from_d, verify_projection};
use gammakit_core::{
    linalg, Block, BlockKind, DSymbol, Field, FourierBackend, Grid, Layout, LocalOperator, MatrixField, PhaseMap, Problem,
    ProjectionSpec, SolveOptions, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const SUITES: [&str; 8] = ["projections", "adjoint", "dual", "nullt", "levin", "closure", "perturb", "penalty"];

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn c(v: f64) -> C64 {
    C64::new(v, 0.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Pass iff `value <= tolerance`.
    pub tolerance: f64,
    pub passed: bool,
    pub detail: serde_json::Value,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64, detail: serde_json::Value) -> Check {
        Check { name: name.into(), value, tolerance, passed: value <= tolerance, detail }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// Inputs shared by the suites.
pub struct Context<'a> {
    pub backend: &'a dyn FourierBackend,
    pub seed: u64,
    /// Samples per axis for the built-in scenarios.
    pub resolution: Option<usize>,
    pub tolerance: Option<f64>,
    /// Problem replacing the built-in scenario, for the suites that accept one.
    pub config: Option<&'a RunConfig>,
}

impl Context<'_> {
    fn options(&self, default: f64) -> SolveOptions {
        let mut o = self.config.map(RunConfig::solve_options).unwrap_or_default();
        o.tolerance = self.tolerance.unwrap_or(default);
        o
    }

    fn grid(&self, default: usize) -> Result<Grid> {
        Ok(Grid::cube(2, self.resolution.unwrap_or(default))?)
    }

    fn configured(&self) -> Result<Option<Problem>> {
        self.config.map(|c| c.build(self.backend)).transpose()
    }
}

pub fn run(suite: &str, ctx: &Context<'_>) -> Result<SuiteReport> {
    let uses_config = matches!(suite, "adjoint" | "dual" | "nullt" | "perturb");
    if ctx.config.is_some() && !uses_config {
        return Err(Error::Config(format!("suite {suite:?} runs fixed scenarios and takes no --config")));
    }
    let checks = match suite {
        "projections" => projections(ctx)?,
        "adjoint" => adjoint(ctx)?,
        "dual" => dual(ctx)?,
        "nullt" => nullt(ctx)?,
        "levin" => levin(ctx)?,
        "closure" => closure(ctx)?,
        "perturb" => perturb(ctx)?,
        "penalty" => penalty(ctx)?,
        other => return Err(Error::Config(format!("unknown suite {other:?}; expected one of {}", SUITES.join(", ")))),
    };
    Ok(SuiteReport { suite: suite.to_string(), seed: ctx.seed, passed: checks.iter().all(|c| c.passed), checks })
}

fn unconverged(name: &str) -> Check {
    Check::new(format!("{name}: solves converged"), 1.0, 0.0, json!("a cell solve did not converge"))
}

fn converged(name: &str, ok: bool) -> Option<Check> {
    (!ok).then(|| unconverged(name))
}

fn projections(ctx: &Context<'_>) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for entry in physics::catalog() {
        for &d in &entry.dims {
            let r = verify_projection(&entry.gamma, d, 1000, ctx.seed)?;
            let detail = serde_json::to_value(&r)?;
            out.push(Check::new(format!("{} d={d}: idempotence", entry.tag), r.idempotence, 1e-10, detail.clone()));
            out.push(Check::new(format!("{} d={d}: hermitian", entry.tag), r.hermitian, 1e-10, detail));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    for d in [2, 3] {
        let cases = [
            ("gradient", DSymbol::gradient(d), ProjectionSpec::Grad),
            ("divergence-free", DSymbol::divergence_free(d), ProjectionSpec::DivFree),
            ("symmetrized gradient", DSymbol::symmetrized_gradient(d), ProjectionSpec::Elastic),
        ];
        for (name, symbol, closed) in cases {
            let mut worst: f64 = 0.0;
            for _ in 0..1000 {
                let scale = 10f64.powf(rng.random_range(-2.0..2.0));
                let k: Vec<f64> = (0..d).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
                let a = gamma_from_d(&symbol, &k)?;
                worst = worst.max(linalg::frobenius(&linalg::sub(&a, &closed.evaluate(&k)?)));
            }
            out.push(Check::new(format!("gamma_from_d {name} d={d}"), worst, 1e-12, json!({"samples": 1000})));
        }
    }
    Ok(out)
}

/// Random non-symmetric, coercive 2×2 conductivity per point.
fn random_sigma(grid: &Grid, seed: u64) -> Result<MatrixField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = grid.points();
    let mut v = Vec::with_capacity(4 * pts);
    for _ in 0..pts {
        let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let h = rng.random_range(-1.0..1.0);
        // A Aᵀ + I plus an antisymmetric part.
        let s00 = a[0] * a[0] + a[1] * a[1] + 1.0;
        let s01 = a[0] * a[2] + a[1] * a[3];
        let s11 = a[2] * a[2] + a[3] * a[3] + 1.0;
        v.extend([c(s00), c(s01 - h), c(s01 + h), c(s11)]);
    }
    Ok(MatrixField::dense(pts, 2, 2, v)?)
}

fn adjoint(ctx: &Context<'_>) -> Result<Vec<Check>> {
    let p = match ctx.configured()? {
        Some(p) => p,
        None => {
            let grid = ctx.grid(32)?;
            physics::build_conductivity(&grid, random_sigma(&grid, ctx.seed)?, None)?
        }
    };
    let r = check_adjoint(&p, &ctx.options(1e-12), ctx.backend)?;
    let scale = linalg::frobenius(&r.l_star).max(1.0);
    let mut out = vec![Check::new(
        "(L†)* = (L*)†",
        r.defect / scale,
        1e-8,
        json!({"l_star": r.l_star, "l_star_of_adjoint": r.l_star_of_adjoint}),
    )];
    out.extend(converged("adjoint", r.converged));
    Ok(out)
}

fn two_phase_disk(grid: &Grid, a: f64, b: f64) -> Result<Problem> {
    let phases = PhaseMap::disk(grid, &[0.5, 0.5], 0.3)?;
    Ok(physics::build_conductivity(grid, phases.matrix_field(2, 2, vec![iso(a), iso(b)])?, None)?)
}

fn iso(v: f64) -> Vec<C64> {
    vec![c(v), ZERO, ZERO, c(v)]
}

fn dual(ctx: &Context<'_>) -> Result<Vec<Check>> {
    let p = match ctx.configured()? {
        Some(p) => p,
        None => two_phase_disk(&ctx.grid(64)?, 1.0, 5.0)?,
    };
    let opts = ctx.options(1e-10);
    let direct = effective_tensor(&p, &opts, ctx.backend)?;
    let dual = effective_tensor(&physics::dualize(&p)?, &opts, ctx.backend)?;
    let m = p.m();
    let prod = linalg::mat_mul(m, m, m, &dual.l_star, &direct.l_star);
    let mut eye = vec![ZERO; m * m];
    (0..m).for_each(|i| eye[i * m + i] = c(1.0));
    let mut out = vec![Check::new(
        "L*(dual) L* = I",
        linalg::frobenius(&linalg::sub(&prod, &eye)),
        1e-6,
        json!({"l_star": direct.l_star, "l_star_dual": dual.l_star}),
    )];
    out.extend(converged("dual", direct.all_converged() && dual.all_converged()));
    Ok(out)
}

fn nullt(ctx: &Context<'_>) -> Result<Vec<Check>> {
    let p = match ctx.configured()? {
        Some(p) => p,
        None => {
            let grid = ctx.grid(64)?;
            let phases = PhaseMap::checkerboard(&grid)?;
            physics::build_conductivity(&grid, phases.matrix_field(2, 2, vec![iso(4.0), iso(1.0)])?, None)?
        }
    };
    if p.meta.physics != "conductivity" || p.grid().dim() != 2 {
        return Err(Error::Config("nullt needs a two-dimensional conductivity problem".into()));
    }
    let shift = 0.3;
    let r = physics::rotation_2d();
    let q = physics::null_t_shift(&p, &r, shift, ctx.seed)?;
    let opts = ctx.options(1e-12);
    let base = unit_solutions(&p, &opts, ctx.backend)?;
    let shifted = unit_solutions(&q, &opts, ctx.backend)?;
    let mut delta = vec![ZERO; 4];
    let mut e_diff: f64 = 0.0;
    let mut e_scale: f64 = 0.0;
    for j in 0..2 {
        for i in 0..2 {
            delta[i * 2 + j] = shifted[j].j0[i] - base[j].j0[i];
        }
        e_diff = e_diff.max(shifted[j].e.sub(&base[j].e)?.max_abs());
        e_scale = e_scale.max(base[j].e.max_abs());
    }
    let expect: Vec<C64> = r.iter().map(|v| v * shift).collect();
    let mut out = vec![
        Check::new("L* shift = 0.3 R⊥", linalg::frobenius(&linalg::sub(&delta, &expect)), 1e-8, json!({"delta": delta})),
        Check::new("E unchanged", e_diff / e_scale.max(f64::MIN_POSITIVE), 1e-10, json!({"max_abs_e": e_scale})),
    ];
    let ok = base.iter().chain(&shifted).all(|s| s.report.converged);
    out.extend(converged("nullt", ok));
    Ok(out)
}

/// Two isotropic phases in a square cell with a centered circular inclusion.
pub struct LevinCase {
    pub kappa: [f64; 2],
    pub mu: [f64; 2],
    pub alpha: [f64; 2],
    pub radius: f64,
}

impl Default for LevinCase {
    fn default() -> LevinCase {
        LevinCase { kappa: [10.0, 2.0], mu: [5.0, 1.0], alpha: [1.0, 3.0], radius: 0.3 }
    }
}

pub struct LevinOutcome {
    pub kappa_star: f64,
    /// From the `θ` column of `L*`.
    pub alpha_tensor: f64,
    /// From the effective source of the stress-only problem at unit `θ`.
    pub alpha_source: f64,
    pub alpha_levin: f64,
    pub converged: bool,
}

pub fn levin_run(case: &LevinCase, grid: &Grid, opts: &SolveOptions, backend: &dyn FourierBackend) -> Result<LevinOutcome> {
    let d = grid.dim();
    let n = d * (d + 1) / 2;
    let phases = PhaseMap::disk(grid, &vec![0.5; d], case.radius)?;
    let compliance: Vec<Vec<C64>> = (0..2)
        .map(|i| {
            let stiff = physics::isotropic_stiffness(d, c(case.kappa[i]), c(case.mu[i]));
            linalg::inverse(n, &stiff).ok_or(gammakit_core::Error::Degenerate("singular stiffness"))
        })
        .collect::<std::result::Result<_, _>>()?;
    let unit: Vec<C64> = (0..n).map(|i| c(if i < d { 1.0 } else { 0.0 })).collect();
    let alpha: Vec<Vec<C64>> = case.alpha.iter().map(|&a| unit.iter().map(|u| u * a).collect()).collect();
    let s_field = phases.matrix_field(n, n, compliance.clone())?;
    let thermo = physics::build_thermoelasticity(
        grid,
        s_field.clone(),
        phases.matrix_field(n, 1, alpha.clone())?,
        phases.scalar_field(&[1.0, 1.0])?,
        None,
    )?;
    let eff = effective_tensor(&thermo, opts, backend)?;
    let m = n + 1;
    let s_star: Vec<C64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| eff.entry(i, j)).collect();
    let kappa_star = physics::bulk_modulus_from_compliance(d, &s_star).re;
    let alpha_tensor = (0..d).map(|i| eff.l_star[i * m + n].re).sum::<f64>() / d as f64;
    // Stress-only problem with source −θα(x) at θ = 1.
    let layout = Layout::new(d, vec![Block::new(BlockKind::SymMatrix, "s")])?;
    let minus_alpha: Vec<Vec<C64>> = alpha.iter().map(|a| a.iter().map(|v| -v).collect()).collect();
    let src: Field = phases.field(&layout, &minus_alpha)?;
    let stress = physics::build_compliance_elasticity(grid, s_field, Some(&src))?;
    let (s_eff, report) = effective_source(&stress, opts, backend)?;
    let alpha_source = (0..d).map(|i| s_eff[i].re).sum::<f64>() / d as f64;
    let alpha_levin = exact::levin_alpha(case.kappa[0], case.kappa[1], case.alpha[0], case.alpha[1], kappa_star)?;
    Ok(LevinOutcome { kappa_star, alpha_tensor, alpha_source, alpha_levin, converged: eff.all_converged() && report.converged })
}

fn levin(ctx: &Context<'_>) -> Result<Vec<Check>> {
    let grid = ctx.grid(128)?;
    let r = levin_run(&LevinCase::default(), &grid, &ctx.options(1e-10), ctx.backend)?;
    let detail = json!({
        "kappa_star": r.kappa_star,
        "alpha_star_tensor": r.alpha_tensor,
        "alpha_star_source": r.alpha_source,
        "alpha_star_levin": r.alpha_levin,
        "samples": grid.samples(),
    });
    let mut out = vec![
        Check::new("Levin vs effective source", (r.alpha_levin - r.alpha_source).abs() / r.alpha_source.abs(), 1e-3, detail.clone()),
        Check::new("Levin vs L* column", (r.alpha_levin - r.alpha_tensor).abs() / r.alpha_tensor.abs(), 1e-3, detail),
    ];
    out.extend(converged("levin", r.converged));
    Ok(out)
}

fn closure(ctx: &Context<'_>) -> Result<Vec<Check>> {
    let e11 = vec![c(1.0), ZERO, ZERO, ZERO];
    let eye = iso(1.0);
    let cases = [("span{e1⊗e1}", e11.clone(), true), ("span{I}", eye.clone(), false), ("span{R⊥}", physics::rotation_2d(), false)];
    let mut out = Vec::new();
    for (name, basis, expect_pass) in cases {
        let sub = Subspace::new(2, &[basis])?;
        let r = exact::check_closure(&sub, &ProjectionSpec::Grad, &eye, 2, 200, ctx.seed)?;
        let detail = serde_json::to_value(&r)?;
        let agrees = r.passed == expect_pass;
        out.push(Check::new(
            format!("{name} {}", if expect_pass { "closed" } else { "not closed, with witness" }),
            if agrees && (expect_pass || r.witness.is_some()) { 0.0 } else { 1.0 },
            0.0,
            detail,
        ));
    }
    // σ = I + β(x) e₁⊗e₁ stays in the pattern after homogenization.
    let grid = ctx.grid(64)?;
    let phases = PhaseMap::disk(&grid, &[0.5, 0.5], 0.3)?;
    let sigma = phases.matrix_field(2, 2, vec![vec![c(1.5), ZERO, ZERO, c(1.0)], vec![c(4.0), ZERO, ZERO, c(1.0)]])?;
    let p = physics::build_conductivity(&grid, sigma, None)?;
    let eff = effective_tensor(&p, &ctx.options(1e-10), ctx.backend)?;
    let off = [eff.entry(0, 1), eff.entry(1, 0), eff.entry(1, 1) - c(1.0)].iter().map(|v| v.norm()).fold(0.0, f64::max);
    out.push(Check::new("I + β e1⊗e1 homogenizes in pattern", off, 1e-8, json!({"l_star": eff.l_star})));
    out.extend(converged("closure", eff.all_converged()));
    Ok(out)
}

fn perturb(ctx: &Context<'_>) -> Result<Vec<Check>> {
    let p = match ctx.configured()? {
        Some(p) => p,
        None => two_phase_disk(&ctx.grid(32)?, 1.0, 3.0)?,
    };
    let grid = p.grid().clone();
    let m = p.m();
    let opts = ctx.options(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let random = |rng: &mut ChaCha8Rng, antisymmetric: bool| -> Result<LocalOperator> {
        let mut a: Vec<C64> = (0..m * m).map(|_| c(rng.random_range(-1.0..1.0))).collect();
        if antisymmetric {
            a = (0..m * m).map(|ij| (a[ij] - a[(ij % m) * m + ij / m]) * 0.5).collect();
        }
        // Supported on the second half of the cell along axis 0.
        let pts = grid.points();
        let half = grid.samples()[0] / 2;
        let f = MatrixField::from_fn(pts, m, m, |pt, out| {
            let on = grid.multi_index(pt)[0] >= half;
            out.iter_mut().zip(&a).for_each(|(o, v)| *o = if on { *v } else { ZERO });
        });
        Ok(LocalOperator::new(&grid, p.layout(), f)?)
    };
    let base = effective_tensor(&p, &opts, ctx.backend)?;
    let mut out = Vec::new();
    let mut ok = base.all_converged();
    for (name, antisym) in [("general", false), ("antisymmetric", true)] {
        let lp = random(&mut rng, antisym)?;
        let deriv = perturb_effective(&p, &lp, &opts, ctx.backend)?;
        let dn = linalg::frobenius(&deriv);
        for eps in [1e-3, 1e-4] {
            let shifted = p.operator().matrices().clone();
            let l_eps = MatrixField::zip_map(&[&shifted, lp.matrices()], m, m, |_, mats, o| {
                o.iter_mut().enumerate().for_each(|(i, v)| *v = mats[0][i] + mats[1][i] * eps);
                Ok(())
            })?;
            let q = p.with_operator(LocalOperator::new(&grid, p.layout(), l_eps)?)?;
            let eff = effective_tensor(&q, &opts, ctx.backend)?;
            ok &= eff.all_converged();
            let fd: Vec<C64> = eff.l_star.iter().zip(&base.l_star).map(|(a, b)| (a - b) / eps).collect();
            let err = linalg::frobenius(&linalg::sub(&fd, &deriv));
            out.push(Check::new(
                format!("{name} perturbation, eps={eps:e}"),
                err,
                10.0 * eps * dn,
                json!({"derivative": deriv, "finite_difference": fd}),
            ));
        }
    }
    out.extend(converged("perturb", ok));
    Ok(out)
}

/// RMS spectral divergence of the vector block starting at component `offset`.
pub fn divergence_rms(field: &Field, offset: usize, backend: &dyn FourierBackend) -> Result<f64> {
    let grid = field.grid();
    let d = grid.dim();
    let fh = field.to_fourier(backend)?;
    let total: f64 = (0..grid.points())
        .map(|p| {
            let k = grid.wave_vector(p);
            let x = &fh.at(p)[offset..offset + d];
            (0..d).map(|a| x[a] * C64::new(0.0, k[a])).sum::<C64>().norm_sqr()
        })
        .sum();
    // Parseval with the 1/N forward normalization.
    Ok(total.sqrt())
}

pub const PENALTIES: [f64; 3] = [1e4, 1e6, 1e8];

/// `λ · ‖∇·v‖` for each penalty in [`PENALTIES`], for the graphene and Oseen scenarios.
pub fn penalty_sweep(grid: &Grid, opts: &SolveOptions, backend: &dyn FourierBackend) -> Result<Vec<(&'static str, Vec<f64>, bool)>> {
    let phases = PhaseMap::disk(grid, &[0.5, 0.5], 0.3)?;
    let layout = Layout::new(2, vec![Block::new(BlockKind::Vector, "f")])?;
    let force = Field::from_fn(grid, &layout, |p, out| {
        let x = grid.position(p);
        let t = 2.0 * std::f64::consts::PI;
        out[0] = c((t * x[0]).sin() + (t * x[1]).cos());
        out[1] = c((t * x[1]).sin() + 0.5 * (t * x[0]).cos());
    });
    let mut rows = Vec::new();
    for tag in ["graphene", "oseen"] {
        let mut scaled = Vec::new();
        let mut ok = true;
        for &lambda in &PENALTIES {
            let p = match tag {
                "graphene" => physics::build_graphene(
                    grid,
                    phases.scalar_field(&[1.0, 2.0])?,
                    phases.scalar_field(&[0.1, 0.5])?,
                    Some(lambda),
                    Some(&force),
                )?,
                _ => physics::build_oseen(grid, 1.0, &[0.3, 0.2], phases.scalar_field(&[1.0, 2.0])?, Some(lambda), Some(&force), OseenSign::Plus)?,
            };
            let sol = gammakit_core::solver::solve_cell(&p, &vec![ZERO; p.m()], opts, backend)?;
            ok &= sol.report.converged;
            scaled.push(lambda * divergence_rms(&sol.e, 4, backend)?);
        }
        rows.push((tag, scaled, ok));
    }
    Ok(rows)
}

fn penalty(ctx: &Context<'_>) -> Result<Vec<Check>> {
    let grid = ctx.grid(32)?;
    let mut out = Vec::new();
    for (tag, scaled, ok) in penalty_sweep(&grid, &ctx.options(1e-12), ctx.backend)? {
        let hi = scaled.iter().cloned().fold(f64::MIN, f64::max);
        let lo = scaled.iter().cloned().fold(f64::MAX, f64::min);
        out.push(Check::new(
            format!("{tag}: λ‖∇·v‖ constant within a factor 3"),
            hi / lo,
            3.0,
            json!({"penalties": PENALTIES, "lambda_times_divergence": scaled}),
        ));
        out.extend(converged(tag, ok));
    }
    Ok(out)
}
