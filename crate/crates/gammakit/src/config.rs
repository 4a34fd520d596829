//! JSON problem configuration.
//!
//! A config names a physics tag, a grid, per-phase material parameters, an optional phase map
//! and an optional source. Unknown keys are rejected at every level. Material parameters are
//! lists with one entry per phase; an entry is a scalar (times the natural identity), a
//! row-major matrix, or `{"kappa", "mu"}` for isotropic elastic moduli.

use std::fs;
use std::path::{Path, PathBuf};

use gammakit_core::physics::{self, Antisymmetric, OseenSign};
use gammakit_core::{
    Block, BlockKind, Field, FourierBackend, Grid, Layout, MatrixField, Method, PhaseMap, Problem, SolveOptions, Space,
    C64,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{io_err, Error, Result};
use crate::gfld;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// A real number or `{"re", "im"}`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Real(f64),
    Complex { re: f64, im: f64 },
}

impl Num {
    pub fn c64(self) -> C64 {
        match self {
            Num::Real(v) => C64::new(v, 0.0),
            Num::Complex { re, im } => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum TensorValue {
    Scalar(Num),
    Matrix(Vec<Vec<Num>>),
    Isotropic { kappa: Num, mu: Num },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub samples: Vec<usize>,
    #[serde(default)]
    pub lengths: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhasesConfig {
    // Braced so that stray keys are rejected; serde ignores them on unit variants.
    Uniform {},
    Checkerboard {},
    /// Phase 2 inside the ball, phase 1 outside.
    Disk { center: Vec<f64>, radius: f64 },
    Laminate { axis: usize, fraction: f64 },
    /// Raw `u8` labels starting at 1, one per point, axis 0 fastest.
    Voxels { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    /// Integer wave numbers per axis.
    pub index: Vec<i64>,
    pub amplitude: Vec<Num>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceConfig {
    /// Constant value per phase.
    Phases { values: Vec<Vec<Num>> },
    /// `Σ a e^{ik·x}`, plus the complex conjugate of every mode when `real` is set.
    Spectrum {
        modes: Vec<Mode>,
        #[serde(default = "yes")]
        real: bool,
    },
    Gfld { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub method: Option<Method>,
    #[serde(default)]
    pub precondition: Option<bool>,
    #[serde(default)]
    pub gmres_restart: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub physics: String,
    pub grid: GridConfig,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub phases: Option<PhasesConfig>,
    #[serde(default)]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub penalty: Option<f64>,
    /// Mean field `E₀` for `solve`; zero when absent.
    #[serde(default)]
    pub applied: Option<Vec<Num>>,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
}

/// A parsed config together with the directory its relative paths resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub base: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::parse(&text, base)
    }

    /// Parses and validates `text`; parameters are checked against the physics tag here so that
    /// errors surface before any computation.
    pub fn parse(text: &str, base: PathBuf) -> Result<RunConfig> {
        let problem: ProblemConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = RunConfig { problem, base };
        cfg.typed_params()?;
        Ok(cfg)
    }

    /// Replaces every sample count by `n`.
    pub fn set_resolution(&mut self, n: usize) -> Result<()> {
        if matches!(self.problem.phases, Some(PhasesConfig::Voxels { .. })) {
            return Err(Error::Config("--resolution cannot resample a voxel phase map".into()));
        }
        self.problem.grid.samples.iter_mut().for_each(|s| *s = n);
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.problem.grid;
        let lengths = g.lengths.clone().unwrap_or_else(|| vec![1.0; g.samples.len()]);
        Grid::new(&g.samples, &lengths).map_err(|e| Error::Config(format!("grid: {e}")))
    }

    pub fn phase_map(&self, grid: &Grid) -> Result<PhaseMap> {
        let bad = |e: gammakit_core::Error| Error::Config(format!("phases: {e}"));
        match self.problem.phases.as_ref().unwrap_or(&PhasesConfig::Uniform {}) {
            PhasesConfig::Uniform {} => PhaseMap::new(grid, &vec![1; grid.points()]).map_err(bad),
            PhasesConfig::Checkerboard {} => PhaseMap::checkerboard(grid).map_err(bad),
            PhasesConfig::Disk { center, radius } => {
                if center.len() != grid.dim() {
                    return Err(Error::Config(format!("phases.center: expected {} coordinates", grid.dim())));
                }
                PhaseMap::disk(grid, center, *radius).map_err(bad)
            }
            PhasesConfig::Laminate { axis, fraction } => {
                if *axis >= grid.dim() {
                    return Err(Error::Config(format!("phases.axis: {axis} out of range")));
                }
                PhaseMap::laminate(grid, *axis, *fraction).map_err(bad)
            }
            PhasesConfig::Voxels { path } => {
                let path = self.resolve(path);
                let bytes = fs::read(&path).map_err(io_err(&path))?;
                let labels: Vec<u32> = bytes.iter().map(|&b| b as u32).collect();
                PhaseMap::new(grid, &labels).map_err(bad)
            }
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        let mut o = SolveOptions::default();
        if let Some(s) = &self.problem.solver {
            if let Some(t) = s.tolerance {
                o.tolerance = t;
            }
            o.max_iterations = s.max_iterations.or(o.max_iterations);
            o.method = s.method.unwrap_or(o.method);
            o.precondition = s.precondition.unwrap_or(o.precondition);
            o.gmres_restart = s.gmres_restart.unwrap_or(o.gmres_restart);
        }
        o
    }

    pub fn applied(&self, m: usize) -> Result<Vec<C64>> {
        match &self.problem.applied {
            None => Ok(vec![ZERO; m]),
            Some(v) if v.len() == m => Ok(v.iter().map(|n| n.c64()).collect()),
            Some(v) => Err(Error::Config(format!("applied: {} components, problem has {m}", v.len()))),
        }
    }

    fn typed_params(&self) -> Result<Params> {
        let value = serde_json::Value::Object(self.problem.params.clone());
        fn parse<T: DeserializeOwned>(v: serde_json::Value, wrap: fn(T) -> Params) -> Result<Params> {
            serde_json::from_value(v).map(wrap).map_err(|e| Error::Config(format!("params: {e}")))
        }
        match self.problem.physics.as_str() {
            "conductivity" => parse(value, Params::Conductivity),
            "magnetostatics" => parse(value, Params::Magnetostatics),
            "thermoelectric" => parse(value, Params::Thermoelectric),
            "dielectric-cg" => parse(value, Params::DielectricCg),
            "magnetotransport" => parse(value, Params::Magnetotransport),
            "elasticity" => parse(value, Params::Elasticity),
            "compliance-elasticity" => parse(value, Params::ComplianceElasticity),
            "torsion" => parse(value, Params::Torsion),
            "thermoelasticity" => parse(value, Params::Thermoelasticity),
            "coupled-eme" => parse(value, Params::CoupledEme),
            "viscoelastic-cg" => parse(value, Params::ViscoelasticCg),
            "graphene" => parse(value, Params::Graphene),
            "oseen" => parse(value, Params::Oseen),
            other => Err(Error::Config(format!("physics: unknown tag {other:?} (see `gammakit catalog`)"))),
        }
    }

    /// Builds the problem described by the config.
    pub fn build(&self, backend: &dyn FourierBackend) -> Result<Problem> {
        let grid = self.grid()?;
        let phases = self.phase_map(&grid)?;
        let d = grid.dim();
        let n = d * (d + 1) / 2;
        let t = Tensors { phases: &phases, dim: d };
        let params = self.typed_params()?;
        let source_layout = |kinds: &[BlockKind]| Layout::new(d, kinds.iter().map(|&k| Block::new(k, "s")).collect());
        let src = |kinds: &[BlockKind]| -> Result<Option<Field>> {
            let layout = source_layout(kinds)?;
            self.source(&grid, &phases, &layout)
        };
        let core = |e: gammakit_core::Error| Error::Config(format!("{}: {e}", self.problem.physics));
        use BlockKind::*;
        let problem = match params {
            Params::Conductivity(p) => {
                let s = src(&[Vector])?;
                physics::build_conductivity(&grid, t.square("sigma", &p.sigma, d)?, s.as_ref())
            }
            Params::Magnetostatics(p) => {
                let s = src(&[Vector])?;
                physics::build_magnetostatics(&grid, t.square("mu", &p.mu, d)?, s.as_ref(), None)
            }
            Params::Thermoelectric(p) => {
                let s = src(&[Vector, Vector])?;
                physics::build_thermoelectric(
                    &grid,
                    t.square("l11", &p.l11, d)?,
                    t.square("l12", &p.l12, d)?,
                    t.square("l21", &p.l21, d)?,
                    t.square("l22", &p.l22, d)?,
                    s.as_ref(),
                )
            }
            Params::DielectricCg(p) => {
                let s = src(&[Vector])?;
                physics::build_dielectric_cg(&grid, t.square("eps_real", &p.eps_real, d)?, t.square("eps_imag", &p.eps_imag, d)?, s.as_ref())
            }
            Params::Magnetotransport(p) => {
                let s = src(&[Vector])?;
                let sigma_s = t.square("sigma_s", &p.sigma_s, d)?;
                match (&p.sigma_a, &p.velocity) {
                    (Some(a), None) => {
                        let a = t.square("sigma_a", a, d)?;
                        physics::build_magnetotransport(&grid, sigma_s, Antisymmetric::Sigma(a), s.as_ref(), backend)
                    }
                    (None, Some(path)) => {
                        let v = gfld::read_file(&self.resolve(path))?;
                        physics::build_magnetotransport(&grid, sigma_s, Antisymmetric::Velocity(&v), s.as_ref(), backend)
                    }
                    _ => return Err(Error::Config("params: give exactly one of sigma_a and velocity".into())),
                }
            }
            Params::Elasticity(p) => {
                let s = src(&[SymMatrix])?;
                physics::build_elasticity(&grid, t.stiffness("stiffness", &p.stiffness)?, s.as_ref(), None)
            }
            Params::ComplianceElasticity(p) => {
                let s = src(&[SymMatrix])?;
                physics::build_compliance_elasticity(&grid, t.compliance("compliance", &p.compliance)?, s.as_ref())
            }
            Params::Torsion(p) => {
                let s = src(&[Vector])?;
                physics::build_torsion(
                    &grid,
                    t.matrix("c1313", &p.c1313, 1, 1, &[C64::new(1.0, 0.0)])?,
                    t.matrix("c1323", &p.c1323, 1, 1, &[C64::new(1.0, 0.0)])?,
                    t.matrix("c2323", &p.c2323, 1, 1, &[C64::new(1.0, 0.0)])?,
                    p.tau,
                    s.as_ref(),
                )
            }
            Params::Thermoelasticity(p) => {
                let s = src(&[SymMatrix, Scalar])?;
                let unit: Vec<C64> = (0..n).map(|i| C64::new(if i < d { 1.0 } else { 0.0 }, 0.0)).collect();
                physics::build_thermoelasticity(
                    &grid,
                    t.compliance("compliance", &p.compliance)?,
                    t.matrix("alpha", &p.alpha, n, 1, &unit)?,
                    t.matrix("c_over_t0", &p.c_over_t0, 1, 1, &[C64::new(1.0, 0.0)])?,
                    s.as_ref(),
                )
            }
            Params::CoupledEme(p) => {
                let s = src(&[SymMatrix, Vector, Vector])?;
                let none = vec![ZERO; n * d];
                physics::build_coupled_eme(
                    &grid,
                    t.compliance("compliance", &p.compliance)?,
                    t.matrix("piezoelectric", &p.piezoelectric, n, d, &none)?,
                    t.matrix("piezomagnetic", &p.piezomagnetic, n, d, &none)?,
                    t.square("permittivity", &p.permittivity, d)?,
                    t.square("magnetoelectric", &p.magnetoelectric, d)?,
                    t.square("permeability", &p.permeability, d)?,
                    s.as_ref(),
                )
            }
            Params::ViscoelasticCg(p) => {
                let s = src(&[SymMatrix])?;
                physics::build_viscoelastic_cg(&grid, t.stiffness("stiffness_real", &p.stiffness_real)?, t.stiffness("stiffness_imag", &p.stiffness_imag)?, s.as_ref())
            }
            Params::Graphene(p) => {
                if d != 2 {
                    return Err(Error::Config("graphene: grid must be two dimensional".into()));
                }
                let s = src(&[Vector])?;
                let one = [C64::new(1.0, 0.0)];
                physics::build_graphene(&grid, t.matrix("sigma0", &p.sigma0, 1, 1, &one)?, t.matrix("d_ell", &p.d_ell, 1, 1, &one)?, self.problem.penalty, s.as_ref())
            }
            Params::Oseen(p) => {
                let s = src(&[Vector])?;
                let one = [C64::new(1.0, 0.0)];
                physics::build_oseen(
                    &grid,
                    p.rho,
                    &p.velocity,
                    t.matrix("eta", &p.eta, 1, 1, &one)?,
                    self.problem.penalty,
                    s.as_ref(),
                    p.sign.unwrap_or(OseenSign::Plus),
                )
            }
        };
        problem.map_err(core)
    }

    fn source(&self, grid: &Grid, phases: &PhaseMap, layout: &Layout) -> Result<Option<Field>> {
        let m = layout.m();
        let Some(cfg) = &self.problem.source else { return Ok(None) };
        let field = match cfg {
            SourceConfig::Phases { values } => {
                if values.iter().any(|v| v.len() != m) {
                    return Err(Error::Config(format!("source.values: each phase needs {m} components")));
                }
                let vals: Vec<Vec<C64>> = values.iter().map(|v| v.iter().map(|n| n.c64()).collect()).collect();
                phases.field(layout, &vals).map_err(|e| Error::Config(format!("source: {e}")))?
            }
            SourceConfig::Spectrum { modes, real } => {
                let d = grid.dim();
                for (i, mode) in modes.iter().enumerate() {
                    if mode.index.len() != d || mode.amplitude.len() != m {
                        return Err(Error::Config(format!(
                            "source.modes[{i}]: index needs {d} entries and amplitude {m} components"
                        )));
                    }
                }
                Field::from_fn(grid, layout, |p, out| {
                    out.iter_mut().for_each(|v| *v = ZERO);
                    let x = grid.position(p);
                    for mode in modes {
                        let phase: f64 = (0..d)
                            .map(|a| 2.0 * std::f64::consts::PI * mode.index[a] as f64 * x[a] / grid.lengths()[a])
                            .sum();
                        let w = C64::new(phase.cos(), phase.sin());
                        for (o, a) in out.iter_mut().zip(&mode.amplitude) {
                            let term = a.c64() * w;
                            *o += if *real { term + term.conj() } else { term };
                        }
                    }
                })
            }
            SourceConfig::Gfld { path } => {
                let f = gfld::read_file(&self.resolve(path))?;
                if f.grid() != grid || f.m() != m || f.space() != Space::Real {
                    return Err(Error::Config(format!("source: GFLD file must hold a real-space {m}-component field on the config grid")));
                }
                f.with_layout(layout)?
            }
        };
        Ok(Some(field))
    }
}

/// Per-phase tensor parameters turned into matrix fields.
struct Tensors<'a> {
    phases: &'a PhaseMap,
    dim: usize,
}

impl Tensors<'_> {
    fn per_phase(&self, name: &str, values: &[TensorValue]) -> Result<()> {
        if values.len() != self.phases.phases() {
            return Err(Error::Config(format!(
                "params.{name}: {} entries for {} phases",
                values.len(),
                self.phases.phases()
            )));
        }
        Ok(())
    }

    /// `unit` is the matrix a scalar entry multiplies.
    fn matrix(&self, name: &str, values: &[TensorValue], rows: usize, cols: usize, unit: &[C64]) -> Result<MatrixField> {
        self.per_phase(name, values)?;
        let mats = values
            .iter()
            .enumerate()
            .map(|(i, v)| match v {
                TensorValue::Scalar(c) => Ok(unit.iter().map(|u| u * c.c64()).collect()),
                TensorValue::Matrix(rows_v) => {
                    if rows_v.len() != rows || rows_v.iter().any(|r| r.len() != cols) {
                        return Err(Error::Config(format!("params.{name}[{i}]: expected a {rows}×{cols} matrix")));
                    }
                    Ok(rows_v.iter().flatten().map(|n| n.c64()).collect())
                }
                TensorValue::Isotropic { .. } => {
                    Err(Error::Config(format!("params.{name}[{i}]: isotropic moduli only apply to stiffness and compliance")))
                }
            })
            .collect::<Result<Vec<Vec<C64>>>>()?;
        Ok(self.phases.matrix_field(rows, cols, mats)?)
    }

    fn square(&self, name: &str, values: &[TensorValue], n: usize) -> Result<MatrixField> {
        self.matrix(name, values, n, n, &identity(n))
    }

    fn isotropic_or(&self, name: &str, values: &[TensorValue], invert: bool) -> Result<MatrixField> {
        let d = self.dim;
        let n = d * (d + 1) / 2;
        if !values.iter().any(|v| matches!(v, TensorValue::Isotropic { .. })) {
            return self.square(name, values, n);
        }
        self.per_phase(name, values)?;
        let mats = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let m = match v {
                    TensorValue::Isotropic { kappa, mu } => physics::isotropic_stiffness(d, kappa.c64(), mu.c64()),
                    _ => return Err(Error::Config(format!("params.{name}[{i}]: mix of isotropic and explicit entries"))),
                };
                if invert {
                    gammakit_core::linalg::inverse(n, &m)
                        .ok_or_else(|| Error::Config(format!("params.{name}[{i}]: singular isotropic stiffness")))
                } else {
                    Ok(m)
                }
            })
            .collect::<Result<Vec<Vec<C64>>>>()?;
        Ok(self.phases.matrix_field(n, n, mats)?)
    }

    fn stiffness(&self, name: &str, values: &[TensorValue]) -> Result<MatrixField> {
        self.isotropic_or(name, values, false)
    }

    /// Isotropic entries give the compliance of the material with those moduli.
    fn compliance(&self, name: &str, values: &[TensorValue]) -> Result<MatrixField> {
        self.isotropic_or(name, values, true)
    }
}

fn identity(n: usize) -> Vec<C64> {
    let mut m = vec![ZERO; n * n];
    (0..n).for_each(|i| m[i * n + i] = C64::new(1.0, 0.0));
    m
}

enum Params {
    Conductivity(Conductivity),
    Magnetostatics(Magnetostatics),
    Thermoelectric(Thermoelectric),
    DielectricCg(DielectricCg),
    Magnetotransport(Magnetotransport),
    Elasticity(Elasticity),
    ComplianceElasticity(ComplianceElasticity),
    Torsion(Torsion),
    Thermoelasticity(Thermoelasticity),
    CoupledEme(CoupledEme),
    ViscoelasticCg(ViscoelasticCg),
    Graphene(Graphene),
    Oseen(Oseen),
}

type PerPhase = Vec<TensorValue>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Conductivity {
    sigma: PerPhase,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Magnetostatics {
    mu: PerPhase,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Thermoelectric {
    l11: PerPhase,
    l12: PerPhase,
    l21: PerPhase,
    l22: PerPhase,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DielectricCg {
    eps_real: PerPhase,
    eps_imag: PerPhase,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Magnetotransport {
    sigma_s: PerPhase,
    #[serde(default)]
    sigma_a: Option<PerPhase>,
    /// GFLD file holding a divergence-free, mean-free velocity.
    #[serde(default)]
    velocity: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Elasticity {
    stiffness: PerPhase,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplianceElasticity {
    compliance: PerPhase,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Torsion {
    c1313: PerPhase,
    c1323: PerPhase,
    c2323: PerPhase,
    #[serde(default)]
    tau: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Thermoelasticity {
    compliance: PerPhase,
    alpha: PerPhase,
    c_over_t0: PerPhase,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoupledEme {
    compliance: PerPhase,
    piezoelectric: PerPhase,
    piezomagnetic: PerPhase,
    permittivity: PerPhase,
    magnetoelectric: PerPhase,
    permeability: PerPhase,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ViscoelasticCg {
    stiffness_real: PerPhase,
    stiffness_imag: PerPhase,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Graphene {
    sigma0: PerPhase,
    d_ell: PerPhase,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Oseen {
    rho: f64,
    velocity: Vec<f64>,
    eta: PerPhase,
    #[serde(default)]
    sign: Option<OseenSign>,
}
