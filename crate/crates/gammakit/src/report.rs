//! JSON reports and CSV profiles.

use std::io::Write;

use gammakit_core::homogenize::EffectiveResponse;
use gammakit_core::{Field, Problem, SolveReport, C64};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ProblemSummary {
    pub physics: String,
    pub samples: Vec<usize>,
    pub lengths: Vec<f64>,
    pub layout: Vec<String>,
    pub params: Vec<String>,
    pub warnings: Vec<String>,
    pub penalty: Option<f64>,
}

impl ProblemSummary {
    pub fn of(p: &Problem) -> ProblemSummary {
        ProblemSummary {
            physics: p.meta.physics.clone(),
            samples: p.grid().samples().to_vec(),
            lengths: p.grid().lengths().to_vec(),
            layout: p.layout().blocks().iter().map(|b| b.label.clone()).collect(),
            params: p.meta.params.clone(),
            warnings: p.meta.warnings.clone(),
            penalty: p.meta.penalty,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutput {
    pub problem: ProblemSummary,
    pub applied: Vec<C64>,
    pub j0: Vec<C64>,
    pub report: SolveReport,
}

/// Effective response with complex entries as `[re, im]` pairs; `L_star` is a list of rows.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveOutput {
    pub problem: ProblemSummary,
    #[serde(rename = "L_star")]
    pub l_star: Vec<Vec<C64>>,
    pub s_star: Vec<C64>,
    pub basis: Vec<String>,
    /// `true` for every column whose solve failed.
    pub failed: Vec<bool>,
    pub reports: Vec<SolveReport>,
}

impl EffectiveOutput {
    pub fn new(p: &Problem, r: EffectiveResponse) -> EffectiveOutput {
        EffectiveOutput {
            problem: ProblemSummary::of(p),
            l_star: r.l_star.chunks(r.m).map(<[C64]>::to_vec).collect(),
            s_star: r.s_star,
            basis: r.basis,
            failed: r.failed,
            reports: r.reports,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Values of `fields` along the grid line through the cell center parallel to `axis`.
/// One row per node: index, coordinate, then `re` and `im` of every component of every field.
pub fn write_profile<W: Write>(mut w: W, axis: usize, fields: &[(&str, &Field)]) -> std::io::Result<()> {
    let grid = fields[0].1.grid();
    let mut header = vec!["index".to_string(), format!("x{axis}")];
    for (name, f) in fields {
        for c in 0..f.m() {
            header.push(format!("{name}{c}_re"));
            header.push(format!("{name}{c}_im"));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    let mut idx: Vec<usize> = grid.samples().iter().map(|n| n / 2).collect();
    for i in 0..grid.samples()[axis] {
        idx[axis] = i;
        let p = grid.flat_index(&idx);
        let mut row = vec![i.to_string(), format!("{:e}", i as f64 * grid.spacing(axis))];
        for (_, f) in fields {
            for v in f.at(p) {
                row.push(format!("{:e}", v.re));
                row.push(format!("{:e}", v.im));
            }
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
