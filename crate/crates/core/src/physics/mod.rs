//! Problem builders for each theory and the structural transformations between problems.

mod builders;
mod catalog;
mod transforms;


use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

pub use builders::*;
pub use catalog::{catalog, CatalogEntry};
pub use transforms::*;

use crate::error::{Error, Result};
use crate::field::{Field, Space};
use crate::grid::Grid;
use crate::layout::Layout;
use crate::operator::LocalOperator;
use crate::projection::ProjectionSpec;
use crate::C64;

/// How a complex quasistatic law relates flux and field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Convention {
    /// `L` is a conductivity-type tensor `σ` whose Hermitian part is dissipative.
    Conductivity,
    /// `L` is a permittivity-type tensor `ε = −σ/(iω)`, dissipative through `(L − L†)/(2i)`.
    Permittivity,
}

/// A null-T shift applied to a problem: `L` became `L + c·T` and `J` became `J + c·T·E`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullTRecord {
    pub t: Vec<C64>,
    pub c: f64,
}

/// Descriptive record carried alongside a problem.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProblemMeta {
    /// Catalog tag of the theory.
    pub physics: String,
    /// Parameter summary, `name=value` entries.
    pub params: Vec<String>,
    pub warnings: Vec<String>,
    /// Convention of the complex moduli when the problem is quasistatic.
    pub convention: Option<Convention>,
    pub null_t: Option<NullTRecord>,
    /// Penalty value used for symbolic infinite moduli.
    pub penalty: Option<f64>,
}

impl ProblemMeta {
    pub fn new(physics: &str) -> ProblemMeta {
        ProblemMeta { physics: String::from(physics), ..ProblemMeta::default() }
    }

    pub fn param(mut self, entry: String) -> ProblemMeta {
        self.params.push(entry);
        self
    }
}

/// A linear problem `J = L E − s`, `Γ₁E = E`, `Γ₁J = 0` on a periodic cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    gamma: ProjectionSpec,
    operator: LocalOperator,
    source: Field,
    pub meta: ProblemMeta,
}

impl Problem {
    pub fn new(gamma: ProjectionSpec, operator: LocalOperator, source: Field, meta: ProblemMeta) -> Result<Problem> {
        gamma.check_layout(operator.layout())?;
        source.require_space(Space::Real)?;
        if source.layout() != operator.layout() || source.grid() != operator.grid() {
            return Err(Error::Shape(format!(
                "source on {:?} does not match operator layout {:?}",
                source.layout().kinds(),
                operator.layout().kinds()
            )));
        }
        Ok(Problem { gamma, operator, source, meta })
    }

    /// Problem with zero source.
    pub fn unforced(gamma: ProjectionSpec, operator: LocalOperator, meta: ProblemMeta) -> Result<Problem> {
        let source = Field::zeros(operator.grid(), operator.layout(), Space::Real);
        Problem::new(gamma, operator, source, meta)
    }

    pub fn grid(&self) -> &Grid {
        self.operator.grid()
    }

    pub fn layout(&self) -> &Layout {
        self.operator.layout()
    }

    pub fn m(&self) -> usize {
        self.operator.m()
    }

    pub fn gamma(&self) -> &ProjectionSpec {
        &self.gamma
    }

    pub fn operator(&self) -> &LocalOperator {
        &self.operator
    }

    pub fn source(&self) -> &Field {
        &self.source
    }

    pub fn with_source(&self, source: Field) -> Result<Problem> {
        Problem::new(self.gamma.clone(), self.operator.clone(), source, self.meta.clone())
    }

    pub fn with_operator(&self, operator: LocalOperator) -> Result<Problem> {
        Problem::new(self.gamma.clone(), operator, self.source.clone(), self.meta.clone())
    }

    /// Same geometry and projection with `L → L†` and zero source.
    pub fn adjoint(&self) -> Result<Problem> {
        let mut meta = self.meta.clone();
        meta.params.push(String::from("adjoint"));
        Problem::unforced(self.gamma.clone(), self.operator.adjoint(), meta)
    }
}
