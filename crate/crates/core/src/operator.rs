use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{Field, Space};
use crate::grid::Grid;
use crate::layout::Layout;
use crate::linalg::{self, pairwise_sum};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Uniform(Vec<C64>),
    /// `labels[p]` indexes `mats`.
    Phases { labels: Arc<Vec<u32>>, mats: Vec<Vec<C64>> },
    Dense(Vec<C64>),
}

/// A `rows × cols` complex matrix at every grid point, stored once per distinct value when the
/// field is uniform or piecewise constant.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    points: usize,
    rows: usize,
    cols: usize,
    storage: Storage,
}

impl MatrixField {
    pub fn uniform(points: usize, rows: usize, cols: usize, mat: Vec<C64>) -> Result<MatrixField> {
        if mat.len() != rows * cols {
            return Err(Error::Shape(format!("{} entries for a {rows}x{cols} matrix", mat.len())));
        }
        Ok(MatrixField { points, rows, cols, storage: Storage::Uniform(mat) })
    }

    /// Uniform real scalar.
    pub fn scalar(points: usize, value: f64) -> MatrixField {
        MatrixField { points, rows: 1, cols: 1, storage: Storage::Uniform(alloc::vec![C64::new(value, 0.0)]) }
    }

    pub fn dense(points: usize, rows: usize, cols: usize, values: Vec<C64>) -> Result<MatrixField> {
        if values.len() != points * rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for {points} points of {rows}x{cols} matrices",
                values.len()
            )));
        }
        Ok(MatrixField { points, rows, cols, storage: Storage::Dense(values) })
    }

    /// Piecewise-constant field; `labels` are zero-based indices into `mats`.
    pub fn phases(labels: Arc<Vec<u32>>, rows: usize, cols: usize, mats: Vec<Vec<C64>>) -> Result<MatrixField> {
        for (i, m) in mats.iter().enumerate() {
            if m.len() != rows * cols {
                return Err(Error::Shape(format!("phase {i}: {} entries for a {rows}x{cols} matrix", m.len())));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= mats.len()) {
            return Err(Error::Shape(format!("label {bad} out of range for {} phases", mats.len())));
        }
        Ok(MatrixField { points: labels.len(), rows, cols, storage: Storage::Phases { labels, mats } })
    }

    pub fn from_fn<F: FnMut(usize, &mut [C64])>(points: usize, rows: usize, cols: usize, mut f: F) -> MatrixField {
        let mut values = alloc::vec![C64::new(0.0, 0.0); points * rows * cols];
        for (p, chunk) in values.chunks_mut(rows * cols).enumerate() {
            f(p, chunk);
        }
        MatrixField { points, rows, cols, storage: Storage::Dense(values) }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.storage, Storage::Uniform(_))
    }

    pub fn at(&self, p: usize) -> &[C64] {
        match &self.storage {
            Storage::Uniform(m) => m,
            Storage::Phases { labels, mats } => &mats[labels[p] as usize],
            Storage::Dense(v) => {
                let s = self.rows * self.cols;
                &v[p * s..(p + 1) * s]
            }
        }
    }

    /// Distinct stored matrices with a representative point for each.
    pub fn distinct(&self) -> Vec<(usize, &[C64])> {
        match &self.storage {
            Storage::Uniform(m) => alloc::vec![(0, m.as_slice())],
            Storage::Phases { labels, mats } => {
                let mut first = alloc::vec![usize::MAX; mats.len()];
                for (p, &l) in labels.iter().enumerate() {
                    if first[l as usize] == usize::MAX {
                        first[l as usize] = p;
                    }
                }
                first
                    .iter()
                    .zip(mats)
                    .filter(|(p, _)| **p != usize::MAX)
                    .map(|(&p, m)| (p, m.as_slice()))
                    .collect()
            }
            Storage::Dense(_) => (0..self.points).map(|p| (p, self.at(p))).collect(),
        }
    }

    /// Pointwise combination of several fields with the same point count. `f` receives the
    /// representative point, the input matrices and the output buffer. Uniform and shared
    /// piecewise-constant storage is preserved.
    pub fn zip_map<F>(inputs: &[&MatrixField], rows: usize, cols: usize, mut f: F) -> Result<MatrixField>
    where
        F: FnMut(usize, &[&[C64]], &mut [C64]) -> Result<()>,
    {
        let points = inputs.first().map(|m| m.points).unwrap_or(0);
        if inputs.iter().any(|m| m.points != points) {
            return Err(Error::Shape(format!("matrix fields on different point counts")));
        }
        let size = rows * cols;
        if inputs.iter().all(|m| m.is_uniform()) {
            let args: Vec<&[C64]> = inputs.iter().map(|m| m.at(0)).collect();
            let mut out = alloc::vec![C64::new(0.0, 0.0); size];
            f(0, &args, &mut out)?;
            return Ok(MatrixField { points, rows, cols, storage: Storage::Uniform(out) });
        }
        let mut shared: Option<&Arc<Vec<u32>>> = None;
        let mut phased = true;
        for m in inputs {
            match &m.storage {
                Storage::Uniform(_) => {}
                Storage::Phases { labels, .. } => match shared {
                    None => shared = Some(labels),
                    Some(s) if Arc::ptr_eq(s, labels) || s == labels => {}
                    Some(_) => phased = false,
                },
                Storage::Dense(_) => phased = false,
            }
        }
        if phased {
            let labels = shared.expect("at least one phased input").clone();
            let n_phases = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
            let mut first = alloc::vec![usize::MAX; n_phases];
            for (p, &l) in labels.iter().enumerate() {
                if first[l as usize] == usize::MAX {
                    first[l as usize] = p;
                }
            }
            let mut mats = Vec::with_capacity(n_phases);
            for &p in &first {
                let mut out = alloc::vec![C64::new(0.0, 0.0); size];
                if p != usize::MAX {
                    let args: Vec<&[C64]> = inputs.iter().map(|m| m.at(p)).collect();
                    f(p, &args, &mut out)?;
                }
                mats.push(out);
            }
            return Ok(MatrixField { points, rows, cols, storage: Storage::Phases { labels, mats } });
        }
        let mut values = alloc::vec![C64::new(0.0, 0.0); points * size];
        let mut args: Vec<&[C64]> = Vec::with_capacity(inputs.len());
        for (p, chunk) in values.chunks_mut(size).enumerate() {
            args.clear();
            args.extend(inputs.iter().map(|m| m.at(p)));
            f(p, &args, chunk)?;
        }
        Ok(MatrixField { points, rows, cols, storage: Storage::Dense(values) })
    }

    pub fn map<F>(&self, rows: usize, cols: usize, mut f: F) -> Result<MatrixField>
    where
        F: FnMut(usize, &[C64], &mut [C64]) -> Result<()>,
    {
        MatrixField::zip_map(&[self], rows, cols, |p, a, out| f(p, a[0], out))
    }

    /// Cell average of the matrices.
    pub fn mean(&self) -> Vec<C64> {
        let size = self.rows * self.cols;
        let n = self.points;
        (0..size)
            .map(|e| pairwise_sum(n, &|p| self.at(p)[e]) / n as f64)
            .collect()
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.distinct()
            .iter()
            .flat_map(|(_, m)| m.iter())
            .fold(0.0f64, |acc, v| acc.max(v.norm()))
    }
}

/// Symbolic infinite modulus realized as `lambda · projector` on one diagonal block.
#[derive(Debug, Clone, PartialEq)]
pub struct Penalty {
    pub block: usize,
    /// Constant `b × b` matrix on the block, row-major.
    pub projector: Vec<C64>,
    pub lambda: f64,
}

/// The local map `L(x)` acting pointwise on real-space fields, plus penalty slots.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    grid: Grid,
    layout: Layout,
    matrices: MatrixField,
    penalties: Vec<Penalty>,
}

impl LocalOperator {
    pub fn new(grid: &Grid, layout: &Layout, matrices: MatrixField) -> Result<LocalOperator> {
        let m = layout.m();
        if matrices.rows() != m || matrices.cols() != m || matrices.points() != grid.points() {
            return Err(Error::Shape(format!(
                "operator of {}x{} matrices on {} points, layout needs {m}x{m} on {}",
                matrices.rows(),
                matrices.cols(),
                matrices.points(),
                grid.points()
            )));
        }
        if layout.dim() != grid.dim() {
            return Err(Error::Shape(format!("layout and grid dimensions differ")));
        }
        Ok(LocalOperator { grid: grid.clone(), layout: layout.clone(), matrices, penalties: Vec::new() })
    }

    /// The same matrix at every point.
    pub fn uniform(grid: &Grid, layout: &Layout, mat: Vec<C64>) -> Result<LocalOperator> {
        let m = layout.m();
        LocalOperator::new(grid, layout, MatrixField::uniform(grid.points(), m, m, mat)?)
    }

    pub fn identity(grid: &Grid, layout: &Layout) -> LocalOperator {
        let m = layout.m();
        LocalOperator::uniform(grid, layout, linalg::identity(m)).expect("identity has layout size")
    }

    pub fn with_penalty(mut self, penalty: Penalty) -> Result<LocalOperator> {
        if penalty.block >= self.layout.blocks().len() {
            return Err(Error::Shape(format!("penalty on missing block {}", penalty.block)));
        }
        let b = self.layout.block_size(penalty.block);
        if penalty.projector.len() != b * b {
            return Err(Error::Shape(format!("penalty projector must be {b}x{b}")));
        }
        self.penalties.push(penalty);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn m(&self) -> usize {
        self.layout.m()
    }

    /// Finite part of the operator.
    pub fn matrices(&self) -> &MatrixField {
        &self.matrices
    }

    pub fn penalties(&self) -> &[Penalty] {
        &self.penalties
    }

    /// Finite matrix plus penalty contributions at point `p`.
    pub fn matrix_at(&self, p: usize) -> Vec<C64> {
        let mut a = self.matrices.at(p).to_vec();
        self.add_penalties(&mut a);
        a
    }

    fn add_penalties(&self, a: &mut [C64]) {
        let m = self.m();
        for pen in &self.penalties {
            let r = self.layout.range(pen.block);
            let b = r.len();
            for i in 0..b {
                for j in 0..b {
                    a[(r.start + i) * m + r.start + j] += pen.projector[i * b + j] * pen.lambda;
                }
            }
        }
    }

    /// Operator with the penalty slots folded into the matrices.
    pub fn effective(&self) -> MatrixField {
        let m = self.m();
        if self.penalties.is_empty() {
            return self.matrices.clone();
        }
        self.matrices
            .map(m, m, |_, a, out| {
                out.copy_from_slice(a);
                self.add_penalties(out);
                Ok(())
            })
            .expect("penalty folding cannot fail")
    }

    /// Pointwise `L(x) f(x)`; each penalty slot adds `lambda · projector` applied to its block.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        f.require_space(Space::Real)?;
        if f.layout() != &self.layout || f.grid() != &self.grid {
            return Err(Error::Shape(format!("field does not match operator layout or grid")));
        }
        let m = self.m();
        let mut out = Field::zeros(&self.grid, &self.layout, Space::Real);
        {
            let dst = out.values_mut();
            for p in 0..self.grid.points() {
                linalg::mat_vec(m, m, self.matrices.at(p), f.at(p), &mut dst[p * m..(p + 1) * m]);
            }
            for pen in &self.penalties {
                let r = self.layout.range(pen.block);
                let b = r.len();
                let mut tmp = alloc::vec![C64::new(0.0, 0.0); b];
                for p in 0..self.grid.points() {
                    linalg::mat_vec(b, b, &pen.projector, &f.at(p)[r.clone()], &mut tmp);
                    for i in 0..b {
                        dst[p * m + r.start + i] += tmp[i] * pen.lambda;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `L(x)†` pointwise.
    pub fn adjoint(&self) -> LocalOperator {
        let m = self.m();
        let matrices = self
            .matrices
            .map(m, m, |_, a, out| {
                out.copy_from_slice(&linalg::adjoint(m, m, a));
                Ok(())
            })
            .expect("adjoint cannot fail");
        let penalties = self
            .penalties
            .iter()
            .map(|pen| {
                let b = self.layout.block_size(pen.block);
                Penalty { block: pen.block, projector: linalg::adjoint(b, b, &pen.projector), lambda: pen.lambda }
            })
            .collect();
        LocalOperator { grid: self.grid.clone(), layout: self.layout.clone(), matrices, penalties }
    }

    /// Pointwise inverse of the effective matrices.
    pub fn inverse(&self) -> Result<LocalOperator> {
        let m = self.m();
        let matrices = self.effective().map(m, m, |p, a, out| {
            let inv = linalg::inverse(m, a).ok_or(Error::Singular { point: p, context: "local operator" })?;
            out.copy_from_slice(&inv);
            Ok(())
        })?;
        LocalOperator::new(&self.grid, &self.layout, matrices)
    }

    /// Cell average of the effective matrices.
    pub fn mean_matrix(&self) -> Vec<C64> {
        let mut a = self.matrices.mean();
        self.add_penalties(&mut a);
        a
    }

    /// `L + c·T` for a constant `T`.
    pub fn add_constant(&self, t: &[C64], c: f64) -> Result<LocalOperator> {
        let m = self.m();
        if t.len() != m * m {
            return Err(Error::Shape(format!("constant matrix must be {m}x{m}")));
        }
        let matrices = self.matrices.map(m, m, |_, a, out| {
            for ((o, x), y) in out.iter_mut().zip(a).zip(t) {
                *o = x + y * c;
            }
            Ok(())
        })?;
        Ok(LocalOperator { matrices, ..self.clone() })
    }

    /// Same operator on a relabelled layout of equal size.
    pub fn with_layout(&self, layout: &Layout) -> Result<LocalOperator> {
        if layout.m() != self.m() {
            return Err(Error::Shape(format!("relabelling {} components as {}", self.m(), layout.m())));
        }
        let mut out = LocalOperator::new(&self.grid, layout, self.effective())?;
        out.penalties.clear();
        Ok(out)
    }

    /// Largest pointwise Frobenius norm of `L − L†` relative to the largest entry.
    pub fn hermitian_defect(&self) -> f64 {
        let m = self.m();
        let eff = self.effective();
        let scale = eff.max_abs().max(f64::MIN_POSITIVE);
        eff.distinct()
            .iter()
            .fold(0.0f64, |acc, (_, a)| acc.max(linalg::hermitian_defect(m, a)))
            / scale
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermitian_defect() <= rel_tol
    }

    /// Largest modulus of the finite entries.
    pub fn max_finite_abs(&self) -> f64 {
        self.matrices.max_abs()
    }
}

/// Integer phase labels `1..=N` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    grid: Grid,
    /// Zero-based internally.
    labels: Arc<Vec<u32>>,
    phases: usize,
}

impl PhaseMap {
    /// Labels are one-based, one per point, axis 0 fastest.
    pub fn new(grid: &Grid, labels: &[u32]) -> Result<PhaseMap> {
        if labels.len() != grid.points() {
            return Err(Error::Shape(format!("{} labels for {} points", labels.len(), grid.points())));
        }
        if let Some(p) = labels.iter().position(|&l| l == 0) {
            return Err(Error::Invalid(format!("phase label 0 at point {p}; labels start at 1")));
        }
        let phases = labels.iter().copied().max().unwrap_or(0) as usize;
        Ok(PhaseMap { grid: grid.clone(), labels: Arc::new(labels.iter().map(|l| l - 1).collect()), phases })
    }

    pub fn from_fn<F: FnMut([f64; 3]) -> u32>(grid: &Grid, mut f: F) -> Result<PhaseMap> {
        let labels: Vec<u32> = (0..grid.points()).map(|p| f(grid.position(p))).collect();
        PhaseMap::new(grid, &labels)
    }

    /// Two-phase checkerboard: phase 1 where the first two coordinates lie in the same half of the cell.
    pub fn checkerboard(grid: &Grid) -> Result<PhaseMap> {
        let (l0, l1) = (grid.lengths()[0], grid.lengths()[1]);
        PhaseMap::from_fn(grid, |x| if (x[0] < 0.5 * l0) == (x[1] < 0.5 * l1) { 1 } else { 2 })
    }

    /// Phase 2 inside the ball `|x − center| < radius` (no periodic wrapping), phase 1 outside.
    pub fn disk(grid: &Grid, center: &[f64], radius: f64) -> Result<PhaseMap> {
        let d = grid.dim();
        PhaseMap::from_fn(grid, |x| {
            let r2: f64 = (0..d).map(|a| (x[a] - center[a]).powi(2)).sum();
            if r2 < radius * radius {
                2
            } else {
                1
            }
        })
    }

    /// Phase 1 where `x_axis < fraction · length`, phase 2 elsewhere.
    pub fn laminate(grid: &Grid, axis: usize, fraction: f64) -> Result<PhaseMap> {
        let cut = fraction * grid.lengths()[axis];
        PhaseMap::from_fn(grid, |x| if x[axis] < cut { 1 } else { 2 })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn phases(&self) -> usize {
        self.phases
    }

    /// One-based label of point `p`.
    pub fn label(&self, p: usize) -> u32 {
        self.labels[p] + 1
    }

    pub fn volume_fractions(&self) -> Vec<f64> {
        let mut counts = alloc::vec![0usize; self.phases];
        for &l in self.labels.iter() {
            counts[l as usize] += 1;
        }
        let n = self.labels.len() as f64;
        counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Piecewise-constant matrix field taking `mats[i]` on phase `i + 1`.
    pub fn matrix_field(&self, rows: usize, cols: usize, mats: Vec<Vec<C64>>) -> Result<MatrixField> {
        if mats.len() != self.phases {
            return Err(Error::Shape(format!("{} matrices for {} phases", mats.len(), self.phases)));
        }
        MatrixField::phases(self.labels.clone(), rows, cols, mats)
    }

    /// Real scalar per phase as a 1×1 matrix field.
    pub fn scalar_field(&self, values: &[f64]) -> Result<MatrixField> {
        self.matrix_field(1, 1, values.iter().map(|&v| alloc::vec![C64::new(v, 0.0)]).collect())
    }

    /// Real-space field taking `values[i]` on phase `i + 1`.
    pub fn field(&self, layout: &Layout, values: &[Vec<C64>]) -> Result<Field> {
        if values.len() != self.phases {
            return Err(Error::Shape(format!("{} values for {} phases", values.len(), self.phases)));
        }
        let m = layout.m();
        if values.iter().any(|v| v.len() != m) {
            return Err(Error::Shape(format!("phase values must have {m} components")));
        }
        Ok(Field::from_fn(&self.grid, layout, |p, out| out.copy_from_slice(&values[self.labels[p] as usize])))
    }
}
