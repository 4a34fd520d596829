use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fourier::{Direction, FourierBackend};
use crate::grid::Grid;
use crate::layout::Layout;
use crate::linalg::pairwise_sum;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Space {
    Real,
    Fourier,
}

/// Complex `m`-component values at every grid point or every lattice frequency.
///
/// Fourier coefficients are normalized so that the `k = 0` coefficient is the cell mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    layout: Layout,
    space: Space,
    values: Vec<C64>,
}

impl Field {
    pub fn new(grid: &Grid, layout: &Layout, space: Space, values: Vec<C64>) -> Result<Field> {
        if layout.dim() != grid.dim() {
            return Err(Error::Shape(format!(
                "layout dimension {} on a {}-d grid",
                layout.dim(),
                grid.dim()
            )));
        }
        let expect = grid.points() * layout.m();
        if values.len() != expect {
            return Err(Error::Shape(format!("{} values, expected {}", values.len(), expect)));
        }
        Ok(Field { grid: grid.clone(), layout: layout.clone(), space, values })
    }

    pub fn zeros(grid: &Grid, layout: &Layout, space: Space) -> Field {
        let n = grid.points() * layout.m();
        Field { grid: grid.clone(), layout: layout.clone(), space, values: alloc::vec![C64::new(0.0, 0.0); n] }
    }

    /// Real-space field with the same value `c` at every point.
    pub fn constant(grid: &Grid, layout: &Layout, c: &[C64]) -> Result<Field> {
        let m = layout.m();
        if c.len() != m {
            return Err(Error::Shape(format!("constant has {} components, layout has {m}", c.len())));
        }
        let mut values = Vec::with_capacity(grid.points() * m);
        for _ in 0..grid.points() {
            values.extend_from_slice(c);
        }
        Field::new(grid, layout, Space::Real, values)
    }

    /// Real-space field filled pointwise by `f(point, out)`.
    pub fn from_fn<F: FnMut(usize, &mut [C64])>(grid: &Grid, layout: &Layout, mut f: F) -> Field {
        let mut out = Field::zeros(grid, layout, Space::Real);
        let m = layout.m();
        for (p, chunk) in out.values.chunks_mut(m).enumerate() {
            f(p, chunk);
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn m(&self) -> usize {
        self.layout.m()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn at(&self, p: usize) -> &[C64] {
        let m = self.m();
        &self.values[p * m..(p + 1) * m]
    }

    pub fn at_mut(&mut self, p: usize) -> &mut [C64] {
        let m = self.m();
        &mut self.values[p * m..(p + 1) * m]
    }

    /// Same grid, layout and space.
    pub fn check_compatible(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape(format!(
                "grids differ: {:?} vs {:?}",
                self.grid.samples(),
                other.grid.samples()
            )));
        }
        if self.layout != other.layout {
            return Err(Error::Shape(format!(
                "layouts differ: {:?} vs {:?}",
                self.layout.kinds(),
                other.layout.kinds()
            )));
        }
        if self.space != other.space {
            return Err(Error::Space { expected: self.space, found: other.space });
        }
        Ok(())
    }

    pub fn require_space(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(Error::Space { expected: space, found: self.space });
        }
        Ok(())
    }

    pub fn to_fourier(&self, backend: &dyn FourierBackend) -> Result<Field> {
        self.require_space(Space::Real)?;
        let mut out = self.clone();
        out.fft_in_place(backend, Direction::Forward);
        Ok(out)
    }

    pub fn to_real(&self, backend: &dyn FourierBackend) -> Result<Field> {
        self.require_space(Space::Fourier)?;
        let mut out = self.clone();
        out.fft_in_place(backend, Direction::Inverse);
        Ok(out)
    }

    /// Transforms to the opposite space in place. The direction must match the current space.
    pub(crate) fn fft_in_place(&mut self, backend: &dyn FourierBackend, direction: Direction) {
        let m = self.m();
        backend.transform(&self.grid, m, &mut self.values, direction);
        match direction {
            Direction::Forward => {
                let s = 1.0 / self.grid.points() as f64;
                for v in self.values.iter_mut() {
                    *v *= s;
                }
                self.space = Space::Fourier;
            }
            Direction::Inverse => self.space = Space::Real,
        }
    }

    /// Cell mean, which is the `k = 0` coefficient.
    pub fn average(&self) -> Vec<C64> {
        let m = self.m();
        match self.space {
            Space::Fourier => self.values[..m].to_vec(),
            Space::Real => {
                let n = self.grid.points();
                (0..m)
                    .map(|c| pairwise_sum(n, &|p| self.values[p * m + c]) / n as f64)
                    .collect()
            }
        }
    }

    /// Weighted pointwise product, conjugate-linear in `self`, averaged over the cell.
    /// In Fourier space the same number is the plain sum over frequencies.
    pub fn inner_product(&self, other: &Field) -> Result<C64> {
        self.check_compatible(other)?;
        let m = self.m();
        let w = self.layout.weights();
        let n = self.grid.points();
        let a = &self.values;
        let b = &other.values;
        let total: C64 = pairwise_sum(n, &|p| {
            let mut s = C64::new(0.0, 0.0);
            for c in 0..m {
                s += a[p * m + c].conj() * b[p * m + c] * w[c];
            }
            s
        });
        Ok(match self.space {
            Space::Real => total / n as f64,
            Space::Fourier => total,
        })
    }

    /// `sqrt(Re ⟨f, f⟩)`.
    pub fn norm(&self) -> f64 {
        self.inner_product(self).map(|v| v.re.max(0.0).sqrt()).unwrap_or(0.0)
    }

    /// Largest imaginary part in real space.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.im.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn scaled(&self, c: C64) -> Field {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= c;
        }
        out
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, c: C64, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v += c * w;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.add_scaled(C64::new(-1.0, 0.0), other)
    }

    /// Adds the constant `c` at every point (real space) or to the mean coefficient (Fourier space).
    pub fn add_constant(&self, c: &[C64]) -> Result<Field> {
        let m = self.m();
        if c.len() != m {
            return Err(Error::Shape(format!("constant has {} components, layout has {m}", c.len())));
        }
        let mut out = self.clone();
        match self.space {
            Space::Real => {
                for chunk in out.values.chunks_mut(m) {
                    for (v, x) in chunk.iter_mut().zip(c) {
                        *v += x;
                    }
                }
            }
            Space::Fourier => {
                for (v, x) in out.values[..m].iter_mut().zip(c) {
                    *v += x;
                }
            }
        }
        Ok(out)
    }

    /// Components `range` of every point as a new field on `layout`.
    pub fn extract(&self, range: core::ops::Range<usize>, layout: &Layout) -> Result<Field> {
        let m = self.m();
        let k = range.len();
        if layout.m() != k {
            return Err(Error::Shape(format!("extracting {k} components into a layout of {}", layout.m())));
        }
        let mut values = Vec::with_capacity(self.grid.points() * k);
        for chunk in self.values.chunks(m) {
            values.extend_from_slice(&chunk[range.clone()]);
        }
        let mut f = Field::new(&self.grid, layout, Space::Real, values)?;
        f.space = self.space;
        Ok(f)
    }

    /// Concatenates the components of `self` and `other` at every point.
    pub fn concat(&self, other: &Field) -> Result<Field> {
        if self.grid != other.grid || self.space != other.space {
            return Err(Error::Shape(format!("cannot concatenate fields on different grids or spaces")));
        }
        let layout = self.layout.concat(&other.layout)?;
        let (ma, mb) = (self.m(), other.m());
        let mut values = Vec::with_capacity(self.grid.points() * (ma + mb));
        for p in 0..self.grid.points() {
            values.extend_from_slice(&self.values[p * ma..(p + 1) * ma]);
            values.extend_from_slice(&other.values[p * mb..(p + 1) * mb]);
        }
        let mut f = Field::new(&self.grid, &layout, Space::Real, values)?;
        f.space = self.space;
        Ok(f)
    }

    /// Same values relabelled with another layout of equal size.
    pub fn with_layout(&self, layout: &Layout) -> Result<Field> {
        if layout.m() != self.m() || layout.dim() != self.grid.dim() {
            return Err(Error::Shape(format!("relabelling {} components as {}", self.m(), layout.m())));
        }
        let mut f = self.clone();
        f.layout = layout.clone();
        Ok(f)
    }
}
