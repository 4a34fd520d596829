use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Periodic rectangular cell sampled on a uniform grid.
///
/// Point indices run with axis 0 fastest. Node `i` on axis `a` sits at `i * lengths[a] / samples[a]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    samples: Vec<usize>,
    lengths: Vec<f64>,
}

impl Grid {
    /// Sample counts must be even and at least 2; lengths must be positive and finite.
    pub fn new(samples: &[usize], lengths: &[f64]) -> Result<Grid> {
        let dim = samples.len();
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if lengths.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} lengths for {} axes",
                lengths.len(),
                dim
            )));
        }
        for (a, &n) in samples.iter().enumerate() {
            if n < 2 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a}: sample count {n} must be even and >= 2"
                )));
            }
        }
        for (a, &l) in lengths.iter().enumerate() {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidGrid(format!("axis {a}: length {l} must be positive")));
            }
        }
        Ok(Grid { samples: samples.to_vec(), lengths: lengths.to_vec() })
    }

    /// Unit cell `[0,1)^d` with the given sample counts.
    pub fn unit(samples: &[usize]) -> Result<Grid> {
        let lengths: Vec<f64> = samples.iter().map(|_| 1.0).collect();
        Grid::new(samples, &lengths)
    }

    /// Square or cubic unit cell with `n` samples per axis.
    pub fn cube(dim: usize, n: usize) -> Result<Grid> {
        Grid::unit(&alloc::vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[usize] {
        &self.samples
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn points(&self) -> usize {
        self.samples.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.samples[axis] as f64
    }

    /// Point stride of `axis` in the flat index.
    pub fn stride(&self, axis: usize) -> usize {
        self.samples[..axis].iter().product()
    }

    /// Maps a sample index to the symmetric range; the Nyquist index stays positive.
    pub fn wrap(&self, axis: usize, t: usize) -> i64 {
        let n = self.samples[axis];
        if t <= n / 2 {
            t as i64
        } else {
            t as i64 - n as i64
        }
    }

    /// Multi-index of a flat point index. Unused trailing entries are zero.
    pub fn multi_index(&self, p: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rest = p;
        for (a, &n) in self.samples.iter().enumerate() {
            idx[a] = rest % n;
            rest /= n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut p = 0;
        for a in (0..self.dim()).rev() {
            p = p * self.samples[a] + idx[a];
        }
        p
    }

    /// Node position of a point. Unused trailing entries are zero.
    pub fn position(&self, p: usize) -> [f64; 3] {
        let idx = self.multi_index(p);
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            x[a] = idx[a] as f64 * self.spacing(a);
        }
        x
    }

    /// Reciprocal lattice vector for the Fourier index `p`, for derivative-type multipliers.
    /// Unused trailing entries are zero.
    ///
    /// The Nyquist index of an axis is its own conjugate partner, so its component is zero:
    /// every multiplier that is even or odd in `k` then maps real fields to real fields.
    pub fn wave_vector(&self, p: usize) -> [f64; 3] {
        let idx = self.multi_index(p);
        let mut k = [0.0; 3];
        for a in 0..self.dim() {
            if idx[a] != self.samples[a] / 2 {
                k[a] = 2.0 * PI * self.wrap(a, idx[a]) as f64 / self.lengths[a];
            }
        }
        k
    }

    /// Reciprocal lattice vector at which even symbols such as Γ(k) are evaluated.
    ///
    /// Where every index is zero or Nyquist the frequency is its own partner, so the
    /// Nyquist components keep their positive value and `k` stays nonzero. Elsewhere the
    /// Nyquist components are zeroed as in [`Grid::wave_vector`], so the partner sees `-k`.
    /// Either way an even symbol takes equal values at `k` and its partner.
    pub fn symbol_wave_vector(&self, p: usize) -> [f64; 3] {
        let idx = self.multi_index(p);
        let d = self.dim();
        let self_partner = (0..d).all(|a| idx[a] == 0 || 2 * idx[a] == self.samples[a]);
        if !self_partner {
            return self.wave_vector(p);
        }
        let mut k = [0.0; 3];
        for a in 0..d {
            k[a] = 2.0 * PI * idx[a] as f64 / self.lengths[a];
        }
        k
    }

    /// Flat index of the frequency `-k` for the frequency at `p`.
    pub fn negated_index(&self, p: usize) -> usize {
        let idx = self.multi_index(p);
        let mut neg = [0usize; 3];
        for a in 0..self.dim() {
            let n = self.samples[a];
            neg[a] = (n - idx[a]) % n;
        }
        self.flat_index(&neg)
    }

    /// Largest per-axis sample count.
    pub fn max_samples(&self) -> usize {
        self.samples.iter().copied().max().unwrap_or(0)
    }
}
