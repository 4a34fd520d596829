use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::Grid;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Kernel `exp(-i k·x)`.
    Forward,
    /// Kernel `exp(+i k·x)`.
    Inverse,
}

/// Unnormalized multidimensional discrete Fourier transform.
///
/// `data` holds `grid.points() * m` values with the component index fastest, then axis 0.
/// Implementations transform every component independently and must be deterministic.
pub trait FourierBackend: Sync {
    fn transform(&self, grid: &Grid, m: usize, data: &mut [C64], direction: Direction);
}

/// Direct O(n²)-per-line DFT applied axis by axis. Slow, dependency free, and used as the
/// reference the fast backends are checked against.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeparableDft;

impl FourierBackend for SeparableDft {
    fn transform(&self, grid: &Grid, m: usize, data: &mut [C64], direction: Direction) {
        let sign = match direction {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        };
        let points = grid.points();
        for axis in 0..grid.dim() {
            let n = grid.samples()[axis];
            let stride = grid.stride(axis);
            let twiddle: Vec<C64> = (0..n)
                .map(|t| {
                    let th = sign * 2.0 * PI * t as f64 / n as f64;
                    C64::new(th.cos(), th.sin())
                })
                .collect();
            let mut line = alloc::vec![C64::new(0.0, 0.0); n];
            let mut out = alloc::vec![C64::new(0.0, 0.0); n];
            for base in 0..points {
                if (base / stride) % n != 0 {
                    continue;
                }
                for c in 0..m {
                    for (t, v) in line.iter_mut().enumerate() {
                        *v = data[(base + t * stride) * m + c];
                    }
                    for (f, o) in out.iter_mut().enumerate() {
                        let mut s = C64::new(0.0, 0.0);
                        for (t, v) in line.iter().enumerate() {
                            s += v * twiddle[(f * t) % n];
                        }
                        *o = s;
                    }
                    for (t, v) in out.iter().enumerate() {
                        data[(base + t * stride) * m + c] = *v;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_lands_on_its_frequency() {
        let g = Grid::unit(&[8, 4]).unwrap();
        let mut data: Vec<C64> = (0..g.points())
            .map(|p| {
                let x = g.position(p);
                let th = 2.0 * PI * (3.0 * x[0] - x[1]);
                C64::new(th.cos(), th.sin())
            })
            .collect();
        SeparableDft.transform(&g, 1, &mut data, Direction::Forward);
        let hit = g.flat_index(&[3, 3]);
        for (p, v) in data.iter().enumerate() {
            let expect = if p == hit { g.points() as f64 } else { 0.0 };
            assert!((v - C64::new(expect, 0.0)).norm() < 1e-11, "p={p} v={v}");
        }
    }
}
