//! Multithreaded separable FFT over the grid axes.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use gammakit_core::{Direction, FourierBackend, Grid, C64};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Cached rustfft plans, one per (length, direction); lines run in parallel on the current
/// rayon pool. Every line is transformed independently, so results do not depend on the
/// number of threads.
#[derive(Default)]
pub struct RustFft {
    plans: Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>,
}

impl RustFft {
    pub fn new() -> RustFft {
        RustFft::default()
    }

    fn plan(&self, n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
        let mut plans = self.plans.lock().expect("plan cache poisoned");
        plans
            .entry((n, forward))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if forward {
                    planner.plan_fft_forward(n)
                } else {
                    planner.plan_fft_inverse(n)
                }
            })
            .clone()
    }
}

/// Shared base pointer for scattering disjoint lines from parallel tasks.
#[derive(Clone, Copy)]
struct Base(*mut C64);
unsafe impl Send for Base {}
unsafe impl Sync for Base {}

impl FourierBackend for RustFft {
    fn transform(&self, grid: &Grid, m: usize, data: &mut [C64], direction: Direction) {
        let forward = matches!(direction, Direction::Forward);
        let d = grid.dim();
        let samples = grid.samples();
        let points = grid.points();
        assert_eq!(data.len(), points * m, "data length does not match grid");
        for axis in 0..d {
            let n = samples[axis];
            let plan = self.plan(n, forward);
            if axis == 0 {
                // Rows are contiguous blocks of n·m values.
                data.par_chunks_mut(n * m).for_each_init(
                    || (vec![C64::new(0.0, 0.0); n], vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()]),
                    |(line, scratch), row| {
                        for c in 0..m {
                            for i in 0..n {
                                line[i] = row[i * m + c];
                            }
                            plan.process_with_scratch(line, scratch);
                            for i in 0..n {
                                row[i * m + c] = line[i];
                            }
                        }
                    },
                );
                continue;
            }
            let stride = grid.stride(axis) * m;
            let lines = points / n;
            let inner = grid.stride(axis);
            let base = Base(data.as_mut_ptr());
            (0..lines * m).into_par_iter().for_each_init(
                || (vec![C64::new(0.0, 0.0); n], vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()]),
                |(line, scratch), job| {
                    let base = base;
                    let (l, c) = (job / m, job % m);
                    // Line l: offset within the slab below `axis`, then the slab above it.
                    let (lo, hi) = (l % inner, l / inner);
                    let start = (hi * inner * n + lo) * m + c;
                    // SAFETY: distinct (l, c) address disjoint index sets {start + i·stride}.
                    unsafe {
                        for i in 0..n {
                            line[i] = *base.0.add(start + i * stride);
                        }
                        plan.process_with_scratch(line, scratch);
                        for i in 0..n {
                            *base.0.add(start + i * stride) = line[i];
                        }
                    }
                },
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gammakit_core::SeparableDft;

    #[test]
    fn matches_reference_dft() {
        for samples in [vec![4usize, 6], vec![8, 2, 4]] {
            let grid = Grid::unit(&samples).unwrap();
            let m = 3;
            let data: Vec<C64> = (0..grid.points() * m).map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
            for dir in [Direction::Forward, Direction::Inverse] {
                let mut a = data.clone();
                let mut b = data.clone();
                RustFft::new().transform(&grid, m, &mut a, dir);
                SeparableDft.transform(&grid, m, &mut b, dir);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let grid = Grid::unit(&[16, 32]).unwrap();
        let data: Vec<C64> = (0..grid.points() * 2).map(|i| C64::new((i as f64).sqrt(), -(i as f64) * 1e-3)).collect();
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let mut a = data.clone();
            pool.install(|| RustFft::new().transform(&grid, 2, &mut a, Direction::Forward));
            a
        };
        assert_eq!(run(1), run(4));
    }
}
