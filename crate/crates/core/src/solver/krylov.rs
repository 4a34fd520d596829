use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Result;
use crate::linalg::pairwise_sum;
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// A linear operator with a preconditioner, both on flat coefficient vectors.
pub(crate) trait System {
    fn len(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]) -> Result<()>;
    fn precondition(&self, r: &[C64], z: &mut [C64]) -> Result<()>;
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    pairwise_sum(a.len(), &|i| a[i].conj() * b[i])
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    pairwise_sum(a.len(), &|i| a[i].norm_sqr()).sqrt()
}

fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stop {
    Converged,
    MaxIterations,
    /// Non-positive curvature or preconditioner product on the Hermitian path.
    Indefinite,
    Stagnated,
}

pub(crate) struct Outcome {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub estimate: f64,
    pub stop: Stop,
    pub energy: Vec<f64>,
}

fn residual<S: System>(sys: &S, b: &[C64], x: &[C64]) -> Result<Vec<C64>> {
    let mut r = vec![ZERO; b.len()];
    sys.apply(x, &mut r)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    Ok(r)
}

/// Preconditioned conjugate gradients from `x0`. Stops when `‖r‖ ≤ target`.
pub(crate) fn pcg<S: System>(sys: &S, b: &[C64], x0: Vec<C64>, target: f64, max_iter: usize, record_energy: bool) -> Result<Outcome> {
    let n = sys.len();
    let mut x = x0;
    let mut r = residual(sys, b, &x)?;
    let mut z = vec![ZERO; n];
    sys.precondition(&r, &mut z)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![ZERO; n];
    let mut energy = Vec::new();
    let mut it = 0;
    let mut est = norm(&r);
    let energy_of = |x: &[C64], r: &[C64]| -0.5 * (dot(x, b) + dot(x, r)).re;
    if record_energy {
        energy.push(energy_of(&x, &r));
    }
    loop {
        if est <= target {
            return Ok(Outcome { x, iterations: it, estimate: est, stop: Stop::Converged, energy });
        }
        if it >= max_iter {
            return Ok(Outcome { x, iterations: it, estimate: est, stop: Stop::MaxIterations, energy });
        }
        if !(rz.re > 0.0) {
            return Ok(Outcome { x, iterations: it, estimate: est, stop: Stop::Indefinite, energy });
        }
        sys.apply(&p, &mut q)?;
        let pq = dot(&p, &q).re;
        if !(pq > 0.0) {
            return Ok(Outcome { x, iterations: it, estimate: est, stop: Stop::Indefinite, energy });
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        sys.precondition(&r, &mut z)?;
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        it += 1;
        est = norm(&r);
        if record_energy {
            energy.push(energy_of(&x, &r));
        }
    }
}

/// Restarted GMRES with right preconditioning from `x0`. Stops when the residual
/// estimate `‖b − A x‖ ≤ target`.
pub(crate) fn gmres<S: System>(sys: &S, b: &[C64], x0: Vec<C64>, target: f64, max_iter: usize, restart: usize) -> Result<Outcome> {
    let n = sys.len();
    let restart = restart.max(1);
    let mut x = x0;
    let mut it = 0;
    let mut est;
    let mut last_outer = f64::INFINITY;
    loop {
        let r = residual(sys, b, &x)?;
        let beta = norm(&r);
        est = beta;
        if beta <= target {
            return Ok(Outcome { x, iterations: it, estimate: est, stop: Stop::Converged, energy: Vec::new() });
        }
        if it >= max_iter {
            return Ok(Outcome { x, iterations: it, estimate: est, stop: Stop::MaxIterations, energy: Vec::new() });
        }
        if !(beta < last_outer) {
            return Ok(Outcome { x, iterations: it, estimate: est, stop: Stop::Stagnated, energy: Vec::new() });
        }
        last_outer = beta;
        let mut v: Vec<Vec<C64>> = Vec::with_capacity(restart + 1);
        v.push(r.iter().map(|c| c / beta).collect());
        // Column-major Hessenberg: h[j] holds column j, length j + 2.
        let mut h: Vec<Vec<C64>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::with_capacity(restart);
        let mut sn: Vec<C64> = Vec::with_capacity(restart);
        let mut g = vec![ZERO; restart + 1];
        g[0] = C64::new(beta, 0.0);
        let mut z = vec![ZERO; n];
        let mut w = vec![ZERO; n];
        let mut k = 0;
        while k < restart && it < max_iter {
            sys.precondition(&v[k], &mut z)?;
            sys.apply(&z, &mut w)?;
            let mut col = vec![ZERO; k + 2];
            for i in 0..=k {
                let hij = dot(&v[i], &w);
                col[i] = hij;
                axpy(-hij, &v[i], &mut w);
            }
            let hn = norm(&w);
            col[k + 1] = C64::new(hn, 0.0);
            for i in 0..k {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = a * cs[i] + sn[i] * bb;
                col[i + 1] = -sn[i].conj() * a + bb * cs[i];
            }
            let (a, bb) = (col[k], col[k + 1]);
            let t = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if a.norm() == 0.0 {
                (0.0, C64::new(1.0, 0.0))
            } else {
                let phase = a / a.norm();
                (a.norm() / t, phase * bb.conj() / t)
            };
            col[k] = if a.norm() == 0.0 { bb } else { a / a.norm() * t };
            col[k + 1] = ZERO;
            cs.push(c);
            sn.push(s);
            g[k + 1] = -s.conj() * g[k];
            g[k] *= c;
            h.push(col);
            it += 1;
            k += 1;
            est = g[k].norm();
            if hn <= 1e-300 || est <= target {
                break;
            }
            v.push(w.iter().map(|c| c / hn).collect());
        }
        let mut y = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut u = vec![ZERO; n];
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, &v[i], &mut u);
        }
        sys.precondition(&u, &mut z)?;
        axpy(C64::new(1.0, 0.0), &z, &mut x);
    }
}
