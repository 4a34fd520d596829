//! Small dense complex matrices stored row-major in slices.

use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn identity(n: usize) -> Vec<C64> {
    let mut a = alloc::vec![ZERO; n * n];
    for i in 0..n {
        a[i * n + i] = ONE;
    }
    a
}

pub fn scaled_identity(n: usize, c: C64) -> Vec<C64> {
    let mut a = alloc::vec![ZERO; n * n];
    for i in 0..n {
        a[i * n + i] = c;
    }
    a
}

/// `y = A x` for an `r × c` matrix.
pub fn mat_vec(r: usize, c: usize, a: &[C64], x: &[C64], y: &mut [C64]) {
    for i in 0..r {
        let row = &a[i * c..(i + 1) * c];
        let mut s = ZERO;
        for (aij, xj) in row.iter().zip(x) {
            s += aij * xj;
        }
        y[i] = s;
    }
}

/// `A B` for `r × k` times `k × c`.
pub fn mat_mul(r: usize, k: usize, c: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = alloc::vec![ZERO; r * c];
    for i in 0..r {
        for l in 0..k {
            let ail = a[i * k + l];
            if ail == ZERO {
                continue;
            }
            for j in 0..c {
                out[i * c + j] += ail * b[l * c + j];
            }
        }
    }
    out
}

/// Conjugate transpose of an `r × c` matrix.
pub fn adjoint(r: usize, c: usize, a: &[C64]) -> Vec<C64> {
    let mut out = alloc::vec![ZERO; r * c];
    for i in 0..r {
        for j in 0..c {
            out[j * r + i] = a[i * c + j].conj();
        }
    }
    out
}

pub fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[C64], c: C64) -> Vec<C64> {
    a.iter().map(|x| x * c).collect()
}

pub fn frobenius(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm of `A − A†`.
pub fn hermitian_defect(n: usize, a: &[C64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (a[i * n + j] - a[j * n + i].conj()).norm_sqr();
        }
    }
    s.sqrt()
}

/// `(A + A†)/2`.
pub fn hermitian_part(n: usize, a: &[C64]) -> Vec<C64> {
    let mut h = alloc::vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = (a[i * n + j] + a[j * n + i].conj()) * 0.5;
        }
    }
    h
}

/// `(A − A†)/(2i)`, Hermitian.
pub fn anti_hermitian_part(n: usize, a: &[C64]) -> Vec<C64> {
    let mut h = alloc::vec![ZERO; n * n];
    let half_over_i = C64::new(0.0, -0.5);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = (a[i * n + j] - a[j * n + i].conj()) * half_over_i;
        }
    }
    h
}

/// Solves `A X = B` in place for `n × n` A and `n × c` B by partially pivoted elimination.
/// Returns `false` when a pivot falls below `1e-14 · max|A|`.
pub fn solve_in_place(n: usize, c: usize, a: &mut [C64], b: &mut [C64]) -> bool {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.norm()));
    if scale == 0.0 {
        return n == 0;
    }
    let tiny = 1e-14 * scale;
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm();
        for r in col + 1..n {
            let v = a[r * n + col].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if !(best > tiny) {
            return false;
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            for j in 0..c {
                b.swap(col * c + j, piv * c + j);
            }
        }
        let inv = ONE / a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] * inv;
            if f == ZERO {
                continue;
            }
            for j in col..n {
                let t = a[col * n + j];
                a[r * n + j] -= f * t;
            }
            for j in 0..c {
                let t = b[col * c + j];
                b[r * c + j] -= f * t;
            }
        }
    }
    for col in (0..n).rev() {
        let inv = ONE / a[col * n + col];
        for j in 0..c {
            let mut s = b[col * c + j];
            for l in col + 1..n {
                s -= a[col * n + l] * b[l * c + j];
            }
            b[col * c + j] = s * inv;
        }
    }
    true
}

/// Inverse of an `n × n` matrix, `None` when singular or when the residual `‖A·A⁻¹ − I‖` exceeds 1e-8.
pub fn inverse(n: usize, a: &[C64]) -> Option<Vec<C64>> {
    let mut work = a.to_vec();
    let mut x = identity(n);
    if !solve_in_place(n, n, &mut work, &mut x) {
        return None;
    }
    let prod = mat_mul(n, n, n, a, &x);
    let defect = frobenius(&sub(&prod, &identity(n)));
    if !(defect <= 1e-8 * (n as f64).sqrt()) {
        return None;
    }
    Some(x)
}

fn to_dmatrix(n: usize, a: &[C64]) -> DMatrix<C64> {
    DMatrix::from_row_slice(n, n, a)
}

/// Eigenvalues (ascending) and row-major eigenvector columns of the Hermitian part of `a`.
pub fn hermitian_eigen(n: usize, a: &[C64]) -> (Vec<f64>, Vec<C64>) {
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let h = to_dmatrix(n, &hermitian_part(n, a));
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap_or(core::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = alloc::vec![ZERO; n * n];
    for (col, &i) in order.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + col] = eig.eigenvectors[(r, i)];
        }
    }
    (values, vectors)
}

/// Smallest eigenvalue of the Hermitian part of `a`.
pub fn min_eigenvalue(n: usize, a: &[C64]) -> f64 {
    hermitian_eigen(n, a).0.first().copied().unwrap_or(0.0)
}

/// Pseudo-inverse of a Hermitian positive semidefinite matrix; eigenvalues at or below
/// `rel_cutoff · max eigenvalue` are treated as exact zeros. Also returns the retained rank.
pub fn psd_pseudo_inverse(n: usize, a: &[C64], rel_cutoff: f64) -> (Vec<C64>, usize) {
    let (vals, vecs) = hermitian_eigen(n, a);
    let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = alloc::vec![ZERO; n * n];
    let mut rank = 0;
    for (c, &lam) in vals.iter().enumerate() {
        if top == 0.0 || lam <= rel_cutoff * top {
            continue;
        }
        rank += 1;
        let inv = 1.0 / lam;
        for i in 0..n {
            let vi = vecs[i * n + c];
            for j in 0..n {
                out[i * n + j] += vi * vecs[j * n + c].conj() * inv;
            }
        }
    }
    (out, rank)
}

/// Number of eigenvalues of the Hermitian part above `tol`.
pub fn rank_hermitian(n: usize, a: &[C64], tol: f64) -> usize {
    hermitian_eigen(n, a).0.iter().filter(|&&v| v.abs() > tol).count()
}

/// `Γ (Γ L₀ Γ + I − Γ)⁻¹ Γ` for an orthogonal projector `Γ`: the inverse of `Γ L₀ Γ` taken on the
/// range of `Γ`. `None` when that restricted operator is singular.
pub fn restricted_inverse(n: usize, gamma: &[C64], l0: &[C64]) -> Option<Vec<C64>> {
    let gl = mat_mul(n, n, n, gamma, l0);
    let glg = mat_mul(n, n, n, &gl, gamma);
    let mut a = glg;
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { ONE } else { ZERO };
            a[i * n + j] += id - gamma[i * n + j];
        }
    }
    let mut rhs = gamma.to_vec();
    if !solve_in_place(n, n, &mut a, &mut rhs) {
        return None;
    }
    Some(mat_mul(n, n, n, gamma, &rhs))
}

/// Sum in a fixed binary tree, independent of how the caller splits the work.
pub fn pairwise_sum<T, F>(n: usize, f: &F) -> T
where
    T: core::ops::Add<Output = T> + Default,
    F: Fn(usize) -> T,
{
    fn rec<T, F>(lo: usize, hi: usize, f: &F) -> T
    where
        T: core::ops::Add<Output = T> + Default,
        F: Fn(usize) -> T,
    {
        if hi - lo <= 8 {
            let mut s = T::default();
            for i in lo..hi {
                s = s + f(i);
            }
            s
        } else {
            let mid = lo + (hi - lo) / 2;
            rec(lo, mid, f) + rec(mid, hi, f)
        }
    }
    if n == 0 {
        T::default()
    } else {
        rec(0, n, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn inverse_of_known_matrix() {
        let a = [c(2.0, 0.0), c(1.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)];
        let inv = inverse(2, &a).unwrap();
        let det = a[0] * a[3] - a[1] * a[2];
        let expect = [a[3] / det, -a[1] / det, -a[2] / det, a[0] / det];
        for (x, y) in inv.iter().zip(&expect) {
            assert!((x - y).norm() < 1e-14);
        }
        assert!(inverse(2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]).is_none());
    }

    #[test]
    fn eigen_of_diagonal() {
        let a = [c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)];
        let (v, _) = hermitian_eigen(2, &a);
        assert_eq!(v, alloc::vec![-1.0, 3.0]);
    }

    #[test]
    fn restricted_inverse_of_projector_is_itself() {
        let g = [c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)];
        let r = restricted_inverse(2, &g, &identity(2)).unwrap();
        for (x, y) in r.iter().zip(&g) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let s: f64 = pairwise_sum(1000, &|i| i as f64);
        assert_eq!(s, 499500.0);
    }
}
