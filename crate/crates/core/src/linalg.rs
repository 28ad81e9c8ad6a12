//! Dense helpers for the handful of tiny matrices this crate needs
//! (field frames, Gram matrices, normal equations). All matrices are
//! row-major slices.

use alloc::vec;
use alloc::vec::Vec;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Eigen-decomposition of a symmetric `n × n` matrix by cyclic Jacobi
/// rotations. Returns the eigenvalues; `vectors` receives the eigenvectors as
/// columns.
pub fn sym_eigen(a: &[f64], n: usize, vectors: &mut [f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    vectors.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        vectors[i * n + i] = 1.0;
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        let scale: f64 = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum();
        if off <= 1e-30 * (scale + 1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = vectors[k * n + p];
                    let vkq = vectors[k * n + q];
                    vectors[k * n + p] = c * vkp - s * vkq;
                    vectors[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).collect()
}

/// Minimum-norm least-squares solution of `Σ_i u_i V_i = v`, where the rows of
/// `frame` (`num × dim`) are the vectors `V_i`. Writes `u` and returns the
/// residual norm `|Σ u_i V_i − v|`.
pub fn least_norm_combination(frame: &[f64], num: usize, dim: usize, v: &[f64], u: &mut [f64]) -> f64 {
    let mut gram = vec![0.0; num * num];
    let mut rhs = vec![0.0; num];
    for i in 0..num {
        let vi = &frame[i * dim..(i + 1) * dim];
        rhs[i] = dot(vi, v);
        for k in i..num {
            let g = dot(vi, &frame[k * dim..(k + 1) * dim]);
            gram[i * num + k] = g;
            gram[k * num + i] = g;
        }
    }
    let mut q = vec![0.0; num * num];
    let lambda = sym_eigen(&gram, num, &mut q);
    let lmax = lambda.iter().cloned().fold(0.0, f64::max);
    u.iter_mut().for_each(|x| *x = 0.0);
    for e in 0..num {
        if lambda[e] <= 1e-12 * lmax || lambda[e] <= 0.0 {
            continue;
        }
        let proj: f64 = (0..num).map(|i| q[i * num + e] * rhs[i]).sum::<f64>() / lambda[e];
        for i in 0..num {
            u[i] += proj * q[i * num + e];
        }
    }
    let mut res = 0.0;
    for j in 0..dim {
        let mut r = -v[j];
        for i in 0..num {
            r += u[i] * frame[i * dim + j];
        }
        res += r * r;
    }
    libm::sqrt(res)
}

/// Numerical rank of the row set `rows` (`count × dim`), by Gaussian
/// elimination with full pivoting and relative tolerance `tol`.
pub fn rank(rows: &[f64], count: usize, dim: usize, tol: f64) -> usize {
    let mut a = rows.to_vec();
    let scale = a.iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)));
    if scale == 0.0 {
        return 0;
    }
    let mut r = 0;
    let mut used_cols = vec![false; dim];
    let mut used_rows = vec![false; count];
    for _ in 0..count.min(dim) {
        let mut best = (0.0, 0, 0);
        for i in (0..count).filter(|&i| !used_rows[i]) {
            for j in (0..dim).filter(|&j| !used_cols[j]) {
                let v = libm::fabs(a[i * dim + j]);
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        if best.0 <= tol * scale {
            break;
        }
        let (_, pi, pj) = best;
        used_rows[pi] = true;
        used_cols[pj] = true;
        r += 1;
        for i in (0..count).filter(|&i| !used_rows[i]) {
            let f = a[i * dim + pj] / a[pi * dim + pj];
            for j in 0..dim {
                a[i * dim + j] -= f * a[pi * dim + j];
            }
        }
    }
    r
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` for a numerically singular matrix.
pub fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| libm::fabs(m[i * n + col]).total_cmp(&libm::fabs(m[j * n + col])))?;
        if libm::fabs(m[piv * n + col]) < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            x.swap(piv, col);
        }
        for i in col + 1..n {
            let f = m[i * n + col] / m[col * n + col];
            for k in col..n {
                m[i * n + k] -= f * m[col * n + k];
            }
            x[i] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s -= m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
