//! Small dense systems: LU solves for Newton corrections, local
//! minimization subproblems and the saddle systems of tiny meshes.

use crate::{Error, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug)]
pub struct DenseMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }
}

/// Solve `A x = b` by LU with partial pivoting. `a` is consumed as workspace.
pub fn solve_lu(mut a: DenseMat, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = a.rows;
    assert_eq!(a.cols, n);
    assert_eq!(b.len(), n);
    for k in 0..n {
        let mut piv = k;
        let mut best = a.get(k, k).abs();
        for i in k + 1..n {
            let v = a.get(i, k).abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(Error::LinearSolve(format!("zero pivot at column {k}")));
        }
        if piv != k {
            for j in 0..n {
                let t = a.get(k, j);
                a.set(k, j, a.get(piv, j));
                a.set(piv, j, t);
            }
            b.swap(k, piv);
        }
        let d = a.get(k, k);
        for i in k + 1..n {
            let m = a.get(i, k) / d;
            if m == 0.0 {
                continue;
            }
            for j in k..n {
                let v = a.get(i, j) - m * a.get(k, j);
                a.set(i, j, v);
            }
            b[i] -= m * b[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a.get(i, j) * b[j];
        }
        b[i] = s / a.get(i, i);
    }
    Ok(b)
}

/// Smallest eigenvalue and eigenvector of a symmetric matrix, by cyclic
/// Jacobi rotations. Intended for the tiny Hessians of the energy
/// minimizer (4x4 and 9x9).
pub fn symmetric_eigen_min(mut a: DenseMat) -> (f64, Vec<f64>) {
    let n = a.rows;
    assert_eq!(a.cols, n);
    let mut v = DenseMat::zeros(n, n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a.get(p, q).abs();
            }
        }
        if off <= 1e-14 * (1.0 + n as f64) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a.get(q, q) - a.get(p, p)) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut min_idx = 0;
    for i in 1..n {
        if a.get(i, i) < a.get(min_idx, min_idx) {
            min_idx = i;
        }
    }
    let vec = (0..n).map(|k| v.get(k, min_idx)).collect();
    (a.get(min_idx, min_idx), vec)
}
