//! Symmetric sparse systems assembled from triplets, solved by Jacobi
//! preconditioned conjugate gradients with a dense LU fallback for tangent
//! matrices that stray from positive definiteness.

use crate::dense::{solve_lu, DenseMat};
use crate::{Error, Result};

pub struct Triplets {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        if v != 0.0 {
            self.entries.push((i, j, v));
        }
    }

    pub fn to_csr(&self) -> Csr {
        let n = self.n;
        let mut sorted = self.entries.clone();
        sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
        for (i, j, v) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _, _) in &merged {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols = merged.iter().map(|e| e.1).collect();
        let vals = merged.iter().map(|e| e.2).collect();
        Csr {
            n,
            row_ptr,
            cols,
            vals,
        }
    }
}

pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] == i {
                    d[i] = self.vals[k];
                }
            }
        }
        d
    }

    pub fn to_dense(&self) -> DenseMat {
        let mut m = DenseMat::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m.add_to(i, self.cols[k], self.vals[k]);
            }
        }
        m
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned CG for symmetric positive definite systems, relative
/// tolerance on the residual. Errors when the residual stops improving
/// before the target (the caller may then fall back to a direct solve).
pub fn solve_cg(a: &Csr, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    let n = a.n();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let target = rel_tol * bnorm;
    let diag = a.diagonal();
    let precond: Vec<f64> = diag
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(r, p)| r * p).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = 40 * n + 400;
    // Plateaus spanning many iterations are normal for CG; only a long
    // window without any improvement counts as a stall.
    let stall_window = 2 * n + 200;
    let mut best = f64::INFINITY;
    let mut stall = 0usize;
    for _ in 0..max_iter {
        let rnorm = norm(&r);
        if rnorm <= target {
            return Ok(x);
        }
        if rnorm < best * (1.0 - 1e-9) {
            best = rnorm;
            stall = 0;
        } else {
            stall += 1;
            if stall > stall_window {
                break;
            }
        }
        a.mul(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolve(format!(
                "CG breakdown: non-positive curvature {pap:e}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * precond[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // Accept a stalled solution close to the floor of double precision.
    let mut check = vec![0.0; n];
    a.mul(&x, &mut check);
    let res: f64 = check
        .iter()
        .zip(b)
        .map(|(c, b)| (c - b) * (c - b))
        .sum::<f64>()
        .sqrt();
    if res <= 1e-10 * bnorm {
        Ok(x)
    } else {
        Err(Error::LinearSolve(format!(
            "CG stalled at relative residual {:e}",
            res / bnorm
        )))
    }
}

/// CG with dense LU fallback; for symmetric systems that may be indefinite
/// far from a solution (Newton tangents).
pub fn solve_sym(a: &Csr, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    match solve_cg(a, b, rel_tol) {
        Ok(x) => Ok(x),
        Err(_) => solve_lu(a.to_dense(), b.to_vec()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn laplacian_1d(n: usize) -> Csr {
        let mut t = Triplets::new(n);
        for i in 0..n {
            t.push(i, i, 2.0);
            if i > 0 {
                t.push(i, i - 1, -1.0);
            }
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
            }
        }
        t.to_csr()
    }

    #[test]
    fn csr_accumulates_duplicates() {
        let mut t = Triplets::new(2);
        t.push(0, 0, 1.0);
        t.push(0, 0, 2.0);
        t.push(1, 1, 1.0);
        let a = t.to_csr();
        let mut y = vec![0.0; 2];
        a.mul(&[1.0, 1.0], &mut y);
        assert_eq!(y, vec![3.0, 1.0]);
    }

    #[test]
    fn cg_solves_spd_system_to_tight_tolerance() {
        let n = 300;
        let a = laplacian_1d(n);
        let mut rng = Rng::new(1);
        let x_true: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let mut b = vec![0.0; n];
        a.mul(&x_true, &mut b);
        let x = solve_cg(&a, &b, 1e-13).unwrap();
        let err: f64 = x
            .iter()
            .zip(&x_true)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-8, "err {err}");
    }

    #[test]
    fn indefinite_system_falls_back_to_lu() {
        let mut t = Triplets::new(2);
        t.push(0, 0, 1.0);
        t.push(1, 1, -1.0);
        let a = t.to_csr();
        let x = solve_sym(&a, &[2.0, 3.0], 1e-13).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] + 3.0).abs() < 1e-12);
    }
}
