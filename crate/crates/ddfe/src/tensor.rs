//! Dense algebra for the small square matrices of finite elasticity.
//!
//! Deformation gradients, stresses and their perturbations are n-by-n with
//! n = 2 or 3. The dimension is a runtime value so that data files, models
//! and the command line handle both cases through one code path.

use crate::rng::Rng;
use crate::{Error, Result};

/// Row-major n-by-n matrix, n = 2 or 3. Entries beyond `n * n` stay zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat {
    n: usize,
    a: [f64; 9],
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        assert!(n == 2 || n == 3, "unsupported dimension {n}");
        Self { n, a: [0.0; 9] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_slice(n: usize, vals: &[f64]) -> Self {
        assert_eq!(vals.len(), n * n, "expected {} entries", n * n);
        let mut m = Self::zeros(n);
        m.a[..n * n].copy_from_slice(vals);
        m
    }

    /// Rank-one matrix `u vᵀ`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        let n = u.len();
        assert_eq!(v.len(), n);
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, u[i] * v[j]);
            }
        }
        m
    }

    pub fn diag(vals: &[f64]) -> Self {
        let mut m = Self::zeros(vals.len());
        for (i, &v) in vals.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// 2D rotation by `theta`.
    pub fn rotation2(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_slice(2, &[c, -s, s, c])
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    /// Row-major entries as a flat slice of length n².
    pub fn entries(&self) -> &[f64] {
        &self.a[..self.n * self.n]
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|v| v.is_finite())
    }

    pub fn add(&self, other: &Mat) -> Mat {
        self.check_dim(other);
        let mut out = *self;
        for k in 0..self.n * self.n {
            out.a[k] += other.a[k];
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        self.check_dim(other);
        let mut out = *self;
        for k in 0..self.n * self.n {
            out.a[k] -= other.a[k];
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut out = *self;
        for k in 0..self.n * self.n {
            out.a[k] *= s;
        }
        out
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        self.check_dim(other);
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.get(j, i));
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        dot(self, self).sqrt()
    }

    pub fn det(&self) -> f64 {
        match self.n {
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            _ => {
                self.get(0, 0)
                    * (self.get(1, 1) * self.get(2, 2) - self.get(1, 2) * self.get(2, 1))
                    - self.get(0, 1)
                        * (self.get(1, 0) * self.get(2, 2) - self.get(1, 2) * self.get(2, 0))
                    + self.get(0, 2)
                        * (self.get(1, 0) * self.get(2, 1) - self.get(1, 1) * self.get(2, 0))
            }
        }
    }

    /// Inverse; fails on singular input.
    pub fn inverse(&self) -> Result<Mat> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Singular);
        }
        // cof(A) = d · A⁻ᵀ, so A⁻¹ = cof(A)ᵀ / d.
        Ok(cof(self).transpose().scale(1.0 / d))
    }

    fn check_dim(&self, other: &Mat) {
        assert_eq!(
            self.n, other.n,
            "dimension mismatch: {} vs {}",
            self.n, other.n
        );
    }

    /// Antisymmetry residual of `P Fᵀ`, the moment-equilibrium defect
    /// `|P Fᵀ − F Pᵀ|`.
    pub fn moment_residual(f: &Mat, p: &Mat) -> f64 {
        let pf = p.matmul(&f.transpose());
        pf.sub(&pf.transpose()).norm()
    }
}

/// Frobenius inner product `A·B = Tr AᵀB`.
pub fn dot(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.n, b.n, "dimension mismatch: {} vs {}", a.n, b.n);
    let m = a.n * a.n;
    let mut s = 0.0;
    for k in 0..m {
        s += a.a[k] * b.a[k];
    }
    s
}

/// Cofactor matrix, the gradient of the determinant: `A·cof A = n det A`.
///
/// In 2D `cof [[a,b],[c,d]] = [[d,−c],[−b,a]]`; in 3D the matrix of signed
/// 2-by-2 minors.
pub fn cof(m: &Mat) -> Mat {
    match m.n {
        2 => Mat::from_slice(
            2,
            &[m.get(1, 1), -m.get(1, 0), -m.get(0, 1), m.get(0, 0)],
        ),
        _ => {
            let mut out = Mat::zeros(3);
            for i in 0..3 {
                for j in 0..3 {
                    let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
                    let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                    // Cyclic index choice absorbs the (−1)^{i+j} sign.
                    out.set(
                        i,
                        j,
                        m.get(i1, j1) * m.get(i2, j2) - m.get(i1, j2) * m.get(i2, j1),
                    );
                }
            }
            out
        }
    }
}

/// Number of minor components: 5 in 2D, 19 in 3D.
pub fn minor_len(n: usize) -> usize {
    match n {
        2 => 5,
        3 => 19,
        _ => panic!("unsupported dimension {n}"),
    }
}

/// The vector of all minors of `G`: `(G, det G)` in 2D and
/// `(G, cof G, det G)` in 3D, each block row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MinorVector {
    n: usize,
    values: Vec<f64>,
}

impl MinorVector {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn det(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn dot(&self, other: &MinorVector) -> f64 {
        assert_eq!(self.n, other.n);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }
}

pub fn minors(g: &Mat) -> MinorVector {
    let mut values = Vec::with_capacity(minor_len(g.n));
    values.extend_from_slice(g.entries());
    if g.n == 3 {
        values.extend_from_slice(cof(g).entries());
    }
    values.push(g.det());
    MinorVector { n: g.n, values }
}

/// Uniformly distributed rotation, deterministic per seed.
///
/// 2D draws one angle; 3D maps a uniform unit quaternion to SO(3).
pub fn random_rotation(n: usize, seed: u64) -> Mat {
    let mut rng = Rng::new(seed);
    rotation_from_rng(n, &mut rng)
}

pub(crate) fn rotation_from_rng(n: usize, rng: &mut Rng) -> Mat {
    match n {
        2 => Mat::rotation2(rng.uniform_in(0.0, 2.0 * std::f64::consts::PI)),
        3 => {
            let q: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
            quaternion_to_rotation(&q)
        }
        _ => panic!("unsupported dimension {n}"),
    }
}

/// Rotation from an (unnormalized) quaternion `(w, x, y, z)`.
pub(crate) fn quaternion_to_rotation(q: &[f64]) -> Mat {
    let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let (w, x, y, z) = (q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm);
    Mat::from_slice(
        3,
        &[
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    )
}

/// Rotation factor `R` of the polar decomposition `A = R U`, `U` symmetric
/// positive definite. Requires `det A > 0`.
pub fn polar_rotation_part(a: &Mat) -> Result<Mat> {
    if !(a.det() > 0.0) {
        return Err(Error::Singular);
    }
    match a.n {
        2 => {
            // A + cof A = (λ₁+λ₂) R with λᵢ the singular values.
            let s = (dot(a, a) + 2.0 * a.det()).sqrt();
            Ok(a.add(&cof(a)).scale(1.0 / s))
        }
        _ => {
            // Scaled Newton iteration X ← (γX + (γX)⁻ᵀ)/2.
            let mut x = *a;
            for _ in 0..60 {
                let xinv = x.inverse()?;
                let gamma = (xinv.norm() / x.norm()).sqrt();
                let next = x.scale(0.5 * gamma).add(&xinv.transpose().scale(0.5 / gamma));
                let delta = next.sub(&x).norm();
                x = next;
                if delta <= 1e-15 * (1.0 + x.norm()) {
                    break;
                }
            }
            Ok(x)
        }
    }
}
