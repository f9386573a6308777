//! Numerical certification of material-law hypotheses.
//!
//! Every check here is a falsification search, not a proof: it samples the
//! stated inequality over a seeded, reproducible measure and reports either
//! `violated` with a concrete witness or `no-violation-found`. Verdicts are
//! deterministic functions of `(seed, budget)`; batches are seeded
//! independently and reduced with order-independent minima so the sampling
//! schedule cannot change a verdict.
//!
//! Sampling measure: matrix entries are i.i.d. standard normal, rescaled to
//! a log-uniform Frobenius norm. Coercivity and growth sweep norms up to
//! 1e3 where the leading powers dominate; the monotonicity checks stay in
//! `[1e-2, 10]` where the gap terms are smallest relative to rounding.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{DeviationPair, LocalDataSet, PhasePoint};
use crate::model::{EnergyModel, Flavor};
use crate::rng::Rng;
use crate::tensor::{cof, dot, rotation_from_rng, Mat};
use crate::{Error, Result};

const BATCH: u64 = 4096;
/// Relative slack below which a negative margin counts as rounding noise.
const MARGIN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub enum Property {
    #[serde(rename = "coercivity")]
    Coercivity,
    #[serde(rename = "polymonotonicity_2d")]
    Polymonotonicity2d,
    #[serde(rename = "polymonotonicity_3d")]
    Polymonotonicity3d,
    #[serde(rename = "quasimonotonicity")]
    Quasimonotonicity,
    #[serde(rename = "growth")]
    Growth,
    #[serde(rename = "frame_indifference")]
    FrameIndifference,
    #[serde(rename = "moment_equilibrium")]
    MomentEquilibrium,
}

impl Property {
    pub fn parse(s: &str) -> Option<Property> {
        match s {
            "coercivity" => Some(Property::Coercivity),
            "polymonotonicity_2d" => Some(Property::Polymonotonicity2d),
            "polymonotonicity_3d" => Some(Property::Polymonotonicity3d),
            "quasimonotonicity" => Some(Property::Quasimonotonicity),
            "growth" => Some(Property::Growth),
            "frame_indifference" => Some(Property::FrameIndifference),
            "moment_equilibrium" => Some(Property::MomentEquilibrium),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub enum Verdict {
    #[serde(rename = "no-violation-found")]
    NoViolationFound,
    #[serde(rename = "violated")]
    Violated,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct WitnessMat {
    pub name: String,
    pub n: usize,
    /// Row-major entries.
    pub entries: Vec<f64>,
}

impl WitnessMat {
    pub fn new(name: &str, m: &Mat) -> Self {
        Self {
            name: name.to_string(),
            n: m.n(),
            entries: m.entries().to_vec(),
        }
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_slice(self.n, &self.entries)
    }
}

/// The most violating (or least comfortable) sample found, with the two
/// sides of the inequality evaluated there.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Witness {
    pub points: Vec<WitnessMat>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Certificate {
    pub property: Property,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub samples_tested: u64,
    pub constants: BTreeMap<String, f64>,
    pub seed: u64,
    pub budget: u64,
}

impl Certificate {
    fn from_min_margin(
        property: Property,
        tracker: MarginTracker,
        samples: u64,
        mut constants: BTreeMap<String, f64>,
        seed: u64,
        budget: u64,
    ) -> Certificate {
        constants.insert("min_margin".into(), tracker.margin);
        let violated = tracker.is_violation();
        Certificate {
            property,
            verdict: if violated {
                Verdict::Violated
            } else {
                Verdict::NoViolationFound
            },
            witness: if violated { tracker.witness } else { None },
            samples_tested: samples,
            constants,
            seed,
            budget,
        }
    }
}

/// Tracks the minimal margin and its witness; order-independent because a
/// strictly smaller margin is required to take over.
struct MarginTracker {
    margin: f64,
    witness: Option<Witness>,
}

impl MarginTracker {
    fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            witness: None,
        }
    }

    fn offer(&mut self, lhs: f64, rhs: f64, margin: f64, points: impl FnOnce() -> Vec<WitnessMat>) {
        if margin < self.margin || self.witness.is_none() {
            self.margin = margin.min(self.margin);
            self.witness = Some(Witness {
                points: points(),
                lhs,
                rhs,
                margin,
            });
        }
    }

    fn is_violation(&self) -> bool {
        match &self.witness {
            Some(w) => w.margin < -MARGIN_TOL * (1.0 + w.lhs.abs() + w.rhs.abs()),
            None => false,
        }
    }
}

fn sample_mat(n: usize, rng: &mut Rng, lo: f64, hi: f64) -> Mat {
    loop {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, rng.normal());
            }
        }
        let norm = m.norm();
        if norm > 0.0 {
            return m.scale(rng.log_uniform(lo, hi) / norm);
        }
    }
}

fn batches(budget: u64) -> impl Iterator<Item = (u64, u64)> {
    let full = budget / BATCH;
    let rest = budget % BATCH;
    (0..full)
        .map(|b| (b, BATCH))
        .chain((rest > 0).then_some((full, rest)))
}

// ---------------------------------------------------------------------------
// Coercivity
// ---------------------------------------------------------------------------

/// Fitted constants of the coercivity lower bound
/// `(1/c_F)|ξ|^p + (1/c_P)|T(ξ)|^q − c ≤ ξ·T(ξ)`.
#[derive(Clone, Copy, Debug)]
pub struct CoercivityConstants {
    pub inv_c_f: f64,
    pub inv_c_p: f64,
    pub c: f64,
    pub fit_ok: bool,
}

/// Both sides of the coercivity inequality at `ξ`:
/// `lhs = (1/c_F)|ξ|^p + (1/c_P)|T(ξ)|^q − c`, `rhs = ξ·T(ξ)`.
pub fn coercivity_sides(
    t: impl Fn(&Mat) -> Mat,
    p: f64,
    k: &CoercivityConstants,
    xi: &Mat,
) -> (f64, f64) {
    let q = p / (p - 1.0);
    let txi = t(xi);
    let lhs = k.inv_c_f * xi.norm().powf(p) + k.inv_c_p * txi.norm().powf(q) - k.c;
    let rhs = dot(xi, &txi);
    (lhs, rhs)
}

/// Stage one of the coercivity check: fit `(c_F, c_P, c)` on a coarse
/// radial grid. The leading ratios are halved for headroom; `c` absorbs the
/// largest observed deficit with a further 1.5x margin. A failed fit (the
/// work `ξ·T(ξ)` does not dominate the powers at large norm) falls back to
/// unit constants, which the fuzz stage will then falsify.
pub fn fit_coercivity_constants(
    t: impl Fn(&Mat) -> Mat,
    n: usize,
    p: f64,
    samples: u64,
    seed: u64,
) -> CoercivityConstants {
    let q = p / (p - 1.0);
    let mut rng = Rng::with_stream(seed, 0);
    let mut grid = Vec::with_capacity(samples as usize);
    for _ in 0..samples {
        let xi = sample_mat(n, &mut rng, 1e-2, 1e3);
        let txi = t(&xi);
        grid.push((xi.norm().powf(p), txi.norm().powf(q), dot(&xi, &txi)));
    }
    let mut alpha = f64::INFINITY;
    let mut beta = f64::INFINITY;
    for &(a, b, s) in grid.iter().filter(|(a, _, _)| *a >= 10f64.powf(p)) {
        if a > 0.0 {
            alpha = alpha.min(s / a);
        }
        if b > 0.0 {
            beta = beta.min(s / b);
        }
    }
    let fit_ok = alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0;
    if !fit_ok {
        // The work ξ·T(ξ) fails to dominate at large norms: no admissible
        // constants exist on the sampled region. Unit constants let the
        // fuzz stage exhibit the violation instead of hiding it in `c`.
        return CoercivityConstants {
            inv_c_f: 1.0,
            inv_c_p: 1.0,
            c: 1.0,
            fit_ok,
        };
    }
    let (inv_c_f, inv_c_p) = (0.5 * alpha, 0.5 * beta);
    // With the halved leading constants the deficit can only come from the
    // bounded small-norm region, which `c` is meant to absorb.
    let deficit = grid
        .iter()
        .map(|&(a, b, s)| inv_c_f * a + inv_c_p * b - s)
        .fold(0.0f64, f64::max);
    CoercivityConstants {
        inv_c_f,
        inv_c_p,
        c: 1.0 + 1.5 * deficit,
        fit_ok,
    }
}

/// Search for a violation of `(p, q)`-coercivity of the graph of `t`.
///
/// Constants are fitted first and then frozen; the fuzz stage samples
/// log-uniform norms in `[1e-2, 1e3]` with random directions.
pub fn check_coercivity(
    t: impl Fn(&Mat) -> Mat,
    n: usize,
    p: f64,
    budget: u64,
    seed: u64,
) -> Result<Certificate> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "coercivity exponent must satisfy p > 1, got {p}"
        )));
    }
    let fit_samples = (budget / 10).clamp(512, 20_000);
    let k = fit_coercivity_constants(&t, n, p, fit_samples, seed);

    let mut tracker = MarginTracker::new();
    for (batch, len) in batches(budget) {
        let mut rng = Rng::with_stream(seed, 1 + batch);
        for _ in 0..len {
            let xi = sample_mat(n, &mut rng, 1e-2, 1e3);
            let (lhs, rhs) = coercivity_sides(&t, p, &k, &xi);
            let margin = rhs - lhs;
            tracker.offer(lhs, rhs, margin, || {
                vec![WitnessMat::new("xi", &xi), WitnessMat::new("T_xi", &t(&xi))]
            });
        }
    }
    let mut constants = BTreeMap::new();
    constants.insert("c".into(), k.c);
    constants.insert("c_F".into(), 1.0 / k.inv_c_f);
    constants.insert("c_P".into(), 1.0 / k.inv_c_p);
    constants.insert("fit_ok".into(), if k.fit_ok { 1.0 } else { 0.0 });
    constants.insert("fit_samples".into(), fit_samples as f64);
    constants.insert("p".into(), p);
    constants.insert("q".into(), p / (p - 1.0));
    Ok(Certificate::from_min_margin(
        Property::Coercivity,
        tracker,
        budget,
        constants,
        seed,
        budget,
    ))
}

// ---------------------------------------------------------------------------
// Polymonotonicity
// ---------------------------------------------------------------------------

/// Both sides of the 2D monotonicity-up-to-null-Lagrangians bound:
/// `lhs = (T(F+G) − T(F))·G`,
/// `rhs = ¼a(|G|² + 3F·G)² + g′(det F) det G + (1 − b/2)|G|²`.
pub fn polymonotone_2d_sides(model: &EnergyModel, f: &Mat, g: &Mat) -> (f64, f64) {
    let lhs = dot(&model.stress(&f.add(g)).sub(&model.stress(f)), g);
    let a = model.quartic_coeff();
    let (b, _) = model.g().growth_bounds();
    let quart = g.norm() * g.norm() + 3.0 * dot(f, g);
    let rhs = 0.25 * a * quart * quart
        + model.g().deriv(f.det()) * g.det()
        + (1.0 - 0.5 * b) * dot(g, g);
    (lhs, rhs)
}

pub fn check_polymonotone_2d(model: &EnergyModel, budget: u64, seed: u64) -> Result<Certificate> {
    if !matches!(model.flavor(), Flavor::W2 | Flavor::HatW2) {
        return Err(Error::InvalidParameter(
            "polymonotonicity_2d needs a W2 or hatW2 model".into(),
        ));
    }
    let mut tracker = MarginTracker::new();
    for (batch, len) in batches(budget) {
        let mut rng = Rng::with_stream(seed, 1 + batch);
        for _ in 0..len {
            let f = sample_mat(2, &mut rng, 1e-2, 10.0);
            let g = sample_mat(2, &mut rng, 1e-2, 10.0);
            let (lhs, rhs) = polymonotone_2d_sides(model, &f, &g);
            tracker.offer(lhs, rhs, lhs - rhs, || {
                vec![WitnessMat::new("F", &f), WitnessMat::new("G", &g)]
            });
        }
    }
    let (b, d) = model.g().growth_bounds();
    let mut constants = BTreeMap::new();
    constants.insert("a".into(), model.quartic_coeff());
    constants.insert("b".into(), b);
    constants.insert("d".into(), d);
    constants.insert(
        "in_window".into(),
        if model.windows().polymonotone_2d { 1.0 } else { 0.0 },
    );
    Ok(Certificate::from_min_margin(
        Property::Polymonotonicity2d,
        tracker,
        budget,
        constants,
        seed,
        budget,
    ))
}

/// Both sides of the 3D bound:
/// `lhs = (T(F+G) − T(F))·G`,
/// `rhs = c′e|G|⁶ + g′(det F)(F·cof G + det G) + g′(0)(F·cof G + 2 det G)`.
pub fn polymonotone_3d_sides(
    model: &EnergyModel,
    c_prime: f64,
    f: &Mat,
    g: &Mat,
) -> (f64, f64) {
    let lhs = dot(&model.stress(&f.add(g)).sub(&model.stress(f)), g);
    let gn2 = dot(g, g);
    let f_cof_g = dot(f, &cof(g));
    let det_g = g.det();
    let gd = model.g();
    let rhs = c_prime * model.sextic_coeff() * gn2 * gn2 * gn2
        + gd.deriv(f.det()) * (f_cof_g + det_g)
        + gd.deriv(0.0) * (f_cof_g + 2.0 * det_g);
    (lhs, rhs)
}

/// `c_prime = None` estimates the sextic-gap constant first (deterministic
/// for the given seed) and records it in the certificate.
pub fn check_polymonotone_3d(
    model: &EnergyModel,
    budget: u64,
    seed: u64,
    c_prime: Option<f64>,
) -> Result<Certificate> {
    if !matches!(model.flavor(), Flavor::W3 | Flavor::HatW3) {
        return Err(Error::InvalidParameter(
            "polymonotonicity_3d needs a W3 or hatW3 model".into(),
        ));
    }
    let mut constants = BTreeMap::new();
    let c_prime = match c_prime {
        Some(v) => v,
        None => {
            let est = estimate_cstar_constants(seed, (budget / 20).clamp(2_000, 20_000));
            for (k, v) in &est {
                constants.insert(k.clone(), *v);
            }
            est["c_prime"]
        }
    };
    constants.insert("c_prime_used".into(), c_prime);
    let mut tracker = MarginTracker::new();
    for (batch, len) in batches(budget) {
        let mut rng = Rng::with_stream(seed, 1 + batch);
        for _ in 0..len {
            let f = sample_mat(3, &mut rng, 1e-2, 10.0);
            let g = sample_mat(3, &mut rng, 1e-2, 10.0);
            let (lhs, rhs) = polymonotone_3d_sides(model, c_prime, &f, &g);
            tracker.offer(lhs, rhs, lhs - rhs, || {
                vec![WitnessMat::new("F", &f), WitnessMat::new("G", &g)]
            });
        }
    }
    let (b, d) = model.g().growth_bounds();
    constants.insert("b".into(), b);
    constants.insert("d".into(), d);
    constants.insert("e".into(), model.sextic_coeff());
    Ok(Certificate::from_min_margin(
        Property::Polymonotonicity3d,
        tracker,
        budget,
        constants,
        seed,
        budget,
    ))
}

// ---------------------------------------------------------------------------
// Quasimonotonicity
// ---------------------------------------------------------------------------

/// The strictly positive gap `B(F, Dφ)` on the right-hand side of the
/// quasimonotonicity inequality.
#[derive(Clone, Copy, Debug)]
pub enum QuasiGap {
    /// `B(F, G) = coeff |G|²` (the 2D gap, `coeff = 1 − b/2`).
    Quadratic { coeff: f64 },
    /// `B(F, G) = coeff |G|⁶` (the 3D gap, `coeff = c′ e`).
    Sextic { coeff: f64 },
}

impl QuasiGap {
    pub fn eval(&self, g: &Mat) -> f64 {
        let g2 = dot(g, g);
        match self {
            QuasiGap::Quadratic { coeff } => coeff * g2,
            QuasiGap::Sextic { coeff } => coeff * g2 * g2 * g2,
        }
    }

    /// The gap a model's polymonotonicity bound provides.
    pub fn for_model(model: &EnergyModel, c_prime: Option<f64>) -> QuasiGap {
        if model.n() == 2 {
            let (b, _) = model.g().growth_bounds();
            QuasiGap::Quadratic {
                coeff: 1.0 - 0.5 * b,
            }
        } else {
            QuasiGap::Sextic {
                coeff: c_prime.unwrap_or(0.0) * model.sextic_coeff(),
            }
        }
    }
}

/// A piecewise-affine test field on the unit cube, zero near the boundary.
///
/// Nodal values come from a handful of bump-modulated Fourier modes; the
/// field is interpolated linearly on a simplicial split of the grid cells.
/// Piecewise-affine fields make the minors of `Dφ` integrate to zero
/// exactly, so the discrete inequality has no quadrature leakage from the
/// null-Lagrangian terms.
pub struct TestField {
    n: usize,
    grid: usize,
    /// Nodal values, `(grid+1)^n` nodes times `n` components.
    nodal: Vec<f64>,
}

fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

fn bump_1d(t: f64) -> f64 {
    const DELTA: f64 = 0.2;
    if t < DELTA {
        smoothstep(t / DELTA)
    } else if t > 1.0 - DELTA {
        smoothstep((1.0 - t) / DELTA)
    } else {
        1.0
    }
}

impl TestField {
    /// Draw `≤ 5` Fourier modes with random amplitudes, integer frequencies
    /// and phases, multiply by a plateau bump, and sample at the grid nodes.
    /// The gradient magnitude is normalized to `scale`.
    pub fn random(n: usize, grid: usize, rng: &mut Rng, scale: f64) -> TestField {
        let modes = 1 + rng.range(5);
        let mut amps = Vec::new();
        let mut freqs = Vec::new();
        let mut phases = Vec::new();
        for _ in 0..modes {
            amps.push((0..n).map(|_| rng.normal()).collect::<Vec<f64>>());
            freqs.push((0..n).map(|_| 1 + rng.range(3)).collect::<Vec<usize>>());
            phases.push(
                (0..n)
                    .map(|_| rng.uniform_in(0.0, 2.0 * std::f64::consts::PI))
                    .collect::<Vec<f64>>(),
            );
        }
        let nodes_per_axis = grid + 1;
        let node_count = nodes_per_axis.pow(n as u32);
        let mut nodal = vec![0.0; node_count * n];
        for node in 0..node_count {
            let mut idx = node;
            let mut x = [0.0f64; 3];
            let mut bump = 1.0;
            for ax in 0..n {
                let i = idx % nodes_per_axis;
                idx /= nodes_per_axis;
                x[ax] = i as f64 / grid as f64;
                bump *= bump_1d(x[ax]);
            }
            if bump == 0.0 {
                continue;
            }
            for k in 0..modes {
                let mut shape = 1.0;
                for ax in 0..n {
                    shape *=
                        (std::f64::consts::PI * freqs[k][ax] as f64 * x[ax] + phases[k][ax]).sin();
                }
                for comp in 0..n {
                    nodal[node * n + comp] += bump * amps[k][comp] * shape;
                }
            }
        }
        let mut field = TestField { n, grid, nodal };
        let max_grad = field
            .for_each_element(|_, g| g.norm())
            .into_iter()
            .fold(0.0f64, f64::max);
        if max_grad > 0.0 {
            let s = scale / max_grad;
            for v in &mut field.nodal {
                *v *= s;
            }
        }
        field
    }

    pub fn zero(n: usize, grid: usize) -> TestField {
        let node_count = (grid + 1).pow(n as u32);
        TestField {
            n,
            grid,
            nodal: vec![0.0; node_count * n],
        }
    }

    fn node_value(&self, multi: &[usize]) -> Vec<f64> {
        let npa = self.grid + 1;
        let mut flat = 0;
        for ax in (0..self.n).rev() {
            flat = flat * npa + multi[ax];
        }
        self.nodal[flat * self.n..(flat + 1) * self.n].to_vec()
    }

    /// Apply `f(volume, Dφ_e)` on every simplex; returns the results in a
    /// fixed traversal order.
    pub fn for_each_element(&self, mut f: impl FnMut(f64, &Mat) -> f64) -> Vec<f64> {
        let h = 1.0 / self.grid as f64;
        let mut out = Vec::new();
        if self.n == 2 {
            for cj in 0..self.grid {
                for ci in 0..self.grid {
                    let corners = [[ci, cj], [ci + 1, cj], [ci + 1, cj + 1], [ci, cj + 1]];
                    for tri in [[0usize, 1, 2], [0, 2, 3]] {
                        let p: Vec<[f64; 2]> = tri
                            .iter()
                            .map(|&k| [corners[k][0] as f64 * h, corners[k][1] as f64 * h])
                            .collect();
                        let v: Vec<Vec<f64>> =
                            tri.iter().map(|&k| self.node_value(&corners[k])).collect();
                        let (vol, grad) = simplex_gradient_2d(&p, &v);
                        out.push(f(vol, &grad));
                    }
                }
            }
        } else {
            // Kuhn split: six tetrahedra sharing the main diagonal.
            const TETS: [[usize; 4]; 6] = [
                [0, 1, 3, 7],
                [0, 1, 5, 7],
                [0, 2, 3, 7],
                [0, 2, 6, 7],
                [0, 4, 5, 7],
                [0, 4, 6, 7],
            ];
            for ck in 0..self.grid {
                for cj in 0..self.grid {
                    for ci in 0..self.grid {
                        let mut corners = [[0usize; 3]; 8];
                        for (bit, c) in corners.iter_mut().enumerate() {
                            *c = [
                                ci + (bit & 1),
                                cj + ((bit >> 1) & 1),
                                ck + ((bit >> 2) & 1),
                            ];
                        }
                        for tet in TETS {
                            let p: Vec<[f64; 3]> = tet
                                .iter()
                                .map(|&k| {
                                    [
                                        corners[k][0] as f64 * h,
                                        corners[k][1] as f64 * h,
                                        corners[k][2] as f64 * h,
                                    ]
                                })
                                .collect();
                            let v: Vec<Vec<f64>> =
                                tet.iter().map(|&k| self.node_value(&corners[k])).collect();
                            let (vol, grad) = simplex_gradient_3d(&p, &v);
                            out.push(f(vol, &grad));
                        }
                    }
                }
            }
        }
        out
    }
}

fn simplex_gradient_2d(p: &[[f64; 2]], v: &[Vec<f64>]) -> (f64, Mat) {
    let e = Mat::from_slice(
        2,
        &[
            p[1][0] - p[0][0],
            p[2][0] - p[0][0],
            p[1][1] - p[0][1],
            p[2][1] - p[0][1],
        ],
    );
    let vol = e.det().abs() / 2.0;
    let u = Mat::from_slice(
        2,
        &[
            v[1][0] - v[0][0],
            v[2][0] - v[0][0],
            v[1][1] - v[0][1],
            v[2][1] - v[0][1],
        ],
    );
    (vol, u.matmul(&e.inverse().expect("degenerate simplex")))
}

fn simplex_gradient_3d(p: &[[f64; 3]], v: &[Vec<f64>]) -> (f64, Mat) {
    let mut e = Mat::zeros(3);
    let mut u = Mat::zeros(3);
    for col in 0..3 {
        for row in 0..3 {
            e.set(row, col, p[col + 1][row] - p[0][row]);
            u.set(row, col, v[col + 1][row] - v[0][row]);
        }
    }
    let vol = e.det().abs() / 6.0;
    (vol, u.matmul(&e.inverse().expect("degenerate simplex")))
}

/// Integral sides of the quasimonotonicity inequality for one `(F, φ)`:
/// `lhs = ∫ (T(F+Dφ) − T(F))·Dφ`, `rhs = ∫ B(F, Dφ)`.
pub fn quasimonotone_sides(
    t: impl Fn(&Mat) -> Mat,
    f: &Mat,
    field: &TestField,
    gap: &QuasiGap,
) -> (f64, f64) {
    let tf = t(f);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    field.for_each_element(|vol, g| {
        lhs += vol * dot(&t(&f.add(g)).sub(&tf), g);
        rhs += vol * gap.eval(g);
        0.0
    });
    (lhs, rhs)
}

/// Regenerate the `trial`-th test pair of batch `batch` (used to replay a
/// quasimonotonicity witness).
pub fn quasimonotone_trial(
    n: usize,
    grid: usize,
    seed: u64,
    batch: u64,
    trial: u64,
) -> (Mat, TestField) {
    let mut rng = Rng::with_stream(seed, 1 + batch);
    let mut out = None;
    for _ in 0..=trial {
        let f = sample_mat(n, &mut rng, 1e-2, 10.0);
        let scale = rng.log_uniform(0.05, 2.0);
        let field = TestField::random(n, grid, &mut rng, scale);
        out = Some((f, field));
    }
    out.unwrap()
}

pub fn check_quasimonotone(
    t: impl Fn(&Mat) -> Mat,
    n: usize,
    gap: QuasiGap,
    grid: usize,
    budget: u64,
    seed: u64,
) -> Result<Certificate> {
    if grid < 8 {
        return Err(Error::InvalidParameter(format!(
            "quasimonotonicity grid must be >= 8, got {grid}"
        )));
    }
    let mut tracker = MarginTracker::new();
    let mut where_found = (0u64, 0u64);
    for (batch, len) in batches(budget) {
        let mut rng = Rng::with_stream(seed, 1 + batch);
        for trial in 0..len {
            let f = sample_mat(n, &mut rng, 1e-2, 10.0);
            let scale = rng.log_uniform(0.05, 2.0);
            let field = TestField::random(n, grid, &mut rng, scale);
            let (lhs, rhs) = quasimonotone_sides(&t, &f, &field, &gap);
            let margin = lhs - rhs;
            if margin < tracker.margin {
                where_found = (batch, trial);
            }
            tracker.offer(lhs, rhs, margin, || vec![WitnessMat::new("F", &f)]);
        }
    }
    let mut constants = BTreeMap::new();
    constants.insert("grid".into(), grid as f64);
    constants.insert("witness_batch".into(), where_found.0 as f64);
    constants.insert("witness_trial".into(), where_found.1 as f64);
    match gap {
        QuasiGap::Quadratic { coeff } => {
            constants.insert("gap_quadratic_coeff".into(), coeff);
        }
        QuasiGap::Sextic { coeff } => {
            constants.insert("gap_sextic_coeff".into(), coeff);
        }
    }
    Ok(Certificate::from_min_margin(
        Property::Quasimonotonicity,
        tracker,
        budget,
        constants,
        seed,
        budget,
    ))
}

// ---------------------------------------------------------------------------
// Growth
// ---------------------------------------------------------------------------

/// Ratio `|T(F+G) − T(F)| / ((|F|^{p−2} + |G|^{p−2} + 1)|G|)`.
pub fn growth_ratio(t: impl Fn(&Mat) -> Mat, p: f64, f: &Mat, g: &Mat) -> f64 {
    let num = t(&f.add(g)).sub(&t(f)).norm();
    let den = (f.norm().powf(p - 2.0) + g.norm().powf(p - 2.0) + 1.0) * g.norm();
    num / den
}

/// Estimate the growth constant and look for divergence along the radial
/// ladder. The verdict is `violated` only when the top norm decade needs a
/// constant more than ten times the one fitted over the lower decades, or
/// when the ratio overflows.
pub fn check_growth(
    t: impl Fn(&Mat) -> Mat,
    n: usize,
    p: f64,
    budget: u64,
    seed: u64,
) -> Result<Certificate> {
    if !(p >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "growth exponent must satisfy p >= 2, got {p}"
        )));
    }
    const DECADES: usize = 5; // max(|F|,|G|) in [1e-2, 1e3)
    let mut decade_max = [0.0f64; DECADES];
    let mut best: Option<(f64, Mat, Mat)> = None;
    let mut nonfinite: Option<(Mat, Mat)> = None;
    for (batch, len) in batches(budget) {
        let mut rng = Rng::with_stream(seed, 1 + batch);
        for _ in 0..len {
            let f = sample_mat(n, &mut rng, 1e-2, 1e3);
            let g = sample_mat(n, &mut rng, 1e-2, 1e3);
            let ratio = growth_ratio(&t, p, &f, &g);
            if !ratio.is_finite() {
                if nonfinite.is_none() {
                    nonfinite = Some((f, g));
                }
                continue;
            }
            let r = f.norm().max(g.norm());
            let decade = ((r.log10() + 2.0).floor() as isize).clamp(0, DECADES as isize - 1);
            let decade = decade as usize;
            decade_max[decade] = decade_max[decade].max(ratio);
            if best.as_ref().is_none_or(|(b, _, _)| ratio > *b) {
                best = Some((ratio, f, g));
            }
        }
    }
    let baseline = decade_max[..3].iter().fold(0.0f64, |m, v| m.max(*v));
    let top = decade_max[DECADES - 1];
    let diverges = nonfinite.is_some() || (baseline > 0.0 && top > 10.0 * baseline);

    let mut constants = BTreeMap::new();
    let c_est = best.as_ref().map(|(r, _, _)| *r).unwrap_or(0.0);
    constants.insert("c".into(), if nonfinite.is_some() { f64::MAX } else { c_est });
    constants.insert("nonfinite".into(), if nonfinite.is_some() { 1.0 } else { 0.0 });
    constants.insert("p".into(), p);
    for (k, v) in decade_max.iter().enumerate() {
        constants.insert(format!("ratio_decade_{k}"), *v);
    }

    let witness = if diverges {
        // Overflowing ratios are clamped so the certificate stays valid
        // JSON; the nonfinite flag records what happened.
        let (ratio, f, g) = match &nonfinite {
            Some((f, g)) => (f64::MAX, *f, *g),
            None => best.unwrap(),
        };
        Some(Witness {
            points: vec![WitnessMat::new("F", &f), WitnessMat::new("G", &g)],
            lhs: ratio,
            rhs: 10.0 * baseline,
            margin: 10.0 * baseline - ratio,
        })
    } else {
        None
    };
    Ok(Certificate {
        property: Property::Growth,
        verdict: if diverges {
            Verdict::Violated
        } else {
            Verdict::NoViolationFound
        },
        witness,
        samples_tested: budget,
        constants,
        seed,
        budget,
    })
}

// ---------------------------------------------------------------------------
// Frame indifference and moment equilibrium of data sets
// ---------------------------------------------------------------------------

/// Frame indifference of a data set: rotated members must remain members.
///
/// Graphs are tested exactly through `T(QF) = Q T(F)`. Clouds are tested
/// against their own resolution: an orbit-augmented cloud must answer
/// rotated queries within the augmentation spacing bound; a bare cloud has
/// bound zero and will generally be falsified.
pub fn check_frame_indifference(
    d: &LocalDataSet,
    dev: &DeviationPair,
    budget: u64,
    seed: u64,
) -> Result<Certificate> {
    let n = d.n();
    let mut tracker = MarginTracker::new();
    let modulus = dev.modulus().unwrap_or(1.0);
    for (batch, len) in batches(budget) {
        let mut rng = Rng::with_stream(seed, 1 + batch);
        for _ in 0..len {
            let q = rotation_from_rng(n, &mut rng);
            if d.is_graph() {
                let f = sample_mat(n, &mut rng, 1e-2, 1e1);
                let member = d.member(0, &f);
                let rotated_t = d.member(0, &q.matmul(&f)).p;
                let gap = rotated_t.sub(&q.matmul(&member.p)).norm();
                let bound = 1e-11 * (1.0 + member.p.norm());
                tracker.offer(gap, bound, bound - gap, || {
                    vec![
                        WitnessMat::new("F", &f),
                        WitnessMat::new("Q", &q),
                        WitnessMat::new("T_F", &member.p),
                        WitnessMat::new("T_QF", &rotated_t),
                    ]
                });
            } else {
                let idx = rng.range(d.len());
                let base = d.member(idx, &Mat::zeros(n));
                let query = PhasePoint::new(q.matmul(&base.f), q.matmul(&base.p));
                let (gap, nearest) = d.psi(dev, &query)?;
                let m_rot = d.meta().m_rot.max(1);
                let theta = if m_rot == 1 {
                    0.0
                } else if n == 2 {
                    std::f64::consts::PI / m_rot as f64
                } else {
                    // Heuristic covering radius of the low-discrepancy
                    // rotation set.
                    2.0 * std::f64::consts::PI / (m_rot as f64).powf(1.0 / 3.0)
                };
                let bf = theta * base.f.norm();
                let bp = theta * base.p.norm();
                let bound = (0.5 * modulus * bf * bf + 0.5 / modulus * bp * bp)
                    * (1.0 + 1e-9)
                    + 1e-12 * (1.0 + base.f.norm() + base.p.norm());
                tracker.offer(gap, bound, bound - gap, || {
                    vec![
                        WitnessMat::new("F", &base.f),
                        WitnessMat::new("P", &base.p),
                        WitnessMat::new("Q", &q),
                        WitnessMat::new("nearest_F", &nearest.f),
                        WitnessMat::new("nearest_P", &nearest.p),
                    ]
                });
            }
        }
    }
    let mut constants = BTreeMap::new();
    constants.insert("m_rot".into(), d.meta().m_rot as f64);
    constants.insert(
        "max_gap".into(),
        tracker.witness.as_ref().map(|w| w.lhs).unwrap_or(0.0),
    );
    Ok(Certificate::from_min_margin(
        Property::FrameIndifference,
        tracker,
        budget,
        constants,
        seed,
        budget,
    ))
}

/// Moment equilibrium of the members: `P Fᵀ` symmetric to
/// `1e-10 (1 + |F||P|)`.
pub fn check_moment_equilibrium(d: &LocalDataSet, budget: u64, seed: u64) -> Result<Certificate> {
    let n = d.n();
    let mut tracker = MarginTracker::new();
    let mut max_res = 0.0f64;
    for (batch, len) in batches(budget) {
        let mut rng = Rng::with_stream(seed, 1 + batch);
        for trial in 0..len {
            let member = if d.is_graph() {
                let f = sample_mat(n, &mut rng, 1e-2, 1e1);
                d.member(0, &f)
            } else {
                d.member((batch * BATCH + trial) as usize, &Mat::zeros(n))
            };
            let res = member.moment_residual();
            let bound = 1e-10 * (1.0 + member.f.norm() * member.p.norm());
            max_res = max_res.max(res);
            tracker.offer(res, bound, bound - res, || {
                vec![
                    WitnessMat::new("F", &member.f),
                    WitnessMat::new("P", &member.p),
                ]
            });
        }
    }
    let mut constants = BTreeMap::new();
    constants.insert("max_residual".into(), max_res);
    Ok(Certificate::from_min_margin(
        Property::MomentEquilibrium,
        tracker,
        budget,
        constants,
        seed,
        budget,
    ))
}

// ---------------------------------------------------------------------------
// Non-explicit 3D constants
// ---------------------------------------------------------------------------

fn pack(f: &Mat, g: &Mat) -> [f64; 18] {
    let mut x = [0.0; 18];
    x[..9].copy_from_slice(f.entries());
    x[9..].copy_from_slice(g.entries());
    x
}

fn unpack(x: &[f64; 18]) -> (Mat, Mat) {
    (Mat::from_slice(3, &x[..9]), Mat::from_slice(3, &x[9..]))
}

fn normalize(x: &mut [f64; 18]) {
    let s = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if s > 0.0 {
        for v in x.iter_mut() {
            *v /= s;
        }
    }
}

/// `E(F, G) = (DW₆(F+G) − DW₆(F))·G` for the sextic reference energy
/// `W₆(ξ) = |ξ|⁶/6`, whose gradient is `|ξ|⁴ξ`.
pub fn sextic_monotonicity_gap(f: &Mat, g: &Mat) -> f64 {
    let dw = |m: &Mat| {
        let x = dot(m, m);
        m.scale(x * x)
    };
    dot(&dw(&f.add(g)).sub(&dw(f)), g)
}

fn ratio_sextic(x: &[f64; 18]) -> f64 {
    let (f, g) = unpack(x);
    let gf = dot(&f, &f);
    let gg = dot(&g, &g);
    sextic_monotonicity_gap(&f, &g) / ((gf * gf + gg * gg) * gg)
}

fn ratio_det_error(x: &[f64; 18]) -> f64 {
    let (f, g) = unpack(x);
    let nf = f.norm();
    let ng = g.norm();
    let det_fg = f.add(&g).det().abs();
    let s3 = 3f64.sqrt();
    let num = det_fg * (nf * ng * ng / s3 + 2.0 * ng * ng * ng / (s3 * s3 * s3));
    let den = ng * ng * (nf * nf * nf * nf + ng * ng * ng * ng);
    num / den
}

fn extremize_on_sphere(
    seed: u64,
    budget: u64,
    maximize: bool,
    ratio: impl Fn(&[f64; 18]) -> f64,
) -> f64 {
    let sign = if maximize { -1.0 } else { 1.0 };
    let obj = |x: &[f64; 18]| sign * ratio(x);
    let mut best = f64::INFINITY;
    let mut starts: Vec<[f64; 18]> = Vec::new();

    // Rejection sampling over the sphere, keeping the best points as
    // descent starts.
    let mut rng = Rng::with_stream(seed, 101);
    for _ in 0..budget {
        let mut x = [0.0f64; 18];
        for v in x.iter_mut() {
            *v = rng.normal();
        }
        normalize(&mut x);
        let (_, g) = unpack(&x);
        if g.norm() < 1e-3 {
            continue;
        }
        let v = obj(&x);
        if v < best {
            best = v;
            starts.push(x);
        }
    }
    starts.reverse();
    starts.truncate(16);
    // A few fixed structured starts (collinear F and G configurations are
    // where the sextic ratio bottoms out).
    for t in [-2.0, -1.5, -1.0, 1.0] {
        let f = Mat::identity(3);
        let mut x = pack(&f, &f.scale(t));
        normalize(&mut x);
        starts.push(x);
    }

    for start in starts {
        let mut x = start;
        let mut v = obj(&x);
        for _ in 0..300 {
            // Projected finite-difference gradient on the sphere.
            let mut grad = [0.0f64; 18];
            let fd = 1e-6;
            for k in 0..18 {
                let mut xp = x;
                xp[k] += fd;
                normalize(&mut xp);
                let mut xm = x;
                xm[k] -= fd;
                normalize(&mut xm);
                grad[k] = (obj(&xp) - obj(&xm)) / (2.0 * fd);
            }
            let gdotx: f64 = grad.iter().zip(&x).map(|(g, x)| g * x).sum();
            for k in 0..18 {
                grad[k] -= gdotx * x[k];
            }
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gnorm <= 1e-12 * (1.0 + v.abs()) {
                break;
            }
            let mut step = 0.1;
            let mut advanced = false;
            for _ in 0..40 {
                let mut trial = x;
                for k in 0..18 {
                    trial[k] -= step * grad[k];
                }
                normalize(&mut trial);
                let (_, g) = unpack(&trial);
                if g.norm() >= 1e-4 {
                    let tv = obj(&trial);
                    if tv < v - 1e-12 * step * gnorm {
                        x = trial;
                        v = tv;
                        advanced = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !advanced {
                break;
            }
        }
        best = best.min(v);
    }
    sign * best
}

/// Numerical estimates of the non-explicit 3D constants.
///
/// * `c_star_star`: infimum of `E(F,G) / ((|F|⁴+|G|⁴)|G|²)` on the sphere
///   `|F|²+|G|² = 1`, `|G| > 0`, for the sextic reference energy;
/// * `C_star`: supremum of the determinant error ratio on the same sphere;
/// * `c_prime = c_star_star / 2` (the sextic gap constant);
/// * `c_star = c_star_star / (2 C_star)` (the admissible `d/e` ratio).
pub fn estimate_cstar_constants(seed: u64, budget: u64) -> BTreeMap<String, f64> {
    let c_star_star = extremize_on_sphere(seed, budget, false, ratio_sextic);
    let c_big_star = extremize_on_sphere(seed.wrapping_add(1), budget, true, ratio_det_error);
    let mut out = BTreeMap::new();
    out.insert("C_star".into(), c_big_star);
    out.insert("c_prime".into(), 0.5 * c_star_star);
    out.insert("c_star".into(), 0.5 * c_star_star / c_big_star);
    out.insert("c_star_star".into(), c_star_star);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataSetMeta;
    use crate::io;

    fn hat_w2() -> EnergyModel {
        EnergyModel::hat_w2(0.25, 0.4).unwrap()
    }

    #[test]
    fn coercivity_of_hat_w2_not_falsified() {
        let m = hat_w2();
        let cert = check_coercivity(|x| m.stress(x), 2, 4.0, 50_000, 1).unwrap();
        assert_eq!(cert.verdict, Verdict::NoViolationFound);
        assert!(cert.constants["fit_ok"] == 1.0);
        assert!(cert.constants["min_margin"] > 0.0);
    }

    #[test]
    fn coercivity_of_negative_identity_falsified_with_witness() {
        let cert = check_coercivity(|x| x.scale(-1.0), 2, 2.0, 20_000, 1).unwrap();
        assert_eq!(cert.verdict, Verdict::Violated);
        let w = cert.witness.as_ref().unwrap();
        // Witness reproduces the violation when re-evaluated.
        let k = CoercivityConstants {
            inv_c_f: 1.0 / cert.constants["c_F"],
            inv_c_p: 1.0 / cert.constants["c_P"],
            c: cert.constants["c"],
            fit_ok: cert.constants["fit_ok"] == 1.0,
        };
        let xi = w.points[0].to_mat();
        let (lhs, rhs) = coercivity_sides(|x| x.scale(-1.0), 2.0, &k, &xi);
        assert!(rhs - lhs < 0.0, "witness must re-violate: {}", rhs - lhs);
        assert!(xi.norm() > 10.0, "expected a large-norm witness");
    }

    #[test]
    fn polymonotone_2d_in_window_not_falsified() {
        let cert = check_polymonotone_2d(&hat_w2(), 50_000, 3).unwrap();
        assert_eq!(cert.verdict, Verdict::NoViolationFound);
        assert_eq!(cert.constants["in_window"], 1.0);
    }

    #[test]
    fn polymonotone_2d_sides_trivial_and_derived_points() {
        let m = hat_w2();
        // G = 0: both sides vanish.
        let f = Mat::from_slice(2, &[0.3, -1.2, 0.7, 2.0]);
        let (lhs, rhs) = polymonotone_2d_sides(&m, &f, &Mat::zeros(2));
        assert_eq!((lhs, rhs), (0.0, 0.0));

        // F = 0, G = I: margin >= 0 and both sides match a scalar oracle.
        let (lhs, rhs) = polymonotone_2d_sides(&m, &Mat::zeros(2), &Mat::identity(2));
        // T(I) = (1 + 2a + g'(1)) I with g'(1) = beta(1 - t0) = -1.5, so
        // T(I) = 0 and T(0) = 0, hence lhs = 0.
        assert!(lhs.abs() <= 1e-15);
        // rhs = 0.25*0.25*(2)^2 + g'(0)*1 + (1 - b/2)*2 with g'(0) = -1.9,
        // b = 1.9: 0.25 - 1.9 + 0.1*... compute directly:
        let expected_rhs = 0.25 * 0.25 * 4.0 + (-1.9) + (1.0 - 0.95) * 2.0;
        assert!((rhs - expected_rhs).abs() <= 1e-14, "rhs {rhs}");
        assert!(lhs - rhs >= 0.0);
    }

    #[test]
    fn polymonotone_2d_wrong_flavor_rejected() {
        let m3 = EnergyModel::hat_w3(1.0, 1.0, 0.5).unwrap();
        assert!(check_polymonotone_2d(&m3, 10, 1).is_err());
    }

    #[test]
    fn polymonotone_3d_inside_estimated_window() {
        let est = estimate_cstar_constants(7, 4000);
        let c_star = est["c_star"];
        assert!(c_star > 0.0);
        let beta = 0.9 * c_star.min(3.0);
        let m = EnergyModel::hat_w3(1.0, 1.0, beta).unwrap();
        let cert = check_polymonotone_3d(&m, 30_000, 5, Some(est["c_prime"])).unwrap();
        assert_eq!(cert.verdict, Verdict::NoViolationFound, "{:?}", cert.witness);
        // G = 0 margin is exactly zero.
        let (lhs, rhs) =
            polymonotone_3d_sides(&m, est["c_prime"], &Mat::identity(3), &Mat::zeros(3));
        assert_eq!((lhs, rhs), (0.0, 0.0));
    }

    #[test]
    fn polymonotone_3d_outside_window_reported_honestly() {
        let m = EnergyModel::hat_w3(1.0, 1.0, 10.0).unwrap();
        let cert = check_polymonotone_3d(&m, 30_000, 5, None).unwrap();
        // Far outside the proven window the inequality fails empirically;
        // whatever the verdict, a violation must come with a reproducing
        // witness.
        if cert.verdict == Verdict::Violated {
            let w = cert.witness.as_ref().unwrap();
            let (lhs, rhs) = polymonotone_3d_sides(
                &m,
                cert.constants["c_prime_used"],
                &w.points[0].to_mat(),
                &w.points[1].to_mat(),
            );
            assert!(lhs - rhs < 0.0);
        }
    }

    #[test]
    fn cstar_estimates_match_reference_points() {
        // E(0, G) = |G|^6 exactly.
        let g = Mat::from_slice(3, &[0.3, 1.0, -0.2, 0.0, 0.7, 0.4, -1.1, 0.2, 0.5]);
        let e = sextic_monotonicity_gap(&Mat::zeros(3), &g);
        let g6 = g.norm().powi(6);
        assert!((e - g6).abs() <= 1e-12 * (1.0 + g6));

        // Small-G directional limit: E(F, tH)/t² → 4|F|²(F·H)² + |F|⁴|H|².
        let f = Mat::identity(3).scale(1.0 / 3f64.sqrt());
        let h = Mat::from_slice(3, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let t = 1e-5;
        let quad = sextic_monotonicity_gap(&f, &h.scale(t)) / (t * t);
        let f2 = dot(&f, &f);
        let expected = 4.0 * f2 * dot(&f, &h).powi(2) + f2 * f2 * dot(&h, &h);
        assert!((quad - expected).abs() <= 1e-4 * (1.0 + expected));
        assert!(expected >= 1.0 - 1e-12);

        let est = estimate_cstar_constants(1, 4000);
        assert!(est["c_star_star"] > 0.0);
        assert!(est["c_star_star"] < 1.0); // collinear configs beat the G→0 limit
        assert!(est["C_star"] > 0.0);
        assert!((est["c_prime"] - 0.5 * est["c_star_star"]).abs() < 1e-15);
    }

    #[test]
    fn quasimonotone_null_lagrangian_is_exact() {
        let mut rng = Rng::new(2);
        for n in [2usize, 3] {
            let field = TestField::random(n, 10, &mut rng, 1.0);
            let mut det_int = 0.0;
            let mut grad_l2 = 0.0;
            field.for_each_element(|vol, g| {
                det_int += vol * g.det();
                grad_l2 += vol * dot(g, g);
                0.0
            });
            assert!(grad_l2 > 0.0);
            assert!(
                det_int.abs() <= 1e-12 * (1.0 + grad_l2),
                "n={n} det integral {det_int}"
            );
            if n == 3 {
                let mut cof_int = Mat::zeros(3);
                field.for_each_element(|vol, g| {
                    cof_int = cof_int.add(&cof(g).scale(vol));
                    0.0
                });
                assert!(cof_int.norm() <= 1e-12 * (1.0 + grad_l2));
            }
        }
    }

    #[test]
    fn quasimonotone_zero_field_and_negative_law() {
        let m = hat_w2();
        let gap = QuasiGap::for_model(&m, None);
        let zero = TestField::zero(2, 8);
        let (lhs, rhs) = quasimonotone_sides(|x| m.stress(x), &Mat::identity(2), &zero, &gap);
        assert_eq!((lhs, rhs), (0.0, 0.0));

        let cert = check_quasimonotone(
            |x: &Mat| x.scale(-1.0),
            2,
            QuasiGap::Quadratic { coeff: 1.0 },
            8,
            40,
            1,
        )
        .unwrap();
        assert_eq!(cert.verdict, Verdict::Violated);
        // Replay the witness trial.
        let (f, field) = quasimonotone_trial(
            2,
            8,
            1,
            cert.constants["witness_batch"] as u64,
            cert.constants["witness_trial"] as u64,
        );
        let (lhs, rhs) =
            quasimonotone_sides(|x: &Mat| x.scale(-1.0), &f, &field, &QuasiGap::Quadratic { coeff: 1.0 });
        assert!(lhs - rhs < 0.0);
        assert!((lhs - cert.witness.as_ref().unwrap().lhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn quasimonotone_hat_w2_not_falsified() {
        let m = hat_w2();
        let gap = QuasiGap::for_model(&m, None);
        let cert = check_quasimonotone(|x| m.stress(x), 2, gap, 12, 300, 9).unwrap();
        assert_eq!(cert.verdict, Verdict::NoViolationFound, "{:?}", cert.witness);
    }

    #[test]
    fn quasimonotone_grid_validation() {
        let m = hat_w2();
        let gap = QuasiGap::for_model(&m, None);
        assert!(check_quasimonotone(|x| m.stress(x), 2, gap, 4, 10, 1).is_err());
    }

    #[test]
    fn growth_of_polynomial_law_is_stable() {
        let m = hat_w2();
        let cert = check_growth(|x| m.stress(x), 2, 4.0, 50_000, 2).unwrap();
        assert_eq!(cert.verdict, Verdict::NoViolationFound);
        assert!(cert.constants["c"] > 0.0 && cert.constants["c"] < 100.0);
        // G = 0 gives ratio 0 (by convention num = 0, den = 0 -> NaN is
        // avoided because sample norms are bounded below; check directly).
        let f = Mat::identity(2);
        let tiny = Mat::identity(2).scale(1e-9);
        assert!(growth_ratio(|x| m.stress(x), 4.0, &f, &tiny).is_finite());
    }

    #[test]
    fn growth_of_exponential_law_diverges() {
        let t = |x: &Mat| x.scale(x.norm().exp());
        let cert = check_growth(t, 2, 4.0, 20_000, 2).unwrap();
        assert_eq!(cert.verdict, Verdict::Violated);
        assert!(cert.witness.is_some());
    }

    #[test]
    fn frame_indifference_graph_and_cloud() {
        let m = hat_w2();
        let dev = DeviationPair::quadratic(1.0).unwrap();
        let graph = LocalDataSet::graph(m.clone());
        let cert = check_frame_indifference(&graph, &dev, 5_000, 4).unwrap();
        assert_eq!(cert.verdict, Verdict::NoViolationFound);

        // Singleton cloud: rotating the point leaves the set.
        let e11 = Mat::outer(&[1.0, 0.0], &[1.0, 0.0]);
        let singleton = LocalDataSet::cloud(
            2,
            vec![PhasePoint::new(e11, Mat::zeros(2))],
            DataSetMeta {
                m_rot: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let cert = check_frame_indifference(&singleton, &dev, 200, 4).unwrap();
        assert_eq!(cert.verdict, Verdict::Violated);

        // Orbit augmentation brings the gap under the spacing bound.
        let aug = singleton.augment_orbit(32).unwrap();
        let cert_aug = check_frame_indifference(&aug, &dev, 2_000, 4).unwrap();
        assert_eq!(cert_aug.verdict, Verdict::NoViolationFound);
        assert!(cert_aug.constants["max_gap"] <= cert.constants["max_gap"]);
    }

    #[test]
    fn moment_equilibrium_checks() {
        let m = hat_w2();
        let dev_ok = check_moment_equilibrium(&LocalDataSet::graph(m), 5_000, 6).unwrap();
        assert_eq!(dev_ok.verdict, Verdict::NoViolationFound);

        let good = PhasePoint::new(Mat::identity(2), Mat::identity(2));
        let bad = PhasePoint::new(Mat::identity(2), Mat::outer(&[1.0, 0.0], &[0.0, 1.0]));
        let cloud =
            LocalDataSet::cloud(2, vec![good, bad], DataSetMeta::default()).unwrap();
        let cert = check_moment_equilibrium(&cloud, 100, 6).unwrap();
        assert_eq!(cert.verdict, Verdict::Violated);
        let w = cert.witness.unwrap();
        assert_eq!(w.points[1].to_mat(), bad.p);
    }

    #[test]
    fn certificates_are_deterministic() {
        let m = hat_w2();
        let a = check_coercivity(|x| m.stress(x), 2, 4.0, 10_000, 42).unwrap();
        let b = check_coercivity(|x| m.stress(x), 2, 4.0, 10_000, 42).unwrap();
        assert_eq!(
            io::to_json_string(&a).unwrap(),
            io::to_json_string(&b).unwrap()
        );
        let c = check_coercivity(|x| m.stress(x), 2, 4.0, 10_000, 43).unwrap();
        assert_ne!(
            io::to_json_string(&a).unwrap(),
            io::to_json_string(&c).unwrap()
        );
    }

    #[test]
    fn polymonotone_implies_quasimonotone_consistency() {
        // Joint fuzz: whenever the 2D polymonotonicity check passes, the
        // quasimonotonicity check must pass as well.
        let m = hat_w2();
        let poly = check_polymonotone_2d(&m, 20_000, 11).unwrap();
        assert_eq!(poly.verdict, Verdict::NoViolationFound);
        let gap = QuasiGap::for_model(&m, None);
        let quasi = check_quasimonotone(|x| m.stress(x), 2, gap, 12, 1000, 11).unwrap();
        assert_eq!(quasi.verdict, Verdict::NoViolationFound, "{:?}", quasi.witness);
    }

    #[test]
    fn certificate_json_shape() {
        let m = hat_w2();
        let cert = check_polymonotone_2d(&m, 500, 1).unwrap();
        let json = io::to_json_string(&cert).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["property"], "polymonotonicity_2d");
        assert_eq!(v["verdict"], "no-violation-found");
        assert!(v["constants"]["min_margin"].is_f64());
        let back: Certificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cert);
    }
}
