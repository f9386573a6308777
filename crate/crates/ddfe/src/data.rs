//! Material data sets and the phase-space deviation that measures distance
//! to them.
//!
//! A local data set is either the graph `{(F, T(F))}` of a stress function
//! or a finite cloud of `(F, P)` points. The deviation of a state `z = (F, P)`
//! from the set is
//!
//! ```text
//! psi(z) = min over (F', P') in D of  V(F − F') + V*(P − P')
//! ```
//!
//! with `(V, V*)` a convex conjugate pair. For clouds and quadratic pairs
//! the minimum is an exact nearest-neighbor query in a weighted Euclidean
//! embedding of phase space; for graphs it is a multi-start local descent
//! over the graph parameter and is reported as a (non-certified) upper bound.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::io;
use crate::kdtree::KdTree;
use crate::model::{EnergyModel, ModelSpec};
use crate::rng::Rng;
use crate::tensor::{quaternion_to_rotation, Mat};
use crate::{Error, Result};

/// A point of local phase space: deformation gradient and stress.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub f: Mat,
    pub p: Mat,
}

impl PhasePoint {
    pub fn new(f: Mat, p: Mat) -> Self {
        assert_eq!(f.n(), p.n(), "dimension mismatch in phase point");
        Self { f, p }
    }

    pub fn n(&self) -> usize {
        self.f.n()
    }

    /// Moment-equilibrium residual `|P Fᵀ − F Pᵀ|`.
    pub fn moment_residual(&self) -> f64 {
        Mat::moment_residual(&self.f, &self.p)
    }
}

/// Convex deviation function and its Legendre conjugate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum DeviationForm {
    /// `V(ξ) = (C/2)|ξ|²`, `V*(η) = |η|²/(2C)`; `C` is the phase-space
    /// modulus matching stress and strain units.
    Quadratic { modulus: f64 },
    /// `V(ξ) = |ξ|ᵖ/p`, `V*(η) = |η|^q/q`.
    Power { p: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "DeviationForm", into = "DeviationForm")]
pub struct DeviationPair {
    form: DeviationForm,
    p: f64,
    q: f64,
    /// Lower-bound constants: `c_p|ξ|^p ≤ V(ξ)` and `c_q|η|^q ≤ V*(η)`.
    c_p: f64,
    c_q: f64,
}

impl TryFrom<DeviationForm> for DeviationPair {
    type Error = Error;
    fn try_from(form: DeviationForm) -> Result<Self> {
        match form {
            DeviationForm::Quadratic { modulus } => DeviationPair::quadratic(modulus),
            DeviationForm::Power { p } => DeviationPair::power(p),
        }
    }
}

impl From<DeviationPair> for DeviationForm {
    fn from(d: DeviationPair) -> DeviationForm {
        d.form
    }
}

impl DeviationPair {
    pub fn quadratic(modulus: f64) -> Result<Self> {
        if !(modulus > 0.0) || !modulus.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "quadratic deviation needs modulus > 0, got {modulus}"
            )));
        }
        Ok(Self {
            form: DeviationForm::Quadratic { modulus },
            p: 2.0,
            q: 2.0,
            c_p: modulus / 2.0,
            c_q: 1.0 / (2.0 * modulus),
        })
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "power deviation needs p > 1, got {p}"
            )));
        }
        let q = p / (p - 1.0);
        Ok(Self {
            form: DeviationForm::Power { p },
            p,
            q,
            c_p: 1.0 / p,
            c_q: 1.0 / q,
        })
    }

    pub fn form(&self) -> DeviationForm {
        self.form
    }

    pub fn exponents(&self) -> (f64, f64) {
        (self.p, self.q)
    }

    pub fn lower_bound_constants(&self) -> (f64, f64) {
        (self.c_p, self.c_q)
    }

    /// Modulus of the quadratic form, if this is one.
    pub fn modulus(&self) -> Option<f64> {
        match self.form {
            DeviationForm::Quadratic { modulus } => Some(modulus),
            DeviationForm::Power { p: 2.0 } => Some(1.0),
            _ => None,
        }
    }

    pub fn v(&self, xi: &Mat) -> f64 {
        let r2 = crate::tensor::dot(xi, xi);
        match self.form {
            DeviationForm::Quadratic { modulus } => 0.5 * modulus * r2,
            DeviationForm::Power { p } => r2.powf(0.5 * p) / p,
        }
    }

    pub fn v_star(&self, eta: &Mat) -> f64 {
        let r2 = crate::tensor::dot(eta, eta);
        match self.form {
            DeviationForm::Quadratic { modulus } => r2 / (2.0 * modulus),
            DeviationForm::Power { p } => {
                let q = p / (p - 1.0);
                r2.powf(0.5 * q) / q
            }
        }
    }

    pub fn grad_v(&self, xi: &Mat) -> Mat {
        match self.form {
            DeviationForm::Quadratic { modulus } => xi.scale(modulus),
            DeviationForm::Power { p } => {
                let r = xi.norm();
                if r == 0.0 {
                    Mat::zeros(xi.n())
                } else {
                    xi.scale(r.powf(p - 2.0))
                }
            }
        }
    }

    pub fn grad_v_star(&self, eta: &Mat) -> Mat {
        match self.form {
            DeviationForm::Quadratic { modulus } => eta.scale(1.0 / modulus),
            DeviationForm::Power { p } => {
                let q = p / (p - 1.0);
                let r = eta.norm();
                if r == 0.0 {
                    Mat::zeros(eta.n())
                } else {
                    eta.scale(r.powf(q - 2.0))
                }
            }
        }
    }

    /// `V(F − F') + V*(P − P')`.
    pub fn deviation(&self, z: &PhasePoint, zp: &PhasePoint) -> f64 {
        self.v(&z.f.sub(&zp.f)) + self.v_star(&z.p.sub(&zp.p))
    }

    /// Largest conjugacy defect `|V*(η) − sup_ξ (ξ·η − V(ξ))|` over a radial
    /// grid, the supremum taken by golden-section search along the ray `η`
    /// (both `V` and `V*` are isotropic).
    pub fn conjugacy_defect(&self, n: usize, radii: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &r in radii {
            let eta = Mat::identity(n).scale(r / (n as f64).sqrt());
            let dir = if r == 0.0 {
                Mat::identity(n).scale(1.0 / (n as f64).sqrt())
            } else {
                eta.scale(1.0 / eta.norm())
            };
            let target = |t: f64| t * r - self.v(&dir.scale(t));
            // Bracket then golden-section maximize.
            let (mut lo, mut hi) = (0.0, 1.0 + 2.0 * r.max(1.0));
            while target(hi) > target(hi * 0.61) {
                hi *= 2.0;
                if hi > 1e12 {
                    break;
                }
            }
            let phi = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..200 {
                let m1 = hi - phi * (hi - lo);
                let m2 = lo + phi * (hi - lo);
                if target(m1) < target(m2) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            let sup = target(0.5 * (lo + hi));
            worst = worst.max((self.v_star(&eta) - sup).abs());
        }
        worst
    }
}

/// Provenance of a data set, stored as a JSON sidecar next to the CSV.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
pub struct DataSetMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub box_bound: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub det_filtered: bool,
    /// Orbit-augmentation factor; 1 means no augmentation.
    #[serde(default = "one")]
    pub m_rot: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mb_filter_tol: Option<f64>,
    #[serde(default)]
    pub removed_by_mb_filter: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug)]
pub enum DataSetKind {
    /// Graph of a stress function.
    Graph(EnergyModel),
    /// Finite point cloud with an exact nearest-neighbor index.
    Cloud { points: Vec<PhasePoint> },
}

#[derive(Debug)]
pub struct LocalDataSet {
    n: usize,
    kind: DataSetKind,
    meta: DataSetMeta,
    tree: Option<KdTree>,
}

impl LocalDataSet {
    pub fn graph(model: EnergyModel) -> Self {
        let n = model.n();
        let meta = DataSetMeta {
            model: Some(ModelSpec::of(&model)),
            m_rot: 1,
            ..Default::default()
        };
        Self {
            n,
            kind: DataSetKind::Graph(model),
            meta,
            tree: None,
        }
    }

    pub fn cloud(n: usize, points: Vec<PhasePoint>, meta: DataSetMeta) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDataSet);
        }
        for pt in &points {
            if pt.n() != n {
                return Err(Error::DimensionMismatch(n, pt.n()));
            }
            if !pt.f.is_finite() || !pt.p.is_finite() {
                return Err(Error::InvalidParameter(
                    "data set contains non-finite entries".into(),
                ));
            }
        }
        let tree = Some(build_tree(n, &points));
        Ok(Self {
            n,
            kind: DataSetKind::Cloud { points },
            meta,
            tree,
        })
    }

    /// Cloud of exact graph states `(F_i, T(F_i))` at prescribed `F_i`.
    pub fn from_states(model: &EnergyModel, states: &[Mat]) -> Result<Self> {
        let points: Vec<PhasePoint> = states
            .iter()
            .map(|f| PhasePoint::new(*f, model.stress(f)))
            .collect();
        let meta = DataSetMeta {
            model: Some(ModelSpec::of(model)),
            m_rot: 1,
            ..Default::default()
        };
        Self::cloud(model.n(), points, meta)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &DataSetKind {
        &self.kind
    }

    pub fn meta(&self) -> &DataSetMeta {
        &self.meta
    }

    pub fn is_graph(&self) -> bool {
        matches!(self.kind, DataSetKind::Graph(_))
    }

    pub fn len(&self) -> usize {
        match &self.kind {
            DataSetKind::Graph(_) => 0,
            DataSetKind::Cloud { points } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.is_graph() && self.len() == 0
    }

    pub fn points(&self) -> &[PhasePoint] {
        match &self.kind {
            DataSetKind::Graph(_) => &[],
            DataSetKind::Cloud { points } => points,
        }
    }

    /// The wrapped stress function, for graph kinds. Clouds record their
    /// generating model (if any) in the metadata instead.
    pub fn model(&self) -> Option<&EnergyModel> {
        match &self.kind {
            DataSetKind::Graph(m) => Some(m),
            DataSetKind::Cloud { .. } => None,
        }
    }

    /// A member of the set, for sampling-based checks: graph states at the
    /// given `F`, cloud points by index.
    pub fn member(&self, idx: usize, f_probe: &Mat) -> PhasePoint {
        match &self.kind {
            DataSetKind::Graph(m) => PhasePoint::new(*f_probe, m.stress(f_probe)),
            DataSetKind::Cloud { points } => points[idx % points.len()],
        }
    }

    /// Minimal deviation of `z` from the set and the minimizing data point.
    ///
    /// Cloud: exact (accelerated search coincides with a linear scan).
    /// Graph: multi-start local descent over the graph parameter; the value
    /// is an upper bound for the true minimum and is not certified.
    pub fn psi(&self, dev: &DeviationPair, z: &PhasePoint) -> Result<(f64, PhasePoint)> {
        if z.n() != self.n {
            return Err(Error::DimensionMismatch(self.n, z.n()));
        }
        match &self.kind {
            DataSetKind::Cloud { .. } => {
                let (_, value, point) = self.nearest_indexed(dev, z)?;
                Ok((value, point))
            }
            DataSetKind::Graph(model) => Ok(self.psi_graph(model, dev, z)),
        }
    }

    /// Arg-min data point of the deviation. Cloud kind answers exactly with
    /// index ties broken low; graph kind routes to [`Self::psi`].
    pub fn nearest(&self, dev: &DeviationPair, z: &PhasePoint) -> Result<PhasePoint> {
        match &self.kind {
            DataSetKind::Cloud { .. } => Ok(self.nearest_indexed(dev, z)?.2),
            DataSetKind::Graph(_) => Ok(self.psi(dev, z)?.1),
        }
    }

    /// Exact nearest point of a cloud: `(index, deviation, point)`.
    pub fn nearest_indexed(
        &self,
        dev: &DeviationPair,
        z: &PhasePoint,
    ) -> Result<(usize, f64, PhasePoint)> {
        let DataSetKind::Cloud { points } = &self.kind else {
            return Err(Error::InvalidParameter(
                "nearest_indexed needs a cloud data set".into(),
            ));
        };
        if z.n() != self.n {
            return Err(Error::DimensionMismatch(self.n, z.n()));
        }
        let nn = self.n * self.n;
        if let (Some(tree), Some(c)) = (&self.tree, dev.modulus()) {
            let mut query = Vec::with_capacity(2 * nn);
            query.extend_from_slice(z.f.entries());
            query.extend_from_slice(z.p.entries());
            let mut weights = vec![0.5 * c; 2 * nn];
            for w in weights.iter_mut().skip(nn) {
                *w = 0.5 / c;
            }
            let (idx, d2) = tree.nearest(&query, &weights);
            return Ok((idx, d2, points[idx]));
        }
        // Non-quadratic metric: linear scan.
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, pt) in points.iter().enumerate() {
            let d = dev.deviation(z, pt);
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok((best.0, best.1, points[best.0]))
    }

    fn psi_graph(&self, model: &EnergyModel, dev: &DeviationPair, z: &PhasePoint) -> (f64, PhasePoint) {
        let n = self.n;
        let objective = |fp: &Mat| -> f64 {
            dev.v(&z.f.sub(fp)) + dev.v_star(&z.p.sub(&model.stress(fp)))
        };
        let scale = if self.meta.box_bound > 0.0 {
            self.meta.box_bound
        } else {
            1.0 + z.f.norm()
        };
        // Starts: the query F itself plus +- perturbations along each entry.
        let mut starts = vec![z.f];
        for k in 0..n * n {
            for sgn in [1.0, -1.0] {
                let mut m = z.f;
                let v = m.entries()[k];
                m.set(k / n, k % n, v + sgn * 0.5 * scale);
                starts.push(m);
            }
        }
        let mut best: Option<(f64, Mat)> = None;
        for start in starts {
            let (fp, val) = descend(model, dev, z, start, objective);
            if best.as_ref().is_none_or(|(b, _)| val < *b) {
                best = Some((val, fp));
            }
        }
        let (val, fp) = best.unwrap();
        (val, PhasePoint::new(fp, model.stress(&fp)))
    }

    /// Keep only points with `|P Fᵀ − F Pᵀ| ≤ tol (1 + |F||P|)`.
    pub fn filter_moment_equilibrium(&self, tol: f64) -> Result<LocalDataSet> {
        let DataSetKind::Cloud { points } = &self.kind else {
            return Err(Error::InvalidParameter(
                "moment-equilibrium filter applies to cloud data sets".into(),
            ));
        };
        let kept: Vec<PhasePoint> = points
            .iter()
            .filter(|pt| pt.moment_residual() <= tol * (1.0 + pt.f.norm() * pt.p.norm()))
            .copied()
            .collect();
        let removed = points.len() - kept.len();
        let mut meta = self.meta.clone();
        meta.mb_filter_tol = Some(tol);
        meta.removed_by_mb_filter += removed;
        LocalDataSet::cloud(self.n, kept, meta)
    }

    /// Replace each base point by `m_rot` rotated copies `(Q_j F, Q_j P)`.
    ///
    /// In 2D the `Q_j` are the equispaced angles `2πj/m_rot`; in 3D a
    /// deterministic low-discrepancy quaternion sequence is used. `Q_0` is
    /// the identity, so the base points stay in the set.
    pub fn augment_orbit(&self, m_rot: usize) -> Result<LocalDataSet> {
        if m_rot < 1 {
            return Err(Error::InvalidParameter("m_rot must be >= 1".into()));
        }
        let DataSetKind::Cloud { points } = &self.kind else {
            return Err(Error::InvalidParameter(
                "orbit augmentation applies to cloud data sets".into(),
            ));
        };
        let rotations = orbit_rotations(self.n, m_rot);
        let mut out = Vec::with_capacity(points.len() * m_rot);
        for pt in points {
            for q in &rotations {
                out.push(PhasePoint::new(q.matmul(&pt.f), q.matmul(&pt.p)));
            }
        }
        let mut meta = self.meta.clone();
        meta.m_rot = self.meta.m_rot.saturating_mul(m_rot);
        LocalDataSet::cloud(self.n, out, meta)
    }

    /// CSV plus metadata sidecar (`<file>.meta.json`).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let kind = if self.is_graph() { "graph" } else { "cloud" };
        out.push_str(&format!("{},{}\n", self.n, kind));
        for pt in self.points() {
            let row: Vec<String> = pt
                .f
                .entries()
                .iter()
                .chain(pt.p.entries())
                .map(|v| io::fmt_f64(*v))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        io::atomic_write(path, out.as_bytes())?;
        io::write_json(&sidecar_path(path), &self.meta)
    }

    pub fn read_csv(path: &Path) -> Result<LocalDataSet> {
        let text = io::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: "empty file".into(),
        })?;
        let mut parts = header.split(',');
        let n: usize = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .filter(|n| *n == 2 || *n == 3)
            .ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: 1,
                message: "header must be `n,kind` with n in {2,3}".into(),
            })?;
        let kind = parts.next().map(str::trim).unwrap_or("");

        let meta_path = sidecar_path(path);
        let meta: DataSetMeta = if meta_path.exists() {
            io::read_json(&meta_path)?
        } else {
            DataSetMeta {
                m_rot: 1,
                ..Default::default()
            }
        };

        match kind {
            "graph" => {
                let spec = meta.model.clone().ok_or_else(|| Error::Parse {
                    path: path.display().to_string(),
                    line: 1,
                    message: "graph data set needs a model in the metadata sidecar".into(),
                })?;
                let model = spec.build()?;
                let mut ds = LocalDataSet::graph(model);
                ds.meta = meta;
                Ok(ds)
            }
            "cloud" => {
                let nn = n * n;
                let mut points = Vec::new();
                for (idx, row) in lines {
                    if row.trim().is_empty() {
                        continue;
                    }
                    let vals = io::parse_float_row(path, idx + 1, row, 2 * nn)?;
                    points.push(PhasePoint::new(
                        Mat::from_slice(n, &vals[..nn]),
                        Mat::from_slice(n, &vals[nn..]),
                    ));
                }
                LocalDataSet::cloud(n, points, meta)
            }
            other => Err(Error::Parse {
                path: path.display().to_string(),
                line: 1,
                message: format!("unknown data-set kind {other:?}"),
            }),
        }
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".meta.json");
    s.into()
}

fn build_tree(n: usize, points: &[PhasePoint]) -> KdTree {
    let nn = n * n;
    let mut coords = Vec::with_capacity(points.len() * 2 * nn);
    for pt in points {
        coords.extend_from_slice(pt.f.entries());
        coords.extend_from_slice(pt.p.entries());
    }
    KdTree::build(2 * nn, coords)
}

/// Deterministic orbit rotations with `Q_0 = I`. 2D: equispaced angles;
/// 3D: quaternions from a golden-ratio lattice on the 3-sphere.
pub fn orbit_rotations(n: usize, m_rot: usize) -> Vec<Mat> {
    let mut out = Vec::with_capacity(m_rot);
    out.push(Mat::identity(n));
    if n == 2 {
        for j in 1..m_rot {
            out.push(Mat::rotation2(2.0 * std::f64::consts::PI * j as f64 / m_rot as f64));
        }
    } else {
        // Shoemake's uniform quaternion map fed with a rank-1 lattice.
        const A1: f64 = 0.819172513396164; // plastic-constant fractions
        const A2: f64 = 0.671043606703789;
        let tau = 2.0 * std::f64::consts::PI;
        for j in 1..m_rot {
            let u = (j as f64 + 0.5) / m_rot as f64;
            let v = (j as f64 * A1).fract();
            let w = (j as f64 * A2).fract();
            let q = [
                (1.0 - u).sqrt() * (tau * v).sin(),
                (1.0 - u).sqrt() * (tau * v).cos(),
                u.sqrt() * (tau * w).sin(),
                u.sqrt() * (tau * w).cos(),
            ];
            out.push(quaternion_to_rotation(&q));
        }
    }
    out
}

/// Sample `count` graph points `(F_i, T(F_i) + ε_i)` with `F_i` uniform in
/// the Frobenius ball `|F| ≤ box_bound` (optionally restricted to
/// `det F > 0`) and entrywise noise of standard deviation
/// `noise · |T(F_i)| / n`.
pub fn sample_graph(
    model: &EnergyModel,
    box_bound: f64,
    count: usize,
    noise: f64,
    seed: u64,
    filter_det: bool,
) -> Result<LocalDataSet> {
    if !(box_bound > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "empty sampling box (bound {box_bound})"
        )));
    }
    if count == 0 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    let n = model.n();
    let nn = n * n;
    let mut rng = Rng::with_stream(seed, 0);
    let mut points = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while points.len() < count {
        attempts += 1;
        if attempts > 1000 * count {
            return Err(Error::InvalidParameter(
                "det-filter rejected too many samples".into(),
            ));
        }
        let mut f = Mat::zeros(n);
        let mut norm2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = rng.normal();
                f.set(i, j, v);
                norm2 += v * v;
            }
        }
        if norm2 == 0.0 {
            continue;
        }
        let radius = box_bound * rng.uniform().powf(1.0 / nn as f64);
        let f = f.scale(radius / norm2.sqrt());
        if filter_det && f.det() <= 0.0 {
            continue;
        }
        let t = model.stress(&f);
        let p = if noise > 0.0 {
            let sigma = noise * t.norm() / n as f64;
            let mut p = t;
            for i in 0..n {
                for j in 0..n {
                    p.set(i, j, p.get(i, j) + sigma * rng.normal());
                }
            }
            p
        } else {
            t
        };
        points.push(PhasePoint::new(f, p));
    }
    let meta = DataSetMeta {
        model: Some(ModelSpec::of(model)),
        noise,
        box_bound,
        seed,
        det_filtered: filter_det,
        m_rot: 1,
        ..Default::default()
    };
    LocalDataSet::cloud(n, points, meta)
}

/// One backtracking gradient descent for the graph deviation.
fn descend(
    model: &EnergyModel,
    dev: &DeviationPair,
    z: &PhasePoint,
    start: Mat,
    objective: impl Fn(&Mat) -> f64,
) -> (Mat, f64) {
    let mut fp = start;
    let mut val = objective(&fp);
    for _ in 0..300 {
        // ∇φ(F') = −V'(F−F') − DT(F')[V*'(P−T(F'))]; DT is symmetric.
        let gv = dev.grad_v(&z.f.sub(&fp));
        let gvs = dev.grad_v_star(&z.p.sub(&model.stress(&fp)));
        let grad = gv.add(&model.stress_tangent(&fp, &gvs)).scale(-1.0);
        let gnorm = grad.norm();
        if gnorm <= 1e-11 * (1.0 + val.abs()) {
            break;
        }
        let mut step = 1.0 / (1.0 + gnorm);
        let mut advanced = false;
        for _ in 0..60 {
            let trial = fp.sub(&grad.scale(step));
            let tval = objective(&trial);
            if tval < val - 1e-4 * step * gnorm * gnorm {
                fp = trial;
                val = tval;
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    (fp, val)
}
