//! Triangulated 2D domains with a Dirichlet/Neumann boundary split,
//! loaded from JSON or generated structurally.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::tensor::Mat;
use crate::{Error, Result};

/// On-disk mesh:
/// `{"nodes":[[x,y],...], "triangles":[[i,j,k],...],
///   "dirichlet_edges":[[a,b],...], "neumann_edges":[[a,b],...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeshFile {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    #[serde(default)]
    pub dirichlet_edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub neumann_edges: Vec<[usize; 2]>,
}

/// An interior edge with its two adjacent elements, for jump diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct InteriorEdge {
    pub elems: [usize; 2],
    pub length: f64,
    /// Unit tangent.
    pub tangent: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub dirichlet_edges: Vec<[usize; 2]>,
    pub neumann_edges: Vec<[usize; 2]>,
    /// Element areas (the quadrature weights of the midpoint rule).
    areas: Vec<f64>,
    /// Barycentric gradients per element, one `[gx, gy]` per local node.
    grads: Vec<[[f64; 2]; 3]>,
    is_dirichlet_node: Vec<bool>,
    free_of_node: Vec<Option<usize>>,
    node_of_free: Vec<usize>,
    interior_edges: Vec<InteriorEdge>,
}

impl Mesh {
    pub fn from_file(file: MeshFile) -> Result<Mesh> {
        let MeshFile {
            nodes,
            triangles,
            dirichlet_edges,
            neumann_edges,
        } = file;
        let nn = nodes.len();
        let err = |msg: String| Err(Error::Mesh(msg));

        if nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return err("non-finite node coordinates".into());
        }

        let mut areas = Vec::with_capacity(triangles.len());
        let mut grads = Vec::with_capacity(triangles.len());
        for (e, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nn) {
                return err(format!("triangle {e} references a missing node"));
            }
            let [a, b, c] = [nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]];
            let signed =
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
            if !(signed > 0.0) {
                return err(format!(
                    "triangle {e} has non-positive area {signed} (orientation must be CCW)"
                ));
            }
            areas.push(signed);
            // ∇λ_i = rot(opposite edge) / (2 area)
            let g = |p: [f64; 2], q: [f64; 2]| {
                [(p[1] - q[1]) / (2.0 * signed), (q[0] - p[0]) / (2.0 * signed)]
            };
            grads.push([g(b, c), g(c, a), g(a, b)]);
        }

        // Edge census: interior edges appear twice with opposite direction.
        let mut census: BTreeMap<(usize, usize), Vec<(usize, bool)>> = BTreeMap::new();
        for (e, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (p, q) = (tri[k], tri[(k + 1) % 3]);
                let key = (p.min(q), p.max(q));
                census.entry(key).or_default().push((e, p < q));
            }
        }
        let mut boundary: BTreeMap<(usize, usize), bool> = BTreeMap::new();
        let mut interior_edges = Vec::new();
        for (&(p, q), owners) in &census {
            match owners.len() {
                1 => {
                    boundary.insert((p, q), false);
                }
                2 => {
                    if owners[0].1 == owners[1].1 {
                        return err(format!(
                            "edge ({p},{q}) traversed twice in the same direction: non-conforming mesh"
                        ));
                    }
                    let (dx, dy) = (nodes[q][0] - nodes[p][0], nodes[q][1] - nodes[p][1]);
                    let len = (dx * dx + dy * dy).sqrt();
                    interior_edges.push(InteriorEdge {
                        elems: [owners[0].0, owners[1].0],
                        length: len,
                        tangent: [dx / len, dy / len],
                    });
                }
                m => return err(format!("edge ({p},{q}) shared by {m} triangles")),
            }
        }

        // Boundary labels: exactly once each, jointly covering the boundary.
        let mut is_dirichlet_node = vec![false; nn];
        for (label, edges) in [("dirichlet", &dirichlet_edges), ("neumann", &neumann_edges)] {
            for &[p, q] in edges {
                if p >= nn || q >= nn {
                    return err(format!("{label} edge ({p},{q}) references a missing node"));
                }
                let key = (p.min(q), p.max(q));
                match boundary.get_mut(&key) {
                    None => {
                        return err(format!(
                            "{label} edge ({p},{q}) is not a boundary edge of the triangulation"
                        ))
                    }
                    Some(seen @ false) => *seen = true,
                    Some(true) => return err(format!("boundary edge ({p},{q}) labeled twice")),
                }
            }
        }
        if let Some((&(p, q), _)) = boundary.iter().find(|(_, seen)| !**seen) {
            return err(format!("boundary edge ({p},{q}) carries no label"));
        }
        if dirichlet_edges.is_empty() {
            return err("the Dirichlet part of the boundary must be nonempty".into());
        }
        for &[p, q] in &dirichlet_edges {
            is_dirichlet_node[p] = true;
            is_dirichlet_node[q] = true;
        }

        let mut free_of_node = vec![None; nn];
        let mut node_of_free = Vec::new();
        for (i, fixed) in is_dirichlet_node.iter().enumerate() {
            if !fixed {
                free_of_node[i] = Some(node_of_free.len());
                node_of_free.push(i);
            }
        }

        Ok(Mesh {
            nodes,
            triangles,
            dirichlet_edges,
            neumann_edges,
            areas,
            grads,
            is_dirichlet_node,
            free_of_node,
            node_of_free,
            interior_edges,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_free(&self) -> usize {
        self.node_of_free.len()
    }

    pub fn area(&self, e: usize) -> f64 {
        self.areas[e]
    }

    pub fn min_area(&self) -> f64 {
        self.areas.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn grad(&self, e: usize, local: usize) -> [f64; 2] {
        self.grads[e][local]
    }

    pub fn is_dirichlet(&self, node: usize) -> bool {
        self.is_dirichlet_node[node]
    }

    pub fn free_index(&self, node: usize) -> Option<usize> {
        self.free_of_node[node]
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.node_of_free
    }

    pub fn interior_edges(&self) -> &[InteriorEdge] {
        &self.interior_edges
    }

    pub fn edge_length(&self, edge: [usize; 2]) -> f64 {
        let (p, q) = (self.nodes[edge[0]], self.nodes[edge[1]]);
        ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
    }

    /// Outward unit normal of a boundary edge (the adjacent triangle is on
    /// its left when traversed consistently with the triangulation).
    pub fn boundary_normal(&self, edge: [usize; 2]) -> [f64; 2] {
        // Find the owning triangle to orient the normal outward.
        let key = (edge[0].min(edge[1]), edge[0].max(edge[1]));
        for tri in &self.triangles {
            for k in 0..3 {
                let (p, q) = (tri[k], tri[(k + 1) % 3]);
                if (p.min(q), p.max(q)) == key {
                    // Directed edge (p,q) is CCW, so the outward normal is
                    // the right-hand rotation of the tangent.
                    let (a, b) = (self.nodes[p], self.nodes[q]);
                    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                    let len = (dx * dx + dy * dy).sqrt();
                    return [dy / len, -dx / len];
                }
            }
        }
        panic!("edge {edge:?} not part of the mesh");
    }

    /// P1 gradient of a nodal vector field on element `e`.
    pub fn element_gradient(&self, e: usize, nodal: &[[f64; 2]]) -> Mat {
        let tri = self.triangles[e];
        let mut m = Mat::zeros(2);
        for local in 0..3 {
            let g = self.grads[e][local];
            let v = nodal[tri[local]];
            for row in 0..2 {
                for col in 0..2 {
                    m.set(row, col, m.get(row, col) + v[row] * g[col]);
                }
            }
        }
        m
    }

    /// Structured unit-square mesh with `n × n` cells split along the
    /// main diagonal (nested under uniform refinement n → 2n).
    pub fn unit_square(n: usize, boundary: SquareBoundary) -> Mesh {
        assert!(n >= 1);
        let h = 1.0 / n as f64;
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([i as f64 * h, j as f64 * h]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        let mut dirichlet_edges = Vec::new();
        let mut neumann_edges = Vec::new();
        for k in 0..n {
            let (bottom, top) = ([id(k, 0), id(k + 1, 0)], [id(k, n), id(k + 1, n)]);
            let (left, right) = ([id(0, k), id(0, k + 1)], [id(n, k), id(n, k + 1)]);
            match boundary {
                SquareBoundary::AllDirichlet => {
                    dirichlet_edges.extend([bottom, top, left, right]);
                }
                SquareBoundary::ClampedEnds => {
                    dirichlet_edges.extend([left, right]);
                    neumann_edges.extend([bottom, top]);
                }
            }
        }
        Mesh::from_file(MeshFile {
            nodes,
            triangles,
            dirichlet_edges,
            neumann_edges,
        })
        .expect("structured mesh is valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SquareBoundary {
    AllDirichlet,
    /// Dirichlet on the vertical ends `x = 0` and `x = 1`, traction-free
    /// Neumann on top and bottom.
    ClampedEnds,
}

/// Affine boundary displacement `g_D(x) = A x + b`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct AffineMap {
    pub linear: [[f64; 2]; 2],
    #[serde(default)]
    pub offset: [f64; 2],
}

impl AffineMap {
    pub fn identity() -> Self {
        AffineMap {
            linear: [[1.0, 0.0], [0.0, 1.0]],
            offset: [0.0, 0.0],
        }
    }

    /// Uniaxial stretch `diag(1 + s, 1)`.
    pub fn stretch_x(s: f64) -> Self {
        AffineMap {
            linear: [[1.0 + s, 0.0], [0.0, 1.0]],
            offset: [0.0, 0.0],
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        [
            self.linear[0][0] * x[0] + self.linear[0][1] * x[1] + self.offset[0],
            self.linear[1][0] * x[0] + self.linear[1][1] * x[1] + self.offset[1],
        ]
    }

    pub fn linear_mat(&self) -> Mat {
        Mat::from_slice(
            2,
            &[
                self.linear[0][0],
                self.linear[0][1],
                self.linear[1][0],
                self.linear[1][1],
            ],
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum TractionSpec {
    Constant([f64; 2]),
    /// Indexed like `neumann_edges`.
    PerEdge(Vec<[f64; 2]>),
}

impl Default for TractionSpec {
    fn default() -> Self {
        TractionSpec::Constant([0.0, 0.0])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum BodyForceSpec {
    Constant([f64; 2]),
    /// Indexed like `triangles`.
    PerElement(Vec<[f64; 2]>),
}

impl Default for BodyForceSpec {
    fn default() -> Self {
        BodyForceSpec::Constant([0.0, 0.0])
    }
}

/// On-disk boundary conditions.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BcFile {
    pub g_dirichlet: AffineMap,
    #[serde(default)]
    pub h_neumann: TractionSpec,
    #[serde(default)]
    pub body_force: BodyForceSpec,
}

/// A mesh with fully resolved loads: per-element body force and per-edge
/// traction.
#[derive(Clone, Debug)]
pub struct MeshProblem {
    pub mesh: Mesh,
    pub g_d: AffineMap,
    pub body_force: Vec<[f64; 2]>,
    pub traction: Vec<[f64; 2]>,
}

impl MeshProblem {
    pub fn new(mesh: Mesh, bc: &BcFile) -> Result<MeshProblem> {
        let body_force = match &bc.body_force {
            BodyForceSpec::Constant(f) => vec![*f; mesh.n_elements()],
            BodyForceSpec::PerElement(v) => {
                if v.len() != mesh.n_elements() {
                    return Err(Error::Mesh(format!(
                        "body force lists {} elements, mesh has {}",
                        v.len(),
                        mesh.n_elements()
                    )));
                }
                v.clone()
            }
        };
        let traction = match &bc.h_neumann {
            TractionSpec::Constant(h) => vec![*h; mesh.neumann_edges.len()],
            TractionSpec::PerEdge(v) => {
                if v.len() != mesh.neumann_edges.len() {
                    return Err(Error::Mesh(format!(
                        "traction lists {} edges, mesh has {} Neumann edges",
                        v.len(),
                        mesh.neumann_edges.len()
                    )));
                }
                v.clone()
            }
        };
        Ok(MeshProblem {
            mesh,
            g_d: bc.g_dirichlet,
            body_force,
            traction,
        })
    }

    /// Nodal interpolation of the Dirichlet datum over all nodes.
    pub fn lift_dirichlet(&self) -> Vec<[f64; 2]> {
        self.mesh.nodes.iter().map(|&x| self.g_d.eval(x)).collect()
    }

    /// Consistent load vector `(f, v) + (h_N, v)_Γ` over all nodes.
    pub fn load_vector(&self) -> Vec<[f64; 2]> {
        let mesh = &self.mesh;
        let mut load = vec![[0.0; 2]; mesh.n_nodes()];
        for (e, tri) in mesh.triangles.iter().enumerate() {
            let w = mesh.area(e) / 3.0;
            let f = self.body_force[e];
            for &node in tri {
                load[node][0] += w * f[0];
                load[node][1] += w * f[1];
            }
        }
        for (k, edge) in mesh.neumann_edges.iter().enumerate() {
            let half = 0.5 * mesh.edge_length(*edge);
            let h = self.traction[k];
            for &node in edge {
                load[node][0] += half * h[0];
                load[node][1] += half * h[1];
            }
        }
        load
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_mesh_is_consistent() {
        for n in [1usize, 2, 5] {
            let mesh = Mesh::unit_square(n, SquareBoundary::AllDirichlet);
            assert_eq!(mesh.n_elements(), 2 * n * n);
            let total: f64 = (0..mesh.n_elements()).map(|e| mesh.area(e)).sum();
            assert!((total - 1.0).abs() < 1e-13);
        }
        let mesh = Mesh::unit_square(3, SquareBoundary::ClampedEnds);
        assert_eq!(mesh.dirichlet_edges.len(), 6);
        assert_eq!(mesh.neumann_edges.len(), 6);
        // Corner nodes on the ends are Dirichlet.
        assert!(mesh.is_dirichlet(0));
    }

    #[test]
    fn element_gradient_of_affine_field_is_exact() {
        let mesh = Mesh::unit_square(4, SquareBoundary::AllDirichlet);
        let map = AffineMap {
            linear: [[1.3, -0.2], [0.4, 0.9]],
            offset: [0.1, -2.0],
        };
        let nodal: Vec<[f64; 2]> = mesh.nodes.iter().map(|&x| map.eval(x)).collect();
        for e in 0..mesh.n_elements() {
            let g = mesh.element_gradient(e, &nodal);
            assert!(g.sub(&map.linear_mat()).norm() <= 1e-13);
        }
    }

    #[test]
    fn boundary_normals_point_outward() {
        let mesh = Mesh::unit_square(2, SquareBoundary::ClampedEnds);
        for edge in &mesh.neumann_edges {
            let n = mesh.boundary_normal(*edge);
            let mid = [
                0.5 * (mesh.nodes[edge[0]][0] + mesh.nodes[edge[1]][0]),
                0.5 * (mesh.nodes[edge[0]][1] + mesh.nodes[edge[1]][1]),
            ];
            // On the unit square the outward normal at a boundary midpoint
            // points away from the center.
            let dir = [mid[0] - 0.5, mid[1] - 0.5];
            assert!(n[0] * dir[0] + n[1] * dir[1] > 0.0);
        }
    }

    #[test]
    fn validation_rejects_broken_meshes() {
        // Flipped orientation.
        let bad = MeshFile {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 2, 1]],
            dirichlet_edges: vec![[0, 1], [1, 2], [2, 0]],
            neumann_edges: vec![],
        };
        assert!(Mesh::from_file(bad).is_err());

        // Unlabeled boundary edge.
        let bad = MeshFile {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            dirichlet_edges: vec![[0, 1], [1, 2]],
            neumann_edges: vec![],
        };
        assert!(Mesh::from_file(bad).is_err());

        // Doubly labeled edge.
        let bad = MeshFile {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            dirichlet_edges: vec![[0, 1], [1, 2], [2, 0]],
            neumann_edges: vec![[0, 1]],
        };
        assert!(Mesh::from_file(bad).is_err());

        // Empty Dirichlet set.
        let bad = MeshFile {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            dirichlet_edges: vec![],
            neumann_edges: vec![[0, 1], [1, 2], [2, 0]],
        };
        assert!(Mesh::from_file(bad).is_err());
    }

    #[test]
    fn mesh_json_roundtrip() {
        let mesh = Mesh::unit_square(2, SquareBoundary::ClampedEnds);
        let file = MeshFile {
            nodes: mesh.nodes.clone(),
            triangles: mesh.triangles.clone(),
            dirichlet_edges: mesh.dirichlet_edges.clone(),
            neumann_edges: mesh.neumann_edges.clone(),
        };
        let json = crate::io::to_json_string(&file).unwrap();
        let back: MeshFile = serde_json::from_str(&json).unwrap();
        let mesh2 = Mesh::from_file(back).unwrap();
        assert_eq!(mesh2.nodes, mesh.nodes);
        assert_eq!(mesh2.triangles, mesh.triangles);
    }
}
