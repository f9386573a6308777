//! Discrete diagnostics: the deviation gap between the admissible and data
//! branches, conformity residuals of the data branch, and the discrete
//! integration-by-parts identity.

use serde::{Deserialize, Serialize};

use crate::data::{DeviationPair, PhasePoint};
use crate::tensor::{dot, Mat};

use super::mesh::MeshProblem;
use super::project::{equilibrium_residual, residual_norm};

/// Per-element admissible state plus the nodal fields that produced it.
#[derive(Clone, Debug)]
pub struct ElementFields {
    /// Nodal deformation field (equals `g_D` on the Dirichlet boundary).
    pub u: Vec<[f64; 2]>,
    /// Per-element deformation gradient.
    pub f: Vec<Mat>,
    /// Per-element stress.
    pub p: Vec<Mat>,
    /// Equilibrium multiplier, zero on the Dirichlet boundary.
    pub lambda: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct DiagnosticsRecord {
    /// `Σ_e w_e (V(F_e − F'_e) + V*(P_e − P'_e))`.
    pub delta_gap: f64,
    /// `Σ` over interior edges of `length × |tangential jump of F'|`.
    pub curl_residual_data: f64,
    /// Euclidean norm of the weak equilibrium residual of `P'`.
    pub div_residual_data: f64,
    /// `|Σ_e w_e Du_e · P_e − (f, v) − (h_N, v)_Γ|` at `v = u − lift(g_D)`;
    /// vanishes for equilibrated `P`.
    pub duality_gap: f64,
}

pub fn discrete_diagnostics(
    mp: &MeshProblem,
    fields: &ElementFields,
    data_branch: &[PhasePoint],
    dev: &DeviationPair,
) -> DiagnosticsRecord {
    let mesh = &mp.mesh;
    let mut delta_gap = 0.0;
    for e in 0..mesh.n_elements() {
        delta_gap += mesh.area(e)
            * (dev.v(&fields.f[e].sub(&data_branch[e].f))
                + dev.v_star(&fields.p[e].sub(&data_branch[e].p)));
    }

    let mut curl = 0.0;
    for edge in mesh.interior_edges() {
        let jump = data_branch[edge.elems[0]]
            .f
            .sub(&data_branch[edge.elems[1]].f);
        let jt = jump.apply(&edge.tangent);
        curl += edge.length * (jt[0] * jt[0] + jt[1] * jt[1]).sqrt();
    }

    let p_data: Vec<Mat> = data_branch.iter().map(|z| z.p).collect();
    let div = residual_norm(&equilibrium_residual(mp, &p_data));

    let lift = mp.lift_dirichlet();
    let v: Vec<[f64; 2]> = fields
        .u
        .iter()
        .zip(&lift)
        .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
        .collect();
    let mut duality = 0.0;
    for e in 0..mesh.n_elements() {
        duality += mesh.area(e) * dot(&fields.p[e], &mesh.element_gradient(e, &v));
    }
    let load = mp.load_vector();
    for (node, vi) in v.iter().enumerate() {
        duality -= load[node][0] * vi[0] + load[node][1] * vi[1];
    }

    DiagnosticsRecord {
        delta_gap,
        curl_residual_data: curl,
        div_residual_data: div,
        duality_gap: duality.abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{AffineMap, BcFile, BodyForceSpec, Mesh, SquareBoundary, TractionSpec};
    use crate::fem::newton::solve_classical;
    use crate::model::EnergyModel;

    fn stretch_problem(n: usize) -> MeshProblem {
        MeshProblem::new(
            Mesh::unit_square(n, SquareBoundary::ClampedEnds),
            &BcFile {
                g_dirichlet: AffineMap::stretch_x(0.04),
                h_neumann: TractionSpec::default(),
                body_force: BodyForceSpec::default(),
            },
        )
        .unwrap()
    }

    #[test]
    fn classical_solution_has_vanishing_diagnostics() {
        let model = EnergyModel::hat_w2(0.25, 0.4).unwrap();
        let mp = stretch_problem(6);
        let sol = solve_classical(&mp, &model, 1e-11, 50).unwrap();
        let fields = ElementFields {
            u: sol.u.clone(),
            f: sol.f.clone(),
            p: sol.p.clone(),
            lambda: vec![[0.0; 2]; mp.mesh.n_nodes()],
        };
        let branch: Vec<PhasePoint> = sol
            .f
            .iter()
            .zip(&sol.p)
            .map(|(f, p)| PhasePoint::new(*f, *p))
            .collect();
        let dev = DeviationPair::quadratic(1.0).unwrap();
        let d = discrete_diagnostics(&mp, &fields, &branch, &dev);
        assert!(d.delta_gap <= 1e-12, "delta gap {}", d.delta_gap);
        // The data branch equals the compatible branch: tangential jumps
        // vanish because F = Du is a conforming P1 gradient.
        assert!(d.curl_residual_data <= 1e-10, "curl {}", d.curl_residual_data);
        assert!(d.div_residual_data <= 1e-10, "div {}", d.div_residual_data);
        assert!(d.duality_gap <= 1e-10, "duality {}", d.duality_gap);
    }

    #[test]
    fn constant_data_branch_has_zero_curl_residual() {
        let mp = stretch_problem(4);
        let constant = Mat::from_slice(2, &[1.2, 0.1, -0.3, 0.8]);
        let branch: Vec<PhasePoint> = (0..mp.mesh.n_elements())
            .map(|_| PhasePoint::new(constant, Mat::zeros(2)))
            .collect();
        let fields = ElementFields {
            u: mp.lift_dirichlet(),
            f: vec![constant; mp.mesh.n_elements()],
            p: vec![Mat::zeros(2); mp.mesh.n_elements()],
            lambda: vec![[0.0; 2]; mp.mesh.n_nodes()],
        };
        let dev = DeviationPair::quadratic(1.0).unwrap();
        let d = discrete_diagnostics(&mp, &fields, &branch, &dev);
        assert_eq!(d.curl_residual_data, 0.0);
    }
}
