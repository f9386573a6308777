//! Classical reference solver: damped Newton on the discrete potential
//! energy `Π(u) = Σ_e w_e W(Du_e) − (f, u) − (h_N, u)_Γ`.

use crate::model::EnergyModel;
use crate::sparse::{solve_sym, Triplets};
use crate::tensor::Mat;
use crate::{Error, Result};

use super::mesh::MeshProblem;
use super::project::equilibrium_residual;

#[derive(Clone, Debug)]
pub struct ClassicalSolution {
    pub u: Vec<[f64; 2]>,
    pub f: Vec<Mat>,
    pub p: Vec<Mat>,
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub energy: f64,
}

pub fn potential_energy(mp: &MeshProblem, model: &EnergyModel, u: &[[f64; 2]]) -> f64 {
    let mesh = &mp.mesh;
    let mut pi = 0.0;
    for e in 0..mesh.n_elements() {
        pi += mesh.area(e) * model.energy(&mesh.element_gradient(e, u));
    }
    let load = mp.load_vector();
    for (node, l) in load.iter().enumerate() {
        pi -= l[0] * u[node][0] + l[1] * u[node][1];
    }
    pi
}

/// Residual of `div T(Du) + f = 0` in the weak P1 sense, over free dofs.
fn newton_residual(mp: &MeshProblem, model: &EnergyModel, u: &[[f64; 2]]) -> (Vec<Mat>, Vec<f64>) {
    let mesh = &mp.mesh;
    let stresses: Vec<Mat> = (0..mesh.n_elements())
        .map(|e| model.stress(&mesh.element_gradient(e, u)))
        .collect();
    let res = equilibrium_residual(mp, &stresses);
    let flat: Vec<f64> = res.into_iter().flat_map(|r| [r[0], r[1]]).collect();
    (stresses, flat)
}

/// Damped Newton iteration for the classical boundary-value problem.
///
/// Starts from the affine lift of the Dirichlet datum, backtracks on the
/// potential energy with step halving down to `2^-20`, and stops when the
/// Euclidean norm of the weak residual drops below `tol`.
pub fn solve_classical(
    mp: &MeshProblem,
    model: &EnergyModel,
    tol: f64,
    max_iter: usize,
) -> Result<ClassicalSolution> {
    if model.n() != 2 {
        return Err(Error::UnsupportedDimension(model.n()));
    }
    let mesh = &mp.mesh;
    let nf = mesh.n_free();
    let mut u = mp.lift_dirichlet();
    let mut energy = potential_energy(mp, model, &u);
    let mut history = Vec::new();

    for iter in 0..=max_iter {
        let (_, res) = newton_residual(mp, model, &u);
        let rnorm = res.iter().map(|v| v * v).sum::<f64>().sqrt();
        history.push(rnorm);
        if rnorm <= tol {
            let f: Vec<Mat> = (0..mesh.n_elements())
                .map(|e| mesh.element_gradient(e, &u))
                .collect();
            let p: Vec<Mat> = f.iter().map(|fe| model.stress(fe)).collect();
            return Ok(ClassicalSolution {
                u,
                f,
                p,
                residual_history: history,
                iterations: iter,
                energy,
            });
        }
        if iter == max_iter {
            break;
        }

        // Tangent over free dofs: K[(i,k),(j,l)] = Σ_e w_e DT(Du_e)[e_l ⊗ ∇φ_j] · (e_k ⊗ ∇φ_i).
        let mut trip = Triplets::new(2 * nf);
        for (e, tri) in mesh.triangles.iter().enumerate() {
            let w = mesh.area(e);
            let du = mesh.element_gradient(e, &u);
            for (lj, &nj) in tri.iter().enumerate() {
                let Some(fj) = mesh.free_index(nj) else {
                    continue;
                };
                let gj = mesh.grad(e, lj);
                for comp_j in 0..2 {
                    let mut basis = Mat::zeros(2);
                    basis.set(comp_j, 0, gj[0]);
                    basis.set(comp_j, 1, gj[1]);
                    let dt = model.stress_tangent(&du, &basis);
                    for (li, &ni) in tri.iter().enumerate() {
                        if let Some(fi) = mesh.free_index(ni) {
                            let gi = mesh.grad(e, li);
                            for comp_i in 0..2 {
                                let val =
                                    w * (dt.get(comp_i, 0) * gi[0] + dt.get(comp_i, 1) * gi[1]);
                                trip.push(2 * fi + comp_i, 2 * fj + comp_j, val);
                            }
                        }
                    }
                }
            }
        }
        let k = trip.to_csr();
        let neg_res: Vec<f64> = res.iter().map(|v| -v).collect();
        let delta = solve_sym(&k, &neg_res, 1e-13)?;

        // Backtracking line search on the energy. Near the solution the
        // energy decrement falls below rounding, so a step that fails the
        // energy test is still accepted when it shrinks the residual.
        let mut step = 1.0;
        let mut accepted = false;
        while step >= 2f64.powi(-20) {
            let mut trial = u.clone();
            for (fi, &node) in mesh.free_nodes().iter().enumerate() {
                trial[node][0] += step * delta[2 * fi];
                trial[node][1] += step * delta[2 * fi + 1];
            }
            let trial_energy = potential_energy(mp, model, &trial);
            if trial_energy < energy {
                u = trial;
                energy = trial_energy;
                accepted = true;
                break;
            }
            if step == 1.0 {
                let (_, trial_res) = newton_residual(mp, model, &trial);
                let trial_rnorm = trial_res.iter().map(|v| v * v).sum::<f64>().sqrt();
                if trial_rnorm < 0.5 * rnorm
                    && trial_energy <= energy + 1e3 * f64::EPSILON * (1.0 + energy.abs())
                {
                    u = trial;
                    energy = trial_energy;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                iterations: iter,
                residual: rnorm,
                history,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: *history.last().unwrap(),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{AffineMap, BcFile, BodyForceSpec, Mesh, SquareBoundary, TractionSpec};
    use crate::tensor::Mat;

    fn problem(n: usize, boundary: SquareBoundary, g_d: AffineMap) -> MeshProblem {
        MeshProblem::new(
            Mesh::unit_square(n, boundary),
            &BcFile {
                g_dirichlet: g_d,
                h_neumann: TractionSpec::default(),
                body_force: BodyForceSpec::default(),
            },
        )
        .unwrap()
    }

    #[test]
    fn identity_map_is_the_stress_free_solution() {
        let model = EnergyModel::hat_w2(0.25, 0.4).unwrap();
        let mp = problem(8, SquareBoundary::AllDirichlet, AffineMap::identity());
        let sol = solve_classical(&mp, &model, 1e-11, 30).unwrap();
        assert_eq!(sol.iterations, 0, "identity datum is already stationary");
        for (node, &x) in mp.mesh.nodes.iter().enumerate() {
            assert!((sol.u[node][0] - x[0]).abs() < 1e-14);
            assert!((sol.u[node][1] - x[1]).abs() < 1e-14);
        }
        for p in &sol.p {
            assert!(p.norm() <= 1e-12);
        }
        assert!(sol.residual_history[0] <= 1e-12);
    }

    #[test]
    fn rotated_identity_is_also_stress_free() {
        let model = EnergyModel::hat_w2(0.25, 0.4).unwrap();
        let q = Mat::rotation2(0.7);
        let g_d = AffineMap {
            linear: [[q.get(0, 0), q.get(0, 1)], [q.get(1, 0), q.get(1, 1)]],
            offset: [0.0, 0.0],
        };
        let mp = problem(6, SquareBoundary::AllDirichlet, g_d);
        let sol = solve_classical(&mp, &model, 1e-11, 30).unwrap();
        for p in &sol.p {
            assert!(p.norm() <= 1e-11);
        }
        let wmin = model.min_energy().unwrap();
        // Energy per unit area equals the pointwise minimum.
        assert!((sol.energy - wmin).abs() <= 1e-10 * (1.0 + wmin));
    }

    #[test]
    fn stretch_benchmark_converges_with_symmetry() {
        let model = EnergyModel::hat_w2(0.25, 0.4).unwrap();
        let mp = problem(8, SquareBoundary::ClampedEnds, AffineMap::stretch_x(0.04));
        let sol = solve_classical(&mp, &model, 1e-11, 50).unwrap();
        assert!(*sol.residual_history.last().unwrap() < 1e-10);
        assert!(sol.iterations <= 20);

        // Moment equilibrium elementwise (frame-indifferent law).
        for e in 0..mp.mesh.n_elements() {
            let res = Mat::moment_residual(&sol.f[e], &sol.p[e]);
            assert!(res <= 1e-9 * (1.0 + sol.f[e].norm() * sol.p[e].norm()));
        }

        // The diagonal split breaks the mirror symmetry but keeps the
        // square's point symmetry (x, y) -> (1-x, 1-y); the solution obeys
        // u(1-x, 1-y) = (1.04, 1) - u(x, y).
        let nn = 8 + 1;
        for j in 0..nn {
            for i in 0..nn {
                let a = j * nn + i;
                let b = (nn - 1 - j) * nn + (nn - 1 - i);
                assert!((sol.u[a][0] - (1.04 - sol.u[b][0])).abs() <= 1e-9);
                assert!((sol.u[a][1] - (1.0 - sol.u[b][1])).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn energy_decreases_under_refinement() {
        let model = EnergyModel::hat_w2(0.25, 0.4).unwrap();
        let mut energies = Vec::new();
        for n in [8usize, 16, 32] {
            let mp = problem(n, SquareBoundary::ClampedEnds, AffineMap::stretch_x(0.04));
            let sol = solve_classical(&mp, &model, 1e-10, 60).unwrap();
            energies.push(sol.energy);
        }
        assert!(
            energies[0] > energies[1] && energies[1] > energies[2],
            "energies {energies:?}"
        );
    }

    #[test]
    fn reports_non_convergence() {
        let model = EnergyModel::hat_w2(0.25, 0.4).unwrap();
        let mp = problem(4, SquareBoundary::ClampedEnds, AffineMap::stretch_x(0.5));
        let err = solve_classical(&mp, &model, 1e-30, 1).unwrap_err();
        match err {
            Error::NonConvergence {
                iterations,
                ref history,
                ..
            } => {
                assert_eq!(iterations, 1);
                assert_eq!(history.len(), 2);
            }
            ref other => panic!("expected non-convergence, got {other}"),
        }
    }

    #[test]
    fn residual_history_is_strictly_decreasing_near_solution() {
        let model = EnergyModel::hat_w2(0.25, 0.4).unwrap();
        let mp = problem(6, SquareBoundary::ClampedEnds, AffineMap::stretch_x(0.04));
        let sol = solve_classical(&mp, &model, 1e-11, 50).unwrap();
        let h = &sol.residual_history;
        for k in 1..h.len() {
            assert!(h[k] < h[k - 1], "history {h:?}");
        }
    }
}
