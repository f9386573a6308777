//! The two quadratic projections defining the admissible set: onto
//! compatible strain fields and onto equilibrated stress fields.
//!
//! Discretization: P1 displacements and multipliers, P0 element states,
//! midpoint quadrature. Both projections reduce to solves with the same
//! scalar P1 stiffness matrix on the non-Dirichlet nodes, one per spatial
//! component.

use crate::data::DeviationPair;
use crate::sparse::{solve_cg, Csr, Triplets};
use crate::tensor::Mat;
use crate::{Error, Result};

use super::mesh::MeshProblem;

const CG_TOL: f64 = 1e-13;

fn quadratic_modulus(dev: &DeviationPair) -> Result<f64> {
    dev.modulus().ok_or_else(|| {
        Error::InvalidParameter(
            "projection solves need the quadratic deviation pair".into(),
        )
    })
}

/// Scalar stiffness `Σ_e w_e ∇φ_i · ∇φ_j` over free nodes.
pub(super) fn stiffness_free(mp: &MeshProblem) -> Csr {
    let mesh = &mp.mesh;
    let mut t = Triplets::new(mesh.n_free());
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let w = mesh.area(e);
        for (li, &ni) in tri.iter().enumerate() {
            let Some(fi) = mesh.free_index(ni) else {
                continue;
            };
            let gi = mesh.grad(e, li);
            for (lj, &nj) in tri.iter().enumerate() {
                if let Some(fj) = mesh.free_index(nj) {
                    let gj = mesh.grad(e, lj);
                    t.push(fi, fj, w * (gi[0] * gj[0] + gi[1] * gj[1]));
                }
            }
        }
    }
    t.to_csr()
}

/// `rhs_i += Σ_e w_e (M_e ∇φ_i)` accumulated per component over free nodes.
fn accumulate_matrix_tested(mp: &MeshProblem, field: &[Mat], rhs: &mut [Vec<f64>]) {
    let mesh = &mp.mesh;
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let w = mesh.area(e);
        for (li, &ni) in tri.iter().enumerate() {
            if let Some(fi) = mesh.free_index(ni) {
                let g = mesh.grad(e, li);
                for comp in 0..2 {
                    rhs[comp][fi] +=
                        w * (field[e].get(comp, 0) * g[0] + field[e].get(comp, 1) * g[1]);
                }
            }
        }
    }
}

/// Minimize `Σ_e w_e V(Du_e − F*_e)` over P1 fields with `u = g_D` on the
/// Dirichlet boundary. Returns the nodal field and its element gradients.
pub fn project_compatible(
    mp: &MeshProblem,
    f_star: &[Mat],
    dev: &DeviationPair,
) -> Result<(Vec<[f64; 2]>, Vec<Mat>)> {
    quadratic_modulus(dev)?;
    let mesh = &mp.mesh;
    if f_star.len() != mesh.n_elements() {
        return Err(Error::DimensionMismatch(mesh.n_elements(), f_star.len()));
    }
    let stiffness = stiffness_free(mp);
    let mut u = mp.lift_dirichlet();
    // Zero the free nodes: their lifted values act only through the
    // Dirichlet coupling below.
    for &node in mesh.free_nodes() {
        u[node] = [0.0, 0.0];
    }

    let nf = mesh.n_free();
    let mut rhs = vec![vec![0.0; nf], vec![0.0; nf]];
    accumulate_matrix_tested(mp, f_star, &mut rhs);
    // Move the known Dirichlet values to the right-hand side.
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let w = mesh.area(e);
        for (li, &ni) in tri.iter().enumerate() {
            let Some(fi) = mesh.free_index(ni) else {
                continue;
            };
            let gi = mesh.grad(e, li);
            for (lj, &nj) in tri.iter().enumerate() {
                if mesh.free_index(nj).is_none() {
                    let gj = mesh.grad(e, lj);
                    let k = w * (gi[0] * gj[0] + gi[1] * gj[1]);
                    let gd = mp.g_d.eval(mesh.nodes[nj]);
                    rhs[0][fi] -= k * gd[0];
                    rhs[1][fi] -= k * gd[1];
                }
            }
        }
    }

    for comp in 0..2 {
        let x = solve_cg(&stiffness, &rhs[comp], CG_TOL)?;
        for (fi, &node) in mesh.free_nodes().iter().enumerate() {
            u[node][comp] = x[fi];
        }
    }
    // Restore exact Dirichlet values.
    for (node, fixed) in u.iter_mut().enumerate().take(mesh.n_nodes()) {
        if mesh.is_dirichlet(node) {
            *fixed = mp.g_d.eval(mesh.nodes[node]);
        }
    }
    let f: Vec<Mat> = (0..mesh.n_elements())
        .map(|e| mesh.element_gradient(e, &u))
        .collect();
    Ok((u, f))
}

/// Weak equilibrium residual of a per-element stress field against every
/// P1 test function vanishing on the Dirichlet boundary:
/// `r_i = Σ_e w_e P_e ∇φ_i − load_i`, returned over free nodes per
/// component.
pub fn equilibrium_residual(mp: &MeshProblem, p: &[Mat]) -> Vec<[f64; 2]> {
    let mesh = &mp.mesh;
    let load = mp.load_vector();
    let mut res = vec![[0.0f64; 2]; mesh.n_free()];
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let w = mesh.area(e);
        for (li, &ni) in tri.iter().enumerate() {
            if let Some(fi) = mesh.free_index(ni) {
                let g = mesh.grad(e, li);
                for comp in 0..2 {
                    res[fi][comp] +=
                        w * (p[e].get(comp, 0) * g[0] + p[e].get(comp, 1) * g[1]);
                }
            }
        }
    }
    for (fi, &node) in mesh.free_nodes().iter().enumerate() {
        res[fi][0] -= load[node][0];
        res[fi][1] -= load[node][1];
    }
    res
}

pub fn residual_norm(res: &[[f64; 2]]) -> f64 {
    res.iter()
        .map(|r| r[0] * r[0] + r[1] * r[1])
        .sum::<f64>()
        .sqrt()
}

/// Minimize `Σ_e w_e V*(P_e − P*_e)` subject to weak equilibrium.
///
/// The constrained quadratic program is solved through the Schur
/// complement of its saddle system: with the quadratic pair the stress
/// block is diagonal, the multiplier solve is the scalar stiffness scaled
/// by the modulus, and the optimal stress is `P_e = P*_e + C Dλ_e`.
pub fn project_equilibrium(
    mp: &MeshProblem,
    p_star: &[Mat],
    dev: &DeviationPair,
) -> Result<(Vec<Mat>, Vec<[f64; 2]>)> {
    let modulus = quadratic_modulus(dev)?;
    let mesh = &mp.mesh;
    if p_star.len() != mesh.n_elements() {
        return Err(Error::DimensionMismatch(mesh.n_elements(), p_star.len()));
    }
    if mesh.n_free() == 0 {
        // Fully Dirichlet boundary leaves no test functions: every stress
        // field is weakly equilibrated and the projection is the identity.
        return Ok((p_star.to_vec(), vec![[0.0; 2]; mesh.n_nodes()]));
    }
    let stiffness = stiffness_free(mp);
    let nf = mesh.n_free();
    // rhs = load − Σ w_e P*_e ∇φ_i, per component.
    let mut rhs = vec![vec![0.0; nf], vec![0.0; nf]];
    accumulate_matrix_tested(mp, p_star, &mut rhs);
    let load = mp.load_vector();
    for comp in 0..2 {
        for (fi, &node) in mesh.free_nodes().iter().enumerate() {
            rhs[comp][fi] = load[node][comp] - rhs[comp][fi];
        }
    }
    let mut lambda = vec![[0.0f64; 2]; mesh.n_nodes()];
    for comp in 0..2 {
        let scaled: Vec<f64> = rhs[comp].iter().map(|v| v / modulus).collect();
        let x = solve_cg(&stiffness, &scaled, CG_TOL)?;
        for (fi, &node) in mesh.free_nodes().iter().enumerate() {
            lambda[node][comp] = x[fi];
        }
    }
    let p: Vec<Mat> = (0..mesh.n_elements())
        .map(|e| p_star[e].add(&mesh.element_gradient(e, &lambda).scale(modulus)))
        .collect();

    // The constraint must hold to solver accuracy.
    let res = residual_norm(&equilibrium_residual(mp, &p));
    let scale = 1.0 + residual_norm(
        &load
            .iter()
            .map(|l| [l[0], l[1]])
            .collect::<Vec<[f64; 2]>>(),
    );
    if res > 1e-9 * scale {
        return Err(Error::LinearSolve(format!(
            "equilibrium projection residual {res:e} exceeds tolerance"
        )));
    }
    Ok((p, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::{AffineMap, BcFile, BodyForceSpec, Mesh, MeshFile, SquareBoundary, TractionSpec};
    use crate::rng::Rng;
    use crate::tensor::dot;

    fn quad() -> DeviationPair {
        DeviationPair::quadratic(1.0).unwrap()
    }

    fn two_triangle_problem(g_d: AffineMap) -> MeshProblem {
        let mesh = Mesh::from_file(MeshFile {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            dirichlet_edges: vec![[3, 0]],
            neumann_edges: vec![[0, 1], [1, 2], [2, 3]],
        })
        .unwrap();
        MeshProblem::new(
            mesh,
            &BcFile {
                g_dirichlet: g_d,
                h_neumann: TractionSpec::default(),
                body_force: BodyForceSpec::default(),
            },
        )
        .unwrap()
    }

    fn random_mat2(rng: &mut Rng) -> Mat {
        let mut m = Mat::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                m.set(i, j, rng.normal());
            }
        }
        m
    }

    #[test]
    fn affine_target_is_exactly_compatible() {
        let map = AffineMap {
            linear: [[1.1, 0.3], [-0.2, 0.9]],
            offset: [0.0, 0.5],
        };
        let mesh = Mesh::unit_square(4, SquareBoundary::AllDirichlet);
        let mp = MeshProblem::new(
            mesh,
            &BcFile {
                g_dirichlet: map,
                h_neumann: TractionSpec::default(),
                body_force: BodyForceSpec::default(),
            },
        )
        .unwrap();
        let target = vec![map.linear_mat(); mp.mesh.n_elements()];
        let (u, f) = project_compatible(&mp, &target, &quad()).unwrap();
        let mut objective = 0.0;
        for e in 0..mp.mesh.n_elements() {
            objective += mp.mesh.area(e) * quad().v(&f[e].sub(&target[e]));
        }
        assert!(objective <= 1e-20, "objective {objective}");
        for (node, &x) in mp.mesh.nodes.iter().enumerate() {
            let expect = map.eval(x);
            assert!((u[node][0] - expect[0]).abs() < 1e-10);
            assert!((u[node][1] - expect[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_data_zero_boundary_gives_zero() {
        let mesh = Mesh::unit_square(3, SquareBoundary::AllDirichlet);
        let mp = MeshProblem::new(
            mesh,
            &BcFile {
                g_dirichlet: AffineMap {
                    linear: [[0.0; 2]; 2],
                    offset: [0.0; 2],
                },
                h_neumann: TractionSpec::default(),
                body_force: BodyForceSpec::default(),
            },
        )
        .unwrap();
        let zeros = vec![Mat::zeros(2); mp.mesh.n_elements()];
        let (u, f) = project_compatible(&mp, &zeros, &quad()).unwrap();
        assert!(u.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
        assert!(f.iter().all(|m| m.norm() == 0.0));
    }

    #[test]
    fn constant_stress_with_matching_traction_is_equilibrated() {
        let s = Mat::from_slice(2, &[1.3, 0.2, 0.2, -0.7]); // symmetric
        let mesh = Mesh::unit_square(3, SquareBoundary::ClampedEnds);
        // Traction on top/bottom edges must equal S·ν for S to satisfy the
        // Neumann condition exactly.
        let mut traction = Vec::new();
        for edge in &mesh.neumann_edges {
            let nu = mesh.boundary_normal(*edge);
            let t = s.apply(&nu);
            traction.push([t[0], t[1]]);
        }
        let mp = MeshProblem::new(
            mesh,
            &BcFile {
                g_dirichlet: AffineMap::identity(),
                h_neumann: TractionSpec::PerEdge(traction),
                body_force: BodyForceSpec::default(),
            },
        )
        .unwrap();
        let target = vec![s; mp.mesh.n_elements()];
        let (p, lambda) = project_equilibrium(&mp, &target, &quad()).unwrap();
        for pe in &p {
            assert!(pe.sub(&s).norm() <= 1e-10);
        }
        assert!(lambda.iter().all(|l| l[0].abs() < 1e-9 && l[1].abs() < 1e-9));

        // Zero target with zero loads projects to zero.
        let mp0 = two_triangle_problem(AffineMap::identity());
        let zeros = vec![Mat::zeros(2); 2];
        let (p, _) = project_equilibrium(&mp0, &zeros, &quad()).unwrap();
        assert!(p.iter().all(|m| m.norm() <= 1e-14));
    }

    /// Dense oracle: reconstruct the quadratic objective over all free
    /// displacement dofs by evaluating it, then solve the normal equations
    /// with a local Gaussian elimination. Independent of the CG/assembly
    /// code path.
    fn oracle_compatible(mp: &MeshProblem, target: &[Mat], dev: &DeviationPair) -> Vec<[f64; 2]> {
        let mesh = &mp.mesh;
        let nf = mesh.n_free();
        let dofs = 2 * nf;
        let objective = |x: &[f64]| -> f64 {
            let mut u = mp.lift_dirichlet();
            for (fi, &node) in mesh.free_nodes().iter().enumerate() {
                u[node] = [x[fi], x[nf + fi]];
            }
            (0..mesh.n_elements())
                .map(|e| mesh.area(e) * dev.v(&mesh.element_gradient(e, &u).sub(&target[e])))
                .sum()
        };
        // O(x) = ½ xᵀA x + bᵀx + c; recover A and b by evaluation.
        let zero = vec![0.0; dofs];
        let c0 = objective(&zero);
        let mut a = vec![vec![0.0; dofs]; dofs];
        let mut b = vec![0.0; dofs];
        let mut basis = vec![0.0; dofs];
        for i in 0..dofs {
            basis[i] = 1.0;
            let oi = objective(&basis);
            basis[i] = -1.0;
            let omi = objective(&basis);
            basis[i] = 0.0;
            b[i] = 0.5 * (oi - omi);
            a[i][i] = oi + omi - 2.0 * c0;
        }
        for i in 0..dofs {
            for j in i + 1..dofs {
                basis[i] = 1.0;
                basis[j] = 1.0;
                let oij = objective(&basis);
                basis[i] = 0.0;
                basis[j] = 0.0;
                let aij = oij - c0 - b[i] - b[j] - 0.5 * a[i][i] - 0.5 * a[j][j];
                a[i][j] = aij;
                a[j][i] = aij;
            }
        }
        // Solve A x = -b by Gauss elimination with partial pivoting.
        let x = gauss(&mut a, b.iter().map(|v| -v).collect());
        let mut u = mp.lift_dirichlet();
        for (fi, &node) in mesh.free_nodes().iter().enumerate() {
            u[node] = [x[fi], x[nf + fi]];
        }
        u
    }

    fn gauss(a: &mut [Vec<f64>], mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, piv);
            b.swap(k, piv);
            for i in k + 1..n {
                let m = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= m * a[k][j];
                }
                b[i] -= m * b[k];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= a[i][j] * b[j];
            }
            b[i] = s / a[i][i];
        }
        b
    }

    #[test]
    fn compatible_projection_matches_dense_oracle() {
        let mut rng = Rng::new(5);
        let mp = two_triangle_problem(AffineMap {
            linear: [[1.0, 0.1], [0.0, 1.0]],
            offset: [0.0, 0.0],
        });
        let dev = quad();
        for _ in 0..50 {
            let target: Vec<Mat> = (0..2).map(|_| random_mat2(&mut rng)).collect();
            let (u, _) = project_compatible(&mp, &target, &dev).unwrap();
            let u_oracle = oracle_compatible(&mp, &target, &dev);
            for node in 0..mp.mesh.n_nodes() {
                for comp in 0..2 {
                    let diff = (u[node][comp] - u_oracle[node][comp]).abs();
                    assert!(
                        diff <= 1e-10 * (1.0 + u_oracle[node][comp].abs()),
                        "node {node} comp {comp}: {} vs {}",
                        u[node][comp],
                        u_oracle[node][comp]
                    );
                }
            }
        }
    }

    /// Dense KKT oracle for the equilibrium projection: assemble the full
    /// saddle system in (P, λ) and solve it directly.
    fn oracle_equilibrium(mp: &MeshProblem, target: &[Mat], dev: &DeviationPair) -> Vec<Mat> {
        let mesh = &mp.mesh;
        let ne = mesh.n_elements();
        let nf = mesh.n_free();
        let np = 4 * ne;
        let nl = 2 * nf;
        let c = dev.modulus().unwrap();
        // Constraint matrix rows: r(P)[φ_i e_k] is affine in P.
        let residual_of = |pvec: &[f64]| -> Vec<f64> {
            let p: Vec<Mat> = (0..ne)
                .map(|e| Mat::from_slice(2, &pvec[4 * e..4 * e + 4]))
                .collect();
            equilibrium_residual(mp, &p)
                .into_iter()
                .flat_map(|r| [r[0], r[1]])
                .collect()
        };
        let r0 = residual_of(&vec![0.0; np]);
        let mut amat = vec![vec![0.0; np]; nl];
        for col in 0..np {
            let mut pvec = vec![0.0; np];
            pvec[col] = 1.0;
            let r = residual_of(&pvec);
            for row in 0..nl {
                amat[row][col] = r[row] - r0[row];
            }
        }
        // KKT: [M Aᵀ; A 0] [P; λ] = [M P*; -r0]
        let dim = np + nl;
        let mut kkt = vec![vec![0.0; dim]; dim];
        let mut rhs = vec![0.0; dim];
        for e in 0..ne {
            let m = mesh.area(e) / c;
            for k in 0..4 {
                kkt[4 * e + k][4 * e + k] = m;
                rhs[4 * e + k] = m * target[e].entries()[k];
            }
        }
        for row in 0..nl {
            for col in 0..np {
                kkt[np + row][col] = amat[row][col];
                kkt[col][np + row] = amat[row][col];
            }
            rhs[np + row] = -r0[row];
        }
        let sol = gauss(&mut kkt, rhs);
        (0..ne)
            .map(|e| Mat::from_slice(2, &sol[4 * e..4 * e + 4]))
            .collect()
    }

    #[test]
    fn equilibrium_projection_matches_dense_kkt_oracle() {
        let mut rng = Rng::new(6);
        let mp = two_triangle_problem(AffineMap::identity());
        let dev = DeviationPair::quadratic(1.7).unwrap();
        for _ in 0..50 {
            let target: Vec<Mat> = (0..2).map(|_| random_mat2(&mut rng)).collect();
            let (p, _) = project_equilibrium(&mp, &target, &dev).unwrap();
            let p_oracle = oracle_equilibrium(&mp, &target, &dev);
            for e in 0..2 {
                let diff = p[e].sub(&p_oracle[e]).norm();
                assert!(
                    diff <= 1e-10 * (1.0 + p_oracle[e].norm()),
                    "element {e}: diff {diff}"
                );
            }
        }
    }

    #[test]
    fn projections_are_idempotent_and_first_order_optimal() {
        let mut rng = Rng::new(7);
        let mp = two_triangle_problem(AffineMap {
            linear: [[1.02, 0.0], [0.0, 1.0]],
            offset: [0.0, 0.0],
        });
        let dev = quad();
        let target: Vec<Mat> = (0..2).map(|_| random_mat2(&mut rng)).collect();
        let (u, f) = project_compatible(&mp, &target, &dev).unwrap();
        // Idempotence: projecting the projected gradient changes nothing.
        let (u2, f2) = project_compatible(&mp, &f, &dev).unwrap();
        for node in 0..mp.mesh.n_nodes() {
            assert!((u[node][0] - u2[node][0]).abs() <= 1e-12 * (1.0 + u[node][0].abs()));
            assert!((u[node][1] - u2[node][1]).abs() <= 1e-12 * (1.0 + u[node][1].abs()));
        }
        for e in 0..2 {
            assert!(f[e].sub(&f2[e]).norm() <= 1e-12 * (1.0 + f[e].norm()));
        }

        // First-order optimality: admissible perturbations of size 1e-4
        // never decrease the objective.
        let objective = |u: &Vec<[f64; 2]>| -> f64 {
            (0..2)
                .map(|e| {
                    mp.mesh.area(e)
                        * dev.v(&mp.mesh.element_gradient(e, u).sub(&target[e]))
                })
                .sum()
        };
        let base = objective(&u);
        for _ in 0..20 {
            let mut pert = u.clone();
            let mut total = 0.0;
            let deltas: Vec<[f64; 2]> = (0..mp.mesh.n_nodes())
                .map(|node| {
                    if mp.mesh.is_dirichlet(node) {
                        [0.0, 0.0]
                    } else {
                        let d = [rng.normal(), rng.normal()];
                        total += d[0] * d[0] + d[1] * d[1];
                        d
                    }
                })
                .collect();
            let scale = 1e-4 / total.sqrt().max(1e-300);
            for node in 0..mp.mesh.n_nodes() {
                pert[node][0] += scale * deltas[node][0];
                pert[node][1] += scale * deltas[node][1];
            }
            assert!(objective(&pert) >= base - 1e-12 * (1.0 + base.abs()));
        }
    }

    #[test]
    fn galilean_shift_moves_displacement_only() {
        let mp = two_triangle_problem(AffineMap::identity());
        let mut shifted_bc = AffineMap::identity();
        shifted_bc.offset = [2.5, -1.0];
        let mp_shift = two_triangle_problem(shifted_bc);
        let mut rng = Rng::new(8);
        let target: Vec<Mat> = (0..2).map(|_| random_mat2(&mut rng)).collect();
        let dev = quad();
        let (u, f) = project_compatible(&mp, &target, &dev).unwrap();
        let (us, fs) = project_compatible(&mp_shift, &target, &dev).unwrap();
        for node in 0..mp.mesh.n_nodes() {
            assert!((us[node][0] - u[node][0] - 2.5).abs() <= 1e-9);
            assert!((us[node][1] - u[node][1] + 1.0).abs() <= 1e-9);
        }
        for e in 0..2 {
            assert!(fs[e].sub(&f[e]).norm() <= 1e-10);
        }
    }

    #[test]
    fn power_pair_is_rejected() {
        let mp = two_triangle_problem(AffineMap::identity());
        let dev = DeviationPair::power(4.0).unwrap();
        let t = vec![Mat::zeros(2); 2];
        assert!(project_compatible(&mp, &t, &dev).is_err());
        assert!(project_equilibrium(&mp, &t, &dev).is_err());
    }

    #[test]
    fn duality_identity_for_equilibrated_stress() {
        // For equilibrated P and any admissible u the weak constraint at
        // v = u − lift(g_D) vanishes: Σ w_e P·Dv = (f, v) + (h, v)_Γ.
        let mp = two_triangle_problem(AffineMap {
            linear: [[1.04, 0.0], [0.0, 1.0]],
            offset: [0.0, 0.0],
        });
        let dev = quad();
        let mut rng = Rng::new(9);
        let p_star: Vec<Mat> = (0..2).map(|_| random_mat2(&mut rng)).collect();
        let (p, _) = project_equilibrium(&mp, &p_star, &dev).unwrap();
        let f_star: Vec<Mat> = (0..2).map(|_| random_mat2(&mut rng)).collect();
        let (u, _) = project_compatible(&mp, &f_star, &dev).unwrap();

        let lift = mp.lift_dirichlet();
        let v: Vec<[f64; 2]> = u
            .iter()
            .zip(&lift)
            .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
            .collect();
        let mut pairing = 0.0;
        for e in 0..mp.mesh.n_elements() {
            pairing += mp.mesh.area(e) * dot(&p[e], &mp.mesh.element_gradient(e, &v));
        }
        let load = mp.load_vector();
        for (node, vi) in v.iter().enumerate() {
            pairing -= load[node][0] * vi[0] + load[node][1] * vi[1];
        }
        assert!(pairing.abs() <= 1e-10, "duality gap {pairing}");
    }
}
