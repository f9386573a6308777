//! Data-density sweep: solve the data-driven problem with graph samples of
//! increasing count and watch the objective and the displacement error
//! against the classical solution fall.
//!
//! ```sh
//! cargo run --release --example convergence_study
//! ```

use ddfe::fem::{AffineMap, BcFile, Mesh, MeshProblem, SquareBoundary};
use ddfe::model::EnergyModel;
use ddfe::solver::study_convergence;

fn main() -> Result<(), ddfe::Error> {
    let model = EnergyModel::hat_w2(0.25, 0.4)?;
    let mp = MeshProblem::new(
        Mesh::unit_square(8, SquareBoundary::ClampedEnds),
        &BcFile {
            g_dirichlet: AffineMap::stretch_x(0.04),
            h_neumann: Default::default(),
            body_force: Default::default(),
        },
    )?;

    for noise in [0.0, 0.05] {
        let table = study_convergence(&mp, &model, &[100, 1000, 10_000], noise, 1)?;
        println!(
            "noise = {noise}: sampling box |F| <= {:.3}, {} elements",
            table.box_bound, table.n_elements
        );
        println!("      N          J      u-err(rel)   delta-gap   div(P')      class");
        for row in &table.rows {
            println!(
                "{:>7}  {:>10.3e}  {:>10.3e}  {:>10.3e}  {:>10.3e}   {:?}",
                row.count, row.j, row.u_err_rel, row.delta_gap, row.div_residual_data,
                row.classification
            );
        }
        if noise > 0.0 {
            println!("(the objective plateaus at the noise floor instead of shrinking)\n");
        } else {
            println!();
        }
    }
    Ok(())
}
