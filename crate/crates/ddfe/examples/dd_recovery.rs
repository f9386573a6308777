//! Data-driven solve against two data sets: the exact per-element states of
//! the classical solution (recovered as a strong solution) and a sampled
//! graph cloud (recovered approximately, with the objective measuring the
//! data coverage).
//!
//! ```sh
//! cargo run --release --example dd_recovery
//! ```

use ddfe::data::{sample_graph, LocalDataSet};
use ddfe::fem::{solve_classical, AffineMap, BcFile, Mesh, MeshProblem, SquareBoundary};
use ddfe::model::EnergyModel;
use ddfe::solver::{nodal_l2_norm, solve_dd, DDConfig};

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
    let classical = solve_classical(&mp, &model, 1e-11, 60)?;

    // 1. The data set contains each element's classical state exactly.
    let exact = LocalDataSet::from_states(&model, &classical.f)?;
    let report = solve_dd(&mp, &exact, &DDConfig::quadratic(1))?;
    let diff: Vec<[f64; 2]> = report
        .fields
        .u
        .iter()
        .zip(&classical.u)
        .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
        .collect();
    println!("exact-state data set ({} points):", exact.len());
    println!(
        "  classification {:?}, J = {:.3e}, iterations {}, |u_dd - u_cl| / |u_cl| = {:.2e}",
        report.summary.classification,
        report.summary.final_j,
        report.summary.iterations,
        nodal_l2_norm(&mp, &diff) / nodal_l2_norm(&mp, &classical.u),
    );

    // 2. A sampled graph cloud: J measures how densely the data covers the
    // solution's state range.
    for count in [500usize, 5000] {
        let data = sample_graph(&model, 2.2, count, 0.0, 9, false)?;
        let report = solve_dd(&mp, &data, &DDConfig::quadratic(1))?;
        println!("\nsampled graph data ({count} points):");
        println!(
            "  classification {:?}, J = {:.3e}, iterations {}, delta-gap {:.3e}",
            report.summary.classification,
            report.summary.final_j,
            report.summary.iterations,
            report.summary.diagnostics.delta_gap,
        );
        println!(
            "  J history: {:?}",
            report
                .summary
                .j_history
                .iter()
                .map(|j| format!("{j:.3e}"))
                .collect::<Vec<_>>()
        );
    }
    Ok(())
}
