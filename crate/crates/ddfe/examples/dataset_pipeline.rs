//! Build a material data set end to end: sample a stress-function graph,
//! filter by moment equilibrium, augment with rotation orbits, query the
//! deviation, and round-trip through the CSV format.
//!
//! ```sh
//! cargo run --release --example dataset_pipeline
//! ```

use ddfe::certify::check_frame_indifference;
use ddfe::data::{sample_graph, DeviationPair, LocalDataSet, PhasePoint};
use ddfe::model::EnergyModel;
use ddfe::tensor::Mat;

fn main() -> Result<(), ddfe::Error> {
    let model = EnergyModel::hat_w2(0.25, 0.4)?;
    let dev = DeviationPair::quadratic(1.0)?;

    // Sample noisy graph points, keep orientation-preserving ones.
    let raw = sample_graph(&model, 2.5, 2000, 0.02, 7, true)?;
    println!("sampled {} noisy points (2% stress noise, det F > 0)", raw.len());

    // Noise breaks moment equilibrium; the filter drops offenders.
    let filtered = raw.filter_moment_equilibrium(1e-2)?;
    println!(
        "moment-equilibrium filter (tol 1e-2) removed {} points",
        filtered.meta().removed_by_mb_filter
    );

    // Orbit augmentation restores approximate frame indifference.
    let augmented = filtered.augment_orbit(16)?;
    let fi_before = check_frame_indifference(&filtered, &dev, 400, 1)?;
    let fi_after = check_frame_indifference(&augmented, &dev, 400, 1)?;
    println!(
        "frame indifference: bare cloud {:?} (max gap {:.3e}) -> augmented {:?} (max gap {:.3e})",
        fi_before.verdict,
        fi_before.constants["max_gap"],
        fi_after.verdict,
        fi_after.constants["max_gap"],
    );

    // Deviation queries.
    let query = PhasePoint::new(Mat::identity(2).scale(1.1), Mat::zeros(2));
    let (value, nearest) = augmented.psi(&dev, &query)?;
    println!(
        "psi at (1.1 I, 0): {value:.4e}, nearest data point has |F| = {:.3}, |P| = {:.3}",
        nearest.f.norm(),
        nearest.p.norm()
    );

    // The graph itself answers with a local-descent upper bound.
    let graph = LocalDataSet::graph(model);
    let (graph_value, _) = graph.psi(&dev, &query)?;
    println!("psi against the exact graph: {graph_value:.4e} (local-descent bound)");

    // CSV round trip is bit-exact.
    let dir = std::env::temp_dir().join("ddfe_dataset_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("data.csv");
    augmented.write_csv(&path)?;
    let back = LocalDataSet::read_csv(&path)?;
    assert_eq!(back.points(), augmented.points());
    println!(
        "wrote and re-read {} points at {} (bit-exact)",
        back.len(),
        path.display()
    );
    Ok(())
}
