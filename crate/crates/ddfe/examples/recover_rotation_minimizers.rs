//! Multi-start energy minimization of the hat families: every run must end
//! on SO(n) at the closed-form minimum value.
//!
//! ```sh
//! cargo run --release --example recover_rotation_minimizers
//! ```

use ddfe::model::EnergyModel;
use ddfe::rng::Rng;
use ddfe::tensor::{polar_rotation_part, Mat};

fn random_start(n: usize, rng: &mut Rng) -> Mat {
    let mut m = Mat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, rng.normal());
        }
    }
    let target = rng.uniform_in(0.05, 3.0);
    m.scale(target / m.norm())
}

fn main() -> Result<(), ddfe::Error> {
    let mut rng = Rng::new(42);
    for (label, model) in [
        ("hatW2(a=0.25, beta=0.4)", EnergyModel::hat_w2(0.25, 0.4)?),
        ("hatW3(a=1, e=1, beta=0.5)", EnergyModel::hat_w3(1.0, 1.0, 0.5)?),
    ] {
        let n = model.n();
        let wmin = model.min_energy().unwrap();
        let mut worst_gap = 0.0f64;
        let mut worst_ortho = 0.0f64;
        for _ in 0..100 {
            let start = random_start(n, &mut rng);
            let (xi, w) = model.minimize_energy(&start, 400);
            worst_gap = worst_gap.max((w - wmin).abs());
            let ortho = xi.transpose().matmul(&xi).sub(&Mat::identity(n)).norm();
            worst_ortho = worst_ortho.max(ortho);
        }
        println!("{label}: closed-form minimum {wmin}");
        println!(
            "  100 starts -> worst energy gap {worst_gap:.2e}, worst |xi^T xi - I| {worst_ortho:.2e}"
        );

        // The terminal point of one more run, shown explicitly.
        let (xi, w) = model.minimize_energy(&random_start(n, &mut rng), 400);
        let r = polar_rotation_part(&xi)?;
        println!(
            "  sample terminal point: W = {w:.12}, distance to its rotation factor {:.2e}\n",
            xi.sub(&r).norm()
        );
    }
    Ok(())
}
