//! Estimate the non-explicit constants of the 3D polymonotonicity bound:
//! the sextic monotonicity gap `c**`, the derived gap constant
//! `c' = c**/2`, and the admissible ratio `c* = c**/(2 C*)` that bounds
//! `d/e` (here `beta/e`) for the hat family.
//!
//! ```sh
//! cargo run --release --example estimate_3d_constants
//! ```

use ddfe::certify::{check_polymonotone_3d, estimate_cstar_constants};
use ddfe::model::EnergyModel;

fn main() -> Result<(), ddfe::Error> {
    let est = estimate_cstar_constants(1, 20_000);
    println!("estimated constants (seed 1, budget 20000):");
    for (name, value) in &est {
        println!("  {name:<12} = {value:.6}");
    }

    let c_star = est["c_star"].min(3.0);
    let beta_in = 0.9 * c_star;
    let beta_out = 10.0;
    println!("\nadmissible window for hatW3(a=1, e=1, beta): beta < {c_star:.4}");

    for (label, beta) in [("inside", beta_in), ("far outside", beta_out)] {
        let model = EnergyModel::hat_w3(1.0, 1.0, beta)?;
        let cert = check_polymonotone_3d(&model, 100_000, 3, Some(est["c_prime"]))?;
        println!(
            "beta = {beta:.4} ({label}): {:?}, min margin {:.3e}",
            cert.verdict, cert.constants["min_margin"]
        );
    }
    println!(
        "\n(the window is an empirical estimate, and a clean verdict outside it is a statement \
         about the sampled budget, not a proof)"
    );
    Ok(())
}
