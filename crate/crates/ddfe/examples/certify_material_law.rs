//! Run the full certification battery on a 2D material law.
//!
//! ```sh
//! cargo run --release --example certify_material_law
//! ```
//!
//! Each check is a seeded falsification search: it either finds a concrete
//! counterexample (verdict `violated`, with the witness printed) or reports
//! `no-violation-found` for the sampled budget.

use ddfe::certify::{
    check_coercivity, check_growth, check_polymonotone_2d, check_quasimonotone, QuasiGap,
};
use ddfe::model::EnergyModel;
use ddfe::tensor::Mat;

fn main() -> Result<(), ddfe::Error> {
    let model = EnergyModel::hat_w2(0.25, 0.4)?;
    let (b, d) = model.g().growth_bounds();
    println!("model: hatW2(a = 0.25, beta = 0.4)  g-growth bounds b = {b}, d = {d}");
    println!("parameter windows: {:?}\n", model.windows());

    let budget = 200_000;
    let seed = 1;

    let coercive = check_coercivity(|x| model.stress(x), 2, 4.0, budget, seed)?;
    println!(
        "coercivity (p=4):        {:?}  c_F = {:.4}, c_P = {:.4}, c = {:.4}, min margin {:.3e}",
        coercive.verdict,
        coercive.constants["c_F"],
        coercive.constants["c_P"],
        coercive.constants["c"],
        coercive.constants["min_margin"],
    );

    let poly = check_polymonotone_2d(&model, budget, seed)?;
    println!(
        "polymonotonicity (2D):   {:?}  min margin {:.3e}",
        poly.verdict, poly.constants["min_margin"]
    );

    let gap = QuasiGap::for_model(&model, None);
    let quasi = check_quasimonotone(|x| model.stress(x), 2, gap, 16, 500, seed)?;
    println!(
        "quasimonotonicity:       {:?}  min margin {:.3e} over 500 test fields",
        quasi.verdict, quasi.constants["min_margin"]
    );

    let growth = check_growth(|x| model.stress(x), 2, 4.0, budget, seed)?;
    println!(
        "growth (p=4):            {:?}  constant estimate c = {:.4}",
        growth.verdict, growth.constants["c"]
    );

    // A law that cannot be coercive: T(xi) = -xi pushes against the
    // deformation at every point.
    let bad = check_coercivity(|x: &Mat| x.scale(-1.0), 2, 2.0, 50_000, seed)?;
    println!("\ncounterexample check, T = -id:");
    println!("coercivity (p=2):        {:?}", bad.verdict);
    if let Some(w) = &bad.witness {
        println!(
            "witness at |xi| = {:.2}: lhs = {:.3e} > rhs = {:.3e}",
            w.points[0].to_mat().norm(),
            w.lhs,
            w.rhs
        );
    }
    Ok(())
}
