//! Solve a production economy and see why the in-system price
//! normalization is the default for models with activities.
//!
//! The model couples market clearing with activity levels: each activity
//! may run at any nonnegative scale, makes no profit if active, and loses
//! money if idle. Because demand only depends on relative prices, the price
//! scale must be pinned down. `Normalization::ReplaceLastRow` does it inside
//! the system by swapping the last complementarity row for
//! `p1 + ... + pD = 1`; `Normalization::None` leaves the system untouched
//! and rescales afterwards — which works for exchange models, but lets a
//! production path slide into the spurious corner where every price shrinks
//! to zero. The solver certifies every endpoint against the plain system,
//! rejects such corners, and restarts from fresh seeded points until a
//! genuine equilibrium emerges (or the restart budget runs out).
//!
//! ```sh
//! cargo run --example production_economy
//! ```

use nalgebra::{DMatrix, DVector};
use walras::builtins::Builtin;
use walras::economy::{
    compute_equilibrium, Consumer, Economy, EconomyModel, Normalization, ProductionEconomy,
};
use walras::tracer::TraceConfig;

fn main() {
    // a two-good economy with one activity converting good 2 into good 1
    // at a 1:2 rate; the unique equilibrium is p = (1/3, 2/3), y = 4.6
    let consumers = vec![
        Consumer::cobb_douglas(vec![0.6, 0.4], vec![1.0, 8.0]).expect("valid consumer"),
    ];
    let activity_matrix = DMatrix::from_column_slice(2, 1, &[2.0, -1.0]);
    let economy = ProductionEconomy::new(consumers, activity_matrix).expect("valid economy");
    let model = EconomyModel {
        economy: Economy::Production(economy),
        known_equilibria: vec![],
    };

    let cfg = TraceConfig::default();
    let start = DVector::from_element(2 + 1, 1.0);

    let report = compute_equilibrium(&model, &start, &cfg, Normalization::ReplaceLastRow)
        .expect("economy has an equilibrium");
    println!("with the in-system normalization (the production default):");
    println!("  prices: {:?}", report.prices);
    println!("  activity level: {:?}", report.activities.unwrap());
    println!("  residual: {:.3e}", report.complementarity_residual);
    println!();

    println!("without it, the first path collapses the price scale; the solver");
    println!("rejects that corner and restarts until a real equilibrium appears:");
    match compute_equilibrium(&model, &start, &cfg, Normalization::None) {
        Ok(r) => println!(
            "  prices {:?} after {} restart(s), residual {:.3e}",
            r.prices, r.restarts, r.complementarity_residual
        ),
        Err(e) => println!("  gave up: {e}"),
    }
    println!();

    // the larger bundled production economy has several equilibria, each
    // running a different set of activities
    let model = Builtin::Ex3.model();
    println!("{}: {}", Builtin::Ex3.name(), Builtin::Ex3.description());
    let start = DVector::from_element(model.economy.dimension(), 1.0);
    let report = compute_equilibrium(&model, &start, &cfg, Normalization::ReplaceLastRow)
        .expect("ex3 converges from ones");
    println!(
        "  reached {} with prices {:?}",
        report.matched_known_equilibrium.as_deref().unwrap_or("an unlisted equilibrium"),
        report
            .prices
            .iter()
            .map(|p| format!("{p:.4}"))
            .collect::<Vec<_>>()
    );
    let active: Vec<String> = report
        .activities
        .unwrap()
        .iter()
        .enumerate()
        .filter(|(_, y)| **y > 1e-6)
        .map(|(j, y)| format!("activity {} at level {y:.4}", j + 1))
        .collect();
    println!("  active plan: {}", active.join(", "));
    for warning in &report.warnings {
        println!("  note: {warning}");
    }
}
