//! Build an exchange economy in code, inspect its excess demand, and solve
//! for the market-clearing prices.
//!
//! ```sh
//! cargo run --example custom_exchange
//! ```

use nalgebra::DVector;
use walras::economy::{
    compute_equilibrium, Consumer, Economy, EconomyModel, ExchangeEconomy, Normalization,
};
use walras::tracer::TraceConfig;

fn main() {
    // three consumers with different demand families trading three goods
    let consumers = vec![
        Consumer::cobb_douglas(vec![0.5, 0.3, 0.2], vec![4.0, 0.0, 1.0])
            .expect("valid consumer"),
        Consumer::ces_a(vec![1.0, 2.0, 4.0], vec![0.0, 3.0, 2.0]).expect("valid consumer"),
        Consumer::ces_b(vec![2.0, 1.0, 1.0], 1.5, vec![1.0, 2.0, 0.5])
            .expect("valid consumer"),
    ];
    let economy = ExchangeEconomy::new(consumers).expect("valid economy");

    // excess demand at an arbitrary price vector: positive entries mean the
    // good is over-demanded at these prices
    let probe = DVector::from_vec(vec![0.4, 0.3, 0.3]);
    let xi = economy.excess_demand(&probe).expect("positive prices");
    println!("excess demand at {:?}: {:?}", probe.as_slice(), xi.as_slice());
    println!("value of excess demand p'xi = {:.3e} (zero by the budget identity)", probe.dot(&xi));
    println!();

    let model = EconomyModel {
        economy: Economy::Exchange(economy),
        known_equilibria: vec![],
    };
    let start = DVector::from_element(3, 1.0);
    let report = compute_equilibrium(&model, &start, &TraceConfig::default(), Normalization::None)
        .expect("economy has an equilibrium");

    println!("equilibrium prices (unit simplex):");
    for (i, p) in report.prices.iter().enumerate() {
        println!("  good {}: {p:.6}", i + 1);
    }
    println!("complementarity residual: {:.3e}", report.complementarity_residual);
    println!("predictor steps: {}", report.iterations);
}
