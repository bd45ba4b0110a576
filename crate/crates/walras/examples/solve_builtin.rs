//! Solve a bundled economy from several starts and watch different starts
//! reach different equilibria.
//!
//! ```sh
//! cargo run --example solve_builtin
//! ```

use nalgebra::DVector;
use walras::builtins::Builtin;
use walras::economy::{compute_equilibrium, Normalization};
use walras::tracer::TraceConfig;

fn main() {
    let model = Builtin::Ex1.model();
    println!("{}: {}", Builtin::Ex1.name(), Builtin::Ex1.description());
    println!(
        "known equilibria: {}",
        model
            .known_equilibria
            .iter()
            .map(|eq| format!("{} at {:?}", eq.label, eq.prices.as_slice()))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!();

    let cfg = TraceConfig::default();
    let starts = [
        vec![0.01, 0.99],
        vec![0.1, 0.9],
        vec![0.4, 0.6],
        vec![0.5, 0.5],
        vec![1.0, 1.0],
    ];
    for start in starts {
        let start = DVector::from_vec(start);
        let report = compute_equilibrium(&model, &start, &cfg, Normalization::None)
            .expect("ex1 converges from these starts");
        println!(
            "start ({:.2}, {:.2}) -> prices ({:.4}, {:.4}) = {} \
             [{} steps, residual {:.1e}]",
            start[0],
            start[1],
            report.prices[0],
            report.prices[1],
            report
                .matched_known_equilibrium
                .as_deref()
                .unwrap_or("unlisted"),
            report.iterations,
            report.complementarity_residual,
        );
    }
}
