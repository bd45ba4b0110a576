//! Inspect the homotopy path itself: trace a model, print waypoints, and
//! show how the deformation parameter, residual and steplength evolve.
//!
//! The same data can be produced from the command line with
//! `walras trace-dump --builtin ex2 --trace-csv path.csv`.
//!
//! ```sh
//! cargo run --example trace_csv
//! ```

use nalgebra::DVector;
use walras::builtins::Builtin;
use walras::economy::{compile, Normalization};
use walras::ncp::HomotopyPoint;
use walras::tracer::{trace, TraceConfig, TraceStatus};

fn main() {
    let model = Builtin::Ex2.model();
    let problem = compile(&model.economy, Normalization::None);
    let n = model.economy.dimension();
    let start = HomotopyPoint::start(
        DVector::from_element(n, 1.0),
        DVector::from_element(n, 1.0),
    );

    let cfg = TraceConfig::default();
    let result = trace(&problem, &start, &cfg).expect("valid start point");
    assert_eq!(result.status, TraceStatus::Converged);

    println!("accepted predictor-corrector cycles: {}", result.path_log.len());
    println!("total corrector iterations: {}", result.corrector_steps_total);
    println!();
    println!("{:>4}  {:>12}  {:>10}  {:>10}", "step", "lambda", "residual", "steplength");
    for (i, record) in result.path_log.iter().enumerate() {
        println!(
            "{:>4}  {:>12.6e}  {:>10.3e}  {:>10.4}",
            i + 1,
            record.lambda,
            record.residual,
            record.steplength
        );
    }
    println!();
    println!(
        "endpoint prices (normalized): {:?}",
        walras::economy::normalize_prices(&result.endpoint.x)
            .iter()
            .map(|p| format!("{p:.4}"))
            .collect::<Vec<_>>()
    );

    // the same path row-by-row as CSV, as written by the CLI:
    // step,lambda,residual,steplength,x1,...,x2n
    let csv_head: Vec<String> = result
        .path_log
        .iter()
        .take(3)
        .enumerate()
        .map(|(i, r)| {
            let coords: Vec<String> = r
                .point
                .x
                .iter()
                .chain(r.point.y.iter())
                .take(4)
                .map(|v| format!("{v:.4}"))
                .collect();
            format!("{},{:.4},{:.1e},{:.4},{},...", i + 1, r.lambda, r.residual, r.steplength, coords.join(","))
        })
        .collect();
    println!();
    println!("first CSV rows (truncated):");
    for row in csv_head {
        println!("  {row}");
    }
}
