//! Use the solver on a raw complementarity problem — no economy involved.
//!
//! The problem: find `x >= 0` with `f(x) >= 0` and `x'f(x) = 0`. Supplying
//! an analytic Jacobian is optional; without one the solver falls back to
//! finite differences.
//!
//! ```sh
//! cargo run --example custom_ncp
//! ```

use nalgebra::{DMatrix, DVector};
use walras::ncp::{DomainGuard, NcpProblem};
use walras::oracle::{lcp_enumerate, LcpInstance};
use walras::tracer::{solve_ncp, TraceConfig};

fn main() {
    // a mildly nonlinear complementarity problem in three variables
    let problem = NcpProblem::new(3, |x: &DVector<f64>| {
        DVector::from_vec(vec![
            x[0] + x[1] * x[1] - 3.0,
            x[1] + x[0] - 1.0,
            x[2] + 2.0,
        ])
    })
    .with_domain(DomainGuard::Unrestricted);

    let ones = DVector::from_element(3, 1.0);
    let cfg = TraceConfig::default();
    let solution = solve_ncp(&problem, &ones, &ones, &cfg).expect("problem is solvable");
    println!("nonlinear problem:");
    println!("  x = {:?}", solution.x.as_slice());
    println!("  f(x) = {:?}", problem.eval_f(&solution.x).unwrap().as_slice());
    println!("  complementarity residual = {:.3e}", solution.residual);
    println!("  (x3 = 0 binds because f3 = x3 + 2 can never vanish)");
    println!();

    // a linear complementarity problem, cross-checked against exhaustive
    // support enumeration
    let lcp = LcpInstance::new(
        DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]),
        DVector::from_vec(vec![-5.0, -6.0]),
    )
    .expect("well-formed LCP");
    let problem = lcp.to_ncp();
    let ones = DVector::from_element(2, 1.0);
    let solution = solve_ncp(&problem, &ones, &ones, &cfg).expect("LCP is solvable");
    println!("linear problem (M x + q):");
    println!("  homotopy solution: {:?}", solution.x.as_slice());
    println!(
        "  enumeration oracle: {:?}",
        lcp_enumerate(&lcp)
            .iter()
            .map(|s| s.as_slice().to_vec())
            .collect::<Vec<_>>()
    );
}
