//! Brute-force reference solvers.
//!
//! These are deliberately independent of the path tracer: a support
//! enumerator for linear complementarity problems and a plain damped Newton
//! iteration for square systems. They exist to generate ground truth and to
//! cross-check the homotopy solver, so they share no code with it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ncp::{DomainGuard, NcpProblem};

/// Largest LCP dimension the enumerator accepts (2^n supports are visited).
pub const LCP_ENUMERATE_MAX_DIM: usize = 14;

/// Feasibility slack allowed when accepting a candidate support solution.
const LCP_FEASIBILITY_TOL: f64 = 1e-10;

/// Two solutions closer than this in the infinity norm count as one.
const LCP_DISTINCT_TOL: f64 = 1e-8;

/// Residual target of [`newton_square_solve`].
const NEWTON_TOL: f64 = 1e-10;

/// Iteration budget of [`newton_square_solve`].
const NEWTON_MAX_ITER: usize = 100;

/// A linear complementarity problem `w = M x + q, x >= 0, w >= 0, x.w = 0`.
#[derive(Debug, Clone)]
pub struct LcpInstance {
    pub m: DMatrix<f64>,
    pub q: DVector<f64>,
}

impl LcpInstance {
    pub fn new(m: DMatrix<f64>, q: DVector<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() != q.len() {
            return Err(Error::InvalidInput(format!(
                "LCP dimensions do not match: M is {}x{}, q has length {}",
                m.nrows(),
                m.ncols(),
                q.len()
            )));
        }
        if q.len() > LCP_ENUMERATE_MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "support enumeration is limited to n <= {LCP_ENUMERATE_MAX_DIM}"
            )));
        }
        Ok(LcpInstance { m, q })
    }

    pub fn dimension(&self) -> usize {
        self.q.len()
    }

    /// Views the LCP as an [`NcpProblem`] with `f(x) = M x + q`.
    pub fn to_ncp(&self) -> NcpProblem {
        let m = self.m.clone();
        let q = self.q.clone();
        let jac = self.m.clone();
        NcpProblem::new(self.dimension(), move |x: &DVector<f64>| &m * x + &q)
            .with_jacobian(move |_: &DVector<f64>| jac.clone())
            .with_domain(DomainGuard::Unrestricted)
    }
}

/// Finds every solution of a small LCP by trying all `2^n` active supports.
///
/// For each support `S` the linear system `M[S,S] x_S = -q_S` is solved,
/// zeros are substituted elsewhere, and the candidate is kept when both `x`
/// and `M x + q` are nonnegative up to a `1e-10` slack. Kept solutions are
/// clamped to be exactly nonnegative and deduplicated at `1e-8`.
pub fn lcp_enumerate(instance: &LcpInstance) -> Vec<DVector<f64>> {
    let n = instance.dimension();
    let mut solutions: Vec<DVector<f64>> = Vec::new();

    for support in 0u32..(1u32 << n) {
        let active: Vec<usize> = (0..n).filter(|i| support & (1 << i) != 0).collect();
        let mut x = DVector::zeros(n);

        if !active.is_empty() {
            let k = active.len();
            let mut sub = DMatrix::zeros(k, k);
            let mut rhs = DVector::zeros(k);
            for (r, &i) in active.iter().enumerate() {
                rhs[r] = -instance.q[i];
                for (c, &j) in active.iter().enumerate() {
                    sub[(r, c)] = instance.m[(i, j)];
                }
            }
            let Some(xs) = sub.lu().solve(&rhs) else {
                continue; // singular principal submatrix: no candidate here
            };
            for (r, &i) in active.iter().enumerate() {
                x[i] = xs[r];
            }
        }

        if x.iter().any(|&v| v < -LCP_FEASIBILITY_TOL) {
            continue;
        }
        let w = &instance.m * &x + &instance.q;
        if w.iter().any(|&v| v < -LCP_FEASIBILITY_TOL) {
            continue;
        }

        let clamped = x.map(|v| v.max(0.0));
        let duplicate = solutions
            .iter()
            .any(|s| (s - &clamped).amax() <= LCP_DISTINCT_TOL);
        if !duplicate {
            solutions.push(clamped);
        }
    }

    solutions
}

/// Damped Newton on a square system `g(x) = 0`.
///
/// Full steps are halved until the infinity norm of `g` decreases; iteration
/// stops when the norm drops to `1e-10` or after 100 steps. Affine systems
/// finish in a single undamped step.
pub fn newton_square_solve<G, J>(g: G, jac: J, x0: &DVector<f64>) -> Result<DVector<f64>>
where
    G: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let mut x = x0.clone();
    let mut gx = g(&x);
    let mut norm = inf_norm_checked(&gx)?;

    for _ in 0..NEWTON_MAX_ITER {
        if norm <= NEWTON_TOL {
            return Ok(x);
        }
        let j = jac(&x);
        let step = j.lu().solve(&gx).ok_or(Error::SingularJacobian)?;

        let mut alpha = 1.0;
        let mut improved = false;
        while alpha >= 1e-10 {
            let trial = &x - alpha * &step;
            let gt = g(&trial);
            let trial_norm = gt.amax();
            if trial_norm.is_finite() && trial_norm < norm {
                x = trial;
                gx = gt;
                norm = trial_norm;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            return Err(Error::NoConvergence {
                attempts: 1,
                best_residual: norm,
            });
        }
    }

    if norm <= NEWTON_TOL {
        Ok(x)
    } else {
        Err(Error::NoConvergence {
            attempts: 1,
            best_residual: norm,
        })
    }
}

fn inf_norm_checked(v: &DVector<f64>) -> Result<f64> {
    for (index, value) in v.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
    }
    Ok(v.amax())
}
