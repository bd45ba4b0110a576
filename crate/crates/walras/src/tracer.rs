//! Predictor-corrector tracing of the homotopy path.
//!
//! Starting from `(x⁰, y⁰, λ=1)` the tracer repeatedly
//!
//! 1. computes a unit tangent of the homotopy Jacobian, oriented along the
//!    direction of travel (initially towards decreasing `λ`),
//! 2. takes an Euler step of the current length `h`,
//! 3. pulls the prediction back onto the path with Newton iterations that use
//!    the Moore-Penrose pseudoinverse (minimum-norm corrections over the full
//!    `(x, y, λ)` vector), and
//! 4. grows or shrinks `h` based on how hard the corrector had to work.
//!
//! The trace stops once `λ` falls below a threshold; an optional Newton
//! polish on the `λ = 0` square system then sharpens the endpoint to full
//! precision. [`solve_ncp`] wraps the whole procedure with deterministic
//! random restarts.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ncp::{HomotopyPoint, NcpProblem};

/// Pivots smaller than this, relative to the largest, count as rank loss.
const RANK_TOL: f64 = 1e-12;

/// Iterates whose magnitude passes this bound are declared divergent.
const DIVERGENCE_BOUND: f64 = 1e12;

/// Knobs of the path tracer. The defaults reproduce the reference settings
/// the solver was tuned with.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    /// Stop once `λ` falls to or below this value.
    pub eps_lambda: f64,
    /// Corrector target: accept a point when `‖H‖∞` drops below this.
    pub eps_residual: f64,
    /// Initial steplength.
    pub h0: f64,
    /// Steplengths below this stall the trace.
    pub h_min: f64,
    /// Steplengths never grow beyond this.
    pub h_max: f64,
    /// Predictor-step budget per trace attempt.
    pub max_iterations: usize,
    /// Newton iteration budget per corrector run (and per polish).
    pub corrector_max: usize,
    /// Extra random starts [`solve_ncp`] may try after the first failure.
    pub restart_max: usize,
    /// Seed for the restart draws.
    pub rng_seed: u64,
    /// Run the `λ = 0` Newton polish after convergence.
    pub final_polish: bool,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            eps_lambda: 1e-6,
            eps_residual: 1e-5,
            h0: 0.3,
            h_min: 1e-8,
            h_max: 0.5,
            max_iterations: 1000,
            corrector_max: 10,
            restart_max: 5,
            rng_seed: 0,
            final_polish: true,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        let positive_finite = |v: f64| v.is_finite() && v > 0.0;
        if !positive_finite(self.eps_lambda) || !positive_finite(self.eps_residual) {
            return Err(Error::InvalidConfig(
                "tolerances must be strictly positive".into(),
            ));
        }
        if !positive_finite(self.h_min) || !positive_finite(self.h0) || !positive_finite(self.h_max)
        {
            return Err(Error::InvalidConfig(
                "steplengths must be strictly positive".into(),
            ));
        }
        if !(self.h_min <= self.h0 && self.h0 <= self.h_max && self.h_max < 1.0) {
            return Err(Error::InvalidConfig(
                "steplengths must satisfy 0 < h_min <= h0 <= h_max < 1".into(),
            ));
        }
        if self.max_iterations == 0 || self.corrector_max == 0 {
            return Err(Error::InvalidConfig(
                "iteration budgets must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// How a trace attempt ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    /// `λ` reached its threshold; the endpoint approximates an NCP solution.
    Converged,
    /// The predictor-step budget ran out first.
    MaxIterations,
    /// Step halving pushed `h` below `h_min`.
    Stalled,
    /// An iterate left every reasonable bound.
    Diverged,
}

/// One accepted predictor-corrector cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub lambda: f64,
    /// `‖H‖∞` at the accepted point.
    pub residual: f64,
    /// Length of the Euler step that led here.
    pub steplength: f64,
    pub point: HomotopyPoint,
    /// Unit tangent the predictor used for this step.
    pub tangent: DVector<f64>,
}

/// Outcome of a single trace attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceResult {
    pub status: TraceStatus,
    pub endpoint: HomotopyPoint,
    /// Predictor steps attempted, including rejected ones.
    pub predictor_steps: usize,
    /// Newton iterations spent in accepted corrector runs.
    pub corrector_steps_total: usize,
    /// Restarts consumed before this attempt (filled in by [`solve_ncp`]).
    pub restarts_used: usize,
    pub path_log: Vec<PathRecord>,
}

/// An NCP solution found by [`solve_ncp`].
#[derive(Debug, Clone, PartialEq)]
pub struct NcpSolution {
    pub x: DVector<f64>,
    /// Final slack vector, approximately `f(x)` and complementary to `x`.
    pub y: DVector<f64>,
    /// `‖min(x, f(x))‖∞` at the endpoint.
    pub residual: f64,
    pub restarts_used: usize,
    pub trace: TraceResult,
}

/// Minimum-norm solution of the underdetermined system `A z = b`
/// (`A` of size `m x k`, `m <= k`, full row rank).
///
/// Computed through the QR factorization of `Aᵀ`, which realizes the
/// Moore-Penrose pseudoinverse `Aᵀ (A Aᵀ)⁻¹` without forming normal
/// equations.
pub fn least_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, k) = a.shape();
    if m > k || b.len() != m {
        return Err(Error::InvalidInput(format!(
            "least-norm solve needs a wide matrix and a matching rhs, got {}x{} and {}",
            m,
            k,
            b.len()
        )));
    }
    let qr = a.transpose().qr();
    let r = qr.r();
    let mut max_pivot = 0.0f64;
    let mut min_pivot = f64::INFINITY;
    for i in 0..m {
        let p = r[(i, i)].abs();
        max_pivot = max_pivot.max(p);
        min_pivot = min_pivot.min(p);
    }
    if !(max_pivot > 0.0) || min_pivot < RANK_TOL * max_pivot {
        return Err(Error::SingularJacobian);
    }
    let w = r
        .transpose()
        .solve_lower_triangular(b)
        .ok_or(Error::SingularJacobian)?;
    Ok(qr.q() * w)
}

/// Unit kernel vector of a Jacobian with one-dimensional nullspace, oriented
/// along the direction of travel.
///
/// The kernel is extracted by bordering `J` with one extra row — the previous
/// tangent when available, otherwise the negative `λ` direction — and solving
/// the square system. Either choice fixes the orientation: with a previous
/// tangent the new one has positive dot product with it; without one the
/// `λ`-component comes out negative, pointing the first step down the path.
pub fn tangent(j: &DMatrix<f64>, previous: Option<&DVector<f64>>) -> Result<DVector<f64>> {
    let (m, k) = j.shape();
    if k != m + 1 {
        return Err(Error::InvalidInput(format!(
            "tangent expects an m x (m+1) Jacobian, got {m}x{k}"
        )));
    }
    if let Some(prev) = previous {
        if prev.len() != k {
            return Err(Error::InvalidInput(
                "previous tangent has mismatched length".into(),
            ));
        }
    }

    let mut bordered = DMatrix::zeros(k, k);
    bordered.rows_mut(0, m).copy_from(j);
    match previous {
        Some(prev) => bordered.row_mut(m).copy_from(&prev.transpose()),
        None => bordered[(m, k - 1)] = -1.0,
    }

    let lu = bordered.lu();
    let u = lu.u();
    let mut max_pivot = 0.0f64;
    let mut min_pivot = f64::INFINITY;
    for i in 0..k {
        let p = u[(i, i)].abs();
        max_pivot = max_pivot.max(p);
        min_pivot = min_pivot.min(p);
    }
    if !(max_pivot > 0.0) || min_pivot < RANK_TOL * max_pivot {
        return Err(Error::SingularJacobian);
    }

    let mut rhs = DVector::zeros(k);
    rhs[k - 1] = 1.0;
    let t = lu.solve(&rhs).ok_or(Error::SingularJacobian)?;
    let norm = t.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::SingularJacobian);
    }
    Ok(t / norm)
}

/// Euler predictor: `u + h t` in the flat `(x, y, λ)` coordinates.
pub fn predictor(u: &HomotopyPoint, t: &DVector<f64>, h: f64) -> HomotopyPoint {
    let flat = u.to_flat() + t * h;
    HomotopyPoint::from_flat(u.dimension(), &flat)
}

/// A successfully corrected point.
#[derive(Debug, Clone, PartialEq)]
pub struct Corrected {
    pub point: HomotopyPoint,
    /// Newton iterations spent.
    pub steps: usize,
    /// `‖H‖∞` at the accepted point.
    pub residual_norm: f64,
}

/// Newton iteration pulling a predicted point back onto the path.
///
/// Each step subtracts the minimum-norm solution of `H'(w) d = H(w)` from the
/// full `(x, y, λ)` vector. Fails when the iteration budget is exhausted, the
/// residual grows twice in a row, or an iterate leaves the domain of `f`.
pub fn corrector(
    problem: &NcpProblem,
    predicted: &HomotopyPoint,
    start: &HomotopyPoint,
    cfg: &TraceConfig,
) -> Result<Corrected> {
    let n = problem.dimension();
    let mut w = predicted.clone();
    let mut residual = problem.homotopy_residual(&w, start)?;
    let mut norm = residual.amax();
    let mut consecutive_increases = 0usize;

    for steps in 0..=cfg.corrector_max {
        if norm <= cfg.eps_residual {
            return Ok(Corrected {
                point: w,
                steps,
                residual_norm: norm,
            });
        }
        if steps == cfg.corrector_max {
            break;
        }
        let jac = problem.homotopy_jacobian(&w, start)?;
        let delta = least_norm_solve(&jac, &residual)?;
        let flat = w.to_flat() - delta;
        w = HomotopyPoint::from_flat(n, &flat);
        residual = problem.homotopy_residual(&w, start)?;
        let new_norm = residual.amax();
        if new_norm >= norm {
            consecutive_increases += 1;
            if consecutive_increases >= 2 {
                return Err(Error::CorrectorFailure("residual grew twice in a row"));
            }
        } else {
            consecutive_increases = 0;
        }
        norm = new_norm;
    }

    Err(Error::CorrectorFailure("iteration budget exhausted"))
}

/// Steplength update: halve after a failed cycle, double (capped) after an
/// easy one, halve (floored) after a laborious one, otherwise keep.
pub fn adapt_steplength(h: f64, corrector_steps: usize, failed: bool, cfg: &TraceConfig) -> f64 {
    if failed {
        // deliberately not floored: repeated failures drive h below h_min,
        // which is how the trace detects a stall
        return 0.5 * h;
    }
    if corrector_steps <= 2 {
        (2.0 * h).min(cfg.h_max)
    } else if corrector_steps >= 5 {
        (0.5 * h).max(cfg.h_min)
    } else {
        h
    }
}

/// Traces the homotopy path from `start` (`λ = 1`) towards `λ = 0`.
///
/// Never fails on numerical trouble — evaluation errors, singular Jacobians
/// and corrector breakdowns all shrink the steplength, and the final status
/// reports how the attempt ended. Errors are reserved for invalid
/// configurations and start points.
pub fn trace(problem: &NcpProblem, start: &HomotopyPoint, cfg: &TraceConfig) -> Result<TraceResult> {
    cfg.validate()?;
    let n = problem.dimension();
    if start.x.len() != n || start.y.len() != n {
        return Err(Error::InvalidInput(format!(
            "start point dimension does not match the problem (n = {n})"
        )));
    }
    if start.lambda != 1.0 {
        return Err(Error::InvalidInput("a trace must start at lambda = 1".into()));
    }
    if let Some(bad) = start.x.iter().chain(start.y.iter()).position(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "start coordinates must be strictly positive (offender at flat index {bad})"
        )));
    }

    let lambda_index = 2 * n;
    let mut u = start.clone();
    let mut h = cfg.h0;
    let mut previous_tangent: Option<DVector<f64>> = None;
    let mut predictor_steps = 0usize;
    let mut corrector_steps_total = 0usize;
    let mut path_log = Vec::new();

    let status = loop {
        if u.lambda <= cfg.eps_lambda {
            break TraceStatus::Converged;
        }
        if predictor_steps >= cfg.max_iterations {
            break TraceStatus::MaxIterations;
        }
        if h < cfg.h_min {
            break TraceStatus::Stalled;
        }
        predictor_steps += 1;

        let step_failed = |h: f64| adapt_steplength(h, 0, true, cfg);

        let jac = match problem.homotopy_jacobian(&u, start) {
            Ok(j) => j,
            Err(_) => {
                h = step_failed(h);
                continue;
            }
        };
        let t = match tangent(&jac, previous_tangent.as_ref()) {
            Ok(t) => t,
            Err(_) => {
                h = step_failed(h);
                continue;
            }
        };

        // Cut the step short rather than predicting outside λ ∈ [0, 1]; an
        // undershoot aims just below the stopping threshold.
        let mut h_step = h;
        let predicted_lambda = u.lambda + h * t[lambda_index];
        if predicted_lambda < 0.0 {
            h_step = (0.5 * cfg.eps_lambda - u.lambda) / t[lambda_index];
        } else if predicted_lambda > 1.0 {
            h_step = (1.0 - u.lambda) / t[lambda_index];
        }
        if !(h_step > 0.0) || !h_step.is_finite() {
            h = step_failed(h);
            continue;
        }

        let v = predictor(&u, &t, h_step);
        match corrector(problem, &v, start, cfg) {
            Ok(corrected) => {
                let w = corrected.point;
                let in_bounds = (0.0..=1.0).contains(&w.lambda);
                let positive = w.lambda <= cfg.eps_lambda
                    || w.x.iter().chain(w.y.iter()).all(|&v| v > 0.0);
                if !in_bounds || !positive {
                    h = step_failed(h);
                    continue;
                }
                if w.to_flat().amax() > DIVERGENCE_BOUND {
                    u = w;
                    break TraceStatus::Diverged;
                }
                corrector_steps_total += corrected.steps;
                path_log.push(PathRecord {
                    lambda: w.lambda,
                    residual: corrected.residual_norm,
                    steplength: h_step,
                    point: w.clone(),
                    tangent: t.clone(),
                });
                u = w;
                previous_tangent = Some(t);
                h = adapt_steplength(h, corrected.steps, false, cfg);
            }
            Err(_) => {
                h = step_failed(h);
            }
        }
    };

    let mut endpoint = u;
    if status == TraceStatus::Converged && cfg.final_polish {
        if let Some((x, y, norm)) = polish_square(problem, &endpoint.x, &endpoint.y, cfg) {
            if norm <= cfg.eps_residual {
                endpoint = HomotopyPoint::new(x, y, 0.0);
            }
        }
    }

    Ok(TraceResult {
        status,
        endpoint,
        predictor_steps,
        corrector_steps_total,
        restarts_used: 0,
        path_log,
    })
}

/// Damped Newton on the square system `F(x, y) = 0` at `λ = 0`. Steps are
/// only accepted while `‖F‖∞` strictly decreases, so the endpoint can only
/// improve; returns the best point reached.
fn polish_square(
    problem: &NcpProblem,
    x: &DVector<f64>,
    y: &DVector<f64>,
    cfg: &TraceConfig,
) -> Option<(DVector<f64>, DVector<f64>, f64)> {
    let n = problem.dimension();
    let mut x = x.clone();
    let mut y = y.clone();
    let mut residual = problem.square_residual(&x, &y).ok()?;
    let mut norm = residual.amax();

    for _ in 0..cfg.corrector_max {
        if norm <= 1e-14 {
            break;
        }
        let Ok(jac) = problem.square_jacobian(&x, &y) else {
            break;
        };
        let Some(step) = jac.lu().solve(&residual) else {
            break;
        };
        let dx = step.rows(0, n).into_owned();
        let dy = step.rows(n, n).into_owned();

        let mut alpha = 1.0f64;
        let mut accepted = false;
        while alpha >= 1e-8 {
            let xt = &x - alpha * &dx;
            let yt = &y - alpha * &dy;
            if problem.domain().check(&xt).is_ok() {
                if let Ok(rt) = problem.square_residual(&xt, &yt) {
                    let nt = rt.amax();
                    if nt < norm {
                        x = xt;
                        y = yt;
                        residual = rt;
                        norm = nt;
                        accepted = true;
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    Some((x, y, norm))
}

/// Solves an NCP by tracing the homotopy, restarting from fresh random
/// points when an attempt fails.
///
/// The first attempt anchors the homotopy at `(x0, y0)`; each restart draws
/// both vectors coordinate-wise from `U[0.1, 2]` using a ChaCha stream seeded
/// with `cfg.rng_seed`, so results are reproducible bit for bit.
pub fn solve_ncp(
    problem: &NcpProblem,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    cfg: &TraceConfig,
) -> Result<NcpSolution> {
    solve_ncp_with(problem, x0, y0, cfg, |_| true)
}

/// Like [`solve_ncp`], but hands every candidate solution to `accept` and
/// returns only approved ones; a rejected candidate counts as a failed
/// attempt and triggers the same seeded restart machinery.
///
/// This lets callers impose validity conditions the complementarity system
/// itself cannot express — for example, certifying an endpoint against an
/// unnormalized variant of the problem — without duplicating the restart
/// loop.
pub fn solve_ncp_with(
    problem: &NcpProblem,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    cfg: &TraceConfig,
    accept: impl Fn(&NcpSolution) -> bool,
) -> Result<NcpSolution> {
    cfg.validate()?;
    let n = problem.dimension();
    if x0.len() != n || y0.len() != n {
        return Err(Error::InvalidInput(format!(
            "start vectors must have length {n}"
        )));
    }
    if let Some(bad) = x0.iter().chain(y0.iter()).position(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "start coordinates must be strictly positive (offender at flat index {bad})"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut best_residual = f64::INFINITY;

    for attempt in 0..=cfg.restart_max {
        let start = if attempt == 0 {
            HomotopyPoint::start(x0.clone(), y0.clone())
        } else {
            let draw = |rng: &mut ChaCha8Rng| {
                DVector::from_fn(n, |_, _| rng.random_range(0.1..=2.0))
            };
            let x = draw(&mut rng);
            let y = draw(&mut rng);
            HomotopyPoint::start(x, y)
        };

        let mut result = trace(problem, &start, cfg)?;
        result.restarts_used = attempt;

        let endpoint_residual = problem
            .complementarity_residual(&result.endpoint.x)
            .unwrap_or(f64::INFINITY);
        best_residual = best_residual.min(endpoint_residual);

        if result.status == TraceStatus::Converged {
            let candidate = NcpSolution {
                x: result.endpoint.x.clone(),
                y: result.endpoint.y.clone(),
                residual: endpoint_residual,
                restarts_used: attempt,
                trace: result,
            };
            if accept(&candidate) {
                return Ok(candidate);
            }
        }
    }

    Err(Error::NoConvergence {
        attempts: cfg.restart_max + 1,
        best_residual,
    })
}
