//! Nonlinear complementarity problems and the homotopy built on top of them.
//!
//! A problem asks for `x >= 0` with `f(x) >= 0` and `x . f(x) = 0`. We work
//! with the equivalent square system
//!
//! ```text
//! F(x, y) = (x ∘ y, y - f(x)) = 0
//! ```
//!
//! and deform it towards a trivial system through the one-parameter family
//!
//! ```text
//! H(x, y, λ) = (x ∘ y - λ x⁰ ∘ y⁰,  y - (1-λ) f(x) - λ y⁰)
//! ```
//!
//! which vanishes at the chosen start `(x⁰, y⁰)` when `λ = 1` and reduces to
//! `F` when `λ = 0`. Both `x` and `y` stay strictly positive along the path
//! for `λ > 0` because the first block pins every product `x_i y_i` to
//! `λ x⁰_i y⁰_i`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative step used by [`fd_jacobian`].
const FD_STEP: f64 = 1e-7;

/// Where the map `f` of a problem may be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainGuard {
    /// Every coordinate strictly positive. The default, and the right guard
    /// for price maps that divide by coordinates.
    StrictlyPositive,
    /// The first `count` coordinates strictly positive, the rest free. Used
    /// by production models where activity levels may touch zero.
    PositiveLeading(usize),
    /// `f` is defined everywhere (affine maps, test problems).
    Unrestricted,
}

impl DomainGuard {
    /// Checks `x`, returning the first offending coordinate index.
    pub fn check(&self, x: &DVector<f64>) -> std::result::Result<(), usize> {
        let guarded = match self {
            DomainGuard::StrictlyPositive => x.len(),
            DomainGuard::PositiveLeading(count) => (*count).min(x.len()),
            DomainGuard::Unrestricted => 0,
        };
        for i in 0..guarded {
            if !(x[i] > 0.0) {
                return Err(i);
            }
        }
        Ok(())
    }
}

type EvalFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type JacFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// A nonlinear complementarity problem `x >= 0, f(x) >= 0, x.f(x) = 0`.
///
/// The struct is immutable after construction and cheap to clone, so
/// independent traces may run concurrently against the same problem.
#[derive(Clone)]
pub struct NcpProblem {
    n: usize,
    f: Arc<EvalFn>,
    jac_f: Option<Arc<JacFn>>,
    domain: DomainGuard,
}

impl fmt::Debug for NcpProblem {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("NcpProblem")
            .field("n", &self.n)
            .field("analytic_jacobian", &self.jac_f.is_some())
            .field("domain", &self.domain)
            .finish()
    }
}

impl NcpProblem {
    /// Wraps a map `f: R^n -> R^n`. The domain defaults to strictly positive
    /// vectors; the Jacobian defaults to central finite differences.
    pub fn new<F>(n: usize, f: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        NcpProblem {
            n,
            f: Arc::new(f),
            jac_f: None,
            domain: DomainGuard::StrictlyPositive,
        }
    }

    /// Attaches an analytic Jacobian of `f`.
    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jac_f = Some(Arc::new(jac));
        self
    }

    /// Replaces the domain guard.
    pub fn with_domain(mut self, domain: DomainGuard) -> Self {
        self.domain = domain;
        self
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> DomainGuard {
        self.domain
    }

    fn check_domain(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "expected a vector of length {}, got {}",
                self.n,
                x.len()
            )));
        }
        self.domain
            .check(x)
            .map_err(|index| Error::DomainViolation { index, value: x[index] })
    }

    /// Evaluates `f` with domain and finiteness checks.
    pub fn eval_f(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_domain(x)?;
        let fx = (self.f)(x);
        debug_assert_eq!(fx.len(), self.n, "f returned a vector of wrong length");
        for (index, v) in fx.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index });
            }
        }
        Ok(fx)
    }

    /// Jacobian of `f`: the analytic one when supplied, otherwise central
    /// finite differences of the guarded evaluator.
    pub fn jacobian_f(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_domain(x)?;
        match &self.jac_f {
            Some(jac) => {
                let j = jac(x);
                for (index, v) in j.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::NonFinite { index });
                    }
                }
                Ok(j)
            }
            None => {
                let f = self.f.clone();
                let domain = self.domain;
                // Probes may step outside the guard; surface that as NaN so
                // fd_jacobian reports the offending coordinate.
                fd_jacobian(
                    move |p| {
                        if domain.check(p).is_ok() {
                            f(p)
                        } else {
                            DVector::from_element(p.len(), f64::NAN)
                        }
                    },
                    x,
                )
            }
        }
    }

    /// The square reformulation `F(x, y) = (x ∘ y, y - f(x))`.
    pub fn square_residual(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        let fx = self.eval_f(x)?;
        let n = self.n;
        let mut out = DVector::zeros(2 * n);
        for i in 0..n {
            out[i] = x[i] * y[i];
            out[n + i] = y[i] - fx[i];
        }
        Ok(out)
    }

    /// Jacobian of the square reformulation with respect to `(x, y)`.
    pub fn square_jacobian(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        let jf = self.jacobian_f(x)?;
        let n = self.n;
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            out[(i, i)] = y[i];
            out[(i, n + i)] = x[i];
            out[(n + i, n + i)] = 1.0;
            for j in 0..n {
                out[(n + i, j)] = -jf[(i, j)];
            }
        }
        Ok(out)
    }

    /// The homotopy map `H` at `point`, anchored at `start`.
    ///
    /// Evaluates exactly to zero at the start itself and reproduces
    /// [`square_residual`] bit-for-bit at `λ = 0`.
    pub fn homotopy_residual(&self, point: &HomotopyPoint, start: &HomotopyPoint) -> Result<DVector<f64>> {
        let fx = self.eval_f(&point.x)?;
        let n = self.n;
        let lambda = point.lambda;
        let mut out = DVector::zeros(2 * n);
        for i in 0..n {
            out[i] = point.x[i] * point.y[i] - lambda * (start.x[i] * start.y[i]);
            out[n + i] = point.y[i] - (1.0 - lambda) * fx[i] - lambda * start.y[i];
        }
        Ok(out)
    }

    /// Jacobian of `H` with respect to `(x, y, λ)`, a `2n x (2n+1)` matrix.
    ///
    /// Block layout, with `X = diag(x)` and `Y = diag(y)`:
    ///
    /// ```text
    /// [ Y              X   -(x⁰ ∘ y⁰) ]
    /// [ -(1-λ) f'(x)   I    f(x) - y⁰ ]
    /// ```
    pub fn homotopy_jacobian(&self, point: &HomotopyPoint, start: &HomotopyPoint) -> Result<DMatrix<f64>> {
        let fx = self.eval_f(&point.x)?;
        let jf = self.jacobian_f(&point.x)?;
        let n = self.n;
        let lambda = point.lambda;
        let mut out = DMatrix::zeros(2 * n, 2 * n + 1);
        for i in 0..n {
            out[(i, i)] = point.y[i];
            out[(i, n + i)] = point.x[i];
            out[(i, 2 * n)] = -(start.x[i] * start.y[i]);
            out[(n + i, n + i)] = 1.0;
            out[(n + i, 2 * n)] = fx[i] - start.y[i];
            for j in 0..n {
                out[(n + i, j)] = -(1.0 - lambda) * jf[(i, j)];
            }
        }
        Ok(out)
    }

    /// Infinity norm of `min(x, f(x))`, the standard merit for how far `x`
    /// is from solving the complementarity problem. Zero exactly at
    /// solutions, including boundary ones.
    pub fn complementarity_residual(&self, x: &DVector<f64>) -> Result<f64> {
        let fx = self.eval_f(x)?;
        let mut worst = 0.0f64;
        for i in 0..self.n {
            worst = worst.max(x[i].min(fx[i]).abs());
        }
        Ok(worst)
    }
}

/// A point on (or near) the homotopy path.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyPoint {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub lambda: f64,
}

impl HomotopyPoint {
    pub fn new(x: DVector<f64>, y: DVector<f64>, lambda: f64) -> Self {
        HomotopyPoint { x, y, lambda }
    }

    /// The distinguished start of a trace: `λ = 1` at the chosen anchor.
    pub fn start(x0: DVector<f64>, y0: DVector<f64>) -> Self {
        HomotopyPoint::new(x0, y0, 1.0)
    }

    pub fn dimension(&self) -> usize {
        self.x.len()
    }

    /// Flattens to `(x, y, λ)`, the coordinate order used by the tangent and
    /// corrector linear algebra.
    pub fn to_flat(&self) -> DVector<f64> {
        let n = self.x.len();
        let mut v = DVector::zeros(2 * n + 1);
        v.rows_mut(0, n).copy_from(&self.x);
        v.rows_mut(n, n).copy_from(&self.y);
        v[2 * n] = self.lambda;
        v
    }

    pub fn from_flat(n: usize, v: &DVector<f64>) -> Self {
        assert_eq!(v.len(), 2 * n + 1, "flat vector has wrong length");
        HomotopyPoint {
            x: v.rows(0, n).into_owned(),
            y: v.rows(n, n).into_owned(),
            lambda: v[2 * n],
        }
    }
}

/// Central-difference Jacobian with per-coordinate step
/// `h_i = max(1e-7, 1e-7 |x_i|)`.
///
/// Exact for affine maps up to roundoff; errors out with the probed
/// coordinate if any evaluation comes back non-finite.
pub fn fd_jacobian<F>(f: F, x: &DVector<f64>) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let mut out: Option<DMatrix<f64>> = None;
    for i in 0..n {
        let h = FD_STEP.max(FD_STEP * x[i].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let fp = f(&xp);
        let fm = f(&xm);
        if fp.iter().any(|v| !v.is_finite()) || fm.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        let col = (fp - fm) / (2.0 * h);
        let out = out.get_or_insert_with(|| DMatrix::zeros(col.len(), n));
        out.set_column(i, &col);
    }
    out.ok_or_else(|| Error::InvalidInput("cannot differentiate a zero-dimensional map".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn affine_problem() -> NcpProblem {
        // f(x) = x - 2 in one dimension, defined everywhere.
        NcpProblem::new(1, |x: &DVector<f64>| DVector::from_vec(vec![x[0] - 2.0]))
            .with_domain(DomainGuard::Unrestricted)
    }

    #[test]
    fn square_residual_vanishes_at_interior_solution() {
        let p = affine_problem();
        let f = p
            .square_residual(&DVector::from_vec(vec![2.0]), &DVector::from_vec(vec![0.0]))
            .unwrap();
        assert_eq!(f.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn square_residual_vanishes_at_boundary_solution() {
        // f(x) = x + 1, solution x = 0 with slack y = f(0) = 1.
        let p = NcpProblem::new(1, |x: &DVector<f64>| DVector::from_vec(vec![x[0] + 1.0]))
            .with_domain(DomainGuard::Unrestricted);
        let f = p
            .square_residual(&DVector::from_vec(vec![0.0]), &DVector::from_vec(vec![1.0]))
            .unwrap();
        assert_eq!(f.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn square_residual_stacks_products_then_slacks() {
        let p = NcpProblem::new(2, |x: &DVector<f64>| {
            DVector::from_vec(vec![x[0] - 2.0, x[1] + 2.0])
        })
        .with_domain(DomainGuard::Unrestricted);
        let f = p
            .square_residual(
                &DVector::from_vec(vec![2.0, 1.0]),
                &DVector::from_vec(vec![0.0, 3.0]),
            )
            .unwrap();
        assert_eq!(f.as_slice(), &[0.0, 3.0, 0.0, 0.0]);
    }

    #[test]
    fn homotopy_residual_is_exactly_zero_at_start() {
        let p = NcpProblem::new(1, |x: &DVector<f64>| DVector::from_vec(vec![x[0] * x[0] - 3.0]));
        let start = HomotopyPoint::start(
            DVector::from_vec(vec![1.7]),
            DVector::from_vec(vec![0.3]),
        );
        let h = p.homotopy_residual(&start, &start).unwrap();
        assert_eq!(h.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn homotopy_residual_matches_square_residual_bitwise_at_lambda_zero() {
        let p = NcpProblem::new(2, |x: &DVector<f64>| {
            DVector::from_vec(vec![x[0] * x[1] - 0.3, x[1].powi(3) + 0.7])
        });
        let start = HomotopyPoint::start(
            DVector::from_vec(vec![1.3, 0.4]),
            DVector::from_vec(vec![0.9, 2.2]),
        );
        let point = HomotopyPoint::new(
            DVector::from_vec(vec![0.11, 2.43]),
            DVector::from_vec(vec![1.57, 0.02]),
            0.0,
        );
        let h = p.homotopy_residual(&point, &start).unwrap();
        let f = p.square_residual(&point.x, &point.y).unwrap();
        for i in 0..4 {
            assert_eq!(h[i].to_bits(), f[i].to_bits());
        }
    }

    #[test]
    fn homotopy_residual_hand_value() {
        // f(x) = x^2, point (x, y, λ) = (2, 3, 0.5), start (1, 1).
        let p = NcpProblem::new(1, |x: &DVector<f64>| DVector::from_vec(vec![x[0] * x[0]]));
        let start = HomotopyPoint::start(DVector::from_vec(vec![1.0]), DVector::from_vec(vec![1.0]));
        let point = HomotopyPoint::new(
            DVector::from_vec(vec![2.0]),
            DVector::from_vec(vec![3.0]),
            0.5,
        );
        let h = p.homotopy_residual(&point, &start).unwrap();
        assert_abs_diff_eq!(h[0], 5.5, epsilon = 1e-15);
        assert_abs_diff_eq!(h[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn homotopy_jacobian_hand_value() {
        let p = NcpProblem::new(1, |x: &DVector<f64>| DVector::from_vec(vec![x[0] * x[0]]))
            .with_jacobian(|x: &DVector<f64>| DMatrix::from_row_slice(1, 1, &[2.0 * x[0]]));
        let start = HomotopyPoint::start(DVector::from_vec(vec![1.0]), DVector::from_vec(vec![1.0]));
        let point = HomotopyPoint::new(
            DVector::from_vec(vec![2.0]),
            DVector::from_vec(vec![3.0]),
            0.5,
        );
        let j = p.homotopy_jacobian(&point, &start).unwrap();
        let expected = DMatrix::from_row_slice(2, 3, &[3.0, 2.0, -1.0, -2.0, 1.0, 3.0]);
        assert_abs_diff_eq!(j, expected, epsilon = 1e-15);
    }

    #[test]
    fn homotopy_jacobian_constant_map_at_lambda_one() {
        // For constant f ≡ c the lower-left block vanishes at λ = 1 and the
        // λ-column carries c - y⁰.
        let c = 4.25;
        let p = NcpProblem::new(1, move |_: &DVector<f64>| DVector::from_vec(vec![c]))
            .with_jacobian(|_: &DVector<f64>| DMatrix::zeros(1, 1));
        let start = HomotopyPoint::start(DVector::from_vec(vec![2.0]), DVector::from_vec(vec![0.5]));
        let j = p.homotopy_jacobian(&start, &start).unwrap();
        let expected = DMatrix::from_row_slice(2, 3, &[0.5, 2.0, -1.0, 0.0, 1.0, c - 0.5]);
        assert_abs_diff_eq!(j, expected, epsilon = 1e-15);
    }

    #[test]
    fn homotopy_jacobian_matches_finite_differences() {
        let p = NcpProblem::new(3, |x: &DVector<f64>| {
            DVector::from_vec(vec![
                x[0].powi(2) + x[1],
                x[1] * x[2] - 1.0,
                x[0] + x[2].powi(3),
            ])
        })
        .with_jacobian(|x: &DVector<f64>| {
            DMatrix::from_row_slice(
                3,
                3,
                &[
                    2.0 * x[0], 1.0, 0.0,
                    0.0, x[2], x[1],
                    1.0, 0.0, 3.0 * x[2].powi(2),
                ],
            )
        });
        let start = HomotopyPoint::start(
            DVector::from_vec(vec![0.7, 1.1, 0.8]),
            DVector::from_vec(vec![1.0, 1.3, 0.2]),
        );
        let point = HomotopyPoint::new(
            DVector::from_vec(vec![0.9, 0.6, 1.4]),
            DVector::from_vec(vec![0.5, 1.9, 0.8]),
            0.37,
        );
        let analytic = p.homotopy_jacobian(&point, &start).unwrap();
        // Differentiate H numerically through the flat (x, y, λ) coordinates.
        let flat = point.to_flat();
        let fd = fd_jacobian(
            |v: &DVector<f64>| {
                let pt = HomotopyPoint::from_flat(3, v);
                p.homotopy_residual(&pt, &start).unwrap()
            },
            &flat,
        )
        .unwrap();
        for (a, b) in analytic.iter().zip(fd.iter()) {
            assert!((a - b).abs() <= 1e-5 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn fd_jacobian_is_exact_for_affine_maps() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
        let a2 = a.clone();
        let j = fd_jacobian(
            move |x: &DVector<f64>| &a2 * x + DVector::from_vec(vec![1.0, -2.0]),
            &DVector::from_vec(vec![0.3, -1.7]),
        )
        .unwrap();
        assert_abs_diff_eq!(j, a, epsilon = 1e-8);
    }

    #[test]
    fn fd_jacobian_quadratic_hand_value() {
        let j = fd_jacobian(
            |x: &DVector<f64>| DVector::from_vec(vec![x[0] * x[0]]),
            &DVector::from_vec(vec![3.0]),
        )
        .unwrap();
        assert_abs_diff_eq!(j[(0, 0)], 6.0, epsilon = 1e-6);
    }

    #[test]
    fn fd_jacobian_reports_nonfinite_probes() {
        let err = fd_jacobian(
            |x: &DVector<f64>| DVector::from_vec(vec![x[0].ln()]),
            &DVector::from_vec(vec![1e-9]),
        )
        .unwrap_err();
        match err {
            Error::NonFinite { index } => assert_eq!(index, 0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn complementarity_residual_cases() {
        let p = affine_problem();
        assert_eq!(
            p.complementarity_residual(&DVector::from_vec(vec![2.0])).unwrap(),
            0.0
        );
        // x = 1: min(1, -1) = -1.
        assert_abs_diff_eq!(
            p.complementarity_residual(&DVector::from_vec(vec![1.0])).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let boundary = NcpProblem::new(1, |x: &DVector<f64>| DVector::from_vec(vec![x[0] + 1.0]))
            .with_domain(DomainGuard::Unrestricted);
        assert_eq!(
            boundary
                .complementarity_residual(&DVector::from_vec(vec![0.0]))
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn domain_guard_reports_first_offender() {
        let p = NcpProblem::new(2, |x: &DVector<f64>| x.clone());
        let err = p.eval_f(&DVector::from_vec(vec![1.0, -0.5])).unwrap_err();
        match err {
            Error::DomainViolation { index, value } => {
                assert_eq!(index, 1);
                assert_eq!(value, -0.5);
            }
            other => panic!("unexpected error {other:?}"),
        }
        let guard = DomainGuard::PositiveLeading(1);
        assert!(guard.check(&DVector::from_vec(vec![0.1, -4.0])).is_ok());
        assert_eq!(guard.check(&DVector::from_vec(vec![0.0, 1.0])), Err(0));
    }

    #[test]
    fn eval_rejects_nonfinite_values() {
        let p = NcpProblem::new(1, |_: &DVector<f64>| DVector::from_vec(vec![f64::NAN]))
            .with_domain(DomainGuard::Unrestricted);
        assert!(matches!(
            p.eval_f(&DVector::from_vec(vec![1.0])),
            Err(Error::NonFinite { index: 0 })
        ));
    }

    #[test]
    fn flat_roundtrip_preserves_coordinates() {
        let pt = HomotopyPoint::new(
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![3.0, 4.0]),
            0.25,
        );
        let flat = pt.to_flat();
        assert_eq!(flat.as_slice(), &[1.0, 2.0, 3.0, 4.0, 0.25]);
        assert_eq!(HomotopyPoint::from_flat(2, &flat), pt);
    }
}
