//! Economic models and their reduction to complementarity problems.
//!
//! An [`ExchangeEconomy`] is a list of consumers with demand functions from
//! three single-parameter CES-style families; a [`ProductionEconomy`] adds a
//! linear activity technology. Either kind compiles into an [`NcpProblem`]:
//!
//! * exchange — find prices `p ≥ 0` with excess demand `ξ(p) ≤ 0` and
//!   `pᵀξ(p) = 0`, i.e. an NCP with `f(p) = −ξ(p)`;
//! * production — find `(p, y) ≥ 0` with markets clearing
//!   (`A y − ξ(p) ≥ 0`) and no activity earning a positive profit
//!   (`−Aᵀp ≥ 0`), complementarity tying the two blocks together.
//!
//! Since demand is homogeneous of degree zero in prices the solution ray is
//! normalized, either after the fact (projection onto the unit simplex) or
//! inside the system by swapping the last complementarity row for
//! `Σ p − 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ncp::{DomainGuard, NcpProblem};
use crate::tracer::{solve_ncp_with, NcpSolution, TraceConfig};

/// Demand-function family of a single consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemandFamily {
    /// CES demand with a fixed substitution exponent of `1/5`:
    /// `x_j(p) = a_j^{1/5} m / (p_j^{1/5} Σ_k a_k^{1/5} p_k^{4/5})`.
    CesA,
    /// CES demand with a per-consumer exponent `b`:
    /// `x_j(p) = a_j m / (p_j^b Σ_k a_k p_k^{1−b})`.
    CesB,
    /// Cobb-Douglas demand: `x_j(p) = a_j m / (p_j Σ_k a_k)`.
    CobbDouglas,
}

/// A consumer: a demand family, preference shares `a`, an optional
/// elasticity exponent, and an endowment vector `w`. Income is `m = pᵀw`.
#[derive(Debug, Clone, PartialEq)]
pub struct Consumer {
    pub family: DemandFamily,
    pub shares: DVector<f64>,
    /// Exponent `b` of the [`DemandFamily::CesB`] family; `None` otherwise.
    pub elasticity: Option<f64>,
    pub endowment: DVector<f64>,
}

impl Consumer {
    pub fn ces_a(shares: Vec<f64>, endowment: Vec<f64>) -> Result<Consumer> {
        Consumer::build(DemandFamily::CesA, shares, None, endowment)
    }

    pub fn ces_b(shares: Vec<f64>, elasticity: f64, endowment: Vec<f64>) -> Result<Consumer> {
        Consumer::build(DemandFamily::CesB, shares, Some(elasticity), endowment)
    }

    pub fn cobb_douglas(shares: Vec<f64>, endowment: Vec<f64>) -> Result<Consumer> {
        Consumer::build(DemandFamily::CobbDouglas, shares, None, endowment)
    }

    pub fn build(
        family: DemandFamily,
        shares: Vec<f64>,
        elasticity: Option<f64>,
        endowment: Vec<f64>,
    ) -> Result<Consumer> {
        if shares.is_empty() {
            return Err(Error::InvalidModel("a consumer needs at least one good".into()));
        }
        if shares.len() != endowment.len() {
            return Err(Error::InvalidModel(format!(
                "shares ({}) and endowment ({}) lengths differ",
                shares.len(),
                endowment.len()
            )));
        }
        if shares.iter().any(|&a| !a.is_finite() || a < 0.0) {
            return Err(Error::InvalidModel(
                "shares must be finite and nonnegative".into(),
            ));
        }
        if shares.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidModel(
                "at least one share must be strictly positive".into(),
            ));
        }
        if endowment.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidModel(
                "endowments must be finite and nonnegative".into(),
            ));
        }
        match (family, elasticity) {
            (DemandFamily::CesB, Some(b)) if b.is_finite() && b > 0.0 => {}
            (DemandFamily::CesB, _) => {
                return Err(Error::InvalidModel(
                    "the ces-b family needs a finite positive elasticity".into(),
                ))
            }
            (_, Some(_)) => {
                return Err(Error::InvalidModel(
                    "only the ces-b family takes an elasticity".into(),
                ))
            }
            (_, None) => {}
        }
        Ok(Consumer {
            family,
            shares: DVector::from_vec(shares),
            elasticity,
            endowment: DVector::from_vec(endowment),
        })
    }

    pub fn goods(&self) -> usize {
        self.shares.len()
    }

    /// Price exponent `e` of the family: demand is `N_j m / (p_j^e S(p))`.
    fn exponent(&self) -> f64 {
        match self.family {
            DemandFamily::CesA => 0.2,
            DemandFamily::CesB => self.elasticity.expect("validated at construction"),
            DemandFamily::CobbDouglas => 1.0,
        }
    }

    /// Numerator weights `N_j`.
    fn numerator_weights(&self) -> DVector<f64> {
        match self.family {
            DemandFamily::CesA => self.shares.map(|a| a.powf(0.2)),
            DemandFamily::CesB | DemandFamily::CobbDouglas => self.shares.clone(),
        }
    }

    /// Shared denominator `S(p)`.
    fn denominator(&self, p: &DVector<f64>) -> f64 {
        match self.family {
            DemandFamily::CesA => self
                .shares
                .iter()
                .zip(p.iter())
                .map(|(&a, &p)| a.powf(0.2) * p.powf(0.8))
                .sum(),
            DemandFamily::CesB => {
                let b = self.exponent();
                self.shares
                    .iter()
                    .zip(p.iter())
                    .map(|(&a, &p)| a * p.powf(1.0 - b))
                    .sum()
            }
            DemandFamily::CobbDouglas => self.shares.sum(),
        }
    }

    /// Gradient of the denominator, `∂S/∂p_l`.
    fn denominator_gradient(&self, p: &DVector<f64>) -> DVector<f64> {
        match self.family {
            DemandFamily::CesA => DVector::from_fn(p.len(), |l, _| {
                0.8 * self.shares[l].powf(0.2) * p[l].powf(-0.2)
            }),
            DemandFamily::CesB => {
                let b = self.exponent();
                DVector::from_fn(p.len(), |l, _| {
                    (1.0 - b) * self.shares[l] * p[l].powf(-b)
                })
            }
            DemandFamily::CobbDouglas => DVector::zeros(p.len()),
        }
    }

    fn check_prices(&self, p: &DVector<f64>) -> Result<()> {
        if p.len() != self.goods() {
            return Err(Error::InvalidInput(format!(
                "price vector length {} does not match {} goods",
                p.len(),
                self.goods()
            )));
        }
        if let Some(index) = p.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::DomainViolation {
                index,
                value: p[index],
            });
        }
        Ok(())
    }

    /// Marshallian demand at strictly positive prices.
    pub fn demand(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_prices(p)?;
        let m = p.dot(&self.endowment);
        if !(m > 0.0) {
            return Err(Error::NonPositiveIncome);
        }
        let e = self.exponent();
        let weights = self.numerator_weights();
        let s = self.denominator(p);
        Ok(DVector::from_fn(self.goods(), |j, _| {
            weights[j] * m / (p[j].powf(e) * s)
        }))
    }

    /// Jacobian `∂x_j/∂p_l` of [`Consumer::demand`], computed analytically.
    pub fn demand_jacobian(&self, p: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_prices(p)?;
        let n = self.goods();
        let m = p.dot(&self.endowment);
        if !(m > 0.0) {
            return Err(Error::NonPositiveIncome);
        }
        let e = self.exponent();
        let weights = self.numerator_weights();
        let s = self.denominator(p);
        let s_grad = self.denominator_gradient(p);
        let demand = DVector::from_fn(n, |j, _| weights[j] * m / (p[j].powf(e) * s));
        Ok(DMatrix::from_fn(n, n, |j, l| {
            let income_term = weights[j] * self.endowment[l] / (p[j].powf(e) * s);
            let own_price = if j == l { e / p[j] } else { 0.0 };
            income_term - demand[j] * (own_price + s_grad[l] / s)
        }))
    }
}

/// A pure exchange economy: consumers trading a fixed total endowment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeEconomy {
    consumers: Vec<Consumer>,
    goods: usize,
}

impl ExchangeEconomy {
    pub fn new(consumers: Vec<Consumer>) -> Result<ExchangeEconomy> {
        let Some(first) = consumers.first() else {
            return Err(Error::InvalidModel("an economy needs at least one consumer".into()));
        };
        let goods = first.goods();
        if consumers.iter().any(|c| c.goods() != goods) {
            return Err(Error::InvalidModel(
                "all consumers must trade the same set of goods".into(),
            ));
        }
        Ok(ExchangeEconomy { consumers, goods })
    }

    pub fn goods(&self) -> usize {
        self.goods
    }

    pub fn consumers(&self) -> &[Consumer] {
        &self.consumers
    }

    /// Aggregate excess demand `ξ(p) = Σ_i (x_i(p) − w_i)`.
    pub fn excess_demand(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        let mut xi = DVector::zeros(self.goods);
        for consumer in &self.consumers {
            xi += consumer.demand(p)? - &consumer.endowment;
        }
        Ok(xi)
    }

    /// Analytic Jacobian of [`ExchangeEconomy::excess_demand`].
    pub fn excess_demand_jacobian(&self, p: &DVector<f64>) -> Result<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(self.goods, self.goods);
        for consumer in &self.consumers {
            jac += consumer.demand_jacobian(p)?;
        }
        Ok(jac)
    }
}

/// An economy with a linear activity technology on top of exchange.
///
/// The activity matrix has one row per good and one column per activity;
/// running activity `j` at level `y_j ≥ 0` adds `y_j A[:, j]` to net supply
/// (positive entries are outputs, negative entries inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct ProductionEconomy {
    pub exchange: ExchangeEconomy,
    activity_matrix: DMatrix<f64>,
}

impl ProductionEconomy {
    pub fn new(consumers: Vec<Consumer>, activity_matrix: DMatrix<f64>) -> Result<ProductionEconomy> {
        let exchange = ExchangeEconomy::new(consumers)?;
        if activity_matrix.nrows() != exchange.goods() {
            return Err(Error::InvalidModel(format!(
                "activity matrix has {} rows but the economy has {} goods",
                activity_matrix.nrows(),
                exchange.goods()
            )));
        }
        if activity_matrix.ncols() == 0 {
            return Err(Error::InvalidModel(
                "a production economy needs at least one activity".into(),
            ));
        }
        if activity_matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(
                "activity matrix entries must be finite".into(),
            ));
        }
        Ok(ProductionEconomy {
            exchange,
            activity_matrix,
        })
    }

    pub fn goods(&self) -> usize {
        self.exchange.goods()
    }

    pub fn activities(&self) -> usize {
        self.activity_matrix.ncols()
    }

    pub fn activity_matrix(&self) -> &DMatrix<f64> {
        &self.activity_matrix
    }
}

/// Either kind of economy.
#[derive(Debug, Clone, PartialEq)]
pub enum Economy {
    Exchange(ExchangeEconomy),
    Production(ProductionEconomy),
}

impl Economy {
    pub fn goods(&self) -> usize {
        match self {
            Economy::Exchange(e) => e.goods(),
            Economy::Production(e) => e.goods(),
        }
    }

    pub fn activities(&self) -> usize {
        match self {
            Economy::Exchange(_) => 0,
            Economy::Production(e) => e.activities(),
        }
    }

    /// Number of NCP variables: goods, plus activities for production.
    pub fn dimension(&self) -> usize {
        self.goods() + self.activities()
    }
}

/// How the price-scale degeneracy is removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Swap the last complementarity component for `Σ p − 1`.
    ReplaceLastRow,
    /// Leave the system untouched; prices are rescaled after solving.
    None,
}

impl Normalization {
    /// The scheme each economy kind was tuned with: production economies
    /// pin the scale inside the system, exchange economies after the fact.
    pub fn default_for(economy: &Economy) -> Normalization {
        match economy {
            Economy::Exchange(_) => Normalization::None,
            Economy::Production(_) => Normalization::ReplaceLastRow,
        }
    }
}

/// A reference equilibrium attached to a model, used to label solver output
/// and to certify models.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownEquilibrium {
    pub prices: DVector<f64>,
    pub activities: Option<DVector<f64>>,
    pub label: String,
}

/// An economy bundled with its known equilibria.
#[derive(Debug, Clone, PartialEq)]
pub struct EconomyModel {
    pub economy: Economy,
    pub known_equilibria: Vec<KnownEquilibrium>,
}

/// Solver output for one start point, ready for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    /// Equilibrium prices, normalized onto the unit simplex.
    pub prices: Vec<f64>,
    /// Activity levels; `None` for exchange economies.
    pub activities: Option<Vec<f64>>,
    /// `‖min(z, f(z))‖∞` at the normalized solution.
    pub complementarity_residual: f64,
    /// Predictor steps spent by the successful trace.
    pub iterations: usize,
    pub restarts: usize,
    /// Label of a known equilibrium within `1e-2` of the normalized prices.
    pub matched_known_equilibrium: Option<String>,
    pub warnings: Vec<String>,
}

/// Projects a nonnegative price vector onto the unit simplex.
pub fn normalize_prices(p: &DVector<f64>) -> DVector<f64> {
    let sum = p.sum();
    if sum > 0.0 && sum.is_finite() {
        p / sum
    } else {
        p.clone()
    }
}

fn nan_vector(n: usize) -> DVector<f64> {
    DVector::from_element(n, f64::NAN)
}

fn nan_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_element(n, n, f64::NAN)
}

/// Compiles an exchange economy into the NCP `p ≥ 0 ⟂ −ξ(p) ≥ 0`.
pub fn exchange_ncp(economy: &ExchangeEconomy, normalization: Normalization) -> NcpProblem {
    let goods = economy.goods();
    let econ_f = economy.clone();
    let econ_j = economy.clone();
    NcpProblem::new(goods, move |p: &DVector<f64>| {
        let mut f = match econ_f.excess_demand(p) {
            Ok(xi) => -xi,
            Err(_) => return nan_vector(goods),
        };
        if normalization == Normalization::ReplaceLastRow {
            f[goods - 1] = p.sum() - 1.0;
        }
        f
    })
    .with_jacobian(move |p: &DVector<f64>| {
        let mut jac = match econ_j.excess_demand_jacobian(p) {
            Ok(j) => -j,
            Err(_) => return nan_matrix(goods),
        };
        if normalization == Normalization::ReplaceLastRow {
            jac.row_mut(goods - 1).fill(1.0);
        }
        jac
    })
    .with_domain(DomainGuard::StrictlyPositive)
}

/// Compiles a production economy into the NCP over `z = (p, y)`:
/// `p ⟂ A y − ξ(p)` and `y ⟂ −Aᵀ p`.
pub fn production_ncp(economy: &ProductionEconomy, normalization: Normalization) -> NcpProblem {
    let goods = economy.goods();
    let activities = economy.activities();
    let n = goods + activities;
    let econ_f = economy.clone();
    let econ_j = economy.clone();
    NcpProblem::new(n, move |z: &DVector<f64>| {
        let p = z.rows(0, goods).into_owned();
        let y = z.rows(goods, activities).into_owned();
        let xi = match econ_f.exchange.excess_demand(&p) {
            Ok(xi) => xi,
            Err(_) => return nan_vector(n),
        };
        let mut f = DVector::zeros(n);
        f.rows_mut(0, goods)
            .copy_from(&(econ_f.activity_matrix() * &y - xi));
        f.rows_mut(goods, activities)
            .copy_from(&(-(econ_f.activity_matrix().transpose() * &p)));
        if normalization == Normalization::ReplaceLastRow {
            f[n - 1] = p.sum() - 1.0;
        }
        f
    })
    .with_jacobian(move |z: &DVector<f64>| {
        let p = z.rows(0, goods).into_owned();
        let xi_jac = match econ_j.exchange.excess_demand_jacobian(&p) {
            Ok(j) => j,
            Err(_) => return nan_matrix(n),
        };
        let a = econ_j.activity_matrix();
        let mut jac = DMatrix::zeros(n, n);
        jac.view_mut((0, 0), (goods, goods)).copy_from(&(-xi_jac));
        jac.view_mut((0, goods), (goods, activities)).copy_from(a);
        jac.view_mut((goods, 0), (activities, goods))
            .copy_from(&(-a.transpose()));
        if normalization == Normalization::ReplaceLastRow {
            let mut last = jac.row_mut(n - 1);
            last.fill(0.0);
            for d in 0..goods {
                last[d] = 1.0;
            }
        }
        jac
    })
    .with_domain(DomainGuard::PositiveLeading(goods))
}

/// Compiles either kind of economy with the given normalization scheme.
pub fn compile(economy: &Economy, normalization: Normalization) -> NcpProblem {
    match economy {
        Economy::Exchange(e) => exchange_ncp(e, normalization),
        Economy::Production(e) => production_ncp(e, normalization),
    }
}

/// Complementarity residual of a known equilibrium under the plain
/// (unnormalized) economic NCP, evaluated at simplex-normalized prices.
/// Production models need the equilibrium to carry activity levels.
pub fn known_equilibrium_residual(model: &EconomyModel, eq: &KnownEquilibrium) -> Result<f64> {
    let goods = model.economy.goods();
    if eq.prices.len() != goods {
        return Err(Error::InvalidModel(format!(
            "known equilibrium '{}' has {} prices but the economy has {} goods",
            eq.label,
            eq.prices.len(),
            goods
        )));
    }
    let prices = normalize_prices(&eq.prices);
    let z = match &model.economy {
        Economy::Exchange(_) => prices,
        Economy::Production(p) => {
            let Some(y) = &eq.activities else {
                return Err(Error::InvalidModel(format!(
                    "known equilibrium '{}' of a production economy lacks activity levels",
                    eq.label
                )));
            };
            if y.len() != p.activities() {
                return Err(Error::InvalidModel(format!(
                    "known equilibrium '{}' has {} activity levels but the economy has {}",
                    eq.label,
                    y.len(),
                    p.activities()
                )));
            }
            let mut z = DVector::zeros(goods + p.activities());
            z.rows_mut(0, goods).copy_from(&prices);
            z.rows_mut(goods, p.activities()).copy_from(y);
            z
        }
    };
    compile(&model.economy, Normalization::None).complementarity_residual(&z)
}

/// Below this level the last activity no longer pins the price scale.
const DEGENERATE_ACTIVITY_TOL: f64 = 1e-8;

/// Distance (∞-norm on normalized prices) within which a solution is
/// labelled as one of the model's known equilibria.
const KNOWN_EQUILIBRIUM_MATCH_TOL: f64 = 1e-2;

/// Computes an equilibrium of `model` from the given start point.
///
/// `start` supplies the initial NCP variables — prices for an exchange
/// economy, prices then activity levels for a production economy — and must
/// be strictly positive; the homotopy slack variables start at one. Reported
/// prices are normalized onto the unit simplex, and the complementarity
/// residual is re-evaluated at that normalized point against the plain
/// (unnormalized) system. Endpoints that fail that certification — the
/// zero-price corner of the unnormalized production system, or the
/// zero-income corner that the replaced last row admits — trigger a seeded
/// restart instead of being reported, and count as non-convergence once the
/// restart budget is spent.
pub fn compute_equilibrium(
    model: &EconomyModel,
    start: &DVector<f64>,
    cfg: &TraceConfig,
    normalization: Normalization,
) -> Result<EquilibriumReport> {
    compute_equilibrium_with_trace(model, start, cfg, normalization).map(|(report, _)| report)
}

/// Like [`compute_equilibrium`], but also hands back the raw solver output
/// with its homotopy path log.
pub fn compute_equilibrium_with_trace(
    model: &EconomyModel,
    start: &DVector<f64>,
    cfg: &TraceConfig,
    normalization: Normalization,
) -> Result<(EquilibriumReport, NcpSolution)> {
    let n = model.economy.dimension();
    if start.len() != n {
        return Err(Error::InvalidInput(format!(
            "start point has length {} but the model has {} variables ({} goods, {} activities)",
            start.len(),
            n,
            model.economy.goods(),
            model.economy.activities()
        )));
    }

    let problem = compile(&model.economy, normalization);
    let certifier = match normalization {
        Normalization::None => problem.clone(),
        Normalization::ReplaceLastRow => compile(&model.economy, Normalization::None),
    };
    let goods = model.economy.goods();
    let ones = DVector::from_element(n, 1.0);

    // Shared by the endpoint acceptance check and the final report: rescale
    // the price block onto the simplex, clamp activity levels that rounding
    // pushed barely below zero, and measure the complementarity residual of
    // the plain (unnormalized) system at that point. Certifying against the
    // plain system matters: the replaced last row erases one complementarity
    // condition from the traced system, so its solution set gains spurious
    // points — e.g. an idle activity that would actually be profitable —
    // that only the erased condition can expose.
    let finalize = |raw: &DVector<f64>| -> Option<(DVector<f64>, f64)> {
        let sum = raw.rows(0, goods).sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return None;
        }
        let mut z = raw.clone();
        for i in 0..goods {
            z[i] /= sum;
        }
        for i in goods..n {
            if z[i] < 0.0 && z[i] >= -cfg.eps_residual {
                z[i] = 0.0;
            }
        }
        let residual = certifier.complementarity_residual(&z).ok()?;
        residual.is_finite().then_some((z, residual))
    };

    // Endpoints whose rescaled form is not an equilibrium of the plain
    // system — the zero-price corner of the unnormalized production system,
    // or the zero-income corner the replaced row admits — are rejected
    // inside the restart loop rather than reported. The √eps_lambda term
    // leaves room for unpolished endpoints, whose complementarity products
    // are only driven down to the final homotopy level.
    let validity_gate = (10.0 * cfg.eps_residual).max(10.0 * cfg.eps_lambda.sqrt());
    let solution = solve_ncp_with(&problem, start, &ones, cfg, |candidate| {
        finalize(&candidate.x).is_some_and(|(_, residual)| residual <= validity_gate)
    })?;

    let (z, complementarity_residual) =
        finalize(&solution.x).expect("accepted candidates finalize");
    let prices = z.rows(0, goods).into_owned();
    let activities = match &model.economy {
        Economy::Exchange(_) => None,
        Economy::Production(_) => Some(z.rows(goods, n - goods).into_owned()),
    };

    let mut warnings = Vec::new();
    if normalization == Normalization::ReplaceLastRow {
        if let Some(y) = &activities {
            if y[y.len() - 1].abs() <= DEGENERATE_ACTIVITY_TOL {
                warnings.push(
                    "the last activity is zero, so the in-system price normalization was \
                     inactive; prices were rescaled after solving"
                        .to_string(),
                );
            }
        }
    }
    if complementarity_residual > 10.0 * cfg.eps_residual {
        warnings.push(format!(
            "complementarity residual {complementarity_residual:.3e} exceeds ten times the \
             corrector tolerance"
        ));
    }

    let matched_known_equilibrium = model
        .known_equilibria
        .iter()
        .find(|eq| {
            eq.prices.len() == goods
                && (normalize_prices(&eq.prices) - &prices).amax() <= KNOWN_EQUILIBRIUM_MATCH_TOL
        })
        .map(|eq| eq.label.clone());

    let report = EquilibriumReport {
        prices: prices.iter().copied().collect(),
        activities: activities.map(|y| y.iter().copied().collect()),
        complementarity_residual,
        iterations: solution.trace.predictor_steps,
        restarts: solution.restarts_used,
        matched_known_equilibrium,
        warnings,
    };
    Ok((report, solution))
}
