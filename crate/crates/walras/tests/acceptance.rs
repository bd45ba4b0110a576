//! End-to-end acceptance checks.
//!
//! Each test certifies one behavior contract of the solver and prints a
//! single `PASS`/`FAIL` line (visible with `--nocapture`); a failed check
//! also fails the test. Tolerances are pinned in the assertions.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use walras::builtins::Builtin;
use walras::economy::{
    compile, compute_equilibrium, known_equilibrium_residual, normalize_prices, Consumer, Economy,
    EconomyModel, KnownEquilibrium, Normalization, ProductionEconomy,
};
use walras::ncp::{fd_jacobian, HomotopyPoint};
use walras::oracle::{lcp_enumerate, newton_square_solve, LcpInstance};
use walras::tracer::{solve_ncp, TraceConfig};

fn report(name: &str, outcome: Result<String, String>) {
    match outcome {
        Ok(detail) => println!("acceptance {name}: PASS - {detail}"),
        Err(detail) => {
            println!("acceptance {name}: FAIL - {detail}");
            panic!("acceptance {name} failed: {detail}");
        }
    }
}

fn ones(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0)
}

fn inf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_1_two_good_economy_from_five_starts() {
    report("1 (two-good economy, five starts)", (|| {
        let model = Builtin::Ex1.model();
        let cfg = TraceConfig::default();
        let starts = [
            [0.01, 0.99],
            [0.1, 0.9],
            [0.4, 0.6],
            [0.5, 0.5],
            [1.0, 1.0],
        ];
        let clock = Instant::now();
        let mut max_steps = 0usize;
        let mut labels = Vec::new();
        for start in starts {
            let report = compute_equilibrium(
                &model,
                &DVector::from_vec(start.to_vec()),
                &cfg,
                Normalization::None,
            )
            .map_err(|e| format!("start {start:?} failed: {e}"))?;

            // must land within 1e-3 of one of the three known price systems
            let nearest = model
                .known_equilibria
                .iter()
                .map(|eq| {
                    let p = normalize_prices(&eq.prices);
                    (inf_diff(&report.prices, p.as_slice()), eq.label.clone())
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("ex1 has known equilibria");
            if nearest.0 > 1e-3 {
                return Err(format!(
                    "start {start:?} ended {:.2e} away from every known equilibrium",
                    nearest.0
                ));
            }
            if start == [0.5, 0.5] && nearest.1 != "p1*" {
                return Err(format!(
                    "start (0.5, 0.5) reached {} instead of the symmetric equilibrium",
                    nearest.1
                ));
            }
            if report.iterations > 200 {
                return Err(format!(
                    "start {start:?} needed {} predictor steps (limit 200)",
                    report.iterations
                ));
            }
            max_steps = max_steps.max(report.iterations);
            labels.push(nearest.1);
        }
        let elapsed = clock.elapsed();
        if elapsed.as_secs_f64() >= 1.0 {
            return Err(format!("five solves took {elapsed:.2?} (limit 1s)"));
        }
        Ok(format!(
            "reached {:?} in at most {max_steps} steps, {elapsed:.2?} total",
            labels
        ))
    })());
}

#[test]
fn criterion_2_ten_good_economy_matches_reference_prices() {
    report("2 (ten-good economy vs reference prices)", (|| {
        let reference = [
            0.187, 0.109, 0.099, 0.043, 0.117, 0.077, 0.117, 0.102, 0.099, 0.049,
        ];
        let model = Builtin::Ex2.model();
        let cfg = TraceConfig::default();
        let clock = Instant::now();
        let report = compute_equilibrium(&model, &ones(10), &cfg, Normalization::None)
            .map_err(|e| format!("solve failed: {e}"))?;
        let elapsed = clock.elapsed();

        let gap = inf_diff(&report.prices, &reference);
        if gap > 2e-3 {
            return Err(format!(
                "prices deviate {gap:.2e} from the reference (limit 2e-3)"
            ));
        }
        if elapsed.as_secs_f64() >= 5.0 {
            return Err(format!("solve took {elapsed:.2?} (limit 5s)"));
        }
        Ok(format!(
            "max deviation {gap:.2e} over 10 goods, {} steps, {elapsed:.2?}",
            report.iterations
        ))
    })());
}

#[test]
fn criterion_3_multi_activity_economy_certifies_and_matches() {
    report("3 (multi-activity economy, three starts)", (|| {
        let model = Builtin::Ex3.model();
        let cfg = TraceConfig::default();

        // all three listed equilibria must certify as complementarity points
        for known in &model.known_equilibria {
            let residual = known_equilibrium_residual(&model, known)
                .map_err(|e| format!("certifying {}: {e}", known.label))?;
            if residual > 2e-3 {
                return Err(format!(
                    "known equilibrium {} has residual {residual:.2e} (limit 2e-3)",
                    known.label
                ));
            }
        }

        let mut labels = Vec::new();
        for scale in [1.0, 0.5, 2.0] {
            let start = DVector::from_element(12, scale);
            let report =
                compute_equilibrium(&model, &start, &cfg, Normalization::ReplaceLastRow)
                    .map_err(|e| format!("start {scale}*ones failed: {e}"))?;
            let Some(label) = report.matched_known_equilibrium.clone() else {
                return Err(format!(
                    "start {scale}*ones reached an unlisted price system {:?}",
                    report.prices
                ));
            };
            let known = model
                .known_equilibria
                .iter()
                .find(|eq| eq.label == label)
                .expect("matched label exists");
            let price_gap = inf_diff(
                &report.prices,
                normalize_prices(&known.prices).as_slice(),
            );
            let activity_gap = inf_diff(
                report.activities.as_ref().expect("production model"),
                known.activities.as_ref().expect("listed with activities").as_slice(),
            );
            if price_gap > 1e-3 {
                return Err(format!(
                    "start {scale}*ones: price gap {price_gap:.2e} to {label} (limit 1e-3)"
                ));
            }
            if activity_gap > 2e-2 {
                return Err(format!(
                    "start {scale}*ones: activity gap {activity_gap:.2e} to {label} (limit 2e-2)"
                ));
            }
            if report.complementarity_residual > 2e-3 {
                return Err(format!(
                    "start {scale}*ones: residual {:.2e} (limit 2e-3)",
                    report.complementarity_residual
                ));
            }
            labels.push(label);
        }
        Ok(format!(
            "3 equilibria certified, three starts reached {labels:?}"
        ))
    })());
}

#[test]
fn criterion_4_small_production_economy_from_random_starts() {
    report("4 (small production economy, five random starts)", (|| {
        let model = Builtin::Ex4.model();
        let cfg = TraceConfig::default();
        let expected_prices = [0.5, 1.0 / 12.0, 5.0 / 12.0];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut max_steps = 0usize;
        for attempt in 0..5 {
            let start = DVector::from_fn(4, |_, _| rng.random_range(0.1..=2.0));
            let report =
                compute_equilibrium(&model, &start, &cfg, Normalization::ReplaceLastRow)
                    .map_err(|e| format!("random start {attempt} failed: {e}"))?;
            let price_gap = inf_diff(&report.prices, &expected_prices);
            let y = report.activities.as_ref().expect("production model");
            let activity_gap = (y[0] - 3.0).abs();
            if price_gap > 1e-3 || activity_gap > 1e-3 {
                return Err(format!(
                    "random start {attempt}: gaps {price_gap:.2e} / {activity_gap:.2e} \
                     (limit 1e-3)"
                ));
            }
            if report.iterations > 100 {
                return Err(format!(
                    "random start {attempt} needed {} predictor steps (limit 100)",
                    report.iterations
                ));
            }
            max_steps = max_steps.max(report.iterations);
        }
        Ok(format!(
            "5/5 starts at the unique equilibrium, at most {max_steps} steps"
        ))
    })());
}

/// Builds a production economy with `goods + activities` variables whose
/// equilibrium is known by construction: consumer endowments are completed
/// so markets clear exactly at a drawn price vector, and every activity is
/// strictly unprofitable there, so the equilibrium runs no production.
fn synthetic_production(
    goods: usize,
    activities: usize,
    consumers: usize,
    seed: u64,
) -> EconomyModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_star = normalize_prices(&DVector::from_fn(goods, |_, _| rng.random_range(0.2..1.0)));

    let mut pool: Vec<Consumer> = (0..consumers - 1)
        .map(|_| {
            let shares: Vec<f64> = (0..goods).map(|_| rng.random_range(0.1..1.0)).collect();
            let endowment: Vec<f64> = (0..goods).map(|_| rng.random_range(0.5..2.0)).collect();
            Consumer::cobb_douglas(shares, endowment).expect("valid consumer")
        })
        .collect();

    // excess demand of the pool at the target prices
    let mut xi = DVector::zeros(goods);
    for c in &pool {
        xi += c.demand(&p_star).expect("positive prices") - &c.endowment;
    }

    // final consumer absorbs the imbalance: with income m its demand is
    // a_j m / (p_j S), so endowment w_j = a_j m / (p_j S) + xi_j clears
    // market j exactly, and p'w = m holds automatically by Walras's law
    let shares: Vec<f64> = (0..goods).map(|_| rng.random_range(0.5..1.0)).collect();
    let share_sum: f64 = shares.iter().sum();
    let income = (0..goods)
        .map(|j| xi[j].abs() * p_star[j] * share_sum / shares[j])
        .fold(1.0, f64::max)
        * 2.0;
    let endowment: Vec<f64> = (0..goods)
        .map(|j| shares[j] * income / (p_star[j] * share_sum) + xi[j])
        .collect();
    pool.push(Consumer::cobb_douglas(shares, endowment).expect("valid consumer"));

    // activities: random columns projected so each loses money at p*
    let columns = DMatrix::from_fn(goods, activities, |_, _| rng.random_range(-1.0..1.0));
    let mut activity_matrix = columns;
    let p_norm_sq = p_star.dot(&p_star);
    for j in 0..activities {
        let mut col = activity_matrix.column_mut(j);
        let deficit = rng.random_range(0.05..0.2);
        let correction = (col.dot(&p_star) + deficit) / p_norm_sq;
        for d in 0..goods {
            col[d] -= correction * p_star[d];
        }
    }

    let economy = ProductionEconomy::new(pool, activity_matrix).expect("valid economy");
    EconomyModel {
        economy: Economy::Production(economy),
        known_equilibria: vec![KnownEquilibrium {
            prices: p_star,
            activities: Some(DVector::zeros(activities)),
            label: "constructed".into(),
        }],
    }
}

#[test]
fn criterion_5_forty_variable_synthetic_economy() {
    report("5 (synthetic 40-variable production economy)", (|| {
        let model = synthetic_production(25, 15, 8, 5);

        // the construction itself must certify before the solver runs
        let built = known_equilibrium_residual(&model, &model.known_equilibria[0])
            .map_err(|e| format!("constructed equilibrium: {e}"))?;
        if built > 1e-9 {
            return Err(format!(
                "constructed equilibrium has residual {built:.2e} (expected exact)"
            ));
        }

        let cfg = TraceConfig::default();
        let clock = Instant::now();
        let report = compute_equilibrium(&model, &ones(40), &cfg, Normalization::None)
            .map_err(|e| format!("solve failed: {e}"))?;
        let elapsed = clock.elapsed();
        if report.complementarity_residual > 1e-5 {
            return Err(format!(
                "residual {:.2e} (limit 1e-5)",
                report.complementarity_residual
            ));
        }
        if elapsed.as_secs_f64() >= 30.0 {
            return Err(format!("solve took {elapsed:.2?} (limit 30s)"));
        }
        let matched = report
            .matched_known_equilibrium
            .as_deref()
            .unwrap_or("an unlisted equilibrium");
        Ok(format!(
            "residual {:.2e}, {} steps, {elapsed:.2?}, reached {matched}",
            report.complementarity_residual, report.iterations
        ))
    })());
}

#[test]
fn criterion_6_property_suite() {
    report("6 (property suite)", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(6);

        // (a) homotopy identities and Jacobian consistency on every builtin:
        // the map vanishes identically at its anchor, collapses to the
        // square system at the far end, and its analytic Jacobian (with the
        // continuation-parameter column) matches central finite differences
        for builtin in Builtin::ALL {
            let model = builtin.model();
            let problem = compile(&model.economy, Normalization::None);
            let goods = model.economy.goods();
            let n = model.economy.dimension();
            let draw_point = |rng: &mut ChaCha8Rng| {
                DVector::from_fn(n, |k, _| {
                    if k < goods {
                        rng.random_range(0.2..2.5)
                    } else {
                        rng.random_range(0.1..2.0)
                    }
                })
            };
            for i in 0..100 {
                let anchor = HomotopyPoint::start(draw_point(&mut rng), draw_point(&mut rng));
                if i < 10 {
                    let at_anchor = problem
                        .homotopy_residual(&anchor, &anchor)
                        .map_err(|e| format!("{}: anchor eval failed: {e}", builtin.name()))?;
                    if at_anchor.amax() != 0.0 {
                        return Err(format!(
                            "{} point {i}: map is {:.2e} at its own anchor (expected exact 0)",
                            builtin.name(),
                            at_anchor.amax()
                        ));
                    }
                }

                let x = draw_point(&mut rng);
                let y = draw_point(&mut rng);
                if i < 10 {
                    let end = HomotopyPoint::new(x.clone(), y.clone(), 0.0);
                    let via_homotopy = problem
                        .homotopy_residual(&end, &anchor)
                        .map_err(|e| format!("{}: endpoint eval failed: {e}", builtin.name()))?;
                    let square = problem
                        .square_residual(&x, &y)
                        .map_err(|e| format!("{}: square eval failed: {e}", builtin.name()))?;
                    if via_homotopy != square {
                        return Err(format!(
                            "{} point {i}: map at the far end differs from the square system",
                            builtin.name()
                        ));
                    }
                }

                let point = HomotopyPoint::new(x, y, rng.random_range(0.05..0.95));
                let analytic = problem
                    .homotopy_jacobian(&point, &anchor)
                    .map_err(|e| format!("{}: jacobian failed: {e}", builtin.name()))?;
                let flat = point.to_flat();
                let numeric = fd_jacobian(
                    |w: &DVector<f64>| {
                        problem
                            .homotopy_residual(&HomotopyPoint::from_flat(n, w), &anchor)
                            .unwrap()
                    },
                    &flat,
                )
                .map_err(|e| format!("{}: fd jacobian failed: {e}", builtin.name()))?;
                let gap = (&analytic - &numeric).amax();
                let bound = 1e-5 * analytic.amax().max(1.0);
                if gap > bound {
                    return Err(format!(
                        "{} point {i}: jacobian gap {gap:.2e} exceeds {bound:.2e}",
                        builtin.name()
                    ));
                }
            }
        }

        // (b, c) budget identity and zero-degree homogeneity of excess demand
        for builtin in Builtin::ALL {
            let model = builtin.model();
            let exchange = match &model.economy {
                Economy::Exchange(e) => e.clone(),
                Economy::Production(p) => p.exchange.clone(),
            };
            let goods = exchange.goods();
            for _ in 0..100 {
                let p = DVector::from_fn(goods, |_, _| rng.random_range(0.1..3.0));
                let xi = exchange
                    .excess_demand(&p)
                    .map_err(|e| format!("{}: excess demand failed: {e}", builtin.name()))?;
                let value = p.dot(&xi).abs();
                if value > 1e-9 * (1.0 + xi.abs().sum()) {
                    return Err(format!(
                        "{}: budget identity violated by {value:.2e}",
                        builtin.name()
                    ));
                }
                let scaled = exchange
                    .excess_demand(&(&p * rng.random_range(0.5..3.0)))
                    .map_err(|e| format!("{}: excess demand failed: {e}", builtin.name()))?;
                let gap = (&xi - &scaled).amax();
                if gap > 1e-10 * (1.0 + xi.amax()) {
                    return Err(format!(
                        "{}: homogeneity violated by {gap:.2e}",
                        builtin.name()
                    ));
                }
            }
        }

        // (d) the least-norm solver realizes a right inverse
        for i in 0..100 {
            let m = rng.random_range(1..=5);
            let k = m + rng.random_range(1..=4);
            let a = DMatrix::from_fn(m, k, |_, _| rng.random_range(-2.0..2.0));
            let b = DVector::from_fn(m, |_, _| rng.random_range(-2.0..2.0));
            let z = walras::tracer::least_norm_solve(&a, &b)
                .map_err(|e| format!("matrix {i}: least-norm solve failed: {e}"))?;
            let gap = (&a * &z - &b).amax();
            if gap > 1e-8 * (1.0 + b.amax()) {
                return Err(format!("matrix {i}: A z deviates from b by {gap:.2e}"));
            }
        }

        // (e) homotopy solutions of 50 monotone LCPs match support enumeration
        for i in 0..50 {
            let n = 2 + (i % 3);
            let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let m = b.transpose() * &b + DMatrix::identity(n, n);
            let q = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let lcp = LcpInstance::new(m, q).expect("well-formed LCP");
            let enumerated = lcp_enumerate(&lcp);
            if enumerated.len() != 1 {
                return Err(format!(
                    "LCP {i}: enumeration found {} solutions (monotone, expected 1)",
                    enumerated.len()
                ));
            }
            let solution = solve_ncp(&lcp.to_ncp(), &ones(n), &ones(n), &TraceConfig::default())
                .map_err(|e| format!("LCP {i}: homotopy failed: {e}"))?;
            let gap = (&solution.x - &enumerated[0]).amax();
            if gap > 1e-5 {
                return Err(format!(
                    "LCP {i}: homotopy and enumeration disagree by {gap:.2e}"
                ));
            }
        }

        // (f) agreement with a dense Newton solve of the certified square
        // systems for the two builtins with interior reference equilibria
        {
            let model = Builtin::Ex1.model();
            let cfg = TraceConfig::default();
            let homotopy = compute_equilibrium(&model, &ones(2), &cfg, Normalization::None)
                .map_err(|e| format!("ex1 solve failed: {e}"))?;
            let square = compile(&model.economy, Normalization::ReplaceLastRow);
            let sq = square.clone();
            let newton = newton_square_solve(
                move |p: &DVector<f64>| square.eval_f(p).unwrap(),
                move |p: &DVector<f64>| sq.jacobian_f(p).unwrap(),
                &DVector::from_vec(homotopy.prices.clone()),
            )
            .map_err(|e| format!("ex1 square-system Newton failed: {e}"))?;
            let gap = inf_diff(&homotopy.prices, newton.as_slice());
            if gap > 1e-6 {
                return Err(format!("ex1: solvers disagree by {gap:.2e}"));
            }

            let model = Builtin::Ex4.model();
            let homotopy =
                compute_equilibrium(&model, &ones(4), &cfg, Normalization::ReplaceLastRow)
                    .map_err(|e| format!("ex4 solve failed: {e}"))?;
            let mut z0: Vec<f64> = homotopy.prices.clone();
            z0.extend(homotopy.activities.clone().expect("production model"));
            let square = compile(&model.economy, Normalization::ReplaceLastRow);
            let sq = square.clone();
            let newton = newton_square_solve(
                move |z: &DVector<f64>| square.eval_f(z).unwrap(),
                move |z: &DVector<f64>| sq.jacobian_f(z).unwrap(),
                &DVector::from_vec(z0.clone()),
            )
            .map_err(|e| format!("ex4 square-system Newton failed: {e}"))?;
            let gap = inf_diff(&z0, newton.as_slice());
            if gap > 1e-6 {
                return Err(format!("ex4: solvers disagree by {gap:.2e}"));
            }
        }

        // (g) determinism: identical inputs give identical outputs, down to
        // the rendered bytes
        {
            let model = Builtin::Ex3.model();
            let problem = compile(&model.economy, Normalization::ReplaceLastRow);
            let cfg = TraceConfig::default();
            let a = solve_ncp(&problem, &ones(12), &ones(12), &cfg)
                .map_err(|e| format!("determinism solve failed: {e}"))?;
            let b = solve_ncp(&problem, &ones(12), &ones(12), &cfg)
                .map_err(|e| format!("determinism solve failed: {e}"))?;
            if a != b {
                return Err("two identical solves differ structurally".into());
            }

            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let mut renders = Vec::new();
            for run in 0..2 {
                let json = dir.path().join(format!("run{run}.json"));
                let csv = dir.path().join(format!("run{run}.csv"));
                let mut out = Vec::new();
                let mut err = Vec::new();
                let code = walras::cli::run(
                    [
                        "solve",
                        "--builtin",
                        "ex2",
                        "--json",
                        json.to_str().unwrap(),
                        "--trace-csv",
                        csv.to_str().unwrap(),
                    ]
                    .map(String::from),
                    &mut out,
                    &mut err,
                );
                if code != 0 {
                    return Err(format!(
                        "determinism CLI run exited {code}: {}",
                        String::from_utf8_lossy(&err)
                    ));
                }
                renders.push((
                    out,
                    std::fs::read(&json).map_err(|e| e.to_string())?,
                    std::fs::read(&csv).map_err(|e| e.to_string())?,
                ));
            }
            if renders[0] != renders[1] {
                return Err("CLI output bytes differ between identical runs".into());
            }
        }

        Ok("jacobians, identities, pseudoinverse, 50 LCPs, cross-solver \
            agreement and byte determinism all hold"
            .into())
    })());
}
