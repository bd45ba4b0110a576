//! Bundled benchmark economies.
//!
//! Four models exercising every feature of the solver, addressable from the
//! command line as `ex1` … `ex4`:
//!
//! * `ex1` — two CES consumers trading two goods; has three equilibria, so
//!   different starts reach different price systems.
//! * `ex2` — five CES consumers with per-consumer elasticities trading ten
//!   goods; a single hard-to-reach equilibrium.
//! * `ex3` — two Cobb-Douglas consumers, four goods and eight linear
//!   activities; three equilibria with different active production plans.
//! * `ex4` — one Cobb-Douglas consumer, three goods and one activity; the
//!   smallest production economy with a unique equilibrium.

use nalgebra::{DMatrix, DVector};

use crate::economy::{
    Consumer, Economy, EconomyModel, ExchangeEconomy, KnownEquilibrium, ProductionEconomy,
};

/// Identifier of a bundled model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [Builtin::Ex1, Builtin::Ex2, Builtin::Ex3, Builtin::Ex4];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Ex1 => "ex1",
            Builtin::Ex2 => "ex2",
            Builtin::Ex3 => "ex3",
            Builtin::Ex4 => "ex4",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn description(self) -> &'static str {
        match self {
            Builtin::Ex1 => "two-good CES exchange economy with three equilibria",
            Builtin::Ex2 => "ten-good CES exchange economy with five consumers",
            Builtin::Ex3 => "four-good production economy with eight activities",
            Builtin::Ex4 => "three-good production economy with one activity",
        }
    }

    pub fn model(self) -> EconomyModel {
        match self {
            Builtin::Ex1 => ex1(),
            Builtin::Ex2 => ex2(),
            Builtin::Ex3 => ex3(),
            Builtin::Ex4 => ex4(),
        }
    }
}

fn eq(prices: Vec<f64>, activities: Option<Vec<f64>>, label: &str) -> KnownEquilibrium {
    KnownEquilibrium {
        prices: DVector::from_vec(prices),
        activities: activities.map(DVector::from_vec),
        label: label.to_string(),
    }
}

/// Two CES consumers with mirrored preferences and endowments. Besides the
/// symmetric equilibrium `(1/2, 1/2)` there are two asymmetric ones.
pub fn ex1() -> EconomyModel {
    let consumers = vec![
        Consumer::ces_a(vec![1024.0, 1.0], vec![12.0, 1.0]).expect("valid consumer"),
        Consumer::ces_a(vec![1.0, 1024.0], vec![1.0, 12.0]).expect("valid consumer"),
    ];
    let economy = ExchangeEconomy::new(consumers).expect("valid economy");
    EconomyModel {
        economy: Economy::Exchange(economy),
        known_equilibria: vec![
            eq(vec![0.5, 0.5], None, "p1*"),
            eq(vec![0.1129, 0.8871], None, "p2*"),
            eq(vec![0.8871, 0.1129], None, "p3*"),
        ],
    }
}

/// Five CES consumers with per-consumer elasticity exponents trading ten
/// goods.
pub fn ex2() -> EconomyModel {
    let shares = [
        vec![1.0, 1.0, 3.0, 0.1, 0.1, 1.2, 2.0, 1.0, 1.0, 0.7],
        vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        vec![9.9, 0.1, 5.0, 0.2, 6.0, 0.2, 8.0, 1.0, 1.0, 0.2],
        vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
        vec![1.0, 13.0, 11.0, 9.0, 4.0, 0.9, 8.0, 1.0, 2.0, 10.0],
    ];
    let elasticities = [2.0, 1.3, 3.0, 0.2, 0.6];
    let endowments = [
        vec![0.6, 0.2, 0.2, 20.0, 0.1, 2.0, 9.0, 5.0, 5.0, 15.0],
        vec![0.2, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0, 5.0, 5.0, 9.0],
        vec![0.4, 9.0, 8.0, 7.0, 6.0, 5.0, 4.0, 5.0, 7.0, 12.0],
        vec![1.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 8.0, 3.0, 17.0],
        vec![8.0, 1.0, 22.0, 10.0, 0.3, 0.9, 5.1, 0.1, 6.2, 11.0],
    ];
    let consumers = shares
        .into_iter()
        .zip(elasticities)
        .zip(endowments)
        .map(|((a, b), w)| Consumer::ces_b(a, b, w).expect("valid consumer"))
        .collect();
    let economy = ExchangeEconomy::new(consumers).expect("valid economy");
    EconomyModel {
        economy: Economy::Exchange(economy),
        known_equilibria: vec![eq(
            // high-precision refinement of the reference equilibrium, which
            // rounds to (0.187, 0.109, 0.099, 0.043, 0.117, 0.077, 0.117,
            // 0.102, 0.099, 0.049) at three decimals
            vec![
                1.872_625_406_189_364_3e-1,
                1.093_792_690_282_461_1e-1,
                9.889_618_993_819_504e-2,
                4.319_136_827_841_979_5e-2,
                1.168_665_233_179_885_2e-1,
                7.697_426_304_635_815e-2,
                1.169_656_406_476_657_9e-1,
                1.023_808_927_333_587e-1,
                9.869_098_203_630_547e-2,
                4.939_233_035_452_613_6e-2,
            ],
            None,
            "p*",
        )],
    }
}

/// Two Cobb-Douglas consumers, four goods, eight activities. The first four
/// activities are free disposal of each good; the rest transform goods into
/// the two consumption goods.
pub fn ex3() -> EconomyModel {
    let consumers = vec![
        Consumer::cobb_douglas(vec![0.8, 0.2, 0.0, 0.0], vec![0.0, 0.0, 10.0, 0.0])
            .expect("valid consumer"),
        Consumer::cobb_douglas(vec![0.1, 0.9, 0.0, 0.0], vec![0.0, 0.0, 0.0, 20.0])
            .expect("valid consumer"),
    ];
    #[rustfmt::skip]
    let activity_matrix = DMatrix::from_row_slice(4, 8, &[
        -1.0,  0.0,  0.0,  0.0,  3.0,  5.0, -1.0, -1.0,
         0.0, -1.0,  0.0,  0.0, -1.0, -1.0,  5.0,  5.0,
         0.0,  0.0, -1.0,  0.0, -1.0, -1.0, -1.0, -4.0,
         0.0,  0.0,  0.0, -1.0, -1.0, -4.0, -3.0, -1.0,
    ]);
    let economy =
        ProductionEconomy::new(consumers, activity_matrix).expect("valid economy");
    EconomyModel {
        economy: Economy::Production(economy),
        known_equilibria: vec![
            eq(
                vec![0.25, 0.25, 0.25, 0.25],
                Some(vec![0.0, 0.0, 0.0, 0.0, 5.0, 0.0, 5.0, 0.0]),
                "p1*",
            ),
            eq(
                vec![9.0 / 36.0, 8.0 / 36.0, 13.0 / 36.0, 6.0 / 36.0],
                Some(vec![
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    373.0 / 72.0,
                    13.0 / 36.0,
                    107.0 / 24.0,
                    0.0,
                ]),
                "p2*",
            ),
            eq(
                vec![18.0 / 72.0, 19.0 / 72.0, 14.0 / 72.0, 21.0 / 72.0],
                Some(vec![
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                    1567.0 / 342.0,
                    0.0,
                    583.0 / 114.0,
                    13.0 / 171.0,
                ]),
                "p3*",
            ),
        ],
    }
}

/// One Cobb-Douglas consumer, three goods, and a single activity that turns
/// one unit each of goods 2 and 3 into a unit of good 1.
pub fn ex4() -> EconomyModel {
    let consumers = vec![
        Consumer::cobb_douglas(vec![0.9, 0.1, 0.0], vec![0.0, 5.0, 3.0]).expect("valid consumer"),
    ];
    let activity_matrix = DMatrix::from_column_slice(3, 1, &[1.0, -1.0, -1.0]);
    let economy =
        ProductionEconomy::new(consumers, activity_matrix).expect("valid economy");
    EconomyModel {
        economy: Economy::Production(economy),
        known_equilibria: vec![eq(
            vec![0.5, 1.0 / 12.0, 5.0 / 12.0],
            Some(vec![3.0]),
            "p*",
        )],
    }
}
