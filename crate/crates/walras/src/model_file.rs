//! JSON model files.
//!
//! A model file describes one economy and, optionally, its known
//! equilibria:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "kind": "production",
//!   "goods": 3,
//!   "consumers": [
//!     {
//!       "family": "cobb-douglas",
//!       "shares": [0.9, 0.1, 0.0],
//!       "endowment": [0.0, 5.0, 3.0]
//!     }
//!   ],
//!   "activity_matrix": [[1.0], [-1.0], [-1.0]],
//!   "known_equilibria": [
//!     { "prices": [0.5, 0.0833, 0.4167], "activities": [3.0], "label": "p*" }
//!   ]
//! }
//! ```
//!
//! `family` is one of `ces-a`, `ces-b` (which requires `elasticity`) or
//! `cobb-douglas`; `activity_matrix` is given row by row, one row per good,
//! and is only allowed — and required — when `kind` is `production`.
//! Unknown fields are rejected so typos surface as errors.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::economy::{
    Consumer, DemandFamily, Economy, EconomyModel, ExchangeEconomy, KnownEquilibrium,
    ProductionEconomy,
};
use crate::error::{Error, Result};

/// The schema generation this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// On-disk form of an [`EconomyModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub kind: ModelKind,
    pub goods: usize,
    pub consumers: Vec<ConsumerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activity_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub known_equilibria: Vec<KnownEquilibriumSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Exchange,
    Production,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsumerSpec {
    pub family: DemandFamily,
    pub shares: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elasticity: Option<f64>,
    pub endowment: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnownEquilibriumSpec {
    pub prices: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activities: Option<Vec<f64>>,
    #[serde(default)]
    pub label: String,
}

impl ModelFile {
    /// Validates the file and builds the in-memory model. Errors name the
    /// offending field.
    pub fn into_model(self) -> Result<EconomyModel> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidModel(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        if self.goods == 0 {
            return Err(Error::InvalidModel("goods: must be at least 1".into()));
        }
        if self.consumers.is_empty() {
            return Err(Error::InvalidModel(
                "consumers: at least one consumer is required".into(),
            ));
        }

        let mut consumers = Vec::with_capacity(self.consumers.len());
        for (i, spec) in self.consumers.into_iter().enumerate() {
            if spec.shares.len() != self.goods {
                return Err(Error::InvalidModel(format!(
                    "consumers[{i}].shares: expected {} entries, got {}",
                    self.goods,
                    spec.shares.len()
                )));
            }
            if spec.endowment.len() != self.goods {
                return Err(Error::InvalidModel(format!(
                    "consumers[{i}].endowment: expected {} entries, got {}",
                    self.goods,
                    spec.endowment.len()
                )));
            }
            let consumer =
                Consumer::build(spec.family, spec.shares, spec.elasticity, spec.endowment)
                    .map_err(|e| match e {
                        Error::InvalidModel(msg) => {
                            Error::InvalidModel(format!("consumers[{i}]: {msg}"))
                        }
                        other => other,
                    })?;
            consumers.push(consumer);
        }

        let economy = match self.kind {
            ModelKind::Exchange => {
                if self.activity_matrix.is_some() {
                    return Err(Error::InvalidModel(
                        "activity_matrix: not allowed when kind is \"exchange\"".into(),
                    ));
                }
                Economy::Exchange(ExchangeEconomy::new(consumers)?)
            }
            ModelKind::Production => {
                let Some(rows) = self.activity_matrix else {
                    return Err(Error::InvalidModel(
                        "activity_matrix: required when kind is \"production\"".into(),
                    ));
                };
                if rows.len() != self.goods {
                    return Err(Error::InvalidModel(format!(
                        "activity_matrix: expected {} rows (one per good), got {}",
                        self.goods,
                        rows.len()
                    )));
                }
                let width = rows[0].len();
                if width == 0 {
                    return Err(Error::InvalidModel(
                        "activity_matrix: rows must not be empty".into(),
                    ));
                }
                if let Some(i) = rows.iter().position(|r| r.len() != width) {
                    return Err(Error::InvalidModel(format!(
                        "activity_matrix[{i}]: expected {width} entries, got {}",
                        rows[i].len()
                    )));
                }
                let matrix =
                    DMatrix::from_fn(self.goods, width, |d, j| rows[d][j]);
                Economy::Production(ProductionEconomy::new(consumers, matrix)?)
            }
        };

        let mut known_equilibria = Vec::with_capacity(self.known_equilibria.len());
        for (i, spec) in self.known_equilibria.into_iter().enumerate() {
            if spec.prices.len() != self.goods {
                return Err(Error::InvalidModel(format!(
                    "known_equilibria[{i}].prices: expected {} entries, got {}",
                    self.goods,
                    spec.prices.len()
                )));
            }
            let activities = match (spec.activities, &economy) {
                (None, _) => None,
                (Some(_), Economy::Exchange(_)) => {
                    return Err(Error::InvalidModel(format!(
                        "known_equilibria[{i}].activities: not allowed in an exchange model"
                    )));
                }
                (Some(y), Economy::Production(p)) => {
                    if y.len() != p.activities() {
                        return Err(Error::InvalidModel(format!(
                            "known_equilibria[{i}].activities: expected {} entries, got {}",
                            p.activities(),
                            y.len()
                        )));
                    }
                    Some(DVector::from_vec(y))
                }
            };
            known_equilibria.push(KnownEquilibrium {
                prices: DVector::from_vec(spec.prices),
                activities,
                label: if spec.label.is_empty() {
                    format!("eq{}", i + 1)
                } else {
                    spec.label
                },
            });
        }

        Ok(EconomyModel {
            economy,
            known_equilibria,
        })
    }

    /// Serializable snapshot of an in-memory model.
    pub fn from_model(model: &EconomyModel) -> ModelFile {
        let (kind, goods, activity_matrix, consumers) = match &model.economy {
            Economy::Exchange(e) => (ModelKind::Exchange, e.goods(), None, e.consumers()),
            Economy::Production(p) => {
                let a = p.activity_matrix();
                let rows = (0..a.nrows())
                    .map(|d| a.row(d).iter().copied().collect())
                    .collect();
                (
                    ModelKind::Production,
                    p.goods(),
                    Some(rows),
                    p.exchange.consumers(),
                )
            }
        };
        ModelFile {
            schema_version: SCHEMA_VERSION,
            kind,
            goods,
            consumers: consumers
                .iter()
                .map(|c| ConsumerSpec {
                    family: c.family,
                    shares: c.shares.iter().copied().collect(),
                    elasticity: c.elasticity,
                    endowment: c.endowment.iter().copied().collect(),
                })
                .collect(),
            activity_matrix,
            known_equilibria: model
                .known_equilibria
                .iter()
                .map(|eq| KnownEquilibriumSpec {
                    prices: eq.prices.iter().copied().collect(),
                    activities: eq.activities.as_ref().map(|y| y.iter().copied().collect()),
                    label: eq.label.clone(),
                })
                .collect(),
        }
    }
}

/// Reads and validates a model file.
pub fn load(path: impl AsRef<Path>) -> Result<EconomyModel> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text)?;
    file.into_model()
}

/// Writes a model as pretty-printed JSON.
pub fn save(path: impl AsRef<Path>, model: &EconomyModel) -> Result<()> {
    let file = ModelFile::from_model(model);
    let text = serde_json::to_string_pretty(&file)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
