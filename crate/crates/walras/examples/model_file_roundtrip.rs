//! Write a model to JSON, load it back, and solve it — the same format the
//! CLI consumes via `--model`.
//!
//! ```sh
//! cargo run --example model_file_roundtrip
//! ```

use nalgebra::DVector;
use walras::economy::{compute_equilibrium, Normalization};
use walras::model_file::{self, ModelFile};
use walras::tracer::TraceConfig;

fn main() {
    let dir = std::env::temp_dir().join("walras_model_example");
    std::fs::create_dir_all(&dir).expect("can create temp dir");
    let path = dir.join("small_production.json");

    // the JSON schema, written by hand; `walras validate --model <path>`
    // performs the same checks as `model_file::load`
    let text = r#"{
  "schema_version": 1,
  "kind": "production",
  "goods": 3,
  "consumers": [
    {
      "family": "cobb-douglas",
      "shares": [0.9, 0.1, 0.0],
      "endowment": [0.0, 5.0, 3.0]
    }
  ],
  "activity_matrix": [[1.0], [-1.0], [-1.0]],
  "known_equilibria": [
    {
      "prices": [0.5, 0.08333333333333333, 0.4166666666666667],
      "activities": [3.0],
      "label": "p*"
    }
  ]
}"#;
    std::fs::write(&path, text).expect("can write model file");

    let model = model_file::load(&path).expect("file is valid");
    println!("loaded {} ({} goods, {} activities)", path.display(),
        model.economy.goods(), model.economy.activities());

    let start = DVector::from_element(model.economy.dimension(), 1.0);
    let report = compute_equilibrium(
        &model,
        &start,
        &TraceConfig::default(),
        Normalization::ReplaceLastRow,
    )
    .expect("model has an equilibrium");
    println!(
        "solved: prices {:?}, activities {:?}, matches {:?}",
        report.prices,
        report.activities,
        report.matched_known_equilibrium
    );

    // models built in code serialize to the same schema
    let snapshot = ModelFile::from_model(&model);
    let rendered = serde_json::to_string_pretty(&snapshot).expect("serializable");
    let reparsed: ModelFile = serde_json::from_str(&rendered).expect("parseable");
    assert_eq!(reparsed.into_model().expect("valid"), model);
    println!("round trip through JSON preserved the model exactly");

    std::fs::remove_file(&path).ok();
}
