//! Fit the four shallow multi-label classifiers on one bearing-wise plan
//! of the synthetic dataset and compare per-mode AUROC.

use bearing_eval::eval::{evaluate_plan, FeatureStore, PipelineConfig};
use bearing_eval::models::{ModelKind, ModelSpec};
use bearing_eval::splits::generate_bearing_wise_splits;
use bearing_eval::synthetic::{write_benchmark_dataset, BenchmarkParams};

fn main() -> bearing_eval::Result<()> {
    let dir = std::env::temp_dir().join("bearing-eval-shallow");
    let dataset = write_benchmark_dataset(&dir, &BenchmarkParams::default(), 21)?;
    let (_, eval_plans) = generate_bearing_wise_splits(&dataset, (3, 2), 0, 1, 21)?;
    let plan = &eval_plans[0];

    let config = PipelineConfig {
        band_high_hz: 6_000.0,
        ..PipelineConfig::default()
    };
    let store = FeatureStore::new(&dataset, config.band_low_hz, config.band_high_hz);

    println!("plan {} (bearing-wise), combined time+envelope features", plan.plan_id);
    println!(
        "{:<22} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "model", "inner", "outer", "ball", "cage", "macro"
    );
    for kind in [
        ModelKind::LogisticRegression,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::LinearSvm,
    ] {
        let spec = ModelSpec::new(kind, 3);
        let result = evaluate_plan(&spec, plan, &store, &config)?;
        print!("{:<22}", kind.name());
        for v in &result.per_mode_auroc {
            match v {
                Some(v) => print!(" {v:>8.4}"),
                None => print!(" {:>8}", "n/a"),
            }
        }
        println!(" {:>8.4}", result.macro_auroc);
    }
    Ok(())
}
