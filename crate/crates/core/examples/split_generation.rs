//! Bearing-wise split generation for the three dataset layouts, with their
//! standard protocol counts, written to plan files.

use std::collections::BTreeSet;

use bearing_eval::datamodel::{plans_to_string, PlanItem};
use bearing_eval::splits::{
    generate_cwru_3fold, generate_cwru_splits, generate_pu_splits, generate_uored_splits,
};
use bearing_eval::synthetic;

fn main() -> bearing_eval::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("bearing-eval-splits"));
    std::fs::create_dir_all(&out_dir)?;

    // UORED: 5 bearings per fault mode, 3-of-5 train => C(5,3)^4 = 10^4
    let uored = synthetic::uored_metadata_manifest();
    let (tuning, eval) = generate_uored_splits(&uored, 5, 100, 42)?;
    println!(
        "uored: {} tuning + {} eval plans (combination space 10^4)",
        tuning.len(),
        eval.len()
    );
    let index = uored.index();
    let train_bearings: BTreeSet<&str> = eval[0]
        .train_items
        .iter()
        .map(|i: &PlanItem| index[i.acquisition_id.as_str()].bearing_id.as_str())
        .collect();
    println!(
        "  first eval plan: {} train bearings x 3 states = {} train signals",
        train_bearings.len(),
        eval[0].train_items.len()
    );
    std::fs::write(
        out_dir.join("uored_plans.tsv"),
        plans_to_string(&tuning) + &plans_to_string(&eval),
    )?;

    // PU: 4:2 healthy, 4:2 inner, 3:2 outer => 15 * 15 * 10 = 2250
    let pu = synthetic::pu_metadata_manifest();
    let (tuning, eval) = generate_pu_splits(&pu, 5, 100, 42)?;
    println!(
        "pu:    {} tuning + {} eval plans (combination space 2250)",
        tuning.len(),
        eval.len()
    );
    std::fs::write(
        out_dir.join("pu_plans.tsv"),
        plans_to_string(&tuning) + &plans_to_string(&eval),
    )?;

    // CWRU: one fault size per location-type pair held out, both
    // healthy-side scenarios => 50 splits = 100 evaluation plans
    let cwru = synthetic::cwru_metadata_manifest();
    let plans = generate_cwru_splits(&cwru, 50, 42)?;
    let folds = generate_cwru_3fold(&cwru, 42)?;
    println!(
        "cwru:  {} tuning plans (3-fold x 2 sides) + {} eval plans (50 splits x 2 sides)",
        folds.len(),
        plans.len()
    );
    std::fs::write(
        out_dir.join("cwru_plans.tsv"),
        plans_to_string(&folds) + &plans_to_string(&plans),
    )?;

    println!("plan files written to {}", out_dir.display());
    Ok(())
}
