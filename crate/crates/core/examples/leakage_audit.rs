//! Derive every deliberately-leaky plan flavour and run the provenance
//! auditor over each: the finding must match the construction.

use bearing_eval::splits::{
    audit_split, generate_leaky_plan, generate_pu_splits, generate_uored_splits,
    generate_cwru_splits, LeakyMode,
};
use bearing_eval::synthetic;

fn main() -> bearing_eval::Result<()> {
    let uored = synthetic::uored_metadata_manifest();
    let pu = synthetic::pu_metadata_manifest();
    let cwru = synthetic::cwru_metadata_manifest();

    let (_, uored_eval) = generate_uored_splits(&uored, 0, 1, 9)?;
    let (_, pu_eval) = generate_pu_splits(&pu, 0, 1, 9)?;
    let cwru_eval = generate_cwru_splits(&cwru, 1, 9)?;

    let cases: Vec<(&str, &bearing_eval::datamodel::Dataset, _, LeakyMode)> = vec![
        ("uored", &uored, &uored_eval[0], LeakyMode::Segmentation { holdout_fraction: 0.2 }),
        ("uored", &uored, &uored_eval[0], LeakyMode::UoredSevereReinsertion),
        ("pu", &pu, &pu_eval[0], LeakyMode::Segmentation { holdout_fraction: 0.25 }),
        ("pu", &pu, &pu_eval[0], LeakyMode::PuConditionHoldout),
        ("pu", &pu, &pu_eval[0], LeakyMode::PuRepetitionHoldout { train_reps: 15, test_reps: 5 }),
        ("cwru", &cwru, &cwru_eval[0], LeakyMode::CwruConditionGroups),
    ];

    println!("{:<7} {:<26} {:<20} witness", "dataset", "leaky mode", "audit finding");
    for (name, dataset, base, mode) in cases {
        let plan = generate_leaky_plan(dataset, base, &mode, 9)?;
        let finding = audit_split(&plan, dataset)?;
        let witness = finding
            .witnesses
            .first()
            .map(|w| w.to_string())
            .unwrap_or_default();
        println!("{:<7} {:<26} {:<20} {witness}", name, mode.name(), finding.class.to_string());
        assert_eq!(finding.class, mode.expected_finding());
    }

    // the generators' own plans audit clean
    let finding = audit_split(&uored_eval[0], &uored)?;
    println!("{:<7} {:<26} {:<20}", "uored", "(generator output)", finding.class.to_string());
    assert!(finding.is_clean());
    Ok(())
}
