//! Deliberately-leaky plan derivation: each mode reproduces one of the
//! flawed partitioning protocols so the auditor and the end-to-end
//! leakage experiments have known-bad inputs.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datamodel::{
    AcquisitionRecord, Dataset, Granularity, PlanItem, Severity, SplitKind, SplitPlan,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum LeakyMode {
    /// Train on the leading `1 - holdout_fraction` of each training
    /// signal, test on the held-out tails of those same signals.
    Segmentation { holdout_fraction: f64 },
    /// Severe-fault signals of train bearings move into the test set,
    /// displacing an equal number of severe-fault test signals per mode.
    UoredSevereReinsertion,
    /// Three of the four operating conditions train; the held-out
    /// condition of the same bearings tests.
    PuConditionHoldout,
    /// First `train_reps` repetitions train, the following `test_reps`
    /// test, per (bearing, condition) of the training bearings.
    PuRepetitionHoldout { train_reps: usize, test_reps: usize },
    /// Train on one (load, fault-size) group; test on the same-size
    /// groups at the other loads (same physical bearings).
    CwruConditionGroups,
}

impl LeakyMode {
    pub fn name(&self) -> &'static str {
        match self {
            LeakyMode::Segmentation { .. } => "segmentation",
            LeakyMode::UoredSevereReinsertion => "uored_severe_reinsertion",
            LeakyMode::PuConditionHoldout => "pu_condition_holdout",
            LeakyMode::PuRepetitionHoldout { .. } => "pu_repetition_holdout",
            LeakyMode::CwruConditionGroups => "cwru_condition_groups",
        }
    }

    /// The audit taxonomy class this mode's plans must be found guilty of.
    pub fn expected_finding(&self) -> super::FindingClass {
        match self {
            LeakyMode::Segmentation { .. } => super::FindingClass::SegmentationLevel,
            LeakyMode::PuRepetitionHoldout { .. } => super::FindingClass::RepetitionWise,
            _ => super::FindingClass::ConditionWise,
        }
    }
}

fn resolve<'a>(dataset: &'a Dataset, item: &PlanItem) -> Result<&'a AcquisitionRecord> {
    dataset.record(&item.acquisition_id).ok_or_else(|| {
        Error::Split(format!("unresolvable item '{}'", item.acquisition_id))
    })
}

fn train_bearing_records<'a>(
    dataset: &'a Dataset,
    base: &SplitPlan,
) -> Result<Vec<&'a AcquisitionRecord>> {
    let mut bearings: BTreeSet<&str> = BTreeSet::new();
    for item in &base.train_items {
        bearings.insert(resolve(dataset, item)?.bearing_id.as_str());
    }
    Ok(dataset
        .records
        .iter()
        .filter(|r| bearings.contains(r.bearing_id.as_str()))
        .collect())
}

/// Derive a leaky plan from a bearing-wise base plan. `seed` drives every
/// random choice the mode makes (severity displacement, held-out
/// condition, group selection).
pub fn generate_leaky_plan(
    dataset: &Dataset,
    base: &SplitPlan,
    mode: &LeakyMode,
    seed: u64,
) -> Result<SplitPlan> {
    match mode {
        LeakyMode::Segmentation { holdout_fraction } => {
            segmentation_plan(dataset, base, *holdout_fraction)
        }
        LeakyMode::UoredSevereReinsertion => severe_reinsertion_plan(dataset, base, seed),
        LeakyMode::PuConditionHoldout => condition_holdout_plan(dataset, base, seed),
        LeakyMode::PuRepetitionHoldout {
            train_reps,
            test_reps,
        } => repetition_holdout_plan(dataset, base, *train_reps, *test_reps),
        LeakyMode::CwruConditionGroups => cwru_group_plan(dataset, seed, true),
    }
}

fn segmentation_plan(dataset: &Dataset, base: &SplitPlan, fraction: f64) -> Result<SplitPlan> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Split(format!(
            "holdout fraction {fraction} outside (0, 1)"
        )));
    }
    if base.granularity != Granularity::Acquisition {
        return Err(Error::Split(
            "segmentation mode needs an acquisition-granularity base plan".into(),
        ));
    }
    let mut train_items = BTreeSet::new();
    let mut test_items = BTreeSet::new();
    for item in &base.train_items {
        let rec = resolve(dataset, item)?;
        let n = rec.expected_samples();
        let cut = ((n as f64) * (1.0 - fraction)).round() as u64;
        if cut == 0 || cut >= n {
            return Err(Error::Split(format!(
                "fraction {fraction} leaves an empty side of '{}'",
                rec.acquisition_id
            )));
        }
        train_items.insert(PlanItem::segment(rec.acquisition_id.clone(), 0, cut));
        test_items.insert(PlanItem::segment(rec.acquisition_id.clone(), cut, n));
    }
    let mut metadata = base.metadata.clone();
    metadata.insert("holdout_fraction".to_string(), fraction.to_string());
    metadata.insert("leak_mode".to_string(), "segmentation".to_string());
    metadata.insert("base_plan".to_string(), base.plan_id.clone());
    SplitPlan::new(
        format!("{}-seg", base.plan_id),
        Granularity::Segment,
        SplitKind::SegmentationLevel,
        train_items,
        test_items,
        metadata,
    )
}

fn severe_reinsertion_plan(dataset: &Dataset, base: &SplitPlan, seed: u64) -> Result<SplitPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profile = &dataset.profile;

    // severe-fault items per fault mode, on each side
    let severe_by_mode = |items: &BTreeSet<PlanItem>| -> Result<BTreeMap<usize, Vec<PlanItem>>> {
        let mut map: BTreeMap<usize, Vec<PlanItem>> = BTreeMap::new();
        for item in items {
            let rec = resolve(dataset, item)?;
            if rec.severity == Some(Severity::Strong) {
                if let Some(mode) = (0..profile.n_fault_modes()).find(|&i| rec.label.bit(i)) {
                    map.entry(mode).or_default().push(item.clone());
                }
            }
        }
        Ok(map)
    };
    let train_severe = severe_by_mode(&base.train_items)?;
    let test_severe = severe_by_mode(&base.test_items)?;
    if train_severe.is_empty() {
        return Err(Error::Split(
            "base plan has no severe-fault training signals to reinsert".into(),
        ));
    }

    // all severe signals leave the training side
    let mut train_items = base.train_items.clone();
    for items in train_severe.values() {
        for item in items {
            train_items.remove(item);
        }
    }

    let mut test_items = base.test_items.clone();
    for (mode, movable) in &train_severe {
        let displaceable = test_severe.get(mode).cloned().unwrap_or_default();
        let k = movable.len().min(displaceable.len());
        if k == 0 {
            continue;
        }
        let moved = sample_indices(&mut rng, movable.len(), k).into_vec();
        let displaced = sample_indices(&mut rng, displaceable.len(), k).into_vec();
        for &i in &displaced {
            test_items.remove(&displaceable[i]);
        }
        for &i in &moved {
            test_items.insert(movable[i].clone());
        }
    }

    let mut metadata = base.metadata.clone();
    metadata.insert("leak_mode".to_string(), "uored_severe_reinsertion".to_string());
    metadata.insert("base_plan".to_string(), base.plan_id.clone());
    SplitPlan::new(
        format!("{}-sev", base.plan_id),
        Granularity::Acquisition,
        SplitKind::ConditionWise,
        train_items,
        test_items,
        metadata,
    )
}

fn condition_holdout_plan(dataset: &Dataset, base: &SplitPlan, seed: u64) -> Result<SplitPlan> {
    let records = train_bearing_records(dataset, base)?;
    let conditions: BTreeSet<&str> = records.iter().map(|r| r.condition_id.as_str()).collect();
    if conditions.len() < 2 {
        return Err(Error::Split(format!(
            "condition holdout needs at least 2 conditions, found {}",
            conditions.len()
        )));
    }
    let conditions: Vec<&str> = conditions.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let held_out = conditions[rng.random_range(0..conditions.len())];

    let mut train_items = BTreeSet::new();
    let mut test_items = BTreeSet::new();
    for rec in records {
        let item = PlanItem::whole(rec.acquisition_id.clone());
        if rec.condition_id == held_out {
            test_items.insert(item);
        } else {
            train_items.insert(item);
        }
    }
    let mut metadata = base.metadata.clone();
    metadata.insert("leak_mode".to_string(), "pu_condition_holdout".to_string());
    metadata.insert("held_out_condition".to_string(), held_out.to_string());
    metadata.insert("base_plan".to_string(), base.plan_id.clone());
    SplitPlan::new(
        format!("{}-cond", base.plan_id),
        Granularity::Acquisition,
        SplitKind::ConditionWise,
        train_items,
        test_items,
        metadata,
    )
}

fn repetition_holdout_plan(
    dataset: &Dataset,
    base: &SplitPlan,
    train_reps: usize,
    test_reps: usize,
) -> Result<SplitPlan> {
    if train_reps == 0 || test_reps == 0 {
        return Err(Error::Split("repetition counts must be positive".into()));
    }
    let records = train_bearing_records(dataset, base)?;
    let mut groups: BTreeMap<(&str, &str), Vec<&AcquisitionRecord>> = BTreeMap::new();
    for rec in records {
        groups
            .entry((rec.bearing_id.as_str(), rec.condition_id.as_str()))
            .or_default()
            .push(rec);
    }

    let mut train_items = BTreeSet::new();
    let mut test_items = BTreeSet::new();
    for ((bearing, condition), mut recs) in groups {
        if recs.len() < train_reps + test_reps {
            return Err(Error::Split(format!(
                "bearing '{bearing}' condition '{condition}' has {} repetitions, {} needed",
                recs.len(),
                train_reps + test_reps
            )));
        }
        recs.sort_by_key(|r| r.repetition);
        for rec in &recs[..train_reps] {
            train_items.insert(PlanItem::whole(rec.acquisition_id.clone()));
        }
        for rec in &recs[train_reps..train_reps + test_reps] {
            test_items.insert(PlanItem::whole(rec.acquisition_id.clone()));
        }
    }
    let mut metadata = base.metadata.clone();
    metadata.insert("leak_mode".to_string(), "pu_repetition_holdout".to_string());
    metadata.insert(
        "repetition_ratio".to_string(),
        format!("{train_reps}:{test_reps}"),
    );
    metadata.insert("base_plan".to_string(), base.plan_id.clone());
    SplitPlan::new(
        format!("{}-rep", base.plan_id),
        Granularity::Acquisition,
        SplitKind::RepetitionWise,
        train_items,
        test_items,
        metadata,
    )
}

/// The 12-group CWRU protocol: groups are (load, fault size) over all six
/// location-type cells. `leaky` tests the same-size groups at other loads
/// (same bearings, other conditions); the control tests the
/// different-size groups, faulty channels only.
pub(crate) fn cwru_group_plan(dataset: &Dataset, seed: u64, leaky: bool) -> Result<SplitPlan> {
    let grid = super::parse_cwru_grid(dataset)?;

    // load axis: each faulty bearing's runs sorted by condition id
    let mut bearing_runs: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (cond, run) in &grid.runs {
        for rec in run.values() {
            if !rec.label.is_healthy() {
                bearing_runs.entry(rec.bearing_id.as_str()).or_default().push(cond);
            }
        }
    }
    let mut n_loads = None;
    for runs in bearing_runs.values_mut() {
        runs.sort();
        match n_loads {
            None => n_loads = Some(runs.len()),
            Some(n) if n != runs.len() => {
                return Err(Error::Split(
                    "faulty bearings disagree on the number of load conditions".into(),
                ))
            }
            _ => {}
        }
    }
    let n_loads = n_loads.ok_or_else(|| Error::Split("no faulty runs found".into()))?;
    let n_sizes = grid.cells.values().next().map(Vec::len).unwrap_or(0);
    if n_loads < 2 || n_sizes < 2 {
        return Err(Error::Split(format!(
            "group protocol needs >= 2 loads and >= 2 sizes, found {n_loads} loads, {n_sizes} sizes"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train_load = rng.random_range(0..n_loads);
    let train_size = rng.random_range(0..n_sizes);

    // group membership: (size index via cell position, load index via run order)
    let mut train_items = BTreeSet::new();
    let mut test_items = BTreeSet::new();
    for members in grid.cells.values() {
        for (size_idx, bearing) in members.iter().enumerate() {
            let runs = &bearing_runs[bearing.as_str()];
            for (load_idx, cond) in runs.iter().enumerate() {
                let in_train = size_idx == train_size && load_idx == train_load;
                let in_test = if leaky {
                    size_idx == train_size && load_idx != train_load
                } else {
                    size_idx != train_size
                };
                if !(in_train || in_test) {
                    continue;
                }
                for rec in grid.runs[cond].values() {
                    // the control stays faulty-only: the two healthy
                    // bearings span every group and would always leak
                    if !leaky && rec.label.is_healthy() {
                        continue;
                    }
                    let item = PlanItem::whole(rec.acquisition_id.clone());
                    if in_train {
                        train_items.insert(item);
                    } else {
                        test_items.insert(item);
                    }
                }
            }
        }
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("seed".to_string(), seed.to_string());
    metadata.insert(
        "train_group".to_string(),
        format!("load{train_load}_size{train_size}"),
    );
    if leaky {
        metadata.insert("leak_mode".to_string(), "cwru_condition_groups".to_string());
    }
    SplitPlan::new(
        if leaky {
            format!("cwru-groups-leaky-{seed}")
        } else {
            format!("cwru-groups-control-{seed}")
        },
        Granularity::Acquisition,
        if leaky {
            SplitKind::ConditionWise
        } else {
            SplitKind::BearingWise
        },
        train_items,
        test_items,
        metadata,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splits::{generate_pu_splits, generate_uored_splits};
    use crate::synthetic;

    #[test]
    fn segmentation_tails_match_the_published_fractions() {
        let dataset = synthetic::uored_metadata_manifest();
        let (_, eval) = generate_uored_splits(&dataset, 0, 1, 1).unwrap();
        let plan = generate_leaky_plan(
            &dataset,
            &eval[0],
            &LeakyMode::Segmentation {
                holdout_fraction: 0.2,
            },
            1,
        )
        .unwrap();
        assert_eq!(plan.granularity, Granularity::Segment);
        // 10 s at 42 kHz: head = 336000 samples, tail 84000
        assert_eq!(plan.train_items.len(), 36);
        assert_eq!(plan.test_items.len(), 36);
        for item in &plan.train_items {
            assert_eq!(item.range, Some((0, 336_000)));
        }
        for item in &plan.test_items {
            assert_eq!(item.range, Some((336_000, 420_000)));
        }

        // PU: removing the final 25% of each recording
        let pu = synthetic::pu_metadata_manifest();
        let (_, pu_eval) = generate_pu_splits(&pu, 0, 1, 2).unwrap();
        let plan = generate_leaky_plan(
            &pu,
            &pu_eval[0],
            &LeakyMode::Segmentation {
                holdout_fraction: 0.25,
            },
            2,
        )
        .unwrap();
        for item in &plan.test_items {
            // 10 s at 64 kHz: tail is the final 160000 samples
            assert_eq!(item.range, Some((480_000, 640_000)));
        }

        assert!(generate_leaky_plan(
            &dataset,
            &eval[0],
            &LeakyMode::Segmentation {
                holdout_fraction: 1.2
            },
            1
        )
        .is_err());
    }

    #[test]
    fn severe_reinsertion_preserves_test_size_and_balance() {
        let dataset = synthetic::uored_metadata_manifest();
        let (_, eval) = generate_uored_splits(&dataset, 0, 1, 4).unwrap();
        let base = &eval[0];
        let plan =
            generate_leaky_plan(&dataset, base, &LeakyMode::UoredSevereReinsertion, 4).unwrap();

        // training loses every severe signal: 36 - 12
        assert_eq!(plan.train_items.len(), 24);
        // test size preserved: per mode, 2 displaced by 2 reinserted
        assert_eq!(plan.test_items.len(), base.test_items.len());

        // reinserted items come from train bearings
        let train_bearings: BTreeSet<&str> = base
            .train_items
            .iter()
            .map(|i| dataset.record(&i.acquisition_id).unwrap().bearing_id.as_str())
            .collect();
        let leaked: Vec<&PlanItem> = plan
            .test_items
            .iter()
            .filter(|i| {
                train_bearings
                    .contains(dataset.record(&i.acquisition_id).unwrap().bearing_id.as_str())
            })
            .collect();
        assert_eq!(leaked.len(), 8, "2 severe signals per mode move into test");
        for item in leaked {
            assert_eq!(
                dataset.record(&item.acquisition_id).unwrap().severity,
                Some(Severity::Strong)
            );
        }
    }

    #[test]
    fn pu_condition_holdout_keeps_three_of_four_conditions() {
        let dataset = synthetic::pu_metadata_manifest();
        let (_, eval) = generate_pu_splits(&dataset, 0, 1, 6).unwrap();
        let plan =
            generate_leaky_plan(&dataset, &eval[0], &LeakyMode::PuConditionHoldout, 6).unwrap();

        let held_out = plan.metadata["held_out_condition"].clone();
        // train: 11 bearings x 3 conditions x 20 reps; test: 11 x 1 x 20
        assert_eq!(plan.train_items.len(), 11 * 3 * 20);
        assert_eq!(plan.test_items.len(), 11 * 20);
        for item in &plan.test_items {
            assert_eq!(dataset.record(&item.acquisition_id).unwrap().condition_id, held_out);
        }
        for item in &plan.train_items {
            assert_ne!(dataset.record(&item.acquisition_id).unwrap().condition_id, held_out);
        }
    }

    #[test]
    fn pu_repetition_holdout_is_15_to_5_per_bearing_condition() {
        let dataset = synthetic::pu_metadata_manifest();
        let (_, eval) = generate_pu_splits(&dataset, 0, 1, 8).unwrap();
        let plan = generate_leaky_plan(
            &dataset,
            &eval[0],
            &LeakyMode::PuRepetitionHoldout {
                train_reps: 15,
                test_reps: 5,
            },
            8,
        )
        .unwrap();

        let mut counts: BTreeMap<(String, String), (usize, usize)> = BTreeMap::new();
        for item in &plan.train_items {
            let r = dataset.record(&item.acquisition_id).unwrap();
            counts
                .entry((r.bearing_id.clone(), r.condition_id.clone()))
                .or_default()
                .0 += 1;
        }
        for item in &plan.test_items {
            let r = dataset.record(&item.acquisition_id).unwrap();
            counts
                .entry((r.bearing_id.clone(), r.condition_id.clone()))
                .or_default()
                .1 += 1;
        }
        assert_eq!(counts.len(), 11 * 4);
        for ((bearing, condition), (train, test)) in counts {
            assert_eq!((train, test), (15, 5), "{bearing}/{condition}");
        }

        // 21 repetitions needed but only 20 exist
        assert!(generate_leaky_plan(
            &dataset,
            &eval[0],
            &LeakyMode::PuRepetitionHoldout {
                train_reps: 16,
                test_reps: 5
            },
            8
        )
        .is_err());
    }

    #[test]
    fn cwru_groups_share_bearings_across_sides_only_when_leaky() {
        let dataset = synthetic::cwru_metadata_manifest();
        let leaky = generate_leaky_plan(
            &dataset,
            // base is unused by this mode; pass any compatible plan
            &crate::splits::generate_cwru_splits(&dataset, 1, 0).unwrap()[0],
            &LeakyMode::CwruConditionGroups,
            3,
        )
        .unwrap();
        let bearings = |items: &BTreeSet<PlanItem>| -> BTreeSet<String> {
            items
                .iter()
                .map(|i| dataset.record(&i.acquisition_id).unwrap().bearing_id.clone())
                .collect()
        };
        let shared: Vec<String> = bearings(&leaky.train_items)
            .intersection(&bearings(&leaky.test_items))
            .cloned()
            .collect();
        assert!(!shared.is_empty(), "leaky group plan must share bearings");

        let control = crate::splits::generate_cwru_group_control(&dataset, 3).unwrap();
        assert!(
            bearings(&control.train_items).is_disjoint(&bearings(&control.test_items)),
            "control plan must be bearing-disjoint"
        );
    }
}
