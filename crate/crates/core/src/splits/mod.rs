//! Leakage-free and deliberately-leaky split-plan generation for the three
//! dataset profiles, plus the provenance auditor.
//!
//! Bearing-wise generators guarantee train/test bearing disjointness by
//! construction; every acquisition of a chosen bearing follows the
//! bearing's side, including its healthy-state recordings (which serve as
//! all-zero-label negatives on the test side).

pub mod audit;
pub mod leaky;

pub use audit::{audit_split, AuditFinding, FindingClass, Witness};
pub use leaky::{generate_leaky_plan, LeakyMode};

use std::collections::{BTreeMap, BTreeSet, HashSet};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datamodel::{
    AcquisitionRecord, Dataset, Granularity, PlanItem, SplitKind, SplitPlan,
};
use crate::error::{Error, Result};

/// Request describing a family of plans to generate.
#[derive(Debug, Clone)]
pub struct SplitRequest {
    pub kind: SplitKind,
    /// Uniform per-class train:test bearing counts; `None` uses the
    /// profile's standard protocol (3:2 UORED, 4:2/4:2/3:2 PU, 2:1 CWRU).
    pub ratio: Option<(usize, usize)>,
    pub n_tuning: usize,
    pub n_eval: usize,
    pub seed: u64,
    /// Bearings removed before any class counting (e.g. PU combined-fault
    /// bearings).
    pub exclusions: BTreeSet<String>,
}

/// Bearings grouped by class: the single fault mode they exhibit, or
/// `healthy` for bearings with no fault acquisitions. Multi-fault bearings
/// are rejected; such bearings are excluded upstream.
pub fn bearing_classes(dataset: &Dataset) -> Result<BTreeMap<String, Vec<String>>> {
    let mut classes: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for bearing in dataset.bearings() {
        let class = match bearing.fault_modes_present.len() {
            0 => "healthy".to_string(),
            1 => bearing.fault_modes_present.iter().next().unwrap().clone(),
            _ => {
                return Err(Error::Split(format!(
                    "bearing '{}' exhibits multiple fault modes {:?}; exclude it before splitting",
                    bearing.bearing_id, bearing.fault_modes_present
                )))
            }
        };
        classes.entry(class).or_default().push(bearing.bearing_id);
    }
    for members in classes.values_mut() {
        members.sort();
    }
    Ok(classes)
}

/// All train/test bearing assignments for one class at a fixed ratio.
struct ClassPool {
    name: String,
    choices: Vec<(Vec<String>, Vec<String>)>,
}

fn build_pool(name: &str, bearings: &[String], n_train: usize, n_test: usize) -> Result<ClassPool> {
    if n_train == 0 || n_test == 0 {
        return Err(Error::Split(format!(
            "class '{name}': train and test bearing counts must be positive"
        )));
    }
    if n_train + n_test > bearings.len() {
        return Err(Error::Split(format!(
            "class '{name}': ratio {n_train}:{n_test} infeasible for {} bearings",
            bearings.len()
        )));
    }
    let mut choices = Vec::new();
    for train in bearings.iter().cloned().combinations(n_train) {
        let rest: Vec<String> = bearings
            .iter()
            .filter(|b| !train.contains(b))
            .cloned()
            .collect();
        if n_test == rest.len() {
            choices.push((train, rest));
        } else {
            for test in rest.iter().cloned().combinations(n_test) {
                choices.push((train.clone(), test));
            }
        }
    }
    Ok(ClassPool {
        name: name.to_string(),
        choices,
    })
}

/// Draw `n` pairwise-distinct per-class choice tuples, deterministically
/// under `seed`. Small requests are rejection-sampled (capped at 10x
/// oversampling); requests above half the space enumerate it and shuffle.
fn select_tuples(pools: &[ClassPool], n: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let radices: Vec<usize> = pools.iter().map(|p| p.choices.len()).collect();
    let space: u128 = radices.iter().map(|&r| r as u128).product();
    if n as u128 > space {
        return Err(Error::Split(format!(
            "requested {n} plans but only {space} distinct combinations exist"
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    if 2 * n as u128 >= space {
        // enumerate the whole space in mixed-radix order
        let mut all: Vec<Vec<usize>> = Vec::with_capacity(space as usize);
        let mut tuple = vec![0usize; radices.len()];
        loop {
            all.push(tuple.clone());
            let mut pos = radices.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                tuple[pos] += 1;
                if tuple[pos] < radices[pos] {
                    break;
                }
                tuple[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX; // done
                    break;
                }
            }
            if pos == usize::MAX {
                break;
            }
        }
        if n as u128 != space {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            all.shuffle(&mut rng);
            all.truncate(n);
        }
        return Ok(all);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<Vec<usize>> = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 10 * n {
            return Err(Error::Split(format!(
                "failed to draw {n} distinct combinations within {attempts} attempts"
            )));
        }
        let tuple: Vec<usize> = radices.iter().map(|&r| rng.random_range(0..r)).collect();
        if seen.insert(tuple.clone()) {
            out.push(tuple);
        }
    }
    Ok(out)
}

fn acquisitions_by_bearing(dataset: &Dataset) -> BTreeMap<&str, Vec<&AcquisitionRecord>> {
    let mut map: BTreeMap<&str, Vec<&AcquisitionRecord>> = BTreeMap::new();
    for rec in &dataset.records {
        map.entry(rec.bearing_id.as_str()).or_default().push(rec);
    }
    map
}

fn bearing_wise_plan(
    dataset: &Dataset,
    plan_id: String,
    pools: &[ClassPool],
    tuple: &[usize],
    seed: u64,
) -> Result<SplitPlan> {
    let by_bearing = acquisitions_by_bearing(dataset);
    let mut train_items = BTreeSet::new();
    let mut test_items = BTreeSet::new();
    let mut choice_desc = Vec::new();
    for (pool, &idx) in pools.iter().zip(tuple) {
        let (train_bearings, test_bearings) = &pool.choices[idx];
        choice_desc.push(format!("{}={idx}", pool.name));
        for (bearings, items) in [
            (train_bearings, &mut train_items),
            (test_bearings, &mut test_items),
        ] {
            for b in bearings {
                let recs = by_bearing.get(b.as_str()).ok_or_else(|| {
                    Error::Split(format!("bearing '{b}' has no acquisitions"))
                })?;
                for rec in recs {
                    items.insert(PlanItem::whole(rec.acquisition_id.clone()));
                }
            }
        }
    }
    let mut metadata = BTreeMap::new();
    metadata.insert("seed".to_string(), seed.to_string());
    metadata.insert("choice".to_string(), choice_desc.join(","));
    SplitPlan::new(
        plan_id,
        Granularity::Acquisition,
        SplitKind::BearingWise,
        train_items,
        test_items,
        metadata,
    )
}

fn generate_from_pools(
    dataset: &Dataset,
    prefix: &str,
    pools: &[ClassPool],
    n_tuning: usize,
    n_eval: usize,
    seed: u64,
) -> Result<(Vec<SplitPlan>, Vec<SplitPlan>)> {
    let tuples = select_tuples(pools, n_tuning + n_eval, seed)?;
    let mut tuning = Vec::with_capacity(n_tuning);
    let mut eval = Vec::with_capacity(n_eval);
    for (i, tuple) in tuples.iter().enumerate() {
        let (role, idx) = if i < n_tuning {
            ("tune", i)
        } else {
            ("eval", i - n_tuning)
        };
        let plan = bearing_wise_plan(dataset, format!("{prefix}-{role}-{idx:04}"), pools, tuple, seed)?;
        if i < n_tuning {
            tuning.push(plan);
        } else {
            eval.push(plan);
        }
    }
    Ok((tuning, eval))
}

fn expect_class<'a>(
    classes: &'a BTreeMap<String, Vec<String>>,
    name: &str,
    expected: usize,
) -> Result<&'a Vec<String>> {
    let members = classes
        .get(name)
        .ok_or_else(|| Error::Split(format!("no bearings of class '{name}' in manifest")))?;
    if members.len() != expected {
        return Err(Error::Split(format!(
            "class '{name}' has {} bearings, protocol expects {expected}",
            members.len()
        )));
    }
    Ok(members)
}

/// 3-of-5 training bearings per fault mode; combination space
/// C(5,3)^4 = 10^4. Tuning and eval plans are pairwise distinct and
/// disjoint; all acquisitions of a bearing follow its side.
pub fn generate_uored_splits(
    dataset: &Dataset,
    n_tuning: usize,
    n_eval: usize,
    seed: u64,
) -> Result<(Vec<SplitPlan>, Vec<SplitPlan>)> {
    let classes = bearing_classes(dataset)?;
    if classes.contains_key("healthy") {
        return Err(Error::Split(
            "manifest has dedicated healthy bearings; the protocol expects the healthy state embedded per bearing".into(),
        ));
    }
    let mut pools = Vec::new();
    for mode in &dataset.profile.fault_modes {
        let members = expect_class(&classes, mode, 5)?;
        pools.push(build_pool(mode, members, 3, 2)?);
    }
    generate_from_pools(dataset, "uored", &pools, n_tuning, n_eval, seed)
}

/// 4:2 healthy, 4:2 inner, 3:2 outer; combination space
/// C(6,4) * C(6,4) * C(5,3) = 2250. Combined-fault bearings must be
/// excluded before calling.
pub fn generate_pu_splits(
    dataset: &Dataset,
    n_tuning: usize,
    n_eval: usize,
    seed: u64,
) -> Result<(Vec<SplitPlan>, Vec<SplitPlan>)> {
    let classes = bearing_classes(dataset)?;
    let healthy = expect_class(&classes, "healthy", 6)?;
    let inner = expect_class(&classes, "inner", 6)?;
    let outer = expect_class(&classes, "outer", 5)?;
    let pools = vec![
        build_pool("healthy", healthy, 4, 2)?,
        build_pool("inner", inner, 4, 2)?,
        build_pool("outer", outer, 3, 2)?,
    ];
    generate_from_pools(dataset, "pu", &pools, n_tuning, n_eval, seed)
}

/// Uniform per-class ratio over whatever classes the manifest exhibits;
/// used by the split-ratio diversity sweeps. Classes larger than
/// train+test leave the remaining bearings unused in that plan.
pub fn generate_bearing_wise_splits(
    dataset: &Dataset,
    ratio: (usize, usize),
    n_tuning: usize,
    n_eval: usize,
    seed: u64,
) -> Result<(Vec<SplitPlan>, Vec<SplitPlan>)> {
    let classes = bearing_classes(dataset)?;
    let mut pools = Vec::new();
    for (name, members) in &classes {
        pools.push(build_pool(name, members, ratio.0, ratio.1)?);
    }
    let prefix = format!("{}-r{}v{}", dataset.profile.name, ratio.0, ratio.1);
    generate_from_pools(dataset, &prefix, &pools, n_tuning, n_eval, seed)
}

// ---------------------------------------------------------------------------
// CWRU

/// Parsed structure of a CWRU-style manifest: per-run channel pairs, one
/// healthy bearing per sensor location, and (fault location, fault type)
/// cells holding one bearing per fault size.
pub(crate) struct CwruGrid<'a> {
    /// (fault location, fault type) -> bearing ids sorted (size order).
    pub cells: BTreeMap<(String, String), Vec<String>>,
    /// condition_id -> records of that run, keyed by sensor location.
    pub runs: BTreeMap<&'a str, BTreeMap<&'a str, &'a AcquisitionRecord>>,
}

pub(crate) fn parse_cwru_grid(dataset: &Dataset) -> Result<CwruGrid<'_>> {
    let profile = &dataset.profile;
    if profile.sensor_locations.len() != 2 {
        return Err(Error::Split(format!(
            "CWRU protocol expects 2 sensor locations, profile has {}",
            profile.sensor_locations.len()
        )));
    }

    let mut runs: BTreeMap<&str, BTreeMap<&str, &AcquisitionRecord>> = BTreeMap::new();
    for rec in &dataset.records {
        let run = runs.entry(rec.condition_id.as_str()).or_default();
        if run.insert(rec.location.as_str(), rec).is_some() {
            return Err(Error::Split(format!(
                "run '{}' has two acquisitions at location '{}'",
                rec.condition_id, rec.location
            )));
        }
    }

    let mut cells: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    let mut fault_loc: BTreeMap<String, String> = BTreeMap::new();
    for rec in &dataset.records {
        if rec.label.is_healthy() {
            continue;
        }
        let modes: Vec<&str> = rec.label.active_modes(profile).collect();
        if modes.len() != 1 {
            return Err(Error::Split(format!(
                "acquisition '{}' has {} fault modes; CWRU cells are single-fault",
                rec.acquisition_id,
                modes.len()
            )));
        }
        if let Some(prev) = fault_loc.get(&rec.bearing_id) {
            if prev != &rec.location {
                return Err(Error::Split(format!(
                    "faulty bearing '{}' appears at two locations",
                    rec.bearing_id
                )));
            }
        } else {
            fault_loc.insert(rec.bearing_id.clone(), rec.location.clone());
        }
        cells
            .entry((rec.location.clone(), modes[0].to_string()))
            .or_default()
            .insert(rec.bearing_id.clone());
    }

    // every location x fault-type cell must exist, with one bearing per size
    let mut sizes: Option<usize> = None;
    let mut cells_sorted: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    for loc in &profile.sensor_locations {
        for mode in &profile.fault_modes {
            let key = (loc.clone(), mode.clone());
            let members = cells.remove(&key).ok_or_else(|| {
                Error::Split(format!(
                    "manifest missing the {loc}/{mode} cell of the configuration grid"
                ))
            })?;
            let n = members.len();
            match sizes {
                None => sizes = Some(n),
                Some(s) if s != n => {
                    return Err(Error::Split(format!(
                        "cell {loc}/{mode} has {n} fault sizes, others have {s}"
                    )))
                }
                _ => {}
            }
            cells_sorted.insert(key, members.into_iter().collect());
        }
    }

    Ok(CwruGrid {
        cells: cells_sorted,
        runs,
    })
}

/// One healthy-side scenario: which location's healthy signals train.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HealthySide {
    /// Healthy signals of `sensor_locations[0]` train, the other side tests.
    TrainFirst,
    /// The symmetric arrangement.
    TrainSecond,
}

fn cwru_plan(
    dataset: &Dataset,
    grid: &CwruGrid<'_>,
    plan_id: String,
    test_bearings: &BTreeSet<String>,
    side: HealthySide,
    extra_meta: &[(String, String)],
) -> Result<SplitPlan> {
    let locs = &dataset.profile.sensor_locations;
    let (train_loc, test_loc) = match side {
        HealthySide::TrainFirst => (locs[0].as_str(), locs[1].as_str()),
        HealthySide::TrainSecond => (locs[1].as_str(), locs[0].as_str()),
    };

    let mut train_items = BTreeSet::new();
    let mut test_items = BTreeSet::new();
    for run in grid.runs.values() {
        // dual-healthy runs are discarded: their channels are co-recorded
        // and cannot be separated without cross-contamination
        let faulty: Vec<&&AcquisitionRecord> =
            run.values().filter(|r| !r.label.is_healthy()).collect();
        if faulty.is_empty() {
            continue;
        }
        if faulty.len() > 1 {
            return Err(Error::Split(format!(
                "run '{}' has faulty bearings on both channels",
                faulty[0].condition_id
            )));
        }
        let fault_rec = faulty[0];
        let in_test = test_bearings.contains(&fault_rec.bearing_id);
        // fault-side channel follows its bearing
        if in_test {
            test_items.insert(PlanItem::whole(fault_rec.acquisition_id.clone()));
        } else {
            train_items.insert(PlanItem::whole(fault_rec.acquisition_id.clone()));
        }
        // the opposite channel records a healthy bearing: it may train only
        // on the training side's location and alongside a train-side fault,
        // and may test only on the test location alongside a test-side fault
        for rec in run.values() {
            if !rec.label.is_healthy() {
                continue;
            }
            if rec.location == train_loc && !in_test {
                train_items.insert(PlanItem::whole(rec.acquisition_id.clone()));
            } else if rec.location == test_loc && in_test {
                test_items.insert(PlanItem::whole(rec.acquisition_id.clone()));
            }
        }
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("train_healthy_side".to_string(), train_loc.to_string());
    metadata.insert("test_healthy_side".to_string(), test_loc.to_string());
    for (k, v) in extra_meta {
        metadata.insert(k.clone(), v.clone());
    }
    SplitPlan::new(
        plan_id,
        Granularity::Acquisition,
        SplitKind::BearingWise,
        train_items,
        test_items,
        metadata,
    )
}

fn cwru_selection_pools(grid: &CwruGrid<'_>, n_test_sizes: usize) -> Result<Vec<ClassPool>> {
    grid.cells
        .iter()
        .map(|((loc, mode), members)| {
            let n_train = members.len().checked_sub(n_test_sizes).filter(|&n| n > 0).ok_or_else(
                || {
                    Error::Split(format!(
                        "cell {loc}/{mode}: cannot hold out {n_test_sizes} of {} sizes",
                        members.len()
                    ))
                },
            )?;
            build_pool(&format!("{loc}/{mode}"), members, n_train, n_test_sizes)
        })
        .collect()
}

/// Per split: one random fault-size configuration per location-type pair
/// is held out for test; both healthy-side scenarios are emitted, so
/// `n_splits` splits yield `2 * n_splits` evaluation plans.
pub fn generate_cwru_splits(
    dataset: &Dataset,
    n_splits: usize,
    seed: u64,
) -> Result<Vec<SplitPlan>> {
    generate_cwru_splits_with_ratio(dataset, n_splits, seed, 1)
}

/// As [`generate_cwru_splits`] with `n_test_sizes` configurations per pair
/// held out (1 = the published 2:1 protocol, 2 = the 1:2 sweep point).
pub fn generate_cwru_splits_with_ratio(
    dataset: &Dataset,
    n_splits: usize,
    seed: u64,
    n_test_sizes: usize,
) -> Result<Vec<SplitPlan>> {
    let grid = parse_cwru_grid(dataset)?;
    let pools = cwru_selection_pools(&grid, n_test_sizes)?;
    let tuples = select_tuples(&pools, n_splits, seed)?;

    let mut plans = Vec::with_capacity(2 * n_splits);
    for (i, tuple) in tuples.iter().enumerate() {
        let test_bearings: BTreeSet<String> = pools
            .iter()
            .zip(tuple)
            .flat_map(|(pool, &idx)| pool.choices[idx].1.iter().cloned())
            .collect();
        for (side, tag) in [
            (HealthySide::TrainFirst, "a"),
            (HealthySide::TrainSecond, "b"),
        ] {
            plans.push(cwru_plan(
                dataset,
                &grid,
                format!("cwru-{i:03}{tag}"),
                &test_bearings,
                side,
                &[("seed".to_string(), seed.to_string())],
            )?);
        }
    }
    Ok(plans)
}

/// Three folds whose held-out fault-size selections partition the grid:
/// fold 1 selects randomly, folds 2 and 3 split the residue. Each fold is
/// paired with both healthy-side scenarios: six plans.
pub fn generate_cwru_3fold(dataset: &Dataset, seed: u64) -> Result<Vec<SplitPlan>> {
    let grid = parse_cwru_grid(dataset)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // per cell: a random permutation of its sizes; fold k tests entry k
    let mut fold_test: Vec<BTreeSet<String>> = vec![BTreeSet::new(); 3];
    for members in grid.cells.values() {
        if members.len() != 3 {
            return Err(Error::Split(format!(
                "3-fold protocol needs exactly 3 fault sizes per cell, found {}",
                members.len()
            )));
        }
        let mut perm = members.clone();
        perm.shuffle(&mut rng);
        for (k, bearing) in perm.into_iter().enumerate() {
            fold_test[k].insert(bearing);
        }
    }

    let mut plans = Vec::with_capacity(6);
    for (fold, test_bearings) in fold_test.iter().enumerate() {
        for (side, tag) in [
            (HealthySide::TrainFirst, "a"),
            (HealthySide::TrainSecond, "b"),
        ] {
            plans.push(cwru_plan(
                dataset,
                &grid,
                format!("cwru-fold{fold}{tag}"),
                test_bearings,
                side,
                &[
                    ("seed".to_string(), seed.to_string()),
                    ("fold".to_string(), fold.to_string()),
                ],
            )?);
        }
    }
    Ok(plans)
}

/// Faulty-only leak-free control for the 12-group protocol: train on one
/// (load, size) group, test on the different-size groups. Healthy channels
/// are excluded from both sides; the two healthy bearings span every group
/// and would otherwise leak by construction.
pub fn generate_cwru_group_control(dataset: &Dataset, seed: u64) -> Result<SplitPlan> {
    leaky::cwru_group_plan(dataset, seed, false)
}
