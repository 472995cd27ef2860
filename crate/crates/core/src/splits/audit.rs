//! Provenance auditor: classifies an arbitrary plan against the leakage
//! taxonomy and produces witness pairs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::datamodel::{Dataset, SplitPlan};
use crate::error::{Error, Result};

/// Taxonomy classes ordered by severity (most severe first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FindingClass {
    SegmentationLevel,
    RepetitionWise,
    ConditionWise,
    BearingWiseClean,
}

impl fmt::Display for FindingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FindingClass::SegmentationLevel => "segmentation_level",
            FindingClass::RepetitionWise => "repetition_wise",
            FindingClass::ConditionWise => "condition_wise",
            FindingClass::BearingWiseClean => "bearing_wise_clean",
        };
        f.write_str(s)
    }
}

/// Evidence for a finding: the shared provenance behind one leak.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// Both sides draw segments (or the whole) of this acquisition.
    SharedSignal { acquisition_id: String },
    /// Both sides hold different recordings of this bearing under the
    /// same condition (and severity).
    SharedBearingCondition {
        bearing_id: String,
        condition: String,
    },
    /// Both sides hold this bearing under different conditions.
    SharedBearing {
        bearing_id: String,
        train_condition: String,
        test_condition: String,
    },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::SharedSignal { acquisition_id } => {
                write!(f, "signal '{acquisition_id}' feeds both sides")
            }
            Witness::SharedBearingCondition { bearing_id, condition } => write!(
                f,
                "bearing '{bearing_id}' under condition '{condition}' recorded on both sides"
            ),
            Witness::SharedBearing {
                bearing_id,
                train_condition,
                test_condition,
            } => write!(
                f,
                "bearing '{bearing_id}' trains under '{train_condition}' and tests under '{test_condition}'"
            ),
        }
    }
}

/// The most severe applicable finding with its witnesses (capped at
/// [`MAX_WITNESSES`]; `total_witnesses` counts them all).
#[derive(Debug, Clone, PartialEq)]
pub struct AuditFinding {
    pub class: FindingClass,
    pub witnesses: Vec<Witness>,
    pub total_witnesses: usize,
}

pub const MAX_WITNESSES: usize = 32;

impl AuditFinding {
    pub fn is_clean(&self) -> bool {
        self.class == FindingClass::BearingWiseClean
    }
}

/// Condition key for the taxonomy: severity counts as part of the
/// operating condition (progressive fault states of one bearing are
/// different conditions of the same physical component).
fn condition_key(record: &crate::datamodel::AcquisitionRecord) -> String {
    match record.severity {
        None => record.condition_id.clone(),
        Some(s) => format!("{}+{:?}", record.condition_id, s).to_lowercase(),
    }
}

/// Classify `plan` by provenance: segmentation_level > repetition_wise >
/// condition_wise > bearing_wise_clean. A plan is clean iff its train and
/// test bearing-id sets are disjoint.
pub fn audit_split(plan: &SplitPlan, dataset: &Dataset) -> Result<AuditFinding> {
    let index = dataset.index();

    struct Side {
        acquisitions: BTreeSet<String>,
        bearing_conditions: BTreeSet<(String, String)>,
        bearings: BTreeMap<String, String>, // bearing -> example condition key
    }
    let mut sides = Vec::with_capacity(2);
    for items in [&plan.train_items, &plan.test_items] {
        let mut side = Side {
            acquisitions: BTreeSet::new(),
            bearing_conditions: BTreeSet::new(),
            bearings: BTreeMap::new(),
        };
        for item in items {
            let rec = index.get(item.acquisition_id.as_str()).ok_or_else(|| {
                Error::Split(format!(
                    "plan '{}': unresolvable item '{}'",
                    plan.plan_id, item.acquisition_id
                ))
            })?;
            let ck = condition_key(rec);
            side.acquisitions.insert(rec.acquisition_id.clone());
            side.bearing_conditions
                .insert((rec.bearing_id.clone(), ck.clone()));
            side.bearings.entry(rec.bearing_id.clone()).or_insert(ck);
        }
        sides.push(side);
    }
    let (train, test) = (&sides[0], &sides[1]);

    let capped = |witnesses: Vec<Witness>, class: FindingClass| -> AuditFinding {
        let total = witnesses.len();
        AuditFinding {
            class,
            witnesses: witnesses.into_iter().take(MAX_WITNESSES).collect(),
            total_witnesses: total,
        }
    };

    // 1. shared parent signals
    let shared_signals: Vec<Witness> = train
        .acquisitions
        .intersection(&test.acquisitions)
        .map(|id| Witness::SharedSignal {
            acquisition_id: id.clone(),
        })
        .collect();
    if !shared_signals.is_empty() {
        return Ok(capped(shared_signals, FindingClass::SegmentationLevel));
    }

    // 2. same bearing, same condition(+severity), different recordings
    let shared_bc: Vec<Witness> = train
        .bearing_conditions
        .intersection(&test.bearing_conditions)
        .map(|(bearing, condition)| Witness::SharedBearingCondition {
            bearing_id: bearing.clone(),
            condition: condition.clone(),
        })
        .collect();
    if !shared_bc.is_empty() {
        return Ok(capped(shared_bc, FindingClass::RepetitionWise));
    }

    // 3. same bearing, different conditions
    let mut shared_bearings: Vec<Witness> = Vec::new();
    for (bearing, train_ck) in &train.bearings {
        if let Some(test_ck) = test.bearings.get(bearing) {
            shared_bearings.push(Witness::SharedBearing {
                bearing_id: bearing.clone(),
                train_condition: train_ck.clone(),
                test_condition: test_ck.clone(),
            });
        }
    }
    if !shared_bearings.is_empty() {
        return Ok(capped(shared_bearings, FindingClass::ConditionWise));
    }

    Ok(AuditFinding {
        class: FindingClass::BearingWiseClean,
        witnesses: Vec::new(),
        total_witnesses: 0,
    })
}
