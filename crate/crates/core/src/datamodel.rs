//! Normalized dataset manifest, label space, and split-plan representations.
//!
//! A manifest is line-delimited JSON: the first line declares the dataset
//! profile, every following line one acquisition (optionally preceded by
//! explicit bearing declarations). Signal files referenced by acquisitions
//! are headerless little-endian `f32` samples and are never opened while
//! loading; [`read_signal`] resolves and validates them lazily.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fault-mode layout and sensor topology of one dataset family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetProfile {
    pub name: String,
    /// Ordered fault-mode names; label bit `i` refers to `fault_modes[i]`.
    pub fault_modes: Vec<String>,
    pub sensor_locations: Vec<String>,
    pub health_states_per_bearing: u32,
}

impl DatasetProfile {
    pub fn new(
        name: &str,
        fault_modes: &[&str],
        sensor_locations: &[&str],
        health_states_per_bearing: u32,
    ) -> Self {
        Self {
            name: name.to_string(),
            fault_modes: fault_modes.iter().map(|s| s.to_string()).collect(),
            sensor_locations: sensor_locations.iter().map(|s| s.to_string()).collect(),
            health_states_per_bearing,
        }
    }

    /// Four fault modes, one sensor, three health states per bearing.
    pub fn uored() -> Self {
        Self::new("uored", &["inner", "outer", "ball", "cage"], &["vib"], 3)
    }

    /// Two fault modes (naturally damaged subset), one sensor location.
    pub fn pu() -> Self {
        Self::new("pu", &["inner", "outer"], &["mcs"], 1)
    }

    /// Three fault modes, drive-end and fan-end channels.
    pub fn cwru() -> Self {
        Self::new("cwru", &["inner", "outer", "ball"], &["de", "fe"], 1)
    }

    pub fn n_fault_modes(&self) -> usize {
        self.fault_modes.len()
    }

    pub fn mode_index(&self, mode: &str) -> Option<usize> {
        self.fault_modes.iter().position(|m| m == mode)
    }

    fn check(&self) -> Result<()> {
        if self.fault_modes.is_empty() {
            return Err(Error::Manifest("profile has no fault modes".into()));
        }
        let mut seen = HashSet::new();
        for m in &self.fault_modes {
            if !seen.insert(m) {
                return Err(Error::Manifest(format!("duplicate fault mode '{m}'")));
            }
        }
        Ok(())
    }
}

/// Binary multi-label fault indicator, index-aligned with
/// [`DatasetProfile::fault_modes`]. All-zeros encodes the healthy state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelVector {
    bits: Vec<u8>,
}

impl LabelVector {
    pub fn healthy(n_modes: usize) -> Self {
        Self {
            bits: vec![0; n_modes],
        }
    }

    /// One-hot label for a single fault mode.
    pub fn single(n_modes: usize, mode_index: usize) -> Self {
        let mut bits = vec![0; n_modes];
        bits[mode_index] = 1;
        Self { bits }
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Manifest("label bits must be 0 or 1".into()));
        }
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i] == 1
    }

    pub fn is_healthy(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    /// Names of the active fault modes under `profile`.
    pub fn active_modes<'a>(&'a self, profile: &'a DatasetProfile) -> impl Iterator<Item = &'a str> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(i, _)| profile.fault_modes[i].as_str())
    }
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, b) in self.bits.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "]")
    }
}

/// Fault severity of one acquisition. `None` (serialized as `"none"`)
/// is reserved for healthy acquisitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Weak,
    Strong,
}

mod severity_serde {
    use super::Severity;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Severity>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_str("none"),
            Some(Severity::Weak) => s.serialize_str("weak"),
            Some(Severity::Strong) => s.serialize_str("strong"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Severity>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        match raw.as_deref() {
            None | Some("none") => Ok(None),
            Some("weak") => Ok(Some(Severity::Weak)),
            Some("strong") => Ok(Some(Severity::Strong)),
            Some(other) => Err(serde::de::Error::custom(format!(
                "invalid severity '{other}'"
            ))),
        }
    }
}

/// Rolling-element bearing geometry used for fault-frequency computation.
/// Diameters share one length unit; only their ratio matters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BearingGeometry {
    pub n_rolling_elements: u32,
    pub ball_diameter: f64,
    pub pitch_diameter: f64,
    pub contact_angle_rad: f64,
}

impl BearingGeometry {
    fn check(&self) -> Result<()> {
        if self.n_rolling_elements == 0 {
            return Err(Error::Manifest("geometry: zero rolling elements".into()));
        }
        if !(positive(self.ball_diameter) && positive(self.pitch_diameter)) {
            return Err(Error::Manifest("geometry: diameters must be positive".into()));
        }
        if self.ball_diameter >= self.pitch_diameter {
            return Err(Error::Manifest(
                "geometry: ball diameter must be smaller than pitch diameter".into(),
            ));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.contact_angle_rad) {
            return Err(Error::Manifest(
                "geometry: contact angle must lie in [0, pi/2)".into(),
            ));
        }
        Ok(())
    }
}

/// One physical bearing and the union of fault modes evidenced by (or
/// declared for) its acquisitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BearingRecord {
    pub bearing_id: String,
    pub fault_modes_present: BTreeSet<String>,
}

/// One recorded vibration signal plus full provenance metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionRecord {
    pub acquisition_id: String,
    pub bearing_id: String,
    pub label: LabelVector,
    #[serde(with = "severity_serde", default)]
    pub severity: Option<Severity>,
    pub condition_id: String,
    pub repetition: u32,
    pub location: String,
    pub sampling_rate_hz: f64,
    pub rpm: f64,
    pub duration_s: f64,
    /// Path of the `.f32` sample file, relative to the manifest directory.
    pub signal_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<BearingGeometry>,
}

/// Finite and strictly positive (rejects NaN and infinities).
fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl AcquisitionRecord {
    /// Nominal sample count implied by rate and duration.
    pub fn expected_samples(&self) -> u64 {
        (self.sampling_rate_hz * self.duration_s).round() as u64
    }

    /// Shaft rotation frequency in Hz.
    pub fn shaft_hz(&self) -> f64 {
        self.rpm / 60.0
    }

    fn check(&self, profile: &DatasetProfile) -> Result<()> {
        if self.label.len() != profile.n_fault_modes() {
            return Err(Error::Manifest(format!(
                "acquisition '{}': label length {} does not match profile F={}",
                self.acquisition_id,
                self.label.len(),
                profile.n_fault_modes()
            )));
        }
        // severity=none <=> all-zero label
        match (self.severity, self.label.is_healthy()) {
            (None, false) => {
                return Err(Error::Manifest(format!(
                    "acquisition '{}': severity 'none' with non-healthy label {}",
                    self.acquisition_id, self.label
                )))
            }
            (Some(_), true) => {
                return Err(Error::Manifest(format!(
                    "acquisition '{}': fault severity declared with all-zero label",
                    self.acquisition_id
                )))
            }
            _ => {}
        }
        if !profile.sensor_locations.contains(&self.location) {
            return Err(Error::Manifest(format!(
                "acquisition '{}': unknown sensor location '{}'",
                self.acquisition_id, self.location
            )));
        }
        if !positive(self.sampling_rate_hz) {
            return Err(Error::Manifest(format!(
                "acquisition '{}': sampling rate must be positive",
                self.acquisition_id
            )));
        }
        if !positive(self.rpm) {
            return Err(Error::Manifest(format!(
                "acquisition '{}': rpm must be positive",
                self.acquisition_id
            )));
        }
        if !positive(self.duration_s) {
            return Err(Error::Manifest(format!(
                "acquisition '{}': duration must be positive",
                self.acquisition_id
            )));
        }
        if let Some(g) = &self.geometry {
            g.check()?;
        }
        Ok(())
    }
}

/// A loaded manifest: profile, acquisitions, and the directory signal
/// references resolve against.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub profile: DatasetProfile,
    pub records: Vec<AcquisitionRecord>,
    pub root: PathBuf,
}

impl Dataset {
    pub fn new(profile: DatasetProfile, records: Vec<AcquisitionRecord>, root: PathBuf) -> Self {
        Self {
            profile,
            records,
            root,
        }
    }

    pub fn record(&self, acquisition_id: &str) -> Option<&AcquisitionRecord> {
        self.records
            .iter()
            .find(|r| r.acquisition_id == acquisition_id)
    }

    /// Index from acquisition id to record, for repeated lookups.
    pub fn index(&self) -> HashMap<&str, &AcquisitionRecord> {
        self.records
            .iter()
            .map(|r| (r.acquisition_id.as_str(), r))
            .collect()
    }

    /// Bearings derived from the acquisitions: one record per distinct
    /// bearing id, fault modes = union of active label bits.
    pub fn bearings(&self) -> Vec<BearingRecord> {
        let mut map: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
        for rec in &self.records {
            let entry = map.entry(rec.bearing_id.as_str()).or_default();
            for mode in rec.label.active_modes(&self.profile) {
                entry.insert(mode.to_string());
            }
        }
        map.into_iter()
            .map(|(id, modes)| BearingRecord {
                bearing_id: id.to_string(),
                fault_modes_present: modes,
            })
            .collect()
    }

    pub fn signal_path(&self, record: &AcquisitionRecord) -> PathBuf {
        self.root.join(&record.signal_ref)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ManifestLine {
    Profile(DatasetProfile),
    Bearing(BearingRecord),
    Acquisition(AcquisitionRecord),
}

/// Load a line-delimited manifest. Signal files are not opened.
pub fn load_manifest(path: &Path) -> Result<Dataset> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Manifest(format!("cannot open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);

    let mut profile: Option<DatasetProfile> = None;
    let mut declared: HashMap<String, BTreeSet<String>> = HashMap::new();
    let mut records: Vec<AcquisitionRecord> = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ManifestLine =
            serde_json::from_str(&line).map_err(|e| Error::ManifestParse {
                line: lineno,
                message: e.to_string(),
            })?;
        match parsed {
            ManifestLine::Profile(p) => {
                if profile.is_some() {
                    return Err(Error::ManifestParse {
                        line: lineno,
                        message: "duplicate profile line".into(),
                    });
                }
                p.check().map_err(|e| Error::ManifestParse {
                    line: lineno,
                    message: e.to_string(),
                })?;
                profile = Some(p);
            }
            ManifestLine::Bearing(b) => {
                let p = profile.as_ref().ok_or_else(|| Error::ManifestParse {
                    line: lineno,
                    message: "bearing line before profile line".into(),
                })?;
                for mode in &b.fault_modes_present {
                    if p.mode_index(mode).is_none() {
                        return Err(Error::ManifestParse {
                            line: lineno,
                            message: format!(
                                "bearing '{}': unknown fault mode '{mode}'",
                                b.bearing_id
                            ),
                        });
                    }
                }
                declared.insert(b.bearing_id, b.fault_modes_present);
            }
            ManifestLine::Acquisition(rec) => {
                let p = profile.as_ref().ok_or_else(|| Error::ManifestParse {
                    line: lineno,
                    message: "acquisition line before profile line".into(),
                })?;
                rec.check(p).map_err(|e| Error::ManifestParse {
                    line: lineno,
                    message: e.to_string(),
                })?;
                if !seen_ids.insert(rec.acquisition_id.clone()) {
                    return Err(Error::ManifestParse {
                        line: lineno,
                        message: format!("duplicate acquisition_id '{}'", rec.acquisition_id),
                    });
                }
                if let Some(modes) = declared.get(&rec.bearing_id) {
                    for mode in rec.label.active_modes(p) {
                        if !modes.contains(mode) {
                            return Err(Error::ManifestParse {
                                line: lineno,
                                message: format!(
                                    "acquisition '{}': fault mode '{mode}' not declared for bearing '{}'",
                                    rec.acquisition_id, rec.bearing_id
                                ),
                            });
                        }
                    }
                }
                records.push(rec);
            }
        }
    }

    let profile = profile.ok_or_else(|| Error::Manifest("manifest has no profile line".into()))?;
    if records.is_empty() {
        return Err(Error::Manifest("no acquisitions".into()));
    }
    let root = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Dataset::new(profile, records, root))
}

/// Write a manifest in the exact format [`load_manifest`] reads.
/// Field order is fixed, so write-after-load is byte-stable.
pub fn write_manifest(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&serde_json::to_string(&ManifestLine::Profile(
        dataset.profile.clone(),
    ))?);
    out.push('\n');
    for rec in &dataset.records {
        out.push_str(&serde_json::to_string(&ManifestLine::Acquisition(
            rec.clone(),
        ))?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read the `.f32` sample file of one acquisition and check its length
/// against the declared rate x duration (tolerance: one sample).
pub fn read_signal(dataset: &Dataset, record: &AcquisitionRecord) -> Result<Vec<f64>> {
    let path = dataset.signal_path(record);
    let bytes = fs::read(&path)
        .map_err(|e| Error::Signal(format!("cannot read {}: {e}", path.display())))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Signal(format!(
            "{}: byte length {} is not a multiple of 4",
            path.display(),
            bytes.len()
        )));
    }
    let n = bytes.len() / 4;
    let expected = record.expected_samples();
    if (n as i64 - expected as i64).abs() > 1 {
        return Err(Error::Signal(format!(
            "{}: {} samples on disk, {} expected from rate x duration",
            path.display(),
            n,
            expected
        )));
    }
    let mut samples = Vec::with_capacity(n);
    for chunk in bytes.chunks_exact(4) {
        samples.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64);
    }
    Ok(samples)
}

/// Write samples as headerless little-endian `f32`.
pub fn write_signal(path: &Path, samples: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(samples.len() * 4);
    for &s in samples {
        buf.extend_from_slice(&(s as f32).to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

/// Per-class bearing counts plus flags for classes too small to support
/// any bearing-wise split.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    /// Bearings with an empty fault-mode set.
    pub healthy_bearings: usize,
    /// Fault mode -> number of distinct bearings exhibiting it.
    pub per_mode_bearings: BTreeMap<String, usize>,
    /// Classes with fewer than 2 bearings.
    pub flagged: Vec<String>,
}

/// Count bearings per class and flag classes with fewer than two bearings.
/// The healthy class is only flagged for profiles with a single health
/// state per bearing; multi-state datasets draw healthy negatives from the
/// fault bearings' own healthy acquisitions.
pub fn validate_dataset(records: &[AcquisitionRecord], profile: &DatasetProfile) -> ValidationReport {
    let mut bearing_modes: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for rec in records {
        let entry = bearing_modes.entry(rec.bearing_id.as_str()).or_default();
        for mode in rec.label.active_modes(profile) {
            entry.insert(mode);
        }
    }

    let healthy_bearings = bearing_modes.values().filter(|m| m.is_empty()).count();
    let mut per_mode_bearings: BTreeMap<String, usize> = profile
        .fault_modes
        .iter()
        .map(|m| (m.clone(), 0))
        .collect();
    for modes in bearing_modes.values() {
        for mode in modes {
            *per_mode_bearings.get_mut(*mode).expect("known mode") += 1;
        }
    }

    let mut flagged: Vec<String> = per_mode_bearings
        .iter()
        .filter(|(_, &n)| n < 2)
        .map(|(m, _)| m.clone())
        .collect();
    if profile.health_states_per_bearing == 1 && healthy_bearings < 2 {
        flagged.push("healthy".into());
    }
    flagged.sort();

    ValidationReport {
        healthy_bearings,
        per_mode_bearings,
        flagged,
    }
}

// ---------------------------------------------------------------------------
// Split plans

/// Assignment granularity of a plan's items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Acquisition,
    Segment,
}

/// Declared split taxonomy class of a plan. The auditor in the splits
/// module checks the declaration against provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    BearingWise,
    ConditionWise,
    RepetitionWise,
    SegmentationLevel,
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SplitKind::BearingWise => "bearing_wise",
            SplitKind::ConditionWise => "condition_wise",
            SplitKind::RepetitionWise => "repetition_wise",
            SplitKind::SegmentationLevel => "segmentation_level",
        };
        f.write_str(s)
    }
}

impl SplitKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bearing_wise" => Ok(SplitKind::BearingWise),
            "condition_wise" => Ok(SplitKind::ConditionWise),
            "repetition_wise" => Ok(SplitKind::RepetitionWise),
            "segmentation_level" => Ok(SplitKind::SegmentationLevel),
            other => Err(Error::Split(format!("unknown split kind '{other}'"))),
        }
    }
}

/// One plan item: a whole acquisition, or a half-open `[start, end)`
/// sample range of one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlanItem {
    pub acquisition_id: String,
    pub range: Option<(u64, u64)>,
}

impl PlanItem {
    pub fn whole(acquisition_id: impl Into<String>) -> Self {
        Self {
            acquisition_id: acquisition_id.into(),
            range: None,
        }
    }

    pub fn segment(acquisition_id: impl Into<String>, start: u64, end: u64) -> Self {
        Self {
            acquisition_id: acquisition_id.into(),
            range: Some((start, end)),
        }
    }
}

impl fmt::Display for PlanItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.range {
            None => write!(f, "{}", self.acquisition_id),
            Some((s, e)) => write!(f, "{}\t{s}:{e}", self.acquisition_id),
        }
    }
}

/// An assignment of items to train/test roles with a declared taxonomy kind.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub plan_id: String,
    pub granularity: Granularity,
    pub declared_kind: SplitKind,
    pub train_items: BTreeSet<PlanItem>,
    pub test_items: BTreeSet<PlanItem>,
    pub metadata: BTreeMap<String, String>,
}

impl SplitPlan {
    pub fn new(
        plan_id: impl Into<String>,
        granularity: Granularity,
        declared_kind: SplitKind,
        train_items: BTreeSet<PlanItem>,
        test_items: BTreeSet<PlanItem>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let plan_id = plan_id.into();
        if train_items.is_empty() || test_items.is_empty() {
            return Err(Error::Split(format!(
                "plan '{plan_id}': train and test sets must both be non-empty"
            )));
        }
        if let Some(shared) = train_items.intersection(&test_items).next() {
            return Err(Error::Split(format!(
                "plan '{plan_id}': item '{}' assigned to both roles",
                shared.acquisition_id
            )));
        }
        Ok(Self {
            plan_id,
            granularity,
            declared_kind,
            train_items,
            test_items,
            metadata,
        })
    }

    /// Order-independent fingerprint of the plan's item assignment, used to
    /// verify tuning/eval disjointness beyond plan ids.
    pub fn content_key(&self) -> String {
        let mut key = String::new();
        for item in &self.train_items {
            key.push_str(&format!("T{item};"));
        }
        for item in &self.test_items {
            key.push_str(&format!("E{item};"));
        }
        key
    }
}

/// Serialize plans as line-delimited text, one tuple per line:
/// `plan_id TAB kind TAB role TAB item [TAB start:end]`. Role `meta`
/// carries `key=value` pairs (granularity plus free-form metadata).
pub fn plans_to_string(plans: &[SplitPlan]) -> String {
    let mut out = String::new();
    for plan in plans {
        let kind = plan.declared_kind.to_string();
        let gran = match plan.granularity {
            Granularity::Acquisition => "acquisition",
            Granularity::Segment => "segment",
        };
        out.push_str(&format!("{}\t{kind}\tmeta\tgranularity={gran}\n", plan.plan_id));
        for (k, v) in &plan.metadata {
            out.push_str(&format!("{}\t{kind}\tmeta\t{k}={v}\n", plan.plan_id));
        }
        for (role, items) in [("train", &plan.train_items), ("test", &plan.test_items)] {
            for item in items {
                out.push_str(&format!("{}\t{kind}\t{role}\t{item}\n", plan.plan_id));
            }
        }
    }
    out
}

pub fn write_plans(plans: &[SplitPlan], path: &Path) -> Result<()> {
    fs::write(path, plans_to_string(plans))?;
    Ok(())
}

pub fn read_plans(path: &Path) -> Result<Vec<SplitPlan>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Split(format!("cannot read {}: {e}", path.display())))?;
    plans_from_str(&text)
}

pub fn plans_from_str(text: &str) -> Result<Vec<SplitPlan>> {
    struct Partial {
        kind: SplitKind,
        granularity: Granularity,
        train: BTreeSet<PlanItem>,
        test: BTreeSet<PlanItem>,
        metadata: BTreeMap<String, String>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut partials: HashMap<String, Partial> = HashMap::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 4 {
            return Err(Error::Split(format!(
                "plan line {lineno}: expected at least 4 tab-separated fields"
            )));
        }
        let (plan_id, kind_s, role, item_s) = (fields[0], fields[1], fields[2], fields[3]);
        let kind = SplitKind::parse(kind_s)
            .map_err(|e| Error::Split(format!("plan line {lineno}: {e}")))?;
        let partial = partials.entry(plan_id.to_string()).or_insert_with(|| {
            order.push(plan_id.to_string());
            Partial {
                kind,
                granularity: Granularity::Acquisition,
                train: BTreeSet::new(),
                test: BTreeSet::new(),
                metadata: BTreeMap::new(),
            }
        });
        match role {
            "meta" => {
                let (k, v) = item_s.split_once('=').ok_or_else(|| {
                    Error::Split(format!("plan line {lineno}: meta field without '='"))
                })?;
                if k == "granularity" {
                    partial.granularity = match v {
                        "acquisition" => Granularity::Acquisition,
                        "segment" => Granularity::Segment,
                        other => {
                            return Err(Error::Split(format!(
                                "plan line {lineno}: unknown granularity '{other}'"
                            )))
                        }
                    };
                } else {
                    partial.metadata.insert(k.to_string(), v.to_string());
                }
            }
            "train" | "test" => {
                let item = if let Some(range_s) = fields.get(4) {
                    let (s, e) = range_s.split_once(':').ok_or_else(|| {
                        Error::Split(format!("plan line {lineno}: range must be start:end"))
                    })?;
                    let start: u64 = s.parse().map_err(|_| {
                        Error::Split(format!("plan line {lineno}: bad range start '{s}'"))
                    })?;
                    let end: u64 = e.parse().map_err(|_| {
                        Error::Split(format!("plan line {lineno}: bad range end '{e}'"))
                    })?;
                    PlanItem::segment(item_s, start, end)
                } else {
                    PlanItem::whole(item_s)
                };
                if role == "train" {
                    partial.train.insert(item);
                } else {
                    partial.test.insert(item);
                }
            }
            other => {
                return Err(Error::Split(format!(
                    "plan line {lineno}: unknown role '{other}'"
                )))
            }
        }
    }

    let mut plans = Vec::with_capacity(order.len());
    for plan_id in order {
        let p = partials.remove(&plan_id).expect("inserted above");
        plans.push(SplitPlan::new(
            plan_id,
            p.granularity,
            p.kind,
            p.train,
            p.test,
            p.metadata,
        )?);
    }
    Ok(plans)
}
