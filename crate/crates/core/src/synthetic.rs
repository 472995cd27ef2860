//! Synthetic dataset builders: metadata-only manifests mirroring the three
//! public dataset layouts (for split generation and audits, no signal files),
//! and a fully signal-backed benchmark dataset whose bearings carry
//! identity signatures, for end-to-end leakage experiments.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::datamodel::{
    write_manifest, write_signal, AcquisitionRecord, BearingGeometry, Dataset, DatasetProfile,
    LabelVector, Severity,
};
use crate::dsp;
use crate::error::Result;
use crate::features;

fn uored_record(
    bearing: &str,
    mode_index: Option<usize>,
    severity: Option<Severity>,
    state_tag: &str,
    geometry: Option<BearingGeometry>,
) -> AcquisitionRecord {
    let label = match mode_index {
        Some(i) => LabelVector::single(4, i),
        None => LabelVector::healthy(4),
    };
    AcquisitionRecord {
        acquisition_id: format!("{bearing}_{state_tag}"),
        bearing_id: bearing.to_string(),
        label,
        severity,
        condition_id: "c0".to_string(),
        repetition: 0,
        location: "vib".to_string(),
        sampling_rate_hz: 42_000.0,
        rpm: 1_750.0,
        duration_s: 10.0,
        signal_ref: format!("{bearing}_{state_tag}.f32"),
        geometry,
    }
}

/// 20 bearings, 5 per fault mode, 3 health states each: 60 acquisitions.
/// No signal files; suitable for split generation and auditing.
pub fn uored_metadata_manifest() -> Dataset {
    let profile = DatasetProfile::uored();
    let mut records = Vec::with_capacity(60);
    for (mode_index, _) in profile.fault_modes.iter().enumerate() {
        for k in 1..=5 {
            let bearing = format!("b{:02}", mode_index * 5 + k);
            records.push(uored_record(&bearing, None, None, "h", None));
            records.push(uored_record(
                &bearing,
                Some(mode_index),
                Some(Severity::Weak),
                "w",
                None,
            ));
            records.push(uored_record(
                &bearing,
                Some(mode_index),
                Some(Severity::Strong),
                "s",
                None,
            ));
        }
    }
    Dataset::new(profile, records, PathBuf::from("."))
}

/// PU operating conditions: (tag, rpm).
const PU_CONDITIONS: [(&str, f64); 4] = [
    ("N15_M07_F10", 1_500.0),
    ("N09_M07_F10", 900.0),
    ("N15_M01_F10", 1_500.0),
    ("N15_M07_F04", 1_500.0),
];

/// The curated naturally-damaged PU subset: 6 healthy, 6 inner, 5 outer
/// bearings, 4 operating conditions x 20 repetitions each (1360 records).
pub fn pu_metadata_manifest() -> Dataset {
    let profile = DatasetProfile::pu();
    let healthy = ["K001", "K002", "K003", "K004", "K005", "K006"];
    let outer = ["KA04", "KA15", "KA16", "KA22", "KA30"];
    let inner = ["KI04", "KI14", "KI16", "KI17", "KI18", "KI21"];

    let mut records = Vec::with_capacity(17 * 4 * 20);
    let mut push = |bearing: &str, label: LabelVector, severity: Option<Severity>| {
        for (cond, rpm) in PU_CONDITIONS {
            for rep in 0..20u32 {
                records.push(AcquisitionRecord {
                    acquisition_id: format!("{cond}_{bearing}_{rep}"),
                    bearing_id: bearing.to_string(),
                    label: label.clone(),
                    severity,
                    condition_id: cond.to_string(),
                    repetition: rep,
                    location: "mcs".to_string(),
                    sampling_rate_hz: 64_000.0,
                    rpm,
                    duration_s: 10.0,
                    signal_ref: format!("{cond}_{bearing}_{rep}.f32"),
                    geometry: None,
                });
            }
        }
    };
    for b in healthy {
        push(b, LabelVector::healthy(2), None);
    }
    for b in inner {
        push(b, LabelVector::single(2, 0), Some(Severity::Strong));
    }
    for b in outer {
        push(b, LabelVector::single(2, 1), Some(Severity::Strong));
    }
    Dataset::new(profile, records, PathBuf::from("."))
}

/// CWRU motor speeds by load (0..3 HP).
const CWRU_RPM: [f64; 4] = [1_797.0, 1_772.0, 1_750.0, 1_730.0];

/// The configuration grid: 3 fault sizes x {inner, outer, ball} x
/// {drive end, fan end} faulty bearings, 4 loads, two synchronous sensor
/// channels per run (144 acquisitions), plus one healthy bearing per side.
pub fn cwru_metadata_manifest() -> Dataset {
    let profile = DatasetProfile::cwru();
    let sizes = ["007", "014", "021"];
    let mut records = Vec::with_capacity(144);
    for fault_loc in ["de", "fe"] {
        let other = if fault_loc == "de" { "fe" } else { "de" };
        for (mode_index, mode) in profile.fault_modes.iter().enumerate() {
            for size in sizes {
                let bearing = format!("{fault_loc}_{mode}_{size}");
                for (load, rpm) in CWRU_RPM.iter().enumerate() {
                    let run = format!("{bearing}/l{load}");
                    // fault-side channel
                    records.push(AcquisitionRecord {
                        acquisition_id: format!("{bearing}_l{load}_{fault_loc}"),
                        bearing_id: bearing.clone(),
                        label: LabelVector::single(3, mode_index),
                        severity: Some(Severity::Strong),
                        condition_id: run.clone(),
                        repetition: 0,
                        location: fault_loc.to_string(),
                        sampling_rate_hz: 12_000.0,
                        rpm: *rpm,
                        duration_s: 10.0,
                        signal_ref: format!("{bearing}_l{load}_{fault_loc}.f32"),
                        geometry: None,
                    });
                    // opposite channel records the healthy bearing there
                    records.push(AcquisitionRecord {
                        acquisition_id: format!("{bearing}_l{load}_{other}"),
                        bearing_id: format!("h_{other}"),
                        label: LabelVector::healthy(3),
                        severity: None,
                        condition_id: run.clone(),
                        repetition: 0,
                        location: other.to_string(),
                        sampling_rate_hz: 12_000.0,
                        rpm: *rpm,
                        duration_s: 10.0,
                        signal_ref: format!("{bearing}_l{load}_{other}.f32"),
                        geometry: None,
                    });
                }
            }
        }
    }
    Dataset::new(profile, records, PathBuf::from("."))
}

/// Parameters of the signal-backed synthetic benchmark.
#[derive(Debug, Clone)]
pub struct BenchmarkParams {
    pub bearings_per_mode: usize,
    pub sampling_rate_hz: f64,
    pub duration_s: f64,
    pub noise_std: f64,
    pub weak_amplitude: f64,
    pub strong_amplitude: f64,
    /// Per-acquisition gain: exp(Normal(0, gain_sigma)). The gain is an
    /// acquisition-specific signature that leaks under segment splits.
    pub gain_sigma: f64,
    pub resonance_base_hz: f64,
    /// Per-bearing resonance offset: Uniform(-jitter, +jitter).
    pub resonance_jitter_hz: f64,
    /// Per-bearing relative fault-frequency jitter.
    pub fault_freq_jitter: f64,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        Self {
            bearings_per_mode: 5,
            sampling_rate_hz: 12_000.0,
            duration_s: 10.0,
            noise_std: 1.0,
            weak_amplitude: 1.0,
            strong_amplitude: 2.0,
            gain_sigma: 0.4,
            resonance_base_hz: 2_500.0,
            resonance_jitter_hz: 400.0,
            fault_freq_jitter: 0.015,
        }
    }
}

/// Geometry shared by all benchmark bearings. At 1200 rpm the fault
/// frequencies are BPFO 64 Hz, BPFI 96 Hz, BSF 48 Hz, FTF 8 Hz.
fn benchmark_geometry() -> BearingGeometry {
    BearingGeometry {
        n_rolling_elements: 8,
        ball_diameter: 10.0,
        pitch_diameter: 50.0,
        contact_angle_rad: 0.0,
    }
}

const BENCHMARK_RPM: f64 = 1_200.0;

/// Write a UORED-shaped synthetic dataset (4 fault modes x
/// `bearings_per_mode` bearings x 3 health states) with real `.f32`
/// signals into `dir` and return the loaded dataset.
///
/// Faulty signals carry resonance bursts at the bearing's (jittered) fault
/// frequency; every bearing has its own resonance and every acquisition
/// its own gain, so models can cheat under leaky splits.
pub fn write_benchmark_dataset(dir: &Path, params: &BenchmarkParams, seed: u64) -> Result<Dataset> {
    std::fs::create_dir_all(dir)?;
    let profile = DatasetProfile::new("synthbench", &["inner", "outer", "ball", "cage"], &["vib"], 3);
    let geometry = benchmark_geometry();
    let base_freqs = features::fault_frequencies(&geometry, BENCHMARK_RPM / 60.0);

    // fault mode -> characteristic frequency: inner=BPFI, outer=BPFO,
    // ball=BSF, cage=FTF
    let freq_of_mode = [
        base_freqs.bpfi_hz,
        base_freqs.bpfo_hz,
        base_freqs.bsf_hz,
        base_freqs.ftf_hz,
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, params.noise_std).expect("positive std");
    let gain_log = Normal::new(0.0, params.gain_sigma).expect("non-negative sigma");
    let n = (params.sampling_rate_hz * params.duration_s).round() as usize;

    let mut records = Vec::new();
    for (mode_index, mode) in profile.fault_modes.iter().enumerate() {
        for k in 0..params.bearings_per_mode {
            let bearing = format!("{mode}{k:02}");
            let resonance = params.resonance_base_hz
                + rng.random_range(-params.resonance_jitter_hz..=params.resonance_jitter_hz);
            let fault_freq = freq_of_mode[mode_index]
                * (1.0 + rng.random_range(-params.fault_freq_jitter..=params.fault_freq_jitter));

            for (tag, amplitude, severity) in [
                ("h", 0.0, None),
                ("w", params.weak_amplitude, Some(Severity::Weak)),
                ("s", params.strong_amplitude, Some(Severity::Strong)),
            ] {
                let acq_id = format!("{bearing}_{tag}");
                let mut signal = if amplitude > 0.0 {
                    let bursts = dsp::synth_bearing_signal(
                        fault_freq,
                        resonance,
                        params.sampling_rate_hz,
                        params.duration_s,
                        0.0,
                        &mut rng,
                    )?;
                    bursts.iter().map(|&v| amplitude * v).collect()
                } else {
                    vec![0.0; n]
                };
                if params.noise_std > 0.0 {
                    for v in &mut signal {
                        *v += noise.sample(&mut rng);
                    }
                }
                let gain = gain_log.sample(&mut rng).exp();
                for v in &mut signal {
                    *v *= gain;
                }
                write_signal(&dir.join(format!("{acq_id}.f32")), &signal)?;

                records.push(AcquisitionRecord {
                    acquisition_id: acq_id.clone(),
                    bearing_id: bearing.clone(),
                    label: if severity.is_some() {
                        LabelVector::single(4, mode_index)
                    } else {
                        LabelVector::healthy(4)
                    },
                    severity,
                    condition_id: "c0".to_string(),
                    repetition: 0,
                    location: "vib".to_string(),
                    sampling_rate_hz: params.sampling_rate_hz,
                    rpm: BENCHMARK_RPM,
                    duration_s: params.duration_s,
                    signal_ref: format!("{acq_id}.f32"),
                    geometry: Some(geometry),
                });
            }
        }
    }

    let dataset = Dataset::new(profile, records, dir.to_path_buf());
    write_manifest(&dataset, &dir.join("manifest.jsonl"))?;
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{load_manifest, validate_dataset};

    #[test]
    fn uored_manifest_matches_protocol_structure() {
        let ds = uored_metadata_manifest();
        assert_eq!(ds.records.len(), 60);
        assert_eq!(ds.bearings().len(), 20);
        let report = validate_dataset(&ds.records, &ds.profile);
        assert_eq!(report.healthy_bearings, 0);
        for mode in ["inner", "outer", "ball", "cage"] {
            assert_eq!(report.per_mode_bearings[mode], 5, "{mode}");
        }
        assert!(report.flagged.is_empty());
    }

    #[test]
    fn pu_manifest_matches_protocol_structure() {
        let ds = pu_metadata_manifest();
        assert_eq!(ds.records.len(), 1_360);
        assert_eq!(ds.bearings().len(), 17);
        let report = validate_dataset(&ds.records, &ds.profile);
        assert_eq!(report.healthy_bearings, 6);
        assert_eq!(report.per_mode_bearings["inner"], 6);
        assert_eq!(report.per_mode_bearings["outer"], 5);
        assert!(report.flagged.is_empty());
    }

    #[test]
    fn cwru_manifest_matches_protocol_structure() {
        let ds = cwru_metadata_manifest();
        assert_eq!(ds.records.len(), 144);
        // 18 faulty bearings + 2 healthy
        assert_eq!(ds.bearings().len(), 20);
        let report = validate_dataset(&ds.records, &ds.profile);
        assert_eq!(report.healthy_bearings, 2);
        for mode in ["inner", "outer", "ball"] {
            assert_eq!(report.per_mode_bearings[mode], 6, "{mode}");
        }
    }

    #[test]
    fn benchmark_dataset_round_trips_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let params = BenchmarkParams {
            bearings_per_mode: 1,
            duration_s: 2.0,
            ..BenchmarkParams::default()
        };
        let ds = write_benchmark_dataset(dir.path(), &params, 5).unwrap();
        assert_eq!(ds.records.len(), 12);
        let loaded = load_manifest(&dir.path().join("manifest.jsonl")).unwrap();
        assert_eq!(loaded.records, ds.records);
        // signals exist and carry the declared sample counts
        for rec in &loaded.records {
            let samples = crate::datamodel::read_signal(&loaded, rec).unwrap();
            assert_eq!(samples.len(), 24_000);
        }
    }

    #[test]
    fn benchmark_generation_is_bit_reproducible() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let params = BenchmarkParams {
            bearings_per_mode: 1,
            duration_s: 1.0,
            ..BenchmarkParams::default()
        };
        write_benchmark_dataset(d1.path(), &params, 9).unwrap();
        write_benchmark_dataset(d2.path(), &params, 9).unwrap();
        for name in ["inner00_h.f32", "inner00_s.f32", "manifest.jsonl"] {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs across identical runs");
        }
    }
}
