//! Handcrafted time + frequency features per segment: RMS, peak-to-peak,
//! kurtosis, skewness, crest factor, and the magnitudes of the bearing
//! fault frequencies (1x-5x) on envelope (and raw FFT) spectra.

use std::collections::HashMap;

use crate::datamodel::{BearingGeometry, Dataset, Granularity, LabelVector, PlanItem, SplitPlan};
use crate::dsp::{self, Segment, Spectrum};
use crate::error::{Error, Result};

/// Characteristic fault frequencies of a bearing at a given shaft speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultFrequencies {
    pub bpfo_hz: f64,
    pub bpfi_hz: f64,
    pub bsf_hz: f64,
    pub ftf_hz: f64,
}

impl FaultFrequencies {
    /// Frequencies in the fixed feature order: BPFO, BPFI, BSF, FTF.
    pub fn ordered(&self) -> [f64; 4] {
        [self.bpfo_hz, self.bpfi_hz, self.bsf_hz, self.ftf_hz]
    }

    /// Typical geometries satisfy FTF < shaft rate < BPFO < BPFI. A
    /// violation usually means bad metadata, but it is not an error.
    pub fn ordering_warning(&self, shaft_hz: f64) -> Option<String> {
        if self.ftf_hz < shaft_hz && shaft_hz < self.bpfo_hz && self.bpfo_hz < self.bpfi_hz {
            None
        } else {
            Some(format!(
                "unusual fault-frequency ordering: ftf={:.3}, shaft={:.3}, bpfo={:.3}, bpfi={:.3}",
                self.ftf_hz, shaft_hz, self.bpfo_hz, self.bpfi_hz
            ))
        }
    }
}

/// Standard kinematic formulas with r = (d/D) cos(phi).
pub fn fault_frequencies(geometry: &BearingGeometry, shaft_hz: f64) -> FaultFrequencies {
    let n = geometry.n_rolling_elements as f64;
    let ratio = geometry.ball_diameter / geometry.pitch_diameter;
    let r = ratio * geometry.contact_angle_rad.cos();
    FaultFrequencies {
        bpfo_hz: 0.5 * n * shaft_hz * (1.0 - r),
        bpfi_hz: 0.5 * n * shaft_hz * (1.0 + r),
        bsf_hz: 0.5 / ratio * shaft_hz * (1.0 - r * r),
        ftf_hz: 0.5 * shaft_hz * (1.0 - r),
    }
}

/// Time-domain statistics of one segment. Skewness and kurtosis are
/// undefined on zero-variance input; crest factor on all-zero input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeFeatures {
    pub rms: f64,
    pub peak_to_peak: f64,
    /// Non-excess standardized 4th moment (Gaussian = 3).
    pub kurtosis: Option<f64>,
    pub skewness: Option<f64>,
    /// max|x| / rms; >= 1 for non-constant signals.
    pub crest_factor: Option<f64>,
}

pub fn time_domain_features(segment: &Segment) -> Result<TimeFeatures> {
    let x = &segment.samples;
    if x.len() < 4 {
        return Err(Error::Feature(format!(
            "segment of {} samples is too short for moment features",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let mut sum_sq = 0.0;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    let mut peak_abs: f64 = 0.0;
    for &v in x {
        max = max.max(v);
        min = min.min(v);
        peak_abs = peak_abs.max(v.abs());
        sum_sq += v * v;
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let rms = (sum_sq / n).sqrt();
    m2 /= n;
    m3 /= n;
    m4 /= n;

    let (kurtosis, skewness) = if m2 > 0.0 {
        (Some(m4 / (m2 * m2)), Some(m3 / m2.powf(1.5)))
    } else {
        (None, None)
    };
    let crest_factor = if rms > 0.0 { Some(peak_abs / rms) } else { None };

    Ok(TimeFeatures {
        rms,
        peak_to_peak: max - min,
        kurtosis,
        skewness,
        crest_factor,
    })
}

/// Magnitudes of the four fault frequencies and their harmonics, as the
/// per-window spectrum maximum. Harmonics beyond the spectrum range are
/// reported as 0 with a flag.
#[derive(Debug, Clone)]
pub struct HarmonicMagnitudes {
    /// `values[f][k]`: fault frequency `f` (BPFO, BPFI, BSF, FTF order),
    /// harmonic `k+1`.
    pub values: Vec<Vec<f64>>,
    pub out_of_range: Vec<Vec<bool>>,
}

impl HarmonicMagnitudes {
    pub fn flattened(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }
}

/// Search window: +/- max(tolerance_fraction * k*f, one bin) around each
/// harmonic k*f.
pub fn harmonic_magnitudes(
    spectrum: &Spectrum,
    freqs: &FaultFrequencies,
    n_harmonics: usize,
    tolerance_fraction: f64,
) -> Result<HarmonicMagnitudes> {
    if spectrum.magnitudes.is_empty() {
        return Err(Error::Feature("empty spectrum".into()));
    }
    let bw = spectrum.bin_width_hz;
    let max_freq = spectrum.max_freq_hz();
    let mut values = Vec::with_capacity(4);
    let mut out_of_range = Vec::with_capacity(4);
    for f in freqs.ordered() {
        let mut row = Vec::with_capacity(n_harmonics);
        let mut flags = Vec::with_capacity(n_harmonics);
        for k in 1..=n_harmonics {
            let target = f * k as f64;
            if target > max_freq {
                row.push(0.0);
                flags.push(true);
                continue;
            }
            let half_width = (tolerance_fraction * target).max(bw);
            let lo = (((target - half_width) / bw).ceil().max(0.0)) as usize;
            let hi = (((target + half_width) / bw).floor() as usize).min(spectrum.magnitudes.len() - 1);
            let centre = ((target / bw).round() as usize).min(spectrum.magnitudes.len() - 1);
            let (lo, hi) = if lo > hi { (centre, centre) } else { (lo, hi) };
            let peak = spectrum.magnitudes[lo..=hi].iter().cloned().fold(0.0, f64::max);
            row.push(peak);
            flags.push(false);
        }
        values.push(row);
        out_of_range.push(flags);
    }
    Ok(HarmonicMagnitudes { values, out_of_range })
}

pub const N_HARMONICS: usize = 5;
pub const DEFAULT_TOLERANCE_FRACTION: f64 = 0.02;

/// One extracted feature row, aligned with its label and provenance.
#[derive(Debug, Clone)]
pub struct FeatureRow {
    pub time: TimeFeatures,
    /// Envelope-spectrum harmonic magnitudes, BPFO/BPFI/BSF/FTF x 1..5.
    pub env_harmonics: Vec<f64>,
    /// Same harmonic extraction on the raw FFT magnitude spectrum.
    pub fft_harmonics: Vec<f64>,
    pub label: LabelVector,
    pub acquisition_id: String,
    /// Window position: start_sample / window_len.
    pub segment_index: u64,
    pub start_sample: u64,
}

/// Which feature columns feed the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    TimeFeatures,
    FrequencyFeatures,
    EnvelopeFeatures,
    /// Time + envelope harmonics: the handcrafted set used by the shallow
    /// models.
    Combined,
}

impl Representation {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "time_features" => Ok(Self::TimeFeatures),
            "frequency_features" => Ok(Self::FrequencyFeatures),
            "envelope_features" => Ok(Self::EnvelopeFeatures),
            "combined" => Ok(Self::Combined),
            other => Err(Error::Config(format!("unknown representation '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::TimeFeatures => "time_features",
            Self::FrequencyFeatures => "frequency_features",
            Self::EnvelopeFeatures => "envelope_features",
            Self::Combined => "combined",
        }
    }
}

impl FeatureRow {
    /// Numeric vector for the chosen representation, or an error for
    /// segments with undefined moments.
    pub fn vector(&self, repr: Representation) -> Result<Vec<f64>> {
        let time = || -> Result<Vec<f64>> {
            let k = self.time.kurtosis.ok_or_else(|| {
                Error::Feature(format!(
                    "{}#{}: zero-variance segment has undefined moments",
                    self.acquisition_id, self.segment_index
                ))
            })?;
            let s = self.time.skewness.expect("defined with kurtosis");
            let c = self.time.crest_factor.ok_or_else(|| {
                Error::Feature(format!(
                    "{}#{}: all-zero segment has undefined crest factor",
                    self.acquisition_id, self.segment_index
                ))
            })?;
            Ok(vec![self.time.rms, self.time.peak_to_peak, k, s, c])
        };
        match repr {
            Representation::TimeFeatures => time(),
            Representation::FrequencyFeatures => Ok(self.fft_harmonics.clone()),
            Representation::EnvelopeFeatures => Ok(self.env_harmonics.clone()),
            Representation::Combined => {
                let mut v = time()?;
                v.extend_from_slice(&self.env_harmonics);
                Ok(v)
            }
        }
    }
}

/// Train/test feature tables plus the per-record error listing for
/// acquisitions that could not be processed.
#[derive(Debug, Default)]
pub struct FeatureTables {
    pub train: Vec<FeatureRow>,
    pub test: Vec<FeatureRow>,
    pub errors: Vec<(String, String)>,
}

/// Extract feature tables for a split plan: each item's signal (or sample
/// range) is segmented into non-overlapping 1-second windows and every
/// window becomes one row on the item's side. No statistic crosses the
/// train/test boundary.
pub fn extract_feature_table(
    dataset: &Dataset,
    plan: &SplitPlan,
    band_low_hz: f64,
    band_high_hz: f64,
) -> Result<FeatureTables> {
    let index = dataset.index();
    let mut tables = FeatureTables::default();

    for (items, train_side) in [(&plan.train_items, true), (&plan.test_items, false)] {
        let mut rows: Vec<FeatureRow> = Vec::new();
        for item in items {
            match extract_item_rows(dataset, &index, item, plan.granularity, band_low_hz, band_high_hz) {
                Ok(mut item_rows) => rows.append(&mut item_rows),
                Err(e) => tables
                    .errors
                    .push((item.acquisition_id.clone(), e.to_string())),
            }
        }
        rows.sort_by(|a, b| {
            (a.acquisition_id.as_str(), a.start_sample).cmp(&(b.acquisition_id.as_str(), b.start_sample))
        });
        if train_side {
            tables.train = rows;
        } else {
            tables.test = rows;
        }
    }
    Ok(tables)
}

pub(crate) fn extract_item_rows(
    dataset: &Dataset,
    index: &HashMap<&str, &crate::datamodel::AcquisitionRecord>,
    item: &PlanItem,
    granularity: Granularity,
    band_low_hz: f64,
    band_high_hz: f64,
) -> Result<Vec<FeatureRow>> {
    let record = index
        .get(item.acquisition_id.as_str())
        .ok_or_else(|| Error::Feature(format!("unresolvable item '{}'", item.acquisition_id)))?;
    let geometry = record.geometry.as_ref().ok_or_else(|| {
        Error::Feature(format!(
            "acquisition '{}' lacks bearing geometry",
            record.acquisition_id
        ))
    })?;
    let freqs = fault_frequencies(geometry, record.shaft_hz());

    let signal = crate::datamodel::read_signal(dataset, record)?;
    let (offset, slice): (u64, &[f64]) = match (granularity, item.range) {
        (Granularity::Segment, Some((s, e))) => {
            let (s_us, e_us) = (s as usize, (e as usize).min(signal.len()));
            if s_us >= e_us {
                return Err(Error::Feature(format!(
                    "item '{}' range {s}:{e} is empty",
                    item.acquisition_id
                )));
            }
            (s, &signal[s_us..e_us])
        }
        _ => (0, &signal[..]),
    };

    let window = record.sampling_rate_hz.round() as usize; // 1-second windows
    let segments = dsp::segment_signal(slice, record.sampling_rate_hz, window, 0.0, &record.acquisition_id)?;

    let mut rows = Vec::with_capacity(segments.len());
    for seg in &segments {
        let time = time_domain_features(seg)?;
        let env = dsp::envelope_spectrum(seg, band_low_hz, band_high_hz)?;
        let fft = dsp::fft_magnitude(seg)?;
        let env_h = harmonic_magnitudes(&env, &freqs, N_HARMONICS, DEFAULT_TOLERANCE_FRACTION)?;
        let fft_h = harmonic_magnitudes(&fft, &freqs, N_HARMONICS, DEFAULT_TOLERANCE_FRACTION)?;
        let start = offset + seg.start_sample;
        rows.push(FeatureRow {
            time,
            env_harmonics: env_h.flattened(),
            fft_harmonics: fft_h.flattened(),
            label: record.label.clone(),
            acquisition_id: record.acquisition_id.clone(),
            segment_index: start / window as u64,
            start_sample: start,
        });
    }
    Ok(rows)
}

/// Fixed CSV header for feature tables; the column order is a contract.
pub fn csv_header(profile: &crate::datamodel::DatasetProfile) -> String {
    let mut cols = vec![
        "acquisition_id".to_string(),
        "segment_index".to_string(),
        "rms".to_string(),
        "peak_to_peak".to_string(),
        "kurtosis".to_string(),
        "skewness".to_string(),
        "crest_factor".to_string(),
    ];
    for base in ["env", "fft"] {
        for f in ["bpfo", "bpfi", "bsf", "ftf"] {
            for k in 1..=N_HARMONICS {
                cols.push(format!("{base}_{f}_{k}x"));
            }
        }
    }
    for mode in &profile.fault_modes {
        cols.push(format!("label_{mode}"));
    }
    cols.join(",")
}

/// One CSV line per row, column order matching [`csv_header`]. Undefined
/// moments serialize as `NaN`.
pub fn csv_line(row: &FeatureRow) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "NaN".into());
    let mut fields = vec![
        row.acquisition_id.clone(),
        row.segment_index.to_string(),
        row.time.rms.to_string(),
        row.time.peak_to_peak.to_string(),
        opt(row.time.kurtosis),
        opt(row.time.skewness),
        opt(row.time.crest_factor),
    ];
    for v in row.env_harmonics.iter().chain(row.fft_harmonics.iter()) {
        fields.push(v.to_string());
    }
    for i in 0..row.label.len() {
        fields.push(if row.label.bit(i) { "1" } else { "0" }.to_string());
    }
    fields.join(",")
}
