//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Every tolerance is pinned in the assertions below; the suite builds its
//! own synthetic inputs and exercises the CLI binary where byte-level
//! reproducibility is the claim.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Output;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use bearing_eval::datamodel::{PlanItem, SplitPlan};
use bearing_eval::dsp;
use bearing_eval::eval::{self, FeatureStore, PipelineConfig};
use bearing_eval::features;
use bearing_eval::models::{ModelKind, ModelSpec};
use bearing_eval::splits::{self, FindingClass, LeakyMode, Witness};
use bearing_eval::synthetic::{self, BenchmarkParams};
use bearing_eval::toy;

fn pass(criterion: usize, name: &str, started: Instant, limit_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        elapsed < limit_s,
        "criterion {criterion} exceeded its {limit_s} s budget: {elapsed:.1} s"
    );
    println!("criterion {criterion} ({name}): PASS in {elapsed:.1} s");
}

#[test]
fn criterion_1_analytic_oracle() {
    let started = Instant::now();

    let ceiling = toy::theoretical_max_accuracy(1.5, 3).unwrap();
    assert!(
        (ceiling - 0.9030).abs() <= 1e-4,
        "ceiling {ceiling} differs from 0.9030 by more than 1e-4"
    );

    // Monte-Carlo accuracy of the MAP threshold rule over 1e6 samples
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n = 1_000_000usize;
    let mut correct = 0usize;
    for i in 0..n {
        let label = i % 2 == 0;
        let base = if label { 1.5 } else { 0.0 };
        let mean = (0..3).map(|_| base + normal.sample(&mut rng)).sum::<f64>() / 3.0;
        if (mean > 0.75) == label {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / n as f64;
    assert!(
        (accuracy - ceiling).abs() <= 0.002,
        "Monte-Carlo accuracy {accuracy} vs ceiling {ceiling}"
    );

    pass(1, "analytic oracle", started, 10.0);
}

#[test]
fn criterion_2_toy_leakage_replication() {
    let started = Instant::now();
    let config = toy::ToyConfig::default();
    let ceiling = toy::theoretical_max_accuracy(config.a_f, config.n_fault_features).unwrap();

    for spec in toy::default_toy_models(0) {
        let valid =
            toy::run_toy_experiment(&config, 2, &spec, toy::TestMode::Valid, 20).unwrap();
        let leaky =
            toy::run_toy_experiment(&config, 2, &spec, toy::TestMode::Leakage, 20).unwrap();
        assert!(
            leaky.mean > valid.mean,
            "{}: leakage mean {} does not exceed valid mean {}",
            spec.kind.name(),
            leaky.mean,
            valid.mean
        );
        if spec.kind == ModelKind::LogisticRegression {
            assert!(
                leaky.mean > ceiling,
                "logistic regression leakage mean {} does not exceed the {ceiling:.4} ceiling",
                leaky.mean
            );
        }
        for (seed, accuracy) in valid.accuracies.iter().enumerate() {
            assert!(
                *accuracy <= ceiling + 0.02,
                "{} seed {seed}: valid accuracy {accuracy} above ceiling + 0.02",
                spec.kind.name()
            );
        }
    }

    pass(2, "toy leakage replication", started, 300.0);
}

/// Exact integer pair-counting oracle, doubled to avoid halves.
fn brute_force_auroc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins2 = 0u64;
    let mut pairs = 0u64;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                wins2 += 2;
            } else if scores[i] == scores[j] {
                wins2 += 1;
            }
        }
    }
    wins2 as f64 / (2 * pairs) as f64
}

#[test]
fn criterion_3_auroc_correctness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    for trial in 0..1_000 {
        let n = rng.random_range(2..=50);
        // a coarse score grid keeps ties frequent
        let levels = rng.random_range(2..=12);
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0..levels) as f64 / levels as f64)
            .collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        labels[0] = true;
        if labels.iter().all(|&l| l) {
            labels[n - 1] = false;
        }

        let mw = eval::auroc(&scores, &labels).unwrap();
        let oracle = brute_force_auroc(&scores, &labels);
        assert!(
            (mw - oracle).abs() <= 1e-12,
            "trial {trial}: Mann-Whitney {mw} vs brute force {oracle}"
        );
        let area = eval::roc_curve(&scores, &labels).unwrap().area();
        assert!(
            (area - mw).abs() <= 1e-12,
            "trial {trial}: trapezoid {area} vs Mann-Whitney {mw}"
        );

        let flipped: Vec<bool> = labels.iter().map(|&l| !l).collect();
        let complement = eval::auroc(&scores, &flipped).unwrap();
        assert!((mw + complement - 1.0).abs() <= 1e-12, "trial {trial}: flip identity");
    }

    // all-tied scores sit exactly at one half
    let tied = eval::auroc(&[0.3; 10], &[true, false, true, false, true, false, true, false, true, false]).unwrap();
    assert_eq!(tied, 0.5);

    pass(3, "auroc correctness", started, 30.0);
}

#[test]
fn criterion_4_split_combinatorics() {
    let started = Instant::now();

    // UORED: 5 tuning + 100 eval, pairwise distinct, disjoint, exact 3:2
    let uored = synthetic::uored_metadata_manifest();
    let index = uored.index();
    let (tuning, eval_plans) = splits::generate_uored_splits(&uored, 5, 100, 7).unwrap();
    assert_eq!(tuning.len() + eval_plans.len(), 105);
    let mut keys = BTreeSet::new();
    for plan in tuning.iter().chain(&eval_plans) {
        assert!(keys.insert(plan.content_key()), "duplicate plan {}", plan.plan_id);
        let mode_counts = |items: &BTreeSet<PlanItem>| -> Vec<usize> {
            let mut bearings_per_mode = vec![BTreeSet::new(); 4];
            for item in items {
                let rec = index[item.acquisition_id.as_str()];
                if let Some(mode) = (0..4).find(|&m| {
                    uored.bearings().iter().any(|b| {
                        b.bearing_id == rec.bearing_id
                            && b.fault_modes_present.contains(&uored.profile.fault_modes[m])
                    })
                }) {
                    bearings_per_mode[mode].insert(rec.bearing_id.clone());
                }
            }
            bearings_per_mode.iter().map(BTreeSet::len).collect()
        };
        assert_eq!(mode_counts(&plan.train_items), vec![3, 3, 3, 3]);
        assert_eq!(mode_counts(&plan.test_items), vec![2, 2, 2, 2]);
    }
    assert_eq!(keys.len(), 105);

    // exhaustive enumeration is exactly the 10^4 space
    let (_, all) = splits::generate_uored_splits(&uored, 0, 10_000, 0).unwrap();
    let all_keys: BTreeSet<String> = all.iter().map(|p| p.content_key()).collect();
    assert_eq!(all_keys.len(), 10_000);
    assert!(splits::generate_uored_splits(&uored, 0, 10_001, 0).is_err());

    // PU: 4:2 / 4:2 / 3:2 with 7 faulty training bearings
    let pu = synthetic::pu_metadata_manifest();
    let pu_index = pu.index();
    let (pu_tuning, pu_eval) = splits::generate_pu_splits(&pu, 5, 100, 7).unwrap();
    for plan in pu_tuning.iter().chain(&pu_eval) {
        let count = |items: &BTreeSet<PlanItem>, faulty: bool| -> usize {
            items
                .iter()
                .map(|i| pu_index[i.acquisition_id.as_str()])
                .filter(|r| r.label.is_healthy() != faulty)
                .map(|r| r.bearing_id.as_str())
                .collect::<BTreeSet<_>>()
                .len()
        };
        assert_eq!(count(&plan.train_items, true), 7, "faulty training bearings");
        assert_eq!(count(&plan.train_items, false), 4, "healthy training bearings");
        assert_eq!(count(&plan.test_items, true), 4);
        assert_eq!(count(&plan.test_items, false), 2);
    }

    // CWRU: 50 splits -> 100 evaluation plans
    let cwru = synthetic::cwru_metadata_manifest();
    let plans = splits::generate_cwru_splits(&cwru, 50, 7).unwrap();
    assert_eq!(plans.len(), 100);

    pass(4, "split combinatorics", started, 60.0);
}

fn witness_is_correct(
    witness: &Witness,
    plan: &SplitPlan,
    dataset: &bearing_eval::datamodel::Dataset,
) -> bool {
    let index = dataset.index();
    let bearings = |items: &BTreeSet<PlanItem>| -> BTreeSet<&str> {
        items
            .iter()
            .map(|i| index[i.acquisition_id.as_str()].bearing_id.as_str())
            .collect()
    };
    match witness {
        Witness::SharedSignal { acquisition_id } => {
            let on = |items: &BTreeSet<PlanItem>| {
                items.iter().any(|i| &i.acquisition_id == acquisition_id)
            };
            on(&plan.train_items) && on(&plan.test_items)
        }
        Witness::SharedBearingCondition { bearing_id, .. }
        | Witness::SharedBearing { bearing_id, .. } => {
            bearings(&plan.train_items).contains(bearing_id.as_str())
                && bearings(&plan.test_items).contains(bearing_id.as_str())
        }
    }
}

#[test]
fn criterion_5_auditor_soundness() {
    let started = Instant::now();

    let uored = synthetic::uored_metadata_manifest();
    let pu = synthetic::pu_metadata_manifest();
    let cwru = synthetic::cwru_metadata_manifest();

    let (_, uored_bases) = splits::generate_uored_splits(&uored, 0, 50, 5).unwrap();
    let (_, pu_bases) = splits::generate_pu_splits(&pu, 0, 50, 5).unwrap();
    let cwru_bases = splits::generate_cwru_splits(&cwru, 25, 5).unwrap();

    // every bearing-wise generator output audits clean
    for (dataset, bases) in [(&uored, &uored_bases), (&pu, &pu_bases), (&cwru, &cwru_bases)] {
        for plan in bases.iter() {
            let finding = splits::audit_split(plan, dataset).unwrap();
            assert!(finding.is_clean(), "{} audited {}", plan.plan_id, finding.class);
        }
    }

    // every leaky mode yields its taxonomy class with a correct witness,
    // over >= 50 plans per mode
    let mode_cases: Vec<(&bearing_eval::datamodel::Dataset, &Vec<SplitPlan>, LeakyMode)> = vec![
        (&uored, &uored_bases, LeakyMode::Segmentation { holdout_fraction: 0.2 }),
        (&uored, &uored_bases, LeakyMode::UoredSevereReinsertion),
        (&pu, &pu_bases, LeakyMode::PuConditionHoldout),
        (
            &pu,
            &pu_bases,
            LeakyMode::PuRepetitionHoldout { train_reps: 15, test_reps: 5 },
        ),
    ];
    for (dataset, bases, mode) in mode_cases {
        assert!(bases.len() >= 50);
        for (i, base) in bases.iter().enumerate() {
            let plan = splits::generate_leaky_plan(dataset, base, &mode, i as u64).unwrap();
            let finding = splits::audit_split(&plan, dataset).unwrap();
            assert_eq!(
                finding.class,
                mode.expected_finding(),
                "{} plan {}",
                mode.name(),
                plan.plan_id
            );
            let witness = finding.witnesses.first().expect("leaky finding has witnesses");
            assert!(
                witness_is_correct(witness, &plan, dataset),
                "{}: witness {witness} not backed by the plan",
                mode.name()
            );
        }
    }
    // the CWRU group mode takes no base; vary the seed over 50 plans
    for seed in 0..50u64 {
        let plan = splits::generate_leaky_plan(
            &cwru,
            &cwru_bases[0],
            &LeakyMode::CwruConditionGroups,
            seed,
        )
        .unwrap();
        let finding = splits::audit_split(&plan, &cwru).unwrap();
        assert_eq!(finding.class, FindingClass::ConditionWise);
        let witness = finding.witnesses.first().unwrap();
        assert!(witness_is_correct(witness, &plan, &cwru));
    }

    pass(5, "auditor soundness", started, 60.0);
}

#[test]
fn criterion_6_dsp_oracle() {
    let started = Instant::now();

    // noiseless synthetic fault: envelope peak at 64 Hz within one bin
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let fs = 12_000.0;
    let signal = dsp::synth_bearing_signal(64.0, 2_500.0, fs, 10.0, 0.0, &mut rng).unwrap();
    let segment = dsp::Segment {
        samples: signal,
        sampling_rate_hz: fs,
        parent_acquisition: "oracle".into(),
        start_sample: 0,
    };
    let spectrum = dsp::envelope_spectrum(&segment, 500.0, 6_000.0).unwrap();
    let min_bin = (5.0 / spectrum.bin_width_hz) as usize;
    let peak_bin = spectrum.argmax_from(min_bin);
    assert!(
        (spectrum.freq_of_bin(peak_bin) - 64.0).abs() <= spectrum.bin_width_hz,
        "envelope peak at {} Hz",
        spectrum.freq_of_bin(peak_bin)
    );

    // harmonics 1x-3x each above 5x the local noise-floor median
    let freqs = features::FaultFrequencies {
        bpfo_hz: 64.0,
        bpfi_hz: 96.0,
        bsf_hz: 48.0,
        ftf_hz: 8.0,
    };
    let table = features::harmonic_magnitudes(&spectrum, &freqs, 5, 0.02).unwrap();
    for k in 0..3 {
        let target = 64.0 * (k + 1) as f64;
        let centre = (target / spectrum.bin_width_hz).round() as usize;
        let skip = (0.02 * target / spectrum.bin_width_hz).ceil() as usize + 1;
        let w = (40.0 / spectrum.bin_width_hz) as usize;
        let mut neighbours: Vec<f64> = (centre.saturating_sub(w)..centre + w)
            .filter(|i| (*i as i64 - centre as i64).unsigned_abs() as usize > skip)
            .filter(|i| *i < spectrum.magnitudes.len())
            .map(|i| spectrum.magnitudes[i])
            .collect();
        neighbours.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = neighbours[neighbours.len() / 2];
        assert!(
            table.values[0][k] > 5.0 * median,
            "harmonic {}x magnitude {} vs 5 x median {median}",
            k + 1,
            table.values[0][k]
        );
    }

    // Parseval within 1e-6 relative over 100 random segments
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for _ in 0..100 {
        let n = rng.random_range(64..=4_096);
        let samples: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let time_energy: f64 = samples.iter().map(|x| x * x).sum();
        let seg = dsp::Segment {
            samples,
            sampling_rate_hz: n as f64,
            parent_acquisition: "parseval".into(),
            start_sample: 0,
        };
        let spec = dsp::fft_magnitude(&seg).unwrap();
        let last = spec.magnitudes.len() - 1;
        let mut freq_energy = spec.magnitudes[0].powi(2);
        for (k, &m) in spec.magnitudes.iter().enumerate().skip(1) {
            if n % 2 == 0 && k == last {
                freq_energy += m * m;
            } else {
                freq_energy += 2.0 * m * m;
            }
        }
        freq_energy /= n as f64;
        assert!(
            (time_energy - freq_energy).abs() / time_energy < 1e-6,
            "Parseval violated at n = {n}"
        );
    }

    pass(6, "dsp oracle", started, 30.0);
}

#[test]
fn criterion_7_end_to_end_leakage_delta() {
    let started = Instant::now();

    let dir = tempfile::tempdir().unwrap();
    let dataset =
        synthetic::write_benchmark_dataset(dir.path(), &BenchmarkParams::default(), 77).unwrap();
    assert_eq!(dataset.bearings().len(), 20);

    let (_, clean_plans) = splits::generate_bearing_wise_splits(&dataset, (3, 2), 0, 20, 77).unwrap();
    let leaky_plans: Vec<SplitPlan> = clean_plans
        .iter()
        .enumerate()
        .map(|(i, base)| {
            splits::generate_leaky_plan(
                &dataset,
                base,
                &LeakyMode::Segmentation { holdout_fraction: 0.2 },
                77 + i as u64,
            )
            .unwrap()
        })
        .collect();
    assert_eq!(clean_plans.len(), 20);
    assert_eq!(leaky_plans.len(), 20);

    let config = PipelineConfig {
        band_high_hz: 6_000.0,
        ..PipelineConfig::default()
    };
    let store = FeatureStore::new(&dataset, config.band_low_hz, config.band_high_hz);
    let spec = ModelSpec::new(ModelKind::RandomForest, 7).with("max_depth", 12.0);

    let clean = eval::run_cv(&spec, &clean_plans, &[], &store, &config, serde_json::json!({}))
        .unwrap();
    let leaky = eval::run_cv(&spec, &leaky_plans, &[], &store, &config, serde_json::json!({}))
        .unwrap();
    assert!(clean.failures.is_empty());
    assert!(leaky.failures.is_empty());

    let delta = leaky.aggregate.mean_macro_auroc - clean.aggregate.mean_macro_auroc;
    assert!(
        delta >= 0.03,
        "segmentation leakage inflated macro AUROC by {delta:.4} (clean {:.4}, leaky {:.4}); need >= 0.03",
        clean.aggregate.mean_macro_auroc,
        leaky.aggregate.mean_macro_auroc
    );

    pass(7, "end-to-end leakage delta", started, 600.0);
}

// ---------------------------------------------------------------------------
// criterion 8: determinism of CLI artifacts

fn run_cli(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_bearing-eval"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_same_file(a: &Path, b: &Path) {
    let fa = std::fs::read(a).unwrap_or_else(|_| panic!("missing {}", a.display()));
    let fb = std::fs::read(b).unwrap_or_else(|_| panic!("missing {}", b.display()));
    assert_eq!(
        fa,
        fb,
        "{} and {} differ",
        a.display(),
        b.display()
    );
}

/// Write the artifact's embedded config snapshot to a JSON file.
fn snapshot_to_file(artifact: &Path, out: &Path) {
    let config = bearing_eval::cli::config_from_artifact(artifact).unwrap();
    std::fs::write(out, serde_json::to_string_pretty(&config).unwrap()).unwrap();
}

#[test]
fn criterion_8_determinism() {
    let started = Instant::now();
    let root = tempfile::tempdir().unwrap();
    let path = |s: &str| root.path().join(s);
    let s = |p: std::path::PathBuf| p.to_str().unwrap().to_string();

    // toy: identical invocations, then a rerun from the embedded snapshot
    let toy_args = ["--bearings", "1,2", "--seeds", "3", "--seed", "9"];
    for dir in ["toy1", "toy2"] {
        let out = run_cli(&[&["toy", "--out", &s(path(dir))], &toy_args[..]].concat());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_same_file(&path("toy1/toy_runs.csv"), &path("toy2/toy_runs.csv"));
    assert_same_file(&path("toy1/toy_aggregate.csv"), &path("toy2/toy_aggregate.csv"));
    snapshot_to_file(&path("toy1/toy_runs.csv"), &path("toy_snapshot.json"));
    let out = run_cli(&[
        "toy",
        "--out",
        &s(path("toy3")),
        "--config",
        &s(path("toy_snapshot.json")),
    ]);
    assert!(out.status.success());
    assert_same_file(&path("toy1/toy_runs.csv"), &path("toy3/toy_runs.csv"));
    assert_same_file(&path("toy1/toy_aggregate.csv"), &path("toy3/toy_aggregate.csv"));

    // a small signal-backed dataset for split/features/run determinism
    let bench = root.path().join("bench");
    let params = BenchmarkParams {
        bearings_per_mode: 3,
        duration_s: 4.0,
        ..BenchmarkParams::default()
    };
    synthetic::write_benchmark_dataset(&bench, &params, 8).unwrap();
    let manifest = s(bench.join("manifest.jsonl"));

    // split twice, byte-identical; then from its snapshot
    let split_args = ["--ratio", "2:1", "--tuning", "2", "--eval", "4", "--seed", "5"];
    for name in ["plans1.tsv", "plans2.tsv"] {
        let out = run_cli(
            &[
                &["split", "--manifest", &manifest, "--out", &s(path(name))],
                &split_args[..],
            ]
            .concat(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_same_file(&path("plans1.tsv"), &path("plans2.tsv"));
    snapshot_to_file(&path("plans1.tsv"), &path("split_snapshot.json"));
    let out = run_cli(&[
        "split",
        "--manifest",
        &manifest,
        "--out",
        &s(path("plans3.tsv")),
        "--config",
        &s(path("split_snapshot.json")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_same_file(&path("plans1.tsv"), &path("plans3.tsv"));

    // audit output is stable and clean on the generated plans
    let audit1 = run_cli(&["audit", "--manifest", &manifest, "--plan", &s(path("plans1.tsv"))]);
    let audit2 = run_cli(&["audit", "--manifest", &manifest, "--plan", &s(path("plans1.tsv"))]);
    assert_eq!(audit1.status.code(), Some(0));
    assert_eq!(audit1.stdout, audit2.stdout);

    // features twice, then from the snapshot
    for dir in ["feat1", "feat2"] {
        let out = run_cli(&[
            "features",
            "--manifest",
            &manifest,
            "--plan",
            &s(path("plans1.tsv")),
            "--out",
            &s(path(dir)),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_same_file(&path("feat1/features_train.csv"), &path("feat2/features_train.csv"));
    assert_same_file(&path("feat1/features_test.csv"), &path("feat2/features_test.csv"));
    snapshot_to_file(&path("feat1/features_train.csv"), &path("feat_snapshot.json"));
    let out = run_cli(&[
        "features",
        "--manifest",
        &manifest,
        "--plan",
        &s(path("plans1.tsv")),
        "--out",
        &s(path("feat3")),
        "--config",
        &s(path("feat_snapshot.json")),
    ]);
    assert!(out.status.success());
    assert_same_file(&path("feat1/features_train.csv"), &path("feat3/features_train.csv"));

    // run: plan files in, full CVM-CV out; byte-identical artifacts,
    // including across different worker counts
    let tuning_file = s(path("run_tuning.tsv"));
    let eval_file = s(path("run_eval.tsv"));
    let out = run_cli(&[
        "split", "--manifest", &manifest, "--out", &tuning_file,
        "--ratio", "2:1", "--tuning", "2", "--eval", "0", "--seed", "31",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run_cli(&[
        "split", "--manifest", &manifest, "--out", &eval_file,
        "--ratio", "2:1", "--tuning", "0", "--eval", "4", "--seed", "32",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for (dir, workers) in [("run1", "1"), ("run2", "4")] {
        let out = run_cli(&[
            "run",
            "--manifest", &manifest,
            "--tuning-plans", &tuning_file,
            "--eval-plans", &eval_file,
            "--models", "decision_tree",
            "--seed", "3",
            "--workers", workers,
            "--out", &s(path(dir)),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_same_file(&path("run1/per_run.csv"), &path("run2/per_run.csv"));
    assert_same_file(&path("run1/aggregate.csv"), &path("run2/aggregate.csv"));

    // rerun from the embedded snapshot (worker count is part of the
    // snapshot; the comparison above already showed it cannot matter)
    snapshot_to_file(&path("run1/per_run.csv"), &path("run_snapshot.json"));
    let out = run_cli(&[
        "run",
        "--manifest", &manifest,
        "--tuning-plans", &tuning_file,
        "--eval-plans", &eval_file,
        "--out", &s(path("run3")),
        "--config", &s(path("run_snapshot.json")),
        "--workers", "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_same_file(&path("run1/per_run.csv"), &path("run3/per_run.csv"));
    assert_same_file(&path("run1/aggregate.csv"), &path("run3/aggregate.csv"));

    pass(8, "determinism", started, 600.0);
}
