//! Build the signal-backed synthetic dataset, extract the handcrafted
//! feature table for one bearing-wise plan, and show a few rows.

use bearing_eval::features::{csv_header, csv_line, extract_feature_table};
use bearing_eval::splits::generate_bearing_wise_splits;
use bearing_eval::synthetic::{write_benchmark_dataset, BenchmarkParams};

fn main() -> bearing_eval::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("bearing-eval-bench"));
    println!("writing synthetic dataset to {}", dir.display());
    let dataset = write_benchmark_dataset(&dir, &BenchmarkParams::default(), 7)?;
    println!(
        "{} acquisitions over {} bearings",
        dataset.records.len(),
        dataset.bearings().len()
    );

    let (_, eval) = generate_bearing_wise_splits(&dataset, (3, 2), 0, 1, 7)?;
    let plan = &eval[0];
    let tables = extract_feature_table(&dataset, plan, 500.0, 6_000.0)?;
    println!(
        "plan {}: {} train rows, {} test rows, {} errors",
        plan.plan_id,
        tables.train.len(),
        tables.test.len(),
        tables.errors.len()
    );

    let header = csv_header(&dataset.profile);
    let short = |s: &str| s.split(',').take(8).collect::<Vec<_>>().join(",");
    println!();
    println!("{} ...", short(&header));
    for row in tables.train.iter().take(3) {
        println!("{} ...", short(&csv_line(row)));
    }

    let csv_path = dir.join("features_train.csv");
    let mut body = header;
    body.push('\n');
    for row in &tables.train {
        body.push_str(&csv_line(row));
        body.push('\n');
    }
    std::fs::write(&csv_path, body)?;
    println!();
    println!("full train table written to {}", csv_path.display());
    Ok(())
}
