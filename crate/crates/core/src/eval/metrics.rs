//! ROC / AUROC / Macro-AUROC. The AUROC is computed exactly from integer
//! rank sums (Mann-Whitney with ties counted one half), so it agrees with
//! brute-force pair counting to the last bit of the final division.

use crate::error::{Error, Result};

/// Mann-Whitney AUROC: the fraction of (positive, negative) pairs ranked
/// correctly, ties counted 1/2. Labels are `true` for positive.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Eval(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "auroc needs both classes, got {n_pos} positives / {n_neg} negatives"
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Eval("auroc: scores contain NaN".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("no NaN"));

    // doubled rank sum of positives, exact in integers: a tie group over
    // 1-based ranks i+1..=j contributes (i+1+j) per member
    let mut rank2_pos: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let rank2 = (i + 1 + j + 1) as u128;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank2_pos += rank2;
            }
        }
        i = j + 1;
    }

    let np = n_pos as u128;
    let nn = n_neg as u128;
    // U = R_pos - np(np+1)/2, AUC = U / (np nn); everything scaled by 2
    let numerator = rank2_pos - np * (np + 1);
    Ok(numerator as f64 / (2 * np * nn) as f64)
}

/// ROC curve points ordered from (0,0) to (1,1); tied scores collapse to
/// a single sweep step, producing the diagonal segments whose trapezoids
/// realize the half-credit tie convention.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
}

impl RocCurve {
    /// Trapezoidal area; equals [`auroc`] to floating-point accuracy.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| {
                let (x0, y0) = w[0];
                let (x1, y1) = w[1];
                (x1 - x0) * (y0 + y1) / 2.0
            })
            .sum()
    }
}

pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "roc curve needs both classes".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("no NaN"));

    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        for &idx in &order[i..=j] {
            if labels[idx] {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        i = j + 1;
    }
    Ok(RocCurve { points })
}

/// Macro AUROC plus the number of modes excluded as undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroAuroc {
    pub value: f64,
    pub excluded: usize,
}

/// Arithmetic mean of the defined per-mode AUROCs; undefined modes
/// (single-class test sides) are excluded with a recorded count.
pub fn macro_auroc(per_mode: &[Option<f64>]) -> Result<MacroAuroc> {
    if per_mode.is_empty() {
        return Err(Error::UndefinedMetric("macro auroc over zero modes".into()));
    }
    let defined: Vec<f64> = per_mode.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::UndefinedMetric(
            "macro auroc: every mode is undefined".into(),
        ));
    }
    Ok(MacroAuroc {
        value: defined.iter().sum::<f64>() / defined.len() as f64,
        excluded: per_mode.len() - defined.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// O(n^2) oracle in exact integer arithmetic (doubled counts).
    fn brute_force_auroc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins2: u64 = 0;
        let mut pairs: u64 = 0;
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
    fn textbook_cases() {
        assert_eq!(
            auroc(&[0.9, 0.8, 0.3, 0.2], &[true, true, false, false]).unwrap(),
            1.0
        );
        assert_eq!(
            auroc(&[0.9, 0.3, 0.8, 0.2], &[true, true, false, false]).unwrap(),
            0.75
        );
        assert_eq!(auroc(&[0.5; 6], &[true, false, true, false, true, false]).unwrap(), 0.5);
        assert!(matches!(
            auroc(&[0.1, 0.2], &[true, true]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn rank_sum_equals_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..1_000 {
            let n = rng.random_range(2..=50);
            // coarse grid forces plenty of ties
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 / 4.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            // guarantee both classes
            labels[0] = true;
            if labels.iter().all(|&l| l) {
                labels[n - 1] = false;
            }
            let fast = auroc(&scores, &labels).unwrap();
            let slow = brute_force_auroc(&scores, &labels);
            assert!(
                (fast - slow).abs() <= 1e-12,
                "trial {trial}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn flip_complement_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(2..=40);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            labels[0] = true;
            if labels.iter().all(|&l| l) {
                labels[n - 1] = false;
            }
            let flipped: Vec<bool> = labels.iter().map(|&l| !l).collect();
            let a = auroc(&scores, &labels).unwrap();
            let b = auroc(&scores, &flipped).unwrap();
            assert!((a + b - 1.0).abs() <= 1e-12, "{a} + {b} != 1");
        }
    }

    #[test]
    fn trapezoidal_area_matches_rank_statistic() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let n = rng.random_range(2..=50);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
            labels[0] = true;
            if labels.iter().all(|&l| l) {
                labels[n - 1] = false;
            }
            let curve = roc_curve(&scores, &labels).unwrap();
            let mw = auroc(&scores, &labels).unwrap();
            assert!((curve.area() - mw).abs() <= 1e-12);
            // curve endpoints and monotonicity
            assert_eq!(curve.points.first(), Some(&(0.0, 0.0)));
            assert_eq!(curve.points.last(), Some(&(1.0, 1.0)));
            for w in curve.points.windows(2) {
                assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
            }
        }
    }

    #[test]
    fn macro_mean_excludes_undefined_modes() {
        let m = macro_auroc(&[Some(1.0), Some(1.0), Some(1.0), Some(1.0)]).unwrap();
        assert_eq!(m.value, 1.0);
        assert_eq!(m.excluded, 0);

        let m = macro_auroc(&[Some(0.9), Some(0.7)]).unwrap();
        assert!((m.value - 0.8).abs() < 1e-15);

        let m = macro_auroc(&[Some(0.93), None, Some(0.87)]).unwrap();
        assert!((m.value - 0.90).abs() < 1e-12);
        assert_eq!(m.excluded, 1);

        assert!(macro_auroc(&[None, None]).is_err());
        assert!(macro_auroc(&[]).is_err());
    }
}
