//! Deterministic generator of labeled IoT-flow datasets.
//!
//! Rows come out in temporal order with attacks in contiguous bursts of
//! geometric length, a flag-like categorical column whose value usage
//! differs between classes by a configurable signal strength, five weakly
//! informative numeric columns drawn from class-conditional lognormals, and
//! a configurable number of pure-noise columns. The attack count is hit
//! exactly by construction.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::dataset::Dataset;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub rows: usize,
    pub attack_fraction: f64,
    /// Distinct values of the flag-like categorical column.
    pub cardinality: usize,
    /// 0 = attacks use the normal value distribution (no information),
    /// 1 = attacks confined to dedicated suspicious values that normal
    /// traffic never touches.
    pub signal_strength: f64,
    /// Pure-noise numeric columns appended after the five informative ones.
    pub noise_features: usize,
    /// Mean attack burst length (geometric).
    pub mean_burst_len: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            rows: 20_000,
            attack_fraction: 0.125,
            cardinality: 24,
            signal_strength: 0.9,
            noise_features: 5,
            mean_burst_len: 20.0,
            seed: 42,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.rows < 100 {
            return Err(Error::Argument(format!(
                "need at least 100 rows, got {}",
                self.rows
            )));
        }
        if !(self.attack_fraction > 0.0 && self.attack_fraction < 1.0) {
            return Err(Error::Argument(format!(
                "attack fraction {} outside (0, 1)",
                self.attack_fraction
            )));
        }
        if self.cardinality < 2 {
            return Err(Error::Argument("cardinality must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return Err(Error::Argument(format!(
                "signal strength {} outside [0, 1]",
                self.signal_strength
            )));
        }
        if self.mean_burst_len < 1.0 {
            return Err(Error::Argument("mean burst length must be >= 1".into()));
        }
        Ok(())
    }
}

/// Exact-quota label sequence: geometric bursts clipped to the configured
/// attack count, separated by randomly sized gaps of normal rows.
fn label_sequence(cfg: &SynthConfig, r: &mut ChaCha8Rng) -> Vec<u8> {
    let attacks_total = ((cfg.rows as f64 * cfg.attack_fraction).round() as usize)
        .clamp(1, cfg.rows - 1);
    let normals_total = cfg.rows - attacks_total;

    let p = 1.0 / cfg.mean_burst_len;
    let mut bursts: Vec<usize> = Vec::new();
    let mut planned = 0;
    while planned < attacks_total {
        let u: f64 = r.gen_range(0.0..1.0);
        let len = ((1.0 - u).ln() / (1.0 - p).ln()).ceil().max(1.0) as usize;
        let len = len.min(attacks_total - planned);
        bursts.push(len);
        planned += len;
    }

    // Composition of the normal rows into gaps around the bursts,
    // largest-remainder rounding to land exactly on the total.
    let n_gaps = bursts.len() + 1;
    let weights: Vec<f64> = (0..n_gaps)
        .map(|_| -r.gen_range(1e-12f64..1.0).ln())
        .collect();
    let total_weight: f64 = weights.iter().sum();
    let mut gaps: Vec<usize> = weights
        .iter()
        .map(|w| (w / total_weight * normals_total as f64).floor() as usize)
        .collect();
    let mut leftover = normals_total - gaps.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..n_gaps).collect();
    order.sort_by(|&a, &b| {
        let ra = weights[a] / total_weight * normals_total as f64 - gaps[a] as f64;
        let rb = weights[b] / total_weight * normals_total as f64 - gaps[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &g in &order {
        if leftover == 0 {
            break;
        }
        gaps[g] += 1;
        leftover -= 1;
    }

    let mut labels = Vec::with_capacity(cfg.rows);
    for (i, burst) in bursts.iter().enumerate() {
        labels.extend(std::iter::repeat(0).take(gaps[i]));
        labels.extend(std::iter::repeat(1).take(*burst));
    }
    labels.extend(std::iter::repeat(0).take(gaps[n_gaps - 1]));
    labels
}

/// Zipf-ish sampler over `count` items: weight of rank i is 1/(i+1).
struct RankedSampler {
    cumulative: Vec<f64>,
}

impl RankedSampler {
    fn new(count: usize) -> Self {
        let mut cumulative = Vec::with_capacity(count);
        let mut sum = 0.0;
        for i in 0..count {
            sum += 1.0 / (i + 1) as f64;
            cumulative.push(sum);
        }
        RankedSampler { cumulative }
    }

    fn sample(&self, r: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = r.gen_range(0.0..total);
        self.cumulative.partition_point(|&c| c <= u)
    }
}

/// Generate a labeled flow dataset; identical configs and seeds produce
/// identical datasets (and therefore byte-identical CSV files).
pub fn generate_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut r = rng::stream(cfg.seed, &[rng::SYNTH]);

    let labels = label_sequence(cfg, &mut r);
    let rows = labels.len();
    debug_assert_eq!(rows, cfg.rows);

    // Value pool: common values up front, suspicious values at the end.
    let suspicious_count = (cfg.cardinality / 4).max(1);
    let common_count = cfg.cardinality - suspicious_count;
    let values: Vec<String> = (0..cfg.cardinality).map(|i| format!("f{i:02}")).collect();
    let common = RankedSampler::new(common_count);
    let suspicious = RankedSampler::new(suspicious_count);
    // Normal traffic wanders into suspicious values only when the signal
    // is imperfect.
    let normal_leak = 0.1 * (1.0 - cfg.signal_strength);

    let mut flgs: Vec<String> = Vec::with_capacity(rows);
    for &label in &labels {
        let pick_suspicious = if label == 1 {
            r.gen_range(0.0..1.0) < cfg.signal_strength
        } else {
            r.gen_range(0.0..1.0) < normal_leak
        };
        let value = if pick_suspicious {
            common_count + suspicious.sample(&mut r)
        } else {
            common.sample(&mut r)
        };
        flgs.push(values[value].clone());
    }

    // Class-conditional lognormals with mild mean shifts; jitter is a
    // two-mode mixture whose weights flip under attack.
    struct Shifted {
        name: &'static str,
        mu: f64,
        sigma: f64,
        attack_shift: f64,
    }
    let informative = [
        Shifted { name: "rate", mu: 50f64.ln(), sigma: 1.0, attack_shift: 0.5 },
        Shifted { name: "sbytes", mu: 300f64.ln(), sigma: 1.2, attack_shift: -0.4 },
        Shifted { name: "dur", mu: 2f64.ln(), sigma: 0.8, attack_shift: 0.3 },
        Shifted { name: "load", mu: 100f64.ln(), sigma: 1.0, attack_shift: 0.25 },
    ];

    let mut numeric: Vec<(String, Vec<f64>)> = Vec::new();
    for spec in &informative {
        let normal_dist = LogNormal::new(spec.mu, spec.sigma).expect("valid lognormal");
        let attack_dist =
            LogNormal::new(spec.mu + spec.attack_shift, spec.sigma).expect("valid lognormal");
        let column: Vec<f64> = labels
            .iter()
            .map(|&label| {
                if label == 1 {
                    attack_dist.sample(&mut r)
                } else {
                    normal_dist.sample(&mut r)
                }
            })
            .collect();
        numeric.push((spec.name.to_string(), column));
    }
    {
        let low = LogNormal::new(5f64.ln(), 0.6).expect("valid lognormal");
        let high = LogNormal::new(20f64.ln(), 0.4).expect("valid lognormal");
        let column: Vec<f64> = labels
            .iter()
            .map(|&label| {
                let high_mode = r.gen_range(0.0..1.0) < if label == 1 { 0.6 } else { 0.3 };
                if high_mode {
                    high.sample(&mut r)
                } else {
                    low.sample(&mut r)
                }
            })
            .collect();
        numeric.push(("jitter".to_string(), column));
    }
    for i in 0..cfg.noise_features {
        let dist = LogNormal::new(10f64.ln(), 1.0).expect("valid lognormal");
        let column: Vec<f64> = (0..rows).map(|_| dist.sample(&mut r)).collect();
        numeric.push((format!("noise{}", i + 1), column));
    }

    let flow_ids: Vec<String> = (0..rows).map(|i| format!("flow-{i:06}")).collect();

    let mut b = Dataset::builder()
        .identifier("flow_id", flow_ids)
        .categorical("flgs", flgs);
    for (name, column) in numeric {
        b = b.numeric(name, column);
    }
    Ok(b.labels("label", labels).build()?.encode_categories())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{write_csv, LabelMap};
    use crate::wedf::build_wedf_dictionary;

    fn quick(rows: usize, seed: u64) -> SynthConfig {
        SynthConfig {
            rows,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn generation_is_deterministic_and_csv_stable() {
        let cfg = quick(500, 9);
        let a = generate_dataset(&cfg).unwrap();
        let b = generate_dataset(&cfg).unwrap();
        assert_eq!(a, b);

        let dir = tempfile::tempdir().unwrap();
        let pa = dir.path().join("a.csv");
        let pb = dir.path().join("b.csv");
        write_csv(&a, &pa, &LabelMap::default()).unwrap();
        write_csv(&b, &pb, &LabelMap::default()).unwrap();
        assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());

        let c = generate_dataset(&quick(500, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn attack_count_is_exact() {
        for rows in [500usize, 10_000] {
            let d = generate_dataset(&quick(rows, 3)).unwrap();
            let attacks = d.attack_count();
            let expected = (rows as f64 * 0.125).round() as usize;
            assert_eq!(attacks, expected);
            let realized = attacks as f64 / rows as f64;
            assert!((realized - 0.125).abs() <= 0.01);
        }
    }

    #[test]
    fn attacks_arrive_in_bursts() {
        let d = generate_dataset(&quick(10_000, 7)).unwrap();
        let labels = d.labels();
        let mut runs = Vec::new();
        let mut current = 0usize;
        for &l in labels {
            if l == 1 {
                current += 1;
            } else if current > 0 {
                runs.push(current);
                current = 0;
            }
        }
        if current > 0 {
            runs.push(current);
        }
        let total: usize = runs.iter().sum();
        assert_eq!(total, d.attack_count());
        let mean_run = total as f64 / runs.len() as f64;
        assert!(
            mean_run > 5.0,
            "attacks look scattered (mean run {mean_run})"
        );
    }

    #[test]
    fn wustl_shaped_config_matches_fold_arithmetic() {
        let d = generate_dataset(&quick(16_317, 1)).unwrap();
        assert_eq!(d.n_rows(), 16_317);
        let attacks = d.attack_count();
        assert_eq!(attacks, (16_317f64 * 0.125).round() as usize);
        // Ten folds of ~1632 rows with ~204 attacks each.
        assert!((attacks as f64 / 10.0 - 204.0).abs() < 1.0);
    }

    #[test]
    fn full_signal_confines_attacks_to_one_pure_value() {
        let cfg = SynthConfig {
            rows: 2_000,
            cardinality: 4,
            signal_strength: 1.0,
            seed: 5,
            ..Default::default()
        };
        let d = generate_dataset(&cfg).unwrap();
        let dict = build_wedf_dictionary(&d, "flgs", 0.5).unwrap();
        let positive: Vec<_> = dict.entries.iter().filter(|e| e.score > 0.0).collect();
        assert_eq!(positive.len(), 1, "expected one attack-bearing value");
        assert_eq!(positive[0].weight, 1.0);
        assert_eq!(positive[0].score, 0.5);
        for e in &dict.entries {
            if e.score == 0.0 {
                assert_eq!(e.z, 0);
            }
        }
    }

    #[test]
    fn zero_signal_makes_the_flag_column_uninformative() {
        let cfg = SynthConfig {
            rows: 4_000,
            signal_strength: 0.0,
            seed: 11,
            ..Default::default()
        };
        let d = generate_dataset(&cfg).unwrap().drop_identifiers();
        let ranking = crate::pipeline::mda_ranking(&d, 3, 2, 20).unwrap();
        let flgs_index = ranking
            .feature_names
            .iter()
            .position(|n| n == "flgs")
            .unwrap();
        let flgs_score = ranking.scores[flgs_index];
        let max_noise = ranking
            .feature_names
            .iter()
            .zip(&ranking.scores)
            .filter(|(n, _)| n.starts_with("noise"))
            .map(|(_, &s)| s.abs())
            .fold(0.0, f64::max);
        assert!(
            flgs_score.abs() <= max_noise + 0.02,
            "flgs {flgs_score} vs noise ceiling {max_noise}"
        );
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(generate_dataset(&quick(50, 0)).is_err());
        let mut bad = quick(500, 0);
        bad.attack_fraction = 0.0;
        assert!(generate_dataset(&bad).is_err());
        bad = quick(500, 0);
        bad.cardinality = 1;
        assert!(generate_dataset(&bad).is_err());
        bad = quick(500, 0);
        bad.signal_strength = 1.5;
        assert!(generate_dataset(&bad).is_err());
    }
}
