//! Acceptance suite. Prints one `[PASS]`, `[FAIL]` or `[SKIP]` line per
//! criterion and exits non-zero if any criterion fails.
//!
//! Criteria 1-3 need nothing but the crate. Criteria 4-7 read the public
//! gait-in-Parkinson's recordings from the directory named by
//! `GAITPDB_DIR` and are skipped when it is unset.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use pd_it2fnn::evaluation::{
    loocv, noise_experiment, online_experiment, Grouping, NoiseConfig, Variant,
};
use pd_it2fnn::fcm::{fcm_cluster, random_memberships, FcmConfig};
use pd_it2fnn::gait_features::{extract_recording, segment_strides, ExtractConfig, Foot};
use pd_it2fnn::it2fnn::membership_bounds;
use pd_it2fnn::synthetic::square_wave_recording;
use pd_it2fnn::vgrf_io::load_dataset;
use pd_it2fnn::{
    batch_train, online_update, BatchConfig, Class, Dataset, FeatureRecord, FeatureVector,
    FuzzyRule, NormalizationParams, OnlineConfig, RuleBase, UpdateOutcome, Widths,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(name: &str, got: f64, target: f64, tol: f64) -> Result<String, String> {
    let line = format!("{name} {got:.2} (target {target:.2} +/- {tol})");
    if (got - target).abs() <= tol {
        Ok(line)
    } else {
        Err(line)
    }
}

const SEEDS: std::ops::Range<u64> = 42..52;

fn random_rule_base(rng: &mut ChaCha8Rng, rules: usize, widths: Widths) -> RuleBase {
    let rules = (0..rules)
        .map(|_| FuzzyRule {
            centers: std::array::from_fn(|_| rng.random()),
            consequent: rng.random_range(-1.0..=1.0),
            sigma_override: None,
        })
        .collect();
    RuleBase::new(rules, widths, NormalizationParams::unit()).unwrap()
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    for _ in 0..100_000 {
        let x: f64 = rng.random_range(-0.5..1.5);
        let c: f64 = rng.random();
        let lo: f64 = rng.random_range(1e-3..0.5);
        let up = lo * rng.random_range(1.0..20.0);
        let (ml, mu) = membership_bounds(x, c, Widths { lower: lo, upper: up });
        ensure(ml <= mu, || format!("membership order broken at x={x} c={c} ({lo}, {up})"))?;
    }

    for _ in 0..5_000 {
        let lo = rng.random_range(0.01..0.3);
        let count = rng.random_range(1..8);
        let rb = random_rule_base(&mut rng, count, Widths { lower: lo, upper: 2.0 * lo });
        let x: [f64; 10] = std::array::from_fn(|_| rng.random());
        let t = rb.infer(&x).map_err(|e| e.to_string())?;
        let min = rb.rules.iter().map(|r| r.consequent).fold(f64::INFINITY, f64::min);
        let max = rb.rules.iter().map(|r| r.consequent).fold(f64::NEG_INFINITY, f64::max);
        for (y, uncovered) in [(t.y_lower, t.lower_uncovered), (t.y_upper, t.upper_uncovered)] {
            ensure(uncovered || (y >= min - 1e-12 && y <= max + 1e-12), || {
                format!("output {y} outside consequent range [{min}, {max}]")
            })?;
        }
        let s = rng.random_range(0.01..0.3);
        let t1 = rb.with_widths(Widths { lower: s, upper: s });
        let tt = t1.infer(&x).map_err(|e| e.to_string())?;
        ensure(tt.y_lower == tt.y_upper, || "equal widths did not collapse the interval".into())?;
    }

    let mut fcm_runs = 0;
    for n in [2, 11, 50, 120, 200] {
        for d in [1, 4, 11] {
            let samples = random_memberships(n, d, (n * 31 + d) as u64);
            let clusters = rng.random_range(1..=n.min(10));
            let cfg = FcmConfig { clusters, seed: rng.random(), ..FcmConfig::default() };
            let res = fcm_cluster(&samples, &cfg).map_err(|e| e.to_string())?;
            for row in &res.memberships {
                let sum: f64 = row.iter().sum();
                ensure((sum - 1.0).abs() < 1e-9, || format!("membership row sums to {sum}"))?;
            }
            for w in res.objective_trace.windows(2) {
                ensure(w[1] <= w[0] + 1e-12, || format!("objective rose {} -> {}", w[0], w[1]))?;
            }
            fcm_runs += 1;
        }
    }

    let samples: Vec<FeatureVector> = (0..60)
        .map(|k| {
            let x: [f64; 10] = std::array::from_fn(|_| rng.random());
            FeatureVector {
                subject_id: format!("s{k}"),
                dataset: Dataset::Ga,
                label: if x[0] > 0.5 { Class::Patient } else { Class::Healthy },
                x,
            }
        })
        .collect();
    let cfg = BatchConfig { rules: 6, ..BatchConfig::default() };
    let a = batch_train(&samples, NormalizationParams::unit(), &cfg).map_err(|e| e.to_string())?;
    let b = batch_train(&samples, NormalizationParams::unit(), &cfg).map_err(|e| e.to_string())?;
    ensure(a == b, || "batch training is not deterministic".into())?;

    let mut added = 0;
    for _ in 0..500 {
        let mut rb = random_rule_base(&mut rng, 4, Widths::new(0.01, 0.1).unwrap());
        // Push every rule away from the probe so it is under-covered.
        let x: [f64; 10] = std::array::from_fn(|_| rng.random_range(0.0..0.1));
        for r in &mut rb.rules {
            r.centers[0] = rng.random_range(0.6..1.0);
        }
        let label = rb.classify(&x).unwrap().opposite();
        let before = rb.clone();
        let out = online_update(&mut rb, &x, label, &OnlineConfig::default()).map_err(|e| e.to_string())?;
        ensure(matches!(out, UpdateOutcome::RuleAdded { .. }), || format!("expected a new rule, got {out:?}"))?;
        ensure(rb.rules[..before.len()] == before.rules[..], || "existing rules changed".into())?;
        ensure(rb.classify(&x).unwrap() == label, || "new rule does not fix the sample".into())?;
        added += 1;
    }

    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "1e5 membership draws, 5000 rule bases, {fcm_runs} FCM runs, {added} online additions in {:.2} s",
        elapsed.as_secs_f64()
    ))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let samples = toy_samples();
    let mut worst = 0.0f64;
    for (lo, up) in [(0.01, 0.1), (0.05, 0.2), (0.2, 0.4)] {
        let cfg = BatchConfig { rules: 2, sigma_1: lo, sigma_2: up, ..BatchConfig::default() };
        let rb = batch_train(&samples, NormalizationParams::unit(), &cfg).map_err(|e| e.to_string())?;
        let rules = oracle_rules(&rb);
        for s in &samples {
            let t = rb.infer(&s.x).map_err(|e| e.to_string())?;
            let (yl, yu, y) = brute_force(&s.x, &rules);
            worst = worst.max((t.y_lower - yl).abs()).max((t.y_upper - yu).abs()).max((t.y - y).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    ensure(start.elapsed() < Duration::from_secs(1), || format!("took {:?}", start.elapsed()))?;
    Ok(format!("max deviation from brute force {worst:e}"))
}

fn criterion_3() -> Check {
    let sym = raw_features(&symmetric_recording());
    ensure(sym.z(3) == 0.0, || format!("symmetric z3 = {}", sym.z(3)))?;
    let asym = raw_features(&asymmetric_recording());
    let expected = 100.0 * (0.35f64 / 0.42).ln().abs();
    ensure((asym.z(3) - expected).abs() < 1e-9, || format!("z3 = {} expected {expected}", asym.z(3)))?;
    let wave = square_wave_recording(&[(0.6, 0.4)], 30.0, 600.0);
    let mut worst = 0.0f64;
    for foot in [Foot::Left, Foot::Right] {
        let t = segment_strides(&wave, foot, 20.0).map_err(|e| e.to_string())?;
        for s in &t.strides {
            worst = worst.max((s.swing_pct() - 40.0).abs());
        }
    }
    ensure(worst < 1e-9, || format!("swing_pct off by {worst:e}"))?;
    Ok(format!("z3 symmetric 0, z3 asymmetric {:.6}, swing_pct 40 within {worst:e}", asym.z(3)))
}

struct Corpus {
    records: Vec<FeatureRecord>,
    skipped: usize,
}

impl Corpus {
    fn subset(&self, d: Dataset) -> Vec<FeatureRecord> {
        self.records.iter().filter(|r| r.dataset == d).cloned().collect()
    }
}

fn load_corpus(dir: &Path) -> Result<Corpus, String> {
    let recs = load_dataset(dir, &[], None).map_err(|e| e.to_string())?;
    let cfg = ExtractConfig::default();
    let extracted: Vec<_> = recs.par_iter().map(|r| extract_recording(r, &cfg)).collect();
    let mut records = Vec::new();
    let mut skipped = 0;
    for (rec, ex) in recs.iter().zip(extracted) {
        match ex {
            Ok(ex) => records.push(ex.features),
            Err(e) => {
                eprintln!("  skipping {}: {e}", rec.record_id);
                skipped += 1;
            }
        }
    }
    Ok(Corpus { records, skipped })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean per-record LOOCV metric over the seed range.
fn seeded_loocv(records: &[FeatureRecord], rules: usize) -> Result<(f64, f64, f64), String> {
    let mut acc = Vec::new();
    let mut rec = Vec::new();
    let mut f1 = Vec::new();
    for seed in SEEDS {
        let cfg = BatchConfig { rules, seed, ..BatchConfig::default() };
        let cv = loocv(records, &cfg, Grouping::Sample).map_err(|e| e.to_string())?;
        acc.push(100.0 * cv.report.accuracy);
        rec.push(100.0 * cv.report.recall);
        f1.push(100.0 * cv.report.f1);
    }
    Ok((mean(&acc), mean(&rec), mean(&f1)))
}

fn criterion_4(c: &Corpus) -> Check {
    let mut lines = Vec::new();
    let mut failed = false;
    for (d, rules, target) in [(Dataset::Ga, 8, 92.92), (Dataset::Ju, 3, 85.83), (Dataset::Si, 4, 83.33)] {
        let (acc, recall, _) = seeded_loocv(&c.subset(d), rules)?;
        for r in [within(&format!("{d} accuracy"), acc, target, 5.0)]
            .into_iter()
            .chain((d == Dataset::Ga).then(|| within("Ga recall", recall, 97.33, 5.0)))
        {
            failed |= r.is_err();
            lines.push(r.unwrap_or_else(|e| e));
        }
    }
    let msg = lines.join("; ");
    if failed {
        Err(msg)
    } else {
        Ok(msg)
    }
}

fn criterion_5(c: &Corpus) -> Check {
    let (acc, _, f1) = seeded_loocv(&c.records, 9)?;
    let a = within("pooled accuracy", acc, 88.74, 5.0);
    let f = within("pooled F1", f1, 92.16, 5.0);
    let msg = format!("{}; {}", a.as_ref().unwrap_or_else(|e| e), f.as_ref().unwrap_or_else(|e| e));
    if a.is_ok() && f.is_ok() {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_6(c: &Corpus) -> Check {
    let ga = c.subset(Dataset::Ga);
    let ju = c.subset(Dataset::Ju);
    let res = online_experiment(
        &ga,
        &ju,
        &[("Ju", &ju)],
        &BatchConfig { rules: 8, ..BatchConfig::default() },
        &OnlineConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let (before, after) = (100.0 * res.before[0].1.accuracy, 100.0 * res.after[0].1.accuracy);
    let msg = format!(
        "Ju accuracy {before:.2} -> {after:.2}, rules {} -> {}",
        res.rules_before, res.rules_after
    );
    if after > before && res.rules_after > res.rules_before {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_7(c: &Corpus) -> Check {
    // Pooled training with per-dataset rows, R = 10, every seed.
    let sigmas = [0.0, 0.1, 0.3];
    let f1 = |sigma: f64, d: Option<Dataset>, v: Variant, runs: &[pd_it2fnn::evaluation::NoiseExperimentResult]| {
        mean(&runs.iter().map(|r| 100.0 * r.get(sigma, d, v).unwrap().f1).collect::<Vec<_>>())
    };
    let runs = SEEDS
        .map(|seed| {
            let cfg = NoiseConfig {
                batch: BatchConfig { rules: 10, seed, ..BatchConfig::default() },
                noise_sigmas: sigmas.to_vec(),
                noise_seed: seed,
                grouping: Grouping::Sample,
            };
            noise_experiment(&c.records, &cfg).map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut wins = 0;
    let mut parts = Vec::new();
    for d in Dataset::ALL {
        let (it2, t1) = (f1(0.3, Some(d), Variant::IT2, &runs), f1(0.3, Some(d), Variant::T1, &runs));
        if it2 >= t1 {
            wins += 1;
        }
        parts.push(format!("{d} IT2 {it2:.2} vs T1 {t1:.2}"));
    }
    let (clean, noisy) = (f1(0.0, None, Variant::IT2, &runs), f1(0.1, None, Variant::IT2, &runs));
    let msg = format!(
        "sigma 0.3: {} ({wins}/3 IT2 >= T1); pooled IT2 F1 {clean:.2} -> {noisy:.2} at sigma 0.1",
        parts.join(", "),
    );
    if wins >= 2 && clean - noisy < 10.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn run(check: impl FnOnce() -> Check) -> Outcome {
    match panic::catch_unwind(AssertUnwindSafe(check)) {
        Ok(Ok(msg)) => Outcome::Pass(msg),
        Ok(Err(msg)) => Outcome::Fail(msg),
        Err(p) => Outcome::Fail(format!(
            "panicked: {}",
            p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
        )),
    }
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "property suite", run(criterion_1)),
        (2, "oracle equivalence", run(criterion_2)),
        (3, "feature formulas", run(criterion_3)),
    ];

    let dataset: [(u32, &str, fn(&Corpus) -> Check); 4] = [
        (4, "per-dataset LOOCV reproduction", criterion_4),
        (5, "pooled model", criterion_5),
        (6, "online learning", criterion_6),
        (7, "noise robustness", criterion_7),
    ];
    match std::env::var_os("GAITPDB_DIR") {
        None => {
            for (id, name, _) in dataset {
                results.push((id, name, Outcome::Skip("GAITPDB_DIR not set".into())));
            }
        }
        Some(dir) => match load_corpus(Path::new(&dir)) {
            Err(e) => {
                for (id, name, _) in dataset {
                    results.push((id, name, Outcome::Fail(format!("cannot load dataset: {e}"))));
                }
            }
            Ok(corpus) => {
                eprintln!("  {} records extracted, {} skipped", corpus.records.len(), corpus.skipped);
                for (id, name, f) in dataset {
                    results.push((id, name, run(|| f(&corpus))));
                }
            }
        },
    }

    let mut failures = 0;
    for (id, name, outcome) in &results {
        let (tag, msg) = match outcome {
            Outcome::Pass(m) => ("PASS", m),
            Outcome::Fail(m) => {
                failures += 1;
                ("FAIL", m)
            }
            Outcome::Skip(m) => ("SKIP", m),
        };
        println!("[{tag}] criterion {id}: {name}: {msg}");
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
