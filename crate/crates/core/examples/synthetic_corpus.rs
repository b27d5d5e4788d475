//! Write a small synthetic corpus in the gait database layout.
//!
//! ```text
//! cargo run -p pd-it2fnn --example synthetic_corpus -- <out-dir> [subjects-per-group] [seed]
//! ```
//!
//! Patients walk with shorter, more variable and more asymmetric swings
//! than controls. Each subject gets two 100 s walks.

use std::path::PathBuf;

use pd_it2fnn::synthetic::pattern_recording;
use pd_it2fnn::vgrf_io::write_recording;
use pd_it2fnn::{Class, Dataset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn walk(rng: &mut ChaCha8Rng, cohort: Class) -> Vec<(f64, f64)> {
    let (swing, spread) = match cohort {
        Class::Patient => (0.36, 0.035),
        Class::Healthy => (0.40, 0.012),
    };
    let stance = Normal::<f64>::new(0.62, 0.02).unwrap();
    let swing = Normal::<f64>::new(swing, spread).unwrap();
    (0..95)
        .map(|_| (stance.sample(rng).clamp(0.45, 0.8), swing.sample(rng).clamp(0.25, 0.55)))
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().ok_or("usage: synthetic_corpus <out-dir> [subjects] [seed]")?);
    let subjects: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);
    std::fs::create_dir_all(&out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut written = 0;
    for dataset in Dataset::ALL {
        for (cohort, tag) in [(Class::Patient, "Pt"), (Class::Healthy, "Co")] {
            for s in 1..=subjects {
                let subject = format!("{dataset}{tag}{s:02}");
                for w in 1..=2 {
                    let left = walk(&mut rng, cohort);
                    let right = walk(&mut rng, cohort);
                    let mut rec = pattern_recording(&left, &right, 700.0);
                    rec.subject_id = subject.clone();
                    rec.record_id = format!("{subject}_{w:02}");
                    rec.cohort = cohort;
                    rec.dataset = dataset;
                    write_recording(&rec, &out.join(format!("{}.txt", rec.record_id)))?;
                    written += 1;
                }
            }
        }
    }
    println!("wrote {written} recordings to {}", out.display());
    Ok(())
}
