//! Fuzzy c-means clustering.
//!
//! Alternates the two optimality conditions of the weighted within-cluster
//! objective `J = Σ_i Σ_k u_ik^m ‖x_k − v_i‖²`:
//!
//! * centres: `v_i = Σ_k u_ik^m x_k / Σ_k u_ik^m`
//! * memberships: `u_ik = 1 / Σ_j (‖x_k − v_i‖ / ‖x_k − v_j‖)^(2/(m−1))`
//!
//! until no centre moves by more than `tol` (Euclidean) or `max_iter`
//! iterations have run. Each half-step minimises `J` over one block of
//! variables, so `J` never increases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcmConfig {
    pub clusters: usize,
    /// Fuzzifier, must exceed 1.
    pub m: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FcmConfig {
    fn default() -> Self {
        FcmConfig {
            clusters: 2,
            m: 2.0,
            tol: 1e-5,
            max_iter: 300,
            seed: 42,
        }
    }
}

impl FcmConfig {
    pub fn validate(&self, n_samples: usize) -> Result<()> {
        if self.clusters == 0 {
            return Err(Error::Config("cluster count must be at least 1".into()));
        }
        if self.clusters > n_samples {
            return Err(Error::Config(format!(
                "cluster count {} exceeds sample count {n_samples}",
                self.clusters
            )));
        }
        if !(self.m > 1.0 && self.m.is_finite()) {
            return Err(Error::Config(format!("fuzzifier m must be > 1, got {}", self.m)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmResult {
    /// One centre per cluster.
    pub centers: Vec<Vec<f64>>,
    /// `memberships[k][i]` is the membership of sample `k` in cluster `i`.
    pub memberships: Vec<Vec<f64>>,
    pub iterations: usize,
    pub final_objective: f64,
    /// Objective after every iteration.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Random row-stochastic membership matrix from a seeded generator.
pub fn random_memberships(n_samples: usize, clusters: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples)
        .map(|_| {
            let mut row: Vec<f64> = (0..clusters).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|u| *u /= s);
            row
        })
        .collect()
}

fn update_centers(samples: &[Vec<f64>], memberships: &[Vec<f64>], m: f64, clusters: usize) -> Vec<Vec<f64>> {
    let dim = samples[0].len();
    let mut centers = vec![vec![0.0; dim]; clusters];
    let mut weights = vec![0.0; clusters];
    for (x, row) in samples.iter().zip(memberships) {
        for (i, &u) in row.iter().enumerate() {
            let w = u.powf(m);
            weights[i] += w;
            for (c, xv) in centers[i].iter_mut().zip(x) {
                *c += w * xv;
            }
        }
    }
    for (c, w) in centers.iter_mut().zip(&weights) {
        if *w > 0.0 {
            c.iter_mut().for_each(|v| *v /= w);
        }
    }
    centers
}

fn update_memberships(samples: &[Vec<f64>], centers: &[Vec<f64>], m: f64) -> Vec<Vec<f64>> {
    let exponent = 1.0 / (m - 1.0);
    samples
        .iter()
        .map(|x| {
            let d2: Vec<f64> = centers.iter().map(|c| squared_distance(x, c)).collect();
            if let Some(hit) = d2.iter().position(|&d| d == 0.0) {
                let mut row = vec![0.0; centers.len()];
                row[hit] = 1.0;
                return row;
            }
            // (d_i/d_j)^(2/(m-1)) == (d2_i/d2_j)^(1/(m-1))
            let inv: Vec<f64> = d2.iter().map(|d| d.powf(-exponent)).collect();
            let total: f64 = inv.iter().sum();
            inv.iter().map(|v| v / total).collect()
        })
        .collect()
}

pub fn objective(samples: &[Vec<f64>], centers: &[Vec<f64>], memberships: &[Vec<f64>], m: f64) -> f64 {
    samples
        .iter()
        .zip(memberships)
        .map(|(x, row)| {
            row.iter()
                .zip(centers)
                .map(|(u, c)| u.powf(m) * squared_distance(x, c))
                .sum::<f64>()
        })
        .sum()
}

fn check_samples(samples: &[Vec<f64>]) -> Result<()> {
    let dim = samples.first().map(Vec::len).unwrap_or(0);
    if dim == 0 {
        return Err(Error::Config("samples must be non-empty vectors".into()));
    }
    for (k, x) in samples.iter().enumerate() {
        if x.len() != dim {
            return Err(Error::Config(format!(
                "sample {k} has dimension {}, expected {dim}",
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("sample {k} contains a non-finite value")));
        }
    }
    Ok(())
}

/// Cluster `samples` starting from seeded random memberships.
pub fn fcm_cluster(samples: &[Vec<f64>], cfg: &FcmConfig) -> Result<FcmResult> {
    cfg.validate(samples.len())?;
    let init = random_memberships(samples.len(), cfg.clusters, cfg.seed);
    fcm_cluster_from(samples, cfg, init)
}

/// Cluster `samples` from an explicit initial membership matrix
/// (`init[k][i]`, rows summing to one). `cfg.seed` is ignored.
pub fn fcm_cluster_from(samples: &[Vec<f64>], cfg: &FcmConfig, init: Vec<Vec<f64>>) -> Result<FcmResult> {
    cfg.validate(samples.len())?;
    check_samples(samples)?;
    if init.len() != samples.len() || init.iter().any(|r| r.len() != cfg.clusters) {
        return Err(Error::Config("initial membership matrix has the wrong shape".into()));
    }

    let mut memberships = init;
    let mut centers = update_centers(samples, &memberships, cfg.m, cfg.clusters);
    memberships = update_memberships(samples, &centers, cfg.m);
    let mut trace = vec![objective(samples, &centers, &memberships, cfg.m)];
    let mut converged = false;
    let mut iterations = 1;

    while iterations < cfg.max_iter {
        let next = update_centers(samples, &memberships, cfg.m, cfg.clusters);
        let shift = centers
            .iter()
            .zip(&next)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        memberships = update_memberships(samples, &centers, cfg.m);
        trace.push(objective(samples, &centers, &memberships, cfg.m));
        iterations += 1;
        if shift < cfg.tol {
            converged = true;
            break;
        }
    }

    let final_objective = *trace.last().unwrap();
    if !final_objective.is_finite()
        || centers.iter().flatten().any(|v| !v.is_finite())
        || memberships.iter().flatten().any(|v| !v.is_finite())
    {
        return Err(Error::Numeric("fuzzy c-means produced a non-finite value".into()));
    }

    Ok(FcmResult {
        centers,
        memberships,
        iterations,
        final_objective,
        objective_trace: trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(clusters: usize) -> FcmConfig {
        FcmConfig {
            clusters,
            tol: 1e-12,
            max_iter: 1000,
            ..FcmConfig::default()
        }
    }

    #[test]
    fn two_points_two_clusters() {
        let samples = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let r = fcm_cluster(&samples, &cfg(2)).unwrap();
        let mut centers = r.centers.clone();
        centers.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for (c, x) in centers.iter().zip(&samples) {
            assert!(squared_distance(c, x).sqrt() < 1e-6, "{c:?}");
        }
        for row in &r.memberships {
            let max = row.iter().copied().fold(0.0, f64::max);
            assert!(max > 1.0 - 1e-6);
        }
        assert!(r.converged);
    }

    #[test]
    fn single_cluster_is_mean() {
        let samples = vec![vec![0.0, 3.0], vec![2.0, 5.0], vec![4.0, 1.0]];
        let r = fcm_cluster(&samples, &cfg(1)).unwrap();
        assert!((r.centers[0][0] - 2.0).abs() < 1e-12);
        assert!((r.centers[0][1] - 3.0).abs() < 1e-12);
        assert!(r.memberships.iter().all(|row| row == &vec![1.0]));
    }

    #[test]
    fn duplicated_samples_give_same_centers() {
        let samples = vec![
            vec![0.1, 0.2],
            vec![0.15, 0.22],
            vec![0.9, 0.8],
            vec![0.85, 0.75],
            vec![0.5, 0.1],
        ];
        let c = FcmConfig { clusters: 2, ..cfg(2) };
        let init = random_memberships(samples.len(), 2, 7);
        let once = fcm_cluster_from(&samples, &c, init.clone()).unwrap();
        let doubled: Vec<Vec<f64>> = samples.iter().chain(&samples).cloned().collect();
        let init2: Vec<Vec<f64>> = init.iter().chain(&init).cloned().collect();
        let twice = fcm_cluster_from(&doubled, &c, init2).unwrap();
        for (a, b) in once.centers.iter().zip(&twice.centers) {
            assert!(squared_distance(a, b).sqrt() < 1e-9);
        }
        // Different seeds agree up to cluster order on this well-separated set.
        let other = fcm_cluster(&doubled, &FcmConfig { seed: 99, ..c }).unwrap();
        let key = |v: &Vec<Vec<f64>>| {
            let mut v = v.clone();
            v.sort_by(|a, b| a[0].total_cmp(&b[0]));
            v
        };
        for (a, b) in key(&once.centers).iter().zip(&key(&other.centers)) {
            assert!(squared_distance(a, b).sqrt() < 1e-6);
        }
    }

    #[test]
    fn coincident_center_is_crisp() {
        let centers = vec![vec![0.0], vec![0.0], vec![1.0]];
        let u = update_memberships(&[vec![0.0]], &centers, 2.0);
        assert_eq!(u[0], vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn config_errors() {
        let samples = vec![vec![0.0], vec![1.0]];
        assert!(matches!(fcm_cluster(&samples, &cfg(3)), Err(Error::Config(_))));
        assert!(matches!(fcm_cluster(&samples, &cfg(0)), Err(Error::Config(_))));
        let bad_m = FcmConfig { m: 1.0, ..cfg(1) };
        assert!(matches!(fcm_cluster(&samples, &bad_m), Err(Error::Config(_))));
        let nan = vec![vec![f64::NAN], vec![1.0]];
        assert!(matches!(fcm_cluster(&nan, &cfg(1)), Err(Error::Numeric(_))));
    }

    #[test]
    fn deterministic() {
        let samples: Vec<Vec<f64>> = (0..30)
            .map(|k| vec![(k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()])
            .collect();
        let a = fcm_cluster(&samples, &cfg(4)).unwrap();
        let b = fcm_cluster(&samples, &cfg(4)).unwrap();
        assert_eq!(a, b);
    }
}
