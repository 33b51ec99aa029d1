use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::Walk;
use crate::stats::autocorrelation;

/// |τ| above which the ruggedness is reported with a magnitude warning.
pub const TAU_WARNING_MAGNITUDE: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuggednessResult {
    pub per_route_rho1: Vec<f64>,
    pub rho_mean: f64,
    /// `1 / rho_mean`; `None` when `rho_mean` is exactly zero.
    pub tau: Option<f64>,
    /// Walks shorter than 3 points or with constant fitness.
    pub skipped: usize,
    pub warnings: Vec<String>,
}

/// Ruggedness `τ = 1 / mean_i ρ_i(1)` over random walks.
pub fn ruggedness(walks: &[Walk]) -> Result<RuggednessResult> {
    let mut per_route_rho1 = Vec::with_capacity(walks.len());
    let mut skipped = 0;
    for walk in walks {
        if walk.fitness_series.len() < 3 {
            skipped += 1;
            continue;
        }
        match autocorrelation(&walk.fitness_series, 1) {
            Ok(rho) => per_route_rho1.push(rho),
            Err(Error::Degenerate(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if per_route_rho1.is_empty() {
        return Err(Error::Degenerate(format!(
            "all {} walks are too short or have zero fitness variance",
            walks.len()
        )));
    }
    let rho_mean = per_route_rho1.iter().sum::<f64>() / per_route_rho1.len() as f64;
    let mut warnings = Vec::new();
    let tau = (rho_mean != 0.0).then(|| 1.0 / rho_mean);
    match tau {
        None => warnings.push("mean lag-1 autocorrelation is zero; tau undefined".to_string()),
        Some(t) => {
            if t < 0.0 {
                warnings.push(format!("negative correlation along walks (tau = {t})"));
            }
            if t.abs() > TAU_WARNING_MAGNITUDE {
                warnings.push(format!(
                    "|tau| = {} exceeds {TAU_WARNING_MAGNITUDE}; mean autocorrelation is near zero",
                    t.abs()
                ));
            }
        }
    }
    if skipped > 0 {
        warnings.push(format!("{skipped} walk(s) skipped"));
    }
    Ok(RuggednessResult {
        per_route_rho1,
        rho_mean,
        tau,
        skipped,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genotype::Genotype;

    fn walk(series: Vec<f64>) -> Walk {
        Walk {
            route_id: 0,
            genotypes: vec![Genotype::zeros(1); series.len()],
            fitness_series: series,
            stuck: false,
        }
    }

    #[test]
    fn linear_ramp_is_smooth() {
        let r = ruggedness(&[walk((0..1000).map(|i| i as f64 / 1000.0).collect())]).unwrap();
        assert!((r.tau.unwrap() - 1.0).abs() < 0.01);
    }

    #[test]
    fn alternating_walk_warns() {
        let r = ruggedness(&[walk((0..10).map(|i| (i % 2) as f64).collect())]).unwrap();
        assert_eq!(r.tau, Some(-1.0));
        assert!(r.warnings.iter().any(|w| w.contains("negative")));
    }

    #[test]
    fn flat_walks_are_skipped() {
        let ramp = walk(vec![0.1, 0.2, 0.3, 0.4]);
        let r = ruggedness(&[walk(vec![0.5; 5]), ramp, walk(vec![0.1, 0.2])]).unwrap();
        assert_eq!(r.skipped, 2);
        assert_eq!(r.per_route_rho1.len(), 1);
        assert!(ruggedness(&[walk(vec![0.5; 5])]).is_err());
    }

    #[test]
    fn tau_is_inverse_of_mean() {
        let r = ruggedness(&[
            walk(vec![0.1, 0.3, 0.2, 0.5, 0.4, 0.6]),
            walk(vec![0.9, 0.1, 0.8, 0.3, 0.7, 0.2]),
        ])
        .unwrap();
        let mean = (r.per_route_rho1[0] + r.per_route_rho1[1]) / 2.0;
        assert_eq!(r.rho_mean, mean);
        assert_eq!(r.tau, Some(1.0 / mean));
    }
}
