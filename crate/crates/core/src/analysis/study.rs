//! Convergence of the fitness density as the sample size grows.

use serde::{Deserialize, Serialize};

use crate::benchmark::Landscape;
use crate::error::{Error, Result};
use crate::sampling::{rng_for, sample_lhs, uniform_members, SampleMethod};
use crate::stats::{kernel_on, l1_distance, silverman_bandwidth, DensityCurve};

pub const STUDY_GRID_POINTS: usize = 512;
pub const DEFAULT_REPLICATES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeDensity {
    pub size: usize,
    pub bandwidth: f64,
    pub curve: DensityCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeStudy {
    pub method: SampleMethod,
    pub seed: u64,
    /// Curves of the first replicate.
    pub curves: Vec<SizeDensity>,
    /// `per_replicate_l1[r][i]`: L1 distance between the size-`i` and
    /// size-`i + 1` curves of replicate `r`.
    pub per_replicate_l1: Vec<Vec<f64>>,
    /// Mean of `per_replicate_l1` over replicates.
    pub successive_l1: Vec<f64>,
}

impl SampleSizeStudy {
    /// True when each successive distance is at most `(1 + slack)` times the
    /// previous one.
    pub fn is_converging(&self, slack: f64) -> bool {
        self.successive_l1
            .windows(2)
            .all(|d| d[1] <= d[0] * (1.0 + slack))
    }

    /// Share of replicates that converge on their own.
    pub fn replicate_pass_rate(&self, slack: f64) -> f64 {
        let ok = self
            .per_replicate_l1
            .iter()
            .filter(|d| d.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack)))
            .count();
        ok as f64 / self.per_replicate_l1.len() as f64
    }
}

/// Independent draws for every (replicate, size) pair, each turned into a
/// Gaussian kernel density with Silverman bandwidth on a grid shared by all
/// curves of the replicate.
pub fn sample_size_study<L: Landscape + ?Sized>(
    landscape: &L,
    sizes: &[usize],
    method: SampleMethod,
    seed: u64,
    replicates: usize,
) -> Result<SampleSizeStudy> {
    if sizes.len() < 2 {
        return Err(Error::InvalidParameter("sample-size study needs at least two sizes".into()));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) || sizes[0] < 2 {
        return Err(Error::InvalidParameter(format!(
            "sizes must be strictly increasing and at least 2, got {sizes:?}"
        )));
    }
    if replicates == 0 {
        return Err(Error::InvalidParameter("at least one replicate required".into()));
    }
    let mut first = None;
    let mut per_replicate_l1 = Vec::with_capacity(replicates);
    for r in 0..replicates {
        let curves = replicate_curves(landscape, sizes, method, seed, (r * sizes.len()) as u64)?;
        per_replicate_l1.push(
            curves
                .windows(2)
                .map(|w| l1_distance(&w[0].curve, &w[1].curve, STUDY_GRID_POINTS))
                .collect::<Vec<_>>(),
        );
        first.get_or_insert(curves);
    }
    let successive_l1 = (0..sizes.len() - 1)
        .map(|i| per_replicate_l1.iter().map(|d| d[i]).sum::<f64>() / replicates as f64)
        .collect();
    Ok(SampleSizeStudy {
        method,
        seed,
        curves: first.expect("at least one replicate"),
        per_replicate_l1,
        successive_l1,
    })
}

fn replicate_curves<L: Landscape + ?Sized>(
    landscape: &L,
    sizes: &[usize],
    method: SampleMethod,
    seed: u64,
    stream_base: u64,
) -> Result<Vec<SizeDensity>> {
    let mut draws = Vec::with_capacity(sizes.len());
    for (i, &n) in sizes.iter().enumerate() {
        let stream = stream_base + i as u64;
        let genotypes = match method {
            SampleMethod::Uniform => uniform_members(landscape, n, &mut rng_for(seed, 2000 + stream))?,
            SampleMethod::Lhs => sample_lhs(landscape, n, seed.wrapping_add(stream))?.genotypes,
        };
        let values = genotypes
            .iter()
            .map(|g| landscape.fitness(g))
            .collect::<Result<Vec<_>>>()?;
        draws.push((silverman_bandwidth(&values), values));
    }
    let lo = draws
        .iter()
        .flat_map(|(h, v)| v.iter().map(move |x| x - 4.0 * h))
        .fold(f64::INFINITY, f64::min);
    let hi = draws
        .iter()
        .flat_map(|(h, v)| v.iter().map(move |x| x + 4.0 * h))
        .fold(f64::NEG_INFINITY, f64::max);
    sizes
        .iter()
        .zip(draws)
        .map(|(&size, (h, values))| {
            Ok(SizeDensity {
                size,
                bandwidth: h,
                curve: kernel_on(&values, h, lo, hi, STUDY_GRID_POINTS)?,
            })
        })
        .collect()
}
