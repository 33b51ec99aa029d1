use serde::{Deserialize, Serialize};

use crate::benchmark::Landscape;
use crate::error::{Error, Result};
use crate::genotype::Genotype;
use crate::sampling::SampleSet;
use crate::stats::{ols_fit, pearson};

/// Fitness versus Hamming distance to the best sampled configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdcResult {
    pub optimum: Genotype,
    pub pairs: Vec<(usize, f64)>,
    /// `None` when fitness is constant over the samples.
    pub pearson_r: Option<f64>,
    pub slope_per_unit_distance: f64,
    pub intercept: f64,
}

/// Fitness-distance correlation over `samples`. The reference point is the
/// fittest sample, ties going to the lexicographically smallest genotype.
pub fn fdc<L: Landscape + ?Sized>(landscape: &L, samples: &SampleSet) -> Result<FdcResult> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("fdc needs at least one sample".into()));
    }
    let fitness = samples
        .genotypes
        .iter()
        .map(|g| landscape.fitness(g))
        .collect::<Result<Vec<_>>>()?;
    fdc_from_values(&samples.genotypes, &fitness)
}

pub fn fdc_from_values(genotypes: &[Genotype], fitness: &[f64]) -> Result<FdcResult> {
    if genotypes.len() != fitness.len() {
        return Err(Error::LengthMismatch {
            left: genotypes.len(),
            right: fitness.len(),
        });
    }
    let best = (0..genotypes.len())
        .max_by(|&a, &b| {
            fitness[a]
                .total_cmp(&fitness[b])
                .then_with(|| genotypes[b].cmp(&genotypes[a]))
        })
        .ok_or_else(|| Error::InvalidParameter("fdc needs at least one sample".into()))?;
    let optimum = genotypes[best].clone();
    let pairs = genotypes
        .iter()
        .zip(fitness)
        .map(|(g, &f)| Ok((optimum.hamming(g)?, f)))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = pairs.iter().map(|&(d, _)| d as f64).collect();
    let ys: Vec<f64> = pairs.iter().map(|&(_, f)| f).collect();
    let pearson_r = pearson(&xs, &ys).ok();
    let (slope, intercept) = match ols_fit(&xs, &ys) {
        Ok(line) => line,
        // Single sample or all at distance zero.
        Err(_) => (0.0, ys[0]),
    };
    Ok(FdcResult {
        optimum,
        pairs,
        pearson_r,
        slope_per_unit_distance: slope,
        intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_line() {
        let a: Genotype = "0000".parse().unwrap();
        let b: Genotype = "0111".parse().unwrap();
        let r = fdc_from_values(&[b.clone(), a.clone()], &[0.5, 1.0]).unwrap();
        assert_eq!(r.optimum, a);
        assert_eq!(r.pairs, vec![(3, 0.5), (0, 1.0)]);
        assert!((r.slope_per_unit_distance + 1.0 / 6.0).abs() < 1e-15);
        assert!((r.pearson_r.unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_fitness_flags_pearson() {
        let gs: Vec<Genotype> = ["000", "001", "011"].iter().map(|s| s.parse().unwrap()).collect();
        let r = fdc_from_values(&gs, &[0.3; 3]).unwrap();
        assert_eq!(r.pearson_r, None);
        assert_eq!(r.slope_per_unit_distance, 0.0);
        // Tie: lexicographically smallest wins.
        assert_eq!(r.optimum, gs[0]);
    }
}
