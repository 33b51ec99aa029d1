//! Configuration sampling (uniform, Latin hypercube) and random walks.

use std::collections::HashSet;
use std::io::Write;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::Landscape;
use crate::error::{Error, Result};
use crate::genotype::Genotype;

/// Deterministic generator for `(seed, stream)`. Independent streams feed
/// independent routes, trials and workers.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMethod {
    Uniform,
    Lhs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub genotypes: Vec<Genotype>,
    pub method: SampleMethod,
    pub seed: u64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.genotypes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genotypes.is_empty()
    }
}

/// `n` distinct members drawn uniformly without replacement.
pub fn sample_uniform<L: Landscape + ?Sized>(landscape: &L, n: usize, seed: u64) -> Result<SampleSet> {
    let mut rng = rng_for(seed, 0);
    let genotypes = uniform_members(landscape, n, &mut rng)?;
    Ok(SampleSet {
        genotypes,
        method: SampleMethod::Uniform,
        seed,
    })
}

pub(crate) fn uniform_members<L: Landscape + ?Sized, R: Rng>(
    landscape: &L,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Genotype>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let size = landscape.size();
    if size == 0 {
        return Err(Error::InvalidParameter("landscape is empty".into()));
    }
    if n as u128 > size {
        return Err(Error::InvalidParameter(format!(
            "sample size {n} exceeds search space size {size}"
        )));
    }
    let member = |i: u128| {
        landscape
            .member(i)
            .ok_or_else(|| Error::InvalidParameter(format!("member {i} missing")))
    };
    match usize::try_from(size) {
        Ok(len) => index::sample(rng, len, n)
            .into_iter()
            .map(|i| member(i as u128))
            .collect(),
        Err(_) => {
            let mut seen = HashSet::with_capacity(n);
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let i = rng.random_range(0..size);
                if seen.insert(i) {
                    out.push(member(i)?);
                }
            }
            Ok(out)
        }
    }
}

/// Latin hypercube draw with its stratum bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct LhsDraw {
    pub samples: SampleSet,
    /// `strata[i][d]`: stratum of sample `i` in dimension `d`.
    pub strata: Vec<Vec<usize>>,
    /// `points[i][d]`: categorical value of sample `i` in dimension `d`.
    pub points: Vec<Vec<usize>>,
    /// Number of repairs performed to reach `n` valid distinct samples.
    pub retries: usize,
}

pub fn sample_lhs<L: Landscape + ?Sized>(landscape: &L, n: usize, seed: u64) -> Result<SampleSet> {
    sample_lhs_detailed(landscape, n, seed).map(|d| d.samples)
}

/// Latin hypercube sampling over the landscape's joint design.
///
/// Every dimension's unit interval is cut into `n` strata and each stratum
/// is assigned to exactly one sample. A point that decodes to nothing valid
/// (or repeats an accepted sample) is repaired by swapping its stratum in one
/// random dimension with another sample's, which keeps every dimension's
/// assignment a permutation, and by redrawing its offsets inside its strata.
/// Swaps with already accepted samples are undone if they break that sample.
pub fn sample_lhs_detailed<L: Landscape + ?Sized>(
    landscape: &L,
    n: usize,
    seed: u64,
) -> Result<LhsDraw> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let design = landscape.design();
    let dims = design.cardinalities.len();
    let mut rng = rng_for(seed, 1);

    let mut perms: Vec<Vec<usize>> = (0..dims)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(p.as_mut_slice(), &mut rng);
            p
        })
        .collect();
    let mut offsets: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dims).map(|_| rng.random::<f64>()).collect())
        .collect();

    let value = |stratum: usize, offset: f64, card: usize| -> usize {
        let u = (stratum as f64 + offset) / n as f64;
        ((u * card as f64) as usize).min(card - 1)
    };
    let point_of = |perms: &[Vec<usize>], offsets: &[Vec<f64>], i: usize| -> Vec<usize> {
        (0..dims)
            .map(|d| value(perms[d][i], offsets[i][d], design.cardinalities[d]))
            .collect()
    };

    let budget = 100 * n;
    let mut retries = 0usize;
    let mut accepted: Vec<Genotype> = Vec::with_capacity(n);
    let mut seen: HashSet<Genotype> = HashSet::with_capacity(n);

    let exhausted = |accepted: usize| {
        Error::SamplingExhausted(format!(
            "only {accepted} of {n} valid distinct samples after {budget} retries"
        ))
    };

    for i in 0..n {
        loop {
            let point = point_of(&perms, &offsets, i);
            if let Some(g) = landscape.decode_point(&point) {
                if !seen.contains(&g) {
                    seen.insert(g.clone());
                    accepted.push(g);
                    break;
                }
            }
            retries += 1;
            if retries > budget || dims == 0 {
                return Err(exhausted(accepted.len()));
            }
            for o in offsets[i].iter_mut() {
                *o = rng.random::<f64>();
            }
            if n == 1 {
                continue;
            }
            let d = rng.random_range(0..dims);
            let j = (i + rng.random_range(1..n)) % n;
            perms[d].swap(i, j);
            if j < i {
                // Trading with an accepted sample: keep the trade only if that
                // sample stays valid and distinct.
                let pj = point_of(&perms, &offsets, j);
                let ok = match landscape.decode_point(&pj) {
                    Some(gj) if gj == accepted[j] => true,
                    Some(gj) if !seen.contains(&gj) => {
                        seen.remove(&accepted[j]);
                        seen.insert(gj.clone());
                        accepted[j] = gj;
                        true
                    }
                    _ => false,
                };
                if !ok {
                    perms[d].swap(i, j);
                }
            }
        }
    }

    let strata: Vec<Vec<usize>> = (0..n).map(|i| (0..dims).map(|d| perms[d][i]).collect()).collect();
    let points = (0..n).map(|i| point_of(&perms, &offsets, i)).collect();
    Ok(LhsDraw {
        samples: SampleSet {
            genotypes: accepted,
            method: SampleMethod::Lhs,
            seed,
        },
        strata,
        points,
        retries,
    })
}

/// A random walk and the fitness observed at each visited genotype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Walk {
    pub route_id: usize,
    pub genotypes: Vec<Genotype>,
    pub fitness_series: Vec<f64>,
    /// Set when the walk stopped early at a genotype without neighbors.
    pub stuck: bool,
}

impl Walk {
    /// Consecutive genotypes are Hamming neighbors and the series lengths agree.
    pub fn is_hamming_chain(&self) -> bool {
        self.genotypes.len() == self.fitness_series.len()
            && self
                .genotypes
                .windows(2)
                .all(|w| w[0].hamming(&w[1]).ok() == Some(1))
    }
}

pub fn random_walk<L: Landscape + ?Sized>(
    landscape: &L,
    start: Genotype,
    steps: usize,
    seed: u64,
) -> Result<Walk> {
    walk_with_rng(landscape, start, steps, 0, &mut rng_for(seed, 0))
}

fn walk_with_rng<L: Landscape + ?Sized, R: Rng>(
    landscape: &L,
    start: Genotype,
    steps: usize,
    route_id: usize,
    rng: &mut R,
) -> Result<Walk> {
    if steps == 0 {
        return Err(Error::InvalidParameter("walk needs at least one step".into()));
    }
    if !landscape.contains(&start) {
        return Err(Error::UnknownGenotype(start.to_string()));
    }
    let mut genotypes = Vec::with_capacity(steps + 1);
    let mut fitness_series = Vec::with_capacity(steps + 1);
    fitness_series.push(landscape.fitness(&start)?);
    genotypes.push(start);
    let mut stuck = false;
    for _ in 0..steps {
        let current = genotypes.last().expect("walk is non-empty");
        let nbrs = landscape.neighbors(current);
        if nbrs.is_empty() {
            stuck = true;
            break;
        }
        let next = nbrs[rng.random_range(0..nbrs.len())].clone();
        fitness_series.push(landscape.fitness(&next)?);
        genotypes.push(next);
    }
    Ok(Walk {
        route_id,
        genotypes,
        fitness_series,
        stuck,
    })
}

/// `routes` independent walks from uniformly drawn starts. Route `r` draws
/// from its own stream of `master_seed`, so results do not depend on how
/// many worker threads run them.
pub fn random_walks<L: Landscape + ?Sized>(
    landscape: &L,
    routes: usize,
    steps: usize,
    master_seed: u64,
) -> Result<Vec<Walk>> {
    (0..routes)
        .into_par_iter()
        .map(|route| {
            let mut rng = rng_for(master_seed, 1000 + route as u64);
            let start = uniform_members(landscape, 1, &mut rng)?.remove(0);
            walk_with_rng(landscape, start, steps, route, &mut rng)
        })
        .collect()
}

/// Trailing moving average; the first `window - 1` points average over the
/// values available so far.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let slice = &values[lo..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// CSV with columns `route_id,step,genotype,fitness`. `smoothing` applies a
/// moving average of that window to the exported fitness only.
pub fn write_walks_csv<W: Write>(mut w: W, walks: &[Walk], smoothing: Option<usize>) -> Result<()> {
    writeln!(w, "route_id,step,genotype,fitness")?;
    for walk in walks {
        let series = match smoothing {
            Some(win) => moving_average(&walk.fitness_series, win),
            None => walk.fitness_series.clone(),
        };
        for (step, (g, f)) in walk.genotypes.iter().zip(series).enumerate() {
            writeln!(w, "{},{},{},{}", walk.route_id, step, g, f)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{generate_nk, FunctionLandscape, NkSpec};

    fn nk(n: usize) -> crate::benchmark::NkLandscape {
        generate_nk(NkSpec { n, k: 2, seed: 9 }).unwrap()
    }

    #[test]
    fn uniform_exhausts_small_space() {
        let l = nk(4);
        let s = sample_uniform(&l, 16, 3).unwrap();
        let set: HashSet<_> = s.genotypes.iter().cloned().collect();
        assert_eq!(set.len(), 16);
        assert!(sample_uniform(&l, 17, 3).is_err());
        assert!(sample_uniform(&l, 0, 3).is_err());
    }

    #[test]
    fn uniform_is_deterministic() {
        let l = nk(10);
        assert_eq!(sample_uniform(&l, 50, 8).unwrap(), sample_uniform(&l, 50, 8).unwrap());
        assert_ne!(sample_uniform(&l, 50, 8).unwrap(), sample_uniform(&l, 50, 9).unwrap());
    }

    #[test]
    fn uniform_bits_are_balanced() {
        let l = nk(10);
        let s = sample_uniform(&l, 1000, 5).unwrap();
        for bit in 0..10 {
            let ones = s.genotypes.iter().filter(|g| g.get(bit)).count();
            let freq = ones as f64 / 1000.0;
            assert!((0.45..=0.55).contains(&freq), "bit {bit}: {freq}");
        }
    }

    #[test]
    fn lhs_single_and_pair() {
        let l = nk(10);
        assert_eq!(sample_lhs(&l, 1, 4).unwrap().len(), 1);
        for seed in 0..20 {
            let d = sample_lhs_detailed(&l, 2, seed).unwrap();
            for dim in 0..10 {
                let mut vals: Vec<usize> = d.points.iter().map(|p| p[dim]).collect();
                vals.sort();
                assert_eq!(vals, vec![0, 1], "seed {seed} dim {dim}");
            }
        }
    }

    #[test]
    fn lhs_is_deterministic() {
        let l = nk(12);
        assert_eq!(sample_lhs(&l, 40, 1).unwrap(), sample_lhs(&l, 40, 1).unwrap());
    }

    #[test]
    fn lhs_exhaustion_is_reported() {
        // Two members only: 3 distinct samples are impossible.
        let l = FunctionLandscape::new(1, |_| 0.0).unwrap();
        let err = sample_lhs(&l, 3, 0).unwrap_err();
        assert!(matches!(err, Error::SamplingExhausted(_)));
    }

    #[test]
    fn one_step_walk() {
        let l = nk(10);
        let w = random_walk(&l, Genotype::zeros(10), 1, 2).unwrap();
        assert_eq!(w.genotypes.len(), 2);
        assert_eq!(w.genotypes[0].hamming(&w.genotypes[1]).unwrap(), 1);
        assert!(random_walk(&l, Genotype::zeros(10), 0, 2).is_err());
    }

    #[test]
    fn constant_landscape_walk_is_flat() {
        let l = FunctionLandscape::new(8, |_| 0.25).unwrap();
        let w = random_walk(&l, Genotype::zeros(8), 50, 2).unwrap();
        assert!(w.fitness_series.iter().all(|&f| f == 0.25));
        assert!(w.is_hamming_chain());
    }

    #[test]
    fn walks_are_independent_of_thread_count() {
        let l = nk(12);
        let a = random_walks(&l, 8, 30, 77).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| random_walks(&l, 8, 30, 77).unwrap());
        assert_eq!(a, b);
        assert!(a.iter().all(Walk::is_hamming_chain));
    }

    #[test]
    fn moving_average_window() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let m = moving_average(&v, 5);
        assert_eq!(m[0], 1.0);
        assert_eq!(m[4], 3.0);
        assert_eq!(m[5], 4.0);
    }

    #[test]
    fn csv_export_smoothing_leaves_walk_untouched() {
        let l = nk(6);
        let w = random_walk(&l, Genotype::zeros(6), 10, 1).unwrap();
        let before = w.clone();
        let mut buf = Vec::new();
        write_walks_csv(&mut buf, std::slice::from_ref(&w), Some(5)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 12);
        assert!(text.starts_with("route_id,step,genotype,fitness\n0,0,000000,"));
        assert_eq!(w, before);
    }
}
