//! Local search and local-optima cardinality estimation.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::{Direction, Landscape};
use crate::error::{Error, Result};
use crate::genotype::Genotype;
use crate::sampling::{rng_for, uniform_members};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilsTrace {
    pub start: Genotype,
    pub optimum: Genotype,
    pub start_fitness: f64,
    pub end_fitness: f64,
    /// Genotypes visited after `start`, ending at `optimum`.
    pub path: Vec<Genotype>,
    /// Fitness gain of every move, positive in the search direction.
    pub improvements: Vec<f64>,
}

impl BilsTrace {
    pub fn steps(&self) -> usize {
        self.improvements.len()
    }

    /// Relative improvement in percent, `None` when the start fitness is zero.
    pub fn improvement_pct(&self) -> Option<f64> {
        (self.start_fitness != 0.0).then(|| {
            let gain = self.improvements.iter().sum::<f64>();
            100.0 * gain / self.start_fitness.abs()
        })
    }
}

/// Best-improvement local search: scan the whole neighborhood, move to the
/// best strictly improving neighbor, stop when none improves. Equal-fitness
/// candidates resolve to the lexicographically smallest genotype.
pub fn bils<L: Landscape + ?Sized>(landscape: &L, start: Genotype, direction: Direction) -> Result<BilsTrace> {
    if !landscape.contains(&start) {
        return Err(Error::UnknownGenotype(start.to_string()));
    }
    let start_fitness = landscape.fitness(&start)?;
    let mut current = start.clone();
    let mut current_fitness = start_fitness;
    let mut improvements = Vec::new();
    let mut path = Vec::new();
    loop {
        let mut best: Option<(Genotype, f64)> = None;
        for y in landscape.neighbors(&current) {
            let fy = landscape.fitness(&y)?;
            let replace = match &best {
                None => true,
                Some((bg, bf)) => direction.better(fy, *bf) || (fy == *bf && y < *bg),
            };
            if replace {
                best = Some((y, fy));
            }
        }
        match best {
            Some((y, fy)) if direction.better(fy, current_fitness) => {
                improvements.push((fy - current_fitness).abs());
                path.push(y.clone());
                current = y;
                current_fitness = fy;
            }
            _ => break,
        }
    }
    Ok(BilsTrace {
        start,
        optimum: current,
        start_fitness,
        end_fitness: current_fitness,
        path,
        improvements,
    })
}

/// `floor(k² / (-2 ln(1 - p_d)))`.
pub fn birthday_cardinal(k: f64, p_d: f64) -> u64 {
    (k * k / (-2.0 * (1.0 - p_d).ln())).floor() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirthdayConfig {
    pub trials: usize,
    pub runs_per_trial: usize,
    pub p_d: f64,
    pub seed: u64,
    pub direction: Direction,
}

impl Default for BirthdayConfig {
    fn default() -> Self {
        BirthdayConfig {
            trials: 9,
            runs_per_trial: 200,
            p_d: 0.5,
            seed: 0,
            direction: Direction::Max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthdayTrial {
    pub trial: usize,
    pub avg_step: f64,
    pub avg_improvement_pct: f64,
    /// Distinct optima collected before the first repeat; `None` if no
    /// optimum repeated within the trial.
    pub first_repeat_k: Option<usize>,
    pub cardinal: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthdayEstimate {
    pub trials: Vec<BirthdayTrial>,
    pub p_d: f64,
    pub k_mean: f64,
    /// `floor(k_mean² / (-2 ln(1 - p_d)))` without clamping.
    pub cardinal_raw: u64,
    /// `cardinal_raw` clamped to at least one optimum.
    pub cardinal_estimate: u64,
    pub failed_trials: usize,
    pub avg_step: f64,
    pub avg_improvement_pct: f64,
}

impl BirthdayEstimate {
    /// Builds the summary from per-trial rows; failed trials are excluded
    /// from `k_mean`.
    pub fn from_trials(trials: Vec<BirthdayTrial>, p_d: f64) -> Result<Self> {
        let ks: Vec<f64> = trials
            .iter()
            .filter_map(|t| t.first_repeat_k.map(|k| k as f64))
            .collect();
        let failed_trials = trials.len() - ks.len();
        if ks.is_empty() {
            return Err(Error::Estimation(format!(
                "no duplicate optimum in any of {} trials; increase runs per trial",
                trials.len()
            )));
        }
        let k_mean = ks.iter().sum::<f64>() / ks.len() as f64;
        let cardinal_raw = birthday_cardinal(k_mean, p_d);
        let n = trials.len() as f64;
        Ok(BirthdayEstimate {
            avg_step: trials.iter().map(|t| t.avg_step).sum::<f64>() / n,
            avg_improvement_pct: trials.iter().map(|t| t.avg_improvement_pct).sum::<f64>() / n,
            trials,
            p_d,
            k_mean,
            cardinal_raw,
            cardinal_estimate: cardinal_raw.max(1),
            failed_trials,
        })
    }

    /// Columns `trial,avg_step,avg_improvement_pct,first_repeat_k,cardinal`
    /// with a closing `summary` row. Failed trials leave the last two empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "trial,avg_step,avg_improvement_pct,first_repeat_k,cardinal")?;
        for t in &self.trials {
            let k = t.first_repeat_k.map(|k| k.to_string()).unwrap_or_default();
            let c = t.cardinal.map(|c| c.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{:.2},{:.2},{},{}",
                t.trial, t.avg_step, t.avg_improvement_pct, k, c
            )?;
        }
        writeln!(
            w,
            "summary,{:.2},{:.2},{},{}",
            self.avg_step, self.avg_improvement_pct, self.k_mean, self.cardinal_estimate
        )?;
        Ok(())
    }
}

/// Distinct optima seen before the first repeated genotype.
pub fn first_repeat(optima: &[Genotype]) -> Option<usize> {
    let mut seen = HashSet::with_capacity(optima.len());
    for g in optima {
        if !seen.insert(g) {
            return Some(seen.len());
        }
    }
    None
}

/// Birthday-problem estimate of the number of local optima: each trial runs
/// BILS from `runs_per_trial` distinct uniform starts and records how many
/// distinct optima appear before the first duplicate.
pub fn estimate_optima_birthday<L: Landscape + ?Sized>(
    landscape: &L,
    config: &BirthdayConfig,
) -> Result<BirthdayEstimate> {
    if config.trials == 0 {
        return Err(Error::InvalidParameter("at least one trial required".into()));
    }
    if config.runs_per_trial < 2 {
        return Err(Error::InvalidParameter("at least two runs per trial required".into()));
    }
    if !(config.p_d > 0.0 && config.p_d < 1.0) {
        return Err(Error::InvalidParameter(format!("p_d = {} outside (0, 1)", config.p_d)));
    }
    let mut trials = Vec::with_capacity(config.trials);
    for trial in 0..config.trials {
        let mut rng = rng_for(config.seed, trial as u64);
        let starts = uniform_members(landscape, config.runs_per_trial, &mut rng)?;
        let traces = starts
            .into_par_iter()
            .map(|s| bils(landscape, s, config.direction))
            .collect::<Result<Vec<_>>>()?;
        let optima: Vec<Genotype> = traces.iter().map(|t| t.optimum.clone()).collect();
        let k = first_repeat(&optima);
        let pcts: Vec<f64> = traces.iter().filter_map(BilsTrace::improvement_pct).collect();
        trials.push(BirthdayTrial {
            trial: trial + 1,
            avg_step: traces.iter().map(|t| t.steps() as f64).sum::<f64>() / traces.len() as f64,
            avg_improvement_pct: if pcts.is_empty() {
                0.0
            } else {
                pcts.iter().sum::<f64>() / pcts.len() as f64
            },
            first_repeat_k: k,
            cardinal: k.map(|k| birthday_cardinal(k as f64, config.p_d)),
        });
    }
    BirthdayEstimate::from_trials(trials, config.p_d)
}

/// Samples whose fitness strictly exceeds that of each of their `n_nei`
/// nearest samples by Hamming distance (distance ties go to the
/// lexicographically smaller genotype).
pub fn count_proxy_optima(samples: &[Genotype], fitness: &[f64], n_nei: usize) -> Result<usize> {
    if samples.len() != fitness.len() {
        return Err(Error::LengthMismatch {
            left: samples.len(),
            right: fitness.len(),
        });
    }
    if n_nei == 0 || n_nei >= samples.len() {
        return Err(Error::InvalidParameter(format!(
            "n_nei = {n_nei} must lie in [1, {})",
            samples.len()
        )));
    }
    let mut count = 0;
    for (i, x) in samples.iter().enumerate() {
        let mut others = Vec::with_capacity(samples.len() - 1);
        for (j, y) in samples.iter().enumerate() {
            if j != i {
                others.push((x.hamming(y)?, j));
            }
        }
        others.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| samples[a.1].cmp(&samples[b.1])));
        if others[..n_nei].iter().all(|&(_, j)| fitness[i] > fitness[j]) {
            count += 1;
        }
    }
    Ok(count)
}

/// Transfers an optima count to a new problem via the ratio of proxy counts:
/// `floor(proxy_target / proxy_reference × reference_cardinal)`.
pub fn transfer_optima_estimate(proxy_target: u64, proxy_reference: u64, reference_cardinal: u64) -> Result<u64> {
    if proxy_reference == 0 {
        return Err(Error::InvalidParameter("reference proxy count is zero".into()));
    }
    let scaled = u128::from(proxy_target) * u128::from(reference_cardinal) / u128::from(proxy_reference);
    u64::try_from(scaled).map_err(|_| Error::InvalidParameter("transferred estimate overflows".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{generate_nk, FunctionLandscape, NkSpec};

    #[test]
    fn summary_row_of_reported_trials() {
        let ks = [94usize, 57, 26, 58, 38, 195, 52, 129, 197];
        let trials = ks
            .iter()
            .enumerate()
            .map(|(i, &k)| BirthdayTrial {
                trial: i + 1,
                avg_step: 0.0,
                avg_improvement_pct: 0.0,
                first_repeat_k: Some(k),
                cardinal: Some(birthday_cardinal(k as f64, 0.5)),
            })
            .collect();
        let e = BirthdayEstimate::from_trials(trials, 0.5).unwrap();
        assert_eq!(e.k_mean, 94.0);
        assert_eq!(e.cardinal_estimate, 6373);
    }

    #[test]
    fn first_repeat_counts_distinct_before_duplicate() {
        let g = |s: &str| s.parse::<Genotype>().unwrap();
        assert_eq!(first_repeat(&[g("01"), g("10"), g("01")]), Some(2));
        assert_eq!(first_repeat(&[g("01"), g("01")]), Some(1));
        assert_eq!(first_repeat(&[g("01"), g("10")]), None);
    }

    #[test]
    fn bils_at_optimum_does_not_move() {
        let l = FunctionLandscape::new(6, |g| g.count_ones() as f64 / 6.0).unwrap();
        let top = Genotype::from_u64(0b111111, 6);
        let t = bils(&l, top.clone(), Direction::Max).unwrap();
        assert_eq!(t.steps(), 0);
        assert_eq!(t.optimum, top);
        let t = bils(&l, Genotype::zeros(6), Direction::Max).unwrap();
        assert_eq!(t.steps(), 6);
        assert!(t.improvements.iter().all(|&d| d > 0.0));
    }

    #[test]
    fn bils_breaks_ties_lexicographically() {
        // Every first move gains the same; bit order would pick 100.
        let l = FunctionLandscape::new(3, |g| g.count_ones() as f64).unwrap();
        let t = bils(&l, Genotype::zeros(3), Direction::Max).unwrap();
        let path: Vec<String> = t.path.iter().map(|g| g.to_string()).collect();
        assert_eq!(path, ["001", "011", "111"]);
    }

    #[test]
    fn single_basin_clamps_to_one() {
        let l = generate_nk(NkSpec { n: 10, k: 0, seed: 4 }).unwrap();
        let cfg = BirthdayConfig {
            trials: 3,
            runs_per_trial: 5,
            seed: 1,
            ..Default::default()
        };
        let e = estimate_optima_birthday(&l, &cfg).unwrap();
        assert!(e.trials.iter().all(|t| t.first_repeat_k == Some(1)));
        assert_eq!(e.cardinal_raw, 0);
        assert_eq!(e.cardinal_estimate, 1);
    }

    #[test]
    fn all_trials_failing_is_an_error() {
        let failed = (1..=3)
            .map(|trial| BirthdayTrial {
                trial,
                avg_step: 1.0,
                avg_improvement_pct: 2.0,
                first_repeat_k: None,
                cardinal: None,
            })
            .collect();
        assert!(matches!(
            BirthdayEstimate::from_trials(failed, 0.5),
            Err(Error::Estimation(_))
        ));
    }

    #[test]
    fn failed_trials_are_excluded_from_k_mean() {
        let row = |trial, k: Option<usize>| BirthdayTrial {
            trial,
            avg_step: 0.0,
            avg_improvement_pct: 0.0,
            first_repeat_k: k,
            cardinal: k.map(|k| birthday_cardinal(k as f64, 0.5)),
        };
        let e = BirthdayEstimate::from_trials(vec![row(1, Some(26)), row(2, None), row(3, Some(38))], 0.5).unwrap();
        assert_eq!(e.failed_trials, 1);
        assert_eq!(e.k_mean, 32.0);
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\n2,0.00,0.00,,\n"));
        assert!(text.ends_with("summary,0.00,0.00,32,738\n"));
    }

    #[test]
    fn invalid_configs() {
        let l = generate_nk(NkSpec { n: 6, k: 1, seed: 4 }).unwrap();
        let base = BirthdayConfig::default();
        assert!(estimate_optima_birthday(&l, &BirthdayConfig { runs_per_trial: 1, ..base }).is_err());
        assert!(estimate_optima_birthday(&l, &BirthdayConfig { p_d: 1.0, ..base }).is_err());
        assert!(estimate_optima_birthday(&l, &BirthdayConfig { trials: 0, ..base }).is_err());
    }

    #[test]
    fn proxy_optima_trivial_cases() {
        let gs: Vec<Genotype> = (0..8u64).map(|i| Genotype::from_u64(i, 3)).collect();
        assert_eq!(count_proxy_optima(&gs, &[0.5; 8], 3).unwrap(), 0);
        let mut f = vec![0.1; 8];
        f[5] = 0.9;
        assert!(count_proxy_optima(&gs, &f, 7).unwrap() >= 1);
        assert!(count_proxy_optima(&gs, &f, 8).is_err());
    }

    #[test]
    fn transfer_examples() {
        assert_eq!(transfer_optima_estimate(7, 4, 6373).unwrap(), 11152);
        assert_eq!(transfer_optima_estimate(5, 5, 6373).unwrap(), 6373);
        assert_eq!(transfer_optima_estimate(1, 2, 100).unwrap(), 50);
        assert!(transfer_optima_estimate(1, 0, 100).is_err());
    }
}
