//! The eight-metric landscape footprint of a benchmark and its comparison
//! across benchmarks.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    estimate_optima_birthday, persistence_curve, ruggedness, BirthdayConfig, RankDirection,
};
use crate::benchmark::{Direction, FitnessTable, Landscape, Query, Split, TabularLandscape};
use crate::error::{Error, Result};
use crate::sampling::{random_walks, rng_for, sample_lhs, uniform_members, SampleMethod};
use crate::stats::mean_std;

/// Axis order of footprint comparisons and radar exports.
pub const AXES: [&str; 8] = [
    "mean_fitness",
    "std_fitness",
    "ruggedness_tau",
    "cardinal_optima",
    "persistence_pos_q1",
    "auc_pos_q1",
    "persistence_neg_q1",
    "auc_neg_q1",
];

/// Rank used for the single-value persistence metrics.
pub const PERSISTENCE_RANK: u32 = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FootprintConfig {
    pub seed: u64,
    pub split: Split,
    pub metric: String,
    /// Budget of the static metrics (density, ruggedness, optima).
    pub epoch: u32,
    pub n_samples: usize,
    pub sampling: SampleMethod,
    pub persistence_samples: usize,
    pub walks: usize,
    pub walk_steps: usize,
    pub trials: usize,
    pub runs: usize,
    pub p_d: f64,
    pub direction: Direction,
    /// Set to `false` to skip the birthday estimate.
    pub birthday: bool,
}

impl Default for FootprintConfig {
    fn default() -> Self {
        FootprintConfig {
            seed: 0,
            split: Split::Validation,
            metric: "overall_accuracy".into(),
            epoch: 36,
            n_samples: 100,
            sampling: SampleMethod::Lhs,
            persistence_samples: 1000,
            walks: 30,
            walk_steps: 100,
            trials: 9,
            runs: 200,
            p_d: 0.5,
            direction: Direction::Max,
            birthday: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintMetrics {
    pub mean_fitness: f64,
    pub std_fitness: f64,
    pub ruggedness_tau: Option<f64>,
    pub cardinal_optima: Option<u64>,
    pub persistence_pos_q1: Option<f64>,
    pub persistence_neg_q1: Option<f64>,
    pub auc_pos_q1: Option<f64>,
    pub auc_neg_q1: Option<f64>,
}

impl FootprintMetrics {
    /// Values in [`AXES`] order.
    pub fn axis_values(&self) -> [Option<f64>; 8] {
        [
            Some(self.mean_fitness),
            Some(self.std_fitness),
            self.ruggedness_tau,
            self.cardinal_optima.map(|c| c as f64),
            self.persistence_pos_q1,
            self.auc_pos_q1,
            self.persistence_neg_q1,
            self.auc_neg_q1,
        ]
    }
}

/// Seeds handed to each sub-analysis, all derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubSeeds {
    pub static_samples: u64,
    pub walks: u64,
    pub birthday: u64,
    pub persistence: u64,
}

impl SubSeeds {
    pub fn derive(master: u64) -> Self {
        let at = |i: u64| crate::benchmark::splitmix64(master.wrapping_add(i));
        SubSeeds {
            static_samples: at(1),
            walks: at(2),
            birthday: at(3),
            persistence: at(4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: FootprintConfig,
    pub seeds: SubSeeds,
    pub split: Split,
    pub metric: String,
    pub static_sample_size: usize,
    pub static_sampling: SampleMethod,
    pub walks: usize,
    pub walk_steps: usize,
    pub walks_skipped: Option<usize>,
    pub birthday_trials: usize,
    pub birthday_runs: usize,
    pub birthday_k_mean: Option<f64>,
    pub birthday_failed_trials: Option<usize>,
    pub persistence_sample_size: usize,
    pub persistence_epochs: Vec<u32>,
    /// Reason for every null metric.
    pub null_reasons: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintReport {
    pub dataset: String,
    pub epoch: u32,
    pub metrics: FootprintMetrics,
    pub provenance: Provenance,
}

impl FootprintReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn null_with<T>(reasons: &mut BTreeMap<String, String>, metric: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            reasons.insert(metric.to_string(), e.to_string());
            None
        }
    }
}

/// Computes the footprint of `table`. Failing sub-analyses leave their
/// metrics null with a reason in the provenance; only a missing static query
/// or an unusable static sample fails the whole report.
pub fn compute_footprint(table: &FitnessTable, config: &FootprintConfig) -> Result<FootprintReport> {
    let query = Query::new(config.split, config.epoch, config.metric.clone());
    let landscape = table.landscape(query)?;
    let seeds = SubSeeds::derive(config.seed);
    let mut notes = Vec::new();
    let mut reasons = BTreeMap::new();

    let (static_samples, static_sampling) = static_sample(&landscape, config, seeds, &mut notes)?;
    let values = static_samples
        .iter()
        .map(|g| landscape.fitness(g))
        .collect::<Result<Vec<_>>>()?;
    let (mean_fitness, std_fitness) = mean_std(&values).ok_or(Error::EmptyTable)?;

    let walk_result = random_walks(&landscape, config.walks, config.walk_steps, seeds.walks)
        .and_then(|walks| {
            let stuck = walks.iter().filter(|w| w.stuck).count();
            if stuck > 0 {
                notes.push(format!("{stuck} walk(s) stopped early at isolated configurations"));
            }
            ruggedness(&walks)
        });
    let rugged = null_with(&mut reasons, "ruggedness_tau", walk_result);
    let ruggedness_tau = match &rugged {
        Some(r) => {
            notes.extend(r.warnings.iter().map(|w| format!("ruggedness: {w}")));
            if r.tau.is_none() {
                reasons.insert("ruggedness_tau".into(), "mean lag-1 autocorrelation is zero".into());
            }
            r.tau
        }
        None => None,
    };

    let birthday = if config.birthday {
        let runs = config.runs.min(table.len());
        if runs < config.runs {
            notes.push(format!("birthday runs capped at table size {runs}"));
        }
        let cfg = BirthdayConfig {
            trials: config.trials,
            runs_per_trial: runs,
            p_d: config.p_d,
            seed: seeds.birthday,
            direction: config.direction,
        };
        null_with(&mut reasons, "cardinal_optima", estimate_optima_birthday(&landscape, &cfg))
    } else {
        reasons.insert("cardinal_optima".into(), "birthday estimate disabled by config".into());
        None
    };
    if let Some(b) = &birthday {
        if b.cardinal_raw < b.cardinal_estimate {
            notes.push(format!(
                "birthday estimate {} clamped to the lower bound {}",
                b.cardinal_raw, b.cardinal_estimate
            ));
        }
    }

    let persistence_samples = config.persistence_samples.min(table.len());
    let pers_samples = if persistence_samples == 0 {
        Err(Error::InvalidParameter("persistence sample size is zero".into()))
    } else {
        uniform_members(&landscape, persistence_samples, &mut rng_for(seeds.persistence, 0))
    };
    let persistence_epochs = table.epochs_for(config.split, &config.metric);
    let curve = |dir: RankDirection| {
        pers_samples
            .clone()
            .and_then(|s| persistence_curve(table, &s, dir, config.split, &config.metric))
    };
    let pos = curve(RankDirection::Positive);
    let neg = curve(RankDirection::Negative);
    let rank_value = |c: &Result<crate::analysis::PersistenceCurve>| match c {
        Ok(c) => c
            .value(PERSISTENCE_RANK)
            .ok_or_else(|| Error::Degenerate(format!("persistence undefined at N = {PERSISTENCE_RANK}"))),
        Err(e) => Err(e.clone()),
    };
    let auc = |c: &Result<crate::analysis::PersistenceCurve>| match c {
        Ok(c) => c
            .auc_q1
            .ok_or_else(|| Error::Degenerate("persistence curve has gaps in the first quartile".into())),
        Err(e) => Err(e.clone()),
    };
    let metrics = FootprintMetrics {
        mean_fitness,
        std_fitness,
        ruggedness_tau,
        cardinal_optima: birthday.as_ref().map(|b| b.cardinal_estimate),
        persistence_pos_q1: null_with(&mut reasons, "persistence_pos_q1", rank_value(&pos)),
        persistence_neg_q1: null_with(&mut reasons, "persistence_neg_q1", rank_value(&neg)),
        auc_pos_q1: null_with(&mut reasons, "auc_pos_q1", auc(&pos)),
        auc_neg_q1: null_with(&mut reasons, "auc_neg_q1", auc(&neg)),
    };

    Ok(FootprintReport {
        dataset: table.dataset_name().to_string(),
        epoch: config.epoch,
        metrics,
        provenance: Provenance {
            config: config.clone(),
            seeds,
            split: config.split,
            metric: config.metric.clone(),
            static_sample_size: static_samples.len(),
            static_sampling,
            walks: config.walks,
            walk_steps: config.walk_steps,
            walks_skipped: rugged.as_ref().map(|r| r.skipped),
            birthday_trials: config.trials,
            birthday_runs: config.runs.min(table.len()),
            birthday_k_mean: birthday.as_ref().map(|b| b.k_mean),
            birthday_failed_trials: birthday.as_ref().map(|b| b.failed_trials),
            persistence_sample_size: persistence_samples,
            persistence_epochs,
            null_reasons: reasons,
            notes,
        },
    })
}

fn static_sample(
    landscape: &TabularLandscape<'_>,
    config: &FootprintConfig,
    seeds: SubSeeds,
    notes: &mut Vec<String>,
) -> Result<(Vec<crate::genotype::Genotype>, SampleMethod)> {
    let size = landscape.size();
    let n = if config.n_samples as u128 > size {
        notes.push(format!("static sample capped at table size {size}"));
        size as usize
    } else {
        config.n_samples
    };
    if config.sampling == SampleMethod::Lhs {
        match sample_lhs(landscape, n, seeds.static_samples) {
            Ok(s) => return Ok((s.genotypes, SampleMethod::Lhs)),
            Err(Error::SamplingExhausted(msg)) => {
                notes.push(format!("LHS infeasible on this table ({msg}); fell back to uniform sampling"));
            }
            Err(e) => return Err(e),
        }
    }
    let genotypes = uniform_members(landscape, n, &mut rng_for(seeds.static_samples, 0))?;
    Ok((genotypes, SampleMethod::Uniform))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedAxes {
    pub dataset: String,
    /// Raw values in [`AXES`] order.
    pub values: [Option<f64>; 8],
    /// Min–max scaled values; an axis where every report agrees maps to 0.5.
    pub normalized: [Option<f64>; 8],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintComparison {
    pub axes: Vec<String>,
    pub reports: Vec<NormalizedAxes>,
}

impl FootprintComparison {
    /// Radar-ready CSV: one row per report and axis.
    pub fn write_radar_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "dataset,axis,value,normalized")?;
        for r in &self.reports {
            for (i, axis) in AXES.iter().enumerate() {
                let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                writeln!(w, "{},{},{},{}", r.dataset, axis, cell(r.values[i]), cell(r.normalized[i]))?;
            }
        }
        Ok(())
    }
}

pub fn compare_footprints(reports: &[FootprintReport]) -> Result<FootprintComparison> {
    if reports.len() < 2 {
        return Err(Error::InvalidParameter("comparison needs at least two reports".into()));
    }
    let values: Vec<[Option<f64>; 8]> = reports.iter().map(|r| r.metrics.axis_values()).collect();
    for (i, axis) in AXES.iter().enumerate() {
        let present = values.iter().filter(|v| v[i].is_some()).count();
        if present != 0 && present != values.len() {
            return Err(Error::MismatchedMetrics(format!(
                "{axis} is null in {} of {} reports",
                values.len() - present,
                values.len()
            )));
        }
    }
    let mut normalized = vec![[None; 8]; values.len()];
    for i in 0..AXES.len() {
        let column: Vec<f64> = values.iter().filter_map(|v| v[i]).collect();
        if column.is_empty() {
            continue;
        }
        let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (row, v) in normalized.iter_mut().zip(&values) {
            let x = v[i].expect("axis present in every report");
            row[i] = Some(if hi > lo { (x - lo) / (hi - lo) } else { 0.5 });
        }
    }
    Ok(FootprintComparison {
        axes: AXES.iter().map(|s| s.to_string()).collect(),
        reports: reports
            .iter()
            .zip(values)
            .zip(normalized)
            .map(|((r, values), normalized)| NormalizedAxes {
                dataset: r.dataset.clone(),
                values,
                normalized,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{nk_table, NkSpec, TableBuilder};
    use crate::genotype::Genotype;

    fn small_config() -> FootprintConfig {
        FootprintConfig {
            seed: 3,
            split: Split::Test,
            runs: 50,
            walks: 10,
            walk_steps: 50,
            ..FootprintConfig::default()
        }
    }

    #[test]
    fn identical_epochs_give_full_persistence() {
        let t = nk_table(NkSpec { n: 10, k: 1, seed: 5 }, Split::Test, "overall_accuracy", &[12, 36], 0.0).unwrap();
        let r = compute_footprint(&t, &small_config()).unwrap();
        assert_eq!(r.metrics.persistence_pos_q1, Some(1.0));
        assert_eq!(r.metrics.persistence_neg_q1, Some(1.0));
        assert_eq!(r.metrics.auc_pos_q1, Some(1.0));
        assert_eq!(r.metrics.auc_neg_q1, Some(1.0));
        assert!(r.metrics.ruggedness_tau.is_some());
        assert!(r.metrics.cardinal_optima.unwrap() >= 1);
        assert_eq!(r.provenance.static_sample_size, 100);
        assert!(r.provenance.null_reasons.is_empty());
    }

    #[test]
    fn constant_table_reports_nulls_with_reasons() {
        let mut b = TableBuilder::new("flat");
        for bits in 0..64u64 {
            let q = |e| (Query::new(Split::Test, e, "overall_accuracy"), 0.5);
            b.add(format!("g{bits}"), Genotype::from_u64(bits, 6), None, vec![q(12), q(36)]);
        }
        let t = b.build().unwrap();
        let cfg = FootprintConfig { n_samples: 20, ..small_config() };
        let r = compute_footprint(&t, &cfg).unwrap();
        assert_eq!(r.metrics.std_fitness, 0.0);
        assert_eq!(r.metrics.ruggedness_tau, None);
        assert!(r.provenance.null_reasons.contains_key("ruggedness_tau"));
        assert_eq!(r.metrics.cardinal_optima, None);
        assert!(r.provenance.null_reasons.contains_key("cardinal_optima"));
    }

    #[test]
    fn disabled_birthday_is_null() {
        let t = nk_table(NkSpec { n: 8, k: 2, seed: 1 }, Split::Test, "overall_accuracy", &[36], 0.0).unwrap();
        let cfg = FootprintConfig { birthday: false, n_samples: 50, ..small_config() };
        let r = compute_footprint(&t, &cfg).unwrap();
        assert_eq!(r.metrics.cardinal_optima, None);
        // One epoch only: persistence is undefined as well.
        assert_eq!(r.metrics.persistence_pos_q1, None);
        assert_eq!(r.provenance.null_reasons.len(), 5);
    }

    #[test]
    fn missing_static_epoch_fails() {
        let t = nk_table(NkSpec { n: 6, k: 1, seed: 1 }, Split::Test, "overall_accuracy", &[4, 12], 0.0).unwrap();
        assert!(compute_footprint(&t, &small_config()).is_err());
    }

    fn report(name: &str, tau: f64) -> FootprintReport {
        let t = nk_table(NkSpec { n: 6, k: 1, seed: 1 }, Split::Test, "overall_accuracy", &[12, 36], 0.0).unwrap();
        let cfg = FootprintConfig { n_samples: 20, ..small_config() };
        let mut r = compute_footprint(&t, &cfg).unwrap();
        r.dataset = name.into();
        r.metrics.ruggedness_tau = Some(tau);
        r
    }

    #[test]
    fn comparison_axes() {
        let c = compare_footprints(&[report("a", 1.93), report("b", 1.75)]).unwrap();
        assert_eq!(c.reports[0].normalized[2], Some(1.0));
        assert_eq!(c.reports[1].normalized[2], Some(0.0));
        assert_eq!(c.reports[0].normalized[0], Some(0.5));

        let c = compare_footprints(&[report("a", 1.0), report("b", 1.5), report("c", 3.0)]).unwrap();
        let mid = c.reports[1].normalized[2].unwrap();
        assert!(mid > 0.0 && mid < 1.0);

        let mut bad = report("x", 1.0);
        bad.metrics.cardinal_optima = None;
        assert!(matches!(
            compare_footprints(&[report("a", 1.0), bad]),
            Err(Error::MismatchedMetrics(_))
        ));
        assert!(compare_footprints(&[report("a", 1.0)]).is_err());

        let mut buf = Vec::new();
        c.write_radar_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 3 * 8);
    }
}
