//! Rank persistence of configurations across increasing training budgets.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::benchmark::{FitnessTable, Query, Split};
use crate::error::{Error, Result};
use crate::genotype::Genotype;

/// Ranks `1..=Q1_RANK` make up the first-quartile summary.
pub const Q1_RANK: u32 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankDirection {
    /// Top-N% performers.
    Positive,
    /// Bottom-N% performers.
    Negative,
}

/// Indices of the Top-N% (or Bottom-N%) of `values`.
///
/// With `k = ceil(N·n/100)` (at least 1), the threshold is the `k`-th best
/// value and every value at least as good is included, so ties at the
/// threshold are kept.
pub fn rank_set(values: &[f64], n_pct: u32, direction: RankDirection) -> BTreeSet<usize> {
    if values.is_empty() {
        return BTreeSet::new();
    }
    let n = values.len();
    let k = ((n_pct as usize * n).div_ceil(100)).clamp(1, n);
    let mut sorted = values.to_vec();
    match direction {
        RankDirection::Positive => sorted.sort_by(|a, b| b.total_cmp(a)),
        RankDirection::Negative => sorted.sort_by(f64::total_cmp),
    }
    let threshold = sorted[k - 1];
    values
        .iter()
        .enumerate()
        .filter(|&(_, &v)| match direction {
            RankDirection::Positive => v >= threshold,
            RankDirection::Negative => v <= threshold,
        })
        .map(|(i, _)| i)
        .collect()
}

/// `Π` at one rank: the share of the first-budget rank set that stays in the
/// rank set at every later budget of the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistenceValue {
    pub pi: f64,
    pub initial: usize,
    pub retained: usize,
}

/// `fitness_by_epoch[t][i]`: fitness of sample `i` at the `t`-th budget.
pub fn persistence_from_matrix(
    fitness_by_epoch: &[Vec<f64>],
    n_pct: u32,
    direction: RankDirection,
) -> Result<PersistenceValue> {
    if fitness_by_epoch.len() < 2 {
        return Err(Error::InvalidParameter(
            "persistence needs at least two epoch budgets".into(),
        ));
    }
    if !(1..=100).contains(&n_pct) {
        return Err(Error::InvalidParameter(format!("rank N = {n_pct} outside [1, 100]")));
    }
    let initial = rank_set(&fitness_by_epoch[0], n_pct, direction);
    if initial.is_empty() {
        return Err(Error::Degenerate(format!(
            "empty initial rank set at N = {n_pct}; persistence undefined"
        )));
    }
    let mut kept = initial.clone();
    for values in &fitness_by_epoch[1..] {
        let set = rank_set(values, n_pct, direction);
        kept = kept.intersection(&set).copied().collect();
    }
    Ok(PersistenceValue {
        pi: kept.len() as f64 / initial.len() as f64,
        initial: initial.len(),
        retained: kept.len(),
    })
}

/// Fitness of `samples` at every budget of `(split, metric)`, in increasing
/// budget order.
pub fn fitness_matrix(
    table: &FitnessTable,
    samples: &[Genotype],
    split: Split,
    metric: &str,
) -> Result<(Vec<u32>, Vec<Vec<f64>>)> {
    let epochs = table.epochs_for(split, metric);
    if epochs.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "persistence needs at least two epoch budgets for {split}/{metric}, found {}",
            epochs.len()
        )));
    }
    if samples.is_empty() {
        return Err(Error::InvalidParameter("persistence needs at least one sample".into()));
    }
    let matrix = epochs
        .iter()
        .map(|&e| {
            let q = Query::new(split, e, metric);
            samples.iter().map(|g| table.fitness(g, &q)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((epochs, matrix))
}

pub fn persistence(
    table: &FitnessTable,
    samples: &[Genotype],
    direction: RankDirection,
    n_pct: u32,
    split: Split,
    metric: &str,
) -> Result<PersistenceValue> {
    let (_, matrix) = fitness_matrix(table, samples, split, metric)?;
    persistence_from_matrix(&matrix, n_pct, direction)
}

/// `Π(N)` for `N = 1..=100` up to one horizon budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonCurve {
    pub until_epoch: u32,
    /// Index `N - 1`; `None` marks an undefined rank.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceCurve {
    pub direction: RankDirection,
    pub horizon: Vec<u32>,
    /// Curves over the growing horizons `[t0, t1]`, `[t0, t1, t2]`, ...; the
    /// last one spans every budget.
    pub by_horizon: Vec<HorizonCurve>,
    /// Trapezoidal integral of the full-horizon `Π` over `N ∈ [1, 25]`,
    /// divided by 24.
    pub auc_q1: Option<f64>,
}

impl PersistenceCurve {
    /// Full-horizon `Π(N)`.
    pub fn value(&self, n_pct: u32) -> Option<f64> {
        let last = self.by_horizon.last()?;
        last.values.get(n_pct.checked_sub(1)? as usize).copied().flatten()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.by_horizon.last().expect("curve has a horizon").values
    }

    /// CSV with column `N` and one `pi_until_<epoch>` column per horizon.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = self
            .by_horizon
            .iter()
            .map(|h| format!("pi_until_{}", h.until_epoch))
            .collect();
        writeln!(w, "N,{}", header.join(","))?;
        for n in 0..100 {
            let cells: Vec<String> = self
                .by_horizon
                .iter()
                .map(|h| h.values[n].map(|v| v.to_string()).unwrap_or_default())
                .collect();
            writeln!(w, "{},{}", n + 1, cells.join(","))?;
        }
        Ok(())
    }
}

/// Normalized area under `Π` over ranks `1..=25`.
pub fn auc_q1(values: &[Option<f64>]) -> Option<f64> {
    let q1: Vec<f64> = values
        .iter()
        .take(Q1_RANK as usize)
        .copied()
        .collect::<Option<Vec<_>>>()?;
    if q1.len() < Q1_RANK as usize {
        return None;
    }
    let area: f64 = q1.windows(2).map(|p| 0.5 * (p[0] + p[1])).sum();
    Some(area / f64::from(Q1_RANK - 1))
}

pub fn persistence_curve_from_matrix(
    epochs: &[u32],
    fitness_by_epoch: &[Vec<f64>],
    direction: RankDirection,
) -> Result<PersistenceCurve> {
    if epochs.len() != fitness_by_epoch.len() || epochs.len() < 2 {
        return Err(Error::InvalidParameter(
            "persistence curve needs matching budgets and at least two of them".into(),
        ));
    }
    let by_horizon = (2..=epochs.len())
        .map(|h| HorizonCurve {
            until_epoch: epochs[h - 1],
            values: (1..=100)
                .map(|n| {
                    persistence_from_matrix(&fitness_by_epoch[..h], n, direction)
                        .ok()
                        .map(|p| p.pi)
                })
                .collect(),
        })
        .collect::<Vec<_>>();
    let auc = auc_q1(&by_horizon.last().expect("at least one horizon").values);
    Ok(PersistenceCurve {
        direction,
        horizon: epochs.to_vec(),
        by_horizon,
        auc_q1: auc,
    })
}

pub fn persistence_curve(
    table: &FitnessTable,
    samples: &[Genotype],
    direction: RankDirection,
    split: Split,
    metric: &str,
) -> Result<PersistenceCurve> {
    let (epochs, matrix) = fitness_matrix(table, samples, split, metric)?;
    persistence_curve_from_matrix(&epochs, &matrix, direction)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_enumerated_example() {
        // Samples A, B, C, D.
        let t0 = vec![0.9, 0.8, 0.2, 0.1];
        let t1 = vec![0.95, 0.3, 0.85, 0.1];
        assert_eq!(rank_set(&t0, 50, RankDirection::Positive), BTreeSet::from([0, 1]));
        assert_eq!(rank_set(&t1, 50, RankDirection::Positive), BTreeSet::from([0, 2]));
        let p = persistence_from_matrix(&[t0, t1], 50, RankDirection::Positive).unwrap();
        assert_eq!(p.pi, 0.5);
    }

    #[test]
    fn identical_epochs_persist() {
        let t = vec![0.3, 0.1, 0.7, 0.7, 0.5];
        let c = persistence_curve_from_matrix(&[4, 12], &[t.clone(), t], RankDirection::Negative).unwrap();
        assert!(c.values().iter().all(|v| *v == Some(1.0)));
        assert_eq!(c.auc_q1, Some(1.0));
    }

    #[test]
    fn reversal_gives_zero() {
        let t0 = vec![0.1, 0.2, 0.3, 0.4];
        let t1 = vec![0.4, 0.3, 0.2, 0.1];
        for dir in [RankDirection::Positive, RankDirection::Negative] {
            assert_eq!(persistence_from_matrix(&[t0.clone(), t1.clone()], 50, dir).unwrap().pi, 0.0);
        }
    }

    #[test]
    fn ties_at_threshold_are_included() {
        let v = vec![0.5, 0.5, 0.5, 0.1];
        assert_eq!(rank_set(&v, 25, RankDirection::Positive).len(), 3);
        assert_eq!(rank_set(&v, 100, RankDirection::Positive).len(), 4);
    }

    #[test]
    fn invalid_inputs() {
        let t = vec![0.1, 0.2];
        assert!(persistence_from_matrix(std::slice::from_ref(&t), 10, RankDirection::Positive).is_err());
        assert!(persistence_from_matrix(&[t.clone(), t.clone()], 0, RankDirection::Positive).is_err());
        assert!(persistence_from_matrix(&[t.clone(), t], 101, RankDirection::Positive).is_err());
    }

    #[test]
    fn nested_horizons_do_not_increase() {
        let m = vec![
            vec![0.1, 0.5, 0.3, 0.9, 0.7, 0.2],
            vec![0.2, 0.4, 0.6, 0.8, 0.1, 0.3],
            vec![0.9, 0.1, 0.5, 0.7, 0.3, 0.2],
        ];
        let c = persistence_curve_from_matrix(&[4, 12, 36], &m, RankDirection::Positive).unwrap();
        for n in 0..100 {
            let a = c.by_horizon[0].values[n].unwrap();
            let b = c.by_horizon[1].values[n].unwrap();
            assert!(b <= a);
        }
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("N,pi_until_12,pi_until_36\n1,"));
        assert_eq!(text.lines().count(), 101);
    }
}
