#![allow(dead_code)]

use std::collections::BTreeSet;

use lfp::genotype::{CellSpec, OperatorLabel};

/// Every valid cell with at most `max_nodes` nodes, by brute force over
/// upper-triangular adjacency masks and operator assignments.
pub fn all_cells(max_nodes: usize) -> Vec<CellSpec> {
    let mut out = Vec::new();
    for m in 2..=max_nodes {
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|u| (u + 1..m).map(move |v| (u, v))).collect();
        let op_combos = 3usize.pow((m - 2) as u32);
        for mask in 0u32..(1 << pairs.len()) {
            let mut adjacency = vec![vec![false; m]; m];
            for (bit, &(u, v)) in pairs.iter().enumerate() {
                adjacency[u][v] = mask >> bit & 1 == 1;
            }
            for combo in 0..op_combos {
                let mut c = combo;
                let ops = (0..m - 2)
                    .map(|_| {
                        let o = OperatorLabel::from_index(c % 3).unwrap();
                        c /= 3;
                        o
                    })
                    .collect();
                if let Ok(cell) = CellSpec::new(adjacency.clone(), ops) {
                    out.push(cell);
                }
            }
        }
    }
    out
}

/// Lag-`k` autocorrelation by direct summation: the average lagged product
/// of deviations over the average squared deviation.
pub fn autocorrelation_oracle(f: &[f64], k: usize) -> f64 {
    let n = f.len();
    let mut mean = 0.0;
    for v in f {
        mean += v;
    }
    mean /= n as f64;
    let mut num = 0.0;
    for i in 0..n - k {
        num += (f[i] - mean) * (f[i + k] - mean);
    }
    let mut den = 0.0;
    for v in f {
        den += (v - mean) * (v - mean);
    }
    (num / (n - k) as f64) / (den / n as f64)
}

/// Sample Pearson coefficient from raw sums.
pub fn pearson_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (sx, sy): (f64, f64) = (xs.iter().sum(), ys.iter().sum());
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Members of the Top-N% (`top`) or Bottom-N% set: a value is kept when fewer
/// than `k = ceil(N·n/100)` values are strictly better.
pub fn rank_set_oracle(values: &[f64], n_pct: u32, top: bool) -> BTreeSet<usize> {
    let n = values.len();
    let k = ((n_pct as usize * n + 99) / 100).max(1);
    (0..n)
        .filter(|&i| {
            let better = values
                .iter()
                .filter(|&&v| if top { v > values[i] } else { v < values[i] })
                .count();
            better < k
        })
        .collect()
}

/// Persistence by explicit set intersection; `None` for an empty first set.
pub fn persistence_oracle(by_epoch: &[Vec<f64>], n_pct: u32, top: bool) -> Option<f64> {
    let first = rank_set_oracle(&by_epoch[0], n_pct, top);
    if first.is_empty() {
        return None;
    }
    let mut kept = first.clone();
    for e in &by_epoch[1..] {
        let s = rank_set_oracle(e, n_pct, top);
        kept.retain(|i| s.contains(i));
    }
    Some(kept.len() as f64 / first.len() as f64)
}
