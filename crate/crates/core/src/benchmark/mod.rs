//! Fitness sources: tabular benchmarks and synthetic NK landscapes.

mod landscape;
mod nk;
mod table;

pub use landscape::{
    enumerate_optima_exhaustive, is_strict_optimum, neighbors, Direction, FunctionLandscape,
    JointDesign, Landscape, OptimaEnumeration, DEFAULT_ENUMERATION_CAP,
};
pub use nk::{contribution_value, generate_nk, NkLandscape, NkSpec};
pub use table::{
    load_table, FitnessRecord, FitnessTable, Query, Split, TableBuilder, TabularLandscape,
};

use crate::error::{Error, Result};

pub(crate) use nk::splitmix64;

/// Fully enumerated bitstring table of an NK landscape, one record per
/// genotype, with a value for each requested epoch budget.
///
/// With `noise == 0` every epoch holds the NK fitness itself. Otherwise epoch
/// `e` adds a deterministic perturbation uniform in `[-noise, noise]`,
/// clamped to `[0, 1]`.
pub fn nk_table(
    spec: NkSpec,
    split: Split,
    metric: &str,
    epochs: &[u32],
    noise: f64,
) -> Result<FitnessTable> {
    if spec.n > 24 {
        return Err(Error::Capacity {
            size: 1u128 << spec.n,
            cap: 1 << 24,
        });
    }
    if epochs.is_empty() {
        return Err(Error::InvalidParameter("at least one epoch required".into()));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::InvalidParameter(format!("noise {noise} outside [0, 1]")));
    }
    let landscape = generate_nk(spec)?;
    let mut builder = TableBuilder::new(format!("nk-n{}-k{}-s{}", spec.n, spec.k, spec.seed));
    for bits in 0..(1u64 << spec.n) {
        let base = landscape.fitness_bits(bits);
        let measurements = epochs.iter().map(|&e| {
            let delta = if noise > 0.0 {
                let u = contribution_value(splitmix64(spec.seed ^ u64::from(e)), bits as usize, 0);
                noise * (2.0 * u - 1.0)
            } else {
                0.0
            };
            (
                Query::new(split, e, metric),
                (base + delta).clamp(0.0, 1.0),
            )
        });
        builder.add(
            format!("g{bits}"),
            crate::genotype::Genotype::from_u64(bits, spec.n),
            None,
            measurements.collect::<Vec<_>>(),
        );
    }
    builder.build()
}
