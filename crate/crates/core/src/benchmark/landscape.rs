use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genotype::Genotype;

/// Default cap on `|Ω|` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 20;

/// Search direction for local search and optimum definitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Min,
    Max,
}

impl Direction {
    /// `true` when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Max => a > b,
            Direction::Min => a < b,
        }
    }
}

impl FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "min" => Ok(Direction::Min),
            "max" => Ok(Direction::Max),
            other => Err(Error::InvalidParameter(format!("unknown direction {other:?}"))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Min => "min",
            Direction::Max => "max",
        })
    }
}

/// Categorical dimensions over which Latin hypercube sampling stratifies.
/// `cardinalities[d]` is the number of values dimension `d` can take.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDesign {
    pub cardinalities: Vec<usize>,
}

/// A fitness landscape: search space, fitness function and Hamming-1
/// neighborhood restricted to valid members.
///
/// Implementations are immutable and shared read-only across workers.
pub trait Landscape: Sync {
    /// Bit length of every member genotype.
    fn genotype_len(&self) -> usize;

    /// Number of members of the search space.
    fn size(&self) -> u128;

    /// The `index`-th member in a fixed enumeration order, `index < size()`.
    fn member(&self, index: u128) -> Option<Genotype>;

    fn contains(&self, x: &Genotype) -> bool;

    fn fitness(&self, x: &Genotype) -> Result<f64>;

    /// Valid genotypes at Hamming distance one from `x`, in bit order.
    fn neighbors(&self, x: &Genotype) -> Vec<Genotype> {
        x.flips().filter(|y| self.contains(y)).collect()
    }

    /// Joint representation used for Latin hypercube sampling.
    fn design(&self) -> JointDesign;

    /// Maps a point of [`Landscape::design`] (one category per dimension) to
    /// a member, or `None` when the point decodes to nothing valid.
    fn decode_point(&self, point: &[usize]) -> Option<Genotype>;
}

/// Valid Hamming-1 neighbors of `x` in `landscape`.
pub fn neighbors<L: Landscape + ?Sized>(x: &Genotype, landscape: &L) -> Vec<Genotype> {
    landscape.neighbors(x)
}

/// `true` when `x` is strictly better than every neighbor. Points without
/// neighbors are not optima.
pub fn is_strict_optimum<L: Landscape + ?Sized>(
    landscape: &L,
    x: &Genotype,
    direction: Direction,
) -> Result<bool> {
    let fx = landscape.fitness(x)?;
    let nbrs = landscape.neighbors(x);
    if nbrs.is_empty() {
        return Ok(false);
    }
    for y in &nbrs {
        if !direction.better(fx, landscape.fitness(y)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimaEnumeration {
    pub count: usize,
    /// Strict local optima, sorted.
    pub optima: Vec<Genotype>,
}

/// Exact strict local optima of an enumerable landscape with at most `cap`
/// members.
pub fn enumerate_optima_exhaustive<L: Landscape + ?Sized>(
    landscape: &L,
    direction: Direction,
    cap: u128,
) -> Result<OptimaEnumeration> {
    let size = landscape.size();
    if size > cap {
        return Err(Error::Capacity { size, cap });
    }
    let mut optima = Vec::new();
    for i in 0..size {
        let x = landscape
            .member(i)
            .ok_or_else(|| Error::InvalidParameter(format!("member {i} missing")))?;
        if is_strict_optimum(landscape, &x, direction)? {
            optima.push(x);
        }
    }
    optima.sort();
    Ok(OptimaEnumeration {
        count: optima.len(),
        optima,
    })
}

/// Bitstring landscape of length `n` (at most 64) whose fitness is an
/// arbitrary function; every bit flip is a valid move.
pub struct FunctionLandscape<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&Genotype) -> f64 + Sync> FunctionLandscape<F> {
    pub fn new(n: usize, f: F) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::InvalidParameter(format!(
                "bitstring length {n} outside [1, 64]"
            )));
        }
        Ok(FunctionLandscape { n, f })
    }
}

impl<F: Fn(&Genotype) -> f64 + Sync> Landscape for FunctionLandscape<F> {
    fn genotype_len(&self) -> usize {
        self.n
    }
    fn size(&self) -> u128 {
        1u128 << self.n
    }
    fn member(&self, index: u128) -> Option<Genotype> {
        (index < self.size()).then(|| Genotype::from_u64(index as u64, self.n))
    }
    fn contains(&self, x: &Genotype) -> bool {
        x.len() == self.n
    }
    fn fitness(&self, x: &Genotype) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.n,
            });
        }
        Ok((self.f)(x))
    }
    fn design(&self) -> JointDesign {
        bitstring_design(self.n)
    }
    fn decode_point(&self, point: &[usize]) -> Option<Genotype> {
        decode_bitstring_point(point, self.n)
    }
}

pub(crate) fn bitstring_design(n: usize) -> JointDesign {
    JointDesign {
        cardinalities: vec![2; n],
    }
}

pub(crate) fn decode_bitstring_point(point: &[usize], n: usize) -> Option<Genotype> {
    if point.len() != n || point.iter().any(|&v| v > 1) {
        return None;
    }
    let bits: Vec<bool> = point.iter().map(|&v| v == 1).collect();
    Some(Genotype::from_bits(&bits))
}
