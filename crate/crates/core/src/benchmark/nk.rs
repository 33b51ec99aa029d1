//! NK landscapes: tunably rugged bitstring landscapes with exact oracles.

use serde::{Deserialize, Serialize};

use super::landscape::{bitstring_design, decode_bitstring_point, JointDesign, Landscape};
use crate::error::{Error, Result};
use crate::genotype::Genotype;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NkSpec {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
}

/// Locus `i` interacts with loci `i+1, ..., i+k` (cyclically). Its
/// contribution for each of the `2^(k+1)` local patterns is a uniform draw
/// keyed by `(seed, locus, pattern)`.
#[derive(Debug, Clone)]
pub struct NkLandscape {
    spec: NkSpec,
    contributions: Vec<Vec<f64>>,
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform value in `[0, 1)` for a `(seed, locus, pattern)` counter.
pub fn contribution_value(seed: u64, locus: usize, pattern: usize) -> f64 {
    let h = splitmix64(seed ^ splitmix64((locus as u64) ^ splitmix64(pattern as u64).rotate_left(17)));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

pub fn generate_nk(spec: NkSpec) -> Result<NkLandscape> {
    if spec.n == 0 || spec.n > 64 {
        return Err(Error::InvalidParameter(format!(
            "NK length n={} outside [1, 64]",
            spec.n
        )));
    }
    if spec.k >= spec.n {
        return Err(Error::InvalidParameter(format!(
            "NK requires k < n (k={}, n={})",
            spec.k, spec.n
        )));
    }
    if spec.k > 20 {
        return Err(Error::InvalidParameter(format!("NK k={} too large", spec.k)));
    }
    let patterns = 1usize << (spec.k + 1);
    let contributions = (0..spec.n)
        .map(|locus| {
            (0..patterns)
                .map(|p| contribution_value(spec.seed, locus, p))
                .collect()
        })
        .collect();
    Ok(NkLandscape {
        spec,
        contributions,
    })
}

impl NkLandscape {
    pub fn spec(&self) -> NkSpec {
        self.spec
    }

    /// Fitness of the bitstring packed in the low `n` bits of `bits`.
    pub fn fitness_bits(&self, bits: u64) -> f64 {
        let NkSpec { n, k, .. } = self.spec;
        let mut total = 0.0;
        for (locus, table) in self.contributions.iter().enumerate() {
            let mut pattern = 0usize;
            for j in 0..=k {
                let bit = (bits >> ((locus + j) % n)) & 1;
                pattern |= (bit as usize) << j;
            }
            total += table[pattern];
        }
        total / n as f64
    }
}

impl Landscape for NkLandscape {
    fn genotype_len(&self) -> usize {
        self.spec.n
    }

    fn size(&self) -> u128 {
        1u128 << self.spec.n
    }

    fn member(&self, index: u128) -> Option<Genotype> {
        (index < self.size()).then(|| Genotype::from_u64(index as u64, self.spec.n))
    }

    fn contains(&self, x: &Genotype) -> bool {
        x.len() == self.spec.n
    }

    fn fitness(&self, x: &Genotype) -> Result<f64> {
        if x.len() != self.spec.n {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.spec.n,
            });
        }
        Ok(self.fitness_bits(x.to_u64().expect("n <= 64")))
    }

    fn design(&self) -> JointDesign {
        bitstring_design(self.spec.n)
    }

    fn decode_point(&self, point: &[usize]) -> Option<Genotype> {
        decode_bitstring_point(point, self.spec.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::landscape::{enumerate_optima_exhaustive, Direction};

    #[test]
    fn k_must_be_below_n() {
        assert!(generate_nk(NkSpec { n: 4, k: 4, seed: 1 }).is_err());
        assert!(generate_nk(NkSpec { n: 4, k: 3, seed: 1 }).is_ok());
    }

    #[test]
    fn same_seed_same_landscape() {
        let a = generate_nk(NkSpec { n: 8, k: 2, seed: 42 }).unwrap();
        let b = generate_nk(NkSpec { n: 8, k: 2, seed: 42 }).unwrap();
        let c = generate_nk(NkSpec { n: 8, k: 2, seed: 43 }).unwrap();
        let mut differs = false;
        for x in 0..256u64 {
            assert_eq!(a.fitness_bits(x).to_bits(), b.fitness_bits(x).to_bits());
            differs |= a.fitness_bits(x) != c.fitness_bits(x);
        }
        assert!(differs);
    }

    #[test]
    fn additive_landscape_has_one_maximum() {
        for seed in 0..5 {
            let l = generate_nk(NkSpec { n: 10, k: 0, seed }).unwrap();
            let e = enumerate_optima_exhaustive(&l, Direction::Max, 1 << 20).unwrap();
            assert_eq!(e.count, 1);
        }
    }

    #[test]
    fn values_in_unit_interval() {
        let l = generate_nk(NkSpec { n: 12, k: 5, seed: 3 }).unwrap();
        for x in 0..4096u64 {
            let f = l.fitness_bits(x);
            assert!((0.0..=1.0).contains(&f));
        }
        let g = Genotype::from_u64(5, 12);
        assert_eq!(l.neighbors(&g).len(), 12);
    }
}
