//! Seeded sampling used by checks on presentations with infinite centers.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abelian::{AbelianGroup, ExponentVector, Order};

/// Window and trial count for sampled checks.
///
/// Exponents of infinite factors are drawn from `[-bound, bound]`; finite
/// factors are drawn uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleConfig {
    pub bound: i64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            bound: 3,
            trials: 10_000,
            seed: 0,
        }
    }
}

impl SampleConfig {
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

pub(crate) fn random_central<R: Rng>(center: &AbelianGroup, bound: i64, rng: &mut R) -> ExponentVector {
    let raw: Vec<BigInt> = center
        .orders()
        .iter()
        .map(|o| match o {
            Order::Finite(n) => BigInt::from(rng.gen_range(0..*n)),
            Order::Infinite => BigInt::from(rng.gen_range(-bound..=bound)),
        })
        .collect();
    center.reduce(&raw).expect("sampled vector has the group's rank")
}

/// Every central element whose infinite-factor exponents lie in `[-bound, bound]`.
pub(crate) fn window(center: &AbelianGroup, bound: i64) -> Vec<ExponentVector> {
    let mut out = vec![Vec::<BigInt>::new()];
    for o in center.orders() {
        let range: Vec<BigInt> = match o {
            Order::Finite(n) => (0..*n).map(BigInt::from).collect(),
            Order::Infinite => (-bound..=bound).map(BigInt::from).collect(),
        };
        out = out
            .into_iter()
            .flat_map(|prefix| {
                range.iter().map(move |e| {
                    let mut v = prefix.clone();
                    v.push(e.clone());
                    v
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|v| center.reduce(&v).expect("window vector has the group's rank"))
        .collect()
}
