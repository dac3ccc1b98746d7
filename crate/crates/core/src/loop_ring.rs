//! The loop ring `RL` over `Z/nZ` for a finite loop `L`, `n` odd.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cayley_oracle::CayleyTable;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("modulus {0} must be odd and at least 3")]
    Modulus(u64),
    #[error("moduli {0} and {1} differ")]
    ModulusMismatch(u64, u64),
    #[error("basis index {index} is outside a loop of order {order}")]
    Basis { index: usize, order: usize },
}

pub fn check_modulus(n: u64) -> Result<u64, RingError> {
    if n >= 3 && n % 2 == 1 {
        Ok(n)
    } else {
        Err(RingError::Modulus(n))
    }
}

/// Finite formal sum of loop elements; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingElement {
    modulus: u64,
    coeffs: BTreeMap<usize, u64>,
}

impl RingElement {
    pub fn zero(modulus: u64) -> Result<Self, RingError> {
        Ok(RingElement {
            modulus: check_modulus(modulus)?,
            coeffs: BTreeMap::new(),
        })
    }

    pub fn basis(index: usize, modulus: u64) -> Result<Self, RingError> {
        Self::from_terms([(index, 1)], modulus)
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (usize, i64)>, modulus: u64) -> Result<Self, RingError> {
        let mut out = Self::zero(modulus)?;
        for (g, c) in terms {
            out.add_term(g, c.rem_euclid(modulus as i64) as u64);
        }
        Ok(out)
    }

    pub fn random<R: Rng>(order: usize, modulus: u64, rng: &mut R) -> Result<Self, RingError> {
        Self::from_terms((0..order).map(|g| (g, rng.gen_range(0..modulus as i64))), modulus)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn coefficient(&self, g: usize) -> u64 {
        self.coeffs.get(&g).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.coeffs.iter().map(|(&g, &c)| (g, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn add_term(&mut self, g: usize, c: u64) {
        let n = self.modulus;
        let entry = self.coeffs.entry(g).or_insert(0);
        *entry = (*entry + c % n) % n;
        if *entry == 0 {
            self.coeffs.remove(&g);
        }
    }

    fn same_ring(&self, other: &Self) -> Result<(), RingError> {
        if self.modulus == other.modulus {
            Ok(())
        } else {
            Err(RingError::ModulusMismatch(self.modulus, other.modulus))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, RingError> {
        self.same_ring(other)?;
        let mut out = self.clone();
        for (g, c) in other.terms() {
            out.add_term(g, c);
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let n = self.modulus;
        RingElement {
            modulus: n,
            coeffs: self.coeffs.iter().map(|(&g, &c)| (g, n - c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, RingError> {
        self.add(&other.neg())
    }

    /// Convolution: the coefficient of `k` sums `a_g b_h` over `gh = k`.
    pub fn mul(&self, other: &Self, loop_table: &CayleyTable) -> Result<Self, RingError> {
        self.same_ring(other)?;
        for g in self.coeffs.keys().chain(other.coeffs.keys()) {
            if *g >= loop_table.n() {
                return Err(RingError::Basis {
                    index: *g,
                    order: loop_table.n(),
                });
            }
        }
        let n = self.modulus;
        let mut out = Self::zero(n)?;
        for (g, a) in self.terms() {
            for (h, b) in other.terms() {
                out.add_term(loop_table.mul(g, h), a * b % n);
            }
        }
        Ok(out)
    }

    /// `[a, b, c] = (ab)c - a(bc)`.
    pub fn associator(a: &Self, b: &Self, c: &Self, loop_table: &CayleyTable) -> Result<Self, RingError> {
        let left = a.mul(b, loop_table)?.mul(c, loop_table)?;
        let right = a.mul(&b.mul(c, loop_table)?, loop_table)?;
        left.sub(&right)
    }
}

/// `true` when the signed sum of basis elements vanishes modulo `n`.
fn vanishes(terms: &mut [(usize, i64)], n: u64) -> bool {
    terms.sort_unstable_by_key(|t| t.0);
    terms
        .chunk_by(|x, y| x.0 == y.0)
        .all(|run| run.iter().map(|t| t.1).sum::<i64>().rem_euclid(n as i64) == 0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlternativeReport {
    pub holds: bool,
    /// Basis triple `(g, h, k)` where a linearized law fails.
    pub witness: Option<[usize; 3]>,
    /// `"left"` for `[g,h,k] + [h,g,k]`, `"right"` for `[k,g,h] + [k,h,g]`.
    pub law: Option<&'static str>,
    pub triples_checked: u64,
}

/// Decides whether `RL` over `Z/nZ` is alternative.
///
/// With 2 invertible, `[a,a,b] = 0` for all `a, b` is equivalent to the
/// linearized identity `[g,h,k] + [h,g,k] = 0` on basis elements, and
/// likewise on the right; every basis triple is checked.
pub fn check_alternative(t: &CayleyTable, modulus: u64) -> Result<AlternativeReport, RingError> {
    let n = check_modulus(modulus)?;
    let order = t.n();
    let failure = (0..order).into_par_iter().find_map_first(|g| {
        for h in 0..order {
            let gh = t.mul(g, h);
            let hg = t.mul(h, g);
            for k in 0..order {
                let mut left = [
                    (t.mul(gh, k), 1),
                    (t.mul(g, t.mul(h, k)), -1),
                    (t.mul(hg, k), 1),
                    (t.mul(h, t.mul(g, k)), -1),
                ];
                if !vanishes(&mut left, n) {
                    return Some(([g, h, k], "left"));
                }
                let kg = t.mul(k, g);
                let kh = t.mul(k, h);
                let mut right = [(t.mul(kg, h), 1), (t.mul(k, gh), -1), (t.mul(kh, g), 1), (t.mul(k, hg), -1)];
                if !vanishes(&mut right, n) {
                    return Some(([g, h, k], "right"));
                }
            }
        }
        None
    });
    Ok(AlternativeReport {
        holds: failure.is_none(),
        witness: failure.map(|f| f.0),
        law: failure.map(|f| f.1),
        triples_checked: (order as u64).pow(3),
    })
}

/// Ring associativity reduces to associativity of the basis.
pub fn check_associative(t: &CayleyTable) -> (bool, Option<[usize; 3]>) {
    let w = t.associativity_witness();
    (w.is_none(), w)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaVerdict {
    pub alternative: AlternativeReport,
    pub associative: bool,
    pub associativity_witness: Option<[usize; 3]>,
}

impl RaVerdict {
    pub fn is_ra(&self) -> bool {
        self.alternative.holds && !self.associative
    }
}

pub fn ra_verdict(t: &CayleyTable, modulus: u64) -> Result<RaVerdict, RingError> {
    let alternative = check_alternative(t, modulus)?;
    let (associative, associativity_witness) = check_associative(t);
    Ok(RaVerdict {
        alternative,
        associative,
        associativity_witness,
    })
}

/// Alternative but not associative.
pub fn is_ra_finite(t: &CayleyTable, modulus: u64) -> Result<bool, RingError> {
    Ok(ra_verdict(t, modulus)?.is_ra())
}
