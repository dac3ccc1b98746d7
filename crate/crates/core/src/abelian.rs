//! Finitely generated abelian groups written as direct products of cyclic
//! factors, with elements stored as exponent vectors.
//!
//! Finite factors keep their exponents in `[0, order)`. Infinite factors keep
//! arbitrary integers, so every exponent is a [`BigInt`].

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Order of a cyclic factor or of an element: a positive integer or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Order {
    Finite(u64),
    Infinite,
}

impl Order {
    pub fn is_finite(self) -> bool {
        matches!(self, Order::Finite(_))
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Order::Finite(n) => Some(n),
            Order::Infinite => None,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(n) => write!(f, "{n}"),
            Order::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbelianError {
    #[error("expected {expected} exponents, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("factor {index} has order 0")]
    ZeroOrder { index: usize },
    #[error("expected {expected} factor names, found {found}")]
    NameCount { expected: usize, found: usize },
    #[error("group has an infinite factor and cannot be enumerated")]
    NotEnumerable,
    #[error("product of the finite factor orders does not fit in 64 bits")]
    OrderOverflow,
}

/// Canonical exponent tuple of an element of an [`AbelianGroup`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExponentVector(Vec<BigInt>);

impl ExponentVector {
    pub fn as_slice(&self) -> &[BigInt] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> &BigInt {
        &self.0[index]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    /// Exponents as machine integers, if they all fit.
    pub fn to_i64s(&self) -> Option<Vec<i64>> {
        self.0.iter().map(ToPrimitive::to_i64).collect()
    }

    /// Indices of the factors with a nonzero exponent.
    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| !self.0[i].is_zero()).collect()
    }
}

/// A direct product of cyclic groups, each finite or infinite.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbelianGroup {
    orders: Vec<Order>,
    names: Vec<String>,
}

impl AbelianGroup {
    /// Builds the group with default factor names `z1, z2, ...`.
    pub fn new(orders: Vec<Order>) -> Result<Self, AbelianError> {
        let names = (1..=orders.len()).map(|i| format!("z{i}")).collect();
        Self::with_names(orders, names)
    }

    pub fn with_names(orders: Vec<Order>, names: Vec<String>) -> Result<Self, AbelianError> {
        if names.len() != orders.len() {
            return Err(AbelianError::NameCount {
                expected: orders.len(),
                found: names.len(),
            });
        }
        let mut product: u64 = 1;
        for (index, order) in orders.iter().enumerate() {
            if let Order::Finite(n) = order {
                if *n == 0 {
                    return Err(AbelianError::ZeroOrder { index });
                }
                product = product.checked_mul(*n).ok_or(AbelianError::OrderOverflow)?;
            }
        }
        Ok(AbelianGroup { orders, names })
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn orders(&self) -> &[Order] {
        &self.orders
    }

    pub fn factor_order(&self, index: usize) -> Order {
        self.orders[index]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn is_finite(&self) -> bool {
        self.orders.iter().all(|o| o.is_finite())
    }

    pub fn order(&self) -> Order {
        let mut product: u64 = 1;
        for o in &self.orders {
            match o {
                Order::Finite(n) => product *= n,
                Order::Infinite => return Order::Infinite,
            }
        }
        Order::Finite(product)
    }

    /// Number of infinite cyclic factors.
    pub fn free_rank(&self) -> usize {
        self.orders.iter().filter(|o| !o.is_finite()).count()
    }

    /// Elementary divisors (prime powers) of the torsion part, sorted.
    /// Trivial factors contribute nothing.
    pub fn torsion_invariants(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for o in &self.orders {
            if let Order::Finite(n) = o {
                out.extend(prime_power_parts(*n));
            }
        }
        out.sort_unstable();
        out
    }

    pub fn identity(&self) -> ExponentVector {
        ExponentVector(vec![BigInt::zero(); self.rank()])
    }

    pub fn generator(&self, index: usize) -> ExponentVector {
        let mut v = vec![BigInt::zero(); self.rank()];
        v[index] = BigInt::one();
        self.canonical(v)
    }

    /// Canonical representative of a raw exponent tuple.
    pub fn reduce(&self, raw: &[BigInt]) -> Result<ExponentVector, AbelianError> {
        self.check_len(raw.len())?;
        Ok(self.canonical(raw.to_vec()))
    }

    pub fn reduce_i64(&self, raw: &[i64]) -> Result<ExponentVector, AbelianError> {
        self.check_len(raw.len())?;
        Ok(self.canonical(raw.iter().map(|&e| BigInt::from(e)).collect()))
    }

    pub fn mul(&self, a: &ExponentVector, b: &ExponentVector) -> Result<ExponentVector, AbelianError> {
        self.check_len(a.len())?;
        self.check_len(b.len())?;
        Ok(self.add(a, b))
    }

    /// k-fold product; `k` may be negative.
    pub fn pow(&self, a: &ExponentVector, k: impl Into<BigInt>) -> ExponentVector {
        let k = k.into();
        self.canonical(a.0.iter().map(|e| e * &k).collect())
    }

    pub fn inv(&self, a: &ExponentVector) -> ExponentVector {
        self.canonical(a.0.iter().map(|e| -e).collect())
    }

    pub fn element_order(&self, a: &ExponentVector) -> Order {
        let mut acc: u64 = 1;
        for (e, o) in a.0.iter().zip(&self.orders) {
            if e.is_zero() {
                continue;
            }
            match o {
                Order::Infinite => return Order::Infinite,
                Order::Finite(n) => {
                    let e = e.to_u64().expect("canonical finite exponent fits the factor order");
                    acc = acc.lcm(&(n / e.gcd(n)));
                }
            }
        }
        Order::Finite(acc)
    }

    /// Every element exactly once, lexicographically (first factor most significant).
    pub fn enumerate(&self) -> Result<Vec<ExponentVector>, AbelianError> {
        let bounds: Vec<u64> = self
            .orders
            .iter()
            .map(|o| o.finite().ok_or(AbelianError::NotEnumerable))
            .collect::<Result<_, _>>()?;
        let total: u64 = bounds.iter().product();
        let mut out = Vec::with_capacity(total as usize);
        let mut digits = vec![0u64; bounds.len()];
        for _ in 0..total {
            out.push(ExponentVector(digits.iter().map(|&d| BigInt::from(d)).collect()));
            for i in (0..digits.len()).rev() {
                digits[i] += 1;
                if digits[i] < bounds[i] {
                    break;
                }
                digits[i] = 0;
            }
        }
        Ok(out)
    }

    /// Solutions `z` of `z^2 = v`: the number of them and one particular solution.
    pub fn square_roots(&self, v: &ExponentVector) -> SquareRoots {
        let mut count: u64 = 1;
        let mut root = Vec::with_capacity(self.rank());
        for (e, o) in v.0.iter().zip(&self.orders) {
            match o {
                Order::Infinite => {
                    if e.is_odd() {
                        return SquareRoots { count: 0, particular: None };
                    }
                    root.push(e / 2);
                }
                Order::Finite(n) => {
                    let n_big = BigInt::from(*n);
                    if n % 2 == 1 {
                        // 2 is invertible modulo an odd order
                        let half = u64::div_ceil(*n, 2);
                        root.push((e * BigInt::from(half)).mod_floor(&n_big));
                    } else {
                        if e.is_odd() {
                            return SquareRoots { count: 0, particular: None };
                        }
                        count *= 2;
                        root.push(e / 2);
                    }
                }
            }
        }
        SquareRoots {
            count,
            particular: Some(self.canonical(root)),
        }
    }

    /// Image of `v` in `Z / Z^2`: one bit per factor of even or infinite order.
    pub fn square_class(&self, v: &ExponentVector) -> Vec<bool> {
        v.0.iter()
            .zip(&self.orders)
            .map(|(e, o)| match o {
                Order::Finite(n) if n % 2 == 1 => false,
                _ => e.is_odd(),
            })
            .collect()
    }

    /// Multiplies without checking dimensions; callers guarantee both vectors
    /// belong to this group.
    pub(crate) fn add(&self, a: &ExponentVector, b: &ExponentVector) -> ExponentVector {
        debug_assert_eq!(a.len(), self.rank());
        debug_assert_eq!(b.len(), self.rank());
        self.canonical(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect())
    }

    pub(crate) fn sub(&self, a: &ExponentVector, b: &ExponentVector) -> ExponentVector {
        self.canonical(a.0.iter().zip(&b.0).map(|(x, y)| x - y).collect())
    }

    fn canonical(&self, mut v: Vec<BigInt>) -> ExponentVector {
        for (e, o) in v.iter_mut().zip(&self.orders) {
            if let Order::Finite(n) = o {
                if e.is_negative() || *e >= BigInt::from(*n) {
                    *e = e.mod_floor(&BigInt::from(*n));
                }
            }
        }
        ExponentVector(v)
    }

    fn check_len(&self, found: usize) -> Result<(), AbelianError> {
        if found == self.rank() {
            Ok(())
        } else {
            Err(AbelianError::Dimension {
                expected: self.rank(),
                found,
            })
        }
    }

    /// Renders `v` as a product of named generators, `1` for the identity.
    pub fn word(&self, v: &ExponentVector) -> String {
        let parts: Vec<String> = v
            .0
            .iter()
            .zip(&self.names)
            .filter(|(e, _)| !e.is_zero())
            .map(|(e, name)| if e.is_one() { name.clone() } else { format!("{name}^{e}") })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareRoots {
    pub count: u64,
    pub particular: Option<ExponentVector>,
}

/// Prime-power factorization of `n` (empty for `n = 1`).
pub fn prime_power_parts(mut n: u64) -> Vec<u64> {
    let mut parts = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut q = 1;
            while n.is_multiple_of(p) {
                n /= p;
                q *= p;
            }
            parts.push(q);
        }
        p += 1;
    }
    if n > 1 {
        parts.push(n);
    }
    parts
}

/// Exponent `m` with `2^m = n`, if `n` is a power of two.
pub fn log2_exact(n: u64) -> Option<u32> {
    n.is_power_of_two().then(|| n.trailing_zeros())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&e| BigInt::from(e)).collect()
    }

    fn g(orders: &[u64]) -> AbelianGroup {
        AbelianGroup::new(
            orders
                .iter()
                .map(|&o| if o == 0 { Order::Infinite } else { Order::Finite(o) })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(g(&[2]).reduce(&big(&[3])).unwrap().as_slice(), &big(&[1])[..]);
        assert!(g(&[4, 0]).reduce(&big(&[0, 0])).unwrap().is_identity());
        assert_eq!(g(&[4, 0]).reduce(&big(&[5, -2])).unwrap().as_slice(), &big(&[1, -2])[..]);
        assert_eq!(
            g(&[4, 0]).reduce(&big(&[1])),
            Err(AbelianError::Dimension { expected: 2, found: 1 })
        );
    }

    #[test]
    fn mul_examples() {
        let c2 = g(&[2]);
        let t = c2.generator(0);
        assert!(c2.mul(&t, &t).unwrap().is_identity());

        let grp = g(&[4, 0]);
        let a = grp.reduce_i64(&[1, 0]).unwrap();
        let b = grp.reduce_i64(&[0, 1]).unwrap();
        assert_eq!(grp.mul(&a, &b).unwrap(), grp.reduce_i64(&[1, 1]).unwrap());
        let a = grp.reduce_i64(&[3, 2]).unwrap();
        let b = grp.reduce_i64(&[3, -2]).unwrap();
        assert_eq!(grp.mul(&a, &b).unwrap(), grp.reduce_i64(&[2, 0]).unwrap());

        let other = g(&[2]);
        assert!(grp.mul(&a, &other.identity()).is_err());
    }

    #[test]
    fn pow_examples() {
        let c4 = g(&[4]);
        assert_eq!(c4.pow(&c4.generator(0), 2), c4.reduce_i64(&[2]).unwrap());

        // t1^(2^(m1-1)) is the unique involution of <t1>
        for m1 in 1..6u32 {
            let cyc = g(&[1 << m1]);
            let s = cyc.pow(&cyc.generator(0), 1i64 << (m1 - 1));
            assert_eq!(cyc.element_order(&s), Order::Finite(2));
        }

        let grp = g(&[2, 0]);
        let a = grp.reduce_i64(&[0, 1]).unwrap();
        assert_eq!(grp.pow(&a, -3), grp.reduce_i64(&[0, -3]).unwrap());
        assert!(grp.pow(&a, 0).is_identity());
    }

    #[test]
    fn order_examples() {
        assert_eq!(g(&[8]).element_order(&g(&[8]).identity()), Order::Finite(1));
        assert_eq!(g(&[8]).element_order(&g(&[8]).reduce_i64(&[2]).unwrap()), Order::Finite(4));
        assert_eq!(g(&[4, 0]).element_order(&g(&[4, 0]).reduce_i64(&[1, 1]).unwrap()), Order::Infinite);
        assert_eq!(g(&[4, 6]).element_order(&g(&[4, 6]).reduce_i64(&[1, 2]).unwrap()), Order::Finite(12));
    }

    #[test]
    fn enumerate_examples() {
        let c2 = g(&[2]);
        let all = c2.enumerate().unwrap();
        assert_eq!(all, vec![c2.identity(), c2.generator(0)]);
        assert_eq!(g(&[2, 2]).enumerate().unwrap().len(), 4);
        assert_eq!(g(&[4, 0]).enumerate(), Err(AbelianError::NotEnumerable));
        let e = g(&[2, 3]).enumerate().unwrap();
        assert_eq!(e[1].as_slice(), &big(&[0, 1])[..]);
        assert_eq!(e[3].as_slice(), &big(&[1, 0])[..]);
    }

    #[test]
    fn square_roots_count_solutions() {
        let grp = g(&[4, 3, 0]);
        // z^2 = (2, 1, 4): two choices mod 4, one mod 3, one over Z
        let v = grp.reduce_i64(&[2, 1, 4]).unwrap();
        let roots = grp.square_roots(&v);
        assert_eq!(roots.count, 2);
        let r = roots.particular.unwrap();
        assert_eq!(grp.mul(&r, &r).unwrap(), v);
        assert_eq!(grp.square_roots(&grp.reduce_i64(&[1, 0, 0]).unwrap()).count, 0);
        assert_eq!(grp.square_roots(&grp.reduce_i64(&[0, 0, 3]).unwrap()).count, 0);
    }

    #[test]
    fn torsion_invariants_split_primary_parts() {
        assert_eq!(g(&[12, 2, 1, 0]).torsion_invariants(), vec![2, 3, 4]);
        assert_eq!(prime_power_parts(1), Vec::<u64>::new());
        assert_eq!(log2_exact(8), Some(3));
        assert_eq!(log2_exact(6), None);
    }

    fn group_and_vectors() -> impl Strategy<Value = (AbelianGroup, Vec<i64>, Vec<i64>)> {
        prop::collection::vec(prop_oneof![Just(0u64), 1u64..17], 1..5).prop_flat_map(|orders| {
            let n = orders.len();
            (
                Just(g(&orders)),
                prop::collection::vec(-50i64..50, n),
                prop::collection::vec(-50i64..50, n),
            )
        })
    }

    proptest! {
        #[test]
        fn reduce_is_idempotent_and_inverse_cancels((grp, a, _b) in group_and_vectors()) {
            let v = grp.reduce_i64(&a).unwrap();
            prop_assert_eq!(grp.reduce(v.as_slice()).unwrap(), v.clone());
            prop_assert!(grp.mul(&v, &grp.pow(&v, -1)).unwrap().is_identity());
        }

        #[test]
        fn mul_commutes((grp, a, b) in group_and_vectors()) {
            let a = grp.reduce_i64(&a).unwrap();
            let b = grp.reduce_i64(&b).unwrap();
            prop_assert_eq!(grp.mul(&a, &b).unwrap(), grp.mul(&b, &a).unwrap());
        }

        #[test]
        fn order_divides_exponent((grp, a, _b) in group_and_vectors()) {
            prop_assume!(grp.is_finite());
            let exponent = grp.orders().iter().fold(1u64, |acc, o| acc.lcm(&o.finite().unwrap()));
            let v = grp.reduce_i64(&a).unwrap();
            let k = grp.element_order(&v).finite().unwrap();
            prop_assert_eq!(exponent % k, 0);
            prop_assert!(grp.pow(&v, k as i64).is_identity());
        }
    }

    #[test]
    fn enumerate_yields_distinct_canonical_vectors() {
        let grp = g(&[4, 2, 3]);
        let all = grp.enumerate().unwrap();
        let set: std::collections::HashSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), 24);
        assert!(all.iter().all(|v| grp.reduce(v.as_slice()).unwrap() == *v));
    }
}
