//! The loop `M(G, *, g0) = G ∪ Gu` built from a group presentation.
//!
//! Products follow
//! `g(hu) = (hg)u`, `(gu)h = (gh*)u`, `(gu)(hu) = g0 h* g`,
//! where `h* = h` for central `h` and `h* = sh` otherwise.

use std::fmt;

use num_bigint::BigInt;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::abelian::{AbelianError, AbelianGroup, ExponentVector, Order};
use crate::cayley_oracle;
use crate::group_presentation::{GroupElement, GroupPresentation, PresentationError, COSETS};
use crate::sampling::SampleConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoopError {
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error(transparent)]
    Abelian(#[from] AbelianError),
    #[error("element does not belong to this loop")]
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LoopElement {
    pub g: GroupElement,
    pub e: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaLoop {
    group: GroupPresentation,
    g0: ExponentVector,
}

impl RaLoop {
    pub fn new(group: GroupPresentation, g0: &[BigInt]) -> Result<Self, LoopError> {
        let g0 = group.center().reduce(g0)?;
        Ok(RaLoop { group, g0 })
    }

    pub fn from_vector(group: GroupPresentation, g0: ExponentVector) -> Result<Self, LoopError> {
        Self::new(group, g0.as_slice())
    }

    pub fn group(&self) -> &GroupPresentation {
        &self.group
    }

    pub fn center(&self) -> &AbelianGroup {
        self.group.center()
    }

    pub fn g0(&self) -> &ExponentVector {
        &self.g0
    }

    pub fn s(&self) -> &ExponentVector {
        self.group.s()
    }

    pub fn order(&self) -> Order {
        match self.center().order() {
            Order::Finite(n) => Order::Finite(8 * n),
            Order::Infinite => Order::Infinite,
        }
    }

    pub fn identity(&self) -> LoopElement {
        self.embed(self.group.identity())
    }

    pub fn embed(&self, g: GroupElement) -> LoopElement {
        LoopElement { g, e: false }
    }

    pub fn central(&self, z: ExponentVector) -> LoopElement {
        self.embed(self.group.central(z))
    }

    pub fn x(&self) -> LoopElement {
        self.embed(self.group.x())
    }

    pub fn y(&self) -> LoopElement {
        self.embed(self.group.y())
    }

    pub fn u(&self) -> LoopElement {
        LoopElement {
            g: self.group.identity(),
            e: true,
        }
    }

    pub fn element(&self, a: bool, b: bool, z: ExponentVector, e: bool) -> LoopElement {
        LoopElement {
            g: self.group.element(a, b, z),
            e,
        }
    }

    pub fn contains(&self, p: &LoopElement) -> bool {
        self.group.contains(&p.g)
    }

    pub fn star(&self, g: &GroupElement) -> GroupElement {
        if g.is_central() {
            g.clone()
        } else {
            GroupElement {
                a: g.a,
                b: g.b,
                z: self.center().add(&g.z, self.s()),
            }
        }
    }

    pub fn mul(&self, p: &LoopElement, q: &LoopElement) -> LoopElement {
        let grp = &self.group;
        match (p.e, q.e) {
            (false, false) => LoopElement {
                g: grp.mul(&p.g, &q.g),
                e: false,
            },
            (false, true) => LoopElement {
                g: grp.mul(&q.g, &p.g),
                e: true,
            },
            (true, false) => LoopElement {
                g: grp.mul(&p.g, &self.star(&q.g)),
                e: true,
            },
            (true, true) => {
                let h = grp.mul(&self.star(&q.g), &p.g);
                let mut g = h;
                g.z = self.center().add(&g.z, &self.g0);
                LoopElement { g, e: false }
            }
        }
    }

    pub fn try_mul(&self, p: &LoopElement, q: &LoopElement) -> Result<LoopElement, LoopError> {
        if self.contains(p) && self.contains(q) {
            Ok(self.mul(p, q))
        } else {
            Err(LoopError::Mismatch)
        }
    }

    /// Two-sided inverse; `(gu)^-1 = (g0^-1 (g*)^-1) u`.
    pub fn inv(&self, p: &LoopElement) -> LoopElement {
        if !p.e {
            return self.embed(self.group.inv(&p.g));
        }
        let mut g = self.group.inv(&self.star(&p.g));
        g.z = self.center().sub(&g.z, &self.g0);
        LoopElement { g, e: true }
    }

    /// The central `α` with `(pq)r = (p(qr))α`; always `1` or `s`.
    pub fn associator(&self, p: &LoopElement, q: &LoopElement, r: &LoopElement) -> ExponentVector {
        let left = self.mul(&self.mul(p, q), r);
        let right = self.mul(p, &self.mul(q, r));
        self.quotient(&left, &right)
    }

    /// The central `β` with `qp = (pq)β`; always `1` or `s`.
    pub fn commutator(&self, p: &LoopElement, q: &LoopElement) -> ExponentVector {
        let qp = self.mul(q, p);
        let pq = self.mul(p, q);
        self.quotient(&qp, &pq)
    }

    // `left = right * z` with both in the same coset of the center
    fn quotient(&self, left: &LoopElement, right: &LoopElement) -> ExponentVector {
        debug_assert_eq!((left.g.a, left.g.b, left.e), (right.g.a, right.g.b, right.e));
        self.center().sub(&left.g.z, &right.g.z)
    }

    pub fn is_central(&self, p: &LoopElement) -> bool {
        !p.e && p.g.is_central()
    }

    /// `p^2`, central in every case.
    pub fn square(&self, p: &LoopElement) -> ExponentVector {
        let sq = self.mul(p, p);
        debug_assert!(self.is_central(&sq));
        sq.g.z
    }

    pub fn element_order(&self, p: &LoopElement) -> Order {
        if self.is_central(p) {
            return self.center().element_order(&p.g.z);
        }
        match self.center().element_order(&self.square(p)) {
            Order::Finite(k) => Order::Finite(2 * k),
            Order::Infinite => Order::Infinite,
        }
    }

    /// All elements: the group part first (identity at index 0), then `Gu`.
    pub fn enumerate(&self) -> Result<Vec<LoopElement>, LoopError> {
        let group = self.group.enumerate()?;
        let mut out: Vec<LoopElement> = group.iter().cloned().map(|g| LoopElement { g, e: false }).collect();
        out.extend(group.into_iter().map(|g| LoopElement { g, e: true }));
        Ok(out)
    }

    pub fn word(&self, p: &LoopElement) -> String {
        let g = self.group.word(&p.g);
        match (p.e, g.as_str()) {
            (false, _) => g,
            (true, "1") => "u".to_string(),
            (true, _) => format!("{g}*u"),
        }
    }

    pub(crate) fn random_element<R: Rng>(&self, bound: i64, rng: &mut R) -> LoopElement {
        LoopElement {
            g: self.group.random_element(bound, rng),
            e: rng.gen(),
        }
    }

    /// Coset representatives `x^a y^b u^e` of `L / Z(L)`.
    pub fn coset_representatives(&self) -> Vec<LoopElement> {
        let id = self.center().identity();
        [false, true]
            .into_iter()
            .flat_map(|e| COSETS.iter().map(move |&(a, b)| (a, b, e)))
            .map(|(a, b, e)| self.element(a, b, id.clone(), e))
            .collect()
    }

    /// Checks the Moufang identity `(pq)(rp) = (p(qr))p` and both
    /// alternative laws. Exhaustive when the center is finite, sampled
    /// otherwise.
    pub fn moufang_check(&self, cfg: &SampleConfig) -> MoufangReport {
        if self.center().is_finite() {
            if let Ok((table, elements)) = cayley_oracle::materialize(self) {
                let mut report = table.moufang_check();
                report.failure = report.failure.map(|(law, idx, _)| {
                    let words = idx.map(|i| self.word(&elements[i]));
                    (law, idx, words)
                });
                return report;
            }
        }
        let failure = (0..cfg.trials).into_par_iter().find_map_first(|trial| {
            let mut rng = SampleConfig {
                seed: cfg.seed.wrapping_add(trial as u64),
                ..*cfg
            }
            .rng();
            let [p, q, r] = [(); 3].map(|_| self.random_element(cfg.bound, &mut rng));
            moufang_violation(|a, b| self.mul(a, b), &p, &q, &r)
                .map(|law| (law, [0; 3], [&p, &q, &r].map(|w| self.word(w))))
        });
        MoufangReport {
            triples_checked: cfg.trials as u64,
            exhaustive: false,
            failure,
        }
    }

    /// Non-central `w` with `w^2 = 1`, solved coset by coset.
    ///
    /// Writing `w = v z` with `v = x^a y^b u^e` and `z` central gives
    /// `w^2 = v^2 z^2`, so each nontrivial coset contributes the solutions
    /// of `z^2 = v^-2`. The count is exact even when the center is infinite.
    pub fn solve_involutions(&self) -> InvolutionSolution {
        let mut count = 0u64;
        let mut witnesses = Vec::new();
        let mut per_coset = Vec::new();
        for v in self.coset_representatives().into_iter().skip(1) {
            let target = self.center().inv(&self.square(&v));
            let roots = self.center().square_roots(&target);
            per_coset.push((self.word(&v), roots.count));
            count += roots.count;
            if let Some(z) = roots.particular {
                let mut w = v;
                w.g.z = z;
                witnesses.push(w);
            }
        }
        InvolutionSolution {
            count,
            witnesses,
            per_coset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvolutionSolution {
    pub count: u64,
    /// One solution per coset that has any.
    pub witnesses: Vec<LoopElement>,
    /// `(coset representative, number of solutions)` for the seven nontrivial cosets.
    pub per_coset: Vec<(String, u64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoufangLaw {
    Moufang,
    LeftAlternative,
    RightAlternative,
}

impl fmt::Display for MoufangLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MoufangLaw::Moufang => "(pq)(rp)=(p(qr))p",
            MoufangLaw::LeftAlternative => "p(pq)=(pp)q",
            MoufangLaw::RightAlternative => "(qp)p=q(pp)",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoufangReport {
    pub triples_checked: u64,
    pub exhaustive: bool,
    /// Violated law, offending indices (table checks only) and element words.
    pub failure: Option<(MoufangLaw, [usize; 3], [String; 3])>,
}

impl MoufangReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

pub(crate) fn moufang_violation<T: PartialEq>(mul: impl Fn(&T, &T) -> T, p: &T, q: &T, r: &T) -> Option<MoufangLaw> {
    let pq = mul(p, q);
    let rp = mul(r, p);
    let qr = mul(q, r);
    if mul(&pq, &rp) != mul(&mul(p, &qr), p) {
        return Some(MoufangLaw::Moufang);
    }
    let pp = mul(p, p);
    if mul(p, &pq) != mul(&pp, q) {
        return Some(MoufangLaw::LeftAlternative);
    }
    let qp = mul(q, p);
    if mul(&qp, p) != mul(q, &pp) {
        return Some(MoufangLaw::RightAlternative);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_presentation::{build_d_type, DTypeParams};
    use std::collections::{HashMap, HashSet};

    fn ra(type_id: u8, m1: u32, g0_gen: Option<usize>) -> RaLoop {
        let g = build_d_type(type_id, DTypeParams { m1, m2: 1, m3: 1 }).unwrap();
        let g0 = match g0_gen {
            Some(i) => g.center().generator(i),
            None => g.center().identity(),
        };
        RaLoop::from_vector(g, g0).unwrap()
    }

    fn octonion() -> RaLoop {
        ra(2, 1, Some(0))
    }

    /// Table built straight from the three product rules over an explicit
    /// list of group elements, independent of `RaLoop::mul`.
    fn rule_table(l: &RaLoop) -> (Vec<LoopElement>, Vec<Vec<usize>>) {
        let grp = l.group();
        let gs = grp.enumerate().unwrap();
        let s = grp.central(l.s().clone());
        let g0 = grp.central(l.g0().clone());
        let star = |h: &GroupElement| if h.is_central() { h.clone() } else { grp.mul(&s, h) };
        let mut elems = Vec::new();
        for e in [false, true] {
            for g in &gs {
                elems.push(LoopElement { g: g.clone(), e });
            }
        }
        let index: HashMap<LoopElement, usize> = elems.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let table = elems
            .iter()
            .map(|p| {
                elems
                    .iter()
                    .map(|q| {
                        let r = match (p.e, q.e) {
                            (false, false) => LoopElement { g: grp.mul(&p.g, &q.g), e: false },
                            (false, true) => LoopElement { g: grp.mul(&q.g, &p.g), e: true },
                            (true, false) => LoopElement { g: grp.mul(&p.g, &star(&q.g)), e: true },
                            (true, true) => LoopElement {
                                g: grp.mul(&grp.mul(&g0, &star(&q.g)), &p.g),
                                e: false,
                            },
                        };
                        index[&r]
                    })
                    .collect()
            })
            .collect();
        (elems, table)
    }

    #[test]
    fn star_examples() {
        let l = ra(1, 1, None);
        let t1 = l.group().central(l.center().generator(0));
        assert_eq!(l.star(&t1), t1);
        let x = l.group().x();
        assert_eq!(l.star(&x), l.group().mul(&l.group().central(l.s().clone()), &x));
        let xy = l.group().mul(&x, &l.group().y());
        assert_eq!(l.star(&xy), l.group().mul(&l.group().central(l.s().clone()), &xy));
    }

    #[test]
    fn star_properties() {
        for l in [ra(1, 2, None), ra(4, 1, Some(0)), ra(7, 1, Some(1))] {
            let g0 = l.group().central(l.g0().clone());
            assert_eq!(l.star(&g0), g0);
            for g in l.group().enumerate().unwrap() {
                assert_eq!(l.star(&l.star(&g)), g);
                assert!(l.group().mul(&g, &l.star(&g)).is_central());
            }
        }
    }

    #[test]
    fn mul_examples() {
        let l = ra(1, 1, None);
        assert_eq!(l.mul(&l.u(), &l.u()), l.central(l.g0().clone()));
        let ux = l.mul(&l.u(), &l.x());
        assert_eq!(ux, l.element(true, false, l.s().clone(), true));

        let o = octonion();
        let xu = o.mul(&o.x(), &o.u());
        let yu = o.mul(&o.y(), &o.u());
        // g0 (sy) x = t1 s yx = t1 s xys = t1 xy, and t1 = s when m1 = 1
        assert_eq!(o.mul(&xu, &yu), o.element(true, true, o.s().clone(), false));
    }

    #[test]
    fn mul_agrees_with_rule_table_and_table_is_latin() {
        for l in [ra(1, 1, None), octonion(), ra(3, 1, Some(1)), ra(4, 2, None)] {
            let (elems, table) = rule_table(&l);
            let n = elems.len();
            for (i, p) in elems.iter().enumerate() {
                for (j, q) in elems.iter().enumerate() {
                    assert_eq!(l.mul(p, q), elems[table[i][j]]);
                }
                let row: HashSet<usize> = table[i].iter().copied().collect();
                let col: HashSet<usize> = (0..n).map(|r| table[r][i]).collect();
                assert_eq!(row.len(), n);
                assert_eq!(col.len(), n);
            }
        }
    }

    #[test]
    fn try_mul_rejects_foreign_elements() {
        let l = ra(1, 1, None);
        let other = ra(3, 1, None);
        assert_eq!(l.try_mul(&l.x(), &other.u()), Err(LoopError::Mismatch));
    }

    #[test]
    fn inverse_examples() {
        let l = ra(4, 1, Some(0));
        assert_eq!(l.inv(&l.identity()), l.identity());
        let expected = l.element(false, false, l.center().inv(l.g0()), true);
        assert_eq!(l.inv(&l.u()), expected);
        assert_eq!(l.mul(&l.u(), &expected), l.identity());
        assert_eq!(l.mul(&expected, &l.u()), l.identity());
        assert_eq!(l.inv(&l.x()), l.embed(l.group().inv(&l.group().x())));
    }

    #[test]
    fn inverse_is_two_sided_everywhere() {
        for l in [ra(1, 1, None), octonion(), ra(7, 2, Some(1)), ra(4, 2, Some(0))] {
            for p in l.enumerate().unwrap() {
                let q = l.inv(&p);
                assert_eq!(l.mul(&p, &q), l.identity(), "{}", l.word(&p));
                assert_eq!(l.mul(&q, &p), l.identity(), "{}", l.word(&p));
            }
        }
    }

    #[test]
    fn associator_and_commutator_examples() {
        let l = ra(1, 1, None);
        let one = l.center().identity();
        let (x, y, u) = (l.x(), l.y(), l.u());
        assert_eq!(l.associator(&l.identity(), &y, &u), one);
        assert_eq!(&l.associator(&x, &y, &u), l.s());
        let x2 = l.central(l.group().square(&l.group().x()));
        assert_eq!(l.associator(&x, &x2, &u), one);

        assert_eq!(&l.commutator(&x, &y), l.s());
        assert_eq!(l.commutator(&u, &u), one);
        assert_eq!(&l.commutator(&x, &u), l.s());
    }

    #[test]
    fn associators_and_commutators_span_exactly_one_and_s() {
        for l in [ra(1, 1, None), octonion(), ra(3, 2, Some(1))] {
            let all = l.enumerate().unwrap();
            let mut seen = HashSet::new();
            for p in &all {
                for q in &all {
                    seen.insert(l.commutator(p, q));
                    for r in &all {
                        seen.insert(l.associator(p, q, r));
                    }
                }
            }
            let expected: HashSet<ExponentVector> = [l.center().identity(), l.s().clone()].into();
            assert_eq!(seen, expected);
        }
    }

    #[test]
    fn centrality_examples() {
        let l = octonion();
        assert!(l.is_central(&l.central(l.g0().clone())));
        assert!(!l.is_central(&l.u()));
        assert!(!l.is_central(&l.x()));
    }

    #[test]
    fn order_examples() {
        assert_eq!(ra(1, 1, None).element_order(&ra(1, 1, None).u()), Order::Finite(2));
        let o = octonion();
        assert_eq!(o.element_order(&o.u()), Order::Finite(4));
        let l5 = ra(5, 1, None);
        assert_eq!(l5.element_order(&l5.y()), Order::Infinite);
    }

    #[test]
    fn order_matches_powers() {
        let l = ra(7, 2, Some(2));
        for p in l.enumerate().unwrap() {
            let k = l.element_order(&p).finite().unwrap();
            let mut acc = l.identity();
            for i in 1..=k {
                acc = l.mul(&acc, &p);
                assert_eq!(acc == l.identity(), i == k);
            }
        }
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(ra(1, 1, None).enumerate().unwrap().len(), 16);
        let all = octonion().enumerate().unwrap();
        assert_eq!(all.len(), 16);
        assert_eq!(all.iter().collect::<HashSet<_>>().len(), 16);
        assert_eq!(all[0], octonion().identity());
        assert_eq!(ra(5, 1, None).enumerate(), Err(LoopError::Abelian(AbelianError::NotEnumerable)));
    }

    #[test]
    fn squares_are_central_and_quotient_is_elementary() {
        for l in [ra(1, 1, None), octonion(), ra(8, 1, Some(1)), ra(9, 2, Some(2))] {
            let reps = l.coset_representatives();
            assert_eq!(reps.len(), 8);
            for r in &reps {
                assert!(l.is_central(&l.mul(r, r)));
            }
            for w in [l.x(), l.u(), l.mul(&l.x(), &l.u())] {
                assert!(!l.is_central(&w));
            }
        }
    }

    #[test]
    fn moufang_examples() {
        let r = ra(1, 1, None).moufang_check(&SampleConfig::default());
        assert!(r.passed());
        assert!(r.exhaustive);
        assert_eq!(r.triples_checked, 4096);
        assert!(octonion().moufang_check(&SampleConfig::default()).passed());
        let cfg = SampleConfig { trials: 2_000, ..SampleConfig::default() };
        let r = ra(9, 1, Some(1)).moufang_check(&cfg);
        assert!(r.passed());
        assert!(!r.exhaustive);
    }

    #[test]
    fn moufang_violation_detects_a_bad_operation() {
        // subtraction mod 5 is not a loop and breaks the identity
        let bad = |a: &i64, b: &i64| (a - b).rem_euclid(5);
        assert!(moufang_violation(bad, &1, &2, &3).is_some());
        let good = |a: &i64, b: &i64| (a + b).rem_euclid(5);
        assert!(moufang_violation(good, &1, &2, &3).is_none());
    }

    fn brute_involutions(l: &RaLoop) -> u64 {
        l.enumerate()
            .unwrap()
            .iter()
            .filter(|p| !l.is_central(p) && l.square(p).is_identity())
            .count() as u64
    }

    #[test]
    fn involution_examples() {
        let l1 = ra(1, 1, None);
        assert_eq!(l1.solve_involutions().count, 8);
        assert_eq!(brute_involutions(&l1), 8);
        let o = octonion();
        assert_eq!(o.solve_involutions().count, 0);
        assert_eq!(brute_involutions(&o), 0);
        assert!(o.solve_involutions().witnesses.is_empty());
    }

    #[test]
    fn involution_solver_matches_brute_force() {
        for type_id in [1, 2, 3, 4, 7] {
            for m1 in 1..=2 {
                let g = build_d_type(type_id, DTypeParams { m1, m2: 1, m3: 1 }).unwrap();
                for i in 0..=g.center().rank() {
                    let g0 = if i == 0 { g.center().identity() } else { g.center().generator(i - 1) };
                    let l = RaLoop::from_vector(g.clone(), g0).unwrap();
                    let sol = l.solve_involutions();
                    assert_eq!(sol.count, brute_involutions(&l), "type {type_id} m1 {m1} g0 {i}");
                    for w in &sol.witnesses {
                        assert!(!l.is_central(w));
                        assert!(l.square(w).is_identity());
                    }
                }
            }
        }
    }

    #[test]
    fn involutions_on_infinite_centers() {
        // g0 = 1 makes u an involution
        let l = ra(5, 1, None);
        let sol = l.solve_involutions();
        assert!(sol.count >= 1);
        assert!(sol.witnesses.contains(&l.u()));
        // x^2 = t1, y^2 = u1, g0 = t1: no coset squares to an even vector
        let l6 = ra(6, 1, Some(0));
        assert_eq!(l6.solve_involutions().count, 0);
    }

    #[test]
    fn words() {
        let l = ra(3, 1, None);
        assert_eq!(l.word(&l.identity()), "1");
        assert_eq!(l.word(&l.u()), "u");
        let p = l.element(true, true, l.center().generator(1), true);
        assert_eq!(l.word(&p), "x*y*t2*u");
    }
}
