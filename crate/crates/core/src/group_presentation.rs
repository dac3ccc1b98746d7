//! Groups `G = <x, y, Z(G)>` with `G/Z(G) = C2 x C2`, in normal form
//! `x^a y^b z`.
//!
//! The commutator `s = [x, y]` is the involution `t1^(2^(m1-1))` of the
//! cyclic factor `<t1>`, so `yx = xys` and the product of two normal forms is
//! computed in closed form.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use rand::Rng;
use thiserror::Error;

use crate::abelian::{AbelianError, AbelianGroup, ExponentVector, Order};
use crate::sampling::{random_central, window, SampleConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PresentationError {
    #[error(transparent)]
    Abelian(#[from] AbelianError),
    #[error("t1 index {index} is out of range for a center of rank {rank}")]
    T1Index { index: usize, rank: usize },
    #[error("m1 must be at least 1 (m1 = 0 makes the commutator trivial)")]
    DegenerateCommutator,
    #[error("t1 must have order 2^{m1}, found {found}")]
    T1Order { m1: u32, found: Order },
    #[error("unknown group type {0}; expected 1..=9")]
    UnknownType(u8),
    #[error("parameter {name} = {value} is out of range")]
    Parameter { name: &'static str, value: u32 },
    #[error("element does not belong to this presentation")]
    Mismatch,
}

/// Normal form `x^a y^b z` with `a, b` bits and `z` central.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    pub a: bool,
    pub b: bool,
    pub z: ExponentVector,
}

impl GroupElement {
    pub fn is_central(&self) -> bool {
        !self.a && !self.b
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPresentation {
    center: AbelianGroup,
    t1_index: usize,
    m1: u32,
    x_sq: ExponentVector,
    y_sq: ExponentVector,
    s: ExponentVector,
}

impl GroupPresentation {
    pub fn new(
        center: AbelianGroup,
        t1_index: usize,
        m1: u32,
        x_sq: &[BigInt],
        y_sq: &[BigInt],
    ) -> Result<Self, PresentationError> {
        if t1_index >= center.rank() {
            return Err(PresentationError::T1Index {
                index: t1_index,
                rank: center.rank(),
            });
        }
        if m1 == 0 {
            return Err(PresentationError::DegenerateCommutator);
        }
        let found = center.factor_order(t1_index);
        if m1 > 62 || found != Order::Finite(1 << m1) {
            return Err(PresentationError::T1Order { m1, found });
        }
        let x_sq = center.reduce(x_sq)?;
        let y_sq = center.reduce(y_sq)?;
        Ok(Self::assemble(center, t1_index, m1, x_sq, y_sq))
    }

    /// Skips every invariant check except dimensions; used to exercise
    /// [`GroupPresentation::verify`] on tampered data.
    pub fn new_unchecked(
        center: AbelianGroup,
        t1_index: usize,
        m1: u32,
        x_sq: &[BigInt],
        y_sq: &[BigInt],
    ) -> Result<Self, PresentationError> {
        if t1_index >= center.rank() {
            return Err(PresentationError::T1Index {
                index: t1_index,
                rank: center.rank(),
            });
        }
        let x_sq = center.reduce(x_sq)?;
        let y_sq = center.reduce(y_sq)?;
        Ok(Self::assemble(center, t1_index, m1, x_sq, y_sq))
    }

    fn assemble(center: AbelianGroup, t1_index: usize, m1: u32, x_sq: ExponentVector, y_sq: ExponentVector) -> Self {
        let s = if m1 == 0 {
            center.identity()
        } else {
            center.pow(&center.generator(t1_index), 1i64 << (m1 - 1))
        };
        GroupPresentation {
            center,
            t1_index,
            m1,
            x_sq,
            y_sq,
            s,
        }
    }

    pub fn center(&self) -> &AbelianGroup {
        &self.center
    }

    pub fn t1_index(&self) -> usize {
        self.t1_index
    }

    pub fn m1(&self) -> u32 {
        self.m1
    }

    pub fn x_sq(&self) -> &ExponentVector {
        &self.x_sq
    }

    pub fn y_sq(&self) -> &ExponentVector {
        &self.y_sq
    }

    /// The commutator `[x, y]`.
    pub fn s(&self) -> &ExponentVector {
        &self.s
    }

    pub fn order(&self) -> Order {
        match self.center.order() {
            Order::Finite(n) => Order::Finite(4 * n),
            Order::Infinite => Order::Infinite,
        }
    }

    /// Appends a new cyclic direct factor that does not enter `x^2` or `y^2`.
    pub fn with_extra_factor(&self, order: Order, name: &str) -> Result<Self, PresentationError> {
        let mut orders = self.center.orders().to_vec();
        orders.push(order);
        let mut names = self.center.names().to_vec();
        names.push(name.to_string());
        let center = AbelianGroup::with_names(orders, names)?;
        let extend = |v: &ExponentVector| {
            let mut raw = v.as_slice().to_vec();
            raw.push(BigInt::from(0));
            raw
        };
        Self::new(center, self.t1_index, self.m1, &extend(&self.x_sq), &extend(&self.y_sq))
    }

    pub fn identity(&self) -> GroupElement {
        self.central(self.center.identity())
    }

    pub fn x(&self) -> GroupElement {
        GroupElement {
            a: true,
            b: false,
            z: self.center.identity(),
        }
    }

    pub fn y(&self) -> GroupElement {
        GroupElement {
            a: false,
            b: true,
            z: self.center.identity(),
        }
    }

    pub fn central(&self, z: ExponentVector) -> GroupElement {
        GroupElement { a: false, b: false, z }
    }

    pub fn element(&self, a: bool, b: bool, z: ExponentVector) -> GroupElement {
        GroupElement { a, b, z }
    }

    pub fn contains(&self, p: &GroupElement) -> bool {
        p.z.len() == self.center.rank() && self.center.reduce(p.z.as_slice()).ok().as_ref() == Some(&p.z)
    }

    /// `x^a y^b z * x^c y^d w = x^(a^c) y^(b^d) s^(bc) (x^2)^(ac) (y^2)^(bd) zw`.
    pub fn mul(&self, p: &GroupElement, q: &GroupElement) -> GroupElement {
        let mut z = self.center.add(&p.z, &q.z);
        if p.b && q.a {
            z = self.center.add(&z, &self.s);
        }
        if p.a && q.a {
            z = self.center.add(&z, &self.x_sq);
        }
        if p.b && q.b {
            z = self.center.add(&z, &self.y_sq);
        }
        GroupElement {
            a: p.a ^ q.a,
            b: p.b ^ q.b,
            z,
        }
    }

    pub fn try_mul(&self, p: &GroupElement, q: &GroupElement) -> Result<GroupElement, PresentationError> {
        if self.contains(p) && self.contains(q) {
            Ok(self.mul(p, q))
        } else {
            Err(PresentationError::Mismatch)
        }
    }

    /// `(x^a y^b z)^-1 = x^a y^b z^-1 (x^2)^-a (y^2)^-b s^(ab)`.
    pub fn inv(&self, p: &GroupElement) -> GroupElement {
        let mut z = self.center.inv(&p.z);
        if p.a {
            z = self.center.sub(&z, &self.x_sq);
        }
        if p.b {
            z = self.center.sub(&z, &self.y_sq);
        }
        if p.a && p.b {
            z = self.center.add(&z, &self.s);
        }
        GroupElement { a: p.a, b: p.b, z }
    }

    /// `[p, q]`, always `1` or `s`.
    pub fn commutator(&self, p: &GroupElement, q: &GroupElement) -> ExponentVector {
        if (p.a && q.b) ^ (p.b && q.a) {
            self.s.clone()
        } else {
            self.center.identity()
        }
    }

    pub fn is_central(&self, p: &GroupElement) -> bool {
        p.is_central()
    }

    /// `p^2 = (x^2)^a (y^2)^b s^(ab) z^2`, always central.
    pub fn square(&self, p: &GroupElement) -> ExponentVector {
        self.mul(p, p).z
    }

    pub fn element_order(&self, p: &GroupElement) -> Order {
        if p.is_central() {
            return self.center.element_order(&p.z);
        }
        match self.center.element_order(&self.square(p)) {
            Order::Finite(k) => Order::Finite(2 * k),
            Order::Infinite => Order::Infinite,
        }
    }

    /// All elements, cosets `1, x, y, xy` in turn.
    pub fn enumerate(&self) -> Result<Vec<GroupElement>, AbelianError> {
        let central = self.center.enumerate()?;
        let mut out = Vec::with_capacity(4 * central.len());
        for (a, b) in COSETS {
            out.extend(central.iter().map(|z| GroupElement { a, b, z: z.clone() }));
        }
        Ok(out)
    }

    pub fn word(&self, p: &GroupElement) -> String {
        let mut parts = Vec::new();
        if p.a {
            parts.push("x".to_string());
        }
        if p.b {
            parts.push("y".to_string());
        }
        if !p.z.is_identity() {
            parts.push(self.center.word(&p.z));
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    /// Checks the presentation really defines a group with center `Z` and
    /// `G/Z = C2 x C2`. Exhaustive when the center is finite; otherwise the
    /// center check runs over the exponent window and associativity over
    /// random triples.
    pub fn verify(&self, cfg: &SampleConfig) -> PresentationReport {
        let mut report = PresentationReport::default();

        if self.m1 == 0 || self.s.is_identity() {
            report.violations.push(PresentationViolation::TrivialCommutator);
        }
        if self.t1_index == 0 {
            let beyond = |v: &ExponentVector, keep: usize| v.support().into_iter().any(|i| i >= keep);
            if beyond(&self.x_sq, 2) {
                report.warnings.push("x^2 lies outside <t1> x <z2>".to_string());
            }
            if beyond(&self.y_sq, 3) {
                report.warnings.push("y^2 lies outside <t1> x <z2> x <z3>".to_string());
            }
        }

        let elements: Vec<GroupElement> = match self.enumerate() {
            Ok(all) => all,
            Err(_) => {
                let central = window(&self.center, cfg.bound);
                COSETS
                    .iter()
                    .flat_map(|&(a, b)| central.iter().map(move |z| GroupElement { a, b, z: z.clone() }))
                    .collect()
            }
        };
        report.elements_checked = elements.len();

        let (x, y) = (self.x(), self.y());
        let mut central_cosets = HashSet::new();
        for p in &elements {
            let commutes = self.mul(&x, p) == self.mul(p, &x) && self.mul(&y, p) == self.mul(p, &y);
            if commutes {
                central_cosets.insert((p.a, p.b));
            }
            if commutes != p.is_central() {
                let witness = self.word(p);
                report.violations.push(if p.is_central() {
                    PresentationViolation::CenterNotCentral { witness }
                } else {
                    PresentationViolation::HiddenCentral { witness }
                });
                break;
            }
        }
        let quotient = 4 / central_cosets.len().max(1);
        if quotient != 4 {
            report.violations.push(PresentationViolation::QuotientOrder { found: quotient });
        }

        let assoc_fail = |p: &GroupElement, q: &GroupElement, r: &GroupElement| {
            (self.mul(&self.mul(p, q), r) != self.mul(p, &self.mul(q, r)))
                .then(|| PresentationViolation::NonAssociative {
                    witness: [self.word(p), self.word(q), self.word(r)],
                })
        };
        if self.center.is_finite() && elements.len() <= 64 {
            'outer: for p in &elements {
                for q in &elements {
                    for r in &elements {
                        report.triples_checked += 1;
                        if let Some(v) = assoc_fail(p, q, r) {
                            report.violations.push(v);
                            break 'outer;
                        }
                    }
                }
            }
        } else {
            let mut rng = cfg.rng();
            for _ in 0..cfg.trials {
                let [p, q, r] = [(); 3].map(|_| self.random_element(cfg.bound, &mut rng));
                report.triples_checked += 1;
                if let Some(v) = assoc_fail(&p, &q, &r) {
                    report.violations.push(v);
                    break;
                }
            }
        }
        report
    }

    pub(crate) fn random_element<R: Rng>(&self, bound: i64, rng: &mut R) -> GroupElement {
        GroupElement {
            a: rng.gen(),
            b: rng.gen(),
            z: random_central(&self.center, bound, rng),
        }
    }
}

pub(crate) const COSETS: [(bool, bool); 4] = [(false, false), (true, false), (false, true), (true, true)];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PresentationViolation {
    TrivialCommutator,
    NonAssociative { witness: [String; 3] },
    HiddenCentral { witness: String },
    CenterNotCentral { witness: String },
    QuotientOrder { found: usize },
}

impl fmt::Display for PresentationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresentationViolation::TrivialCommutator => f.write_str("commutator s is trivial"),
            PresentationViolation::NonAssociative { witness: [p, q, r] } => {
                write!(f, "({p}*{q})*{r} != {p}*({q}*{r})")
            }
            PresentationViolation::HiddenCentral { witness } => {
                write!(f, "non-central normal form {witness} commutes with x and y")
            }
            PresentationViolation::CenterNotCentral { witness } => {
                write!(f, "declared central element {witness} fails to commute")
            }
            PresentationViolation::QuotientOrder { found } => write!(f, "|G/Z| = {found}, expected 4"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PresentationReport {
    pub elements_checked: usize,
    pub triples_checked: usize,
    pub violations: Vec<PresentationViolation>,
    pub warnings: Vec<String>,
}

impl PresentationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exponents `m1, m2, m3` of the finite center factors `t1, t2, t3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DTypeParams {
    pub m1: u32,
    pub m2: u32,
    pub m3: u32,
}

impl Default for DTypeParams {
    fn default() -> Self {
        DTypeParams { m1: 1, m2: 1, m3: 1 }
    }
}

/// Which of `m2`, `m3` a group type actually uses.
pub fn d_type_uses(type_id: u8) -> (bool, bool) {
    match type_id {
        3 | 4 | 8 => (true, false),
        7 => (true, true),
        _ => (false, false),
    }
}

/// One of the nine indecomposable groups with `G/Z(G) = C2 x C2`.
pub fn build_d_type(type_id: u8, params: DTypeParams) -> Result<GroupPresentation, PresentationError> {
    let finite = |name: &'static str, m: u32| -> Result<Order, PresentationError> {
        if m == 0 || m > 62 {
            Err(PresentationError::Parameter { name, value: m })
        } else {
            Ok(Order::Finite(1 << m))
        }
    };
    let t1 = finite("m1", params.m1)?;
    let inf = Order::Infinite;
    // (factor orders, names, x^2 generator, y^2 generator); None means 1
    let (orders, names, x_gen, y_gen): (Vec<Order>, Vec<&str>, Option<usize>, Option<usize>) = match type_id {
        1 => (vec![t1], vec!["t1"], None, None),
        2 => (vec![t1], vec!["t1"], Some(0), Some(0)),
        3 => (vec![t1, finite("m2", params.m2)?], vec!["t1", "t2"], None, Some(1)),
        4 => (vec![t1, finite("m2", params.m2)?], vec!["t1", "t2"], Some(0), Some(1)),
        5 => (vec![t1, inf], vec!["t1", "u1"], None, Some(1)),
        6 => (vec![t1, inf], vec!["t1", "u1"], Some(0), Some(1)),
        7 => (
            vec![t1, finite("m2", params.m2)?, finite("m3", params.m3)?],
            vec!["t1", "t2", "t3"],
            Some(1),
            Some(2),
        ),
        8 => (vec![t1, finite("m2", params.m2)?, inf], vec!["t1", "t2", "u1"], Some(1), Some(2)),
        9 => (vec![t1, inf, inf], vec!["t1", "u1", "u2"], Some(1), Some(2)),
        other => return Err(PresentationError::UnknownType(other)),
    };
    let center = AbelianGroup::with_names(orders, names.into_iter().map(String::from).collect())?;
    let unit = |g: Option<usize>| -> Vec<BigInt> {
        (0..center.rank())
            .map(|i| BigInt::from(u8::from(Some(i) == g)))
            .collect()
    };
    let (x_sq, y_sq) = (unit(x_gen), unit(y_gen));
    GroupPresentation::new(center, 0, params.m1, &x_sq, &y_sq)
}
