//! The 54 row families, the 16 canonical types, the substitutions that carry
//! each row onto a canonical type, and classification of finite loops.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::abelian::{log2_exact, AbelianError, AbelianGroup, ExponentVector, Order};
use crate::cayley_oracle::{
    self, decomposability_check, iso_search, materialize, table_invariants, CayleyTable, DecompositionBudget,
    DecompositionVerdict, Fingerprint, SquarePattern,
};
use crate::group_presentation::{build_d_type, d_type_uses, DTypeParams, PresentationError};
use crate::loop_ring::{ra_verdict, RingError};
use crate::ra_loop::{LoopElement, LoopError, RaLoop};
use crate::sampling::SampleConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassificationError {
    #[error("row {0} does not exist; rows are numbered 1 to 54")]
    UnknownRow(u32),
    #[error("type {0} does not exist; types are numbered 1 to 16")]
    UnknownType(u32),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Abelian(#[from] AbelianError),
}

/// Exponents of the cyclic 2-power factors: `o(t_i) = 2^m_i`, `o(t) = 2^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Params {
    pub m1: u32,
    pub m2: u32,
    pub m3: u32,
    pub k: u32,
}

impl Default for Params {
    fn default() -> Self {
        Params { m1: 1, m2: 1, m3: 1, k: 1 }
    }
}

impl Params {
    pub fn set(&mut self, name: &str, value: u32) -> Result<(), ClassificationError> {
        if value == 0 || value > 30 {
            return Err(ClassificationError::Constraint(format!("{name} = {value} must lie in 1..=30")));
        }
        match name {
            "m1" => self.m1 = value,
            "m2" => self.m2 = value,
            "m3" => self.m3 = value,
            "k" => self.k = value,
            other => return Err(ClassificationError::Constraint(format!("unknown parameter `{other}`"))),
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> u32 {
        match name {
            "m1" => self.m1,
            "m2" => self.m2,
            "m3" => self.m3,
            _ => self.k,
        }
    }

    /// `m1=1 m2=2` style rendering of the named parameters.
    pub fn render(&self, names: &[&str]) -> String {
        names
            .iter()
            .map(|n| format!("{n}={}", self.get(n)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn d_type(&self) -> DTypeParams {
        DTypeParams {
            m1: self.m1,
            m2: self.m2,
            m3: self.m3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Extension {
    None,
    /// Extra factor `<t>` of order `2^k`.
    Torsion,
    /// Extra infinite factor `<w>`.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum G0Pattern {
    One,
    T1,
    T,
    T1T,
    W,
    T1W,
}

impl fmt::Display for G0Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            G0Pattern::One => "1",
            G0Pattern::T1 => "t1",
            G0Pattern::T => "t",
            G0Pattern::T1T => "t1*t",
            G0Pattern::W => "w",
            G0Pattern::T1W => "t1*w",
        })
    }
}

const STARRED_ROWS: [u8; 9] = [8, 10, 12, 20, 22, 24, 32, 34, 36];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RowSpec {
    pub row_id: u8,
    pub d_type: u8,
    pub extension: Extension,
    pub g0_pattern: G0Pattern,
    /// Only exists for `m1 = 1`.
    pub starred: bool,
}

impl RowSpec {
    pub fn new(row_id: u32) -> Result<Self, ClassificationError> {
        if !(1..=54).contains(&row_id) {
            return Err(ClassificationError::UnknownRow(row_id));
        }
        let row_id = row_id as u8;
        let d_type = (row_id - 1) / 6 + 1;
        let (extension, g0_pattern) = match (row_id - 1) % 6 {
            0 => (Extension::None, G0Pattern::One),
            1 => (Extension::None, G0Pattern::T1),
            2 => (Extension::Torsion, G0Pattern::T),
            3 => (Extension::Torsion, G0Pattern::T1T),
            4 => (Extension::Free, G0Pattern::W),
            _ => (Extension::Free, G0Pattern::T1W),
        };
        Ok(RowSpec {
            row_id,
            d_type,
            extension,
            g0_pattern,
            starred: STARRED_ROWS.contains(&row_id),
        })
    }

    pub fn param_names(&self) -> Vec<&'static str> {
        param_names(self.d_type, self.extension)
    }
}

fn param_names(d_type: u8, extension: Extension) -> Vec<&'static str> {
    let (m2, m3) = d_type_uses(d_type);
    let mut out = vec!["m1"];
    if m2 {
        out.push("m2");
    }
    if m3 {
        out.push("m3");
    }
    if extension == Extension::Torsion {
        out.push("k");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CanonicalType {
    pub type_id: u8,
    pub d_type: u8,
    pub extension: Extension,
    pub g0_pattern: G0Pattern,
    pub constraint_m1: Option<u32>,
}

impl CanonicalType {
    pub fn new(type_id: u32) -> Result<Self, ClassificationError> {
        use Extension::*;
        use G0Pattern::*;
        let (d_type, extension, g0_pattern) = match type_id {
            1 => (1, None, One),
            2 => (2, None, T1),
            3 => (3, None, One),
            4 => (4, None, T1),
            5 => (5, None, One),
            6 => (6, None, T1),
            7 => (7, None, One),
            8 => (7, None, T1),
            9 => (7, Torsion, T),
            10 => (8, None, One),
            11 => (8, None, T1),
            12 => (8, Torsion, T),
            13 => (8, Free, W),
            14 => (9, None, One),
            15 => (9, None, T1),
            16 => (9, Free, W),
            other => return Err(ClassificationError::UnknownType(other)),
        };
        Ok(CanonicalType {
            type_id: type_id as u8,
            d_type,
            extension,
            g0_pattern,
            constraint_m1: matches!(type_id, 2 | 4 | 6).then_some(1),
        })
    }

    pub fn param_names(&self) -> Vec<&'static str> {
        param_names(self.d_type, self.extension)
    }

    /// Types with a finite center.
    pub fn is_finite(&self) -> bool {
        matches!(self.type_id, 1 | 2 | 3 | 4 | 7 | 8 | 9)
    }
}

pub const FINITE_TYPES: [u8; 7] = [1, 2, 3, 4, 7, 8, 9];

fn assemble(d_type: u8, extension: Extension, g0: G0Pattern, params: &Params) -> Result<RaLoop, ClassificationError> {
    for name in param_names(d_type, extension) {
        let v = params.get(name);
        if v == 0 || v > 30 {
            return Err(ClassificationError::Constraint(format!("{name} = {v} must lie in 1..=30")));
        }
    }
    let mut group = build_d_type(d_type, params.d_type())?;
    match extension {
        Extension::None => {}
        Extension::Torsion => group = group.with_extra_factor(Order::Finite(1 << params.k), "t")?,
        Extension::Free => group = group.with_extra_factor(Order::Infinite, "w")?,
    }
    let center = group.center().clone();
    let last = center.generator(center.rank() - 1);
    let t1 = center.generator(0);
    let g0 = match g0 {
        G0Pattern::One => center.identity(),
        G0Pattern::T1 => t1,
        G0Pattern::T | G0Pattern::W => last,
        G0Pattern::T1T | G0Pattern::T1W => center.mul(&t1, &last)?,
    };
    Ok(RaLoop::from_vector(group, g0)?)
}

fn star_check(what: String, params: &Params) -> Result<(), ClassificationError> {
    if params.m1 != 1 {
        return Err(ClassificationError::Constraint(format!(
            "{what} requires m1 = 1, got m1 = {}",
            params.m1
        )));
    }
    Ok(())
}

pub fn build_row(spec: &RowSpec, params: &Params) -> Result<RaLoop, ClassificationError> {
    if spec.starred {
        star_check(format!("row {}", spec.row_id), params)?;
    }
    build_row_relaxed(spec, params)
}

/// Builds a row without the `m1 = 1` restriction of starred rows.
pub fn build_row_relaxed(spec: &RowSpec, params: &Params) -> Result<RaLoop, ClassificationError> {
    assemble(spec.d_type, spec.extension, spec.g0_pattern, params)
}

pub fn build_canonical(c: &CanonicalType, params: &Params) -> Result<RaLoop, ClassificationError> {
    if c.constraint_m1.is_some() {
        star_check(format!("type {}", c.type_id), params)?;
    }
    build_canonical_relaxed(c, params)
}

pub fn build_canonical_relaxed(c: &CanonicalType, params: &Params) -> Result<RaLoop, ClassificationError> {
    assemble(c.d_type, c.extension, c.g0_pattern, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    X = 0,
    Y = 1,
    U = 2,
}

const ROLE_NAMES: [&str; 3] = ["x", "y", "u"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubstitutionKind {
    /// A new choice among `x`, `y`, `u`.
    Role,
    /// `t_i' = t_i t_j`, a basis change of the center.
    CenterBasis,
    /// `v' = a v` with `a` central, halving the exponents of `v^2`.
    SquareReduction,
}

impl SubstitutionKind {
    pub fn tag(&self) -> &'static str {
        match self {
            SubstitutionKind::Role => "role",
            SubstitutionKind::CenterBasis => "center-basis",
            SubstitutionKind::SquareReduction => "square-reduction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substitution {
    pub target: String,
    pub word: String,
    pub kind: SubstitutionKind,
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.target, self.word)
    }
}

/// An isomorphism onto a new presentation, recorded as the images in the
/// source loop of the new generators `x, y, u` and of a new center basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    src: RaLoop,
    roles: [LoopElement; 3],
    basis: Vec<ExponentVector>,
    /// `coords[k]` holds the coordinates of source center generator `k` in the new basis.
    coords: Vec<Vec<BigInt>>,
    names: Vec<String>,
    orders: Vec<Order>,
    steps: Vec<Substitution>,
}

impl Frame {
    pub fn new(src: &RaLoop) -> Self {
        let center = src.center();
        let rank = center.rank();
        Frame {
            src: src.clone(),
            roles: [src.x(), src.y(), src.u()],
            basis: (0..rank).map(|i| center.generator(i)).collect(),
            coords: (0..rank)
                .map(|k| (0..rank).map(|i| BigInt::from(u8::from(i == k))).collect())
                .collect(),
            names: center.names().to_vec(),
            orders: center.orders().to_vec(),
            steps: Vec::new(),
        }
    }

    pub fn src(&self) -> &RaLoop {
        &self.src
    }

    pub fn roles(&self) -> &[LoopElement; 3] {
        &self.roles
    }

    pub fn basis(&self) -> &[ExponentVector] {
        &self.basis
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn steps(&self) -> &[Substitution] {
        &self.steps
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    fn dst_center(&self) -> AbelianGroup {
        AbelianGroup::with_names(self.orders.clone(), self.names.clone()).expect("frame orders are nonzero")
    }

    /// Coordinates of a source central element in the new basis.
    pub fn to_dst(&self, z: &ExponentVector) -> ExponentVector {
        let mut raw = vec![BigInt::zero(); self.rank()];
        for (e, row) in z.as_slice().iter().zip(&self.coords) {
            for (acc, c) in raw.iter_mut().zip(row) {
                *acc += e * c;
            }
        }
        self.dst_center().reduce(&raw).expect("rank matches")
    }

    /// The source element with the given new coordinates.
    pub fn from_dst(&self, c: &ExponentVector) -> ExponentVector {
        let center = self.src.center();
        let mut acc = center.identity();
        for (e, b) in c.as_slice().iter().zip(&self.basis) {
            acc = center.mul(&acc, &center.pow(b, e.clone())).expect("rank matches");
        }
        acc
    }

    fn push(&mut self, target: String, word: String, kind: SubstitutionKind) {
        self.steps.push(Substitution { target, word, kind });
    }

    /// New `x, y, u` are the old roles `perm[0], perm[1], perm[2]`.
    pub fn permute(&mut self, perm: [Role; 3]) {
        let old = self.roles.clone();
        for (i, r) in perm.iter().enumerate() {
            self.roles[i] = old[*r as usize].clone();
            if *r as usize != i {
                self.push(format!("{}'", ROLE_NAMES[i]), ROLE_NAMES[*r as usize].to_string(), SubstitutionKind::Role);
            }
        }
    }

    /// `target <- by * target`.
    pub fn left_mul(&mut self, target: Role, by: Role) {
        let (t, b) = (target as usize, by as usize);
        self.roles[t] = self.src.mul(&self.roles[b], &self.roles[t]);
        self.push(
            format!("{}'", ROLE_NAMES[t]),
            format!("{}*{}", ROLE_NAMES[b], ROLE_NAMES[t]),
            SubstitutionKind::Role,
        );
    }

    /// `target <- target * by`.
    pub fn right_mul(&mut self, target: Role, by: Role) {
        let (t, b) = (target as usize, by as usize);
        self.roles[t] = self.src.mul(&self.roles[t], &self.roles[b]);
        self.push(
            format!("{}'", ROLE_NAMES[t]),
            format!("{}*{}", ROLE_NAMES[t], ROLE_NAMES[b]),
            SubstitutionKind::Role,
        );
    }

    /// Multiplies `target` by a central `a` so that every exponent of its
    /// square becomes 0 or 1: `a` has exponents `-floor(e/2)`.
    pub fn reduce_square(&mut self, target: Role) {
        let t = target as usize;
        let sq = self.to_dst(&self.src.square(&self.roles[t]));
        let alpha: Vec<BigInt> = sq.as_slice().iter().map(|e| -e.div_floor(&BigInt::from(2))).collect();
        let alpha = self.dst_center().reduce(&alpha).expect("rank matches");
        if alpha.is_identity() {
            return;
        }
        let a = self.src.central(self.from_dst(&alpha));
        self.roles[t] = self.src.mul(&a, &self.roles[t]);
        let word = format!("{}*{}", self.dst_center().word(&alpha), ROLE_NAMES[t]);
        self.push(format!("{}'", ROLE_NAMES[t]), word, SubstitutionKind::SquareReduction);
    }

    /// Replaces center generator `i` by `g_i g_j`. Orders are preserved when
    /// `o(g_j)` divides `o(g_i)` or `g_i` has infinite order.
    pub fn change_center(&mut self, i: usize, j: usize) -> Result<(), ClassificationError> {
        let ok = match (self.orders[i], self.orders[j]) {
            (Order::Infinite, _) => true,
            (Order::Finite(a), Order::Finite(b)) => a % b == 0,
            (Order::Finite(_), Order::Infinite) => false,
        };
        if i == j || !ok {
            return Err(ClassificationError::Constraint(format!(
                "cannot replace {} by {}*{}: orders {} and {}",
                self.names[i], self.names[i], self.names[j], self.orders[i], self.orders[j]
            )));
        }
        let center = self.src.center();
        self.basis[i] = center.mul(&self.basis[i], &self.basis[j]).expect("rank matches");
        for row in &mut self.coords {
            let ci = row[i].clone();
            row[j] -= ci;
        }
        let old = self.names[i].clone();
        let word = if j < i {
            format!("{}*{}", self.names[j], old)
        } else {
            format!("{}*{}", old, self.names[j])
        };
        self.names[i] = format!("{old}'");
        self.push(self.names[i].clone(), word, SubstitutionKind::CenterBasis);
        Ok(())
    }

    /// New center generator `k` is old generator `perm[k]`.
    pub fn reorder_center(&mut self, perm: &[usize]) {
        assert_eq!(perm.len(), self.rank());
        self.basis = perm.iter().map(|&p| self.basis[p].clone()).collect();
        self.names = perm.iter().map(|&p| self.names[p].clone()).collect();
        self.orders = perm.iter().map(|&p| self.orders[p]).collect();
        for row in &mut self.coords {
            *row = perm.iter().map(|&p| row[p].clone()).collect();
        }
    }

    /// The presentation read off the current frame.
    pub fn derive(&self) -> Result<RaLoop, ClassificationError> {
        let center = self.dst_center();
        let m1 = match self.orders[0] {
            Order::Finite(n) => log2_exact(n).filter(|&m| m >= 1),
            Order::Infinite => None,
        }
        .ok_or_else(|| ClassificationError::Constraint(format!("{} is not of order 2^m", self.names[0])))?;
        let sq = |r: Role| self.to_dst(&self.src.square(&self.roles[r as usize]));
        let group = crate::group_presentation::GroupPresentation::new(
            center,
            0,
            m1,
            sq(Role::X).as_slice(),
            sq(Role::Y).as_slice(),
        )?;
        Ok(RaLoop::new(group, sq(Role::U).as_slice())?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// `relaxed` marks a type 2, 4 or 6 shape reached with `m1 > 1`.
    Type { type_id: u8, params: Params, relaxed: bool },
    Decomposable { factor: String },
    Unrecognized,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Type { type_id, params, relaxed } => {
                let c = CanonicalType::new(*type_id as u32).expect("recognized types exist");
                write!(f, "type={type_id} {}", params.render(&c.param_names()))?;
                if *relaxed {
                    f.write_str(" relaxed=true")?;
                }
                Ok(())
            }
            Outcome::Decomposable { factor } => write!(f, "decomposable factor={factor}"),
            Outcome::Unrecognized => f.write_str("type=unrecognized"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationTrace {
    pub frame: Frame,
    pub dst: RaLoop,
    pub outcome: Outcome,
}

impl NormalizationTrace {
    /// The do-nothing trace of a loop onto itself.
    pub fn identity(src: &RaLoop) -> Self {
        let frame = Frame::new(src);
        let dst = frame.derive().unwrap_or_else(|_| src.clone());
        let outcome = recognize(&dst);
        NormalizationTrace { frame, dst, outcome }
    }

    pub fn steps(&self) -> &[Substitution] {
        self.frame.steps()
    }

    fn finish(frame: Frame) -> Result<Self, ClassificationError> {
        let dst = frame.derive()?;
        let outcome = recognize(&dst);
        Ok(NormalizationTrace { frame, dst, outcome })
    }
}

/// Matches a presentation against the canonical shapes exactly. A center
/// factor other than `t1` that enters none of `x^2, y^2, u^2` splits off as
/// a direct factor.
pub fn recognize(l: &RaLoop) -> Outcome {
    let center = l.center();
    let g = l.group();
    for i in 1..center.rank() {
        if [g.x_sq(), g.y_sq(), l.g0()].iter().all(|v| v.get(i).is_zero()) {
            return Outcome::Decomposable {
                factor: center.name(i).to_string(),
            };
        }
    }
    for type_id in 1..=16u8 {
        let c = CanonicalType::new(type_id as u32).expect("type ids are valid");
        let Some(params) = infer_params(&c, center.orders()) else {
            continue;
        };
        let Ok(candidate) = build_canonical_relaxed(&c, &params) else {
            continue;
        };
        let cg = candidate.group();
        if cg.center().orders() == center.orders()
            && cg.x_sq() == g.x_sq()
            && cg.y_sq() == g.y_sq()
            && candidate.g0() == l.g0()
            && g.m1() == params.m1
        {
            return Outcome::Type {
                type_id,
                params,
                relaxed: c.constraint_m1.is_some_and(|m| m != params.m1),
            };
        }
    }
    Outcome::Unrecognized
}

fn infer_params(c: &CanonicalType, orders: &[Order]) -> Option<Params> {
    let names = c.param_names();
    let finite_slots: Vec<usize> = {
        let probe = build_canonical_relaxed(c, &Params::default()).ok()?;
        let probe_orders = probe.center().orders().to_vec();
        if probe_orders.len() != orders.len() {
            return None;
        }
        let kinds_match = probe_orders.iter().zip(orders).all(|(a, b)| a.is_finite() == b.is_finite());
        if !kinds_match {
            return None;
        }
        (0..orders.len()).filter(|&i| orders[i].is_finite()).collect()
    };
    if finite_slots.len() != names.len() {
        return None;
    }
    let mut params = Params::default();
    for (slot, name) in finite_slots.into_iter().zip(names) {
        let m = log2_exact(orders[slot].finite()?)?;
        if m == 0 {
            return None;
        }
        params.set(name, m).ok()?;
    }
    Some(params)
}

/// Re-chooses `u` so that every exponent of `u^2` is 0 or 1 and `u^2`
/// avoids any generator that equals `x^2` or `y^2`, except `t1` when `m1 = 1`.
pub fn reduce_g0(l: &RaLoop) -> (RaLoop, NormalizationTrace) {
    let mut frame = Frame::new(l);
    frame.reduce_square(Role::U);
    for _ in 0..4 {
        let mut changed = false;
        for role in [Role::X, Role::Y] {
            let sq = frame.to_dst(&l.square(&frame.roles[role as usize]));
            let g0 = frame.to_dst(&l.square(&frame.roles[Role::U as usize]));
            let support = sq.support();
            if support.len() != 1 || !sq.get(support[0]).is_one() {
                continue;
            }
            let z = support[0];
            let exceptional = z == 0 && l.group().m1() == 1;
            if !exceptional && !g0.get(z).is_zero() {
                frame.left_mul(Role::U, role);
                frame.reduce_square(Role::U);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let trace = NormalizationTrace::finish(frame).expect("u substitutions keep the center");
    (trace.dst.clone(), trace)
}

/// Replays the substitutions that carry a row onto a canonical type.
pub fn normalize(row_id: u32, params: &Params) -> Result<NormalizationTrace, ClassificationError> {
    let spec = RowSpec::new(row_id)?;
    let src = build_row(&spec, params)?;
    normalize_loop(&spec, &src, params)
}

/// Like [`normalize`] but lets starred rows take any `m1`.
pub fn normalize_relaxed(row_id: u32, params: &Params) -> Result<NormalizationTrace, ClassificationError> {
    let spec = RowSpec::new(row_id)?;
    let src = build_row_relaxed(&spec, params)?;
    normalize_loop(&spec, &src, params)
}

fn normalize_loop(spec: &RowSpec, src: &RaLoop, p: &Params) -> Result<NormalizationTrace, ClassificationError> {
    use Role::{U, X, Y};
    let mut f = Frame::new(src);
    let ext = f.rank() - 1;
    let (m1, k) = (p.m1, p.k);
    match spec.row_id {
        1 | 8 | 13 | 20 | 25 | 32 | 37 | 38 | 39 | 43 | 44 | 45 | 47 | 49 | 50 | 53 => {}
        2 => {
            if m1 == 1 {
                f.left_mul(U, X);
            } else {
                f.left_mul(X, U);
                f.left_mul(Y, U);
                f.permute([U, X, Y]);
                f.reduce_square(Y);
                f.reduce_square(U);
            }
        }
        3 | 5 | 9 | 11 => f.permute([X, U, Y]),
        4 | 16 | 28 | 40 | 46 | 52 if k < m1 => f.change_center(0, ext)?,
        4 => {
            f.change_center(ext, 0)?;
            f.permute([X, U, Y]);
        }
        6 | 10 | 12 => {
            f.change_center(ext, 0)?;
            f.permute([X, U, Y]);
        }
        7 => {
            if m1 == 1 {
                f.left_mul(X, U);
                f.left_mul(Y, U);
            } else {
                f.left_mul(U, X);
                f.reduce_square(U);
            }
        }
        14 => {
            if m1 == 1 {
                f.left_mul(U, X);
            } else {
                f.permute([U, Y, X]);
                f.right_mul(U, X);
                f.reduce_square(U);
            }
        }
        15 | 17 | 21 | 23 | 35 => f.permute([Y, U, X]),
        16 | 18 | 22 | 24 | 36 => {
            f.change_center(ext, 0)?;
            f.permute([Y, U, X]);
        }
        19 => {
            if m1 == 1 {
                f.permute([U, Y, X]);
                f.right_mul(U, X);
            } else {
                f.left_mul(U, X);
                f.reduce_square(U);
            }
        }
        26 => {
            f.permute([U, Y, X]);
            six_with_trivial_g0(&mut f, m1);
        }
        31 => six_with_trivial_g0(&mut f, m1),
        27 | 29 | 33 => {
            f.permute([U, Y, X]);
            f.reorder_center(&[0, 2, 1]);
        }
        28 | 30 => {
            f.change_center(ext, 0)?;
            f.permute([U, Y, X]);
            f.reorder_center(&[0, 2, 1]);
        }
        34 => {
            if k >= m1 {
                f.change_center(ext, 0)?;
                f.permute([U, Y, X]);
            } else {
                f.right_mul(X, U);
                f.reduce_square(X);
                f.change_center(0, ext)?;
            }
            f.reorder_center(&[0, 2, 1]);
        }
        40 | 46 | 48 | 54 => f.change_center(ext, 0)?,
        41 => {
            f.permute([X, U, Y]);
            f.reorder_center(&[0, 1, 3, 2]);
        }
        42 => {
            f.change_center(ext, 0)?;
            f.permute([X, U, Y]);
            f.reorder_center(&[0, 1, 3, 2]);
        }
        51 => {
            f.permute([U, X, Y]);
            f.reorder_center(&[0, 3, 1, 2]);
        }
        52 => {
            f.change_center(ext, 0)?;
            f.permute([U, Y, X]);
            f.reorder_center(&[0, 3, 2, 1]);
        }
        other => unreachable!("row {other} is validated"),
    }
    NormalizationTrace::finish(f)
}

/// `x^2 = t1, y^2 = u1, u^2 = 1`: for `m1 = 1` take `x' = xu`, otherwise `u' = xu`.
fn six_with_trivial_g0(f: &mut Frame, m1: u32) {
    if m1 == 1 {
        f.right_mul(Role::X, Role::U);
        f.reduce_square(Role::X);
    } else {
        f.left_mul(Role::U, Role::X);
        f.reduce_square(Role::U);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsoMapReport {
    pub failures: Vec<String>,
    pub pairs_checked: u64,
    /// Independent table isomorphism search, run for finite loops of order at most 128.
    pub oracle: Option<bool>,
}

impl IsoMapReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.oracle != Some(false)
    }
}

const EXHAUSTIVE_PAIRS_UP_TO: u64 = 256;
const ORACLE_UP_TO: u64 = 128;

/// Checks that the frame in `trace` is an isomorphism from `dst` onto `src`.
pub fn verify_iso_map(src: &RaLoop, dst: &RaLoop, trace: &NormalizationTrace, cfg: &SampleConfig) -> IsoMapReport {
    let mut report = IsoMapReport {
        failures: Vec::new(),
        pairs_checked: 0,
        oracle: None,
    };
    let frame = &trace.frame;
    let fail = |report: &mut IsoMapReport, msg: String| report.failures.push(msg);
    if frame.src() != src {
        fail(&mut report, "trace was recorded on a different loop".into());
        return report;
    }
    let sc = src.center();
    let dc = dst.center();
    if dc.rank() != frame.rank() {
        fail(&mut report, format!("center ranks differ: {} vs {}", dc.rank(), frame.rank()));
        return report;
    }
    for (i, b) in frame.basis().iter().enumerate() {
        if sc.element_order(b) != dc.factor_order(i) {
            fail(&mut report, format!("image of {} has order {}, expected {}", dc.name(i), sc.element_order(b), dc.factor_order(i)));
        }
        let back = frame.to_dst(b);
        if back != dc.generator(i) {
            fail(&mut report, format!("center coordinates do not invert on {}", dc.name(i)));
        }
    }
    for k in 0..sc.rank() {
        if frame.from_dst(&frame.to_dst(&sc.generator(k))) != sc.generator(k) {
            fail(&mut report, format!("center map does not invert on {}", sc.name(k)));
        }
    }
    if !report.failures.is_empty() {
        return report;
    }
    if frame.from_dst(dst.s()) != *src.s() {
        fail(&mut report, "s is not mapped to s".into());
    }
    let [x, y, u] = frame.roles();
    let central = |v: &ExponentVector| frame.from_dst(v);
    for (name, role, expected) in [
        ("x^2", x, dst.group().x_sq()),
        ("y^2", y, dst.group().y_sq()),
        ("u^2", u, dst.g0()),
    ] {
        if src.square(role) != central(expected) {
            fail(&mut report, format!("{name} = {} is not the image of {}", sc.word(&src.square(role)), dc.word(expected)));
        }
    }
    if src.commutator(x, y) != *src.s() {
        fail(&mut report, "[x, y] != s".into());
    }
    if src.associator(x, y, u) != *src.s() {
        fail(&mut report, "[x, y, u] != s".into());
    }
    let bits = |p: &LoopElement| (u8::from(p.g.a)) | (u8::from(p.g.b) << 1) | (u8::from(p.e) << 2);
    let span: HashSet<u8> = (0..8u8)
        .map(|m| {
            [x, y, u]
                .iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .fold(0, |acc, (_, p)| acc ^ bits(p))
        })
        .collect();
    if span.len() != 8 {
        fail(&mut report, "x, y, u do not span L/Z(L)".into());
    }
    if !report.failures.is_empty() {
        return report;
    }

    let phi = |p: &LoopElement| -> LoopElement {
        let mut acc = src.identity();
        if p.g.a {
            acc = x.clone();
        }
        if p.g.b {
            acc = src.mul(&acc, y);
        }
        acc = src.mul(&acc, &src.central(central(&p.g.z)));
        if p.e {
            acc = src.mul(&acc, u);
        }
        acc
    };
    let exhaustive = dst.order().finite().is_some_and(|n| n <= EXHAUSTIVE_PAIRS_UP_TO);
    let pairs: Vec<(LoopElement, LoopElement)> = match dst.enumerate() {
        Ok(all) if exhaustive => {
            let images: HashSet<LoopElement> = all.iter().map(&phi).collect();
            if images.len() != all.len() {
                fail(&mut report, "map is not injective".into());
                return report;
            }
            all.iter()
                .flat_map(|p| all.iter().map(move |q| (p.clone(), q.clone())))
                .collect()
        }
        _ => {
            let mut rng = cfg.rng();
            (0..cfg.trials)
                .map(|_| (dst.random_element(cfg.bound, &mut rng), dst.random_element(cfg.bound, &mut rng)))
                .collect()
        }
    };
    report.pairs_checked = pairs.len() as u64;
    let bad = pairs
        .par_iter()
        .find_map_first(|(p, q)| (phi(&dst.mul(p, q)) != src.mul(&phi(p), &phi(q))).then(|| (p.clone(), q.clone())));
    if let Some((p, q)) = bad {
        fail(&mut report, format!("map is not multiplicative at ({}, {})", dst.word(&p), dst.word(&q)));
    }
    if src.order().finite().is_some_and(|n| n <= ORACLE_UP_TO) && dst.center().is_finite() {
        let a = materialize(src).expect("finite").0;
        let b = materialize(dst).expect("finite").0;
        report.oracle = Some(iso_search(&b, &a).is_some());
    }
    report
}

/// Isomorphism invariants computed from the presentation alone.
pub fn fingerprint(l: &RaLoop) -> Fingerprint {
    let center = l.center();
    let order_histogram = l.enumerate().ok().map(|all| {
        let mut h = BTreeMap::new();
        for p in &all {
            let o = l.element_order(p).finite().expect("finite loop");
            *h.entry(o).or_insert(0u64) += 1;
        }
        h
    });
    let classes: Vec<Vec<bool>> = l
        .coset_representatives()
        .iter()
        .skip(1)
        .map(|v| center.square_class(&l.square(v)))
        .collect();
    let trivial = classes.iter().filter(|c| c.iter().all(|b| !b)).count() as u8;
    let distinct = classes.iter().collect::<HashSet<_>>().len() as u8;
    Fingerprint {
        order: l.order(),
        center_torsion: center.torsion_invariants(),
        center_free_rank: center.free_rank(),
        derived_order: 2,
        involutions: l.solve_involutions().count,
        order_histogram,
        square_pattern: Some(SquarePattern {
            trivial_cosets: trivial,
            distinct_classes: distinct,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifyConfig {
    pub modulus: u64,
    pub budget: DecompositionBudget,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            modulus: 3,
            budget: DecompositionBudget {
                max_order: 128,
                ..DecompositionBudget::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    /// `map` sends the canonical loop's elements to the input's;
    /// `generators` are the input elements playing `x, y, u`.
    Type {
        type_id: u8,
        params: Params,
        map: Vec<usize>,
        generators: [usize; 3],
    },
    NotRa { reason: String },
    NotIndecomposable { a: Vec<usize>, b: Vec<usize> },
    Undecided { reason: String },
    NoMatch { fingerprint: Fingerprint },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// Names the canonical type of a finite indecomposable RA loop.
pub fn classify_finite(t: &CayleyTable, cfg: &ClassifyConfig) -> Result<Classification, ClassifyError> {
    if let Err(defect) = t.validate() {
        return Ok(Classification::NotRa {
            reason: format!("not a loop: {defect}"),
        });
    }
    let ra = ra_verdict(t, cfg.modulus)?;
    if !ra.is_ra() {
        let reason = if ra.associative {
            "associative".to_string()
        } else {
            let w = ra.alternative.witness.expect("a failing check has a witness");
            format!("not alternative at ({}, {}, {})", t.name(w[0]), t.name(w[1]), t.name(w[2]))
        };
        return Ok(Classification::NotRa { reason });
    }
    match decomposability_check(t, cfg.budget) {
        DecompositionVerdict::Decomposable { a, b } => return Ok(Classification::NotIndecomposable { a, b }),
        DecompositionVerdict::Undecided { reason } => return Ok(Classification::Undecided { reason }),
        DecompositionVerdict::Indecomposable => {}
    }
    let inv = table_invariants(t);
    let fp = inv.fingerprint.clone();
    for type_id in FINITE_TYPES {
        let c = CanonicalType::new(type_id as u32).expect("finite types exist");
        for params in candidate_params(&c, &fp.center_torsion) {
            let Ok(candidate) = build_canonical(&c, &params) else {
                continue;
            };
            if fingerprint(&candidate) != fp {
                continue;
            }
            let (table, elements) = materialize(&candidate).expect("finite type");
            if let Some(map) = cayley_oracle::iso_search(&table, t) {
                let idx = |p: &LoopElement| elements.iter().position(|q| q == p).expect("generator is enumerated");
                let generators = [candidate.x(), candidate.y(), candidate.u()].map(|g| map[idx(&g)]);
                return Ok(Classification::Type {
                    type_id,
                    params,
                    map,
                    generators,
                });
            }
        }
    }
    Ok(Classification::NoMatch { fingerprint: fp })
}

/// Every assignment of the center's cyclic factors to the type's parameters.
fn candidate_params(c: &CanonicalType, torsion: &[u64]) -> Vec<Params> {
    let names = c.param_names();
    if names.len() != torsion.len() {
        return Vec::new();
    }
    let Some(exps) = torsion.iter().map(|&q| log2_exact(q)).collect::<Option<Vec<u32>>>() else {
        return Vec::new();
    };
    let mut out: Vec<Params> = Vec::new();
    for perm in permutations(exps.len()) {
        let mut p = Params::default();
        for (name, &i) in names.iter().zip(&perm) {
            p.set(name, exps[i]).expect("exponents are positive");
        }
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}
