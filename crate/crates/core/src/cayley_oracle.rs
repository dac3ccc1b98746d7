//! Finite loops as Cayley tables: validation, exhaustive invariants,
//! isomorphism search and direct-product detection.
//!
//! Element `0` is always the identity.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::abelian::{prime_power_parts, Order};
use crate::group_presentation::{GroupElement, GroupPresentation};
use crate::ra_loop::{moufang_violation, LoopElement, LoopError, MoufangReport, RaLoop};

const UNSET: u32 = u32::MAX;

/// First violation of the loop axioms found in a table.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoopDefect {
    #[error("empty table")]
    Empty,
    #[error("cell ({row}, {col}): entry {value} is out of range")]
    OutOfRange { row: usize, col: usize, value: usize },
    #[error("cell (0, {col}): identity row has {value}, expected {col}")]
    IdentityRow { col: usize, value: usize },
    #[error("cell ({row}, 0): identity column has {value}, expected {row}")]
    IdentityColumn { row: usize, value: usize },
    #[error("cell ({row}, {col}): value {value} repeats in row {row}")]
    RowRepeat { row: usize, col: usize, value: usize },
    #[error("cell ({row}, {col}): value {value} repeats in column {col}")]
    ColumnRepeat { row: usize, col: usize, value: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("not a loop: {0}")]
    Defect(#[from] LoopDefect),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CayleyTable {
    n: usize,
    data: Vec<u32>,
    labels: Vec<Option<String>>,
}

impl CayleyTable {
    /// Builds and validates a table.
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Result<Self, LoopDefect> {
        let t = Self::from_rows_unchecked(rows)?;
        t.validate()?;
        Ok(t)
    }

    /// Only checks shape and entry range; the result may fail the loop axioms.
    pub fn from_rows_unchecked(rows: Vec<Vec<usize>>) -> Result<Self, LoopDefect> {
        let n = rows.len();
        if n == 0 {
            return Err(LoopDefect::Empty);
        }
        let mut data = Vec::with_capacity(n * n);
        for (r, row) in rows.iter().enumerate() {
            for c in 0..n {
                let value = row.get(c).copied().unwrap_or(usize::MAX);
                if value >= n {
                    return Err(LoopDefect::OutOfRange { row: r, col: c, value });
                }
                data.push(value as u32);
            }
            if row.len() > n {
                return Err(LoopDefect::OutOfRange { row: r, col: n, value: row[n] });
            }
        }
        Ok(CayleyTable {
            n,
            data,
            labels: vec![None; n],
        })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> usize) -> Result<Self, LoopDefect> {
        Self::from_rows((0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect())
    }

    pub fn cyclic(n: usize) -> Self {
        Self::from_fn(n, |i, j| (i + j) % n).expect("cyclic group table")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.data[i * self.n + j] as usize
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.data[i * self.n..(i + 1) * self.n].iter().map(|&v| v as usize)
    }

    /// Overwrites one cell; the table may stop being a loop.
    pub fn set(&mut self, i: usize, j: usize, value: usize) {
        assert!(value < self.n);
        self.data[i * self.n + j] = value as u32;
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    pub fn set_label(&mut self, i: usize, name: impl Into<String>) {
        self.labels[i] = Some(name.into());
    }

    /// The label of `i`, or its index.
    pub fn name(&self, i: usize) -> String {
        self.labels[i].clone().unwrap_or_else(|| i.to_string())
    }

    pub fn validate(&self) -> Result<(), LoopDefect> {
        let n = self.n;
        for c in 0..n {
            if self.mul(0, c) != c {
                return Err(LoopDefect::IdentityRow { col: c, value: self.mul(0, c) });
            }
        }
        for r in 0..n {
            if self.mul(r, 0) != r {
                return Err(LoopDefect::IdentityColumn { row: r, value: self.mul(r, 0) });
            }
        }
        let mut seen = vec![usize::MAX; n];
        for r in 0..n {
            for c in 0..n {
                let v = self.mul(r, c);
                if seen[v] == r {
                    return Err(LoopDefect::RowRepeat { row: r, col: c, value: v });
                }
                seen[v] = r;
            }
        }
        seen.fill(usize::MAX);
        for c in 0..n {
            for r in 0..n {
                let v = self.mul(r, c);
                if seen[v] == c {
                    return Err(LoopDefect::ColumnRepeat { row: r, col: c, value: v });
                }
                seen[v] = c;
            }
        }
        Ok(())
    }

    /// `ldiv[a][b]` solves `a x = b`.
    pub fn left_division(&self) -> Vec<u32> {
        let n = self.n;
        let mut out = vec![0u32; n * n];
        for a in 0..n {
            for x in 0..n {
                out[a * n + self.mul(a, x)] = x as u32;
            }
        }
        out
    }

    /// Relabels element `i` as `perm[i]`; `perm` must fix `0`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        assert_eq!(perm[0], 0);
        let n = self.n;
        let mut data = vec![0u32; n * n];
        let mut labels = vec![None; n];
        for i in 0..n {
            labels[perm[i]] = self.labels[i].clone();
            for j in 0..n {
                data[perm[i] * n + perm[j]] = perm[self.mul(i, j)] as u32;
            }
        }
        CayleyTable { n, data, labels }
    }

    /// External direct product; the pair `(i, j)` becomes `i * other.n + j`.
    pub fn direct_product(&self, other: &Self) -> Self {
        let (n1, n2) = (self.n, other.n);
        let n = n1 * n2;
        let mut data = Vec::with_capacity(n * n);
        for p in 0..n {
            for q in 0..n {
                let (a, b) = (p / n2, p % n2);
                let (c, d) = (q / n2, q % n2);
                data.push((self.mul(a, c) * n2 + other.mul(b, d)) as u32);
            }
        }
        CayleyTable {
            n,
            data,
            labels: vec![None; n],
        }
    }

    /// First `(p, q, r)` with `(pq)r != p(qr)`.
    pub fn associativity_witness(&self) -> Option<[usize; 3]> {
        let n = self.n;
        (0..n).into_par_iter().find_map_first(|p| {
            for q in 0..n {
                let pq = self.mul(p, q);
                for r in 0..n {
                    if self.mul(pq, r) != self.mul(p, self.mul(q, r)) {
                        return Some([p, q, r]);
                    }
                }
            }
            None
        })
    }

    pub fn is_associative(&self) -> bool {
        self.associativity_witness().is_none()
    }

    /// Exhaustive Moufang and alternative-law check over all triples.
    pub fn moufang_check(&self) -> MoufangReport {
        let n = self.n;
        let failure = (0..n).into_par_iter().find_map_first(|p| {
            for q in 0..n {
                for r in 0..n {
                    if let Some(law) = moufang_violation(|a: &usize, b: &usize| self.mul(*a, *b), &p, &q, &r) {
                        return Some((law, [p, q, r], [p, q, r].map(|i| self.name(i))));
                    }
                }
            }
            None
        });
        MoufangReport {
            triples_checked: (n as u64).pow(3),
            exhaustive: true,
            failure,
        }
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let table = Self::parse_unchecked(text)?;
        table.validate()?;
        Ok(table)
    }

    /// Parses the file format without checking the loop axioms.
    pub fn parse_unchecked(text: &str) -> Result<Self, FormatError> {
        let syntax = |line: usize, message: String| FormatError::Syntax { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| syntax(1, "missing header".into()))?;
        if header.trim() != "cayley 1" {
            return Err(syntax(1, format!("expected `cayley 1`, found `{}`", header.trim())));
        }
        let (ln, size) = lines.next().ok_or_else(|| syntax(2, "missing order".into()))?;
        let n: usize = size
            .trim()
            .parse()
            .map_err(|_| syntax(ln, format!("invalid order `{}`", size.trim())))?;
        if n == 0 {
            return Err(syntax(ln, "order must be positive".into()));
        }
        let mut rows = Vec::with_capacity(n);
        for r in 0..n {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| syntax(3 + r, format!("missing row {r} of {n}")))?;
            let row: Vec<usize> = line
                .split_whitespace()
                .map(|tok| tok.parse().map_err(|_| syntax(ln, format!("invalid entry `{tok}`"))))
                .collect::<Result<_, _>>()?;
            if row.len() != n {
                return Err(syntax(ln, format!("row {r} has {} entries, expected {n}", row.len())));
            }
            rows.push(row);
        }
        let mut table = Self::from_rows_unchecked(rows)?;
        for (ln, line) in lines {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let Some(comment) = trimmed.strip_prefix('#') else {
                return Err(syntax(ln, "unexpected content after the table".into()));
            };
            let mut parts = comment.trim_start().splitn(3, ' ');
            if parts.next() != Some("label") {
                continue;
            }
            let index: usize = parts
                .next()
                .and_then(|i| i.parse().ok())
                .filter(|&i| i < n)
                .ok_or_else(|| syntax(ln, "label needs an element index".into()))?;
            let name = parts.next().map(str::trim).unwrap_or("");
            if name.is_empty() {
                return Err(syntax(ln, "label needs a name".into()));
            }
            table.labels[index] = Some(name.to_string());
        }
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("cayley 1\n{}\n", self.n);
        for r in 0..self.n {
            let row: Vec<String> = self.row(r).map(|v| v.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        for (i, label) in self.labels.iter().enumerate() {
            if let Some(name) = label {
                out.push_str(&format!("# label {i} {name}\n"));
            }
        }
        out
    }
}

/// Table of a finite RA loop over its enumeration order, labelled by words.
pub fn materialize(l: &RaLoop) -> Result<(CayleyTable, Vec<LoopElement>), LoopError> {
    let elements = l.enumerate()?;
    let index: HashMap<&LoopElement, u32> = elements.iter().enumerate().map(|(i, p)| (p, i as u32)).collect();
    let rows: Vec<Vec<u32>> = elements
        .par_iter()
        .map(|p| elements.iter().map(|q| index[&l.mul(p, q)]).collect())
        .collect();
    let n = elements.len();
    let table = CayleyTable {
        n,
        data: rows.into_iter().flatten().collect(),
        labels: elements.iter().map(|p| Some(l.word(p))).collect(),
    };
    debug_assert!(table.validate().is_ok());
    Ok((table, elements))
}

/// Table of a finite group presentation.
pub fn materialize_group(g: &GroupPresentation) -> Result<(CayleyTable, Vec<GroupElement>), LoopError> {
    let elements = g.enumerate()?;
    let index: HashMap<&GroupElement, u32> = elements.iter().enumerate().map(|(i, p)| (p, i as u32)).collect();
    let n = elements.len();
    let mut data = Vec::with_capacity(n * n);
    for p in &elements {
        data.extend(elements.iter().map(|q| index[&g.mul(p, q)]));
    }
    let table = CayleyTable {
        n,
        data,
        labels: elements.iter().map(|p| Some(g.word(p))).collect(),
    };
    Ok((table, elements))
}

/// Closure of `gens` and the identity under the operation. In a finite loop
/// a multiplicatively closed subset is closed under both divisions.
pub fn subloop_generated(t: &CayleyTable, gens: &[usize]) -> Vec<usize> {
    let mut members = vec![false; t.n()];
    let mut list = Vec::new();
    extend_closure(t, &mut members, &mut list, std::iter::once(0).chain(gens.iter().copied()));
    list.sort_unstable();
    list
}

fn extend_closure(t: &CayleyTable, members: &mut [bool], list: &mut Vec<usize>, new: impl IntoIterator<Item = usize>) {
    let mut q = list.len();
    for g in new {
        if !members[g] {
            members[g] = true;
            list.push(g);
        }
    }
    // pairs among the old prefix are already closed
    while q < list.len() {
        let x = list[q];
        let mut k = 0;
        while k <= q {
            let y = list[k];
            for p in [t.mul(x, y), t.mul(y, x)] {
                if !members[p] {
                    members[p] = true;
                    list.push(p);
                }
            }
            k += 1;
        }
        q += 1;
    }
}

fn element_orders(t: &CayleyTable) -> Vec<u64> {
    (0..t.n())
        .map(|p| {
            let mut acc = p;
            let mut k = 1;
            while acc != 0 {
                acc = t.mul(acc, p);
                k += 1;
                assert!(k <= t.n() as u64 + 1, "element {p} has no finite power equal to 1");
            }
            k
        })
        .collect()
}

/// Elements commuting and associating with everything.
pub fn center(t: &CayleyTable) -> Vec<usize> {
    let n = t.n();
    (0..n)
        .into_par_iter()
        .filter(|&c| {
            (0..n).all(|a| t.mul(c, a) == t.mul(a, c))
                && (0..n).all(|a| {
                    let ca = t.mul(c, a);
                    let ac = t.mul(a, c);
                    (0..n).all(|b| {
                        let ab = t.mul(a, b);
                        t.mul(ca, b) == t.mul(c, ab)
                            && t.mul(ac, b) == t.mul(a, t.mul(c, b))
                            && t.mul(ab, c) == t.mul(a, t.mul(b, c))
                    })
                })
        })
        .collect()
}

/// Square classes of `L / Z(L)` when it has exactly eight cosets and every
/// square is central.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SquarePattern {
    /// Nontrivial cosets whose squares lie in `Z^2`.
    pub trivial_cosets: u8,
    /// Distinct classes mod `Z^2` among the squares of the seven nontrivial cosets.
    pub distinct_classes: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    pub order: Order,
    pub center_torsion: Vec<u64>,
    pub center_free_rank: usize,
    /// Order of the subloop generated by commutators and associators.
    pub derived_order: u64,
    /// Non-central elements of order two.
    pub involutions: u64,
    /// Element order to number of elements; finite loops only.
    pub order_histogram: Option<BTreeMap<u64, u64>>,
    pub square_pattern: Option<SquarePattern>,
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let torsion: Vec<String> = self.center_torsion.iter().map(u64::to_string).collect();
        write!(
            f,
            "order={} center_torsion=[{}] center_free_rank={} derived_order={} involutions={}",
            self.order,
            torsion.join(","),
            self.center_free_rank,
            self.derived_order,
            self.involutions
        )?;
        if let Some(h) = &self.order_histogram {
            let parts: Vec<String> = h.iter().map(|(k, v)| format!("{k}:{v}")).collect();
            write!(f, " orders=[{}]", parts.join(","))?;
        }
        if let Some(sp) = &self.square_pattern {
            write!(f, " square_trivial={} square_classes={}", sp.trivial_cosets, sp.distinct_classes)?;
        }
        Ok(())
    }
}

/// Exhaustively computed structure of a finite loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableInvariants {
    pub center: Vec<usize>,
    /// Distinct values `(pq) \ (qp)`.
    pub commutators: Vec<usize>,
    /// Distinct values `(p(qr)) \ ((pq)r)`.
    pub associators: Vec<usize>,
    pub derived: Vec<usize>,
    pub element_orders: Vec<u64>,
    pub fingerprint: Fingerprint,
}

pub fn table_invariants(t: &CayleyTable) -> TableInvariants {
    let n = t.n();
    let ldiv = t.left_division();
    let div = |a: usize, b: usize| ldiv[a * n + b] as usize;

    let center = center(t);
    let mut is_center = vec![false; n];
    for &c in &center {
        is_center[c] = true;
    }

    let mut commutators: Vec<usize> = (0..n)
        .flat_map(|p| (0..n).map(move |q| (p, q)))
        .map(|(p, q)| div(t.mul(p, q), t.mul(q, p)))
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    commutators.sort_unstable();
    let mut associators: Vec<usize> = (0..n)
        .into_par_iter()
        .fold(HashSet::new, |mut acc, p| {
            for q in 0..n {
                let pq = t.mul(p, q);
                for r in 0..n {
                    acc.insert(div(t.mul(p, t.mul(q, r)), t.mul(pq, r)));
                }
            }
            acc
        })
        .reduce(HashSet::new, |mut a, b| {
            a.extend(b);
            a
        })
        .into_iter()
        .collect();
    associators.sort_unstable();
    let gens: Vec<usize> = commutators.iter().chain(&associators).copied().collect();
    let derived = subloop_generated(t, &gens);

    let orders = element_orders(t);
    let mut histogram = BTreeMap::new();
    for &o in &orders {
        *histogram.entry(o).or_insert(0u64) += 1;
    }
    let involutions = (0..n).filter(|&p| orders[p] == 2 && !is_center[p]).count() as u64;
    let center_orders: Vec<u64> = center.iter().map(|&c| orders[c]).collect();

    let fingerprint = Fingerprint {
        order: Order::Finite(n as u64),
        center_torsion: abelian_invariants(&center_orders),
        center_free_rank: 0,
        derived_order: derived.len() as u64,
        involutions,
        order_histogram: Some(histogram),
        square_pattern: square_pattern(t, &center, &is_center),
    };
    TableInvariants {
        center,
        commutators,
        associators,
        derived,
        element_orders: orders,
        fingerprint,
    }
}

/// Elementary divisors of a finite abelian group given the orders of all its elements.
pub fn abelian_invariants(orders: &[u64]) -> Vec<u64> {
    let size = orders.len() as u64;
    let mut out = Vec::new();
    for pk in prime_power_parts(size) {
        let p = smallest_prime_factor(pk);
        // dividing[k] = #{g : g^(p^k) = 1}
        let mut dividing = vec![1u64];
        let mut q = 1u64;
        while *dividing.last().unwrap() < pk {
            q *= p;
            dividing.push(orders.iter().filter(|&&o| q.is_multiple_of(o)).count() as u64);
        }
        let ranks: Vec<u32> = dividing.windows(2).map(|w| ilog(w[1] / w[0], p)).collect();
        for (k, &r) in ranks.iter().enumerate() {
            let next = ranks.get(k + 1).copied().unwrap_or(0);
            for _ in 0..r - next {
                out.push(p.pow(k as u32 + 1));
            }
        }
    }
    out.sort_unstable();
    out
}

fn smallest_prime_factor(n: u64) -> u64 {
    (2..=n).find(|d| n.is_multiple_of(*d)).unwrap_or(n)
}

fn ilog(mut x: u64, p: u64) -> u32 {
    let mut k = 0;
    while x > 1 {
        x /= p;
        k += 1;
    }
    k
}

fn square_pattern(t: &CayleyTable, center: &[usize], is_center: &[bool]) -> Option<SquarePattern> {
    let n = t.n();
    let mut coset_of = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for p in 0..n {
        if coset_of[p] != usize::MAX {
            continue;
        }
        for &z in center {
            coset_of[t.mul(p, z)] = reps.len();
        }
        reps.push(p);
    }
    if reps.len() != 8 || reps.len() * center.len() != n {
        return None;
    }
    let center_squares: HashSet<usize> = center.iter().map(|&z| t.mul(z, z)).collect();
    let mut classes = HashSet::new();
    let mut trivial = 0;
    for &v in &reps[1..] {
        let sq = t.mul(v, v);
        if !is_center[sq] {
            return None;
        }
        let class = center_squares.iter().map(|&w| t.mul(sq, w)).min().unwrap();
        if center_squares.contains(&sq) {
            trivial += 1;
        }
        classes.insert(class);
    }
    Some(SquarePattern {
        trivial_cosets: trivial,
        distinct_classes: classes.len() as u8,
    })
}

/// Per-element data preserved by every isomorphism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Signature {
    order: u64,
    central: bool,
    commutant: u32,
    square_order: u64,
}

fn signatures(t: &CayleyTable) -> Vec<Signature> {
    let n = t.n();
    let orders = element_orders(t);
    let mut is_center = vec![false; n];
    for c in center(t) {
        is_center[c] = true;
    }
    (0..n)
        .map(|p| Signature {
            order: orders[p],
            central: is_center[p],
            commutant: (0..n).filter(|&q| t.mul(p, q) == t.mul(q, p)).count() as u32,
            square_order: orders[t.mul(p, p)],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsoOutcome {
    /// `map[i]` is the image in the second table of element `i` of the first.
    pub map: Option<Vec<usize>>,
    /// Search nodes visited; zero when the invariant comparison already refutes.
    pub nodes: u64,
    pub refuted_by_invariants: bool,
}

/// Isomorphism or an exhaustive proof that none exists.
pub fn iso_search(a: &CayleyTable, b: &CayleyTable) -> Option<Vec<usize>> {
    iso_search_with(a, b, true).map
}

/// With `precheck` off, the backtracking runs even when the element
/// invariants already differ.
pub fn iso_search_with(a: &CayleyTable, b: &CayleyTable, precheck: bool) -> IsoOutcome {
    let refuted = IsoOutcome {
        map: None,
        nodes: 0,
        refuted_by_invariants: true,
    };
    if a.n() != b.n() {
        return refuted;
    }
    let n = a.n();
    let sig_a = signatures(a);
    let sig_b = signatures(b);
    if precheck {
        let mut sa = sig_a.clone();
        let mut sb = sig_b.clone();
        sa.sort_unstable();
        sb.sort_unstable();
        if sa != sb {
            return refuted;
        }
    }
    let gens = greedy_generators(a, &sig_a);
    let mut by_sig: HashMap<Signature, Vec<usize>> = HashMap::new();
    for (i, s) in sig_b.iter().enumerate() {
        by_sig.entry(*s).or_default().push(i);
    }
    let ctx = IsoContext {
        a,
        b,
        sig_a: &sig_a,
        sig_b: &sig_b,
        gens: &gens,
        by_sig: &by_sig,
    };
    let root = IsoState::new(n);
    let first = by_sig.get(&sig_a[gens[0]]).cloned().unwrap_or_default();
    let nodes = std::sync::atomic::AtomicU64::new(0);
    let map = first.par_iter().find_map_any(|&cand| {
        let mut st = root.clone();
        let ok = st.assign(&ctx, gens[0], cand);
        let mut local = 1;
        let found = if ok { ctx.descend(&mut st, 1, &mut local) } else { false };
        nodes.fetch_add(local, std::sync::atomic::Ordering::Relaxed);
        found.then(|| st.phi.iter().map(|&v| v as usize).collect::<Vec<_>>())
    });
    if let Some(m) = &map {
        assert!(is_isomorphism(a, b, m), "search produced a non-isomorphism");
    }
    IsoOutcome {
        map,
        nodes: nodes.into_inner(),
        refuted_by_invariants: false,
    }
}

pub fn is_isomorphism(a: &CayleyTable, b: &CayleyTable, map: &[usize]) -> bool {
    let n = a.n();
    if b.n() != n || map.len() != n {
        return false;
    }
    let mut hit = vec![false; n];
    for &m in map {
        if m >= n || hit[m] {
            return false;
        }
        hit[m] = true;
    }
    (0..n).all(|i| (0..n).all(|j| map[a.mul(i, j)] == b.mul(map[i], map[j])))
}

/// Generators chosen to grow the closure fastest, rarest signature first on ties.
fn greedy_generators(t: &CayleyTable, sig: &[Signature]) -> Vec<usize> {
    let n = t.n();
    let mut freq: HashMap<Signature, usize> = HashMap::new();
    for s in sig {
        *freq.entry(*s).or_default() += 1;
    }
    let mut members = vec![false; n];
    let mut list = Vec::new();
    extend_closure(t, &mut members, &mut list, [0]);
    let mut gens = Vec::new();
    while list.len() < n {
        let best = (0..n)
            .into_par_iter()
            .filter(|&g| !members[g])
            .map(|g| {
                let mut m = members.clone();
                let mut l = list.clone();
                extend_closure(t, &mut m, &mut l, [g]);
                (l.len(), std::cmp::Reverse(freq[&sig[g]]), std::cmp::Reverse(g))
            })
            .max()
            .map(|(_, _, std::cmp::Reverse(g))| g)
            .expect("some element lies outside a proper closure");
        extend_closure(t, &mut members, &mut list, [best]);
        gens.push(best);
    }
    if gens.is_empty() {
        gens.push(0);
    }
    gens
}

struct IsoContext<'a> {
    a: &'a CayleyTable,
    b: &'a CayleyTable,
    sig_a: &'a [Signature],
    sig_b: &'a [Signature],
    gens: &'a [usize],
    by_sig: &'a HashMap<Signature, Vec<usize>>,
}

#[derive(Clone)]
struct IsoState {
    phi: Vec<u32>,
    used: Vec<bool>,
    dom: Vec<usize>,
}

impl IsoState {
    fn new(n: usize) -> Self {
        let mut phi = vec![UNSET; n];
        let mut used = vec![false; n];
        phi[0] = 0;
        used[0] = true;
        IsoState {
            phi,
            used,
            dom: vec![0],
        }
    }

    fn undo(&mut self, len: usize) {
        for &x in &self.dom[len..] {
            self.used[self.phi[x] as usize] = false;
            self.phi[x] = UNSET;
        }
        self.dom.truncate(len);
    }

    fn set(&mut self, ctx: &IsoContext, x: usize, y: usize) -> bool {
        if self.phi[x] != UNSET {
            return self.phi[x] as usize == y;
        }
        if self.used[y] || ctx.sig_a[x] != ctx.sig_b[y] {
            return false;
        }
        self.phi[x] = y as u32;
        self.used[y] = true;
        self.dom.push(x);
        true
    }

    /// Maps `x` to `y` and propagates through all products; on failure the
    /// caller undoes to its saved length.
    fn assign(&mut self, ctx: &IsoContext, x: usize, y: usize) -> bool {
        let mut q = self.dom.len();
        if !self.set(ctx, x, y) {
            return false;
        }
        while q < self.dom.len() {
            let p = self.dom[q];
            let fp = self.phi[p] as usize;
            let mut k = 0;
            while k <= q {
                let r = self.dom[k];
                let fr = self.phi[r] as usize;
                if !self.set(ctx, ctx.a.mul(p, r), ctx.b.mul(fp, fr))
                    || !self.set(ctx, ctx.a.mul(r, p), ctx.b.mul(fr, fp))
                {
                    return false;
                }
                k += 1;
            }
            q += 1;
        }
        true
    }
}

impl IsoContext<'_> {
    fn descend(&self, st: &mut IsoState, level: usize, nodes: &mut u64) -> bool {
        if level == self.gens.len() {
            return st.dom.len() == self.a.n();
        }
        let g = self.gens[level];
        if st.phi[g] != UNSET {
            return self.descend(st, level + 1, nodes);
        }
        let Some(cands) = self.by_sig.get(&self.sig_a[g]) else {
            return false;
        };
        for &c in cands {
            if st.used[c] {
                continue;
            }
            *nodes += 1;
            let len = st.dom.len();
            if st.assign(self, g, c) && self.descend(st, level + 1, nodes) {
                return true;
            }
            st.undo(len);
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecompositionVerdict {
    /// `L = A x B` as an internal direct product; both sorted.
    Decomposable { a: Vec<usize>, b: Vec<usize> },
    Indecomposable,
    Undecided { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecompositionBudget {
    pub max_order: usize,
    pub max_nodes: u64,
}

impl Default for DecompositionBudget {
    fn default() -> Self {
        DecompositionBudget {
            max_order: 64,
            max_nodes: 5_000_000,
        }
    }
}

/// Searches for proper subloops `A`, `B` with `L = A x B`.
///
/// One factor has order at most `sqrt(n)`; all such subloops `B` are
/// enumerated, and for each a complement `A` is built one `B`-coset at a
/// time from elements commuting with `B`.
pub fn decomposability_check(t: &CayleyTable, budget: DecompositionBudget) -> DecompositionVerdict {
    let n = t.n();
    if n > budget.max_order {
        return DecompositionVerdict::Undecided {
            reason: format!("order {n} exceeds the search bound {}", budget.max_order),
        };
    }
    if n < 4 {
        return DecompositionVerdict::Indecomposable;
    }
    let small = small_subloops(t, (n as f64).sqrt().floor() as usize);
    let mut nodes = 0u64;
    for b in small.iter().filter(|b| b.len() > 1 && n.is_multiple_of(b.len())) {
        match complement(t, b, &mut nodes, budget.max_nodes) {
            Some(Some(a)) => {
                return DecompositionVerdict::Decomposable { a, b: b.clone() };
            }
            Some(None) => {}
            None => {
                return DecompositionVerdict::Undecided {
                    reason: format!("node budget {} exhausted", budget.max_nodes),
                }
            }
        }
    }
    DecompositionVerdict::Indecomposable
}

/// Every subloop of order at most `bound`, each given sorted.
fn small_subloops(t: &CayleyTable, bound: usize) -> Vec<Vec<usize>> {
    let n = t.n();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut frontier = vec![vec![0usize]];
    seen.insert(vec![0]);
    while let Some(s) = frontier.pop() {
        for g in 0..n {
            if s.binary_search(&g).is_ok() {
                continue;
            }
            let mut gens = s.clone();
            gens.push(g);
            let bigger = subloop_generated(t, &gens);
            if bigger.len() <= bound && seen.insert(bigger.clone()) {
                frontier.push(bigger);
            }
        }
    }
    let mut out: Vec<Vec<usize>> = seen.into_iter().collect();
    out.sort();
    out
}

/// `Some(Some(a))` on success, `Some(None)` when no complement exists,
/// `None` when the node budget runs out.
fn complement(t: &CayleyTable, b: &[usize], nodes: &mut u64, max_nodes: u64) -> Option<Option<Vec<usize>>> {
    let n = t.n();
    let target = n / b.len();
    let commutant: Vec<bool> = (0..n)
        .map(|g| b.iter().all(|&x| t.mul(g, x) == t.mul(x, g)))
        .collect();
    if commutant.iter().filter(|&&c| c).count() < target {
        return Some(None);
    }
    let mut in_b = vec![false; n];
    for &x in b {
        in_b[x] = true;
    }
    let mut members = vec![false; n];
    let mut list = Vec::new();
    extend_closure(t, &mut members, &mut list, [0]);
    complement_step(t, b, &in_b, &commutant, target, &members, &list, nodes, max_nodes)
}

#[allow(clippy::too_many_arguments)]
fn complement_step(
    t: &CayleyTable,
    b: &[usize],
    in_b: &[bool],
    commutant: &[bool],
    target: usize,
    members: &[bool],
    list: &[usize],
    nodes: &mut u64,
    max_nodes: u64,
) -> Option<Option<Vec<usize>>> {
    let n = t.n();
    if list.len() == target {
        let mut a = list.to_vec();
        a.sort_unstable();
        return Some(is_internal_product(t, &a, b).then_some(a));
    }
    // smallest element not yet covered by A*B
    let mut covered = vec![false; n];
    for &x in list {
        for &y in b {
            covered[t.mul(x, y)] = true;
        }
    }
    let g = (0..n).find(|&g| !covered[g])?;
    for &y in b {
        let cand = t.mul(g, y);
        if !commutant[cand] || members[cand] {
            continue;
        }
        *nodes += 1;
        if *nodes > max_nodes {
            return None;
        }
        let mut m = members.to_vec();
        let mut l = list.to_vec();
        extend_closure(t, &mut m, &mut l, [cand]);
        if l.len() > target || l.iter().any(|&x| x != 0 && in_b[x]) {
            continue;
        }
        match complement_step(t, b, in_b, commutant, target, &m, &l, nodes, max_nodes) {
            Some(None) => {}
            other => return other,
        }
    }
    Some(None)
}

/// `(a1 b1)(a2 b2) = (a1 a2)(b1 b2)` for all choices and `A B` covers `L`.
pub fn is_internal_product(t: &CayleyTable, a: &[usize], b: &[usize]) -> bool {
    let n = t.n();
    if a.len() * b.len() != n {
        return false;
    }
    let mut hit = vec![false; n];
    for &x in a {
        for &y in b {
            let p = t.mul(x, y);
            if hit[p] {
                return false;
            }
            hit[p] = true;
        }
    }
    a.par_iter().all(|&a1| {
        b.iter().all(|&b1| {
            let p = t.mul(a1, b1);
            a.iter().all(|&a2| {
                let a12 = t.mul(a1, a2);
                b.iter().all(|&b2| t.mul(p, t.mul(a2, b2)) == t.mul(a12, t.mul(b1, b2)))
            })
        })
    })
}
