//! Combinatorial generalized equations: bases, boundary connections,
//! sections, the equations they induce, and solutions over Λ-words.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::abelian::{self, smith_normal_form};
use crate::error::{Error, Result};
use crate::ordered::{Height, LambdaScalar};
use crate::words::LambdaWord;

/// A word in signed item indices: `k` stands for `h_k`, `-k` for `h_k⁻¹`.
pub type ItemWord = Vec<i32>;

pub fn inverse_item_word(w: &[i32]) -> ItemWord {
    w.iter().rev().map(|&x| -x).collect()
}

/// Free reduction of an item word.
pub fn reduce_item_word(w: &[i32]) -> ItemWord {
    let mut out: ItemWord = Vec::with_capacity(w.len());
    for &x in w {
        if out.last() == Some(&-x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}

pub fn format_item_word(w: &[i32]) -> String {
    if w.is_empty() {
        return "1".into();
    }
    w.iter()
        .map(|&x| if x > 0 { format!("h{x}") } else { format!("h{}^-1", -x) })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses `h1 h2^-1 …` (or `1` for the empty word).
pub fn parse_item_word(s: &str) -> Result<ItemWord> {
    let mut out = Vec::new();
    for tok in s.split_whitespace() {
        if tok == "1" {
            continue;
        }
        let (name, inv) = match tok.strip_suffix("^-1") {
            Some(n) => (n, true),
            None => (tok, false),
        };
        let k: i32 = name
            .strip_prefix('h')
            .and_then(|n| n.parse().ok())
            .filter(|&k| k > 0)
            .ok_or_else(|| Error::Parse(format!("bad item `{tok}`")))?;
        out.push(if inv { -k } else { k });
    }
    Ok(out)
}

/// The word `h_from … h_{to−1}`.
pub fn item_range(from: usize, to: usize) -> ItemWord {
    (from..to).map(|i| i as i32).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Base {
    pub id: String,
    pub epsilon: i8,
    pub alpha: usize,
    pub beta: usize,
    pub dual: String,
}

impl Base {
    pub fn new(id: &str, alpha: usize, beta: usize, dual: &str) -> Self {
        let epsilon = if alpha < beta { 1 } else { -1 };
        Base { id: id.into(), epsilon, alpha, beta, dual: dual.into() }
    }

    pub fn left(&self) -> usize {
        self.alpha.min(self.beta)
    }

    pub fn right(&self) -> usize {
        self.alpha.max(self.beta)
    }

    pub fn contains_item(&self, i: usize) -> bool {
        self.left() <= i && i < self.right()
    }

    pub fn strictly_inside(&self, b: usize) -> bool {
        self.left() < b && b < self.right()
    }

    pub fn is_endpoint(&self, b: usize) -> bool {
        b == self.alpha || b == self.beta
    }

    /// Item word `h[left, right)^ε`.
    pub fn reading(&self) -> ItemWord {
        let w = item_range(self.left(), self.right());
        if self.epsilon == 1 {
            w
        } else {
            inverse_item_word(&w)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Connection {
    pub p: usize,
    pub lambda: String,
    pub q: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Section {
    pub start: usize,
    pub end: usize,
    pub active: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenEq {
    pub rank: usize,
    pub rho: usize,
    pub bases: Vec<Base>,
    pub connections: Vec<Connection>,
    pub sections: Vec<Section>,
    #[serde(default)]
    pub heights: BTreeMap<usize, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EquationKind {
    Basic { base: String, dual: String },
    Boundary { p: usize, base: String, q: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DerivedEquation {
    #[serde(flatten)]
    pub kind: EquationKind,
    pub left: ItemWord,
    pub right: ItemWord,
}

impl DerivedEquation {
    pub fn relator(&self) -> ItemWord {
        let mut r = self.left.clone();
        r.extend(inverse_item_word(&self.right));
        r
    }
}

impl fmt::Display for DerivedEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", format_item_word(&self.left), format_item_word(&self.right))
    }
}

/// `⟨h₁..h_ρ | relators⟩`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Presentation {
    pub generators: usize,
    pub relators: Vec<ItemWord>,
}

impl Presentation {
    pub fn abelian_rank(&self) -> usize {
        abelian::abelian_rank(self.generators, &self.relators)
    }

    /// Invariant factors of the abelianization: free rank and torsion.
    pub fn abelianization(&self) -> (usize, Vec<BigInt>) {
        let rows: Vec<Vec<BigInt>> =
            self.relators.iter().map(|r| abelian::exponent_row(r, self.generators)).collect();
        let s = smith_normal_form(&rows, self.generators);
        (self.generators - s.rank(), s.torsion())
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = (1..=self.generators).map(|i| format!("h{i}")).collect();
        let rels: Vec<String> = self.relators.iter().map(|r| format_item_word(r)).collect();
        write!(f, "< {} | {} >", gens.join(", "), rels.join(", "))
    }
}

/// Homogeneous integer equations over the item lengths.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinearSystem {
    pub vars: usize,
    pub rows: Vec<Vec<i64>>,
}

impl LinearSystem {
    pub fn satisfied_by(&self, lengths: &[LambdaScalar]) -> bool {
        let rank = lengths.first().map_or(1, LambdaScalar::rank);
        self.rows.iter().all(|row| {
            let mut acc = LambdaScalar::zero(rank);
            for (c, l) in row.iter().zip(lengths) {
                acc = &acc + &(&BigInt::from(*c) * l);
            }
            acc.is_zero()
        })
    }

    fn rank_of(rows: &[Vec<i64>], vars: usize) -> usize {
        let big: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        smith_normal_form(&big, vars).rank()
    }

    /// Whether `row · x = 0` follows from the system over `ℚ`.
    pub fn implies(&self, row: &[i64]) -> bool {
        let mut ext = self.rows.clone();
        ext.push(row.to_vec());
        Self::rank_of(&self.rows, self.vars) == Self::rank_of(&ext, self.vars)
    }

    pub fn rank(&self) -> usize {
        Self::rank_of(&self.rows, self.vars)
    }
}

/// Item counts `(ρ_A, n_A)`, per-item coverage and the complexity `τ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Complexity {
    pub tau: usize,
    pub rho_active: usize,
    pub n_active: usize,
    pub gamma: Vec<usize>,
}

/// An assignment `h_i ↦ u_i`; `items[0]` is `u_1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Solution {
    pub rank: usize,
    pub items: Vec<LambdaWord>,
}

impl Solution {
    pub fn new(rank: usize, items: Vec<LambdaWord>) -> Self {
        Solution { rank, items }
    }

    pub fn item(&self, i: usize) -> &LambdaWord {
        &self.items[i - 1]
    }

    pub fn lengths(&self) -> Vec<LambdaScalar> {
        self.items.iter().map(|w| w.len().clone()).collect()
    }

    /// Evaluates an item word by plain concatenation; the flag reports
    /// whether every junction was reduced.
    pub fn eval(&self, w: &[i32]) -> Result<(LambdaWord, bool)> {
        let mut acc = LambdaWord::empty(self.rank);
        let mut reduced = true;
        for &x in w {
            let k = x.unsigned_abs() as usize;
            let u = self
                .items
                .get(k.wrapping_sub(1))
                .ok_or_else(|| Error::OutOfRange(format!("item h{k} not assigned")))?;
            let piece = if x > 0 { u.clone() } else { u.inverse() };
            if let (Some(a), Some(b)) = (acc.last_letter(), piece.first_letter()) {
                if a.is_inverse_of(b) {
                    reduced = false;
                }
            }
            acc = acc.concat(&piece);
        }
        Ok((acc, reduced))
    }

    /// Evaluates with `∗`, i.e. in the free Λ-group.
    pub fn eval_reduced(&self, w: &[i32]) -> Result<LambdaWord> {
        let mut acc = LambdaWord::empty(self.rank);
        for &x in w {
            let k = x.unsigned_abs() as usize;
            let u = self
                .items
                .get(k.wrapping_sub(1))
                .ok_or_else(|| Error::OutOfRange(format!("item h{k} not assigned")))?;
            let piece = if x > 0 { u.clone() } else { u.inverse() };
            acc = crate::words::mult(&acc, &piece)?;
        }
        Ok(acc)
    }

    /// Lines `h<i> = <word>`; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, rank: usize) -> Result<Self> {
        let mut map = BTreeMap::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (lhs, rhs) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected `h<i> = word`, got `{line}`")))?;
            let k: usize = lhs
                .trim()
                .strip_prefix('h')
                .and_then(|n| n.parse().ok())
                .filter(|&k| k > 0)
                .ok_or_else(|| Error::Parse(format!("bad item name `{}`", lhs.trim())))?;
            if map.insert(k, LambdaWord::parse(rhs.trim(), rank)?).is_some() {
                return Err(Error::Parse(format!("h{k} assigned twice")));
            }
        }
        let n = map.len();
        if map.keys().copied().ne(1..=n) {
            return Err(Error::Parse("items must be assigned as h1..hn without gaps".into()));
        }
        Ok(Solution { rank, items: map.into_values().collect() })
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, u) in self.items.iter().enumerate() {
            writeln!(f, "h{} = {}", i + 1, u)?;
        }
        Ok(())
    }
}

/// `(i, ε, j, δ)` belongs to the table when `u_i^ε ∗ u_j^δ` cancels.
pub type CancellationTable = BTreeSet<(usize, i8, usize, i8)>;

pub fn cancellation_table(u: &Solution) -> CancellationTable {
    let n = u.items.len();
    let ends: Vec<[(Option<crate::words::Letter>, Option<crate::words::Letter>); 2]> = u
        .items
        .iter()
        .map(|w| {
            let inv = w.inverse();
            [
                (w.first_letter().cloned(), w.last_letter().cloned()),
                (inv.first_letter().cloned(), inv.last_letter().cloned()),
            ]
        })
        .collect();
    let mut table = CancellationTable::new();
    for i in 0..n {
        for (si, e) in [(0usize, 1i8), (1, -1)] {
            for j in 0..n {
                for (sj, d) in [(0usize, 1i8), (1, -1)] {
                    if i == j && e != d {
                        continue;
                    }
                    if let (Some(a), Some(b)) = (&ends[i][si].1, &ends[j][sj].0) {
                        if a.is_inverse_of(b) {
                            table.insert((i + 1, e, j + 1, d));
                        }
                    }
                }
            }
        }
    }
    table
}

/// `C(U⁺) ⊆ C(U)`.
pub fn consistent(u_plus: &Solution, u: &Solution) -> bool {
    cancellation_table(u_plus).is_subset(&cancellation_table(u))
}

impl GenEq {
    /// `ρ` items, no bases, one active section.
    pub fn new(rank: usize, rho: usize) -> Self {
        let sections = if rho > 0 { vec![Section { start: 1, end: rho + 1, active: true }] } else { vec![] };
        GenEq { rank, rho, bases: vec![], connections: vec![], sections, heights: BTreeMap::new() }
    }

    pub fn base(&self, id: &str) -> Option<&Base> {
        self.bases.iter().find(|b| b.id == id)
    }

    pub fn base_index(&self, id: &str) -> Option<usize> {
        self.bases.iter().position(|b| b.id == id)
    }

    pub fn require_base(&self, id: &str) -> Result<&Base> {
        self.base(id).ok_or_else(|| Error::Precondition(format!("no base `{id}`")))
    }

    pub fn dual_of(&self, b: &Base) -> Result<&Base> {
        self.base(&b.dual).ok_or_else(|| Error::Structure(format!("dual `{}` of `{}` missing", b.dual, b.id)))
    }

    /// Adds the pair `λ`, `λ̄` with the given `(α, β)` endpoints.
    pub fn add_pair(&mut self, id: &str, a: (usize, usize), dual: &str, b: (usize, usize)) {
        self.bases.push(Base::new(id, a.0, a.1, dual));
        self.bases.push(Base::new(dual, b.0, b.1, id));
    }

    /// Adds `(p, λ, q)` and its mirror `(q, λ̄, p)`.
    pub fn add_connection(&mut self, p: usize, lambda: &str, q: usize) -> Result<()> {
        let dual = self.require_base(lambda)?.dual.clone();
        for c in [
            Connection { p, lambda: lambda.into(), q },
            Connection { p: q, lambda: dual, q: p },
        ] {
            if !self.connections.contains(&c) {
                self.connections.push(c);
            }
        }
        Ok(())
    }

    pub fn fresh_id(&self, stem: &str) -> String {
        if self.base(stem).is_none() {
            return stem.to_string();
        }
        (1..).map(|k| format!("{stem}.{k}")).find(|c| self.base(c).is_none()).unwrap()
    }

    /// A boundary is open when it lies strictly inside some base.
    pub fn is_closed(&self, b: usize) -> bool {
        !self.bases.iter().any(|m| m.strictly_inside(b))
    }

    /// Number of bases containing `h_i`.
    pub fn gamma(&self, i: usize) -> usize {
        self.bases.iter().filter(|b| b.contains_item(i)).count()
    }

    pub fn is_free(&self, i: usize) -> bool {
        self.gamma(i) == 0
    }

    pub fn section_of_item(&self, i: usize) -> Option<usize> {
        self.sections.iter().position(|s| s.start <= i && i < s.end)
    }

    pub fn section_of_base(&self, b: &Base) -> Option<usize> {
        self.section_of_item(b.left())
    }

    pub fn is_active_item(&self, i: usize) -> bool {
        self.section_of_item(i).is_some_and(|s| self.sections[s].active)
    }

    pub fn is_active_base(&self, b: &Base) -> bool {
        self.is_active_item(b.left())
    }

    /// `λ` and `λ̄` occupy the same interval.
    pub fn is_matched(&self, b: &Base) -> bool {
        self.base(&b.dual).is_some_and(|d| d.left() == b.left() && d.right() == b.right())
    }

    /// The boundary `q` with `(p, λ, q)` present, if any.
    pub fn tie(&self, p: usize, lambda: &str) -> Option<usize> {
        self.connections.iter().find(|c| c.p == p && c.lambda == lambda).map(|c| c.q)
    }

    /// Image on `λ̄` of a boundary `b ∈ [left(λ), right(λ)]`, if determined.
    pub fn image_on_dual(&self, b: usize, lambda: &Base) -> Option<usize> {
        let dual = self.base(&lambda.dual)?;
        if b == lambda.alpha {
            Some(dual.alpha)
        } else if b == lambda.beta {
            Some(dual.beta)
        } else {
            self.tie(b, &lambda.id)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if self.rank == 0 {
            v.push("rank: must be at least 1".to_string());
        }
        let ids: HashSet<&str> = self.bases.iter().map(|b| b.id.as_str()).collect();
        if ids.len() != self.bases.len() {
            v.push("base ids: duplicate id".to_string());
        }
        let last = self.rho + 1;
        for b in &self.bases {
            if b.epsilon != 1 && b.epsilon != -1 {
                v.push(format!("epsilon: base `{}` has ε = {}", b.id, b.epsilon));
            }
            if b.alpha < 1 || b.alpha > last || b.beta < 1 || b.beta > last {
                v.push(format!("boundary range: base `{}` = [{}, {}] outside [1, {last}]", b.id, b.alpha, b.beta));
            }
            if b.alpha == b.beta {
                v.push(format!("orientation: base `{}` is empty", b.id));
            } else if (b.alpha < b.beta) != (b.epsilon == 1) {
                v.push(format!(
                    "orientation: base `{}` has ε = {} but α = {}, β = {}",
                    b.id, b.epsilon, b.alpha, b.beta
                ));
            }
            match self.base(&b.dual) {
                None => v.push(format!("dual involution: base `{}` has missing dual `{}`", b.id, b.dual)),
                Some(d) if d.id == b.id => v.push(format!("dual involution: base `{}` is its own dual", b.id)),
                Some(d) if d.dual != b.id => {
                    v.push(format!("dual involution: dual of `{}` is `{}` whose dual is `{}`", b.id, d.id, d.dual))
                }
                Some(d) => {
                    if d.left() == b.left() && d.right() == b.right() && d.epsilon != b.epsilon {
                        v.push(format!("matched pair `{}`/`{}` with opposite ε has no solution", b.id, d.id));
                    }
                }
            }
        }
        let conns: HashSet<&Connection> = self.connections.iter().collect();
        for c in &self.connections {
            let Some(l) = self.base(&c.lambda) else {
                v.push(format!("connection ({}, {}, {}): unknown base", c.p, c.lambda, c.q));
                continue;
            };
            if !l.strictly_inside(c.p) {
                v.push(format!("connection ({}, {}, {}): p not strictly inside the base", c.p, c.lambda, c.q));
            }
            if let Some(d) = self.base(&l.dual) {
                if !d.strictly_inside(c.q) {
                    v.push(format!("connection ({}, {}, {}): q not strictly inside the dual", c.p, c.lambda, c.q));
                }
                let mirror = Connection { p: c.q, lambda: d.id.clone(), q: c.p };
                if !conns.contains(&mirror) {
                    v.push(format!("connection ({}, {}, {}): mirror ({}, {}, {}) missing", c.p, c.lambda, c.q, c.q, d.id, c.p));
                }
            }
        }
        if self.rho == 0 {
            if !self.sections.is_empty() {
                v.push("sections: equation without items has sections".into());
            }
        } else {
            let mut at = 1;
            for s in &self.sections {
                if s.start != at || s.end <= s.start {
                    v.push(format!("sections: [{}, {}] breaks the partition of [1, {last}]", s.start, s.end));
                }
                at = s.end;
            }
            if at != last {
                v.push(format!("sections: partition ends at {at}, expected {last}"));
            }
            for s in &self.sections {
                for e in [s.start, s.end] {
                    if !self.is_closed(e) {
                        v.push(format!("sections: boundary {e} of [{}, {}] is not closed", s.start, s.end));
                    }
                }
            }
        }
        for &i in self.heights.keys() {
            if i < 1 || i > self.rho {
                v.push(format!("heights: item h{i} out of range"));
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }

    /// One basic equation per dual pair, then one boundary equation per
    /// mirrored pair of connections.
    pub fn derive(&self) -> Vec<DerivedEquation> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for b in &self.bases {
            if seen.contains(&b.dual) {
                continue;
            }
            seen.insert(b.id.clone());
            let Some(d) = self.base(&b.dual) else { continue };
            out.push(DerivedEquation {
                kind: EquationKind::Basic { base: b.id.clone(), dual: d.id.clone() },
                left: b.reading(),
                right: d.reading(),
            });
        }
        let mut done = HashSet::new();
        for c in &self.connections {
            let Some(l) = self.base(&c.lambda) else { continue };
            let Some(d) = self.base(&l.dual) else { continue };
            if done.contains(&(c.q, d.id.clone(), c.p)) {
                continue;
            }
            done.insert((c.p, c.lambda.clone(), c.q));
            let left = item_range(l.left(), c.p);
            let right = if l.epsilon == d.epsilon {
                item_range(d.left(), c.q)
            } else {
                inverse_item_word(&item_range(c.q, d.right()))
            };
            out.push(DerivedEquation {
                kind: EquationKind::Boundary { p: c.p, base: c.lambda.clone(), q: c.q },
                left,
                right,
            });
        }
        out
    }

    pub fn presentation(&self) -> Presentation {
        Presentation { generators: self.rho, relators: self.derive().iter().map(DerivedEquation::relator).collect() }
    }

    pub fn linear_system(&self) -> LinearSystem {
        let rows = self
            .derive()
            .iter()
            .map(|e| {
                let mut row = vec![0i64; self.rho];
                for &x in &e.left {
                    row[x.unsigned_abs() as usize - 1] += 1;
                }
                for &x in &e.right {
                    row[x.unsigned_abs() as usize - 1] -= 1;
                }
                row
            })
            .filter(|r| r.iter().any(|&x| x != 0))
            .collect();
        LinearSystem { vars: self.rho, rows }
    }

    pub fn verify_solution(&self, u: &Solution) -> Result<()> {
        if u.items.len() != self.rho {
            return Err(Error::Verification(format!("solution has {} items, equation has {}", u.items.len(), self.rho)));
        }
        if u.rank != self.rank {
            return Err(Error::RankMismatch { left: self.rank, right: u.rank });
        }
        for (i, w) in u.items.iter().enumerate() {
            if w.is_empty() {
                return Err(Error::Verification(format!("h{} is empty", i + 1)));
            }
            if !w.is_reduced() {
                return Err(Error::Verification(format!("h{} = {w} is not reduced", i + 1)));
            }
        }
        for (k, e) in self.derive().iter().enumerate() {
            let (l, lr) = u.eval(&e.left)?;
            let (r, rr) = u.eval(&e.right)?;
            if !lr {
                return Err(Error::Verification(format!("equation {} ({e}): left side not reduced", k + 1)));
            }
            if !rr {
                return Err(Error::Verification(format!("equation {} ({e}): right side not reduced", k + 1)));
            }
            if l != r {
                return Err(Error::Verification(format!("equation {} ({e}): sides differ: {l} ≠ {r}", k + 1)));
            }
        }
        Ok(())
    }

    pub fn complexity(&self) -> Complexity {
        let gamma: Vec<usize> = (1..=self.rho).map(|i| self.gamma(i)).collect();
        let mut tau = 0;
        let mut rho_active = 0;
        let mut n_active = 0;
        for s in self.sections.iter().filter(|s| s.active) {
            let n = self.bases.iter().filter(|b| s.start <= b.left() && b.right() <= s.end).count();
            tau += n.saturating_sub(2);
            n_active += n;
            rho_active += s.end - s.start;
        }
        Complexity { tau, rho_active, n_active, gamma }
    }

    pub fn tau(&self) -> usize {
        self.complexity().tau
    }

    /// Declared height of an item, or the height of its length under `lengths`.
    pub fn item_height(&self, i: usize, lengths: Option<&[LambdaScalar]>) -> Option<Height> {
        if let Some(l) = lengths {
            return l.get(i - 1).map(LambdaScalar::height);
        }
        self.heights.get(&i).map(|&h| Height(h))
    }

    /// Applies a boundary renumbering to every stored position.
    pub fn renumber(&mut self, f: impl Fn(usize) -> usize) {
        for b in &mut self.bases {
            b.alpha = f(b.alpha);
            b.beta = f(b.beta);
        }
        for c in &mut self.connections {
            c.p = f(c.p);
            c.q = f(c.q);
        }
        for s in &mut self.sections {
            s.start = f(s.start);
            s.end = f(s.end);
        }
    }

    /// Splits stored sections so that `b` is a section endpoint.
    pub fn split_section_at(&mut self, b: usize) {
        if let Some(k) = self.sections.iter().position(|s| s.start < b && b < s.end) {
            let s = self.sections[k].clone();
            self.sections[k].end = b;
            self.sections.insert(k + 1, Section { start: b, end: s.end, active: s.active });
        }
    }

    /// A structural fingerprint independent of base ids.
    pub fn canonical_key(&self) -> String {
        let mut order: Vec<usize> = (0..self.bases.len()).collect();
        order.sort_by_key(|&k| {
            let b = &self.bases[k];
            (b.alpha, b.beta, b.id.clone())
        });
        let pos: BTreeMap<&str, usize> = order.iter().enumerate().map(|(r, &k)| (self.bases[k].id.as_str(), r)).collect();
        let mut s = format!("{};", self.rho);
        for &k in &order {
            let b = &self.bases[k];
            s += &format!("{},{},{};", b.alpha, b.beta, pos.get(b.dual.as_str()).copied().unwrap_or(usize::MAX));
        }
        let mut conns: Vec<(usize, usize, usize)> =
            self.connections.iter().map(|c| (c.p, pos.get(c.lambda.as_str()).copied().unwrap_or(usize::MAX), c.q)).collect();
        conns.sort();
        s += &format!("{conns:?};");
        for sec in &self.sections {
            s += &format!("{}-{}{};", sec.start, sec.end, if sec.active { 'a' } else { 'n' });
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("geq rank={} items={}\n", self.rank, self.rho);
        for b in &self.bases {
            s += &format!("base {} {} {} {:+} dual {}\n", b.id, b.alpha, b.beta, b.epsilon, b.dual);
        }
        for c in &self.connections {
            s += &format!("conn {} {} {}\n", c.p, c.lambda, c.q);
        }
        for sec in &self.sections {
            s += &format!("section {} {} {}\n", sec.start, sec.end, if sec.active { "active" } else { "nonactive" });
        }
        for (i, h) in &self.heights {
            s += &format!("height h{i} {h}\n");
        }
        s
    }

    /// Parses the line-oriented text format. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut header = None;
        let mut bases = Vec::new();
        let mut connections = Vec::new();
        let mut sections = Vec::new();
        let mut heights = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: {what}: `{line}`", n + 1));
            let num = |t: &str| t.parse::<usize>().map_err(|_| bad("expected a number"));
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "geq" => {
                    let mut rank = None;
                    let mut items = None;
                    for t in &toks[1..] {
                        match t.split_once('=') {
                            Some(("rank", v)) => rank = Some(num(v)?),
                            Some(("items", v)) => items = Some(num(v)?),
                            _ => return Err(bad("unknown header field")),
                        }
                    }
                    header = Some((rank.ok_or_else(|| bad("missing rank"))?, items.ok_or_else(|| bad("missing items"))?));
                }
                "base" => {
                    if toks.len() != 7 || toks[5] != "dual" {
                        return Err(bad("expected `base <id> <α> <β> <±1> dual <id>`"));
                    }
                    let epsilon: i8 = toks[4].parse().map_err(|_| bad("bad ε"))?;
                    bases.push(Base {
                        id: toks[1].into(),
                        epsilon,
                        alpha: num(toks[2])?,
                        beta: num(toks[3])?,
                        dual: toks[6].into(),
                    });
                }
                "conn" => {
                    if toks.len() != 4 {
                        return Err(bad("expected `conn <p> <base> <q>`"));
                    }
                    connections.push(Connection { p: num(toks[1])?, lambda: toks[2].into(), q: num(toks[3])? });
                }
                "section" => {
                    if toks.len() != 4 {
                        return Err(bad("expected `section <a> <b> active|nonactive`"));
                    }
                    let active = match toks[3] {
                        "active" => true,
                        "nonactive" | "non-active" => false,
                        _ => return Err(bad("section flag")),
                    };
                    sections.push(Section { start: num(toks[1])?, end: num(toks[2])?, active });
                }
                "height" => {
                    if toks.len() != 3 {
                        return Err(bad("expected `height h<i> <level>`"));
                    }
                    let i = toks[1].strip_prefix('h').ok_or_else(|| bad("item name"))?;
                    let h = toks[2].trim_start_matches('[').trim_end_matches(']');
                    heights.insert(num(i)?, num(h)?);
                }
                _ => return Err(bad("unknown directive")),
            }
        }
        let (rank, rho) = header.ok_or_else(|| Error::Parse("missing `geq rank=.. items=..` header".into()))?;
        if sections.is_empty() && rho > 0 {
            sections.push(Section { start: 1, end: rho + 1, active: true });
        }
        Ok(GenEq { rank, rho, bases, connections, sections, heights })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("GenEq serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Accepts either format, detected by the first non-blank character.
    pub fn parse_any(s: &str) -> Result<Self> {
        if s.trim_start().starts_with('{') {
            Self::from_json(s)
        } else {
            Self::from_text(s)
        }
    }
}

impl fmt::Display for GenEq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> LambdaWord {
        LambdaWord::parse(s, 2).unwrap()
    }

    fn sol(items: &[&str]) -> Solution {
        Solution::new(2, items.iter().map(|s| w(s)).collect())
    }

    fn two_base() -> GenEq {
        let mut g = GenEq::new(2, 4);
        g.add_pair("mu", (1, 3), "mub", (3, 5));
        g
    }

    #[test]
    fn basic_and_boundary_equations() {
        let g = two_base();
        g.validate().unwrap();
        let eqs = g.derive();
        assert_eq!(eqs.len(), 1);
        assert_eq!(eqs[0].left, vec![1, 2]);
        assert_eq!(eqs[0].right, vec![3, 4]);

        let mut g = two_base();
        g.add_connection(2, "mu", 4).unwrap();
        g.validate().unwrap();
        let eqs = g.derive();
        assert_eq!(eqs.len(), 2);
        assert_eq!((eqs[1].left.clone(), eqs[1].right.clone()), (vec![1], vec![3]));
    }

    #[test]
    fn reversed_dual() {
        let mut g = GenEq::new(2, 4);
        g.add_pair("mu", (1, 3), "mub", (5, 3));
        g.validate().unwrap();
        let eqs = g.derive();
        assert_eq!(eqs[0].left, vec![1, 2]);
        assert_eq!(eqs[0].right, inverse_item_word(&[3, 4]));
        g.add_connection(2, "mu", 4).unwrap();
        let eqs = g.derive();
        assert_eq!(eqs[1].left, vec![1]);
        assert_eq!(eqs[1].right, vec![-4]);
        let u = sol(&["x", "y", "y^-1", "x^-1"]);
        g.verify_solution(&u).unwrap();
    }

    #[test]
    fn violations() {
        let mut g = two_base();
        g.bases[0].epsilon = 1;
        g.bases[0].alpha = 3;
        g.bases[0].beta = 1;
        assert!(matches!(g.validate(), Err(Error::Invalid(v)) if v.iter().any(|m| m.starts_with("orientation"))));
        let mut g = two_base();
        g.connections.push(Connection { p: 2, lambda: "mu".into(), q: 4 });
        assert!(matches!(g.validate(), Err(Error::Invalid(v)) if v.iter().any(|m| m.contains("mirror"))));
        let mut g = two_base();
        g.sections = vec![Section { start: 1, end: 2, active: true }, Section { start: 2, end: 5, active: true }];
        assert!(matches!(g.validate(), Err(Error::Invalid(v)) if v.iter().any(|m| m.contains("not closed"))));
    }

    #[test]
    fn presentations() {
        let g = GenEq::new(1, 2);
        let p = g.presentation();
        assert!(p.relators.is_empty());
        assert_eq!(p.abelian_rank(), 2);
        let mut g = GenEq::new(1, 2);
        g.add_pair("a", (1, 3), "b", (1, 3));
        g.validate().unwrap();
        assert_eq!(g.presentation().relators, vec![vec![1, 2, -2, -1]]);
        assert_eq!(reduce_item_word(&g.presentation().relators[0]), Vec::<i32>::new());
    }

    #[test]
    fn verification() {
        let g = two_base();
        g.verify_solution(&sol(&["x", "y", "x", "y"])).unwrap();
        let e = g.verify_solution(&sol(&["x", "x^-1", "x", "x^-1"])).unwrap_err();
        assert!(e.to_string().contains("not reduced"), "{e}");
        let mut g = two_base();
        g.add_connection(2, "mu", 4).unwrap();
        let e = g.verify_solution(&sol(&["x", "y", "y", "x"])).unwrap_err();
        assert!(e.to_string().contains("differ"), "{e}");
    }

    #[test]
    fn cancellation_tables() {
        assert!(cancellation_table(&sol(&["x", "y"])).is_empty());
        let u = sol(&["x y", "y^-1 z"]);
        assert!(cancellation_table(&u).contains(&(1, 1, 2, 1)));
        assert!(consistent(&sol(&["x", "z"]), &u));
        assert!(!consistent(&u, &sol(&["x", "z"])));
    }

    #[test]
    fn complexity_counts() {
        let g = two_base();
        assert_eq!(g.tau(), 0);
        let mut g = GenEq::new(1, 6);
        g.add_pair("a", (1, 2), "b", (2, 3));
        g.add_pair("c", (3, 4), "d", (4, 5));
        g.bases.push(Base::new("e", 5, 7, "f"));
        g.bases.push(Base::new("f", 8, 9, "e"));
        g.rho = 8;
        g.sections = vec![Section { start: 1, end: 9, active: true }];
        assert_eq!(g.tau(), 4);
        g.sections = vec![Section { start: 1, end: 7, active: true }, Section { start: 7, end: 9, active: true }];
        assert_eq!(g.tau(), 3);
        g.bases.retain(|b| b.id != "e" && b.id != "f");
        g.bases.push(Base::new("e", 1, 7, "f"));
        g.bases.push(Base::new("f", 7, 9, "e"));
        assert_eq!(g.tau(), 3);
        let c = g.complexity();
        assert_eq!(c.gamma, vec![2, 2, 2, 2, 1, 1, 1, 1]);
        assert_eq!((c.rho_active, c.n_active), (8, 6));
    }

    #[test]
    fn two_sections_three_and_four() {
        let mut g = GenEq::new(1, 8);
        g.add_pair("a", (1, 2), "b", (2, 3));
        g.add_pair("c", (3, 4), "d", (4, 5));
        g.add_pair("e", (4, 6), "f", (6, 8));
        g.add_pair("g", (5, 8), "h", (8, 9));
        g.sections = vec![
            Section { start: 1, end: 4, active: true },
            Section { start: 4, end: 8, active: true },
            Section { start: 8, end: 9, active: false },
        ];
        g.validate().unwrap();
        assert_eq!(g.tau(), 3);
    }

    #[test]
    fn text_and_json_round_trip() {
        let text = "geq rank=2 items=4\nbase mu  1 3 +1 dual mub\nbase mub 3 5 +1 dual mu\nconn 2 mu 4\nconn 4 mub 2\nsection 1 5 active\nheight h1 [1]\n";
        let g = GenEq::from_text(text).unwrap();
        g.validate().unwrap();
        assert_eq!(g.heights.get(&1), Some(&1));
        assert_eq!(GenEq::from_text(&g.to_text()).unwrap(), g);
        assert_eq!(GenEq::from_json(&g.to_json()).unwrap(), g);
        assert_eq!(GenEq::parse_any(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn linear_system_from_equations() {
        let mut g = two_base();
        g.add_connection(2, "mu", 4).unwrap();
        let sys = g.linear_system();
        assert!(sys.satisfied_by(&sol(&["x", "y", "x", "y"]).lengths()));
        assert!(sys.implies(&[0, 1, 0, -1]));
        assert!(!sys.implies(&[1, -1, 0, 0]));
    }

    #[test]
    fn solution_text() {
        let u = Solution::parse("h1 = x y\nh2 = z^[0,1] # comment\n", 2).unwrap();
        assert_eq!(u.items.len(), 2);
        assert_eq!(Solution::parse(&u.to_string(), 2).unwrap(), u);
        assert!(Solution::parse("h2 = x", 2).is_err());
    }

    proptest! {
        #[test]
        fn tau_invariant_under_base_reordering(seed in 0u64..500) {
            use rand::{Rng, SeedableRng, seq::SliceRandom};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let rho = rng.gen_range(2..8usize);
            let mut g = GenEq::new(1, rho);
            for k in 0..rng.gen_range(1..4) {
                let a = rng.gen_range(1..=rho);
                let b = rng.gen_range(a + 1..=rho + 1);
                let c = rng.gen_range(1..=rho);
                let d = rng.gen_range(c + 1..=rho + 1);
                g.add_pair(&format!("m{k}"), (a, b), &format!("n{k}"), (c, d));
            }
            let c0 = g.complexity();
            let mut h = g.clone();
            h.bases.shuffle(&mut rng);
            for (k, b) in h.bases.iter_mut().enumerate() {
                b.id = format!("{}_{k}", b.id);
            }
            let c1 = h.complexity();
            prop_assert_eq!(c0.tau, c1.tau);
            prop_assert_eq!(c0.rho_active, c1.rho_active);
            prop_assert_eq!(c0.n_active, c1.n_active);
        }

        #[test]
        fn verified_solutions_kill_relators(xs in prop::collection::vec(prop::sample::select(vec!["x", "y", "x^-1", "y^-1"]), 2..5)) {
            // planted: u1 u2 = u3 with u3 the concatenation
            let mut g = GenEq::new(1, 3 + xs.len());
            let n = xs.len();
            g.add_pair("a", (1, n + 1), "b", (n + 1, 2 * n + 1));
            let g = GenEq { rho: 2 * n, sections: vec![Section { start: 1, end: 2 * n + 1, active: true }], ..g };
            let items: Vec<LambdaWord> = xs.iter().chain(xs.iter()).map(|s| LambdaWord::parse(s, 1).unwrap()).collect();
            let u = Solution::new(1, items);
            if g.verify_solution(&u).is_ok() {
                for r in g.presentation().relators {
                    prop_assert!(u.eval_reduced(&r).unwrap().is_empty());
                }
            }
        }
    }
}
