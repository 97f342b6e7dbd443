//! Periodic structures `⟨P, R⟩`, their graphs and the splittings they
//! induce.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::abelian::{exponent_row, smith_normal_form};
use crate::error::{Error, Result};
use crate::geq::{format_item_word, inverse_item_word, item_range, reduce_item_word, GenEq, ItemWord, Solution};
use crate::ordered::LambdaScalar;
use crate::transform;
use crate::words::{mult, LambdaWord, Letter};

/// A boundary of a long section; boundaries shared by two long sections
/// get one copy per section.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BoundaryCopy {
    pub boundary: usize,
    pub section: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicStructure {
    pub period: LambdaWord,
    /// The overlapping pair `(μ, μ̄)` the structure was grown from.
    pub pair: (String, String),
    pub items: BTreeSet<usize>,
    pub bases: BTreeSet<String>,
    /// Indices into the equation's sections.
    pub sections: BTreeSet<usize>,
    /// The sign function `𝒳` on long sections.
    pub sign: BTreeMap<usize, i8>,
    /// Equivalence classes of `R`.
    pub classes: Vec<Vec<BoundaryCopy>>,
}

impl PeriodicStructure {
    pub fn class_of(&self, c: BoundaryCopy) -> Option<usize> {
        self.classes.iter().position(|cl| cl.contains(&c))
    }

    pub fn is_long_item(&self, i: usize) -> bool {
        self.items.contains(&i)
    }
}

fn segment_len(u: &Solution, from: usize, to: usize) -> LambdaScalar {
    let mut acc = LambdaScalar::zero(u.rank);
    for i in from..to {
        acc = &acc + u.item(i).len();
    }
    acc
}

/// `w` is `Q`-periodic for some `Q` with `|Q| = |P|` and `ht(w) ≥ ht(P)`.
pub fn is_periodic_item(w: &LambdaWord, period: &LambdaWord) -> Result<bool> {
    if w.height() < period.height() || w.len() < period.len() {
        return Ok(false);
    }
    let q = w.prefix(period.len())?;
    if !q.is_cyclically_reduced() {
        return Ok(false);
    }
    let v = mult(&mult(&w.inverse(), &q)?, w)?;
    if v.len() != q.len() {
        return Ok(false);
    }
    let Some(p) = period.finite_letters() else { return Ok(true) };
    let Some(q) = q.finite_letters() else { return Ok(false) };
    let inv: Vec<Letter> = p.iter().rev().map(Letter::inv).collect();
    Ok((0..p.len()).any(|k| {
        let shifted = |s: &[Letter]| s[k..].iter().chain(&s[..k]).eq(q.iter());
        shifted(p) || shifted(&inv)
    }))
}

/// Bases `μ` whose dual starts strictly inside `μ` in the same section with
/// `|μ| ≥ 2|U[α(μ), α(μ̄))|`; the carrier comes first.
pub fn overlapping_pairs(g: &GenEq, u: &Solution) -> Vec<(String, String, LambdaScalar)> {
    let carrier = transform::carrier(g).map(|b| b.id.clone());
    let mut out = Vec::new();
    for m in &g.bases {
        let Some(d) = g.base(&m.dual) else { continue };
        if !(m.left() < d.left() && d.left() < m.right()) || m.epsilon != d.epsilon {
            continue;
        }
        if g.section_of_base(m) != g.section_of_base(d) {
            continue;
        }
        let shift = segment_len(u, m.left(), d.left());
        let full = segment_len(u, m.left(), m.right());
        if full >= &shift + &shift {
            out.push((m.id.clone(), d.id.clone(), shift));
        }
    }
    out.sort_by_key(|(id, _, _)| Some(id) != carrier.as_ref());
    out
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

fn copies(g: &GenEq, sections: &BTreeSet<usize>) -> Vec<BoundaryCopy> {
    let mut out = Vec::new();
    for &s in sections {
        let sec = &g.sections[s];
        for b in sec.start..=sec.end {
            out.push(BoundaryCopy { boundary: b, section: s });
        }
    }
    out
}

/// Classes of the relation generated by the base rules of `R`.
fn generate_r(g: &GenEq, sections: &BTreeSet<usize>, bases: &BTreeSet<String>) -> Result<Vec<Vec<BoundaryCopy>>> {
    let all = copies(g, sections);
    let index: BTreeMap<BoundaryCopy, usize> = all.iter().enumerate().map(|(k, &c)| (c, k)).collect();
    let mut uf = UnionFind::new(all.len());
    let at = |b: usize, id: &str| -> Result<usize> {
        let base = g.require_base(id)?;
        let s = g.section_of_base(base).ok_or_else(|| Error::Structure(format!("{id} lies in no section")))?;
        index
            .get(&BoundaryCopy { boundary: b, section: s })
            .copied()
            .ok_or_else(|| Error::Structure(format!("{id} lies outside the long sections")))
    };
    for id in bases {
        let l = g.require_base(id)?;
        let d = g.dual_of(l)?;
        if l.epsilon == d.epsilon {
            uf.union(at(l.alpha, &l.id)?, at(d.alpha, &d.id)?);
            uf.union(at(l.beta, &l.id)?, at(d.beta, &d.id)?);
        } else {
            uf.union(at(l.alpha, &l.id)?, at(d.beta, &d.id)?);
            uf.union(at(l.beta, &l.id)?, at(d.alpha, &d.id)?);
        }
    }
    let mut classes: BTreeMap<usize, Vec<BoundaryCopy>> = BTreeMap::new();
    for (k, &c) in all.iter().enumerate() {
        classes.entry(uf.find(k)).or_default().push(c);
    }
    let mut out: Vec<Vec<BoundaryCopy>> = classes.into_values().collect();
    out.sort();
    Ok(out)
}

/// Grows `𝒫(U, P)` from an overlapping pair whose shift has length `|P|`.
pub fn build_periodic_structure(g: &GenEq, u: &Solution, period: &LambdaWord) -> Result<PeriodicStructure> {
    g.verify_solution(u)?;
    if period.is_empty() || !period.is_cyclically_reduced() {
        return Err(Error::Precondition(format!("period {period} is not a nonempty cyclically reduced word")));
    }
    let (mu, mub, _) = overlapping_pairs(g, u)
        .into_iter()
        .find(|(_, _, shift)| shift == period.len())
        .ok_or_else(|| Error::Precondition(format!("no overlapping pair shifts by |{period}|")))?;
    let start = g
        .section_of_base(g.require_base(&mu)?)
        .ok_or_else(|| Error::Structure(format!("{mu} lies in no section")))?;

    let mut items = BTreeSet::new();
    let mut bases = BTreeSet::new();
    let mut sections = BTreeSet::new();
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        if !sections.insert(s) {
            continue;
        }
        let sec = g.sections[s].clone();
        for i in sec.start..sec.end {
            if !is_periodic_item(u.item(i), period)? {
                continue;
            }
            items.insert(i);
            for b in g.bases.iter().filter(|b| b.contains_item(i)) {
                for id in [&b.id, &b.dual] {
                    if bases.insert(id.clone()) {
                        let base = g.require_base(id)?;
                        if let Some(t) = g.section_of_base(base) {
                            queue.push_back(t);
                        }
                    }
                }
            }
        }
    }
    for &s in &sections {
        let sec = &g.sections[s];
        if !g.is_closed(sec.start) || !g.is_closed(sec.end) {
            return Err(Error::Structure(format!("section [{}, {}] is not closed", sec.start, sec.end)));
        }
    }

    let mut sign = BTreeMap::from([(start, 1i8)]);
    let mut changed = true;
    while changed {
        changed = false;
        for id in &bases {
            let l = g.require_base(id)?;
            let d = g.dual_of(l)?;
            let (s1, s2) = (g.section_of_base(l).unwrap(), g.section_of_base(d).unwrap());
            let want = l.epsilon * d.epsilon;
            match (sign.get(&s1).copied(), sign.get(&s2).copied()) {
                (Some(x), None) => {
                    sign.insert(s2, want * x);
                    changed = true;
                }
                (Some(x), Some(y)) if x * y != want => {
                    return Err(Error::Structure(format!("no consistent sign for {id}")));
                }
                _ => {}
            }
        }
    }
    let classes = generate_r(g, &sections, &bases)?;
    Ok(PeriodicStructure { period: period.clone(), pair: (mu, mub), items, bases, sections, sign, classes })
}

/// Checks conditions 1(a)–(d) and that `R` is the relation generated by the
/// base rules.
pub fn check_periodic_structure(g: &GenEq, ps: &PeriodicStructure) -> Result<()> {
    let fail = |m: String| Err(Error::Verification(m));
    for &i in &ps.items {
        for b in g.bases.iter().filter(|b| b.contains_item(i)) {
            if !ps.bases.contains(&b.id) {
                return fail(format!("1(a): h{i} ∈ {} but {} is not long", b.id, b.id));
            }
        }
        if !g.section_of_item(i).is_some_and(|s| ps.sections.contains(&s)) {
            return fail(format!("h{i} is long but its section is not"));
        }
    }
    for id in &ps.bases {
        let b = g.require_base(id)?;
        if !ps.bases.contains(&b.dual) {
            return fail(format!("1(b): {id} is long but {} is not", b.dual));
        }
        if !g.section_of_base(b).is_some_and(|s| ps.sections.contains(&s)) {
            return fail(format!("1(c): the section of {id} is not long"));
        }
    }
    for &s in &ps.sections {
        let sec = &g.sections[s];
        if !g.is_closed(sec.start) || !g.is_closed(sec.end) {
            return fail(format!("section [{}, {}] is not closed", sec.start, sec.end));
        }
        if !ps.sign.get(&s).is_some_and(|x| x.abs() == 1) {
            return fail(format!("1(d): no sign for section [{}, {}]", sec.start, sec.end));
        }
    }
    for id in &ps.bases {
        let l = g.require_base(id)?;
        let d = g.dual_of(l)?;
        let (s1, s2) = (g.section_of_base(l).unwrap(), g.section_of_base(d).unwrap());
        if l.epsilon * d.epsilon != ps.sign[&s1] * ps.sign[&s2] {
            return fail(format!("1(d): sign mismatch on {id}"));
        }
    }
    let mut expected = generate_r(g, &ps.sections, &ps.bases)?;
    let mut got = ps.classes.clone();
    for c in expected.iter_mut().chain(got.iter_mut()) {
        c.sort();
    }
    expected.sort();
    got.sort();
    if expected != got {
        return fail("R differs from the relation generated by the long bases".into());
    }
    Ok(())
}

/// Every long base reads a `Q`-periodic word with `|Q| = |P|`.
pub fn long_bases_periodic(g: &GenEq, u: &Solution, ps: &PeriodicStructure) -> Result<bool> {
    for id in &ps.bases {
        let b = g.require_base(id)?;
        let w = u.eval_reduced(&item_range(b.left(), b.right()))?;
        if !is_periodic_item(&w, &ps.period)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodEdge {
    pub item: usize,
    pub from: usize,
    pub to: usize,
    pub long: bool,
}

/// `Γ` with its forests, cycles and the lattice data `Z̃ ⊇ Z̃₁ ⊇ B̃`.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodGraph {
    pub vertices: usize,
    pub edges: Vec<PeriodEdge>,
    pub base_vertex: usize,
    /// Edge indices of `T₀ ⊆ T`.
    pub t0: Vec<usize>,
    pub tree: Vec<usize>,
    /// Edges outside `T`; their cycles `c_e` form the basis of `Z̃`.
    pub cycle_edges: Vec<usize>,
    /// Label `h(c_e)` per cycle edge.
    pub cycle_words: Vec<ItemWord>,
    /// Generators of `B̃` in the basis of `Z̃`, with what they come from.
    pub b_rows: Vec<Vec<i64>>,
    pub b_sources: Vec<String>,
    /// Bases of `Z̃₁` (`c̄⁽¹⁾`) and of a complement `Z̃₂` (`c̄⁽²⁾`).
    pub c1: Vec<Vec<i64>>,
    pub c2: Vec<Vec<i64>>,
    /// Invariant factors of `B̃`; `|Z̃₁ : B̃|` is their product.
    pub invariant_factors: Vec<i64>,
    pub index: i64,
}

impl PeriodGraph {
    /// `r(v₀, v)` as a list of `(edge, forward)` steps.
    pub fn tree_path(&self, v: usize) -> Vec<(usize, bool)> {
        let mut parent: BTreeMap<usize, (usize, usize, bool)> = BTreeMap::new();
        let mut seen = BTreeSet::from([self.base_vertex]);
        let mut queue = VecDeque::from([self.base_vertex]);
        while let Some(x) = queue.pop_front() {
            for &e in &self.tree {
                let ed = &self.edges[e];
                let next = if ed.from == x {
                    Some((ed.to, true))
                } else if ed.to == x {
                    Some((ed.from, false))
                } else {
                    None
                };
                if let Some((y, fwd)) = next {
                    if seen.insert(y) {
                        parent.insert(y, (x, e, fwd));
                        queue.push_back(y);
                    }
                }
            }
        }
        let mut path = Vec::new();
        let mut cur = v;
        while let Some(&(p, e, fwd)) = parent.get(&cur) {
            path.push((e, fwd));
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn path_word(&self, path: &[(usize, bool)]) -> ItemWord {
        let w: ItemWord =
            path.iter().map(|&(e, fwd)| if fwd { self.edges[e].item as i32 } else { -(self.edges[e].item as i32) }).collect();
        reduce_item_word(&w)
    }

    /// `h(r(v₀, v))`.
    pub fn root_word(&self, v: usize) -> ItemWord {
        self.path_word(&self.tree_path(v))
    }

    /// Word `∏ h(c_e)^{n_e}` of a vector over the cycle basis.
    pub fn cycle_combination(&self, v: &[i64]) -> ItemWord {
        let mut w = Vec::new();
        for (k, &n) in v.iter().enumerate() {
            let piece = if n >= 0 { self.cycle_words[k].clone() } else { inverse_item_word(&self.cycle_words[k]) };
            for _ in 0..n.unsigned_abs() {
                w.extend_from_slice(&piece);
            }
        }
        reduce_item_word(&w)
    }
}

fn big_rows(rows: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

fn small(x: &BigInt) -> Result<i64> {
    x.to_i64().ok_or_else(|| Error::OutOfRange(format!("{x} does not fit in 64 bits")))
}

/// Inverse of a unimodular integer matrix.
fn unimodular_inverse(m: &[Vec<BigInt>]) -> Result<Vec<Vec<BigInt>>> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<BigRational> = row.iter().map(|x| BigRational::from_integer(x.clone())).collect();
            r.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero()).ok_or_else(|| Error::Structure("singular transform".into()))?;
        a.swap(c, p);
        let inv = a[c][c].recip();
        for x in a[c].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                let pivot = a[c].clone();
                for (x, y) in a[r].iter_mut().zip(pivot) {
                    *x = &*x - &(&f * y);
                }
            }
        }
    }
    a.into_iter()
        .map(|row| {
            row[n..]
                .iter()
                .map(|x| if x.is_integer() { Ok(x.to_integer()) } else { Err(Error::Structure("transform is not unimodular".into())) })
                .collect()
        })
        .collect()
}

/// Splits `ℤⁿ = Z̃₁ ⊕ Z̃₂` with the rows of `b` spanning a finite-index
/// sublattice of `Z̃₁`; returns bases of both parts and the invariant factors.
pub fn lattice_split(b: &[Vec<i64>], n: usize) -> Result<(Vec<Vec<i64>>, Vec<Vec<i64>>, Vec<i64>)> {
    if n == 0 {
        return Ok((Vec::new(), Vec::new(), Vec::new()));
    }
    let snf = smith_normal_form(&big_rows(b), n);
    let r = snf.rank();
    let inv = unimodular_inverse(&snf.right)?;
    let rows: Vec<Vec<i64>> = inv.iter().map(|row| row.iter().map(small).collect::<Result<_>>()).collect::<Result<_>>()?;
    let factors = snf.diagonal[..r].iter().map(small).collect::<Result<_>>()?;
    Ok((rows[..r].to_vec(), rows[r..].to_vec(), factors))
}

/// Builds `Γ`, the forests `T₀ ⊆ T`, the cycles `c_e` and the decomposition
/// `Z̃ = Z̃₁ ⊕ Z̃₂` with `B̃ ⊆ Z̃₁` of finite index.
pub fn period_graph(g: &GenEq, ps: &PeriodicStructure) -> Result<PeriodGraph> {
    let vertex = |c: BoundaryCopy| ps.class_of(c).ok_or_else(|| Error::Structure(format!("boundary {} has no class", c.boundary)));
    let mut edges = Vec::new();
    for &s in &ps.sections {
        let sec = &g.sections[s];
        for k in sec.start..sec.end {
            edges.push(PeriodEdge {
                item: k,
                from: vertex(BoundaryCopy { boundary: k, section: s })?,
                to: vertex(BoundaryCopy { boundary: k + 1, section: s })?,
                long: ps.is_long_item(k),
            });
        }
    }
    let vertices = ps.classes.len();
    let first = *ps.sections.iter().next().ok_or_else(|| Error::Precondition("empty periodic structure".into()))?;
    let start_section = g.section_of_base(g.require_base(&ps.pair.0)?).unwrap_or(first);
    let base_vertex = vertex(BoundaryCopy { boundary: g.sections[start_section].start, section: start_section })?;

    let mut uf = UnionFind::new(vertices);
    let mut t0 = Vec::new();
    for (e, ed) in edges.iter().enumerate() {
        if !ed.long && uf.union(ed.from, ed.to) {
            t0.push(e);
        }
    }
    let mut tree = t0.clone();
    for (e, ed) in edges.iter().enumerate() {
        if ed.long && uf.union(ed.from, ed.to) {
            tree.push(e);
        }
    }
    if vertices - tree.len() != 1 {
        return Err(Error::Structure(format!("periodic structure is not connected: {} components", vertices - tree.len())));
    }
    tree.sort_unstable();
    let cycle_edges: Vec<usize> = (0..edges.len()).filter(|e| !tree.contains(e)).collect();
    let position: BTreeMap<usize, usize> = cycle_edges.iter().enumerate().map(|(k, &e)| (edges[e].item, k)).collect();

    let mut graph = PeriodGraph {
        vertices,
        edges,
        base_vertex,
        t0,
        tree,
        cycle_edges: cycle_edges.clone(),
        cycle_words: Vec::new(),
        b_rows: Vec::new(),
        b_sources: Vec::new(),
        c1: Vec::new(),
        c2: Vec::new(),
        invariant_factors: Vec::new(),
        index: 1,
    };
    graph.cycle_words = cycle_edges
        .iter()
        .map(|&e| {
            let ed = &graph.edges[e];
            let mut w = graph.root_word(ed.from);
            w.push(ed.item as i32);
            w.extend(inverse_item_word(&graph.root_word(ed.to)));
            reduce_item_word(&w)
        })
        .collect();

    let n = cycle_edges.len();
    let mut done = BTreeSet::new();
    for id in &ps.bases {
        let l = g.require_base(id)?;
        if done.contains(&l.dual) {
            continue;
        }
        done.insert(id.clone());
        let d = g.dual_of(l)?;
        let mut row = vec![0i64; n];
        for k in l.left()..l.right() {
            if let Some(&p) = position.get(&k) {
                row[p] += 1;
            }
        }
        for k in d.left()..d.right() {
            if let Some(&p) = position.get(&k) {
                row[p] -= 1;
            }
        }
        graph.b_rows.push(row);
        graph.b_sources.push(format!("b({id})"));
    }
    for (k, &e) in cycle_edges.iter().enumerate() {
        if !graph.edges[e].long {
            let mut row = vec![0i64; n];
            row[k] = 1;
            graph.b_rows.push(row);
            graph.b_sources.push(format!("c(h{})", graph.edges[e].item));
        }
    }

    let (c1, c2, factors) = lattice_split(&graph.b_rows, n)?;
    graph.c1 = c1;
    graph.c2 = c2;
    graph.index = factors.iter().product();
    graph.invariant_factors = factors;
    Ok(graph)
}

/// Rank of the row space of `rows` over `ℚ`.
fn rank(rows: &[Vec<i64>], cols: usize) -> usize {
    if rows.is_empty() || cols == 0 {
        return 0;
    }
    smith_normal_form(&big_rows(rows), cols).rank()
}

/// Coordinates of `v` in the basis `c̄⁽¹⁾`, if it lies in `Z̃₁`.
fn in_span(basis: &[Vec<i64>], v: &[i64]) -> bool {
    let cols = v.len();
    let r = rank(basis, cols);
    let mut ext = basis.to_vec();
    ext.push(v.to_vec());
    rank(&ext, cols) == r
}

/// Checks `B̃ ⊆ Z̃₁`, `rank B̃ = rank Z̃₁` and `Z̃ = Z̃₁ ⊕ Z̃₂`.
pub fn verify_lattice(graph: &PeriodGraph) -> bool {
    let n = graph.cycle_edges.len();
    let all: Vec<Vec<i64>> = graph.c1.iter().chain(&graph.c2).cloned().collect();
    let basis_ok = all.len() == n && {
        let big = big_rows(&all);
        n == 0 || {
            let snf = smith_normal_form(&big, n);
            snf.rank() == n && snf.diagonal.iter().all(|d| d.abs().is_one())
        }
    };
    let contained = graph.b_rows.iter().all(|b| in_span(&graph.c1, b));
    let finite = rank(&graph.b_rows, n) == graph.c1.len() && graph.index != 0;
    basis_ok && contained && finite
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SplitKind {
    FreeProduct,
    QHVertex,
    AbelianVertex,
    HNNEdge,
    CentralizerExtension,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Periodized {
    /// Cycle images at each vertex commute under the solution.
    Verified,
    /// Taken as an input assumption.
    Assumed,
}

/// The graph-of-groups decomposition induced by a periodic structure.
#[derive(Clone, Debug, Serialize)]
pub struct SplittingReport {
    pub events: Vec<SplitKind>,
    pub graph: PeriodGraph,
    /// Generators of the vertex group `K`.
    pub y0: Vec<String>,
    /// `h(c̄⁽²⁾)` and `h(c̄⁽¹⁾)`, generating the abelian vertex group.
    pub abelian_generators: Vec<String>,
    /// `h(c̄⁽¹⁾)`, generating the edge group.
    pub edge_group: Vec<String>,
    pub stable_letters: Vec<String>,
    pub relations: Vec<String>,
    pub periodized: Periodized,
    /// Rank of the image of the cycle space in the abelianization.
    pub abelian_rank: usize,
    /// Length equations tying the period to its copy at the far end of the
    /// overlapping pair.
    pub sigma_rows: Vec<Vec<i64>>,
}

fn word(w: &[i32]) -> String {
    format_item_word(w)
}

/// All cycle images at each vertex commute.
pub fn cycles_commute(graph: &PeriodGraph, u: &Solution) -> Result<bool> {
    for v in 0..graph.vertices {
        let r = graph.root_word(v);
        let mut imgs = Vec::new();
        for c in &graph.cycle_words {
            let mut w = inverse_item_word(&r);
            w.extend_from_slice(c);
            w.extend_from_slice(&r);
            imgs.push(u.eval_reduced(&reduce_item_word(&w))?);
        }
        for a in &imgs {
            for b in &imgs {
                if mult(a, b)? != mult(b, a)? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Splits `G_Ω` along a periodic structure.
pub fn split_by_periodic_structure(ps: &PeriodicStructure, g: &GenEq, u: Option<&Solution>) -> Result<SplittingReport> {
    let graph = period_graph(g, ps)?;
    let periodized = match u {
        Some(u) => {
            if !cycles_commute(&graph, u)? {
                return Err(Error::Verification("cycle images at a vertex do not commute".into()));
            }
            Periodized::Verified
        }
        None => Periodized::Assumed,
    };
    if !verify_lattice(&graph) {
        return Err(Error::Structure("lattice decomposition failed".into()));
    }

    let long_sections: BTreeSet<usize> = ps.sections.clone();
    let mut y0 = Vec::new();
    for i in 1..=g.rho {
        if !g.section_of_item(i).is_some_and(|s| long_sections.contains(&s)) {
            y0.push(format!("h{i}"));
        }
    }
    for &e in &graph.t0 {
        y0.push(format!("h{}", graph.edges[e].item));
    }
    let c1_words: Vec<String> = graph.c1.iter().map(|v| word(&graph.cycle_combination(v))).collect();
    let c2_words: Vec<String> = graph.c2.iter().map(|v| word(&graph.cycle_combination(v))).collect();
    y0.extend(c1_words.iter().cloned());

    let hnn: Vec<usize> = graph.tree.iter().copied().filter(|e| !graph.t0.contains(e)).collect();
    let short_cycles: Vec<usize> =
        (0..graph.cycle_edges.len()).filter(|&k| !graph.edges[graph.cycle_edges[k]].long).collect();
    let mut relations = Vec::new();
    let mut stable_letters = Vec::new();
    for (i, &e) in hnn.iter().enumerate() {
        let ed = &graph.edges[e];
        let letter = format!("h{}", ed.item);
        stable_letters.push(letter.clone());
        let r = graph.root_word(ed.from);
        for &k in &short_cycles {
            let u_name = format!("u{}_{}", i + 1, graph.edges[graph.cycle_edges[k]].item);
            let z_name = format!("z{}_{}", i + 1, graph.edges[graph.cycle_edges[k]].item);
            let mut conj = inverse_item_word(&r);
            conj.extend_from_slice(&graph.cycle_words[k]);
            conj.extend_from_slice(&r);
            relations.push(format!("{u_name} = {}", word(&reduce_item_word(&conj))));
            relations.push(format!("{letter}^-1 {u_name} {letter} = {z_name}"));
            y0.push(u_name);
            y0.push(z_name);
        }
    }

    let mut events = Vec::new();
    if !graph.c2.is_empty() {
        events.push(SplitKind::CentralizerExtension);
    }
    events.extend(hnn.iter().map(|_| SplitKind::HNNEdge));

    let p = g.presentation();
    let rel_rows: Vec<Vec<i64>> = p
        .relators
        .iter()
        .map(|r| exponent_row(r, g.rho).iter().map(|x| x.to_i64().unwrap_or(0)).collect())
        .collect();
    let mut ext = rel_rows.clone();
    for c in &graph.cycle_words {
        ext.push(exponent_row(c, g.rho).iter().map(|x| x.to_i64().unwrap_or(0)).collect());
    }
    let abelian_rank = rank(&ext, g.rho) - rank(&rel_rows, g.rho);

    let mut sigma_rows = Vec::new();
    let (m, d) = (g.require_base(&ps.pair.0)?, g.require_base(&ps.pair.1)?);
    let mut row = vec![0i64; g.rho];
    for k in m.left()..d.left() {
        row[k - 1] += 1;
    }
    for k in m.right()..d.right() {
        row[k - 1] -= 1;
    }
    if row.iter().any(|&x| x != 0) {
        sigma_rows.push(row);
    }

    let mut abelian_generators = c2_words;
    abelian_generators.extend(c1_words.iter().cloned());
    Ok(SplittingReport {
        events,
        graph,
        y0,
        abelian_generators,
        edge_group: c1_words,
        stable_letters,
        relations,
        periodized,
        abelian_rank,
        sigma_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{build, PresentationInput};
    use crate::geq::Section;

    fn comm() -> (GenEq, Solution) {
        let p = PresentationInput::parse("rank 2\ngenerators x y\nrelator x y x^-1 y^-1\nx = z\ny = z^[0,1]\n", None).unwrap();
        let (_, _, asm) = build(&p).unwrap();
        (asm.omega, asm.solution)
    }

    fn word(s: &str, rank: usize) -> LambdaWord {
        LambdaWord::parse(s, rank).unwrap()
    }

    /// `aa = aa` over `[1, 4]` plus a short item `b` closing the section.
    fn with_short_item() -> (GenEq, Solution) {
        let mut g = GenEq::new(1, 5);
        g.add_pair("mu", (1, 3), "mub", (2, 4));
        g.add_pair("nu", (4, 5), "nub", (5, 6));
        g.sections = vec![Section { start: 1, end: 5, active: true }, Section { start: 5, end: 6, active: true }];
        let u = Solution::parse("h1 = a\nh2 = a\nh3 = a\nh4 = b\nh5 = b", 1).unwrap();
        g.verify_solution(&u).unwrap();
        (g, u)
    }

    #[test]
    fn commutator_structure() {
        let (g, u) = comm();
        let ps = build_periodic_structure(&g, &u, &word("z", 2)).unwrap();
        check_periodic_structure(&g, &ps).unwrap();
        assert_eq!(ps.items.len(), 4);
        assert_eq!(ps.bases.len(), 6);
        assert!(long_bases_periodic(&g, &u, &ps).unwrap());
        let s = split_by_periodic_structure(&ps, &g, Some(&u)).unwrap();
        assert_eq!(s.graph.vertices, 1);
        assert_eq!(s.graph.cycle_edges.len(), 4);
        assert_eq!(s.graph.c1.len(), 2);
        assert_eq!(s.graph.c2.len(), 2);
        assert_eq!(s.graph.index, 1);
        assert_eq!(s.events, vec![SplitKind::CentralizerExtension]);
        assert_eq!(s.abelian_rank, 2);
        assert_eq!(s.periodized, Periodized::Verified);
        assert!(verify_lattice(&s.graph));
    }

    #[test]
    fn short_items_stay_out() {
        let (g, u) = with_short_item();
        let ps = build_periodic_structure(&g, &u, &word("a", 1)).unwrap();
        check_periodic_structure(&g, &ps).unwrap();
        assert_eq!(ps.items, BTreeSet::from([1, 2, 3]));
        assert!(!ps.bases.contains("nu") && !ps.bases.contains("nub"));
        let graph = period_graph(&g, &ps).unwrap();
        let short: Vec<usize> = graph.t0.iter().map(|&e| graph.edges[e].item).collect();
        assert_eq!(short, vec![4]);
        assert_eq!(graph.tree.len(), 2);
        assert_eq!(graph.b_rows, vec![vec![1, -1]]);
        assert_eq!(graph.c2.len(), 1);
    }

    #[test]
    fn needs_an_overlapping_pair() {
        let mut g = GenEq::new(1, 2);
        g.add_pair("nu", (1, 2), "nub", (2, 3));
        g.sections = vec![Section { start: 1, end: 3, active: true }];
        let u = Solution::parse("h1 = b\nh2 = b", 1).unwrap();
        assert!(matches!(build_periodic_structure(&g, &u, &word("b", 1)), Err(Error::Precondition(_))));
    }

    #[test]
    fn broken_structure_fails_the_check() {
        let (g, u) = comm();
        let mut ps = build_periodic_structure(&g, &u, &word("z", 2)).unwrap();
        ps.bases.remove("l1b");
        assert!(check_periodic_structure(&g, &ps).is_err());
    }

    #[test]
    fn full_rank_lattice_has_no_complement() {
        let (c1, c2, f) = lattice_split(&[vec![2, 0], vec![0, 3]], 2).unwrap();
        assert_eq!(c1.len(), 2);
        assert!(c2.is_empty());
        assert_eq!(f.iter().product::<i64>(), 6);
    }

    #[test]
    fn lattice_split_of_a_line() {
        let (c1, c2, f) = lattice_split(&[vec![2, 4]], 2).unwrap();
        assert_eq!(f, vec![2]);
        assert_eq!((c1.len(), c2.len()), (1, 1));
        // 2·c1 spans the same line as (2, 4).
        assert_eq!(c1[0][1], 2 * c1[0][0]);
    }

    #[test]
    fn periodicity_requires_height() {
        assert!(is_periodic_item(&word("z^[3,1]", 2), &word("z", 2)).unwrap());
        assert!(!is_periodic_item(&word("z", 2), &word("z^[0,1]", 2)).unwrap());
        assert!(!is_periodic_item(&word("z y", 2), &word("z", 2)).unwrap());
    }
}
