//! Elementary transformations ET1–ET5 and the derived transformations
//! D1–D8, with item morphisms and solution push/transport.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geq::{
    format_item_word, inverse_item_word, item_range, reduce_item_word, Base, Connection, GenEq, ItemWord,
    LinearSystem, Presentation, Section, Solution,
};
use crate::ordered::{Height, LambdaScalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MorphismKind {
    Isomorphism,
    Epimorphism,
}

/// `h_i ↦ item_map[i − 1]`, a word in the target items.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Morphism {
    pub item_map: Vec<ItemWord>,
    pub kind: MorphismKind,
}

impl Morphism {
    pub fn identity(rho: usize) -> Self {
        Morphism { item_map: (1..=rho as i32).map(|i| vec![i]).collect(), kind: MorphismKind::Isomorphism }
    }

    pub fn apply(&self, w: &[i32]) -> ItemWord {
        let mut out = Vec::new();
        for &x in w {
            let img = &self.item_map[x.unsigned_abs() as usize - 1];
            if x > 0 {
                out.extend_from_slice(img);
            } else {
                out.extend(inverse_item_word(img));
            }
        }
        reduce_item_word(&out)
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Morphism) -> Morphism {
        let kind = if self.kind == MorphismKind::Isomorphism && next.kind == MorphismKind::Isomorphism {
            MorphismKind::Isomorphism
        } else {
            MorphismKind::Epimorphism
        };
        Morphism { item_map: self.item_map.iter().map(|w| next.apply(w)).collect(), kind }
    }

    /// Substitution lines `h<i> -> <word>`.
    pub fn trace_lines(&self) -> Vec<String> {
        self.item_map.iter().enumerate().map(|(i, w)| format!("h{} -> {}", i + 1, format_item_word(w))).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TransformResult {
    pub target: GenEq,
    pub morphism: Morphism,
    pub note: String,
    /// The source solution pushed to the target, when one was supplied.
    #[serde(skip)]
    pub solution: Option<Solution>,
    /// Source boundary `b` (index `b`) to target boundary; `None` when removed.
    #[serde(skip)]
    pub boundary_map: Vec<Option<usize>>,
    /// Target base id to the source base it was cut from or moved as.
    #[serde(skip)]
    pub origins: BTreeMap<String, String>,
}

impl TransformResult {
    fn identity(omega: &GenEq, target: GenEq, note: String, sol: Option<&Solution>) -> Self {
        let origins = target.bases.iter().map(|b| (b.id.clone(), b.id.clone())).collect();
        TransformResult {
            morphism: Morphism::identity(omega.rho),
            boundary_map: (0..=omega.rho + 1).map(Some).collect(),
            target,
            note,
            solution: sol.cloned(),
            origins,
        }
    }
}

/// `u_i = item_map[i](U_target)`.
pub fn transport(m: &Morphism, target_solution: &Solution) -> Result<Solution> {
    let items = m.item_map.iter().map(|w| target_solution.eval_reduced(w)).collect::<Result<Vec<_>>>()?;
    Ok(Solution::new(target_solution.rank, items))
}

/// Item-length oracle used to place new boundaries.
#[derive(Clone, Copy, Debug)]
pub enum Oracle<'a> {
    Solution(&'a Solution),
    Symbolic(&'a LinearSystem),
}

fn untied(b: usize, id: &str) -> Error {
    Error::Precondition(format!("boundary {b} is not {id}-tied"))
}

fn next_id(g: &GenEq, id: &str, extra: &[&str]) -> String {
    let root = id.split('.').next().unwrap_or(id);
    (1..)
        .map(|k| format!("{root}.{k}"))
        .find(|c| g.base(c).is_none() && !extra.contains(&c.as_str()))
        .unwrap()
}

/// ET1: cut `λ` at `p` and `λ̄` at `q` along the connection `(p, λ, q)`.
pub fn et1_cut(omega: &GenEq, p: usize, lambda: &str, sol: Option<&Solution>) -> Result<TransformResult> {
    let lam = omega.require_base(lambda)?.clone();
    if !lam.strictly_inside(p) {
        return Err(Error::Precondition(format!("boundary {p} is not internal to {lambda}")));
    }
    let q = omega.tie(p, lambda).ok_or_else(|| Error::Precondition(format!("no connection ({p}, {lambda}, ·)")))?;
    let dual = omega.dual_of(&lam)?.clone();
    let mut g = omega.clone();
    let l1 = next_id(&g, &lam.id, &[]);
    let l2 = next_id(&g, &lam.id, &[&l1]);
    let d1 = next_id(&g, &dual.id, &[&l1, &l2]);
    let d2 = next_id(&g, &dual.id, &[&l1, &l2, &d1]);
    let halves = [
        (Base::new(&l1, lam.alpha, p, &d1), Base::new(&d1, dual.alpha, q, &l1)),
        (Base::new(&l2, p, lam.beta, &d2), Base::new(&d2, q, dual.beta, &l2)),
    ];
    let pos = g.base_index(&lam.id).unwrap();
    g.bases.retain(|b| b.id != lam.id && b.id != dual.id);
    let insert_at = pos.min(g.bases.len());
    for (k, (a, b)) in halves.iter().enumerate() {
        g.bases.insert(insert_at + 2 * k, a.clone());
        g.bases.insert(insert_at + 2 * k + 1, b.clone());
    }
    let mut conns = Vec::new();
    for c in &omega.connections {
        let (own, other, halves_own, halves_other): (&Base, &Base, [&Base; 2], [&Base; 2]) = if c.lambda == lam.id {
            (&lam, &dual, [&halves[0].0, &halves[1].0], [&halves[0].1, &halves[1].1])
        } else if c.lambda == dual.id {
            (&dual, &lam, [&halves[0].1, &halves[1].1], [&halves[0].0, &halves[1].0])
        } else {
            conns.push(c.clone());
            continue;
        };
        let _ = (own, other);
        for k in 0..2 {
            if halves_own[k].strictly_inside(c.p) && halves_other[k].strictly_inside(c.q) {
                conns.push(Connection { p: c.p, lambda: halves_own[k].id.clone(), q: c.q });
            }
        }
    }
    g.connections = conns;
    let mut r = TransformResult::identity(omega, g, format!("ET1 cut {lambda} at {p} (dual at {q})"), sol);
    for (a, b) in &halves {
        r.origins.insert(a.id.clone(), lam.id.clone());
        r.origins.insert(b.id.clone(), dual.id.clone());
    }
    Ok(r)
}

/// ET2: move `μ ⊆ λ` onto `λ̄` through the connections of `λ`.
pub fn et2_transfer(omega: &GenEq, lambda: &str, mu: &str, sol: Option<&Solution>) -> Result<TransformResult> {
    let lam = omega.require_base(lambda)?.clone();
    let m = omega.require_base(mu)?.clone();
    if lam.id == m.id || lam.dual == m.id {
        return Err(Error::Precondition(format!("cannot transfer {mu} along {lambda}")));
    }
    if !(lam.left() <= m.left() && m.right() <= lam.right()) {
        return Err(Error::Precondition(format!("{mu} is not contained in {lambda}")));
    }
    let mut image = HashMap::new();
    for b in m.left()..=m.right() {
        let q = omega.image_on_dual(b, &lam).ok_or_else(|| untied(b, lambda))?;
        image.insert(b, q);
    }
    let mut g = omega.clone();
    {
        let nb = g.bases.iter_mut().find(|b| b.id == m.id).unwrap();
        nb.alpha = image[&m.alpha];
        nb.beta = image[&m.beta];
        if nb.alpha == nb.beta {
            return Err(Error::Structure(format!("{mu} collapses on transfer")));
        }
        nb.epsilon = if nb.alpha < nb.beta { 1 } else { -1 };
    }
    for c in &mut g.connections {
        if c.lambda == m.id {
            c.p = image[&c.p];
        } else if c.lambda == m.dual {
            c.q = image[&c.q];
        }
    }
    Ok(TransformResult::identity(omega, g, format!("ET2 transfer {mu} from {lambda} onto {}", lam.dual), sol))
}

/// ET3: delete a matched pair.
pub fn et3_remove_matched(omega: &GenEq, lambda: &str, sol: Option<&Solution>) -> Result<TransformResult> {
    let lam = omega.require_base(lambda)?.clone();
    if !omega.is_matched(&lam) {
        return Err(Error::Precondition(format!("{lambda} is not matched with its dual")));
    }
    let mut g = omega.clone();
    g.bases.retain(|b| b.id != lam.id && b.id != lam.dual);
    g.connections.retain(|c| c.lambda != lam.id && c.lambda != lam.dual);
    Ok(TransformResult::identity(omega, g, format!("ET3 remove matched pair {lambda}/{}", lam.dual), sol))
}

/// ET4: delete a lone base with all interior boundaries tied, together with
/// its items, which are rewritten as words over its dual.
pub fn et4_remove_lone(omega: &GenEq, lambda: &str, sol: Option<&Solution>) -> Result<TransformResult> {
    let lam = omega.require_base(lambda)?.clone();
    let dual = omega.dual_of(&lam)?.clone();
    let (l, r) = (lam.left(), lam.right());
    if let Some(b) = omega.bases.iter().find(|b| b.id != lam.id && b.left() < r && l < b.right()) {
        return Err(Error::Precondition(format!("{lambda} intersects {}", b.id)));
    }
    let img = (l..=r).map(|b| omega.image_on_dual(b, &lam).ok_or_else(|| untied(b, lambda))).collect::<Result<Vec<_>>>()?;
    let same = lam.epsilon == dual.epsilon;
    for w in img.windows(2) {
        if (same && w[0] >= w[1]) || (!same && w[0] <= w[1]) {
            return Err(Error::Precondition(format!("ties of {lambda} are not monotone on {}", dual.id)));
        }
    }
    let shift = r - l;
    let item_new = |j: usize| if j < l { j } else { j - shift };
    let mut item_map = Vec::with_capacity(omega.rho);
    for i in 1..=omega.rho {
        if i < l {
            item_map.push(vec![i as i32]);
        } else if i >= r {
            item_map.push(vec![(i - shift) as i32]);
        } else {
            let k = i - l;
            let w: ItemWord = if same {
                (img[k]..img[k + 1]).map(|j| item_new(j) as i32).collect()
            } else {
                inverse_item_word(&(img[k + 1]..img[k]).map(|j| item_new(j) as i32).collect::<Vec<_>>())
            };
            item_map.push(w);
        }
    }
    let bnew = |b: usize| if b <= l { Some(b) } else if b >= r { Some(b - shift) } else { None };
    let mut g = omega.clone();
    g.bases.retain(|b| b.id != lam.id && b.id != dual.id);
    g.connections.retain(|c| c.lambda != lam.id && c.lambda != dual.id);
    g.renumber(|b| bnew(b).unwrap_or(l));
    g.sections.retain(|s| s.start < s.end);
    g.rho -= shift;
    g.heights = omega.heights.iter().filter(|(&i, _)| i < l || i >= r).map(|(&i, &h)| (item_new(i), h)).collect();
    let solution = sol.map(|u| {
        let items = u.items.iter().enumerate().filter(|(k, _)| k + 1 < l || k + 1 >= r).map(|(_, w)| w.clone()).collect();
        Solution::new(u.rank, items)
    });
    let origins = g.bases.iter().map(|b| (b.id.clone(), b.id.clone())).collect();
    Ok(TransformResult {
        target: g,
        morphism: Morphism { item_map, kind: crate::transform::MorphismKind::Isomorphism },
        note: format!("ET4 remove lone base {lambda} over [{l}, {r}]"),
        solution,
        boundary_map: (0..=omega.rho + 1).map(|b| if b == 0 { None } else { bnew(b) }).collect(),
        origins,
    })
}

/// Offset of boundary `b` on `base`, measured from `α(base)`, in item lengths.
fn offset_row(base: &Base, b: usize, rho: usize) -> Vec<i64> {
    let mut row = vec![0i64; rho];
    let range = if base.epsilon == 1 { base.left()..b } else { b..base.right() };
    for k in range {
        row[k - 1] += 1;
    }
    row
}

fn offset(base: &Base, b: usize, lengths: &[LambdaScalar]) -> LambdaScalar {
    let rank = lengths.first().map_or(1, LambdaScalar::rank);
    let range = if base.epsilon == 1 { base.left()..b } else { b..base.right() };
    range.fold(LambdaScalar::zero(rank), |acc, k| &acc + &lengths[k - 1])
}

/// ET5: tie `p` on `λ`, adding a connection, or first splitting the item of
/// `λ̄` that contains the image of `p`.
pub fn et5_introduce_boundary(
    omega: &GenEq,
    lambda: &str,
    p: usize,
    oracle: Oracle<'_>,
) -> Result<TransformResult> {
    let lam = omega.require_base(lambda)?.clone();
    if !lam.strictly_inside(p) {
        return Err(Error::Precondition(format!("boundary {p} is not internal to {lambda}")));
    }
    if omega.tie(p, lambda).is_some() {
        return Err(Error::Precondition(format!("boundary {p} is already {lambda}-tied")));
    }
    let dual = omega.dual_of(&lam)?.clone();
    let sol = match oracle {
        Oracle::Solution(s) => Some(s),
        Oracle::Symbolic(_) => None,
    };
    let split = match oracle {
        Oracle::Symbolic(sys) => {
            let target = offset_row(&lam, p, omega.rho);
            let q = (dual.left() + 1..dual.right())
                .find(|&q| {
                    let row: Vec<i64> = target.iter().zip(offset_row(&dual, q, omega.rho)).map(|(a, b)| a - b).collect();
                    sys.implies(&row)
                })
                .ok_or_else(|| Error::Precondition(format!("lengths do not determine the image of {p} on {}", dual.id)))?;
            let mut g = omega.clone();
            g.add_connection(p, lambda, q)?;
            return Ok(TransformResult::identity(
                omega,
                g,
                format!("ET5(a) tie ({p}, {lambda}, {q}); morphism tagged isomorphism"),
                None,
            ));
        }
        Oracle::Solution(s) => {
            let lengths = s.lengths();
            let off = offset(&lam, p, &lengths);
            let rank = lengths.first().map_or(1, LambdaScalar::rank);
            let mut pos = LambdaScalar::zero(rank);
            let mut found = None;
            if dual.epsilon == 1 {
                for q in dual.left()..dual.right() {
                    if pos == off {
                        found = Some((q, None));
                        break;
                    }
                    let next = &pos + &lengths[q - 1];
                    if next > off {
                        found = Some((q, Some(&off - &pos)));
                        break;
                    }
                    pos = next;
                }
            } else {
                for q in (dual.left() + 1..=dual.right()).rev() {
                    if pos == off {
                        found = Some((q, None));
                        break;
                    }
                    let len = &lengths[q - 2];
                    let next = &pos + len;
                    if next > off {
                        // split item q−1 so that its right part has length off − pos
                        found = Some((q - 1, Some(len - &(&off - &pos))));
                        break;
                    }
                    pos = next;
                }
            }
            found.ok_or_else(|| Error::Precondition(format!("image of {p} not located on {}", dual.id)))?
        }
    };
    match split {
        (q, None) => {
            let mut g = omega.clone();
            g.add_connection(p, lambda, q)?;
            Ok(TransformResult::identity(
                omega,
                g,
                format!("ET5(a) tie ({p}, {lambda}, {q}); morphism tagged isomorphism"),
                sol,
            ))
        }
        (s, Some(left_len)) => {
            let u = sol.unwrap();
            let bmap = |b: usize| if b > s { b + 1 } else { b };
            let mut g = omega.clone();
            g.renumber(bmap);
            g.rho += 1;
            g.heights = BTreeMap::new();
            for (&i, &h) in &omega.heights {
                if i < s {
                    g.heights.insert(i, h);
                } else if i > s {
                    g.heights.insert(i + 1, h);
                }
            }
            let (a, b) = u.item(s).split_at(&left_len)?;
            if omega.heights.contains_key(&s) {
                g.heights.insert(s, a.height().0);
                g.heights.insert(s + 1, b.height().0);
            }
            let q = s + 1;
            g.add_connection(bmap(p), lambda, q)?;
            let mut items = u.items.clone();
            items[s - 1] = a;
            items.insert(s, b);
            let item_map = (1..=omega.rho)
                .map(|i| match i.cmp(&s) {
                    std::cmp::Ordering::Less => vec![i as i32],
                    std::cmp::Ordering::Equal => vec![s as i32, s as i32 + 1],
                    std::cmp::Ordering::Greater => vec![i as i32 + 1],
                })
                .collect();
            let origins = g.bases.iter().map(|b| (b.id.clone(), b.id.clone())).collect();
            Ok(TransformResult {
                target: g,
                morphism: Morphism { item_map, kind: MorphismKind::Isomorphism },
                note: format!("ET5(b) split h{s} and tie ({}, {lambda}, {q})", bmap(p)),
                solution: Some(Solution::new(u.rank, items)),
                boundary_map: (0..=omega.rho + 1).map(|b| if b == 0 { None } else { Some(bmap(b)) }).collect(),
                origins,
            })
        }
    }
}

/// Accumulates a sequence of transformations.
struct Chain {
    source_rho: usize,
    omega: GenEq,
    morphism: Morphism,
    solution: Option<Solution>,
    notes: Vec<String>,
    bmap: Vec<Option<usize>>,
    origins: BTreeMap<String, String>,
}

impl Chain {
    fn new(omega: &GenEq, sol: Option<&Solution>) -> Self {
        Chain {
            source_rho: omega.rho,
            omega: omega.clone(),
            morphism: Morphism::identity(omega.rho),
            solution: sol.cloned(),
            notes: Vec::new(),
            bmap: (0..=omega.rho + 1).map(Some).collect(),
            origins: omega.bases.iter().map(|b| (b.id.clone(), b.id.clone())).collect(),
        }
    }

    fn push(&mut self, r: TransformResult) {
        self.morphism = self.morphism.then(&r.morphism);
        self.bmap = self.bmap.iter().map(|b| b.and_then(|b| r.boundary_map.get(b).copied().flatten())).collect();
        self.origins = r
            .origins
            .iter()
            .filter_map(|(new, old)| self.origins.get(old).map(|o| (new.clone(), o.clone())))
            .collect();
        self.omega = r.target;
        self.solution = r.solution;
        self.notes.push(r.note);
    }

    fn sol(&self) -> Option<&Solution> {
        self.solution.as_ref()
    }

    fn et1(&mut self, p: usize, lambda: &str) -> Result<()> {
        let r = et1_cut(&self.omega, p, lambda, self.sol())?;
        self.push(r);
        Ok(())
    }

    fn et2(&mut self, lambda: &str, mu: &str) -> Result<()> {
        let r = et2_transfer(&self.omega, lambda, mu, self.sol())?;
        self.push(r);
        Ok(())
    }

    fn et4(&mut self, lambda: &str) -> Result<()> {
        let r = et4_remove_lone(&self.omega, lambda, self.sol())?;
        self.push(r);
        Ok(())
    }

    fn et5(&mut self, lambda: &str, p: usize) -> Result<()> {
        let r = match &self.solution {
            Some(s) => et5_introduce_boundary(&self.omega, lambda, p, Oracle::Solution(s))?,
            None => {
                let sys = self.omega.linear_system();
                et5_introduce_boundary(&self.omega, lambda, p, Oracle::Symbolic(&sys))?
            }
        };
        self.push(r);
        Ok(())
    }

    /// Ties every boundary of `[lo, hi]` strictly inside `lambda`; returns
    /// the range after renumbering.
    fn tie_range(&mut self, lambda: &str, mut lo: usize, mut hi: usize, budget: usize) -> Result<(usize, usize)> {
        for _ in 0..budget {
            let lam = self.omega.require_base(lambda)?.clone();
            let Some(b) = (lo..=hi).find(|&b| lam.strictly_inside(b) && self.omega.tie(b, lambda).is_none()) else {
                return Ok((lo, hi));
            };
            let r = match &self.solution {
                Some(s) => et5_introduce_boundary(&self.omega, lambda, b, Oracle::Solution(s))?,
                None => {
                    let sys = self.omega.linear_system();
                    et5_introduce_boundary(&self.omega, lambda, b, Oracle::Symbolic(&sys))?
                }
            };
            lo = r.boundary_map[lo].unwrap_or(lo);
            hi = r.boundary_map[hi].unwrap_or(hi);
            self.push(r);
        }
        Err(Error::Structure(format!("ties on {lambda} keep splitting items")))
    }

    /// Ties every boundary strictly inside `lambda`.
    fn tie_all(&mut self, lambda: &str) -> Result<()> {
        loop {
            let lam = self.omega.require_base(lambda)?.clone();
            let b = (lam.left() + 1..lam.right()).find(|&b| self.omega.tie(b, lambda).is_none());
            match b {
                Some(b) => self.et5(lambda, b)?,
                None => return Ok(()),
            }
        }
    }

    fn finish(self, note: String) -> TransformResult {
        let _ = self.source_rho;
        TransformResult {
            target: self.omega,
            morphism: self.morphism,
            note: if self.notes.is_empty() { note } else { format!("{note}: {}", self.notes.join("; ")) },
            solution: self.solution,
            boundary_map: self.bmap,
            origins: self.origins,
        }
    }
}

fn cut_through(chain: &mut Chain, b: &mut usize, other: &mut usize) -> Result<bool> {
    let Some(mu) = chain.omega.bases.iter().find(|m| m.strictly_inside(*b)).map(|m| m.id.clone()) else {
        return Ok(false);
    };
    let before = chain.bmap.clone();
    let _ = before;
    if chain.omega.tie(*b, &mu).is_none() {
        let rho = chain.omega.rho;
        let r = match &chain.solution {
            Some(s) => et5_introduce_boundary(&chain.omega, &mu, *b, Oracle::Solution(s))?,
            None => {
                let sys = chain.omega.linear_system();
                et5_introduce_boundary(&chain.omega, &mu, *b, Oracle::Symbolic(&sys))?
            }
        };
        let map = r.boundary_map.clone();
        chain.push(r);
        if chain.omega.rho != rho {
            *b = map[*b].unwrap();
            *other = map[*other].unwrap();
        }
    }
    chain.et1(*b, &mu)?;
    Ok(true)
}

/// D1: cut every base through the endpoints of `[i, j]` and make it a
/// stored section.
pub fn d1_close_section(omega: &GenEq, i: usize, j: usize, sol: Option<&Solution>) -> Result<TransformResult> {
    if !(1 <= i && i < j && j <= omega.rho + 1) {
        return Err(Error::Precondition(format!("[{i}, {j}] is not a section of [1, {}]", omega.rho + 1)));
    }
    let mut chain = Chain::new(omega, sol);
    let (mut a, mut b) = (i, j);
    loop {
        if cut_through(&mut chain, &mut a, &mut b)? {
            continue;
        }
        if cut_through(&mut chain, &mut b, &mut a)? {
            continue;
        }
        break;
    }
    chain.omega.split_section_at(a);
    chain.omega.split_section_at(b);
    Ok(chain.finish(format!("D1 close [{i}, {j}]")))
}

/// D2: move stored section `k` to position `to` in the section order.
pub fn d2_transport(omega: &GenEq, k: usize, to: usize, sol: Option<&Solution>) -> Result<TransformResult> {
    let n = omega.sections.len();
    if k >= n || to >= n {
        return Err(Error::Precondition(format!("section index out of range ({k} -> {to} of {n})")));
    }
    let secs = &omega.sections;
    let mut order: Vec<usize> = (0..n).collect();
    let moved = order.remove(k);
    order.insert(to, moved);
    let mut new_start = vec![0; n];
    let mut at = 1;
    for &s in &order {
        new_start[s] = at;
        at += secs[s].end - secs[s].start;
    }
    let map_in = |sec: usize, b: usize| new_start[sec] + (b - secs[sec].start);
    let sec_of = |b: usize| omega.section_of_item(b.min(omega.rho)).unwrap_or(n - 1);
    let mut g = omega.clone();
    for b in &mut g.bases {
        let s = sec_of(b.left());
        b.alpha = map_in(s, b.alpha);
        b.beta = map_in(s, b.beta);
    }
    for c in &mut g.connections {
        let lam = omega.base(&c.lambda).unwrap();
        let dual = omega.base(&lam.dual).unwrap();
        c.p = map_in(sec_of(lam.left()), c.p);
        c.q = map_in(sec_of(dual.left()), c.q);
    }
    g.sections = order
        .iter()
        .map(|&s| Section { start: new_start[s], end: new_start[s] + secs[s].end - secs[s].start, active: secs[s].active })
        .collect();
    let item_new = |i: usize| map_in(sec_of(i), i);
    g.heights = omega.heights.iter().map(|(&i, &h)| (item_new(i), h)).collect();
    let item_map = (1..=omega.rho).map(|i| vec![item_new(i) as i32]).collect();
    let solution = sol.map(|u| {
        let mut items = u.items.clone();
        for (i, w) in u.items.iter().enumerate() {
            items[item_new(i + 1) - 1] = w.clone();
        }
        Solution::new(u.rank, items)
    });
    let boundary_map = (0..=omega.rho + 1)
        .map(|b| if b == 0 { None } else { Some(if b > omega.rho { map_in(n - 1, b) } else { item_new(b) }) })
        .collect();
    let origins = g.bases.iter().map(|b| (b.id.clone(), b.id.clone())).collect();
    Ok(TransformResult {
        target: g,
        morphism: Morphism { item_map, kind: MorphismKind::Isomorphism },
        note: format!("D2 move section {} to position {}", k + 1, to + 1),
        solution,
        boundary_map,
        origins,
    })
}

/// D3: move the free item `h_q` of an active section to the end as a
/// non-active section.
pub fn d3_move_free(omega: &GenEq, q: usize, sol: Option<&Solution>) -> Result<TransformResult> {
    if q < 1 || q > omega.rho || !omega.is_free(q) {
        return Err(Error::Precondition(format!("h{q} is not a free item")));
    }
    if !omega.is_active_item(q) {
        return Err(Error::Precondition(format!("h{q} is not in an active section")));
    }
    let mut chain = Chain::new(omega, sol);
    chain.omega.split_section_at(q);
    chain.omega.split_section_at(q + 1);
    let k = chain.omega.section_of_item(q).unwrap();
    let last = chain.omega.sections.len() - 1;
    let r = d2_transport(&chain.omega, k, last, chain.sol())?;
    chain.push(r);
    chain.omega.sections.last_mut().unwrap().active = false;
    Ok(chain.finish(format!("D3 move free h{q} to the end")))
}

/// A base whose interval is a closed section with all interior boundaries open.
pub fn is_complete(omega: &GenEq, b: &Base) -> bool {
    let (l, r) = (b.left(), b.right());
    omega.is_closed(l) && omega.is_closed(r) && (l + 1..r).all(|x| !omega.is_closed(x))
}

/// D4: transfer everything from a complete base `μ` onto `μ̄`, then remove
/// `μ` with its section.
pub fn d4_delete_complete(omega: &GenEq, mu: &str, sol: Option<&Solution>) -> Result<TransformResult> {
    let m = omega.require_base(mu)?.clone();
    if !is_complete(omega, &m) {
        return Err(Error::Precondition(format!("{mu} is not a complete base")));
    }
    let dual = omega.dual_of(&m)?;
    if dual.left() < m.right() && m.left() < dual.right() {
        return Err(Error::Precondition(format!("{mu} overlaps its dual")));
    }
    let mut chain = Chain::new(omega, sol);
    chain.omega.split_section_at(m.left());
    chain.omega.split_section_at(m.right());
    chain.tie_all(mu)?;
    loop {
        let cur = chain.omega.require_base(mu)?.clone();
        let inner = chain
            .omega
            .bases
            .iter()
            .find(|b| b.id != cur.id && cur.left() <= b.left() && b.right() <= cur.right())
            .map(|b| b.id.clone());
        match inner {
            Some(id) => chain.et2(mu, &id)?,
            None => break,
        }
    }
    chain.et4(mu)?;
    Ok(chain.finish(format!("D4 delete complete base {mu}")))
}

/// Output of [`d5_kernel`].
#[derive(Clone, Debug, Serialize)]
pub struct KernelResult {
    pub kernel: GenEq,
    /// `K` with `G_Ω ≅ G_{Ker̄} ∗ F(K)`.
    pub free_rank: i64,
    pub eliminated: Vec<String>,
    pub trace: Vec<String>,
    #[serde(skip)]
    pub origins: BTreeMap<String, String>,
}

impl KernelResult {
    /// Presentation of the kernel with its free items dropped.
    pub fn reduced_presentation(&self) -> Presentation {
        let g = &self.kernel;
        let covered: Vec<usize> = (1..=g.rho).filter(|&i| !g.is_free(i)).collect();
        let index: HashMap<usize, i32> = covered.iter().enumerate().map(|(k, &i)| (i, k as i32 + 1)).collect();
        let relators = g
            .presentation()
            .relators
            .iter()
            .map(|r| r.iter().map(|&x| index[&(x.unsigned_abs() as usize)] * x.signum()).collect())
            .collect();
        Presentation { generators: covered.len(), relators }
    }
}

/// Cuts bases along every boundary connection (ET1 until none remain).
pub fn cut_all_connections(omega: &GenEq) -> Result<TransformResult> {
    let mut chain = Chain::new(omega, None);
    while let Some(c) = chain.omega.connections.first().cloned() {
        chain.et1(c.p, &c.lambda)?;
    }
    Ok(chain.finish("cut along all connections".into()))
}

/// Active bases that are eliminable: they contain an item covered by no other
/// base, or one of their endpoints other than `1` and `ρ + 1` is an endpoint
/// of no other base.
pub fn eliminable_bases(g: &GenEq) -> Vec<(String, String)> {
    let last = g.rho + 1;
    let mut out = Vec::new();
    for m in &g.bases {
        if !g.is_active_base(m) {
            continue;
        }
        if let Some(i) = (m.left()..m.right()).find(|&i| g.gamma(i) == 1) {
            out.push((m.id.clone(), format!("h{i} covered once")));
            continue;
        }
        let loose = [m.alpha, m.beta]
            .into_iter()
            .find(|&e| e != 1 && e != last && !g.bases.iter().any(|o| o.id != m.id && o.is_endpoint(e)));
        if let Some(e) = loose {
            out.push((m.id.clone(), format!("endpoint {e} touches no other base")));
        }
    }
    out
}

pub fn remove_pair(g: &GenEq, id: &str) -> GenEq {
    let dual = g.base(id).map(|b| b.dual.clone()).unwrap_or_default();
    let mut out = g.clone();
    out.bases.retain(|b| b.id != id && b.id != dual);
    out.connections.retain(|c| c.lambda != id && c.lambda != dual);
    out
}

/// D5: cut along all connections, then remove eliminable pairs until none
/// remain.
pub fn d5_kernel(omega: &GenEq) -> Result<KernelResult> {
    let cut = cut_all_connections(omega)?;
    let mut g = cut.target;
    let mut eliminated = Vec::new();
    let mut trace = vec![cut.note];
    while let Some((id, why)) = eliminable_bases(&g).into_iter().next() {
        trace.push(format!("eliminate {id} ({why})"));
        eliminated.push(id.clone());
        g = remove_pair(&g, &id);
    }
    let free = (1..=g.rho).filter(|&i| g.is_free(i)).count() as i64;
    let origins = g.bases.iter().filter_map(|b| cut.origins.get(&b.id).map(|o| (b.id.clone(), o.clone()))).collect();
    Ok(KernelResult { free_rank: free - eliminated.len() as i64, kernel: g, eliminated, trace, origins })
}

fn heights_of(omega: &GenEq, sol: Option<&Solution>) -> Result<Vec<Option<Height>>> {
    let lengths = sol.map(Solution::lengths);
    let hs: Vec<Option<Height>> = (1..=omega.rho).map(|i| omega.item_height(i, lengths.as_deref())).collect();
    Ok(hs)
}

/// Maximal height among active items, and the per-item heights.
pub fn active_heights(omega: &GenEq, sol: Option<&Solution>) -> Result<(Height, Vec<Option<Height>>)> {
    let hs = heights_of(omega, sol)?;
    let mut max = None;
    for i in 1..=omega.rho {
        if omega.is_active_item(i) {
            let h = hs[i - 1].ok_or_else(|| Error::Precondition(format!("no height known for h{i}")))?;
            max = Some(max.map_or(h, |m: Height| m.max(h)));
        }
    }
    Ok((max.unwrap_or(Height(0)), hs))
}

/// Active items with `γ = 1` whose height equals the active maximum.
pub fn linear_items(omega: &GenEq, sol: Option<&Solution>) -> Result<Vec<usize>> {
    let (max, hs) = active_heights(omega, sol)?;
    Ok((1..=omega.rho)
        .filter(|&i| omega.is_active_item(i) && omega.gamma(i) == 1 && hs[i - 1] == Some(max))
        .collect())
}

/// Boundaries delimiting the maximal closed sections of the active part.
fn closed_sections(g: &GenEq) -> Vec<(usize, usize)> {
    let closed: Vec<usize> = (1..=g.rho + 1).filter(|&b| g.is_closed(b)).collect();
    closed.windows(2).map(|w| (w[0], w[1])).collect()
}

fn d6_case3(omega: &GenEq, i: usize, sol: Option<&Solution>) -> Result<Option<TransformResult>> {
    for (a, b) in closed_sections(omega) {
        if !omega.is_active_item(a) {
            continue;
        }
        let inside: Vec<&Base> = omega.bases.iter().filter(|m| a <= m.left() && m.right() <= b).collect();
        if inside.len() != 2 {
            continue;
        }
        let (m1, m2) = (inside[0], inside[1]);
        if m1.dual == m2.id || omega.is_matched(m1) || omega.is_matched(m2) {
            continue;
        }
        if !(m1.left() == a && m1.right() == b && m2.left() == a && m2.right() == b) {
            continue;
        }
        let d1 = omega.dual_of(m1)?;
        if d1.left() < b && a < d1.right() {
            continue;
        }
        let tilde = d1_close_section(omega, i, i + 1, sol)?;
        let ker = d5_kernel(&tilde.target)?;
        let in_kernel = ker.kernel.bases.iter().any(|kb| {
            let o = ker.origins.get(&kb.id).and_then(|t| tilde.origins.get(t));
            o.is_some_and(|o| o == &m1.id || o == &m2.id)
        });
        if in_kernel {
            continue;
        }
        let (id1, id2) = (m1.id.clone(), m2.id.clone());
        let mut chain = Chain::new(omega, sol);
        chain.tie_all(&id1)?;
        chain.et2(&id1, &id2)?;
        chain.et4(&id1)?;
        return Ok(Some(chain.finish(format!("D6 (paired section [{a}, {b}]) for h{i}"))));
    }
    Ok(None)
}

/// D6: one step of linear elimination.
pub fn d6_linear_step(omega: &GenEq, sol: Option<&Solution>) -> Result<TransformResult> {
    let items = linear_items(omega, sol)?;
    if items.is_empty() {
        return Err(Error::NotApplicable("no linear item".into()));
    }
    let only_base = |i: usize| omega.bases.iter().find(|b| b.contains_item(i)).unwrap().id.clone();
    if let Some(&i) = items.iter().find(|&&i| omega.is_closed(i) && omega.is_closed(i + 1)) {
        let mu = only_base(i);
        let mut chain = Chain::new(omega, sol);
        chain.omega.split_section_at(i);
        chain.omega.split_section_at(i + 1);
        chain.et4(&mu)?;
        return Ok(chain.finish(format!("D6 (closed) h{i}")));
    }
    if let Some(&i) = items.iter().find(|&&i| omega.is_closed(i) != omega.is_closed(i + 1)) {
        let mu = only_base(i);
        let open = if omega.is_closed(i) { i + 1 } else { i };
        let mut chain = Chain::new(omega, sol);
        let mut b = open;
        let mut other = if open == i { i + 1 } else { i };
        cut_through(&mut chain, &mut b, &mut other)?;
        let piece = chain
            .omega
            .bases
            .iter()
            .find(|m| m.left() == b.min(other) && m.right() == b.max(other))
            .map(|m| m.id.clone())
            .ok_or_else(|| Error::Structure(format!("no piece of {mu} over h{i}")))?;
        let (lo, hi) = (b.min(other), b.max(other));
        chain.omega.split_section_at(lo);
        chain.omega.split_section_at(hi);
        chain.et4(&piece)?;
        return Ok(chain.finish(format!("D6 (half-open) h{i}")));
    }
    let i = items[0];
    if let Some(r) = d6_case3(omega, i, sol)? {
        return Ok(r);
    }
    let closed = d1_close_section(omega, i, i + 1, sol)?;
    let lo = closed.boundary_map[i].unwrap();
    let hi = closed.boundary_map[i + 1].unwrap();
    let piece = closed
        .target
        .bases
        .iter()
        .find(|m| m.left() == lo && m.right() == hi)
        .map(|m| m.id.clone())
        .ok_or_else(|| Error::Structure(format!("no lone base over [{lo}, {hi}]")))?;
    let mut chain = Chain::new(omega, sol);
    chain.push(closed);
    chain.et4(&piece)?;
    Ok(chain.finish(format!("D6 (open) h{i}")))
}

/// Remembers canonical forms to detect recurring equations.
#[derive(Default, Debug)]
pub struct LoopDetector {
    seen: HashMap<String, usize>,
    step: usize,
}

impl LoopDetector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `g`; returns the period if it was seen before.
    pub fn observe(&mut self, g: &GenEq) -> Option<usize> {
        let key = g.canonical_key();
        let step = self.step;
        self.step += 1;
        match self.seen.insert(key, step) {
            Some(prev) => Some(step - prev),
            None => None,
        }
    }
}

#[derive(Debug)]
pub enum Linear {
    Step(TransformResult),
    LoopDetected { period: usize, step: TransformResult },
}

/// D6 with recurrence detection.
pub fn d6_linear_step_tracked(omega: &GenEq, sol: Option<&Solution>, det: &mut LoopDetector) -> Result<Linear> {
    if det.step == 0 {
        det.observe(omega);
    }
    let r = d6_linear_step(omega, sol)?;
    Ok(match det.observe(&r.target) {
        Some(period) => Linear::LoopDetected { period, step: r },
        None => Linear::Step(r),
    })
}

/// Output of [`d7_tietze_cleaning`].
#[derive(Debug)]
pub struct Cleaning {
    pub result: TransformResult,
    pub loop_period: Option<usize>,
    /// Rank of the free factor split off when a loop forced the kernel.
    pub free_rank: Option<i64>,
    pub steps: usize,
}

/// D7: linear elimination, matched pairs, complete bases, free items.
pub fn d7_tietze_cleaning(omega: &GenEq, sol: Option<&Solution>, max_linear: usize) -> Result<Cleaning> {
    let mut chain = Chain::new(omega, sol);
    let mut det = LoopDetector::new();
    let mut loop_period = None;
    let mut free_rank = None;
    let mut steps = 0;
    loop {
        if steps >= max_linear {
            return Err(Error::Precondition(format!("linear elimination exceeded {max_linear} steps")));
        }
        match d6_linear_step_tracked(&chain.omega, chain.sol(), &mut det) {
            Ok(Linear::Step(r)) => {
                chain.push(r);
                steps += 1;
            }
            Ok(Linear::LoopDetected { period, step }) => {
                chain.push(step);
                steps += 1;
                loop_period = Some(period);
                let k = d5_kernel(&chain.omega)?;
                free_rank = Some(k.free_rank);
                let m = Morphism { item_map: Morphism::identity(chain.omega.rho).item_map, kind: MorphismKind::Epimorphism };
                let origins = k.origins.clone();
                let r = TransformResult {
                    target: k.kernel,
                    morphism: m,
                    note: format!("kernel replacement after loop of period {period} (free rank {})", k.free_rank),
                    solution: chain.solution.clone(),
                    boundary_map: (0..=chain.omega.rho + 1).map(Some).collect(),
                    origins,
                };
                chain.push(r);
                break;
            }
            Err(Error::NotApplicable(_)) => break,
            Err(e) => return Err(e),
        }
    }
    loop {
        let g = &chain.omega;
        if let Some(id) = g.bases.iter().find(|b| g.is_matched(b)).map(|b| b.id.clone()) {
            let r = et3_remove_matched(g, &id, chain.sol())?;
            chain.push(r);
            continue;
        }
        let complete = g
            .bases
            .iter()
            .find(|b| {
                g.is_active_base(b)
                    && is_complete(g, b)
                    && g.base(&b.dual).is_some_and(|d| d.right() <= b.left() || b.right() <= d.left())
            })
            .map(|b| b.id.clone());
        match complete {
            Some(id) => {
                let r = d4_delete_complete(g, &id, chain.sol())?;
                chain.push(r);
            }
            None => break,
        }
    }
    while let Some(q) = (1..=chain.omega.rho).find(|&q| chain.omega.is_free(q) && chain.omega.is_active_item(q)) {
        let r = d3_move_free(&chain.omega, q, chain.sol())?;
        chain.push(r);
    }
    Ok(Cleaning { result: chain.finish("D7 Tietze cleaning".into()), loop_period, free_rank, steps })
}

/// The carrier: a base starting at `1` with the largest right end, lowest id
/// on ties.
pub fn carrier(omega: &GenEq) -> Option<&Base> {
    omega
        .bases
        .iter()
        .filter(|b| b.left() == 1 && omega.is_active_base(b))
        .max_by(|a, b| a.right().cmp(&b.right()).then_with(|| b.id.cmp(&a.id)))
}

/// Active bases other than `μ`, `μ̄` lying inside the carrier `μ`.
pub fn transfer_bases(omega: &GenEq, mu: &Base) -> Vec<String> {
    omega
        .bases
        .iter()
        .filter(|b| b.id != mu.id && b.id != mu.dual && omega.is_active_base(b) && b.right() <= mu.right())
        .map(|b| b.id.clone())
        .collect()
}

/// D8: transfer all transfer bases onto the carrier's dual, cut the carrier
/// where its exclusive prefix ends and delete that prefix.
pub fn d8_entire_step(omega: &GenEq, sol: Option<&Solution>) -> Result<TransformResult> {
    let (max, hs) = active_heights(omega, sol)?;
    if let Some(i) =
        (1..=omega.rho).find(|&i| omega.is_active_item(i) && hs[i - 1] == Some(max) && omega.gamma(i) < 2)
    {
        return Err(Error::Precondition(format!("h{i} has γ < 2")));
    }
    let mu = carrier(omega).ok_or_else(|| Error::Precondition("no leading base".into()))?.clone();
    let transfer = transfer_bases(omega, &mu);
    let mut chain = Chain::new(omega, sol);
    let budget = 8 * (omega.rho + omega.bases.len()) + 64;
    for t in &transfer {
        let tb = chain.omega.require_base(t)?.clone();
        chain.tie_range(&mu.id, tb.left(), tb.right(), budget)?;
        chain.et2(&mu.id, t)?;
    }
    let g = &chain.omega;
    let cur = g.require_base(&mu.id)?.clone();
    let mut i = 0;
    while i + 1 < cur.right() && g.gamma(i + 1) == 1 {
        i += 1;
    }
    if i == 0 {
        return Err(Error::Precondition(format!("h1 is not covered by {} alone after transfers", mu.id)));
    }
    let (_, i1) = chain.tie_range(&mu.id, 1, i + 1, budget)?;
    let i = i1 - 1;
    let cur = chain.omega.require_base(&mu.id)?.clone();
    let head = if i + 1 < cur.right() {
        chain.et1(i + 1, &mu.id)?;
        chain
            .omega
            .bases
            .iter()
            .find(|b| b.left() == 1 && b.right() == i + 1)
            .map(|b| b.id.clone())
            .ok_or_else(|| Error::Structure("carrier head missing after cut".into()))?
    } else {
        mu.id.clone()
    };
    chain.omega.split_section_at(i + 1);
    chain.et4(&head)?;
    Ok(chain.finish(format!("D8 carrier {} over [1, {}]", mu.id, i + 1)))
}

/// Names accepted by [`apply_named`].
pub const TRANSFORMS: &[&str] = &["et1", "et2", "et3", "et4", "et5", "d1", "d2", "d3", "d4", "d5", "d6", "d7", "d8"];

/// Command-line style dispatch: `name` with positional parameters.
pub fn apply_named(omega: &GenEq, name: &str, params: &[String], sol: Option<&Solution>) -> Result<TransformResult> {
    let num = |k: usize| -> Result<usize> {
        params
            .get(k)
            .ok_or_else(|| Error::Precondition(format!("{name}: missing parameter {}", k + 1)))?
            .parse()
            .map_err(|_| Error::Parse(format!("{name}: parameter {} must be a number", k + 1)))
    };
    let s = |k: usize| -> Result<&str> {
        params.get(k).map(String::as_str).ok_or_else(|| Error::Precondition(format!("{name}: missing parameter {}", k + 1)))
    };
    let sys;
    let oracle = match sol {
        Some(u) => Oracle::Solution(u),
        None => {
            sys = omega.linear_system();
            Oracle::Symbolic(&sys)
        }
    };
    match name {
        "et1" => et1_cut(omega, num(0)?, s(1)?, sol),
        "et2" => et2_transfer(omega, s(0)?, s(1)?, sol),
        "et3" => et3_remove_matched(omega, s(0)?, sol),
        "et4" => et4_remove_lone(omega, s(0)?, sol),
        "et5" => et5_introduce_boundary(omega, s(0)?, num(1)?, oracle),
        "d1" => d1_close_section(omega, num(0)?, num(1)?, sol),
        "d2" => d2_transport(omega, num(0)? - 1, num(1)? - 1, sol),
        "d3" => d3_move_free(omega, num(0)?, sol),
        "d4" => d4_delete_complete(omega, s(0)?, sol),
        "d5" => {
            let k = d5_kernel(omega)?;
            let mut r = TransformResult::identity(omega, k.kernel, format!("D5 kernel, free rank {}", k.free_rank), sol);
            r.morphism.kind = MorphismKind::Epimorphism;
            Ok(r)
        }
        "d6" => d6_linear_step(omega, sol),
        "d7" => d7_tietze_cleaning(omega, sol, 10_000).map(|c| c.result),
        "d8" => d8_entire_step(omega, sol),
        _ => Err(Error::Parse(format!("unknown transformation `{name}`"))),
    }
}

/// The item word `h[from, to)` read along `base` orientation; used by callers
/// that rebuild readings after renumbering.
pub fn reading_between(from: usize, to: usize, epsilon: i8) -> ItemWord {
    let w = item_range(from, to);
    if epsilon == 1 {
        w
    } else {
        inverse_item_word(&w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::LambdaWord;

    fn sol(rank: usize, items: &[&str]) -> Solution {
        Solution::new(rank, items.iter().map(|s| LambdaWord::parse(s, rank).unwrap()).collect())
    }

    fn spans(g: &GenEq) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = g.bases.iter().map(|b| (b.alpha, b.beta)).collect();
        v.sort();
        v
    }

    fn check(r: &TransformResult, source: &GenEq, u: &Solution) {
        r.target.validate().unwrap();
        let pushed = r.solution.as_ref().expect("pushed solution");
        r.target.verify_solution(pushed).unwrap();
        let back = transport(&r.morphism, pushed).unwrap();
        assert_eq!(&back, u, "{}", r.note);
        source.verify_solution(&back).unwrap();
    }

    #[test]
    fn et1_examples() {
        let mut g = GenEq::new(1, 6);
        g.add_pair("mu", (1, 4), "mub", (4, 7));
        g.add_connection(2, "mu", 5).unwrap();
        let u = sol(1, &["a", "b", "c", "a", "b", "c"]);
        g.verify_solution(&u).unwrap();
        let r = et1_cut(&g, 2, "mu", Some(&u)).unwrap();
        assert_eq!(spans(&r.target), vec![(1, 2), (2, 4), (4, 5), (5, 7)]);
        assert!(r.target.connections.is_empty());
        check(&r, &g, &u);
        assert!(et1_cut(&g, 1, "mu", None).is_err());

        let mut g = GenEq::new(1, 6);
        g.add_pair("mu", (1, 4), "mub", (7, 4));
        g.add_connection(2, "mu", 6).unwrap();
        let u = sol(1, &["a", "b", "c", "c^-1", "b^-1", "a^-1"]);
        g.verify_solution(&u).unwrap();
        let r = et1_cut(&g, 2, "mu", Some(&u)).unwrap();
        assert_eq!(spans(&r.target), vec![(1, 2), (2, 4), (6, 4), (7, 6)]);
        check(&r, &g, &u);
    }

    #[test]
    fn et2_examples() {
        let mut g = GenEq::new(1, 6);
        g.add_pair("lam", (1, 4), "lamb", (4, 7));
        g.add_pair("mu", (2, 3), "mub", (2, 3));
        g.add_connection(2, "lam", 5).unwrap();
        g.add_connection(3, "lam", 6).unwrap();
        let u = sol(1, &["a", "b", "c", "a", "b", "c"]);
        g.verify_solution(&u).unwrap();
        let r = et2_transfer(&g, "lam", "mu", Some(&u)).unwrap();
        assert_eq!(r.target.base("mu").map(|b| (b.alpha, b.beta)), Some((5, 6)));
        check(&r, &g, &u);

        let mut g2 = g.clone();
        g2.connections.retain(|c| !(c.p == 3 || c.q == 3));
        assert!(matches!(et2_transfer(&g2, "lam", "mu", None), Err(Error::Precondition(_))));

        let mut g = GenEq::new(1, 4);
        g.add_pair("lam", (1, 3), "lamb", (3, 5));
        g.add_pair("mu", (1, 3), "mub", (3, 5));
        g.add_connection(2, "lam", 4).unwrap();
        let r = et2_transfer(&g, "lam", "mu", None).unwrap();
        assert_eq!(r.target.base("mu").map(|b| (b.alpha, b.beta)), Some((3, 5)));
    }

    #[test]
    fn et3_examples() {
        let mut g = GenEq::new(1, 5);
        g.add_pair("m", (2, 5), "mb", (2, 5));
        let u = sol(1, &["a", "b", "c", "d", "e"]);
        let r = et3_remove_matched(&g, "m", Some(&u)).unwrap();
        assert!(r.target.bases.is_empty());
        assert_eq!(r.solution.as_ref(), Some(&u));
        let mut g = GenEq::new(1, 4);
        g.add_pair("m", (1, 3), "mb", (3, 5));
        assert!(et3_remove_matched(&g, "m", None).is_err());
    }

    #[test]
    fn et4_examples() {
        let mut g = GenEq::new(1, 6);
        g.add_pair("lam", (1, 3), "lamb", (5, 7));
        g.add_connection(2, "lam", 6).unwrap();
        g.sections = vec![Section { start: 1, end: 3, active: true }, Section { start: 3, end: 7, active: true }];
        let u = sol(1, &["a", "b", "c", "d", "a", "b"]);
        g.verify_solution(&u).unwrap();
        let r = et4_remove_lone(&g, "lam", Some(&u)).unwrap();
        assert_eq!(r.target.rho, 4);
        assert_eq!(r.morphism.item_map[0], vec![3]);
        assert_eq!(r.morphism.item_map[1], vec![4]);
        assert_eq!(r.morphism.item_map[2], vec![1]);
        check(&r, &g, &u);

        let mut g = GenEq::new(1, 3);
        g.add_pair("lam", (1, 2), "lamb", (4, 2));
        g.sections = vec![Section { start: 1, end: 2, active: true }, Section { start: 2, end: 4, active: true }];
        let u = sol(1, &["a b", "b^-1", "a^-1"]);
        g.verify_solution(&u).unwrap();
        let r = et4_remove_lone(&g, "lam", Some(&u)).unwrap();
        assert_eq!(r.morphism.item_map[0], vec![-2, -1]);
        check(&r, &g, &u);

        let mut g = GenEq::new(1, 4);
        g.add_pair("lam", (1, 3), "lamb", (3, 5));
        g.add_pair("x", (2, 4), "xb", (2, 4));
        assert!(matches!(et4_remove_lone(&g, "lam", None), Err(Error::Precondition(m)) if m.contains("intersects")));
    }

    #[test]
    fn et5_examples() {
        let mut g = GenEq::new(1, 4);
        g.add_pair("mu", (1, 3), "mub", (3, 5));
        let u = sol(1, &["a", "b", "a", "b"]);
        let r = et5_introduce_boundary(&g, "mu", 2, Oracle::Solution(&u)).unwrap();
        assert_eq!(r.target.tie(2, "mu"), Some(4));
        check(&r, &g, &u);
        assert!(et5_introduce_boundary(&r.target, "mu", 2, Oracle::Solution(&u)).is_err());

        let mut g = GenEq::new(1, 3);
        g.add_pair("mu", (1, 3), "mub", (3, 4));
        let u = sol(1, &["a", "b", "a b"]);
        g.verify_solution(&u).unwrap();
        let r = et5_introduce_boundary(&g, "mu", 2, Oracle::Solution(&u)).unwrap();
        assert_eq!(r.target.rho, 4);
        assert_eq!(r.morphism.item_map[2], vec![3, 4]);
        assert_eq!(r.target.tie(2, "mu"), Some(4));
        check(&r, &g, &u);

        let mut g = GenEq::new(1, 4);
        g.add_pair("mu", (1, 3), "mub", (3, 5));
        g.add_pair("nu", (1, 2), "nub", (3, 4));
        let sys = g.linear_system();
        let r = et5_introduce_boundary(&g, "mu", 2, Oracle::Symbolic(&sys)).unwrap();
        assert_eq!(r.target.tie(2, "mu"), Some(4));
        let mut g = GenEq::new(1, 4);
        g.add_pair("mu", (1, 3), "mub", (3, 5));
        let sys = g.linear_system();
        assert!(et5_introduce_boundary(&g, "mu", 2, Oracle::Symbolic(&sys)).is_err());
    }

    #[test]
    fn d1_cuts_straddling_base() {
        let mut g = GenEq::new(1, 6);
        g.add_pair("mu", (4, 6), "mub", (1, 3));
        let u = sol(1, &["a", "b", "c", "a", "b", "c"]);
        g.verify_solution(&u).unwrap();
        let r = d1_close_section(&g, 2, 5, Some(&u)).unwrap();
        check(&r, &g, &u);
        assert!(r.target.bases.iter().any(|b| b.right() == 5 || b.left() == 5));
        assert!(r.target.is_closed(5));
        assert!(r.target.sections.iter().any(|s| s.start == 2 && s.end == 5));
    }

    #[test]
    fn d3_moves_free_item() {
        let mut g = GenEq::new(1, 5);
        g.add_pair("mu", (1, 2), "mub", (2, 3));
        g.add_pair("nu", (3, 4), "nub", (5, 6));
        let u = sol(1, &["a", "a", "b", "c", "b"]);
        g.verify_solution(&u).unwrap();
        let r = d3_move_free(&g, 4, Some(&u)).unwrap();
        check(&r, &g, &u);
        let last = r.target.sections.last().unwrap();
        assert_eq!((last.start, last.end, last.active), (5, 6, false));
        assert_eq!(r.solution.as_ref().unwrap().items[4].to_string(), "c");
    }

    #[test]
    fn d4_deletes_complete_base() {
        let mut g = GenEq::new(1, 5);
        g.add_pair("mu", (1, 3), "mub", (3, 5));
        g.add_pair("nu", (1, 2), "nub", (5, 6));
        g.sections = vec![Section { start: 1, end: 3, active: true }, Section { start: 3, end: 6, active: true }];
        let u = sol(1, &["a", "b", "a", "b", "a"]);
        g.verify_solution(&u).unwrap();
        let r = d4_delete_complete(&g, "mu", Some(&u)).unwrap();
        check(&r, &g, &u);
        assert!(r.target.base("mu").is_none());
        assert_eq!(r.target.base("nu").map(|b| (b.alpha, b.beta)), Some((1, 2)));
        assert_eq!(r.target.rho, 3);
    }

    #[test]
    fn kernel_examples() {
        let mut g = GenEq::new(1, 4);
        g.add_pair("mu", (1, 3), "mub", (3, 5));
        let k = d5_kernel(&g).unwrap();
        assert!(k.kernel.bases.is_empty());
        assert_eq!(k.free_rank, 3);

        let mut g = GenEq::new(1, 2);
        g.add_pair("a", (1, 2), "ab", (2, 3));
        g.add_pair("b", (1, 2), "bb", (2, 3));
        let k = d5_kernel(&g).unwrap();
        assert_eq!(k.kernel.bases.len(), 4);
        assert_eq!(k.free_rank, 0);
    }

    #[test]
    fn carrier_choice() {
        let mut g = GenEq::new(1, 6);
        g.add_pair("a", (1, 4), "ab", (4, 7));
        g.add_pair("b", (1, 6), "bb", (2, 7));
        assert_eq!(carrier(&g).map(|b| b.id.as_str()), Some("b"));
        let mut g = GenEq::new(1, 2);
        g.add_pair("a", (2, 3), "ab", (2, 3));
        assert!(matches!(d8_entire_step(&g, Some(&sol(1, &["a", "b"]))), Err(Error::Precondition(_))));
    }

    #[test]
    fn d8_overlapping_pair() {
        let mut g = GenEq::new(1, 4);
        g.add_pair("mu", (1, 4), "mub", (2, 5));
        g.add_pair("nu", (1, 2), "nub", (4, 5));
        let u = sol(1, &["a", "a", "a", "a"]);
        g.verify_solution(&u).unwrap();
        let r = d8_entire_step(&g, Some(&u)).unwrap();
        check(&r, &g, &u);
        assert_eq!(r.target.rho, 3);
        assert_eq!(r.target.base("nu").map(|b| (b.alpha, b.beta)), Some((1, 2)));
    }
}
