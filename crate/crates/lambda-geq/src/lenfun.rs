//! Lyndon length-function axioms checked on finite samples of `CDR(Λ, X)`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ordered::{LambdaRational, LambdaScalar};
use crate::words::{cyclic_decomposition, mult, LambdaWord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Axiom {
    L1,
    L2,
    L3,
    L4,
    L5,
    L6,
}

impl Axiom {
    pub const ALL: [Axiom; 6] = [Axiom::L1, Axiom::L2, Axiom::L3, Axiom::L4, Axiom::L5, Axiom::L6];

    pub fn parse(s: &str) -> Result<Axiom> {
        match s.trim().to_ascii_uppercase().as_str() {
            "L1" => Ok(Axiom::L1),
            "L2" => Ok(Axiom::L2),
            "L3" => Ok(Axiom::L3),
            "L4" => Ok(Axiom::L4),
            "L5" => Ok(Axiom::L5),
            "L6" => Ok(Axiom::L6),
            other => Err(Error::Parse(format!("unknown axiom `{other}`"))),
        }
    }

    /// Parse `L1..L6`, `L1,L3` or a mixture.
    pub fn parse_set(s: &str) -> Result<Vec<Axiom>> {
        let mut out = BTreeSet::new();
        for part in s.split(',') {
            if let Some((a, b)) = part.split_once("..") {
                let (a, b) = (Axiom::parse(a)? as usize, Axiom::parse(b)? as usize);
                for ax in &Axiom::ALL[a.min(b)..=a.max(b)] {
                    out.insert(*ax);
                }
            } else {
                out.insert(Axiom::parse(part)?);
            }
        }
        Ok(out.into_iter().collect())
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A finite, inverse-closed set of elements of `CDR(Λ, X)`.
#[derive(Debug, Clone)]
pub struct GroupSample {
    rank: usize,
    elements: Vec<LambdaWord>,
    closure_depth: usize,
}

impl GroupSample {
    /// Close `generators` under inverses, then adjoin all pairwise products
    /// `closure_depth` times.
    pub fn new(rank: usize, generators: Vec<LambdaWord>, closure_depth: usize) -> Result<Self> {
        let mut set = BTreeSet::new();
        for g in generators {
            if g.rank() != rank {
                return Err(Error::RankMismatch { left: rank, right: g.rank() });
            }
            if !g.is_reduced() {
                return Err(Error::Precondition(format!("sample element {g} is not reduced")));
            }
            cyclic_decomposition(&g)?;
            set.insert(g.inverse());
            set.insert(g);
        }
        for _ in 0..closure_depth {
            let current: Vec<LambdaWord> = set.iter().cloned().collect();
            for a in &current {
                for b in &current {
                    let p = mult(a, b)?;
                    set.insert(p);
                }
            }
        }
        Ok(GroupSample { rank, elements: set.into_iter().collect(), closure_depth })
    }

    /// All reduced words of length at most `radius` over the given generators.
    pub fn free_ball(rank: usize, generators: &[&str], radius: usize) -> Self {
        let mut letters = Vec::new();
        for g in generators {
            letters.push(LambdaWord::letter(rank, g));
            letters.push(LambdaWord::letter(rank, g).inverse());
        }
        let mut all = vec![LambdaWord::empty(rank)];
        let mut frontier = vec![LambdaWord::empty(rank)];
        for _ in 0..radius {
            let mut next = Vec::new();
            for w in &frontier {
                for l in &letters {
                    if w.last_letter().is_some_and(|t| t.is_inverse_of(l.first_letter().unwrap())) {
                        continue;
                    }
                    next.push(w.concat(l));
                }
            }
            all.extend(next.iter().cloned());
            frontier = next;
        }
        all.sort();
        GroupSample { rank, elements: all, closure_depth: 0 }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn elements(&self) -> &[LambdaWord] {
        &self.elements
    }

    pub fn closure_depth(&self) -> usize {
        self.closure_depth
    }

    pub fn contains(&self, w: &LambdaWord) -> bool {
        self.elements.binary_search(w).is_ok()
    }
}

/// The length function `l`: word length, optionally overridden per element.
#[derive(Debug, Clone, Default)]
pub struct LengthTable {
    overrides: HashMap<LambdaWord, LambdaScalar>,
}

impl LengthTable {
    pub fn word_length() -> Self {
        Self::default()
    }

    pub fn set(&mut self, w: LambdaWord, l: LambdaScalar) {
        self.overrides.insert(w, l);
    }

    pub fn length(&self, w: &LambdaWord) -> LambdaScalar {
        self.overrides.get(w).cloned().unwrap_or_else(|| w.len().clone())
    }

    /// `2·c(g, f) = l(g) + l(f) − l(g⁻¹ f)`.
    pub fn twice_gromov(&self, g: &LambdaWord, f: &LambdaWord) -> Result<LambdaScalar> {
        let p = mult(&g.inverse(), f)?;
        Ok(self.length(g) + self.length(f) - self.length(&p))
    }

    pub fn gromov(&self, g: &LambdaWord, f: &LambdaWord) -> Result<LambdaRational> {
        Ok(self.twice_gromov(g, f)?.halve())
    }
}

/// `c(g, f) = ½(|g| + |f| − |g⁻¹ ∗ f|)`.
pub fn gromov(g: &LambdaWord, f: &LambdaWord) -> Result<LambdaRational> {
    LengthTable::word_length().gromov(g, f)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AxiomStatus {
    Pass,
    Fail { witness: Vec<String>, detail: String },
    /// L6 only: no witness inside the sample at this closure depth.
    NotWitnessed { pair: Vec<String> },
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomResult {
    pub axiom: Axiom,
    pub status: AxiomStatus,
    pub checked: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub results: Vec<AxiomResult>,
    pub undefined_products: Vec<String>,
}

impl AxiomReport {
    pub fn status(&self, axiom: Axiom) -> Option<&AxiomStatus> {
        self.results.iter().find(|r| r.axiom == axiom).map(|r| &r.status)
    }

    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.status == AxiomStatus::Pass) && self.undefined_products.is_empty()
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            match &r.status {
                AxiomStatus::Pass => writeln!(f, "{}: pass ({} checks)", r.axiom, r.checked)?,
                AxiomStatus::Fail { witness, detail } => {
                    writeln!(f, "{}: FAIL {detail} witness=({})", r.axiom, witness.join(", "))?
                }
                AxiomStatus::NotWitnessed { pair } => {
                    writeln!(f, "{}: not witnessed at this depth for ({})", r.axiom, pair.join(", "))?
                }
            }
        }
        for u in &self.undefined_products {
            writeln!(f, "undefined product: {u}")?;
        }
        Ok(())
    }
}

/// Pairwise `2c` values interned to order-preserving small integers.
struct GromovTable {
    n: usize,
    ranks: Vec<u32>,
    values: Vec<LambdaScalar>,
}

impl GromovTable {
    fn build(sample: &GroupSample, l: &LengthTable) -> Result<Self> {
        let els = sample.elements();
        let n = els.len();
        let inverses: Vec<LambdaWord> = els.iter().map(LambdaWord::inverse).collect();
        let lens: Vec<LambdaScalar> = els.iter().map(|g| l.length(g)).collect();
        let mut intern: HashMap<LambdaScalar, u32> = HashMap::new();
        let mut values = Vec::new();
        let mut ids = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let p = mult(&inverses[i], &els[j])?;
                let v = &lens[i] + &lens[j] - l.length(&p);
                let next = intern.len() as u32;
                let id = *intern.entry(v.clone()).or_insert_with(|| {
                    values.push(v);
                    next
                });
                ids.push(id);
            }
        }
        let mut order: Vec<u32> = (0..values.len() as u32).collect();
        order.sort_by(|&a, &b| values[a as usize].cmp(&values[b as usize]));
        let mut remap = vec![0u32; values.len()];
        for (rank, &id) in order.iter().enumerate() {
            remap[id as usize] = rank as u32;
        }
        let ranks = ids.into_iter().map(|id| remap[id as usize]).collect();
        let values = order.into_iter().map(|id| values[id as usize].clone()).collect();
        Ok(GromovTable { n, ranks, values })
    }

    fn at(&self, i: usize, j: usize) -> u32 {
        self.ranks[i * self.n + j]
    }

    fn value(&self, i: usize, j: usize) -> &LambdaScalar {
        &self.values[self.at(i, j) as usize]
    }

    fn symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.at(i, j) == self.at(j, i)))
    }
}

fn names(ws: &[&LambdaWord]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

/// Check the requested axioms exhaustively over the sample.
pub fn check_axioms(sample: &GroupSample, axioms: &[Axiom], l: &LengthTable) -> Result<AxiomReport> {
    let els = sample.elements();
    let rank = sample.rank();
    let zero = LambdaScalar::zero(rank);
    let need_table = axioms.iter().any(|a| matches!(a, Axiom::L3 | Axiom::L4 | Axiom::L6));
    let table = if need_table { Some(GromovTable::build(sample, l)?) } else { None };
    let mut results = Vec::new();
    for &ax in axioms {
        let (status, checked) = match ax {
            Axiom::L1 => check_l1(els, l, &zero),
            Axiom::L2 => check_l2(els, l),
            Axiom::L3 => check_l3(els, table.as_ref().unwrap()),
            Axiom::L4 => check_l4(els, table.as_ref().unwrap()),
            Axiom::L5 => check_l5(els, l)?,
            Axiom::L6 => check_l6(sample, l, table.as_ref().unwrap())?,
        };
        results.push(AxiomResult { axiom: ax, status, checked });
    }
    Ok(AxiomReport { results, undefined_products: Vec::new() })
}

fn check_l1(els: &[LambdaWord], l: &LengthTable, zero: &LambdaScalar) -> (AxiomStatus, u64) {
    let rank = zero.rank();
    let identity = LambdaWord::empty(rank);
    if l.length(&identity) != *zero {
        return (
            AxiomStatus::Fail { witness: vec!["1".into()], detail: "l(1) ≠ 0".into() },
            1,
        );
    }
    for g in els {
        if l.length(g) < *zero {
            return (AxiomStatus::Fail { witness: names(&[g]), detail: "l(g) < 0".into() }, 0);
        }
    }
    (AxiomStatus::Pass, els.len() as u64 + 1)
}

fn check_l2(els: &[LambdaWord], l: &LengthTable) -> (AxiomStatus, u64) {
    for g in els {
        if l.length(g) != l.length(&g.inverse()) {
            return (AxiomStatus::Fail { witness: names(&[g]), detail: "l(g) ≠ l(g⁻¹)".into() }, 0);
        }
    }
    (AxiomStatus::Pass, els.len() as u64)
}

fn check_l3(els: &[LambdaWord], t: &GromovTable) -> (AxiomStatus, u64) {
    let n = t.n;
    let fail = |g: usize, f: usize, h: usize| AxiomStatus::Fail {
        witness: names(&[&els[g], &els[f], &els[h]]),
        detail: "c(g,f) > c(g,h) but c(g,h) ≠ c(f,h)".into(),
    };
    if t.symmetric() {
        // For a symmetric table the axiom says that the two smallest of
        // c(g,f), c(g,h), c(f,h) agree for every unordered triple.
        let mut checked = 0u64;
        for g in 0..n {
            for f in g + 1..n {
                let gf = t.at(g, f);
                for h in f + 1..n {
                    let (gh, fh) = (t.at(g, h), t.at(f, h));
                    checked += 1;
                    let lo = gf.min(gh).min(fh);
                    let ties = (gf == lo) as u8 + (gh == lo) as u8 + (fh == lo) as u8;
                    if ties < 2 {
                        let (a, b, c) = fail_ordered(t, g, f, h).expect("an ordering violates the implication");
                        return (fail(a, b, c), checked);
                    }
                }
            }
        }
        return (AxiomStatus::Pass, checked);
    }
    let mut checked = 0u64;
    for g in 0..n {
        for f in 0..n {
            for h in 0..n {
                checked += 1;
                if t.at(g, f) > t.at(g, h) && t.at(g, h) != t.at(f, h) {
                    return (fail(g, f, h), checked);
                }
            }
        }
    }
    (AxiomStatus::Pass, checked)
}

/// An ordering `(g, f, h)` of a bad triple that violates the implication.
fn fail_ordered(t: &GromovTable, a: usize, b: usize, c: usize) -> Option<(usize, usize, usize)> {
    let perms = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)];
    perms.into_iter().find(|&(g, f, h)| t.at(g, f) > t.at(g, h) && t.at(g, h) != t.at(f, h))
}

fn check_l4(els: &[LambdaWord], t: &GromovTable) -> (AxiomStatus, u64) {
    let n = t.n;
    for i in 0..n {
        for j in 0..n {
            if t.value(i, j).halve().to_integral().is_none() {
                return (
                    AxiomStatus::Fail { witness: names(&[&els[i], &els[j]]), detail: "c(g,f) ∉ Λ".into() },
                    (i * n + j) as u64,
                );
            }
        }
    }
    (AxiomStatus::Pass, (n * n) as u64)
}

fn check_l5(els: &[LambdaWord], l: &LengthTable) -> Result<(AxiomStatus, u64)> {
    let mut checked = 0;
    for g in els.iter().filter(|g| !g.is_empty()) {
        checked += 1;
        let sq = mult(g, g)?;
        if l.length(&sq) <= l.length(g) {
            return Ok((AxiomStatus::Fail { witness: names(&[g]), detail: "l(g²) ≤ l(g)".into() }, checked));
        }
    }
    Ok((AxiomStatus::Pass, checked))
}

fn check_l6(sample: &GroupSample, l: &LengthTable, t: &GromovTable) -> Result<(AxiomStatus, u64)> {
    let els = sample.elements();
    let n = t.n;
    let mut checked = 0;
    for i in 0..n {
        for j in 0..n {
            checked += 1;
            let (g, f) = (&els[i], &els[j]);
            let c = t.value(i, j).halve();
            if l6_witness(sample, l, g, f, &c)?.is_none() {
                return Ok((AxiomStatus::NotWitnessed { pair: names(&[g, f]) }, checked));
            }
        }
    }
    Ok((AxiomStatus::Pass, checked))
}

/// A witness `u` in the sample with `g = u ∘ g₁`, `f = u ∘ f₁`, `l(u) = c(g,f)`.
pub fn l6_witness(
    sample: &GroupSample,
    l: &LengthTable,
    g: &LambdaWord,
    f: &LambdaWord,
    c: &LambdaRational,
) -> Result<Option<LambdaWord>> {
    let Some(c) = c.to_integral() else { return Ok(None) };
    if c.is_negative() || c > *g.len() {
        return Ok(None);
    }
    // In CDR(Λ, X), g = u ∘ g₁ forces u to be the initial segment of g of length l(u).
    let u = g.prefix(&c)?;
    if !sample.contains(&u) || l.length(&u) != c {
        return Ok(None);
    }
    let g1 = mult(&u.inverse(), g)?;
    let f1 = mult(&u.inverse(), f)?;
    let ok = l.length(g) == &c + &l.length(&g1) && l.length(f) == &c + &l.length(&f1);
    Ok(if ok { Some(u) } else { None })
}

/// `l(g f) ≤ l(g) + l(f)` over all pairs of the sample.
pub fn subadditivity_check(sample: &GroupSample, l: &LengthTable) -> Result<AxiomReport> {
    let els = sample.elements();
    let mut checked = 0;
    let mut status = AxiomStatus::Pass;
    'outer: for g in els {
        for f in els {
            checked += 1;
            let p = mult(g, f)?;
            if l.length(&p) > l.length(g) + l.length(f) {
                status = AxiomStatus::Fail { witness: names(&[g, f]), detail: "l(gf) > l(g) + l(f)".into() };
                break 'outer;
            }
        }
    }
    Ok(AxiomReport { results: vec![AxiomResult { axiom: Axiom::L3, status, checked }], undefined_products: Vec::new() })
}

/// Parse a words file: one word per line, `#` starts a comment.
pub fn parse_words_file(text: &str, rank: usize) -> Result<Vec<LambdaWord>> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
        .map(|line| LambdaWord::parse(line, rank))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::com;
    use proptest::prelude::*;

    fn w(s: &str) -> LambdaWord {
        LambdaWord::parse(s, 2).unwrap()
    }

    #[test]
    fn gromov_examples() {
        assert_eq!(gromov(&w("x y z"), &w("x y w")).unwrap().to_string(), "[2,0]");
        let g = w("x y^-1 z^[0,1]");
        assert_eq!(gromov(&g, &g).unwrap(), LambdaRational::from(g.len()));
        assert_eq!(gromov(&w("x"), &w("x^-1")).unwrap().to_string(), "[0,0]");
    }

    #[test]
    fn free_sample_passes_l1_to_l5() {
        let gens = ["x", "y", "x y", "x^-1", "y^-1", "y^-1 x^-1"].iter().map(|s| w(s)).collect();
        let s = GroupSample::new(2, gens, 0).unwrap();
        let r = check_axioms(&s, &Axiom::ALL[..5], &LengthTable::word_length()).unwrap();
        assert!(r.all_pass(), "{r}");
    }

    #[test]
    fn z2_sample_passes_all() {
        let s = GroupSample::new(2, vec![w("z^[1,0]"), w("z^[0,1]")], 2).unwrap();
        let r = check_axioms(&s, &Axiom::ALL, &LengthTable::word_length()).unwrap();
        assert!(r.all_pass(), "{r}");
    }

    #[test]
    fn edited_table_fails_l2() {
        let s = GroupSample::new(2, vec![w("x"), w("y")], 0).unwrap();
        let mut l = LengthTable::word_length();
        l.set(w("x"), LambdaScalar::from_i64s(&[2, 0]));
        let r = check_axioms(&s, &[Axiom::L2], &l).unwrap();
        match r.status(Axiom::L2).unwrap() {
            AxiomStatus::Fail { witness, .. } => assert_eq!(witness, &vec!["x".to_string()]),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn subadditivity_examples() {
        let s = GroupSample::new(2, vec![w("x"), w("y")], 1).unwrap();
        assert!(subadditivity_check(&s, &LengthTable::word_length()).unwrap().all_pass());
        let s = GroupSample::new(2, vec![w("x"), w("y"), w("x y")], 0).unwrap();
        let mut l = LengthTable::word_length();
        l.set(w("x y"), LambdaScalar::from_i64s(&[5, 0]));
        let r = subadditivity_check(&s, &l).unwrap();
        assert!(matches!(r.results[0].status, AxiomStatus::Fail { .. }));
    }

    #[test]
    fn axiom_set_parsing() {
        assert_eq!(Axiom::parse_set("L1..L6").unwrap(), Axiom::ALL.to_vec());
        assert_eq!(Axiom::parse_set("L2,L5").unwrap(), vec![Axiom::L2, Axiom::L5]);
        assert!(Axiom::parse_set("L7").is_err());
    }

    proptest! {
        #[test]
        fn gromov_is_common_prefix_length(a in "[xy]{0,6}", b in "[xy]{0,6}", c in "[xy]{0,6}", k in 0i64..2) {
            let spaced = |s: &str| s.chars().map(|ch| ch.to_string()).collect::<Vec<_>>().join(" ");
            let g = w(&format!("{} z^[0,{k}] {}", spaced(&a), spaced(&b)));
            let f = w(&format!("{} {}", spaced(&a), spaced(&c)));
            let cg = gromov(&g, &f).unwrap();
            prop_assert_eq!(cg.to_integral().unwrap(), com(&g, &f).unwrap().common.len().clone());
            prop_assert!(!cg.is_negative());
            prop_assert!(cg <= LambdaRational::from(g.len().min(f.len())));
        }
    }
}
