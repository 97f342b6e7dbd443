//! From a finite presentation with an embedding into Λ-words to a
//! generalized equation, via cancellation trees.

use std::collections::{BTreeMap, BTreeSet};

use crate::abelian;
use crate::error::{Error, Result};
use crate::geq::{item_range, Base, GenEq, ItemWord, Section, Solution};
use crate::ordered::LambdaScalar;
use crate::words::{cyclic_decomposition, mult, LambdaWord};

/// `x_gen^sign`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GenLetter {
    pub gen: usize,
    pub sign: i8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PresentationInput {
    pub rank: usize,
    pub generators: Vec<String>,
    pub relators: Vec<Vec<GenLetter>>,
    pub embedding: Vec<LambdaWord>,
}

impl PresentationInput {
    /// Line format:
    ///
    /// ```text
    /// rank 2
    /// generators x y
    /// relator x y x^-1 y^-1
    /// x = z
    /// y = z^[0,1]
    /// ```
    ///
    /// `rank` may be omitted when `default_rank` is given.
    pub fn parse(text: &str, default_rank: Option<usize>) -> Result<Self> {
        let mut rank = default_rank;
        let mut generators: Vec<String> = Vec::new();
        let mut relator_lines = Vec::new();
        let mut embed_lines = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(r) = line.strip_prefix("rank") {
                rank = Some(
                    r.trim()
                        .trim_start_matches('=')
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {}: bad rank", n + 1)))?,
                );
            } else if let Some(g) = line.strip_prefix("generators") {
                generators = g.split_whitespace().map(str::to_string).collect();
            } else if let Some(r) = line.strip_prefix("relator") {
                relator_lines.push(r.trim().to_string());
            } else if let Some((lhs, rhs)) = line.split_once('=') {
                embed_lines.push((lhs.trim().trim_start_matches("embed").trim().to_string(), rhs.trim().to_string()));
            } else {
                return Err(Error::Parse(format!("line {}: unrecognized `{line}`", n + 1)));
            }
        }
        let rank = rank.ok_or_else(|| Error::Parse("rank not given".into()))?;
        let index: BTreeMap<&str, usize> = generators.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
        let mut relators = Vec::new();
        for r in &relator_lines {
            let mut rel = Vec::new();
            for tok in r.split_whitespace() {
                let (name, exp) = match tok.split_once('^') {
                    Some((n, e)) => (n, e.parse::<i64>().map_err(|_| Error::Parse(format!("bad exponent in `{tok}`")))?),
                    None => (tok, 1),
                };
                let gen = *index.get(name).ok_or_else(|| Error::Parse(format!("unknown generator `{name}`")))?;
                let sign = if exp < 0 { -1 } else { 1 };
                for _ in 0..exp.unsigned_abs() {
                    rel.push(GenLetter { gen, sign });
                }
            }
            relators.push(rel);
        }
        let mut embedding = vec![None; generators.len()];
        for (g, w) in &embed_lines {
            let i = *index.get(g.as_str()).ok_or_else(|| Error::Parse(format!("embedding for unknown generator `{g}`")))?;
            embedding[i] = Some(LambdaWord::parse(w, rank)?);
        }
        let embedding = embedding
            .into_iter()
            .enumerate()
            .map(|(i, w)| w.ok_or_else(|| Error::Parse(format!("no embedding for `{}`", generators[i]))))
            .collect::<Result<Vec<_>>>()?;
        Ok(PresentationInput { rank, generators, relators, embedding })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("rank {}\ngenerators {}\n", self.rank, self.generators.join(" "));
        for r in &self.relators {
            let toks: Vec<String> = r
                .iter()
                .map(|l| if l.sign > 0 { self.generators[l.gen].clone() } else { format!("{}^-1", self.generators[l.gen]) })
                .collect();
            s += &format!("relator {}\n", toks.join(" "));
        }
        for (g, w) in self.generators.iter().zip(&self.embedding) {
            s += &format!("{g} = {w}\n");
        }
        s
    }

    pub fn letter_value(&self, l: GenLetter) -> LambdaWord {
        let w = &self.embedding[l.gen];
        if l.sign > 0 {
            w.clone()
        } else {
            w.inverse()
        }
    }

    /// `r(ξ(X))` evaluated with `∗`.
    pub fn evaluate(&self, relator: &[GenLetter]) -> Result<LambdaWord> {
        let mut acc = LambdaWord::empty(self.rank);
        for &l in relator {
            acc = mult(&acc, &self.letter_value(l))?;
        }
        Ok(acc)
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        for (g, w) in self.generators.iter().zip(&self.embedding) {
            if w.is_empty() {
                v.push(format!("ξ({g}) is empty"));
            } else if !w.is_reduced() {
                v.push(format!("ξ({g}) = {w} is not reduced"));
            } else if cyclic_decomposition(w).is_err() {
                v.push(format!("ξ({g}) = {w} has no cyclic decomposition"));
            }
        }
        for (k, r) in self.relators.iter().enumerate() {
            match self.evaluate(r) {
                Ok(res) if !res.is_empty() => v.push(format!("relator {} evaluates to {res}, not 1", k + 1)),
                Err(e) => v.push(format!("relator {}: {e}", k + 1)),
                _ => {}
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }

    pub fn abelian_rank(&self) -> usize {
        let rels: Vec<Vec<i32>> = self
            .relators
            .iter()
            .map(|r| r.iter().map(|l| (l.gen as i32 + 1) * l.sign as i32).collect())
            .collect();
        abelian::abelian_rank(self.generators.len(), &rels)
    }
}

fn distinct_generators(r: &[GenLetter]) -> usize {
    r.iter().map(|l| l.gen).collect::<BTreeSet<_>>().len()
}

/// Rewrites relators so that each involves at most three generators, adding
/// auxiliary generators `a = w x` with `ξ(a) = ξ(w) ∗ ξ(x)`.
pub fn triangulate(p: &PresentationInput) -> Result<PresentationInput> {
    let mut out = p.clone();
    out.relators.clear();
    let mut queue: Vec<Vec<GenLetter>> = p.relators.clone();
    queue.reverse();
    let mut aux = 0;
    while let Some(mut r) = queue.pop() {
        if distinct_generators(&r) <= 3 {
            out.relators.push(r);
            continue;
        }
        // rotate so that the first two letters have a nontrivial product
        let n = r.len();
        let mut found = None;
        for s in 0..n {
            let (a, b) = (r[s], r[(s + 1) % n]);
            if a.gen != b.gen {
                let w = mult(&out.letter_value(a), &out.letter_value(b))?;
                if !w.is_empty() {
                    found = Some((s, w));
                    break;
                }
            }
        }
        let (s, w) = found.ok_or_else(|| Error::Undefined("no nontrivial adjacent pair to split".into()))?;
        r.rotate_left(s);
        let name = loop {
            aux += 1;
            let cand = format!("t{aux}");
            if !out.generators.contains(&cand) {
                break cand;
            }
        };
        let g = out.generators.len();
        out.generators.push(name);
        out.embedding.push(w);
        let new = GenLetter { gen: g, sign: 1 };
        out.relators.push(vec![r[0], r[1], GenLetter { gen: g, sign: -1 }]);
        let mut rest = vec![new];
        rest.extend_from_slice(&r[2..]);
        queue.push(rest);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeEdge {
    pub parent: usize,
    pub child: usize,
    pub label: LambdaWord,
}

/// Edges are indexed by their child vertex; vertex `0` is the root `ε`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CancellationTree {
    pub vertices: Vec<LambdaWord>,
    pub parent: Vec<Option<usize>>,
    pub labels: Vec<LambdaWord>,
    /// For each relator letter, the edge path `(edge, ±1)` it spells.
    pub paths: Vec<Vec<(usize, i8)>>,
    pub relator: Vec<GenLetter>,
}

impl CancellationTree {
    pub fn edges(&self) -> Vec<TreeEdge> {
        (1..self.vertices.len())
            .map(|c| TreeEdge { parent: self.parent[c].unwrap_or(0), child: c, label: self.labels[c].clone() })
            .collect()
    }

    /// Number of times each edge is traversed.
    pub fn usage(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for p in &self.paths {
            for &(e, _) in p {
                *m.entry(e).or_insert(0) += 1;
            }
        }
        m
    }
}

/// The cancellation tree of `r(ξ(X))`, spanned by the prefix products of
/// the relator and their pairwise common initial segments.
pub fn build_tree(r: &[GenLetter], p: &PresentationInput) -> Result<CancellationTree> {
    if distinct_generators(r) > 3 {
        return Err(Error::Precondition("relator involves more than three generators".into()));
    }
    let mut points = vec![LambdaWord::empty(p.rank)];
    for &l in r {
        let next = mult(points.last().unwrap(), &p.letter_value(l))?;
        points.push(next);
    }
    let residual = points.pop().unwrap();
    if !residual.is_empty() {
        return Err(Error::Precondition(format!("relator does not cancel: residual word {residual}")));
    }
    let mut set: BTreeSet<LambdaWord> = points.iter().cloned().collect();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            set.insert(crate::words::com(&points[i], &points[j])?.common);
        }
    }
    let mut vertices: Vec<LambdaWord> = set.into_iter().collect();
    vertices.sort_by(|a, b| a.len().cmp(b.len()).then_with(|| a.cmp(b)));
    let index: BTreeMap<&LambdaWord, usize> = vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut parent = vec![None; vertices.len()];
    let mut labels = vec![LambdaWord::empty(p.rank); vertices.len()];
    for v in 1..vertices.len() {
        let par = (0..v)
            .rev()
            .find(|&u| vertices[u].len() < vertices[v].len() && vertices[u].is_prefix_of(&vertices[v]))
            .ok_or_else(|| Error::Structure("vertex without parent".into()))?;
        parent[v] = Some(par);
        labels[v] = vertices[v].suffix_from(vertices[par].len())?;
    }
    let climb = |from: usize, to: usize| -> Result<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = from;
        while cur != to {
            out.push(cur);
            cur = parent[cur].ok_or_else(|| Error::Structure("path leaves the tree".into()))?;
        }
        Ok(out)
    };
    let n = r.len();
    let mut paths = Vec::with_capacity(n);
    for k in 0..n {
        let a = &points[k];
        let b = &points[(k + 1) % n];
        let c = crate::words::com(a, b)?.common;
        let (ia, ib, ic) = (index[a], index[b], index[&c]);
        let mut path: Vec<(usize, i8)> = climb(ia, ic)?.into_iter().map(|e| (e, -1)).collect();
        path.extend(climb(ib, ic)?.into_iter().rev().map(|e| (e, 1)));
        let mut spelled = LambdaWord::empty(p.rank);
        for &(e, d) in &path {
            let piece = if d > 0 { labels[e].clone() } else { labels[e].inverse() };
            spelled = spelled.concat(&piece);
        }
        if spelled != p.letter_value(r[k]) {
            return Err(Error::Structure(format!("occurrence {} spells {spelled} along its path", k + 1)));
        }
        paths.push(path);
    }
    Ok(CancellationTree { vertices, parent, labels, paths, relator: r.to_vec() })
}

/// Output of [`assemble`].
#[derive(Clone, Debug)]
pub struct Assembly {
    pub omega: GenEq,
    /// `x ↦ w_x(h)` with `ξ(x) = w_x(U)`.
    pub generator_words: Vec<ItemWord>,
    /// The planted piece solution.
    pub solution: Solution,
    /// Segment `[start, end]` of each generator.
    pub segments: Vec<(usize, usize)>,
}

/// Lays the generators out on one interval in input order, subdivides it by
/// every occurrence factorization and turns each pair of traversals of a tree
/// edge into a pair of dual bases.
pub fn assemble(p: &PresentationInput, trees: &[CancellationTree]) -> Result<Assembly> {
    let rank = p.rank;
    let ng = p.generators.len();
    let mut cuts: Vec<BTreeSet<LambdaScalar>> = p
        .embedding
        .iter()
        .map(|w| [LambdaScalar::zero(rank), w.len().clone()].into_iter().collect())
        .collect();
    // (tree, edge) -> list of (generator, from offset, to offset, ε)
    type Traversal = (usize, LambdaScalar, LambdaScalar, i8);
    let mut traversals: BTreeMap<(usize, usize), Vec<Traversal>> = BTreeMap::new();
    for (ti, t) in trees.iter().enumerate() {
        for (k, path) in t.paths.iter().enumerate() {
            let l = t.relator[k];
            let total = p.embedding[l.gen].len().clone();
            let mut at = LambdaScalar::zero(rank);
            for &(e, d) in path {
                let next = &at + t.labels[e].len();
                let (from, to, eps) = if l.sign > 0 {
                    (at.clone(), next.clone(), d)
                } else {
                    (&total - &next, &total - &at, -d)
                };
                cuts[l.gen].insert(from.clone());
                cuts[l.gen].insert(to.clone());
                traversals.entry((ti, e)).or_default().push((l.gen, from, to, eps));
                at = next;
            }
        }
    }
    let mut boundary: Vec<BTreeMap<LambdaScalar, usize>> = Vec::with_capacity(ng);
    let mut items = Vec::new();
    let mut segments = Vec::with_capacity(ng);
    let mut generator_words = Vec::with_capacity(ng);
    let mut next = 1usize;
    for g in 0..ng {
        let offs: Vec<&LambdaScalar> = cuts[g].iter().collect();
        let start = next;
        let mut map = BTreeMap::new();
        for (k, o) in offs.iter().enumerate() {
            map.insert((*o).clone(), start + k);
        }
        for w in offs.windows(2) {
            let piece = p.embedding[g].suffix_from(w[0])?.prefix(&(w[1] - w[0]))?;
            items.push(piece);
        }
        next = start + offs.len() - 1;
        segments.push((start, next));
        generator_words.push(item_range(start, next));
        boundary.push(map);
    }
    let rho = items.len();
    let mut omega = GenEq::new(rank, rho);
    omega.sections = segments.iter().map(|&(s, e)| Section { start: s, end: e, active: true }).collect();
    let mut pair = 0usize;
    for ((ti, e), occ) in &traversals {
        if occ.len() < 2 || occ.len() % 2 != 0 {
            return Err(Error::Structure(format!("edge {e} of tree {} traversed {} times", ti + 1, occ.len())));
        }
        let mk = |o: &Traversal| -> (usize, usize) {
            let (g, from, to, eps) = o;
            let (a, b) = (boundary[*g][from], boundary[*g][to]);
            if *eps > 0 {
                (a, b)
            } else {
                (b, a)
            }
        };
        let first = mk(&occ[0]);
        for o in occ.iter().skip(1) {
            pair += 1;
            let id = format!("l{pair}");
            omega.bases.push(Base::new(&id, first.0, first.1, &format!("{id}b")));
            let other = mk(o);
            omega.bases.push(Base::new(&format!("{id}b"), other.0, other.1, &id));
        }
    }
    let solution = Solution::new(rank, items);
    omega.validate()?;
    omega
        .verify_solution(&solution)
        .map_err(|e| Error::Structure(format!("planted piece solution fails: {e}")))?;
    Ok(Assembly { omega, generator_words, solution, segments })
}

/// Triangulate, build one tree per relator and assemble.
pub fn build(p: &PresentationInput) -> Result<(PresentationInput, Vec<CancellationTree>, Assembly)> {
    p.validate()?;
    let t = triangulate(p)?;
    let trees = t.relators.iter().map(|r| build_tree(r, &t)).collect::<Result<Vec<_>>>()?;
    let asm = assemble(&t, &trees)?;
    Ok((t, trees, asm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(text: &str) -> PresentationInput {
        PresentationInput::parse(text, None).unwrap()
    }

    const COMM: &str = "rank 2\ngenerators x y\nrelator x y x^-1 y^-1\nx = z\ny = z^[0,1]\n";

    #[test]
    fn triangulation() {
        let p = input("rank 1\ngenerators w x y z\nrelator w x y z\nw = a\nx = b\ny = b^-1 a^-1 c\nz = c^-1\n");
        p.validate().unwrap();
        let t = triangulate(&p).unwrap();
        assert_eq!(t.generators.len(), 5);
        assert_eq!(t.relators.len(), 2);
        assert!(t.relators.iter().all(|r| distinct_generators(r) <= 3));
        assert_eq!(t.embedding[4].to_string(), "a b");
        t.validate().unwrap();
        let c = input(COMM);
        assert_eq!(triangulate(&c).unwrap(), c);
        let cube = input("rank 1\ngenerators x\nrelator x^3\nx = a\n");
        assert_eq!(triangulate(&cube).unwrap().relators, cube.relators);
    }

    #[test]
    fn trivial_relator_tree() {
        let p = input("rank 1\ngenerators x\nrelator x x^-1\nx = a b\n");
        let t = build_tree(&p.relators[0], &p).unwrap();
        assert_eq!(t.edges().len(), 1);
        assert_eq!(t.labels[1].to_string(), "a b");
        let (_, _, asm) = build(&p).unwrap();
        assert_eq!(asm.omega.bases.len(), 2);
        assert!(asm.omega.is_matched(&asm.omega.bases[0]));
        assert_eq!(asm.omega.sections.len(), 1);
    }

    #[test]
    fn commutation_tree_and_equation() {
        let p = input(COMM);
        let t = build_tree(&p.relators[0], &p).unwrap();
        assert!(t.labels.iter().skip(1).all(|l| l.blocks().iter().all(|b| match b {
            crate::words::Block::Finite(ls) => ls.iter().all(|x| x.symbol() == "z"),
            crate::words::Block::Power { base, .. } => base.iter().all(|x| x.symbol() == "z"),
        })));
        assert!(t.usage().values().all(|&n| n == 2));
        let (_, _, asm) = build(&p).unwrap();
        let g = &asm.omega;
        assert_eq!(g.rho, 4);
        let lens: Vec<String> = asm.solution.lengths().iter().map(|l| l.to_string()).collect();
        assert_eq!(lens, ["[1,0]", "[1,0]", "[-2,1]", "[1,0]"]);
        let mut spans: Vec<(usize, usize, usize, usize)> = g
            .bases
            .chunks(2)
            .map(|c| (c[0].alpha, c[0].beta, c[1].alpha, c[1].beta))
            .collect();
        spans.sort();
        assert_eq!(spans, vec![(1, 2, 2, 3), (2, 4, 3, 5), (4, 5, 1, 2)]);
        let pres = g.presentation();
        assert_eq!(pres.abelianization(), (2, vec![]));
        assert_eq!(p.abelian_rank(), pres.abelian_rank());
        assert_eq!(asm.generator_words, vec![vec![1], vec![2, 3, 4]]);
    }

    #[test]
    fn tripod() {
        let p = input("rank 1\ngenerators x y z\nrelator x y z\nx = a b\ny = b^-1 c\nz = c^-1 a^-1\n");
        let t = build_tree(&p.relators[0], &p).unwrap();
        let mut labels: Vec<String> = t.labels.iter().skip(1).map(|l| l.to_string()).collect();
        labels.sort();
        assert_eq!(labels, ["a", "b", "c"]);
        assert_eq!(t.parent.iter().filter(|p| *p == &Some(1)).count(), 2);
        let (_, _, asm) = build(&p).unwrap();
        assert_eq!(asm.omega.bases.len(), 6);
        // The pieces a, b, c are not in the image of ξ, so the piece group is
        // free on three generators while ⟨x, y, z | xyz⟩ has rank two.
        assert_eq!(asm.omega.presentation().abelianization(), (3, vec![]));
    }

    #[test]
    fn free_generators_become_free_items() {
        let p = input("rank 1\ngenerators x y\nx = a\ny = b\n");
        let (_, _, asm) = build(&p).unwrap();
        assert_eq!(asm.omega.rho, 2);
        assert!(asm.omega.bases.is_empty());
        assert_eq!(asm.omega.presentation().abelian_rank(), 2);
    }

    #[test]
    fn non_cancelling_relator_rejected() {
        let p = input("rank 1\ngenerators x y\nrelator x y\nx = a\ny = b\n");
        assert!(matches!(p.validate(), Err(Error::Invalid(_))));
        let e = build_tree(&p.relators[0], &p).unwrap_err();
        assert!(e.to_string().contains("residual"), "{e}");
    }

    #[test]
    fn parse_round_trip() {
        let p = input(COMM);
        assert_eq!(PresentationInput::parse(&p.to_text(), None).unwrap(), p);
    }
}
