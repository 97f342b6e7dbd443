//! D8 paths, the excess `ψ_ω` and the μ-reducing / prohibited path
//! classification.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geq::{GenEq, Solution};
use crate::ordered::LambdaScalar;
use crate::transform;

/// One vertex of a D8 path.
#[derive(Clone, Debug, Serialize)]
pub struct D8Node {
    pub omega: GenEq,
    #[serde(skip)]
    pub solution: Solution,
    /// Carrier of this equation; empty on the last node.
    pub carrier: String,
    pub transfers: Vec<String>,
    /// Base id to the id of the base of the first equation it descends from.
    pub lineage: BTreeMap<String, String>,
    /// Base id to the base of the previous equation it came from.
    pub parent: BTreeMap<String, String>,
}

impl D8Node {
    pub fn root(&self, id: &str) -> Option<&str> {
        self.lineage.get(id).map(String::as_str)
    }

    fn base_len(&self, id: &str) -> Result<LambdaScalar> {
        let b = self.omega.require_base(id)?;
        Ok(span(&self.solution, b.left(), b.right()))
    }
}

fn span(u: &Solution, from: usize, to: usize) -> LambdaScalar {
    let mut acc = LambdaScalar::zero(u.rank);
    for i in from..to {
        acc = &acc + u.item(i).len();
    }
    acc
}

/// A sequence of D8 steps with transported solutions.
#[derive(Clone, Debug, Serialize)]
pub struct D8Path {
    pub nodes: Vec<D8Node>,
}

impl D8Path {
    /// Carriers `μ₁, …, μ_{m−1}` as root ids.
    pub fn carriers(&self) -> Vec<String> {
        self.nodes[..self.nodes.len() - 1]
            .iter()
            .map(|n| n.root(&n.carrier).unwrap_or(&n.carrier).to_string())
            .collect()
    }

    pub fn omega_sets(&self) -> (BTreeSet<String>, BTreeSet<String>) {
        self.omega_sets_in(0, self.nodes.len() - 1)
    }

    /// `ω` and `ω̃` of the sub-path through nodes `from..=to`.
    pub fn omega_sets_in(&self, from: usize, to: usize) -> (BTreeSet<String>, BTreeSet<String>) {
        let mut omega = BTreeSet::new();
        let mut tilde = BTreeSet::new();
        for n in &self.nodes[from..to] {
            omega.insert(n.root(&n.carrier).unwrap_or(&n.carrier).to_string());
            for t in &n.transfers {
                tilde.insert(n.root(t).unwrap_or(t).to_string());
            }
        }
        (omega, tilde)
    }
}

/// Runs up to `steps` D8 steps from `(omega, sol)`, stopping early when D8
/// no longer applies.
pub fn d8_path(omega: &GenEq, sol: &Solution, steps: usize) -> Result<D8Path> {
    let ids: BTreeMap<String, String> = omega.bases.iter().map(|b| (b.id.clone(), b.id.clone())).collect();
    let mut nodes = vec![D8Node {
        omega: omega.clone(),
        solution: sol.clone(),
        carrier: String::new(),
        transfers: Vec::new(),
        lineage: ids.clone(),
        parent: ids,
    }];
    for _ in 0..steps {
        let cur = nodes.last_mut().unwrap();
        let Some(mu) = transform::carrier(&cur.omega).cloned() else { break };
        let r = match transform::d8_entire_step(&cur.omega, Some(&cur.solution)) {
            Ok(r) => r,
            Err(Error::Precondition(_)) | Err(Error::NotApplicable(_)) => break,
            Err(e) => return Err(e),
        };
        cur.carrier = mu.id.clone();
        cur.transfers = transform::transfer_bases(&cur.omega, &mu);
        let lineage = r
            .origins
            .iter()
            .filter_map(|(new, old)| cur.lineage.get(old).map(|root| (new.clone(), root.clone())))
            .collect();
        let solution = r.solution.clone().ok_or_else(|| Error::Structure("D8 dropped the solution".into()))?;
        nodes.push(D8Node {
            omega: r.target,
            solution,
            carrier: String::new(),
            transfers: Vec::new(),
            lineage,
            parent: r.origins,
        });
    }
    Ok(D8Path { nodes })
}

/// `ω₁`, `ω₂`, `α(ω)`, `|U_ω|` and `ψ_ω(U)` at one node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExcessReport {
    pub omega1: BTreeSet<String>,
    pub omega2: BTreeSet<String>,
    pub alpha: usize,
    pub u_omega: LambdaScalar,
    pub x_sum: LambdaScalar,
    pub psi: LambdaScalar,
}

/// Excess of a node for the path-wide sets `ω` (carriers) and `ω̃`
/// (transfer bases), both given by root id.
pub fn excess(node: &D8Node, omega: &BTreeSet<String>, tilde: &BTreeSet<String>) -> Result<ExcessReport> {
    let g = &node.omega;
    let u = &node.solution;
    let mut omega1 = BTreeSet::new();
    let mut omega2 = BTreeSet::new();
    for b in &g.bases {
        let own = node.root(&b.id);
        let dual = node.root(&b.dual);
        let hit = |r: Option<&str>| r.is_some_and(|r| omega.contains(r) || tilde.contains(r));
        if hit(own) || hit(dual) {
            omega1.insert(b.id.clone());
        } else {
            omega2.insert(b.id.clone());
        }
    }
    let j = g.sections.iter().find(|s| !s.active).map_or(g.rho + 1, |s| s.start);
    let alpha = omega2.iter().filter_map(|id| g.base(id)).map(|b| b.left()).min().map_or(j, |a| a.min(j));
    let u_omega = span(u, 1, alpha);
    let mut x_sum = LambdaScalar::zero(u.rank);
    for id in &omega1 {
        x_sum = &x_sum + &node.base_len(id)?;
    }
    let psi = &x_sum - &(&u_omega + &u_omega);
    Ok(ExcessReport { omega1, omega2, alpha, u_omega, x_sum, psi })
}

/// Per step: `δ_i = |X_{μ_i}^{(i)}| − |X_{μ_i}^{(i+1)}|` and the drop in
/// `|U_ω|`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepDelta {
    pub carrier: String,
    pub delta: LambdaScalar,
    pub u_omega_drop: LambdaScalar,
}

pub fn deltas(path: &D8Path) -> Result<Vec<StepDelta>> {
    let (omega, tilde) = path.omega_sets();
    let reports = path.nodes.iter().map(|n| excess(n, &omega, &tilde)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for i in 0..path.nodes.len() - 1 {
        let (cur, next) = (&path.nodes[i], &path.nodes[i + 1]);
        let before = cur.base_len(&cur.carrier)?;
        let mut after = LambdaScalar::zero(cur.solution.rank);
        for b in &next.omega.bases {
            if next.parent.get(&b.id) == Some(&cur.carrier) {
                after = &after + &next.base_len(&b.id)?;
            }
        }
        out.push(StepDelta {
            carrier: cur.carrier.clone(),
            delta: &before - &after,
            u_omega_drop: &reports[i].u_omega - &reports[i + 1].u_omega,
        });
    }
    Ok(out)
}

/// `ψ_ω` at every node of the path, for the path's own `ω`, `ω̃`.
pub fn excess_along(path: &D8Path) -> Result<Vec<ExcessReport>> {
    let (omega, tilde) = path.omega_sets();
    path.nodes.iter().map(|n| excess(n, &omega, &tilde)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum PathClass {
    MuReducing(String),
    /// `r = r₁s₁⋯r_l s_l r′`: node ranges of the `r_i` with their `η_i`, and
    /// where `r′` starts.
    Prohibited { segments: Vec<(usize, usize, String)>, tail_start: usize },
    Neither,
}

/// The carrier of `node` does not overlap its dual, or overlaps it with
/// `|μ| ≤ 2|α(μ) − α(μ̄)|`.
fn short_or_apart(node: &D8Node) -> Result<bool> {
    let g = &node.omega;
    let m = g.require_base(&node.carrier)?;
    let d = g.dual_of(m)?;
    let overlap = m.left() < d.right() && d.left() < m.right();
    if !overlap {
        return Ok(true);
    }
    let (lo, hi) = (m.left().min(d.left()), m.left().max(d.left()));
    let shift = span(&node.solution, lo, hi);
    Ok(node.base_len(&m.id)? <= &shift + &shift)
}

/// Whether nodes `from..=to` form a μ-reducing path, `μ` the carrier of
/// `from`.
pub fn is_mu_reducing(path: &D8Path, from: usize, to: usize) -> Result<bool> {
    if to < from + 2 {
        return Ok(false);
    }
    let carriers = path.carriers();
    let mu = &carriers[from];
    if carriers[from..to].iter().filter(|c| *c == mu).count() < 2 {
        return Ok(false);
    }
    short_or_apart(&path.nodes[from + 1])
}

fn transfer_roots(path: &D8Path, from: usize, to: usize) -> BTreeSet<String> {
    path.omega_sets_in(from, to).1
}

/// Prohibited when a greedy split into minimal μ-reducing pieces meets the
/// occurrence bound `4n(1 + f₁)` and leaves a tail carrying every transfer
/// base; otherwise μ-reducing if the whole path is, else neither.
pub fn classify_path(path: &D8Path, f1: Option<usize>) -> Result<PathClass> {
    if path.nodes.len() < 2 {
        return Ok(PathClass::Neither);
    }
    let last = path.nodes.len() - 1;
    let n = path.nodes.iter().map(|v| v.omega.bases.len() / 2).max().unwrap_or(0);
    let f1 = f1.unwrap_or(path.nodes[0].omega.bases.len() / 2);
    let bound = 4 * n * (1 + f1);
    let carriers = path.carriers();
    let used: BTreeSet<&String> = carriers.iter().collect();
    let all_transfers = transfer_roots(path, 0, last);

    let mut segments: Vec<(usize, usize, String)> = Vec::new();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut start = 0;
    while start < last {
        let found = (start + 2..=last).find(|&end| is_mu_reducing(path, start, end).unwrap_or(false));
        let Some(end) = found else {
            start += 1;
            continue;
        };
        let eta = carriers[start].clone();
        *counts.entry(eta.clone()).or_default() += 1;
        segments.push((start, end, eta));
        start = end;
        if used.iter().all(|c| counts.get(*c).copied().unwrap_or(0) >= bound)
            && all_transfers.is_subset(&transfer_roots(path, start, last))
        {
            return Ok(PathClass::Prohibited { segments, tail_start: start });
        }
    }
    if is_mu_reducing(path, 0, last)? {
        return Ok(PathClass::MuReducing(carriers[0].clone()));
    }
    Ok(PathClass::Neither)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{build, PresentationInput};

    fn comm() -> (GenEq, Solution) {
        let p = PresentationInput::parse("rank 2\ngenerators x y\nrelator x y x^-1 y^-1\nx = z\ny = z^[0,1]\n", None).unwrap();
        let (_, _, asm) = build(&p).unwrap();
        (asm.omega, asm.solution)
    }

    #[test]
    fn one_step_removes_the_shift() {
        let (g, u) = comm();
        let path = d8_path(&g, &u, 1).unwrap();
        assert_eq!(path.nodes.len(), 2);
        let d = &deltas(&path).unwrap()[0];
        let m = g.require_base(&path.nodes[0].carrier).unwrap();
        let shift = span(&u, m.left(), g.dual_of(m).unwrap().left());
        assert_eq!(d.delta, shift);
        assert_eq!(d.u_omega_drop, d.delta);
    }

    #[test]
    fn excess_is_constant() {
        let (g, u) = comm();
        let path = d8_path(&g, &u, 20).unwrap();
        assert_eq!(path.nodes.len(), 21);
        let psi: BTreeSet<LambdaScalar> = excess_along(&path).unwrap().into_iter().map(|r| r.psi).collect();
        assert_eq!(psi.len(), 1);
        assert!(deltas(&path).unwrap().iter().all(|d| d.delta == d.u_omega_drop));
    }

    #[test]
    fn repeated_carrier_apart_from_its_dual() {
        let g = GenEq::from_text(
            "geq rank=1 items=3\n\
             base m0 2 3 +1 dual m0b\nbase m0b 3 4 +1 dual m0\n\
             base m1 1 3 +1 dual m1b\nbase m1b 2 4 +1 dual m1\n\
             base m2 1 2 +1 dual m2b\nbase m2b 3 4 +1 dual m2\n\
             conn 2 m1 3\nconn 3 m1b 2\nsection 1 4 active\n",
        )
        .unwrap();
        let u = Solution::parse("h1 = a\nh2 = a\nh3 = a", 1).unwrap();
        let path = d8_path(&g, &u, 2).unwrap();
        assert_eq!(path.carriers(), vec!["m1", "m1"]);
        assert_eq!(classify_path(&path, Some(0)).unwrap(), PathClass::MuReducing("m1".into()));
    }

    #[test]
    fn short_paths_are_neither() {
        let (g, u) = comm();
        let path = d8_path(&g, &u, 1).unwrap();
        assert_eq!(classify_path(&path, None).unwrap(), PathClass::Neither);
        let path = d8_path(&g, &u, 12).unwrap();
        assert_eq!(classify_path(&path, None).unwrap(), PathClass::Neither);
    }
}
