//! The rewriting path `T(Ω)`: case classification, the per-case steps and
//! the decomposition report.

pub mod excess;
pub mod periodic;
pub mod quadratic;

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geq::{format_item_word, GenEq, LinearSystem, Section, Solution};
use crate::ordered::Height;
use crate::transform::{self, LoopDetector, Morphism, MorphismKind, TransformResult};
use crate::words::LambdaWord;

pub use excess::{classify_path, d8_path, deltas, excess, excess_along, D8Path, ExcessReport, PathClass};
pub use periodic::{
    build_periodic_structure, check_periodic_structure, cycles_commute, lattice_split, split_by_periodic_structure,
    PeriodGraph, PeriodicStructure, Periodized, SplitKind, SplittingReport,
};
pub use quadratic::{quadratic_candidates, standard_form, QuadraticForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    Linear,
    Quadratic,
    AlmostQuadratic,
    GeneralJsj,
    Leaf,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Case::Linear => "linear",
            Case::Quadratic => "quadratic",
            Case::AlmostQuadratic => "almost quadratic",
            Case::GeneralJsj => "general JSJ",
            Case::Leaf => "leaf",
        };
        f.write_str(s)
    }
}

/// A vertex `v` of the path with `Ω_v` and `Σ_v`.
#[derive(Clone, Debug, Serialize)]
pub struct PathNode {
    pub omega: GenEq,
    pub sigma: LinearSystem,
    pub case: Case,
    pub edge_in: Morphism,
}

/// Leaf when nothing is active; otherwise decided by `γ` on the active items
/// of maximal height.
pub fn classify(omega: &GenEq, sol: Option<&Solution>) -> Result<Case> {
    if !(1..=omega.rho).any(|i| omega.is_active_item(i)) {
        return Ok(Case::Leaf);
    }
    let (max, hs) = transform::active_heights(omega, sol)?;
    let active: Vec<usize> = (1..=omega.rho).filter(|&i| omega.is_active_item(i)).collect();
    let top: Vec<usize> = active.iter().copied().filter(|&i| hs[i - 1] == Some(max)).collect();
    if top.iter().any(|&i| omega.gamma(i) <= 1) {
        return Ok(Case::Linear);
    }
    if top.iter().any(|&i| omega.gamma(i) > 2) {
        return Ok(Case::GeneralJsj);
    }
    if active.iter().all(|&i| omega.gamma(i) <= 2) {
        Ok(Case::Quadratic)
    } else {
        Ok(Case::AlmostQuadratic)
    }
}

/// Classifies a path node in place.
pub fn classify_node(node: &mut PathNode, sol: Option<&Solution>) -> Result<Case> {
    node.case = classify(&node.omega, sol)?;
    Ok(node.case)
}

#[derive(Clone, Debug)]
pub struct Config {
    pub max_steps: usize,
    pub max_linear: usize,
    /// `f₁` in the prohibited-path bound; the number of base pairs when unset.
    pub f1: Option<usize>,
    /// Keep morphism substitutions in the trace.
    pub trace: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config { max_steps: 10_000, max_linear: 1000, f1: None, trace: false }
    }
}

/// One splitting found along the path.
#[derive(Clone, Debug, Serialize)]
pub struct Event {
    pub step: usize,
    pub kind: SplitKind,
    pub note: String,
    /// Free rank split off, for free-product events.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub free_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<QuadraticForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splitting: Option<SplittingReport>,
    /// Length equations the step requires, and whether `Σ_v` implies them.
    pub sigma_rows: Vec<Vec<i64>>,
    pub sigma_complete: bool,
    pub morphism: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainStep {
    Free { rank: usize },
    FreeFactor { rank: usize },
    Qh { genus: usize, orientable: bool, boundary: usize },
    AbelianVertex,
    Hnn,
    CentralizerExtension { rank: usize },
}

impl fmt::Display for ChainStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainStep::Free { rank } => write!(f, "free group of rank {rank}"),
            ChainStep::FreeFactor { rank } => write!(f, "free product with F{rank}"),
            ChainStep::Qh { genus, orientable, boundary } => write!(
                f,
                "QH vertex ({} genus {genus}, {boundary} boundary components)",
                if *orientable { "orientable" } else { "non-orientable" }
            ),
            ChainStep::AbelianVertex => write!(f, "abelian vertex"),
            ChainStep::Hnn => write!(f, "HNN extension over a maximal abelian subgroup"),
            ChainStep::CentralizerExtension { rank } => write!(f, "extension of a centralizer by Z^{rank}"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceEntry {
    pub step: usize,
    pub case: Case,
    pub note: String,
    pub tau_before: usize,
    pub tau_after: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub morphism: Vec<String>,
}

/// `τ` over one driver step, which may pass through intermediate increases.
#[derive(Clone, Debug, Serialize)]
pub struct Episode {
    pub step: usize,
    pub start: usize,
    pub peak: usize,
    pub end: usize,
    pub net_increase: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub schema: u32,
    pub complete: bool,
    pub steps: usize,
    pub abelian_rank: usize,
    pub chain: Vec<ChainStep>,
    pub events: Vec<Event>,
    pub sigma_complete: LinearSystem,
    pub deferred_relators: Vec<String>,
    pub trace: Vec<TraceEntry>,
    pub episodes: Vec<Episode>,
    #[serde(skip)]
    pub final_omega: Option<GenEq>,
}

impl DecompositionReport {
    fn empty(abelian_rank: usize, rho: usize) -> Self {
        DecompositionReport {
            schema: 1,
            complete: false,
            steps: 0,
            abelian_rank,
            chain: Vec::new(),
            events: Vec::new(),
            sigma_complete: LinearSystem { vars: rho, rows: Vec::new() },
            deferred_relators: Vec::new(),
            trace: Vec::new(),
            episodes: Vec::new(),
            final_omega: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn nontrivial_steps(&self) -> impl Iterator<Item = &ChainStep> {
        self.chain.iter().skip(1)
    }
}

impl fmt::Display for DecompositionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "complete: {}", self.complete)?;
        writeln!(f, "steps: {}", self.steps)?;
        for (k, c) in self.chain.iter().enumerate() {
            writeln!(f, "G{}: {c}", k + 1)?;
        }
        for e in &self.events {
            writeln!(f, "event {:?} at step {}: {}", e.kind, e.step, e.note)?;
        }
        writeln!(f, "sigma_complete: {} equations over {} items", self.sigma_complete.rows.len(), self.sigma_complete.vars)?;
        for r in &self.deferred_relators {
            writeln!(f, "deferred: {r}")?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub enum RunError {
    BudgetExhausted(Box<DecompositionReport>),
    Failed(Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::BudgetExhausted(r) => write!(f, "budget exhausted after {} steps", r.steps),
            RunError::Failed(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Failed(e)
    }
}

/// Rewrites `Σ` along `m` by letter counts, then appends the target's own
/// equations and `extra`, skipping implied rows.
pub fn push_sigma(sigma: &LinearSystem, m: &Morphism, target: &GenEq, extra: &[Vec<i64>]) -> LinearSystem {
    let mut out = LinearSystem { vars: target.rho, rows: Vec::new() };
    let add = |row: Vec<i64>, out: &mut LinearSystem| {
        if row.iter().any(|&x| x != 0) && !out.implies(&row) {
            out.rows.push(row);
        }
    };
    for row in &sigma.rows {
        let mut new = vec![0i64; target.rho];
        for (i, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &x in &m.item_map[i] {
                new[x.unsigned_abs() as usize - 1] += c;
            }
        }
        add(new, &mut out);
    }
    for row in target.linear_system().rows.into_iter().chain(extra.iter().cloned()) {
        add(row, &mut out);
    }
    out
}

/// Active items of height below the maximum covered at most once: free ones
/// are moved out, singly covered ones get a new base pair whose dual lies
/// over a fresh item in a new non-active section.
pub fn fill_short_items(omega: &GenEq, sol: Option<&Solution>) -> Result<TransformResult> {
    let (max, hs) = transform::active_heights(omega, sol)?;
    let short = |g: &GenEq, i: usize| g.is_active_item(i) && hs.get(i - 1).copied().flatten().is_some_and(|h| h < max);
    let mut g = omega.clone();
    let mut u = sol.cloned();
    let mut notes = Vec::new();
    let mut morphism = Morphism::identity(omega.rho);
    let mut boundary_map: Vec<Option<usize>> = (0..=omega.rho + 1).map(Some).collect();
    let mut origins: std::collections::BTreeMap<String, String> =
        omega.bases.iter().map(|b| (b.id.clone(), b.id.clone())).collect();
    let originals = omega.rho;
    for i in 1..=originals {
        if !short(&g, i) || g.gamma(i) != 1 {
            continue;
        }
        let new = g.rho + 1;
        g.rho = new;
        g.sections.push(Section { start: new, end: new + 1, active: false });
        let id = g.fresh_id("f");
        let dual = format!("{id}'");
        g.add_pair(&id, (i, i + 1), &dual, (new, new + 1));
        g.heights.insert(new, hs[i - 1].map_or(1, |Height(h)| h));
        if let Some(u) = u.as_mut() {
            let w = u.item(i).clone();
            u.items.push(w);
        }
        origins.insert(id.clone(), id.clone());
        origins.insert(dual.clone(), dual);
        notes.push(format!("h{i}"));
    }
    boundary_map.truncate(omega.rho + 1);
    boundary_map.push(Some(omega.rho + 1));
    morphism.kind = MorphismKind::Isomorphism;
    let mut r = TransformResult {
        target: g,
        morphism,
        note: format!("fill short items {}", if notes.is_empty() { "(none)".into() } else { notes.join(", ") }),
        solution: u,
        boundary_map,
        origins,
    };
    while let Some(q) = (1..=r.target.rho).find(|&q| r.target.is_free(q) && short(&r.target, q.min(originals))) {
        if q > originals {
            break;
        }
        let next = transform::d3_move_free(&r.target, q, r.solution.as_ref())?;
        r = TransformResult {
            morphism: r.morphism.then(&next.morphism),
            note: format!("{}; move free h{q}", r.note),
            solution: next.solution,
            boundary_map: r.boundary_map.iter().map(|b| b.and_then(|b| next.boundary_map.get(b).copied().flatten())).collect(),
            origins: next
                .origins
                .iter()
                .filter_map(|(k, v)| r.origins.get(v).map(|o| (k.clone(), o.clone())))
                .collect(),
            target: next.target,
        };
    }
    Ok(r)
}

struct Driver<'a> {
    config: &'a Config,
    omega: GenEq,
    sol: Option<Solution>,
    sigma: LinearSystem,
    report: DecompositionReport,
    step: usize,
    loops: LoopDetector,
}

impl Driver<'_> {
    fn apply(&mut self, r: TransformResult, extra: &[Vec<i64>]) -> Vec<String> {
        self.sigma = push_sigma(&self.sigma, &r.morphism, &r.target, extra);
        let lines = if self.config.trace { r.morphism.trace_lines() } else { Vec::new() };
        self.omega = r.target;
        if self.sol.is_some() {
            self.sol = r.solution;
        }
        lines
    }

    fn event(&mut self, kind: SplitKind, note: String) -> Event {
        Event {
            step: self.step,
            kind,
            note,
            free_rank: None,
            quadratic: None,
            splitting: None,
            sigma_rows: Vec::new(),
            sigma_complete: true,
            morphism: Vec::new(),
        }
    }

    fn free_items_outside(&self) -> usize {
        (1..=self.omega.rho).filter(|&i| self.omega.is_free(i) && !self.omega.is_active_item(i)).count()
    }

    fn linear(&mut self) -> Result<(String, Vec<String>, usize)> {
        let before = self.free_items_outside();
        let c = transform::d7_tietze_cleaning(&self.omega, self.sol.as_ref(), self.config.max_linear)?;
        if c.result.target == self.omega {
            return Err(Error::Structure("linear case without progress".into()));
        }
        let note = c.result.note.clone();
        let mut peak = self.omega.tau().max(c.result.target.tau());
        let lines = self.apply(c.result, &[]);
        peak = peak.max(self.omega.tau());
        if let Some(k) = c.free_rank.filter(|&k| k > 0) {
            let mut e = self.event(SplitKind::FreeProduct, format!("kernel after loop of period {:?}", c.loop_period));
            e.free_rank = Some(k as usize);
            e.morphism = lines.clone();
            self.report.events.push(e);
        }
        let moved = self.free_items_outside().saturating_sub(before);
        if moved > 0 {
            let mut e = self.event(SplitKind::FreeProduct, format!("{moved} free items moved out of the active part"));
            e.free_rank = Some(moved);
            e.morphism = lines.clone();
            self.report.events.push(e);
        }
        Ok((format!("{note} ({} linear steps)", c.steps), lines, peak))
    }

    /// A regular quadratic interval becomes non-active; its coefficient
    /// pairs are removed and kept as deferred relators.
    fn quadratic(&mut self) -> Result<Option<String>> {
        for (a, b) in quadratic_candidates(&self.omega) {
            let form = match standard_form(&self.omega, (a, b)) {
                Ok(f) if f.regular => f,
                _ => continue,
            };
            let mut g = self.omega.clone();
            for s in g.sections.iter_mut().filter(|s| a <= s.start && s.end <= b) {
                s.active = false;
            }
            for id in &form.coefficient_bases {
                if let Some(base) = g.base(id) {
                    let d = self.omega.dual_of(base)?;
                    let rel = format!(
                        "{} = {}",
                        format_item_word(&base.reading()),
                        format_item_word(&d.reading())
                    );
                    self.report.deferred_relators.push(rel);
                    g = transform::remove_pair(&g, id);
                }
            }
            let note = format!("QH vertex on [{a}, {b}]: {}", form.standard_relation());
            let mut e = self.event(SplitKind::QHVertex, note.clone());
            e.quadratic = Some(form);
            let r = TransformResult {
                morphism: Morphism { item_map: Morphism::identity(g.rho).item_map, kind: MorphismKind::Epimorphism },
                boundary_map: (0..=g.rho + 1).map(Some).collect(),
                origins: g.bases.iter().map(|b| (b.id.clone(), b.id.clone())).collect(),
                solution: self.sol.clone(),
                note: note.clone(),
                target: g,
            };
            e.morphism = self.apply(r, &[]);
            self.report.events.push(e);
            return Ok(Some(note));
        }
        Ok(None)
    }

    /// Splits along a periodic structure grown from an overlapping pair whose
    /// shift is cyclically reduced.
    fn periodic(&mut self) -> Result<Option<String>> {
        let Some(u) = self.sol.clone() else { return Ok(None) };
        for (mu, mub, _) in periodic::overlapping_pairs(&self.omega, &u) {
            let (m, d) = (self.omega.require_base(&mu)?, self.omega.require_base(&mub)?);
            let shift: LambdaWord = u.eval_reduced(&crate::geq::item_range(m.left(), d.left()))?;
            if shift.is_empty() || !shift.is_cyclically_reduced() {
                continue;
            }
            let Ok(ps) = build_periodic_structure(&self.omega, &u, &shift) else { continue };
            check_periodic_structure(&self.omega, &ps)?;
            let split = match split_by_periodic_structure(&ps, &self.omega, Some(&u)) {
                Ok(s) => s,
                Err(Error::Structure(_)) | Err(Error::Verification(_)) => continue,
                Err(e) => return Err(e),
            };
            let mut g = self.omega.clone();
            for &s in &ps.sections {
                g.sections[s].active = false;
            }
            let note = format!("periodic structure on ({mu}, {mub}) with period {shift}");
            let rows = split.sigma_rows.clone();
            let r = TransformResult {
                morphism: Morphism::identity(g.rho),
                boundary_map: (0..=g.rho + 1).map(Some).collect(),
                origins: g.bases.iter().map(|b| (b.id.clone(), b.id.clone())).collect(),
                solution: self.sol.clone(),
                note: note.clone(),
                target: g,
            };
            let lines = self.apply(r, &rows);
            let complete = rows.iter().all(|row| self.sigma.implies(row));
            for kind in &split.events {
                let mut e = self.event(*kind, note.clone());
                e.sigma_rows = rows.clone();
                e.sigma_complete = complete;
                e.morphism = lines.clone();
                if *kind == SplitKind::CentralizerExtension {
                    e.splitting = Some(split.clone());
                }
                self.report.events.push(e);
            }
            return Ok(Some(note));
        }
        Ok(None)
    }

    fn entire(&mut self) -> Result<(String, Vec<String>, usize)> {
        let r = transform::d8_entire_step(&self.omega, self.sol.as_ref())?;
        let note = r.note.clone();
        let mut peak = self.omega.tau().max(r.target.tau());
        let mut lines = self.apply(r, &[]);
        let c = transform::d7_tietze_cleaning(&self.omega, self.sol.as_ref(), self.config.max_linear)?;
        peak = peak.max(c.result.target.tau());
        lines.extend(self.apply(c.result, &[]));
        if let Some(period) = self.loops.observe(&self.omega) {
            let carrier = transform::carrier(&self.omega).map(|b| b.id.clone());
            let section = carrier.as_ref().and_then(|id| self.omega.section_of_base(self.omega.base(id)?));
            if let Some(s) = section {
                self.omega.sections[s].active = false;
                let mut e = self.event(SplitKind::HNNEdge, format!("quadratic section recurs with period {period}"));
                e.morphism = lines.clone();
                self.report.events.push(e);
            }
        }
        Ok((note, lines, peak))
    }

    fn nonlinear(&mut self) -> Result<(String, Vec<String>, usize)> {
        let start = self.omega.tau();
        let fill = fill_short_items(&self.omega, self.sol.as_ref())?;
        let mut peak = start.max(fill.target.tau());
        let mut notes = Vec::new();
        let mut lines = Vec::new();
        if fill.target != self.omega {
            notes.push(fill.note.clone());
            lines.extend(self.apply(fill, &[]));
        }
        if let Some(n) = self.quadratic()? {
            notes.push(n);
        } else if let Some(n) = self.periodic()? {
            notes.push(n);
        } else {
            match self.entire() {
                Ok((n, l, p)) => {
                    notes.push(n);
                    lines.extend(l);
                    peak = peak.max(p);
                }
                Err(Error::Precondition(m)) | Err(Error::NotApplicable(m)) => {
                    return Err(Error::Structure(format!("no step applies: {m}")));
                }
                Err(e) => return Err(e),
            }
        }
        Ok((notes.join("; "), lines, peak))
    }
}

/// Builds the chain `G₁ < … < G_n` from the events, newest first; the first
/// group is free of the rank not accounted for by the other steps.
fn chain(abelian_rank: usize, events: &[Event]) -> Vec<ChainStep> {
    let mut used = 0usize;
    let mut steps = Vec::new();
    for e in events {
        match e.kind {
            SplitKind::FreeProduct => {
                let k = e.free_rank.unwrap_or(0);
                used += k;
                steps.push(ChainStep::FreeFactor { rank: k });
            }
            SplitKind::QHVertex => {
                let q = e.quadratic.as_ref();
                let genus = q.map_or(0, |q| q.genus);
                let orientable = q.is_none_or(|q| q.orientable);
                let boundary = q.map_or(0, |q| q.boundary_components);
                used += q.map_or(0, |q| if !q.orientable && boundary == 0 { q.x_count.saturating_sub(1) } else { q.x_count });
                steps.push(ChainStep::Qh { genus, orientable, boundary });
            }
            SplitKind::AbelianVertex => steps.push(ChainStep::AbelianVertex),
            SplitKind::HNNEdge => {
                used += 1;
                steps.push(ChainStep::Hnn);
            }
            SplitKind::CentralizerExtension => {
                let r = e.splitting.as_ref().map_or(1, |s| s.abelian_rank);
                used += r.saturating_sub(1);
                steps.push(ChainStep::CentralizerExtension { rank: r });
            }
        }
    }
    steps.reverse();
    let mut base = abelian_rank.saturating_sub(used);
    let mut rest = steps.into_iter().peekable();
    while let Some(ChainStep::FreeFactor { rank }) = rest.peek() {
        base += rank;
        rest.next();
    }
    std::iter::once(ChainStep::Free { rank: base }).chain(rest).collect()
}

/// Runs the elimination process from `Ω` (with a planted solution, or with
/// declared item heights) until no active section remains.
pub fn run(omega: &GenEq, sol: Option<&Solution>, config: &Config) -> std::result::Result<DecompositionReport, RunError> {
    omega.validate()?;
    if let Some(u) = sol {
        omega.verify_solution(u)?;
    }
    let rank = omega.presentation().abelian_rank();
    let mut d = Driver {
        config,
        omega: omega.clone(),
        sol: sol.cloned(),
        sigma: omega.linear_system(),
        report: DecompositionReport::empty(rank, omega.rho),
        step: 0,
        loops: LoopDetector::new(),
    };
    loop {
        let case = classify(&d.omega, d.sol.as_ref())?;
        if case == Case::Leaf {
            break;
        }
        if d.step >= config.max_steps {
            let mut report = d.report;
            report.steps = d.step;
            report.sigma_complete = d.sigma;
            report.final_omega = Some(d.omega);
            return Err(RunError::BudgetExhausted(Box::new(report)));
        }
        d.step += 1;
        let tau_before = d.omega.tau();
        let (note, lines, peak) = match case {
            Case::Linear => d.linear()?,
            _ => d.nonlinear()?,
        };
        let tau_after = d.omega.tau();
        d.report.episodes.push(Episode {
            step: d.step,
            start: tau_before,
            peak: peak.max(tau_after),
            end: tau_after,
            net_increase: tau_after > tau_before,
        });
        d.report.trace.push(TraceEntry { step: d.step, case, note, tau_before, tau_after, morphism: lines });
    }
    let mut report = d.report;
    report.complete = true;
    report.steps = d.step;
    report.chain = chain(rank, &report.events);
    report.sigma_complete = d.sigma;
    report.final_omega = Some(d.omega);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{build, PresentationInput};

    fn assembled(text: &str) -> (GenEq, Solution) {
        let p = PresentationInput::parse(text, None).unwrap();
        let (_, _, asm) = build(&p).unwrap();
        (asm.omega, asm.solution)
    }

    const COMM: &str = "rank 2\ngenerators x y\nrelator x y x^-1 y^-1\nx = z\ny = z^[0,1]\n";

    #[test]
    fn classify_cases() {
        let (g, u) = assembled(COMM);
        assert_eq!(classify(&g, Some(&u)).unwrap(), Case::Quadratic);

        let mut lin = GenEq::new(1, 3);
        lin.add_pair("a", (1, 2), "b", (2, 3));
        lin.sections = vec![Section { start: 1, end: 4, active: true }];
        let u = Solution::parse("h1 = x\nh2 = x\nh3 = x", 1).unwrap();
        assert_eq!(classify(&lin, Some(&u)).unwrap(), Case::Linear);

        let mut aq = GenEq::new(2, 3);
        aq.add_pair("a", (1, 3), "b", (2, 4));
        aq.add_pair("e", (1, 2), "f", (3, 4));
        aq.add_pair("c", (2, 3), "d", (2, 3));
        aq.sections = vec![Section { start: 1, end: 4, active: true }];
        let u = Solution::parse("h1 = x^[0,1]\nh2 = x\nh3 = x^[0,1]", 2).unwrap();
        aq.verify_solution(&u).unwrap();
        assert_eq!(classify(&aq, Some(&u)).unwrap(), Case::AlmostQuadratic);
        let u = Solution::parse("h1 = x\nh2 = x\nh3 = x", 2).unwrap();
        assert_eq!(classify(&aq, Some(&u)).unwrap(), Case::GeneralJsj);

        let mut leaf = lin.clone();
        leaf.sections[0].active = false;
        assert_eq!(classify(&leaf, None).unwrap(), Case::Leaf);
    }

    #[test]
    fn missing_heights_are_an_error() {
        let mut g = GenEq::new(1, 2);
        g.add_pair("a", (1, 2), "b", (2, 3));
        g.add_pair("c", (1, 2), "d", (2, 3));
        g.sections = vec![Section { start: 1, end: 3, active: true }];
        assert!(classify(&g, None).is_err());
        g.heights.insert(1, 1);
        g.heights.insert(2, 1);
        assert_eq!(classify(&g, None).unwrap(), Case::Quadratic);
    }

    #[test]
    fn commutator_gives_a_centralizer_extension() {
        let (g, u) = assembled(COMM);
        let r = run(&g, Some(&u), &Config::default()).unwrap();
        assert!(r.complete);
        assert_eq!(r.chain, vec![ChainStep::Free { rank: 1 }, ChainStep::CentralizerExtension { rank: 2 }]);
        let ce: Vec<&Event> = r.events.iter().filter(|e| e.kind == SplitKind::CentralizerExtension).collect();
        assert_eq!(ce.len(), 1);
        assert!(ce[0].sigma_complete);
        assert!(!ce[0].sigma_rows.is_empty());
    }

    #[test]
    fn free_group_is_one_free_step() {
        let (g, u) = assembled("rank 2\ngenerators x y\nx = z\ny = z^[0,1]\n");
        let r = run(&g, Some(&u), &Config::default()).unwrap();
        assert_eq!(r.chain, vec![ChainStep::Free { rank: 2 }]);
    }

    #[test]
    fn zero_budget_is_exhausted() {
        let (g, u) = assembled(COMM);
        let cfg = Config { max_steps: 0, ..Config::default() };
        match run(&g, Some(&u), &cfg) {
            Err(RunError::BudgetExhausted(r)) => {
                assert!(!r.complete);
                assert!(r.events.is_empty());
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn sigma_rewrites_through_letter_counts() {
        let mut src = GenEq::new(1, 2);
        src.sections = vec![Section { start: 1, end: 3, active: true }];
        let sigma = LinearSystem { vars: 2, rows: vec![vec![1, -1]] };
        let mut tgt = GenEq::new(1, 3);
        tgt.sections = vec![Section { start: 1, end: 4, active: true }];
        let m = Morphism { item_map: vec![vec![1, 2], vec![3]], kind: MorphismKind::Isomorphism };
        let out = push_sigma(&sigma, &m, &tgt, &[vec![1, 0, 0]]);
        assert_eq!(out.rows, vec![vec![1, 1, -1], vec![1, 0, 0]]);
    }

    #[test]
    fn filling_adds_a_dual_outside() {
        let mut g = GenEq::new(2, 4);
        g.add_pair("a", (1, 3), "b", (3, 5));
        g.add_pair("c", (1, 2), "d", (3, 4));
        g.sections = vec![Section { start: 1, end: 5, active: true }];
        let u = Solution::parse("h1 = x^[0,1]\nh2 = y\nh3 = x^[0,1]\nh4 = y", 2).unwrap();
        g.verify_solution(&u).unwrap();
        let r = fill_short_items(&g, Some(&u)).unwrap();
        let t = &r.target;
        assert_eq!(t.rho, 6);
        assert_eq!(t.sections.iter().filter(|s| !s.active).count(), 2);
        assert!((1..=4).all(|i| t.gamma(i) == 2));
        t.verify_solution(r.solution.as_ref().unwrap()).unwrap();
        assert_eq!(t.tau(), g.tau() + 2);
    }
}
