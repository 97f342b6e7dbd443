#![allow(dead_code)]

use lambda_geq::error::Error;
use lambda_geq::geq::{GenEq, Solution};
use lambda_geq::transform::{self, Oracle, TransformResult};

/// One applied transformation and whether it kept the solution sound.
pub struct Outcome {
    pub name: String,
    pub failure: Option<String>,
    pub tau: (usize, usize),
}

/// Every transformation applicable to `(g, u)`, with their parameters.
pub fn applicable(g: &GenEq, u: &Solution) -> Vec<(String, lambda_geq::Result<TransformResult>)> {
    let mut out = Vec::new();
    for c in &g.connections {
        out.push((format!("et1 {} {}", c.p, c.lambda), transform::et1_cut(g, c.p, &c.lambda, Some(u))));
    }
    for l in &g.bases {
        for m in &g.bases {
            if m.id != l.id && m.id != l.dual && l.left() <= m.left() && m.right() <= l.right() {
                out.push((format!("et2 {} {}", l.id, m.id), transform::et2_transfer(g, &l.id, &m.id, Some(u))));
            }
        }
        if g.is_matched(l) {
            out.push((format!("et3 {}", l.id), transform::et3_remove_matched(g, &l.id, Some(u))));
        }
        out.push((format!("et4 {}", l.id), transform::et4_remove_lone(g, &l.id, Some(u))));
        for p in l.left() + 1..l.right() {
            if g.tie(p, &l.id).is_none() {
                out.push((
                    format!("et5 {} {p}", l.id),
                    transform::et5_introduce_boundary(g, &l.id, p, Oracle::Solution(u)),
                ));
            }
        }
        if transform::is_complete(g, l) {
            out.push((format!("d4 {}", l.id), transform::d4_delete_complete(g, &l.id, Some(u))));
        }
    }
    for i in 1..=g.rho {
        for j in i + 1..=g.rho + 1 {
            out.push((format!("d1 {i} {j}"), transform::d1_close_section(g, i, j, Some(u))));
        }
        if g.is_free(i) && g.is_active_item(i) {
            out.push((format!("d3 {i}"), transform::d3_move_free(g, i, Some(u))));
        }
    }
    for k in 0..g.sections.len() {
        for to in 0..g.sections.len() {
            if k != to {
                out.push((format!("d2 {k} {to}"), transform::d2_transport(g, k, to, Some(u))));
            }
        }
    }
    out.push(("d6".into(), transform::d6_linear_step(g, Some(u))));
    out.push(("d7".into(), transform::d7_tietze_cleaning(g, Some(u), 1000).map(|c| c.result)));
    out.push(("d8".into(), transform::d8_entire_step(g, Some(u))));
    out
}

/// Checks a result against the planted solution; `None` when sound.
pub fn check(g: &GenEq, u: &Solution, r: &TransformResult) -> Option<String> {
    if let Err(e) = r.target.validate() {
        return Some(format!("target invalid: {e}"));
    }
    let Some(pushed) = &r.solution else { return Some("no pushed solution".into()) };
    if let Err(e) = r.target.verify_solution(pushed) {
        return Some(format!("pushed solution fails: {e}"));
    }
    match transform::transport(&r.morphism, pushed) {
        Ok(back) if &back == u => {}
        Ok(back) => return Some(format!("transport mismatch: {back} vs {u}")),
        Err(e) => return Some(format!("transport failed: {e}")),
    }
    if r.target.rho > 0 && r.morphism.item_map.len() != g.rho {
        return Some("morphism has wrong domain".into());
    }
    None
}

/// Runs every applicable step; errors other than precondition or
/// not-applicable refusals count as failures.
pub fn sweep(g: &GenEq, u: &Solution) -> Vec<Outcome> {
    let tau = g.tau();
    applicable(g, u)
        .into_iter()
        .filter_map(|(name, r)| match r {
            Ok(r) => Some(Outcome { failure: check(g, u, &r), tau: (tau, r.target.tau()), name }),
            Err(Error::Precondition(_)) | Err(Error::NotApplicable(_)) => None,
            Err(e) => Some(Outcome { name, failure: Some(format!("error: {e}")), tau: (tau, tau) }),
        })
        .collect()
}
