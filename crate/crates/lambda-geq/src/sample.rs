//! Random generalized equations with planted solutions, and a small
//! exhaustive grammar of base layouts.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::geq::{GenEq, Solution};
use crate::words::{free_reduce, LambdaWord, Letter};

fn random_word<R: Rng>(rng: &mut R, len: usize) -> Vec<Letter> {
    let syms = ["a", "b"];
    let mut out: Vec<Letter> = Vec::new();
    while out.len() < len {
        let l = Letter::with_sign(syms[rng.gen_range(0..2)], if rng.gen_bool(0.5) { 1 } else { -1 });
        if out.last().is_some_and(|p| p.is_inverse_of(&l)) {
            continue;
        }
        out.push(l);
    }
    out
}

fn inverse(w: &[Letter]) -> Vec<Letter> {
    w.iter().rev().map(Letter::inv).collect()
}

/// A valid equation over `ℤ` with at most `max_items` items and
/// `max_bases` bases, together with a solution it was built from.
///
/// Returns `None` when the drawn word admits no repeated factor.
pub fn planted_instance<R: Rng>(rng: &mut R, max_items: usize, max_bases: usize) -> Option<(GenEq, Solution)> {
    let len = rng.gen_range(1..=4);
    let chunk = random_word(rng, len);
    let mut raw = Vec::new();
    for _ in 0..rng.gen_range(2..=5) {
        match rng.gen_range(0..4) {
            0 | 1 => raw.extend(chunk.iter().cloned()),
            2 => raw.extend(inverse(&chunk)),
            _ => raw.extend(random_word(rng, 1)),
        }
    }
    let letters = free_reduce(raw);
    let n = letters.len();
    if n < 2 {
        return None;
    }
    let items = rng.gen_range(2..=max_items.min(n));
    let mut cuts: Vec<usize> = (1..n).collect();
    cuts.shuffle(rng);
    let mut offsets: Vec<usize> = cuts[..items - 1].to_vec();
    offsets.push(0);
    offsets.push(n);
    offsets.sort_unstable();
    let rho = offsets.len() - 1;

    let segment = |i: usize, j: usize| &letters[offsets[i - 1]..offsets[j - 1]];
    let mut candidates = Vec::new();
    for i in 1..=rho {
        for j in i + 1..=rho + 1 {
            for k in 1..=rho {
                for l in k + 1..=rho + 1 {
                    if (i, j) >= (k, l) {
                        continue;
                    }
                    let (s, t) = (segment(i, j), segment(k, l));
                    if s.len() != t.len() {
                        continue;
                    }
                    if s == t {
                        candidates.push(((i, j), (k, l)));
                    }
                    if s == inverse(t).as_slice() {
                        candidates.push(((i, j), (l, k)));
                    }
                }
            }
        }
    }
    if rng.gen_bool(0.15) {
        let i = rng.gen_range(1..=rho);
        candidates.push(((i, i + 1), (i, i + 1)));
    }
    if candidates.is_empty() {
        return None;
    }
    candidates.shuffle(rng);
    let pairs = rng.gen_range(1..=(max_bases / 2).max(1)).min(candidates.len());
    let mut g = GenEq::new(1, rho);
    for (k, &(a, b)) in candidates[..pairs].iter().enumerate() {
        g.add_pair(&format!("m{k}"), a, &format!("m{k}b"), b);
    }
    // Tie interior boundaries whose image is a boundary.
    let bases = g.bases.clone();
    for m in bases.iter().step_by(2) {
        let d = g.base(&m.dual).unwrap().clone();
        for p in m.left() + 1..m.right() {
            if !rng.gen_bool(0.6) {
                continue;
            }
            let pos = |b: usize| offsets[b - 1] as i64;
            let off = (pos(p) - pos(m.alpha)) * m.epsilon as i64;
            let target = pos(d.alpha) + off * d.epsilon as i64;
            if let Some(q) = offsets.iter().position(|&o| o as i64 == target) {
                g.add_connection(p, &m.id, q + 1).ok()?;
            }
        }
    }
    let words = (1..=rho).map(|i| LambdaWord::from_letters(1, segment(i, i + 1).to_vec())).collect();
    let u = Solution::new(1, words);
    if g.validate().is_err() || g.verify_solution(&u).is_err() {
        return None;
    }
    Some((g, u))
}

/// Every layout of `pairs` base pairs over `rho` items whose bases have
/// length at most `max_len`, up to reordering of pairs.
pub fn grammar(rho: usize, pairs: usize, max_len: usize) -> Vec<GenEq> {
    let mut intervals = Vec::new();
    for l in 1..=rho {
        for r in l + 1..=(l + max_len).min(rho + 1) {
            intervals.push((l, r));
        }
    }
    let mut shapes = Vec::new();
    for (x, &a) in intervals.iter().enumerate() {
        for &b in &intervals[x..] {
            if a.1 - a.0 == b.1 - b.0 {
                shapes.push((a, b));
            }
        }
    }
    let mut out = Vec::new();
    let mut pick = Vec::new();
    fn rec(shapes: &[((usize, usize), (usize, usize))], from: usize, left: usize, pick: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(pick.clone());
            return;
        }
        for k in from..shapes.len() {
            pick.push(k);
            rec(shapes, k, left - 1, pick, out);
            pick.pop();
        }
    }
    let mut choices = Vec::new();
    rec(&shapes, 0, pairs, &mut pick, &mut choices);
    for c in choices {
        let mut g = GenEq::new(1, rho);
        for (k, &s) in c.iter().enumerate() {
            let (a, b) = shapes[s];
            g.add_pair(&format!("m{k}"), a, &format!("m{k}b"), b);
        }
        out.push(g);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn instances_are_valid() {
        let mut rng = StdRng::seed_from_u64(7);
        let mut made = 0;
        for _ in 0..300 {
            if let Some((g, u)) = planted_instance(&mut rng, 10, 8) {
                assert!(g.rho <= 10 && g.bases.len() <= 8);
                g.verify_solution(&u).unwrap();
                made += 1;
            }
        }
        assert!(made > 100, "only {made} instances");
    }

    #[test]
    fn grammar_counts() {
        assert_eq!(grammar(2, 1, 1).len(), 3);
        for g in grammar(3, 2, 2) {
            g.validate().unwrap();
        }
    }
}
