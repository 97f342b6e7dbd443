//! Smith normal form over `ℤ` and abelianization ranks of finite presentations.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// `U · A · V = D` with `U`, `V` unimodular and `D` diagonal, each diagonal
/// entry dividing the next.
#[derive(Debug, Clone)]
pub struct SmithForm {
    pub rows: usize,
    pub cols: usize,
    pub diagonal: Vec<BigInt>,
    pub left: Vec<Vec<BigInt>>,
    pub right: Vec<Vec<BigInt>>,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.diagonal.iter().filter(|d| !d.is_zero()).count()
    }

    /// Nontrivial invariant factors (those different from `1`).
    pub fn torsion(&self) -> Vec<BigInt> {
        self.diagonal.iter().filter(|d| !d.is_zero() && !d.is_one()).cloned().collect()
    }
}

fn identity(n: usize) -> Vec<Vec<BigInt>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect()
}

fn swap_cols(m: &mut [Vec<BigInt>], a: usize, b: usize) {
    for row in m.iter_mut() {
        row.swap(a, b);
    }
}

/// Column op `col[dst] -= k · col[src]`.
fn sub_col(m: &mut [Vec<BigInt>], dst: usize, src: usize, k: &BigInt) {
    for row in m.iter_mut() {
        let t = &row[src] * k;
        row[dst] -= t;
    }
}

fn sub_row(m: &mut [Vec<BigInt>], dst: usize, src: usize, k: &BigInt) {
    let src_row = m[src].clone();
    for (x, s) in m[dst].iter_mut().zip(src_row) {
        *x -= s * k;
    }
}

pub fn smith_normal_form(a: &[Vec<BigInt>], cols: usize) -> SmithForm {
    let rows = a.len();
    let mut m: Vec<Vec<BigInt>> = a.to_vec();
    let mut u = identity(rows);
    let mut v = identity(cols);
    let mut t = 0;
    while t < rows.min(cols) {
        let pivot = (t..rows)
            .flat_map(|i| (t..cols).map(move |j| (i, j)))
            .filter(|&(i, j)| !m[i][j].is_zero())
            .min_by_key(|&(i, j)| m[i][j].abs());
        let Some((pi, pj)) = pivot else { break };
        m.swap(t, pi);
        u.swap(t, pi);
        swap_cols(&mut m, t, pj);
        swap_cols(&mut v, t, pj);
        loop {
            let mut changed = false;
            for i in t + 1..rows {
                if !m[i][t].is_zero() {
                    let q = m[i][t].div_floor(&m[t][t]);
                    sub_row(&mut m, i, t, &q);
                    sub_row(&mut u, i, t, &q);
                    if !m[i][t].is_zero() {
                        m.swap(t, i);
                        u.swap(t, i);
                        changed = true;
                    }
                }
            }
            for j in t + 1..cols {
                if !m[t][j].is_zero() {
                    let q = m[t][j].div_floor(&m[t][t]);
                    sub_col(&mut m, j, t, &q);
                    sub_col(&mut v, j, t, &q);
                    if !m[t][j].is_zero() {
                        swap_cols(&mut m, t, j);
                        swap_cols(&mut v, t, j);
                        changed = true;
                    }
                }
            }
            if changed {
                continue;
            }
            // Enforce divisibility of the remaining block by the pivot.
            let bad = (t + 1..rows).flat_map(|i| (t + 1..cols).map(move |j| (i, j))).find(|&(i, j)| {
                !m[i][j].is_multiple_of(&m[t][t])
            });
            match bad {
                Some((i, _)) => {
                    let row_i = m[i].clone();
                    for (x, s) in m[t].iter_mut().zip(row_i) {
                        *x += s;
                    }
                    let u_i = u[i].clone();
                    for (x, s) in u[t].iter_mut().zip(u_i) {
                        *x += s;
                    }
                }
                None => break,
            }
        }
        if m[t][t].is_negative() {
            for x in m[t].iter_mut() {
                *x = -x.clone();
            }
            for x in u[t].iter_mut() {
                *x = -x.clone();
            }
        }
        t += 1;
    }
    let diagonal = (0..rows.min(cols)).map(|i| m[i][i].clone()).collect();
    SmithForm { rows, cols, diagonal, left: u, right: v }
}

/// Exponent-sum row of a word in generators `±1..=±n`.
pub fn exponent_row(word: &[i32], n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::zero(); n];
    for &g in word {
        let i = g.unsigned_abs() as usize - 1;
        row[i] += if g > 0 { 1 } else { -1 };
    }
    row
}

/// Free rank of the abelianization of `⟨g₁..gₙ | relators⟩`.
pub fn abelian_rank(generators: usize, relators: &[Vec<i32>]) -> usize {
    if generators == 0 {
        return 0;
    }
    let rows: Vec<Vec<BigInt>> = relators.iter().map(|r| exponent_row(r, generators)).collect();
    generators - smith_normal_form(&rows, generators).rank()
}

/// Matrix product helper used in tests and certificates.
pub fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).fold(BigInt::zero(), |acc, k| acc + &row[k] * &b[k][j]))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(m: &[&[i64]]) -> Vec<Vec<BigInt>> {
        m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    fn check(a: &[Vec<BigInt>], cols: usize) -> SmithForm {
        let s = smith_normal_form(a, cols);
        let d = mat_mul(&mat_mul(&s.left, a), &s.right);
        for (i, row) in d.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if i == j {
                    assert_eq!(x, &s.diagonal[i]);
                } else {
                    assert!(x.is_zero(), "off-diagonal entry {x} at ({i},{j})");
                }
            }
        }
        for w in s.diagonal.windows(2) {
            if !w[1].is_zero() {
                assert!(w[1].is_multiple_of(&w[0]));
            }
        }
        s
    }

    #[test]
    fn known_forms() {
        let s = check(&big(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]), 3);
        assert_eq!(s.diagonal, vec![BigInt::from(2), BigInt::from(6), BigInt::from(12)]);
        let s = check(&big(&[&[2, 0], &[0, 3]]), 2);
        assert_eq!(s.diagonal, vec![BigInt::from(1), BigInt::from(6)]);
    }

    #[test]
    fn abelianization_ranks() {
        assert_eq!(abelian_rank(2, &[vec![1, 2, -1, -2]]), 2);
        assert_eq!(abelian_rank(2, &[]), 2);
        assert_eq!(abelian_rank(3, &[vec![1, -2], vec![2, 3, -3, -2]]), 2);
    }

    proptest! {
        #[test]
        fn snf_certificate(m in prop::collection::vec(prop::collection::vec(-6i64..6, 3), 0..4)) {
            let a: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
            check(&a, 3);
        }
    }
}
