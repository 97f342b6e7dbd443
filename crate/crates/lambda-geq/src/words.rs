//! Reduced Λ-words in block form.
//!
//! A word is a sequence of blocks. A `Finite` block is an explicit letter
//! sequence. A `Power { base: p, len: L }` block with `ht(L) ≥ 2` is the
//! `p`-periodic word of length `L` whose letter at 1-based position `b` is
//! `p[(b₁ − 1) mod |p|]`, where `b₁` is the lowest coordinate of `b`.
//!
//! Canonical form: adjacent finite blocks are merged, and every letter that
//! continues the period of the power block to its left is absorbed into that
//! block (left-greedy). Letters preceding a power block that continue its
//! period backwards are absorbed by rotating its base. Two words are equal as
//! functions `[1, |w|] → X±` exactly when their canonical forms coincide.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ordered::{Height, LambdaScalar};

/// A generator or its inverse.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Letter {
    symbol: Arc<str>,
    inverse: bool,
}

impl Letter {
    pub fn new(symbol: &str) -> Self {
        Letter { symbol: Arc::from(symbol), inverse: false }
    }

    pub fn with_sign(symbol: &str, sign: i8) -> Self {
        Letter { symbol: Arc::from(symbol), inverse: sign < 0 }
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn sign(&self) -> i8 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    pub fn inv(&self) -> Letter {
        Letter { symbol: self.symbol.clone(), inverse: !self.inverse }
    }

    pub fn is_inverse_of(&self, other: &Letter) -> bool {
        self.inverse != other.inverse && self.symbol == other.symbol
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "{}^-1", self.symbol)
        } else {
            write!(f, "{}", self.symbol)
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Block {
    Finite(Vec<Letter>),
    /// `base` is primitive and cyclically reduced; `ht(len) ≥ 2`, `len > 0`.
    Power { base: Vec<Letter>, len: LambdaScalar },
}

impl Block {
    pub fn len(&self, rank: usize) -> LambdaScalar {
        match self {
            Block::Finite(ls) => LambdaScalar::finite(rank, ls.len()),
            Block::Power { len, .. } => len.clone(),
        }
    }

    /// Letter at 0-based offset `off`.
    fn letter_at(&self, off: &LambdaScalar) -> &Letter {
        match self {
            Block::Finite(ls) => &ls[off.as_usize().expect("finite offset")],
            Block::Power { base, .. } => &base[off.low_mod(base.len())],
        }
    }

    fn first_letter(&self) -> &Letter {
        match self {
            Block::Finite(ls) => &ls[0],
            Block::Power { base, .. } => &base[0],
        }
    }

    fn last_letter(&self) -> &Letter {
        match self {
            Block::Finite(ls) => ls.last().expect("nonempty block"),
            Block::Power { base, len } => {
                let n = base.len();
                &base[(len.low_mod(n) + n - 1) % n]
            }
        }
    }

    fn inverse(&self) -> Block {
        match self {
            Block::Finite(ls) => Block::Finite(invert_letters(ls)),
            Block::Power { base, len } => {
                let n = base.len();
                let inv = invert_letters(base);
                let shift = (n - len.low_mod(n)) % n;
                Block::Power { base: rotate(&inv, shift), len: len.clone() }
            }
        }
    }

    /// Split at 0-based offset `k` with `0 < k < len`.
    fn split(&self, k: &LambdaScalar, rank: usize) -> (Block, Block) {
        match self {
            Block::Finite(ls) => {
                let k = k.as_usize().expect("finite split");
                (Block::Finite(ls[..k].to_vec()), Block::Finite(ls[k..].to_vec()))
            }
            Block::Power { base, len } => {
                let n = base.len();
                let left = make_periodic(base.clone(), k.clone());
                let right = make_periodic(rotate(base, k.low_mod(n)), len - k);
                debug_assert_eq!(left.len(rank) + right.len(rank), *len);
                (left, right)
            }
        }
    }
}

fn invert_letters(ls: &[Letter]) -> Vec<Letter> {
    ls.iter().rev().map(Letter::inv).collect()
}

fn rotate(p: &[Letter], r: usize) -> Vec<Letter> {
    let r = r % p.len();
    p[r..].iter().chain(&p[..r]).cloned().collect()
}

/// Shortest `r` with `p = r^j`.
fn primitive_root(p: &[Letter]) -> &[Letter] {
    let n = p.len();
    for d in 1..n {
        if n % d == 0 && (d..n).all(|i| p[i] == p[i - d]) {
            return &p[..d];
        }
    }
    p
}

/// Free reduction of a letter sequence.
pub fn free_reduce(letters: impl IntoIterator<Item = Letter>) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::new();
    for l in letters {
        if out.last().is_some_and(|t| t.is_inverse_of(&l)) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

fn is_freely_reduced(ls: &[Letter]) -> bool {
    ls.windows(2).all(|w| !w[0].is_inverse_of(&w[1]))
}

fn is_cyclically_reduced_letters(ls: &[Letter]) -> bool {
    is_freely_reduced(ls) && (ls.len() < 2 || !ls[0].is_inverse_of(&ls[ls.len() - 1]))
}

/// The `p`-periodic block of length `len` starting with `p[0]`.
fn make_periodic(p: Vec<Letter>, len: LambdaScalar) -> Block {
    if len.height().0 <= 1 {
        let k = len.as_usize().expect("periodic length fits in memory");
        let n = p.len();
        Block::Finite((0..k).map(|i| p[i % n].clone()).collect())
    } else {
        Block::Power { base: p, len }
    }
}

/// Incremental canonicalization.
struct Builder {
    rank: usize,
    out: Vec<Block>,
}

impl Builder {
    fn new(rank: usize) -> Self {
        Builder { rank, out: Vec::new() }
    }

    fn push(&mut self, b: Block) {
        match b {
            Block::Finite(ls) => self.push_letters(ls),
            Block::Power { base, len } => self.push_power(base, len),
        }
    }

    fn push_letters(&mut self, mut ls: Vec<Letter>) {
        if ls.is_empty() {
            return;
        }
        if let Some(Block::Power { base, len }) = self.out.last_mut() {
            let n = base.len();
            let mut phase = len.low_mod(n);
            let mut i = 0;
            while i < ls.len() && ls[i] == base[phase] {
                i += 1;
                phase = (phase + 1) % n;
            }
            if i > 0 {
                *len = &*len + &LambdaScalar::finite(self.rank, i);
                ls.drain(..i);
            }
            if ls.is_empty() {
                return;
            }
        }
        if let Some(Block::Finite(prev)) = self.out.last_mut() {
            prev.extend(ls);
        } else {
            self.out.push(Block::Finite(ls));
        }
    }

    fn push_power(&mut self, mut q: Vec<Letter>, mut m: LambdaScalar) {
        loop {
            match self.out.last_mut() {
                Some(Block::Finite(prev)) => {
                    let mut back = 0usize;
                    while let Some(l) = prev.last() {
                        if *l == q[q.len() - 1] {
                            prev.pop();
                            q.rotate_right(1);
                            back += 1;
                        } else {
                            break;
                        }
                    }
                    if back > 0 {
                        m = &m + &LambdaScalar::finite(self.rank, back);
                    }
                    if prev.is_empty() {
                        self.out.pop();
                        continue;
                    }
                    self.out.push(Block::Power { base: q, len: m });
                    return;
                }
                Some(Block::Power { base: p, len: l }) => {
                    let (n, k) = (p.len(), q.len());
                    let phase = l.low_mod(n);
                    let cap = n + k;
                    let mut t = 0;
                    while t < cap && q[t % k] == p[(phase + t) % n] {
                        t += 1;
                    }
                    if t == cap {
                        *l = &*l + &m;
                        return;
                    }
                    if t > 0 {
                        let tl = LambdaScalar::finite(self.rank, t);
                        *l = &*l + &tl;
                        m = &m - &tl;
                        q = rotate(&q, t % k);
                    }
                    self.out.push(Block::Power { base: q, len: m });
                    return;
                }
                None => {
                    self.out.push(Block::Power { base: q, len: m });
                    return;
                }
            }
        }
    }

    fn finish(self) -> LambdaWord {
        let mut len = LambdaScalar::zero(self.rank);
        for b in &self.out {
            len = len + b.len(self.rank);
        }
        LambdaWord { rank: self.rank, blocks: self.out, len }
    }
}

/// A Λ-word in canonical block form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct LambdaWord {
    rank: usize,
    blocks: Vec<Block>,
    len: LambdaScalar,
}

impl LambdaWord {
    pub fn empty(rank: usize) -> Self {
        LambdaWord { rank, blocks: Vec::new(), len: LambdaScalar::zero(rank) }
    }

    /// The word spelled by `letters`, without free reduction.
    pub fn from_letters(rank: usize, letters: Vec<Letter>) -> Self {
        let mut b = Builder::new(rank);
        b.push_letters(letters);
        b.finish()
    }

    pub fn letter(rank: usize, symbol: &str) -> Self {
        Self::from_letters(rank, vec![Letter::new(symbol)])
    }

    /// Build from arbitrary blocks, validating and canonicalizing.
    pub fn from_blocks(rank: usize, blocks: Vec<Block>) -> Result<Self> {
        let mut b = Builder::new(rank);
        for blk in blocks {
            match blk {
                Block::Finite(ls) => b.push_letters(ls),
                Block::Power { base, len } => {
                    let w = Self::periodic(rank, base, len)?;
                    for x in w.blocks {
                        b.push(x);
                    }
                }
            }
        }
        Ok(b.finish())
    }

    /// The `p`-periodic word of length `len` starting with `p[0]`.
    pub fn periodic(rank: usize, base: Vec<Letter>, len: LambdaScalar) -> Result<Self> {
        if len.rank() != rank {
            return Err(Error::RankMismatch { left: rank, right: len.rank() });
        }
        if len.is_negative() {
            return Err(Error::OutOfRange(format!("negative periodic length {len}")));
        }
        if len.is_zero() {
            return Ok(Self::empty(rank));
        }
        if base.is_empty() || !is_cyclically_reduced_letters(&base) {
            return Err(Error::Undefined("periodic base must be nonempty and cyclically reduced".into()));
        }
        let root = primitive_root(&base).to_vec();
        let mut b = Builder::new(rank);
        b.push(make_periodic(root, len));
        Ok(b.finish())
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> &LambdaScalar {
        &self.len
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn height(&self) -> Height {
        self.len.height()
    }

    /// The letters when the word has finite length.
    pub fn finite_letters(&self) -> Option<&[Letter]> {
        match self.blocks.as_slice() {
            [] => Some(&[]),
            [Block::Finite(ls)] => Some(ls),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.finite_letters().is_some()
    }

    pub fn first_letter(&self) -> Option<&Letter> {
        self.blocks.first().map(Block::first_letter)
    }

    pub fn last_letter(&self) -> Option<&Letter> {
        self.blocks.last().map(Block::last_letter)
    }

    pub fn is_reduced(&self) -> bool {
        self.blocks.iter().all(|b| match b {
            Block::Finite(ls) => is_freely_reduced(ls),
            Block::Power { .. } => true,
        }) && self.blocks.windows(2).all(|w| !w[0].last_letter().is_inverse_of(w[1].first_letter()))
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.is_reduced()
            && match (self.first_letter(), self.last_letter()) {
                (Some(a), Some(b)) => !a.is_inverse_of(b),
                _ => true,
            }
    }

    /// Letter at 1-based position `pos`.
    pub fn letter_at(&self, pos: &LambdaScalar) -> Result<&Letter> {
        let one = LambdaScalar::one(self.rank);
        if *pos < one || *pos > self.len {
            return Err(Error::OutOfRange(format!("position {pos} outside [1,{}]", self.len)));
        }
        let mut off = pos - &one;
        for b in &self.blocks {
            let bl = b.len(self.rank);
            if off < bl {
                return Ok(b.letter_at(&off));
            }
            off = off - bl;
        }
        unreachable!("position checked against length")
    }

    /// Split into the prefix of length `k` and the remaining suffix.
    pub fn split_at(&self, k: &LambdaScalar) -> Result<(LambdaWord, LambdaWord)> {
        if k.rank() != self.rank {
            return Err(Error::RankMismatch { left: self.rank, right: k.rank() });
        }
        if k.is_negative() || *k > self.len {
            return Err(Error::OutOfRange(format!("split point {k} outside [0,{}]", self.len)));
        }
        let mut left = Builder::new(self.rank);
        let mut right = Builder::new(self.rank);
        let mut acc = LambdaScalar::zero(self.rank);
        for b in &self.blocks {
            let bl = b.len(self.rank);
            let end = &acc + &bl;
            if end <= *k {
                left.push(b.clone());
            } else if acc >= *k {
                right.push(b.clone());
            } else {
                let (l, r) = b.split(&(k - &acc), self.rank);
                left.push(l);
                right.push(r);
            }
            acc = end;
        }
        Ok((left.finish(), right.finish()))
    }

    pub fn prefix(&self, k: &LambdaScalar) -> Result<LambdaWord> {
        Ok(self.split_at(k)?.0)
    }

    pub fn suffix_from(&self, k: &LambdaScalar) -> Result<LambdaWord> {
        Ok(self.split_at(k)?.1)
    }

    pub fn inverse(&self) -> LambdaWord {
        let mut b = Builder::new(self.rank);
        for blk in self.blocks.iter().rev() {
            b.push(blk.inverse());
        }
        b.finish()
    }

    /// Concatenation without cancellation.
    pub fn concat(&self, other: &LambdaWord) -> LambdaWord {
        assert_eq!(self.rank, other.rank, "rank mismatch in concatenation");
        let mut b = Builder { rank: self.rank, out: self.blocks.clone() };
        for blk in &other.blocks {
            b.push(blk.clone());
        }
        b.finish()
    }

    pub fn parse(s: &str, rank: usize) -> Result<LambdaWord> {
        Parser { src: s.as_bytes(), pos: 0, rank }.parse_all()
    }
}

fn aligned(p: &[Letter], pi: usize, q: &[Letter], qi: usize) -> bool {
    let n = p.len();
    n == q.len() && (0..n).all(|t| p[(pi + t) % n] == q[(qi + t) % n])
}

/// Length of the longest common initial segment.
fn common_prefix_len(u: &LambdaWord, v: &LambdaWord) -> LambdaScalar {
    let rank = u.rank;
    if let (Some(a), Some(b)) = (u.finite_letters(), v.finite_letters()) {
        let k = a.iter().zip(b).take_while(|(x, y)| x == y).count();
        return LambdaScalar::finite(rank, k);
    }
    let one = LambdaScalar::one(rank);
    let zero = LambdaScalar::zero(rank);
    let mut k = zero.clone();
    let (mut i, mut oi) = (0usize, zero.clone());
    let (mut j, mut oj) = (0usize, zero.clone());
    while i < u.blocks.len() && j < v.blocks.len() {
        let (bu, bv) = (&u.blocks[i], &v.blocks[j]);
        let (lu, lv) = (bu.len(rank), bv.len(rank));
        let step = match (bu, bv) {
            (Block::Power { base: p, .. }, Block::Power { base: q, .. })
                if aligned(p, oi.low_mod(p.len()), q, oj.low_mod(q.len())) =>
            {
                let ru = &lu - &oi;
                let rv = &lv - &oj;
                ru.min(rv)
            }
            (Block::Finite(a), Block::Finite(b)) => {
                let (x, y) = (oi.as_usize().unwrap(), oj.as_usize().unwrap());
                let run = a[x..].iter().zip(&b[y..]).take_while(|(s, t)| s == t).count();
                if run == 0 {
                    break;
                }
                LambdaScalar::finite(rank, run)
            }
            _ => {
                if bu.letter_at(&oi) != bv.letter_at(&oj) {
                    break;
                }
                one.clone()
            }
        };
        k = &k + &step;
        oi = &oi + &step;
        oj = &oj + &step;
        if oi == lu {
            i += 1;
            oi = zero.clone();
        }
        if oj == lv {
            j += 1;
            oj = zero.clone();
        }
    }
    k
}

/// Result of [`concat`]: the word and whether the junction is reduced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Concatenation {
    pub word: LambdaWord,
    pub reduced: bool,
}

pub fn concat(u: &LambdaWord, v: &LambdaWord) -> Concatenation {
    let word = u.concat(v);
    let reduced = word.is_reduced();
    Concatenation { word, reduced }
}

pub fn invert(w: &LambdaWord) -> LambdaWord {
    w.inverse()
}

/// `(c, ũ, ṽ)` with `u = c ∘ ũ`, `v = c ∘ ṽ` and `c` maximal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Common {
    pub common: LambdaWord,
    pub rest_u: LambdaWord,
    pub rest_v: LambdaWord,
}

/// Longest common initial segment. Always representable for block-form
/// words; the `Result` reports rank mismatches.
pub fn com(u: &LambdaWord, v: &LambdaWord) -> Result<Common> {
    if u.rank != v.rank {
        return Err(Error::RankMismatch { left: u.rank, right: v.rank });
    }
    let k = common_prefix_len(u, v);
    let (common, rest_u) = u.split_at(&k)?;
    let rest_v = v.suffix_from(&k)?;
    Ok(Common { common, rest_u, rest_v })
}

/// The product `u ∗ v = ũ⁻¹ ∘ ṽ` where `(c, ũ, ṽ) = com(u⁻¹, v)`.
pub fn mult(u: &LambdaWord, v: &LambdaWord) -> Result<LambdaWord> {
    if let (Some(a), Some(b)) = (u.finite_letters(), v.finite_letters()) {
        if u.rank != v.rank {
            return Err(Error::RankMismatch { left: u.rank, right: v.rank });
        }
        let mut k = 0;
        while k < a.len() && k < b.len() && a[a.len() - 1 - k].is_inverse_of(&b[k]) {
            k += 1;
        }
        let letters = a[..a.len() - k].iter().chain(&b[k..]).cloned().collect();
        return Ok(LambdaWord::from_letters(u.rank, letters));
    }
    let c = com(&u.inverse(), v)?;
    Ok(c.rest_u.inverse().concat(&c.rest_v))
}

/// Left-to-right `∗`-product of a sequence of words.
pub fn product<'a>(rank: usize, words: impl IntoIterator<Item = &'a LambdaWord>) -> Result<LambdaWord> {
    let mut acc = LambdaWord::empty(rank);
    for w in words {
        acc = mult(&acc, w)?;
    }
    Ok(acc)
}

/// `v = c⁻¹ ∘ u ∘ c` with `u` cyclically reduced; returns `(c, u)`.
pub fn cyclic_decomposition(v: &LambdaWord) -> Result<(LambdaWord, LambdaWord)> {
    let t = com(v, &v.inverse())?.common;
    let two_t = t.len() + t.len();
    if !v.is_empty() && two_t >= *v.len() {
        return Err(Error::Undefined(format!("no cyclic decomposition for {v}")));
    }
    let (_, rest) = v.split_at(t.len())?;
    let core_len = rest.len() - t.len();
    let u = rest.prefix(&core_len)?;
    Ok((t.inverse(), u))
}

/// 1-based subword `w[from, to)`.
pub fn subword(w: &LambdaWord, from: &LambdaScalar, to: &LambdaScalar) -> Result<LambdaWord> {
    let one = LambdaScalar::one(w.rank);
    let end = w.len() + &one;
    if *from < one || from > to || *to > end {
        return Err(Error::OutOfRange(format!("subword [{from},{to}) of a word of length {}", w.len())));
    }
    let rest = w.suffix_from(&(from - &one))?;
    rest.prefix(&(to - from))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Periodicity {
    Unbounded,
    /// `w = u^k ∘ u1` with `k ≥ 2` and `u = u1 ∘ u2`.
    Bounded { k: usize, u1: LambdaWord },
    None,
}

/// Classify `w` as unbounded or bounded `u`-periodic.
pub fn periodicity(w: &LambdaWord, u: &LambdaWord) -> Result<Periodicity> {
    if u.is_empty() || !u.is_cyclically_reduced() {
        return Err(Error::Precondition("period must be a nonempty cyclically reduced word".into()));
    }
    let v = mult(&mult(&w.inverse(), u)?, w)?;
    if v.len() != u.len() || w.len() < u.len() {
        return Ok(Periodicity::None);
    }
    match w.height().cmp(&u.height()) {
        Ordering::Greater => {
            let uw = u.concat(w);
            if common_prefix_len(w, &uw) == *w.len() {
                Ok(Periodicity::Unbounded)
            } else {
                Ok(Periodicity::None)
            }
        }
        Ordering::Equal => {
            let mut rest = w.clone();
            let mut k = 0usize;
            while common_prefix_len(&rest, u) == *u.len() {
                rest = rest.suffix_from(u.len())?;
                k += 1;
            }
            if k >= 2 && common_prefix_len(&rest, u) == *rest.len() {
                Ok(Periodicity::Bounded { k, u1: rest })
            } else {
                Ok(Periodicity::None)
            }
        }
        Ordering::Less => Ok(Periodicity::None),
    }
}

/// `w^γ`. Finite bases raised to exponents of height `≥ 2` become power
/// blocks; a non-cyclically-reduced base `c⁻¹ w' c` yields `c⁻¹ w'^γ c`.
pub fn power(w: &LambdaWord, gamma: &LambdaScalar) -> Result<LambdaWord> {
    let rank = w.rank;
    if gamma.rank() != rank {
        return Err(Error::RankMismatch { left: rank, right: gamma.rank() });
    }
    if gamma.is_zero() || w.is_empty() {
        return Ok(LambdaWord::empty(rank));
    }
    let (base, gamma) = if gamma.is_negative() { (w.inverse(), -gamma) } else { (w.clone(), gamma.clone()) };
    if gamma.height().0 <= 1 {
        let k = gamma.as_usize().ok_or_else(|| Error::OutOfRange(format!("exponent {gamma}")))?;
        let mut acc = LambdaWord::empty(rank);
        for _ in 0..k {
            acc = mult(&acc, &base)?;
        }
        return Ok(acc);
    }
    let letters = base
        .finite_letters()
        .ok_or_else(|| Error::Undefined(format!("power of an infinite word {base}")))?;
    let letters = free_reduce(letters.iter().cloned());
    let n = letters.len();
    let mut i = 0;
    while 2 * i + 1 < n && letters[i].is_inverse_of(&letters[n - 1 - i]) {
        i += 1;
    }
    let core = &letters[i..n - i];
    let root = primitive_root(core).to_vec();
    let reps = BigInt::from(core.len() / root.len());
    let len = gamma.scale(&(reps * BigInt::from(root.len())));
    let mut b = Builder::new(rank);
    b.push_letters(letters[..i].to_vec());
    b.push(make_periodic(root, len));
    b.push_letters(letters[n - i..].to_vec());
    Ok(b.finish())
}

fn write_letters(f: &mut fmt::Formatter<'_>, ls: &[Letter]) -> fmt::Result {
    for (i, l) in ls.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{l}")?;
    }
    Ok(())
}

impl fmt::Display for LambdaWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.blocks.is_empty() {
            return write!(f, "1");
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            match b {
                Block::Finite(ls) => write_letters(f, ls)?,
                Block::Power { base, len } => {
                    let n = base.len();
                    let simple = n == 1 && !base[0].inverse;
                    if !simple {
                        write!(f, "(")?;
                        write_letters(f, base)?;
                        write!(f, ")")?;
                    } else {
                        write!(f, "{}", base[0])?;
                    }
                    match len.div_exact(n) {
                        Some(g) => write!(f, "^{g}")?,
                        None => write!(f, "@{len}")?,
                    }
                }
            }
        }
        Ok(())
    }
}

impl Serialize for LambdaWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Grammar: `word := atom*`, `atom := ident | ident^e | (word)^e | (word)@[vec] | 1`,
/// `e := -1 | int | [vec]`. Atoms are combined with `∗`, so the result is reduced.
struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    rank: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Parse(format!("{msg} at byte {} in `{}`", self.pos, String::from_utf8_lossy(self.src))))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn parse_all(mut self) -> Result<LambdaWord> {
        let w = self.parse_word()?;
        if self.peek().is_some() {
            return self.err("unexpected input");
        }
        Ok(w)
    }

    fn parse_word(&mut self) -> Result<LambdaWord> {
        let mut acc = LambdaWord::empty(self.rank);
        while let Some(c) = self.peek() {
            if c == b')' {
                break;
            }
            let atom = self.parse_atom()?;
            acc = mult(&acc, &atom)?;
        }
        Ok(acc)
    }

    fn parse_atom(&mut self) -> Result<LambdaWord> {
        let c = self.peek().expect("caller checked");
        let base = if c == b'(' {
            self.pos += 1;
            let w = self.parse_word()?;
            if self.peek() != Some(b')') {
                return self.err("expected `)`");
            }
            self.pos += 1;
            if self.src.get(self.pos) == Some(&b'@') {
                self.pos += 1;
                let len = self.parse_vector()?;
                let letters = w
                    .finite_letters()
                    .ok_or_else(|| Error::Parse("periodic base must be finite".into()))?
                    .to_vec();
                return LambdaWord::periodic(self.rank, letters, len);
            }
            w
        } else if c == b'1' && !self.src.get(self.pos + 1).is_some_and(|d| d.is_ascii_alphanumeric()) {
            self.pos += 1;
            LambdaWord::empty(self.rank)
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
            LambdaWord::letter(self.rank, name)
        } else {
            return self.err("expected a generator, `(` or `1`");
        };
        if self.src.get(self.pos) == Some(&b'^') {
            self.pos += 1;
            let e = self.parse_exponent()?;
            return power(&base, &e);
        }
        Ok(base)
    }

    fn parse_exponent(&mut self) -> Result<LambdaScalar> {
        if self.src.get(self.pos) == Some(&b'[') {
            return self.parse_vector();
        }
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match text.parse::<BigInt>() {
            Ok(k) => Ok(LambdaScalar::finite(self.rank, k)),
            Err(_) => self.err("expected exponent"),
        }
    }

    fn parse_vector(&mut self) -> Result<LambdaScalar> {
        let start = self.pos;
        match self.src[self.pos..].iter().position(|&b| b == b']') {
            Some(end) => {
                self.pos += end + 1;
                let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                LambdaScalar::parse_with_rank(text, self.rank)
            }
            None => self.err("unterminated vector"),
        }
    }
}

/// Convenience for signed exponents of finite words.
pub fn finite_power(w: &LambdaWord, k: i64) -> Result<LambdaWord> {
    power(w, &LambdaScalar::finite(w.rank, k))
}

impl LambdaWord {
    /// `true` when `self` is an initial segment of `other`.
    pub fn is_prefix_of(&self, other: &LambdaWord) -> bool {
        self.len <= other.len && common_prefix_len(self, other) == self.len
    }

    /// Number of letters when finite, as an integer.
    pub fn finite_len(&self) -> Option<usize> {
        self.len.as_usize()
    }

    pub fn is_positive_len(&self) -> bool {
        self.len.is_positive()
    }
}

/// `|w|` as a signed big integer when finite.
pub fn finite_length(w: &LambdaWord) -> Option<BigInt> {
    w.len.as_finite().cloned().filter(|k| !k.is_negative())
}

/// Unit used by tests and callers building finite lengths.
pub fn unit(rank: usize) -> LambdaScalar {
    LambdaScalar::finite(rank, BigInt::one())
}
