//! Right-lexicographically ordered `ℤⁿ` and its divisible hull `ℚⁿ`.
//!
//! Coordinate index 1 (stored at position 0) is the Archimedean-smallest
//! component, so finite integers embed as `(k, 0, …, 0)` and the highest
//! nonzero index decides comparisons.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of the minimal convex subgroup containing a value; `0` only for zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Height(pub usize);

/// An element of `ℤⁿ` under the right-lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LambdaScalar {
    coords: Vec<BigInt>,
}

fn right_lex<T: Ord + Zero>(a: &[T], b: &[T]) -> Ordering {
    for i in (0..a.len()).rev() {
        match a[i].cmp(&b[i]) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

impl LambdaScalar {
    pub fn new(coords: Vec<BigInt>) -> Self {
        assert!(!coords.is_empty(), "rank must be at least 1");
        LambdaScalar { coords }
    }

    pub fn from_i64s(coords: &[i64]) -> Self {
        Self::new(coords.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero(rank: usize) -> Self {
        Self::new(vec![BigInt::zero(); rank])
    }

    /// The finite integer `k` embedded as `(k, 0, …, 0)`.
    pub fn finite(rank: usize, k: impl Into<BigInt>) -> Self {
        let mut v = Self::zero(rank);
        v.coords[0] = k.into();
        v
    }

    /// The minimal positive element `(1, 0, …, 0)`.
    pub fn one(rank: usize) -> Self {
        Self::finite(rank, 1)
    }

    /// The unit vector at 1-based index `i`.
    pub fn basis(rank: usize, i: usize) -> Self {
        let mut v = Self::zero(rank);
        v.coords[i - 1] = BigInt::one();
        v
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.coords
    }

    /// Coordinate at 1-based index `i`.
    pub fn coord(&self, i: usize) -> &BigInt {
        &self.coords[i - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn is_positive(&self) -> bool {
        self.sign() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.sign() == Ordering::Less
    }

    pub fn sign(&self) -> Ordering {
        for c in self.coords.iter().rev() {
            if !c.is_zero() {
                return if c.is_positive() { Ordering::Greater } else { Ordering::Less };
            }
        }
        Ordering::Equal
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn height(&self) -> Height {
        Height(self.coords.iter().rposition(|c| !c.is_zero()).map_or(0, |i| i + 1))
    }

    /// Zero the coordinates `1..=k`, the image in `Λ / Λ_k`.
    pub fn project(&self, k: Height) -> Self {
        let mut out = self.clone();
        for c in out.coords.iter_mut().take(k.0) {
            *c = BigInt::zero();
        }
        out
    }

    pub fn halve(&self) -> LambdaRational {
        LambdaRational::from(self).scale(&BigRational::new(BigInt::one(), BigInt::from(2)))
    }

    /// `Some(k)` when the value is a finite integer `(k, 0, …, 0)`.
    pub fn as_finite(&self) -> Option<&BigInt> {
        if self.height().0 <= 1 {
            Some(&self.coords[0])
        } else {
            None
        }
    }

    /// Finite value as `usize`, if it is a non-negative machine-sized integer.
    pub fn as_usize(&self) -> Option<usize> {
        self.as_finite().and_then(|k| k.to_usize())
    }

    /// Euclidean residue of the lowest coordinate modulo `n`.
    pub fn low_mod(&self, n: usize) -> usize {
        self.coords[0].mod_floor(&BigInt::from(n)).to_usize().expect("residue fits")
    }

    /// Exact division by a positive integer, if every coordinate is divisible.
    pub fn div_exact(&self, n: usize) -> Option<Self> {
        let d = BigInt::from(n);
        let mut out = Vec::with_capacity(self.rank());
        for c in &self.coords {
            let (q, r) = c.div_rem(&d);
            if !r.is_zero() {
                return None;
            }
            out.push(q);
        }
        Some(Self::new(out))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        check_rank(self.rank(), other.rank())?;
        Ok(Self::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect()))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        check_rank(self.rank(), other.rank())?;
        Ok(Self::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect()))
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Self::new(self.coords.iter().map(|c| c * k).collect())
    }

    pub fn parse_with_rank(s: &str, rank: usize) -> Result<Self> {
        let v: Self = s.parse()?;
        check_rank(rank, v.rank())?;
        Ok(v)
    }
}

fn check_rank(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::RankMismatch { left: a, right: b })
    }
}

/// Right-lexicographic comparison of two values of equal rank.
pub fn compare(a: &LambdaScalar, b: &LambdaScalar) -> Result<Ordering> {
    check_rank(a.rank(), b.rank())?;
    Ok(right_lex(&a.coords, &b.coords))
}

pub fn height(a: &LambdaScalar) -> Height {
    a.height()
}

pub fn project(a: &LambdaScalar, k: Height) -> LambdaScalar {
    a.project(k)
}

pub fn halve(a: &LambdaScalar) -> LambdaRational {
    a.halve()
}

/// Values of different rank are ordered by rank first so that `Ord` stays
/// total and agrees with `Eq`; use [`compare`] to reject such pairs.
impl Ord for LambdaScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank()).then_with(|| right_lex(&self.coords, &other.coords))
    }
}

impl PartialOrd for LambdaScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl $tr<&LambdaScalar> for &LambdaScalar {
            type Output = LambdaScalar;
            fn $m(self, rhs: &LambdaScalar) -> LambdaScalar {
                self.$checked(rhs).expect("rank mismatch in Λ arithmetic")
            }
        }
        impl $tr<LambdaScalar> for LambdaScalar {
            type Output = LambdaScalar;
            fn $m(self, rhs: LambdaScalar) -> LambdaScalar {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&LambdaScalar> for LambdaScalar {
            type Output = LambdaScalar;
            fn $m(self, rhs: &LambdaScalar) -> LambdaScalar {
                (&self).$m(rhs)
            }
        }
    };
}
binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);

impl Neg for &LambdaScalar {
    type Output = LambdaScalar;
    fn neg(self) -> LambdaScalar {
        LambdaScalar::new(self.coords.iter().map(|c| -c).collect())
    }
}

impl Neg for LambdaScalar {
    type Output = LambdaScalar;
    fn neg(self) -> LambdaScalar {
        -&self
    }
}

impl Mul<&LambdaScalar> for &BigInt {
    type Output = LambdaScalar;
    fn mul(self, rhs: &LambdaScalar) -> LambdaScalar {
        rhs.scale(self)
    }
}

fn write_vec<T: fmt::Display>(f: &mut fmt::Formatter<'_>, xs: &[T]) -> fmt::Result {
    write!(f, "[")?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, "]")
}

impl fmt::Display for LambdaScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_vec(f, &self.coords)
    }
}

/// Parse the body of a vector literal `[a1,...,an]`.
fn split_vector(s: &str) -> Result<Vec<&str>> {
    let t = s.trim();
    let inner = t
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| Error::Parse(format!("expected vector literal [a1,...,an], got `{t}`")))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Parse(format!("empty coordinate in `{t}`")));
    }
    Ok(parts)
}

impl FromStr for LambdaScalar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let coords = split_vector(s)?
            .into_iter()
            .map(|p| p.parse::<BigInt>().map_err(|_| Error::Parse(format!("bad integer `{p}`"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(coords))
    }
}

impl Serialize for LambdaScalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for LambdaScalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An element of `ℚⁿ`, the divisible hull of `ℤⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LambdaRational {
    coords: Vec<BigRational>,
}

impl LambdaRational {
    pub fn new(coords: Vec<BigRational>) -> Self {
        assert!(!coords.is_empty(), "rank must be at least 1");
        LambdaRational { coords }
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        Self::new(self.coords.iter().map(|c| c * k).collect())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        check_rank(self.rank(), other.rank())?;
        Ok(Self::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect()))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        check_rank(self.rank(), other.rank())?;
        Ok(Self::new(self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect()))
    }

    pub fn halve(&self) -> Self {
        self.scale(&BigRational::new(BigInt::one(), BigInt::from(2)))
    }

    /// The value as an element of `ℤⁿ` when every coordinate is integral.
    pub fn to_integral(&self) -> Option<LambdaScalar> {
        self.coords
            .iter()
            .map(|c| if c.is_integer() { Some(c.to_integer()) } else { None })
            .collect::<Option<Vec<_>>>()
            .map(LambdaScalar::new)
    }

    pub fn is_integral(&self) -> bool {
        self.coords.iter().all(|c| c.is_integer())
    }

    pub fn is_negative(&self) -> bool {
        self.coords.iter().rev().find(|c| !c.is_zero()).is_some_and(|c| c.is_negative())
    }
}

impl From<&LambdaScalar> for LambdaRational {
    fn from(a: &LambdaScalar) -> Self {
        Self::new(a.coords.iter().map(|c| BigRational::from_integer(c.clone())).collect())
    }
}

impl From<LambdaScalar> for LambdaRational {
    fn from(a: LambdaScalar) -> Self {
        Self::from(&a)
    }
}

impl Ord for LambdaRational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank()).then_with(|| right_lex(&self.coords, &other.coords))
    }
}

impl PartialOrd for LambdaRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LambdaRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_vec(f, &self.coords)
    }
}

impl FromStr for LambdaRational {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let coords = split_vector(s)?
            .into_iter()
            .map(|p| p.parse::<BigRational>().map_err(|_| Error::Parse(format!("bad rational `{p}`"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(coords))
    }
}

impl Serialize for LambdaRational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(c: &[i64]) -> LambdaScalar {
        LambdaScalar::from_i64s(c)
    }

    #[test]
    fn compare_examples() {
        assert_eq!(compare(&v(&[1, 0]), &v(&[0, 1])).unwrap(), Ordering::Less);
        assert_eq!(compare(&v(&[5, 0]), &v(&[5, 0])).unwrap(), Ordering::Equal);
        assert_eq!(compare(&v(&[-3, 2]), &v(&[100, 1])).unwrap(), Ordering::Greater);
        assert!(matches!(compare(&v(&[1]), &v(&[1, 0])), Err(Error::RankMismatch { .. })));
    }

    #[test]
    fn height_examples() {
        assert_eq!(v(&[0, 0]).height(), Height(0));
        assert_eq!(v(&[7, 0]).height(), Height(1));
        assert_eq!(v(&[3, -2]).height(), Height(2));
    }

    #[test]
    fn project_examples() {
        assert_eq!(v(&[3, 5]).project(Height(1)), v(&[0, 5]));
        assert_eq!(v(&[3, 5]).project(Height(0)), v(&[3, 5]));
        assert_eq!(v(&[3, 5]).project(Height(2)), v(&[0, 0]));
    }

    #[test]
    fn halve_examples() {
        assert_eq!(v(&[2, 4]).halve().to_string(), "[1,2]");
        assert_eq!(v(&[1, 0]).halve().to_string(), "[1/2,0]");
        assert_eq!(v(&[0, 0]).halve().to_string(), "[0,0]");
    }

    #[test]
    fn literal_round_trip() {
        let a: LambdaScalar = "[ -3, 2 ]".parse().unwrap();
        assert_eq!(a, v(&[-3, 2]));
        assert_eq!(a.to_string(), "[-3,2]");
        assert!("[1,]".parse::<LambdaScalar>().is_err());
        assert!("1,2".parse::<LambdaScalar>().is_err());
        assert!(LambdaScalar::parse_with_rank("[1,2,3]", 2).is_err());
    }

    #[test]
    fn exhaustive_small_order_laws() {
        let range = -2..=2;
        let mut all = Vec::new();
        for a in range.clone() {
            for b in range.clone() {
                all.push(v(&[a, b]));
            }
        }
        let zero = LambdaScalar::zero(2);
        for a in &all {
            for b in &all {
                let ab = compare(a, b).unwrap();
                assert_eq!(ab.reverse(), compare(b, a).unwrap());
                assert_eq!(a + b >= *a, *b >= zero);
                for c in &all {
                    if a <= b && b <= c {
                        assert!(a <= c);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn height_of_sum(a in prop::collection::vec(-3i64..3, 3), b in prop::collection::vec(-3i64..3, 3)) {
            let (a, b) = (v(&a), v(&b));
            let s = &a + &b;
            prop_assert!(s.height() <= a.height().max(b.height()));
            if a.height() != b.height() {
                prop_assert_eq!(s.height(), a.height().max(b.height()));
            }
        }

        #[test]
        fn project_idempotent_and_monotone(a in prop::collection::vec(-5i64..5, 3), b in prop::collection::vec(-5i64..5, 3), k in 0usize..=3) {
            let (a, b) = (v(&a), v(&b));
            let k = Height(k);
            prop_assert_eq!(a.project(k).project(k), a.project(k));
            if a.height() > k && b.height() > k && a.project(k) != b.project(k) {
                prop_assert_eq!(a.cmp(&b), a.project(k).cmp(&b.project(k)));
            }
        }

        #[test]
        fn halve_doubles_back(a in prop::collection::vec(-50i64..50, 2)) {
            let a = v(&a);
            let h = a.halve();
            prop_assert_eq!(h.checked_add(&h).unwrap().to_integral().unwrap(), a);
        }
    }
}
