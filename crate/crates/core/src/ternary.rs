//! Exact base-3 arithmetic: signed block integers, ternary rationals, block
//! codes and digit-pattern enumeration.
//!
//! Digits are stored least-significant first (position 0 is the `3^0` digit).
//! Display is most-significant first so `B_3 = {000, 002, 021, 110, 112}` reads
//! the way such sets are usually written down.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The radix. Kept as a named constant; nothing else in the crate is generic
/// over it yet.
pub const BASE: i64 = 3;

/// Largest block length whose values fit an `i64` (`3^39 < 2^63`).
pub const MAX_BLOCK_LEN: u32 = 39;

/// Default cap on the number of elements an enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// `3^k` as an `i64`. Panics when `k > MAX_BLOCK_LEN`.
pub fn pow3(k: u32) -> i64 {
    assert!(k <= MAX_BLOCK_LEN, "3^{k} does not fit in i64");
    BASE.pow(k)
}

pub fn pow3_big(k: u32) -> BigInt {
    num_traits::pow(BigInt::from(BASE), k as usize)
}

fn check_block_len(k: u32) -> Result<()> {
    if k > MAX_BLOCK_LEN {
        return Err(Error::BlockTooLong { k, max: MAX_BLOCK_LEN });
    }
    Ok(())
}

/// A signed integer read as a block of exactly `k` ternary digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TernaryInt {
    value: i64,
    k: u32,
}

impl TernaryInt {
    pub fn new(value: i64, k: u32) -> Result<Self> {
        check_block_len(k)?;
        if value.unsigned_abs() >= pow3(k) as u64 {
            return Err(Error::OutOfBlockRange { value, k });
        }
        Ok(Self { value, k })
    }

    /// Parses a most-significant-first digit string such as `"021"`.
    pub fn parse(digits: &str) -> Result<Self> {
        let k = digits.len() as u32;
        check_block_len(k)?;
        let mut value = 0i64;
        for ch in digits.chars() {
            let d = ch
                .to_digit(3)
                .ok_or_else(|| Error::InvalidDigits(digits.to_string()))?;
            value = value * BASE + d as i64;
        }
        Self::new(value, k)
    }

    pub fn value(self) -> i64 {
        self.value
    }

    pub fn k(self) -> u32 {
        self.k
    }

    pub fn is_negative(self) -> bool {
        self.value < 0
    }

    /// Digits of `|value|`, least significant first, exactly `k` of them.
    pub fn digits(self) -> Vec<u8> {
        digits_lsf(self.value.unsigned_abs(), self.k)
    }

    /// Digits of `|value|`, most significant first (`7` at `k = 3` gives `[0, 2, 1]`).
    pub fn digits_msf(self) -> Vec<u8> {
        let mut d = self.digits();
        d.reverse();
        d
    }
}

impl fmt::Display for TernaryInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.value < 0 {
            write!(f, "-")?;
        }
        for d in self.digits_msf() {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

fn digits_lsf(mut v: u64, k: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(k as usize);
    for _ in 0..k {
        out.push((v % 3) as u8);
        v /= 3;
    }
    out
}

/// Inverse of [`TernaryInt::digits`]: `Σ d_j 3^j` over least-significant-first digits.
pub fn value_of(digits: &[u8]) -> i64 {
    digits.iter().rev().fold(0i64, |acc, &d| acc * BASE + d as i64)
}

/// An exact number `numerator / 3^depth` in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TernaryRational {
    numerator: BigInt,
    depth: u32,
}

impl TernaryRational {
    pub fn new(numerator: impl Into<BigInt>, depth: u32) -> Self {
        let mut numerator = numerator.into();
        let mut depth = depth;
        let three = BigInt::from(BASE);
        while depth > 0 && !numerator.is_zero() && numerator.is_multiple_of(&three) {
            numerator /= &three;
            depth -= 1;
        }
        if numerator.is_zero() {
            depth = 0;
        }
        Self { numerator, depth }
    }

    pub fn zero() -> Self {
        Self::new(0, 0)
    }

    pub fn integer(v: i64) -> Self {
        Self::new(v, 0)
    }

    /// Builds `0.d_1 d_2 ... d_n` (plus an integer part) from fractional digits.
    pub fn from_digits(integer_part: i64, fractional: &[u8]) -> Self {
        let mut num = BigInt::from(integer_part);
        for &d in fractional {
            num = num * BASE + d as i64;
        }
        Self::new(num, fractional.len() as u32)
    }

    /// Parses `"0.020"`, `"1.2"`, `"2"`: a ternary numeral with an optional point.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidDigits(s.to_string());
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_s, frac_s) = body.split_once('.').unwrap_or((body, ""));
        if int_s.is_empty() && frac_s.is_empty() {
            return Err(bad());
        }
        let mut num = BigInt::zero();
        for ch in int_s.chars().chain(frac_s.chars()) {
            let d = ch.to_digit(3).ok_or_else(bad)?;
            num = num * BASE + d;
        }
        if neg {
            num = -num;
        }
        Ok(Self::new(num, frac_s.len() as u32))
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn is_negative(&self) -> bool {
        self.numerator.is_negative()
    }

    /// Numerator after rescaling to denominator `3^depth`; `depth` must be at
    /// least the canonical depth.
    pub fn scaled_numerator(&self, depth: u32) -> BigInt {
        assert!(depth >= self.depth, "cannot rescale to a shallower depth");
        &self.numerator * pow3_big(depth - self.depth)
    }

    pub fn floor(&self) -> BigInt {
        self.numerator.div_floor(&pow3_big(self.depth))
    }

    /// The `p`-th fractional digit (`p >= 1`) of the floor-based expansion
    /// `x = ⌊x⌋ + Σ x_p 3^{-p}`. Terminating expansions are used, so digits past
    /// the depth are 0.
    pub fn digit(&self, p: u32) -> u8 {
        assert!(p >= 1, "fractional digit positions start at 1");
        if p > self.depth {
            return 0;
        }
        let m = self.numerator.mod_floor(&pow3_big(self.depth));
        let shifted = m / pow3_big(self.depth - p);
        (shifted % BASE).to_u8().unwrap_or(0)
    }

    /// The first `n` fractional digits, truncating anything deeper.
    pub fn fractional_digits(&self, n: u32) -> Vec<u8> {
        (1..=n).map(|p| self.digit(p)).collect()
    }

    /// Rounds toward negative infinity to `n` fractional digits.
    pub fn truncate(&self, n: u32) -> Self {
        if n >= self.depth {
            return self.clone();
        }
        let q = self.numerator.div_floor(&pow3_big(self.depth - n));
        Self::new(q, n)
    }

    pub fn to_f64(&self) -> f64 {
        let num = self.numerator.to_f64().unwrap_or(f64::NAN);
        num / 3f64.powi(self.depth as i32)
    }

    pub fn to_ratio(&self) -> num_rational::BigRational {
        num_rational::BigRational::new(self.numerator.clone(), pow3_big(self.depth))
    }

    /// Renders as a ternary numeral with exactly `digits` fractional digits
    /// (at least the canonical depth is always shown).
    pub fn to_ternary_string(&self, digits: u32) -> String {
        let digits = digits.max(self.depth);
        let int = self.floor();
        let mut s = String::new();
        if int.is_negative() {
            // Only non-negative values are rendered positionally.
            return format!("{}/3^{}", self.numerator, self.depth);
        }
        s.push_str(&int.to_str_radix(3));
        if digits > 0 {
            s.push('.');
            for d in self.fractional_digits(digits) {
                s.push(char::from(b'0' + d));
            }
        }
        s
    }
}

impl fmt::Display for TernaryRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_ternary_string(self.depth))
    }
}

impl Ord for TernaryRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self.depth.max(other.depth);
        self.scaled_numerator(d).cmp(&other.scaled_numerator(d))
    }
}

impl PartialOrd for TernaryRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl std::ops::Add for &TernaryRational {
    type Output = TernaryRational;
    fn add(self, rhs: Self) -> TernaryRational {
        let d = self.depth.max(rhs.depth);
        TernaryRational::new(self.scaled_numerator(d) + rhs.scaled_numerator(d), d)
    }
}

impl std::ops::Sub for &TernaryRational {
    type Output = TernaryRational;
    fn sub(self, rhs: Self) -> TernaryRational {
        let d = self.depth.max(rhs.depth);
        TernaryRational::new(self.scaled_numerator(d) - rhs.scaled_numerator(d), d)
    }
}

impl std::ops::Mul<i64> for &TernaryRational {
    type Output = TernaryRational;
    fn mul(self, rhs: i64) -> TernaryRational {
        TernaryRational::new(&self.numerator * rhs, self.depth)
    }
}

/// `Σ_i blocks[i] / 3^{offsets[i]}`, the value of a concatenation of integer
/// blocks whose last digit sits at `offsets[i]`.
pub fn sum_blocks(blocks: &[(i64, u32)]) -> TernaryRational {
    let depth = blocks.iter().map(|&(_, m)| m).max().unwrap_or(0);
    let mut num = BigInt::zero();
    for &(v, m) in blocks {
        num += BigInt::from(v) * pow3_big(depth - m);
    }
    TernaryRational::new(num, depth)
}

/// A finite set of `k`-digit block values, sorted and duplicate free.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockCode {
    k: u32,
    values: Vec<i64>,
}

impl BlockCode {
    /// Sorts and deduplicates; every value must lie in `(-3^k, 3^k)`.
    pub fn new(k: u32, mut values: Vec<i64>) -> Result<Self> {
        check_block_len(k)?;
        let bound = pow3(k);
        if let Some(&v) = values.iter().find(|v| v.abs() >= bound) {
            return Err(Error::OutOfBlockRange { value: v, k });
        }
        values.sort_unstable();
        values.dedup();
        Ok(Self { k, values })
    }

    /// Parses most-significant-first digit strings, all of the same length.
    pub fn parse<S: AsRef<str>>(blocks: &[S]) -> Result<Self> {
        let mut k = None;
        let mut values = Vec::with_capacity(blocks.len());
        for b in blocks {
            let t = TernaryInt::parse(b.as_ref())?;
            match k {
                None => k = Some(t.k()),
                Some(k0) if k0 != t.k() => {
                    return Err(Error::DimensionMismatch { left: k0, right: t.k() })
                }
                _ => {}
            }
            values.push(t.value());
        }
        Self::new(k.unwrap_or(0), values)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, v: i64) -> bool {
        self.values.binary_search(&v).is_ok()
    }

    pub fn min(&self) -> Option<i64> {
        self.values.first().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = TernaryInt> + '_ {
        self.values.iter().map(move |&v| TernaryInt { value: v, k: self.k })
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.first().is_none_or(|&v| v >= 0)
    }

    pub fn with_value(&self, v: i64) -> Result<Self> {
        let mut values = self.values.clone();
        values.push(v);
        Self::new(self.k, values)
    }

    pub fn without_value(&self, v: i64) -> Self {
        Self {
            k: self.k,
            values: self.values.iter().copied().filter(|&x| x != v).collect(),
        }
    }

    /// Most-significant-first digit strings.
    pub fn to_strings(&self) -> Vec<String> {
        self.iter().map(|t| t.to_string()).collect()
    }
}

impl fmt::Display for BlockCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.to_strings().join(", "))
    }
}

/// Per-position allowed digits. `allowed[j]` constrains the `3^j` digit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternSet {
    allowed: Vec<Vec<u8>>,
}

impl PatternSet {
    pub fn new(allowed: Vec<Vec<u8>>) -> Result<Self> {
        check_block_len(allowed.len() as u32)?;
        let mut cleaned = Vec::with_capacity(allowed.len());
        for mut digits in allowed {
            digits.sort_unstable();
            digits.dedup();
            if digits.is_empty() || digits.iter().any(|&d| d > 2) {
                return Err(Error::InvalidPattern(format!("{digits:?}")));
            }
            cleaned.push(digits);
        }
        Ok(Self { allowed: cleaned })
    }

    /// `C_k`: digits 0 and 1 at every position.
    pub fn half_cantor(k: u32) -> Result<Self> {
        Self::new(vec![vec![0, 1]; k as usize])
    }

    /// Every digit allowed; enumerates to the full interval `[0, 3^k)`.
    pub fn full(k: u32) -> Result<Self> {
        Self::new(vec![vec![0, 1, 2]; k as usize])
    }

    /// Digits 0 and 1 where `free(j)` holds, 0 elsewhere.
    pub fn binary_where(k: u32, free: impl Fn(u32) -> bool) -> Result<Self> {
        Self::new(
            (0..k)
                .map(|j| if free(j) { vec![0, 1] } else { vec![0] })
                .collect(),
        )
    }

    pub fn k(&self) -> u32 {
        self.allowed.len() as u32
    }

    pub fn allowed(&self) -> &[Vec<u8>] {
        &self.allowed
    }

    pub fn size(&self) -> u128 {
        self.allowed.iter().map(|a| a.len() as u128).product()
    }

    pub fn is_half_cantor(&self) -> bool {
        self.allowed.iter().all(|a| a == &[0, 1])
    }

    /// Digit string per position, most significant first, e.g. `"{01}{0}{01}"`.
    pub fn describe(&self) -> String {
        self.allowed
            .iter()
            .rev()
            .map(|a| {
                let s: String = a.iter().map(|d| char::from(b'0' + d)).collect();
                if a.len() == 1 {
                    s
                } else {
                    format!("{{{s}}}")
                }
            })
            .collect()
    }
}

/// Every value `Σ d_j 3^j` with `d_j ∈ allowed_j`, sorted ascending.
pub fn enumerate_pattern(p: &PatternSet) -> Result<BlockCode> {
    enumerate_pattern_capped(p, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_pattern_capped(p: &PatternSet, cap: u64) -> Result<BlockCode> {
    let size = p.size();
    if size > cap as u128 {
        return Err(Error::EnumerationCap { size, cap });
    }
    let mut values = vec![0i64];
    // Most significant position first keeps the output sorted without a sort.
    for j in (0..p.k()).rev() {
        let weight = pow3(j);
        let mut next = Vec::with_capacity(values.len() * p.allowed[j as usize].len());
        for &v in &values {
            for &d in &p.allowed[j as usize] {
                next.push(v + d as i64 * weight);
            }
        }
        values = next;
    }
    Ok(BlockCode { k: p.k(), values })
}

/// `{x + y}` over both codes. The result has block length `k + 1` since sums
/// can reach `2·(3^k − 1)`.
pub fn sumset(a: &BlockCode, b: &BlockCode) -> Result<BlockCode> {
    if a.k != b.k {
        return Err(Error::DimensionMismatch { left: a.k, right: b.k });
    }
    let mut values: Vec<i64> = a
        .values
        .iter()
        .flat_map(|&x| b.values.iter().map(move |&y| x + y))
        .collect();
    values.sort_unstable();
    values.dedup();
    BlockCode::new(a.k + 1, values)
}

/// Concatenation `{u·3^{b.k} + v}`; block lengths add.
pub fn concat_codes(a: &BlockCode, b: &BlockCode) -> Result<BlockCode> {
    if !a.is_nonnegative() || !b.is_nonnegative() {
        return Err(Error::NegativeConcat);
    }
    let k = a.k + b.k;
    check_block_len(k)?;
    let shift = pow3(b.k);
    let values = a
        .values
        .iter()
        .flat_map(|&u| b.values.iter().map(move |&v| u * shift + v))
        .collect();
    BlockCode::new(k, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn digits_of_seed_blocks() {
        assert_eq!(TernaryInt::new(7, 3).unwrap().digits_msf(), vec![0, 2, 1]);
        assert_eq!(TernaryInt::new(0, 3).unwrap().digits_msf(), vec![0, 0, 0]);
        assert_eq!(TernaryInt::new(14, 3).unwrap().digits_msf(), vec![1, 1, 2]);
        assert_eq!(TernaryInt::new(7, 3).unwrap().to_string(), "021");
        assert_eq!(TernaryInt::new(-7, 3).unwrap().to_string(), "-021");
    }

    #[test]
    fn block_range_is_enforced() {
        assert!(TernaryInt::new(27, 3).is_err());
        assert!(TernaryInt::new(-27, 3).is_err());
        assert!(TernaryInt::new(26, 3).is_ok());
        assert!(BlockCode::new(2, vec![0, 9]).is_err());
        assert!(TernaryInt::parse("0a1").is_err());
    }

    #[test]
    fn enumerate_half_cantor_k3() {
        let c3 = enumerate_pattern(&PatternSet::half_cantor(3).unwrap()).unwrap();
        assert_eq!(c3.values(), &[0, 1, 3, 4, 9, 10, 12, 13]);
        let strs = ["000", "001", "010", "011", "100", "101", "110", "111"];
        assert_eq!(c3, BlockCode::parse(&strs).unwrap());
    }

    #[test]
    fn enumerate_singleton_and_sparse() {
        let p = PatternSet::new(vec![vec![0]; 2]).unwrap();
        assert_eq!(enumerate_pattern(&p).unwrap().values(), &[0]);
        let p = PatternSet::binary_where(4, |j| j == 0 || j == 2).unwrap();
        // Direct oracle: all sums over the free positions.
        let mut oracle = vec![];
        for d0 in 0..2 {
            for d2 in 0..2 {
                oracle.push(d0 + 9 * d2);
            }
        }
        oracle.sort();
        assert_eq!(enumerate_pattern(&p).unwrap().values(), oracle.as_slice());
    }

    #[test]
    fn enumeration_cap() {
        let p = PatternSet::full(10).unwrap();
        assert!(matches!(
            enumerate_pattern_capped(&p, 1000),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn sumset_examples() {
        let a = BlockCode::new(1, vec![0, 1]).unwrap();
        let z = BlockCode::new(1, vec![0]).unwrap();
        assert_eq!(sumset(&a, &z).unwrap().values(), &[0, 1]);
        let e = BlockCode::new(1, vec![0, 2]).unwrap();
        assert_eq!(sumset(&e, &e).unwrap().values(), &[0, 2, 4]);
        let c2 = enumerate_pattern(&PatternSet::half_cantor(2).unwrap()).unwrap();
        let b2 = BlockCode::parse(&["00", "02", "11"]).unwrap();
        let s = sumset(&c2, &b2).unwrap();
        assert!((0..9).all(|v| s.contains(v)));
        assert!(sumset(&c2, &a).is_err());
    }

    #[test]
    fn concat_examples() {
        let b2 = BlockCode::parse(&["00", "02", "11"]).unwrap();
        let b4 = BlockCode::parse(&[
            "0000", "0002", "0011", "0200", "0202", "0211", "1100", "1102", "1111",
        ])
        .unwrap();
        assert_eq!(concat_codes(&b2, &b2).unwrap(), b4);
        let b3 = BlockCode::parse(&["000", "002", "021", "110", "112"]).unwrap();
        let p = concat_codes(&b2, &b3).unwrap();
        assert_eq!((p.k(), p.len()), (5, 15));
        let z = BlockCode::new(2, vec![0]).unwrap();
        assert_eq!(concat_codes(&z, &z).unwrap(), BlockCode::new(4, vec![0]).unwrap());
        let neg = BlockCode::new(1, vec![-1, 0]).unwrap();
        assert!(matches!(concat_codes(&neg, &z), Err(Error::NegativeConcat)));
    }

    #[test]
    fn rational_canonical_form() {
        let a = TernaryRational::new(9, 3);
        assert_eq!((a.numerator().clone(), a.depth()), (BigInt::from(1), 1));
        assert_eq!(TernaryRational::new(0, 5), TernaryRational::zero());
        let x = TernaryRational::parse("0.020").unwrap();
        assert_eq!(x, TernaryRational::new(2, 2));
        assert_eq!(x.fractional_digits(3), vec![0, 2, 0]);
        assert_eq!(x.to_ternary_string(3), "0.020");
        let two = TernaryRational::parse("2").unwrap();
        assert_eq!(two, TernaryRational::integer(2));
        assert_eq!(&two - &x, TernaryRational::parse("1.21").unwrap());
    }

    #[test]
    fn rational_digits_and_truncate() {
        let x = TernaryRational::parse("1.1021").unwrap();
        assert_eq!(x.floor(), BigInt::from(1));
        assert_eq!(x.fractional_digits(6), vec![1, 0, 2, 1, 0, 0]);
        assert_eq!(x.truncate(2), TernaryRational::parse("1.10").unwrap());
        assert!(TernaryRational::parse("0.3").is_err());
    }

    proptest! {
        #[test]
        fn digits_round_trip(k in 1u32..20, raw in any::<i64>()) {
            let bound = pow3(k);
            let v = raw.rem_euclid(2 * bound - 1) - (bound - 1);
            let t = TernaryInt::new(v, k).unwrap();
            let d = t.digits();
            prop_assert_eq!(d.len(), k as usize);
            prop_assert_eq!(value_of(&d), v.abs());
        }

        #[test]
        fn sumset_commutes(xs in proptest::collection::vec(0i64..81, 1..12),
                           ys in proptest::collection::vec(0i64..81, 1..12)) {
            let a = BlockCode::new(4, xs).unwrap();
            let b = BlockCode::new(4, ys).unwrap();
            let ab = sumset(&a, &b).unwrap();
            prop_assert_eq!(&ab, &sumset(&b, &a).unwrap());
            prop_assert!(ab.len() <= a.len() * b.len());
        }

        #[test]
        fn pattern_size_matches(allowed in proptest::collection::vec(
            proptest::sample::subsequence(vec![0u8, 1, 2], 1..=3), 1..8)) {
            let p = PatternSet::new(allowed).unwrap();
            let code = enumerate_pattern(&p).unwrap();
            prop_assert_eq!(code.len() as u128, p.size());
        }

        #[test]
        fn rational_digits_reconstruct(digits in proptest::collection::vec(0u8..3, 0..40)) {
            let x = TernaryRational::from_digits(0, &digits);
            let back = TernaryRational::from_digits(0, &x.fractional_digits(digits.len() as u32));
            prop_assert_eq!(x, back);
        }
    }
}
