//! The density set `A = {⌊y/D⌋ : y ≥ 1}`, its complement, and the rational
//! `(r, s)` description that reproduces `A[n]`.
//!
//! For rational `α`, `D = (1 − α)/log₃2` is irrational, so every floor is
//! decided on a rigorous enclosure of `log₃2` whose precision doubles until
//! both ends of the interval agree.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Starting precision (bits) for floor decisions.
pub const DEFAULT_START_BITS: u32 = 128;
/// Precision at which escalation gives up.
pub const DEFAULT_PRECISION_CAP: u32 = 1 << 14;

/// `log 2 / log 3`, the dimension of the Cantor set.
pub fn cantor_dimension() -> f64 {
    2f64.ln() / 3f64.ln()
}

/// `2^w · atanh(1/m)` enclosed as `[lo, hi]`.
fn atanh_inv_scaled(m: u32, w: u32) -> (BigInt, BigInt) {
    let one = BigInt::one() << w as usize;
    let m2 = BigInt::from(m) * m;
    let mut power = BigInt::from(m); // m^{2k+1}
    let mut sum = BigInt::zero();
    let mut terms = 0u32;
    let mut k = 0u32;
    loop {
        let term = &one / (&power * (2 * k + 1));
        if term.is_zero() {
            break;
        }
        sum += term;
        terms += 1;
        power *= &m2;
        k += 1;
    }
    // Each floored term loses < 1; the dropped tail is < 4/3 for m ≥ 2.
    let hi = &sum + terms + 2;
    (sum, hi)
}

/// `2^bits · log₃2` enclosed as `[lo, hi]` with `hi − lo` a few units.
pub fn log3_of_2_scaled(bits: u32) -> (BigInt, BigInt) {
    static CACHE: OnceLock<Mutex<HashMap<u32, (BigInt, BigInt)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.lock().unwrap().get(&bits) {
        return v.clone();
    }
    let w = bits + 16;
    // ln 2 = 2·atanh(1/3), ln 3 = 2·atanh(1/2); the factors of 2 cancel.
    let (l2_lo, l2_hi) = atanh_inv_scaled(3, w);
    let (l3_lo, l3_hi) = atanh_inv_scaled(2, w);
    let scale = BigInt::one() << bits as usize;
    let lo = (&l2_lo * &scale).div_floor(&l3_hi);
    let hi = (&l2_hi * &scale).div_ceil(&l3_lo);
    cache.lock().unwrap().insert(bits, (lo.clone(), hi.clone()));
    (lo, hi)
}

/// A positive real of the form `q`, `q·log₃2` or `q/log₃2` with `q` rational.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scalar {
    Rational(BigRational),
    TimesLog3Of2(BigRational),
    OverLog3Of2(BigRational),
}

impl Scalar {
    pub fn to_f64(&self) -> f64 {
        let l = cantor_dimension();
        match self {
            Self::Rational(q) => ratio_f64(q),
            Self::TimesLog3Of2(q) => ratio_f64(q) * l,
            Self::OverLog3Of2(q) => ratio_f64(q) / l,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Self::Rational(q) => Some(q),
            _ => None,
        }
    }

    /// `⌊y · self⌋` for `y ≥ 0`, exact.
    pub fn floor_mul(&self, y: &BigInt, start_bits: u32, cap_bits: u32) -> Result<BigInt> {
        if y.is_zero() {
            return Ok(BigInt::zero());
        }
        let (q, over) = match self {
            Self::Rational(q) => return Ok((y * q.numer()).div_floor(q.denom())),
            Self::TimesLog3Of2(q) => (q, false),
            Self::OverLog3Of2(q) => (q, true),
        };
        let mut bits = start_bits.max(32);
        loop {
            let (lo, hi) = log3_of_2_scaled(bits);
            let num = y * q.numer();
            let (f_lo, f_hi) = if over {
                // y·q/L ∈ [y·q·2^b / hi, y·q·2^b / lo]
                let n = &num << bits as usize;
                (
                    n.div_floor(&(q.denom() * &hi)),
                    n.div_floor(&(q.denom() * &lo)),
                )
            } else {
                let d = q.denom() << bits as usize;
                ((&num * &lo).div_floor(&d), (&num * &hi).div_floor(&d))
            };
            if f_lo == f_hi {
                return Ok(f_lo);
            }
            if bits >= cap_bits {
                return Err(Error::PrecisionCap {
                    cap_bits,
                    what: format!("floor of {y}·{self:?}"),
                });
            }
            bits = (bits * 2).min(cap_bits);
        }
    }
}

fn ratio_f64(q: &BigRational) -> f64 {
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

/// Parses a decimal literal (`"0.8"`, `"3/4"`, `"1"`) into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidInput(format!("not a rational number: {s:?}"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if (int.is_empty() && frac.is_empty())
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let d = num_traits::pow(BigInt::from(10), frac.len());
    let q = BigRational::new(n, d);
    Ok(if neg { -q } else { q })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensitySource {
    /// Target dimension `α`; `D = (1 − α)/log₃2`.
    Alpha(BigRational),
    /// The density itself, for the rational cases (`D = 1`, `D = 1/2`, ...).
    Density(BigRational),
}

/// `α` and the derived density `D`, with exact floor machinery.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityParams {
    source: DensitySource,
    density: Scalar,
    inverse: Scalar,
    start_bits: u32,
    cap_bits: u32,
}

impl DensityParams {
    /// Requires `1 − log₃2 ≤ α < 1`. `α = 1` leaves `D = 0` and `A` undefined,
    /// so it is rejected.
    pub fn from_alpha(alpha: BigRational) -> Result<Self> {
        if alpha >= BigRational::one() {
            return Err(Error::InvalidInput(
                "alpha must be < 1 (alpha = 1 gives density 0)".into(),
            ));
        }
        let one_minus = BigRational::one() - &alpha;
        // α ≥ 1 − L  ⇔  1 − α ≤ L  ⇔  ⌊(1 − α)/L⌋ = 0 or (1 − α)/L ≤ 1;
        // L is irrational, so D = 1 cannot occur and D < 1 ⇔ ⌊D⌋ = 0.
        let density = Scalar::OverLog3Of2(one_minus.clone());
        let whole = density.floor_mul(&BigInt::one(), DEFAULT_START_BITS, DEFAULT_PRECISION_CAP)?;
        if !whole.is_zero() {
            return Err(Error::InvalidInput(format!(
                "alpha = {alpha} is below 1 − log₃2 (density would exceed 1)"
            )));
        }
        Ok(Self {
            source: DensitySource::Alpha(alpha),
            inverse: Scalar::TimesLog3Of2(one_minus.recip()),
            density,
            start_bits: DEFAULT_START_BITS,
            cap_bits: DEFAULT_PRECISION_CAP,
        })
    }

    pub fn from_alpha_str(s: &str) -> Result<Self> {
        Self::from_alpha(parse_rational(s)?)
    }

    /// A rational density `0 < D ≤ 1` (`D = 1` is `α = 1 − log₃2`).
    pub fn from_density(d: BigRational) -> Result<Self> {
        if !d.is_positive() || d > BigRational::one() {
            return Err(Error::InvalidInput(format!("density {d} outside (0, 1]")));
        }
        Ok(Self {
            source: DensitySource::Density(d.clone()),
            inverse: Scalar::Rational(d.recip()),
            density: Scalar::Rational(d),
            start_bits: DEFAULT_START_BITS,
            cap_bits: DEFAULT_PRECISION_CAP,
        })
    }

    /// Overrides the precision schedule used for floor decisions.
    pub fn with_precision(mut self, start_bits: u32, cap_bits: u32) -> Result<Self> {
        if start_bits == 0 || cap_bits < start_bits {
            return Err(Error::InvalidInput("precision caps must be positive".into()));
        }
        self.start_bits = start_bits;
        self.cap_bits = cap_bits;
        Ok(self)
    }

    pub fn source(&self) -> &DensitySource {
        &self.source
    }

    pub fn density(&self) -> &Scalar {
        &self.density
    }

    pub fn inverse_density(&self) -> &Scalar {
        &self.inverse
    }

    pub fn density_f64(&self) -> f64 {
        self.density.to_f64()
    }

    pub fn alpha_f64(&self) -> f64 {
        match &self.source {
            DensitySource::Alpha(a) => ratio_f64(a),
            DensitySource::Density(d) => 1.0 - ratio_f64(d) * cantor_dimension(),
        }
    }

    /// `β = α − 1 + log₃2`, the dimension lower bound for `C_Ā`.
    pub fn beta_f64(&self) -> f64 {
        (1.0 - self.density_f64()) * cantor_dimension()
    }

    pub fn is_full_density(&self) -> bool {
        self.density.as_rational().is_some_and(|d| d.is_one())
    }

    /// `⌊y / D⌋`.
    pub fn floor_over_density(&self, y: u64) -> Result<u64> {
        let v = self
            .inverse
            .floor_mul(&BigInt::from(y), self.start_bits, self.cap_bits)?;
        v.to_u64()
            .ok_or_else(|| Error::InvalidInput("floor overflowed u64".into()))
    }

    /// `⌊y · D⌋`.
    pub fn floor_times_density(&self, y: u64) -> Result<u64> {
        let v = self
            .density
            .floor_mul(&BigInt::from(y), self.start_bits, self.cap_bits)?;
        v.to_u64()
            .ok_or_else(|| Error::InvalidInput("floor overflowed u64".into()))
    }

    /// Is `r/s ≤ 1/D`?
    fn frac_le_inverse(&self, r: u64, s: u64) -> Result<bool> {
        Ok(r <= self.floor_over_density(s)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrefixSource {
    Direct,
    Rational { r: u64, s: u64 },
}

/// The characteristic string of `A ∩ [1, n]`; `bits[i]` is position `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct APrefix {
    pub n: u64,
    pub bits: Vec<bool>,
    pub source: PrefixSource,
}

impl APrefix {
    pub fn contains(&self, m: u64) -> bool {
        m >= 1 && m <= self.n && self.bits[(m - 1) as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn density(&self) -> f64 {
        self.count() as f64 / self.n as f64
    }

    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i as u64 + 1)
    }

    /// `'1'`/`'0'` rendering of the bits.
    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// `A[n]` from the definition: mark `⌊y/D⌋` for `y = 1, 2, ...` until it passes `n`.
pub fn a_prefix(params: &DensityParams, n: u64) -> Result<APrefix> {
    if n == 0 {
        return Err(Error::InvalidInput("prefix length must be ≥ 1".into()));
    }
    let mut bits = vec![false; n as usize];
    for y in 1.. {
        let m = params.floor_over_density(y)?;
        if m > n {
            break;
        }
        // D ≤ 1 gives m ≥ y ≥ 1.
        bits[(m - 1) as usize] = true;
    }
    Ok(APrefix {
        n,
        bits,
        source: PrefixSource::Direct,
    })
}

/// `A[n]` rebuilt from `⌊r·y/s⌋` with integer arithmetic only.
pub fn a_prefix_from_rational(r: u64, s: u64, n: u64) -> Result<APrefix> {
    if n == 0 || s == 0 || r < s {
        return Err(Error::InvalidInput(format!(
            "need n ≥ 1 and r ≥ s ≥ 1 (got r={r}, s={s}, n={n})"
        )));
    }
    let mut bits = vec![false; n as usize];
    for y in 1..=n {
        let m = (r as u128 * y as u128 / s as u128) as u64;
        if m > n {
            break;
        }
        bits[(m - 1) as usize] = true;
    }
    Ok(APrefix {
        n,
        bits,
        source: PrefixSource::Rational { r, s },
    })
}

/// Largest `r/s` with `s ≤ n` and `r/s ≤ 1/D`, by Stern–Brocot descent.
///
/// The bracket `lower ≤ 1/D < upper` is always a pair of Farey neighbours, so
/// once their mediant's denominator exceeds `n` nothing with an admissible
/// denominator lies strictly between them.
pub fn best_rational(params: &DensityParams, n: u64) -> Result<(u64, u64)> {
    if n == 0 {
        return Err(Error::InvalidInput("denominator bound must be ≥ 1".into()));
    }
    let f = params.floor_over_density(1)?;
    let (mut a, mut b) = (f, 1u64);
    let (mut c, mut d) = (f + 1, 1u64);
    loop {
        // Largest t with (a + t·c)/(b + t·d) ≤ 1/D and b + t·d ≤ n.
        let t1 = last_true((n - b) / d, |t| params.frac_le_inverse(a + t * c, b + t * d))?;
        a += t1 * c;
        b += t1 * d;
        // Largest t with (c + t·a)/(d + t·b) > 1/D and d + t·b ≤ n.
        let t2 = last_true((n - d) / b, |t| {
            Ok(!params.frac_le_inverse(c + t * a, d + t * b)?)
        })?;
        c += t2 * a;
        d += t2 * b;
        if t1 == 0 && t2 == 0 {
            return Ok((a, b));
        }
    }
}

/// Largest `t ∈ [0, max]` with `pred(t)`, for a predicate that holds at 0 and
/// flips from true to false at most once.
fn last_true(max: u64, mut pred: impl FnMut(u64) -> Result<bool>) -> Result<u64> {
    let (mut lo, mut hi) = (0u64, max);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(lo)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingCheck {
    pub r: u64,
    pub s: u64,
    pub n: u64,
    pub passed: bool,
    /// `(y, ⌊y/D⌋, ⌊r·y/s⌋)` for the first few disagreements.
    pub counterexamples: Vec<(u64, u64, u64)>,
}

/// Checks `⌊y/D⌋ = ⌊r·y/s⌋` for every `1 ≤ y ≤ n`.
pub fn verify_rational_encoding(
    params: &DensityParams,
    r: u64,
    s: u64,
    n: u64,
) -> Result<EncodingCheck> {
    if s == 0 {
        return Err(Error::InvalidInput("s must be positive".into()));
    }
    let mut counterexamples = Vec::new();
    for y in 1..=n {
        let direct = params.floor_over_density(y)?;
        let rational = (r as u128 * y as u128 / s as u128) as u64;
        if direct != rational {
            counterexamples.push((y, direct, rational));
            if counterexamples.len() >= 8 {
                break;
            }
        }
    }
    Ok(EncodingCheck {
        r,
        s,
        n,
        passed: counterexamples.is_empty(),
        counterexamples,
    })
}

/// Number of ternary digits of `x` (`len₃(0) = 1`).
pub fn ternary_len(x: u64) -> usize {
    let mut len = 1;
    let mut x = x / 3;
    while x > 0 {
        len += 1;
        x /= 3;
    }
    len
}

fn to_ternary(x: u64) -> String {
    if x == 0 {
        return "0".into();
    }
    let mut d = Vec::new();
    let mut x = x;
    while x > 0 {
        d.push(char::from(b'0' + (x % 3) as u8));
        x /= 3;
    }
    d.iter().rev().collect()
}

/// Self-delimiting field: `0^u 2 ∥ L₃ ∥ x₃` where `L = len₃(x)` and `u = len₃(L)`.
fn push_field(out: &mut String, x: u64) {
    let digits = to_ternary(x);
    let len = to_ternary(digits.len() as u64);
    out.extend(std::iter::repeat_n('0', len.len()));
    out.push('2');
    out.push_str(&len);
    out.push_str(&digits);
}

/// Ternary description of `(r, s, n)`: `field(n) ∥ field(s) ∥ r₃`.
pub fn encode_rsn(r: u64, s: u64, n: u64) -> String {
    let mut out = String::new();
    push_field(&mut out, n);
    push_field(&mut out, s);
    out.push_str(&to_ternary(r));
    out
}

fn take_field(input: &str) -> Result<(u64, &str)> {
    let bad = || Error::InvalidInput(format!("malformed (r, s, n) encoding: {input:?}"));
    let u = input.find('2').ok_or_else(bad)?;
    if u == 0 || !input[..u].chars().all(|c| c == '0') {
        return Err(bad());
    }
    let rest = &input[u + 1..];
    let len_s = rest.get(..u).ok_or_else(bad)?;
    let len = u64::from_str_radix(len_s, 3).map_err(|_| bad())? as usize;
    let digits = rest.get(u..u + len).ok_or_else(bad)?;
    let x = u64::from_str_radix(digits, 3).map_err(|_| bad())?;
    Ok((x, &rest[u + len..]))
}

/// Inverse of [`encode_rsn`]; returns `(r, s, n)`.
pub fn decode_rsn(code: &str) -> Result<(u64, u64, u64)> {
    let (n, rest) = take_field(code)?;
    let (s, rest) = take_field(rest)?;
    if rest.is_empty() {
        return Err(Error::InvalidInput("missing r field".into()));
    }
    let r = u64::from_str_radix(rest, 3)
        .map_err(|_| Error::InvalidInput(format!("malformed r field: {rest:?}")))?;
    Ok((r, s, n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptionLength {
    pub n: u64,
    pub r: u64,
    pub s: u64,
    pub encoding: String,
    pub length: usize,
    /// `4·log₃ n`.
    pub log_bound: f64,
}

impl DescriptionLength {
    /// `length − 4·log₃ n`.
    pub fn excess(&self) -> f64 {
        self.length as f64 - self.log_bound
    }
}

/// The concrete description of `A[n]`: best rational at `n`, then [`encode_rsn`].
pub fn description_length(params: &DensityParams, n: u64) -> Result<DescriptionLength> {
    if n < 2 {
        return Err(Error::InvalidInput("description length needs n ≥ 2".into()));
    }
    let (r, s) = best_rational(params, n)?;
    let encoding = encode_rsn(r, s, n);
    Ok(DescriptionLength {
        n,
        r,
        s,
        length: encoding.len(),
        encoding,
        log_bound: 4.0 * (n as f64).ln() / 3f64.ln(),
    })
}

/// The additive constant `c₀` measured as `max (length − 4·log₃ n)` over
/// `n ∈ [2, n_max]`.
pub fn measured_encoding_constant(params: &DensityParams, n_max: u64) -> Result<f64> {
    let mut c0 = f64::NEG_INFINITY;
    for n in 2..=n_max.max(2) {
        c0 = c0.max(description_length(params, n)?.excess());
    }
    Ok(c0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ComplementEnum {
    /// `D = 1`: `A = ℕ` and its complement is empty.
    Empty,
    Listed {
        /// `u_1 < u_2 < ...`
        u: Vec<u64>,
        /// Least integer `t` with `u_n ≤ (n + t)/(1 − D)` for every listed `n`.
        t: i64,
        /// `n / u_n` at the last listed `n`.
        last_ratio: f64,
        one_minus_density: f64,
    },
}

/// The first `count` elements of `Ā = ℕ \ A` and the minimal shift `t`.
pub fn complement_enum(params: &DensityParams, count: usize) -> Result<ComplementEnum> {
    if params.is_full_density() {
        return Ok(ComplementEnum::Empty);
    }
    let mut u = Vec::with_capacity(count);
    let mut y = 1u64;
    let mut next_a = params.floor_over_density(y)?;
    let mut m = 0u64;
    let mut t = i64::MIN;
    while u.len() < count {
        m += 1;
        if m == next_a {
            y += 1;
            next_a = params.floor_over_density(y)?;
            continue;
        }
        u.push(m);
        let n = u.len() as i64;
        // ⌈u − n − u·D⌉ = u − n − ⌊u·D⌋
        let t_n = m as i64 - n - params.floor_times_density(m)? as i64;
        t = t.max(t_n);
    }
    let last_ratio = if let Some(&last) = u.last() {
        u.len() as f64 / last as f64
    } else {
        f64::NAN
    };
    Ok(ComplementEnum::Listed {
        u,
        t: if count == 0 { 0 } else { t },
        last_ratio,
        one_minus_density: 1.0 - params.density_f64(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxBoundReport {
    /// `(n, k_n, n·log 2 / ((k_n − 1)·log 3))` for every `n` with `k_n > 1`.
    pub estimates: Vec<(u64, u64, f64)>,
    /// Supremum of the estimates over the second half of the sequence.
    pub tail_sup: f64,
    /// The estimate at the final depth.
    pub last: f64,
    /// `1 − α`.
    pub target: f64,
    /// `log₃2 + α − 1`, the induced lower bound on `dim_H C_Ā`.
    pub complement_lower_bound: f64,
}

/// Finite-depth evaluation of the upper box-dimension bound on `C_A`.
pub fn box_dim_bound_ca(params: &DensityParams, depth: u64) -> Result<BoxBoundReport> {
    if depth < 2 {
        return Err(Error::InvalidInput("depth must be ≥ 2".into()));
    }
    let dim_c = cantor_dimension();
    let mut estimates = Vec::with_capacity(depth as usize);
    for n in 1..=depth {
        let k_n = params.floor_over_density(n)?;
        if k_n > 1 {
            estimates.push((n, k_n, n as f64 * dim_c / (k_n - 1) as f64));
        }
    }
    let half = depth / 2;
    let tail_sup = estimates
        .iter()
        .filter(|e| e.0 >= half)
        .map(|e| e.2)
        .fold(f64::NEG_INFINITY, f64::max);
    let alpha = params.alpha_f64();
    Ok(BoxBoundReport {
        last: estimates.last().map_or(f64::NAN, |e| e.2),
        estimates,
        tail_sup,
        target: 1.0 - alpha,
        complement_lower_bound: dim_c + alpha - 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // log 2 / log 3 to 60 digits (mpmath).
    const LOG3_2: &str = "0.630929753571457437099527114342760854299585640131880427870655";

    fn alpha(s: &str) -> DensityParams {
        DensityParams::from_alpha_str(s).unwrap()
    }

    fn density(n: i64, d: i64) -> DensityParams {
        DensityParams::from_density(BigRational::new(n.into(), d.into())).unwrap()
    }

    #[test]
    fn log3_of_2_enclosure_contains_reference() {
        let reference = parse_rational(LOG3_2).unwrap();
        for bits in [64, 128, 190] {
            let (lo, hi) = log3_of_2_scaled(bits);
            let scale = BigInt::one() << bits as usize;
            let lo_q = BigRational::new(lo.clone(), scale.clone());
            let hi_q = BigRational::new(hi.clone(), scale);
            // The reference has 60 digits ≈ 199 bits; truncation error < 1e-60.
            let slack = BigRational::new(1.into(), num_traits::pow(BigInt::from(10), 59));
            assert!(lo_q <= &reference + &slack && &reference - &slack <= hi_q);
            assert!(&hi - &lo < BigInt::from(64));
        }
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rational("0.8").unwrap(), BigRational::new(4.into(), 5.into()));
        assert_eq!(parse_rational("3/4").unwrap(), BigRational::new(3.into(), 4.into()));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn alpha_validation() {
        assert!(DensityParams::from_alpha_str("1").is_err());
        assert!(DensityParams::from_alpha_str("0.3").is_err());
        assert!(DensityParams::from_alpha_str("0.37").is_ok());
        let p = alpha("0.8");
        assert!((p.density_f64() - 0.2 / cantor_dimension()).abs() < 1e-15);
        assert!(DensityParams::from_density(BigRational::zero()).is_err());
    }

    #[test]
    fn floors_at_alpha_08() {
        // 1/D = 3.15464876785728718549763557171380427149792820065940213935328 (mpmath)
        let p = alpha("0.8");
        let inv = parse_rational("3.15464876785728718549763557171380427149792820065940213935328")
            .unwrap();
        for y in [1u64, 2, 3, 7, 1000, 99_991] {
            let oracle = (inv.clone() * BigInt::from(y)).floor().to_integer();
            assert_eq!(BigInt::from(p.floor_over_density(y).unwrap()), oracle, "y={y}");
        }
        let a = a_prefix(&p, 10).unwrap();
        assert_eq!(a.members().collect::<Vec<_>>(), vec![3, 6, 9]);
    }

    #[test]
    fn precision_escalates_and_caps() {
        let p = alpha("0.8").with_precision(32, 32).unwrap();
        // At 32 bits the enclosure is too wide for huge y.
        let err = p.floor_over_density(u64::MAX / 8);
        assert!(matches!(err, Err(Error::PrecisionCap { .. })));
        let p = alpha("0.8").with_precision(32, 4096).unwrap();
        assert_eq!(p.floor_over_density(3).unwrap(), 9);
        assert!(p.floor_over_density(u64::MAX / 8).is_ok());
    }

    #[test]
    fn prefix_rational_cases() {
        let full = a_prefix(&density(1, 1), 20).unwrap();
        assert_eq!(full.count(), 20);
        let half = a_prefix(&density(1, 2), 20).unwrap();
        assert_eq!(half.members().collect::<Vec<_>>(), (1..=10).map(|i| 2 * i).collect::<Vec<_>>());
        assert!((half.density() - 0.5).abs() < 1e-12);
        assert!(a_prefix(&half_params(), 0).is_err());
    }

    fn half_params() -> DensityParams {
        density(1, 2)
    }

    /// Exhaustive oracle over every denominator.
    fn brute_best(params: &DensityParams, n: u64) -> (u64, u64) {
        let mut best = (0u64, 1u64);
        for s in 1..=n {
            let r = params.floor_over_density(s).unwrap();
            if (r as u128) * (best.1 as u128) > (best.0 as u128) * (s as u128) {
                best = (r, s);
            }
        }
        best
    }

    #[test]
    fn best_rational_matches_exhaustive_scan() {
        let p = alpha("0.8");
        assert_eq!(best_rational(&p, 10).unwrap(), brute_best(&p, 10));
        assert_eq!(best_rational(&p, 10).unwrap(), (22, 7));
        assert_eq!(best_rational(&p, 1).unwrap(), (3, 1));
        for a in ["0.7", "0.75", "0.9", "0.95"] {
            let p = alpha(a);
            for n in [1, 2, 5, 17, 100, 1234] {
                assert_eq!(best_rational(&p, n).unwrap(), brute_best(&p, n), "α={a} n={n}");
            }
        }
        // 1/D integer: the maximal value is 2/1.
        assert_eq!(best_rational(&half_params(), 50).unwrap(), (2, 1));
        assert_eq!(best_rational(&density(1, 1), 7).unwrap(), (1, 1));
    }

    #[test]
    fn rational_encoding_checks() {
        let p = alpha("0.8");
        let (r, s) = best_rational(&p, 10_000).unwrap();
        assert!(verify_rational_encoding(&p, r, s, 10_000).unwrap().passed);
        // 16/5 > 1/D ≈ 3.1546: y = 5 gives 16 vs 15.
        let bad = verify_rational_encoding(&p, 16, 5, 100).unwrap();
        assert!(!bad.passed);
        assert_eq!(bad.counterexamples[0].0, 5);
        assert!(verify_rational_encoding(&density(1, 1), 1, 1, 500).unwrap().passed);
    }

    #[test]
    fn encoding_examples() {
        assert_eq!(ternary_len(0), 1);
        assert_eq!(ternary_len(8), 2);
        assert_eq!(ternary_len(9), 3);
        // n = 2: "0" "2" "1" "2"; s = 1: "0" "2" "1" "1"; r = 3: "10".
        assert_eq!(encode_rsn(3, 1, 2), "0212021110");
        assert_eq!(decode_rsn("0212021110").unwrap(), (3, 1, 2));
        assert!(decode_rsn("2").is_err());
        assert!(decode_rsn("0212021").is_err());
    }

    #[test]
    fn description_length_bound() {
        let p = alpha("0.8");
        let c0 = measured_encoding_constant(&p, 30).unwrap();
        let d = description_length(&p, 729).unwrap();
        assert!(d.length as f64 <= 4.0 * 6.0 + c0 + 1e-9, "{d:?} c0={c0}");
        assert!(description_length(&p, 1).is_err());
    }

    #[test]
    fn complement_of_half_density() {
        match complement_enum(&half_params(), 1000).unwrap() {
            ComplementEnum::Listed { u, t, last_ratio, .. } => {
                assert!(u.iter().enumerate().all(|(i, &x)| x == 2 * i as u64 + 1));
                assert_eq!(t, 0);
                assert!((last_ratio - 0.5).abs() < 1e-3);
            }
            ComplementEnum::Empty => panic!(),
        }
        assert_eq!(complement_enum(&density(1, 1), 10).unwrap(), ComplementEnum::Empty);
    }

    #[test]
    fn prefix_and_complement_partition() {
        let p = alpha("0.8");
        let a = a_prefix(&p, 2000).unwrap();
        let ComplementEnum::Listed { u, .. } = complement_enum(&p, 2000 - a.count()).unwrap() else {
            panic!()
        };
        let mut all: Vec<u64> = a.members().chain(u.iter().copied()).collect();
        all.sort();
        assert_eq!(all, (1..=2000).collect::<Vec<_>>());
    }

    #[test]
    fn box_bound_full_density() {
        let r = box_dim_bound_ca(&density(1, 1), 2000).unwrap();
        assert!((r.last - cantor_dimension() * 2000.0 / 1999.0).abs() < 1e-12);
        assert!((r.target - cantor_dimension()).abs() < 1e-12);
        assert!(box_dim_bound_ca(&density(1, 1), 1).is_err());
    }

    proptest! {
        #[test]
        fn rsn_round_trip(r in 1u64..10_000_000, s in 1u64..1_000_000, n in 2u64..1_000_000) {
            prop_assert_eq!(decode_rsn(&encode_rsn(r, s, n)).unwrap(), (r, s, n));
        }

        #[test]
        fn density_of_prefix(n in 1u64..3000) {
            let p = alpha("0.75");
            let a = a_prefix(&p, n).unwrap();
            prop_assert!((a.density() - p.density_f64()).abs() <= 2.0 / n as f64);
        }
    }
}
