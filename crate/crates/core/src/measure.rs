//! Finite-scale checks: digit cancellation and entropy, box-counting
//! estimates, dyadic net measures with Marstrand's inequality, and the mass
//! distribution ratio on `½C_Ā`.
//!
//! Floating point is confined to this module. Cover counts stay exact and
//! box-dimension estimates carry exact `log₃` coefficients alongside floats.

use std::fmt::Write as _;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::{cantor_dimension, complement_enum, ComplementEnum, DensityParams};
use crate::error::{Error, Result};
use crate::fractal::FractalSpec;

/// Absolute tolerance for floating comparisons in this module.
pub const TOLERANCE: f64 = 1e-12;

/// Empirical digit frequencies `(p₀, p₁, p₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyVector {
    p: [Ratio<u64>; 3],
}

impl FrequencyVector {
    pub fn new(p: [Ratio<u64>; 3]) -> Result<Self> {
        if p[0] + p[1] + p[2] != Ratio::from_integer(1) {
            return Err(Error::InvalidInput("frequencies must sum to 1".into()));
        }
        Ok(Self { p })
    }

    pub fn from_counts(counts: [u64; 3]) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidInput("no digits".into()));
        }
        Ok(Self {
            p: counts.map(|c| Ratio::new(c, n)),
        })
    }

    pub fn get(&self) -> [Ratio<u64>; 3] {
        self.p
    }

    pub fn to_f64(&self) -> [f64; 3] {
        self.p.map(|r| *r.numer() as f64 / *r.denom() as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cancellation {
    pub t: Vec<u8>,
    pub sums: Vec<u8>,
    pub frequencies: FrequencyVector,
}

/// `t_n = 0` when `r_n ∈ {1, 2}` and `2` otherwise, so `r_n + t_n ∈ {1, 2}`.
pub fn cancel_digits(r: &[u8]) -> Result<Cancellation> {
    if let Some(&d) = r.iter().find(|&&d| d > 2) {
        return Err(Error::InvalidDigits(format!("digit {d}")));
    }
    let t: Vec<u8> = r.iter().map(|&d| if d == 0 { 2 } else { 0 }).collect();
    let sums: Vec<u8> = r.iter().zip(&t).map(|(a, b)| a + b).collect();
    let mut counts = [0u64; 3];
    for &s in &sums {
        counts[s as usize] += 1;
    }
    Ok(Cancellation {
        t,
        sums,
        frequencies: FrequencyVector::from_counts(counts)?,
    })
}

/// `−Σ p_i log₃ p_i`.
pub fn entropy3(v: &FrequencyVector) -> f64 {
    v.to_f64()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln() / 3f64.ln())
        .sum()
}

/// An exact cover count `Π base^exp`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverCount {
    pub factors: Vec<(u64, u64)>,
}

impl CoverCount {
    pub fn power(base: u64, exp: u64) -> Self {
        Self {
            factors: vec![(base, exp)],
        }
    }

    pub fn log3(&self) -> f64 {
        self.factors
            .iter()
            .map(|&(b, e)| e as f64 * (b as f64).ln() / 3f64.ln())
            .sum()
    }

    /// Rendered as `2^10·5^3`.
    pub fn render(&self) -> String {
        let parts: Vec<String> = self
            .factors
            .iter()
            .filter(|&&(b, e)| e > 0 && b > 1)
            .map(|&(b, e)| format!("{b}^{e}"))
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("·")
        }
    }
}

/// One scale `3^{-n}` of a box-counting estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxEstimate {
    pub n: u64,
    pub count: CoverCount,
    /// `log₃ S / n` as `Σ coeff · log₃(base)`.
    pub exact: Vec<(Ratio<u64>, u64)>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSeries {
    pub estimates: Vec<BoxEstimate>,
    /// Supremum over the second half of the scales.
    pub tail_sup: f64,
}

/// `log S(3^{-n}) / (n log 3)` at each requested `n`.
pub fn box_dim_estimate(
    mut counter: impl FnMut(u64) -> Result<CoverCount>,
    scales: &[u64],
) -> Result<BoxSeries> {
    let mut estimates = Vec::with_capacity(scales.len());
    for &n in scales {
        if n == 0 {
            return Err(Error::InvalidInput("scales start at n = 1".into()));
        }
        let count = counter(n)?;
        let mut exact: Vec<(Ratio<u64>, u64)> = Vec::new();
        for &(b, e) in &count.factors {
            if e == 0 || b == 1 {
                continue;
            }
            let c = Ratio::new(e, n);
            match exact.iter_mut().find(|x| x.1 == b) {
                Some(x) => x.0 += c,
                None => exact.push((c, b)),
            }
        }
        let value = count.log3() / n as f64;
        estimates.push(BoxEstimate {
            n,
            count,
            exact,
            value,
        });
    }
    let half = estimates.len() / 2;
    let tail_sup = estimates[half..]
        .iter()
        .map(|e| e.value)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BoxSeries {
        estimates,
        tail_sup,
    })
}

/// Prefix count of `C`: `2^n` cylinders of length `3^{-n}`.
pub fn cantor_counter(n: u64) -> Result<CoverCount> {
    Ok(CoverCount::power(2, n))
}

/// Prefix count of `½E` for a spec: whole blocks contribute `|B|`, a partial
/// block the number of distinct prefixes of its code.
pub fn spec_counter(spec: &FractalSpec) -> impl FnMut(u64) -> Result<CoverCount> + '_ {
    move |n| {
        let mut factors: Vec<(u64, u64)> = Vec::new();
        let mut left = n;
        let mut i = 0usize;
        while left > 0 {
            let st = spec
                .stage(i)
                .ok_or_else(|| Error::InvalidInput(format!("spec is shorter than {n} digits")))?;
            let len = st.len() as u64;
            let size = if left >= len {
                st.code().len() as u64
            } else {
                let drop = crate::ternary::pow3((len - left) as u32);
                let mut prefixes: Vec<i64> = st.code().values().iter().map(|v| v / drop).collect();
                prefixes.dedup();
                prefixes.len() as u64
            };
            match factors.iter_mut().find(|f| f.0 == size) {
                Some(f) => f.1 += 1,
                None => factors.push((size, 1)),
            }
            left = left.saturating_sub(len);
            i += 1;
        }
        Ok(CoverCount { factors })
    }
}

/// Prefix count of `C_A`: a free binary digit at each position of `A`.
pub fn density_counter(params: &DensityParams) -> impl FnMut(u64) -> Result<CoverCount> + '_ {
    let mut prefix: Option<crate::density::APrefix> = None;
    move |n| {
        if prefix.as_ref().is_none_or(|p| p.n < n) {
            prefix = Some(crate::density::a_prefix(params, n.max(16))?);
        }
        let p = prefix.as_ref().expect("prefix computed");
        let count = (1..=n).filter(|&m| p.contains(m)).count() as u64;
        Ok(CoverCount::power(2, count))
    }
}

/// Renders `(scale, count, estimate)` rows with 12 significant digits.
pub fn box_series_csv(series: &BoxSeries) -> String {
    let mut out = String::from("scale,count,estimate\n");
    for e in &series.estimates {
        let _ = writeln!(out, "3^-{},{},{}", e.n, e.count.render(), sig12(e.value));
    }
    out
}

/// Decimal rendering with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (11 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

/// `[m/2^j, (m+1)/2^j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub level: u32,
    pub index: u64,
}

/// Deepest level accepted for net-measure targets.
pub const MAX_DYADIC_LEVEL: u32 = 24;

impl DyadicInterval {
    pub fn new(level: u32, index: u64) -> Result<Self> {
        if level > MAX_DYADIC_LEVEL || index >= 1u64 << level {
            return Err(Error::InvalidInput(format!(
                "no dyadic interval ({level}, {index}) in [0, 1)"
            )));
        }
        Ok(Self { level, index })
    }

    pub fn length(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn contains(&self, other: &DyadicInterval) -> bool {
        other.level >= self.level && other.index >> (other.level - self.level) == self.index
    }

    /// Atoms of this interval at a deeper `level`.
    pub fn atoms(&self, level: u32) -> std::ops::Range<u64> {
        let shift = level - self.level;
        (self.index << shift)..((self.index + 1) << shift)
    }
}

/// A finite union of dyadic intervals, stored as sorted atoms at one level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicUnion {
    level: u32,
    atoms: Vec<u64>,
}

impl DyadicUnion {
    pub fn new(intervals: &[DyadicInterval]) -> Result<Self> {
        let level = intervals.iter().map(|i| i.level).max().unwrap_or(0);
        Self::at_level(intervals, level)
    }

    pub fn at_level(intervals: &[DyadicInterval], level: u32) -> Result<Self> {
        if level > MAX_DYADIC_LEVEL {
            return Err(Error::InvalidInput(format!(
                "level {level} exceeds the cap {MAX_DYADIC_LEVEL}"
            )));
        }
        let mut atoms = Vec::new();
        for iv in intervals {
            if iv.level > level {
                return Err(Error::InvalidInput("interval deeper than the union's level".into()));
            }
            atoms.extend(iv.atoms(level));
        }
        atoms.sort_unstable();
        atoms.dedup();
        Ok(Self { level, atoms })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn atoms(&self) -> &[u64] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn lebesgue(&self) -> f64 {
        self.atoms.len() as f64 * (-(self.level as f64)).exp2()
    }

    /// Number of atoms inside `[lo, hi)` (atom indices).
    fn count_in(&self, lo: u64, hi: u64) -> usize {
        self.atoms.partition_point(|&a| a < hi) - self.atoms.partition_point(|&a| a < lo)
    }
}

/// Cheapest cover of a fully covered node at `level` by intervals no longer
/// than `2^{-delta_level}`.
fn full_node_cost(level: u32, t: f64, delta_level: u32) -> f64 {
    let top = level.max(delta_level);
    ((top - level) as f64).exp2() * (-(top as f64) * t).exp2()
}

/// `M^t_δ(target)` with `δ = 2^{-delta_level}`: the least `Σ|I|^t` over covers
/// by dyadic intervals of length at most `δ`.
///
/// Splitting a full node multiplies its cost by `2^{1−t} ≥ 1`, so for
/// `0 < t ≤ 1` the tree search stops at full nodes.
pub fn net_measure(target: &DyadicUnion, t: f64, delta_level: u32) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidInput(format!("t = {t} outside (0, 1]")));
    }
    Ok(net_node(target, 0, 0, t, delta_level))
}

fn net_node(u: &DyadicUnion, level: u32, index: u64, t: f64, dl: u32) -> f64 {
    let shift = u.level - level;
    let (lo, hi) = (index << shift, (index + 1) << shift);
    let inside = u.count_in(lo, hi);
    if inside == 0 {
        return 0.0;
    }
    if inside as u64 == hi - lo {
        return full_node_cost(level, t, dl);
    }
    let split = net_node(u, level + 1, 2 * index, t, dl) + net_node(u, level + 1, 2 * index + 1, t, dl);
    if level >= dl {
        split.min((-(level as f64) * t).exp2())
    } else {
        split
    }
}

/// Deepest level the exhaustive oracle accepts.
pub const EXHAUSTIVE_MAX_LEVEL: u32 = 5;

/// Minimises over every partition of `[0, 1)` into dyadic intervals of depth
/// at most 5: the cover is the set of pieces meeting the target.
pub fn net_measure_exhaustive(target: &DyadicUnion, t: f64, delta_level: u32) -> Result<f64> {
    if target.level > EXHAUSTIVE_MAX_LEVEL {
        return Err(Error::InvalidInput("exhaustive oracle is limited to level 5".into()));
    }
    let u = DyadicUnion::at_level(
        &target
            .atoms
            .iter()
            .map(|&a| DyadicInterval { level: target.level, index: a })
            .collect::<Vec<_>>(),
        EXHAUSTIVE_MAX_LEVEL,
    )?;
    let costs = partition_costs(&u, 0, 0, t, delta_level);
    Ok(costs.into_iter().fold(f64::INFINITY, f64::min))
}

/// Cost of every partition of node `(level, index)`; infeasible ones are ∞.
fn partition_costs(u: &DyadicUnion, level: u32, index: u64, t: f64, dl: u32) -> Vec<f64> {
    let shift = u.level - level;
    let meets = u.count_in(index << shift, (index + 1) << shift) > 0;
    let whole = if !meets {
        0.0
    } else if level >= dl {
        (-(level as f64) * t).exp2()
    } else {
        f64::INFINITY
    };
    let mut out = vec![whole];
    if level < EXHAUSTIVE_MAX_LEVEL {
        let left = partition_costs(u, level + 1, 2 * index, t, dl);
        let right = partition_costs(u, level + 1, 2 * index + 1, t, dl);
        out.reserve(left.len() * right.len());
        for l in &left {
            for r in &right {
                out.push(l + r);
            }
        }
    }
    out
}

/// Dyadic intervals with positive weights, all of length at most `2^{-mesh_level}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedCover {
    entries: Vec<(DyadicInterval, f64)>,
    mesh_level: u32,
}

impl WeightedCover {
    pub fn new(entries: Vec<(DyadicInterval, f64)>, mesh_level: u32) -> Result<Self> {
        for (iv, w) in &entries {
            if iv.level < mesh_level {
                return Err(Error::InvalidInput(format!("{iv:?} is coarser than the mesh")));
            }
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::InvalidInput("weights must be positive".into()));
            }
        }
        Ok(Self {
            entries,
            mesh_level,
        })
    }

    pub fn entries(&self) -> &[(DyadicInterval, f64)] {
        &self.entries
    }

    pub fn mesh_level(&self) -> u32 {
        self.mesh_level
    }

    /// `Σ a_n |I_n|^s`.
    pub fn weighted_sum(&self, s: f64) -> f64 {
        self.entries.iter().map(|(iv, w)| w * iv.length().powf(s)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum MarstrandOutcome {
    /// Some atom of the target carries total weight `≤ c`.
    NotApplicable { atom: DyadicInterval, weight: f64 },
    Checked { lhs: f64, rhs: f64, holds: bool },
}

/// Checks the hypothesis on every atom, then `Σ a_n|I_n|^s ≥ c·M^s_δ(A)`.
pub fn marstrand_check(
    cover: &WeightedCover,
    target: &DyadicUnion,
    c: f64,
    s: f64,
) -> Result<MarstrandOutcome> {
    let level = cover
        .entries
        .iter()
        .map(|e| e.0.level)
        .max()
        .unwrap_or(0)
        .max(target.level);
    let atoms = DyadicUnion::at_level(
        &target
            .atoms
            .iter()
            .map(|&a| DyadicInterval { level: target.level, index: a })
            .collect::<Vec<_>>(),
        level,
    )?;
    for &a in &atoms.atoms {
        let atom = DyadicInterval { level, index: a };
        let weight: f64 = cover
            .entries
            .iter()
            .filter(|(iv, _)| iv.contains(&atom))
            .map(|e| e.1)
            .sum();
        if weight <= c {
            return Ok(MarstrandOutcome::NotApplicable { atom, weight });
        }
    }
    let lhs = cover.weighted_sum(s);
    let rhs = c * net_measure(&atoms, s, cover.mesh_level)?;
    Ok(MarstrandOutcome::Checked {
        lhs,
        rhs,
        holds: lhs >= rhs - TOLERANCE * rhs.max(1.0),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarnessSummary {
    pub trials: usize,
    pub applicable: usize,
    pub violations: usize,
}

/// Random covers at levels `≤ 8` biased towards satisfying the hypothesis.
pub fn marstrand_harness(seed: u64, trials: usize) -> Result<HarnessSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = HarnessSummary {
        trials,
        applicable: 0,
        violations: 0,
    };
    for _ in 0..trials {
        let level = rng.gen_range(1..=8u32);
        let mesh = rng.gen_range(0..=level);
        let s = if rng.gen_bool(0.5) { 0.5 } else { 1.0 };
        let c = rng.gen_range(0.2..1.0);
        let mut target = Vec::new();
        for a in 0..1u64 << level {
            if rng.gen_bool(0.3) {
                target.push(DyadicInterval { level, index: a });
            }
        }
        if target.is_empty() {
            target.push(DyadicInterval { level, index: 0 });
        }
        let mut entries: Vec<(DyadicInterval, f64)> = Vec::new();
        for atom in &target {
            for _ in 0..rng.gen_range(1..=3) {
                let up = rng.gen_range(mesh..=level);
                let iv = DyadicInterval {
                    level: up,
                    index: atom.index >> (level - up),
                };
                let w = rng.gen_range(0.05..1.2);
                match entries.iter_mut().find(|e| e.0 == iv) {
                    Some(e) => e.1 += w,
                    None => entries.push((iv, w)),
                }
            }
        }
        let cover = WeightedCover::new(entries, mesh)?;
        let target = DyadicUnion::new(&target)?;
        if let MarstrandOutcome::Checked { holds, .. } = marstrand_check(&cover, &target, c, s)? {
            summary.applicable += 1;
            if !holds {
                summary.violations += 1;
            }
        }
    }
    Ok(summary)
}

/// One synthetic family of dyadic squares and the inequality chain it yields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquaresTrial {
    pub k: u32,
    pub squares: usize,
    /// `c·2^{1/2}/2^{k+1}`.
    pub budget: f64,
    /// `Σ|S|^γ`.
    pub gamma_sum: f64,
    /// `Σ a_i |I_i|` with `a_i = |S_i|^t`.
    pub lhs: f64,
    /// `c·M¹_δ(A_k)`.
    pub rhs: f64,
    /// `L¹(A_k)`.
    pub lebesgue: f64,
    pub holds: bool,
}

/// Squares of side `2^{-j}` (diameter `√2·2^{-j}`) with `Σ|S|^γ` under budget;
/// `A_k` collects the columns whose fibre sum `Σ side^t` exceeds `c`.
pub fn squares_chain_trial(rng: &mut ChaCha8Rng, k: u32, gamma: f64, c: f64) -> Result<SquaresTrial> {
    if !(1.0..2.0).contains(&gamma) || k == 0 || c <= 0.0 {
        return Err(Error::InvalidInput("need 1 ≤ γ < 2, k ≥ 1, c > 0".into()));
    }
    let t = gamma - 1.0;
    let mesh = (k as f64).log2().ceil() as u32;
    let budget = c * 2f64.sqrt() / (k as f64 + 1.0).exp2();
    let level_cap = 8u32.max(mesh);
    let hot: Vec<u64> = (0..3).map(|_| rng.gen_range(0..1u64 << level_cap)).collect();
    let mut squares: Vec<DyadicInterval> = Vec::new();
    let mut spent = 0.0;
    for _ in 0..10_000 {
        let j = rng.gen_range(mesh.max(level_cap - 2)..=level_cap);
        let diam = 2f64.sqrt() * (-(j as f64)).exp2();
        let cost = diam.powf(gamma);
        if spent + cost >= budget {
            break;
        }
        spent += cost;
        let col = hot[rng.gen_range(0..hot.len())] >> (level_cap - j);
        squares.push(DyadicInterval { level: j, index: col });
    }
    let mut fibre = vec![0f64; 1 << level_cap];
    let mut entries: Vec<(DyadicInterval, f64)> = Vec::new();
    for sq in &squares {
        let side = sq.length();
        for a in sq.atoms(level_cap) {
            fibre[a as usize] += side.powf(t);
        }
        entries.push((*sq, (2f64.sqrt() * side).powf(t)));
    }
    let ak: Vec<DyadicInterval> = (0..1u64 << level_cap)
        .filter(|&a| fibre[a as usize] > c)
        .map(|a| DyadicInterval { level: level_cap, index: a })
        .collect();
    let union = DyadicUnion::at_level(&ak, level_cap)?;
    let cover = WeightedCover::new(entries, mesh)?;
    let lhs = cover.weighted_sum(1.0);
    let rhs = c * net_measure(&union, 1.0, mesh)?;
    let lebesgue = union.lebesgue();
    let bound = c / (k as f64 + 1.0).exp2();
    let holds = bound > lhs - TOLERANCE
        && lhs >= rhs - TOLERANCE
        && lebesgue < (-(k as f64 + 1.0)).exp2();
    Ok(SquaresTrial {
        k,
        squares: squares.len(),
        budget,
        gamma_sum: spent,
        lhs,
        rhs,
        lebesgue,
        holds,
    })
}

pub fn squares_chain_harness(seed: u64, trials: usize) -> Result<Vec<SquaresTrial>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|i| {
            let k = 1 + (i as u32 % 4);
            let gamma = rng.gen_range(1.2..1.9);
            squares_chain_trial(&mut rng, k, gamma, 0.5)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassRow {
    pub f: u32,
    /// `δ = 3^{-u_f}`.
    pub u_f: u64,
    /// Level-`(f−1)` intervals meeting `N_δ(x)`.
    pub intervals: u32,
    /// `intervals · 2^{-(f−1)}`.
    pub mass: f64,
    pub ratio: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub beta: f64,
    pub t: i64,
    /// `8·3^{βt/c}/2^β`.
    pub bound: f64,
    pub rows: Vec<MassRow>,
    /// Set when more than 4 intervals meet some `N_δ(x)`.
    pub flagged: bool,
}

impl MassReport {
    pub fn all_within(&self) -> bool {
        self.rows.iter().all(|r| r.within)
    }
}

/// Positions `u_1 < u_2 < ...` of `Ā` and the shift `t`, enough for `levels` digits.
pub fn complement_positions(params: &DensityParams, count: usize) -> Result<Option<(Vec<u64>, i64)>> {
    match complement_enum(params, count)? {
        ComplementEnum::Empty => Ok(None),
        ComplementEnum::Listed { u, t, .. } => Ok(Some((u, t))),
    }
}

/// Checks that ternary digits `x_1 x_2 ...` describe a point of `½C_Ā` and
/// returns its free bits `x_{u_1}, x_{u_2}, ...`.
pub fn half_cantor_bits(params: &DensityParams, digits: &[u8]) -> Result<Vec<u8>> {
    let positions = complement_positions(params, digits.len())?.map(|p| p.0).unwrap_or_default();
    let mut bits = Vec::new();
    for (i, &d) in digits.iter().enumerate() {
        let p = i as u64 + 1;
        let free = positions.binary_search(&p).is_ok();
        if d > 1 || (d == 1 && !free) {
            return Err(Error::InvalidInput(format!(
                "digit {d} at position {p} is not allowed in ½C_Ā"
            )));
        }
        if free {
            bits.push(d);
        }
    }
    Ok(bits)
}

/// `μ[N_δ(x)]/(2δ)^β` at `δ = 3^{-u_f}` for each `f` in `levels`.
///
/// `bits` are the digits of `x` at `u_1, u_2, ...` and must extend past the
/// largest level. Intervals are compared in exact integer arithmetic.
pub fn mass_ratio(
    params: &DensityParams,
    bits: &[u8],
    levels: std::ops::RangeInclusive<u32>,
) -> Result<MassReport> {
    let beta = params.beta_f64();
    let (lo_f, hi_f) = (*levels.start(), *levels.end());
    if lo_f < 2 {
        return Err(Error::InvalidInput("levels start at f = 2".into()));
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(Error::InvalidInput("x is not in ½C_Ā (digit above 1)".into()));
    }
    let Some((u, t)) = complement_positions(params, (hi_f as usize + 40).max(1000))? else {
        // ½C_Ā = {0}: μ is a point mass and every ratio is 1.
        let bound = 8.0 / beta.exp2();
        let rows = levels
            .map(|f| MassRow {
                f,
                u_f: f as u64,
                intervals: 1,
                mass: 1.0,
                ratio: 1.0,
                within: 1.0 <= bound,
            })
            .collect();
        return Ok(MassReport {
            beta,
            t: 0,
            bound,
            rows,
            flagged: false,
        });
    };
    if bits.len() < hi_f as usize {
        return Err(Error::InvalidInput("x needs at least as many bits as the top level".into()));
    }
    let c = 1.0 - params.density_f64();
    let bound = 8.0 * 3f64.powf(beta * t as f64 / c) / beta.exp2();
    // Everything is scaled by 3^P; the tail beyond P is at most one unit.
    let tail_idx = u.partition_point(|&pos| pos <= 78).min(u.len()) - 1;
    if tail_idx < hi_f as usize + 4 {
        return Err(Error::InvalidInput("levels too deep for exact comparison".into()));
    }
    let p = u[tail_idx] as u32;
    let scale = |pos: u64| 3i128.pow(p - pos as u32);
    let x_val: i128 = bits
        .iter()
        .zip(&u)
        .take_while(|(_, &pos)| pos <= p as u64)
        .map(|(&b, &pos)| b as i128 * scale(pos))
        .sum();
    // x's digits past P are dropped; keep an upper end too.
    let x_hi = x_val + 1;
    let mut rows = Vec::new();
    let mut flagged = false;
    for f in levels {
        let n = f as usize - 1;
        let delta = scale(u[f as usize - 1]);
        let (lo, hi) = (x_val - delta, x_hi + delta);
        // I(σ) for |σ| = n is [v, v + R] with R = Σ_{k > n} 3^{-u_k} ≤ tail + 1.
        let r: i128 = u[n..=tail_idx].iter().map(|&pos| scale(pos)).sum::<i128>() + 1;
        let mut count = 0u32;
        for sigma in 0u64..1 << n {
            let v: i128 = (0..n)
                .map(|i| ((sigma >> (n - 1 - i)) & 1) as i128 * scale(u[i]))
                .sum();
            if v <= hi && v + r >= lo {
                count += 1;
            }
        }
        if count > 4 {
            flagged = true;
        }
        let mass = count as f64 * (-(n as f64)).exp2();
        let ratio = mass / (2.0 * 3f64.powf(-(u[f as usize - 1] as f64))).powf(beta);
        rows.push(MassRow {
            f,
            u_f: u[f as usize - 1],
            intervals: count,
            mass,
            ratio,
            within: ratio <= bound * (1.0 + TOLERANCE),
        });
    }
    Ok(MassReport {
        beta,
        t,
        bound,
        rows,
        flagged,
    })
}

/// `count` random points of `½C_Ā` with `bits` free digits each.
pub fn sample_half_cantor(seed: u64, count: usize, bits: usize) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..bits).map(|_| rng.gen_range(0..2u8)).collect())
        .collect()
}

/// `1 − (2/3)·log₃2`, the entropy of `(0, 1/3, 2/3)`.
pub fn cancellation_entropy() -> f64 {
    1.0 - 2.0 / 3.0 * cantor_dimension()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn cancel_examples() {
        let c = cancel_digits(&[0, 1, 2]).unwrap();
        assert_eq!(c.t, vec![2, 0, 0]);
        assert_eq!(c.sums, vec![2, 1, 2]);
        let z = cancel_digits(&[0; 7]).unwrap();
        assert_eq!(z.frequencies.get(), [Ratio::from_integer(0), Ratio::from_integer(0), Ratio::from_integer(1)]);
        assert!(cancel_digits(&[3]).is_err());
    }

    #[test]
    fn cancel_frequencies_converge() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r: Vec<u8> = (0..100_000).map(|_| rng.gen_range(0..3)).collect();
        let f = cancel_digits(&r).unwrap().frequencies.to_f64();
        assert_eq!(f[0], 0.0);
        assert!((f[1] - 1.0 / 3.0).abs() < 1e-2 && (f[2] - 2.0 / 3.0).abs() < 1e-2);
    }

    #[test]
    fn entropy_values() {
        let v = FrequencyVector::new([Ratio::new(0, 1), Ratio::new(1, 3), Ratio::new(2, 3)]).unwrap();
        assert!((entropy3(&v) - cancellation_entropy()).abs() < 1e-12);
        assert!((entropy3(&v) - 0.5794).abs() < 1e-4);
        let point = FrequencyVector::from_counts([5, 0, 0]).unwrap();
        assert_eq!(entropy3(&point), 0.0);
        let uniform = FrequencyVector::from_counts([1, 1, 1]).unwrap();
        assert!((entropy3(&uniform) - 1.0).abs() < 1e-12);
        assert!(FrequencyVector::new([Ratio::new(1, 2); 3]).is_err());
    }

    #[test]
    fn box_estimates_exact() {
        let s = box_dim_estimate(cantor_counter, &[1, 5, 50]).unwrap();
        for e in &s.estimates {
            assert_eq!(e.exact, vec![(Ratio::from_integer(1), 2)]);
            assert!((e.value - cantor_dimension()).abs() < 1e-12);
        }
        let full = box_dim_estimate(|n| Ok(CoverCount::power(3, n)), &[4, 8]).unwrap();
        assert!((full.tail_sup - 1.0).abs() < 1e-12);
        let csv = box_series_csv(&s);
        assert!(csv.starts_with("scale,count,estimate\n3^-1,2^1,0.630929753571\n"), "{csv}");
    }

    #[test]
    fn sig12_rendering() {
        assert_eq!(sig12(0.2), "0.200000000000");
        assert_eq!(sig12(123.456), "123.456000000");
        assert_eq!(sig12(1e-3), "0.00100000000000");
    }

    fn union(level: u32, atoms: &[u64]) -> DyadicUnion {
        DyadicUnion::at_level(
            &atoms.iter().map(|&a| DyadicInterval::new(level, a).unwrap()).collect::<Vec<_>>(),
            level,
        )
        .unwrap()
    }

    #[test]
    fn net_measure_basics() {
        let whole = union(0, &[0]);
        for dl in 0..6 {
            assert!((net_measure(&whole, 1.0, dl).unwrap() - 1.0).abs() < 1e-12);
        }
        let one = union(3, &[5]);
        assert!((net_measure(&one, 0.7, 3).unwrap() - (-2.1f64).exp2()).abs() < 1e-12);
        assert!(net_measure(&one, 1.5, 3).is_err());
        assert_eq!(net_measure(&union(2, &[]), 0.5, 1).unwrap(), 0.0);
    }

    #[test]
    fn net_measure_matches_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let level = rng.gen_range(0..=5u32);
            let atoms: Vec<u64> = (0..1u64 << level).filter(|_| rng.gen_bool(0.4)).collect();
            let u = union(level, &atoms);
            let t = [0.3, 0.5, 0.7, 1.0][rng.gen_range(0..4)];
            let dl = rng.gen_range(0..=level);
            let dp = net_measure(&u, t, dl).unwrap();
            let brute = net_measure_exhaustive(&u, t, dl).unwrap();
            assert!((dp - brute).abs() < 1e-12, "{atoms:?} t={t} dl={dl}: {dp} vs {brute}");
        }
    }

    #[test]
    fn marstrand_single_interval() {
        let iv = DyadicInterval::new(2, 1).unwrap();
        let cover = WeightedCover::new(vec![(iv, 1.5)], 2).unwrap();
        let target = DyadicUnion::new(&[iv]).unwrap();
        match marstrand_check(&cover, &target, 1.0, 1.0).unwrap() {
            MarstrandOutcome::Checked { lhs, rhs, holds } => {
                assert!(holds);
                assert!((lhs - 0.375).abs() < 1e-12 && (rhs - 0.25).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            marstrand_check(&cover, &target, 2.0, 1.0).unwrap(),
            MarstrandOutcome::NotApplicable { .. }
        ));
        assert!(WeightedCover::new(vec![(iv, 1.0)], 3).is_err());
    }

    #[test]
    fn harness_runs_clean() {
        let s = marstrand_harness(3, 60).unwrap();
        assert_eq!(s.violations, 0);
        assert!(s.applicable > 0);
        let chain = squares_chain_harness(5, 8).unwrap();
        assert!(chain.iter().all(|t| t.holds), "{chain:?}");
    }

    #[test]
    fn mass_ratio_half_density_at_zero() {
        let p = DensityParams::from_density(BigRational::new(1.into(), 2.into())).unwrap();
        let r = mass_ratio(&p, &[0; 40], 2..=12).unwrap();
        for row in &r.rows {
            assert!(row.mass <= 2.0 * (-(row.f as f64 - 1.0)).exp2());
        }
        assert!(r.all_within() && !r.flagged);
    }

    #[test]
    fn mass_ratio_degenerate_and_errors() {
        let full = DensityParams::from_density(BigRational::from_integer(1.into())).unwrap();
        let r = mass_ratio(&full, &[], 2..=5).unwrap();
        assert!(r.all_within() && r.beta.abs() < 1e-12);
        let p = DensityParams::from_alpha_str("0.8").unwrap();
        assert!(mass_ratio(&p, &[2; 30], 2..=5).is_err());
        assert!(half_cantor_bits(&p, &[0, 0, 1]).is_err());
        assert_eq!(half_cantor_bits(&p, &[1, 1, 0, 1]).unwrap(), vec![1, 1, 1]);
    }
}
