//! Complements `B` with `C + B ⊇ [0, 3^k)`: verification, the greedy
//! (Lorentz-style) construction, an exact branch-and-bound minimiser and the
//! bounds that go with them.
//!
//! Target sets are bitsets of `3^k` bits. The exact search branches on the
//! least uncovered target: any cover must contain some `b = v − a`, and since
//! everything below `v` is already covered those are the only useful moves.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bits::{self, Bits};
use crate::error::{Error, Result};
use crate::ternary::{concat_codes, enumerate_pattern, pow3, BlockCode, PatternSet};

/// Largest `k` the bitset-based solvers accept (`3^13` targets).
pub const MAX_SOLVER_K: u32 = 13;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateRange {
    /// `b ∈ [0, 3^k)`.
    #[default]
    Nonneg,
    /// `b ∈ (−3^k, 3^k)`.
    Signed,
}

impl CandidateRange {
    pub fn bounds(self, k: u32) -> (i64, i64) {
        let t = pow3(k);
        match self {
            Self::Nonneg => (0, t),
            Self::Signed => (-t + 1, t),
        }
    }

    pub fn contains(self, k: u32, b: i64) -> bool {
        let (lo, hi) = self.bounds(k);
        (lo..hi).contains(&b)
    }
}

impl std::str::FromStr for CandidateRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonneg" => Ok(Self::Nonneg),
            "signed" => Ok(Self::Signed),
            _ => Err(Error::InvalidInput(format!("unknown range {s:?}"))),
        }
    }
}

/// The set to translate, the allowed translations, and the target `[0, 3^k)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoverInstance {
    k: u32,
    base_set: BlockCode,
    range: CandidateRange,
}

impl CoverInstance {
    pub fn new(base_set: BlockCode, range: CandidateRange) -> Result<Self> {
        let k = base_set.k();
        if k == 0 {
            return Err(Error::InvalidInput("block length must be at least 1".into()));
        }
        if k > MAX_SOLVER_K {
            return Err(Error::BlockTooLong { k, max: MAX_SOLVER_K });
        }
        if base_set.is_empty() {
            return Err(Error::InvalidInput("base set is empty".into()));
        }
        if !base_set.is_nonnegative() {
            return Err(Error::InvalidInput("base set must be non-negative".into()));
        }
        Ok(Self { k, base_set, range })
    }

    /// The instance for `C_k`, the digits-{0,1} blocks.
    pub fn half_cantor(k: u32) -> Result<Self> {
        Self::from_pattern(&PatternSet::half_cantor(k)?, CandidateRange::Nonneg)
    }

    pub fn from_pattern(p: &PatternSet, range: CandidateRange) -> Result<Self> {
        Self::new(enumerate_pattern(p)?, range)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn base_set(&self) -> &BlockCode {
        &self.base_set
    }

    pub fn range(&self) -> CandidateRange {
        self.range
    }

    pub fn target_len(&self) -> usize {
        pow3(self.k) as usize
    }

    pub fn candidates(&self) -> std::ops::Range<i64> {
        let (lo, hi) = self.range.bounds(self.k);
        lo..hi
    }

    /// Targets hit by the translate `C + b`.
    pub fn translate_mask(&self, b: i64) -> Bits {
        let t = self.target_len() as i64;
        let mut m = Bits::zeros(t as usize);
        for &a in self.base_set.values() {
            let v = a + b;
            if (0..t).contains(&v) {
                m.set(v as usize);
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Greedy,
    Exact,
    /// Supplied from outside the solvers (a listed code, a user file).
    External,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Greedy => "greedy",
            Self::Exact => "exact",
            Self::External => "external",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimality {
    ProvenOptimal,
    Unknown,
    ProvenSuboptimal,
}

impl fmt::Display for Optimality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ProvenOptimal => "proven-optimal",
            Self::Unknown => "unknown",
            Self::ProvenSuboptimal => "proven-suboptimal",
        })
    }
}

/// A verified complement together with one witness `(a, b)` per target.
///
/// Witnesses pick the smallest `a`, then the (unique) `b = v − a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverCertificate {
    instance: CoverInstance,
    solution: BlockCode,
    witnesses: Vec<(i64, i64)>,
    method: Method,
    optimal: Optimality,
}

impl CoverCertificate {
    pub fn instance(&self) -> &CoverInstance {
        &self.instance
    }

    pub fn solution(&self) -> &BlockCode {
        &self.solution
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn optimal(&self) -> Optimality {
        self.optimal
    }

    pub fn size(&self) -> usize {
        self.solution.len()
    }

    /// The witness pair for target `v ∈ [0, 3^k)`.
    pub fn witness(&self, v: i64) -> (i64, i64) {
        self.witnesses[v as usize]
    }

    pub fn witnesses(&self) -> &[(i64, i64)] {
        &self.witnesses
    }

    pub fn with_status(mut self, method: Method, optimal: Optimality) -> Self {
        self.method = method;
        self.optimal = optimal;
        self
    }

    /// Re-checks every witness against the instance.
    pub fn is_sound(&self) -> bool {
        self.witnesses.len() == self.instance.target_len()
            && self.witnesses.iter().enumerate().all(|(v, &(a, b))| {
                a + b == v as i64
                    && self.instance.base_set.contains(a)
                    && self.solution.contains(b)
            })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verification {
    Covered(CoverCertificate),
    /// Every target value that no pair reaches.
    Uncovered(Vec<i64>),
}

impl Verification {
    pub fn certificate(self) -> Option<CoverCertificate> {
        match self {
            Self::Covered(c) => Some(c),
            Self::Uncovered(_) => None,
        }
    }

    pub fn into_result(self) -> Result<CoverCertificate> {
        match self {
            Self::Covered(c) => Ok(c),
            Self::Uncovered(u) => Err(Error::NotAComplement {
                count: u.len(),
                first: u[0],
            }),
        }
    }
}

/// Checks `C + b ⊇ [0, 3^k)` and builds the witness table.
pub fn verify_complement(inst: &CoverInstance, b: &BlockCode) -> Result<Verification> {
    verify_with(inst, b, Method::External, Optimality::Unknown)
}

fn verify_with(
    inst: &CoverInstance,
    b: &BlockCode,
    method: Method,
    optimal: Optimality,
) -> Result<Verification> {
    if b.k() != inst.k {
        return Err(Error::DimensionMismatch { left: inst.k, right: b.k() });
    }
    if let Some(&bad) = b.values().iter().find(|&&v| !inst.range.contains(inst.k, v)) {
        return Err(Error::InvalidInput(format!(
            "value {bad} lies outside the {:?} candidate range",
            inst.range
        )));
    }
    let t = inst.target_len() as i64;
    let mut witnesses = vec![None; t as usize];
    let mut remaining = t as usize;
    'outer: for &a in inst.base_set.values() {
        for &bv in b.values() {
            let v = a + bv;
            if (0..t).contains(&v) && witnesses[v as usize].is_none() {
                witnesses[v as usize] = Some((a, bv));
                remaining -= 1;
                if remaining == 0 {
                    break 'outer;
                }
            }
        }
    }
    if remaining > 0 {
        let uncovered = (0..t).filter(|&v| witnesses[v as usize].is_none()).collect();
        return Ok(Verification::Uncovered(uncovered));
    }
    Ok(Verification::Covered(CoverCertificate {
        instance: inst.clone(),
        solution: b.clone(),
        witnesses: witnesses.into_iter().map(Option::unwrap).collect(),
        method,
        optimal,
    }))
}

/// `⌈3^k / |C|⌉`: no translate covers more than `|C|` targets.
pub fn counting_lower_bound(inst: &CoverInstance) -> usize {
    inst.target_len().div_ceil(inst.base_set.len())
}

/// The size bound the greedy choice satisfies on `C_k`: each step covers at
/// least a `2^k / (2·3^k)` share of what is left, so
/// `|B| ≤ 2·(3/2)^k·k·ln 3 + 1`.
pub fn greedy_size_bound(k: u32) -> f64 {
    2.0 * 1.5f64.powi(k as i32) * k as f64 * 3f64.ln() + 1.0
}

/// Greedy cover: repeatedly take the translate covering the most uncovered
/// targets, smallest `b` on ties.
///
/// Coverage counts are kept exact by decrementing every translate through a
/// newly covered target. Heap keys may be stale; a popped key that disagrees
/// with the live count is re-pushed, and counts only shrink, so the first
/// popped key that agrees is the true maximiser.
pub fn greedy_complement(inst: &CoverInstance) -> Result<CoverCertificate> {
    let t = inst.target_len() as i64;
    let base = inst.base_set.values();
    let (lo, hi) = inst.range.bounds(inst.k);
    let slot = |b: i64| (b - lo) as usize;

    let mut counts: Vec<u32> = (lo..hi)
        .map(|b| {
            // |{a ∈ C : 0 ≤ a + b < t}| on the sorted base set.
            let first = base.partition_point(|&a| a + b < 0);
            let last = base.partition_point(|&a| a + b < t);
            (last - first) as u32
        })
        .collect();
    let mut heap: BinaryHeap<(u32, Reverse<i64>)> = (lo..hi)
        .map(|b| (counts[slot(b)], Reverse(b)))
        .filter(|&(c, _)| c > 0)
        .collect();
    let mut uncovered = Bits::ones(t as usize);
    let mut left = t as usize;
    let mut chosen = Vec::new();

    while left > 0 {
        let Some((c, Reverse(b))) = heap.pop() else {
            // Unreachable: b = v − min(C) covers any v within range.
            return Err(Error::InvalidInput("greedy ran out of candidates".into()));
        };
        let live = counts[slot(b)];
        if live != c {
            if live > 0 {
                heap.push((live, Reverse(b)));
            }
            continue;
        }
        chosen.push(b);
        for &a in base {
            let v = a + b;
            if !(0..t).contains(&v) || !uncovered.get(v as usize) {
                continue;
            }
            uncovered.clear(v as usize);
            left -= 1;
            for &a2 in base {
                let b2 = v - a2;
                if (lo..hi).contains(&b2) {
                    counts[slot(b2)] -= 1;
                }
            }
        }
    }
    let code = BlockCode::new(inst.k, chosen)?;
    verify_with(inst, &code, Method::Greedy, Optimality::Unknown)?.into_result()
}

/// Limits for the exact search. `None` means unlimited.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_nodes: Option<u64>,
    pub max_time: Option<Duration>,
}

impl Budget {
    pub const UNLIMITED: Budget = Budget {
        max_nodes: None,
        max_time: None,
    };

    pub fn nodes(n: u64) -> Self {
        Self {
            max_nodes: Some(n),
            max_time: None,
        }
    }

    pub fn seconds(s: u64) -> Self {
        Self {
            max_nodes: None,
            max_time: Some(Duration::from_secs(s)),
        }
    }
}

impl Default for Budget {
    /// Ten minutes of wall clock, no node limit.
    fn default() -> Self {
        Self::seconds(600)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub memo_hits: u64,
    pub elapsed_ms: u64,
    pub exhausted: bool,
}

#[derive(Clone, Debug)]
pub struct ExactOutcome {
    pub certificate: CoverCertificate,
    pub stats: SearchStats,
    /// Best lower bound proven at the root (equals the size when optimal).
    pub lower_bound: usize,
}

impl ExactOutcome {
    pub fn budget_exhausted(&self) -> bool {
        self.stats.exhausted
    }
}

/// Minimum-size complement by branch and bound, seeded with the greedy
/// solution as the incumbent.
pub fn exact_min_complement(inst: &CoverInstance, budget: Budget) -> Result<ExactOutcome> {
    if inst.k > 8 {
        return Err(Error::InvalidInput(format!(
            "exact search is limited to k ≤ 8 (got {})",
            inst.k
        )));
    }
    let greedy = greedy_complement(inst)?;
    let mut search = Search::new(inst, budget);
    search.best = greedy.solution().values().to_vec();
    let root = Bits::ones(inst.target_len());
    let root_lb = search.lower_bound(root.words()).max(counting_lower_bound(inst));
    if root_lb < search.best.len() {
        search.dfs(root.words().to_vec(), 0);
    }
    let exhausted = search.exhausted;
    let stats = SearchStats {
        nodes: search.nodes,
        memo_hits: search.memo_hits,
        elapsed_ms: search.start.elapsed().as_millis() as u64,
        exhausted,
    };
    let size = search.best.len();
    let optimal = if exhausted {
        Optimality::Unknown
    } else {
        Optimality::ProvenOptimal
    };
    let code = BlockCode::new(inst.k, search.best)?;
    let certificate = verify_with(inst, &code, Method::Exact, optimal)?.into_result()?;
    Ok(ExactOutcome {
        certificate,
        stats,
        lower_bound: if exhausted { root_lb } else { size },
    })
}

const MEMO_LIMIT: usize = 4_000_000;

struct Search {
    values: Vec<i64>,
    masks: Vec<Vec<u64>>,
    /// Candidate indices covering each target.
    covering: Vec<Vec<u32>>,
    /// Union of the masks of every candidate covering each target.
    conflict: Vec<Vec<u64>>,
    max_cov: usize,
    best: Vec<i64>,
    stack: Vec<i64>,
    memo: HashMap<Vec<u64>, u32>,
    nodes: u64,
    memo_hits: u64,
    budget: Budget,
    start: Instant,
    exhausted: bool,
}

impl Search {
    fn new(inst: &CoverInstance, budget: Budget) -> Self {
        let t = inst.target_len();
        let mut values = Vec::new();
        let mut masks = Vec::new();
        let mut covering = vec![Vec::new(); t];
        for b in inst.candidates() {
            let m = inst.translate_mask(b);
            if m.none() {
                continue;
            }
            let idx = values.len() as u32;
            for v in m.iter_ones() {
                covering[v].push(idx);
            }
            values.push(b);
            masks.push(m.words().to_vec());
        }
        let words = t.div_ceil(64);
        let conflict = covering
            .iter()
            .map(|cs| {
                let mut u = vec![0u64; words];
                for &i in cs {
                    for (w, m) in u.iter_mut().zip(&masks[i as usize]) {
                        *w |= m;
                    }
                }
                u
            })
            .collect();
        Self {
            values,
            masks,
            covering,
            conflict,
            max_cov: inst.base_set().len(),
            best: Vec::new(),
            stack: Vec::new(),
            memo: HashMap::new(),
            nodes: 0,
            memo_hits: 0,
            budget,
            start: Instant::now(),
            exhausted: false,
        }
    }

    /// Max of two bounds on the number of further translates needed:
    /// a packing of targets no single translate can cover together, and the
    /// fewest translates whose marginal coverages could add up to `|U|`.
    fn lower_bound(&self, u: &[u64]) -> usize {
        let left: usize = u.iter().map(|w| w.count_ones() as usize).sum();
        if left == 0 {
            return 0;
        }
        let mut packing = 0;
        let mut p = u.to_vec();
        while let Some(v) = bits::first_set(&p) {
            packing += 1;
            for (w, c) in p.iter_mut().zip(&self.conflict[v]) {
                *w &= !c;
            }
        }

        let mut hist = vec![0usize; self.max_cov + 1];
        for m in &self.masks {
            let c = bits::and_count(m, u);
            if c > 0 {
                hist[c] += 1;
            }
        }
        let mut need = 0;
        let mut sum = 0;
        'outer: for c in (1..=self.max_cov).rev() {
            for _ in 0..hist[c] {
                need += 1;
                sum += c;
                if sum >= left {
                    break 'outer;
                }
            }
        }
        packing.max(need)
    }

    fn out_of_budget(&mut self) -> bool {
        if self.exhausted {
            return true;
        }
        if let Some(n) = self.budget.max_nodes {
            if self.nodes >= n {
                self.exhausted = true;
            }
        }
        if self.nodes.is_multiple_of(1024) {
            if let Some(t) = self.budget.max_time {
                if self.start.elapsed() >= t {
                    self.exhausted = true;
                }
            }
        }
        self.exhausted
    }

    fn dfs(&mut self, u: Vec<u64>, depth: usize) {
        self.nodes += 1;
        if self.out_of_budget() {
            return;
        }
        let Some(v) = bits::first_set(&u) else {
            if depth < self.best.len() {
                self.best = self.stack.clone();
                self.best.sort_unstable();
            }
            return;
        };
        if depth + self.lower_bound(&u) >= self.best.len() {
            return;
        }
        match self.memo.get(&u) {
            Some(&d) if (d as usize) <= depth => {
                self.memo_hits += 1;
                return;
            }
            _ => {
                if self.memo.len() < MEMO_LIMIT {
                    self.memo.insert(u.clone(), depth as u32);
                }
            }
        }
        let mut order: Vec<(usize, i64, u32)> = self.covering[v]
            .iter()
            .map(|&i| {
                (
                    bits::and_count(&self.masks[i as usize], &u),
                    self.values[i as usize],
                    i,
                )
            })
            .collect();
        order.sort_unstable_by_key(|&(c, b, _)| (Reverse(c), b));
        for (_, b, i) in order {
            let next: Vec<u64> = u
                .iter()
                .zip(&self.masks[i as usize])
                .map(|(w, m)| w & !m)
                .collect();
            self.stack.push(b);
            self.dfs(next, depth + 1);
            self.stack.pop();
            if self.exhausted {
                return;
            }
            if depth + 1 >= self.best.len() {
                return;
            }
        }
    }
}

/// Maps a cover of `C` to a cover of the reflected base set
/// `{3^k − 1 − a}` via `b ↦ −b`; with `C_k` the reflection is the `{1,2}`
/// digit set. Only meaningful for the signed range.
pub fn reflect_cover(inst: &CoverInstance, b: &BlockCode) -> Result<(CoverInstance, BlockCode)> {
    let top = inst.target_len() as i64 - 1;
    let reflected = BlockCode::new(
        inst.k,
        inst.base_set.values().iter().map(|&a| top - a).collect(),
    )?;
    let neg = BlockCode::new(inst.k, b.values().iter().map(|&x| -x).collect())?;
    Ok((CoverInstance::new(reflected, CandidateRange::Signed)?, neg))
}

/// Known codes per block length, used by [`product_probe`].
pub trait CodeCatalog {
    /// Best known complement of `C_k`, with its optimality status.
    fn best_for(&self, k: u32) -> Option<(BlockCode, Optimality)>;
}

impl CodeCatalog for HashMap<u32, (BlockCode, Optimality)> {
    fn best_for(&self, k: u32) -> Option<(BlockCode, Optimality)> {
        self.get(&k).cloned()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductReport {
    pub k1: u32,
    pub k2: u32,
    pub product_size: usize,
    pub best_size: usize,
    pub best_status: Optimality,
    pub product_valid: bool,
    /// `Some(true)` when the product matches a proven optimum, `Some(false)`
    /// when it is strictly larger than a known code, `None` if undecided.
    pub product_optimal: Option<bool>,
}

/// Compares `B_{k1} ⊕ B_{k2}` with the best known code at `k1 + k2`.
pub fn product_probe(k1: u32, k2: u32, catalog: &impl CodeCatalog) -> Result<ProductReport> {
    let get = |k| {
        catalog
            .best_for(k)
            .ok_or_else(|| Error::MissingEntry(format!("best code for k={k}")))
    };
    let (b1, _) = get(k1)?;
    let (b2, _) = get(k2)?;
    let (best, status) = get(k1 + k2)?;
    let product = concat_codes(&b1, &b2)?;
    let inst = CoverInstance::half_cantor(k1 + k2)?;
    let product_valid = matches!(verify_complement(&inst, &product)?, Verification::Covered(_));
    let product_optimal = if product.len() > best.len() {
        Some(false)
    } else if status == Optimality::ProvenOptimal && product.len() == best.len() {
        Some(true)
    } else {
        None
    };
    Ok(ProductReport {
        k1,
        k2,
        product_size: product.len(),
        best_size: best.len(),
        best_status: status,
        product_valid,
        product_optimal,
    })
}
