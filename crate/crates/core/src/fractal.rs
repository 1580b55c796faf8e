//! Concatenation fractals built from block codes, their dimension accounting,
//! and exact decompositions `x = a + b` with `a` in a half Cantor set and `b`
//! in the fractal.

use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::complement::{
    greedy_size_bound, verify_complement, CandidateRange, CoverCertificate, CoverInstance,
};
use crate::density::{cantor_dimension, DensityParams};
use crate::error::{Error, Result};
use crate::ternary::{pow3, pow3_big, BlockCode, PatternSet, TernaryRational};

/// One block of the schedule: its base pattern `C_k`, the code `B_k`, and the
/// certificate that `C_k + B_k` covers every block value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pattern: PatternSet,
    certificate: CoverCertificate,
}

impl Stage {
    /// Verifies `code` against `pattern`, adding 0 to the code if it is missing.
    pub fn new(pattern: PatternSet, code: &BlockCode) -> Result<Self> {
        let inst = CoverInstance::from_pattern(&pattern, CandidateRange::Nonneg)?;
        Self::from_certificate(pattern, verify_complement(&inst, code)?.into_result()?)
    }

    /// Any non-negative complement contains 0, since the target 0 can only be
    /// reached as `0 + 0`; blocks of zeros therefore always decompose.
    fn from_certificate(pattern: PatternSet, cert: CoverCertificate) -> Result<Self> {
        if cert.instance().range() != CandidateRange::Nonneg || !cert.solution().is_nonnegative() {
            return Err(Error::InvalidInput(
                "fractal stages need a non-negative complement".into(),
            ));
        }
        if !cert.is_sound() {
            return Err(Error::InvalidInput("certificate does not re-verify".into()));
        }
        debug_assert!(cert.solution().contains(0));
        Ok(Self {
            pattern,
            certificate: cert,
        })
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u32 {
        self.pattern.k()
    }

    pub fn pattern(&self) -> &PatternSet {
        &self.pattern
    }

    pub fn code(&self) -> &BlockCode {
        self.certificate.solution()
    }

    pub fn certificate(&self) -> &CoverCertificate {
        &self.certificate
    }

    pub fn gamma(&self) -> Gamma {
        gamma_of(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Uniform,
    Quadratic,
}

/// A finite schedule of stages. Uniform specs repeat their single stage
/// forever; quadratic specs have stage `k` of length `2k − 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractalSpec {
    kind: SpecKind,
    stages: Vec<Stage>,
}

impl FractalSpec {
    pub fn kind(&self) -> SpecKind {
        self.kind
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// The stage used for block number `i` (0-based).
    pub fn stage(&self, i: usize) -> Option<&Stage> {
        match self.kind {
            SpecKind::Uniform => self.stages.first(),
            SpecKind::Quadratic => self.stages.get(i),
        }
    }

    /// Number of blocks needed to consume at least `digits` digits.
    pub fn stages_for_depth(&self, digits: u32) -> Result<usize> {
        let mut consumed = 0u32;
        let mut i = 0usize;
        while consumed < digits {
            let st = self.stage(i).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "spec has {} digits, {digits} requested",
                    self.total_digits().unwrap_or(0)
                ))
            })?;
            consumed += st.len();
            i += 1;
        }
        Ok(i)
    }

    /// Digits consumed by the first `stages` blocks.
    pub fn digits_for_stages(&self, stages: usize) -> Result<u32> {
        (0..stages)
            .map(|i| {
                self.stage(i)
                    .map(Stage::len)
                    .ok_or_else(|| Error::InvalidInput(format!("spec has no stage {}", i + 1)))
            })
            .sum()
    }

    /// Total digits of a finite schedule; `None` for uniform specs.
    pub fn total_digits(&self) -> Option<u32> {
        match self.kind {
            SpecKind::Uniform => None,
            SpecKind::Quadratic => Some(self.stages.iter().map(Stage::len).sum()),
        }
    }

    /// Reassembles a spec from verified stages, checking the schedule shape.
    pub fn from_stages(kind: SpecKind, stages: Vec<Stage>) -> Result<Self> {
        let ok = match kind {
            SpecKind::Uniform => stages.len() == 1,
            SpecKind::Quadratic => {
                !stages.is_empty()
                    && stages.iter().enumerate().all(|(i, s)| s.len() == 2 * i as u32 + 1)
            }
        };
        if !ok {
            return Err(Error::InvalidInput(format!("stage lengths do not fit a {kind:?} schedule")));
        }
        Ok(Self { kind, stages })
    }

    /// Re-checks every stored certificate.
    pub fn verify(&self) -> bool {
        self.stages.iter().all(|s| {
            s.certificate.is_sound()
                && CoverInstance::from_pattern(&s.pattern, CandidateRange::Nonneg)
                    .is_ok_and(|inst| &inst == s.certificate.instance())
        })
    }
}

/// Uniform spec from a complement of `C_k = {0,1}^k`.
pub fn build_uniform_spec(cert: &CoverCertificate) -> Result<FractalSpec> {
    let k = cert.instance().k();
    let pattern = PatternSet::half_cantor(k)?;
    if cert.instance() != &CoverInstance::half_cantor(k)? {
        return Err(Error::InvalidInput(
            "certificate is not for the digits-{0,1} base set".into(),
        ));
    }
    Ok(FractalSpec {
        kind: SpecKind::Uniform,
        stages: vec![Stage::from_certificate(pattern, cert.clone())?],
    })
}

/// `m_k = k²`, the digit position where stage `k` ends.
pub fn quadratic_end(k: u32) -> u32 {
    k * k
}

/// Base pattern of quadratic stage `k ≥ 1`: the digit with `3^j` weight sits at
/// global position `m_k − j` and may be 1 only if that position is in `A`.
pub fn density_stage_pattern(a: &crate::density::APrefix, k: u32) -> Result<PatternSet> {
    let m = quadratic_end(k);
    PatternSet::binary_where(2 * k - 1, |j| a.contains((m - j) as u64))
}

/// Quadratic spec for the density set of `params`, one complement per stage.
pub fn build_density_spec(
    params: &DensityParams,
    stages: u32,
    mut solver: impl FnMut(&CoverInstance) -> Result<CoverCertificate>,
) -> Result<FractalSpec> {
    if stages == 0 {
        return Err(Error::InvalidInput("need at least one stage".into()));
    }
    let a = crate::density::a_prefix(params, quadratic_end(stages) as u64)?;
    let mut out = Vec::with_capacity(stages as usize);
    for k in 1..=stages {
        let pattern = density_stage_pattern(&a, k)?;
        let inst = CoverInstance::from_pattern(&pattern, CandidateRange::Nonneg)?;
        let cert = solver(&inst)?;
        if cert.instance() != &inst {
            return Err(Error::InvalidInput(format!(
                "solver answered a different instance at stage {k}"
            )));
        }
        out.push(Stage::from_certificate(pattern, cert)?);
    }
    Ok(FractalSpec {
        kind: SpecKind::Quadratic,
        stages: out,
    })
}

/// `γ = log|B| / (n·log 3)` with the exact pair `(|B|, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gamma {
    pub size: usize,
    pub n: u32,
    pub value: f64,
}

pub fn gamma_of(stage: &Stage) -> Gamma {
    gamma_from_size(stage.code().len(), stage.len())
}

pub fn gamma_from_size(size: usize, n: u32) -> Gamma {
    Gamma {
        size,
        n,
        value: (size as f64).ln() / (n as f64 * 3f64.ln()),
    }
}

/// `coeff · log₃(base)`, kept exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Log3 {
    pub coeff: Rational64,
    pub base: u64,
}

impl Log3 {
    pub fn to_f64(self) -> f64 {
        let c = *self.coeff.numer() as f64 / *self.coeff.denom() as f64;
        c * (self.base as f64).ln() / 3f64.ln()
    }
}

/// `log₃` of the cover sum `|B|^n · 3^γ · 3^{−k n γ}`.
///
/// With `γ = log₃|B| / k` every term is a multiple of `log₃|B|`, and the
/// coefficient `n + 1/k − n` collapses to `1/k`, i.e. the sum is `3^γ`.
pub fn measure_bound(spec: &FractalSpec, n: u32) -> Result<Log3> {
    let stage = uniform_stage(spec)?;
    let k = stage.len() as i64;
    let n = n as i64;
    let coeff = Rational64::from_integer(n) + Rational64::new(1, k)
        - Rational64::from_integer(k * n) * Rational64::new(1, k);
    Ok(Log3 {
        coeff,
        base: stage.code().len() as u64,
    })
}

/// `|B|^n · 3^s · 3^{−k n s}` for an arbitrary exponent `s`.
pub fn cover_sum(spec: &FractalSpec, n: u32, s: f64) -> Result<f64> {
    let stage = uniform_stage(spec)?;
    let k = stage.len() as f64;
    let n = n as f64;
    let log3 = n * (stage.code().len() as f64).ln() / 3f64.ln() + s - k * n * s;
    Ok(3f64.powf(log3))
}

fn uniform_stage(spec: &FractalSpec) -> Result<&Stage> {
    match spec.kind {
        SpecKind::Uniform => Ok(&spec.stages[0]),
        SpecKind::Quadratic => Err(Error::InvalidInput("needs a uniform spec".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageDescription {
    pub stage: u32,
    pub m: u32,
    pub code_size: usize,
    /// `Σ_{j ≤ stage} log₃|B_j|`.
    pub code_digits: f64,
    /// `code_digits + 4·log₃ m`.
    pub total_digits: f64,
    /// `total_digits / m`.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionLedger {
    pub kind: SpecKind,
    pub gamma: Option<Gamma>,
    /// `1 − log₃2`.
    pub lower_bound: f64,
    /// `γ − (1 − log₃2)`.
    pub gap: Option<f64>,
    /// `log₃(greedy size bound)/k`, what a greedy code can be held to.
    pub greedy_gamma_bound: Option<f64>,
    pub descriptions: Vec<StageDescription>,
}

pub fn dimension_ledger(spec: &FractalSpec) -> DimensionLedger {
    let lower_bound = 1.0 - cantor_dimension();
    match spec.kind {
        SpecKind::Uniform => {
            let st = &spec.stages[0];
            let g = gamma_of(st);
            DimensionLedger {
                kind: spec.kind,
                gamma: Some(g),
                lower_bound,
                gap: Some(g.value - lower_bound),
                greedy_gamma_bound: Some(greedy_size_bound(st.len()).ln() / 3f64.ln() / st.len() as f64),
                descriptions: Vec::new(),
            }
        }
        SpecKind::Quadratic => {
            let mut acc = 0.0;
            let mut m = 0;
            let descriptions = spec
                .stages
                .iter()
                .enumerate()
                .map(|(i, st)| {
                    acc += (st.code().len() as f64).ln() / 3f64.ln();
                    m += st.len();
                    let total = acc + 4.0 * (m as f64).ln() / 3f64.ln();
                    StageDescription {
                        stage: i as u32 + 1,
                        m,
                        code_size: st.code().len(),
                        code_digits: acc,
                        total_digits: total,
                        rate: total / m as f64,
                    }
                })
                .collect();
            DimensionLedger {
                kind: spec.kind,
                gamma: None,
                lower_bound,
                gap: None,
                greedy_gamma_bound: None,
                descriptions,
            }
        }
    }
}

/// `x = Σ (a_i + b_i)/3^{m_i}` with `a_i ∈ C_i`, `b_i ∈ B_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionCertificate {
    /// The decomposed number (`1` is replaced by `0.22…2`).
    pub x: TernaryRational,
    pub stages: usize,
    pub digits: u32,
    pub block_lengths: Vec<u32>,
    pub a_blocks: Vec<i64>,
    pub b_blocks: Vec<i64>,
}

impl DecompositionCertificate {
    fn sum(&self, blocks: &[i64]) -> TernaryRational {
        let mut num = BigInt::zero();
        for (&v, &len) in blocks.iter().zip(&self.block_lengths) {
            num = num * pow3_big(len) + v;
        }
        TernaryRational::new(num, self.digits)
    }

    /// `Σ a_i/3^{m_i}`, a point of the half Cantor set.
    pub fn a_part(&self) -> TernaryRational {
        self.sum(&self.a_blocks)
    }

    /// `Σ b_i/3^{m_i}`, a point of `½E`.
    pub fn b_part(&self) -> TernaryRational {
        self.sum(&self.b_blocks)
    }

    /// Re-checks membership of every block and `a + b = x`.
    pub fn check(&self, spec: &FractalSpec) -> bool {
        let ok_blocks = (0..self.stages).all(|i| {
            spec.stage(i).is_some_and(|st| {
                st.len() == self.block_lengths[i]
                    && st.certificate.instance().base_set().contains(self.a_blocks[i])
                    && st.code().contains(self.b_blocks[i])
            })
        });
        ok_blocks && &self.a_part() + &self.b_part() == self.x
    }
}

/// Splits `x ∈ [0, 1]` into stage blocks and looks up each block's witness.
///
/// `depth` is in digits and is rounded up to the next stage boundary; `x`
/// must not have more digits than are consumed.
pub fn decompose(x: &TernaryRational, spec: &FractalSpec, depth: u32) -> Result<DecompositionCertificate> {
    let one = TernaryRational::integer(1);
    if x.is_negative() || x > &one {
        return Err(Error::InvalidInput(format!("x = {x} is outside [0, 1]")));
    }
    let stages = spec.stages_for_depth(depth.max(1))?;
    let digits = spec.digits_for_stages(stages)?;
    let x = if x == &one {
        TernaryRational::new(pow3_big(digits) - 1, digits)
    } else {
        x.clone()
    };
    if x.depth() > digits {
        return Err(Error::InvalidInput(format!(
            "x has {} digits but only {digits} are consumed",
            x.depth()
        )));
    }
    let mut rest = x.scaled_numerator(digits);
    let mut block_lengths = Vec::with_capacity(stages);
    let mut values = Vec::with_capacity(stages);
    for i in (0..stages).rev() {
        let len = spec.stage(i).map(Stage::len).unwrap_or(0);
        let p = pow3_big(len);
        let v = (&rest % &p).to_i64().expect("block fits in i64");
        rest /= p;
        block_lengths.push(len);
        values.push(v);
    }
    block_lengths.reverse();
    values.reverse();
    let mut a_blocks = Vec::with_capacity(stages);
    let mut b_blocks = Vec::with_capacity(stages);
    for (i, &v) in values.iter().enumerate() {
        let st = spec.stage(i).expect("stage exists");
        assert!((0..pow3(st.len())).contains(&v), "block value out of range");
        let (a, b) = st.certificate.witness(v);
        a_blocks.push(a);
        b_blocks.push(b);
    }
    Ok(DecompositionCertificate {
        x,
        stages,
        digits,
        block_lengths,
        a_blocks,
        b_blocks,
    })
}

/// `x + r = 2 − y` with `x` in `C` and `y` in `E` (both doubled from the half
/// sets), up to a residual in `[0, 2·3^{-digits}]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectCertificate {
    pub r: TernaryRational,
    pub inner: DecompositionCertificate,
    /// `2·Σ a_i/3^{m_i}`.
    pub x: TernaryRational,
    /// `2·Σ b_i/3^{m_i}`.
    pub y: TernaryRational,
    /// `(2 − r) − x − y`.
    pub residual: TernaryRational,
}

impl ReflectCertificate {
    /// The point `x + r`.
    pub fn point(&self) -> TernaryRational {
        &self.x + &self.r
    }

    /// Checks `x + r + y + residual = 2` and `0 ≤ residual ≤ 2·3^{-digits}`.
    pub fn check(&self, spec: &FractalSpec) -> bool {
        let two = TernaryRational::integer(2);
        let total = &(&self.point() + &self.y) + &self.residual;
        let cap = TernaryRational::new(2, self.inner.digits);
        self.inner.check(spec) && total == two && !self.residual.is_negative() && self.residual <= cap
    }
}

pub fn reflect_decompose(r: &TernaryRational, spec: &FractalSpec, depth: u32) -> Result<ReflectCertificate> {
    let two = TernaryRational::integer(2);
    if r.is_negative() || r > &two {
        return Err(Error::InvalidInput(format!("r = {r} is outside [0, 2]")));
    }
    let stages = spec.stages_for_depth(depth.max(1))?;
    let digits = spec.digits_for_stages(stages)?;
    let reflected = &two - r;
    // z = ⌊(2 − r)/2 · 3^d⌋ / 3^d
    let scaled = if reflected.depth() <= digits {
        reflected.scaled_numerator(digits)
    } else {
        reflected.truncate(digits).scaled_numerator(digits)
    };
    let z = TernaryRational::new(scaled / 2, digits);
    let inner = decompose(&z, spec, digits)?;
    let x = &inner.a_part() * 2;
    let y = &inner.b_part() * 2;
    let residual = &(&reflected - &x) - &y;
    Ok(ReflectCertificate {
        r: r.clone(),
        inner,
        x,
        y,
        residual,
    })
}
