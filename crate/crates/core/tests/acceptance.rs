//! Acceptance criteria 1–12. Prints one line per criterion and exits non-zero
//! if any fails.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use complement_forge::catalog::seed_entries;
use complement_forge::complement::{
    exact_min_complement, greedy_complement, greedy_size_bound, product_probe, verify_complement,
    Budget, CoverInstance, Optimality, Verification,
};
use complement_forge::density::{
    a_prefix, a_prefix_from_rational, best_rational, cantor_dimension, complement_enum,
    description_length, measured_encoding_constant, ComplementEnum, DensityParams,
};
use complement_forge::fractal::{
    build_density_spec, build_uniform_spec, decompose, gamma_of, measure_bound,
    reflect_decompose, FractalSpec,
};
use complement_forge::measure::{
    box_dim_estimate, cantor_counter, density_counter, entropy3, marstrand_harness, mass_ratio,
    net_measure, net_measure_exhaustive, sample_half_cantor, spec_counter, DyadicInterval,
    DyadicUnion, FrequencyVector,
};
use complement_forge::ternary::{BlockCode, TernaryRational};
use num_rational::{Ratio, Rational64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHAS: [&str; 4] = ["0.7", "0.75", "0.8", "0.9"];

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn seed_codes() -> Result<Vec<BlockCode>, String> {
    seed_entries()
        .map_err(err)?
        .iter()
        .map(|e| e.certificate().map(|c| c.solution().clone()).map_err(err))
        .collect()
}

fn uniform_spec(code: &BlockCode) -> Result<FractalSpec, String> {
    let inst = CoverInstance::half_cantor(code.k()).map_err(err)?;
    let cert = verify_complement(&inst, code).map_err(err)?.into_result().map_err(err)?;
    build_uniform_spec(&cert).map_err(err)
}

fn criterion_1() -> Outcome {
    let mut sizes = Vec::new();
    for k in 1..=4u32 {
        let inst = CoverInstance::half_cantor(k).map_err(err)?;
        let start = Instant::now();
        let out = exact_min_complement(&inst, Budget::seconds(60)).map_err(err)?;
        let took = start.elapsed();
        let limit = if k <= 3 { Duration::from_secs(1) } else { Duration::from_secs(60) };
        if out.certificate.optimal() != Optimality::ProvenOptimal || took > limit {
            return Err(format!("k={k}: {:?} after {took:?}", out.certificate.optimal()));
        }
        sizes.push(out.certificate.size());
    }
    if sizes != [2, 3, 5, 9] {
        return Err(format!("sizes {sizes:?}"));
    }
    let inst = CoverInstance::half_cantor(5).map_err(err)?;
    let out = exact_min_complement(&inst, Budget::default()).map_err(err)?;
    let size = out.certificate.size();
    if size < 14 {
        return Err(format!(
            "k=5 found size {size} < 14, contradicting the published optimum; code {}",
            out.certificate.solution()
        ));
    }
    let status = out.certificate.optimal();
    check(
        (size == 14 && status == Optimality::ProvenOptimal) || status == Optimality::Unknown,
        format!(
            "sizes 2,3,5,9 proven; k=5 size {size} {status} ({} nodes, {} ms)",
            out.stats.nodes, out.stats.elapsed_ms
        ),
        format!("k=5 size {size} status {status}"),
    )
}

fn criterion_2() -> Outcome {
    let codes = seed_codes()?;
    for b in &codes {
        let inst = CoverInstance::half_cantor(b.k()).map_err(err)?;
        if !matches!(verify_complement(&inst, b).map_err(err)?, Verification::Covered(_)) {
            return Err(format!("B{} fails", b.k()));
        }
    }
    let b3 = &codes[2];
    let inst = CoverInstance::half_cantor(3).map_err(err)?;
    let mut caught = 0;
    for &v in b3.values() {
        if let Verification::Uncovered(u) = verify_complement(&inst, &b3.without_value(v)).map_err(err)? {
            caught += !u.is_empty() as usize;
        }
    }
    check(
        caught == b3.len(),
        format!("B1..B5 verify; all {caught} single-element deletions from B3 rejected"),
        format!("only {caught} of {} deletions rejected", b3.len()),
    )
}

fn criterion_3() -> Outcome {
    let codes = seed_codes()?;
    let catalog: HashMap<u32, (BlockCode, Optimality)> = codes
        .into_iter()
        .map(|b| (b.k(), (b, Optimality::ProvenOptimal)))
        .collect();
    let p22 = product_probe(2, 2, &catalog).map_err(err)?;
    let p23 = product_probe(2, 3, &catalog).map_err(err)?;
    check(
        p22.product_valid
            && p22.product_size == 9
            && p22.product_optimal == Some(true)
            && p23.product_valid
            && p23.product_size == 15
            && p23.product_optimal == Some(false),
        format!(
            "|B2⊕B2| = {} = optimum; |B2⊕B3| = {} > {}",
            p22.product_size, p23.product_size, p23.best_size
        ),
        format!("{p22:?} {p23:?}"),
    )
}

fn criterion_4() -> Outcome {
    let codes = seed_codes()?;
    let g3 = gamma_of(&uniform_spec(&codes[2])?.stages()[0]).value;
    let dim = cantor_dimension();
    let v = FrequencyVector::new([Ratio::new(0, 1), Ratio::new(1, 3), Ratio::new(2, 3)]).map_err(err)?;
    let h = entropy3(&v);
    let closed = 1.0 - 2.0 / 3.0 * (2f64.ln() / 3f64.ln());
    let r4 = |x: f64| (x * 1e4).round() / 1e4;
    check(
        r4(g3) == 0.4883 && r4(dim) == 0.6309 && (h - closed).abs() < 1e-12,
        format!("γ3 = {g3:.6}, dim C = {dim:.6}, H = {h:.12} (|ΔH| = {:.1e})", (h - closed).abs()),
        format!("γ3 = {g3}, dim C = {dim}, H = {h}"),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let floor = 1.0 - cantor_dimension();
    let mut gaps = Vec::new();
    let mut sizes = Vec::new();
    for k in 1..=12u32 {
        let cert = greedy_complement(&CoverInstance::half_cantor(k).map_err(err)?).map_err(err)?;
        let size = cert.size();
        if size as f64 > greedy_size_bound(k) {
            return Err(format!("k={k}: {size} exceeds {:.1}", greedy_size_bound(k)));
        }
        sizes.push(size);
        gaps.push((size as f64).ln() / (k as f64 * 3f64.ln()) - floor);
    }
    // Least-squares slope of the gap against k.
    let n = gaps.len() as f64;
    let mk = (n + 1.0) / 2.0;
    let mg = gaps.iter().sum::<f64>() / n;
    let slope = gaps
        .iter()
        .enumerate()
        .map(|(i, g)| (i as f64 + 1.0 - mk) * (g - mg))
        .sum::<f64>()
        / gaps.iter().enumerate().map(|(i, _)| (i as f64 + 1.0 - mk).powi(2)).sum::<f64>();
    let took = start.elapsed();
    check(
        gaps[9] < 0.25 && slope < 0.0 && took < Duration::from_secs(300),
        format!(
            "sizes {sizes:?} within bound; gap(10) = {:.4}, slope {slope:.4}, {:.1} s",
            gaps[9],
            took.as_secs_f64()
        ),
        format!("gap(10) = {}, slope {slope}, {took:?}", gaps[9]),
    )
}

fn criterion_6() -> Outcome {
    for b in seed_codes()? {
        let spec = uniform_spec(&b)?;
        for n in 1..=50 {
            let m = measure_bound(&spec, n).map_err(err)?;
            // 3^γ with γ = log₃|B| / k.
            if m.coeff != Rational64::new(1, b.k() as i64) || m.base != b.len() as u64 {
                return Err(format!("k={} n={n}: {m:?}", b.k()));
            }
        }
    }
    Ok("log₃ of the cover sum is (1/k)·log₃|B_k| for k ≤ 5, n = 1..50".into())
}

fn random_fraction(rng: &mut ChaCha8Rng, digits: usize) -> Vec<u8> {
    (0..digits).map(|_| rng.gen_range(0..3)).collect()
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let uniform = uniform_spec(&seed_codes()?[2])?;
    let params = DensityParams::from_alpha_str("0.8").map_err(err)?;
    let quadratic = build_density_spec(&params, 4, greedy_complement).map_err(err)?;
    for _ in 0..1000 {
        let x = TernaryRational::from_digits(0, &random_fraction(&mut rng, 45));
        let c = decompose(&x, &uniform, 45).map_err(err)?;
        if !c.check(&uniform) || c.digits != 45 {
            return Err(format!("uniform round trip failed at {x}"));
        }
        let x = TernaryRational::from_digits(0, &random_fraction(&mut rng, 16));
        let c = decompose(&x, &quadratic, 16).map_err(err)?;
        if !c.check(&quadratic) || c.stages != 4 {
            return Err(format!("quadratic round trip failed at {x}"));
        }
    }
    for i in 0..100 {
        let r = if i == 0 {
            TernaryRational::integer(2)
        } else {
            let whole = rng.gen_range(0..2);
            TernaryRational::from_digits(whole, &random_fraction(&mut rng, 45))
        };
        let c = reflect_decompose(&r, &uniform, 45).map_err(err)?;
        if !c.check(&uniform) {
            return Err(format!("reflection failed at r = {r}"));
        }
    }
    Ok("1000 points at depth 45 (k=3) and 16 (quadratic, 4 stages) exact; 100 reflections exact".into())
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let n = 10_000u64;
    let log_n = (n as f64).ln() / 3f64.ln();
    let mut notes = Vec::new();
    for a in ALPHAS {
        let p = DensityParams::from_alpha_str(a).map_err(err)?;
        let (r, s) = best_rational(&p, n).map_err(err)?;
        let direct = a_prefix(&p, n).map_err(err)?;
        let encoded = a_prefix_from_rational(r, s, n).map_err(err)?;
        if direct.bits != encoded.bits {
            return Err(format!("α={a}: A[n] differs for r/s = {r}/{s}"));
        }
        let c0 = measured_encoding_constant(&p, 100).map_err(err)?;
        let d = description_length(&p, n).map_err(err)?;
        if d.length as f64 > 4.0 * log_n + c0 + 1e-9 {
            return Err(format!("α={a}: length {} > 4·log₃n + {c0:.3}", d.length));
        }
        notes.push(format!("α={a}: {r}/{s}, {} ≤ {:.2}+{c0:.2}", d.length, 4.0 * log_n));
    }
    let took = start.elapsed();
    check(
        took < Duration::from_secs(30),
        format!("{} ({:.1} s)", notes.join("; "), took.as_secs_f64()),
        format!("took {took:?}"),
    )
}

fn criterion_9() -> Outcome {
    let mut notes = Vec::new();
    for a in ALPHAS {
        let p = DensityParams::from_alpha_str(a).map_err(err)?;
        let run = |count| match complement_enum(&p, count) {
            Ok(ComplementEnum::Listed { u, t, one_minus_density, .. }) => Ok((u, t, one_minus_density)),
            Ok(ComplementEnum::Empty) => Err("complement unexpectedly empty".to_string()),
            Err(e) => Err(err(e)),
        };
        let (u1, t1, c) = run(10_000)?;
        let (_, t2, _) = run(20_000)?;
        let dev = (10_000.0 / u1[9_999] as f64 - c).abs();
        if t2 > t1 || dev >= 1e-3 {
            return Err(format!("α={a}: t {t1} → {t2}, |n/u_n − (1−D)| = {dev:.2e}"));
        }
        notes.push(format!("α={a}: t={t1}, dev {dev:.1e}"));
    }
    Ok(notes.join("; "))
}

fn criterion_10() -> Outcome {
    let summary = marstrand_harness(10, 200).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0f64;
    for _ in 0..200 {
        let level = rng.gen_range(0..=5u32);
        let atoms: Vec<DyadicInterval> = (0..1u64 << level)
            .filter(|_| rng.gen_bool(0.4))
            .map(|i| DyadicInterval::new(level, i).expect("valid interval"))
            .collect();
        let u = DyadicUnion::at_level(&atoms, level).map_err(err)?;
        let t = rng.gen_range(0.05..=1.0);
        let dl = rng.gen_range(0..=level);
        let dp = net_measure(&u, t, dl).map_err(err)?;
        let brute = net_measure_exhaustive(&u, t, dl).map_err(err)?;
        worst = worst.max((dp - brute).abs());
    }
    check(
        summary.violations == 0 && summary.applicable > 0 && worst <= 1e-12,
        format!(
            "{} trials, hypothesis held in {}, 0 violations; DP = exhaustive (max |Δ| {worst:.1e})",
            summary.trials, summary.applicable
        ),
        format!("{summary:?}, max |Δ| {worst:e}"),
    )
}

fn criterion_11() -> Outcome {
    let p = DensityParams::from_alpha_str("0.8").map_err(err)?;
    let mut max_ratio = 0f64;
    let mut bound = 0f64;
    let mut t = 0;
    for bits in sample_half_cantor(11, 50, 60) {
        let r = mass_ratio(&p, &bits, 5..=15).map_err(err)?;
        if r.flagged {
            return Err("more than 4 intervals met N_δ(x)".into());
        }
        if !r.all_within() {
            return Err(format!("ratio above {:.4}", r.bound));
        }
        max_ratio = r.rows.iter().map(|x| x.ratio).fold(max_ratio, f64::max);
        bound = r.bound;
        t = r.t;
    }
    Ok(format!("50 points, f = 5..15: max ratio {max_ratio:.4} ≤ {bound:.4} (t = {t}); never more than 4 intervals"))
}

fn criterion_12() -> Outcome {
    let scales: Vec<u64> = (1..=200).collect();
    let c = box_dim_estimate(cantor_counter, &scales).map_err(err)?;
    let c_exact = c.estimates.iter().all(|e| e.exact == vec![(Ratio::from_integer(1), 2)]);
    let spec = uniform_spec(&seed_codes()?[2])?;
    let e_scales: Vec<u64> = (1..=60).map(|n| 3 * n).collect();
    let e = box_dim_estimate(spec_counter(&spec), &e_scales).map_err(err)?;
    let e_exact = e.estimates.iter().all(|x| x.exact == vec![(Ratio::new(1, 3), 5)]);
    let p = DensityParams::from_alpha_str("0.8").map_err(err)?;
    let ca = box_dim_estimate(density_counter(&p), &[10_000]).map_err(err)?;
    let v = ca.estimates[0].value;
    check(
        c_exact && e_exact && (v - 0.2).abs() < 1e-2,
        format!("C: exactly log₃2; E3: exactly (1/3)·log₃5; C_A at 10⁴: {v:.5}"),
        format!("C exact {c_exact}, E3 exact {e_exact}, C_A {v}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("optimal complement sizes", criterion_1),
        ("seed block sets verify", criterion_2),
        ("product probe", criterion_3),
        ("dimension constants", criterion_4),
        ("greedy bound", criterion_5),
        ("measure-bound identity", criterion_6),
        ("decomposition round-trip", criterion_7),
        ("density encoding", criterion_8),
        ("complement enumeration", criterion_9),
        ("Marstrand harness", criterion_10),
        ("mass-ratio bound", criterion_11),
        ("box-dimension estimates", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 12 acceptance criteria passed");
}
