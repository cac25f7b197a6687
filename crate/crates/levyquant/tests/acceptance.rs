//! Acceptance suite: one test per claim, each printing a PASS line with the
//! measured numbers (run with `--nocapture` to see them).
//!
//! The asymptotic statements are checked at desk scale: pinned closed-form
//! targets at the largest schedule point plus convergence or monotonicity
//! along the schedule. Monte Carlo assertions use fixed seeds, so every run
//! is bit-reproducible. Expects an optimized test profile; the workspace
//! sets `profile.test` accordingly.

use std::collections::BTreeMap;

use levyquant::asymptotics::{epi_upper_bound, stable_h_closed, zeta_stable, zeta_stable_with_h};
use levyquant::codec::{decode, encode, rate_report};
use levyquant::entropy::{
    compound_density_an, estimate_hmn, hmn_from_histogram, quantized_entropy_identity_gap,
    renyi_quantized_prediction, tv_distance, Correction, DensityGrid,
};
use levyquant::models::{AmplitudeLaw, ModelSpec, PoissonParams, StableParams};
use levyquant::quant::{quantize, quantize_block, CellPmf, EmpiricalPmf};
use levyquant::sampling::{
    sample_increment, sample_increments, sample_model_x0, shift_b_n, IncrementSpec, RngStream,
};
use levyquant::stats::ks_two_sample;

const SEED: u64 = 0x1EAF;
const H_GAUSS_UNIT: f64 = 1.4189385332046727; // (1/2) ln(2 pi e)

fn gaussian_lk() -> ModelSpec {
    ModelSpec::GaussianLk { sigma: 1.0, mu: 0.0 }
}

fn cauchy() -> StableParams {
    StableParams::symmetric(1.0, 1.0).unwrap()
}

fn poisson_uniform(lambda: f64) -> ModelSpec {
    ModelSpec::ImpulsivePoisson(
        PoissonParams::new(lambda, AmplitudeLaw::uniform(0.0, 1.0)).unwrap(),
    )
}

/// Independent quadrature oracle for the Cauchy entropy log(4 pi sigma),
/// via the substitution x = tan(theta).
fn cauchy_entropy_oracle() -> f64 {
    let steps = 400_000;
    let mut h = 0.0;
    for i in 0..steps {
        let th = (i as f64 + 0.5) / steps as f64 * std::f64::consts::PI
            - std::f64::consts::FRAC_PI_2;
        let x = th.tan();
        let p = std::f64::consts::FRAC_1_PI / (1.0 + x * x);
        h -= p * p.ln() * (1.0 + x * x) * std::f64::consts::PI / steps as f64;
    }
    h
}

struct MeasuredPoint {
    n: u64,
    m: f64,
    residual: f64,
    se: f64,
}

/// Measure `H/kappa - log m - zeta_target(n)` along a schedule.
fn measure_residuals(
    model: &ModelSpec,
    points: &[(u64, u64)],
    samples: usize,
    zeta_target: impl Fn(u64) -> f64,
    kappa_of: impl Fn(u64) -> f64,
    stream_base: u64,
) -> Vec<MeasuredPoint> {
    points
        .iter()
        .enumerate()
        .map(|(idx, &(n, m))| {
            let mf = m as f64;
            let est = estimate_hmn(
                model,
                mf,
                n,
                samples,
                RngStream::new(SEED, stream_base + idx as u64),
                Correction::MillerMadow,
            )
            .unwrap();
            let k = kappa_of(n);
            MeasuredPoint {
                n,
                m: mf,
                residual: est.entropy.value / k - mf.ln() - zeta_target(n),
                se: est.entropy.std_error / k,
            }
        })
        .collect()
}

#[test]
fn c01_gaussian_asymptote() {
    let points = [(1u64, 64u64), (4, 128), (16, 256)];
    let rows = measure_residuals(
        &gaussian_lk(),
        &points,
        2_000_000,
        |n| zeta_stable_with_h(H_GAUSS_UNIT, 2.0, n),
        |n| n as f64,
        100,
    );
    let last = rows.last().unwrap();
    assert!(
        last.residual.abs() < 0.02,
        "largest-point residual {:+.5}",
        last.residual
    );
    // This schedule keeps m/sqrt(n) constant, so the exact residuals are
    // equal at every point by the quantizer scaling identity; non-increase
    // is asserted up to 3 sigma of the paired estimates.
    for w in rows.windows(2) {
        assert!(
            w[1].residual <= w[0].residual + 3.0 * (w[0].se + w[1].se),
            "residuals increased: {:+.5} -> {:+.5}",
            w[0].residual,
            w[1].residual
        );
    }
    println!(
        "criterion 01 gaussian asymptote: PASS (residuals {:?})",
        rows.iter().map(|r| r.residual).collect::<Vec<_>>()
    );
}

#[test]
fn c02_cauchy_asymptote() {
    let p = cauchy();
    assert_eq!(shift_b_n(&p, 7), 0.0, "symmetric Cauchy has b_n = 0");
    let target = cauchy_entropy_oracle();
    assert!((target - (4.0 * std::f64::consts::PI).ln()).abs() < 2e-5);
    // Implementation route must agree with the oracle before it is used in
    // reports (cf inversion + quadrature vs closed form).
    let z = zeta_stable(&p, 1).unwrap();
    assert!((z - target).abs() < 2e-3, "cf-route zeta {z} vs {target}");

    let points = [(1u64, 64u64), (4, 512), (16, 4096)];
    let rows = measure_residuals(
        &ModelSpec::Stable(p),
        &points,
        2_000_000,
        |n| target - (n as f64).ln(),
        |n| n as f64,
        200,
    );
    let last = rows.last().unwrap();
    assert!(
        last.residual.abs() < 0.03,
        "largest-point residual {:+.5}",
        last.residual
    );
    println!(
        "criterion 02 cauchy asymptote: PASS (residuals {:?})",
        rows.iter().map(|r| r.residual).collect::<Vec<_>>()
    );
}

#[test]
fn c03_poisson_asymptote() {
    let lambda = 1.0;
    let points = [(4u64, 256u64), (16, 256), (64, 256)];
    let kappa = |n: u64| n as f64 * (1.0 - (-lambda / n as f64).exp());
    let rows = measure_residuals(
        &poisson_uniform(lambda),
        &points,
        4_000_000,
        // zeta(n) = log n + h(A) - log lambda + 1 = log n + 1, so the
        // asserted bracket is H/kappa - log(mn) - 1.
        |n| (n as f64).ln() + 1.0,
        kappa,
        300,
    );
    let last = rows.last().unwrap();
    assert!(
        last.residual.abs() < 0.05,
        "largest-point residual {:+.5} (n={}, m={})",
        last.residual,
        last.n,
        last.m
    );
    println!(
        "criterion 03 poisson asymptote: PASS (residuals {:?})",
        rows.iter().map(|r| r.residual).collect::<Vec<_>>()
    );
}

#[test]
fn c04_atom_detection() {
    let p = PoissonParams::new(1.0, AmplitudeLaw::uniform(0.0, 1.0)).unwrap();
    let draws = 1_000_000usize;
    for (idx, n) in [1u64, 4].into_iter().enumerate() {
        let mut rng = RngStream::new(SEED, 400 + idx as u64).rng();
        let zeros = (0..draws)
            .filter(|_| levyquant::sampling::sample_poisson_increment(&p, n, &mut rng) == 0.0)
            .count();
        let frac = zeros as f64 / draws as f64;
        let expect = (-1.0 / n as f64).exp();
        let sigma = (expect * (1.0 - expect) / draws as f64).sqrt();
        assert!(
            (frac - expect).abs() <= 4.0 * sigma,
            "n={n}: zero fraction {frac:.6} vs {expect:.6} (4 sigma = {:.6})",
            4.0 * sigma
        );
        println!(
            "criterion 04 atom detection n={n}: PASS ({frac:.6} vs {expect:.6} +-{:.6})",
            4.0 * sigma
        );
    }
}

#[test]
fn c05_tv_bound() {
    let p_a = DensityGrid::from_fn_normalized(-0.5, 1.5, 2001, |x| {
        if (0.0..1.0).contains(&x) {
            1.0
        } else {
            0.0
        }
    })
    .unwrap();
    let mut previous = f64::INFINITY;
    for n in [2u64, 10, 100] {
        let r = 1.0 / n as f64;
        let an = compound_density_an(&p_a, 1.0, n, 40).unwrap();
        let tv = tv_distance(&an.grid, &p_a, true).unwrap();
        let bound = 2.0 * (r.exp() - r - 1.0) / r.exp_m1();
        assert!(
            tv <= bound + 1e-3,
            "lambda/n = {r}: tv {tv:.6} above bound {bound:.6}"
        );
        assert!(tv < previous, "tv not decreasing in n at lambda/n = {r}");
        previous = tv;
        println!("criterion 05 tv bound lambda/n={r}: PASS (tv {tv:.6} <= {bound:.6})");
    }
}

#[test]
fn c06_infinite_divisibility() {
    let models = [
        ("gaussian", gaussian_lk()),
        ("cauchy", ModelSpec::Stable(cauchy())),
        (
            "stable_1_5",
            ModelSpec::Stable(StableParams::symmetric(1.5, 1.0).unwrap()),
        ),
        ("poisson_uniform", poisson_uniform(1.0)),
    ];
    let samples = 100_000usize;
    for (mi, (name, model)) in models.iter().enumerate() {
        for (ni, n) in [4u64, 16].into_iter().enumerate() {
            let stream = RngStream::new(SEED, 500 + 16 * mi as u64 + 2 * ni as u64);
            let mut rng = stream.rng();
            let sums: Vec<f64> = (0..samples)
                .map(|_| (0..n).map(|_| sample_increment(model, n, &mut rng)).sum())
                .collect();
            let mut rng = stream.substream(1).rng();
            let direct: Vec<f64> = (0..samples).map(|_| sample_model_x0(model, &mut rng)).collect();
            let ks = ks_two_sample(&sums, &direct);
            assert!(
                !ks.rejects_at(0.001),
                "{name} n={n}: KS D={:.5} p={:.5}",
                ks.statistic,
                ks.p_value
            );
            println!(
                "criterion 06 infinite divisibility {name} n={n}: PASS (p={:.4})",
                ks.p_value
            );
        }
    }

    // Stable scaling as a distributional identity: rescaled increments
    // match X_0 draws.
    let p = StableParams::symmetric(1.5, 1.0).unwrap();
    let stream = RngStream::new(SEED, 560);
    let mut rng = stream.rng();
    let n = 16u64;
    let rescaled: Vec<f64> = (0..samples)
        .map(|_| {
            levyquant::sampling::sample_stable_increment(&p, n, &mut rng)
                * (n as f64).powf(1.0 / p.alpha)
                + shift_b_n(&p, n)
        })
        .collect();
    let mut rng = stream.substream(1).rng();
    let direct: Vec<f64> = (0..samples)
        .map(|_| levyquant::sampling::sample_stable_x0(&p, &mut rng))
        .collect();
    let ks = ks_two_sample(&rescaled, &direct);
    assert!(!ks.rejects_at(0.001), "scaling identity p={}", ks.p_value);
    println!(
        "criterion 06 stable scaling identity: PASS (p={:.4})",
        ks.p_value
    );
}

#[test]
fn c07_quantizer_identities() {
    // Pointwise scaling identity on 1e6 random triples.
    let mut rng = RngStream::new(SEED, 600).rng();
    use rand::Rng;
    for _ in 0..1_000_000 {
        let x: f64 = rng.random_range(-100.0..100.0);
        let a: f64 = rng.random_range(0.01..10.0);
        let m: f64 = rng.random_range(0.1..50.0);
        let lhs = quantize(a * x, m / a).unwrap();
        let rhs = quantize(x, m).unwrap();
        assert_eq!(lhs.i, rhs.i, "x={x} a={a} m={m}");
    }

    // Lemma-1 identity to 1e-10 on 100 random exact pmfs.
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let support = rng.random_range(1usize..40);
        let m: f64 = rng.random_range(0.5..100.0);
        let mut probs = BTreeMap::new();
        let mut total = 0.0;
        for _ in 0..support {
            let i: i64 = rng.random_range(-1000..1000);
            let w: f64 = rng.random_range(0.01..1.0);
            *probs.entry(i).or_insert(0.0) += w;
            total += w;
        }
        for v in probs.values_mut() {
            *v /= total;
        }
        let pmf = CellPmf::new(m, probs).unwrap();
        worst = worst.max(quantized_entropy_identity_gap(&pmf).abs());
    }
    assert!(worst < 1e-10, "worst identity gap {worst:.3e}");
    println!("criterion 07 quantizer identities: PASS (worst gap {worst:.2e})");
}

#[test]
fn c08_renyi_decomposition() {
    let m = (1u64 << 14) as f64;
    for d in [0.25, 0.5, 0.9] {
        // Exact cell masses of (1-d) delta_0 + d U(0,1) at step 1/m:
        // cell 0 takes the atom plus d/(2m), cells 1..m-1 take d/m, cell m
        // takes d/(2m).
        let mi = m as i64;
        let mut probs: BTreeMap<i64, f64> = BTreeMap::new();
        probs.insert(0, (1.0 - d) + d / (2.0 * m));
        for i in 1..mi {
            probs.insert(i, d / m);
        }
        probs.insert(mi, d / (2.0 * m));
        let exact = CellPmf::new(m, probs).unwrap().entropy();
        let predicted = renyi_quantized_prediction(d, 0.0, 0.0, m);
        let gap = (exact - predicted).abs();
        assert!(gap < 0.01, "d={d}: gap {gap:.5}");
        println!("criterion 08 renyi d={d}: PASS (gap {gap:.2e})");
    }
}

#[test]
fn c09_comparison_ordering() {
    // (a) Poisson rates 1 vs 2: tail ratio near lambda1/lambda2 = 0.5.
    let schedule =
        levyquant::asymptotics::Schedule::new(vec![(4, 256), (16, 256), (64, 256)]).unwrap();
    let table = levyquant::asymptotics::compare_models(
        &poisson_uniform(1.0),
        &poisson_uniform(2.0),
        &schedule,
        4_000_000,
        RngStream::new(SEED, 700),
        Correction::MillerMadow,
    )
    .unwrap();
    let ratio = table.summary.final_ratio;
    assert!(
        (ratio - 0.5).abs() < 0.05,
        "poisson rate ratio {ratio:.4} not within 0.5 +- 0.05"
    );
    println!("criterion 09a poisson rate ratio: PASS ({ratio:.4})");

    // (b) Poisson vs Cauchy on a joint power-of-two schedule: the
    // discrete-continuous model is asymptotically more compressible, ratio
    // strictly decreasing over the tail.
    let joint =
        levyquant::asymptotics::Schedule::new(vec![(1, 64), (2, 256), (4, 1024), (8, 4096)])
            .unwrap();
    let table = levyquant::asymptotics::compare_models(
        &poisson_uniform(1.0),
        &ModelSpec::Stable(cauchy()),
        &joint,
        1_000_000,
        RngStream::new(SEED, 720),
        Correction::MillerMadow,
    )
    .unwrap();
    let ratios: Vec<f64> = table.rows.iter().map(|r| r.ratio).collect();
    assert!(
        ratios.windows(2).all(|w| w[1] < w[0]),
        "poisson/cauchy ratios not strictly decreasing: {ratios:?}"
    );
    println!("criterion 09b poisson vs cauchy: PASS (ratios {ratios:?})");

    // (c) Sum(Cauchy, Poisson) matches the pure-Cauchy offset; the jump
    // component's contribution fades like H2(lambda/n), so the schedule
    // runs deeper in n than criterion 2 before testing the 0.05 window.
    let sum_model = ModelSpec::Sum {
        stable: cauchy(),
        poisson: PoissonParams::new(1.0, AmplitudeLaw::uniform(0.0, 1.0)).unwrap(),
    };
    let target = cauchy_entropy_oracle();
    let points = [(16u64, 1024u64), (64, 8192), (256, 65536)];
    let rows = measure_residuals(
        &sum_model,
        &points,
        2_000_000,
        |n| target - (n as f64).ln(),
        |n| n as f64,
        740,
    );
    let residuals: Vec<f64> = rows.iter().map(|r| r.residual).collect();
    assert!(
        residuals.last().unwrap().abs() < 0.05,
        "sum-model residual {residuals:?}"
    );
    println!("criterion 09c sum model: PASS (residuals {residuals:?})");
}

/// Theorem-8 companion to criterion 9: for stable noises with
/// `alpha_1 < alpha_2`, the entropy-rate difference diverges to minus
/// infinity; asserted as a negative, strictly decreasing tail.
#[test]
fn stable_alpha_difference_trend() {
    let joint = levyquant::asymptotics::Schedule::new(vec![
        (2, 256),
        (4, 1024),
        (8, 4096),
        (16, 16384),
    ])
    .unwrap();
    let table = levyquant::asymptotics::compare_models(
        &ModelSpec::Stable(cauchy()),
        &ModelSpec::Stable(StableParams::symmetric(1.5, 1.0).unwrap()),
        &joint,
        1_000_000,
        RngStream::new(SEED, 760),
        Correction::MillerMadow,
    )
    .unwrap();
    let diffs: Vec<f64> = table.rows.iter().map(|r| r.diff).collect();
    let tail = &diffs[diffs.len() / 2..];
    assert!(
        tail.iter().all(|d| *d < 0.0),
        "tail differences not negative: {diffs:?}"
    );
    assert!(
        tail.windows(2).all(|w| w[1] < w[0]),
        "tail differences not decreasing: {diffs:?}"
    );
    assert!(
        table.summary.tail_diff_decreasing,
        "summary should flag the decreasing tail"
    );
    println!("criterion 09/thm8 stable alpha ordering: PASS (diffs {diffs:?})");
}

#[test]
fn c10_epi_bound() {
    // Gaussian: zeta(n) = h - (1/2) log n attains the EPI bound exactly.
    let gauss = StableParams::new(2.0, 0.0, std::f64::consts::FRAC_1_SQRT_2, 0.0).unwrap();
    let h_g = stable_h_closed(&gauss).unwrap();
    // Cauchy: zeta(n) = h - log n stays strictly below for n > 1.
    let h_c = stable_h_closed(&cauchy()).unwrap();
    for n in [1u64, 2, 4, 16, 64, 256, 1024] {
        let zg = zeta_stable_with_h(h_g, 2.0, n);
        let bound_g = epi_upper_bound(h_g, n);
        assert!(
            (zg - bound_g).abs() < 1e-9,
            "gaussian equality n={n}: {zg} vs {bound_g}"
        );
        let zc = zeta_stable_with_h(h_c, 1.0, n);
        assert!(zc <= epi_upper_bound(h_c, n) + 1e-12, "cauchy n={n}");
    }
    println!("criterion 10 epi bound: PASS");
}

#[test]
fn c11_operational_rate() {
    let cases = [
        ("gaussian", gaussian_lk(), 1u64, 1024u64),
        ("poisson", poisson_uniform(1.0), 4, 64),
    ];
    for (idx, (name, model, n, m)) in cases.iter().enumerate() {
        let spec = IncrementSpec::new(model.clone(), *n).unwrap();
        let xs = sample_increments(&spec, 1_000_000, RngStream::new(SEED, 800 + idx as u64));
        let (indices, pmf) = quantize_block(&xs, *m as f64).unwrap();
        let est = hmn_from_histogram(&pmf, *n, Correction::MillerMadow).unwrap();

        let stream = encode(&indices, *m as f64, *n as u32, SEED);
        let (header, decoded) = decode(&stream).unwrap();
        assert_eq!(decoded, indices, "{name}: lossless round-trip");
        assert_eq!(header.count as usize, indices.len());

        let rate = rate_report(&stream, &est.entropy).unwrap();
        let per_symbol_overhead = 64.0 * std::f64::consts::LN_2 * *n as f64 / 1_000_000.0;
        let budget = 0.02 * est.entropy.value + per_symbol_overhead;
        assert!(
            rate.gap_nats <= budget,
            "{name}: gap {:.5} nats above budget {:.5} (rate {:.5}, H {:.5})",
            rate.gap_nats,
            budget,
            rate.per_unit_time_nats,
            est.entropy.value
        );
        // No-free-lunch sanity: the coded rate cannot beat the entropy by
        // more than estimation noise.
        assert!(
            rate.per_unit_time_nats >= est.entropy.value - 3.0 * est.entropy.std_error,
            "{name}: rate {:.5} below entropy {:.5}",
            rate.per_unit_time_nats,
            est.entropy.value
        );
        println!(
            "criterion 11 operational rate {name}: PASS (gap {:.5} <= {:.5} nats)",
            rate.gap_nats, budget
        );
    }
}

/// Empirical-histogram merge associativity backs every parallel claim; it
/// also pins the EmpiricalPmf/estimate agreement used throughout.
#[test]
fn sharded_estimates_match_monolithic() {
    let model = poisson_uniform(1.0);
    let spec = IncrementSpec::new(model.clone(), 4).unwrap();
    let mut merged = EmpiricalPmf::new();
    for s in 0..8u64 {
        let xs = sample_increments(&spec, 50_000, RngStream::new(SEED, 900 + s));
        let (_, part) = quantize_block(&xs, 64.0).unwrap();
        merged.merge(&part);
    }
    assert_eq!(merged.total(), 400_000);
    let est = hmn_from_histogram(&merged, 4, Correction::MillerMadow).unwrap();
    assert!(est.entropy.value > 0.0);
}
