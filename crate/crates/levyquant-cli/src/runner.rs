//! Subcommand implementations.
//!
//! Work fans out across schedule points and sampling shards; shard
//! histograms merge by bin-wise count addition, so the worker count never
//! changes any output byte. Stream ids are allocated as
//! `point_index * 2^16 + shard`, keeping every shard of every point on a
//! provably disjoint RNG stream.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use levyquant::asymptotics::{report_point, stable_h_x0, zeta_poisson, zeta_stable_with_h};
use levyquant::codec::{decode, encode, rate_report};
use levyquant::entropy::{
    cf_to_density, compound_density_an, hmn_from_histogram, sample_histogram, DensityGrid,
    HmnEstimate,
};
use levyquant::models::ModelSpec;
use levyquant::quant::{quantize_block, EmpiricalPmf};
use levyquant::sampling::{sample_increments, IncrementSpec, RngStream};

use crate::config::ExperimentConfig;
use crate::report::{content_hash, fmt, fmt_opt, write_csv, PointRecord, RunManifest};

const SHARD_BLOCK: u64 = 1 << 16;

fn correction_name(cfg: &ExperimentConfig) -> &'static str {
    match cfg.correction {
        levyquant::entropy::Correction::None => "none",
        levyquant::entropy::Correction::MillerMadow => "miller_madow",
    }
}

fn models_json(cfg: &ExperimentConfig) -> serde_json::Value {
    serde_json::to_value(&cfg.models).expect("serializable models")
}

fn shard_sizes(count: usize, shards: u64) -> Vec<usize> {
    let base = count / shards as usize;
    let rem = count % shards as usize;
    (0..shards as usize)
        .map(|s| base + usize::from(s < rem))
        .collect()
}

fn sharded_histogram(
    model: &ModelSpec,
    m: f64,
    n: u64,
    count: usize,
    seed: u64,
    stream_base: u64,
    shards: u64,
) -> Result<EmpiricalPmf> {
    let sizes = shard_sizes(count, shards);
    let parts: Vec<EmpiricalPmf> = sizes
        .par_iter()
        .enumerate()
        .map(|(s, &size)| {
            sample_histogram(
                model,
                m,
                n,
                size,
                RngStream::new(seed, stream_base + s as u64),
            )
        })
        .collect::<levyquant::Result<_>>()?;
    let mut merged = EmpiricalPmf::new();
    for p in &parts {
        merged.merge(p);
    }
    Ok(merged)
}

/// `h(X_0)` for continuous models, computed once so per-`n` zetas reuse it.
fn base_h_x0(model: &ModelSpec) -> Result<Option<f64>> {
    Ok(match model {
        ModelSpec::Stable(p) | ModelSpec::Sum { stable: p, .. } => Some(stable_h_x0(p)?),
        ModelSpec::GaussianLk { sigma, .. } if *sigma > 0.0 => Some(
            0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * sigma * sigma).ln(),
        ),
        _ => None,
    })
}

fn zeta_for(model: &ModelSpec, h_x0: Option<f64>, n: u64) -> Option<f64> {
    match model {
        ModelSpec::Stable(p) => Some(zeta_stable_with_h(h_x0?, p.alpha, n)),
        ModelSpec::Sum { stable, .. } => Some(zeta_stable_with_h(h_x0?, stable.alpha, n)),
        ModelSpec::GaussianLk { .. } => Some(zeta_stable_with_h(h_x0?, 2.0, n)),
        ModelSpec::ImpulsivePoisson(p) => zeta_poisson(p, n).ok(),
    }
}

fn point_warnings(est: &HmnEstimate, total: u64) -> Vec<String> {
    if est.undersampled {
        vec![format!(
            "undersampled: observed support {} with {} samples",
            est.entropy.observed_support, total
        )]
    } else {
        Vec::new()
    }
}

pub fn run_converge(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<bool> {
    let model = &cfg.models[0];
    let schedule = cfg
        .schedule
        .as_ref()
        .context("converge needs a schedule")?
        .build(model)?;
    let model_hash = content_hash(model);
    let mut manifest = RunManifest::new(
        &cfg.name,
        "converge",
        content_hash(cfg),
        models_json(cfg),
        vec![model_hash.clone()],
        seed,
        cfg.sample_count,
        cfg.shards,
        correction_name(cfg),
    );
    let h_x0 = base_h_x0(model)?;

    let mut rows = Vec::new();
    let mut last_residual = None;
    for (idx, &(n, m)) in schedule.points.iter().enumerate() {
        let t0 = Instant::now();
        let mf = m as f64;
        let pmf = sharded_histogram(
            model,
            mf,
            n,
            cfg.sample_count,
            seed,
            idx as u64 * SHARD_BLOCK,
            cfg.shards,
        )?;
        let est = hmn_from_histogram(&pmf, n, cfg.correction)?;
        let zeta = zeta_for(model, h_x0, n);
        let rep = report_point(model, mf, n, &est, zeta)?;
        let h_pred = zeta.map(|z| rep.kappa * (mf.ln() + z));
        last_residual = Some(rep.residual);
        rows.push(vec![
            n.to_string(),
            m.to_string(),
            fmt(rep.empirical.value),
            fmt_opt(h_pred),
            fmt(rep.kappa),
            fmt_opt(rep.zeta),
            fmt(rep.residual),
            fmt(rep.empirical.std_error),
            model_hash.clone(),
            seed.to_string(),
            cfg.sample_count.to_string(),
        ]);
        if cfg.dump_histograms {
            dump_histogram(out_dir, cfg, &pmf, n, m, &model_hash, seed)?;
        }
        manifest.points.push(PointRecord {
            n,
            m: mf,
            millis: t0.elapsed().as_millis(),
            warnings: point_warnings(&est, pmf.total()),
        });
        println!(
            "converge {}: n={n} m={m} H={:.6} residual={:+.6}",
            cfg.name, rep.empirical.value, rep.residual
        );
    }

    write_csv(
        &out_dir.join(format!("{}_convergence.csv", cfg.name)),
        &[
            "n",
            "m",
            "h_emp",
            "h_pred",
            "kappa",
            "zeta",
            "residual",
            "stderr",
            "model_hash",
            "seed",
            "sample_count",
        ],
        &rows,
    )?;

    if let (Some(limit), Some(res)) = (cfg.assertions.max_abs_residual_final, last_residual) {
        if res.abs() > limit {
            manifest.assertion_failures.push(format!(
                "final |residual| = {:.6} exceeds {limit}",
                res.abs()
            ));
        }
    }
    finish(manifest, out_dir, &cfg.assertions.required)
}

fn dump_histogram(
    out_dir: &Path,
    cfg: &ExperimentConfig,
    pmf: &EmpiricalPmf,
    n: u64,
    m: u64,
    model_hash: &str,
    seed: u64,
) -> Result<()> {
    let rows: Vec<Vec<String>> = pmf
        .iter()
        .map(|(i, c)| {
            vec![
                i.to_string(),
                c.to_string(),
                m.to_string(),
                n.to_string(),
                model_hash.to_string(),
                seed.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out_dir.join(format!("{}_hist_n{n}_m{m}.csv", cfg.name)),
        &["index", "count", "m", "n", "model_hash", "seed"],
        &rows,
    )?;
    let json_path = out_dir.join(format!("{}_hist_n{n}_m{m}.json", cfg.name));
    let doc = serde_json::json!({
        "m": m,
        "n": n,
        "model_hash": model_hash,
        "seed": seed,
        "total": pmf.total(),
        "counts": pmf
            .iter()
            .map(|(i, c)| (i.to_string(), serde_json::json!(c)))
            .collect::<serde_json::Map<String, serde_json::Value>>(),
    });
    std::fs::write(&json_path, serde_json::to_string(&doc)?)?;
    Ok(())
}

pub fn run_compare(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<bool> {
    if cfg.models.len() != 2 {
        bail!("compare needs exactly two models");
    }
    let (mx, my) = (&cfg.models[0], &cfg.models[1]);
    let spec = cfg.schedule.as_ref().context("compare needs a schedule")?;
    let schedule = spec.build(mx)?;
    spec.build(my)?.validate_growth(my)?;
    let hashes = vec![content_hash(mx), content_hash(my)];
    let mut manifest = RunManifest::new(
        &cfg.name,
        "compare",
        content_hash(cfg),
        models_json(cfg),
        hashes.clone(),
        seed,
        cfg.sample_count,
        cfg.shards,
        correction_name(cfg),
    );

    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (idx, &(n, m)) in schedule.points.iter().enumerate() {
        let t0 = Instant::now();
        let mf = m as f64;
        // Both models draw from the same streams (common random numbers):
        // identical models under one seed give ratio exactly 1.
        let base = idx as u64 * SHARD_BLOCK;
        let px = sharded_histogram(mx, mf, n, cfg.sample_count, seed, base, cfg.shards)?;
        let py = sharded_histogram(my, mf, n, cfg.sample_count, seed, base, cfg.shards)?;
        let ex = hmn_from_histogram(&px, n, cfg.correction)?;
        let ey = hmn_from_histogram(&py, n, cfg.correction)?;
        let ratio = ex.entropy.value / ey.entropy.value;
        let diff = ex.entropy.value - ey.entropy.value;
        series.push((ratio, diff));
        rows.push(vec![
            n.to_string(),
            m.to_string(),
            fmt(ex.entropy.value),
            fmt(ey.entropy.value),
            fmt(ratio),
            fmt(diff),
            fmt(ex.entropy.std_error),
            fmt(ey.entropy.std_error),
            hashes[0].clone(),
            hashes[1].clone(),
            seed.to_string(),
            cfg.sample_count.to_string(),
        ]);
        let mut warnings = point_warnings(&ex, px.total());
        warnings.extend(point_warnings(&ey, py.total()));
        manifest.points.push(PointRecord {
            n,
            m: mf,
            millis: t0.elapsed().as_millis(),
            warnings,
        });
        println!(
            "compare {}: n={n} m={m} ratio={ratio:.4} diff={diff:+.4}",
            cfg.name
        );
    }

    write_csv(
        &out_dir.join(format!("{}_comparison.csv", cfg.name)),
        &[
            "n",
            "m",
            "h_x",
            "h_y",
            "ratio",
            "diff",
            "stderr_x",
            "stderr_y",
            "model_hash_x",
            "model_hash_y",
            "seed",
            "sample_count",
        ],
        &rows,
    )?;

    let tail = &series[series.len() / 2..];
    let ratio_decreasing = tail.windows(2).all(|w| w[1].0 < w[0].0);
    let diff_decreasing = tail.windows(2).all(|w| w[1].1 < w[0].1);
    let (final_ratio, final_diff) = *series.last().unwrap();
    let verdict = serde_json::json!({
        "final_ratio": final_ratio,
        "final_diff": final_diff,
        "tail_ratio_decreasing": ratio_decreasing,
        "tail_diff_decreasing": diff_decreasing,
    });
    std::fs::write(
        out_dir.join(format!("{}_verdict.json", cfg.name)),
        serde_json::to_string_pretty(&verdict)?,
    )?;

    if let Some((lo, hi)) = cfg.assertions.final_ratio_range {
        if !(lo..=hi).contains(&final_ratio) {
            manifest
                .assertion_failures
                .push(format!("final ratio {final_ratio:.4} outside [{lo}, {hi}]"));
        }
    }
    if cfg.assertions.ratio_decreasing_tail && !ratio_decreasing {
        manifest
            .assertion_failures
            .push("ratio not strictly decreasing over schedule tail".into());
    }
    finish(manifest, out_dir, &cfg.assertions.required)
}

pub fn run_codec(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<bool> {
    let model = &cfg.models[0];
    let schedule = cfg
        .schedule
        .as_ref()
        .context("codec needs a schedule")?
        .build(model)?;
    let model_hash = content_hash(model);
    let mut manifest = RunManifest::new(
        &cfg.name,
        "codec",
        content_hash(cfg),
        models_json(cfg),
        vec![model_hash.clone()],
        seed,
        cfg.sample_count,
        cfg.shards,
        correction_name(cfg),
    );

    let mut rows = Vec::new();
    for (idx, &(n, m)) in schedule.points.iter().enumerate() {
        let t0 = Instant::now();
        let mf = m as f64;
        let spec = IncrementSpec::new(model.clone(), n)?;
        let sizes = shard_sizes(cfg.sample_count, cfg.shards);
        let base = idx as u64 * SHARD_BLOCK;
        // Order-preserving shards concatenated in shard order: the adaptive
        // coder sees a deterministic stream under any worker count.
        let shard_indices: Vec<(Vec<i64>, EmpiricalPmf)> = sizes
            .par_iter()
            .enumerate()
            .map(|(s, &size)| {
                let xs =
                    sample_increments(&spec, size, RngStream::new(seed, base + s as u64));
                quantize_block(&xs, mf)
            })
            .collect::<levyquant::Result<_>>()?;
        let mut indices = Vec::with_capacity(cfg.sample_count);
        let mut pmf = EmpiricalPmf::new();
        for (part, hist) in &shard_indices {
            indices.extend_from_slice(part);
            pmf.merge(hist);
        }
        let est = hmn_from_histogram(&pmf, n, cfg.correction)?;

        let stream = encode(&indices, mf, n as u32, seed);
        let (_, decoded) = decode(&stream)?;
        if decoded != indices {
            bail!("lossless round-trip failed at (n={n}, m={m})");
        }
        let rate = rate_report(&stream, &est.entropy)?;
        rows.push(vec![
            n.to_string(),
            m.to_string(),
            rate.symbols.to_string(),
            rate.payload_bits.to_string(),
            fmt(rate.per_unit_time_nats),
            fmt(est.entropy.value),
            fmt(rate.gap_nats),
            "true".to_string(),
            model_hash.clone(),
            seed.to_string(),
            cfg.sample_count.to_string(),
        ]);
        if let Some(budget) = cfg.assertions.max_rate_gap {
            let allowance = budget.fraction * est.entropy.value
                + budget.nats * n as f64 / rate.symbols as f64;
            if rate.gap_nats > allowance {
                manifest.assertion_failures.push(format!(
                    "rate gap {:.4} exceeds allowance {:.4} at (n={n}, m={m})",
                    rate.gap_nats, allowance
                ));
            }
        }
        manifest.points.push(PointRecord {
            n,
            m: mf,
            millis: t0.elapsed().as_millis(),
            warnings: point_warnings(&est, pmf.total()),
        });
        println!(
            "codec {}: n={n} m={m} rate={:.6} H={:.6} gap={:+.6}",
            cfg.name, rate.per_unit_time_nats, est.entropy.value, rate.gap_nats
        );
    }

    write_csv(
        &out_dir.join(format!("{}_codec.csv", cfg.name)),
        &[
            "n",
            "m",
            "symbols",
            "payload_bits",
            "rate_nats_per_unit_time",
            "h_emp",
            "gap_nats",
            "roundtrip_ok",
            "model_hash",
            "seed",
            "sample_count",
        ],
        &rows,
    )?;
    finish(manifest, out_dir, &cfg.assertions.required)
}

pub fn run_density(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<bool> {
    let model = &cfg.models[0];
    let req = cfg
        .density
        .as_ref()
        .context("density needs a \"density\" config section")?;
    let model_hash = content_hash(model);
    let mut manifest = RunManifest::new(
        &cfg.name,
        "density",
        content_hash(cfg),
        models_json(cfg),
        vec![model_hash],
        seed,
        0,
        1,
        correction_name(cfg),
    );
    let t0 = Instant::now();

    let grid: DensityGrid = match model {
        ModelSpec::ImpulsivePoisson(p) => {
            // The increment law has an atom at zero; the density output is
            // the conditional jump-sum part A_n, the atom mass goes to the
            // manifest.
            let ac = match (&p.amplitude.ac, p.amplitude.atoms.is_empty()) {
                (Some(ac), true) => ac.kind,
                _ => bail!("density output needs a purely AC amplitude"),
            };
            // Snap the window onto the lattice so convolution offsets stay
            // integer multiples of dx.
            let points = req.points | 1;
            let dx = (req.window.1 - req.window.0) / (points - 1) as f64;
            let x_lo = (req.window.0 / dx).round() * dx;
            let x_hi = x_lo + (points - 1) as f64 * dx;
            let p_a = DensityGrid::from_fn_normalized(x_lo, x_hi, points, |x| ac.pdf(x))?;
            let an = compound_density_an(&p_a, p.lambda, req.n, req.k_max)?;
            let atom = (-p.lambda / req.n as f64).exp();
            manifest.points.push(PointRecord {
                n: req.n,
                m: 0.0,
                millis: t0.elapsed().as_millis(),
                warnings: vec![format!(
                    "conditional jump-sum density; zero atom mass {atom:.6} not included"
                )],
            });
            an.grid
        }
        _ => {
            let n = req.n;
            let inv = cf_to_density(
                |w| (model.exponent(w).expect("validated model") / n as f64).exp(),
                req.window,
                req.points.next_power_of_two(),
            )?;
            manifest.points.push(PointRecord {
                n,
                m: 0.0,
                millis: t0.elapsed().as_millis(),
                warnings: if inv.clamped_mass > 0.0 {
                    vec![format!("clamped negative mass {:.3e}", inv.clamped_mass)]
                } else {
                    Vec::new()
                },
            });
            inv.grid
        }
    };

    let rows: Vec<Vec<String>> = (0..grid.len())
        .map(|j| vec![fmt(grid.x_at(j)), fmt(grid.values()[j])])
        .collect();
    write_csv(
        &out_dir.join(format!("{}_density.csv", cfg.name)),
        &["x", "p"],
        &rows,
    )?;
    println!(
        "density {}: {} points, window mass {:.6}, tail {:.3e}",
        cfg.name,
        grid.len(),
        grid.trapezoid_mass(),
        grid.tail_mass
    );
    finish(manifest, out_dir, &cfg.assertions.required)
}

pub fn run_sample(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<bool> {
    let model = &cfg.models[0];
    let req = cfg
        .sample
        .as_ref()
        .context("sample needs a \"sample\" config section")?;
    let spec = IncrementSpec::new(model.clone(), req.n)?;
    let stream = RngStream::new(seed, 0);
    let t0 = Instant::now();
    let xs = sample_increments(&spec, req.count, stream);

    let bin_path = out_dir.join(format!("{}_samples.f64le", cfg.name));
    let mut f = std::io::BufWriter::new(
        std::fs::File::create(&bin_path).with_context(|| format!("creating {bin_path:?}"))?,
    );
    for x in &xs {
        f.write_all(&x.to_le_bytes())?;
    }
    f.flush()?;

    let sidecar = serde_json::json!({
        "model": model,
        "n": req.n,
        "seed": seed,
        "stream_id": 0,
        "count": req.count,
        "format": "f64le",
    });
    std::fs::write(
        out_dir.join(format!("{}_samples.json", cfg.name)),
        serde_json::to_string_pretty(&sidecar)?,
    )?;

    let mut manifest = RunManifest::new(
        &cfg.name,
        "sample",
        content_hash(cfg),
        models_json(cfg),
        vec![content_hash(model)],
        seed,
        req.count,
        1,
        correction_name(cfg),
    );
    manifest.points.push(PointRecord {
        n: req.n,
        m: 0.0,
        millis: t0.elapsed().as_millis(),
        warnings: Vec::new(),
    });
    println!("sample {}: wrote {} increments", cfg.name, xs.len());
    finish(manifest, out_dir, &cfg.assertions.required)
}

fn finish(manifest: RunManifest, out_dir: &Path, required: &bool) -> Result<bool> {
    let ok = manifest.assertion_failures.is_empty();
    for failure in &manifest.assertion_failures {
        eprintln!("assertion failed: {failure}");
    }
    manifest.write(out_dir)?;
    Ok(ok || !required)
}
