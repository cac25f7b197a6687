//! Experiment configuration: one JSON document drives every subcommand.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use levyquant::asymptotics::{m_schedule, Schedule};
use levyquant::entropy::Correction;
use levyquant::models::ModelSpec;

/// Schedule description: generated from the model's admissibility rule or
/// written out explicitly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// `m` from the model's growth rule on the given `n` list.
    Auto {
        n: Vec<u64>,
        #[serde(default = "one")]
        granularity: u64,
    },
    /// Explicit `(n, m)` pairs; still validated against the growth rule.
    Explicit { points: Vec<(u64, u64)> },
}

fn one() -> u64 {
    1
}

impl ScheduleSpec {
    pub fn build(&self, model: &ModelSpec) -> Result<Schedule> {
        let schedule = match self {
            ScheduleSpec::Auto { n, granularity } => m_schedule(model, n, *granularity)?,
            ScheduleSpec::Explicit { points } => Schedule::new(points.clone())?,
        };
        schedule.validate_growth(model)?;
        Ok(schedule)
    }
}

/// Per-point assertions; failures flip the exit code when `required`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertions {
    #[serde(default)]
    pub required: bool,
    /// converge: |residual| bound at the final schedule point.
    #[serde(default)]
    pub max_abs_residual_final: Option<f64>,
    /// compare: inclusive range for the final ratio.
    #[serde(default)]
    pub final_ratio_range: Option<(f64, f64)>,
    /// compare: require a strictly decreasing ratio over the schedule tail.
    #[serde(default)]
    pub ratio_decreasing_tail: bool,
    /// codec: per-point gap budget `fraction * H_emp + nats`.
    #[serde(default)]
    pub max_rate_gap: Option<RateGapBudget>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateGapBudget {
    pub fraction: f64,
    pub nats: f64,
}

/// Window request for the `density` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityRequest {
    pub window: (f64, f64),
    pub points: usize,
    #[serde(default = "one")]
    pub n: u64,
    /// Convolution order cap for Poisson amplitude densities.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn default_k_max() -> usize {
    64
}

/// Request for the `sample` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRequest {
    pub n: u64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Output file prefix.
    pub name: String,
    /// One model for converge/codec/density/sample; two for compare.
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default = "default_samples")]
    pub sample_count: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub correction: Correction,
    /// Sampling shards per point; workers interleave freely since shard
    /// histograms merge bin-wise.
    #[serde(default = "default_shards")]
    pub shards: u64,
    #[serde(default)]
    pub assertions: Assertions,
    #[serde(default)]
    pub density: Option<DensityRequest>,
    #[serde(default)]
    pub sample: Option<SampleRequest>,
    /// Also emit per-point histograms as CSV.
    #[serde(default)]
    pub dump_histograms: bool,
}

fn default_samples() -> usize {
    1_000_000
}

fn default_shards() -> u64 {
    64
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).context("parsing config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            bail!("config needs at least one model");
        }
        for m in &self.models {
            m.validate()?;
        }
        if self.name.is_empty() || self.name.contains(std::path::is_separator) {
            bail!("name must be a nonempty file prefix");
        }
        if self.shards == 0 {
            bail!("shards must be positive");
        }
        Ok(())
    }

    /// Effective seed: CLI override, then config, then `LEVYQUANT_SEED`,
    /// then zero.
    pub fn effective_seed(&self, cli_override: Option<u64>) -> u64 {
        cli_override
            .or(self.seed)
            .or_else(|| {
                std::env::var("LEVYQUANT_SEED")
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let json = r#"{
            "name": "gauss",
            "models": [{"kind": "gaussian_lk", "sigma": 1.0, "mu": 0.0}],
            "schedule": {"generator": "auto", "n": [1, 4, 16]},
            "sample_count": 1000,
            "seed": 7
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        let sched = cfg.schedule.as_ref().unwrap().build(&cfg.models[0]).unwrap();
        assert_eq!(sched.points.len(), 3);
        assert_eq!(cfg.effective_seed(Some(9)), 9);
        assert_eq!(cfg.effective_seed(None), 7);
    }

    #[test]
    fn unknown_fields_rejected() {
        let json = r#"{"name": "x", "models": [], "bogus": 1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(json).is_err());
    }
}
