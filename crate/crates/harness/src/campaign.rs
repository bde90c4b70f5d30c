//! Seeded Monte Carlo campaigns over one or more swept parameters.

use crate::pipeline::{run_phase_pipeline, PipelineOptions, ReflectionMode, SchemeId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use riscsi_core::channel::{db_to_linear, ScenarioConfig};
use riscsi_core::metrics::{summarize, MetricReport, Summary};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("invalid campaign: {0}")]
    Invalid(String),
    #[error("cannot parse campaign: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot serialize results: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot build thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

/// Scenario parameter moved along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Transmit SNR `P/σ²` in dB, applied to both directions.
    SnrDb,
    /// Elements per RIS; must be a perfect square, arranged as a square.
    RisElements,
    KappaUrDb,
    /// NLoS paths per UE–RIS hop.
    NlosUr,
    /// NLoS paths per RIS–BS hop.
    NlosRb,
    PenetrationLossDb,
    /// `0` replaces the reflection design by random phases, `1` keeps it.
    Customized,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::SnrDb => "snr_db",
            Self::RisElements => "ris_elements",
            Self::KappaUrDb => "kappa_ur_db",
            Self::NlosUr => "nlos_ur",
            Self::NlosRb => "nlos_rb",
            Self::PenetrationLossDb => "penetration_loss_db",
            Self::Customized => "customized",
        }
    }

    /// Applies `value` to the scenario and the pipeline options.
    pub fn apply(self, cfg: &mut ScenarioConfig, options: &mut PipelineOptions, value: f64) -> Result<(), CampaignError> {
        let count = |v: f64| -> Result<usize, CampaignError> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(CampaignError::Invalid(format!("{} needs a non-negative integer, got {v}", self.name())))
            }
        };
        match self {
            Self::SnrDb => cfg.set_transmit_snr_db(value),
            Self::RisElements => {
                let m = count(value)?;
                let side = (m as f64).sqrt().round() as usize;
                if side == 0 || side * side != m {
                    return Err(CampaignError::Invalid(format!("{m} RIS elements do not form a square")));
                }
                for r in &mut cfg.ris {
                    r.vertical = side;
                    r.horizontal = side;
                }
            }
            Self::KappaUrDb => cfg.kappa_ur = db_to_linear(value),
            Self::NlosUr => cfg.nlos_ur = count(value)?,
            Self::NlosRb => cfg.nlos_rb = count(value)?,
            Self::PenetrationLossDb => cfg.penetration_loss_db = value,
            Self::Customized => match count(value)? {
                0 => options.reflection = ReflectionMode::Random,
                1 => {}
                _ => return Err(CampaignError::Invalid("customized takes 0 or 1".into())),
            },
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

fn default_trials() -> usize {
    500
}

fn default_seed() -> u64 {
    1
}

fn default_schemes() -> Vec<SchemeId> {
    SchemeId::ALL.to_vec()
}

/// Campaign file. Sweeps form a Cartesian grid, the first sweep varying
/// slowest; every scheme runs on every grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<SchemeId>,
    #[serde(default)]
    pub sweep: Vec<Sweep>,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub options: PipelineOptions,
}

impl Campaign {
    pub fn from_toml(text: &str) -> Result<Self, CampaignError> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CampaignError> {
        let text = std::fs::read_to_string(path).map_err(|source| CampaignError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        if self.trials == 0 {
            return Err(CampaignError::Invalid("trial count must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(CampaignError::Invalid("no schemes selected".into()));
        }
        for s in &self.sweep {
            if s.values.is_empty() || s.values.iter().any(|v| !v.is_finite()) {
                return Err(CampaignError::Invalid(format!("sweep {} needs finite values", s.axis.name())));
            }
        }
        for point in self.points() {
            self.config_at(&point)?
                .0
                .validate()
                .map_err(|e| CampaignError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    /// Every grid point as one value per sweep.
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.sweep.iter().fold(vec![Vec::new()], |acc, s| {
            acc.iter()
                .flat_map(|p| {
                    s.values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect()
        })
    }

    /// Scenario and options at one grid point.
    pub fn config_at(&self, point: &[f64]) -> Result<(ScenarioConfig, PipelineOptions), CampaignError> {
        let mut cfg = self.scenario.clone();
        let mut options = self.options.clone();
        for (s, v) in self.sweep.iter().zip(point) {
            s.axis.apply(&mut cfg, &mut options, *v)?;
        }
        Ok((cfg, options))
    }
}

/// RNG of one trial. Depends on the campaign seed and trial index only, so
/// grid points and schemes share realizations.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Outcome of one (grid point, scheme) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub point: Vec<f64>,
    pub scheme: SchemeId,
    /// Per-trial reports in trial order; `None` for failed trials.
    pub reports: Vec<Option<MetricReport>>,
    /// Error messages of failed trials, keyed by trial index.
    pub failures: BTreeMap<usize, String>,
}

impl CellResult {
    /// Named metric columns of every successful trial, in a fixed order.
    pub fn metrics(&self) -> BTreeMap<String, Vec<f64>> {
        let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in self.reports.iter().flatten() {
            for (name, v) in flatten(r) {
                out.entry(name).or_default().push(v);
            }
        }
        out
    }

    pub fn summaries(&self) -> BTreeMap<String, Summary> {
        self.metrics()
            .into_iter()
            .filter_map(|(k, v)| summarize(&v).map(|s| (k, s)))
            .collect()
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.summaries().get(metric).map(|s| s.mean)
    }
}

/// Scalar view of a report.
pub fn flatten(r: &MetricReport) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for (k, s) in r.nmse_separation.iter().enumerate() {
        if let Some(s) = s {
            out.push((format!("nmse_separation_mc_{k}"), s.monte_carlo));
            out.push((format!("nmse_separation_theory_{k}"), s.theoretical));
            out.push((format!("nmse_separation_expected_{k}"), s.expected));
        }
    }
    let scalars = [
        ("nmse_uplink", r.nmse_uplink),
        ("nmse_downlink", r.nmse_downlink),
        ("nme_theta_ur", r.nme_theta_ur),
        ("nme_phi_ur", r.nme_phi_ur),
        ("nme_theta_dl", r.nme_theta_dl),
        ("position_error", r.position_error),
        ("power_ratio", r.power_ratio),
        ("se", r.se),
        ("se_perfect", r.se_perfect),
        ("se_gap", r.se.zip(r.se_perfect).map(|(a, b)| b - a)),
        ("coarse_evaluations", r.coarse_evaluations.map(|c| c as f64)),
        ("los_rounds", r.los_rounds.map(|c| c as f64)),
        ("los_converged", r.los_converged.map(|c| if c { 1.0 } else { 0.0 })),
    ];
    out.extend(scalars.into_iter().filter_map(|(n, v)| v.map(|v| (n.to_owned(), v))));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub campaign: Campaign,
    pub cells: Vec<CellResult>,
}

/// Runs every cell. Trials run in parallel on `threads` workers (all cores
/// when `None`); results are gathered in trial order, so they do not depend
/// on the thread count.
pub fn run_campaign(campaign: &Campaign, threads: Option<usize>) -> Result<CampaignResult, CampaignError> {
    campaign.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build()?;
    let mut cells = Vec::new();
    for point in campaign.points() {
        let (cfg, options) = campaign.config_at(&point)?;
        for &scheme in &campaign.schemes {
            let outcomes: Vec<Result<MetricReport, String>> = pool.install(|| {
                (0..campaign.trials)
                    .into_par_iter()
                    .map(|t| {
                        let mut rng = trial_rng(campaign.seed, t);
                        run_phase_pipeline(&cfg, scheme, &options, &mut rng).map_err(|e| e.to_string())
                    })
                    .collect()
            });
            let mut failures = BTreeMap::new();
            let reports = outcomes
                .into_iter()
                .enumerate()
                .map(|(t, o)| o.map_err(|e| failures.insert(t, e)).ok())
                .collect();
            cells.push(CellResult {
                point: point.clone(),
                scheme,
                reports,
                failures,
            });
        }
    }
    Ok(CampaignResult {
        campaign: campaign.clone(),
        cells,
    })
}

impl CampaignResult {
    pub fn cell(&self, point: &[f64], scheme: SchemeId) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.scheme == scheme && c.point == point)
    }

    pub fn failed_trials(&self) -> usize {
        self.cells.iter().map(|c| c.failures.len()).sum()
    }

    /// One row per grid point, scheme and metric.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for sw in &self.campaign.sweep {
            let _ = write!(s, "{},", sw.axis.name());
        }
        s.push_str("scheme,metric,mean,stderr,trials,failures\n");
        for cell in &self.cells {
            for (metric, sum) in cell.summaries() {
                for v in &cell.point {
                    let _ = write!(s, "{v},");
                }
                let _ = writeln!(
                    s,
                    "{},{metric},{:.9e},{:.9e},{},{}",
                    cell.scheme.name(),
                    sum.mean,
                    sum.stderr,
                    sum.count,
                    cell.failures.len()
                );
            }
        }
        s
    }

    /// Manifest with the resolved campaign, the scenario at every grid
    /// point and the failures of every cell.
    pub fn manifest(&self) -> Result<String, CampaignError> {
        let points = self
            .campaign
            .points()
            .iter()
            .map(|p| {
                let (scenario, options) = self.campaign.config_at(p)?;
                Ok(serde_json::json!({
                    "point": p,
                    "scenario": scenario,
                    "options": options,
                }))
            })
            .collect::<Result<Vec<_>, CampaignError>>()?;
        let failures: Vec<_> = self
            .cells
            .iter()
            .map(|c| {
                serde_json::json!({
                    "point": c.point,
                    "scheme": c.scheme,
                    "failed": c.failures.len(),
                    "errors": c.failures,
                })
            })
            .collect();
        Ok(serde_json::to_string_pretty(&serde_json::json!({
            "campaign": self.campaign,
            "points": points,
            "cells": failures,
        }))?)
    }

    /// Writes `<dir>/<name>.csv` and `<dir>/<name>.json`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf), CampaignError> {
        let io = |path: &Path| {
            let path = path.to_owned();
            move |source| CampaignError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let csv = dir.join(format!("{}.csv", self.campaign.name));
        let json = dir.join(format!("{}.json", self.campaign.name));
        std::fs::write(&csv, self.to_csv()).map_err(io(&csv))?;
        std::fs::write(&json, self.manifest()?).map_err(io(&json))?;
        Ok((csv, json))
    }
}
