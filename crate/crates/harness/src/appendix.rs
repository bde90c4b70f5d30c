//! Closed-form cascaded path powers against brute-force Monte Carlo.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riscsi_core::channel::{db_to_linear, ScenarioConfig};
use riscsi_core::customization::{avg_cascaded_power, block_power_factor, cascade_monte_carlo, CascadeCase, CascadeParams};
use riscsi_core::Result;
use serde::Serialize;

/// Relative tolerance of every comparison.
pub const TOLERANCE: f64 = 0.03;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixCheck {
    pub label: String,
    pub closed_form: f64,
    pub monte_carlo: f64,
    pub relative_error: f64,
}

impl AppendixCheck {
    fn new(label: String, closed_form: f64, monte_carlo: f64) -> Self {
        Self {
            label,
            closed_form,
            monte_carlo,
            relative_error: (monte_carlo - closed_form).abs() / closed_form,
        }
    }

    pub fn passed(&self) -> bool {
        self.relative_error < TOLERANCE
    }
}

/// Cascade parameters of RIS `k` of a scenario with unit attenuation.
pub fn params_of(cfg: &ScenarioConfig, k: usize) -> CascadeParams {
    CascadeParams {
        vertical: cfg.ris[k].vertical,
        horizontal: cfg.ris[k].horizontal,
        bs_antennas: cfg.bs_antennas,
        ue_antennas: cfg.ue_antennas,
        kappa_ur: cfg.kappa_ur,
        kappa_rb: cfg.kappa_rb,
        nlos_ur: cfg.nlos_ur_of(k),
        nlos_rb: cfg.nlos_rb_of(k),
        rho: 1.0,
    }
}

/// Parameter sets checked by default: the default deployment and a
/// weak-LoS variant where every case carries comparable power.
pub fn default_parameter_sets() -> Vec<(String, CascadeParams)> {
    let cfg = ScenarioConfig::default();
    let base = params_of(&cfg, 0);
    let weak = CascadeParams {
        kappa_ur: db_to_linear(0.0),
        kappa_rb: db_to_linear(3.0),
        ..base
    };
    vec![("default".into(), base), ("weak-los".into(), weak)]
}

/// Every case and the block identity for one parameter set.
pub fn check(label: &str, p: &CascadeParams, draws: usize, seed: u64) -> Result<Vec<AppendixCheck>> {
    let mc = cascade_monte_carlo(p, draws, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let mut out = Vec::new();
    for (i, case) in CascadeCase::ALL.iter().enumerate() {
        out.push(AppendixCheck::new(
            format!("{label} {case:?}"),
            avg_cascaded_power(*case, p)?,
            mc.per_case[i],
        ));
    }
    let block = avg_cascaded_power(CascadeCase::LosLos, p)? * block_power_factor(p.elements(), p.kappa_ur, p.kappa_rb)?;
    out.push(AppendixCheck::new(format!("{label} block"), block, mc.block));
    Ok(out)
}

pub fn validate_appendix(draws: usize, seed: u64) -> Result<Vec<AppendixCheck>> {
    let mut out = Vec::new();
    for (i, (label, p)) in default_parameter_sets().iter().enumerate() {
        out.extend(check(label, p, draws, seed.wrapping_add(i as u64))?);
    }
    Ok(out)
}
