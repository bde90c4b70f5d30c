//! Newtonized orthogonal matching pursuit on the separated uplink signals.
//!
//! Each RIS is processed on its own. UE–RIS paths are extracted first while
//! the RIS–BS hop is represented by its LoS path, which the BS knows from
//! the fixed geometry. RIS–BS scattered paths follow, seen through the
//! estimated UE–RIS channel. Every extraction is a coarse grid search, a
//! Newton refinement of the new path, cyclic Newton refinement of all paths
//! and a joint least-squares update of the gains.

pub mod atoms;
mod extract;
pub mod refine;

pub use extract::{extract_link, extract_link_from, full_extraction, reconstruct, RisBsExtractor, RisExtraction, UeRisExtractor};

use crate::channel::{rician_weights, ScenarioConfig, ScenarioGeometry};
use crate::geometry::{ula_steering, upa_steering, UpaFrequency};
use crate::training::{PilotMatrix, ReflectionSchedule};
use crate::{CMatrix, Complex64};
use serde::{Deserialize, Serialize};

/// Grid, refinement and stopping parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NompConfig {
    /// Oversampling of the BS grid, `η_b`.
    pub oversampling_bs: usize,
    /// Oversampling of the UE grid, `η_u`.
    pub oversampling_ue: usize,
    /// Oversampling of the RIS horizontal grid, `η_h`.
    pub oversampling_ris_h: usize,
    /// Oversampling of the RIS vertical grid, `η_v`.
    pub oversampling_ris_v: usize,
    /// Newton steps of one refinement, `R_s`.
    pub newton_steps: usize,
    /// Cyclic refinement rounds after each new path, `R_c`.
    pub cyclic_rounds: usize,
    /// Path caps used when the path counts are unknown.
    pub max_paths_ur: usize,
    pub max_paths_rb: usize,
    /// Without known path counts, extraction stops once a new path removes
    /// less than this fraction of the observation energy.
    pub stop_fraction: f64,
    /// Refine both hops alternately once both are extracted.
    pub final_refit: bool,
    /// Rounds of the alternating refinement.
    pub refit_rounds: usize,
    /// RIS–BS atoms whose correlation with the known LoS atom exceeds this
    /// value are never selected.
    pub los_exclusion: f64,
}

impl Default for NompConfig {
    fn default() -> Self {
        Self {
            oversampling_bs: 2,
            oversampling_ue: 2,
            oversampling_ris_h: 2,
            oversampling_ris_v: 2,
            newton_steps: 3,
            cyclic_rounds: 3,
            max_paths_ur: 16,
            max_paths_rb: 16,
            stop_fraction: 0.01,
            final_refit: true,
            refit_rounds: 5,
            los_exclusion: 0.9,
        }
    }
}

impl NompConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if [
            self.oversampling_bs,
            self.oversampling_ue,
            self.oversampling_ris_h,
            self.oversampling_ris_v,
        ]
        .contains(&0)
        {
            return Err(crate::Error::EmptyGrid);
        }
        Ok(())
    }
}

/// Number of paths to extract per hop; `None` means stop on the residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PathBudget {
    /// UE–RIS paths including the LoS path.
    pub ue_ris: Option<usize>,
    /// RIS–BS scattered paths (the LoS path is known).
    pub ris_bs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatedHop {
    UeRis,
    RisBs,
}

/// How a path estimate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    UplinkNomp,
    DownlinkMl,
    Geometric,
}

/// One extracted path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEstimate {
    pub hop: EstimatedHop,
    /// RIS arrival (UE–RIS) or departure (RIS–BS) frequencies.
    pub ris: UpaFrequency,
    /// UE departure (UE–RIS) or BS arrival (RIS–BS) frequency.
    pub array: f64,
    /// Complex gain. UE–RIS gains include the large-scale attenuation of the
    /// link, which the BS cannot separate from the small-scale gain.
    pub gain: Complex64,
    pub provenance: Provenance,
}

/// Everything the BS holds about one RIS link before extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct RisObservation {
    /// Separated stacked signal `Y_k^b`, `N_b N_u × K_S`.
    pub y: CMatrix,
    /// Uplink pilots `S_u`.
    pub pilots: CMatrix,
    /// Slow schedule `Γ_k`, `M × K_S`.
    pub gammas: CMatrix,
    pub fast_slots: usize,
    pub vertical: usize,
    pub horizontal: usize,
    pub bs_antennas: usize,
    pub ue_antennas: usize,
    /// BS arrival frequency of the RIS–BS LoS path.
    pub bs_los: f64,
    /// RIS departure frequencies of the RIS–BS LoS path.
    pub ris_los: UpaFrequency,
    /// Gain of the RIS–BS LoS path.
    pub rb_los_gain: Complex64,
}

impl RisObservation {
    /// Observation of RIS `k` with the RIS–BS LoS parameters taken from the
    /// fixed geometry.
    pub fn from_geometry(
        cfg: &ScenarioConfig,
        geometry: &ScenarioGeometry,
        k: usize,
        y: CMatrix,
        schedule: &ReflectionSchedule,
        pilots: &PilotMatrix,
    ) -> crate::Result<Self> {
        let ris = geometry
            .ris
            .get(k)
            .ok_or_else(|| crate::Error::IndexOutOfRange(format!("RIS {k}")))?;
        let gammas = schedule
            .slow
            .gammas
            .get(k)
            .ok_or_else(|| crate::Error::IndexOutOfRange(format!("RIS {k}")))?
            .clone();
        let (bs, ris_los) = geometry.rb_los(k)?;
        let size = (ris.elements() * cfg.bs_antennas) as f64;
        Ok(Self {
            y,
            pilots: pilots.s.clone(),
            gammas,
            fast_slots: schedule.fast.len(),
            vertical: ris.vertical,
            horizontal: ris.horizontal,
            bs_antennas: cfg.bs_antennas,
            ue_antennas: cfg.ue_antennas,
            bs_los: bs.theta_cap,
            ris_los,
            rb_los_gain: Complex64::new(size.sqrt() * rician_weights(cfg.kappa_rb).0, 0.0),
        })
    }
}

/// Path lists of one RIS link.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadedEstimate {
    pub ue_ris: Vec<PathEstimate>,
    /// Index 0 is the known LoS path.
    pub ris_bs: Vec<PathEstimate>,
    pub vertical: usize,
    pub horizontal: usize,
    pub bs_antennas: usize,
    pub ue_antennas: usize,
}

impl CascadedEstimate {
    /// Attenuated UE–RIS channel estimate, `M × N_u`.
    pub fn ue_ris_channel(&self) -> CMatrix {
        let mut h = CMatrix::zeros(self.vertical * self.horizontal, self.ue_antennas);
        for p in &self.ue_ris {
            let a = upa_steering(self.vertical, self.horizontal, p.ris);
            let u = ula_steering(self.ue_antennas, p.array);
            h += (a * p.gain) * u.adjoint();
        }
        h
    }

    /// RIS–BS channel estimate, `N_b × M`.
    pub fn ris_bs_channel(&self) -> CMatrix {
        let mut h = CMatrix::zeros(self.bs_antennas, self.vertical * self.horizontal);
        for p in &self.ris_bs {
            let b = ula_steering(self.bs_antennas, p.array);
            let a = upa_steering(self.vertical, self.horizontal, p.ris);
            h += (b * p.gain) * a.adjoint();
        }
        h
    }

    /// Link channel `ρ Ĥ_rb diag(γ) Ĥ_ur` under reflection vector `gamma`.
    pub fn channel(&self, gamma: &crate::CVector) -> CMatrix {
        crate::linalg::scale_mul(&self.ris_bs_channel(), gamma, &self.ue_ris_channel())
    }
}

/// Coarse-search atom evaluations of full extraction:
/// `Σ_k η_v η_h M_k ((L_k^ur + 1) η_u N_u + L_k^rb η_b N_b)`.
///
/// `counts[k]` holds the UE–RIS path count including the LoS path and the
/// RIS–BS scattered path count.
pub fn complexity(
    cfg: &NompConfig,
    ris_elements: &[usize],
    counts: &[(usize, usize)],
    ue_antennas: usize,
    bs_antennas: usize,
) -> u64 {
    ris_elements
        .iter()
        .zip(counts)
        .map(|(&m, &(ur, rb))| {
            (cfg.oversampling_ris_v * cfg.oversampling_ris_h * m) as u64
                * (ur * cfg.oversampling_ue * ue_antennas + rb * cfg.oversampling_bs * bs_antennas) as u64
        })
        .sum()
}

/// Equal-parameter form `K M η³ (L^ur N_u + L^rb N_b)`, where `l_ur` counts
/// the UE–RIS paths including the LoS path.
pub fn complexity_equal(k: usize, m: usize, eta: usize, l_ur: usize, l_rb: usize, n_u: usize, n_b: usize) -> u64 {
    (k * m * eta.pow(3) * (l_ur * n_u + l_rb * n_b)) as u64
}

/// Search cost attributed to the LoS-only scheme, `K M η³ (N_u + N_b)`.
pub fn proposed_complexity(k: usize, m: usize, eta: usize, n_u: usize, n_b: usize) -> u64 {
    (k * m * eta.pow(3) * (n_u + n_b)) as u64
}
