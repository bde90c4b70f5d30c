//! One Monte Carlo trial of the five-phase acquisition chain for a given
//! scheme, scored against the ground truth drawn for that trial.

use rand::Rng;
use riscsi_core::channel::{sample_ue_position, ChannelRealization, ScenarioConfig, ScenarioGeometry};
use riscsi_core::customization::{power_ratio, ReflectionDesign, SparseApprox};
use riscsi_core::downlink::{DownlinkConfig, DownlinkEstimate};
use riscsi_core::geometry::UpaFrequency;
use riscsi_core::metrics::{nme, nmse, nmse_separation, spectral_efficiency, svd_transceiver, MetricReport};
use riscsi_core::nomp::{full_extraction, reconstruct, NompConfig, PathBudget, PathEstimate, RisObservation, UeRisExtractor};
use riscsi_core::positioning::{algorithm1, Algorithm1Config, UplinkCandidates};
use riscsi_core::training::{
    ideal_uplink, make_fast_matrix, separate_downlink, separate_uplink, synthesize_downlink, synthesize_uplink,
    PilotMatrix, ReflectionSchedule,
};
use riscsi_core::{CVector, Complex64, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeId {
    /// Full NOMP extraction of every path.
    FullNompBaseline,
    /// LoS identification, customization and downlink estimation.
    ProposedCustomized,
    /// True channel at the receiver.
    PerfectCsi,
}

impl SchemeId {
    pub const ALL: [SchemeId; 3] = [Self::FullNompBaseline, Self::ProposedCustomized, Self::PerfectCsi];

    pub fn name(self) -> &'static str {
        match self {
            Self::FullNompBaseline => "full-nomp-baseline",
            Self::ProposedCustomized => "proposed-customized",
            Self::PerfectCsi => "perfect-csi",
        }
    }
}

/// Source of the UE–RIS LoS frequencies that configure the RISs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReflectionMode {
    /// LoS frequencies from the uplink identification, shared by every
    /// scheme so all of them see the same reflection channel.
    #[default]
    Estimated,
    /// True LoS frequencies.
    Oracle,
    /// Random unit-modulus phases, i.e. no customization.
    Random,
}

/// Which LoS arrival of the identification configures the RISs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LosFrequencies {
    #[default]
    Extracted,
    /// Arrivals recomputed from the position fix.
    BackComputed,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineOptions {
    pub reflection: ReflectionMode,
    pub los_frequencies: LosFrequencies,
    pub nomp: NompConfig,
    pub algorithm1: Algorithm1Config,
    pub downlink: DownlinkConfig,
}

/// What phase 2 learned about the UE–RIS LoS paths.
struct LosEstimate {
    /// Per-RIS LoS path as extracted.
    paths: Vec<PathEstimate>,
    /// Frequencies used for the reflection design.
    design: Vec<UpaFrequency>,
}

/// Runs phases 1 to 5 for `scheme` on one freshly drawn realization.
///
/// The UE position and channel are drawn first, so every scheme and every
/// noise level sees the same realization for the same RNG state.
pub fn run_phase_pipeline<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    scheme: SchemeId,
    options: &PipelineOptions,
    rng: &mut R,
) -> Result<MetricReport> {
    cfg.validate()?;
    options.nomp.validate()?;
    let ue = sample_ue_position(cfg, rng);
    let geometry = ScenarioGeometry::resolve(cfg, ue)?;
    let real = ChannelRealization::sample(cfg, geometry, rng)?;
    let random_gammas: Vec<CVector> = real
        .geometry
        .ris
        .iter()
        .map(|r| CVector::from_fn(r.elements(), |_, _| Complex64::from_polar(1.0, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))))
        .collect();
    let k = real.links.len();
    let mut report = MetricReport::default();

    // Phase 1: uplink training and link separation.
    let sizes: Vec<usize> = real.geometry.ris.iter().map(|r| r.elements()).collect();
    let schedule = ReflectionSchedule::default_for(&sizes);
    let pilots = PilotMatrix::dft(cfg.ue_antennas, cfg.ue_power());
    let raw = synthesize_uplink(cfg, &real, &schedule, &pilots, rng)?;
    let separated = separate_uplink(&raw, &schedule.fast)?;
    let noise = separate_uplink(&raw.noise_only(), &schedule.fast)?;
    let variance = cfg.training_noise_power() * schedule.fast.len() as f64;
    for (i, (y, n)) in separated.iter().zip(&noise).enumerate() {
        let ideal = ideal_uplink(&real, &schedule, &pilots, i)?;
        report
            .nmse_separation
            .push((y.norm_squared() > 0.0).then(|| nmse_separation(y, &ideal, n, variance)).transpose()?);
    }
    let observations = (0..k)
        .map(|i| RisObservation::from_geometry(cfg, &real.geometry, i, separated[i + 1].clone(), &schedule, &pilots))
        .collect::<Result<Vec<_>>>()?;
    let rb_gains: Vec<Complex64> = observations.iter().map(|o| o.rb_los_gain).collect();

    // Phase 2: full extraction for the baseline; LoS identification for the
    // proposed scheme and for the shared reflection design.
    let mut extractions = None;
    let mut strongest = None;
    if scheme == SchemeId::FullNompBaseline {
        let budgets: Vec<PathBudget> = (0..k)
            .map(|i| PathBudget {
                ue_ris: Some(cfg.nlos_ur_of(i) + 1),
                ris_bs: Some(cfg.nlos_rb_of(i)),
            })
            .collect();
        let out = full_extraction(&observations, &options.nomp, &budgets)?;
        report.coarse_evaluations = Some(out.iter().map(|e| e.coarse_evaluations).sum());
        let paths: Vec<PathEstimate> = out
            .iter()
            .map(|e| {
                *e.estimate
                    .ue_ris
                    .iter()
                    .max_by(|a, b| a.gain.norm().total_cmp(&b.gain.norm()))
                    .expect("budget extracts at least the LoS path")
            })
            .collect();
        extractions = Some(out);
        strongest = Some(paths);
    }
    let identified = if scheme == SchemeId::ProposedCustomized || options.reflection == ReflectionMode::Estimated {
        let extractors = observations
            .into_iter()
            .map(|o| UeRisExtractor::new(o, &options.nomp))
            .collect::<Result<Vec<_>>>()?;
        let limits = (0..k).map(|i| cfg.nlos_ur_of(i) + 1).collect();
        let mut source = UplinkCandidates { extractors, limits };
        let id = algorithm1(&real.geometry.ris, &real.geometry.ue_orientation, &mut source, &options.algorithm1)?;
        if scheme == SchemeId::ProposedCustomized {
            let searched: u64 = source.extractors.iter().map(|e| e.coarse_evaluations()).sum();
            report.coarse_evaluations = Some(searched + los_charge(cfg, &options.nomp, &sizes));
            report.position_error = Some(id.fix.e_u_star.distance(&ue));
            report.los_rounds = Some(id.rounds);
            report.los_converged = Some(id.converged);
        }
        let design = match options.los_frequencies {
            LosFrequencies::Extracted => id.los.iter().map(|p| p.ris).collect(),
            LosFrequencies::BackComputed => id.back_computed.clone(),
        };
        Some(LosEstimate { paths: id.los, design })
    } else {
        None
    };
    let own_los = match scheme {
        SchemeId::FullNompBaseline => strongest.as_deref(),
        SchemeId::ProposedCustomized => identified.as_ref().map(|e| e.paths.as_slice()),
        SchemeId::PerfectCsi => None,
    };
    if let Some(paths) = own_los {
        let mut theta = Vec::with_capacity(k);
        let mut phi = Vec::with_capacity(k);
        for (i, p) in paths.iter().enumerate() {
            let (truth, _) = real.geometry.ur_los(i)?;
            theta.push((p.ris.theta_cap, truth.theta_cap));
            phi.push((p.ris.phi_cap, truth.phi_cap));
        }
        report.nme_theta_ur = Some(nme_pairs(&theta)?);
        report.nme_phi_ur = Some(nme_pairs(&phi)?);
    }

    // Phase 3: reflection design and sparse reconstruction.
    let gammas = match options.reflection {
        ReflectionMode::Random => random_gammas,
        ReflectionMode::Oracle => ReflectionDesign::oracle(&real)?.gammas,
        ReflectionMode::Estimated => {
            let est = identified.as_ref().expect("identification runs for estimated designs");
            ReflectionDesign::new(&real, &est.design)?.gammas
        }
    };
    let h_refl = real.reflection(&gammas)?;
    let enhanced = SparseApprox::from_realization(&real, &gammas)?.matrix();
    report.power_ratio = Some(power_ratio(&h_refl, &enhanced)?.ratio);
    let (nb, nu) = (cfg.bs_antennas, cfg.ue_antennas);
    let estimate = match scheme {
        SchemeId::PerfectCsi => h_refl.clone(),
        SchemeId::FullNompBaseline => {
            let h = reconstruct(extractions.as_ref().expect("baseline extractions"), &gammas)?;
            report.nmse_uplink = Some(nmse(&h_refl, &h)?);
            h
        }
        SchemeId::ProposedCustomized => {
            let est = identified.as_ref().expect("proposed LoS estimate");
            let mut bs = Vec::with_capacity(k);
            let mut xi = Vec::with_capacity(k);
            for i in 0..k {
                let (b, _) = real.geometry.rb_los(i)?;
                bs.push(b.theta_cap);
                xi.push(rb_gains[i] * est.paths[i].gain);
            }
            let ue: Vec<f64> = est.paths.iter().map(|p| p.array).collect();
            let h_up = SparseApprox::from_parts(&bs, &ue, xi, nb, nu)?.matrix();
            report.nmse_uplink = Some(nmse(&h_refl, &h_up)?);

            // Phases 4 and 5: downlink training under the design and ML fit.
            let fast = make_fast_matrix(k);
            let bs_pilots = PilotMatrix::dft(nb, cfg.bs_power());
            let raw = synthesize_downlink(cfg, &real, &gammas, &fast, &bs_pilots, rng)?;
            let separated = separate_downlink(&raw, &fast)?.split_off(1);
            let dl = DownlinkEstimate::estimate(&separated, &bs_pilots, &bs, fast.len(), &options.downlink)?;
            let h_dl = dl.reconstruct(nb, nu);
            report.nmse_downlink = Some(nmse(&h_refl, &h_dl)?);
            let pairs = dl
                .paths
                .iter()
                .enumerate()
                .map(|(i, p)| Ok((p.ue, real.geometry.ur_los(i)?.1.theta_cap)))
                .collect::<Result<Vec<_>>>()?;
            report.nme_theta_dl = Some(nme_pairs(&pairs)?);
            h_dl
        }
    };

    // Downlink transceiver from the estimate, evaluated on the true channel.
    let noise_power = cfg.noise_power();
    let direct = real.direct_channel();
    let h_true = &h_refl + &direct;
    let tx = svd_transceiver(&(&estimate + &direct), cfg.bs_power(), noise_power)?;
    report.se = Some(spectral_efficiency(&h_true, &tx, noise_power)?);
    let tx_perfect = svd_transceiver(&h_true, cfg.bs_power(), noise_power)?;
    report.se_perfect = Some(spectral_efficiency(&h_true, &tx_perfect, noise_power)?);
    Ok(report)
}

/// BS-grid search charged for the RIS–BS LoS path of every RIS, which the
/// proposed scheme takes from geometry: `η_v η_h M_k η_b N_b` per RIS.
pub fn los_charge(cfg: &ScenarioConfig, nomp: &NompConfig, sizes: &[usize]) -> u64 {
    sizes
        .iter()
        .map(|&m| (nomp.oversampling_ris_v * nomp.oversampling_ris_h * m * nomp.oversampling_bs * cfg.bs_antennas) as u64)
        .sum()
}

fn nme_pairs(pairs: &[(f64, f64)]) -> Result<f64> {
    let (est, truth): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    nme(&est, &truth)
}
