#![allow(dead_code)]

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riscsi_core::channel::{
    rician_weights, ChannelRealization, Hop, PathParams, PathRole, RisConfig, RisLink, ScenarioConfig,
    ScenarioGeometry, SegmentChannel, SpatialFrequency,
};
use riscsi_core::geometry::{ArrayShape, Position, UlaFrequency, UpaFrequency};
use riscsi_core::nomp::RisObservation;
use riscsi_core::training::{ideal_uplink, PilotMatrix, ReflectionSchedule};
use riscsi_core::{CMatrix, CVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// One hand-placed path: RIS horizontal and vertical frequencies, the
/// frequency at the ULA end and the gain.
#[derive(Debug, Clone, Copy)]
pub struct Path {
    pub theta: f64,
    pub phi: f64,
    pub array: f64,
    pub gain: Complex64,
}

pub fn path(theta: f64, phi: f64, array: f64, gain: Complex64) -> Path {
    Path {
        theta,
        phi,
        array,
        gain,
    }
}

pub struct Fixture {
    pub cfg: ScenarioConfig,
    pub real: ChannelRealization,
    pub schedule: ReflectionSchedule,
    pub pilots: PilotMatrix,
}

impl Fixture {
    pub fn sizes(&self) -> Vec<usize> {
        self.cfg.ris.iter().map(|r| r.elements()).collect()
    }

    /// Noise-free observation of RIS `k`.
    pub fn observation(&self, k: usize) -> RisObservation {
        let y = ideal_uplink(&self.real, &self.schedule, &self.pilots, k + 1).unwrap();
        RisObservation::from_geometry(&self.cfg, &self.real.geometry, k, y, &self.schedule, &self.pilots).unwrap()
    }

    pub fn observations(&self) -> Vec<RisObservation> {
        (0..self.cfg.ris.len()).map(|k| self.observation(k)).collect()
    }

    /// Unit-modulus reflection vectors drawn from the given seed.
    pub fn random_gammas(&self, seed: u64) -> Vec<CVector> {
        use rand::Rng;
        let mut r = rng(seed);
        self.sizes()
            .iter()
            .map(|&m| DVector::from_fn(m, |_, _| Complex64::from_polar(1.0, r.random_range(-3.2..3.2))))
            .collect()
    }
}

fn ula_upa(hop: Hop, n: usize, v: usize, h: usize, to_ris: bool, paths: Vec<PathParams>) -> SegmentChannel {
    let ula = ArrayShape::Ula(n);
    let upa = ArrayShape::Upa {
        vertical: v,
        horizontal: h,
    };
    if to_ris {
        SegmentChannel::from_paths(hop, upa, ula, paths).unwrap()
    } else {
        SegmentChannel::from_paths(hop, ula, upa, paths).unwrap()
    }
}

/// Single-RIS scenario with the given UE–RIS paths and RIS–BS scattered
/// paths; the RIS–BS LoS path follows the geometry. No direct channel.
pub fn one_ris(ris: [f64; 3], v: usize, h: usize, ur: &[Path], rb: &[Path]) -> Fixture {
    let mut cfg = ScenarioConfig {
        ris: vec![RisConfig::new(ris, v, h)],
        nlos_direct: 0,
        training_noise: false,
        ..ScenarioConfig::default()
    };
    cfg.nlos_ur = ur.len().saturating_sub(1);
    cfg.nlos_rb = rb.len();
    let geometry = ScenarioGeometry::resolve(&cfg, Position::new(80.0, 0.0, 0.0)).unwrap();
    let large_scale = geometry.large_scale(&cfg).unwrap();
    let (nb, nu) = (cfg.bs_antennas, cfg.ue_antennas);
    let to_ula = |p: &Path, role| PathParams {
        role,
        arrival: SpatialFrequency::Upa(UpaFrequency::new(p.theta, p.phi)),
        departure: SpatialFrequency::Ula(UlaFrequency::new(p.array)),
        beta: p.gain,
        gain: p.gain,
    };
    let ur_paths = ur
        .iter()
        .enumerate()
        .map(|(i, p)| to_ula(p, if i == 0 { PathRole::Los } else { PathRole::Nlos }))
        .collect();
    let (bs_los, ris_los) = geometry.rb_los(0).unwrap();
    let g0 = Complex64::new(((v * h * nb) as f64).sqrt() * rician_weights(cfg.kappa_rb).0, 0.0);
    let mut rb_paths = vec![PathParams {
        role: PathRole::Los,
        arrival: SpatialFrequency::Ula(bs_los),
        departure: SpatialFrequency::Upa(ris_los),
        beta: c(1.0, 0.0),
        gain: g0,
    }];
    rb_paths.extend(rb.iter().map(|p| PathParams {
        role: PathRole::Nlos,
        arrival: SpatialFrequency::Ula(UlaFrequency::new(p.array)),
        departure: SpatialFrequency::Upa(UpaFrequency::new(p.theta, p.phi)),
        beta: p.gain,
        gain: p.gain,
    }));
    let real = ChannelRealization {
        direct: SegmentChannel::from_paths(Hop::Direct, ArrayShape::Ula(nb), ArrayShape::Ula(nu), Vec::new()).unwrap(),
        links: vec![RisLink {
            ur: ula_upa(Hop::UeRis(0), nu, v, h, true, ur_paths),
            rb: ula_upa(Hop::RisBs(0), nb, v, h, false, rb_paths),
        }],
        geometry,
        large_scale,
    };
    let schedule = ReflectionSchedule::default_for(&[v * h]);
    let pilots = PilotMatrix::dft(nu, cfg.ue_power());
    Fixture {
        cfg,
        real,
        schedule,
        pilots,
    }
}

/// Sampled realization of `cfg` at a fixed UE position.
pub fn sampled(cfg: ScenarioConfig, ue: Position, seed: u64) -> Fixture {
    let geometry = ScenarioGeometry::resolve(&cfg, ue).unwrap();
    let real = ChannelRealization::sample(&cfg, geometry, &mut rng(seed)).unwrap();
    let sizes: Vec<usize> = cfg.ris.iter().map(|r| r.elements()).collect();
    let schedule = ReflectionSchedule::default_for(&sizes);
    let pilots = PilotMatrix::dft(cfg.ue_antennas, cfg.ue_power());
    Fixture {
        cfg,
        real,
        schedule,
        pilots,
    }
}

pub fn nmse(truth: &CMatrix, est: &CMatrix) -> f64 {
    (truth - est).norm_squared() / truth.norm_squared()
}
