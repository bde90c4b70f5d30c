//! Scenario description: geometry, array sizes, path counts and powers.

use crate::geometry::{ArrayShape, Orientation, Position};
use crate::{Error, Result};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// How the UE position is chosen for each trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UePlacement {
    /// Uniform over a horizontal disk.
    Disk { center: Position, radius: f64 },
    Fixed { position: Position },
}

impl UePlacement {
    /// Points whose directions bound every possible UE direction.
    pub(crate) fn hull_points(&self) -> Vec<Position> {
        match self {
            UePlacement::Fixed { position } => vec![*position],
            UePlacement::Disk { center, radius } => {
                let mut pts = vec![*center];
                for i in 0..64 {
                    let a = 2.0 * PI * i as f64 / 64.0;
                    pts.push(Position::new(
                        center.x + radius * a.cos(),
                        center.y + radius * a.sin(),
                        center.z,
                    ));
                }
                pts
            }
        }
    }
}

/// One RIS: position, element grid and optional overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisConfig {
    pub position: Position,
    pub vertical: usize,
    pub horizontal: usize,
    /// Surface normal; derived from the geometry when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boresight: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nlos_ur: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nlos_rb: Option<usize>,
}

impl RisConfig {
    pub fn new(position: [f64; 3], vertical: usize, horizontal: usize) -> Self {
        Self {
            position: position.into(),
            vertical,
            horizontal,
            boresight: None,
            nlos_ur: None,
            nlos_rb: None,
        }
    }

    pub fn shape(&self) -> ArrayShape {
        ArrayShape::Upa {
            vertical: self.vertical,
            horizontal: self.horizontal,
        }
    }

    pub fn elements(&self) -> usize {
        self.vertical * self.horizontal
    }
}

/// Physical constants and geometry of a simulated deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub carrier_frequency_hz: f64,
    pub bs_position: Position,
    pub bs_antennas: usize,
    /// Direction of the BS ULA axis.
    pub bs_axis: [f64; 3],
    pub ue_antennas: usize,
    pub ue_axis: [f64; 3],
    pub ue_placement: UePlacement,
    pub ris: Vec<RisConfig>,
    /// NLoS paths per UE–RIS hop (the LoS path comes on top).
    pub nlos_ur: usize,
    /// NLoS paths per RIS–BS hop.
    pub nlos_rb: usize,
    /// Scattered paths of the direct UE–BS hop, which has no LoS component.
    pub nlos_direct: usize,
    /// Rician factor of the UE–RIS hops, linear.
    pub kappa_ur: f64,
    /// Rician factor of the RIS–BS hops, linear.
    pub kappa_rb: f64,
    /// Total blockage loss of the direct hop, dB.
    pub penetration_loss_db: f64,
    pub noise_power_dbm: f64,
    pub ue_power_dbm: f64,
    pub bs_power_dbm: f64,
    /// When false, pilots are received without noise; the noise power is
    /// still used for the spectral efficiency.
    pub training_noise: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let ris = [
            [86.0, -7.0, 16.0],
            [71.0, -2.0, 16.0],
            [71.0, 2.0, 16.0],
            [86.0, 7.0, 16.0],
        ]
        .into_iter()
        .map(|p| RisConfig::new(p, 5, 5))
        .collect();
        Self {
            carrier_frequency_hz: 26e9,
            bs_position: Position::new(0.0, 0.0, 60.0),
            bs_antennas: 16,
            bs_axis: [0.0, 1.0, 0.0],
            ue_antennas: 4,
            ue_axis: [0.0, 1.0, 0.0],
            ue_placement: UePlacement::Disk {
                center: Position::new(80.0, 0.0, 0.0),
                radius: 8.0,
            },
            ris,
            nlos_ur: 5,
            nlos_rb: 2,
            nlos_direct: 5,
            kappa_ur: 10.0,
            kappa_rb: 1000.0,
            penetration_loss_db: 78.0,
            noise_power_dbm: -110.0,
            ue_power_dbm: 30.0,
            bs_power_dbm: 30.0,
            training_noise: true,
            seed: 1,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

impl ScenarioConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    /// Amplitude factor of the blockage loss.
    pub fn epsilon0(&self) -> f64 {
        10f64.powf(-self.penetration_loss_db / 20.0)
    }

    pub fn noise_power(&self) -> f64 {
        dbm_to_watts(self.noise_power_dbm)
    }

    pub fn ue_power(&self) -> f64 {
        dbm_to_watts(self.ue_power_dbm)
    }

    pub fn bs_power(&self) -> f64 {
        dbm_to_watts(self.bs_power_dbm)
    }

    /// Noise power applied to the training signals.
    pub fn training_noise_power(&self) -> f64 {
        if self.training_noise {
            self.noise_power()
        } else {
            0.0
        }
    }

    pub fn ris_count(&self) -> usize {
        self.ris.len()
    }

    pub fn nlos_ur_of(&self, k: usize) -> usize {
        self.ris[k].nlos_ur.unwrap_or(self.nlos_ur)
    }

    pub fn nlos_rb_of(&self, k: usize) -> usize {
        self.ris[k].nlos_rb.unwrap_or(self.nlos_rb)
    }

    /// Sets both transmit powers to `snr_db` above the noise floor.
    pub fn set_transmit_snr_db(&mut self, snr_db: f64) {
        self.ue_power_dbm = self.noise_power_dbm + snr_db;
        self.bs_power_dbm = self.noise_power_dbm + snr_db;
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.carrier_frequency_hz > 0.0) {
            return bad("carrier frequency must be positive".into());
        }
        if self.bs_antennas == 0 || self.ue_antennas == 0 {
            return bad("antenna counts must be positive".into());
        }
        for (k, r) in self.ris.iter().enumerate() {
            if r.elements() == 0 {
                return bad(format!("RIS {k} has no elements"));
            }
            if !r.position.is_finite() {
                return bad(format!("RIS {k} position is not finite"));
            }
        }
        if !(self.kappa_ur >= 0.0 && self.kappa_rb >= 0.0) {
            return bad("Rician factors must be non-negative".into());
        }
        for (name, v) in [
            ("noise power", self.noise_power_dbm),
            ("UE power", self.ue_power_dbm),
            ("BS power", self.bs_power_dbm),
            ("penetration loss", self.penetration_loss_db),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if let UePlacement::Disk { radius, .. } = self.ue_placement {
            if !(radius >= 0.0) {
                return bad("UE disk radius must be non-negative".into());
            }
        }
        Ok(())
    }

    /// Frames of every RIS. A RIS without an explicit boresight faces the
    /// direction that keeps the BS and every admissible UE position as far
    /// inside its front half-space as possible.
    pub fn ris_orientations(&self) -> Result<Vec<Orientation>> {
        let hull = self.ue_placement.hull_points();
        self.ris
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let b = match r.boresight {
                    Some(b) => Vector3::from(b),
                    None => {
                        let e = r.position.to_vector();
                        let mut dirs = vec![unit(&(self.bs_position.to_vector() - e))?];
                        for p in &hull {
                            dirs.push(unit(&(p.to_vector() - e))?);
                        }
                        let b = minimax_direction(&dirs);
                        if dirs.iter().map(|d| d.dot(&b)).fold(f64::INFINITY, f64::min) <= 0.0 {
                            return Err(Error::DegenerateGeometry(format!(
                                "RIS {k} cannot face both the BS and the UE area"
                            )));
                        }
                        b
                    }
                };
                Orientation::facing(b)
            })
            .collect()
    }
}

fn unit(v: &Vector3<f64>) -> Result<Vector3<f64>> {
    let n = v.norm();
    if !(n > 0.0) {
        return Err(Error::DegenerateGeometry("RIS coincides with an endpoint".into()));
    }
    Ok(v / n)
}

/// Unit vector maximizing the smallest inner product with `dirs`.
fn minimax_direction(dirs: &[Vector3<f64>]) -> Vector3<f64> {
    let worst = |b: &Vector3<f64>| {
        dirs.iter()
            .enumerate()
            .map(|(i, d)| (i, d.dot(b)))
            .fold((0, f64::INFINITY), |a, x| if x.1 < a.1 { x } else { a })
    };
    let mut b = dirs.iter().sum::<Vector3<f64>>();
    if b.norm() < 1e-12 {
        b = dirs[0];
    }
    b = b.normalize();
    let mut best = (b, worst(&b).1);
    for it in 1..=4000 {
        let (i, _) = worst(&b);
        b = (b + dirs[i] / it as f64).normalize();
        let w = worst(&b).1;
        if w > best.1 {
            best = (b, w);
        }
    }
    best.0
}
