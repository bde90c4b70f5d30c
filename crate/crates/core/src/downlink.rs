//! Downlink estimation on the customized channel. The BS sends `N_b` pilots
//! over `K_F` fast slots; after separation the UE reduces each link to one
//! vector and fits a single path to it.

use crate::geometry::ula_steering;
use crate::linalg::{dot_h, energy};
use crate::nomp::atoms::{frequency_grid, UlaAtom};
use crate::nomp::refine::refine;
use crate::training::PilotMatrix;
use crate::{CMatrix, CVector, Complex64, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// UE-side grid and refinement settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DownlinkConfig {
    /// Oversampling of the UE grid, `η_u`.
    pub oversampling: usize,
    /// Newton steps of the refinement.
    pub newton_steps: usize,
}

impl Default for DownlinkConfig {
    fn default() -> Self {
        Self {
            oversampling: 2,
            newton_steps: 12,
        }
    }
}

/// `y = Y S_bᴴ a_b(Θ^rb,A) / (P_b K_F)` for the separated observation
/// `Y ∈ C^{N_u × N_b}` of one link.
pub fn reduce_signal(y: &CMatrix, pilots: &PilotMatrix, bs_los: f64, fast_slots: usize) -> Result<CVector> {
    let nb = pilots.s.nrows();
    if y.ncols() != pilots.len() || pilots.len() != nb {
        return Err(Error::DimensionMismatch(format!(
            "observation {:?} against {nb} × {} pilots",
            y.shape(),
            pilots.len()
        )));
    }
    if fast_slots == 0 || !(pilots.power > 0.0) {
        return Err(Error::InvalidConfig("need fast slots and pilot power".into()));
    }
    let ab = ula_steering(nb, bs_los);
    Ok(y * (pilots.s.adjoint() * ab) / Complex64::new(pilots.power * fast_slots as f64, 0.0))
}

/// Single-path fit of one reduced downlink signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DownlinkPath {
    /// Conjugate of the impaired cascaded LoS gain, `ξ̌*`.
    pub gain_conj: Complex64,
    /// UE departure frequency `Θ̌^ur,D`.
    pub ue: f64,
    /// BS arrival frequency of the RIS–BS LoS path, known from geometry.
    pub bs: f64,
}

impl DownlinkPath {
    /// Impaired cascaded gain `ξ̌`.
    pub fn gain(&self) -> Complex64 {
        self.gain_conj.conj()
    }
}

/// Maximum-likelihood frequency and gain of `y ≈ g a_u(Θ)`: coarse search
/// on an `η_u N_u` grid followed by Newton refinement; `g = a_uᴴ(Θ̌) y`.
/// Returns `(g, Θ̌)` and the number of grid evaluations.
pub fn ml_single_path(y: &CVector, cfg: &DownlinkConfig) -> Result<(Complex64, f64, u64)> {
    let n = y.len();
    if n == 0 || energy(y.as_slice()) == 0.0 {
        return Err(Error::NoSignal);
    }
    if cfg.oversampling == 0 {
        return Err(Error::EmptyGrid);
    }
    let size = cfg.oversampling * n;
    let grid = frequency_grid(size);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for &w in &grid {
        let score = dot_h(ula_steering(n, w).as_slice(), y.as_slice()).norm_sqr();
        if score > best.0 {
            best = (score, w);
        }
    }
    let model = UlaAtom {
        antennas: n,
        spacing: 2.0 * PI / size as f64,
    };
    let mut w = [best.1];
    let gain = refine(&model, &mut w, y.as_slice(), cfg.newton_steps, &|_| false);
    Ok((gain, crate::geometry::wrap_to_pi(w[0]), size as u64))
}

/// Per-RIS downlink estimates and the reconstructed reflection channel.
#[derive(Debug, Clone, PartialEq)]
pub struct DownlinkEstimate {
    pub paths: Vec<DownlinkPath>,
    /// Grid evaluations of all per-RIS searches.
    pub coarse_evaluations: u64,
}

impl DownlinkEstimate {
    /// Fits one path per RIS. `separated[k]` is the observation of RIS `k`
    /// and `bs_los[k]` its RIS–BS LoS arrival at the BS.
    pub fn estimate(
        separated: &[CMatrix],
        pilots: &PilotMatrix,
        bs_los: &[f64],
        fast_slots: usize,
        cfg: &DownlinkConfig,
    ) -> Result<Self> {
        if separated.len() != bs_los.len() {
            return Err(Error::DimensionMismatch("one BS frequency per RIS".into()));
        }
        let mut paths = Vec::with_capacity(separated.len());
        let mut coarse = 0;
        for (y, &bs) in separated.iter().zip(bs_los) {
            let r = reduce_signal(y, pilots, bs, fast_slots)?;
            let (gain_conj, ue, n) = ml_single_path(&r, cfg)?;
            coarse += n;
            paths.push(DownlinkPath { gain_conj, ue, bs });
        }
        Ok(Self {
            paths,
            coarse_evaluations: coarse,
        })
    }

    /// Reflection channel estimate `Ȟ = Σ_k ξ̌_k a_b(Θ_k^rb,A) a_uᴴ(Θ̌_k)`,
    /// the adjoint of the downlink channel `Ȟᴴ`.
    pub fn reconstruct(&self, bs_antennas: usize, ue_antennas: usize) -> CMatrix {
        reconstruct_downlink(&self.paths, bs_antennas, ue_antennas)
    }
}

pub fn reconstruct_downlink(paths: &[DownlinkPath], bs_antennas: usize, ue_antennas: usize) -> CMatrix {
    let mut h = CMatrix::zeros(bs_antennas, ue_antennas);
    for p in paths {
        h += (ula_steering(bs_antennas, p.bs) * p.gain()) * ula_steering(ue_antennas, p.ue).adjoint();
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_signal_is_rejected() {
        let y = CVector::zeros(4);
        assert_eq!(ml_single_path(&y, &DownlinkConfig::default()), Err(Error::NoSignal));
    }

    #[test]
    fn on_grid_path_is_exact() {
        let w = frequency_grid(8)[3];
        let g = Complex64::new(0.2, -1.5);
        let y = ula_steering(4, w) * g;
        let (gh, wh, n) = ml_single_path(&y, &DownlinkConfig::default()).unwrap();
        assert!((wh - w).abs() < 1e-12 && (gh - g).norm() < 1e-12);
        assert_eq!(n, 8);
    }

    #[test]
    fn identity_pilots_reduce_to_column_combination() {
        let p = PilotMatrix::new(CMatrix::identity(3, 3) * Complex64::new(2.0, 0.0), 4.0).unwrap();
        let y = CMatrix::from_fn(2, 3, |i, j| Complex64::new(i as f64 + 1.0, j as f64));
        let r = reduce_signal(&y, &p, 0.4, 2).unwrap();
        let ab = ula_steering(3, 0.4);
        let want = &y * ab * Complex64::new(2.0 / 8.0, 0.0);
        assert!((r - want).norm() < 1e-14);
    }
}
