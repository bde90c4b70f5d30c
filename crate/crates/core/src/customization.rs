//! Reflection design that enhances the cascaded LoS paths, the resulting
//! sparse channel approximation and the averaged cascaded path powers.

use crate::channel::{cascaded_gain, rician_weights, ChannelRealization, PathParams, PathRole};
use crate::geometry::{ula_steering, upa_steering, UpaFrequency};
use crate::linalg::complex_normal;
use crate::{CMatrix, CVector, Complex64, Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `γ = M a_r(rb) ⊙ a_r*(ur)`, which aligns the RIS–BS departure `rb` with
/// the UE–RIS arrival `ur`. Every entry has unit modulus.
pub fn design_reflection(vertical: usize, horizontal: usize, rb: UpaFrequency, ur: UpaFrequency) -> CVector {
    let m = (vertical * horizontal) as f64;
    let a = upa_steering(vertical, horizontal, rb);
    let b = upa_steering(vertical, horizontal, ur);
    a.zip_map(&b, |x, y| x * y.conj() * m)
}

/// Reflection vectors of every RIS together with the frequencies used.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionDesign {
    pub gammas: Vec<CVector>,
    pub rb: Vec<UpaFrequency>,
    pub ur: Vec<UpaFrequency>,
}

impl ReflectionDesign {
    /// Designs every RIS of `real` from the geometric RIS–BS departures and
    /// the given UE–RIS arrivals.
    pub fn new(real: &ChannelRealization, ur: &[UpaFrequency]) -> Result<Self> {
        let g = &real.geometry;
        if ur.len() != g.ris.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} arrivals for {} RISs",
                ur.len(),
                g.ris.len()
            )));
        }
        let rb = (0..g.ris.len())
            .map(|k| g.rb_los(k).map(|(_, d)| d))
            .collect::<Result<Vec<_>>>()?;
        let gammas = g
            .ris
            .iter()
            .zip(rb.iter().zip(ur))
            .map(|(r, (&b, &u))| design_reflection(r.vertical, r.horizontal, b, u))
            .collect();
        Ok(Self {
            gammas,
            rb,
            ur: ur.to_vec(),
        })
    }

    /// Design from the true UE–RIS LoS arrivals.
    pub fn oracle(real: &ChannelRealization) -> Result<Self> {
        let ur = (0..real.geometry.ris.len())
            .map(|k| real.geometry.ur_los(k).map(|(a, _)| a))
            .collect::<Result<Vec<_>>>()?;
        Self::new(real, &ur)
    }
}

/// Sparse reflection channel `A_b,e Ξ_e A_u,eᴴ` built from one cascaded LoS
/// path per RIS.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseApprox {
    /// BS responses of the RIS–BS LoS paths, `N_b × K`.
    pub a_b: CMatrix,
    /// UE responses of the UE–RIS LoS paths, `N_u × K`.
    pub a_u: CMatrix,
    /// Cascaded LoS gains `ξ_k00`.
    pub xi: Vec<Complex64>,
}

impl SparseApprox {
    pub fn from_parts(bs: &[f64], ue: &[f64], xi: Vec<Complex64>, bs_antennas: usize, ue_antennas: usize) -> Result<Self> {
        if bs.len() != xi.len() || ue.len() != xi.len() {
            return Err(Error::DimensionMismatch("one frequency pair per gain".into()));
        }
        let cols = |n: usize, f: &[f64]| {
            let mut a = CMatrix::zeros(n, f.len());
            for (j, &w) in f.iter().enumerate() {
                a.set_column(j, &ula_steering(n, w));
            }
            a
        };
        Ok(Self {
            a_b: cols(bs_antennas, bs),
            a_u: cols(ue_antennas, ue),
            xi,
        })
    }

    /// Approximation of the true reflection channel under `gammas`, with
    /// `ξ_k00` the exact cascaded LoS gain under the applied reflection.
    pub fn from_realization(real: &ChannelRealization, gammas: &[CVector]) -> Result<Self> {
        let k = real.links.len();
        if gammas.len() != k {
            return Err(Error::DimensionMismatch(format!("{} reflection vectors for {k} RISs", gammas.len())));
        }
        let g = &real.geometry;
        let mut bs = Vec::with_capacity(k);
        let mut ue = Vec::with_capacity(k);
        let mut xi = Vec::with_capacity(k);
        for (i, link) in real.links.iter().enumerate() {
            let los = |paths: &[PathParams], what: &str| {
                paths
                    .iter()
                    .position(|p| p.role == PathRole::Los)
                    .ok_or_else(|| Error::InvalidConfig(format!("RIS {i} has no {what} LoS path")))
            };
            let li = los(&link.rb.paths, "RIS–BS")?;
            let ci = los(&link.ur.paths, "UE–RIS")?;
            bs.push(link.rb.paths[li].arrival.ula().unwrap_or(g.rb_los(i)?.0.theta_cap));
            ue.push(link.ur.paths[ci].departure.ula().unwrap_or(g.ur_los(i)?.1.theta_cap));
            xi.push(cascaded_gain(li, ci, &gammas[i], &link.ur, &link.rb, real.large_scale.rho[i])?);
        }
        let (nb, nu) = real.direct.matrix.shape();
        Self::from_parts(&bs, &ue, xi, nb, nu)
    }

    /// `H_e = A_b,e Ξ_e A_u,eᴴ`.
    pub fn matrix(&self) -> CMatrix {
        let mut scaled = self.a_b.clone();
        for (mut col, x) in scaled.column_iter_mut().zip(&self.xi) {
            col *= *x;
        }
        scaled * self.a_u.adjoint()
    }
}

/// Energies of the enhanced and weakened parts of a reflection channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRatio {
    /// `‖H_e‖²`.
    pub enhanced: f64,
    /// `‖H_w‖²` with `H_w = H − H_e`.
    pub weakened: f64,
    /// `‖H_e‖² / (‖H_e‖² + ‖H_w‖²)`.
    pub ratio: f64,
    /// `‖H_e‖² / ‖H‖²`.
    pub enhanced_over_full: f64,
}

pub fn power_ratio(h_full: &CMatrix, h_e: &CMatrix) -> Result<PowerRatio> {
    if h_full.shape() != h_e.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", h_full.shape(), h_e.shape())));
    }
    let full = h_full.norm_squared();
    if full == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let enhanced = h_e.norm_squared();
    let weakened = (h_full - h_e).norm_squared();
    let total = enhanced + weakened;
    Ok(PowerRatio {
        enhanced,
        weakened,
        ratio: if total > 0.0 { enhanced / total } else { 0.0 },
        enhanced_over_full: enhanced / full,
    })
}

/// `D_N(Δ) = sin(NΔ) / (N sin Δ)`, continuous at the zeros of `sin Δ`.
pub fn dirichlet(n: usize, delta: f64) -> f64 {
    let nf = n as f64;
    let s = delta.sin();
    if s.abs() < 1e-9 {
        (nf * delta).cos() / delta.cos()
    } else {
        (nf * delta).sin() / (nf * s)
    }
}

/// Cascaded gain `ρ g_rb g_ur a_rᴴ(rb) diag(γ) a_r(ur)` under a reflection
/// designed for `(rb0, ur0)`, written with Dirichlet kernels.
#[allow(clippy::too_many_arguments)]
pub fn designed_cascaded_gain(
    vertical: usize,
    horizontal: usize,
    rho: f64,
    g_rb: Complex64,
    g_ur: Complex64,
    rb: UpaFrequency,
    ur: UpaFrequency,
    rb0: UpaFrequency,
    ur0: UpaFrequency,
) -> Complex64 {
    let dh = 0.5 * (ur.theta_cap - ur0.theta_cap) - 0.5 * (rb.theta_cap - rb0.theta_cap);
    let dv = 0.5 * (ur.phi_cap - ur0.phi_cap) - 0.5 * (rb.phi_cap - rb0.phi_cap);
    let phase = Complex64::from_polar(1.0, dh * (horizontal as f64 - 1.0) + dv * (vertical as f64 - 1.0));
    g_rb * g_ur * rho * dirichlet(horizontal, dh) * dirichlet(vertical, dv) * phase
}

/// Which hops of a cascaded path are LoS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CascadeCase {
    /// `l = 0, c = 0`.
    LosLos,
    /// `l = 0, c > 0`: RIS–BS LoS with a UE–RIS scattered path.
    LosNlos,
    /// `l > 0, c = 0`: RIS–BS scattered path with the UE–RIS LoS.
    NlosLos,
    /// `l > 0, c > 0`.
    NlosNlos,
}

impl CascadeCase {
    pub const ALL: [CascadeCase; 4] = [Self::LosLos, Self::LosNlos, Self::NlosLos, Self::NlosNlos];
}

/// Parameters of the averaged cascaded path powers of one RIS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeParams {
    pub vertical: usize,
    pub horizontal: usize,
    pub bs_antennas: usize,
    pub ue_antennas: usize,
    pub kappa_ur: f64,
    pub kappa_rb: f64,
    pub nlos_ur: usize,
    pub nlos_rb: usize,
    pub rho: f64,
}

impl CascadeParams {
    pub fn elements(&self) -> usize {
        self.vertical * self.horizontal
    }
}

/// Closed-form `E|ξ_lc|²` of one path in `case` under the designed
/// reflection, with scattered frequencies uniform on `[−π, π)`.
pub fn avg_cascaded_power(case: CascadeCase, p: &CascadeParams) -> Result<f64> {
    let m = p.elements() as f64;
    if m == 0.0 {
        return Err(Error::InvalidShape("RIS without elements".into()));
    }
    let base = p.rho * p.rho * m * m * (p.bs_antennas * p.ue_antennas) as f64
        / ((p.kappa_rb + 1.0) * (p.kappa_ur + 1.0));
    let per = |l: usize, what: &str| {
        if l == 0 {
            Err(Error::UndefinedRatio(format!("no {what} scattered paths")))
        } else {
            Ok(l as f64)
        }
    };
    Ok(match case {
        CascadeCase::LosLos => base * p.kappa_rb * p.kappa_ur,
        CascadeCase::LosNlos => base * p.kappa_rb / (m * per(p.nlos_ur, "UE–RIS")?),
        CascadeCase::NlosLos => base * p.kappa_ur / (m * per(p.nlos_rb, "RIS–BS")?),
        CascadeCase::NlosNlos => base / (m * per(p.nlos_ur, "UE–RIS")? * per(p.nlos_rb, "RIS–BS")?),
    })
}

/// `E|ξ_lc|² / E|ξ_00|²` for one path in `case`.
pub fn power_factor(case: CascadeCase, p: &CascadeParams) -> Result<f64> {
    let m = p.elements() as f64;
    let kappa = |k: f64, what: &str| {
        if k > 0.0 {
            Ok(k)
        } else {
            Err(Error::UndefinedRatio(format!("{what} Rician factor is zero")))
        }
    };
    let l = |n: usize, what: &str| {
        if n > 0 {
            Ok(n as f64)
        } else {
            Err(Error::UndefinedRatio(format!("no {what} scattered paths")))
        }
    };
    Ok(match case {
        CascadeCase::LosLos => 1.0,
        CascadeCase::LosNlos => 1.0 / (m * l(p.nlos_ur, "UE–RIS")? * kappa(p.kappa_ur, "UE–RIS")?),
        CascadeCase::NlosLos => 1.0 / (m * l(p.nlos_rb, "RIS–BS")? * kappa(p.kappa_rb, "RIS–BS")?),
        CascadeCase::NlosNlos => {
            1.0 / (m
                * l(p.nlos_rb, "RIS–BS")?
                * kappa(p.kappa_rb, "RIS–BS")?
                * l(p.nlos_ur, "UE–RIS")?
                * kappa(p.kappa_ur, "UE–RIS")?)
        }
    })
}

/// `E‖Ξ_k‖² / E|ξ_00|² = 1 + (1/M)(1/κ_ur + 1/κ_rb + 1/(κ_ur κ_rb))`.
pub fn block_power_factor(m: usize, kappa_ur: f64, kappa_rb: f64) -> Result<f64> {
    if !(kappa_ur > 0.0 && kappa_rb > 0.0) {
        return Err(Error::UndefinedRatio("Rician factor is zero".into()));
    }
    if m == 0 {
        return Err(Error::InvalidShape("RIS without elements".into()));
    }
    Ok(1.0 + (1.0 / kappa_ur + 1.0 / kappa_rb + 1.0 / (kappa_ur * kappa_rb)) / m as f64)
}

/// Expected enhanced power fraction `E|ξ_00|² / E‖Ξ_k‖²` under the designed
/// reflection.
pub fn customized_ratio_approx(m: usize, kappa_ur: f64, kappa_rb: f64) -> Result<f64> {
    Ok(1.0 / block_power_factor(m, kappa_ur, kappa_rb)?)
}

/// Monte Carlo draws of one cascaded block under the designed reflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeMonteCarlo {
    /// Mean `|ξ_lc|²` of one path per case.
    pub per_case: [f64; 4],
    /// Mean `‖Ξ_k‖²`.
    pub block: f64,
    pub draws: usize,
}

fn uniform_upa<R: Rng + ?Sized>(rng: &mut R) -> UpaFrequency {
    UpaFrequency::new(rng.random_range(-PI..PI), rng.random_range(-PI..PI))
}

/// Brute-force expectation of the cascaded path powers. Each draw samples
/// LoS and scattered frequencies uniformly, designs the reflection for the
/// LoS pair and evaluates every cascaded gain as an explicit inner product.
pub fn cascade_monte_carlo<R: Rng + ?Sized>(p: &CascadeParams, draws: usize, rng: &mut R) -> Result<CascadeMonteCarlo> {
    let (v, h) = (p.vertical, p.horizontal);
    let m = p.elements();
    if m == 0 || draws == 0 {
        return Err(Error::InvalidConfig("need elements and draws".into()));
    }
    let mf = m as f64;
    let (wl_ur, wn_ur) = rician_weights(p.kappa_ur);
    let (wl_rb, wn_rb) = rician_weights(p.kappa_rb);
    let g_ur0 = (mf * p.ue_antennas as f64).sqrt() * wl_ur;
    let g_rb0 = (mf * p.bs_antennas as f64).sqrt() * wl_rb;
    let s_ur = (mf * p.ue_antennas as f64 / p.nlos_ur.max(1) as f64).sqrt() * wn_ur;
    let s_rb = (mf * p.bs_antennas as f64 / p.nlos_rb.max(1) as f64).sqrt() * wn_rb;
    let mut sums = [0.0; 4];
    let mut counts = [0usize; 4];
    let mut block = 0.0;
    for _ in 0..draws {
        let rb0 = uniform_upa(rng);
        let ur0 = uniform_upa(rng);
        let gamma = design_reflection(v, h, rb0, ur0);
        let mut rb = vec![(upa_steering(v, h, rb0), Complex64::new(g_rb0, 0.0))];
        for _ in 0..p.nlos_rb {
            rb.push((upa_steering(v, h, uniform_upa(rng)), complex_normal(rng) * s_rb));
        }
        let mut ur = vec![(upa_steering(v, h, ur0), Complex64::new(g_ur0, 0.0))];
        for _ in 0..p.nlos_ur {
            ur.push((upa_steering(v, h, uniform_upa(rng)), complex_normal(rng) * s_ur));
        }
        let mut total = 0.0;
        for (l, (al, gl)) in rb.iter().enumerate() {
            for (c, (ac, gc)) in ur.iter().enumerate() {
                let inner: Complex64 = al
                    .iter()
                    .zip(gamma.iter())
                    .zip(ac.iter())
                    .map(|((a, g), b)| a.conj() * g * b)
                    .sum();
                let power = (gl * gc * inner * p.rho).norm_sqr();
                let case = match (l > 0, c > 0) {
                    (false, false) => 0,
                    (false, true) => 1,
                    (true, false) => 2,
                    (true, true) => 3,
                };
                sums[case] += power;
                counts[case] += 1;
                total += power;
            }
        }
        block += total;
    }
    let mut per_case = [f64::NAN; 4];
    for i in 0..4 {
        if counts[i] > 0 {
            per_case[i] = sums[i] / counts[i] as f64;
        }
    }
    Ok(CascadeMonteCarlo {
        per_case,
        block: block / draws as f64,
        draws,
    })
}
