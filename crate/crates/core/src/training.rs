//! Reflection schedules, pilot synthesis and per-link channel separation.
//!
//! During one slow slot `s` every RIS holds its slow vector `γ_{k,s}`. Each
//! pilot is repeated over `K_F = K + 1` fast slots in which RIS `k` rotates
//! all of its elements by the common factor `F[v, k]`. Because the DFT
//! columns are orthogonal, correlating the fast slots against `f_k*` isolates
//! the signal of link `k` (link 0 is the direct hop).

use crate::channel::{ChannelRealization, ScenarioConfig};
use crate::linalg::{complex_normal_matrix, vec_of};
use crate::{CMatrix, Complex64, Error, Result};
use rand::Rng;
use std::f64::consts::PI;

/// DFT matrix of fast reflection phases, `F[v,k] = exp(−j2πvk/K_F)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FastReflectionMatrix {
    pub f: CMatrix,
}

impl FastReflectionMatrix {
    /// Number of fast slots `K_F`.
    pub fn len(&self) -> usize {
        self.f.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.f.nrows() == 0
    }
}

pub fn make_fast_matrix(k: usize) -> FastReflectionMatrix {
    let kf = k + 1;
    FastReflectionMatrix {
        f: dft(kf, 1.0),
    }
}

fn dft(n: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(n, n, |v, k| {
        Complex64::from_polar(scale, -2.0 * PI * ((v * k) % n) as f64 / n as f64)
    })
}

/// Slow reflection vectors of each RIS as columns of `Γ_k` (`M_k × K_S`).
#[derive(Debug, Clone, PartialEq)]
pub struct SlowSchedule {
    pub gammas: Vec<CMatrix>,
    slots: usize,
}

impl SlowSchedule {
    /// DFT schedule with `K_S = max M_k`; smaller RISs repeat their DFT
    /// columns cyclically.
    pub fn dft(sizes: &[usize]) -> Self {
        let ks = sizes.iter().copied().max().unwrap_or(1);
        let gammas = sizes
            .iter()
            .map(|&m| {
                let d = dft(m, 1.0);
                CMatrix::from_fn(m, ks, |i, s| d[(i, s % m)])
            })
            .collect();
        Self { gammas, slots: ks }
    }

    pub fn new(gammas: Vec<CMatrix>) -> Result<Self> {
        let ks = gammas.first().map_or(0, |g| g.ncols());
        for (k, g) in gammas.iter().enumerate() {
            if g.ncols() != ks {
                return Err(Error::DimensionMismatch(format!(
                    "RIS {k} has {} slow slots, expected {ks}",
                    g.ncols()
                )));
            }
            for (index, z) in g.iter().enumerate() {
                if (z.norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidReflection {
                        index,
                        modulus: z.norm(),
                    });
                }
            }
        }
        Ok(Self { gammas, slots: ks.max(1) })
    }

    /// Number of slow slots `K_S`.
    pub fn slots(&self) -> usize {
        self.slots
    }
}

/// Slow and fast reflections of one training campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionSchedule {
    pub slow: SlowSchedule,
    pub fast: FastReflectionMatrix,
}

impl ReflectionSchedule {
    pub fn default_for(ris_sizes: &[usize]) -> Self {
        Self {
            slow: SlowSchedule::dft(ris_sizes),
            fast: make_fast_matrix(ris_sizes.len()),
        }
    }
}

/// Square pilot matrix with `S Sᴴ = P I`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotMatrix {
    pub s: CMatrix,
    pub power: f64,
}

impl PilotMatrix {
    /// Scaled unitary DFT pilots.
    pub fn dft(n: usize, power: f64) -> Self {
        Self {
            s: dft(n, (power / n as f64).sqrt()),
            power,
        }
    }

    pub fn new(s: CMatrix, power: f64) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::DimensionMismatch("pilot matrix must be square".into()));
        }
        let gram = &s * s.adjoint();
        let eye = CMatrix::identity(s.nrows(), s.nrows()) * Complex64::new(power, 0.0);
        if (gram - eye).norm() > 1e-10 * power.max(1e-300) * s.nrows() as f64 {
            return Err(Error::DimensionMismatch("pilots are not orthogonal".into()));
        }
        Ok(Self { s, power })
    }

    pub fn len(&self) -> usize {
        self.s.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.s.ncols() == 0
    }
}

/// Received uplink pilots. Entry `s·N_u + p` holds the `N_b × K_F` matrix
/// whose column `v` is `r_{s,p,v}`; the noise that was added is kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct UplinkRaw {
    pub received: Vec<CMatrix>,
    pub noise: Vec<CMatrix>,
    pub slow_slots: usize,
    pub pilots: usize,
}

impl UplinkRaw {
    pub fn slot_count(&self) -> usize {
        self.received.len() * self.received.first().map_or(0, |r| r.ncols())
    }

    /// The noise alone, arranged like a received signal.
    pub fn noise_only(&self) -> Self {
        Self {
            received: self.noise.clone(),
            ..self.clone()
        }
    }
}

fn check_links(real: &ChannelRealization, fast: &FastReflectionMatrix) -> Result<()> {
    if fast.len() != real.links.len() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} fast slots for {} links",
            fast.len(),
            real.links.len() + 1
        )));
    }
    Ok(())
}

/// Slot-by-slot uplink reception over the whole training campaign.
pub fn synthesize_uplink<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    real: &ChannelRealization,
    schedule: &ReflectionSchedule,
    pilots: &PilotMatrix,
    rng: &mut R,
) -> Result<UplinkRaw> {
    let fast = &schedule.fast;
    check_links(real, fast)?;
    if schedule.slow.gammas.len() != real.links.len() {
        return Err(Error::DimensionMismatch("one slow schedule per RIS".into()));
    }
    if pilots.len() != real.direct.matrix.ncols() {
        return Err(Error::DimensionMismatch("uplink pilots must be N_u × N_u".into()));
    }
    let kf = fast.len();
    let ks = schedule.slow.slots();
    let nb = real.direct.matrix.nrows();
    let sigma = cfg.training_noise_power().sqrt();
    let direct = real.direct_channel() * &pilots.s;
    let mut received = Vec::with_capacity(ks * pilots.len());
    let mut noise = Vec::with_capacity(ks * pilots.len());
    for s in 0..ks {
        let mut parts = vec![direct.clone()];
        for (k, g) in schedule.slow.gammas.iter().enumerate() {
            parts.push(real.link_channel(k, &g.column(s).into_owned())? * &pilots.s);
        }
        for p in 0..pilots.len() {
            let mut r = CMatrix::zeros(nb, kf);
            for v in 0..kf {
                for (k, part) in parts.iter().enumerate() {
                    let f = fast.f[(v, k)];
                    for i in 0..nb {
                        r[(i, v)] += f * part[(i, p)];
                    }
                }
            }
            let n = complex_normal_matrix(nb, kf, rng) * Complex64::new(sigma, 0.0);
            received.push(r + &n);
            noise.push(n);
        }
    }
    Ok(UplinkRaw {
        received,
        noise,
        slow_slots: ks,
        pilots: pilots.len(),
    })
}

/// Per-link stacked observations `Y_k^b ∈ C^{N_b N_u × K_S}`, `k = 0..=K`.
/// Column `s` is `vec([y_{k,s,1} … y_{k,s,N_u}])`.
pub fn separate_uplink(raw: &UplinkRaw, fast: &FastReflectionMatrix) -> Result<Vec<CMatrix>> {
    let kf = fast.len();
    if raw.received.iter().any(|r| r.ncols() != kf) {
        return Err(Error::DimensionMismatch("raw slots do not match K_F".into()));
    }
    let nb = raw.received.first().map_or(0, |r| r.nrows());
    let fconj = fast.f.map(|z| z.conj());
    let mut out = vec![CMatrix::zeros(nb * raw.pilots, raw.slow_slots); kf];
    for s in 0..raw.slow_slots {
        for p in 0..raw.pilots {
            let sep = &raw.received[s * raw.pilots + p] * &fconj;
            for (k, y) in out.iter_mut().enumerate() {
                for i in 0..nb {
                    y[(p * nb + i, s)] = sep[(i, k)];
                }
            }
        }
    }
    Ok(out)
}

/// Noise-free separated uplink signal of link `k ≥ 1`:
/// `K_F ρ_k vec(H_rb diag(γ_{k,s}) H_ur S_u)` stacked over `s`.
pub fn ideal_uplink(
    real: &ChannelRealization,
    schedule: &ReflectionSchedule,
    pilots: &PilotMatrix,
    k: usize,
) -> Result<CMatrix> {
    let kf = Complex64::new(schedule.fast.len() as f64, 0.0);
    let cols = if k == 0 {
        let y = vec_of(&(real.direct_channel() * &pilots.s)) * kf;
        vec![y; schedule.slow.slots()]
    } else {
        let g = schedule
            .slow
            .gammas
            .get(k - 1)
            .ok_or_else(|| Error::IndexOutOfRange(format!("link {k}")))?;
        (0..g.ncols())
            .map(|s| {
                Ok(vec_of(&(real.link_channel(k - 1, &g.column(s).into_owned())? * &pilots.s)) * kf)
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(CMatrix::from_columns(&cols))
}

/// Received downlink pilots. Entry `q` is the `N_u × K_F` matrix of the
/// fast slots of BS pilot `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DownlinkRaw {
    pub received: Vec<CMatrix>,
    pub noise: Vec<CMatrix>,
}

impl DownlinkRaw {
    pub fn slot_count(&self) -> usize {
        self.received.len() * self.received.first().map_or(0, |r| r.ncols())
    }
}

/// Downlink reception under fixed reflection vectors: in fast slot `v` the
/// UE observes `H(v)ᴴ s_q + n`.
pub fn synthesize_downlink<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    real: &ChannelRealization,
    gammas: &[crate::CVector],
    fast: &FastReflectionMatrix,
    pilots: &PilotMatrix,
    rng: &mut R,
) -> Result<DownlinkRaw> {
    check_links(real, fast)?;
    if pilots.len() != real.direct.matrix.nrows() {
        return Err(Error::DimensionMismatch("downlink pilots must be N_b × N_b".into()));
    }
    if gammas.len() != real.links.len() {
        return Err(Error::DimensionMismatch("one reflection vector per RIS".into()));
    }
    let kf = fast.len();
    let nu = real.direct.matrix.ncols();
    let sigma = cfg.training_noise_power().sqrt();
    let mut parts = vec![real.direct_channel().adjoint() * &pilots.s];
    for (k, g) in gammas.iter().enumerate() {
        parts.push(real.link_channel(k, g)?.adjoint() * &pilots.s);
    }
    let mut received = Vec::with_capacity(pilots.len());
    let mut noise = Vec::with_capacity(pilots.len());
    for q in 0..pilots.len() {
        let mut r = CMatrix::zeros(nu, kf);
        for v in 0..kf {
            for (k, part) in parts.iter().enumerate() {
                let f = fast.f[(v, k)].conj();
                for i in 0..nu {
                    r[(i, v)] += f * part[(i, q)];
                }
            }
        }
        let n = complex_normal_matrix(nu, kf, rng) * Complex64::new(sigma, 0.0);
        received.push(r + &n);
        noise.push(n);
    }
    Ok(DownlinkRaw { received, noise })
}

/// Per-link downlink observations `Y_k^u ∈ C^{N_u × N_b}`, `k = 0..=K`.
pub fn separate_downlink(raw: &DownlinkRaw, fast: &FastReflectionMatrix) -> Result<Vec<CMatrix>> {
    let kf = fast.len();
    if raw.received.iter().any(|r| r.ncols() != kf) {
        return Err(Error::DimensionMismatch("raw slots do not match K_F".into()));
    }
    let nu = raw.received.first().map_or(0, |r| r.nrows());
    let mut out = vec![CMatrix::zeros(nu, raw.received.len()); kf];
    for (q, r) in raw.received.iter().enumerate() {
        let sep = r * &fast.f;
        for (k, y) in out.iter_mut().enumerate() {
            y.column_mut(q).copy_from(&sep.column(k));
        }
    }
    Ok(out)
}

pub fn uplink_slot_count(slow_slots: usize, ue_antennas: usize, fast_slots: usize) -> usize {
    slow_slots * ue_antennas * fast_slots
}

pub fn downlink_slot_count(bs_antennas: usize, fast_slots: usize) -> usize {
    bs_antennas * fast_slots
}
