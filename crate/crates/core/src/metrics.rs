//! SVD transceivers with water-filling, spectral efficiency and the error
//! metrics used to score estimates.

use crate::geometry::wrap_to_pi;
use crate::{CMatrix, Complex64, Error, Result};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Water-filling powers `p_i = max(μ − σ²/λ_i, 0)` with `Σ p_i = P`, where
/// `λ_i` are the squared singular values. The water level `μ` is found by
/// bisection to `1e−12` absolute.
pub fn water_filling(lambdas: &[f64], total_power: f64, noise: f64) -> Result<Vec<f64>> {
    if !(total_power >= 0.0) || !(noise > 0.0) {
        return Err(Error::InvalidConfig("need non-negative power and positive noise".into()));
    }
    if lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(Error::InvalidConfig("eigenvalues must be finite and non-negative".into()));
    }
    let floors: Vec<f64> = lambdas
        .iter()
        .map(|&l| if l > 0.0 { noise / l } else { f64::INFINITY })
        .collect();
    let finite = floors.iter().copied().filter(|f| f.is_finite()).fold(f64::INFINITY, f64::min);
    if !finite.is_finite() {
        return Err(Error::ZeroChannel);
    }
    let alloc = |mu: f64| -> Vec<f64> { floors.iter().map(|f| (mu - f).max(0.0)).collect() };
    let (mut lo, mut hi) = (finite, finite + total_power);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 || mid <= lo || mid >= hi {
            break;
        }
        if alloc(mid).iter().sum::<f64>() > total_power {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut p = alloc(0.5 * (lo + hi));
    let sum: f64 = p.iter().sum();
    if sum > 0.0 {
        for v in &mut p {
            *v *= total_power / sum;
        }
    }
    Ok(p)
}

/// Precoder, combiner and powers designed from a channel estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Transceiver {
    /// Precoder `W_b = V_b P^{1/2}`, `N_b × N_u`.
    pub w_b: CMatrix,
    /// Combiner `W_u`, `N_u × N_u` with orthonormal columns.
    pub w_u: CMatrix,
    pub powers: Vec<f64>,
    pub singular_values: Vec<f64>,
}

/// SVD transceiver for the downlink channel `Hᴴ`, where `h` is the
/// `N_b × N_u` uplink-oriented channel estimate.
pub fn svd_transceiver(h: &CMatrix, bs_power: f64, noise: f64) -> Result<Transceiver> {
    if h.norm_squared() == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let (nb, nu) = h.shape();
    let streams = nb.min(nu);
    let svd = h.adjoint().svd(true, true);
    let u = svd.u.ok_or_else(|| Error::SingularSystem("SVD without U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::SingularSystem("SVD without Vᴴ".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).take(streams).collect();
    let lambdas: Vec<f64> = sv.iter().map(|s| s * s).collect();
    let powers = water_filling(&lambdas, bs_power, noise)?;
    let mut w_u = CMatrix::zeros(nu, nu);
    let mut w_b = CMatrix::zeros(nb, nu);
    for (j, &i) in order.iter().take(streams).enumerate() {
        w_u.set_column(j, &u.column(i));
        let v = vt.row(i).adjoint();
        w_b.set_column(j, &(v * Complex64::new(powers[j].sqrt(), 0.0)));
    }
    if streams < nu {
        complete_orthonormal(&mut w_u, streams);
    }
    Ok(Transceiver {
        w_b,
        w_u,
        powers,
        singular_values: sv,
    })
}

/// Fills columns `from..` with an orthonormal completion.
fn complete_orthonormal(w: &mut CMatrix, from: usize) {
    let n = w.nrows();
    let mut col = from;
    for e in 0..n {
        if col == w.ncols() {
            break;
        }
        let mut v = nalgebra::DVector::<Complex64>::zeros(n);
        v[e] = Complex64::new(1.0, 0.0);
        for j in 0..col {
            let c = w.column(j);
            let proj = c.dotc(&v);
            v -= c * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            w.set_column(col, &(v / Complex64::new(norm, 0.0)));
            col += 1;
        }
    }
}

/// `log2 det(I + W_uᴴ Hᴴ W_b W_bᴴ H W_u / σ²)` on the true channel `h`.
pub fn spectral_efficiency(h: &CMatrix, tx: &Transceiver, noise: f64) -> Result<f64> {
    if h.nrows() != tx.w_b.nrows() || h.ncols() != tx.w_u.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "channel {:?} against transceiver {:?}/{:?}",
            h.shape(),
            tx.w_b.shape(),
            tx.w_u.shape()
        )));
    }
    let g = tx.w_u.adjoint() * h.adjoint() * &tx.w_b;
    let n = g.nrows();
    let m = CMatrix::identity(n, n) + &g * g.adjoint() / Complex64::new(noise, 0.0);
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("SE matrix is not positive definite".into()))?;
    Ok(chol.l().diagonal().iter().map(|d| 2.0 * d.re.log2()).sum())
}

/// `Σ log2(1 + p_i λ_i / σ²)`.
pub fn water_filling_se(lambdas: &[f64], powers: &[f64], noise: f64) -> f64 {
    lambdas
        .iter()
        .zip(powers)
        .map(|(l, p)| (1.0 + p * l / noise).log2())
        .sum()
}

/// `‖ref − est‖² / ‖ref‖²`.
pub fn nmse(reference: &CMatrix, estimate: &CMatrix) -> Result<f64> {
    if reference.shape() != estimate.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", reference.shape(), estimate.shape())));
    }
    let r = reference.norm_squared();
    if r == 0.0 {
        return Err(Error::ZeroChannel);
    }
    Ok((reference - estimate).norm_squared() / r)
}

/// Separation error of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationNmse {
    /// `‖Y − Y_ideal‖² / ‖Y‖²`.
    pub monte_carlo: f64,
    /// `‖N_sep‖² / ‖Y‖²` with the separated noise term.
    pub theoretical: f64,
    /// `E‖N_sep‖² / ‖Y‖²`.
    pub expected: f64,
}

/// Separation NMSE of `y` against its noise-free counterpart. `noise` is the
/// noise after separation; `noise_variance` is its per-entry variance.
pub fn nmse_separation(y: &CMatrix, ideal: &CMatrix, noise: &CMatrix, noise_variance: f64) -> Result<SeparationNmse> {
    if y.shape() != ideal.shape() || y.shape() != noise.shape() {
        return Err(Error::DimensionMismatch("separated, ideal and noise shapes differ".into()));
    }
    let e = y.norm_squared();
    if e == 0.0 {
        return Err(Error::ZeroChannel);
    }
    Ok(SeparationNmse {
        monte_carlo: (y - ideal).norm_squared() / e,
        theoretical: noise.norm_squared() / e,
        expected: noise_variance * (y.nrows() * y.ncols()) as f64 / e,
    })
}

/// `Σ_k |X_k^est − X_k^real| / (2πK)` with differences wrapped to `[−π, π)`.
pub fn nme(estimates: &[f64], truth: &[f64]) -> Result<f64> {
    if estimates.len() != truth.len() || estimates.is_empty() {
        return Err(Error::DimensionMismatch("need matching non-empty lists".into()));
    }
    let sum: f64 = estimates.iter().zip(truth).map(|(e, t)| wrap_to_pi(e - t).abs()).sum();
    Ok(sum / (2.0 * std::f64::consts::PI * estimates.len() as f64))
}

/// Per-trial metrics of one pipeline run. Absent entries do not apply to
/// the scheme that produced the report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Separation error per link, index 0 is the direct link; `None` for a
    /// link that carries no signal.
    pub nmse_separation: Vec<Option<SeparationNmse>>,
    pub nmse_uplink: Option<f64>,
    pub nmse_downlink: Option<f64>,
    pub nme_theta_ur: Option<f64>,
    pub nme_phi_ur: Option<f64>,
    pub nme_theta_dl: Option<f64>,
    pub position_error: Option<f64>,
    /// Enhanced share of the reflection channel under the applied design.
    pub power_ratio: Option<f64>,
    pub se: Option<f64>,
    /// SE with perfect CSI on the same channel and reflection.
    pub se_perfect: Option<f64>,
    pub coarse_evaluations: Option<u64>,
    /// Extraction rounds of the LoS identification.
    pub los_rounds: Option<usize>,
    /// Whether the LoS identification met its correlation threshold.
    pub los_converged: Option<bool>,
}

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let v = DVector::from_column_slice(values);
    let mean = v.mean();
    let stderr = if values.len() > 1 {
        (v.map(|x| (x - mean).powi(2)).sum() / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Some(Summary {
        mean,
        stderr,
        count: values.len(),
    })
}
