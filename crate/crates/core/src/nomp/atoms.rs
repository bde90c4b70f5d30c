//! Parametric atoms of the stacked uplink observation and of the reduced
//! downlink signal, with analytic first and second derivatives.
//!
//! Observations are flattened column-major, so entry `n_b + N_b·j` of an
//! atom pairs BS antenna `n_b` with entry `j` of an `N_u × K_S` factor.

use crate::geometry::{ula_steering, ula_steering_derivs, upa_steering, upa_steering_derivs, UpaFrequency};
use crate::{CMatrix, CVector, Complex64};
use std::f64::consts::PI;

/// Atom value and derivatives. `dd` holds the upper triangle of the
/// Hessian row by row: `(0,0), (0,1), …, (0,d−1), (1,1), …`.
pub struct AtomDerivs {
    pub x: Vec<Complex64>,
    pub d: Vec<Vec<Complex64>>,
    pub dd: Vec<Vec<Complex64>>,
}

pub fn tri_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i + 1) / 2 + j
}

pub trait AtomModel {
    fn dim(&self) -> usize;
    /// Grid spacing of each parameter.
    fn spacing(&self) -> Vec<f64>;
    fn atom(&self, w: &[f64]) -> Vec<Complex64>;
    fn derivs(&self, w: &[f64]) -> AtomDerivs;
}

fn outer(b: &[Complex64], t: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(b.len() * t.len());
    for tj in t {
        for bi in b {
            out.push(bi * tj);
        }
    }
    out
}

/// `t[n_u + N_u s] = u[n_u] r[s]`.
fn outer_ur(u: &CVector, r: &CVector) -> Vec<Complex64> {
    outer(u.as_slice(), r.as_slice())
}

/// Path from the UE to the RIS seen through the known RIS–BS LoS path:
/// `x = K_F g₀ a_b0 ⊗ (S_uᵀ a_u*(Θ_u)) ⊗ (Γᵀ (a_r0* ⊙ a_r(Θ, Φ)))`.
#[derive(Debug, Clone)]
pub struct UeRisAtom {
    pub b0: CVector,
    pub pilots_t: CMatrix,
    pub gammas_t: CMatrix,
    pub rb_conj: CVector,
    pub vertical: usize,
    pub horizontal: usize,
    pub ue_antennas: usize,
    pub spacing: [f64; 3],
}

impl UeRisAtom {
    pub fn ris_factor(&self, a: &CVector) -> CVector {
        &self.gammas_t * self.rb_conj.component_mul(a)
    }

    pub fn ue_factor(&self, a: &CVector) -> CVector {
        &self.pilots_t * a.map(|z| z.conj())
    }
}

impl AtomModel for UeRisAtom {
    fn dim(&self) -> usize {
        3
    }

    fn spacing(&self) -> Vec<f64> {
        self.spacing.to_vec()
    }

    fn atom(&self, w: &[f64]) -> Vec<Complex64> {
        let r = self.ris_factor(&upa_steering(self.vertical, self.horizontal, UpaFrequency::new(w[0], w[1])));
        let u = self.ue_factor(&ula_steering(self.ue_antennas, w[2]));
        outer(self.b0.as_slice(), &outer_ur(&u, &r))
    }

    fn derivs(&self, w: &[f64]) -> AtomDerivs {
        let a = upa_steering_derivs(self.vertical, self.horizontal, UpaFrequency::new(w[0], w[1]));
        let r: Vec<CVector> = a.iter().map(|v| self.ris_factor(v)).collect();
        let au = ula_steering_derivs(self.ue_antennas, w[2]);
        let u: Vec<CVector> = au.iter().map(|v| self.ue_factor(v)).collect();
        let b = self.b0.as_slice();
        let x = |ui: usize, ri: usize| outer(b, &outer_ur(&u[ui], &r[ri]));
        AtomDerivs {
            x: x(0, 0),
            d: vec![x(0, 1), x(0, 2), x(1, 0)],
            dd: vec![x(0, 3), x(0, 4), x(1, 1), x(0, 5), x(1, 2), x(2, 0)],
        }
    }
}

/// Path from the UE to the RIS seen through a full RIS–BS estimate
/// `Ĥ_rb = Σ_l g_l a_b,l a_r,lᴴ`:
/// `x[n_b + N_b(n_u + N_u s)] = K_F (Ĥ_rb diag(γ_s) a_r(Θ, Φ))[n_b] (S_uᵀ a_u*(Θ_u))[n_u]`.
#[derive(Debug, Clone)]
pub struct UeRisFullAtom {
    /// Column `l` is `K_F g_l a_b,l`.
    pub bs: CMatrix,
    /// Row `l` is `a_r,lᴴ`.
    pub ris_conj: CMatrix,
    pub gammas_t: CMatrix,
    pub pilots_t: CMatrix,
    pub vertical: usize,
    pub horizontal: usize,
    pub ue_antennas: usize,
    pub spacing: [f64; 3],
}

impl UeRisFullAtom {
    /// `paths` lists `(a_b, a_r, g)` of every RIS–BS path.
    pub fn new(
        paths: &[(CVector, CVector, Complex64)],
        gammas: &CMatrix,
        pilots: &CMatrix,
        fast_slots: f64,
        dims: (usize, usize),
        spacing: [f64; 3],
    ) -> Self {
        let cols: Vec<CVector> = paths.iter().map(|(b, _, g)| b * (g * fast_slots)).collect();
        let rows: Vec<_> = paths.iter().map(|(_, a, _)| a.adjoint()).collect();
        Self {
            bs: CMatrix::from_columns(&cols),
            ris_conj: CMatrix::from_rows(&rows),
            gammas_t: gammas.transpose(),
            pilots_t: pilots.transpose(),
            vertical: dims.0,
            horizontal: dims.1,
            ue_antennas: pilots.nrows(),
            spacing,
        }
    }

    /// `N_b × K_S` matrix `K_F Ĥ_rb diag(γ_s) a` over the slots `s`.
    fn bs_slots(&self, a: &CVector) -> CMatrix {
        let mut z = CMatrix::zeros(self.gammas_t.nrows(), self.ris_conj.nrows());
        for (l, row) in self.ris_conj.row_iter().enumerate() {
            let w = CVector::from_fn(a.len(), |m, _| row[m] * a[m]);
            z.set_column(l, &(&self.gammas_t * w));
        }
        &self.bs * z.transpose()
    }

    fn combine(&self, v: &CMatrix, u: &CVector) -> Vec<Complex64> {
        let nb = v.nrows();
        let mut out = Vec::with_capacity(v.len() * u.len());
        for s in 0..v.ncols() {
            for un in u.iter() {
                for i in 0..nb {
                    out.push(v[(i, s)] * un);
                }
            }
        }
        out
    }
}

impl AtomModel for UeRisFullAtom {
    fn dim(&self) -> usize {
        3
    }

    fn spacing(&self) -> Vec<f64> {
        self.spacing.to_vec()
    }

    fn atom(&self, w: &[f64]) -> Vec<Complex64> {
        let v = self.bs_slots(&upa_steering(self.vertical, self.horizontal, UpaFrequency::new(w[0], w[1])));
        let u = &self.pilots_t * ula_steering(self.ue_antennas, w[2]).map(|z| z.conj());
        self.combine(&v, &u)
    }

    fn derivs(&self, w: &[f64]) -> AtomDerivs {
        let a = upa_steering_derivs(self.vertical, self.horizontal, UpaFrequency::new(w[0], w[1]));
        let v: Vec<CMatrix> = a.iter().map(|x| self.bs_slots(x)).collect();
        let u: Vec<CVector> = ula_steering_derivs(self.ue_antennas, w[2])
            .iter()
            .map(|x| &self.pilots_t * x.map(|z| z.conj()))
            .collect();
        let x = |ui: usize, vi: usize| self.combine(&v[vi], &u[ui]);
        AtomDerivs {
            x: x(0, 0),
            d: vec![x(0, 1), x(0, 2), x(1, 0)],
            dd: vec![x(0, 3), x(0, 4), x(1, 1), x(0, 5), x(1, 2), x(2, 0)],
        }
    }
}

/// Path from the RIS to the BS seen through an estimated UE–RIS channel:
/// `x = K_F a_b(Θ_b) ⊗ vec(Q diag(a_r*(Θ, Φ)) Γ)` with `Q = S_uᵀ Ĥ_urᵀ`.
#[derive(Debug, Clone)]
pub struct RisBsAtom {
    pub q: CMatrix,
    pub gammas: CMatrix,
    pub fast_slots: f64,
    pub bs_antennas: usize,
    pub vertical: usize,
    pub horizontal: usize,
    pub spacing: [f64; 3],
}

impl RisBsAtom {
    /// `vec(Q diag(a*) Γ)`.
    pub fn ris_factor(&self, a: &CVector) -> Vec<Complex64> {
        let mut scaled = self.gammas.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= a[i].conj();
        }
        (&self.q * scaled).as_slice().to_vec()
    }

    fn bs(&self, v: &CVector) -> Vec<Complex64> {
        v.iter().map(|z| z * self.fast_slots).collect()
    }
}

impl AtomModel for RisBsAtom {
    fn dim(&self) -> usize {
        3
    }

    fn spacing(&self) -> Vec<f64> {
        self.spacing.to_vec()
    }

    fn atom(&self, w: &[f64]) -> Vec<Complex64> {
        let g = self.ris_factor(&upa_steering(self.vertical, self.horizontal, UpaFrequency::new(w[0], w[1])));
        outer(&self.bs(&ula_steering(self.bs_antennas, w[2])), &g)
    }

    fn derivs(&self, w: &[f64]) -> AtomDerivs {
        let a = upa_steering_derivs(self.vertical, self.horizontal, UpaFrequency::new(w[0], w[1]));
        let g: Vec<Vec<Complex64>> = a.iter().map(|v| self.ris_factor(v)).collect();
        let b: Vec<Vec<Complex64>> = ula_steering_derivs(self.bs_antennas, w[2])
            .iter()
            .map(|v| self.bs(v))
            .collect();
        let x = |bi: usize, gi: usize| outer(&b[bi], &g[gi]);
        AtomDerivs {
            x: x(0, 0),
            d: vec![x(0, 1), x(0, 2), x(1, 0)],
            dd: vec![x(0, 3), x(0, 4), x(1, 1), x(0, 5), x(1, 2), x(2, 0)],
        }
    }
}

/// Bare ULA response, used for single-path detection.
#[derive(Debug, Clone)]
pub struct UlaAtom {
    pub antennas: usize,
    pub spacing: f64,
}

impl AtomModel for UlaAtom {
    fn dim(&self) -> usize {
        1
    }

    fn spacing(&self) -> Vec<f64> {
        vec![self.spacing]
    }

    fn atom(&self, w: &[f64]) -> Vec<Complex64> {
        ula_steering(self.antennas, w[0]).as_slice().to_vec()
    }

    fn derivs(&self, w: &[f64]) -> AtomDerivs {
        let [a, d1, d2] = ula_steering_derivs(self.antennas, w[0]);
        AtomDerivs {
            x: a.as_slice().to_vec(),
            d: vec![d1.as_slice().to_vec()],
            dd: vec![d2.as_slice().to_vec()],
        }
    }
}

/// Uniform grid of `n` frequencies on `[−π, π)`.
pub fn frequency_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| -PI + 2.0 * PI * i as f64 / n as f64).collect()
}
