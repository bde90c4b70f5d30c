use super::atoms::{frequency_grid, AtomModel, RisBsAtom, UeRisAtom, UeRisFullAtom};
use super::refine::{correlation, refine};
use super::{CascadedEstimate, EstimatedHop, NompConfig, PathBudget, PathEstimate, Provenance, RisObservation};
use crate::geometry::{ula_steering, upa_steering, UpaFrequency};
use crate::linalg::{energy, least_squares};
use crate::{CMatrix, CVector, Complex64, Error, Result};
use std::f64::consts::PI;

/// Atoms, gains and residual of one pursuit against a fixed target.
#[derive(Debug, Clone)]
struct Pursuit<M> {
    model: M,
    target: Vec<Complex64>,
    params: Vec<Vec<f64>>,
    gains: Vec<Complex64>,
    atoms: Vec<Vec<Complex64>>,
    residual: Vec<Complex64>,
    history: Vec<f64>,
}

impl<M: AtomModel> Pursuit<M> {
    fn new(model: M, target: Vec<Complex64>) -> Self {
        let residual = target.clone();
        let history = vec![energy(&residual)];
        Self {
            model,
            target,
            params: Vec::new(),
            gains: Vec::new(),
            atoms: Vec::new(),
            residual,
            history,
        }
    }

    fn energy(&self) -> f64 {
        energy(&self.residual)
    }

    /// Places atoms without refinement or recording.
    fn load(&mut self, params: Vec<Vec<f64>>, gains: Vec<Complex64>) {
        for (w, g) in params.into_iter().zip(gains) {
            let x = self.model.atom(&w);
            for (r, xi) in self.residual.iter_mut().zip(&x) {
                *r -= g * xi;
            }
            self.params.push(w);
            self.gains.push(g);
            self.atoms.push(x);
        }
    }

    fn record(&mut self) {
        let e = self.energy();
        let prev = *self.history.last().unwrap_or(&f64::INFINITY);
        let scale = energy(&self.target);
        debug_assert!(
            e <= prev + 1e-9 * scale,
            "residual energy rose from {prev} to {e}"
        );
        self.history.push(e);
    }

    fn set_atom(&mut self, i: usize, w: Vec<f64>, gain: Complex64) {
        let x = self.model.atom(&w);
        for (r, (new, old)) in self.residual.iter_mut().zip(x.iter().zip(&self.atoms[i])) {
            *r += self.gains[i] * old - gain * new;
        }
        self.params[i] = w;
        self.gains[i] = gain;
        self.atoms[i] = x;
    }

    /// Refines atom `i` against the residual with the other atoms removed.
    fn refine_one(&mut self, i: usize, steps: usize, excluded: &dyn Fn(&[f64]) -> bool) {
        let target: Vec<Complex64> = self
            .residual
            .iter()
            .zip(&self.atoms[i])
            .map(|(r, x)| r + self.gains[i] * x)
            .collect();
        let mut w = self.params[i].clone();
        let gain = refine(&self.model, &mut w, &target, steps, excluded);
        self.set_atom(i, w, gain);
    }

    fn push(&mut self, w: Vec<f64>, cfg: &NompConfig, excluded: &dyn Fn(&[f64]) -> bool) {
        let x = self.model.atom(&w);
        let (_, gain) = correlation(&x, &self.residual);
        for (r, xi) in self.residual.iter_mut().zip(&x) {
            *r -= gain * xi;
        }
        self.params.push(w);
        self.gains.push(gain);
        self.atoms.push(x);
        self.record();
        let last = self.atoms.len() - 1;
        self.refine_one(last, cfg.newton_steps, excluded);
        self.record();
        for _ in 0..cfg.cyclic_rounds {
            for i in 0..self.atoms.len() {
                self.refine_one(i, cfg.newton_steps, excluded);
            }
            self.record();
        }
        self.refit();
    }

    /// Joint least-squares gain update against the target.
    fn refit(&mut self) {
        if self.atoms.is_empty() {
            return;
        }
        let n = self.target.len();
        let a = CMatrix::from_fn(n, self.atoms.len(), |r, c| self.atoms[c][r]);
        let y = CVector::from_column_slice(&self.target);
        if let Ok(g) = least_squares(&a, &y) {
            let fit = &a * &g;
            let residual: Vec<Complex64> = y.iter().zip(fit.iter()).map(|(a, b)| a - b).collect();
            if energy(&residual) <= self.energy() {
                self.gains = g.iter().copied().collect();
                self.residual = residual;
            }
        }
        self.record();
    }
}

fn ris_grid(cfg: &NompConfig, vertical: usize, horizontal: usize) -> Vec<[f64; 2]> {
    let gv = frequency_grid(cfg.oversampling_ris_v * vertical);
    let gh = frequency_grid(cfg.oversampling_ris_h * horizontal);
    gv.iter()
        .flat_map(|&p| gh.iter().map(move |&t| [t, p]))
        .collect()
}

fn ris_spacing(cfg: &NompConfig, vertical: usize, horizontal: usize) -> [f64; 2] {
    [
        2.0 * PI / (cfg.oversampling_ris_h * horizontal) as f64,
        2.0 * PI / (cfg.oversampling_ris_v * vertical) as f64,
    ]
}

fn no_exclusion(_: &[f64]) -> bool {
    false
}

/// Extraction of UE–RIS paths for one RIS, one path per call.
#[derive(Debug, Clone)]
pub struct UeRisExtractor {
    obs: RisObservation,
    cfg: NompConfig,
    pursuit: Pursuit<UeRisAtom>,
    ris_grid: Vec<([f64; 2], CVector, f64)>,
    ue_grid: Vec<(f64, CVector, f64)>,
    coarse_evaluations: u64,
}

impl UeRisExtractor {
    pub fn new(obs: RisObservation, cfg: &NompConfig) -> Result<Self> {
        cfg.validate()?;
        let (mv, mh, nu) = (obs.vertical, obs.horizontal, obs.ue_antennas);
        if obs.gammas.nrows() != mv * mh || obs.y.nrows() != obs.bs_antennas * nu || obs.y.ncols() != obs.gammas.ncols() {
            return Err(Error::DimensionMismatch("observation does not match the RIS and arrays".into()));
        }
        let s = ris_spacing(cfg, mv, mh);
        let b0 = ula_steering(obs.bs_antennas, obs.bs_los) * (obs.rb_los_gain * obs.fast_slots as f64);
        let model = UeRisAtom {
            b0,
            pilots_t: obs.pilots.transpose(),
            gammas_t: obs.gammas.transpose(),
            rb_conj: upa_steering(mv, mh, obs.ris_los).map(|z| z.conj()),
            vertical: mv,
            horizontal: mh,
            ue_antennas: nu,
            spacing: [s[0], s[1], 2.0 * PI / (cfg.oversampling_ue * nu) as f64],
        };
        let ris_grid = ris_grid(cfg, mv, mh)
            .into_iter()
            .map(|w| {
                let r = model.ris_factor(&upa_steering(mv, mh, UpaFrequency::new(w[0], w[1])));
                let e = r.norm_squared();
                (w, r, e)
            })
            .collect();
        let ue_grid = frequency_grid(cfg.oversampling_ue * nu)
            .into_iter()
            .map(|t| {
                let u = model.ue_factor(&ula_steering(nu, t));
                let e = u.norm_squared();
                (t, u, e)
            })
            .collect();
        let target = obs.y.as_slice().to_vec();
        Ok(Self {
            pursuit: Pursuit::new(model, target),
            obs,
            cfg: cfg.clone(),
            ris_grid,
            ue_grid,
            coarse_evaluations: 0,
        })
    }

    fn coarse(&mut self) -> Result<Vec<f64>> {
        let (nb, nu, ks) = (self.obs.bs_antennas, self.obs.ue_antennas, self.obs.y.ncols());
        let b0 = &self.pursuit.model.b0;
        let z = &self.pursuit.residual;
        let mut w = vec![Complex64::new(0.0, 0.0); nu * ks];
        for (j, wj) in w.iter_mut().enumerate() {
            *wj = (0..nb).map(|i| b0[i].conj() * z[i + nb * j]).sum();
        }
        let b2 = b0.norm_squared();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for (t, u, ue) in &self.ue_grid {
            let v: Vec<Complex64> = (0..ks)
                .map(|s| (0..nu).map(|n| u[n].conj() * w[n + nu * s]).sum())
                .collect();
            for (wr, r, re) in &self.ris_grid {
                let c: Complex64 = r.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                let denom = b2 * ue * re;
                let j = if denom > 0.0 { c.norm_sqr() / denom } else { 0.0 };
                if best.as_ref().is_none_or(|(bj, _)| j > *bj) {
                    best = Some((j, vec![wr[0], wr[1], *t]));
                }
            }
        }
        self.coarse_evaluations += (self.ue_grid.len() * self.ris_grid.len()) as u64;
        best.map(|b| b.1).ok_or(Error::EmptyGrid)
    }

    /// Extracts one more path and returns the drop in residual energy.
    pub fn extract_next(&mut self) -> Result<f64> {
        let before = self.pursuit.energy();
        let w = self.coarse()?;
        let cfg = self.cfg.clone();
        self.pursuit.push(w, &cfg, &no_exclusion);
        Ok(before - self.pursuit.energy())
    }

    pub fn path_count(&self) -> usize {
        self.pursuit.params.len()
    }

    pub fn paths(&self) -> Vec<PathEstimate> {
        self.pursuit
            .params
            .iter()
            .zip(&self.pursuit.gains)
            .map(|(w, g)| PathEstimate {
                hop: EstimatedHop::UeRis,
                ris: UpaFrequency::new(w[0], w[1]),
                array: w[2],
                gain: *g,
                provenance: Provenance::UplinkNomp,
            })
            .collect()
    }

    pub fn residual_energy(&self) -> f64 {
        self.pursuit.energy()
    }

    pub fn observation_energy(&self) -> f64 {
        energy(&self.pursuit.target)
    }

    /// Residual energy after every step taken so far.
    pub fn history(&self) -> &[f64] {
        &self.pursuit.history
    }

    pub fn coarse_evaluations(&self) -> u64 {
        self.coarse_evaluations
    }

    pub fn observation(&self) -> &RisObservation {
        &self.obs
    }

    /// Extracts paths until the budget is met or the energy drop falls
    /// below the stopping fraction.
    pub fn run(&mut self, budget: Option<usize>) -> Result<()> {
        match budget {
            Some(n) => {
                while self.path_count() < n {
                    self.extract_next()?;
                }
            }
            None => {
                let floor = self.cfg.stop_fraction * self.observation_energy();
                while self.path_count() < self.cfg.max_paths_ur {
                    let snapshot = self.clone();
                    if self.extract_next()? < floor {
                        let evals = self.coarse_evaluations;
                        *self = snapshot;
                        self.coarse_evaluations = evals;
                        break;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Rejects RIS–BS atoms that would duplicate the known LoS atom.
#[derive(Debug, Clone)]
struct LosGuard {
    bs: CVector,
    ris: CVector,
    vertical: usize,
    horizontal: usize,
    threshold: f64,
}

impl LosGuard {
    fn bs_corr(&self, t: f64) -> f64 {
        crate::linalg::dot_h(ula_steering(self.bs.len(), t).as_slice(), self.bs.as_slice()).norm()
    }

    fn ris_corr(&self, w: &[f64]) -> f64 {
        let a = upa_steering(self.vertical, self.horizontal, UpaFrequency::new(w[0], w[1]));
        crate::linalg::dot_h(a.as_slice(), self.ris.as_slice()).norm()
    }

    fn excluded(&self, w: &[f64]) -> bool {
        self.bs_corr(w[2]) * self.ris_corr(w) > self.threshold
    }
}

/// Extraction of RIS–BS scattered paths for one RIS given the UE–RIS estimate.
#[derive(Debug, Clone)]
pub struct RisBsExtractor {
    obs: RisObservation,
    cfg: NompConfig,
    ue_ris: Vec<PathEstimate>,
    pursuit: Pursuit<RisBsAtom>,
    guard: LosGuard,
    bs_grid: Vec<(f64, CVector, f64)>,
    ris_grid: Vec<([f64; 2], Vec<Complex64>, f64, f64)>,
    coarse_evaluations: u64,
}

impl RisBsExtractor {
    pub fn new(obs: RisObservation, ue_ris: Vec<PathEstimate>, cfg: &NompConfig) -> Result<Self> {
        cfg.validate()?;
        let (mv, mh, nb) = (obs.vertical, obs.horizontal, obs.bs_antennas);
        let model = Self::model(&obs, &ue_ris, cfg);
        let base = model.atom(&[obs.ris_los.theta_cap, obs.ris_los.phi_cap, obs.bs_los]);
        let target: Vec<Complex64> = obs
            .y
            .iter()
            .zip(&base)
            .map(|(y, b)| y - obs.rb_los_gain * b)
            .collect();
        let guard = LosGuard {
            bs: ula_steering(nb, obs.bs_los),
            ris: upa_steering(mv, mh, obs.ris_los),
            vertical: mv,
            horizontal: mh,
            threshold: cfg.los_exclusion,
        };
        let bs_grid = frequency_grid(cfg.oversampling_bs * nb)
            .into_iter()
            .map(|t| (t, ula_steering(nb, t), guard.bs_corr(t)))
            .collect();
        let ris_grid = ris_grid(cfg, mv, mh)
            .into_iter()
            .map(|w| {
                let g = model.ris_factor(&upa_steering(mv, mh, UpaFrequency::new(w[0], w[1])));
                let e = energy(&g);
                let c = guard.ris_corr(&w);
                (w, g, e, c)
            })
            .collect();
        Ok(Self {
            pursuit: Pursuit::new(model, target),
            obs,
            cfg: cfg.clone(),
            ue_ris,
            guard,
            bs_grid,
            ris_grid,
            coarse_evaluations: 0,
        })
    }

    fn model(obs: &RisObservation, ue_ris: &[PathEstimate], cfg: &NompConfig) -> RisBsAtom {
        let (mv, mh) = (obs.vertical, obs.horizontal);
        let est = CascadedEstimate {
            ue_ris: ue_ris.to_vec(),
            ris_bs: Vec::new(),
            vertical: mv,
            horizontal: mh,
            bs_antennas: obs.bs_antennas,
            ue_antennas: obs.ue_antennas,
        };
        let s = ris_spacing(cfg, mv, mh);
        RisBsAtom {
            q: (est.ue_ris_channel() * &obs.pilots).transpose(),
            gammas: obs.gammas.clone(),
            fast_slots: obs.fast_slots as f64,
            bs_antennas: obs.bs_antennas,
            vertical: mv,
            horizontal: mh,
            spacing: [s[0], s[1], 2.0 * PI / (cfg.oversampling_bs * obs.bs_antennas) as f64],
        }
    }

    fn coarse(&mut self) -> Result<Vec<f64>> {
        let (nb, nj) = (self.obs.bs_antennas, self.obs.y.len() / self.obs.bs_antennas);
        let z = &self.pursuit.residual;
        let mut best: Option<(f64, Vec<f64>)> = None;
        for (t, a, bc) in &self.bs_grid {
            let w: Vec<Complex64> = (0..nj)
                .map(|j| (0..nb).map(|i| a[i].conj() * z[i + nb * j]).sum())
                .collect();
            for (wr, g, ge, rc) in &self.ris_grid {
                if bc * rc > self.guard.threshold {
                    continue;
                }
                let c: Complex64 = g.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                let j = if *ge > 0.0 { c.norm_sqr() / ge } else { 0.0 };
                if best.as_ref().is_none_or(|(bj, _)| j > *bj) {
                    best = Some((j, vec![wr[0], wr[1], *t]));
                }
            }
        }
        self.coarse_evaluations += (self.bs_grid.len() * self.ris_grid.len()) as u64;
        best.map(|b| b.1).ok_or(Error::EmptyGrid)
    }

    pub fn extract_next(&mut self) -> Result<f64> {
        let before = self.pursuit.energy();
        let w = self.coarse()?;
        let cfg = self.cfg.clone();
        let guard = self.guard.clone();
        self.pursuit.push(w, &cfg, &|w: &[f64]| guard.excluded(w));
        Ok(before - self.pursuit.energy())
    }

    pub fn path_count(&self) -> usize {
        self.pursuit.params.len()
    }

    pub fn run(&mut self, budget: Option<usize>) -> Result<()> {
        match budget {
            Some(n) => {
                while self.path_count() < n {
                    self.extract_next()?;
                }
            }
            None => {
                let floor = self.cfg.stop_fraction * energy(self.obs.y.as_slice());
                while self.path_count() < self.cfg.max_paths_rb {
                    let snapshot = self.clone();
                    if self.extract_next()? < floor {
                        let evals = self.coarse_evaluations;
                        *self = snapshot;
                        self.coarse_evaluations = evals;
                        break;
                    }
                }
            }
        }
        Ok(())
    }

    /// RIS–BS paths, the known LoS path first.
    pub fn paths(&self) -> Vec<PathEstimate> {
        let mut out = vec![PathEstimate {
            hop: EstimatedHop::RisBs,
            ris: self.obs.ris_los,
            array: self.obs.bs_los,
            gain: self.obs.rb_los_gain,
            provenance: Provenance::Geometric,
        }];
        out.extend(self.pursuit.params.iter().zip(&self.pursuit.gains).map(|(w, g)| PathEstimate {
            hop: EstimatedHop::RisBs,
            ris: UpaFrequency::new(w[0], w[1]),
            array: w[2],
            gain: *g,
            provenance: Provenance::UplinkNomp,
        }));
        out
    }

    pub fn ue_ris_paths(&self) -> &[PathEstimate] {
        &self.ue_ris
    }

    pub fn residual_energy(&self) -> f64 {
        self.pursuit.energy()
    }

    pub fn history(&self) -> &[f64] {
        &self.pursuit.history
    }

    pub fn coarse_evaluations(&self) -> u64 {
        self.coarse_evaluations
    }

    /// Alternating refinement once both hops are extracted. Each round
    /// Newton-refines every UE–RIS path against the full RIS–BS estimate
    /// and refits their gains, then refines the RIS–BS scattered paths
    /// against the updated UE–RIS estimate and refits theirs. A stage is
    /// kept only if it does not raise the residual.
    pub fn joint_refit(&mut self) -> Result<()> {
        let floor = 1e-24 * energy(self.obs.y.as_slice());
        for _ in 0..self.cfg.refit_rounds {
            let before = self.pursuit.energy();
            if !self.refine_ue_ris()? {
                break;
            }
            self.refine_ris_bs();
            if before - self.pursuit.energy() <= 1e-6 * before + floor {
                break;
            }
        }
        Ok(())
    }

    fn refine_ue_ris(&mut self) -> Result<bool> {
        let o = &self.obs;
        let s = ris_spacing(&self.cfg, o.vertical, o.horizontal);
        let spacing = [s[0], s[1], 2.0 * PI / (self.cfg.oversampling_ue * o.ue_antennas) as f64];
        let rb: Vec<_> = self
            .paths()
            .iter()
            .map(|p| {
                (
                    ula_steering(o.bs_antennas, p.array),
                    upa_steering(o.vertical, o.horizontal, p.ris),
                    p.gain,
                )
            })
            .collect();
        let model = UeRisFullAtom::new(
            &rb,
            &o.gammas,
            &o.pilots,
            o.fast_slots as f64,
            (o.vertical, o.horizontal),
            spacing,
        );
        let mut p = Pursuit::new(model, o.y.as_slice().to_vec());
        p.load(
            self.ue_ris.iter().map(|e| vec![e.ris.theta_cap, e.ris.phi_cap, e.array]).collect(),
            self.ue_ris.iter().map(|e| e.gain).collect(),
        );
        for i in 0..p.params.len() {
            p.refine_one(i, self.cfg.newton_steps, &no_exclusion);
        }
        p.refit();
        if p.energy() > self.pursuit.energy() {
            return Ok(false);
        }
        let ue_ris: Vec<PathEstimate> = p
            .params
            .iter()
            .zip(&p.gains)
            .map(|(w, g)| PathEstimate {
                hop: EstimatedHop::UeRis,
                ris: UpaFrequency::new(w[0], w[1]),
                array: w[2],
                gain: *g,
                provenance: Provenance::UplinkNomp,
            })
            .collect();
        let mut next = Self::new(self.obs.clone(), ue_ris, &self.cfg)?;
        next.pursuit.load(self.pursuit.params.clone(), self.pursuit.gains.clone());
        next.coarse_evaluations = self.coarse_evaluations;
        let mut history = std::mem::take(&mut self.pursuit.history);
        history.push(next.pursuit.energy());
        next.pursuit.history = history;
        *self = next;
        Ok(true)
    }

    fn refine_ris_bs(&mut self) {
        let guard = self.guard.clone();
        for i in 0..self.pursuit.params.len() {
            self.pursuit
                .refine_one(i, self.cfg.newton_steps, &|w: &[f64]| guard.excluded(w));
        }
        self.pursuit.record();
        self.pursuit.refit();
    }

    pub fn estimate(&self) -> CascadedEstimate {
        CascadedEstimate {
            ue_ris: self.ue_ris.clone(),
            ris_bs: self.paths(),
            vertical: self.obs.vertical,
            horizontal: self.obs.horizontal,
            bs_antennas: self.obs.bs_antennas,
            ue_antennas: self.obs.ue_antennas,
        }
    }
}

/// Outcome of full extraction on one RIS link.
#[derive(Debug, Clone, PartialEq)]
pub struct RisExtraction {
    pub estimate: CascadedEstimate,
    pub coarse_evaluations: u64,
    pub residual_energy: f64,
}

/// Runs both stages on one RIS observation.
pub fn extract_link(obs: &RisObservation, cfg: &NompConfig, budget: PathBudget) -> Result<RisExtraction> {
    let mut ue = UeRisExtractor::new(obs.clone(), cfg)?;
    ue.run(budget.ue_ris)?;
    extract_link_from(ue, cfg, budget)
}

/// Completes the RIS–BS stage after a finished UE–RIS stage.
pub fn extract_link_from(ue: UeRisExtractor, cfg: &NompConfig, budget: PathBudget) -> Result<RisExtraction> {
    let mut bs = RisBsExtractor::new(ue.observation().clone(), ue.paths(), cfg)?;
    bs.run(budget.ris_bs)?;
    if cfg.final_refit {
        bs.joint_refit()?;
    }
    Ok(RisExtraction {
        estimate: bs.estimate(),
        coarse_evaluations: ue.coarse_evaluations() + bs.coarse_evaluations(),
        residual_energy: bs.residual_energy(),
    })
}

/// Full extraction on every RIS link.
pub fn full_extraction(obs: &[RisObservation], cfg: &NompConfig, budgets: &[PathBudget]) -> Result<Vec<RisExtraction>> {
    if obs.len() != budgets.len() {
        return Err(Error::DimensionMismatch("one path budget per RIS".into()));
    }
    obs.iter()
        .zip(budgets)
        .map(|(o, b)| extract_link(o, cfg, *b))
        .collect()
}

/// Reflection channel `Σ_k ρ_k Ĥ_rb,k diag(γ_k) Ĥ_ur,k` under `gammas`.
pub fn reconstruct(extractions: &[RisExtraction], gammas: &[CVector]) -> Result<CMatrix> {
    let first = extractions
        .first()
        .ok_or_else(|| Error::DimensionMismatch("no RIS links".into()))?;
    if extractions.len() != gammas.len() {
        return Err(Error::DimensionMismatch("one reflection vector per RIS".into()));
    }
    let mut h = CMatrix::zeros(first.estimate.bs_antennas, first.estimate.ue_antennas);
    for (e, g) in extractions.iter().zip(gammas) {
        h += e.estimate.channel(g);
    }
    Ok(h)
}
