//! Closed-form UE positioning from LoS directions and the joint LoS path
//! identification that runs it over growing candidate lists.

use crate::channel::RisGeometry;
use crate::geometry::{upa_steering, Orientation, PhysicalAngles, Position, UlaFrequency, UpaFrequency};
use crate::linalg::dot_h;
use crate::nomp::{PathEstimate, UeRisExtractor};
use crate::{Error, Result};
use itertools::Itertools;
use nalgebra::{DMatrix, DVector, Vector3};

/// Unit vector `[sinφ cosθ, sinφ sinθ, cosφ]`.
pub fn direction_vector(angles: &PhysicalAngles) -> Vector3<f64> {
    angles.direction()
}

/// Global direction from the RIS towards the source of a UE–RIS arrival.
pub fn arrival_direction(ris: &RisGeometry, f: UpaFrequency) -> Vector3<f64> {
    ris.orientation.to_global(&f.local_direction())
}

/// Result of the closed-form positioning.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionFix {
    pub e_u_star: Position,
    pub d_star: Vec<f64>,
    /// Averaged squared distance between the per-RIS position views and
    /// `e_u_star`.
    pub f_min: f64,
    /// RIS indices of the subset used.
    pub subset: Vec<usize>,
    /// Candidate index chosen at each RIS of the subset.
    pub chosen: Vec<usize>,
}

/// `f(e_u, d) = Σ_k ‖e_k + d_k t_k − e_u‖² / K_L`.
pub fn position_error(dirs: &[Vector3<f64>], anchors: &[Position], e_u: &Vector3<f64>, d: &[f64]) -> f64 {
    dirs.iter()
        .zip(anchors)
        .zip(d)
        .map(|((t, e), dk)| (e.to_vector() + t * *dk - e_u).norm_squared())
        .sum::<f64>()
        / dirs.len() as f64
}

/// Closed-form minimizer of the averaged position error with
/// `e_u = T_P (d + d₀)`.
pub fn solve_position(dirs: &[Vector3<f64>], anchors: &[Position]) -> Result<PositionFix> {
    let kl = dirs.len();
    if anchors.len() != kl {
        return Err(Error::DimensionMismatch("one anchor per direction".into()));
    }
    if kl < 3 {
        return Err(Error::DegenerateGeometry(format!("{kl} directions cannot fix a position")));
    }
    let t = DMatrix::from_fn(kl, 3, |r, c| dirs[r][c]);
    let sv = t.singular_values();
    if sv.min() <= 1e-9 * sv.max() {
        return Err(Error::DegenerateGeometry("direction matrix has rank below 3".into()));
    }
    let tp = (t.transpose() * &t)
        .try_inverse()
        .ok_or_else(|| Error::SingularSystem("TᵀT".into()))?
        * t.transpose();
    let id = DMatrix::<f64>::identity(kl, kl);
    let tpp = tp.transpose() * &tp * kl as f64;
    let ttp = &t * &tp;
    let lhs = &tpp + &id - &ttp * 2.0;
    let sv = lhs.singular_values();
    if sv.min() <= 1e-12 * sv.max() {
        return Err(Error::SingularSystem("distance system is ill-conditioned".into()));
    }
    let lu = lhs.lu();
    let closed_form = |points: &[Vector3<f64>]| -> Result<(Vector3<f64>, DVector<f64>)> {
        let d0 = DVector::from_fn(kl, |k, _| dirs[k].dot(&points[k]));
        let sum_e: Vector3<f64> = points.iter().sum();
        let rhs = tp.transpose() * DVector::from_column_slice(sum_e.as_slice()) - (&tpp + &id - &ttp) * &d0;
        let d = lu
            .solve(&rhs)
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::SingularSystem("distance system".into()))?;
        let e = &tp * (&d + &d0);
        Ok((Vector3::new(e[0], e[1], e[2]), d))
    };
    let points: Vec<Vector3<f64>> = anchors.iter().map(|a| a.to_vector()).collect();
    let (mut e, mut d) = closed_form(&points)?;
    // Iterative refinement: the correction solves the same problem with the
    // residuals as anchors.
    for _ in 0..2 {
        let residuals: Vec<Vector3<f64>> = (0..kl).map(|k| points[k] + dirs[k] * d[k] - e).collect();
        let (de, dd) = closed_form(&residuals)?;
        e += de;
        d += dd;
    }
    let d: Vec<f64> = d.iter().copied().collect();
    Ok(PositionFix {
        e_u_star: Position::from_vector(&e),
        f_min: position_error(dirs, anchors, &e, &d),
        d_star: d,
        subset: (0..kl).collect(),
        chosen: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Algorithm1Config {
    /// RISs per positioning subset, `K_L`.
    pub subset_size: usize,
    /// Correlation threshold of the LoS test, `τ`.
    pub tau: f64,
    /// Cap on extraction rounds; `None` runs until every source is empty.
    pub max_rounds: Option<usize>,
}

impl Default for Algorithm1Config {
    fn default() -> Self {
        Self {
            subset_size: 3,
            tau: 0.95,
            max_rounds: None,
        }
    }
}

/// Per-RIS candidate paths that grow one path per round.
pub trait CandidateSource {
    fn ris_count(&self) -> usize;
    /// Extracts one more candidate at RIS `k`; `false` once it has none left.
    fn advance(&mut self, k: usize) -> Result<bool>;
    fn candidates(&self, k: usize) -> Vec<PathEstimate>;
}

/// NOMP UE–RIS extractors with a path cap per RIS.
#[derive(Debug, Clone)]
pub struct UplinkCandidates {
    pub extractors: Vec<UeRisExtractor>,
    pub limits: Vec<usize>,
}

impl CandidateSource for UplinkCandidates {
    fn ris_count(&self) -> usize {
        self.extractors.len()
    }

    fn advance(&mut self, k: usize) -> Result<bool> {
        let ex = &mut self.extractors[k];
        if ex.path_count() >= self.limits[k] {
            return Ok(false);
        }
        ex.extract_next()?;
        Ok(true)
    }

    fn candidates(&self, k: usize) -> Vec<PathEstimate> {
        self.extractors[k].paths()
    }
}

/// Fixed candidate lists revealed one entry per round.
#[derive(Debug, Clone)]
pub struct ListCandidates {
    pub lists: Vec<Vec<PathEstimate>>,
    revealed: Vec<usize>,
}

impl ListCandidates {
    pub fn new(lists: Vec<Vec<PathEstimate>>) -> Self {
        let revealed = vec![0; lists.len()];
        Self { lists, revealed }
    }
}

impl CandidateSource for ListCandidates {
    fn ris_count(&self) -> usize {
        self.lists.len()
    }

    fn advance(&mut self, k: usize) -> Result<bool> {
        if self.revealed[k] >= self.lists[k].len() {
            return Ok(false);
        }
        self.revealed[k] += 1;
        Ok(true)
    }

    fn candidates(&self, k: usize) -> Vec<PathEstimate> {
        self.lists[k][..self.revealed[k]].to_vec()
    }
}

/// Outcome of the joint LoS identification.
#[derive(Debug, Clone, PartialEq)]
pub struct LosIdentification {
    pub fix: PositionFix,
    /// Chosen LoS candidate index per RIS.
    pub los_index: Vec<usize>,
    /// Chosen LoS candidate per RIS, as extracted.
    pub los: Vec<PathEstimate>,
    /// RIS arrival frequencies back-computed from the position fix.
    pub back_computed: Vec<UpaFrequency>,
    /// UE departure frequencies back-computed from the position fix.
    pub back_computed_ue: Vec<UlaFrequency>,
    /// `|a_rᴴ(extracted) a_r(back-computed)|` per RIS.
    pub correlation: Vec<f64>,
    pub rounds: usize,
    /// Candidate assignments evaluated in each round.
    pub combinations: Vec<u64>,
    pub converged: bool,
}

fn ris_correlation(ris: &RisGeometry, a: UpaFrequency, b: UpaFrequency) -> f64 {
    let x = upa_steering(ris.vertical, ris.horizontal, a);
    let y = upa_steering(ris.vertical, ris.horizontal, b);
    dot_h(x.as_slice(), y.as_slice()).norm()
}

/// Best position fix over every subset of `subset_size` RISs and every
/// assignment of candidates; ties go to the lexicographically first
/// (subset, assignment). Returns the fix and the number of assignments.
pub fn best_fix(
    ris: &[RisGeometry],
    candidates: &[Vec<PathEstimate>],
    subset_size: usize,
) -> Result<(Option<PositionFix>, u64)> {
    let mut best: Option<PositionFix> = None;
    let mut count = 0u64;
    for subset in (0..ris.len()).combinations(subset_size) {
        let lists: Vec<Vec<usize>> = subset.iter().map(|&k| (0..candidates[k].len()).collect()).collect();
        if lists.iter().any(|l| l.is_empty()) {
            continue;
        }
        for assignment in lists.into_iter().multi_cartesian_product() {
            count += 1;
            let dirs: Vec<Vector3<f64>> = subset
                .iter()
                .zip(&assignment)
                .map(|(&k, &l)| arrival_direction(&ris[k], candidates[k][l].ris))
                .collect();
            let anchors: Vec<Position> = subset.iter().map(|&k| ris[k].position).collect();
            let fix = match solve_position(&dirs, &anchors) {
                Ok(f) => f,
                Err(Error::DegenerateGeometry(_)) | Err(Error::SingularSystem(_)) => continue,
                Err(e) => return Err(e),
            };
            if best.as_ref().is_none_or(|b| fix.f_min < b.f_min) {
                best = Some(PositionFix {
                    subset: subset.clone(),
                    chosen: assignment.clone(),
                    ..fix
                });
            }
        }
    }
    Ok((best, count))
}

/// Round-by-round LoS identification. Each round adds one candidate per
/// RIS, positions the UE from the best subset and assignment, and stops
/// once every RIS has a candidate whose arrival correlates with the
/// back-computed LoS arrival by at least `τ`. RISs in the chosen subset use
/// their assigned candidate; the others use their best-correlated one.
pub fn algorithm1<S: CandidateSource + ?Sized>(
    ris: &[RisGeometry],
    ue_orientation: &Orientation,
    source: &mut S,
    cfg: &Algorithm1Config,
) -> Result<LosIdentification> {
    let k_total = source.ris_count();
    if ris.len() != k_total {
        return Err(Error::DimensionMismatch("one RIS geometry per candidate source".into()));
    }
    if cfg.subset_size < 3 || cfg.subset_size > k_total {
        return Err(Error::DegenerateGeometry(format!(
            "subset size {} with {k_total} RISs",
            cfg.subset_size
        )));
    }
    let mut combinations = Vec::new();
    let mut last: Option<LosIdentification> = None;
    let mut round = 0;
    loop {
        if cfg.max_rounds.is_some_and(|m| round >= m) {
            break;
        }
        let mut grew = false;
        for k in 0..k_total {
            grew |= source.advance(k)?;
        }
        if !grew && round > 0 {
            break;
        }
        round += 1;
        let candidates: Vec<Vec<PathEstimate>> = (0..k_total).map(|k| source.candidates(k)).collect();
        let (fix, count) = best_fix(ris, &candidates, cfg.subset_size)?;
        combinations.push(count);
        let Some(fix) = fix else {
            continue;
        };
        let e = fix.e_u_star.to_vector();
        let mut los_index = Vec::with_capacity(k_total);
        let mut back = Vec::with_capacity(k_total);
        let mut back_ue = Vec::with_capacity(k_total);
        let mut corr = Vec::with_capacity(k_total);
        for (k, r) in ris.iter().enumerate() {
            let t = (e - r.position.to_vector()).normalize();
            let f = r.orientation.upa_frequency(&t);
            back.push(f);
            back_ue.push(ue_orientation.ula_frequency(&(-t)));
            let scores: Vec<f64> = candidates[k].iter().map(|c| ris_correlation(r, c.ris, f)).collect();
            let idx = match fix.subset.iter().position(|&s| s == k) {
                Some(j) => fix.chosen[j],
                None => scores
                    .iter()
                    .enumerate()
                    .fold(None, |b: Option<(usize, f64)>, (i, &s)| match b {
                        Some((_, bs)) if bs >= s => b,
                        _ => Some((i, s)),
                    })
                    .map_or(0, |b| b.0),
            };
            los_index.push(idx);
            corr.push(scores.get(idx).copied().unwrap_or(0.0));
        }
        let converged = corr.iter().all(|&c| c >= cfg.tau);
        let los = los_index
            .iter()
            .enumerate()
            .map(|(k, &i)| candidates[k][i])
            .collect();
        last = Some(LosIdentification {
            fix,
            los_index,
            los,
            back_computed: back,
            back_computed_ue: back_ue,
            correlation: corr,
            rounds: round,
            combinations: combinations.clone(),
            converged,
        });
        if converged {
            break;
        }
    }
    last.ok_or(Error::NoSignal)
}
