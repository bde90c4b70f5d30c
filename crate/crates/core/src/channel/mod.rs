//! One-hop channel synthesis, end-to-end composition and the cascaded-gain
//! factorization of the reflection channel.

mod config;

pub use config::{db_to_linear, dbm_to_watts, RisConfig, ScenarioConfig, UePlacement};
pub use crate::linalg::khatri_rao;

use crate::geometry::{
    los_geometry, ula_steering, upa_steering, ArrayShape, Orientation, Position, UlaFrequency,
    UpaFrequency,
};
use crate::linalg::{complex_normal, scale_mul};
use crate::{CMatrix, CVector, Complex64, Error, Result};
use nalgebra::Vector3;
use rand::Rng;
use std::f64::consts::PI;

/// Which link a segment channel belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hop {
    UeRis(usize),
    RisBs(usize),
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathRole {
    Los,
    Nlos,
}

/// Spatial frequency at one end of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialFrequency {
    Ula(UlaFrequency),
    Upa(UpaFrequency),
}

impl SpatialFrequency {
    pub fn response(&self, shape: ArrayShape) -> Result<CVector> {
        match (self, shape) {
            (SpatialFrequency::Ula(f), ArrayShape::Ula(n)) => Ok(ula_steering(n, f.theta_cap)),
            (
                SpatialFrequency::Upa(f),
                ArrayShape::Upa {
                    vertical,
                    horizontal,
                },
            ) => Ok(upa_steering(vertical, horizontal, *f)),
            _ => Err(Error::InvalidShape(format!(
                "{self:?} does not fit array {shape:?}"
            ))),
        }
    }

    pub fn ula(&self) -> Option<f64> {
        match self {
            SpatialFrequency::Ula(f) => Some(f.theta_cap),
            SpatialFrequency::Upa(_) => None,
        }
    }

    pub fn upa(&self) -> Option<UpaFrequency> {
        match self {
            SpatialFrequency::Upa(f) => Some(*f),
            SpatialFrequency::Ula(_) => None,
        }
    }
}

/// One propagation path of a segment channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    pub role: PathRole,
    pub arrival: SpatialFrequency,
    pub departure: SpatialFrequency,
    /// Small-scale gain; unit for the LoS path.
    pub beta: Complex64,
    /// Gain after the Rician power split.
    pub gain: Complex64,
}

/// A one-hop channel and the paths that generate it.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentChannel {
    pub hop: Hop,
    pub arrival_shape: ArrayShape,
    pub departure_shape: ArrayShape,
    pub matrix: CMatrix,
    pub paths: Vec<PathParams>,
}

impl SegmentChannel {
    /// Builds the matrix `Σ g · a_arrival a_departureᴴ`.
    pub fn from_paths(
        hop: Hop,
        arrival_shape: ArrayShape,
        departure_shape: ArrayShape,
        paths: Vec<PathParams>,
    ) -> Result<Self> {
        let mut matrix = CMatrix::zeros(arrival_shape.elements(), departure_shape.elements());
        for p in &paths {
            let a = p.arrival.response(arrival_shape)?;
            let d = p.departure.response(departure_shape)?;
            matrix += (a * p.gain) * d.adjoint();
        }
        Ok(Self {
            hop,
            arrival_shape,
            departure_shape,
            matrix,
            paths,
        })
    }

    /// Recomputes the matrix from the path list.
    pub fn rebuild(&self) -> Result<CMatrix> {
        Self::from_paths(
            self.hop,
            self.arrival_shape,
            self.departure_shape,
            self.paths.clone(),
        )
        .map(|s| s.matrix)
    }

    pub fn los(&self) -> Option<&PathParams> {
        self.paths.first().filter(|p| p.role == PathRole::Los)
    }
}

/// Large-scale amplitude factors of the direct link and every RIS link.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScale {
    pub rho_0: f64,
    pub rho: Vec<f64>,
}

/// RIS placement as seen by one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RisGeometry {
    pub position: Position,
    pub vertical: usize,
    pub horizontal: usize,
    pub orientation: Orientation,
}

impl RisGeometry {
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

/// Array placements and frames, completed by the UE position of a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGeometry {
    pub bs_position: Position,
    pub bs_orientation: Orientation,
    pub ue_position: Position,
    pub ue_orientation: Orientation,
    pub ris: Vec<RisGeometry>,
}

impl ScenarioGeometry {
    pub fn resolve(cfg: &ScenarioConfig, ue_position: Position) -> Result<Self> {
        cfg.validate()?;
        let orientations = cfg.ris_orientations()?;
        Ok(Self {
            bs_position: cfg.bs_position,
            bs_orientation: Orientation::along(Vector3::from(cfg.bs_axis))?,
            ue_position,
            ue_orientation: Orientation::along(Vector3::from(cfg.ue_axis))?,
            ris: cfg
                .ris
                .iter()
                .zip(orientations)
                .map(|(r, orientation)| RisGeometry {
                    position: r.position,
                    vertical: r.vertical,
                    horizontal: r.horizontal,
                    orientation,
                })
                .collect(),
        })
    }

    /// Same arrays with a different UE position.
    pub fn with_ue(&self, ue_position: Position) -> Self {
        Self {
            ue_position,
            ..self.clone()
        }
    }

    pub fn large_scale(&self, cfg: &ScenarioConfig) -> Result<LargeScale> {
        let lambda = cfg.wavelength();
        let d0 = los_geometry(&self.ue_position, &self.bs_position)?.distance;
        let rho = self
            .ris
            .iter()
            .map(|r| {
                let dur = los_geometry(&self.ue_position, &r.position)?.distance;
                let drb = los_geometry(&r.position, &self.bs_position)?.distance;
                Ok(lambda / (4.0 * PI * dur) * lambda / (4.0 * PI * drb))
            })
            .collect::<Result<_>>()?;
        Ok(LargeScale {
            rho_0: lambda * cfg.epsilon0() / (4.0 * PI * d0),
            rho,
        })
    }

    /// LoS frequencies of the RIS–BS hop: BS arrival and RIS departure.
    pub fn rb_los(&self, k: usize) -> Result<(UlaFrequency, UpaFrequency)> {
        let r = self.ris_at(k)?;
        let t = direction(&r.position, &self.bs_position)?;
        Ok((
            self.bs_orientation.ula_frequency(&(-t)),
            r.orientation.upa_frequency(&t),
        ))
    }

    /// LoS frequencies of the UE–RIS hop: RIS arrival and UE departure.
    pub fn ur_los(&self, k: usize) -> Result<(UpaFrequency, UlaFrequency)> {
        let r = self.ris_at(k)?;
        let t = direction(&r.position, &self.ue_position)?;
        Ok((
            r.orientation.upa_frequency(&t),
            self.ue_orientation.ula_frequency(&(-t)),
        ))
    }

    fn ris_at(&self, k: usize) -> Result<&RisGeometry> {
        self.ris
            .get(k)
            .ok_or_else(|| Error::IndexOutOfRange(format!("RIS {k}")))
    }
}

fn direction(from: &Position, to: &Position) -> Result<Vector3<f64>> {
    Ok(los_geometry(from, to)?.angles_at_a.direction())
}

/// Uniform draw of the UE position.
pub fn sample_ue_position<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Position {
    match &cfg.ue_placement {
        UePlacement::Fixed { position } => *position,
        UePlacement::Disk { center, radius } => {
            let r = radius * rng.random::<f64>().sqrt();
            let a = 2.0 * PI * rng.random::<f64>();
            Position::new(center.x + r * a.cos(), center.y + r * a.sin(), center.z)
        }
    }
}

/// LoS and NLoS amplitude weights for Rician factor `kappa`.
pub fn rician_weights(kappa: f64) -> (f64, f64) {
    if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
    }
}

fn nlos_ula<R: Rng + ?Sized>(rng: &mut R) -> SpatialFrequency {
    let theta = rng.random_range(-PI / 2.0..PI / 2.0);
    SpatialFrequency::Ula(UlaFrequency::new(PI * theta.sin()))
}

fn nlos_upa<R: Rng + ?Sized>(rng: &mut R) -> SpatialFrequency {
    let t = rng.random_range(-PI..PI);
    let p = rng.random_range(-PI..PI);
    SpatialFrequency::Upa(UpaFrequency::new(t, p))
}

/// Draws one segment channel of the scenario.
pub fn sample_segment<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    geom: &ScenarioGeometry,
    hop: Hop,
    rng: &mut R,
) -> Result<SegmentChannel> {
    let nb = ArrayShape::Ula(cfg.bs_antennas);
    let nu = ArrayShape::Ula(cfg.ue_antennas);
    match hop {
        Hop::Direct => {
            let l = cfg.nlos_direct;
            let scale = ((cfg.bs_antennas * cfg.ue_antennas) as f64 / l.max(1) as f64).sqrt();
            let paths = (0..l)
                .map(|_| {
                    let arrival = nlos_ula(rng);
                    let departure = nlos_ula(rng);
                    let beta = complex_normal(rng);
                    PathParams {
                        role: PathRole::Nlos,
                        arrival,
                        departure,
                        beta,
                        gain: beta * scale,
                    }
                })
                .collect();
            SegmentChannel::from_paths(hop, nb, nu, paths)
        }
        Hop::UeRis(k) => {
            let ris = geom.ris_at(k)?;
            let (arr, dep) = geom.ur_los(k)?;
            let paths = rician_paths(
                (ris.elements() * cfg.ue_antennas) as f64,
                cfg.kappa_ur,
                cfg.nlos_ur_of(k),
                SpatialFrequency::Upa(arr),
                SpatialFrequency::Ula(dep),
                |rng| (nlos_upa(rng), nlos_ula(rng)),
                rng,
            );
            SegmentChannel::from_paths(hop, ris.shape(), nu, paths)
        }
        Hop::RisBs(k) => {
            let ris = geom.ris_at(k)?;
            let (arr, dep) = geom.rb_los(k)?;
            let paths = rician_paths(
                (ris.elements() * cfg.bs_antennas) as f64,
                cfg.kappa_rb,
                cfg.nlos_rb_of(k),
                SpatialFrequency::Ula(arr),
                SpatialFrequency::Upa(dep),
                |rng| (nlos_ula(rng), nlos_upa(rng)),
                rng,
            );
            SegmentChannel::from_paths(hop, nb, ris.shape(), paths)
        }
    }
}

fn rician_paths<R: Rng + ?Sized>(
    size: f64,
    kappa: f64,
    nlos: usize,
    los_arrival: SpatialFrequency,
    los_departure: SpatialFrequency,
    mut draw: impl FnMut(&mut R) -> (SpatialFrequency, SpatialFrequency),
    rng: &mut R,
) -> Vec<PathParams> {
    let (wl, wn) = rician_weights(kappa);
    let one = Complex64::new(1.0, 0.0);
    let mut paths = vec![PathParams {
        role: PathRole::Los,
        arrival: los_arrival,
        departure: los_departure,
        beta: one,
        gain: one * (size.sqrt() * wl),
    }];
    let scale = (size / nlos.max(1) as f64).sqrt() * wn;
    for _ in 0..nlos {
        let (arrival, departure) = draw(rng);
        let beta = complex_normal(rng);
        paths.push(PathParams {
            role: PathRole::Nlos,
            arrival,
            departure,
            beta,
            gain: beta * scale,
        });
    }
    paths
}

/// The two hops of one RIS link.
#[derive(Debug, Clone, PartialEq)]
pub struct RisLink {
    pub ur: SegmentChannel,
    pub rb: SegmentChannel,
}

/// All channels of one trial together with the geometry that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub geometry: ScenarioGeometry,
    pub large_scale: LargeScale,
    pub direct: SegmentChannel,
    pub links: Vec<RisLink>,
}

impl ChannelRealization {
    /// Draws the direct hop and then the UE–RIS and RIS–BS hops of each RIS.
    pub fn sample<R: Rng + ?Sized>(
        cfg: &ScenarioConfig,
        geometry: ScenarioGeometry,
        rng: &mut R,
    ) -> Result<Self> {
        let large_scale = geometry.large_scale(cfg)?;
        let direct = sample_segment(cfg, &geometry, Hop::Direct, rng)?;
        let links = (0..geometry.ris.len())
            .map(|k| {
                Ok(RisLink {
                    ur: sample_segment(cfg, &geometry, Hop::UeRis(k), rng)?,
                    rb: sample_segment(cfg, &geometry, Hop::RisBs(k), rng)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            geometry,
            large_scale,
            direct,
            links,
        })
    }

    /// `ρ_k H_rb,k diag(γ) H_ur,k`.
    pub fn link_channel(&self, k: usize, gamma: &CVector) -> Result<CMatrix> {
        let l = self
            .links
            .get(k)
            .ok_or_else(|| Error::IndexOutOfRange(format!("RIS {k}")))?;
        check_reflection(gamma, l.rb.matrix.ncols())?;
        Ok(scale_mul(&l.rb.matrix, gamma, &l.ur.matrix) * Complex64::new(self.large_scale.rho[k], 0.0))
    }

    /// Reflection part of the channel, without the direct hop.
    pub fn reflection(&self, gammas: &[CVector]) -> Result<CMatrix> {
        if gammas.len() != self.links.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} reflection vectors for {} RISs",
                gammas.len(),
                self.links.len()
            )));
        }
        let mut h = CMatrix::zeros(self.direct.matrix.nrows(), self.direct.matrix.ncols());
        for (k, g) in gammas.iter().enumerate() {
            h += self.link_channel(k, g)?;
        }
        Ok(h)
    }

    pub fn direct_channel(&self) -> CMatrix {
        &self.direct.matrix * Complex64::new(self.large_scale.rho_0, 0.0)
    }

    pub fn compose(&self, gammas: &[CVector]) -> Result<CMatrix> {
        Ok(self.direct_channel() + self.reflection(gammas)?)
    }
}

fn check_reflection(gamma: &CVector, m: usize) -> Result<()> {
    if gamma.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "reflection vector of length {} for {m} elements",
            gamma.len()
        )));
    }
    for (index, g) in gamma.iter().enumerate() {
        let modulus = g.norm();
        if (modulus - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidReflection { index, modulus });
        }
    }
    Ok(())
}

/// `H = ρ₀H₀ + Σ_k ρ_k H_rb,k diag(γ_k) H_ur,k`.
pub fn compose(
    h0: &SegmentChannel,
    segs: &[(SegmentChannel, SegmentChannel)],
    gammas: &[CVector],
    ls: &LargeScale,
) -> Result<CMatrix> {
    if segs.len() != gammas.len() || segs.len() > ls.rho.len() {
        return Err(Error::DimensionMismatch(
            "segment, reflection and attenuation counts differ".into(),
        ));
    }
    let mut h = &h0.matrix * Complex64::new(ls.rho_0, 0.0);
    for (k, ((ur, rb), g)) in segs.iter().zip(gammas).enumerate() {
        check_reflection(g, rb.matrix.ncols())?;
        if rb.matrix.nrows() != h.nrows() || ur.matrix.ncols() != h.ncols() {
            return Err(Error::DimensionMismatch(format!("RIS {k} hop shapes")));
        }
        h += scale_mul(&rb.matrix, g, &ur.matrix) * Complex64::new(ls.rho[k], 0.0);
    }
    Ok(h)
}

/// `ρ g_l^rb g_c^ur · a_rᴴ(rb departure l) diag(γ) a_r(ur arrival c)`.
pub fn cascaded_gain(
    l: usize,
    c: usize,
    gamma: &CVector,
    ur: &SegmentChannel,
    rb: &SegmentChannel,
    rho: f64,
) -> Result<Complex64> {
    let pl = rb
        .paths
        .get(l)
        .ok_or_else(|| Error::IndexOutOfRange(format!("RIS–BS path {l}")))?;
    let pc = ur
        .paths
        .get(c)
        .ok_or_else(|| Error::IndexOutOfRange(format!("UE–RIS path {c}")))?;
    check_reflection(gamma, rb.departure_shape.elements())?;
    let ad = pl.departure.response(rb.departure_shape)?;
    let aa = pc.arrival.response(ur.arrival_shape)?;
    let inner: Complex64 = ad
        .iter()
        .zip(gamma.iter())
        .zip(aa.iter())
        .map(|((d, g), a)| d.conj() * g * a)
        .sum();
    Ok(pl.gain * pc.gain * inner * rho)
}

/// Reflection channel written as `A_b Ξ A_uᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadedForm {
    /// BS responses of every RIS–BS path, RIS after RIS.
    pub a_b: CMatrix,
    /// UE responses of every UE–RIS path, RIS after RIS.
    pub a_u: CMatrix,
    /// Block-diagonal gain matrix.
    pub xi: CMatrix,
    /// Per-RIS blocks of shape `(L_rb+1) × (L_ur+1)`.
    pub blocks: Vec<CMatrix>,
}

impl CascadedForm {
    pub fn evaluate(&self) -> CMatrix {
        &self.a_b * &self.xi * self.a_u.adjoint()
    }
}

pub fn cascaded_form(
    segs: &[(SegmentChannel, SegmentChannel)],
    gammas: &[CVector],
    ls: &LargeScale,
) -> Result<CascadedForm> {
    if segs.is_empty() || segs.len() != gammas.len() {
        return Err(Error::DimensionMismatch(
            "need one reflection vector per RIS".into(),
        ));
    }
    let nb = segs[0].1.arrival_shape;
    let nu = segs[0].0.departure_shape;
    let mut bs_cols = Vec::new();
    let mut ue_cols = Vec::new();
    let mut blocks = Vec::new();
    for (k, ((ur, rb), g)) in segs.iter().zip(gammas).enumerate() {
        let mut block = CMatrix::zeros(rb.paths.len(), ur.paths.len());
        for l in 0..rb.paths.len() {
            for c in 0..ur.paths.len() {
                block[(l, c)] = cascaded_gain(l, c, g, ur, rb, ls.rho[k])?;
            }
        }
        for p in &rb.paths {
            bs_cols.push(p.arrival.response(nb)?);
        }
        for p in &ur.paths {
            ue_cols.push(p.departure.response(nu)?);
        }
        blocks.push(block);
    }
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut xi = CMatrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in &blocks {
        xi.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    Ok(CascadedForm {
        a_b: CMatrix::from_columns(&bs_cols),
        a_u: CMatrix::from_columns(&ue_cols),
        xi,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario() -> (ScenarioConfig, ScenarioGeometry) {
        let cfg = ScenarioConfig::default();
        let g = ScenarioGeometry::resolve(&cfg, Position::new(80.0, 0.0, 0.0)).unwrap();
        (cfg, g)
    }

    fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn rician_limit_is_los() {
        let (mut cfg, g) = scenario();
        cfg.kappa_rb = 1e9;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample_segment(&cfg, &g, Hop::RisBs(0), &mut rng).unwrap();
        let p = s.los().unwrap();
        let los = (p.arrival.response(s.arrival_shape).unwrap()
            * p.departure.response(s.departure_shape).unwrap().adjoint())
            * Complex64::new((25.0f64 * 16.0).sqrt(), 0.0);
        assert!(rel(&s.matrix, &los) < 1e-3);
    }

    #[test]
    fn no_nlos_gives_scaled_los() {
        let (mut cfg, g) = scenario();
        cfg.nlos_rb = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = sample_segment(&cfg, &g, Hop::RisBs(1), &mut rng).unwrap();
        assert_eq!(s.paths.len(), 1);
        let k = cfg.kappa_rb;
        let want = (s.paths[0].arrival.response(s.arrival_shape).unwrap()
            * s.paths[0].departure.response(s.departure_shape).unwrap().adjoint())
            * Complex64::new((400.0 * k / (k + 1.0)).sqrt(), 0.0);
        assert!(rel(&s.matrix, &want) < 1e-14);
    }

    #[test]
    fn matrix_matches_path_list() {
        let (cfg, g) = scenario();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for hop in [Hop::Direct, Hop::UeRis(2), Hop::RisBs(3)] {
            let s = sample_segment(&cfg, &g, hop, &mut rng).unwrap();
            assert!(rel(&s.rebuild().unwrap(), &s.matrix) < 1e-10);
        }
    }

    #[test]
    fn mean_energy_matches_normalization() {
        let (mut cfg, g) = scenario();
        cfg.kappa_rb = 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| {
                sample_segment(&cfg, &g, Hop::RisBs(0), &mut rng)
                    .unwrap()
                    .matrix
                    .norm_squared()
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean / 400.0 - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn compose_matches_cascaded_form() {
        let (cfg, g) = scenario();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let real = ChannelRealization::sample(&cfg, g, &mut rng).unwrap();
        let gammas: Vec<CVector> = real
            .links
            .iter()
            .map(|l| {
                CVector::from_fn(l.rb.matrix.ncols(), |_, _| {
                    Complex64::from_polar(1.0, rng.random_range(-PI..PI))
                })
            })
            .collect();
        let segs: Vec<_> = real
            .links
            .iter()
            .map(|l| (l.ur.clone(), l.rb.clone()))
            .collect();
        let h = compose(&real.direct, &segs, &gammas, &real.large_scale).unwrap();
        assert!(rel(&h, &real.compose(&gammas).unwrap()) < 1e-12);
        let form = cascaded_form(&segs, &gammas, &real.large_scale).unwrap();
        assert!(rel(&form.evaluate(), &real.reflection(&gammas).unwrap()) < 1e-9);
        assert_eq!(form.blocks[0].shape(), (3, 6));
    }

    #[test]
    fn compose_edge_cases() {
        let (cfg, g) = scenario();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let real = ChannelRealization::sample(&cfg, g, &mut rng).unwrap();
        let h = compose(&real.direct, &[], &[], &real.large_scale).unwrap();
        assert!(rel(&h, &real.direct_channel()) < 1e-15);
        let segs = vec![(real.links[0].ur.clone(), real.links[0].rb.clone())];
        let bad = vec![CVector::from_element(25, Complex64::new(0.5, 0.0))];
        assert!(matches!(
            compose(&real.direct, &segs, &bad, &real.large_scale),
            Err(Error::InvalidReflection { .. })
        ));
    }

    #[test]
    fn single_element_gain() {
        let (mut cfg, _) = scenario();
        for r in &mut cfg.ris {
            r.vertical = 1;
            r.horizontal = 1;
        }
        let g = ScenarioGeometry::resolve(&cfg, Position::new(78.0, 3.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let real = ChannelRealization::sample(&cfg, g, &mut rng).unwrap();
        let gamma = CVector::from_element(1, Complex64::from_polar(1.0, 0.3));
        let l = &real.links[0];
        let xi = cascaded_gain(1, 2, &gamma, &l.ur, &l.rb, 0.5).unwrap();
        let want = l.rb.paths[1].gain * l.ur.paths[2].gain * gamma[0] * 0.5;
        assert!((xi - want).norm() < 1e-12 * want.norm());
        assert!(cascaded_gain(9, 0, &gamma, &l.ur, &l.rb, 0.5).is_err());
        let h = real.link_channel(0, &gamma).unwrap();
        assert_eq!(h.rank(1e-9 * h.norm()), 1);
    }

    #[test]
    fn attenuation_is_monotone_in_loss() {
        let (mut cfg, g) = scenario();
        let a = g.large_scale(&cfg).unwrap().rho_0;
        cfg.penetration_loss_db += 3.0;
        let b = g.large_scale(&cfg).unwrap().rho_0;
        assert!(b < a);
    }
}
