//! Safeguarded Newton refinement of one atom against a fixed target.

use super::atoms::{tri_index, AtomModel};
use crate::linalg::{dot_h, energy};
use crate::Complex64;
use nalgebra::{DMatrix, DVector};

/// Concentrated objective `|xᴴt|²/‖x‖²` and the matching gain.
pub fn correlation(x: &[Complex64], t: &[Complex64]) -> (f64, Complex64) {
    let e = energy(x);
    if e == 0.0 {
        return (0.0, Complex64::new(0.0, 0.0));
    }
    let c = dot_h(x, t);
    (c.norm_sqr() / e, c / e)
}

/// Runs up to `steps` Newton iterations on the frequencies `w`, maximizing
/// the fit of a single scaled atom to `target`. A step is taken only if it
/// does not lower the concentrated objective; points rejected by `excluded`
/// are never visited. Returns the optimal gain at the final frequencies.
pub fn refine<M: AtomModel>(
    model: &M,
    w: &mut [f64],
    target: &[Complex64],
    steps: usize,
    excluded: &dyn Fn(&[f64]) -> bool,
) -> Complex64 {
    let dim = model.dim();
    let spacing = model.spacing();
    for _ in 0..steps {
        let d = model.derivs(w);
        let (j0, _) = correlation(&d.x, target);
        if j0 == 0.0 {
            break;
        }
        let c = dot_h(&d.x, target);
        let e = energy(&d.x);
        let n = c.norm_sqr();
        let ci: Vec<Complex64> = d.d.iter().map(|di| dot_h(di, target)).collect();
        let ei: Vec<f64> = d.d.iter().map(|di| 2.0 * dot_h(di, &d.x).re).collect();
        let ni: Vec<f64> = ci.iter().map(|v| 2.0 * (c.conj() * v).re).collect();
        let mut grad = DVector::<f64>::zeros(dim);
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            grad[i] = (ni[i] * e - n * ei[i]) / (e * e);
            for j in i..dim {
                let dd = &d.dd[tri_index(dim, i, j)];
                let nij = 2.0 * (ci[j].conj() * ci[i] + c.conj() * dot_h(dd, target)).re;
                let eij = 2.0 * (dot_h(dd, &d.x) + dot_h(&d.d[i], &d.d[j])).re;
                let h = nij / e - (ni[i] * ei[j] + ni[j] * ei[i]) / (e * e) - n * eij / (e * e)
                    + 2.0 * n * ei[i] * ei[j] / (e * e * e);
                hess[(i, j)] = h;
                hess[(j, i)] = h;
            }
        }
        let newton = (-&hess)
            .cholesky()
            .map(|c| c.solve(&grad))
            .filter(|s| s.iter().all(|v| v.is_finite()));
        let mut step = match newton {
            Some(s) => s,
            None => {
                let scale = (0..dim)
                    .map(|i| grad[i].abs() / spacing[i])
                    .fold(0.0, f64::max);
                if !(scale > 0.0) {
                    break;
                }
                &grad * (0.5 / scale)
            }
        };
        let reach = (0..dim)
            .map(|i| step[i].abs() / spacing[i])
            .fold(0.0, f64::max);
        if reach > 1.0 {
            step /= reach;
        }
        let mut moved = false;
        for _ in 0..12 {
            let cand: Vec<f64> = w.iter().zip(step.iter()).map(|(a, s)| a + s).collect();
            if !excluded(&cand) {
                let (j1, _) = correlation(&model.atom(&cand), target);
                if j1 >= j0 {
                    w.copy_from_slice(&cand);
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    correlation(&model.atom(w), target).1
}

#[cfg(test)]
mod tests {
    use super::super::atoms::UlaAtom;
    use super::*;
    use crate::geometry::ula_steering;

    #[test]
    fn converges_on_single_tone() {
        let m = UlaAtom {
            antennas: 8,
            spacing: std::f64::consts::PI / 8.0,
        };
        let truth = 0.4321;
        let t: Vec<Complex64> = (ula_steering(8, truth) * Complex64::new(0.3, -1.2))
            .as_slice()
            .to_vec();
        let mut w = [0.35];
        let g = refine(&m, &mut w, &t, 10, &|_| false);
        assert!((w[0] - truth).abs() < 1e-10);
        assert!((g - Complex64::new(0.3, -1.2)).norm() < 1e-9);
    }

    #[test]
    fn never_lowers_objective() {
        let m = UlaAtom {
            antennas: 4,
            spacing: 0.5,
        };
        let t: Vec<Complex64> = (ula_steering(4, 1.0) + ula_steering(4, -2.0) * Complex64::new(0.9, 0.0))
            .as_slice()
            .to_vec();
        for start in [-3.0, -1.0, 0.0, 0.5, 2.5] {
            let mut w = [start];
            let j0 = correlation(&m.atom(&w), &t).0;
            refine(&m, &mut w, &t, 5, &|_| false);
            assert!(correlation(&m.atom(&w), &t).0 >= j0);
        }
    }
}
