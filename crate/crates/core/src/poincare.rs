//! Normal frames along regular orbits and the linear Poincare flow
//! P_t = Pi o DX_t expressed in continuously transported orthonormal frames.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{LinalgError, LinearMap, Subspace};
use crate::systems::{OrbitSegment, TangentCocycle};

#[derive(Debug, Error)]
pub enum PoincareError {
    #[error("segment matrix is ill conditioned (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },
    #[error("invalid segment indices i={i}, j={j}, len={len}")]
    BadIndices { i: usize, j: usize, len: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// An orthonormal basis of the normal space at one orbit point.
#[derive(Debug, Clone)]
pub struct NormalFrame {
    pub point_index: usize,
    /// dim x (dim-1) matrix, columns orthonormal and orthogonal to X(x).
    pub frame: DMatrix<f64>,
}

/// The linear Poincare flow along one orbit, in transported frames.
/// `matrices[i]` represents P_{t_i} mapping frame-0 coordinates to frame-i
/// coordinates; `steps[i]` is P over the single step [t_i, t_{i+1}].
#[derive(Debug, Clone)]
pub struct PoincareCocycle {
    pub frames: Vec<NormalFrame>,
    pub matrices: Vec<DMatrix<f64>>,
    pub steps: Vec<DMatrix<f64>>,
}

/// Deterministic completion of a unit vector to an orthonormal basis; returns
/// the n-1 completion vectors.
fn complete_to_frame(x_dir: &DVector<f64>) -> DMatrix<f64> {
    let n = x_dir.len();
    let mut cols: Vec<DVector<f64>> = vec![x_dir.clone()];
    // Seed with the coordinate axes least aligned with what we have.
    let mut axes: Vec<usize> = (0..n).collect();
    axes.sort_by(|&a, &b| x_dir[a].abs().partial_cmp(&x_dir[b].abs()).unwrap());
    for &a in &axes {
        if cols.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[a] = 1.0;
        for _ in 0..2 {
            for b in &cols {
                let c = b.dot(&v);
                v -= b * c;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
    }
    DMatrix::from_columns(&cols[1..])
}

fn unit_field(orbit: &OrbitSegment, i: usize) -> DVector<f64> {
    let f = &orbit.field_values[i];
    f / f.norm()
}

/// Builds transported normal frames: the first from a deterministic
/// completion of X(x_0), later ones by projecting the previous frame onto the
/// new normal space and re-orthonormalizing, so consecutive frames never flip.
pub fn build_normal_frames(orbit: &OrbitSegment) -> Result<Vec<NormalFrame>, PoincareError> {
    let n = orbit.points[0].len();
    let mut frames = Vec::with_capacity(orbit.len());
    let mut prev: DMatrix<f64> = complete_to_frame(&unit_field(orbit, 0));
    frames.push(NormalFrame { point_index: 0, frame: prev.clone() });
    for i in 1..orbit.len() {
        let x = unit_field(orbit, i);
        let proj = DMatrix::identity(n, n) - &x * x.transpose();
        let carried = &proj * &prev;
        let sub = Subspace::from_cols(&carried)?;
        let frame = sub.basis().clone();
        frames.push(NormalFrame { point_index: i, frame: frame.clone() });
        prev = frame;
    }
    Ok(frames)
}

/// P_i = frame_i^T D_i frame_0. The orthogonal projection is implicit in the
/// frame representation: frame_i^T Pi_i = frame_i^T.
pub fn linear_poincare_flow(
    orbit: &OrbitSegment,
    tangent: &TangentCocycle,
) -> Result<PoincareCocycle, PoincareError> {
    let frames = build_normal_frames(orbit)?;
    let matrices: Vec<DMatrix<f64>> = frames
        .iter()
        .enumerate()
        .map(|(i, fr)| fr.frame.transpose() * &tangent.fundamental[i] * &frames[0].frame)
        .collect();
    let steps: Vec<DMatrix<f64>> = (0..tangent.steps.len())
        .map(|i| frames[i + 1].frame.transpose() * &tangent.steps[i] * &frames[i].frame)
        .collect();
    Ok(PoincareCocycle { frames, matrices, steps })
}

/// (P over [i, j])^{-1}, representing P_{t_i - t_j} at x(t_j).
pub fn poincare_inverse_segment(
    pc: &PoincareCocycle,
    i: usize,
    j: usize,
) -> Result<LinearMap, PoincareError> {
    let len = pc.matrices.len();
    if i > j || j >= len {
        return Err(PoincareError::BadIndices { i, j, len });
    }
    let d = pc.steps.first().map(|m| m.nrows()).unwrap_or(0);
    let mut seg = DMatrix::identity(d, d);
    for k in i..j {
        seg = &pc.steps[k] * seg;
    }
    let (lo, hi) = crate::linalg::sigma_extremes(&seg);
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if cond > 1e12 {
        return Err(PoincareError::IllConditioned { cond });
    }
    let inv = seg
        .try_inverse()
        .ok_or(PoincareError::IllConditioned { cond: f64::INFINITY })?;
    Ok(LinearMap::new(inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{
        catalog_entry, integrate_orbit, integrate_tangent, FlowSystem, System,
    };
    use nalgebra::{DMatrix, DVector};

    fn constant_field_system(dynamics: DMatrix<f64>) -> FlowSystem {
        // x' = e_1 on the first coordinate, linear dynamics on the rest;
        // field constant in the flow coordinate so the normal space is fixed.
        let a = dynamics;
        let af = a.clone();
        FlowSystem::new(
            "constant-field",
            3,
            Box::new(move |x: &DVector<f64>| {
                let mut v = &af * x;
                v[0] = 1.0;
                v
            }),
            Box::new(move |_x| {
                let mut j = a.clone();
                j.row_mut(0).fill(0.0);
                j
            }),
            vec![],
        )
    }

    #[test]
    fn constant_field_frames_are_constant() {
        let dyn_m = DMatrix::zeros(3, 3);
        let sys = constant_field_system(dyn_m);
        let orbit = integrate_orbit(&sys, &DVector::from_vec(vec![0.0, 0.2, 0.1]), 1.0, 1e-2).unwrap();
        let frames = build_normal_frames(&orbit).unwrap();
        for f in &frames {
            assert!((&f.frame - &frames[0].frame).abs().max() < 1e-10);
            // Columns orthogonal to X.
            let x = &orbit.field_values[f.point_index] / orbit.field_values[f.point_index].norm();
            assert!((f.frame.transpose() * x).abs().max() < 1e-10);
        }
    }

    #[test]
    fn decoupled_linear_poincare_matrices() {
        // A driven linear cocycle over a straight-line orbit: the field is
        // exactly constant (so the normal frame never rotates) while the
        // variational equation runs diag(0, -1, 2), giving P_t = diag(e^-t, e^2t).
        let sys = FlowSystem::new(
            "synthetic-decoupled",
            3,
            Box::new(|_x: &DVector<f64>| DVector::from_vec(vec![1.0, 0.0, 0.0])),
            Box::new(|_x: &DVector<f64>| {
                let mut a = DMatrix::zeros(3, 3);
                a[(1, 1)] = -1.0;
                a[(2, 2)] = 2.0;
                a
            }),
            vec![],
        );
        let orbit = integrate_orbit(&sys, &DVector::from_vec(vec![0.0, 0.3, 0.1]), 1.0, 1e-3).unwrap();
        let tangent = integrate_tangent(&sys, &orbit).unwrap();
        let pc = linear_poincare_flow(&orbit, &tangent).unwrap();
        let p_end = pc.matrices.last().unwrap();
        // Up to the frame's column order/sign the matrix is diag(e^-1, e^2).
        let mut sv: Vec<f64> = p_end.clone().svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((sv[0] - (-1.0f64).exp()).abs() < 1e-8);
        assert!((sv[1] - 2.0f64.exp()).abs() < 1e-6 * 2.0f64.exp());
        assert!((&pc.matrices[0] - DMatrix::identity(2, 2)).abs().max() < 1e-14);
    }

    #[test]
    fn projection_contracts_tangent_norms() {
        let entry = catalog_entry("saddle-cycle").unwrap();
        let sys = match entry.system {
            System::Flow(f) => f,
            _ => unreachable!(),
        };
        let orbit = integrate_orbit(&sys, &sys.seeds[0].clone(), 2.0, 1e-3).unwrap();
        let tangent = integrate_tangent(&sys, &orbit).unwrap();
        let pc = linear_poincare_flow(&orbit, &tangent).unwrap();
        for i in (0..orbit.len()).step_by(200) {
            for c in 0..2 {
                let v = pc.frames[0].frame.column(c).into_owned();
                let pv = (&pc.matrices[i] * DVector::from_vec(vec![(c == 0) as i32 as f64, (c == 1) as i32 as f64])).norm();
                let dv = (&tangent.fundamental[i] * v).norm();
                assert!(pv <= dv * (1.0 + 1e-10), "projection expanded a vector");
            }
        }
    }

    #[test]
    fn poincare_cocycle_law_in_frames() {
        let entry = catalog_entry("saddle-cycle").unwrap();
        let sys = match entry.system {
            System::Flow(f) => f,
            _ => unreachable!(),
        };
        let orbit = integrate_orbit(&sys, &sys.seeds[0].clone(), 2.0, 1e-3).unwrap();
        let tangent = integrate_tangent(&sys, &orbit).unwrap();
        let pc = linear_poincare_flow(&orbit, &tangent).unwrap();
        // Composing the per-step maps must reproduce the cumulative matrices.
        let n = pc.matrices.len() - 1;
        let mut acc = DMatrix::identity(2, 2);
        for s in &pc.steps {
            acc = s * acc;
        }
        let rel = (&acc - &pc.matrices[n]).norm() / pc.matrices[n].norm();
        assert!(rel < 1e-5, "cocycle law defect {rel}");
    }

    #[test]
    fn inverse_segment_identity_and_composition() {
        let entry = catalog_entry("saddle-cycle").unwrap();
        let sys = match entry.system {
            System::Flow(f) => f,
            _ => unreachable!(),
        };
        let orbit = integrate_orbit(&sys, &sys.seeds[0].clone(), 1.0, 1e-3).unwrap();
        let tangent = integrate_tangent(&sys, &orbit).unwrap();
        let pc = linear_poincare_flow(&orbit, &tangent).unwrap();
        let id = poincare_inverse_segment(&pc, 5, 5).unwrap();
        assert!((id.matrix() - DMatrix::identity(2, 2)).abs().max() < 1e-14);
        let inv = poincare_inverse_segment(&pc, 0, 800).unwrap();
        let mut seg = DMatrix::identity(2, 2);
        for k in 0..800 {
            seg = &pc.steps[k] * seg;
        }
        assert!((inv.matrix() * seg - DMatrix::identity(2, 2)).abs().max() < 1e-8);
    }

    #[test]
    fn frame_continuity_no_sign_flips() {
        let entry = catalog_entry("saddle-cycle").unwrap();
        let sys = match entry.system {
            System::Flow(f) => f,
            _ => unreachable!(),
        };
        let orbit = integrate_orbit(&sys, &sys.seeds[0].clone(), 6.0, 1e-3).unwrap();
        let frames = build_normal_frames(&orbit).unwrap();
        for w in frames.windows(2) {
            for c in 0..2 {
                let cosine = w[0].frame.column(c).dot(&w[1].frame.column(c));
                assert!(cosine > 0.0, "frame vector flipped between steps");
            }
        }
    }
}
