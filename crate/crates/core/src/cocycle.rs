//! Discrete cocycle tracks shared by the verdict layer: per-step matrices
//! along sampled orbits, with norm growth restricted to a bundle accumulated
//! in moving orthonormal frames (QR cocycle) so that long products never mix
//! the scales of different bundles.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{sigma_extremes, Subspace};

/// One sampled orbit: step maps, step durations, and (for tangent-fiber
/// tracks) the unit flow direction at every point.
#[derive(Debug, Clone)]
pub struct Track {
    pub durations: Vec<f64>,
    pub steps: Vec<DMatrix<f64>>,
    pub periodic: bool,
    pub x_dirs: Option<Vec<DVector<f64>>>,
}

impl Track {
    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// Number of distinct sample points (periodic tracks wrap).
    pub fn n_points(&self) -> usize {
        if self.periodic {
            self.steps.len()
        } else {
            self.steps.len() + 1
        }
    }

    pub fn step(&self, i: usize) -> &DMatrix<f64> {
        if self.periodic {
            &self.steps[i % self.steps.len()]
        } else {
            &self.steps[i]
        }
    }

    pub fn duration(&self, i: usize) -> f64 {
        if self.periodic {
            self.durations[i % self.durations.len()]
        } else {
            self.durations[i]
        }
    }

    pub fn point_index(&self, i: usize) -> usize {
        if self.periodic {
            i % self.steps.len()
        } else {
            i
        }
    }

    pub fn x_dir(&self, i: usize) -> Option<&DVector<f64>> {
        let idx = self.point_index(i);
        self.x_dirs.as_ref().map(|d| &d[idx])
    }

    pub fn mean_duration(&self) -> f64 {
        self.durations.iter().sum::<f64>() / self.durations.len() as f64
    }

    /// Plain product of `n` step maps from `start` (short segments only).
    pub fn forward(&self, start: usize, n: usize) -> DMatrix<f64> {
        let d = self.steps[0].nrows();
        let mut acc = DMatrix::identity(d, d);
        for m in 0..n {
            acc = self.step(start + m) * acc;
        }
        acc
    }

    /// Product of step inverses walking backward from `start` over `n` steps
    /// (the map from the fiber at `start` to the fiber `n` steps in the past).
    pub fn backward(&self, start: usize, n: usize) -> Option<DMatrix<f64>> {
        let d = self.steps[0].nrows();
        let mut acc = DMatrix::identity(d, d);
        for m in 1..=n {
            let idx = if self.periodic {
                // start - m mod len
                let len = self.steps.len() as i64;
                ((((start as i64 - m as i64) % len) + len) % len) as usize
            } else {
                start.checked_sub(m)?
            };
            let inv = self.steps[idx].clone().try_inverse()?;
            acc = inv * acc;
        }
        Some(acc)
    }
}

/// A family of tracks sharing one fiber dimension.
pub struct AnalysisCocycle {
    pub fiber_dim: usize,
    pub tracks: Vec<Track>,
}

/// One sample of restricted growth: elapsed time, number of steps, and the
/// log of the largest / smallest singular value of D restricted to the bundle.
#[derive(Debug, Clone, Copy)]
pub struct GrowthSample {
    pub t: f64,
    pub steps: usize,
    pub log_sigma_max: f64,
    pub log_sigma_min: f64,
}

/// Growth of the cocycle restricted to a declared invariant bundle family,
/// sampled every `sample_stride` steps up to `n_steps`, starting from `start`.
///
/// `bundles` holds one subspace per track point (a single entry means the
/// family is constant). Each step map is expressed in the orthonormal bases
/// of the declared bundles at its two endpoints, which keeps the restricted
/// product free of both cross-bundle conditioning and the drift a pushed
/// bundle accumulates from rounding in its initial direction. The smallest
/// singular value comes from a separately accumulated inverse product, so it
/// stays accurate when the bundle's internal rates spread widely.
pub fn restricted_growth(
    track: &Track,
    start: usize,
    bundles: &[Subspace],
    n_steps: usize,
    sample_stride: usize,
) -> Vec<GrowthSample> {
    assert!(!bundles.is_empty());
    let at = |i: usize| -> &Subspace {
        if bundles.len() == 1 {
            &bundles[0]
        } else {
            &bundles[track.point_index(i)]
        }
    };
    let k = bundles[0].dim();
    let mut acc = DMatrix::identity(k, k);
    let mut acc_inv = DMatrix::identity(k, k);
    let mut log_acc = 0.0f64;
    let mut log_inv = 0.0f64;
    let mut t = 0.0f64;
    let mut out = vec![GrowthSample { t: 0.0, steps: 0, log_sigma_max: 0.0, log_sigma_min: 0.0 }];
    for m in 0..n_steps {
        let i = start + m;
        let step = at(i + 1).basis().transpose() * track.step(i) * at(i).basis();
        let step_inv = step
            .clone()
            .try_inverse()
            .expect("restricted step map is invertible");
        acc = &step * acc;
        acc_inv = acc_inv * step_inv;
        t += track.duration(i);
        for (mat, log) in [(&mut acc, &mut log_acc), (&mut acc_inv, &mut log_inv)] {
            let amax = mat.abs().max();
            if amax > 1e120 || (amax < 1e-120 && amax > 0.0) {
                *mat /= amax;
                *log += amax.ln();
            }
        }
        if (m + 1) % sample_stride == 0 || m + 1 == n_steps {
            let (_, hi) = sigma_extremes(&acc);
            let (_, hi_inv) = sigma_extremes(&acc_inv);
            out.push(GrowthSample {
                t,
                steps: m + 1,
                log_sigma_max: hi.ln() + log_acc,
                log_sigma_min: -(hi_inv.ln() + log_inv),
            });
        }
    }
    out
}

/// Applies a constant change of coordinates S (a metric factor) to a track:
/// step maps become S M S^{-1}, flow directions are mapped and renormalized.
pub fn transform_track(track: &Track, s: &DMatrix<f64>) -> Track {
    let s_inv = s.clone().try_inverse().expect("metric factor is invertible");
    Track {
        durations: track.durations.clone(),
        steps: track.steps.iter().map(|m| s * m * &s_inv).collect(),
        periodic: track.periodic,
        x_dirs: track.x_dirs.as_ref().map(|dirs| {
            dirs.iter()
                .map(|v| {
                    let w = s * v;
                    let n = w.norm();
                    w / n
                })
                .collect()
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_track(entries: &[f64], n: usize) -> Track {
        let d = DMatrix::from_diagonal(&DVector::from_vec(entries.to_vec()));
        Track {
            durations: vec![1.0; n],
            steps: vec![d; n],
            periodic: true,
            x_dirs: None,
        }
    }

    #[test]
    fn restricted_growth_diagonal_rates() {
        let track = diag_track(&[2.0, 0.5], 1);
        let e = Subspace::coordinate(2, &[0]);
        let g = restricted_growth(&track, 0, std::slice::from_ref(&e), 10, 1);
        for s in &g {
            let expected = s.steps as f64 * 2.0f64.ln();
            assert!((s.log_sigma_max - expected).abs() < 1e-12);
            assert!((s.log_sigma_min - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn restricted_growth_handles_huge_spread() {
        // Spread 8^n between the two directions must not pollute either rate.
        let track = diag_track(&[4.0, 0.5], 1);
        let full = Subspace::coordinate(2, &[0, 1]);
        let g = restricted_growth(&track, 0, std::slice::from_ref(&full), 200, 50);
        let last = g.last().unwrap();
        assert!((last.log_sigma_max - 200.0 * 4.0f64.ln()).abs() < 1e-9);
        assert!((last.log_sigma_min - 200.0 * 0.5f64.ln()).abs() < 1e-9);
    }

    proptest::proptest! {
        #[test]
        fn restricted_growth_matches_explicit_product(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = rng.gen_range(2..=4usize);
            let steps: Vec<DMatrix<f64>> = (0..5)
                .map(|_| loop {
                    let m = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0f64..1.0));
                    let (lo, hi) = crate::linalg::sigma_extremes(&m);
                    if lo > 1e-2 * hi {
                        break m;
                    }
                })
                .collect();
            let mut product = DMatrix::identity(d, d);
            for s in &steps {
                product = s * &product;
            }
            let track = Track { durations: vec![1.0; 5], steps, periodic: false, x_dirs: None };
            let full = Subspace::coordinate(d, &(0..d).collect::<Vec<_>>());
            let g = restricted_growth(&track, 0, std::slice::from_ref(&full), 5, 5);
            let last = g.last().unwrap();
            let (lo, hi) = crate::linalg::sigma_extremes(&product);
            proptest::prop_assert!((last.log_sigma_max - hi.ln()).abs() < 1e-9);
            proptest::prop_assert!((last.log_sigma_min - lo.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn backward_inverts_forward() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let track = Track {
            durations: vec![1.0; 4],
            steps: vec![m; 4],
            periodic: true,
            x_dirs: None,
        };
        let fwd = track.forward(0, 3);
        let bwd = track.backward(3, 3).unwrap();
        assert!((bwd * fwd - DMatrix::identity(2, 2)).abs().max() < 1e-10);
    }
}
