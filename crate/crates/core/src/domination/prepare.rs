//! Turns a system into analysis cocycles: tangent-fiber tracks with flow
//! directions, normal-fiber tracks in transported frames, and the per-point
//! frames linking the two.

use nalgebra::{DMatrix, DVector};

use super::{DominationConfig, DominationError, Fiber, PointBundles, Splitting, SplittingKind};
use crate::cocycle::{AnalysisCocycle, Track};
use crate::linalg::Subspace;
use crate::poincare::linear_poincare_flow;
use crate::systems::{
    flow_step, integrate_orbit, integrate_tangent, AnalyticSplitting, FlowSystem,
    SuspensionCocycle, System, SystemsError,
};

/// Target duration of one compounded analysis step along a flow orbit.
const CHUNK_TIME: f64 = 0.25;
/// Maximum time scanned for a periodic closure of a flow orbit.
const PERIOD_SEARCH_TIME: f64 = 50.0;
const CLOSURE_TOL: f64 = 1e-6;

/// Everything the verdict layer needs about one system: tangent and normal
/// cocycles over the same sample points, the frames between them, and the
/// ambient sample points (empty for suspensions).
pub struct AnalysisBundle {
    pub system_name: String,
    pub tangent: AnalysisCocycle,
    pub normal: AnalysisCocycle,
    /// Per track, per point: n x (n-1) orthonormal normal frame.
    pub frames: Vec<Vec<DMatrix<f64>>>,
    /// Per track, per point: ambient base point (flows only).
    pub base_points: Vec<Vec<DVector<f64>>>,
    /// Extraction window in analysis steps.
    pub n_window: usize,
    pub dt: f64,
}

fn prepare_suspension(cos: &SuspensionCocycle, cfg: &DominationConfig) -> AnalysisBundle {
    let d = cos.fiber_dim;
    let n = d + 1;
    let mut tangent = Vec::new();
    let mut normal = Vec::new();
    let mut frames = Vec::new();
    let mut base_points = Vec::new();
    // Flow coordinate last; the normal frame is the fiber-coordinate embedding.
    let mut x = DVector::zeros(n);
    x[d] = 1.0;
    let mut frame = DMatrix::zeros(n, d);
    for i in 0..d {
        frame[(i, i)] = 1.0;
    }
    for orbit in &cos.orbits {
        let tangent_steps: Vec<DMatrix<f64>> = orbit
            .matrices
            .iter()
            .map(|m| {
                let mut full = DMatrix::identity(n, n);
                full.view_mut((0, 0), (d, d)).copy_from(m);
                full
            })
            .collect();
        tangent.push(Track {
            durations: orbit.roof.clone(),
            steps: tangent_steps,
            periodic: true,
            x_dirs: Some(vec![x.clone(); orbit.period]),
        });
        normal.push(Track {
            durations: orbit.roof.clone(),
            steps: orbit.matrices.clone(),
            periodic: true,
            x_dirs: None,
        });
        frames.push(vec![frame.clone(); orbit.period]);
        base_points.push(Vec::new());
    }
    AnalysisBundle {
        system_name: cos.name.clone(),
        tangent: AnalysisCocycle { fiber_dim: n, tracks: tangent },
        normal: AnalysisCocycle { fiber_dim: d, tracks: normal },
        frames,
        base_points,
        n_window: cfg.n_window.unwrap_or(20),
        dt: cfg.dt,
    }
}

/// Smallest positive time at which the orbit returns to its seed.
///
/// A grid scan can only come within O(dt) of the seed (the near-miss is
/// tangential), so the first local minimum of the distance is refined with
/// Newton iteration on the section condition (x(t) - seed) . X(seed) = 0
/// before the closure tolerance is applied.
fn find_period(sys: &FlowSystem, seed: &DVector<f64>, dt: f64) -> Result<f64, DominationError> {
    let not_periodic = || {
        DominationError::Systems(SystemsError::Definition(format!(
            "orbit from seed does not close within {PERIOD_SEARCH_TIME} time units; only \
             periodic flow orbits are analyzable"
        )))
    };
    let orbit = integrate_orbit(sys, seed, PERIOD_SEARCH_TIME, dt)?;
    let dist: Vec<f64> = orbit.points.iter().map(|p| (p - seed).norm()).collect();
    let mut hit = None;
    for k in 1..dist.len() - 1 {
        if orbit.times[k] > 0.1
            && dist[k] < 0.05
            && dist[k] <= dist[k - 1]
            && dist[k] <= dist[k + 1]
        {
            hit = Some(k);
            break;
        }
    }
    let k = hit.ok_or_else(not_periodic)?;
    let x0_dir = sys.field(seed);
    let mut t = orbit.times[k];
    let mut x = orbit.points[k].clone();
    for _ in 0..12 {
        let h = (&x - seed).dot(&x0_dir);
        let denom = sys.field(&x).dot(&x0_dir);
        if denom.abs() < 1e-12 {
            break;
        }
        let delta = -h / denom;
        x = flow_step(sys, &x, delta);
        t += delta;
        if delta.abs() < 1e-14 {
            break;
        }
    }
    if (&x - seed).norm() < CLOSURE_TOL {
        Ok(t)
    } else {
        Err(not_periodic())
    }
}

fn chunk_ranges(n_fine: usize, stride: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < n_fine {
        let end = (start + stride).min(n_fine);
        // Absorb a short trailing remainder into the previous chunk.
        if n_fine - end < stride / 4 {
            out.push((start, n_fine));
            return out;
        }
        out.push((start, end));
        start = end;
    }
    out
}

fn prepare_flow(sys: &FlowSystem, cfg: &DominationConfig) -> Result<AnalysisBundle, DominationError> {
    if sys.seeds.is_empty() {
        return Err(DominationError::Systems(SystemsError::Definition(
            "flow system has no seed points".into(),
        )));
    }
    let n = sys.dim;
    let mut tangent_tracks = Vec::new();
    let mut normal_tracks = Vec::new();
    let mut frames_all = Vec::new();
    let mut base_points_all = Vec::new();
    let mut chunks_per_period = 0usize;
    for seed in &sys.seeds {
        let period = find_period(sys, seed, cfg.dt)?;
        let orbit = integrate_orbit(sys, seed, period, cfg.dt)?;
        let tc = integrate_tangent(sys, &orbit)?;
        let pc = linear_poincare_flow(&orbit, &tc)?;
        let n_fine = tc.steps.len();
        let stride = ((CHUNK_TIME / cfg.dt).round() as usize).max(1);
        let ranges = chunk_ranges(n_fine, stride);
        chunks_per_period = chunks_per_period.max(ranges.len());

        // The transported frame returns to a (possibly rotated) basis of the
        // starting normal space; W re-expresses it in the initial frame so
        // the normal track closes up.
        let wrap = pc.frames[0].frame.transpose() * &pc.frames[n_fine].frame;

        let mut tangent_steps = Vec::new();
        let mut normal_steps = Vec::new();
        let mut durations = Vec::new();
        let mut x_dirs = Vec::new();
        let mut frames = Vec::new();
        let mut base_points = Vec::new();
        for (ci, &(a, b)) in ranges.iter().enumerate() {
            let mut ts = DMatrix::identity(n, n);
            let mut ns = DMatrix::identity(n - 1, n - 1);
            for k in a..b {
                ts = &tc.steps[k] * ts;
                ns = &pc.steps[k] * ns;
            }
            if ci + 1 == ranges.len() {
                ns = &wrap * ns;
            }
            tangent_steps.push(ts);
            normal_steps.push(ns);
            durations.push(orbit.times[b] - orbit.times[a]);
            let fv = &orbit.field_values[a];
            x_dirs.push(fv / fv.norm());
            frames.push(pc.frames[a].frame.clone());
            base_points.push(orbit.points[a].clone());
        }
        tangent_tracks.push(Track {
            durations: durations.clone(),
            steps: tangent_steps,
            periodic: true,
            x_dirs: Some(x_dirs),
        });
        normal_tracks.push(Track {
            durations,
            steps: normal_steps,
            periodic: true,
            x_dirs: None,
        });
        frames_all.push(frames);
        base_points_all.push(base_points);
    }
    Ok(AnalysisBundle {
        system_name: sys.name.clone(),
        tangent: AnalysisCocycle { fiber_dim: n, tracks: tangent_tracks },
        normal: AnalysisCocycle { fiber_dim: n - 1, tracks: normal_tracks },
        frames: frames_all,
        base_points: base_points_all,
        n_window: cfg.n_window.unwrap_or(chunks_per_period),
        dt: cfg.dt,
    })
}

/// Builds the analysis cocycles for either system kind.
pub fn prepare(system: &System, cfg: &DominationConfig) -> Result<AnalysisBundle, DominationError> {
    match system {
        System::Suspension(cos) => Ok(prepare_suspension(cos, cfg)),
        System::Flow(sys) => prepare_flow(sys, cfg),
    }
}

/// Materializes a declared analytic splitting as a three-bundle tangent
/// splitting over the bundle's sample points.
pub fn analytic_splitting(
    analytic: &AnalyticSplitting,
    bundle: &AnalysisBundle,
) -> Result<Splitting, DominationError> {
    let n = bundle.tangent.fiber_dim;
    let mut per_track = Vec::new();
    match analytic {
        AnalyticSplitting::SuspensionConst { per_orbit } => {
            if per_orbit.len() != bundle.tangent.tracks.len() {
                return Err(DominationError::Shape(
                    "analytic splitting orbit count mismatch".into(),
                ));
            }
            for ((e_m, f_m), track) in per_orbit.iter().zip(&bundle.tangent.tracks) {
                let p = PointBundles {
                    e: Subspace::from_cols(e_m)?,
                    x: Some(Subspace::coordinate(n, &[n - 1])),
                    f: Subspace::from_cols(f_m)?,
                };
                per_track.push(vec![p; track.n_points()]);
            }
        }
        AnalyticSplitting::FlowFn(func) => {
            for (ti, track) in bundle.tangent.tracks.iter().enumerate() {
                let mut pts = Vec::new();
                for i in 0..track.n_points() {
                    let base = &bundle.base_points[ti][i];
                    let (e_m, f_m) = func(base);
                    let x = track
                        .x_dir(i)
                        .ok_or_else(|| DominationError::Shape("missing flow direction".into()))?;
                    pts.push(PointBundles {
                        e: Subspace::from_cols(&e_m)?,
                        x: Some(Subspace::line(x)?),
                        f: Subspace::from_cols(&f_m)?,
                    });
                }
                per_track.push(pts);
            }
        }
    }
    Ok(Splitting {
        kind: SplittingKind::ThreeBundleWithFlow,
        fiber: Fiber::Tangent,
        bundles: per_track,
    })
}
