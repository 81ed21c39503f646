//! The verdict layer: domination quotients and rate fitting, the dominated /
//! partially dominated / hyperbolic / partially hyperbolic tests, splitting
//! extraction and reconstruction, and the end-to-end equivalence pipeline.

mod extract;
mod prepare;
mod report;
mod verify;

pub use extract::{
    extract_poincare_splitting, flow_direction_location, reconstruct_flow_splitting,
    FlowLocation,
};
pub use prepare::{analytic_splitting, prepare, AnalysisBundle};
pub use report::{fit_lines, plotdata_lines, JsonReport};
pub use verify::{
    coarsen, project_to_normal, verify_contraction_implies_domination, verify_equivalence,
    CoarsenSide, ContractionImpliesDomination, EquivalenceReport,
};

use serde::Serialize;
use thiserror::Error;

use crate::cocycle::{restricted_growth, AnalysisCocycle};
use crate::cones::ConesError;
use crate::linalg::{sigma_max, LinalgError, Subspace};
use crate::poincare::PoincareError;
use crate::systems::SystemsError;

#[derive(Debug, Error)]
pub enum DominationError {
    #[error("invalid quotient series: {0}")]
    InvalidSeries(String),
    #[error("middle bundle is not the flow direction (angle {angle:.3e})")]
    NotFlowCentered { angle: f64 },
    #[error("no singular-value gap >= threshold (best ratio {best_ratio:.3})")]
    NoGap { best_ratio: f64 },
    #[error("flow direction transverse to both bundles (angles {angle_e:.3e}, {angle_f:.3e})")]
    FlowNotResolved { angle_e: f64, angle_f: f64 },
    #[error("reconstruction failed: {0}")]
    ReconstructionFailed(String),
    #[error("splitting has wrong kind (expected {expected})")]
    WrongKind { expected: &'static str },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Cones(#[from] ConesError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Systems(#[from] SystemsError),
    #[error(transparent)]
    Poincare(#[from] PoincareError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fiber {
    Tangent,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplittingKind {
    TwoBundle,
    ThreeBundleWithFlow,
}

/// The bundles at one sampled orbit point. `x` is present exactly for
/// three-bundle splittings and holds the flow line.
#[derive(Debug, Clone)]
pub struct PointBundles {
    pub e: Subspace,
    pub x: Option<Subspace>,
    pub f: Subspace,
}

/// An invariant splitting sampled along the analysis tracks, indexed
/// [track][point].
#[derive(Debug, Clone)]
pub struct Splitting {
    pub kind: SplittingKind,
    pub fiber: Fiber,
    pub bundles: Vec<Vec<PointBundles>>,
}

impl Splitting {
    pub fn dims(&self) -> Option<(usize, usize)> {
        let first = self.bundles.iter().flatten().next()?;
        Some((first.e.dim(), first.f.dim()))
    }

    /// True when every point carries the same bundle dimensions.
    pub fn dims_constant(&self) -> bool {
        match self.dims() {
            None => true,
            Some((de, df)) => self
                .bundles
                .iter()
                .flatten()
                .all(|p| p.e.dim() == de && p.f.dim() == df),
        }
    }

    fn check_shape(&self, cocycle: &AnalysisCocycle) -> Result<(), DominationError> {
        if self.bundles.len() != cocycle.tracks.len() {
            return Err(DominationError::Shape(format!(
                "{} bundle tracks vs {} cocycle tracks",
                self.bundles.len(),
                cocycle.tracks.len()
            )));
        }
        for (ti, (pts, track)) in self.bundles.iter().zip(&cocycle.tracks).enumerate() {
            if pts.len() != track.n_points() {
                return Err(DominationError::Shape(format!(
                    "track {ti}: {} bundle points vs {} track points",
                    pts.len(),
                    track.n_points()
                )));
            }
        }
        if !self.dims_constant() {
            return Err(DominationError::Shape("bundle dimensions vary along orbits".into()));
        }
        Ok(())
    }

    /// Worst relative one-step invariance defect over all declared bundles:
    /// |(I - P_im) D B| / |D B| per step, P_im the projector onto the bundle
    /// at the image point.
    pub fn invariance_defect(&self, cocycle: &AnalysisCocycle) -> Result<f64, DominationError> {
        self.check_shape(cocycle)?;
        let mut worst: f64 = 0.0;
        for (pts, track) in self.bundles.iter().zip(&cocycle.tracks) {
            for i in 0..track.n_steps() {
                if !track.periodic && i + 1 >= pts.len() {
                    break;
                }
                let here = &pts[i];
                let there = &pts[track.point_index(i + 1)];
                let select: Vec<(&Subspace, &Subspace)> = match (&here.x, &there.x) {
                    (Some(hx), Some(tx)) => {
                        vec![(&here.e, &there.e), (hx, tx), (&here.f, &there.f)]
                    }
                    _ => vec![(&here.e, &there.e), (&here.f, &there.f)],
                };
                for (b_here, b_there) in select {
                    let pushed = track.step(i) * b_here.basis();
                    let norm = sigma_max(&pushed);
                    if norm == 0.0 {
                        continue;
                    }
                    let residual = &pushed - b_there.projector() * &pushed;
                    worst = worst.max(sigma_max(&residual) / norm);
                }
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Dominated,
    NotDominated,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Dominated => "dominated",
            Verdict::NotDominated => "not_dominated",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ToleranceProfile {
    pub lambda_min: f64,
    pub r2_min: f64,
}

/// Quotient series, fitted Eq.-(3)-style constants, and the verdict.
#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    pub quotient_series: Vec<(f64, f64)>,
    pub fitted_k: f64,
    pub fitted_lambda: f64,
    pub r_squared: f64,
    pub verdict: Verdict,
    pub horizon: f64,
    pub tolerance_profile: ToleranceProfile,
    pub max_invariance_defect: f64,
}

#[derive(Debug, Clone)]
pub struct DominationConfig {
    pub lambda_min: f64,
    pub r2_min: f64,
    pub gap_min: f64,
    pub aperture: f64,
    pub horizon: f64,
    pub dt: f64,
    pub neutral_band: f64,
    pub n_window: Option<usize>,
    pub dim_hint: Option<usize>,
}

impl Default for DominationConfig {
    fn default() -> Self {
        DominationConfig {
            lambda_min: 0.05,
            r2_min: 0.95,
            gap_min: 1.5,
            aperture: 1.0,
            horizon: 40.0,
            dt: 1e-3,
            neutral_band: 0.01,
            n_window: None,
            dim_hint: None,
        }
    }
}

impl DominationConfig {
    pub fn tolerance_profile(&self) -> ToleranceProfile {
        ToleranceProfile { lambda_min: self.lambda_min, r2_min: self.r2_min }
    }
}

/// q(t) = |D_t restricted to E| * |D_{-t} restricted to F at the image|, the
/// second factor computed through the forward cocycle by Eq. (2'):
/// |D_{-t} at D(F)| = 1 / sigma_min(D_t restricted to F).
pub fn domination_quotient(
    cocycle: &AnalysisCocycle,
    track: usize,
    point: usize,
    e: &Subspace,
    f: &Subspace,
    n_steps: usize,
) -> Result<f64, DominationError> {
    let tr = &cocycle.tracks[track];
    let stride = n_steps.max(1);
    let ge = restricted_growth(tr, point, std::slice::from_ref(e), n_steps, stride);
    let gf = restricted_growth(tr, point, std::slice::from_ref(f), n_steps, stride);
    let le = ge.last().ok_or_else(|| DominationError::InvalidSeries("empty growth".into()))?;
    let lf = gf.last().unwrap();
    Ok((le.log_sigma_max - lf.log_sigma_min).exp())
}

/// Applies a constant change of coordinates S to every bundle of a splitting,
/// the companion to `cocycle::transform_track` for metric-robustness checks.
pub fn transform_splitting(
    splitting: &Splitting,
    factor: &nalgebra::DMatrix<f64>,
) -> Result<Splitting, DominationError> {
    let map = |b: &Subspace| -> Result<Subspace, DominationError> {
        Ok(Subspace::from_cols(&(factor * b.basis()))?)
    };
    let mut bundles = Vec::with_capacity(splitting.bundles.len());
    for pts in &splitting.bundles {
        let mut out = Vec::with_capacity(pts.len());
        for p in pts {
            out.push(PointBundles {
                e: map(&p.e)?,
                x: p.x.as_ref().map(&map).transpose()?,
                f: map(&p.f)?,
            });
        }
        bundles.push(out);
    }
    Ok(Splitting { kind: splitting.kind, fiber: splitting.fiber, bundles })
}

/// Least-squares fit of ln q = ln K - lambda t; returns (K, lambda, r^2).
pub fn fit_rate(series: &[(f64, f64)]) -> Result<(f64, f64, f64), DominationError> {
    if series.len() < 8 {
        return Err(DominationError::InvalidSeries(format!(
            "{} samples, need at least 8",
            series.len()
        )));
    }
    if let Some((t, q)) = series.iter().find(|(_, q)| !(*q > 0.0)) {
        return Err(DominationError::InvalidSeries(format!("nonpositive q = {q} at t = {t}")));
    }
    let logs: Vec<(f64, f64)> = series.iter().map(|&(t, q)| (t, q.ln())).collect();
    Ok(fit_log(&logs))
}

/// The same fit on an already-logarithmic series (t, ln q).
pub(crate) fn fit_log(series: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = series.len() as f64;
    let mean_t = series.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_y = series.iter().map(|s| s.1).sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    let mut syy = 0.0;
    for &(t, y) in series {
        stt += (t - mean_t) * (t - mean_t);
        sty += (t - mean_t) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let intercept = mean_y - slope * mean_t;
    let mut ss_res = 0.0;
    for &(t, y) in series {
        let r = y - (intercept + slope * t);
        ss_res += r * r;
    }
    // A perfectly flat series is a perfect fit of a flat model.
    let r2 = if syy <= 1e-16 * n { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    ((intercept).exp(), -slope, r2)
}

fn issue_verdict(log_series: &[(f64, f64)], lambda: f64, r2: f64, cfg: &DominationConfig) -> Verdict {
    let first = log_series.first().map(|s| s.1).unwrap_or(0.0);
    let last = log_series.last().map(|s| s.1).unwrap_or(0.0);
    if lambda >= cfg.lambda_min && r2 >= cfg.r2_min && last < first {
        return Verdict::Dominated;
    }
    let half = log_series.len() / 2;
    let tail_sup = log_series[half..]
        .iter()
        .map(|s| s.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if tail_sup >= first + 0.5f64.ln() || lambda <= 0.0 {
        return Verdict::NotDominated;
    }
    Verdict::Inconclusive
}

fn series_grid(cocycle: &AnalysisCocycle, horizon: f64) -> (usize, usize) {
    let mean = cocycle.tracks[0].mean_duration();
    let n_steps = ((horizon / mean).round() as usize).max(8);
    let stride = (n_steps / 40).max(1);
    (n_steps, stride)
}

/// Builds the per-t-supremum log-quotient series over all declared base
/// points of a splitting, for the pair of bundles chosen by `pick`.
fn sup_log_quotients(
    splitting: &Splitting,
    cocycle: &AnalysisCocycle,
    horizon: f64,
    pick: impl Fn(&PointBundles) -> (&Subspace, &Subspace),
) -> Result<Vec<(f64, f64)>, DominationError> {
    let (n_steps, stride) = series_grid(cocycle, horizon);
    let mut sup: Vec<(f64, f64)> = Vec::new();
    for (pts, track) in splitting.bundles.iter().zip(&cocycle.tracks) {
        let es: Vec<Subspace> = pts.iter().map(|p| pick(p).0.clone()).collect();
        let fs: Vec<Subspace> = pts.iter().map(|p| pick(p).1.clone()).collect();
        for i in 0..pts.len() {
            if !track.periodic && i + n_steps >= track.n_points() {
                continue;
            }
            let ge = restricted_growth(track, i, &es, n_steps, stride);
            let gf = restricted_growth(track, i, &fs, n_steps, stride);
            let series: Vec<(f64, f64)> = ge
                .iter()
                .zip(&gf)
                .map(|(a, b)| (a.t, a.log_sigma_max - b.log_sigma_min))
                .collect();
            if sup.is_empty() {
                sup = series;
            } else {
                if sup.len() != series.len() {
                    return Err(DominationError::Shape(
                        "quotient series lengths differ across base points".into(),
                    ));
                }
                for (s, v) in sup.iter_mut().zip(series) {
                    s.1 = s.1.max(v.1);
                    s.0 = s.0.max(v.0);
                }
            }
        }
    }
    if sup.len() < 8 {
        return Err(DominationError::InvalidSeries(format!(
            "{} quotient samples, need at least 8",
            sup.len()
        )));
    }
    Ok(sup)
}

fn report_from_log_series(
    log_series: Vec<(f64, f64)>,
    horizon: f64,
    defect: f64,
    cfg: &DominationConfig,
) -> DominationReport {
    let (k, lambda, r2) = fit_log(&log_series);
    let verdict = issue_verdict(&log_series, lambda, r2, cfg);
    DominationReport {
        quotient_series: log_series.iter().map(|&(t, l)| (t, l.exp())).collect(),
        fitted_k: k,
        fitted_lambda: lambda,
        r_squared: r2,
        verdict,
        horizon,
        tolerance_profile: cfg.tolerance_profile(),
        max_invariance_defect: defect,
    }
}

/// Eq.-(3) test of a two-bundle splitting, with the per-t supremum taken over
/// every declared base point.
pub fn test_dominated(
    splitting: &Splitting,
    cocycle: &AnalysisCocycle,
    horizon: f64,
    cfg: &DominationConfig,
) -> Result<DominationReport, DominationError> {
    if splitting.kind != SplittingKind::TwoBundle {
        return Err(DominationError::WrongKind { expected: "two_bundle" });
    }
    let defect = splitting.invariance_defect(cocycle)?;
    let sup = sup_log_quotients(splitting, cocycle, horizon, |p| (&p.e, &p.f))?;
    Ok(report_from_log_series(sup, horizon, defect, cfg))
}

/// Eq.-(4) test of a three-bundle splitting: the quotient runs on the outer
/// pair only, after checking the middle bundle is the flow line everywhere.
pub fn test_partially_dominated(
    splitting: &Splitting,
    cocycle: &AnalysisCocycle,
    horizon: f64,
    cfg: &DominationConfig,
) -> Result<DominationReport, DominationError> {
    if splitting.kind != SplittingKind::ThreeBundleWithFlow {
        return Err(DominationError::WrongKind { expected: "three_bundle_with_flow" });
    }
    splitting.check_shape(cocycle)?;
    for (pts, track) in splitting.bundles.iter().zip(&cocycle.tracks) {
        for (i, p) in pts.iter().enumerate() {
            let mid = p.x.as_ref().ok_or(DominationError::WrongKind {
                expected: "three_bundle_with_flow (middle bundle present)",
            })?;
            let x = track.x_dir(i).ok_or_else(|| {
                DominationError::Shape("track has no flow directions".into())
            })?;
            let angle = mid.angle_to_vector(x);
            if angle > 1e-8 {
                return Err(DominationError::NotFlowCentered { angle });
            }
        }
    }
    let defect = splitting.invariance_defect(cocycle)?;
    let sup = sup_log_quotients(splitting, cocycle, horizon, |p| (&p.e, &p.f))?;
    Ok(report_from_log_series(sup, horizon, defect, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionVerdict {
    Contracting,
    Expanding,
    Neutral,
    Indefinite,
}

/// Uniform-growth classification of a single bundle: slope of the per-t sup of
/// ln|D_t restricted| (contraction witness) and of the per-t inf of the
/// minimal restricted norm (expansion witness).
#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub verdict: ContractionVerdict,
    /// Positive rate of the certified behavior (0 for neutral/indefinite).
    pub lambda: f64,
    pub rate_sup: f64,
    pub rate_inf: f64,
    pub r2_sup: f64,
    pub r2_inf: f64,
}

/// Classifies one bundle of a splitting (`pick` selects it) as uniformly
/// contracting, uniformly expanding, neutral, or indefinite.
pub fn test_uniform_contraction(
    splitting: &Splitting,
    cocycle: &AnalysisCocycle,
    horizon: f64,
    cfg: &DominationConfig,
    pick: impl Fn(&PointBundles) -> &Subspace,
) -> Result<ContractionReport, DominationError> {
    splitting.check_shape(cocycle)?;
    let (n_steps, stride) = series_grid(cocycle, horizon);
    let mut sup_max: Vec<(f64, f64)> = Vec::new();
    let mut inf_min: Vec<(f64, f64)> = Vec::new();
    for (pts, track) in splitting.bundles.iter().zip(&cocycle.tracks) {
        let family: Vec<Subspace> = pts.iter().map(|p| pick(p).clone()).collect();
        for i in 0..pts.len() {
            if !track.periodic && i + n_steps >= track.n_points() {
                continue;
            }
            let g = restricted_growth(track, i, &family, n_steps, stride);
            if sup_max.is_empty() {
                sup_max = g.iter().map(|s| (s.t, s.log_sigma_max)).collect();
                inf_min = g.iter().map(|s| (s.t, s.log_sigma_min)).collect();
            } else {
                for ((sm, im), s) in sup_max.iter_mut().zip(inf_min.iter_mut()).zip(&g) {
                    sm.1 = sm.1.max(s.log_sigma_max);
                    im.1 = im.1.min(s.log_sigma_min);
                }
            }
        }
    }
    if sup_max.len() < 8 {
        return Err(DominationError::InvalidSeries("too few growth samples".into()));
    }
    let (_, lam_sup, r2_sup) = fit_log(&sup_max);
    let (_, lam_inf, r2_inf) = fit_log(&inf_min);
    // fit_log returns lambda = -slope; rates here are slopes of ln norm.
    let rate_sup = -lam_sup;
    let rate_inf = -lam_inf;
    let decayed = sup_max.last().unwrap().1 < sup_max.first().unwrap().1;
    let grew = inf_min.last().unwrap().1 > inf_min.first().unwrap().1;
    let (verdict, lambda) = if rate_sup <= -cfg.lambda_min && r2_sup >= cfg.r2_min && decayed {
        (ContractionVerdict::Contracting, -rate_sup)
    } else if rate_inf >= cfg.lambda_min && r2_inf >= cfg.r2_min && grew {
        (ContractionVerdict::Expanding, rate_inf)
    } else if rate_sup.abs() <= cfg.neutral_band && rate_inf.abs() <= cfg.neutral_band {
        (ContractionVerdict::Neutral, 0.0)
    } else {
        (ContractionVerdict::Indefinite, 0.0)
    };
    Ok(ContractionReport { verdict, lambda, rate_sup, rate_inf, r2_sup, r2_inf })
}

#[derive(Debug, Clone, Serialize)]
pub struct HyperbolicityReport {
    pub domination: DominationReport,
    pub e_bundle: ContractionReport,
    pub f_bundle: ContractionReport,
    pub hyperbolic: bool,
    pub partially_hyperbolic: bool,
}

/// Section-1 composite verdicts. A three-bundle splitting is hyperbolic when
/// the outer pair is dominated, E contracts, and F expands; a two-bundle
/// splitting (the LPF case) when it is dominated with the same uniformity.
/// Partial hyperbolicity asks for domination plus uniformity of one side.
pub fn test_hyperbolic(
    splitting: &Splitting,
    cocycle: &AnalysisCocycle,
    horizon: f64,
    cfg: &DominationConfig,
) -> Result<HyperbolicityReport, DominationError> {
    let domination = match splitting.kind {
        SplittingKind::TwoBundle => test_dominated(splitting, cocycle, horizon, cfg)?,
        SplittingKind::ThreeBundleWithFlow => {
            test_partially_dominated(splitting, cocycle, horizon, cfg)?
        }
    };
    let e_bundle = test_uniform_contraction(splitting, cocycle, horizon, cfg, |p| &p.e)?;
    let f_bundle = test_uniform_contraction(splitting, cocycle, horizon, cfg, |p| &p.f)?;
    let dominated = domination.verdict == Verdict::Dominated;
    let hyperbolic = dominated
        && e_bundle.verdict == ContractionVerdict::Contracting
        && f_bundle.verdict == ContractionVerdict::Expanding;
    let partially_hyperbolic = dominated
        && (e_bundle.verdict == ContractionVerdict::Contracting
            || f_bundle.verdict == ContractionVerdict::Expanding);
    Ok(HyperbolicityReport { domination, e_bundle, f_bundle, hyperbolic, partially_hyperbolic })
}

/// Partial-hyperbolicity verdict alone (domination plus one uniform side).
pub fn test_partially_hyperbolic(
    splitting: &Splitting,
    cocycle: &AnalysisCocycle,
    horizon: f64,
    cfg: &DominationConfig,
) -> Result<HyperbolicityReport, DominationError> {
    test_hyperbolic(splitting, cocycle, horizon, cfg)
}
