//! Cone fields and their expansion data: standard cones with a core, a
//! complement, and an aperture; minimal expansion and co-expansion; the
//! domination coefficient; the strong-domination search with an explicit
//! cone-invariance certificate; and cone iteration to the limit subspace.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cocycle::{AnalysisCocycle, Track};
use crate::linalg::{min_principal_angle, svd_sorted, LinalgError, Subspace};

/// Grid resolution per sphere dimension for the deterministic inf search.
const SPHERE_GRID: usize = 64;
/// Relative accuracy target of the refined inf.
const REFINE_TOL: f64 = 1e-4;
/// Required aperture margin for a cone-invariance certificate.
pub const INVARIANCE_MARGIN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ConesError {
    #[error("cone field does not have constant core dimension")]
    ConeFieldShape,
    #[error("cone iteration did not converge (last angle {angle:.3e})")]
    NotConverged { angle: f64 },
    #[error("no cone declared at track {track}, point {index}")]
    MissingImageCone { track: usize, index: usize },
    #[error("track walks out of range at index {index}")]
    OutOfRange { index: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Membership is |v_F| <= aperture * |v_E| in the oblique (core, complement)
/// decomposition; aperture 1 is the standard unit cone.
#[derive(Debug, Clone)]
pub struct Cone {
    pub core: Subspace,
    pub complement: Subspace,
    pub aperture: f64,
}

impl Cone {
    pub fn new(core: Subspace, complement: Subspace, aperture: f64) -> Result<Self, ConesError> {
        assert!(aperture > 0.0, "aperture must be positive");
        let n = core.ambient_dim();
        if complement.ambient_dim() != n || core.dim() + complement.dim() != n {
            return Err(ConesError::Linalg(LinalgError::Dimension {
                expected: n,
                got: core.dim() + complement.dim(),
            }));
        }
        let angle = min_principal_angle(&core, &complement)?;
        if angle <= 1e-8 {
            return Err(ConesError::Linalg(LinalgError::DegenerateSplitting {
                angle,
                min: 1e-8,
            }));
        }
        Ok(Cone { core, complement, aperture })
    }

    fn basis_matrix(&self) -> DMatrix<f64> {
        let mut cols = Vec::new();
        for j in 0..self.core.dim() {
            cols.push(self.core.basis().column(j).into_owned());
        }
        for j in 0..self.complement.dim() {
            cols.push(self.complement.basis().column(j).into_owned());
        }
        DMatrix::from_columns(&cols)
    }

    /// Oblique decomposition norms (|v_E|, |v_F|).
    pub fn split_norms(&self, v: &DVector<f64>) -> (f64, f64) {
        let b = self.basis_matrix();
        let coords = b.lu().solve(v).expect("cone basis is invertible");
        let ke = self.core.dim();
        let ce = coords.rows(0, ke).into_owned();
        let cf = coords.rows(ke, coords.len() - ke).into_owned();
        ((self.core.basis() * ce).norm(), (self.complement.basis() * cf).norm())
    }

    /// Slope |v_F| / |v_E| of the oblique decomposition (infinite on the
    /// complement axis).
    pub fn slope(&self, v: &DVector<f64>) -> f64 {
        let (e, f) = self.split_norms(v);
        if e == 0.0 {
            if f == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            f / e
        }
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        if v.norm() == 0.0 {
            return true;
        }
        let (e, f) = self.split_norms(v);
        f <= self.aperture * e
    }
}

/// Zero-vector convention included: membership test of the spec.
pub fn cone_contains(c: &Cone, v: &DVector<f64>) -> bool {
    c.contains(v)
}

/// Deterministic unit-sphere sample in R^k.
fn sphere_points(k: usize) -> Vec<DVector<f64>> {
    match k {
        0 => vec![],
        1 => vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![-1.0])],
        2 => (0..SPHERE_GRID)
            .map(|i| {
                let phi = 2.0 * std::f64::consts::PI * i as f64 / SPHERE_GRID as f64;
                DVector::from_vec(vec![phi.cos(), phi.sin()])
            })
            .collect(),
        3 => {
            let mut out = Vec::new();
            let n_theta = 16;
            for it in 0..=n_theta {
                let th = std::f64::consts::PI * it as f64 / n_theta as f64;
                let n_phi = if it == 0 || it == n_theta { 1 } else { 2 * n_theta };
                for ip in 0..n_phi {
                    let ph = 2.0 * std::f64::consts::PI * ip as f64 / n_phi as f64;
                    out.push(DVector::from_vec(vec![
                        th.sin() * ph.cos(),
                        th.sin() * ph.sin(),
                        th.cos(),
                    ]));
                }
            }
            out
        }
        _ => {
            // High-dimensional spheres fall back to a fixed-seed sample.
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            (0..8 * SPHERE_GRID)
                .map(|_| {
                    let mut v = DVector::from_fn(k, |_, _| rng.gen_range(-1.0f64..1.0));
                    while v.norm() < 1e-3 {
                        v = DVector::from_fn(k, |_, _| rng.gen_range(-1.0f64..1.0));
                    }
                    let n = v.norm();
                    v / n
                })
                .collect()
        }
    }
}

fn unit_on_circle(phi: f64) -> DVector<f64> {
    DVector::from_vec(vec![phi.cos(), phi.sin()])
}

fn golden_min(mut lo: f64, mut hi: f64, f: &mut dyn FnMut(f64) -> f64) -> (f64, f64) {
    let gr = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - gr * (hi - lo);
    let mut d = lo + gr * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > REFINE_TOL * 1e-2 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = f(d);
        }
    }
    let mid = (lo + hi) / 2.0;
    (mid, f(mid))
}

struct RatioProblem<'a> {
    cone: &'a Cone,
    map: &'a DMatrix<f64>,
}

impl RatioProblem<'_> {
    fn vector(&self, e: &DVector<f64>, f: &DVector<f64>, theta: f64) -> DVector<f64> {
        let ke = self.cone.core.dim();
        let kf = self.cone.complement.dim();
        let mut u = DVector::zeros(self.cone.core.ambient_dim());
        if ke > 0 {
            u += self.cone.core.basis() * e * theta.cos();
        }
        if kf > 0 {
            u += self.cone.complement.basis() * f * theta.sin();
        }
        u
    }

    fn ratio(&self, e: &DVector<f64>, f: &DVector<f64>, theta: f64) -> f64 {
        let u = self.vector(e, f, theta);
        let nu = u.norm();
        if nu < 1e-14 {
            return f64::INFINITY;
        }
        (self.map * u).norm() / nu
    }
}

/// Grid scan plus golden-section coordinate refinement of the infimum of
/// |L u| / |u| over the theta range of the two-sphere-product parameterization
/// u = cos(theta) e + sin(theta) f.
fn inf_ratio_over_range(cone: &Cone, map: &DMatrix<f64>, theta_lo: f64, theta_hi: f64) -> f64 {
    let problem = RatioProblem { cone, map };
    let es = sphere_points(cone.core.dim());
    let fs = sphere_points(cone.complement.dim());
    let n_theta = SPHERE_GRID;
    let mut best = f64::INFINITY;
    let mut best_e = es.first().cloned().unwrap_or_else(|| DVector::zeros(0));
    let mut best_f = fs.first().cloned().unwrap_or_else(|| DVector::zeros(0));
    let mut best_theta = theta_lo;
    for e in &es {
        for f in &fs {
            for it in 0..=n_theta {
                let theta = theta_lo + (theta_hi - theta_lo) * it as f64 / n_theta as f64;
                let r = problem.ratio(e, f, theta);
                if r < best {
                    best = r;
                    best_e = e.clone();
                    best_f = f.clone();
                    best_theta = theta;
                }
            }
        }
    }
    // Coordinate descent: theta always; circle angles when a factor is 2-dim.
    let mut e = best_e;
    let mut f = best_f;
    let mut theta = best_theta;
    for _ in 0..4 {
        let step = (theta_hi - theta_lo) / n_theta as f64;
        let (t, v) = golden_min(
            (theta - step).max(theta_lo),
            (theta + step).min(theta_hi),
            &mut |t| problem.ratio(&e, &f, t),
        );
        theta = t;
        best = best.min(v);
        if e.len() == 2 {
            let phi0 = e[1].atan2(e[0]);
            let window = 2.0 * std::f64::consts::PI / SPHERE_GRID as f64;
            let (phi, v) = golden_min(phi0 - window, phi0 + window, &mut |p| {
                problem.ratio(&unit_on_circle(p), &f, theta)
            });
            e = unit_on_circle(phi);
            best = best.min(v);
        }
        if f.len() == 2 {
            let phi0 = f[1].atan2(f[0]);
            let window = 2.0 * std::f64::consts::PI / SPHERE_GRID as f64;
            let (phi, v) = golden_min(phi0 - window, phi0 + window, &mut |p| {
                problem.ratio(&e, &unit_on_circle(p), theta)
            });
            f = unit_on_circle(phi);
            best = best.min(v);
        }
    }
    best
}

/// Minimal expansion of `map` on the cone: inf of |L u|/|u| over nonzero
/// u in C, i.e. over slopes up to the aperture.
pub fn min_expansion(cone: &Cone, map: &DMatrix<f64>) -> f64 {
    inf_ratio_over_range(cone, map, 0.0, cone.aperture.atan())
}

/// Minimal co-expansion: inf of |L u|/|u| over the closure of the cone
/// complement at the image point, `map` being the backward map there.
pub fn min_coexpansion(cone_image: &Cone, map: &DMatrix<f64>) -> f64 {
    inf_ratio_over_range(cone_image, map, cone_image.aperture.atan(), std::f64::consts::FRAC_PI_2)
}

/// A cone attached to one sampled point of one track.
#[derive(Debug, Clone)]
pub struct ConeFieldPoint {
    pub track: usize,
    pub index: usize,
    pub cone: Cone,
}

/// A cone field over the sampled invariant set.
#[derive(Debug, Clone)]
pub struct ConeField {
    pub points: Vec<ConeFieldPoint>,
}

impl ConeField {
    pub fn constant_core_dim(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[0].cone.core.dim() == w[1].cone.core.dim())
    }

    fn cone_at(&self, track: usize, index: usize) -> Option<&Cone> {
        self.points
            .iter()
            .find(|p| p.track == track && p.index == index)
            .map(|p| &p.cone)
    }
}

/// Per-point expansion data and the Def.-3.1 coefficients.
#[derive(Debug, Clone)]
pub struct DominationCoefficients {
    /// (m, m') per cone-field point.
    pub per_point: Vec<(f64, f64)>,
    /// inf over points of m * m'.
    pub pointwise_inf: f64,
    /// (inf m) * (inf m'), the strong-domination quantity.
    pub separate_product: f64,
}

/// Forward/backward maps over the analysis step at one cone-field point.
pub struct ConePointMaps {
    pub forward: DMatrix<f64>,
    pub backward: DMatrix<f64>,
    pub image_cone: Cone,
}

/// Domination coefficient of the cocycle step on the cone field.
pub fn domination_coefficient(
    field: &ConeField,
    maps: &[ConePointMaps],
) -> Result<DominationCoefficients, ConesError> {
    if !field.constant_core_dim() {
        return Err(ConesError::ConeFieldShape);
    }
    assert_eq!(field.points.len(), maps.len());
    let mut per_point = Vec::with_capacity(maps.len());
    let mut inf_m = f64::INFINITY;
    let mut inf_mp = f64::INFINITY;
    let mut pointwise = f64::INFINITY;
    for (p, pm) in field.points.iter().zip(maps) {
        let m = min_expansion(&p.cone, &pm.forward);
        let mp = min_coexpansion(&pm.image_cone, &pm.backward);
        inf_m = inf_m.min(m);
        inf_mp = inf_mp.min(mp);
        pointwise = pointwise.min(m * mp);
        per_point.push((m, mp));
    }
    Ok(DominationCoefficients {
        per_point,
        pointwise_inf: pointwise,
        separate_product: inf_m * inf_mp,
    })
}

/// Worst aperture margin of the mapped cone inside the image cone: positive
/// means the cone field maps strictly into itself.
fn invariance_margin(cone: &Cone, map: &DMatrix<f64>, image: &Cone) -> f64 {
    let es = sphere_points(cone.core.dim());
    let fs = sphere_points(cone.complement.dim());
    let problem = RatioProblem { cone, map };
    let mut worst = f64::INFINITY;
    let theta_max = cone.aperture.atan();
    for e in &es {
        for f in &fs {
            for it in 0..=16 {
                let theta = theta_max * it as f64 / 16.0;
                let u = problem.vector(e, f, theta);
                if u.norm() < 1e-14 {
                    continue;
                }
                let w = map * u;
                worst = worst.min(image.aperture - image.slope(&w));
            }
        }
    }
    worst
}

/// A strong-domination certificate: the operational witness that a dominated
/// splitting exists at time t0.
#[derive(Debug, Clone)]
pub struct StrongDominationCertificate {
    pub t0: f64,
    pub n_steps: usize,
    pub coefficients: DominationCoefficients,
    pub invariance_margin: f64,
}

/// Searches the time grid for the smallest t0 at which the cone field is
/// strongly dominated AND mapped strictly into itself. Returns `None` when no
/// grid time qualifies.
pub fn newhouse_search(
    field: &ConeField,
    cocycle: &AnalysisCocycle,
    t_grid: &[f64],
) -> Result<Option<StrongDominationCertificate>, ConesError> {
    assert!(!t_grid.is_empty(), "t_grid must be nonempty");
    if !field.constant_core_dim() {
        return Err(ConesError::ConeFieldShape);
    }
    let mut grid = t_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &t0 in &grid {
        assert!(t0 > 0.0, "t_grid entries must be positive");
        let mut maps = Vec::new();
        let mut margin = f64::INFINITY;
        let mut feasible = true;
        for p in &field.points {
            let track: &Track = &cocycle.tracks[p.track];
            let n = (t0 / track.mean_duration()).round().max(1.0) as usize;
            if !track.periodic && p.index + n >= track.n_points() {
                feasible = false;
                break;
            }
            let forward = track.forward(p.index, n);
            let backward = track
                .backward(p.index + n, n)
                .ok_or(ConesError::OutOfRange { index: p.index })?;
            let image_index = track.point_index(p.index + n);
            let image_cone = match field.cone_at(p.track, image_index) {
                Some(c) => c.clone(),
                // A field sampled on part of a non-periodic track reuses the
                // source cone when the image point is unsampled.
                None if !track.periodic => p.cone.clone(),
                None => {
                    return Err(ConesError::MissingImageCone {
                        track: p.track,
                        index: image_index,
                    })
                }
            };
            margin = margin.min(invariance_margin(&p.cone, &forward, &image_cone));
            maps.push(ConePointMaps { forward, backward, image_cone });
        }
        if !feasible {
            continue;
        }
        let coefficients = domination_coefficient(field, &maps)?;
        if coefficients.separate_product > 1.0 && margin >= INVARIANCE_MARGIN {
            return Ok(Some(StrongDominationCertificate {
                t0,
                n_steps: (t0 / cocycle.tracks[field.points[0].track].mean_duration())
                    .round()
                    .max(1.0) as usize,
                coefficients,
                invariance_margin: margin,
            }));
        }
    }
    Ok(None)
}

/// Limit of the forward-iterated cone from the orbit's past at `anchor`:
/// the span of the top core-dim left singular vectors of the product over the
/// trailing `n_iter` steps, with a convergence check against one fewer step.
pub fn cone_limit_subspace(
    cone: &Cone,
    track: &Track,
    anchor: usize,
    n_iter: usize,
) -> Result<Subspace, ConesError> {
    assert!(n_iter >= 1);
    let len = track.n_steps();
    let past_index = |m: usize| -> Result<usize, ConesError> {
        if track.periodic {
            let l = len as i64;
            Ok(((((anchor as i64 - m as i64) % l) + l) % l) as usize)
        } else {
            anchor
                .checked_sub(m)
                .ok_or(ConesError::OutOfRange { index: anchor })
        }
    };
    let k = cone.core.dim();
    let top_left = |acc: &DMatrix<f64>| -> Subspace {
        let (_, u, _) = svd_sorted(acc);
        Subspace::from_cols(&u.columns(0, k).into_owned()).expect("left singular block")
    };
    let d = track.steps[0].nrows();
    let mut acc = DMatrix::identity(d, d);
    let mut previous: Option<Subspace> = None;
    let mut last_angle = f64::INFINITY;
    for m in 1..=n_iter {
        let idx = past_index(m)?;
        acc = &acc * &track.steps[idx];
        let amax = acc.abs().max();
        if amax > 1e120 {
            acc /= amax;
        }
        if m >= n_iter - 1 {
            let current = top_left(&acc);
            if let Some(prev) = &previous {
                last_angle = prev.max_angle_to(&current);
            }
            previous = Some(current);
        }
    }
    let limit = previous.expect("n_iter >= 1");
    if last_angle > 1e-6 {
        return Err(ConesError::NotConverged { angle: last_angle });
    }
    Ok(limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn standard_cone_2d(aperture: f64) -> Cone {
        Cone::new(
            Subspace::coordinate(2, &[0]),
            Subspace::coordinate(2, &[1]),
            aperture,
        )
        .unwrap()
    }

    #[test]
    fn membership_examples() {
        let c = standard_cone_2d(1.0);
        assert!(c.contains(&DVector::from_vec(vec![1.0, 0.0])));
        assert!(!c.contains(&DVector::from_vec(vec![0.0, 1.0])));
        // Boundary is included.
        assert!(c.contains(&DVector::from_vec(vec![1.0, 1.0])));
        assert!(c.contains(&DVector::zeros(2)));
    }

    #[test]
    fn min_expansion_conformal_map() {
        let c = standard_cone_2d(1.0);
        let m = DMatrix::identity(2, 2) * 2.0;
        assert!((min_expansion(&c, &m) - 2.0).abs() < 2e-4);
    }

    #[test]
    fn min_expansion_closed_form_example() {
        let c = standard_cone_2d(1.0);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.5]));
        let expected = (37.0f64 / 8.0).sqrt();
        let got = min_expansion(&c, &m);
        assert!((got - expected).abs() < 1e-4 * expected, "{got} vs {expected}");
    }

    #[test]
    fn min_coexpansion_closed_form_example() {
        let c = standard_cone_2d(1.0);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / 3.0, 2.0]));
        let expected = (1.0f64 / 18.0 + 2.0).sqrt();
        let got = min_coexpansion(&c, &m);
        assert!((got - expected).abs() < 1e-4 * expected, "{got} vs {expected}");
        assert!((min_coexpansion(&c, &DMatrix::identity(2, 2)) - 1.0).abs() < 2e-4);
    }

    #[test]
    fn min_expansion_matches_monte_carlo_inf() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0f64..1.0));
        let core = Subspace::coordinate(3, &[0, 1]);
        let comp = Subspace::coordinate(3, &[2]);
        let cone = Cone::new(core, comp, 0.8).unwrap();
        let exact = min_expansion(&cone, &m);
        let mut best = f64::INFINITY;
        for _ in 0..1_000_000 {
            let v = DVector::from_fn(3, |_, _| rng.gen_range(-1.0f64..1.0));
            if v.norm() < 1e-6 || !cone.contains(&v) {
                continue;
            }
            best = best.min((&m * &v).norm() / v.norm());
        }
        assert!((exact - best).abs() < 1e-3 * best.max(1.0), "{exact} vs {best}");
    }

    #[test]
    fn aperture_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let m = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-2.0f64..2.0));
            let narrow = standard_cone_2d(0.5);
            let wide = standard_cone_2d(1.5);
            assert!(min_expansion(&wide, &m) <= min_expansion(&narrow, &m) + 1e-6);
        }
    }

    #[test]
    fn expansion_sandwich_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..10 {
            let m = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-2.0f64..2.0));
            let cone = standard_cone_2d(1.0);
            let me = min_expansion(&cone, &m);
            let (lo, _) = crate::linalg::sigma_extremes(&m);
            let core_norm = crate::linalg::sigma_max(&(&m * cone.core.basis()));
            assert!(me >= lo - 1e-6);
            assert!(me <= core_norm + 1e-6);
        }
    }

    #[test]
    fn identity_cocycle_coefficient_is_one() {
        let field = ConeField {
            points: vec![ConeFieldPoint { track: 0, index: 0, cone: standard_cone_2d(1.0) }],
        };
        let maps = vec![ConePointMaps {
            forward: DMatrix::identity(2, 2),
            backward: DMatrix::identity(2, 2),
            image_cone: standard_cone_2d(1.0),
        }];
        let c = domination_coefficient(&field, &maps).unwrap();
        assert!((c.pointwise_inf - 1.0).abs() < 2e-4);
        assert!((c.separate_product - 1.0).abs() < 2e-4);
    }

    #[test]
    fn pointwise_inf_dominates_separate_product() {
        // inf_x (m m') >= (inf m)(inf m') on every run.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut points = Vec::new();
        let mut maps = Vec::new();
        for i in 0..4 {
            points.push(ConeFieldPoint { track: 0, index: i, cone: standard_cone_2d(1.0) });
            let f = DMatrix::from_fn(2, 2, |r, c| {
                if r == c {
                    rng.gen_range(0.5f64..3.0)
                } else {
                    rng.gen_range(-0.2f64..0.2)
                }
            });
            let b = f.clone().try_inverse().unwrap();
            maps.push(ConePointMaps { forward: f, backward: b, image_cone: standard_cone_2d(1.0) });
        }
        let field = ConeField { points };
        let c = domination_coefficient(&field, &maps).unwrap();
        assert!(c.pointwise_inf >= c.separate_product - 1e-9);
    }

    #[test]
    fn mixed_saddles_normal_coefficient() {
        // Diagonal matrices make m and m' computable in closed form. With
        // aperture 1 both extrema sit on the cone boundary at 45 degrees, so
        // for diag(a, b) the product is
        //   m m' = sqrt((a^2 + b^2)/2) * sqrt((a^-2 + b^-2)/2) = 1.25
        // for b/a = 2, on both orbits. That is below the eigenvalue ratio 2
        // (the cone bound is not tight) but still certifies domination.
        let cone = Cone::new(
            Subspace::coordinate(2, &[1]),
            Subspace::coordinate(2, &[0]),
            1.0,
        )
        .unwrap();
        let field = ConeField {
            points: vec![
                ConeFieldPoint { track: 0, index: 0, cone: cone.clone() },
                ConeFieldPoint { track: 1, index: 0, cone: cone.clone() },
            ],
        };
        let fa = DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, 0.5]));
        let fb = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let maps = vec![
            ConePointMaps {
                forward: fa.clone(),
                backward: fa.try_inverse().unwrap(),
                image_cone: cone.clone(),
            },
            ConePointMaps {
                forward: fb.clone(),
                backward: fb.try_inverse().unwrap(),
                image_cone: cone.clone(),
            },
        ];
        let c = domination_coefficient(&field, &maps).unwrap();
        assert!((c.pointwise_inf - 1.25).abs() < 1e-3, "pointwise {}", c.pointwise_inf);
        assert!(c.pointwise_inf > 1.0);
        // Taking the two infima separately decouples the orbits (inf m and
        // inf m' land on different orbits) and the certificate is lost:
        // 0.3953^2 < 1. Pointwise pairing is essential on mixed saddles.
        assert!((c.separate_product - 0.15625).abs() < 1e-3, "separate {}", c.separate_product);
    }

    #[test]
    fn cone_limit_diagonal_cocycle() {
        let track = Track {
            durations: vec![1.0],
            steps: vec![DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 2.0]))],
            periodic: true,
            x_dirs: None,
        };
        let cone = standard_cone_2d(1.0);
        let limit = cone_limit_subspace(&cone, &track, 0, 40).unwrap();
        let e1 = Subspace::coordinate(2, &[0]);
        assert!(limit.max_angle_to(&e1) < 1e-12);
    }

    #[test]
    fn cone_limit_rotation_does_not_converge() {
        let th = 1.0f64;
        let rot = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let track = Track { durations: vec![1.0], steps: vec![rot], periodic: true, x_dirs: None };
        let cone = standard_cone_2d(1.0);
        assert!(matches!(
            cone_limit_subspace(&cone, &track, 0, 30),
            Err(ConesError::NotConverged { .. })
        ));
    }
}
