//! Catalog of analyzable dynamics: smooth vector fields with Jacobians and
//! locally constant suspension cocycles, plus the fixed-step integrators for
//! the flow and its variational (tangent) equation.

mod catalog;
mod io;

pub use catalog::{cat_eigendirections, catalog, catalog_entry, AnalyticSplitting, CatalogEntry};
pub use io::{emit_system, load_system, parse_system, system_to_json, OrbitDef, SystemFile};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{sigma_extremes, LinearMap};

/// Default minimum allowed |X(x)| along analyzed orbits.
pub const DEFAULT_SINGULARITY_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SystemsError {
    #[error("orbit approached a singularity at t = {t:.6} (|X| = {norm:.3e})")]
    SingularityEncountered { t: f64, norm: f64 },
    #[error("orbit diverged (non-finite state) at t = {t:.6}")]
    Divergence { t: f64 },
    #[error("index out of bounds: {what}")]
    Index { what: String },
    #[error("fiber matrix {step} of orbit {orbit} is not invertible (sigma ratio {ratio:.3e})")]
    InvertibilityError { orbit: usize, step: usize, ratio: f64 },
    #[error("invalid system definition: {0}")]
    Definition(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

type FieldFn = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type JacobianFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// A smooth vector field with analytic Jacobian and seed points on a known
/// compact invariant set.
pub struct FlowSystem {
    pub name: String,
    pub dim: usize,
    field: FieldFn,
    jacobian: JacobianFn,
    pub seeds: Vec<DVector<f64>>,
    pub singularity_floor: f64,
}

impl FlowSystem {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        field: FieldFn,
        jacobian: JacobianFn,
        seeds: Vec<DVector<f64>>,
    ) -> Self {
        FlowSystem {
            name: name.into(),
            dim,
            field,
            jacobian,
            seeds,
            singularity_floor: DEFAULT_SINGULARITY_FLOOR,
        }
    }

    pub fn field(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.field)(x)
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.jacobian)(x)
    }

    /// Central finite-difference Jacobian, used by tests to validate the
    /// analytic one.
    pub fn jacobian_fd(&self, x: &DVector<f64>, step: f64) -> DMatrix<f64> {
        let n = self.dim;
        let mut j = DMatrix::zeros(n, n);
        for c in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += step;
            xm[c] -= step;
            let d = (self.field(&xp) - self.field(&xm)) / (2.0 * step);
            j.set_column(c, &d);
        }
        j
    }
}

/// One periodic symbol orbit of a suspension cocycle.
#[derive(Debug, Clone)]
pub struct SuspensionOrbit {
    pub period: usize,
    pub matrices: Vec<DMatrix<f64>>,
    pub roof: Vec<f64>,
}

/// A locally constant matrix cocycle over periodic symbol orbits with a roof
/// time; the flow direction is an explicit neutral coordinate with rate 1.
#[derive(Debug, Clone)]
pub struct SuspensionCocycle {
    pub name: String,
    pub fiber_dim: usize,
    pub orbits: Vec<SuspensionOrbit>,
}

impl SuspensionCocycle {
    pub fn new(
        name: impl Into<String>,
        fiber_dim: usize,
        orbits: Vec<SuspensionOrbit>,
    ) -> Result<Self, SystemsError> {
        let name = name.into();
        for (oi, orbit) in orbits.iter().enumerate() {
            if orbit.matrices.len() != orbit.period || orbit.roof.len() != orbit.period {
                return Err(SystemsError::Definition(format!(
                    "orbit {oi} of {name}: period {} but {} matrices / {} roof times",
                    orbit.period,
                    orbit.matrices.len(),
                    orbit.roof.len()
                )));
            }
            for (si, m) in orbit.matrices.iter().enumerate() {
                if m.nrows() != fiber_dim || m.ncols() != fiber_dim {
                    return Err(SystemsError::Definition(format!(
                        "orbit {oi} step {si}: matrix is {}x{}, fiber dim {fiber_dim}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                let (lo, hi) = sigma_extremes(m);
                if hi == 0.0 || lo <= 1e-12 * hi {
                    return Err(SystemsError::InvertibilityError {
                        orbit: oi,
                        step: si,
                        ratio: if hi > 0.0 { lo / hi } else { 0.0 },
                    });
                }
            }
            for (si, r) in orbit.roof.iter().enumerate() {
                if !(*r > 0.0) {
                    return Err(SystemsError::Definition(format!(
                        "orbit {oi} step {si}: roof time {r} not positive"
                    )));
                }
            }
        }
        Ok(SuspensionCocycle { name, fiber_dim, orbits })
    }

    /// Tangent dimension including the neutral flow coordinate (kept last).
    pub fn tangent_dim(&self) -> usize {
        self.fiber_dim + 1
    }
}

/// Either kind of analyzable system.
pub enum System {
    Flow(FlowSystem),
    Suspension(SuspensionCocycle),
}

impl System {
    pub fn name(&self) -> &str {
        match self {
            System::Flow(f) => &f.name,
            System::Suspension(s) => &s.name,
        }
    }
}

/// A fixed-step sampled trajectory. When `reversed` is set the segment was
/// produced by integrating the reversed field, realizing X_{-t}; times are
/// the elapsed (positive) integration times of that reversed field.
#[derive(Debug, Clone)]
pub struct OrbitSegment {
    pub system_name: String,
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub field_values: Vec<DVector<f64>>,
    pub reversed: bool,
    pub singularity_floor: f64,
}

impl OrbitSegment {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Fundamental-matrix solutions of the variational equation along an orbit.
/// `fundamental[i]` approximates DX_{t_i - t_0}(x(t_0)); `steps[i]` is the
/// transition matrix over the single step [t_i, t_{i+1}].
#[derive(Debug, Clone)]
pub struct TangentCocycle {
    pub fundamental: Vec<DMatrix<f64>>,
    pub steps: Vec<DMatrix<f64>>,
}

/// One RK4 step of the flow from `x` over time `h`.
pub fn flow_step(sys: &FlowSystem, x: &DVector<f64>, h: f64) -> DVector<f64> {
    rk4_flow_step(&|p| sys.field(p), x, h)
}

fn rk4_flow_step(field: &dyn Fn(&DVector<f64>) -> DVector<f64>, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = field(x);
    let k2 = field(&(x + &k1 * (h / 2.0)));
    let k3 = field(&(x + &k2 * (h / 2.0)));
    let k4 = field(&(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// One RK4 step of the combined system (x, D) with D' = J(x) D; returns the
/// new state and the transition matrix of the step (D-update with D = I).
fn rk4_tangent_step(
    field: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    jac: &dyn Fn(&DVector<f64>) -> DMatrix<f64>,
    x: &DVector<f64>,
    h: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.len();
    let id = DMatrix::identity(n, n);
    let k1 = field(x);
    let l1 = jac(x) * &id;
    let x2 = x + &k1 * (h / 2.0);
    let k2 = field(&x2);
    let l2 = jac(&x2) * (&id + &l1 * (h / 2.0));
    let x3 = x + &k2 * (h / 2.0);
    let k3 = field(&x3);
    let l3 = jac(&x3) * (&id + &l2 * (h / 2.0));
    let x4 = x + &k3 * h;
    let k4 = field(&x4);
    let l4 = jac(&x4) * (&id + &l3 * h);
    let xn = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    let step = &id + (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (h / 6.0);
    (xn, step)
}

/// Grid of step sizes covering |t_max|: full steps of dt plus a final
/// partial step when needed.
fn step_grid(t_total: f64, dt: f64) -> Vec<f64> {
    let n_full = (t_total / dt + 1e-9).floor() as usize;
    let mut steps = vec![dt; n_full];
    let rem = t_total - n_full as f64 * dt;
    if rem > 1e-12 * dt.max(1.0) {
        steps.push(rem);
    }
    steps
}

/// Classical 4th-order fixed-step integration of the flow. Negative `t_max`
/// integrates the reversed field. Aborts on singularity approach or blowup.
pub fn integrate_orbit(
    sys: &FlowSystem,
    x0: &DVector<f64>,
    t_max: f64,
    dt: f64,
) -> Result<OrbitSegment, SystemsError> {
    assert!(dt > 0.0, "dt must be positive");
    assert!(t_max != 0.0, "t_max must be nonzero");
    let reversed = t_max < 0.0;
    let sign = if reversed { -1.0 } else { 1.0 };
    let field = |x: &DVector<f64>| sys.field(x) * sign;
    let t_total = t_max.abs();

    let mut times = vec![0.0];
    let mut points = vec![x0.clone()];
    let mut field_values = Vec::new();

    let check = |x: &DVector<f64>, t: f64| -> Result<DVector<f64>, SystemsError> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SystemsError::Divergence { t });
        }
        let fx = sys.field(x);
        let norm = fx.norm();
        if norm < sys.singularity_floor {
            return Err(SystemsError::SingularityEncountered { t, norm });
        }
        Ok(fx)
    };
    field_values.push(check(x0, 0.0)?);

    let mut x = x0.clone();
    let mut t = 0.0;
    for h in step_grid(t_total, dt) {
        x = rk4_flow_step(&field, &x, h);
        t += h;
        field_values.push(check(&x, if reversed { -t } else { t })?);
        times.push(t);
        points.push(x.clone());
    }
    Ok(OrbitSegment {
        system_name: sys.name.clone(),
        times,
        points,
        field_values,
        reversed,
        singularity_floor: sys.singularity_floor,
    })
}

/// Solves the variational equation D' = DX(x(t)) D alongside the base
/// integration, on the same grid and with the same stepper.
pub fn integrate_tangent(sys: &FlowSystem, orbit: &OrbitSegment) -> Result<TangentCocycle, SystemsError> {
    let sign = if orbit.reversed { -1.0 } else { 1.0 };
    let field = |x: &DVector<f64>| sys.field(x) * sign;
    let jac = |x: &DVector<f64>| sys.jacobian(x) * sign;
    let n = sys.dim;
    let mut x = orbit.points[0].clone();
    let mut fundamental = vec![DMatrix::identity(n, n)];
    let mut steps = Vec::with_capacity(orbit.len().saturating_sub(1));
    for i in 0..orbit.len() - 1 {
        let h = orbit.times[i + 1] - orbit.times[i];
        let (xn, step) = rk4_tangent_step(&field, &jac, &x, h);
        if xn.iter().any(|v| !v.is_finite()) {
            return Err(SystemsError::Divergence { t: orbit.times[i + 1] });
        }
        fundamental.push(&step * fundamental.last().unwrap());
        steps.push(step);
        x = xn;
    }
    Ok(TangentCocycle { fundamental, steps })
}

/// Exact tangent action of a suspension over `n_steps` roof units starting at
/// `start_step` of orbit `orbit_id`: block matrix [fiber product] + [1], with
/// the flow direction as the last (neutral) coordinate. Negative `n_steps`
/// composes inverse matrices in reverse order.
pub fn cocycle_matrix(
    cos: &SuspensionCocycle,
    orbit_id: usize,
    start_step: i64,
    n_steps: i64,
) -> Result<LinearMap, SystemsError> {
    let orbit = cos
        .orbits
        .get(orbit_id)
        .ok_or_else(|| SystemsError::Index { what: format!("orbit {orbit_id}") })?;
    let p = orbit.period as i64;
    let idx = |k: i64| -> usize { (((k % p) + p) % p) as usize };
    let d = cos.fiber_dim;
    let mut fiber = DMatrix::identity(d, d);
    if n_steps >= 0 {
        for m in 0..n_steps {
            fiber = &orbit.matrices[idx(start_step + m)] * fiber;
        }
    } else {
        for m in 1..=(-n_steps) {
            let inv = orbit.matrices[idx(start_step - m)]
                .clone()
                .try_inverse()
                .ok_or_else(|| SystemsError::Index {
                    what: format!("non-invertible fiber matrix at step {}", start_step - m),
                })?;
            fiber = inv * fiber;
        }
    }
    let mut full = DMatrix::identity(d + 1, d + 1);
    full.view_mut((0, 0), (d, d)).copy_from(&fiber);
    Ok(LinearMap::new(full))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_linear() -> FlowSystem {
        FlowSystem::new(
            "scalar-linear",
            1,
            Box::new(|x: &DVector<f64>| -x.clone()),
            Box::new(|_x: &DVector<f64>| DMatrix::from_element(1, 1, -1.0)),
            vec![DVector::from_vec(vec![1.0])],
        )
    }

    #[test]
    fn integrate_scalar_linear_forward() {
        let sys = scalar_linear();
        let orbit = integrate_orbit(&sys, &DVector::from_vec(vec![1.0]), 1.0, 1e-3).unwrap();
        let end = orbit.points.last().unwrap()[0];
        assert!((end - (-1.0f64).exp()).abs() < 1e-9);
        assert_relative_eq!(*orbit.times.last().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn integrate_scalar_linear_time_reversal() {
        let sys = scalar_linear();
        let orbit = integrate_orbit(&sys, &DVector::from_vec(vec![1.0]), -1.0, 1e-3).unwrap();
        assert!(orbit.reversed);
        let end = orbit.points.last().unwrap()[0];
        assert!((end - 1.0f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn fixed_step_grid_with_final_partial_step() {
        let sys = scalar_linear();
        let orbit = integrate_orbit(&sys, &DVector::from_vec(vec![1.0]), 0.0105, 1e-3).unwrap();
        for w in orbit.times.windows(2).take(10) {
            assert!((w[1] - w[0] - 1e-3).abs() < 1e-12);
        }
        let last = orbit.times[orbit.times.len() - 1] - orbit.times[orbit.times.len() - 2];
        assert!((last - 5e-4).abs() < 1e-12);
    }

    #[test]
    fn singularity_abort_carries_time() {
        // Field vanishing at the origin; start close to it and flow inward.
        let sys = FlowSystem::new(
            "sink",
            1,
            Box::new(|x: &DVector<f64>| -x.clone()),
            Box::new(|_x: &DVector<f64>| DMatrix::from_element(1, 1, -1.0)),
            vec![],
        );
        let mut sys = sys;
        sys.singularity_floor = 1e-2;
        let err = integrate_orbit(&sys, &DVector::from_vec(vec![1.0]), 10.0, 1e-2).unwrap_err();
        match err {
            SystemsError::SingularityEncountered { t, .. } => assert!(t > 0.0),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn tangent_of_linear_flow_is_matrix_exponential() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.0, 0.3]);
        let af = a.clone();
        let aj = a.clone();
        let sys = FlowSystem::new(
            "linear",
            2,
            Box::new(move |x: &DVector<f64>| &af * x),
            Box::new(move |_x: &DVector<f64>| aj.clone()),
            vec![],
        );
        let x0 = DVector::from_vec(vec![1.0, 1.0]);
        let orbit = integrate_orbit(&sys, &x0, 1.0, 1e-3).unwrap();
        let tc = integrate_tangent(&sys, &orbit).unwrap();
        assert!((&tc.fundamental[0] - DMatrix::identity(2, 2)).abs().max() == 0.0);
        let expected = (a * 1.0).exp();
        let got = tc.fundamental.last().unwrap();
        let rel = (got - &expected).norm() / expected.norm();
        assert!(rel < 1e-8, "relative error {rel}");
    }

    #[test]
    fn cocycle_matrix_cat_powers_and_inverse() {
        let cat = match catalog_entry("cat-suspension").unwrap().system {
            System::Suspension(s) => s,
            _ => unreachable!(),
        };
        let id = cocycle_matrix(&cat, 0, 0, 0).unwrap();
        assert!((id.matrix() - DMatrix::identity(3, 3)).abs().max() < 1e-15);
        let two = cocycle_matrix(&cat, 0, 0, 2).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[5.0, 3.0, 0.0, 3.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((two.matrix() - expected).abs().max() < 1e-12);
        let inv = cocycle_matrix(&cat, 0, 0, -1).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((inv.matrix() - expected).abs().max() < 1e-12);
    }

    #[test]
    fn cocycle_matrix_is_associative() {
        let entry = catalog_entry("mixed-saddles").unwrap();
        let cos = match entry.system {
            System::Suspension(s) => s,
            _ => unreachable!(),
        };
        for orbit in 0..2 {
            for start in 0..3i64 {
                for m in 0..4i64 {
                    for k in 0..4i64 {
                        let whole = cocycle_matrix(&cos, orbit, start, m + k).unwrap();
                        let a = cocycle_matrix(&cos, orbit, start, m).unwrap();
                        let b = cocycle_matrix(&cos, orbit, start + m, k).unwrap();
                        let defect = (b.matrix() * a.matrix() - whole.matrix()).abs().max();
                        assert!(defect <= 1e-13 * whole.matrix().abs().max().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_zero_fiber_matrix() {
        let err = SuspensionCocycle::new(
            "bad",
            2,
            vec![SuspensionOrbit {
                period: 1,
                matrices: vec![DMatrix::zeros(2, 2)],
                roof: vec![1.0],
            }],
        )
        .unwrap_err();
        assert!(matches!(err, SystemsError::InvertibilityError { .. }));
    }
}
