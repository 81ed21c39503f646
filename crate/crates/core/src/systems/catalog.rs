//! Built-in systems with known spectral data, used as oracles by the
//! verdict layer and the acceptance suite.

use nalgebra::{DMatrix, DVector};

use super::{FlowSystem, SuspensionCocycle, SuspensionOrbit, System, SystemsError};

/// A known invariant splitting declared by a catalog system, expressed in the
/// tangent fiber. For suspensions the flow coordinate is last and the bundles
/// are constant along each symbol orbit; for flows they are functions of the
/// base point (the flow direction itself is X(x)).
pub enum AnalyticSplitting {
    SuspensionConst {
        /// Per orbit: (E basis, F basis) as tangent-coordinate columns.
        per_orbit: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    },
    FlowFn(Box<dyn Fn(&DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) + Send + Sync>),
}

pub struct CatalogEntry {
    pub system: System,
    /// One-line summary with the analytic facts the system encodes.
    pub summary: String,
    pub analytic: Option<AnalyticSplitting>,
}

fn cat_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0])
}

/// Unit eigenvectors of the cat matrix: (unstable, stable).
pub fn cat_eigendirections() -> (DVector<f64>, DVector<f64>) {
    // [[2,1],[1,1]] is symmetric; eigenvalues (3 +- sqrt5)/2.
    let s5 = 5.0f64.sqrt();
    let mut u = DVector::from_vec(vec![1.0, (s5 - 1.0) / 2.0]);
    u /= u.norm();
    let mut s = DVector::from_vec(vec![1.0, -(s5 + 1.0) / 2.0]);
    s /= s.norm();
    (u, s)
}

fn embed_fiber_col(fiber_dim: usize, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(fiber_dim + 1);
    for i in 0..fiber_dim {
        out[i] = v[i];
    }
    out
}

fn cat_suspension() -> CatalogEntry {
    let system = SuspensionCocycle::new(
        "cat-suspension",
        2,
        vec![SuspensionOrbit {
            period: 1,
            matrices: vec![cat_matrix()],
            roof: vec![1.0],
        }],
    )
    .expect("catalog system is valid");
    let (u, s) = cat_eigendirections();
    let e = DMatrix::from_columns(&[embed_fiber_col(2, &s)]);
    let f = DMatrix::from_columns(&[embed_fiber_col(2, &u)]);
    CatalogEntry {
        system: System::Suspension(system),
        summary: "suspension of [[2,1],[1,1]]; fiber eigenvalues (3+sqrt5)/2 = 2.618034 and \
                  (3-sqrt5)/2 = 0.381966; hyperbolic"
            .into(),
        analytic: Some(AnalyticSplitting::SuspensionConst { per_orbit: vec![(e, f)] }),
    }
}

fn rotation2(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
}

fn ph_suspension() -> CatalogEntry {
    let mut m = DMatrix::identity(3, 3);
    m[(0, 0)] = 1.0 / 3.0;
    m.view_mut((1, 1), (2, 2)).copy_from(&rotation2(1.0));
    let system = SuspensionCocycle::new(
        "ph-suspension",
        3,
        vec![SuspensionOrbit { period: 1, matrices: vec![m], roof: vec![1.0] }],
    )
    .expect("catalog system is valid");
    let e = DMatrix::from_columns(&[embed_fiber_col(3, &DVector::from_vec(vec![1.0, 0.0, 0.0]))]);
    let f = DMatrix::from_columns(&[
        embed_fiber_col(3, &DVector::from_vec(vec![0.0, 1.0, 0.0])),
        embed_fiber_col(3, &DVector::from_vec(vec![0.0, 0.0, 1.0])),
    ]);
    CatalogEntry {
        system: System::Suspension(system),
        summary: "suspension of diag(1/3) + rotation(1 rad); E contracts at rate ln 3, F neutral; \
                  partially hyperbolic, not hyperbolic"
            .into(),
        analytic: Some(AnalyticSplitting::SuspensionConst { per_orbit: vec![(e, f)] }),
    }
}

fn mixed_saddles() -> CatalogEntry {
    let m_a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, 0.5]));
    let m_b = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
    let system = SuspensionCocycle::new(
        "mixed-saddles",
        2,
        vec![
            SuspensionOrbit { period: 1, matrices: vec![m_a], roof: vec![1.0] },
            SuspensionOrbit { period: 1, matrices: vec![m_b], roof: vec![1.0] },
        ],
    )
    .expect("catalog system is valid");
    let e = DMatrix::from_columns(&[embed_fiber_col(2, &DVector::from_vec(vec![1.0, 0.0]))]);
    let f = DMatrix::from_columns(&[embed_fiber_col(2, &DVector::from_vec(vec![0.0, 1.0]))]);
    CatalogEntry {
        system: System::Suspension(system),
        summary: "two saddle orbits diag(1/4,1/2) and diag(2,4); LPF dominated at rate ln 2, flow \
                  not dominated (neither coarsening); partially dominated only"
            .into(),
        analytic: Some(AnalyticSplitting::SuspensionConst {
            per_orbit: vec![(e.clone(), f.clone()), (e, f)],
        }),
    }
}

fn rotation_suspension() -> CatalogEntry {
    let system = SuspensionCocycle::new(
        "rotation-suspension",
        2,
        vec![SuspensionOrbit { period: 1, matrices: vec![rotation2(1.0)], roof: vec![1.0] }],
    )
    .expect("catalog system is valid");
    CatalogEntry {
        system: System::Suspension(system),
        summary: "isometric fiber rotation(1 rad); no singular-value gap, no dominated splitting \
                  anywhere"
            .into(),
        analytic: None,
    }
}

pub(crate) const SADDLE_A: f64 = 0.5;
pub(crate) const SADDLE_B: f64 = 0.3;

/// Hyperbolic limit cycle r=1, z=0 of r' = a(1-r), theta' = 1, z' = b z,
/// written in Cartesian coordinates.
pub(crate) fn saddle_cycle_system(a: f64, b: f64) -> FlowSystem {
    let field = move |p: &DVector<f64>| {
        let (x, y, z) = (p[0], p[1], p[2]);
        let r = (x * x + y * y).sqrt();
        let g = a * (1.0 / r - 1.0);
        DVector::from_vec(vec![g * x - y, g * y + x, b * z])
    };
    let jacobian = move |p: &DVector<f64>| {
        let (x, y) = (p[0], p[1]);
        let r = (x * x + y * y).sqrt();
        let r3 = r * r * r;
        let g = a * (1.0 / r - 1.0);
        DMatrix::from_row_slice(
            3,
            3,
            &[
                g - a * x * x / r3,
                -a * x * y / r3 - 1.0,
                0.0,
                -a * x * y / r3 + 1.0,
                g - a * y * y / r3,
                0.0,
                0.0,
                0.0,
                b,
            ],
        )
    };
    FlowSystem::new(
        "saddle-cycle",
        3,
        Box::new(field),
        Box::new(jacobian),
        vec![DVector::from_vec(vec![1.0, 0.0, 0.0])],
    )
}

fn saddle_cycle() -> CatalogEntry {
    let analytic = AnalyticSplitting::FlowFn(Box::new(|p: &DVector<f64>| {
        let (x, y) = (p[0], p[1]);
        let r = (x * x + y * y).sqrt();
        let e = DMatrix::from_columns(&[DVector::from_vec(vec![x / r, y / r, 0.0])]);
        let f = DMatrix::from_columns(&[DVector::from_vec(vec![0.0, 0.0, 1.0])]);
        (e, f)
    }));
    CatalogEntry {
        system: System::Flow(saddle_cycle_system(SADDLE_A, SADDLE_B)),
        summary: "limit cycle r=1 of r'=0.5(1-r), theta'=1, z'=0.3z; Floquet multipliers \
                  e^{-pi} = 0.043214 (radial) and e^{0.6 pi} = 6.586100 (z); hyperbolic"
            .into(),
        analytic: Some(analytic),
    }
}

/// All built-in systems.
pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        cat_suspension(),
        saddle_cycle(),
        ph_suspension(),
        mixed_saddles(),
        rotation_suspension(),
    ]
}

/// Look up a single catalog system by name.
pub fn catalog_entry(name: &str) -> Result<CatalogEntry, SystemsError> {
    catalog()
        .into_iter()
        .find(|e| e.system.name() == name)
        .ok_or_else(|| SystemsError::Definition(format!("unknown catalog system '{name}'")))
}
