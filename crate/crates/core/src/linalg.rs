//! Dense linear-algebra primitives shared by the whole toolkit: orthonormal
//! subspace representations, operator norms restricted to subspaces, the
//! normal-bundle projection, principal angles, and adapted inner products.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Orthonormality tolerance after Gram-Schmidt with reorthogonalization.
pub const ORTHO_TOL: f64 = 1e-12;
/// Minimal principal angle below which a splitting is treated as degenerate.
pub const TRANSVERSALITY_MIN_ANGLE: f64 = 1e-8;
/// Relative singular-value floor for invertibility checks.
pub const INVERTIBILITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("input vectors are rank deficient (kept {kept} of {requested})")]
    RankDeficient { requested: usize, kept: usize },
    #[error("flow direction is singular or not normalized (norm {norm:.3e})")]
    SingularDirection { norm: f64 },
    #[error("degenerate splitting: minimal principal angle {angle:.3e} below {min:.3e}")]
    DegenerateSplitting { angle: f64, min: f64 },
    #[error("matrix not invertible (sigma_min/sigma_max = {ratio:.3e})")]
    NotInvertible { ratio: f64 },
}

/// A linear subspace of R^n stored as an n-by-k matrix with orthonormal columns.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Orthonormalizes the given spanning vectors (modified Gram-Schmidt, two
    /// passes) and keeps their span. Fails if the vectors are rank deficient.
    pub fn new(vectors: &[DVector<f64>]) -> Result<Self, LinalgError> {
        if vectors.is_empty() {
            return Err(LinalgError::RankDeficient { requested: 0, kept: 0 });
        }
        let n = vectors[0].len();
        for v in vectors {
            if v.len() != n {
                return Err(LinalgError::Dimension { expected: n, got: v.len() });
            }
        }
        let cols: Vec<DVector<f64>> = vectors.to_vec();
        Self::from_cols(&DMatrix::from_columns(&cols))
    }

    /// Orthonormalizes the columns of `m`.
    pub fn from_cols(m: &DMatrix<f64>) -> Result<Self, LinalgError> {
        let requested = m.ncols();
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(requested);
        for j in 0..requested {
            let mut v = DVector::from(m.column(j).into_owned());
            let orig = v.norm();
            // Two orthogonalization passes keep the Gram matrix at identity
            // to roundoff even for nearly dependent inputs.
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dot(&v);
                    v -= b * c;
                }
            }
            let norm = v.norm();
            if norm <= 1e-10 * orig.max(1.0) {
                return Err(LinalgError::RankDeficient { requested, kept: basis.len() });
            }
            basis.push(v / norm);
        }
        Ok(Subspace { basis: DMatrix::from_columns(&basis) })
    }

    /// The line spanned by a single vector.
    pub fn line(v: &DVector<f64>) -> Result<Self, LinalgError> {
        Self::new(std::slice::from_ref(v))
    }

    /// Span of the given coordinate axes of R^n.
    pub fn coordinate(n: usize, axes: &[usize]) -> Self {
        let cols: Vec<DVector<f64>> = axes
            .iter()
            .map(|&i| {
                let mut v = DVector::zeros(n);
                v[i] = 1.0;
                v
            })
            .collect();
        Subspace { basis: DMatrix::from_columns(&cols) }
    }

    /// Direct sum of subspaces of the same ambient space.
    pub fn direct_sum(parts: &[&Subspace]) -> Result<Self, LinalgError> {
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for p in parts {
            for j in 0..p.dim() {
                cols.push(p.basis.column(j).into_owned());
            }
        }
        Self::new(&cols)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Orthogonal projector B B^T onto the subspace.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// Angle in [0, pi/2] between a vector and the subspace.
    pub fn angle_to_vector(&self, v: &DVector<f64>) -> f64 {
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let c = (self.basis.transpose() * v).norm() / norm;
        c.clamp(-1.0, 1.0).acos()
    }

    /// Largest principal angle to another subspace of the same dimension;
    /// zero iff the subspaces coincide.
    pub fn max_angle_to(&self, other: &Subspace) -> f64 {
        principal_angles(self, other)
            .map(|a| a.last().copied().unwrap_or(0.0))
            .unwrap_or(std::f64::consts::FRAC_PI_2)
    }

    /// Defect of the orthonormality invariant: max |B^T B - I|.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.basis.transpose() * &self.basis;
        let k = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// A square linear map with an optional verified-invertibility flag.
#[derive(Debug, Clone)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    det_nonzero: bool,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        LinearMap { matrix, det_nonzero: false }
    }

    /// Builds the map and verifies sigma_min > 1e-12 * sigma_max.
    pub fn verified_invertible(matrix: DMatrix<f64>) -> Result<Self, LinalgError> {
        let (lo, hi) = sigma_extremes(&matrix);
        let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        if ratio <= INVERTIBILITY_FLOOR {
            return Err(LinalgError::NotInvertible { ratio });
        }
        Ok(LinearMap { matrix, det_nonzero: true })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_verified_invertible(&self) -> bool {
        self.det_nonzero
    }

    pub fn inverse(&self) -> Result<LinearMap, LinalgError> {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or(LinalgError::NotInvertible { ratio: 0.0 })?;
        Ok(LinearMap { matrix: inv, det_nonzero: self.det_nonzero })
    }
}

impl From<DMatrix<f64>> for LinearMap {
    fn from(matrix: DMatrix<f64>) -> Self {
        LinearMap::new(matrix)
    }
}

/// An inner product [u, v] = u^T G v that makes a chosen splitting orthonormal.
#[derive(Debug, Clone)]
pub struct AdaptedMetric {
    pub base_point_id: usize,
    pub gram: DMatrix<f64>,
}

impl AdaptedMetric {
    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        (v.transpose() * &self.gram * v)[(0, 0)].max(0.0).sqrt()
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (u.transpose() * &self.gram * v)[(0, 0)]
    }

    /// A factor S with S^T S = gram, so that the adapted norm of v is |S v|.
    pub fn factor(&self) -> Result<DMatrix<f64>, LinalgError> {
        let chol = nalgebra::Cholesky::new(self.gram.clone())
            .ok_or(LinalgError::NotInvertible { ratio: 0.0 })?;
        Ok(chol.l().transpose())
    }
}

/// Largest and smallest singular values of a (possibly rectangular) matrix.
pub fn sigma_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.clone().svd(false, false).singular_values;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for s in sv.iter() {
        lo = lo.min(*s);
        hi = hi.max(*s);
    }
    if !lo.is_finite() {
        lo = 0.0;
    }
    (lo, hi)
}

pub fn sigma_max(m: &DMatrix<f64>) -> f64 {
    sigma_extremes(m).1
}

pub fn sigma_min(m: &DMatrix<f64>) -> f64 {
    sigma_extremes(m).0
}

/// SVD with singular values sorted descending; returns (sigma, U, V).
pub fn svd_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd with u requested");
    let vt = svd.v_t.expect("svd with v_t requested");
    let s = svd.singular_values;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    let sigma: Vec<f64> = idx.iter().map(|&i| s[i]).collect();
    let ucols: Vec<DVector<f64>> = idx.iter().map(|&i| u.column(i).into_owned()).collect();
    let vcols: Vec<DVector<f64>> = idx
        .iter()
        .map(|&i| vt.row(i).transpose().into_owned())
        .collect();
    (
        sigma,
        DMatrix::from_columns(&ucols),
        DMatrix::from_columns(&vcols),
    )
}

fn check_dims(l: &LinearMap, e: &Subspace) -> Result<(), LinalgError> {
    if l.dim() != e.ambient_dim() {
        return Err(LinalgError::Dimension { expected: l.dim(), got: e.ambient_dim() });
    }
    Ok(())
}

/// sup over unit v in E of |L v|, as the largest singular value of L B_E.
pub fn subspace_norm(l: &LinearMap, e: &Subspace) -> Result<f64, LinalgError> {
    check_dims(l, e)?;
    Ok(sigma_max(&(l.matrix() * e.basis())))
}

/// inf over unit v in E of |L v|, as the smallest singular value of L B_E.
pub fn minimal_norm(l: &LinearMap, e: &Subspace) -> Result<f64, LinalgError> {
    check_dims(l, e)?;
    Ok(sigma_min(&(l.matrix() * e.basis())))
}

/// Orthogonal projection I - v v^T off a unit flow direction.
pub fn flow_projection(x_direction: &DVector<f64>) -> Result<LinearMap, LinalgError> {
    let norm = x_direction.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(LinalgError::SingularDirection { norm });
    }
    let n = x_direction.len();
    let proj = DMatrix::identity(n, n) - x_direction * x_direction.transpose();
    Ok(LinearMap::new(proj))
}

/// Principal angles between two subspaces, sorted ascending, in [0, pi/2].
pub fn principal_angles(e: &Subspace, f: &Subspace) -> Result<Vec<f64>, LinalgError> {
    if e.ambient_dim() != f.ambient_dim() {
        return Err(LinalgError::Dimension {
            expected: e.ambient_dim(),
            got: f.ambient_dim(),
        });
    }
    let m = e.basis().transpose() * f.basis();
    let sv = m.svd(false, false).singular_values;
    let mut angles: Vec<f64> = sv.iter().map(|s| s.clamp(-1.0, 1.0).acos()).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(angles)
}

/// Smallest principal angle between two subspaces.
pub fn min_principal_angle(e: &Subspace, f: &Subspace) -> Result<f64, LinalgError> {
    Ok(principal_angles(e, f)?
        .first()
        .copied()
        .unwrap_or(std::f64::consts::FRAC_PI_2))
}

/// Gram matrix of the inner product in which the concatenated basis
/// {e_i, X, f_j} of E + <X> + F is orthonormal: G = (B^-1)^T B^-1.
pub fn adapted_inner_product(
    e: &Subspace,
    x_dir: &DVector<f64>,
    f: &Subspace,
    base_point_id: usize,
) -> Result<AdaptedMetric, LinalgError> {
    let n = e.ambient_dim();
    if x_dir.len() != n || f.ambient_dim() != n {
        return Err(LinalgError::Dimension { expected: n, got: x_dir.len().max(f.ambient_dim()) });
    }
    if e.dim() + 1 + f.dim() != n {
        return Err(LinalgError::Dimension { expected: n, got: e.dim() + 1 + f.dim() });
    }
    let xnorm = x_dir.norm();
    if (xnorm - 1.0).abs() > 1e-10 {
        return Err(LinalgError::SingularDirection { norm: xnorm });
    }
    let x_sub = Subspace::line(x_dir)?;
    for (a, b) in [(e, &x_sub), (e, f), (&x_sub, f)] {
        let angle = min_principal_angle(a, b)?;
        if angle <= TRANSVERSALITY_MIN_ANGLE {
            return Err(LinalgError::DegenerateSplitting {
                angle,
                min: TRANSVERSALITY_MIN_ANGLE,
            });
        }
    }
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    for j in 0..e.dim() {
        cols.push(e.basis().column(j).into_owned());
    }
    cols.push(x_dir.clone());
    for j in 0..f.dim() {
        cols.push(f.basis().column(j).into_owned());
    }
    let b = DMatrix::from_columns(&cols);
    let b_inv = b
        .clone()
        .try_inverse()
        .ok_or(LinalgError::NotInvertible { ratio: 0.0 })?;
    let gram = b_inv.transpose() * &b_inv;
    // Symmetrize away roundoff.
    let gram = (&gram + gram.transpose()) * 0.5;
    Ok(AdaptedMetric { base_point_id, gram })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        loop {
            let m = random_matrix(rng, n);
            let (lo, hi) = sigma_extremes(&m);
            if lo > 1e-3 * hi {
                return m;
            }
        }
    }

    fn random_subspace(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Subspace {
        loop {
            let cols: Vec<DVector<f64>> = (0..k)
                .map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
                .collect();
            if let Ok(s) = Subspace::new(&cols) {
                return s;
            }
        }
    }

    #[test]
    fn subspace_norm_identity_is_one() {
        let l = LinearMap::new(DMatrix::identity(3, 3));
        let e = Subspace::coordinate(3, &[1]);
        assert_relative_eq!(subspace_norm(&l, &e).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn subspace_norm_axis_aligned_diagonal() {
        let l = LinearMap::new(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0])));
        let e = Subspace::coordinate(2, &[0]);
        assert_relative_eq!(subspace_norm(&l, &e).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn subspace_norm_matches_monte_carlo_sup() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_matrix(&mut rng, 4);
        let e = random_subspace(&mut rng, 4, 2);
        let l = LinearMap::new(m.clone());
        let exact = subspace_norm(&l, &e).unwrap();
        // Independent oracle: maximize |Lv| over random unit vectors of E.
        let mut best: f64 = 0.0;
        for _ in 0..100_000 {
            let c = DVector::from_fn(2, |_, _| rng.gen_range(-1.0f64..1.0));
            if c.norm() < 1e-6 {
                continue;
            }
            let v = e.basis() * (&c / c.norm());
            best = best.max((&m * v).norm());
        }
        assert!((exact - best).abs() < 1e-6 * exact.max(1.0), "{exact} vs {best}");
        assert!(best <= exact + 1e-12);
    }

    #[test]
    fn minimal_norm_trivial_cases() {
        let id = LinearMap::new(DMatrix::identity(3, 3));
        let e = Subspace::coordinate(3, &[0, 2]);
        assert_relative_eq!(minimal_norm(&id, &e).unwrap(), 1.0, epsilon = 1e-14);
        let l = LinearMap::new(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0])));
        let full = Subspace::coordinate(2, &[0, 1]);
        assert_relative_eq!(minimal_norm(&l, &full).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn minimal_norm_matches_inverse_route() {
        // Eq. (2') through the explicit inverse and the image subspace.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=6usize {
            let m = random_invertible(&mut rng, n);
            let e = random_subspace(&mut rng, n, 1 + n / 2);
            let l = LinearMap::verified_invertible(m.clone()).unwrap();
            let image = Subspace::from_cols(&(&m * e.basis())).unwrap();
            let direct = minimal_norm(&l, &e).unwrap();
            let via_inverse = 1.0 / subspace_norm(&l.inverse().unwrap(), &image).unwrap();
            let scale = subspace_norm(&l, &e).unwrap();
            assert!((direct - via_inverse).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let l = LinearMap::new(DMatrix::identity(3, 3));
        let e = Subspace::coordinate(2, &[0]);
        assert!(matches!(
            subspace_norm(&l, &e),
            Err(LinalgError::Dimension { .. })
        ));
    }

    #[test]
    fn flow_projection_coordinate_axis() {
        let v = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let p = flow_projection(&v).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 1.0]));
        assert!((p.matrix() - expected).abs().max() < 1e-15);
    }

    #[test]
    fn flow_projection_kernel_and_idempotence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut v = DVector::from_fn(4, |_, _| rng.gen_range(-1.0f64..1.0));
            v /= v.norm();
            let p = flow_projection(&v).unwrap();
            assert!((p.matrix() * &v).norm() < 1e-12);
            let defect = (p.matrix() * p.matrix() - p.matrix()).abs().max();
            assert!(defect < 1e-12);
            // Rank n-1 idempotent with unit operator norm.
            assert_relative_eq!(sigma_max(p.matrix()), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn flow_projection_rejects_zero() {
        let v = DVector::zeros(3);
        assert!(matches!(
            flow_projection(&v),
            Err(LinalgError::SingularDirection { .. })
        ));
    }

    #[test]
    fn principal_angles_examples() {
        let e1 = Subspace::coordinate(2, &[0]);
        let e2 = Subspace::coordinate(2, &[1]);
        let a = principal_angles(&e1, &e1).unwrap();
        assert!(a[0].abs() < 1e-12);
        let a = principal_angles(&e1, &e2).unwrap();
        assert_relative_eq!(a[0], std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        let diag = Subspace::line(&DVector::from_vec(vec![1.0, 1.0])).unwrap();
        let a = principal_angles(&e1, &diag).unwrap();
        assert_relative_eq!(a[0], std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn adapted_metric_orthogonal_input_gives_identity() {
        let e = Subspace::coordinate(3, &[0]);
        let f = Subspace::coordinate(3, &[2]);
        let x = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let m = adapted_inner_product(&e, &x, &f, 0).unwrap();
        assert!((&m.gram - DMatrix::identity(3, 3)).abs().max() < 1e-12);
    }

    #[test]
    fn adapted_metric_invariants() {
        let e = Subspace::coordinate(3, &[0]);
        let x = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let f = Subspace::line(&DVector::from_vec(vec![0.0, 1.0, 1.0])).unwrap();
        let m = adapted_inner_product(&e, &x, &f, 0).unwrap();
        // Symmetric positive definite.
        assert!((&m.gram - m.gram.transpose()).abs().max() < 1e-12);
        let eig = nalgebra::SymmetricEigen::new(m.gram.clone());
        assert!(eig.eigenvalues.iter().all(|&l| l > 0.0));
        // Blocks mutually gram-orthogonal, basis vectors unit length.
        let eb = e.basis().column(0).into_owned();
        let fb = f.basis().column(0).into_owned();
        assert!(m.inner(&eb, &x).abs() < 1e-10);
        assert!(m.inner(&eb, &fb).abs() < 1e-10);
        assert!(m.inner(&x, &fb).abs() < 1e-10);
        for v in [&eb, &x, &fb] {
            assert!((m.norm(v) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn adapted_metric_invariant_under_reorthonormalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let e = random_subspace(&mut rng, 4, 2);
        let f = random_subspace(&mut rng, 4, 1);
        let mut x = DVector::from_fn(4, |_, _| rng.gen_range(-1.0f64..1.0));
        x /= x.norm();
        let m1 = adapted_inner_product(&e, &x, &f, 0).unwrap();
        // Rotate E's basis in place; the metric must declare the same
        // subspaces mutually orthogonal.
        let c = std::f64::consts::FRAC_PI_6.cos();
        let s = std::f64::consts::FRAC_PI_6.sin();
        let b = e.basis();
        let re = Subspace::new(&[
            b.column(0).into_owned() * c + b.column(1).into_owned() * s,
            b.column(1).into_owned() * c - b.column(0).into_owned() * s,
        ])
        .unwrap();
        let m2 = adapted_inner_product(&re, &x, &f, 0).unwrap();
        for j in 0..2 {
            let ev = e.basis().column(j).into_owned();
            let fv = f.basis().column(0).into_owned();
            assert!(m2.inner(&ev, &fv).abs() < 1e-9);
            assert!(m2.inner(&ev, &x).abs() < 1e-9);
        }
        assert!((&m1.gram - &m2.gram).abs().max() < 1e-8);
    }

    #[test]
    fn adapted_metric_rejects_near_tangent_bundles() {
        let e = Subspace::coordinate(3, &[0]);
        let x = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let mut v = DVector::from_vec(vec![1.0, 1e-10, 0.0]);
        v /= v.norm();
        let f = Subspace::line(&v).unwrap();
        assert!(matches!(
            adapted_inner_product(&e, &x, &f, 0),
            Err(LinalgError::DegenerateSplitting { .. })
        ));
    }

    proptest! {
        #[test]
        fn eq2_prime_identity(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..=6usize);
            let k = rng.gen_range(1..n);
            let m = random_invertible(&mut rng, n);
            let e = random_subspace(&mut rng, n, k);
            let l = LinearMap::verified_invertible(m.clone()).unwrap();
            let image = Subspace::from_cols(&(&m * e.basis())).unwrap();
            let direct = minimal_norm(&l, &e).unwrap();
            let via = 1.0 / subspace_norm(&l.inverse().unwrap(), &image).unwrap();
            let scale = subspace_norm(&l, &e).unwrap();
            prop_assert!((direct - via).abs() <= 1e-10 * scale);
            prop_assert!(scale >= direct - 1e-12);
        }

        #[test]
        fn orthonormalization_gram_identity(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..=8usize);
            let k = rng.gen_range(1..=n);
            let s = random_subspace(&mut rng, n, k);
            prop_assert!(s.orthonormality_defect() < ORTHO_TOL);
            prop_assert_eq!(s.dim(), k);
        }
    }
}
