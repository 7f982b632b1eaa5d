//! Small dense linear algebra used throughout the crate.
//!
//! Everything here works on `nalgebra` matrices. Pseudoinverses, ranks and
//! subspace bases all come from one SVD path with a *relative* singular-value
//! cutoff: a singular value `s` counts as nonzero when `s > tol * s_max`.

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};

/// Relative singular-value cutoff used by [`pinv`] and rank computations.
pub const DEFAULT_PINV_TOL: f64 = 1e-10;

/// Largest principal angle (rad) below which two subspaces are considered equal.
pub const DEFAULT_SUBSPACE_ANGLE_TOL: f64 = 1e-7;

/// Tolerance on `|R^T R - I|_F` for a matrix to count as a rotation.
pub const ROTATION_TOL: f64 = 1e-9;

/// The skew-symmetric matrix `S(a)` with `S(a) b = a x b`.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Inverse of [`skew`]. Fails when `|M + M^T|_F > 1e-8`.
pub fn unskew(m: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let asym = (m + m.transpose()).norm();
    if !(asym <= 1e-8) {
        return Err(Error::NotAntisymmetric(asym));
    }
    Ok(vee(m))
}

/// Reads the axial vector of the antisymmetric part of `m` without checking.
pub(crate) fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// `P_r(x) = I - x x^T / |x|^2`, the projector onto the orthogonal complement of `x`.
pub fn proj_complement(x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n2 = x.norm_squared();
    if !(n2.sqrt() > 1e-12) {
        return Err(Error::ZeroVector);
    }
    Ok(DMatrix::identity(x.len(), x.len()) - x * x.transpose() / n2)
}

/// Three-dimensional [`proj_complement`] for unit or non-unit `x`.
pub(crate) fn proj_complement3(x: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::identity() - x * x.transpose() / x.norm_squared()
}

/// Thin SVD with singular values sorted in decreasing order.
struct SortedSvd {
    u: DMatrix<f64>,
    s: Vec<f64>,
    v: DMatrix<f64>,
}

impl SortedSvd {
    fn new(a: &DMatrix<f64>) -> Self {
        let svd = to_faer(a).thin_svd().expect("SVD of a finite matrix");
        let (u, sv, v) = (svd.U(), svd.S().column_vector(), svd.V());
        let mut order: Vec<usize> = (0..sv.nrows()).collect();
        order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
        let s = order.iter().map(|&i| sv[i]).collect();
        let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
        let v = DMatrix::from_fn(v.nrows(), order.len(), |r, c| v[(r, order[c])]);
        SortedSvd { u, s, v }
    }

    /// SVD whose `v` is square (`cols x cols`), obtained by zero-padding wide inputs.
    fn with_full_v(a: &DMatrix<f64>) -> Self {
        if a.nrows() >= a.ncols() {
            Self::new(a)
        } else {
            let mut padded = DMatrix::zeros(a.ncols(), a.ncols());
            padded.rows_mut(0, a.nrows()).copy_from(a);
            Self::new(&padded)
        }
    }

    fn rank(&self, tol: f64) -> usize {
        let cutoff = tol * self.s.first().copied().unwrap_or(0.0);
        self.s.iter().filter(|&&s| s > cutoff && s > 0.0).count()
    }
}

// nalgebra's SVD returns inaccurate factors for some exactly rank-deficient
// inputs, which is the common case here; the decomposition itself is done by faer.
fn to_faer(a: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Singular values of `a`, largest first.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s = to_faer(a).singular_values().expect("SVD of a finite matrix");
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Numerical rank with relative cutoff `tol * s_max`.
pub fn numerical_rank(a: &DMatrix<f64>, tol: f64) -> usize {
    let s = singular_values(a);
    let cutoff = tol * s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > cutoff && x > 0.0).count()
}

/// Moore-Penrose pseudoinverse via SVD with relative cutoff `tol * s_max`.
pub fn pinv(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    pinv_with_rank(a, tol).0
}

/// [`pinv`] that also reports the numerical rank it used.
pub fn pinv_with_rank(a: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, usize) {
    if a.nrows() == 0 || a.ncols() == 0 {
        return (DMatrix::zeros(a.ncols(), a.nrows()), 0);
    }
    let svd = SortedSvd::new(a);
    let rank = svd.rank(tol);
    let mut out = DMatrix::zeros(a.ncols(), a.nrows());
    for k in 0..rank {
        let v = svd.v.column(k);
        let u = svd.u.column(k);
        out.ger(1.0 / svd.s[k], &v, &u, 1.0);
    }
    (out, rank)
}

/// Orthonormal basis of a subspace of `R^n`, stored as the columns of a matrix.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    basis: DMatrix<f64>,
    tol: f64,
}

impl SubspaceBasis {
    /// Orthonormalizes the columns of `columns` (dropping numerically dependent ones).
    pub fn span_of(columns: &DMatrix<f64>, tol: f64) -> Self {
        column_space_basis(columns, tol)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Singular-value cutoff the basis was built with.
    pub fn tol(&self) -> f64 {
        self.tol
    }
}

/// Orthonormal basis of `null(A)`; its dimension is `cols(A) - rank(A)`.
pub fn nullspace_basis(a: &DMatrix<f64>, tol: f64) -> SubspaceBasis {
    let svd = SortedSvd::with_full_v(a);
    let rank = svd.rank(tol);
    let n = a.ncols();
    SubspaceBasis { basis: svd.v.columns(rank, n - rank).into_owned(), tol }
}

/// Orthonormal basis of `range(A^T)`, the row space of `A`.
pub fn row_space_basis(a: &DMatrix<f64>, tol: f64) -> SubspaceBasis {
    let svd = SortedSvd::with_full_v(a);
    let rank = svd.rank(tol);
    SubspaceBasis { basis: svd.v.columns(0, rank).into_owned(), tol }
}

/// Orthonormal basis of `range(A)`.
pub fn column_space_basis(a: &DMatrix<f64>, tol: f64) -> SubspaceBasis {
    if a.ncols() == 0 {
        return SubspaceBasis { basis: DMatrix::zeros(a.nrows(), 0), tol };
    }
    let svd = SortedSvd::new(a);
    let rank = svd.rank(tol);
    SubspaceBasis { basis: svd.u.columns(0, rank).into_owned(), tol }
}

/// Largest principal angle between two subspaces of equal dimension.
///
/// Computed from the sine, `|V - U U^T V|_2`, which stays accurate for tiny angles
/// where `acos` of the cosines would round to zero.
pub fn max_principal_angle(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<f64> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspaces live in R^{} and R^{}",
            u.ambient_dim(),
            v.ambient_dim()
        )));
    }
    if u.dim() != v.dim() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    if v.dim() == 0 {
        return Ok(0.0);
    }
    let (um, vm) = (u.matrix(), v.matrix());
    let residual = vm - um * (um.transpose() * vm);
    let sin = singular_values(&residual).first().copied().unwrap_or(0.0);
    Ok(sin.min(1.0).asin())
}

/// True iff both subspaces have the same dimension and their largest principal
/// angle is below `tol`.
pub fn subspaces_equal(u: &SubspaceBasis, v: &SubspaceBasis, tol: f64) -> Result<bool> {
    let angle = max_principal_angle(u, v)?;
    Ok(u.dim() == v.dim() && angle < tol)
}

/// `exp(S(omega * dt))` by the Rodrigues formula.
///
/// Below `|omega| dt < 1e-10` the second-order Taylor polynomial is used, which is
/// exact to machine precision there and returns `I` for `omega = 0`.
pub fn rot_exp(omega: &Vector3<f64>, dt: f64) -> Matrix3<f64> {
    let phi = omega * dt;
    let theta = phi.norm();
    let s = skew(&phi);
    if theta < 1e-10 {
        return Matrix3::identity() + s + 0.5 * s * s;
    }
    let a = theta.sin() / theta;
    let b = (1.0 - theta.cos()) / (theta * theta);
    Matrix3::identity() + a * s + b * s * s
}

/// Rotation from roll-pitch-yaw angles `(phi, theta, psi)`, Z-Y-X intrinsic:
/// `R = R_z(psi) R_y(theta) R_x(phi)`.
pub fn euler_to_rot(eta: &Vector3<f64>) -> Matrix3<f64> {
    let (sr, cr) = eta.x.sin_cos();
    let (sp, cp) = eta.y.sin_cos();
    let (sy, cy) = eta.z.sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cr, -sr, 0.0, sr, cr);
    let ry = Matrix3::new(cp, 0.0, sp, 0.0, 1.0, 0.0, -sp, 0.0, cp);
    let rz = Matrix3::new(cy, -sy, 0.0, sy, cy, 0.0, 0.0, 0.0, 1.0);
    rz * ry * rx
}

/// The matrix `E(eta)` mapping Z-Y-X Euler rates to the inertial angular velocity,
/// `omega = E(eta) eta_dot`, together with its time derivative along `eta_dot`.
pub fn euler_rate_map(eta: &Vector3<f64>, eta_dot: &Vector3<f64>) -> (Matrix3<f64>, Matrix3<f64>) {
    let (sp, cp) = eta.y.sin_cos();
    let (sy, cy) = eta.z.sin_cos();
    let (dp, dy) = (eta_dot.y, eta_dot.z);
    // columns: R_z R_y e_x, R_z e_y, e_z
    let e = Matrix3::new(cy * cp, -sy, 0.0, sy * cp, cy, 0.0, -sp, 0.0, 1.0);
    let e_dot = Matrix3::new(
        -sy * cp * dy - cy * sp * dp,
        -cy * dy,
        0.0,
        cy * cp * dy - sy * sp * dp,
        -sy * dy,
        0.0,
        -cp * dp,
        0.0,
        0.0,
    );
    (e, e_dot)
}

/// Nearest rotation matrix in the Frobenius sense (polar factor).
pub fn reorthonormalize(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * v_t
}

/// Checks the rotation invariant `|R^T R - I|_F < 1e-9`, `det R > 0`.
pub fn check_rotation(r: &Matrix3<f64>) -> Result<()> {
    if !r.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidRotation("non-finite entries".into()));
    }
    let ortho = (r.transpose() * r - Matrix3::identity()).norm();
    if ortho >= ROTATION_TOL {
        return Err(Error::InvalidRotation(format!("|R^T R - I|_F = {ortho:e}")));
    }
    if r.determinant() <= 0.0 {
        return Err(Error::InvalidRotation("det(R) <= 0".into()));
    }
    Ok(())
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = 0.5 * (m + m.transpose());
    SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// True when `m` is symmetric (relative tolerance `1e-10`) with a positive Cholesky factor.
pub fn is_spd(m: &DMatrix<f64>) -> bool {
    if m.nrows() != m.ncols() || !m.iter().all(|x| x.is_finite()) {
        return false;
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() > 1e-10 * scale {
        return false;
    }
    m.clone().cholesky().is_some()
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.inverse()).ok_or(Error::NonSpd(what))
}

/// Symmetric square root `M^{1/2}` and inverse square root `M^{-1/2}` of an SPD matrix.
pub fn spd_sqrt(m: &DMatrix<f64>, what: &'static str) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::new(0.5 * (m + m.transpose()));
    if !eig.eigenvalues.iter().all(|&l| l > 0.0) {
        return Err(Error::NonSpd(what));
    }
    let q = &eig.eigenvectors;
    let root = DVector::from_iterator(m.nrows(), eig.eigenvalues.iter().map(|l| l.sqrt()));
    let half = q * DMatrix::from_diagonal(&root) * q.transpose();
    let inv_half = q * DMatrix::from_diagonal(&root.map(|r| 1.0 / r)) * q.transpose();
    Ok((half, inv_half))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn mat(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    #[test]
    fn skew_examples() {
        let s = skew(&Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(s, Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(skew(&Vector3::zeros()), Matrix3::zeros());
        let s = skew(&Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(s, Matrix3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0));
    }

    #[test]
    fn unskew_examples() {
        assert_eq!(unskew(&Matrix3::zeros()).unwrap(), Vector3::zeros());
        let a = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(unskew(&skew(&a)).unwrap(), a);
        let m = Matrix3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0);
        assert_eq!(unskew(&m).unwrap(), a);
        assert!(matches!(unskew(&Matrix3::identity()), Err(Error::NotAntisymmetric(_))));
    }

    #[test]
    fn proj_complement_examples() {
        let p = proj_complement(&DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        assert_relative_eq!(p, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 1.0])));
        let p = proj_complement(&DVector::from_vec(vec![0.0, 2.0, 0.0])).unwrap();
        assert_relative_eq!(p, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 1.0])));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let p = proj_complement(&DVector::from_vec(vec![r, r, 0.0])).unwrap();
        let expected = mat(3, 3, &[0.5, -0.5, 0.0, -0.5, 0.5, 0.0, 0.0, 0.0, 1.0]);
        assert_relative_eq!(p, expected, epsilon = 1e-15);
        assert_eq!(proj_complement(&DVector::zeros(3)), Err(Error::ZeroVector));
    }

    #[test]
    fn pinv_examples() {
        let d = mat(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(pinv(&d, DEFAULT_PINV_TOL), mat(2, 2, &[0.5, 0.0, 0.0, 0.0]));
        let i6 = DMatrix::<f64>::identity(6, 6);
        assert_relative_eq!(pinv(&i6, DEFAULT_PINV_TOL), i6, epsilon = 1e-14);
    }

    #[test]
    fn nullspace_examples() {
        let z = nullspace_basis(&DMatrix::zeros(3, 3), DEFAULT_PINV_TOL);
        assert_eq!(z.dim(), 3);
        assert_relative_eq!(z.matrix().transpose() * z.matrix(), DMatrix::identity(3, 3), epsilon = 1e-14);

        let n = nullspace_basis(&mat(1, 2, &[1.0, 1.0]), DEFAULT_PINV_TOL);
        assert_eq!(n.dim(), 1);
        let c = n.matrix().column(0);
        assert_relative_eq!(c[0].abs(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_relative_eq!(c[0], -c[1], epsilon = 1e-14);
    }

    #[test]
    fn subspace_examples() {
        let e1 = SubspaceBasis::span_of(&mat(3, 1, &[1.0, 0.0, 0.0]), 1e-12);
        let e2 = SubspaceBasis::span_of(&mat(3, 1, &[0.0, 1.0, 0.0]), 1e-12);
        assert!(subspaces_equal(&e1, &e1, DEFAULT_SUBSPACE_ANGLE_TOL).unwrap());
        assert!(!subspaces_equal(&e1, &e2, DEFAULT_SUBSPACE_ANGLE_TOL).unwrap());
        let other = SubspaceBasis::span_of(&mat(2, 1, &[1.0, 0.0]), 1e-12);
        assert!(matches!(subspaces_equal(&e1, &other, 1e-7), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn principal_angle_resolves_tiny_tilts() {
        let eps = 1e-9;
        let a = SubspaceBasis::span_of(&mat(2, 1, &[1.0, 0.0]), 1e-12);
        let b = SubspaceBasis::span_of(&mat(2, 1, &[1.0, eps]), 1e-12);
        assert_relative_eq!(max_principal_angle(&a, &b).unwrap(), eps, max_relative = 1e-6);
    }

    #[test]
    fn rot_exp_examples() {
        let r = rot_exp(&Vector3::new(0.0, 0.0, PI / 2.0), 1.0);
        assert_relative_eq!(r * Vector3::x(), Vector3::y(), epsilon = 1e-15);
        assert_eq!(rot_exp(&Vector3::zeros(), 0.3), Matrix3::identity());
        let axis = Vector3::new(1.0, 1.0, 1.0) / 3f64.sqrt();
        assert_relative_eq!(rot_exp(&axis, 2.0 * PI), Matrix3::identity(), epsilon = 1e-9);
    }

    #[test]
    fn euler_examples() {
        assert_eq!(euler_to_rot(&Vector3::zeros()), Matrix3::identity());
        let r = euler_to_rot(&Vector3::new(0.0, 0.0, PI / 2.0));
        assert_relative_eq!(r * Vector3::x(), Vector3::y(), epsilon = 1e-15);
        // product of elementary rotations, each built independently from rot_exp
        let eta = Vector3::new(0.1, 0.2, 0.3);
        let expected = rot_exp(&Vector3::z(), 0.3) * rot_exp(&Vector3::y(), 0.2) * rot_exp(&Vector3::x(), 0.1);
        assert_relative_eq!(euler_to_rot(&eta), expected, epsilon = 1e-14);
    }

    #[test]
    fn euler_rate_map_matches_finite_differences() {
        let eta = Vector3::new(0.3, -0.4, 1.1);
        let eta_dot = Vector3::new(0.7, -0.2, 0.5);
        let h = 1e-6;
        let r = euler_to_rot(&eta);
        let r_dot = (euler_to_rot(&(eta + h * eta_dot)) - euler_to_rot(&(eta - h * eta_dot))) / (2.0 * h);
        let omega_fd = vee(&(r_dot * r.transpose()));
        let (e, _) = euler_rate_map(&eta, &eta_dot);
        assert_relative_eq!(e * eta_dot, omega_fd, epsilon = 1e-8);
        // derivative of E along a flow eta(t) = eta + t eta_dot
        let (ep, _) = euler_rate_map(&(eta + h * eta_dot), &eta_dot);
        let (em, _) = euler_rate_map(&(eta - h * eta_dot), &eta_dot);
        let (_, e_dot) = euler_rate_map(&eta, &eta_dot);
        assert_relative_eq!(e_dot, (ep - em) / (2.0 * h), epsilon = 1e-8);
    }

    #[test]
    fn reorthonormalize_projects_to_so3() {
        let r = euler_to_rot(&Vector3::new(0.2, 0.1, -0.3));
        let noisy = r + Matrix3::from_element(1e-7);
        let fixed = reorthonormalize(&noisy);
        check_rotation(&fixed).unwrap();
        assert_relative_eq!(fixed, r, epsilon = 1e-6);
    }

    #[test]
    fn spd_sqrt_squares_back() {
        let m = mat(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let (h, ih) = spd_sqrt(&m, "test").unwrap();
        assert_relative_eq!(&h * &h, m, epsilon = 1e-12);
        assert_relative_eq!(&h * &ih, DMatrix::identity(3, 3), epsilon = 1e-12);
        assert!(spd_sqrt(&(-m), "neg").is_err());
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn pinv_of_wide_full_row_rank() {
        let a = random_matrix(6, 24, 7);
        let p = pinv(&a, DEFAULT_PINV_TOL);
        assert_relative_eq!(&a * &p, DMatrix::identity(6, 6), epsilon = 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn skew_is_cross_product(a in prop::array::uniform3(-10.0..10.0f64), b in prop::array::uniform3(-10.0..10.0f64)) {
            let (a, b) = (Vector3::from(a), Vector3::from(b));
            prop_assert!((skew(&a) * b - a.cross(&b)).norm() <= 1e-12 * (1.0 + a.norm() * b.norm()));
            prop_assert_eq!(skew(&a).transpose(), -skew(&a));
        }

        #[test]
        fn penrose_identities(rows in 1usize..=42, cols in 1usize..=42, rank_cap in 1usize..=42, seed in any::<u64>()) {
            // rank-deficient inputs built as products of thin factors
            let k = rank_cap.min(rows).min(cols);
            let a = random_matrix(rows, k, seed) * random_matrix(k, cols, seed ^ 0x9e37);
            let p = pinv(&a, DEFAULT_PINV_TOL);
            let scale_a = a.norm().max(1.0);
            let scale_p = p.norm().max(1.0);
            let s = scale_a * scale_p;
            prop_assert!((&a * &p * &a - &a).norm() <= 1e-8 * scale_a * s);
            prop_assert!((&p * &a * &p - &p).norm() <= 1e-8 * scale_p * s);
            let ap = &a * &p;
            let pa = &p * &a;
            prop_assert!((&ap - ap.transpose()).norm() <= 1e-8 * s);
            prop_assert!((&pa - pa.transpose()).norm() <= 1e-8 * s);
        }

        #[test]
        fn pinv_transpose_identity(rows in 1usize..=12, extra in 0usize..=30, seed in any::<u64>()) {
            // property: H^+ = H^T (H H^T)^+ for full-row-rank H
            let h = random_matrix(rows, rows + extra, seed);
            let lhs = pinv(&h, DEFAULT_PINV_TOL);
            let rhs = h.transpose() * pinv(&(&h * h.transpose()), DEFAULT_PINV_TOL);
            prop_assert!((&lhs - &rhs).norm() <= 1e-8 * lhs.norm().max(1.0));
        }

        #[test]
        fn rank_nullity(rows in 1usize..=20, cols in 1usize..=20, k in 1usize..=20, seed in any::<u64>()) {
            let k = k.min(rows).min(cols);
            let a = random_matrix(rows, k, seed) * random_matrix(k, cols, seed.wrapping_add(1));
            let null = nullspace_basis(&a, DEFAULT_PINV_TOL);
            let row = row_space_basis(&a, DEFAULT_PINV_TOL);
            prop_assert_eq!(null.dim() + row.dim(), cols);
            prop_assert!((&a * null.matrix()).norm() <= 1e-10 * a.norm().max(1.0));
            let z = null.matrix();
            prop_assert!((z.transpose() * z - DMatrix::identity(z.ncols(), z.ncols())).norm() <= 1e-9);
        }

        #[test]
        fn rot_exp_stays_orthonormal(w in prop::array::uniform3(-5.0..5.0f64), dt in 0.0..2.0f64) {
            let r = rot_exp(&Vector3::from(w), dt);
            prop_assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-12);
            prop_assert!(r.determinant() > 0.0);
        }
    }
}
