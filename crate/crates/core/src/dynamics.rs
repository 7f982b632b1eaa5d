//! Newton-Euler terms for agents and object, and the coupled object-space dynamics.
//!
//! Every body obeys `M v_dot + C v + g = wrench` with twist `v = [p_dot; omega]`
//! (inertial frame), `M = diag(m I, R I_b R^T)`, `C = diag(0, S(omega) R I_b R^T)` and
//! `g = [-m gravity; 0]`.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::linalg::{is_spd, skew};
use crate::pose::{PoseSE3, Twist6};

pub const STANDARD_GRAVITY: [f64; 3] = [0.0, 0.0, -9.81];

/// Mass, body-frame inertia and gravity vector of one rigid body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyParams {
    pub mass: f64,
    pub inertia_body: Matrix3<f64>,
    pub gravity: Vector3<f64>,
}

impl RigidBodyParams {
    pub fn new(mass: f64, inertia_body: Matrix3<f64>, gravity: Vector3<f64>) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        if !is_spd(&DMatrix::from_column_slice(3, 3, inertia_body.as_slice())) {
            return Err(Error::InvalidParameter("body inertia must be symmetric positive definite".into()));
        }
        if !gravity.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite gravity".into()));
        }
        Ok(RigidBodyParams { mass, inertia_body, gravity })
    }

    /// Diagonal body inertia under standard gravity.
    pub fn diagonal(mass: f64, inertia_diag: [f64; 3]) -> Result<Self> {
        Self::new(mass, Matrix3::from_diagonal(&Vector3::from(inertia_diag)), Vector3::from(STANDARD_GRAVITY))
    }
}

/// `M`, `C` and `g` of one body at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicTerms {
    pub m: Matrix6<f64>,
    pub c: Matrix6<f64>,
    pub g: Vector6<f64>,
}

pub fn body_terms(pose: &PoseSE3, twist: &Twist6, params: &RigidBodyParams) -> DynamicTerms {
    let inertia = pose.rotation * params.inertia_body * pose.rotation.transpose();
    let omega = twist.fixed_rows::<3>(3).into_owned();
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(params.mass * Matrix3::identity()));
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&inertia);
    let mut c = Matrix6::zeros();
    c.fixed_view_mut::<3, 3>(3, 3).copy_from(&(skew(&omega) * inertia));
    let mut g = Vector6::zeros();
    g.fixed_rows_mut::<3>(0).copy_from(&(-params.mass * params.gravity));
    DynamicTerms { m, c, g }
}

/// Block-diagonal stack of per-body terms.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedTerms {
    pub m: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub g: DVector<f64>,
}

impl StackedTerms {
    pub fn block_diagonal(bodies: &[DynamicTerms]) -> Self {
        let n = 6 * bodies.len();
        let mut m = DMatrix::zeros(n, n);
        let mut c = DMatrix::zeros(n, n);
        let mut g = DVector::zeros(n);
        for (k, b) in bodies.iter().enumerate() {
            m.fixed_view_mut::<6, 6>(6 * k, 6 * k).copy_from(&b.m);
            c.fixed_view_mut::<6, 6>(6 * k, 6 * k).copy_from(&b.c);
            g.fixed_rows_mut::<6>(6 * k).copy_from(&b.g);
        }
        StackedTerms { m, c, g }
    }

    /// Appends the object as the last body.
    pub fn with_object(&self, object: &DynamicTerms) -> Self {
        let n = self.g.len();
        let mut m = DMatrix::zeros(n + 6, n + 6);
        let mut c = DMatrix::zeros(n + 6, n + 6);
        m.view_mut((0, 0), (n, n)).copy_from(&self.m);
        c.view_mut((0, 0), (n, n)).copy_from(&self.c);
        m.fixed_view_mut::<6, 6>(n, n).copy_from(&object.m);
        c.fixed_view_mut::<6, 6>(n, n).copy_from(&object.c);
        let g = DVector::from_iterator(n + 6, self.g.iter().chain(object.g.iter()).copied());
        StackedTerms { m, c, g }
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }
}

/// `M_c`, `C_c`, `g_c` of the object with all agents rigidly attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledTerms {
    pub m: Matrix6<f64>,
    pub c: Matrix6<f64>,
    pub g: Vector6<f64>,
}

fn to6(m: DMatrix<f64>) -> Matrix6<f64> {
    Matrix6::from_iterator(m.iter().copied())
}

/// `M_c = M_O + G M G^T`, `C_c = C_O + G C G^T + G M G_dot^T`, `g_c = g_O + G g`.
pub fn coupled_terms(
    agents: &StackedTerms,
    object: &DynamicTerms,
    g: &DMatrix<f64>,
    g_dot: &DMatrix<f64>,
) -> Result<CoupledTerms> {
    if g.ncols() != agents.dim() || g_dot.ncols() != agents.dim() {
        return Err(Error::DimensionMismatch(format!(
            "G has {} columns for {} stacked agent coordinates",
            g.ncols(),
            agents.dim()
        )));
    }
    let gm = g * &agents.m;
    let m = object.m + to6(&gm * g.transpose());
    let c = object.c + to6(g * &agents.c * g.transpose()) + to6(&gm * g_dot.transpose());
    let gv = g * &agents.g;
    let gvec = object.g + Vector6::from_iterator(gv.iter().copied());
    if m.cholesky().is_none() {
        return Err(Error::NonSpd("M_c"));
    }
    Ok(CoupledTerms { m, c, g: gvec })
}

/// Accelerations the bodies would have without the grasp constraints:
/// `alpha = M_bar^{-1}([u; 0] - C_bar v_bar - g_bar)` for agents plus object, and
/// `alpha_int = M^{-1}(u - C v - g)` for the agents alone.
pub fn unconstrained_accelerations(
    agents: &StackedTerms,
    object: &DynamicTerms,
    u: &DVector<f64>,
    v: &DVector<f64>,
    v_o: &Twist6,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = agents.dim();
    if u.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch(format!("expected {n} agent coordinates")));
    }
    let chol = agents.m.clone().cholesky().ok_or(Error::NonSpd("M"))?;
    let alpha_int = chol.solve(&(u - &agents.c * v - &agents.g));
    let obj = object.m.cholesky().ok_or(Error::NonSpd("M_O"))?;
    let alpha_o = obj.solve(&(-object.c * v_o - object.g));
    let alpha = DVector::from_iterator(n + 6, alpha_int.iter().chain(alpha_o.iter()).copied());
    Ok((alpha, alpha_int))
}
