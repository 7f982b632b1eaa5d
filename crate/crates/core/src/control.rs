//! Trajectory tracking for the grasped object with a chosen wrench distribution.
//!
//! The control law is inverse dynamics in object space. It commands
//! `v_O_dot = v_d_dot - K_d e_v - K_p e_x` and splits the required object wrench
//! over the agents through a right inverse `G*` of the grasp matrix. With the
//! inertia-weighted `G*` the agents exert no internal forces at all.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::linalg::{euler_rate_map, euler_to_rot, unskew};
use crate::pose::{PoseSE3, Twist6};
use crate::system::Snapshot;

/// Orientations with `e_O` at or above this are treated as antipodal.
pub const ANTIPODAL_LIMIT: f64 = 2.0 - 1e-9;

/// Feedback gains `K_p = diag(K_p1, k_p2 I)` and `K_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub kp_position: Matrix3<f64>,
    pub kp_orientation: f64,
    pub kd: Matrix6<f64>,
}

impl Gains {
    pub fn new(kp_position: Matrix3<f64>, kp_orientation: f64, kd: Matrix6<f64>) -> Result<Self> {
        let spd3 = (kp_position - kp_position.transpose()).amax() <= 1e-12 * kp_position.amax()
            && kp_position.cholesky().is_some();
        let spd6 = (kd - kd.transpose()).amax() <= 1e-12 * kd.amax() && kd.cholesky().is_some();
        if !spd3 {
            return Err(Error::InvalidParameter("position gain must be symmetric positive definite".into()));
        }
        if !(kp_orientation > 0.0 && kp_orientation.is_finite()) {
            return Err(Error::InvalidParameter("orientation gain must be positive".into()));
        }
        if !spd6 {
            return Err(Error::InvalidParameter("damping gain must be symmetric positive definite".into()));
        }
        Ok(Gains { kp_position, kp_orientation, kd })
    }

    pub fn diagonal(kp_position: [f64; 3], kp_orientation: f64, kd: [f64; 6]) -> Result<Self> {
        Self::new(
            Matrix3::from_diagonal(&Vector3::from(kp_position)),
            kp_orientation,
            Matrix6::from_diagonal(&Vector6::from(kd)),
        )
    }
}

/// Sinusoidal reference around a base pose:
/// `p_d = p_0 + offset + [a_x sin(w_p t + phase), a_y cos(w_p t + phase), a_z sin(w_p t + phase)]`,
/// `eta_d = eta_0 + [b_i sin(w_i t + phase)]` with Z-Y-X Euler angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySpec {
    pub base_position: Vector3<f64>,
    pub base_euler: Vector3<f64>,
    pub position_amplitude: Vector3<f64>,
    pub position_offset: Vector3<f64>,
    pub orientation_amplitude: Vector3<f64>,
    pub w_p: f64,
    /// Angular frequencies of roll, pitch and yaw.
    pub w_eta: Vector3<f64>,
    pub phase: f64,
}

/// Reference pose, twist and twist rate at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredState {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
    pub euler: Vector3<f64>,
    pub twist: Twist6,
    pub twist_rate: Twist6,
}

pub fn desired_trajectory(t: f64, spec: &TrajectorySpec) -> Result<DesiredState> {
    let arg = spec.w_p * t + spec.phase;
    let (s, c) = arg.sin_cos();
    let a = spec.position_amplitude;
    let w = spec.w_p;
    let position = spec.base_position + spec.position_offset + Vector3::new(a.x * s, a.y * c, a.z * s);
    let velocity = w * Vector3::new(a.x * c, -a.y * s, a.z * c);
    let accel = -w * w * Vector3::new(a.x * s, a.y * c, a.z * s);

    let b = spec.orientation_amplitude;
    let args = spec.w_eta * t + Vector3::repeat(spec.phase);
    let euler = spec.base_euler + b.component_mul(&args.map(f64::sin));
    let euler_dot = b.component_mul(&spec.w_eta).component_mul(&args.map(f64::cos));
    let euler_ddot = -b.component_mul(&spec.w_eta.component_mul(&spec.w_eta)).component_mul(&args.map(f64::sin));
    if euler.y.cos().abs() < 1e-6 {
        return Err(Error::EulerRateSingularity(euler.y));
    }
    let (e, e_dot) = euler_rate_map(&euler, &euler_dot);
    let omega = e * euler_dot;
    let omega_dot = e * euler_ddot + e_dot * euler_dot;

    let mut twist = Twist6::zeros();
    twist.fixed_rows_mut::<3>(0).copy_from(&velocity);
    twist.fixed_rows_mut::<3>(3).copy_from(&omega);
    let mut twist_rate = Twist6::zeros();
    twist_rate.fixed_rows_mut::<3>(0).copy_from(&accel);
    twist_rate.fixed_rows_mut::<3>(3).copy_from(&omega_dot);
    Ok(DesiredState { position, rotation: euler_to_rot(&euler), euler, twist, twist_rate })
}

/// `e_O = tr(I - R_d^T R_O) / 2` and `e_R = S^{-1}(R_d^T R_O - R_O^T R_d)`.
pub fn orientation_errors(r_o: &Matrix3<f64>, r_d: &Matrix3<f64>) -> (f64, Vector3<f64>) {
    let rel = r_d.transpose() * r_o;
    let e_o = (0.5 * (3.0 - rel.trace())).clamp(0.0, 2.0);
    let e_r = unskew(&(rel - rel.transpose())).expect("difference of a matrix and its transpose is antisymmetric");
    (e_o, e_r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingErrors {
    pub e_p: Vector3<f64>,
    pub e_o: f64,
    pub e_r: Vector3<f64>,
    pub e_v: Twist6,
    /// `[e_p; R_O e_R / (2 (2 - e_O)^2)]`.
    pub e_x: Vector6<f64>,
}

pub fn tracking_errors(pose: &PoseSE3, twist: &Twist6, desired: &DesiredState) -> Result<TrackingErrors> {
    let (e_o, e_r) = orientation_errors(&pose.rotation, &desired.rotation);
    if e_o >= ANTIPODAL_LIMIT {
        return Err(Error::AntipodalOrientation(e_o));
    }
    let e_p = pose.position - desired.position;
    let mut e_x = Vector6::zeros();
    e_x.fixed_rows_mut::<3>(0).copy_from(&e_p);
    let k = 1.0 / (2.0 * (2.0 - e_o).powi(2));
    e_x.fixed_rows_mut::<3>(3).copy_from(&(k * pose.rotation * e_r));
    Ok(TrackingErrors { e_p, e_o, e_r, e_v: twist - desired.twist, e_x })
}

/// `V = e_p^T K_p1 e_p / 2 + k_p2 / (2 - e_O) + e_v^T e_v / 2`.
pub fn lyapunov(errors: &TrackingErrors, gains: &Gains) -> f64 {
    0.5 * errors.e_p.dot(&(gains.kp_position * errors.e_p))
        + gains.kp_orientation / (2.0 - errors.e_o)
        + 0.5 * errors.e_v.norm_squared()
}

/// Commanded object acceleration `v_d_dot - K_d e_v - K_p e_x`.
pub fn commanded_acceleration(errors: &TrackingErrors, desired: &DesiredState, gains: &Gains) -> Twist6 {
    let mut kp_ex = Vector6::zeros();
    kp_ex.fixed_rows_mut::<3>(0).copy_from(&(gains.kp_position * errors.e_x.fixed_rows::<3>(0)));
    kp_ex.fixed_rows_mut::<3>(3).copy_from(&(gains.kp_orientation * errors.e_x.fixed_rows::<3>(3)));
    desired.twist_rate - gains.kd * errors.e_v - kp_ex
}

#[derive(Debug, Clone)]
pub struct ControlOutput {
    pub u: DVector<f64>,
    pub errors: TrackingErrors,
    pub commanded: Twist6,
}

fn dv(v: &Vector6<f64>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

/// `u = g + (C G^T + M G_dot^T) v_O + G*(g_O + C_O v_O) + (M G^T + G* M_O) a_cmd`,
/// plus `h_int_d` when a desired internal force is given.
pub fn control_law(
    snap: &Snapshot,
    desired: &DesiredState,
    gains: &Gains,
    g_star: &DMatrix<f64>,
    h_int_d: Option<&DVector<f64>>,
) -> Result<ControlOutput> {
    let n6 = snap.g.ncols();
    if g_star.nrows() != n6 || g_star.ncols() != 6 {
        return Err(Error::DimensionMismatch(format!("G* must be {n6}x6")));
    }
    let errors = tracking_errors(snap.pose(), &snap.twist, desired)?;
    let commanded = commanded_acceleration(&errors, desired, gains);
    let a = dv(&commanded);
    let v_o = dv(&snap.twist);
    let agents = &snap.agents;
    let mut u = &agents.g
        + (&agents.c * snap.g.transpose() + &agents.m * snap.g_dot.transpose()) * &v_o
        + g_star * dv(&(snap.object.g + snap.object.c * snap.twist + snap.object.m * commanded))
        + &agents.m * (snap.g.transpose() * a);
    if let Some(h) = h_int_d {
        if h.len() != n6 {
            return Err(Error::DimensionMismatch(format!("desired internal force must have {n6} entries")));
        }
        let leak = (&snap.g * h).norm();
        if !(leak <= 1e-8 * h.norm().max(1.0)) {
            return Err(Error::DesiredInternalForceNotInternal(leak));
        }
        u += h;
    }
    Ok(ControlOutput { u, errors, commanded })
}
