//! Grasp kinematics: object-to-agent Jacobians, the grasp matrix and right inverses.
//!
//! Agents hold the object rigidly. Agent `i` sits at the body-frame offset
//! `(p_off_i, R_off_i)`, so its pose is always
//! `p_i = p_O + R_O p_off_i`, `R_i = R_O R_off_i` and never integrated on its own.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_rotation, is_spd, skew};
use crate::pose::{PoseSE3, Twist6, Wrench6};
use crate::rigidity::Framework;

/// Fixed body-frame placement of one agent's grasp on the object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspOffset {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl GraspOffset {
    pub fn at(position: Vector3<f64>) -> Self {
        GraspOffset { position, rotation: Matrix3::identity() }
    }
}

/// Object pose plus the grasp offsets of all agents.
#[derive(Debug, Clone)]
pub struct GraspConfiguration {
    object: PoseSE3,
    offsets: Vec<GraspOffset>,
}

impl GraspConfiguration {
    pub fn new(object: PoseSE3, offsets: Vec<GraspOffset>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::InvalidParameter("a grasp needs at least one agent".into()));
        }
        object.validate()?;
        for off in &offsets {
            check_rotation(&off.rotation)?;
        }
        Ok(GraspConfiguration { object, offsets })
    }

    pub fn object(&self) -> &PoseSE3 {
        &self.object
    }

    pub fn offsets(&self) -> &[GraspOffset] {
        &self.offsets
    }

    pub fn agent_count(&self) -> usize {
        self.offsets.len()
    }

    /// Same grasp, object moved to `object`.
    pub fn with_object(&self, object: PoseSE3) -> Self {
        GraspConfiguration { object, offsets: self.offsets.clone() }
    }

    /// `p_iO = p_i - p_O = R_O p_off_i` for every agent.
    pub fn lever_arms(&self) -> Vec<Vector3<f64>> {
        self.offsets.iter().map(|o| self.object.rotation * o.position).collect()
    }

    pub fn agent_poses(&self) -> Vec<PoseSE3> {
        self.offsets
            .iter()
            .map(|o| self.object.compose(&PoseSE3 { position: o.position, rotation: o.rotation }))
            .collect()
    }

    /// The agents as a framework on the complete graph.
    pub fn framework(&self) -> Result<Framework> {
        Framework::new(self.agent_poses())
    }
}

/// `J_Oi = [[I, -S(p_iO)], [0, I]]`, mapping the object twist to agent `i`'s twist.
pub fn object_to_agent_jacobian(p_io: &Vector3<f64>) -> Matrix6<f64> {
    let mut j = Matrix6::identity();
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-skew(p_io)));
    j
}

/// `G = [J_O1^T, ..., J_ON^T]` from the lever arms `p_iO`.
pub fn grasp_matrix_from_arms(arms: &[Vector3<f64>]) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(6, 6 * arms.len());
    for (i, arm) in arms.iter().enumerate() {
        g.fixed_view_mut::<6, 6>(0, 6 * i).copy_from(&object_to_agent_jacobian(arm).transpose());
    }
    g
}

/// The `6 x 6N` grasp matrix.
pub fn grasp_matrix(gc: &GraspConfiguration) -> DMatrix<f64> {
    grasp_matrix_from_arms(&gc.lever_arms())
}

/// `dG/dt` for object twist `v_O`. Only the lever-arm blocks move:
/// `d/dt p_iO = omega_O x p_iO`.
pub fn grasp_matrix_rate(gc: &GraspConfiguration, v_o: &Twist6) -> DMatrix<f64> {
    let omega = v_o.fixed_rows::<3>(3).into_owned();
    let arms = gc.lever_arms();
    let mut g_dot = DMatrix::zeros(6, 6 * arms.len());
    for (i, arm) in arms.iter().enumerate() {
        g_dot.fixed_view_mut::<3, 3>(3, 6 * i).copy_from(&skew(&omega.cross(arm)));
    }
    g_dot
}

/// `v = G^T v_O`.
pub fn agent_velocities(g: &DMatrix<f64>, v_o: &Twist6) -> DVector<f64> {
    g.transpose() * v_o
}

/// `h_O = G h`.
pub fn object_wrench(g: &DMatrix<f64>, h: &DVector<f64>) -> Result<Wrench6> {
    if h.len() != g.ncols() {
        return Err(Error::DimensionMismatch(format!("G has {} columns, h has {} entries", g.ncols(), h.len())));
    }
    Ok(Wrench6::from_iterator((g * h).iter().copied()))
}

/// Which right inverse of `G` distributes object wrenches to the agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RightInverseKind {
    /// `M G^T (G M G^T)^{-1}`, the only choice free of internal forces.
    InertiaWeighted,
    /// `G^T (G G^T)^{-1}`.
    MoorePenrose,
}

/// `G*` with `G G* = I_6`, either inertia weighted or Moore-Penrose.
pub fn right_inverse(g: &DMatrix<f64>, m: &DMatrix<f64>, kind: RightInverseKind) -> Result<DMatrix<f64>> {
    if m.nrows() != g.ncols() || m.ncols() != g.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "inertia is {}x{}, G is {}x{}",
            m.nrows(),
            m.ncols(),
            g.nrows(),
            g.ncols()
        )));
    }
    if !is_spd(m) {
        return Err(Error::SingularInertia);
    }
    let weighted = match kind {
        RightInverseKind::InertiaWeighted => m * g.transpose(),
        RightInverseKind::MoorePenrose => g.transpose(),
    };
    let gram = g * &weighted;
    let chol = gram.cholesky().ok_or(Error::RankDeficientGrasp)?;
    Ok(chol.solve(&weighted.transpose()).transpose())
}
