use nalgebra::{Matrix3, Vector3, Vector6};

use crate::error::Result;
use crate::linalg::{check_rotation, euler_to_rot};

/// Stacked `[linear; angular]` velocity, both expressed in the inertial frame.
pub type Twist6 = Vector6<f64>;

/// Stacked `[force; torque]`, inertial frame.
pub type Wrench6 = Vector6<f64>;

/// A rigid-body configuration: inertial position and body-to-inertial rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSE3 {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl PoseSE3 {
    /// Builds a pose, checking `rotation` against the SO(3) invariant.
    pub fn new(position: Vector3<f64>, rotation: Matrix3<f64>) -> Result<Self> {
        check_rotation(&rotation)?;
        Ok(PoseSE3 { position, rotation })
    }

    pub fn identity() -> Self {
        PoseSE3 { position: Vector3::zeros(), rotation: Matrix3::identity() }
    }

    pub fn from_translation(position: Vector3<f64>) -> Self {
        PoseSE3 { position, rotation: Matrix3::identity() }
    }

    /// Position plus Z-Y-X roll-pitch-yaw angles.
    pub fn from_euler(position: Vector3<f64>, eta: Vector3<f64>) -> Self {
        PoseSE3 { position, rotation: euler_to_rot(&eta) }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.iter().all(|x| x.is_finite()) {
            return Err(crate::Error::InvalidParameter("non-finite position".into()));
        }
        check_rotation(&self.rotation)
    }

    /// `self * other`: `other` expressed in this pose's frame, mapped to the inertial frame.
    pub fn compose(&self, other: &PoseSE3) -> PoseSE3 {
        PoseSE3 {
            position: self.position + self.rotation * other.position,
            rotation: self.rotation * other.rotation,
        }
    }
}
