//! Serializable scenario description.
//!
//! Units are SI throughout: kg, kg m^2, m, rad, s. Euler angles are roll, pitch,
//! yaw in the Z-Y-X convention. The [`Default`] scenario is a 40 kg box carried by
//! four agents of 5, 10, 20 and 40 kg on a square grasp.

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::control::{Gains, TrajectorySpec};
use crate::dynamics::{RigidBodyParams, STANDARD_GRAVITY};
use crate::error::{Error, Result};
use crate::grasp::{grasp_matrix_from_arms, GraspConfiguration, GraspOffset, RightInverseKind};
use crate::linalg::euler_to_rot;
use crate::pose::{PoseSE3, Twist6};
use crate::rigidity::Framework;
use crate::sim::{CoupledState, Scenario, TrackingController, MAX_DT};
use crate::system::CooperativeSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    pub mass: f64,
    pub inertia_diag: [f64; 3],
    pub position: [f64; 3],
    pub euler: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub mass: f64,
    pub inertia_diag: [f64; 3],
    /// Grasp point in object body axes.
    pub grasp_position: [f64; 3],
    /// Agent frame relative to the object frame.
    pub grasp_euler: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub position_amplitude: [f64; 3],
    pub position_offset: [f64; 3],
    pub orientation_amplitude: [f64; 3],
    pub w_p: f64,
    pub w_phi: f64,
    pub w_theta: f64,
    pub w_psi: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsConfig {
    pub kp_position_diag: [f64; 3],
    pub kp_orientation: f64,
    pub kd_diag: [f64; 6],
}

fn default_gravity() -> [f64; 3] {
    STANDARD_GRAVITY
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub object: ObjectConfig,
    pub agents: Vec<AgentConfig>,
    pub trajectory: TrajectoryConfig,
    pub gains: GainsConfig,
    pub right_inverse: RightInverseKind,
    /// Stacked per-agent `[force; torque]` in object body axes; must be internal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub desired_internal_force: Option<Vec<f64>>,
    #[serde(default = "default_gravity")]
    pub gravity: [f64; 3],
    pub dt: f64,
    pub duration: f64,
    #[serde(default = "default_stride")]
    pub log_stride: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let agent = |mass: f64, inertia_diag: [f64; 3], grasp_position: [f64; 3], yaw: f64| AgentConfig {
            mass,
            inertia_diag,
            grasp_position,
            grasp_euler: [0.0, 0.0, yaw],
        };
        ScenarioConfig {
            object: ObjectConfig {
                mass: 40.0,
                inertia_diag: [0.4333, 0.6667, 0.8333],
                position: [-0.225, -0.612, 0.161],
                euler: [0.0, 0.0, 0.0],
            },
            agents: vec![
                agent(5.0, [0.05, 0.08, 0.1], [0.2, 0.0, 0.0], 0.0),
                agent(10.0, [0.12, 0.1, 0.15], [0.0, 0.2, 0.0], half_pi),
                agent(20.0, [0.3, 0.25, 0.4], [-0.2, 0.0, 0.0], std::f64::consts::PI),
                agent(40.0, [0.6, 0.5, 0.8], [0.0, -0.2, 0.0], -half_pi),
            ],
            trajectory: TrajectoryConfig {
                position_amplitude: [0.2, 0.2, 0.1],
                position_offset: [0.0, 0.0, 0.09],
                orientation_amplitude: [0.15, 0.15, 0.15],
                w_p: 1.0,
                w_phi: 1.0,
                w_theta: 0.5,
                w_psi: 1.0,
                phase: std::f64::consts::FRAC_PI_6,
            },
            gains: GainsConfig { kp_position_diag: [15.0; 3], kp_orientation: 75.0, kd_diag: [40.0; 6] },
            right_inverse: RightInverseKind::InertiaWeighted,
            desired_internal_force: None,
            gravity: STANDARD_GRAVITY,
            dt: 1e-3,
            duration: 15.0,
            log_stride: 1,
        }
    }
}

fn finite(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} has non-finite entries")))
    }
}

impl ScenarioConfig {
    /// Agent poses at the initial object pose, for rigidity analysis of layouts that
    /// [`ScenarioConfig::build`] would reject as degenerate.
    pub fn agent_framework(&self) -> Result<Framework> {
        if self.agents.len() < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 agents, got {}", self.agents.len())));
        }
        finite(&self.object.position, "object position")?;
        finite(&self.object.euler, "object euler")?;
        let mut offsets = Vec::with_capacity(self.agents.len());
        for a in &self.agents {
            finite(&a.grasp_position, "grasp position")?;
            finite(&a.grasp_euler, "grasp euler")?;
            if !(a.mass > 0.0) || a.inertia_diag.iter().any(|&d| !(d > 0.0)) {
                return Err(Error::InvalidParameter("agent mass and inertia diagonal must be positive".into()));
            }
            offsets.push(GraspOffset { position: Vector3::from(a.grasp_position), rotation: euler_to_rot(&Vector3::from(a.grasp_euler)) });
        }
        let object = PoseSE3::from_euler(Vector3::from(self.object.position), Vector3::from(self.object.euler));
        GraspConfiguration::new(object, offsets)?.framework()
    }

    /// Checks every field and assembles the runnable scenario.
    pub fn build(&self) -> Result<Scenario> {
        let n = self.agents.len();
        if n < 3 {
            return Err(Error::DegenerateConfiguration(format!("N={n}")));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::InvalidParameter(format!("dt must lie in (0, {MAX_DT}], got {}", self.dt)));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidParameter(format!("duration must be non-negative, got {}", self.duration)));
        }
        if self.log_stride == 0 {
            return Err(Error::InvalidParameter("log_stride must be at least 1".into()));
        }
        finite(&self.gravity, "gravity")?;
        let gravity = Vector3::from(self.gravity);
        let body = |mass: f64, diag: [f64; 3], what: &str| -> Result<RigidBodyParams> {
            if diag.iter().any(|&d| !(d > 0.0)) {
                return Err(Error::InvalidParameter(format!("{what} inertia diagonal must be positive")));
            }
            RigidBodyParams::new(mass, nalgebra::Matrix3::from_diagonal(&Vector3::from(diag)), gravity)
                .map_err(|e| Error::InvalidParameter(format!("{what}: {e}")))
        };

        let o = &self.object;
        finite(&o.position, "object position")?;
        finite(&o.euler, "object euler")?;
        let object = body(o.mass, o.inertia_diag, "object")?;
        let mut agents = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        for (i, a) in self.agents.iter().enumerate() {
            finite(&a.grasp_position, "grasp position")?;
            finite(&a.grasp_euler, "grasp euler")?;
            agents.push(body(a.mass, a.inertia_diag, &format!("agent {}", i + 1))?);
            offsets.push(GraspOffset { position: Vector3::from(a.grasp_position), rotation: euler_to_rot(&Vector3::from(a.grasp_euler)) });
        }
        let system = CooperativeSystem::new(object, agents, offsets)?;

        let internal_force_body = match &self.desired_internal_force {
            None => None,
            Some(h) => {
                if h.len() != 6 * n {
                    return Err(Error::InvalidParameter(format!(
                        "desired_internal_force needs {} entries, got {}",
                        6 * n,
                        h.len()
                    )));
                }
                finite(h, "desired_internal_force")?;
                let h = DVector::from_column_slice(h);
                let arms: Vec<Vector3<f64>> = system.offsets.iter().map(|o| o.position).collect();
                let leak = (grasp_matrix_from_arms(&arms) * &h).norm();
                if !(leak <= 1e-8 * h.norm().max(1.0)) {
                    return Err(Error::DesiredInternalForceNotInternal(leak));
                }
                Some(h)
            }
        };

        let t = &self.trajectory;
        for (x, what) in [(t.w_p, "w_p"), (t.w_phi, "w_phi"), (t.w_theta, "w_theta"), (t.w_psi, "w_psi"), (t.phase, "phase")] {
            if !x.is_finite() {
                return Err(Error::InvalidParameter(format!("{what} must be finite")));
            }
        }
        finite(&t.position_amplitude, "position_amplitude")?;
        finite(&t.position_offset, "position_offset")?;
        finite(&t.orientation_amplitude, "orientation_amplitude")?;
        let trajectory = TrajectorySpec {
            base_position: Vector3::from(o.position),
            base_euler: Vector3::from(o.euler),
            position_amplitude: Vector3::from(t.position_amplitude),
            position_offset: Vector3::from(t.position_offset),
            orientation_amplitude: Vector3::from(t.orientation_amplitude),
            w_p: t.w_p,
            w_eta: Vector3::new(t.w_phi, t.w_theta, t.w_psi),
            phase: t.phase,
        };
        let gains = Gains::diagonal(self.gains.kp_position_diag, self.gains.kp_orientation, self.gains.kd_diag)?;

        let initial = CoupledState {
            pose: PoseSE3::from_euler(Vector3::from(o.position), Vector3::from(o.euler)),
            twist: Twist6::zeros(),
            t: 0.0,
        };
        Ok(Scenario {
            system,
            initial,
            controller: TrackingController { gains, trajectory, right_inverse: self.right_inverse, internal_force_body },
            dt: self.dt,
            duration: self.duration,
            log_stride: self.log_stride,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_builds() {
        let sc = ScenarioConfig::default().build().unwrap();
        assert_eq!(sc.system.agent_count(), 4);
        assert_eq!(sc.step_count(), 15000);
    }

    #[test]
    fn object_inertia_is_a_box() {
        // 0.4 x 0.3 x 0.2 m, 40 kg
        let m = 40.0 / 12.0;
        let expect = [m * (0.09 + 0.04), m * (0.16 + 0.04), m * (0.16 + 0.09)];
        for (got, want) in ScenarioConfig::default().object.inertia_diag.iter().zip(expect) {
            assert!((got - want).abs() < 1e-4);
        }
    }

    #[test]
    fn validation_errors() {
        let mut c = ScenarioConfig::default();
        c.agents.truncate(2);
        assert_eq!(c.build().unwrap_err().to_string(), "degenerate framework (N=2)");

        let mut c = ScenarioConfig::default();
        c.agents[1].mass = -3.0;
        assert!(matches!(c.build(), Err(Error::InvalidParameter(_))));

        let mut c = ScenarioConfig::default();
        c.object.inertia_diag[2] = 0.0;
        assert!(matches!(c.build(), Err(Error::InvalidParameter(_))));

        let mut c = ScenarioConfig::default();
        for (i, a) in c.agents.iter_mut().enumerate() {
            a.grasp_position = [0.1 * i as f64 - 0.15, 0.0, 0.0];
        }
        assert!(matches!(c.build(), Err(Error::DegenerateConfiguration(_))));

        let c = ScenarioConfig { dt: 0.05, ..Default::default() };
        assert!(c.build().is_err());

        let mut c = ScenarioConfig { desired_internal_force: Some(vec![1.0; 24]), ..Default::default() };
        assert!(matches!(c.build(), Err(Error::DesiredInternalForceNotInternal(_))));
        c.desired_internal_force = Some(vec![0.0; 5]);
        assert!(c.build().is_err());

        let mut c = ScenarioConfig::default();
        c.gains.kd_diag[0] = 0.0;
        assert!(c.build().is_err());
    }

    #[test]
    fn framework_of_rejected_layouts() {
        let mut c = ScenarioConfig::default();
        c.agents.truncate(2);
        assert_eq!(c.agent_framework().unwrap().node_count(), 2);
        c.agents.truncate(1);
        assert!(c.agent_framework().is_err());
    }

    #[test]
    fn squeeze_is_accepted_as_internal() {
        let mut c = ScenarioConfig::default();
        // agents 1 and 3 pull apart along x
        let mut h = vec![0.0; 24];
        h[0] = 2.0;
        h[12] = -2.0;
        c.desired_internal_force = Some(h);
        assert!(c.build().unwrap().controller.internal_force_body.is_some());
    }
}
