//! A cooperative manipulation system and everything derived from one object state.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{body_terms, coupled_terms, CoupledTerms, DynamicTerms, RigidBodyParams, StackedTerms};
use crate::error::{Error, Result};
use crate::grasp::{grasp_matrix, grasp_matrix_rate, GraspConfiguration, GraspOffset};
use crate::pose::{PoseSE3, Twist6};
use crate::rigidity::{rigidity_matrix, Framework};

/// Object and agents, with each agent's grasp offset.
#[derive(Debug, Clone)]
pub struct CooperativeSystem {
    pub object: RigidBodyParams,
    pub agents: Vec<RigidBodyParams>,
    pub offsets: Vec<GraspOffset>,
}

impl CooperativeSystem {
    /// Rejects `N < 3` and grasp layouts whose agent framework is degenerate.
    pub fn new(object: RigidBodyParams, agents: Vec<RigidBodyParams>, offsets: Vec<GraspOffset>) -> Result<Self> {
        if agents.len() != offsets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} agent bodies but {} grasp offsets",
                agents.len(),
                offsets.len()
            )));
        }
        let n = agents.len();
        if n == 2 {
            return Err(Error::DegenerateConfiguration("N=2".into()));
        }
        if n < 2 {
            return Err(Error::DegenerateConfiguration(format!("N={n}")));
        }
        let sys = CooperativeSystem { object, agents, offsets };
        let eval = rigidity_matrix(&sys.grasp(&PoseSE3::identity())?.framework()?)?;
        if eval.degenerate {
            return Err(Error::DegenerateConfiguration(format!("rank {} < 6N-6 = {}", eval.rank, 6 * n - 6)));
        }
        Ok(sys)
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn grasp(&self, object: &PoseSE3) -> Result<GraspConfiguration> {
        GraspConfiguration::new(*object, self.offsets.clone())
    }

    /// Evaluates every kinematic and dynamic quantity at object state `(pose, twist)`.
    pub fn snapshot(&self, pose: &PoseSE3, twist: &Twist6) -> Result<Snapshot> {
        let grasp = self.grasp(pose)?;
        let g = grasp_matrix(&grasp);
        let g_dot = grasp_matrix_rate(&grasp, twist);
        let v = g.transpose() * twist;
        let agent_poses = grasp.agent_poses();
        let bodies: Vec<DynamicTerms> = agent_poses
            .iter()
            .zip(&self.agents)
            .enumerate()
            .map(|(i, (p, params))| body_terms(p, &Twist6::from_iterator(v.rows(6 * i, 6).iter().copied()), params))
            .collect();
        let agents = StackedTerms::block_diagonal(&bodies);
        let object = body_terms(pose, twist, &self.object);
        let coupled = coupled_terms(&agents, &object, &g, &g_dot)?;
        Ok(Snapshot { grasp, g, g_dot, agent_poses, v, twist: *twist, agents, object, coupled })
    }
}

/// Quantities derived from one object state.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub grasp: GraspConfiguration,
    pub g: DMatrix<f64>,
    pub g_dot: DMatrix<f64>,
    pub agent_poses: Vec<PoseSE3>,
    /// Stacked agent twists `G^T v_O`.
    pub v: DVector<f64>,
    /// Object twist `v_O`.
    pub twist: Twist6,
    pub agents: StackedTerms,
    pub object: DynamicTerms,
    pub coupled: CoupledTerms,
}

impl Snapshot {
    pub fn pose(&self) -> &PoseSE3 {
        self.grasp.object()
    }

    pub fn framework(&self) -> Result<Framework> {
        Framework::new(self.agent_poses.clone())
    }

    /// `[v; v_O]`.
    pub fn v_bar(&self) -> DVector<f64> {
        DVector::from_iterator(self.v.len() + 6, self.v.iter().chain(self.twist.iter()).copied())
    }

    /// Object acceleration under agent inputs `u`: `M_c^{-1}(G u - C_c v_O - g_c)`.
    pub fn object_acceleration(&self, u: &DVector<f64>) -> Result<Twist6> {
        if u.len() != self.v.len() {
            return Err(Error::DimensionMismatch(format!("expected {} inputs, got {}", self.v.len(), u.len())));
        }
        let gu = &self.g * u;
        let rhs = Twist6::from_iterator(gu.iter().copied()) - self.coupled.c * self.twist - self.coupled.g;
        let chol = self.coupled.m.cholesky().ok_or(Error::NonSpd("M_c"))?;
        Ok(chol.solve(&rhs))
    }
}
