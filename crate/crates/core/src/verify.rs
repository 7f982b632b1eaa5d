//! Randomized verification of the structural identities of rigid cooperative grasps.
//!
//! Each trial draws a nondegenerate grasp, SPD inertias, an object state and agent
//! inputs, then measures how far each identity is from holding exactly. Trials run
//! in parallel; trial `k` draws from stream `k` of a ChaCha8 generator keyed by the
//! seed, so any trial can be reproduced on its own and results come back in order.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::RigidBodyParams;
use crate::error::{Error, Result};
use crate::forces::{
    internal_forces_gauss, internal_from_interaction, internal_projector, projection_identity_residual,
    rigidity_invariance_check, snapshot_interaction_closed, snapshot_interaction_forces,
};
use crate::grasp::{grasp_matrix_from_arms, right_inverse, GraspOffset, RightInverseKind};
use crate::linalg::{
    euler_to_rot, max_principal_angle, nullspace_basis, numerical_rank, row_space_basis, DEFAULT_PINV_TOL,
};
use crate::pose::{PoseSE3, Twist6};
use crate::rigidity::{extended_rigidity_matrix, is_infinitesimally_rigid, rigidity_jacobian, Framework};
use crate::system::{CooperativeSystem, Snapshot};

/// A randomly drawn grasp, state and input.
#[derive(Debug, Clone)]
pub struct Trial {
    pub system: CooperativeSystem,
    pub pose: PoseSE3,
    pub twist: Twist6,
    pub u: DVector<f64>,
    /// A desired object wrench for the distribution checks.
    pub object_wrench: DVector<f64>,
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    euler_to_rot(&Vector3::new(
        rng.random_range(-3.1..3.1),
        rng.random_range(-1.4..1.4),
        rng.random_range(-3.1..3.1),
    ))
}

fn random_body(rng: &mut ChaCha8Rng, mass: (f64, f64), inertia: (f64, f64)) -> RigidBodyParams {
    let q = random_rotation(rng);
    let d = Vector3::from_fn(|_, _| rng.random_range(inertia.0..inertia.1));
    let inertia_body = q * Matrix3::from_diagonal(&d) * q.transpose();
    let inertia_body = 0.5 * (inertia_body + inertia_body.transpose());
    RigidBodyParams::new(rng.random_range(mass.0..mass.1), inertia_body, Vector3::new(0.0, 0.0, -9.81))
        .expect("sampled parameters are valid")
}

/// Draws a nondegenerate `n`-agent trial; grasp points are at least 0.15 m apart.
pub fn random_trial(n: usize, rng: &mut ChaCha8Rng) -> Trial {
    loop {
        let offsets: Vec<GraspOffset> = (0..n)
            .map(|_| GraspOffset {
                position: Vector3::from_fn(|_, _| rng.random_range(-0.5..0.5)),
                rotation: random_rotation(rng),
            })
            .collect();
        let spread = offsets
            .iter()
            .enumerate()
            .flat_map(|(i, a)| offsets[i + 1..].iter().map(move |b| (a.position - b.position).norm()))
            .fold(f64::INFINITY, f64::min);
        if spread < 0.15 {
            continue;
        }
        let agents = (0..n).map(|_| random_body(rng, (1.0, 20.0), (0.02, 0.5))).collect();
        let object = random_body(rng, (5.0, 50.0), (0.1, 1.0));
        let Ok(system) = CooperativeSystem::new(object, agents, offsets) else {
            continue;
        };
        let pose = PoseSE3 { position: Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)), rotation: random_rotation(rng) };
        let twist = Twist6::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let u = DVector::from_fn(6 * n, |_, _| rng.random_range(-50.0..50.0));
        let object_wrench = DVector::from_fn(6, |_, _| rng.random_range(-100.0..100.0));
        return Trial { system, pose, twist, u, object_wrench };
    }
}

/// Raw measurements of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub agents: usize,
    pub rank: usize,
    pub null_g_dim: usize,
    /// Largest principal angle between `range(R^T)` and `null(G)` (rad).
    pub duality_angle: f64,
    pub projection_residual: f64,
    pub invariance_deviation: f64,
    /// Gauss-principle internal forces versus projected closed-form forces, relative.
    pub projection_gap: f64,
    /// `|z*| / |h_d|` for the nullspace-parameterized quadratic oracle.
    pub optimal_deviation: f64,
    /// `|h_int(Moore-Penrose)| / |h_int(inertia weighted)|`.
    pub moore_penrose_ratio: f64,
    /// `|G R_O1^T + R_O2^T|_F / |R_O2|_F`.
    pub extended_block_residual: f64,
    /// `|h_O - G h|` relative, Gauss-principle outputs.
    pub wrench_gap: f64,
    /// Largest relative gap between the two algebraic forms of the Gauss formulas.
    pub form_gap: f64,
}

fn rel_gap(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Random invertible row transform `diag(d) (I + B)`, `d` in `[0.1, 10]`, `|B|_2 < 1`.
pub fn random_row_transform(rows: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let scale = 0.3 / (rows as f64).sqrt();
    let mix = DMatrix::identity(rows, rows) + DMatrix::from_fn(rows, rows, |_, _| scale * rng.random_range(-1.0..1.0));
    DMatrix::from_diagonal(&DVector::from_fn(rows, |_, _| rng.random_range(0.1..10.0))) * mix
}

/// Duality between `range(R^T)` and `null(G)`: (rank of R, dim null(G), angle).
pub fn duality(snap: &Snapshot, r: &DMatrix<f64>) -> Result<(usize, usize, f64)> {
    let range = row_space_basis(r, DEFAULT_PINV_TOL);
    let null = nullspace_basis(&snap.g, DEFAULT_PINV_TOL);
    Ok((range.dim(), null.dim(), max_principal_angle(&range, &null)?))
}

/// Minimizer of `|(I - P_1)(h_d + Z z)|` over `z`, `Z` an orthonormal basis of `null(G)`,
/// by the normal equations; returns `(z*, h_d)` with `h_d` the inertia-weighted share.
pub fn optimal_distribution_oracle(
    m: &DMatrix<f64>,
    g: &DMatrix<f64>,
    object_wrench: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let h_d = right_inverse(g, m, RightInverseKind::InertiaWeighted)? * object_wrench;
    let q = internal_projector(m, g)?;
    let z = nullspace_basis(g, DEFAULT_PINV_TOL);
    let a = &q * z.matrix();
    let normal = a.transpose() * &a;
    let rhs = -(a.transpose() * (&q * &h_d));
    let z_star = normal.cholesky().ok_or(Error::NonSpd("Z^T Q^T Q Z"))?.solve(&rhs);
    Ok((z_star, h_d))
}

/// Runs every measurement on one trial.
pub fn evaluate_trial(trial: &Trial, rng: &mut ChaCha8Rng) -> Result<TrialResult> {
    let snap = trial.system.snapshot(&trial.pose, &trial.twist)?;
    let fw = snap.framework()?;
    let r = rigidity_jacobian(&fw)?;
    let (rank, null_g_dim, duality_angle) = duality(&snap, &r)?;
    let m = &snap.agents.m;

    let projection_residual = projection_identity_residual(m, &snap.g, &r)?;

    let p = random_row_transform(fw.row_count(), rng);
    let invariance = rigidity_invariance_check(&fw, &snap.v, &snap.agents, &trial.u, &p)?;

    let h = snapshot_interaction_closed(&snap, &trial.u)?;
    let projected = internal_from_interaction(m, &snap.g, &h)?;
    let gauss_int = internal_forces_gauss(&fw, &snap.v, &snap.agents, &trial.u)?;

    let (z_star, h_d) = optimal_distribution_oracle(m, &snap.g, &trial.object_wrench)?;
    let q = internal_projector(m, &snap.g)?;
    let h_mp = right_inverse(&snap.g, m, RightInverseKind::MoorePenrose)? * &trial.object_wrench;
    let moore_penrose_ratio = (&q * h_mp).norm() / (&q * &h_d).norm().max(f64::MIN_POSITIVE);

    let ext = extended_rigidity_matrix(&fw, &trial.pose)?;
    let block = &snap.g * ext.object_agents.transpose() + ext.object_object.transpose();
    let gauss = snapshot_interaction_forces(&snap, &trial.u)?;

    Ok(TrialResult {
        agents: fw.node_count(),
        rank,
        null_g_dim,
        duality_angle,
        projection_residual,
        invariance_deviation: invariance.deviation,
        projection_gap: rel_gap(&projected, &gauss_int.h_int),
        optimal_deviation: z_star.norm() / h_d.norm(),
        moore_penrose_ratio,
        extended_block_residual: block.norm() / ext.object_object.norm(),
        wrench_gap: gauss.wrench_gap,
        form_gap: gauss.form_gap.max(gauss_int.form_gap),
    })
}

/// Which side of the threshold passes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Below(f64),
    Above(f64),
}

/// Worst value of one measurement over all trials.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSummary {
    pub name: &'static str,
    pub worst: f64,
    pub bound: Bound,
    pub passed: bool,
}

/// Degeneracy probe on collinear grasp points.
#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateReport {
    pub agents: usize,
    pub rank: usize,
    pub null_g_dim: usize,
    /// `|G R^T|_F / |R|_F`: zero when `range(R^T)` lies inside `null(G)`.
    pub containment_residual: f64,
    /// The infinitesimal-rigidity test refused the framework.
    pub detected: bool,
}

impl DegenerateReport {
    /// `range(R^T)` is a proper subspace of `null(G)`.
    pub fn strict_containment(&self) -> bool {
        self.containment_residual < 1e-9 && self.rank < self.null_g_dim
    }
}

/// Three collinear agents: the rigidity matrix loses rank while `null(G)` keeps dimension 12.
pub fn degenerate_probe() -> Result<DegenerateReport> {
    let arms: Vec<Vector3<f64>> = [-0.3, 0.1, 0.4].iter().map(|&x| Vector3::new(x, 0.0, 0.0)).collect();
    let fw = Framework::new(arms.iter().map(|&p| PoseSE3::from_translation(p)).collect())?;
    let r = rigidity_jacobian(&fw)?;
    let g = grasp_matrix_from_arms(&arms);
    Ok(DegenerateReport {
        agents: 3,
        rank: numerical_rank(&r, DEFAULT_PINV_TOL),
        null_g_dim: nullspace_basis(&g, DEFAULT_PINV_TOL).dim(),
        containment_residual: (&g * r.transpose()).norm() / r.norm(),
        detected: matches!(is_infinitesimally_rigid(&fw), Err(Error::DegenerateConfiguration(_))),
    })
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub seed: u64,
    pub trials: Vec<TrialResult>,
    pub checks: Vec<CheckSummary>,
    pub degenerate: DegenerateReport,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.degenerate.detected && self.degenerate.strict_containment()
    }

    pub fn first_failure(&self) -> Option<&'static str> {
        self.checks.iter().find(|c| !c.passed).map(|c| c.name).or_else(|| {
            (!(self.degenerate.detected && self.degenerate.strict_containment())).then_some("degenerate_containment")
        })
    }
}

fn summarize(trials: &[TrialResult]) -> Vec<CheckSummary> {
    type Metric = fn(&TrialResult) -> f64;
    let rank_defect: Metric = |t| {
        let want = 6 * t.agents - 6;
        (t.rank.abs_diff(want) + t.null_g_dim.abs_diff(want)) as f64
    };
    let table: [(&'static str, Metric, Bound); 10] = [
        ("rank", rank_defect, Bound::Below(0.5)),
        ("duality", |t| t.duality_angle, Bound::Below(1e-7)),
        ("projection_identity", |t| t.projection_residual, Bound::Below(1e-8)),
        ("row_transform_invariance", |t| t.invariance_deviation, Bound::Below(1e-7)),
        ("internal_force_equivalence", |t| t.projection_gap, Bound::Below(1e-6)),
        ("optimal_distribution", |t| t.optimal_deviation, Bound::Below(1e-7)),
        ("moore_penrose_separation", |t| t.moore_penrose_ratio, Bound::Above(1.0 + 1e-3)),
        ("extended_blocks", |t| t.extended_block_residual, Bound::Below(1e-9)),
        ("wrench_consistency", |t| t.wrench_gap, Bound::Below(1e-7)),
        ("algebraic_forms", |t| t.form_gap, Bound::Below(1e-7)),
    ];
    table
        .iter()
        .map(|&(name, metric, bound)| {
            let values = trials.iter().map(metric);
            let (worst, passed) = match bound {
                Bound::Below(b) => {
                    let w = values.fold(0.0, f64::max);
                    (w, w < b)
                }
                Bound::Above(b) => {
                    let w = values.fold(f64::INFINITY, f64::min);
                    (w, w > b)
                }
            };
            CheckSummary { name, worst, bound, passed }
        })
        .collect()
}

/// `trials` random trials for each agent count in `agents`.
pub fn run_verification(seed: u64, trials: usize, agents: &[usize]) -> Result<VerifyReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if agents.is_empty() || agents.iter().any(|&n| n < 3) {
        return Err(Error::InvalidParameter("agent counts must be at least 3".into()));
    }
    let jobs: Vec<usize> = agents.iter().flat_map(|&n| std::iter::repeat_n(n, trials)).collect();
    let results: Vec<Result<TrialResult>> = jobs
        .par_iter()
        .enumerate()
        .map(|(k, &n)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let trial = random_trial(n, &mut rng);
            evaluate_trial(&trial, &mut rng)
        })
        .collect();
    let trials = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport { seed, checks: summarize(&trials), trials, degenerate: degenerate_probe()? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_battery_passes() {
        let report = run_verification(7, 3, &[3, 4]).unwrap();
        assert_eq!(report.trials.len(), 6);
        for c in &report.checks {
            assert!(c.passed, "{c:?}");
        }
        assert!(report.passed());
    }

    #[test]
    fn reproducible_and_ordered() {
        let a = run_verification(11, 2, &[3, 5]).unwrap();
        let b = run_verification(11, 2, &[3, 5]).unwrap();
        assert_eq!(a.trials, b.trials);
        let counts: Vec<usize> = a.trials.iter().map(|t| t.agents).collect();
        assert_eq!(counts, vec![3, 3, 5, 5]);
    }

    #[test]
    fn degenerate_probe_reports_strict_containment() {
        let d = degenerate_probe().unwrap();
        assert!(d.detected);
        assert_eq!(d.null_g_dim, 12);
        assert!(d.rank < 12);
        assert!(d.strict_containment());
    }

    #[test]
    fn argument_errors() {
        assert!(run_verification(1, 0, &[3]).is_err());
        assert!(run_verification(1, 1, &[2]).is_err());
        assert!(run_verification(1, 1, &[]).is_err());
    }
}
