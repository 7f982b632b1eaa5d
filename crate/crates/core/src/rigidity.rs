//! Distance-and-bearing (D&B) rigidity of frameworks in SE(3).
//!
//! A framework places `N` nodes at poses `(p_i, R_i)` on the complete graph `K_N`.
//! Its rigidity function stacks, in this order,
//!
//! * the distances `0.5 |p_i - p_j|^2` over undirected edges `i < j`, and
//! * the local bearings `R_i^T (p_j - p_i) / |p_j - p_i|` over directed edges `i != j`,
//!
//! both in lexicographic edge order. The rigidity matrix is the Jacobian of that stack
//! with respect to node twists `v_i = [p_dot_i; omega_i]`, where `omega_i` is the
//! inertial angular velocity (`R_dot_i = S(omega_i) R_i`). Columns are grouped per
//! node as `[p_i block, R_i block]`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::linalg::{
    nullspace_basis, numerical_rank, proj_complement3, skew, subspaces_equal, SubspaceBasis,
    DEFAULT_PINV_TOL, DEFAULT_SUBSPACE_ANGLE_TOL,
};
use crate::pose::PoseSE3;

/// Nodes closer than this are rejected as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-9;

/// A framework in SE(3) over the complete graph.
#[derive(Debug, Clone)]
pub struct Framework {
    poses: Vec<PoseSE3>,
}

impl Framework {
    pub fn new(poses: Vec<PoseSE3>) -> Result<Self> {
        if poses.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a framework needs at least 2 nodes, got {}",
                poses.len()
            )));
        }
        for pose in &poses {
            pose.validate()?;
        }
        Ok(Framework { poses })
    }

    pub fn node_count(&self) -> usize {
        self.poses.len()
    }

    pub fn poses(&self) -> &[PoseSE3] {
        &self.poses
    }

    /// Undirected edges `(i, j)`, `i < j`, in lexicographic order.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        undirected_edges(self.node_count())
    }

    /// Directed edges `(i, j)`, `i != j`, in lexicographic order.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        directed_edges(self.node_count())
    }

    /// `|E_u| + 3|E| = 7N(N-1)/2`.
    pub fn row_count(&self) -> usize {
        let n = self.node_count();
        7 * n * (n - 1) / 2
    }

    /// The rank of the rigidity matrix of an infinitesimally rigid framework, `6N - 6`.
    pub fn rigid_rank(&self) -> usize {
        6 * self.node_count() - 6
    }
}

fn undirected_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

fn directed_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect()
}

/// One constraint block of a rigidity matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum RowBlock {
    Distance(usize, usize),
    Bearing(usize, usize),
}

impl RowBlock {
    fn height(self) -> usize {
        match self {
            RowBlock::Distance(..) => 1,
            RowBlock::Bearing(..) => 3,
        }
    }

    fn nodes(self) -> (usize, usize) {
        match self {
            RowBlock::Distance(i, j) | RowBlock::Bearing(i, j) => (i, j),
        }
    }
}

pub(crate) fn complete_layout(n: usize) -> Vec<RowBlock> {
    let mut layout: Vec<RowBlock> =
        undirected_edges(n).into_iter().map(|(i, j)| RowBlock::Distance(i, j)).collect();
    layout.extend(directed_edges(n).into_iter().map(|(i, j)| RowBlock::Bearing(i, j)));
    layout
}

/// Agent rows of `K_N` first, then every row touching the object node `N`:
/// the `N` object distances, then bearing pairs `(i, O), (O, i)` per agent.
pub(crate) fn extended_layout(n: usize) -> Vec<RowBlock> {
    let mut layout = complete_layout(n);
    layout.extend((0..n).map(|i| RowBlock::Distance(i, n)));
    for i in 0..n {
        layout.push(RowBlock::Bearing(i, n));
        layout.push(RowBlock::Bearing(n, i));
    }
    layout
}

fn layout_rows(layout: &[RowBlock]) -> usize {
    layout.iter().map(|b| b.height()).sum()
}

/// Edge vector `p_j - p_i`, its length and unit direction.
fn edge_geometry(poses: &[PoseSE3], i: usize, j: usize) -> Result<(Vector3<f64>, f64, Vector3<f64>)> {
    let r = poses[j].position - poses[i].position;
    let len = r.norm();
    if !(len > COINCIDENCE_TOL) {
        return Err(Error::CoincidentNodes(i.min(j), i.max(j)));
    }
    Ok((r, len, r / len))
}

fn evaluate_gamma(poses: &[PoseSE3], layout: &[RowBlock]) -> Result<DVector<f64>> {
    let mut gamma = DVector::zeros(layout_rows(layout));
    let mut row = 0;
    for &block in layout {
        let (i, j) = block.nodes();
        let (r, _, d) = edge_geometry(poses, i, j)?;
        match block {
            RowBlock::Distance(..) => gamma[row] = 0.5 * r.norm_squared(),
            RowBlock::Bearing(..) => {
                gamma.fixed_rows_mut::<3>(row).copy_from(&(poses[i].rotation.transpose() * d));
            }
        }
        row += block.height();
    }
    Ok(gamma)
}

pub(crate) fn assemble(poses: &[PoseSE3], layout: &[RowBlock]) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(layout_rows(layout), 6 * poses.len());
    let mut row = 0;
    for &block in layout {
        let (i, j) = block.nodes();
        let (_, len, d) = edge_geometry(poses, i, j)?;
        match block {
            RowBlock::Distance(..) => {
                let diff = poses[i].position - poses[j].position;
                m.fixed_view_mut::<1, 3>(row, 6 * i).copy_from(&diff.transpose());
                m.fixed_view_mut::<1, 3>(row, 6 * j).copy_from(&(-diff).transpose());
            }
            RowBlock::Bearing(..) => {
                let ri_t = poses[i].rotation.transpose();
                let b = ri_t * d;
                let pos = proj_complement3(&b) * ri_t / len;
                m.fixed_view_mut::<3, 3>(row, 6 * i).copy_from(&(-pos));
                m.fixed_view_mut::<3, 3>(row, 6 * i + 3).copy_from(&(skew(&b) * ri_t));
                m.fixed_view_mut::<3, 3>(row, 6 * j).copy_from(&pos);
            }
        }
        row += block.height();
    }
    Ok(m)
}

pub(crate) fn assemble_rate(poses: &[PoseSE3], twists: &DVector<f64>, layout: &[RowBlock]) -> Result<DMatrix<f64>> {
    if twists.len() != 6 * poses.len() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} stacked twist entries, got {}",
            6 * poses.len(),
            twists.len()
        )));
    }
    let lin = |k: usize| twists.fixed_rows::<3>(6 * k).into_owned();
    let ang = |k: usize| twists.fixed_rows::<3>(6 * k + 3).into_owned();

    let mut m = DMatrix::zeros(layout_rows(layout), 6 * poses.len());
    let mut row = 0;
    for &block in layout {
        let (i, j) = block.nodes();
        let (_, len, d) = edge_geometry(poses, i, j)?;
        match block {
            RowBlock::Distance(..) => {
                let rate = lin(i) - lin(j);
                m.fixed_view_mut::<1, 3>(row, 6 * i).copy_from(&rate.transpose());
                m.fixed_view_mut::<1, 3>(row, 6 * j).copy_from(&(-rate).transpose());
            }
            RowBlock::Bearing(..) => {
                let ri_t = poses[i].rotation.transpose();
                let omega = skew(&ang(i));
                let r_dot = lin(j) - lin(i);
                let d_dot = proj_complement3(&d) * r_dot / len;
                let len_dot = d.dot(&r_dot);
                let p_d = proj_complement3(&d);
                // d/dt [R_i^T P_r(d) / l]
                let pos_dot = (-ri_t * omega * p_d - ri_t * (d_dot * d.transpose() + d * d_dot.transpose())) / len
                    - ri_t * p_d * (len_dot / (len * len));
                // d/dt [R_i^T S(d)]
                let rot_dot: Matrix3<f64> = -ri_t * omega * skew(&d) + ri_t * skew(&d_dot);
                m.fixed_view_mut::<3, 3>(row, 6 * i).copy_from(&(-pos_dot));
                m.fixed_view_mut::<3, 3>(row, 6 * i + 3).copy_from(&rot_dot);
                m.fixed_view_mut::<3, 3>(row, 6 * j).copy_from(&pos_dot);
            }
        }
        row += block.height();
    }
    Ok(m)
}

/// Rigidity function, rigidity matrix and its numerical rank.
#[derive(Debug, Clone)]
pub struct RigidityEvaluation {
    pub gamma: DVector<f64>,
    pub matrix: DMatrix<f64>,
    pub rank: usize,
    /// `rank < 6N - 6`.
    pub degenerate: bool,
}

/// Stacked distances then bearings.
pub fn rigidity_function(fw: &Framework) -> Result<DVector<f64>> {
    evaluate_gamma(fw.poses(), &complete_layout(fw.node_count()))
}

/// The rigidity matrix alone, without the rank computation.
pub fn rigidity_jacobian(fw: &Framework) -> Result<DMatrix<f64>> {
    assemble(fw.poses(), &complete_layout(fw.node_count()))
}

/// Full evaluation: `gamma`, the rigidity matrix, its rank (SVD cutoff `1e-10 s_max`)
/// and the degeneracy flag.
pub fn rigidity_matrix(fw: &Framework) -> Result<RigidityEvaluation> {
    let gamma = rigidity_function(fw)?;
    let matrix = rigidity_jacobian(fw)?;
    let rank = numerical_rank(&matrix, DEFAULT_PINV_TOL);
    Ok(RigidityEvaluation { gamma, matrix, rank, degenerate: rank < fw.rigid_rank() })
}

/// Time derivative of the rigidity matrix along the motion with stacked twists `v`.
pub fn rigidity_matrix_rate(fw: &Framework, v: &DVector<f64>) -> Result<DMatrix<f64>> {
    assemble_rate(fw.poses(), v, &complete_layout(fw.node_count()))
}

/// The six trivial motions: three common translations and three coordinated rotations.
#[derive(Debug, Clone)]
pub struct TrivialMotionBasis {
    pub basis: DMatrix<f64>,
}

impl TrivialMotionBasis {
    pub fn span(&self) -> SubspaceBasis {
        SubspaceBasis::span_of(&self.basis, DEFAULT_PINV_TOL)
    }
}

/// Columns `h = 1..3`: node blocks `[e_h; 0]`; columns `h = 4..6`: `[e_h x p_i; e_h]`.
pub fn trivial_motion_basis(fw: &Framework) -> TrivialMotionBasis {
    let n = fw.node_count();
    let mut basis = DMatrix::zeros(6 * n, 6);
    for (i, pose) in fw.poses().iter().enumerate() {
        for h in 0..3 {
            let e = Vector3::ith(h, 1.0);
            basis[(6 * i + h, h)] = 1.0;
            basis.fixed_view_mut::<3, 1>(6 * i, 3 + h).copy_from(&e.cross(&pose.position));
            basis.fixed_view_mut::<3, 1>(6 * i + 3, 3 + h).copy_from(&e);
        }
    }
    TrivialMotionBasis { basis }
}

/// Infinitesimal-rigidity test: `rank = 6N - 6` and `null(R)` equal to the trivial motions.
///
/// `N = 2` and rank-deficient (e.g. collinear) frameworks are rejected as degenerate.
pub fn is_infinitesimally_rigid(fw: &Framework) -> Result<(bool, usize)> {
    if fw.node_count() == 2 {
        return Err(Error::DegenerateConfiguration("N=2".into()));
    }
    let eval = rigidity_matrix(fw)?;
    if eval.degenerate {
        return Err(Error::DegenerateConfiguration(format!(
            "rank {} < 6N-6 = {}",
            eval.rank,
            fw.rigid_rank()
        )));
    }
    let null = nullspace_basis(&eval.matrix, DEFAULT_PINV_TOL);
    let trivial = trivial_motion_basis(fw).span();
    let same = subspaces_equal(&null, &trivial, DEFAULT_SUBSPACE_ANGLE_TOL)?;
    Ok((eval.rank == fw.rigid_rank() && same, eval.rank))
}

/// Summary of the rigidity of one framework.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidityReport {
    pub nodes: usize,
    pub rank: usize,
    pub rigid_rank: usize,
    pub null_dim: usize,
    pub trivial_dim: usize,
    /// `N = 2`, or rank below `6N - 6`.
    pub degenerate: bool,
    /// Infinitesimally rigid.
    pub rigid: bool,
}

pub fn rigidity_report(fw: &Framework) -> Result<RigidityReport> {
    let eval = rigidity_matrix(fw)?;
    let null = nullspace_basis(&eval.matrix, DEFAULT_PINV_TOL);
    let trivial = trivial_motion_basis(fw).span();
    let degenerate = fw.node_count() == 2 || eval.degenerate;
    let rigid = match is_infinitesimally_rigid(fw) {
        Ok((rigid, _)) => rigid,
        Err(Error::DegenerateConfiguration(_)) => false,
        Err(e) => return Err(e),
    };
    Ok(RigidityReport {
        nodes: fw.node_count(),
        rank: eval.rank,
        rigid_rank: fw.rigid_rank(),
        null_dim: null.dim(),
        trivial_dim: trivial.dim(),
        degenerate,
        rigid,
    })
}

/// Rigidity matrix of agents plus object (object as node `N + 1`), rows arranged as
/// `[[R_G, 0], [R_O1, R_O2]]`.
#[derive(Debug, Clone)]
pub struct ExtendedRigidity {
    /// The full `7(N+1)N/2 x (6N+6)` matrix.
    pub matrix: DMatrix<f64>,
    /// `R_O1`, object-incident rows restricted to the agent columns (`7N x 6N`).
    pub object_agents: DMatrix<f64>,
    /// `R_O2`, object-incident rows restricted to the object columns (`7N x 6`).
    pub object_object: DMatrix<f64>,
}

impl ExtendedRigidity {
    /// The agents-only block `R_G` in the top-left corner.
    pub fn agents(&self) -> DMatrix<f64> {
        let n = self.object_agents.ncols() / 6;
        self.matrix.view((0, 0), (7 * n * (n - 1) / 2, 6 * n)).into_owned()
    }
}

fn with_object(fw: &Framework, object: &PoseSE3) -> Result<Vec<PoseSE3>> {
    object.validate()?;
    let mut poses = fw.poses().to_vec();
    poses.push(*object);
    Ok(poses)
}

pub fn extended_rigidity_matrix(fw: &Framework, object: &PoseSE3) -> Result<ExtendedRigidity> {
    let n = fw.node_count();
    let poses = with_object(fw, object)?;
    let matrix = assemble(&poses, &extended_layout(n))?;
    let top = 7 * n * (n - 1) / 2;
    let object_agents = matrix.view((top, 0), (7 * n, 6 * n)).into_owned();
    let object_object = matrix.view((top, 6 * n), (7 * n, 6)).into_owned();
    Ok(ExtendedRigidity { matrix, object_agents, object_object })
}

/// Time derivative of the extended matrix (same row arrangement) along `v_bar = [v; v_O]`.
pub fn extended_rigidity_rate(fw: &Framework, object: &PoseSE3, v_bar: &DVector<f64>) -> Result<DMatrix<f64>> {
    let poses = with_object(fw, object)?;
    assemble_rate(&poses, v_bar, &extended_layout(fw.node_count()))
}

/// Column permutation to `[all p | all R]` ordering.
pub fn position_rotation_columns(r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = r.ncols() / 6;
    let mut out = DMatrix::zeros(r.nrows(), r.ncols());
    for i in 0..n {
        out.columns_mut(3 * i, 3).copy_from(&r.columns(6 * i, 3));
        out.columns_mut(3 * n + 3 * i, 3).copy_from(&r.columns(6 * i + 3, 3));
    }
    out
}
