//! Interaction and internal forces of a rigid cooperative grasp.
//!
//! The agents exert `h` on the object and feel `-h` back; the object receives
//! `h_O = G h`. The constraint forces come out of Gauss's principle applied to the
//! complete-graph rigidity constraints of agents plus object:
//!
//! ```text
//! [-h; h_O] = -R^T (R M_bar^{-1} R^T)^+ (R_dot v_bar + R alpha)
//! ```
//!
//! and the internal part of `h` is its component in `null(G)`.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{unconstrained_accelerations, DynamicTerms, StackedTerms};
use crate::error::{Error, Result};
use crate::grasp::{right_inverse, RightInverseKind};
use crate::linalg::{numerical_rank, pinv_with_rank, spd_inverse, spd_sqrt, DEFAULT_PINV_TOL};
use crate::pose::{PoseSE3, Twist6, Wrench6};
use crate::rigidity::{
    extended_rigidity_matrix, extended_rigidity_rate, rigidity_jacobian, rigidity_matrix_rate, Framework,
};
use crate::system::Snapshot;

/// Relative singular-value cutoff for the rank-deficient constraint Gramians.
pub const FORCE_PINV_TOL: f64 = 1e-9;

/// Allowed violation of the velocity constraint, relative to `max(1, |R| |v|)`.
pub const CONSTRAINT_TOL: f64 = 1e-6;

fn check_constraint(r: &DMatrix<f64>, v: &DVector<f64>) -> Result<()> {
    let residual = (r * v).norm();
    if !(residual <= CONSTRAINT_TOL * (r.norm() * v.norm()).max(1.0)) {
        return Err(Error::ConstraintViolation(residual));
    }
    Ok(())
}

fn rel_gap(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Both algebraic forms of `R^T (R W^{-1} R^T)^+ b`:
/// (a) as written and (b) `W^{1/2} (R W^{-1/2})^+ b`. Also returns the rank of `R`
/// that form (b) saw.
fn gauss_projection(
    r: &DMatrix<f64>,
    w: &DMatrix<f64>,
    b: &DVector<f64>,
    what: &'static str,
) -> Result<(DVector<f64>, DVector<f64>, usize)> {
    let w_inv = spd_inverse(w, what)?;
    let (gram_pinv, _) = pinv_with_rank(&(r * &w_inv * r.transpose()), FORCE_PINV_TOL);
    let form_a = r.transpose() * (gram_pinv * b);
    let (half, inv_half) = spd_sqrt(w, what)?;
    let (scaled_pinv, rank) = pinv_with_rank(&(r * inv_half), FORCE_PINV_TOL);
    let form_b = half * (scaled_pinv * b);
    Ok((form_a, form_b, rank))
}

/// Constraint forces from Gauss's principle on the agents-plus-object framework.
#[derive(Debug, Clone)]
pub struct GaussForces {
    /// Stacked agent wrenches on the object.
    pub h: DVector<f64>,
    pub h_o: Wrench6,
    /// Relative gap between the two algebraic forms.
    pub form_gap: f64,
    /// `|h_O - G h| / max(|h_O|, |G h|)`.
    pub wrench_gap: f64,
}

/// `[-h; h_O]` for agents at `fw`, object at `object`, velocities `v_bar = [v; v_O]`,
/// stacked terms of agents plus object, and agent inputs `u`.
pub fn interaction_forces_gauss(
    fw: &Framework,
    object: &PoseSE3,
    v_bar: &DVector<f64>,
    terms: &StackedTerms,
    u: &DVector<f64>,
) -> Result<GaussForces> {
    let n = fw.node_count();
    if v_bar.len() != 6 * n + 6 || terms.dim() != 6 * n + 6 || u.len() != 6 * n {
        return Err(Error::DimensionMismatch(format!("expected {} agents plus the object", n)));
    }
    if n == 2 {
        return Err(Error::DegenerateConfiguration("N=2".into()));
    }
    let ext = extended_rigidity_matrix(fw, object)?;
    check_constraint(&ext.matrix, v_bar)?;
    let r_dot = extended_rigidity_rate(fw, object, v_bar)?;

    let mut u_bar = DVector::zeros(6 * n + 6);
    u_bar.rows_mut(0, 6 * n).copy_from(u);
    let chol = terms.m.clone().cholesky().ok_or(Error::NonSpd("M_bar"))?;
    let alpha = chol.solve(&(u_bar - &terms.c * v_bar - &terms.g));
    let b = &r_dot * v_bar + &ext.matrix * alpha;

    let (form_a, form_b, rank) = gauss_projection(&ext.matrix, &terms.m, &b, "M_bar")?;
    if rank < 6 * n {
        return Err(Error::DegenerateConfiguration(format!("rank {} < 6(N+1)-6 = {}", rank, 6 * n)));
    }
    let h = form_a.rows(0, 6 * n).into_owned();
    let h_o = -Wrench6::from_iterator(form_a.rows(6 * n, 6).iter().copied());
    let g = crate::grasp::grasp_matrix_from_arms(
        &fw.poses().iter().map(|p| p.position - object.position).collect::<Vec<_>>(),
    );
    let gh = DVector::from_iterator(6, (&g * &h).iter().copied());
    let h_o_dyn = DVector::from_iterator(6, h_o.iter().copied());
    Ok(GaussForces { h, h_o, form_gap: rel_gap(&form_a, &form_b), wrench_gap: rel_gap(&h_o_dyn, &gh) })
}

/// [`interaction_forces_gauss`] at a snapshot.
pub fn snapshot_interaction_forces(snap: &Snapshot, u: &DVector<f64>) -> Result<GaussForces> {
    let terms = snap.agents.with_object(&snap.object);
    interaction_forces_gauss(&snap.framework()?, snap.pose(), &snap.v_bar(), &terms, u)
}

/// Internal forces from Gauss's principle on the agent framework alone.
#[derive(Debug, Clone)]
pub struct InternalForces {
    pub h_int: DVector<f64>,
    /// Relative gap between the two algebraic forms.
    pub form_gap: f64,
}

/// `h_int = R^T (R M^{-1} R^T)^+ (R_dot v + R alpha_int)` with any constraint matrix `r`
/// whose nullspace is the rigid motions, and its time derivative `r_dot`.
pub fn internal_forces_from_constraints(
    r: &DMatrix<f64>,
    r_dot: &DMatrix<f64>,
    v: &DVector<f64>,
    agents: &StackedTerms,
    u: &DVector<f64>,
) -> Result<InternalForces> {
    let n6 = agents.dim();
    if r.ncols() != n6 || r_dot.shape() != r.shape() || v.len() != n6 || u.len() != n6 {
        return Err(Error::DimensionMismatch("constraint matrix, velocities and inputs disagree".into()));
    }
    check_constraint(r, v)?;
    let b = internal_force_condition(r, r_dot, v, agents, u)?;
    let (form_a, form_b, rank) = gauss_projection(r, &agents.m, &b, "M")?;
    if rank + 6 < n6 {
        return Err(Error::DegenerateConfiguration(format!("rank {} < 6N-6 = {}", rank, n6 - 6)));
    }
    Ok(InternalForces { form_gap: rel_gap(&form_a, &form_b), h_int: form_a })
}

/// `b = R_dot v + R M^{-1}(u - C v - g)`; internal forces vanish exactly when `R^T b = 0`.
pub fn internal_force_condition(
    r: &DMatrix<f64>,
    r_dot: &DMatrix<f64>,
    v: &DVector<f64>,
    agents: &StackedTerms,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    let chol = agents.m.clone().cholesky().ok_or(Error::NonSpd("M"))?;
    let alpha_int = chol.solve(&(u - &agents.c * v - &agents.g));
    Ok(r_dot * v + r * alpha_int)
}

/// Internal forces of agents at `fw` moving with stacked twists `v` under inputs `u`.
pub fn internal_forces_gauss(
    fw: &Framework,
    v: &DVector<f64>,
    agents: &StackedTerms,
    u: &DVector<f64>,
) -> Result<InternalForces> {
    if fw.node_count() == 2 {
        return Err(Error::DegenerateConfiguration("N=2".into()));
    }
    let r = rigidity_jacobian(fw)?;
    let r_dot = rigidity_matrix_rate(fw, v)?;
    internal_forces_from_constraints(&r, &r_dot, v, agents, u)
}

/// Agent wrenches in closed form:
/// `h = (M^{-1} + G^T M_O^{-1} G)^{-1} [M^{-1}(u - g - C v) - G_dot^T v_O + G^T M_O^{-1}(C_O v_O + g_O)]`.
pub fn interaction_forces_closed(
    g: &DMatrix<f64>,
    g_dot: &DMatrix<f64>,
    agents: &StackedTerms,
    object: &DynamicTerms,
    u: &DVector<f64>,
    v_o: &Twist6,
) -> Result<DVector<f64>> {
    let v = g.transpose() * v_o;
    let m_inv = spd_inverse(&agents.m, "M")?;
    let mo = DMatrix::from_column_slice(6, 6, object.m.as_slice());
    let mo_inv = spd_inverse(&mo, "M_O")?;
    let lhs = &m_inv + g.transpose() * &mo_inv * g;
    let obj = object.c * v_o + object.g;
    let obj = DVector::from_column_slice(obj.as_slice());
    let rhs = &m_inv * (u - &agents.g - &agents.c * &v) - g_dot.transpose() * v_o + g.transpose() * (&mo_inv * obj);
    let chol = lhs.cholesky().ok_or(Error::NonSpd("M^{-1} + G^T M_O^{-1} G"))?;
    Ok(chol.solve(&rhs))
}

/// [`interaction_forces_closed`] at a snapshot.
pub fn snapshot_interaction_closed(snap: &Snapshot, u: &DVector<f64>) -> Result<DVector<f64>> {
    interaction_forces_closed(&snap.g, &snap.g_dot, &snap.agents, &snap.object, u, &snap.twist)
}

/// `I - M G^T (G M G^T)^{-1} G`, the projector onto internal forces.
pub fn internal_projector(m: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let g1 = right_inverse(g, m, RightInverseKind::InertiaWeighted).map_err(|e| match e {
        Error::SingularInertia => Error::NonSpd("M"),
        other => other,
    })?;
    Ok(DMatrix::identity(g.ncols(), g.ncols()) - g1 * g)
}

/// `h_int = (I - M G^T (G M G^T)^{-1} G) h`.
pub fn internal_from_interaction(m: &DMatrix<f64>, g: &DMatrix<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(internal_projector(m, g)? * h)
}

/// Splits `h = G* G h + (I - G* G) h` into motion-inducing and internal parts.
pub fn force_decomposition(
    g_star: &DMatrix<f64>,
    g: &DMatrix<f64>,
    h: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let defect = (g * g_star - DMatrix::identity(6, 6)).norm();
    if !(defect <= 1e-9) {
        return Err(Error::NotARightInverse(defect));
    }
    let h_m = g_star * (g * h);
    let h_int = h - &h_m;
    Ok((h_m, h_int))
}

/// `|M G^T (G M G^T)^{-1} G + M^{1/2} (R M^{-1/2})^+ R M^{-1} - I|_F / sqrt(6N)`,
/// without checking the framework.
pub fn projection_identity_residual_unchecked(m: &DMatrix<f64>, g: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<f64> {
    let n6 = g.ncols();
    let p1 = DMatrix::identity(n6, n6) - internal_projector(m, g)?;
    let (half, inv_half) = spd_sqrt(m, "M")?;
    let m_inv = &inv_half * &inv_half;
    let (scaled_pinv, _) = pinv_with_rank(&(r * &inv_half), DEFAULT_PINV_TOL);
    let lhs = p1 + half * scaled_pinv * r * m_inv;
    Ok((lhs - DMatrix::identity(n6, n6)).norm() / (n6 as f64).sqrt())
}

/// [`projection_identity_residual_unchecked`] for nondegenerate agent frameworks only.
pub fn projection_identity_residual(m: &DMatrix<f64>, g: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<f64> {
    let n6 = g.ncols();
    if n6 == 12 {
        return Err(Error::DegenerateConfiguration("N=2".into()));
    }
    let rank = numerical_rank(r, DEFAULT_PINV_TOL);
    if rank + 6 < n6 {
        return Err(Error::DegenerateConfiguration(format!("rank {} < 6N-6 = {}", rank, n6 - 6)));
    }
    projection_identity_residual_unchecked(m, g, r)
}

/// Internal forces computed with the rigidity matrix and with `P R`.
#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub h_int: DVector<f64>,
    pub h_int_scaled: DVector<f64>,
    /// `|h_int - h_int_scaled| / max(|h_int|, |h_int_scaled|)`.
    pub deviation: f64,
}

/// Recomputes internal forces after the invertible row transform `p` of the rigidity
/// matrix (and, since `p` is constant, of its rate).
pub fn rigidity_invariance_check(
    fw: &Framework,
    v: &DVector<f64>,
    agents: &StackedTerms,
    u: &DVector<f64>,
    p: &DMatrix<f64>,
) -> Result<InvarianceReport> {
    let rows = fw.row_count();
    if p.nrows() != rows || p.ncols() != rows || numerical_rank(p, 1e-12) < rows {
        return Err(Error::SingularScaling);
    }
    let r = rigidity_jacobian(fw)?;
    let r_dot = rigidity_matrix_rate(fw, v)?;
    let plain = internal_forces_from_constraints(&r, &r_dot, v, agents, u)?;
    let scaled = internal_forces_from_constraints(&(p * &r), &(p * &r_dot), v, agents, u)?;
    Ok(InvarianceReport {
        deviation: rel_gap(&plain.h_int, &scaled.h_int),
        h_int: plain.h_int,
        h_int_scaled: scaled.h_int,
    })
}

/// Agent wrenches with their object-wrench image and decomposition.
#[derive(Debug, Clone)]
pub struct ForceReport {
    pub h: DVector<f64>,
    pub h_o: Wrench6,
    pub h_m: DVector<f64>,
    pub h_int: DVector<f64>,
    /// Gap between the two algebraic forms of the Gauss-principle forces.
    pub form_gap: f64,
    /// `|h_O - G h|` relative.
    pub wrench_gap: f64,
    /// `|h_m + h_int - h| / |h|`.
    pub split_gap: f64,
}

/// Gauss-principle forces at a snapshot, split with the inertia-weighted right inverse.
pub fn force_report(snap: &Snapshot, u: &DVector<f64>) -> Result<ForceReport> {
    let gauss = snapshot_interaction_forces(snap, u)?;
    let g_star = right_inverse(&snap.g, &snap.agents.m, RightInverseKind::InertiaWeighted)?;
    let (h_m, h_int) = force_decomposition(&g_star, &snap.g, &gauss.h)?;
    let split_gap = rel_gap(&(&h_m + &h_int), &gauss.h);
    Ok(ForceReport {
        h: gauss.h,
        h_o: gauss.h_o,
        h_m,
        h_int,
        form_gap: gauss.form_gap,
        wrench_gap: gauss.wrench_gap,
        split_gap,
    })
}

/// Unconstrained accelerations at a snapshot; see [`unconstrained_accelerations`].
pub fn snapshot_unconstrained(snap: &Snapshot, u: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    unconstrained_accelerations(&snap.agents, &snap.object, u, &snap.v, &snap.twist)
}
