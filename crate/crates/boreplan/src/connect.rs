//! Two-point boundary-value connectors and the cone test.
//!
//! Bidirectional planners weld their trees with one of two connectors:
//!
//! - [`dubins3d`]: a geometric arc-straight-arc solver. Each arc lies in
//!   the plane spanned by its endpoint tangent and the straight-line
//!   direction; a fixed-point iteration on that direction solves the
//!   tangency conditions. All four turn-side combinations are tried and the
//!   shortest converged path wins, mirroring the planar CSC families.
//! - [`spline_connect`]: alternately steers two-spiral segments from each
//!   end toward the other until one side can land a segment exactly on the
//!   counterpart's position with a small tangent error, or the sides miss
//!   each other.
//!
//! Connection failures are ordinary outcomes (`Err(ConnectFailure)`), not
//! errors: the planner simply keeps growing its trees.

use crate::se3::{orthogonal_tiebreak, Direction, MetricConfig, Pose};
use crate::steering::{spiral_joint_curvature, spiral_pair, SteerConfig};
use crate::trajectory::{ArcSegment, Segment, Trajectory};
use crate::tree::{NodeId, SearchTree};
use nalgebra::{Unit, UnitQuaternion, Vector3};

/// Tangent tolerance of the spline interpolation criterion, radians. The
/// closed-form terminal lands with exact position and tangent, so the
/// realized error is far below this bound; it remains the contractual
/// threshold a landing must satisfy.
pub const PHI_CONNECT: f64 = 1e-3;

/// Default residual bound of the Dubins solver (mm + rad combined).
pub const DUBINS_TOL: f64 = 1e-8;

/// Default iteration cap of the Dubins solver.
pub const DUBINS_MAX_ITER: u32 = 50;

/// Why a connection attempt produced no path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConnectFailure {
    /// Coincident positions or otherwise ill-posed query.
    Degenerate,
    /// The iteration did not reach the residual bound.
    NoConvergence,
    /// The two sides moved apart for three consecutive rounds.
    Diverged,
    /// Neither side could make progress.
    Stalled,
    /// The round limit was exhausted.
    MaxRounds,
}

/// Search cone for connection candidates: apex and axis come from the pose
/// of a freshly extended node, height and opening angle from the planner
/// configuration.
#[derive(Clone, Copy, Debug)]
pub struct ConeQuery {
    pub apex: Vector3<f64>,
    pub axis: Direction,
    pub height: f64,
    pub half_angle: f64,
}

impl ConeQuery {
    pub fn new(apex: Vector3<f64>, axis: Direction, height: f64, half_angle: f64) -> Self {
        assert!(height > 0.0, "cone height must be positive");
        assert!(
            half_angle > 0.0 && half_angle < std::f64::consts::FRAC_PI_2,
            "cone half angle must be in (0, pi/2)"
        );
        ConeQuery {
            apex,
            axis,
            height,
            half_angle,
        }
    }

    /// Cone in front of `pose`, along its tangent.
    pub fn from_pose(pose: &Pose, height: f64, half_angle: f64) -> Self {
        ConeQuery::new(pose.position, pose.tangent(), height, half_angle)
    }

    /// Position-only membership: `0 <= (p - apex) . axis <= height` and the
    /// angle between `p - apex` and the axis at most `half_angle`. The apex
    /// itself is a member.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let v = p - self.apex;
        let proj = v.dot(&self.axis);
        if proj < 0.0 || proj > self.height {
            return false;
        }
        proj >= v.norm() * self.half_angle.cos()
    }
}

/// Node ids of `tree` inside the cone, ordered by increasing combined pose
/// distance to `q_next` (ties by node id). Equals a brute-force filter over
/// all nodes.
///
/// `q_next` and the candidate poses are compared in path direction
/// ([`SearchTree::forward_pose`]), the same poses a connector would get.
pub fn cone_candidates(
    tree: &SearchTree,
    q_next: &Pose,
    query: &ConeQuery,
    metric: &MetricConfig,
) -> Vec<NodeId> {
    // The cone is contained in the ball of radius height/cos(alpha).
    let radius = query.height / query.half_angle.cos();
    let mut hits: Vec<(f64, NodeId)> = tree
        .nodes_in_ball(&query.apex, radius)
        .into_iter()
        .filter(|&id| query.contains(&tree.node(id).pose.position))
        .map(|id| {
            let pose = tree.forward_pose(id);
            (crate::se3::pose_distance(&pose, q_next, metric), id)
        })
        .collect();
    hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    hits.into_iter().map(|(_, id)| id).collect()
}

/// Arc-straight-arc connection between two poses.
#[derive(Clone, Debug)]
pub struct DubinsSolution {
    /// Start arc, straight line, end arc. Zero-angle arcs degenerate to
    /// zero-length straight segments.
    pub segments: [ArcSegment; 3],
    pub total_length: f64,
    pub iterations: u32,
    /// Endpoint reconstruction error, mm + rad combined.
    pub residual: f64,
}

impl DubinsSolution {
    pub fn to_trajectory(&self) -> Trajectory {
        Trajectory::from_segments(self.segments.iter().cloned().map(Segment::Arc).collect())
    }
}

/// Solves the 3D Dubins problem: a curvature-bounded arc-line-arc path
/// leaving `q_a` along its tangent and arriving at `q_b` along its tangent,
/// with both arc radii `1/kappa_max`.
///
/// The fixed-point iterates the straight-line direction; each iteration
/// reconstructs both arcs geometrically in the planes spanned by the
/// endpoint tangents and the current direction. Non-convergence and
/// endpoints too close for any arc-line-arc path report failure without
/// side effects.
pub fn dubins3d(
    q_a: &Pose,
    q_b: &Pose,
    kappa_max: f64,
    tol: f64,
    max_iter: u32,
) -> Result<DubinsSolution, ConnectFailure> {
    let pa = q_a.position;
    let pb = q_b.position;
    if (pb - pa).norm() < 1e-9 {
        return Err(ConnectFailure::Degenerate);
    }
    let ta = q_a.tangent().into_inner();
    let tb = q_b.tangent().into_inner();
    let r = 1.0 / kappa_max;

    let mut best: Option<DubinsSolution> = None;
    for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        if let Some(sol) = solve_word(q_a, &pa, &ta, &pb, &tb, r, sa, sb, tol, max_iter) {
            let better = match &best {
                None => true,
                Some(b) => sol.total_length < b.total_length,
            };
            if better {
                best = Some(sol);
            }
        }
    }
    best.ok_or(ConnectFailure::NoConvergence)
}

/// Tangency mismatch for a candidate line direction: the difference
/// between the normalized exit-to-entry chord and the direction itself.
#[allow(clippy::too_many_arguments)]
fn tangency_residual(
    pa: &Vector3<f64>,
    ta: &Vector3<f64>,
    pb: &Vector3<f64>,
    tb: &Vector3<f64>,
    r: f64,
    sa: f64,
    sb: f64,
    dir: &Vector3<f64>,
) -> Option<(Vector3<f64>, (f64, Vector3<f64>, f64, Vector3<f64>))> {
    let (phi_a, qa_exit) = turn_to_direction(pa, ta, dir, sa, r)?;
    let (phi_b, qb_entry) = turn_from_direction(pb, tb, dir, sb, r)?;
    let line = qb_entry - qa_exit;
    let len = line.norm();
    let u = if len < 1e-12 { *dir } else { line / len };
    Some((u - dir, (phi_a, qa_exit, phi_b, qb_entry)))
}

/// One turn-side combination, solved by damped Newton on the two
/// tangent-plane coordinates of the line direction. Plain fixed-point
/// iteration on the direction amplifies errors by ~2r/L and diverges for
/// weld-scale separations, so Newton it is; the chord is the initial guess.
#[allow(clippy::too_many_arguments)]
fn solve_word(
    q_a: &Pose,
    pa: &Vector3<f64>,
    ta: &Vector3<f64>,
    pb: &Vector3<f64>,
    tb: &Vector3<f64>,
    r: f64,
    sa: f64,
    sb: f64,
    tol: f64,
    max_iter: u32,
) -> Option<DubinsSolution> {
    let mut dir = (pb - pa).normalize();
    let mut iterations = 0;
    let mut converged = false;
    let mut exit = (0.0, *pa, 0.0, *pb);
    let fd_step = 1e-7;

    while iterations < max_iter {
        iterations += 1;
        let (res, geom) = tangency_residual(pa, ta, pb, tb, r, sa, sb, &dir)?;
        exit = geom;
        let rn = res.norm();
        if rn < 0.25 * tol {
            converged = true;
            break;
        }
        // Finite-difference Jacobian in the tangent plane at `dir`.
        let e1 = orthogonal_tiebreak(&dir).into_inner();
        let e2 = dir.cross(&e1);
        let g = [res.dot(&e1), res.dot(&e2)];
        let mut jac = [[0.0f64; 2]; 2];
        for (k, e) in [e1, e2].iter().enumerate() {
            let d_k = (dir + e * fd_step).normalize();
            let (res_k, _) = tangency_residual(pa, ta, pb, tb, r, sa, sb, &d_k)?;
            jac[0][k] = (res_k.dot(&e1) - g[0]) / fd_step;
            jac[1][k] = (res_k.dot(&e2) - g[1]) / fd_step;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-14 {
            return None;
        }
        let du = (-g[0] * jac[1][1] + g[1] * jac[0][1]) / det;
        let dv = (-g[1] * jac[0][0] + g[0] * jac[1][0]) / det;

        // Damping: halve the step until the residual norm decreases.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let cand = (dir + e1 * (lambda * du) + e2 * (lambda * dv)).normalize();
            if let Some((res_c, _)) = tangency_residual(pa, ta, pb, tb, r, sa, sb, &cand) {
                if res_c.norm() < rn {
                    dir = cand;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    if !converged {
        return None;
    }
    let (phi_a, qa_exit, phi_b, qb_entry) = exit;
    // The line must run forward along the tangent direction.
    if (qb_entry - qa_exit).dot(&dir) < -1e-9 {
        return None;
    }

    // Chain the three segments forward from q_a so G1 continuity is exact;
    // the accumulated endpoint error against q_b is the residual.
    let arc_a = make_arc(q_a, ta, &dir, sa, r, phi_a);
    let end_a = arc_a.end_pose();
    let line_len = (qb_entry - qa_exit).norm();
    let line_seg = ArcSegment::straight(end_a, line_len);
    let end_line = line_seg.end_pose();
    let t_line = end_line.tangent().into_inner();
    let arc_b = make_arc(&end_line, &t_line, tb, sb, r, phi_b);
    let end_b = arc_b.end_pose();

    let pos_err = (end_b.position - pb).norm();
    let dir_err = (end_b.tangent().into_inner() - tb).norm();
    let residual = pos_err + dir_err;
    if pos_err > 1e-6 || dir_err > 1e-8 {
        return None;
    }
    let total_length = arc_a.length() + line_len + arc_b.length();
    Some(DubinsSolution {
        segments: [arc_a, line_seg, arc_b],
        total_length,
        iterations,
        residual,
    })
}

/// Arc turning from tangent `t` to tangent `target_dir` about the side
/// `s`; returns (angle in [0, 2pi), exit point).
fn turn_to_direction(
    p: &Vector3<f64>,
    t: &Vector3<f64>,
    target_dir: &Vector3<f64>,
    s: f64,
    r: f64,
) -> Option<(f64, Vector3<f64>)> {
    let cross = t.cross(target_dir);
    let cn = cross.norm();
    if cn < 1e-12 {
        if t.dot(target_dir) >= 0.0 {
            return Some((0.0, *p));
        }
        // Antiparallel: half turn in a deterministic plane.
        let axis = orthogonal_tiebreak(t).into_inner() * s;
        let center = p + r * axis.cross(t);
        let rot = UnitQuaternion::from_axis_angle(
            &Unit::new_normalize(axis),
            std::f64::consts::PI,
        );
        return Some((std::f64::consts::PI, center + rot * (p - center)));
    }
    let axis = cross * (s / cn);
    let center = p + r * axis.cross(t);
    let mut phi = cross.dot(&axis).atan2(t.dot(target_dir));
    if phi < 0.0 {
        phi += 2.0 * std::f64::consts::PI;
    }
    let rot = UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), phi);
    Some((phi, center + rot * (p - center)))
}

/// Arc arriving at `(p, t)` having started with tangent `from_dir`;
/// returns (angle, entry point).
fn turn_from_direction(
    p: &Vector3<f64>,
    t: &Vector3<f64>,
    from_dir: &Vector3<f64>,
    s: f64,
    r: f64,
) -> Option<(f64, Vector3<f64>)> {
    let cross = from_dir.cross(t);
    let cn = cross.norm();
    if cn < 1e-12 {
        if from_dir.dot(t) >= 0.0 {
            return Some((0.0, *p));
        }
        let axis = orthogonal_tiebreak(t).into_inner() * s;
        let center = p + r * axis.cross(t);
        let rot = UnitQuaternion::from_axis_angle(
            &Unit::new_normalize(axis),
            -std::f64::consts::PI,
        );
        return Some((std::f64::consts::PI, center + rot * (p - center)));
    }
    let axis = cross * (s / cn);
    let center = p + r * axis.cross(t);
    let mut phi = cross.dot(&axis).atan2(from_dir.dot(t));
    if phi < 0.0 {
        phi += 2.0 * std::f64::consts::PI;
    }
    let rot = UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), -phi);
    Some((phi, center + rot * (p - center)))
}

/// Arc segment starting at `start` that turns its tangent from `t` to
/// `target_dir` (side `s`, radius `r`, precomputed angle `phi`).
fn make_arc(
    start: &Pose,
    t: &Vector3<f64>,
    target_dir: &Vector3<f64>,
    s: f64,
    r: f64,
    phi: f64,
) -> ArcSegment {
    if phi < 1e-12 {
        return ArcSegment::straight(*start, 0.0);
    }
    let cross = t.cross(target_dir);
    let cn = cross.norm();
    let axis = if cn < 1e-12 {
        Unit::new_normalize(orthogonal_tiebreak(t).into_inner() * s)
    } else {
        Unit::new_normalize(cross * (s / cn))
    };
    let center = start.position + r * axis.into_inner().cross(t);
    ArcSegment::turn(*start, center, axis, phi, r)
}

/// Cheap weld-feasibility score for ranking connection candidates: the
/// curvature a corner-polygon connection would need, `inf` when no forward
/// polygon exists. Both connectors face essentially the same feasibility
/// geometry, so one scorer ranks candidates for either flavor.
pub fn weld_feasibility_score(q_a: &Pose, q_b: &Pose, kappa_max: f64) -> f64 {
    let u = q_a.tangent().into_inner();
    let v = q_b.tangent().into_inner();
    let delta = q_b.position - q_a.position;
    let len2 = delta.norm_squared();
    if len2 < 1e-18 {
        return f64::INFINITY;
    }
    // Symmetric two-pair closed form: delta = d*(u + 2w + v) with unit w
    // gives the corner distance directly; the required curvature follows
    // from the two half-turns. Cheap and monotone enough for ranking.
    let s = u + v;
    let b_half = delta.dot(&s);
    let c = s.norm_squared() - 4.0;
    let disc = (b_half * b_half - len2 * c).max(0.0);
    let x = (b_half + disc.sqrt()) / len2;
    if !(x > 1e-9) {
        return f64::INFINITY;
    }
    let d = 1.0 / x;
    let w_vec = (delta * x - s) * 0.5;
    let wn = w_vec.norm();
    if !(0.5..=2.0).contains(&wn) {
        return f64::INFINITY;
    }
    let w = w_vec / wn;
    let beta1 = 0.5 * u.dot(&w).clamp(-1.0, 1.0).acos();
    let beta2 = 0.5 * w.dot(&v).clamp(-1.0, 1.0).acos();
    let req = spiral_joint_curvature(d, beta1).max(spiral_joint_curvature(d, beta2));
    let _ = kappa_max;
    req
}

/// Smallest corner trim whose spiral-pair joint curvature stays within the
/// bound for half-turn `beta`: inverts `kappa = c4 sin(b) / (d cos^2 b)`.
fn spiral_trim_required(beta: f64, kappa_max: f64) -> f64 {
    let (_, _, _, c4) = crate::steering::spiral_constants();
    let c = beta.cos();
    if c <= 1e-9 {
        return f64::INFINITY;
    }
    c4 * beta.sin() / (kappa_max * c * c)
}

/// Boundary-value interpolation from a pose to a target pose: a corner
/// polygon `delta = l1*u + m*w + l2*v` whose two corners are smoothed by
/// spiral pairs at the minimal curvature-feasible trim, with straight
/// infill on the legs. The middle direction `w` is the unknown, solved by
/// damped Newton exactly like the Dubins solver; spirals have zero end
/// curvature so the whole chain is curvature-continuous.
///
/// On success the segments land exactly on the target with the exact
/// arrival tangent.
fn spline_terminal(
    from: &Pose,
    target_pos: &Vector3<f64>,
    required_dir: &Vector3<f64>,
    kappa_max: f64,
) -> Option<Vec<Segment>> {
    let u = from.tangent().into_inner();
    let v = *required_dir;
    let delta = target_pos - from.position;
    let len = delta.norm();
    if len < 1e-9 {
        return None;
    }

    // Minimal trims and the middle-leg residual for a candidate direction.
    let legs = |w: &Vector3<f64>| -> (f64, f64, Vector3<f64>) {
        let beta1 = 0.5 * u.dot(w).clamp(-1.0, 1.0).acos();
        let beta2 = 0.5 * w.dot(&v).clamp(-1.0, 1.0).acos();
        let d1 = spiral_trim_required(beta1, kappa_max);
        let d2 = spiral_trim_required(beta2, kappa_max);
        let rest = delta - u * d1 - v * d2;
        (d1, d2, rest)
    };
    let residual = |w: &Vector3<f64>| -> Option<Vector3<f64>> {
        let (d1, d2, rest) = legs(w);
        if !d1.is_finite() || !d2.is_finite() {
            return None;
        }
        let n = rest.norm();
        if n < 1e-12 {
            return Some(Vector3::zeros());
        }
        Some(rest / n - w)
    };

    let mut w = delta / len;
    let mut converged = false;
    let fd_step = 1e-7;
    for _ in 0..30 {
        let res = residual(&w)?;
        let rn = res.norm();
        if rn < 1e-10 {
            converged = true;
            break;
        }
        let e1 = orthogonal_tiebreak(&w).into_inner();
        let e2 = w.cross(&e1);
        let g = [res.dot(&e1), res.dot(&e2)];
        let mut jac = [[0.0f64; 2]; 2];
        for (k, e) in [e1, e2].iter().enumerate() {
            let wk = (w + e * fd_step).normalize();
            let rk = residual(&wk)?;
            jac[0][k] = (rk.dot(&e1) - g[0]) / fd_step;
            jac[1][k] = (rk.dot(&e2) - g[1]) / fd_step;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-14 {
            return None;
        }
        let du = (-g[0] * jac[1][1] + g[1] * jac[0][1]) / det;
        let dv = (-g[1] * jac[0][0] + g[0] * jac[1][0]) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let cand = (w + e1 * (lambda * du) + e2 * (lambda * dv)).normalize();
            if let Some(rc) = residual(&cand) {
                if rc.norm() < rn {
                    w = cand;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    if !converged {
        return None;
    }

    let (d1, d2, rest) = legs(&w);
    let m = rest.norm();
    // Corners must not overlap on the middle leg, the weld must stay a
    // forward, local detour.
    if m + 1e-9 < d1 + d2 {
        return None;
    }
    let total = d1 + d2 + m;
    if !(total.is_finite()) || total > len + 8.0 / kappa_max {
        return None;
    }

    // Assemble: [pair1 at trim d1] [straight m - d1 - d2] [pair2 at d2];
    // near-zero half-turns have near-zero trims and collapse away.
    let mut segs: Vec<Segment> = Vec::with_capacity(3);
    let mut cursor = *from;
    let beta1 = 0.5 * u.dot(&w).clamp(-1.0, 1.0).acos();
    let beta2 = 0.5 * w.dot(&v).clamp(-1.0, 1.0).acos();
    let straight_mid = (m - d1 - d2).max(0.0);
    if beta1 > 1e-6 {
        let pair = spiral_pair(&cursor, d1, &Unit::new_unchecked(w));
        cursor = pair.end_pose();
        segs.push(Segment::Spline(pair));
    }
    if straight_mid > 1e-9 {
        let seg = ArcSegment::straight(cursor, straight_mid);
        cursor = seg.end_pose();
        segs.push(Segment::Arc(seg));
    }
    if beta2 > 1e-6 {
        let pair = spiral_pair(&cursor, d2, &Unit::new_unchecked(v));
        cursor = pair.end_pose();
        segs.push(Segment::Spline(pair));
    }
    if segs.is_empty() {
        return None;
    }

    // Interpolation criterion: exact landing within contractual tolerance.
    if (cursor.position - target_pos).norm() > 1e-6 {
        return None;
    }
    if (cursor.tangent().into_inner() - v).norm() > PHI_CONNECT {
        return None;
    }
    Some(segs)
}

/// Iterative bidirectional spline connection from `q_a` to `q_b` (both in
/// path direction).
///
/// Each round first tries to terminate with an exact-landing segment on the
/// opposite cursor, then advances one steering step from each side. The
/// sides "missed each other" when their distance grows for three
/// consecutive rounds. On success the returned trajectory runs q_a -> q_b,
/// starts and ends exactly on the query poses, and is curvature-bounded
/// with at most [`PHI_CONNECT`] tangent error at the single interior weld.
pub fn spline_connect(
    q_a: &Pose,
    q_b: &Pose,
    cfg: &SteerConfig,
    max_rounds: usize,
) -> Result<Trajectory, ConnectFailure> {
    if (q_a.position - q_b.position).norm() < 1e-9 {
        return Err(ConnectFailure::Degenerate);
    }
    let mut a_segs: Vec<Segment> = Vec::new();
    let mut b_segs: Vec<Segment> = Vec::new();
    let mut ca = *q_a;
    let mut cb = q_b.reversed();
    let mut prev_dist = (ca.position - cb.position).norm();
    let mut rising = 0;

    // Pursuit steps scale with the remaining gap (the per-step heading
    // change a spiral pair can absorb grows with its length), and each
    // cursor aims at a point on the counterpart's approach line so the
    // sides align onto a common axis instead of colliding head-on.
    for _ in 0..max_rounds {
        // Terminate from the A side onto the B cursor.
        let back_b = -cb.tangent().into_inner();
        if let Some(term) = spline_terminal(&ca, &cb.position, &back_b, cfg.kappa_max) {
            a_segs.extend(term);
            return Ok(assemble_weld(a_segs, b_segs, q_b));
        }
        let gap_a = (ca.position - cb.position).norm();
        let aim_a = cb.position - back_b * (0.5 * gap_a);
        let cfg_a = SteerConfig {
            delta_t: gap_a,
            kappa_max: cfg.kappa_max,
        };
        let step_a = crate::steering::steer_spline(&ca, &aim_a, &cfg_a);
        if let Some((seg, end)) = step_a {
            a_segs.push(Segment::Spline(seg));
            ca = end;
        }

        // Terminate from the B side onto the A cursor.
        let back_a = -ca.tangent().into_inner();
        if let Some(term) = spline_terminal(&cb, &ca.position, &back_a, cfg.kappa_max) {
            b_segs.extend(term);
            return Ok(assemble_weld(a_segs, b_segs, q_b));
        }
        let gap_b = (ca.position - cb.position).norm();
        let aim_b = ca.position - back_a * (0.5 * gap_b);
        let cfg_b = SteerConfig {
            delta_t: gap_b,
            kappa_max: cfg.kappa_max,
        };
        let step_b = crate::steering::steer_spline(&cb, &aim_b, &cfg_b);
        let stalled = step_a.is_none() && step_b.is_none();
        if let Some((seg, end)) = step_b {
            b_segs.push(Segment::Spline(seg));
            cb = end;
        }
        if stalled {
            return Err(ConnectFailure::Stalled);
        }

        let dist = (ca.position - cb.position).norm();
        if dist >= prev_dist {
            rising += 1;
            if rising >= 3 {
                return Err(ConnectFailure::Diverged);
            }
        } else {
            rising = 0;
        }
        prev_dist = dist;
    }
    Err(ConnectFailure::MaxRounds)
}

/// Concatenates forward segments with the reversed B side and pins the
/// tail orientations backward from `q_b`, so the trajectory ends exactly
/// on the query pose. The roll seam sits at an interior point, where only
/// tangent continuity is contractual.
fn assemble_weld(a_segs: Vec<Segment>, b_segs: Vec<Segment>, q_b: &Pose) -> Trajectory {
    let reversed: Vec<Segment> = b_segs.iter().rev().map(|s| s.reversed()).collect();
    if reversed.is_empty() {
        // The A side landed directly on q_b: pin the tail of the A chain,
        // keeping its first segment so the start pose stays exact.
        return Trajectory::from_segments(pin_tail_orientation(a_segs, q_b, true));
    }
    let mut segments = a_segs;
    segments.extend(rechain_backward(reversed, q_b));
    Trajectory::from_segments(segments)
}

/// Rechains orientations backward from `final_pose`. With `preserve_start`
/// and more than one segment, the first segment keeps its original start
/// orientation (the roll seam moves after it).
pub(crate) fn pin_tail_orientation(
    mut segments: Vec<Segment>,
    final_pose: &Pose,
    preserve_start: bool,
) -> Vec<Segment> {
    if segments.is_empty() {
        return segments;
    }
    if preserve_start && segments.len() > 1 {
        let head = segments.remove(0);
        let mut out = vec![head];
        out.extend(rechain_backward(segments, final_pose));
        return out;
    }
    rechain_backward(segments, final_pose)
}

/// Rewrites each segment's start orientation so the chain's final pose
/// orientation equals `final_pose` exactly, keeping all positions and
/// tangents untouched.
pub(crate) fn rechain_backward(segments: Vec<Segment>, final_pose: &Pose) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::with_capacity(segments.len());
    let mut desired = *final_pose;
    for seg in segments.into_iter().rev() {
        let rebased = rebase_end_orientation(seg, &desired);
        desired = rebased.start_pose();
        out.push(rebased);
    }
    out.reverse();
    out
}

/// Chooses a start orientation whose forward transport reproduces
/// `desired.orientation` at the segment end.
fn rebase_end_orientation(seg: Segment, desired: &Pose) -> Segment {
    match seg {
        Segment::Arc(a) => {
            let orientation = match a.kind {
                crate::trajectory::ArcKind::Straight { .. } => desired.orientation,
                crate::trajectory::ArcKind::Turn { axis, angle, .. } => {
                    UnitQuaternion::from_axis_angle(&axis, -angle) * desired.orientation
                }
            };
            let start = Pose::new(a.start.position, orientation);
            Segment::Arc(ArcSegment {
                start,
                kind: a.kind,
            })
        }
        Segment::Spline(s) => {
            let start_tangent = s.start.tangent();
            let orientation =
                crate::se3::minimal_twist_orientation(&start_tangent, &desired.orientation);
            let start = Pose::new(s.start.position, orientation);
            Segment::Spline(crate::trajectory::SplineSegment::new(start, s.control))
        }
    }
}
