//! Local steering: circular arcs of variable curvature and two-spiral
//! cubic Bezier extensions.
//!
//! Both functions grow a search tree from a pose toward a sampled point
//! under a hard curvature bound. Arc steering bends the unique in-plane
//! circle toward the sample, saturating at the minimum turning radius.
//! Spline steering emits a pair of mirror-symmetric cubic Bezier spirals
//! whose curvature rises from zero at both ends to a bounded maximum at the
//! shared junction, so chains of spline extensions are curvature-continuous
//! everywhere.
//!
//! Both are pure functions: identical inputs produce bit-identical
//! segments, and an extension either makes strict Euclidean progress toward
//! the sample or reports `None`.

use crate::se3::{orthogonal_tiebreak, Direction, Pose};
use crate::trajectory::{
    max_circumradius_curvature, segment_points, ArcSegment, Segment,
    SplineSegment,
};
use nalgebra::{Unit, UnitQuaternion, Vector3};

/// Extension step and curvature bound shared by both steering flavors.
#[derive(Clone, Copy, Debug)]
pub struct SteerConfig {
    /// Arc length advanced per extension, mm.
    pub delta_t: f64,
    /// Maximum path curvature, 1/mm.
    pub kappa_max: f64,
}

impl Default for SteerConfig {
    fn default() -> Self {
        SteerConfig {
            delta_t: 2.0,
            kappa_max: 0.05,
        }
    }
}

/// Spiral shape ratio of the cubic Bezier spiral, `2(sqrt(6)-1)/5`.
pub const SPIRAL_C2: f64 = 0.579_795_897_113_271_2;

/// Derived spiral constants. `C1 = (C2+1)(C2+4)` makes the two spirals meet
/// exactly on the corner bisector; the remaining ratios follow from it.
pub fn spiral_constants() -> (f64, f64, f64, f64) {
    let c2 = SPIRAL_C2;
    let c1 = (c2 + 1.0) * (c2 + 4.0);
    let c3 = (c2 + 4.0) / (c1 + 6.0);
    let c4 = (c2 + 4.0) * (c2 + 4.0) / (54.0 * c3);
    (c1, c2, c3, c4)
}

const EPS_COLLINEAR: f64 = 1e-12;
const EPS_POS: f64 = 1e-9;

/// Steers along the unique circular arc in the plane spanned by the current
/// tangent and the direction to `p_rand`, tangent to the pose, bending
/// toward the sample. Curvature above the bound saturates at radius
/// `1/kappa_max`. The arc advances `min(delta_t, arc length to the closest
/// approach of p_rand)` and at most a half turn.
///
/// Returns `None` when no progress toward `p_rand` is possible (the sample
/// coincides with the pose, lies straight behind it, or the bounded arc
/// moves away from it).
pub fn steer_arc(
    q_near: &Pose,
    p_rand: &Vector3<f64>,
    cfg: &SteerConfig,
) -> Option<(ArcSegment, Pose)> {
    let pos = q_near.position;
    let t = q_near.tangent().into_inner();
    let delta = p_rand - pos;
    let dist = delta.norm();
    if dist < EPS_POS {
        return None;
    }
    let along = delta.dot(&t);
    let perp = delta - t * along;
    let perp_norm = perp.norm();

    if perp_norm <= EPS_COLLINEAR * dist.max(1.0) {
        // Collinear: zero-curvature degenerate case.
        if along <= 0.0 {
            return None; // directly behind; forward motion cannot approach
        }
        let length = cfg.delta_t.min(dist);
        let seg = ArcSegment::straight(*q_near, length);
        let end = seg.end_pose();
        return Some((seg, end));
    }

    let n = perp / perp_norm;
    let r_min = 1.0 / cfg.kappa_max;
    let radius = (dist * dist / (2.0 * perp_norm)).max(r_min);
    let center = pos + n * radius;
    let axis = Unit::new_normalize(t.cross(&n));

    // Angle from the start to the closest approach of p_rand, measured in
    // the travel direction.
    let a0 = pos - center;
    let a1 = p_rand - center;
    let mut phi_target = (a0.cross(&a1).dot(&axis)).atan2(a0.dot(&a1));
    if phi_target < 0.0 {
        phi_target += 2.0 * std::f64::consts::PI;
    }
    let phi = (cfg.delta_t / radius)
        .min(phi_target)
        .min(std::f64::consts::PI);
    if phi < 1e-12 {
        return None;
    }
    let seg = ArcSegment::turn(*q_near, center, axis, phi, radius);
    let end = seg.end_pose();
    if (end.position - p_rand).norm() < dist {
        Some((seg, end))
    } else {
        None
    }
}

/// Builds the mirror-symmetric two-spiral pair that leaves `start`
/// tangentially, turns by the angle between the tangent and `u2` around the
/// corner at distance `d`, and ends at `corner + d*u2` heading along `u2`.
pub(crate) fn spiral_pair(start: &Pose, d: f64, u2: &Direction) -> SplineSegment {
    let (_, c2, c3, _) = spiral_constants();
    let pos = start.position;
    let t = start.tangent().into_inner();
    let u2 = u2.into_inner();
    let corner = pos + t * d;

    let cos_theta = t.dot(&u2).clamp(-1.0, 1.0);
    let beta = 0.5 * cos_theta.acos();

    let sum = u2 + t;
    let ud = if sum.norm() > 1e-9 {
        sum / sum.norm()
    } else {
        // theta ~= pi is excluded by the curvature clamp; fall back to the
        // tangent to stay total.
        t
    };

    let gb = c2 * c3 * d;
    let hb = c3 * d;
    let kb = 6.0 * c3 * beta.cos() / (c2 + 4.0) * d;

    let b0 = pos;
    let b1 = b0 + t * gb;
    let b2 = b1 + t * hb;
    let joint = b2 + ud * kb;

    let e0 = corner + u2 * d;
    let e1 = e0 - u2 * gb;
    let e2 = e1 - u2 * hb;
    debug_assert!(
        ((e2 - ud * kb) - joint).norm() < 1e-6 * d.max(1.0),
        "spiral joint mismatch"
    );

    SplineSegment::new(*start, [b0, b1, b2, joint, joint, e2, e1, e0])
}

/// Largest half-turn angle `beta` whose joint curvature stays below the
/// bound for corner distance `d`: solves `c4 sin(b) / (d cos^2 b) = kappa`.
pub(crate) fn max_feasible_beta(d: f64, kappa_max: f64) -> f64 {
    let (_, _, _, c4) = spiral_constants();
    let a = kappa_max * d / c4;
    if a <= 0.0 {
        return 0.0;
    }
    // sin(b) satisfies a s^2 + s - a = 0 with s in (0, 1).
    let s = (-1.0 + (1.0 + 4.0 * a * a).sqrt()) / (2.0 * a);
    s.clamp(0.0, 1.0 - 1e-12).asin()
}

/// Joint curvature of the spiral pair for half-turn `beta` and distance `d`.
pub(crate) fn spiral_joint_curvature(d: f64, beta: f64) -> f64 {
    let (_, _, _, c4) = spiral_constants();
    let c = beta.cos();
    c4 * beta.sin() / (d * c * c)
}

/// Steers with a pair of cubic Bezier spirals toward `p_rand`.
///
/// The corner sits half a step ahead along the current tangent; the turn
/// angle toward the sample is clamped to keep the joint curvature below the
/// bound (the spiral equivalent of arc saturation). Curvature is zero at
/// both segment ends, so chained extensions are G2.
///
/// Returns `None` when no progress toward `p_rand` is possible.
pub fn steer_spline(
    q_near: &Pose,
    p_rand: &Vector3<f64>,
    cfg: &SteerConfig,
) -> Option<(SplineSegment, Pose)> {
    let pos = q_near.position;
    let t = q_near.tangent().into_inner();
    let delta = p_rand - pos;
    let dist = delta.norm();
    if dist < EPS_POS {
        return None;
    }
    let d = 0.5 * cfg.delta_t.min(dist);
    if d < EPS_POS {
        return None;
    }
    let corner = pos + t * d;
    let to_target = p_rand - corner;

    // Desired turn direction and angle within the steering plane.
    let (theta_des, plane_axis) = if to_target.norm() < EPS_POS {
        (0.0, orthogonal_tiebreak(&t))
    } else {
        let u_des = to_target / to_target.norm();
        let cross = t.cross(&u_des);
        let theta = cross.norm().atan2(t.dot(&u_des));
        if cross.norm() > EPS_COLLINEAR {
            (theta, Unit::new_normalize(cross))
        } else {
            // Collinear with the tangent: straight ahead or straight behind.
            (theta, orthogonal_tiebreak(&t))
        }
    };

    let theta_allow = 2.0 * max_feasible_beta(d, cfg.kappa_max);
    let theta = theta_des.min(theta_allow);
    let u2 = if theta < 1e-12 {
        Unit::new_unchecked(t)
    } else {
        let rot = UnitQuaternion::from_axis_angle(&plane_axis, theta);
        Unit::new_normalize(rot * t)
    };

    let seg = spiral_pair(q_near, d, &u2);
    let end = seg.end_pose();
    if (end.position - p_rand).norm() < dist {
        Some((seg, end))
    } else {
        None
    }
}

/// Discrete curvature estimate: maximum three-point circumradius curvature
/// over points sampled every `step` mm. Segments shorter than two steps
/// fall back to the exact value of the segment type (arcs: `1/radius`;
/// splines: analytic curvature at the midpoint).
pub fn segment_max_curvature(seg: &Segment, step: f64) -> f64 {
    assert!(step > 0.0, "sampling step must be positive");
    if seg.length() < 2.0 * step {
        return match seg {
            Segment::Arc(a) => a.curvature(),
            Segment::Spline(s) => s.curvature_at(0.5 * s.length()),
        };
    }
    max_circumradius_curvature(segment_points(seg, step).into_iter())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{cubic_curvature, Trajectory};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn x_pose() -> Pose {
        Pose::from_position_dir(Vector3::zeros(), Unit::new_normalize(Vector3::x()))
    }

    fn cfg() -> SteerConfig {
        SteerConfig {
            delta_t: 2.0,
            kappa_max: 0.05,
        }
    }

    fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
        let dir = Unit::new_normalize(Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ));
        Pose::from_position_dir(
            Vector3::new(
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
            ),
            dir,
        )
    }

    #[test]
    fn arc_straight_ahead() {
        let (seg, end) = steer_arc(&x_pose(), &Vector3::new(10.0, 0.0, 0.0), &cfg()).unwrap();
        assert_relative_eq!(seg.length(), 2.0, epsilon = 1e-12);
        assert_eq!(seg.curvature(), 0.0);
        assert_relative_eq!(end.position.x, 2.0, epsilon = 1e-12);
        assert_eq!(
            end.orientation.coords.as_slice(),
            x_pose().orientation.coords.as_slice()
        );
    }

    #[test]
    fn arc_saturates_at_curvature_bound() {
        // Sample at 90 degrees to the tangent at distance 2/kappa: the
        // required circle has radius exactly 1/kappa.
        let c = cfg();
        let dist = 2.0 / c.kappa_max;
        let (seg, end) = steer_arc(&x_pose(), &Vector3::new(0.0, dist, 0.0), &c).unwrap();
        let r = 1.0 / c.kappa_max;
        assert_relative_eq!(seg.curvature(), c.kappa_max, epsilon = 1e-12);
        assert_relative_eq!(seg.length(), 2.0, epsilon = 1e-12);
        // Closed-form circle: center (0, r, 0), x(phi) = (r sin phi,
        // r - r cos phi, 0), tangent (cos phi, sin phi, 0).
        let phi = seg.length() / r;
        assert_relative_eq!(end.position.x, r * phi.sin(), epsilon = 1e-9);
        assert_relative_eq!(end.position.y, r * (1.0 - phi.cos()), epsilon = 1e-9);
        let tangent = end.tangent().into_inner();
        assert_relative_eq!(tangent.x, phi.cos(), epsilon = 1e-9);
        assert_relative_eq!(tangent.y, phi.sin(), epsilon = 1e-9);
    }

    #[test]
    fn arc_curvature_bound_and_progress_over_random_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let c = cfg();
        let mut produced = 0;
        for _ in 0..10_000 {
            let q = random_pose(&mut rng);
            let p = Vector3::new(
                rng.random_range(-25.0..25.0),
                rng.random_range(-25.0..25.0),
                rng.random_range(-25.0..25.0),
            );
            if let Some((seg, end)) = steer_arc(&q, &p, &c) {
                produced += 1;
                assert!(seg.curvature() <= c.kappa_max * (1.0 + 1e-9));
                let k = segment_max_curvature(&Segment::Arc(seg), 0.1);
                assert!(k <= c.kappa_max * (1.0 + 1e-6), "discrete curvature {k}");
                assert!((end.position - p).norm() < (q.position - p).norm());
                // Chain continuity: the segment starts at the query pose.
                assert_eq!(seg.start.position, q.position);
            }
        }
        assert!(produced > 3000, "too few successful extensions: {produced}");
    }

    #[test]
    fn arc_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let q = random_pose(&mut rng);
            let p = Vector3::new(
                rng.random_range(-25.0..25.0),
                rng.random_range(-25.0..25.0),
                rng.random_range(-25.0..25.0),
            );
            let a = steer_arc(&q, &p, &cfg());
            let b = steer_arc(&q, &p, &cfg());
            match (a, b) {
                (None, None) => {}
                (Some((s1, e1)), Some((s2, e2))) => {
                    assert_eq!(e1.position, e2.position);
                    assert_eq!(e1.orientation.coords, e2.orientation.coords);
                    assert_eq!(s1.length().to_bits(), s2.length().to_bits());
                }
                _ => panic!("nondeterministic steer_arc"),
            }
        }
    }

    #[test]
    fn spline_straight_ahead_is_degenerate_line() {
        let (seg, end) = steer_spline(&x_pose(), &Vector3::new(10.0, 0.0, 0.0), &cfg()).unwrap();
        // All control points collinear on the x-axis.
        for c in &seg.control {
            assert!(c.y.abs() < 1e-12 && c.z.abs() < 1e-12);
        }
        assert_relative_eq!(seg.length(), 2.0, epsilon = 1e-9);
        assert_relative_eq!(end.position.x, 2.0, epsilon = 1e-9);
        let k = segment_max_curvature(&Segment::Spline(seg), 0.01);
        assert!(k < 1e-9);
    }

    #[test]
    fn spline_heading_change_respects_curvature_bound() {
        // 45 degree corner, dense 0.01 mm curvature sampling.
        let c = cfg();
        let p = Vector3::new(8.0, 8.0, 0.0);
        let (seg, _) = steer_spline(&x_pose(), &p, &c).unwrap();
        let k = segment_max_curvature(&Segment::Spline(seg), 0.01);
        assert!(
            k <= c.kappa_max * (1.0 + 1e-6),
            "sampled curvature {k} above bound"
        );
    }

    #[test]
    fn spline_bound_and_arclength_over_random_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let c = cfg();
        let mut produced = 0;
        for _ in 0..2000 {
            let q = random_pose(&mut rng);
            let p = Vector3::new(
                rng.random_range(-25.0..25.0),
                rng.random_range(-25.0..25.0),
                rng.random_range(-25.0..25.0),
            );
            if let Some((seg, end)) = steer_spline(&q, &p, &c) {
                produced += 1;
                let k = segment_max_curvature(&Segment::Spline(seg), 0.01);
                assert!(k <= c.kappa_max * (1.0 + 1e-6), "curvature {k}");
                assert!((end.position - p).norm() < (q.position - p).norm());
                // Independent arc-length oracle: fine polyline quadrature.
                let pts = segment_points(&Segment::Spline(seg), 0.005);
                let polyline: f64 = pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
                assert!(
                    polyline <= c.delta_t * 1.1,
                    "extension arc length {polyline}"
                );
                assert_relative_eq!(polyline, seg.length(), epsilon = 1e-3);
            }
        }
        assert!(produced > 600, "too few successful extensions: {produced}");
    }

    #[test]
    fn spiral_pair_is_g2_at_junction_with_monotone_curvature() {
        let c = cfg();
        let d = 1.0;
        let beta = max_feasible_beta(d, c.kappa_max);
        let theta = 2.0 * beta;
        let rot = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), theta);
        let u2 = Unit::new_normalize(rot * Vector3::x());
        let seg = spiral_pair(&x_pose(), d, &u2);

        let first = [
            seg.control[0],
            seg.control[1],
            seg.control[2],
            seg.control[3],
        ];
        let second = [
            seg.control[4],
            seg.control[5],
            seg.control[6],
            seg.control[7],
        ];
        // Same curvature on both sides of the joint (G2).
        let k_end_first = cubic_curvature(&first, 1.0);
        let k_start_second = cubic_curvature(&second, 0.0);
        assert_relative_eq!(k_end_first, k_start_second, max_relative = 1e-9);
        // Joint curvature matches the closed form and sits at the bound.
        assert_relative_eq!(
            k_end_first,
            spiral_joint_curvature(d, beta),
            max_relative = 1e-9
        );
        assert_relative_eq!(k_end_first, c.kappa_max, max_relative = 1e-9);
        // Zero curvature at the outer ends.
        assert!(cubic_curvature(&first, 0.0) < 1e-12);
        assert!(cubic_curvature(&second, 1.0) < 1e-12);
        // Monotone curvature along each spiral.
        let mut prev = -1.0;
        for i in 0..=200 {
            let k = cubic_curvature(&first, i as f64 / 200.0);
            assert!(k >= prev - 1e-9, "first spiral not monotone at {i}");
            prev = k;
        }
        prev = f64::INFINITY;
        for i in 0..=200 {
            let k = cubic_curvature(&second, i as f64 / 200.0);
            assert!(k <= prev + 1e-9, "second spiral not monotone at {i}");
            prev = k;
        }
    }

    #[test]
    fn chained_extensions_are_tangent_continuous() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let c = cfg();
        let mut pose = x_pose();
        let mut segs = Vec::new();
        for _ in 0..20 {
            let p = pose.position
                + Vector3::new(
                    rng.random_range(1.0..8.0),
                    rng.random_range(-4.0..4.0),
                    rng.random_range(-4.0..4.0),
                );
            if let Some((seg, end)) = steer_spline(&pose, &p, &c) {
                segs.push(Segment::Spline(seg));
                pose = end;
            }
        }
        assert!(segs.len() >= 10);
        for w in segs.windows(2) {
            let t_end = w[0].end_pose().tangent().into_inner();
            let t_start = w[1].start_pose().tangent().into_inner();
            assert!((t_end - t_start).norm() < 1e-9);
        }
        let traj = Trajectory::from_segments(segs);
        let k = traj.max_discrete_curvature(0.05);
        assert!(k <= c.kappa_max * (1.0 + 1e-6));
    }

    #[test]
    fn max_curvature_examples() {
        let straight = Segment::Arc(ArcSegment::straight(x_pose(), 5.0));
        assert_eq!(segment_max_curvature(&straight, 0.1), 0.0);

        let r = 20.0;
        let arc = Segment::Arc(ArcSegment::turn(
            x_pose(),
            Vector3::new(0.0, r, 0.0),
            Unit::new_normalize(Vector3::z()),
            FRAC_PI_2,
            r,
        ));
        let k = segment_max_curvature(&arc, 0.1);
        assert_relative_eq!(k, 1.0 / r, max_relative = 1e-6);
    }

    #[test]
    fn spline_discrete_matches_analytic_maximum() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let c = cfg();
        for _ in 0..200 {
            let q = random_pose(&mut rng);
            let p = q.position
                + Vector3::new(
                    rng.random_range(-6.0..6.0),
                    rng.random_range(-6.0..6.0),
                    rng.random_range(-6.0..6.0),
                );
            if let Some((seg, _)) = steer_spline(&q, &p, &c) {
                if seg.length() < 0.1 {
                    continue;
                }
                let discrete = segment_max_curvature(&Segment::Spline(seg), 0.01);
                let mut analytic: f64 = 0.0;
                let first = [
                    seg.control[0],
                    seg.control[1],
                    seg.control[2],
                    seg.control[3],
                ];
                let second = [
                    seg.control[4],
                    seg.control[5],
                    seg.control[6],
                    seg.control[7],
                ];
                for i in 0..=400 {
                    let t = i as f64 / 400.0;
                    analytic = analytic
                        .max(cubic_curvature(&first, t))
                        .max(cubic_curvature(&second, t));
                }
                if analytic > 1e-6 {
                    assert!(
                        (discrete - analytic).abs() <= 0.01 * analytic + 1e-9,
                        "discrete {discrete} vs analytic {analytic}"
                    );
                }
            }
        }
    }
}
