//! Rigid-body poses and the configuration-space metric.
//!
//! A configuration is a position in R^3 (millimeters) plus a unit quaternion
//! orientation. The z-axis of the local frame is the tool's line of view,
//! i.e. the tangent direction of any path passing through the pose.
//!
//! Orientations are compared with the quaternion metric
//! `rho(h1, h2) = min(acos(<h1,h2>), acos(<h1,-h2>))`, which is invariant
//! under the antipodal identification `h ~ -h` and ranges over `[0, pi/2]`.
//! Note that for two rotations differing by an angle `theta` about a fixed
//! axis, `rho = theta / 2`.

use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Unit tangent direction in R^3.
pub type Direction = Unit<Vector3<f64>>;

/// Quaternion norm drift beyond which [`Pose::new`] renormalizes.
const RENORM_THRESHOLD: f64 = 1e-12;

/// A rigid-body pose: position in millimeters plus a unit quaternion.
///
/// The local z-axis is the path tangent. Scalar-first component order
/// `(a, b, c, d)` is used wherever quaternions are serialized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    /// Builds a pose, renormalizing the quaternion if it drifted more than
    /// `1e-12` from unit length.
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Pose {
            position,
            orientation: renormalize(orientation),
        }
    }

    /// Pose at the origin with identity orientation (tangent = world z).
    pub fn identity() -> Self {
        Pose {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    /// Pose at `position` whose z-axis points along `dir`, with roll chosen
    /// by minimal twist from the identity orientation.
    pub fn from_position_dir(position: Vector3<f64>, dir: Direction) -> Self {
        let orientation = minimal_twist_orientation(&dir, &UnitQuaternion::identity());
        Pose {
            position,
            orientation,
        }
    }

    /// The tangent direction (local z-axis) of this pose.
    pub fn tangent(&self) -> Direction {
        Unit::new_normalize(self.orientation * Vector3::z())
    }

    /// The same location facing the opposite way: the tangent is negated and
    /// the roll is re-derived by minimal twist. Reversing twice restores the
    /// tangent exactly; the roll is a convention either way.
    pub fn reversed(&self) -> Self {
        let back = Unit::new_normalize(-self.tangent().into_inner());
        Pose {
            position: self.position,
            orientation: minimal_twist_orientation(&back, &self.orientation),
        }
    }

    /// Componentwise closeness test used for exact-root matching.
    pub fn approx_eq(&self, other: &Pose, tol: f64) -> bool {
        (self.position - other.position).norm() <= tol
            && quat_distance(&self.orientation, &other.orientation) <= tol
    }
}

/// Weight applied to the angular term of [`pose_distance`].
///
/// The combined metric adds millimeters to radians; `angular_weight`
/// (mm per radian) makes that unit choice explicit. The default of `1.0`
/// reproduces the plain sum.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MetricConfig {
    pub angular_weight: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            angular_weight: 1.0,
        }
    }
}

impl MetricConfig {
    pub fn new(angular_weight: f64) -> crate::error::Result<Self> {
        if !(angular_weight > 0.0) {
            return Err(crate::error::Error::InvalidParameter {
                name: "angular_weight",
                reason: format!("must be > 0, got {angular_weight}"),
            });
        }
        Ok(MetricConfig { angular_weight })
    }
}

/// Distance between two orientations in the antipodal-invariant quaternion
/// metric, in radians within `[0, pi/2]`.
///
/// The 4-dot-product is clamped to `[-1, 1]` before `acos` so rounding can
/// never produce NaN.
pub fn quat_distance(h1: &UnitQuaternion<f64>, h2: &UnitQuaternion<f64>) -> f64 {
    let d = h1.coords.dot(&h2.coords);
    let rho_pos = d.clamp(-1.0, 1.0).acos();
    let rho_neg = (-d).clamp(-1.0, 1.0).acos();
    rho_pos.min(rho_neg)
}

/// Combined configuration-space distance: Euclidean position distance plus
/// the weighted quaternion metric. Symmetric; zero iff both position and
/// rotation agree (up to the antipodal identification).
pub fn pose_distance(q1: &Pose, q2: &Pose, cfg: &MetricConfig) -> f64 {
    (q1.position - q2.position).norm()
        + cfg.angular_weight * quat_distance(&q1.orientation, &q2.orientation)
}

/// The orientation reached from `reference` by the smallest rotation that
/// aligns the local z-axis with `dir`.
///
/// The rotation axis is orthogonal to both the old and the new z-axis, so no
/// roll about the tangent is introduced. When `dir` is antiparallel to the
/// current z-axis the axis is ambiguous; the tie-break is the world x-axis
/// projected orthogonal to the z-axis (world y if that projection vanishes).
///
/// Handedness: for `reference = identity` and `dir = +x`, the result is a
/// +90 degree rotation about +y.
pub fn minimal_twist_orientation(
    dir: &Direction,
    reference: &UnitQuaternion<f64>,
) -> UnitQuaternion<f64> {
    let z = reference * Vector3::z();
    let target = dir.into_inner();
    match UnitQuaternion::rotation_between(&z, &target) {
        Some(rot) => renormalize(rot * reference),
        None => {
            // Antiparallel: rotate 180 degrees about the deterministic
            // tie-break axis.
            let axis = orthogonal_tiebreak(&z);
            let rot = UnitQuaternion::from_axis_angle(&axis, std::f64::consts::PI);
            renormalize(rot * reference)
        }
    }
}

/// Deterministic unit vector orthogonal to `v`: world x projected orthogonal
/// to `v`, falling back to world y when `v` is (anti)parallel to x.
pub(crate) fn orthogonal_tiebreak(v: &Vector3<f64>) -> Direction {
    let x = Vector3::x();
    let proj = x - v * x.dot(v);
    if proj.norm() > 1e-9 {
        Unit::new_normalize(proj)
    } else {
        let y = Vector3::y();
        Unit::new_normalize(y - v * y.dot(v))
    }
}

fn renormalize(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    let norm = q.coords.norm();
    if (norm - 1.0).abs() > RENORM_THRESHOLD {
        UnitQuaternion::new_unchecked(Quaternion::from(q.coords / norm))
    } else {
        q
    }
}
