//! The quaternion orientation metric and the combined configuration-space
//! distance used for nearest-neighbor search.
//!
//! ```bash
//! cargo run --example pose_metrics
//! ```

use boreplan::se3::{minimal_twist_orientation, pose_distance, quat_distance, MetricConfig, Pose};
use nalgebra::{Unit, UnitQuaternion, Vector3};

fn main() {
    let id = UnitQuaternion::identity();

    // The metric is antipodal-invariant: h and -h are the same rotation.
    let neg = UnitQuaternion::new_unchecked(-id.quaternion());
    println!("rho(identity, -identity) = {}", quat_distance(&id, &neg));

    // For a rotation by theta about a fixed axis, rho = theta / 2.
    for deg in [10.0_f64, 45.0, 90.0, 180.0] {
        let h = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), deg.to_radians());
        println!(
            "rotation {deg:>5.1} deg about z  ->  rho = {:.6} rad ({:.2} deg)",
            quat_distance(&id, &h),
            quat_distance(&id, &h).to_degrees()
        );
    }

    // The combined metric adds millimeters and weighted radians.
    let cfg = MetricConfig::default();
    let a = Pose::from_position_dir(Vector3::zeros(), Unit::new_normalize(Vector3::x()));
    let b = Pose::new(
        Vector3::new(3.0, 0.0, 0.0),
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 90f64.to_radians()) * a.orientation,
    );
    println!(
        "pose distance (3 mm apart, 90 deg twist, weight {} mm/rad) = {:.4}",
        cfg.angular_weight,
        pose_distance(&a, &b, &cfg)
    );

    // Minimal twist: realign the local z-axis without rolling about it.
    let dir = Unit::new_normalize(Vector3::new(1.0, 1.0, 0.2));
    let h = minimal_twist_orientation(&dir, &a.orientation);
    let z = h * Vector3::z();
    println!(
        "minimal twist onto {:?}: new z-axis {:?} (alignment error {:.2e})",
        dir.into_inner(),
        z,
        (z - dir.into_inner()).norm()
    );
}
