//! The two local steering functions: circular arcs of variable curvature
//! and two-spiral cubic Bezier extensions.
//!
//! ```bash
//! cargo run --example steering_functions
//! ```

use boreplan::se3::Pose;
use boreplan::steering::{segment_max_curvature, steer_arc, steer_spline, SteerConfig};
use boreplan::trajectory::Segment;
use nalgebra::{Unit, Vector3};

fn main() {
    let cfg = SteerConfig {
        delta_t: 2.0,
        kappa_max: 0.05,
    };
    let start = Pose::from_position_dir(Vector3::zeros(), Unit::new_normalize(Vector3::x()));

    println!("steering from the origin (heading +x), step {} mm, kappa_max {}\n", cfg.delta_t, cfg.kappa_max);
    println!("{:>8} | {:>28} | {:>10} | {:>10}", "bearing", "arc end (x, y)", "arc kappa", "spline kappa");

    for deg in [0.0_f64, 15.0, 30.0, 60.0, 90.0, 135.0] {
        let bearing = deg.to_radians();
        let target = Vector3::new(10.0 * bearing.cos(), 10.0 * bearing.sin(), 0.0);

        let arc = steer_arc(&start, &target, &cfg);
        let spline = steer_spline(&start, &target, &cfg);

        let arc_txt = match &arc {
            Some((seg, end)) => format!(
                "({:6.3}, {:6.3}) k={:.4}",
                end.position.x,
                end.position.y,
                segment_max_curvature(&Segment::Arc(*seg), 0.05)
            ),
            None => "unreachable".to_string(),
        };
        let spline_txt = match &spline {
            Some((seg, _)) => format!(
                "k={:.4}",
                segment_max_curvature(&Segment::Spline(*seg), 0.01)
            ),
            None => "unreachable".to_string(),
        };
        println!("{deg:>7.0}  | {arc_txt:>28} | {spline_txt}");
    }

    // Chain spline extensions: curvature returns to zero at both ends of
    // every segment, so chains are curvature-continuous at the welds.
    let mut pose = start;
    let mut segs = Vec::new();
    for i in 0..10 {
        let target = pose.position + Vector3::new(3.0, (i as f64 * 0.7).sin() * 2.0, 0.5);
        if let Some((seg, end)) = steer_spline(&pose, &target, &cfg) {
            segs.push(Segment::Spline(seg));
            pose = end;
        }
    }
    let traj = boreplan::trajectory::Trajectory::from_segments(segs);
    println!(
        "\nchained {} spline extensions: length {:.2} mm, max discrete curvature {:.4} (bound {})",
        traj.segments().len(),
        traj.length(),
        traj.max_discrete_curvature(0.05),
        cfg.kappa_max
    );
}
