//! Pose-to-pose connections: the geometric 3D Dubins solver and the
//! iterative spline connection.
//!
//! ```bash
//! cargo run --example dubins_connection
//! ```

use boreplan::connect::{dubins3d, spline_connect};
use boreplan::se3::Pose;
use boreplan::steering::SteerConfig;
use nalgebra::{Unit, Vector3};
use std::time::Instant;

fn main() {
    let kappa = 0.05;
    let a = Pose::from_position_dir(Vector3::zeros(), Unit::new_normalize(Vector3::x()));
    let b = Pose::from_position_dir(
        Vector3::new(120.0, 30.0, 15.0),
        Unit::new_normalize(Vector3::new(1.0, 0.5, 0.0)),
    );

    let t0 = Instant::now();
    let sol = dubins3d(&a, &b, kappa, 1e-8, 50).expect("solvable instance");
    let dt = t0.elapsed();
    println!(
        "Dubins: length {:.3} mm (chord {:.3}), {} Newton iterations, residual {:.2e}, solved in {:.1?}",
        sol.total_length,
        (b.position - a.position).norm(),
        sol.iterations,
        sol.residual,
        dt
    );
    for (name, seg) in ["start arc", "straight", "end arc"].iter().zip(sol.segments.iter()) {
        println!("  {name}: length {:.3} mm, curvature {:.4}", seg.length(), seg.curvature());
    }
    let traj = sol.to_trajectory();
    let end = traj.end_pose().unwrap();
    println!(
        "  endpoint error: {:.2e} mm position, {:.2e} tangent",
        (end.position - b.position).norm(),
        (end.tangent().into_inner() - b.tangent().into_inner()).norm()
    );

    // The spline connection solves the same boundary-value problem with
    // two-spiral segments; the result is curvature-continuous throughout.
    let cfg = SteerConfig {
        delta_t: 2.0,
        kappa_max: kappa,
    };
    let weld = spline_connect(&a, &b, &cfg, 64).expect("connectable pair");
    let end = weld.end_pose().unwrap();
    println!(
        "\nspline connection: {} segments, length {:.3} mm, max curvature {:.4}",
        weld.segments().len(),
        weld.length(),
        weld.max_discrete_curvature(0.05)
    );
    println!(
        "  endpoint error: {:.2e} mm position, {:.2e} tangent",
        (end.position - b.position).norm(),
        (end.tangent().into_inner() - b.tangent().into_inner()).norm()
    );

    // Connections honestly fail where no curvature-bounded local path
    // exists (antiparallel poses inside the turning diameter).
    let c = Pose::from_position_dir(
        Vector3::new(0.0, 10.0, 0.0),
        Unit::new_normalize(-Vector3::x()),
    );
    println!(
        "\ninfeasible pair: dubins3d -> {:?}, spline_connect -> {:?}",
        dubins3d(&a, &c, kappa, 1e-8, 50).err(),
        spline_connect(&a, &c, &cfg, 64).err()
    );
}
