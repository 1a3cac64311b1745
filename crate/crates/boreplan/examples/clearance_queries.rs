//! Obstacle indexing and clearance queries: nearest structures, segment
//! checks and the swept-tube metric.
//!
//! ```bash
//! cargo run --example clearance_queries
//! ```

use boreplan::geometry::{
    build_index, min_distance, path_clearance, segment_clear, ObstacleSet, Structure,
};
use boreplan::scenes::{generate_scene, TemplateId, TemplateParams};
use boreplan::se3::Pose;
use boreplan::trajectory::{ArcSegment, Segment, Trajectory};
use nalgebra::{Unit, Vector3};

fn main() {
    // A hand-built scene: two point-sampled walls.
    let obs = ObstacleSet::new(vec![
        Structure {
            name: "left_wall".into(),
            points: (0..200)
                .map(|i| Vector3::new(i as f64 * 0.2, -3.0, 0.0))
                .collect(),
        },
        Structure {
            name: "right_wall".into(),
            points: (0..200)
                .map(|i| Vector3::new(i as f64 * 0.2, 2.0, 0.0))
                .collect(),
        },
    ])
    .unwrap();
    let idx = build_index(&obs).unwrap();

    let probe = Vector3::new(10.0, 0.0, 0.0);
    let (d, name) = min_distance(&idx, &probe);
    println!("nearest structure to {probe:?}: `{name}` at {d:.3} mm");

    let seg = Segment::Arc(ArcSegment::straight(
        Pose::from_position_dir(Vector3::new(0.0, 0.0, 0.0), Unit::new_normalize(Vector3::x())),
        30.0,
    ));
    for (r_d, d_max) in [(0.5, 0.3), (0.5, 1.6)] {
        println!(
            "segment clear at r_d={r_d}, d_max={d_max}: {}",
            segment_clear(&idx, &seg, r_d, d_max, 0.1)
        );
    }

    // Swept-tube clearance on a generated scene: 0.1 mm stations, a
    // 16-point circle of drill-surface samples at each one.
    let scene = generate_scene(&TemplateParams::new(TemplateId::Cochlea)).unwrap();
    let start = scene.problem.initial_states[0];
    let straight = Trajectory::from_segments(vec![Segment::Arc(ArcSegment::straight(
        start, 45.0,
    ))]);
    let report = path_clearance(&scene.index, &straight, scene.problem.r_d, 16);
    println!(
        "\nstraight shot through `{}`: min surface clearance {:.3} mm at t={:.2}, nearest `{}`",
        scene.name, report.min_distance, report.location_t, report.nearest_structure
    );
    println!(
        "(the canal winds: a straight path hugs `{}` well below the {:.1} mm requirement)",
        report.nearest_structure,
        scene.problem.r_d + scene.problem.d_max
    );
}
