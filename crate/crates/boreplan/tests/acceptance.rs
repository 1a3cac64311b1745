//! Acceptance suite: one pass/fail line per criterion.
//!
//! The criteria run sequentially inside a single test so wall-clock
//! measurements are not distorted by sibling tests; expect the full suite
//! to take on the order of fifteen minutes on two cores (the planner
//! ordering criterion alone runs 80 twenty-second planning jobs). Run with
//! `cargo test --test acceptance -- --nocapture` to watch the lines appear.

mod common;

use boreplan::bench::{aggregate, median, run_bench, BenchConfig, BenchRow, SceneSource};
use boreplan::connect::{cone_candidates, dubins3d, ConeQuery};
use boreplan::geometry::{build_index, path_clearance, path_clearance_with_step, ObstacleSet, Structure};
use boreplan::planner::{
    k_nearest, plan, validate_trajectory, PlannerConfig, PlannerKind,
};
use boreplan::scenes::{generate_scene, TemplateId, TemplateParams};
use boreplan::se3::{pose_distance, MetricConfig, Pose};
use boreplan::tree::{sample_distance, NodeId, SearchTree, TreeSide};
use common::{linear_scan_nearest, planar_csc_reference};
use nalgebra::{Unit, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

struct Tally {
    lines: Vec<(String, bool)>,
}

impl Tally {
    fn report(&mut self, criterion: &str, ok: bool, detail: String) {
        let line = format!(
            "{} criterion {criterion}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
        println!("{line}");
        self.lines.push((line, ok));
    }
}

#[test]
fn acceptance() {
    let mut tally = Tally { lines: Vec::new() };

    criterion_1_constraint_satisfaction(&mut tally);
    let shared = run_ordering_bench();
    criterion_2_goal_exactness(&mut tally, &shared);
    criterion_3_planner_ordering(&mut tally, &shared);
    criterion_4_intraoperative_budget(&mut tally);
    criterion_5_dubins_solver(&mut tally);
    criterion_6_oracle_equivalence(&mut tally);
    criterion_7_determinism(&mut tally);
    criterion_8_failure_honesty(&mut tally);

    let failed: Vec<&str> = tally
        .lines
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(l, _)| l.as_str())
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}

/// Criterion 1: across 100 seeded runs on each canonical template, every
/// returned trajectory satisfies all four constraints at the canonical
/// tolerances; the swept-tube machinery (0.1 mm steps, 16 circle samples
/// at r_d) confirms the clearance bound.
fn criterion_1_constraint_satisfaction(tally: &mut Tally) {
    let mut total_paths = 0usize;
    let mut bad_paths = 0usize;
    for id in TemplateId::ALL {
        let scene = generate_scene(&TemplateParams::new(id)).unwrap();
        let results: Vec<(usize, usize)> = (0..100u64)
            .into_par_iter()
            .map(|seed| {
                let cfg = PlannerConfig {
                    rng_seed: seed,
                    collect_all: true,
                    ..Default::default()
                };
                // Alternate planners across seeds so all four are sampled.
                let kind = PlannerKind::ALL[(seed % 4) as usize];
                let res = plan(kind, &scene.problem, &cfg, &scene.index);
                let mut bad = 0usize;
                for p in &res.paths {
                    let rep = validate_trajectory(&p.trajectory, &scene.problem, &scene.index);
                    let curvature_ok =
                        rep.max_curvature <= scene.problem.kappa_max * (1.0 + 1e-6);
                    let centerline_ok = rep.min_clearance_center
                        > scene.problem.r_d + scene.problem.d_max;
                    // Swept confirmation: surface samples at radius r_d
                    // must clear the safety distance (triangle-inequality
                    // equivalent of the centerline bound).
                    let swept = path_clearance(&scene.index, &p.trajectory, scene.problem.r_d, 16);
                    let swept_ok = swept.min_distance > scene.problem.d_max;
                    if !(rep.start_ok && rep.goal_ok && curvature_ok && centerline_ok && swept_ok)
                    {
                        bad += 1;
                    }
                }
                (res.n_paths(), bad)
            })
            .collect();
        total_paths += results.iter().map(|r| r.0).sum::<usize>();
        bad_paths += results.iter().map(|r| r.1).sum::<usize>();
    }
    tally.report(
        "1 (constraint satisfaction)",
        bad_paths == 0 && total_paths > 0,
        format!("{total_paths} trajectories over 4 templates x 100 seeds, {bad_paths} constraint violations"),
    );
}

/// Shared 20-second runs on the bottleneck templates feeding criteria 2+3.
fn run_ordering_bench() -> Vec<BenchRow> {
    let cfg = BenchConfig {
        scenes: vec![
            SceneSource::Template(TemplateParams::new(TemplateId::Cochlea)),
            SceneSource::Template(TemplateParams::new(TemplateId::Ssc)),
        ],
        planners: PlannerKind::ALL.to_vec(),
        duration: 20.0,
        iteration_budget: None,
        seeds: (0..10).collect(),
        out_dir: None,
        workers: 0,
        ..Default::default()
    };
    let report = run_bench(&cfg).expect("ordering bench");
    assert_eq!(report.invalid_paths, 0, "bench re-validation failed");
    report.rows
}

/// Criterion 2: connect solutions match the goal orientation to 1e-6 rad;
/// baseline solutions pooled over the same scenes have median terminal
/// angular error above 2.5 degrees.
fn criterion_2_goal_exactness(tally: &mut Tally, rows: &[BenchRow]) {
    let mut connect_worst: f64 = 0.0;
    let mut connect_n = 0usize;
    let mut baseline_errs: Vec<f64> = Vec::new();
    for row in rows {
        for p in &row.paths {
            if row.planner.is_bidirectional() {
                connect_worst = connect_worst.max(p.goal_ang_err);
                connect_n += 1;
            } else {
                baseline_errs.push(p.goal_ang_err);
            }
        }
    }
    let baseline_median = median(&mut baseline_errs);
    let threshold = 2.5 * std::f64::consts::PI / 180.0;
    let ok = connect_n > 0
        && connect_worst <= 1e-6
        && !baseline_errs.is_empty()
        && baseline_median > threshold;
    tally.report(
        "2 (bidirectional goal exactness)",
        ok,
        format!(
            "connect worst angular error {connect_worst:.2e} rad over {connect_n} paths; baseline median {:.4} rad over {} paths (threshold {:.4})",
            baseline_median,
            baseline_errs.len(),
            threshold
        ),
    );
}

/// Criterion 3: on each bottleneck template, each connect planner's median
/// path count is at least 10x its one-directional counterpart's (and
/// strictly larger), with per-seed ordering holding for >= 9 of 10 seeds.
fn criterion_3_planner_ordering(tally: &mut Tally, rows: &[BenchRow]) {
    let aggregates = aggregate(rows);
    let mut ok = true;
    let mut details = Vec::new();
    for scene in ["cochlea-0", "ssc-0"] {
        for (baseline, connect) in [
            (PlannerKind::ArcRrt, PlannerKind::ArcConnect),
            (PlannerKind::SplineRrt, PlannerKind::SplineConnect),
        ] {
            let med = |kind: PlannerKind| {
                aggregates
                    .iter()
                    .find(|a| a.scene == scene && a.planner == kind)
                    .map(|a| a.median_n_paths)
                    .unwrap_or(f64::NAN)
            };
            let fail_pct = aggregates
                .iter()
                .find(|a| a.scene == scene && a.planner == connect)
                .map(|a| a.failure_pct)
                .unwrap_or(100.0);
            let mb = med(baseline);
            let mc = med(connect);
            let ratio_ok = mc >= 10.0 * mb && mc > mb;
            let per_seed: usize = (0..10u64)
                .filter(|&s| {
                    let count = |kind: PlannerKind| {
                        rows.iter()
                            .find(|r| r.scene == scene && r.planner == kind && r.seed == s)
                            .map(|r| r.n_paths)
                            .unwrap_or(0)
                    };
                    count(connect) > count(baseline)
                })
                .count();
            let this_ok = ratio_ok && per_seed >= 9 && fail_pct == 0.0;
            ok &= this_ok;
            details.push(format!(
                "{scene}/{connect} median {mc} vs {baseline} {mb} (ordering {per_seed}/10 seeds, connect failures {fail_pct}%)"
            ));
        }
    }
    tally.report("3 (planner ordering)", ok, details.join("; "));
}

/// Criterion 4: connect planners return a valid path within the 0.5 s
/// intra-operative budget in at least 95% of 100 seeded runs on the
/// corridor and the feasible bottleneck templates.
fn criterion_4_intraoperative_budget(tally: &mut Tally) {
    let mut ok = true;
    let mut details = Vec::new();
    for id in [TemplateId::Corridor, TemplateId::Cochlea, TemplateId::Ssc] {
        let scene = generate_scene(&TemplateParams::new(id)).unwrap();
        for kind in [PlannerKind::ArcConnect, PlannerKind::SplineConnect] {
            let successes: usize = (0..100u64)
                .into_par_iter()
                .map(|seed| {
                    let cfg = PlannerConfig {
                        rng_seed: seed,
                        collect_all: false,
                        ..Default::default()
                    };
                    let res = plan(kind, &scene.problem, &cfg, &scene.index);
                    usize::from(!res.failed)
                })
                .sum();
            let this_ok = successes >= 95;
            ok &= this_ok;
            details.push(format!("{id}/{kind} {successes}/100"));
        }
    }
    tally.report(
        "4 (intra-operative 0.5 s budget)",
        ok,
        details.join(", "),
    );
}

/// Criterion 5: Dubins solver speed (mean <= 1 ms on solvable instances),
/// planar agreement with the closed-form CSC oracle within 0.1%, and
/// rigid-transform invariance within 1e-9 relative.
fn criterion_5_dubins_solver(tally: &mut Tally) {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let kappa = 0.05;
    let r = 1.0 / kappa;

    // Solvable 3D instances: separation above 4/kappa, tangents within 60
    // degrees of the chord.
    let mut instances = Vec::new();
    while instances.len() < 1000 {
        let a_pos = Vector3::new(
            rng.random_range(-50.0..50.0),
            rng.random_range(-50.0..50.0),
            rng.random_range(-50.0..50.0),
        );
        let chord = random_dir(&mut rng);
        let sep = rng.random_range(4.0 / kappa + 1.0..250.0);
        let b_pos = a_pos + chord * sep;
        let ta = perturb_within(&mut rng, &chord, 60f64.to_radians());
        let tb = perturb_within(&mut rng, &chord, 60f64.to_radians());
        instances.push((
            Pose::from_position_dir(a_pos, Unit::new_normalize(ta)),
            Pose::from_position_dir(b_pos, Unit::new_normalize(tb)),
        ));
    }
    let t0 = Instant::now();
    let mut solved = 0usize;
    for (a, b) in &instances {
        if dubins3d(a, b, kappa, 1e-8, 50).is_ok() {
            solved += 1;
        }
    }
    let mean_us = t0.elapsed().as_secs_f64() * 1e6 / instances.len() as f64;
    let speed_ok = mean_us <= 1000.0;
    let success_ok = solved >= 990;

    // Coplanar agreement with the closed-form planar oracle.
    let mut worst_rel: f64 = 0.0;
    let mut compared = 0usize;
    for _ in 0..1000 {
        let x0 = rng.random_range(-50.0..50.0);
        let y0 = rng.random_range(-50.0..50.0);
        let th0 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let chord_angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let sep = rng.random_range(4.0 / kappa + 1.0..250.0);
        let x1 = x0 + sep * chord_angle.cos();
        let y1 = y0 + sep * chord_angle.sin();
        let th1 = chord_angle + rng.random_range(-1.0..1.0);
        let th0p = chord_angle + rng.random_range(-1.0..1.0);
        let a = planar_pose(x0, y0, th0p);
        let b = planar_pose(x1, y1, th1);
        let _ = th0;
        let (Ok(sol), Some(oracle)) = (
            dubins3d(&a, &b, kappa, 1e-8, 50),
            planar_csc_reference((x0, y0, th0p), (x1, y1, th1), r),
        ) else {
            continue;
        };
        compared += 1;
        let rel = (sol.total_length - oracle).abs() / oracle;
        worst_rel = worst_rel.max(rel);
    }
    let planar_ok = compared >= 900 && worst_rel <= 1e-3;

    // Rigid-transform invariance.
    let mut worst_inv: f64 = 0.0;
    let mut inv_count = 0usize;
    for (a, b) in instances.iter().take(300) {
        let Ok(sol) = dubins3d(a, b, kappa, 1e-8, 50) else {
            continue;
        };
        let rot = UnitQuaternion::from_axis_angle(
            &Unit::new_normalize(random_dir(&mut rng)),
            rng.random_range(0.0..std::f64::consts::PI),
        );
        let shift = Vector3::new(
            rng.random_range(-100.0..100.0),
            rng.random_range(-100.0..100.0),
            rng.random_range(-100.0..100.0),
        );
        let ta = Pose::new(rot * a.position + shift, rot * a.orientation);
        let tb = Pose::new(rot * b.position + shift, rot * b.orientation);
        if let Ok(tsol) = dubins3d(&ta, &tb, kappa, 1e-8, 50) {
            inv_count += 1;
            worst_inv = worst_inv
                .max((tsol.total_length - sol.total_length).abs() / sol.total_length);
        }
    }
    let inv_ok = inv_count >= 250 && worst_inv <= 1e-9;

    tally.report(
        "5 (Dubins solver)",
        speed_ok && success_ok && planar_ok && inv_ok,
        format!(
            "mean {mean_us:.1} us/solve, {solved}/1000 solved; planar oracle worst rel err {worst_rel:.2e} over {compared} instances; rigid invariance worst {worst_inv:.2e} over {inv_count}"
        ),
    );
}

fn planar_pose(x: f64, y: f64, th: f64) -> Pose {
    Pose::from_position_dir(
        Vector3::new(x, y, 0.0),
        Unit::new_normalize(Vector3::new(th.cos(), th.sin(), 0.0)),
    )
}

fn random_dir(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0f64),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if v.norm() > 1e-3 {
            return v.normalize();
        }
    }
}

fn perturb_within(rng: &mut ChaCha8Rng, dir: &Vector3<f64>, max_angle: f64) -> Vector3<f64> {
    let axis = loop {
        let v = random_dir(rng).cross(dir);
        if v.norm() > 1e-6 {
            break Unit::new_normalize(v);
        }
    };
    UnitQuaternion::from_axis_angle(&axis, rng.random_range(0.0..max_angle)) * dir
}

/// Criterion 6: oracle equivalence suites, each over >= 1000 randomized
/// cases: kd-tree nearest vs linear scan (exact), cone candidates vs brute
/// force (exact), k-nearest vs brute-force ordering (exact), clearance vs
/// 10x finer sampling (<= 0.05 mm).
fn criterion_6_oracle_equivalence(tally: &mut Tally) {
    let mut rng = ChaCha8Rng::seed_from_u64(6666);

    // kd vs linear scan.
    let mut flat = Vec::new();
    let mut structures = Vec::new();
    for si in 0..8 {
        let pts: Vec<Vector3<f64>> = (0..4000)
            .map(|_| {
                Vector3::new(
                    rng.random_range(-60.0..60.0),
                    rng.random_range(-60.0..60.0),
                    rng.random_range(-60.0..60.0),
                )
            })
            .collect();
        for p in &pts {
            flat.push((*p, si));
        }
        structures.push(Structure {
            name: format!("s{si}"),
            points: pts,
        });
    }
    let obs = ObstacleSet::new(structures).unwrap();
    let idx = build_index(&obs).unwrap();
    let mut kd_exact = true;
    for _ in 0..2000 {
        let q = Vector3::new(
            rng.random_range(-70.0..70.0),
            rng.random_range(-70.0..70.0),
            rng.random_range(-70.0..70.0),
        );
        let hit = idx.nearest(&q);
        let (d, si, gi) = linear_scan_nearest(&flat, &q);
        kd_exact &=
            hit.distance.to_bits() == d.to_bits() && hit.structure == si && hit.point == gi;
    }

    // Random tree for cone + k-nearest oracles.
    let metric = MetricConfig::default();
    let root = Pose::from_position_dir(Vector3::zeros(), Unit::new_normalize(Vector3::x()));
    let mut tree = SearchTree::new(TreeSide::Goal, &[root]);
    let steer = boreplan::steering::SteerConfig::default();
    while tree.len() < 4000 {
        let parent = NodeId(rng.random_range(0..tree.len() as u32));
        let pp = tree.node(parent).pose;
        let target = pp.position
            + Vector3::new(
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
            );
        if let Some((seg, end)) = boreplan::steering::steer_arc(&pp, &target, &steer) {
            tree.add(parent, boreplan::trajectory::Segment::Arc(seg), end);
        }
    }
    let mut cone_exact = true;
    let mut knn_exact = true;
    for _ in 0..1000 {
        let q_next = Pose::from_position_dir(
            Vector3::new(
                rng.random_range(-15.0..15.0),
                rng.random_range(-15.0..15.0),
                rng.random_range(-15.0..15.0),
            ),
            Unit::new_normalize(random_dir(&mut rng)),
        );
        let query = ConeQuery::from_pose(&q_next, 5.0, 20f64.to_radians());
        let got = cone_candidates(&tree, &q_next, &query, &metric);
        let mut brute: Vec<(f64, NodeId)> = (0..tree.len() as u32)
            .map(NodeId)
            .filter(|&id| query.contains(&tree.node(id).pose.position))
            .map(|id| (pose_distance(&tree.forward_pose(id), &q_next, &metric), id))
            .collect();
        brute.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cone_exact &= got == brute.into_iter().map(|(_, id)| id).collect::<Vec<_>>();

        let q = q_next.position;
        let got_k = k_nearest(&tree, &q, 5, &metric);
        let mut brute_k: Vec<(f64, u32)> = (0..tree.len() as u32)
            .map(|i| (sample_distance(&tree.node(NodeId(i)).pose, &q, &metric), i))
            .collect();
        brute_k.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let expect: Vec<NodeId> = brute_k.iter().take(5).map(|&(_, i)| NodeId(i)).collect();
        knn_exact &= got_k == expect;
    }

    // Clearance vs 10x finer sampling over planned trajectories.
    let scene = generate_scene(&TemplateParams::new(TemplateId::Cochlea)).unwrap();
    let cfg = PlannerConfig {
        collect_all: true,
        rng_seed: 99,
        ..Default::default()
    };
    let mut spec = scene.problem.clone();
    spec.t_max = 5.0;
    let res = plan(PlannerKind::SplineConnect, &spec, &cfg, &scene.index);
    let mut clearance_ok = !res.paths.is_empty();
    let mut worst_dev: f64 = 0.0;
    for p in res.paths.iter().take(20) {
        let coarse = path_clearance(&scene.index, &p.trajectory, spec.r_d, 16);
        let fine = path_clearance_with_step(&scene.index, &p.trajectory, spec.r_d, 64, 0.01);
        let dev = (coarse.min_distance - fine.min_distance).abs();
        worst_dev = worst_dev.max(dev);
        clearance_ok &= dev <= 0.05;
    }

    tally.report(
        "6 (oracle equivalence)",
        kd_exact && cone_exact && knn_exact && clearance_ok,
        format!(
            "kd exact {kd_exact}, cone exact {cone_exact}, k-nearest exact {knn_exact}, clearance worst dev {worst_dev:.4} mm"
        ),
    );
}

/// Criterion 7: (seed, scene, config) reproduce bit-identical plan
/// outcomes under a deterministic iteration budget, and bench CSV bytes
/// are identical across two consecutive runs.
fn criterion_7_determinism(tally: &mut Tally) {
    let mut ok = true;
    let mut details = Vec::new();
    for id in TemplateId::ALL {
        let scene = generate_scene(&TemplateParams::new(id)).unwrap();
        let mut spec = scene.problem.clone();
        spec.t_max = 3600.0;
        for kind in PlannerKind::ALL {
            let cfg = PlannerConfig {
                rng_seed: 11,
                collect_all: true,
                max_iterations: Some(3000),
                ..Default::default()
            };
            let a = plan(kind, &spec, &cfg, &scene.index);
            let b = plan(kind, &spec, &cfg, &scene.index);
            if a.fingerprint() != b.fingerprint() {
                ok = false;
                details.push(format!("{id}/{kind} fingerprints differ"));
            }
        }
    }

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let base = BenchConfig {
        scenes: vec![SceneSource::Template(TemplateParams::new(
            TemplateId::Cochlea,
        ))],
        planners: vec![PlannerKind::ArcConnect, PlannerKind::SplineConnect],
        duration: 3600.0,
        iteration_budget: Some(2000),
        seeds: vec![0, 1],
        workers: 0,
        ..Default::default()
    };
    run_bench(&BenchConfig {
        out_dir: Some(dir_a.path().to_path_buf()),
        ..base.clone()
    })
    .unwrap();
    run_bench(&BenchConfig {
        out_dir: Some(dir_b.path().to_path_buf()),
        ..base
    })
    .unwrap();
    let mut csv_ok = true;
    for f in ["raw.csv", "paths.csv", "aggregate.csv"] {
        csv_ok &= std::fs::read(dir_a.path().join(f)).unwrap()
            == std::fs::read(dir_b.path().join(f)).unwrap();
    }
    ok &= csv_ok;
    tally.report(
        "7 (determinism)",
        ok,
        format!(
            "16 planner/template fingerprint pairs bit-identical: {}; bench CSV byte-identical: {csv_ok}{}",
            details.is_empty(),
            if details.is_empty() {
                String::new()
            } else {
                format!(" ({})", details.join(", "))
            }
        ),
    );
}

/// Criterion 8: sealed-passage scenes report failure for all four planners
/// within the budget plus one iteration, in 100% of 20 seeded runs each.
fn criterion_8_failure_honesty(tally: &mut Tally) {
    let sealed_scenes = vec![
        TemplateParams {
            blocking_body: true,
            ..TemplateParams::new(TemplateId::Rl)
        },
        TemplateParams {
            bottleneck_width: Some(0.5),
            ..TemplateParams::new(TemplateId::Cochlea)
        },
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for params in sealed_scenes {
        let scene = generate_scene(&params).unwrap();
        assert!(scene.infeasible_by_construction);
        let jobs: Vec<(PlannerKind, u64)> = PlannerKind::ALL
            .iter()
            .flat_map(|&k| (0..20u64).map(move |s| (k, s)))
            .collect();
        let outcomes: Vec<(bool, f64)> = jobs
            .par_iter()
            .map(|&(kind, seed)| {
                let cfg = PlannerConfig {
                    rng_seed: seed,
                    collect_all: true,
                    ..Default::default()
                };
                let res = plan(kind, &scene.problem, &cfg, &scene.index);
                (res.failed, res.wall_time)
            })
            .collect();
        let all_failed = outcomes.iter().all(|(f, _)| *f);
        // One iteration is microseconds-to-milliseconds; allow generous
        // scheduler slack on loaded hardware.
        let within_budget = outcomes
            .iter()
            .all(|(_, w)| *w <= scene.problem.t_max + 0.35);
        ok &= all_failed && within_budget;
        details.push(format!(
            "{}: {} runs, all failed {all_failed}, within budget {within_budget}",
            scene.name,
            outcomes.len()
        ));
    }
    tally.report("8 (failure honesty)", ok, details.join("; "));
}
