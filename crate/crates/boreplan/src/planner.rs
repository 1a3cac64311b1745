//! The four planners: one-directional RRTs and bidirectional RRT-Connect
//! variants, each in an arc-steering and a spline-steering flavor.
//!
//! A plan run alternates two trees (or grows a single one), steering the k
//! nearest nodes toward each sampled point, keeping collision-free
//! extensions, and -- for the bidirectional planners -- attempting to weld
//! the trees whenever a fresh node sees an opposite-tree node inside its
//! connection cone. Runs are anytime: with `collect_all` they keep planning
//! until the time budget elapses and accumulate every distinct solution.
//!
//! Determinism: all planning decisions derive from the seeded RNG, so a run
//! stopped by an iteration budget is bit-reproducible. A wall-clock budget
//! reproduces the same solution *sequence*; only where it truncates varies
//! with machine load.

use crate::connect::{cone_candidates, dubins3d, pin_tail_orientation, spline_connect, ConeQuery};
use crate::error::{Error, Result};
use crate::geometry::{path_clearance, segment_clear, SpatialIndex, DEFAULT_CIRCLE_SAMPLES, EVAL_STEP_MM};
use crate::se3::{quat_distance, MetricConfig, Pose};
use crate::steering::{steer_arc, steer_spline, SteerConfig};
use crate::trajectory::{Segment, Trajectory};
use crate::tree::{NodeId, SearchTree, TreeSide};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::time::Instant;

/// Axis-aligned sampling domain, mm.
#[derive(Clone, Copy, Debug)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|d| p[d] >= self.min[d] && p[d] <= self.max[d])
    }

    pub fn is_degenerate(&self) -> bool {
        (0..3).any(|d| !(self.max[d] > self.min[d]))
    }
}

/// One planning problem: regions, tolerances, robot limits and time budget.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub initial_states: Vec<Pose>,
    pub goal_states: Vec<Pose>,
    /// Goal position tolerance, mm.
    pub epsilon_g: f64,
    /// Goal orientation tolerance in the quaternion metric, rad.
    pub phi_g: f64,
    /// Maximum path curvature, 1/mm.
    pub kappa_max: f64,
    /// Drill radius, mm.
    pub r_d: f64,
    /// Safety distance beyond the drill radius, mm.
    pub d_max: f64,
    /// Planning time budget, seconds.
    pub t_max: f64,
    pub bounds: Aabb,
}

impl ProblemSpec {
    /// Checks scalar invariants and, when an index is supplied, that every
    /// declared state keeps clearance `r_d + d_max`.
    pub fn validate(&self, index: Option<&SpatialIndex>) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        }
        positive("epsilon_g", self.epsilon_g)?;
        positive("kappa_max", self.kappa_max)?;
        positive("r_d", self.r_d)?;
        positive("t_max", self.t_max)?;
        if !(self.d_max >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "d_max",
                reason: format!("must be >= 0, got {}", self.d_max),
            });
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.phi_g) {
            return Err(Error::InvalidParameter {
                name: "phi_g",
                reason: format!("must be in [0, pi], got {}", self.phi_g),
            });
        }
        if self.initial_states.is_empty() {
            return Err(Error::InvalidParameter {
                name: "initial_states",
                reason: "at least one initial state required".into(),
            });
        }
        if self.goal_states.is_empty() {
            return Err(Error::InvalidParameter {
                name: "goal_states",
                reason: "at least one goal state required".into(),
            });
        }
        if self.bounds.is_degenerate() {
            return Err(Error::InvalidParameter {
                name: "bounds",
                reason: "sampling box must have positive extent".into(),
            });
        }
        if let Some(idx) = index {
            let threshold = self.r_d + self.d_max;
            for (kind, states) in [
                ("initial_states", &self.initial_states),
                ("goal_states", &self.goal_states),
            ] {
                for (i, pose) in states.iter().enumerate() {
                    if idx.any_within(&pose.position, threshold) {
                        return Err(Error::InvalidParameter {
                            name: "states",
                            reason: format!(
                                "{kind}[{i}] is closer than r_d + d_max = {threshold} mm to an obstacle"
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Tunables of the search itself.
#[derive(Clone, Debug)]
pub struct PlannerConfig {
    /// Probability of sampling an opposite-root position instead of a
    /// uniform point.
    pub goal_bias: f64,
    /// Number of nearest nodes extended per sample.
    pub k_nearest: usize,
    /// Connection cone height, mm.
    pub cone_height: f64,
    /// Connection cone half angle, rad.
    pub cone_half_angle: f64,
    /// Steering step, mm.
    pub delta_t: f64,
    pub rng_seed: u64,
    /// Keep planning until the budget elapses, collecting every distinct
    /// solution.
    pub collect_all: bool,
    /// Optional deterministic stopping rule; when set, the run stops after
    /// exactly this many iterations (or at `t_max`, whichever first).
    pub max_iterations: Option<u64>,
    pub metric: MetricConfig,
    /// Collision sampling step along segments, mm.
    pub collision_step: f64,
    /// Round cap of the iterative spline connection.
    pub spline_connect_rounds: usize,
    /// Residual bound of the Dubins solver (mm + rad).
    pub dubins_tol: f64,
    pub dubins_max_iter: u32,
    /// Cone candidates tried per fresh node, nearest first.
    pub connect_attempts: usize,
    /// Iterations after which a solution-less search restarts with fresh
    /// trees (search trees saturate: late cone candidates cluster at tiny
    /// gaps where no curvature-bounded weld exists).
    pub run_iteration_cap: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            goal_bias: 0.25,
            k_nearest: 5,
            cone_height: 5.0,
            cone_half_angle: 20f64.to_radians(),
            delta_t: 2.0,
            rng_seed: 0,
            collect_all: false,
            max_iterations: None,
            metric: MetricConfig::default(),
            collision_step: EVAL_STEP_MM,
            spline_connect_rounds: 4,
            dubins_tol: crate::connect::DUBINS_TOL,
            dubins_max_iter: 16,
            connect_attempts: 8,
            run_iteration_cap: 1500,
        }
    }
}

/// Local steering flavor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SteerFlavor {
    Arc,
    Spline,
}

/// The four planner variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerKind {
    ArcRrt,
    SplineRrt,
    ArcConnect,
    SplineConnect,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 4] = [
        PlannerKind::ArcRrt,
        PlannerKind::SplineRrt,
        PlannerKind::ArcConnect,
        PlannerKind::SplineConnect,
    ];

    pub fn flavor(&self) -> SteerFlavor {
        match self {
            PlannerKind::ArcRrt | PlannerKind::ArcConnect => SteerFlavor::Arc,
            PlannerKind::SplineRrt | PlannerKind::SplineConnect => SteerFlavor::Spline,
        }
    }

    pub fn is_bidirectional(&self) -> bool {
        matches!(self, PlannerKind::ArcConnect | PlannerKind::SplineConnect)
    }

    pub fn name(&self) -> &'static str {
        match self {
            PlannerKind::ArcRrt => "arc-rrt",
            PlannerKind::SplineRrt => "spline-rrt",
            PlannerKind::ArcConnect => "arc-connect",
            PlannerKind::SplineConnect => "spline-connect",
        }
    }

    pub fn parse(s: &str) -> Option<PlannerKind> {
        Self::ALL.iter().copied().find(|k| k.name() == s)
    }
}

impl std::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One solution with its per-path metrics.
#[derive(Clone, Debug)]
pub struct SolvedPath {
    pub trajectory: Trajectory,
    /// Arc length, mm.
    pub length: f64,
    /// Euclidean error to the matched goal position, mm.
    pub goal_pos_err: f64,
    /// Quaternion-metric error to the matched goal orientation, rad.
    pub goal_ang_err: f64,
    /// Minimum centerline distance to obstacles, mm.
    pub clearance_center: f64,
    /// Minimum swept-surface distance (circle samples at r_d), mm.
    pub clearance_swept: f64,
    pub found_at_iteration: u64,
    /// Welded node pair (a-side, b-side) for bidirectional planners; the
    /// goal node and matched goal index for one-directional planners.
    pub weld: (u32, u32),
}

/// Outcome of one planning run.
#[derive(Clone, Debug, Default)]
pub struct PlanResult {
    pub paths: Vec<SolvedPath>,
    pub iterations: u64,
    /// No path found within the budget. Always equals `paths.is_empty()`.
    pub failed: bool,
    /// Measured wall time, seconds. Observational: excluded from
    /// [`PlanResult::fingerprint`].
    pub wall_time: f64,
}

impl PlanResult {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Hash of the deterministic outcome (iteration count, path count and
    /// bit-exact per-path metrics). Two runs with the same seed, scene and
    /// config produce equal fingerprints.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.iterations.hash(&mut h);
        self.failed.hash(&mut h);
        (self.paths.len() as u64).hash(&mut h);
        for p in &self.paths {
            p.length.to_bits().hash(&mut h);
            p.goal_pos_err.to_bits().hash(&mut h);
            p.goal_ang_err.to_bits().hash(&mut h);
            p.clearance_center.to_bits().hash(&mut h);
            p.clearance_swept.to_bits().hash(&mut h);
            p.found_at_iteration.hash(&mut h);
            p.weld.hash(&mut h);
        }
        h.finish()
    }
}

/// Samples a planning position: with probability `goal_bias` the position
/// of a uniformly chosen bias root, otherwise uniform over the bounds with
/// up to 100 rejections of points closer than `r_d + d_max` to an obstacle
/// (the last sample is returned regardless).
pub fn sample_state(
    spec: &ProblemSpec,
    cfg: &PlannerConfig,
    rng: &mut ChaCha8Rng,
    bias_roots: &[Pose],
    index: &SpatialIndex,
) -> Vector3<f64> {
    let u: f64 = rng.random();
    if u < cfg.goal_bias && !bias_roots.is_empty() {
        let i = rng.random_range(0..bias_roots.len());
        return bias_roots[i].position;
    }
    let threshold = spec.r_d + spec.d_max;
    let mut sample = uniform_in(rng, &spec.bounds);
    for _ in 0..100 {
        if !index.any_within(&sample, threshold) {
            return sample;
        }
        sample = uniform_in(rng, &spec.bounds);
    }
    sample
}

fn uniform_in(rng: &mut ChaCha8Rng, b: &Aabb) -> Vector3<f64> {
    Vector3::new(
        rng.random_range(b.min.x..b.max.x),
        rng.random_range(b.min.y..b.max.y),
        rng.random_range(b.min.z..b.max.z),
    )
}

/// The `k` tree nodes minimizing the combined metric to `q`, ties by node
/// id (delegates to the tree's exact index).
pub fn k_nearest(tree: &SearchTree, q: &Vector3<f64>, k: usize, metric: &MetricConfig) -> Vec<NodeId> {
    tree.k_nearest(q, k, metric)
}

/// Per-constraint validation report of a candidate trajectory.
#[derive(Clone, Debug)]
pub struct ConstraintReport {
    /// (i) starts exactly on an initial state.
    pub start_ok: bool,
    /// (ii) ends within (epsilon_g, phi_g) of a goal state.
    pub goal_ok: bool,
    /// (iii) discrete max curvature within the bound.
    pub curvature_ok: bool,
    /// (iv) centerline clearance strictly above r_d + d_max everywhere.
    pub clearance_ok: bool,
    pub goal_pos_err: f64,
    pub goal_ang_err: f64,
    pub max_curvature: f64,
    pub min_clearance_center: f64,
    /// Index of the matched (or nearest) goal state.
    pub goal_index: usize,
}

impl ConstraintReport {
    pub fn all_ok(&self) -> bool {
        self.start_ok && self.goal_ok && self.curvature_ok && self.clearance_ok
    }
}

/// Checks a trajectory against all four problem constraints: exact start
/// match, goal tolerance, curvature bound (0.1 mm discrete estimate, welds
/// included) and centerline clearance at 0.1 mm resolution.
pub fn validate_trajectory(
    traj: &Trajectory,
    spec: &ProblemSpec,
    index: &SpatialIndex,
) -> ConstraintReport {
    let start_ok = match traj.start_pose() {
        Some(start) => spec
            .initial_states
            .iter()
            .any(|s| start.approx_eq(s, 1e-9)),
        None => false,
    };

    let (goal_ok, goal_pos_err, goal_ang_err, goal_index) = match traj.end_pose() {
        Some(end) => {
            let mut best: Option<(bool, f64, f64, usize)> = None;
            for (i, g) in spec.goal_states.iter().enumerate() {
                let pos_err = (end.position - g.position).norm();
                let ang_err = quat_distance(&end.orientation, &g.orientation);
                let ok = pos_err <= spec.epsilon_g && ang_err <= spec.phi_g;
                let cand = (ok, pos_err, ang_err, i);
                best = Some(match best {
                    None => cand,
                    Some(b) => {
                        // Prefer satisfying goals, then smaller position error.
                        if (cand.0 && !b.0) || (cand.0 == b.0 && cand.1 < b.1) {
                            cand
                        } else {
                            b
                        }
                    }
                });
            }
            let b = best.expect("goal_states non-empty");
            (b.0, b.1, b.2, b.3)
        }
        None => (false, f64::INFINITY, f64::INFINITY, 0),
    };

    let max_curvature = traj.max_discrete_curvature(EVAL_STEP_MM);
    let curvature_ok = max_curvature <= spec.kappa_max * (1.0 + 1e-6);

    let centerline = path_clearance(index, traj, 0.0, 0);
    let clearance_ok = centerline.min_distance > spec.r_d + spec.d_max;

    ConstraintReport {
        start_ok,
        goal_ok,
        curvature_ok,
        clearance_ok,
        goal_pos_err,
        goal_ang_err,
        max_curvature,
        min_clearance_center: centerline.min_distance,
        goal_index,
    }
}

/// Dispatches to [`plan_connect`] or [`plan_rrt`].
pub fn plan(
    kind: PlannerKind,
    spec: &ProblemSpec,
    cfg: &PlannerConfig,
    index: &SpatialIndex,
) -> PlanResult {
    if kind.is_bidirectional() {
        plan_connect(spec, cfg, kind.flavor(), index)
    } else {
        plan_rrt(spec, cfg, kind.flavor(), index)
    }
}

struct RunState<'a> {
    spec: &'a ProblemSpec,
    cfg: &'a PlannerConfig,
    steer: SteerConfig,
    index: &'a SpatialIndex,
    start: Instant,
    paths: Vec<SolvedPath>,
    iterations: u64,
}

impl<'a> RunState<'a> {
    fn new(spec: &'a ProblemSpec, cfg: &'a PlannerConfig, index: &'a SpatialIndex) -> Self {
        RunState {
            spec,
            cfg,
            steer: SteerConfig {
                delta_t: cfg.delta_t,
                kappa_max: spec.kappa_max,
            },
            index,
            start: Instant::now(),
            paths: Vec::new(),
            iterations: 0,
        }
    }

    fn budget_left(&self) -> bool {
        if self.start.elapsed().as_secs_f64() >= self.spec.t_max {
            return false;
        }
        match self.cfg.max_iterations {
            Some(m) => self.iterations < m,
            None => true,
        }
    }

    fn steer_once(&self, from: &Pose, target: &Vector3<f64>, flavor: SteerFlavor) -> Option<(Segment, Pose)> {
        match flavor {
            SteerFlavor::Arc => {
                steer_arc(from, target, &self.steer).map(|(s, e)| (Segment::Arc(s), e))
            }
            SteerFlavor::Spline => {
                steer_spline(from, target, &self.steer).map(|(s, e)| (Segment::Spline(s), e))
            }
        }
    }

    /// Extends `tree` toward `q_rand` from its k nearest nodes; returns the
    /// ids of the nodes actually added.
    fn extend(&mut self, tree: &mut SearchTree, q_rand: &Vector3<f64>, flavor: SteerFlavor) -> Vec<NodeId> {
        let near = tree.k_nearest(q_rand, self.cfg.k_nearest, &self.cfg.metric);
        let mut added = Vec::new();
        for id in near {
            let parent_pose = tree.node(id).pose;
            let Some((seg, end)) = self.steer_once(&parent_pose, q_rand, flavor) else {
                continue;
            };
            if !self.spec.bounds.contains(&end.position) {
                continue;
            }
            if !segment_clear(
                self.index,
                &seg,
                self.spec.r_d,
                self.spec.d_max,
                self.cfg.collision_step,
            ) {
                continue;
            }
            added.push(tree.add(id, seg, end));
        }
        added
    }

    /// Records a validated solution unless it duplicates an existing one
    /// (same weld nodes, or length within 0.01 mm of a path with the same
    /// weld).
    fn record(&mut self, trajectory: Trajectory, report: &ConstraintReport, weld: (u32, u32)) {
        let length = trajectory.length();
        let duplicate = self
            .paths
            .iter()
            .any(|p| p.weld == weld && (p.length - length).abs() <= 0.01);
        if duplicate {
            return;
        }
        let swept = path_clearance(
            self.index,
            &trajectory,
            self.spec.r_d,
            DEFAULT_CIRCLE_SAMPLES,
        );
        self.paths.push(SolvedPath {
            length,
            goal_pos_err: report.goal_pos_err,
            goal_ang_err: report.goal_ang_err,
            clearance_center: report.min_clearance_center,
            clearance_swept: swept.min_distance,
            found_at_iteration: self.iterations,
            weld,
            trajectory,
        });
    }

    fn finish(self) -> PlanResult {
        PlanResult {
            failed: self.paths.is_empty(),
            paths: self.paths,
            iterations: self.iterations,
            wall_time: self.start.elapsed().as_secs_f64(),
        }
    }
}

/// Bidirectional planning: two trees alternate extensions; every fresh node
/// looks for opposite-tree nodes inside its connection cone and attempts a
/// weld with the flavor's connector. Solutions run initial -> goal and are
/// validated against all four constraints before insertion.
///
/// A search ends when the trees connect. Under `collect_all` the planner
/// therefore accumulates solutions as a deterministic sequence of fresh
/// runs (seeded from `rng_seed` and the run index) until the budget
/// elapses, which makes the solution list of a longer budget an exact
/// prefix extension of a shorter one.
pub fn plan_connect(
    spec: &ProblemSpec,
    cfg: &PlannerConfig,
    flavor: SteerFlavor,
    index: &SpatialIndex,
) -> PlanResult {
    debug_assert!(spec.validate(Some(index)).is_ok());
    let mut state = RunState::new(spec, cfg, index);
    let mut run_idx = 0u64;
    loop {
        let found = connect_run(&mut state, cfg.rng_seed.wrapping_add(run_idx), flavor);
        run_idx += 1;
        if !state.budget_left() {
            break;
        }
        if found && !cfg.collect_all {
            break;
        }
    }
    state.finish()
}

/// One search-until-connection run; returns whether a solution was found.
fn connect_run(state: &mut RunState, seed: u64, flavor: SteerFlavor) -> bool {
    let spec = state.spec;
    let cfg = state.cfg;
    let index = state.index;
    let goal_roots_reversed: Vec<Pose> = spec.goal_states.iter().map(|g| g.reversed()).collect();
    let mut initial_tree = SearchTree::new(TreeSide::Initial, &spec.initial_states);
    let mut goal_tree = SearchTree::new(TreeSide::Goal, &goal_roots_reversed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run_iter = 0u64;
    let mut found = false;

    while state.budget_left() && !found && run_iter < cfg.run_iteration_cap {
        state.iterations += 1;
        run_iter += 1;
        let grow_initial = run_iter % 2 == 1;
        let (tree, other): (&mut SearchTree, &SearchTree) = if grow_initial {
            (&mut initial_tree, &goal_tree)
        } else {
            (&mut goal_tree, &initial_tree)
        };

        let bias_roots: Vec<Pose> = other.root_poses().copied().collect();
        let q_rand = sample_state(spec, cfg, &mut rng, &bias_roots, index);
        let added = state.extend(tree, &q_rand, flavor);

        for nid in added {
            let q_next_fwd = tree.forward_pose(nid);
            let cone = ConeQuery::from_pose(&q_next_fwd, cfg.cone_height, cfg.cone_half_angle);
            let candidates = cone_candidates(other, &q_next_fwd, &cone, &cfg.metric);
            // Attempt the candidates a curvature-bounded weld is most
            // likely to reach: rank by the closed-form feasibility score
            // (the contractual pose-distance order is a poor predictor --
            // the nearest candidates have the tightest windows).
            let mut ranked: Vec<(f64, crate::tree::NodeId)> = candidates
                .into_iter()
                .map(|cand| {
                    let (ca, cb) = if grow_initial {
                        (q_next_fwd, other.forward_pose(cand))
                    } else {
                        (other.forward_pose(cand), q_next_fwd)
                    };
                    (
                        crate::connect::weld_feasibility_score(&ca, &cb, spec.kappa_max),
                        cand,
                    )
                })
                .filter(|(score, _)| *score <= 3.0 * spec.kappa_max)
                .collect();
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (_, cand) in ranked.into_iter().take(cfg.connect_attempts) {
                let (a_id, b_id) = if grow_initial { (nid, cand) } else { (cand, nid) };
                let (a_tree, b_tree): (&SearchTree, &SearchTree) = if grow_initial {
                    (tree, other)
                } else {
                    (other, tree)
                };
                let a_pose = a_tree.forward_pose(a_id);
                let b_pose = b_tree.forward_pose(b_id);
                let weld = match flavor {
                    SteerFlavor::Arc => dubins3d(
                        &a_pose,
                        &b_pose,
                        spec.kappa_max,
                        cfg.dubins_tol,
                        cfg.dubins_max_iter,
                    )
                    .map(|s| s.to_trajectory()),
                    SteerFlavor::Spline => {
                        spline_connect(&a_pose, &b_pose, &state.steer, cfg.spline_connect_rounds)
                    }
                };
                let Ok(weld_traj) = weld else { continue };
                let weld_clear = weld_traj.segments().iter().all(|s| {
                    segment_clear(index, s, spec.r_d, spec.d_max, cfg.collision_step)
                });
                if !weld_clear {
                    continue;
                }
                let full = assemble_solution(a_tree, a_id, &weld_traj, b_tree, b_id, spec);
                let report = validate_trajectory(&full, spec, index);
                if !report.all_ok() {
                    continue;
                }
                state.record(full, &report, (a_id.0, b_id.0));
                found = true;
                break;
            }
            if found {
                break;
            }
        }
    }
    found
}

/// One-directional planning: a single tree from the initial states; a fresh
/// node is a solution when it lies within `epsilon_g` of a goal position
/// with quaternion-metric orientation error at most `phi_g`. A search ends
/// at its first solution; `collect_all` accumulates a deterministic
/// sequence of fresh runs until the budget elapses.
pub fn plan_rrt(
    spec: &ProblemSpec,
    cfg: &PlannerConfig,
    flavor: SteerFlavor,
    index: &SpatialIndex,
) -> PlanResult {
    debug_assert!(spec.validate(Some(index)).is_ok());
    let mut state = RunState::new(spec, cfg, index);
    let mut run_idx = 0u64;
    loop {
        let found = rrt_run(&mut state, cfg.rng_seed.wrapping_add(run_idx), flavor);
        run_idx += 1;
        if !state.budget_left() {
            break;
        }
        if found && !cfg.collect_all {
            break;
        }
    }
    state.finish()
}

fn rrt_run(state: &mut RunState, seed: u64, flavor: SteerFlavor) -> bool {
    let spec = state.spec;
    let cfg = state.cfg;
    let mut tree = SearchTree::new(TreeSide::Initial, &spec.initial_states);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bias_roots = spec.goal_states.clone();
    let mut found = false;
    let mut run_iter = 0u64;

    while state.budget_left() && !found && run_iter < cfg.run_iteration_cap {
        state.iterations += 1;
        run_iter += 1;
        let q_rand = sample_state(spec, cfg, &mut rng, &bias_roots, state.index);
        let added = state.extend(&mut tree, &q_rand, flavor);
        for nid in added {
            let pose = tree.node(nid).pose;
            let mut matched: Option<usize> = None;
            let mut best_pos = f64::INFINITY;
            for (gi, g) in spec.goal_states.iter().enumerate() {
                let pos_err = (pose.position - g.position).norm();
                if pos_err <= spec.epsilon_g
                    && quat_distance(&pose.orientation, &g.orientation) <= spec.phi_g
                    && pos_err < best_pos
                {
                    matched = Some(gi);
                    best_pos = pos_err;
                }
            }
            let Some(goal_idx) = matched else { continue };
            let full = Trajectory::from_segments(tree.path_from_root(nid));
            if full.is_empty() {
                continue;
            }
            let report = validate_trajectory(&full, spec, state.index);
            if !report.all_ok() {
                continue;
            }
            state.record(full, &report, (nid.0, goal_idx as u32));
            found = true;
            break;
        }
    }
    found
}

/// Builds the full initial -> goal trajectory: the initial-side chain, the
/// weld, and the reversed goal-side chain. The suffix after the
/// initial-side chain is re-oriented backward from the original goal pose
/// so the terminal orientation is exact; the roll seam lands at an interior
/// junction where only tangent continuity is contractual.
fn assemble_solution(
    a_tree: &SearchTree,
    a_id: NodeId,
    weld: &Trajectory,
    b_tree: &SearchTree,
    b_id: NodeId,
    spec: &ProblemSpec,
) -> Trajectory {
    debug_assert_eq!(a_tree.side(), TreeSide::Initial);
    debug_assert_eq!(b_tree.side(), TreeSide::Goal);
    let a_chain = a_tree.path_from_root(a_id);

    // Goal-side chain as grown runs goal -> outward; reverse it.
    let b_chain = b_tree.path_from_root(b_id);
    let root = root_of(b_tree, b_id);
    let goal_pose = spec.goal_states[root.0 as usize];
    let mut suffix: Vec<Segment> = weld.segments().to_vec();
    suffix.extend(b_chain.iter().rev().map(|s| s.reversed()));

    let preserve_start = a_chain.is_empty();
    let mut segments = a_chain;
    segments.extend(pin_tail_orientation(suffix, &goal_pose, preserve_start));
    Trajectory::from_segments(segments)
}

fn root_of(tree: &SearchTree, id: NodeId) -> NodeId {
    let mut cur = id;
    while let Some(p) = tree.node(cur).parent {
        cur = p;
    }
    cur
}
