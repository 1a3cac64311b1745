//! Command-line front end: plan one scene, benchmark grids, generate
//! procedural scenes, and re-validate exported paths.
//!
//! Exit codes: 0 on success, 1 when a planner (or validation) finds no
//! acceptable path, 2 on input errors.

use boreplan::bench::{run_bench, BenchConfig, SceneSource};
use boreplan::geometry::{min_distance, EVAL_STEP_MM};
use boreplan::planner::{PlannerConfig, PlannerKind};
use boreplan::scenes::{
    export_path_csv, export_path_ply, export_scene_ply, generate_scene, import_path_csv,
    load_scene, save_scene, Scene, TemplateId, TemplateParams,
};
use boreplan::trajectory::max_circumradius_curvature;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "BOREPLAN_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "boreplan",
    about = "Curvature-bounded drill-path planning: plan, benchmark, generate and validate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one planner on one scene and export the best path.
    Plan(PlanArgs),
    /// Run a planner x scene x seed benchmark grid.
    Bench(BenchArgs),
    /// Generate a procedural scene file.
    Gen(GenArgs),
    /// Re-check an exported path CSV against a scene.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SceneArgs {
    /// Scene file to load.
    #[arg(long, conflicts_with = "template")]
    scene: Option<PathBuf>,
    /// Procedural template: corridor | cochlea | ssc | rl.
    #[arg(long)]
    template: Option<String>,
    /// Bottleneck slot width override, mm.
    #[arg(long)]
    bottleneck_width: Option<f64>,
    /// Start-to-goal distance for templates, mm.
    #[arg(long)]
    corridor_length: Option<f64>,
    /// Jitter seed for template obstacle variation.
    #[arg(long, default_value_t = 0)]
    jitter_seed: u64,
    /// Jitter scale, mm.
    #[arg(long, default_value_t = 0.0)]
    jitter_scale: f64,
    /// Add the sealing body to the rl template.
    #[arg(long, default_value_t = false)]
    blocking: bool,
}

impl SceneArgs {
    fn template_params(&self) -> Result<Option<TemplateParams>, String> {
        let Some(name) = &self.template else {
            return Ok(None);
        };
        let id = TemplateId::parse(name)
            .ok_or_else(|| format!("unknown template `{name}` (corridor|cochlea|ssc|rl)"))?;
        let mut params = TemplateParams::new(id);
        if let Some(w) = self.bottleneck_width {
            params.bottleneck_width = Some(w);
        }
        if let Some(l) = self.corridor_length {
            params.corridor_length = l;
        }
        params.jitter_seed = self.jitter_seed;
        params.jitter_scale = self.jitter_scale;
        params.blocking_body = self.blocking;
        Ok(Some(params))
    }

    fn load(&self) -> Result<Scene, String> {
        if let Some(path) = &self.scene {
            return load_scene(path).map_err(|e| e.to_string());
        }
        match self.template_params()? {
            Some(params) => generate_scene(&params).map_err(|e| e.to_string()),
            None => Err("either --scene or --template is required".into()),
        }
    }
}

#[derive(Args)]
struct OverrideArgs {
    /// Planning budget override, seconds.
    #[arg(long)]
    t_max: Option<f64>,
    /// Deterministic iteration budget (stops with the wall clock,
    /// whichever comes first).
    #[arg(long)]
    iterations: Option<u64>,
    /// Curvature bound override, 1/mm.
    #[arg(long)]
    kappa_max: Option<f64>,
    /// Goal position tolerance override, mm.
    #[arg(long)]
    epsilon_g: Option<f64>,
    /// Goal orientation tolerance override, degrees (quaternion metric).
    #[arg(long)]
    phi_g_deg: Option<f64>,
    /// Drill radius override, mm.
    #[arg(long)]
    r_d: Option<f64>,
    /// Safety distance override, mm.
    #[arg(long)]
    d_max: Option<f64>,
    /// Goal bias probability.
    #[arg(long)]
    goal_bias: Option<f64>,
    /// Nearest neighbors extended per sample.
    #[arg(long)]
    k_nearest: Option<usize>,
    /// Connection cone height, mm.
    #[arg(long)]
    cone_height: Option<f64>,
    /// Connection cone half angle, degrees.
    #[arg(long)]
    cone_angle_deg: Option<f64>,
    /// Steering step, mm.
    #[arg(long)]
    delta_t: Option<f64>,
    /// Angular weight of the combined metric, mm per radian.
    #[arg(long)]
    angular_weight: Option<f64>,
}

impl OverrideArgs {
    fn apply(&self, scene: &mut Scene, cfg: &mut PlannerConfig) {
        let p = &mut scene.problem;
        if let Some(v) = self.t_max {
            p.t_max = v;
        }
        if let Some(v) = self.kappa_max {
            p.kappa_max = v;
        }
        if let Some(v) = self.epsilon_g {
            p.epsilon_g = v;
        }
        if let Some(v) = self.phi_g_deg {
            p.phi_g = v.to_radians();
        }
        if let Some(v) = self.r_d {
            p.r_d = v;
        }
        if let Some(v) = self.d_max {
            p.d_max = v;
        }
        cfg.max_iterations = self.iterations;
        if let Some(v) = self.goal_bias {
            cfg.goal_bias = v;
        }
        if let Some(v) = self.k_nearest {
            cfg.k_nearest = v;
        }
        if let Some(v) = self.cone_height {
            cfg.cone_height = v;
        }
        if let Some(v) = self.cone_angle_deg {
            cfg.cone_half_angle = v.to_radians();
        }
        if let Some(v) = self.delta_t {
            cfg.delta_t = v;
        }
        if let Some(v) = self.angular_weight {
            cfg.metric.angular_weight = v;
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Planner: arc-rrt | spline-rrt | arc-connect | spline-connect.
    #[arg(long, default_value = "spline-connect")]
    planner: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep planning until the budget elapses, collecting every solution.
    #[arg(long, default_value_t = false)]
    collect_all: bool,
    /// Output directory (default: $BOREPLAN_OUT_DIR or `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Scene files (repeatable).
    #[arg(long = "scene")]
    scenes: Vec<PathBuf>,
    /// Procedural templates (repeatable).
    #[arg(long = "template")]
    templates: Vec<String>,
    /// Planners (repeatable; default all four).
    #[arg(long = "planner")]
    planners: Vec<String>,
    /// Budget per run, seconds.
    #[arg(long, default_value_t = 20.0)]
    duration: f64,
    /// Deterministic iteration budget per run.
    #[arg(long)]
    iterations: Option<u64>,
    /// Seeds, e.g. --seeds 0,1,2 (default 0..9).
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory (default: $BOREPLAN_OUT_DIR or `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Output scene file.
    #[arg(long)]
    out: PathBuf,
    /// Also write the obstacle cloud as PLY next to the scene file.
    #[arg(long, default_value_t = false)]
    ply: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Exported path CSV to re-check.
    #[arg(long)]
    path: PathBuf,
}

fn default_out_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Plan(args) => run_plan(args),
        Command::Bench(args) => run_bench_cmd(args),
        Command::Gen(args) => run_gen(args),
        Command::Validate(args) => run_validate(args),
    }
    .unwrap_or_else(|(code, msg)| {
        eprintln!("error: {msg}");
        code
    })
}

type CmdResult = Result<ExitCode, (ExitCode, String)>;

fn input_err<T: ToString>(msg: T) -> (ExitCode, String) {
    (ExitCode::from(2), msg.to_string())
}

fn run_plan(args: PlanArgs) -> CmdResult {
    let kind = PlannerKind::parse(&args.planner)
        .ok_or_else(|| input_err(format!("unknown planner `{}`", args.planner)))?;
    let mut scene = args.scene.load().map_err(input_err)?;
    let mut cfg = PlannerConfig {
        rng_seed: args.seed,
        collect_all: args.collect_all,
        ..Default::default()
    };
    args.overrides.apply(&mut scene, &mut cfg);

    println!(
        "scene `{}`: {} obstacle points, t_max {}s",
        scene.name,
        scene.obstacles.total_points(),
        scene.problem.t_max
    );
    let result = scene.plan(kind, &cfg);
    println!(
        "{kind}: {} path(s) in {:.3}s wall / {} iterations{}",
        result.n_paths(),
        result.wall_time,
        result.iterations,
        if result.failed { " -- FAILED" } else { "" }
    );
    for (i, p) in result.paths.iter().enumerate().take(10) {
        println!(
            "  path {i}: length {:.2} mm, goal err {:.2e} mm / {:.2e} rad, clearance {:.2} mm (swept {:.2})",
            p.length, p.goal_pos_err, p.goal_ang_err, p.clearance_center, p.clearance_swept
        );
    }
    if result.failed {
        return Ok(ExitCode::from(1));
    }
    let out = default_out_dir(args.out);
    std::fs::create_dir_all(&out).map_err(input_err)?;
    let best = result
        .paths
        .iter()
        .max_by(|a, b| a.clearance_swept.total_cmp(&b.clearance_swept))
        .expect("non-empty");
    let base = format!("{}-{}-seed{}", scene.name, kind, args.seed);
    let csv = out.join(format!("{base}.csv"));
    let ply = out.join(format!("{base}.ply"));
    export_path_csv(&best.trajectory, &csv).map_err(input_err)?;
    export_path_ply(&best.trajectory, &ply).map_err(input_err)?;
    println!("best path exported to {} and {}", csv.display(), ply.display());
    Ok(ExitCode::SUCCESS)
}

fn run_bench_cmd(args: BenchArgs) -> CmdResult {
    let mut scenes: Vec<SceneSource> = args.scenes.into_iter().map(SceneSource::File).collect();
    for name in &args.templates {
        let id = TemplateId::parse(name)
            .ok_or_else(|| input_err(format!("unknown template `{name}`")))?;
        scenes.push(SceneSource::Template(TemplateParams::new(id)));
    }
    let planners = if args.planners.is_empty() {
        PlannerKind::ALL.to_vec()
    } else {
        args.planners
            .iter()
            .map(|p| {
                PlannerKind::parse(p).ok_or_else(|| input_err(format!("unknown planner `{p}`")))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let cfg = BenchConfig {
        scenes,
        planners,
        duration: args.duration,
        iteration_budget: args.iterations,
        seeds: if args.seeds.is_empty() {
            (0..10).collect()
        } else {
            args.seeds
        },
        out_dir: Some(default_out_dir(args.out)),
        workers: args.workers,
        ..Default::default()
    };
    let report = run_bench(&cfg).map_err(input_err)?;
    println!("scene,planner,median_paths,median_paths_per_s,failure_pct");
    for a in &report.aggregates {
        println!(
            "{},{},{},{},{}",
            a.scene, a.planner, a.median_n_paths, a.median_paths_per_second, a.failure_pct
        );
    }
    if report.invalid_paths > 0 {
        return Err((
            ExitCode::from(1),
            format!("{} reported paths failed re-validation", report.invalid_paths),
        ));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_gen(args: GenArgs) -> CmdResult {
    let params = args
        .scene
        .template_params()
        .map_err(input_err)?
        .ok_or_else(|| input_err("--template is required for gen"))?;
    let scene = generate_scene(&params).map_err(input_err)?;
    save_scene(&scene, &args.out).map_err(input_err)?;
    println!(
        "wrote `{}` ({} structures, {} points{})",
        args.out.display(),
        scene.obstacles.structures().len(),
        scene.obstacles.total_points(),
        if scene.infeasible_by_construction {
            ", tagged infeasible-by-construction"
        } else {
            ""
        }
    );
    if args.ply {
        let ply = args.out.with_extension("ply");
        export_scene_ply(&scene, &ply).map_err(input_err)?;
        println!("wrote `{}`", ply.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn run_validate(args: ValidateArgs) -> CmdResult {
    let scene = args.scene.load().map_err(input_err)?;
    let rows = import_path_csv(&args.path).map_err(input_err)?;
    let spec = &scene.problem;

    // (i) start matches an initial state.
    let start = rows.first().expect("non-empty").1;
    let start_ok = spec.initial_states.iter().any(|s| start.approx_eq(s, 1e-6));

    // (ii) end within the goal tolerances.
    let end = rows.last().expect("non-empty").1;
    let goal_ok = spec.goal_states.iter().any(|g| {
        (end.position - g.position).norm() <= spec.epsilon_g
            && boreplan::se3::quat_distance(&end.orientation, &g.orientation) <= spec.phi_g
    });

    // (iii) discrete curvature over the polyline samples.
    let max_k = max_circumradius_curvature(rows.iter().map(|(_, p)| p.position));
    let curvature_ok = max_k <= spec.kappa_max * (1.0 + 1e-6);

    // (iv) centerline clearance at every sample.
    let threshold = spec.r_d + spec.d_max;
    let mut min_clear = f64::INFINITY;
    for (_, pose) in &rows {
        min_clear = min_clear.min(min_distance(&scene.index, &pose.position).0);
    }
    let clearance_ok = min_clear > threshold;

    // Sampling resolution sanity: rows should be ~0.1 mm apart.
    let mut max_gap = 0.0f64;
    for w in rows.windows(2) {
        max_gap = max_gap.max((w[1].1.position - w[0].1.position).norm());
    }

    println!("start pose match:      {}", verdict(start_ok));
    println!(
        "goal tolerance:        {} (pos {:.3} mm, ang {:.4} rad)",
        verdict(goal_ok),
        spec.goal_states
            .iter()
            .map(|g| (end.position - g.position).norm())
            .fold(f64::INFINITY, f64::min),
        spec.goal_states
            .iter()
            .map(|g| boreplan::se3::quat_distance(&end.orientation, &g.orientation))
            .fold(f64::INFINITY, f64::min),
    );
    println!(
        "curvature bound:       {} (max {:.5} / bound {:.5} 1/mm)",
        verdict(curvature_ok),
        max_k,
        spec.kappa_max
    );
    println!(
        "clearance bound:       {} (min {:.3} / required > {:.3} mm)",
        verdict(clearance_ok),
        min_clear,
        threshold
    );
    println!(
        "sample spacing:        max {:.3} mm (export step {} mm)",
        max_gap, EVAL_STEP_MM
    );

    if start_ok && goal_ok && curvature_ok && clearance_ok {
        println!("PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("FAIL");
        Ok(ExitCode::from(1))
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}
