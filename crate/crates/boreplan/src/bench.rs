//! Benchmark harness: planner x scene x seed grids with CSV reports.
//!
//! Each job runs one planner on one scene with one seed in collect-all
//! mode, records the path count and per-path metrics, and re-validates
//! every returned trajectory independently of the planner's own checks.
//! Jobs are independent and run on a rayon pool; results are merged in
//! sorted key order, so reports are deterministic whenever the planning
//! runs are (identical seeds and an iteration budget, or idle hardware
//! with a wall-clock budget).
//!
//! Rates are reported as paths per *budgeted* second (the number of paths
//! divided by the configured duration), so CSV bytes do not depend on
//! measured wall time.

use crate::error::{Error, Result};
use crate::planner::{plan, PlannerConfig, PlannerKind};
use crate::scenes::{export_path_csv, export_path_ply, generate_scene, load_scene, Scene, TemplateParams};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

/// Where a bench scene comes from.
#[derive(Clone, Debug)]
pub enum SceneSource {
    File(PathBuf),
    Template(TemplateParams),
}

impl SceneSource {
    fn label(&self) -> String {
        match self {
            SceneSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            SceneSource::Template(t) => format!("{}-{}", t.template, t.jitter_seed),
        }
    }

    fn load(&self) -> Result<Scene> {
        match self {
            SceneSource::File(p) => load_scene(p),
            SceneSource::Template(t) => generate_scene(t),
        }
    }
}

/// Benchmark configuration.
#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub scenes: Vec<SceneSource>,
    pub planners: Vec<PlannerKind>,
    /// Planning budget per run, seconds.
    pub duration: f64,
    /// Optional deterministic iteration budget per run (stops whichever
    /// comes first; required for byte-reproducible reports).
    pub iteration_budget: Option<u64>,
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 0 uses the default rayon pool.
    pub workers: usize,
    /// Planner tunables shared by all jobs (seed is overridden per job).
    pub planner: PlannerConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            scenes: Vec::new(),
            planners: PlannerKind::ALL.to_vec(),
            duration: 20.0,
            iteration_budget: None,
            seeds: (0..10).collect(),
            out_dir: None,
            workers: 0,
            planner: PlannerConfig {
                collect_all: true,
                ..Default::default()
            },
        }
    }
}

/// One (scene, planner, seed) outcome.
#[derive(Clone, Debug)]
pub struct BenchRow {
    pub scene: String,
    pub planner: PlannerKind,
    pub seed: u64,
    pub n_paths: usize,
    pub failed: bool,
    /// Paths per budgeted second.
    pub paths_per_second: f64,
    /// Measured wall time, seconds (not part of any CSV).
    pub wall_time: f64,
    pub paths: Vec<PathRow>,
}

/// Per-path metrics of one solution.
#[derive(Clone, Debug)]
pub struct PathRow {
    pub length: f64,
    pub goal_pos_err: f64,
    pub goal_ang_err: f64,
    pub clearance_center: f64,
    pub clearance_swept: f64,
}

/// Aggregates per (scene, planner).
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub scene: String,
    pub planner: PlannerKind,
    pub median_n_paths: f64,
    pub median_paths_per_second: f64,
    pub failure_pct: f64,
}

#[derive(Clone, Debug, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<AggregateRow>,
    /// Scenes that failed to load, with their error text.
    pub scene_errors: Vec<(String, String)>,
    /// Paths that failed the harness re-validation (must stay zero).
    pub invalid_paths: usize,
}

/// Runs the whole grid and writes `raw.csv`, `paths.csv`, `aggregate.csv`
/// and per-scene best-path exports into the output directory (when set).
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.scenes.is_empty() {
        return Err(Error::InvalidParameter {
            name: "scenes",
            reason: "at least one scene required".into(),
        });
    }
    if cfg.planners.is_empty() {
        return Err(Error::InvalidParameter {
            name: "planners",
            reason: "at least one planner required".into(),
        });
    }
    if !(cfg.duration > 0.0) {
        return Err(Error::InvalidParameter {
            name: "duration",
            reason: "must be positive".into(),
        });
    }

    let mut scenes: Vec<(String, Scene)> = Vec::new();
    let mut scene_errors = Vec::new();
    for src in &cfg.scenes {
        let label = src.label();
        match src.load() {
            Ok(scene) => scenes.push((label, scene)),
            Err(e) => {
                // A broken scene aborts its own rows only.
                eprintln!("bench: skipping scene `{label}`: {e}");
                scene_errors.push((label, e.to_string()));
            }
        }
    }

    let jobs: Vec<(usize, PlannerKind, u64)> = scenes
        .iter()
        .enumerate()
        .flat_map(|(si, _)| {
            cfg.planners
                .iter()
                .flat_map(move |&k| cfg.seeds.iter().map(move |&s| (si, k, s)))
        })
        .collect();

    let run_job = |&(si, kind, seed): &(usize, PlannerKind, u64)| -> (BenchRow, usize) {
        let (label, scene) = &scenes[si];
        let mut spec = scene.problem.clone();
        spec.t_max = cfg.duration;
        let mut pcfg = cfg.planner.clone();
        pcfg.rng_seed = seed;
        pcfg.collect_all = true;
        pcfg.max_iterations = cfg.iteration_budget;
        let result = plan(kind, &spec, &pcfg, &scene.index);

        // Independent re-check of every reported path.
        let mut invalid = 0usize;
        let paths: Vec<PathRow> = result
            .paths
            .iter()
            .map(|p| {
                let report = crate::planner::validate_trajectory(&p.trajectory, &spec, &scene.index);
                if !report.all_ok() {
                    invalid += 1;
                }
                PathRow {
                    length: p.length,
                    goal_pos_err: p.goal_pos_err,
                    goal_ang_err: p.goal_ang_err,
                    clearance_center: p.clearance_center,
                    clearance_swept: p.clearance_swept,
                }
            })
            .collect();
        (
            BenchRow {
                scene: label.clone(),
                planner: kind,
                seed,
                n_paths: result.n_paths(),
                failed: result.failed,
                paths_per_second: result.n_paths() as f64 / cfg.duration,
                wall_time: result.wall_time,
                paths,
            },
            invalid,
        )
    };

    let outcomes: Vec<(BenchRow, usize)> = if cfg.workers == 1 {
        jobs.iter().map(run_job).collect()
    } else if cfg.workers == 0 {
        jobs.par_iter().map(run_job).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .expect("rayon pool");
        pool.install(|| jobs.par_iter().map(run_job).collect())
    };

    let invalid_paths = outcomes.iter().map(|(_, i)| i).sum();
    let mut rows: Vec<BenchRow> = outcomes.into_iter().map(|(r, _)| r).collect();
    rows.sort_by(|a, b| {
        a.scene
            .cmp(&b.scene)
            .then(a.planner.cmp(&b.planner))
            .then(a.seed.cmp(&b.seed))
    });

    let aggregates = aggregate(&rows);
    let report = BenchReport {
        rows,
        aggregates,
        scene_errors,
        invalid_paths,
    };

    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        write_csvs(&report, dir)?;
        export_best_paths(cfg, &scenes, dir)?;
    }
    Ok(report)
}

/// Median with the even-count convention of averaging the middle pair.
pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Recomputes the aggregate table from raw rows.
pub fn aggregate(rows: &[BenchRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(String, PlannerKind)> = rows
        .iter()
        .map(|r| (r.scene.clone(), r.planner))
        .collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(scene, planner)| {
            let group: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.scene == scene && r.planner == planner)
                .collect();
            let mut counts: Vec<f64> = group.iter().map(|r| r.n_paths as f64).collect();
            let mut rates: Vec<f64> = group.iter().map(|r| r.paths_per_second).collect();
            let failures = group.iter().filter(|r| r.failed).count();
            AggregateRow {
                scene,
                planner,
                median_n_paths: median(&mut counts),
                median_paths_per_second: median(&mut rates),
                failure_pct: 100.0 * failures as f64 / group.len().max(1) as f64,
            }
        })
        .collect()
}

fn write_csvs(report: &BenchReport, dir: &Path) -> Result<()> {
    let mut raw = String::from("scene,planner,seed,n_paths,failed,paths_per_second\n");
    for r in &report.rows {
        raw.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.scene, r.planner, r.seed, r.n_paths, r.failed, r.paths_per_second
        ));
    }
    std::fs::write(dir.join("raw.csv"), raw)?;

    let mut paths = String::from(
        "scene,planner,seed,path_index,length_mm,goal_pos_err_mm,goal_ang_err_rad,clearance_center_mm,clearance_swept_mm\n",
    );
    for r in &report.rows {
        for (i, p) in r.paths.iter().enumerate() {
            paths.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.scene,
                r.planner,
                r.seed,
                i,
                p.length,
                p.goal_pos_err,
                p.goal_ang_err,
                p.clearance_center,
                p.clearance_swept
            ));
        }
    }
    std::fs::write(dir.join("paths.csv"), paths)?;

    let mut agg = String::from("scene,planner,median_n_paths,median_paths_per_second,failure_pct\n");
    for a in &report.aggregates {
        agg.push_str(&format!(
            "{},{},{},{},{}\n",
            a.scene, a.planner, a.median_n_paths, a.median_paths_per_second, a.failure_pct
        ));
    }
    std::fs::write(dir.join("aggregate.csv"), agg)?;
    Ok(())
}

/// Exports the best path (largest swept clearance) per scene from a short
/// deterministic run of the first configured planner.
fn export_best_paths(cfg: &BenchConfig, scenes: &[(String, Scene)], dir: &Path) -> Result<()> {
    for (label, scene) in scenes {
        let mut spec = scene.problem.clone();
        spec.t_max = cfg.duration;
        let mut pcfg = cfg.planner.clone();
        pcfg.rng_seed = *cfg.seeds.first().unwrap_or(&0);
        pcfg.collect_all = true;
        pcfg.max_iterations = cfg.iteration_budget;
        let kind = cfg.planners[0];
        let result = plan(kind, &spec, &pcfg, &scene.index);
        let best = result.paths.iter().max_by(|a, b| {
            a.clearance_swept
                .total_cmp(&b.clearance_swept)
                .then(b.length.total_cmp(&a.length))
        });
        if let Some(best) = best {
            export_path_csv(&best.trajectory, dir.join(format!("{label}-best.csv")))?;
            export_path_ply(&best.trajectory, dir.join(format!("{label}-best.ply")))?;
        }
    }
    Ok(())
}

/// Sign of the per-key differences between two reports.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub scene: String,
    pub planner: PlannerKind,
    /// Sign of (a - b) median path counts: -1, 0 or +1.
    pub median_paths_delta_sign: i8,
    /// Sign of (a - b) failure rates.
    pub failure_delta_sign: i8,
}

/// Compares two reports key by key; errors list the missing keys when the
/// reports do not cover the same (scene, planner) grid.
pub fn compare_report(a: &BenchReport, b: &BenchReport) -> Result<Vec<ComparisonRow>> {
    let key = |r: &AggregateRow| (r.scene.clone(), r.planner);
    let a_keys: Vec<_> = a.aggregates.iter().map(key).collect();
    let b_keys: Vec<_> = b.aggregates.iter().map(key).collect();
    let missing: Vec<String> = a_keys
        .iter()
        .filter(|k| !b_keys.contains(k))
        .chain(b_keys.iter().filter(|k| !a_keys.contains(k)))
        .map(|(s, p)| format!("{s}/{p}"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::KeyMismatch { missing });
    }
    let sign = |x: f64| {
        if x > 0.0 {
            1i8
        } else if x < 0.0 {
            -1i8
        } else {
            0i8
        }
    };
    Ok(a.aggregates
        .iter()
        .map(|ra| {
            let rb = b
                .aggregates
                .iter()
                .find(|rb| rb.scene == ra.scene && rb.planner == ra.planner)
                .expect("key checked above");
            ComparisonRow {
                scene: ra.scene.clone(),
                planner: ra.planner,
                median_paths_delta_sign: sign(ra.median_n_paths - rb.median_n_paths),
                failure_delta_sign: sign(ra.failure_pct - rb.failure_pct),
            }
        })
        .collect())
}
