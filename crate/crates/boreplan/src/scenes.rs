//! Scene persistence and procedural test scenes.
//!
//! A scene bundles the obstacle geometry, its spatial index and a
//! [`ProblemSpec`]. Scenes are stored as self-describing JSON documents
//! (version `"1"`, millimeters) with obstacles as named point lists or
//! triangle meshes; meshes are sampled to surface points at load time.
//!
//! Four procedural templates stand in for segmented anatomies. All of them
//! drill along +x through an outer canal tube:
//!
//! - `corridor`: the canal only; the trivial sanity scene.
//! - `cochlea`, `ssc`: two tube-like obstacles cross the canal and leave a
//!   bottleneck slot of configurable width between them.
//! - `rl`: two bulky bodies force the path to weave around them; an
//!   optional third body seals the canal outright (for failure tests).
//!
//! A jitter seed and scale perturb the obstacle control points to mimic
//! anatomical variation; the generator is byte-deterministic for fixed
//! parameters.

use crate::error::{Error, Result};
use crate::geometry::{build_index, ObstacleSet, SpatialIndex, Structure, EVAL_STEP_MM};
use crate::planner::{Aabb, PlanResult, PlannerConfig, PlannerKind, ProblemSpec};
use crate::se3::Pose;
use crate::trajectory::Trajectory;
use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Scene file format version this crate reads and writes.
pub const SCENE_FORMAT_VERSION: &str = "1";

/// Default mesh sampling density, points per square millimeter.
pub const DEFAULT_MESH_DENSITY: f64 = 4.0;

/// Surface point spacing of the procedural generators, mm. Small enough
/// that no drill tube can slip between samples of a sealed wall.
const SURFACE_SPACING: f64 = 0.6;

/// A fully loaded planning scene.
#[derive(Debug)]
pub struct Scene {
    pub name: String,
    pub provenance: String,
    pub infeasible_by_construction: bool,
    pub obstacles: ObstacleSet,
    pub index: SpatialIndex,
    pub problem: ProblemSpec,
}

impl Scene {
    /// Runs one planner on this scene.
    pub fn plan(&self, kind: PlannerKind, cfg: &PlannerConfig) -> PlanResult {
        crate::planner::plan(kind, &self.problem, cfg, &self.index)
    }

    pub fn validate(&self, traj: &Trajectory) -> crate::planner::ConstraintReport {
        crate::planner::validate_trajectory(traj, &self.problem, &self.index)
    }
}

// ---------------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SceneFile {
    pub version: String,
    /// Length unit of every coordinate in this file.
    pub units: String,
    pub name: String,
    #[serde(default)]
    pub provenance: String,
    #[serde(default)]
    pub infeasible_by_construction: bool,
    pub obstacles: Vec<ObstacleEntry>,
    pub initial_states: Vec<PoseEntry>,
    pub goal_states: Vec<PoseEntry>,
    pub params: ParamsEntry,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ObstacleEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeshEntry {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

/// Quaternions are scalar-first: `[a, b, c, d]` with `a` the scalar part.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PoseEntry {
    pub position: [f64; 3],
    pub orientation: [f64; 4],
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ParamsEntry {
    pub kappa_max: f64,
    pub epsilon_g_mm: f64,
    pub phi_g_rad: f64,
    pub d_max_mm: f64,
    pub r_d_mm: f64,
    pub t_max_s: f64,
    pub bounds_min: [f64; 3],
    pub bounds_max: [f64; 3],
    #[serde(default = "default_density")]
    pub mesh_sample_density_per_mm2: f64,
}

fn default_density() -> f64 {
    DEFAULT_MESH_DENSITY
}

impl PoseEntry {
    fn to_pose(&self) -> Pose {
        let [a, b, c, d] = self.orientation;
        let q = UnitQuaternion::new_normalize(Quaternion::new(a, b, c, d));
        Pose::new(Vector3::from(self.position), q)
    }

    fn from_pose(p: &Pose) -> Self {
        let q = p.orientation.quaternion();
        PoseEntry {
            position: [p.position.x, p.position.y, p.position.z],
            orientation: [q.w, q.i, q.j, q.k],
        }
    }
}

/// Parses and validates a scene file, sampling meshes to points.
pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let file: SceneFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let inner = e.inner();
        Error::SceneParse {
            path: path.display().to_string(),
            location: format!(
                "field `{}` (line {}, column {})",
                e.path(),
                inner.line(),
                inner.column()
            ),
            message: inner.to_string(),
        }
    })?;
    scene_from_file(file)
}

/// Builds the runtime scene from a parsed file.
pub fn scene_from_file(file: SceneFile) -> Result<Scene> {
    if file.version != SCENE_FORMAT_VERSION {
        return Err(Error::SceneValidation {
            field: "version".into(),
            reason: format!(
                "unsupported version `{}`, expected `{SCENE_FORMAT_VERSION}`",
                file.version
            ),
        });
    }
    if file.units != "mm" {
        return Err(Error::SceneValidation {
            field: "units".into(),
            reason: format!("unsupported units `{}`, expected `mm`", file.units),
        });
    }
    let density = file.params.mesh_sample_density_per_mm2;
    if !(density > 0.0) {
        return Err(Error::SceneValidation {
            field: "params.mesh_sample_density_per_mm2".into(),
            reason: "must be positive".into(),
        });
    }
    let mut structures = Vec::with_capacity(file.obstacles.len());
    for obs in &file.obstacles {
        let points = match (&obs.points, &obs.mesh) {
            (Some(p), None) => p.iter().map(|a| Vector3::from(*a)).collect(),
            (None, Some(m)) => sample_mesh(m, density)?,
            _ => {
                return Err(Error::SceneValidation {
                    field: format!("obstacles[{}]", obs.name),
                    reason: "exactly one of `points` or `mesh` required".into(),
                })
            }
        };
        structures.push(Structure {
            name: obs.name.clone(),
            points,
        });
    }
    let obstacles = ObstacleSet::new(structures)?;
    let index = build_index(&obstacles)?;

    let problem = ProblemSpec {
        initial_states: file.initial_states.iter().map(|p| p.to_pose()).collect(),
        goal_states: file.goal_states.iter().map(|p| p.to_pose()).collect(),
        epsilon_g: file.params.epsilon_g_mm,
        phi_g: file.params.phi_g_rad,
        kappa_max: file.params.kappa_max,
        r_d: file.params.r_d_mm,
        d_max: file.params.d_max_mm,
        t_max: file.params.t_max_s,
        bounds: Aabb {
            min: Vector3::from(file.params.bounds_min),
            max: Vector3::from(file.params.bounds_max),
        },
    };
    // Infeasible-by-construction scenes intentionally violate nothing but
    // reachability; their states must still be collision-free.
    problem
        .validate(Some(&index))
        .map_err(|e| Error::SceneValidation {
            field: "params".into(),
            reason: e.to_string(),
        })?;
    Ok(Scene {
        name: file.name,
        provenance: file.provenance,
        infeasible_by_construction: file.infeasible_by_construction,
        obstacles,
        index,
        problem,
    })
}

/// Serializes a scene; obstacles are written as point lists, so save/load
/// round-trips are lossless (sampled meshes stay sampled).
pub fn scene_to_file(scene: &Scene) -> SceneFile {
    SceneFile {
        version: SCENE_FORMAT_VERSION.to_string(),
        units: "mm".to_string(),
        name: scene.name.clone(),
        provenance: scene.provenance.clone(),
        infeasible_by_construction: scene.infeasible_by_construction,
        obstacles: scene
            .obstacles
            .structures()
            .iter()
            .map(|s| ObstacleEntry {
                name: s.name.clone(),
                points: Some(s.points.iter().map(|p| [p.x, p.y, p.z]).collect()),
                mesh: None,
            })
            .collect(),
        initial_states: scene
            .problem
            .initial_states
            .iter()
            .map(PoseEntry::from_pose)
            .collect(),
        goal_states: scene
            .problem
            .goal_states
            .iter()
            .map(PoseEntry::from_pose)
            .collect(),
        params: ParamsEntry {
            kappa_max: scene.problem.kappa_max,
            epsilon_g_mm: scene.problem.epsilon_g,
            phi_g_rad: scene.problem.phi_g,
            d_max_mm: scene.problem.d_max,
            r_d_mm: scene.problem.r_d,
            t_max_s: scene.problem.t_max,
            bounds_min: scene.problem.bounds.min.into(),
            bounds_max: scene.problem.bounds.max.into(),
            mesh_sample_density_per_mm2: DEFAULT_MESH_DENSITY,
        },
    }
}

pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    let file = scene_to_file(scene);
    write_scene_file(&file, path)
}

pub fn write_scene_file(file: &SceneFile, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(file).expect("scene serialization");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Deterministic mesh surface sampling: per-triangle point counts by
/// largest-remainder allocation of `ceil(total_area * density)`, points by
/// a seeded generator in barycentric coordinates.
fn sample_mesh(mesh: &MeshEntry, density: f64) -> Result<Vec<Vector3<f64>>> {
    if mesh.triangles.is_empty() {
        return Err(Error::SceneValidation {
            field: "mesh.triangles".into(),
            reason: "mesh has no triangles".into(),
        });
    }
    let vertex = |i: u32| -> Result<Vector3<f64>> {
        mesh.vertices
            .get(i as usize)
            .map(|v| Vector3::from(*v))
            .ok_or_else(|| Error::SceneValidation {
                field: "mesh.triangles".into(),
                reason: format!("vertex index {i} out of range"),
            })
    };
    let mut areas = Vec::with_capacity(mesh.triangles.len());
    let mut total_area = 0.0;
    for t in &mesh.triangles {
        let (a, b, c) = (vertex(t[0])?, vertex(t[1])?, vertex(t[2])?);
        let area = 0.5 * (b - a).cross(&(c - a)).norm();
        total_area += area;
        areas.push(area);
    }
    if !(total_area > 0.0) {
        return Err(Error::SceneValidation {
            field: "mesh".into(),
            reason: "mesh has zero surface area".into(),
        });
    }
    let target = (total_area * density).ceil() as usize;
    // Largest-remainder allocation keeps the total exact.
    let mut counts: Vec<usize> = Vec::with_capacity(areas.len());
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(areas.len());
    let mut assigned = 0usize;
    for (i, &area) in areas.iter().enumerate() {
        let share = area / total_area * target as f64;
        let base = share.floor() as usize;
        counts.push(base);
        assigned += base;
        remainders.push((share - base as f64, i));
    }
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(target.saturating_sub(assigned)) {
        counts[i] += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x6d65_7368); // fixed: sampling is part of the format
    let mut points = Vec::with_capacity(target);
    for (t, &n) in mesh.triangles.iter().zip(counts.iter()) {
        let (a, b, c) = (vertex(t[0])?, vertex(t[1])?, vertex(t[2])?);
        for _ in 0..n {
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            let s = r1.sqrt();
            points.push(a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2));
        }
    }
    Ok(points)
}

// ---------------------------------------------------------------------------
// Procedural templates
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemplateId {
    Corridor,
    Cochlea,
    Ssc,
    Rl,
}

impl TemplateId {
    pub const ALL: [TemplateId; 4] = [
        TemplateId::Corridor,
        TemplateId::Cochlea,
        TemplateId::Ssc,
        TemplateId::Rl,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TemplateId::Corridor => "corridor",
            TemplateId::Cochlea => "cochlea",
            TemplateId::Ssc => "ssc",
            TemplateId::Rl => "rl",
        }
    }

    pub fn parse(s: &str) -> Option<TemplateId> {
        Self::ALL.iter().copied().find(|t| t.name() == s)
    }
}

impl std::fmt::Display for TemplateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of the procedural generator.
#[derive(Clone, Copy, Debug)]
pub struct TemplateParams {
    pub template: TemplateId,
    /// Slot width between the bottleneck tubes, mm. `None` uses the
    /// template default.
    pub bottleneck_width: Option<f64>,
    /// Straight-line start-to-goal distance, mm.
    pub corridor_length: f64,
    pub jitter_seed: u64,
    /// Standard deviation of the control-point jitter, mm (0 = clean).
    pub jitter_scale: f64,
    /// `rl` only: add the sealing third body.
    pub blocking_body: bool,
}

impl TemplateParams {
    pub fn new(template: TemplateId) -> Self {
        TemplateParams {
            template,
            bottleneck_width: None,
            corridor_length: template_geometry(template).default_length,
            jitter_seed: 0,
            jitter_scale: 0.0,
            blocking_body: false,
        }
    }
}

struct TemplateGeometry {
    canal_radius: f64,
    tube_radius: f64,
    default_bottleneck: f64,
    /// Peak lateral excursion of the curved canal centerline; forces a
    /// genuinely nonlinear path over a bump.
    canal_amplitude: f64,
    /// Yaw of the required goal approach relative to the canal axis,
    /// radians (an insertion angle is a clinical requirement, not the
    /// direction the canal happens to end in; it points out of the plane
    /// the canal winds in).
    goal_yaw: f64,
    default_length: f64,
    kappa_max: f64,
    epsilon_g: f64,
    phi_g: f64,
    d_max: f64,
    r_d: f64,
    t_max: f64,
}

fn template_geometry(id: TemplateId) -> TemplateGeometry {
    let phi = 5f64.to_radians();
    match id {
        TemplateId::Corridor => TemplateGeometry {
            canal_radius: 4.5,
            tube_radius: 0.0,
            default_bottleneck: 0.0,
            canal_amplitude: 0.0,
            goal_yaw: 0.0,
            default_length: 40.0,
            kappa_max: 0.05,
            epsilon_g: 1.0,
            phi_g: phi,
            d_max: 0.3,
            r_d: 0.5,
            t_max: 0.5,
        },
        TemplateId::Cochlea => TemplateGeometry {
            canal_radius: 3.25,
            tube_radius: 2.5,
            default_bottleneck: 3.0,
            canal_amplitude: 2.5,
            goal_yaw: 10f64.to_radians(),
            default_length: 45.0,
            kappa_max: 0.05,
            epsilon_g: 1.0,
            phi_g: phi,
            d_max: 0.3,
            r_d: 0.5,
            t_max: 0.5,
        },
        TemplateId::Ssc => TemplateGeometry {
            canal_radius: 4.5,
            tube_radius: 3.0,
            default_bottleneck: 4.5,
            canal_amplitude: 2.5,
            goal_yaw: 10f64.to_radians(),
            default_length: 45.0,
            kappa_max: 0.05,
            epsilon_g: 1.0,
            phi_g: phi,
            d_max: 0.5,
            r_d: 1.0,
            t_max: 0.5,
        },
        TemplateId::Rl => TemplateGeometry {
            canal_radius: 9.0,
            tube_radius: 3.5,
            default_bottleneck: 0.0,
            canal_amplitude: 0.0,
            goal_yaw: 0.0,
            default_length: 80.0,
            kappa_max: 0.05,
            epsilon_g: 1.0,
            phi_g: phi,
            d_max: 1.0,
            r_d: 1.0,
            t_max: 0.5,
        },
    }
}

/// Generates a deterministic scene for the given parameters.
pub fn generate_scene(params: &TemplateParams) -> Result<Scene> {
    let geo = template_geometry(params.template);
    let length = params.corridor_length;
    if !(length > 10.0) {
        return Err(Error::InvalidParameter {
            name: "corridor_length",
            reason: format!("must exceed 10 mm, got {length}"),
        });
    }
    let width = params
        .bottleneck_width
        .unwrap_or(geo.default_bottleneck);
    if matches!(params.template, TemplateId::Cochlea | TemplateId::Ssc) && !(width > 0.0) {
        return Err(Error::InvalidParameter {
            name: "bottleneck_width",
            reason: "must be positive".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.jitter_seed);
    let mut jitter = |scale: f64| -> Vector3<f64> {
        // Clamped displacement so declared states always stay clear.
        let mut v = Vector3::zeros();
        for d in 0..3 {
            let g: f64 = sample_gaussian(&mut rng);
            v[d] = (g * scale).clamp(-2.0, 2.0);
        }
        v
    };

    let rc = geo.canal_radius;
    let mut structures = vec![Structure {
        name: "canal_wall".into(),
        points: canal_surface(length, rc, geo.canal_amplitude),
    }];
    let mut infeasible = false;
    let threshold = 2.0 * (geo.r_d + geo.d_max);

    match params.template {
        TemplateId::Corridor => {}
        TemplateId::Cochlea | TemplateId::Ssc => {
            // Two tubes pinch the canal at the crest of its bump, leaving a
            // slot of the requested width centered on the canal centerline.
            let rt = geo.tube_radius;
            let half_len = rc + 2.5;
            let xc = length / 2.0;
            let crest = geo.canal_amplitude;
            let z_upper = crest + width / 2.0 + rt;
            let z_lower = crest - width / 2.0 - rt;
            for (name, zc) in [("upper_nerve", z_upper), ("lower_nerve", z_lower)] {
                let center = Vector3::new(xc, 0.0, zc);
                let points = jittered_tube(
                    center,
                    half_len,
                    rt,
                    params.jitter_scale,
                    &mut jitter,
                );
                structures.push(Structure {
                    name: name.into(),
                    points,
                });
            }
            if width <= threshold {
                infeasible = true;
            }
        }
        TemplateId::Rl => {
            // Two bulky bodies on opposite sides of the axis force an
            // S-shaped circumnavigation; spacing leaves just enough run for
            // the weave at the curvature bound.
            let r = geo.tube_radius;
            let c1 = Vector3::new(length * 0.325, 3.2, 0.0) + jitter(params.jitter_scale);
            let c2 = Vector3::new(length * 0.7, -3.2, 0.0) + jitter(params.jitter_scale);
            structures.push(Structure {
                name: "facial_body".into(),
                points: sphere_surface(c1, r),
            });
            structures.push(Structure {
                name: "vein_body".into(),
                points: sphere_surface(c2, r),
            });
            if params.blocking_body {
                structures.push(Structure {
                    name: "blocking_bulb".into(),
                    points: disk_surface(Vector3::new(length * 0.51, 0.0, 0.0), rc + 1.0),
                });
                infeasible = true;
            }
        }
    }

    let dir = Unit::new_normalize(Vector3::x());
    let start = Pose::from_position_dir(Vector3::zeros(), dir);
    let goal_dir = Unit::new_normalize(Vector3::new(
        geo.goal_yaw.cos(),
        geo.goal_yaw.sin(),
        0.0,
    ));
    let goal = Pose::from_position_dir(Vector3::new(length, 0.0, 0.0), goal_dir);
    let problem = ProblemSpec {
        initial_states: vec![start],
        goal_states: vec![goal],
        epsilon_g: geo.epsilon_g,
        phi_g: geo.phi_g,
        kappa_max: geo.kappa_max,
        r_d: geo.r_d,
        d_max: geo.d_max,
        t_max: geo.t_max,
        bounds: Aabb {
            min: Vector3::new(-2.0, -rc, -rc),
            max: Vector3::new(length + 2.0, rc, geo.canal_amplitude + rc),
        },
    };
    let obstacles = ObstacleSet::new(structures)?;
    let index = build_index(&obstacles)?;
    problem
        .validate(Some(&index))
        .expect("generated states must be collision-free");

    let name = format!("{}-{}", params.template, params.jitter_seed);
    let provenance = format!(
        "procedural template `{}` (length {} mm, bottleneck {:?} mm, jitter seed {}, jitter scale {} mm, blocking {})",
        params.template,
        length,
        params.bottleneck_width,
        params.jitter_seed,
        params.jitter_scale,
        params.blocking_body,
    );
    Ok(Scene {
        name,
        provenance,
        infeasible_by_construction: infeasible,
        obstacles,
        index,
        problem,
    })
}

/// Box-Muller, two uniforms per draw; deterministic for a seeded generator.
fn sample_gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Canal wall: a tube around a ramp-plateau-ramp centerline. The canal
/// rises by `amplitude` over the first `RAMP_FRACTION` of its length, runs
/// level through the middle (the weld runway carrying the bottleneck), and
/// descends symmetrically.
fn canal_surface(length: f64, radius: f64, amplitude: f64) -> Vec<Vector3<f64>> {
    let x0 = -3.0;
    let x1 = length + 3.0;
    let n_rings = (((x1 - x0) / SURFACE_SPACING).ceil() as usize).max(2);
    let n_around = ((2.0 * std::f64::consts::PI * radius) / SURFACE_SPACING).ceil() as usize;
    let ramp = RAMP_LENGTH_MM.min(0.4 * length);
    let z_of = |x: f64| canal_height(x, length, amplitude, ramp);
    let dz_of = |x: f64| {
        let h = 1e-6;
        (canal_height(x + h, length, amplitude, ramp)
            - canal_height(x - h, length, amplitude, ramp))
            / (2.0 * h)
    };
    let mut points = Vec::with_capacity(n_rings * n_around);
    for i in 0..n_rings {
        let x = x0 + (x1 - x0) * i as f64 / (n_rings - 1) as f64;
        let center = Vector3::new(x, 0.0, z_of(x));
        let tangent = Vector3::new(1.0, 0.0, dz_of(x)).normalize();
        let e1 = Vector3::y();
        let e2 = tangent.cross(&e1);
        for k in 0..n_around {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n_around as f64;
            points.push(center + (e1 * th.cos() + e2 * th.sin()) * radius);
        }
    }
    points
}

/// Length of each centerline ramp, mm; 14 mm keeps the ramp curvature of a
/// 2.5 mm rise comfortably under the 0.05/mm bound.
pub(crate) const RAMP_LENGTH_MM: f64 = 14.0;

/// Ramp-plateau-ramp height profile with smooth sin^2 ramps.
pub(crate) fn canal_height(x: f64, length: f64, amplitude: f64, ramp: f64) -> f64 {
    if amplitude == 0.0 {
        return 0.0;
    }
    let x = x.clamp(0.0, length);
    if x < ramp {
        let t = x * std::f64::consts::FRAC_PI_2 / ramp;
        amplitude * t.sin() * t.sin()
    } else if x > length - ramp {
        let t = (length - x) * std::f64::consts::FRAC_PI_2 / ramp;
        amplitude * t.sin() * t.sin()
    } else {
        amplitude
    }
}

/// Dense surface sample of a cylinder between two axis points.
#[allow(dead_code)]
fn cylinder_surface(a: Vector3<f64>, b: Vector3<f64>, radius: f64) -> Vec<Vector3<f64>> {
    let axis = b - a;
    let len = axis.norm();
    let dir = Unit::new_normalize(axis);
    let n_rings = (len / SURFACE_SPACING).ceil() as usize + 1;
    let n_around = ((2.0 * std::f64::consts::PI * radius) / SURFACE_SPACING).ceil() as usize;
    let e1 = crate::se3::orthogonal_tiebreak(&dir).into_inner();
    let e2 = dir.cross(&e1);
    let mut points = Vec::with_capacity(n_rings * n_around);
    for i in 0..n_rings {
        let x = a + dir.into_inner() * (len * i as f64 / (n_rings - 1).max(1) as f64);
        for k in 0..n_around {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n_around as f64;
            points.push(x + (e1 * th.cos() + e2 * th.sin()) * radius);
        }
    }
    points
}

/// Tube around a jittered polyline running along y through `center`.
fn jittered_tube(
    center: Vector3<f64>,
    half_len: f64,
    radius: f64,
    scale: f64,
    jitter: &mut impl FnMut(f64) -> Vector3<f64>,
) -> Vec<Vector3<f64>> {
    // Control points every ~4 mm, jittered orthogonally to the tube axis.
    let n_ctrl = ((2.0 * half_len) / 4.0).ceil() as usize + 1;
    let mut ctrl = Vec::with_capacity(n_ctrl);
    for i in 0..n_ctrl {
        let y = -half_len + 2.0 * half_len * i as f64 / (n_ctrl - 1) as f64;
        let mut j = jitter(scale);
        j.y = 0.0;
        ctrl.push(center + Vector3::new(0.0, y, 0.0) + j);
    }
    // Surface rings along the interpolated centerline.
    let mut points = Vec::new();
    let per_seg = (4.0 / SURFACE_SPACING).ceil() as usize;
    let n_around = ((2.0 * std::f64::consts::PI * radius) / SURFACE_SPACING).ceil() as usize;
    for w in ctrl.windows(2) {
        let seg = w[1] - w[0];
        let dir = Unit::new_normalize(seg);
        let e1 = crate::se3::orthogonal_tiebreak(&dir).into_inner();
        let e2 = dir.cross(&e1);
        for i in 0..per_seg {
            let x = w[0] + seg * (i as f64 / per_seg as f64);
            for k in 0..n_around {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n_around as f64;
                points.push(x + (e1 * th.cos() + e2 * th.sin()) * radius);
            }
        }
    }
    points
}

/// Fibonacci-lattice sphere surface sample.
fn sphere_surface(center: Vector3<f64>, radius: f64) -> Vec<Vector3<f64>> {
    let area = 4.0 * std::f64::consts::PI * radius * radius;
    let n = (area / (SURFACE_SPACING * SURFACE_SPACING)).ceil() as usize;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            center + Vector3::new(r * th.cos(), r * th.sin(), z) * radius
        })
        .collect()
}

/// Solid disk of points in the plane x = center.x (a sealing plug).
fn disk_surface(center: Vector3<f64>, radius: f64) -> Vec<Vector3<f64>> {
    let mut points = Vec::new();
    let n_r = (radius / SURFACE_SPACING).ceil() as usize;
    points.push(center);
    for ir in 1..=n_r {
        let r = radius * ir as f64 / n_r as f64;
        let n_around = ((2.0 * std::f64::consts::PI * r) / SURFACE_SPACING).ceil() as usize;
        for k in 0..n_around {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n_around as f64;
            points.push(center + Vector3::new(0.0, r * th.cos(), r * th.sin()));
        }
    }
    points
}

// ---------------------------------------------------------------------------
// Path export
// ---------------------------------------------------------------------------

/// Writes the trajectory as a CSV polyline sampled every 0.1 mm:
/// `t,x,y,z,qa,qb,qc,qd` with `t` in [0, 1] and scalar-first quaternions.
pub fn export_path_csv(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "t,x,y,z,qa,qb,qc,qd")?;
    let len = traj.length().max(1e-12);
    for (s, pose) in traj.stations(EVAL_STEP_MM) {
        let q = pose.orientation.quaternion();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s / len,
            pose.position.x,
            pose.position.y,
            pose.position.z,
            q.w,
            q.i,
            q.j,
            q.k
        )?;
    }
    Ok(())
}

/// Writes the trajectory centerline as an ASCII PLY point cloud.
pub fn export_path_ply(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let stations = traj.stations(EVAL_STEP_MM);
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {}", stations.len())?;
    writeln!(out, "property float x")?;
    writeln!(out, "property float y")?;
    writeln!(out, "property float z")?;
    writeln!(out, "end_header")?;
    for (_, pose) in stations {
        writeln!(
            out,
            "{} {} {}",
            pose.position.x as f32, pose.position.y as f32, pose.position.z as f32
        )?;
    }
    Ok(())
}

/// Writes all obstacle points of a scene as an ASCII PLY cloud (viewer aid).
pub fn export_scene_ply(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    let total = scene.obstacles.total_points();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {total}")?;
    writeln!(out, "property float x")?;
    writeln!(out, "property float y")?;
    writeln!(out, "property float z")?;
    writeln!(out, "end_header")?;
    for s in scene.obstacles.structures() {
        for p in &s.points {
            writeln!(out, "{} {} {}", p.x as f32, p.y as f32, p.z as f32)?;
        }
    }
    Ok(())
}

/// Reads a path CSV back as (t, pose) rows.
pub fn import_path_csv(path: impl AsRef<Path>) -> Result<Vec<(f64, Pose)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line.trim() != "t,x,y,z,qa,qb,qc,qd" {
                return Err(Error::PathFile {
                    path: path.display().to_string(),
                    reason: format!("unexpected header `{line}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::PathFile {
                path: path.display().to_string(),
                reason: format!("line {}: {e}", lineno + 1),
            })?;
        if fields.len() != 8 {
            return Err(Error::PathFile {
                path: path.display().to_string(),
                reason: format!("line {}: expected 8 fields, got {}", lineno + 1, fields.len()),
            });
        }
        let q = UnitQuaternion::new_normalize(Quaternion::new(
            fields[4], fields[5], fields[6], fields[7],
        ));
        rows.push((
            fields[0],
            Pose::new(Vector3::new(fields[1], fields[2], fields[3]), q),
        ));
    }
    if rows.is_empty() {
        return Err(Error::PathFile {
            path: path.display().to_string(),
            reason: "no data rows".into(),
        });
    }
    Ok(rows)
}
