//! Obstacle geometry, the kd-tree spatial index and clearance queries.
//!
//! Risk structures are dense surface point samples. Collision and clearance
//! are distance thresholds against those points: a centerline sample is
//! clear when its nearest obstacle point is farther than `r_d + d_max`.
//! The swept-tube metric additionally samples a circle of radius `r_d`
//! around each centerline pose and reports the worst surface distance.

use crate::error::{Error, Result};
use crate::trajectory::{segment_points, Segment, Trajectory};
use nalgebra::Vector3;

/// Evaluation resolution along paths, in millimeters. Planning-time
/// collision checks and reported metrics use the same default so that what
/// is planned is exactly what is measured.
pub const EVAL_STEP_MM: f64 = 0.1;

/// Default number of circle samples for the swept-tube clearance metric.
pub const DEFAULT_CIRCLE_SAMPLES: usize = 16;

/// One named risk structure as a surface point sample.
#[derive(Clone, Debug)]
pub struct Structure {
    pub name: String,
    pub points: Vec<Vector3<f64>>,
}

/// All risk structures of a scene.
#[derive(Clone, Debug)]
pub struct ObstacleSet {
    structures: Vec<Structure>,
}

impl ObstacleSet {
    /// Validates that there is at least one structure, every structure is
    /// non-empty, and all coordinates are finite.
    pub fn new(structures: Vec<Structure>) -> Result<Self> {
        if structures.is_empty() {
            return Err(Error::NoObstacles);
        }
        for s in &structures {
            if s.points.is_empty() {
                return Err(Error::InvalidParameter {
                    name: "structure.points",
                    reason: format!("structure `{}` has no points", s.name),
                });
            }
            if s.points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
                return Err(Error::InvalidParameter {
                    name: "structure.points",
                    reason: format!("structure `{}` contains non-finite points", s.name),
                });
            }
        }
        Ok(ObstacleSet { structures })
    }

    pub fn structures(&self) -> &[Structure] {
        &self.structures
    }

    pub fn total_points(&self) -> usize {
        self.structures.iter().map(|s| s.points.len()).sum()
    }
}

/// Result of a nearest-obstacle query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NearestHit {
    pub distance: f64,
    /// Index of the structure owning the nearest point.
    pub structure: usize,
    /// Global point index (enumeration order over structures, then points).
    pub point: usize,
}

/// Immutable kd-tree over the union of all obstacle points, each point
/// tagged with its structure. Queries are read-only and safe to run from
/// any number of threads.
///
/// Nearest queries break distance ties by the lowest global point index
/// (and therefore by the lowest structure index), exactly like a linear
/// scan in input order.
#[derive(Clone, Debug)]
pub struct SpatialIndex {
    points: Vec<Vector3<f64>>,
    /// Original global index per tree slot.
    order: Vec<u32>,
    /// Split dimension per tree slot (leaf ranges unused).
    dims: Vec<u8>,
    /// Structure tag per original global index.
    tags: Vec<u32>,
    names: Vec<String>,
}

const LEAF_SIZE: usize = 8;

/// Builds the spatial index. Deterministic for a fixed input order.
pub fn build_index(obs: &ObstacleSet) -> Result<SpatialIndex> {
    if obs.structures().is_empty() {
        return Err(Error::NoObstacles);
    }
    let mut points = Vec::with_capacity(obs.total_points());
    let mut tags = Vec::with_capacity(obs.total_points());
    for (si, s) in obs.structures().iter().enumerate() {
        for p in &s.points {
            points.push(*p);
            tags.push(si as u32);
        }
    }
    let mut order: Vec<u32> = (0..points.len() as u32).collect();
    let mut dims = vec![0u8; points.len()];
    build_recursive(&points, &mut order, &mut dims, 0);
    let tree_points: Vec<Vector3<f64>> = order.iter().map(|&i| points[i as usize]).collect();
    Ok(SpatialIndex {
        points: tree_points,
        order,
        dims,
        tags,
        names: obs.structures().iter().map(|s| s.name.clone()).collect(),
    })
}

/// Median-split build over `order`; the middle slot becomes the node and
/// `dims[offset + mid]` records its split dimension. The comparator totally
/// orders points by (coordinate, global index), making the tree independent
/// of the selection algorithm's internal ordering.
fn build_recursive(points: &[Vector3<f64>], order: &mut [u32], dims: &mut [u8], _depth: usize) {
    let n = order.len();
    if n <= LEAF_SIZE {
        return;
    }
    let dim = widest_dimension(points, order);
    let mid = n / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        let ca = points[a as usize][dim];
        let cb = points[b as usize][dim];
        ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
    });
    dims[mid] = dim as u8;
    let (left_o, rest_o) = order.split_at_mut(mid);
    let (_, right_o) = rest_o.split_first_mut().unwrap();
    let (left_d, rest_d) = dims.split_at_mut(mid);
    let (_, right_d) = rest_d.split_first_mut().unwrap();
    build_recursive(points, left_o, left_d, 0);
    build_recursive(points, right_o, right_d, 0);
}

fn widest_dimension(points: &[Vector3<f64>], order: &[u32]) -> usize {
    let mut min = Vector3::repeat(f64::INFINITY);
    let mut max = Vector3::repeat(f64::NEG_INFINITY);
    for &i in order {
        let p = &points[i as usize];
        for d in 0..3 {
            min[d] = min[d].min(p[d]);
            max[d] = max[d].max(p[d]);
        }
    }
    let spread = max - min;
    let mut dim = 0;
    for d in 1..3 {
        if spread[d] > spread[dim] {
            dim = d;
        }
    }
    dim
}

impl SpatialIndex {
    /// Nearest obstacle point with tie-break by lowest global index.
    pub fn nearest(&self, p: &Vector3<f64>) -> NearestHit {
        debug_assert!(!self.points.is_empty());
        let mut best = (f64::INFINITY, u32::MAX);
        self.nearest_rec(p, 0, self.points.len(), &mut best);
        let point = best.1 as usize;
        NearestHit {
            distance: best.0.sqrt(),
            structure: self.tags[point] as usize,
            point,
        }
    }

    /// True when some obstacle point lies within `radius` (inclusive) of
    /// `p`. Early-exits on the first hit; much cheaper than a full nearest
    /// query in wide-open regions.
    pub fn any_within(&self, p: &Vector3<f64>, radius: f64) -> bool {
        self.any_within_rec(p, 0, self.points.len(), radius * radius)
    }

    pub fn structure_name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn structure_names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn nearest_rec(&self, q: &Vector3<f64>, lo: usize, hi: usize, best: &mut (f64, u32)) {
        if hi - lo <= LEAF_SIZE {
            for i in lo..hi {
                self.consider(q, i, best);
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        self.consider(q, mid, best);
        let dim = self.dims[mid] as usize;
        let delta = q[dim] - self.points[mid][dim];
        let (near, far) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.nearest_rec(q, near.0, near.1, best);
        // Equal plane distances must still be visited so index tie-breaks
        // match a linear scan exactly.
        if delta * delta <= best.0 {
            self.nearest_rec(q, far.0, far.1, best);
        }
    }

    #[inline]
    fn consider(&self, q: &Vector3<f64>, slot: usize, best: &mut (f64, u32)) {
        let d2 = (self.points[slot] - q).norm_squared();
        let idx = self.order[slot];
        if d2 < best.0 || (d2 == best.0 && idx < best.1) {
            *best = (d2, idx);
        }
    }

    fn any_within_rec(&self, q: &Vector3<f64>, lo: usize, hi: usize, r2: f64) -> bool {
        if hi - lo <= LEAF_SIZE {
            return self.points[lo..hi]
                .iter()
                .any(|p| (p - q).norm_squared() <= r2);
        }
        let mid = lo + (hi - lo) / 2;
        if (self.points[mid] - q).norm_squared() <= r2 {
            return true;
        }
        let dim = self.dims[mid] as usize;
        let delta = q[dim] - self.points[mid][dim];
        let (near, far) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        if self.any_within_rec(q, near.0, near.1, r2) {
            return true;
        }
        if delta * delta <= r2 {
            return self.any_within_rec(q, far.0, far.1, r2);
        }
        false
    }
}

/// Euclidean distance from `p` to the nearest obstacle point, plus the name
/// of the structure that owns it.
pub fn min_distance<'a>(idx: &'a SpatialIndex, p: &Vector3<f64>) -> (f64, &'a str) {
    let hit = idx.nearest(p);
    (hit.distance, idx.structure_name(hit.structure))
}

/// True iff every centerline sample of `seg` (spaced `step` mm, endpoints
/// included) keeps a distance strictly greater than `r_d + d_max` to all
/// obstacle points. A zero-length segment degenerates to a single-point
/// check.
pub fn segment_clear(idx: &SpatialIndex, seg: &Segment, r_d: f64, d_max: f64, step: f64) -> bool {
    assert!(step > 0.0, "sampling step must be positive");
    let threshold = r_d + d_max;
    if seg.length() <= 1e-12 {
        return !idx.any_within(&seg.start_pose().position, threshold);
    }
    for p in segment_points(seg, step) {
        if idx.any_within(&p, threshold) {
            return false;
        }
    }
    true
}

/// Clearance summary of a whole trajectory.
#[derive(Clone, Debug)]
pub struct ClearanceReport {
    /// Minimum obstacle distance over all sampled surface points, mm.
    pub min_distance: f64,
    /// Structure realizing the minimum.
    pub nearest_structure: String,
    /// Where along the trajectory the minimum occurred, in [0, 1].
    pub location_t: f64,
}

/// Swept-tube clearance at the default 0.1 mm resolution.
///
/// At every centerline pose, `n_circle` points on the circle of radius
/// `r_d` orthogonal to the local tangent are tested, along with the
/// centerline point itself (so the report can never exceed a
/// centerline-only scan). With `r_d = 0` this reduces to the centerline
/// minimum distance.
pub fn path_clearance(
    idx: &SpatialIndex,
    traj: &Trajectory,
    r_d: f64,
    n_circle: usize,
) -> ClearanceReport {
    path_clearance_with_step(idx, traj, r_d, n_circle, EVAL_STEP_MM)
}

/// [`path_clearance`] with an explicit sampling step (finer steps serve as
/// the oracle in tests).
pub fn path_clearance_with_step(
    idx: &SpatialIndex,
    traj: &Trajectory,
    r_d: f64,
    n_circle: usize,
    step: f64,
) -> ClearanceReport {
    let len = traj.length();
    let mut best = NearestHit {
        distance: f64::INFINITY,
        structure: 0,
        point: 0,
    };
    let mut best_s = 0.0;
    for (s, pose) in traj.stations(step) {
        let hit = idx.nearest(&pose.position);
        if hit.distance < best.distance {
            best = hit;
            best_s = s;
        }
        if r_d > 0.0 && n_circle > 0 {
            let x = pose.orientation * Vector3::x();
            let y = pose.orientation * Vector3::y();
            for k in 0..n_circle {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n_circle as f64;
                let sample = pose.position + (x * theta.cos() + y * theta.sin()) * r_d;
                let hit = idx.nearest(&sample);
                if hit.distance < best.distance {
                    best = hit;
                    best_s = s;
                }
            }
        }
    }
    ClearanceReport {
        min_distance: best.distance,
        nearest_structure: idx.structure_name(best.structure).to_string(),
        location_t: if len > 0.0 { best_s / len } else { 0.0 },
    }
}
