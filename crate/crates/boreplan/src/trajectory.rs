//! Curvature-bounded paths as ordered lists of typed segments.
//!
//! A trajectory is a chain of arcs, straight lines and two-spiral cubic
//! Bezier segments. Poses along a trajectory are sampled on demand by arc
//! length; orientations are transported from each segment's start pose
//! (exactly for arcs, by minimal twist for splines).

use crate::se3::{minimal_twist_orientation, Direction, Pose};
use nalgebra::{Unit, UnitQuaternion, Vector3};

/// Geometry of an [`ArcSegment`]: either a straight line (infinite radius)
/// or a circular arc in the plane orthogonal to `axis`.
#[derive(Clone, Copy, Debug)]
pub enum ArcKind {
    Straight {
        length: f64,
    },
    Turn {
        center: Vector3<f64>,
        /// Rotation axis (plane normal), right-handed travel direction.
        axis: Direction,
        /// Subtended angle in radians, > 0.
        angle: f64,
        radius: f64,
    },
}

/// A constant-curvature segment starting at `start` (tangent = local z).
#[derive(Clone, Copy, Debug)]
pub struct ArcSegment {
    pub start: Pose,
    pub kind: ArcKind,
}

impl ArcSegment {
    pub fn straight(start: Pose, length: f64) -> Self {
        ArcSegment {
            start,
            kind: ArcKind::Straight { length },
        }
    }

    pub fn turn(start: Pose, center: Vector3<f64>, axis: Direction, angle: f64, radius: f64) -> Self {
        ArcSegment {
            start,
            kind: ArcKind::Turn {
                center,
                axis,
                angle,
                radius,
            },
        }
    }

    pub fn length(&self) -> f64 {
        match self.kind {
            ArcKind::Straight { length } => length,
            ArcKind::Turn { angle, radius, .. } => angle * radius,
        }
    }

    pub fn curvature(&self) -> f64 {
        match self.kind {
            ArcKind::Straight { .. } => 0.0,
            ArcKind::Turn { radius, .. } => 1.0 / radius,
        }
    }

    pub fn pose_at(&self, s: f64) -> Pose {
        match self.kind {
            ArcKind::Straight { length } => {
                let s = s.clamp(0.0, length);
                let t = self.start.tangent();
                Pose {
                    position: self.start.position + t.into_inner() * s,
                    orientation: self.start.orientation,
                }
            }
            ArcKind::Turn {
                center,
                axis,
                angle,
                radius,
            } => {
                let phi = (s / radius).clamp(0.0, angle);
                let rot = UnitQuaternion::from_axis_angle(&axis, phi);
                Pose {
                    position: center + rot * (self.start.position - center),
                    orientation: rot * self.start.orientation,
                }
            }
        }
    }

    pub fn end_pose(&self) -> Pose {
        self.pose_at(self.length())
    }

    pub fn reversed(&self) -> Self {
        let start = self.end_pose().reversed();
        match self.kind {
            ArcKind::Straight { length } => ArcSegment::straight(start, length),
            ArcKind::Turn {
                center,
                axis,
                angle,
                radius,
            } => ArcSegment::turn(
                start,
                center,
                Unit::new_normalize(-axis.into_inner()),
                angle,
                radius,
            ),
        }
    }
}

/// Two cubic Bezier spirals sharing a junction (`control[3] == control[4]`).
///
/// Each cubic has monotone curvature rising from zero at its outer end to
/// the shared maximum at the junction, which makes chains of these segments
/// curvature-continuous at every weld.
#[derive(Clone, Copy, Debug)]
pub struct SplineSegment {
    pub start: Pose,
    pub control: [Vector3<f64>; 8],
    length_first: f64,
    length_second: f64,
}

/// Abscissas/weights of 5-point Gauss-Legendre quadrature on [0, 1].
const GAUSS_X: [f64; 5] = [
    0.046910077030668,
    0.230765344947158,
    0.5,
    0.769234655052842,
    0.953089922969332,
];
const GAUSS_W: [f64; 5] = [
    0.118463442528095,
    0.239314335249683,
    0.284444444444444,
    0.239314335249683,
    0.118463442528095,
];

fn cubic_point(p: &[Vector3<f64>; 4], t: f64) -> Vector3<f64> {
    let u = 1.0 - t;
    p[0] * (u * u * u)
        + p[1] * (3.0 * u * u * t)
        + p[2] * (3.0 * u * t * t)
        + p[3] * (t * t * t)
}

fn cubic_deriv(p: &[Vector3<f64>; 4], t: f64) -> Vector3<f64> {
    let u = 1.0 - t;
    (p[1] - p[0]) * (3.0 * u * u)
        + (p[2] - p[1]) * (6.0 * u * t)
        + (p[3] - p[2]) * (3.0 * t * t)
}

fn cubic_second_deriv(p: &[Vector3<f64>; 4], t: f64) -> Vector3<f64> {
    let u = 1.0 - t;
    (p[2] - p[1] * 2.0 + p[0]) * (6.0 * u) + (p[3] - p[2] * 2.0 + p[1]) * (6.0 * t)
}

/// Analytic curvature |B' x B''| / |B'|^3 of a cubic at parameter `t`.
pub fn cubic_curvature(p: &[Vector3<f64>; 4], t: f64) -> f64 {
    let d1 = cubic_deriv(p, t);
    let d2 = cubic_second_deriv(p, t);
    let speed = d1.norm();
    if speed < 1e-12 {
        return 0.0;
    }
    d1.cross(&d2).norm() / (speed * speed * speed)
}

/// Arc length of a cubic over [0, t1] by composite Gauss-Legendre.
fn cubic_arclen(p: &[Vector3<f64>; 4], t1: f64, intervals: usize) -> f64 {
    let mut total = 0.0;
    let h = t1 / intervals as f64;
    for i in 0..intervals {
        let a = i as f64 * h;
        for (x, w) in GAUSS_X.iter().zip(GAUSS_W.iter()) {
            total += w * cubic_deriv(p, a + x * h).norm();
        }
    }
    total * h
}

impl SplineSegment {
    /// Builds the segment, computing both cubics' arc lengths by quadrature.
    pub fn new(start: Pose, control: [Vector3<f64>; 8]) -> Self {
        let first = [control[0], control[1], control[2], control[3]];
        let second = [control[4], control[5], control[6], control[7]];
        SplineSegment {
            start,
            control,
            length_first: cubic_arclen(&first, 1.0, 16),
            length_second: cubic_arclen(&second, 1.0, 16),
        }
    }

    pub fn length(&self) -> f64 {
        self.length_first + self.length_second
    }

    fn first(&self) -> [Vector3<f64>; 4] {
        [
            self.control[0],
            self.control[1],
            self.control[2],
            self.control[3],
        ]
    }

    fn second(&self) -> [Vector3<f64>; 4] {
        [
            self.control[4],
            self.control[5],
            self.control[6],
            self.control[7],
        ]
    }

    /// Maps arc length to (cubic index, parameter t).
    fn param_at(&self, s: f64) -> (usize, f64) {
        if s <= 0.0 {
            return (0, 0.0);
        }
        if s >= self.length() {
            return (1, 1.0);
        }
        if s <= self.length_first {
            (0, invert_arclen(&self.first(), s, self.length_first))
        } else {
            (
                1,
                invert_arclen(&self.second(), s - self.length_first, self.length_second),
            )
        }
    }

    pub fn point_at(&self, s: f64) -> Vector3<f64> {
        let (idx, t) = self.param_at(s);
        let cp = if idx == 0 { self.first() } else { self.second() };
        cubic_point(&cp, t)
    }

    pub fn tangent_at(&self, s: f64) -> Direction {
        let (idx, t) = self.param_at(s);
        let cp = if idx == 0 { self.first() } else { self.second() };
        let d = cubic_deriv(&cp, t);
        if d.norm() > 1e-12 {
            Unit::new_normalize(d)
        } else {
            // Degenerate (all control points coincident): keep the start
            // tangent.
            self.start.tangent()
        }
    }

    pub fn pose_at(&self, s: f64) -> Pose {
        let position = self.point_at(s);
        let tangent = self.tangent_at(s);
        Pose {
            position,
            orientation: minimal_twist_orientation(&tangent, &self.start.orientation),
        }
    }

    pub fn end_pose(&self) -> Pose {
        let tangent = self.tangent_at(self.length());
        Pose {
            position: self.control[7],
            orientation: minimal_twist_orientation(&tangent, &self.start.orientation),
        }
    }

    /// Analytic curvature at arc length `s`.
    pub fn curvature_at(&self, s: f64) -> f64 {
        let (idx, t) = self.param_at(s);
        let cp = if idx == 0 { self.first() } else { self.second() };
        cubic_curvature(&cp, t)
    }

    pub fn reversed(&self) -> Self {
        let start = self.end_pose().reversed();
        let c = &self.control;
        let control = [c[7], c[6], c[5], c[4], c[3], c[2], c[1], c[0]];
        SplineSegment {
            start,
            control,
            length_first: self.length_second,
            length_second: self.length_first,
        }
    }
}

/// Invert the arc-length function of one cubic: find t with len(0..t) = s.
fn invert_arclen(p: &[Vector3<f64>; 4], s: f64, total: f64) -> f64 {
    if total <= 1e-12 {
        return 0.0;
    }
    // Bisection on the monotone arc-length function, then Newton polish.
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut t = (s / total).clamp(0.0, 1.0);
    for _ in 0..24 {
        let len = cubic_arclen(p, t, 8);
        if (len - s).abs() < 1e-10 {
            break;
        }
        if len < s {
            lo = t;
        } else {
            hi = t;
        }
        let speed = cubic_deriv(p, t).norm();
        let newton = if speed > 1e-9 {
            t - (len - s) / speed
        } else {
            f64::NAN
        };
        t = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    t
}

/// Arc-length lookup for one cubic: cumulative lengths over a uniform
/// parameter grid, inverted by table walk. Sampled points remain exactly on
/// the curve; only their spacing carries the (sub-0.1%) interpolation error.
struct CubicTable {
    cum: [f64; CUBIC_TABLE_N + 1],
}

const CUBIC_TABLE_N: usize = 64;

impl CubicTable {
    fn new(p: &[Vector3<f64>; 4]) -> Self {
        let mut cum = [0.0; CUBIC_TABLE_N + 1];
        let h = 1.0 / CUBIC_TABLE_N as f64;
        let mut acc = 0.0;
        for i in 0..CUBIC_TABLE_N {
            let a = i as f64 * h;
            let mut seg = 0.0;
            for (x, w) in GAUSS_X.iter().zip(GAUSS_W.iter()) {
                seg += w * cubic_deriv(p, a + x * h).norm();
            }
            acc += seg * h;
            cum[i + 1] = acc;
        }
        CubicTable { cum }
    }

    fn total(&self) -> f64 {
        self.cum[CUBIC_TABLE_N]
    }

    fn t_at(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= self.total() {
            return 1.0;
        }
        let i = match self
            .cum
            .binary_search_by(|c| c.partial_cmp(&s).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let i = i.min(CUBIC_TABLE_N - 1);
        let span = self.cum[i + 1] - self.cum[i];
        let frac = if span > 1e-15 {
            (s - self.cum[i]) / span
        } else {
            0.0
        };
        (i as f64 + frac) / CUBIC_TABLE_N as f64
    }
}

/// Amortized sampler for one segment; build once, query many times.
pub enum SegmentSampler<'a> {
    Arc(&'a ArcSegment),
    Spline {
        seg: &'a SplineSegment,
        first: CubicTableRef,
        second: CubicTableRef,
    },
}

pub struct CubicTableRef {
    control: [Vector3<f64>; 4],
    table: CubicTable,
}

impl<'a> SegmentSampler<'a> {
    pub fn new(segment: &'a Segment) -> Self {
        match segment {
            Segment::Arc(a) => SegmentSampler::Arc(a),
            Segment::Spline(s) => {
                let first = s.first();
                let second = s.second();
                SegmentSampler::Spline {
                    seg: s,
                    first: CubicTableRef {
                        table: CubicTable::new(&first),
                        control: first,
                    },
                    second: CubicTableRef {
                        table: CubicTable::new(&second),
                        control: second,
                    },
                }
            }
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            SegmentSampler::Arc(a) => a.length(),
            SegmentSampler::Spline { first, second, .. } => {
                first.table.total() + second.table.total()
            }
        }
    }

    pub fn point_at(&self, s: f64) -> Vector3<f64> {
        match self {
            SegmentSampler::Arc(a) => a.pose_at(s).position,
            SegmentSampler::Spline { first, second, .. } => {
                let l1 = first.table.total();
                if s <= l1 {
                    cubic_point(&first.control, first.table.t_at(s))
                } else {
                    cubic_point(&second.control, second.table.t_at(s - l1))
                }
            }
        }
    }

    pub fn pose_at(&self, s: f64) -> Pose {
        match self {
            SegmentSampler::Arc(a) => a.pose_at(s),
            SegmentSampler::Spline { seg, first, second } => {
                let l1 = first.table.total();
                let (cp, t) = if s <= l1 {
                    (&first.control, first.table.t_at(s))
                } else {
                    (&second.control, second.table.t_at(s - l1))
                };
                let position = cubic_point(cp, t);
                let d = cubic_deriv(cp, t);
                let tangent = if d.norm() > 1e-12 {
                    Unit::new_normalize(d)
                } else {
                    seg.start.tangent()
                };
                Pose {
                    position,
                    orientation: minimal_twist_orientation(&tangent, &seg.start.orientation),
                }
            }
        }
    }
}

/// Positions every `step` mm along one segment, both endpoints included.
pub fn segment_points(segment: &Segment, step: f64) -> Vec<Vector3<f64>> {
    assert!(step > 0.0);
    let sampler = SegmentSampler::new(segment);
    let len = sampler.length();
    let n = (len / step).floor() as usize;
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..=n {
        out.push(sampler.point_at(i as f64 * step));
    }
    if len - n as f64 * step > 1e-9 {
        out.push(sampler.point_at(len));
    }
    out
}

/// One typed piece of a trajectory.
#[derive(Clone, Debug)]
pub enum Segment {
    Arc(ArcSegment),
    Spline(SplineSegment),
}

impl Segment {
    pub fn length(&self) -> f64 {
        match self {
            Segment::Arc(a) => a.length(),
            Segment::Spline(s) => s.length(),
        }
    }

    pub fn start_pose(&self) -> Pose {
        match self {
            Segment::Arc(a) => a.start,
            Segment::Spline(s) => s.start,
        }
    }

    pub fn pose_at(&self, s: f64) -> Pose {
        match self {
            Segment::Arc(a) => a.pose_at(s),
            Segment::Spline(sp) => sp.pose_at(s),
        }
    }

    pub fn point_at(&self, s: f64) -> Vector3<f64> {
        match self {
            Segment::Arc(a) => a.pose_at(s).position,
            Segment::Spline(sp) => sp.point_at(s),
        }
    }

    pub fn end_pose(&self) -> Pose {
        match self {
            Segment::Arc(a) => a.end_pose(),
            Segment::Spline(s) => s.end_pose(),
        }
    }

    pub fn reversed(&self) -> Segment {
        match self {
            Segment::Arc(a) => Segment::Arc(a.reversed()),
            Segment::Spline(s) => Segment::Spline(s.reversed()),
        }
    }
}

/// An ordered, G1-chained list of segments with poses sampled on demand.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    segments: Vec<Segment>,
    cum: Vec<f64>,
}

impl Trajectory {
    pub fn from_segments(segments: Vec<Segment>) -> Self {
        let mut cum = Vec::with_capacity(segments.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for seg in &segments {
            acc += seg.length();
            cum.push(acc);
        }
        Trajectory { segments, cum }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }

    pub fn start_pose(&self) -> Option<Pose> {
        self.segments.first().map(|s| s.start_pose())
    }

    pub fn end_pose(&self) -> Option<Pose> {
        // Skip trailing zero-length segments so the tangent is well defined.
        self.segments
            .iter()
            .rev()
            .find(|s| s.length() > 1e-12)
            .map(|s| s.end_pose())
            .or_else(|| self.segments.last().map(|s| s.end_pose()))
    }

    /// Pose at arc length `s` from the start, clamped to the path.
    pub fn pose_at(&self, s: f64) -> Option<Pose> {
        if self.segments.is_empty() {
            return None;
        }
        let s = s.clamp(0.0, self.length());
        // Find the segment containing s; prefer non-empty segments.
        let mut idx = match self.cum.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        idx = idx.min(self.segments.len() - 1);
        while idx + 1 < self.segments.len() && self.segments[idx].length() <= 1e-12 {
            idx += 1;
        }
        Some(self.segments[idx].pose_at(s - self.cum[idx]))
    }

    /// Poses sampled every `step` millimeters of arc length, both endpoints
    /// included. Builds one amortized sampler per segment, so the cost per
    /// station is O(1).
    pub fn stations(&self, step: f64) -> Vec<(f64, Pose)> {
        assert!(step > 0.0, "station step must be positive");
        let len = self.length();
        if self.segments.is_empty() {
            return Vec::new();
        }
        let n = (len / step).floor() as usize;
        let mut targets: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
        if len - n as f64 * step > 1e-9 {
            targets.push(len);
        }
        let mut out = Vec::with_capacity(targets.len());
        let mut seg_idx = 0usize;
        let mut sampler = SegmentSampler::new(&self.segments[0]);
        for s in targets {
            while seg_idx + 1 < self.segments.len()
                && (s > self.cum[seg_idx + 1] || self.segments[seg_idx].length() <= 1e-12)
            {
                seg_idx += 1;
                sampler = SegmentSampler::new(&self.segments[seg_idx]);
            }
            out.push((s, sampler.pose_at(s - self.cum[seg_idx])));
        }
        out
    }

    pub fn reversed(&self) -> Trajectory {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| s.reversed())
            .collect::<Vec<_>>();
        Trajectory::from_segments(segments)
    }

    /// Appends the segments of `other` after this trajectory's segments.
    pub fn extend(&mut self, other: &Trajectory) {
        for seg in &other.segments {
            self.push(seg.clone());
        }
    }

    pub fn push(&mut self, seg: Segment) {
        let acc = self.length() + seg.length();
        self.segments.push(seg);
        self.cum.push(acc);
    }

    /// Maximum three-point circumradius curvature estimate over points
    /// sampled every `step` millimeters along the whole path, windows
    /// spanning segment junctions included.
    pub fn max_discrete_curvature(&self, step: f64) -> f64 {
        let stations = self.stations(step);
        max_circumradius_curvature(stations.iter().map(|(_, p)| p.position))
    }
}

/// Curvature of the circle through each consecutive point triplet; returns
/// the maximum (zero for fewer than three points).
pub fn max_circumradius_curvature(points: impl Iterator<Item = Vector3<f64>>) -> f64 {
    let pts: Vec<Vector3<f64>> = points.collect();
    let mut max_k: f64 = 0.0;
    for w in pts.windows(3) {
        max_k = max_k.max(circumradius_curvature(&w[0], &w[1], &w[2]));
    }
    max_k
}

/// 1 / circumradius of the triangle (a, b, c); zero when collinear.
pub fn circumradius_curvature(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let bc = c - b;
    let ca = a - c;
    let denom = ab.norm() * bc.norm() * ca.norm();
    if denom < 1e-30 {
        return 0.0;
    }
    2.0 * ab.cross(&bc).norm() / denom
}
