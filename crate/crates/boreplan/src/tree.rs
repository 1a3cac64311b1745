//! Search trees: rooted pose trees with parent links, incoming segments and
//! an incremental spatial index for nearest-neighbor and ball queries.
//!
//! Goal-side trees grow backward: their stored poses face outward (the
//! growth direction) and [`SearchTree::forward_pose`] flips them into path
//! direction. Reversal at weld time is exact because arcs and splines are
//! curvature-symmetric under traversal reversal.

use crate::se3::{minimal_twist_orientation, pose_distance, quat_distance, MetricConfig, Pose};
use crate::trajectory::Segment;
use nalgebra::{Unit, Vector3};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Identifier of a node within one tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

/// Which region a tree is rooted in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeSide {
    Initial,
    Goal,
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub pose: Pose,
    pub parent: Option<NodeId>,
    /// Segment from the parent's pose to this pose; `None` for roots.
    pub segment: Option<Segment>,
}

/// A rooted tree of poses. Multiple roots are allowed (one per initial or
/// goal state); the tree is acyclic by construction since children are only
/// ever appended with an existing parent.
pub struct SearchTree {
    side: TreeSide,
    nodes: Vec<TreeNode>,
    n_roots: usize,
    index: PointForest,
}

impl SearchTree {
    /// Creates a tree with one root per pose. Goal trees receive poses
    /// facing outward (already reversed by the planner).
    pub fn new(side: TreeSide, roots: &[Pose]) -> Self {
        let mut tree = SearchTree {
            side,
            nodes: Vec::new(),
            n_roots: roots.len(),
            index: PointForest::new(),
        };
        for pose in roots {
            tree.nodes.push(TreeNode {
                pose: *pose,
                parent: None,
                segment: None,
            });
            tree.index.insert(pose.position);
        }
        tree
    }

    pub fn side(&self) -> TreeSide {
        self.side
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_roots(&self) -> usize {
        self.n_roots
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id.0 as usize]
    }

    pub fn is_root(&self, id: NodeId) -> bool {
        (id.0 as usize) < self.n_roots
    }

    /// Root poses (the initial or goal states this tree was seeded with).
    pub fn root_poses(&self) -> impl Iterator<Item = &Pose> {
        self.nodes[..self.n_roots].iter().map(|n| &n.pose)
    }

    /// Appends a node grown from `parent` via `segment`; the segment must
    /// start at the parent's pose (G1 chain).
    pub fn add(&mut self, parent: NodeId, segment: Segment, pose: Pose) -> NodeId {
        debug_assert!((parent.0 as usize) < self.nodes.len());
        debug_assert!(
            (segment.start_pose().position - self.node(parent).pose.position).norm() < 1e-9,
            "segment does not start at its parent"
        );
        debug_assert!(
            (segment.end_pose().position - pose.position).norm() < 1e-9
                || segment.length() <= 1e-12,
            "segment does not end at the new pose"
        );
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(TreeNode {
            pose,
            parent: Some(parent),
            segment: Some(segment),
        });
        self.index.insert(pose.position);
        id
    }

    /// The node's pose in path direction: stored pose for initial-side
    /// trees, reversed for goal-side trees.
    pub fn forward_pose(&self, id: NodeId) -> Pose {
        let pose = self.node(id).pose;
        match self.side {
            TreeSide::Initial => pose,
            TreeSide::Goal => pose.reversed(),
        }
    }

    /// Segments from the root to `id` in growth order.
    pub fn path_from_root(&self, id: NodeId) -> Vec<Segment> {
        let mut rev = Vec::new();
        let mut cur = id;
        while let Some(parent) = self.node(cur).parent {
            rev.push(self.node(cur).segment.clone().expect("non-root has segment"));
            cur = parent;
        }
        rev.reverse();
        rev
    }

    /// The `k` nodes minimizing the combined metric to the sampled point,
    /// ties broken by node id. Exactly equal to a brute-force scan.
    pub fn k_nearest(&self, q: &Vector3<f64>, k: usize, metric: &MetricConfig) -> Vec<NodeId> {
        self.index
            .k_nearest(q, k, |id| {
                sample_distance(&self.nodes[id as usize].pose, q, metric)
            })
            .into_iter()
            .map(NodeId)
            .collect()
    }

    /// All nodes within `radius` (inclusive) of `center`, ascending by id.
    pub fn nodes_in_ball(&self, center: &Vector3<f64>, radius: f64) -> Vec<NodeId> {
        self.index
            .in_ball(center, radius)
            .into_iter()
            .map(NodeId)
            .collect()
    }

    /// Debug-build well-formedness check: parent links acyclic and all
    /// segments G1-chained to their parents.
    #[cfg(debug_assertions)]
    pub fn check_well_formed(&self) {
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                assert!((p.0 as usize) < i, "parent must precede child");
                let seg = node.segment.as_ref().expect("non-root segment");
                let parent_pose = &self.nodes[p.0 as usize].pose;
                assert!((seg.start_pose().position - parent_pose.position).norm() < 1e-9);
                let t_seg = seg.start_pose().tangent().into_inner();
                let t_parent = parent_pose.tangent().into_inner();
                assert!((t_seg - t_parent).norm() < 1e-9, "G1 chain violated");
            }
        }
    }
}

/// Combined metric between a tree node's pose and a position-only sample:
/// Euclidean distance plus the weighted quaternion distance between the
/// node's orientation and the minimal-twist orientation facing the sample.
pub fn sample_distance(pose: &Pose, q: &Vector3<f64>, metric: &MetricConfig) -> f64 {
    let delta = q - pose.position;
    let dist = delta.norm();
    if dist < 1e-12 {
        return 0.0;
    }
    let dir = Unit::new_normalize(delta);
    let facing = minimal_twist_orientation(&dir, &pose.orientation);
    let target = Pose {
        position: *q,
        orientation: facing,
    };
    pose_distance(pose, &target, metric)
}

/// Angular part of [`sample_distance`], exposed for diagnostics.
pub fn sample_angle(pose: &Pose, q: &Vector3<f64>) -> f64 {
    let delta = q - pose.position;
    if delta.norm() < 1e-12 {
        return 0.0;
    }
    let dir = Unit::new_normalize(delta);
    let facing = minimal_twist_orientation(&dir, &pose.orientation);
    quat_distance(&pose.orientation, &facing)
}

// ---------------------------------------------------------------------------
// Incremental point index (logarithmic kd-forest).
//
// Points are appended one at a time; completed power-of-two blocks are kd
// trees, the remainder lives in a small linear buffer. Queries visit every
// block plus the buffer, so results are exact.
// ---------------------------------------------------------------------------

const FOREST_BUF: usize = 64;
const FOREST_LEAF: usize = 8;

struct KdBlock {
    /// Point ids in kd layout.
    slots: Vec<u32>,
    dims: Vec<u8>,
}

struct PointForest {
    positions: Vec<Vector3<f64>>,
    levels: Vec<Option<KdBlock>>,
    buffer: Vec<u32>,
}

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    id: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PointForest {
    fn new() -> Self {
        PointForest {
            positions: Vec::new(),
            levels: Vec::new(),
            buffer: Vec::new(),
        }
    }

    fn insert(&mut self, p: Vector3<f64>) {
        let id = self.positions.len() as u32;
        self.positions.push(p);
        self.buffer.push(id);
        if self.buffer.len() >= FOREST_BUF {
            let mut ids: Vec<u32> = self.buffer.drain(..).collect();
            let mut level = 0;
            loop {
                if level == self.levels.len() {
                    self.levels.push(None);
                }
                match self.levels[level].take() {
                    Some(block) => {
                        ids.extend_from_slice(&block.slots);
                        level += 1;
                    }
                    None => {
                        self.levels[level] = Some(self.build_block(ids));
                        break;
                    }
                }
            }
        }
    }

    fn build_block(&self, mut ids: Vec<u32>) -> KdBlock {
        let mut dims = vec![0u8; ids.len()];
        build_kd(&self.positions, &mut ids, &mut dims);
        KdBlock { slots: ids, dims }
    }

    fn k_nearest(&self, q: &Vector3<f64>, k: usize, combined: impl Fn(u32) -> f64) -> Vec<u32> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap: BinaryHeap<HeapItem> = BinaryHeap::with_capacity(k + 1);
        let mut offer = |id: u32, heap: &mut BinaryHeap<HeapItem>| {
            let d = combined(id);
            let item = HeapItem { dist: d, id };
            if heap.len() < k {
                heap.push(item);
            } else if item < *heap.peek().unwrap() {
                heap.pop();
                heap.push(item);
            }
        };
        for &id in &self.buffer {
            offer(id, &mut heap);
        }
        for block in self.levels.iter().flatten() {
            self.knn_block(q, block, 0, block.slots.len(), k, &mut heap, &mut offer);
        }
        let mut out: Vec<HeapItem> = heap.into_vec();
        out.sort_by(|a, b| a.cmp(b));
        out.into_iter().map(|i| i.id).collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn knn_block(
        &self,
        q: &Vector3<f64>,
        block: &KdBlock,
        lo: usize,
        hi: usize,
        k: usize,
        heap: &mut BinaryHeap<HeapItem>,
        offer: &mut impl FnMut(u32, &mut BinaryHeap<HeapItem>),
    ) {
        let bound = |heap: &BinaryHeap<HeapItem>| {
            if heap.len() < k {
                f64::INFINITY
            } else {
                heap.peek().unwrap().dist
            }
        };
        if hi - lo <= FOREST_LEAF {
            for i in lo..hi {
                let id = block.slots[i];
                // The combined metric is lower-bounded by the Euclidean
                // distance; skip points that cannot improve the heap.
                if (self.positions[id as usize] - q).norm() <= bound(heap) {
                    offer(id, heap);
                }
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let id = block.slots[mid];
        if (self.positions[id as usize] - q).norm() <= bound(heap) {
            offer(id, heap);
        }
        let dim = block.dims[mid] as usize;
        let delta = q[dim] - self.positions[id as usize][dim];
        let (near, far) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.knn_block(q, block, near.0, near.1, k, heap, offer);
        if delta.abs() <= bound(heap) {
            self.knn_block(q, block, far.0, far.1, k, heap, offer);
        }
    }

    fn in_ball(&self, q: &Vector3<f64>, radius: f64) -> Vec<u32> {
        let r2 = radius * radius;
        let mut out = Vec::new();
        for &id in &self.buffer {
            if (self.positions[id as usize] - q).norm_squared() <= r2 {
                out.push(id);
            }
        }
        for block in self.levels.iter().flatten() {
            self.ball_block(q, block, 0, block.slots.len(), radius, r2, &mut out);
        }
        out.sort_unstable();
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn ball_block(
        &self,
        q: &Vector3<f64>,
        block: &KdBlock,
        lo: usize,
        hi: usize,
        radius: f64,
        r2: f64,
        out: &mut Vec<u32>,
    ) {
        if hi - lo <= FOREST_LEAF {
            for i in lo..hi {
                let id = block.slots[i];
                if (self.positions[id as usize] - q).norm_squared() <= r2 {
                    out.push(id);
                }
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let id = block.slots[mid];
        if (self.positions[id as usize] - q).norm_squared() <= r2 {
            out.push(id);
        }
        let dim = block.dims[mid] as usize;
        let delta = q[dim] - self.positions[id as usize][dim];
        let (near, far) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.ball_block(q, block, near.0, near.1, radius, r2, out);
        if delta.abs() <= radius {
            self.ball_block(q, block, far.0, far.1, radius, r2, out);
        }
    }
}

/// Median-split kd build over ids, totally ordered by (coordinate, id).
fn build_kd(positions: &[Vector3<f64>], ids: &mut [u32], dims: &mut [u8]) {
    let n = ids.len();
    if n <= FOREST_LEAF {
        return;
    }
    let mut min = Vector3::repeat(f64::INFINITY);
    let mut max = Vector3::repeat(f64::NEG_INFINITY);
    for &i in ids.iter() {
        let p = &positions[i as usize];
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
    let mid = n / 2;
    ids.select_nth_unstable_by(mid, |&a, &b| {
        positions[a as usize][dim]
            .partial_cmp(&positions[b as usize][dim])
            .unwrap()
            .then(a.cmp(&b))
    });
    dims[mid] = dim as u8;
    let (left_i, rest_i) = ids.split_at_mut(mid);
    let (_, right_i) = rest_i.split_first_mut().unwrap();
    let (left_d, rest_d) = dims.split_at_mut(mid);
    let (_, right_d) = rest_d.split_first_mut().unwrap();
    build_kd(positions, left_i, left_d);
    build_kd(positions, right_i, right_d);
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Unit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> SearchTree {
        let root = Pose::from_position_dir(Vector3::zeros(), Unit::new_normalize(Vector3::x()));
        let mut tree = SearchTree::new(TreeSide::Initial, &[root]);
        for _ in 0..n {
            let parent = NodeId(rng.random_range(0..tree.len() as u32));
            let parent_pose = tree.node(parent).pose;
            let pose = Pose::from_position_dir(
                parent_pose.position
                    + Vector3::new(
                        rng.random_range(-3.0..3.0),
                        rng.random_range(-3.0..3.0),
                        rng.random_range(-3.0..3.0),
                    ),
                Unit::new_normalize(Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )),
            );
            // Test-only: a straight stand-in segment (ends may not coincide
            // with the pose; the index only cares about positions).
            let seg = Segment::Arc(crate::trajectory::ArcSegment::straight(parent_pose, 0.0));
            let id = NodeId(tree.nodes.len() as u32);
            tree.nodes.push(TreeNode {
                pose,
                parent: Some(parent),
                segment: Some(seg),
            });
            tree.index.insert(pose.position);
            let _ = id;
        }
        tree
    }

    #[test]
    fn k_nearest_matches_brute_force_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let metric = MetricConfig::default();
        let tree = random_tree(&mut rng, 1500);
        for _ in 0..200 {
            let q = Vector3::new(
                rng.random_range(-15.0..15.0),
                rng.random_range(-15.0..15.0),
                rng.random_range(-15.0..15.0),
            );
            for k in [1usize, 5, 17] {
                let got = tree.k_nearest(&q, k, &metric);
                let mut brute: Vec<(f64, u32)> = (0..tree.len() as u32)
                    .map(|i| {
                        (
                            sample_distance(&tree.node(NodeId(i)).pose, &q, &metric),
                            i,
                        )
                    })
                    .collect();
                brute.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let expect: Vec<NodeId> =
                    brute.iter().take(k).map(|&(_, i)| NodeId(i)).collect();
                assert_eq!(got, expect);
            }
        }
    }

    #[test]
    fn k_larger_than_tree_returns_all() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let metric = MetricConfig::default();
        let tree = random_tree(&mut rng, 10);
        let got = tree.k_nearest(&Vector3::zeros(), 100, &metric);
        assert_eq!(got.len(), tree.len());
    }

    #[test]
    fn single_node_tree_returns_that_node() {
        let root = Pose::identity();
        let tree = SearchTree::new(TreeSide::Initial, &[root]);
        let got = tree.k_nearest(&Vector3::new(1.0, 2.0, 3.0), 5, &MetricConfig::default());
        assert_eq!(got, vec![NodeId(0)]);
    }

    #[test]
    fn ball_query_matches_brute_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let tree = random_tree(&mut rng, 2000);
        for _ in 0..100 {
            let q = Vector3::new(
                rng.random_range(-15.0..15.0),
                rng.random_range(-15.0..15.0),
                rng.random_range(-15.0..15.0),
            );
            let r = rng.random_range(0.5..8.0);
            let got = tree.nodes_in_ball(&q, r);
            let expect: Vec<NodeId> = (0..tree.len() as u32)
                .filter(|&i| (tree.node(NodeId(i)).pose.position - q).norm_squared() <= r * r)
                .map(NodeId)
                .collect();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn forward_pose_flips_goal_side() {
        let pose = Pose::from_position_dir(
            Vector3::new(1.0, 2.0, 3.0),
            Unit::new_normalize(Vector3::new(0.0, 1.0, 0.0)),
        );
        let tree = SearchTree::new(TreeSide::Goal, &[pose]);
        let fwd = tree.forward_pose(NodeId(0));
        let sum = fwd.tangent().into_inner() + pose.tangent().into_inner();
        assert!(sum.norm() < 1e-9);
        let init = SearchTree::new(TreeSide::Initial, &[pose]);
        let same = init.forward_pose(NodeId(0));
        assert_eq!(same.orientation.coords, pose.orientation.coords);
    }

    #[test]
    fn sample_angle_is_half_heading_error() {
        // A pose heading +x queried toward a point at 60 degrees in the
        // xy-plane: the quaternion metric reports half the heading change.
        let pose = Pose::from_position_dir(Vector3::zeros(), Unit::new_normalize(Vector3::x()));
        let q = Vector3::new(0.5, 3.0f64.sqrt() / 2.0, 0.0);
        let angle = sample_angle(&pose, &q);
        assert!((angle - std::f64::consts::FRAC_PI_6).abs() < 1e-9);
    }
}
