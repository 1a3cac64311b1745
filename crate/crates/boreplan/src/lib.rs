//! Curvature-constrained sampling-based planning of drill access paths.
//!
//! `boreplan` plans nonlinear access canals for a forward-drilling robot
//! whose paths must stay below a maximum curvature, keep a safety clearance
//! from surrounding risk structures, and hit a goal pose in both position
//! and orientation -- all within a hard real-time replanning budget.
//!
//! The crate provides:
//!
//! - [`se3`]: poses, the quaternion orientation metric and the combined
//!   configuration-space distance used for nearest-neighbor search.
//! - [`geometry`]: point-cloud obstacles, a kd-tree index, and swept-tube
//!   clearance queries.
//! - [`steering`]: two local steering functions -- circular arcs of variable
//!   curvature and two-spiral cubic Bezier extensions.
//! - [`connect`]: pose-to-pose connectors -- a geometric 3D Dubins solver
//!   and an iterative bidirectional spline connection -- plus the cone test
//!   that proposes connection candidates.
//! - [`planner`]: four planners: one-directional RRTs with either steering
//!   flavor, and the bidirectional RRT-Connect variants that weld two trees
//!   with the matching connector.
//! - [`scenes`]: scene files, procedural test scenes and path export.
//! - [`bench`]: a benchmark harness running planner x scene x seed grids
//!   and writing reproducible CSV reports.
//!
//! Start with the runnable examples (`cargo run --example plan_corridor`)
//! or the `boreplan` CLI (`cargo run -- plan --template corridor`).

pub mod bench;
pub mod connect;
pub mod error;
pub mod geometry;
pub mod planner;
pub mod scenes;
pub mod se3;
pub mod steering;
pub mod trajectory;
pub mod tree;

pub use error::{Error, Result};
pub use se3::{pose_distance, quat_distance, MetricConfig, Pose};
pub use trajectory::Trajectory;
