//! Online signed-distance-field mapping and exploration planning.
//!
//! The crate builds a global SDF map of an unknown environment as a
//! confidence-fused collection of small local coordinate networks, trained
//! continually from simulated LiDAR scans, and plans collision-free
//! exploratory trajectories through the learned map with a sequential convex
//! programming MPC.
//!
//! Module map:
//! - [`geom`]: analytic SDF primitives, set algebra, nearest-neighbor index,
//!   directed Hausdorff distance, iso-contour extraction.
//! - [`sim`]: ground-truth worlds, sphere-traced LiDAR, unicycle dynamics,
//!   ground-truth collision checking.
//! - [`net`]: the local map network (Fourier features + two residual MLP
//!   heads), its differentiation engine, the AMSGrad optimizer and
//!   checkpoint I/O.
//! - [`mapper`]: scan gating, ray augmentation and labeling, bounded training
//!   sets, the local-map lifecycle, and confidence-fused global queries.
//! - [`plan`]: trajectory costs, linearization, an embedded ADMM QP solver,
//!   the SCP loop, and the receding-horizon executive.
//! - [`episode`]: closed-loop experiments, baselines, metrics, and file
//!   exports.

pub mod episode;
pub mod geom;
pub mod mapper;
pub mod net;
pub mod plan;
pub mod sim;
