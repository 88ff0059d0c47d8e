//! Collision-aware refinement for articulated two-hand meshes.
//!
//! `bimanual` models a pair of interacting hands with a compact parameter
//! set (per-hand shape coefficients, global orientations, finger joint
//! rotations, and a right-to-left translation), poses them with linear
//! blend skinning over a procedural capsule template, and measures
//! inter-hand penetration through voxelized signed-distance fields.
//!
//! On top of that geometry sits a factorized refinement loop: one
//! parameter factor is optimized at a time against a weighted objective
//! (collision, 2D/3D joint, translation, shape regularity, finger
//! planarity terms) and each candidate is only accepted when it strictly
//! improves both the collision error and the 3D joint error. The
//! [`harness`] module generates synthetic interacting scenes so the whole
//! pipeline can be exercised and evaluated without any learned components
//! or datasets.
//!
//! Start with the runnable programs under `examples/`; each one
//! demonstrates a single capability end to end.

pub mod camera;
pub mod cli;
pub mod collision;
pub mod error;
pub mod harness;
pub mod ik;
pub mod kinematics;
pub mod metrics;
pub mod objective;
pub mod params;
pub mod refine;
pub mod rotation;
pub mod scene_io;
pub mod sdf;
pub mod template;

pub use camera::WeakPerspectiveCamera;
pub use collision::{collision_loss, penetration_metrics, CollisionGrids, PenetrationReport};
pub use error::Error;
pub use harness::{generate_scene, run_experiment, CorpusSpec, InteractionPreset, Scene, SceneSpec};
pub use ik::{orientation_from_joints, swing_from_joints};
pub use kinematics::{forward, regress_joints, TwoHandMesh};
pub use metrics::{classify_interaction, i_mpjpe_mm, mpjpe_mm, InteractionClass};
pub use objective::{JointTargets, ObjectiveContext, ObjectiveWeights};
pub use params::{Factor, FingerPose, HandOrientation, HandShape, TwoHandParams};
pub use refine::{factorized_refine, obtain_error, ErrorPair, RefineConfig, RefineEngine, RefineReport};
pub use sdf::{GridConfig, VoxelSdf};
pub use template::{build_template, HandTemplate, TemplateConfig};

/// Convenience result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
