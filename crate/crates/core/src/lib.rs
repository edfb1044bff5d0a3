//! Perception and grasp planning for flat, textureless tableware.
//!
//! The pipeline runs in the order the modules are listed:
//!
//! 1. [`scene`] – camera model, back-projection, dominant-plane fitting and the
//!    table-plane coordinate frame.
//! 2. [`segmentation`] – colour-range training over RGB/HSV/HLS, raw masks,
//!    closing + dilation, convex hull and per-object detections.
//! 3. [`classification`] – depth-normalized area, point count and PCA
//!    descriptors feeding a four-class decision tree.
//! 4. [`grasp`] – target selection, class-specific end-effector orientation
//!    and Cartesian approach trajectories.
//! 5. [`feedback`] – post-grasp visual verification and the retry loop.
//!
//! [`synthscene`] renders ground-truth RGB-D tabletop scenes used for training
//! and evaluation, and [`evaluation`] wires everything into the train/evaluate
//! harness used by the CLI.

pub mod classification;
pub mod error;
pub mod evaluation;
pub mod feedback;
pub mod grasp;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod scene;
pub mod segmentation;
pub mod synthscene;

pub use classification::{ClassModel, ObjectClass, ObjectDescriptor, PerClass};
pub use error::{Error, Result};
pub use grasp::{GraspPlan, GraspStrategy, Orientation, PriorityTable};
pub use linalg::Vec3;
pub use pipeline::{PipelineConfig, Perception, SceneObservation};
pub use scene::{CameraModel, PointCloud, RgbdFrame, TablePlane};
pub use segmentation::{ColorRangeModel, Detection, Mask};
pub use synthscene::{NoiseParams, ObjectSpec, RandomizerConfig, SceneSpec};
