//! File formats, scene generation, batch evaluation and reporting on top of
//! `roifuse-core`.

pub mod catalog;
pub mod error;
pub mod report;
pub mod run;
pub mod scene;
pub mod sequence;

pub use error::{Error, Result, SchemaError};
pub use run::{run_frames, sweep, DetectorSpec, Mode, RunConfig, RunOutcome, SweepAxis, SweepRow};
pub use scene::{generate_scene, CameraRig, SceneGenConfig};
pub use sequence::{load_frames, save_frames, CameraSpec};
