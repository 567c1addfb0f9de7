//! Device capability profiles, dynamic device state and the availability
//! model.

pub mod availability;
mod file;
mod fleet;
mod profile;
mod state;

use thiserror::Error;

use crate::dag::TaskTypeId;

pub use availability::{availability_prob, fit_lambda, task_failure_prob, FitError, LambdaFit};
pub use file::{
    default_lambda_sets, default_profiles, DeviceClass, LambdaScenario, LambdaSets, ProfileFile,
    ProfileFileError,
};
pub use fleet::Fleet;
pub use profile::{DeviceId, DeviceProfile, InterferenceMatrix};
pub use state::DeviceState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("task type {0} is outside the interference matrix")]
    UnknownTaskType(TaskTypeId),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("negative duration {0}")]
    NegativeDuration(f64),
    #[error("release of task type {0} without a matching reservation")]
    UnderflowOnRelease(TaskTypeId),
    #[error("task type {task} needs more memory than device {device} has in total")]
    ModelTooLarge { task: TaskTypeId, device: DeviceId },
    #[error("device {device} cannot free enough memory for task type {task}")]
    InsufficientMemory { task: TaskTypeId, device: DeviceId },
    #[error("invalid device profile: {0}")]
    InvalidProfile(String),
}
