//! Conditional flow-matching objective and training loop.

mod loss;
mod path;
mod train;

pub use loss::{cfm_loss, cfm_loss_on, CfmBatch, LossOutput, T_MAX};
pub use path::{interpolate, target_field, target_field_with, PathParams, TargetKind};
pub use train::{
    moving_average, train, train_with_progress, write_training_log, LogRow, TrainConfig, TrainOutcome,
};
