//! Optimization: initialization, objective, Adam, learning-rate schedule,
//! autoencoder pretraining and the training loop.

pub mod adam;
pub mod init;
pub mod objective;
pub mod pretrain;
pub mod schedule;
pub mod trainer;

pub use adam::{AdamConfig, AdamState};
pub use init::{xavier_bound, xavier_init};
pub use objective::{attention_penalty, cross_entropy, total_loss, LossNodes, ObjectiveConfig, DEFAULT_LAMBDA};
pub use pretrain::{pretrain_autoencoders, Autoencoder, PretrainConfig, PretrainReport, ViewReconstruction};
pub use schedule::{lr_for_history, Plateau, ScheduleConfig, MIN_LR};
pub use trainer::{assess, check_gradients, evaluate, train, EpochRecord, Subset, TrainOutcome, TrainingConfig};
