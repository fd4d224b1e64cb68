//! Training and evaluation driver: configuration files, the training loop,
//! metrics files and checkpoints.

mod checkpoint;
mod config;
mod run;

pub use checkpoint::{Checkpoint, MAGIC, VERSION};
pub use config::TrainConfig;
pub use run::{
    checkpoint_name, evaluate, open_metrics, train, write_metrics, EpisodeRecord, Exploration,
    TrainOutput, Trainer, DIAGNOSTIC_CHECKPOINT, FINAL_CHECKPOINT, METRICS_FILE, METRICS_HEADER,
};
