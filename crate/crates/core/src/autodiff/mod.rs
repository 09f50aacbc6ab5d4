//! Minimal reverse-mode automatic differentiation, Adam and checkpoints.

mod checkpoint;
mod graph;
mod optim;
mod params;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointMeta, ParamEntry, FORMAT_VERSION, MAGIC};
pub use graph::{Graph, Var};
pub use optim::{adam_step, clip_global_norm, lr_at_epoch, AdamConfig, AdamState};
pub use params::{Gradients, ParamId, ParamStore};
pub use tensor::Tensor;
