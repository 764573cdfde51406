//! Recurrent potential network: parameters, forward pass over the grid,
//! hand-written reverse mode, Adam, and checkpoints.

mod adam;
mod backward;
mod checkpoint;
mod forward;
mod params;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use backward::backward;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use forward::{forward_field, forward_recorded, head_forward, rnn_cell_step, ForwardTape};
pub use params::{glorot_bound, init_params, Block, GradientAccumulator, NetDims, NetParams};
