//! Linear expert, ReLU Elman and linear state-space branches and their
//! six combinations.

mod checkpoint;
mod decompose;
pub(crate) mod forward;
mod spec;
mod state;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use decompose::{decompose, Decomposition};
pub use forward::{
    forward, kf_forward, lem_forward, rnn_forward, Activation, BatchInputs, BatchOutputs,
    BranchOutputs,
};
pub use spec::{ArchType, ModelSpec};
pub use state::{init_weights, ModelState, ParamKind, RecurrentBranch};
