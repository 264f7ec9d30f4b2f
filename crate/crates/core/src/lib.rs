//! Dropout as an explicit regularizer: matrix sensing and two-layer ReLU networks.
//!
//! The crate computes the closed-form regularizers induced by dropout and checks them against
//! exact enumeration over masks. It also trains both model families with dropout and evaluates
//! the associated capacity measures and generalization bounds.

pub mod cli;
pub mod datasets;
pub mod dropout;
pub mod numerics;
pub mod oracle;
pub mod relunet;
pub mod sensing;
