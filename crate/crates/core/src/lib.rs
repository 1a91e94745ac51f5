//! Speech emotion recognition from scratch: a tape-based autodiff engine,
//! an MFCC frontend, CBAM/ODConv attention, GRU recurrence, the model
//! lineup, and a stratified cross-validation harness.

pub mod attention;
pub mod audio;
pub mod autodiff;
pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod models;
pub mod nn;
pub mod recurrent;
pub mod tensor;
pub mod train;

pub use autodiff::{Mode, Tape, Var};
pub use error::{Error, Result};
pub use tensor::Tensor;
