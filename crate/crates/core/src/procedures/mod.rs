//! The Forward and Backward Procedures.

mod bp;
mod fp;

pub use bp::{
    backward_procedure, classify, classify_last, decompose, face_normal, face_reduce, BpError,
    ClassificationResult, ReductionStep, SliceStep,
};
pub use fp::{forward_procedure, FpOutput};
