//! Simulation and optimization of entanglement-enhanced phase and frequency
//! estimation with ensembles of two-level atoms.

pub mod bayes;
pub mod clock;
pub mod decoherence;
pub mod bounds;
pub mod ensemble;
pub mod error;
pub mod frequentist;
pub mod linalg;
pub mod measurement;
pub mod optim;
pub mod rng;
pub mod spin;
pub mod states;
pub mod table;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use spin::{
    collective_op, embed_full, expectation, project_dicke, rotate, variance, Axis, CollectiveOperator,
    DickeVector, FullDensity, FullVector, OpLabel, Space, SpinMoments, State,
};
