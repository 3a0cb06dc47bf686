pub mod datagen;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod numkern;
pub mod problems;
pub mod prox;
pub mod solvers;
