//! The three benchmark problems: basis pursuit, latent-variable graphical
//! model selection and robust PCA.

pub mod bp;
pub mod lvggms;
pub mod rpca;

pub use bp::{bp_build, BpInstance};
pub use lvggms::{lvggms_build, LUpdate, LvggmsInstance};
pub use rpca::{rpca_build, RpcaInstance};
