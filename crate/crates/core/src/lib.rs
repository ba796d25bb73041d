//! Multimodal denoising diffusion for quantum circuit synthesis.
//!
//! Circuits are tokenized into a signed integer matrix plus one normalized
//! parameter per column, embedded into a discrete-token latent `h` and a
//! circular parameter latent `w`, and generated by a joint diffusion process
//! over both. The crate contains the full pipeline at desk scale: exact
//! unitary simulation, embeddings and schedules, the diffusion sampler with
//! two-axis classifier-free guidance, a small trainable denoiser, Gate-Pair
//! Encoding, and dataset tooling.

pub mod circuit;
pub mod data;
pub mod denoiser;
pub mod diffusion;
pub mod embed;
pub mod error;
#[doc(hidden)]
pub mod fuzz_checks;
pub mod gpe;
pub mod schedule;
pub mod sim;

pub use error::{Error, Result};
