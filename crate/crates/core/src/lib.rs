//! Neural belief propagation with decimation for short LDPC codes.
//!
//! The crate is organised bottom-up:
//!
//! - [`code_graph`]: Tanner graphs, alist I/O, generator matrices.
//! - [`channel`]: BPSK over AWGN and channel LLRs.
//! - [`decoder`]: weighted (neural) BP with iteration-tied weights.
//! - [`decimation`]: the NBP-D decoder with list-based and learned
//!   decimation, and its complexity measure.
//! - [`training`]: reverse-mode gradients through unrolled decoders,
//!   multiloss cross-entropy, Adam, and both training pipelines.
//! - [`oracle`]: brute-force ML decoding and exact bitwise MAP.
//! - [`harness`]: Monte Carlo BLER/BER estimation and CSV output.
//! - [`cli`]: the `nbpd` command line.

pub mod channel;
pub mod cli;
pub mod code_graph;
pub mod decimation;
pub mod decoder;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod training;

pub use code_graph::{derive_generator, parse_alist, GeneratorMatrix, TannerGraph};
pub use decimation::{nbp_d_decode, DecimatorParams, NbpdConfig, Selection};
pub use decoder::{decode_nbp, DecodeResult, WeightSet};
pub use error::{Error, Result};

/// Saturation magnitude for every LLR (channel, messages, posteriors).
/// `tanh(LLR_SAT / 2)` rounds to exactly 1 in double precision, so a
/// saturated value behaves like an infinite one.
pub const LLR_SAT: f64 = 60.0;

/// Distance from ±1 at which the `atanh` argument of the check-node
/// update is clipped.
pub const ATANH_EPS: f64 = 1e-12;
