//! Weighted belief-propagation decoding for short linear block codes.
//!
//! The crate covers the whole pipeline needed to distill a large overcomplete
//! parity-check matrix into a per-iteration schedule of small matrices:
//!
//! * [`gf2`] and [`codes`]: bit matrices over GF(2), Reed-Muller constructions,
//!   randomized low-weight check generation and the CCSDS (128,64) code.
//! * [`tanner`]: Tanner graphs with row-major edge identifiers.
//! * [`decoder`]: the unrolled weighted-BP decoder in plain, CN-tied and
//!   untied weight modes.
//! * [`training`]: exact reverse-mode gradients through the decoder, the soft
//!   bit-error-rate multiloss and an Adam training loop.
//! * [`pruning`]: the prune/retrain controller and the derived decoder variants.
//! * [`channel`]: BPSK over AWGN, Monte-Carlo block-error estimation and the
//!   brute-force ML / bitwise MAP oracles.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. With `std`, batch work is spread over a rayon pool; results do not
//! depend on the number of worker threads.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod channel;
pub mod codes;
pub mod decoder;
mod error;
pub mod gf2;
pub(crate) mod math;
mod par;
pub mod pruning;
pub mod rng;
pub mod tanner;
pub mod training;

pub use crate::error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
