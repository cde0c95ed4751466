//! Link-level simulator and detector library for photon-counting
//! free-space optical on-off keying.
//!
//! The channel delivers one Poisson photon count per slot with mean
//! `n_s·m·h + n_b`, where `m` is the transmitted bit, `h` a unit-mean
//! fading gain held constant over a coherence block, and `n_b` the
//! background rate. The receivers here detect the bit sequence blind of
//! the gain: a generalized-likelihood window metric drives blockwise
//! detectors and a streaming two-state trellis search with a selective
//! store of past 1-decisions. A genie-aided per-symbol receiver provides
//! the performance bound, and a Monte Carlo harness sweeps BER curves with
//! deterministic parallel execution.
//!
//! ```
//! use pcfso::{ChannelParams, TrellisConfig, TrellisDecoder};
//! use pcfso::channel::transmit_slot;
//! use rand::SeedableRng;
//!
//! let params = ChannelParams::new(40.0, 1.0, 10_000).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let mut decoder =
//!     TrellisDecoder::new(TrellisConfig::new(8, 20).unwrap(), params.n_b).unwrap();
//!
//! let sent: Vec<u8> = (0..200).map(|i| (i % 3 == 0) as u8).collect();
//! let mut decoded = Vec::new();
//! for &bit in &sent {
//!     let count = transmit_slot(bit, 1.0, &params, &mut rng).unwrap();
//!     decoder.step_into(count, &mut decoded);
//! }
//! decoded.extend(decoder.flush());
//! assert_eq!(decoded.len(), sent.len());
//! let errors = sent.iter().zip(&decoded).filter(|(a, b)| a != b).count();
//! assert!(errors <= 1, "strong-signal stream should decode cleanly");
//! ```

pub mod channel;
pub mod cli;
pub mod config;
pub mod detectors;
pub mod error;
pub mod metric;
pub mod report;
pub mod sim;
pub mod special;
pub mod trellis;
pub mod validate;

pub use channel::{ChannelParams, FadingModel, GainProcess};
pub use detectors::{
    brute_force_detect, fixed_threshold_detect, genie_bep_given_h, genie_detect, msd_detect,
    BlockDecision,
};
pub use error::{Error, Result};
pub use metric::{log_metric, WindowStats};
pub use sim::{genie_bep_semi_analytic, run_ber_point, run_sweep, BerPoint, StoppingRule};
pub use trellis::{TrellisConfig, TrellisDecoder};
