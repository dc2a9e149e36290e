//! PEPOSD: ordered statistics decoding of CRC-polar codes that tests a
//! precomputed, sorted table of error patterns and stops after a fixed number
//! of CRC-valid candidates. Includes CA-SCL and exhaustive ML baselines and a
//! Monte Carlo harness.
//!
//! Bit vectors index from 0; bit 0 of a CRC block is the highest-degree
//! coefficient. Reliability ranks are 1-based with rank 1 the least reliable
//! systematic position.

pub mod channel;
pub mod crc;
pub mod ep;
pub mod error;
pub mod gf2;
pub mod ml;
pub mod osd;
pub mod polar;
pub mod scl;
pub mod sim;

pub use channel::ChannelParams;
pub use crc::CrcPoly;
pub use ep::{generate_eps, EpOrder, EpTable, ErrorPattern};
pub use error::{Error, Result};
pub use gf2::{BitMatrix, BitWord, IndexPermutation, SystematicForm};
pub use ml::{ml_oracle, MlOracleResult};
pub use osd::{DecodeOutcome, DecoderConfig, PepOsdDecoder, PreprocessResult};
pub use polar::{construct_code, CodeSpec, Construction, CrcPolarCode};
pub use scl::{scl_decode, SclDecoder, SclOutcome};
pub use sim::{run_sweep, DecoderKind, ExperimentConfig, PointStats};
