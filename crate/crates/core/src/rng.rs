//! Seedable random streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by the run
//! seed. Independent consumers use distinct ChaCha stream ids, laid out as
//!
//! ```text
//! bits 63..56  purpose tag (chain, forecast, synthetic data, diagnostics)
//! bits 55..32  series index (station)
//! bits 31..0   chain or path index
//! ```
//!
//! so runs over many series and chains never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type EngineRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Chain = 1,
    Forecast = 2,
    Synthetic = 3,
    Diagnostics = 4,
}

pub fn stream_id(purpose: Purpose, series: u32, index: u32) -> u64 {
    ((purpose as u64) << 56) | ((u64::from(series) & 0xFF_FFFF) << 32) | u64::from(index)
}

/// Generator for one `(purpose, series, index)` stream under `seed`.
pub fn stream(seed: u64, purpose: Purpose, series: u32, index: u32) -> EngineRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(purpose, series, index));
    rng
}
