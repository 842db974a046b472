//! Seeded random streams.
//!
//! Every random quantity in a run is drawn from a ChaCha8 generator keyed by
//! the run seed and a fixed stream id, so the graph, the intrinsic
//! frequencies, the initial phases and the Brownian increments never share
//! draws and stay stable when one of them is re-sampled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_GRAPH: u64 = 1;
pub const STREAM_FREQUENCIES: u64 = 2;
pub const STREAM_PHASES: u64 = 3;
pub const STREAM_NOISE: u64 = 4;
pub const STREAM_CLUSTERING: u64 = 5;

pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
