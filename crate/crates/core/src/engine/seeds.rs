//! Stream seeding. Every random stream is a pure function of
//! `(master_seed, purpose, island, round)`, so island results never depend
//! on which worker thread ran them or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Shard = 2,
    IslandChaos = 3,
    Sample = 4,
    Picks = 5,
    Crossover = 6,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_seed(master_seed: u64, stream: Stream, island: u64, round: u64) -> u64 {
    let mut h = splitmix(master_seed);
    h = splitmix(h ^ stream as u64);
    h = splitmix(h ^ island);
    splitmix(h ^ round)
}

pub fn stream_rng(master_seed: u64, stream: Stream, island: u64, round: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master_seed, stream, island, round))
}

/// A draw in the open interval (0, 1), for seeding chaotic maps.
pub fn open_unit(rng: &mut impl Rng) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return u;
        }
    }
}
