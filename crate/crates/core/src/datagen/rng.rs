use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one experiment seed.
///
/// Every consumer draws from `ChaCha8(seed)` with its own stream id, so
/// graph generation, training signals and test signals of different trials
/// never share randomness and do not depend on evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Graph { trial: u32 },
    Train { trial: u32, ratio_slot: u32 },
    Test { trial: u32 },
    Folds { trial: u32, ratio_slot: u32 },
    Custom(u64),
}

impl Stream {
    pub fn id(self) -> u64 {
        let (tag, a, b) = match self {
            Stream::Graph { trial } => (1u64, trial, 0),
            Stream::Train { trial, ratio_slot } => (2, trial, ratio_slot),
            Stream::Test { trial } => (3, trial, 0),
            Stream::Folds { trial, ratio_slot } => (4, trial, ratio_slot),
            Stream::Custom(x) => return x,
        };
        (tag << 56) | ((a as u64) << 24) | b as u64
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
