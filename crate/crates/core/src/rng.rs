//! Counter-based random streams.
//!
//! Every consumer draws from its own named ChaCha8 stream derived from the
//! master seed. A stream's full state is `(seed, stream id, word position)`, so
//! it can be checkpointed as three integers and restored bit-exactly.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::RngError;

/// The declared sub-streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Terrain,
    Init,
    Mutation,
    Placement,
    /// Metrics sampling; never touched by the simulation itself.
    Sample,
}

impl Stream {
    pub const ALL: [Stream; 5] = [Stream::Terrain, Stream::Init, Stream::Mutation, Stream::Placement, Stream::Sample];

    pub fn label(self) -> &'static str {
        match self {
            Stream::Terrain => "terrain",
            Stream::Init => "init",
            Stream::Mutation => "mutation",
            Stream::Placement => "placement",
            Stream::Sample => "sample",
        }
    }

    pub fn from_label(label: &str) -> Result<Stream, RngError> {
        Stream::ALL
            .into_iter()
            .find(|s| s.label() == label)
            .ok_or_else(|| RngError::UnknownStream(label.to_string()))
    }

    fn id(self) -> u64 {
        match self {
            Stream::Terrain => 1,
            Stream::Init => 2,
            Stream::Mutation => 3,
            Stream::Placement => 4,
            Stream::Sample => 5,
        }
    }
}

/// Master generator state: the seed every stream is derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    pub seed: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState { seed }
    }

    pub fn stream(&self, stream: Stream) -> StreamRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(stream.id());
        StreamRng { seed: self.seed, stream, inner }
    }
}

/// Look up a sub-stream by label. Same `(seed, label)` always yields the same
/// stream.
pub fn split_rng(rng: &RngState, label: &str) -> Result<StreamRng, RngError> {
    Ok(rng.stream(Stream::from_label(label)?))
}

/// One named stream. Implements [`RngCore`] so `rand` distributions work on it.
#[derive(Debug, Clone)]
pub struct StreamRng {
    seed: u64,
    stream: Stream,
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn stream(&self) -> Stream {
        self.stream
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit words consumed so far.
    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Rebuild a stream positioned at `word_pos`.
    pub fn restore(seed: u64, stream: Stream, word_pos: u128) -> Self {
        let mut rng = RngState::new(seed).stream(stream);
        rng.inner.set_word_pos(word_pos);
        rng
    }
}

impl PartialEq for StreamRng {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.stream == other.stream && self.word_pos() == other.word_pos()
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
