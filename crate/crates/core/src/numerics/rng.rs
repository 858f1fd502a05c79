use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Matrix;

/// Seeded, splittable random stream.
///
/// Each `(seed, stream)` pair selects an independent ChaCha8 keystream, so
/// parallel consumers (HPO trials, for instance) never share draws.
#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Child generator on a fresh stream derived from this one's draws.
    pub fn split(&mut self) -> RngState {
        let seed = self.inner.next_u64();
        RngState::with_stream(seed, self.stream)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            return lo;
        }
        self.inner.gen_range(lo..hi)
    }

    pub fn standard_normal(&mut self) -> f64 {
        // Box-Muller; one draw discarded to keep the stream position simple.
        let u1: f64 = 1.0 - self.inner.gen::<f64>();
        let u2: f64 = self.inner.gen::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.inner.gen::<f64>() < p
    }
}

impl RngCore for RngState {
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

/// Matrix with entries drawn i.i.d. from U[-scale, scale].
pub fn uniform_init(rng: &mut RngState, rows: usize, cols: usize, scale: f64) -> Matrix {
    assert!(scale > 0.0, "uniform_init requires scale > 0");
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-scale, scale))
}
