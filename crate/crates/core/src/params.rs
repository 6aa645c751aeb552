//! Edge parameters, bit-packed configurations and reproducible sampling.
//!
//! Randomness is counter-based: the uniform attached to edge `e` in sample
//! `index` of stream `seed` is word `e` of the ChaCha8 stream `(seed, index)`.
//! It never depends on how samples are scheduled across threads.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::BallGraph;

/// Smallest parameter accepted by operations that condition on `{0 not connected to S_n}`.
pub const CONDITIONING_MIN: f64 = 1e-9;
/// Largest parameter accepted by operations that condition on `{0 not connected to S_n}`.
pub const CONDITIONING_MAX: f64 = 1.0 - 1e-9;

/// Per-edge open probabilities, indexed like the edges of the ball.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeParams {
    probs: Vec<f64>,
}

impl EdgeParams {
    pub fn new(g: &BallGraph, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != g.num_edges() {
            return Err(Error::LengthMismatch {
                expected: g.num_edges(),
                got: probs.len(),
            });
        }
        if let Some(&bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidProbability(bad));
        }
        Ok(Self { probs })
    }

    pub fn homogeneous(g: &BallGraph, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(Self {
            probs: vec![p; g.num_edges()],
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, e: usize) -> f64 {
        self.probs[e]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Same graph, one entry replaced. Values are clamped into `[0, 1]`.
    pub fn with_entry(&self, e: usize, p: f64) -> Self {
        let mut probs = self.probs.clone();
        probs[e] = p.clamp(0.0, 1.0);
        Self { probs }
    }

    pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
        debug_assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
        Self { probs }
    }

    /// Errors unless every entry on `edges` lies in `[CONDITIONING_MIN, CONDITIONING_MAX]`.
    pub fn check_conditioning_domain(&self, edges: std::ops::Range<usize>) -> Result<()> {
        for e in edges {
            let value = self.probs[e];
            if !(CONDITIONING_MIN..=CONDITIONING_MAX).contains(&value) {
                return Err(Error::OutsideConditioningDomain {
                    edge: e,
                    value,
                    lo: CONDITIONING_MIN,
                    hi: CONDITIONING_MAX,
                });
            }
        }
        Ok(())
    }

    /// Entrywise `self <= other`.
    pub fn le(&self, other: &EdgeParams) -> bool {
        self.probs.iter().zip(&other.probs).all(|(a, b)| a <= b)
    }
}

/// Homogeneous parameter vector.
pub fn homogeneous(g: &BallGraph, p: f64) -> Result<EdgeParams> {
    EdgeParams::homogeneous(g, p)
}

/// Maps a possibly negative parameter to `[0, 1]`: negative values become 0,
/// so `theta_n` at a negative argument is 0.
pub fn clamp_convention(p: f64) -> Result<f64> {
    if p.is_nan() || p > 1.0 {
        return Err(Error::InvalidProbability(p));
    }
    Ok(p.max(0.0))
}

/// One edge configuration, bit-packed by edge index. Bit set means open.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    words: Vec<u64>,
    len: usize,
}

impl Configuration {
    pub fn closed(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn open(len: usize) -> Self {
        let mut c = Self::closed(len);
        for e in 0..len {
            c.set(e, true);
        }
        c
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut c = Self::closed(bits.len());
        for (e, &b) in bits.iter().enumerate() {
            c.set(e, b);
        }
        c
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, e: usize) -> bool {
        debug_assert!(e < self.len);
        (self.words[e >> 6] >> (e & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, e: usize, open: bool) {
        let mask = 1u64 << (e & 63);
        if open {
            self.words[e >> 6] |= mask;
        } else {
            self.words[e >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, e: usize) {
        self.words[e >> 6] ^= 1u64 << (e & 63);
    }

    pub fn count_open(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Pointwise `self >= other` on the given edges.
    pub fn dominates_on(&self, other: &Configuration, edges: std::ops::Range<usize>) -> bool {
        edges.into_iter().all(|e| self.get(e) || !other.get(e))
    }

    /// `0`/`1` string in edge order.
    pub fn to_bit_string(&self) -> String {
        (0..self.len)
            .map(|e| if self.get(e) { '1' } else { '0' })
            .collect()
    }
}

#[inline]
fn to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Lazily generated per-edge uniforms of one `(seed, index)` stream.
///
/// Edges are generated in index order; asking for edge `e` materialises the
/// uniforms of all edges `<= e`.
#[derive(Clone, Debug)]
pub struct UniformStream {
    rng: ChaCha8Rng,
    cache: Vec<f64>,
}

impl UniformStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self {
            rng,
            cache: Vec::new(),
        }
    }

    /// Rewinds to the start of stream `(seed, index)`, keeping the allocation.
    pub fn reset(&mut self, seed: u64, index: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.rng.set_stream(index);
        self.cache.clear();
    }

    #[inline]
    pub fn get(&mut self, e: usize) -> f64 {
        while self.cache.len() <= e {
            let u = to_unit(self.rng.next_u64());
            self.cache.push(u);
        }
        self.cache[e]
    }

    pub fn take(mut self, len: usize) -> Vec<f64> {
        if len > 0 {
            self.get(len - 1);
        }
        self.cache.truncate(len);
        self.cache
    }
}

/// Per-edge uniforms in `[0, 1)` for sample `index` of stream `seed`.
pub fn sample_uniforms(g: &BallGraph, seed: u64, index: u64) -> Vec<f64> {
    UniformStream::new(seed, index).take(g.num_edges())
}

/// Configuration with edge `e` open iff `u_e <= probs_e`.
pub fn sample(params: &EdgeParams, seed: u64, index: u64) -> Configuration {
    let uniforms = UniformStream::new(seed, index).take(params.len());
    threshold_config(params, &uniforms)
}

/// Open iff `uniforms[e] <= params[e]`.
pub fn threshold_config(params: &EdgeParams, uniforms: &[f64]) -> Configuration {
    let mut c = Configuration::closed(params.len());
    for (e, (&u, &p)) in uniforms.iter().zip(params.as_slice()).enumerate() {
        c.set(e, u <= p);
    }
    c
}
