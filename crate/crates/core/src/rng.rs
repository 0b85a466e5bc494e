//! Reproducible random substreams.
//!
//! A run-level seed and a domain label are mixed into a ChaCha key; every
//! path (or antithetic pair, or quote date) then draws from its own
//! ChaCha stream. Results therefore do not depend on how work is split
//! across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    key: [u8; 32],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl StreamFactory {
    pub fn new(seed: u64, domain: &str) -> Self {
        // FNV-1a of the domain label, folded into the seed.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in domain.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        let mut state = seed ^ h.rotate_left(17);
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { key }
    }

    /// Independent stream number `id`.
    pub fn stream(&self, id: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(id);
        rng
    }

    /// A child factory for a nested level of substreams.
    pub fn child(&self, id: u64) -> StreamFactory {
        let mut rng = self.stream(id);
        let mut key = [0u8; 32];
        rng.fill(&mut key);
        StreamFactory { key }
    }
}

/// Pair of standard normal shocks with `Corr(eps_d, eps_x) = rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedShocks {
    pub eps_d: f64,
    pub eps_x: f64,
}

impl CorrelatedShocks {
    /// Combines independent normals: `eps_x = z_x`,
    /// `eps_d = rho z_x + √(1 - rho²) z_d`.
    #[inline]
    pub fn from_independent(z_d: f64, z_x: f64, rho: f64) -> Self {
        Self {
            eps_d: rho * z_x + (1.0 - rho * rho).max(0.0).sqrt() * z_d,
            eps_x: z_x,
        }
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, rho: f64) -> Self {
        let (z_d, z_x) = draw_pair(rng);
        Self::from_independent(z_d, z_x, rho)
    }

    pub fn zero() -> Self {
        Self {
            eps_d: 0.0,
            eps_x: 0.0,
        }
    }

    pub fn negated(self) -> Self {
        Self {
            eps_d: -self.eps_d,
            eps_x: -self.eps_x,
        }
    }
}

/// Two independent standard normals `(z_d, z_x)`; `z_x` is drawn first.
#[inline]
pub fn draw_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let z_x: f64 = rng.sample(StandardNormal);
    let z_d: f64 = rng.sample(StandardNormal);
    (z_d, z_x)
}
