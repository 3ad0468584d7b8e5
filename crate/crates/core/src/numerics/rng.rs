//! Hierarchical, counter-keyed random streams.
//!
//! A stream is identified by a master seed plus a path of 64-bit labels
//! (batch, frame, link, purpose, ...). The ChaCha key is derived from the
//! whole path, so the draws of one stream never depend on how many values
//! were consumed from any other stream. Batches can therefore run in any
//! order or in parallel without changing results.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::cmatrix::C64;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit label for a purpose string (FNV-1a).
pub fn tag(name: &str) -> u64 {
    name.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    path: Vec<u64>,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, path: &[u64]) -> Self {
        let mut h = splitmix(master_seed);
        for (depth, &label) in path.iter().enumerate() {
            h = splitmix(h ^ splitmix(label.wrapping_add((depth as u64 + 1).wrapping_mul(GOLDEN))));
        }
        let mut key = [0u8; 32];
        let mut k = h;
        for chunk in key.chunks_exact_mut(8) {
            k = splitmix(k);
            chunk.copy_from_slice(&k.to_le_bytes());
        }
        Self {
            master_seed,
            path: path.to_vec(),
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Fresh stream one level deeper. Independent of draws already taken here.
    pub fn child(&self, label: u64) -> Self {
        let mut path = self.path.clone();
        path.push(label);
        Self::new(self.master_seed, &path)
    }

    pub fn child_named(&self, name: &str) -> Self {
        self.child(tag(name))
    }

    pub fn gauss(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn bit(&mut self) -> u8 {
        (self.rng.next_u32() & 1) as u8
    }

    pub fn bits(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| self.bit()).collect()
    }

    /// One circularly-symmetric complex Gaussian sample with `E|x|² = variance`.
    pub fn cgauss1(&mut self, variance: f64) -> C64 {
        let s = (variance / 2.0).sqrt();
        let re = self.gauss();
        let im = self.gauss();
        C64::new(re * s, im * s)
    }

    /// `n` i.i.d. circularly-symmetric complex Gaussian samples.
    pub fn cgauss(&mut self, n: usize, variance: f64) -> Vec<C64> {
        assert!(variance >= 0.0, "variance must be non-negative");
        if variance == 0.0 {
            return vec![C64::new(0.0, 0.0); n];
        }
        (0..n).map(|_| self.cgauss1(variance)).collect()
    }
}

/// Free-function form of [`RngStream::cgauss`].
pub fn cgauss(rng: &mut RngStream, n: usize, variance: f64) -> Vec<C64> {
    rng.cgauss(n, variance)
}
