//! Counter-based sampling of Haar-uniform matrices mod `p^e`.
//!
//! Sample `i` of a run with seed `s` is drawn from a ChaCha8 stream keyed by
//! a mix of `(s, lane)` with stream id `i`, so every sample is a pure
//! function of `(seed, index)` and can be generated on any worker.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prime::Prime;
use crate::zpe::{modulus, MatrixModPE};

/// Lane offset for the extra digits drawn when a sample is re-run at
/// doubled precision.
const REFINE_LANE: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimePrecision {
    pub p: Prime,
    pub e: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    /// One entry per prime; a single entry is the ordinary `Z_p` case.
    pub primes: Vec<PrimePrecision>,
    pub n: usize,
    pub u: usize,
    pub seed: u64,
    pub count: u64,
}

impl SampleSpec {
    pub fn single(p: Prime, e: u32, n: usize, u: usize, seed: u64, count: u64) -> Result<Self> {
        Self::multi(vec![PrimePrecision { p, e }], n, u, seed, count)
    }

    pub fn multi(primes: Vec<PrimePrecision>, n: usize, u: usize, seed: u64, count: u64) -> Result<Self> {
        let spec = SampleSpec { primes, n, u, seed, count };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if self.primes.is_empty() {
            return Err(Error::InvalidConfig("at least one prime is required".into()));
        }
        for (i, pp) in self.primes.iter().enumerate() {
            modulus(pp.p, pp.e)?;
            if self.primes[..i].iter().any(|q| q.p == pp.p) {
                return Err(Error::InvalidConfig(format!("prime {} listed twice", pp.p)));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.n + self.u
    }

    /// Primary prime and precision.
    pub fn prime(&self) -> &PrimePrecision {
        &self.primes[0]
    }

    /// Same spec with the precision of every prime replaced.
    pub fn with_precision(&self, e: u32) -> Result<Self> {
        let primes = self.primes.iter().map(|pp| PrimePrecision { p: pp.p, e }).collect();
        Self::multi(primes, self.n, self.u, self.seed, self.count)
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for sample `index` on `lane`.
pub fn sample_rng(seed: u64, lane: u64, index: u64) -> ChaCha8Rng {
    let mut lane_state = lane;
    let mut state = seed ^ splitmix64(&mut lane_state);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Uniform residue in `[0, m)` by rejection against the largest multiple of
/// `m` that fits in 64 bits.
pub fn uniform_below(rng: &mut impl RngCore, m: u64) -> u64 {
    let limit = ((1u128 << 64) / m as u128) * m as u128;
    loop {
        let x = rng.next_u64();
        if (x as u128) < limit {
            return x % m;
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, p: Prime, e: u32, rows: usize, cols: usize) -> MatrixModPE {
    let m = modulus(p, e).expect("spec validated");
    let entries = (0..rows * cols).map(|_| uniform_below(rng, m)).collect();
    MatrixModPE::new(p, e, rows, cols, entries).expect("spec validated")
}

/// Matrix number `index` for the first prime of `spec`.
pub fn sample_matrix(spec: &SampleSpec, index: u64) -> MatrixModPE {
    let pp = spec.prime();
    let mut rng = sample_rng(spec.seed, 0, index);
    draw(&mut rng, pp.p, pp.e, spec.rows(), spec.n)
}

/// One matrix per prime, each from its own lane.
pub fn sample_multiprime(spec: &SampleSpec, index: u64) -> Vec<MatrixModPE> {
    spec.primes
        .iter()
        .enumerate()
        .map(|(lane, pp)| {
            let mut rng = sample_rng(spec.seed, lane as u64, index);
            draw(&mut rng, pp.p, pp.e, spec.rows(), spec.n)
        })
        .collect()
}

/// Extends `m` (sample `index` on prime lane `lane`) to precision `2e` by
/// drawing the high digits uniformly; the result reduces to `m` mod `p^e`,
/// so it is a Haar sample at the higher precision. `None` if `p^{2e}` does
/// not fit.
pub fn refine_precision(m: &MatrixModPE, seed: u64, lane: u64, index: u64) -> Option<MatrixModPE> {
    let e2 = m.precision().checked_mul(2)?;
    modulus(m.prime(), e2).ok()?;
    let low = m.modulus();
    let mut rng = sample_rng(seed, REFINE_LANE + lane, index);
    let entries = m
        .entries()
        .iter()
        .map(|&x| x + low * uniform_below(&mut rng, low))
        .collect();
    MatrixModPE::new(m.prime(), e2, m.rows(), m.cols(), entries).ok()
}
