//! Counter-based random streams keyed by tuples of integers.
//!
//! Every random decision in the synthetic detector is drawn from a stream
//! derived purely from its key (seed, frame, region, object), so results do
//! not depend on call order or on which thread evaluates a region.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes an ordered key tuple into a single stream key.
pub fn hash_key(parts: &[u64]) -> u64 {
    parts.iter().fold(GOLDEN, |acc, &p| {
        mix64(acc.wrapping_add(GOLDEN) ^ mix64(p.wrapping_add(GOLDEN)))
    })
}

/// The `n`-th output of a stream is a pure function of `(key, n)`.
#[derive(Debug, Clone)]
pub struct KeyedStream {
    key: u64,
    counter: u64,
}

impl KeyedStream {
    pub fn new(parts: &[u64]) -> Self {
        Self {
            key: hash_key(parts),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key ^ mix64(self.counter.wrapping_mul(GOLDEN).wrapping_add(1)));
        self.counter += 1;
        out
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller; consumes two draws.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }

    /// Uniform integer in `[0, n)`; `n` must be positive.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_stream() {
        let mut a = KeyedStream::new(&[1, 2, 3]);
        let mut b = KeyedStream::new(&[1, 2, 3]);
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_ne!(hash_key(&[1, 2, 3]), hash_key(&[3, 2, 1]));
        assert_ne!(hash_key(&[0]), hash_key(&[0, 0]));
    }

    #[test]
    fn uniform_moments() {
        let mut s = KeyedStream::new(&[7]);
        let n = 20_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let u = s.next_f64();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        let mut g = KeyedStream::new(&[8]);
        let mut gs = 0.0;
        for _ in 0..n {
            let x = g.next_gaussian();
            gs += x;
            sq += x * x;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.01);
        assert!((gs / n as f64).abs() < 0.03);
        assert!((sq / n as f64 - 1.0).abs() < 0.05);
    }
}
