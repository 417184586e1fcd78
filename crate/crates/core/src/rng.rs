//! Counter-based random streams.
//!
//! Every draw is a pure function of `(master_seed, stream_id, index)`, computed
//! with Philox4x32-10. A trial never depends on which worker ran it or on how
//! many draws other trials consumed.

use rand::RngCore;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// The Philox4x32 bijection with 10 rounds.
#[inline]
pub fn philox4x32_10(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = ctr;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// Raw 128-bit block number `block`.
    #[inline]
    pub fn block(&self, block: u64) -> [u32; 4] {
        let ctr = [
            block as u32,
            (block >> 32) as u32,
            self.stream_id as u32,
            (self.stream_id >> 32) as u32,
        ];
        let key = [self.master_seed as u32, (self.master_seed >> 32) as u32];
        philox4x32_10(ctr, key)
    }

    /// Two 64-bit words from one block.
    #[inline]
    pub fn pair(&self, block: u64) -> (u64, u64) {
        let b = self.block(block);
        (
            u64::from(b[0]) | (u64::from(b[1]) << 32),
            u64::from(b[2]) | (u64::from(b[3]) << 32),
        )
    }

    /// The `index`-th 64-bit word of the stream.
    #[inline]
    pub fn word(&self, index: u64) -> u64 {
        let (lo, hi) = self.pair(index >> 1);
        if index & 1 == 0 {
            lo
        } else {
            hi
        }
    }

    /// The `index`-th uniform in `[0, 1)` (53-bit resolution).
    #[inline]
    pub fn uniform(&self, index: u64) -> f64 {
        to_unit(self.word(index))
    }

    /// Sequential reader over this stream, usable as a [`RngCore`].
    pub fn reader(&self) -> StreamRng {
        StreamRng {
            stream: *self,
            next: 0,
            cached_block: u64::MAX,
            cached: (0, 0),
        }
    }
}

#[inline(always)]
pub fn to_unit(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential view of an [`RngStream`].
#[derive(Debug, Clone)]
pub struct StreamRng {
    stream: RngStream,
    next: u64,
    cached_block: u64,
    cached: (u64, u64),
}

impl StreamRng {
    /// Index of the next word to be produced.
    pub fn position(&self) -> u64 {
        self.next
    }

    pub fn seek(&mut self, index: u64) {
        self.next = index;
    }

    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        to_unit(self.next_u64())
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        let block = self.next >> 1;
        if block != self.cached_block {
            self.cached = self.stream.pair(block);
            self.cached_block = block;
        }
        let w = if self.next & 1 == 0 {
            self.cached.0
        } else {
            self.cached.1
        };
        self.next += 1;
        w
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Known-answer vectors published with the Random123 library.
    #[test]
    fn philox_known_answers() {
        assert_eq!(
            philox4x32_10([0, 0, 0, 0], [0, 0]),
            [0x6627_e8d5, 0xe169_c58d, 0xbc57_ac4c, 0x9b00_dbd8]
        );
        assert_eq!(
            philox4x32_10([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f_276d, 0x41c8_3b0e, 0xa20b_c7c6, 0x6d54_51fd]
        );
        assert_eq!(
            philox4x32_10(
                [0x243f_6a88, 0x85a3_08d3, 0x1319_8a2e, 0x0370_7344],
                [0xa409_3822, 0x299f_31d0]
            ),
            [0xd16c_fe09, 0x94fd_cceb, 0x5001_e420, 0x2412_6ea1]
        );
    }

    #[test]
    fn streams_are_pure_functions_of_their_key() {
        let s = RngStream::new(7, 3);
        let seq: Vec<u64> = (0..64).map(|i| s.word(i)).collect();
        let mut r = s.reader();
        let again: Vec<u64> = (0..64).map(|_| r.next_u64()).collect();
        assert_eq!(seq, again);
        // Reading out of order gives the same words.
        for i in (0..64).rev() {
            assert_eq!(s.word(i), seq[i as usize]);
        }
        assert_ne!(seq, (0..64).map(|i| RngStream::new(7, 4).word(i)).collect::<Vec<_>>());
        assert_ne!(seq, (0..64).map(|i| RngStream::new(8, 3).word(i)).collect::<Vec<_>>());
    }

    #[test]
    fn uniforms_look_uniform() {
        let s = RngStream::new(1, 0);
        let n = 200_000;
        let mut bins = [0usize; 10];
        let mut sum = 0.0;
        for i in 0..n {
            let u = s.uniform(i);
            assert!((0.0..1.0).contains(&u));
            bins[(u * 10.0) as usize] += 1;
            sum += u;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.005);
        let expected = n as f64 / 10.0;
        let chi2: f64 = bins
            .iter()
            .map(|&b| (b as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 27.88, "chi2 = {chi2}"); // 0.001 quantile, 9 dof
    }
}
