//! Counter-based random streams.
//!
//! Every draw is a pure function of `(master_seed, stream_index, counter)`
//! through the Philox4x32-10 block cipher, so a replication's random input
//! depends only on its stream index and never on which worker ran it or in
//! what order.

use rand_core::RngCore;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;
const PHILOX_ROUNDS: usize = 10;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// One Philox4x32-10 block: encrypts `ctr` under `key`.
#[inline]
pub fn philox4x32(mut ctr: [u32; 4], mut key: [u32; 2]) -> [u32; 4] {
    for round in 0..PHILOX_ROUNDS {
        if round > 0 {
            key[0] = key[0].wrapping_add(PHILOX_W0);
            key[1] = key[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, ctr[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0];
    }
    ctr
}

/// A single-owner random stream keyed by `(master_seed, stream_index)`.
///
/// The 128-bit Philox counter holds the block counter in its low half and the
/// stream index in its high half; the key is the master seed. Distinct stream
/// indices therefore never share a counter value.
#[derive(Debug, Clone)]
pub struct RngStream {
    key: [u32; 2],
    stream: u64,
    block: u64,
    buf: [u32; 4],
    // index of the next unused word in `buf`; 4 means empty
    pos: usize,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            key: [master_seed as u32, (master_seed >> 32) as u32],
            stream: stream_index,
            block: 0,
            buf: [0; 4],
            pos: 4,
        }
    }

    pub fn stream_index(&self) -> u64 {
        self.stream
    }

    /// Number of 32-bit words consumed so far.
    pub fn words_consumed(&self) -> u64 {
        self.block * 4 - (4 - self.pos as u64)
    }

    #[inline]
    fn refill(&mut self) {
        let ctr = [
            self.block as u32,
            (self.block >> 32) as u32,
            self.stream as u32,
            (self.stream >> 32) as u32,
        ];
        self.buf = philox4x32(ctr, self.key);
        self.block += 1;
        self.pos = 0;
    }

    #[inline]
    fn word(&mut self) -> u32 {
        if self.pos == 4 {
            self.refill();
        }
        let w = self.buf[self.pos];
        self.pos += 1;
        w
    }

    /// Uniform draw in the open interval (0, 1) with 53 bits of resolution.
    #[inline]
    pub fn open01(&mut self) -> f64 {
        let bits = self.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw.
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        use rand_distr::{Distribution, StandardNormal};
        StandardNormal.sample(self)
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.word()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        let lo = u64::from(self.word());
        let hi = u64::from(self.word());
        (hi << 32) | lo
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(4) {
            let w = self.word().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Known-answer vectors from the Random123 distribution (kat_vectors).
    #[test]
    fn philox_known_answers() {
        assert_eq!(
            philox4x32([0, 0, 0, 0], [0, 0]),
            [0x6627_e8d5, 0xe169_c58d, 0xbc57_ac4c, 0x9b00_dbd8]
        );
        assert_eq!(
            philox4x32([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f_276d, 0x41c8_3b0e, 0xa20b_c7c6, 0x6d54_51fd]
        );
        assert_eq!(
            philox4x32(
                [0x243f_6a88, 0x85a3_08d3, 0x1319_8a2e, 0x0370_7344],
                [0xa409_3822, 0x299f_31d0]
            ),
            [0xd16c_fe09, 0x94fd_cceb, 0x5001_e420, 0x2412_6ea1]
        );
    }

    #[test]
    fn same_key_same_sequence() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_eq!(a.words_consumed(), 200);
    }

    #[test]
    fn streams_differ() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 4);
        let mut c = RngStream::new(8, 3);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_ne!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn open01_in_range_with_correct_mean() {
        let mut r = RngStream::new(1, 0);
        let n = 200_000;
        let mut s = 0.0;
        for _ in 0..n {
            let u = r.open01();
            assert!(u > 0.0 && u < 1.0);
            s += u;
        }
        let mean = s / n as f64;
        // SE = sqrt(1/12 / n) ~ 6.5e-4
        assert!((mean - 0.5).abs() < 4.0 * 6.5e-4, "mean {mean}");
    }

    #[test]
    fn fill_bytes_matches_words() {
        let mut a = RngStream::new(11, 2);
        let mut b = RngStream::new(11, 2);
        let mut buf = [0u8; 6];
        a.fill_bytes(&mut buf);
        let w0 = b.next_u32().to_le_bytes();
        let w1 = b.next_u32().to_le_bytes();
        assert_eq!(&buf[..4], &w0);
        assert_eq!(&buf[4..], &w1[..2]);
    }
}
