//! Counter-based random substreams.
//!
//! Every replica draws from its own stream, keyed by the 64-bit master seed
//! and addressed by the replica index. The generator is Philox4x32-10
//! (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3", SC'11):
//!
//! ```text
//! key     = (seed & 0xffffffff, seed >> 32)
//! counter = (block_lo, block_hi, replica_lo, replica_hi)
//! output  = philox4x32_10(counter, key)      // four u32 words per block
//! ```
//!
//! Block `b` of replica `i` is a pure function of `(seed, i, b)`, so a replica
//! produces the same numbers on any thread, in any order, on any platform,
//! and two replicas can never share a block.

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

#[inline(always)]
fn round(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let (hi0, lo0) = mulhilo(PHILOX_M0, ctr[0]);
    let (hi1, lo1) = mulhilo(PHILOX_M1, ctr[2]);
    [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0]
}

/// The Philox4x32 bijection with 10 rounds.
pub fn philox4x32_10(mut ctr: [u32; 4], mut key: [u32; 2]) -> [u32; 4] {
    for i in 0..10 {
        if i > 0 {
            key[0] = key[0].wrapping_add(PHILOX_W0);
            key[1] = key[1].wrapping_add(PHILOX_W1);
        }
        ctr = round(ctr, key);
    }
    ctr
}

/// Random stream of one replica.
#[derive(Debug, Clone)]
pub struct Substream {
    key: [u32; 2],
    replica: u64,
    block: u64,
    buf: [u32; 4],
    pos: usize,
}

/// Master seed of an independent family of substreams. The domain label is
/// encrypted under the seed with replica index `u64::MAX`, which ordinary
/// substreams never reach in practice.
pub fn derive_seed(seed: u64, domain: u64) -> u64 {
    let out = philox4x32_10(
        [domain as u32, (domain >> 32) as u32, u32::MAX, u32::MAX],
        [seed as u32, (seed >> 32) as u32],
    );
    u64::from(out[0]) | (u64::from(out[1]) << 32)
}

impl Substream {
    pub fn new(seed: u64, replica: u64) -> Self {
        Self {
            key: [seed as u32, (seed >> 32) as u32],
            replica,
            block: 0,
            buf: [0; 4],
            pos: 4,
        }
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }

    /// Number of 32-bit words consumed so far.
    pub fn words_used(&self) -> u64 {
        if self.pos == 4 && self.block == 0 {
            0
        } else {
            (self.block - 1) * 4 + self.pos as u64
        }
    }

    #[inline]
    fn refill(&mut self) {
        let ctr = [
            self.block as u32,
            (self.block >> 32) as u32,
            self.replica as u32,
            (self.replica >> 32) as u32,
        ];
        self.buf = philox4x32_10(ctr, self.key);
        self.block += 1;
        self.pos = 0;
    }
}

impl RngCore for Substream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        if self.pos == 4 {
            self.refill();
        }
        let v = self.buf[self.pos];
        self.pos += 1;
        v
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        let lo = u64::from(self.next_u32());
        let hi = u64::from(self.next_u32());
        (hi << 32) | lo
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(4) {
            let w = self.next_u32().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }
}
