//! Counter-based random streams.
//!
//! Every random quantity in a realization is a pure function of a key
//! `(seed, domain, level, index)`: the key is hashed into the state of a short
//! SplitMix64 stream. Node weights therefore do not depend on traversal order
//! or thread scheduling, and a realization of depth `n + 1` shares all node
//! weights with the depth-`n` one.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream domains. Node weights and auxiliary draws never share keys.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    NodeWeight = 1,
    TiltedPath = 2,
    LevelSelect = 3,
    Auxiliary = 4,
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A SplitMix64 stream positioned by a hashed key.
#[derive(Clone, Debug)]
pub struct KeyedRng {
    state: u64,
}

impl KeyedRng {
    pub fn new(seed: u64, domain: Domain, level: u64, index: u64) -> Self {
        let mut h = mix64(seed.wrapping_add(GOLDEN));
        h = mix64(h ^ (domain as u64).wrapping_mul(GOLDEN));
        h = mix64(h ^ level.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        h = mix64(h ^ index.wrapping_mul(0xA076_1D64_78BD_642F));
        KeyedRng { state: h }
    }

    /// Stream for the weight `W(w)` of the node `w` at `level` with integer code `index`.
    pub fn node(seed: u64, level: usize, index: u64) -> Self {
        Self::new(seed, Domain::NodeWeight, level as u64, index)
    }
}

impl RngCore for KeyedRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
