//! Bit-packed path coordinate history and mask keys.
//!
//! Each time point of a path carries a forward/backward eigenvalue pair,
//! packed into 2 bits (`code = fwd_bit << 1 | bwd_bit`, `0` = +1, `1` = -1).
//! Histories are lag-indexed: lag 0 is the newest point and lives in the low
//! bits, so pushing a point is a left shift of the whole word sequence.
//! Swapping the forward and backward branches of every point (the conjugate
//! mirror of a path) is a bit transpose within each 2-bit field.

use smallvec::SmallVec;

const PAIRS_PER_WORD: usize = 32;
const FWD_BITS: u64 = 0xAAAA_AAAA_AAAA_AAAA; // bit 1 of each field
const BWD_BITS: u64 = 0x5555_5555_5555_5555; // bit 0 of each field

/// Pair codes: 0 = (+,+), 1 = (+,-), 2 = (-,+), 3 = (-,-).
#[inline]
pub fn pair_code(fwd_bit: u64, bwd_bit: u64) -> u8 {
    ((fwd_bit << 1) | bwd_bit) as u8
}

/// Exchange forward and backward branches of a packed pair code.
#[inline]
pub fn swap_pair(code: u8) -> u8 {
    ((code & 0b10) >> 1) | ((code & 0b01) << 1)
}

/// True if the pair is diagonal (both branches equal).
#[inline]
pub fn pair_is_diagonal(code: u8) -> bool {
    code == 0 || code == 3
}

#[inline]
fn swap_word(w: u64) -> u64 {
    ((w & FWD_BITS) >> 1) | ((w & BWD_BITS) << 1)
}

/// Lag-indexed packed history of (σ⁺, σ⁻) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct History {
    len: u32,
    words: SmallVec<[u64; 2]>,
}

impl History {
    pub fn empty() -> Self {
        History {
            len: 0,
            words: SmallVec::new(),
        }
    }

    pub fn single(code: u8) -> Self {
        let mut words = SmallVec::new();
        words.push(code as u64);
        History { len: 1, words }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Pair code at `lag`; lags at or beyond the stored length read as 0.
    #[inline]
    pub fn pair(&self, lag: usize) -> u8 {
        if lag >= self.len as usize {
            return 0;
        }
        let word = lag / PAIRS_PER_WORD;
        let shift = 2 * (lag % PAIRS_PER_WORD);
        ((self.words[word] >> shift) & 0b11) as u8
    }

    /// New history with `code` inserted at lag 0 (everything else ages).
    pub fn pushed(&self, code: u8) -> History {
        let new_len = self.len + 1;
        let need_words = (new_len as usize).div_ceil(PAIRS_PER_WORD);
        let mut words: SmallVec<[u64; 2]> = SmallVec::with_capacity(need_words);
        let mut carry = code as u64;
        for w in &self.words {
            words.push((w << 2) | carry);
            carry = w >> (64 - 2);
        }
        if words.len() < need_words {
            words.push(carry);
        }
        History {
            len: new_len,
            words,
        }
    }

    /// Drop points older than `max_pairs` lags.
    pub fn truncate(&mut self, max_pairs: usize) {
        if self.len as usize <= max_pairs {
            return;
        }
        self.len = max_pairs as u32;
        let need_words = max_pairs.div_ceil(PAIRS_PER_WORD);
        self.words.truncate(need_words.max(1));
        let tail_pairs = max_pairs % PAIRS_PER_WORD;
        if tail_pairs != 0 {
            let keep_mask = (1u64 << (2 * tail_pairs)) - 1;
            if let Some(last) = self.words.last_mut() {
                *last &= keep_mask;
            }
        }
        if max_pairs == 0 {
            self.words.clear();
        }
    }

    /// The conjugate mirror: forward/backward swapped at every lag.
    pub fn swapped(&self) -> History {
        History {
            len: self.len,
            words: self.words.iter().map(|w| swap_word(*w)).collect(),
        }
    }

    /// Gather the pairs at `lags` (each < 32 entries) into one key word.
    #[inline]
    pub fn key(&self, lags: &[u32]) -> u64 {
        let mut k = 0u64;
        for (slot, &lag) in lags.iter().enumerate() {
            k |= (self.pair(lag as usize) as u64) << (2 * slot);
        }
        k
    }

    /// Low word of the packed history; distinguishes histories completely
    /// whenever they are at most 32 pairs long.
    #[inline]
    pub fn low_word(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }
}

/// Combined mask key over both coordinate sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key {
    pub z: u64,
    pub x: u64,
}

impl Key {
    #[inline]
    pub fn swapped(self) -> Key {
        Key {
            z: swap_word(self.z),
            x: swap_word(self.x),
        }
    }

    /// Keys are canonical when not lexicographically above their mirror.
    #[inline]
    pub fn is_canonical(self) -> bool {
        self <= self.swapped()
    }

    #[inline]
    pub fn is_self_paired(self) -> bool {
        self == self.swapped()
    }

    /// Pair code at the first z-mask slot (lag 0 by construction).
    #[inline]
    pub fn newest_z_pair(self) -> u8 {
        (self.z & 0b11) as u8
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_and_read_lags() {
        let mut h = History::empty();
        let codes = [1u8, 0, 3, 2, 1, 1, 0, 3];
        for c in codes {
            h = h.pushed(c);
        }
        for (age, c) in codes.iter().rev().enumerate() {
            assert_eq!(h.pair(age), *c);
        }
        assert_eq!(h.pair(100), 0);
    }

    #[test]
    fn push_crosses_word_boundary() {
        let mut h = History::empty();
        for i in 0..70u32 {
            h = h.pushed((i % 4) as u8);
        }
        assert_eq!(h.len(), 70);
        for lag in 0..70usize {
            let expect = ((69 - lag) % 4) as u8;
            assert_eq!(h.pair(lag), expect, "lag {lag}");
        }
    }

    #[test]
    fn truncate_keeps_newest() {
        let mut h = History::empty();
        for i in 0..40u32 {
            h = h.pushed((i % 4) as u8);
        }
        h.truncate(5);
        assert_eq!(h.len(), 5);
        for lag in 0..5usize {
            assert_eq!(h.pair(lag), ((39 - lag) % 4) as u8);
        }
        assert_eq!(h.pair(5), 0);
    }

    #[test]
    fn swap_is_involution_and_transposes_offdiagonals() {
        let mut h = History::empty();
        for c in [0u8, 1, 2, 3, 1, 2] {
            h = h.pushed(c);
        }
        let s = h.swapped();
        assert_eq!(s.swapped(), h);
        for lag in 0..h.len() {
            assert_eq!(s.pair(lag), swap_pair(h.pair(lag)));
        }
    }

    #[test]
    fn key_gathers_masked_lags() {
        let mut h = History::empty();
        for c in [3u8, 1, 0, 2, 1] {
            h = h.pushed(c);
        }
        // history newest-first: 1, 2, 0, 1, 3
        let k = h.key(&[0, 1, 3]);
        assert_eq!(k & 0b11, 1);
        assert_eq!((k >> 2) & 0b11, 2);
        assert_eq!((k >> 4) & 0b11, 1);
    }

    #[test]
    fn canonical_key_ordering() {
        let k = Key { z: 0b01, x: 0 }; // (+,-) at lag 0
        assert!(k.is_canonical());
        assert!(!k.swapped().is_canonical());
        let d = Key { z: 0b11, x: 0b00 };
        assert!(d.is_self_paired());
        assert!(d.is_canonical());
    }
}
