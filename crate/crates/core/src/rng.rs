//! Seed derivation and lazily materialized random bit sequences.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream keyed by
//! a [`TrialSeed`] (master seed plus trial index) and selected by a [`Role`].
//! ChaCha8 has a 256-bit key and a 64-bit stream selector, so trials and
//! roles never share a stream.

use std::collections::{BTreeMap, VecDeque};

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Master seed plus trial index. Each distinct value owns an independent
/// family of streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrialSeed {
    pub master: u64,
    pub trial: u64,
}

impl TrialSeed {
    pub fn new(master: u64, trial: u64) -> Self {
        Self { master, trial }
    }

    /// Stream for `role`.
    pub fn rng(self, role: Role) -> ChaCha8Rng {
        self.rng_indexed(role, 0)
    }

    /// Stream for `role`, sub-streamed by `index` (resampling attempts and the like).
    pub fn rng_indexed(self, role: Role, index: u32) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master.to_le_bytes());
        key[8..16].copy_from_slice(&self.trial.to_le_bytes());
        key[16..24].copy_from_slice(b"ttlab-v1");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(((index as u64) << 16) | role as u64);
        rng
    }
}

impl From<u64> for TrialSeed {
    fn from(master: u64) -> Self {
        Self { master, trial: 0 }
    }
}

/// What a stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Role {
    SceneryRight = 1,
    SceneryLeft = 2,
    PathRight = 3,
    PathLeft = 4,
    SceneryExtension = 5,
    CoupleForward = 6,
    CoupleBackward = 7,
    Flips = 8,
    SecondPath = 9,
    Window = 10,
    Permutation = 11,
    Auxiliary = 12,
}

/// Sequential fair bits drawn 32 at a time.
pub struct BitSource {
    rng: ChaCha8Rng,
    word: u32,
    left: u32,
}

impl BitSource {
    pub fn new(rng: ChaCha8Rng) -> Self {
        Self {
            rng,
            word: 0,
            left: 0,
        }
    }

    #[inline]
    pub fn next_bit(&mut self) -> bool {
        if self.left == 0 {
            self.word = self.rng.next_u32();
            self.left = 32;
        }
        let bit = self.word & 1 == 1;
        self.word >>= 1;
        self.left -= 1;
        bit
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Bit `k` of a stream is bit `k % 32` of 32-bit word `k / 32`; reads are
/// positioned with `set_word_pos`, so any range can be produced on demand.
fn stream_bits(rng: &mut ChaCha8Rng, from: u64, count: u64, out: &mut Vec<bool>) {
    if count == 0 {
        return;
    }
    rng.set_word_pos((from / 32) as u128);
    let mut word = rng.next_u32() >> (from % 32);
    let mut left = 32 - (from % 32) as u32;
    for _ in 0..count {
        if left == 0 {
            word = rng.next_u32();
            left = 32;
        }
        out.push(word & 1 == 1);
        word >>= 1;
        left -= 1;
    }
}

const CHUNK: i64 = 256;

/// Doubly infinite fair-bit sequence materialized on demand.
///
/// The value at index `x` is a pure function of the seed and `x` (or the pin
/// at `x`), so the order of queries never changes what is observed.
/// Materialized indices always form one contiguous interval.
#[derive(Clone, Debug)]
pub(crate) struct LazyBits {
    right: ChaCha8Rng,
    left: ChaCha8Rng,
    lo: i64,
    bits: VecDeque<bool>,
    pins: BTreeMap<i64, bool>,
}

impl LazyBits {
    pub(crate) fn new(seed: TrialSeed, right: Role, left: Role) -> Self {
        Self {
            right: seed.rng(right),
            left: seed.rng(left),
            lo: 0,
            bits: VecDeque::new(),
            pins: BTreeMap::new(),
        }
    }

    pub(crate) fn range(&self) -> Option<(i64, i64)> {
        if self.bits.is_empty() {
            None
        } else {
            Some((self.lo, self.lo + self.bits.len() as i64 - 1))
        }
    }

    pub(crate) fn pins(&self) -> &BTreeMap<i64, bool> {
        &self.pins
    }

    /// Fixes the value at `x`. Fails if `x` is already materialized with the
    /// other value.
    pub(crate) fn pin(&mut self, x: i64, value: bool) -> Result<(), i64> {
        if let Some(current) = self.peek(x) {
            if current != value {
                return Err(x);
            }
        }
        self.pins.insert(x, value);
        Ok(())
    }

    #[inline]
    pub(crate) fn peek(&self, x: i64) -> Option<bool> {
        let i = x - self.lo;
        if i >= 0 && (i as usize) < self.bits.len() {
            Some(self.bits[i as usize])
        } else {
            None
        }
    }

    #[inline]
    pub(crate) fn get(&mut self, x: i64) -> bool {
        if let Some(b) = self.peek(x) {
            return b;
        }
        self.grow_to(x);
        self.bits[(x - self.lo) as usize]
    }

    /// Materializes exactly `[a, b]` (plus whatever is already present and
    /// the gap between).
    pub(crate) fn ensure(&mut self, a: i64, b: i64) {
        if a > b {
            return;
        }
        match self.range() {
            None => {
                let vals = self.produce(a, b);
                self.lo = a;
                self.bits = vals.into();
            }
            Some((lo, hi)) => {
                if a < lo {
                    let vals = self.produce(a, lo - 1);
                    for v in vals.into_iter().rev() {
                        self.bits.push_front(v);
                    }
                    self.lo = a;
                }
                if b > hi {
                    let vals = self.produce(hi + 1, b);
                    self.bits.extend(vals);
                }
            }
        }
    }

    fn grow_to(&mut self, x: i64) {
        match self.range() {
            None => self.ensure(x, x),
            Some((lo, hi)) => {
                let pad = CHUNK.max(self.bits.len() as i64 / 4);
                if x < lo {
                    self.ensure(x.min(lo - pad), hi);
                } else {
                    self.ensure(lo, x.max(hi + pad));
                }
            }
        }
    }

    /// Values for `[a, b]` in ascending index order.
    fn produce(&mut self, a: i64, b: i64) -> Vec<bool> {
        let mut out = Vec::with_capacity((b - a + 1) as usize);
        if a < 0 {
            // index x < 0 is bit (-x - 1) of the left stream
            let top = b.min(-1);
            let mut tmp = Vec::with_capacity((top - a + 1) as usize);
            stream_bits(
                &mut self.left,
                (-top - 1) as u64,
                (top - a + 1) as u64,
                &mut tmp,
            );
            out.extend(tmp.into_iter().rev());
        }
        if b >= 0 {
            let from = a.max(0);
            stream_bits(
                &mut self.right,
                from as u64,
                (b - from + 1) as u64,
                &mut out,
            );
        }
        for (&x, &v) in self.pins.range(a..=b) {
            out[(x - a) as usize] = v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_do_not_depend_on_query_order() {
        let seed = TrialSeed::new(7, 3);
        let mut a = LazyBits::new(seed, Role::SceneryRight, Role::SceneryLeft);
        let mut b = LazyBits::new(seed, Role::SceneryRight, Role::SceneryLeft);
        let xs: Vec<i64> = (-700..700).collect();
        let forward: Vec<bool> = xs.iter().map(|&x| a.get(x)).collect();
        let backward: Vec<bool> = xs.iter().rev().map(|&x| b.get(x)).collect();
        assert!(forward.iter().eq(backward.iter().rev()));
    }

    #[test]
    fn pins_override_and_conflicts_are_reported() {
        let mut a = LazyBits::new(TrialSeed::from(1), Role::PathRight, Role::PathLeft);
        a.pin(5, true).unwrap();
        a.pin(-5, false).unwrap();
        assert!(a.get(5));
        assert!(!a.get(-5));
        let v = a.get(0);
        assert_eq!(a.pin(0, !v), Err(0));
        assert!(a.pin(0, v).is_ok());
    }

    #[test]
    fn distinct_trials_and_roles_differ() {
        let take = |seed: TrialSeed, role: Role| {
            let mut s = BitSource::new(seed.rng(role));
            (0..128).map(|_| s.next_bit()).collect::<Vec<_>>()
        };
        let base = take(TrialSeed::new(1, 0), Role::PathRight);
        assert_ne!(base, take(TrialSeed::new(1, 1), Role::PathRight));
        assert_ne!(base, take(TrialSeed::new(2, 0), Role::PathRight));
        assert_ne!(base, take(TrialSeed::new(1, 0), Role::PathLeft));
    }

    #[test]
    fn stream_bits_random_access_matches_sequential() {
        let seed = TrialSeed::new(9, 9);
        let mut seq = BitSource::new(seed.rng(Role::Auxiliary));
        let all: Vec<bool> = (0..1000).map(|_| seq.next_bit()).collect();
        let mut rng = seed.rng(Role::Auxiliary);
        let mut part = Vec::new();
        stream_bits(&mut rng, 37, 500, &mut part);
        assert_eq!(&all[37..537], &part[..]);
    }
}
