use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::process::{
    generate_output, step_value, Cell, RandomPath, Scenery, Step, Symbol, TTOutput,
};
use crate::rng::TrialSeed;
use crate::stats::{empirical_law, tv_distance};

/// Longest window whose symbols pack into a [`window_key`].
const MAX_KEY_LEN: i64 = 32;
/// Cap on free path bits and free cells in exact enumeration.
const MAX_FREE_BITS: usize = 22;

/// The process conditioned on its output over a window containing time 0.
///
/// Conditioning fixes the window's steps and the cells the window reads;
/// every other step and cell stays an independent fair coin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionedLaw {
    word: TTOutput,
    cells: BTreeMap<i64, Cell>,
}

impl ConditionedLaw {
    pub fn new(word: TTOutput) -> Result<Self> {
        if word.is_empty() {
            return Ok(Self::unconditioned());
        }
        if !word.contains(0) {
            return Err(Error::WindowNotAnchored {
                lo: word.start(),
                hi: word.end(),
            });
        }
        let word = crate::process::validate_output(word.symbols().to_vec(), word.start())?;
        let cells = word.positions().into_iter().zip(word.cells()).collect();
        Ok(Self { word, cells })
    }

    /// No conditioning at all.
    pub fn unconditioned() -> Self {
        Self {
            word: TTOutput::empty(0),
            cells: BTreeMap::new(),
        }
    }

    /// Conditions on the output a fresh process shows on `[-n, n]`.
    pub fn sampled(seed: impl Into<TrialSeed>, n: i64) -> Result<Self> {
        if n < 0 {
            return Err(Error::InvalidParameter(format!("window half-width {n}")));
        }
        let seed = seed.into();
        let path = RandomPath::new(seed).segment(-n, n);
        Self::new(generate_output(&mut Scenery::new(seed), &path, -n, n)?)
    }

    pub fn word(&self) -> &TTOutput {
        &self.word
    }

    pub fn window_lo(&self) -> i64 {
        self.word.start()
    }

    pub fn window_hi(&self) -> i64 {
        self.word.end()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// Pinned cells keyed by offset, with offset 0 under the walker at time 0.
    pub fn pinned_cells(&self) -> &BTreeMap<i64, Cell> {
        &self.cells
    }

    /// Largest `|t|` over the window's times (0 when unconditioned).
    pub fn reach(&self) -> i64 {
        if self.is_empty() {
            0
        } else {
            self.window_lo().abs().max(self.window_hi().abs())
        }
    }

    pub(crate) fn pin_into(&self, scenery: &mut Scenery, path: &mut RandomPath) -> Result<()> {
        for (t, s) in (self.window_lo()..).zip(self.word.symbols()) {
            path.pin(t, s.step)?;
        }
        for (&x, &c) in &self.cells {
            scenery.pin(x, c)?;
        }
        Ok(())
    }
}

/// Draws the output on `[-horizon, horizon]` of the process conditioned on `law`.
pub fn sample_conditioned(
    law: &ConditionedLaw,
    horizon: i64,
    seed: impl Into<TrialSeed>,
) -> Result<TTOutput> {
    if horizon < law.reach() {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} is shorter than the conditioning window"
        )));
    }
    let seed = seed.into();
    let mut scenery = Scenery::new(seed);
    let mut path = RandomPath::new(seed);
    law.pin_into(&mut scenery, &mut path)?;
    let seg = path.segment(-horizon, horizon);
    generate_output(&mut scenery, &seg, -horizon, horizon)
}

/// Packs the symbols at times `lo..=hi` into an integer, two bits per symbol
/// with time `lo` in the lowest bits.
pub fn window_key(output: &TTOutput, lo: i64, hi: i64) -> Result<u64> {
    if hi - lo + 1 > MAX_KEY_LEN {
        return Err(Error::InvalidParameter(format!(
            "window [{lo}, {hi}] is too long to key"
        )));
    }
    let mut key = 0u64;
    for t in (lo..=hi).rev() {
        key = (key << 2) | output.at(t)?.index() as u64;
    }
    Ok(key)
}

/// Counts of window contents over many outputs.
#[derive(Clone, Debug)]
pub struct WindowHistogram {
    lo: i64,
    hi: i64,
    counts: HashMap<u64, u64>,
}

impl WindowHistogram {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi || hi - lo + 1 > MAX_KEY_LEN {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self {
            lo,
            hi,
            counts: HashMap::new(),
        })
    }

    pub fn add(&mut self, output: &TTOutput) -> Result<()> {
        *self
            .counts
            .entry(window_key(output, self.lo, self.hi)?)
            .or_default() += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &WindowHistogram) {
        for (&k, &c) in &other.counts {
            *self.counts.entry(k).or_default() += c;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn law(&self) -> HashMap<u64, f64> {
        empirical_law(&self.counts)
    }

    pub fn tv_to(&self, law: &HashMap<u64, f64>) -> f64 {
        tv_distance(&self.law(), law)
    }
}

/// Exact law of the output on `[lo, hi]` under `law`, keyed by [`window_key`].
///
/// Enumerates every assignment of the free steps in `[lo, hi]` and, for each
/// resulting walk, every assignment of the unpinned cells it visits.
pub fn enumerate_conditional_law(
    law: &ConditionedLaw,
    lo: i64,
    hi: i64,
) -> Result<HashMap<u64, f64>> {
    if lo > 0 || hi < 0 || (!law.is_empty() && (lo > law.window_lo() || hi < law.window_hi())) {
        return Err(Error::InvalidInterval { lo, hi });
    }
    if hi - lo + 1 > MAX_KEY_LEN {
        return Err(Error::InvalidParameter(format!(
            "window [{lo}, {hi}] is too long to key"
        )));
    }
    let free_times: Vec<i64> = (lo..=hi)
        .filter(|&t| law.is_empty() || t < law.window_lo() || t > law.window_hi())
        .collect();
    if free_times.len() > MAX_FREE_BITS {
        return Err(Error::InvalidParameter(
            "too many free steps to enumerate".into(),
        ));
    }
    let len = (hi - lo + 1) as usize;
    let mut steps = vec![Step::L; len];
    if !law.is_empty() {
        for (t, s) in (law.window_lo()..).zip(law.word().steps()) {
            steps[(t - lo) as usize] = s;
        }
    }
    let mut result: HashMap<u64, f64> = HashMap::new();
    for mask in 0u64..1 << free_times.len() {
        for (i, &t) in free_times.iter().enumerate() {
            steps[(t - lo) as usize] = Step::from_bit(mask >> i & 1 == 1);
        }
        // positions with offset 0 at time 0
        let zero = (-lo) as usize;
        let mut pos = vec![0i64; len];
        for i in zero + 1..len {
            pos[i] = pos[i - 1] + step_value(steps[i - 1]);
        }
        for i in (0..zero).rev() {
            pos[i] = pos[i + 1] - step_value(steps[i]);
        }
        let vlo = *pos.iter().min().unwrap();
        let vhi = *pos.iter().max().unwrap();
        let free_cells: Vec<i64> = (vlo..=vhi)
            .filter(|x| !law.pinned_cells().contains_key(x))
            .collect();
        if free_cells.len() > MAX_FREE_BITS {
            return Err(Error::InvalidParameter(
                "too many free cells to enumerate".into(),
            ));
        }
        let weight = 0.5f64.powi((free_times.len() + free_cells.len()) as i32);
        let mut cells: HashMap<i64, Cell> =
            law.pinned_cells().iter().map(|(&x, &c)| (x, c)).collect();
        for cmask in 0u64..1 << free_cells.len() {
            for (i, &x) in free_cells.iter().enumerate() {
                cells.insert(x, Cell::from_bit(cmask >> i & 1 == 1));
            }
            let mut key = 0u64;
            for i in (0..len).rev() {
                key = (key << 2) | Symbol::new(cells[&pos[i]], steps[i]).index() as u64;
            }
            *result.entry(key).or_default() += weight;
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::validate_output;

    #[test]
    fn window_must_hold_time_zero() {
        let w = validate_output(vec![Symbol::new(Cell::H, Step::L)], 3).unwrap();
        assert_eq!(
            ConditionedLaw::new(w),
            Err(Error::WindowNotAnchored { lo: 3, hi: 3 })
        );
    }

    #[test]
    fn sample_restricts_to_the_word() {
        let law = ConditionedLaw::sampled(5, 3).unwrap();
        for s in 0..20 {
            let o = sample_conditioned(&law, 10, TrialSeed::new(99, s)).unwrap();
            assert_eq!(&o.restrict(-3, 3).unwrap(), law.word());
            assert_eq!((o.start(), o.end()), (-10, 10));
        }
        assert!(sample_conditioned(&law, 2, 1).is_err());
    }

    #[test]
    fn enumerated_law_sums_to_one() {
        let law = ConditionedLaw::sampled(8, 1).unwrap();
        let exact = enumerate_conditional_law(&law, -3, 3).unwrap();
        let total: f64 = exact.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let free = enumerate_conditional_law(&ConditionedLaw::unconditioned(), 0, 0).unwrap();
        assert_eq!(free.len(), 4);
        assert!(free.values().all(|&p| (p - 0.25).abs() < 1e-12));
    }

    #[test]
    fn keys_agree_with_enumeration() {
        let law = ConditionedLaw::sampled(2, 1).unwrap();
        let exact = enumerate_conditional_law(&law, -1, 1).unwrap();
        assert_eq!(exact.len(), 1);
        let key = window_key(law.word(), -1, 1).unwrap();
        assert!((exact[&key] - 1.0).abs() < 1e-12);
    }
}
