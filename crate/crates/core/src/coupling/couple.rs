use serde::Serialize;

use super::conditioned::{enumerate_conditional_law, ConditionedLaw, WindowHistogram};
use crate::error::{Error, Result};
use crate::process::{
    generate_output, generate_with, step_value, Cell, PathSegment, RandomPath, Scenery, Shifted,
    Step, TTOutput,
};
use crate::rng::{BitSource, Role, TrialSeed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoupleStatus {
    Success,
    HorizonExceeded,
}

/// One run of the window coupling.
///
/// `p` follows the first conditioned law and `q` the second. Symbols agree at
/// every time `>= lock_fwd` and `<= lock_bwd`. The outputs cover
/// `[lock_bwd - tail, lock_fwd + tail]`, with `±horizon` standing in for a
/// side that never locked.
#[derive(Clone, Debug, Serialize)]
pub struct CouplingTranscript {
    pub seed: u64,
    pub trial: u64,
    /// `None` when no matching scenery word was found within the search limit.
    pub shift: Option<i64>,
    pub lock_fwd: Option<i64>,
    pub lock_bwd: Option<i64>,
    pub status: CoupleStatus,
    #[serde(skip)]
    pub p: TTOutput,
    #[serde(skip)]
    pub q: TTOutput,
}

/// Settings for [`couple`].
#[derive(Clone, Debug)]
pub struct Coupler {
    /// Latest forward lock time, and negated, earliest backward one.
    pub horizon: i64,
    /// Agreeing symbols kept in the transcript beyond each lock.
    pub tail: i64,
    /// Largest start offset tried when searching the scenery for the word.
    pub search_limit: i64,
    /// When false, the second process reads the first one's scenery
    /// untranslated. Only useful to check that the harness notices.
    pub shift_scenery: bool,
}

impl Coupler {
    pub fn new(horizon: i64) -> Self {
        Self {
            horizon,
            tail: 32,
            search_limit: 1 << 24,
            shift_scenery: true,
        }
    }

    /// Couples the process conditioned on `g` with the one conditioned on `h`.
    ///
    /// The first process is sampled from `g`. Its scenery is searched to the
    /// right for a copy of the cells `h` reads (padded with fair coins to the
    /// whole window) and the second process reads the first one's scenery
    /// through that translation. Outside the window the second walk moves
    /// independently until the difference of the two walks equals the
    /// translation, and copies the first walk's steps from then on. The same
    /// happens backwards in time.
    pub fn run(
        &self,
        g: &ConditionedLaw,
        h: &ConditionedLaw,
        seed: TrialSeed,
    ) -> Result<CouplingTranscript> {
        let n = symmetric_half_width(g)?;
        if symmetric_half_width(h)? != n {
            return Err(Error::WindowMismatch {
                lo1: g.window_lo(),
                hi1: g.window_hi(),
                lo2: h.window_lo(),
                hi2: h.window_hi(),
            });
        }
        if self.horizon <= n || self.tail < 0 {
            return Err(Error::InvalidParameter(format!(
                "horizon {} must exceed the half-width {n}",
                self.horizon
            )));
        }
        let mut transcript = CouplingTranscript {
            seed: seed.master,
            trial: seed.trial,
            shift: None,
            lock_fwd: None,
            lock_bwd: None,
            status: CoupleStatus::HorizonExceeded,
            p: TTOutput::empty(0),
            q: TTOutput::empty(0),
        };

        let mut scenery = Scenery::new(seed);
        let mut path = RandomPath::new(seed);
        g.pin_into(&mut scenery, &mut path)?;

        let mut ext = BitSource::new(seed.rng(Role::SceneryExtension));
        let target: Vec<Cell> = (-n..=n)
            .map(|x| {
                let coin = Cell::from_bit(ext.next_bit());
                h.pinned_cells().get(&x).copied().unwrap_or(coin)
            })
            .collect();
        let Some(m) = find_word(&mut scenery, &target, n + 2, self.search_limit) else {
            return Ok(transcript);
        };
        let shift = m + n;
        transcript.shift = Some(shift);

        let window_sum = |law: &ConditionedLaw, lo: i64, hi: i64| -> i64 {
            law.word()
                .symbols()
                .iter()
                .skip((lo - law.window_lo()) as usize)
                .take((hi - lo) as usize)
                .map(|s| step_value(s.step))
                .sum()
        };
        // walk difference just after and at the start of the window
        let mut d = window_sum(g, 0, n + 1) - window_sum(h, 0, n + 1);
        let mut bits = BitSource::new(seed.rng(Role::CoupleForward));
        let mut fwd: Vec<Step> = Vec::new();
        let mut t = n + 1;
        let lock_fwd = loop {
            if d == shift {
                break Some(t);
            }
            if t == self.horizon {
                // one more step so the transcript reaches the horizon
                fwd.push(Step::from_bit(bits.next_bit()));
                break None;
            }
            let sq = Step::from_bit(bits.next_bit());
            d += step_value(path.get(t)) - step_value(sq);
            fwd.push(sq);
            t += 1;
        };

        let mut d = window_sum(h, -n, 0) - window_sum(g, -n, 0);
        let mut bits = BitSource::new(seed.rng(Role::CoupleBackward));
        let mut bwd: Vec<Step> = Vec::new();
        let mut t = -n;
        let meet_bwd = loop {
            if d == shift {
                break Some(t);
            }
            if t == -self.horizon {
                break None;
            }
            let sq = Step::from_bit(bits.next_bit());
            d += step_value(sq) - step_value(path.get(t - 1));
            bwd.push(sq);
            t -= 1;
        };
        let lock_bwd = meet_bwd.map(|t| t - 1);

        let lo = lock_bwd.map_or(-self.horizon, |l| l - self.tail);
        let hi = lock_fwd.map_or(self.horizon, |l| l + self.tail);
        let p_path = path.segment(lo, hi);
        let q_steps = (lo..=hi)
            .map(|t| {
                if t > n {
                    match lock_fwd {
                        Some(l) if t >= l => p_path.steps[(t - lo) as usize],
                        _ => fwd[(t - n - 1) as usize],
                    }
                } else if t < -n {
                    match meet_bwd {
                        Some(s) if t < s => p_path.steps[(t - lo) as usize],
                        _ => bwd[(-n - 1 - t) as usize],
                    }
                } else {
                    h.word().at(t).expect("inside the window").step
                }
            })
            .collect();
        let q_path = PathSegment::new(lo, q_steps);
        transcript.p = generate_output(&mut scenery, &p_path, lo, hi)?;
        let offset = if self.shift_scenery { shift } else { 0 };
        transcript.q = generate_with(
            &mut Shifted {
                inner: &mut scenery,
                shift: offset,
            },
            &q_path,
            lo,
            hi,
        )?;
        transcript.lock_fwd = lock_fwd;
        transcript.lock_bwd = lock_bwd;
        if lock_fwd.is_some() && lock_bwd.is_some() {
            transcript.status = CoupleStatus::Success;
        }
        Ok(transcript)
    }
}

fn symmetric_half_width(law: &ConditionedLaw) -> Result<i64> {
    if law.is_empty() || law.window_lo() != -law.window_hi() {
        return Err(Error::InvalidParameter(format!(
            "conditioning window [{}, {}] is not of the form [-N, N]",
            law.window_lo(),
            law.window_hi()
        )));
    }
    Ok(law.window_hi())
}

/// Least `m >= first` stepping by 2 with `scenery[m..m + len] == word`.
fn find_word(scenery: &mut Scenery, word: &[Cell], first: i64, limit: i64) -> Option<i64> {
    let mut m = first;
    while m <= limit {
        if word.iter().zip(m..).all(|(&c, x)| scenery.get(x) == c) {
            return Some(m);
        }
        m += 2;
    }
    None
}

/// Couples with the default transcript tail and search limit.
pub fn couple(
    g: &ConditionedLaw,
    h: &ConditionedLaw,
    horizon: i64,
    seed: impl Into<TrialSeed>,
) -> Result<CouplingTranscript> {
    Coupler::new(horizon).run(g, h, seed.into())
}

/// Total variation distance between the second processes' outputs on
/// `[-N - depth, N + depth]` and the exact law conditioned on `law`.
pub fn marginal_check(
    transcripts: &[CouplingTranscript],
    law: &ConditionedLaw,
    depth: i64,
) -> Result<f64> {
    if transcripts.is_empty() {
        return Err(Error::EmptyTranscripts);
    }
    if depth < 0 {
        return Err(Error::InvalidParameter(format!("depth {depth}")));
    }
    let n = symmetric_half_width(law)?;
    let mut hist = WindowHistogram::new(-n - depth, n + depth)?;
    for t in transcripts {
        hist.add(&t.q)?;
    }
    Ok(hist.tv_to(&enumerate_conditional_law(law, -n - depth, n + depth)?))
}
