use serde::Serialize;

use crate::error::{Error, Result};
use crate::marker::{MarkerMatcher, MARKER_LEN};
use crate::process::{step_value, RandomPath, Scenery, Step, Symbol};
use crate::rng::{BitSource, Role, TrialSeed};
use crate::stats::Correlation;

const MARKER_SPAN: i64 = MARKER_LEN as i64 - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStatus {
    Success,
    /// Every candidate second path showed a marker before the first process did.
    AttemptsExhausted,
}

/// One run of the splitting coupling.
#[derive(Clone, Debug, Serialize)]
pub struct SplitTranscript {
    pub seed: u64,
    pub trial: u64,
    pub status: SplitStatus,
    /// Start of the first marker at or after time 0 in the first process.
    pub tau: i64,
    /// Candidate second paths drawn.
    pub attempts: u32,
    /// Times in `[0, horizon)` where the two outputs differ.
    pub disagreements: u64,
    /// `(n, d_n / n)` with `d_n` the disagreements on `[0, n)`.
    pub hamming_samples: Vec<(i64, f64)>,
    pub agreement_after_tau: bool,
    pub marker_times_match: bool,
    /// Symbols at the negative times `-past_len..0` of each process.
    #[serde(skip)]
    pub past_p: Vec<Symbol>,
    #[serde(skip)]
    pub past_q: Vec<Symbol>,
}

impl SplitTranscript {
    pub fn hamming(&self, n: i64) -> Option<f64> {
        self.hamming_samples.iter().find(|s| s.0 == n).map(|s| s.1)
    }
}

/// Settings for [`split_couple`].
#[derive(Clone, Debug)]
pub struct SplitCoupler {
    pub horizon: i64,
    pub past_len: i64,
    pub max_attempts: u32,
    /// Values of `n` at which the normalized Hamming distance is recorded.
    pub checkpoints: Vec<i64>,
}

impl SplitCoupler {
    /// Checkpoints at the powers of ten below `horizon` and at `horizon`.
    pub fn new(horizon: i64) -> Self {
        let mut checkpoints: Vec<i64> = std::iter::successors(Some(10i64), |n| n.checked_mul(10))
            .take_while(|&n| n < horizon)
            .collect();
        checkpoints.push(horizon);
        Self {
            horizon,
            past_len: 16,
            max_attempts: 1024,
            checkpoints,
        }
    }

    /// Runs the first process until its first marker at `tau`, then builds a
    /// second process with its own path before `tau`, placed on the same
    /// scenery so that both walkers stand on the same cell at `tau`. Second
    /// paths that show a marker starting before `tau` are redrawn. From `tau`
    /// on the second process copies the first one's steps.
    pub fn run(&self, seed: TrialSeed) -> Result<SplitTranscript> {
        if self.horizon <= MARKER_SPAN || self.past_len < 0 {
            return Err(Error::InvalidParameter(format!("horizon {}", self.horizon)));
        }
        let mut scenery = Scenery::new(seed);
        let mut path = RandomPath::new(seed);

        let mut matcher = MarkerMatcher::new();
        let mut pos = 0i64;
        let mut found = None;
        for t in 0..self.horizon {
            let step = path.get(t);
            if matcher.push(Symbol::new(scenery.get(pos), step)) {
                found = Some((t - MARKER_SPAN, pos));
                break;
            }
            pos += step_value(step);
        }
        let Some((tau, end_pos)) = found else {
            return Err(Error::NoMarkerInHorizon);
        };
        let tau_pos = end_pos
            - (tau..tau + MARKER_SPAN)
                .map(|t| step_value(path.get(t)))
                .sum::<i64>();

        let mut transcript = SplitTranscript {
            seed: seed.master,
            trial: seed.trial,
            status: SplitStatus::AttemptsExhausted,
            tau,
            attempts: 0,
            disagreements: 0,
            hamming_samples: Vec::new(),
            agreement_after_tau: false,
            marker_times_match: false,
            past_p: Vec::new(),
            past_q: Vec::new(),
        };

        let mut accepted = None;
        for attempt in 0..self.max_attempts {
            transcript.attempts = attempt + 1;
            let mut bits = BitSource::new(seed.rng_indexed(Role::SecondPath, attempt));
            let steps: Vec<Step> = (0..tau).map(|_| Step::from_bit(bits.next_bit())).collect();
            let offset = tau_pos - steps.iter().map(|&s| step_value(s)).sum::<i64>();
            let mut matcher = MarkerMatcher::new();
            let mut pos = offset;
            let mut early = false;
            for t in 0..tau + MARKER_SPAN {
                let step = if t < tau {
                    steps[t as usize]
                } else {
                    path.get(t)
                };
                if matcher.push(Symbol::new(scenery.get(pos), step)) {
                    early = true;
                    break;
                }
                pos += step_value(step);
            }
            if !early {
                accepted = Some((steps, offset, bits));
                break;
            }
        }
        let Some((q_steps, offset, mut bits)) = accepted else {
            return Ok(transcript);
        };
        transcript.status = SplitStatus::Success;

        let mut checkpoints = self
            .checkpoints
            .iter()
            .copied()
            .filter(|&n| n > 0 && n <= self.horizon)
            .peekable();
        let (mut mp, mut mq) = (MarkerMatcher::new(), MarkerMatcher::new());
        let (mut np, mut nq) = (0i64, offset);
        let mut agree_after = true;
        let mut markers_match = true;
        for t in 0..self.horizon {
            while checkpoints.peek() == Some(&t) {
                transcript
                    .hamming_samples
                    .push((t, transcript.disagreements as f64 / t as f64));
                checkpoints.next();
            }
            let sp = path.get(t);
            let sq = if t < tau { q_steps[t as usize] } else { sp };
            let a = Symbol::new(scenery.get(np), sp);
            let b = Symbol::new(scenery.get(nq), sq);
            if a != b {
                transcript.disagreements += 1;
                if t >= tau {
                    agree_after = false;
                }
            }
            if mp.push(a) != mq.push(b) {
                markers_match = false;
            }
            np += step_value(sp);
            nq += step_value(sq);
        }
        for n in checkpoints {
            transcript
                .hamming_samples
                .push((n, transcript.disagreements as f64 / n as f64));
        }
        transcript.agreement_after_tau = agree_after;
        transcript.marker_times_match = markers_match;

        let (mut np, mut nq) = (0i64, offset);
        for t in (-self.past_len..0).rev() {
            let sp = path.get(t);
            let sq = Step::from_bit(bits.next_bit());
            np -= step_value(sp);
            nq -= step_value(sq);
            transcript.past_p.push(Symbol::new(scenery.get(np), sp));
            transcript.past_q.push(Symbol::new(scenery.get(nq), sq));
        }
        transcript.past_p.reverse();
        transcript.past_q.reverse();
        Ok(transcript)
    }
}

pub fn split_couple(seed: impl Into<TrialSeed>, horizon: i64) -> Result<SplitTranscript> {
    SplitCoupler::new(horizon).run(seed.into())
}

/// Pooled correlation between the two processes' past symbols: cell
/// indicators paired at equal times, and step indicators likewise.
/// Only successful transcripts contribute.
pub fn conditional_independence_stat(transcripts: &[SplitTranscript]) -> Result<f64> {
    let mut corr = Correlation::default();
    for t in transcripts
        .iter()
        .filter(|t| t.status == SplitStatus::Success)
    {
        for (a, b) in t.past_p.iter().zip(&t.past_q) {
            corr.add(a.cell.bit() as u8 as f64, b.cell.bit() as u8 as f64);
            corr.add(a.step.bit() as u8 as f64, b.step.bit() as u8 as f64);
        }
    }
    if corr.count() == 0 {
        return Err(Error::EmptyTranscripts);
    }
    corr.value()
        .ok_or_else(|| Error::InvalidParameter("past symbols are constant".into()))
}
