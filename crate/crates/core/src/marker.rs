//! The marker set S, the P′ labels built on it, and the marker-rewrite
//! surgery that swaps each marker for an alternate word with the same
//! scenery reads and the same walk geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{serde_cells, Cell, OutputStream, Step, Symbol, TTOutput};
use crate::rng::TrialSeed;

pub const MARKER_LEN: usize = 11;

const fn sym(cell: Cell, step: Step) -> Symbol {
    Symbol::new(cell, step)
}

const HL: Symbol = sym(Cell::H, Step::L);
const HR: Symbol = sym(Cell::H, Step::R);
const TL: Symbol = sym(Cell::T, Step::L);

/// The output word whose occurrences define S.
pub const MARKER: [Symbol; MARKER_LEN] = [HL, HL, HL, HR, HR, HL, HR, HL, HL, HL, TL];

/// Replacement word: positions 4..=6 read `(h,L),(h,R),(h,R)` instead of
/// `(h,R),(h,L),(h,R)`. Same reads, same endpoints, same extremes.
pub const MARKER_ALTERNATE: [Symbol; MARKER_LEN] = [HL, HL, HL, HR, HL, HR, HR, HL, HL, HL, TL];

/// Shift-and matcher for [`MARKER`] over a symbol stream.
#[derive(Clone, Debug)]
pub struct MarkerMatcher {
    masks: [u16; 4],
    state: u16,
}

impl Default for MarkerMatcher {
    fn default() -> Self {
        Self::new()
    }
}

impl MarkerMatcher {
    pub fn new() -> Self {
        let mut masks = [0u16; 4];
        for (i, s) in MARKER.iter().enumerate() {
            masks[s.index()] |= 1 << i;
        }
        Self { masks, state: 0 }
    }

    /// Feeds one symbol; true when a marker ends on it.
    #[inline]
    pub fn push(&mut self, s: Symbol) -> bool {
        self.state = ((self.state << 1) | 1) & self.masks[s.index()];
        self.state & (1 << (MARKER_LEN - 1)) != 0
    }

    /// Length of the longest marker prefix matching the stream's tail.
    pub fn partial(&self) -> usize {
        if self.state == 0 {
            0
        } else {
            16 - self.state.leading_zeros() as usize
        }
    }

    pub fn reset(&mut self) {
        self.state = 0;
    }
}

/// Marker occurrences in a window.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkerScan {
    /// Start times of complete occurrences, ascending.
    pub times: Vec<i64>,
    /// Start times whose available symbols match a marker prefix but whose
    /// occurrence would run past the window end.
    pub undecided: Vec<i64>,
}

impl MarkerScan {
    /// Complete and undecided starts, ascending.
    pub fn all_starts(&self) -> impl Iterator<Item = i64> + '_ {
        self.times.iter().chain(self.undecided.iter()).copied()
    }

    pub fn contains(&self, t: i64) -> bool {
        self.times.binary_search(&t).is_ok()
    }
}

pub fn find_markers(output: &TTOutput) -> MarkerScan {
    let mut m = MarkerMatcher::new();
    let mut times = Vec::new();
    for (i, &s) in output.symbols().iter().enumerate() {
        if m.push(s) {
            times.push(output.start() + i as i64 + 1 - MARKER_LEN as i64);
        }
    }
    // Every partial match in the tail is a candidate start; the shift-and
    // state holds one bit per live prefix length.
    let mut undecided = Vec::new();
    let end = output.end();
    for k in (1..MARKER_LEN).rev() {
        if m.state & (1 << (k - 1)) != 0 {
            undecided.push(end + 1 - k as i64);
        }
    }
    MarkerScan { times, undecided }
}

/// The P′ data attached to a marker occurrence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MarkerRecord {
    pub time: i64,
    #[serde(rename = "m")]
    pub gap_m: i64,
    pub net: i64,
    pub fo: i64,
    pub ba: i64,
    #[serde(with = "serde_cells")]
    pub block: Vec<Cell>,
}

/// Why a P′ label cannot be decided inside the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    /// A marker starts here but no earlier marker lies in the window.
    NoPreviousMarker,
    /// The window ends before the occurrence could be confirmed.
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PPrimeLabel {
    NotInS,
    InS(MarkerRecord),
    EdgeUnknown(EdgeKind),
}

/// Record for the occurrence at `t` whose predecessor is at `prev`, read off
/// the output alone. Offsets in the block are relative to the walker at `prev`.
fn record_between(output: &TTOutput, prev: i64, t: i64) -> Result<MarkerRecord> {
    let g = output.geometry(prev, t)?;
    let mut block: Vec<Option<Cell>> = vec![None; g.cell_count()];
    let mut p = 0i64;
    for time in prev..=t {
        let s = output.at(time)?;
        block[(p - g.ba) as usize].get_or_insert(s.cell);
        p += crate::process::step_value(s.step);
    }
    Ok(MarkerRecord {
        time: t,
        gap_m: t - prev,
        net: g.net,
        fo: g.fo,
        ba: g.ba,
        block: block
            .into_iter()
            .map(|c| c.expect("every offset in range is visited"))
            .collect(),
    })
}

fn label_from_scan(output: &TTOutput, scan: &MarkerScan, t: i64) -> Result<PPrimeLabel> {
    if scan.undecided.contains(&t) {
        return Ok(PPrimeLabel::EdgeUnknown(EdgeKind::Undecided));
    }
    match scan.times.binary_search(&t) {
        Err(_) => Ok(PPrimeLabel::NotInS),
        Ok(0) => Ok(PPrimeLabel::EdgeUnknown(EdgeKind::NoPreviousMarker)),
        Ok(i) => Ok(PPrimeLabel::InS(record_between(
            output,
            scan.times[i - 1],
            t,
        )?)),
    }
}

/// P′ label at time `t`: the gap back to the previous marker, the walk
/// geometry over that gap (steps `b_{t-m} ..= b_{t-1}`) and the block seen.
pub fn pprime_label(output: &TTOutput, t: i64) -> Result<PPrimeLabel> {
    output.at(t)?;
    let scan = find_markers(output);
    label_from_scan(output, &scan, t)
}

/// Every label other than `NotInS`, keyed by time, ascending.
pub fn pprime_labels(output: &TTOutput) -> Result<Vec<(i64, PPrimeLabel)>> {
    let scan = find_markers(output);
    let mut out = Vec::with_capacity(scan.times.len() + scan.undecided.len());
    for t in scan.all_starts() {
        out.push((t, label_from_scan(output, &scan, t)?));
    }
    Ok(out)
}

/// Records for every occurrence that has a predecessor in the window.
pub fn marker_records(output: &TTOutput) -> Result<Vec<MarkerRecord>> {
    let scan = find_markers(output);
    scan.times
        .windows(2)
        .map(|w| record_between(output, w[0], w[1]))
        .collect()
}

/// Occurrences and records over the first `steps` symbols (times
/// `0..steps`) of a fresh process.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StreamScan {
    pub steps: u64,
    pub times: Vec<i64>,
    pub records: Vec<MarkerRecord>,
}

/// Streaming form of [`find_markers`] plus [`marker_records`]; memory grows
/// with the gaps between markers, not with `steps`.
pub fn scan_stream(seed: impl Into<TrialSeed>, steps: u64) -> StreamScan {
    let mut stream = OutputStream::new(seed);
    let mut matcher = MarkerMatcher::new();
    // hist[k] is the walker offset at time base + k
    let mut base = 0i64;
    let mut hist: Vec<i64> = Vec::new();
    let mut times: Vec<i64> = Vec::new();
    let mut records = Vec::new();
    for t in 0..steps as i64 {
        hist.push(stream.position());
        let s = stream.next().expect("stream is infinite");
        if matcher.push(s) {
            let start = t + 1 - MARKER_LEN as i64;
            if let Some(&prev) = times.last() {
                let seg = &hist[(prev - base) as usize..=(start - base) as usize];
                let origin = seg[0];
                let fo = seg.iter().max().unwrap() - origin;
                let ba = seg.iter().min().unwrap() - origin;
                records.push(MarkerRecord {
                    time: start,
                    gap_m: start - prev,
                    net: seg[seg.len() - 1] - origin,
                    fo,
                    ba,
                    block: stream.scenery_mut().word(origin + ba, origin + fo),
                });
            }
            times.push(start);
            hist.drain(..(start - base) as usize);
            base = start;
        } else if times.is_empty() && hist.len() > 4096 {
            let cut = hist.len() - MARKER_LEN;
            hist.drain(..cut);
            base += cut as i64;
        }
    }
    StreamScan {
        steps,
        times,
        records,
    }
}

fn same_window(o1: &TTOutput, o2: &TTOutput) -> Result<()> {
    if o1.start() != o2.start() || o1.len() != o2.len() {
        return Err(Error::WindowMismatch {
            lo1: o1.start(),
            hi1: o1.end(),
            lo2: o2.start(),
            hi2: o2.end(),
        });
    }
    Ok(())
}

/// Same scenery-process name on the window.
pub fn equivalent1(o1: &TTOutput, o2: &TTOutput) -> Result<bool> {
    same_window(o1, o2)?;
    Ok(o1.cells().eq(o2.cells()))
}

/// Same P′ label at every time of the window.
pub fn equivalent2(o1: &TTOutput, o2: &TTOutput) -> Result<bool> {
    same_window(o1, o2)?;
    Ok(pprime_labels(o1)? == pprime_labels(o2)?)
}

/// Occurrence `[s, s+10]` meets `[n1, n2]` without lying inside it.
fn straddles(s: i64, n1: i64, n2: i64) -> bool {
    let e = s + MARKER_LEN as i64 - 1;
    let meets = s <= n2 && e >= n1;
    let inside = s >= n1 && e <= n2;
    meets && !inside
}

/// Replaces every marker lying inside `[n1, n2]` by [`MARKER_ALTERNATE`].
pub fn rewrite_markers(output: &TTOutput, n1: i64, n2: i64) -> Result<TTOutput> {
    if n1 >= n2 {
        return Err(Error::InvalidInterval { lo: n1, hi: n2 });
    }
    output.at(n1)?;
    output.at(n2)?;
    let scan = find_markers(output);
    if let Some(s) = scan.all_starts().find(|&s| straddles(s, n1, n2)) {
        return Err(Error::StraddlingMarker { time: s });
    }
    let mut symbols = output.symbols().to_vec();
    for &s in scan
        .times
        .iter()
        .filter(|&&s| s >= n1 && s + MARKER_LEN as i64 - 1 <= n2)
    {
        let i = (s - output.start()) as usize;
        symbols[i..i + MARKER_LEN].copy_from_slice(&MARKER_ALTERNATE);
    }
    let out = TTOutput::from_trusted(output.start(), symbols);
    debug_assert!(crate::process::validate_output(out.symbols().to_vec(), out.start()).is_ok());
    Ok(out)
}

/// Finds `N1 < -m_bound` and `N2 > m_bound` such that, in both outputs, the
/// walk over `[N1, m_bound]` is lowest at `N1`, the walk over `[N1, N2]` is
/// highest at `N2`, and neither time falls in the middle of a marker.
///
/// Scans outward from `-m_bound - 1` and `m_bound + 1`, returning the first
/// admissible pair.
pub fn choose_n1_n2(o1: &TTOutput, o2: &TTOutput, m_bound: i64) -> Result<(i64, i64)> {
    same_window(o1, o2)?;
    if m_bound < 0 {
        return Err(Error::InvalidParameter(format!("m_bound = {m_bound}")));
    }
    for t in o1.start()..=o1.end() {
        if (t < -m_bound || t > m_bound) && o1.get(t) != o2.get(t) {
            return Err(Error::DisagreeOutside { time: t });
        }
    }
    let start = o1.start();
    let (lo, hi) = (-m_bound, m_bound);
    if !o1.contains(lo - 1) || !o1.contains(hi + 1) {
        return Err(Error::NotFoundInWindow { what: "N1/N2 pair" });
    }
    let idx = |t: i64| (t - start) as usize;

    let pos = [o1.positions_from(start)?, o2.positions_from(start)?];
    let len = o1.len();
    // bad_left[i]: time i is strictly after a marker start and within it
    // bad_right[i]: time i is at or after a marker start and before its end
    let mut bad_left = vec![false; len];
    let mut bad_right = vec![false; len];
    for o in [o1, o2] {
        let scan = find_markers(o);
        for s in scan.all_starts() {
            for k in 0..MARKER_LEN as i64 {
                let t = s + k;
                if !o.contains(t) {
                    continue;
                }
                if k > 0 {
                    bad_left[idx(t)] = true;
                }
                if k < MARKER_LEN as i64 - 1 {
                    bad_right[idx(t)] = true;
                }
            }
        }
    }

    let mut run_min = [i64::MAX; 2];
    for (k, p) in pos.iter().enumerate() {
        run_min[k] = p[idx(lo)..=idx(hi)].iter().copied().min().unwrap();
    }
    let mut n1 = None;
    let mut t = lo - 1;
    while t >= start {
        let i = idx(t);
        if pos[0][i] <= run_min[0] && pos[1][i] <= run_min[1] && !bad_left[i] {
            n1 = Some(t);
            break;
        }
        for k in 0..2 {
            run_min[k] = run_min[k].min(pos[k][i]);
        }
        t -= 1;
    }
    let n1 = n1.ok_or(Error::NotFoundInWindow { what: "N1" })?;

    let mut run_max = [i64::MIN; 2];
    for (k, p) in pos.iter().enumerate() {
        run_max[k] = p[idx(n1)..=idx(hi)].iter().copied().max().unwrap();
    }
    let mut t = hi + 1;
    while t <= o1.end() {
        let i = idx(t);
        if pos[0][i] >= run_max[0] && pos[1][i] >= run_max[1] && !bad_right[i] {
            return Ok((n1, t));
        }
        for k in 0..2 {
            run_max[k] = run_max[k].max(pos[k][i]);
        }
        t += 1;
    }
    Err(Error::NotFoundInWindow { what: "N2" })
}
