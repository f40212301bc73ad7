//! Recovering sceneries from outputs and from chains of marker records, and
//! matching two sceneries up to even translates and reflections.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marker::MarkerRecord;
use crate::process::{serde_cells, Cell, TTOutput};

/// Alignment matches supported by fewer overlapping cells than this are
/// flagged as low confidence (false-match probability above 2^-32).
pub const LOW_CONFIDENCE_OVERLAP: usize = 32;

/// Scenery over a contiguous range of offsets. Offset 0 is the walker's
/// position at `anchor_time`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SceneryRepr", into = "SceneryRepr")]
pub struct ReconstructedScenery {
    anchor_time: i64,
    lo: i64,
    cells: Vec<Cell>,
}

#[derive(Serialize, Deserialize)]
struct SceneryRepr {
    lo: i64,
    hi: i64,
    #[serde(with = "serde_cells")]
    cells: Vec<Cell>,
}

impl TryFrom<SceneryRepr> for ReconstructedScenery {
    type Error = Error;
    fn try_from(r: SceneryRepr) -> Result<Self> {
        if r.hi - r.lo + 1 != r.cells.len() as i64 {
            return Err(Error::LengthMismatch(format!(
                "range [{}, {}] holds {} cells",
                r.lo,
                r.hi,
                r.cells.len()
            )));
        }
        Ok(Self::new(0, r.lo, r.cells))
    }
}

impl From<ReconstructedScenery> for SceneryRepr {
    fn from(s: ReconstructedScenery) -> Self {
        Self {
            lo: s.lo,
            hi: s.hi(),
            cells: s.cells,
        }
    }
}

impl ReconstructedScenery {
    pub fn new(anchor_time: i64, lo: i64, cells: Vec<Cell>) -> Self {
        Self {
            anchor_time,
            lo,
            cells,
        }
    }

    pub fn anchor_time(&self) -> i64 {
        self.anchor_time
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Highest offset (`lo - 1` when empty).
    pub fn hi(&self) -> i64 {
        self.lo + self.cells.len() as i64 - 1
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, offset: i64) -> Option<Cell> {
        let i = offset - self.lo;
        if i >= 0 && (i as usize) < self.cells.len() {
            Some(self.cells[i as usize])
        } else {
            None
        }
    }

    /// Same cells with every offset moved by `k`.
    pub fn translated(&self, k: i64) -> Self {
        Self::new(self.anchor_time, self.lo + k, self.cells.clone())
    }

    /// Mirror image: the cell at offset `x` moves to `k - x`.
    pub fn reflected(&self, k: i64) -> Self {
        let mut cells = self.cells.clone();
        cells.reverse();
        Self::new(self.anchor_time, k - self.hi(), cells)
    }
}

/// Scenery seen by `output`, anchored at [`TTOutput::anchor_time`] (time 0
/// when the window contains it).
pub fn reconstruct_scenery(output: &TTOutput) -> ReconstructedScenery {
    reconstruct_scenery_at(output, output.anchor_time()).expect("anchor lies in the window")
}

/// Scenery seen by `output`, with offset 0 at the walker's position at `anchor`.
/// The output is assumed valid; the first read of an offset wins.
pub fn reconstruct_scenery_at(output: &TTOutput, anchor: i64) -> Result<ReconstructedScenery> {
    if output.is_empty() {
        return Ok(ReconstructedScenery::new(anchor, 0, Vec::new()));
    }
    let pos = output.positions_from(anchor)?;
    let lo = *pos.iter().min().unwrap();
    let hi = *pos.iter().max().unwrap();
    let mut cells: Vec<Option<Cell>> = vec![None; (hi - lo + 1) as usize];
    for (&p, c) in pos.iter().zip(output.cells()) {
        cells[(p - lo) as usize].get_or_insert(c);
    }
    Ok(ReconstructedScenery::new(
        anchor,
        lo,
        cells
            .into_iter()
            .map(|c| c.expect("walk ranges are contiguous"))
            .collect(),
    ))
}

fn place(map: &mut BTreeMap<i64, Cell>, offset: i64, cell: Cell) -> Result<()> {
    match map.insert(offset, cell) {
        Some(prev) if prev != cell => Err(Error::StitchConflict { offset }),
        _ => Ok(()),
    }
}

/// Pieces together the blocks of consecutive marker records.
///
/// Each block is laid down relative to the walker's position at the previous
/// marker, and the net distances carry that position forward. The result is
/// anchored at the last record's time. An optional known scenery anchored at
/// one of the chain's marker times (or at the first record's start) is
/// merged in and must agree.
pub fn stitch_marker_records(
    records: &[MarkerRecord],
    anchor: Option<&ReconstructedScenery>,
) -> Result<ReconstructedScenery> {
    let Some(first) = records.first() else {
        return match anchor {
            Some(a) => Ok(a.clone()),
            None => Err(Error::InvalidParameter("no records to stitch".into())),
        };
    };
    // walker position at each chain time, relative to the first start
    let mut at_time = BTreeMap::new();
    let mut prev_time = first.time - first.gap_m;
    let mut pos = 0i64;
    at_time.insert(prev_time, 0i64);
    let mut map = BTreeMap::new();
    for r in records {
        if r.gap_m < 1 || r.time - r.gap_m != prev_time {
            return Err(Error::NonConsecutiveRecords { time: r.time });
        }
        if r.block.len() as i64 != r.fo - r.ba + 1 {
            return Err(Error::LengthMismatch(format!(
                "record at {} has {} block cells for fo - ba = {}",
                r.time,
                r.block.len(),
                r.fo - r.ba
            )));
        }
        for (i, &c) in r.block.iter().enumerate() {
            place(&mut map, pos + r.ba + i as i64, c)?;
        }
        pos += r.net;
        prev_time = r.time;
        at_time.insert(r.time, pos);
    }
    let last = records.last().unwrap().time;
    if let Some(a) = anchor {
        let Some(&p) = at_time.get(&a.anchor_time()) else {
            return Err(Error::InvalidParameter(format!(
                "anchor time {} is not a marker time of the chain",
                a.anchor_time()
            )));
        };
        for (i, &c) in a.cells().iter().enumerate() {
            place(&mut map, p + a.lo() + i as i64, c)?;
        }
    }
    let lo = *map.keys().next().unwrap();
    let hi = *map.keys().next_back().unwrap();
    if (hi - lo + 1) as usize != map.len() {
        return Err(Error::InvalidParameter(
            "stitched blocks leave a gap".into(),
        ));
    }
    Ok(ReconstructedScenery::new(
        last,
        lo - pos,
        map.into_values().collect(),
    ))
}

/// One even `k` at which two sceneries agree on their whole overlap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignMatch {
    pub k: i64,
    pub overlap: usize,
}

impl AlignMatch {
    pub fn low_confidence(&self) -> bool {
        self.overlap < LOW_CONFIDENCE_OVERLAP
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlignmentResult {
    /// `k` with `s2[i] == s1[i + k]` on the overlap.
    pub translates: Vec<AlignMatch>,
    /// `k` with `s2[i] == s1[k - i]` on the overlap.
    pub reflections: Vec<AlignMatch>,
    /// Translate shifts skipped because the overlap was empty.
    pub empty_translates: Vec<i64>,
    /// Reflection centres skipped because the overlap was empty.
    pub empty_reflections: Vec<i64>,
}

#[derive(Serialize)]
struct AlignmentReport<'a> {
    translates: Vec<i64>,
    translate_overlaps: Vec<usize>,
    reflections: Vec<i64>,
    reflection_overlaps: Vec<usize>,
    low_confidence: Vec<i64>,
    empty_translates: &'a [i64],
    empty_reflections: &'a [i64],
}

impl Serialize for AlignmentResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AlignmentReport {
            translates: self.translate_ks(),
            translate_overlaps: self.translates.iter().map(|m| m.overlap).collect(),
            reflections: self.reflection_ks(),
            reflection_overlaps: self.reflections.iter().map(|m| m.overlap).collect(),
            low_confidence: self
                .translates
                .iter()
                .chain(&self.reflections)
                .filter(|m| m.low_confidence())
                .map(|m| m.k)
                .collect(),
            empty_translates: &self.empty_translates,
            empty_reflections: &self.empty_reflections,
        }
        .serialize(s)
    }
}

impl AlignmentResult {
    pub fn translate_ks(&self) -> Vec<i64> {
        self.translates.iter().map(|m| m.k).collect()
    }

    pub fn reflection_ks(&self) -> Vec<i64> {
        self.reflections.iter().map(|m| m.k).collect()
    }

    /// Largest overlap among all reported matches, 0 when there are none.
    pub fn overlap_len(&self) -> usize {
        self.translates
            .iter()
            .chain(&self.reflections)
            .map(|m| m.overlap)
            .max()
            .unwrap_or(0)
    }
}

/// Tests every even `k` in `[-k_range, k_range]` for a translate or
/// reflection match over the full overlap.
pub fn align_sceneries(
    s1: &ReconstructedScenery,
    s2: &ReconstructedScenery,
    k_range: i64,
) -> Result<AlignmentResult> {
    if k_range < 0 {
        return Err(Error::InvalidParameter(format!("k_range = {k_range}")));
    }
    let mut res = AlignmentResult::default();
    let first = -k_range + (k_range & 1);
    for k in (first..=k_range).step_by(2) {
        // translate: i in dom(s2) with i + k in dom(s1)
        let lo = s2.lo().max(s1.lo() - k);
        let hi = s2.hi().min(s1.hi() - k);
        if lo > hi {
            res.empty_translates.push(k);
        } else if (lo..=hi).all(|i| s2.get(i) == s1.get(i + k)) {
            res.translates.push(AlignMatch {
                k,
                overlap: (hi - lo + 1) as usize,
            });
        }
        // reflection: i in dom(s2) with k - i in dom(s1)
        let lo = s2.lo().max(k - s1.hi());
        let hi = s2.hi().min(k - s1.lo());
        if lo > hi {
            res.empty_reflections.push(k);
        } else if (lo..=hi).all(|i| s2.get(i) == s1.get(k - i)) {
            res.reflections.push(AlignMatch {
                k,
                overlap: (hi - lo + 1) as usize,
            });
        }
    }
    Ok(res)
}
