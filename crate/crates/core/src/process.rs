//! Sceneries, paths and the outputs they generate.
//!
//! A walker starts at offset 0 at time 0. At time `i` it reads the scenery
//! cell under it and emits `(cell, step)`; the step then moves it one offset
//! left or right. Positions are the signed prefix sums `n(i)` with `n(0) = 0`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{BitSource, LazyBits, Role, TrialSeed};

/// A scenery symbol: heads or tails.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    H,
    T,
}

/// A path symbol: left or right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    L,
    R,
}

impl Cell {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Cell::H
        } else {
            Cell::T
        }
    }

    pub fn bit(self) -> bool {
        self == Cell::H
    }

    pub fn as_char(self) -> char {
        match self {
            Cell::H => 'h',
            Cell::T => 't',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'h' => Ok(Cell::H),
            't' => Ok(Cell::T),
            found => Err(Error::InvalidSymbol {
                what: "scenery",
                found,
            }),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Cell::H => Cell::T,
            Cell::T => Cell::H,
        }
    }
}

impl Step {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Step::R
        } else {
            Step::L
        }
    }

    pub fn bit(self) -> bool {
        self == Step::R
    }

    pub fn as_char(self) -> char {
        match self {
            Step::L => 'L',
            Step::R => 'R',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'L' => Ok(Step::L),
            'R' => Ok(Step::R),
            found => Err(Error::InvalidSymbol {
                what: "step",
                found,
            }),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Step::L => Step::R,
            Step::R => Step::L,
        }
    }
}

/// `R` moves the walker to `+1`, `L` to `-1`.
#[inline]
pub fn step_value(step: Step) -> i64 {
    match step {
        Step::R => 1,
        Step::L => -1,
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// One output letter, ordered as (scenery symbol, step).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    pub cell: Cell,
    pub step: Step,
}

impl Symbol {
    pub const fn new(cell: Cell, step: Step) -> Self {
        Self { cell, step }
    }

    /// Index in `0..4`, used for histograms and shift-and masks.
    #[inline]
    pub fn index(self) -> usize {
        (self.cell.bit() as usize) << 1 | self.step.bit() as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::new(Cell::from_bit(i & 2 != 0), Step::from_bit(i & 1 != 0))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.cell, self.step)
    }
}

pub fn cells_to_string(cells: &[Cell]) -> String {
    cells.iter().map(|c| c.as_char()).collect()
}

pub fn steps_to_string(steps: &[Step]) -> String {
    steps.iter().map(|s| s.as_char()).collect()
}

pub fn parse_cells(s: &str) -> Result<Vec<Cell>> {
    s.chars().map(Cell::from_char).collect()
}

pub fn parse_steps(s: &str) -> Result<Vec<Step>> {
    s.chars().map(Step::from_char).collect()
}

/// Serde adapter storing a `Vec<Cell>` as an `"hth..."` string.
pub mod serde_cells {
    use super::{cells_to_string, parse_cells, Cell};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(cells: &[Cell], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&cells_to_string(cells))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Cell>, D::Error> {
        let s = String::deserialize(d)?;
        parse_cells(&s).map_err(serde::de::Error::custom)
    }
}

/// Something that can answer "which cell lies at offset x".
pub(crate) trait CellSource {
    fn cell_at(&mut self, offset: i64) -> Result<Cell>;
}

/// Doubly infinite i.i.d. fair scenery, materialized on demand.
///
/// Cells never change once materialized. Pinned cells hold conditioned
/// values; every other cell is a fair coin determined by the seed.
#[derive(Clone, Debug)]
pub struct Scenery {
    bits: LazyBits,
}

impl Scenery {
    pub fn new(seed: impl Into<TrialSeed>) -> Self {
        Self {
            bits: LazyBits::new(seed.into(), Role::SceneryRight, Role::SceneryLeft),
        }
    }

    /// Scenery with the cells at `start..start+cells.len()` pinned to `cells`.
    pub fn from_word(seed: impl Into<TrialSeed>, start: i64, cells: &[Cell]) -> Self {
        let mut s = Self::new(seed);
        for (i, &c) in cells.iter().enumerate() {
            s.bits
                .pin(start + i as i64, c.bit())
                .expect("fresh scenery has no materialized cells");
        }
        s
    }

    /// Pins `offset` to `cell`. Errors if the cell was already materialized
    /// with the other value.
    pub fn pin(&mut self, offset: i64, cell: Cell) -> Result<()> {
        self.bits
            .pin(offset, cell.bit())
            .map_err(|offset| Error::PinConflict { offset })
    }

    pub fn is_pinned(&self, offset: i64) -> bool {
        self.bits.pins().contains_key(&offset)
    }

    pub fn pinned_offsets(&self) -> impl Iterator<Item = i64> + '_ {
        self.bits.pins().keys().copied()
    }

    #[inline]
    pub fn get(&mut self, offset: i64) -> Cell {
        Cell::from_bit(self.bits.get(offset))
    }

    /// The cell at `offset` if it has been materialized.
    pub fn peek(&self, offset: i64) -> Option<Cell> {
        self.bits.peek(offset).map(Cell::from_bit)
    }

    pub fn materialize(&mut self, lo: i64, hi: i64) {
        self.bits.ensure(lo, hi);
    }

    pub fn materialized_range(&self) -> Option<(i64, i64)> {
        self.bits.range()
    }

    /// Cells at offsets `lo..=hi`, materializing as needed.
    pub fn word(&mut self, lo: i64, hi: i64) -> Vec<Cell> {
        (lo..=hi).map(|x| self.get(x)).collect()
    }
}

impl CellSource for Scenery {
    #[inline]
    fn cell_at(&mut self, offset: i64) -> Result<Cell> {
        Ok(self.get(offset))
    }
}

/// Reads another cell source through a fixed translation.
pub(crate) struct Shifted<'a, S: CellSource> {
    pub(crate) inner: &'a mut S,
    pub(crate) shift: i64,
}

impl<S: CellSource> CellSource for Shifted<'_, S> {
    #[inline]
    fn cell_at(&mut self, offset: i64) -> Result<Cell> {
        self.inner.cell_at(offset + self.shift)
    }
}

/// Scenery whose cells at `[lo, hi]` are i.i.d. fair and materialized.
pub fn gen_scenery(seed: impl Into<TrialSeed>, lo: i64, hi: i64) -> Result<Scenery> {
    if lo > hi {
        return Err(Error::InvalidInterval { lo, hi });
    }
    let mut s = Scenery::new(seed);
    s.materialize(lo, hi);
    Ok(s)
}

/// Doubly infinite i.i.d. fair path, materialized on demand.
#[derive(Clone, Debug)]
pub struct RandomPath {
    bits: LazyBits,
}

impl RandomPath {
    pub fn new(seed: impl Into<TrialSeed>) -> Self {
        Self {
            bits: LazyBits::new(seed.into(), Role::PathRight, Role::PathLeft),
        }
    }

    pub fn pin(&mut self, time: i64, step: Step) -> Result<()> {
        self.bits
            .pin(time, step.bit())
            .map_err(|time| Error::PinConflict { offset: time })
    }

    #[inline]
    pub fn get(&mut self, time: i64) -> Step {
        Step::from_bit(self.bits.get(time))
    }

    /// The finite segment covering times `lo..=hi`.
    pub fn segment(&mut self, lo: i64, hi: i64) -> PathSegment {
        self.bits.ensure(lo, hi);
        PathSegment {
            start: lo,
            steps: (lo..=hi).map(|t| self.get(t)).collect(),
        }
    }
}

/// Steps at the contiguous times `start..start+steps.len()`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PathRepr", into = "PathRepr")]
pub struct PathSegment {
    pub start: i64,
    pub steps: Vec<Step>,
}

#[derive(Serialize, Deserialize)]
struct PathRepr {
    start: i64,
    path: String,
}

impl TryFrom<PathRepr> for PathSegment {
    type Error = Error;
    fn try_from(r: PathRepr) -> Result<Self> {
        Ok(Self {
            start: r.start,
            steps: parse_steps(&r.path)?,
        })
    }
}

impl From<PathSegment> for PathRepr {
    fn from(p: PathSegment) -> Self {
        Self {
            start: p.start,
            path: steps_to_string(&p.steps),
        }
    }
}

impl PathSegment {
    pub fn new(start: i64, steps: Vec<Step>) -> Self {
        Self { start, steps }
    }

    pub fn parse(start: i64, s: &str) -> Result<Self> {
        Ok(Self::new(start, parse_steps(s)?))
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// One past the last time.
    pub fn end(&self) -> i64 {
        self.start + self.steps.len() as i64
    }

    pub fn contains(&self, t: i64) -> bool {
        t >= self.start && t < self.end()
    }

    #[inline]
    pub fn step(&self, t: i64) -> Result<Step> {
        if self.contains(t) {
            Ok(self.steps[(t - self.start) as usize])
        } else {
            Err(Error::OutOfWindow { time: t })
        }
    }

    /// Steps at times `lo..hi` (half-open).
    pub fn slice(&self, lo: i64, hi: i64) -> Result<&[Step]> {
        if lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        if lo == hi {
            return Ok(&[]);
        }
        self.step(lo)?;
        self.step(hi - 1)?;
        Ok(&self.steps[(lo - self.start) as usize..(hi - self.start) as usize])
    }
}

/// `n(i)`: the walker's offset at time `i`, with `n(0) = 0`.
pub fn walk_position(path: &PathSegment, i: i64) -> Result<i64> {
    if i >= 0 {
        Ok(path.slice(0, i)?.iter().map(|&s| step_value(s)).sum())
    } else {
        Ok(-path
            .slice(i, 0)?
            .iter()
            .map(|&s| step_value(s))
            .sum::<i64>())
    }
}

pub(crate) fn generate_with<S: CellSource>(
    cells: &mut S,
    path: &PathSegment,
    lo: i64,
    hi: i64,
) -> Result<TTOutput> {
    if lo > hi {
        return Ok(TTOutput::empty(lo));
    }
    let mut n = walk_position(path, lo)?;
    let steps = path.slice(lo, hi + 1)?;
    let mut symbols = Vec::with_capacity(steps.len());
    for &step in steps {
        symbols.push(Symbol::new(cells.cell_at(n)?, step));
        n += step_value(step);
    }
    Ok(TTOutput { start: lo, symbols })
}

/// The output `(scenery[n(i)], path[i])` for `i` in `lo..=hi`.
/// An empty window (`lo > hi`) yields an empty output.
pub fn generate_output(
    scenery: &mut Scenery,
    path: &PathSegment,
    lo: i64,
    hi: i64,
) -> Result<TTOutput> {
    generate_with(scenery, path, lo, hi)
}

/// Extremes of the partial step sums over an interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WalkGeometry {
    pub fo: i64,
    pub ba: i64,
    pub net: i64,
    pub visited_lo: i64,
    pub visited_hi: i64,
}

impl WalkGeometry {
    /// Geometry of the walk taking `steps` from absolute offset `origin`.
    pub fn from_steps<I: IntoIterator<Item = Step>>(steps: I, origin: i64) -> Self {
        let (mut sum, mut fo, mut ba) = (0i64, 0i64, 0i64);
        for s in steps {
            sum += step_value(s);
            fo = fo.max(sum);
            ba = ba.min(sum);
        }
        Self {
            fo,
            ba,
            net: sum,
            visited_lo: origin + ba,
            visited_hi: origin + fo,
        }
    }

    /// Distance between the extreme visited offsets, `fo - ba`.
    pub fn span(&self) -> i64 {
        self.fo - self.ba
    }

    /// Number of distinct offsets visited, `fo - ba + 1`.
    pub fn cell_count(&self) -> usize {
        (self.span() + 1) as usize
    }
}

/// Forwards, backwards and net distance walked from time `d` to time `e`,
/// using steps `b_d ..= b_{e-1}`. `d == e` gives the empty walk.
pub fn walk_geometry(path: &PathSegment, d: i64, e: i64) -> Result<WalkGeometry> {
    if d > e {
        return Err(Error::InvalidInterval { lo: d, hi: e });
    }
    let origin = walk_position(path, d)?;
    Ok(WalkGeometry::from_steps(
        path.slice(d, e)?.iter().copied(),
        origin,
    ))
}

/// Scenery over the offsets visited between times `d` and `e`, ascending.
pub fn block_seen(scenery: &mut Scenery, path: &PathSegment, d: i64, e: i64) -> Result<Vec<Cell>> {
    let g = walk_geometry(path, d, e)?;
    Ok(scenery.word(g.visited_lo, g.visited_hi))
}

/// A finite window of the output process.
///
/// Always internally consistent: replaying the step coordinates never reads
/// two different symbols at the same offset.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "OutputRepr", into = "OutputRepr")]
pub struct TTOutput {
    start: i64,
    symbols: Vec<Symbol>,
}

#[derive(Serialize, Deserialize)]
struct OutputRepr {
    start: i64,
    scenery: String,
    path: String,
}

impl TryFrom<OutputRepr> for TTOutput {
    type Error = Error;
    fn try_from(r: OutputRepr) -> Result<Self> {
        let cells = parse_cells(&r.scenery)?;
        let steps = parse_steps(&r.path)?;
        if cells.len() != steps.len() {
            return Err(Error::LengthMismatch(format!(
                "{} scenery symbols vs {} steps",
                cells.len(),
                steps.len()
            )));
        }
        let symbols = cells
            .into_iter()
            .zip(steps)
            .map(|(c, s)| Symbol::new(c, s))
            .collect();
        validate_output(symbols, r.start)
    }
}

impl From<TTOutput> for OutputRepr {
    fn from(o: TTOutput) -> Self {
        Self {
            start: o.start,
            scenery: o.symbols.iter().map(|s| s.cell.as_char()).collect(),
            path: o.symbols.iter().map(|s| s.step.as_char()).collect(),
        }
    }
}

impl TTOutput {
    pub fn empty(start: i64) -> Self {
        Self {
            start,
            symbols: Vec::new(),
        }
    }

    /// Wraps symbols already known to be consistent.
    pub(crate) fn from_trusted(start: i64, symbols: Vec<Symbol>) -> Self {
        Self { start, symbols }
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Last time in the window (`start - 1` when empty).
    pub fn end(&self) -> i64 {
        self.start + self.symbols.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains(&self, t: i64) -> bool {
        t >= self.start && t <= self.end()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    #[inline]
    pub fn get(&self, t: i64) -> Option<Symbol> {
        if self.contains(t) {
            Some(self.symbols[(t - self.start) as usize])
        } else {
            None
        }
    }

    pub fn at(&self, t: i64) -> Result<Symbol> {
        self.get(t).ok_or(Error::OutOfWindow { time: t })
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.symbols.iter().map(|s| s.cell)
    }

    pub fn steps(&self) -> impl Iterator<Item = Step> + '_ {
        self.symbols.iter().map(|s| s.step)
    }

    /// The path coordinates as a segment.
    pub fn path(&self) -> PathSegment {
        PathSegment::new(self.start, self.steps().collect())
    }

    /// Time whose walker position is offset 0: time 0 when the window holds
    /// it, otherwise the window start.
    pub fn anchor_time(&self) -> i64 {
        if self.contains(0) {
            0
        } else {
            self.start
        }
    }

    /// Walker offsets at every time of the window, relative to the position
    /// at `anchor`.
    pub fn positions_from(&self, anchor: i64) -> Result<Vec<i64>> {
        if self.is_empty() {
            return Ok(Vec::new());
        }
        if !self.contains(anchor) {
            return Err(Error::OutOfWindow { time: anchor });
        }
        let a = (anchor - self.start) as usize;
        let mut pos = vec![0i64; self.symbols.len()];
        for i in a + 1..pos.len() {
            pos[i] = pos[i - 1] + step_value(self.symbols[i - 1].step);
        }
        for i in (0..a).rev() {
            pos[i] = pos[i + 1] - step_value(self.symbols[i].step);
        }
        Ok(pos)
    }

    /// Positions relative to [`Self::anchor_time`].
    pub fn positions(&self) -> Vec<i64> {
        self.positions_from(self.anchor_time())
            .expect("anchor lies in the window")
    }

    /// Restriction to `lo..=hi`.
    pub fn restrict(&self, lo: i64, hi: i64) -> Result<TTOutput> {
        if lo > hi {
            return Ok(TTOutput::empty(lo));
        }
        self.at(lo)?;
        self.at(hi)?;
        Ok(TTOutput {
            start: lo,
            symbols: self.symbols[(lo - self.start) as usize..=(hi - self.start) as usize].to_vec(),
        })
    }

    /// Geometry of the walk from time `d` to time `e` using the output's own
    /// step coordinates, with offsets relative to the position at time `d`.
    pub fn geometry(&self, d: i64, e: i64) -> Result<WalkGeometry> {
        if d > e {
            return Err(Error::InvalidInterval { lo: d, hi: e });
        }
        self.at(d)?;
        if e > d {
            self.at(e - 1)?;
        }
        let steps = self.symbols[(d - self.start) as usize..(e - self.start) as usize]
            .iter()
            .map(|s| s.step);
        Ok(WalkGeometry::from_steps(steps, 0))
    }
}

impl fmt::Display for TTOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}:", self.start)?;
        for s in &self.symbols {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Accepts `symbols` (starting at time `start`) iff every revisit of an
/// offset reads the symbol first read there.
pub fn validate_output(symbols: Vec<Symbol>, start: i64) -> Result<TTOutput> {
    let out = TTOutput { start, symbols };
    if out.is_empty() {
        return Ok(out);
    }
    let pos = out.positions();
    let lo = *pos.iter().min().unwrap();
    let hi = *pos.iter().max().unwrap();
    let mut seen: Vec<Option<Cell>> = vec![None; (hi - lo + 1) as usize];
    for (i, (&p, sym)) in pos.iter().zip(&out.symbols).enumerate() {
        let slot = &mut seen[(p - lo) as usize];
        match slot {
            Some(c) if *c != sym.cell => {
                return Err(Error::ContradictoryScenery {
                    offset: p,
                    time: start + i as i64,
                })
            }
            _ => *slot = Some(sym.cell),
        }
    }
    Ok(out)
}

/// A scenery word and a path segment sharing one start index, in the
/// `{"start":-2,"scenery":"hhttt","path":"LLLLR"}` form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Realization {
    pub start: i64,
    pub scenery: String,
    pub path: String,
}

impl Realization {
    pub fn new(start: i64, cells: &[Cell], steps: &[Step]) -> Self {
        Self {
            start,
            scenery: cells_to_string(cells),
            path: steps_to_string(steps),
        }
    }

    /// The scenery (pinned on the word, fair elsewhere) and the path segment.
    pub fn parts(&self, seed: impl Into<TrialSeed>) -> Result<(Scenery, PathSegment)> {
        let cells = parse_cells(&self.scenery)?;
        let path = PathSegment::parse(self.start, &self.path)?;
        Ok((Scenery::from_word(seed, self.start, &cells), path))
    }
}

/// Output of a fresh process at times `0, 1, 2, ...`, produced one symbol at
/// a time without storing the path.
///
/// Yields the same symbols as [`generate_output`] over [`RandomPath::new`]
/// and [`Scenery::new`] with the same seed.
pub struct OutputStream {
    scenery: Scenery,
    steps: BitSource,
    pos: i64,
}

impl OutputStream {
    pub fn new(seed: impl Into<TrialSeed>) -> Self {
        let seed = seed.into();
        Self {
            scenery: Scenery::new(seed),
            steps: BitSource::new(seed.rng(Role::PathRight)),
            pos: 0,
        }
    }

    /// Walker offset at the time of the next symbol.
    pub fn position(&self) -> i64 {
        self.pos
    }

    /// Scenery read so far; further cells are drawn on demand.
    pub fn scenery_mut(&mut self) -> &mut Scenery {
        &mut self.scenery
    }
}

impl Iterator for OutputStream {
    type Item = Symbol;

    #[inline]
    fn next(&mut self) -> Option<Symbol> {
        let step = Step::from_bit(self.steps.next_bit());
        let s = Symbol::new(self.scenery.get(self.pos), step);
        self.pos += step_value(step);
        Some(s)
    }
}
