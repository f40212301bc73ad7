use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::process::{step_value, Scenery, Symbol, TTOutput};
use crate::reconstruct::{reconstruct_scenery_at, ReconstructedScenery};

/// Flips the steps at the times in `flips` and regenerates the output from
/// the earliest flipped time onward.
///
/// Symbols before the earliest flip are untouched and the walker keeps its
/// position there. Cells are read from `source` when given, as a scenery
/// together with the walker's offset in it at the window start; otherwise
/// from the scenery the output itself reveals.
pub fn flip_map(
    output: &TTOutput,
    flips: &BTreeSet<i64>,
    source: Option<(&mut Scenery, i64)>,
) -> Result<TTOutput> {
    let Some(&first) = flips.first() else {
        return Ok(output.clone());
    };
    for &t in flips {
        output.at(t)?;
    }
    let mut n = output.geometry(output.start(), first)?.net;
    let mut symbols = output.symbols()[..(first - output.start()) as usize].to_vec();
    let mut cells = CellReader::new(output, source);
    for t in first..=output.end() {
        let mut step = output.at(t)?.step;
        if flips.contains(&t) {
            step = step.flipped();
        }
        symbols.push(Symbol::new(cells.get(n)?, step));
        n += step_value(step);
    }
    Ok(TTOutput::from_trusted(output.start(), symbols))
}

enum CellReader<'a> {
    Source(&'a mut Scenery, i64),
    Seen(ReconstructedScenery),
}

impl<'a> CellReader<'a> {
    fn new(output: &TTOutput, source: Option<(&'a mut Scenery, i64)>) -> Self {
        match source {
            Some((s, at_start)) => Self::Source(s, at_start),
            None => {
                let seen = reconstruct_scenery_at(output, output.start())
                    .expect("start lies in the window");
                Self::Seen(seen)
            }
        }
    }

    fn get(&mut self, offset: i64) -> Result<crate::process::Cell> {
        match self {
            Self::Source(s, at_start) => Ok(s.get(offset + *at_start)),
            Self::Seen(r) => r.get(offset).ok_or(Error::UnknownScenery { offset }),
        }
    }
}
