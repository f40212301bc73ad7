use thiserror::Error;

/// Errors raised by the process, marker, reconstruction and coupling routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("time {time} lies outside the available window")]
    OutOfWindow { time: i64 },

    #[error("scenery offset {offset} is needed but was never observed")]
    UnknownScenery { offset: i64 },

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: i64, hi: i64 },

    #[error("windows differ: [{lo1}, {hi1}] vs [{lo2}, {hi2}]")]
    WindowMismatch {
        lo1: i64,
        hi1: i64,
        lo2: i64,
        hi2: i64,
    },

    #[error("contradictory scenery at offset {offset} (time {time})")]
    ContradictoryScenery { offset: i64, time: i64 },

    #[error("pinned value at offset {offset} conflicts with an already materialized cell")]
    PinConflict { offset: i64 },

    #[error("marker occurrence at time {time} straddles the rewrite boundary")]
    StraddlingMarker { time: i64 },

    #[error("no admissible {what} found inside the window")]
    NotFoundInWindow { what: &'static str },

    #[error("outputs disagree at time {time}, outside the permitted region")]
    DisagreeOutside { time: i64 },

    #[error("stitched blocks disagree at offset {offset}")]
    StitchConflict { offset: i64 },

    #[error("marker record at time {time} does not follow its predecessor")]
    NonConsecutiveRecords { time: i64 },

    #[error("invalid {what} character {found:?}")]
    InvalidSymbol { what: &'static str, found: char },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("conditioning window [{lo}, {hi}] must contain time 0")]
    WindowNotAnchored { lo: i64, hi: i64 },

    #[error("no marker occurrence within the horizon")]
    NoMarkerInHorizon,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no transcripts supplied")]
    EmptyTranscripts,
}

pub type Result<T> = std::result::Result<T, Error>;
