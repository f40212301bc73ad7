//! Simulation toolkit for the random walk in random scenery process: output
//! generation, marker coding, scenery reconstruction and coupling experiments.

pub mod coupling;
pub mod error;
pub mod marker;
pub mod process;
pub mod reconstruct;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use marker::{
    choose_n1_n2, equivalent1, equivalent2, find_markers, marker_records, pprime_label,
    pprime_labels, rewrite_markers, scan_stream, EdgeKind, MarkerMatcher, MarkerRecord, MarkerScan,
    PPrimeLabel, StreamScan, MARKER, MARKER_ALTERNATE, MARKER_LEN,
};
pub use process::{
    block_seen, gen_scenery, generate_output, validate_output, walk_geometry, walk_position, Cell,
    OutputStream, PathSegment, RandomPath, Realization, Scenery, Step, Symbol, TTOutput,
    WalkGeometry,
};
pub use reconstruct::{
    align_sceneries, reconstruct_scenery, reconstruct_scenery_at, stitch_marker_records,
    AlignMatch, AlignmentResult, ReconstructedScenery,
};
pub use rng::{Role, TrialSeed};
