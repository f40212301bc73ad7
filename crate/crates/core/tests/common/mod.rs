#![allow(dead_code)]

use ttlab_core::{generate_output, RandomPath, Scenery, Step, TTOutput, TrialSeed};

/// Output of the process with `seed` over `[lo, hi]`, plus its scenery.
pub fn sample(seed: TrialSeed, lo: i64, hi: i64) -> (Scenery, TTOutput) {
    let mut sc = Scenery::new(seed);
    let path = RandomPath::new(seed).segment(lo.min(0), hi.max(0));
    let o = generate_output(&mut sc, &path, lo, hi).unwrap();
    (sc, o)
}

/// Walker offsets at `lo..=hi`, by direct summation from time 0.
pub fn positions(path: &mut RandomPath, lo: i64, hi: i64) -> Vec<i64> {
    (lo..=hi)
        .map(|i| {
            let f = |s: Step| if s == Step::R { 1 } else { -1 };
            if i >= 0 {
                (0..i).map(|j| f(path.get(j))).sum()
            } else {
                -(i..0).map(|j| f(path.get(j))).sum::<i64>()
            }
        })
        .collect()
}

/// Searches seeds from `first` for an output over `[-half, half]` holding at
/// least `min_markers` marker occurrences.
pub fn output_with_markers(
    master: u64,
    first: u64,
    half: i64,
    min_markers: usize,
) -> (u64, Scenery, TTOutput) {
    for trial in first.. {
        let (sc, o) = sample(TrialSeed::new(master, trial), -half, half);
        if ttlab_core::find_markers(&o).times.len() >= min_markers {
            return (trial, sc, o);
        }
    }
    unreachable!()
}

/// Marker starts found by comparing every 11-symbol window with the word.
pub fn naive_marker_starts(o: &TTOutput) -> Vec<i64> {
    let syms = o.symbols();
    (0..syms.len().saturating_sub(ttlab_core::MARKER_LEN - 1))
        .filter(|&i| syms[i..i + ttlab_core::MARKER_LEN] == ttlab_core::MARKER)
        .map(|i| o.start() + i as i64)
        .collect()
}

pub struct IffOutcome {
    pub n1: i64,
    pub n2: i64,
    /// Marker occurrences replaced in the first output.
    pub rewritten: usize,
    pub same_cells_first: bool,
    pub same_cells_second: bool,
    pub same_labels: bool,
}

/// Two outputs sharing one scenery whose paths differ by a shuffle of the
/// steps inside `[-m, -1]` and inside `[0, m]`, so they agree outside
/// `[-m, m]`. Both are rewritten between the chosen `N1, N2`. `None` when
/// the first output shows no marker or no admissible pair exists.
pub fn lemma_iff_trial(seed: TrialSeed, half: i64, m: i64) -> Option<IffOutcome> {
    use rand::seq::SliceRandom;
    use ttlab_core::{
        choose_n1_n2, equivalent1, equivalent2, find_markers, rewrite_markers, PathSegment, Role,
    };

    let mut sc = Scenery::new(seed);
    let path = RandomPath::new(seed).segment(-half, half);
    let o1 = generate_output(&mut sc, &path, -half, half).unwrap();
    if find_markers(&o1).times.is_empty() {
        return None;
    }
    let mut steps = path.steps.clone();
    let mut rng = seed.rng(Role::Permutation);
    let zero = half as usize;
    steps[zero - m as usize..zero].shuffle(&mut rng);
    steps[zero..=zero + m as usize].shuffle(&mut rng);
    let o2 = generate_output(&mut sc, &PathSegment::new(-half, steps), -half, half).unwrap();
    let (n1, n2) = choose_n1_n2(&o1, &o2, m).ok()?;
    let w3 = rewrite_markers(&o1, n1, n2).unwrap();
    let w4 = rewrite_markers(&o2, n1, n2).unwrap();
    let rewritten = find_markers(&o1)
        .times
        .iter()
        .filter(|&&s| s >= n1 && s + 10 <= n2)
        .count();
    Some(IffOutcome {
        n1,
        n2,
        rewritten,
        same_cells_first: equivalent1(&o1, &w3).unwrap(),
        same_cells_second: equivalent1(&o2, &w4).unwrap(),
        same_labels: equivalent2(&w3, &w4).unwrap(),
    })
}
