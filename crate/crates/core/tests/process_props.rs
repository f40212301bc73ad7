mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use ttlab_core::process::step_value;
use ttlab_core::{
    validate_output, walk_geometry, walk_position, Cell, RandomPath, Scenery, Symbol, TrialSeed,
};

fn window() -> impl Strategy<Value = (u64, i64, i64)> {
    (any::<u64>(), -150i64..150, 0i64..200).prop_map(|(s, lo, len)| (s, lo, lo + len))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cell_is_scenery_under_walker((seed, lo, hi) in window()) {
        let (mut sc, o) = common::sample(TrialSeed::from(seed), lo, hi);
        let mut path = RandomPath::new(seed);
        let pos = common::positions(&mut path, lo, hi);
        for (i, t) in (lo..=hi).enumerate() {
            let s = o.at(t).unwrap();
            prop_assert_eq!(s.cell, sc.get(pos[i]));
            prop_assert_eq!(s.step, path.get(t));
        }
    }

    #[test]
    fn positions_are_additive((seed, lo, hi) in window()) {
        let path = RandomPath::new(seed).segment(lo.min(0), hi.max(0) + 1);
        for i in lo..=hi {
            let d = walk_position(&path, i + 1).unwrap() - walk_position(&path, i).unwrap();
            prop_assert_eq!(d, step_value(path.step(i).unwrap()));
        }
    }

    #[test]
    fn visited_cells_match_span((seed, lo, hi) in window()) {
        let path = RandomPath::new(seed).segment(lo.min(0), hi.max(0));
        let g = walk_geometry(&path, lo, hi).unwrap();
        let seen: HashSet<i64> = (lo..=hi).map(|i| walk_position(&path, i).unwrap()).collect();
        prop_assert_eq!(seen.len(), g.cell_count());
        prop_assert!(g.ba <= g.net && g.net <= g.fo);
        prop_assert!(g.ba <= 0 && 0 <= g.fo);
    }

    #[test]
    fn generation_is_deterministic((seed, lo, hi) in window()) {
        let a = common::sample(TrialSeed::from(seed), lo, hi).1;
        let b = common::sample(TrialSeed::from(seed), lo, hi).1;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn validation_matches_brute_force(
        start in -5i64..5,
        raw in proptest::collection::vec(0usize..4, 0..8),
    ) {
        let symbols: Vec<Symbol> = raw.iter().map(|&i| Symbol::from_index(i)).collect();
        // brute force: some scenery word reproduces the symbols along the walk
        let n = symbols.len() as i64;
        let consistent = (0u32..1 << (2 * n + 1)).any(|mask| {
            let cell = |x: i64| Cell::from_bit(mask >> (x + n) & 1 == 1);
            let mut p = 0i64;
            symbols.iter().all(|s| {
                let ok = s.cell == cell(p);
                p += step_value(s.step);
                ok
            })
        });
        prop_assert_eq!(validate_output(symbols, start).is_ok(), consistent);
    }
}

#[test]
fn scenery_is_fair() {
    let mut sc = Scenery::new(12345);
    let heads = (0..1_000_000)
        .filter(|&x| sc.get(x - 500_000) == Cell::H)
        .count();
    let frac = heads as f64 / 1e6;
    assert!((0.498..=0.502).contains(&frac), "{frac}");
}
