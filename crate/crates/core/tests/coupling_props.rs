mod common;

use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use ttlab_core::coupling::{
    conditional_independence_stat, couple, enumerate_conditional_law, flip_map, marginal_check,
    sample_conditioned, window_key, ConditionedLaw, CoupleStatus, Coupler, SplitCoupler,
    SplitStatus, WindowHistogram,
};
use ttlab_core::process::step_value;
use ttlab_core::stats::tv_distance;
use ttlab_core::{generate_output, Cell, RandomPath, Scenery, Step, Symbol, TrialSeed};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn flip_map_is_an_involution(
        seed in any::<u64>(),
        lo in -60i64..0,
        len in 1i64..120,
        raw in proptest::collection::btree_set(0i64..120, 0..6),
    ) {
        let hi = lo + len;
        let seed = TrialSeed::from(seed);
        let mut sc = Scenery::new(seed);
        let path = RandomPath::new(seed).segment(lo.min(0), hi.max(0));
        let o = generate_output(&mut sc, &path, lo, hi).unwrap();
        let at_start = ttlab_core::walk_position(&path, lo).unwrap();
        let flips: BTreeSet<i64> = raw.into_iter().filter(|&k| k <= len).map(|k| lo + k).collect();
        let once = flip_map(&o, &flips, Some((&mut sc, at_start))).unwrap();
        let twice = flip_map(&once, &flips, Some((&mut sc, at_start))).unwrap();
        prop_assert_eq!(&twice, &o);
        if let Some(&first) = flips.first() {
            if first > lo {
                prop_assert_eq!(once.restrict(lo, first - 1).unwrap(), o.restrict(lo, first - 1).unwrap());
            }
            for t in first..=hi {
                let flipped = flips.contains(&t);
                prop_assert_eq!(once.at(t).unwrap().step == o.at(t).unwrap().step, !flipped);
            }
        }
    }
}

/// Conditional law of the output on `[-h, h]` given the word on its window,
/// by enumerating every path and every cell the walk could reach.
fn naive_conditional_law(law: &ConditionedLaw, h: i64) -> HashMap<u64, f64> {
    let len = (2 * h + 1) as usize;
    let cells = 2 * h + 1;
    let mut counts: HashMap<u64, f64> = HashMap::new();
    let mut total = 0.0;
    for pmask in 0u32..1 << len {
        let steps: Vec<Step> = (0..len)
            .map(|i| Step::from_bit(pmask >> i & 1 == 1))
            .collect();
        let mut pos = vec![0i64; len];
        let zero = h as usize;
        for i in zero + 1..len {
            pos[i] = pos[i - 1] + step_value(steps[i - 1]);
        }
        for i in (0..zero).rev() {
            pos[i] = pos[i + 1] - step_value(steps[i]);
        }
        for smask in 0u32..1 << cells {
            let cell = |x: i64| Cell::from_bit(smask >> (x + h) & 1 == 1);
            let syms: Vec<Symbol> = (0..len)
                .map(|i| Symbol::new(cell(pos[i]), steps[i]))
                .collect();
            let fits = (law.window_lo()..=law.window_hi())
                .all(|t| Some(syms[(t + h) as usize]) == law.word().get(t));
            if !fits {
                continue;
            }
            let key = syms
                .iter()
                .rev()
                .fold(0u64, |k, s| (k << 2) | s.index() as u64);
            *counts.entry(key).or_default() += 1.0;
            total += 1.0;
        }
    }
    counts.values_mut().for_each(|v| *v /= total);
    counts
}

#[test]
fn enumeration_agrees_with_naive_oracle() {
    for s in 0..4 {
        let law = ConditionedLaw::sampled(TrialSeed::new(30, s), 1).unwrap();
        let exact = enumerate_conditional_law(&law, -3, 3).unwrap();
        let naive = naive_conditional_law(&law, 3);
        assert!(tv_distance(&exact, &naive) < 1e-12);
    }
}

#[test]
fn conditioned_samples_follow_the_conditional_law() {
    let law = ConditionedLaw::sampled(TrialSeed::new(31, 0), 1).unwrap();
    let mut hist = WindowHistogram::new(-3, 3).unwrap();
    for trial in 0..100_000 {
        let o = sample_conditioned(&law, 3, TrialSeed::new(32, trial)).unwrap();
        hist.add(&o).unwrap();
    }
    let tv = hist.tv_to(&naive_conditional_law(&law, 3));
    assert!(tv <= 0.02, "tv = {tv}");
}

#[test]
fn empty_window_is_the_free_process() {
    let free = ConditionedLaw::unconditioned();
    let seed = TrialSeed::new(33, 0);
    let o = sample_conditioned(&free, 20, seed).unwrap();
    let (_, direct) = common::sample(seed, -20, 20);
    assert_eq!(o, direct);
}

#[test]
fn successful_couplings_satisfy_the_contract() {
    let g = ConditionedLaw::sampled(TrialSeed::new(40, 0), 2).unwrap();
    let h = ConditionedLaw::sampled(TrialSeed::new(40, 1), 2).unwrap();
    let mut successes = 0;
    for trial in 0..200 {
        let t = couple(&g, &h, 20_000, TrialSeed::new(41, trial)).unwrap();
        let shift = t.shift.unwrap();
        assert!(shift % 2 == 0 && shift > 4);
        assert_eq!(&t.q.restrict(-2, 2).unwrap(), h.word());
        assert_eq!(&t.p.restrict(-2, 2).unwrap(), g.word());
        if t.status != CoupleStatus::Success {
            continue;
        }
        successes += 1;
        let (lf, lb) = (t.lock_fwd.unwrap(), t.lock_bwd.unwrap());
        assert!(lb < -2 && lf > 2);
        let (pp, pq) = (t.p.positions(), t.q.positions());
        for (i, time) in (t.p.start()..=t.p.end()).enumerate() {
            if time >= lf || time <= lb + 1 {
                assert_eq!(pp[i] - pq[i], shift, "time {time}");
            }
            if time >= lf || time <= lb {
                assert_eq!(t.p.at(time), t.q.at(time));
            }
        }
    }
    assert!(successes > 100, "{successes}");
}

#[test]
fn coupled_marginal_is_close_to_the_conditional_law() {
    let g = ConditionedLaw::sampled(TrialSeed::new(42, 0), 1).unwrap();
    let h = ConditionedLaw::sampled(TrialSeed::new(42, 1), 1).unwrap();
    let coupler = Coupler::new(16);
    let ts: Vec<_> = (0..20_000)
        .map(|i| coupler.run(&g, &h, TrialSeed::new(43, i)).unwrap())
        .collect();
    let tv = marginal_check(&ts, &h, 2).unwrap();
    assert!(tv <= 0.05, "tv = {tv}");
}

#[test]
fn skipping_the_scenery_shift_is_detected() {
    let g = ConditionedLaw::sampled(TrialSeed::new(44, 0), 1).unwrap();
    let h = ConditionedLaw::sampled(TrialSeed::new(44, 1), 1).unwrap();
    assert_ne!(g.word(), h.word());
    let mut broken = Coupler::new(16);
    broken.shift_scenery = false;
    let ts: Vec<_> = (0..5_000)
        .map(|i| broken.run(&g, &h, TrialSeed::new(45, i)).unwrap())
        .collect();
    let tv = marginal_check(&ts, &h, 2).unwrap();
    assert!(tv > 0.1, "tv = {tv}");
}

#[test]
fn coupled_pairs_agree_on_late_events() {
    // the chance of a late pattern is the same under both conditionings,
    // up to sampling noise and the pairs that have not locked by then
    let g = ConditionedLaw::sampled(TrialSeed::new(46, 0), 1).unwrap();
    let h = ConditionedLaw::sampled(TrialSeed::new(46, 3), 1).unwrap();
    let horizon = 2_000;
    let late = 1_500;
    let mut coupler = Coupler::new(horizon);
    coupler.tail = horizon;
    let trials = 4_000;
    let (mut in_p, mut in_q, mut unlocked) = (0u32, 0u32, 0u32);
    let event = |s: Symbol| s == Symbol::new(Cell::H, Step::R);
    for i in 0..trials {
        let t = coupler.run(&g, &h, TrialSeed::new(47, i)).unwrap();
        in_p += event(t.p.at(late).unwrap()) as u32;
        in_q += event(t.q.at(late).unwrap()) as u32;
        unlocked += t.lock_fwd.is_none_or(|l| l > late) as u32;
    }
    let n = trials as f64;
    let (fp, fq) = (in_p as f64 / n, in_q as f64 / n);
    let sigma = (2.0 * 0.25 * 0.75 / n).sqrt();
    assert!(
        (fp - fq).abs() <= 3.0 * sigma + unlocked as f64 / n,
        "{fp} vs {fq}"
    );
}

#[test]
fn window_keys_pack_time_order() {
    let (_, o) = common::sample(TrialSeed::new(48, 0), -2, 2);
    let key = window_key(&o, -2, 2).unwrap();
    for (i, t) in (-2..=2).enumerate() {
        assert_eq!((key >> (2 * i)) & 3, o.at(t).unwrap().index() as u64);
    }
}

#[test]
fn split_disagreements_freeze_after_tau() {
    let coupler = SplitCoupler::new(300_000);
    let mut ts = Vec::new();
    for trial in 0..8 {
        let Ok(t) = coupler.run(TrialSeed::new(50, trial)) else {
            continue;
        };
        if t.status != SplitStatus::Success {
            continue;
        }
        assert!(t.agreement_after_tau && t.marker_times_match);
        for &(n, h) in &t.hamming_samples {
            assert!(h <= ((t.tau + 11) as f64 / n as f64).min(1.0) + 1e-12);
            if n >= t.tau + 11 {
                assert!((h * n as f64 - t.disagreements as f64).abs() < 1e-6);
            }
        }
        ts.push(t);
    }
    assert!(!ts.is_empty());
    let mut copied = ts.clone();
    for t in &mut copied {
        t.past_q = t.past_p.clone();
    }
    let c = conditional_independence_stat(&copied).unwrap();
    assert!((c - 1.0).abs() < 1e-9, "{c}");
}
