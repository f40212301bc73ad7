use std::collections::BTreeMap;

use anyhow::{ensure, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};
use ttlab_core::coupling::{
    conditional_independence_stat, enumerate_conditional_law, ConditionedLaw, Coupler,
    SplitCoupler, SplitStatus, SplitTranscript, WindowHistogram,
};
use ttlab_core::{
    align_sceneries, choose_n1_n2, equivalent1, equivalent2, find_markers, generate_output,
    marker_records, reconstruct_scenery, reconstruct_scenery_at, rewrite_markers, scan_stream,
    stitch_marker_records, Error, RandomPath, Scenery, TTOutput, TrialSeed, MARKER_LEN,
};

use crate::Opts;

pub struct Row {
    pub json: Value,
    pub csv: Vec<String>,
}

pub struct Report {
    pub header: Vec<String>,
    pub rows: Vec<Row>,
    pub summary: Option<Value>,
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn ratio(x: f64) -> String {
    format!("{x:.6}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Runs `f` for every trial on the rayon pool, keeping trial order.
fn per_trial<T: Send>(o: &Opts, f: impl Fn(TrialSeed) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..o.trials)
        .into_par_iter()
        .map(|i| f(TrialSeed::new(o.seed, i)))
        .collect()
}

fn sample_window(seed: TrialSeed, w: i64) -> Result<(Scenery, TTOutput)> {
    let mut sc = Scenery::new(seed);
    let path = RandomPath::new(seed).segment(-w, w);
    let out = generate_output(&mut sc, &path, -w, w)?;
    Ok((sc, out))
}

fn with_ids(seed: TrialSeed, mut v: Value) -> Value {
    let m = v.as_object_mut().expect("rows are objects");
    m.insert("seed".into(), json!(seed.master));
    m.insert("trial".into(), json!(seed.trial));
    v
}

pub fn generate(o: &Opts) -> Result<Report> {
    let rows = per_trial(o, |seed| {
        let (_, out) = sample_window(seed, o.window)?;
        let v = serde_json::to_value(&out)?;
        let csv = vec![
            seed.trial.to_string(),
            out.start().to_string(),
            v["scenery"].as_str().unwrap_or_default().to_string(),
            v["path"].as_str().unwrap_or_default().to_string(),
        ];
        Ok(Row {
            json: with_ids(seed, v),
            csv,
        })
    })?;
    Ok(Report {
        header: header(&["trial", "start", "scenery", "path"]),
        rows,
        summary: None,
    })
}

/// Gap counts bucketed by powers of two: bucket `k` holds gaps in `[2^k, 2^(k+1))`.
fn gap_histogram(gaps: impl Iterator<Item = i64>) -> BTreeMap<u32, u64> {
    let mut h = BTreeMap::new();
    for g in gaps {
        *h.entry(g.max(1).ilog2()).or_insert(0) += 1;
    }
    h
}

fn histogram_json(h: &BTreeMap<u32, u64>) -> Value {
    Value::Array(
        h.iter()
            .map(|(&k, &c)| json!({ "lo": 1i64 << k, "hi": (1i64 << (k + 1)) - 1, "count": c }))
            .collect(),
    )
}

pub fn markers(o: &Opts) -> Result<Report> {
    let positions = o.steps.saturating_sub(MARKER_LEN as u64 - 1);
    let rate = |count: usize, positions: u64| {
        if positions == 0 {
            0.0
        } else {
            count as f64 / positions as f64
        }
    };
    let scans = per_trial(o, |seed| Ok((seed, scan_stream(seed, o.steps))))?;
    let mut pooled = BTreeMap::new();
    let mut total = 0;
    let rows = scans
        .into_iter()
        .map(|(seed, scan)| {
            let hist = gap_histogram(scan.times.windows(2).map(|w| w[1] - w[0]));
            for (&k, &c) in &hist {
                *pooled.entry(k).or_insert(0) += c;
            }
            total += scan.times.len();
            let r = rate(scan.times.len(), positions);
            let csv = vec![
                seed.trial.to_string(),
                o.steps.to_string(),
                scan.times.len().to_string(),
                ratio(r),
            ];
            let json = with_ids(
                seed,
                json!({
                    "steps": o.steps,
                    "count": scan.times.len(),
                    "rate": r,
                    "times": scan.times,
                    "gap_histogram": histogram_json(&hist),
                    "records": scan.records,
                }),
            );
            Row { json, csv }
        })
        .collect();
    let summary = json!({
        "trials": o.trials,
        "count": total,
        "rate": rate(total, positions * o.trials),
        "expected_rate": 1.0 / 65536.0,
        "gap_histogram": histogram_json(&pooled),
    });
    Ok(Report {
        header: header(&["trial", "steps", "count", "rate"]),
        rows,
        summary: Some(summary),
    })
}

pub fn couple(o: &Opts) -> Result<Report> {
    ensure!(o.n >= 1, "couple needs --n >= 1");
    // the two conditioning words come from streams no trial uses
    let g = ConditionedLaw::sampled(TrialSeed::new(o.seed, u64::MAX), o.n)?;
    let h = ConditionedLaw::sampled(TrialSeed::new(o.seed, u64::MAX - 1), o.n)?;
    let coupler = Coupler::new(o.horizon);
    let depth = 2;
    let (lo, hi) = (-o.n - depth, o.n + depth);
    // the marginal check is skipped when the window is too wide to enumerate
    let exact = enumerate_conditional_law(&h, lo, hi).ok();
    let runs = per_trial(o, |seed| {
        let t = coupler.run(&g, &h, seed)?;
        if let (Some(shift), Some(lf), Some(lb)) = (t.shift, t.lock_fwd, t.lock_bwd) {
            let window_ok = t.q.restrict(-o.n, o.n)? == *h.word();
            let outside_ok = (t.p.start()..=t.p.end())
                .filter(|&s| s >= lf || s <= lb)
                .all(|s| t.p.at(s) == t.q.at(s));
            ensure!(
                window_ok && outside_ok && shift % 2 == 0,
                "trial {}: coupling contract violated",
                seed.trial
            );
        }
        let mut hist = None;
        if exact.is_some() {
            let mut w = WindowHistogram::new(lo, hi)?;
            if w.add(&t.q).is_ok() {
                hist = Some(w);
            }
        }
        Ok((t, hist))
    })?;
    let mut merged = exact
        .as_ref()
        .map(|_| WindowHistogram::new(lo, hi))
        .transpose()?;
    let mut shifts: BTreeMap<i64, u64> = BTreeMap::new();
    let mut successes = 0u64;
    let mut rows = Vec::with_capacity(runs.len());
    for (t, hist) in runs {
        if let (Some(m), Some(w)) = (merged.as_mut(), hist.as_ref()) {
            m.merge(w);
        }
        if let Some(s) = t.shift {
            *shifts.entry(s).or_insert(0) += 1;
        }
        successes += (t.status == ttlab_core::coupling::CoupleStatus::Success) as u64;
        let json = serde_json::to_value(&t)?;
        let csv = vec![
            t.trial.to_string(),
            json["status"].as_str().unwrap_or_default().to_string(),
            opt(t.shift),
            opt(t.lock_fwd),
            opt(t.lock_bwd),
        ];
        rows.push(Row { json, csv });
    }
    let tv = match (&merged, &exact) {
        (Some(m), Some(e)) if m.total() > 0 => Some(m.tv_to(e)),
        _ => None,
    };
    let summary = json!({
        "trials": o.trials,
        "n": o.n,
        "horizon": o.horizon,
        "g": g.word(),
        "h": h.word(),
        "success_rate": successes as f64 / o.trials as f64,
        "shifts": shifts.iter().map(|(s, c)| json!([s, c])).collect::<Vec<_>>(),
        "marginal_window": [lo, hi],
        "marginal_tv": tv,
    });
    Ok(Report {
        header: header(&["trial", "status", "shift", "lock_fwd", "lock_bwd"]),
        rows,
        summary: Some(summary),
    })
}

pub fn split(o: &Opts) -> Result<Report> {
    let coupler = SplitCoupler::new(o.horizon);
    let runs: Vec<(TrialSeed, Option<SplitTranscript>)> =
        per_trial(o, |seed| match coupler.run(seed) {
            Ok(t) => Ok((seed, Some(t))),
            Err(Error::NoMarkerInHorizon) => Ok((seed, None)),
            Err(e) => Err(e.into()),
        })?;
    let mut cols = vec!["trial".to_string(), "status".into(), "tau".into()];
    cols.extend(coupler.checkpoints.iter().map(|n| format!("h_{n}")));
    let mut rows = Vec::with_capacity(runs.len());
    let mut sums = vec![0.0; coupler.checkpoints.len()];
    let (mut ok, mut tau_sum) = (0u64, 0i64);
    for (seed, t) in &runs {
        let Some(t) = t else {
            let mut csv = vec![seed.trial.to_string(), "no_marker".into(), String::new()];
            csv.extend(coupler.checkpoints.iter().map(|_| String::new()));
            rows.push(Row {
                json: with_ids(*seed, json!({ "status": "no_marker" })),
                csv,
            });
            continue;
        };
        let json = serde_json::to_value(t)?;
        let mut csv = vec![
            seed.trial.to_string(),
            json["status"].as_str().unwrap_or_default().to_string(),
            t.tau.to_string(),
        ];
        csv.extend(
            coupler
                .checkpoints
                .iter()
                .map(|&n| t.hamming(n).map(ratio).unwrap_or_default()),
        );
        if t.status == SplitStatus::Success {
            ok += 1;
            tau_sum += t.tau;
            for (s, &n) in sums.iter_mut().zip(&coupler.checkpoints) {
                *s += t.hamming(n).unwrap_or(0.0);
            }
        }
        rows.push(Row { json, csv });
    }
    let done: Vec<SplitTranscript> = runs.into_iter().filter_map(|(_, t)| t).collect();
    let mean = |x: f64| if ok == 0 { None } else { Some(x / ok as f64) };
    let summary = json!({
        "trials": o.trials,
        "horizon": o.horizon,
        "successes": ok,
        "mean_tau": mean(tau_sum as f64),
        "mean_hamming": coupler.checkpoints.iter().zip(&sums)
            .map(|(n, &s)| json!([n, mean(s)])).collect::<Vec<_>>(),
        "past_correlation": conditional_independence_stat(&done).ok(),
    });
    Ok(Report {
        header: cols,
        rows,
        summary: Some(summary),
    })
}

pub fn reconstruct(o: &Opts) -> Result<Report> {
    let rows = per_trial(o, |seed| {
        let (mut sc, out) = sample_window(seed, o.window)?;
        let rec = reconstruct_scenery(&out);
        ensure!(
            sc.word(rec.lo(), rec.hi()) == rec.cells(),
            "trial {}: reconstruction disagrees with the source scenery",
            seed.trial
        );
        let records = marker_records(&out)?;
        let stitched = if records.is_empty() {
            None
        } else {
            Some(stitch_marker_records(&records, None).context("stitching marker records")?)
        };
        let v = serde_json::to_value(&rec)?;
        let csv = vec![
            seed.trial.to_string(),
            rec.lo().to_string(),
            rec.hi().to_string(),
            v["cells"].as_str().unwrap_or_default().to_string(),
        ];
        let json = with_ids(
            seed,
            json!({
                "window": [out.start(), out.end()],
                "scenery": v,
                "records": records.len(),
                "stitched": stitched,
            }),
        );
        Ok(Row { json, csv })
    })?;
    Ok(Report {
        header: header(&["trial", "lo", "hi", "cells"]),
        rows,
        summary: None,
    })
}

pub fn rewrite(o: &Opts) -> Result<Report> {
    let rows = per_trial(o, |seed| {
        let (_, out) = sample_window(seed, o.window)?;
        let before = find_markers(&out).times.len();
        let json;
        let csv;
        match choose_n1_n2(&out, &out, o.n) {
            Ok((n1, n2)) => {
                let w = rewrite_markers(&out, n1, n2)?;
                let after = find_markers(&w).times.len();
                ensure!(
                    equivalent1(&out, &w)?,
                    "trial {}: rewrite changed the cells",
                    seed.trial
                );
                json = json!({
                    "status": "rewritten",
                    "n1": n1,
                    "n2": n2,
                    "markers_before": before,
                    "markers_after": after,
                    "same_labels": equivalent2(&out, &w)?,
                    "output": w,
                });
                csv = vec![
                    seed.trial.to_string(),
                    "rewritten".into(),
                    n1.to_string(),
                    n2.to_string(),
                    before.to_string(),
                    after.to_string(),
                ];
            }
            Err(Error::NotFoundInWindow { .. }) => {
                json = json!({ "status": "no_bounds", "markers_before": before });
                csv = vec![
                    seed.trial.to_string(),
                    "no_bounds".into(),
                    String::new(),
                    String::new(),
                    before.to_string(),
                    String::new(),
                ];
            }
            Err(e) => return Err(e.into()),
        }
        Ok(Row {
            json: with_ids(seed, json),
            csv,
        })
    })?;
    Ok(Report {
        header: header(&[
            "trial",
            "status",
            "n1",
            "n2",
            "markers_before",
            "markers_after",
        ]),
        rows,
        summary: None,
    })
}

pub fn cfiber(o: &Opts) -> Result<Report> {
    let rows = per_trial(o, |seed| {
        let (_, out) = sample_window(seed, o.window)?;
        // the scenery seen from an even time is an even translate of the one
        // seen from time 0, by the walker's displacement
        let t = o.window & !1;
        let expected = out.geometry(0, t)?.net;
        let s0 = reconstruct_scenery_at(&out, 0)?;
        let st = reconstruct_scenery_at(&out, t)?;
        let res = align_sceneries(&s0, &st, o.window)?;
        let ks = res.translate_ks();
        ensure!(
            ks.contains(&expected),
            "trial {}: expected translate {expected} not found",
            seed.trial
        );
        let join = |v: &[i64]| {
            v.iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        let csv = vec![
            seed.trial.to_string(),
            t.to_string(),
            expected.to_string(),
            join(&ks),
            join(&res.reflection_ks()),
        ];
        let json = with_ids(
            seed,
            json!({
                "anchor_time": t,
                "expected_k": expected,
                "alignment": res,
            }),
        );
        Ok(Row { json, csv })
    })?;
    Ok(Report {
        header: header(&[
            "trial",
            "anchor_time",
            "expected_k",
            "translates",
            "reflections",
        ]),
        rows,
        summary: None,
    })
}
