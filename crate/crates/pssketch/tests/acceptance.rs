//! Acceptance suite: one test per numbered criterion, each printing a single
//! `criterion N: PASS/FAIL` line. Expected values are frozen from hand
//! calculation (worked examples, golden dumps, closed forms) or checked
//! against independent oracles computed in this file.

use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use pssketch::baselines::{
    pisketch_equal_space_max_persistence, pisketch_space_bits, run_trace, CmSketch, CmsConfig,
    OoSketch,
};
use pssketch::eval::{run_cell, CellConfig, DetectorKind, HarnessOptions, MetricsRecord};
use pssketch::synth::{
    ejection_experiment, generate_trace, theory_stats, PlantedGroup, PopulationModel,
};
use pssketch::trace::{answer_set, exact_stats, PacketRecord};
use pssketch::{
    Criterion, FlowKey, InsertOutcome, PsSketch, SketchConfig, WidthConfig, WindowedTrace,
};

/// Runs a criterion body and prints its one-line verdict; assertion failures
/// inside the body surface as the FAIL line plus the original panic.
fn criterion(n: u32, what: &str, body: impl FnOnce() + std::panic::UnwindSafe) {
    match std::panic::catch_unwind(body) {
        Ok(()) => println!("criterion {n}: PASS — {what}"),
        Err(cause) => {
            println!("criterion {n}: FAIL — {what}");
            std::panic::resume_unwind(cause);
        }
    }
}

#[test]
fn criterion_1_worked_reconstruction_example() {
    criterion(
        1,
        "defaults reconstruct f=261, p=210, d=1.2428571... (persistent, not PS)",
        || {
            let config = SketchConfig::default();
            assert_eq!(config.widths.frequency_bits, 8);
            assert_eq!(config.widths.persistence_bits, 6);
            assert_eq!(config.widths.p_overflow_threshold, 64);
            assert_eq!(config.criterion, Criterion { p0: 50, d0: 1.2 });

            let mut sketch = PsSketch::new(config).unwrap();
            let flow = FlowKey(0xA11CE);
            // 210 windows with one packet each: persistence overflows at 64,
            // 128, and 192 leave p_of=3, p=18. The frequency counter carries
            // 210 packets; 46 more wrap it once (f_of=1), five more leave f=5.
            sketch.insert(flow);
            for _ in 1..210 {
                sketch.new_window();
                sketch.insert(flow);
            }
            for _ in 0..51 {
                sketch.insert(flow);
            }

            let report = sketch.query();
            let stats = report.stats[&flow];
            assert_eq!(stats.frequency, 261, "f_of * 256 + residual");
            assert_eq!(stats.persistence, 210, "p_of * 64 + residual");
            let density = stats.density().unwrap();
            assert!((density - 261.0 / 210.0).abs() < 1e-12);
            assert!((density - 1.242_857_142_8).abs() < 1e-9);
            // Persistent (210 >= 50) but too dense for PS at d0 = 1.2.
            assert!(!report.ps.contains(&flow));
            assert!(report.persistent_only().any(|k| k == flow));
        },
    );
}

fn lifecycle_config() -> SketchConfig {
    SketchConfig {
        buckets: 1,
        bucket_width: 2,
        protected_capacity: 4,
        widths: WidthConfig {
            fingerprint_bits: 8,
            frequency_bits: 4,
            persistence_bits: 3,
            freq_overflow_bits: 4,
            pers_overflow_bits: 4,
            p_overflow_threshold: 4,
        },
        criterion: Criterion { p0: 8, d0: 1.2 },
        hash_seed: 7,
        rng_seed: 9,
        burst_elimination: true,
        prune_enabled: true,
    }
}

#[test]
fn criterion_2_lifecycle_replay_matches_goldens() {
    criterion(
        2,
        "scripted lifecycle (create, replace, protect, prune) matches golden dumps",
        || {
            let mut s = PsSketch::new(lifecycle_config()).unwrap();
            let (a, b, c) = (FlowKey(1), FlowKey(2), FlowKey(3));
            // The goldens were written against hand-computed fingerprints
            // (165, 60, 63); distinctness keeps the three flows separate.
            assert_eq!(s.fingerprint(a), 165);
            assert_eq!(s.fingerprint(b), 60);
            assert_eq!(s.fingerprint(c), 63);

            // A fresh entry starts at f=1, p=1 with the window flag set.
            assert_eq!(s.insert(a), InsertOutcome::Created);
            assert_eq!(s.dump(), include_str!("golden/creation.txt"));

            // Bucket fills; the challenger meets min p = 1, so replacement
            // has probability 1/1 and evicts the lower-indexed slot.
            assert_eq!(s.insert(b), InsertOutcome::Created);
            assert_eq!(s.insert(c), InsertOutcome::Replaced);
            assert_eq!(s.dump(), include_str!("golden/replacement.txt"));

            // Three more present windows push p to the threshold 4: the flow
            // is admitted with a fresh overflow record (f_of=0, p_of=1) and
            // its residual persistence resets.
            for round in 0..3 {
                s.new_window();
                let out = s.insert(c);
                if round < 2 {
                    assert_eq!(out, InsertOutcome::Updated);
                } else {
                    assert_eq!(out, InsertOutcome::Protected);
                }
            }
            assert_eq!(s.dump(), include_str!("golden/protection.txt"));

            // Eight single-packet windows add two persistence overflows
            // (p_of=3); twenty packets in one window roll the 16-wide
            // frequency counter twice, fifteen more in the next window roll
            // it a third time: f_of climbs to 3 while f_of <= p_of holds.
            for _ in 0..8 {
                s.new_window();
                s.insert(c);
            }
            s.new_window();
            for _ in 0..20 {
                s.insert(c);
            }
            s.new_window();
            for _ in 0..16 {
                s.insert(c);
            }
            assert_eq!(s.dump(), include_str!("golden/preprune.txt"));

            // The fourth frequency overflow makes f_of=4 > p_of=3: the flow
            // has proven density 4*16/(3*4+3) > 4 and both layers drop it.
            s.new_window();
            let mut last = InsertOutcome::Updated;
            for _ in 0..16 {
                last = s.insert(c);
            }
            assert_eq!(last, InsertOutcome::Pruned);
            assert_eq!(s.dump(), include_str!("golden/postprune.txt"));
            assert_eq!(s.diagnostics().pruned, 1);
        },
    );
}

#[test]
fn criterion_3_oracle_equivalence_on_collision_free_traces() {
    criterion(
        3,
        "100 synthetic traces: reported stats equal the exact oracle for every flow with p >= 64",
        || {
            let started = Instant::now();
            let model = PopulationModel {
                flow_count: 60,
                lambda_mean: 0.6,
                lambda_stddev: 0.3,
                planted: vec![
                    PlantedGroup { lambda: 1.5, count: 15 },
                    PlantedGroup { lambda: 1.0, count: 15 },
                ],
            };
            for i in 0..100u64 {
                let (trace, _) = generate_trace(&model, 100, 9_000 + i).unwrap();
                assert!(trace.len() <= 10_000, "trace {i} too large: {}", trace.len());

                let d0 = [1.1, 1.5, 2.0, 3.0][(i % 4) as usize];
                let rule = Criterion { p0: 64, d0 };
                // Wide fingerprints and ample bucket room make collisions and
                // contention structurally impossible at this scale, so the
                // sketch must be information-lossless for protected flows.
                let config = SketchConfig {
                    buckets: 64,
                    bucket_width: 32,
                    protected_capacity: 256,
                    widths: WidthConfig {
                        fingerprint_bits: 32,
                        ..WidthConfig::default()
                    },
                    criterion: rule,
                    hash_seed: 0xC0FFEE ^ i,
                    rng_seed: 0xBEEF ^ i,
                    burst_elimination: false,
                    prune_enabled: false,
                };
                let mut sketch = PsSketch::new(config).unwrap();
                run_trace(&mut sketch, &trace);

                let exact = exact_stats(&trace);
                let report = sketch.query();

                let expected_keys: BTreeSet<FlowKey> = exact
                    .iter()
                    .filter(|(_, s)| s.persistence >= 64)
                    .map(|(&k, _)| k)
                    .collect();
                let got_keys: BTreeSet<FlowKey> = report.stats.keys().copied().collect();
                assert_eq!(got_keys, expected_keys, "trace {i}: tracked set mismatch");
                for key in &expected_keys {
                    assert_eq!(
                        report.stats[key], exact[key],
                        "trace {i}: flow {key} reconstruction mismatch"
                    );
                }
                assert_eq!(
                    report.ps,
                    answer_set(&exact, &rule),
                    "trace {i}: PS set mismatch at d0={d0}"
                );
            }
            let elapsed = started.elapsed();
            assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10s");
        },
    );
}

/// Random small configuration for the fuzz suite. The frequency range is
/// kept at >= 4x the persistence threshold so the prune-density guarantee
/// (checked inside the sketch in debug builds) is armed for every config.
fn fuzz_config(rng: &mut ChaCha8Rng) -> SketchConfig {
    let frequency_bits = rng.random_range(4..=8u32);
    let f_limit = 1u32 << frequency_bits;
    let persistence_bits = rng.random_range(2..=6u32);
    let p_cap = 1u32 << persistence_bits;
    let threshold_cap = p_cap.min(f_limit / 4).max(2);
    SketchConfig {
        buckets: rng.random_range(1..=8),
        bucket_width: rng.random_range(1..=4),
        protected_capacity: rng.random_range(1..=8),
        widths: WidthConfig {
            fingerprint_bits: *[4u32, 6, 8, 16].choose(rng).unwrap(),
            frequency_bits,
            persistence_bits,
            freq_overflow_bits: rng.random_range(2..=5),
            pers_overflow_bits: rng.random_range(2..=5),
            p_overflow_threshold: rng.random_range(2..=threshold_cap),
        },
        criterion: Criterion {
            p0: rng.random_range(1..=30),
            d0: 1.0 + rng.random::<f64>() * 3.0,
        },
        hash_seed: rng.random(),
        rng_seed: rng.random(),
        burst_elimination: rng.random(),
        prune_enabled: rng.random(),
    }
}

/// Structural invariants that must hold after every operation.
fn invariant_violation(s: &PsSketch) -> Option<String> {
    let cfg = s.config();
    let widths = cfg.widths;
    let snap = s.snapshot();
    let f_limit = widths.frequency_limit();
    let threshold = widths.p_overflow_threshold;
    let fp_max = ((1u64 << widths.fingerprint_bits) - 1) as u32;

    for &(bucket, slot, e) in &snap.competition {
        if e.fp == 0 || e.fp > fp_max {
            return Some(format!("cl {bucket}/{slot}: fingerprint {} out of range", e.fp));
        }
        if e.f >= f_limit {
            return Some(format!("cl {bucket}/{slot}: f={} not below {f_limit}", e.f));
        }
        if e.p >= threshold {
            return Some(format!("cl {bucket}/{slot}: p={} not below {threshold}", e.p));
        }
        if !e.flag_of && (e.f == 0 || e.p == 0) {
            return Some(format!(
                "cl {bucket}/{slot}: unprotected entry with zero counter (f={}, p={})",
                e.f, e.p
            ));
        }
    }

    // Both directions of flag <-> protection-record correspondence. With
    // narrow fingerprints several protected flows may alias one entry, so
    // the relation is "at least one", not a bijection.
    for &(key, pe) in &snap.protection {
        if pe.p_of == 0 || pe.p_of > widths.pers_overflow_max() {
            return Some(format!("pl {key}: p_of={} out of range", pe.p_of));
        }
        if pe.f_of > widths.freq_overflow_max() {
            return Some(format!("pl {key}: f_of={} out of range", pe.f_of));
        }
        let fp = s.fingerprint(key);
        let bucket = s.bucket_of(fp);
        let located = snap
            .competition
            .iter()
            .any(|&(b, _, e)| b == bucket && e.fp == fp && e.flag_of);
        if !located {
            return Some(format!("pl {key}: no flagged competition entry at its address"));
        }
    }
    for &(bucket, slot, e) in &snap.competition {
        if e.flag_of {
            let backed = snap.protection.iter().any(|&(key, _)| {
                s.fingerprint(key) == e.fp && s.bucket_of(e.fp) == bucket
            });
            if !backed {
                return Some(format!("cl {bucket}/{slot}: flagged entry has no protection record"));
            }
        }
    }
    None
}

#[test]
fn criterion_4_invariant_fuzz_suite() {
    criterion(
        4,
        "10^6 random operations across random configs violate no structural invariant",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(0xF0220);
            let mut total_ops: u64 = 0;
            let mut configs = 0u32;
            while total_ops < 1_000_000 {
                let config = fuzz_config(&mut rng);
                let key_space =
                    3 * (config.buckets * config.bucket_width) as u64 + 4;
                let mut s = PsSketch::new(config).unwrap();
                configs += 1;
                for _ in 0..5_000 {
                    total_ops += 1;
                    if rng.random_range(0..100) < 5 {
                        s.new_window();
                    } else {
                        let flow = FlowKey(rng.random_range(1..=key_space));
                        assert!(
                            s.debug_scan_agrees(flow),
                            "single-pass scan diverged from the reference scan"
                        );
                        let flagged_before: Vec<(usize, usize, u32)> = s
                            .snapshot()
                            .competition
                            .iter()
                            .filter(|&&(_, _, e)| e.flag_of)
                            .map(|&(b, sl, e)| (b, sl, e.fp))
                            .collect();
                        let diag_before = *s.diagnostics();

                        s.insert(flow);

                        let snap = s.snapshot();
                        let after: HashSet<(usize, usize, u32)> = snap
                            .competition
                            .iter()
                            .filter(|&&(_, _, e)| e.flag_of)
                            .map(|&(b, sl, e)| (b, sl, e.fp))
                            .collect();
                        let removed = flagged_before
                            .iter()
                            .filter(|t| !after.contains(t))
                            .count() as u64;
                        let d = *s.diagnostics();
                        // Protected entries may vanish only through prune,
                        // saturation, or an admission eviction — never to a
                        // contention replacement.
                        let allowed = (d.pruned - diag_before.pruned)
                            + (d.saturation_removals - diag_before.saturation_removals)
                            + (d.pl_evictions - diag_before.pl_evictions);
                        assert!(
                            removed <= allowed,
                            "{removed} protected entries vanished, {allowed} removals accounted"
                        );
                        if let Some(violation) = invariant_violation(&s) {
                            panic!("after op {total_ops}: {violation}");
                        }
                    }
                }
            }
            assert!(configs >= 100, "fuzz covered only {configs} configs");
        },
    );
}

/// Poisson moments computed purely from normalized pmf weights
/// (`w_k = lambda^k / k!`), with no closed-form shortcuts: the weights are
/// normalized by their own sum, so `exp` never enters.
fn pmf_moments(lambda: f64) -> (f64, f64, f64) {
    let mut w = 1.0f64;
    let (mut sum, mut sum_k, mut sum_k2) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..=400u32 {
        if k > 0 {
            w *= lambda / k as f64;
        }
        sum += w;
        sum_k += k as f64 * w;
        sum_k2 += (k as f64) * (k as f64) * w;
    }
    let mean = sum_k / sum;
    let var = sum_k2 / sum - mean * mean;
    let presence = (sum - 1.0) / sum; // all mass except k=0
    (mean, var, presence)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_5_model_moments_match_pmf_oracle_and_simulation() {
    criterion(
        5,
        "closed-form moments match pmf numerics to 1e-9 and simulation to 3 SE",
        || {
            let windows = 100u64;
            for &lambda in &[0.1f64, 0.5, 1.0, 2.0, 5.0] {
                let t = theory_stats(lambda, windows).unwrap();
                let (mean, var, q) = pmf_moments(lambda);
                let i = windows as f64;
                assert!(rel_err(t.mean_frequency, i * mean) < 1e-9, "E[f] at {lambda}");
                assert!(rel_err(t.var_frequency, i * var) < 1e-9, "VAR[f] at {lambda}");
                assert!(rel_err(t.mean_persistence, i * q) < 1e-9, "E[p] at {lambda}");
                assert!(
                    rel_err(t.var_persistence, i * q * (1.0 - q)) < 1e-9,
                    "VAR[p] at {lambda}"
                );
                assert!(rel_err(t.mean_density, mean / q) < 1e-9, "E[d] at {lambda}");
                assert!(
                    rel_err(
                        t.var_density_bound,
                        (mean / q).powi(2) + (mean + mean * mean) / q
                    ) < 1e-9,
                    "density variance bound at {lambda}"
                );

                // Monte-Carlo cross-check: 10^4 simulated flows over 100
                // windows; the density mean is exact for any presence count,
                // so trials without presence are redrawn.
                let trials = 10_000u32;
                let mut rng = ChaCha8Rng::seed_from_u64(0x5EED ^ lambda.to_bits());
                let sampler = Poisson::new(lambda).unwrap();
                let (mut sum_f, mut sum_p) = (0.0f64, 0.0f64);
                let (mut sum_d, mut sum_d2) = (0.0f64, 0.0f64);
                for _ in 0..trials {
                    let (f, p) = loop {
                        let (mut f, mut p) = (0u64, 0u64);
                        for _ in 0..windows {
                            let n = sampler.sample(&mut rng) as u64;
                            f += n;
                            p += u64::from(n > 0);
                        }
                        if p > 0 {
                            break (f, p);
                        }
                    };
                    sum_f += f as f64;
                    sum_p += p as f64;
                    let d = f as f64 / p as f64;
                    sum_d += d;
                    sum_d2 += d * d;
                }
                let n = trials as f64;
                let (mean_f, mean_p, mean_d) = (sum_f / n, sum_p / n, sum_d / n);
                let se_f = (t.var_frequency / n).sqrt();
                let se_p = (t.var_persistence / n).sqrt();
                let sd_d = ((sum_d2 - n * mean_d * mean_d) / (n - 1.0)).sqrt();
                let se_d = sd_d / n.sqrt();
                assert!(
                    (mean_f - t.mean_frequency).abs() < 3.0 * se_f,
                    "simulated E[f] {mean_f} vs {0} at lambda {lambda}",
                    t.mean_frequency
                );
                assert!(
                    (mean_p - t.mean_persistence).abs() < 3.0 * se_p,
                    "simulated E[p] {mean_p} vs {0} at lambda {lambda}",
                    t.mean_persistence
                );
                assert!(
                    (mean_d - t.mean_density).abs() < 3.0 * se_d,
                    "simulated E[d] {mean_d} vs {0} at lambda {lambda}",
                    t.mean_density
                );
            }
        },
    );
}

#[test]
fn criterion_6_random_ejection_is_unbiased() {
    criterion(
        6,
        "random-ejection density difference has mean zero (99% CI straddles 0)",
        || {
            let started = Instant::now();
            let report = ejection_experiment(1.0, 100, 100_000, 0xE7EC).unwrap();
            assert!(
                report.contains_zero,
                "99% CI [{}, {}] excludes zero (mean {}, SE {})",
                report.ci99_low, report.ci99_high, report.mean_diff, report.std_error
            );
            assert!(report.mean_diff.abs() < 3.0 * report.std_error);
            let elapsed = started.elapsed();
            assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}, budget 60s");
        },
    );
}

#[test]
fn criterion_7_space_formulas_frozen_arithmetic() {
    criterion(
        7,
        "space accounting matches frozen arithmetic (1,064,000 bits; 65,025/16,065; 4,032,000; 63)",
        || {
            let config = SketchConfig::default();
            assert_eq!(config.memory_bits(), 1_064_000);
            assert_eq!(config.max_storable(), (65_025, 16_065));

            let widths = WidthConfig::default();
            assert_eq!(
                pisketch_space_bits(32_000, 64, 8, &widths).unwrap(),
                4_032_000
            );
            // At equal space the single-counter design caps persistence at
            // the residual range: 63 versus 16,065 (255x smaller).
            assert_eq!(pisketch_equal_space_max_persistence(&widths), 63);
            assert_eq!(config.max_storable().1 / 63, 255);
        },
    );
}

/// Shared artifacts for the comparative criteria: one seeded trace with
/// planted sparse-persistent flows, dense persistent flows, low-rate
/// background, and heavy one-shot churn, plus the scored runs of every
/// detector at the reference budget.
struct Comparative {
    ps: MetricsRecord,
    pi_weight: MetricsRecord,
    pi_density: MetricsRecord,
    strawman: Vec<(u64, MetricsRecord)>, // (budget multiple, record)
    truth_size: usize,
    elapsed_secs: f64,
}

/// 16 KiB reference budget, in bits.
const COMPARATIVE_BUDGET_BITS: u64 = 16 * 8 * 1024;

/// The comparative trace: ~10^5 packets over 150 windows, with the planted
/// PS flows about 1% of the visible population. The large low-rate
/// background keeps every budget-matched structure far oversubscribed, so
/// eviction policy — not raw capacity — decides the outcome.
fn comparative_model() -> PopulationModel {
    PopulationModel {
        flow_count: 10_000,
        lambda_mean: 0.04,
        lambda_stddev: 0.015,
        planted: vec![
            // The targets: sparse and persistent (d ~ 1.5, p ~ 89).
            PlantedGroup { lambda: 0.9, count: 100 },
            // Dense persistent flows: high weight, fail the density cut.
            PlantedGroup { lambda: 4.0, count: 50 },
        ],
    }
}

/// At ~10^4 visible flows, 16-bit fingerprints would merge several reported
/// flows with background siblings; 24 bits keeps that probability negligible
/// while the entry stays less than a third the size of a baseline cell.
fn comparative_options() -> HarnessOptions {
    HarnessOptions {
        fingerprint_bits: 24,
        ..HarnessOptions::default()
    }
}

fn comparative() -> &'static Comparative {
    static ARTIFACTS: OnceLock<Comparative> = OnceLock::new();
    ARTIFACTS.get_or_init(|| {
        let started = Instant::now();
        let model = comparative_model();
        let (trace, _) = generate_trace(&model, 150, 0xC0A12A5E).unwrap();
        let rule = Criterion { p0: 50, d0: 2.0 };
        let exact = exact_stats(&trace);
        let truth_size = answer_set(&exact, &rule).len();

        let cell = |detector: DetectorKind, budget: u64| CellConfig {
            detector,
            memory_bits: budget,
            criterion: rule,
            seed: 11,
            options: comparative_options(),
        };
        let ps = run_cell(&cell(DetectorKind::PsSketch, COMPARATIVE_BUDGET_BITS), &trace, &exact);
        let pi_weight =
            run_cell(&cell(DetectorKind::PiSketch, COMPARATIVE_BUDGET_BITS), &trace, &exact);
        let pi_density = run_cell(
            &cell(DetectorKind::PiSketchDensity, COMPARATIVE_BUDGET_BITS),
            &trace,
            &exact,
        );
        let strawman = [1u64, 2, 4]
            .iter()
            .map(|&mult| {
                let record = run_cell(
                    &cell(DetectorKind::Strawman, mult * COMPARATIVE_BUDGET_BITS),
                    &trace,
                    &exact,
                );
                (mult, record)
            })
            .collect();
        let built = Comparative {
            ps,
            pi_weight,
            pi_density,
            strawman,
            truth_size,
            elapsed_secs: started.elapsed().as_secs_f64(),
        };
        if std::env::var_os("ACCEPTANCE_DEBUG").is_some() {
            eprintln!(
                "trace: {} packets, truth {}",
                trace.len(),
                built.truth_size
            );
            let dump = |tag: &str, r: &MetricsRecord| {
                eprintln!(
                    "{tag}: f1={:.4} p={:.4} r={:.4} are_f={:?} are_p={:?} tracked={} bits={}",
                    r.f1, r.precision, r.recall, r.are_frequency, r.are_persistence,
                    r.reported_total, r.memory_bits
                );
            };
            dump("ps        ", &built.ps);
            dump("pi-weight ", &built.pi_weight);
            dump("pi-density", &built.pi_density);
            for (m, r) in &built.strawman {
                dump(&format!("straw x{m}  "), r);
            }
        }
        built
    })
}

#[test]
fn criterion_8_comparative_f1_at_fixed_budget() {
    criterion(
        8,
        "at 16 KiB: two-layer F1 >= 0.95, weight baseline strictly lower, composition needs >= 5x",
        || {
            let c = comparative();
            assert!(c.truth_size >= 80, "oracle found only {} PS flows", c.truth_size);
            assert!(
                c.ps.f1 >= 0.95,
                "two-layer F1 {} below 0.95 (P={}, R={})",
                c.ps.f1,
                c.ps.precision,
                c.ps.recall
            );
            assert!(
                c.pi_weight.f1 < c.ps.f1,
                "weight baseline F1 {} not below {}",
                c.pi_weight.f1,
                c.ps.f1
            );
            for (mult, record) in &c.strawman {
                assert!(
                    record.f1 < c.ps.f1,
                    "composition baseline matched at {mult}x budget (F1 {})",
                    record.f1
                );
            }
            assert!(
                c.elapsed_secs < 120.0,
                "comparative runs took {}s, budget 120s",
                c.elapsed_secs
            );
        },
    );
}

#[test]
fn criterion_9_relative_error_gap() {
    criterion(
        9,
        "two-layer ARE at least 10x below the cell-store baseline's (f and p)",
        || {
            let c = comparative();
            let ps_f = c.ps.are_frequency.expect("two-layer reports flows");
            let ps_p = c.ps.are_persistence.expect("two-layer reports flows");
            let pi_f = c.pi_density.are_frequency.expect("baseline reports flows");
            let pi_p = c.pi_density.are_persistence.expect("baseline reports flows");
            assert!(pi_f > 0.0 && pi_p > 0.0, "baseline ARE degenerate");
            assert!(
                ps_f * 10.0 <= pi_f,
                "frequency ARE gap too small: {ps_f} vs {pi_f}"
            );
            assert!(
                ps_p * 10.0 <= pi_p,
                "persistence ARE gap too small: {ps_p} vs {pi_p}"
            );
        },
    );
}

#[test]
fn criterion_10_counter_arrays_never_underestimate() {
    criterion(
        10,
        "count-min and on-off estimates >= exact values on 10^3 random traces",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(0xCA5CADE);
            for case in 0..1_000u32 {
                let flows = rng.random_range(1..=20u64);
                let windows = rng.random_range(1..=10u64);
                let packets = rng.random_range(1..=200usize);
                let mut records = Vec::with_capacity(packets);
                for _ in 0..packets {
                    records.push(PacketRecord {
                        flow: FlowKey(rng.random_range(1..=flows)),
                        window: 0,
                    });
                }
                // Spread records over the windows while keeping order.
                for (i, rec) in records.iter_mut().enumerate() {
                    rec.window = (i as u64 * windows) / packets as u64;
                }
                let trace = WindowedTrace::from_records(records).unwrap();

                let config = CmsConfig {
                    rows: rng.random_range(1..=3),
                    cols: rng.random_range(4..=32),
                    counter_bits: 16,
                    seed: rng.random(),
                };
                let mut cms = CmSketch::new(config).unwrap();
                let mut oos = OoSketch::new(config).unwrap();
                let mut window = 0u64;
                for rec in trace.records() {
                    while window < rec.window {
                        oos.new_window();
                        window += 1;
                    }
                    cms.insert(rec.flow);
                    oos.insert(rec.flow);
                }

                for (flow, stats) in exact_stats(&trace) {
                    assert!(
                        cms.query(flow) >= stats.frequency,
                        "case {case}: count-min underestimated flow {flow}"
                    );
                    assert!(
                        oos.query(flow) >= stats.persistence,
                        "case {case}: on-off underestimated flow {flow}"
                    );
                }
            }
        },
    );
}
