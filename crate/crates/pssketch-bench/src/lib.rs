//! Shared fixtures for the criterion benches: a reproducible synthetic trace
//! and budget-fitted detector cells, so every bench measures the same input.

use pssketch::eval::{CellConfig, DetectorKind, HarnessOptions};
use pssketch::synth::{generate_trace, PlantedGroup, PopulationModel};
use pssketch::{Criterion, WindowedTrace};

/// Reporting thresholds used across the benches.
pub fn bench_criterion() -> Criterion {
    Criterion { p0: 50, d0: 1.2 }
}

/// A mixed population: background flows around the persistence boundary plus
/// a planted persistent-and-sparse group, stretched over enough windows that
/// protection and overflow paths all run.
pub fn bench_trace(background: usize, windows: u64, seed: u64) -> WindowedTrace {
    let model = PopulationModel {
        flow_count: background,
        lambda_mean: 0.6,
        lambda_stddev: 0.3,
        planted: vec![PlantedGroup {
            lambda: 1.1,
            count: background / 20,
        }],
    };
    let (trace, _) = generate_trace(&model, windows, seed).expect("bench model is valid");
    trace
}

/// A detector cell at `memory_kb` kilobytes under the shared criterion.
pub fn bench_cell(detector: DetectorKind, memory_kb: u64, seed: u64) -> CellConfig {
    CellConfig {
        detector,
        memory_bits: memory_kb * 8 * 1024,
        criterion: bench_criterion(),
        seed,
        options: HarnessOptions::default(),
    }
}
