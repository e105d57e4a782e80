//! Synthetic traces under a per-window Poisson arrival model.
//!
//! Every flow has a rate `lambda`; its packet count in each window is an
//! independent Poisson draw, so presence per window is Bernoulli with
//! probability `1 - exp(-lambda)`. The model gives closed forms for expected
//! frequency, persistence, and density (module [`theory`]) that the generator
//! and its Monte-Carlo validators share.

mod theory;

pub use theory::{
    ejection_experiment, theory_stats, validate_convergence, ConvergencePoint,
    ConvergenceReport, EjectionReport, TheoryStats,
};

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{FlowKey, PacketRecord, WindowedTrace};

/// Smallest admissible rate; normal draws below it are rejected and redrawn.
pub const LAMBDA_FLOOR: f64 = 1e-3;

/// A single flow's arrival model: `lambda` packets per window on average,
/// observed over `windows` windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowModel {
    pub lambda: f64,
    pub windows: u64,
}

/// Population of background flows with normally distributed rates
/// (truncated at [`LAMBDA_FLOOR`]) plus planted groups at fixed rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationModel {
    pub flow_count: usize,
    pub lambda_mean: f64,
    pub lambda_stddev: f64,
    #[serde(default)]
    pub planted: Vec<PlantedGroup>,
}

/// `count` flows all running at exactly `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedGroup {
    pub lambda: f64,
    pub count: usize,
}

impl PopulationModel {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda_mean.is_finite() || self.lambda_mean <= 0.0 {
            return Err(Error::invalid("lambda_mean", "must be finite and > 0"));
        }
        if !self.lambda_stddev.is_finite() || self.lambda_stddev < 0.0 {
            return Err(Error::invalid("lambda_stddev", "must be finite and >= 0"));
        }
        for group in &self.planted {
            if !group.lambda.is_finite() || group.lambda <= 0.0 {
                return Err(Error::invalid("planted.lambda", "must be finite and > 0"));
            }
        }
        if self.flow_count + self.planted.iter().map(|g| g.count).sum::<usize>() == 0 {
            return Err(Error::invalid("flow_count", "model contains no flows"));
        }
        Ok(())
    }
}

/// Everything needed to reproduce and grade a generated trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub windows: u64,
    pub flows: Vec<FlowInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowInfo {
    pub key: FlowKey,
    pub lambda: f64,
    pub planted: bool,
}

fn draw_truncated_lambda(rng: &mut ChaCha8Rng, normal: &Normal<f64>) -> f64 {
    loop {
        let lambda = normal.sample(rng);
        if lambda >= LAMBDA_FLOOR {
            return lambda;
        }
    }
}

/// Generates a windowed trace for the population. Within each window the
/// packet order is shuffled; across windows order follows window index. The
/// same `(model, windows, seed)` triple always yields the identical trace.
pub fn generate_trace(
    model: &PopulationModel,
    windows: u64,
    seed: u64,
) -> Result<(WindowedTrace, GroundTruth)> {
    model.validate()?;
    if windows == 0 {
        return Err(Error::invalid("windows", "must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Distinct nonzero keys; background first, then planted groups in order.
    let total = model.flow_count + model.planted.iter().map(|g| g.count).sum::<usize>();
    let mut keys: Vec<FlowKey> = Vec::with_capacity(total);
    let mut used = HashSet::with_capacity(total);
    while keys.len() < total {
        let key = rng.random::<u64>();
        if key != 0 && used.insert(key) {
            keys.push(FlowKey(key));
        }
    }

    let normal = Normal::new(model.lambda_mean, model.lambda_stddev)
        .map_err(|e| Error::invalid("lambda_stddev", e.to_string()))?;
    let mut flows: Vec<FlowInfo> = Vec::with_capacity(total);
    for &key in keys.iter().take(model.flow_count) {
        flows.push(FlowInfo {
            key,
            lambda: draw_truncated_lambda(&mut rng, &normal),
            planted: false,
        });
    }
    let mut next = model.flow_count;
    for group in &model.planted {
        for _ in 0..group.count {
            flows.push(FlowInfo {
                key: keys[next],
                lambda: group.lambda,
                planted: true,
            });
            next += 1;
        }
    }

    let samplers: Vec<Poisson<f64>> = flows
        .iter()
        .map(|f| Poisson::new(f.lambda).map_err(|e| Error::invalid("lambda", e.to_string())))
        .collect::<Result<_>>()?;

    let mut records: Vec<PacketRecord> = Vec::new();
    let mut window_buf: Vec<FlowKey> = Vec::new();
    for window in 0..windows {
        window_buf.clear();
        for (flow, sampler) in flows.iter().zip(&samplers) {
            let count = sampler.sample(&mut rng) as u64;
            for _ in 0..count {
                window_buf.push(flow.key);
            }
        }
        window_buf.shuffle(&mut rng);
        records.extend(window_buf.iter().map(|&flow| PacketRecord { flow, window }));
    }

    Ok((
        WindowedTrace::from_records(records)?,
        GroundTruth {
            seed,
            windows,
            flows,
        },
    ))
}
