//! Monte Carlo rejection-rate grids over hypotheses, attentiveness levels and
//! per-menu sample sizes.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{ensure, Result};
use rand::Rng as _;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use ramkit::attention::{build_attention, synthesize_choice_rule, AttentionModelSpec, SamplingDesign};
use ramkit::constraints::ConstraintMatrix;
use ramkit::domain::{ChoiceRule, MenuIndex, Preference};
use ramkit::estimation::estimate_choice_rule;
use ramkit::inference::{test_with_bank, DrawBank, InferenceOptions};
use ramkit::revelation::constraint_system;
use ramkit::rng::{child_rng, derive_seed};

#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub k: usize,
    pub dgp_pref: Preference,
    pub attention: AttentionModelSpec,
    /// Weight of a random choice rule mixed into the synthesized one.
    pub perturb: f64,
    pub phis: Vec<f64>,
    /// Observations per menu.
    pub ns: Vec<usize>,
    pub hypotheses: Vec<(String, Preference)>,
    pub replications: usize,
    pub options: InferenceOptions,
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.phis.is_empty(), "empty phi list");
        ensure!(!self.ns.is_empty(), "empty sample size list");
        ensure!(!self.hypotheses.is_empty(), "empty hypothesis list");
        ensure!(self.replications >= 1, "at least one replication is required");
        ensure!((0.0..=1.0).contains(&self.perturb), "perturbation weight outside [0, 1]");
        self.options.validate()?;
        Ok(())
    }

    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(format!("{self:?}").as_bytes()))
    }
}

/// `1, 0.95, ..., 0.5`.
pub fn phi_grid() -> Vec<f64> {
    (0..=10).map(|i| f64::from(100 - 5 * i) / 100.0).collect()
}

/// The five hypotheses of the default simulation grid on `a1..a5`.
pub fn default_hypotheses() -> Vec<(String, Preference)> {
    let rankings: [[usize; 5]; 5] = [[0, 1, 2, 3, 4], [1, 2, 3, 4, 0], [2, 3, 4, 1, 0], [3, 4, 2, 1, 0], [4, 3, 2, 1, 0]];
    rankings
        .iter()
        .enumerate()
        .map(|(i, r)| (format!("H{}", i + 1), Preference::new(r.to_vec()).expect("permutation")))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub hypothesis: String,
    pub phi: f64,
    pub n: usize,
    pub rejections: usize,
    pub replications: usize,
    pub mean_p_value: f64,
}

impl Cell {
    pub fn rejection_rate(&self) -> f64 {
        self.rejections as f64 / self.replications as f64
    }

    /// Binomial standard error of the rejection rate.
    pub fn mc_se(&self) -> f64 {
        let p = self.rejection_rate();
        (p * (1.0 - p) / self.replications as f64).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub cells: Vec<Cell>,
    pub wall_seconds: f64,
    pub seed: u64,
    pub version: &'static str,
    pub config_hash: String,
}

impl RunReport {
    pub fn cell(&self, hypothesis: &str, phi: f64, n: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.hypothesis == hypothesis && c.phi == phi && c.n == n)
    }
}

/// Mixes `pi` with a random choice rule: `(1 - w) pi + w q`.
pub fn perturb_rule(pi: &ChoiceRule, weight: f64, seed: u64) -> ChoiceRule {
    let mut rng = child_rng(seed, u64::MAX);
    let index = pi.index().clone();
    let mut values = pi.values().to_vec();
    for p in 0..index.len() {
        let range = index.choice_block(p);
        let q: Vec<f64> = range.clone().map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = q.iter().sum();
        for (v, x) in values[range].iter_mut().zip(&q) {
            *v = (1.0 - weight) * *v + weight * x / total;
        }
    }
    ChoiceRule::new(index, values).expect("same layout")
}

pub fn population_rule(grid: &ExperimentGrid) -> Result<ChoiceRule> {
    let index = Arc::new(MenuIndex::complete(grid.k)?);
    let mu = build_attention(&grid.attention, index)?;
    let pi = synthesize_choice_rule(&grid.dgp_pref, &mu);
    Ok(if grid.perturb > 0.0 { perturb_rule(&pi, grid.perturb, grid.options.seed) } else { pi })
}

/// Runs every replication for every sample size; datasets and Gaussian draws
/// are shared by all hypotheses and attentiveness levels of a replication.
pub fn run_grid(grid: &ExperimentGrid) -> Result<RunReport> {
    grid.validate()?;
    let start = Instant::now();
    let pi = population_rule(grid)?;
    let index = pi.index().clone();
    let systems: Vec<Vec<ConstraintMatrix>> = grid
        .hypotheses
        .iter()
        .map(|(_, h)| grid.phis.iter().map(|&phi| constraint_system(h, &index, Some(phi))).collect())
        .collect::<ramkit::Result<_>>()?;
    let reps = grid.replications;
    let jobs: Vec<(usize, usize)> = (0..grid.ns.len()).flat_map(|ni| (0..reps).map(move |r| (ni, r))).collect();
    // outcome[h][phi] = (reject, p-value) for each job
    let outcomes: Vec<Vec<Vec<(bool, f64)>>> = jobs
        .par_iter()
        .map(|&(ni, r)| {
            let job = (ni * reps + r) as u64;
            let design = SamplingDesign::Fixed { per_menu: grid.ns[ni] };
            let data = ramkit::attention::sample_dataset(&pi, &design, derive_seed(grid.options.seed, 2 * job))?;
            let est = estimate_choice_rule(&data, index.clone())?;
            let bank = DrawBank::generate(&est, grid.options.draws, derive_seed(grid.options.seed, 2 * job + 1))?;
            systems
                .iter()
                .map(|per_phi| {
                    per_phi
                        .iter()
                        .map(|r| test_with_bank(r, &est, &grid.options, &bank).map(|t| (t.reject, t.p_value)))
                        .collect::<ramkit::Result<Vec<_>>>()
                })
                .collect::<ramkit::Result<Vec<_>>>()
        })
        .collect::<ramkit::Result<_>>()?;
    let mut cells = Vec::new();
    for (hi, (name, _)) in grid.hypotheses.iter().enumerate() {
        for (pi_, &phi) in grid.phis.iter().enumerate() {
            for (ni, &n) in grid.ns.iter().enumerate() {
                let rows = &outcomes[ni * reps..(ni + 1) * reps];
                let rejections = rows.iter().filter(|o| o[hi][pi_].0).count();
                let mean_p_value = rows.iter().map(|o| o[hi][pi_].1).sum::<f64>() / reps as f64;
                cells.push(Cell { hypothesis: name.clone(), phi, n, rejections, replications: reps, mean_p_value });
            }
        }
    }
    Ok(RunReport {
        cells,
        wall_seconds: start.elapsed().as_secs_f64(),
        seed: grid.options.seed,
        version: env!("CARGO_PKG_VERSION"),
        config_hash: grid.config_hash(),
    })
}

/// Long format: `hypothesis,phi,n,rejection_rate,mc_se,replications`.
pub fn write_long_csv<W: Write>(report: &RunReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hypothesis", "phi", "n", "rejection_rate", "mc_se", "replications"])?;
    for c in &report.cells {
        w.write_record([
            c.hypothesis.clone(),
            c.phi.to_string(),
            c.n.to_string(),
            c.rejection_rate().to_string(),
            c.mc_se().to_string(),
            c.replications.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn report_json(report: &RunReport) -> serde_json::Value {
    serde_json::json!({
        "schema": "ramkit.mc/1",
        "seed": report.seed,
        "version": report.version,
        "config_hash": report.config_hash,
        "wall_seconds": report.wall_seconds,
        "cells": report.cells.iter().map(|c| serde_json::json!({
            "hypothesis": c.hypothesis,
            "phi": c.phi,
            "n": c.n,
            "rejection_rate": c.rejection_rate(),
            "mc_se": c.mc_se(),
            "mean_p_value": c.mean_p_value,
            "replications": c.replications,
        })).collect::<Vec<_>>(),
    })
}
