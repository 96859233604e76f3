//! Timing of constraint construction plus critical-value simulation for a
//! growing number of tested preferences.

use std::sync::Arc;
use std::time::Instant;

use anyhow::Result;
use ramkit::attention::{build_attention, sample_dataset, synthesize_choice_rule, AttentionModelSpec, SamplingDesign, SubsetWeights};
use ramkit::constraints::{build_R, permute_R};
use ramkit::domain::{MenuIndex, Preference};
use ramkit::estimation::{estimate_choice_rule, EstimatedChoice};
use ramkit::inference::{test_with_bank, DrawBank, InferenceOptions};

pub const DEFAULT_SIZES: &[usize] = &[1, 5, 10, 20, 50, 100, 400, 720];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub preferences: usize,
    pub seconds: f64,
}

/// Synthetic complete data on `k` alternatives with menus drawn uniformly.
pub fn bench_data(k: usize, total: usize, seed: u64) -> Result<EstimatedChoice> {
    let index = Arc::new(MenuIndex::complete(k)?);
    let mu = build_attention(&AttentionModelSpec::LogitWeights(SubsetWeights::SizePower(1.0)), index.clone())?;
    let pi = synthesize_choice_rule(&Preference::identity(k), &mu);
    let design = SamplingDesign::Random { menu_weights: vec![1.0; index.len()], total };
    let data = sample_dataset(&pi, &design, seed)?;
    Ok(estimate_choice_rule(&data, index)?)
}

/// For each size `s`, times testing the first `s` preferences in
/// lexicographic order, including drawing the shared Gaussian sample.
pub fn run_bench(est: &EstimatedChoice, sizes: &[usize], opts: &InferenceOptions) -> Result<Vec<BenchRow>> {
    let index = est.index();
    let prefs = Preference::all(index.k());
    let mut rows = Vec::new();
    for &s in sizes {
        let start = Instant::now();
        let bank = DrawBank::generate(est, opts.draws, opts.seed)?;
        let base = build_R(&prefs[0], index)?;
        for pref in prefs.iter().take(s) {
            let r = permute_R(&base, pref, index)?;
            test_with_bank(&r, est, opts, &bank)?;
        }
        rows.push(BenchRow { preferences: s.min(prefs.len()), seconds: start.elapsed().as_secs_f64() });
    }
    Ok(rows)
}
