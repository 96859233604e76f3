//! Studentized max statistics, simulated critical values, and test inversion
//! over preferences.
//!
//! Gaussian draws are generated once per call (or shared through a
//! [`DrawBank`]) from per-draw derived seeds, so results do not depend on
//! thread scheduling or on the order in which preferences are visited.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::constraints::{augment_R_binary, build_R, build_R_limited, permute_R, ConstraintMatrix};
use crate::domain::Preference;
use crate::estimation::{studentize_sd, EstimatedChoice};
use crate::error::{RamError, Result};
use crate::revelation::{IdentifiedSet, IDENTIFIED_SET_MAX_K};
use crate::rng::child_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Generalized moment selection: slack moments are shrunk by `1/kappa`.
    Gms,
    /// Full estimated slack used as the centering.
    PlugIn,
    /// Zero centering.
    LeastFavorable,
    /// Drop clearly slack moments using a pilot least-favorable quantile.
    TwoStepMs,
    /// Center at slack bounded by a pilot least-favorable quantile.
    TwoStepUb,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Gms => "gms",
            Method::PlugIn => "pi",
            Method::LeastFavorable => "lf",
            Method::TwoStepMs => "ms2",
            Method::TwoStepUb => "ub2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "gms" => Method::Gms,
            "pi" | "plugin" => Method::PlugIn,
            "lf" => Method::LeastFavorable,
            "ms2" => Method::TwoStepMs,
            "ub2" => Method::TwoStepUb,
            other => return Err(RamError::InvalidOptions(format!("unknown method `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa {
    /// `sqrt(ln N)` with `N` the total sample size.
    LogN,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceOptions {
    pub method: Method,
    pub alpha: f64,
    pub draws: usize,
    pub kappa: Kappa,
    /// Pilot level for the two-step methods; `alpha / 10` when unset.
    pub beta: Option<f64>,
    pub sigma_floor: f64,
    pub seed: u64,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        Self { method: Method::Gms, alpha: 0.05, draws: 2000, kappa: Kappa::LogN, beta: None, sigma_floor: 1e-6, seed: 0 }
    }
}

impl InferenceOptions {
    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(self.alpha / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RamError::InvalidOptions(m));
        if !(0.0..1.0).contains(&self.alpha) {
            return bad(format!("alpha = {} outside [0, 1)", self.alpha));
        }
        if self.draws < 1 {
            return bad("at least one simulation draw is required".into());
        }
        if !(self.sigma_floor >= 0.0) {
            return bad(format!("sigma_floor = {} must be nonnegative", self.sigma_floor));
        }
        if let Kappa::Fixed(k) = self.kappa {
            if !(k > 0.0) {
                return bad(format!("kappa = {k} must be positive"));
            }
        }
        let beta = self.beta();
        match self.method {
            Method::TwoStepMs if !(beta > 0.0 && beta < self.alpha / 3.0) => {
                bad(format!("two-step selection needs 0 < beta < alpha/3, got beta = {beta}"))
            }
            Method::TwoStepUb if !(beta > 0.0 && beta < self.alpha) => {
                bad(format!("two-step bounding needs 0 < beta < alpha, got beta = {beta}"))
            }
            _ => Ok(()),
        }
    }

    fn kappa_value(&self, n_total: usize) -> f64 {
        match self.kappa {
            Kappa::LogN => (n_total as f64).ln().sqrt().max(f64::MIN_POSITIVE),
            Kappa::Fixed(k) => k,
        }
    }
}

/// Centered Gaussian draws with covariance `Omega / N`, one row per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawBank {
    values: Vec<f64>,
    n_cols: usize,
    draws: usize,
}

impl DrawBank {
    pub fn generate(est: &EstimatedChoice, draws: usize, seed: u64) -> Result<Self> {
        let index = est.index();
        let n_cols = index.choice_len();
        let roots: Vec<DMatrix<f64>> = (0..index.len())
            .map(|p| {
                let n = index.menu(p).len();
                let scale = 1.0 / est.n_total as f64;
                let block = DMatrix::from_row_slice(n, n, est.omega_block(p)) * scale;
                psd_sqrt(block)
            })
            .collect::<Result<_>>()?;
        let mut values = vec![0.0; draws * n_cols];
        values.par_chunks_mut(n_cols.max(1)).enumerate().for_each(|(m, row)| {
            let mut rng = child_rng(seed, m as u64);
            for (p, root) in roots.iter().enumerate() {
                let range = index.choice_block(p);
                let e: Vec<f64> = (0..range.len()).map(|_| rng.sample(StandardNormal)).collect();
                for (i, out) in row[range.clone()].iter_mut().enumerate() {
                    *out = (0..e.len()).map(|j| root[(i, j)] * e[j]).sum();
                }
            }
        });
        Ok(Self { values, n_cols, draws })
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn draw(&self, m: usize) -> &[f64] {
        &self.values[m * self.n_cols..(m + 1) * self.n_cols]
    }
}

/// Symmetric square root with negative eigenvalues clipped at zero.
fn psd_sqrt(block: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let scale = block.amax().max(1e-300);
    let eig = SymmetricEigen::new(block);
    if let Some(&l) = eig.eigenvalues.iter().find(|&&l| l < -1e-10 * scale) {
        return Err(RamError::Numerical(format!("covariance block has eigenvalue {l:e}")));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Sample moments and their Studentization for one constraint system.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    /// `R pi_hat + offset`.
    pub values: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    /// `max(sigma_hat, sigma_floor)`.
    pub sigma: Vec<f64>,
    /// `sqrt(N) * value / sigma`; `-inf` for a slack row with zero spread.
    pub studentized: Vec<f64>,
    pub statistic: f64,
}

pub fn moments(r: &ConstraintMatrix, est: &EstimatedChoice, sigma_floor: f64) -> Result<Moments> {
    let values = r.apply(est.pi_hat.values());
    let sigma_hat = studentize_sd(r, est)?;
    let root_n = (est.n_total as f64).sqrt();
    let sigma: Vec<f64> = sigma_hat.iter().map(|s| s.max(sigma_floor)).collect();
    let studentized = values
        .iter()
        .zip(&sigma)
        .enumerate()
        .map(|(row, (&m, &s))| {
            if s > 0.0 {
                Ok(root_n * m / s)
            } else if m > 0.0 {
                Err(RamError::DegenerateMoment { row })
            } else if m == 0.0 {
                Ok(0.0)
            } else {
                Ok(f64::NEG_INFINITY)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let statistic = studentized.iter().copied().fold(0.0, f64::max);
    Ok(Moments { values, sigma_hat, sigma, studentized, statistic })
}

/// `sqrt(N) * max(max_l (R pi_hat)_l / sigma_l, 0)` and the raw `sigma_hat`.
pub fn test_statistic(r: &ConstraintMatrix, est: &EstimatedChoice, sigma_floor: f64) -> Result<(f64, Vec<f64>)> {
    let m = moments(r, est, sigma_floor)?;
    Ok((m.statistic, m.sigma_hat))
}

/// Order statistic at `ceil(level * M)` of the sorted draws.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let m = sorted.len();
    let k = ((level * m as f64) - 1e-9).ceil().clamp(1.0, m as f64) as usize;
    sorted[k - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValue {
    pub value: f64,
    /// Simulated statistics in draw order.
    pub draws: Vec<f64>,
    /// Pilot least-favorable quantile of the two-step methods.
    pub pilot: Option<f64>,
    /// Rows kept by two-step moment selection.
    pub active_rows: Option<Vec<usize>>,
}

/// Simulated statistic for every draw, with per-row additive centering
/// (in studentized units) and an optional row subset.
fn simulate(r: &ConstraintMatrix, m: &Moments, bank: &DrawBank, centering: &[f64], rows: Option<&[usize]>, root_n: f64) -> Vec<f64> {
    let all: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all = (0..r.n_rows()).collect();
            &all
        }
    };
    let compiled: Vec<(usize, f64, usize, f64, f64)> = rows
        .iter()
        .filter(|&&l| centering[l] > f64::NEG_INFINITY && m.sigma[l] > 0.0)
        .map(|&l| {
            let row = &r.rows()[l];
            let t = row.terms();
            let scale = root_n / m.sigma[l];
            let (c0, k0) = (t[0].col, t[0].coef * scale);
            let (c1, k1) = if t.len() > 1 { (t[1].col, t[1].coef * scale) } else { (t[0].col, 0.0) };
            (c0, k0, c1, k1, centering[l])
        })
        .collect();
    (0..bank.draws())
        .map(|d| {
            let z = bank.draw(d);
            compiled.iter().fold(0.0_f64, |acc, &(c0, k0, c1, k1, c)| acc.max(k0 * z[c0] + k1 * z[c1] + c))
        })
        .collect()
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn critical_value_with(
    r: &ConstraintMatrix,
    est: &EstimatedChoice,
    m: &Moments,
    opts: &InferenceOptions,
    bank: &DrawBank,
) -> Result<CriticalValue> {
    opts.validate()?;
    let root_n = (est.n_total as f64).sqrt();
    let level = 1.0 - opts.alpha;
    let neg = |x: f64| x.min(0.0);
    let zeros = vec![0.0; r.n_rows()];
    let lf_pilot = |beta: f64| {
        let draws = simulate(r, m, bank, &zeros, None, root_n);
        empirical_quantile(&sorted(&draws), 1.0 - beta)
    };
    let (draws, pilot, active, level) = match opts.method {
        Method::Gms | Method::PlugIn => {
            let kappa = if opts.method == Method::Gms { opts.kappa_value(est.n_total) } else { 1.0 };
            let centering: Vec<f64> = m.studentized.iter().map(|&x| neg(x) / kappa).collect();
            (simulate(r, m, bank, &centering, None, root_n), None, None, level)
        }
        Method::LeastFavorable => (simulate(r, m, bank, &zeros, None, root_n), None, None, level),
        Method::TwoStepMs => {
            let beta = opts.beta();
            let c = lf_pilot(beta);
            let keep: Vec<usize> = (0..r.n_rows()).filter(|&l| m.studentized[l] >= -2.0 * c).collect();
            let draws = simulate(r, m, bank, &zeros, Some(&keep), root_n);
            (draws, Some(c), Some(keep), level + 2.0 * beta)
        }
        Method::TwoStepUb => {
            let beta = opts.beta();
            let c = lf_pilot(beta);
            let centering: Vec<f64> = m.studentized.iter().map(|&x| neg(x + c)).collect();
            (simulate(r, m, bank, &centering, None, root_n), Some(c), None, level + beta)
        }
    };
    let value = empirical_quantile(&sorted(&draws), level.min(1.0));
    Ok(CriticalValue { value, draws, pilot, active_rows: active })
}

/// Critical value with a fresh draw bank seeded from `opts.seed`.
pub fn simulate_critical_value(r: &ConstraintMatrix, est: &EstimatedChoice, opts: &InferenceOptions) -> Result<CriticalValue> {
    opts.validate()?;
    let m = moments(r, est, opts.sigma_floor)?;
    let bank = DrawBank::generate(est, opts.draws, opts.seed)?;
    critical_value_with(r, est, &m, opts, &bank)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub moments: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    pub studentized: Vec<f64>,
    pub pilot: Option<f64>,
    pub active_rows: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub diagnostics: Diagnostics,
}

impl TestResult {
    /// Row indices ordered from most to least violated.
    pub fn worst_rows(&self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.diagnostics.studentized.len()).collect();
        idx.sort_by(|&a, &b| self.diagnostics.studentized[b].total_cmp(&self.diagnostics.studentized[a]));
        idx.truncate(n);
        idx
    }
}

/// Test of one constraint system against shared draws.
pub fn test_with_bank(r: &ConstraintMatrix, est: &EstimatedChoice, opts: &InferenceOptions, bank: &DrawBank) -> Result<TestResult> {
    let m = moments(r, est, opts.sigma_floor)?;
    let cv = critical_value_with(r, est, &m, opts, bank)?;
    let exceed = cv.draws.iter().filter(|&&d| d > m.statistic).count();
    Ok(TestResult {
        statistic: m.statistic,
        critical_value: cv.value,
        p_value: exceed as f64 / cv.draws.len() as f64,
        reject: m.statistic > cv.value,
        diagnostics: Diagnostics {
            moments: m.values,
            sigma_hat: m.sigma_hat,
            studentized: m.studentized,
            pilot: cv.pilot,
            active_rows: cv.active_rows,
        },
    })
}

fn system_for(pref: &Preference, est: &EstimatedChoice, phi: Option<f64>) -> Result<ConstraintMatrix> {
    let index = est.index();
    let r = if index.is_complete() { build_R(pref, index)? } else { build_R_limited(pref, index)? };
    match phi {
        Some(phi) => augment_R_binary(&r, phi, index),
        None => Ok(r),
    }
}

/// Tests whether `pref` is compatible with the estimated choice rule.
pub fn test_preference(est: &EstimatedChoice, pref: &Preference, phi: Option<f64>, opts: &InferenceOptions) -> Result<TestResult> {
    opts.validate()?;
    let r = system_for(pref, est, phi)?;
    let bank = DrawBank::generate(est, opts.draws, opts.seed)?;
    test_with_bank(&r, est, opts, &bank)
}

/// Tests every preference in `prefs` against one shared draw bank.
pub fn test_many(est: &EstimatedChoice, prefs: &[Preference], phi: Option<f64>, opts: &InferenceOptions, bank: &DrawBank) -> Result<Vec<TestResult>> {
    opts.validate()?;
    let index = est.index();
    // a fixed base keeps row order independent of the order of `prefs`
    let base = if index.is_complete() { Some(build_R(&Preference::identity(index.k()), index)?) } else { None };
    prefs
        .par_iter()
        .map(|pref| {
            let r = match &base {
                Some(b) => permute_R(b, pref, index)?,
                None => build_R_limited(pref, index)?,
            };
            let r = match phi {
                Some(phi) => augment_R_binary(&r, phi, index)?,
                None => r,
            };
            test_with_bank(&r, est, opts, bank)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSet {
    pub set: IdentifiedSet,
    /// Every preference with its test, in lexicographic order.
    pub results: Vec<(Preference, TestResult)>,
}

/// Preferences not rejected at level `alpha`.
pub fn confidence_set(est: &EstimatedChoice, phi: Option<f64>, opts: &InferenceOptions) -> Result<ConfidenceSet> {
    let k = est.index().k();
    if k > IDENTIFIED_SET_MAX_K {
        return Err(RamError::TooManyAlternatives { k, limit: IDENTIFIED_SET_MAX_K });
    }
    opts.validate()?;
    let prefs = Preference::all(k);
    let bank = DrawBank::generate(est, opts.draws, opts.seed)?;
    let tests = test_many(est, &prefs, phi, opts, &bank)?;
    let results: Vec<(Preference, TestResult)> = prefs.into_iter().zip(tests).collect();
    let preferences = results.iter().filter(|(_, t)| !t.reject).map(|(p, _)| p.clone()).collect();
    Ok(ConfidenceSet { set: IdentifiedSet { preferences, phi }, results })
}

/// Rejects the model when no preference survives.
pub fn specification_test(est: &EstimatedChoice, phi: Option<f64>, opts: &InferenceOptions) -> Result<(bool, ConfidenceSet)> {
    let cs = confidence_set(est, phi, opts)?;
    Ok((cs.set.is_empty(), cs))
}

/// A set of preferences given by enumeration or by a membership rule.
pub enum Collection {
    List(Vec<Preference>),
    Predicate(Box<dyn Fn(&Preference) -> bool + Send + Sync>),
}

impl Collection {
    /// `{pref : a is preferred to b}`.
    pub fn prefers(a: usize, b: usize) -> Self {
        Collection::Predicate(Box::new(move |p| p.prefers(a, b)))
    }

    fn members(&self, k: usize) -> Vec<Preference> {
        match self {
            Collection::List(v) => {
                let mut v = v.clone();
                v.sort();
                v.dedup();
                v
            }
            Collection::Predicate(f) => Preference::all(k).into_iter().filter(|p| f(p)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectionTest {
    pub reject: bool,
    pub results: Vec<(Preference, TestResult)>,
}

/// Rejects when the confidence set misses every member of the collection.
pub fn collection_test(est: &EstimatedChoice, collection: &Collection, phi: Option<f64>, opts: &InferenceOptions) -> Result<CollectionTest> {
    let k = est.index().k();
    let members = collection.members(k);
    if members.is_empty() {
        return Err(RamError::EmptyCollection);
    }
    if let Some(p) = members.iter().find(|p| p.k() != k) {
        return Err(RamError::InvalidPreference(format!("{p:?} does not rank {k} alternatives")));
    }
    opts.validate()?;
    let bank = DrawBank::generate(est, opts.draws, opts.seed)?;
    let tests = test_many(est, &members, phi, opts, &bank)?;
    let reject = tests.iter().all(|t| t.reject);
    Ok(CollectionTest { reject, results: members.into_iter().zip(tests).collect() })
}
