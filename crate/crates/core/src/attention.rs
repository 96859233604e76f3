//! Parametric attention rules, the monotonicity check, choice synthesis, and
//! dataset sampling.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng as _;

use crate::domain::{AttentionRule, ChoiceDataset, ChoiceRule, Menu, MenuIndex, Observation, Preference};
use crate::error::{RamError, Result};
use crate::rng::{rng_from_seed, sample_categorical};

pub const MONOTONICITY_TOLERANCE: f64 = 1e-12;

/// Positive weights over consideration sets.
#[derive(Debug, Clone, PartialEq)]
pub enum SubsetWeights {
    /// `w_T = |T|^power`.
    SizePower(f64),
    /// Explicit weights; every consideration set that can occur must be listed.
    Table(BTreeMap<Menu, f64>),
}

impl SubsetWeights {
    fn weight(&self, t: Menu) -> Result<f64> {
        match self {
            SubsetWeights::SizePower(p) => Ok((t.len() as f64).powf(*p)),
            SubsetWeights::Table(map) => map
                .get(&t)
                .copied()
                .ok_or_else(|| RamError::InvalidModel(format!("no weight for consideration set {t}"))),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            SubsetWeights::SizePower(p) if !p.is_finite() => Err(RamError::InvalidModel(format!("size power {p}"))),
            SubsetWeights::Table(map) => match map.iter().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
                Some((t, w)) => Err(RamError::InvalidModel(format!("weight {w} on {t} must be positive"))),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttentionModelSpec {
    FullAttention,
    /// The first `n` available alternatives in `ordering`.
    TopN { ordering: Preference, n: usize },
    /// Uniform over size-`k` subsets, or everything when the menu is small.
    AtMostK { k: usize },
    /// Every non-empty subset equally likely.
    Uniform,
    LogitWeights(SubsetWeights),
    /// Each alternative noticed independently with probability `gamma[a]`,
    /// conditioned on noticing something.
    IndependentConsideration { gamma: Vec<f64> },
    /// Logit weights mixed with captivity `theta`; missing captivity is 0.
    Dogit { weights: SubsetWeights, captivity: BTreeMap<Menu, f64> },
    EliminationByAspects { aspects: Vec<(Menu, f64)> },
    ExplicitFilter(BTreeMap<Menu, Menu>),
    Mixture(Vec<(AttentionModelSpec, f64)>),
}

impl AttentionModelSpec {
    /// Checks parameter domains for a grand set of size `k`.
    pub fn validate(&self, k: usize) -> Result<()> {
        let bad = |msg: String| Err(RamError::InvalidModel(msg));
        let full = Menu::full(k);
        match self {
            AttentionModelSpec::FullAttention | AttentionModelSpec::Uniform => Ok(()),
            AttentionModelSpec::TopN { ordering, n } => {
                if ordering.k() != k {
                    return bad(format!("ordering ranks {} alternatives, expected {k}", ordering.k()));
                }
                if *n == 0 {
                    return bad("top-N cutoff must be at least 1".into());
                }
                Ok(())
            }
            AttentionModelSpec::AtMostK { k: cap } if *cap == 0 => bad("at-most-k needs k >= 1".into()),
            AttentionModelSpec::AtMostK { .. } => Ok(()),
            AttentionModelSpec::LogitWeights(w) => w.check(),
            AttentionModelSpec::IndependentConsideration { gamma } => {
                if gamma.len() != k {
                    return bad(format!("{} attention probabilities for {k} alternatives", gamma.len()));
                }
                match gamma.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
                    Some(g) => bad(format!("attention probability {g} outside (0,1)")),
                    None => Ok(()),
                }
            }
            AttentionModelSpec::Dogit { weights, captivity } => {
                weights.check()?;
                match captivity.iter().find(|(_, c)| !(**c >= 0.0 && c.is_finite())) {
                    Some((t, c)) => bad(format!("captivity {c} on {t} must be nonnegative")),
                    None => Ok(()),
                }
            }
            AttentionModelSpec::EliminationByAspects { aspects } => {
                let mut covered = Menu::default();
                for &(b, w) in aspects {
                    if !(w > 0.0 && w.is_finite()) {
                        return bad(format!("aspect weight {w} must be positive"));
                    }
                    if !b.is_subset_of(full) {
                        return Err(RamError::MenuOutsideGrandSet(b));
                    }
                    covered = covered.union(b);
                }
                if covered != full {
                    return bad(format!("alternatives {} belong to no aspect", full.minus(covered)));
                }
                Ok(())
            }
            AttentionModelSpec::ExplicitFilter(map) => {
                for (&s, &g) in map {
                    if g.is_empty() || !g.is_subset_of(s) {
                        return bad(format!("filter maps {s} to {g}, which is not a non-empty subset"));
                    }
                }
                Ok(())
            }
            AttentionModelSpec::Mixture(parts) => {
                if parts.is_empty() {
                    return bad("empty mixture".into());
                }
                let mut total = 0.0;
                for (spec, w) in parts {
                    if !(*w >= 0.0 && w.is_finite()) {
                        return bad(format!("mixture weight {w} must be nonnegative"));
                    }
                    spec.validate(k)?;
                    total += w;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("mixture weights sum to {total}"));
                }
                Ok(())
            }
        }
    }

    /// Attention distribution over the non-empty subsets of `s`, in ascending
    /// bitmask order.
    fn block(&self, s: Menu) -> Result<Vec<f64>> {
        let subsets: Vec<Menu> = s.subsets().collect();
        let point = |target: Menu| subsets.iter().map(|&t| if t == target { 1.0 } else { 0.0 }).collect();
        Ok(match self {
            AttentionModelSpec::FullAttention => point(s),
            AttentionModelSpec::TopN { ordering, n } => {
                let top = ordering.ranking().iter().copied().filter(|&a| s.contains(a)).take(*n);
                point(Menu::from_ids(top))
            }
            AttentionModelSpec::AtMostK { k } => {
                if s.len() <= *k {
                    point(s)
                } else {
                    let count = subsets.iter().filter(|t| t.len() == *k).count() as f64;
                    subsets.iter().map(|t| if t.len() == *k { 1.0 / count } else { 0.0 }).collect()
                }
            }
            AttentionModelSpec::Uniform => vec![1.0 / subsets.len() as f64; subsets.len()],
            AttentionModelSpec::LogitWeights(w) => logit_block(w, &subsets)?,
            AttentionModelSpec::IndependentConsideration { gamma } => {
                let beta = 1.0 - s.iter().map(|a| 1.0 - gamma[a]).product::<f64>();
                subsets
                    .iter()
                    .map(|&t| {
                        s.iter().map(|a| if t.contains(a) { gamma[a] } else { 1.0 - gamma[a] }).product::<f64>() / beta
                    })
                    .collect()
            }
            AttentionModelSpec::Dogit { weights, captivity } => {
                let logit = logit_block(weights, &subsets)?;
                let theta: Vec<f64> = subsets.iter().map(|t| captivity.get(t).copied().unwrap_or(0.0)).collect();
                let denom = 1.0 + theta.iter().sum::<f64>();
                logit.iter().zip(&theta).map(|(l, th)| (l + th) / denom).collect()
            }
            AttentionModelSpec::EliminationByAspects { aspects } => {
                let mut out = vec![0.0; subsets.len()];
                let mut total = 0.0;
                for &(b, w) in aspects {
                    let t = b.intersect(s);
                    if !t.is_empty() {
                        out[s.subset_rank(t)] += w;
                        total += w;
                    }
                }
                out.iter_mut().for_each(|x| *x /= total);
                out
            }
            AttentionModelSpec::ExplicitFilter(map) => {
                let g = map
                    .get(&s)
                    .ok_or_else(|| RamError::InvalidModel(format!("filter undefined on menu {s}")))?;
                point(*g)
            }
            AttentionModelSpec::Mixture(parts) => {
                let mut out = vec![0.0; subsets.len()];
                for (spec, w) in parts {
                    for (o, v) in out.iter_mut().zip(spec.block(s)?) {
                        *o += w * v;
                    }
                }
                out
            }
        })
    }
}

fn logit_block(w: &SubsetWeights, subsets: &[Menu]) -> Result<Vec<f64>> {
    let raw = subsets.iter().map(|&t| w.weight(t)).collect::<Result<Vec<f64>>>()?;
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|x| x / total).collect())
}

pub fn build_attention(spec: &AttentionModelSpec, index: Arc<MenuIndex>) -> Result<AttentionRule> {
    spec.validate(index.k())?;
    let mut values = Vec::with_capacity(index.attention_len());
    for &s in index.menus() {
        values.extend(spec.block(s)?);
    }
    AttentionRule::new(index, values)
}

/// A failure of monotonic attention: `mu(t|menu) > mu(t|menu - removed)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityViolation {
    pub menu: Menu,
    pub consideration: Menu,
    pub removed: Menu,
    pub value: f64,
    pub value_after_removal: f64,
}

/// Complete mode compares each menu with every single-alternative removal;
/// limited mode compares each menu with every indexed sub-menu that still
/// contains the consideration set.
pub fn check_monotonicity(mu: &AttentionRule) -> Vec<MonotonicityViolation> {
    let index = mu.index();
    let mut out = Vec::new();
    for (pos, &s) in index.menus().iter().enumerate() {
        let block = mu.block(pos);
        for (j, t) in s.subsets().enumerate() {
            let value = block[j];
            let outside = s.minus(t);
            if outside.is_empty() {
                continue;
            }
            let removals: Vec<Menu> = if index.is_complete() {
                outside.iter().map(Menu::singleton).collect()
            } else {
                outside.subsets().collect()
            };
            for removed in removals {
                let sub = s.minus(removed);
                let after = if sub.len() == 1 {
                    1.0
                } else {
                    match index.position(sub) {
                        Some(p) => mu.values()[index.attention_col(p, t)],
                        None => continue,
                    }
                };
                if value > after + MONOTONICITY_TOLERANCE {
                    out.push(MonotonicityViolation { menu: s, consideration: t, removed, value, value_after_removal: after });
                }
            }
        }
    }
    out
}

/// `pi(a|S) = sum over T of 1(a is best in T) * mu(T|S)`.
pub fn synthesize_choice_rule(pref: &Preference, mu: &AttentionRule) -> ChoiceRule {
    let index = mu.index().clone();
    let mut values = vec![0.0; index.choice_len()];
    for (pos, &s) in index.menus().iter().enumerate() {
        let block = mu.block(pos);
        for (j, t) in s.subsets().enumerate() {
            if block[j] != 0.0 {
                let best = pref.best_in(t).expect("non-empty consideration set");
                values[index.choice_col(pos, best)] += block[j];
            }
        }
    }
    ChoiceRule::new(index, values).expect("layout length")
}

#[derive(Debug, Clone, PartialEq)]
pub enum SamplingDesign {
    /// Exactly `per_menu` observations of every indexed menu, in index order.
    Fixed { per_menu: usize },
    /// `total` observations with menus drawn from positive weights aligned
    /// with the index order.
    Random { menu_weights: Vec<f64>, total: usize },
}

pub fn sample_dataset(pi: &ChoiceRule, design: &SamplingDesign, seed: u64) -> Result<ChoiceDataset> {
    let index = pi.index();
    let mut rng = rng_from_seed(seed);
    let mut obs = Vec::new();
    let draw = |pos: usize, rng: &mut crate::rng::Rng, obs: &mut Vec<Observation>| {
        let menu = index.menu(pos);
        let j = sample_categorical(pi.block(pos), rng.random::<f64>());
        let choice = menu.iter().nth(j).expect("position inside menu");
        obs.push(Observation { menu, choice });
    };
    match design {
        SamplingDesign::Fixed { per_menu } => {
            if *per_menu == 0 {
                return Err(RamError::Sampling("sample size must be positive".into()));
            }
            obs.reserve(per_menu * index.len());
            for pos in 0..index.len() {
                for _ in 0..*per_menu {
                    draw(pos, &mut rng, &mut obs);
                }
            }
        }
        SamplingDesign::Random { menu_weights, total } => {
            if *total == 0 {
                return Err(RamError::Sampling("sample size must be positive".into()));
            }
            if menu_weights.len() != index.len() {
                return Err(RamError::LengthMismatch { expected: index.len(), got: menu_weights.len() });
            }
            if let Some(w) = menu_weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
                return Err(RamError::Sampling(format!("menu weight {w} must be positive")));
            }
            obs.reserve(*total);
            for _ in 0..*total {
                let pos = sample_categorical(menu_weights, rng.random::<f64>());
                draw(pos, &mut rng, &mut obs);
            }
        }
    }
    ChoiceDataset::new(index.k(), obs)
}

/// A random parametric spec with monotonic attention, for property tests and
/// simulation studies.
pub fn random_monotone_spec<R: rand::Rng + ?Sized>(k: usize, rng: &mut R, depth: usize) -> AttentionModelSpec {
    let choice = rng.random_range(0..if depth > 0 { 9 } else { 8 });
    let random_pref = |rng: &mut R| {
        let mut ranking: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            ranking.swap(i, rng.random_range(0..=i));
        }
        Preference::new(ranking).expect("shuffled permutation")
    };
    match choice {
        0 => AttentionModelSpec::FullAttention,
        1 => AttentionModelSpec::TopN { ordering: random_pref(rng), n: rng.random_range(1..=k) },
        2 => AttentionModelSpec::AtMostK { k: rng.random_range(1..=k) },
        3 => AttentionModelSpec::Uniform,
        4 => {
            if rng.random_bool(0.5) {
                AttentionModelSpec::LogitWeights(SubsetWeights::SizePower(rng.random_range(-2.0..3.0)))
            } else {
                AttentionModelSpec::LogitWeights(SubsetWeights::Table(random_table(k, rng)))
            }
        }
        5 => AttentionModelSpec::IndependentConsideration {
            gamma: (0..k).map(|_| rng.random_range(0.05..0.95)).collect(),
        },
        6 => {
            let mut captivity = BTreeMap::new();
            for b in 1..1u64 << k {
                if rng.random_bool(0.3) {
                    captivity.insert(Menu(b), rng.random_range(0.0..2.0));
                }
            }
            AttentionModelSpec::Dogit { weights: SubsetWeights::Table(random_table(k, rng)), captivity }
        }
        7 => {
            let mut aspects: Vec<(Menu, f64)> = (0..rng.random_range(1..=4))
                .map(|_| (Menu(rng.random_range(1..1u64 << k)), rng.random_range(0.1..1.0)))
                .collect();
            aspects.push((Menu::full(k), rng.random_range(0.1..1.0)));
            AttentionModelSpec::EliminationByAspects { aspects }
        }
        _ => {
            let n = rng.random_range(2..=3);
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            AttentionModelSpec::Mixture(raw.iter().map(|w| (random_monotone_spec(k, rng, depth - 1), w / total)).collect())
        }
    }
}

fn random_table<R: rand::Rng + ?Sized>(k: usize, rng: &mut R) -> BTreeMap<Menu, f64> {
    (1..1u64 << k).map(|b| (Menu(b), rng.random_range(0.1..2.0))).collect()
}
