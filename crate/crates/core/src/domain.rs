//! Alternatives, menus, preferences, and the stacked vector layouts used for
//! choice rules (one entry per alternative of each menu) and attention rules
//! (one entry per non-empty consideration set of each menu).
//!
//! Menus are bitmasks over alternative ids. Singleton menus never appear in a
//! layout: their only choice and only consideration set have probability one.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{RamError, Result};

pub const MAX_ALTERNATIVES: usize = 16;

/// Tolerance for per-menu probability sums.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrandSet {
    labels: Vec<String>,
}

impl GrandSet {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 || labels.len() > MAX_ALTERNATIVES {
            return Err(RamError::GrandSetSize(labels.len()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(RamError::DuplicateLabel(l.clone()));
            }
        }
        Ok(Self { labels })
    }

    /// Labels `a1, a2, ..., aK`.
    pub fn numbered(k: usize) -> Result<Self> {
        Self::new((1..=k).map(|i| format!("a{i}")))
    }

    /// Labels `a, b, c, ...`.
    pub fn letters(k: usize) -> Result<Self> {
        if k > 26 {
            return Err(RamError::GrandSetSize(k));
        }
        Self::new((0..k).map(|i| ((b'a' + i as u8) as char).to_string()))
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn id_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| RamError::UnknownLabel(label.to_string()))
    }

    pub fn full_menu(&self) -> Menu {
        Menu::full(self.size())
    }

    /// Parses labels separated by `|` or `,` into a menu.
    pub fn parse_menu(&self, text: &str) -> Result<Menu> {
        let mut bits = 0u64;
        for part in text.split(['|', ',']).map(str::trim).filter(|p| !p.is_empty()) {
            bits |= 1 << self.id_of(part)?;
        }
        Ok(Menu(bits))
    }

    /// Labels sorted ascending, joined by `|`.
    pub fn format_menu(&self, menu: Menu) -> String {
        let mut labels: Vec<&str> = menu.iter().map(|a| self.label(a)).collect();
        labels.sort_unstable();
        labels.join("|")
    }
}

/// A set of alternatives stored as a bitmask over ids.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Menu(pub u64);

impl Menu {
    pub fn from_ids<I: IntoIterator<Item = usize>>(ids: I) -> Self {
        Menu(ids.into_iter().fold(0, |acc, a| acc | (1 << a)))
    }

    pub fn singleton(a: usize) -> Self {
        Menu(1 << a)
    }

    pub fn full(k: usize) -> Self {
        Menu((1u64 << k) - 1)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, a: usize) -> bool {
        self.0 >> a & 1 == 1
    }

    pub fn without(self, a: usize) -> Self {
        Menu(self.0 & !(1 << a))
    }

    pub fn with(self, a: usize) -> Self {
        Menu(self.0 | (1 << a))
    }

    pub fn minus(self, other: Menu) -> Self {
        Menu(self.0 & !other.0)
    }

    pub fn union(self, other: Menu) -> Self {
        Menu(self.0 | other.0)
    }

    pub fn intersect(self, other: Menu) -> Self {
        Menu(self.0 & other.0)
    }

    pub fn is_subset_of(self, other: Menu) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_proper_subset_of(self, other: Menu) -> bool {
        self.is_subset_of(other) && self != other
    }

    /// Member ids in ascending order.
    pub fn iter(self) -> MenuIter {
        MenuIter(self.0)
    }

    /// Position of `a` among the members in ascending id order.
    pub fn position_of(self, a: usize) -> usize {
        (self.0 & ((1u64 << a) - 1)).count_ones() as usize
    }

    /// Rank of the non-empty subset `t` among all non-empty subsets of `self`
    /// listed in ascending bitmask order.
    pub fn subset_rank(self, t: Menu) -> usize {
        let mut packed = 0usize;
        for (j, a) in self.iter().enumerate() {
            if t.contains(a) {
                packed |= 1 << j;
            }
        }
        packed - 1
    }

    /// Inverse of [`Menu::subset_rank`].
    pub fn subset_at(self, rank: usize) -> Menu {
        let packed = rank + 1;
        Menu::from_ids(self.iter().enumerate().filter(|(j, _)| packed >> j & 1 == 1).map(|(_, a)| a))
    }

    /// Non-empty subsets in ascending bitmask order.
    pub fn subsets(self) -> impl Iterator<Item = Menu> {
        let n = self.len();
        (0..(1usize << n) - 1).map(move |r| self.subset_at(r))
    }

    /// Canonical order: larger menus first, then lexicographic on sorted ids.
    pub fn canonical_cmp(&self, other: &Menu) -> Ordering {
        other.len().cmp(&self.len()).then_with(|| self.iter().cmp(other.iter()))
    }
}

impl fmt::Debug for Menu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Menu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Copy)]
pub struct MenuIter(u64);

impl Iterator for MenuIter {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let a = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexMode {
    /// Every menu with at least two alternatives.
    Complete,
    /// An explicit observed collection.
    Limited,
}

/// How to build a [`MenuIndex`].
#[derive(Debug, Clone)]
pub enum IndexSpec {
    Complete,
    Limited(Vec<Menu>),
}

const ABSENT: u32 = u32::MAX;

/// Canonical enumeration of menus and the offsets of their blocks in the
/// stacked choice and attention vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MenuIndex {
    k: usize,
    mode: IndexMode,
    menus: Vec<Menu>,
    choice_offsets: Vec<usize>,
    attention_offsets: Vec<usize>,
    slots: Vec<u32>,
    col_menu: Vec<u32>,
}

impl MenuIndex {
    pub fn complete(k: usize) -> Result<Self> {
        if !(2..=MAX_ALTERNATIVES).contains(&k) {
            return Err(RamError::GrandSetSize(k));
        }
        let menus = (1..1u64 << k).map(Menu).filter(|m| m.len() >= 2).collect();
        Ok(Self::assemble(k, IndexMode::Complete, menus))
    }

    pub fn limited(k: usize, menus: Vec<Menu>) -> Result<Self> {
        if !(2..=MAX_ALTERNATIVES).contains(&k) {
            return Err(RamError::GrandSetSize(k));
        }
        if menus.is_empty() {
            return Err(RamError::EmptyMenuList);
        }
        let full = Menu::full(k);
        let mut seen = HashSet::new();
        for &m in &menus {
            if !m.is_subset_of(full) {
                return Err(RamError::MenuOutsideGrandSet(m));
            }
            if m.len() < 2 {
                return Err(RamError::TrivialMenu(m));
            }
            if !seen.insert(m) {
                return Err(RamError::DuplicateMenu(m));
            }
        }
        Ok(Self::assemble(k, IndexMode::Limited, menus))
    }

    fn assemble(k: usize, mode: IndexMode, mut menus: Vec<Menu>) -> Self {
        menus.sort_by(Menu::canonical_cmp);
        let mut slots = vec![ABSENT; 1 << k];
        let mut choice_offsets = Vec::with_capacity(menus.len() + 1);
        let mut attention_offsets = Vec::with_capacity(menus.len() + 1);
        let (mut c, mut a) = (0usize, 0usize);
        let mut col_menu = Vec::new();
        for (i, m) in menus.iter().enumerate() {
            slots[m.0 as usize] = i as u32;
            choice_offsets.push(c);
            attention_offsets.push(a);
            c += m.len();
            a += (1usize << m.len()) - 1;
            col_menu.extend(std::iter::repeat_n(i as u32, m.len()));
        }
        choice_offsets.push(c);
        attention_offsets.push(a);
        Self { k, mode, menus, choice_offsets, attention_offsets, slots, col_menu }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    pub fn is_complete(&self) -> bool {
        self.mode == IndexMode::Complete
    }

    pub fn menus(&self) -> &[Menu] {
        &self.menus
    }

    pub fn menu(&self, pos: usize) -> Menu {
        self.menus[pos]
    }

    pub fn len(&self) -> usize {
        self.menus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.menus.is_empty()
    }

    pub fn position(&self, menu: Menu) -> Option<usize> {
        match self.slots.get(menu.0 as usize) {
            Some(&s) if s != ABSENT => Some(s as usize),
            _ => None,
        }
    }

    pub fn contains(&self, menu: Menu) -> bool {
        self.position(menu).is_some()
    }

    pub fn choice_len(&self) -> usize {
        self.choice_offsets[self.menus.len()]
    }

    pub fn attention_len(&self) -> usize {
        self.attention_offsets[self.menus.len()]
    }

    pub fn choice_offsets(&self) -> &[usize] {
        &self.choice_offsets
    }

    pub fn attention_offsets(&self) -> &[usize] {
        &self.attention_offsets
    }

    pub fn choice_block(&self, pos: usize) -> std::ops::Range<usize> {
        self.choice_offsets[pos]..self.choice_offsets[pos + 1]
    }

    pub fn attention_block(&self, pos: usize) -> std::ops::Range<usize> {
        self.attention_offsets[pos]..self.attention_offsets[pos + 1]
    }

    /// Column of `pi(a | menus[pos])`.
    pub fn choice_col(&self, pos: usize, a: usize) -> usize {
        self.choice_offsets[pos] + self.menus[pos].position_of(a)
    }

    /// Column of `mu(t | menus[pos])`.
    pub fn attention_col(&self, pos: usize, t: Menu) -> usize {
        self.attention_offsets[pos] + self.menus[pos].subset_rank(t)
    }

    /// Menu position owning a choice-vector column.
    pub fn menu_of_col(&self, col: usize) -> usize {
        self.col_menu[col] as usize
    }

    /// The alternative a choice-vector column refers to.
    pub fn alt_of_col(&self, col: usize) -> usize {
        let pos = self.menu_of_col(col);
        self.menus[pos].iter().nth(col - self.choice_offsets[pos]).expect("column inside block")
    }

    pub fn binary_menus(&self) -> impl Iterator<Item = (usize, Menu)> + '_ {
        self.menus.iter().copied().enumerate().filter(|(_, m)| m.len() == 2)
    }
}

pub fn build_menu_index(grand: &GrandSet, spec: IndexSpec) -> Result<MenuIndex> {
    match spec {
        IndexSpec::Complete => MenuIndex::complete(grand.size()),
        IndexSpec::Limited(menus) => MenuIndex::limited(grand.size(), menus),
    }
}

/// Strict total order; `ranking[0]` is the best alternative.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Preference {
    ranking: Vec<usize>,
    rank: Vec<usize>,
}

impl Preference {
    pub fn new(ranking: Vec<usize>) -> Result<Self> {
        let k = ranking.len();
        let mut rank = vec![usize::MAX; k];
        for (r, &a) in ranking.iter().enumerate() {
            if a >= k || rank[a] != usize::MAX {
                return Err(RamError::InvalidPreference(format!("{ranking:?} is not a permutation")));
            }
            rank[a] = r;
        }
        Ok(Self { ranking, rank })
    }

    pub fn identity(k: usize) -> Self {
        Self::new((0..k).collect()).expect("identity permutation")
    }

    /// Parses `"b>a>c"` (labels of the grand set, best first).
    pub fn parse(text: &str, grand: &GrandSet) -> Result<Self> {
        let ranking = text
            .split('>')
            .map(|s| grand.id_of(s.trim()))
            .collect::<Result<Vec<_>>>()?;
        if ranking.len() != grand.size() {
            return Err(RamError::InvalidPreference(format!(
                "`{text}` ranks {} of {} alternatives",
                ranking.len(),
                grand.size()
            )));
        }
        Self::new(ranking)
    }

    pub fn k(&self) -> usize {
        self.ranking.len()
    }

    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    /// 0 for the best alternative.
    pub fn rank_of(&self, a: usize) -> usize {
        self.rank[a]
    }

    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.rank[a] < self.rank[b]
    }

    pub fn best_in(&self, menu: Menu) -> Option<usize> {
        menu.iter().min_by_key(|&a| self.rank[a])
    }

    /// Lower contour set of the alternative at 0-based rank `r`.
    pub fn lower_contour(&self, r: usize) -> Menu {
        Menu::from_ids(self.ranking[r..].iter().copied())
    }

    /// `{x : x is a or worse than a}`.
    pub fn lower_contour_of(&self, a: usize) -> Menu {
        self.lower_contour(self.rank[a])
    }

    pub fn as_relation(&self) -> BinaryRelation {
        let mut rel = BinaryRelation::new(self.k());
        for (i, &a) in self.ranking.iter().enumerate() {
            for &b in &self.ranking[i + 1..] {
                rel.insert(a, b);
            }
        }
        rel
    }

    /// Every preference over `k` alternatives, in lexicographic order of rankings.
    pub fn all(k: usize) -> Vec<Preference> {
        let mut out = Vec::new();
        let mut perm: Vec<usize> = (0..k).collect();
        loop {
            out.push(Preference::new(perm.clone()).expect("permutation"));
            // next lexicographic permutation
            let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
                break;
            };
            let j = (i + 1..k).rev().find(|&j| perm[j] > perm[i]).expect("successor exists");
            perm.swap(i, j);
            perm[i + 1..].reverse();
        }
        out
    }

    pub fn display(&self, grand: &GrandSet) -> String {
        self.ranking.iter().map(|&a| grand.label(a)).collect::<Vec<_>>().join(">")
    }
}

impl fmt::Debug for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.ranking.iter().map(|a| a.to_string()).collect();
        write!(f, "Preference({})", parts.join(">"))
    }
}

/// A problem found by rule validation.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleIssue {
    BlockSum { menu: Menu, sum: f64 },
    /// `entry` is the alternative (choice rules) or consideration set bits
    /// (attention rules).
    Negative { menu: Menu, entry: u64, value: f64 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<RuleIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

fn validate_blocks<F>(index: &MenuIndex, values: &[f64], block: F, entry_of: impl Fn(Menu, usize) -> u64) -> ValidationReport
where
    F: Fn(usize) -> std::ops::Range<usize>,
{
    let mut issues = Vec::new();
    for (pos, &menu) in index.menus().iter().enumerate() {
        let range = block(pos);
        let start = range.start;
        let slice = &values[range];
        for (j, &v) in slice.iter().enumerate() {
            if v < 0.0 || v.is_nan() {
                issues.push(RuleIssue::Negative { menu, entry: entry_of(menu, j), value: v });
            }
            let _ = start;
        }
        let sum: f64 = slice.iter().sum();
        if !((sum - 1.0).abs() <= SUM_TOLERANCE) {
            issues.push(RuleIssue::BlockSum { menu, sum });
        }
    }
    ValidationReport { issues }
}

/// Checks a raw stacked choice vector against an index.
pub fn validate_choice_rule(index: &MenuIndex, values: &[f64]) -> Result<ValidationReport> {
    check_len(index.choice_len(), values.len())?;
    Ok(validate_blocks(index, values, |p| index.choice_block(p), |m, j| m.iter().nth(j).unwrap() as u64))
}

/// Checks a raw stacked attention vector against an index.
pub fn validate_attention_rule(index: &MenuIndex, values: &[f64]) -> Result<ValidationReport> {
    check_len(index.attention_len(), values.len())?;
    Ok(validate_blocks(index, values, |p| index.attention_block(p), |m, j| m.subset_at(j).0))
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(RamError::LengthMismatch { expected, got });
    }
    Ok(())
}

/// Stacked choice probabilities `pi(a|S)` over the index layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceRule {
    index: Arc<MenuIndex>,
    values: Vec<f64>,
}

impl ChoiceRule {
    /// Wraps a vector after a length check; use [`ChoiceRule::validate`] for
    /// probability constraints.
    pub fn new(index: Arc<MenuIndex>, values: Vec<f64>) -> Result<Self> {
        check_len(index.choice_len(), values.len())?;
        Ok(Self { index, values })
    }

    /// Builds a rule from a function of (menu, alternative).
    pub fn from_fn(index: Arc<MenuIndex>, f: impl Fn(Menu, usize) -> f64) -> Self {
        let values = index.menus().iter().flat_map(|&m| m.iter().map(move |a| (m, a))).map(|(m, a)| f(m, a)).collect();
        Self { index, values }
    }

    pub fn index(&self) -> &Arc<MenuIndex> {
        &self.index
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn block(&self, pos: usize) -> &[f64] {
        &self.values[self.index.choice_block(pos)]
    }

    /// `pi(a|menu)`; singleton menus yield 1 and absent alternatives 0.
    pub fn prob(&self, a: usize, menu: Menu) -> Option<f64> {
        if !menu.contains(a) {
            return Some(0.0);
        }
        if menu.len() == 1 {
            return Some(1.0);
        }
        let pos = self.index.position(menu)?;
        Some(self.values[self.index.choice_col(pos, a)])
    }

    pub fn validate(&self) -> ValidationReport {
        validate_choice_rule(&self.index, &self.values).expect("length checked at construction")
    }

    /// Restriction to a sub-collection of menus (limited-mode index).
    pub fn restrict(&self, target: Arc<MenuIndex>) -> Result<ChoiceRule> {
        let mut values = Vec::with_capacity(target.choice_len());
        for &m in target.menus() {
            let pos = self.index.position(m).ok_or(RamError::MenuNotIndexed(m))?;
            values.extend_from_slice(self.block(pos));
        }
        ChoiceRule::new(target, values)
    }
}

/// Stacked attention probabilities `mu(T|S)` over the index layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionRule {
    index: Arc<MenuIndex>,
    values: Vec<f64>,
    triangular_for: Option<Preference>,
}

impl AttentionRule {
    pub fn new(index: Arc<MenuIndex>, values: Vec<f64>) -> Result<Self> {
        check_len(index.attention_len(), values.len())?;
        Ok(Self { index, values, triangular_for: None })
    }

    pub fn from_fn(index: Arc<MenuIndex>, f: impl Fn(Menu, Menu) -> f64) -> Self {
        let values = index.menus().iter().flat_map(|&s| s.subsets().map(move |t| (t, s))).map(|(t, s)| f(t, s)).collect();
        Self { index, values, triangular_for: None }
    }

    /// Triangular rule from compact weights: `weight(S, a)` is placed on the
    /// consideration set `{x in S : x is a or worse than a}`.
    pub fn triangular(index: Arc<MenuIndex>, pref: &Preference, weight: impl Fn(Menu, usize) -> f64) -> Self {
        let mut values = vec![0.0; index.attention_len()];
        for (pos, &s) in index.menus().iter().enumerate() {
            for a in s.iter() {
                let t = pref.lower_contour_of(a).intersect(s);
                values[index.attention_col(pos, t)] += weight(s, a);
            }
        }
        Self { index, values, triangular_for: Some(pref.clone()) }
    }

    pub fn index(&self) -> &Arc<MenuIndex> {
        &self.index
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn triangular_for(&self) -> Option<&Preference> {
        self.triangular_for.as_ref()
    }

    pub fn block(&self, pos: usize) -> &[f64] {
        &self.values[self.index.attention_block(pos)]
    }

    /// `mu(t|s)`; singleton menus put full weight on themselves.
    pub fn weight(&self, t: Menu, s: Menu) -> Option<f64> {
        if t.is_empty() || !t.is_subset_of(s) {
            return Some(0.0);
        }
        if s.len() == 1 {
            return Some(1.0);
        }
        let pos = self.index.position(s)?;
        Some(self.values[self.index.attention_col(pos, t)])
    }

    pub fn validate(&self) -> ValidationReport {
        validate_attention_rule(&self.index, &self.values).expect("length checked at construction")
    }

    /// Whether all weight sits on lower contour sets of `pref`.
    pub fn is_triangular_for(&self, pref: &Preference, tol: f64) -> bool {
        self.index.menus().iter().enumerate().all(|(pos, &s)| {
            s.subsets().enumerate().all(|(j, t)| {
                let w = self.values[self.index.attention_offsets()[pos] + j];
                w.abs() <= tol || pref.best_in(t).is_some_and(|b| pref.lower_contour_of(b).intersect(s) == t)
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub menu: Menu,
    pub choice: usize,
}

/// Observed (menu, choice) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceDataset {
    k: usize,
    observations: Vec<Observation>,
}

impl ChoiceDataset {
    pub fn new(k: usize, observations: Vec<Observation>) -> Result<Self> {
        let full = Menu::full(k);
        for o in &observations {
            if !o.menu.is_subset_of(full) {
                return Err(RamError::MenuOutsideGrandSet(o.menu));
            }
            if o.menu.len() < 2 {
                return Err(RamError::TrivialMenu(o.menu));
            }
            if !o.menu.contains(o.choice) {
                return Err(RamError::ChoiceNotInMenu { menu: o.menu, choice: o.choice });
            }
        }
        Ok(Self { k, observations })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Effective sample size per observed menu.
    pub fn menu_counts(&self) -> BTreeMap<Menu, usize> {
        let mut counts = BTreeMap::new();
        for o in &self.observations {
            *counts.entry(o.menu).or_insert(0) += 1;
        }
        counts
    }
}

impl PartialOrd for Menu {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Menu {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_cmp(other)
    }
}

/// Irreflexive relation on alternatives; row `a` holds the bitmask of all `b`
/// with `a` related to `b`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryRelation {
    rows: Vec<u64>,
}

impl BinaryRelation {
    pub fn new(k: usize) -> Self {
        Self { rows: vec![0; k] }
    }

    pub fn from_edges(k: usize, edges: &[(usize, usize)]) -> Self {
        let mut rel = Self::new(k);
        for &(a, b) in edges {
            rel.insert(a, b);
        }
        rel
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    /// Adds `a -> b`; self-loops are ignored.
    pub fn insert(&mut self, a: usize, b: usize) {
        if a != b {
            self.rows[a] |= 1 << b;
        }
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.rows[a] >> b & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.k()).flat_map(|a| Menu(self.rows[a]).iter().map(move |b| (a, b))).collect()
    }

    pub fn union(&self, other: &BinaryRelation) -> BinaryRelation {
        BinaryRelation { rows: self.rows.iter().zip(&other.rows).map(|(x, y)| x | y).collect() }
    }

    /// Whether every edge of `self` is also an edge of `other`.
    pub fn is_subrelation_of(&self, other: &BinaryRelation) -> bool {
        self.rows.iter().zip(&other.rows).all(|(x, y)| x & !y == 0)
    }

    fn reachability(&self) -> Vec<u64> {
        let mut reach = self.rows.clone();
        for m in 0..reach.len() {
            let via = reach[m];
            for row in reach.iter_mut() {
                if *row >> m & 1 == 1 {
                    *row |= via;
                }
            }
        }
        reach
    }

    /// Smallest transitive superset, with the diagonal removed so the result
    /// stays irreflexive.
    pub fn transitive_closure(&self) -> BinaryRelation {
        let rows = self.reachability().into_iter().enumerate().map(|(a, r)| r & !(1 << a)).collect();
        BinaryRelation { rows }
    }

    pub fn has_cycle(&self) -> bool {
        self.reachability().iter().enumerate().any(|(a, r)| r >> a & 1 == 1)
    }
}

impl fmt::Debug for BinaryRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.edges().iter().map(|(a, b)| format!("{a}->{b}"))).finish()
    }
}

pub fn transitive_closure(rel: &BinaryRelation) -> BinaryRelation {
    rel.transitive_closure()
}

pub fn has_cycle(rel: &BinaryRelation) -> bool {
    rel.has_cycle()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_index_k3_matches_example_layout() {
        let idx = MenuIndex::complete(3).unwrap();
        let menus: Vec<Vec<usize>> = idx.menus().iter().map(|m| m.iter().collect()).collect();
        assert_eq!(menus, vec![vec![0, 1, 2], vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(idx.choice_len(), 9);
        assert_eq!(idx.choice_offsets(), &[0, 3, 5, 7, 9]);
        assert_eq!(idx.attention_len(), 7 + 3 * 3);
    }

    #[test]
    fn complete_index_sizes() {
        let idx = MenuIndex::complete(2).unwrap();
        assert_eq!((idx.len(), idx.choice_len()), (1, 2));
        let idx = MenuIndex::complete(5).unwrap();
        assert_eq!(idx.len(), 26);
        assert_eq!(idx.choice_len(), 10 * 2 + 10 * 3 + 5 * 4 + 5);
    }

    #[test]
    fn layout_lengths_follow_binomial_sums() {
        fn binom(n: usize, k: usize) -> usize {
            (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
        }
        for k in 2..=8 {
            let idx = MenuIndex::complete(k).unwrap();
            let pi: usize = (2..=k).map(|j| binom(k, j) * j).sum();
            let mu: usize = (2..=k).map(|j| binom(k, j) * ((1 << j) - 1)).sum();
            assert_eq!((idx.choice_len(), idx.attention_len()), (pi, mu), "k = {k}");
        }
    }

    #[test]
    fn limited_index_rejects_bad_lists() {
        assert_eq!(MenuIndex::limited(3, vec![]), Err(RamError::EmptyMenuList));
        let m = Menu::from_ids([0, 1]);
        assert_eq!(MenuIndex::limited(3, vec![m, m]), Err(RamError::DuplicateMenu(m)));
        let s = Menu::singleton(2);
        assert_eq!(MenuIndex::limited(3, vec![m, s]), Err(RamError::TrivialMenu(s)));
    }

    #[test]
    fn shuffled_limited_list_gives_identical_index() {
        let a = vec![Menu(0b0011), Menu(0b1111), Menu(0b0110), Menu(0b1110)];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(MenuIndex::limited(4, a).unwrap(), MenuIndex::limited(4, b).unwrap());
    }

    #[test]
    fn subset_rank_roundtrip() {
        let s = Menu::from_ids([1, 3, 4]);
        let subsets: Vec<Menu> = s.subsets().collect();
        assert_eq!(subsets.len(), 7);
        for (r, t) in subsets.iter().enumerate() {
            assert_eq!(s.subset_rank(*t), r);
        }
        assert!(subsets.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn all_preferences_are_lexicographic() {
        let all = Preference::all(3);
        let rankings: Vec<&[usize]> = all.iter().map(|p| p.ranking()).collect();
        assert_eq!(
            rankings,
            vec![&[0, 1, 2][..], &[0, 2, 1], &[1, 0, 2], &[1, 2, 0], &[2, 0, 1], &[2, 1, 0]]
        );
        assert_eq!(Preference::all(5).len(), 120);
    }

    #[test]
    fn preference_parse_and_contours() {
        let g = GrandSet::letters(3).unwrap();
        let p = Preference::parse("b>a>c", &g).unwrap();
        assert_eq!(p.ranking(), &[1, 0, 2]);
        assert!(p.prefers(1, 2));
        assert_eq!(p.lower_contour_of(0), Menu::from_ids([0, 2]));
        assert_eq!(p.best_in(Menu::from_ids([0, 2])), Some(0));
        assert!(Preference::parse("b>a", &g).is_err());
        assert!(Preference::parse("b>a>a", &g).is_err());
    }

    #[test]
    fn choice_rule_validation_reports() {
        let idx = Arc::new(MenuIndex::complete(3).unwrap());
        let zero = validate_choice_rule(&idx, &[0.0; 9]).unwrap();
        assert_eq!(zero.issues.len(), 4);
        let mut v = vec![1.0, 0.0, 0.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5];
        assert!(validate_choice_rule(&idx, &v).unwrap().is_valid());
        v[0] = 1.1;
        v[1] = -0.1;
        let report = validate_choice_rule(&idx, &v).unwrap();
        assert_eq!(
            report.issues,
            vec![RuleIssue::Negative { menu: Menu::from_ids([0, 1, 2]), entry: 1, value: -0.1 }]
        );
        assert_eq!(
            validate_choice_rule(&idx, &[0.0; 8]),
            Err(RamError::LengthMismatch { expected: 9, got: 8 })
        );
    }

    #[test]
    fn attention_rule_validation() {
        let idx = Arc::new(MenuIndex::complete(3).unwrap());
        let full = AttentionRule::from_fn(idx.clone(), |t, s| if t == s { 1.0 } else { 0.0 });
        assert!(full.validate().is_valid());
        let short = AttentionRule::from_fn(idx, |t, s| if t == s { 0.9 } else { 0.0 });
        let report = short.validate();
        assert_eq!(report.issues.len(), 4);
        assert!(matches!(report.issues[0], RuleIssue::BlockSum { .. }));
    }

    #[test]
    fn closure_and_cycles() {
        let chain = BinaryRelation::from_edges(3, &[(0, 1), (1, 2)]);
        let closed = chain.transitive_closure();
        assert!(closed.contains(0, 2));
        assert!(!chain.has_cycle());
        assert!(BinaryRelation::new(3).transitive_closure().is_empty());
        assert!(!BinaryRelation::new(3).has_cycle());

        let cycle = BinaryRelation::from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
        assert!(cycle.has_cycle());
        // brute force: every ordered pair of distinct nodes is joined by a path
        let closed = cycle.transitive_closure();
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(closed.contains(a, b), a != b);
            }
        }
        assert!(closed.has_cycle());
    }

    #[test]
    fn dataset_rejects_bad_rows() {
        let m = Menu::from_ids([0, 1]);
        assert!(ChoiceDataset::new(3, vec![Observation { menu: m, choice: 2 }]).is_err());
        assert!(ChoiceDataset::new(3, vec![Observation { menu: Menu::singleton(0), choice: 0 }]).is_err());
        let d = ChoiceDataset::new(3, vec![Observation { menu: m, choice: 0 }; 3]).unwrap();
        assert_eq!(d.menu_counts()[&m], 3);
    }
}
