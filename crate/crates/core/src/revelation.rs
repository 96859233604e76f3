//! Population revealed-preference analysis: revealed relations, the RAM
//! characterization, identified sets, triangular attention, attention-filter
//! decompositions, and consistency of partially observed choice rules.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::attention::{check_monotonicity, AttentionModelSpec};
use crate::constraints::{augment_R_binary, build_R, build_R_limited, permute_R, ConstraintMatrix};
use crate::domain::{AttentionRule, BinaryRelation, ChoiceRule, Menu, MenuIndex, Preference};
use crate::error::{RamError, Result};
use crate::lp::find_feasible;

/// Tolerance for strict inequalities between population probabilities.
pub const DEFAULT_TOL: f64 = 1e-10;

pub const IDENTIFIED_SET_MAX_K: usize = 8;
pub const FILTER_ENUMERATION_MAX_K: usize = 5;
pub const DECOMPOSITION_MAX_K: usize = 4;
pub const LIMITED_CONSISTENCY_MAX_K: usize = 6;

fn guard(k: usize, limit: usize) -> Result<()> {
    if k > limit {
        return Err(RamError::TooManyAlternatives { k, limit });
    }
    Ok(())
}

fn check_phi(phi: f64) -> Result<()> {
    if !(0.5..=1.0).contains(&phi) {
        return Err(RamError::PhiOutOfRange(phi));
    }
    Ok(())
}

/// `a -> b` when removing `b` from some menu strictly lowers the probability
/// of choosing `a`. In limited mode only observed pairs `(S, S - b)` count.
#[allow(non_snake_case)]
pub fn reveal_P(pi: &ChoiceRule, tol: f64) -> BinaryRelation {
    let index = pi.index();
    let mut rel = BinaryRelation::new(index.k());
    for (pos, &s) in index.menus().iter().enumerate() {
        for b in s.iter() {
            let sub = s.without(b);
            if sub.len() < 2 {
                continue;
            }
            let Some(p) = index.position(sub) else { continue };
            for a in sub.iter() {
                if pi.values()[index.choice_col(pos, a)] > pi.values()[index.choice_col(p, a)] + tol {
                    rel.insert(a, b);
                }
            }
        }
    }
    rel
}

/// `a -> b` when `a` is chosen from `{a, b}` with probability above `phi`.
#[allow(non_snake_case)]
pub fn reveal_P_phi(pi: &ChoiceRule, phi: f64, tol: f64) -> Result<BinaryRelation> {
    check_phi(phi)?;
    let index = pi.index();
    let mut rel = BinaryRelation::new(index.k());
    for (pos, s) in index.binary_menus() {
        let mut it = s.iter();
        let (x, y) = (it.next().unwrap(), it.next().unwrap());
        if pi.values()[index.choice_col(pos, x)] > phi + tol {
            rel.insert(x, y);
        }
        if pi.values()[index.choice_col(pos, y)] > phi + tol {
            rel.insert(y, x);
        }
    }
    Ok(rel)
}

/// Acyclicity of the revealed relation (joined with the binary-menu relation
/// when `phi` is given). Requires complete data.
pub fn is_ram(pi: &ChoiceRule, phi: Option<f64>) -> Result<bool> {
    if !pi.index().is_complete() {
        return Err(RamError::WrongMode { expected: "complete" });
    }
    let mut rel = reveal_P(pi, DEFAULT_TOL);
    if let Some(phi) = phi {
        rel = rel.union(&reveal_P_phi(pi, phi, DEFAULT_TOL)?);
    }
    Ok(!rel.has_cycle())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiedSet {
    /// Lexicographic order of rankings.
    pub preferences: Vec<Preference>,
    pub phi: Option<f64>,
}

impl IdentifiedSet {
    pub fn len(&self) -> usize {
        self.preferences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preferences.is_empty()
    }

    pub fn contains(&self, pref: &Preference) -> bool {
        self.preferences.binary_search(pref).is_ok()
    }
}

/// Constraint system for `pref` on `index`, with binary rows when `phi` is given.
pub fn constraint_system(pref: &Preference, index: &MenuIndex, phi: Option<f64>) -> Result<ConstraintMatrix> {
    let r = if index.is_complete() { build_R(pref, index)? } else { build_R_limited(pref, index)? };
    match phi {
        Some(phi) => augment_R_binary(&r, phi, index),
        None => Ok(r),
    }
}

/// All preferences whose constraint system holds at `pi` within `tol`.
pub fn identified_set(pi: &ChoiceRule, phi: Option<f64>, tol: f64) -> Result<IdentifiedSet> {
    let index = pi.index();
    guard(index.k(), IDENTIFIED_SET_MAX_K)?;
    if let Some(phi) = phi {
        check_phi(phi)?;
    }
    let all = Preference::all(index.k());
    let base = if index.is_complete() { Some(build_R(&all[0], index)?) } else { None };
    let members: Vec<Option<Preference>> = all
        .into_par_iter()
        .map(|pref| {
            let r = match &base {
                Some(b) => permute_R(b, &pref, index)?,
                None => build_R_limited(&pref, index)?,
            };
            let r = match phi {
                Some(phi) => augment_R_binary(&r, phi, index)?,
                None => r,
            };
            Ok(r.satisfied_by(pi.values(), tol).then_some(pref))
        })
        .collect::<Result<_>>()?;
    Ok(IdentifiedSet { preferences: members.into_iter().flatten().collect(), phi })
}

/// The unique triangular attention rule for `pref` that reproduces `pi`:
/// weight `pi(a|S)` on `{x in S : x is a or worse}`.
pub fn extract_triangular(pref: &Preference, pi: &ChoiceRule) -> AttentionRule {
    let index = pi.index().clone();
    AttentionRule::triangular(index, pref, |s, a| pi.prob(a, s).expect("menu is indexed"))
}

/// A deterministic consideration map, one image per indexed menu.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FilterMap {
    images: Vec<Menu>,
}

impl FilterMap {
    pub fn image(&self, pos: usize) -> Menu {
        self.images[pos]
    }

    pub fn images(&self) -> &[Menu] {
        &self.images
    }

    pub fn to_spec(&self, index: &MenuIndex) -> AttentionModelSpec {
        AttentionModelSpec::ExplicitFilter(index.menus().iter().copied().zip(self.images.iter().copied()).collect())
    }

    /// Whether removing an unconsidered alternative leaves the image unchanged.
    pub fn is_attention_filter(&self, index: &MenuIndex) -> bool {
        index.menus().iter().enumerate().all(|(pos, &s)| {
            let g = self.images[pos];
            s.minus(g).iter().all(|a| {
                let sub = s.without(a);
                match index.position(sub) {
                    Some(p) => self.images[p] == g,
                    None => sub.len() > 1 || g == sub,
                }
            })
        })
    }

    /// Whether every image is a lower contour set of `pref` within its menu.
    pub fn is_triangular_for(&self, pref: &Preference, index: &MenuIndex) -> bool {
        index.menus().iter().enumerate().all(|(pos, &s)| {
            let g = self.images[pos];
            pref.best_in(g).is_some_and(|b| pref.lower_contour_of(b).intersect(s) == g)
        })
    }
}

/// Every attention filter whose images are lower contour sets of `pref`, in
/// lexicographic order of the image vectors.
pub fn enumerate_triangular_filters(pref: &Preference, index: &MenuIndex) -> Result<Vec<FilterMap>> {
    if !index.is_complete() {
        return Err(RamError::WrongMode { expected: "complete" });
    }
    guard(index.k(), FILTER_ENUMERATION_MAX_K)?;
    // assign smaller menus first so every sub-menu image is known
    let order: Vec<usize> = (0..index.len()).rev().collect();
    let mut images = vec![Menu::default(); index.len()];
    let mut out = Vec::new();
    fn recurse(
        depth: usize,
        order: &[usize],
        index: &MenuIndex,
        pref: &Preference,
        images: &mut Vec<Menu>,
        out: &mut Vec<FilterMap>,
    ) {
        if depth == order.len() {
            out.push(FilterMap { images: images.clone() });
            return;
        }
        let pos = order[depth];
        let s = index.menu(pos);
        for c in s.iter() {
            let g = pref.lower_contour_of(c).intersect(s);
            let ok = s.minus(g).iter().all(|a| {
                let sub = s.without(a);
                match index.position(sub) {
                    Some(p) => images[p] == g,
                    None => g == sub,
                }
            });
            if ok {
                images[pos] = g;
                recurse(depth + 1, order, index, pref, images, out);
            }
        }
    }
    recurse(0, &order, index, pref, &mut images, &mut out);
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterMixture {
    pub components: Vec<(FilterMap, f64)>,
}

impl FilterMixture {
    /// Attention rule implied by the mixture.
    pub fn remix(&self, index: Arc<MenuIndex>) -> AttentionRule {
        let mut values = vec![0.0; index.attention_len()];
        for (f, w) in &self.components {
            for pos in 0..index.len() {
                values[index.attention_col(pos, f.image(pos))] += w;
            }
        }
        AttentionRule::new(index, values).expect("layout length")
    }
}

/// Writes a monotone triangular attention rule as a probability mixture of
/// triangular attention filters by solving a linear feasibility problem.
pub fn decompose_random_filter(mu: &AttentionRule, pref: &Preference) -> Result<FilterMixture> {
    let index = mu.index();
    if !index.is_complete() {
        return Err(RamError::WrongMode { expected: "complete" });
    }
    guard(index.k(), DECOMPOSITION_MAX_K)?;
    if !mu.is_triangular_for(pref, 1e-12) {
        return Err(RamError::NotTriangular(format!(
            "weight on a consideration set that is not a lower contour set of {pref:?}"
        )));
    }
    let violations = check_monotonicity(mu);
    if let Some(v) = violations.first() {
        return Err(RamError::NotMonotonic(format!(
            "mu({}|{}) = {} exceeds {} after removing {}",
            v.consideration, v.menu, v.value, v.value_after_removal, v.removed
        )));
    }
    let filters = enumerate_triangular_filters(pref, index)?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (pos, &s) in index.menus().iter().enumerate() {
        for c in s.iter() {
            let t = pref.lower_contour_of(c).intersect(s);
            a.push(filters.iter().map(|f| if f.image(pos) == t { 1.0 } else { 0.0 }).collect());
            b.push(mu.values()[index.attention_col(pos, t)]);
        }
    }
    a.push(vec![1.0; filters.len()]);
    b.push(1.0);
    let psi = find_feasible(&a, &b, 1e-9)
        .ok_or_else(|| RamError::Defect("no filter mixture found for a monotone triangular rule".into()))?;
    let total: f64 = psi.iter().sum();
    let components: Vec<(FilterMap, f64)> =
        filters.into_iter().zip(psi).filter(|(_, w)| *w > 0.0).map(|(f, w)| (f, w / total)).collect();
    let mixture = FilterMixture { components };
    let remixed = mixture.remix(index.clone());
    let err = remixed.values().iter().zip(mu.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if err > 1e-8 {
        return Err(RamError::Defect(format!("filter mixture reconstruction error {err:e}")));
    }
    Ok(mixture)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitedConsistency {
    pub consistent: bool,
    /// A compatible preference with a monotone attention rule on all menus.
    pub witness: Option<(Preference, AttentionRule)>,
}

/// Decides whether a choice rule observed on a sub-collection of menus
/// extends to a random attention model. Preferences are tried in
/// lexicographic order and the first extension found is returned.
pub fn limited_consistency(pi_obs: &ChoiceRule) -> Result<LimitedConsistency> {
    let observed = pi_obs.index();
    let k = observed.k();
    guard(k, LIMITED_CONSISTENCY_MAX_K)?;
    let full = Arc::new(MenuIndex::complete(k)?);
    let witness = Preference::all(k).into_par_iter().find_map_first(|pref| {
        let mu = extend_attention(&pref, pi_obs, &full)?;
        check_monotonicity(&mu).is_empty().then_some((pref, mu))
    });
    Ok(LimitedConsistency { consistent: witness.is_some(), witness })
}

fn extend_attention(pref: &Preference, pi_obs: &ChoiceRule, full: &Arc<MenuIndex>) -> Option<AttentionRule> {
    let observed = pi_obs.index();
    let mut values = vec![0.0; full.attention_len()];
    let supersets = |s: Menu| observed.menus().iter().copied().filter(move |m| s.is_proper_subset_of(*m));
    // complete-index order lists supersets before subsets
    for (pos, &s) in full.menus().iter().enumerate() {
        let block = full.attention_block(pos);
        if let Some(op) = observed.position(s) {
            for a in s.iter() {
                let t = pref.lower_contour_of(a).intersect(s);
                values[full.attention_col(pos, t)] += pi_obs.values()[observed.choice_col(op, a)];
            }
        } else if supersets(s).next().is_some() {
            let mut used = 0.0;
            for t in s.subsets().filter(|&t| t != s) {
                let w = supersets(s)
                    .map(|sp| values[full.attention_col(full.position(sp).unwrap(), t)])
                    .fold(0.0, f64::max);
                values[full.attention_col(pos, t)] = w;
                used += w;
            }
            let residual = 1.0 - used;
            if residual < -1e-12 {
                return None;
            }
            values[full.attention_col(pos, s)] = residual.max(0.0);
        } else {
            values[block.end - 1] = 1.0;
        }
    }
    Some(AttentionRule::new(full.clone(), values).expect("layout length"))
}

/// Pairs `(menu, image)` of a filter, keyed by menu.
pub fn filter_as_map(filter: &FilterMap, index: &MenuIndex) -> BTreeMap<Menu, Menu> {
    index.menus().iter().copied().zip(filter.images().iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::{build_attention, synthesize_choice_rule, SubsetWeights};
    use crate::domain::GrandSet;

    fn letters(k: usize) -> GrandSet {
        GrandSet::letters(k).unwrap()
    }

    fn table(index: &Arc<MenuIndex>, g: &GrandSet, rows: &[(&str, &[f64])]) -> ChoiceRule {
        let mut values = vec![0.0; index.choice_len()];
        for (menu, probs) in rows {
            let pos = index.position(g.parse_menu(menu).unwrap()).unwrap();
            values[index.choice_block(pos)].copy_from_slice(probs);
        }
        ChoiceRule::new(index.clone(), values).unwrap()
    }

    fn example_two() -> ChoiceRule {
        let idx = Arc::new(MenuIndex::complete(3).unwrap());
        let t = 1.0 / 3.0;
        table(&idx, &letters(3), &[("a|b|c", &[t, t, t]), ("a|b", &[1.0, 0.0]), ("a|c", &[0.0, 1.0]), ("b|c", &[1.0, 0.0])])
    }

    #[test]
    fn regularity_violations_reveal_a_cycle() {
        let pi = example_two();
        let rel = reveal_P(&pi, DEFAULT_TOL);
        assert_eq!(rel.edges(), vec![(0, 1), (1, 2), (2, 0)]);
        assert!(!is_ram(&pi, None).unwrap());
        assert!(identified_set(&pi, None, DEFAULT_TOL).unwrap().is_empty());
    }

    #[test]
    fn binary_relation_at_half() {
        let idx = Arc::new(MenuIndex::complete(3).unwrap());
        let t = 1.0 / 3.0;
        let pi = table(
            &idx,
            &letters(3),
            &[("a|b|c", &[t, t, t]), ("a|b", &[2.0 * t, t]), ("a|c", &[0.5, 0.5]), ("b|c", &[2.0 * t, t])],
        );
        assert_eq!(reveal_P_phi(&pi, 0.5, DEFAULT_TOL).unwrap().edges(), vec![(0, 1), (1, 2)]);
        assert!(reveal_P_phi(&pi, 0.7, DEFAULT_TOL).unwrap().is_empty());
        assert!(reveal_P_phi(&pi, 1.0, DEFAULT_TOL).unwrap().is_empty());
        assert!(reveal_P_phi(&pi, 0.3, DEFAULT_TOL).is_err());
    }

    #[test]
    fn logit_identified_sets() {
        let idx = Arc::new(MenuIndex::complete(5).unwrap());
        let pref = Preference::identity(5);
        let sizes: Vec<usize> = [0.0, 1.0, 2.0]
            .iter()
            .map(|&p| {
                let mu = build_attention(&AttentionModelSpec::LogitWeights(SubsetWeights::SizePower(p)), idx.clone()).unwrap();
                identified_set(&synthesize_choice_rule(&pref, &mu), None, DEFAULT_TOL).unwrap().len()
            })
            .collect();
        assert_eq!(sizes, vec![120, 20, 5]);
    }

    #[test]
    fn two_alternative_filters() {
        let idx = MenuIndex::complete(2).unwrap();
        let f = enumerate_triangular_filters(&Preference::identity(2), &idx).unwrap();
        let images: Vec<Menu> = f.iter().map(|x| x.image(0)).collect();
        assert_eq!(images.len(), 2);
        assert!(images.contains(&Menu::full(2)) && images.contains(&Menu::singleton(1)));
    }

    #[test]
    fn filter_counts_are_consistent() {
        for k in 2..=4 {
            let idx = MenuIndex::complete(k).unwrap();
            let pref = Preference::identity(k);
            let filters = enumerate_triangular_filters(&pref, &idx).unwrap();
            let full = FilterMap { images: idx.menus().to_vec() };
            assert!(filters.contains(&full));
            for f in &filters {
                assert!(f.is_attention_filter(&idx) && f.is_triangular_for(&pref, &idx));
            }
        }
    }

    #[test]
    fn point_mass_decomposition() {
        let idx = Arc::new(MenuIndex::complete(3).unwrap());
        let pref = Preference::identity(3);
        let filters = enumerate_triangular_filters(&pref, &idx).unwrap();
        let target = &filters[filters.len() / 2];
        let mu = build_attention(&target.to_spec(&idx), idx.clone()).unwrap();
        let mix = decompose_random_filter(&mu, &pref).unwrap();
        assert_eq!(mix.components.len(), 1);
        assert_eq!(&mix.components[0].0, target);
        assert!((mix.components[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_pairs_are_not_triangular() {
        let idx = Arc::new(MenuIndex::complete(4).unwrap());
        let mu = AttentionRule::from_fn(idx, |t, s| {
            let top: Vec<usize> = s.iter().collect();
            let hi = &top[top.len() - 2..];
            if t.len() == 1 && hi.contains(&t.iter().next().unwrap()) {
                0.5
            } else {
                0.0
            }
        });
        assert!(mu.validate().is_valid());
        assert!(check_monotonicity(&mu).is_empty());
        for pref in Preference::all(4) {
            assert!(matches!(decompose_random_filter(&mu, &pref), Err(RamError::NotTriangular(_))));
        }
    }

    #[test]
    fn limited_examples_are_inconsistent() {
        let g = letters(4);
        let m = |s: &str| g.parse_menu(s).unwrap();
        let idx = Arc::new(MenuIndex::limited(4, vec![m("a|b|c|d"), m("b|c|d"), m("a|c")]).unwrap());
        let pi = table(&idx, &g, &[("a|b|c|d", &[0.25; 4]), ("b|c|d", &[0.2, 0.6, 0.2]), ("a|c", &[0.2, 0.8])]);
        assert!(!limited_consistency(&pi).unwrap().consistent);

        let g = letters(5);
        let m = |s: &str| g.parse_menu(s).unwrap();
        let menus = vec![m("a|b|c|d"), m("a|b|c|e"), m("a|b|d"), m("a|c|d"), m("b|c|e")];
        let idx = Arc::new(MenuIndex::limited(5, menus).unwrap());
        let pi = table(
            &idx,
            &g,
            &[
                ("a|b|c|d", &[0.25; 4]),
                ("a|b|c|e", &[2.0 / 3.0, 1.0 / 6.0, 0.0, 1.0 / 6.0]),
                ("a|b|d", &[0.5, 0.5, 0.0]),
                ("a|c|d", &[0.5, 0.5, 0.0]),
                ("b|c|e", &[5.0 / 6.0, 1.0 / 12.0, 1.0 / 12.0]),
            ],
        );
        assert!(!limited_consistency(&pi).unwrap().consistent);
    }

    #[test]
    fn complete_observation_agrees_with_acyclicity() {
        let pi = example_two();
        let as_limited = pi.restrict(Arc::new(MenuIndex::limited(3, pi.index().menus().to_vec()).unwrap())).unwrap();
        assert!(!limited_consistency(&as_limited).unwrap().consistent);
    }
}
