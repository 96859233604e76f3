//! Frequency estimates of choice rules and their plug-in covariance.

use std::sync::Arc;

use crate::constraints::ConstraintMatrix;
use crate::domain::{ChoiceDataset, ChoiceRule, Menu, MenuIndex};
use crate::error::{RamError, Result};

/// Estimated choice rule with one covariance block per menu; the block for
/// `S` is `(diag(p) - p p') * N / N_S`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedChoice {
    pub pi_hat: ChoiceRule,
    pub n_per_menu: Vec<usize>,
    pub n_total: usize,
    omega: Vec<Vec<f64>>,
}

impl EstimatedChoice {
    pub fn index(&self) -> &Arc<MenuIndex> {
        self.pi_hat.index()
    }

    /// Row-major `|S| x |S|` covariance block of the menu at `pos`.
    pub fn omega_block(&self, pos: usize) -> &[f64] {
        &self.omega[pos]
    }

    /// Covariance between two choice-vector columns (zero across menus).
    pub fn omega_entry(&self, i: usize, j: usize) -> f64 {
        let index = self.index();
        let p = index.menu_of_col(i);
        if index.menu_of_col(j) != p {
            return 0.0;
        }
        let off = index.choice_offsets()[p];
        let n = index.menu(p).len();
        self.omega[p][(i - off) * n + (j - off)]
    }

    /// Builds an estimate from a population rule and per-menu sample sizes,
    /// as if the sample frequencies matched the rule exactly.
    pub fn from_population(pi: ChoiceRule, n_per_menu: Vec<usize>) -> Result<Self> {
        let index = pi.index().clone();
        if n_per_menu.len() != index.len() {
            return Err(RamError::LengthMismatch { expected: index.len(), got: n_per_menu.len() });
        }
        if let Some(p) = n_per_menu.iter().position(|&n| n == 0) {
            return Err(RamError::MissingMenu(index.menu(p)));
        }
        let n_total = n_per_menu.iter().sum();
        let omega = (0..index.len()).map(|p| covariance_block(pi.block(p), n_total, n_per_menu[p])).collect();
        Ok(Self { pi_hat: pi, n_per_menu, n_total, omega })
    }
}

fn covariance_block(p: &[f64], n_total: usize, n_menu: usize) -> Vec<f64> {
    let n = p.len();
    let scale = n_total as f64 / n_menu as f64;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = if i == j { p[i] } else { 0.0 };
            out[i * n + j] = (d - p[i] * p[j]) * scale;
        }
    }
    out
}

/// Count ratios on `index`. Complete mode requires every menu to be observed.
pub fn estimate_choice_rule(data: &ChoiceDataset, index: Arc<MenuIndex>) -> Result<EstimatedChoice> {
    if data.k() != index.k() {
        return Err(RamError::LengthMismatch { expected: index.k(), got: data.k() });
    }
    let mut counts = vec![0usize; index.choice_len()];
    let mut n_per_menu = vec![0usize; index.len()];
    for o in data.observations() {
        let Some(pos) = index.position(o.menu) else {
            if index.is_complete() {
                return Err(RamError::MenuNotIndexed(o.menu));
            }
            continue;
        };
        counts[index.choice_col(pos, o.choice)] += 1;
        n_per_menu[pos] += 1;
    }
    if let Some(p) = n_per_menu.iter().position(|&n| n == 0) {
        return Err(RamError::MissingMenu(index.menu(p)));
    }
    let values = counts
        .iter()
        .enumerate()
        .map(|(col, &c)| c as f64 / n_per_menu[index.menu_of_col(col)] as f64)
        .collect();
    EstimatedChoice::from_population(ChoiceRule::new(index, values)?, n_per_menu)
}

/// Limited-mode index over the menus observed at least `min_count` times;
/// sparser menus are dropped with a warning. Menus are listed in canonical
/// order together with their counts.
pub fn observed_index(data: &ChoiceDataset, min_count: usize) -> Result<MenuIndex> {
    let mut kept: Vec<Menu> = Vec::new();
    for (menu, n) in data.menu_counts() {
        if n >= min_count.max(1) {
            kept.push(menu);
        } else {
            log::warn!("dropping menu {menu} with {n} observations (floor {min_count})");
        }
    }
    MenuIndex::limited(data.k(), kept)
}

/// Estimate on the observed menus; observations of dropped menus are not
/// counted in `n_total`.
pub fn estimate_limited(data: &ChoiceDataset, min_count: usize) -> Result<EstimatedChoice> {
    let index = Arc::new(observed_index(data, min_count)?);
    estimate_choice_rule(data, index)
}

/// Per-row standard deviation `sqrt(diag(R Omega R'))`, using that each row
/// touches at most two columns.
pub fn studentize_sd(r: &ConstraintMatrix, est: &EstimatedChoice) -> Result<Vec<f64>> {
    if r.n_cols() != est.index().choice_len() {
        return Err(RamError::LengthMismatch { expected: est.index().choice_len(), got: r.n_cols() });
    }
    r.rows()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut v = 0.0;
            for s in row.terms() {
                for t in row.terms() {
                    v += s.coef * t.coef * est.omega_entry(s.col, t.col);
                }
            }
            if v < -1e-12 {
                return Err(RamError::Numerical(format!("row {i} has variance {v:e}")));
            }
            Ok(v.max(0.0).sqrt())
        })
        .collect()
}

/// Dense `diag(R Omega R')`, for cross-checking [`studentize_sd`].
pub fn dense_row_variances(r: &ConstraintMatrix, est: &EstimatedChoice) -> Vec<f64> {
    let dense = r.to_dense();
    let n = r.n_cols();
    let omega: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| est.omega_entry(i, j)).collect()).collect();
    dense
        .iter()
        .map(|row| {
            let tmp: Vec<f64> = (0..n).map(|j| (0..n).map(|i| row[i] * omega[i][j]).sum()).collect();
            tmp.iter().zip(row).map(|(a, b)| a * b).sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::build_R;
    use crate::domain::{Observation, Preference};

    fn ab_data(choices: &[usize]) -> ChoiceDataset {
        let m = Menu::from_ids([0, 1]);
        ChoiceDataset::new(2, choices.iter().map(|&choice| Observation { menu: m, choice }).collect()).unwrap()
    }

    #[test]
    fn degenerate_menu_has_zero_covariance() {
        let est = estimate_choice_rule(&ab_data(&[0, 0, 0]), Arc::new(MenuIndex::complete(2).unwrap())).unwrap();
        assert_eq!(est.pi_hat.values(), &[1.0, 0.0]);
        assert!(est.omega_block(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn balanced_menu_covariance() {
        let est = estimate_choice_rule(&ab_data(&[0, 0, 1, 1]), Arc::new(MenuIndex::complete(2).unwrap())).unwrap();
        assert_eq!(est.pi_hat.values(), &[0.5, 0.5]);
        // N / N_S = 1 here
        assert_eq!(est.omega_block(0), &[0.25, -0.25, -0.25, 0.25]);
    }

    #[test]
    fn missing_menu_in_complete_mode() {
        let d = ab_data(&[0]);
        let err = estimate_choice_rule(&ChoiceDataset::new(3, d.observations().to_vec()).unwrap(), Arc::new(MenuIndex::complete(3).unwrap()));
        assert!(matches!(err, Err(RamError::MissingMenu(_))));
    }

    #[test]
    fn sparse_and_dense_variances_agree() {
        let idx = Arc::new(MenuIndex::complete(3).unwrap());
        let pi = ChoiceRule::from_fn(idx.clone(), |s, a| (a + 1) as f64 / s.iter().map(|x| (x + 1) as f64).sum::<f64>());
        let est = EstimatedChoice::from_population(pi, vec![10, 20, 30, 40]).unwrap();
        let r = build_R(&Preference::identity(3), &idx).unwrap();
        let sd = studentize_sd(&r, &est).unwrap();
        for (s, v) in sd.iter().zip(dense_row_variances(&r, &est)) {
            assert!((s * s - v).abs() < 1e-12);
        }
    }

    #[test]
    fn observed_index_drops_sparse_menus() {
        let mut obs = ab_data(&[0, 1, 1]).observations().to_vec();
        obs.push(Observation { menu: Menu::from_ids([0, 2]), choice: 2 });
        let d = ChoiceDataset::new(3, obs).unwrap();
        let est = estimate_limited(&d, 2).unwrap();
        assert_eq!(est.index().len(), 1);
        assert_eq!(est.n_total, 3);
    }
}
