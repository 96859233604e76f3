//! Sparse inequality systems `R pi + offset <= 0` whose feasibility
//! characterizes the preferences compatible with a choice rule.
//!
//! Every row has at most two nonzero coefficients. Monotonicity rows whose
//! sub-menu is a singleton refer to a choice probability that is identically
//! one; that entry is moved into the row's constant offset.

use std::fmt::Write as _;

use crate::domain::{Menu, MenuIndex, Preference};
use crate::error::{RamError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub col: usize,
    pub coef: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// `pi(alt|menu) - pi(alt|sub) <= 0`.
    Monotonicity { menu: Menu, sub: Menu, alt: usize },
    /// `q * pi(worse|menu) - pi(better|menu) <= 0` on a two-element menu.
    BinaryAttentive { menu: Menu, better: usize, worse: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct Row {
    terms: [Term; 2],
    len: u8,
    offset: f64,
    kind: RowKind,
}

impl PartialEq for Row {
    fn eq(&self, other: &Self) -> bool {
        self.terms() == other.terms() && self.offset == other.offset
    }
}

impl Row {
    fn new(terms: &[Term], offset: f64, kind: RowKind) -> Self {
        let mut arr = [Term { col: 0, coef: 0.0 }; 2];
        arr[..terms.len()].copy_from_slice(terms);
        Self { terms: arr, len: terms.len() as u8, offset, kind }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms[..self.len as usize]
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn kind(&self) -> RowKind {
        self.kind
    }

    /// `sum coef * x[col] + offset`.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms().iter().fold(self.offset, |acc, t| acc + t.coef * x[t.col])
    }

    /// Same as [`Row::eval`] without the offset (for centered vectors).
    #[inline]
    pub fn eval_linear(&self, x: &[f64]) -> f64 {
        self.terms().iter().fold(0.0, |acc, t| acc + t.coef * x[t.col])
    }

    /// Sort key used for order-insensitive comparisons.
    fn key(&self) -> Vec<(usize, u64)> {
        let mut k: Vec<(usize, u64)> = self.terms().iter().map(|t| (t.col, t.coef.to_bits())).collect();
        k.push((usize::MAX, self.offset.to_bits()));
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Complete,
    Limited,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    rows: Vec<Row>,
    n_cols: usize,
    kind: MatrixKind,
    pref: Preference,
    phi: Option<f64>,
}

impl ConstraintMatrix {
    /// Assembles a matrix from explicit rows `(terms, offset)`; all rows are
    /// tagged as monotonicity rows without menu metadata.
    pub fn from_rows(n_cols: usize, rows: Vec<(Vec<(usize, f64)>, f64)>, pref: Preference) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for (terms, offset) in rows {
            if terms.len() > 2 {
                return Err(RamError::Numerical("rows hold at most two coefficients".into()));
            }
            if let Some(&(c, _)) = terms.iter().find(|(c, _)| *c >= n_cols) {
                return Err(RamError::LengthMismatch { expected: n_cols, got: c + 1 });
            }
            let terms: Vec<Term> = terms.into_iter().map(|(col, coef)| Term { col, coef }).collect();
            let kind = RowKind::Monotonicity { menu: Menu::default(), sub: Menu::default(), alt: 0 };
            out.push(Row::new(&terms, offset, kind));
        }
        Ok(Self { rows: out, n_cols, kind: MatrixKind::Complete, pref, phi: None })
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn pref(&self) -> &Preference {
        &self.pref
    }

    /// The attentiveness level used for binary rows, if augmented.
    pub fn phi(&self) -> Option<f64> {
        self.phi
    }

    pub fn is_augmented(&self) -> bool {
        self.phi.is_some()
    }

    /// `R x + offset`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.eval(x)).collect()
    }

    /// Whether `R x + offset <= tol` elementwise.
    pub fn satisfied_by(&self, x: &[f64], tol: f64) -> bool {
        self.rows.iter().all(|r| r.eval(x) <= tol)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| self.dense_row(r)).collect()
    }

    fn dense_row(&self, r: &Row) -> Vec<f64> {
        let mut v = vec![0.0; self.n_cols];
        for t in r.terms() {
            v[t.col] += t.coef;
        }
        v
    }

    /// Dense form of the rows without a constant offset.
    pub fn homogeneous_rows(&self) -> Vec<Vec<f64>> {
        self.rows.iter().filter(|r| r.offset == 0.0).map(|r| self.dense_row(r)).collect()
    }

    /// Rows sorted by content, for comparisons that ignore row order.
    pub fn sorted_row_keys(&self) -> Vec<Vec<(usize, u64)>> {
        let mut keys: Vec<_> = self.rows.iter().map(Row::key).collect();
        keys.sort();
        keys
    }

    /// `row,col,coeff` triples (0-based), with offsets reported in a column
    /// labelled `offset`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,col,coeff\n");
        for (i, r) in self.rows.iter().enumerate() {
            for t in r.terms() {
                let _ = writeln!(s, "{i},{},{}", t.col, t.coef);
            }
            if r.offset != 0.0 {
                let _ = writeln!(s, "{i},offset,{}", r.offset);
            }
        }
        s
    }

    pub fn describe_row(&self, i: usize) -> String {
        match self.rows[i].kind {
            RowKind::Monotonicity { menu, sub, alt } => format!("pi({alt}|{menu}) <= pi({alt}|{sub})"),
            RowKind::BinaryAttentive { menu, better, worse } => {
                format!("binary attentiveness on {menu}: {worse} worse than {better}")
            }
        }
    }
}

fn check_pref(pref: &Preference, index: &MenuIndex) -> Result<()> {
    if pref.k() != index.k() {
        return Err(RamError::InvalidPreference(format!(
            "preference ranks {} alternatives, index has {}",
            pref.k(),
            index.k()
        )));
    }
    Ok(())
}

/// Complete-data monotonicity system: for every menu `S`, every alternative
/// `b` and every `a` in `S` better than `b`, the row
/// `pi(b|S) - pi(b|S - a) <= 0`. Rows follow the index order of `S`, then
/// `b`, then `a`, both by ascending id.
#[allow(non_snake_case)]
pub fn build_R(pref: &Preference, index: &MenuIndex) -> Result<ConstraintMatrix> {
    if !index.is_complete() {
        return Err(RamError::WrongMode { expected: "complete" });
    }
    check_pref(pref, index)?;
    let mut rows = Vec::with_capacity(constraint_count(index.k())?);
    for (pos, &s) in index.menus().iter().enumerate() {
        for b in s.iter() {
            let here = Term { col: index.choice_col(pos, b), coef: 1.0 };
            for a in s.iter().filter(|&a| pref.prefers(a, b)) {
                let sub = s.without(a);
                let kind = RowKind::Monotonicity { menu: s, sub, alt: b };
                rows.push(if sub.len() == 1 {
                    Row::new(&[here], -1.0, kind)
                } else {
                    let p = index.position(sub).expect("complete index holds every sub-menu");
                    Row::new(&[here, Term { col: index.choice_col(p, b), coef: -1.0 }], 0.0, kind)
                });
            }
        }
    }
    Ok(ConstraintMatrix { rows, n_cols: index.choice_len(), kind: MatrixKind::Complete, pref: pref.clone(), phi: None })
}

/// Limited-data system: for observed `S`, observed `T` strictly inside `S`,
/// and `a` in `T` worse than every alternative of `S - T`, the row
/// `pi(a|S) - pi(a|T) <= 0`.
#[allow(non_snake_case)]
pub fn build_R_limited(pref: &Preference, index: &MenuIndex) -> Result<ConstraintMatrix> {
    if index.is_complete() {
        return Err(RamError::WrongMode { expected: "limited" });
    }
    check_pref(pref, index)?;
    let mut rows = Vec::new();
    for (ps, &s) in index.menus().iter().enumerate() {
        for (pt, &t) in index.menus().iter().enumerate() {
            if !t.is_proper_subset_of(s) {
                continue;
            }
            let gone = s.minus(t);
            for a in t.iter().filter(|&a| gone.iter().all(|x| pref.prefers(x, a))) {
                let terms = [
                    Term { col: index.choice_col(ps, a), coef: 1.0 },
                    Term { col: index.choice_col(pt, a), coef: -1.0 },
                ];
                rows.push(Row::new(&terms, 0.0, RowKind::Monotonicity { menu: s, sub: t, alt: a }));
            }
        }
    }
    Ok(ConstraintMatrix { rows, n_cols: index.choice_len(), kind: MatrixKind::Limited, pref: pref.clone(), phi: None })
}

/// Appends one row `(1 - phi)/phi * pi(worse|S) - pi(better|S) <= 0` per
/// indexed two-element menu, after all existing rows.
#[allow(non_snake_case)]
pub fn augment_R_binary(r: &ConstraintMatrix, phi: f64, index: &MenuIndex) -> Result<ConstraintMatrix> {
    if !(0.5..=1.0).contains(&phi) {
        return Err(RamError::PhiOutOfRange(phi));
    }
    if r.is_augmented() {
        return Err(RamError::NotPermutable("matrix is already augmented"));
    }
    let q = (1.0 - phi) / phi;
    let mut out = r.clone();
    for (pos, s) in index.binary_menus() {
        let mut it = s.iter();
        let (x, y) = (it.next().unwrap(), it.next().unwrap());
        let (better, worse) = if r.pref.prefers(x, y) { (x, y) } else { (y, x) };
        // column order follows the layout so rows read left to right
        let mut terms = [
            Term { col: index.choice_col(pos, worse), coef: q },
            Term { col: index.choice_col(pos, better), coef: -1.0 },
        ];
        terms.sort_by_key(|t| t.col);
        out.rows.push(Row::new(&terms, 0.0, RowKind::BinaryAttentive { menu: s, better, worse }));
    }
    out.phi = Some(phi);
    Ok(out)
}

/// Column map sending each `(S, x)` entry to `(sigma(S), sigma(x))` for an
/// alternative relabeling `sigma`.
pub fn column_permutation(index: &MenuIndex, sigma: &[usize]) -> Vec<usize> {
    let relabel = |m: Menu| Menu::from_ids(m.iter().map(|x| sigma[x]));
    let mut map = vec![0; index.choice_len()];
    for (pos, &s) in index.menus().iter().enumerate() {
        let target = index.position(relabel(s)).expect("relabeling preserves complete index");
        for x in s.iter() {
            map[index.choice_col(pos, x)] = index.choice_col(target, sigma[x]);
        }
    }
    map
}

/// Relabels the alternatives of a complete monotonicity system built for
/// `r.pref()` so that it becomes the system for `target`.
#[allow(non_snake_case)]
pub fn permute_R(r: &ConstraintMatrix, target: &Preference, index: &MenuIndex) -> Result<ConstraintMatrix> {
    if r.is_augmented() {
        return Err(RamError::NotPermutable("binary-augmented matrices are not relabeled"));
    }
    if r.kind == MatrixKind::Limited {
        return Err(RamError::NotPermutable("limited-data matrices are not relabeled"));
    }
    check_pref(target, index)?;
    // sigma(x) = target's alternative at x's rank under the source preference
    let sigma: Vec<usize> = (0..index.k()).map(|x| target.ranking()[r.pref.rank_of(x)]).collect();
    let cols = column_permutation(index, &sigma);
    let relabel = |m: Menu| Menu::from_ids(m.iter().map(|x| sigma[x]));
    let rows = r
        .rows
        .iter()
        .map(|row| {
            let terms: Vec<Term> = row.terms().iter().map(|t| Term { col: cols[t.col], coef: t.coef }).collect();
            let kind = match row.kind {
                RowKind::Monotonicity { menu, sub, alt } => {
                    RowKind::Monotonicity { menu: relabel(menu), sub: relabel(sub), alt: sigma[alt] }
                }
                other => other,
            };
            Row::new(&terms, row.offset, kind)
        })
        .collect();
    Ok(ConstraintMatrix { rows, n_cols: r.n_cols, kind: r.kind, pref: target.clone(), phi: None })
}

/// `sum_{k=2}^{K} C(K,k) C(k,2)`.
pub fn constraint_count(k: usize) -> Result<usize> {
    if k < 2 {
        return Err(RamError::GrandSetSize(k));
    }
    let binom = |n: usize, r: usize| (0..r).fold(1usize, |acc, i| acc * (n - i) / (i + 1));
    Ok((2..=k).map(|j| binom(k, j) * binom(j, 2)).sum())
}
