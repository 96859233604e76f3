//! Dense phase-one simplex for small feasibility problems
//! `A x = b, x >= 0`, with Bland's rule against cycling.

const PIVOT_TOL: f64 = 1e-11;

/// Returns a basic feasible `x`, or `None` when the minimal total
/// infeasibility exceeds `tol`.
pub fn find_feasible(a: &[Vec<f64>], b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let width = n + m + 1;
    // tableau rows: constraints with artificials; last column is the rhs
    let mut t = vec![vec![0.0; width]; m];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = sign * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // reduced costs of the phase-one objective (sum of artificials)
    let mut cost = vec![0.0; width];
    for row in &t {
        for j in 0..n {
            cost[j] -= row[j];
        }
        cost[width - 1] -= row[width - 1];
    }

    let max_iter = 50 * (n + m) + 1000;
    for _ in 0..max_iter {
        let Some(enter) = (0..n + m).find(|&j| cost[j] < -PIVOT_TOL) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][enter] > PIVOT_TOL {
                let ratio = t[i][width - 1] / t[i][enter];
                leave = match leave {
                    Some((r, best)) if ratio > best + 1e-14 => Some((r, best)),
                    Some((r, best)) if (ratio - best).abs() <= 1e-14 && basis[r] < basis[i] => Some((r, best)),
                    _ => Some((i, ratio)),
                };
            }
        }
        let (r, _) = leave?;
        pivot(&mut t, &mut cost, r, enter);
        basis[r] = enter;
    }
    if -cost[width - 1] > tol {
        return None;
    }
    let mut x = vec![0.0; n];
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = t[i][width - 1].max(0.0);
        }
    }
    Some(x)
}

fn pivot(t: &mut [Vec<f64>], cost: &mut [f64], r: usize, c: usize) {
    let p = t[r][c];
    t[r].iter_mut().for_each(|v| *v /= p);
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r && row[c] != 0.0 {
            let f = row[c];
            row.iter_mut().zip(&pivot_row).for_each(|(v, pr)| *v -= f * pr);
        }
    }
    let f = cost[c];
    cost.iter_mut().zip(&pivot_row).for_each(|(v, pr)| *v -= f * pr);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_feasible_system() {
        // x + y = 1, x - y = 0.5
        let a = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        let x = find_feasible(&a, &[1.0, 0.5], 1e-12).unwrap();
        assert!((x[0] - 0.75).abs() < 1e-12 && (x[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn infeasible_system() {
        // x + y = 1 and x + y = 2
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(find_feasible(&a, &[1.0, 2.0], 1e-9).is_none());
        // x = -1 with x >= 0
        assert!(find_feasible(&[vec![1.0]], &[-1.0], 1e-9).is_none());
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let a = vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0], vec![1.0, 0.0, 0.0]];
        let x = find_feasible(&a, &[1.0, 2.0, 0.2], 1e-12).unwrap();
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((x[0] - 0.2).abs() < 1e-12);
    }
}
