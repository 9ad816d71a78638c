//! Dense two-phase simplex (Bland's rule) used as an independent LP oracle.

const EPS: f64 = 1e-12;

/// Minimizes `c·x` subject to `a x = b`, `x ≥ 0`. Rows of `a` must be
/// linearly independent and `b ≥ 0`.
pub fn solve_standard_form(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> (f64, Vec<f64>) {
    let rows = a.len();
    let cols = c.len();
    let width = cols + rows + 1;
    // tableau rows, then the objective row at index `rows`
    let mut t = vec![vec![0.0; width]; rows + 1];
    for i in 0..rows {
        t[i][..cols].copy_from_slice(&a[i]);
        t[i][cols + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    // phase 1: minimize the sum of artificials
    let mut phase1 = vec![0.0; width];
    for i in 0..rows {
        for j in 0..width {
            if j < cols || j == width - 1 {
                phase1[j] -= t[i][j];
            }
        }
    }
    t[rows] = phase1;
    run(&mut t, &mut basis, cols + rows);
    assert!(t[rows][width - 1].abs() < 1e-9, "infeasible LP");
    // pivot out artificials left in the basis at zero level
    for r in 0..rows {
        if basis[r] >= cols {
            if let Some(j) = (0..cols).find(|&j| t[r][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, r, j);
            }
        }
    }

    // phase 2
    let mut obj = vec![0.0; width];
    obj[..cols].copy_from_slice(c);
    for r in 0..rows {
        let bj = basis[r];
        if bj < cols && obj[bj] != 0.0 {
            let f = obj[bj];
            for j in 0..width {
                obj[j] -= f * t[r][j];
            }
        }
    }
    t[rows] = obj;
    run(&mut t, &mut basis, cols);
    let mut x = vec![0.0; cols];
    for r in 0..rows {
        if basis[r] < cols {
            x[basis[r]] = t[r][width - 1];
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    (value, x)
}

fn run(t: &mut [Vec<f64>], basis: &mut [usize], allowed: usize) {
    let rows = basis.len();
    let width = t[0].len();
    loop {
        // Bland: lowest-index column with negative reduced cost
        let Some(enter) = (0..allowed).find(|&j| t[rows][j] < -EPS) else { return };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            if t[r][enter] > EPS {
                let ratio = t[r][width - 1] / t[r][enter];
                match leave {
                    Some((_, lratio)) if ratio > lratio + EPS => {}
                    Some((lr, lratio)) if (ratio - lratio).abs() <= EPS && basis[r] > basis[lr] => {}
                    _ => leave = Some((r, ratio)),
                }
            }
        }
        let (r, _) = leave.expect("unbounded LP");
        pivot(t, basis, r, enter);
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, col: usize) {
    let p = t[r][col];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r && row[col] != 0.0 {
            let f = row[col];
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
    }
    basis[r] = col;
}

/// Balanced transportation problem through the generic LP: one equality per
/// supply row and per demand column except the last (which is implied).
pub fn transport_lp(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (m, n) = (supply.len(), demand.len());
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..m {
        let mut row = vec![0.0; m * n];
        for j in 0..n {
            row[i * n + j] = 1.0;
        }
        a.push(row);
        b.push(supply[i]);
    }
    for j in 0..n.saturating_sub(1) {
        let mut row = vec![0.0; m * n];
        for i in 0..m {
            row[i * n + j] = 1.0;
        }
        a.push(row);
        b.push(demand[j]);
    }
    let c: Vec<f64> = cost.iter().flatten().copied().collect();
    solve_standard_form(&a, &b, &c).0
}
