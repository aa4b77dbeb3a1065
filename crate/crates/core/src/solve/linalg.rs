//! Small dense linear algebra for the collocation least squares.

/// Gaussian elimination with complete pivoting on the square system
/// `a x = b`. Elimination stops at the first pivot below
/// `rel_tol · max |a_ij|`; the remaining unknowns are set to zero. Returns
/// the solution and the number of pivots taken.
#[allow(clippy::needless_range_loop)]
pub(super) fn solve_complete_pivoting(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, rel_tol: f64) -> (Vec<f64>, usize) {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut cols: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, 0.0);
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, v) in row.iter().enumerate().skip(k) {
                if v.abs() > best {
                    (pi, pj, best) = (i, j, v.abs());
                }
            }
        }
        if best <= rel_tol * scale || best == 0.0 {
            break;
        }
        a.swap(k, pi);
        b.swap(k, pi);
        for row in a.iter_mut() {
            row.swap(k, pj);
        }
        cols.swap(k, pj);
        for i in k + 1..n {
            let factor = a[i][k] / a[k][k];
            if factor == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= factor * a[k][j];
            }
            b[i] -= factor * b[k];
        }
        rank += 1;
    }
    let mut y = vec![0.0; n];
    for k in (0..rank).rev() {
        let s: f64 = (k + 1..rank).map(|j| a[k][j] * y[j]).sum();
        y[k] = (b[k] - s) / a[k][k];
    }
    let mut x = vec![0.0; n];
    for (k, &c) in cols.iter().enumerate() {
        x[c] = y[k];
    }
    (x, rank)
}

/// `mᵀm` for a row-major `m` with `n` columns.
#[allow(clippy::needless_range_loop)]
pub(super) fn gram(m: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut g = vec![vec![0.0; n]; n];
    for row in m {
        for i in 0..n {
            if row[i] == 0.0 {
                continue;
            }
            for j in i..n {
                g[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            g[i][j] = g[j][i];
        }
    }
    g
}

/// `mᵀr`.
pub(super) fn transpose_apply(m: &[Vec<f64>], r: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (row, &ri) in m.iter().zip(r) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o += v * ri;
        }
    }
    out
}
