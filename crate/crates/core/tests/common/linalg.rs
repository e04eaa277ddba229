#![allow(clippy::needless_range_loop)]

/// Solves `A x = b` by Gaussian elimination with full pivoting.
pub fn solve_full_pivot(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> [f64; 4] {
    let mut col_perm = [0, 1, 2, 3];
    for k in 0..4 {
        let (mut pi, mut pj, mut best) = (k, k, 0.0);
        for i in k..4 {
            for j in k..4 {
                if a[i][j].abs() > best {
                    (pi, pj, best) = (i, j, a[i][j].abs());
                }
            }
        }
        assert!(best > 0.0, "singular system");
        a.swap(k, pi);
        b.swap(k, pi);
        for row in a.iter_mut() {
            row.swap(k, pj);
        }
        col_perm.swap(k, pj);
        for i in k + 1..4 {
            let f = a[i][k] / a[k][k];
            for j in k..4 {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut y = [0.0; 4];
    for k in (0..4).rev() {
        let s: f64 = (k + 1..4).map(|j| a[k][j] * y[j]).sum();
        y[k] = (b[k] - s) / a[k][k];
    }
    let mut x = [0.0; 4];
    for k in 0..4 {
        x[col_perm[k]] = y[k];
    }
    x
}
