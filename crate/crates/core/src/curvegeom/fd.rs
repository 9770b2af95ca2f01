//! Five-point finite-difference weights.

/// Fornberg weights for nodes `x`, evaluated at `z`, derivatives `0..=4`.
pub(crate) fn fornberg(x: &[f64; 5], z: f64) -> [[f64; 5]; 5] {
    let n = x.len();
    let mut c = [[0.0; 5]; 5]; // c[order][node]
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(4);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// `w[center][order][j]`: weights on the unit grid `0..5` evaluated at node `center`.
pub(crate) fn five_point_weights() -> [[[f64; 5]; 5]; 5] {
    let x = [0.0, 1.0, 2.0, 3.0, 4.0];
    let mut w = [[[0.0; 5]; 5]; 5];
    for (c, wc) in w.iter_mut().enumerate() {
        *wc = fornberg(&x, c as f64);
    }
    w
}
