//! Small numerical helpers shared by the flow and verification code.

/// Derivative of uniformly or non-uniformly sampled data: centered
/// differences in the interior, second-order one-sided at the ends.
/// Requires at least three samples.
pub fn finite_difference<const N: usize>(t: &[f64], v: &[[f64; N]]) -> Vec<[f64; N]> {
    let n = t.len();
    assert!(n >= 3 && v.len() == n, "finite_difference needs >= 3 samples");
    let mut out = vec![[0.0; N]; n];
    for s in 1..n - 1 {
        let (h0, h1) = (t[s] - t[s - 1], t[s + 1] - t[s]);
        for k in 0..N {
            // three-point formula for unequal spacing
            out[s][k] = (-h1 / (h0 * (h0 + h1))) * v[s - 1][k]
                + ((h1 - h0) / (h0 * h1)) * v[s][k]
                + (h0 / (h1 * (h0 + h1))) * v[s + 1][k];
        }
    }
    let h = t[1] - t[0];
    let g = t[n - 1] - t[n - 2];
    for k in 0..N {
        out[0][k] = (-3.0 * v[0][k] + 4.0 * v[1][k] - v[2][k]) / (2.0 * h);
        out[n - 1][k] = (3.0 * v[n - 1][k] - 4.0 * v[n - 2][k] + v[n - 3][k]) / (2.0 * g);
    }
    out
}

/// Scalar variant of [`finite_difference`].
pub fn finite_difference_scalar(t: &[f64], v: &[f64]) -> Vec<f64> {
    let wrapped: Vec<[f64; 1]> = v.iter().map(|&x| [x]).collect();
    finite_difference(t, &wrapped).into_iter().map(|[x]| x).collect()
}

/// One classical Runge–Kutta step of `ẏ = f(y)`.
pub fn rk4_step<const N: usize>(y: &[f64; N], h: f64, f: &impl Fn(&[f64; N]) -> [f64; N]) -> [f64; N] {
    let axpy = |a: &[f64; N], s: f64, b: &[f64; N]| -> [f64; N] { std::array::from_fn(|i| a[i] + s * b[i]) };
    let k1 = f(y);
    let k2 = f(&axpy(y, 0.5 * h, &k1));
    let k3 = f(&axpy(y, 0.5 * h, &k2));
    let k4 = f(&axpy(y, h, &k3));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}
