//! Reference computations for the integration tests, written without the library.

#![allow(dead_code)]

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let c = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += c * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `exp(1/(t^2 - 1))` on `(-1, 1)`.
pub fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 / (t * t - 1.0)).exp()
    }
}

/// Gaussian elimination with partial pivoting on a dense row-major matrix.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let l = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= l * a[k][j];
            }
            b[i] -= l * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// `1 - x^2 - y^2`.
pub fn bowl(x: f64, y: f64) -> f64 {
    1.0 - x * x - y * y
}
