//! Gauss-Legendre quadrature on [0, 1].

/// Nodes and weights of the n-point Gauss-Legendre rule on [0, 1].
///
/// Roots of the Legendre polynomial P_n on [-1, 1] are found by Newton
/// iteration from the Chebyshev starting guesses, then mapped to [0, 1].
pub fn gauss_legendre_01(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // initial guess: Chebyshev points, good to a few percent
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] -> [0,1]
        rule.push((0.5 * (x + 1.0), 0.5 * w));
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    rule
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrate a vector-valued function over [0, 1] with the n-point rule.
pub fn integrate_01<T, F>(n: usize, zero: T, mut f: F) -> T
where
    T: std::ops::AddAssign,
    F: FnMut(f64, f64) -> T,
{
    let mut acc = zero;
    for (x, w) in gauss_legendre_01(n) {
        acc += f(x, w);
    }
    acc
}
