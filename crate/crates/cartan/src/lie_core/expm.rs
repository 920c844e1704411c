use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Matrix 1-norm (maximum absolute column sum).
pub fn matrix_norm_one(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a [6/6] Pade approximant.
///
/// The argument is scaled until its 1-norm is at most 0.5, where the
/// approximant is accurate to machine precision, then squared back.
pub fn expm_pade(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = matrix_norm_one(a);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.scale(0.5_f64.powi(s));
    let mut result = pade6(&scaled);
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

fn pade6(a: &DMatrix<f64>) -> DMatrix<f64> {
    let q = 6usize;
    let n = a.nrows();
    let mut num = DMatrix::<f64>::identity(n, n);
    let mut den = DMatrix::<f64>::identity(n, n);
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut c = 1.0;
    for k in 1..=q {
        c *= (q - k + 1) as f64 / ((k * (2 * q - k + 1)) as f64);
        power = &power * a;
        num += power.scale(c);
        if k % 2 == 0 {
            den += power.scale(c);
        } else {
            den -= power.scale(c);
        }
    }
    den.lu().solve(&num).expect("Pade denominator is invertible")
}

/// Matrix logarithm for matrices close to the identity, by the Mercator
/// series in E = g - I. Requires ||E|| < 0.9.
pub fn log_near_identity(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let e = g - DMatrix::<f64>::identity(n, n);
    let norm = e.norm();
    if !norm.is_finite() || norm >= 0.9 {
        return Err(Error::NonFinite("log argument too far from identity"));
    }
    let mut acc = DMatrix::<f64>::zeros(n, n);
    let mut power = DMatrix::<f64>::identity(n, n);
    for k in 1..=120 {
        power = &power * &e;
        let term = power.scale(if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64);
        acc += &term;
        if term.norm() < 1e-17 * (1.0 + acc.norm()) {
            break;
        }
    }
    Ok(acc)
}
