//! Bessel functions of the first kind of orders 0 and 1 by ascending series.

use crate::error::{Error, Result};

const MAX_ARG: f64 = 12.0;

fn series(order: u32, z: f64) -> f64 {
    // J_n(z) = sum_m (-1)^m (z/2)^(2m+n) / (m! (m+n)!)
    let half = 0.5 * z;
    let mut term = half.powi(order as i32);
    for k in 1..=order {
        term /= k as f64;
    }
    let q = -half * half;
    let mut sum = term;
    for m in 1..200u32 {
        term *= q / (m as f64 * (m + order) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// `J0(z)` for `|z| <= 12`.
pub fn j0(z: f64) -> f64 {
    assert!(z.abs() <= MAX_ARG, "series used outside |z| <= {MAX_ARG}");
    series(0, z)
}

/// `J1(z)` for `|z| <= 12`.
pub fn j1(z: f64) -> f64 {
    assert!(z.abs() <= MAX_ARG, "series used outside |z| <= {MAX_ARG}");
    series(1, z)
}

/// Root of `f` in `[a, b]` by bisection; `f(a)` and `f(b)` must differ in sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    if fa * f(b) > 0.0 {
        return Err(Error::InvalidConfig(format!("no sign change on [{a}, {b}]")));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// First positive zero of `J1`.
pub fn j1_first_zero() -> f64 {
    bisect(j1, 3.0, 4.5, 1e-14).expect("J1 changes sign on [3, 4.5]")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_values() {
        assert!((j0(0.0) - 1.0).abs() < 1e-15);
        assert_eq!(j1(0.0), 0.0);
        assert!((j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-14);
        assert!((j0(5.0) + 0.177_596_771_314_338_3).abs() < 1e-13);
        assert!((j1(10.0) - 0.043_472_746_168_861_44).abs() < 1e-12);
    }

    #[test]
    fn first_zeros() {
        assert!((j1_first_zero() - 3.831_705_970_2).abs() < 1e-8);
        let z0 = bisect(j0, 2.0, 3.0, 1e-14).unwrap();
        assert!((z0 - 2.404_825_557_695_773).abs() < 1e-12);
    }

    #[test]
    fn derivative_identity() {
        // J0' = -J1
        for z in [0.5, 2.0, 3.8, 7.0] {
            let d = (j0(z + 1e-6) - j0(z - 1e-6)) / 2e-6;
            assert!((d + j1(z)).abs() < 1e-8);
        }
    }

    #[test]
    fn bisect_requires_sign_change() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10).is_err());
    }
}
