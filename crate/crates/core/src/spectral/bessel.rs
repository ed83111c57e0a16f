//! Bessel functions of the first kind for integer order.
//!
//! Uses Bessel's integral `J_n(x) = (1/2pi) int_0^{2pi} cos(n t - x sin t) dt`.
//! The integrand is periodic and entire, so the trapezoidal rule converges
//! geometrically once the node count exceeds `|x| + n` by a safety margin.

use std::f64::consts::PI;

pub fn bessel_j(n: u32, x: f64) -> f64 {
    let nodes = 48 + 2 * (x.abs().ceil() as usize + n as usize);
    let h = 2.0 * PI / nodes as f64;
    let nf = n as f64;
    let mut acc = 0.0;
    for i in 0..nodes {
        let t = i as f64 * h;
        acc += (nf * t - x * t.sin()).cos();
    }
    acc / nodes as f64
}

pub fn j0(x: f64) -> f64 {
    bessel_j(0, x)
}

pub fn j1(x: f64) -> f64 {
    bessel_j(1, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Power series, accurate for small |x|; kept independent of the integral form.
    fn series(n: u32, x: f64) -> f64 {
        let mut term = (x / 2.0).powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
        let mut sum = term;
        for k in 1..60 {
            term *= -(x * x / 4.0) / (k as f64 * (k as f64 + n as f64));
            sum += term;
        }
        sum
    }

    #[test]
    fn matches_series_for_moderate_arguments() {
        for n in 0..4 {
            for i in 0..50 {
                let x = 0.1 * i as f64;
                assert!((bessel_j(n, x) - series(n, x)).abs() < 1e-14, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn tabulated_values() {
        assert!((j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((j0(10.0) - (-0.245_935_764_451_348_3)).abs() < 1e-14);
        // First zero of J1.
        assert!(j1(3.831_705_970_207_512).abs() < 1e-14);
    }

    #[test]
    fn three_term_recurrence() {
        for i in 1..40 {
            let x = 0.5 * i as f64;
            for n in 1..5 {
                let lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x);
                let rhs = 2.0 * n as f64 / x * bessel_j(n, x);
                assert!((lhs - rhs).abs() < 1e-13);
            }
        }
    }
}
