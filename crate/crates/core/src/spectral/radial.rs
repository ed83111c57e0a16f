//! Radial eigenfunctions `J_n(mu r / r1) cos(n phi)` with the Robin lateral condition.

use std::f64::consts::PI;

use serde::Serialize;

use crate::model::SystemParams;
use crate::{Error, Result};

use super::bessel::bessel_j;
use super::quadrature::gl64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialMode {
    /// Angular order.
    pub n: u32,
    /// Radial index, 0-based.
    pub m: u32,
    /// Dimensionless root `mu_{n,m}`.
    pub mu: f64,
}

/// Lateral boundary condition `alpha J_n(mu) + (lambda_a / r1) (n J_n(mu) - mu J_{n+1}(mu))`
/// divided by `lambda_a / r1`, i.e. `(Bi + n) J_n(mu) - mu J_{n+1}(mu)`.
pub fn radial_residual(n: u32, mu: f64, p: &SystemParams) -> f64 {
    scaled_residual(n, mu, p.biot())
}

fn scaled_residual(n: u32, mu: f64, biot: f64) -> f64 {
    let jn = bessel_j(n, mu);
    (biot + n as f64) * jn - mu * bessel_j(n + 1, mu)
}

/// The `m_max` smallest positive roots of the lateral boundary condition for order `n`.
///
/// The scan is geometric below `1e-3` (the `n = 0` root scales like
/// `sqrt(2 Bi)` for small Biot numbers) and uniform with step `1e-3` above.
pub fn radial_roots(n: u32, m_max: usize, p: &SystemParams) -> Result<Vec<RadialMode>> {
    if m_max == 0 {
        return Err(Error::InvalidParameter("m_max must be >= 1".into()));
    }
    let biot = p.biot();
    let f = |mu: f64| scaled_residual(n, mu, biot);
    let limit = PI * (m_max as f64 + n as f64 + 2.0) + 10.0;
    let step = 1e-3;

    let mut grid: Vec<f64> = (0..=100).map(|i| 1e-9 * 1e6f64.powf(i as f64 / 100.0)).collect();
    let mut x = step;
    while x <= limit {
        x += step;
        grid.push(x);
    }

    let mut roots = Vec::with_capacity(m_max);
    let mut prev = (grid[0], f(grid[0]));
    for &x in &grid[1..] {
        let fx = f(x);
        if fx == 0.0 {
            roots.push(x);
        } else if prev.1 != 0.0 && prev.1.signum() != fx.signum() {
            roots.push(bisect(&f, prev.0, x, prev.1));
        }
        prev = (x, fx);
        if roots.len() == m_max {
            break;
        }
    }
    if roots.len() < m_max {
        return Err(Error::RootSearch(format!(
            "found {} of {} radial roots for n = {} in (0, {:.3}]",
            roots.len(),
            m_max,
            n,
            limit
        )));
    }
    Ok(roots
        .into_iter()
        .enumerate()
        .map(|(m, mu)| RadialMode { n, m: m as u32, mu })
        .collect())
}

/// Bisection down to adjacent floating-point numbers.
pub(crate) fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Integrals of the radial/angular factor used by projections and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialFactors {
    /// `int_0^{2pi} cos^2(n phi) dphi int_0^{r1} r J_n^2 dr`, m^2.
    pub weight: f64,
    /// Area average of the factor over the disk.
    pub mean: f64,
    /// Coefficient of the constant function on this mode: `<1, J> / <J, J>`.
    pub beta: f64,
}

impl RadialFactors {
    pub fn new(mode: &RadialMode, p: &SystemParams) -> Self {
        let rule = gl64();
        let j = |r: f64| bessel_j(mode.n, mode.mu * r / p.r1);
        let sq = rule.integrate(0.0, p.r1, |r| r * j(r) * j(r));
        let lin = rule.integrate(0.0, p.r1, |r| r * j(r));
        if mode.n == 0 {
            Self {
                weight: 2.0 * PI * sq,
                mean: 2.0 * lin / (p.r1 * p.r1),
                beta: lin / sq,
            }
        } else {
            Self { weight: PI * sq, mean: 0.0, beta: 0.0 }
        }
    }

    pub fn profile(mode: &RadialMode, p: &SystemParams, r: f64) -> f64 {
        bessel_j(mode.n, mode.mu * r / p.r1)
    }
}
