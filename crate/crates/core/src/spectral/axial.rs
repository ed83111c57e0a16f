//! The control-dependent axial eigenproblem.
//!
//! For constant `u`, separating `theta = e^{nu t} J_n(mu r / r1) cos(n phi) psi(z)`
//! gives `psi'' = -(xi / r1)^2 psi` in the cylinders, `psi'' = (c_p rho_p nu / lambda_p) psi`
//! in the element, continuity of `psi` at `+-z0`, the Peltier flux jump
//! `-lambda_a psi'(outer) = P psi - lambda_p psi'(inner)` at both faces with
//! `P = S u / (R |A_p|)`, and insulated ends.
//!
//! With the `c rho` weight the problem is self-adjoint, so eigenfunctions of one
//! basis are orthogonal. Eigenvalues are the zeros of [`characteristic_residual`].

use crate::model::SystemParams;
use crate::{Error, Result};

use super::profile::{AxialProfile, Pair, Region, Segment};
use super::radial::{bisect, RadialMode};

/// Knobs of the eigenvalue scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    /// Grid points over the scan window.
    pub points: usize,
    /// Window doublings allowed before giving up.
    pub max_extensions: u32,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { points: 10_000, max_extensions: 4 }
    }
}

/// Local `kappa^2` of each region for a given `xi^2` (`psi'' = -kappa^2 psi`).
fn region_kappa2(xi2: f64, radial: &RadialMode, p: &SystemParams) -> (f64, f64) {
    let nu = p.decay_rate(radial.mu, xi2);
    let cyl = xi2 / (p.r1 * p.r1);
    let pe = -p.heat_capacity_p() * nu / p.lambda_p;
    (cyl, pe)
}

/// Shoots `(psi, psi') = (1, 0)` from `-z1` through the three regions.
pub(crate) fn shoot(xi2: f64, u: f64, p: &SystemParams, radial: &RadialMode) -> AxialProfile {
    let (k_cyl, k_pe) = region_kappa2(xi2, radial, p);
    let pair_cyl = Pair::from_kappa2(k_cyl);
    let pair_pe = Pair::from_kappa2(k_pe);
    let peltier = p.peltier_coefficient(u);

    let sink = Segment::homogeneous(-p.z1, -p.z0, pair_cyl, 1.0, 0.0);
    let (psi, d_sink) = sink.end_state();
    let d_pe = (peltier * psi + p.lambda_a * d_sink) / p.lambda_p;
    let element = Segment::homogeneous(-p.z0, p.z0, pair_pe, psi, d_pe);
    let (psi, d_pe) = element.end_state();
    let d_top = (p.lambda_p * d_pe - peltier * psi) / p.lambda_a;
    let controlled = Segment::homogeneous(p.z0, p.z1, pair_cyl, psi, d_top);
    AxialProfile { segments: [sink, element, controlled] }
}

/// `psi'(z1)` of the shot solution; zero exactly at eigenvalues `xi^2`.
pub fn characteristic_residual(xi2: f64, u: f64, p: &SystemParams, radial: &RadialMode) -> f64 {
    shoot(xi2, u, p, radial).segments[2].end_state().1
}

/// A bracket `[lo, hi]` in `xi^2` containing one sign change of the residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

/// Scans `xi^2` in `(-mu^2, xi2_max]` for sign changes and bisects each.
///
/// The grid is uniform in `s = sqrt(mu^2 + xi^2)`, which is proportional to the
/// square root of the decay rate; this spreads out the slow, closely spaced modes.
/// Returns the first `count` roots and their brackets.
pub fn find_eigenvalues(
    count: usize,
    u: f64,
    p: &SystemParams,
    radial: &RadialMode,
    scan: ScanConfig,
) -> Result<Vec<(f64, Bracket)>> {
    let mu2 = radial.mu * radial.mu;
    let h = p.cyl_length();
    let mut xi2_max = (count as f64 * std::f64::consts::PI * p.r1 / h).powi(2) * 4.0;
    for _ in 0..=scan.max_extensions {
        let s_max = (mu2 + xi2_max).sqrt();
        let xi2_of = |s: f64| s * s - mu2;
        let f = |s: f64| characteristic_residual(xi2_of(s), u, p, radial);
        let mut roots = Vec::with_capacity(count);
        let n = scan.points.max(2);
        let mut prev_s = 0.0;
        let mut prev_f = f(0.0);
        for i in 1..=n {
            let s = s_max * i as f64 / n as f64;
            let fs = f(s);
            if fs == 0.0 {
                roots.push((xi2_of(s), Bracket { lo: xi2_of(prev_s), hi: xi2_of(s) }));
            } else if prev_f != 0.0 && fs.signum() != prev_f.signum() {
                let root = bisect(&f, prev_s, s, prev_f);
                roots.push((xi2_of(root), Bracket { lo: xi2_of(prev_s), hi: xi2_of(s) }));
            }
            if roots.len() == count {
                return Ok(roots);
            }
            prev_s = s;
            prev_f = fs;
        }
        xi2_max *= 2.0;
    }
    Err(Error::RootSearch(format!(
        "axial scan for u = {u} V found fewer than {count} eigenvalues in xi^2 up to {:.4e}",
        xi2_max / 2.0
    )))
}

/// Normalized eigenfunction for an eigenvalue `xi2`.
pub(crate) fn eigenfunction(
    xi2: f64,
    u: f64,
    p: &SystemParams,
    radial: &RadialMode,
    radial_weight: f64,
) -> (AxialProfile, f64) {
    let mut psi = shoot(xi2, u, p, radial);
    let norm = weighted_norm2(&psi, p, radial_weight);
    psi.scale(1.0 / norm.sqrt());
    let after = weighted_norm2(&psi, p, radial_weight);
    (psi, after)
}

/// `int_V c rho Xi^2 dV` for `Xi = (radial factor) psi`.
pub(crate) fn weighted_norm2(psi: &AxialProfile, p: &SystemParams, radial_weight: f64) -> f64 {
    radial_weight
        * Region::ALL
            .iter()
            .map(|&r| r.capacity(p) * psi.integrate(r, |v, _| v * v))
            .sum::<f64>()
}
