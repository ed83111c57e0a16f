//! Time-independent profiles under the single-radial-mode ansatz.

use nalgebra::{Matrix6, Vector6};

use crate::model::SystemParams;
use crate::spectral::{AxialProfile, Pair, RadialFactors, RadialMode, Region, Segment};
use crate::{Error, Result};

/// `theta_st = J_0(mu r / r1) psi_st(z)` for a constant control.
///
/// `psi_st` is a quadratic polynomial in the element (uniform Joule source) and a
/// hyperbolic pair in the cylinders.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyProfile {
    pub u: f64,
    pub psi: AxialProfile,
    pub radial: RadialMode,
    pub radial_factors: RadialFactors,
}

impl SteadyProfile {
    pub fn field(&self, p: &SystemParams, r: f64, z: f64) -> f64 {
        RadialFactors::profile(&self.radial, p, r) * self.psi.value(z)
    }

    /// Volume average over the controlled cylinder: radial mean of the Bessel
    /// factor times the axial mean of `psi` over `[z0, z1]`.
    pub fn v1_average(&self, p: &SystemParams) -> f64 {
        self.radial_factors.mean * self.psi.integrate(Region::Controlled, |v, _| v) / p.cyl_length()
    }

    pub fn v1_norm2(&self) -> f64 {
        self.radial_factors.weight * self.psi.integrate(Region::Controlled, |v, _| v * v)
    }

    /// `int_V c rho theta^2 dV`.
    pub fn weighted_energy(&self, p: &SystemParams) -> f64 {
        self.radial_factors.weight
            * Region::ALL
                .iter()
                .map(|&r| r.capacity(p) * self.psi.integrate(r, |v, _| v * v))
                .sum::<f64>()
    }
}

/// Lateral ambient exchange projected onto the radial mode, W/m^3.
pub(crate) fn ambient_source(p: &SystemParams, radial: &RadialMode, rf: &RadialFactors) -> f64 {
    if radial.n != 0 {
        return 0.0;
    }
    let j_edge = RadialFactors::profile(radial, p, p.r1);
    p.alpha * p.theta_ambient * 2.0 * std::f64::consts::PI * p.r1 * j_edge / rf.weight
}

/// Solves the steady problem for constant `u`.
///
/// Six unknowns (two per region) from: insulated ends, continuity at both faces,
/// and the Peltier flux condition at both faces with the constant `theta0` part
/// projected onto the radial mode.
pub fn steady_profile(u: f64, p: &SystemParams, radial: RadialMode) -> Result<SteadyProfile> {
    let rf = RadialFactors::new(&radial, p);
    steady_profile_with(u, p, radial, rf)
}

pub(crate) fn steady_profile_with(
    u: f64,
    p: &SystemParams,
    radial: RadialMode,
    rf: RadialFactors,
) -> Result<SteadyProfile> {
    if !u.is_finite() {
        return Err(Error::InvalidParameter("control value must be finite".into()));
    }
    let q = radial.mu / p.r1;
    let cyl_pair = Pair::from_kappa2(-q * q);
    let sigma = ambient_source(p, &radial, &rf);
    let offset = if q > 0.0 { sigma / (p.lambda_a * q * q) } else { 0.0 };
    let quad = -rf.beta * p.joule_density(u) / (2.0 * p.lambda_p);
    let peltier = p.peltier_coefficient(u);
    let face_source = peltier * rf.beta * p.theta0;

    let template = [
        Segment { start: -p.z1, end: -p.z0, pair: cyl_pair, a: 0.0, b: 0.0, offset, quad: 0.0 },
        Segment { start: -p.z0, end: p.z0, pair: Pair::Linear, a: 0.0, b: 0.0, offset: 0.0, quad },
        Segment { start: p.z0, end: p.z1, pair: cyl_pair, a: 0.0, b: 0.0, offset, quad: 0.0 },
    ];

    // (value row, slope row, value particular, slope particular) of region `i` at `z`.
    let eval = |i: usize, z: f64| {
        let s = &template[i];
        let (c, sn, dc, ds) = s.pair.eval(z - s.start);
        let mut val = [0.0; 6];
        let mut der = [0.0; 6];
        val[2 * i] = c;
        val[2 * i + 1] = sn;
        der[2 * i] = dc;
        der[2 * i + 1] = ds;
        let x = z - s.start;
        (val, der, s.offset + s.quad * x * x, 2.0 * s.quad * x)
    };

    let mut m = Matrix6::<f64>::zeros();
    let mut rhs = Vector6::<f64>::zeros();
    let mut set = |row: usize, coef: [f64; 6], constant: f64| {
        for (j, c) in coef.iter().enumerate() {
            m[(row, j)] = *c;
        }
        rhs[row] = -constant;
    };
    let lin = |a: [f64; 6], ka: f64, b: [f64; 6], kb: f64| {
        let mut out = [0.0; 6];
        for j in 0..6 {
            out[j] = ka * a[j] + kb * b[j];
        }
        out
    };

    // insulated bottom end
    let (_, d, _, dp) = eval(0, -p.z1);
    set(0, d, dp);
    // continuity at -z0
    let (v0, d0, v0p, d0p) = eval(0, -p.z0);
    let (v1, d1, v1p, d1p) = eval(1, -p.z0);
    set(1, lin(v0, 1.0, v1, -1.0), v0p - v1p);
    // -lambda_a psi'_sink = P (psi_pe + beta theta0) - lambda_p psi'_pe
    let row = lin(lin(d0, -p.lambda_a, v1, -peltier), 1.0, d1, p.lambda_p);
    set(2, row, -p.lambda_a * d0p - peltier * v1p - face_source + p.lambda_p * d1p);
    // continuity at z0
    let (v1, d1, v1p, d1p) = eval(1, p.z0);
    let (v2, d2, v2p, d2p) = eval(2, p.z0);
    set(3, lin(v2, 1.0, v1, -1.0), v2p - v1p);
    // -lambda_a psi'_top = P (psi_pe + beta theta0) - lambda_p psi'_pe
    let row = lin(lin(d2, -p.lambda_a, v1, -peltier), 1.0, d1, p.lambda_p);
    set(4, row, -p.lambda_a * d2p - peltier * v1p - face_source + p.lambda_p * d1p);
    // insulated top end
    let (_, d, _, dp) = eval(2, p.z1);
    set(5, d, dp);

    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::LinearSolve(format!("singular steady-state system at u = {u}")))?;
    let mut segments = template;
    for (i, s) in segments.iter_mut().enumerate() {
        s.a = sol[2 * i];
        s.b = sol[2 * i + 1];
    }
    Ok(SteadyProfile { u, psi: AxialProfile { segments }, radial, radial_factors: rf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::radial_roots;

    fn fundamental() -> (SystemParams, RadialMode) {
        let p = SystemParams::default();
        (p, radial_roots(0, 1, &p).unwrap()[0])
    }

    #[test]
    fn zero_control_gives_zero_profile() {
        let (p, r) = fundamental();
        let s = steady_profile(0.0, &p, r).unwrap();
        for z in [-p.z1, -0.05, 0.0, 0.05, p.z1] {
            assert_eq!(s.psi.value(z), 0.0);
        }
        assert_eq!(s.v1_average(&p), 0.0);
    }

    #[test]
    fn profile_satisfies_interface_conditions() {
        let (p, r) = fundamental();
        let u = 1.6;
        let s = steady_profile(u, &p, r).unwrap();
        let pel = p.peltier_coefficient(u);
        let beta = s.radial_factors.beta;
        let scale = s.psi.value(p.z0).abs();
        for (outer, face) in [(Region::HeatSink, -p.z0), (Region::Controlled, p.z0)] {
            let (vo, dout) = s.psi.one_sided(outer, face);
            let (vi, din) = s.psi.one_sided(Region::Element, face);
            assert!((vo - vi).abs() < 1e-10 * scale);
            let flux = -p.lambda_a * dout;
            let resid = flux - (pel * (vi + beta * p.theta0) - p.lambda_p * din);
            assert!(resid.abs() < 1e-10 * (pel * beta * p.theta0), "{resid}");
        }
        assert!(s.psi.one_sided(Region::HeatSink, -p.z1).1.abs() < 1e-12 * scale);
        assert!(s.psi.one_sided(Region::Controlled, p.z1).1.abs() < 1e-12 * scale);
    }

    #[test]
    fn positive_control_heats_the_controlled_cylinder() {
        let (p, r) = fundamental();
        let s = steady_profile(1.5, &p, r).unwrap();
        assert!(s.psi.value(0.05) > 0.0);
        assert!(s.psi.value(-0.05) < 0.0);
    }

    #[test]
    fn ambient_offset_gives_uniform_field() {
        let (_, _) = fundamental();
        let p = SystemParams { theta_ambient: 2.0, ..SystemParams::default() };
        let r = radial_roots(0, 1, &p).unwrap()[0];
        let s = steady_profile(0.0, &p, r).unwrap();
        // the radial factor is within 0.1 % of one, so the average is close to theta_A
        assert!((s.v1_average(&p) - 2.0).abs() < 2e-2, "{}", s.v1_average(&p));
    }

    #[test]
    fn constant_profile_average_is_separable() {
        let (p, r) = fundamental();
        let rf = RadialFactors::new(&r, &p);
        let c = 3.0;
        let seg = |start, end| Segment { start, end, pair: Pair::Linear, a: c, b: 0.0, offset: 0.0, quad: 0.0 };
        let psi = AxialProfile { segments: [seg(-p.z1, -p.z0), seg(-p.z0, p.z0), seg(p.z0, p.z1)] };
        let prof = SteadyProfile { u: 0.0, psi, radial: r, radial_factors: rf };
        let radial_mean = crate::spectral::quadrature::gl64()
            .integrate(0.0, p.r1, |rr| rr * RadialFactors::profile(&r, &p, rr))
            * 2.0
            / (p.r1 * p.r1);
        assert!((prof.v1_average(&p) - c * radial_mean).abs() < 1e-13);
    }
}
