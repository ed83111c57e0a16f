//! Physical parameters, the dead-zone input map and piecewise-constant controls.
//!
//! Temperatures are relative to the reference temperature `theta0`; `theta0`
//! itself only enters through the Peltier heat at the element faces.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Geometry, materials and thermoelectric constants of the two-cylinder system.
///
/// Subscript `a` is the cylinder material, `p` the Peltier element. The element
/// occupies `|z| < z0`, the controlled cylinder `z0 < z < z1` and the heat-sink
/// cylinder `-z1 < z < -z0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Thermal conductivity of the cylinders, W/(m K).
    pub lambda_a: f64,
    /// Thermal conductivity of the Peltier element, W/(m K).
    pub lambda_p: f64,
    /// Density, kg/m^3.
    pub rho_a: f64,
    pub rho_p: f64,
    /// Specific heat, J/(kg K).
    pub c_a: f64,
    pub c_p: f64,
    /// Lateral heat-transfer coefficient, W/(m^2 K).
    pub alpha: f64,
    /// Cylinder radius, m.
    pub r1: f64,
    /// Half-thickness of the Peltier element, m.
    pub z0: f64,
    /// Outer end coordinate, m.
    pub z1: f64,
    /// Seebeck coefficient, V/K.
    pub seebeck: f64,
    /// Ohmic resistance of the element, Ohm.
    pub resistance: f64,
    /// Upper dead-zone threshold, V.
    pub u_plus: f64,
    /// Lower dead-zone threshold, V.
    pub u_minus: f64,
    /// Ambient temperature relative to the reference, K.
    pub theta_ambient: f64,
    /// Absolute reference temperature, K.
    pub theta0: f64,
}

impl Default for SystemParams {
    /// The laboratory two-cylinder setup: aluminium cylinders of length 0.1 m and a
    /// 3.9 mm thick Peltier element.
    fn default() -> Self {
        let z0 = 0.00195;
        Self {
            lambda_a: 254.4,
            lambda_p: 0.517,
            rho_a: 2700.0,
            rho_p: 3000.0,
            c_a: 896.0,
            c_p: 500.0,
            alpha: 8.4,
            r1: 0.031,
            z0,
            z1: z0 + 0.1,
            seebeck: 0.0427,
            resistance: 6.03,
            u_plus: 1.115,
            u_minus: -1.29,
            theta_ambient: 0.0,
            theta0: 293.0,
        }
    }
}

impl SystemParams {
    /// Checks every invariant and returns the parameters unchanged on success.
    ///
    /// The error names the first violated constraint.
    pub fn validate(self) -> Result<Self> {
        let finite = [
            ("lambda_a", self.lambda_a),
            ("lambda_p", self.lambda_p),
            ("rho_a", self.rho_a),
            ("rho_p", self.rho_p),
            ("c_a", self.c_a),
            ("c_p", self.c_p),
            ("alpha", self.alpha),
            ("r1", self.r1),
            ("z0", self.z0),
            ("z1", self.z1),
            ("seebeck", self.seebeck),
            ("resistance", self.resistance),
            ("u_plus", self.u_plus),
            ("u_minus", self.u_minus),
            ("theta_ambient", self.theta_ambient),
            ("theta0", self.theta0),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        let positive = [
            ("lambda_a", self.lambda_a),
            ("lambda_p", self.lambda_p),
            ("rho_a", self.rho_a),
            ("rho_p", self.rho_p),
            ("c_a", self.c_a),
            ("c_p", self.c_p),
            ("alpha", self.alpha),
            ("r1", self.r1),
            ("resistance", self.resistance),
            ("theta0", self.theta0),
        ];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be > 0")));
            }
        }
        if self.z0 <= 0.0 {
            return Err(Error::InvalidParameter("z0 must be > 0".into()));
        }
        if self.z0 >= self.z1 {
            return Err(Error::InvalidParameter("z0 must be < z1".into()));
        }
        if self.u_minus >= 0.0 {
            return Err(Error::InvalidParameter("u_minus must be < 0".into()));
        }
        if self.u_plus <= 0.0 {
            return Err(Error::InvalidParameter("u_plus must be > 0".into()));
        }
        Ok(self)
    }

    /// Face area of the element, `pi r1^2`.
    pub fn area_pe(&self) -> f64 {
        PI * self.r1 * self.r1
    }

    /// Volume of the element, `2 z0 |A_p|`.
    pub fn volume_pe(&self) -> f64 {
        2.0 * self.z0 * self.area_pe()
    }

    /// Volume of one cylinder, `(z1 - z0) |A_p|`.
    pub fn volume_cyl(&self) -> f64 {
        self.cyl_length() * self.area_pe()
    }

    pub fn cyl_length(&self) -> f64 {
        self.z1 - self.z0
    }

    /// Biot number `alpha r1 / lambda_a` of the lateral surface.
    pub fn biot(&self) -> f64 {
        self.alpha * self.r1 / self.lambda_a
    }

    pub fn heat_capacity_a(&self) -> f64 {
        self.c_a * self.rho_a
    }

    pub fn heat_capacity_p(&self) -> f64 {
        self.c_p * self.rho_p
    }

    /// Peltier face coefficient `S u / (R |A_p|)`, W/(m^2 K).
    pub fn peltier_coefficient(&self, u: f64) -> f64 {
        self.seebeck * u / (self.resistance * self.area_pe())
    }

    /// Uniform Joule source `u^2 / (R |V_p|)`, W/m^3.
    pub fn joule_density(&self, u: f64) -> f64 {
        u * u / (self.resistance * self.volume_pe())
    }

    /// Converts a decay rate `nu` (1/s) to the dimensionless `mu^2 + xi^2`.
    pub fn rate_to_wavenumber2(&self, nu: f64) -> f64 {
        -nu * self.heat_capacity_a() * self.r1 * self.r1 / self.lambda_a
    }

    /// `nu = -lambda_a (mu^2 + xi^2) / (c_a rho_a r1^2)`.
    pub fn decay_rate(&self, mu: f64, xi2: f64) -> f64 {
        -self.lambda_a * (mu * mu + xi2) / (self.heat_capacity_a() * self.r1 * self.r1)
    }

    /// Effective control produced by the input voltage `u0`.
    pub fn dead_zone(&self, u0: f64) -> f64 {
        if u0 < self.u_minus {
            u0 - self.u_minus
        } else if u0 > self.u_plus {
            u0 - self.u_plus
        } else {
            0.0
        }
    }

    /// Right inverse of [`dead_zone`](Self::dead_zone); zero maps to zero.
    pub fn inverse_dead_zone(&self, u: f64) -> f64 {
        if u < 0.0 {
            u + self.u_minus
        } else if u > 0.0 {
            u + self.u_plus
        } else {
            0.0
        }
    }

    /// Total voltage `u0 + S [theta]` including the feedback-linearizing part.
    pub fn total_voltage(&self, u0: f64, jump: f64) -> f64 {
        u0 + self.seebeck * jump
    }
}

/// A control that is constant on each interval `[t_i, t_{i+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseControl {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseControl {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidControl("at least one piece required".into()));
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidControl(format!(
                "{} breakpoints for {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidControl("first breakpoint must be 0".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidControl(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidControl("control values must be finite".into()));
        }
        Ok(Self { breakpoints, values })
    }

    /// `values.len()` equal pieces on `[0, horizon]`.
    pub fn uniform(horizon: f64, values: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidControl("horizon must be positive".into()));
        }
        let n = values.len().max(1);
        let mut breakpoints: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
        breakpoints[n] = horizon;
        Self::new(breakpoints, values)
    }

    pub fn constant(horizon: f64, u: f64) -> Result<Self> {
        Self::uniform(horizon, vec![u])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_pieces(&self) -> usize {
        self.values.len()
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().expect("non-empty")
    }

    /// `(t_start, t_end, u)` for each piece.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &u)| (w[0], w[1], u))
    }

    /// Value active at time `t`; the last piece is closed on the right.
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.breakpoints[1..].partition_point(|&b| b <= t);
        self.values[idx.min(self.values.len() - 1)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Same breakpoints, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.breakpoints.clone(), values)
    }
}
