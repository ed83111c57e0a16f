//! Cost functional `F = 10^gamma F_d + F_p`.
//!
//! `F_d` is the squared terminal norm over the controlled cylinder scaled by
//! `|V1| theta_av^2`; `F_p` integrates an exponential penalty that is negligible
//! inside the admissible band and steep outside it.

use crate::dynamics::{ReducedModel, Trajectory};
use crate::model::{PiecewiseControl, SystemParams};
use crate::spectral::{ModalState, RadialFactors};
use crate::{Error, Result};

/// `c2 u_st^2` of the default penalty.
pub const DEFAULT_CURVATURE: f64 = 300.0;
/// `f(u_st) / u_st^2` of the default penalty.
pub const DEFAULT_WALL: f64 = 20.0;
/// Exponent beyond which the penalty continues linearly in `c2 u^2`.
const EXP_CAP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostConfig {
    pub gamma: f64,
    /// V^2.
    pub c1: f64,
    /// 1/V^2.
    pub c2: f64,
    /// Constraint bound, V.
    pub u_st: f64,
    /// Dead band of the penalty checks, V.
    pub eps_band: f64,
    /// Reference average temperature, K.
    pub theta_av: f64,
    /// `2 pi int r J_0^2 dr / (|V1| theta_av^2)`, multiplies `int_{z0}^{z1} psi^2 dz`.
    pub c_theta: f64,
    /// `1 / (rho_a c_a R |V1| theta_av)`, 1/(V^2 s).
    pub c_u: f64,
}

impl CostConfig {
    /// Default penalty constants for the bound `u_st`: `c2 = 300 / u_st^2` and `c1`
    /// such that `f(u_st) = 20 u_st^2`.
    pub fn new(gamma: f64, u_st: f64, theta_av: f64, p: &SystemParams, radial: &RadialFactors) -> Result<Self> {
        let c2 = DEFAULT_CURVATURE / (u_st * u_st);
        let c1 = DEFAULT_WALL * u_st * u_st / exp_minus_linear(DEFAULT_CURVATURE);
        Self::with_penalty(gamma, u_st, theta_av, c1, c2, p, radial)
    }

    pub fn with_penalty(
        gamma: f64,
        u_st: f64,
        theta_av: f64,
        c1: f64,
        c2: f64,
        p: &SystemParams,
        radial: &RadialFactors,
    ) -> Result<Self> {
        for (name, v) in [("gamma", gamma), ("u_st", u_st), ("theta_av", theta_av), ("c1", c1), ("c2", c2)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if u_st <= 0.0 {
            return Err(Error::InvalidParameter("u_st must be > 0".into()));
        }
        if theta_av == 0.0 {
            return Err(Error::InvalidParameter("theta_av must be nonzero".into()));
        }
        if c1 <= 0.0 || c2 <= 0.0 {
            return Err(Error::InvalidParameter("c1 and c2 must be > 0".into()));
        }
        let v1 = p.volume_cyl();
        Ok(Self {
            gamma,
            c1,
            c2,
            u_st,
            eps_band: 0.01 * u_st,
            theta_av,
            c_theta: radial.weight / (v1 * theta_av * theta_av),
            c_u: 1.0 / (p.heat_capacity_a() * p.resistance * v1 * theta_av.abs()),
        })
    }

    /// Default constants for a reduced model with `u_st` solving the steady
    /// average-temperature problem for `theta_av`.
    pub fn for_model(gamma: f64, u_st: f64, theta_av: f64, model: &ReducedModel) -> Result<Self> {
        Self::new(gamma, u_st, theta_av, model.params(), model.radial_factors())
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }
}

/// `e^x - x - 1` without cancellation for small `x`.
fn exp_minus_linear(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        x2 * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x * (1.0 / 120.0 + x / 720.0))))
    } else {
        x.exp_m1() - x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyValue {
    pub value: f64,
    /// `c2 u^2` exceeded the exponent cap.
    pub saturated: bool,
}

/// `f(u) = c1 (e^{c2 u^2} - c2 u^2 - 1)`, continued linearly in `c2 u^2` past
/// the exponent cap so it stays finite and increasing.
pub fn penalty(u: f64, cfg: &CostConfig) -> PenaltyValue {
    let x = cfg.c2 * u * u;
    if x > EXP_CAP {
        let base = cfg.c1 * exp_minus_linear(EXP_CAP);
        PenaltyValue { value: base * (1.0 + (x - EXP_CAP)), saturated: true }
    } else {
        PenaltyValue { value: cfg.c1 * exp_minus_linear(x), saturated: false }
    }
}

pub fn penalty_f(u: f64, cfg: &CostConfig) -> f64 {
    penalty(u, cfg).value
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Worst `f(u) / u^2` on the condition's range.
    pub worst_ratio: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyReport {
    pub checks: [ConditionCheck; 3],
}

impl PenaltyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Shape conditions of the penalty on a 1000-point grid over `[0, 2 u_st]`.
///
/// - `f / u^2 <= 1e-3` for `|u| <= eps`;
/// - `f / u^2 <= 0.2` for `eps <= |u| <= u_st - eps`;
/// - `f / u^2 >= 10` for `|u| >= u_st`.
pub fn validate_penalty_constants(cfg: &CostConfig) -> PenaltyReport {
    let eps = cfg.eps_band;
    let u_st = cfg.u_st;
    let mut grid: Vec<f64> = (1..=1000).map(|i| 2.0 * u_st * i as f64 / 1000.0).collect();
    grid.extend([eps, u_st - eps, u_st]);
    let ratio = |u: f64| penalty_f(u, cfg) / (u * u);

    let max_on = |lo: f64, hi: f64| {
        grid.iter().filter(|&&u| u >= lo && u <= hi).map(|&u| ratio(u)).fold(0.0f64, f64::max)
    };
    let small = max_on(0.0, eps);
    let band = max_on(eps, u_st - eps);
    let wall = grid.iter().filter(|&&u| u >= u_st).map(|&u| ratio(u)).fold(f64::INFINITY, f64::min);
    PenaltyReport {
        checks: [
            ConditionCheck { name: "negligible near zero", pass: small <= 1e-3, worst_ratio: small, bound: 1e-3 },
            ConditionCheck { name: "small inside the band", pass: band <= 0.2, worst_ratio: band, bound: 0.2 },
            ConditionCheck { name: "large outside the band", pass: wall >= 10.0, worst_ratio: wall, bound: 10.0 },
        ],
    }
}

/// `F_d` of a terminal state.
pub fn terminal_cost_state(state: &ModalState, cfg: &CostConfig) -> f64 {
    cfg.c_theta * state.basis.v1_axial_norm2(&state.coeffs)
}

pub fn terminal_cost(traj: &Trajectory, cfg: &CostConfig) -> f64 {
    terminal_cost_state(traj.terminal(), cfg)
}

/// `F_p = c_u sum_i f(u_i) (t_{i+1} - t_i)`.
pub fn penalty_integral(control: &PiecewiseControl, cfg: &CostConfig) -> f64 {
    cfg.c_u * control.pieces().map(|(t0, t1, u)| penalty_f(u, cfg) * (t1 - t0)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub f: f64,
    pub f_d: f64,
    pub f_p: f64,
    /// `||theta(T)|| / ||theta(0)||` over the controlled cylinder.
    pub terminal_ratio: f64,
    pub max_abs_u: f64,
    pub reexpansion_residual: f64,
    pub saturated: bool,
}

/// Evaluates `F` through the closed-form terminal solve.
pub fn total_cost(
    control: &PiecewiseControl,
    init: &ModalState,
    cfg: &CostConfig,
    model: &ReducedModel,
) -> Result<CostBreakdown> {
    let (terminal, residual) = model.terminal_state(control, init)?;
    let f_d = terminal_cost_state(&terminal, cfg);
    let f_p = penalty_integral(control, cfg);
    let f = 10f64.powf(cfg.gamma) * f_d + f_p;
    if !f.is_finite() {
        return Err(Error::NonFinite(format!("F = {f} (F_d = {f_d}, F_p = {f_p})")));
    }
    let n0 = init.v1_norm();
    Ok(CostBreakdown {
        f,
        f_d,
        f_p,
        terminal_ratio: if n0 > 0.0 { terminal.v1_norm() / n0 } else { 0.0 },
        max_abs_u: control.max_abs(),
        reexpansion_residual: residual,
        saturated: control.values().iter().any(|&u| penalty(u, cfg).saturated),
    })
}
