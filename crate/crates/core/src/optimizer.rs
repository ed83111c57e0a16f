//! Gradient descent over piecewise-constant controls and the decreasing-horizon sweep.

use crate::dynamics::ReducedModel;
use crate::exec::{self, ExecMode};
use crate::model::PiecewiseControl;
use crate::objective::{total_cost, CostBreakdown, CostConfig};
use crate::spectral::ModalState;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DescentConfig {
    pub n_pieces: usize,
    /// Initial step scale.
    pub step: f64,
    /// Forward-difference increment, V.
    pub fd_step: f64,
    pub max_iters: usize,
    /// Stop once an accepted step lowers `F` by less than this fraction.
    pub rel_tol: f64,
    /// Starting values; all zeros when empty.
    pub init_control: Vec<f64>,
    pub exec: ExecMode,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            n_pieces: 5,
            step: 1e-2,
            fd_step: 1e-4,
            max_iters: 500,
            rel_tol: 1e-8,
            init_control: Vec::new(),
            exec: ExecMode::default(),
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pieces == 0 {
            return Err(Error::InvalidParameter("n_pieces must be >= 1".into()));
        }
        if !(self.step > 0.0) || !(self.fd_step > 0.0) {
            return Err(Error::InvalidParameter("step and fd_step must be > 0".into()));
        }
        if !self.init_control.is_empty() && self.init_control.len() != self.n_pieces {
            return Err(Error::InvalidParameter(format!(
                "init_control has {} values for {} pieces",
                self.init_control.len(),
                self.n_pieces
            )));
        }
        Ok(())
    }

    fn start(&self) -> Vec<f64> {
        if self.init_control.is_empty() {
            vec![0.0; self.n_pieces]
        } else {
            self.init_control.clone()
        }
    }
}

/// Everything a cost evaluation needs besides the control values.
pub struct Problem<'a> {
    pub model: &'a ReducedModel,
    pub init: &'a ModalState,
    pub cost: &'a CostConfig,
}

impl Problem<'_> {
    pub fn evaluate(&self, control: &PiecewiseControl) -> Result<CostBreakdown> {
        total_cost(control, self.init, self.cost, self.model)
    }
}

/// Forward-difference gradient `(F(u + delta e_l) - F(u)) / delta`.
///
/// The base point and the perturbed points are evaluated through [`exec::map`].
pub fn grad_fd(control: &PiecewiseControl, problem: &Problem<'_>, fd_step: f64, mode: ExecMode) -> Result<Vec<f64>> {
    let n = control.n_pieces();
    let idx: Vec<Option<usize>> = std::iter::once(None).chain((0..n).map(Some)).collect();
    let vals = exec::map(mode, &idx, |k| {
        let c = match k {
            None => control.clone(),
            Some(l) => {
                let mut v = control.values().to_vec();
                v[*l] += fd_step;
                control.with_values(v)?
            }
        };
        problem.evaluate(&c).map(|b| b.f)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(vals[1..].iter().map(|f| (f - vals[0]) / fd_step).collect())
}

/// Central-difference gradient, used to cross-check [`grad_fd`].
pub fn grad_central(control: &PiecewiseControl, problem: &Problem<'_>, h: f64, mode: ExecMode) -> Result<Vec<f64>> {
    let n = control.n_pieces();
    let idx: Vec<(usize, f64)> = (0..n).flat_map(|l| [(l, h), (l, -h)]).collect();
    let vals = exec::map(mode, &idx, |&(l, s)| {
        let mut v = control.values().to_vec();
        v[l] += s;
        problem.evaluate(&control.with_values(v)?).map(|b| b.f)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(vals.chunks(2).map(|w| (w[0] - w[1]) / (2.0 * h)).collect())
}

#[derive(Debug, Clone)]
pub struct DescentResult {
    pub control: PiecewiseControl,
    pub cost: CostBreakdown,
    pub iters: usize,
    /// Accepted `F` values, starting with the initial point.
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Minimizes `F` over the control values for a fixed horizon.
///
/// Steps along `-grad F` with an adaptive scale: halved (up to 30 times) until
/// `F` decreases, doubled after each accepted step.
pub fn descend(horizon: f64, problem: &Problem<'_>, cfg: &DescentConfig) -> Result<DescentResult> {
    cfg.validate()?;
    let mut control = PiecewiseControl::uniform(horizon, cfg.start())?;
    let mut best = problem.evaluate(&control)?;
    let mut history = vec![best.f];
    let mut step = cfg.step;
    let mut converged = false;
    let mut iters = 0;

    while iters < cfg.max_iters {
        let g = grad_fd(&control, problem, cfg.fd_step, cfg.exec)?;
        if g.iter().all(|&x| x == 0.0) {
            converged = true;
            break;
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("gradient {g:?}")));
        }
        iters += 1;
        let mut accepted = None;
        for _ in 0..=30 {
            let cand: Vec<f64> = control.values().iter().zip(&g).map(|(u, d)| u - step * d).collect();
            if cand.iter().all(|v| v.is_finite()) {
                let cand = control.with_values(cand)?;
                if let Ok(c) = problem.evaluate(&cand) {
                    if c.f < best.f {
                        accepted = Some((cand, c));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some((cand, cost)) = accepted else {
            converged = true;
            break;
        };
        let gain = (best.f - cost.f) / best.f;
        control = cand;
        best = cost;
        history.push(best.f);
        if gain < cfg.rel_tol {
            converged = true;
            break;
        }
        step *= 2.0;
    }
    Ok(DescentResult { control, cost: best, iters, history, converged })
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub horizon: f64,
    pub control: PiecewiseControl,
    pub cost: CostBreakdown,
    pub iters: usize,
    pub admissible: bool,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    /// Smallest admissible horizon.
    pub t_min: Option<f64>,
}

impl SweepResult {
    pub fn t_min(&self) -> Result<f64> {
        self.t_min.ok_or(Error::NoAdmissibleHorizon)
    }

    pub fn best(&self) -> Option<&SweepEntry> {
        let t = self.t_min?;
        self.entries.iter().find(|e| e.horizon == t)
    }
}

/// Relative slack on `max |u| <= u_st` in the admissibility test.
pub const BOUND_MARGIN: f64 = 1e-2;

pub fn is_admissible(cost: &CostBreakdown, u_st: f64, eps_terminal: f64) -> bool {
    cost.max_abs_u <= u_st * (1.0 + BOUND_MARGIN) && cost.terminal_ratio <= eps_terminal
}

/// Decreasing horizons `T_j = T0 - j dT`, each descent warm-started from the
/// previous optimum. Stops at the first inadmissible horizon after an
/// admissible one, or once `T_j <= dT`.
#[allow(non_snake_case)]
pub fn sweep_Tmin(
    t0: f64,
    dt: f64,
    eps_terminal: f64,
    problem: &Problem<'_>,
    cfg: &DescentConfig,
) -> Result<SweepResult> {
    if !(dt > 0.0) || !(t0 > dt) {
        return Err(Error::InvalidParameter(format!("sweep needs T0 > dT > 0, got T0 = {t0}, dT = {dt}")));
    }
    let mut cfg = cfg.clone();
    let mut entries = Vec::new();
    let mut t_min = None;
    let mut j = 0;
    loop {
        let horizon = t0 - j as f64 * dt;
        if horizon <= dt {
            break;
        }
        let res = descend(horizon, problem, &cfg)?;
        let admissible = is_admissible(&res.cost, problem.cost.u_st, eps_terminal);
        cfg.init_control = res.control.values().to_vec();
        entries.push(SweepEntry { horizon, control: res.control, cost: res.cost, iters: res.iters, admissible });
        if admissible {
            t_min = Some(horizon);
        } else if t_min.is_some() {
            break;
        }
        j += 1;
    }
    Ok(SweepResult { entries, t_min })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DEFAULT_MODES;
    use crate::model::SystemParams;
    use std::sync::OnceLock;

    struct Setup {
        model: ReducedModel,
        init: ModalState,
        cost: CostConfig,
    }

    fn setup() -> &'static Setup {
        static S: OnceLock<Setup> = OnceLock::new();
        S.get_or_init(|| {
            let model = ReducedModel::new(SystemParams::default(), DEFAULT_MODES).unwrap();
            let u_st = model.find_ust(5.5).unwrap();
            let (init, _) = model.initial_state(u_st, 0.0).unwrap();
            let cost = CostConfig::for_model(5.0, u_st, 5.5, &model).unwrap();
            Setup { model, init, cost }
        })
    }

    fn problem(s: &Setup) -> Problem<'_> {
        Problem { model: &s.model, init: &s.init, cost: &s.cost }
    }

    #[test]
    fn gradient_vanishes_in_the_stationary_region() {
        let s = setup();
        let zero = ModalState::zero(s.model.basis(0.0).unwrap());
        let cost = s.cost.with_gamma(0.0);
        let pr = Problem { model: &s.model, init: &zero, cost: &cost };
        let control = PiecewiseControl::uniform(20_000.0, vec![0.0; 5]).unwrap();
        let d = 1e-4;
        let g = grad_fd(&control, &pr, d, ExecMode::Sequential).unwrap();
        // early pieces no longer reach the terminal state
        assert!(g[..4].iter().all(|x| x.abs() < 1e-6), "{g:?}");
        // the last one sees only the forward-difference bias d F'' / 2 of a minimum
        let f = |u: f64| pr.evaluate(&control.with_values(vec![0.0, 0.0, 0.0, 0.0, u]).unwrap()).unwrap().f;
        let curvature = (f(2.0 * d) - 2.0 * f(d) + f(0.0)) / (d * d);
        assert!((g[4] - 0.5 * d * curvature).abs() < 1e-2 * g[4].abs(), "{} vs {}", g[4], 0.5 * d * curvature);
        let c = grad_central(&control, &pr, d, ExecMode::Sequential).unwrap();
        // central differences cancel the bias up to the O(d^2) Joule asymmetry
        assert!(c.iter().all(|x| x.abs() < 1e-3 * g[4].abs()), "{c:?}");
    }

    #[test]
    fn forward_and_central_differences_agree() {
        let s = setup();
        let pr = problem(s);
        let control = PiecewiseControl::constant(1020.0, -0.6).unwrap();
        let g = grad_fd(&control, &pr, 1e-4, ExecMode::Parallel).unwrap();
        let c = grad_central(&control, &pr, 0.5e-4, ExecMode::Parallel).unwrap();
        assert!(((g[0] - c[0]) / c[0]).abs() < 1e-4, "{g:?} vs {c:?}");
    }

    #[test]
    fn penalty_dominates_far_outside_the_band() {
        let s = setup();
        let pr = problem(s);
        let u = 2.0 * s.cost.u_st;
        let control = PiecewiseControl::uniform(1020.0, vec![u, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let g = grad_fd(&control, &pr, 1e-4, ExecMode::Parallel).unwrap();
        assert!(g[0] > 0.0);
        assert!(g[1..].iter().all(|x| g[0] > 1e3 * x.abs()), "{g:?}");
    }

    #[test]
    fn parallel_and_sequential_gradients_are_identical() {
        let s = setup();
        let pr = problem(s);
        let control = PiecewiseControl::uniform(900.0, vec![-1.0, -0.5, 0.3, 0.0, 0.9]).unwrap();
        let a = grad_fd(&control, &pr, 1e-4, ExecMode::Parallel).unwrap();
        let b = grad_fd(&control, &pr, 1e-4, ExecMode::Sequential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn descent_is_monotone_and_restarts_at_its_optimum() {
        let s = setup();
        let pr = problem(s);
        let cfg = DescentConfig { max_iters: 60, ..DescentConfig::default() };
        let res = descend(1200.0, &pr, &cfg).unwrap();
        assert!(res.history.windows(2).all(|w| w[1] < w[0]));
        assert!(res.control.values().iter().all(|v| v.is_finite()));
        assert!(res.history.len() <= res.iters + 1);
        let again = descend(
            1200.0,
            &pr,
            &DescentConfig { init_control: res.control.values().to_vec(), max_iters: 60, ..cfg.clone() },
        )
        .unwrap();
        assert!(again.cost.f <= res.cost.f);
        let rerun = descend(1200.0, &pr, &cfg).unwrap();
        assert_eq!(rerun.control.values(), res.control.values());
    }

    #[test]
    fn converged_start_returns_quickly() {
        let s = setup();
        let pr = problem(s);
        let first = descend(1020.0, &pr, &DescentConfig::default()).unwrap();
        assert!(first.converged && first.iters < 500);
        let cfg = DescentConfig { init_control: first.control.values().to_vec(), ..DescentConfig::default() };
        let again = descend(1020.0, &pr, &cfg).unwrap();
        assert!(again.iters <= 3, "{} iterations", again.iters);
    }

    #[test]
    fn vacuous_tolerance_admits_every_horizon() {
        let s = setup();
        let pr = problem(s);
        let cfg = DescentConfig { max_iters: 0, ..DescentConfig::default() };
        let res = sweep_Tmin(100.0, 20.0, 1.0, &pr, &cfg).unwrap();
        assert_eq!(res.entries.len(), 4);
        assert!(res.entries.iter().all(|e| e.admissible));
        assert_eq!(res.t_min, Some(40.0));
        assert!(sweep_Tmin(10.0, 20.0, 1.0, &pr, &cfg).is_err());
    }

    #[test]
    fn unreachable_tolerance_reports_no_horizon() {
        let s = setup();
        let pr = problem(s);
        let cfg = DescentConfig { max_iters: 0, ..DescentConfig::default() };
        let res = sweep_Tmin(100.0, 30.0, 1e-9, &pr, &cfg).unwrap();
        assert!(res.t_min.is_none());
        assert!(matches!(res.t_min(), Err(Error::NoAdmissibleHorizon)));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = DescentConfig { n_pieces: 0, ..DescentConfig::default() };
        assert!(bad.validate().is_err());
        let bad = DescentConfig { init_control: vec![0.0; 3], ..DescentConfig::default() };
        assert!(bad.validate().is_err());
    }
}
