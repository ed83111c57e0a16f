//! End-to-end acceptance checks A1-A7. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use peltier_core::dynamics::{propagate, propagate_coeffs, ReducedModel, DEFAULT_MODES};
use peltier_core::exec::ExecMode;
use peltier_core::objective::{validate_penalty_constants, CostConfig};
use peltier_core::optimizer::{descend, grad_central, grad_fd, sweep_Tmin, DescentConfig, Problem};
use peltier_core::oracle::{compare, fd_solve, fd_steady, FieldGrid, OracleConfig, SolveOptions};
use peltier_core::spectral::{axial_basis, radial_roots, reexpand, ModalState, RadialFactors};
use peltier_core::{PiecewiseControl, SystemParams};

const THETA_AV: f64 = 5.5;
const EPS_TERMINAL: f64 = 1e-2;

struct Verdict {
    id: &'static str,
    pass: bool,
    detail: String,
}

struct Ctx {
    p: SystemParams,
    model: ReducedModel,
    u_st: f64,
    init: ModalState,
}

impl Ctx {
    fn new() -> Self {
        let p = SystemParams::default();
        let model = ReducedModel::new(p, DEFAULT_MODES).expect("model");
        let u_st = model.find_ust(THETA_AV).expect("steady voltage");
        let (init, _) = model.initial_state(u_st, 0.0).expect("initial state");
        Self { p, model, u_st, init }
    }

    fn cost(&self, gamma: f64) -> CostConfig {
        CostConfig::for_model(gamma, self.u_st, THETA_AV, &self.model).expect("cost")
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> (bool, String)) -> (bool, String) {
    let t = Instant::now();
    let (ok, detail) = f();
    let el = t.elapsed();
    let in_time = el <= limit;
    let mut detail = format!("{detail}; runtime {:.1} s (limit {} s)", el.as_secs_f64(), limit.as_secs());
    if !in_time {
        detail.push_str(" TOO SLOW");
    }
    (ok && in_time, detail)
}

fn a1() -> (bool, String) {
    timed(Duration::from_secs(5), || {
        let model = ReducedModel::new(SystemParams::default(), DEFAULT_MODES).unwrap();
        let u = model.find_ust(THETA_AV).unwrap();
        ((u - 1.44).abs() <= 0.05, format!("u_st = {u:.4} V, expected 1.44 +- 0.05 V"))
    })
}

fn a2(c: &Ctx) -> (bool, String) {
    timed(Duration::from_secs(5), || {
        let radial = radial_roots(0, 2, &c.p).unwrap();
        let mut ok = true;
        let mut parts = Vec::new();
        for u in [0.0, c.u_st] {
            let b = axial_basis(u, &c.p, 6, radial[0]).unwrap();
            let taus: Vec<f64> = b.modes.iter().map(|m| m.tau()).collect();
            let slow = taus.iter().filter(|t| **t >= 10.0).count();
            let family = axial_basis(u, &c.p, 1, radial[1]).unwrap().modes[0].tau();
            ok &= slow == 4 && taus[3] >= 10.0 && taus[4] <= 5.0 && family <= 5.0;
            parts.push(format!(
                "u = {u:.3}: tau = [{}] s, modes >= 10 s: {slow}, slowest m=1 tau = {family:.3e} s",
                taus.iter().map(|t| format!("{t:.4}")).collect::<Vec<_>>().join(", ")
            ));
        }
        (ok, parts.join("; "))
    })
}

fn synthesized(c: &Ctx, state: &ModalState, cfg: &OracleConfig) -> FieldGrid {
    let radial = state.basis.radial;
    let p = c.p;
    FieldGrid::separable(&p, cfg, |r| RadialFactors::profile(&radial, &p, r), |z| state.basis.axial_value(&state.coeffs, z))
        .unwrap()
}

fn a3(c: &Ctx) -> (bool, String) {
    timed(Duration::from_secs(180), || {
        let cfg = OracleConfig::default();
        let opts = SolveOptions { sample_dt: 1.0, snapshot_every: 10 };
        let control = PiecewiseControl::constant(600.0, c.u_st).unwrap();
        let zero = ModalState::zero(c.model.basis(c.u_st).unwrap());
        let spec = c.model.simulate(&control, &zero, 1.0).unwrap();
        let fd = fd_solve(&control, &FieldGrid::zeros(&c.p, &cfg).unwrap(), &c.p, &cfg, opts).unwrap();
        let field_err = compare(&spec, &fd).unwrap().max_field_error_after(60.0);

        let cost = c.cost(5.0);
        let problem = Problem { model: &c.model, init: &c.init, cost: &cost };
        let opt = descend(1020.0, &problem, &DescentConfig::default()).unwrap();
        let spec = c.model.simulate(&opt.control, &c.init, 1.0).unwrap();
        let start = synthesized(c, &c.init, &cfg);
        let fd = fd_solve(&opt.control, &start, &c.p, &cfg, SolveOptions { sample_dt: 1.0, snapshot_every: 0 }).unwrap();
        let (ns, nf) = (*spec.norm_v1.last().unwrap(), fd.terminal_norm());
        let terminal = (ns - nf).abs() / nf;
        (
            field_err <= 3e-2 && terminal <= 5e-2,
            format!("max field error t >= 60 s = {field_err:.4e} (<= 3e-2); terminal norm difference = {terminal:.4e} (<= 5e-2)"),
        )
    })
}

fn a4(c: &Ctx) -> (bool, String) {
    timed(Duration::from_secs(1), || {
        let control = PiecewiseControl::constant(3000.0, 0.0).unwrap();
        let traj = c.model.simulate(&control, &c.init, 1.0).unwrap();
        let basis = c.model.basis(0.0).unwrap();
        let (start, _) = reexpand(&c.init, &basis);
        let n0 = start.v1_norm();
        let rel = traj.norm_relative_initial();
        let mut worst = 0.0f64;
        for (t, r) in traj.times.iter().zip(&rel) {
            let coeffs: Vec<f64> = start.coeffs.iter().zip(basis.rates()).map(|(a, nu)| a * (nu * t).exp()).collect();
            let exact = ModalState::new(coeffs, basis.clone(), *t).unwrap().v1_norm() / n0;
            worst = worst.max((r - exact).abs());
        }
        (worst <= 1e-10, format!("max |ratio - closed form| = {worst:.3e} over {} samples (<= 1e-10)", rel.len()))
    })
}

fn a5(c: &Ctx) -> (bool, String) {
    timed(Duration::from_secs(600), || {
        let cost = c.cost(5.0);
        let problem = Problem { model: &c.model, init: &c.init, cost: &cost };
        let opt = descend(1020.0, &problem, &DescentConfig::default()).unwrap();
        let natural = problem.evaluate(&PiecewiseControl::constant(1020.0, 0.0).unwrap()).unwrap().terminal_ratio;
        let r = opt.cost.terminal_ratio;
        let bound = opt.cost.max_abs_u / c.u_st;
        (
            bound <= 1.01 && r <= 2e-2 && natural / r >= 10.0,
            format!(
                "max|u|/u_st = {bound:.4} (<= 1.01), terminal ratio = {r:.4e} (<= 2e-2), natural/active = {:.1} (>= 10), iters = {}",
                natural / r,
                opt.iters
            ),
        )
    })
}

fn a6(c: &Ctx) -> (bool, String) {
    timed(Duration::from_secs(45 * 60), || {
        let mut parts = Vec::new();
        let mut tmins = Vec::new();
        for gamma in [5.0, 3.0] {
            let cost = c.cost(gamma);
            let problem = Problem { model: &c.model, init: &c.init, cost: &cost };
            let res = sweep_Tmin(1500.0, 12.0, EPS_TERMINAL, &problem, &DescentConfig::default()).unwrap();
            let last = res.entries.last().map(|e| (e.horizon, e.cost.terminal_ratio));
            parts.push(format!(
                "gamma = {gamma}: T_min = {:?} s over {} horizons, last tried {:?}",
                res.t_min,
                res.entries.len(),
                last
            ));
            tmins.push(res.t_min);
        }
        let ok5 = tmins[0].is_some_and(|t| (960.0..=1140.0).contains(&t));
        let ok3 = tmins[1].is_some_and(|t| t < 1000.0);
        (ok5 && ok3, format!("{} (gamma 5 in [960, 1140]: {ok5}; gamma 3 < 1000: {ok3})", parts.join("; ")))
    })
}

fn a7(c: &Ctx) -> (bool, String) {
    let mut fails = Vec::new();
    let mut note = |name: &str, ok: bool, limit: Duration, el: Duration| {
        if !ok || el > limit {
            fails.push(format!("{name} ({:.1} s)", el.as_secs_f64()));
        }
    };
    let minute = Duration::from_secs(60);
    let p = c.p;

    let t = Instant::now();
    let mut ok = true;
    for i in 0..=2000 {
        let u = -3.0 + 6.0 * i as f64 / 2000.0;
        let back = p.dead_zone(p.inverse_dead_zone(u));
        ok &= (back - u).abs() <= 4.0 * f64::EPSILON * (u.abs() + p.u_plus.abs().max(p.u_minus.abs()));
        let v = u + 1e-3;
        ok &= (p.dead_zone(v) - p.dead_zone(u)).abs() <= (v - u) * (1.0 + 1e-12);
    }
    note("dead zone", ok, minute, t.elapsed());

    let t = Instant::now();
    let mut worst = 0.0f64;
    for u in [-1.5, 0.0, 0.8, c.u_st] {
        let b = c.model.basis(u).unwrap();
        for i in 0..b.len() {
            for j in 0..b.len() {
                let g = b.weighted_overlap(i, &b, j);
                worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    note("orthogonality", worst < 1e-8, minute, t.elapsed());

    let t = Instant::now();
    let mut ok = true;
    for u in [-1.6, -0.5, 0.9, c.u_st] {
        let piece = c.model.piece(u).unwrap();
        let rates: Vec<f64> = piece.basis.rates().collect();
        for dt in [1.0, 1e2, 1e4] {
            let next = propagate_coeffs(&piece.theta_ss, &rates, &piece.forcing, dt);
            ok &= next.iter().zip(&piece.theta_ss).all(|(a, b)| (a - b).abs() <= 1e-10 * b.abs().max(1e-3));
        }
        let s0 = ModalState::new(vec![0.3, -0.2, 0.1, 0.05], piece.basis.clone(), 0.0).unwrap();
        let two = propagate(&propagate(&s0, 37.0, &piece.forcing), 63.0, &piece.forcing);
        let one = propagate(&s0, 100.0, &piece.forcing);
        ok &= two.coeffs.iter().zip(&one.coeffs).all(|(a, b)| (a - b).abs() <= 1e-10 * b.abs().max(1.0));
    }
    note("fixed point and semigroup", ok, minute, t.elapsed());

    let t = Instant::now();
    let cost = c.cost(5.0);
    let problem = Problem { model: &c.model, init: &c.init, cost: &cost };
    let control = PiecewiseControl::uniform(1020.0, vec![-0.6; 5]).unwrap();
    let fwd = grad_fd(&control, &problem, 1e-4, ExecMode::Parallel).unwrap();
    let cen = grad_central(&control, &problem, 0.5e-4, ExecMode::Parallel).unwrap();
    let rel = fwd.iter().zip(&cen).map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);
    note("forward vs central gradient", rel <= 1e-4, minute, t.elapsed());

    let t = Instant::now();
    note("penalty conditions", validate_penalty_constants(&cost).all_pass(), minute, t.elapsed());

    let t = Instant::now();
    let short = DescentConfig { max_iters: 60, ..DescentConfig::default() };
    let res = descend(1020.0, &problem, &short).unwrap();
    let monotone = res.history.windows(2).all(|w| w[1] <= w[0]);
    note("descent monotone", monotone, minute, t.elapsed());

    let t = Instant::now();
    let cfg = OracleConfig::default();
    let start = fd_steady(c.u_st, &p, &cfg).unwrap();
    let pump = PiecewiseControl::constant(200.0, -c.u_st).unwrap();
    let tr = fd_solve(&pump, &start, &p, &cfg, SolveOptions { sample_dt: 10.0, snapshot_every: 0 }).unwrap();
    let ok = tr.theta_av_v1.windows(2).all(|w| w[1] < w[0]) && tr.theta_av_v2.windows(2).all(|w| w[1] > w[0]);
    note("heat pumping", ok, minute, t.elapsed());

    if fails.is_empty() {
        (true, "all 7 property suites pass, each under 60 s".into())
    } else {
        (false, format!("failing: {}", fails.join(", ")))
    }
}

fn main() -> ExitCode {
    let ctx = Ctx::new();
    let checks: Vec<(&'static str, Box<dyn Fn(&Ctx) -> (bool, String)>)> = vec![
        ("A1", Box::new(|_| a1())),
        ("A2", Box::new(a2)),
        ("A3", Box::new(a3)),
        ("A4", Box::new(a4)),
        ("A5", Box::new(a5)),
        ("A6", Box::new(a6)),
        ("A7", Box::new(a7)),
    ];
    let mut verdicts = Vec::new();
    for (id, f) in checks {
        let (pass, detail) = f(&ctx);
        let v = Verdict { id, pass, detail };
        println!("{} {}: {}", v.id, if v.pass { "PASS" } else { "FAIL" }, v.detail);
        verdicts.push(v);
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("acceptance: {} of {} criteria pass", verdicts.len() - failed, verdicts.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
