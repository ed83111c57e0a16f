use anyhow::{anyhow, bail, Context};
use peltier_core::dynamics::{ReducedModel, Trajectory};
use peltier_core::exec::{self, ExecMode};
use peltier_core::objective::{penalty_f, validate_penalty_constants, CostConfig};
use peltier_core::optimizer::{descend, is_admissible, sweep_Tmin, DescentResult, Problem, SweepResult};
use peltier_core::oracle::{compare, fd_solve, FieldGrid, SolveOptions};
use peltier_core::spectral::{axial_basis, radial_roots, ModalState, RadialFactors};
use peltier_core::{Error, PiecewiseControl, SystemParams};

use crate::config::{InitialState, RunConfig};
use crate::output::{fmt_f, Cell, OutDir, Table};

const TRAJ_UNITS: &str = "t s; u, u0, U_total V; norm_V1_rel_initial 1; theta_av_V1 K; face_jump K";
const TRAJ_HEADER: [&str; 7] = ["t", "u", "u0", "U_total", "norm_V1_rel_initial", "theta_av_V1", "face_jump"];

/// Model, steady voltage and initial state shared by most scenarios.
pub struct Setup {
    pub cfg: RunConfig,
    pub model: ReducedModel,
    pub u_st: f64,
    pub init: ModalState,
}

impl Setup {
    pub fn new(cfg: RunConfig) -> anyhow::Result<Self> {
        let model = ReducedModel::new(cfg.system, cfg.reduction.modes)?;
        let u_st = model.find_ust(cfg.cost.theta_av)?;
        let (init, _) = model.initial_state(u_st, 0.0)?;
        Ok(Self { cfg, model, u_st, init })
    }

    fn p(&self) -> &SystemParams {
        self.model.params()
    }

    fn cost(&self, gamma: f64) -> anyhow::Result<CostConfig> {
        let c = &self.cfg.cost;
        let cost = match (c.c1, c.c2) {
            (Some(c1), Some(c2)) => {
                CostConfig::with_penalty(gamma, self.u_st, c.theta_av, c1, c2, self.p(), self.model.radial_factors())?
            }
            _ => CostConfig::for_model(gamma, self.u_st, c.theta_av, &self.model)?,
        };
        Ok(cost)
    }

    fn exec(&self) -> ExecMode {
        self.cfg.descent.to_core().exec
    }

    fn natural(&self, horizon: f64) -> anyhow::Result<Trajectory> {
        let zero = PiecewiseControl::constant(horizon, 0.0)?;
        Ok(self.model.simulate(&zero, &self.init, self.cfg.reduction.sample_dt)?)
    }

    fn natural_ratio(&self, horizon: f64) -> anyhow::Result<f64> {
        let zero = PiecewiseControl::constant(horizon, 0.0)?;
        let (end, _) = self.model.terminal_state(&zero, &self.init)?;
        Ok(end.v1_norm() / self.init.v1_norm())
    }

    fn optimize(&self, gamma: f64, horizon: f64) -> anyhow::Result<DescentResult> {
        let cost = self.cost(gamma)?;
        let problem = Problem { model: &self.model, init: &self.init, cost: &cost };
        Ok(descend(horizon, &problem, &self.cfg.descent.to_core())?)
    }

    fn sweep(&self, gamma: f64) -> anyhow::Result<SweepResult> {
        let cost = self.cost(gamma)?;
        let problem = Problem { model: &self.model, init: &self.init, cost: &cost };
        let s = &self.cfg.sweep;
        Ok(sweep_Tmin(s.t_start, s.dt, s.eps_terminal, &problem, &self.cfg.descent.to_core())?)
    }

    fn axis_points(&self) -> Vec<f64> {
        let p = self.p();
        let n = self.cfg.figs.profile_points;
        (0..n).map(|i| -p.z1 + 2.0 * p.z1 * i as f64 / (n - 1) as f64).collect()
    }
}

fn trajectory_table(name: &str, traj: &Trajectory, p: &SystemParams) -> Table {
    let mut t = Table::new(name, TRAJ_UNITS, &TRAJ_HEADER);
    let rel = traj.norm_relative_initial();
    let u0 = traj.input_voltage(p);
    let total = traj.total_voltage(p);
    for k in 0..traj.len() {
        t.push(vec![
            traj.times[k].into(),
            traj.control[k].into(),
            u0[k].into(),
            total[k].into(),
            rel[k].into(),
            traj.theta_av_v1[k].into(),
            traj.face_jump[k].into(),
        ]);
    }
    t
}

fn control_table(name: &str, control: &PiecewiseControl, p: &SystemParams) -> Table {
    let mut t = Table::new(name, "t_i s (piece start); u_i, u0_i V", &["t_i", "u_i", "u0_i"]);
    for (t0, _, u) in control.pieces() {
        t.push(vec![t0.into(), u.into(), p.inverse_dead_zone(u).into()]);
    }
    t
}

/// Samples `state` on an `nr x nz` grid over the whole rod.
fn field_rows(t: &mut Table, lead: &[Cell], time: f64, state: &ModalState, p: &SystemParams, nr: usize, nz: usize) {
    let basis = &state.basis;
    for j in 0..nz {
        let z = -p.z1 + 2.0 * p.z1 * j as f64 / (nz - 1) as f64;
        let axial = basis.axial_value(&state.coeffs, z);
        for i in 0..nr {
            let r = p.r1 * i as f64 / (nr - 1) as f64;
            let mut row = lead.to_vec();
            row.extend([time.into(), r.into(), z.into(), (RadialFactors::profile(&basis.radial, p, r) * axial).into()]);
            t.push(row);
        }
    }
}

pub fn spectrum(cfg: RunConfig, out: &mut OutDir) -> anyhow::Result<()> {
    let p = cfg.system;
    let s = &cfg.spectrum;
    let mut radial = Table::new("radial_roots", "mu dimensionless", &["n", "m", "mu"]);
    let families: Vec<_> = [0u32, 1]
        .iter()
        .map(|&n| radial_roots(n, s.radial_roots, &p))
        .collect::<Result<_, _>>()?;
    for fam in &families {
        for r in fam {
            radial.push(vec![(r.n as usize).into(), (r.m as usize).into(), r.mu.into()]);
        }
    }
    out.write(&radial)?;

    let us: Vec<f64> = if s.points == 1 {
        vec![s.u_min]
    } else {
        (0..s.points).map(|i| s.u_min + (s.u_max - s.u_min) * i as f64 / (s.points - 1) as f64).collect()
    };
    let exec = cfg.descent.to_core().exec;
    let mut table = Table::new(
        "spectrum",
        "u V; k index; xi2 1 (signed); nu 1/s; tau s; norm_check 1 (weighted self-overlap)",
        &["u", "k", "xi2", "nu", "tau", "norm_check"],
    );
    let mut higher = Table::new(
        "spectrum_radial_m1",
        "u V; k index; xi2 1; nu 1/s; tau s (second radial family n = 0, m = 1)",
        &["u", "k", "xi2", "nu", "tau"],
    );
    let fundamental = families[0][0];
    let second = families[0].get(1).copied();
    let bases = exec::map(exec, &us, |&u| {
        let main = axial_basis(u, &p, s.modes, fundamental)?;
        let extra = match second {
            Some(r) => Some(axial_basis(u, &p, s.modes, r)?),
            None => None,
        };
        Ok::<_, Error>((main, extra))
    });
    for (&u, b) in us.iter().zip(bases) {
        let (main, extra) = b.with_context(|| format!("axial spectrum at u = {u}"))?;
        for (k, m) in main.modes.iter().enumerate() {
            let check = main.weighted_overlap(k, &main, k);
            table.push(vec![u.into(), k.into(), m.xi2.into(), m.nu.into(), m.tau().into(), check.into()]);
        }
        if let Some(e) = extra {
            for (k, m) in e.modes.iter().enumerate() {
                higher.push(vec![u.into(), k.into(), m.xi2.into(), m.nu.into(), m.tau().into()]);
            }
        }
    }
    out.write(&table)?;
    if second.is_some() {
        out.write(&higher)?;
    }
    println!("mu_00 = {}", fmt_f(fundamental.mu));
    Ok(())
}

pub fn steady(setup: &Setup, out: &mut OutDir) -> anyhow::Result<()> {
    let p = setup.p();
    let prof = setup.model.steady_profile(setup.u_st)?;
    let avg = prof.v1_average(p);
    let jump = prof.radial_factors.mean * (prof.psi.value(p.z0) - prof.psi.value(-p.z0));
    let mut summary = Table::new(
        "steady",
        "u_st V; theta_av_V1 K; face_jump K; norm_V1 K m^1.5; modal_norm2_ratio 1 (modal over exact squared V1 norm)",
        &["u_st", "theta_av_V1", "face_jump", "norm_V1", "modal_norm2_ratio"],
    );
    let modal_ratio = setup.init.v1_norm().powi(2) / prof.v1_norm2();
    summary.push(vec![setup.u_st.into(), avg.into(), jump.into(), prof.v1_norm2().sqrt().into(), modal_ratio.into()]);
    out.write(&summary)?;
    let mut axial = Table::new("steady_profile", "z m; psi K (axial factor)", &["z", "psi"]);
    for z in setup.axis_points() {
        axial.push(vec![z.into(), prof.psi.value(z).into()]);
    }
    out.write(&axial)?;
    let mut field = Table::new("steady_field", "r m; z m; theta K", &["r", "z", "theta"]);
    for z in setup.axis_points().into_iter().step_by(4) {
        for i in 0..11 {
            let r = p.r1 * i as f64 / 10.0;
            field.push(vec![r.into(), z.into(), prof.field(p, r, z).into()]);
        }
    }
    out.write(&field)?;
    println!("u_st = {} V", fmt_f(setup.u_st));
    println!("theta_av = {} K", fmt_f(avg));
    Ok(())
}

pub fn simulate(setup: &Setup, horizon: Option<f64>, out: &mut OutDir) -> anyhow::Result<()> {
    let cfg = &setup.cfg;
    let file = cfg
        .simulate
        .control_file
        .as_ref()
        .ok_or_else(|| anyhow!(Error::InvalidParameter("simulate needs simulate.control_file".into())))?;
    let (starts, values) = crate::output::read_control(&cfg.resolve(file))?;
    let horizon = horizon
        .or(cfg.simulate.horizon)
        .ok_or_else(|| anyhow!(Error::InvalidParameter("simulate needs --horizon or simulate.horizon".into())))?;
    if starts[0] != 0.0 {
        return Err(Error::InvalidControl(format!("first t_start must be 0, got {}", starts[0])).into());
    }
    let mut breaks = starts;
    breaks.push(horizon);
    let control = PiecewiseControl::new(breaks, values)?;
    let init = match cfg.simulate.initial {
        InitialState::Steady => setup.init.clone(),
        InitialState::Zero => ModalState::zero(setup.model.basis(control.values()[0])?),
    };
    let traj = setup.model.simulate(&control, &init, cfg.reduction.sample_dt)?;
    out.write(&trajectory_table("trajectory", &traj, setup.p()))?;
    let mut prof = Table::new("trajectory_profile", "z m; theta K on the axis (r = 0)", &["z", "theta_initial", "theta_terminal"]);
    let end = traj.terminal();
    for z in setup.axis_points() {
        prof.push(vec![z.into(), init.field(0.0, z).into(), end.field(0.0, z).into()]);
    }
    out.write(&prof)?;
    println!("terminal ratio = {}", fmt_f(*traj.norm_relative_initial().last().expect("samples")));
    Ok(())
}

pub fn optimize(setup: &Setup, gamma: f64, horizon: f64, out: &mut OutDir) -> anyhow::Result<()> {
    let p = setup.p();
    let res = setup.optimize(gamma, horizon)?;
    let natural = setup.natural_ratio(horizon)?;
    let admissible = is_admissible(&res.cost, setup.u_st, setup.cfg.sweep.eps_terminal);
    let mut summary = Table::new(
        "optimize_summary",
        "T s; gamma 1; F, F_d, F_p 1; terminal_ratio, natural_ratio 1; max_abs_u, u_st V",
        &["T", "gamma", "F", "F_d", "F_p", "terminal_ratio", "natural_ratio", "max_abs_u", "u_st", "iters", "converged", "admissible"],
    );
    let c = &res.cost;
    summary.push(vec![
        horizon.into(),
        gamma.into(),
        c.f.into(),
        c.f_d.into(),
        c.f_p.into(),
        c.terminal_ratio.into(),
        natural.into(),
        c.max_abs_u.into(),
        setup.u_st.into(),
        res.iters.into(),
        res.converged.into(),
        admissible.into(),
    ]);
    out.write(&summary)?;
    out.write(&control_table("optimize_control", &res.control, p))?;
    let mut hist = Table::new("optimize_history", "iter index; F 1", &["iter", "F"]);
    for (i, f) in res.history.iter().enumerate() {
        hist.push(vec![i.into(), (*f).into()]);
    }
    out.write(&hist)?;
    let traj = setup.model.simulate(&res.control, &setup.init, setup.cfg.reduction.sample_dt)?;
    out.write(&trajectory_table("optimize_trajectory", &traj, p))?;
    let nat = setup.natural(horizon)?;
    let mut prof = Table::new(
        "optimize_profile",
        "z m; theta K on the axis (r = 0) at t = 0 and t = T",
        &["z", "theta_initial", "theta_natural", "theta_optimal"],
    );
    for z in setup.axis_points() {
        prof.push(vec![
            z.into(),
            setup.init.field(0.0, z).into(),
            nat.terminal().field(0.0, z).into(),
            traj.terminal().field(0.0, z).into(),
        ]);
    }
    out.write(&prof)?;
    println!("F = {}", fmt_f(c.f));
    println!("terminal ratio = {}", fmt_f(c.terminal_ratio));
    println!("max |u| = {} V (u_st = {} V)", fmt_f(c.max_abs_u), fmt_f(setup.u_st));
    println!("admissible = {admissible}");
    Ok(())
}

fn sweep_table(name: &str, res: &SweepResult, natural: Option<&[f64]>) -> Table {
    let mut header = vec!["T", "F", "F_d", "F_p", "max_abs_u", "terminal_ratio", "admissible", "iters"];
    if natural.is_some() {
        header.extend(["natural_ratio", "ratio_vs_natural"]);
    }
    let mut t = Table::new(name, "T s; F, F_d, F_p 1; max_abs_u V; ratios 1; admissible 0/1", &header);
    for (k, e) in res.entries.iter().enumerate() {
        let c = &e.cost;
        let mut row: Vec<Cell> = vec![
            e.horizon.into(),
            c.f.into(),
            c.f_d.into(),
            c.f_p.into(),
            c.max_abs_u.into(),
            c.terminal_ratio.into(),
            e.admissible.into(),
            e.iters.into(),
        ];
        if let Some(n) = natural {
            row.extend([n[k].into(), (c.terminal_ratio / n[k]).into()]);
        }
        t.push(row);
    }
    t
}

pub fn sweep(setup: &Setup, gamma: f64, out: &mut OutDir) -> anyhow::Result<()> {
    let res = setup.sweep(gamma)?;
    out.write(&sweep_table("sweep", &res, None))?;
    let Some(best) = res.best() else {
        return Err(Error::NoAdmissibleHorizon.into());
    };
    out.write(&control_table("sweep_control", &best.control, setup.p()))?;
    println!("T_min = {} s", fmt_f(best.horizon));
    Ok(())
}

pub fn oracle_compare(setup: &Setup, out: &mut OutDir) -> anyhow::Result<()> {
    let cfg = &setup.cfg;
    let p = *setup.p();
    let o = &cfg.oracle;
    let dt = cfg.reduction.sample_dt;
    let every = (o.snapshot_dt / dt).round().max(1.0) as usize;
    let control = PiecewiseControl::constant(o.horizon, setup.u_st)?;
    let start = ModalState::zero(setup.model.basis(setup.u_st)?);
    let spec = setup.model.simulate(&control, &start, dt)?;
    let grid = FieldGrid::zeros(&p, &o.to_core())?;
    let fd = fd_solve(&control, &grid, &p, &o.to_core(), SolveOptions { sample_dt: dt, snapshot_every: every })?;
    let rep = compare(&spec, &fd)?;

    let mut diag = Table::new(
        "oracle_compare",
        "t s; norm K m^1.5 over V1; theta_av K; face_jump K",
        &["t", "norm_spectral", "norm_oracle", "theta_av_spectral", "theta_av_oracle", "face_jump_spectral", "face_jump_oracle"],
    );
    for k in 0..fd.times.len() {
        diag.push(vec![
            fd.times[k].into(),
            spec.norm_v1[k].into(),
            fd.norm_v1[k].into(),
            spec.theta_av_v1[k].into(),
            fd.theta_av_v1[k].into(),
            spec.face_jump[k].into(),
            fd.face_jump[k].into(),
        ]);
    }
    out.write(&diag)?;
    let mut err = Table::new("oracle_field_error", "t s; rel_l2_V1 1", &["t", "rel_l2_V1"]);
    for (t, e) in rep.times.iter().zip(&rep.field_rel_l2) {
        err.push(vec![(*t).into(), (*e).into()]);
    }
    out.write(&err)?;
    let mut field = Table::new("oracle_field", "t s; r m; z m; theta K (oracle grid nodes)", &["t", "r", "z", "theta"]);
    for snap in &fd.snapshots {
        let m = &snap.mesh;
        for (j, &z) in m.z.iter().enumerate() {
            for (i, &r) in m.r.iter().enumerate() {
                field.push(vec![snap.time.into(), r.into(), z.into(), snap.value(i, j).into()]);
            }
        }
    }
    out.write(&field)?;
    println!("max field error (t >= 60 s) = {}", fmt_f(rep.max_field_error_after(60.0)));
    println!("mean field error = {}", fmt_f(rep.mean_field_error()));
    Ok(())
}

pub fn reproduce_figs(setup: &Setup, out: &mut OutDir) -> anyhow::Result<()> {
    let p = *setup.p();
    let figs = &setup.cfg.figs;
    let base = setup.cost(setup.cfg.cost.gamma)?;
    let report = validate_penalty_constants(&base);
    if !report.all_pass() {
        bail!(Error::InvalidParameter(format!("penalty constants fail their conditions: {report:?}")));
    }
    let mut pen = Table::new("fig_penalty", "u V; f 1/s scaled like u2; u2 V^2", &["u", "f", "u2"]);
    for i in 0..=240 {
        let u = -1.2 * setup.u_st + 2.4 * setup.u_st * i as f64 / 240.0;
        pen.push(vec![u.into(), penalty_f(u, &base).into(), (u * u).into()]);
    }
    out.write(&pen)?;

    let exec = setup.exec();
    let sweeps = exec::map(exec, &figs.gammas, |&g| setup.sweep(g));
    let mut found = Vec::new();
    let mut tmin = Table::new("fig_tmin", "gamma 1; T_min s (empty when no horizon is admissible)", &["gamma", "T_min"]);
    for (&g, res) in figs.gammas.iter().zip(sweeps) {
        let res = res?;
        let natural: Vec<f64> = res.entries.iter().map(|e| setup.natural_ratio(e.horizon)).collect::<anyhow::Result<_>>()?;
        out.write(&sweep_table(&format!("fig_sweep_gamma{g}"), &res, Some(&natural)))?;
        tmin.push(vec![g.into(), res.t_min.map_or(Cell::S(String::new()), Cell::F)]);
        found.push((g, res.t_min));
    }
    out.write(&tmin)?;

    let optima = exec::map(exec, &figs.gammas, |&g| setup.optimize(g, figs.horizon));
    let optima: Vec<DescentResult> = optima.into_iter().collect::<anyhow::Result<_>>()?;
    let mut ctl = Table::new("fig_controls", "gamma 1; t_i s; u_i, u0_i V", &["gamma", "i", "t_i", "u_i", "u0_i"]);
    for (&g, r) in figs.gammas.iter().zip(&optima) {
        for (i, (t0, _, u)) in r.control.pieces().enumerate() {
            ctl.push(vec![g.into(), i.into(), t0.into(), u.into(), p.inverse_dead_zone(u).into()]);
        }
    }
    out.write(&ctl)?;

    let sample = setup.cfg.reduction.sample_dt;
    let natural = setup.natural(figs.horizon)?;
    let trajs: Vec<Trajectory> = optima
        .iter()
        .map(|r| setup.model.simulate(&r.control, &setup.init, sample))
        .collect::<Result<_, _>>()?;
    let labels: Vec<String> = figs.gammas.iter().map(|g| format!("theta_gamma{g}")).collect();
    let mut header = vec!["z", "theta_initial", "theta_natural"];
    header.extend(labels.iter().map(String::as_str));
    let mut prof = Table::new("fig_terminal_profiles", "z m; theta K on the axis (r = 0)", &header);
    for z in setup.axis_points() {
        let mut row: Vec<Cell> = vec![z.into(), setup.init.field(0.0, z).into(), natural.terminal().field(0.0, z).into()];
        row.extend(trajs.iter().map(|t| Cell::F(t.terminal().field(0.0, z))));
        prof.push(row);
    }
    out.write(&prof)?;

    let labels: Vec<String> = figs.gammas.iter().map(|g| format!("norm_gamma{g}")).collect();
    let mut header = vec!["t", "norm_natural"];
    header.extend(labels.iter().map(String::as_str));
    let mut norms = Table::new("fig_norms", "t s; norms relative to the initial V1 norm", &header);
    let nat_rel = natural.norm_relative_initial();
    let rels: Vec<Vec<f64>> = trajs.iter().map(Trajectory::norm_relative_initial).collect();
    for k in 0..natural.len() {
        let mut row: Vec<Cell> = vec![natural.times[k].into(), nat_rel[k].into()];
        row.extend(rels.iter().map(|r| Cell::F(r[k])));
        norms.push(row);
    }
    out.write(&norms)?;

    let mut field = Table::new("fig_terminal_field", "gamma 1 (-1 natural cooling); t s; r m; z m; theta K", &["gamma", "t", "r", "z", "theta"]);
    field_rows(&mut field, &[Cell::F(-1.0)], figs.horizon, natural.terminal(), &p, 11, 101);
    for (&g, t) in figs.gammas.iter().zip(&trajs) {
        field_rows(&mut field, &[Cell::F(g)], figs.horizon, t.terminal(), &p, 11, 101);
    }
    out.write(&field)?;
    for (g, t) in found {
        match t {
            Some(t) => println!("gamma = {g}: T_min = {} s", fmt_f(t)),
            None => println!("gamma = {g}: no admissible horizon"),
        }
    }
    for (&g, r) in figs.gammas.iter().zip(&optima) {
        println!("gamma = {g}: terminal ratio at T = {} s is {}", fmt_f(figs.horizon), fmt_f(r.cost.terminal_ratio));
    }
    Ok(())
}
