//! Run configuration: a TOML file with one table per block.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use peltier_core::exec::ExecMode;
use peltier_core::optimizer::DescentConfig;
use peltier_core::oracle::OracleConfig;
use peltier_core::SystemParams;
use serde::Deserialize;

pub const SCENARIOS: [&str; 7] = ["spectrum", "steady", "simulate", "optimize", "sweep", "oracle-compare", "reproduce-figs"];

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub scenario: Option<String>,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { scenario: None, out: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionSection {
    pub modes: usize,
    /// Trajectory sampling interval, s.
    pub sample_dt: f64,
}

impl Default for ReductionSection {
    fn default() -> Self {
        Self { modes: 4, sample_dt: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSection {
    pub gamma: f64,
    /// Target average temperature of the controlled cylinder, K.
    pub theta_av: f64,
    /// Penalty constants; both default to the built-in pair when absent.
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

impl Default for CostSection {
    fn default() -> Self {
        Self { gamma: 5.0, theta_av: 5.5, c1: None, c2: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescentSection {
    pub n_pieces: usize,
    pub step: f64,
    pub fd_step: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub parallel: bool,
}

impl Default for DescentSection {
    fn default() -> Self {
        let d = DescentConfig::default();
        Self {
            n_pieces: d.n_pieces,
            step: d.step,
            fd_step: d.fd_step,
            max_iters: d.max_iters,
            rel_tol: d.rel_tol,
            parallel: true,
        }
    }
}

impl DescentSection {
    pub fn to_core(&self) -> DescentConfig {
        DescentConfig {
            n_pieces: self.n_pieces,
            step: self.step,
            fd_step: self.fd_step,
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            init_control: Vec::new(),
            exec: if self.parallel { ExecMode::Parallel } else { ExecMode::Sequential },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// First (largest) horizon, s.
    pub t_start: f64,
    /// Horizon decrement, s.
    pub dt: f64,
    pub eps_terminal: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { t_start: 1500.0, dt: 12.0, eps_terminal: 1e-2 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeSection {
    pub horizon: f64,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        Self { horizon: 1020.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub u_min: f64,
    pub u_max: f64,
    pub points: usize,
    pub modes: usize,
    pub radial_roots: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { u_min: -1.5, u_max: 1.5, points: 13, modes: 6, radial_roots: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// Steady state for the target average temperature.
    Steady,
    Zero,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// CSV with `t_start, u` rows; relative paths resolve against the config file.
    pub control_file: Option<PathBuf>,
    pub horizon: Option<f64>,
    pub initial: InitialState,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { control_file: None, horizon: None, initial: InitialState::Steady }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub nr: usize,
    pub nz: usize,
    pub pe_intervals: usize,
    pub dt: f64,
    /// Length of the constant-voltage comparison run, s.
    pub horizon: f64,
    /// Interval between full-field dumps, s.
    pub snapshot_dt: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        let o = OracleConfig::default();
        Self { nr: o.nr, nz: o.nz, pe_intervals: o.pe_intervals, dt: o.dt, horizon: 600.0, snapshot_dt: 60.0 }
    }
}

impl OracleSection {
    pub fn to_core(&self) -> OracleConfig {
        OracleConfig { nr: self.nr, nz: self.nz, pe_intervals: self.pe_intervals, dt: self.dt }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigsSection {
    pub gammas: Vec<f64>,
    /// Horizon of the per-gamma optimal controls and terminal profiles, s.
    pub horizon: f64,
    /// Points along the axis in profile dumps.
    pub profile_points: usize,
}

impl Default for FigsSection {
    fn default() -> Self {
        Self { gammas: vec![3.0, 4.0, 5.0], horizon: 1020.0, profile_points: 401 }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub system: SystemParams,
    pub reduction: ReductionSection,
    pub cost: CostSection,
    pub descent: DescentSection,
    pub sweep: SweepSection,
    pub optimize: OptimizeSection,
    pub spectrum: SpectrumSection,
    pub simulate: SimulateSection,
    pub oracle: OracleSection,
    pub figs: FigsSection,
    /// Directory of the file the config was read from.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn positive(name: &str, v: f64) -> anyhow::Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        bail!("{name} must be a positive finite number, got {v}");
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.system.validate()?;
        if let Some(s) = &self.run.scenario {
            if !SCENARIOS.contains(&s.as_str()) {
                bail!("unknown scenario {s:?} in config; expected one of {SCENARIOS:?}");
            }
        }
        if self.reduction.modes == 0 {
            bail!("reduction.modes must be >= 1");
        }
        positive("reduction.sample_dt", self.reduction.sample_dt)?;
        if !self.cost.gamma.is_finite() || self.cost.gamma < 0.0 {
            bail!("cost.gamma must be >= 0");
        }
        if !self.cost.theta_av.is_finite() || self.cost.theta_av == 0.0 {
            bail!("cost.theta_av must be finite and nonzero");
        }
        if self.cost.c1.is_some() != self.cost.c2.is_some() {
            bail!("cost.c1 and cost.c2 must be given together");
        }
        for v in [self.cost.c1, self.cost.c2].into_iter().flatten() {
            positive("penalty constant", v)?;
        }
        self.descent.to_core().validate()?;
        positive("sweep.t_start", self.sweep.t_start)?;
        positive("sweep.dt", self.sweep.dt)?;
        positive("sweep.eps_terminal", self.sweep.eps_terminal)?;
        if self.sweep.t_start <= self.sweep.dt {
            bail!("sweep.t_start must exceed sweep.dt");
        }
        positive("optimize.horizon", self.optimize.horizon)?;
        let s = &self.spectrum;
        if s.points < 1 || s.modes < 1 || s.radial_roots < 1 || !(s.u_max >= s.u_min) {
            bail!("spectrum needs points, modes, radial_roots >= 1 and u_max >= u_min");
        }
        if let Some(h) = self.simulate.horizon {
            positive("simulate.horizon", h)?;
        }
        self.oracle.to_core().validate()?;
        positive("oracle.horizon", self.oracle.horizon)?;
        positive("oracle.snapshot_dt", self.oracle.snapshot_dt)?;
        if self.figs.gammas.iter().any(|g| !g.is_finite() || *g < 0.0) {
            bail!("figs.gammas must be finite and >= 0");
        }
        positive("figs.horizon", self.figs.horizon)?;
        if self.figs.profile_points < 2 {
            bail!("figs.profile_points must be >= 2");
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
