//! Modal dynamics for piecewise-constant controls.
//!
//! On each piece the coefficients obey `c' = A c + G` with `A = diag(nu_k)` and a
//! constant forcing `G`, solved in closed form. At breakpoints the state is
//! re-expanded into the basis of the next control value.

mod steady;

use std::collections::HashMap;
use std::sync::Arc;

use parking_lot::RwLock;

use crate::model::{PiecewiseControl, SystemParams};
use crate::spectral::{self, axial_basis_from, radial_roots, AxialBasis, ModalState, RadialFactors, RadialMode, Region, ScanConfig};
use crate::{Error, Result};

pub use steady::{steady_profile, SteadyProfile};

/// Default axial truncation.
pub const DEFAULT_MODES: usize = 4;
/// Default sampling interval of [`ReducedModel::simulate`], s.
pub const DEFAULT_SAMPLE_DT: f64 = 1.0;

/// Resolution of the basis cache key, V.
const CACHE_QUANTUM: f64 = 1e-9;
const CACHE_LIMIT: usize = 4096;

/// Everything that depends on one constant control value.
#[derive(Debug)]
pub struct PieceModel {
    pub basis: Arc<AxialBasis>,
    pub steady: SteadyProfile,
    /// Steady state in modal coordinates.
    pub theta_ss: Vec<f64>,
    /// `G = -A theta_ss`, K/s.
    pub forcing: Vec<f64>,
}

/// Spatial mean of the steady field over the controlled cylinder.
pub fn average_temperature(profile: &SteadyProfile, p: &SystemParams) -> f64 {
    profile.v1_average(p)
}

/// `G = -A theta_ss(u)` for a basis built at `u`.
pub fn forcing_vector(u: f64, basis: &AxialBasis, p: &SystemParams) -> Result<Vec<f64>> {
    let steady = steady_profile(u, p, basis.radial)?;
    let theta_ss = basis.project_axial(|z| steady.psi.value(z));
    Ok(basis.modes.iter().zip(&theta_ss).map(|(m, t)| -m.nu * t).collect())
}

/// Advances modal coefficients by `dt` under constant rates and forcing.
pub fn propagate_coeffs(coeffs: &[f64], rates: &[f64], forcing: &[f64], dt: f64) -> Vec<f64> {
    coeffs
        .iter()
        .zip(rates)
        .zip(forcing)
        .map(|((&c, &nu), &g)| {
            if nu == 0.0 {
                c + g * dt
            } else {
                // e^{nu dt} c + (g / nu)(e^{nu dt} - 1), cancellation-free near the fixed point
                c + (c + g / nu) * (nu * dt).exp_m1()
            }
        })
        .collect()
}

/// Closed-form propagation of a state bound to `basis`.
pub fn propagate(state: &ModalState, dt: f64, g: &[f64]) -> ModalState {
    debug_assert!(dt >= 0.0);
    let rates: Vec<f64> = state.basis.rates().collect();
    ModalState {
        coeffs: propagate_coeffs(&state.coeffs, &rates, g, dt),
        basis: Arc::clone(&state.basis),
        time: state.time + dt,
    }
}

/// Sampled simulation output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ModalState>,
    /// Active control at each sample (the piece starting at that time at breakpoints).
    pub control: Vec<f64>,
    /// `||theta||_{L2(V1)}`, K m^{3/2}.
    pub norm_v1: Vec<f64>,
    pub theta_av_v1: Vec<f64>,
    pub face_jump: Vec<f64>,
    /// Sum of fractional energy lost at the re-expansions.
    pub reexpansion_residual: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal(&self) -> &ModalState {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// `||theta(t)|| / ||theta(0)||` over the controlled cylinder; zero when the
    /// initial norm vanishes.
    pub fn norm_relative_initial(&self) -> Vec<f64> {
        let n0 = self.norm_v1[0];
        self.norm_v1.iter().map(|n| if n0 > 0.0 { n / n0 } else { 0.0 }).collect()
    }

    /// Input voltage `u0` through the inverse dead zone.
    pub fn input_voltage(&self, p: &SystemParams) -> Vec<f64> {
        self.control.iter().map(|&u| p.inverse_dead_zone(u)).collect()
    }

    /// `U = u0 + S [theta]`.
    pub fn total_voltage(&self, p: &SystemParams) -> Vec<f64> {
        self.control
            .iter()
            .zip(&self.face_jump)
            .map(|(&u, &j)| p.total_voltage(p.inverse_dead_zone(u), j))
            .collect()
    }
}

/// The reduced model: parameters, retained radial mode, truncation and a
/// shared cache of per-control bases.
#[derive(Debug)]
pub struct ReducedModel {
    params: SystemParams,
    radial: RadialMode,
    radial_factors: RadialFactors,
    modes: usize,
    cache: RwLock<HashMap<i64, Arc<PieceModel>>>,
}

impl ReducedModel {
    /// Fundamental radial mode with `modes` axial modes.
    pub fn new(params: SystemParams, modes: usize) -> Result<Self> {
        let params = params.validate()?;
        if modes == 0 {
            return Err(Error::InvalidParameter("mode count must be >= 1".into()));
        }
        let radial = radial_roots(0, 1, &params)?[0];
        let radial_factors = RadialFactors::new(&radial, &params);
        Ok(Self { params, radial, radial_factors, modes, cache: RwLock::new(HashMap::new()) })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn radial(&self) -> RadialMode {
        self.radial
    }

    pub fn radial_factors(&self) -> &RadialFactors {
        &self.radial_factors
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cached_bases(&self) -> usize {
        self.cache.read().len()
    }

    /// Basis, steady state and forcing for control `u`, quantized to 1e-9 V.
    pub fn piece(&self, u: f64) -> Result<Arc<PieceModel>> {
        if !u.is_finite() {
            return Err(Error::InvalidParameter("control value must be finite".into()));
        }
        let key = (u / CACHE_QUANTUM).round() as i64;
        if let Some(hit) = self.cache.read().get(&key) {
            return Ok(Arc::clone(hit));
        }
        let uq = key as f64 * CACHE_QUANTUM;
        let basis = Arc::new(axial_basis_from(
            uq,
            &self.params,
            self.modes,
            self.radial,
            self.radial_factors,
            ScanConfig::default(),
        )?);
        let steady = steady::steady_profile_with(uq, &self.params, self.radial, self.radial_factors)?;
        let theta_ss = basis.project_axial(|z| steady.psi.value(z));
        let forcing = basis.modes.iter().zip(&theta_ss).map(|(m, t)| -m.nu * t).collect();
        let entry = Arc::new(PieceModel { basis, steady, theta_ss, forcing });

        let mut cache = self.cache.write();
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        // another thread may have inserted meanwhile; keep the first
        Ok(Arc::clone(cache.entry(key).or_insert(entry)))
    }

    pub fn basis(&self, u: f64) -> Result<Arc<AxialBasis>> {
        Ok(Arc::clone(&self.piece(u)?.basis))
    }

    pub fn steady_profile(&self, u: f64) -> Result<SteadyProfile> {
        steady::steady_profile_with(u, &self.params, self.radial, self.radial_factors)
    }

    /// `theta_av(u)` of the steady state over the controlled cylinder.
    pub fn steady_average(&self, u: f64) -> Result<f64> {
        Ok(average_temperature(&self.steady_profile(u)?, &self.params))
    }

    /// Control whose steady state has average temperature `target` in the
    /// controlled cylinder.
    ///
    /// Scans `[-10, 10]` V in steps of 0.05 V, bisects every sign change of the
    /// mismatch and returns the root of smallest magnitude.
    pub fn find_ust(&self, target: f64) -> Result<f64> {
        if !target.is_finite() {
            return Err(Error::InvalidParameter("target temperature must be finite".into()));
        }
        let f = |u: f64| self.steady_average(u).map(|v| v - target);
        let n = 400;
        let grid: Vec<f64> = (0..=n).map(|i| -10.0 + 20.0 * i as f64 / n as f64).collect();
        let vals = grid.iter().map(|&u| f(u)).collect::<Result<Vec<f64>>>()?;

        let mut best: Option<f64> = None;
        let mut consider = |u: f64| {
            if best.is_none_or(|b| u.abs() < b.abs()) {
                best = Some(u);
            }
        };
        for i in 0..grid.len() {
            if vals[i] == 0.0 {
                consider(grid[i]);
            } else if i + 1 < grid.len() && vals[i + 1] != 0.0 && vals[i].signum() != vals[i + 1].signum() {
                let g = |u: f64| f(u).unwrap_or(f64::NAN);
                consider(spectral::radial::bisect(&g, grid[i], grid[i + 1], vals[i]));
            }
        }
        best.ok_or_else(|| {
            let (min, max) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v + target), b.max(v + target))
            });
            Error::Unreachable { target, min, max }
        })
    }

    /// Steady state at `u_steady` projected onto the basis of `u_first`, with the
    /// fraction of weighted energy the truncated basis misses.
    pub fn initial_state(&self, u_steady: f64, u_first: f64) -> Result<(ModalState, f64)> {
        let steady = self.steady_profile(u_steady)?;
        let basis = self.basis(u_first)?;
        let coeffs = basis.project_axial(|z| steady.psi.value(z));
        let state = ModalState::new(coeffs, basis, 0.0)?;
        let total = steady.weighted_energy(&self.params);
        let residual = if total > 0.0 { (1.0 - state.energy() / total).clamp(0.0, 1.0) } else { 0.0 };
        Ok((state, residual))
    }

    /// Terminal state only, without sampling.
    pub fn terminal_state(&self, control: &PiecewiseControl, init: &ModalState) -> Result<(ModalState, f64)> {
        let mut state = init.clone();
        let mut residual = 0.0;
        for (i, (t0, t1, u)) in control.pieces().enumerate() {
            let piece = self.piece(u).map_err(|e| Error::Subinterval { index: i, source: Box::new(e) })?;
            let (s, r) = spectral::reexpand(&state, &piece.basis);
            residual += r;
            state = propagate(&s, t1 - t0, &piece.forcing);
            state.time = t1;
        }
        Ok((state, residual))
    }

    /// Simulates `control` from `init`, sampling every `sample_dt` seconds and at
    /// the horizon.
    pub fn simulate(&self, control: &PiecewiseControl, init: &ModalState, sample_dt: f64) -> Result<Trajectory> {
        if !(sample_dt > 0.0) || !sample_dt.is_finite() {
            return Err(Error::Sampling(format!("sample_dt must be positive, got {sample_dt}")));
        }
        let horizon = control.horizon();
        let n_samples = (horizon / sample_dt).floor() as usize;
        let mut times: Vec<f64> = (0..=n_samples).map(|i| i as f64 * sample_dt).collect();
        if horizon - times[n_samples] > 1e-9 * horizon {
            times.push(horizon);
        } else {
            times[n_samples] = horizon;
        }

        let mut traj = Trajectory {
            times: Vec::with_capacity(times.len()),
            states: Vec::with_capacity(times.len()),
            control: Vec::with_capacity(times.len()),
            norm_v1: Vec::with_capacity(times.len()),
            theta_av_v1: Vec::with_capacity(times.len()),
            face_jump: Vec::with_capacity(times.len()),
            reexpansion_residual: 0.0,
        };
        let mut record = |t: f64, s: ModalState, u: f64| {
            traj.times.push(t);
            traj.control.push(u);
            traj.norm_v1.push(s.v1_norm());
            traj.theta_av_v1.push(s.v1_average());
            traj.face_jump.push(s.face_jump());
            traj.states.push(s);
        };

        let mut state = init.clone();
        let mut residual = 0.0;
        let mut next = 0;
        let n_pieces = control.n_pieces();
        for (i, (t0, t1, u)) in control.pieces().enumerate() {
            let piece = self.piece(u).map_err(|e| Error::Subinterval { index: i, source: Box::new(e) })?;
            let (start, r) = spectral::reexpand(&state, &piece.basis);
            residual += r;
            let last = i + 1 == n_pieces;
            while next < times.len() && (times[next] < t1 || (last && times[next] <= t1)) {
                let t = times[next];
                let mut s = propagate(&start, t - t0, &piece.forcing);
                s.time = t;
                record(t, s, u);
                next += 1;
            }
            state = propagate(&start, t1 - t0, &piece.forcing);
            state.time = t1;
        }
        traj.reexpansion_residual = residual;
        Ok(traj)
    }
}

/// Simulation with a throwaway default-truncation model.
pub fn simulate(
    control: &PiecewiseControl,
    init: &ModalState,
    p: &SystemParams,
    sample_dt: f64,
) -> Result<Trajectory> {
    ReducedModel::new(*p, init.basis.len())?.simulate(control, init, sample_dt)
}

/// `[theta] = theta(z0) - theta(-z0)` of face-averaged temperatures.
pub fn face_jump(state: &ModalState) -> f64 {
    state.face_jump()
}

/// Weak-form projection of the constant sources onto each mode: Joule heat in
/// the element, the `theta0` Peltier part at the faces and the lateral ambient
/// exchange in the cylinders. Equals `forcing_vector` for a consistent model.
pub fn weak_form_forcing(u: f64, basis: &AxialBasis, p: &SystemParams) -> Vec<f64> {
    let rf = &basis.radial_factors;
    let joule = rf.beta * p.joule_density(u);
    let face = p.peltier_coefficient(u) * rf.beta * p.theta0;
    let sigma = steady::ambient_source(p, &basis.radial, rf);
    basis
        .modes
        .iter()
        .map(|m| {
            let pe = m.psi.integrate(Region::Element, |v, _| v);
            let cyl = m.psi.integrate(Region::HeatSink, |v, _| v) + m.psi.integrate(Region::Controlled, |v, _| v);
            let faces = m.psi.one_sided(Region::Element, p.z0).0 - m.psi.one_sided(Region::Element, -p.z0).0;
            rf.weight * (joule * pe + face * faces + sigma * cyl) / m.norm
        })
        .collect()
}
