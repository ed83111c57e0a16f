//! Axisymmetric finite-volume reference solver for the full field equations.
//!
//! Vertex-centred control volumes on a tensor grid with nodes at `+-z0`:
//! cylindrical conduction with the Robin lateral condition in the cylinders,
//! axial conduction only inside the element, a uniform Joule source, and the
//! Peltier heat `P (theta + theta0)` released at the top face and absorbed at
//! the bottom face. The face term is part of the implicit operator.
//!
//! Time stepping is Crank-Nicolson; the first step after every control switch
//! is replaced by two implicit Euler half steps, which damps the stiff
//! components excited by the jump in the forcing and shares the same matrix.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::dynamics::Trajectory;
use crate::model::{PiecewiseControl, SystemParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Radial intervals.
    pub nr: usize,
    /// Axial intervals over `[-z1, z1]`.
    pub nz: usize,
    /// Axial intervals across the element (part of `nz`).
    pub pe_intervals: usize,
    /// Time step, s.
    pub dt: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { nr: 40, nz: 400, pe_intervals: 10, dt: 0.05 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nr < 2 {
            return Err(Error::InvalidParameter("oracle nr must be >= 2".into()));
        }
        if self.pe_intervals < 2 || self.nz <= self.pe_intervals + 2 {
            return Err(Error::InvalidParameter("oracle needs pe_intervals >= 2 and nz > pe_intervals + 2".into()));
        }
        if (self.nz - self.pe_intervals) % 2 != 0 {
            return Err(Error::InvalidParameter("oracle nz - pe_intervals must be even".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter("oracle dt must be > 0".into()));
        }
        Ok(())
    }

    /// Every count multiplied by `k`, time step unchanged.
    pub fn refined(&self, k: usize) -> Self {
        Self { nr: self.nr * k, nz: self.nz * k, pe_intervals: self.pe_intervals * k, dt: self.dt }
    }
}

/// Grid geometry and the quadrature weights derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    /// Index of the node at `-z0`.
    pub iz_lo: usize,
    /// Index of the node at `z0`.
    pub iz_hi: usize,
    /// Annulus area of each radial control volume, m^2.
    area: Vec<f64>,
    /// Axial extent of each node's control volume inside the cylinders / the element.
    ext_cyl: Vec<f64>,
    ext_pe: Vec<f64>,
    ext_v1: Vec<f64>,
    ext_v2: Vec<f64>,
}

impl Mesh {
    pub fn new(p: &SystemParams, cfg: &OracleConfig) -> Result<Self> {
        cfg.validate()?;
        // finer towards the lateral surface: spacing ratio centre/edge about 2.6
        let r: Vec<f64> = (0..=cfg.nr)
            .map(|i| {
                let x = i as f64 / cfg.nr as f64;
                p.r1 * (0.5 * x + 0.5 * (0.5 * PI * x).sin())
            })
            .collect();
        let nc = (cfg.nz - cfg.pe_intervals) / 2;
        let np = cfg.pe_intervals;
        let mut z = Vec::with_capacity(cfg.nz + 1);
        for j in 0..nc {
            z.push(-p.z1 + (p.z1 - p.z0) * j as f64 / nc as f64);
        }
        for j in 0..np {
            z.push(-p.z0 + 2.0 * p.z0 * j as f64 / np as f64);
        }
        for j in 0..=nc {
            z.push(p.z0 + (p.z1 - p.z0) * j as f64 / nc as f64);
        }
        let (iz_lo, iz_hi) = (nc, nc + np);

        let area = (0..=cfg.nr)
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { 0.5 * (r[i - 1] + r[i]) };
                let hi = if i == cfg.nr { p.r1 } else { 0.5 * (r[i] + r[i + 1]) };
                PI * (hi * hi - lo * lo)
            })
            .collect();
        let nzn = z.len();
        let mut ext_cyl = vec![0.0; nzn];
        let mut ext_pe = vec![0.0; nzn];
        let mut ext_v1 = vec![0.0; nzn];
        let mut ext_v2 = vec![0.0; nzn];
        for s in 0..nzn - 1 {
            let half = 0.5 * (z[s + 1] - z[s]);
            for j in [s, s + 1] {
                if s >= iz_lo && s < iz_hi {
                    ext_pe[j] += half;
                } else {
                    ext_cyl[j] += half;
                    if s >= iz_hi {
                        ext_v1[j] += half;
                    } else {
                        ext_v2[j] += half;
                    }
                }
            }
        }
        Ok(Self { r, z, iz_lo, iz_hi, area, ext_cyl, ext_pe, ext_v1, ext_v2 })
    }

    pub fn nr(&self) -> usize {
        self.r.len()
    }

    pub fn nz(&self) -> usize {
        self.z.len()
    }

    pub fn len(&self) -> usize {
        self.nr() * self.nz()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nr() + i
    }

    fn integrate_over(&self, ext: &[f64], f: impl Fn(usize, usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for (j, &e) in ext.iter().enumerate() {
            if e == 0.0 {
                continue;
            }
            for (i, &a) in self.area.iter().enumerate() {
                acc += a * e * f(i, j);
            }
        }
        acc
    }

    fn volume_of(&self, ext: &[f64]) -> f64 {
        self.integrate_over(ext, |_, _| 1.0)
    }

    /// Area average over the face disk at node row `j`.
    fn face_average(&self, theta: &[f64], j: usize) -> f64 {
        let total: f64 = self.area.iter().sum();
        self.area.iter().enumerate().map(|(i, a)| a * theta[self.index(i, j)]).sum::<f64>() / total
    }
}

/// Nodal temperatures on a [`Mesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub mesh: std::sync::Arc<Mesh>,
    pub theta: Vec<f64>,
    pub time: f64,
}

impl FieldGrid {
    pub fn zeros(p: &SystemParams, cfg: &OracleConfig) -> Result<Self> {
        let mesh = std::sync::Arc::new(Mesh::new(p, cfg)?);
        let n = mesh.len();
        Ok(Self { mesh, theta: vec![0.0; n], time: 0.0 })
    }

    /// Samples `f(r, z)` at the nodes; `f` is evaluated once per node.
    pub fn from_fn(p: &SystemParams, cfg: &OracleConfig, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut g = Self::zeros(p, cfg)?;
        let m = std::sync::Arc::clone(&g.mesh);
        for (j, &z) in m.z.iter().enumerate() {
            for (i, &r) in m.r.iter().enumerate() {
                g.theta[m.index(i, j)] = f(r, z);
            }
        }
        Ok(g)
    }

    /// Separable field `a(r) b(z)` with each factor evaluated once per node line.
    pub fn separable(p: &SystemParams, cfg: &OracleConfig, a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64) -> Result<Self> {
        let mut g = Self::zeros(p, cfg)?;
        g.fill_separable(a, b);
        Ok(g)
    }

    fn fill_separable(&mut self, a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64) {
        let m = std::sync::Arc::clone(&self.mesh);
        let ar: Vec<f64> = m.r.iter().map(|&r| a(r)).collect();
        for (j, &z) in m.z.iter().enumerate() {
            let bz = b(z);
            for (i, &av) in ar.iter().enumerate() {
                self.theta[m.index(i, j)] = av * bz;
            }
        }
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.theta[self.mesh.index(i, j)]
    }

    pub fn v1_norm(&self) -> f64 {
        self.mesh.integrate_over(&self.mesh.ext_v1, |i, j| self.value(i, j).powi(2)).sqrt()
    }

    pub fn v1_average(&self) -> f64 {
        self.mesh.integrate_over(&self.mesh.ext_v1, |i, j| self.value(i, j)) / self.mesh.volume_of(&self.mesh.ext_v1)
    }

    pub fn v2_average(&self) -> f64 {
        self.mesh.integrate_over(&self.mesh.ext_v2, |i, j| self.value(i, j)) / self.mesh.volume_of(&self.mesh.ext_v2)
    }

    /// Face-averaged temperature at `z0` minus that at `-z0`.
    pub fn face_jump(&self) -> f64 {
        self.mesh.face_average(&self.theta, self.mesh.iz_hi) - self.mesh.face_average(&self.theta, self.mesh.iz_lo)
    }

    /// `||self - other||_{L2(V1)}` on the shared mesh.
    pub fn v1_distance(&self, other: &FieldGrid) -> f64 {
        self.mesh
            .integrate_over(&self.mesh.ext_v1, |i, j| (self.value(i, j) - other.value(i, j)).powi(2))
            .sqrt()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.theta.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    }
}

/// `C theta' = -K theta + b` for one control value. `K` is stored as a
/// five-point stencil: diagonal plus couplings to the radial and axial successors.
struct Operator {
    nr: usize,
    cap: Vec<f64>,
    diag: Vec<f64>,
    east: Vec<f64>,
    north: Vec<f64>,
    source: Vec<f64>,
}

impl Operator {
    fn new(mesh: &Mesh, p: &SystemParams, u: f64) -> Self {
        let nr = mesh.nr();
        let nzn = mesh.nz();
        let n = mesh.len();
        let mut cap = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut east = vec![0.0; n];
        let mut north = vec![0.0; n];
        let mut source = vec![0.0; n];
        let joule = p.joule_density(u);
        let pel = p.peltier_coefficient(u);
        let (ca, cp) = (p.heat_capacity_a(), p.heat_capacity_p());
        for j in 0..nzn {
            let (ec, ep) = (mesh.ext_cyl[j], mesh.ext_pe[j]);
            for i in 0..nr {
                let k = mesh.index(i, j);
                let a = mesh.area[i];
                cap[k] = a * (ca * ec + cp * ep);
                source[k] += joule * a * ep;
                if i + 1 < nr {
                    let rf = 0.5 * (mesh.r[i] + mesh.r[i + 1]);
                    let g = p.lambda_a * 2.0 * PI * rf * ec / (mesh.r[i + 1] - mesh.r[i]);
                    east[k] = g;
                    diag[k] += g;
                    diag[k + 1] += g;
                } else {
                    let g = p.alpha * 2.0 * PI * p.r1 * ec;
                    diag[k] += g;
                    source[k] += g * p.theta_ambient;
                }
                if j + 1 < nzn {
                    let lam = if j >= mesh.iz_lo && j < mesh.iz_hi { p.lambda_p } else { p.lambda_a };
                    let g = lam * a / (mesh.z[j + 1] - mesh.z[j]);
                    north[k] = g;
                    diag[k] += g;
                    diag[k + nr] += g;
                }
                if j == mesh.iz_hi {
                    diag[k] -= pel * a;
                    source[k] += pel * a * p.theta0;
                } else if j == mesh.iz_lo {
                    diag[k] += pel * a;
                    source[k] -= pel * a * p.theta0;
                }
            }
        }
        Self { nr, cap, diag, east, north, source }
    }

    /// `K x`.
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let nr = self.nr;
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for k in 0..n {
            let ge = self.east[k];
            if ge != 0.0 {
                y[k] -= ge * x[k + 1];
                y[k + 1] -= ge * x[k];
            }
            let gn = self.north[k];
            if gn != 0.0 {
                y[k] -= gn * x[k + nr];
                y[k + nr] -= gn * x[k];
            }
        }
        y
    }

    /// Cholesky factor of `s C + h K`.
    fn factor(&self, s: f64, h: f64) -> Result<BandCholesky> {
        let n = self.cap.len();
        let b = self.nr;
        let mut a = vec![0.0; n * (b + 1)];
        for k in 0..n {
            a[k * (b + 1)] = s * self.cap[k] + h * self.diag[k];
            if self.east[k] != 0.0 {
                a[(k + 1) * (b + 1) + 1] = -h * self.east[k];
            }
            if self.north[k] != 0.0 {
                a[(k + b) * (b + 1) + b] = -h * self.north[k];
            }
        }
        BandCholesky::new(a, n, b)
    }
}

/// Lower-band Cholesky factor; entry `(i, i - d)` lives at `i (b + 1) + d`.
struct BandCholesky {
    l: Vec<f64>,
    n: usize,
    b: usize,
}

impl BandCholesky {
    fn new(mut l: Vec<f64>, n: usize, b: usize) -> Result<Self> {
        let w = b + 1;
        for i in 0..n {
            let jmin = i.saturating_sub(b);
            for j in jmin..=i {
                let kmin = jmin.max(j.saturating_sub(b));
                let mut s = l[i * w + (i - j)];
                for k in kmin..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::LinearSolve(format!(
                            "oracle matrix not positive definite at row {i} of {n} (pivot {s:e})"
                        )));
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Ok(Self { l, n, b })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let (n, b, w) = (self.n, self.b, self.b + 1);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(b)..i {
                s -= self.l[i * w + (i - k)] * x[k];
            }
            x[i] = s / self.l[i * w];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for m in i + 1..(i + b + 1).min(n) {
                s -= self.l[m * w + (m - i)] * x[m];
            }
            x[i] = s / self.l[i * w];
        }
    }
}

/// One Crank-Nicolson step of length `dt` under constant `u`.
pub fn fd_step(grid: &FieldGrid, u: f64, dt: f64, p: &SystemParams) -> Result<FieldGrid> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("oracle dt must be > 0, got {dt}")));
    }
    let op = Operator::new(&grid.mesh, p, u);
    let f = op.factor(1.0, 0.5 * dt)?;
    let mut out = grid.clone();
    out.theta = cn_rhs(&op, &grid.theta, dt);
    f.solve_in_place(&mut out.theta);
    out.time += dt;
    Ok(out)
}

/// `(C - dt/2 K) x + dt b`.
fn cn_rhs(op: &Operator, x: &[f64], dt: f64) -> Vec<f64> {
    let kx = op.apply(x);
    (0..x.len()).map(|k| op.cap[k] * x[k] - 0.5 * dt * kx[k] + dt * op.source[k]).collect()
}

/// Implicit Euler: `C x + dt b`.
fn be_rhs(op: &Operator, x: &[f64], dt: f64) -> Vec<f64> {
    (0..x.len()).map(|k| op.cap[k] * x[k] + dt * op.source[k]).collect()
}

/// Time-independent solution `K theta = b` for constant `u`.
pub fn fd_steady(u: f64, p: &SystemParams, cfg: &OracleConfig) -> Result<FieldGrid> {
    let mut g = FieldGrid::zeros(p, cfg)?;
    let op = Operator::new(&g.mesh, p, u);
    let f = op.factor(0.0, 1.0)?;
    g.theta = op.source.clone();
    f.solve_in_place(&mut g.theta);
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleTrajectory {
    pub times: Vec<f64>,
    pub control: Vec<f64>,
    pub norm_v1: Vec<f64>,
    pub theta_av_v1: Vec<f64>,
    pub theta_av_v2: Vec<f64>,
    pub face_jump: Vec<f64>,
    /// Full fields at the snapshot times.
    pub snapshots: Vec<FieldGrid>,
}

impl OracleTrajectory {
    pub fn terminal_norm(&self) -> f64 {
        *self.norm_v1.last().expect("non-empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Diagnostic sampling interval, s.
    pub sample_dt: f64,
    /// Keep the full field every this many samples; `0` keeps only the last.
    pub snapshot_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { sample_dt: 1.0, snapshot_every: 0 }
    }
}

/// Integrates `control` from `init`, stepping exactly onto breakpoints and
/// sample times.
pub fn fd_solve(
    control: &PiecewiseControl,
    init: &FieldGrid,
    p: &SystemParams,
    cfg: &OracleConfig,
    opts: SolveOptions,
) -> Result<OracleTrajectory> {
    cfg.validate()?;
    if !(opts.sample_dt > 0.0) {
        return Err(Error::Sampling(format!("sample_dt must be positive, got {}", opts.sample_dt)));
    }
    let horizon = control.horizon();
    let n_samples = (horizon / opts.sample_dt).floor() as usize;
    let mut times: Vec<f64> = (0..=n_samples).map(|i| i as f64 * opts.sample_dt).collect();
    if horizon - times[n_samples] > 1e-9 * horizon {
        times.push(horizon);
    } else {
        times[n_samples] = horizon;
    }

    let mut out = OracleTrajectory {
        times: Vec::new(),
        control: Vec::new(),
        norm_v1: Vec::new(),
        theta_av_v1: Vec::new(),
        theta_av_v2: Vec::new(),
        face_jump: Vec::new(),
        snapshots: Vec::new(),
    };
    let total = times.len();
    let mut record = |g: &FieldGrid, u: f64, idx: usize| {
        out.times.push(g.time);
        out.control.push(u);
        out.norm_v1.push(g.v1_norm());
        out.theta_av_v1.push(g.v1_average());
        out.theta_av_v2.push(g.v2_average());
        out.face_jump.push(g.face_jump());
        let keep = if opts.snapshot_every == 0 { idx + 1 == total } else { idx % opts.snapshot_every == 0 || idx + 1 == total };
        if keep {
            out.snapshots.push(g.clone());
        }
    };

    let mut grid = init.clone();
    grid.time = 0.0;
    let mut next = 0;
    record(&grid, control.value_at(0.0), next);
    next += 1;
    for (index, (t0, t1, u)) in control.pieces().enumerate() {
        let wrap = |e: Error| Error::Subinterval { index, source: Box::new(e) };
        let op = Operator::new(&grid.mesh, p, u);
        let mut factors: HashMap<u64, BandCholesky> = HashMap::new();
        let mut fresh = true;
        let mut t = t0;
        while t < t1 - 1e-12 * t1.max(1.0) {
            let stop = if next < total && times[next] <= t1 { times[next] } else { t1 };
            let len = stop - t;
            let steps = ((len / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
            let h = len / steps as f64;
            let key = h.to_bits();
            if !factors.contains_key(&key) {
                factors.insert(key, op.factor(1.0, 0.5 * h).map_err(wrap)?);
            }
            let f = &factors[&key];
            for s in 0..steps {
                if fresh && s == 0 {
                    // two implicit Euler half steps share the Crank-Nicolson matrix
                    for _ in 0..2 {
                        let mut x = be_rhs(&op, &grid.theta, 0.5 * h);
                        f.solve_in_place(&mut x);
                        grid.theta = x;
                    }
                    fresh = false;
                } else {
                    let mut x = cn_rhs(&op, &grid.theta, h);
                    f.solve_in_place(&mut x);
                    grid.theta = x;
                }
            }
            t = stop;
            grid.time = t;
            if next < total && (times[next] - t).abs() <= 1e-9 * t.max(1.0) {
                grid.time = times[next];
                let u_here = if next + 1 == total { u } else { control.value_at(times[next]) };
                record(&grid, u_here, next);
                next += 1;
            }
        }
        if grid.theta.iter().any(|v| !v.is_finite()) {
            return Err(wrap(Error::NonFinite("oracle field".into())));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub times: Vec<f64>,
    /// `||theta_spec - theta_fd|| / ||theta_fd||` over the controlled cylinder at each snapshot.
    pub field_rel_l2: Vec<f64>,
    /// Relative error of the diagnostic norm series at all shared samples.
    pub norm_rel: Vec<f64>,
    pub theta_av_abs: Vec<f64>,
    pub face_jump_abs: Vec<f64>,
}

impl CompareReport {
    /// Largest field error over snapshots at `t >= t_from`.
    pub fn max_field_error_after(&self, t_from: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.field_rel_l2)
            .filter(|(t, _)| **t >= t_from)
            .map(|(_, e)| *e)
            .fold(0.0, f64::max)
    }

    pub fn mean_field_error(&self) -> f64 {
        if self.field_rel_l2.is_empty() {
            0.0
        } else {
            self.field_rel_l2.iter().sum::<f64>() / self.field_rel_l2.len() as f64
        }
    }
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

/// Compares a spectral trajectory with an oracle run on the oracle's grid.
pub fn compare(spectral: &Trajectory, oracle: &OracleTrajectory) -> Result<CompareReport> {
    if spectral.times.len() != oracle.times.len()
        || spectral.times.iter().zip(&oracle.times).any(|(a, b)| !same_time(*a, *b))
    {
        return Err(Error::Sampling(format!(
            "spectral has {} samples, oracle {}; sample times must coincide",
            spectral.times.len(),
            oracle.times.len()
        )));
    }
    let mut report = CompareReport {
        times: Vec::new(),
        field_rel_l2: Vec::new(),
        norm_rel: Vec::new(),
        theta_av_abs: Vec::new(),
        face_jump_abs: Vec::new(),
    };
    for k in 0..oracle.times.len() {
        let n_fd = oracle.norm_v1[k];
        report.norm_rel.push(if n_fd > 0.0 { (spectral.norm_v1[k] - n_fd).abs() / n_fd } else { spectral.norm_v1[k] });
        report.theta_av_abs.push((spectral.theta_av_v1[k] - oracle.theta_av_v1[k]).abs());
        report.face_jump_abs.push((spectral.face_jump[k] - oracle.face_jump[k]).abs());
    }
    for snap in &oracle.snapshots {
        let k = spectral
            .times
            .iter()
            .position(|&t| same_time(t, snap.time))
            .ok_or_else(|| Error::Sampling(format!("no spectral sample at t = {}", snap.time)))?;
        let state = &spectral.states[k];
        let basis = &state.basis;
        let p = basis.params;
        let mut synth = snap.clone();
        synth.fill_separable(
            |r| crate::spectral::RadialFactors::profile(&basis.radial, &p, r),
            |z| basis.axial_value(&state.coeffs, z),
        );
        let d = synth.v1_distance(snap);
        let n = snap.v1_norm();
        report.times.push(snap.time);
        report.field_rel_l2.push(if n > 0.0 { d / n } else { d });
    }
    Ok(report)
}
