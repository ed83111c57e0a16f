//! Spectral reduction: radial roots, control-dependent axial bases, projections.
//!
//! Inner products carry the volumetric heat capacity as weight,
//! `<f, g> = int_V c rho f g dV`, under which the eigenfunctions of one basis are
//! orthogonal. Modes are normalized to unit weighted norm.

pub mod axial;
pub mod bessel;
pub mod profile;
pub mod quadrature;
pub mod radial;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::model::SystemParams;
use crate::Result;

pub use axial::{characteristic_residual, find_eigenvalues, Bracket, ScanConfig};
pub use profile::{AxialProfile, Pair, Region, Segment};
pub use radial::{radial_residual, radial_roots, RadialFactors, RadialMode};

use quadrature::gl64;

#[derive(Debug, Clone, PartialEq)]
pub struct AxialMode {
    pub k: usize,
    /// Signed `xi^2`; negative values give hyperbolic profiles in the cylinders.
    pub xi2: f64,
    /// Decay rate, 1/s.
    pub nu: f64,
    pub psi: AxialProfile,
    /// Weighted norm after normalization (1 up to quadrature error).
    pub norm: f64,
}

impl AxialMode {
    /// Characteristic decay time `-1 / nu`, s.
    pub fn tau(&self) -> f64 {
        -1.0 / self.nu
    }
}

/// `K` axial modes for one constant control value, slowest first.
#[derive(Debug, Clone)]
pub struct AxialBasis {
    pub u: f64,
    pub radial: RadialMode,
    pub radial_factors: RadialFactors,
    pub modes: Vec<AxialMode>,
    pub params: SystemParams,
    /// Unweighted `int_{z0}^{z1} psi_i psi_j dz`.
    v1_gram: DMatrix<f64>,
    /// `(1 / (z1 - z0)) int_{z0}^{z1} psi_i dz`.
    v1_mean: DVector<f64>,
    /// `psi_i(z0) - psi_i(-z0)`.
    face_diff: DVector<f64>,
    /// Mode values at the axial quadrature nodes (one row per mode).
    node_values: DMatrix<f64>,
    /// `c rho` times the quadrature weight at each node.
    node_weights: DVector<f64>,
}

/// Gauss-Legendre nodes of all three regions, bottom to top, with `c rho w`.
fn axial_nodes(p: &SystemParams) -> impl Iterator<Item = (Region, f64, f64)> + '_ {
    Region::ALL.into_iter().flat_map(move |r| {
        let (a, b) = r.bounds(p);
        let cap = r.capacity(p);
        gl64().mapped(a, b).map(move |(z, w)| (r, z, cap * w))
    })
}

impl AxialBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.modes.iter().map(|m| m.nu)
    }

    /// Axial part of the synthesized field for coefficients `c`.
    pub fn axial_value(&self, coeffs: &[f64], z: f64) -> f64 {
        self.modes.iter().zip(coeffs).map(|(m, c)| c * m.psi.value(z)).sum()
    }

    pub fn field_value(&self, coeffs: &[f64], r: f64, z: f64) -> f64 {
        RadialFactors::profile(&self.radial, &self.params, r) * self.axial_value(coeffs, z)
    }

    /// `int_{z0}^{z1} psi^2 dz` of the synthesized axial profile.
    pub fn v1_axial_norm2(&self, coeffs: &[f64]) -> f64 {
        let c = DVector::from_column_slice(coeffs);
        (c.transpose() * &self.v1_gram * &c)[(0, 0)].max(0.0)
    }

    /// `||theta||^2` over the controlled cylinder.
    pub fn v1_norm2(&self, coeffs: &[f64]) -> f64 {
        self.radial_factors.weight * self.v1_axial_norm2(coeffs)
    }

    /// Volume average over the controlled cylinder.
    pub fn v1_average(&self, coeffs: &[f64]) -> f64 {
        self.radial_factors.mean * self.v1_mean.as_slice().iter().zip(coeffs).map(|(m, c)| m * c).sum::<f64>()
    }

    /// Difference of face-averaged temperatures, top (`z0`) minus bottom (`-z0`).
    pub fn face_jump(&self, coeffs: &[f64]) -> f64 {
        self.radial_factors.mean * self.face_diff.as_slice().iter().zip(coeffs).map(|(m, c)| m * c).sum::<f64>()
    }

    /// `int_V c rho Xi_i Xi_j dV` for two modes of possibly different bases.
    ///
    /// Both bases share the node set whenever their parameters agree; otherwise
    /// the other basis is evaluated at this basis' nodes.
    pub fn weighted_overlap(&self, i: usize, other: &AxialBasis, j: usize) -> f64 {
        let a = self.node_values.row(i);
        let axial: f64 = if self.params == other.params {
            let b = other.node_values.row(j);
            (0..a.len()).map(|n| self.node_weights[n] * a[n] * b[n]).sum()
        } else {
            let psi = &other.modes[j].psi;
            axial_nodes(&self.params)
                .enumerate()
                .map(|(n, (r, z, w))| w * a[n] * psi.segment(r).value(z))
                .sum()
        };
        self.radial_factors.weight * axial
    }

    /// Weighted projection of a separable field `J(mu r / r1) g(z)` onto each mode.
    pub fn project_axial(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        let gw: Vec<f64> = axial_nodes(&self.params).map(|(_, z, w)| g(z) * w).collect();
        self.modes
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let row = self.node_values.row(k);
                let s: f64 = gw.iter().zip(row.iter()).map(|(a, b)| a * b).sum();
                s * self.radial_factors.weight / m.norm
            })
            .collect()
    }
}

/// Builds the basis of `count` slowest axial modes for constant control `u`.
pub fn axial_basis(u: f64, p: &SystemParams, count: usize, radial: RadialMode) -> Result<AxialBasis> {
    axial_basis_with(u, p, count, radial, ScanConfig::default())
}

pub fn axial_basis_with(
    u: f64,
    p: &SystemParams,
    count: usize,
    radial: RadialMode,
    scan: ScanConfig,
) -> Result<AxialBasis> {
    axial_basis_from(u, p, count, radial, RadialFactors::new(&radial, p), scan)
}

/// Same as [`axial_basis_with`] with precomputed radial factors.
pub fn axial_basis_from(
    u: f64,
    p: &SystemParams,
    count: usize,
    radial: RadialMode,
    radial_factors: RadialFactors,
    scan: ScanConfig,
) -> Result<AxialBasis> {
    if count == 0 {
        return Err(crate::Error::InvalidParameter("mode count must be >= 1".into()));
    }
    if !u.is_finite() {
        return Err(crate::Error::InvalidParameter("control value must be finite".into()));
    }
    let roots = find_eigenvalues(count, u, p, &radial, scan)?;
    let modes: Vec<AxialMode> = roots
        .iter()
        .enumerate()
        .map(|(k, &(xi2, _))| {
            let (psi, norm) = axial::eigenfunction(xi2, u, p, &radial, radial_factors.weight);
            AxialMode { k, xi2, nu: p.decay_rate(radial.mu, xi2), psi, norm }
        })
        .collect();

    let kk = modes.len();
    let rule = gl64();
    let h = p.cyl_length();
    let mut v1_gram = DMatrix::zeros(kk, kk);
    let mut v1_mean = DVector::zeros(kk);
    let mut face_diff = DVector::zeros(kk);
    for (z, w) in rule.mapped(p.z0, p.z1) {
        let vals: Vec<f64> = modes.iter().map(|m| m.psi.segment(Region::Controlled).value(z)).collect();
        for i in 0..kk {
            v1_mean[i] += w * vals[i] / h;
            for j in 0..kk {
                v1_gram[(i, j)] += w * vals[i] * vals[j];
            }
        }
    }
    for (i, m) in modes.iter().enumerate() {
        face_diff[i] = m.psi.one_sided(Region::Element, p.z0).0 - m.psi.one_sided(Region::Element, -p.z0).0;
    }
    let nodes: Vec<(Region, f64, f64)> = axial_nodes(p).collect();
    let node_weights = DVector::from_iterator(nodes.len(), nodes.iter().map(|n| n.2));
    let node_values = DMatrix::from_fn(kk, nodes.len(), |k, n| modes[k].psi.segment(nodes[n].0).value(nodes[n].1));
    Ok(AxialBasis {
        u,
        radial,
        radial_factors,
        modes,
        params: *p,
        v1_gram,
        v1_mean,
        face_diff,
        node_values,
        node_weights,
    })
}

/// Modal coefficients of a temperature field over a specific basis.
#[derive(Debug, Clone)]
pub struct ModalState {
    pub coeffs: Vec<f64>,
    pub basis: Arc<AxialBasis>,
    /// s.
    pub time: f64,
}

impl ModalState {
    pub fn zero(basis: Arc<AxialBasis>) -> Self {
        Self { coeffs: vec![0.0; basis.len()], basis, time: 0.0 }
    }

    pub fn new(coeffs: Vec<f64>, basis: Arc<AxialBasis>, time: f64) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(crate::Error::InvalidParameter(format!(
                "{} coefficients for a basis of {} modes",
                coeffs.len(),
                basis.len()
            )));
        }
        Ok(Self { coeffs, basis, time })
    }

    /// Weighted energy `sum c_k^2 N_k`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().zip(&self.basis.modes).map(|(c, m)| c * c * m.norm).sum()
    }

    pub fn v1_norm(&self) -> f64 {
        self.basis.v1_norm2(&self.coeffs).sqrt()
    }

    pub fn v1_average(&self) -> f64 {
        self.basis.v1_average(&self.coeffs)
    }

    pub fn face_jump(&self) -> f64 {
        self.basis.face_jump(&self.coeffs)
    }

    pub fn field(&self, r: f64, z: f64) -> f64 {
        self.basis.field_value(&self.coeffs, r, z)
    }
}

/// Weighted projection of an arbitrary axisymmetric field `f(r, z)`.
///
/// Tensor Gauss-Legendre quadrature, 64 nodes per axis and region; the radial
/// integral carries the `r` weight.
pub fn project(field: impl Fn(f64, f64) -> f64, basis: &Arc<AxialBasis>) -> ModalState {
    let p = &basis.params;
    let rule = gl64();
    let angular = if basis.radial.n == 0 { 2.0 * std::f64::consts::PI } else { std::f64::consts::PI };
    let radial: Vec<(f64, f64)> = rule
        .mapped(0.0, p.r1)
        .map(|(r, w)| (r, w * r * RadialFactors::profile(&basis.radial, p, r)))
        .collect();
    let mut out = vec![0.0; basis.len()];
    for reg in Region::ALL {
        let (a, b) = reg.bounds(p);
        let cap = reg.capacity(p);
        for (z, wz) in rule.mapped(a, b) {
            let fr: f64 = radial.iter().map(|&(r, wr)| wr * field(r, z)).sum();
            let s = angular * cap * wz * fr;
            for (o, m) in out.iter_mut().zip(&basis.modes) {
                *o += s * m.psi.segment(reg).value(z);
            }
        }
    }
    for (o, m) in out.iter_mut().zip(&basis.modes) {
        *o /= m.norm;
    }
    ModalState { coeffs: out, basis: Arc::clone(basis), time: 0.0 }
}

/// Re-expands a state into another basis of the same radial mode.
///
/// Returns the new state and the fraction of weighted energy not captured
/// by the target basis (0 for a zero state).
pub fn reexpand(state: &ModalState, target: &Arc<AxialBasis>) -> (ModalState, f64) {
    if Arc::ptr_eq(&state.basis, target) {
        return (state.clone(), 0.0);
    }
    debug_assert_eq!(state.basis.radial, target.radial);
    let src = &state.basis;
    let mut coeffs = vec![0.0; target.len()];
    for (j, cj) in coeffs.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, ci) in state.coeffs.iter().enumerate() {
            if *ci != 0.0 {
                acc += ci * src.weighted_overlap(i, target, j);
            }
        }
        *cj = acc / target.modes[j].norm;
    }
    let out = ModalState { coeffs, basis: Arc::clone(target), time: state.time };
    let e_src = state.energy();
    let residual = if e_src > 0.0 { (1.0 - out.energy() / e_src).clamp(0.0, 1.0) } else { 0.0 };
    (out, residual)
}

/// Overlap matrix `O[j][i] = <Xi_i^{src}, Xi_j^{tgt}> / N_j`.
pub fn overlap_matrix(src: &AxialBasis, target: &AxialBasis) -> DMatrix<f64> {
    DMatrix::from_fn(target.len(), src.len(), |j, i| {
        src.weighted_overlap(i, target, j) / target.modes[j].norm
    })
}

/// Characteristic times `-1 / nu_k`, longest first.
pub fn decay_times(basis: &AxialBasis) -> Vec<f64> {
    let mut t: Vec<f64> = basis.modes.iter().map(AxialMode::tau).collect();
    t.sort_by(|a, b| b.total_cmp(a));
    t
}
