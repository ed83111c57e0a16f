//! Piecewise axial profiles over the three material regions.

use crate::model::SystemParams;

use super::quadrature::gl64;

/// Material regions along the axis, bottom to top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Heat-sink cylinder, `[-z1, -z0]`.
    HeatSink = 0,
    /// Peltier element, `[-z0, z0]`.
    Element = 1,
    /// Controlled cylinder, `[z0, z1]`.
    Controlled = 2,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::HeatSink, Region::Element, Region::Controlled];

    pub fn bounds(self, p: &SystemParams) -> (f64, f64) {
        match self {
            Region::HeatSink => (-p.z1, -p.z0),
            Region::Element => (-p.z0, p.z0),
            Region::Controlled => (p.z0, p.z1),
        }
    }

    /// Volumetric heat capacity `c rho` of the region.
    pub fn capacity(self, p: &SystemParams) -> f64 {
        match self {
            Region::Element => p.heat_capacity_p(),
            _ => p.heat_capacity_a(),
        }
    }

    pub fn conductivity(self, p: &SystemParams) -> f64 {
        match self {
            Region::Element => p.lambda_p,
            _ => p.lambda_a,
        }
    }
}

/// Fundamental solution pair of `psi'' = -kappa^2 psi` in one region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pair {
    /// `kappa^2 > 0`: `cos(k x)`, `sin(k x) / k`.
    Trig(f64),
    /// `kappa^2 < 0`: `cosh(k x)`, `sinh(k x) / k`.
    Hyperbolic(f64),
    /// `kappa^2 = 0`: `1`, `x`.
    Linear,
}

impl Pair {
    pub fn from_kappa2(kappa2: f64) -> Self {
        if kappa2 > 0.0 {
            Pair::Trig(kappa2.sqrt())
        } else if kappa2 < 0.0 {
            Pair::Hyperbolic((-kappa2).sqrt())
        } else {
            Pair::Linear
        }
    }

    /// `(C, S, C', S')` at local coordinate `x`, normalized so that
    /// `C(0) = 1, C'(0) = 0, S(0) = 0, S'(0) = 1`.
    #[inline]
    pub fn eval(self, x: f64) -> (f64, f64, f64, f64) {
        match self {
            Pair::Trig(k) => {
                let (s, c) = (k * x).sin_cos();
                (c, s / k, -k * s, c)
            }
            Pair::Hyperbolic(k) => {
                let kx = k * x;
                let (s, c) = (kx.sinh(), kx.cosh());
                (c, s / k, k * s, c)
            }
            Pair::Linear => (1.0, x, 0.0, 1.0),
        }
    }
}

/// `psi(z) = offset + quad x^2 + a C(x) + b S(x)` with `x = z - start`.
///
/// Eigenfunctions use `offset = quad = 0`; steady profiles carry the particular
/// solution of the constant sources in `offset` (cylinders) or `quad` (element).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub pair: Pair,
    pub a: f64,
    pub b: f64,
    pub offset: f64,
    pub quad: f64,
}

impl Segment {
    pub fn homogeneous(start: f64, end: f64, pair: Pair, a: f64, b: f64) -> Self {
        Self { start, end, pair, a, b, offset: 0.0, quad: 0.0 }
    }

    #[inline]
    pub fn value_slope(&self, z: f64) -> (f64, f64) {
        let x = z - self.start;
        let (c, s, dc, ds) = self.pair.eval(x);
        (
            self.offset + self.quad * x * x + self.a * c + self.b * s,
            2.0 * self.quad * x + self.a * dc + self.b * ds,
        )
    }

    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        self.value_slope(z).0
    }

    /// `(psi, psi')` at the right end.
    pub fn end_state(&self) -> (f64, f64) {
        self.value_slope(self.end)
    }

    fn scaled(&self, f: f64) -> Self {
        Self {
            a: self.a * f,
            b: self.b * f,
            offset: self.offset * f,
            quad: self.quad * f,
            ..*self
        }
    }
}

/// A function of `z` on `[-z1, z1]` defined region by region.
#[derive(Debug, Clone, PartialEq)]
pub struct AxialProfile {
    pub segments: [Segment; 3],
}

impl AxialProfile {
    pub fn segment(&self, region: Region) -> &Segment {
        &self.segments[region as usize]
    }

    fn locate(&self, z: f64) -> &Segment {
        if z < self.segments[1].start {
            &self.segments[0]
        } else if z <= self.segments[1].end {
            &self.segments[1]
        } else {
            &self.segments[2]
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        self.locate(z).value(z)
    }

    pub fn slope(&self, z: f64) -> f64 {
        self.locate(z).value_slope(z).1
    }

    /// One-sided `(psi, psi')` at `z` evaluated with the given region's formula.
    pub fn one_sided(&self, region: Region, z: f64) -> (f64, f64) {
        self.segment(region).value_slope(z)
    }

    pub fn scale(&mut self, f: f64) {
        for s in &mut self.segments {
            *s = s.scaled(f);
        }
    }

    /// `int_region w(z) g(psi(z), z) dz` by 64-point Gauss-Legendre.
    pub fn integrate(&self, region: Region, mut g: impl FnMut(f64, f64) -> f64) -> f64 {
        let seg = self.segment(region);
        gl64().integrate(seg.start, seg.end, |z| g(seg.value(z), z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_derivatives_are_consistent() {
        for pair in [Pair::Trig(3.0), Pair::Hyperbolic(2.0), Pair::Linear] {
            let h = 1e-6;
            let x = 0.37;
            let (c0, s0, dc, ds) = pair.eval(x);
            let (c1, s1, _, _) = pair.eval(x + h);
            let (cm, sm, _, _) = pair.eval(x - h);
            assert!(((c1 - cm) / (2.0 * h) - dc).abs() < 1e-7);
            assert!(((s1 - sm) / (2.0 * h) - ds).abs() < 1e-7);
            let (c, s, dcz, dsz) = pair.eval(0.0);
            assert_eq!((c, s, dcz, dsz), (1.0, 0.0, 0.0, 1.0));
            let _ = (c0, s0);
        }
    }

    #[test]
    fn degenerate_kappa_uses_linear_pair() {
        assert_eq!(Pair::from_kappa2(0.0), Pair::Linear);
        assert!(matches!(Pair::from_kappa2(-4.0), Pair::Hyperbolic(k) if k == 2.0));
    }
}
