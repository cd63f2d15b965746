//! Kinetic momenta of a particle in an external field on a square position
//! grid.
//!
//! `pi_mu = -i hbar (T_mu - T_mu^dagger) / 2a` where `T_mu` hops one site in
//! direction `mu` and carries the link phase
//! `exp(-i (2m/c)/hbar * int B_mu ds)` along the hop. With the phases, a
//! pure-gauge field is a unitary change of basis and its commutator vanishes
//! to rounding; sites outside the grid are zero.

use std::sync::Arc;

use super::{CVector, C64};
use crate::error::{Error, Result};
use crate::phase_space::PhysicalConstants;

type Potential = dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync;
type Curl = dyn Fn([f64; 2]) -> f64 + Send + Sync;

/// A static field `B(x)` with its curl `F12 = d1 B2 - d2 B1`.
#[derive(Clone)]
pub struct FieldProfile {
    label: String,
    potential: Arc<Potential>,
    curl: Arc<Curl>,
}

impl std::fmt::Debug for FieldProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldProfile").field("label", &self.label).finish()
    }
}

impl FieldProfile {
    pub fn new<P, F>(label: impl Into<String>, potential: P, curl: F) -> Self
    where
        P: Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
        F: Fn([f64; 2]) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            potential: Arc::new(potential),
            curl: Arc::new(curl),
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| [0.0, 0.0], |_| 0.0)
    }

    /// `B = (-b x2/2, b x1/2)`, uniform curl `b`.
    pub fn symmetric_gauge(b: f64) -> Self {
        Self::new("symmetric", move |x| [-0.5 * b * x[1], 0.5 * b * x[0]], move |_| b)
    }

    /// `B = grad(x1 x2) = (x2, x1)`.
    pub fn pure_gauge() -> Self {
        Self::new("pure_gauge", |x| [x[1], x[0]], |_| 0.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn potential(&self, x: [f64; 2]) -> [f64; 2] {
        (self.potential)(x)
    }

    pub fn curl(&self, x: [f64; 2]) -> f64 {
        (self.curl)(x)
    }
}

/// `exp(-|x - c|^2 / 2 w^2 + i k.x)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    pub center: [f64; 2],
    pub width: f64,
    pub wavevector: [f64; 2],
}

impl GaussianPacket {
    pub fn value(&self, x: [f64; 2]) -> C64 {
        let r2 = (x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2);
        let phase = self.wavevector[0] * x[0] + self.wavevector[1] * x[1];
        C64::from_polar((-r2 / (2.0 * self.width * self.width)).exp(), phase)
    }
}

/// The two kinetic momentum operators on an `n x n` grid centred at the
/// origin, applied matrix-free.
#[derive(Debug, Clone)]
pub struct GridMomenta {
    n: usize,
    spacing: f64,
    hbar: f64,
    /// Forward link phase per site and axis.
    links: [Vec<C64>; 2],
    field: [Vec<f64>; 2],
}

impl GridMomenta {
    pub fn new(profile: &FieldProfile, n: usize, spacing: f64, k: &PhysicalConstants) -> Result<Self> {
        if n < super::MIN_TRUNCATION {
            return Err(Error::Truncation(format!("grid of {n} points per axis is too small")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Domain(format!("grid spacing must be positive, got {spacing}")));
        }
        k.validate()?;
        let phase_scale = k.momentum_coupling() / k.hbar;
        let mut links = [Vec::with_capacity(n * n), Vec::with_capacity(n * n)];
        let mut field = [Vec::with_capacity(n * n), Vec::with_capacity(n * n)];
        let coord = |i: usize| (i as f64 - 0.5 * (n as f64 - 1.0)) * spacing;
        for i0 in 0..n {
            for i1 in 0..n {
                let x = [coord(i0), coord(i1)];
                let b = profile.potential(x);
                for mu in 0..2 {
                    field[mu].push(b[mu]);
                    let mut mid = x;
                    mid[mu] += 0.5 * spacing;
                    let mut end = x;
                    end[mu] += spacing;
                    let integral =
                        spacing / 6.0 * (b[mu] + 4.0 * profile.potential(mid)[mu] + profile.potential(end)[mu]);
                    links[mu].push(C64::from_polar(1.0, -phase_scale * integral));
                }
            }
        }
        Ok(Self {
            n,
            spacing,
            hbar: k.hbar,
            links,
            field,
        })
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn position(&self, idx: usize) -> [f64; 2] {
        let half = 0.5 * (self.n as f64 - 1.0);
        [
            ((idx / self.n) as f64 - half) * self.spacing,
            ((idx % self.n) as f64 - half) * self.spacing,
        ]
    }

    pub fn sample(&self, packet: &GaussianPacket) -> CVector {
        let v = CVector::from_fn(self.dim(), |i, _| packet.value(self.position(i)));
        let norm = v.norm();
        v / C64::new(norm, 0.0)
    }

    fn stride(&self, mu: usize) -> usize {
        if mu == 0 {
            self.n
        } else {
            1
        }
    }

    fn axis_index(&self, idx: usize, mu: usize) -> usize {
        if mu == 0 {
            idx / self.n
        } else {
            idx % self.n
        }
    }

    /// `pi_mu psi`.
    pub fn apply(&self, mu: usize, psi: &CVector) -> CVector {
        let s = self.stride(mu);
        let coeff = C64::new(0.0, -self.hbar / (2.0 * self.spacing));
        CVector::from_fn(self.dim(), |idx, _| {
            let i = self.axis_index(idx, mu);
            let mut acc = C64::new(0.0, 0.0);
            if i + 1 < self.n {
                acc += self.links[mu][idx] * psi[idx + s];
            }
            if i > 0 {
                acc -= self.links[mu][idx - s].conj() * psi[idx - s];
            }
            coeff * acc
        })
    }

    pub fn commutator(&self, psi: &CVector) -> CVector {
        self.apply(0, &self.apply(1, psi)) - self.apply(1, &self.apply(0, psi))
    }

    /// `B_mu psi` at the grid sites.
    pub fn apply_field(&self, mu: usize, psi: &CVector) -> CVector {
        CVector::from_fn(self.dim(), |idx, _| psi[idx] * self.field[mu][idx])
    }

    /// Largest `|psi|` on the outer ring relative to the largest overall.
    pub fn boundary_amplitude(&self, psi: &CVector) -> f64 {
        let peak = psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let edge = (0..self.dim())
            .filter(|&idx| {
                let (a, b) = (idx / self.n, idx % self.n);
                a == 0 || b == 0 || a == self.n - 1 || b == self.n - 1
            })
            .map(|idx| psi[idx].norm())
            .fold(0.0, f64::max);
        if peak > 0.0 {
            edge / peak
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureCheck {
    pub points_per_axis: usize,
    pub spacing: f64,
    /// `||[pi1, pi2] psi - i hbar (2m/c) F psi||` for normalized `psi`.
    pub defect: f64,
    /// `||i hbar (2m/c) F psi||`.
    pub reference: f64,
    pub commutator_norm: f64,
    /// `||B psi||` summed in quadrature over both components.
    pub field_norm: f64,
    pub boundary_amplitude: f64,
    /// Spacing comparable to the packet width or to the magnetic length.
    pub discretization_dominated: bool,
}

impl CurvatureCheck {
    /// `defect / reference`, or the bare defect when the reference vanishes.
    pub fn relative_error(&self) -> f64 {
        if self.reference > 0.0 {
            self.defect / self.reference
        } else {
            self.defect
        }
    }
}

/// Compares `[pi1, pi2] psi` with `i hbar (2m/c) F12(x) psi` for a Gaussian
/// test state on an `n x n` grid.
pub fn kinetic_momentum_curvature(
    profile: &FieldProfile,
    n: usize,
    spacing: f64,
    k: &PhysicalConstants,
    packet: &GaussianPacket,
) -> Result<CurvatureCheck> {
    let ops = GridMomenta::new(profile, n, spacing, k)?;
    let psi = ops.sample(packet);
    let comm = ops.commutator(&psi);
    let scale = C64::new(0.0, k.hbar * k.momentum_coupling());
    let mut max_phase: f64 = 0.0;
    let expected = CVector::from_fn(ops.dim(), |idx, _| {
        let f = profile.curl(ops.position(idx));
        max_phase = max_phase.max((k.momentum_coupling() * f * spacing * spacing / k.hbar).abs());
        scale * f * psi[idx]
    });
    let field_norm = (ops.apply_field(0, &psi).norm_squared() + ops.apply_field(1, &psi).norm_squared()).sqrt();
    Ok(CurvatureCheck {
        points_per_axis: n,
        spacing,
        defect: (&comm - &expected).norm(),
        reference: expected.norm(),
        commutator_norm: comm.norm(),
        field_norm,
        boundary_amplitude: ops.boundary_amplitude(&psi),
        discretization_dominated: spacing > 0.5 * packet.width || max_phase > 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fitted_order;

    fn constants() -> PhysicalConstants {
        PhysicalConstants::new(1.3, 2.0, 0.7, 0.8).unwrap()
    }

    fn packet() -> GaussianPacket {
        GaussianPacket {
            center: [0.1, -0.05],
            width: 0.9,
            wavevector: [0.0, 0.0],
        }
    }

    #[test]
    fn momenta_are_hermitian() {
        let k = constants();
        let ops = GridMomenta::new(&FieldProfile::symmetric_gauge(1.0), 9, 0.3, &k).unwrap();
        let d = ops.dim();
        let unit = |i: usize| CVector::from_fn(d, |r, _| C64::new(if r == i { 1.0 } else { 0.0 }, 0.0));
        for mu in 0..2 {
            for i in 0..d {
                let col = ops.apply(mu, &unit(i));
                for j in 0..d {
                    let back = ops.apply(mu, &unit(j))[i];
                    assert!((col[j] - back.conj()).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn free_momenta_commute() {
        let check = kinetic_momentum_curvature(&FieldProfile::zero(), 32, 0.2, &constants(), &packet()).unwrap();
        assert!(check.commutator_norm < 1e-12);
    }

    #[test]
    fn pure_gauge_commutator_vanishes() {
        let check = kinetic_momentum_curvature(&FieldProfile::pure_gauge(), 64, 0.1, &constants(), &packet()).unwrap();
        assert!(check.commutator_norm < 1e-8, "{check:?}");
        assert!(check.field_norm > 0.1);
    }

    #[test]
    fn uniform_field_commutator_on_a_small_grid() {
        let check =
            kinetic_momentum_curvature(&FieldProfile::symmetric_gauge(1.0), 64, 0.09, &constants(), &packet()).unwrap();
        assert!(check.relative_error() < 1e-2, "{check:?}");
        assert!(!check.discretization_dominated);
    }

    #[test]
    fn uniform_field_commutator_converges() {
        let k = constants();
        let steps = [0.1, 0.05, 0.025];
        let checks: Vec<CurvatureCheck> = steps
            .iter()
            .map(|&a| {
                let n = (9.6f64 / a).round() as usize;
                kinetic_momentum_curvature(&FieldProfile::symmetric_gauge(1.0), n, a, &k, &packet()).unwrap()
            })
            .collect();
        assert!(checks.iter().all(|c| c.boundary_amplitude < 1e-5));
        let errs: Vec<f64> = checks.iter().map(|c| c.relative_error()).collect();
        assert!(fitted_order(&steps, &errs) >= 1.9, "{errs:?}");
    }

    #[test]
    fn coarse_grids_are_flagged() {
        let check =
            kinetic_momentum_curvature(&FieldProfile::symmetric_gauge(1.0), 16, 0.5, &constants(), &packet()).unwrap();
        assert!(check.discretization_dominated);
        assert!(GridMomenta::new(&FieldProfile::zero(), 4, 0.1, &constants()).is_err());
    }
}
