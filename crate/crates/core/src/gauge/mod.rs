//! Abelian connection sampled on a uniform spatial lattice.
//!
//! Two independent discretizations live here. The covariant derivative
//! `D^mu = d^mu - (i/2m chi) B^mu` uses central differences, and curvature
//! is recovered from the commutator `[D^mu, D^nu] = -(i/2m chi) F^{mu nu}`.
//! Holonomy uses link exponentials around an elementary plaquette. Boundary
//! points (a one-cell margin on every axis) are never valid outputs.

pub mod io;

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::phase_space::PhysicalConstants;

/// Uniform grid with row-major point ordering (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    shape: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
}

impl Grid {
    /// Grid centred on the coordinate origin.
    pub fn new(shape: Vec<usize>, spacing: Vec<f64>) -> Result<Self> {
        let origin = shape
            .iter()
            .zip(&spacing)
            .map(|(&n, &a)| -0.5 * (n as f64 - 1.0) * a)
            .collect();
        Self::with_origin(shape, spacing, origin)
    }

    pub fn with_origin(shape: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::Domain("grid needs at least one axis".into()));
        }
        check_len("grid spacing", shape.len(), spacing.len())?;
        check_len("grid origin", shape.len(), origin.len())?;
        if let Some(&n) = shape.iter().find(|&&n| n < 3) {
            return Err(Error::Domain(format!(
                "every grid axis needs at least 3 points, got {n}"
            )));
        }
        if spacing.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::Domain("grid spacing must be finite and positive".into()));
        }
        Ok(Self { shape, spacing, origin })
    }

    /// Square `n^dim` grid with equal spacing, centred on the origin.
    pub fn cubic(dim: usize, n: usize, a: f64) -> Result<Self> {
        Self::new(vec![n; dim], vec![a; dim])
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, coords: &[usize]) -> Option<usize> {
        if coords.len() != self.ndim() {
            return None;
        }
        let mut idx = 0;
        for (&c, &n) in coords.iter().zip(&self.shape) {
            if c >= n {
                return None;
            }
            idx = idx * n + c;
        }
        Some(idx)
    }

    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.ndim()];
        for axis in (0..self.ndim()).rev() {
            out[axis] = idx % self.shape[axis];
            idx /= self.shape[axis];
        }
        out
    }

    pub fn position(&self, idx: usize) -> Vec<f64> {
        self.coords(idx)
            .iter()
            .enumerate()
            .map(|(axis, &c)| self.origin[axis] + c as f64 * self.spacing[axis])
            .collect()
    }

    fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    /// Neighbour one step along `axis` (`forward` or backward), if inside.
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let c = (idx / self.stride(axis)) % self.shape[axis];
        if forward && c + 1 < self.shape[axis] {
            Some(idx + self.stride(axis))
        } else if !forward && c > 0 {
            Some(idx - self.stride(axis))
        } else {
            None
        }
    }

    pub fn on_boundary(&self, idx: usize) -> bool {
        self.coords(idx)
            .iter()
            .zip(&self.shape)
            .any(|(&c, &n)| c == 0 || c + 1 == n)
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis < self.ndim() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "axis {axis} out of range for a {}-dimensional grid",
                self.ndim()
            )))
        }
    }
}

/// `B^mu(x)` at every grid point, `ndim` components per point.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeConnection {
    grid: Grid,
    values: Vec<f64>,
    constants: PhysicalConstants,
}

impl LatticeConnection {
    pub fn new(grid: Grid, values: Vec<f64>, constants: PhysicalConstants) -> Result<Self> {
        check_len("connection samples", grid.len() * grid.ndim(), values.len())?;
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        constants.validate()?;
        Ok(Self {
            grid,
            values,
            constants,
        })
    }

    /// Samples `profile(x)` (returning `ndim` components) at every point.
    pub fn from_fn<F>(grid: Grid, constants: PhysicalConstants, profile: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let mut values = Vec::with_capacity(grid.len() * grid.ndim());
        for idx in 0..grid.len() {
            let b = profile(&grid.position(idx));
            check_len("connection profile output", grid.ndim(), b.len())?;
            values.extend(b);
        }
        Self::new(grid, values, constants)
    }

    /// Symmetric gauge for a uniform field `F^{12} = b` in the first two axes.
    pub fn symmetric_gauge(grid: Grid, constants: PhysicalConstants, b: f64) -> Result<Self> {
        let n = grid.ndim();
        if n < 2 {
            return Err(Error::Domain("symmetric gauge needs at least two axes".into()));
        }
        Self::from_fn(grid, constants, |x| {
            let mut v = vec![0.0; n];
            v[0] = -0.5 * b * x[1];
            v[1] = 0.5 * b * x[0];
            v
        })
    }

    /// Pure gauge `B = grad(x^1 x^2)`: nonzero connection, zero curvature.
    pub fn pure_gauge(grid: Grid, constants: PhysicalConstants) -> Result<Self> {
        let n = grid.ndim();
        if n < 2 {
            return Err(Error::Domain("pure gauge profile needs at least two axes".into()));
        }
        Self::from_fn(grid, constants, |x| {
            let mut v = vec![0.0; n];
            v[0] = x[1];
            v[1] = x[0];
            v
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn component(&self, idx: usize, mu: usize) -> f64 {
        self.values[idx * self.grid.ndim() + mu]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Link phase `exp(-(i/2m chi) int B^mu dx^mu)` from `idx` to its forward
    /// neighbour along `mu`, the integral taken with the trapezoid rule.
    pub fn link(&self, idx: usize, mu: usize) -> Option<Complex64> {
        let next = self.grid.neighbor(idx, mu, true)?;
        let integral = 0.5 * (self.component(idx, mu) + self.component(next, mu)) * self.grid.spacing[mu];
        let phase = -self.constants.connection_coupling() * integral;
        Some(Complex64::from_polar(1.0, phase))
    }
}

/// Complex scalar field on a grid with a per-point validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
    valid: Vec<bool>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        check_len("complex field samples", grid.len(), values.len())?;
        let valid = vec![true; values.len()];
        Ok(Self { grid, values, valid })
    }

    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(grid: Grid, f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.position(i))).collect();
        let valid = vec![true; grid.len()];
        Self { grid, values, valid }
    }

    /// `exp(i k.x)`.
    pub fn plane_wave(grid: Grid, k: &[f64]) -> Result<Self> {
        check_len("plane wave vector", grid.ndim(), k.len())?;
        let k = k.to_vec();
        Ok(Self::from_fn(grid, move |x| {
            let phase: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum();
            Complex64::from_polar(1.0, phase)
        }))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.valid[idx]
    }

    pub fn get(&self, idx: usize) -> Option<Complex64> {
        self.valid[idx].then(|| self.values[idx])
    }

    /// Valid `(index, value)` pairs.
    pub fn valid_points(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.valid[*i])
            .map(|(i, v)| (i, *v))
    }
}

/// Default test field: a plane wave with `k = (1, ..., 1) * 0.03 / a`, of
/// unit modulus everywhere.
pub fn default_test_field(grid: &Grid) -> ComplexField {
    let k: Vec<f64> = grid.spacing().iter().map(|a| 0.03 / a).collect();
    ComplexField::plane_wave(grid.clone(), &k).expect("k has one entry per axis")
}

/// `(D^mu f)(x) = (f(x+a) - f(x-a))/2a - (i/2m chi) B^mu(x) f(x)`.
pub fn covariant_derivative(conn: &LatticeConnection, f: &ComplexField, mu: usize) -> Result<ComplexField> {
    let grid = conn.grid();
    grid.check_axis(mu)?;
    if f.grid() != grid {
        return Err(Error::Domain(
            "test field and connection live on different grids".into(),
        ));
    }
    let coupling = conn.constants().connection_coupling();
    let inv_2a = 0.5 / grid.spacing()[mu];
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut valid = vec![false; grid.len()];
    for idx in 0..grid.len() {
        if grid.on_boundary(idx) || !f.valid[idx] {
            continue;
        }
        let (Some(up), Some(down)) = (grid.neighbor(idx, mu, true), grid.neighbor(idx, mu, false)) else {
            continue;
        };
        if !(f.valid[up] && f.valid[down]) {
            continue;
        }
        let diff = (f.values[up] - f.values[down]) * inv_2a;
        let conn_term = Complex64::new(0.0, coupling * conn.component(idx, mu)) * f.values[idx];
        values[idx] = diff - conn_term;
        valid[idx] = true;
    }
    Ok(ComplexField {
        grid: grid.clone(),
        values,
        valid,
    })
}

/// Antisymmetric `F^{mu nu}` on the valid interior, stored for `mu < nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    grid: Grid,
    /// One entry per `mu < nu` pair, in lexicographic order; NaN where invalid.
    components: Vec<Vec<f64>>,
    valid: Vec<bool>,
    max_imaginary: f64,
}

impl CurvatureTensor {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn pair_slot(ndim: usize, mu: usize, nu: usize) -> usize {
        debug_assert!(mu < nu && nu < ndim);
        // pairs (0,1),(0,2),..,(0,n-1),(1,2),..
        mu * (2 * ndim - mu - 1) / 2 + (nu - mu - 1)
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.valid[idx]
    }

    /// `F^{mu nu}(x)`; `None` off the valid interior or for bad axes.
    pub fn get(&self, idx: usize, mu: usize, nu: usize) -> Option<f64> {
        let n = self.grid.ndim();
        if mu >= n || nu >= n || !self.valid[idx] {
            return None;
        }
        Some(match mu.cmp(&nu) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.components[Self::pair_slot(n, mu, nu)][idx],
            std::cmp::Ordering::Greater => -self.components[Self::pair_slot(n, nu, mu)][idx],
        })
    }

    pub fn valid_points(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.valid.len()).filter(|&i| self.valid[i])
    }

    /// Max of `|F^{mu nu}|` over all valid points and pairs.
    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| self.valid_points().map(move |i| c[i].abs()))
            .fold(0.0, f64::max)
    }

    /// Largest imaginary part met when solving the commutator for `F`; it
    /// vanishes in the continuum and measures discretization noise.
    pub fn max_imaginary(&self) -> f64 {
        self.max_imaginary
    }

    /// Raw storage for the `mu < nu` pairs.
    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }
}

/// Recovers `F^{mu nu}` pointwise from `[D^mu, D^nu] f = -(i/2m chi) F^{mu nu} f`.
pub fn curvature_from_commutator(conn: &LatticeConnection, f: &ComplexField) -> Result<CurvatureTensor> {
    let grid = conn.grid();
    let n = grid.ndim();
    if n < 2 {
        return Err(Error::Domain("curvature needs at least two axes".into()));
    }
    let coupling = conn.constants().connection_coupling();
    let first: Vec<ComplexField> = (0..n)
        .map(|mu| covariant_derivative(conn, f, mu))
        .collect::<Result<_>>()?;
    let mut components = Vec::with_capacity(n * (n - 1) / 2);
    let mut valid = vec![true; grid.len()];
    let mut max_imaginary: f64 = 0.0;
    for mu in 0..n {
        for nu in mu + 1..n {
            let d_mu_nu = covariant_derivative(conn, &first[nu], mu)?;
            let d_nu_mu = covariant_derivative(conn, &first[mu], nu)?;
            let mut comp = vec![f64::NAN; grid.len()];
            for idx in 0..grid.len() {
                if !(d_mu_nu.valid[idx] && d_nu_mu.valid[idx]) {
                    valid[idx] = false;
                    continue;
                }
                let fx = f.values[idx];
                if fx.norm() <= 1e-12 {
                    return Err(Error::DegenerateTestField {
                        point: grid.coords(idx),
                    });
                }
                let comm = d_mu_nu.values[idx] - d_nu_mu.values[idx];
                // comm = -i * coupling * F * f
                let solved = comm * Complex64::i() / (coupling * fx);
                max_imaginary = max_imaginary.max(solved.im.abs());
                comp[idx] = solved.re;
            }
            components.push(comp);
        }
    }
    for comp in &mut components {
        for (idx, v) in comp.iter_mut().enumerate() {
            if !valid[idx] {
                *v = f64::NAN;
            }
        }
    }
    Ok(CurvatureTensor {
        grid: grid.clone(),
        components,
        valid,
        max_imaginary,
    })
}

/// Product of link phases around the plaquette spanned by `mu`, `nu` at
/// `point`: `U_mu(x) U_nu(x+mu) U_mu(x+nu)^* U_nu(x)^*`.
pub fn plaquette_holonomy(conn: &LatticeConnection, point: &[usize], mu: usize, nu: usize) -> Result<Complex64> {
    let grid = conn.grid();
    grid.check_axis(mu)?;
    grid.check_axis(nu)?;
    if mu == nu {
        return Err(Error::Domain("plaquette needs two distinct axes".into()));
    }
    let outside = || Error::OutsideGrid(format!("plaquette at {point:?} along ({mu}, {nu}) leaves the grid"));
    let x = grid.index(point).ok_or_else(outside)?;
    let x_mu = grid.neighbor(x, mu, true).ok_or_else(outside)?;
    let x_nu = grid.neighbor(x, nu, true).ok_or_else(outside)?;
    let u1 = conn.link(x, mu).ok_or_else(outside)?;
    let u2 = conn.link(x_mu, nu).ok_or_else(outside)?;
    let u3 = conn.link(x_nu, mu).ok_or_else(outside)?;
    let u4 = conn.link(x, nu).ok_or_else(outside)?;
    Ok(u1 * u2 * u3.conj() * u4.conj())
}
