//! Time evolution of the particle plus field-mode system in either kinetic
//! chart.
//!
//! The Hamiltonian is `H = K(pi) + 1/2 sum_mu g_mu (piB_mu^2 + w0^2 B_mu^2)`
//! with `pi = p - (2m/c) B`. The particle term `K` and the harmonic mode are
//! stand-ins; only their dependence on the kinetic momentum is structural.
//!
//! A chart stores its variables as four blocks `[x, B, y, piB]`:
//!
//! | chart                  | x   | y    |
//! |------------------------|-----|------|
//! | [`Chart::Canonical`]   | `q` | `p`  |
//! | [`Chart::QPi`]         | `q` | `pi` |
//! | [`Chart::KinQP`]       | `Q` | `p`  |
//!
//! Each chart carries the Poisson tensor induced by the canonical brackets.
//! Besides `{x, y} = {B, piB} = g` the kinetic charts have one cross entry:
//! `{pi, piB} = -(2m/c) g` in `(q, pi)` and `{Q, B} = (c/2m) g` in `(Q, p)`.
//!
//! The integrator splits `H` into the particle term, the field kinetic term
//! and the field potential term. Each piece generates a flow along which its
//! own vector field is constant, so a single explicit update is its exact
//! flow in any linear chart. The symmetric composition
//! `P(dt/2) T(dt/2) V(dt) T(dt/2) P(dt/2)` is second order, symplectic and
//! reversible.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::brackets::SymplecticMatrix;
use crate::error::{check_len, Error, Result};
use crate::phase_space::{ExtendedState, KineticChart, Metric, PhysicalConstants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParticleKinetic {
    /// `g(pi, pi) / 2m`
    #[default]
    Nonrelativistic,
    /// `c sqrt(g(pi, pi) + m^2 c^2)`
    Relativistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemHamiltonian {
    metric: Metric,
    constants: PhysicalConstants,
    omega0: f64,
    kinetic: ParticleKinetic,
}

impl SystemHamiltonian {
    pub fn new(metric: Metric, constants: PhysicalConstants, omega0: f64) -> Result<Self> {
        constants.validate()?;
        if !(omega0 >= 0.0 && omega0.is_finite()) {
            return Err(Error::Domain(format!(
                "mode frequency must be finite and >= 0, got {omega0}"
            )));
        }
        Ok(Self {
            metric,
            constants,
            omega0,
            kinetic: ParticleKinetic::Nonrelativistic,
        })
    }

    pub fn with_kinetic(mut self, kinetic: ParticleKinetic) -> Self {
        self.kinetic = kinetic;
        self
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn kinetic(&self) -> ParticleKinetic {
        self.kinetic
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn particle_energy(&self, pi: &[f64]) -> f64 {
        let (m, c) = (self.constants.m, self.constants.c);
        let sq = self.metric.dot(pi, pi);
        match self.kinetic {
            ParticleKinetic::Nonrelativistic => sq / (2.0 * m),
            ParticleKinetic::Relativistic => c * (sq + m * m * c * c).sqrt(),
        }
    }

    /// `dK/dpi^mu` (index lowered by the metric).
    pub fn particle_gradient(&self, pi: &[f64]) -> Vec<f64> {
        let (m, c) = (self.constants.m, self.constants.c);
        let g = self.metric.signature();
        let scale = match self.kinetic {
            ParticleKinetic::Nonrelativistic => 1.0 / m,
            ParticleKinetic::Relativistic => c / (self.metric.dot(pi, pi) + m * m * c * c).sqrt(),
        };
        pi.iter().zip(g).map(|(p, s)| s * p * scale).collect()
    }

    pub fn field_energy(&self, b: &[f64], pi_b: &[f64]) -> f64 {
        0.5 * (self.metric.dot(pi_b, pi_b) + self.omega0 * self.omega0 * self.metric.dot(b, b))
    }

    /// `H` on canonical variables; the particle term goes through the pullback.
    pub fn energy(&self, s: &ExtendedState) -> Result<f64> {
        check_len("hamiltonian state", self.dim(), s.dim())?;
        let pi = crate::phase_space::pullback_momentum(&s.p, &s.b, &self.constants)?;
        Ok(self.particle_energy(&pi) + self.field_energy(&s.b, &s.pi_b))
    }

    /// `H` on the kinetic chart image of a state.
    pub fn energy_kinetic(&self, chart: &KineticChart, b: &[f64], pi_b: &[f64]) -> Result<f64> {
        check_len("hamiltonian chart", self.dim(), chart.momentum.len())?;
        Ok(self.particle_energy(&chart.momentum) + self.field_energy(b, pi_b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chart {
    /// `(q, B, p, piB)`
    Canonical,
    /// `(q, B, pi, piB)`
    QPi,
    /// `(Q, B, p, piB)`
    KinQP,
}

const X: usize = 0;
const FB: usize = 1;
const Y: usize = 2;
const FPI: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    Particle,
    FieldKinetic,
    FieldPotential,
}

impl Chart {
    pub fn label(self) -> &'static str {
        match self {
            Chart::Canonical => "q_p",
            Chart::QPi => "q_pi",
            Chart::KinQP => "Q_p",
        }
    }

    /// Chart variables `[x, B, y, piB]` of a state.
    pub fn encode(self, s: &ExtendedState, k: &PhysicalConstants) -> Result<Vec<f64>> {
        let x = match self {
            Chart::Canonical | Chart::QPi => s.q.clone(),
            Chart::KinQP => crate::phase_space::pullback_coordinate(&s.q, &s.pi_b, k)?,
        };
        let y = match self {
            Chart::Canonical | Chart::KinQP => s.p.clone(),
            Chart::QPi => crate::phase_space::pullback_momentum(&s.p, &s.b, k)?,
        };
        let mut out = x;
        out.extend_from_slice(&s.b);
        out.extend(y);
        out.extend_from_slice(&s.pi_b);
        Ok(out)
    }

    pub fn decode(self, v: &[f64], k: &PhysicalConstants) -> Result<ExtendedState> {
        let flat = ExtendedState::from_flat(v)?;
        // from_flat reads [q, B, p, piB]; reinterpret the x and y blocks
        let (x, b, y, pi_b) = (flat.q, flat.b, flat.p, flat.pi_b);
        let (q, p) = match self {
            Chart::Canonical => (x, y),
            Chart::QPi => {
                let kappa = k.momentum_coupling();
                let p = y.iter().zip(&b).map(|(pi, b)| pi + kappa * b).collect();
                (x, p)
            }
            Chart::KinQP => {
                let lambda = k.coordinate_coupling();
                let q = x.iter().zip(&pi_b).map(|(cq, w)| cq + lambda * w).collect();
                (q, y)
            }
        };
        Ok(ExtendedState { q, p, b, pi_b })
    }

    /// Nonzero block couplings `(a, b, c)` meaning `{block_a, block_b} = c g`.
    fn couplings(self, k: &PhysicalConstants) -> Vec<(usize, usize, f64)> {
        let mut out = vec![(X, Y, 1.0), (FB, FPI, 1.0)];
        match self {
            Chart::Canonical => {}
            Chart::QPi => out.push((Y, FPI, -k.momentum_coupling())),
            Chart::KinQP => out.push((X, FB, k.coordinate_coupling())),
        }
        out
    }

    /// Dense Poisson tensor of the chart variables.
    pub fn poisson_tensor(self, metric: &Metric, k: &PhysicalConstants) -> DMatrix<f64> {
        let n = metric.dim();
        let mut t = DMatrix::zeros(4 * n, 4 * n);
        for (a, b, c) in self.couplings(k) {
            for mu in 0..n {
                let v = c * metric.signature()[mu];
                t[(a * n + mu, b * n + mu)] = v;
                t[(b * n + mu, a * n + mu)] = -v;
            }
        }
        t
    }

    fn apply_poisson(self, grad: &[f64], metric: &Metric, k: &PhysicalConstants) -> Vec<f64> {
        let n = metric.dim();
        let g = metric.signature();
        let mut out = vec![0.0; 4 * n];
        for (a, b, c) in self.couplings(k) {
            for mu in 0..n {
                out[a * n + mu] += c * g[mu] * grad[b * n + mu];
                out[b * n + mu] -= c * g[mu] * grad[a * n + mu];
            }
        }
        out
    }

    fn piece_gradient(self, piece: Piece, v: &[f64], h: &SystemHamiltonian) -> Vec<f64> {
        let n = h.dim();
        let g = h.metric.signature();
        let block = |i: usize| &v[i * n..(i + 1) * n];
        let mut grad = vec![0.0; 4 * n];
        match piece {
            Piece::Particle => {
                let kappa = h.constants.momentum_coupling();
                let pi: Vec<f64> = match self {
                    Chart::QPi => block(Y).to_vec(),
                    Chart::Canonical | Chart::KinQP => {
                        block(Y).iter().zip(block(FB)).map(|(p, b)| p - kappa * b).collect()
                    }
                };
                let dk = h.particle_gradient(&pi);
                for mu in 0..n {
                    grad[Y * n + mu] = dk[mu];
                    if self != Chart::QPi {
                        grad[FB * n + mu] = -kappa * dk[mu];
                    }
                }
            }
            Piece::FieldKinetic => {
                for mu in 0..n {
                    grad[FPI * n + mu] = g[mu] * block(FPI)[mu];
                }
            }
            Piece::FieldPotential => {
                let w2 = h.omega0 * h.omega0;
                for mu in 0..n {
                    grad[FB * n + mu] = w2 * g[mu] * block(FB)[mu];
                }
            }
        }
        grad
    }

    /// Time derivative of the chart variables under the full Hamiltonian.
    pub fn velocity(self, v: &[f64], h: &SystemHamiltonian) -> Vec<f64> {
        let mut grad = vec![0.0; v.len()];
        for piece in [Piece::Particle, Piece::FieldKinetic, Piece::FieldPotential] {
            for (acc, d) in grad.iter_mut().zip(self.piece_gradient(piece, v, h)) {
                *acc += d;
            }
        }
        self.apply_poisson(&grad, &h.metric, &h.constants)
    }
}

/// Second-order symmetric splitting integrator working in one chart.
#[derive(Debug, Clone)]
pub struct Integrator<'a> {
    chart: Chart,
    hamiltonian: &'a SystemHamiltonian,
}

impl<'a> Integrator<'a> {
    pub fn new(chart: Chart, hamiltonian: &'a SystemHamiltonian) -> Self {
        Self { chart, hamiltonian }
    }

    fn sub_flow(&self, v: &mut [f64], piece: Piece, tau: f64) {
        let grad = self.chart.piece_gradient(piece, v, self.hamiltonian);
        let vel = self
            .chart
            .apply_poisson(&grad, &self.hamiltonian.metric, &self.hamiltonian.constants);
        for (x, d) in v.iter_mut().zip(vel) {
            *x += tau * d;
        }
    }

    /// One step of size `dt` (negative `dt` integrates backwards and inverts
    /// a forward step).
    pub fn step(&self, v: &mut [f64], dt: f64) {
        let half = 0.5 * dt;
        self.sub_flow(v, Piece::Particle, half);
        self.sub_flow(v, Piece::FieldKinetic, half);
        self.sub_flow(v, Piece::FieldPotential, dt);
        self.sub_flow(v, Piece::FieldKinetic, half);
        self.sub_flow(v, Piece::Particle, half);
    }

    /// Advances chart variables `n` steps; errors on the first non-finite state.
    pub fn advance(&self, v: &mut [f64], dt: f64, n: usize) -> Result<()> {
        for step in 1..=n {
            self.step(v, dt);
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Divergence { step });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ExtendedState>,
    pub chart: Chart,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&ExtendedState> {
        self.states.last()
    }

    pub fn energies(&self, h: &SystemHamiltonian) -> Result<Vec<f64>> {
        self.states.iter().map(|s| h.energy(s)).collect()
    }

    /// `max_t |H(t) - H(0)| / |H(0)|`.
    pub fn max_relative_energy_drift(&self, h: &SystemHamiltonian) -> Result<f64> {
        let e = self.energies(h)?;
        let e0 = e.first().copied().unwrap_or(0.0);
        let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
        Ok(e.iter().map(|x| (x - e0).abs() / scale).fold(0.0, f64::max))
    }

    /// Largest componentwise difference from another trajectory.
    pub fn max_difference(&self, other: &Trajectory) -> Result<f64> {
        check_len("trajectory length", self.len(), other.len())?;
        let mut worst: f64 = 0.0;
        for (a, b) in self.states.iter().zip(&other.states) {
            for (x, y) in a.to_flat().iter().zip(b.to_flat()) {
                worst = worst.max((x - y).abs());
            }
        }
        Ok(worst)
    }

    /// CSV with columns `t, q.., p.., B.., piB.., Q.., pi.., H`.
    pub fn to_csv(&self, h: &SystemHamiltonian) -> Result<String> {
        let n = h.dim();
        let k = h.constants();
        let mut cols = vec!["t".to_string()];
        for name in ["q", "p", "B", "piB", "Q", "pi"] {
            cols.extend((0..n).map(|mu| format!("{name}{mu}")));
        }
        cols.push("H".into());
        let mut out = cols.join(",");
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let kc = KineticChart::from_state(s, k)?;
            let _ = write!(out, "{t:e}");
            for v in
                s.q.iter()
                    .chain(&s.p)
                    .chain(&s.b)
                    .chain(&s.pi_b)
                    .chain(&kc.coordinate)
                    .chain(&kc.momentum)
            {
                let _ = write!(out, ",{v:e}");
            }
            let _ = writeln!(out, ",{:e}", h.energy(s)?);
        }
        Ok(out)
    }
}

fn check_step(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "time step must be finite and positive, got {dt}"
        )))
    }
}

/// Integrates `n` steps of size `dt` in the given chart and records every
/// step as a canonical state.
pub fn evolve(chart: Chart, h: &SystemHamiltonian, s0: &ExtendedState, dt: f64, n: usize) -> Result<Trajectory> {
    check_step(dt)?;
    check_len("initial state", h.dim(), s0.dim())?;
    if !s0.is_finite() {
        return Err(Error::Divergence { step: 0 });
    }
    let k = h.constants();
    let integrator = Integrator::new(chart, h);
    let mut v = chart.encode(s0, k)?;
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(0.0);
    states.push(s0.clone());
    for step in 1..=n {
        integrator.step(&mut v, dt);
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { step });
        }
        times.push(step as f64 * dt);
        states.push(chart.decode(&v, k)?);
    }
    Ok(Trajectory { times, states, chart })
}

/// Evolution in the `(q, pi)` chart.
pub fn evolve_q_pi(h: &SystemHamiltonian, s0: &ExtendedState, dt: f64, n: usize) -> Result<Trajectory> {
    evolve(Chart::QPi, h, s0, dt, n)
}

/// Evolution in the `(Q, p)` chart.
pub fn evolve_kq_p(h: &SystemHamiltonian, s0: &ExtendedState, dt: f64, n: usize) -> Result<Trajectory> {
    evolve(Chart::KinQP, h, s0, dt, n)
}

/// Default difference step for the flow Jacobian.
pub const JACOBIAN_STEP: f64 = 1e-3;

/// `max |J^T omega J - omega|` for the `n`-step map in the `(q, pi)` chart,
/// with `J` the flow Jacobian in canonical variables.
pub fn symplecticity_check(h: &SystemHamiltonian, s0: &ExtendedState, dt: f64, n: usize) -> Result<f64> {
    symplecticity_defect(Chart::QPi, h, s0, dt, n, JACOBIAN_STEP)
}

pub fn symplecticity_defect(
    chart: Chart,
    h: &SystemHamiltonian,
    s0: &ExtendedState,
    dt: f64,
    n: usize,
    fd_step: f64,
) -> Result<f64> {
    check_step(dt)?;
    check_len("initial state", h.dim(), s0.dim())?;
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(Error::Domain(format!("jacobian step must be positive, got {fd_step}")));
    }
    let k = h.constants();
    let integrator = Integrator::new(chart, h);
    let flow = |z: &[f64]| -> Result<Vec<f64>> {
        let mut v = chart.encode(&ExtendedState::from_flat(z)?, k)?;
        integrator.advance(&mut v, dt, n)?;
        Ok(chart.decode(&v, k)?.to_flat())
    };
    let z0 = s0.to_flat();
    let dim = z0.len();
    let mut jac = DMatrix::zeros(dim, dim);
    let mut probe = z0.clone();
    for j in 0..dim {
        probe[j] = z0[j] + fd_step;
        let up = flow(&probe)?;
        probe[j] = z0[j] - fd_step;
        let down = flow(&probe)?;
        probe[j] = z0[j];
        for i in 0..dim {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * fd_step);
        }
    }
    let omega = SymplecticMatrix::extended(h.metric()).form().clone();
    let defect = jac.transpose() * &omega * &jac - &omega;
    Ok(defect.amax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brackets::{BracketEngine, PhaseFunction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constants() -> PhysicalConstants {
        PhysicalConstants::new(1.3, 2.0, 0.7, 0.8).unwrap()
    }

    fn coupled() -> SystemHamiltonian {
        SystemHamiltonian::new(Metric::euclidean(2), constants(), 1.0).unwrap()
    }

    fn random_state(rng: &mut ChaCha8Rng) -> ExtendedState {
        let mut v = || (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>();
        ExtendedState::new(v(), v(), v(), v()).unwrap()
    }

    /// Canonical equations written out by hand, for the RK4 reference.
    fn canonical_rhs(z: &[f64], m: f64, kappa: f64, w0: f64) -> Vec<f64> {
        let n = z.len() / 4;
        let mut d = vec![0.0; z.len()];
        for mu in 0..n {
            let (b, p, w) = (z[n + mu], z[2 * n + mu], z[3 * n + mu]);
            let pi = p - kappa * b;
            d[mu] = pi / m;
            d[n + mu] = w;
            d[2 * n + mu] = 0.0;
            d[3 * n + mu] = kappa * pi / m - w0 * w0 * b;
        }
        d
    }

    fn rk4(z0: &[f64], dt: f64, steps: usize, m: f64, kappa: f64, w0: f64) -> Vec<f64> {
        let mut z = z0.to_vec();
        let add = |a: &[f64], b: &[f64], s: f64| a.iter().zip(b).map(|(x, y)| x + s * y).collect::<Vec<_>>();
        for _ in 0..steps {
            let k1 = canonical_rhs(&z, m, kappa, w0);
            let k2 = canonical_rhs(&add(&z, &k1, dt / 2.0), m, kappa, w0);
            let k3 = canonical_rhs(&add(&z, &k2, dt / 2.0), m, kappa, w0);
            let k4 = canonical_rhs(&add(&z, &k3, dt), m, kappa, w0);
            for i in 0..z.len() {
                z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        z
    }

    #[test]
    fn energy_is_chart_independent() {
        let h = coupled();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let s = random_state(&mut rng);
            let chart = KineticChart::from_state(&s, h.constants()).unwrap();
            let a = h.energy(&s).unwrap();
            let b = h.energy_kinetic(&chart, &s.b, &s.pi_b).unwrap();
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }

    #[test]
    fn chart_encoding_round_trips() {
        let k = constants();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_state(&mut rng);
        for chart in [Chart::Canonical, Chart::QPi, Chart::KinQP] {
            let back = chart.decode(&chart.encode(&s, &k).unwrap(), &k).unwrap();
            for (a, b) in back.to_flat().iter().zip(s.to_flat()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn chart_tensors_match_numerical_brackets() {
        let k = constants();
        let metric = Metric::new(vec![-1.0, 1.0]).unwrap();
        let engine = BracketEngine::new(&metric, 1e-5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(&mut rng);
        for chart in [Chart::Canonical, Chart::QPi, Chart::KinQP] {
            let t = chart.poisson_tensor(&metric, &k);
            let coord = |i: usize| {
                PhaseFunction::new(format!("v{i}"), move |st: &ExtendedState| {
                    chart.encode(st, &k).unwrap()[i]
                })
            };
            for i in 0..8 {
                for j in 0..8 {
                    let v = engine.bracket(&coord(i), &coord(j), &s).unwrap();
                    assert!(
                        (v - t[(i, j)]).abs() < 1e-8,
                        "{chart:?} ({i},{j}): {v} vs {}",
                        t[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn chart_velocity_matches_canonical_equations() {
        let h = coupled();
        let k = *h.constants();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_state(&mut rng);
        let z = s.to_flat();
        let want = canonical_rhs(&z, k.m, k.momentum_coupling(), h.omega0());
        let got = Chart::Canonical.velocity(&z, &h);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn free_particle_moves_in_straight_lines() {
        // c large: the field decouples and, started at rest, stays at zero
        let k = PhysicalConstants::new(1.3, 1e12, 1.0, 1.0).unwrap();
        let h = SystemHamiltonian::new(Metric::euclidean(2), k, 0.0).unwrap();
        let s0 = ExtendedState::new(vec![0.2, -0.4], vec![0.7, 0.3], vec![0.0; 2], vec![0.0; 2]).unwrap();
        let traj = evolve_q_pi(&h, &s0, 1e-2, 500).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            for mu in 0..2 {
                let want = s0.q[mu] + s0.p[mu] / 1.3 * t;
                assert!((s.q[mu] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decoupled_field_mode_oscillates() {
        let k = PhysicalConstants::new(1.0, 1e12, 1.0, 1.0).unwrap();
        let h = SystemHamiltonian::new(Metric::euclidean(1), k, 1.0).unwrap();
        let s0 = ExtendedState::new(vec![0.0], vec![0.0], vec![0.6], vec![-0.3]).unwrap();
        let mut errs = Vec::new();
        for dt in [2e-2, 1e-2] {
            let n = (2.0 / dt) as usize;
            let traj = evolve_q_pi(&h, &s0, dt, n).unwrap();
            let err = traj
                .times
                .iter()
                .zip(&traj.states)
                .map(|(t, s)| (s.b[0] - (0.6 * t.cos() - 0.3 * t.sin())).abs())
                .fold(0.0, f64::max);
            assert!(err < dt * dt);
            errs.push(err);
        }
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn coupled_energy_drift_and_reference_agreement() {
        let h = coupled();
        let k = *h.constants();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s0 = random_state(&mut rng);
        let traj = evolve_q_pi(&h, &s0, 1e-3, 1000).unwrap();
        assert!(traj.max_relative_energy_drift(&h).unwrap() < 1e-5);
        let reference = rk4(&s0.to_flat(), 1e-5, 100_000, k.m, k.momentum_coupling(), h.omega0());
        let end = traj.last().unwrap().to_flat();
        let gap = end
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-5, "{gap}");
    }

    #[test]
    fn dual_charts_agree() {
        let h = coupled();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let s0 = random_state(&mut rng);
            let a = evolve_q_pi(&h, &s0, 1e-3, 1000).unwrap();
            let b = evolve_kq_p(&h, &s0, 1e-3, 1000).unwrap();
            let d = a.max_difference(&b).unwrap();
            assert!(d < 1e-6, "{d}");
        }
    }

    #[test]
    fn charts_coincide_without_coupling() {
        let k = PhysicalConstants::new(1.3, 1e12, 1.0, 1.0).unwrap();
        let h = SystemHamiltonian::new(Metric::euclidean(2), k, 1.0).unwrap();
        let s0 = ExtendedState::new(vec![0.1, 0.2], vec![0.3, -0.1], vec![0.4, 0.0], vec![0.0, 0.0]).unwrap();
        let a = evolve_q_pi(&h, &s0, 1e-3, 1000).unwrap();
        let canonical = evolve(Chart::Canonical, &h, &s0, 1e-3, 1000).unwrap();
        for (x, y) in a.states.iter().zip(&canonical.states) {
            for (u, v) in x.to_flat().iter().zip(y.to_flat()) {
                assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0), "{u} {v}");
            }
        }
    }

    #[test]
    fn forward_then_backward_returns_home() {
        let h = coupled();
        let k = *h.constants();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s0 = random_state(&mut rng);
        for chart in [Chart::QPi, Chart::KinQP] {
            let integ = Integrator::new(chart, &h);
            let mut v = chart.encode(&s0, &k).unwrap();
            integ.advance(&mut v, 1e-3, 1000).unwrap();
            integ.advance(&mut v, -1e-3, 1000).unwrap();
            let back = chart.decode(&v, &k).unwrap();
            for (a, b) in back.to_flat().iter().zip(s0.to_flat()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn symplectic_for_quadratic_and_relativistic_kinetics() {
        let h = coupled();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s0 = random_state(&mut rng);
        assert!(symplecticity_check(&h, &s0, 1e-3, 1).unwrap() < 1e-12);
        assert!(symplecticity_check(&h, &s0, 1e-3, 1000).unwrap() < 1e-6);
        let rel = coupled().with_kinetic(ParticleKinetic::Relativistic);
        assert!(symplecticity_check(&rel, &s0, 1e-3, 1000).unwrap() < 1e-6);
        assert!(symplecticity_defect(Chart::KinQP, &rel, &s0, 1e-3, 100, 1e-4).unwrap() < 1e-6);
    }

    #[test]
    fn global_error_is_second_order() {
        let h = coupled();
        let k = *h.constants();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s0 = random_state(&mut rng);
        let reference = rk4(&s0.to_flat(), 1e-4, 10_000, k.m, k.momentum_coupling(), h.omega0());
        let errs: Vec<f64> = [0.02, 0.01, 0.005]
            .iter()
            .map(|&dt| {
                let n = (1.0f64 / dt).round() as usize;
                let end = evolve_q_pi(&h, &s0, dt, n).unwrap().last().unwrap().to_flat();
                end.iter()
                    .zip(&reference)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            assert!(w[0] / w[1] >= 3.5, "{errs:?}");
        }
    }

    #[test]
    fn long_runs_show_no_secular_energy_growth() {
        let h = coupled();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s0 = random_state(&mut rng);
        let traj = evolve_q_pi(&h, &s0, 1e-3, 100_000).unwrap();
        let e = traj.energies(&h).unwrap();
        let e0 = e[0];
        let early = e[..10_000].iter().map(|x| (x - e0).abs()).fold(0.0, f64::max);
        let late = e[90_000..].iter().map(|x| (x - e0).abs()).fold(0.0, f64::max);
        assert!(late < 2.0 * early + 1e-12, "early {early:e} late {late:e}");
        assert!(late / e0.abs() < 1e-5);
    }

    #[test]
    fn identical_inputs_give_identical_trajectories() {
        let h = coupled();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s0 = random_state(&mut rng);
        let a = evolve_kq_p(&h, &s0, 1e-3, 200).unwrap();
        let b = evolve_kq_p(&h, &s0, 1e-3, 200).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(&h).unwrap(), b.to_csv(&h).unwrap());
    }

    #[test]
    fn invalid_inputs() {
        let h = coupled();
        let s0 = ExtendedState::zeros(2);
        assert!(evolve_q_pi(&h, &s0, 0.0, 10).is_err());
        assert!(evolve_q_pi(&h, &ExtendedState::zeros(3), 1e-3, 10).is_err());
        let wild = SystemHamiltonian::new(Metric::euclidean(1), constants(), 1e200).unwrap();
        let s = ExtendedState::new(vec![0.0], vec![0.0], vec![1e200], vec![0.0]).unwrap();
        assert!(matches!(
            evolve_q_pi(&wild, &s, 1.0, 10),
            Err(Error::Divergence { step: 1 })
        ));
    }

    #[test]
    fn csv_columns() {
        let h = coupled();
        let traj = evolve_q_pi(&h, &ExtendedState::zeros(2), 1e-3, 3).unwrap();
        let csv = traj.to_csv(&h).unwrap();
        let header = csv.lines().next().unwrap();
        assert_eq!(header, "t,q0,q1,p0,p1,B0,B1,piB0,piB1,Q0,Q1,pi0,pi1,H");
        assert_eq!(csv.lines().count(), 5);
    }
}
