//! Density operators, exact unitary evolution, the joint `Q`-`pi`
//! eigenbasis and the trajectory density built on it.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    cmul, fix_phase, hermitian_eigen, real, CMatrix, CVector, MaxModulus, OperatorMatrix, C64, HERMITIAN_TOLERANCE,
};
use crate::error::{Error, Result};

const TRACE_TOLERANCE: f64 = 1e-12;
const POSITIVITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Dense(CMatrix),
    Ensemble { weights: Vec<f64>, states: Vec<CVector> },
}

/// `rho = sum_j p_j |psi_j><psi_j|`, kept either as a matrix or as the
/// ensemble itself. Ensembles evolve state by state, which keeps large
/// pure-state runs at matrix-vector cost.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    repr: Repr,
    dim: usize,
}

impl DensityOperator {
    pub fn pure(state: CVector) -> Result<Self> {
        Self::ensemble(vec![1.0], vec![state])
    }

    /// States are normalized; weights must be nonnegative and sum to one.
    pub fn ensemble(weights: Vec<f64>, states: Vec<CVector>) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::InvalidDensity(format!(
                "{} weights for {} states",
                weights.len(),
                states.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidDensity("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::InvalidDensity(format!("weights sum to {total}, not 1")));
        }
        let dim = states[0].len();
        let mut normalized = Vec::with_capacity(states.len());
        for s in states {
            if s.len() != dim {
                return Err(Error::Dimension {
                    what: "ensemble state",
                    expected: dim,
                    found: s.len(),
                });
            }
            let norm = s.norm();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::InvalidDensity(
                    "ensemble state has zero or non-finite norm".into(),
                ));
            }
            normalized.push(s / real(norm));
        }
        Ok(Self {
            repr: Repr::Ensemble {
                weights,
                states: normalized,
            },
            dim,
        })
    }

    /// Validates hermiticity, unit trace and positivity.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        let op = OperatorMatrix::hermitian(m).map_err(|e| Error::InvalidDensity(e.to_string()))?;
        let rho = Self {
            dim: op.dim(),
            repr: Repr::Dense(op.into_entries()),
        };
        let tr = rho.trace();
        if (tr - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::InvalidDensity(format!("trace {tr}, not 1")));
        }
        let min = rho.min_eigenvalue();
        if min < -POSITIVITY_TOLERANCE {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min}")));
        }
        Ok(rho)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            repr: Repr::Dense(CMatrix::identity(dim, dim) * real(1.0 / dim as f64)),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_ensemble(&self) -> bool {
        matches!(self.repr, Repr::Ensemble { .. })
    }

    pub fn to_matrix(&self) -> CMatrix {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Ensemble { weights, states } => {
                let mut m = CMatrix::zeros(self.dim, self.dim);
                for (w, s) in weights.iter().zip(states) {
                    m += s * s.adjoint() * real(*w);
                }
                m
            }
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Dense(m) => m.trace().re,
            Repr::Ensemble { weights, states } => weights.iter().zip(states).map(|(w, s)| w * s.norm_squared()).sum(),
        }
    }

    pub fn purity(&self) -> f64 {
        match &self.repr {
            Repr::Dense(m) => m.iter().map(|z| z.norm_sqr()).sum(),
            Repr::Ensemble { weights, states } => {
                let mut total = 0.0;
                for (wi, si) in weights.iter().zip(states) {
                    for (wj, sj) in weights.iter().zip(states) {
                        total += wi * wj * si.dotc(sj).norm_sqr();
                    }
                }
                total
            }
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        match &self.repr {
            Repr::Dense(m) => (m - m.adjoint()).max_modulus(),
            Repr::Ensemble { .. } => 0.0,
        }
    }

    /// Smallest eigenvalue; for an ensemble of fewer states than the
    /// dimension this is the smaller of zero and the Gram spectrum minimum.
    pub fn min_eigenvalue(&self) -> f64 {
        match &self.repr {
            Repr::Dense(m) => {
                let herm = (m + m.adjoint()) * real(0.5);
                hermitian_eigen(&herm).0[0]
            }
            Repr::Ensemble { weights, states } => {
                let k = states.len();
                let gram = CMatrix::from_fn(k, k, |i, j| {
                    states[i].dotc(&states[j]) * real((weights[i] * weights[j]).sqrt())
                });
                let min = hermitian_eigen(&gram).0[0];
                if k < self.dim {
                    min.min(0.0)
                } else {
                    min
                }
            }
        }
    }

    pub fn expectation(&self, op: &CMatrix) -> C64 {
        match &self.repr {
            Repr::Dense(m) => (op * m).trace(),
            Repr::Ensemble { weights, states } => weights
                .iter()
                .zip(states)
                .map(|(w, s)| s.dotc(&(op * s)) * real(*w))
                .sum(),
        }
    }

    /// `<v_k| rho |v_k>` for every column of `basis`.
    pub fn diagonal_in(&self, basis: &CMatrix) -> Result<Vec<f64>> {
        if basis.nrows() != self.dim {
            return Err(Error::Dimension {
                what: "basis rows",
                expected: self.dim,
                found: basis.nrows(),
            });
        }
        Ok(match &self.repr {
            Repr::Dense(m) => {
                let mv = cmul(m, basis);
                (0..basis.ncols())
                    .map(|k| basis.column(k).dotc(&mv.column(k)).re)
                    .collect()
            }
            Repr::Ensemble { weights, states } => {
                let mut g = vec![0.0; basis.ncols()];
                for (w, s) in weights.iter().zip(states) {
                    let amps = basis.ad_mul(s);
                    for (gk, a) in g.iter_mut().zip(amps.iter()) {
                        *gk += w * a.norm_sqr();
                    }
                }
                g
            }
        })
    }

    /// Largest entrywise difference of the two density matrices.
    pub fn distance(&self, other: &DensityOperator) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::Dimension {
                what: "density dimension",
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok((self.to_matrix() - other.to_matrix()).max_modulus())
    }
}

/// `U(t) = exp(-iHt/hbar)` through the eigendecomposition of `H`.
#[derive(Debug, Clone)]
pub struct Propagator {
    energies: Vec<f64>,
    vectors: CMatrix,
    hbar: f64,
}

impl Propagator {
    pub fn new(h: &OperatorMatrix, hbar: f64) -> Result<Self> {
        let scale = h.entries().max_modulus().max(1.0);
        let defect = h.hermiticity_defect();
        if defect >= HERMITIAN_TOLERANCE * scale {
            return Err(Error::NotHermitian { defect });
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::Domain(format!("hbar must be positive, got {hbar}")));
        }
        let (energies, vectors) = hermitian_eigen(h.entries());
        Ok(Self {
            energies,
            vectors,
            hbar,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenvector(&self, k: usize) -> CVector {
        fix_phase(self.vectors.column(k).into_owned())
    }

    pub fn ground_state(&self) -> CVector {
        self.eigenvector(0)
    }

    fn phases(&self, t: f64) -> Vec<C64> {
        self.energies
            .iter()
            .map(|e| C64::from_polar(1.0, -e * t / self.hbar))
            .collect()
    }

    pub fn evolve_state(&self, psi: &CVector, t: f64) -> CVector {
        let mut amps = self.vectors.ad_mul(psi);
        for (a, ph) in amps.iter_mut().zip(self.phases(t)) {
            *a *= ph;
        }
        &self.vectors * amps
    }

    pub fn unitary(&self, t: f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (mut col, ph) in scaled.column_iter_mut().zip(self.phases(t)) {
            col *= ph;
        }
        cmul(&scaled, &self.vectors.adjoint())
    }

    pub fn evolve(&self, rho: &DensityOperator, t: f64) -> Result<DensityOperator> {
        if rho.dim != self.dim() {
            return Err(Error::Dimension {
                what: "density dimension",
                expected: self.dim(),
                found: rho.dim,
            });
        }
        let repr = match &rho.repr {
            Repr::Dense(m) => {
                let u = self.unitary(t);
                Repr::Dense(cmul(&cmul(&u, m), &u.adjoint()))
            }
            Repr::Ensemble { weights, states } => Repr::Ensemble {
                weights: weights.clone(),
                states: states.iter().map(|s| self.evolve_state(s, t)).collect(),
            },
        };
        Ok(DensityOperator { repr, dim: rho.dim })
    }
}

/// `rho(t) = U(t) rho U(t)^dagger`.
pub fn evolve_density(rho0: &DensityOperator, h: &OperatorMatrix, t: f64, hbar: f64) -> Result<DensityOperator> {
    Propagator::new(h, hbar)?.evolve(rho0, t)
}

/// Orthonormal simultaneous eigenvectors of two commuting hermitian operators.
#[derive(Debug, Clone)]
pub struct JointEigenbasis {
    /// Basis vectors as columns.
    pub vectors: CMatrix,
    /// `(Q_k, pi_k)` for each column.
    pub pairs: Vec<(f64, f64)>,
    /// Largest `||A v - a v||` over the basis.
    pub residual_a: f64,
    /// Largest `||B v - b v||` over the basis.
    pub residual_b: f64,
    /// `max |V^dagger V - 1|`.
    pub completeness_defect: f64,
    pub commutator_defect: f64,
    pub gamma: f64,
}

impl JointEigenbasis {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residual_a.max(self.residual_b)
    }
}

/// Diagonalizes `A + gamma B` for a seeded generic `gamma` and re-diagonalizes
/// `A` inside near-degenerate clusters. Refuses pairs whose commutator
/// exceeds `tolerance` (max entry).
pub fn joint_eigenbasis(a: &OperatorMatrix, b: &OperatorMatrix, tolerance: f64, seed: u64) -> Result<JointEigenbasis> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            what: "joint eigenbasis operand",
            expected: a.dim(),
            found: b.dim(),
        });
    }
    for op in [a, b] {
        let defect = op.hermiticity_defect();
        if defect >= HERMITIAN_TOLERANCE * op.entries().max_modulus().max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
    }
    let commutator_defect = a.commutator(b).max_modulus();
    if commutator_defect > tolerance {
        return Err(Error::NonCommuting {
            defect: commutator_defect,
            tolerance,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = rng.gen_range(0.5..1.5) * std::f64::consts::FRAC_1_SQRT_2;
    let (am, bm) = (a.entries(), b.entries());
    let combo = am + bm * real(gamma);
    let (values, mut vectors) = hermitian_eigen(&combo);

    let scale = combo.max_modulus().max(1.0);
    let cluster_gap = 1e-8 * scale;
    let n = values.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] < cluster_gap {
            end += 1;
        }
        if end - start > 1 {
            let block = vectors.columns(start, end - start).into_owned();
            let reduced = block.adjoint() * am * &block;
            let reduced = (&reduced + reduced.adjoint()) * real(0.5);
            let (_, rot) = hermitian_eigen(&reduced);
            let rotated = block * rot;
            vectors.columns_mut(start, end - start).copy_from(&rotated);
        }
        start = end;
    }
    for k in 0..n {
        let v = fix_phase(vectors.column(k).into_owned());
        vectors.set_column(k, &v);
    }

    let av = cmul(am, &vectors);
    let bv = cmul(bm, &vectors);
    let mut pairs = Vec::with_capacity(n);
    let (mut residual_a, mut residual_b) = (0.0_f64, 0.0_f64);
    for k in 0..n {
        let v = vectors.column(k);
        let qa = v.dotc(&av.column(k)).re;
        let qb = v.dotc(&bv.column(k)).re;
        residual_a = residual_a.max((av.column(k) - v * real(qa)).norm());
        residual_b = residual_b.max((bv.column(k) - v * real(qb)).norm());
        pairs.push((qa, qb));
    }
    let completeness_defect = (cmul(&vectors.adjoint(), &vectors) - CMatrix::identity(n, n)).max_modulus();
    Ok(JointEigenbasis {
        vectors,
        pairs,
        residual_a,
        residual_b,
        completeness_defect,
        commutator_defect,
        gamma,
    })
}

/// `G_k = <Q_k, pi_k| rho |Q_k, pi_k>` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDensity {
    pub time: f64,
    pub points: Vec<(f64, f64)>,
    pub values: Vec<f64>,
}

impl TrajectoryDensity {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Rows `t,Q,pi,G` without a header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for ((q, pi), g) in self.points.iter().zip(&self.values) {
            let _ = writeln!(out, "{:e},{q:e},{pi:e},{g:e}", self.time);
        }
        out
    }
}

pub const DENSITY_CSV_HEADER: &str = "t,Q,pi,G";

pub fn trajectory_density(rho: &DensityOperator, basis: &JointEigenbasis, time: f64) -> Result<TrajectoryDensity> {
    Ok(TrajectoryDensity {
        time,
        points: basis.pairs.clone(),
        values: rho.diagonal_in(&basis.vectors)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterStatistics {
    pub delta_q: f64,
    pub delta_pi: f64,
    pub product: f64,
    /// Set when all weight sits on a single joint eigenvalue pair.
    pub degenerate: bool,
}

/// Standard deviations of the `Q` and `pi` marginals of `G`.
pub fn scatter_statistics(g: &TrajectoryDensity) -> Result<ScatterStatistics> {
    let total = g.total();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidDensity(format!("density sums to {total}")));
    }
    let moments = |pick: fn(&(f64, f64)) -> f64| {
        let mean: f64 = g.points.iter().zip(&g.values).map(|(p, w)| w * pick(p)).sum();
        let var: f64 = g
            .points
            .iter()
            .zip(&g.values)
            .map(|(p, w)| w * (pick(p) - mean).powi(2))
            .sum();
        var.max(0.0).sqrt()
    };
    let delta_q = moments(|p| p.0);
    let delta_pi = moments(|p| p.1);
    let support = g.values.iter().filter(|w| **w > 1e-12).count();
    Ok(ScatterStatistics {
        delta_q,
        delta_pi,
        product: delta_q * delta_pi,
        degenerate: support <= 1,
    })
}
