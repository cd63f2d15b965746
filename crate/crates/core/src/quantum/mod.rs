//! Truncated Hilbert-space realization of the particle and field-mode
//! operators.
//!
//! One spatial component is realized. Every operator acts on a two-factor
//! tensor product and is stored as a short sum of Kronecker products
//! ([`KronOperator`]); dense matrices are formed only when needed. Basis
//! index `n1 * d2 + n2` labels level `n1` of the left factor and `n2` of the
//! right one.
//!
//! Two realizations are provided:
//!
//! * [`build_operators`]: `q, p` on the particle factor and `B, piB` on the
//!   field factor, with `Q = q - (c/2m) piB` and `pi = p - (2m/c) B`.
//! * [`build_kinetic_pair_operators`]: the factors carry the conjugate pairs
//!   `(Q, P)` and `(X, pi)` with `P = (p + (2m/c) B)/2` and
//!   `X = (q + (c/2m) piB)/2`. Here `Q` and `pi` commute exactly on the whole
//!   truncated space, which the joint eigenbasis needs.

pub mod density;
pub mod grid;
pub mod io;

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phase_space::PhysicalConstants;

pub use density::{
    evolve_density, joint_eigenbasis, scatter_statistics, trajectory_density, DensityOperator, JointEigenbasis,
    Propagator, ScatterStatistics, TrajectoryDensity,
};
pub use grid::{kinetic_momentum_curvature, CurvatureCheck, FieldProfile, GaussianPacket, GridMomenta};
pub use io::{read_operators, write_operators};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const MIN_TRUNCATION: usize = 8;

const I: C64 = C64::new(0.0, 1.0);

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Largest entry modulus.
pub trait MaxModulus {
    fn max_modulus(&self) -> f64;
}

impl MaxModulus for CMatrix {
    fn max_modulus(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Complex matrix product through four real products, which use the
/// optimized real kernel.
pub fn cmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

/// Dense operator with an asserted hermiticity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: CMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Dimension {
                what: "operator columns",
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        Ok(Self {
            entries,
            hermitian: false,
        })
    }

    /// Accepts the matrix only if `max |A - A^dagger| < 1e-12`.
    pub fn hermitian(entries: CMatrix) -> Result<Self> {
        let mut op = Self::new(entries)?;
        let defect = op.hermiticity_defect();
        if defect >= HERMITIAN_TOLERANCE {
            return Err(Error::NotHermitian { defect });
        }
        op.hermitian = true;
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.entries * v
    }

    pub fn commutator(&self, other: &OperatorMatrix) -> CMatrix {
        cmul(&self.entries, &other.entries) - cmul(&other.entries, &self.entries)
    }

    pub fn expectation(&self, v: &CVector) -> C64 {
        v.dotc(&(&self.entries * v))
    }
}

/// `a` with `sqrt(n)` on the superdiagonal.
pub fn annihilation(d: usize) -> CMatrix {
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = real((n as f64).sqrt());
    }
    a
}

/// `l (a + a^dagger) / sqrt 2`
pub fn position_quadrature(d: usize, length: f64) -> CMatrix {
    let a = annihilation(d);
    (&a + a.adjoint()) * real(length / std::f64::consts::SQRT_2)
}

/// `i (hbar / l) (a^dagger - a) / sqrt 2`
pub fn momentum_quadrature(d: usize, length: f64, hbar: f64) -> CMatrix {
    let a = annihilation(d);
    (a.adjoint() - &a) * (I * (hbar / length / std::f64::consts::SQRT_2))
}

/// Sum of Kronecker products `sum_i L_i (x) R_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct KronOperator {
    dims: (usize, usize),
    terms: Vec<(CMatrix, CMatrix)>,
}

impl KronOperator {
    pub fn left(a: CMatrix, right_dim: usize) -> Self {
        Self {
            dims: (a.nrows(), right_dim),
            terms: vec![(a, CMatrix::identity(right_dim, right_dim))],
        }
    }

    pub fn right(left_dim: usize, b: CMatrix) -> Self {
        Self {
            dims: (left_dim, b.nrows()),
            terms: vec![(CMatrix::identity(left_dim, left_dim), b)],
        }
    }

    pub fn identity(dims: (usize, usize)) -> Self {
        Self::left(CMatrix::identity(dims.0, dims.0), dims.1)
    }

    pub fn zero(dims: (usize, usize)) -> Self {
        Self {
            dims,
            terms: Vec::new(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.0 * self.dims.1
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dims: self.dims,
            terms: self.terms.iter().map(|(a, b)| (a * s, b.clone())).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(real(s))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dims: self.dims,
            terms: self.terms.iter().map(|(a, b)| (a.adjoint(), b.adjoint())).collect(),
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for (a, b) in &self.terms {
            out += a.kronecker(b);
        }
        out
    }

    pub fn to_hermitian(&self) -> Result<OperatorMatrix> {
        OperatorMatrix::hermitian(self.to_dense())
    }
}

impl Add for &KronOperator {
    type Output = KronOperator;
    fn add(self, rhs: &KronOperator) -> KronOperator {
        assert_eq!(self.dims, rhs.dims, "tensor factor dimensions differ");
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        KronOperator { dims: self.dims, terms }
    }
}

impl Neg for &KronOperator {
    type Output = KronOperator;
    fn neg(self) -> KronOperator {
        self.scale_real(-1.0)
    }
}

impl Sub for &KronOperator {
    type Output = KronOperator;
    fn sub(self, rhs: &KronOperator) -> KronOperator {
        self + &(-rhs)
    }
}

impl Mul for &KronOperator {
    type Output = KronOperator;
    fn mul(self, rhs: &KronOperator) -> KronOperator {
        assert_eq!(self.dims, rhs.dims, "tensor factor dimensions differ");
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (a, b) in &self.terms {
            for (c, d) in &rhs.terms {
                terms.push((a * c, b * d));
            }
        }
        KronOperator { dims: self.dims, terms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Realization {
    ParticleField,
    KineticPair,
}

/// The six operators `q, p, B, piB, Q, pi` on one truncated space.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub q: KronOperator,
    pub p: KronOperator,
    pub b: KronOperator,
    pub pi_b: KronOperator,
    pub kin_q: KronOperator,
    pub kin_pi: KronOperator,
    realization: Realization,
    constants: PhysicalConstants,
}

fn check_truncation(d: usize, which: &str) -> Result<()> {
    if d < MIN_TRUNCATION {
        return Err(Error::Truncation(format!(
            "{which} dimension {d} is below the minimum of {MIN_TRUNCATION}"
        )));
    }
    Ok(())
}

/// Particle (x) field realization.
pub fn build_operators(d_p: usize, d_f: usize, k: &PhysicalConstants) -> Result<OperatorSet> {
    check_truncation(d_p, "particle")?;
    check_truncation(d_f, "field")?;
    k.validate()?;
    let hbar = k.hbar;
    let len = hbar.sqrt();
    let q = KronOperator::left(position_quadrature(d_p, len), d_f);
    let p = KronOperator::left(momentum_quadrature(d_p, len, hbar), d_f);
    let b = KronOperator::right(d_p, position_quadrature(d_f, len));
    let pi_b = KronOperator::right(d_p, momentum_quadrature(d_f, len, hbar));
    let kin_q = &q - &pi_b.scale_real(k.coordinate_coupling());
    let kin_pi = &p - &b.scale_real(k.momentum_coupling());
    Ok(OperatorSet {
        q,
        p,
        b,
        pi_b,
        kin_q,
        kin_pi,
        realization: Realization::ParticleField,
        constants: *k,
    })
}

/// `(Q, P) (x) (X, pi)` realization in which `[Q, pi] = 0` holds exactly.
pub fn build_kinetic_pair_operators(d_q: usize, d_pi: usize, k: &PhysicalConstants) -> Result<OperatorSet> {
    check_truncation(d_q, "kinetic coordinate")?;
    check_truncation(d_pi, "kinetic momentum")?;
    k.validate()?;
    let hbar = k.hbar;
    let len = hbar.sqrt();
    let (kappa, lambda) = (k.momentum_coupling(), k.coordinate_coupling());
    let kin_q = KronOperator::left(position_quadrature(d_q, len), d_pi);
    let big_p = KronOperator::left(momentum_quadrature(d_q, len, hbar), d_pi);
    let big_x = KronOperator::right(d_q, position_quadrature(d_pi, len));
    let kin_pi = KronOperator::right(d_q, momentum_quadrature(d_pi, len, hbar));
    let half_q = kin_q.scale_real(0.5);
    let half_pi = kin_pi.scale_real(0.5);
    let q = &big_x + &half_q;
    let pi_b = (&big_x - &half_q).scale_real(1.0 / lambda);
    let p = &big_p + &half_pi;
    let b = (&big_p - &half_pi).scale_real(1.0 / kappa);
    Ok(OperatorSet {
        q,
        p,
        b,
        pi_b,
        kin_q,
        kin_pi,
        realization: Realization::KineticPair,
        constants: *k,
    })
}

impl OperatorSet {
    pub fn realization(&self) -> Realization {
        self.realization
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn factor_dims(&self) -> (usize, usize) {
        self.q.dims()
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    /// Levels below half the cutoff in each factor.
    pub fn interior_levels(&self) -> (usize, usize) {
        let (a, b) = self.factor_dims();
        (a / 2, b / 2)
    }

    pub fn named(&self) -> [(&'static str, &KronOperator); 6] {
        [
            ("q", &self.q),
            ("p", &self.p),
            ("B", &self.b),
            ("piB", &self.pi_b),
            ("Q", &self.kin_q),
            ("pi", &self.kin_pi),
        ]
    }

    /// Dense hermitian matrices of all six operators.
    pub fn dense(&self) -> Result<Vec<(&'static str, OperatorMatrix)>> {
        self.named()
            .into_iter()
            .map(|(name, op)| Ok((name, op.to_hermitian()?)))
            .collect()
    }

    /// `pi^2 / 2m + (piB^2 + w0^2 B^2) / 2`.
    pub fn hamiltonian(&self, omega0: f64) -> Result<OperatorMatrix> {
        if !(omega0 >= 0.0 && omega0.is_finite()) {
            return Err(Error::Domain(format!(
                "mode frequency must be finite and >= 0, got {omega0}"
            )));
        }
        let m = self.constants.m;
        let kinetic = (&self.kin_pi * &self.kin_pi).scale_real(0.5 / m);
        let field = &(&self.pi_b * &self.pi_b) + &(&self.b * &self.b).scale_real(omega0 * omega0);
        let h = &kinetic + &field.scale_real(0.5);
        let mut dense = h.to_dense();
        // products of exact adjoints can differ in the last bit
        let adj = dense.adjoint();
        dense = (&dense + adj) * real(0.5);
        OperatorMatrix::hermitian(dense)
    }

    /// Gaussian state centred on ladder eigenvalues `alpha` for the particle
    /// and `beta` for the field mode: the ground state of
    /// `(a_q - alpha)^dagger (a_q - alpha) + (a_B - beta)^dagger (a_B - beta)`.
    pub fn gaussian_state(&self, alpha: C64, beta: C64, omega0: f64) -> Result<CVector> {
        let hbar = self.constants.hbar;
        let lq = hbar.sqrt();
        let lb = if omega0 > 0.0 { (hbar / omega0).sqrt() } else { lq };
        let ladder = |x: &KronOperator, p: &KronOperator, l: f64, shift: C64| {
            let a = &x.scale_real(1.0 / (l * std::f64::consts::SQRT_2))
                + &p.scale(I * (l / hbar / std::f64::consts::SQRT_2));
            &a - &KronOperator::identity(self.factor_dims()).scale(shift)
        };
        let aq = ladder(&self.q, &self.p, lq, alpha);
        let ab = ladder(&self.b, &self.pi_b, lb, beta);
        let number = &(&aq.adjoint() * &aq) + &(&ab.adjoint() * &ab);
        lowest_eigenvector(&number.to_dense())
    }
}

/// Lowest eigenvector of a positive semidefinite matrix by shifted inverse
/// iteration, phase-fixed so the largest component is real and positive.
fn lowest_eigenvector(m: &CMatrix) -> Result<CVector> {
    const SHIFT: f64 = 0.1;
    let n = m.nrows();
    let shifted = m + CMatrix::identity(n, n) * real(SHIFT);
    let lu = shifted.lu();
    let mut v = CVector::from_element(n, real(1.0 / (n as f64).sqrt()));
    for _ in 0..200 {
        let mut next = lu
            .solve(&v)
            .ok_or_else(|| Error::Domain("singular matrix in inverse iteration".into()))?;
        let norm = next.norm();
        next /= real(norm);
        let change = (&next - &v * v.dotc(&next)).norm();
        v = next;
        if change < 1e-14 {
            break;
        }
    }
    Ok(fix_phase(v))
}

pub(crate) fn fix_phase(mut v: CVector) -> CVector {
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(real(1.0));
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        v *= phase;
    }
    v
}

/// Eigenvalues (ascending) and eigenvectors of a hermitian matrix.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Largest singular value.
pub(crate) fn spectral_norm(m: &CMatrix) -> f64 {
    if m.ncols() == 0 {
        return 0.0;
    }
    let gram = cmul(&m.adjoint(), m);
    let (values, _) = hermitian_eigen(&gram);
    values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorRow {
    pub label: &'static str,
    /// Expected value as a multiple of the identity.
    pub expected: C64,
    /// `max ||(C - E) psi|| / ||psi||` over the interior subspace.
    pub interior_defect: f64,
    /// Largest `||(C - E) e_j||` over all basis states.
    pub full_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorReport {
    pub levels: (usize, usize),
    pub rows: Vec<CommutatorRow>,
}

impl CommutatorReport {
    pub fn row(&self, label: &str) -> Option<&CommutatorRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn max_interior_defect(&self) -> f64 {
        self.rows.iter().map(|r| r.interior_defect).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("identity,expected_re,expected_im,interior_levels,interior_defect,full_defect\n");
        for r in &self.rows {
            out.push_str(&format!(
                "\"{}\",{:e},{:e},{}x{},{:e},{:e}\n",
                r.label, r.expected.re, r.expected.im, self.levels.0, self.levels.1, r.interior_defect, r.full_defect
            ));
        }
        out
    }
}

/// Checks the commutator identities on states supported below `levels` in
/// each factor.
pub fn commutator_suite(ops: &OperatorSet, levels: (usize, usize)) -> Result<CommutatorReport> {
    let (d1, d2) = ops.factor_dims();
    if levels.0 == 0 || levels.1 == 0 || levels.0 > d1 || levels.1 > d2 {
        return Err(Error::Truncation(format!(
            "interior levels {levels:?} do not fit factors of size {d1} and {d2}"
        )));
    }
    let interior: Vec<usize> = (0..levels.0)
        .flat_map(|n1| (0..levels.1).map(move |n2| n1 * d2 + n2))
        .collect();
    let ih = I * ops.constants.hbar;
    let zero = real(0.0);
    let cases: [(&'static str, &KronOperator, &KronOperator, C64); 6] = [
        ("[q,p]", &ops.q, &ops.p, ih),
        ("[q,pi]", &ops.q, &ops.kin_pi, ih),
        ("[B,piB]", &ops.b, &ops.pi_b, ih),
        ("[Q,pi]", &ops.kin_q, &ops.kin_pi, zero),
        ("[Q,p]", &ops.kin_q, &ops.p, ih),
        ("[Q,Q]", &ops.kin_q, &ops.kin_q, zero),
    ];
    let n = ops.dim();
    let rows = cases
        .into_iter()
        .map(|(label, a, b, expected)| {
            let defect = a.commutator(b).to_dense() - CMatrix::identity(n, n) * expected;
            let full_defect = defect.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
            let restricted = defect.select_columns(&interior);
            CommutatorRow {
                label,
                expected,
                interior_defect: spectral_norm(&restricted),
                full_defect,
            }
        })
        .collect();
    Ok(CommutatorReport { levels, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constants() -> PhysicalConstants {
        PhysicalConstants::new(1.3, 2.0, 0.7, 0.8).unwrap()
    }

    #[test]
    fn truncated_quadratures_commute_canonically_below_the_top_level() {
        let (d, hbar) = (16, 0.8);
        let x = position_quadrature(d, 0.7);
        let p = momentum_quadrature(d, 0.7, hbar);
        let c = &x * &p - &p * &x;
        for i in 0..d {
            for j in 0..d {
                let want = if i == j && i < d - 1 {
                    I * hbar
                } else if i == j {
                    I * hbar * (1.0 - d as f64)
                } else {
                    real(0.0)
                };
                assert!((c[(i, j)] - want).norm() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn kron_product_matches_dense_product() {
        let k = constants();
        let ops = build_operators(8, 9, &k).unwrap();
        let prod = (&ops.kin_q * &ops.kin_pi).to_dense();
        let dense = ops.kin_q.to_dense() * ops.kin_pi.to_dense();
        assert!((prod - dense).max_modulus() < 1e-12);
    }

    #[test]
    fn all_operators_are_hermitian() {
        let k = constants();
        for ops in [
            build_operators(12, 10, &k).unwrap(),
            build_kinetic_pair_operators(10, 12, &k).unwrap(),
        ] {
            for (name, op) in ops.named() {
                let m = OperatorMatrix::new(op.to_dense()).unwrap();
                assert!(m.hermiticity_defect() < 1e-12, "{name}");
            }
            assert!(ops.dense().unwrap().iter().all(|(_, m)| m.is_hermitian()));
        }
    }

    #[test]
    fn composites_follow_pullbacks() {
        let k = constants();
        for ops in [
            build_operators(9, 8, &k).unwrap(),
            build_kinetic_pair_operators(9, 8, &k).unwrap(),
        ] {
            let q = &ops.q - &ops.pi_b.scale_real(k.coordinate_coupling());
            let pi = &ops.p - &ops.b.scale_real(k.momentum_coupling());
            assert!((q.to_dense() - ops.kin_q.to_dense()).max_modulus() < 1e-12);
            assert!((pi.to_dense() - ops.kin_pi.to_dense()).max_modulus() < 1e-12);
        }
    }

    #[test]
    fn small_coordinate_coupling_leaves_q_unchanged() {
        let k = PhysicalConstants::new(1.0, 1e-14, 1.0, 1.0).unwrap();
        let ops = build_operators(8, 8, &k).unwrap();
        assert!((ops.kin_q.to_dense() - ops.q.to_dense()).max_modulus() < 1e-12);
    }

    #[test]
    fn truncation_below_minimum_is_rejected() {
        assert!(matches!(build_operators(7, 8, &constants()), Err(Error::Truncation(_))));
        assert!(matches!(
            build_kinetic_pair_operators(8, 4, &constants()),
            Err(Error::Truncation(_))
        ));
    }

    #[test]
    fn interior_algebra_holds_in_both_realizations() {
        let k = constants();
        for ops in [
            build_operators(16, 16, &k).unwrap(),
            build_kinetic_pair_operators(16, 16, &k).unwrap(),
        ] {
            let report = commutator_suite(&ops, ops.interior_levels()).unwrap();
            assert_eq!(report.rows.len(), 6);
            assert!(report.max_interior_defect() < 1e-10, "{report:?}");
            assert!(report.row("[Q,Q]").unwrap().full_defect < 1e-14);
            // the cutoff shows up outside the interior
            assert!(report.row("[q,p]").unwrap().full_defect > 1.0);
        }
        let pair = build_kinetic_pair_operators(16, 16, &k).unwrap();
        let report = commutator_suite(&pair, pair.interior_levels()).unwrap();
        assert!(report.row("[Q,pi]").unwrap().full_defect < 1e-12);
        let split = build_operators(16, 16, &k).unwrap();
        let report = commutator_suite(&split, split.interior_levels()).unwrap();
        assert!(report.row("[Q,pi]").unwrap().full_defect > 1.0);
        assert!(report.to_csv().starts_with("identity,"));
    }

    #[test]
    fn suite_rejects_oversized_subspace() {
        let ops = build_operators(8, 8, &constants()).unwrap();
        assert!(commutator_suite(&ops, (9, 4)).is_err());
    }

    #[test]
    fn gaussian_state_is_normalized_and_centred() {
        let k = constants();
        let ops = build_kinetic_pair_operators(16, 16, &k).unwrap();
        let alpha = C64::new(0.5, -0.2);
        let psi = ops.gaussian_state(alpha, real(0.3), 1.0).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let q = OperatorMatrix::new(ops.q.to_dense()).unwrap().expectation(&psi).re;
        let want = k.hbar.sqrt() * std::f64::consts::SQRT_2 * alpha.re;
        assert!((q - want).abs() < 1e-4, "{q} {want}");
    }

    #[test]
    fn hamiltonian_is_hermitian_with_positive_spectrum() {
        let ops = build_kinetic_pair_operators(10, 10, &constants()).unwrap();
        let h = ops.hamiltonian(1.0).unwrap();
        assert!(h.is_hermitian());
        let (values, _) = hermitian_eigen(h.entries());
        assert!(values[0] > 0.0);
    }

    #[test]
    fn spectral_norm_matches_known_values() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![real(1.0), real(-3.0), I * 2.0]));
        assert!((spectral_norm(&m) - 3.0).abs() < 1e-12);
    }
}
