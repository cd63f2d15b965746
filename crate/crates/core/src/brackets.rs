//! Symplectic form and numerical Poisson brackets on the extended phase space.
//!
//! The extended coordinate is ordered `(q, B | p, piB)`. With `M = 2N` the
//! form has `omega_{i, i+M} = -omega_{i+M, i} = g_i` and zeros elsewhere,
//! where `g_i` is the metric sign of the direction (all +1 in the Euclidean
//! default). It represents `omega = sum_i g_i dq^i ^ dp_i` over both the
//! particle and the field pairs.
//!
//! Brackets are contracted with the Poisson tensor `-omega^{-1}`, which in
//! this coordinates-first ordering gives `{q^mu, p^nu} = g^{mu nu}`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::phase_space::{ExtendedState, Metric, PhysicalConstants};

/// Default central-difference step for gradients on unit-scaled states.
pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    half: usize,
    form: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

/// The `2M x 2M` form with identity in the upper-right block.
pub fn build_symplectic(half: usize) -> Result<SymplecticMatrix> {
    if half == 0 {
        return Err(Error::Domain("symplectic half-dimension must be at least 1".into()));
    }
    SymplecticMatrix::with_signs(&vec![1.0; half])
}

impl SymplecticMatrix {
    /// Form with `omega_{i, i+M} = signs[i]`; every sign must be +1 or -1.
    pub fn with_signs(signs: &[f64]) -> Result<Self> {
        let half = signs.len();
        if half == 0 {
            return Err(Error::Domain("symplectic half-dimension must be at least 1".into()));
        }
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::Domain("symplectic signs must be +1 or -1".into()));
        }
        let n = 2 * half;
        let mut form = DMatrix::zeros(n, n);
        let mut inverse = DMatrix::zeros(n, n);
        for (i, &s) in signs.iter().enumerate() {
            form[(i, i + half)] = s;
            form[(i + half, i)] = -s;
            // s^2 = 1, so the inverse is the negated form
            inverse[(i, i + half)] = -s;
            inverse[(i + half, i)] = s;
        }
        Ok(Self { half, form, inverse })
    }

    /// Form on the extended `(q, B | p, piB)` space of a system with the
    /// given metric: particle and field pairs both carry the metric signs.
    pub fn extended(metric: &Metric) -> Self {
        let mut signs = metric.signature().to_vec();
        signs.extend_from_slice(metric.signature());
        Self::with_signs(&signs).expect("metric signs are +-1")
    }

    pub fn half_dim(&self) -> usize {
        self.half
    }

    pub fn dim(&self) -> usize {
        2 * self.half
    }

    /// `omega_IJ`.
    pub fn form(&self) -> &DMatrix<f64> {
        &self.form
    }

    /// `omega^IJ`, satisfying `omega^IJ omega_JK = delta^I_K`.
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// Tensor contracted with gradients in [`BracketEngine::bracket`].
    pub fn poisson_tensor(&self) -> DMatrix<f64> {
        -&self.inverse
    }

    /// `v^T omega w`.
    pub fn pairing(&self, v: &[f64], w: &[f64]) -> Result<f64> {
        check_len("symplectic pairing v", self.dim(), v.len())?;
        check_len("symplectic pairing w", self.dim(), w.len())?;
        let mut acc = 0.0;
        for i in 0..self.half {
            let s = self.form[(i, i + self.half)];
            acc += s * (v[i] * w[i + self.half] - v[i + self.half] * w[i]);
        }
        Ok(acc)
    }
}

type Eval = Arc<dyn Fn(&ExtendedState) -> f64 + Send + Sync>;
type Grad = Arc<dyn Fn(&ExtendedState) -> Vec<f64> + Send + Sync>;

/// A scalar function on the extended phase space, optionally with an
/// analytic gradient in the flat `(q, B | p, piB)` ordering.
#[derive(Clone)]
pub struct PhaseFunction {
    label: String,
    eval: Eval,
    grad: Option<Grad>,
}

impl fmt::Debug for PhaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseFunction")
            .field("label", &self.label)
            .field("analytic_gradient", &self.grad.is_some())
            .finish()
    }
}

impl PhaseFunction {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&ExtendedState) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            eval: Arc::new(f),
            grad: None,
        }
    }

    pub fn with_gradient<G>(mut self, g: G) -> Self
    where
        G: Fn(&ExtendedState) -> Vec<f64> + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn eval(&self, s: &ExtendedState) -> f64 {
        (self.eval)(s)
    }

    pub fn q(mu: usize) -> Self {
        Self::new(format!("q{mu}"), move |s| s.q[mu])
    }

    pub fn p(mu: usize) -> Self {
        Self::new(format!("p{mu}"), move |s| s.p[mu])
    }

    pub fn field(mu: usize) -> Self {
        Self::new(format!("B{mu}"), move |s| s.b[mu])
    }

    pub fn field_momentum(mu: usize) -> Self {
        Self::new(format!("piB{mu}"), move |s| s.pi_b[mu])
    }

    /// `Q^mu = q^mu - (c/2m) piB^mu`.
    pub fn kinetic_coordinate(mu: usize, k: PhysicalConstants) -> Self {
        let lambda = k.coordinate_coupling();
        Self::new(format!("Q{mu}"), move |s| s.q[mu] - lambda * s.pi_b[mu])
    }

    /// `pi^mu = p^mu - (2m/c) B^mu`.
    pub fn kinetic_momentum(mu: usize, k: PhysicalConstants) -> Self {
        let kappa = k.momentum_coupling();
        Self::new(format!("pi{mu}"), move |s| s.p[mu] - kappa * s.b[mu])
    }

    /// Pointwise product; carries an analytic gradient when both factors do.
    pub fn product(&self, other: &PhaseFunction) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let label = format!("({})*({})", self.label, other.label);
        let mut out = Self::new(label, move |s| f(s) * g(s));
        if let (Some(df), Some(dg)) = (self.grad.clone(), other.grad.clone()) {
            let (f, g) = (self.eval.clone(), other.eval.clone());
            out.grad = Some(Arc::new(move |s| {
                let (fv, gv) = (f(s), g(s));
                df(s).iter().zip(dg(s)).map(|(a, b)| a * gv + fv * b).collect()
            }));
        }
        out
    }
}

/// Gradient in the flat ordering: analytic when available, otherwise
/// central differences with step `h`.
pub fn gradient(f: &PhaseFunction, at: &ExtendedState, h: f64) -> Result<Vec<f64>> {
    let n = 4 * at.dim();
    if let Some(g) = &f.grad {
        let v = g(at);
        check_len("analytic gradient", n, v.len())?;
        if let Some(index) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        return Ok(v);
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let z = at.to_flat();
    let mut out = Vec::with_capacity(n);
    let mut probe = z.clone();
    for i in 0..n {
        probe[i] = z[i] + h;
        let up = f.eval(&ExtendedState::from_flat(&probe)?);
        probe[i] = z[i] - h;
        let down = f.eval(&ExtendedState::from_flat(&probe)?);
        probe[i] = z[i];
        let d = (up - down) / (2.0 * h);
        if !d.is_finite() {
            return Err(Error::NonFinite { index: i });
        }
        out.push(d);
    }
    Ok(out)
}

/// Poisson bracket evaluator for a fixed metric and difference step.
#[derive(Debug, Clone)]
pub struct BracketEngine {
    symplectic: SymplecticMatrix,
    tensor: DMatrix<f64>,
    step: f64,
}

impl BracketEngine {
    pub fn new(metric: &Metric, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Domain(format!(
                "finite-difference step must be positive, got {step}"
            )));
        }
        let symplectic = SymplecticMatrix::extended(metric);
        let tensor = symplectic.poisson_tensor();
        Ok(Self {
            symplectic,
            tensor,
            step,
        })
    }

    pub fn symplectic(&self) -> &SymplecticMatrix {
        &self.symplectic
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn bracket(&self, f: &PhaseFunction, g: &PhaseFunction, at: &ExtendedState) -> Result<f64> {
        check_len("bracket state (4N)", self.symplectic.dim(), 4 * at.dim())?;
        let df = gradient(f, at, self.step)?;
        let dg = gradient(g, at, self.step)?;
        let mut acc = 0.0;
        for (i, dfi) in df.iter().enumerate() {
            for (j, dgj) in dg.iter().enumerate() {
                let t = self.tensor[(i, j)];
                if t != 0.0 {
                    acc += t * dfi * dgj;
                }
            }
        }
        Ok(acc)
    }
}

/// `{F, G}` at a state with the Euclidean metric of the state's dimension.
pub fn poisson_bracket(f: &PhaseFunction, g: &PhaseFunction, at: &ExtendedState, h: f64) -> Result<f64> {
    BracketEngine::new(&Metric::euclidean(at.dim()), h)?.bracket(f, g, at)
}

/// The six bracket families of the canonical algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BracketFamily {
    /// `{q, p} = g`
    QP,
    /// `{q, pi} = g`
    QPi,
    /// `{B, piB} = g`
    FieldPair,
    /// `{Q, Q} = 0`
    KinQKinQ,
    /// `{Q, pi} = 0`
    KinQPi,
    /// `{Q, p} = g`
    KinQP,
}

impl BracketFamily {
    pub const ALL: [BracketFamily; 6] = [
        BracketFamily::QP,
        BracketFamily::QPi,
        BracketFamily::FieldPair,
        BracketFamily::KinQKinQ,
        BracketFamily::KinQPi,
        BracketFamily::KinQP,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BracketFamily::QP => "{q,p}",
            BracketFamily::QPi => "{q,pi}",
            BracketFamily::FieldPair => "{B,piB}",
            BracketFamily::KinQKinQ => "{Q,Q}",
            BracketFamily::KinQPi => "{Q,pi}",
            BracketFamily::KinQP => "{Q,p}",
        }
    }

    pub fn expected(self, metric: &Metric, mu: usize, nu: usize) -> f64 {
        match self {
            BracketFamily::KinQKinQ | BracketFamily::KinQPi => 0.0,
            _ => metric.g(mu, nu),
        }
    }

    fn functions(self, mu: usize, nu: usize, k: PhysicalConstants) -> (PhaseFunction, PhaseFunction) {
        use PhaseFunction as F;
        match self {
            BracketFamily::QP => (F::q(mu), F::p(nu)),
            BracketFamily::QPi => (F::q(mu), F::kinetic_momentum(nu, k)),
            BracketFamily::FieldPair => (F::field(mu), F::field_momentum(nu)),
            BracketFamily::KinQKinQ => (F::kinetic_coordinate(mu, k), F::kinetic_coordinate(nu, k)),
            BracketFamily::KinQPi => (F::kinetic_coordinate(mu, k), F::kinetic_momentum(nu, k)),
            BracketFamily::KinQP => (F::kinetic_coordinate(mu, k), F::p(nu)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketRow {
    pub family: BracketFamily,
    pub mu: usize,
    pub nu: usize,
    pub value: f64,
    pub expected: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlgebraReport {
    pub rows: Vec<BracketRow>,
}

pub const ALGEBRA_CSV_HEADER: &str = "bracket_family,mu,nu,value,expected,abs_error";

impl AlgebraReport {
    pub fn max_deviation(&self) -> f64 {
        self.rows.iter().map(|r| r.abs_error).fold(0.0, f64::max)
    }

    pub fn max_deviation_of(&self, family: BracketFamily) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.family == family)
            .map(|r| r.abs_error)
            .fold(0.0, f64::max)
    }

    /// Values of one family as an `N x N` table indexed `[mu][nu]`.
    pub fn table(&self, family: BracketFamily) -> Vec<Vec<f64>> {
        let n = self
            .rows
            .iter()
            .filter(|r| r.family == family)
            .map(|r| r.mu.max(r.nu) + 1)
            .max()
            .unwrap_or(0);
        let mut t = vec![vec![0.0; n]; n];
        for r in self.rows.iter().filter(|r| r.family == family) {
            t[r.mu][r.nu] = r.value;
        }
        t
    }

    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        self.rows.iter().map(|r| {
            format!(
                "\"{}\",{},{},{:e},{:e},{:e}",
                r.family.label(),
                r.mu,
                r.nu,
                r.value,
                r.expected,
                r.abs_error
            )
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(ALGEBRA_CSV_HEADER);
        s.push('\n');
        for line in self.csv_rows() {
            s.push_str(&line);
            s.push('\n');
        }
        s
    }
}

/// Evaluates every bracket family for every index pair at `at`.
pub fn canonical_algebra_report(
    at: &ExtendedState,
    metric: &Metric,
    k: &PhysicalConstants,
    h: f64,
) -> Result<AlgebraReport> {
    check_len("algebra report metric", metric.dim(), at.dim())?;
    k.validate()?;
    let engine = BracketEngine::new(metric, h)?;
    let n = at.dim();
    let mut rows = Vec::with_capacity(6 * n * n);
    for family in BracketFamily::ALL {
        for mu in 0..n {
            for nu in 0..n {
                let (f, g) = family.functions(mu, nu, *k);
                let value = engine.bracket(&f, &g, at)?;
                let expected = family.expected(metric, mu, nu);
                rows.push(BracketRow {
                    family,
                    mu,
                    nu,
                    value,
                    expected,
                    abs_error: (value - expected).abs(),
                });
            }
        }
    }
    Ok(AlgebraReport { rows })
}

/// `theta(v) = sum_i g_i (p_i v^{q_i} + piB_i v^{B_i})` for a tangent vector in
/// the flat ordering.
pub fn canonical_one_form(at: &ExtendedState, v: &[f64], metric: &Metric) -> Result<f64> {
    let n = at.dim();
    check_len("one-form metric", n, metric.dim())?;
    check_len("tangent vector", 4 * n, v.len())?;
    let g = metric.signature();
    Ok((0..n).map(|i| g[i] * (at.p[i] * v[i] + at.pi_b[i] * v[n + i])).sum())
}

/// `(-d theta)(v, w)` by central differences of `theta` along `v` and `w`.
pub fn two_form_from_one_form(at: &ExtendedState, v: &[f64], w: &[f64], metric: &Metric, h: f64) -> Result<f64> {
    let n = at.dim();
    check_len("tangent vector v", 4 * n, v.len())?;
    check_len("tangent vector w", 4 * n, w.len())?;
    let z = at.to_flat();
    let shifted = |dir: &[f64], t: f64| -> Result<ExtendedState> {
        let moved: Vec<f64> = z.iter().zip(dir).map(|(a, d)| a + t * d).collect();
        ExtendedState::from_flat(&moved)
    };
    let directional = |dir: &[f64], arg: &[f64]| -> Result<f64> {
        let up = canonical_one_form(&shifted(dir, h)?, arg, metric)?;
        let down = canonical_one_form(&shifted(dir, -h)?, arg, metric)?;
        Ok((up - down) / (2.0 * h))
    };
    let d_theta = directional(v, w)? - directional(w, v)?;
    Ok(-d_theta)
}
