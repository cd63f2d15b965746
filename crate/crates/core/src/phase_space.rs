//! State space of the particle plus finite-mode field, and the pullback maps
//! between canonical variables `(q, p)` and kinetic variables `(Q, pi)`.
//!
//! The field is reduced to one dynamical mode per direction: `B^mu` and its
//! conjugate `piB^mu` are plain scalars. All charts are derived from an
//! [`ExtendedState`] and the [`PhysicalConstants`].

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Physical constants in arbitrary units. The particle "charge" `2m` is
/// derived on demand and never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub m: f64,
    pub c: f64,
    pub chi: f64,
    pub hbar: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            m: 1.0,
            c: 1.0,
            chi: 1.0,
            hbar: 1.0,
        }
    }
}

impl PhysicalConstants {
    pub fn new(m: f64, c: f64, chi: f64, hbar: f64) -> Result<Self> {
        let k = Self { m, c, chi, hbar };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("c", self.c), ("chi", self.chi), ("hbar", self.hbar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!(
                    "constant {name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn charge(&self) -> f64 {
        2.0 * self.m
    }

    /// `2m/c`, the factor coupling `B` into the kinetic momentum.
    pub fn momentum_coupling(&self) -> f64 {
        2.0 * self.m / self.c
    }

    /// `c/2m`, the factor coupling `piB` into the kinetic coordinate.
    pub fn coordinate_coupling(&self) -> f64 {
        self.c / (2.0 * self.m)
    }

    /// `1/(2m chi)`, the connection coefficient of the covariant derivative.
    pub fn connection_coupling(&self) -> f64 {
        1.0 / (2.0 * self.m * self.chi)
    }
}

/// Diagonal metric `g^{mu nu}` with entries +1 or -1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    signature: Vec<f64>,
}

impl Metric {
    pub fn euclidean(dim: usize) -> Self {
        Self {
            signature: vec![1.0; dim],
        }
    }

    pub fn new(signature: Vec<f64>) -> Result<Self> {
        if signature.is_empty() {
            return Err(Error::Domain("metric needs at least one dimension".into()));
        }
        if let Some(bad) = signature.iter().find(|&&s| s != 1.0 && s != -1.0) {
            return Err(Error::Domain(format!("metric entries must be +1 or -1, got {bad}")));
        }
        Ok(Self { signature })
    }

    pub fn dim(&self) -> usize {
        self.signature.len()
    }

    pub fn signature(&self) -> &[f64] {
        &self.signature
    }

    /// `g^{mu nu}`.
    pub fn g(&self, mu: usize, nu: usize) -> f64 {
        if mu == nu {
            self.signature[mu]
        } else {
            0.0
        }
    }

    /// Sum `g_{mu nu} a^mu b^nu`.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.signature
            .iter()
            .zip(a.iter().zip(b))
            .map(|(s, (x, y))| s * x * y)
            .sum()
    }
}

/// A classical point `(q, p, B, piB)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub b: Vec<f64>,
    pub pi_b: Vec<f64>,
}

impl ExtendedState {
    pub fn new(q: Vec<f64>, p: Vec<f64>, b: Vec<f64>, pi_b: Vec<f64>) -> Result<Self> {
        let n = q.len();
        check_len("ExtendedState.p", n, p.len())?;
        check_len("ExtendedState.B", n, b.len())?;
        check_len("ExtendedState.piB", n, pi_b.len())?;
        let s = Self { q, p, b, pi_b };
        if let Some(index) = s.to_flat().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(s)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            q: vec![0.0; n],
            p: vec![0.0; n],
            b: vec![0.0; n],
            pi_b: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Flat extended coordinate in the canonical ordering `(q, B | p, piB)`:
    /// all coordinates first, conjugate momenta second.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(4 * self.dim());
        z.extend_from_slice(&self.q);
        z.extend_from_slice(&self.b);
        z.extend_from_slice(&self.p);
        z.extend_from_slice(&self.pi_b);
        z
    }

    /// Inverse of [`ExtendedState::to_flat`]. Does not check finiteness.
    pub fn from_flat(z: &[f64]) -> Result<Self> {
        if z.is_empty() || !z.len().is_multiple_of(4) {
            return Err(Error::Dimension {
                what: "flat extended state (multiple of 4)",
                expected: 4 * (z.len() / 4).max(1),
                found: z.len(),
            });
        }
        let n = z.len() / 4;
        Ok(Self {
            q: z[..n].to_vec(),
            b: z[n..2 * n].to_vec(),
            p: z[2 * n..3 * n].to_vec(),
            pi_b: z[3 * n..].to_vec(),
        })
    }

    pub fn is_finite(&self) -> bool {
        [&self.q, &self.p, &self.b, &self.pi_b]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Kinetic variables `(Q, pi)` derived from an [`ExtendedState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticChart {
    pub coordinate: Vec<f64>,
    pub momentum: Vec<f64>,
}

impl KineticChart {
    pub fn from_state(s: &ExtendedState, k: &PhysicalConstants) -> Result<Self> {
        Ok(Self {
            coordinate: pullback_coordinate(&s.q, &s.pi_b, k)?,
            momentum: pullback_momentum(&s.p, &s.b, k)?,
        })
    }
}

/// `pi^mu = p^mu - (2m/c) B^mu`.
pub fn pullback_momentum(p: &[f64], b: &[f64], k: &PhysicalConstants) -> Result<Vec<f64>> {
    check_len("pullback_momentum B", p.len(), b.len())?;
    k.validate()?;
    let kappa = k.momentum_coupling();
    Ok(p.iter().zip(b).map(|(p, b)| p - kappa * b).collect())
}

/// `Q^mu = q^mu - (c/2m) piB^mu`.
pub fn pullback_coordinate(q: &[f64], pi_b: &[f64], k: &PhysicalConstants) -> Result<Vec<f64>> {
    check_len("pullback_coordinate piB", q.len(), pi_b.len())?;
    k.validate()?;
    let lambda = k.coordinate_coupling();
    Ok(q.iter().zip(pi_b).map(|(q, w)| q - lambda * w).collect())
}

/// Recovers `(q, p)` from the kinetic chart and the field mode values.
pub fn inverse_pullbacks(
    chart: &KineticChart,
    b: &[f64],
    pi_b: &[f64],
    k: &PhysicalConstants,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = chart.coordinate.len();
    check_len("KineticChart.pi", n, chart.momentum.len())?;
    check_len("inverse_pullbacks B", n, b.len())?;
    check_len("inverse_pullbacks piB", n, pi_b.len())?;
    k.validate()?;
    let (kappa, lambda) = (k.momentum_coupling(), k.coordinate_coupling());
    let q = chart
        .coordinate
        .iter()
        .zip(pi_b)
        .map(|(cq, w)| cq + lambda * w)
        .collect();
    let p = chart.momentum.iter().zip(b).map(|(pi, b)| pi + kappa * b).collect();
    Ok((q, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(m: f64, c: f64) -> PhysicalConstants {
        PhysicalConstants::new(m, c, 1.0, 1.0).unwrap()
    }

    #[test]
    fn momentum_pullback_examples() {
        let k = unit(1.0, 1.0);
        assert_eq!(pullback_momentum(&[1.0, 0.0], &[0.0, 0.0], &k).unwrap(), vec![1.0, 0.0]);
        assert_eq!(pullback_momentum(&[2.0, 0.0], &[0.5, 0.0], &k).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn coordinate_pullback_examples() {
        let k = unit(1.0, 1.0);
        assert_eq!(
            pullback_coordinate(&[0.0, 1.0], &[0.0, 0.0], &k).unwrap(),
            vec![0.0, 1.0]
        );
        assert_eq!(
            pullback_coordinate(&[1.0, 0.0], &[2.0, 0.0], &k).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn pullbacks_match_independent_evaluation() {
        let k = unit(1.7, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let v: Vec<f64> = (0..12).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let (p, b, q, w) = (&v[0..3], &v[3..6], &v[6..9], &v[9..12]);
            let pi = pullback_momentum(p, b, &k).unwrap();
            let cq = pullback_coordinate(q, w, &k).unwrap();
            for i in 0..3 {
                let pi_ref = p[i] - (2.0 * 1.7 / 3.0) * b[i];
                let cq_ref = q[i] - (3.0 / (2.0 * 1.7)) * w[i];
                assert!((pi[i] - pi_ref).abs() <= 1e-15 * pi_ref.abs().max(1.0));
                assert!((cq[i] - cq_ref).abs() <= 1e-15 * cq_ref.abs().max(1.0));
            }
        }
    }

    #[test]
    fn inverse_of_one_step_formulas() {
        let k = unit(1.0, 1.0);
        let chart = KineticChart {
            coordinate: vec![0.0, 0.0],
            momentum: vec![1.0, 0.0],
        };
        let (q, p) = inverse_pullbacks(&chart, &[0.5, 0.0], &[0.0, 0.0], &k).unwrap();
        assert_eq!(q, vec![0.0, 0.0]);
        assert_eq!(p, vec![2.0, 0.0]);
    }

    #[test]
    fn zero_state_round_trips_to_zero() {
        let k = unit(1.3, 2.0);
        let s = ExtendedState::zeros(2);
        let chart = KineticChart::from_state(&s, &k).unwrap();
        let (q, p) = inverse_pullbacks(&chart, &s.b, &s.pi_b, &k).unwrap();
        assert_eq!(q, vec![0.0; 2]);
        assert_eq!(p, vec![0.0; 2]);
    }

    #[test]
    fn length_mismatch_is_a_dimension_error() {
        let k = PhysicalConstants::default();
        assert!(matches!(
            pullback_momentum(&[1.0, 2.0], &[1.0], &k),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            pullback_coordinate(&[1.0], &[1.0, 2.0], &k),
            Err(Error::Dimension { .. })
        ));
        assert!(ExtendedState::new(vec![0.0; 2], vec![0.0; 2], vec![0.0; 3], vec![0.0; 2]).is_err());
    }

    #[test]
    fn constants_and_metric_validation() {
        assert!(PhysicalConstants::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, f64::INFINITY, 1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, 1.0, -1.0, 1.0).is_err());
        assert!(Metric::new(vec![1.0, 0.5]).is_err());
        let g = Metric::new(vec![-1.0, 1.0, 1.0]).unwrap();
        // g.g = identity for a diagonal +-1 metric
        for mu in 0..3 {
            assert_eq!(g.g(mu, mu) * g.g(mu, mu), 1.0);
        }
        assert_eq!(g.g(0, 1), 0.0);
    }

    #[test]
    fn non_finite_state_rejected() {
        let r = ExtendedState::new(vec![0.0], vec![f64::NAN], vec![0.0], vec![0.0]);
        assert!(matches!(r, Err(Error::NonFinite { index: 2 })));
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(
            v in proptest::collection::vec(-100.0f64..100.0, 12),
            m in 0.1f64..10.0,
            c in 0.1f64..10.0,
        ) {
            let k = PhysicalConstants::new(m, c, 1.0, 1.0).unwrap();
            let s = ExtendedState::new(v[0..3].to_vec(), v[3..6].to_vec(), v[6..9].to_vec(), v[9..12].to_vec()).unwrap();
            let chart = KineticChart::from_state(&s, &k).unwrap();
            let (q, p) = inverse_pullbacks(&chart, &s.b, &s.pi_b, &k).unwrap();
            for i in 0..3 {
                let tq = 1e-14 * (s.q[i].abs() + k.coordinate_coupling() * s.pi_b[i].abs()).max(1.0);
                let tp = 1e-14 * (s.p[i].abs() + k.momentum_coupling() * s.b[i].abs()).max(1.0);
                prop_assert!((q[i] - s.q[i]).abs() <= tq);
                prop_assert!((p[i] - s.p[i]).abs() <= tp);
            }
        }

        #[test]
        fn pullbacks_are_affine(
            p in proptest::collection::vec(-10.0f64..10.0, 2),
            b in proptest::collection::vec(-10.0f64..10.0, 2),
            alpha in -4.0f64..4.0,
        ) {
            let k = PhysicalConstants::new(1.3, 2.0, 1.0, 1.0).unwrap();
            let scaled: Vec<f64> = p.iter().map(|x| alpha * x).collect();
            let a = pullback_momentum(&scaled, &b, &k).unwrap();
            let o = pullback_momentum(&p, &b, &k).unwrap();
            for i in 0..2 {
                let diff = a[i] - o[i];
                let want = (alpha - 1.0) * p[i];
                prop_assert!((diff - want).abs() <= 1e-12 * (1.0 + p[i].abs() * alpha.abs() + b[i].abs()));
            }
        }

        #[test]
        fn flat_layout_round_trips(v in proptest::collection::vec(-1e6f64..1e6, 8)) {
            let s = ExtendedState::from_flat(&v).unwrap();
            prop_assert_eq!(s.to_flat(), v);
        }
    }
}
