//! Problem parameters, critical exponents and the spectral classification of
//! the interior equilibrium of the Emden–Fowler system.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Validated `(n, k, q, λ)` for `c_{n,k} r^{1-n} (r^{n-k} (u')^k)' = λ (1-u)^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: u32,
    pub k: u32,
    pub q: f64,
    pub lambda: Option<f64>,
}

/// Validates the tuple; every violated constraint is reported, not just the first.
pub fn make_params(n: i64, k: i64, q: f64, lambda: Option<f64>) -> Result<ProblemParams> {
    let mut violations = Vec::new();
    if k < 1 {
        violations.push(format!("k must be >= 1 (got k={k})"));
    }
    if n <= 2 * k {
        violations.push(format!("n must exceed 2k (got n={n}, 2k={})", 2 * k));
    }
    if !q.is_finite() || q <= k as f64 {
        violations.push(format!("q must be finite and exceed k (got q={q}, k={k})"));
    }
    if let Some(l) = lambda {
        if !l.is_finite() || l <= 0.0 {
            violations.push(format!("lambda must be positive (got lambda={l})"));
        }
    }
    if n > u32::MAX as i64 || n < 0 {
        violations.push(format!("n out of range (got n={n})"));
    }
    if !violations.is_empty() {
        return Err(Error::Domain(violations));
    }
    Ok(ProblemParams {
        n: n as u32,
        k: k as u32,
        q,
        lambda,
    })
}

impl ProblemParams {
    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn kf(&self) -> f64 {
        self.k as f64
    }

    /// `τ = 2k/(q-k)`, the decay exponent of the singular profile.
    pub fn tau(&self) -> f64 {
        2.0 * self.kf() / (self.q - self.kf())
    }

    /// `a = q(n-2k) - nk`.
    pub fn a(&self) -> f64 {
        self.q * (self.nf() - 2.0 * self.kf()) - self.nf() * self.kf()
    }

    pub fn lambda_tilde(&self) -> f64 {
        lambda_tilde(self.n, self.k, self.q)
    }

    pub fn c_nk(&self) -> f64 {
        c_nk(self.n, self.k)
    }

    pub fn q_star(&self) -> f64 {
        q_star(self.n, self.k)
    }

    pub fn q_jl(&self) -> QJl {
        q_jl(self.n, self.k)
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self)
    }

    pub fn derived(&self) -> DerivedConstants {
        let (n, k, q) = (self.nf(), self.kf(), self.q);
        let a = self.a();
        DerivedConstants {
            c_nk: self.c_nk(),
            tau: self.tau(),
            a,
            lambda_tilde: self.lambda_tilde(),
            q_star: self.q_star(),
            q_jl: self.q_jl(),
            mu_star: mu_star(self.n, self.k),
            discriminant: ((2.0 * k - a).powi(2) - 8.0 * a * (q - k)) / (q - k).powi(2),
            trace_j: (2.0 * k - a) / (q - k),
            det_j: 2.0 * a / (q - k),
            lambda_tilde_positive: q > n * k / (n - 2.0 * k),
        }
    }
}

/// Joseph–Lundgren type exponent: finite only when `n > 2k + 8`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum QJl {
    Finite(f64),
    Infinite,
}

impl QJl {
    pub fn is_finite(&self) -> bool {
        matches!(self, QJl::Finite(_))
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            QJl::Finite(v) => *v,
            QJl::Infinite => f64::INFINITY,
        }
    }

    /// `q >= q_JL`; never true for the infinite branch.
    pub fn attained_by(&self, q: f64) -> bool {
        match self {
            QJl::Finite(v) => q >= *v,
            QJl::Infinite => false,
        }
    }
}

impl fmt::Display for QJl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QJl::Finite(v) => write!(f, "{v}"),
            QJl::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub c_nk: f64,
    pub tau: f64,
    pub a: f64,
    pub lambda_tilde: f64,
    pub q_star: f64,
    pub q_jl: QJl,
    pub mu_star: f64,
    pub discriminant: f64,
    pub trace_j: f64,
    pub det_j: f64,
    pub lambda_tilde_positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RegimeTag {
    Subcritical,
    Center,
    Spiral,
    Node,
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegimeTag::Subcritical => "SUBCRITICAL",
            RegimeTag::Center => "CENTER",
            RegimeTag::Spiral => "SPIRAL",
            RegimeTag::Node => "NODE",
        };
        f.write_str(s)
    }
}

/// Regime tag plus the eigenvalues of the Jacobian at the interior equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub eigenvalues: [Complex64; 2],
}

impl Regime {
    /// Angular frequency of the linearised rotation (0 for real eigenvalues).
    pub fn rotation_rate(&self) -> f64 {
        self.eigenvalues[0].im.abs()
    }
}

fn binomial(n: u32, k: u32) -> BigInt {
    let k = if 2 * k > n { n - k } else { k };
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `binom(n,k)` as a float.
pub fn binomial_f64(n: u32, k: u32) -> f64 {
    binomial(n, k).to_f64().expect("binomial representable")
}

/// `c_{n,k} = binom(n,k)/n` as an exact rational.
pub fn c_nk_exact(n: u32, k: u32) -> BigRational {
    BigRational::new(binomial(n, k), BigInt::from(n))
}

pub fn c_nk(n: u32, k: u32) -> f64 {
    c_nk_exact(n, k).to_f64().expect("c_nk representable")
}

/// `q*(k)` as an exact rational.
pub fn q_star_exact(n: u32, k: u32) -> BigRational {
    BigRational::new(BigInt::from((n + 2) * k), BigInt::from(n - 2 * k))
}

/// `q*(k) = (n+2)k/(n-2k)`.
pub fn q_star(n: u32, k: u32) -> f64 {
    let (n, k) = (n as f64, k as f64);
    (n + 2.0) * k / (n - 2.0 * k)
}

pub fn q_jl(n: u32, k: u32) -> QJl {
    if n <= 2 * k + 8 {
        return QJl::Infinite;
    }
    let (n, k) = (n as f64, k as f64);
    let root = 2.0 * (2.0 * ((k + 1.0) * n - 2.0 * k)).sqrt();
    let num = (k + 1.0) * n - 2.0 * (k - 1.0) - root;
    let den = (k + 1.0) * n - 2.0 * k * (k + 3.0) - root;
    QJl::Finite(k * num / den)
}

/// `λ̃(k) = τ^k (n - 2k - kτ)`; non-positive when `q <= nk/(n-2k)`.
pub fn lambda_tilde(n: u32, k: u32, q: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let tau = 2.0 * kf / (q - kf);
    tau.powi(k as i32) * (nf - 2.0 * kf - kf * tau)
}

/// `μ*(k) = binom(n,k) ((n-2k)/k)^k k^k / (k+1)^{k+1}`, exactly.
pub fn mu_star_exact(n: u32, k: u32) -> BigRational {
    // the k^k factors cancel
    let num = binomial(n, k) * BigInt::from(n - 2 * k).pow(k);
    let den = BigInt::from(k + 1).pow(k + 1);
    BigRational::new(num, den)
}

pub fn mu_star(n: u32, k: u32) -> f64 {
    mu_star_exact(n, k).to_f64().expect("mu_star representable")
}

/// `f_k(q) = 4q/(q-k) + 4 sqrt(q/(q-k)) + 2k(k-1)/(q-k)`.
pub fn f_k(k: u32, q: f64) -> f64 {
    let k = k as f64;
    4.0 * q / (q - k) + 4.0 * (q / (q - k)).sqrt() + 2.0 * k * (k - 1.0) / (q - k)
}

/// Eigenvalues `½ tr J ± ½ sqrt(tr² - 4 det)` and the regime tag.
///
/// Ties resolve as `q == q*` → CENTER and `q == q_JL` → NODE, using exact
/// floating-point equality against the exponents computed here.
pub fn classify_regime(params: &ProblemParams) -> Regime {
    let q = params.q;
    let qs = params.q_star();
    let k = params.kf();
    let a = params.a();
    let tag = if q == qs {
        RegimeTag::Center
    } else if q < qs {
        RegimeTag::Subcritical
    } else if params.q_jl().attained_by(q) {
        RegimeTag::Node
    } else {
        RegimeTag::Spiral
    };
    // 2k - a vanishes identically at q*; do not let roundoff leak into the real part
    let trace = if tag == RegimeTag::Center {
        0.0
    } else {
        (2.0 * k - a) / (q - k)
    };
    let det = 2.0 * a / (q - k);
    let disc = Complex64::new(trace * trace - 4.0 * det, 0.0).sqrt();
    let half = Complex64::new(0.5 * trace, 0.0);
    Regime {
        tag,
        eigenvalues: [half + 0.5 * disc, half - 0.5 * disc],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    #[test]
    fn make_params_accepts_and_rejects() {
        assert!(make_params(11, 1, 7.0, None).is_ok());
        assert!(matches!(make_params(4, 2, 3.0, None), Err(Error::Domain(_))));
        assert!(matches!(make_params(13, 2, 2.0, None), Err(Error::Domain(_))));
        assert!(make_params(11, 1, 7.0, Some(0.0)).is_err());
        match make_params(2, 0, -1.0, Some(-3.0)) {
            Err(Error::Domain(v)) => assert_eq!(v.len(), 3),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn c_nk_values() {
        assert_eq!(c_nk_exact(11, 1), BigRational::from_integer(1.into()));
        assert_eq!(c_nk_exact(5, 2), BigRational::from_integer(2.into()));
        assert_eq!(c_nk_exact(13, 2), BigRational::from_integer(6.into()));
        assert_eq!(c_nk_exact(7, 3), BigRational::from_integer(5.into()));
    }

    #[test]
    fn q_star_values() {
        assert!((q_star(5, 1) - 7.0 / 3.0).abs() < 1e-15);
        assert!((q_star(13, 2) - 10.0 / 3.0).abs() < 1e-15);
        for n in 3..40 {
            let expect = (n as f64 + 2.0) / (n as f64 - 2.0);
            assert!((q_star(n, 1) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn q_jl_values() {
        let s10 = 10f64.sqrt();
        let expect = (11.0 - 2.0 * s10) / (7.0 - 2.0 * s10);
        assert!((q_jl(11, 1).as_f64() - expect).abs() < 1e-12);
        assert!((expect - 6.922).abs() < 1e-3);
        assert_eq!(q_jl(10, 1), QJl::Infinite);
        let s70 = 70f64.sqrt();
        let expect = 2.0 * (37.0 - 2.0 * s70) / (19.0 - 2.0 * s70);
        assert!((q_jl(13, 2).as_f64() - expect).abs() < 1e-11);
        assert!((expect - 17.881).abs() < 1e-3);
    }

    #[test]
    fn lambda_tilde_values() {
        assert!((lambda_tilde(11, 1, 7.0) - 26.0 / 9.0).abs() < 1e-14);
        assert!((lambda_tilde(11, 1, 8.0) - 122.0 / 49.0).abs() < 1e-14);
        // q = nk/(n-2k)
        assert!(lambda_tilde(11, 1, 11.0 / 9.0).abs() < 1e-12);
        assert!(lambda_tilde(13, 2, 26.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn mu_star_values() {
        assert_eq!(mu_star_exact(4, 1), BigRational::from_integer(2.into()));
        assert_eq!(mu_star_exact(5, 1), BigRational::new(15.into(), 4.into()));
        assert_eq!(mu_star_exact(5, 2), BigRational::new(10.into(), 27.into()));
    }

    #[test]
    fn regime_examples() {
        let p = make_params(13, 2, 5.0, None).unwrap();
        let d = p.derived();
        assert_eq!(d.a, 19.0);
        assert!((d.trace_j - (-5.0)).abs() < 1e-14);
        assert!((d.discriminant - (-231.0 / 9.0)).abs() < 1e-12);
        assert_eq!(p.regime().tag, RegimeTag::Spiral);
        assert!(p.regime().eigenvalues[0].re < 0.0);

        let p = make_params(11, 1, 8.0, None).unwrap();
        let r = p.regime();
        assert_eq!(r.tag, RegimeTag::Node);
        for e in r.eigenvalues {
            assert_eq!(e.im, 0.0);
            assert!(e.re < 0.0);
        }

        let p = make_params(5, 1, q_star(5, 1), None).unwrap();
        let r = p.regime();
        assert_eq!(r.tag, RegimeTag::Center);
        for e in r.eigenvalues {
            assert_eq!(e.re, 0.0);
            assert!(e.im != 0.0);
        }

        let p = make_params(11, 1, q_jl(11, 1).as_f64(), None).unwrap();
        assert_eq!(p.regime().tag, RegimeTag::Node);
        let p = make_params(11, 1, 1.2, None).unwrap();
        assert_eq!(p.regime().tag, RegimeTag::Subcritical);
    }

    #[test]
    fn f_k_limits() {
        let q: f64 = 7.3;
        let f1 = 4.0 * q / (q - 1.0) + 4.0 * (q / (q - 1.0)).sqrt();
        assert!((f_k(1, q) - f1).abs() < 1e-14);
        for k in 1..4 {
            assert!((f_k(k, 1e12) - 8.0).abs() < 1e-5);
        }
        for (n, k) in [(11, 1), (13, 2), (30, 3)] {
            let qj = q_jl(n, k).as_f64();
            assert!((f_k(k, qj) - (n - 2 * k) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn binomial_small() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(13, 2), BigInt::from(78));
        assert_eq!(binomial(60, 30), BigInt::from_u128(118264581564861424).unwrap());
    }
}
