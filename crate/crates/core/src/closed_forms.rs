//! Explicit solutions: Bliss functions and the critical-exponent solutions
//! built from them, the singular solution, the homoclinic orbit at `q = q*`,
//! and the convex subsolution transform `Φ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{binomial_f64, c_nk, lambda_tilde, make_params, mu_star, q_star};
use crate::solution::{RadialSolution, SolutionSource};

/// Scale parameter `d` of the Bliss family in dimension `n` with order `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlissParams {
    pub n: u32,
    pub k: u32,
    pub d: f64,
}

impl BlissParams {
    pub fn new(n: u32, k: u32, d: f64) -> Result<Self> {
        let mut errs = Vec::new();
        if k < 1 || n <= 2 * k {
            errs.push(format!("need k >= 1 and n > 2k, got n={n}, k={k}"));
        }
        if !(d > 0.0 && d.is_finite()) {
            errs.push(format!("d must be positive, got {d}"));
        }
        if errs.is_empty() {
            Ok(BlissParams { n, k, d })
        } else {
            Err(Error::Domain(errs))
        }
    }

    /// Decay exponent `(n-2k)/(2k)`.
    fn decay(&self) -> f64 {
        (self.n as f64 - 2.0 * self.k as f64) / (2.0 * self.k as f64)
    }

    /// `-w_d(0)`.
    pub fn amplitude(&self) -> f64 {
        let (n, k) = (self.n as f64, self.k as f64);
        let base = self.d * binomial_f64(self.n, self.k).powf(1.0 / k) * (n - 2.0 * k) / k;
        base.powf((n - 2.0 * k) / (2.0 * (k + 1.0)))
    }
}

/// `w_d(r) = -C_d (1 + d r²)^{-(n-2k)/(2k)}`.
pub fn bliss_value(bliss: &BlissParams, radius: f64) -> f64 {
    -bliss.amplitude() * (1.0 + bliss.d * radius * radius).powf(-bliss.decay())
}

/// `w_d'(r)`.
pub fn bliss_derivative(bliss: &BlissParams, radius: f64) -> f64 {
    let e = bliss.decay();
    let d = bliss.d;
    2.0 * e * d * radius * bliss.amplitude() * (1.0 + d * radius * radius).powf(-e - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DRootKind {
    None,
    Double,
    Two,
}

/// Roots of `λ(d+1)^{k+1} = binom(n,k) ((n-2k)/k)^k d^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DRoots {
    pub kind: DRootKind,
    pub d_minus: Option<f64>,
    pub d_plus: Option<f64>,
}

/// `binom(n,k) ((n-2k)/k)^k`.
fn d_equation_constant(n: u32, k: u32) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    binomial_f64(n, k) * ((nf - 2.0 * kf) / kf).powf(kf)
}

/// Residual `λ(d+1)^{k+1} - binom(n,k)((n-2k)/k)^k d^k`.
pub fn d_equation_residual(lambda: f64, n: u32, k: u32, d: f64) -> f64 {
    let kf = k as f64;
    lambda * (d + 1.0).powf(kf + 1.0) - d_equation_constant(n, k) * d.powf(kf)
}

const DOUBLE_ROOT_BAND: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 200;

/// Bisection on a sign change of `g` over `[lo, hi]` down to adjacent floats.
fn bisect<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64) -> f64 {
    let g_lo = g(lo);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm > 0.0) == (g_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn solve_d(lambda: f64, n: u32, k: u32) -> Result<DRoots> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
    }
    if k < 1 || n <= 2 * k {
        return Err(Error::domain(format!("need k >= 1 and n > 2k, got n={n}, k={k}")));
    }
    let mu = mu_star(n, k);
    let kf = k as f64;
    if (lambda - mu).abs() < DOUBLE_ROOT_BAND * mu {
        return Ok(DRoots {
            kind: DRootKind::Double,
            d_minus: Some(kf),
            d_plus: Some(kf),
        });
    }
    if lambda > mu {
        return Ok(DRoots {
            kind: DRootKind::None,
            d_minus: None,
            d_plus: None,
        });
    }
    // log form: positive near 0 and at infinity, negative at the minimum d = k
    let ln_b = d_equation_constant(n, k).ln();
    let ln_l = lambda.ln();
    let g = |d: f64| ln_l + (kf + 1.0) * d.ln_1p() - ln_b - kf * d.ln();
    let d_minus = bisect(g, f64::MIN_POSITIVE, kf);
    let mut hi = 2.0 * kf;
    let mut doublings = 0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::Numeric(format!(
                "no sign change for the larger root of the d-equation at lambda={lambda}"
            )));
        }
    }
    let d_plus = bisect(g, kf, hi);
    Ok(DRoots {
        kind: DRootKind::Two,
        d_minus: Some(d_minus),
        d_plus: Some(d_plus),
    })
}

/// A closed-form solution of the critical problem, callable at any `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalProfile {
    pub n: u32,
    pub k: u32,
    pub lambda: f64,
    pub d: f64,
    /// True for the single solution at `λ = μ*`.
    pub extremal: bool,
}

impl CriticalProfile {
    fn decay(&self) -> f64 {
        (self.n as f64 - 2.0 * self.k as f64) / (2.0 * self.k as f64)
    }

    /// `(u(r), u'(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let e = self.decay();
        let d = self.d;
        if self.extremal {
            // 1 - ((1+k)/(1+k r²))^{(n-2k)/(2k)}
            let kf = self.k as f64;
            let base = (1.0 + kf) / (1.0 + kf * r * r);
            let u = 1.0 - base.powf(e);
            let du = 2.0 * e * kf * r * base.powf(e) / (1.0 + kf * r * r);
            return (u, du);
        }
        let bliss = BlissParams {
            n: self.n,
            k: self.k,
            d,
        };
        let kf = self.k as f64;
        let scale = self.lambda.powf(-(self.n as f64 - 2.0 * kf) / (2.0 * kf * (kf + 1.0)));
        let u = 1.0 + scale * bliss_value(&bliss, r);
        let du = scale * bliss_derivative(&bliss, r);
        (u, du)
    }

    pub fn sample(&self, points: usize, index: usize) -> Result<RadialSolution> {
        let r: Vec<f64> = uniform_grid(points);
        let (u, du): (Vec<f64>, Vec<f64>) = r.iter().map(|&x| self.eval(x)).unzip();
        let params = make_params(self.n as i64, self.k as i64, q_star(self.n, self.k), Some(self.lambda))?;
        Ok(RadialSolution::new(
            params,
            self.lambda,
            SolutionSource::ClosedForm,
            index,
            r,
            u,
            du,
        ))
    }
}

/// `points` uniformly spaced radii on `[0, 1]`.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    let m = points.max(2) - 1;
    (0..=m).map(|i| i as f64 / m as f64).collect()
}

/// Default sample count for closed-form profiles.
pub const DEFAULT_POINTS: usize = 401;

/// The closed-form profiles solving the critical problem at `λ`, ordered
/// from the smaller root `d_-` (the maximal solution) to `d_+`.
pub fn critical_profiles(lambda: f64, n: u32, k: u32) -> Result<Vec<CriticalProfile>> {
    let roots = solve_d(lambda, n, k)?;
    let make = |d: f64, extremal: bool| CriticalProfile {
        n,
        k,
        lambda,
        d,
        extremal,
    };
    match roots.kind {
        DRootKind::None => Err(Error::domain(format!(
            "lambda={lambda} exceeds mu*={}: the critical problem has no solution",
            mu_star(n, k)
        ))),
        DRootKind::Double => Ok(vec![make(k as f64, true)]),
        DRootKind::Two => Ok(vec![
            make(roots.d_minus.expect("two roots"), false),
            make(roots.d_plus.expect("two roots"), false),
        ]),
    }
}

pub fn critical_solutions(lambda: f64, n: u32, k: u32) -> Result<Vec<RadialSolution>> {
    critical_profiles(lambda, n, k)?
        .iter()
        .enumerate()
        .map(|(i, p)| p.sample(DEFAULT_POINTS, i))
        .collect()
}

/// The explicit singular solution `U(r) = 1 - r^{-τ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularSolution {
    pub n: u32,
    pub k: u32,
    pub q: f64,
    pub tau: f64,
    /// `c_{n,k} λ̃`
    pub lambda_sing: f64,
}

impl SingularSolution {
    pub fn value(&self, r: f64) -> f64 {
        1.0 - r.powf(-self.tau)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.tau * r.powf(-self.tau - 1.0)
    }

    /// `c_{n,k} r^{n-k} (U')^k`.
    pub fn flux_side(&self, r: f64) -> f64 {
        let (n, k) = (self.n as f64, self.k as f64);
        c_nk(self.n, self.k) * r.powf(n - k) * self.derivative(r).powf(k)
    }

    /// `λ_sing ∫_0^r s^{n-1} (1-U)^q ds = λ_sing r^{n-qτ}/(n-qτ)`.
    pub fn source_side(&self, r: f64) -> f64 {
        let e = self.n as f64 - self.q * self.tau;
        self.lambda_sing * r.powf(e) / e
    }

    /// Relative defect of the integral-solution identity at `r`.
    pub fn identity_residual(&self, r: f64) -> f64 {
        let lhs = self.flux_side(r);
        let rhs = self.source_side(r);
        ((lhs - rhs) / rhs).abs()
    }

    /// Exponent of `r` in `r^{n-k} (U')^{k+1}`.
    pub fn energy_exponent(&self) -> f64 {
        let (n, k) = (self.n as f64, self.k as f64);
        n - k - (k + 1.0) * (self.tau + 1.0)
    }

    /// `∫_0^1 r^{n-k} (U')^{k+1} dr`, `None` when it diverges.
    pub fn energy_integral(&self) -> Option<f64> {
        let e = self.energy_exponent();
        if e > -1.0 {
            Some(self.tau.powf(self.k as f64 + 1.0) / (e + 1.0))
        } else {
            None
        }
    }
}

pub fn singular_solution(n: u32, k: u32, q: f64) -> Result<SingularSolution> {
    let p = make_params(n as i64, k as i64, q, None)?;
    let lt = lambda_tilde(n, k, q);
    if !(lt > 0.0) {
        return Err(Error::domain(format!(
            "lambda_tilde={lt} is not positive: need q > nk/(n-2k) = {}",
            (n * k) as f64 / (n - 2 * k) as f64
        )));
    }
    Ok(SingularSolution {
        n,
        k,
        q,
        tau: p.tau(),
        lambda_sing: c_nk(n, k) * lt,
    })
}

/// The scale `d` for which `-(1+d s²)^{-(n-2k)/(2k)}` solves the rescaled IVP
/// at `q = q*`.
pub fn homoclinic_d(n: u32, k: u32) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let lt = lambda_tilde(n, k, q_star(n, k));
    kf * (lt / nf).powf(1.0 / kf) / (nf - 2.0 * kf)
}

/// `v(s) = -(1+d s²)^{-(n-2k)/(2k)}` and `v'(s)`.
pub fn homoclinic_v(s: f64, d: f64, n: u32, k: u32) -> (f64, f64) {
    let e = (n as f64 - 2.0 * k as f64) / (2.0 * k as f64);
    let base = 1.0 + d * s * s;
    (-base.powf(-e), 2.0 * e * d * s * base.powf(-e - 1.0))
}

/// The homoclinic orbit `(y(t), z(t))` at `q = q*`.
pub fn homoclinic_orbit(t: f64, d: f64, n: u32, k: u32) -> (f64, f64) {
    let (nf, kf) = (n as f64, k as f64);
    let lt = lambda_tilde(n, k, q_star(n, k));
    let growth = ((nf + 2.0) * kf * t / (kf + 1.0)).exp();
    let base = 1.0 + d * (2.0 * t).exp();
    let y = ((nf - 2.0 * kf) * d / kf).powf(kf) * growth * base.powf(-nf / 2.0);
    let z = lt * growth * base.powf(-(nf + 2.0) / 2.0);
    (y, z)
}

/// Convex subsolution transform `Φ = h̃⁻¹ ∘ h` for the pair
/// `g(t) = [λ₀(1+t)^q]^{1/k}`, `g̃(t) = [λ(1+t)^q]^{1/k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiTransform {
    pub lambda: f64,
    pub lambda0: f64,
    pub k: u32,
    pub q: f64,
}

impl PhiTransform {
    pub fn new(lambda: f64, lambda0: f64, k: u32, q: f64) -> Result<Self> {
        let mut errs = Vec::new();
        if !(lambda > 0.0) {
            errs.push(format!("lambda must be positive, got {lambda}"));
        }
        if !(lambda < lambda0) {
            errs.push(format!("need lambda < lambda0, got {lambda} >= {lambda0}"));
        }
        if k < 1 {
            errs.push("k must be at least 1".to_string());
        }
        if !(q > k as f64) {
            errs.push(format!("need q > k, got q={q}, k={k}"));
        }
        if errs.is_empty() {
            Ok(PhiTransform { lambda, lambda0, k, q })
        } else {
            Err(Error::Domain(errs))
        }
    }

    fn p(&self) -> f64 {
        (self.q - self.k as f64) / self.k as f64
    }

    fn rho(&self) -> f64 {
        (self.lambda / self.lambda0).powf(1.0 / self.k as f64)
    }

    /// `h(s) = λ₀^{-1/k} (k/(q-k)) [1 - (1-s)^{-(q-k)/k}]`.
    pub fn h(&self, s: f64) -> f64 {
        let p = self.p();
        self.lambda0.powf(-1.0 / self.k as f64) / p * -(-p * (-s).ln_1p()).exp_m1()
    }

    /// `h̃`, the same with `λ` in place of `λ₀`.
    pub fn h_tilde(&self, s: f64) -> f64 {
        let p = self.p();
        self.lambda.powf(-1.0 / self.k as f64) / p * -(-p * (-s).ln_1p()).exp_m1()
    }

    /// `Φ(s)` for `s <= 0`.
    pub fn eval(&self, s: f64) -> f64 {
        let p = self.p();
        // w = 1 - (1-s)^{-p} lies in [0, 1)
        let w = -(-p * (-s).ln_1p()).exp_m1();
        -((-self.rho() * w).ln_1p() / -p).exp_m1()
    }

    /// `Φ'(s) = ρ ((1-Φ)/(1-s))^{q/k}`.
    pub fn derivative(&self, s: f64) -> f64 {
        let e = self.q / self.k as f64;
        self.rho() * ((1.0 - self.eval(s)) / (1.0 - s)).powf(e)
    }

    /// `lim_{s→-∞} Φ(s) = 1 - (1-ρ)^{-k/(q-k)}`.
    pub fn limit(&self) -> f64 {
        -((-self.rho()).ln_1p() / -self.p()).exp_m1()
    }
}

pub fn phi_transform(s: f64, lambda: f64, lambda0: f64, k: u32, q: f64) -> Result<f64> {
    let phi = PhiTransform::new(lambda, lambda0, k, q)?;
    if s > 0.0 {
        return Err(Error::domain(format!("s must be nonpositive, got {s}")));
    }
    Ok(phi.eval(s))
}
