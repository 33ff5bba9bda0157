//! The rescaled initial value problem
//!
//! ```text
//! (s^{n-k} (v')^k)' = λ̃ s^{n-1} (-v)^q,   v(0) = -1,  v'(0) = 0,
//! ```
//!
//! integrated from a series start near the coordinate singularity out to
//! arbitrary `s`.
//!
//! Integration runs in `t = ln s` in two stages. Up to `s_switch` the state is
//! `(v, ln flux)` with `flux = s^{n-k} (v')^k`. Beyond it the state is the pair
//! of log-ratios `(ln(y/y₂), ln(z/z₂))` of the Emden–Fowler variables against
//! the interior equilibrium, which is the same ODE written so that the
//! deviation from the singular profile `-s^{-τ}` keeps full relative precision
//! however small it becomes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, ErrorScale, Jet, StepperOptions};
use crate::params::{ProblemParams, RegimeTag};
use crate::quadrature::{self, gauss_legendre};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvpOptions {
    /// Relative tolerance of the integrator.
    pub rtol: f64,
    /// Absolute tolerance on `v` during the first stage.
    pub atol: f64,
    /// Radius where the series start hands over to the integrator.
    pub s_init: f64,
    /// Radius where the state switches to log-deviation variables.
    pub s_switch: f64,
    pub max_steps: usize,
    /// Largest step in `t = ln s`.
    pub h_max: f64,
}

impl Default for IvpOptions {
    fn default() -> Self {
        IvpOptions {
            rtol: 1e-10,
            atol: 1e-12,
            s_init: 1e-4,
            s_switch: 1.0,
            max_steps: 2_000_000,
            h_max: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Knot {
    t: f64,
    state: [f64; 2],
    d1: [f64; 2],
    d2: [f64; 2],
}

/// One evaluated point of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub s: f64,
    pub v: f64,
    pub vprime: f64,
    pub flux: f64,
    /// `ln(y/y₂)` with `y₂ = τ^k`.
    pub ln_y_ratio: f64,
    /// `ln(z/z₂)` with `z₂ = λ̃`; equals `q ln(s^τ (-v))`.
    pub ln_z_ratio: f64,
    /// `d ln(y/y₂)/dt` and `d ln(z/z₂)/dt`.
    pub ln_y_rate: f64,
    pub ln_z_rate: f64,
}

/// The unique global solution of the rescaled IVP on `(0, s_max]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VProfile {
    pub params: ProblemParams,
    pub lambda_tilde: f64,
    pub s_init: f64,
    pub s_max: f64,
    pub tol: f64,
    t_switch: f64,
    direct: Vec<Knot>,
    deviation: Vec<Knot>,
}

/// Constants reused by every right-hand-side evaluation.
#[derive(Debug, Clone, Copy)]
struct Coeffs {
    n: f64,
    k: f64,
    q: f64,
    tau: f64,
    lt: f64,
    /// `a/(q-k)`
    alpha: f64,
    ln_tau: f64,
}

impl Coeffs {
    fn new(p: &ProblemParams) -> Self {
        Coeffs {
            n: p.nf(),
            k: p.kf(),
            q: p.q,
            tau: p.tau(),
            lt: p.lambda_tilde(),
            alpha: p.a() / (p.q - p.kf()),
            ln_tau: p.tau().ln(),
        }
    }

    fn direct_rhs(&self, t: f64, y: &[f64; 2]) -> [f64; 2] {
        let (v, lf) = (y[0], y[1]);
        if v >= 0.0 {
            return [f64::NAN; 2];
        }
        let vt = ((lf + (2.0 * self.k - self.n) * t) / self.k).exp();
        let lt = self.lt * (self.n * t - lf).exp() * (-v).powf(self.q);
        [vt, lt]
    }

    fn direct_second(&self, y: &[f64; 2], d1: &[f64; 2]) -> [f64; 2] {
        let (v, _) = (y[0], y[1]);
        let (vt, lt) = (d1[0], d1[1]);
        [
            vt * (lt + 2.0 * self.k - self.n) / self.k,
            lt * (self.n - lt + self.q * vt / v),
        ]
    }

    fn deviation_rhs(&self, y: &[f64; 2]) -> [f64; 2] {
        let (p, r) = (y[0], y[1]);
        [
            self.alpha * (r - p).exp_m1(),
            -self.q * self.tau * (p / self.k - r / self.q).exp_m1(),
        ]
    }

    fn deviation_second(&self, y: &[f64; 2], d1: &[f64; 2]) -> [f64; 2] {
        let (p, r) = (y[0], y[1]);
        let (pt, rt) = (d1[0], d1[1]);
        [
            self.alpha * (r - p).exp() * (rt - pt),
            -self.q * self.tau * (p / self.k - r / self.q).exp() * (pt / self.k - rt / self.q),
        ]
    }

    /// `(ln y/y₂, ln z/z₂)` from `(v, ln flux)` at `t`.
    fn deviation_at(&self, t: f64, v: f64, lf: f64) -> [f64; 2] {
        [
            lf + (2.0 * self.k - self.n + self.k * self.tau) * t - self.k * self.ln_tau,
            self.q * ((-v).ln() + self.tau * t),
        ]
    }

    /// `(v, ln flux)` from the deviation pair at `t`.
    fn state_at(&self, t: f64, p: f64, r: f64) -> (f64, f64) {
        let v = -(r / self.q - self.tau * t).exp();
        let lf = p + self.k * self.ln_tau + (self.n - 2.0 * self.k - self.k * self.tau) * t;
        (v, lf)
    }
}

/// Series start: `v ≈ -1 + c₂ s² + c₄ s⁴` with `c₂ = (λ̃/n)^{1/k}/2`.
///
/// Returns `(v, v')`.
pub fn series_start(params: &ProblemParams, s: f64) -> (f64, f64) {
    let (v, vp, _) = series_full(params, s);
    (v, vp)
}

/// Series values `(v, v', flux)`.
pub(crate) fn series_full(params: &ProblemParams, s: f64) -> (f64, f64, f64) {
    let n = params.nf();
    let k = params.kf();
    let q = params.q;
    let lt = params.lambda_tilde();
    let c2 = 0.5 * (lt / n).powf(1.0 / k);
    let c4 = -c2 * c2 * q * n / (2.0 * k * (n + 2.0));
    let s2 = s * s;
    let v = -1.0 + c2 * s2 + c4 * s2 * s2;
    let vp = 2.0 * c2 * s + 4.0 * c4 * s2 * s;
    let flux = lt * s.powf(n) * (1.0 / n - q * c2 * s2 / (n + 2.0));
    (v, vp, flux)
}

pub fn integrate_ivp(params: &ProblemParams, s_max: f64, tol: f64) -> Result<VProfile> {
    let opts = IvpOptions {
        rtol: tol,
        ..IvpOptions::default()
    };
    integrate_ivp_with(params, s_max, &opts)
}

pub fn integrate_ivp_with(params: &ProblemParams, s_max: f64, opts: &IvpOptions) -> Result<VProfile> {
    if params.regime().tag == RegimeTag::Subcritical {
        return Err(Error::Regime(format!(
            "q={} is below q*={}: global existence of the rescaled IVP is not available",
            params.q,
            params.q_star()
        )));
    }
    if !(s_max > opts.s_init) {
        return Err(Error::domain(format!(
            "s_max={s_max} must exceed the series start radius {}",
            opts.s_init
        )));
    }
    let c = Coeffs::new(params);
    let t_init = opts.s_init.ln();
    let t_max = s_max.ln();
    let t_switch = opts.s_switch.ln().clamp(t_init, t_max);

    let (v0, _, f0) = series_full(params, opts.s_init);
    let y0 = [v0, f0.ln()];
    let stepper = StepperOptions {
        rtol: opts.rtol,
        // ln flux is controlled absolutely: its error is the relative flux error
        scale: ErrorScale::Componentwise {
            atol: [opts.atol, opts.rtol],
            weight: [1.0, 0.0],
        },
        h_init: 1e-3,
        h_max: opts.h_max,
        max_steps: opts.max_steps,
    };
    let raw = ode::integrate(|t, y| c.direct_rhs(t, y), t_init, y0, t_switch, &stepper)?;
    let mut direct = Vec::with_capacity(raw.len());
    for (t, y) in raw {
        if !(y[0] < 0.0) {
            return Err(Error::Numeric(format!(
                "v reached {} at s={}: the global solution stays negative, tighten the tolerance",
                y[0],
                t.exp()
            )));
        }
        let d1 = c.direct_rhs(t, &y);
        let d2 = c.direct_second(&y, &d1);
        direct.push(Knot { t, state: y, d1, d2 });
    }

    let mut deviation = Vec::new();
    if t_max > t_switch {
        let last = direct.last().expect("at least one knot");
        let p0 = c.deviation_at(last.t, last.state[0], last.state[1]);
        let stepper = StepperOptions {
            rtol: opts.rtol,
            scale: ErrorScale::Joint { atol: 1e-300 },
            h_init: 1e-2,
            h_max: opts.h_max,
            max_steps: opts.max_steps,
        };
        let raw = ode::integrate(|_, y| c.deviation_rhs(y), t_switch, p0, t_max, &stepper)?;
        deviation = raw
            .into_iter()
            .map(|(t, y)| {
                let d1 = c.deviation_rhs(&y);
                let d2 = c.deviation_second(&y, &d1);
                Knot { t, state: y, d1, d2 }
            })
            .collect();
    }

    Ok(VProfile {
        params: *params,
        lambda_tilde: c.lt,
        s_init: opts.s_init,
        s_max,
        tol: opts.rtol,
        t_switch,
        direct,
        deviation,
    })
}

fn locate(knots: &[Knot], t: f64) -> usize {
    // index i with knots[i].t <= t <= knots[i+1].t
    let idx = knots.partition_point(|kn| kn.t <= t);
    idx.clamp(1, knots.len() - 1) - 1
}

fn interp(knots: &[Knot], t: f64) -> ([f64; 2], [f64; 2]) {
    if knots.len() == 1 {
        return (knots[0].state, knots[0].d1);
    }
    let i = locate(knots, t);
    let (a, b) = (&knots[i], &knots[i + 1]);
    let mut val = [0.0; 2];
    let mut der = [0.0; 2];
    for c in 0..2 {
        let ja = Jet {
            f: a.state[c],
            d1: a.d1[c],
            d2: a.d2[c],
        };
        let jb = Jet {
            f: b.state[c],
            d1: b.d1[c],
            d2: b.d2[c],
        };
        let (v, d, _) = ode::hermite5(a.t, b.t, ja, jb, t);
        val[c] = v;
        der[c] = d;
    }
    (val, der)
}

impl VProfile {
    fn coeffs(&self) -> Coeffs {
        Coeffs::new(&self.params)
    }

    pub fn t_min(&self) -> f64 {
        self.s_init.ln()
    }

    pub fn t_max(&self) -> f64 {
        self.s_max.ln()
    }

    /// Radius where the state switches to log-deviation variables.
    pub fn s_switch(&self) -> f64 {
        self.t_switch.exp()
    }

    pub fn knot_count(&self) -> usize {
        self.direct.len() + self.deviation.len().saturating_sub(1)
    }

    /// Evaluates the profile at `s ∈ (0, s_max]`; the series is used below `s_init`.
    pub fn eval(&self, s: f64) -> ProfilePoint {
        let c = self.coeffs();
        if s <= self.s_init {
            let (v, vp, flux) = series_full(&self.params, s);
            let t = s.ln();
            let dev = c.deviation_at(t, v, flux.ln());
            let d1 = [
                s * self.lambda_tilde * s.powf(c.n - 1.0) * (-v).powf(c.q) / flux + 2.0 * c.k - c.n + c.k * c.tau,
                c.q * (s * vp / v + c.tau),
            ];
            return ProfilePoint {
                s,
                v,
                vprime: vp,
                flux,
                ln_y_ratio: dev[0],
                ln_z_ratio: dev[1],
                ln_y_rate: d1[0],
                ln_z_rate: d1[1],
            };
        }
        let t = s.ln().min(self.t_max());
        self.eval_t(t)
    }

    /// Evaluates at `t = ln s`, `t ∈ [ln s_init, ln s_max]`.
    pub fn eval_t(&self, t: f64) -> ProfilePoint {
        let c = self.coeffs();
        let s = t.exp();
        let (v, lf, dev, ddev) = if t <= self.t_switch || self.deviation.is_empty() {
            let (y, d) = interp(&self.direct, t);
            let dev = c.deviation_at(t, y[0], y[1]);
            let ddev = [d[1] + 2.0 * c.k - c.n + c.k * c.tau, c.q * (d[0] / y[0] + c.tau)];
            (y[0], y[1], dev, ddev)
        } else {
            let (y, d) = interp(&self.deviation, t);
            let (v, lf) = c.state_at(t, y[0], y[1]);
            (v, lf, y, d)
        };
        ProfilePoint {
            s,
            v,
            vprime: ((lf + (c.k - c.n) * t) / c.k).exp(),
            flux: lf.exp(),
            ln_y_ratio: dev[0],
            ln_z_ratio: dev[1],
            ln_y_rate: ddev[0],
            ln_z_rate: ddev[1],
        }
    }

    /// Samples at every integrator knot, ascending in `s`.
    pub fn samples(&self) -> Vec<ProfilePoint> {
        let mut ts: Vec<f64> = self.direct.iter().map(|k| k.t).collect();
        ts.extend(self.deviation.iter().skip(1).map(|k| k.t));
        ts.into_iter().map(|t| self.eval_t(t)).collect()
    }

    /// Knot times `t = ln s`, ascending.
    pub fn knot_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.direct.iter().map(|k| k.t).collect();
        ts.extend(self.deviation.iter().skip(1).map(|k| k.t));
        ts
    }

    /// `∫_{s_a}^{s_b} σ^{m-1} (-v(σ))^p dσ` by Gauss–Legendre in `t` on every
    /// knot interval, for `s_init <= s_a <= s_b <= s_max`.
    pub(crate) fn weighted_power_integral(&self, m: f64, p: f64, s_a: f64, s_b: f64) -> f64 {
        let rule = gauss_legendre(8);
        let (ta, tb) = (s_a.ln(), s_b.ln());
        let mut cuts: Vec<f64> = self.knot_times().into_iter().filter(|&t| t > ta && t < tb).collect();
        cuts.insert(0, ta);
        cuts.push(tb);
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            acc += quadrature::integrate(
                |t| {
                    let pt = self.eval_t(t);
                    (m * t).exp() * (-pt.v).powf(p)
                },
                w[0],
                w[1],
                &rule,
            );
        }
        acc
    }

    /// `∫_0^{s} σ^{m-1} (-v)^p dσ`, using the series below `s_init`.
    pub(crate) fn weighted_power_integral_from_zero(&self, m: f64, p: f64, s: f64) -> f64 {
        let rule = gauss_legendre(8);
        let s0 = self.s_init.min(s);
        let head = quadrature::integrate(
            |x| {
                let (v, _, _) = series_full(&self.params, x);
                x.powf(m - 1.0) * (-v).powf(p)
            },
            0.0,
            s0,
            &rule,
        );
        if s <= self.s_init {
            return head;
        }
        head + self.weighted_power_integral(m, p, self.s_init, s)
    }

    /// Largest relative defect of `flux(s) = flux(s_init) + λ̃ ∫ σ^{n-1}(-v)^q`
    /// over the knots.
    pub fn flux_identity_residual(&self) -> f64 {
        let n = self.params.nf();
        let q = self.params.q;
        let rule = gauss_legendre(8);
        let times = self.knot_times();
        let mut acc = self.eval_t(times[0]).flux;
        let mut worst = 0.0f64;
        for w in times.windows(2) {
            acc += self.lambda_tilde
                * quadrature::integrate(|t| (n * t).exp() * (-self.eval_t(t).v).powf(q), w[0], w[1], &rule);
            let flux = self.eval_t(w[1]).flux;
            worst = worst.max(((flux - acc) / flux).abs());
        }
        worst
    }

    /// Sorted-sequence monotonicity of `v` and of the flux along the samples.
    pub fn is_monotone(&self) -> bool {
        let s = self.samples();
        s.windows(2).all(|w| w[1].v >= w[0].v && w[1].flux >= w[0].flux)
    }
}

/// The terms of the Pohozaev-type identity at radius `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PohozaevTerms {
    /// `λ̃(n-2k)(q*-q)/((k+1)(q+1)) ∫_0^R ξ^{n-1}(-v)^{q+1} dξ`
    pub lhs: f64,
    /// `(n-2k)/(k+1) R^{n-k} v (v')^k`
    pub boundary_flux: f64,
    /// `k/(k+1) R^{n-k+1} (v')^{k+1}`
    pub boundary_kinetic: f64,
    /// `λ̃/(q+1) R^n (-v)^{q+1}`
    pub boundary_potential: f64,
}

impl PohozaevTerms {
    pub fn rhs(&self) -> f64 {
        self.boundary_flux + self.boundary_kinetic + self.boundary_potential
    }

    pub fn residual(&self) -> f64 {
        self.lhs - self.rhs()
    }

    /// Residual relative to the largest individual term.
    pub fn relative(&self) -> f64 {
        let scale = [
            self.lhs,
            self.boundary_flux,
            self.boundary_kinetic,
            self.boundary_potential,
        ]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            0.0
        } else {
            self.residual().abs() / scale
        }
    }
}

/// Assembles the identity's terms from the boundary values and the interior
/// integral `∫_0^R ξ^{n-1}(-v)^{q+1}`.
pub fn pohozaev_from_values(
    params: &ProblemParams,
    lambda_tilde: f64,
    radius: f64,
    v: f64,
    vprime: f64,
    interior: f64,
) -> PohozaevTerms {
    let n = params.nf();
    let k = params.kf();
    let q = params.q;
    let qs = params.q_star();
    let coeff = lambda_tilde * (n - 2.0 * k) * (qs - q) / ((k + 1.0) * (q + 1.0));
    PohozaevTerms {
        lhs: coeff * interior,
        boundary_flux: (n - 2.0 * k) / (k + 1.0) * radius.powf(n - k) * v * vprime.powf(k),
        boundary_kinetic: k / (k + 1.0) * radius.powf(n - k + 1.0) * vprime.powf(k + 1.0),
        boundary_potential: lambda_tilde / (q + 1.0) * radius.powf(n) * (-v).powf(q + 1.0),
    }
}

pub fn pohozaev_terms(profile: &VProfile, radius: f64) -> PohozaevTerms {
    let q = profile.params.q;
    let n = profile.params.nf();
    let pt = profile.eval(radius);
    let interior = profile.weighted_power_integral_from_zero(n, q + 1.0, radius);
    pohozaev_from_values(&profile.params, profile.lambda_tilde, radius, pt.v, pt.vprime, interior)
}

/// `LHS - RHS` of the Pohozaev-type identity at radius `R`.
pub fn pohozaev_residual(profile: &VProfile, radius: f64) -> f64 {
    pohozaev_terms(profile, radius).residual()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    #[test]
    fn series_limits() {
        let p = make_params(11, 1, 8.0, None).unwrap();
        let (v, vp) = series_start(&p, 0.0);
        assert_eq!(v, -1.0);
        assert_eq!(vp, 0.0);
        // z/(n y) -> 1 near the origin
        let prof = integrate_ivp(&p, 2.0, 1e-10).unwrap();
        let pt = prof.eval(1e-5);
        let k = p.kf();
        let y = p.tau().powf(k) * pt.ln_y_ratio.exp();
        let z = p.lambda_tilde() * pt.ln_z_ratio.exp();
        assert!((z / (p.nf() * y) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn series_flux_matches_quadrature() {
        let p = make_params(13, 2, 5.0, None).unwrap();
        let s = 1e-3;
        let (_, _, flux) = series_full(&p, s);
        let rule = gauss_legendre(16);
        let lt = p.lambda_tilde();
        let quad = quadrature::integrate(
            |x| {
                let (v, _, _) = series_full(&p, x);
                lt * x.powf(12.0) * (-v).powf(5.0)
            },
            0.0,
            s,
            &rule,
        );
        assert!(((flux - quad) / quad).abs() < 1e-8);
    }

    #[test]
    fn subcritical_is_rejected() {
        let p = make_params(11, 1, 1.3, None).unwrap();
        assert!(matches!(integrate_ivp(&p, 10.0, 1e-10), Err(Error::Regime(_))));
    }

    #[test]
    fn profile_is_monotone_and_bounded() {
        let p = make_params(13, 2, 5.0, None).unwrap();
        let prof = integrate_ivp(&p, 1e4, 1e-10).unwrap();
        assert!(prof.is_monotone());
        for pt in prof.samples() {
            assert!(pt.v > -1.0 && pt.v < 0.0);
        }
    }

    #[test]
    fn pohozaev_vanishes_at_origin() {
        let p = make_params(11, 1, 8.0, None).unwrap();
        let prof = integrate_ivp(&p, 2.0, 1e-10).unwrap();
        let t = pohozaev_terms(&prof, 1e-3);
        assert!(t.residual().abs() < 1e-25);
    }
}
