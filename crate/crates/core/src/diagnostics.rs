//! Residual oracles for sampled radial profiles `(r, u, u')`: the radial
//! operator by finite differences, the integrated flux identity, and the
//! Pohozaev-type identity after mapping back to the rescaled variable.

use serde::{Deserialize, Serialize};

use crate::ivp::pohozaev_from_values;
use crate::params::ProblemParams;
use crate::quadrature::{self, gauss_legendre};

/// Radii below this are excluded from the operator and identity checks.
pub const WINDOW_LO: f64 = 0.05;
/// Radii above this are excluded from the operator check.
pub const WINDOW_HI: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Largest relative defect of `S_k(D²u) = λ(1-u)^q` on the window.
    pub operator: f64,
    /// Largest relative defect of `c r^{n-k}(u')^k = λ∫_0^r s^{n-1}(1-u)^q`.
    pub integral_identity: f64,
    /// Relative Pohozaev residual at the boundary; absent when `λ̃ <= 0`.
    pub pohozaev: Option<f64>,
    /// `|u(1)|`.
    pub boundary: f64,
    /// `u < 0` on `[0, 1)`.
    pub negative: bool,
    /// `u` nondecreasing in `r`.
    pub monotone: bool,
}

impl Residuals {
    /// Largest of the three relative residuals.
    pub fn worst(&self) -> f64 {
        self.operator
            .max(self.integral_identity)
            .max(self.pohozaev.unwrap_or(0.0))
    }
}

/// Weights `w_j` with `f'(x0) ≈ Σ w_j f(x_j)` from the Lagrange interpolant
/// through `xs`.
fn derivative_weights(xs: &[f64], x0: f64) -> Vec<f64> {
    let m = xs.len();
    let mut w = vec![0.0; m];
    for j in 0..m {
        let mut sum = 0.0;
        for l in 0..m {
            if l == j {
                continue;
            }
            let mut prod = 1.0 / (xs[j] - xs[l]);
            for i in 0..m {
                if i != j && i != l {
                    prod *= (x0 - xs[i]) / (xs[j] - xs[i]);
                }
            }
            sum += prod;
        }
        w[j] = sum;
    }
    w
}

/// Five-point finite-difference derivative at every sample, one-sided at the
/// ends; valid on nonuniform grids.
pub fn fd_derivative(x: &[f64], f: &[f64]) -> Vec<f64> {
    let m = x.len();
    let width = 5.min(m);
    (0..m)
        .map(|i| {
            let lo = i.saturating_sub(width / 2).min(m - width);
            let xs = &x[lo..lo + width];
            derivative_weights(xs, x[i])
                .iter()
                .zip(&f[lo..lo + width])
                .map(|(w, v)| w * v)
                .sum()
        })
        .collect()
}

/// `c r^{1-k} (u')^{k-1} [(n-k) u'/r + k u'']`.
pub fn radial_operator(params: &ProblemParams, r: f64, du: f64, ddu: f64) -> f64 {
    let (n, k) = (params.nf(), params.kf());
    params.c_nk() * r.powf(1.0 - k) * du.powf(k - 1.0) * ((n - k) * du / r + k * ddu)
}

pub fn operator_residual(params: &ProblemParams, lambda: f64, r: &[f64], u: &[f64], du: &[f64]) -> f64 {
    let ddu = fd_derivative(r, du);
    let mut worst = 0.0f64;
    for i in 0..r.len() {
        if r[i] < WINDOW_LO || r[i] > WINDOW_HI {
            continue;
        }
        let lhs = radial_operator(params, r[i], du[i], ddu[i]);
        let rhs = lambda * (1.0 - u[i]).powf(params.q);
        worst = worst.max(((lhs - rhs) / rhs).abs());
    }
    worst
}

/// `∫_0^{r_i} s^{n-1}(1-u)^p ds` at every sample, integrating the cubic
/// Hermite interpolant of `(u, u')` with Gauss–Legendre on each interval.
fn moment(params: &ProblemParams, p: f64, r: &[f64], u: &[f64], du: &[f64]) -> Vec<f64> {
    let n = params.nf();
    let rule = gauss_legendre(8);
    let mut out = vec![0.0; r.len()];
    for i in 1..r.len() {
        let (x0, x1) = (r[i - 1], r[i]);
        let h = x1 - x0;
        let seg = quadrature::integrate(
            |s| {
                let t = (s - x0) / h;
                let (t2, t3) = (t * t, t * t * t);
                let us = (2.0 * t3 - 3.0 * t2 + 1.0) * u[i - 1]
                    + (t3 - 2.0 * t2 + t) * h * du[i - 1]
                    + (-2.0 * t3 + 3.0 * t2) * u[i]
                    + (t3 - t2) * h * du[i];
                s.powf(n - 1.0) * (1.0 - us).powf(p)
            },
            x0,
            x1,
            &rule,
        );
        out[i] = out[i - 1] + seg;
    }
    out
}

pub fn integral_identity_residual(params: &ProblemParams, lambda: f64, r: &[f64], u: &[f64], du: &[f64]) -> f64 {
    let (n, k) = (params.nf(), params.kf());
    let c = params.c_nk();
    let integral = moment(params, params.q, r, u, du);
    let mut worst = 0.0f64;
    for i in 0..r.len() {
        if r[i] < WINDOW_LO {
            continue;
        }
        let lhs = c * r[i].powf(n - k) * du[i].powf(k);
        let rhs = lambda * integral[i];
        worst = worst.max(((lhs - rhs) / rhs).abs());
    }
    worst
}

/// Pohozaev residual at `r = 1` after mapping `u` to the rescaled profile
/// `v(s) = (u(s/s₀) - 1)/(1 - A)` with `s₀^{2k} = λ(1-A)^{q-k}/(c λ̃)`.
pub fn pohozaev_relative(params: &ProblemParams, lambda: f64, r: &[f64], u: &[f64], du: &[f64]) -> Option<f64> {
    let lt = params.lambda_tilde();
    let (n, k, q) = (params.nf(), params.kf(), params.q);
    let a = *u.first()?;
    if !(lt > 0.0) || !(a < 1.0) {
        return None;
    }
    let one_minus_a = 1.0 - a;
    let s0 = (lambda * one_minus_a.powf(q - k) / (params.c_nk() * lt)).powf(0.5 / k);
    let m = moment(params, q + 1.0, r, u, du);
    let interior = s0.powf(n) * one_minus_a.powf(-(q + 1.0)) * m.last()?;
    let u1 = *u.last()?;
    let du1 = *du.last()?;
    let v = (u1 - 1.0) / one_minus_a;
    let vprime = du1 / (s0 * one_minus_a);
    Some(pohozaev_from_values(params, lt, s0, v, vprime, interior).relative())
}

/// Full residual report; `du` is recovered by finite differences when absent.
pub fn residuals(params: &ProblemParams, lambda: f64, r: &[f64], u: &[f64], du: Option<&[f64]>) -> Residuals {
    let owned;
    let du = match du {
        Some(d) => d,
        None => {
            owned = fd_derivative(r, u);
            &owned
        }
    };
    let m = u.len();
    Residuals {
        operator: operator_residual(params, lambda, r, u, du),
        integral_identity: integral_identity_residual(params, lambda, r, u, du),
        pohozaev: pohozaev_relative(params, lambda, r, u, du),
        boundary: u.last().map_or(f64::NAN, |x| x.abs()),
        negative: u[..m.saturating_sub(1)].iter().all(|&x| x < 0.0),
        monotone: u.windows(2).all(|w| w[1] >= w[0]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    #[test]
    fn fd_derivative_is_fourth_order() {
        let x: Vec<f64> = (0..=200).map(|i| (i as f64 / 200.0).powf(1.3)).collect();
        let f: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let d = fd_derivative(&x, &f);
        for (xi, di) in x.iter().zip(&d) {
            assert!((di - xi.cos()).abs() < 1e-7);
        }
    }

    #[test]
    fn laplacian_with_constant_source() {
        // k = 1: u = (r² - 1)/(2n) has Δu = 1
        let p = make_params(5, 1, 2.0, None).unwrap();
        let r: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
        let du: Vec<f64> = r.iter().map(|x| x / 5.0).collect();
        let ddu = fd_derivative(&r, &du);
        for i in 20..380 {
            assert!((radial_operator(&p, r[i], du[i], ddu[i]) - 1.0).abs() < 1e-10);
        }
    }
}
