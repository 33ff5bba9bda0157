//! The Emden–Fowler phase plane
//!
//! ```text
//! y = (dv/dt)^k e^{kτt},   z = λ̃ e^{qτt} (-v)^q,   s = e^t,
//! y' = z - a/(q-k) y,      z' = q z (τ - λ̃^{1/q} y^{1/k} z^{-1/q}),
//! ```
//!
//! obtained from a [`VProfile`] by the change of variables, never by
//! integrating the planar system itself.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ivp::VProfile;
use crate::params::{ProblemParams, Regime, RegimeTag};

/// Oldest time the orbit is extended to through the series start.
const T_FLOOR: f64 = -700.0;
/// Resampling step for the winding angle.
const WINDING_DT: f64 = 0.01;
/// Scan points per unit of `ln s` for level crossings (400 per decade).
pub const SCAN_PER_DECADE: f64 = 400.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSample {
    pub t: f64,
    pub y: f64,
    pub z: f64,
    pub dy: f64,
    pub dz: f64,
    /// `ln(y/y₂)`
    pub ln_y_ratio: f64,
    /// `ln(z/z₂)`
    pub ln_z_ratio: f64,
}

/// `O₁ = (0, 0)` and `O₂ = ((q-k)λ̃/a, λ̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibria {
    pub o1: [f64; 2],
    pub o2: [f64; 2],
}

pub fn equilibria(params: &ProblemParams) -> Equilibria {
    let lt = params.lambda_tilde();
    Equilibria {
        o1: [0.0, 0.0],
        o2: [(params.q - params.kf()) * lt / params.a(), lt],
    }
}

/// The planar vector field at `(y, z)`.
pub fn vector_field(params: &ProblemParams, y: f64, z: f64) -> (f64, f64) {
    let (k, q) = (params.kf(), params.q);
    let beta = params.a() / (q - k);
    let lt = params.lambda_tilde();
    let dy = z - beta * y;
    let dz = q * z * (params.tau() - lt.powf(1.0 / q) * y.powf(1.0 / k) * z.powf(-1.0 / q));
    (dy, dz)
}

/// The orbit of the global solution, sampled at the integrator knots.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseOrbit {
    pub params: ProblemParams,
    pub regime: Regime,
    pub equilibria: Equilibria,
    pub samples: Vec<PhaseSample>,
    #[serde(skip)]
    profile: VProfile,
}

pub fn to_phase(profile: &VProfile) -> PhaseOrbit {
    let params = profile.params;
    let mut orbit = PhaseOrbit {
        params,
        regime: params.regime(),
        equilibria: equilibria(&params),
        samples: Vec::new(),
        profile: profile.clone(),
    };
    orbit.samples = profile.knot_times().into_iter().map(|t| orbit.at(t)).collect();
    orbit
}

impl PhaseOrbit {
    pub fn profile(&self) -> &VProfile {
        &self.profile
    }

    pub fn t_min(&self) -> f64 {
        self.profile.t_min()
    }

    pub fn t_max(&self) -> f64 {
        self.profile.t_max()
    }

    /// Evaluates the orbit at any `t <= t_max`; times before the first
    /// knot use the series start.
    pub fn at(&self, t: f64) -> PhaseSample {
        let pt = if t < self.t_min() {
            self.profile.eval(t.exp())
        } else {
            self.profile.eval_t(t.min(self.t_max()))
        };
        let z2 = self.equilibria.o2[1];
        // y₂ = τ^k, the value the log-ratio is taken against
        let y_ref = self.params.tau().powf(self.params.kf());
        let y = y_ref * pt.ln_y_ratio.exp();
        let z = z2 * pt.ln_z_ratio.exp();
        PhaseSample {
            t,
            y,
            z,
            dy: y * pt.ln_y_rate,
            dz: z * pt.ln_z_rate,
            ln_y_ratio: pt.ln_y_ratio,
            ln_z_ratio: pt.ln_z_ratio,
        }
    }

    /// Angle of `(y - y₂, z - z₂)`, computed from the log-ratios so it stays
    /// accurate arbitrarily close to `O₂`.
    fn angle(&self, s: &PhaseSample) -> f64 {
        let [y2, z2] = self.equilibria.o2;
        (z2 * s.ln_z_ratio.exp_m1()).atan2(y2 * s.ln_y_ratio.exp_m1())
    }

    /// Continuous angle around `O₂` on a grid with step at most 0.01,
    /// starting from the first knot.
    pub fn unwrapped_angle(&self) -> Vec<(f64, f64)> {
        let (t0, t1) = (self.t_min(), self.t_max());
        let steps = ((t1 - t0) / WINDING_DT).ceil().max(1.0) as usize;
        let mut out = Vec::with_capacity(steps + 1);
        let mut prev = self.angle(&self.at(t0));
        let mut acc = prev;
        out.push((t0, acc));
        for i in 1..=steps {
            let t = t0 + (t1 - t0) * i as f64 / steps as f64;
            let a = self.angle(&self.at(t));
            let mut da = a - prev;
            if da > PI {
                da -= 2.0 * PI;
            } else if da < -PI {
                da += 2.0 * PI;
            }
            acc += da;
            prev = a;
            out.push((t, acc));
        }
        out
    }

    /// Number of full turns around `O₂`, counted from the direction of `O₁`
    /// where every orbit starts.
    ///
    /// In the node regime the angle must have settled over the last unit of
    /// `t`, otherwise the count could still change.
    pub fn winding_count(&self) -> Result<u32> {
        let angles = self.unwrapped_angle();
        // both ends of the orbit sit near O₁; measure turns from its exact
        // direction so a returning orbit counts a full loop
        let [y2, z2] = self.equilibria.o2;
        let theta_o1 = (-z2).atan2(-y2);
        let snap = |a: f64| theta_o1 + 2.0 * PI * ((a - theta_o1) / (2.0 * PI)).round();
        let first = snap(angles[0].1);
        let (t_end, mut last) = *angles.last().expect("nonempty");
        let end = self.at(t_end);
        if end.y.hypot(end.z) < 1e-2 * y2.hypot(z2) {
            last = snap(last);
        }
        if self.regime.tag == RegimeTag::Node {
            let idx = angles.partition_point(|(t, _)| *t < t_end - 1.0);
            let drift = (last - angles[idx.min(angles.len() - 1)].1).abs();
            if t_end - angles[0].0 < 1.0 || drift > 1e-2 {
                return Err(Error::InsufficientRange(format!(
                    "angle around O2 still moving ({drift:.3e} rad over the last unit of t) at t={t_end}"
                )));
            }
        }
        Ok(((last - first).abs() / (2.0 * PI) + 1e-6).floor() as u32)
    }

    /// Like [`winding_count`](Self::winding_count), failing when fewer than
    /// `required` turns fit in the sampled range.
    pub fn winding_count_at_least(&self, required: u32) -> Result<u32> {
        let count = self.winding_count()?;
        if count < required {
            return Err(Error::InsufficientRange(format!(
                "only {count} turns around O2 by t={}, {required} requested",
                self.t_max()
            )));
        }
        Ok(count)
    }

    /// `ln(z/λ̃)` at the level line of a rescaled `λ`:
    /// `z = λ̃^{-k/(q-k)} λ^{q/(q-k)}`.
    pub fn level_log_ratio(&self, lambda_rescaled: f64) -> f64 {
        let (k, q) = (self.params.kf(), self.params.q);
        q / (q - k) * (lambda_rescaled / self.params.lambda_tilde()).ln()
    }

    /// Every `t` at which `z(t)` crosses the level line of `lambda_query`
    /// (rescaled convention), ascending.
    pub fn line_intersections(&self, lambda_query: f64) -> Vec<f64> {
        let level = self.level_log_ratio(lambda_query);
        crossings(
            |t| self.at(t).ln_z_ratio - level,
            self,
            |t| {
                let s = self.at(t);
                s.dz / s.z
            },
        )
    }

    /// Count of samples where `z` decreases as `y` increases, beyond `tol`.
    pub fn z_monotone_in_y_violations(&self, tol: f64) -> usize {
        let mut pts: Vec<(f64, f64)> = self.samples.iter().map(|s| (s.y, s.z)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.windows(2).filter(|w| w[1].1 < w[0].1 - tol).count()
    }
}

/// Sign changes of `g` on the log-scan grid, extended below the first knot
/// until `g < 0`, each polished to full precision.
pub(crate) fn crossings<G, D>(g: G, orbit: &PhaseOrbit, dg: D) -> Vec<f64>
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let dt = std::f64::consts::LN_10 / SCAN_PER_DECADE;
    let mut t_lo = orbit.t_min();
    while g(t_lo) >= 0.0 && t_lo > T_FLOOR {
        t_lo = (t_lo - 5.0).max(T_FLOOR);
    }
    let t_hi = orbit.t_max();
    let steps = ((t_hi - t_lo) / dt).ceil().max(1.0) as usize;
    let mut roots = Vec::new();
    let mut t_prev = t_lo;
    let mut g_prev = g(t_lo);
    if g_prev == 0.0 {
        roots.push(t_lo);
    }
    for i in 1..=steps {
        let t = if i == steps {
            t_hi
        } else {
            t_lo + (t_hi - t_lo) * i as f64 / steps as f64
        };
        let gt = g(t);
        if gt == 0.0 {
            roots.push(t);
        } else if g_prev != 0.0 && (gt > 0.0) != (g_prev > 0.0) {
            roots.push(polish(&g, &dg, t_prev, t, g_prev));
        }
        t_prev = t;
        g_prev = gt;
    }
    roots
}

/// Bisection down to a relative width of 1e-12 followed by one Newton step
/// kept inside the bracket.
fn polish<G, D>(g: &G, dg: &D, mut a: f64, mut b: f64, mut ga: f64) -> f64
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    for _ in 0..200 {
        if (b - a) <= 1e-12 * a.abs().max(1.0) {
            break;
        }
        let m = 0.5 * (a + b);
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    let m = 0.5 * (a + b);
    let slope = dg(m);
    if slope != 0.0 && slope.is_finite() {
        let next = m - g(m) / slope;
        if next >= a && next <= b {
            return next;
        }
    }
    m
}

/// Dulac weight `ψ(y, z) = z^{a/(2kq) - 1}`.
pub fn dulac_weight(params: &ProblemParams, z: f64) -> f64 {
    z.powf(params.a() / (2.0 * params.kf() * params.q) - 1.0)
}

/// `∂_y(ψ ẏ) + ∂_z(ψ ż) = -ψ (a/(2k) - 1) λ̃^{1/q} y^{1/k} z^{-1/q}`.
pub fn dulac_divergence(y: f64, z: f64, params: &ProblemParams) -> f64 {
    let (k, q) = (params.kf(), params.q);
    let lt = params.lambda_tilde();
    -dulac_weight(params, z) * (params.a() / (2.0 * k) - 1.0) * lt.powf(1.0 / q) * y.powf(1.0 / k) * z.powf(-1.0 / q)
}

/// `ψ · (ẏ, ż)`.
pub fn dulac_weighted_field(params: &ProblemParams, y: f64, z: f64) -> (f64, f64) {
    let (dy, dz) = vector_field(params, y, z);
    let w = dulac_weight(params, z);
    (w * dy, w * dz)
}
