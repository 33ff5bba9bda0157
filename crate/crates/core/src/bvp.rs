//! From one global orbit to the whole solution set of the boundary value
//! problem: the branch `s ↦ (λ(s), A(s))`, solution counts at a given `λ`,
//! reconstruction of each solution, the fixed-point iteration for the
//! maximal solution, and a bisection estimate of the extremal `λ*`.
//!
//! Two `λ` conventions are carried side by side: the rescaled
//! `λ̃ s^{2k} (-v(s))^{q-k}` and the physical value, which is `c_{n,k}` times
//! it. They coincide for `k = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ivp::{integrate_ivp_with, IvpOptions, ProfilePoint, VProfile};
use crate::params::{ProblemParams, RegimeTag};
use crate::phase::{crossings, to_phase};
use crate::quadrature::{PanelGrid, PowerWeights};
use crate::solution::{RadialSolution, SolutionSource};

pub const CONVENTIONS: &str = "lambda_rescaled = lambda_tilde * s^(2k) * (-v(s))^(q-k); \
lambda_physical = c_nk * lambda_rescaled; A = 1 + 1/v(s)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub s: f64,
    pub lambda_rescaled: f64,
    pub lambda_physical: f64,
    #[serde(rename = "A")]
    pub a: f64,
    /// `λ̃ - lambda_rescaled`, computed without cancellation.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationCurve {
    pub params: ProblemParams,
    pub lambda_tilde: f64,
    pub c_nk: f64,
    pub conventions: String,
    pub samples: Vec<BranchPoint>,
}

impl BifurcationCurve {
    /// Strict increase of `lambda_rescaled`, judged on the gap to `λ̃` so
    /// that it stays decidable once `λ(s)` rounds to `λ̃`.
    pub fn is_lambda_increasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].gap < w[0].gap)
    }

    pub fn is_a_decreasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].a < w[0].a)
    }

    /// Number of sign changes of `lambda_rescaled - level` along the samples.
    pub fn level_crossings(&self, level: f64) -> usize {
        let offset = self.lambda_tilde - level;
        self.samples
            .windows(2)
            .filter(|w| (offset - w[0].gap) * (offset - w[1].gap) < 0.0)
            .count()
    }
}

fn branch_point(params: &ProblemParams, lt: f64, pt: &ProfilePoint) -> BranchPoint {
    let (k, q) = (params.kf(), params.q);
    // ln(λ(s)/λ̃) = (q-k)/q · ln(z/λ̃)
    let x = pt.ln_z_ratio * (q - k) / q;
    let lambda_rescaled = lt * x.exp();
    BranchPoint {
        s: pt.s,
        lambda_rescaled,
        lambda_physical: params.c_nk() * lambda_rescaled,
        a: 1.0 + 1.0 / pt.v,
        gap: -lt * x.exp_m1(),
    }
}

/// `points_per_decade` log-spaced radii on `[s_min, s_max]`.
pub fn log_grid(s_min: f64, s_max: f64, points_per_decade: usize) -> Vec<f64> {
    let decades = (s_max / s_min).log10();
    let m = ((decades * points_per_decade as f64).ceil() as usize).max(1);
    let (a, b) = (s_min.ln(), s_max.ln());
    (0..=m).map(|i| (a + (b - a) * i as f64 / m as f64).exp()).collect()
}

fn require_supercritical(params: &ProblemParams) -> Result<()> {
    match params.regime().tag {
        RegimeTag::Spiral | RegimeTag::Node => Ok(()),
        tag => Err(Error::Regime(format!(
            "{tag} regime (q={}, q*={}): the branch analysis needs q > q*; at q = q* use the closed-form critical solutions",
            params.q,
            params.q_star()
        ))),
    }
}

pub fn bifurcation_curve_from(profile: &VProfile, s_grid: &[f64]) -> BifurcationCurve {
    let params = profile.params;
    let lt = profile.lambda_tilde;
    let samples = s_grid
        .iter()
        .filter(|&&s| s > 0.0 && s <= profile.s_max)
        .map(|&s| branch_point(&params, lt, &profile.eval(s)))
        .collect();
    BifurcationCurve {
        params,
        lambda_tilde: lt,
        c_nk: params.c_nk(),
        conventions: CONVENTIONS.to_string(),
        samples,
    }
}

pub fn bifurcation_curve(params: &ProblemParams, s_grid: &[f64], tol: f64) -> Result<BifurcationCurve> {
    require_supercritical(params)?;
    let s_max = s_grid.iter().cloned().fold(0.0, f64::max);
    let opts = IvpOptions {
        rtol: tol,
        ..IvpOptions::default()
    };
    let profile = integrate_ivp_with(params, s_max.max(2.0 * opts.s_init), &opts)?;
    Ok(bifurcation_curve_from(&profile, s_grid))
}

/// Solutions of the boundary value problem at one `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplicity {
    pub lambda_physical: f64,
    pub lambda_rescaled: f64,
    pub count: usize,
    /// More roots may lie beyond `s_max`.
    pub truncated: bool,
    pub roots: Vec<f64>,
}

/// Roots of `c_{n,k} λ(s) = lambda_physical` on an existing profile.
pub fn count_solutions_on(profile: &VProfile, lambda_physical: f64) -> Result<Multiplicity> {
    let params = profile.params;
    require_supercritical(&params)?;
    if !(lambda_physical > 0.0) {
        return Err(Error::domain(format!("lambda must be positive, got {lambda_physical}")));
    }
    let lambda_rescaled = lambda_physical / params.c_nk();
    let orbit = to_phase(profile);
    let level = orbit.level_log_ratio(lambda_rescaled);
    let times = crossings(
        |t| orbit.at(t).ln_z_ratio - level,
        &orbit,
        |t| {
            let s = orbit.at(t);
            s.dz / s.z
        },
    );
    let roots: Vec<f64> = times.iter().map(|t| t.exp()).collect();

    // the tail of ln(z/λ̃): over the last rotation period when spiralling,
    // at the endpoint when the approach is monotone
    let t_max = orbit.t_max();
    let r_end = orbit.at(t_max).ln_z_ratio;
    let truncated = match orbit.regime.tag {
        RegimeTag::Spiral => {
            let period = 2.0 * std::f64::consts::PI / orbit.regime.rotation_rate();
            let steps = 200;
            let tail = (0..=steps)
                .map(|i| orbit.at(t_max - period * i as f64 / steps as f64).ln_z_ratio.abs())
                .fold(0.0, f64::max);
            tail >= level.abs()
        }
        _ => level < 0.0 && r_end < level,
    };
    Ok(Multiplicity {
        lambda_physical,
        lambda_rescaled,
        count: roots.len(),
        truncated,
        roots,
    })
}

pub fn count_solutions(params: &ProblemParams, lambda_physical: f64, s_max: f64, tol: f64) -> Result<Multiplicity> {
    require_supercritical(params)?;
    let opts = IvpOptions {
        rtol: tol,
        ..IvpOptions::default()
    };
    let profile = integrate_ivp_with(params, s_max, &opts)?;
    count_solutions_on(&profile, lambda_physical)
}

/// Radii `sinh(αx)/sinh(α)` for uniform `x`, with `α = asinh(s₀)`: uniform
/// in `r` for small `s₀`, and resolving the scale `1/s₀` near the origin for
/// large `s₀`.
pub fn reconstruction_grid(s0: f64) -> Vec<f64> {
    let alpha = s0.asinh();
    let m = 400 + (80.0 * alpha).round() as usize;
    if alpha < 1e-3 {
        return (0..=m).map(|i| i as f64 / m as f64).collect();
    }
    let sh = alpha.sinh();
    let mut r: Vec<f64> = (0..=m).map(|i| (alpha * i as f64 / m as f64).sinh() / sh).collect();
    r[m] = 1.0;
    r
}

/// `u(r) = 1 - v(s₀ r)/v(s₀)`, exactly zero at `r = 1`.
pub fn reconstruct_u_on(profile: &VProfile, s0: f64, index: usize) -> Result<RadialSolution> {
    if !(s0 > 0.0 && s0 <= profile.s_max) {
        return Err(Error::domain(format!(
            "s0={s0} outside the profile range (0, {}]",
            profile.s_max
        )));
    }
    let params = profile.params;
    let end = profile.eval(s0);
    let lambda_physical = branch_point(&params, profile.lambda_tilde, &end).lambda_physical;
    let r = reconstruction_grid(s0);
    let mut u = Vec::with_capacity(r.len());
    let mut du = Vec::with_capacity(r.len());
    for &x in &r {
        let pt = if x == 1.0 { end } else { profile.eval(s0 * x) };
        u.push(1.0 - pt.v / end.v);
        du.push(-s0 * pt.vprime / end.v);
    }
    Ok(RadialSolution::new(
        params,
        lambda_physical,
        SolutionSource::Shooting,
        index,
        r,
        u,
        du,
    ))
}

pub fn reconstruct_u(params: &ProblemParams, s0: f64, tol: f64) -> Result<RadialSolution> {
    let opts = IvpOptions {
        rtol: tol,
        ..IvpOptions::default()
    };
    let profile = integrate_ivp_with(params, s0.max(2.0 * opts.s_init), &opts)?;
    reconstruct_u_on(&profile, s0, 0)
}

/// Every solution at `lambda_physical` with `s₀ <= s_max`, ordered by
/// increasing `s₀` (decreasing `u(0)`), with residuals attached.
pub fn solve_all(
    params: &ProblemParams,
    lambda_physical: f64,
    s_max: f64,
    tol: f64,
) -> Result<(Multiplicity, Vec<RadialSolution>)> {
    require_supercritical(params)?;
    let opts = IvpOptions {
        rtol: tol,
        ..IvpOptions::default()
    };
    let profile = integrate_ivp_with(params, s_max, &opts)?;
    let mult = count_solutions_on(&profile, lambda_physical)?;
    let sols = mult
        .roots
        .iter()
        .enumerate()
        .map(|(i, &s0)| {
            let mut sol = reconstruct_u_on(&profile, s0, i)?;
            // report the requested λ; the root satisfies it to polishing accuracy
            sol.lambda_physical = lambda_physical;
            sol.params.lambda = Some(lambda_physical);
            Ok(sol.with_residuals())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((mult, sols))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    /// Stop when the sup-norm change between iterates drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub panels: usize,
    pub order: usize,
    /// Divergence is declared once `u(0)` falls below `-blowup`.
    pub blowup: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-11,
            max_iter: 5000,
            panels: 512,
            order: 8,
            blowup: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PicardOutcome {
    Converged {
        solution: RadialSolution,
        iterations: usize,
        /// Largest `u_{i+1} - u_i` seen; nonpositive for a decreasing sequence.
        monotone_violation: f64,
    },
    Diverged {
        iterations: usize,
        u0: f64,
        reason: String,
    },
}

impl PicardOutcome {
    pub fn converged(&self) -> bool {
        matches!(self, PicardOutcome::Converged { .. })
    }

    pub fn solution(&self) -> Option<&RadialSolution> {
        match self {
            PicardOutcome::Converged { solution, .. } => Some(solution),
            PicardOutcome::Diverged { .. } => None,
        }
    }
}

/// Reusable quadrature workspace for the maximal-solution iteration.
pub struct PicardSolver {
    params: ProblemParams,
    grid: PanelGrid,
    opts: PicardOptions,
    inner: PowerWeights,
    r_pow_outer: Vec<f64>,
    bound_pow_outer: Vec<f64>,
}

impl PicardSolver {
    pub fn new(params: &ProblemParams, opts: PicardOptions) -> Self {
        let grid = PanelGrid::new(opts.panels, opts.order);
        let (n, k) = (params.nf(), params.kf());
        let c = params.c_nk();
        let inner = grid.power_weighted(params.n - 1);
        let r_pow_outer = grid.nodes.iter().map(|x| 1.0 / (c * x.powf(n - k))).collect();
        let bound_pow_outer = grid
            .boundaries()
            .iter()
            .map(|x| if *x > 0.0 { 1.0 / (c * x.powf(n - k)) } else { 0.0 })
            .collect();
        PicardSolver {
            params: *params,
            grid,
            opts,
            inner,
            r_pow_outer,
            bound_pow_outer,
        }
    }

    /// One application of the solution operator; returns `(u, u')` at the
    /// nodes and at the panel boundaries.
    fn apply(&self, lambda: f64, u: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (k, q) = (self.params.kf(), self.params.q);
        let f: Vec<f64> = u.iter().map(|ui| lambda * (1.0 - ui).powf(q)).collect();
        let (inner, inner_b) = self.inner.cumulative(&f);
        let g: Vec<f64> = inner
            .iter()
            .zip(&self.r_pow_outer)
            .map(|(i, w)| (i * w).max(0.0).powf(1.0 / k))
            .collect();
        let (outer, outer_b) = self.grid.cumulative_from_right(&g);
        let u_new: Vec<f64> = outer.iter().map(|x| -x).collect();
        let u_b: Vec<f64> = outer_b.iter().map(|x| -x).collect();
        let du_b: Vec<f64> = inner_b
            .iter()
            .zip(&self.bound_pow_outer)
            .map(|(i, w)| (i * w).max(0.0).powf(1.0 / k))
            .collect();
        (u_new, u_b, du_b)
    }

    pub fn run(&self, lambda_physical: f64) -> Result<PicardOutcome> {
        if !(lambda_physical > 0.0) {
            return Err(Error::domain(format!("lambda must be positive, got {lambda_physical}")));
        }
        let mut u = vec![0.0; self.grid.nodes.len()];
        let mut violation = f64::NEG_INFINITY;
        let mut u0 = 0.0;
        for it in 1..=self.opts.max_iter {
            let (u_new, u_b, du_b) = self.apply(lambda_physical, &u);
            u0 = u_b[0];
            if !u0.is_finite() || u0 < -self.opts.blowup {
                return Ok(PicardOutcome::Diverged {
                    iterations: it,
                    u0,
                    reason: format!("u(0) fell below -{:e}", self.opts.blowup),
                });
            }
            let mut change = 0.0f64;
            for (a, b) in u_new.iter().zip(&u) {
                change = change.max((a - b).abs());
                violation = violation.max(a - b);
            }
            if u_new.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numeric(
                    "non-finite iterate in the maximal-solution iteration".into(),
                ));
            }
            u = u_new;
            if change < self.opts.tol {
                let solution = RadialSolution::new(
                    self.params,
                    lambda_physical,
                    SolutionSource::Picard,
                    0,
                    self.grid.boundaries(),
                    u_b,
                    du_b,
                );
                return Ok(PicardOutcome::Converged {
                    solution,
                    iterations: it,
                    monotone_violation: violation,
                });
            }
        }
        Ok(PicardOutcome::Diverged {
            iterations: self.opts.max_iter,
            u0,
            reason: format!("no convergence within {} iterations", self.opts.max_iter),
        })
    }
}

pub fn picard_maximal(params: &ProblemParams, lambda_physical: f64, opts: PicardOptions) -> Result<PicardOutcome> {
    PicardSolver::new(params, opts).run(lambda_physical)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaStarEstimate {
    pub estimate: f64,
    /// Largest `λ` seen to converge.
    pub lower: f64,
    /// Smallest `λ` seen to diverge.
    pub upper: f64,
    pub picard_runs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaStarOptions {
    /// Relative bracket width at which bisection stops.
    pub tol: f64,
    /// First `λ` tried.
    pub start: f64,
    /// Bracket expansion gives up beyond this `λ`.
    pub cap: f64,
    pub picard: PicardOptions,
}

impl Default for LambdaStarOptions {
    fn default() -> Self {
        LambdaStarOptions {
            tol: 1e-3,
            start: 1.0,
            cap: 1e8,
            picard: PicardOptions {
                tol: 1e-9,
                ..PicardOptions::default()
            },
        }
    }
}

/// Bisection on `λ` between a converging and a diverging Picard run.
pub fn estimate_lambda_star(params: &ProblemParams, opts: LambdaStarOptions) -> Result<LambdaStarEstimate> {
    let solver = PicardSolver::new(params, opts.picard);
    let mut runs = 0;
    let mut converges = |l: f64| -> Result<bool> {
        runs += 1;
        Ok(solver.run(l)?.converged())
    };
    let (mut lo, mut hi);
    if converges(opts.start)? {
        lo = opts.start;
        hi = 2.0 * lo;
        while converges(hi)? {
            lo = hi;
            hi *= 2.0;
            if hi > opts.cap {
                return Err(Error::Bracket(format!(
                    "maximal-solution iteration still converges at lambda={lo:e}, above the cap {:e}",
                    opts.cap
                )));
            }
        }
    } else {
        hi = opts.start;
        lo = 0.5 * hi;
        while !converges(lo)? {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-12 {
                return Err(Error::Bracket(
                    "maximal-solution iteration diverges for every lambda tried".into(),
                ));
            }
        }
    }
    while hi - lo > opts.tol * 0.5 * (lo + hi) {
        let mid = 0.5 * (lo + hi);
        if converges(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(LambdaStarEstimate {
        estimate: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        picard_runs: runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ivp::integrate_ivp;
    use crate::params::make_params;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn node() -> ProblemParams {
        make_params(11, 1, 8.0, None).unwrap()
    }

    fn node_profile() -> &'static VProfile {
        static PROFILE: OnceLock<VProfile> = OnceLock::new();
        PROFILE.get_or_init(|| integrate_ivp(&node(), 1e6, 1e-10).unwrap())
    }

    #[test]
    fn log_grid_hits_both_ends() {
        let g = log_grid(1e-2, 1e3, 10);
        assert_eq!(g.len(), 51);
        assert!((g[0] - 1e-2).abs() < 1e-15);
        assert!((g[50] / 1e3 - 1.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn subcritical_and_critical_are_rejected() {
        let sub = make_params(5, 1, 2.0, None).unwrap();
        assert!(matches!(count_solutions(&sub, 1.0, 10.0, 1e-8), Err(Error::Regime(_))));
        let crit = make_params(5, 1, 7.0 / 3.0, None).unwrap();
        assert!(matches!(
            bifurcation_curve(&crit, &[1.0, 2.0], 1e-8),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn node_branch_is_monotone() {
        let curve = bifurcation_curve_from(node_profile(), &log_grid(1e-3, 1e6, 20));
        assert!(curve.is_lambda_increasing());
        assert!(curve.is_a_decreasing());
        assert_eq!(curve.level_crossings(0.5 * curve.lambda_tilde), 1);
    }

    #[test]
    fn reconstructed_solution_solves_the_bvp() {
        let m = count_solutions_on(node_profile(), 0.3).unwrap();
        assert_eq!(m.count, 1);
        let sol = reconstruct_u_on(node_profile(), m.roots[0], 0)
            .unwrap()
            .with_residuals();
        let res = sol.residuals.unwrap();
        assert!(sol.boundary_defect() < 1e-12);
        assert!(res.negative && res.monotone);
        assert!(res.worst() < 1e-6, "{res:?}");
        assert!((sol.lambda_physical - 0.3).abs() < 1e-9 * 0.3);
    }

    #[test]
    fn picard_agrees_with_shooting_and_orders_in_lambda() {
        let solver = PicardSolver::new(&node(), PicardOptions::default());
        let mut last_a = 0.0;
        for lambda in [0.05, 0.1, 0.2] {
            let out = solver.run(lambda).unwrap();
            let PicardOutcome::Converged {
                solution,
                monotone_violation,
                ..
            } = out
            else {
                panic!("diverged at {lambda}");
            };
            assert!(monotone_violation < 1e-12);
            assert!(solution.a < last_a);
            last_a = solution.a;
            let m = count_solutions_on(node_profile(), lambda).unwrap();
            let shot = reconstruct_u_on(node_profile(), m.roots[0], 0).unwrap();
            assert!(solution.sup_distance(&shot) < 1e-8);
        }
    }

    #[test]
    fn picard_diverges_for_large_lambda() {
        let out = picard_maximal(&node(), 1e3, PicardOptions::default()).unwrap();
        assert!(!out.converged());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn roots_reproduce_lambda(lambda in 0.01f64..2.0) {
            let m = count_solutions_on(node_profile(), lambda).unwrap();
            prop_assert_eq!(m.count, 1);
            let profile = node_profile();
            let c = profile.params.c_nk();
            for &s0 in &m.roots {
                let pt = bifurcation_curve_from(profile, &[s0]).samples[0];
                prop_assert!((pt.lambda_physical - lambda).abs() < 1e-9 * lambda);
                prop_assert!((c * pt.lambda_rescaled - lambda).abs() < 1e-9 * lambda);
            }
        }
    }
}
