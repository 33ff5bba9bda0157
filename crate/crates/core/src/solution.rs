//! Sampled radial solutions `u(r)` on `[0, 1]` and their residual report.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, Residuals};
use crate::params::ProblemParams;

/// How a solution was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolutionSource {
    Shooting,
    Picard,
    ClosedForm,
}

impl std::fmt::Display for SolutionSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolutionSource::Shooting => "SHOOTING",
            SolutionSource::Picard => "PICARD",
            SolutionSource::ClosedForm => "CLOSED_FORM",
        })
    }
}

/// A solution of the boundary value problem sampled on an ascending grid
/// `0 = r_0 < ... < r_m = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub params: ProblemParams,
    pub lambda_physical: f64,
    /// `u(0)`.
    #[serde(rename = "A")]
    pub a: f64,
    pub source: SolutionSource,
    /// Position among the solutions found for the same `λ`, ordered by
    /// decreasing `u(0)`.
    pub index: usize,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub residuals: Option<Residuals>,
}

impl RadialSolution {
    pub fn new(
        params: ProblemParams,
        lambda_physical: f64,
        source: SolutionSource,
        index: usize,
        r: Vec<f64>,
        u: Vec<f64>,
        du: Vec<f64>,
    ) -> Self {
        let a = u.first().copied().unwrap_or(f64::NAN);
        RadialSolution {
            params: ProblemParams {
                lambda: Some(lambda_physical),
                ..params
            },
            lambda_physical,
            a,
            source,
            index,
            r,
            u,
            du,
            residuals: None,
        }
    }

    /// Computes and attaches the residual report.
    pub fn with_residuals(mut self) -> Self {
        self.residuals = Some(diagnostics::residuals(
            &self.params,
            self.lambda_physical,
            &self.r,
            &self.u,
            Some(&self.du),
        ));
        self
    }

    /// `|u(1)|`.
    pub fn boundary_defect(&self) -> f64 {
        self.u.last().map_or(f64::NAN, |u| u.abs())
    }

    /// Sup-distance to another solution, evaluated by Hermite interpolation of
    /// `other` at this solution's radii.
    pub fn sup_distance(&self, other: &RadialSolution) -> f64 {
        self.r
            .iter()
            .zip(&self.u)
            .map(|(&r, &u)| (u - other.value_at(r)).abs())
            .fold(0.0, f64::max)
    }

    /// Piecewise-cubic Hermite value at `r` using the stored slopes.
    pub fn value_at(&self, r: f64) -> f64 {
        let i = self.r.partition_point(|&x| x <= r).clamp(1, self.r.len() - 1) - 1;
        let (x0, x1) = (self.r[i], self.r[i + 1]);
        let h = x1 - x0;
        let t = (r - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.u[i]
            + (t3 - 2.0 * t2 + t) * h * self.du[i]
            + (-2.0 * t3 + 3.0 * t2) * self.u[i + 1]
            + (t3 - t2) * h * self.du[i + 1]
    }
}
