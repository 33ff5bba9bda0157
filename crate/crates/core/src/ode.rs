//! Dormand–Prince 5(4) stepper with step-size control, and quintic Hermite
//! interpolation between stored knots.

use crate::error::{Error, Result};

/// How the local error estimate is scaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorScale<const N: usize> {
    /// `atol[i] + rtol * weight[i] * max(|y_i|, |y_new_i|)` per component.
    Componentwise { atol: [f64; N], weight: [f64; N] },
    /// `atol + rtol * max(‖y‖∞, ‖y_new‖∞)` shared by all components.
    Joint { atol: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct StepperOptions<const N: usize> {
    pub rtol: f64,
    pub scale: ErrorScale<N>,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights equal the last row of A (FSAL)
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`, returning every accepted
/// knot including both endpoints.
///
/// `f` may return non-finite values to signal that a trial point left the
/// domain; the step is then rejected and retried with a smaller size.
pub fn integrate<const N: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: &StepperOptions<N>,
) -> Result<Vec<(f64, [f64; N])>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    if !(t1 > t0) {
        return Ok(vec![(t0, y0)]);
    }
    let mut knots = vec![(t0, y0)];
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    if !all_finite(&k1) {
        return Err(Error::Numeric(format!(
            "right-hand side not finite at the initial point t={t0}"
        )));
    }
    let mut h = opts.h_init.min(opts.h_max).min(t1 - t0);
    let mut steps = 0usize;
    let mut err_prev = 1e-4f64;

    while t < t1 {
        if steps >= opts.max_steps {
            return Err(Error::Numeric(format!(
                "step budget of {} exhausted at t={t}",
                opts.max_steps
            )));
        }
        steps += 1;
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        if h <= f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::Numeric(format!("step size underflow at t={t}")));
        }

        let mut k = [[0.0; N]; 7];
        k[0] = k1;
        let mut ok = true;
        for s in 1..7 {
            let mut ys = y;
            for (i, yi) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][i];
                }
                *yi += h * acc;
            }
            k[s] = f(t + C[s] * h, &ys);
            if !all_finite(&k[s]) {
                ok = false;
                break;
            }
        }
        if !ok {
            h *= 0.25;
            continue;
        }

        let mut y_new = y;
        let mut err_vec = [0.0; N];
        for i in 0..N {
            let mut hi5 = 0.0;
            let mut hi4 = 0.0;
            for s in 0..7 {
                hi5 += B5[s] * k[s][i];
                hi4 += B4[s] * k[s][i];
            }
            y_new[i] += h * hi5;
            err_vec[i] = h * (hi5 - hi4);
        }
        if !all_finite(&y_new) {
            h *= 0.25;
            continue;
        }

        let err = match opts.scale {
            ErrorScale::Componentwise { atol, weight } => {
                let mut m = 0.0f64;
                for i in 0..N {
                    let sc = atol[i] + opts.rtol * weight[i] * y[i].abs().max(y_new[i].abs());
                    m = m.max((err_vec[i] / sc).abs());
                }
                m
            }
            ErrorScale::Joint { atol } => {
                let ny = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let nn = y_new.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let sc = atol + opts.rtol * ny.max(nn);
                err_vec.iter().fold(0.0f64, |m, e| m.max((e / sc).abs()))
            }
        };

        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k[6];
            knots.push((t, y));
            // PI controller
            let fac = if err == 0.0 {
                5.0
            } else {
                0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)
            };
            err_prev = err.max(1e-4);
            h = (h * fac.clamp(0.2, 5.0)).min(opts.h_max);
        } else {
            let fac = (0.9 * err.powf(-1.0 / 5.0)).clamp(0.1, 0.9);
            h *= fac;
        }
    }
    Ok(knots)
}

/// Value, first and second derivative of one state component at a knot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub f: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Quintic Hermite interpolant on `[t0, t1]` matching value, slope and
/// curvature at both ends. Returns value, first and second derivative.
pub fn hermite5(t0: f64, t1: f64, a: Jet, b: Jet, t: f64) -> (f64, f64, f64) {
    let h = t1 - t0;
    let x = (t - t0) / h;
    let x2 = x * x;
    let x3 = x2 * x;
    let x4 = x3 * x;
    let x5 = x4 * x;
    let h00 = 1.0 - 10.0 * x3 + 15.0 * x4 - 6.0 * x5;
    let h10 = x - 6.0 * x3 + 8.0 * x4 - 3.0 * x5;
    let h20 = 0.5 * x2 - 1.5 * x3 + 1.5 * x4 - 0.5 * x5;
    let h01 = 10.0 * x3 - 15.0 * x4 + 6.0 * x5;
    let h11 = -4.0 * x3 + 7.0 * x4 - 3.0 * x5;
    let h21 = 0.5 * x3 - x4 + 0.5 * x5;

    let d00 = -30.0 * x2 + 60.0 * x3 - 30.0 * x4;
    let d10 = 1.0 - 18.0 * x2 + 32.0 * x3 - 15.0 * x4;
    let d20 = x - 4.5 * x2 + 6.0 * x3 - 2.5 * x4;
    let d01 = 30.0 * x2 - 60.0 * x3 + 30.0 * x4;
    let d11 = -12.0 * x2 + 28.0 * x3 - 15.0 * x4;
    let d21 = 1.5 * x2 - 4.0 * x3 + 2.5 * x4;

    let s00 = -60.0 * x + 180.0 * x2 - 120.0 * x3;
    let s10 = -36.0 * x + 96.0 * x2 - 60.0 * x3;
    let s20 = 1.0 - 9.0 * x + 18.0 * x2 - 10.0 * x3;
    let s01 = 60.0 * x - 180.0 * x2 + 120.0 * x3;
    let s11 = -24.0 * x + 84.0 * x2 - 60.0 * x3;
    let s21 = 3.0 * x - 12.0 * x2 + 10.0 * x3;

    let v = h00 * a.f + h10 * h * a.d1 + h20 * h * h * a.d2 + h01 * b.f + h11 * h * b.d1 + h21 * h * h * b.d2;
    let d = (d00 * a.f + d01 * b.f) / h + d10 * a.d1 + d20 * h * a.d2 + d11 * b.d1 + d21 * h * b.d2;
    let s = (s00 * a.f + s01 * b.f) / (h * h) + (s10 * a.d1 + s11 * b.d1) / h + s20 * a.d2 + s21 * b.d2;
    (v, d, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_accuracy() {
        let opts = StepperOptions {
            rtol: 1e-10,
            scale: ErrorScale::Componentwise {
                atol: [1e-14],
                weight: [1.0],
            },
            h_init: 1e-3,
            h_max: 1.0,
            max_steps: 100_000,
        };
        let knots = integrate(|_, y| [-y[0]], 0.0, [1.0], 5.0, &opts).unwrap();
        let (t, y) = *knots.last().unwrap();
        assert_eq!(t, 5.0);
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_phase() {
        let opts = StepperOptions {
            rtol: 1e-11,
            scale: ErrorScale::Joint { atol: 1e-300 },
            h_init: 1e-3,
            h_max: 0.5,
            max_steps: 100_000,
        };
        let knots = integrate(|_, y| [y[1], -y[0]], 0.0, [1.0, 0.0], 20.0, &opts).unwrap();
        let (_, y) = *knots.last().unwrap();
        assert!((y[0] - 20f64.cos()).abs() < 1e-8);
        assert!((y[1] + 20f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn hermite5_reproduces_quintics() {
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) + 0.25 * x.powi(5);
        let dp = |x: f64| -2.0 + 1.5 * x * x + 1.25 * x.powi(4);
        let ddp = |x: f64| 3.0 * x + 5.0 * x.powi(3);
        let jet = |x| Jet {
            f: p(x),
            d1: dp(x),
            d2: ddp(x),
        };
        let (t0, t1) = (0.3, 1.7);
        for i in 0..=10 {
            let t = t0 + (t1 - t0) * i as f64 / 10.0;
            let (v, d, s) = hermite5(t0, t1, jet(t0), jet(t1), t);
            assert!((v - p(t)).abs() < 1e-12);
            assert!((d - dp(t)).abs() < 1e-11);
            assert!((s - ddp(t)).abs() < 1e-10);
        }
    }
}
