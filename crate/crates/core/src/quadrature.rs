//! Gauss–Legendre rules and a panel-wise cumulative integrator.

use std::f64::consts::PI;

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for j in 2..=m {
        let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Integrates `f` over `[a, b]` with an `m`-point rule.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (x, w) = rule;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(w).map(|(xi, wi)| wi * f(mid + half * xi)).sum::<f64>() * half
}

/// Uniform panels on `[0, 1]`, each carrying `p` Gauss–Legendre nodes, with
/// the matrices needed to integrate a nodal interpolant cumulatively.
#[derive(Debug, Clone)]
pub struct PanelGrid {
    pub panels: usize,
    pub order: usize,
    /// All interior nodes, ascending.
    pub nodes: Vec<f64>,
    /// Weights for integrating over a full panel (already scaled by panel width).
    weights: Vec<f64>,
    /// `left[i][j] = ∫_{panel start}^{x_i} L_j`, scaled by panel width.
    left: Vec<Vec<f64>>,
    /// `right[i][j] = ∫_{x_i}^{panel end} L_j`, scaled by panel width.
    right: Vec<Vec<f64>>,
}

impl PanelGrid {
    pub fn new(panels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let h = 1.0 / panels as f64;
        let lagrange = |j: usize, s: f64| -> f64 {
            let mut v = 1.0;
            for (m, xm) in x.iter().enumerate() {
                if m != j {
                    v *= (s - xm) / (x[j] - xm);
                }
            }
            v
        };
        let sub = gauss_legendre(order);
        let mut left = vec![vec![0.0; order]; order];
        let mut right = vec![vec![0.0; order]; order];
        for i in 0..order {
            for j in 0..order {
                // degree order-1 polynomial: the order-point rule is exact
                left[i][j] = integrate(|s| lagrange(j, s), -1.0, x[i], &sub) * 0.5 * h;
                right[i][j] = integrate(|s| lagrange(j, s), x[i], 1.0, &sub) * 0.5 * h;
            }
        }
        let mut nodes = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let a = p as f64 * h;
            for xi in &x {
                nodes.push(a + 0.5 * h * (xi + 1.0));
            }
        }
        let weights = w.iter().map(|wi| wi * 0.5 * h).collect();
        PanelGrid {
            panels,
            order,
            nodes,
            weights,
            left,
            right,
        }
    }

    pub fn panel_width(&self) -> f64 {
        1.0 / self.panels as f64
    }

    /// Panel boundaries `0, h, ..., 1`.
    pub fn boundaries(&self) -> Vec<f64> {
        (0..=self.panels).map(|p| p as f64 / self.panels as f64).collect()
    }

    /// `F(x) = ∫_0^x f` at every node and at every panel boundary.
    pub fn cumulative_from_left(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.order;
        let mut at_nodes = vec![0.0; f.len()];
        let mut at_bounds = vec![0.0; self.panels + 1];
        let mut acc = 0.0;
        for panel in 0..self.panels {
            let vals = &f[panel * p..(panel + 1) * p];
            for i in 0..p {
                let part: f64 = self.left[i].iter().zip(vals).map(|(a, b)| a * b).sum();
                at_nodes[panel * p + i] = acc + part;
            }
            acc += self.weights.iter().zip(vals).map(|(a, b)| a * b).sum::<f64>();
            at_bounds[panel + 1] = acc;
        }
        (at_nodes, at_bounds)
    }

    /// Weights for `∫_0^x s^power f(s) ds` with the power integrated exactly
    /// against the nodal interpolant of `f`, so the result keeps its relative
    /// accuracy as `x → 0`.
    pub fn power_weighted(&self, power: u32) -> PowerWeights {
        let p = self.order;
        let h = self.panel_width();
        let (x, _) = gauss_legendre(p);
        // s^power · L_j has degree power + p - 1
        let rule = gauss_legendre((power as usize + p).div_ceil(2) + 1);
        let mut partial = Vec::with_capacity(self.panels);
        let mut full = Vec::with_capacity(self.panels);
        for panel in 0..self.panels {
            let a = panel as f64 * h;
            let local = |j: usize, s: f64| -> f64 {
                let xi = 2.0 * (s - a) / h - 1.0;
                let mut v = 1.0;
                for (m, xm) in x.iter().enumerate() {
                    if m != j {
                        v *= (xi - xm) / (x[j] - xm);
                    }
                }
                v * s.powi(power as i32)
            };
            let nodes = &self.nodes[panel * p..(panel + 1) * p];
            let mut rows = vec![vec![0.0; p]; p];
            for (i, &xi) in nodes.iter().enumerate() {
                for (j, w) in rows[i].iter_mut().enumerate() {
                    *w = integrate(|s| local(j, s), a, xi, &rule);
                }
            }
            partial.push(rows);
            full.push((0..p).map(|j| integrate(|s| local(j, s), a, a + h, &rule)).collect());
        }
        PowerWeights {
            order: p,
            partial,
            full,
        }
    }

    /// `G(x) = ∫_x^1 f` at every node and at every panel boundary.
    pub fn cumulative_from_right(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.order;
        let mut at_nodes = vec![0.0; f.len()];
        let mut at_bounds = vec![0.0; self.panels + 1];
        let mut acc = 0.0;
        for panel in (0..self.panels).rev() {
            let vals = &f[panel * p..(panel + 1) * p];
            for i in 0..p {
                let part: f64 = self.right[i].iter().zip(vals).map(|(a, b)| a * b).sum();
                at_nodes[panel * p + i] = acc + part;
            }
            acc += self.weights.iter().zip(vals).map(|(a, b)| a * b).sum::<f64>();
            at_bounds[panel] = acc;
        }
        (at_nodes, at_bounds)
    }
}

/// Per-panel weights built by [`PanelGrid::power_weighted`].
#[derive(Debug, Clone)]
pub struct PowerWeights {
    order: usize,
    partial: Vec<Vec<Vec<f64>>>,
    full: Vec<Vec<f64>>,
}

impl PowerWeights {
    /// `∫_0^x s^power f(s) ds` at every node and at every panel boundary.
    pub fn cumulative(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.order;
        let panels = self.full.len();
        let mut at_nodes = vec![0.0; f.len()];
        let mut at_bounds = vec![0.0; panels + 1];
        let mut acc = 0.0;
        for panel in 0..panels {
            let vals = &f[panel * p..(panel + 1) * p];
            for i in 0..p {
                let part: f64 = self.partial[panel][i].iter().zip(vals).map(|(a, b)| a * b).sum();
                at_nodes[panel * p + i] = acc + part;
            }
            acc += self.full[panel].iter().zip(vals).map(|(a, b)| a * b).sum::<f64>();
            at_bounds[panel + 1] = acc;
        }
        (at_nodes, at_bounds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        for m in 1..12 {
            let rule = gauss_legendre(m);
            assert!((rule.1.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            let deg = 2 * m - 1;
            let got = integrate(
                |x| x.powi(deg as i32) + x.powi((deg - deg % 2) as i32),
                -1.0,
                1.0,
                &rule,
            );
            let expect = 2.0 / ((deg - deg % 2) as f64 + 1.0);
            assert!((got - expect).abs() < 1e-13, "m={m}");
        }
    }

    #[test]
    fn cumulative_integrals_of_smooth_function() {
        let g = PanelGrid::new(16, 8);
        let f: Vec<f64> = g.nodes.iter().map(|x| x.cos()).collect();
        let (left, lb) = g.cumulative_from_left(&f);
        let (right, rb) = g.cumulative_from_right(&f);
        for (x, (l, r)) in g.nodes.iter().zip(left.iter().zip(&right)) {
            assert!((l - x.sin()).abs() < 1e-14);
            assert!((r - (1f64.sin() - x.sin())).abs() < 1e-14);
        }
        for (x, (l, r)) in g.boundaries().iter().zip(lb.iter().zip(&rb)) {
            assert!((l - x.sin()).abs() < 1e-14);
            assert!((r - (1f64.sin() - x.sin())).abs() < 1e-14);
        }
    }

    #[test]
    fn power_weighted_integrals_are_relatively_accurate() {
        let g = PanelGrid::new(64, 8);
        let w = g.power_weighted(10);
        let f: Vec<f64> = g.nodes.iter().map(|x| x.exp()).collect();
        let (at_nodes, _) = w.cumulative(&f);
        // ∫_0^x s^10 e^s ds = x^11 Σ_j x^j / (j! (11 + j))
        for (x, got) in g.nodes.iter().zip(&at_nodes) {
            let mut term = 1.0;
            let mut series = 0.0;
            for j in 0..40 {
                series += term / (11.0 + j as f64);
                term *= x / (j as f64 + 1.0);
            }
            let exact = x.powi(11) * series;
            assert!(((got - exact) / exact).abs() < 1e-12, "x={x}");
        }
    }
}
