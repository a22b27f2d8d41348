//! Gauss–Legendre panel rules.

/// Nodes and weights of the p-point Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Compute the rule by Newton iteration on the Legendre polynomial.
    pub fn new(points: usize) -> Self {
        assert!(points >= 1, "need at least one quadrature point");
        let n = points;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for k in 0..n {
            // Standard initial guess for the k-th root.
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            nodes[n - 1 - k] = x;
            weights[n - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over [a, b] split into `panels` equal panels.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let width = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * width;
            let mid = lo + 0.5 * width;
            let half = 0.5 * width;
            let mut acc = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc += w * f(mid + half * x);
            }
            total += acc * half;
        }
        total
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for m in 2..=n {
        let mf = m as f64;
        let p2 = ((2.0 * mf - 1.0) * x * p1 - (mf - 1.0) * p0) / mf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    if n == 1 {
        return (x, 1.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        // p-point rule is exact through degree 2p−1.
        let gl = GaussLegendre::new(5);
        let exact = 2.0 / 10.0; // ∫_{-1}^{1} x^9 dx = 0, use x^8: 2/9
        let v = gl.integrate_panels(-1.0, 1.0, 1, |x| x.powi(8));
        assert!((v - 2.0 / 9.0).abs() < 1e-14);
        let v9 = gl.integrate_panels(-1.0, 1.0, 1, |x| x.powi(9));
        assert!(v9.abs() < 1e-15);
        let _ = exact;
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for p in [1usize, 2, 3, 8, 16, 24, 32] {
            let gl = GaussLegendre::new(p);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "order {p}: Σw = {s}");
        }
    }

    #[test]
    fn oscillatory_integral_with_panels() {
        // ∫_0^{2π} sin(10 x) dx = 0; ∫_0^{π} sin x dx = 2.
        let gl = GaussLegendre::new(16);
        let v = gl.integrate_panels(0.0, 2.0 * std::f64::consts::PI, 8, |x| (10.0 * x).sin());
        assert!(v.abs() < 1e-12);
        let w = gl.integrate_panels(0.0, std::f64::consts::PI, 2, |x| x.sin());
        assert!((w - 2.0).abs() < 1e-13);
    }
}
