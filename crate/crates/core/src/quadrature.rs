//! Gauss quadrature rules on the unit interval, the unit square and the
//! reference triangle `{x, y >= 0, x + y <= 1}`.

use std::f64::consts::PI;

/// A quadrature rule with points in reference coordinates.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, exact for polynomials of
/// degree `2n - 1`. Nodes are returned in increasing order and are
/// symmetric about 1/2.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        // Tricomi initial guess for the k-th root on [-1, 1] (descending).
        let mut z = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d.is_finite() { d } else { dp };
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        // map to [0, 1]; root z is the (n-1-k)-th in ascending order
        x[n - 1 - k] = 0.5 * (1.0 + z);
        x[k] = 0.5 * (1.0 - z);
        w[n - 1 - k] = 0.5 * weight;
        w[k] = 0.5 * weight;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Rule on `[0, 1]` embedded in the first coordinate.
pub fn line_rule(n: usize) -> QuadratureRule {
    let (x, w) = gauss_legendre(n);
    QuadratureRule {
        points: x.into_iter().map(|x| [x, 0.0]).collect(),
        weights: w,
    }
}

/// Tensor Gauss-Legendre rule on the unit square; points ordered with the
/// first coordinate running fastest.
pub fn square_rule(n: usize) -> QuadratureRule {
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            points.push([x[i], x[j]]);
            weights.push(w[i] * w[j]);
        }
    }
    QuadratureRule { points, weights }
}

/// Collapsed-coordinate rule on the reference triangle built from `n`-point
/// Gauss-Legendre rules. Exact for total degree `2n - 1`.
pub fn triangle_rule(n: usize) -> QuadratureRule {
    // one extra point in the collapsed direction absorbs the Jacobian factor
    let (xa, wa) = gauss_legendre(n);
    let (xb, wb) = gauss_legendre(n + 1);
    let mut points = Vec::with_capacity(n * (n + 1));
    let mut weights = Vec::with_capacity(n * (n + 1));
    for (&eta, &we) in xb.iter().zip(&wb) {
        for (&xi, &wx) in xa.iter().zip(&wa) {
            points.push([xi * (1.0 - eta), eta]);
            weights.push(wx * we * (1.0 - eta));
        }
    }
    QuadratureRule { points, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_monomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((approx - exact).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        let (x, w) = gauss_legendre(7);
        for k in 0..7 {
            assert!((x[k] + x[6 - k] - 1.0).abs() < 1e-15);
            assert!((w[k] - w[6 - k]).abs() < 1e-15);
        }
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn triangle_rule_exactness() {
        // int_T x^a y^b = a! b! / (a + b + 2)!
        fn fact(n: u32) -> f64 {
            (1..=n).map(f64::from).product()
        }
        for n in 1..7 {
            let rule = triangle_rule(n);
            for a in 0..=(2 * n - 1) as u32 {
                for b in 0..=((2 * n - 1) as u32 - a) {
                    let approx = rule.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    assert!((approx - exact).abs() < 1e-14, "n={n} a={a} b={b}");
                }
            }
        }
    }
}
