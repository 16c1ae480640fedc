//! Independent reference computations for the test suites.
//!
//! These routes deliberately avoid the spectral-kernel machinery used by the
//! production code: integrals are done by quadrature, derivatives by finite
//! differences. Nothing outside of tests calls into this module.

use num_complex::Complex64;

use crate::linalg::{c, matrix_function, tau, CMat, HermitianOperator};

/// Gauss-Legendre nodes and weights on `[0, 1]`.
///
/// Nodes are found by Newton iteration on the Legendre polynomial of the
/// requested order, then mapped affinely from `[-1, 1]`.
pub fn gauss_legendre_unit(order: usize) -> Vec<(f64, f64)> {
    assert!(order >= 1);
    let n = order;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-based initial guess for the i-th root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        out.push((0.5 * (x + 1.0), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Legendre polynomial `P_n(x)` and derivative by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Quadrature route for `int_0^1 tau(xi^* rho^{1-s} eta rho^s) ds`.
///
/// Requires a strictly positive weight so the real powers exist.
pub fn weighted_inner_quadrature(
    rho: &HermitianOperator,
    xi: &CMat,
    eta: &CMat,
    order: usize,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (s, w) in gauss_legendre_unit(order) {
        let left = matrix_function(rho, |p| p.powf(1.0 - s)).unwrap();
        let right = matrix_function(rho, |p| p.powf(s)).unwrap();
        let inner = xi.adjoint() * left.mat() * eta * right.mat();
        acc += c(w) * tau(&inner);
    }
    acc
}

/// Symmetric difference quotient `(f(t0 + h) - f(t0 - h)) / (2h)`.
pub fn central_difference(f: impl Fn(f64) -> f64, t0: f64, h: f64) -> f64 {
    (f(t0 + h) - f(t0 - h)) / (2.0 * h)
}

/// Max-relative entropy `log lambda_max(sigma^{-1/2} rho sigma^{-1/2})` for
/// strictly positive `sigma`.
pub fn max_relative_entropy(rho: &HermitianOperator, sigma: &HermitianOperator) -> f64 {
    let inv_sqrt = matrix_function(sigma, |p| 1.0 / p.sqrt()).expect("positive weight");
    let m = inv_sqrt.mat() * rho.mat() * inv_sqrt.mat();
    HermitianOperator::enforce(&m).eig().max().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use approx::assert_relative_eq;

    #[test]
    fn quadrature_integrates_polynomials_exactly() {
        let rule = gauss_legendre_unit(16);
        for k in 0..30 {
            let got: f64 = rule.iter().map(|&(s, w)| w * s.powi(k)).sum();
            assert_relative_eq!(got, 1.0 / (k as f64 + 1.0), epsilon = 1e-13);
        }
    }

    #[test]
    fn quadrature_weights_sum_to_one() {
        for order in [4usize, 16, 64] {
            let total: f64 = gauss_legendre_unit(order).iter().map(|&(_, w)| w).sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn quadrature_integrates_exponential() {
        let rule = gauss_legendre_unit(32);
        let got: f64 = rule.iter().map(|&(s, w)| w * s.exp()).sum();
        assert_relative_eq!(got, std::f64::consts::E - 1.0, epsilon = 1e-13);
    }

    #[test]
    fn weighted_quadrature_converges_in_order() {
        let mut rng = sample::rng(21);
        let rho = sample::random_density_strict(4, 0.8, &mut rng);
        let xi = sample::random_ginibre(4, &mut rng);
        let eta = sample::random_ginibre(4, &mut rng);
        let a = weighted_inner_quadrature(&rho, &xi, &eta, 32);
        let b = weighted_inner_quadrature(&rho, &xi, &eta, 64);
        assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()));
    }

    #[test]
    fn max_relative_entropy_of_commuting_pair() {
        let rho = HermitianOperator::from_real_diagonal(&[1.5, 0.5]);
        let sigma = HermitianOperator::from_real_diagonal(&[0.5, 1.5]);
        assert_relative_eq!(
            max_relative_entropy(&rho, &sigma),
            3.0f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn central_difference_of_exponential() {
        let d = central_difference(|t| (2.0 * t).exp(), 0.3, 1e-5);
        assert_relative_eq!(d, 2.0 * (0.6f64).exp(), epsilon = 1e-8);
    }
}
