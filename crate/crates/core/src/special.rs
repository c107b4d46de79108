//! Differences of gamma-family functions that stay accurate when the
//! dispersion parameter is huge relative to the count.

use statrs::function::gamma::{digamma, ln_gamma};

const EXACT_SUM_LIMIT: f64 = 64.0;
const ASYMPTOTIC_MIN: f64 = 10.0;

/// `ln Γ(θ + y) − ln Γ(θ) − y ln θ` for integral `y ≥ 0`.
pub fn lgamma_ratio(y: f64, theta: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    if y <= EXACT_SUM_LIMIT {
        let mut s = 0.0;
        let mut j = 0.0;
        while j < y {
            s += (j / theta).ln_1p();
            j += 1.0;
        }
        return s;
    }
    if theta >= ASYMPTOTIC_MIN {
        // Stirling series difference; both arguments are at least 10.
        let x1 = theta + y;
        (theta + y - 0.5) * (y / theta).ln_1p() - y + stirling_tail(x1) - stirling_tail(theta)
    } else {
        ln_gamma(theta + y) - ln_gamma(theta) - y * theta.ln()
    }
}

fn stirling_tail(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 / 1680.0)))
}

/// `ψ(θ + y) − ψ(θ)` for integral `y ≥ 0`.
pub fn digamma_diff(y: f64, theta: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    if y <= EXACT_SUM_LIMIT {
        let mut s = 0.0;
        let mut j = 0.0;
        while j < y {
            s += 1.0 / (theta + j);
            j += 1.0;
        }
        return s;
    }
    if theta >= ASYMPTOTIC_MIN {
        (y / theta).ln_1p() + digamma_tail(theta + y) - digamma_tail(theta)
    } else {
        digamma(theta + y) - digamma(theta)
    }
}

// ψ(x) − ln x
fn digamma_tail(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    -0.5 * r - r2 * (1.0 / 12.0 - r2 * (1.0 / 120.0 - r2 * (1.0 / 252.0 - r2 / 240.0)))
}

/// Trigamma function ψ'(x) for `x > 0`.
pub fn trigamma(x: f64) -> f64 {
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / x;
    let r2 = r * r;
    acc + r
        + r2 * (0.5
            + r * (1.0 / 6.0 - r2 * (1.0 / 30.0 - r2 * (1.0 / 42.0 - r2 * (1.0 / 30.0 - r2 * (5.0 / 66.0))))))
}

/// `ψ'(θ + y) − ψ'(θ)` for integral `y ≥ 0`.
pub fn trigamma_diff(y: f64, theta: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    if y <= EXACT_SUM_LIMIT {
        let mut s = 0.0;
        let mut j = 0.0;
        while j < y {
            let d = theta + j;
            s -= 1.0 / (d * d);
            j += 1.0;
        }
        return s;
    }
    trigamma(theta + y) - trigamma(theta)
}

/// Standard normal upper tail `P(Z > z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn lgamma_ratio_matches_direct_evaluation() {
        for &theta in &[0.3, 2.5, 11.0, 80.0, 4000.0] {
            for &y in &[0.0, 1.0, 7.0, 64.0, 65.0, 300.0, 12_345.0] {
                let direct = ln_gamma(theta + y) - ln_gamma(theta) - y * theta.ln();
                assert!(close(lgamma_ratio(y, theta), direct, 1e-10), "{y} {theta}");
            }
        }
    }

    #[test]
    fn digamma_diff_matches_direct_evaluation() {
        for &theta in &[0.3, 2.5, 11.0, 80.0, 4000.0] {
            for &y in &[1.0, 7.0, 64.0, 65.0, 300.0, 12_345.0] {
                let direct = digamma(theta + y) - digamma(theta);
                assert!(close(digamma_diff(y, theta), direct, 1e-10), "{y} {theta}");
            }
        }
    }

    #[test]
    fn trigamma_known_values() {
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        assert!(close(trigamma(1.0), pi2_6, 1e-13));
        assert!(close(trigamma(0.5), std::f64::consts::PI.powi(2) / 2.0, 1e-13));
        // recurrence ψ'(x+1) = ψ'(x) − 1/x²
        for &x in &[0.2, 1.7, 9.3, 150.0] {
            assert!(close(trigamma(x + 1.0), trigamma(x) - 1.0 / (x * x), 1e-12));
        }
    }

    #[test]
    fn trigamma_is_derivative_of_digamma() {
        for &x in &[0.7, 3.0, 25.0, 900.0] {
            let h = 1e-5 * x;
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            assert!(close(trigamma(x), fd, 1e-6), "{x}");
        }
    }

    #[test]
    fn large_theta_stays_accurate() {
        // exact values from the finite sum
        let theta = 1e9;
        let y = 500.0;
        let mut exact = 0.0;
        let mut dexact = 0.0;
        for j in 0..500 {
            exact += (j as f64 / theta).ln_1p();
            dexact += 1.0 / (theta + j as f64);
        }
        assert!(close(lgamma_ratio(y, theta), exact, 1e-9));
        assert!(close(digamma_diff(y, theta), dexact, 1e-9));
    }

    #[test]
    fn normal_tail() {
        assert!(close(normal_sf(0.0), 0.5, 1e-15));
        assert!(close(2.0 * normal_sf(1.959963984540054), 0.05, 1e-10));
    }
}
