//! Negative binomial GLM with log link, exposure offset and a breakpoint
//! predictor `β₀ + β₁t + (β₂(t−ε) + β₃)I(t≥ε)`.

use nalgebra::{DMatrix, DVector, Matrix4};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::ols::least_squares;
use crate::error::ModelError;
use crate::special::{digamma_diff, lgamma_ratio, normal_sf, trigamma_diff};

pub const THETA_CAP: f64 = 1e7;
pub const MAX_OUTER_ITER: usize = 200;
const DEV_TOL: f64 = 1e-8;
const SCORE_TOL: f64 = 1e-6;
const ETA_LIMIT: f64 = 700.0;

/// Result of fitting one cell. Coefficients are on the raw calendar-year scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbFit {
    pub beta: Option<[f64; 4]>,
    pub theta: Option<f64>,
    #[serde(default)]
    pub se: Option<[f64; 4]>,
    #[serde(default)]
    pub p_values: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov: Option<[[f64; 4]; 4]>,
    pub converged: bool,
    pub zeroed: bool,
    #[serde(default)]
    pub theta_capped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loglik: Option<f64>,
    #[serde(default)]
    pub iterations: usize,
}

impl NbFit {
    pub fn zeroed() -> NbFit {
        NbFit {
            beta: None,
            theta: None,
            se: None,
            p_values: None,
            cov: None,
            converged: true,
            zeroed: true,
            theta_capped: false,
            loglik: None,
            iterations: 0,
        }
    }
}

/// Variance-to-mean ratio `1 + μ/θ`.
pub fn dispersion_ratio(mu: f64, theta: f64) -> f64 {
    1.0 + mu / theta
}

/// Raw-scale design row.
pub fn design_row(year: f64, breakpoint: f64) -> [f64; 4] {
    let post = if year >= breakpoint { 1.0 } else { 0.0 };
    [1.0, year, (year - breakpoint) * post, post]
}

/// Linear predictor without the offset.
pub fn linear_predictor(beta: &[f64; 4], year: f64, breakpoint: f64) -> f64 {
    let x = design_row(year, breakpoint);
    x.iter().zip(beta).map(|(x, b)| x * b).sum()
}

/// Log-likelihood of a single NB observation with mean `mu`.
pub fn nb_logpmf(y: f64, mu: f64, theta: f64) -> f64 {
    let r = mu / theta;
    let log_mu_term = if y > 0.0 { y * mu.ln() } else { 0.0 };
    lgamma_ratio(y, theta) - ln_gamma(y + 1.0) - theta * r.ln_1p() + log_mu_term - y * r.ln_1p()
}

fn means(beta: &[f64; 4], offsets: &[f64], years: &[f64], breakpoint: f64) -> Vec<f64> {
    offsets
        .iter()
        .zip(years)
        .map(|(o, &t)| (o + linear_predictor(beta, t, breakpoint)).clamp(-ETA_LIMIT, ETA_LIMIT).exp())
        .collect()
}

/// Exact NB log-likelihood with `μₜ = exp(offsetₜ + xₜᵀβ)`.
pub fn nb_loglik(
    beta: &[f64; 4],
    theta: f64,
    counts: &[u64],
    offsets: &[f64],
    years: &[f64],
    breakpoint: f64,
) -> f64 {
    means(beta, offsets, years, breakpoint)
        .iter()
        .zip(counts)
        .map(|(&mu, &y)| nb_logpmf(y as f64, mu, theta))
        .sum()
}

/// Gradient of [`nb_loglik`] with respect to `(β₀, β₁, β₂, β₃, θ)`.
pub fn nb_score(
    beta: &[f64; 4],
    theta: f64,
    counts: &[u64],
    offsets: &[f64],
    years: &[f64],
    breakpoint: f64,
) -> [f64; 5] {
    let mu = means(beta, offsets, years, breakpoint);
    let mut g = [0.0; 5];
    for ((&m, &y), &t) in mu.iter().zip(counts).zip(years) {
        let y = y as f64;
        let x = design_row(t, breakpoint);
        let r = theta * (y - m) / (theta + m);
        for j in 0..4 {
            g[j] += x[j] * r;
        }
        g[4] += theta_score_term(y, m, theta);
    }
    g
}

fn theta_score_term(y: f64, mu: f64, theta: f64) -> f64 {
    digamma_diff(y, theta) - (mu / theta).ln_1p() + (mu - y) / (theta + mu)
}

fn theta_hessian_term(y: f64, mu: f64, theta: f64) -> f64 {
    let s = theta + mu;
    trigamma_diff(y, theta) + mu / (theta * s) - (mu - y) / (s * s)
}

/// Fit one (age, cause) cell.
///
/// Cells whose mean annual count is below one are returned zeroed. Otherwise β
/// and θ are estimated by alternating IRLS at fixed θ with Newton steps on
/// `ln θ`; θ is capped at [`THETA_CAP`] for equidispersed data.
pub fn nb_glm_fit(
    counts: &[u64],
    exposures: &[f64],
    years: &[f64],
    breakpoint: f64,
) -> Result<NbFit, ModelError> {
    let n = counts.len();
    if exposures.len() != n || years.len() != n {
        return Err(ModelError::InvalidInput("counts, exposures and years must align".into()));
    }
    if n < 6 {
        return Err(ModelError::InvalidInput(format!("{n} observations are too few")));
    }
    if exposures.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(ModelError::InvalidInput("exposures must be positive".into()));
    }
    let total: f64 = counts.iter().map(|&c| c as f64).sum();
    if total / (n as f64) < 1.0 {
        return Ok(NbFit::zeroed());
    }

    let fitter = Fitter::new(counts, exposures, years, breakpoint)?;
    Ok(fitter.run())
}

struct Fitter {
    y: Vec<f64>,
    offsets: Vec<f64>,
    x: DMatrix<f64>,
    breakpoint: f64,
    abs_x_y: [f64; 4],
    sum_y: f64,
}

impl Fitter {
    fn new(counts: &[u64], exposures: &[f64], years: &[f64], breakpoint: f64) -> Result<Fitter, ModelError> {
        let n = counts.len();
        // time centred at the break: the raw-year intercept is recovered at the end
        let x = DMatrix::from_fn(n, 4, |i, j| {
            let t = years[i] - breakpoint;
            let post = if t >= 0.0 { 1.0 } else { 0.0 };
            [1.0, t, t * post, post][j]
        });
        let y: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let mut abs_x_y = [0.0; 4];
        for (i, yi) in y.iter().enumerate() {
            for (j, a) in abs_x_y.iter_mut().enumerate() {
                *a += x[(i, j)].abs() * yi;
            }
        }
        let fitter = Fitter {
            sum_y: y.iter().sum(),
            y,
            offsets: exposures.iter().map(|e| e.ln()).collect(),
            x,
            breakpoint,
            abs_x_y,
        };
        // rank check on the unweighted design
        least_squares(&fitter.x, &vec![0.0; n])?;
        Ok(fitter)
    }

    fn mu(&self, beta: &DVector<f64>) -> Vec<f64> {
        let eta = &self.x * beta;
        eta.iter()
            .zip(&self.offsets)
            .map(|(e, o)| (e + o).clamp(-ETA_LIMIT, ETA_LIMIT).exp())
            .collect()
    }

    fn loglik(&self, mu: &[f64], theta: Option<f64>) -> f64 {
        match theta {
            Some(th) => mu.iter().zip(&self.y).map(|(&m, &y)| nb_logpmf(y, m, th)).sum(),
            None => mu
                .iter()
                .zip(&self.y)
                .map(|(&m, &y)| {
                    let log_term = if y > 0.0 { y * m.ln() } else { 0.0 };
                    log_term - m - ln_gamma(y + 1.0)
                })
                .sum(),
        }
    }

    /// Weighted least squares update with step halving. `theta = None` is Poisson.
    fn irls(&self, beta: &mut DVector<f64>, theta: Option<f64>, max_iter: usize) {
        let mut mu = self.mu(beta);
        let mut ll = self.loglik(&mu, theta);
        for _ in 0..max_iter {
            let eta = &self.x * &*beta;
            let n = self.y.len();
            let mut xw = self.x.clone();
            let mut z = vec![0.0; n];
            for i in 0..n {
                let m = mu[i].max(1e-300);
                let w = match theta {
                    Some(th) => m / (1.0 + m / th),
                    None => m,
                };
                let sw = w.sqrt();
                z[i] = sw * (eta[i] + (self.y[i] - m) / m);
                xw.row_mut(i).scale_mut(sw);
            }
            let Ok(target) = least_squares(&xw, &z) else { break };
            let target = DVector::from_vec(target);
            let mut step = &target - &*beta;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = &*beta + &step;
                let cmu = self.mu(&cand);
                let cll = self.loglik(&cmu, theta);
                if cll.is_finite() && cll >= ll - 1e-12 * ll.abs().max(1.0) {
                    let change = (cll - ll).abs();
                    *beta = cand;
                    mu = cmu;
                    ll = cll;
                    accepted = true;
                    if change <= 1e-14 * ll.abs().max(1.0) {
                        return;
                    }
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                return;
            }
        }
    }

    /// Newton ascent on `ln θ` with β fixed. Returns the new θ.
    fn update_theta(&self, mu: &[f64], theta: f64) -> f64 {
        let profile = |th: f64| -> f64 { mu.iter().zip(&self.y).map(|(&m, &y)| nb_logpmf(y, m, th)).sum() };
        let mut th = theta;
        let mut ll = profile(th);
        for _ in 0..50 {
            let (mut g, mut h) = (0.0, 0.0);
            for (&m, &y) in mu.iter().zip(&self.y) {
                g += theta_score_term(y, m, th);
                h += theta_hessian_term(y, m, th);
            }
            // derivatives in φ = ln θ
            let gp = th * g;
            let hp = th * th * h + th * g;
            let mut step = if hp < 0.0 { -gp / hp } else { gp.signum() };
            step = step.clamp(-3.0, 3.0);
            if th >= THETA_CAP && step > 0.0 {
                return THETA_CAP;
            }
            let mut moved = false;
            for _ in 0..40 {
                let cand = (th.ln() + step).exp().min(THETA_CAP);
                let cll = profile(cand);
                if cll.is_finite() && cll >= ll {
                    moved = cand != th;
                    th = cand;
                    ll = cll;
                    break;
                }
                step *= 0.5;
            }
            if !moved || step.abs() < 1e-12 {
                break;
            }
        }
        th
    }

    fn relative_score(&self, mu: &[f64], theta: f64, capped: bool) -> f64 {
        let mut g = [0.0; 5];
        for (i, (&m, &y)) in mu.iter().zip(&self.y).enumerate() {
            let r = theta * (y - m) / (theta + m);
            for j in 0..4 {
                g[j] += self.x[(i, j)] * r;
            }
            g[4] += theta_score_term(y, m, theta);
        }
        let mut worst: f64 = 0.0;
        for j in 0..4 {
            worst = worst.max(g[j].abs() / self.abs_x_y[j].max(1.0));
        }
        if !capped {
            worst = worst.max(g[4].abs() * theta / self.sum_y.max(1.0));
        }
        worst
    }

    fn run(&self) -> NbFit {
        let mut beta = DVector::zeros(4);
        let mean_rate = self.sum_y
            / self.offsets.iter().map(|o| o.exp()).sum::<f64>();
        beta[0] = mean_rate.ln();
        self.irls(&mut beta, None, 100);

        let mu = self.mu(&beta);
        let (mut num, mut den) = (0.0, 0.0);
        for (&m, &y) in mu.iter().zip(&self.y) {
            num += m * m;
            den += (y - m).powi(2) - m;
        }
        let mut theta = if den > 0.0 { (num / den).clamp(1e-3, THETA_CAP) } else { THETA_CAP };

        let mut dev = -2.0 * self.loglik(&mu, Some(theta));
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=MAX_OUTER_ITER {
            iterations = it;
            self.irls(&mut beta, Some(theta), 50);
            let mu = self.mu(&beta);
            theta = self.update_theta(&mu, theta);
            let new_dev = -2.0 * self.loglik(&mu, Some(theta));
            let rel = (new_dev - dev).abs() / new_dev.abs().max(1.0);
            dev = new_dev;
            let capped = theta >= THETA_CAP;
            if rel < DEV_TOL && self.relative_score(&mu, theta, capped) < SCORE_TOL {
                converged = true;
                break;
            }
        }

        let mu = self.mu(&beta);
        let capped = theta >= THETA_CAP;
        let loglik = self.loglik(&mu, Some(theta));
        let cov_c = self.covariance(&mu, theta, capped);

        // raw-year parameterisation: β₀ = β₀ᶜ − ε·β₁ᶜ
        let b = self.breakpoint;
        let beta_raw = [beta[0] - b * beta[1], beta[1], beta[2], beta[3]];
        let mut a = Matrix4::identity();
        a[(0, 1)] = -b;
        let cov = cov_c.map(|c| a * c * a.transpose());
        let (se, p_values, cov_arr) = match cov {
            Some(c) if (0..4).all(|i| c[(i, i)].is_finite() && c[(i, i)] > 0.0) => {
                let se: [f64; 4] = std::array::from_fn(|i| c[(i, i)].sqrt());
                let p: [f64; 4] = std::array::from_fn(|i| 2.0 * normal_sf((beta_raw[i] / se[i]).abs()));
                let arr: [[f64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| c[(i, j)]));
                (Some(se), Some(p), Some(arr))
            }
            _ => (None, None, None),
        };
        NbFit {
            beta: Some(beta_raw),
            theta: Some(theta),
            se,
            p_values,
            cov: cov_arr,
            converged,
            zeroed: false,
            theta_capped: capped,
            loglik: Some(loglik),
            iterations,
        }
    }

    /// Inverse observed information for the centred β, θ profiled in when free.
    fn covariance(&self, mu: &[f64], theta: f64, capped: bool) -> Option<Matrix4<f64>> {
        let dim = if capped { 4 } else { 5 };
        let mut info = DMatrix::<f64>::zeros(dim, dim);
        for (i, (&m, &y)) in mu.iter().zip(&self.y).enumerate() {
            let s = theta + m;
            let w = m * theta * (y + theta) / (s * s);
            let cross = (y - m) * m / (s * s);
            for j in 0..4 {
                let xj = self.x[(i, j)];
                for k in 0..4 {
                    info[(j, k)] += xj * self.x[(i, k)] * w;
                }
                if !capped {
                    info[(j, 4)] -= xj * cross;
                }
            }
            if !capped {
                info[(4, 4)] -= theta_hessian_term(y, m, theta);
            }
        }
        if !capped {
            for j in 0..4 {
                info[(4, j)] = info[(j, 4)];
            }
        }
        let inv = info.try_inverse()?;
        Some(Matrix4::from_fn(|i, j| inv[(i, j)]))
    }
}
