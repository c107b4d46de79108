//! Gaussian linear trend models with an optional single breakpoint.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BreakKind {
    /// `β₀ + β₁t`
    None,
    /// `β₀ + β₁t + β₂(t−ε)I(t≥ε)`
    Continuous,
    /// `β₀ + β₁t + (β₂(t−ε) + β₃)I(t≥ε)`
    Discontinuous,
}

impl BreakKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BreakKind::None => "none",
            BreakKind::Continuous => "continuous",
            BreakKind::Discontinuous => "discontinuous",
        }
    }

    pub fn n_coefficients(self) -> usize {
        match self {
            BreakKind::None => 2,
            BreakKind::Continuous => 3,
            BreakKind::Discontinuous => 4,
        }
    }
}

/// Which trend model to build and where its break sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignSpec {
    kind: BreakKind,
    epsilon: Option<i32>,
}

impl DesignSpec {
    pub fn no_break() -> DesignSpec {
        DesignSpec {
            kind: BreakKind::None,
            epsilon: None,
        }
    }

    pub fn continuous(epsilon: i32) -> DesignSpec {
        DesignSpec {
            kind: BreakKind::Continuous,
            epsilon: Some(epsilon),
        }
    }

    pub fn discontinuous(epsilon: i32) -> DesignSpec {
        DesignSpec {
            kind: BreakKind::Discontinuous,
            epsilon: Some(epsilon),
        }
    }

    pub fn new(kind: BreakKind, epsilon: i32) -> DesignSpec {
        match kind {
            BreakKind::None => DesignSpec::no_break(),
            _ => DesignSpec {
                kind,
                epsilon: Some(epsilon),
            },
        }
    }

    pub fn kind(&self) -> BreakKind {
        self.kind
    }

    pub fn epsilon(&self) -> Option<i32> {
        self.epsilon
    }

    /// Design row for calendar year `t`, raw (uncentred) time covariate.
    pub fn row(&self, t: f64) -> Vec<f64> {
        let mut row = vec![1.0, t];
        if let Some(eps) = self.epsilon {
            let post = if t >= eps as f64 { 1.0 } else { 0.0 };
            row.push((t - eps as f64) * post);
            if self.kind == BreakKind::Discontinuous {
                row.push(post);
            }
        }
        row
    }

    pub fn matrix(&self, years: &[f64]) -> DMatrix<f64> {
        let p = self.kind.n_coefficients();
        DMatrix::from_fn(years.len(), p, |i, j| self.row(years[i])[j])
    }
}

/// Maximum-likelihood Gaussian fit of a trend model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianFit {
    pub coefficients: Vec<f64>,
    pub sigma2_mle: f64,
    pub loglik: f64,
    pub bic: f64,
    pub n: usize,
    pub rss: f64,
}

impl GaussianFit {
    /// Number of estimated parameters, the variance included.
    pub fn n_params(&self) -> usize {
        self.coefficients.len() + 1
    }

    pub fn fitted(&self, spec: &DesignSpec, t: f64) -> f64 {
        spec.row(t)
            .iter()
            .zip(&self.coefficients)
            .map(|(x, b)| x * b)
            .sum()
    }
}

/// Least-squares fit of `y` on the trend design evaluated at `years`.
///
/// The residual variance is floored at `(1e-9·sd(y))²` so that exact fits keep
/// a finite BIC and ties between exact fits are broken by the penalty alone.
pub fn ols_fit(y: &[f64], years: &[f64], spec: &DesignSpec) -> Result<GaussianFit, ModelError> {
    let n = y.len();
    let p = spec.kind.n_coefficients();
    if years.len() != n {
        return Err(ModelError::InvalidInput(format!(
            "{} observations but {} years",
            n,
            years.len()
        )));
    }
    if n < p + 1 {
        return Err(ModelError::InvalidInput(format!(
            "{n} observations cannot support {p} coefficients and a variance"
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::InvalidInput("non-finite response".into()));
    }
    let x = spec.matrix(years);
    let coefficients = least_squares(&x, y)?;
    let yv = DVector::from_column_slice(y);
    let resid = &yv - &x * DVector::from_column_slice(&coefficients);
    let rss = resid.norm_squared();

    let mean = y.iter().sum::<f64>() / n as f64;
    let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let floor = ((1e-9 * sd).powi(2)).max(f64::MIN_POSITIVE);
    let sigma2 = (rss / n as f64).max(floor);
    let nf = n as f64;
    let loglik = -0.5 * nf * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);
    let k = (p + 1) as f64;
    Ok(GaussianFit {
        coefficients,
        sigma2_mle: sigma2,
        loglik,
        bic: -2.0 * loglik + k * nf.ln(),
        n,
        rss,
    })
}

/// Solve `min ‖Xb − y‖` by Householder QR, rejecting rank-deficient designs.
pub fn least_squares(x: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>, ModelError> {
    let p = x.ncols();
    // column scaling keeps the rank test meaningful for raw calendar years
    let scales: Vec<f64> = (0..p)
        .map(|j| {
            let s = x.column(j).amax();
            if s > 0.0 { s } else { 1.0 }
        })
        .collect();
    let mut xs = x.clone();
    for (j, s) in scales.iter().enumerate() {
        xs.column_mut(j).scale_mut(1.0 / s);
    }
    let qr = xs.qr();
    let r = qr.r();
    let rmax = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..p).any(|i| r[(i, i)].abs() <= 1e-10 * rmax) {
        return Err(ModelError::RankDeficient);
    }
    let qty = qr.q().transpose() * DVector::from_column_slice(y);
    let b = r
        .solve_upper_triangular(&qty)
        .ok_or(ModelError::RankDeficient)?;
    Ok(b.iter().zip(&scales).map(|(b, s)| b / s).collect())
}

/// Slope and intercept of a simple linear regression of `y` on `x`.
pub fn simple_slope(x: &[f64], y: &[f64]) -> Result<(f64, f64), ModelError> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(ModelError::InvalidInput("slope needs two aligned points".into()));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ModelError::RankDeficient);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
