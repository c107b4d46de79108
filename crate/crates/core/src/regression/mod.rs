//! Gaussian trend models and the negative binomial cell GLM.

pub mod negbin;
pub mod ols;

pub use negbin::{
    design_row, dispersion_ratio, linear_predictor, nb_glm_fit, nb_loglik, nb_logpmf, nb_score,
    NbFit, THETA_CAP,
};
pub use ols::{least_squares, ols_fit, simple_slope, BreakKind, DesignSpec, GaussianFit};
