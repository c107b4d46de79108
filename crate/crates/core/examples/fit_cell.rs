//! Fit the negative binomial breakpoint model to one simulated cell and
//! print coefficients with Wald standard errors and p-values.
//!
//! cargo run --example fit_cell

use mortality_slowdown::bootstrap::draw_nb;
use mortality_slowdown::regression::{linear_predictor, nb_glm_fit};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let years: Vec<f64> = (2001..=2018).map(f64::from).collect();
    let exposure = vec![1.2e6; years.len()];
    // Falling 2.5% a year until 2011, flat afterwards.
    let truth = [-5.0 + 0.025 * 2011.0, -0.025, 0.025, 0.0];
    let theta = 300.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let counts: Vec<u64> = years
        .iter()
        .zip(&exposure)
        .map(|(&t, e)| draw_nb(&mut rng, e * linear_predictor(&truth, t, 2011.0).exp(), theta))
        .collect();
    println!("deaths: {counts:?}");

    let fit = nb_glm_fit(&counts, &exposure, &years, 2011.0)?;
    let (beta, se, p) = (fit.beta.unwrap(), fit.se.unwrap(), fit.p_values.unwrap());
    for (i, name) in ["intercept", "slope", "slope change", "level shift"].iter().enumerate() {
        println!("{name:>13}: {:>10.5} (se {:.5}, p {:.3})  truth {:.5}", beta[i], se[i], p[i], truth[i]);
    }
    println!("theta {:.1}{}, {} iterations", fit.theta.unwrap(), if fit.theta_capped { " (capped)" } else { "" }, fit.iterations);
    Ok(())
}
