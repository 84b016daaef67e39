//! Fixed-effects model fitting: ordinary least squares for the WER model
//! and iteratively reweighted least squares for the logistic neighborhood
//! model.
//!
//! Both fits are fixed-effects approximations of the corresponding
//! mixed-effects analyses; the analysis CSV carries everything an external
//! mixed-model fit needs.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::StatsError;

/// Fitted coefficients with their uncertainty and convergence bookkeeping.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub column_names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// OLS: from `(X^T X)^{-1} sigma^2`; logistic: inverse Fisher
    /// information at the final coefficients.
    pub std_errors: Vec<f64>,
    pub n_observations: usize,
    pub n_iterations: usize,
    pub converged: bool,
    /// Final log-likelihood (logistic fits only).
    pub log_likelihood: Option<f64>,
    /// Per-iteration log-likelihood trace (logistic fits only).
    pub log_likelihood_trace: Vec<f64>,
    /// Residual variance estimate (OLS fits only).
    pub residual_variance: Option<f64>,
}

/// Relative singular-value cutoff for rank detection.
const RANK_TOL: f64 = 1e-10;

/// Verify X has full column rank; on failure name the columns loading on
/// the null space.
fn check_full_rank(x: &DMatrix<f64>, names: &[String]) -> Result<(), StatsError> {
    let svd = x.clone().svd(false, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = max_sv * RANK_TOL * (x.nrows().max(x.ncols()) as f64);
    let v_t = svd.v_t.as_ref();
    let mut collinear: Vec<String> = Vec::new();
    for (k, sv) in svd.singular_values.iter().enumerate() {
        if *sv <= tol {
            if let Some(v_t) = v_t {
                for j in 0..x.ncols() {
                    let load = v_t[(k, j)].abs();
                    if load > 0.3 {
                        let name = names.get(j).cloned().unwrap_or_else(|| format!("col{j}"));
                        if !collinear.contains(&name) {
                            collinear.push(name);
                        }
                    }
                }
            }
        }
    }
    if svd.singular_values.iter().any(|sv| *sv <= tol) {
        return Err(StatsError::RankDeficient { columns: collinear });
    }
    Ok(())
}

/// Ordinary least squares via the SVD pseudo-inverse, standard errors from
/// `(X^T X)^{-1} sigma_hat^2`.
pub fn fit_ols(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
) -> Result<FitResult, StatsError> {
    let n = x.nrows();
    let p = x.ncols();
    if n == 0 || p == 0 {
        return Err(StatsError::EmptyDesign);
    }
    if y.len() != n {
        return Err(StatsError::ShapeMismatch {
            rows: n,
            responses: y.len(),
        });
    }
    check_full_rank(x, names)?;

    let svd = x.clone().svd(true, true);
    let beta = svd
        .solve(y, RANK_TOL)
        .map_err(|e| StatsError::Numeric(e.to_string()))?;
    let residuals = y - x * &beta;
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let df = n.saturating_sub(p);
    let sigma2 = if df > 0 { rss / df as f64 } else { f64::NAN };

    let xtx = x.transpose() * x;
    let xtx_inv = Cholesky::new(xtx)
        .ok_or_else(|| StatsError::Numeric("X^T X is not positive definite".to_string()))?
        .inverse();
    let std_errors: Vec<f64> = (0..p).map(|j| (xtx_inv[(j, j)] * sigma2).sqrt()).collect();

    Ok(FitResult {
        column_names: names.to_vec(),
        coefficients: beta.iter().cloned().collect(),
        std_errors,
        n_observations: n,
        n_iterations: 1,
        converged: true,
        log_likelihood: None,
        log_likelihood_trace: Vec::new(),
        residual_variance: Some(sigma2),
    })
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Bernoulli log-likelihood under the logit link.
pub fn logistic_log_likelihood(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter()
        .zip(y.iter())
        .map(|(e, yi)| yi * e - softplus(*e))
        .sum()
}

/// Analytic gradient of the logistic log-likelihood: `X^T (y - mu)`.
pub fn logistic_gradient(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> DVector<f64> {
    let eta = x * beta;
    let mu = eta.map(sigmoid);
    x.transpose() * (y - mu)
}

/// Coefficient magnitude beyond which the data are treated as
/// quasi-separated: the likelihood keeps improving while the estimates
/// diverge, so the fit is flagged instead of reported as converged.
const SEPARATION_BOUND: f64 = 30.0;

/// Floor on the working weights mu(1-mu) to keep the information matrix
/// invertible near fitted probabilities of 0 or 1.
const WEIGHT_FLOOR: f64 = 1e-10;

/// Fisher information `X^T W X` with `W = diag(weights)`.
fn weighted_gram(x: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let (n, p) = (x.nrows(), x.ncols());
    let mut xtwx = DMatrix::<f64>::zeros(p, p);
    for i in 0..n {
        let w = weights[i];
        for a in 0..p {
            let xa = x[(i, a)] * w;
            for b in a..p {
                xtwx[(a, b)] += xa * x[(i, b)];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtwx[(a, b)] = xtwx[(b, a)];
        }
    }
    xtwx
}

/// Logistic regression by iteratively reweighted least squares.
///
/// Convergence is declared when the gradient's max-norm falls below `tol`.
/// Each Newton/IRLS step is halved until the log-likelihood does not
/// decrease, so the per-iteration likelihood trace is non-decreasing.
/// Perfect or quasi-separation yields a non-converged flagged result, not
/// an error.
pub fn fit_logistic_irls(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
    tol: f64,
    max_iter: usize,
) -> Result<FitResult, StatsError> {
    let n = x.nrows();
    let p = x.ncols();
    if n == 0 || p == 0 {
        return Err(StatsError::EmptyDesign);
    }
    if y.len() != n {
        return Err(StatsError::ShapeMismatch {
            rows: n,
            responses: y.len(),
        });
    }
    if let Some(bad) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(StatsError::BadFactor(format!(
            "logistic response must be 0/1, found {bad}"
        )));
    }
    check_full_rank(x, names)?;

    let mut beta = DVector::zeros(p);
    let mut ll = logistic_log_likelihood(x, y, &beta);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0usize;

    for iter in 1..=max_iter {
        iterations = iter;
        let eta = x * &beta;
        let mu = eta.map(sigmoid);
        let grad = x.transpose() * (y - &mu);
        if grad.amax() < tol {
            converged = true;
            iterations = iter - 1;
            break;
        }
        let weights: Vec<f64> = mu
            .iter()
            .map(|m| (m * (1.0 - m)).max(WEIGHT_FLOOR))
            .collect();
        let xtwx = weighted_gram(x, &weights);
        let Some(chol) = Cholesky::new(xtwx) else {
            // information matrix collapsed: separation
            break;
        };
        let mut step = chol.solve(&grad);
        // halve until the likelihood does not decrease
        let mut candidate = &beta + &step;
        let mut new_ll = logistic_log_likelihood(x, y, &candidate);
        let mut halvings = 0usize;
        while new_ll < ll && halvings < 50 {
            step /= 2.0;
            candidate = &beta + &step;
            new_ll = logistic_log_likelihood(x, y, &candidate);
            halvings += 1;
        }
        if new_ll < ll {
            // no improving step exists at this point; stop
            break;
        }
        beta = candidate;
        ll = new_ll;
        trace.push(ll);
        if beta.amax() > SEPARATION_BOUND {
            break;
        }
    }

    if beta.amax() > SEPARATION_BOUND {
        converged = false;
    }

    // standard errors from the inverse Fisher information at the final beta
    let eta = x * &beta;
    let mu = eta.map(sigmoid);
    let weights: Vec<f64> = mu
        .iter()
        .map(|m| (m * (1.0 - m)).max(WEIGHT_FLOOR))
        .collect();
    let std_errors: Vec<f64> = match Cholesky::new(weighted_gram(x, &weights)) {
        Some(chol) => {
            let inv = chol.inverse();
            (0..p).map(|j| inv[(j, j)].sqrt()).collect()
        }
        None => vec![f64::NAN; p],
    };

    Ok(FitResult {
        column_names: names.to_vec(),
        coefficients: beta.iter().cloned().collect(),
        std_errors,
        n_observations: n,
        n_iterations: iterations,
        converged,
        log_likelihood: Some(ll),
        log_likelihood_trace: trace,
        residual_variance: None,
    })
}

/// Fitted probabilities for a logistic fit.
pub fn fitted_probabilities(x: &DMatrix<f64>, coefficients: &[f64]) -> Vec<f64> {
    let beta = DVector::from_column_slice(coefficients);
    (x * beta).iter().map(|e| sigmoid(*e)).collect()
}

/// Plain-text report of a fit, one `term estimate (std error)` line per
/// coefficient. All built-in fits are fixed-effects approximations and the
/// header says so.
pub fn render_fit(result: &FitResult, model_label: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "model: {model_label} (fixed-effects approximation; no random effects)\n"
    ));
    out.push_str(&format!(
        "observations: {}  iterations: {}  converged: {}\n",
        result.n_observations, result.n_iterations, result.converged
    ));
    if let Some(ll) = result.log_likelihood {
        out.push_str(&format!("log_likelihood: {ll:.6}\n"));
    }
    if let Some(rv) = result.residual_variance {
        out.push_str(&format!("residual_variance: {rv:.6}\n"));
    }
    out.push_str("term,estimate,std_error\n");
    for ((name, coef), se) in result
        .column_names
        .iter()
        .zip(&result.coefficients)
        .zip(&result.std_errors)
    {
        out.push_str(&format!("{name},{coef:.6},{se:.6}\n"));
    }
    out
}
