//! Structural analysis of a fitted VAR: impulse responses (Cholesky and
//! generalized), forecast-error variance decompositions, and historical
//! decompositions.
//!
//! Conventions:
//! - The moving-average matrices follow the recursion Phi_0 = I,
//!   Phi_h = sum_{j=1..min(h,p)} A_j Phi_{h-j}; extra exogenous lag blocks
//!   do not enter the recursion.
//! - The innovation covariance used throughout is the degrees-of-freedom
//!   adjusted estimate Sigma * T/(T-m), m = parameters per equation.
//! - Cholesky responses: Theta_h = Phi_h B where B is the impact matrix, the
//!   lower Cholesky factor of the covariance permuted to the requested
//!   ordering and mapped back to storage order. Column j of B is the shock
//!   of the j-th variable in the ordering.
//! - Generalized responses to shock j: sigma_jj^{-1/2} Phi_h Sigma e_j.
//!   These do not depend on any ordering; the own-impact equals
//!   sqrt(sigma_jj).
//! - Confidence bands are +/-2 asymptotic standard errors from the delta
//!   method: gradients with respect to the VAR coefficients propagate
//!   through the Phi recursion, gradients with respect to the distinct
//!   covariance entries propagate through the Cholesky factor (or through
//!   Sigma e_j and the normalization for generalized responses). Coefficient
//!   and covariance sampling variability are treated as independent. A
//!   parametric-bootstrap alternative is available behind a pinned seed.
//! - The historical decomposition uses generalized weights: shock j
//!   contributes sum_s (Phi_s Sigma D^{-1})[i,j] u_{j,t-s} to variable i,
//!   D = diag(Sigma). These weights are not additive across shocks unless
//!   the residual covariance is diagonal (the gap is
//!   sum_s Phi_s (Sigma D^{-1} - I) u_{t-s}), so the final shock's
//!   contribution is defined by residual closure: baseline plus all
//!   contributions reproduces the observed series identically.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::dataframe::{Frame, MonthStamp, Series};
use crate::varmodel::{fit_var, stability_roots, VarFit};
use crate::{Error, Result};

/// Identification scheme for impulse responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrfMethod {
    /// Orthogonalized by the lower Cholesky factor of the innovation
    /// covariance under a caller-supplied ordering.
    Cholesky,
    /// Generalized impulses; invariant to variable ordering.
    Generalized,
}

impl IrfMethod {
    pub fn label(&self) -> &'static str {
        match self {
            IrfMethod::Cholesky => "cholesky",
            IrfMethod::Generalized => "generalized",
        }
    }
}

/// Impulse-response paths with +/-2 standard-error bands.
///
/// `responses[j][i][h]` is the response of `variable_names[i]` at horizon h
/// (h = 0 is impact) to the shock named `shock_names[j]`.
#[derive(Debug, Clone)]
pub struct IrfPaths {
    pub method: IrfMethod,
    pub horizon: usize,
    pub variable_names: Vec<String>,
    pub shock_names: Vec<String>,
    pub responses: Vec<Vec<Vec<f64>>>,
    pub lower: Vec<Vec<Vec<f64>>>,
    pub upper: Vec<Vec<Vec<f64>>>,
    /// Set when the companion roots indicate an unstable system; responses
    /// are still produced.
    pub warning: Option<String>,
}

/// Forecast-error variance decomposition.
///
/// `shares[i][h][j]` is the fraction of the (h+1)-step-ahead forecast-error
/// variance of `variable_names[i]` attributed to the shock of
/// `shock_names[j]`. Each `shares[i][h]` row sums to one.
#[derive(Debug, Clone)]
pub struct FevdTable {
    pub horizon: usize,
    pub variable_names: Vec<String>,
    pub shock_names: Vec<String>,
    pub shares: Vec<Vec<Vec<f64>>>,
}

/// Historical decomposition over the estimation sample.
///
/// For every variable i and sample row t:
/// `observed[i][t] == baseline[i][t] + sum_j contributions[i][j][t]`
/// holds exactly; the final shock's contribution absorbs the closure
/// residual of the generalized weights.
#[derive(Debug, Clone)]
pub struct HDTable {
    pub variable_names: Vec<String>,
    pub shock_names: Vec<String>,
    /// Index of the first decomposed row within the source frame.
    pub first_row: usize,
    pub observed: Vec<Vec<f64>>,
    /// Dynamic forecast from the presample values and deterministic terms
    /// with all shocks suppressed.
    pub baseline: Vec<Vec<f64>>,
    pub contributions: Vec<Vec<Vec<f64>>>,
}

/// Moving-average coefficient matrices Phi_0..Phi_{h-1}.
fn phi_matrices(a: &[DMatrix<f64>], h: usize) -> Vec<DMatrix<f64>> {
    let n = if a.is_empty() { 0 } else { a[0].nrows() };
    let mut phi = Vec::with_capacity(h);
    phi.push(DMatrix::<f64>::identity(n, n));
    for s in 1..h {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (j, aj) in a.iter().enumerate() {
            if s >= j + 1 {
                m += aj * &phi[s - j - 1];
            }
        }
        phi.push(m);
    }
    phi
}

fn chol_lower(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    nalgebra::Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or(Error::DegenerateCovariance)
}

/// Degrees-of-freedom adjusted innovation covariance.
fn sigma_df(fit: &VarFit) -> DMatrix<f64> {
    let t = fit.t_obs as f64;
    let m = fit.params_per_equation() as f64;
    &fit.sigma * (t / (t - m))
}

/// Maps ordering names to variable indices; must be a permutation.
fn ordering_indices(names: &[String], ordering: &[String]) -> Result<Vec<usize>> {
    if ordering.len() != names.len() {
        return Err(Error::InvalidArgument(format!(
            "ordering lists {} names for {} variables",
            ordering.len(),
            names.len()
        )));
    }
    let mut idx = Vec::with_capacity(ordering.len());
    for name in ordering {
        let i = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn(name.clone()))?;
        if idx.contains(&i) {
            return Err(Error::InvalidArgument(format!(
                "ordering repeats variable {name}"
            )));
        }
        idx.push(i);
    }
    Ok(idx)
}

/// Impact matrix for the Cholesky scheme in storage order: column j is the
/// shock of the j-th ordered variable, row i the variable at storage index i.
/// Viewed in ordering coordinates the matrix is lower triangular.
fn cholesky_impact(sigma: &DMatrix<f64>, ord: &[usize]) -> Result<DMatrix<f64>> {
    let n = sigma.nrows();
    let mut sig_ord = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            sig_ord[(a, b)] = sigma[(ord[a], ord[b])];
        }
    }
    let p = chol_lower(&sig_ord)?;
    let mut impact = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            impact[(ord[a], b)] = p[(a, b)];
        }
    }
    Ok(impact)
}

/// Point responses `[shock][variable][h]` from coefficient matrices and an
/// innovation covariance. For `IrfMethod::Cholesky`, `ordering[j]` gives the
/// variable index of the j-th shock; for `IrfMethod::Generalized` the
/// ordering is ignored and shocks follow storage order.
///
/// Exposed so identification properties (triangular impact, exact zero
/// cross-responses under diagonal coefficients and covariance, ordering
/// invariance of generalized responses) can be asserted on hand-built
/// systems without an estimation step.
pub fn irf_from_coefficients(
    a: &[DMatrix<f64>],
    sigma: &DMatrix<f64>,
    horizon: usize,
    method: IrfMethod,
    ordering: Option<&[usize]>,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = sigma.nrows();
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    if sigma.ncols() != n || a.iter().any(|m| m.nrows() != n || m.ncols() != n) {
        return Err(Error::InvalidArgument(
            "coefficient and covariance dimensions disagree".into(),
        ));
    }
    let phi = phi_matrices(a, horizon);
    let mut responses = vec![vec![vec![0.0; horizon]; n]; n];
    match method {
        IrfMethod::Cholesky => {
            let ord = ordering.ok_or_else(|| {
                Error::InvalidArgument("cholesky identification requires an ordering".into())
            })?;
            if ord.len() != n {
                return Err(Error::InvalidArgument("ordering length mismatch".into()));
            }
            let impact = cholesky_impact(sigma, ord)?;
            for (s, phi_s) in phi.iter().enumerate() {
                let theta = phi_s * &impact;
                for j in 0..n {
                    for i in 0..n {
                        responses[j][i][s] = theta[(i, j)];
                    }
                }
            }
        }
        IrfMethod::Generalized => {
            if ordering.is_some() {
                return Err(Error::InvalidArgument(
                    "generalized impulses do not take an ordering".into(),
                ));
            }
            for j in 0..n {
                if sigma[(j, j)] <= 0.0 {
                    return Err(Error::DegenerateCovariance);
                }
                let scale = 1.0 / sigma[(j, j)].sqrt();
                let col = sigma.column(j).into_owned();
                for (s, phi_s) in phi.iter().enumerate() {
                    let v = phi_s * &col;
                    for i in 0..n {
                        responses[j][i][s] = scale * v[i];
                    }
                }
            }
        }
    }
    Ok(responses)
}

/// Lower-half operator used by the Cholesky differential: keeps the strict
/// lower triangle and halves the diagonal.
fn lower_half(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            out[(i, j)] = m[(i, j)];
        }
        out[(i, i)] = 0.5 * m[(i, i)];
    }
    out
}

/// Differential of the lower Cholesky factor: for Sigma = P P' and a
/// symmetric perturbation S, dP = P lower_half(P^-1 S P^-T).
fn chol_differential(p: &DMatrix<f64>, s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p.nrows();
    let mut x = s.clone();
    // X <- P^-1 S: forward substitution column by column.
    for c in 0..n {
        for r in 0..n {
            let mut v = x[(r, c)];
            for k in 0..r {
                v -= p[(r, k)] * x[(k, c)];
            }
            x[(r, c)] = v / p[(r, r)];
        }
    }
    // X <- X P^-T: solve row by row against P'.
    for r in 0..n {
        for c in 0..n {
            let mut v = x[(r, c)];
            for k in 0..c {
                v -= x[(r, k)] * p[(c, k)];
            }
            x[(r, c)] = v / p[(c, c)];
        }
    }
    p * lower_half(&x)
}

/// Symmetric basis matrix for the distinct covariance entry (c, d), c >= d.
fn sym_basis(n: usize, c: usize, d: usize) -> DMatrix<f64> {
    let mut s = DMatrix::<f64>::zeros(n, n);
    s[(c, d)] = 1.0;
    s[(d, c)] = 1.0;
    s
}

/// Distinct covariance entries in (row, col) order with row >= col.
fn vech_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
    for d in 0..n {
        for c in d..n {
            pairs.push((c, d));
        }
    }
    pairs
}

/// Covariance of the stacked lag coefficients. Parameter (l, a, b) — lag
/// l+1, equation a, regressor variable b — sits at index (l*n + b)*n... the
/// flat order is l-major, then equation row a, then column b:
/// idx = (l * n + a) * n + b.
fn coefficient_covariance(fit: &VarFit, sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let n = fit.n_vars();
    let p = fit.lag_order;
    let xtx_inv = fit.xtx_inv();
    let dim = p * n * n;
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for l1 in 0..p {
        for a1 in 0..n {
            for b1 in 0..n {
                let i1 = (l1 * n + a1) * n + b1;
                let c1 = l1 * n + b1;
                for l2 in 0..p {
                    for a2 in 0..n {
                        for b2 in 0..n {
                            let i2 = (l2 * n + a2) * n + b2;
                            let c2 = l2 * n + b2;
                            cov[(i1, i2)] = sigma[(a1, a2)] * xtx_inv[(c1, c2)];
                        }
                    }
                }
            }
        }
    }
    cov
}

/// Asymptotic covariance of the distinct innovation-covariance entries:
/// Cov(s_ab, s_cd) = (s_ac s_bd + s_ad s_bc) / T.
fn sigma_covariance(sigma: &DMatrix<f64>, t_obs: usize) -> DMatrix<f64> {
    let pairs = vech_pairs(sigma.nrows());
    let t = t_obs as f64;
    let mut cov = DMatrix::<f64>::zeros(pairs.len(), pairs.len());
    for (i, &(a, b)) in pairs.iter().enumerate() {
        for (j, &(c, d)) in pairs.iter().enumerate() {
            cov[(i, j)] =
                (sigma[(a, c)] * sigma[(b, d)] + sigma[(a, d)] * sigma[(b, c)]) / t;
        }
    }
    cov
}

/// Derivatives of Phi_0..Phi_{h-1} with respect to each lag coefficient,
/// indexed like `coefficient_covariance`.
fn phi_derivatives(
    a: &[DMatrix<f64>],
    phi: &[DMatrix<f64>],
    horizon: usize,
) -> Vec<Vec<DMatrix<f64>>> {
    let n = a[0].nrows();
    let p = a.len();
    let mut out = Vec::with_capacity(p * n * n);
    for l in 0..p {
        for ra in 0..n {
            for cb in 0..n {
                let mut d = Vec::with_capacity(horizon);
                d.push(DMatrix::<f64>::zeros(n, n));
                for s in 1..horizon {
                    let mut m = DMatrix::<f64>::zeros(n, n);
                    if s >= l + 1 {
                        // d(A_{l+1}) Phi_{s-l-1} has a single nonzero row.
                        for k in 0..n {
                            m[(ra, k)] += phi[s - l - 1][(cb, k)];
                        }
                    }
                    for (j, aj) in a.iter().enumerate() {
                        if s >= j + 1 {
                            m += aj * &d[s - j - 1];
                        }
                    }
                    d.push(m);
                }
                out.push(d);
            }
        }
    }
    out
}

struct DeltaBands {
    lower: Vec<Vec<Vec<f64>>>,
    upper: Vec<Vec<Vec<f64>>>,
}

/// Delta-method +/-2 SE bands around the point responses.
fn delta_bands(
    fit: &VarFit,
    sigma: &DMatrix<f64>,
    responses: &[Vec<Vec<f64>>],
    horizon: usize,
    method: IrfMethod,
    ord: Option<&[usize]>,
) -> Result<DeltaBands> {
    let n = fit.n_vars();
    let phi = phi_matrices(&fit.a, horizon);
    let dphi = phi_derivatives(&fit.a, &phi, horizon);
    let cov_a = coefficient_covariance(fit, sigma);
    let cov_s = sigma_covariance(sigma, fit.t_obs);
    let pairs = vech_pairs(n);
    let n_a = dphi.len();
    let n_s = pairs.len();

    // Per-shock fixed pieces and the sigma-direction derivatives of the
    // impact structure.
    let impact = match method {
        IrfMethod::Cholesky => Some(cholesky_impact(sigma, ord.unwrap())?),
        IrfMethod::Generalized => None,
    };
    // d(impact)/d(vech sigma) for cholesky; for generalized the impact
    // column of shock j is sigma_jj^{-1/2} Sigma e_j and is differentiated
    // inline below.
    let impact_derivs: Option<Vec<DMatrix<f64>>> = match method {
        IrfMethod::Cholesky => {
            let ord = ord.unwrap();
            let mut sig_ord = DMatrix::<f64>::zeros(n, n);
            for a in 0..n {
                for b in 0..n {
                    sig_ord[(a, b)] = sigma[(ord[a], ord[b])];
                }
            }
            let p_ord = chol_lower(&sig_ord)?;
            let mut list = Vec::with_capacity(n_s);
            for &(c, d) in &pairs {
                let s_basis = sym_basis(n, c, d);
                let mut s_ord = DMatrix::<f64>::zeros(n, n);
                for a in 0..n {
                    for b in 0..n {
                        s_ord[(a, b)] = s_basis[(ord[a], ord[b])];
                    }
                }
                let dp = chol_differential(&p_ord, &s_ord);
                let mut dimp = DMatrix::<f64>::zeros(n, n);
                for a in 0..n {
                    for b in 0..n {
                        dimp[(ord[a], b)] = dp[(a, b)];
                    }
                }
                list.push(dimp);
            }
            Some(list)
        }
        IrfMethod::Generalized => None,
    };

    let mut lower = vec![vec![vec![0.0; horizon]; n]; n];
    let mut upper = vec![vec![vec![0.0; horizon]; n]; n];
    let mut g_a = DVector::<f64>::zeros(n_a);
    let mut g_s = DVector::<f64>::zeros(n_s);
    for j in 0..n {
        // Shock-j direction vectors independent of the horizon.
        let (impact_col, gen_scale, gen_col) = match method {
            IrfMethod::Cholesky => {
                (Some(impact.as_ref().unwrap().column(j).into_owned()), 0.0, None)
            }
            IrfMethod::Generalized => {
                let scale = 1.0 / sigma[(j, j)].sqrt();
                (None, scale, Some(sigma.column(j).into_owned()))
            }
        };
        for s in 0..horizon {
            for i in 0..n {
                // Gradient wrt lag coefficients.
                for (q, d) in dphi.iter().enumerate() {
                    let row = d[s].row(i);
                    g_a[q] = match method {
                        IrfMethod::Cholesky => row.dot(&impact_col.as_ref().unwrap().transpose()),
                        IrfMethod::Generalized => {
                            gen_scale * row.dot(&gen_col.as_ref().unwrap().transpose())
                        }
                    };
                }
                // Gradient wrt distinct covariance entries.
                for (q, &(c, d)) in pairs.iter().enumerate() {
                    g_s[q] = match method {
                        IrfMethod::Cholesky => {
                            let dimp = &impact_derivs.as_ref().unwrap()[q];
                            phi[s].row(i).dot(&dimp.column(j).transpose())
                        }
                        IrfMethod::Generalized => {
                            let s_basis = sym_basis(n, c, d);
                            let mut v =
                                gen_scale * phi[s].row(i).dot(&s_basis.column(j).transpose());
                            if c == j && d == j {
                                // d(sigma_jj^{-1/2}) = -1/2 sigma_jj^{-3/2};
                                // the point response already carries one
                                // factor sigma_jj^{-1/2}.
                                v -= 0.5 / sigma[(j, j)] * responses[j][i][s];
                            }
                            v
                        }
                    };
                }
                let var_a = (cov_a.clone() * &g_a).dot(&g_a);
                let var_s = (cov_s.clone() * &g_s).dot(&g_s);
                let se = (var_a + var_s).max(0.0).sqrt();
                lower[j][i][s] = responses[j][i][s] - 2.0 * se;
                upper[j][i][s] = responses[j][i][s] + 2.0 * se;
            }
        }
    }
    Ok(DeltaBands { lower, upper })
}

/// Impulse responses of a fitted VAR over `horizon` steps (step 0 is the
/// impact period) with delta-method +/-2 standard-error bands.
///
/// `ordering` names the Cholesky ordering and must be a permutation of the
/// fitted variable names; it must be absent for generalized impulses.
pub fn impulse_response(
    fit: &VarFit,
    horizon: usize,
    method: IrfMethod,
    ordering: Option<&[&str]>,
) -> Result<IrfPaths> {
    let sigma = sigma_df(fit);
    let (ord, shock_names): (Option<Vec<usize>>, Vec<String>) = match method {
        IrfMethod::Cholesky => {
            let names: Vec<String> = ordering
                .ok_or_else(|| {
                    Error::InvalidArgument("cholesky identification requires an ordering".into())
                })?
                .iter()
                .map(|s| s.to_string())
                .collect();
            let idx = ordering_indices(&fit.names, &names)?;
            (Some(idx), names)
        }
        IrfMethod::Generalized => {
            if ordering.is_some() {
                return Err(Error::InvalidArgument(
                    "generalized impulses do not take an ordering".into(),
                ));
            }
            (None, fit.names.clone())
        }
    };
    let responses =
        irf_from_coefficients(&fit.a, &sigma, horizon, method, ord.as_deref())?;
    let bands = delta_bands(fit, &sigma, &responses, horizon, method, ord.as_deref())?;
    let roots = stability_roots(fit);
    let warning = if roots.stable {
        None
    } else {
        Some(format!(
            "largest companion root modulus {:.4} >= 1; responses may diverge",
            roots.moduli[0]
        ))
    };
    Ok(IrfPaths {
        method,
        horizon,
        variable_names: fit.names.clone(),
        shock_names,
        responses,
        lower: bands.lower,
        upper: bands.upper,
        warning,
    })
}

/// Impulse responses with parametric-bootstrap bands: data are re-simulated
/// from the fitted system with Gaussian innovations, the VAR is refitted,
/// and the band is +/-2 bootstrap standard deviations around the original
/// point estimate. Deterministic for a fixed seed.
pub fn impulse_response_mc(
    fit: &VarFit,
    horizon: usize,
    method: IrfMethod,
    ordering: Option<&[&str]>,
    seed: u64,
    replications: usize,
) -> Result<IrfPaths> {
    if replications < 2 {
        return Err(Error::InvalidArgument(
            "bootstrap needs at least two replications".into(),
        ));
    }
    let mut base = impulse_response(fit, horizon, method, ordering)?;
    let n = fit.n_vars();
    let ord = match method {
        IrfMethod::Cholesky => Some(ordering_indices(&fit.names, &base.shock_names)?),
        IrfMethod::Generalized => None,
    };

    let depth = fit.lag_order + fit.extra_exog_lags;
    let t_obs = fit.t_obs;
    let design = fit.design();
    // Effective lag matrices: estimated endogenous lags followed by the
    // exogenous augmentation blocks, so the simulation uses the full fitted
    // recursion.
    let mut a_eff: Vec<DMatrix<f64>> = fit.a.clone();
    for e in 0..fit.extra_exog_lags {
        let mut block = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                block[(i, k)] = fit.exog[(i, e * n + k)];
            }
        }
        a_eff.push(block);
    }
    let const_idx = fit.extra_exog_lags * n;
    let has_trend = fit.exog_names.iter().any(|s| s == "trend");
    let trend_col = design.ncols() - 1;
    let sigma = sigma_df(fit);
    let p_chol = chol_lower(&sigma)?;

    // Presample levels from the first design row: lag-l column of variable k
    // holds the value l periods before the first sample row.
    let mut presample = vec![vec![0.0; n]; depth];
    for l in 1..=depth {
        for k in 0..n {
            presample[depth - l][k] = design[(0, (l - 1) * n + k)];
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sum = vec![vec![vec![0.0; horizon]; n]; n];
    let mut sumsq = vec![vec![vec![0.0; horizon]; n]; n];
    let mut z = DVector::<f64>::zeros(n);
    for _ in 0..replications {
        // Simulated levels, rows 0..depth are the presample.
        let mut sim = vec![vec![0.0f64; depth + t_obs]; n];
        for r in 0..depth {
            for k in 0..n {
                sim[k][r] = presample[r][k];
            }
        }
        for r in 0..t_obs {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let u = &p_chol * &z;
            for i in 0..n {
                let mut v = fit.exog[(i, const_idx)];
                if has_trend {
                    v += fit.exog[(i, const_idx + 1)] * design[(r, trend_col)];
                }
                for (l, al) in a_eff.iter().enumerate() {
                    for k in 0..n {
                        v += al[(i, k)] * sim[k][depth + r - l - 1];
                    }
                }
                sim[i][depth + r] = v + u[i];
            }
        }
        let start = MonthStamp::new(2000, 1)?;
        let series: Vec<Series> = (0..n)
            .map(|k| Series::new(fit.names[k].clone(), start, sim[k].clone()))
            .collect::<Result<_>>()?;
        let frame = Frame::new(series)?;
        let refit = fit_var(&frame, fit.lag_order, fit.det, fit.extra_exog_lags)?;
        let sig_b = sigma_df(&refit);
        let resp = irf_from_coefficients(&refit.a, &sig_b, horizon, method, ord.as_deref())?;
        for j in 0..n {
            for i in 0..n {
                for s in 0..horizon {
                    sum[j][i][s] += resp[j][i][s];
                    sumsq[j][i][s] += resp[j][i][s] * resp[j][i][s];
                }
            }
        }
    }
    let reps = replications as f64;
    for j in 0..n {
        for i in 0..n {
            for s in 0..horizon {
                let mean = sum[j][i][s] / reps;
                let var = (sumsq[j][i][s] / reps - mean * mean).max(0.0) * reps / (reps - 1.0);
                let se = var.sqrt();
                base.lower[j][i][s] = base.responses[j][i][s] - 2.0 * se;
                base.upper[j][i][s] = base.responses[j][i][s] + 2.0 * se;
            }
        }
    }
    Ok(base)
}

/// Forecast-error variance decomposition under a Cholesky ordering.
/// `shares[i][h][j]` covers forecast horizons h+1 = 1..=horizon.
pub fn fevd(fit: &VarFit, horizon: usize, ordering: &[&str]) -> Result<FevdTable> {
    let names: Vec<String> = ordering.iter().map(|s| s.to_string()).collect();
    let ord = ordering_indices(&fit.names, &names)?;
    let sigma = sigma_df(fit);
    let responses =
        irf_from_coefficients(&fit.a, &sigma, horizon, IrfMethod::Cholesky, Some(&ord))?;
    let n = fit.n_vars();
    let mut shares = vec![vec![vec![0.0; n]; horizon]; n];
    for i in 0..n {
        let mut cum = vec![0.0f64; n];
        for h in 0..horizon {
            for (j, c) in cum.iter_mut().enumerate() {
                let r = responses[j][i][h];
                *c += r * r;
            }
            let total: f64 = cum.iter().sum();
            if total <= 0.0 {
                return Err(Error::DegenerateCovariance);
            }
            for j in 0..n {
                shares[i][h][j] = cum[j] / total;
            }
        }
    }
    Ok(FevdTable {
        horizon,
        variable_names: fit.names.clone(),
        shock_names: names,
        shares,
    })
}

/// Historical decomposition with generalized weights and residual closure on
/// the final shock (see the module notes).
pub fn historical_decomposition(fit: &VarFit) -> Result<HDTable> {
    let n = fit.n_vars();
    let t_obs = fit.t_obs;
    let depth = fit.lag_order + fit.extra_exog_lags;
    let design = fit.design();
    let sigma = sigma_df(fit);
    for j in 0..n {
        if sigma[(j, j)] <= 0.0 {
            return Err(Error::DegenerateCovariance);
        }
    }

    let observed: Vec<Vec<f64>> = (0..n)
        .map(|i| fit.observed(i).iter().copied().collect())
        .collect();

    // Effective recursion including the exogenous augmentation lags, as in
    // the bootstrap simulator.
    let mut a_eff: Vec<DMatrix<f64>> = fit.a.clone();
    for e in 0..fit.extra_exog_lags {
        let mut block = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                block[(i, k)] = fit.exog[(i, e * n + k)];
            }
        }
        a_eff.push(block);
    }
    let const_idx = fit.extra_exog_lags * n;
    let has_trend = fit.exog_names.iter().any(|s| s == "trend");
    let trend_col = design.ncols() - 1;

    // Baseline: deterministic dynamic forecast from the presample.
    let mut baseline = vec![vec![0.0f64; t_obs]; n];
    for r in 0..t_obs {
        for i in 0..n {
            let mut v = fit.exog[(i, const_idx)];
            if has_trend {
                v += fit.exog[(i, const_idx + 1)] * design[(r, trend_col)];
            }
            for (l, al) in a_eff.iter().enumerate() {
                let lag = l + 1;
                for k in 0..n {
                    let past = if r >= lag {
                        baseline[k][r - lag]
                    } else {
                        // Presample value: the lag column holds it directly.
                        design[(r, l * n + k)]
                    };
                    v += al[(i, k)] * past;
                }
            }
            baseline[i][r] = v;
        }
    }

    // Generalized weight matrices W_s = Phi_s Sigma D^{-1}; the shock-j
    // contribution to variable i is sum_s W_s[i,j] u_{j,t-s}.
    let phi = phi_matrices(&fit.a, t_obs);
    let mut weights = Vec::with_capacity(t_obs);
    for phi_s in &phi {
        let mut w = phi_s * &sigma;
        for j in 0..n {
            let d = sigma[(j, j)];
            for i in 0..n {
                w[(i, j)] /= d;
            }
        }
        weights.push(w);
    }

    let mut contributions = vec![vec![vec![0.0f64; t_obs]; n]; n];
    for i in 0..n {
        for j in 0..n.saturating_sub(1) {
            for r in 0..t_obs {
                let mut v = 0.0;
                for s in 0..=r {
                    v += weights[s][(i, j)] * fit.residuals[(r - s, j)];
                }
                contributions[i][j][r] = v;
            }
        }
        // Residual closure: the final shock absorbs whatever the generalized
        // weights leave unattributed, making the decomposition exact.
        for r in 0..t_obs {
            let mut v = observed[i][r] - baseline[i][r];
            for j in 0..n.saturating_sub(1) {
                v -= contributions[i][j][r];
            }
            contributions[i][n - 1][r] = v;
        }
    }

    Ok(HDTable {
        variable_names: fit.names.clone(),
        shock_names: fit.names.clone(),
        first_row: depth,
        observed,
        baseline,
        contributions,
    })
}
