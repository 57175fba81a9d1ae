//! Levels VAR estimation with per-equation OLS, lag-order selection,
//! companion stability roots, block-exogeneity (Granger) Wald tests, the
//! lag-augmented causality procedure, and a multivariate portmanteau test.
//!
//! Conventions, pinned for table comparability:
//! - The residual covariance stored on a fit uses the ML divisor T; the
//!   per-equation `OlsFit` values keep their own df-adjusted sigma2.
//! - loglik = -(T/2) * (n*(1 + ln 2pi) + ln det Sigma_ML).
//! - AIC = (-2 loglik + 2K)/T, SC = (-2 loglik + K ln T)/T,
//!   HQ = (-2 loglik + 2K ln ln T)/T with K = total parameter count across
//!   all equations; FPE = ((T + m)/(T - m))^n det Sigma_ML with m the
//!   parameter count per equation.
//! - The sequential lag-ratio statistic is the small-sample corrected
//!   LR_p = (T - m_p) * (ln det Sigma_{p-1} - ln det Sigma_p), tested against
//!   chi2(n^2) at 5% descending from max_lag; the first rejection wins and
//!   no rejection selects lag 0.
//! - Lag-augmented causality fits a VAR(k) with the extra lags k+1..k+d
//!   entered as unrestricted exogenous regressors; Wald restrictions cover
//!   only lags 1..k of the excluded variable, so the df is always k.
//! - Wald tests use each equation's ordinary df-adjusted coefficient
//!   covariance.
//! - A design column for lag l of variable v is named "v(-l)"; deterministic
//!   columns are "const" and "trend". The trend regressor is the 1-based
//!   frame row index; any affine reparametrization gives the same fit.

use nalgebra::{Complex, DMatrix};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dataframe::Frame;
use crate::linreg::{
    ols, wald_zero_restrictions, DesignMatrix, OlsFit, TestForm, TestResult,
};
use crate::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarDeterministic {
    Constant,
    ConstantTrend,
}

impl VarDeterministic {
    fn k(self) -> usize {
        match self {
            VarDeterministic::Constant => 1,
            VarDeterministic::ConstantTrend => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VarDeterministic::Constant => "const",
            VarDeterministic::ConstantTrend => "const_trend",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarFit {
    pub names: Vec<String>,
    pub lag_order: usize,
    pub det: VarDeterministic,
    pub extra_exog_lags: usize,
    /// a[l] holds the lag-(l+1) coefficients; a[l][(i, j)] multiplies
    /// names[j] lagged l+1 periods in the names[i] equation.
    pub a: Vec<DMatrix<f64>>,
    /// One row per equation, columns ordered as exog_names (augmentation
    /// lags first, then const, then trend).
    pub exog: DMatrix<f64>,
    pub exog_names: Vec<String>,
    /// T x n residual matrix, rows in time order over the common sample.
    pub residuals: DMatrix<f64>,
    /// ML residual covariance (divisor T).
    pub sigma: DMatrix<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub sc: f64,
    pub hq: f64,
    pub fpe: f64,
    pub t_obs: usize,
    fits: Vec<OlsFit>,
}

impl VarFit {
    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    /// Regressor count per equation, deterministics included.
    pub fn params_per_equation(&self) -> usize {
        self.names.len() * (self.lag_order + self.extra_exog_lags) + self.det.k()
    }

    /// The per-equation least-squares fit (for residual diagnostics).
    pub fn equation(&self, name: &str) -> Result<&OlsFit> {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn(name.into()))?;
        Ok(&self.fits[i])
    }

    /// Shared regressor matrix (identical across equations).
    pub(crate) fn design(&self) -> &DMatrix<f64> {
        &self.fits[0].x
    }

    /// (X'X)^-1 of the shared design.
    pub(crate) fn xtx_inv(&self) -> &DMatrix<f64> {
        &self.fits[0].xtx_inv
    }

    /// Dependent values of equation i over the common sample.
    pub(crate) fn observed(&self, i: usize) -> &nalgebra::DVector<f64> {
        &self.fits[i].y
    }
}

fn lag_name(var: &str, lag: usize) -> String {
    format!("{var}(-{lag})")
}

/// Builds the shared design over rows t_start..len and runs OLS equation by
/// equation. p = 0 is allowed internally (deterministic-only system) so the
/// selection table can include its baseline row.
fn fit_var_window(
    frame: &Frame,
    p: usize,
    det: VarDeterministic,
    extra_exog_lags: usize,
    t_start: usize,
) -> Result<VarFit> {
    let n_v = frame.columns().len();
    if n_v == 0 {
        return Err(Error::InvalidArgument("empty frame".into()));
    }
    let total = frame.len();
    let depth = p + extra_exog_lags;
    debug_assert!(t_start >= depth);
    let k = n_v * depth + det.k();
    if total <= t_start || total - t_start <= k {
        return Err(Error::InsufficientData(format!(
            "{} usable rows for {} regressors per equation",
            total.saturating_sub(t_start),
            k
        )));
    }
    let t_obs = total - t_start;

    let mut cols: Vec<(String, Vec<f64>)> = Vec::with_capacity(k);
    for lag in 1..=depth {
        for series in frame.columns() {
            let vals = (t_start..total)
                .map(|t| series.values[t - lag])
                .collect();
            cols.push((lag_name(&series.name, lag), vals));
        }
    }
    cols.push(("const".into(), vec![1.0; t_obs]));
    if det == VarDeterministic::ConstantTrend {
        let trend = (t_start..total).map(|t| (t + 1) as f64).collect();
        cols.push(("trend".into(), trend));
    }
    let design = DesignMatrix::from_columns(cols)?;

    let mut fits = Vec::with_capacity(n_v);
    let mut residuals = DMatrix::zeros(t_obs, n_v);
    for (i, series) in frame.columns().iter().enumerate() {
        let y = &series.values[t_start..total];
        let fit = ols(y, &design)?;
        for (t, r) in fit.residuals.iter().enumerate() {
            residuals[(t, i)] = *r;
        }
        fits.push(fit);
    }

    let sigma = residuals.transpose() * &residuals / t_obs as f64;
    let logdet = sigma_logdet(&sigma)?;
    let tf = t_obs as f64;
    let nf = n_v as f64;
    let loglik = -0.5 * tf * (nf * (1.0 + LN_2PI) + logdet);
    let big_k = (n_v * k) as f64;
    let aic = (-2.0 * loglik + 2.0 * big_k) / tf;
    let sc = (-2.0 * loglik + big_k * tf.ln()) / tf;
    let hq = (-2.0 * loglik + 2.0 * big_k * tf.ln().ln()) / tf;
    let kf = k as f64;
    let fpe = ((tf + kf) / (tf - kf)).powi(n_v as i32) * logdet.exp();

    let mut a = Vec::with_capacity(p);
    for lag in 0..p {
        let m = DMatrix::from_fn(n_v, n_v, |i, j| fits[i].coefficients[lag * n_v + j]);
        a.push(m);
    }
    let n_exog = k - n_v * p;
    let exog = DMatrix::from_fn(n_v, n_exog, |i, j| fits[i].coefficients[n_v * p + j]);
    let exog_names = design.names()[n_v * p..].to_vec();

    Ok(VarFit {
        names: frame.columns().iter().map(|s| s.name.clone()).collect(),
        lag_order: p,
        det,
        extra_exog_lags,
        a,
        exog,
        exog_names,
        residuals,
        sigma,
        loglik,
        aic,
        sc,
        hq,
        fpe,
        t_obs,
        fits,
    })
}

/// ln det of a residual covariance. A zero or negative pivot means a
/// perfectly collinear residual system, which per-equation full-rank fits
/// cannot produce except in degenerate noise-free constructions; those get
/// -inf (so loglik = +inf) rather than an error.
fn sigma_logdet(sigma: &DMatrix<f64>) -> Result<f64> {
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateCovariance);
    }
    match sigma.clone().cholesky() {
        Some(c) => Ok(2.0 * (0..sigma.nrows()).map(|i| c.l()[(i, i)].ln()).sum::<f64>()),
        None => Ok(f64::NEG_INFINITY),
    }
}

pub fn fit_var(
    frame: &Frame,
    p: usize,
    det: VarDeterministic,
    extra_exog_lags: usize,
) -> Result<VarFit> {
    if p == 0 {
        return Err(Error::InvalidArgument("VAR order must be at least 1".into()));
    }
    fit_var_window(frame, p, det, extra_exog_lags, p + extra_exog_lags)
}

#[derive(Debug, Clone)]
pub struct SelectionRow {
    pub lag: usize,
    pub loglik: f64,
    /// Sequential corrected LR statistic against lag-1; None on the lag-0 row.
    pub lr: Option<f64>,
    pub fpe: f64,
    pub aic: f64,
    pub sc: f64,
    pub hq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Lr,
    Fpe,
    Aic,
    Sc,
    Hq,
}

impl Criterion {
    pub const ALL: [Criterion; 5] =
        [Criterion::Lr, Criterion::Fpe, Criterion::Aic, Criterion::Sc, Criterion::Hq];

    pub fn label(self) -> &'static str {
        match self {
            Criterion::Lr => "LR",
            Criterion::Fpe => "FPE",
            Criterion::Aic => "AIC",
            Criterion::Sc => "SC",
            Criterion::Hq => "HQ",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectionTable {
    pub rows: Vec<SelectionRow>,
    pub t_obs: usize,
    /// 5% chi2(n^2) critical value used by the sequential LR tests.
    pub lr_critical: f64,
    pub selected_lr: usize,
    pub selected_fpe: usize,
    pub selected_aic: usize,
    pub selected_sc: usize,
    pub selected_hq: usize,
}

impl SelectionTable {
    pub fn selected(&self, c: Criterion) -> usize {
        match c {
            Criterion::Lr => self.selected_lr,
            Criterion::Fpe => self.selected_fpe,
            Criterion::Aic => self.selected_aic,
            Criterion::Sc => self.selected_sc,
            Criterion::Hq => self.selected_hq,
        }
    }

    pub fn starred(&self, c: Criterion, lag: usize) -> bool {
        self.selected(c) == lag
    }
}

/// Fits VAR(0)..VAR(max_lag) on the max_lag-truncated common sample and
/// tabulates loglik, the sequential corrected LR, FPE, AIC, SC, and HQ.
pub fn select_lag_order(
    frame: &Frame,
    max_lag: usize,
    det: VarDeterministic,
) -> Result<SelectionTable> {
    if max_lag == 0 {
        return Err(Error::InvalidArgument("max_lag must be at least 1".into()));
    }
    let n_v = frame.columns().len();
    let mut fits = Vec::with_capacity(max_lag + 1);
    for p in 0..=max_lag {
        fits.push(fit_var_window(frame, p, det, 0, max_lag)?);
    }
    let t_obs = fits[0].t_obs;
    let tf = t_obs as f64;

    let df = (n_v * n_v) as f64;
    let chi = ChiSquared::new(df).map_err(|_| Error::DomainError {
        index: 0,
        reason: "chi-squared df".into(),
    })?;
    let lr_critical = chi.inverse_cdf(0.95);

    let mut rows = Vec::with_capacity(max_lag + 1);
    for p in 0..=max_lag {
        let f = &fits[p];
        let lr = if p == 0 {
            None
        } else {
            // ln det Sigma recovered from loglik keeps one formula for both.
            let m_p = f.params_per_equation() as f64;
            let logdet = |g: &VarFit| {
                -2.0 * g.loglik / tf - (n_v as f64) * (1.0 + LN_2PI)
            };
            Some((tf - m_p) * (logdet(&fits[p - 1]) - logdet(f)))
        };
        rows.push(SelectionRow {
            lag: p,
            loglik: f.loglik,
            lr,
            fpe: f.fpe,
            aic: f.aic,
            sc: f.sc,
            hq: f.hq,
        });
    }

    let argmin = |get: fn(&SelectionRow) -> f64| {
        let mut best = 0usize;
        for (i, row) in rows.iter().enumerate() {
            if get(row) < get(&rows[best]) {
                best = i;
            }
        }
        best
    };
    let selected_fpe = argmin(|r| r.fpe);
    let selected_aic = argmin(|r| r.aic);
    let selected_sc = argmin(|r| r.sc);
    let selected_hq = argmin(|r| r.hq);
    let mut selected_lr = 0usize;
    for p in (1..=max_lag).rev() {
        if rows[p].lr.is_some_and(|v| v > lr_critical) {
            selected_lr = p;
            break;
        }
    }

    Ok(SelectionTable {
        rows,
        t_obs,
        lr_critical,
        selected_lr,
        selected_fpe,
        selected_aic,
        selected_sc,
        selected_hq,
    })
}

#[derive(Debug, Clone)]
pub struct StabilityRoots {
    /// Companion eigenvalues as (re, im), sorted by descending modulus.
    pub roots: Vec<(f64, f64)>,
    pub moduli: Vec<f64>,
    pub stable: bool,
}

/// Eigenvalues of the companion matrix of the given lag coefficient
/// matrices. Exogenous regressors never enter the companion form.
pub fn companion_roots(a: &[DMatrix<f64>]) -> StabilityRoots {
    let p = a.len();
    if p == 0 {
        return StabilityRoots { roots: vec![], moduli: vec![], stable: true };
    }
    let n = a[0].nrows();
    let np = n * p;
    let mut companion = DMatrix::zeros(np, np);
    for (l, al) in a.iter().enumerate() {
        companion.view_mut((0, l * n), (n, n)).copy_from(al);
    }
    for i in 0..n * (p - 1) {
        companion[(n + i, i)] = 1.0;
    }
    let mut eig: Vec<Complex<f64>> = companion.complex_eigenvalues().iter().cloned().collect();
    eig.sort_by(|x, y| {
        y.norm()
            .total_cmp(&x.norm())
            .then(y.re.total_cmp(&x.re))
            .then(y.im.total_cmp(&x.im))
    });
    let roots: Vec<(f64, f64)> = eig.iter().map(|c| (c.re, c.im)).collect();
    let moduli: Vec<f64> = eig.iter().map(|c| c.norm()).collect();
    let stable = moduli.iter().all(|m| *m < 1.0);
    StabilityRoots { roots, moduli, stable }
}

pub fn stability_roots(fit: &VarFit) -> StabilityRoots {
    companion_roots(&fit.a)
}

#[derive(Debug, Clone)]
pub struct ExclusionTest {
    pub equation: String,
    /// Variable whose lags 1..p are restricted to zero, or "All" for the
    /// joint restriction on every other variable.
    pub excluded: String,
    pub test: TestResult,
}

#[derive(Debug, Clone)]
pub struct BlockExogeneity {
    pub rows: Vec<ExclusionTest>,
}

/// Wald chi2 tests of zero restrictions on the endogenous lag coefficients,
/// one block per excluded variable and equation plus a joint "All" row.
/// Augmentation lags (beyond lag_order) are never restricted.
pub fn block_exogeneity(fit: &VarFit) -> Result<BlockExogeneity> {
    let p = fit.lag_order;
    let mut rows = Vec::new();
    for (i, eq) in fit.names.iter().enumerate() {
        let others: Vec<&String> = fit.names.iter().filter(|n| *n != eq).collect();
        let mut all_names: Vec<String> = Vec::new();
        for other in &others {
            let names: Vec<String> = (1..=p).map(|l| lag_name(other, l)).collect();
            let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            let test = wald_zero_restrictions(&fit.fits[i], &refs, TestForm::Chi2)?;
            rows.push(ExclusionTest {
                equation: eq.clone(),
                excluded: (*other).clone(),
                test,
            });
            all_names.extend(names);
        }
        if others.len() > 1 {
            let refs: Vec<&str> = all_names.iter().map(|s| s.as_str()).collect();
            let test = wald_zero_restrictions(&fit.fits[i], &refs, TestForm::Chi2)?;
            rows.push(ExclusionTest {
                equation: eq.clone(),
                excluded: "All".into(),
                test,
            });
        } else if others.len() == 1 {
            // With one other variable the joint row is the same restriction
            // set; repeat it verbatim so the table shape is uniform.
            let last = rows.last().expect("row just pushed").clone();
            rows.push(ExclusionTest {
                equation: eq.clone(),
                excluded: "All".into(),
                test: last.test,
            });
        }
    }
    Ok(BlockExogeneity { rows })
}

#[derive(Debug, Clone)]
pub struct CausalityDirection {
    pub cause: String,
    pub effect: String,
    pub test: TestResult,
}

#[derive(Debug, Clone)]
pub struct TYResult {
    pub k: usize,
    pub d_max: usize,
    pub fit: VarFit,
    pub directions: Vec<CausalityDirection>,
}

/// Lag-augmented Granger causality: fits a constant-only VAR(k) with lags
/// k+1..k+d_max appended as unrestricted exogenous regressors, then Wald
/// tests exclusion of each variable's first k lags. The df is k by
/// construction regardless of d_max.
pub fn toda_yamamoto(frame: &Frame, k: usize, d_max: usize) -> Result<TYResult> {
    if d_max > 2 {
        return Err(Error::InvalidArgument(format!(
            "augmentation order {d_max} out of range 0..=2"
        )));
    }
    let fit = fit_var(frame, k, VarDeterministic::Constant, d_max)?;
    let block = block_exogeneity(&fit)?;
    let directions = block
        .rows
        .into_iter()
        .filter(|r| r.excluded != "All")
        .map(|r| CausalityDirection { cause: r.excluded, effect: r.equation, test: r.test })
        .collect();
    Ok(TYResult { k, d_max, fit, directions })
}

/// Multivariate adjusted portmanteau Q on VAR residual autocovariances:
/// Q = T^2 sum_{j=1..h} (T-j)^{-1} tr(C_j' C_0^{-1} C_j C_0^{-1}),
/// referred to chi2 with df = n^2 (h - p).
pub fn portmanteau(fit: &VarFit, lags: usize) -> Result<TestResult> {
    let p = fit.lag_order;
    if lags <= p {
        return Err(Error::InsufficientData(format!(
            "portmanteau needs more lags than the VAR order {p}, got {lags}"
        )));
    }
    let t_obs = fit.t_obs;
    if lags >= t_obs {
        return Err(Error::InsufficientData(format!(
            "portmanteau lag {lags} with only {t_obs} residual rows"
        )));
    }
    let n_v = fit.n_vars();
    let u = &fit.residuals;
    let tf = t_obs as f64;

    let autocov = |j: usize| -> DMatrix<f64> {
        let mut c = DMatrix::zeros(n_v, n_v);
        for t in j..t_obs {
            for a in 0..n_v {
                for b in 0..n_v {
                    c[(a, b)] += u[(t, a)] * u[(t - j, b)];
                }
            }
        }
        c / tf
    };

    let c0 = autocov(0);
    let chol = c0.clone().cholesky().ok_or(Error::DegenerateCovariance)?;
    let c0_inv = chol.inverse();

    let mut q = 0.0;
    for j in 1..=lags {
        let cj = autocov(j);
        let m = cj.transpose() * &c0_inv * &cj * &c0_inv;
        q += m.trace() / (tf - j as f64);
    }
    q *= tf * tf;

    Ok(TestResult::from_chi2(q, n_v * n_v * (lags - p)))
}
