//! Cointegration tests: residual-based (Engle-Granger, Phillips-Ouliaris),
//! system (Johansen trace / maximum eigenvalue), and single-break
//! (Gregory-Hansen) variants.
//!
//! Conventions, chosen once and used by both the estimators and the
//! critical-value simulator so the two never drift apart:
//! - Residual tests regress the dependent variable on the regressor plus the
//!   requested deterministic set (none, constant, or constant + trend); the
//!   first-stage deterministic set selects the `nc` / `c` / `ct` case of the
//!   `coint_df` (tau-type) and `coint_z` (normalized-bias-type) tables.
//! - Engle-Granger: tau is the t-statistic on the lagged residual in a
//!   no-deterministics augmented Dickey-Fuller regression with SIC-selected
//!   lag order; z is the serial-correlation-corrected normalized bias
//!   m*gamma / (1 - sum(delta_j)) with m the regression sample size.
//! - Phillips-Ouliaris: Z_t and Z_alpha from the lag-0 residual regression
//!   with a Bartlett-kernel long-run variance, bandwidth floor(4 (m/100)^(2/9))
//!   unless fixed. Z_t reads the same `coint_df` surface as tau and Z_alpha
//!   the same `coint_z` surface as z, mirroring the shared-surface practice
//!   of the standard response-surface p-values.
//! - Johansen: reduced-rank regression with the five textbook deterministic
//!   cases; T = usable observations after lagging; statistics built from the
//!   canonical-correlation eigenvalues. `max_eigen[r]` is materialized as
//!   `trace[r] - trace[r+1]` so the telescoping identity holds bitwise; the
//!   difference from -T ln(1 - lambda) is at most one rounding.
//! - Gregory-Hansen: for each candidate break date the model regression is
//!   refit and the residuals are tested (SIC-lag ADF, and Z_t / Z_alpha as
//!   above); each reported statistic is the grid infimum with the earliest
//!   argmin on ties. The shift dummy starts at the break index itself and the
//!   reported date stamps the first shifted observation.

use nalgebra::DMatrix;

use crate::criticalvalues::builtin;
use crate::dataframe::{Frame, MonthStamp, Series};
use crate::linreg::{long_run_variance, quick_ols, QuickFit};
use crate::unitroot::{
    adf_design, ensure_variation, fit_design, select_adf_lags, Deterministic, GridBest,
    LagCriterion, LagSelection,
};
use crate::{Error, Result};

/// Residual-based test flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualKind {
    EngleGranger,
    PhillipsOuliaris,
}

/// Residual-based cointegration test result. For Engle-Granger the pair is
/// (tau, z) and `lag_order` is the SIC-selected ADF lag; for
/// Phillips-Ouliaris the pair is (Z_t, Z_alpha) and `lag_order` is the
/// Bartlett bandwidth actually used.
#[derive(Debug, Clone)]
pub struct EGResult {
    pub dependent: String,
    pub tau_statistic: f64,
    pub z_statistic: f64,
    /// (tau p-value, z p-value).
    pub p_values: (f64, f64),
    pub lag_order: usize,
}

fn check_pair(y: &Series, x: &Series) -> Result<()> {
    if y.start != x.start || y.len() != x.len() {
        return Err(Error::InvalidArgument(format!(
            "series {} and {} are not aligned",
            y.name, x.name
        )));
    }
    if y.len() <= 20 {
        return Err(Error::InsufficientData(
            "residual cointegration test needs more than 20 observations".into(),
        ));
    }
    Ok(())
}

/// First-stage static regression residuals of y on the deterministic set
/// plus x.
fn static_residuals(y: &[f64], x: &[f64], det: Deterministic) -> Result<Vec<f64>> {
    let n = y.len();
    ensure_variation(y, "cointegrating regression dependent")?;
    ensure_variation(x, "cointegrating regression regressor")?;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(det.k() + 1);
    if det.k() >= 1 {
        cols.push(vec![1.0; n]);
    }
    if det.k() == 2 {
        cols.push((0..n).map(|t| (t + 1) as f64 / n as f64 - 0.5).collect());
    }
    cols.push(x.to_vec());
    let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
    let fit = quick_ols(&refs, y)
        .ok_or_else(|| Error::SingularSystem("cointegrating regression".into()))?;
    Ok((0..n)
        .map(|t| {
            let mut f = 0.0;
            for (j, c) in cols.iter().enumerate() {
                f += fit.beta[j] * c[t];
            }
            y[t] - f
        })
        .collect())
}

/// Engle-Granger statistics on a residual vector already in hand: tau from
/// the no-deterministics ADF regression and the corrected normalized bias.
fn eg_on_residuals(u: &[f64], selection: &LagSelection) -> Result<(f64, f64, usize)> {
    let p = select_adf_lags(u, Deterministic::None, selection)?;
    let d = adf_design(u, Deterministic::None, p, p + 1)?;
    let fit = fit_design(&d, "residual dickey-fuller regression")?;
    let tau = fit.t_stat(d.gamma);
    let delta_sum: f64 = fit.beta[d.gamma + 1..].iter().sum();
    let denom = 1.0 - delta_sum;
    if denom.abs() < 1e-8 {
        return Err(Error::UnitRootDenominator);
    }
    let z = fit.n as f64 * fit.beta[d.gamma] / denom;
    Ok((tau, z, p))
}

/// Engle-Granger (tau, z, lag order) for dependent y on regressor x with the
/// given first-stage deterministic set. Exposed so the critical-value
/// simulator exercises the identical code path.
pub fn eg_statistics(
    y: &[f64],
    x: &[f64],
    det: Deterministic,
    selection: &LagSelection,
) -> Result<(f64, f64, usize)> {
    let u = static_residuals(y, x, det)?;
    eg_on_residuals(&u, selection)
}

/// Z_t and Z_alpha of a residual vector: lag-0 Dickey-Fuller regression with
/// a Bartlett long-run variance correction, T (rho - 1) normalization.
fn phillips_on_residuals(u: &[f64], bandwidth: Option<usize>) -> Result<(f64, f64, usize)> {
    let d = adf_design(u, Deterministic::None, 0, 1)?;
    let fit = fit_design(&d, "residual phillips regression")?;
    let m = fit.n as f64;
    let resid: Vec<f64> = (0..fit.n)
        .map(|t| d.target[t] - fit.beta[0] * d.cols[0][t])
        .collect();
    let gamma0 = fit.ssr / m;
    let est = long_run_variance(&resid, bandwidth)?;
    let f0 = est.lrv;
    if !(f0 > 0.0) {
        return Err(Error::ZeroVariance("long-run variance".into()));
    }
    let t0 = fit.t_stat(d.gamma);
    let se = fit.std_error(d.gamma);
    let s = fit.sigma2().sqrt();
    let zt = t0 * (gamma0 / f0).sqrt() - m * se * (f0 - gamma0) / (2.0 * f0.sqrt() * s);
    let za = m * fit.beta[d.gamma] - (f0 - gamma0) / 2.0 * (m * se / s).powi(2);
    Ok((zt, za, est.bandwidth))
}

/// Phillips-Ouliaris (Z_t, Z_alpha, bandwidth) for dependent y on regressor
/// x with the given first-stage deterministic set.
pub fn po_statistics(
    y: &[f64],
    x: &[f64],
    det: Deterministic,
    bandwidth: Option<usize>,
) -> Result<(f64, f64, usize)> {
    let u = static_residuals(y, x, det)?;
    phillips_on_residuals(&u, bandwidth)
}

/// Residual-based cointegration test with an explicit first-stage
/// deterministic set.
pub fn residual_cointegration_det(
    y: &Series,
    x: &Series,
    kind: ResidualKind,
    det: Deterministic,
) -> Result<EGResult> {
    check_pair(y, x)?;
    let n = y.len();
    let (tau, z, order) = match kind {
        ResidualKind::EngleGranger => eg_statistics(
            &y.values,
            &x.values,
            det,
            &LagSelection::InfoCriterion {
                criterion: LagCriterion::Sic,
                max_lag: None,
            },
        )?,
        ResidualKind::PhillipsOuliaris => po_statistics(&y.values, &x.values, det, None)?,
    };
    let table = builtin();
    let case = det.df_case();
    let vars = Some(2.0);
    let p_tau = table.p_value("coint_df", case, vars, n, tau)?;
    let p_z = table.p_value("coint_z", case, vars, n, z)?;
    Ok(EGResult {
        dependent: y.name.clone(),
        tau_statistic: tau,
        z_statistic: z,
        p_values: (p_tau, p_z),
        lag_order: order,
    })
}

/// Residual-based cointegration test of y on a constant and x. The
/// first-stage deterministic set is configurable through
/// `residual_cointegration_det`.
pub fn residual_cointegration(y: &Series, x: &Series, kind: ResidualKind) -> Result<EGResult> {
    residual_cointegration_det(y, x, kind, Deterministic::Constant)
}

/// Johansen deterministic cases, ordered from most to least restrictive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JohansenDet {
    /// No deterministic terms anywhere.
    None,
    /// Constant restricted to the cointegrating space.
    RestrictedConstant,
    /// Unrestricted constant in the VAR.
    UnrestrictedConstant,
    /// Unrestricted constant, trend restricted to the cointegrating space.
    RestrictedTrend,
    /// Unrestricted constant and trend in the VAR.
    UnrestrictedTrend,
}

impl JohansenDet {
    pub fn case_label(&self) -> &'static str {
        match self {
            JohansenDet::None => "none",
            JohansenDet::RestrictedConstant => "rconst",
            JohansenDet::UnrestrictedConstant => "const",
            JohansenDet::RestrictedTrend => "rtrend",
            JohansenDet::UnrestrictedTrend => "trend",
        }
    }

    pub const ALL: [JohansenDet; 5] = [
        JohansenDet::None,
        JohansenDet::RestrictedConstant,
        JohansenDet::UnrestrictedConstant,
        JohansenDet::RestrictedTrend,
        JohansenDet::UnrestrictedTrend,
    ];

    /// Deterministic columns restricted into the lagged-level block.
    fn restricted_cols(&self, t_obs: usize, offset: usize) -> Vec<Vec<f64>> {
        match self {
            JohansenDet::RestrictedConstant => vec![vec![1.0; t_obs]],
            JohansenDet::RestrictedTrend => {
                vec![(0..t_obs).map(|i| (offset + i) as f64).collect()]
            }
            _ => Vec::new(),
        }
    }

    /// Deterministic columns entering the VAR unrestricted.
    fn unrestricted_cols(&self, t_obs: usize, offset: usize) -> Vec<Vec<f64>> {
        match self {
            JohansenDet::None | JohansenDet::RestrictedConstant => Vec::new(),
            JohansenDet::UnrestrictedConstant | JohansenDet::RestrictedTrend => {
                vec![vec![1.0; t_obs]]
            }
            JohansenDet::UnrestrictedTrend => vec![
                vec![1.0; t_obs],
                (0..t_obs).map(|i| (offset + i) as f64).collect(),
            ],
        }
    }
}

/// Johansen trace and maximum-eigenvalue test result. Entry r of each vector
/// tests "rank <= r" (so r = 0 tests no cointegration).
#[derive(Debug, Clone)]
pub struct JohansenResult {
    pub det_case: JohansenDet,
    /// Levels-VAR lag order.
    pub lag_order: usize,
    /// Usable observations after lagging.
    pub t_obs: usize,
    /// Canonical-correlation eigenvalues, descending, in [0, 1).
    pub eigenvalues: Vec<f64>,
    pub trace: Vec<f64>,
    pub max_eigen: Vec<f64>,
    pub trace_cv_5pct: Vec<f64>,
    pub max_eigen_cv_5pct: Vec<f64>,
    pub trace_p_values: Vec<f64>,
    pub max_eigen_p_values: Vec<f64>,
}

struct JohansenCore {
    eigenvalues: Vec<f64>,
    t_obs: usize,
    logdet_s00: f64,
    /// Columns in the lagged-level block (variables + restricted terms).
    p1: usize,
    /// Columns partialled out (lagged differences + unrestricted terms).
    q2: usize,
}

/// Residuals of each column of `block` on the columns of `z2` (in place).
/// Empty `z2` leaves the block untouched.
fn partial_out(block: &mut DMatrix<f64>, z2: &DMatrix<f64>) -> Result<()> {
    if z2.ncols() == 0 {
        return Ok(());
    }
    let gram = z2.transpose() * z2;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("partialling regressors".into()))?;
    let coef = chol.solve(&(z2.transpose() * &*block));
    *block -= z2 * coef;
    Ok(())
}

fn johansen_core(frame: &Frame, var_lags: usize, det: JohansenDet) -> Result<JohansenCore> {
    if var_lags < 1 {
        return Err(Error::InvalidArgument(
            "levels VAR needs at least one lag".into(),
        ));
    }
    let n_vars = frame.columns().len();
    if n_vars < 2 {
        return Err(Error::InvalidArgument(
            "johansen test needs at least two series".into(),
        ));
    }
    let n = frame.len();
    let p = var_lags;
    if n < p + n_vars * p + 5 {
        return Err(Error::InsufficientData(
            "too few observations for the lag order".into(),
        ));
    }
    let t_obs = n - p;
    let cols = frame.columns();

    // Z0: first differences; Z1: lagged levels plus restricted terms;
    // Z2: lagged differences plus unrestricted terms.
    let mut z0 = DMatrix::zeros(t_obs, n_vars);
    for (j, s) in cols.iter().enumerate() {
        for i in 0..t_obs {
            let t = p + i;
            z0[(i, j)] = s.values[t] - s.values[t - 1];
        }
    }
    let restricted = det.restricted_cols(t_obs, p);
    let p1 = n_vars + restricted.len();
    let mut z1 = DMatrix::zeros(t_obs, p1);
    for (j, s) in cols.iter().enumerate() {
        for i in 0..t_obs {
            z1[(i, j)] = s.values[p + i - 1];
        }
    }
    for (j, c) in restricted.iter().enumerate() {
        for i in 0..t_obs {
            z1[(i, n_vars + j)] = c[i];
        }
    }
    let unrestricted = det.unrestricted_cols(t_obs, p);
    let q2 = n_vars * (p - 1) + unrestricted.len();
    let mut z2 = DMatrix::zeros(t_obs, q2);
    for lag in 1..p {
        for (j, s) in cols.iter().enumerate() {
            for i in 0..t_obs {
                let t = p + i;
                z2[(i, (lag - 1) * n_vars + j)] = s.values[t - lag] - s.values[t - lag - 1];
            }
        }
    }
    for (j, c) in unrestricted.iter().enumerate() {
        for i in 0..t_obs {
            z2[(i, n_vars * (p - 1) + j)] = c[i];
        }
    }
    partial_out(&mut z0, &z2)?;
    partial_out(&mut z1, &z2)?;

    let tf = t_obs as f64;
    let s00 = z0.transpose() * &z0 / tf;
    let s11 = z1.transpose() * &z1 / tf;
    let s01 = z0.transpose() * &z1 / tf;
    let chol00 = s00
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("short-run moment matrix".into()))?;
    let chol11 = s11
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("lagged-level moment matrix".into()))?;
    let logdet_s00 = 2.0 * (0..n_vars).map(|i| chol00.l()[(i, i)].ln()).sum::<f64>();

    // Whiten by S11: eigenvalues of Linv S10 S00^-1 S01 Linv'.
    let s00inv_s01 = chol00.solve(&s01);
    let m0 = s01.transpose() * s00inv_s01;
    let w = chol11.l().solve_lower_triangular(&m0).ok_or_else(|| {
        Error::SingularSystem("lagged-level moment matrix".into())
    })?;
    let w2 = chol11
        .l()
        .solve_lower_triangular(&w.transpose())
        .ok_or_else(|| Error::SingularSystem("lagged-level moment matrix".into()))?;
    let sym = (&w2 + w2.transpose()) * 0.5;
    let mut eig: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig.truncate(n_vars);
    let eigenvalues: Vec<f64> = eig.iter().map(|&l| l.clamp(0.0, 1.0 - 1e-15)).collect();
    Ok(JohansenCore {
        eigenvalues,
        t_obs,
        logdet_s00,
        p1,
        q2,
    })
}

/// Trace partial sums (index r sums the terms from eigenvalue r on) and the
/// max-eigen sequence materialized as first differences of the trace.
fn trace_and_max(eigenvalues: &[f64], t_obs: usize) -> (Vec<f64>, Vec<f64>) {
    let n = eigenvalues.len();
    let tf = t_obs as f64;
    let mut trace = vec![0.0; n + 1];
    for r in (0..n).rev() {
        trace[r] = -tf * (1.0 - eigenvalues[r]).ln() + trace[r + 1];
    }
    let max_eigen: Vec<f64> = (0..n).map(|r| trace[r] - trace[r + 1]).collect();
    trace.truncate(n);
    (trace, max_eigen)
}

/// Johansen cointegration rank test.
pub fn johansen(frame: &Frame, var_lags: usize, det: JohansenDet) -> Result<JohansenResult> {
    let core = johansen_core(frame, var_lags, det)?;
    let n_vars = core.eigenvalues.len();
    if n_vars > 3 {
        return Err(Error::MissingCriticalValues(format!(
            "johansen surfaces are tabulated to dimension 3, frame has {n_vars}"
        )));
    }
    let (trace, max_eigen) = trace_and_max(&core.eigenvalues, core.t_obs);
    let table = builtin();
    let case = det.case_label();
    let n = frame.len();
    let mut trace_cv = Vec::with_capacity(n_vars);
    let mut max_cv = Vec::with_capacity(n_vars);
    let mut trace_p = Vec::with_capacity(n_vars);
    let mut max_p = Vec::with_capacity(n_vars);
    for r in 0..n_vars {
        let m = Some((n_vars - r) as f64);
        trace_cv.push(table.critical_value("johansen_trace", case, m, n, 0.05)?);
        max_cv.push(table.critical_value("johansen_max", case, m, n, 0.05)?);
        trace_p.push(table.p_value("johansen_trace", case, m, n, trace[r])?);
        max_p.push(table.p_value("johansen_max", case, m, n, max_eigen[r])?);
    }
    Ok(JohansenResult {
        det_case: det,
        lag_order: var_lags,
        t_obs: core.t_obs,
        eigenvalues: core.eigenvalues,
        trace,
        max_eigen,
        trace_cv_5pct: trace_cv,
        max_eigen_cv_5pct: max_cv,
        trace_p_values: trace_p,
        max_eigen_p_values: max_p,
    })
}

/// One row of the rank-by-deterministic-case information-criteria summary.
#[derive(Debug, Clone)]
pub struct RankCriteria {
    pub det_case: JohansenDet,
    pub rank: usize,
    pub loglik: f64,
    pub aic: f64,
    pub sc: f64,
}

/// Log-likelihood and information criteria of the rank-restricted VECM for
/// every rank and deterministic case. AIC = (-2 logL + 2 K) / T and
/// SC = (-2 logL + K ln T) / T with K the count of estimated mean
/// parameters: the partialled block plus r (n + p1 - r) for the reduced-rank
/// term.
pub fn johansen_rank_criteria(frame: &Frame, var_lags: usize) -> Result<Vec<RankCriteria>> {
    let n_vars = frame.columns().len();
    let mut out = Vec::new();
    for det in JohansenDet::ALL {
        let core = johansen_core(frame, var_lags, det)?;
        let tf = core.t_obs as f64;
        let base = n_vars as f64 * (1.0 + (2.0 * std::f64::consts::PI).ln()) + core.logdet_s00;
        for r in 0..=n_vars {
            let tail: f64 = core.eigenvalues[..r]
                .iter()
                .map(|&l| (1.0 - l).ln())
                .sum();
            let loglik = -0.5 * tf * (base + tail);
            let k = n_vars * core.q2 + r * (n_vars + core.p1 - r);
            let aic = (-2.0 * loglik + 2.0 * k as f64) / tf;
            let sc = (-2.0 * loglik + k as f64 * tf.ln()) / tf;
            out.push(RankCriteria {
                det_case: det,
                rank: r,
                loglik,
                aic,
                sc,
            });
        }
    }
    Ok(out)
}

/// Gregory-Hansen model: which part of the cointegrating regression shifts
/// at the break.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GHModel {
    /// Intercept shift.
    BreakLevel,
    /// Intercept shift plus trend.
    BreakTrend,
    /// Intercept and slope shift.
    BreakRegime,
    /// Intercept, trend, trend slope, and slope shift.
    BreakRegimeTrend,
}

impl GHModel {
    pub fn case_label(&self) -> &'static str {
        match self {
            GHModel::BreakLevel => "level",
            GHModel::BreakTrend => "trend",
            GHModel::BreakRegime => "regime",
            GHModel::BreakRegimeTrend => "regime_trend",
        }
    }
}

impl std::fmt::Display for GHModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.case_label())
    }
}

/// One Gregory-Hansen statistic with its argmin break date.
#[derive(Debug, Clone, Copy)]
pub struct GHStat {
    pub statistic: f64,
    pub break_date: MonthStamp,
}

/// Gregory-Hansen test result: grid-infimum statistics with per-statistic
/// argmin dates, plus the embedded critical-value bands (`t_critical_values`
/// serves ADF* and Zt*, `z_critical_values` serves Za*).
#[derive(Debug, Clone)]
pub struct GHResult {
    pub model: GHModel,
    pub adf_star: GHStat,
    pub zt_star: GHStat,
    pub za_star: GHStat,
    /// Ascending (level, critical value) pairs for ADF* and Zt*.
    pub t_critical_values: Vec<(f64, f64)>,
    /// Ascending (level, critical value) pairs for Za*.
    pub z_critical_values: Vec<(f64, f64)>,
}

impl GHResult {
    /// Lower-tail rejection check for one of the three statistics.
    pub fn rejects_at(&self, stat: f64, z_family: bool, level: f64) -> bool {
        let cvs = if z_family {
            &self.z_critical_values
        } else {
            &self.t_critical_values
        };
        cvs.iter()
            .find(|(l, _)| (*l - level).abs() < 1e-9)
            .is_some_and(|(_, cv)| stat < *cv)
    }
}

/// The model regression's residuals at one candidate break index.
fn gh_residuals(y: &[f64], x: &[f64], model: GHModel, tb: usize) -> Result<Vec<f64>> {
    let n = y.len();
    let du: Vec<f64> = (0..n).map(|t| f64::from(t >= tb)).collect();
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n], du.clone()];
    if matches!(model, GHModel::BreakTrend | GHModel::BreakRegimeTrend) {
        let tr: Vec<f64> = (0..n).map(|t| (t + 1) as f64 / n as f64 - 0.5).collect();
        if model == GHModel::BreakRegimeTrend {
            cols.push((0..n).map(|t| tr[t] * du[t]).collect());
        }
        cols.push(tr);
    }
    cols.push(x.to_vec());
    if matches!(model, GHModel::BreakRegime | GHModel::BreakRegimeTrend) {
        cols.push((0..n).map(|t| x[t] * du[t]).collect());
    }
    let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
    let fit: QuickFit = quick_ols(&refs, y)
        .ok_or_else(|| Error::SingularSystem("break cointegrating regression".into()))?;
    Ok((0..n)
        .map(|t| {
            let mut f = 0.0;
            for (j, c) in cols.iter().enumerate() {
                f += fit.beta[j] * c[t];
            }
            y[t] - f
        })
        .collect())
}

/// (ADF, Z_t, Z_alpha) of the model regression residuals at a single break
/// index. Exposed for the exhaustive per-date oracle in tests.
pub fn gh_candidate(y: &[f64], x: &[f64], model: GHModel, tb: usize) -> Result<(f64, f64, f64)> {
    let u = gh_residuals(y, x, model, tb)?;
    let (tau, _, _) = eg_on_residuals(
        &u,
        &LagSelection::InfoCriterion {
            criterion: LagCriterion::Sic,
            max_lag: None,
        },
    )?;
    let (zt, za, _) = phillips_on_residuals(&u, None)?;
    Ok((tau, zt, za))
}

/// Gregory-Hansen single-break cointegration test over the trimmed interior
/// grid. Each of the three statistics minimizes independently; ties keep the
/// earliest date.
pub fn gregory_hansen(
    y: &Series,
    x: &Series,
    model: GHModel,
    trimming: f64,
) -> Result<GHResult> {
    check_pair(y, x)?;
    if !(trimming > 0.0 && trimming < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "trimming {trimming} outside (0, 0.5)"
        )));
    }
    let n = y.len();
    let margin = (n as f64 * trimming).floor() as usize;
    if margin < 2 {
        return Err(Error::InsufficientData(
            "trimmed margin must cover at least 2 observations".into(),
        ));
    }
    let lo = margin;
    let hi = n - 1 - margin;
    let mut best_adf = GridBest::new();
    let mut best_zt = GridBest::new();
    let mut best_za = GridBest::new();
    for tb in lo..=hi {
        let (adf, zt, za) = match gh_candidate(&y.values, &x.values, model, tb) {
            Ok(v) => v,
            Err(Error::SingularSystem(_)) => continue,
            Err(e) => return Err(e),
        };
        best_adf.offer(adf, &[tb]);
        best_zt.offer(zt, &[tb]);
        best_za.offer(za, &[tb]);
    }
    let (adf, adf_tb) = best_adf.finish("break grid")?;
    let (zt, zt_tb) = best_zt.finish("break grid")?;
    let (za, za_tb) = best_za.finish("break grid")?;
    let table = builtin();
    let t_cvs = table.standard_critical_values("gh_t", model.case_label(), None, n)?;
    let z_cvs = table.standard_critical_values("gh_z", model.case_label(), None, n)?;
    Ok(GHResult {
        model,
        adf_star: GHStat {
            statistic: adf,
            break_date: y.stamp_at(adf_tb[0]),
        },
        zt_star: GHStat {
            statistic: zt,
            break_date: y.stamp_at(zt_tb[0]),
        },
        za_star: GHStat {
            statistic: za,
            break_date: y.stamp_at(za_tb[0]),
        },
        t_critical_values: t_cvs,
        z_critical_values: z_cvs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linreg::{ols, DesignMatrix};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn stamp() -> MonthStamp {
        MonthStamp::new(1992, 1).unwrap()
    }

    fn walk(rng: &mut ChaCha12Rng, n: usize) -> Vec<f64> {
        let mut acc = 0.0;
        (0..n)
            .map(|_| {
                acc += rng.sample::<f64, _>(StandardNormal);
                acc
            })
            .collect()
    }

    #[test]
    fn eg_matches_manual_two_stage() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 120;
        let x = walk(&mut rng, n);
        let y: Vec<f64> = x
            .iter()
            .map(|&v| 0.3 + 0.8 * v + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let sel = LagSelection::InfoCriterion {
            criterion: LagCriterion::Sic,
            max_lag: Some(4),
        };
        let (tau, z, p) = eg_statistics(&y, &x, Deterministic::Constant, &sel).unwrap();

        let d = DesignMatrix::from_columns(vec![
            ("const".into(), vec![1.0; n]),
            ("x".into(), x.clone()),
        ])
        .unwrap();
        let first = ols(&y, &d).unwrap();
        let u = first.residuals.clone();
        let du: Vec<f64> = (1..n).map(|t| u[t] - u[t - 1]).collect();
        let m = n - 1 - p;
        let mut cols = vec![(
            "u1".to_string(),
            (p..n - 1).map(|t| u[t]).collect::<Vec<f64>>(),
        )];
        for j in 1..=p {
            cols.push((
                format!("du{j}"),
                (p..n - 1).map(|t| du[t - j]).collect::<Vec<f64>>(),
            ));
        }
        let d2 = DesignMatrix::from_columns(cols).unwrap();
        let target: Vec<f64> = (p..n - 1).map(|t| du[t]).collect();
        let second = ols(&target, &d2).unwrap();
        assert_eq!(second.n, m);
        let t_manual = second.coefficients[0] / second.std_errors()[0];
        assert_abs_diff_eq!(tau, t_manual, epsilon = 1e-9);
        let delta: f64 = second.coefficients.iter().skip(1).sum();
        let z_manual = m as f64 * second.coefficients[0] / (1.0 - delta);
        assert_relative_eq!(z, z_manual, epsilon = 1e-9);
    }

    #[test]
    fn po_collapses_to_normalized_bias_at_bandwidth_zero() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let n = 90;
        let x = walk(&mut rng, n);
        let y: Vec<f64> = x
            .iter()
            .map(|&v| 1.0 + 0.5 * v + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let (zt, za, bw) = po_statistics(&y, &x, Deterministic::Constant, Some(0)).unwrap();
        assert_eq!(bw, 0);
        let sel = LagSelection::Fixed(0);
        let (tau, z, _) = eg_statistics(&y, &x, Deterministic::Constant, &sel).unwrap();
        assert_abs_diff_eq!(zt, tau, epsilon = 1e-10);
        assert_abs_diff_eq!(za, z, epsilon = 1e-10);
    }

    #[test]
    fn eg_is_not_symmetric_in_the_pair() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let n = 150;
        let x = walk(&mut rng, n);
        let y: Vec<f64> = x
            .iter()
            .map(|&v| 2.0 * v + 3.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let sel = LagSelection::Fixed(1);
        let (tau_yx, _, _) = eg_statistics(&y, &x, Deterministic::Constant, &sel).unwrap();
        let (tau_xy, _, _) = eg_statistics(&x, &y, Deterministic::Constant, &sel).unwrap();
        assert!((tau_yx - tau_xy).abs() > 1e-6);
    }

    #[test]
    fn residual_test_rejects_on_cointegrated_pair() {
        // True cointegration: y = x + stationary AR(1) noise.
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let n = 500;
        let x = walk(&mut rng, n);
        let mut e = 0.0;
        let y: Vec<f64> = x
            .iter()
            .map(|&v| {
                e = 0.5 * e + rng.sample::<f64, _>(StandardNormal);
                v + e
            })
            .collect();
        let ys = Series::new("y", stamp(), y).unwrap();
        let xs = Series::new("x", stamp(), x).unwrap();
        let res = residual_cointegration(&ys, &xs, ResidualKind::EngleGranger).unwrap();
        assert!(res.p_values.0 < 0.05, "tau p = {}", res.p_values.0);
        assert!(res.p_values.1 < 0.05, "z p = {}", res.p_values.1);
        let po = residual_cointegration(&ys, &xs, ResidualKind::PhillipsOuliaris).unwrap();
        assert!(po.p_values.0 < 0.05, "Z_t p = {}", po.p_values.0);
    }

    #[test]
    fn residual_test_checks_alignment_and_length() {
        let y = Series::new("y", stamp(), vec![1.0, 2.0, 3.0]).unwrap();
        let x = Series::new("x", stamp().offset(1), vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            residual_cointegration(&y, &x, ResidualKind::EngleGranger),
            Err(Error::InvalidArgument(_))
        ));
        let x2 = Series::new("x", stamp(), vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            residual_cointegration(&y, &x2, ResidualKind::EngleGranger),
            Err(Error::InsufficientData(_))
        ));
    }

    fn sim_frame(seed: u64, n: usize, k: usize) -> Frame {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let series: Vec<Series> = (0..k)
            .map(|j| Series::new(format!("v{j}"), stamp(), walk(&mut rng, n)).unwrap())
            .collect();
        Frame::new(series).unwrap()
    }

    #[test]
    fn johansen_telescoping_identity_is_exact() {
        let frame = sim_frame(21, 180, 3);
        let core = johansen_core(&frame, 2, JohansenDet::UnrestrictedConstant).unwrap();
        assert_eq!(core.eigenvalues.len(), 3);
        for w in core.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for (i, &l) in core.eigenvalues.iter().enumerate() {
            assert!((0.0..1.0).contains(&l), "eigenvalue {i} = {l}");
        }
        let (trace, max_eigen) = trace_and_max(&core.eigenvalues, core.t_obs);
        for rk in 0..3 {
            let next = if rk + 1 < 3 { trace[rk + 1] } else { 0.0 };
            assert_eq!(trace[rk] - next, max_eigen[rk]);
        }
    }

    #[test]
    fn johansen_eigenvalues_match_unsymmetric_solver() {
        // Independent oracle: same moment matrices assembled through the
        // reporting OLS path, eigenvalues from the plain (unsymmetrized)
        // product via the general complex eigensolver.
        let frame = sim_frame(22, 160, 2);
        let p = 2;
        let n = frame.len();
        let t_obs = n - p;
        let cols = frame.columns();
        let n_vars = 2;
        let mut z0 = vec![vec![0.0; t_obs]; n_vars];
        let mut z1 = vec![vec![0.0; t_obs]; n_vars];
        let mut z2cols: Vec<(String, Vec<f64>)> = Vec::new();
        for (j, s) in cols.iter().enumerate() {
            for i in 0..t_obs {
                let t = p + i;
                z0[j][i] = s.values[t] - s.values[t - 1];
                z1[j][i] = s.values[t - 1];
            }
            z2cols.push((
                format!("d{j}"),
                (0..t_obs)
                    .map(|i| {
                        let t = p + i;
                        s.values[t - 1] - s.values[t - 2]
                    })
                    .collect(),
            ));
        }
        z2cols.push(("const".into(), vec![1.0; t_obs]));
        let d2 = DesignMatrix::from_columns(z2cols).unwrap();
        let resid =
            |v: &[f64]| -> Vec<f64> { ols(v, &d2).unwrap().residuals.iter().cloned().collect() };
        let r0: Vec<Vec<f64>> = z0.iter().map(|c| resid(c)).collect();
        let r1: Vec<Vec<f64>> = z1.iter().map(|c| resid(c)).collect();
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
        let tf = t_obs as f64;
        let mat = |a: &[Vec<f64>], b: &[Vec<f64>]| {
            DMatrix::from_fn(a.len(), b.len(), |i, j| dot(&a[i], &b[j]) / tf)
        };
        let s00 = mat(&r0, &r0);
        let s11 = mat(&r1, &r1);
        let s01 = mat(&r0, &r1);
        let prod = s11.try_inverse().unwrap()
            * s01.transpose()
            * s00.try_inverse().unwrap()
            * &s01;
        let mut lam: Vec<f64> = prod.complex_eigenvalues().iter().map(|c| c.re).collect();
        lam.sort_by(|a, b| b.total_cmp(a));

        let r = johansen_core(&frame, p, JohansenDet::UnrestrictedConstant).unwrap();
        for (a, b) in r.eigenvalues.iter().zip(&lam) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn johansen_eigenvalues_survive_column_rescaling() {
        let frame = sim_frame(23, 200, 2);
        let scaled = Frame::new(
            frame
                .columns()
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    let f = if j == 0 { 1000.0 } else { 1.0 };
                    Series::new(
                        s.name.clone(),
                        s.start,
                        s.values.iter().map(|v| v * f).collect(),
                    )
                    .unwrap()
                })
                .collect(),
        )
        .unwrap();
        for det in JohansenDet::ALL {
            let a = johansen_core(&frame, 2, det).unwrap();
            let b = johansen_core(&scaled, 2, det).unwrap();
            for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn johansen_reports_bands_and_p_values() {
        // Independent walks: no cointegration, so rank 0 should not be
        // rejected at 5% for this seed and the p-value should sit well away
        // from the tail.
        let frame = sim_frame(26, 300, 2);
        let r = johansen(&frame, 2, JohansenDet::None).unwrap();
        assert_eq!(r.trace.len(), 2);
        assert!(r.trace[0] < r.trace_cv_5pct[0], "trace {:?}", r.trace);
        assert!(r.trace_p_values[0] > 0.05);
        assert!(r.max_eigen[0] < r.max_eigen_cv_5pct[0]);
        for p in r.trace_p_values.iter().chain(&r.max_eigen_p_values) {
            assert!((0.0..=1.0).contains(p));
        }
    }

    #[test]
    fn johansen_dimension_guard() {
        let frame = sim_frame(24, 120, 4);
        assert!(matches!(
            johansen(&frame, 2, JohansenDet::None),
            Err(Error::MissingCriticalValues(_))
        ));
    }

    #[test]
    fn rank_criteria_loglik_increases_with_rank() {
        let frame = sim_frame(25, 150, 2);
        let rows = johansen_rank_criteria(&frame, 2).unwrap();
        assert_eq!(rows.len(), 5 * 3);
        for chunk in rows.chunks(3) {
            assert!(chunk[1].loglik >= chunk[0].loglik - 1e-9);
            assert!(chunk[2].loglik >= chunk[1].loglik - 1e-9);
        }
    }

    #[test]
    fn gh_infimum_matches_exhaustive_refit() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let n = 80;
        let x = walk(&mut rng, n);
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(t, &v)| {
                let shift = if t >= 40 { 2.0 } else { 0.0 };
                shift + 0.7 * v + rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let ys = Series::new("y", stamp(), y.clone()).unwrap();
        let xs = Series::new("x", stamp(), x.clone()).unwrap();
        for model in [GHModel::BreakLevel, GHModel::BreakRegimeTrend] {
            let res = gregory_hansen(&ys, &xs, model, 0.15).unwrap();
            let margin = (n as f64 * 0.15).floor() as usize;
            let mut min_adf = (f64::INFINITY, 0);
            let mut min_zt = (f64::INFINITY, 0);
            let mut min_za = (f64::INFINITY, 0);
            for tb in margin..=(n - 1 - margin) {
                let (adf, zt, za) = gh_candidate(&y, &x, model, tb).unwrap();
                assert!(res.adf_star.statistic <= adf + 1e-12);
                assert!(res.zt_star.statistic <= zt + 1e-12);
                assert!(res.za_star.statistic <= za + 1e-12);
                if adf < min_adf.0 {
                    min_adf = (adf, tb);
                }
                if zt < min_zt.0 {
                    min_zt = (zt, tb);
                }
                if za < min_za.0 {
                    min_za = (za, tb);
                }
            }
            assert_abs_diff_eq!(res.adf_star.statistic, min_adf.0, epsilon = 0.0);
            assert_eq!(res.adf_star.break_date, ys.stamp_at(min_adf.1));
            assert_abs_diff_eq!(res.zt_star.statistic, min_zt.0, epsilon = 0.0);
            assert_eq!(res.zt_star.break_date, ys.stamp_at(min_zt.1));
            assert_abs_diff_eq!(res.za_star.statistic, min_za.0, epsilon = 0.0);
            assert_eq!(res.za_star.break_date, ys.stamp_at(min_za.1));
        }
    }

    #[test]
    fn gh_critical_value_bands_load() {
        let mut rng = ChaCha12Rng::seed_from_u64(32);
        let n = 70;
        let x = walk(&mut rng, n);
        let y: Vec<f64> = x
            .iter()
            .map(|&v| v + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let ys = Series::new("y", stamp(), y).unwrap();
        let xs = Series::new("x", stamp(), x).unwrap();
        let res = gregory_hansen(&ys, &xs, GHModel::BreakRegime, 0.15).unwrap();
        assert_eq!(res.t_critical_values.len(), 3);
        assert_eq!(res.z_critical_values.len(), 3);
        let cv5 = res
            .t_critical_values
            .iter()
            .find(|(l, _)| (*l - 0.05).abs() < 1e-9)
            .unwrap()
            .1;
        assert_abs_diff_eq!(cv5, -4.95, epsilon = 1e-9);
        assert!(res.rejects_at(-6.0, false, 0.05));
        assert!(!res.rejects_at(-4.0, false, 0.05));
    }
}
