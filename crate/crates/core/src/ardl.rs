//! Autoregressive distributed lag models: criterion-based (p, q) selection,
//! long-run coefficients with delta-method inference, the exact
//! error-correction reparameterization, the bounds test for a levels
//! relationship, and a short-run causality Wald test.
//!
//! Conventions, pinned for table comparability:
//! - Candidate models are compared on the common sample truncated at the
//!   searched maximum lags; the winner is then refit on its own maximal
//!   sample (deepest selected lag), which is what the reported coefficient
//!   tables use.
//! - Levels and error-correction inference uses Bartlett-kernel HAC standard
//!   errors at the automatic bandwidth; the bounds F statistic uses the
//!   conventional SSR form and the bounds t statistic the ordinary
//!   covariance, both on the unrestricted conditional ECM.
//! - Deterministic cases follow the usual five-case scheme: i = none,
//!   ii = restricted constant, iii = unrestricted constant, iv = unrestricted
//!   constant with restricted trend, v = unrestricted constant and trend.
//!   Restricted terms live inside the equilibrium-correction term and join
//!   the bounds F restriction set.
//! - The error-correction regression rebuilds the equilibrium term from the
//!   fitted long-run coefficients, so its residuals reproduce the levels
//!   residuals exactly and the equilibrium coefficient equals -(1 - sum of
//!   dependent-lag coefficients) by construction.
//! - A regressor selected at lag depth 0 keeps its current-difference term
//!   in both difference forms; the unrestricted conditional model then nests
//!   (rather than reparameterizes) the levels regression.
//! - The trend regressor is the 1-based row index of the aligned sample.

use nalgebra::{DMatrix, DVector};

use crate::criticalvalues::bounds_bands;
use crate::dataframe::{Frame, Series};
use crate::linreg::{ols, wald_test, DesignMatrix, OlsFit, TestForm, TestResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArdlCase {
    NoConst,
    RestrictedConst,
    UnrestrictedConst,
    RestrictedTrend,
    UnrestrictedTrend,
}

impl ArdlCase {
    pub fn label(self) -> &'static str {
        match self {
            ArdlCase::NoConst => "i",
            ArdlCase::RestrictedConst => "ii",
            ArdlCase::UnrestrictedConst => "iii",
            ArdlCase::RestrictedTrend => "iv",
            ArdlCase::UnrestrictedTrend => "v",
        }
    }

    fn has_const(self) -> bool {
        self != ArdlCase::NoConst
    }

    fn const_restricted(self) -> bool {
        self == ArdlCase::RestrictedConst
    }

    fn has_trend(self) -> bool {
        matches!(self, ArdlCase::RestrictedTrend | ArdlCase::UnrestrictedTrend)
    }

    fn trend_restricted(self) -> bool {
        self == ArdlCase::RestrictedTrend
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectCriterion {
    Aic,
    Sc,
    Hq,
}

impl SelectCriterion {
    pub fn label(self) -> &'static str {
        match self {
            SelectCriterion::Aic => "aic",
            SelectCriterion::Sc => "sc",
            SelectCriterion::Hq => "hq",
        }
    }

    fn of(self, fit: &OlsFit) -> f64 {
        match self {
            SelectCriterion::Aic => fit.aic,
            SelectCriterion::Sc => fit.sc,
            SelectCriterion::Hq => fit.hq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArdlSpec {
    /// Dependent-variable lag depth, at least 1.
    pub p: usize,
    /// Distributed-lag depth per regressor; 0 keeps only the current value.
    pub q: Vec<usize>,
    pub case: ArdlCase,
}

impl ArdlSpec {
    pub fn label(&self) -> String {
        let qs: Vec<String> = self.q.iter().map(|q| q.to_string()).collect();
        format!("ARDL({},{})", self.p, qs.join(","))
    }

    fn total_lags(&self) -> usize {
        self.p + self.q.iter().sum::<usize>()
    }
}

#[derive(Debug, Clone)]
pub struct LongRunCoef {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
}

#[derive(Debug, Clone)]
pub struct ArdlFit {
    pub spec: ArdlSpec,
    pub y_name: String,
    pub x_names: Vec<String>,
    /// Levels regression with HAC covariance (intertemporal-dynamics shape).
    pub levels_fit: OlsFit,
    /// Long-run coefficients of the regressors plus any restricted
    /// deterministic terms, with delta-method inference.
    pub long_run: Vec<LongRunCoef>,
    pub ec_coefficient: f64,
    pub ec_t_stat: f64,
    /// Error-correction regression with HAC covariance (difference shape).
    pub ec_fit: OlsFit,
    pub aic: f64,
    pub sc: f64,
    pub hq: f64,
    /// Candidate labels skipped as rank deficient during the grid search.
    pub skipped: Vec<String>,
    pub t_obs: usize,
    y: Vec<f64>,
    xs: Vec<Vec<f64>>,
    t_start: usize,
}

fn lagged(name: &str, lag: usize) -> String {
    if lag == 0 {
        name.to_string()
    } else {
        format!("{name}(-{lag})")
    }
}

fn diff_name(name: &str, lag: usize) -> String {
    if lag == 0 {
        format!("D({name})")
    } else {
        format!("D({name}(-{lag}))")
    }
}

/// Columns of the levels regression y_t on its own lags 1..p, each regressor
/// at lags 0..q_i, and the case deterministics, over rows t_start..n.
fn levels_columns(
    y_name: &str,
    y: &[f64],
    x_names: &[String],
    xs: &[Vec<f64>],
    spec: &ArdlSpec,
    t_start: usize,
) -> Vec<(String, Vec<f64>)> {
    let n = y.len();
    let rows = t_start..n;
    let mut cols = Vec::new();
    for j in 1..=spec.p {
        cols.push((lagged(y_name, j), rows.clone().map(|t| y[t - j]).collect()));
    }
    for (i, x) in xs.iter().enumerate() {
        for j in 0..=spec.q[i] {
            cols.push((lagged(&x_names[i], j), rows.clone().map(|t| x[t - j]).collect()));
        }
    }
    if spec.case.has_const() {
        cols.push(("const".into(), vec![1.0; n - t_start]));
    }
    if spec.case.has_trend() {
        cols.push(("trend".into(), rows.clone().map(|t| (t + 1) as f64).collect()));
    }
    cols
}

fn spec_depth(spec: &ArdlSpec) -> usize {
    // Difference forms need one presample row even for a depth-0 regressor.
    spec.p
        .max(spec.q.iter().copied().max().unwrap_or(0))
        .max(1)
}

fn align(y: &Series, xs: &Frame) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<String>)> {
    let mut series = vec![y.clone()];
    series.extend(xs.columns().iter().cloned());
    let aligned = Frame::aligned(series)?;
    let cols = aligned.columns();
    let yv = cols[0].values.clone();
    let xv: Vec<Vec<f64>> = cols[1..].iter().map(|s| s.values.clone()).collect();
    let names = cols[1..].iter().map(|s| s.name.clone()).collect();
    Ok((yv, xv, names))
}

/// Deterministic candidate order: criterion value, then total lag count,
/// then p, then the q vector lexicographically. Reordering the candidate
/// list cannot change the winner.
fn better(a: &(ArdlSpec, f64), b: &(ArdlSpec, f64)) -> std::cmp::Ordering {
    a.1.total_cmp(&b.1)
        .then_with(|| a.0.total_lags().cmp(&b.0.total_lags()))
        .then_with(|| a.0.p.cmp(&b.0.p))
        .then_with(|| a.0.q.cmp(&b.0.q))
}

/// Grid search over p in 1..=max_p and every q vector in [0..=max_q]^k on
/// the common max-lag sample, then a refit of the winner on its own sample.
pub fn fit_ardl(
    y: &Series,
    xs: &Frame,
    max_p: usize,
    max_q: usize,
    criterion: SelectCriterion,
    case: ArdlCase,
) -> Result<ArdlFit> {
    if max_p == 0 {
        return Err(Error::InvalidArgument("max_p must be at least 1".into()));
    }
    let (yv, xv, x_names) = align(y, xs)?;
    let k = xv.len();
    if k == 0 {
        return Err(Error::InvalidArgument("no regressors".into()));
    }
    let t_sel = max_p.max(max_q).max(1);
    let n = yv.len();
    if n <= t_sel + max_p + k * (max_q + 1) + 2 {
        return Err(Error::InsufficientData(format!(
            "{n} rows cannot support a ({max_p}, {max_q}) lag search"
        )));
    }

    let mut candidates: Vec<(ArdlSpec, f64)> = Vec::new();
    let mut skipped = Vec::new();
    let mut q = vec![0usize; k];
    loop {
        for p in 1..=max_p {
            let spec = ArdlSpec { p, q: q.clone(), case };
            let cols = levels_columns(&y.name, &yv, &x_names, &xv, &spec, t_sel);
            let target: Vec<f64> = yv[t_sel..].to_vec();
            match DesignMatrix::from_columns(cols).and_then(|d| ols(&target, &d)) {
                Ok(fit) => candidates.push((spec, criterion.of(&fit))),
                Err(Error::RankDeficient(_)) => skipped.push(spec.label()),
                Err(e) => return Err(e),
            }
        }
        // Odometer over the q vector.
        let mut i = 0;
        loop {
            if i == k {
                break;
            }
            q[i] += 1;
            if q[i] <= max_q {
                break;
            }
            q[i] = 0;
            i += 1;
        }
        if i == k {
            break;
        }
    }
    let best = candidates
        .iter()
        .min_by(|a, b| better(a, b))
        .ok_or_else(|| Error::InsufficientData("every candidate was rank deficient".into()))?;
    let mut fit = fit_ardl_parts(y.name.clone(), yv, xv, x_names, best.0.clone())?;
    fit.skipped = skipped;
    Ok(fit)
}

/// Fits one given specification without a search.
pub fn fit_ardl_spec(y: &Series, xs: &Frame, spec: ArdlSpec) -> Result<ArdlFit> {
    if spec.p == 0 {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    let (yv, xv, x_names) = align(y, xs)?;
    if spec.q.len() != xv.len() {
        return Err(Error::InvalidArgument(format!(
            "{} lag depths for {} regressors",
            spec.q.len(),
            xv.len()
        )));
    }
    fit_ardl_parts(y.name.clone(), yv, xv, x_names, spec)
}

/// Borrowed view over a fitted (or fitting) model, so the difference-form
/// builders can run both before and after the ArdlFit is assembled.
struct Ctx<'a> {
    spec: &'a ArdlSpec,
    y_name: &'a str,
    x_names: &'a [String],
    y: &'a [f64],
    xs: &'a [Vec<f64>],
    t_start: usize,
    long_run: &'a [LongRunCoef],
}

impl ArdlFit {
    fn ctx(&self) -> Ctx<'_> {
        Ctx {
            spec: &self.spec,
            y_name: &self.y_name,
            x_names: &self.x_names,
            y: &self.y,
            xs: &self.xs,
            t_start: self.t_start,
            long_run: &self.long_run,
        }
    }
}

fn fit_ardl_parts(
    y_name: String,
    yv: Vec<f64>,
    xv: Vec<Vec<f64>>,
    x_names: Vec<String>,
    spec: ArdlSpec,
) -> Result<ArdlFit> {
    let t_start = spec_depth(&spec);
    let n = yv.len();
    if n <= t_start + 2 {
        return Err(Error::InsufficientData(format!("{n} rows for lag depth {t_start}")));
    }
    let cols = levels_columns(&y_name, &yv, &x_names, &xv, &spec, t_start);
    let target: Vec<f64> = yv[t_start..].to_vec();
    let levels_fit = ols(&target, &DesignMatrix::from_columns(cols)?)?.with_hac(None)?;

    let long_run = long_run_from_levels(&levels_fit, &spec, &x_names)?;
    let (aic, sc, hq) = (levels_fit.aic, levels_fit.sc, levels_fit.hq);
    let t_obs = levels_fit.n;

    let ec_fit = ec_regression(&Ctx {
        spec: &spec,
        y_name: &y_name,
        x_names: &x_names,
        y: &yv,
        xs: &xv,
        t_start,
        long_run: &long_run,
    })?;
    let j = ec_fit.k - 1;
    let ec_coefficient = ec_fit.coefficients[j];
    let ec_t_stat = ec_coefficient / ec_fit.covariance[(j, j)].sqrt();

    Ok(ArdlFit {
        spec,
        y_name,
        x_names,
        levels_fit,
        long_run,
        ec_coefficient,
        ec_t_stat,
        ec_fit,
        aic,
        sc,
        hq,
        skipped: Vec::new(),
        t_obs,
        y: yv,
        xs: xv,
        t_start,
    })
}

/// Sum of the dependent-lag coefficients of a levels fit.
fn sum_a(levels_fit: &OlsFit, p: usize) -> f64 {
    (0..p).map(|j| levels_fit.coefficients[j]).sum()
}

/// Column range of regressor i's distributed lags in the levels design.
fn x_block(spec: &ArdlSpec, i: usize) -> std::ops::Range<usize> {
    let start = spec.p + (0..i).map(|l| spec.q[l] + 1).sum::<usize>();
    start..start + spec.q[i] + 1
}

fn long_run_from_levels(
    levels_fit: &OlsFit,
    spec: &ArdlSpec,
    x_names: &[String],
) -> Result<Vec<LongRunCoef>> {
    let phi = 1.0 - sum_a(levels_fit, spec.p);
    if phi.abs() <= 1e-6 {
        return Err(Error::UnitRootDenominator);
    }
    let k_total = levels_fit.k;
    let mut out = Vec::new();
    let mut push = |name: &str, numer_cols: Vec<usize>| {
        let s: f64 = numer_cols.iter().map(|&c| levels_fit.coefficients[c]).sum();
        let pi = s / phi;
        // Gradient of s/(1 - sum a): 1/phi on the numerator block, pi/phi on
        // every dependent lag.
        let mut g = DVector::zeros(k_total);
        for &c in &numer_cols {
            g[c] += 1.0 / phi;
        }
        for j in 0..spec.p {
            g[j] += pi / phi;
        }
        let var = (g.transpose() * &levels_fit.covariance * &g)[(0, 0)].max(0.0);
        let se = var.sqrt();
        out.push(LongRunCoef {
            name: name.to_string(),
            estimate: pi,
            std_error: se,
            t_stat: pi / se,
        });
    };
    for (i, name) in x_names.iter().enumerate() {
        push(name, x_block(spec, i).collect());
    }
    if spec.case.const_restricted() {
        push("const", vec![k_total - 1]);
    }
    if spec.case.trend_restricted() {
        push("trend", vec![k_total - 1]);
    }
    Ok(out)
}

pub fn long_run_coefficients(fit: &ArdlFit) -> &[LongRunCoef] {
    &fit.long_run
}

/// The equilibrium-correction series y_t - pi'x_t minus any restricted
/// deterministics, at full index range.
fn ec_series(ctx: &Ctx<'_>) -> Vec<f64> {
    let n = ctx.y.len();
    let mut ec = ctx.y.to_vec();
    for (i, x) in ctx.xs.iter().enumerate() {
        let pi = ctx.long_run[i].estimate;
        for t in 0..n {
            ec[t] -= pi * x[t];
        }
    }
    let mut extra = ctx.xs.len();
    if ctx.spec.case.const_restricted() {
        let mu = ctx.long_run[extra].estimate;
        for v in ec.iter_mut() {
            *v -= mu;
        }
        extra += 1;
    }
    if ctx.spec.case.trend_restricted() {
        let delta = ctx.long_run[extra].estimate;
        for (t, v) in ec.iter_mut().enumerate() {
            *v -= delta * (t + 1) as f64;
        }
    }
    ec
}

/// Difference-form columns shared by the EC regression and the unrestricted
/// conditional model: dependent-difference lags, regressor-difference lags
/// (a depth-0 regressor keeps its current difference), and the unrestricted
/// deterministics.
fn difference_columns(ctx: &Ctx<'_>) -> Vec<(String, Vec<f64>)> {
    let spec = ctx.spec;
    let n = ctx.y.len();
    let rows = ctx.t_start..n;
    let mut cols = Vec::new();
    for j in 1..spec.p {
        cols.push((
            diff_name(ctx.y_name, j),
            rows.clone().map(|t| ctx.y[t - j] - ctx.y[t - j - 1]).collect(),
        ));
    }
    for (i, x) in ctx.xs.iter().enumerate() {
        for j in 0..spec.q[i].max(1) {
            cols.push((
                diff_name(&ctx.x_names[i], j),
                rows.clone().map(|t| x[t - j] - x[t - j - 1]).collect(),
            ));
        }
    }
    if spec.case.has_const() && !spec.case.const_restricted() {
        cols.push(("const".into(), vec![1.0; n - ctx.t_start]));
    }
    if spec.case.has_trend() && !spec.case.trend_restricted() {
        cols.push(("trend".into(), rows.clone().map(|t| (t + 1) as f64).collect()));
    }
    cols
}

fn ec_regression(ctx: &Ctx<'_>) -> Result<OlsFit> {
    let n = ctx.y.len();
    let rows = ctx.t_start..n;
    let ec = ec_series(ctx);
    let mut cols = difference_columns(ctx);
    cols.push(("CointEq(-1)".into(), rows.clone().map(|t| ec[t - 1]).collect()));
    let dy: Vec<f64> = rows.clone().map(|t| ctx.y[t] - ctx.y[t - 1]).collect();
    ols(&dy, &DesignMatrix::from_columns(cols)?)?.with_hac(None)
}

/// The error-correction representation fitted alongside the levels form.
pub fn ecm_representation(fit: &ArdlFit) -> &OlsFit {
    &fit.ec_fit
}

/// Unrestricted conditional model: the difference columns plus freely
/// entering lagged levels and restricted deterministics (appended last).
/// Returns the fit and the number of appended (restricted) columns.
fn conditional_model(ctx: &Ctx<'_>) -> Result<(OlsFit, usize)> {
    let n = ctx.y.len();
    let rows = ctx.t_start..n;
    let mut cols = difference_columns(ctx);
    let mut m = 0usize;
    cols.push((
        lagged(ctx.y_name, 1),
        rows.clone().map(|t| ctx.y[t - 1]).collect(),
    ));
    m += 1;
    for (i, x) in ctx.xs.iter().enumerate() {
        cols.push((lagged(&ctx.x_names[i], 1), rows.clone().map(|t| x[t - 1]).collect()));
        m += 1;
    }
    if ctx.spec.case.const_restricted() {
        cols.push(("const".into(), vec![1.0; n - ctx.t_start]));
        m += 1;
    }
    if ctx.spec.case.trend_restricted() {
        cols.push(("trend".into(), rows.clone().map(|t| (t + 1) as f64).collect()));
        m += 1;
    }
    let dy: Vec<f64> = rows.clone().map(|t| ctx.y[t] - ctx.y[t - 1]).collect();
    let u = ols(&dy, &DesignMatrix::from_columns(cols)?)?;
    Ok((u, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsSource {
    PesaranAsymptotic,
    NarayanSmallSample,
}

impl BoundsSource {
    pub fn label(self) -> &'static str {
        match self {
            BoundsSource::PesaranAsymptotic => "pesaran_asymptotic",
            BoundsSource::NarayanSmallSample => "narayan_small_sample",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsVerdict {
    Cointegrated,
    NotCointegrated,
    Inconclusive,
}

impl BoundsVerdict {
    pub fn label(self) -> &'static str {
        match self {
            BoundsVerdict::Cointegrated => "cointegrated",
            BoundsVerdict::NotCointegrated => "not_cointegrated",
            BoundsVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundsResult {
    pub f_statistic: f64,
    pub t_statistic: f64,
    /// (level, (I0, I1)) rows in ascending level order.
    pub f_bounds: Vec<(f64, (f64, f64))>,
    pub t_bounds: Vec<(f64, (f64, f64))>,
    pub source: BoundsSource,
    /// Decision at the 5% level.
    pub verdict: BoundsVerdict,
    pub note: Option<String>,
}

/// F test on the joint nullity of the lagged levels (plus restricted
/// deterministics) in the conditional model, SSR form, and the t statistic
/// on the lagged dependent level, against the tabulated I(0)/I(1) bands.
pub fn bounds_test(fit: &ArdlFit, source: BoundsSource) -> Result<BoundsResult> {
    let (unrestricted, m) = conditional_model(&fit.ctx())?;
    let keep = unrestricted.k - m;
    let rows = fit.t_start..fit.y.len();
    let dy: Vec<f64> = rows.map(|t| fit.y[t] - fit.y[t - 1]).collect();
    let ssr_r = if keep == 0 {
        dy.iter().map(|v| v * v).sum::<f64>()
    } else {
        let restricted_cols: Vec<(String, Vec<f64>)> = (0..keep)
            .map(|j| {
                let col: Vec<f64> = unrestricted.x.column(j).iter().cloned().collect();
                (unrestricted.names[j].clone(), col)
            })
            .collect();
        ols(&dy, &DesignMatrix::from_columns(restricted_cols)?)?.ssr
    };
    let ssr_u = unrestricted.ssr;
    let df2 = unrestricted.n - unrestricted.k;
    let f = ((ssr_r - ssr_u) / m as f64) / (ssr_u / df2 as f64);
    let j = keep;
    let t = unrestricted.coefficients[j] / unrestricted.covariance[(j, j)].sqrt();

    let k = fit.xs.len();
    let case = fit.spec.case.label();
    let (band_n, used, note) = match source {
        BoundsSource::PesaranAsymptotic => (None, BoundsSource::PesaranAsymptotic, None),
        BoundsSource::NarayanSmallSample => {
            let n = unrestricted.n;
            if (30..=80).contains(&n) {
                (Some(n), BoundsSource::NarayanSmallSample, None)
            } else {
                (
                    None,
                    BoundsSource::PesaranAsymptotic,
                    Some(format!(
                        "sample size {n} outside the tabulated 30..=80 range; asymptotic bands used"
                    )),
                )
            }
        }
    };

    let mut f_bounds = Vec::new();
    let mut t_bounds = Vec::new();
    for level in [0.01, 0.05, 0.10] {
        if let Ok(b) = bounds_bands(case, k, band_n, level) {
            f_bounds.push((level, (b.f_i0, b.f_i1)));
            if let (Some(t0), Some(t1)) = (b.t_i0, b.t_i1) {
                t_bounds.push((level, (t0, t1)));
            }
        }
    }
    let five = bounds_bands(case, k, band_n, 0.05)?;
    let f_reject = f > five.f_i1;
    let f_accept = f < five.f_i0;
    // The t bands reject toward more negative values.
    let (t_reject, t_accept) = match (five.t_i0, five.t_i1) {
        (Some(t0), Some(t1)) => (t < t1, t > t0),
        _ => (true, true),
    };
    let verdict = if f_reject && t_reject {
        BoundsVerdict::Cointegrated
    } else if f_accept && t_accept {
        BoundsVerdict::NotCointegrated
    } else {
        BoundsVerdict::Inconclusive
    };

    Ok(BoundsResult {
        f_statistic: f,
        t_statistic: t,
        f_bounds,
        t_bounds,
        source: used,
        verdict,
        note,
    })
}

/// Wald F on the joint nullity of all lagged (non-contemporaneous)
/// regressor terms in the levels form, using its HAC covariance.
pub fn short_run_causality(fit: &ArdlFit) -> Result<TestResult> {
    let spec = &fit.spec;
    let mut cols: Vec<usize> = Vec::new();
    for i in 0..fit.xs.len() {
        let block = x_block(spec, i);
        cols.extend(block.skip(1));
    }
    if cols.is_empty() {
        return Err(Error::NoLaggedRegressors);
    }
    let r_mat = DMatrix::from_fn(cols.len(), fit.levels_fit.k, |r, c| {
        if cols[r] == c {
            1.0
        } else {
            0.0
        }
    });
    let r_vec = DVector::zeros(cols.len());
    wald_test(&fit.levels_fit, &r_mat, &r_vec, TestForm::F)
}
