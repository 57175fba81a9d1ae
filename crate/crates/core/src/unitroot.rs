//! Unit-root battery: ADF, DFGLS, Phillips-Perron, KPSS, and ERS
//! point-optimal tests, structural-break tests (Perron innovation/additive
//! outlier, Zivot-Andrews, Lee-Strazicich LM with two breaks), and the
//! maximum-integration-order scan used to validate ARDL/Toda-Yamamoto inputs.
//!
//! Conventions, fixed so that simulated critical-value tables and the
//! statistics they describe come from the same estimator:
//! - ADF regressions are in difference form, dy_t = det + g*y_{t-1} +
//!   sum d_i dy_{t-i} + e_t; the statistic is t(g). Automatic lag selection
//!   compares information criteria over a common sample that starts at
//!   max_lag + 1, then refits the chosen order on its own full sample.
//!   The default max lag is Schwert's floor(12*(n/100)^(1/4)).
//! - DFGLS detrends with cbar = -7.0 (constant) or -13.5 (constant+trend)
//!   and runs the no-deterministics ADF on the detrended series; lag
//!   selection happens after detrending.
//! - Long-run variances use the Bartlett kernel with the fixed rule
//!   floor(4*(n/100)^(2/9)) when the bandwidth is automatic. The ERS
//!   point-optimal statistic divides by the long-run variance of the
//!   residuals from the a = 1 quasi-difference regression.
//! - Phillips-Perron shares the Dickey-Fuller critical-value surface, the
//!   usual practice for its p-values.
//! - Break dummies: for a candidate break index tb (0-based into the series),
//!   the level shift is DU_t = 1(t >= tb), the trend shift is
//!   DT_t = (t - tb + 1)*1(t >= tb), and the impulse is 1(t = tb); the
//!   reported break date is the stamp of the first shifted observation.
//!   Grids scan the trimmed interior; ties break toward the earliest date
//!   (lexicographically for two-break pairs), so the search is deterministic.

use crate::criticalvalues;
use crate::dataframe::{Frame, MonthStamp, Series};
use crate::linreg::{long_run_variance, quick_ols, Distribution, QuickFit, TestResult};
use crate::{Error, Result};

/// Deterministic component of a unit-root regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deterministic {
    None,
    Constant,
    ConstantTrend,
}

impl Deterministic {
    pub(crate) fn k(self) -> usize {
        match self {
            Deterministic::None => 0,
            Deterministic::Constant => 1,
            Deterministic::ConstantTrend => 2,
        }
    }

    pub(crate) fn df_case(self) -> &'static str {
        match self {
            Deterministic::None => "nc",
            Deterministic::Constant => "c",
            Deterministic::ConstantTrend => "ct",
        }
    }

    fn gls_case(self) -> Result<&'static str> {
        match self {
            Deterministic::Constant => Ok("c"),
            Deterministic::ConstantTrend => Ok("ct"),
            Deterministic::None => Err(Error::InvalidArgument(
                "test requires a constant or constant+trend specification".into(),
            )),
        }
    }
}

/// Information criterion for automatic ADF lag selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagCriterion {
    Sic,
    Aic,
}

/// Lag order rule for augmented regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagSelection {
    Fixed(usize),
    /// Minimize the criterion over 0..=max_lag; `None` means the Schwert rule.
    InfoCriterion {
        criterion: LagCriterion,
        max_lag: Option<usize>,
    },
}

/// Kernel bandwidth rule for the semiparametric tests (PP, KPSS, ERS).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bandwidth {
    Auto,
    Fixed(usize),
}

impl Bandwidth {
    fn as_option(self) -> Option<usize> {
        match self {
            Bandwidth::Auto => None,
            Bandwidth::Fixed(b) => Some(b),
        }
    }
}

/// Full specification of a battery entry. `lag_selection` matters for
/// adf/dfgls, `bandwidth` for pp/kpss/ers; the irrelevant field is ignored.
#[derive(Debug, Clone)]
pub struct UnitRootSpec {
    pub deterministic: Deterministic,
    pub lag_selection: LagSelection,
    pub bandwidth: Bandwidth,
}

impl Default for UnitRootSpec {
    fn default() -> Self {
        UnitRootSpec {
            deterministic: Deterministic::ConstantTrend,
            lag_selection: LagSelection::InfoCriterion {
                criterion: LagCriterion::Sic,
                max_lag: None,
            },
            bandwidth: Bandwidth::Auto,
        }
    }
}

impl UnitRootSpec {
    pub fn new(deterministic: Deterministic) -> Self {
        UnitRootSpec {
            deterministic,
            ..Default::default()
        }
    }

    pub fn fixed_lags(mut self, p: usize) -> Self {
        self.lag_selection = LagSelection::Fixed(p);
        self
    }

    pub fn bandwidth(mut self, b: usize) -> Self {
        self.bandwidth = Bandwidth::Fixed(b);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitRootKind {
    Adf,
    Dfgls,
    Pp,
    Kpss,
    Ers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakKind {
    PerronIo,
    PerronAo,
    ZivotAndrews,
    LsCrash,
    LsBreak,
}

/// Customary trimming fraction for each break test.
pub fn default_trimming(kind: BreakKind) -> f64 {
    match kind {
        BreakKind::LsCrash | BreakKind::LsBreak => 0.10,
        _ => 0.15,
    }
}

/// Break-model label carried on results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakModel {
    Crash,
    Break,
    Io,
    Ao,
    Za,
}

impl std::fmt::Display for BreakModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BreakModel::Crash => "crash",
            BreakModel::Break => "break",
            BreakModel::Io => "io",
            BreakModel::Ao => "ao",
            BreakModel::Za => "za",
        };
        write!(f, "{s}")
    }
}

/// Minimum-t break-test outcome. All five tests reject in the lower tail.
#[derive(Debug, Clone)]
pub struct BreakResult {
    pub statistic: f64,
    /// One date (Perron, ZA) or two ascending dates (LS); each is the first
    /// observation of the shifted regime.
    pub break_dates: Vec<MonthStamp>,
    /// (level, critical value) pairs in ascending level order.
    pub critical_values: Vec<(f64, f64)>,
    pub model: BreakModel,
}

impl BreakResult {
    pub fn rejects_at(&self, level: f64) -> bool {
        self.critical_values
            .iter()
            .any(|&(l, cv)| (l - level).abs() < 1e-12 && self.statistic < cv)
    }
}

/// Schwert's rule of thumb for the maximum augmentation lag.
pub fn schwert_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

pub(crate) fn ensure_variation(y: &[f64], what: &str) -> Result<()> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in y {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(hi > lo) {
        return Err(Error::ZeroVariance(what.into()));
    }
    Ok(())
}

/// Dickey-Fuller design over the window t = t_start..n-1: target dy_t,
/// columns [det..., y_{t-1}, dy_{t-1}..dy_{t-p}]. The trend column is
/// centered and rescaled, which spans the same space as a raw trend and
/// keeps the Gram matrix well conditioned in hot loops.
pub(crate) struct DfDesign {
    pub(crate) cols: Vec<Vec<f64>>,
    pub(crate) target: Vec<f64>,
    pub(crate) gamma: usize,
}

pub(crate) fn adf_design(y: &[f64], det: Deterministic, p: usize, t_start: usize) -> Result<DfDesign> {
    let n = y.len();
    if t_start < p + 1 || t_start < 1 {
        return Err(Error::InvalidArgument(
            "window start precedes available lags".into(),
        ));
    }
    let k = det.k() + 1 + p;
    if n < t_start + k + 1 {
        return Err(Error::InsufficientData(format!(
            "need more than {k} observations after lagging, have {}",
            n.saturating_sub(t_start)
        )));
    }
    let m = n - t_start;
    let target: Vec<f64> = (t_start..n).map(|t| y[t] - y[t - 1]).collect();
    ensure_variation(&target, "differenced series")?;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    if det.k() >= 1 {
        cols.push(vec![1.0; m]);
    }
    if det.k() == 2 {
        cols.push(
            (t_start..n)
                .map(|t| (t + 1) as f64 / n as f64 - 0.5)
                .collect(),
        );
    }
    let gamma = cols.len();
    cols.push((t_start..n).map(|t| y[t - 1]).collect());
    for j in 1..=p {
        cols.push((t_start..n).map(|t| y[t - j] - y[t - j - 1]).collect());
    }
    Ok(DfDesign {
        cols,
        target,
        gamma,
    })
}

pub(crate) fn fit_design(d: &DfDesign, what: &str) -> Result<QuickFit> {
    let refs: Vec<&[f64]> = d.cols.iter().map(|c| c.as_slice()).collect();
    quick_ols(&refs, &d.target).ok_or_else(|| Error::SingularSystem(what.into()))
}

/// t-statistic on y_{t-1} in the augmented Dickey-Fuller regression.
pub fn adf_statistic(y: &[f64], det: Deterministic, lags: usize) -> Result<f64> {
    let d = adf_design(y, det, lags, lags + 1)?;
    let fit = fit_design(&d, "dickey-fuller regression")?;
    Ok(fit.t_stat(d.gamma))
}

/// Lag order implied by `selection` for the ADF regression on `y`.
/// Criteria are compared over the common sample that the largest candidate
/// order leaves available; ties pick the smaller order.
pub fn select_adf_lags(y: &[f64], det: Deterministic, selection: &LagSelection) -> Result<usize> {
    match *selection {
        LagSelection::Fixed(p) => Ok(p),
        LagSelection::InfoCriterion { criterion, max_lag } => {
            let n = y.len();
            let cap = n.saturating_sub(det.k() + 4) / 2;
            let pmax = max_lag.unwrap_or_else(|| schwert_max_lag(n)).min(cap);
            let t_start = pmax + 1;
            let mut best: Option<(f64, usize)> = None;
            for p in 0..=pmax {
                let d = adf_design(y, det, p, t_start)?;
                let fit = fit_design(&d, "lag selection regression")?;
                let m = fit.n as f64;
                let k = fit.k() as f64;
                if !(fit.ssr > 0.0) {
                    return Err(Error::ZeroVariance("lag selection residuals".into()));
                }
                let ic = match criterion {
                    LagCriterion::Sic => (fit.ssr / m).ln() + k * m.ln() / m,
                    LagCriterion::Aic => (fit.ssr / m).ln() + 2.0 * k / m,
                };
                if best.map_or(true, |(b, _)| ic < b) {
                    best = Some((ic, p));
                }
            }
            Ok(best.expect("candidate set is nonempty").1)
        }
    }
}

fn quasi_diff(v: &[f64], a: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    out.push(v[0]);
    for t in 1..v.len() {
        out.push(v[t] - a * v[t - 1]);
    }
    out
}

fn gls_cbar(det: Deterministic) -> Result<f64> {
    match det {
        Deterministic::Constant => Ok(-7.0),
        Deterministic::ConstantTrend => Ok(-13.5),
        Deterministic::None => Err(Error::InvalidArgument(
            "GLS detrending requires constant or constant+trend".into(),
        )),
    }
}

/// Residuals and SSR of the quasi-difference regression of y on the
/// deterministic terms at autoregressive parameter `a`.
fn quasi_regression(y: &[f64], det: Deterministic, a: f64) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let n = y.len();
    if n < det.k() + 3 {
        return Err(Error::InsufficientData(
            "quasi-difference regression needs more observations".into(),
        ));
    }
    let mut d: Vec<Vec<f64>> = vec![vec![1.0; n]];
    if det == Deterministic::ConstantTrend {
        d.push((1..=n).map(|t| t as f64).collect());
    }
    let qy = quasi_diff(y, a);
    let qd: Vec<Vec<f64>> = d.iter().map(|c| quasi_diff(c, a)).collect();
    let refs: Vec<&[f64]> = qd.iter().map(|c| c.as_slice()).collect();
    let fit = quick_ols(&refs, &qy)
        .ok_or_else(|| Error::SingularSystem("quasi-difference regression".into()))?;
    let resid: Vec<f64> = (0..n)
        .map(|t| {
            let mut f = 0.0;
            for (j, c) in qd.iter().enumerate() {
                f += fit.beta[j] * c[t];
            }
            qy[t] - f
        })
        .collect();
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    Ok((ssr, resid, fit.beta))
}

/// GLS-detrended copy of `y` per the DFGLS local-alternative construction.
pub fn dfgls_detrend(y: &[f64], det: Deterministic) -> Result<Vec<f64>> {
    let cbar = gls_cbar(det)?;
    let n = y.len();
    let abar = 1.0 + cbar / n as f64;
    let (_, _, beta) = quasi_regression(y, det, abar)?;
    Ok((0..n)
        .map(|t| {
            let mut v = y[t] - beta[0];
            if det == Deterministic::ConstantTrend {
                v -= beta[1] * (t + 1) as f64;
            }
            v
        })
        .collect())
}

/// DFGLS statistic: the no-deterministics ADF t on the GLS-detrended series.
pub fn dfgls_statistic(y: &[f64], det: Deterministic, lags: usize) -> Result<f64> {
    let detrended = dfgls_detrend(y, det)?;
    adf_statistic(&detrended, Deterministic::None, lags)
}

/// Phillips-Perron Z_t with Bartlett-kernel long-run variance correction.
/// `bandwidth = None` applies the automatic rule. With bandwidth 0 the
/// correction vanishes and Z_t equals the lag-0 Dickey-Fuller t.
pub fn pp_statistic(y: &[f64], det: Deterministic, bandwidth: Option<usize>) -> Result<f64> {
    let d = adf_design(y, det, 0, 1)?;
    let fit = fit_design(&d, "phillips-perron regression")?;
    let m = fit.n as f64;
    let resid: Vec<f64> = (0..fit.n)
        .map(|t| {
            let mut f = 0.0;
            for (j, c) in d.cols.iter().enumerate() {
                f += fit.beta[j] * c[t];
            }
            d.target[t] - f
        })
        .collect();
    let gamma0 = fit.ssr / m;
    let f0 = long_run_variance(&resid, bandwidth)?.lrv;
    if !(f0 > 0.0) {
        return Err(Error::ZeroVariance("long-run variance".into()));
    }
    let t0 = fit.t_stat(d.gamma);
    let se = fit.std_error(d.gamma);
    let s = fit.sigma2().sqrt();
    Ok(t0 * (gamma0 / f0).sqrt() - m * se * (f0 - gamma0) / (2.0 * f0.sqrt() * s))
}

/// KPSS LM statistic (null of stationarity around the deterministic part).
pub fn kpss_statistic(y: &[f64], det: Deterministic, bandwidth: Option<usize>) -> Result<f64> {
    det.gls_case()?;
    let n = y.len();
    if n < det.k() + 3 {
        return Err(Error::InsufficientData(
            "KPSS needs more observations".into(),
        ));
    }
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    if det == Deterministic::ConstantTrend {
        cols.push((0..n).map(|t| (t + 1) as f64 / n as f64 - 0.5).collect());
    }
    let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
    let fit =
        quick_ols(&refs, y).ok_or_else(|| Error::SingularSystem("KPSS level regression".into()))?;
    let resid: Vec<f64> = (0..n)
        .map(|t| {
            let mut f = 0.0;
            for (j, c) in cols.iter().enumerate() {
                f += fit.beta[j] * c[t];
            }
            y[t] - f
        })
        .collect();
    let f0 = long_run_variance(&resid, bandwidth)?.lrv;
    if !(f0 > 0.0) {
        return Err(Error::ZeroVariance("long-run variance".into()));
    }
    let mut s = 0.0;
    let mut acc = 0.0;
    for e in &resid {
        s += e;
        acc += s * s;
    }
    Ok(acc / (n as f64 * n as f64 * f0))
}

/// ERS point-optimal P_T. Small values reject the unit root, so the result
/// is read against the lower tail.
pub fn ers_statistic(y: &[f64], det: Deterministic, bandwidth: Option<usize>) -> Result<f64> {
    let cbar = gls_cbar(det)?;
    let n = y.len();
    let abar = 1.0 + cbar / n as f64;
    let (ssr_a, _, _) = quasi_regression(y, det, abar)?;
    let (ssr_1, resid, _) = quasi_regression(y, det, 1.0)?;
    let f0 = long_run_variance(&resid, bandwidth)?.lrv;
    if !(f0 > 0.0) {
        return Err(Error::ZeroVariance("long-run variance".into()));
    }
    Ok((ssr_a - abar * ssr_1) / f0)
}

fn table_result(statistic: f64, family: &str, case: &str, n: usize) -> Result<TestResult> {
    let table = criticalvalues::builtin();
    let tail = table.tail(family, case)?;
    let critical_values = table.standard_critical_values(family, case, None, n)?;
    let p_value = match table.p_value(family, case, None, n, statistic) {
        Ok(p) => Some(p),
        Err(Error::UnsupportedPValue(_)) => None,
        Err(e) => return Err(e),
    };
    let reject_at = critical_values
        .iter()
        .filter(|&&(_, cv)| criticalvalues::rejects(tail, statistic, cv))
        .map(|&(l, _)| l)
        .collect();
    Ok(TestResult {
        statistic,
        distribution: Distribution::Table(format!("{family}/{case}")),
        p_value,
        critical_values,
        reject_at,
        tail,
    })
}

/// One entry of the unit-root battery, with critical values (and a p-value
/// when the tabulated grid is dense enough) from the bundled tables.
pub fn unit_root(s: &Series, kind: UnitRootKind, spec: &UnitRootSpec) -> Result<TestResult> {
    ensure_variation(&s.values, &s.name)?;
    let y = &s.values;
    let n = y.len();
    let det = spec.deterministic;
    match kind {
        UnitRootKind::Adf => {
            let p = select_adf_lags(y, det, &spec.lag_selection)?;
            table_result(adf_statistic(y, det, p)?, "df", det.df_case(), n)
        }
        UnitRootKind::Pp => {
            let stat = pp_statistic(y, det, spec.bandwidth.as_option())?;
            table_result(stat, "df", det.df_case(), n)
        }
        UnitRootKind::Dfgls => {
            let detrended = dfgls_detrend(y, det)?;
            let p = select_adf_lags(&detrended, Deterministic::None, &spec.lag_selection)?;
            let stat = adf_statistic(&detrended, Deterministic::None, p)?;
            table_result(stat, "dfgls", det.gls_case()?, n)
        }
        UnitRootKind::Kpss => {
            let stat = kpss_statistic(y, det, spec.bandwidth.as_option())?;
            table_result(stat, "kpss", det.gls_case()?, n)
        }
        UnitRootKind::Ers => {
            let stat = ers_statistic(y, det, spec.bandwidth.as_option())?;
            table_result(stat, "ers", det.gls_case()?, n)
        }
    }
}

pub(crate) struct GridBest {
    stat: f64,
    dates: Vec<usize>,
}

impl GridBest {
    pub(crate) fn new() -> Self {
        GridBest {
            stat: f64::INFINITY,
            dates: Vec::new(),
        }
    }

    pub(crate) fn offer(&mut self, stat: f64, dates: &[usize]) {
        if stat.is_finite() && stat < self.stat {
            self.stat = stat;
            self.dates = dates.to_vec();
        }
    }

    pub(crate) fn finish(self, what: &str) -> Result<(f64, Vec<usize>)> {
        if self.dates.is_empty() {
            return Err(Error::SingularSystem(what.into()));
        }
        Ok((self.stat, self.dates))
    }
}

/// Minimum unit-root t-statistic over the trimmed break-date grid, with the
/// argmin 0-based index (or ascending index pair for the LS tests). Exposed
/// so the critical-value simulator exercises the identical search.
pub fn break_statistic(
    y: &[f64],
    kind: BreakKind,
    trimming: f64,
    lags: usize,
) -> Result<(f64, Vec<usize>)> {
    let n = y.len();
    if !(trimming > 0.0 && trimming < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "trimming {trimming} outside (0, 0.5)"
        )));
    }
    ensure_variation(y, "break test input")?;
    let margin = (n as f64 * trimming).floor() as usize;
    if margin < 2 {
        return Err(Error::InsufficientData(
            "trimmed margin must cover at least 2 observations".into(),
        ));
    }
    let lo = margin;
    let hi = n - 1 - margin;
    match kind {
        BreakKind::ZivotAndrews => scan_single(y, lags, lo, hi, false),
        BreakKind::PerronIo => scan_single(y, lags, lo, hi, true),
        BreakKind::PerronAo => scan_ao(y, lags, lo, hi),
        BreakKind::LsCrash => scan_ls(y, lags, lo, hi, false),
        BreakKind::LsBreak => scan_ls(y, lags, lo, hi, true),
    }
}

fn scan_single(y: &[f64], p: usize, lo: usize, hi: usize, io: bool) -> Result<(f64, Vec<usize>)> {
    let n = y.len();
    let t0 = p + 1;
    let k = 4 + usize::from(io) + 1 + p;
    if n < t0 + k + 2 || lo > hi {
        return Err(Error::InsufficientData(
            "break grid leaves no estimable window".into(),
        ));
    }
    let m = n - t0;
    let target: Vec<f64> = (t0..n).map(|t| y[t] - y[t - 1]).collect();
    let konst = vec![1.0; m];
    let trend: Vec<f64> = (t0..n).map(|t| (t + 1) as f64 / n as f64 - 0.5).collect();
    let ylag: Vec<f64> = (t0..n).map(|t| y[t - 1]).collect();
    let dlags: Vec<Vec<f64>> = (1..=p)
        .map(|j| (t0..n).map(|t| y[t - j] - y[t - j - 1]).collect())
        .collect();
    let mut du = vec![0.0; m];
    let mut dt = vec![0.0; m];
    let mut imp = vec![0.0; m];
    let mut best = GridBest::new();
    for tb in lo..=hi {
        if tb <= t0 {
            continue;
        }
        for (i, t) in (t0..n).enumerate() {
            du[i] = f64::from(t >= tb);
            dt[i] = if t >= tb {
                (t - tb + 1) as f64 / n as f64
            } else {
                0.0
            };
            imp[i] = f64::from(t == tb);
        }
        let mut cols: Vec<&[f64]> = vec![&konst, &trend, &du, &dt];
        if io {
            cols.push(&imp);
        }
        cols.push(&ylag);
        for c in &dlags {
            cols.push(c);
        }
        let gamma = 4 + usize::from(io);
        if let Some(fit) = quick_ols(&cols, &target) {
            best.offer(fit.t_stat(gamma), &[tb]);
        }
    }
    best.finish("single-break grid")
}

fn scan_ao(y: &[f64], p: usize, lo: usize, hi: usize) -> Result<(f64, Vec<usize>)> {
    let n = y.len();
    let t0 = p + 1;
    let k2 = (p + 1) + 1 + p;
    if n < t0 + k2 + 2 || lo > hi {
        return Err(Error::InsufficientData(
            "break grid leaves no estimable window".into(),
        ));
    }
    let m = n - t0;
    let konst_full = vec![1.0; n];
    let trend_full: Vec<f64> = (0..n).map(|t| (t + 1) as f64 / n as f64 - 0.5).collect();
    let mut du_full = vec![0.0; n];
    let mut dt_full = vec![0.0; n];
    let mut best = GridBest::new();
    for tb in lo..=hi {
        // Impulse columns at tb..tb+p must land inside the stage-2 window.
        if tb < t0 || tb + p > n - 1 {
            continue;
        }
        for t in 0..n {
            du_full[t] = f64::from(t >= tb);
            dt_full[t] = if t >= tb {
                (t - tb + 1) as f64 / n as f64
            } else {
                0.0
            };
        }
        let stage1 = quick_ols(&[&konst_full, &trend_full, &du_full, &dt_full], y);
        let Some(s1) = stage1 else { continue };
        let ytil: Vec<f64> = (0..n)
            .map(|t| {
                y[t] - s1.beta[0]
                    - s1.beta[1] * trend_full[t]
                    - s1.beta[2] * du_full[t]
                    - s1.beta[3] * dt_full[t]
            })
            .collect();
        let target: Vec<f64> = (t0..n).map(|t| ytil[t] - ytil[t - 1]).collect();
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k2);
        for i in 0..=p {
            cols.push((t0..n).map(|t| f64::from(t == tb + i)).collect());
        }
        cols.push((t0..n).map(|t| ytil[t - 1]).collect());
        for j in 1..=p {
            cols.push((t0..n).map(|t| ytil[t - j] - ytil[t - j - 1]).collect());
        }
        debug_assert_eq!(cols.len(), k2);
        debug_assert_eq!(target.len(), m);
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        if let Some(fit) = quick_ols(&refs, &target) {
            best.offer(fit.t_stat(p + 1), &[tb]);
        }
    }
    best.finish("additive-outlier grid")
}

fn scan_ls(
    y: &[f64],
    p: usize,
    lo: usize,
    hi: usize,
    trend_shifts: bool,
) -> Result<(f64, Vec<usize>)> {
    let n = y.len();
    if lo + 2 > hi {
        return Err(Error::InsufficientData(
            "two-break grid leaves no candidate pairs".into(),
        ));
    }
    let m1 = n - 1;
    let dy: Vec<f64> = (1..n).map(|t| y[t] - y[t - 1]).collect();
    let konst1 = vec![1.0; m1];
    let t0 = p + 1;
    let m2 = n - t0;
    let k2 = 3 + 2 * usize::from(trend_shifts) + 1 + p;
    if m2 < k2 + 2 {
        return Err(Error::InsufficientData(
            "two-break regression leaves no degrees of freedom".into(),
        ));
    }
    let konst2 = vec![1.0; m2];
    let target: Vec<f64> = (t0..n).map(|t| y[t] - y[t - 1]).collect();
    let mut b1 = vec![0.0; m1];
    let mut b2 = vec![0.0; m1];
    let mut du1 = vec![0.0; m1];
    let mut du2 = vec![0.0; m1];
    let mut st = vec![0.0; n];
    // Stage-2 column buffers, reused across the pair grid.
    let mut w_b1 = vec![0.0; m2];
    let mut w_b2 = vec![0.0; m2];
    let mut w_du1 = vec![0.0; m2];
    let mut w_du2 = vec![0.0; m2];
    let mut w_slag = vec![0.0; m2];
    let mut w_ds: Vec<Vec<f64>> = (0..p).map(|_| vec![0.0; m2]).collect();
    let mut best = GridBest::new();
    for tb1 in lo..=hi.saturating_sub(2) {
        if tb1 <= t0 {
            continue;
        }
        for tb2 in (tb1 + 2)..=hi {
            // Stage 1: dy on the differenced deterministics. Index i holds
            // t = i + 1; the impulse is d(DU), the level shift is d(DT).
            for i in 0..m1 {
                let t = i + 1;
                b1[i] = f64::from(t == tb1);
                b2[i] = f64::from(t == tb2);
                du1[i] = f64::from(t >= tb1);
                du2[i] = f64::from(t >= tb2);
            }
            let mut cols1: Vec<&[f64]> = vec![&konst1, &b1, &b2];
            if trend_shifts {
                cols1.push(&du1);
                cols1.push(&du2);
            }
            let Some(s1) = quick_ols(&cols1, &dy) else {
                continue;
            };
            let (b, d1, d2) = (s1.beta[0], s1.beta[1], s1.beta[2]);
            let (sl1, sl2) = if trend_shifts {
                (s1.beta[3], s1.beta[4])
            } else {
                (0.0, 0.0)
            };
            for (t, slot) in st.iter_mut().enumerate() {
                let mut v = y[t] - y[0] - b * t as f64;
                if t >= tb1 {
                    v -= d1 + sl1 * (t - tb1 + 1) as f64;
                }
                if t >= tb2 {
                    v -= d2 + sl2 * (t - tb2 + 1) as f64;
                }
                *slot = v;
            }
            for (i, t) in (t0..n).enumerate() {
                w_b1[i] = f64::from(t == tb1);
                w_b2[i] = f64::from(t == tb2);
                w_du1[i] = f64::from(t >= tb1);
                w_du2[i] = f64::from(t >= tb2);
                w_slag[i] = st[t - 1];
                for (j, col) in w_ds.iter_mut().enumerate() {
                    col[i] = st[t - j - 1] - st[t - j - 2];
                }
            }
            let mut cols2: Vec<&[f64]> = vec![&konst2, &w_b1, &w_b2];
            if trend_shifts {
                cols2.push(&w_du1);
                cols2.push(&w_du2);
            }
            let slag = cols2.len();
            cols2.push(&w_slag);
            for col in &w_ds {
                cols2.push(col);
            }
            if let Some(fit) = quick_ols(&cols2, &target) {
                best.offer(fit.t_stat(slag), &[tb1, tb2]);
            }
        }
    }
    best.finish("two-break grid")
}

/// Break-aware unit-root test: SIC-selected augmentation from the
/// constant+trend ADF, then the trimmed grid search for `kind`.
pub fn break_unit_root(s: &Series, kind: BreakKind, trimming: f64) -> Result<BreakResult> {
    ensure_variation(&s.values, &s.name)?;
    let p = select_adf_lags(
        &s.values,
        Deterministic::ConstantTrend,
        &LagSelection::InfoCriterion {
            criterion: LagCriterion::Sic,
            max_lag: None,
        },
    )?;
    let (statistic, tbs) = break_statistic(&s.values, kind, trimming, p)?;
    let break_dates = tbs.iter().map(|&tb| s.stamp_at(tb)).collect();
    let (family, case, model) = match kind {
        BreakKind::PerronIo => ("perron_io", "both", BreakModel::Io),
        BreakKind::PerronAo => ("perron_ao", "both", BreakModel::Ao),
        BreakKind::ZivotAndrews => ("za", "both", BreakModel::Za),
        BreakKind::LsCrash => ("ls_crash", "two", BreakModel::Crash),
        BreakKind::LsBreak => ("ls_break", "two", BreakModel::Break),
    };
    let critical_values =
        criticalvalues::builtin().standard_critical_values(family, case, None, s.values.len())?;
    Ok(BreakResult {
        statistic,
        break_dates,
        critical_values,
        model,
    })
}

/// Largest integration order across the frame's columns, testing each
/// column's levels and successive differences with the constant+trend ADF
/// until the unit root is rejected at `level`. Orders above 2 abort.
pub fn max_integration_order(frame: &Frame, level: f64) -> Result<usize> {
    if !(level > 0.0 && level < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "significance level {level} out of range"
        )));
    }
    let table = criticalvalues::builtin();
    let selection = LagSelection::InfoCriterion {
        criterion: LagCriterion::Sic,
        max_lag: None,
    };
    let mut dmax = 0;
    for s in frame.columns() {
        let mut v = s.values.clone();
        let mut order = 0;
        loop {
            let p = select_adf_lags(&v, Deterministic::ConstantTrend, &selection)?;
            let stat = adf_statistic(&v, Deterministic::ConstantTrend, p)?;
            let pv = table.p_value("df", "ct", None, v.len(), stat)?;
            if pv < level {
                break;
            }
            order += 1;
            if order > 2 {
                return Err(Error::ExcessIntegration(s.name.clone()));
            }
            v = v.windows(2).map(|w| w[1] - w[0]).collect();
        }
        dmax = dmax.max(order);
    }
    Ok(dmax)
}
