//! Least squares with ordinary and Newey-West HAC covariance, Gaussian
//! log-likelihood with per-observation information criteria, and linear
//! restriction tests. Every estimator and diagnostic in the crate routes
//! through `ols`.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};

use crate::criticalvalues::Tail;
use crate::{Error, Result};

/// Named regressor matrix. Full column rank is enforced at fit time with the
/// rule: a column is dependent when its residual norm after projection on the
/// preceding columns falls below 1e-10 of its own norm.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    names: Vec<String>,
    x: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, x: DMatrix<f64>) -> Result<Self> {
        if names.len() != x.ncols() {
            return Err(Error::InvalidArgument(format!(
                "{} names for {} columns",
                names.len(),
                x.ncols()
            )));
        }
        if x.ncols() == 0 || x.nrows() <= x.ncols() {
            return Err(Error::InsufficientData(format!(
                "design is {} x {}; need n > k >= 1",
                x.nrows(),
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite design entry".into()));
        }
        Ok(DesignMatrix { names, x })
    }

    pub fn from_columns(cols: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::InvalidArgument("empty design".into()));
        }
        let n = cols[0].1.len();
        if cols.iter().any(|(_, v)| v.len() != n) {
            return Err(Error::InvalidArgument("ragged design columns".into()));
        }
        let names = cols.iter().map(|(n, _)| n.clone()).collect();
        let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j].1[i]);
        DesignMatrix::new(names, x)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    Ordinary,
    /// Newey-West Bartlett kernel with the recorded lag truncation.
    Hac { bandwidth: usize },
}

/// Reference distribution of a test statistic. `Table` names a nonstandard
/// null handled by the criticalvalues module.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Chi2(usize),
    F(usize, usize),
    StudentT(usize),
    Normal,
    Table(String),
}

impl std::fmt::Display for Distribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Distribution::Chi2(df) => write!(f, "chi2({df})"),
            Distribution::F(a, b) => write!(f, "F({a},{b})"),
            Distribution::StudentT(df) => write!(f, "t({df})"),
            Distribution::Normal => write!(f, "N(0,1)"),
            Distribution::Table(id) => write!(f, "table:{id}"),
        }
    }
}

/// Universal test output: statistic, its reference distribution, a p-value
/// when the family supports one, and tabulated critical values otherwise.
/// `reject_at` lists the significance levels at which the null is rejected;
/// the constructing test encodes the rejection direction.
#[derive(Debug, Clone)]
pub struct TestResult {
    pub statistic: f64,
    pub distribution: Distribution,
    pub p_value: Option<f64>,
    /// (level, critical value) pairs in ascending level order.
    pub critical_values: Vec<(f64, f64)>,
    pub reject_at: Vec<f64>,
    /// Which tail rejects: Upper for chi2/F/Wald, Lower for unit-root-style
    /// statistics where more-negative values reject. Point-optimal tests
    /// (small statistic rejects) are Lower; consumers must not assume a side.
    pub tail: Tail,
}

impl TestResult {
    pub fn from_chi2(statistic: f64, df: usize) -> Self {
        let p = chi2_sf(statistic, df);
        TestResult {
            statistic,
            distribution: Distribution::Chi2(df),
            p_value: Some(p),
            critical_values: Vec::new(),
            reject_at: reject_levels(p),
            tail: Tail::Upper,
        }
    }

    pub fn from_f(statistic: f64, df1: usize, df2: usize) -> Self {
        let p = f_sf(statistic, df1, df2);
        TestResult {
            statistic,
            distribution: Distribution::F(df1, df2),
            p_value: Some(p),
            critical_values: Vec::new(),
            reject_at: reject_levels(p),
            tail: Tail::Upper,
        }
    }

    pub fn rejects_at(&self, level: f64) -> bool {
        self.reject_at.iter().any(|&l| (l - level).abs() < 1e-12)
    }
}

pub(crate) fn reject_levels(p: f64) -> Vec<f64> {
    [0.01, 0.05, 0.10]
        .into_iter()
        .filter(|&l| p < l)
        .collect()
}

/// OLS fit with the design and dependent vector retained so diagnostics can
/// build auxiliary regressions. sigma2 uses the SSR/(n-k) divisor; loglik the
/// ML divisor SSR/n, so the per-observation criteria line up with standard
/// econometrics-package output.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coefficients: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub covariance_kind: CovarianceKind,
    pub residuals: DVector<f64>,
    pub fitted: DVector<f64>,
    pub ssr: f64,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    pub sc: f64,
    pub hq: f64,
    pub r_squared: f64,
    pub n: usize,
    pub k: usize,
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub xtx_inv: DMatrix<f64>,
}

impl OlsFit {
    pub fn std_errors(&self) -> DVector<f64> {
        DVector::from_fn(self.k, |j, _| self.covariance[(j, j)].max(0.0).sqrt())
    }

    pub fn t_stats(&self) -> DVector<f64> {
        let se = self.std_errors();
        DVector::from_fn(self.k, |j, _| self.coefficients[j] / se[j])
    }

    /// Two-sided p-values against t(n-k).
    pub fn p_values(&self) -> Vec<f64> {
        let t = self.t_stats();
        (0..self.k)
            .map(|j| t_sf_two_sided(t[j], self.n - self.k))
            .collect()
    }

    /// Returns the fit with its covariance replaced by the HAC estimate.
    pub fn with_hac(mut self, bandwidth: Option<usize>) -> Result<OlsFit> {
        let (cov, used) = hac_covariance(&self, bandwidth)?;
        self.covariance = cov;
        self.covariance_kind = CovarianceKind::Hac { bandwidth: used };
        Ok(self)
    }

    pub fn design(&self) -> DesignMatrix {
        DesignMatrix {
            names: self.names.clone(),
            x: self.x.clone(),
        }
    }
}

pub fn ols(y: &[f64], design: &DesignMatrix) -> Result<OlsFit> {
    let n = design.n();
    let k = design.k();
    if y.len() != n {
        return Err(Error::InvalidArgument(format!(
            "y has {} rows, design {}",
            y.len(),
            n
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite dependent value".into()));
    }
    let x = &design.x;
    let qr = x.clone().qr();
    let r = qr.r();
    // |R_jj| is the residual norm of column j after projecting on columns < j.
    let deficient: Vec<String> = (0..k)
        .filter(|&j| {
            let col_norm = x.column(j).norm();
            r[(j, j)].abs() < 1e-10 * col_norm.max(f64::MIN_POSITIVE)
        })
        .map(|j| design.names[j].clone())
        .collect();
    if !deficient.is_empty() {
        return Err(Error::RankDeficient(deficient));
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let coefficients = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient(design.names.clone()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient(design.names.clone()))?;
    let xtx_inv = &r_inv * r_inv.transpose();

    let fitted = x * &coefficients;
    let residuals = &yv - &fitted;
    let ssr = residuals.dot(&residuals);
    let nf = n as f64;
    let kf = k as f64;
    let sigma2 = ssr / (nf - kf);
    let covariance = &xtx_inv * sigma2;

    let loglik = if ssr > 0.0 {
        -0.5 * nf * (1.0 + (2.0 * std::f64::consts::PI).ln() + (ssr / nf).ln())
    } else {
        f64::INFINITY
    };
    let aic = -2.0 * loglik / nf + 2.0 * kf / nf;
    let sc = -2.0 * loglik / nf + kf * nf.ln() / nf;
    let hq = -2.0 * loglik / nf + 2.0 * kf * nf.ln().ln() / nf;

    let mean_y = yv.sum() / nf;
    let tss: f64 = yv.iter().map(|v| (v - mean_y).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - ssr / tss } else { f64::NAN };

    Ok(OlsFit {
        names: design.names.clone(),
        coefficients,
        covariance,
        covariance_kind: CovarianceKind::Ordinary,
        residuals,
        fitted,
        ssr,
        sigma2,
        loglik,
        aic,
        sc,
        hq,
        r_squared,
        n,
        k,
        y: yv,
        x: x.clone(),
        xtx_inv,
    })
}

/// Newey-West truncation rule floor(4 (n/100)^(2/9)).
pub fn auto_bandwidth(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Newey-West HAC coefficient covariance with Bartlett weights
/// w_j = 1 - j/(L+1) and a small-sample n/(n-k) scaling. Returns the matrix
/// and the bandwidth actually used.
pub fn hac_covariance(
    fit: &OlsFit,
    bandwidth: Option<usize>,
) -> Result<(DMatrix<f64>, usize)> {
    let n = fit.n;
    let k = fit.k;
    let bw = bandwidth.unwrap_or_else(|| auto_bandwidth(n));
    if bw >= n {
        return Err(Error::BandwidthTooLarge { bandwidth: bw, n });
    }
    // Score rows g_t = x_t e_t.
    let mut g = fit.x.clone();
    for t in 0..n {
        let e = fit.residuals[t];
        for j in 0..k {
            g[(t, j)] *= e;
        }
    }
    let mut s = g.transpose() * &g;
    for j in 1..=bw {
        let w = 1.0 - j as f64 / (bw as f64 + 1.0);
        let mut gamma = DMatrix::zeros(k, k);
        for t in j..n {
            let gt = g.row(t);
            let gl = g.row(t - j);
            for a in 0..k {
                for b in 0..k {
                    gamma[(a, b)] += gt[a] * gl[b];
                }
            }
        }
        let sym = &gamma + gamma.transpose();
        s += sym * w;
    }
    let adj = n as f64 / (n as f64 - k as f64);
    Ok((&fit.xtx_inv * s * &fit.xtx_inv * adj, bw))
}

#[derive(Debug, Clone, Copy)]
pub struct LrvEstimate {
    pub gamma0: f64,
    pub lrv: f64,
    pub bandwidth: usize,
}

/// Bartlett-kernel long-run variance of a (not demeaned) residual vector:
/// gamma_j = Sum_t e_t e_{t-j} / n, lrv = gamma_0 + 2 Sum w_j gamma_j.
pub fn long_run_variance(e: &[f64], bandwidth: Option<usize>) -> Result<LrvEstimate> {
    let n = e.len();
    if n < 2 {
        return Err(Error::InsufficientData("lrv needs n >= 2".into()));
    }
    let bw = bandwidth.unwrap_or_else(|| auto_bandwidth(n));
    if bw >= n {
        return Err(Error::BandwidthTooLarge { bandwidth: bw, n });
    }
    let nf = n as f64;
    let gamma0: f64 = e.iter().map(|v| v * v).sum::<f64>() / nf;
    let mut lrv = gamma0;
    for j in 1..=bw {
        let w = 1.0 - j as f64 / (bw as f64 + 1.0);
        let gj: f64 = (j..n).map(|t| e[t] * e[t - j]).sum::<f64>() / nf;
        lrv += 2.0 * w * gj;
    }
    Ok(LrvEstimate {
        gamma0,
        lrv,
        bandwidth: bw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestForm {
    F,
    Chi2,
}

/// Wald test of R beta = r against the fit's current covariance (ordinary or
/// HAC). The F form divides by the restriction count with F(q, n-k)
/// reference; the chi2 form uses chi2(q).
pub fn wald_test(
    fit: &OlsFit,
    r_mat: &DMatrix<f64>,
    r_vec: &DVector<f64>,
    form: TestForm,
) -> Result<TestResult> {
    let q = r_mat.nrows();
    if q == 0 || r_mat.ncols() != fit.k || r_vec.len() != q {
        return Err(Error::InvalidArgument(format!(
            "restriction shape {}x{} vs k = {}",
            r_mat.nrows(),
            r_mat.ncols(),
            fit.k
        )));
    }
    let d = r_mat * &fit.coefficients - r_vec;
    let rvr = r_mat * &fit.covariance * r_mat.transpose();
    let chol = rvr
        .clone()
        .cholesky()
        .ok_or(Error::SingularRestrictionCovariance)?;
    let w = d.dot(&chol.solve(&d));
    let w = w.max(0.0);
    Ok(match form {
        TestForm::F => TestResult::from_f(w / q as f64, q, fit.n - fit.k),
        TestForm::Chi2 => TestResult::from_chi2(w, q),
    })
}

/// Convenience: Wald test that the named coefficients are jointly zero.
pub fn wald_zero_restrictions(
    fit: &OlsFit,
    names: &[&str],
    form: TestForm,
) -> Result<TestResult> {
    let mut rows = Vec::with_capacity(names.len());
    for name in names {
        let j = fit
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn((*name).into()))?;
        rows.push(j);
    }
    let r_mat = DMatrix::from_fn(rows.len(), fit.k, |i, j| if rows[i] == j { 1.0 } else { 0.0 });
    let r_vec = DVector::zeros(rows.len());
    wald_test(fit, &r_mat, &r_vec, form)
}

pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df as f64).map(|d| d.sf(x)).unwrap_or(f64::NAN)
}

pub fn f_sf(x: f64, df1: usize, df2: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    FisherSnedecor::new(df1 as f64, df2 as f64)
        .map(|d| d.sf(x))
        .unwrap_or(f64::NAN)
}

pub fn t_sf_two_sided(t: f64, df: usize) -> f64 {
    if !t.is_finite() {
        return if t.is_nan() { f64::NAN } else { 0.0 };
    }
    StudentsT::new(0.0, 1.0, df as f64)
        .map(|d| 2.0 * d.sf(t.abs()))
        .unwrap_or(f64::NAN)
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).map(|d| d.cdf(x)).unwrap_or(f64::NAN)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .map(|d| d.inverse_cdf(p))
        .unwrap_or(f64::NAN)
}

/// Minimal OLS output from the normal-equation fast path.
#[derive(Debug, Clone)]
pub struct QuickFit {
    pub beta: Vec<f64>,
    pub ssr: f64,
    pub n: usize,
    /// Diagonal of (X'X)^{-1}.
    diag_inv: Vec<f64>,
}

impl QuickFit {
    pub fn k(&self) -> usize {
        self.beta.len()
    }

    pub fn sigma2(&self) -> f64 {
        self.ssr / (self.n - self.k()) as f64
    }

    /// Conventional t-statistic of coefficient `i`.
    pub fn t_stat(&self, i: usize) -> f64 {
        let v = self.sigma2() * self.diag_inv[i];
        self.beta[i] / v.sqrt()
    }

    /// Conventional standard error of coefficient `i`.
    pub fn std_error(&self, i: usize) -> f64 {
        (self.sigma2() * self.diag_inv[i]).sqrt()
    }
}

/// Allocation-light OLS via normal equations and Cholesky, for hot loops
/// (break-date grids, Monte Carlo simulation). Returns None when the Gram
/// matrix is not positive definite (collinear candidate designs) or the
/// system is otherwise degenerate. Prefer `ols` everywhere accuracy of
/// reporting matters; this path squares the condition number.
pub fn quick_ols(columns: &[&[f64]], target: &[f64]) -> Option<QuickFit> {
    let k = columns.len();
    let n = target.len();
    if k == 0 || n <= k || columns.iter().any(|c| c.len() != n) {
        return None;
    }
    let mut gram = DMatrix::<f64>::zeros(k, k);
    let mut xty = DVector::<f64>::zeros(k);
    for i in 0..k {
        let ci = columns[i];
        for j in i..k {
            let cj = columns[j];
            let mut acc = 0.0;
            for t in 0..n {
                acc += ci[t] * cj[t];
            }
            gram[(i, j)] = acc;
            gram[(j, i)] = acc;
        }
        let mut acc = 0.0;
        for t in 0..n {
            acc += ci[t] * target[t];
        }
        xty[i] = acc;
    }
    let gdiag: Vec<f64> = (0..k).map(|i| gram[(i, i)]).collect();
    let chol = gram.cholesky()?;
    // A pivot can round to a tiny positive value on an exactly collinear
    // design; reject those instead of returning garbage coefficients.
    let l = chol.l();
    for i in 0..k {
        if !(l[(i, i)] * l[(i, i)] > gdiag[i] * 1e-10) {
            return None;
        }
    }
    let beta = chol.solve(&xty);
    let yy: f64 = target.iter().map(|v| v * v).sum();
    let ssr = (yy - beta.dot(&xty)).max(0.0);
    let inv = chol.inverse();
    let diag_inv: Vec<f64> = (0..k).map(|i| inv[(i, i)]).collect();
    if diag_inv.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    Some(QuickFit {
        beta: beta.iter().cloned().collect(),
        ssr,
        n,
        diag_inv,
    })
}
