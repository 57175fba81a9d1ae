//! Residual and stability diagnostics. Every auxiliary-regression test is
//! computed through `linreg::ols` on the documented (g, Z) pair rather than
//! special-cased algebra, so the generic engine is the single source of truth.

use nalgebra::{DMatrix, DVector};

use crate::linreg::{ols, DesignMatrix, OlsFit, TestForm, TestResult};
use crate::{criticalvalues, Error, Result};

/// Ljung-Box portmanteau Q = n(n+2) sum_{j<=m} r_j^2/(n-j) on the series or
/// its squares; autocorrelations are computed about the (squared) sample mean.
pub fn ljung_box(x: &[f64], lags: usize, squared: bool) -> Result<TestResult> {
    let n = x.len();
    if lags == 0 || lags >= n / 2 {
        return Err(Error::InvalidArgument(format!(
            "lags {lags} out of range for n = {n}"
        )));
    }
    let z: Vec<f64> = if squared {
        x.iter().map(|v| v * v).collect()
    } else {
        x.to_vec()
    };
    let nf = n as f64;
    let mean = z.iter().sum::<f64>() / nf;
    let dz: Vec<f64> = z.iter().map(|v| v - mean).collect();
    let denom: f64 = dz.iter().map(|v| v * v).sum();
    if denom <= 0.0 {
        return Err(Error::ZeroVariance("ljung_box input".into()));
    }
    let mut q = 0.0;
    for j in 1..=lags {
        let num: f64 = (j..n).map(|t| dz[t] * dz[t - j]).sum();
        let r = num / denom;
        q += r * r / (nf - j as f64);
    }
    q *= nf * (nf + 2.0);
    Ok(TestResult::from_chi2(q, lags))
}

/// ARCH-LM: the demeaned input is squared and regressed on its own lags over
/// the truncated sample. F form tests the lag block; chi2 form is T R^2.
pub fn arch_lm(resid: &[f64], lags: usize, form: TestForm) -> Result<TestResult> {
    let n = resid.len();
    if lags == 0 || lags >= n / 2 {
        return Err(Error::InvalidArgument(format!(
            "lags {lags} out of range for n = {n}"
        )));
    }
    let mean = resid.iter().sum::<f64>() / n as f64;
    let e2: Vec<f64> = resid.iter().map(|v| (v - mean) * (v - mean)).collect();
    if e2.iter().all(|&v| v == e2[0]) {
        return Err(Error::ZeroVariance("arch_lm input".into()));
    }
    let t_len = n - lags;
    let mut cols: Vec<(String, Vec<f64>)> =
        vec![("const".into(), vec![1.0; t_len])];
    for j in 1..=lags {
        let name = format!("e2_lag{j}");
        let col: Vec<f64> = (lags..n).map(|t| e2[t - j]).collect();
        cols.push((name, col));
    }
    let y: Vec<f64> = e2[lags..].to_vec();
    let design = DesignMatrix::from_columns(cols)?;
    let aux = ols(&y, &design)?;
    aux_block_test(&aux, lags, form)
}

/// Breusch-Godfrey serial-correlation LM test: residuals regressed on the
/// original design plus their own lags, pre-sample lags zero-padded so the
/// full estimation sample is kept.
pub fn breusch_godfrey(fit: &OlsFit, lags: usize, form: TestForm) -> Result<TestResult> {
    if lags == 0 {
        return Err(Error::InvalidArgument("lags must be >= 1".into()));
    }
    let n = fit.n;
    let e = &fit.residuals;
    let scale = fit.y.amax().max(1.0);
    if fit.ssr <= 1e-24 * scale * scale {
        return Err(Error::ZeroVariance("residuals of an exact fit".into()));
    }
    let mut cols: Vec<(String, Vec<f64>)> = fit
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| (name.clone(), fit.x.column(j).iter().cloned().collect()))
        .collect();
    for j in 1..=lags {
        let col: Vec<f64> = (0..n)
            .map(|t| if t >= j { e[t - j] } else { 0.0 })
            .collect();
        cols.push((format!("resid_lag{j}"), col));
    }
    let design = DesignMatrix::from_columns(cols)?;
    let y: Vec<f64> = e.iter().cloned().collect();
    let aux = ols(&y, &design)?;
    aux_block_test(&aux, lags, form)
}

/// Ramsey RESET: powers of the fitted values added to the design, F test on
/// the added block.
pub fn ramsey_reset(fit: &OlsFit, powers: &[u32]) -> Result<TestResult> {
    if powers.is_empty() || powers.iter().any(|p| !(2..=4).contains(p)) {
        return Err(Error::InvalidArgument(
            "powers must be a nonempty subset of {2,3,4}".into(),
        ));
    }
    let mut cols: Vec<(String, Vec<f64>)> = fit
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| (name.clone(), fit.x.column(j).iter().cloned().collect()))
        .collect();
    for &p in powers {
        let col: Vec<f64> = fit.fitted.iter().map(|v| v.powi(p as i32)).collect();
        cols.push((format!("fitted^{p}"), col));
    }
    let design = DesignMatrix::from_columns(cols)?;
    let y: Vec<f64> = fit.y.iter().cloned().collect();
    let aux = match ols(&y, &design) {
        Ok(f) => f,
        Err(Error::RankDeficient(c)) => return Err(Error::RankDeficient(c)),
        Err(e) => return Err(e),
    };
    // Exact original fit: the added block cannot reduce an already-zero SSR.
    aux_block_test_vs(&aux, fit.ssr, powers.len(), TestForm::F)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HetKind {
    /// Breusch-Pagan-Godfrey: e^2 on the regressors.
    Bpg,
    /// White without cross terms: e^2 on the squared regressors.
    White,
    /// White with levels, squares, and cross products.
    WhiteCross,
    /// Harvey: ln(e^2) on the regressors.
    Harvey,
    /// Glejser: |e| on the regressors.
    Glejser,
}

/// Heteroskedasticity tests as auxiliary regressions of g(e) on an intercept
/// plus the kind's payload; the F statistic tests the payload block.
pub fn het_test(fit: &OlsFit, kind: HetKind) -> Result<TestResult> {
    let n = fit.n;
    // Payload excludes constant-like columns; the aux intercept is added once.
    let nonconst: Vec<usize> = (0..fit.k)
        .filter(|&j| {
            let col = fit.x.column(j);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in col.iter() {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
            hi - lo > 1e-12 * hi.abs().max(1.0)
        })
        .collect();
    let mut payload: Vec<(String, Vec<f64>)> = Vec::new();
    match kind {
        HetKind::Bpg | HetKind::Harvey | HetKind::Glejser => {
            for &j in &nonconst {
                payload.push((
                    fit.names[j].clone(),
                    fit.x.column(j).iter().cloned().collect(),
                ));
            }
        }
        HetKind::White => {
            for &j in &nonconst {
                payload.push((
                    format!("{}^2", fit.names[j]),
                    fit.x.column(j).iter().map(|v| v * v).collect(),
                ));
            }
        }
        HetKind::WhiteCross => {
            for (a_pos, &a) in nonconst.iter().enumerate() {
                payload.push((
                    fit.names[a].clone(),
                    fit.x.column(a).iter().cloned().collect(),
                ));
                for &b in &nonconst[a_pos..] {
                    let name = if a == b {
                        format!("{}^2", fit.names[a])
                    } else {
                        format!("{}*{}", fit.names[a], fit.names[b])
                    };
                    let col: Vec<f64> = (0..n)
                        .map(|t| fit.x[(t, a)] * fit.x[(t, b)])
                        .collect();
                    payload.push((name, col));
                }
            }
        }
    }
    if payload.is_empty() {
        return Err(Error::InvalidArgument(
            "design has no non-constant regressors".into(),
        ));
    }

    let keep: Vec<usize> = match kind {
        HetKind::Harvey => {
            let kept: Vec<usize> = (0..n).filter(|&t| fit.residuals[t] != 0.0).collect();
            if n - kept.len() > n / 100 {
                return Err(Error::DomainError {
                    index: n - kept.len(),
                    reason: "more than 1% of residuals are exactly zero".into(),
                });
            }
            kept
        }
        _ => (0..n).collect(),
    };
    let g: Vec<f64> = keep
        .iter()
        .map(|&t| {
            let e = fit.residuals[t];
            match kind {
                HetKind::Harvey => (e * e).ln(),
                HetKind::Glejser => e.abs(),
                _ => e * e,
            }
        })
        .collect();
    let q = payload.len();
    let mut cols: Vec<(String, Vec<f64>)> = vec![("const".into(), vec![1.0; keep.len()])];
    for (name, col) in payload {
        let sub: Vec<f64> = keep.iter().map(|&t| col[t]).collect();
        cols.push((name, sub));
    }
    let design = DesignMatrix::from_columns(cols)?;
    let aux = ols(&g, &design)?;
    aux_block_test(&aux, q, TestForm::F)
}

/// F / chi2 test that the trailing `block` columns of an auxiliary fit are
/// jointly zero, computed from the restricted-vs-unrestricted SSR.
fn aux_block_test(aux: &OlsFit, block: usize, form: TestForm) -> Result<TestResult> {
    let kept = aux.k - block;
    let restricted = if kept == 0 {
        // Restricted model is the zero fit.
        aux.y.dot(&aux.y)
    } else {
        let cols: Vec<(String, Vec<f64>)> = (0..kept)
            .map(|j| {
                (
                    aux.names[j].clone(),
                    aux.x.column(j).iter().cloned().collect(),
                )
            })
            .collect();
        let design = DesignMatrix::from_columns(cols)?;
        let y: Vec<f64> = aux.y.iter().cloned().collect();
        ols(&y, &design)?.ssr
    };
    aux_block_test_vs(aux, restricted, block, form)
}

fn aux_block_test_vs(
    aux: &OlsFit,
    restricted_ssr: f64,
    block: usize,
    form: TestForm,
) -> Result<TestResult> {
    let df2 = aux.n - aux.k;
    if aux.ssr <= 0.0 {
        return Err(Error::ZeroVariance("auxiliary regression".into()));
    }
    match form {
        TestForm::F => {
            let f = ((restricted_ssr - aux.ssr).max(0.0) / block as f64) / (aux.ssr / df2 as f64);
            Ok(TestResult::from_f(f, block, df2))
        }
        TestForm::Chi2 => {
            let stat = aux.n as f64 * aux.r_squared.max(0.0);
            Ok(TestResult::from_chi2(stat, block))
        }
    }
}

/// One-step-ahead standardized prediction errors
/// w_r = (y_r - x_r' b_{r-1}) / sqrt(1 + x_r' (X'X)_{r-1}^{-1} x_r),
/// defined for observations k+1..n (1-based).
pub fn recursive_residuals(fit: &OlsFit) -> Result<Vec<f64>> {
    let (n, k) = (fit.n, fit.k);
    if n <= k + 1 {
        return Err(Error::InsufficientData(
            "recursive residuals need n > k + 1".into(),
        ));
    }
    let mut w = Vec::with_capacity(n - k);
    // X'X and X'y over the first r observations, updated incrementally.
    let mut xtx = DMatrix::<f64>::zeros(k, k);
    let mut xty = DVector::<f64>::zeros(k);
    for t in 0..k {
        let xt = fit.x.row(t).transpose();
        xtx += &xt * xt.transpose();
        xty += &xt * fit.y[t];
    }
    for r in k..n {
        let chol = xtx
            .clone()
            .cholesky()
            .ok_or_else(|| Error::RankDeficient(vec![format!("subsample 1..{r}")]))?;
        let b = chol.solve(&xty);
        let xr = fit.x.row(r).transpose();
        let denom = 1.0 + xr.dot(&chol.solve(&xr));
        w.push((fit.y[r] - xr.dot(&b)) / denom.sqrt());
        xtx += &xr * xr.transpose();
        xty += &xr * fit.y[r];
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CusumKind {
    Cusum,
    CusumQ,
}

/// Recursive-residual stability paths with their significance bands.
/// `observation` holds the 1-based index r of each step in the original
/// estimation sample (r = k+1 .. n).
#[derive(Debug, Clone)]
pub struct CusumPath {
    pub kind: CusumKind,
    pub level: f64,
    pub observation: Vec<usize>,
    pub statistic: Vec<f64>,
    pub lower_band: Vec<f64>,
    pub upper_band: Vec<f64>,
}

impl CusumPath {
    pub fn inside_bands(&self) -> bool {
        self.statistic
            .iter()
            .zip(&self.lower_band)
            .zip(&self.upper_band)
            .all(|((s, lo), hi)| s > lo && s < hi)
    }
}

/// Brown-Durbin-Evans line constants a(level) for the CUSUM bands
/// +- a (sqrt(n-k) + 2 (r-k)/sqrt(n-k)).
fn cusum_line_constant(level: f64) -> Result<f64> {
    for (l, a) in [(0.01, 1.143), (0.05, 0.948), (0.10, 0.850)] {
        if (level - l).abs() < 1e-12 {
            return Ok(a);
        }
    }
    Err(Error::MissingCriticalValues(format!(
        "cusum line constant at level {level}"
    )))
}

pub fn cusum(fit: &OlsFit, kind: CusumKind, level: f64) -> Result<CusumPath> {
    let w = recursive_residuals(fit)?;
    let (n, k) = (fit.n, fit.k);
    let m = n - k;
    let observation: Vec<usize> = (k + 1..=n).collect();
    match kind {
        CusumKind::Cusum => {
            let s = fit.sigma2.sqrt();
            if s <= 0.0 {
                return Err(Error::ZeroVariance("regression standard error".into()));
            }
            let a = cusum_line_constant(level)?;
            let sqrt_m = (m as f64).sqrt();
            let mut path = Vec::with_capacity(m);
            let mut acc = 0.0;
            for &wi in &w {
                acc += wi / s;
                path.push(acc);
            }
            let upper: Vec<f64> = (1..=m)
                .map(|r| a * (sqrt_m + 2.0 * r as f64 / sqrt_m))
                .collect();
            let lower = upper.iter().map(|v| -v).collect();
            Ok(CusumPath {
                kind,
                level,
                observation,
                statistic: path,
                lower_band: lower,
                upper_band: upper,
            })
        }
        CusumKind::CusumQ => {
            let total: f64 = w.iter().map(|v| v * v).sum();
            if total <= 0.0 {
                return Err(Error::ZeroVariance("recursive residuals".into()));
            }
            let c0 = criticalvalues::cusumq_halfwidth(m, level)?;
            let mut path = Vec::with_capacity(m);
            let mut acc = 0.0;
            for &wi in &w {
                acc += wi * wi;
                path.push(acc / total);
            }
            let expect: Vec<f64> = (1..=m).map(|r| r as f64 / m as f64).collect();
            let upper: Vec<f64> = expect.iter().map(|e| e + c0).collect();
            let lower: Vec<f64> = expect.iter().map(|e| e - c0).collect();
            Ok(CusumPath {
                kind,
                level,
                observation,
                statistic: path,
                lower_band: lower,
                upper_band: upper,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linreg::{ols, DesignMatrix, Distribution};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn seeded_noise(n: usize, seed: u64) -> Vec<f64> {
        // Small deterministic LCG; adequate for shape tests.
        let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
        (0..n)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let u = ((state >> 11) as f64) / ((1u64 << 53) as f64);
                // Box-Muller-free symmetric residual proxy.
                u - 0.5
            })
            .collect()
    }

    #[test]
    fn ljung_box_alternating_matches_hand_formula() {
        let x = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let res = ljung_box(&x, 1, false).unwrap();
        // r1 = sum(x_t x_{t-1}) / sum(x^2) = -5/6; Q = 6*8*(25/36)/5 = 20/3.
        assert_relative_eq!(res.statistic, 20.0 / 3.0, epsilon = 1e-12);
        assert_eq!(res.distribution, Distribution::Chi2(1));
    }

    #[test]
    fn ljung_box_monotone_in_lags() {
        let x = seeded_noise(60, 7);
        let mut last = 0.0;
        for m in 1..8 {
            let q = ljung_box(&x, m, false).unwrap().statistic;
            assert!(q >= last - 1e-12);
            last = q;
        }
    }

    #[test]
    fn arch_lm_matches_manual_aux_regression() {
        let e = seeded_noise(80, 3);
        let res = arch_lm(&e, 2, TestForm::F).unwrap();
        // Manual auxiliary regression.
        let mean = e.iter().sum::<f64>() / 80.0;
        let e2: Vec<f64> = e.iter().map(|v| (v - mean) * (v - mean)).collect();
        let y: Vec<f64> = e2[2..].to_vec();
        let d = DesignMatrix::from_columns(vec![
            ("c".into(), vec![1.0; 78]),
            ("l1".into(), (2..80).map(|t| e2[t - 1]).collect()),
            ("l2".into(), (2..80).map(|t| e2[t - 2]).collect()),
        ])
        .unwrap();
        let aux = ols(&y, &d).unwrap();
        let dr = DesignMatrix::from_columns(vec![("c".into(), vec![1.0; 78])]).unwrap();
        let restricted = ols(&y, &dr).unwrap();
        let f = ((restricted.ssr - aux.ssr) / 2.0) / (aux.ssr / (78.0 - 3.0));
        assert_relative_eq!(res.statistic, f, epsilon = 1e-10);

        let chi = arch_lm(&e, 2, TestForm::Chi2).unwrap();
        assert_relative_eq!(chi.statistic, 78.0 * aux.r_squared, epsilon = 1e-10);
    }

    fn toy_fit(n: usize, seed: u64) -> crate::linreg::OlsFit {
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() + 1.5).collect();
        let noise = seeded_noise(n, seed);
        let y: Vec<f64> = (0..n).map(|i| 0.8 + 0.6 * x[i] + noise[i]).collect();
        let d = DesignMatrix::from_columns(vec![
            ("const".into(), vec![1.0; n]),
            ("x".into(), x),
        ])
        .unwrap();
        ols(&y, &d).unwrap()
    }

    #[test]
    fn breusch_godfrey_zero_pads_and_rejects_exact_fit() {
        let fit = toy_fit(60, 11);
        let res = breusch_godfrey(&fit, 3, TestForm::F).unwrap();
        assert!(res.statistic.is_finite());
        match res.distribution {
            Distribution::F(3, df2) => assert_eq!(df2, 60 - 2 - 3),
            ref other => panic!("unexpected {other:?}"),
        }

        // Exact fit -> zero residuals -> ZeroVariance.
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let d = DesignMatrix::from_columns(vec![
            ("const".into(), vec![1.0; 30]),
            ("x".into(), x),
        ])
        .unwrap();
        let exact = ols(&y, &d).unwrap();
        assert!(matches!(
            breusch_godfrey(&exact, 2, TestForm::F),
            Err(Error::ZeroVariance(_))
        ));
    }

    #[test]
    fn reset_zero_on_exact_linear_truth() {
        // y exactly linear: adding yhat^2 cannot improve the fit.
        let fit = toy_fit(50, 5);
        let res = ramsey_reset(&fit, &[2]).unwrap();
        assert!(res.statistic >= 0.0);
        let x: Vec<f64> = (0..40).map(|i| 1.0 + (i % 7) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let d = DesignMatrix::from_columns(vec![
            ("const".into(), vec![1.0; 40]),
            ("x".into(), x),
        ])
        .unwrap();
        let exact = ols(&y, &d).unwrap();
        match ramsey_reset(&exact, &[2]) {
            // Zero incremental fit (statistic 0) or a degenerate-variance error
            // are both acceptable outcomes for a perfectly collinear truth.
            Ok(r) => assert!(r.statistic.abs() < 1e-6),
            Err(Error::ZeroVariance(_)) | Err(Error::RankDeficient(_)) => {}
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn reset_detects_quadratic_truth() {
        let n = 200;
        let x: Vec<f64> = (0..n).map(|i| (i as f64) / 20.0).collect();
        let noise = seeded_noise(n, 9);
        let y: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * x[i] + 0.35 * x[i] * x[i] + noise[i])
            .collect();
        let d = DesignMatrix::from_columns(vec![
            ("const".into(), vec![1.0; n]),
            ("x".into(), x),
        ])
        .unwrap();
        let fit = ols(&y, &d).unwrap();
        let res = ramsey_reset(&fit, &[2]).unwrap();
        assert!(res.p_value.unwrap() < 0.05);

        // Cross-check against an independent restricted/unrestricted SSR ratio.
        let mut cols: Vec<(String, Vec<f64>)> = vec![
            ("const".into(), vec![1.0; n]),
            ("x".into(), fit.x.column(1).iter().cloned().collect()),
            ("f2".into(), fit.fitted.iter().map(|v| v * v).collect()),
        ];
        let du = DesignMatrix::from_columns(std::mem::take(&mut cols)).unwrap();
        let yv: Vec<f64> = fit.y.iter().cloned().collect();
        let unres = ols(&yv, &du).unwrap();
        let f = (fit.ssr - unres.ssr) / (unres.ssr / (n as f64 - 3.0));
        assert_relative_eq!(res.statistic, f, epsilon = 1e-8, max_relative = 1e-8);
    }

    #[test]
    fn het_tests_match_generic_formula() {
        let fit = toy_fit(90, 21);
        for kind in [
            HetKind::Bpg,
            HetKind::White,
            HetKind::WhiteCross,
            HetKind::Harvey,
            HetKind::Glejser,
        ] {
            let res = het_test(&fit, kind).unwrap();
            assert!(res.statistic.is_finite());
            assert!(res.p_value.unwrap() > 0.0 && res.p_value.unwrap() <= 1.0);
        }
        // Bpg by hand: e^2 on [1, x].
        let e2: Vec<f64> = fit.residuals.iter().map(|v| v * v).collect();
        let d = DesignMatrix::from_columns(vec![
            ("c".into(), vec![1.0; 90]),
            ("x".into(), fit.x.column(1).iter().cloned().collect()),
        ])
        .unwrap();
        let aux = ols(&e2, &d).unwrap();
        let dr = DesignMatrix::from_columns(vec![("c".into(), vec![1.0; 90])]).unwrap();
        let rs = ols(&e2, &dr).unwrap();
        let f = (rs.ssr - aux.ssr) / (aux.ssr / (90.0 - 2.0));
        let res = het_test(&fit, HetKind::Bpg).unwrap();
        assert_relative_eq!(res.statistic, f, epsilon = 1e-9, max_relative = 1e-9);
    }

    #[test]
    fn het_scale_invariance_of_statistics() {
        let fit = toy_fit(70, 33);
        let y_scaled: Vec<f64> = fit.y.iter().map(|v| v * 5.0).collect();
        let d = fit.design();
        let fit2 = ols(&y_scaled, &d).unwrap();
        for kind in [HetKind::Bpg, HetKind::White, HetKind::Harvey, HetKind::Glejser] {
            let a = het_test(&fit, kind).unwrap().statistic;
            let b = het_test(&fit2, kind).unwrap().statistic;
            assert_relative_eq!(a, b, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn recursive_residuals_equal_refit_forecast_errors() {
        let n = 20;
        let fit = toy_fit(n, 2);
        let w = recursive_residuals(&fit).unwrap();
        assert_eq!(w.len(), n - fit.k);
        // First step: the base fit on exactly k observations is an exact
        // solve, so the forecast error comes from the square system.
        {
            let xk = fit.x.view_range(0..fit.k, 0..fit.k).into_owned();
            let yk = fit.y.rows(0, fit.k).into_owned();
            let b = xk.clone().lu().solve(&yk).unwrap();
            let xr = fit.x.row(fit.k).transpose();
            let xtx_inv = (xk.transpose() * &xk).try_inverse().unwrap();
            let denom = 1.0 + (xr.transpose() * &xtx_inv * &xr)[(0, 0)];
            let expect = (fit.y[fit.k] - xr.dot(&b)) / denom.sqrt();
            assert_abs_diff_eq!(w[0], expect, epsilon = 1e-9);
        }
        for (step, r) in (fit.k + 1..n).enumerate().map(|(s, r)| (s + 1, r)) {
            // Refit on 0..r, forecast observation r.
            let cols: Vec<(String, Vec<f64>)> = (0..fit.k)
                .map(|j| {
                    (
                        fit.names[j].clone(),
                        fit.x.column(j).iter().take(r).cloned().collect(),
                    )
                })
                .collect();
            let d = DesignMatrix::from_columns(cols).unwrap();
            let y: Vec<f64> = fit.y.iter().take(r).cloned().collect();
            let sub = ols(&y, &d).unwrap();
            let xr = fit.x.row(r).transpose();
            let pred = xr.dot(&sub.coefficients);
            let denom = 1.0 + (xr.transpose() * &sub.xtx_inv * &xr)[(0, 0)];
            let expect = (fit.y[r] - pred) / denom.sqrt();
            assert_abs_diff_eq!(w[step], expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn cusumq_endpoints_and_monotonicity() {
        let fit = toy_fit(60, 44);
        let path = cusum(&fit, CusumKind::CusumQ, 0.05).unwrap();
        let s = &path.statistic;
        assert!(s[0] >= 0.0);
        assert_relative_eq!(*s.last().unwrap(), 1.0, epsilon = 1e-12);
        for w in s.windows(2) {
            assert!(w[1] >= w[0] - 1e-15);
        }
        assert_eq!(path.observation.first(), Some(&(fit.k + 1)));
        assert_eq!(path.observation.last(), Some(&fit.n));
    }

    #[test]
    fn cusum_band_shape() {
        let fit = toy_fit(60, 44);
        let path = cusum(&fit, CusumKind::Cusum, 0.05).unwrap();
        let m = (fit.n - fit.k) as f64;
        let expect_first = 0.948 * (m.sqrt() + 2.0 / m.sqrt());
        let expect_last = 0.948 * (m.sqrt() + 2.0 * m / m.sqrt());
        assert_relative_eq!(path.upper_band[0], expect_first, epsilon = 1e-12);
        assert_relative_eq!(
            *path.upper_band.last().unwrap(),
            expect_last,
            epsilon = 1e-12
        );
        for (lo, hi) in path.lower_band.iter().zip(&path.upper_band) {
            assert_relative_eq!(*lo, -hi, epsilon = 1e-12);
        }
    }
}
