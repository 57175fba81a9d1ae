//! Pipeline stages as pure functions: each takes the series store plus its
//! config section and returns a typed result. CSV rendering lives in the
//! pipeline module; nothing here touches the filesystem.

use crate::config::{
    ArdlConfig, AutoOrInt, CausalityConfig, CointegrationConfig, DescriptiveConfig,
    IrfBandChoice, StructuralConfig, TransformConfig, UnitRootConfig, VarSelectionConfig,
};
use crate::{CliError, Result};
use tsecon::ardl::{fit_ardl, short_run_causality, ArdlFit, BoundsResult};
use tsecon::cointegration::{
    gregory_hansen, johansen, residual_cointegration_det, EGResult, GHResult, JohansenResult,
    ResidualKind,
};
use tsecon::dataframe::{describe, transform, Frame, MonthStamp, Series, Transform};
use tsecon::diagnostics::{
    arch_lm, breusch_godfrey, cusum, het_test, ljung_box, ramsey_reset, CusumKind, CusumPath,
    HetKind,
};
use tsecon::linreg::{normal_quantile, TestForm, TestResult};
use tsecon::structural::{
    fevd, historical_decomposition, impulse_response, impulse_response_mc, FevdTable, HDTable,
    IrfPaths,
};
use tsecon::unitroot::{
    break_unit_root, default_trimming, max_integration_order, unit_root, BreakKind, UnitRootKind,
    UnitRootSpec,
};
use tsecon::varmodel::{
    portmanteau, select_lag_order, stability_roots, toda_yamamoto, SelectionTable, StabilityRoots,
    TYResult,
};

/// Raw columns plus every configured transform, addressable by name.
#[derive(Debug, Clone)]
pub struct SeriesStore {
    columns: Vec<Series>,
}

impl SeriesStore {
    pub fn build(frame: &Frame, cfg: &TransformConfig) -> Result<Self> {
        let mut columns: Vec<Series> = frame.columns().to_vec();
        let add = |s: Series, columns: &mut Vec<Series>| -> Result<()> {
            if columns.iter().any(|c| c.name == s.name) {
                return Err(CliError::Config(format!(
                    "transform output {} collides with an existing column",
                    s.name
                )));
            }
            columns.push(s);
            Ok(())
        };
        for (list, kind) in [
            (&cfg.log, Transform::Log),
            (&cfg.diff, Transform::Diff),
            (&cfg.log_diff, Transform::LogDiff),
        ] {
            for name in list {
                let base = frame.column(name)?;
                add(transform(base, kind)?, &mut columns)?;
            }
        }
        Ok(SeriesStore { columns })
    }

    pub fn get(&self, name: &str) -> Result<&Series> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| CliError::Library(tsecon::Error::UnknownColumn(name.to_string())))
    }

    pub fn frame(&self, names: &[String]) -> Result<Frame> {
        let series: Vec<Series> = names
            .iter()
            .map(|n| self.get(n).cloned())
            .collect::<Result<_>>()?;
        Ok(Frame::aligned(series)?)
    }
}

/// Descriptive panel: moments plus serial-correlation and ARCH screens for
/// one series. Stars mark 5% rejections (moment stars use the asymptotic
/// normal tests for skewness and excess kurtosis).
#[derive(Debug, Clone)]
pub struct DescriptiveRow {
    pub series: String,
    pub n: usize,
    pub mean: f64,
    pub stdev: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub jarque_bera: f64,
    pub jarque_bera_p: f64,
    pub skew_star: bool,
    pub kurt_star: bool,
    pub jb_star: bool,
    pub arch: TestResult,
    pub lb: TestResult,
    pub lb_sq: TestResult,
}

pub fn run_descriptive(
    store: &SeriesStore,
    cfg: &DescriptiveConfig,
) -> Result<Vec<DescriptiveRow>> {
    let z = normal_quantile(0.975);
    let mut out = Vec::with_capacity(cfg.series.len());
    for name in &cfg.series {
        let s = store.get(name)?;
        let d = describe(s)?;
        let n = d.n as f64;
        let demeaned: Vec<f64> = s.values.iter().map(|v| v - d.mean).collect();
        let arch = arch_lm(&demeaned, cfg.arch_lags, TestForm::F)?;
        let lb = ljung_box(&s.values, cfg.lb_lags, false)?;
        let lb_sq = ljung_box(&s.values, cfg.lb_lags, true)?;
        out.push(DescriptiveRow {
            series: s.name.clone(),
            n: d.n,
            mean: d.mean,
            stdev: d.stdev,
            skewness: d.skewness,
            kurtosis: d.kurtosis,
            jarque_bera: d.jarque_bera,
            jarque_bera_p: d.jarque_bera_p,
            skew_star: d.skewness.abs() / (6.0 / n).sqrt() > z,
            kurt_star: (d.kurtosis - 3.0).abs() / (24.0 / n).sqrt() > z,
            jb_star: d.jarque_bera_p < 0.05,
            arch,
            lb,
            lb_sq,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct UnitRootCell {
    pub test: &'static str,
    pub statistic: f64,
    pub star: bool,
    pub break_date: Option<MonthStamp>,
}

#[derive(Debug, Clone)]
pub struct UnitRootRow {
    pub series: String,
    pub deterministic: &'static str,
    pub cells: Vec<UnitRootCell>,
}

const STANDARD_TESTS: [(UnitRootKind, &str); 5] = [
    (UnitRootKind::Adf, "adf"),
    (UnitRootKind::Dfgls, "dfgls"),
    (UnitRootKind::Pp, "pp"),
    (UnitRootKind::Kpss, "kpss"),
    (UnitRootKind::Ers, "ers"),
];

const BREAK_TESTS: [(BreakKind, &str); 5] = [
    (BreakKind::PerronIo, "perron_io"),
    (BreakKind::PerronAo, "perron_ao"),
    (BreakKind::ZivotAndrews, "zivot_andrews"),
    (BreakKind::LsCrash, "ls_crash"),
    (BreakKind::LsBreak, "ls_break"),
];

pub fn run_unitroot(store: &SeriesStore, cfg: &UnitRootConfig) -> Result<Vec<UnitRootRow>> {
    let mut rows = Vec::new();
    let groups = [
        (&cfg.levels, cfg.levels_deterministic),
        (&cfg.returns, cfg.returns_deterministic),
    ];
    for (names, det_choice) in groups {
        let det = det_choice.to_lib();
        let det_label = match det_choice {
            crate::config::DetChoice::None => "none",
            crate::config::DetChoice::Constant => "constant",
            crate::config::DetChoice::ConstantTrend => "constant_trend",
        };
        for name in names {
            let s = store.get(name)?;
            let spec = UnitRootSpec::new(det);
            let mut cells = Vec::with_capacity(10);
            for (kind, label) in STANDARD_TESTS {
                let r = unit_root(s, kind, &spec)?;
                cells.push(UnitRootCell {
                    test: label,
                    statistic: r.statistic,
                    star: r.rejects_at(0.05),
                    break_date: None,
                });
            }
            for (kind, label) in BREAK_TESTS {
                let r = break_unit_root(s, kind, default_trimming(kind))?;
                cells.push(UnitRootCell {
                    test: label,
                    statistic: r.statistic,
                    star: r.rejects_at(0.05),
                    break_date: r.break_dates.first().copied(),
                });
            }
            rows.push(UnitRootRow {
                series: s.name.clone(),
                deterministic: det_label,
                cells,
            });
        }
    }
    Ok(rows)
}

pub fn run_var_selection(store: &SeriesStore, cfg: &VarSelectionConfig) -> Result<SelectionTable> {
    let frame = store.frame(&cfg.series)?;
    Ok(select_lag_order(&frame, cfg.max_lag, cfg.deterministic.to_lib())?)
}

#[derive(Debug, Clone)]
pub struct ResidualRow {
    pub kind: &'static str,
    pub result: EGResult,
}

#[derive(Debug, Clone)]
pub struct GHRun {
    pub dependent: String,
    pub regressor: String,
    pub result: GHResult,
}

#[derive(Debug, Clone)]
pub struct CointegrationStage {
    pub residual: Vec<ResidualRow>,
    pub johansen: JohansenResult,
    pub gh: Vec<GHRun>,
}

const GH_TRIMMING: f64 = 0.15;

pub fn run_cointegration(
    store: &SeriesStore,
    cfg: &CointegrationConfig,
    system: &[String],
) -> Result<CointegrationStage> {
    let det = cfg.eg_deterministic.to_lib();
    let mut residual = Vec::new();
    for pair in &cfg.pairs {
        let y = store.get(&pair[0])?;
        let x = store.get(&pair[1])?;
        for (kind, label) in [
            (ResidualKind::EngleGranger, "engle_granger"),
            (ResidualKind::PhillipsOuliaris, "phillips_ouliaris"),
        ] {
            residual.push(ResidualRow {
                kind: label,
                result: residual_cointegration_det(y, x, kind, det)?,
            });
        }
    }
    let frame = store.frame(system)?;
    let joh = johansen(&frame, cfg.johansen_lags, cfg.johansen_deterministic.to_lib())?;
    let mut gh = Vec::new();
    for pair in &cfg.pairs {
        let y = store.get(&pair[0])?;
        let x = store.get(&pair[1])?;
        for model in &cfg.gh_models {
            gh.push(GHRun {
                dependent: y.name.clone(),
                regressor: x.name.clone(),
                result: gregory_hansen(y, x, model.to_lib(), GH_TRIMMING)?,
            });
        }
    }
    Ok(CointegrationStage { residual, johansen: joh, gh })
}

/// Level-form estimates, error-correction form, bounds test, residual
/// diagnostics, and recursive-stability paths for one conditional model
/// (plus the reversed direction when configured).
#[derive(Debug, Clone)]
pub struct ArdlStage {
    pub fit: ArdlFit,
    pub bounds: BoundsResult,
    pub reverse: Option<(ArdlFit, BoundsResult)>,
    pub short_run: TestResult,
    pub diagnostics: Vec<(String, TestResult)>,
    pub cusum: CusumPath,
    pub cusumq: CusumPath,
    /// Date of the first estimation-sample observation.
    pub start: MonthStamp,
}

pub fn run_ardl(store: &SeriesStore, cfg: &ArdlConfig) -> Result<ArdlStage> {
    let y = store.get(&cfg.dependent)?;
    let xs = store.frame(&cfg.regressors)?;
    let criterion = cfg.criterion.to_lib();
    let case = cfg.case.to_lib();
    let fit = fit_ardl(y, &xs, cfg.max_p, cfg.max_q, criterion, case)?;
    let bounds = tsecon::ardl::bounds_test(&fit, cfg.bounds.to_lib())?;
    let reverse = if cfg.run_reverse {
        let ry = store.get(&cfg.regressors[0])?;
        let rx = store.frame(std::slice::from_ref(&cfg.dependent))?;
        let rfit = fit_ardl(ry, &rx, cfg.max_p, cfg.max_q, criterion, case)?;
        let rbounds = tsecon::ardl::bounds_test(&rfit, cfg.bounds.to_lib())?;
        Some((rfit, rbounds))
    } else {
        None
    };
    let short_run = short_run_causality(&fit)?;
    let lf = &fit.levels_fit;
    let mut diagnostics = Vec::new();
    diagnostics.push((
        format!("breusch_godfrey_{}", cfg.diagnostics_bg_lags),
        breusch_godfrey(lf, cfg.diagnostics_bg_lags, TestForm::F)?,
    ));
    diagnostics.push(("ramsey_reset_1".to_string(), ramsey_reset(lf, &[2])?));
    for (kind, label) in [
        (HetKind::Bpg, "breusch_pagan_godfrey"),
        (HetKind::White, "white"),
        (HetKind::Harvey, "harvey"),
        (HetKind::Glejser, "glejser"),
    ] {
        diagnostics.push((label.to_string(), het_test(lf, kind)?));
    }
    let resid: Vec<f64> = lf.residuals.iter().cloned().collect();
    diagnostics.push((
        format!("arch_{}", cfg.diagnostics_arch_lags),
        arch_lm(&resid, cfg.diagnostics_arch_lags, TestForm::F)?,
    ));
    let cusum_path = cusum(lf, CusumKind::Cusum, 0.05)?;
    let cusumq_path = cusum(lf, CusumKind::CusumQ, 0.05)?;
    let start = y.start.offset((y.len() - fit.t_obs) as i64);
    Ok(ArdlStage {
        fit,
        bounds,
        reverse,
        short_run,
        diagnostics,
        cusum: cusum_path,
        cusumq: cusumq_path,
        start,
    })
}

#[derive(Debug, Clone)]
pub struct CausalityStage {
    pub result: TYResult,
    pub portmanteau: TestResult,
    pub roots: StabilityRoots,
    pub resolved_k: usize,
    pub resolved_d_max: usize,
}

pub fn run_causality(
    store: &SeriesStore,
    cfg: &CausalityConfig,
    system: &[String],
    selection: Option<&SelectionTable>,
) -> Result<CausalityStage> {
    let frame = store.frame(system)?;
    let k = match cfg.k {
        AutoOrInt::Fixed(v) => v,
        AutoOrInt::Auto(_) => {
            let sel = selection.ok_or_else(|| {
                CliError::Config("causality.k = \"auto\" needs the var_selection stage".into())
            })?;
            sel.selected_aic
        }
    };
    let d_max = match cfg.d_max {
        AutoOrInt::Fixed(v) => v,
        AutoOrInt::Auto(_) => max_integration_order(&frame, 0.05)?,
    };
    let result = toda_yamamoto(&frame, k, d_max)?;
    let pmt = portmanteau(&result.fit, cfg.portmanteau_lags)?;
    let roots = stability_roots(&result.fit);
    Ok(CausalityStage {
        portmanteau: pmt,
        roots,
        resolved_k: k,
        resolved_d_max: d_max,
        result,
    })
}

#[derive(Debug, Clone)]
pub struct StructuralStage {
    pub irf: IrfPaths,
    pub fevd: FevdTable,
    pub hd: HDTable,
    /// Date of the first decomposed observation (frame start + presample).
    pub hd_start: MonthStamp,
}

pub fn run_structural(
    store: &SeriesStore,
    cfg: &StructuralConfig,
    system: &[String],
    ty: &TYResult,
    seed: u64,
) -> Result<StructuralStage> {
    let ordering: Vec<&str> = cfg.ordering.iter().map(|s| s.as_str()).collect();
    let method = cfg.irf_method.to_lib();
    // The generalized method is ordering free; the library rejects a
    // supplied ordering there, so only pass one for the factored method.
    let irf_ordering = match method {
        tsecon::structural::IrfMethod::Cholesky => Some(ordering.as_slice()),
        tsecon::structural::IrfMethod::Generalized => None,
    };
    let irf = match cfg.irf_bands {
        IrfBandChoice::Delta => impulse_response(&ty.fit, cfg.horizon, method, irf_ordering)?,
        IrfBandChoice::Bootstrap => impulse_response_mc(
            &ty.fit,
            cfg.horizon,
            method,
            irf_ordering,
            seed,
            cfg.bootstrap_replications,
        )?,
    };
    let fevd_table = fevd(&ty.fit, cfg.horizon, &ordering)?;
    let hd = historical_decomposition(&ty.fit)?;
    let frame = store.frame(system)?;
    let hd_start = frame.start().offset(hd.first_row as i64);
    Ok(StructuralStage { irf, fevd: fevd_table, hd, hd_start })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DetChoice;
    use tsecon::dataframe::MonthStamp;

    fn toy_frame() -> Frame {
        // Two positive, persistent series long enough for every stage.
        let start = MonthStamp::new(1995, 1).unwrap();
        let n = 180;
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let (mut xa, mut xb) = (3.0_f64, 1.5_f64);
        for t in 0..n {
            // Deterministic pseudo-noise, no RNG needed.
            let e1 = ((t * 37 % 17) as f64 - 8.0) / 40.0;
            let e2 = ((t * 53 % 23) as f64 - 11.0) / 60.0;
            xa = 0.2 + 0.9 * xa + e1;
            xb = 0.1 + 0.8 * xb + 0.15 * xa + e2;
            a.push(xa.exp() / 10.0 + 1.0);
            b.push(xb.exp() / 10.0 + 1.0);
        }
        Frame::new(vec![
            Series::new("dubai", start, a).unwrap(),
            Series::new("gasus", start, b).unwrap(),
        ])
        .unwrap()
    }

    fn store() -> SeriesStore {
        let cfg = TransformConfig {
            log: vec!["dubai".into(), "gasus".into()],
            diff: vec![],
            log_diff: vec!["dubai".into(), "gasus".into()],
        };
        SeriesStore::build(&toy_frame(), &cfg).unwrap()
    }

    #[test]
    fn store_exposes_raw_and_transformed_names() {
        let s = store();
        assert_eq!(s.get("dubai").unwrap().len(), 180);
        assert_eq!(s.get("ln_dubai").unwrap().len(), 180);
        assert_eq!(s.get("dln_gasus").unwrap().len(), 179);
        assert!(s.get("nope").is_err());
        let f = s.frame(&["ln_dubai".to_string(), "ln_gasus".to_string()]).unwrap();
        assert_eq!(f.len(), 180);
    }

    #[test]
    fn transform_name_collision_is_rejected() {
        let start = MonthStamp::new(1995, 1).unwrap();
        let frame = Frame::new(vec![
            Series::new("a", start, vec![1.0; 30]).unwrap(),
            Series::new("ln_a", start, vec![0.0; 30]).unwrap(),
        ])
        .unwrap();
        let cfg = TransformConfig {
            log: vec!["a".into()],
            diff: vec![],
            log_diff: vec![],
        };
        assert!(SeriesStore::build(&frame, &cfg).is_err());
    }

    #[test]
    fn descriptive_rows_carry_moments_and_screens() {
        let cfg = DescriptiveConfig {
            series: vec!["dln_dubai".into(), "dln_gasus".into()],
            lb_lags: 10,
            arch_lags: 10,
        };
        let rows = run_descriptive(&store(), &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].n, 179);
        assert!(rows[0].stdev > 0.0);
        assert!(rows[0].arch.p_value.is_some());
        assert!(rows[0].lb.statistic >= 0.0);
    }

    #[test]
    fn unitroot_battery_produces_ten_cells_per_series() {
        let cfg = UnitRootConfig {
            levels: vec!["ln_dubai".into()],
            returns: vec!["dln_dubai".into()],
            levels_deterministic: DetChoice::ConstantTrend,
            returns_deterministic: DetChoice::Constant,
        };
        let rows = run_unitroot(&store(), &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert_eq!(row.cells.len(), 10);
        }
        assert_eq!(rows[0].deterministic, "constant_trend");
        assert_eq!(rows[1].deterministic, "constant");
        // Break tests carry a date, standard tests do not.
        assert!(rows[0].cells[0].break_date.is_none());
        assert!(rows[0].cells[7].break_date.is_some());
    }

    #[test]
    fn causality_resolves_auto_settings() {
        let s = store();
        let system = vec!["ln_dubai".to_string(), "ln_gasus".to_string()];
        let sel = run_var_selection(
            &s,
            &VarSelectionConfig {
                series: system.clone(),
                max_lag: 4,
                deterministic: crate::config::VarDetChoice::Constant,
            },
        )
        .unwrap();
        let cfg = CausalityConfig {
            k: AutoOrInt::Auto(crate::config::AutoTag::Auto),
            d_max: AutoOrInt::Fixed(1),
            portmanteau_lags: 6,
        };
        let stage = run_causality(&s, &cfg, &system, Some(&sel)).unwrap();
        assert_eq!(stage.resolved_k, sel.selected_aic);
        assert_eq!(stage.result.fit.extra_exog_lags, 1);
        assert_eq!(stage.result.directions.len(), 2);

        let auto_needs_selection = run_causality(&s, &cfg, &system, None);
        assert!(auto_needs_selection.is_err());
    }
}
