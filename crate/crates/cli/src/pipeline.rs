//! Pipeline orchestration: load data, run stages with failure isolation,
//! render artifacts, and write the bundle with its manifest. Stage failures
//! are recorded and do not abort unrelated stages; a stage whose input stage
//! failed is marked skipped.

use crate::config::{AutoOrInt, IrfBandChoice, PipelineConfig};
use crate::report::{
    opt, sha256_hex, sig6, starred, write_file, ArtifactRecord, DataRecord, Generator, Manifest,
    ResolvedSettings, StageRecord, TableArtifact,
};
use crate::stages::{
    run_ardl, run_causality, run_cointegration, run_descriptive, run_structural, run_unitroot,
    run_var_selection, ArdlStage, CausalityStage, CointegrationStage, DescriptiveRow, SeriesStore,
    StructuralStage, UnitRootRow,
};
use crate::{CliError, Result};
use std::path::{Path, PathBuf};
use tsecon::ardl::{ArdlFit, BoundsResult};
use tsecon::dataframe::{load_csv, Frame};
use tsecon::linreg::{CovarianceKind, Distribution, TestResult};
use tsecon::varmodel::{Criterion, SelectionTable};

/// Environment variable that redirects relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "TSECON_OUTPUT_ROOT";

#[derive(Debug)]
pub struct PipelineOutcome {
    pub frame: Frame,
    pub store: SeriesStore,
    pub descriptive: Option<Vec<DescriptiveRow>>,
    pub unitroot: Option<Vec<UnitRootRow>>,
    pub selection: Option<SelectionTable>,
    pub cointegration: Option<CointegrationStage>,
    pub ardl: Option<ArdlStage>,
    pub causality: Option<CausalityStage>,
    pub structural: Option<StructuralStage>,
    pub stages: Vec<StageRecord>,
    pub resolved: ResolvedSettings,
}

impl PipelineOutcome {
    pub fn failed_stages(&self) -> Vec<&StageRecord> {
        self.stages.iter().filter(|s| s.status == "failed").collect()
    }
}

fn record(stages: &mut Vec<StageRecord>, name: &str, status: &str, message: Option<String>) {
    stages.push(StageRecord {
        name: name.to_string(),
        status: status.to_string(),
        message,
    });
}

/// Runs every stage over an already loaded frame. Only store construction
/// (bad transform config) is a hard error; individual stage failures are
/// recorded in the outcome.
pub fn run_stages(frame: Frame, cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    let store = SeriesStore::build(&frame, &cfg.transforms)?;
    let mut stages = Vec::new();
    let mut resolved = ResolvedSettings::default();

    let descriptive = match run_descriptive(&store, &cfg.descriptive) {
        Ok(v) => {
            record(&mut stages, "descriptive", "ok", None);
            Some(v)
        }
        Err(e) => {
            record(&mut stages, "descriptive", "failed", Some(e.to_string()));
            None
        }
    };

    let unitroot = match run_unitroot(&store, &cfg.unitroot) {
        Ok(v) => {
            record(&mut stages, "unitroot", "ok", None);
            Some(v)
        }
        Err(e) => {
            record(&mut stages, "unitroot", "failed", Some(e.to_string()));
            None
        }
    };

    let selection = match run_var_selection(&store, &cfg.var_selection) {
        Ok(v) => {
            record(&mut stages, "var_selection", "ok", None);
            Some(v)
        }
        Err(e) => {
            record(&mut stages, "var_selection", "failed", Some(e.to_string()));
            None
        }
    };

    let system = &cfg.var_selection.series;

    let cointegration = match run_cointegration(&store, &cfg.cointegration, system) {
        Ok(v) => {
            record(&mut stages, "cointegration", "ok", None);
            Some(v)
        }
        Err(e) => {
            record(&mut stages, "cointegration", "failed", Some(e.to_string()));
            None
        }
    };

    let ardl = match run_ardl(&store, &cfg.ardl) {
        Ok(v) => {
            record(&mut stages, "ardl", "ok", None);
            resolved.ardl_spec = Some(v.fit.spec.label());
            resolved.ardl_reverse_spec = v.reverse.as_ref().map(|(f, _)| f.spec.label());
            resolved.bounds_source = Some(v.bounds.source.label().to_string());
            resolved.bounds_note = v.bounds.note.clone();
            if let CovarianceKind::Hac { bandwidth } = v.fit.levels_fit.covariance_kind {
                resolved.hac_bandwidth = Some(bandwidth);
            }
            Some(v)
        }
        Err(e) => {
            record(&mut stages, "ardl", "failed", Some(e.to_string()));
            None
        }
    };

    let needs_selection =
        matches!(cfg.causality.k, AutoOrInt::Auto(_)) && selection.is_none();
    let causality = if needs_selection {
        record(
            &mut stages,
            "causality",
            "skipped",
            Some("var_selection failed and causality.k is auto".into()),
        );
        None
    } else {
        match run_causality(&store, &cfg.causality, system, selection.as_ref()) {
            Ok(v) => {
                record(&mut stages, "causality", "ok", None);
                resolved.causality_k = Some(v.resolved_k);
                resolved.causality_d_max = Some(v.resolved_d_max);
                Some(v)
            }
            Err(e) => {
                record(&mut stages, "causality", "failed", Some(e.to_string()));
                None
            }
        }
    };

    let structural = match &causality {
        None => {
            record(
                &mut stages,
                "structural",
                "skipped",
                Some("causality stage did not produce a system fit".into()),
            );
            None
        }
        Some(c) => match run_structural(&store, &cfg.structural, system, &c.result, cfg.seed) {
            Ok(v) => {
                record(&mut stages, "structural", "ok", None);
                resolved.irf_method = Some(
                    match cfg.structural.irf_bands {
                        IrfBandChoice::Delta => format!("{}+delta", v.irf.method.label()),
                        IrfBandChoice::Bootstrap => format!("{}+bootstrap", v.irf.method.label()),
                    },
                );
                Some(v)
            }
            Err(e) => {
                record(&mut stages, "structural", "failed", Some(e.to_string()));
                None
            }
        },
    };

    Ok(PipelineOutcome {
        frame,
        store,
        descriptive,
        unitroot,
        selection,
        cointegration,
        ardl,
        causality,
        structural,
        stages,
        resolved,
    })
}

pub fn load_data(cfg: &PipelineConfig, base_dir: &Path) -> Result<(Frame, String)> {
    let path = resolve_path(&cfg.data.path, base_dir);
    let bytes =
        std::fs::read(&path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let sha = sha256_hex(&bytes);
    let cols: Vec<&str> = cfg.data.value_columns.iter().map(|s| s.as_str()).collect();
    let frame = load_csv(&path, &cfg.data.date_column, &cols)?;
    Ok((frame, sha))
}

fn resolve_path(p: &str, base: &Path) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Bundle directory for a config: absolute `output.dir` is taken as is;
/// relative dirs live under the output root (environment override) or the
/// config's own directory.
pub fn bundle_dir(cfg: &PipelineConfig, config_dir: &Path) -> PathBuf {
    let dir = Path::new(&cfg.output.dir);
    if dir.is_absolute() {
        return dir.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) => PathBuf::from(root).join(dir),
        None => config_dir.join(dir),
    }
}

fn df_fields(t: &TestResult) -> (String, String) {
    match t.distribution {
        Distribution::Chi2(d) => (d.to_string(), String::new()),
        Distribution::F(d1, d2) => (d1.to_string(), d2.to_string()),
        Distribution::StudentT(d) => (d.to_string(), String::new()),
        Distribution::Normal => (String::new(), String::new()),
        Distribution::Table(_) => (String::new(), String::new()),
    }
}

fn table1(rows: &[DescriptiveRow]) -> TableArtifact {
    let mut t = TableArtifact::new(
        "table1.csv",
        &[
            "series",
            "n",
            "mean",
            "stdev",
            "skewness",
            "kurtosis",
            "jarque_bera",
            "arch_f",
            "ljung_box",
            "ljung_box_sq",
        ],
    );
    for r in rows {
        t.push(vec![
            r.series.clone(),
            r.n.to_string(),
            sig6(r.mean),
            sig6(r.stdev),
            starred(r.skewness, r.skew_star),
            starred(r.kurtosis, r.kurt_star),
            starred(r.jarque_bera, r.jb_star),
            starred(r.arch.statistic, r.arch.rejects_at(0.05)),
            starred(r.lb.statistic, r.lb.rejects_at(0.05)),
            starred(r.lb_sq.statistic, r.lb_sq.rejects_at(0.05)),
        ]);
    }
    t
}

fn table2(rows: &[UnitRootRow]) -> (TableArtifact, TableArtifact) {
    let mut names: Vec<&str> = vec!["series", "deterministic"];
    if let Some(first) = rows.first() {
        names.extend(first.cells.iter().map(|c| c.test));
    }
    let mut main = TableArtifact::new("table2.csv", &names);
    let mut breaks =
        TableArtifact::new("table2_breaks.csv", &["series", "test", "break_date"]);
    for r in rows {
        let mut row = vec![r.series.clone(), r.deterministic.to_string()];
        for c in &r.cells {
            row.push(starred(c.statistic, c.star));
            if let Some(bd) = c.break_date {
                breaks.push(vec![r.series.clone(), c.test.to_string(), bd.to_string()]);
            }
        }
        main.push(row);
    }
    (main, breaks)
}

fn table3(sel: &SelectionTable) -> TableArtifact {
    let mut t = TableArtifact::new(
        "table3.csv",
        &["lag", "loglik", "lr", "fpe", "aic", "sc", "hq"],
    );
    for row in &sel.rows {
        let lr_cell = match row.lr {
            None => String::new(),
            Some(v) => starred(v, sel.starred(Criterion::Lr, row.lag)),
        };
        t.push(vec![
            row.lag.to_string(),
            sig6(row.loglik),
            lr_cell,
            starred(row.fpe, sel.starred(Criterion::Fpe, row.lag)),
            starred(row.aic, sel.starred(Criterion::Aic, row.lag)),
            starred(row.sc, sel.starred(Criterion::Sc, row.lag)),
            starred(row.hq, sel.starred(Criterion::Hq, row.lag)),
        ]);
    }
    t
}

const TABLE4_COLUMNS: [&str; 10] = [
    "panel",
    "test",
    "hypothesis",
    "model",
    "statistic",
    "value",
    "p_value",
    "cv_5pct",
    "break_date",
    "star",
];

fn table4(c: &CointegrationStage) -> TableArtifact {
    let mut t = TableArtifact::new("table4.csv", &TABLE4_COLUMNS);
    for r in &c.residual {
        let (p_tau, p_z) = r.result.p_values;
        for (stat_name, value, p) in [
            ("tau", r.result.tau_statistic, p_tau),
            ("z", r.result.z_statistic, p_z),
        ] {
            t.push(vec![
                "residual".into(),
                r.kind.into(),
                format!("dependent {}", r.result.dependent),
                String::new(),
                stat_name.into(),
                sig6(value),
                sig6(p),
                String::new(),
                String::new(),
                if p < 0.05 { "*".into() } else { String::new() },
            ]);
        }
    }
    let j = &c.johansen;
    for r in 0..j.trace.len() {
        let hyp = if r == 0 { "r=0".to_string() } else { format!("r<={r}") };
        t.push(vec![
            "johansen".into(),
            "eigenvalue".into(),
            hyp.clone(),
            j.det_case.case_label().into(),
            "eigenvalue".into(),
            sig6(j.eigenvalues[r]),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]);
        for (stat_name, value, cv, p) in [
            ("trace", j.trace[r], j.trace_cv_5pct[r], j.trace_p_values[r]),
            (
                "max_eigen",
                j.max_eigen[r],
                j.max_eigen_cv_5pct[r],
                j.max_eigen_p_values[r],
            ),
        ] {
            t.push(vec![
                "johansen".into(),
                stat_name.into(),
                hyp.clone(),
                j.det_case.case_label().into(),
                stat_name.into(),
                sig6(value),
                sig6(p),
                sig6(cv),
                String::new(),
                if p < 0.05 { "*".into() } else { String::new() },
            ]);
        }
    }
    for run in &c.gh {
        let g = &run.result;
        for (stat_name, stat, z_family) in [
            ("adf", &g.adf_star, false),
            ("zt", &g.zt_star, false),
            ("za", &g.za_star, true),
        ] {
            let cv = cv_at(
                if z_family { &g.z_critical_values } else { &g.t_critical_values },
                0.05,
            );
            t.push(vec![
                "gregory_hansen".into(),
                stat_name.into(),
                format!("dependent {}", run.dependent),
                g.model.case_label().into(),
                stat_name.into(),
                sig6(stat.statistic),
                String::new(),
                opt(cv),
                stat.break_date.to_string(),
                if g.rejects_at(stat.statistic, z_family, 0.05) {
                    "*".into()
                } else {
                    String::new()
                },
            ]);
        }
    }
    t
}

fn cv_at(rows: &[(f64, f64)], level: f64) -> Option<f64> {
    rows.iter()
        .find(|(l, _)| (l - level).abs() < 1e-9)
        .map(|(_, v)| *v)
}

const COEF_COLUMNS: [&str; 5] = ["variable", "coefficient", "std_error", "t_statistic", "p_value"];

fn coefficient_rows(t: &mut TableArtifact, fit: &tsecon::linreg::OlsFit) {
    let se = fit.std_errors();
    let ts = fit.t_stats();
    let ps = fit.p_values();
    for i in 0..fit.k {
        t.push(vec![
            fit.names[i].clone(),
            sig6(fit.coefficients[i]),
            sig6(se[i]),
            sig6(ts[i]),
            sig6(ps[i]),
        ]);
    }
}

fn summary_rows(t: &mut TableArtifact, fit: &tsecon::linreg::OlsFit) {
    for (label, value) in [
        ("r_squared", fit.r_squared),
        ("ssr", fit.ssr),
        ("log_likelihood", fit.loglik),
        ("aic", fit.aic),
        ("sc", fit.sc),
        ("hq", fit.hq),
        ("n_obs", fit.n as f64),
    ] {
        t.push(vec![
            label.to_string(),
            sig6(value),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
}

fn table5(a: &ArdlStage) -> TableArtifact {
    let mut t = TableArtifact::new("table5.csv", &COEF_COLUMNS);
    coefficient_rows(&mut t, &a.fit.levels_fit);
    summary_rows(&mut t, &a.fit.levels_fit);
    t
}

fn table6(a: &ArdlStage) -> TableArtifact {
    let mut t = TableArtifact::new("table6.csv", &COEF_COLUMNS);
    coefficient_rows(&mut t, &a.fit.ec_fit);
    for lr in &a.fit.long_run {
        t.push(vec![
            format!("long_run:{}", lr.name),
            sig6(lr.estimate),
            sig6(lr.std_error),
            sig6(lr.t_stat),
            String::new(),
        ]);
    }
    summary_rows(&mut t, &a.fit.ec_fit);
    t
}

fn bounds_rows(t: &mut TableArtifact, direction: &str, fit: &ArdlFit, b: &BoundsResult) {
    for (stat_name, value, rows) in [
        ("f", b.f_statistic, &b.f_bounds),
        ("t", b.t_statistic, &b.t_bounds),
    ] {
        for (level, (i0, i1)) in rows {
            t.push(vec![
                direction.to_string(),
                fit.spec.label(),
                fit.spec.case.label().to_string(),
                stat_name.to_string(),
                sig6(value),
                sig6(*level),
                sig6(*i0),
                sig6(*i1),
                b.source.label().to_string(),
                b.verdict.label().to_string(),
                b.note.clone().unwrap_or_default(),
            ]);
        }
    }
}

fn bounds_table(a: &ArdlStage) -> TableArtifact {
    let mut t = TableArtifact::new(
        "bounds.csv",
        &[
            "direction",
            "spec",
            "case",
            "statistic",
            "value",
            "level",
            "i0",
            "i1",
            "source",
            "verdict",
            "note",
        ],
    );
    let fwd = format!("{}|{}", a.fit.y_name, a.fit.x_names.join(","));
    bounds_rows(&mut t, &fwd, &a.fit, &a.bounds);
    if let Some((rfit, rbounds)) = &a.reverse {
        let rev = format!("{}|{}", rfit.y_name, rfit.x_names.join(","));
        bounds_rows(&mut t, &rev, rfit, rbounds);
    }
    t
}

fn diagnostics_table(a: &ArdlStage, causality: Option<&CausalityStage>) -> TableArtifact {
    let mut t = TableArtifact::new(
        "diagnostics.csv",
        &["scope", "test", "statistic", "df1", "df2", "p_value", "star"],
    );
    let mut push = |scope: &str, name: &str, r: &TestResult| {
        let (df1, df2) = df_fields(r);
        t.push(vec![
            scope.to_string(),
            name.to_string(),
            sig6(r.statistic),
            df1,
            df2,
            opt(r.p_value),
            if r.rejects_at(0.05) { "*".into() } else { String::new() },
        ]);
    };
    for (name, r) in &a.diagnostics {
        push("ardl", name, r);
    }
    push("ardl", "short_run_wald", &a.short_run);
    push(
        "ardl",
        "cusum_within_bands",
        &band_pseudo_test(a.cusum.inside_bands()),
    );
    push(
        "ardl",
        "cusumq_within_bands",
        &band_pseudo_test(a.cusumq.inside_bands()),
    );
    if let Some(c) = causality {
        push("var", "portmanteau", &c.portmanteau);
    }
    t
}

/// Encodes a band-containment check as a degenerate test row: statistic 1
/// when the path stays inside its bands, 0 otherwise.
fn band_pseudo_test(inside: bool) -> TestResult {
    TestResult {
        statistic: if inside { 1.0 } else { 0.0 },
        distribution: Distribution::Table("indicator".into()),
        p_value: None,
        critical_values: Vec::new(),
        reject_at: Vec::new(),
        tail: tsecon::criticalvalues::Tail::Upper,
    }
}

fn table7(c: &CausalityStage) -> TableArtifact {
    let mut t = TableArtifact::new(
        "table7.csv",
        &["cause", "effect", "chi_sq", "df", "p_value", "star"],
    );
    for d in &c.result.directions {
        let (df1, _) = df_fields(&d.test);
        t.push(vec![
            d.cause.clone(),
            d.effect.clone(),
            sig6(d.test.statistic),
            df1,
            opt(d.test.p_value),
            if d.test.rejects_at(0.05) { "*".into() } else { String::new() },
        ]);
    }
    t
}

fn fig2(a: &ArdlStage) -> TableArtifact {
    let mut t = TableArtifact::new(
        "fig2_cusum.csv",
        &["kind", "observation", "date", "statistic", "lower", "upper"],
    );
    for (kind, path) in [("cusum", &a.cusum), ("cusumq", &a.cusumq)] {
        for i in 0..path.statistic.len() {
            let obs = path.observation[i];
            t.push(vec![
                kind.to_string(),
                obs.to_string(),
                a.start.offset(obs as i64 - 1).to_string(),
                sig6(path.statistic[i]),
                sig6(path.lower_band[i]),
                sig6(path.upper_band[i]),
            ]);
        }
    }
    t
}

fn fig3(c: &CausalityStage) -> TableArtifact {
    let mut t = TableArtifact::new(
        "fig3_roots.csv",
        &["index", "real", "imaginary", "modulus"],
    );
    for (i, (re, im)) in c.roots.roots.iter().enumerate() {
        t.push(vec![
            (i + 1).to_string(),
            sig6(*re),
            sig6(*im),
            sig6(c.roots.moduli[i]),
        ]);
    }
    t
}

fn fig4(s: &StructuralStage) -> TableArtifact {
    let mut t = TableArtifact::new(
        "fig4_irf.csv",
        &["method", "shock", "variable", "horizon", "response", "lower", "upper"],
    );
    let irf = &s.irf;
    for (j, shock) in irf.shock_names.iter().enumerate() {
        for (i, var) in irf.variable_names.iter().enumerate() {
            for h in 0..irf.horizon {
                t.push(vec![
                    irf.method.label().to_string(),
                    shock.clone(),
                    var.clone(),
                    h.to_string(),
                    sig6(irf.responses[j][i][h]),
                    sig6(irf.lower[j][i][h]),
                    sig6(irf.upper[j][i][h]),
                ]);
            }
        }
    }
    t
}

fn fig5_fevd(s: &StructuralStage) -> TableArtifact {
    let mut t = TableArtifact::new(
        "fig5_fevd.csv",
        &["variable", "horizon", "shock", "share"],
    );
    let f = &s.fevd;
    for (i, var) in f.variable_names.iter().enumerate() {
        for h in 0..f.horizon {
            for (j, shock) in f.shock_names.iter().enumerate() {
                t.push(vec![
                    var.clone(),
                    (h + 1).to_string(),
                    shock.clone(),
                    sig6(f.shares[i][h][j]),
                ]);
            }
        }
    }
    t
}

fn fig5_hd(s: &StructuralStage) -> TableArtifact {
    let mut t = TableArtifact::new(
        "fig5_hd.csv",
        &["variable", "component", "date", "value"],
    );
    let hd = &s.hd;
    for (i, var) in hd.variable_names.iter().enumerate() {
        let t_len = hd.observed[i].len();
        for ti in 0..t_len {
            let date = s.hd_start.offset(ti as i64).to_string();
            t.push(vec![
                var.clone(),
                "observed".into(),
                date.clone(),
                sig6(hd.observed[i][ti]),
            ]);
            t.push(vec![
                var.clone(),
                "baseline".into(),
                date.clone(),
                sig6(hd.baseline[i][ti]),
            ]);
            for (j, shock) in hd.shock_names.iter().enumerate() {
                t.push(vec![
                    var.clone(),
                    format!("shock:{shock}"),
                    date.clone(),
                    sig6(hd.contributions[i][j][ti]),
                ]);
            }
        }
    }
    t
}

/// Renders every artifact the completed stages allow. Order is fixed.
pub fn render_artifacts(outcome: &PipelineOutcome) -> Vec<TableArtifact> {
    let mut artifacts = Vec::new();
    if let Some(rows) = &outcome.descriptive {
        artifacts.push(table1(rows));
    }
    if let Some(rows) = &outcome.unitroot {
        let (main, breaks) = table2(rows);
        artifacts.push(main);
        artifacts.push(breaks);
    }
    if let Some(sel) = &outcome.selection {
        artifacts.push(table3(sel));
    }
    if let Some(c) = &outcome.cointegration {
        artifacts.push(table4(c));
    }
    if let Some(a) = &outcome.ardl {
        artifacts.push(table5(a));
        artifacts.push(table6(a));
        artifacts.push(bounds_table(a));
        artifacts.push(diagnostics_table(a, outcome.causality.as_ref()));
        artifacts.push(fig2(a));
    }
    if let Some(c) = &outcome.causality {
        artifacts.push(table7(c));
        artifacts.push(fig3(c));
    }
    if let Some(s) = &outcome.structural {
        artifacts.push(fig4(s));
        artifacts.push(fig5_fevd(s));
        artifacts.push(fig5_hd(s));
    }
    artifacts
}

pub fn write_bundle(
    outcome: &PipelineOutcome,
    cfg: &PipelineConfig,
    data_sha: &str,
    dir: &Path,
) -> Result<Manifest> {
    let artifacts = render_artifacts(outcome);
    let mut records = Vec::with_capacity(artifacts.len());
    for a in &artifacts {
        let bytes = a.to_csv().into_bytes();
        write_file(&dir.join(&a.name), &bytes)?;
        records.push(ArtifactRecord {
            name: a.name.clone(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len(),
        });
    }
    let manifest = Manifest {
        generator: Generator {
            name: "tsecon".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
        seed: cfg.seed,
        data: DataRecord {
            path: cfg.data.path.clone(),
            sha256: data_sha.to_string(),
            rows: outcome.frame.len(),
            start: outcome.frame.start().to_string(),
            end: outcome
                .frame
                .start()
                .offset(outcome.frame.len() as i64 - 1)
                .to_string(),
        },
        resolved: outcome.resolved.clone(),
        stages: outcome.stages.clone(),
        artifacts: records,
        config: serde_json::to_value(cfg).expect("config reserialization"),
    };
    write_file(&dir.join("manifest.json"), manifest.to_json().as_bytes())?;
    Ok(manifest)
}

/// Full run: parse config, load data, run stages, write the bundle.
/// Returns the manifest, the bundle directory, and the stage records.
pub fn run_config_file(config_path: &Path) -> Result<(Manifest, PathBuf, PipelineOutcome)> {
    let (cfg, _text) = PipelineConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let (frame, sha) = load_data(&cfg, base)?;
    let outcome = run_stages(frame, &cfg)?;
    let dir = bundle_dir(&cfg, base);
    let manifest = write_bundle(&outcome, &cfg, &sha, &dir)?;
    Ok((manifest, dir, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PipelineConfig;
    use std::io::Write;

    fn write_toy_csv(dir: &Path) -> PathBuf {
        let path = dir.join("prices.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "date,dubai,gasus").unwrap();
        let (mut xa, mut xb) = (3.0_f64, 1.5_f64);
        let mut stamp = tsecon::dataframe::MonthStamp::new(1995, 1).unwrap();
        for t in 0..170 {
            let e1 = ((t * 37 % 17) as f64 - 8.0) / 40.0;
            let e2 = ((t * 53 % 23) as f64 - 11.0) / 60.0;
            xa = 0.2 + 0.9 * xa + e1;
            xb = 0.1 + 0.8 * xb + 0.15 * xa + e2;
            writeln!(
                f,
                "{},{:.6},{:.6}",
                stamp,
                xa.exp() / 10.0 + 1.0,
                xb.exp() / 10.0 + 1.0
            )
            .unwrap();
            stamp = stamp.next();
        }
        path
    }

    fn toy_config(data_path: &str, out_dir: &str) -> String {
        format!(
            r#"
schema_version = 1
seed = 7

[data]
path = "{data_path}"
date_column = "date"
value_columns = ["dubai", "gasus"]

[transforms]
log = ["dubai", "gasus"]
log_diff = ["dubai", "gasus"]

[descriptive]
series = ["dln_dubai", "dln_gasus"]
lb_lags = 10
arch_lags = 10

[unitroot]
levels = ["ln_dubai", "ln_gasus"]
returns = ["dln_dubai", "dln_gasus"]
levels_deterministic = "constant_trend"
returns_deterministic = "constant"

[var_selection]
series = ["ln_dubai", "ln_gasus"]
max_lag = 4
deterministic = "constant_trend"

[cointegration]
pairs = [["ln_gasus", "ln_dubai"], ["ln_dubai", "ln_gasus"]]
eg_deterministic = "none"
johansen_lags = 2
johansen_deterministic = "none"
gh_models = ["level", "regime"]

[ardl]
dependent = "ln_gasus"
regressors = ["ln_dubai"]
max_p = 3
max_q = 3
criterion = "aic"
case = "i"
bounds = "pesaran_asymptotic"
run_reverse = true
diagnostics_bg_lags = 6
diagnostics_arch_lags = 10

[causality]
k = "auto"
d_max = "auto"
portmanteau_lags = 6

[structural]
horizon = 12
ordering = ["ln_dubai", "ln_gasus"]
irf_method = "cholesky"
irf_bands = "delta"

[output]
dir = "{out_dir}"
"#
        )
    }

    #[test]
    fn full_pipeline_writes_every_artifact_and_is_deterministic() {
        let tmp = tempfile::tempdir().unwrap();
        write_toy_csv(tmp.path());
        let config_path = tmp.path().join("run.toml");
        std::fs::write(&config_path, toy_config("prices.csv", "out/a")).unwrap();

        let (manifest, dir, outcome) = run_config_file(&config_path).unwrap();
        assert!(outcome.failed_stages().is_empty(), "{:?}", outcome.stages);
        let expected = [
            "table1.csv",
            "table2.csv",
            "table2_breaks.csv",
            "table3.csv",
            "table4.csv",
            "table5.csv",
            "table6.csv",
            "bounds.csv",
            "diagnostics.csv",
            "fig2_cusum.csv",
            "table7.csv",
            "fig3_roots.csv",
            "fig4_irf.csv",
            "fig5_fevd.csv",
            "fig5_hd.csv",
        ];
        let written: Vec<&str> = manifest.artifacts.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(written, expected);
        for a in &expected {
            assert!(dir.join(a).exists(), "{a} missing");
        }
        assert!(dir.join("manifest.json").exists());
        assert_eq!(manifest.data.rows, 170);
        assert_eq!(manifest.resolved.causality_k, outcome.causality.as_ref().map(|c| c.resolved_k).unwrap().into());

        // Second run over the same inputs produces byte-identical artifacts.
        let config_b = tmp.path().join("run_b.toml");
        std::fs::write(&config_b, toy_config("prices.csv", "out/b")).unwrap();
        let (manifest_b, _dir_b, _) = run_config_file(&config_b).unwrap();
        for (a, b) in manifest.artifacts.iter().zip(manifest_b.artifacts.iter()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.sha256, b.sha256, "artifact {} changed", a.name);
        }
    }

    #[test]
    fn stage_failures_are_isolated() {
        let tmp = tempfile::tempdir().unwrap();
        write_toy_csv(tmp.path());
        let config_path = tmp.path().join("run.toml");
        // Descriptive stage references a missing series; everything else is
        // intact and must still run.
        let broken = toy_config("prices.csv", "out/c")
            .replace("series = [\"dln_dubai\", \"dln_gasus\"]\nlb_lags", "series = [\"missing\"]\nlb_lags");
        std::fs::write(&config_path, broken).unwrap();
        let (manifest, dir, outcome) = run_config_file(&config_path).unwrap();
        let failed = outcome.failed_stages();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].name, "descriptive");
        assert!(!dir.join("table1.csv").exists());
        assert!(dir.join("table3.csv").exists());
        assert!(manifest.stages.iter().any(|s| s.name == "causality" && s.status == "ok"));
    }

    #[test]
    fn output_root_env_redirects_relative_dirs() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::parse(&toy_config("prices.csv", "out/x")).unwrap();
        // Env-var handling is process-global; compute both forms directly.
        let without = bundle_dir(&cfg, tmp.path());
        assert_eq!(without, tmp.path().join("out/x"));
        std::env::set_var(OUTPUT_ROOT_ENV, tmp.path().join("root"));
        let with = bundle_dir(&cfg, tmp.path());
        std::env::remove_var(OUTPUT_ROOT_ENV);
        assert_eq!(with, tmp.path().join("root").join("out/x"));
    }
}
