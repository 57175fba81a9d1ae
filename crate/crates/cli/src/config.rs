//! Pipeline configuration. The TOML schema is strict: unknown keys anywhere
//! are errors, so a typo cannot silently fall back to a default.

use crate::{CliError, Result};
use serde::{Deserialize, Serialize};
use tsecon::ardl::{ArdlCase, BoundsSource, SelectCriterion};
use tsecon::cointegration::{GHModel, JohansenDet};
use tsecon::structural::IrfMethod;
use tsecon::unitroot::Deterministic;
use tsecon::varmodel::VarDeterministic;

/// A setting that is either pinned to an integer or resolved automatically
/// by the pipeline (the resolved value is recorded in the manifest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum AutoOrInt {
    Auto(AutoTag),
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl AutoOrInt {
    pub fn fixed(&self) -> Option<usize> {
        match self {
            AutoOrInt::Auto(_) => None,
            AutoOrInt::Fixed(v) => Some(*v),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    /// Recorded in the manifest; consumed only by stages that simulate
    /// (bootstrap impulse-response bands).
    pub seed: u64,
    pub data: DataConfig,
    pub transforms: TransformConfig,
    pub descriptive: DescriptiveConfig,
    pub unitroot: UnitRootConfig,
    pub var_selection: VarSelectionConfig,
    pub cointegration: CointegrationConfig,
    pub ardl: ArdlConfig,
    pub causality: CausalityConfig,
    pub structural: StructuralConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: String,
    pub date_column: String,
    pub value_columns: Vec<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    /// Columns to log: adds `ln_<name>`.
    #[serde(default)]
    pub log: Vec<String>,
    /// Columns to first-difference: adds `d_<name>`.
    #[serde(default)]
    pub diff: Vec<String>,
    /// Columns to log-difference: adds `dln_<name>`.
    #[serde(default)]
    pub log_diff: Vec<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptiveConfig {
    pub series: Vec<String>,
    pub lb_lags: usize,
    pub arch_lags: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct UnitRootConfig {
    pub levels: Vec<String>,
    pub returns: Vec<String>,
    pub levels_deterministic: DetChoice,
    pub returns_deterministic: DetChoice,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VarSelectionConfig {
    pub series: Vec<String>,
    pub max_lag: usize,
    pub deterministic: VarDetChoice,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CointegrationConfig {
    /// (dependent, regressor) pairs for the residual-based tests.
    pub pairs: Vec<[String; 2]>,
    pub eg_deterministic: DetChoice,
    pub johansen_lags: usize,
    pub johansen_deterministic: JohansenChoice,
    pub gh_models: Vec<GHModelChoice>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ArdlConfig {
    pub dependent: String,
    pub regressors: Vec<String>,
    pub max_p: usize,
    pub max_q: usize,
    pub criterion: CriterionChoice,
    pub case: CaseChoice,
    pub bounds: BoundsChoice,
    /// Also estimate the model with dependent and regressor swapped
    /// (only meaningful with a single regressor).
    #[serde(default)]
    pub run_reverse: bool,
    pub diagnostics_bg_lags: usize,
    pub diagnostics_arch_lags: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CausalityConfig {
    /// VAR order for the causality system; "auto" takes the AIC selection
    /// from the var_selection stage.
    pub k: AutoOrInt,
    /// Extra exogenous lags; "auto" uses the estimated maximum integration
    /// order of the system variables.
    pub d_max: AutoOrInt,
    pub portmanteau_lags: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StructuralConfig {
    pub horizon: usize,
    /// Cholesky ordering, first = most exogenous.
    pub ordering: Vec<String>,
    pub irf_method: IrfMethodChoice,
    pub irf_bands: IrfBandChoice,
    #[serde(default = "default_replications")]
    pub bootstrap_replications: usize,
}

fn default_replications() -> usize {
    500
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Bundle directory, relative to the config file unless absolute.
    /// The TSECON_OUTPUT_ROOT environment variable, when set, replaces the
    /// base directory for relative paths.
    pub dir: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetChoice {
    None,
    Constant,
    ConstantTrend,
}

impl DetChoice {
    pub fn to_lib(self) -> Deterministic {
        match self {
            DetChoice::None => Deterministic::None,
            DetChoice::Constant => Deterministic::Constant,
            DetChoice::ConstantTrend => Deterministic::ConstantTrend,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarDetChoice {
    Constant,
    ConstantTrend,
}

impl VarDetChoice {
    pub fn to_lib(self) -> VarDeterministic {
        match self {
            VarDetChoice::Constant => VarDeterministic::Constant,
            VarDetChoice::ConstantTrend => VarDeterministic::ConstantTrend,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JohansenChoice {
    None,
    RestrictedConstant,
    UnrestrictedConstant,
    RestrictedTrend,
    UnrestrictedTrend,
}

impl JohansenChoice {
    pub fn to_lib(self) -> JohansenDet {
        match self {
            JohansenChoice::None => JohansenDet::None,
            JohansenChoice::RestrictedConstant => JohansenDet::RestrictedConstant,
            JohansenChoice::UnrestrictedConstant => JohansenDet::UnrestrictedConstant,
            JohansenChoice::RestrictedTrend => JohansenDet::RestrictedTrend,
            JohansenChoice::UnrestrictedTrend => JohansenDet::UnrestrictedTrend,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GHModelChoice {
    Level,
    Trend,
    Regime,
    RegimeTrend,
}

impl GHModelChoice {
    pub fn to_lib(self) -> GHModel {
        match self {
            GHModelChoice::Level => GHModel::BreakLevel,
            GHModelChoice::Trend => GHModel::BreakTrend,
            GHModelChoice::Regime => GHModel::BreakRegime,
            GHModelChoice::RegimeTrend => GHModel::BreakRegimeTrend,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionChoice {
    Aic,
    Sc,
    Hq,
}

impl CriterionChoice {
    pub fn to_lib(self) -> SelectCriterion {
        match self {
            CriterionChoice::Aic => SelectCriterion::Aic,
            CriterionChoice::Sc => SelectCriterion::Sc,
            CriterionChoice::Hq => SelectCriterion::Hq,
        }
    }
}

/// Deterministic case of the bounds framework, named i..v.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseChoice {
    I,
    Ii,
    Iii,
    Iv,
    V,
}

impl CaseChoice {
    pub fn to_lib(self) -> ArdlCase {
        match self {
            CaseChoice::I => ArdlCase::NoConst,
            CaseChoice::Ii => ArdlCase::RestrictedConst,
            CaseChoice::Iii => ArdlCase::UnrestrictedConst,
            CaseChoice::Iv => ArdlCase::RestrictedTrend,
            CaseChoice::V => ArdlCase::UnrestrictedTrend,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsChoice {
    PesaranAsymptotic,
    NarayanSmallSample,
}

impl BoundsChoice {
    pub fn to_lib(self) -> BoundsSource {
        match self {
            BoundsChoice::PesaranAsymptotic => BoundsSource::PesaranAsymptotic,
            BoundsChoice::NarayanSmallSample => BoundsSource::NarayanSmallSample,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IrfMethodChoice {
    Cholesky,
    Generalized,
}

impl IrfMethodChoice {
    pub fn to_lib(self) -> IrfMethod {
        match self {
            IrfMethodChoice::Cholesky => IrfMethod::Cholesky,
            IrfMethodChoice::Generalized => IrfMethod::Generalized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IrfBandChoice {
    Delta,
    Bootstrap,
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(path.display().to_string(), e))?;
        let cfg = Self::parse(&text)?;
        Ok((cfg, text))
    }

    fn validate(&self) -> Result<()> {
        if self.schema_version != 1 {
            return Err(CliError::Config(format!(
                "unsupported schema_version {}; this build understands 1",
                self.schema_version
            )));
        }
        if self.data.value_columns.is_empty() {
            return Err(CliError::Config("data.value_columns is empty".into()));
        }
        if self.ardl.run_reverse && self.ardl.regressors.len() != 1 {
            return Err(CliError::Config(
                "ardl.run_reverse needs exactly one regressor".into(),
            ));
        }
        if self.structural.ordering.is_empty() {
            return Err(CliError::Config("structural.ordering is empty".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        r#"
schema_version = 1
seed = 42

[data]
path = "data/prices.csv"
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
max_lag = 12
deterministic = "constant_trend"

[cointegration]
pairs = [["ln_dubai", "ln_gasus"], ["ln_gasus", "ln_dubai"]]
eg_deterministic = "none"
johansen_lags = 2
johansen_deterministic = "none"
gh_models = ["level", "regime", "regime_trend"]

[ardl]
dependent = "ln_gasus"
regressors = ["ln_dubai"]
max_p = 8
max_q = 8
criterion = "aic"
case = "i"
bounds = "pesaran_asymptotic"
run_reverse = true
diagnostics_bg_lags = 6
diagnostics_arch_lags = 10

[causality]
k = "auto"
d_max = "auto"
portmanteau_lags = 7

[structural]
horizon = 24
ordering = ["ln_dubai", "ln_gasus"]
irf_method = "cholesky"
irf_bands = "delta"

[output]
dir = "out/reproduction"
"#
        .to_string()
    }

    #[test]
    fn parses_a_complete_config() {
        let cfg = PipelineConfig::parse(&minimal()).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.causality.k, AutoOrInt::Auto(AutoTag::Auto));
        assert_eq!(cfg.var_selection.max_lag, 12);
        assert_eq!(cfg.ardl.case.to_lib(), ArdlCase::NoConst);
        assert_eq!(cfg.structural.bootstrap_replications, 500);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = minimal().replace("[output]", "[output]\ntypo_key = 3\n");
        // Reorder so the stray key sits inside the table.
        let text = text.replace("dir = \"out/reproduction\"", "dir = \"x\"");
        let err = PipelineConfig::parse(&text).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("typo_key"), "{msg}");
    }

    #[test]
    fn unknown_top_level_section_is_an_error() {
        let text = format!("{}\n[extras]\nfoo = 1\n", minimal());
        assert!(PipelineConfig::parse(&text).is_err());
    }

    #[test]
    fn fixed_integer_parses_for_auto_fields() {
        let text = minimal().replace("k = \"auto\"", "k = 3");
        let cfg = PipelineConfig::parse(&text).unwrap();
        assert_eq!(cfg.causality.k, AutoOrInt::Fixed(3));
        assert_eq!(cfg.causality.k.fixed(), Some(3));
    }

    #[test]
    fn schema_version_gate() {
        let text = minimal().replace("schema_version = 1", "schema_version = 2");
        assert!(PipelineConfig::parse(&text).is_err());
    }

    #[test]
    fn reverse_requires_single_regressor() {
        let text = minimal().replace(
            "regressors = [\"ln_dubai\"]",
            "regressors = [\"ln_dubai\", \"ln_gasus\"]",
        );
        assert!(PipelineConfig::parse(&text).is_err());
    }
}
