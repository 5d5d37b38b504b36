//! Run configuration: JSON schema, defaults and conversion to core types.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use subwalk_core::asymptotics::Tolerances;
use subwalk_core::bernstein::{BernsteinSpec, LevyGrid};
use subwalk_core::walk::WalkSpec;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub walk: WalkConfig,
    pub psi: PsiConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub tolerances: ToleranceConfig,
    pub coeffs: CoeffsParams,
    pub tau: TauParams,
    pub kernel: KernelParams,
    pub simulate: SimulateParams,
    pub verify: VerifyParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            walk: WalkConfig::Named("simple-1d".into()),
            psi: PsiConfig::Stable { alpha: 1.0 },
            seed: 0,
            out: PathBuf::from("subwalk-out"),
            threads: None,
            tolerances: ToleranceConfig::default(),
            coeffs: CoeffsParams::default(),
            tau: TauParams::default(),
            kernel: KernelParams::default(),
            simulate: SimulateParams::default(),
            verify: VerifyParams::default(),
        }
    }
}

/// A named walk or an inline support list.
#[derive(Debug, Clone, PartialEq)]
pub enum WalkConfig {
    Named(String),
    Inline(InlineWalk),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineWalk {
    pub d: usize,
    pub support: Vec<StepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub v: Vec<i64>,
    pub p: Probability,
}

impl Serialize for WalkConfig {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            WalkConfig::Named(name) => s.serialize_str(name),
            WalkConfig::Inline(inline) => inline.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for WalkConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let value = serde_json::Value::deserialize(d)?;
        match value {
            serde_json::Value::String(name) => Ok(WalkConfig::Named(name)),
            serde_json::Value::Object(_) => serde_json::from_value(value)
                .map(WalkConfig::Inline)
                .map_err(D::Error::custom),
            _ => Err(D::Error::custom(
                "expected a walk name or {\"d\", \"support\"}",
            )),
        }
    }
}

/// A probability written as a number, a decimal string or a ratio `"a/b"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Probability {
    Number(f64),
    Text(String),
}

impl Probability {
    pub fn value(&self) -> Result<f64, String> {
        match self {
            Probability::Number(v) => Ok(*v),
            Probability::Text(text) => parse_rational(text),
        }
    }
}

/// Parses `"a/b"` with integer parts as the correctly rounded quotient, or a decimal.
pub fn parse_rational(text: &str) -> Result<f64, String> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: u64 = num
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in {text:?}"))?;
        let den: u64 = den
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator in {text:?}"))?;
        if den == 0 {
            return Err(format!("zero denominator in {text:?}"));
        }
        // Exact for the integer ranges that convert to f64 exactly.
        if num > 1 << 53 || den > 1 << 53 {
            return Err(format!("ratio {text:?} exceeds 2^53"));
        }
        Ok(num as f64 / den as f64)
    } else {
        text.parse()
            .map_err(|_| format!("cannot parse probability {text:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiConfig {
    Stable {
        alpha: f64,
    },
    StableLog {
        alpha: f64,
        log_power: f64,
    },
    /// The stable Lévy density on the default logarithmic node grid.
    StableQuadrature {
        alpha: f64,
    },
    LevyQuadrature {
        alpha: f64,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        #[serde(default)]
        drift: f64,
    },
    Identity,
}

impl PsiConfig {
    pub fn build(&self) -> subwalk_core::Result<BernsteinSpec> {
        match self {
            PsiConfig::Stable { alpha } => BernsteinSpec::stable(*alpha),
            PsiConfig::StableLog { alpha, log_power } => {
                BernsteinSpec::stable_log(*alpha, *log_power)
            }
            PsiConfig::StableQuadrature { alpha } => {
                BernsteinSpec::stable_levy_quadrature(*alpha, LevyGrid::default())
            }
            PsiConfig::LevyQuadrature {
                alpha,
                nodes,
                weights,
                drift,
            } => {
                BernsteinSpec::levy_quadrature(*alpha, nodes.clone(), weights.clone(), 0.0, *drift)
            }
            PsiConfig::Identity => Ok(BernsteinSpec::identity()),
        }
    }

    /// Replaces `alpha`, keeping the family.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            PsiConfig::Stable { alpha: a }
            | PsiConfig::StableLog { alpha: a, .. }
            | PsiConfig::StableQuadrature { alpha: a }
            | PsiConfig::LevyQuadrature { alpha: a, .. } => *a = alpha,
            PsiConfig::Identity => out = PsiConfig::Stable { alpha },
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    pub tail: Option<f64>,
    pub onsite: Option<f64>,
    pub ratio: Option<f64>,
    pub polya: Option<f64>,
    pub doa: Option<f64>,
    pub flt: Option<f64>,
}

impl ToleranceConfig {
    pub fn resolve(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            tail: self.tail.unwrap_or(d.tail),
            onsite: self.onsite.unwrap_or(d.onsite),
            ratio: self.ratio.unwrap_or(d.ratio),
            polya: self.polya.unwrap_or(d.polya),
            doa: self.doa.unwrap_or(d.doa),
            flt: self.flt.unwrap_or(d.flt),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoeffsParams {
    /// Truncation; `None` selects the default tail target.
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TauParams {
    pub n: usize,
    /// Table length; defaults to `max(4096, ⌊max t⌋ + 1)`.
    pub k: Option<usize>,
    pub t: Vec<f64>,
}

impl Default for TauParams {
    fn default() -> Self {
        Self {
            n: 1,
            k: None,
            t: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KernelRoute {
    Exact,
    Fourier,
    Both,
}

impl fmt::Display for KernelRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelRoute::Exact => "exact",
            KernelRoute::Fourier => "fourier",
            KernelRoute::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelParams {
    pub n: Vec<usize>,
    /// Points; empty means the origin.
    pub x: Vec<Vec<i64>>,
    pub route: KernelRoute,
    /// Fourier grid size; `None` selects the default for the largest `n`.
    pub grid: Option<usize>,
    /// Length of the `τ_n` table for the exact route.
    pub k: usize,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            n: vec![1],
            x: Vec::new(),
            route: KernelRoute::Both,
            grid: None,
            k: 1 << 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    pub n: usize,
    pub t_grid: Vec<f64>,
    pub replicas: u64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            n: 100,
            t_grid: vec![1.0],
            replicas: 1,
        }
    }
}

/// Grids shared by the verify commands; empty lists select per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub n: Vec<usize>,
    pub t: Vec<f64>,
    pub x: Vec<Vec<i64>>,
    pub xi: Vec<f64>,
    pub grid: Option<usize>,
    pub replicas: Option<u64>,
    pub axis: usize,
}

/// Parses and validates a JSON document; errors name the offending field.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Usage(format!("config field `{path}`: {}", e.inner()))
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    /// Checks everything that does not need a computation.
    pub fn validate(&self) -> Result<(), CliError> {
        self.walk_spec()?;
        self.psi_spec()?;
        if self.threads == Some(0) {
            return Err(CliError::Usage("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn walk_spec(&self) -> Result<WalkSpec, CliError> {
        let spec = match &self.walk {
            WalkConfig::Named(name) => WalkSpec::named(name),
            WalkConfig::Inline(inline) => {
                let mut support = Vec::with_capacity(inline.support.len());
                for (i, step) in inline.support.iter().enumerate() {
                    let p = step.p.value().map_err(|e| {
                        CliError::Usage(format!("config field `walk.support[{i}].p`: {e}"))
                    })?;
                    support.push((step.v.clone(), p));
                }
                WalkSpec::new(inline.d, support)
            }
        };
        spec.map_err(|e| CliError::Usage(format!("config field `walk`: {e}")))
    }

    pub fn psi_spec(&self) -> Result<BernsteinSpec, CliError> {
        self.psi
            .build()
            .map_err(|e| CliError::Usage(format!("config field `psi`: {e}")))
    }
}
