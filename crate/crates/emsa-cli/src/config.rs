//! Versioned JSON run configuration. Unknown keys are rejected, the scale
//! block is validated before any run, and a parsed config is the single
//! source of truth for an experiment (the CLI flags build the same struct).

use emsa::certify::{validate_scale_params, ScaleParams};
use emsa::error::Error;
use emsa::lattice::{rat_from_decimal, Rat};
use emsa::model::SingleSiteDistribution;
use emsa::probability::ModelSpec;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelBlock,
    #[serde(default)]
    pub scale: ScaleBlock,
    pub experiment: ExperimentBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub d: usize,
    pub eps: f64,
    #[serde(default = "DistributionBlock::uniform01")]
    pub distribution: DistributionBlock,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionBlock {
    Uniform { lo: f64, hi: f64 },
    Discrete { atoms: Vec<(f64, f64)> },
}

impl DistributionBlock {
    fn uniform01() -> Self {
        DistributionBlock::Uniform { lo: 0.0, hi: 1.0 }
    }

    pub fn build(&self) -> Result<SingleSiteDistribution, Error> {
        match self {
            DistributionBlock::Uniform { lo, hi } => SingleSiteDistribution::uniform(*lo, *hi),
            DistributionBlock::Discrete { atoms } => SingleSiteDistribution::discrete(atoms),
        }
    }
}

/// Scale exponents; defaults to the beta = 0.8 bundle used by the
/// large-disorder experiments.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleBlock {
    pub xi: f64,
    pub zeta: f64,
    pub beta: f64,
    pub tau: f64,
    pub gamma: f64,
}

impl Default for ScaleBlock {
    fn default() -> Self {
        ScaleBlock { xi: 0.3, zeta: 0.5, beta: 0.8, tau: 0.99, gamma: 1.1 }
    }
}

impl ScaleBlock {
    pub fn validate(&self) -> Result<ScaleParams, Error> {
        validate_scale_params(self.xi, self.zeta, self.beta, self.tau, self.gamma)
    }
}

/// Mass parameter: an explicit value or `"auto"` for `m_{eps,L}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MassSpec {
    Auto(AutoTag),
    Value(f64),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl MassSpec {
    pub fn auto() -> Self {
        MassSpec::Auto(AutoTag::Auto)
    }

    pub fn resolve(&self, eps: f64, l: f64, beta: f64, dim: usize) -> f64 {
        match self {
            MassSpec::Auto(_) => emsa::certify::m_eps_l(eps, l, beta, dim),
            MassSpec::Value(v) => *v,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "operation", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentBlock {
    /// Per-trial m-localizing certificates.
    Certify { l: String, m: MassSpec, trials: u64 },
    /// Suitable cover construction and invariant checks (deterministic).
    Cover { l: String, ell: String },
    /// Monte Carlo m-localizing probability vs the large-disorder bound.
    McLocalizing { l: String, m: MassSpec, trials: u64 },
    /// Monte Carlo level-spacing probability vs the Minami-derived bound.
    McSpacing {
        l: String,
        /// Spacing scale R; defaults to `l`.
        #[serde(default)]
        r: Option<f64>,
        trials: u64,
    },
    /// Windowed eigenvalue-count event probability.
    Klm { l: String, i_lo: f64, i_hi: f64, eta: f64, trials: u64 },
    /// Second-factorial-moment estimate.
    Minami { l: String, j_lo: f64, j_hi: f64, trials: u64 },
    /// Wegner-type resolvent-norm probability plus the per-trial
    /// (m,E)-regularity fraction at a fixed energy.
    GreenRegular { l: String, energy: f64, m: MassSpec, trials: u64 },
    /// Cross-implication experiments between localization and regularity.
    GreenCross {
        direction: CrossDirection,
        /// Box side for loc-to-reg; sub-box side for reg-to-loc.
        l: String,
        m: MassSpec,
        #[serde(default)]
        m_prime: Option<f64>,
        trials: u64,
        #[serde(default = "default_energies")]
        energies: usize,
    },
    /// Multiscale scan over L_{k+1} = L_k^gamma.
    Scan { l0: f64, k_max: usize, m0: MassSpec, trials: u64 },
    /// Reference decay-rate ladder.
    DecayRates { m: f64, ell: f64, l: f64, c: f64 },
}

fn default_energies() -> usize {
    5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossDirection {
    LocToReg,
    RegToLoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Output directory; falls back to `EMSA_OUT_DIR`, then `.`.
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default = "default_basename")]
    pub basename: String,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_basename() -> String {
    "results".to_string()
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: None, basename: default_basename(), format: OutputFormat::Csv }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl RunConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let config: RunConfig = serde_json::from_str(text)?;
        if config.schema_version != SCHEMA_VERSION {
            anyhow::bail!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                config.schema_version
            );
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.scale.validate()?;
        self.model.distribution.build()?;
        if self.model.d == 0 {
            anyhow::bail!("model.d must be positive");
        }
        Ok(())
    }

    pub fn model_spec(&self) -> anyhow::Result<ModelSpec> {
        Ok(ModelSpec {
            dim: self.model.d,
            eps: self.model.eps,
            dist: self.model.distribution.build()?,
        })
    }

    pub fn scale_params(&self) -> anyhow::Result<ScaleParams> {
        Ok(self.scale.validate()?)
    }
}

/// Parse a decimal side length into the exact rational the geometry expects.
pub fn parse_side(s: &str) -> anyhow::Result<Rat> {
    Ok(rat_from_decimal(s)?)
}
