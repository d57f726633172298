//! Argument parsing and the experiment configuration model.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gmconc::sampling::SphereSpec;
use gmconc::weights::{WeightFamily, WeightSequence};

/// Default RNG seed for reproducible runs.
pub const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Parser, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[command(
    name = "gmconc",
    version,
    about = "Moments, concentration certificates and Monte Carlo experiments \
             for the geometric-mean / arithmetic-mean ratio on norm spheres"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Command {
    /// Exact moment of the ratio functional at exponent s
    Moment {
        /// Dimension n (ignored for custom weight files, which fix their own)
        #[arg(long)]
        n: usize,
        /// Weight spec: equal | two-level:M | diverging:sqrt | diverging:log
        /// | custom:@file.json | euclidean
        #[arg(long, default_value = "equal")]
        weights: WeightSpec,
        /// Moment exponent
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
        /// Output path (default: standard output)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize both Chebyshev tails and emit a concentration certificate
    Bound {
        #[arg(long, default_value = "equal")]
        weights: WeightSpec,
        /// Probability exponent: the certificate holds with prob >= 1 - 1/n^k
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        /// Relative interval width
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        /// Dimension to certify at (default: the optimized n_min)
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo simulation of the ratio distribution
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "equal")]
        weights: WeightSpec,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Half-width of the reported center band (and the collapse cutoff)
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification checklist at reduced scale; exit 0 iff all pass
    Verify {
        /// Samples per statistical check (checks are skipped below 1000)
        #[arg(long, default_value_t = 20_000)]
        samples: u64,
        /// Dimension used by the concentration checks
        #[arg(long, default_value_t = 2_000)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Optional weight file to validate before running the checklist
        #[arg(long)]
        weights: Option<WeightSpec>,
    },
    /// Sweep tables reproducing the concentration constants
    Table {
        #[arg(long, default_value = "equal")]
        weights: WeightSpec,
        /// Override the sweep (single dimension, or the fixed n of an M-sweep)
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// What to sample or evaluate on: a weight family, a custom weight file, or
/// the Euclidean sphere.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Family(WeightFamily),
    CustomFile(PathBuf),
    Euclidean,
}

impl FromStr for WeightSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "euclidean" {
            return Ok(WeightSpec::Euclidean);
        }
        if let Some(path) = s.strip_prefix("custom:@") {
            if path.is_empty() {
                return Err("custom spec needs a file: custom:@weights.json".into());
            }
            return Ok(WeightSpec::CustomFile(PathBuf::from(path)));
        }
        let family: WeightFamily = s.parse()?;
        if matches!(family, WeightFamily::Custom) {
            return Err("custom weights need a file: custom:@weights.json".into());
        }
        Ok(WeightSpec::Family(family))
    }
}

impl std::fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightSpec::Family(family) => write!(f, "{family}"),
            WeightSpec::CustomFile(path) => write!(f, "custom:@{}", path.display()),
            WeightSpec::Euclidean => write!(f, "euclidean"),
        }
    }
}

impl Serialize for WeightSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for WeightSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl WeightSpec {
    /// Materialize at dimension n, loading and validating custom files.
    pub fn resolve(&self, n: usize) -> Result<SphereSpec> {
        match self {
            WeightSpec::Euclidean => Ok(SphereSpec::Euclidean(n)),
            WeightSpec::Family(family) => Ok(SphereSpec::Weighted(family.instantiate(n)?)),
            WeightSpec::CustomFile(path) => {
                let w = load_custom_weights(path)?;
                if w.n() != n {
                    bail!(
                        "weight file {} has n = {}, which conflicts with --n {}",
                        path.display(),
                        w.n(),
                        n
                    );
                }
                Ok(SphereSpec::Weighted(w))
            }
        }
    }
}

/// Load a weight file and run full validation, reporting every violation.
pub fn load_custom_weights(path: &std::path::Path) -> Result<WeightSequence> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read weight file {}", path.display()))?;
    let w: WeightSequence = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse weight file {}", path.display()))?;
    let violations = w.validate();
    if !violations.is_empty() {
        let report = violations
            .iter()
            .map(|v| format!("  - {v}"))
            .collect::<Vec<_>>()
            .join("\n");
        bail!(
            "weight file {} failed validation:\n{report}",
            path.display()
        );
    }
    Ok(w)
}

/// Parse an argv vector into a configuration without exiting; usage problems
/// come back as a clap error (exit code 2 when surfaced via `Error::exit`).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(argv)
}
