//! Run configuration: a versioned JSON document describing the space, the
//! deformation, the family, and per-command parameter defaults. Unknown
//! keys are rejected; command-line flags override config values.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use phigeo::{Density64, FiniteSpace64, PhiFamily64, PhiFunction64};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub space: SpaceConfig,
    pub phi: PhiConfig,
    #[serde(default)]
    pub family: Option<FamilyConfig>,
    /// First density for `divergence`; also the target for `natgrad`.
    #[serde(default)]
    pub p: Option<DensitySource>,
    /// Second density for `divergence`.
    #[serde(default)]
    pub q: Option<DensitySource>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,

    // command parameter defaults, overridable by flags
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    #[serde(default)]
    pub v0: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub fd_step: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub curve: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub vector: Option<Vec<f64>>,
    #[serde(default)]
    pub from: Option<Vec<f64>>,
    #[serde(default)]
    pub to: Option<Vec<f64>>,
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub random_points: Option<usize>,
    #[serde(default)]
    pub density_pairs: Option<usize>,
    #[serde(default)]
    pub theta_range: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub size: usize,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
pub enum PhiConfig {
    Exponential,
    Kaniadakis { kappa: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub center: DensitySource,
    #[serde(default)]
    pub u0: Option<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
}

/// A density is either inline values or a CSV file with one value per line.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum DensitySource {
    Inline(Vec<f64>),
    Csv { csv: PathBuf },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        if config.schema != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                config.schema
            )));
        }
        Ok(config)
    }

    pub fn build_space(&self) -> Result<FiniteSpace64, CliError> {
        match &self.space.weights {
            Some(w) => {
                if w.len() != self.space.size {
                    return Err(CliError::Config(format!(
                        "space.weights has {} entries but space.size is {}",
                        w.len(),
                        self.space.size
                    )));
                }
                Ok(FiniteSpace64::with_weights(w.clone())?)
            }
            None => Ok(FiniteSpace64::counting(self.space.size)?),
        }
    }

    pub fn build_phi(&self) -> Result<PhiFunction64, CliError> {
        match &self.phi {
            PhiConfig::Exponential => Ok(PhiFunction64::exponential()),
            PhiConfig::Kaniadakis { kappa } => Ok(PhiFunction64::kaniadakis(*kappa)?),
        }
    }

    pub fn load_density(
        &self,
        source: &DensitySource,
        base_dir: &Path,
    ) -> Result<Density64, CliError> {
        let space = self.build_space()?;
        let values = match source {
            DensitySource::Inline(values) => values.clone(),
            DensitySource::Csv { csv } => {
                let path = if csv.is_absolute() {
                    csv.clone()
                } else {
                    base_dir.join(csv)
                };
                read_csv_column(&path)?
            }
        };
        Ok(Density64::from_data(space, values)?)
    }

    pub fn build_family(&self, base_dir: &Path) -> Result<PhiFamily64, CliError> {
        let family = self
            .family
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no `family` section".into()))?;
        let center = self.load_density(&family.center, base_dir)?;
        let phi = self.build_phi()?;
        Ok(PhiFamily64::new(
            phi,
            &center,
            family.u0.clone(),
            &family.directions,
        )?)
    }

    /// Describe `u0` for output records.
    pub fn u0_kind(&self) -> &'static str {
        match &self.family {
            Some(f) if f.u0.is_some() => "custom",
            _ => "ones",
        }
    }

    /// `u0` for family-less commands (`divergence`): the family's if
    /// configured, otherwise all ones.
    pub fn u0_values(&self) -> Vec<f64> {
        match &self.family {
            Some(f) => f
                .u0
                .clone()
                .unwrap_or_else(|| vec![1.0; self.space.size]),
            None => vec![1.0; self.space.size],
        }
    }
}

/// One floating-point value per line; blank lines ignored.
fn read_csv_column(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: f64 = line.parse().map_err(|e| {
            CliError::Config(format!(
                "{}:{}: cannot parse `{line}` as a number: {e}",
                path.display(),
                lineno + 1
            ))
        })?;
        values.push(value);
    }
    Ok(values)
}
