//! Run configuration: command-line flags layered over an optional TOML file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use heckesign::cheb_minorant::{DEFAULT_DEGREES, DEFAULT_DELTAS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Flags shared by every subcommand. Anything left unset falls back to the
/// config file, then to the built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long = "k-min")]
    pub k_min: Option<u32>,
    #[arg(long = "k-max")]
    pub k_max: Option<u32>,
    #[arg(long = "n-max")]
    pub n_max: Option<usize>,
    /// Polynomial degree (overrides the coupled value or the certification matrix).
    #[arg(long = "L")]
    pub degree: Option<u32>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub z: Option<f64>,
    #[arg(long = "quad-nodes")]
    pub quad_nodes: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; 1 runs serially.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// TOML file with the same keys as the flags (snake_case).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scales the certified tail bound; only for exercising the failure path.
    #[arg(long = "bound-scale", hide = true)]
    pub bound_scale: Option<f64>,
}

/// Keys accepted in a config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub k_min: Option<u32>,
    pub k_max: Option<u32>,
    pub n_max: Option<usize>,
    #[serde(rename = "L")]
    pub degree: Option<u32>,
    pub delta: Option<f64>,
    pub z: Option<f64>,
    pub quad_nodes: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
    pub bound_scale: Option<f64>,
    /// Certification matrix rows.
    pub degrees: Option<Vec<u32>>,
    /// Certification matrix columns.
    pub deltas: Option<Vec<f64>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub k_min: u32,
    pub k_max: u32,
    pub n_max: usize,
    #[serde(rename = "L_override")]
    pub degree_override: Option<u32>,
    pub delta_override: Option<f64>,
    pub z_override: Option<f64>,
    pub quad_nodes: usize,
    pub output_dir: PathBuf,
    pub format: Format,
    pub parallelism: usize,
    pub degrees: Vec<u32>,
    pub deltas: Vec<f64>,
    pub bound_scale: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k_min: 12,
            k_max: 24,
            n_max: 1000,
            degree_override: None,
            delta_override: None,
            z_override: None,
            quad_nodes: 512,
            output_dir: PathBuf::from("."),
            format: Format::Csv,
            parallelism: 1,
            degrees: DEFAULT_DEGREES.to_vec(),
            deltas: DEFAULT_DELTAS.to_vec(),
            bound_scale: 1.0,
        }
    }
}

impl RunConfig {
    /// Merges flags over the file over the defaults, then validates.
    pub fn resolve(args: &RunArgs) -> CliResult<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let d = Self::default();
        let degree_override = args.degree.or(file.degree);
        let delta_override = args.delta.or(file.delta);
        let cfg = Self {
            k_min: args.k_min.or(file.k_min).unwrap_or(d.k_min),
            k_max: args.k_max.or(file.k_max).unwrap_or(d.k_max),
            n_max: args.n_max.or(file.n_max).unwrap_or(d.n_max),
            degree_override,
            delta_override,
            z_override: args.z.or(file.z),
            quad_nodes: args.quad_nodes.or(file.quad_nodes).unwrap_or(d.quad_nodes),
            output_dir: args.out.clone().or(file.out).unwrap_or(d.output_dir),
            format: args.format.or(file.format).unwrap_or(d.format),
            parallelism: args.jobs.or(file.jobs).unwrap_or(d.parallelism),
            degrees: match degree_override {
                Some(l) => vec![l],
                None => file.degrees.unwrap_or(d.degrees),
            },
            deltas: match delta_override {
                Some(x) => vec![x],
                None => file.deltas.unwrap_or(d.deltas),
            },
            bound_scale: args.bound_scale.or(file.bound_scale).unwrap_or(d.bound_scale),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.k_min % 2 == 1 || self.k_max % 2 == 1 {
            return usage(format!("weights must be even, got {}..{}", self.k_min, self.k_max));
        }
        if self.k_min < 12 {
            return usage(format!("k-min must be at least 12, got {}", self.k_min));
        }
        if self.k_min > self.k_max {
            return usage(format!("k-min {} exceeds k-max {}", self.k_min, self.k_max));
        }
        if self.n_max < 2 {
            return usage(format!("n-max must be at least 2, got {}", self.n_max));
        }
        if self.degree_override == Some(0) {
            return usage("L must be positive".into());
        }
        for (name, v) in [("delta", self.delta_override), ("z", self.z_override)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return usage(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if self.quad_nodes == 0 || self.parallelism == 0 {
            return usage("quad-nodes and jobs must be positive".into());
        }
        if !(self.bound_scale > 0.0) {
            return usage(format!("bound scale must be positive, got {}", self.bound_scale));
        }
        Ok(())
    }

    /// Even weights in range.
    pub fn weights(&self) -> Vec<u32> {
        (self.k_min..=self.k_max).step_by(2).collect()
    }

    pub fn manual_detector(&self) -> bool {
        self.degree_override.is_some() || self.delta_override.is_some() || self.z_override.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "k_min = 16\nk_max = 40\nn_max = 77\nformat = \"json\"\n").unwrap();
        let args = RunArgs {
            k_max: Some(30),
            config: Some(path),
            ..RunArgs::default()
        };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!((cfg.k_min, cfg.k_max, cfg.n_max), (16, 30, 77));
        assert_eq!(cfg.format, Format::Json);
    }

    #[test]
    fn bad_values_are_usage_errors() {
        for args in [
            RunArgs { k_min: Some(13), ..RunArgs::default() },
            RunArgs { k_min: Some(30), k_max: Some(20), ..RunArgs::default() },
            RunArgs { delta: Some(-0.1), ..RunArgs::default() },
            RunArgs { jobs: Some(0), ..RunArgs::default() },
        ] {
            assert!(matches!(RunConfig::resolve(&args), Err(CliError::Usage(_))));
        }
    }

    #[test]
    fn unknown_file_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "kmin = 12\n").unwrap();
        let args = RunArgs { config: Some(path), ..RunArgs::default() };
        assert!(matches!(RunConfig::resolve(&args), Err(CliError::Config { .. })));
    }
}
