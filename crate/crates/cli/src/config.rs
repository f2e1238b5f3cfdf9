//! Experiment configuration: a JSON file merged with command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use xplab::family::{FamilyParams, Kappa, Variant};
use xplab::gadget::{ConnectorMode, DEFAULT_DP_BUDGET};

use crate::Failure;

pub const BUDGET_ENV: &str = "XPLAB_DP_BUDGET";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    G,
    F,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ConnectorArg {
    Corrected,
    Literal,
}

/// Flags shared by every subcommand. Anything set here beats the config file.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub kappa: Option<String>,
    #[arg(long, global = true)]
    pub lambda: Option<u64>,
    #[arg(long, global = true)]
    pub gamma: Option<u32>,
    #[arg(long, global = true, value_enum)]
    pub variant: Option<VariantArg>,
    /// Pointer-chasing rounds.
    #[arg(long = "r", global = true)]
    pub r: Option<u32>,
    /// Pointer-chasing domain size.
    #[arg(long = "m", global = true)]
    pub m: Option<u32>,
    /// Fail when any step along the expected walk continues with probability below 1 - 1/(3l).
    #[arg(long = "ell-check", global = true)]
    pub ell_check: bool,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Bits per edge copy per round; defaults to ceil(log2 n).
    #[arg(long, global = true)]
    pub bandwidth: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Algorithm for `run` and `cutsim`: flood, chatter, chatter-rand, chatter-silent, relay.
    #[arg(long, global = true)]
    pub algo: Option<String>,
    /// Round count for the chatter algorithms.
    #[arg(long, global = true)]
    pub rounds: Option<u64>,
    /// Pointer-chasing instance file `{m, r, fA, fB}`.
    #[arg(long, global = true)]
    pub instance: Option<PathBuf>,
    /// Graph file to validate instead of a freshly generated one.
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub connectors: Option<ConnectorArg>,
    /// Run sequentially even when built with parallel support.
    #[arg(long, global = true)]
    pub sequential: bool,
}

/// Config file contents; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    kappa: Option<serde_json::Value>,
    lambda: Option<u64>,
    gamma: Option<u32>,
    variant: Option<VariantArg>,
    r: Option<u32>,
    m: Option<u32>,
    ell_check: Option<bool>,
    trials: Option<u64>,
    seed: Option<u64>,
    bandwidth: Option<usize>,
    dp_budget: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    algo: Option<String>,
    rounds: Option<u64>,
    instance: Option<PathBuf>,
    graph: Option<PathBuf>,
    connectors: Option<ConnectorArg>,
    sequential: Option<bool>,
}

/// Fully resolved settings, echoed into every report.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub command: String,
    pub kappa: String,
    pub lambda: u64,
    pub gamma: u32,
    pub variant: VariantArg,
    pub r: u32,
    pub m: u32,
    pub ell_check: bool,
    pub trials: u64,
    pub seed: u64,
    pub bandwidth: Option<usize>,
    pub dp_budget: u64,
    pub out: PathBuf,
    pub format: Format,
    pub algo: String,
    pub rounds: Option<u64>,
    pub instance: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub connectors: ConnectorArg,
    pub sequential: bool,
}

impl Resolved {
    pub fn family(&self) -> Result<FamilyParams, Failure> {
        let kappa: Kappa = self.kappa.parse().map_err(Failure::config)?;
        let p = FamilyParams {
            kappa,
            lambda: self.lambda,
            gamma: self.gamma,
        };
        p.validate().map_err(Failure::config)?;
        Ok(p)
    }

    pub fn variant(&self) -> Variant {
        match self.variant {
            VariantArg::G => Variant::G,
            VariantArg::F => Variant::F,
        }
    }

    pub fn connectors(&self) -> ConnectorMode {
        match self.connectors {
            ConnectorArg::Corrected => ConnectorMode::Corrected,
            ConnectorArg::Literal => ConnectorMode::Literal,
        }
    }

    pub fn mode(&self) -> xplab::ExecMode {
        if self.sequential {
            xplab::ExecMode::Sequential
        } else {
            xplab::ExecMode::Parallel
        }
    }
}

fn read_file(path: &Path) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn kappa_text(v: &serde_json::Value) -> Result<String, Failure> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(Failure::config(format!("kappa must be a number, got {other}"))),
    }
}

fn env_budget() -> Result<Option<u64>, Failure> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::config(format!("{BUDGET_ENV}={v:?} is not a non-negative integer"))),
        Err(_) => Ok(None),
    }
}

pub fn resolve(command: &str, flags: &Flags) -> Result<Resolved, Failure> {
    let file = match &flags.config {
        Some(p) => read_file(p)?,
        None => FileConfig::default(),
    };
    let kappa = match (&flags.kappa, &file.kappa) {
        (Some(k), _) => k.clone(),
        (None, Some(v)) => kappa_text(v)?,
        (None, None) => "1".into(),
    };
    // The environment caps the DP size; a config value can only lower it.
    let dp_budget = match (env_budget()?, file.dp_budget) {
        (Some(env), Some(f)) => env.min(f),
        (Some(env), None) => env,
        (None, Some(f)) => f,
        (None, None) => DEFAULT_DP_BUDGET,
    };
    let resolved = Resolved {
        command: command.into(),
        kappa,
        lambda: flags.lambda.or(file.lambda).unwrap_or(2),
        gamma: flags.gamma.or(file.gamma).unwrap_or(2),
        variant: flags.variant.or(file.variant).unwrap_or(VariantArg::G),
        r: flags.r.or(file.r).unwrap_or(1),
        m: flags.m.or(file.m).unwrap_or(1),
        ell_check: flags.ell_check || file.ell_check.unwrap_or(false),
        trials: flags.trials.or(file.trials).unwrap_or(1000),
        seed: flags.seed.or(file.seed).unwrap_or(0),
        bandwidth: flags.bandwidth.or(file.bandwidth),
        dp_budget,
        out: flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
        format: flags.format.or(file.format).unwrap_or_default(),
        algo: flags.algo.clone().or(file.algo).unwrap_or_else(|| "relay".into()),
        rounds: flags.rounds.or(file.rounds),
        instance: flags.instance.clone().or(file.instance),
        graph: flags.graph.clone().or(file.graph),
        connectors: flags.connectors.or(file.connectors).unwrap_or(ConnectorArg::Corrected),
        sequential: flags.sequential || file.sequential.unwrap_or(false),
    };
    if resolved.bandwidth == Some(0) {
        return Err(Failure::config("bandwidth must be positive"));
    }
    resolved.family()?;
    Ok(resolved)
}
