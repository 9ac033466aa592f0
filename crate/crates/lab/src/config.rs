use std::path::PathBuf;

use gelfand_core::nonlinearity::{Family, FamilySpec};
use serde::{Deserialize, Serialize};

use crate::error::LabError;

/// Environment variable naming the root directory for artifacts.
pub const OUT_DIR_ENV: &str = "GELFAND_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Gamma,
    Curve,
    Singular,
    Classify,
    Stability,
    Translate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Gamma => "gamma",
            Command::Curve => "curve",
            Command::Singular => "singular",
            Command::Classify => "classify",
            Command::Stability => "stability",
            Command::Translate => "translate",
        }
    }
}

/// Everything a run needs. The family fields sit at the top level of the JSON object,
/// e.g. `{"command": "gamma", "family": "exp_exp", "N": 10, "k": 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunConfig {
    pub command: Command,
    #[serde(flatten)]
    pub family: FamilySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_ladder: Option<Vec<f64>>,
    /// Size of the random Hardy-deficit suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Relative and absolute tolerance of the shooting integrator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command, family: FamilySpec) -> Self {
        Self {
            command,
            family,
            k: None,
            alpha_min: None,
            alpha_max: None,
            points: None,
            t0: None,
            t_min: None,
            eps: None,
            n_max: None,
            c_ladder: None,
            cases: None,
            seed: None,
            rtol: None,
            out_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| LabError::invalid(format!("config: {e}")))
    }

    /// Output directory: `out_dir`, else `$GELFAND_OUT_DIR/<command>`, else `gelfand-out/<command>`.
    pub fn output_dir(&self) -> PathBuf {
        if let Some(dir) = &self.out_dir {
            return dir.clone();
        }
        let root = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("gelfand-out"));
        root.join(self.command.name())
    }
}

/// A configuration that passed every check, with defaults filled in.
#[derive(Debug, Clone)]
pub struct Validated {
    pub config: RunConfig,
    pub family: Family,
    pub k: Option<f64>,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub points: usize,
    pub t0: f64,
    pub t_min: f64,
    pub eps: f64,
    pub n_max: u32,
    pub c_ladder: Vec<f64>,
    pub cases: usize,
    pub seed: u64,
    pub rtol: f64,
}

fn positive(name: &str, value: f64) -> Result<f64, LabError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(LabError::invalid(format!("{name} must be positive and finite, got {value}")))
    }
}

fn critical(family: &Family) -> bool {
    family.reference().is_some_and(|r| (r.q() - family.constants().q_jl).abs() <= 1e-9)
}

pub const DEFAULT_CURVE_ALPHA_MAX: f64 = 300.0;
pub const DEFAULT_CLASSIFY_ALPHA_MAX: f64 = 1e3;

impl Validated {
    pub fn new(config: RunConfig) -> Result<Self, LabError> {
        let family = Family::from_spec(&config.family).map_err(|e| LabError::invalid(e.to_string()))?;
        let cap = family.alpha_cap();

        let default_max = match config.command {
            Command::Curve => DEFAULT_CURVE_ALPHA_MAX,
            _ => DEFAULT_CLASSIFY_ALPHA_MAX,
        };
        let alpha_min = positive("alphaMin", config.alpha_min.unwrap_or(0.1))?;
        let alpha_max = match config.alpha_max {
            Some(a) => positive("alphaMax", a)?,
            None => default_max.min(cap),
        };
        if matches!(config.command, Command::Curve | Command::Classify) {
            if alpha_max > cap {
                return Err(LabError::invalid(format!("alphaMax = {alpha_max} exceeds the family cap {cap:.6e}")));
            }
            if alpha_min >= alpha_max {
                return Err(LabError::invalid(format!("alphaMin = {alpha_min} must be below alphaMax = {alpha_max}")));
            }
        }
        let points = config.points.unwrap_or(240);
        if points < 3 {
            return Err(LabError::invalid("points must be at least 3"));
        }

        let t0 = positive("t0", config.t0.unwrap_or(40.0))?;
        let t_min = positive("tMin", config.t_min.unwrap_or(3.0))?;
        if !(t_min >= 1.0 && t0 > t_min) {
            return Err(LabError::invalid(format!("need 1 ≤ tMin < t0, got tMin = {t_min}, t0 = {t0}")));
        }

        let eps = config.eps.unwrap_or(0.5);
        if !(eps > 0.0 && eps < 1.0) {
            return Err(LabError::invalid(format!("eps must lie in (0, 1), got {eps}")));
        }
        let n_max = config.n_max.unwrap_or(10);
        if n_max == 0 {
            return Err(LabError::invalid("nMax must be at least 1"));
        }

        let c_ladder = config.c_ladder.clone().unwrap_or_else(|| vec![0.0, 1.0, 5.0, 20.0]);
        if config.command == Command::Translate {
            if c_ladder.is_empty() {
                return Err(LabError::invalid("cLadder must not be empty"));
            }
            for &c in &c_ladder {
                if !c.is_finite() {
                    return Err(LabError::invalid(format!("cLadder entry {c} is not finite")));
                }
                family.shifted(c).map_err(|e| LabError::invalid(format!("shift {c}: {e}")))?;
            }
        }

        let k = match config.command {
            Command::Gamma => {
                if config.k.is_some() && !critical(&family) {
                    return Err(LabError::invalid("k applies only to critical families (q = q_JL)"));
                }
                let k = config.k.or_else(|| family.declared().map(|d| d.k));
                match k {
                    Some(k) if k > 0.0 && k <= 2.0 => Some(k),
                    Some(k) => return Err(LabError::invalid(format!("k must lie in (0, 2], got {k}"))),
                    None => None,
                }
            }
            _ => config.k,
        };

        let rtol = positive("rtol", config.rtol.unwrap_or(1e-13))?;
        let cases = config.cases.unwrap_or(1000);
        let seed = config.seed.unwrap_or(0);

        Ok(Self { config, family, k, alpha_min, alpha_max, points, t0, t_min, eps, n_max, c_ladder, cases, seed, rtol })
    }
}
