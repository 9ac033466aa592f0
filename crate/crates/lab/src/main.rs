use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gelfand_core::nonlinearity::FamilySpec;
use gelfand_lab::{run, Command, LabError, RunConfig};

/// Numerical laboratory for radial Gelfand problems.
#[derive(Parser)]
#[command(name = "gelfand", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct FamilyArgs {
    /// Family name, e.g. `exp`, `power`, `exp_exp`.
    #[arg(long)]
    family: String,
    /// Space dimension.
    #[arg(long = "n", short = 'N')]
    n: u32,
    /// Family parameter as `key=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Translation `f(u + c)`.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    shift: f64,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl FamilyArgs {
    fn config(self, command: Command) -> RunConfig {
        let mut spec = FamilySpec::new(&self.family, self.n).shifted(self.shift);
        for (key, value) in self.params {
            spec = spec.param(&key, value);
        }
        let mut config = RunConfig::new(command, spec);
        config.out_dir = self.out;
        config
    }
}

fn parse_param(text: &str) -> Result<(String, f64), String> {
    let (key, value) = text.split_once('=').ok_or_else(|| format!("expected key=value, got `{text}`"))?;
    let value: f64 = value.trim().parse().map_err(|e| format!("parameter {key}: {e}"))?;
    Ok((key.trim().to_string(), value))
}

#[derive(Subcommand)]
enum Sub {
    /// Growth conditions, q and the γ sequence.
    Gamma {
        #[command(flatten)]
        family: FamilyArgs,
        /// Exponent of the log correction; defaults to the declared one.
        #[arg(long)]
        k: Option<f64>,
    },
    /// Bifurcation curve λ(α) by shooting.
    Curve {
        #[command(flatten)]
        family: FamilyArgs,
        /// Smallest center value α [default: 0.1].
        #[arg(long)]
        alpha_min: Option<f64>,
        /// Largest center value α, at most the family cap.
        #[arg(long)]
        alpha_max: Option<f64>,
        /// Number of log-spaced α samples [default: 240].
        #[arg(long)]
        points: Option<usize>,
    },
    /// Singular solution and λ*.
    Singular {
        #[command(flatten)]
        family: FamilyArgs,
        /// Start of the asymptotic regime in t = -log r [default: 40].
        #[arg(long)]
        t0: Option<f64>,
        /// Handoff to direct integration at r = e^{-tmin} [default: 3].
        #[arg(long = "tmin")]
        t_min: Option<f64>,
    },
    /// Curve plus stability evidence and a verdict.
    Classify {
        #[command(flatten)]
        family: FamilyArgs,
        /// Smallest center value α [default: 0.1].
        #[arg(long)]
        alpha_min: Option<f64>,
        /// Largest center value α, at most the family cap.
        #[arg(long)]
        alpha_max: Option<f64>,
        /// Number of log-spaced α samples [default: 240].
        #[arg(long)]
        points: Option<usize>,
    },
    /// Hardy deficits, annulus probes and Sturm counts.
    Stability {
        #[command(flatten)]
        family: FamilyArgs,
        /// Annulus parameter in (0, 1) [default: 0.5].
        #[arg(long)]
        eps: Option<f64>,
        /// Number of annuli probed [default: 10].
        #[arg(long = "nmax")]
        n_max: Option<u32>,
        /// Size of the random deficit suite [default: 1000].
        #[arg(long)]
        cases: Option<usize>,
        /// Seed of the deficit suite [default: 0].
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Classification of the shifted families f(u + c).
    Translate {
        #[command(flatten)]
        family: FamilyArgs,
        /// Comma-separated shifts [default: 0,1,5,20].
        #[arg(long = "c-ladder", value_delimiter = ',', allow_negative_numbers = true)]
        c_ladder: Option<Vec<f64>>,
    },
    /// Any command described by a JSON configuration file.
    Run {
        /// JSON file with `command`, the family fields and any options.
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding `outDir` in the file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config(sub: Sub) -> Result<RunConfig, LabError> {
    Ok(match sub {
        Sub::Gamma { family, k } => {
            let mut c = family.config(Command::Gamma);
            c.k = k;
            c
        }
        Sub::Curve { family, alpha_min, alpha_max, points } => {
            let mut c = family.config(Command::Curve);
            (c.alpha_min, c.alpha_max, c.points) = (alpha_min, alpha_max, points);
            c
        }
        Sub::Singular { family, t0, t_min } => {
            let mut c = family.config(Command::Singular);
            (c.t0, c.t_min) = (t0, t_min);
            c
        }
        Sub::Classify { family, alpha_min, alpha_max, points } => {
            let mut c = family.config(Command::Classify);
            (c.alpha_min, c.alpha_max, c.points) = (alpha_min, alpha_max, points);
            c
        }
        Sub::Stability { family, eps, n_max, cases, seed } => {
            let mut c = family.config(Command::Stability);
            (c.eps, c.n_max, c.cases, c.seed) = (eps, n_max, cases, seed);
            c
        }
        Sub::Translate { family, c_ladder } => {
            let mut c = family.config(Command::Translate);
            c.c_ladder = c_ladder;
            c
        }
        Sub::Run { config, out } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| LabError::invalid(format!("reading {}: {e}", config.display())))?;
            let mut c = RunConfig::from_json(&text)?;
            if out.is_some() {
                c.out_dir = out;
            }
            c
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match config(cli.command).and_then(run) {
        Ok(outcome) => {
            for name in &outcome.artifacts {
                println!("{}", outcome.dir.join(name).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
