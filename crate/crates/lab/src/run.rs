use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use gelfand_core::bifurcation::{
    classify, trace_curve, translation_experiment, BifurcationCurve, ClassifyOptions, CurveFailure, CurveOptions,
    TurningBracket,
};
use gelfand_core::math::logspace;
use gelfand_core::nonlinearity::{
    check_growth_conditions, estimate_gamma, Declared, Family, FamilySpec, GrowthReport, Side,
};
use gelfand_core::shooting::ShootingOptions;
use gelfand_core::singular::{
    singular_solution, verify_fprime_asymptotic, verify_phi_asymptotic, AsymptoticTable, Asymptotics, Branch,
    FitWindow, SingularOptions,
};
use gelfand_core::stability::{critical_test_value, probe_ladder, sturm_ladder, PotentialProfile, ProbeLadder};
use gelfand_core::sweep::Mapper;
use gelfand_core::DimensionConstants;
use serde::Serialize;

use crate::config::{Command, RunConfig, Validated};
use crate::error::LabError;
use crate::output;
use crate::parallel::Rayon;
use crate::suite::{deficit_suite, DeficitSuite};

/// A named file produced by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn new(name: &str, bytes: Vec<u8>) -> Self {
        Self { name: name.to_string(), bytes }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub artifacts: Vec<String>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Versions {
    gelfand_core: &'static str,
    gelfand_lab: &'static str,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Manifest<'a> {
    command: &'static str,
    config: &'a RunConfig,
    versions: Versions,
    wall_time_seconds: f64,
    status: &'static str,
    error: Option<String>,
    artifacts: Vec<String>,
}

pub const MANIFEST: &str = "manifest.json";

/// Validates `config`, computes its artifacts and writes them together with a manifest.
///
/// Nothing is written when validation fails. On a numerical failure only the manifest,
/// recording the error, is written.
pub fn run(config: RunConfig) -> Result<RunOutcome, LabError> {
    let validated = Validated::new(config)?;
    let dir = validated.config.output_dir();
    prepare_dir(&dir)?;
    let started = Instant::now();
    let computed = execute(&validated, &Rayon);
    let elapsed = started.elapsed().as_secs_f64();
    let (artifacts, error) = match &computed {
        Ok(list) => (list.clone(), None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    for artifact in &artifacts {
        fs::write(dir.join(&artifact.name), &artifact.bytes)?;
    }
    let names: Vec<String> = artifacts.iter().map(|a| a.name.clone()).collect();
    let manifest = Manifest {
        command: validated.config.command.name(),
        config: &validated.config,
        versions: Versions { gelfand_core: gelfand_core::VERSION, gelfand_lab: env!("CARGO_PKG_VERSION") },
        wall_time_seconds: elapsed,
        status: if error.is_none() { "ok" } else { "numerical-failure" },
        error,
        artifacts: names.clone(),
    };
    fs::write(dir.join(MANIFEST), output::json(&manifest))?;
    computed.map(|_| RunOutcome { dir, artifacts: names })
}

fn prepare_dir(dir: &PathBuf) -> Result<(), LabError> {
    fs::create_dir_all(dir).map_err(|e| LabError::invalid(format!("output directory {}: {e}", dir.display())))?;
    let meta = fs::metadata(dir).map_err(|e| LabError::invalid(format!("output directory {}: {e}", dir.display())))?;
    if !meta.is_dir() || meta.permissions().readonly() {
        return Err(LabError::invalid(format!("output directory {} is not writable", dir.display())));
    }
    Ok(())
}

/// Computes the artifacts of a validated run without touching the file system.
pub fn execute<M: Mapper>(run: &Validated, mapper: &M) -> Result<Vec<Artifact>, LabError> {
    match run.config.command {
        Command::Gamma => gamma(run),
        Command::Curve => curve(run, mapper),
        Command::Singular => singular(run),
        Command::Classify => classify_run(run, mapper),
        Command::Stability => stability(run, mapper),
        Command::Translate => translate(run, mapper),
    }
}

fn shooting(run: &Validated) -> ShootingOptions {
    ShootingOptions { rtol: run.rtol, atol: run.rtol, ..ShootingOptions::default() }
}

fn singular_options(run: &Validated) -> SingularOptions {
    SingularOptions { t0: run.t0, t_min: run.t_min, ..SingularOptions::default() }
}

fn classify_options(run: &Validated) -> ClassifyOptions {
    let defaults = ClassifyOptions::default();
    ClassifyOptions {
        alpha_min: run.alpha_min,
        alpha_max: run.alpha_max,
        points: run.points,
        curve: CurveOptions { shooting: shooting(run), ..defaults.curve },
        singular: singular_options(run),
        epsilon: run.eps,
        n_max: run.n_max,
        ..defaults
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct GammaReport<'a> {
    family: &'a FamilySpec,
    constants: DimensionConstants,
    declared: Option<Declared>,
    declared_side: Side,
    #[serde(flatten)]
    growth: GrowthReport,
}

fn gamma(run: &Validated) -> Result<Vec<Artifact>, LabError> {
    let family = &run.family;
    let mut growth = check_growth_conditions(family)?;
    if let Some(k) = run.k.filter(|&k| growth.k != Some(k)) {
        let est = estimate_gamma(family, k)?;
        growth.k = Some(k);
        growth.gamma_estimate_at_k = est.samples;
        growth.extrapolated_gamma = Some(est.limit);
        growth.gamma_error = Some(est.error);
        growth.warnings.extend(est.warnings);
    }
    let samples = output::pairs_csv("u", "gamma_estimate", &growth.gamma_estimate_at_k);
    let report = GammaReport {
        family: family.spec(),
        constants: *family.constants(),
        declared: family.declared(),
        declared_side: family.declared_side(),
        growth,
    };
    Ok(vec![Artifact::new("gamma.json", output::json(&report)), Artifact::new("gamma.csv", samples)])
}

fn lambda_star(family: &Family, opts: &SingularOptions, notes: &mut Vec<String>) -> Option<f64> {
    match singular_solution(family, None, opts) {
        Ok(s) => Some(s.lambda_star),
        Err(e) => {
            notes.push(format!("singular solution unavailable: {e}"));
            None
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CurveReport<'a> {
    family: &'a FamilySpec,
    alpha_min: f64,
    alpha_max: f64,
    points: usize,
    samples: usize,
    lambda_star_ref: Option<f64>,
    sup_lambda: f64,
    increasing: bool,
    tail_monotone: bool,
    turning_points: &'a [TurningBracket],
    crossings: &'a [f64],
    failures: &'a [CurveFailure],
    notes: Vec<String>,
}

fn curve_report<'a>(run: &'a Validated, curve: &'a BifurcationCurve, notes: Vec<String>) -> CurveReport<'a> {
    CurveReport {
        family: run.family.spec(),
        alpha_min: run.alpha_min,
        alpha_max: run.alpha_max,
        points: run.points,
        samples: curve.samples.len(),
        lambda_star_ref: curve.lambda_star_ref,
        sup_lambda: curve.sup_lambda(),
        increasing: curve.increasing(),
        tail_monotone: curve.tail_monotone(),
        turning_points: &curve.turning_points,
        crossings: &curve.crossings,
        failures: &curve.failures,
        notes,
    }
}

fn curve<M: Mapper>(run: &Validated, mapper: &M) -> Result<Vec<Artifact>, LabError> {
    let mut notes = Vec::new();
    let star = lambda_star(&run.family, &singular_options(run), &mut notes);
    let grid = logspace(run.alpha_min, run.alpha_max, run.points);
    let opts = CurveOptions { shooting: shooting(run), ..CurveOptions::default() };
    let curve = trace_curve(&run.family, &grid, star, &opts, mapper)?;
    let report = curve_report(run, &curve, notes);
    Ok(vec![Artifact::new("curve.json", output::json(&report)), Artifact::new("curve.csv", output::curve_csv(&curve))])
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SingularReport<'a> {
    family: &'a FamilySpec,
    branch: Branch,
    asymptotics: Option<Asymptotics>,
    lambda_star: f64,
    t0: f64,
    t_start: f64,
    t_min: f64,
    handoff_radius: f64,
    /// `V'` at the handoff from the closed relation and from differencing `V(t)`.
    handoff_derivatives: (f64, f64),
    envelope_ratio: Option<f64>,
    nodes: usize,
    tables: Vec<AsymptoticTable>,
}

fn singular(run: &Validated) -> Result<Vec<Artifact>, LabError> {
    let solution = singular_solution(&run.family, None, &singular_options(run))?;
    let trajectory = &solution.trajectory;
    let mut tables = Vec::new();
    if let Some(a) = trajectory.asymptotics {
        let t_hi = run.t0.min(40.0);
        let window = FitWindow { t_lo: (0.5 * t_hi).max(trajectory.t_min), t_hi, ..FitWindow::default() };
        tables.push(verify_fprime_asymptotic(&solution, a.k, a.gamma, window));
        tables.push(verify_phi_asymptotic(&solution, a.k, a.gamma, window));
    }
    let report = SingularReport {
        family: run.family.spec(),
        branch: trajectory.branch,
        asymptotics: trajectory.asymptotics,
        lambda_star: solution.lambda_star,
        t0: trajectory.t0,
        t_start: trajectory.t_start,
        t_min: trajectory.t_min,
        handoff_radius: solution.handoff_radius,
        handoff_derivatives: solution.handoff_derivatives,
        envelope_ratio: trajectory.envelope_ratio,
        nodes: trajectory.t_grid.len(),
        tables,
    };
    Ok(vec![
        Artifact::new("singular.json", output::json(&report)),
        Artifact::new("trajectory.csv", output::trajectory_csv(trajectory)),
        Artifact::new(
            "solution.csv",
            output::profile_csv(["r", "V", "V_prime"], &solution.r_grid, &solution.v, &solution.v_prime),
        ),
    ])
}

fn classify_run<M: Mapper>(run: &Validated, mapper: &M) -> Result<Vec<Artifact>, LabError> {
    let result = classify(&run.family, &classify_options(run), mapper)?;
    Ok(vec![
        Artifact::new("classify.json", output::json(&result.report)),
        Artifact::new("curve.csv", output::curve_csv(&result.curve)),
    ])
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CriticalValue {
    epsilon: f64,
    n: u32,
    value: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct StabilityReport<'a> {
    family: &'a FamilySpec,
    declared: Option<Declared>,
    declared_side: Side,
    epsilon: f64,
    n_max: u32,
    probes: Option<ProbeLadder>,
    /// `(r_min, count)` for the asymptotic potential of the declared `(k, γ)`.
    asymptotic_sturm_counts: Option<Vec<(f64, u32)>>,
    /// `(r_min, count)` for `λ* f'(U*)` from the computed singular solution.
    singular_sturm_counts: Option<Vec<(f64, u32)>>,
    critical_values: Vec<CriticalValue>,
    deficit_suite: DeficitSuite,
    notes: Vec<String>,
}

/// Inner radii of the Sturm ladder.
pub const STURM_RADII: [f64; 3] = [1e-3, 1e-5, 1e-8];

fn stability<M: Mapper>(run: &Validated, mapper: &M) -> Result<Vec<Artifact>, LabError> {
    let family = &run.family;
    let n = family.n();
    let mut notes = Vec::new();
    let declared = family.declared();
    let (probes, asymptotic) = match declared {
        Some(d) => {
            let probes = probe_ladder(n, d.k, d.gamma, run.eps, run.n_max)?;
            let counts = sturm_ladder(&PotentialProfile::asymptotic(n, d.k, d.gamma), &STURM_RADII)?;
            (Some(probes), Some(counts))
        }
        None => {
            notes.push("no declared (k, γ); annulus probes skipped".to_string());
            (None, None)
        }
    };
    let singular_counts = match singular_solution(family, None, &singular_options(run)) {
        Ok(solution) => Some(sturm_ladder(&PotentialProfile::singular(&solution), &STURM_RADII)?),
        Err(e) => {
            notes.push(format!("singular solution unavailable: {e}"));
            None
        }
    };
    let critical_values = (1..=run.n_max)
        .map(|k| Ok(CriticalValue { epsilon: run.eps, n: k, value: critical_test_value(run.eps, k, n)? }))
        .collect::<Result<Vec<_>, gelfand_core::Error>>()?;
    let report = StabilityReport {
        family: family.spec(),
        declared,
        declared_side: family.declared_side(),
        epsilon: run.eps,
        n_max: run.n_max,
        probes,
        asymptotic_sturm_counts: asymptotic,
        singular_sturm_counts: singular_counts,
        critical_values,
        deficit_suite: deficit_suite(n, run.cases, run.seed, mapper),
        notes,
    };
    Ok(vec![Artifact::new("stability.json", output::json(&report))])
}

fn translate<M: Mapper>(run: &Validated, mapper: &M) -> Result<Vec<Artifact>, LabError> {
    let report = translation_experiment(&run.family, &run.c_ladder, &classify_options(run), mapper)?;
    Ok(vec![Artifact::new("translate.json", output::json(&report))])
}
