//! Acceptance suite.
//!
//! Every run goes through [`gelfand_lab::run`] into a scratch directory and each check
//! reads back only the manifest and the artifacts it wrote. The full set of runs is
//! executed twice; the second pass feeds the determinism criterion.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use gelfand_core::nonlinearity::FamilySpec;
use gelfand_lab::{run, Command, RunConfig};
use serde_json::Value;

/// Joseph–Lundgren exponent `1 + 4/(N - 4 - 2√(N-1))`.
fn p_jl(n: u32) -> f64 {
    let n = n as f64;
    1.0 + 4.0 / (n - 4.0 - 2.0 * (n - 1.0).sqrt())
}

fn q_jl(n: u32) -> f64 {
    let n = n as f64;
    (n - 2.0 * (n - 1.0).sqrt()) / 4.0
}

struct Job {
    label: String,
    config: RunConfig,
}

fn job(label: impl Into<String>, command: Command, family: FamilySpec, edit: impl FnOnce(&mut RunConfig)) -> Job {
    let mut config = RunConfig::new(command, family);
    edit(&mut config);
    Job { label: label.into(), config }
}

/// The eight entries of the critical catalogue with their `k`.
fn gamma_catalogue() -> Vec<(&'static str, FamilySpec)> {
    vec![
        ("exp_log_power", FamilySpec::new("exp_log_power", 10).param("nu", 2.0)),
        ("exp_power", FamilySpec::new("exp_power", 10).param("nu", 0.5)),
        ("exp_plus_power", FamilySpec::new("exp_plus_power", 10).param("beta", 1.0).param("nu", 0.5)),
        ("exp_exp", FamilySpec::new("exp_exp", 10)),
        ("exp_times_power", FamilySpec::new("exp_times_power", 10).param("nu", 0.5)),
        ("jl_log_ratio", FamilySpec::new("jl_log_ratio", 11).param("beta", 1.0).param("nu", 0.5)),
        ("jl_exp_log_power", FamilySpec::new("jl_exp_log_power", 11).param("beta", 1.0).param("nu", 0.5)),
        ("jl_log_power", FamilySpec::new("jl_log_power", 11).param("nu", 1.0)),
    ]
}

fn envelope_families() -> Vec<(&'static str, FamilySpec)> {
    vec![
        ("exp_exp", FamilySpec::new("exp_exp", 10)),
        ("exp_power", FamilySpec::new("exp_power", 10).param("nu", 0.5)),
        ("exp_times_power", FamilySpec::new("exp_times_power", 10).param("nu", 0.5)),
        ("f_n_gamma", FamilySpec::new("f_n_gamma", 10).param("gamma", -1.0)),
    ]
}

const EPS_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const HARDY_DIMENSIONS: [u32; 2] = [10, 12];

fn jobs() -> Vec<Job> {
    let mut jobs = Vec::new();
    for (name, spec) in gamma_catalogue() {
        jobs.push(job(format!("gamma-{name}-{}", spec.n), Command::Gamma, spec, |_| {}));
    }
    for p in [3.0, 7.0, p_jl(11)] {
        jobs.push(job(format!("q-power-{p:.4}"), Command::Gamma, FamilySpec::new("power", 11).param("p", p), |_| {}));
    }
    jobs.push(job("q-exp", Command::Gamma, FamilySpec::new("exp", 10), |_| {}));
    jobs.push(job("q-exp_exp", Command::Gamma, FamilySpec::new("exp_exp", 10), |_| {}));

    jobs.push(job("singular-exp-10", Command::Singular, FamilySpec::new("exp", 10), |_| {}));
    jobs.push(job("singular-power-11", Command::Singular, FamilySpec::new("power", 11).param("p", p_jl(11)), |_| {}));
    jobs.push(job(
        "singular-exp_times_power",
        Command::Singular,
        FamilySpec::new("exp_times_power", 10).param("nu", 0.5),
        |_| {},
    ));
    jobs.push(job(
        "singular-jl_log_power",
        Command::Singular,
        FamilySpec::new("jl_log_power", 11).param("nu", 1.0),
        |_| {},
    ));
    for (name, spec) in envelope_families() {
        jobs.push(job(format!("envelope-{name}"), Command::Singular, spec, |_| {}));
    }

    jobs.push(job("curve-exp-9", Command::Curve, FamilySpec::new("exp", 9), |c| c.alpha_max = Some(40.0)));
    jobs.push(job("curve-exp-10", Command::Curve, FamilySpec::new("exp", 10), |c| c.alpha_max = Some(300.0)));

    for n in 10..=15 {
        for eps in EPS_GRID {
            let cases = if HARDY_DIMENSIONS.contains(&n) && eps == 0.5 { 1000 } else { 1 };
            jobs.push(job(format!("stability-exp-{n}-{eps}"), Command::Stability, FamilySpec::new("exp", n), |c| {
                c.eps = Some(eps);
                c.cases = Some(cases);
                c.seed = Some(20_240_601);
            }));
        }
    }
    for gamma in [1.0, -1.0] {
        jobs.push(job(
            format!("stability-f_n_gamma-{gamma}"),
            Command::Stability,
            FamilySpec::new("f_n_gamma", 10).param("gamma", gamma),
            |_| {},
        ));
    }
    jobs.push(job(
        "translate-f_n_gamma",
        Command::Translate,
        FamilySpec::new("f_n_gamma", 10).param("gamma", -1.0),
        |c| {
            c.c_ladder = Some(vec![0.0, 1.0, 5.0, 20.0]);
        },
    ));
    jobs
}

struct Pass {
    root: PathBuf,
    errors: BTreeMap<String, String>,
}

impl Pass {
    fn execute(root: &Path, jobs: &[Job]) -> Self {
        let mut errors = BTreeMap::new();
        for job in jobs {
            let mut config = job.config.clone();
            config.out_dir = Some(root.join(&job.label));
            if let Err(e) = run(config) {
                errors.insert(job.label.clone(), e.to_string());
            }
        }
        Self { root: root.to_path_buf(), errors }
    }

    fn json(&self, label: &str, file: &str) -> Result<Value, String> {
        if let Some(e) = self.errors.get(label) {
            return Err(format!("{label}: {e}"));
        }
        let text = fs::read_to_string(self.root.join(label).join(file)).map_err(|e| format!("{label}/{file}: {e}"))?;
        serde_json::from_str(&text).map_err(|e| format!("{label}/{file}: {e}"))
    }

    fn text(&self, label: &str, file: &str) -> Result<String, String> {
        fs::read_to_string(self.root.join(label).join(file)).map_err(|e| format!("{label}/{file}: {e}"))
    }

    fn seconds(&self, label: &str) -> Result<f64, String> {
        num(&self.json(label, "manifest.json")?["wallTimeSeconds"])
    }
}

fn num(v: &Value) -> Result<f64, String> {
    v.as_f64().ok_or_else(|| format!("expected a number, found {v}"))
}

type Check = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gamma_table(pass: &Pass) -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, spec) in gamma_catalogue() {
        let label = format!("gamma-{name}-{}", spec.n);
        let report = pass.json(&label, "gamma.json")?;
        let k = num(&report["declared"]["k"])?;
        let declared = num(&report["declared"]["gamma"])?;
        let estimate = num(&report["extrapolatedGamma"])?;
        let tol = if k == 2.0 { 0.1 } else { 0.05 };
        let secs = pass.seconds(&label)?;
        let good = (estimate - declared).abs() <= tol && secs <= 10.0;
        ok &= good;
        lines.push(format!("{name}(N={}) k={k} γ={declared:.4} est={estimate:.4} {secs:.2}s", spec.n));
    }
    verdict(ok, lines.join("; "))
}

fn q_reproduction(pass: &Pass) -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for p in [3.0, 7.0, p_jl(11)] {
        let q = num(&pass.json(&format!("q-power-{p:.4}"), "gamma.json")?["qEstimate"])?;
        let target = p / (p - 1.0);
        ok &= (q - target).abs() <= 1e-3;
        lines.push(format!("p={p:.4}: q={q:.6} (p/(p-1)={target:.6})"));
    }
    let q = num(&pass.json("q-exp", "gamma.json")?["qEstimate"])?;
    ok &= q == 1.0;
    lines.push(format!("exp: q={q}"));
    let q = num(&pass.json("q-exp_exp", "gamma.json")?["qEstimate"])?;
    ok &= (q - 1.0).abs() <= 1e-2;
    lines.push(format!("exp_exp: q={q:.6}"));
    verdict(ok, lines.join("; "))
}

fn singular_benchmarks(pass: &Pass) -> Check {
    let exp = num(&pass.json("singular-exp-10", "singular.json")?["lambdaStar"])?;
    // V = F⁻¹(r²/C) with F(u) = (1+u)^{1-p}/(p-1) vanishes where r² = C/(p-1).
    let p = p_jl(11);
    let oracle = (22.0 - 4.0 * q_jl(11)) / (p - 1.0);
    let power = num(&pass.json("singular-power-11", "singular.json")?["lambdaStar"])?;
    verdict(
        (exp - 16.0).abs() <= 1e-6 && (power - oracle).abs() <= 1e-6,
        format!("exp N=10: λ*={exp:.12} (16); power p_JL N=11: λ*={power:.12} ({oracle:.12})"),
    )
}

fn curve_rows(text: &str) -> Vec<(f64, f64)> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .records()
        .filter_map(|r| {
            let r = r.ok()?;
            r[3].is_empty().then(|| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        })
        .collect()
}

fn curve_dichotomy(pass: &Pass) -> Check {
    let rows = curve_rows(&pass.text("curve-exp-9", "curve.csv")?);
    let sign_changes = rows.windows(2).filter(|w| (w[0].1 - 14.0).signum() != (w[1].1 - 14.0).signum()).count();
    let nine = pass.json("curve-exp-9", "curve.json")?;
    let crossings = nine["crossings"].as_array().map_or(0, Vec::len);
    let ten = pass.json("curve-exp-10", "curve.json")?;
    let turns = ten["turningPoints"].as_array().map_or(usize::MAX, Vec::len);
    let increasing = ten["increasing"].as_bool() == Some(true);
    let sup = num(&ten["supLambda"])?;
    let (t9, t10) = (pass.seconds("curve-exp-9")?, pass.seconds("curve-exp-10")?);
    verdict(
        sign_changes >= 3
            && crossings >= 3
            && turns == 0
            && increasing
            && (sup - 16.0).abs() <= 1e-2
            && t9 <= 120.0
            && t10 <= 120.0,
        format!(
            "N=9: {sign_changes} sign changes of λ-14 on (0,40], {crossings} refined crossings, {t9:.1}s; \
             N=10: {turns} turns, increasing={increasing}, sup λ={sup:.12} on (0,300], {t10:.1}s"
        ),
    )
}

fn central_asymptotic(pass: &Pass) -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for label in ["singular-exp_times_power", "singular-jl_log_power"] {
        let report = pass.json(label, "singular.json")?;
        let table = report["tables"]
            .as_array()
            .and_then(|t| t.iter().find(|t| t["quantity"] == "fprime"))
            .ok_or_else(|| format!("{label}: no f' table"))?;
        let gamma = num(&table["gamma"])?;
        let limit = num(&table["extrapolated"])?;
        let window = &table["fitWindow"];
        let in_window = num(&window[0])? == 20.0 && num(&window[1])? == 40.0;
        let good = (limit - gamma).abs() <= 0.1 * gamma.abs() && in_window;
        ok &= good;
        lines.push(format!("{label}: limit={limit:.5} γ={gamma:.5}"));
    }
    verdict(ok, lines.join("; "))
}

fn envelopes(pass: &Pass) -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, _) in envelope_families() {
        let label = format!("envelope-{name}");
        let report = pass.json(&label, "singular.json")?;
        let k = num(&report["asymptotics"]["k"])?;
        let gamma = num(&report["asymptotics"]["gamma"])?;
        let text = pass.text(&label, "trajectory.csv")?;
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let rows: Vec<(f64, f64)> = reader
            .records()
            .map(|r| {
                let r = r.unwrap();
                (r[0].parse().unwrap(), r[1].parse().unwrap())
            })
            .collect();
        let bound = 2f64.powf(-k) * (1.0 + gamma.abs()) * 1.2;
        let worst = rows.iter().filter(|(t, _)| *t >= 10.0).map(|(t, x)| t.powf(k) * x.abs()).fold(0.0, f64::max);
        let at40 = rows
            .iter()
            .min_by(|a, b| (a.0 - 40.0).abs().total_cmp(&(b.0 - 40.0).abs()))
            .map(|&(t, x)| (t, (t.powf(k) * x + gamma / 2f64.powf(k + 2.0)).abs()))
            .ok_or("empty trajectory")?;
        let good = worst <= bound && at40.1 < 0.1 * gamma.abs() + 0.01;
        ok &= good;
        lines.push(format!(
            "{name} k={k}: sup t^k|x|={worst:.4}≤{bound:.4}, |t^k x+γ/2^(k+2)|={:.2e} at t={:.2}",
            at40.1, at40.0
        ));
    }
    verdict(ok, lines.join("; "))
}

fn hardy_suite(pass: &Pass) -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for n in HARDY_DIMENSIONS {
        let suite = &pass.json(&format!("stability-exp-{n}-0.5"), "stability.json")?["deficitSuite"];
        let cases = suite["summary"]["cases"].as_u64().unwrap_or(0);
        let min = num(&suite["summary"]["minDeficit"])?;
        let failures = suite["failures"].as_u64().unwrap_or(u64::MAX);
        ok &= cases == 1000 && failures == 0 && min >= -1e-10;
        lines.push(format!("N={n}: {cases} cases, min deficit {min:.3e}"));
    }
    let mut grid = 0;
    let mut worst_spread: f64 = 0.0;
    let mut largest: f64 = f64::MIN;
    for n in 10..=15 {
        for eps in EPS_GRID {
            let report = pass.json(&format!("stability-exp-{n}-{eps}"), "stability.json")?;
            let values: Vec<f64> = report["criticalValues"]
                .as_array()
                .ok_or("no critical values")?
                .iter()
                .map(|c| num(&c["value"]))
                .collect::<Result<_, _>>()?;
            if values.len() != 10 {
                return Err(format!("N={n} ε={eps}: {} critical values", values.len()));
            }
            grid += values.len();
            largest = values.iter().cloned().fold(largest, f64::max);
            let first = values[0];
            worst_spread = values.iter().map(|v| (v - first).abs()).fold(worst_spread, f64::max);
        }
    }
    ok &= grid == 540 && largest < 0.0 && worst_spread <= 1e-12;
    lines.push(format!("{grid} (ε,n,N) values, max {largest:.4}, n-spread {worst_spread:.1e}"));
    verdict(ok, lines.join("; "))
}

fn stability_dichotomy(pass: &Pass) -> Check {
    let plus = pass.json("stability-f_n_gamma-1", "stability.json")?;
    let minus = pass.json("stability-f_n_gamma--1", "stability.json")?;
    let fired = plus["probes"]["firstUnstable"].as_u64();
    let fires_plus = fired.is_some_and(|n| n <= 10);
    let fires_minus = minus["probes"]["probes"].as_array().ok_or("no probes")?.iter().any(|p| p["unstable"] == true);
    let counts: Vec<(f64, u64)> = minus["asymptoticSturmCounts"]
        .as_array()
        .ok_or("no Sturm counts")?
        .iter()
        .map(|c| (c[0].as_f64().unwrap(), c[1].as_u64().unwrap()))
        .collect();
    let radii_ok = counts.iter().map(|c| c.0).collect::<Vec<_>>() == vec![1e-3, 1e-5, 1e-8];
    let zero = counts.iter().all(|c| c.1 == 0);
    verdict(
        fires_plus && !fires_minus && radii_ok && zero,
        format!("γ=1 first unstable n={fired:?}; γ=-1 fires={fires_minus}, Sturm counts {counts:?}"),
    )
}

fn translation(pass: &Pass) -> Check {
    let report = pass.json("translate-f_n_gamma", "translate.json")?;
    let rows = report["rows"].as_array().ok_or("no rows")?;
    let turns: Vec<u64> = rows.iter().map(|r| r["report"]["turningCount"].as_u64().unwrap_or(u64::MAX)).collect();
    let to_cap = rows.iter().all(|r| r["report"]["exploredAlphaMax"] == r["report"]["alphaCap"]);
    let cs: Vec<f64> = rows.iter().map(|r| r["c"].as_f64().unwrap_or(f64::NAN)).collect();
    let non_increasing =
        report["turningNonIncreasing"].as_bool() == Some(true) && turns.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        cs == [0.0, 1.0, 5.0, 20.0] && non_increasing && turns.last() == Some(&0) && to_cap,
        format!(
            "c={cs:?} turns={turns:?}, explored to the cap at every c: {to_cap}, explored αmax {}",
            report["exploredAlphaMax"]
        ),
    )
}

/// Every artifact except the manifests, which record wall time.
fn artifacts(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for dir in fs::read_dir(root).into_iter().flatten().flatten() {
        for file in fs::read_dir(dir.path()).into_iter().flatten().flatten() {
            let path = file.path();
            if path.file_name().is_some_and(|n| n != "manifest.json") {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism(first: &Pass, second: &Pass) -> Check {
    let a = artifacts(&first.root);
    let b = artifacts(&second.root);
    let json = a.keys().filter(|p| p.extension().is_some_and(|e| e == "json")).count();
    let differing: Vec<String> = a
        .iter()
        .filter(|(path, bytes)| b.get(*path) != Some(bytes))
        .map(|(path, _)| path.display().to_string())
        .collect();
    verdict(
        !a.is_empty() && a.len() == b.len() && differing.is_empty(),
        format!("{} artifacts ({json} JSON reports) compared, differing: {differing:?}", a.len()),
    )
}

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("scratch directory");
    let jobs = jobs();
    let started = Instant::now();
    let first = Pass::execute(&scratch.path().join("first"), &jobs);
    let second = Pass::execute(&scratch.path().join("second"), &jobs);

    let criteria: [(&str, Check); 10] = [
        ("γ-table reproduction", gamma_table(&first)),
        ("q reproduction", q_reproduction(&first)),
        ("closed-form singular benchmarks", singular_benchmarks(&first)),
        ("curve-shape dichotomy", curve_dichotomy(&first)),
        ("asymptotic of λ* f'(U*)", central_asymptotic(&first)),
        ("transformed-trajectory envelopes", envelopes(&first)),
        ("Hardy suite and critical test values", hardy_suite(&first)),
        ("stability dichotomy", stability_dichotomy(&first)),
        ("translation experiment", translation(&first)),
        ("determinism", determinism(&first, &second)),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        match check {
            Ok(detail) => println!("PASS {:>2} {title}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {title}: {detail}", i + 1);
            }
        }
    }
    println!("{} of 10 criteria pass ({:.1}s for two passes)", 10 - failed, started.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
