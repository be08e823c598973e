//! Command-line front end: argument parsing, validation and serialization.
//!
//! Every command renders its artifact into a `String`; the binary only
//! decides where to write it. Numbers are written in shortest round-trip
//! form, identically in CSV and JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::Error;
use crate::linalg::{expectation, ComplexVector};
use crate::measurement::{
    coincidence_density, completeness_defect, eigenstate_density_closed_form,
    single_outcome_density, OutcomeDensity, PointerGrid, Resolution,
};
use crate::polarization::{
    bell_operator, bell_state, classical_chsh_bound, stokes_eigenstate, stokes_operator, Sign,
    StokesAxis,
};
use crate::quasiprob::{
    deconvolve, k_distribution, quasiprob_table_pair, quasiprob_table_single, JointLabel,
    KDistribution, QuasiProbTable, System,
};

pub const BASIS_NOTE: &str = "basis (R, L); photon a is the slow tensor index";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// One-photon outcome density (s1m, p_s2_plus, p_s2_minus)
    Single,
    /// Two-photon coincidence density
    Pair,
    /// Joint quasi-probability table
    Table,
    /// Distribution of the Bell correlation K
    Kdist,
    /// Classical bound versus quantum expectation of K
    Bound,
    /// Completeness and oracle self-checks
    Check,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Single => "single",
            Command::Pair => "pair",
            Command::Table => "table",
            Command::Kdist => "kdist",
            Command::Bound => "bound",
            Command::Check => "check",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NamedState {
    /// s2 = +1 eigenstate
    #[value(name = "y+")]
    YPlus,
    /// s2 = -1 eigenstate
    #[value(name = "y-")]
    YMinus,
    /// s1 = +1 eigenstate
    #[value(name = "x+")]
    XPlus,
    /// s1 = -1 eigenstate
    #[value(name = "x-")]
    XMinus,
    /// right circular (s3 = +1)
    R,
    /// left circular (s3 = -1)
    L,
    /// entangled pair state with <K> = 2√2
    Bell,
}

impl NamedState {
    fn name(self) -> &'static str {
        match self {
            NamedState::YPlus => "y+",
            NamedState::YMinus => "y-",
            NamedState::XPlus => "x+",
            NamedState::XMinus => "x-",
            NamedState::R => "r",
            NamedState::L => "l",
            NamedState::Bell => "bell",
        }
    }

    pub fn vector(self) -> ComplexVector {
        match self {
            NamedState::YPlus => stokes_eigenstate(StokesAxis::S2, Sign::Plus),
            NamedState::YMinus => stokes_eigenstate(StokesAxis::S2, Sign::Minus),
            NamedState::XPlus => stokes_eigenstate(StokesAxis::S1, Sign::Plus),
            NamedState::XMinus => stokes_eigenstate(StokesAxis::S1, Sign::Minus),
            NamedState::R => stokes_eigenstate(StokesAxis::S3, Sign::Plus),
            NamedState::L => stokes_eigenstate(StokesAxis::S3, Sign::Minus),
            NamedState::Bell => bell_state(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SystemArg {
    Single,
    Pair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// projector interference amplitudes
    Analytic,
    /// least-squares fit of the sampled density
    Deconvolve,
}

#[derive(Debug, Parser)]
#[command(
    name = "weakpol",
    about = "Finite-resolution photon polarization statistics, quasi-probabilities and Bell correlations"
)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Named input state
    #[arg(long, value_enum, conflicts_with = "state_file")]
    pub state: Option<NamedState>,
    /// JSON file {"amplitudes": [[re, im], ...]} with 2 or 4 amplitudes
    #[arg(long)]
    pub state_file: Option<PathBuf>,
    /// Table system; inferred from the state when omitted
    #[arg(long, value_enum)]
    pub system: Option<SystemArg>,
    /// Resolution δs, or "inf" for the δs → ∞ limit (table and kdist only)
    #[arg(long, allow_hyphen_values = true, value_parser = parse_resolution)]
    pub delta_s: Option<Resolution>,
    /// Pointer grid LO:HI:STEP (photon a)
    #[arg(long, allow_hyphen_values = true, value_parser = parse_grid)]
    pub grid: Option<PointerGrid>,
    /// Pointer grid LO:HI:STEP for photon b (defaults to --grid)
    #[arg(long, allow_hyphen_values = true, value_parser = parse_grid)]
    pub grid_b: Option<PointerGrid>,
    /// How table weights are obtained
    #[arg(long, value_enum, default_value = "analytic")]
    pub method: Method,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output path; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_resolution(s: &str) -> Result<Resolution, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(Resolution::Limit),
        other => {
            let v: f64 = other.parse().map_err(|_| format!("not a number: {s}"))?;
            Resolution::finite(v).map_err(|e| e.to_string())
        }
    }
}

pub fn parse_grid(s: &str) -> Result<PointerGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(format!("expected LO:HI:STEP, got {s}"));
    };
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("not a number: {t}"))
    };
    PointerGrid::new(num(lo)?, num(hi)?, num(step)?).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numerical guard: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) | CliError::Io(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::IllConditioned { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Debug, Deserialize)]
struct StateFile {
    amplitudes: Vec<[f64; 2]>,
}

/// Input state together with how it was selected.
#[derive(Clone, Debug)]
pub struct StateSpec {
    pub source: String,
    pub vector: ComplexVector,
}

/// How the artifact is rendered. `Text` is the default for the report-style
/// commands (`kdist`, `bound`, `check`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Text,
}

/// Validated configuration of one invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub state: Option<StateSpec>,
    pub system: Option<System>,
    pub resolution: Option<Resolution>,
    pub grid_a: Option<PointerGrid>,
    pub grid_b: Option<PointerGrid>,
    pub method: Method,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

fn load_state_file(path: &PathBuf) -> Result<StateSpec, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let parsed: StateFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad state file {}: {e}", path.display())))?;
    let n = parsed.amplitudes.len();
    if n != 2 && n != 4 {
        return Err(CliError::Usage(format!(
            "state file must hold 2 or 4 amplitudes, got {n}"
        )));
    }
    let entries: Vec<Complex64> = parsed
        .amplitudes
        .iter()
        .map(|[re, im]| Complex64::new(*re, *im))
        .collect();
    let raw = ComplexVector::from_slice(&entries);
    let norm = raw.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(CliError::Usage(
            "state file amplitudes have zero norm".into(),
        ));
    }
    Ok(StateSpec {
        source: path.display().to_string(),
        vector: raw.normalized(),
    })
}

fn system_of(state: &StateSpec) -> System {
    if state.vector.dim() == 4 {
        System::Pair
    } else {
        System::Single
    }
}

impl RunConfig {
    pub fn from_args(args: Args) -> Result<Self, CliError> {
        let explicit_state = match (&args.state, &args.state_file) {
            (Some(named), None) => Some(StateSpec {
                source: named.name().to_string(),
                vector: named.vector(),
            }),
            (None, Some(path)) => Some(load_state_file(path)?),
            (None, None) => None,
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "--state and --state-file are exclusive".into(),
                ))
            }
        };
        let default_state = |named: NamedState| StateSpec {
            source: named.name().to_string(),
            vector: named.vector(),
        };
        let wanted_system = args.system.map(|s| match s {
            SystemArg::Single => System::Single,
            SystemArg::Pair => System::Pair,
        });

        let report = matches!(
            args.command,
            Command::Kdist | Command::Bound | Command::Check
        );
        let format = match args.format {
            Some(Format::Csv) => OutputFormat::Csv,
            Some(Format::Json) => OutputFormat::Json,
            None if report => OutputFormat::Text,
            None => OutputFormat::Csv,
        };

        let mut cfg = RunConfig {
            command: args.command,
            state: None,
            system: None,
            resolution: None,
            grid_a: None,
            grid_b: None,
            method: args.method,
            format,
            out: args.out,
        };

        let need_system = |state: &StateSpec, system: System| -> Result<(), CliError> {
            if system_of(state) != system {
                return Err(CliError::Usage(format!(
                    "command {} needs a {} state, got {} amplitudes",
                    args.command.name(),
                    system.name(),
                    state.vector.dim()
                )));
            }
            Ok(())
        };
        let finite = |default: f64| -> Result<Resolution, CliError> {
            match args.delta_s {
                Some(Resolution::Limit) => Err(CliError::Usage(format!(
                    "--delta-s inf is only accepted by table and kdist, not {}",
                    args.command.name()
                ))),
                Some(r) => Ok(r),
                None => Ok(Resolution::Finite(default)),
            }
        };

        match args.command {
            Command::Single => {
                let state = explicit_state.unwrap_or_else(|| default_state(NamedState::YPlus));
                need_system(&state, System::Single)?;
                cfg.resolution = Some(finite(0.6)?);
                cfg.grid_a = Some(args.grid.unwrap_or(default_grid(-6.0, 6.0, 0.01)));
                cfg.system = Some(System::Single);
                cfg.state = Some(state);
            }
            Command::Pair => {
                let state = explicit_state.unwrap_or_else(|| default_state(NamedState::Bell));
                need_system(&state, System::Pair)?;
                cfg.resolution = Some(finite(2.0)?);
                let grid_a = args.grid.unwrap_or(default_grid(-14.0, 14.0, 0.05));
                cfg.grid_a = Some(grid_a);
                cfg.grid_b = Some(args.grid_b.unwrap_or(grid_a));
                cfg.system = Some(System::Pair);
                cfg.state = Some(state);
            }
            Command::Table | Command::Kdist => {
                let system = match (args.command, wanted_system, &explicit_state) {
                    (Command::Kdist, Some(System::Single), _) => {
                        return Err(CliError::Usage("kdist needs the pair system".into()))
                    }
                    (Command::Kdist, _, _) => System::Pair,
                    (_, Some(s), _) => s,
                    (_, None, Some(state)) => system_of(state),
                    (_, None, None) => System::Pair,
                };
                let state = explicit_state.unwrap_or_else(|| {
                    default_state(match system {
                        System::Single => NamedState::YPlus,
                        System::Pair => NamedState::Bell,
                    })
                });
                need_system(&state, system)?;
                let res = args.delta_s.unwrap_or(Resolution::Limit);
                if args.method == Method::Deconvolve {
                    let ds = res.delta_s().map_err(|_| {
                        CliError::Usage("--method deconvolve needs a finite --delta-s".into())
                    })?;
                    let half = 1.0 + 8.0 * ds;
                    let step = match system {
                        System::Single => 0.01,
                        System::Pair => 0.05,
                    };
                    let grid_a = args.grid.unwrap_or(default_grid(-half, half, step));
                    cfg.grid_a = Some(grid_a);
                    if system == System::Pair {
                        cfg.grid_b = Some(args.grid_b.unwrap_or(grid_a));
                    }
                }
                cfg.resolution = Some(res);
                cfg.system = Some(system);
                cfg.state = Some(state);
            }
            Command::Bound | Command::Check => {}
        }
        Ok(cfg)
    }

    fn config_json(&self) -> Value {
        let grid = |g: &Option<PointerGrid>| match g {
            Some(g) => json!({"lo": g.lo(), "hi": g.hi(), "step": g.step()}),
            None => Value::Null,
        };
        json!({
            "state": self.state.as_ref().map(|s| s.source.clone()),
            "system": self.system.map(|s| s.name()),
            "delta_s": self.resolution.map(resolution_json),
            "grid": grid(&self.grid_a),
            "grid_b": grid(&self.grid_b),
            "method": match self.method { Method::Analytic => "analytic", Method::Deconvolve => "deconvolve" },
            "basis": BASIS_NOTE,
        })
    }
}

fn default_grid(lo: f64, hi: f64, step: f64) -> PointerGrid {
    PointerGrid::new(lo, hi, step).expect("default grids are valid")
}

fn resolution_json(r: Resolution) -> Value {
    match r {
        Resolution::Finite(ds) => json!(ds),
        Resolution::Limit => json!("inf"),
    }
}

/// Shortest round-trip decimal, the same text serde_json writes.
pub fn fmt_num(x: f64) -> String {
    serde_json::to_string(&x).expect("finite numbers serialize")
}

/// Rendered artifact and the exit status the invocation should end with.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub artifact: String,
    pub exit_code: i32,
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let ok = |artifact: String| {
        Ok(RunOutput {
            artifact,
            exit_code: EXIT_OK,
        })
    };
    match cfg.command {
        Command::Single | Command::Pair => {
            let state = &cfg.state.as_ref().expect("validated").vector;
            let res = cfg.resolution.expect("validated");
            let grid_a = cfg.grid_a.expect("validated");
            let density = match cfg.command {
                Command::Single => single_outcome_density(state, res, grid_a)?,
                _ => coincidence_density(state, res, grid_a, cfg.grid_b.expect("validated"))?,
            };
            ok(render_density(cfg, &density))
        }
        Command::Table => ok(render_table(cfg, &build_table(cfg)?)),
        Command::Kdist => {
            let table = build_table(cfg)?;
            ok(render_kdist(cfg, &k_distribution(&table)?))
        }
        Command::Bound => ok(render_bound(cfg)?),
        Command::Check => {
            let checks = run_checks()?;
            let all = checks.iter().all(|c| c.passed);
            Ok(RunOutput {
                artifact: render_checks(cfg, &checks),
                exit_code: if all { EXIT_OK } else { EXIT_NUMERICAL },
            })
        }
    }
}

fn build_table(cfg: &RunConfig) -> Result<QuasiProbTable, CliError> {
    let state = &cfg.state.as_ref().expect("validated").vector;
    let res = cfg.resolution.expect("validated");
    let system = cfg.system.expect("validated");
    let table = match (cfg.method, system) {
        (Method::Analytic, System::Single) => quasiprob_table_single(state, res)?,
        (Method::Analytic, System::Pair) => quasiprob_table_pair(state, res)?,
        (Method::Deconvolve, System::Single) => {
            let density = single_outcome_density(state, res, cfg.grid_a.expect("validated"))?;
            deconvolve(&density, res)?
        }
        (Method::Deconvolve, System::Pair) => {
            let density = coincidence_density(
                state,
                res,
                cfg.grid_a.expect("validated"),
                cfg.grid_b.expect("validated"),
            )?;
            deconvolve(&density, res)?
        }
    };
    Ok(table)
}

fn envelope(cfg: &RunConfig, data: Value) -> String {
    let doc = json!({
        "command": cfg.command.name(),
        "config": cfg.config_json(),
        "data": data,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
    s.push('\n');
    s
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_density(cfg: &RunConfig, density: &OutcomeDensity) -> String {
    let coord_names: &[&str] = if density.is_pair() {
        &["s1m_a", "s1m_b"]
    } else {
        &["s1m"]
    };
    let columns: Vec<String> = coord_names
        .iter()
        .map(|s| s.to_string())
        .chain(density.sheets.iter().map(|s| s.outcome.column_name()))
        .collect();

    match cfg.format {
        OutputFormat::Json => {
            let rows: Vec<Value> = (0..density.points())
                .map(|k| {
                    let mut row: Vec<f64> = density.coordinates(k);
                    row.extend(density.sheets.iter().map(|s| s.values[k]));
                    json!(row)
                })
                .collect();
            envelope(cfg, json!({"columns": columns, "rows": rows}))
        }
        _ => {
            let mut out = columns.join(",");
            out.push('\n');
            for k in 0..density.points() {
                let mut fields: Vec<String> =
                    density.coordinates(k).into_iter().map(fmt_num).collect();
                fields.extend(density.sheets.iter().map(|s| fmt_num(s.values[k])));
                out.push_str(&fields.join(","));
                out.push('\n');
            }
            out
        }
    }
}

fn render_table(cfg: &RunConfig, table: &QuasiProbTable) -> String {
    match cfg.format {
        OutputFormat::Json => {
            let records: Vec<Value> = table
                .entries
                .iter()
                .map(|e| json!({"labels": e.labels, "weight": e.weight}))
                .collect();
            envelope(
                cfg,
                json!({
                    "system": table.system.name(),
                    "delta_s": resolution_json(table.resolution),
                    "label_format": "[s1, s2] per photon, photon a first",
                    "entries": records,
                    "total": table.total(),
                    "normalization_deficit": table.normalization_deficit(),
                }),
            )
        }
        _ => {
            let mut out = String::new();
            match table.system {
                System::Single => {
                    out.push_str("s2,s1=-1,s1=0,s1=1\n");
                    for s2 in [Sign::Plus, Sign::Minus] {
                        let row: Vec<String> = JointLabel::COLUMN_ORDER
                            .iter()
                            .filter(|l| l.s2 == s2)
                            .map(|&l| fmt_num(table.get(&[l]).expect("full table")))
                            .collect();
                        let _ = writeln!(out, "{},{}", s2.as_i8(), row.join(","));
                    }
                }
                System::Pair => {
                    let header: Vec<String> = JointLabel::COLUMN_ORDER
                        .iter()
                        .map(|l| csv_quote(&l.to_string()))
                        .collect();
                    let _ = writeln!(
                        out,
                        "{},{}",
                        csv_quote("(s1b,s2b)\\(s1a,s2a)"),
                        header.join(",")
                    );
                    for b in JointLabel::ROW_ORDER {
                        let row: Vec<String> = JointLabel::COLUMN_ORDER
                            .iter()
                            .map(|&a| fmt_num(table.get(&[a, b]).expect("full table")))
                            .collect();
                        let _ = writeln!(out, "{},{}", csv_quote(&b.to_string()), row.join(","));
                    }
                }
            }
            out
        }
    }
}

fn render_kdist(cfg: &RunConfig, k: &KDistribution) -> String {
    match cfg.format {
        OutputFormat::Json => {
            let records: Vec<Value> = KDistribution::VALUES
                .iter()
                .map(|&v| json!({"K": v, "weight": k.get(v), "percent_rounded": k.rounded_percent(v)}))
                .collect();
            envelope(
                cfg,
                json!({"weights": records, "total": k.total(), "mean": k.mean()}),
            )
        }
        OutputFormat::Csv => {
            let mut out = String::from("K,weight,percent_rounded\n");
            for v in KDistribution::VALUES {
                let _ = writeln!(
                    out,
                    "{},{},{:.1}",
                    v,
                    fmt_num(k.get(v)),
                    k.rounded_percent(v)
                );
            }
            out
        }
        OutputFormat::Text => {
            let mut out = String::new();
            for v in KDistribution::VALUES {
                let _ = writeln!(
                    out,
                    "K={}: {:.1}% (exact {})",
                    v,
                    k.rounded_percent(v),
                    fmt_num(k.get(v))
                );
            }
            let _ = writeln!(out, "sum of weights = {}", fmt_num(k.total()));
            let _ = writeln!(out, "sum of K*weight = {}", fmt_num(k.mean()));
            out
        }
    }
}

fn render_bound(cfg: &RunConfig) -> Result<String, CliError> {
    let classical = classical_chsh_bound();
    let quantum = expectation(&bell_state(), &bell_operator())?;
    let margin = quantum - classical;
    Ok(match cfg.format {
        OutputFormat::Json => envelope(
            cfg,
            json!({
                "classical_bound": classical,
                "quantum_expectation": quantum,
                "violation_margin": margin,
            }),
        ),
        OutputFormat::Csv => format!(
            "quantity,value\nclassical_bound,{}\nquantum_expectation,{}\nviolation_margin,{}\n",
            fmt_num(classical),
            fmt_num(quantum),
            fmt_num(margin)
        ),
        OutputFormat::Text => format!(
            "classical max K = {}; quantum <K> = {:.6}; violation margin = {:.6}\n",
            classical, quantum, margin
        ),
    })
}

/// Outcome of one self-check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

fn check(name: impl Into<String>, value: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: value < tolerance,
        value,
        tolerance,
    }
}

/// Completeness of the measurement operators and the oracle cross-checks.
pub fn run_checks() -> Result<Vec<CheckResult>, CliError> {
    let mut out = Vec::new();
    let s1 = stokes_operator(StokesAxis::S1);

    for (ds, half) in [(0.6, 8.0), (2.0, 14.0)] {
        let grid = PointerGrid::symmetric(half, 1e-3)?;
        let defect = completeness_defect(&s1, Resolution::Finite(ds), grid)?;
        out.push(check(
            format!("completeness defect, delta_s={ds}"),
            defect,
            1e-6,
        ));
    }

    let y_plus = stokes_eigenstate(StokesAxis::S2, Sign::Plus);
    let grid = PointerGrid::new(-4.0, 4.0, 0.01)?;
    for ds in [0.3, 0.6, 1.0, 2.0] {
        let res = Resolution::Finite(ds);
        let d = single_outcome_density(&y_plus, res, grid)?;
        let mut worst = 0.0f64;
        for (k, m) in grid.points().enumerate() {
            let (p, q) = eigenstate_density_closed_form(res, m)?;
            worst = worst
                .max((d.sheets[0].values[k] - p).abs())
                .max((d.sheets[1].values[k] - q).abs());
        }
        out.push(check(
            format!("closed-form density oracle, delta_s={ds}"),
            worst,
            1e-12,
        ));
    }

    let res = Resolution::Finite(1.0);
    let d = single_outcome_density(&y_plus, res, PointerGrid::symmetric(8.0, 0.01)?)?;
    let diff = deconvolve(&d, res)?.max_abs_diff(&quasiprob_table_single(&y_plus, res)?);
    out.push(check("deconvolution oracle, single, delta_s=1", diff, 1e-8));

    let bell = bell_state();
    let g = PointerGrid::symmetric(8.0, 0.05)?;
    let d = coincidence_density(&bell, res, g, g)?;
    let diff = deconvolve(&d, res)?.max_abs_diff(&quasiprob_table_pair(&bell, res)?);
    out.push(check("deconvolution oracle, pair, delta_s=1", diff, 1e-6));

    let table = quasiprob_table_pair(&bell, res)?;
    let remixed = table.reconstruct(g, Some(g))?;
    let worst = d
        .sheets
        .iter()
        .zip(&remixed.sheets)
        .flat_map(|(x, y)| x.values.iter().zip(&y.values).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    out.push(check(
        "density reconstruction from table, pair, delta_s=1",
        worst,
        1e-10,
    ));

    let limit = quasiprob_table_pair(&bell, Resolution::Limit)?;
    let zero = limit
        .zero_marginal(0)
        .abs()
        .max(limit.zero_marginal(1).abs());
    out.push(check(
        "zero marginal at s1=0, pair limit table",
        zero,
        1e-12,
    ));

    let quantum = expectation(&bell, &bell_operator())?;
    let q = 2.0 * std::f64::consts::SQRT_2;
    out.push(check(
        "Bell expectation equals 2*sqrt(2)",
        (quantum - q).abs(),
        1e-12,
    ));
    let violation = quantum - classical_chsh_bound();
    out.push(CheckResult {
        name: "Bell expectation exceeds classical bound".into(),
        passed: violation > 0.0,
        value: violation,
        tolerance: 0.0,
    });
    Ok(out)
}

fn render_checks(cfg: &RunConfig, checks: &[CheckResult]) -> String {
    match cfg.format {
        OutputFormat::Json => {
            let records: Vec<Value> = checks
                .iter()
                .map(|c| json!({"name": c.name, "passed": c.passed, "value": c.value, "tolerance": c.tolerance}))
                .collect();
            envelope(cfg, json!(records))
        }
        OutputFormat::Csv => {
            let mut out = String::from("name,passed,value,tolerance\n");
            for c in checks {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    csv_quote(&c.name),
                    c.passed,
                    fmt_num(c.value),
                    fmt_num(c.tolerance)
                );
            }
            out
        }
        OutputFormat::Text => {
            let mut out = String::new();
            for c in checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                if c.tolerance == 0.0 {
                    let _ = writeln!(out, "{status} {}: {:e} (must be > 0)", c.name, c.value);
                } else {
                    let _ = writeln!(
                        out,
                        "{status} {}: {:e} (tolerance {:e})",
                        c.name, c.value, c.tolerance
                    );
                }
            }
            out
        }
    }
}
