//! Command-line surface: scenario ingestion, modulus evaluation, trajectory
//! export, metastability certification, and the covering-number table.
//!
//! Exit codes: 0 ok, 1 verification failed, 2 config error, 3 I/O error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use proxmeta::rate::{nat, rat_to_string};
use proxmeta::verify::{self, CounterexampleFn, VerifyOptions};
use proxmeta::{
    ConfigError, RateFn, Scenario, ScenarioConfig, engine, geometry, moduli,
};

const EXIT_VERIFICATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

/// Iteration guard: bound recursions needing more unrollings than this are
/// refused unless --force is given.
const ITER_GUARD: u64 = 100_000;

#[derive(Parser)]
#[command(name = "proxmeta", about = "Proximal point algorithm with quantitative convergence moduli", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RunFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Plain,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the quantitative moduli of a scenario as exact decimal strings.
    Moduli {
        #[arg(long)]
        config: PathBuf,
        /// Precision index k (thresholds are 1/(k+1)).
        #[arg(long, default_value_t = 0)]
        k: u64,
        /// Offset L for the liminf modulus.
        #[arg(long, default_value_t = 0)]
        l: u64,
        /// Arguments (n, m, r) for the uniform Fejer modulus.
        #[arg(long, default_value_t = 0)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        m: u64,
        #[arg(long, default_value_t = 0)]
        r: u64,
        /// Counterexample function for Psi/Omega: `const:N`, `idplus:N`,
        /// `doubling`, `table:a,b,c`, inline JSON AST, or `@file`.
        #[arg(long)]
        g: Option<String>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Plain)]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluate Psi/Omega even when the recursion depth exceeds the guard.
        #[arg(long)]
        force: bool,
    },
    /// Run the iteration and export the trajectory with monitor residuals.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        steps: u64,
        #[arg(long, value_enum, default_value_t = RunFormat::Csv)]
        format: RunFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify the metastability bounds over a (k, g) grid; exit 0 iff every
    /// witness respects its bound.
    Verify {
        /// Scenario file or directory of *.json scenarios.
        #[arg(long)]
        config: PathBuf,
        /// Largest k for the Psi trials.
        #[arg(long, default_value_t = 5)]
        k_max: u64,
        /// Largest k for the Omega trials.
        #[arg(long, default_value_t = 3)]
        omega_k_max: u64,
        /// Subset of the g catalog, comma-separated (`const:1,doubling`);
        /// defaults to the full catalog.
        #[arg(long)]
        g: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        search_cap: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Print the total-boundedness covering counts alpha(0..=k).
    Cover {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct CmdError {
    code: u8,
    message: String,
}

impl CmdError {
    fn config(message: impl Into<String>) -> Self {
        CmdError { code: EXIT_CONFIG, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        CmdError { code: EXIT_IO, message: message.into() }
    }
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError::config(e.to_string())
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, CmdError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CmdError::io(format!("cannot read {}: {e}", path.display())))?;
    Ok(ScenarioConfig::from_json(&text)?.to_scenario()?)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CmdError> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => fs::write(path, content)
            .map_err(|e| CmdError::io(format!("cannot write {}: {e}", path.display()))),
    }
}

/// Parse a counterexample function from shorthand, inline JSON, or `@file`.
fn parse_g(spec: &str) -> Result<CounterexampleFn, CmdError> {
    let spec = spec.trim();
    if let Some(path) = spec.strip_prefix('@') {
        let text = fs::read_to_string(path)
            .map_err(|e| CmdError::io(format!("cannot read {path}: {e}")))?;
        return parse_g(&text);
    }
    if spec.starts_with('{') {
        let f: RateFn = serde_json::from_str(spec)
            .map_err(|e| CmdError::config(format!("bad g expression: {e}")))?;
        // sample it into a table so witness search can evaluate cheaply
        let mut values = Vec::new();
        for i in 0..64u64 {
            use num_traits::ToPrimitive;
            let v = f
                .eval(&nat(i))
                .map_err(|e| CmdError::config(format!("bad g expression: {e}")))?;
            values.push(v.to_u64().ok_or_else(|| {
                CmdError::config(format!("g({i}) does not fit the search range"))
            })?);
        }
        return Ok(CounterexampleFn::table(values));
    }
    CounterexampleFn::parse(spec).map_err(|e| CmdError::config(e.to_string()))
}

fn guard_depth(alpha: &RateFn, k: u64, force: bool) -> Result<(), CmdError> {
    use num_traits::ToPrimitive;
    if force {
        return Ok(());
    }
    for arg in [4 * k + 3, 8 * k + 7] {
        let v = alpha
            .eval(&nat(arg))
            .map_err(|e| CmdError::config(format!("alpha evaluation failed: {e}")))?;
        if v.to_u64().map(|v| v > ITER_GUARD).unwrap_or(true) {
            return Err(CmdError::config(format!(
                "alpha({arg}) = {v} exceeds the recursion guard of {ITER_GUARD}; pass --force to evaluate anyway"
            )));
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<ExitCode, CmdError> {
    match cli.cmd {
        Cmd::Moduli { config, k, l, n, m, r, g, format, out, force } => {
            cmd_moduli(&config, k, l, n, m, r, g.as_deref(), format, &out, force)
        }
        Cmd::Run { config, steps, format, out } => cmd_run(&config, steps, format, &out),
        Cmd::Verify { config, k_max, omega_k_max, g, search_cap, out, force } => {
            cmd_verify(&config, k_max, omega_k_max, g.as_deref(), search_cap, &out, force)
        }
        Cmd::Cover { config, k } => cmd_cover(&config, k),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_moduli(
    config: &Path,
    k: u64,
    l: u64,
    n: u64,
    m: u64,
    r: u64,
    g: Option<&str>,
    format: ReportFormat,
    out: &Option<PathBuf>,
    force: bool,
) -> Result<ExitCode, CmdError> {
    let sc = load_scenario(config)?;
    let ctx = verify::bound_context(&sc)
        .map_err(|e| CmdError::config(format!("cannot assemble bounds: {e}")))?;
    let k_nat = nat(k);

    let delta = moduli::delta_liminf(&ctx.b, &k_nat, &nat(l));
    let beta = moduli::beta_rate(&ctx.b, &ctx.theta, &k_nat)
        .map_err(|e| CmdError::config(e.to_string()))?;
    let (delta_f, omega_f) = moduli::closedness_moduli(&k_nat);
    let chi = moduli::fejer_modulus(&nat(n), &nat(m), &nat(r));
    let phi = moduli::approx_point_modulus(&ctx, &k_nat)
        .map_err(|e| CmdError::config(e.to_string()))?;

    let psi_omega = match g {
        None => None,
        Some(spec) => {
            guard_depth(&ctx.alpha, k, force)?;
            let g_rate = parse_g(spec)?.rate_fn();
            let psi = moduli::psi_rate(&ctx, &k_nat, &g_rate)
                .map_err(|e| CmdError::config(e.to_string()))?;
            let omega = moduli::omega_rate(&ctx, &k_nat, &g_rate)
                .map_err(|e| CmdError::config(e.to_string()))?;
            Some((psi, omega))
        }
    };

    let content = match format {
        ReportFormat::Plain => {
            let mut s = String::new();
            s.push_str(&format!("b {}\n", rat_to_string(&ctx.b)));
            s.push_str(&format!("delta_liminf {delta}\n"));
            s.push_str(&format!("beta {beta}\n"));
            s.push_str(&format!("closedness {delta_f} {omega_f}\n"));
            s.push_str(&format!("fejer {chi}\n"));
            s.push_str(&format!("phi {phi}\n"));
            if let Some((psi, omega)) = &psi_omega {
                s.push_str(&format!("psi {psi}\n"));
                s.push_str(&format!("omega {omega}\n"));
            }
            s
        }
        ReportFormat::Json => {
            let mut doc = serde_json::json!({
                "b": rat_to_string(&ctx.b),
                "k": k,
                "delta_liminf": delta.to_string(),
                "beta": beta.to_string(),
                "closedness": [delta_f.to_string(), omega_f.to_string()],
                "fejer": chi.to_string(),
                "phi": phi.to_string(),
            });
            if let Some((psi, omega)) = &psi_omega {
                doc["psi"] = psi.to_string().into();
                doc["omega"] = omega.to_string().into();
            }
            format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializes"))
        }
    };
    emit(out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(
    config: &Path,
    steps: u64,
    format: RunFormat,
    out: &Option<PathBuf>,
) -> Result<ExitCode, CmdError> {
    let sc = load_scenario(config)?;
    let traj = engine::run(&sc, steps)
        .map_err(|e| CmdError::config(format!("iteration failed: {e}")))?;
    let content = match format {
        RunFormat::Csv => traj.to_csv(),
        RunFormat::Json => {
            format!("{}\n", serde_json::to_string_pretty(&traj.to_json()).expect("serializes"))
        }
    };
    emit(out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn scenario_paths(config: &Path) -> Result<Vec<PathBuf>, CmdError> {
    if config.is_file() {
        return Ok(vec![config.to_path_buf()]);
    }
    if !config.is_dir() {
        return Err(CmdError::io(format!("{} does not exist", config.display())));
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(config)
        .map_err(|e| CmdError::io(format!("cannot read {}: {e}", config.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CmdError::config(format!("no scenarios in {}", config.display())));
    }
    Ok(paths)
}

fn cmd_verify(
    config: &Path,
    k_max: u64,
    omega_k_max: u64,
    g: Option<&str>,
    search_cap: u64,
    out: &Option<PathBuf>,
    force: bool,
) -> Result<ExitCode, CmdError> {
    let catalog = match g {
        None => CounterexampleFn::catalog(),
        Some(list) => list.split(',').map(parse_g).collect::<Result<Vec<_>, _>>()?,
    };
    if catalog.is_empty() {
        return Err(CmdError::config("empty g catalog"));
    }
    let opts = VerifyOptions {
        search_cap,
        iter_guard: if force { u64::MAX } else { ITER_GUARD },
    };

    let mut reports = Vec::new();
    let mut all_hold = true;
    for path in scenario_paths(config)? {
        let sc = load_scenario(&path)?;
        for k in 0..=k_max {
            for g in &catalog {
                let report = verify::certify_psi(&sc, k, g, &opts)
                    .map_err(|e| CmdError::config(format!("{}: {e}", sc.id)))?;
                all_hold &= report.holds;
                reports.push(report);
            }
        }
        for k in 0..=omega_k_max {
            for g in &catalog {
                let report = verify::certify_omega(&sc, k, g, &opts)
                    .map_err(|e| CmdError::config(format!("{}: {e}", sc.id)))?;
                all_hold &= report.holds;
                reports.push(report);
            }
        }
    }
    let content = format!("{}\n", serde_json::to_string_pretty(&reports).expect("serializes"));
    emit(out, &content)?;
    Ok(if all_hold { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VERIFICATION) })
}

fn cmd_cover(config: &Path, k_max: u64) -> Result<ExitCode, CmdError> {
    let sc = load_scenario(config)?;
    let alpha = match &sc.alpha_override {
        Some(a) => a.clone(),
        None => geometry::ball_total_boundedness_modulus(sc.space.dimension(), &sc.b)
            .map_err(|e| CmdError::config(e.to_string()))?,
    };
    println!("k alpha(k)");
    for k in 0..=k_max {
        println!("{k} {}", geometry::alpha_value(&alpha, k));
    }
    Ok(ExitCode::SUCCESS)
}
