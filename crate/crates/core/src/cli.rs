//! Command-line front end.
//!
//! Every flag has a key of the same name in the flat TOML file passed with
//! `--config`; flags win over the file. Structured output goes to stdout,
//! artifacts to `--out` when given, and diagnostics to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{self, build_instance, Execution, ExperimentConfig};
use crate::formulation::{export_lp, Strategy};
use crate::objective::{validate_eta, NormalizerScope};
use crate::worldgen::generate_world;

const DEFAULT_J: usize = 14;

#[derive(Debug, Parser)]
#[command(name = "crowdteam", version, about = "Optimal team recruitment for collaborative mobile crowdsourcing")]
struct Cli {
    /// Master seed; all randomness derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat TOML file with the same keys as the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact path (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a world and write it as JSON.
    GenWorld(ProblemArgs),
    /// Solve one instance and print the team with its true metrics.
    Solve(ProblemArgs),
    /// Write the 0-1 program of one instance in LP format.
    ExportLp(ProblemArgs),
    /// Run the Monte-Carlo density sweep and write the CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Clone, Default)]
struct ProblemArgs {
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
    /// Number of workers.
    #[arg(long = "J")]
    j: Option<usize>,
    /// Size of the skill universe.
    #[arg(long = "S")]
    s: Option<usize>,
    /// Number of required skills.
    #[arg(long)]
    sp: Option<usize>,
    /// Four comma-separated weights summing to 1.
    #[arg(long, value_parser = parse_eta)]
    eta: Option<Eta>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "M")]
    m: Option<usize>,
    /// Ring-lattice degree (default min(4, J-1)).
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Score teams with true instead of estimated relationships.
    #[arg(long = "true-relationships")]
    true_relationships: bool,
    /// per_view or global.
    #[arg(long, value_parser = parse_scope)]
    normalizers: Option<NormalizerScope>,
}

#[derive(Debug, Args, Clone, Default)]
struct SweepArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Realizations per (J, K) cell.
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long = "K-list", value_delimiter = ',')]
    k_list: Option<Vec<usize>>,
    #[arg(long = "J-list", value_delimiter = ',')]
    j_list: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Eta([f64; 4]);

fn parse_eta(s: &str) -> std::result::Result<Eta, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad weight '{p}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let eta: [f64; 4] = parts.try_into().map_err(|v: Vec<f64>| format!("expected 4 weights, got {}", v.len()))?;
    validate_eta(&eta, 1e-9).map_err(|e| e.to_string())?;
    Ok(Eta(eta))
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse::<Strategy>().map_err(|e| e.to_string())
}

fn parse_scope(s: &str) -> std::result::Result<NormalizerScope, String> {
    match s {
        "per_view" | "per-view" => Ok(NormalizerScope::PerView),
        "global" => Ok(NormalizerScope::Global),
        _ => Err(format!("unknown normalizer scope '{s}' (per_view|global)")),
    }
}

/// Config-file keys, one per flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    out: Option<PathBuf>,
    strategy: Option<String>,
    #[serde(rename = "J")]
    j: Option<usize>,
    #[serde(rename = "S")]
    s: Option<usize>,
    sp: Option<usize>,
    eta: Option<Vec<f64>>,
    sigma: Option<f64>,
    #[serde(rename = "M")]
    m: Option<usize>,
    #[serde(rename = "K")]
    k: Option<usize>,
    beta: Option<f64>,
    #[serde(rename = "true-relationships")]
    true_relationships: Option<bool>,
    normalizers: Option<String>,
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(rename = "K-list")]
    k_list: Option<Vec<usize>>,
    #[serde(rename = "J-list")]
    j_list: Option<Vec<usize>>,
}

fn load_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::param(format!("config {}: {}", path.display(), e.message())))
}

/// Resolved settings, echoed with every output.
#[derive(Debug, Clone, Serialize)]
struct Effective {
    command: &'static str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    strategy: Option<Strategy>,
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    j: Option<usize>,
    #[serde(rename = "S")]
    s: usize,
    sp: usize,
    eta: [f64; 4],
    sigma: f64,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    beta: f64,
    #[serde(rename = "true-relationships")]
    true_relationships: bool,
    normalizers: NormalizerScope,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(rename = "K-list", skip_serializing_if = "Option::is_none")]
    k_list: Option<Vec<usize>>,
    #[serde(rename = "J-list", skip_serializing_if = "Option::is_none")]
    j_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

impl Effective {
    fn resolve(
        command: &'static str,
        cli_seed: Option<u64>,
        cli_out: Option<PathBuf>,
        p: &ProblemArgs,
        file: &FileConfig,
    ) -> Result<Self> {
        let base = ExperimentConfig::default();
        let strategy = match (&p.strategy, &file.strategy) {
            (Some(s), _) => Some(*s),
            (None, Some(s)) => Some(parse_strategy(s).map_err(Error::Parameter)?),
            _ => None,
        };
        let eta = match (&p.eta, &file.eta) {
            (Some(e), _) => e.0,
            (None, Some(v)) => {
                let eta: [f64; 4] =
                    v.clone().try_into().map_err(|v: Vec<f64>| Error::param(format!("eta needs 4 weights, got {}", v.len())))?;
                validate_eta(&eta, 1e-9)?;
                eta
            }
            _ => base.eta,
        };
        let normalizers = match (&p.normalizers, &file.normalizers) {
            (Some(s), _) => *s,
            (None, Some(s)) => parse_scope(s).map_err(Error::Parameter)?,
            _ => base.normalizer_scope,
        };
        Ok(Effective {
            command,
            seed: cli_seed.or(file.seed).unwrap_or(base.seed),
            strategy,
            j: p.j.or(file.j),
            s: p.s.or(file.s).unwrap_or(base.num_skills),
            sp: p.sp.or(file.sp).unwrap_or(base.sp_size),
            eta,
            sigma: p.sigma.or(file.sigma).unwrap_or(base.sigma_base),
            m: p.m.or(file.m).unwrap_or(base.big_m),
            k: p.k.or(file.k),
            beta: p.beta.or(file.beta).unwrap_or(base.beta),
            true_relationships: p.true_relationships || file.true_relationships.unwrap_or(false),
            normalizers,
            n: None,
            k_list: None,
            j_list: None,
            out: cli_out.or_else(|| file.out.clone()),
        })
    }

    /// Fills in the single-instance defaults.
    fn single(mut self) -> Self {
        let j = self.j.unwrap_or(DEFAULT_J);
        self.j = Some(j);
        self.k = Some(self.k.unwrap_or(4.min(j.saturating_sub(1))));
        self
    }

    fn experiment(&self) -> ExperimentConfig {
        let base = ExperimentConfig::default();
        ExperimentConfig {
            j_list: self.j_list.clone().or_else(|| self.j.map(|j| vec![j])).unwrap_or(base.j_list),
            num_skills: self.s,
            sp_size: self.sp,
            eta: self.eta,
            big_m: self.m,
            sigma_base: self.sigma,
            k_list: self.k_list.clone().or_else(|| self.k.map(|k| vec![k])),
            beta: self.beta,
            realizations: self.n.unwrap_or(base.realizations),
            seed: self.seed,
            use_true_relationships: self.true_relationships,
            normalizer_scope: self.normalizers,
            attributes: base.attributes,
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parameter(_) | Error::Contract(_) | Error::Size(_) | Error::Json(_) => 1,
        Error::Infeasible { .. } => 2,
        Error::Io(_) | Error::Csv(_) => 3,
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run_cli`] with injected output streams.
pub fn run_cli_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(rendered.as_bytes()) } else { stderr.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match run(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let file = match &cli.config {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::GenWorld(p) => {
            let eff = Effective::resolve("gen-world", cli.seed, cli.out, &p, &file)?.single();
            let (j, k) = (eff.j.expect("single-instance J"), eff.k.expect("single-instance K"));
            let world = generate_world(&eff.experiment().world_config(j, k), eff.seed)?;
            emit_artifact(&eff, &world.to_json()?, stdout, stderr)
        }
        Command::Solve(p) => {
            let eff = Effective::resolve("solve", cli.seed, cli.out, &p, &file)?.single();
            let strategy = eff.strategy.unwrap_or(Strategy::Platform);
            let eff = Effective { strategy: Some(strategy), ..eff };
            let config = eff.experiment();
            let (solution, metrics) = instance(&eff)?.solve(&config, strategy)?;
            let doc = serde_json::json!({ "config": eff, "solution": solution, "metrics": metrics });
            let text = serde_json::to_string_pretty(&doc)?;
            if let Some(path) = &eff.out {
                write_file(path, &text)?;
            }
            writeln!(stdout, "{text}")?;
            Ok(())
        }
        Command::ExportLp(p) => {
            let eff = Effective::resolve("export-lp", cli.seed, cli.out, &p, &file)?.single();
            let strategy = eff.strategy.unwrap_or(Strategy::Platform);
            let eff = Effective { strategy: Some(strategy), ..eff };
            let program = instance(&eff)?.program(&eff.experiment(), strategy)?;
            emit_artifact(&eff, &export_lp(&program), stdout, stderr)
        }
        Command::Sweep(a) => {
            let mut eff = Effective::resolve("sweep", cli.seed, cli.out, &a.problem, &file)?;
            eff.n = Some(a.n.or(file.n).unwrap_or(ExperimentConfig::default().realizations));
            eff.k_list = a.k_list.or(file.k_list);
            eff.j_list = a.j_list.or(file.j_list);
            let config = eff.experiment();
            config.validate()?;
            let execution = Execution::from_env()?;
            writeln!(stderr, "sweep: J={:?} N={} seed={}", config.j_list, config.realizations, config.seed)?;
            let result = experiments::sweep(&config, execution)?;
            emit_artifact(&eff, &result.to_csv()?, stdout, stderr)
        }
    }
}

fn instance(eff: &Effective) -> Result<experiments::Instance> {
    let config = eff.experiment();
    config.validate()?;
    let (j, k) = (eff.j.expect("single-instance J"), eff.k.expect("single-instance K"));
    build_instance(&config, j, k, eff.seed)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        file.write_all(b"\n")?;
    }
    Ok(())
}

/// Artifact to `--out` with metadata JSON on stdout, or artifact to stdout
/// with metadata on stderr.
fn emit_artifact(eff: &Effective, artifact: &str, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let meta = serde_json::to_string(&serde_json::json!({ "config": eff }))?;
    match &eff.out {
        Some(path) => {
            write_file(path, artifact)?;
            writeln!(stdout, "{meta}")?;
        }
        None => {
            stdout.write_all(artifact.as_bytes())?;
            if !artifact.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            writeln!(stderr, "{meta}")?;
        }
    }
    Ok(())
}
