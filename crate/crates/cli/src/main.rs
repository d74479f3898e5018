use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use reformlab_core::equilibrium::{solve, transparent_pooling_equilibrium};
use reformlab_core::model::check_assumptions;
use reformlab_core::montecarlo::simulate;
use reformlab_core::sweep::run_sweep;
use reformlab_core::verification::{
    bayes_consistency, deviation_check, divinity_breakeven, news_classification, DEFAULT_GRID,
};
use reformlab_core::welfare::{optimal_regime, thresholds};
use reformlab_core::{
    AgentAction, ModelError, Params, Regime, RentMode, SimConfig, SimStats, SweepSpec,
};

#[derive(Parser)]
#[command(name = "reformlab", version, about = "Reform signalling game toolkit")]
struct Cli {
    /// Which moderate-rent variant gates equilibrium construction [default: relaxed].
    #[arg(long, global = true, value_enum)]
    rent: Option<RentArg>,

    /// Output format (defaults depend on the subcommand).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

impl Cli {
    fn rent_mode(&self) -> RentMode {
        self.rent.map_or(RentMode::Relaxed, RentMode::from)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RentArg {
    Strict,
    Relaxed,
}

impl From<RentArg> for RentMode {
    fn from(r: RentArg) -> Self {
        match r {
            RentArg::Strict => RentMode::Strict,
            RentArg::Relaxed => RentMode::Relaxed,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every modelling assumption at a parameter point.
    Check(ParamsArg),
    /// Construct one regime's equilibrium.
    Solve {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long, value_parser = parse_regime)]
        regime: Regime,
        /// Pooling effort for transparent_pooling (default: lowest in the family).
        #[arg(long)]
        effort: Option<f64>,
    },
    /// Deviation, Bayes, news and break-even checks.
    Verify {
        #[command(flatten)]
        params: ParamsArg,
        /// Defaults to all three compared regimes.
        #[arg(long, value_parser = parse_regime)]
        regime: Option<Regime>,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
    },
    /// Welfare per regime, optimal regime and thresholds.
    Welfare(ParamsArg),
    /// Grid sweep described by a JSON spec, emitted as CSV.
    Sweep {
        #[arg(long)]
        sweep: PathBuf,
    },
    /// Monte Carlo simulation of one regime.
    Simulate {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long, value_parser = parse_regime)]
        regime: Regime,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
    },
}

#[derive(Args)]
struct ParamsArg {
    /// Parameter file (JSON object with p, phi, d, lambda, R, pi and optional M, eps_tol).
    #[arg(long)]
    params: PathBuf,
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    Regime::parse(s).ok_or_else(|| {
        format!(
            "unknown regime `{s}` (expected benchmark, nontransparent, opaque, \
             transparent_separating or transparent_pooling)"
        )
    })
}

enum Failure {
    /// Malformed input: exit code 2.
    Input(String),
    /// The parameters fail a precondition or a check fails: exit code 1.
    Precondition(String),
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        if e.is_precondition() {
            Failure::Precondition(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type Outcome = Result<(String, bool), Failure>;

fn read_file(path: &Path, flag: &str) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("--{flag} {}: {e}", path.display())))
}

fn load_params(arg: &ParamsArg) -> Result<Params, Failure> {
    let text = read_file(&arg.params, "params")?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("--params {}: {e}", arg.params.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn require_format(format: Format, allowed: &[Format], command: &str) -> Result<(), Failure> {
    if allowed.contains(&format) {
        Ok(())
    } else {
        Err(Failure::Input(format!(
            "--format: `{command}` does not support this format"
        )))
    }
}

fn run_check(cli: &Cli, arg: &ParamsArg) -> Outcome {
    let format = cli.format.unwrap_or(Format::Json);
    require_format(format, &[Format::Json], "check")?;
    let params = load_params(arg)?;
    let report = check_assumptions(&params)?;
    let ok = report.base_set_holds(cli.rent_mode());
    Ok((to_json(&report), ok))
}

fn run_solve(cli: &Cli, arg: &ParamsArg, regime: Regime, effort: Option<f64>) -> Outcome {
    let format = cli.format.unwrap_or(Format::Json);
    require_format(format, &[Format::Json], "solve")?;
    let params = load_params(arg)?;
    let eq = match (regime, effort) {
        (Regime::TransparentPooling, Some(e)) => {
            transparent_pooling_equilibrium(&params, cli.rent_mode(), e)?
        }
        (_, Some(_)) => {
            return Err(Failure::Input(
                "--effort only applies to --regime transparent_pooling".into(),
            ))
        }
        (_, None) => solve(&params, regime, cli.rent_mode())?,
    };
    Ok((to_json(&eq), true))
}

#[derive(Serialize)]
struct VerifyEntry {
    regime: Regime,
    deviation: reformlab_core::DeviationReport,
    bayes: reformlab_core::verification::BayesReport,
    news: reformlab_core::NewsReport,
    breakeven_status_quo: reformlab_core::BreakEvenReport,
}

fn run_verify(cli: &Cli, arg: &ParamsArg, regime: Option<Regime>, grid: usize) -> Outcome {
    let format = cli.format.unwrap_or(Format::Table);
    require_format(format, &[Format::Json, Format::Table], "verify")?;
    let params = load_params(arg)?;
    let regimes = match regime {
        Some(r) => vec![r],
        None => Regime::COMPARED.to_vec(),
    };
    let mut entries = Vec::new();
    for regime in regimes {
        let eq = solve(&params, regime, cli.rent_mode())?;
        entries.push(VerifyEntry {
            regime,
            deviation: deviation_check(&eq, &params, grid)?,
            bayes: bayes_consistency(&eq, &params)?,
            news: news_classification(&eq.profile, &params)?,
            breakeven_status_quo: divinity_breakeven(&eq, AgentAction::status_quo(), &params)?,
        });
    }
    let ok = entries
        .iter()
        .all(|e| e.deviation.unexplained_failures() == 0 && e.bayes.all_pass());
    let text = match format {
        Format::Json => to_json(&entries),
        _ => verify_table(&entries),
    };
    Ok((text, ok))
}

fn verify_table(entries: &[VerifyEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(out, "{}", e.deviation);
        let _ = writeln!(
            out,
            "bayes consistency: {}",
            if e.bayes.all_pass() { "pass" } else { "FAIL" }
        );
        let _ = write!(out, "news (prior {:.6}):", e.news.prior);
        for ev in &e.news.events {
            let class = ev
                .class
                .map_or("-".to_string(), |c| format!("{c:?}").to_lowercase());
            let _ = write!(out, " {:?}={class}", ev.event);
        }
        let _ = writeln!(out);
        let _ = write!(out, "break-even vs status quo:");
        for c in &e.breakeven_status_quo.cells {
            let _ = write!(out, " ({},{})={:.6}", c.agent_type, c.signal, c.breakeven);
        }
        let _ = writeln!(out, "\n");
    }
    out
}

#[derive(Serialize)]
struct WelfareOutput {
    welfare: reformlab_core::WelfareReport,
    thresholds: reformlab_core::Thresholds,
}

fn run_welfare(cli: &Cli, arg: &ParamsArg) -> Outcome {
    let format = cli.format.unwrap_or(Format::Json);
    require_format(format, &[Format::Json, Format::Csv], "welfare")?;
    let params = load_params(arg)?;
    let welfare = optimal_regime(&params, cli.rent_mode())?;
    let ok = welfare.optimal.is_some();
    let text = match format {
        Format::Csv => welfare.to_csv(),
        _ => to_json(&WelfareOutput {
            thresholds: thresholds(&params)?,
            welfare,
        }),
    };
    Ok((text, ok))
}

fn run_sweep_cmd(cli: &Cli, path: &Path) -> Outcome {
    let format = cli.format.unwrap_or(Format::Csv);
    require_format(format, &[Format::Csv], "sweep")?;
    let text = read_file(path, "sweep")?;
    let mut spec: SweepSpec = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("--sweep {}: {e}", path.display())))?;
    if let Some(r) = cli.rent {
        spec.rent_mode = r.into();
    }
    Ok((run_sweep(&spec)?, true))
}

fn run_simulate(cli: &Cli, arg: &ParamsArg, regime: Regime, seed: u64, n: u64) -> Outcome {
    let format = cli.format.unwrap_or(Format::Table);
    require_format(format, &[Format::Json, Format::Table], "simulate")?;
    let params = load_params(arg)?;
    let eq = solve(&params, regime, cli.rent_mode())?;
    let config = SimConfig {
        n_draws: n,
        seed,
        regime,
        params,
    };
    let stats = simulate(&config, &eq)?;
    let text = match format {
        Format::Json => to_json(&stats),
        _ => sim_table(&stats),
    };
    Ok((text, true))
}

fn opt(x: Option<f64>) -> String {
    x.map_or("NA".to_string(), |v| format!("{v:.6}"))
}

fn sim_table(s: &SimStats) -> String {
    let mut out = String::new();
    let rows = [
        ("regime", s.regime.to_string()),
        ("seed", s.seed.to_string()),
        ("draws", s.n_draws.to_string()),
        ("payoff mean", format!("{:.6}", s.payoff.mean)),
        ("payoff se", opt(s.payoff.se)),
        ("retention (c)", opt(s.retention_rate_congruent)),
        ("retention (n)", opt(s.retention_rate_noncongruent)),
        ("P(c | retained)", opt(s.congruent_given_retained)),
        ("success", format!("{:.6}", s.outcomes.success)),
        ("failure", format!("{:.6}", s.outcomes.failure)),
        ("status quo", format!("{:.6}", s.outcomes.status_quo)),
        ("Q mean", format!("{:.6}", s.q.mean)),
        ("Q se", opt(s.q.se)),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<18}{v:>22}");
    }
    out
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("REFORMLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::Input(format!(
            "REFORMLAB_THREADS: `{raw}` is not a positive integer"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(format!("REFORMLAB_THREADS: {e}")))
}

fn run(cli: &Cli) -> Outcome {
    configure_threads()?;
    match &cli.command {
        Command::Check(arg) => run_check(cli, arg),
        Command::Solve {
            params,
            regime,
            effort,
        } => run_solve(cli, params, *regime, *effort),
        Command::Verify {
            params,
            regime,
            grid,
        } => run_verify(cli, params, *regime, *grid),
        Command::Welfare(arg) => run_welfare(cli, arg),
        Command::Sweep { sweep } => run_sweep_cmd(cli, sweep),
        Command::Simulate {
            params,
            regime,
            seed,
            n,
        } => run_simulate(cli, params, *regime, *seed, *n),
    }
}

fn emit(text: &str, out: Option<&Path>) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((text, ok)) => {
            if let Err(e) = emit(&text, cli.out.as_deref()) {
                eprintln!("error: --out: {e}");
                return ExitCode::from(2);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Precondition(msg)) => {
            eprintln!("precondition failed: {msg}");
            ExitCode::from(1)
        }
    }
}
