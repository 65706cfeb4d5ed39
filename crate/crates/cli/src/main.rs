use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mixdyn_cli::app::{execute, exit};
use mixdyn_cli::{parse_config, Entry, Scenario, ScenarioName};

/// Two laser-driven, cross-coupled atomic ensembles in the bosonized picture.
///
/// Rates and frequencies are in units of gamma1, times in 1/gamma1.
#[derive(Parser, Debug)]
#[command(name = "mixdyn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write its CSV files.
    ///
    /// Exit codes: 0 success, 1 I/O failure, 2 bad usage or configuration,
    /// 3 Fock cutoff exceeded, 4 low-excitation condition violated,
    /// 5 numerical failure.
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Preset: fig2, fig3, fig4, fig5 or custom.
    #[arg(value_name = "SCENARIO")]
    preset: Option<ScenarioName>,
    /// Same as the positional preset.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<ScenarioName>,
    /// Flat `key = value` file; command-line flags win over it.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Cross-coupling strength in [0, 1].
    #[arg(long, value_name = "X")]
    eta: Option<String>,
    /// Comma-separated cross-coupling values; switches to sweep output.
    #[arg(long, value_name = "LIST")]
    eta_grid: Option<String>,
    /// Holstein-Primakoff expansion order, 0 or 1.
    #[arg(long, value_name = "0|1")]
    order: Option<String>,
    /// Fock cutoff of both ensembles, or `auto`.
    #[arg(long, value_name = "M")]
    cutoff: Option<String>,
    /// Atoms in each ensemble.
    #[arg(long, value_name = "N")]
    atoms: Option<String>,
    /// Single-atom Rabi frequency of both lasers.
    #[arg(long, value_name = "X")]
    omega: Option<String>,
    /// Rabi frequency of laser 1.
    #[arg(long, value_name = "X")]
    omega1: Option<String>,
    /// Rabi frequency of laser 2.
    #[arg(long, value_name = "X")]
    omega2: Option<String>,
    /// Detuning of ensemble 1.
    #[arg(long, value_name = "X")]
    delta1: Option<String>,
    /// Detuning of ensemble 2.
    #[arg(long, value_name = "X")]
    delta2: Option<String>,
    /// Dipole-dipole coupling within ensemble 1.
    #[arg(long, value_name = "X")]
    beta1: Option<String>,
    /// Dipole-dipole coupling within ensemble 2.
    #[arg(long, value_name = "X")]
    beta2: Option<String>,
    /// Decay rate of ensemble 2.
    #[arg(long, value_name = "X")]
    gamma2: Option<String>,
    /// Laser frequency difference.
    #[arg(long, value_name = "X")]
    delta_omega: Option<String>,
    /// Initial laser phase difference, in rad.
    #[arg(long, value_name = "X")]
    phi0: Option<String>,
    /// Final time.
    #[arg(long, value_name = "T")]
    t_end: Option<String>,
    /// Integration step, or `auto`.
    #[arg(long, value_name = "X")]
    dt: Option<String>,
    /// Spacing of the output samples.
    #[arg(long, value_name = "X")]
    sample_interval: Option<String>,
    /// Comma-separated probe times for distributions and sweeps.
    #[arg(long, value_name = "a,b,c")]
    probe_times: Option<String>,
    /// Output path; further files derive their names from it.
    #[arg(long, value_name = "PATH")]
    output: Option<String>,
    /// Also write the excitation distribution of ensemble 1 at the probe times.
    #[arg(long)]
    distribution: bool,
    /// Track the smallest density-matrix eigenvalue (slow).
    #[arg(long)]
    min_eigenvalue: bool,
    /// Compare against an independent solver and write a difference report.
    #[arg(long, value_name = "moments|dicke")]
    oracle: Option<String>,
    /// Any configuration key, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// No progress messages.
    #[arg(long, short)]
    quiet: bool,
}

impl RunArgs {
    fn entries(&self) -> Result<Vec<Entry>, String> {
        let mut e: Vec<Entry> = Vec::new();
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
            e.push(Entry::new(k.trim(), v.trim()));
        }
        let named = [
            ("eta", &self.eta),
            ("eta_grid", &self.eta_grid),
            ("order", &self.order),
            ("cutoff", &self.cutoff),
            ("atoms", &self.atoms),
            ("omega", &self.omega),
            ("omega1", &self.omega1),
            ("omega2", &self.omega2),
            ("delta1", &self.delta1),
            ("delta2", &self.delta2),
            ("beta1", &self.beta1),
            ("beta2", &self.beta2),
            ("gamma2", &self.gamma2),
            ("delta_omega", &self.delta_omega),
            ("phi0", &self.phi0),
            ("t_end", &self.t_end),
            ("dt", &self.dt),
            ("sample_interval", &self.sample_interval),
            ("probe_times", &self.probe_times),
            ("output", &self.output),
            ("oracle", &self.oracle),
        ];
        e.extend(
            named
                .into_iter()
                .filter_map(|(k, v)| v.as_ref().map(|v| Entry::new(k, v.clone()))),
        );
        if self.distribution {
            e.push(Entry::new("distribution", "true"));
        }
        if self.min_eigenvalue {
            e.push(Entry::new("min_eigenvalue", "true"));
        }
        Ok(e)
    }
}

fn run(args: RunArgs) -> i32 {
    let fail = |code: i32, msg: String| {
        eprintln!("error: {msg}");
        code
    };
    let file = match &args.config {
        None => Vec::new(),
        Some(path) => match std::fs::read_to_string(path) {
            Err(e) => return fail(exit::FAILURE, format!("{}: {e}", path.display())),
            Ok(text) => match parse_config(&text) {
                Ok(entries) => entries,
                Err(e) => return fail(exit::USAGE, format!("{}: {e}", path.display())),
            },
        },
    };
    let flags = match args.entries() {
        Ok(f) => f,
        Err(msg) => return fail(exit::USAGE, msg),
    };
    let scenario = match Scenario::build(args.preset.or(args.scenario), &file, &flags) {
        Ok(s) => s,
        Err(e) => return fail(exit::USAGE, e.to_string()),
    };
    let mut stderr = std::io::stderr();
    let mut sink = std::io::sink();
    let log: &mut dyn Write = if args.quiet { &mut sink } else { &mut stderr };
    match execute(&scenario, log) {
        Ok(outcome) => {
            for (name, e) in &outcome.stops {
                eprintln!("stopped: {name}: {e}");
            }
            outcome.exit_code()
        }
        Err(e) => fail(e.exit_code(), e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => run(args),
    };
    ExitCode::from(code as u8)
}
