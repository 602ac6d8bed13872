use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irs_chanest::cli::{self, CliError, Overrides, EXIT_FAILED, EXIT_OK};

#[derive(Debug, Parser)]
#[command(
    name = "irs-chanest",
    about = "IRS-assisted mmWave cascaded channel estimation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one trial per scheme at the configured SNR
    Trial(Flags),
    /// Run a Monte-Carlo sweep and write a CSV table
    Sweep(Flags),
    /// Run the exact-recovery and oracle-equivalence checks
    Selftest,
}

#[derive(Debug, Args)]
struct Flags {
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sweep axis: snr, g_tilde or zeta
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated sweep values
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    /// Trials per value and scheme
    #[arg(long)]
    trials: Option<String>,
    /// Comma-separated schemes
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// CSV output path
    #[arg(long)]
    out: Option<String>,
    /// paper (2π/R) or cosine (2/R)
    #[arg(long)]
    adi_error_model: Option<String>,
    /// on or off
    #[arg(long)]
    normalize_selection: Option<String>,
    /// Any config key, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE", allow_hyphen_values = true)]
    set: Vec<String>,
}

impl Flags {
    fn overrides(self) -> Result<Overrides, CliError> {
        let mut o = Overrides {
            config: self.config,
            ..Default::default()
        };
        for item in &self.set {
            let (k, v) = item.split_once('=').ok_or_else(|| CliError::InvalidValue {
                key: item.clone(),
                message: "expected KEY=VALUE".into(),
            })?;
            o.set(k.trim(), v.trim());
        }
        let pairs = [
            ("sweep", self.sweep),
            ("values", self.values),
            ("trials", self.trials),
            ("schemes", self.schemes),
            ("seed", self.seed),
            ("out", self.out),
            ("adi_error_model", self.adi_error_model),
            ("normalize_selection", self.normalize_selection),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                o.set(k, v);
            }
        }
        Ok(o)
    }
}

fn execute(flags: Flags, single: bool) -> i32 {
    let (mut spec, warnings) = match flags.overrides().and_then(|o| cli::parse_config(&o)) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    for w in warnings {
        eprintln!("warning: {w}");
    }
    if single {
        spec.sweep_axis = irs_chanest::evaluation::SweepAxis::Snr;
        spec.sweep_values = vec![spec.base.snr_db];
        spec.n_trials = 1;
    }
    match cli::run(&spec) {
        Ok(table) => {
            print!("{}", table.summary());
            println!("wrote {}", spec.output_path.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    if let Some(n) = cli::threads_from_env() {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global thread pool is configured once");
    }
    let code = match Cli::parse().command {
        Command::Trial(f) => execute(f, true),
        Command::Sweep(f) => execute(f, false),
        Command::Selftest => {
            let results = cli::selftest();
            for r in &results {
                println!(
                    "{:<20} {}  {}",
                    r.name,
                    if r.passed { "PASS" } else { "FAIL" },
                    r.detail
                );
            }
            if results.iter().all(|r| r.passed) {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
    };
    ExitCode::from(code as u8)
}
