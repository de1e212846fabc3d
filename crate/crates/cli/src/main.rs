//! `nls`: command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 run failure,
//! 3 acceptance or verdict failure.

use clap::{Parser, Subcommand, ValueEnum};
use nls_core::exponents::{critical_exponents, smallest_valid_a, strichartz_indices, ExponentReport, ModelParams};
use nls_core::harness::acceptance::run_all;
use nls_core::harness::{run_experiment, ConfigError, ExperimentConfig, ExperimentKind, HarnessError};
use nls_core::oracle::{classify, SelfSimilarParams};
use num_complex::Complex64;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nls", version, about = "Split-step simulation and verification for complex-coefficient NLS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a `kind = "single"` config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Also write a gnuplot script next to each trace.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Run a `kind = "sweep"` config and print the dichotomy table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        gnuplot: bool,
    },
    /// Run a config of any kind.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Critical exponents and Strichartz indices.
    Exponents {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        alpha: Option<f64>,
        /// Time exponent; defaults to the smallest valid one.
        #[arg(long)]
        a: Option<f64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Closed-form verdict for the self-similar reduced problem.
    Oracle {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        kappa_re: f64,
        #[arg(long, allow_hyphen_values = true)]
        kappa_im: f64,
        #[arg(long, default_value_t = 1.0)]
        t0: f64,
        /// `|z₀|`; the phase is set by `--z0-arg`.
        #[arg(long)]
        z0: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        z0_arg: f64,
        /// Write `t,abs_z,arg_z` samples to this CSV file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Trace horizon for global solutions.
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
    },
    /// Run a `kind = "pct_check"` config.
    PctCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the acceptance suite.
    Accept {
        /// Criterion number or name fragment.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write `acceptance.csv` into this directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Run(String),
    Verdict(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Run(_) => 2,
            Failure::Verdict(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Run(m) | Failure::Verdict(m) => m,
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e.exit_code() {
            1 => Failure::Config(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load(path: &Path, expected: Option<ExperimentKind>, gnuplot: bool) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(kind) = expected {
        if cfg.kind != kind {
            return Err(Failure::Config(format!("expected kind {kind:?}, config has {:?}", cfg.kind)));
        }
    }
    cfg.probes.gnuplot |= gnuplot;
    Ok(cfg)
}

fn execute(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let report = run_experiment(cfg)?;
    if let Some(table) = &report.table {
        print!("{}", table.to_csv());
    } else if let Some(acc) = &report.acceptance {
        for r in &acc.results {
            println!("{}", r.line());
        }
    } else {
        println!("{}", serde_json::to_string_pretty(&report.summary.outcome).unwrap_or_default());
        for (k, v) in &report.summary.scalars {
            println!("{k} = {v}");
        }
    }
    eprintln!("artifacts in {}", report.output_dir.display());
    if report.summary.passed {
        Ok(())
    } else {
        Err(Failure::Verdict("experiment verdict failed".into()))
    }
}

fn print_report(r: &ExponentReport, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(r).unwrap_or_default()),
        Format::Text => {
            println!("fujita          {}", r.fujita);
            println!("mass_critical   {}", r.mass_critical);
            println!("energy_critical {}", r.energy_critical);
            println!("alpha1          {}", r.alpha1);
            println!("alpha2          {}", r.alpha2);
            let opt = |name: &str, v: Option<f64>| {
                if let Some(v) = v {
                    println!("{name:<15} {v}");
                }
            };
            opt("rho", r.rho);
            opt("gamma", r.gamma);
            opt("a", r.a);
            opt("a_tilde", r.a_tilde);
            opt("mu", r.mu);
            opt("s", r.s);
            println!("alpha_in_scattering_window  {}", r.flags.alpha_in_scattering_window);
            println!("a_condition_holds           {}", r.flags.a_condition_holds);
            println!("h_in_Lmu                    {}", r.flags.h_in_lmu);
            println!("gradient_monotone_condition {}", r.flags.gradient_monotone_condition);
        }
    }
}

fn exponents(dim: usize, alpha: Option<f64>, a: Option<f64>, format: Format) -> Result<(), Failure> {
    // thresholds depend only on N; any admissible α gives the same values
    let alpha_or = alpha.unwrap_or(1.0);
    let params = ModelParams::new(dim, alpha_or, Complex64::new(0.0, -1.0)).map_err(|e| Failure::Config(e.to_string()))?;
    let report = match (alpha, a) {
        (None, Some(_)) => return Err(Failure::Config("--a needs --alpha".into())),
        (None, None) => critical_exponents(&params),
        (Some(_), Some(a)) => strichartz_indices(&params, a).map_err(|e| Failure::Config(e.to_string()))?,
        (Some(_), None) => match smallest_valid_a(&params) {
            Ok(a) => strichartz_indices(&params, a).map_err(|e| Failure::Config(e.to_string()))?,
            Err(_) => critical_exponents(&params),
        },
    };
    print_report(&report, format);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn oracle(
    dim: usize,
    alpha: f64,
    kappa: Complex64,
    t0: f64,
    z0: Complex64,
    trace: Option<PathBuf>,
    samples: usize,
    t_max: f64,
) -> Result<(), Failure> {
    let model = ModelParams::new(dim, alpha, kappa).map_err(|e| Failure::Config(e.to_string()))?;
    let params = SelfSimilarParams::new(model, t0, z0).map_err(|e| Failure::Config(e.to_string()))?;
    let verdict = classify(&params).map_err(|e| Failure::Config(e.to_string()))?;
    println!(
        "{}",
        serde_json::json!({ "classification": format!("{:?}", verdict.classification), "blowup_time": verdict.blowup_time })
    );
    if let Some(path) = trace {
        let horizon = verdict.blowup_time.map_or(t_max, |t| t.min(t_max));
        let n = samples.max(2);
        let mut csv = String::from("t,abs_z,arg_z\n");
        for i in 0..n {
            // stop just short of a blowup time
            let t = horizon * i as f64 / (n - 1) as f64 * if verdict.blowup_time.is_some() { 0.999 } else { 1.0 };
            let z = verdict.trajectory_at(t).map_err(|e| Failure::Run(e.to_string()))?;
            csv.push_str(&format!("{t},{},{}\n", z.norm(), z.arg()));
        }
        std::fs::write(&path, csv).map_err(|e| Failure::Run(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn accept(filter: Option<String>, seed: u64, output: Option<PathBuf>) -> Result<(), Failure> {
    let report = run_all(filter.as_deref(), seed);
    if report.results.is_empty() {
        return Err(Failure::Config(format!("filter {filter:?} selects no criterion")));
    }
    for r in &report.results {
        println!("{}", r.line());
    }
    println!("note: {}", report.substitution_note);
    if let Some(dir) = output {
        std::fs::create_dir_all(&dir)
            .and_then(|_| std::fs::write(dir.join("acceptance.csv"), report.to_csv()))
            .map_err(|e| Failure::Run(e.to_string()))?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Verdict("acceptance failures".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, gnuplot } => {
            load(&config, Some(ExperimentKind::Single), gnuplot).and_then(|c| execute(&c))
        }
        Command::Sweep { config, gnuplot } => load(&config, Some(ExperimentKind::Sweep), gnuplot).and_then(|c| execute(&c)),
        Command::Run { config } => load(&config, None, false).and_then(|c| execute(&c)),
        Command::PctCheck { config } => load(&config, Some(ExperimentKind::PctCheck), false).and_then(|c| execute(&c)),
        Command::Exponents { dim, alpha, a, format } => exponents(dim, alpha, a, format),
        Command::Oracle { dim, alpha, kappa_re, kappa_im, t0, z0, z0_arg, trace, samples, t_max } => oracle(
            dim,
            alpha,
            Complex64::new(kappa_re, kappa_im),
            t0,
            Complex64::from_polar(z0, z0_arg),
            trace,
            samples,
            t_max,
        ),
        Command::Accept { filter, seed, output } => accept(filter, seed, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("nls: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
