use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use subdiff::config::{load_json, SolveConfig, StudyConfig};
use subdiff::fracweights::{cq_weights, inverse_weights, partial_sums, CoefficientTable};
use subdiff::harness::{emit_report, report_csv, run_study, ReportFormat};
use subdiff::inequality_lab::{
    gronwall_suite, identity_suite, lemma_suite, CheckRecord, CSV_HEADER,
};
use subdiff::stepper::run;
use subdiff::{mlf::mlf_eval, Error, MittagLefflerParams, SpectralSpace};

#[derive(Parser)]
#[command(
    name = "subdiff",
    version,
    about = "Time-fractional subdiffusion solver and Grönwall test bench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum WeightKind {
    /// Coefficients of (1 - z)^β
    Cq,
    /// Coefficients of (1 - z)^-β
    Inverse,
    /// Running sums of the cq coefficients
    B,
    /// τ^β times the inverse coefficients
    Kernel,
}

#[derive(Copy, Clone, ValueEnum)]
enum Suite {
    Lemmas,
    Gronwall,
    Identity,
}

#[derive(Subcommand)]
enum Command {
    /// Print convolution weights, one per line
    Weights {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        count: usize,
        #[arg(long, value_enum, default_value = "cq")]
        kind: WeightKind,
        /// Step size, used by `--kind kernel`
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
    },
    /// Evaluate the Mittag-Leffler function E_β(z) for z >= 0
    Mlf {
        #[arg(long)]
        beta: f64,
        #[arg(long, allow_negative_numbers = true)]
        z: f64,
    },
    /// Run one solve described by a JSON config
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Write `x,u` at the LGL nodes at the final time
        #[arg(long)]
        dump_solution: Option<PathBuf>,
    },
    /// Run a numerical check suite and print a CSV report
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Run a temporal convergence study
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

/// Write to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

/// `%.{digits}g`-style formatting.
fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let sci = format!("{:.*e}", digits - 1, x);
    // rounding can bump the exponent, so read it back
    let exp = sci
        .split('e')
        .nth(1)
        .and_then(|e| e.parse().ok())
        .unwrap_or(exp);
    if exp < -5 || exp >= digits as i32 {
        let (mantissa, e) = sci.split_once('e').expect("scientific format");
        let e: i32 = e.parse().expect("exponent");
        format!("{mantissa}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
    } else {
        format!("{:.*}", (digits as i32 - 1 - exp).max(0) as usize, x)
    }
}

fn weights(beta: f64, count: usize, kind: WeightKind, tau: f64) -> subdiff::Result<Vec<f64>> {
    Ok(match kind {
        WeightKind::Cq => cq_weights(beta, count)?,
        WeightKind::Inverse => inverse_weights(beta, count)?,
        WeightKind::B => partial_sums(&cq_weights(beta, count)?),
        WeightKind::Kernel => {
            let t = CoefficientTable::new(beta, tau, count)?;
            (0..=count)
                .map(|m| t.gronwall_kernel(m))
                .collect::<subdiff::Result<_>>()?
        }
    })
}

fn solve(config: &Path, dump: Option<&Path>) -> subdiff::Result<()> {
    let cfg: SolveConfig = load_json(config)?;
    let (problem, scheme) = cfg.build()?;
    let space = SpectralSpace::new(cfg.degree).map_err(|e| Error::Config(e.to_string()))?;
    let history = run(&problem, scheme, &space)?;
    let last = history.last();
    let mut summary = format!(
        "scheme,{:?}\nsteps,{}\nfinal_time,{}\nl2_norm,{}\n",
        scheme.kind,
        scheme.n_steps,
        problem.final_time(),
        sig(space.modal_l2_norm(last), 15)
    );
    if let (_, Some(exact)) = cfg.problem.build()? {
        let t = problem.final_time();
        summary.push_str(&format!(
            "l2_error,{}\n",
            sig(space.modal_l2_error(last, |x| exact(x, t)), 15)
        ));
    }
    emit(&summary);
    if let Some(path) = dump {
        let mut out = String::from("x,u\n");
        for (x, u) in space.nodes().iter().zip(space.modal_to_nodal(last)) {
            out.push_str(&format!("{},{}\n", sig(*x, 17), sig(u, 17)));
        }
        std::fs::write(path, out).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

fn verify(suite: Suite, seed: u64) -> subdiff::Result<bool> {
    let records: Vec<CheckRecord> = match suite {
        Suite::Lemmas => lemma_suite(500)?,
        Suite::Gronwall => gronwall_suite(seed, 500)?,
        Suite::Identity => identity_suite(seed, 1000, 128)?,
    };
    let mut out = format!("{CSV_HEADER}\n");
    for r in &records {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    emit(&out);
    Ok(records.iter().all(|r| r.pass))
}

fn converge(config: &Path, out: &Path, json: Option<&Path>) -> subdiff::Result<()> {
    let cfg: StudyConfig = load_json(config)?;
    let spec = cfg.build()?;
    let report = run_study(&spec)?;
    emit_report(&report, ReportFormat::Csv, out)?;
    if let Some(path) = json {
        emit_report(&report, ReportFormat::Json, path)?;
    }
    emit(&report_csv(&report));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Weights {
            beta,
            count,
            kind,
            tau,
        } => weights(beta, count, kind, tau).map(|w| {
            emit(&w.iter().map(|&x| sig(x, 17) + "\n").collect::<String>());
            true
        }),
        Command::Mlf { beta, z } => mlf_eval(&MittagLefflerParams::new(beta), z).map(|v| {
            emit(&(sig(v, 15) + "\n"));
            true
        }),
        Command::Solve {
            config,
            dump_solution,
        } => solve(&config, dump_solution.as_deref()).map(|_| true),
        Command::Verify { suite, seed } => verify(suite, seed),
        Command::Converge { config, out, json } => {
            converge(&config, &out, json.as_deref()).map(|_| true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some checks failed");
            ExitCode::from(1)
        }
        Err(e) if e.is_divergence() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(0.5, 17), "0.50000000000000000");
        assert_eq!(sig(-0.125, 3), "-0.125");
        assert_eq!(sig(std::f64::consts::E, 15), "2.71828182845905");
        assert_eq!(sig(1.5e-7, 3), "1.50e-07");
        assert_eq!(sig(9.9999, 3), "10.0");
        assert_eq!(sig(1.0, 15), "1.00000000000000");
    }
}
