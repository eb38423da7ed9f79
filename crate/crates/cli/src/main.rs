use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use qkf::config::{parse_config, read_matrix_csv, Readout};
use qkf::qsvt::{
    be_invert_detailed, inverse_poly_capped, node_residual, solve_phase_factors, InvertOptions,
    DEFAULT_DEGREE_CAP,
};
use qkf::report::{emit_csv, run_report, CsvKind};
use qkf::{decode, encode_matrix, validate, ComplexMatrix, Error, Result};

/// Block-encoded Kalman filtering on a statevector simulator.
#[derive(Parser)]
#[command(name = "qkf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReadoutArg {
    Exact,
    Sampled,
}

#[derive(Subcommand)]
enum Command {
    /// Run the filter described by a JSON config and print the report.
    Run {
        config: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Write trajectory.csv, ledger.csv and (sampled runs) histogram.csv here.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
        #[arg(long, value_enum)]
        readout: Option<ReadoutArg>,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Block-encode a CSV matrix and print the encoding and decoded block.
    Encode {
        matrix: PathBuf,
        /// Columns are re,im pairs.
        #[arg(long)]
        complex: bool,
    },
    /// Invert a CSV matrix through its block encoding.
    Invert {
        matrix: PathBuf,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = DEFAULT_DEGREE_CAP)]
        degree_cap: usize,
        #[arg(long)]
        complex: bool,
    },
    /// Print the phase factors of the inverse polynomial, one per line.
    Angles {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = DEFAULT_DEGREE_CAP)]
        degree_cap: usize,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// Print to stdout, treating a closed pipe as success.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn real_rows(m: &ComplexMatrix) -> serde_json::Value {
    let rows: Vec<Vec<serde_json::Value>> = (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .map(|z| {
                    if z.im.abs() < 1e-14 {
                        json!(z.re)
                    } else {
                        json!([z.re, z.im])
                    }
                })
                .collect()
        })
        .collect();
    json!(rows)
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json serializes") + "\n"
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            config,
            output,
            csv_dir,
            readout,
            shots,
            iterations,
            seed,
        } => {
            let mut cfg = parse_config(&read(&config)?)?;
            if let Some(r) = readout {
                cfg.readout_mode = match r {
                    ReadoutArg::Exact => Readout::Exact,
                    ReadoutArg::Sampled => Readout::Sampled,
                };
            }
            cfg.shots = shots.unwrap_or(cfg.shots);
            cfg.iterations = iterations.unwrap_or(cfg.iterations);
            cfg.seed = seed.unwrap_or(cfg.seed);
            let report = run_report(&cfg)?;
            if let Some(dir) = csv_dir {
                std::fs::create_dir_all(&dir)?;
                write(
                    &dir.join("trajectory.csv"),
                    &emit_csv(&report, CsvKind::Trajectory)?,
                )?;
                write(
                    &dir.join("ledger.csv"),
                    &emit_csv(&report, CsvKind::Ledger)?,
                )?;
                if report.last_state_histogram().is_some() {
                    write(
                        &dir.join("histogram.csv"),
                        &emit_csv(&report, CsvKind::Histogram)?,
                    )?;
                }
            }
            let text = report.to_json();
            match output {
                Some(p) => write(&p, &text)?,
                None => emit(&(text + "\n"))?,
            }
            if let Some(k) = report.exhausted_at {
                eprintln!("shot budget exhausted at step {k}; report holds the partial run");
            }
        }
        Command::Encode { matrix, complex } => {
            let m = read_matrix_csv(&read(&matrix)?, complex)?;
            let be = encode_matrix(&m)?;
            let check = validate(&be, &m)?;
            let out = json!({
                "shape": be.shape(),
                "alpha": be.alpha(),
                "ancillas": be.ancillas(),
                "system_qubits": be.system_qubits(),
                "total_qubits": be.total_qubits(),
                "eps": be.eps(),
                "max_deviation": check.deviation,
                "unitarity_residual": check.unitarity_residual,
                "operations": be.op().stats(),
                "block": real_rows(&be.block()?),
                "decoded": real_rows(&decode(&be)?),
            });
            emit(&pretty(&out))?;
        }
        Command::Invert {
            matrix,
            kappa,
            eps,
            degree_cap,
            complex,
        } => {
            let m = read_matrix_csv(&read(&matrix)?, complex)?;
            if !m.is_square() {
                return Err(Error::Dimension(format!(
                    "can only invert square matrices, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            let be = encode_matrix(&m)?;
            let inv = be_invert_detailed(
                &be,
                &InvertOptions {
                    kappa,
                    eps_prime: eps,
                    degree_cap,
                },
            )?;
            let approx = decode(&inv.be)?;
            let exact = m.inverse()?;
            let out = json!({
                "alpha": inv.be.alpha(),
                "ancillas": inv.be.ancillas(),
                "eps": inv.be.eps(),
                "info": inv.info,
                "operations": inv.be.op().stats(),
                "inverse": real_rows(&approx),
                "classical_inverse": real_rows(&exact),
                "max_abs_error": (&approx - &exact).max_abs(),
            });
            emit(&pretty(&out))?;
        }
        Command::Angles {
            kappa,
            eps,
            degree_cap,
        } => {
            let poly = inverse_poly_capped(kappa, eps, degree_cap)?;
            let phases = solve_phase_factors(&poly)?;
            eprintln!(
                "degree {}, scale {:.8}, achieved eps' {:.3e}, node residual {:.3e}",
                poly.degree(),
                poly.scale,
                poly.eps_prime,
                node_residual(&phases, &poly)
            );
            emit(&phases.to_text())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
