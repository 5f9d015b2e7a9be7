//! The `singular-mrl` command-line front end.
//!
//! Every subcommand writes to `--out` (standard output by default) in one of
//! three formats. Reals are printed with 17 significant digits so CSV and
//! text output re-parse to the exact library values. Errors map to distinct
//! exit codes, see [`exit_code`].

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::cloud::CloudStream;
use crate::distribution::{cdf_bounded, EvalConfig, PSingularParams};
use crate::error::{Error, Result};
use crate::fixedpoint::{augmented_grid, fixed_point_solve, FixedPointResult};
use crate::mrl::{gmrl, mrl, mrl_unchecked, MrlValue};
use crate::output::{format_real, write_csv_pairs, JsonPairWriter};
use crate::pricing::{comparative_statics, optimal_price, optimal_price_with_curve, PricingResult};
use crate::verification::{run_all, CriterionOutcome, VerifyOptions};

pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;
pub const EXIT_PARAMETER: u8 = 4;
pub const EXIT_RESOURCE: u8 = 5;
pub const EXIT_CONVERGENCE: u8 = 6;
pub const EXIT_IO: u8 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "singular-mrl",
    version,
    about = "Mean residual life and pricing for p-singular Cantor-type distributions"
)]
pub struct Cli {
    /// Family parameter p > 0 (p = 1 is the Cantor distribution).
    #[arg(long, global = true, default_value_t = 1.0, allow_hyphen_values = true)]
    pub p: f64,

    /// Absolute error bound for evaluations.
    #[arg(
        long,
        global = true,
        env = "SINGULAR_MRL_TOLERANCE",
        default_value_t = 1e-10,
        allow_hyphen_values = true
    )]
    pub tolerance: f64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Output file; standard output if omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// F_p(x) and its error bound.
    Cdf {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
    },
    /// Mean residual life m_p(x).
    Mrl {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
    },
    /// Generalized mean residual life m_p(x) / x.
    Gmrl {
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
    },
    /// Solve m_p(x) = x and scan [0, 1] for other crossings.
    Fixpoint,
    /// Optimal monopoly price and expected payoff.
    Price {
        /// Attach the payoff curve on this many evenly spaced prices.
        #[arg(long)]
        grid: Option<usize>,
        /// Write the payoff curve CSV here instead of after the summary.
        #[arg(long)]
        curve_out: Option<PathBuf>,
    },
    /// Optimal prices over a list of p values.
    Statics {
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        p_list: Vec<f64>,
    },
    /// Point cloud of F_p and the MRL curve over the augmented grid.
    PlotData {
        #[arg(long, default_value_t = 1000)]
        n_initial: usize,
        #[arg(long, default_value_t = 17)]
        iterations: u32,
        /// Uniform grid size for the MRL curve (gap endpoints are added).
        #[arg(long, default_value_t = 1000)]
        grid: usize,
        /// Write the MRL curve CSV here instead of after the cloud.
        #[arg(long)]
        mrl_out: Option<PathBuf>,
    },
    /// Run the acceptance suite and report pass/fail per criterion.
    Verify {
        #[arg(long)]
        seed: Option<u64>,
        /// Smaller samples and cloud; same thresholds.
        #[arg(long)]
        quick: bool,
    },
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Domain(_) => EXIT_DOMAIN,
        Error::Parameter(_) => EXIT_PARAMETER,
        Error::Resource(_) => EXIT_RESOURCE,
        Error::Convergence(_) => EXIT_CONVERGENCE,
        Error::Io(_) | Error::Json(_) => EXIT_IO,
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_value<W: Write + ?Sized>(out: &mut W, format: Format, v: &MrlValue, what: &str) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "p,x,{what},error_bound")?;
            writeln!(
                out,
                "{},{},{},{}",
                format_real(v.p),
                format_real(v.x),
                format_real(v.value),
                format_real(v.error_bound)
            )?;
        }
        Format::Json => {
            let obj = json!({ "p": v.p, "x": v.x, what: v.value, "error_bound": v.error_bound });
            writeln!(out, "{obj}")?;
        }
        Format::Text => {
            writeln!(out, "p           {}", format_real(v.p))?;
            writeln!(out, "x           {}", format_real(v.x))?;
            writeln!(out, "{what:<11} {}", format_real(v.value))?;
            writeln!(out, "error_bound {}", format_real(v.error_bound))?;
        }
    }
    Ok(())
}

fn write_fixpoint<W: Write + ?Sized>(out: &mut W, format: Format, r: &FixedPointResult) -> Result<()> {
    let rows: [(&str, String); 8] = [
        ("p", format_real(r.p)),
        ("x_star", format_real(r.x_star)),
        ("residual", format_real(r.residual)),
        ("bracket_lo", format_real(r.bracket.0)),
        ("bracket_hi", format_real(r.bracket.1)),
        ("closed_form", format_real(r.closed_form)),
        ("sign_changes", r.sign_changes.to_string()),
        ("bisections", r.bisections.to_string()),
    ];
    match format {
        Format::Csv => {
            let (keys, vals): (Vec<_>, Vec<_>) = rows.iter().map(|(k, v)| (*k, v.as_str())).unzip();
            writeln!(out, "{}", keys.join(","))?;
            writeln!(out, "{}", vals.join(","))?;
        }
        Format::Json => writeln!(out, "{}", serde_json::to_string(r)?)?,
        Format::Text => {
            for (k, v) in rows {
                writeln!(out, "{k:<12} {v}")?;
            }
        }
    }
    Ok(())
}

fn write_pricing_rows<W: Write + ?Sized>(out: &mut W, format: Format, rs: &[PricingResult]) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "p,optimal_price,expected_payoff")?;
            for r in rs {
                writeln!(
                    out,
                    "{},{},{}",
                    format_real(r.p),
                    format_real(r.optimal_price),
                    format_real(r.expected_payoff)
                )?;
            }
        }
        Format::Json => writeln!(out, "{}", serde_json::to_string(rs)?)?,
        Format::Text => {
            writeln!(out, "{:<24} {:<24} {:<24}", "p", "optimal_price", "expected_payoff")?;
            for r in rs {
                writeln!(
                    out,
                    "{:<24} {:<24} {:<24}",
                    format_real(r.p),
                    format_real(r.optimal_price),
                    format_real(r.expected_payoff)
                )?;
            }
        }
    }
    Ok(())
}

fn write_price<W: Write + ?Sized>(
    out: &mut W,
    format: Format,
    r: &PricingResult,
    curve_out: Option<&Path>,
) -> Result<()> {
    let summary = PricingResult {
        payoff_curve: None,
        ..r.clone()
    };
    match format {
        Format::Json if curve_out.is_none() => writeln!(out, "{}", serde_json::to_string(r)?)?,
        Format::Json => writeln!(out, "{}", serde_json::to_string(&summary)?)?,
        Format::Csv => write_pricing_rows(out, format, std::slice::from_ref(&summary))?,
        Format::Text => {
            writeln!(out, "p               {}", format_real(r.p))?;
            writeln!(out, "optimal_price   {}", format_real(r.optimal_price))?;
            writeln!(out, "expected_payoff {}", format_real(r.expected_payoff))?;
        }
    }
    let Some(curve) = &r.payoff_curve else {
        return Ok(());
    };
    match curve_out {
        Some(path) => {
            let mut side = open_out(Some(path))?;
            if format == Format::Json {
                write_curve(&mut *side, format, curve)?;
            } else {
                r.write_curve_csv(&mut side)?;
            }
            side.flush()?;
        }
        None if format != Format::Json => {
            writeln!(out)?;
            write_csv_pairs(out, ("price", "payoff"), curve.iter().copied())?;
        }
        None => {}
    }
    Ok(())
}

fn write_verify<W: Write + ?Sized>(out: &mut W, format: Format, outcomes: &[CriterionOutcome]) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "id,name,passed,elapsed_s,detail")?;
            for o in outcomes {
                let detail = o.detail.replace('"', "\"\"");
                writeln!(
                    out,
                    "{},{},{},{:.3},\"{detail}\"",
                    o.id,
                    o.name,
                    o.passed,
                    o.elapsed.as_secs_f64()
                )?;
            }
        }
        Format::Json => writeln!(out, "{}", serde_json::to_string(outcomes)?)?,
        Format::Text => {
            for o in outcomes {
                writeln!(out, "{o}")?;
            }
        }
    }
    Ok(())
}

/// Feeds every cloud point to `write`, stopping at the first I/O error.
fn stream_points(stream: &CloudStream, mut write: impl FnMut(f64, f64) -> io::Result<()>) -> io::Result<()> {
    let mut result = Ok(());
    let _ = stream.try_for_each(|x, f| match write(x, f) {
        Ok(()) => ControlFlow::Continue(()),
        Err(e) => {
            result = Err(e);
            ControlFlow::Break(())
        }
    });
    result
}

/// Streams the cloud as CSV or as a JSON array of pairs.
fn write_cloud<W: Write + ?Sized>(out: &mut W, format: Format, stream: &CloudStream) -> Result<()> {
    if format == Format::Json {
        let mut w = JsonPairWriter::new(&mut *out)?;
        stream_points(stream, |x, f| w.push(x, f))?;
        w.finish()?;
    } else {
        writeln!(out, "x,F")?;
        stream_points(stream, |x, f| writeln!(out, "{},{}", format_real(x), format_real(f)))?;
    }
    Ok(())
}

/// Outcome of a successful run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    VerificationFailed,
}

/// Executes a parsed command, writing its primary output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Status> {
    let params = PSingularParams::new(cli.p)?;
    let config = EvalConfig::with_tolerance(cli.tolerance)?;
    let format = cli.format;
    match &cli.command {
        Command::Cdf { x } => {
            let b = cdf_bounded(&params, *x, &config)?;
            let v = MrlValue {
                value: b.value,
                x: *x,
                p: params.p(),
                error_bound: b.error_bound,
            };
            write_value(out, format, &v, "cdf")?;
        }
        Command::Mrl { x } => write_value(out, format, &mrl(&params, *x, &config)?, "mrl")?,
        Command::Gmrl { x } => write_value(out, format, &gmrl(&params, *x, &config)?, "gmrl")?,
        Command::Fixpoint => write_fixpoint(out, format, &fixed_point_solve(&params, &config)?)?,
        Command::Price { grid, curve_out } => {
            let r = match (grid, curve_out) {
                (None, None) => optimal_price(&params, &config)?,
                _ => optimal_price_with_curve(&params, &config, grid.unwrap_or(200))?,
            };
            write_price(out, format, &r, curve_out.as_deref())?;
        }
        Command::Statics { p_list } => write_pricing_rows(out, format, &comparative_statics(p_list, &config)?)?,
        Command::PlotData {
            n_initial,
            iterations,
            grid,
            mrl_out,
        } => {
            if *grid < 2 {
                return Err(Error::Parameter(format!("grid must be at least 2, got {grid}")));
            }
            let stream = CloudStream::new(&params, *n_initial, *iterations)?;
            let curve: Vec<(f64, f64)> = augmented_grid(*grid)
                .into_iter()
                .map(|x| (x, mrl_unchecked(&params, x, &config).value))
                .collect();
            match (format, mrl_out) {
                (Format::Json, None) => {
                    write!(
                        out,
                        "{{\"p\":{},\"n_initial\":{n_initial},\"iterations\":{iterations},\"cloud\":",
                        params.p()
                    )?;
                    write_cloud(out, format, &stream)?;
                    write!(out, ",\"mrl\":")?;
                    let mut w = JsonPairWriter::new(&mut *out)?;
                    for &(x, m) in &curve {
                        w.push(x, m)?;
                    }
                    w.finish()?;
                    writeln!(out, "}}")?;
                }
                (_, Some(path)) => {
                    write_cloud(out, format, &stream)?;
                    let mut side = open_out(Some(path))?;
                    write_curve(&mut *side, format, &curve)?;
                    side.flush()?;
                }
                (_, None) => {
                    write_cloud(out, format, &stream)?;
                    writeln!(out)?;
                    write_csv_pairs(out, ("x", "m"), curve)?;
                }
            }
        }
        Command::Verify { seed, quick } => {
            let mut opts = if *quick {
                VerifyOptions::quick()
            } else {
                VerifyOptions::default()
            };
            opts.tolerance = cli.tolerance;
            if let Some(s) = seed {
                opts.seed = *s;
            }
            let outcomes = run_all(&opts);
            write_verify(out, format, &outcomes)?;
            if outcomes.iter().any(|o| !o.passed) {
                return Ok(Status::VerificationFailed);
            }
        }
    }
    Ok(Status::Ok)
}

fn write_curve<W: Write + ?Sized>(out: &mut W, format: Format, curve: &[(f64, f64)]) -> Result<()> {
    if format == Format::Json {
        let mut w = JsonPairWriter::new(&mut *out)?;
        for &(x, m) in curve {
            w.push(x, m)?;
        }
        w.finish()?;
    } else {
        write_csv_pairs(out, ("x", "m"), curve.iter().copied())?;
    }
    Ok(())
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
/// Diagnostics go to standard error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = open_out(cli.out.as_deref()).and_then(|mut out| {
        let status = run(&cli, &mut *out)?;
        out.flush()?;
        Ok(status)
    });
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::VerificationFailed) => ExitCode::from(EXIT_VERIFY_FAILED),
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("singular-mrl: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
