//! Argument parsing and routing for the `coord` binary.
//!
//! [`dispatch`] does all the work and returns what would be printed, so the
//! binary is a thin wrapper and tests can drive the full surface in-process.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use coord_core::dsbs::{emit_curve, t_star, write_curve_csv};
use coord_core::fmt::format_sig;
use coord_core::info::{entropy, mutual_information};
use coord_core::pmf::load_aux_channel;
use coord_core::region::{achievable_bounds, xy_equal_region, RateTriple};
use coord_core::simulator::{run_trials, SimConfig, SimRates};
use coord_core::ulsr::{ulsr_rate, UlsrForm};
use coord_core::wyner::wyner_ci;
use coord_core::{compose, load_joint_pmf, tv_distance, AuxChannel, Axis, Error, JointPmf, SolverOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

const DIGITS: usize = 15;

#[derive(Debug, Parser)]
#[command(
    name = "coord",
    version,
    about = "Rate trade-offs for coordinating two processors through a broadcast"
)]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Information measures of a joint distribution.
    Info {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, value_enum)]
        measure: Measure,
    },
    /// Wyner's common information (rate with no shared randomness).
    Wyner {
        #[arg(long)]
        dist: PathBuf,
        /// Auxiliary alphabet size; defaults to |X||Y|.
        #[arg(long)]
        card: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Optimal broadcast rate with unlimited shared randomness.
    Ulsr {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, value_enum, default_value_t = FormArg::Maxavg)]
        form: FormArg,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Closed-form curve for the doubly symmetric binary source.
    Dsbs {
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Write the curve as CSV instead of printing it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print only the kink location t*.
        #[arg(long)]
        tstar: bool,
    },
    /// Rate-region membership.
    Region {
        #[command(subcommand)]
        check: RegionCommand,
    },
    /// Monte Carlo run of the binned coding scheme.
    Simulate {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        aux: PathBuf,
        #[arg(long)]
        n: usize,
        /// R0,RSTAR,RT1,RT2 in bits/symbol.
        #[arg(long)]
        rates: String,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum RegionCommand {
    /// Membership in the achievable region of an auxiliary (U, U1, U2).
    Check {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        aux: PathBuf,
        /// R,R1,R2 in bits/symbol.
        #[arg(long)]
        rates: String,
    },
    /// Membership in the exact region for X = Y.
    XyEqual {
        #[arg(long)]
        hx: f64,
        #[arg(long)]
        rates: String,
    },
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long)]
    restarts: Option<usize>,
    /// Objective-change tolerance for the inner solver.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SolverArgs {
    fn options(&self) -> coord_core::Result<SolverOptions> {
        let mut opts = SolverOptions::default();
        if let Some(r) = self.restarts {
            opts.restarts = r;
        }
        if let Some(t) = self.tol {
            opts.tol_objective = t;
        }
        if let Some(s) = self.seed {
            opts.seed = s;
        }
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Measure {
    /// H(X,Y)
    Entropy,
    /// I(X;Y)
    Mi,
    /// Total variation from the product of the marginals.
    Tv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormArg {
    Maxpair,
    Maxavg,
}

impl From<FormArg> for UlsrForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Maxpair => UlsrForm::MaxPair,
            FormArg::Maxavg => UlsrForm::MaxAvg,
        }
    }
}

/// Exit code and captured output of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutput {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn num(x: f64) -> String {
    format_sig(x, DIGITS)
}

fn parse_rates<const N: usize>(text: &str) -> coord_core::Result<[f64; N]> {
    let values: Vec<f64> = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("rate \"{v}\" is not a number")))
        })
        .collect::<coord_core::Result<_>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| Error::Parse(format!("expected {N} comma-separated rates, got {}", v.len())))
}

fn load_pair(dist: &Path, aux: &Path) -> coord_core::Result<(JointPmf, AuxChannel)> {
    let q = load_joint_pmf(dist)?;
    let ch = load_aux_channel(aux, q.nx(), q.ny())?;
    Ok((q, ch))
}

fn run(command: Command) -> coord_core::Result<String> {
    Ok(match command {
        Command::Info { dist, measure } => {
            let q = load_joint_pmf(dist)?;
            let full = compose(&q, &AuxChannel::degenerate(q.nx(), q.ny()))?;
            let v = match measure {
                Measure::Entropy => entropy(&full.marginal(&[Axis::X, Axis::Y])?),
                Measure::Mi => mutual_information(&full, &[Axis::X], &[Axis::Y])?,
                Measure::Tv => tv_distance(&q, &JointPmf::product(&q.marginal_x(), &q.marginal_y())?)?,
            };
            format!("{}\n", num(v))
        }
        Command::Wyner { dist, card, solver } => {
            let q = load_joint_pmf(dist)?;
            let k = card.unwrap_or(q.nx() * q.ny());
            let r = wyner_ci(&q, k, &solver.options()?)?;
            format!(
                "value {}\nmarkov_defect {}\nlower_bound {}\nupper_bound {}\ncard_u {k}\nfeasible_restarts {}\n",
                num(r.value),
                num(r.markov_defect),
                num(r.lower_bound),
                num(r.upper_bound),
                r.feasible_restarts
            )
        }
        Command::Ulsr { dist, form, solver } => {
            let q = load_joint_pmf(dist)?;
            let r = ulsr_rate(&q, form.into(), &solver.options()?)?;
            format!(
                "value {}\nform {}\nterm_cond {}\nterm_joint {}\ncard_u {}\n",
                num(r.value),
                r.form,
                num(r.term_cond),
                num(r.term_joint),
                r.channel.card_u()
            )
        }
        Command::Dsbs { a, points, out, tstar } => {
            if tstar {
                return Ok(format!("{}\n", num(t_star(a)?)));
            }
            let curve = emit_curve(a, points)?;
            match out {
                Some(path) => {
                    write_curve_csv(&curve, fs::File::create(&path)?)?;
                    let best = curve
                        .iter()
                        .min_by(|x, y| x.f.total_cmp(&y.f))
                        .expect("at least two points");
                    format!(
                        "wrote {} points to {}; grid minimum f = {} at t = {}\n",
                        curve.len(),
                        path.display(),
                        num(best.f),
                        num(best.t)
                    )
                }
                None => {
                    let mut buf = Vec::new();
                    write_curve_csv(&curve, &mut buf)?;
                    String::from_utf8(buf).expect("CSV is ASCII")
                }
            }
        }
        Command::Region { check } => {
            let member = match check {
                RegionCommand::Check { dist, aux, rates } => {
                    let [r, r1, r2] = parse_rates::<3>(&rates)?;
                    let (q, ch) = load_pair(&dist, &aux)?;
                    achievable_bounds(&q, &ch)?.contains(&RateTriple::new(r, r1, r2)?)
                }
                RegionCommand::XyEqual { hx, rates } => {
                    let [r, r1, r2] = parse_rates::<3>(&rates)?;
                    xy_equal_region(hx, &RateTriple::new(r, r1, r2)?)?
                }
            };
            format!("{}\n", if member { "member" } else { "not member" })
        }
        Command::Simulate {
            dist,
            aux,
            n,
            rates,
            trials,
            seed,
            eps,
            out,
        } => {
            let [r0, r_star, rt1, rt2] = parse_rates::<4>(&rates)?;
            let (q, channel) = load_pair(&dist, &aux)?;
            let cfg = SimConfig {
                q,
                channel,
                n,
                rates: SimRates::new(r0, r_star, rt1, rt2)?,
                eps_typ: eps,
                trials,
                seed,
            };
            let report = run_trials(&cfg)?;
            let json = report.to_json_string();
            match out {
                Some(path) => {
                    fs::write(&path, format!("{json}\n"))?;
                    format!(
                        "tv_per_letter {} mstar_failure_rate {} trials_run {} -> {}\n",
                        num(report.tv_per_letter),
                        num(report.mstar_failure_rate),
                        report.trials_run,
                        path.display()
                    )
                }
                None => format!("{json}\n"),
            }
        }
    })
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::SolverInfeasible { .. } => EXIT_INFEASIBLE,
        _ => EXIT_INVALID,
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn dispatch<I, T>(argv: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            // --help and --version are requests, not mistakes
            return if e.use_stderr() {
                CliOutput {
                    exit_code: EXIT_INVALID,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                CliOutput {
                    exit_code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::OutOfRange("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::OutOfRange(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| run(cli.command))),
        None => run(cli.command),
    };
    match result {
        Ok(stdout) => CliOutput {
            exit_code: EXIT_OK,
            stdout,
            stderr: String::new(),
        },
        Err(e) => CliOutput {
            exit_code: exit_code_for(&e),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_lists() {
        assert_eq!(parse_rates::<3>("0.5, 0.25,1").unwrap(), [0.5, 0.25, 1.0]);
        assert!(parse_rates::<3>("0.5,0.25").is_err());
        assert!(parse_rates::<4>("0.5,x,1,2").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code_for(&Error::SolverInfeasible { defect: 0.1, tol: 1e-6 }),
            EXIT_INFEASIBLE
        );
        assert_eq!(exit_code_for(&Error::OutOfRange("x".into())), EXIT_INVALID);
        assert_eq!(
            exit_code_for(&Error::MarkovViolation { defect: 0.1, tol: 1e-6 }),
            EXIT_INVALID
        );
    }
}
