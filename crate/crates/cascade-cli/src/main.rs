//! Command-line surface for the cascade analysis library.
//!
//! Every command reads a cascade from a JSON config (`--config` path or
//! inline document) and emits a single JSON object or a CSV stream. Exit
//! codes: 0 ok, 2 configuration error, 3 analytic-domain error, 4 numeric
//! run error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use cascade_core::{
    design, metrics,
    model::{Cascade, DesignMode, InputSignal, NormConvention, Trajectory},
    sim::{self, Channel},
    stability, xfer,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

const EXIT_CONFIG: u8 = 2;
const EXIT_ANALYTIC: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

/// Environment variable overriding the default simulation step.
const PRECISION_ENV: &str = "CASCADE_LAB_PRECISION";

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(msg: impl ToString) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: msg.to_string(),
        }
    }
    fn analytic(msg: impl ToString) -> Self {
        CliError {
            code: EXIT_ANALYTIC,
            message: msg.to_string(),
        }
    }
    fn numeric(msg: impl ToString) -> Self {
        CliError {
            code: EXIT_NUMERIC,
            message: msg.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "cascade",
    version,
    about = "Analyze weakly activated signaling cascades as linear input/output systems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArg {
    /// Cascade config: a path to, or an inline, JSON document
    /// {"n":4,"alpha":[...],"beta":[...],"leak":1.0,"feedback":0.0}
    #[arg(long)]
    config: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormFlag {
    /// Exact input 2-norms.
    Exact,
    /// The norm convention used by the reference figures.
    Paper,
}

impl From<NormFlag> for NormConvention {
    fn from(f: NormFlag) -> Self {
        match f {
            NormFlag::Exact => NormConvention::Exact,
            NormFlag::Paper => NormConvention::PaperFigure,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Internal gain (H-infinity norm) and amplification verdict.
    Gain {
        #[command(flatten)]
        config: ConfigArg,
        /// Also print a frequency sweep of this many points as CSV.
        #[arg(long)]
        sweep: Option<usize>,
        /// Upper frequency for the sweep (defaults to 100x the fastest rate).
        #[arg(long)]
        omega_max: Option<f64>,
    },
    /// Signaling time, duration, amplitude, and gain for a given input.
    Metrics {
        #[command(flatten)]
        config: ConfigArg,
        /// Input spec: path or inline JSON, e.g. {"kind":"peak","r0":5,"lambda":2}.
        #[arg(long)]
        input: String,
        #[arg(long, value_enum, default_value = "exact")]
        norm: NormFlag,
        /// Report the per-stage metrics at this 1-based stage instead.
        #[arg(long)]
        step: Option<usize>,
    },
    /// Optimal cascade length and off-rate at fixed gain.
    Design {
        /// Common on-rate (fixed-alpha mode).
        #[arg(long, conflicts_with = "alpha_product")]
        alpha: Option<f64>,
        /// Fixed product of on-rates (fixed-product mode).
        #[arg(long)]
        alpha_product: Option<f64>,
        /// Individual on-rates, required with --feedback.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        /// Positive feedback strength from the last kinase.
        #[arg(long)]
        feedback: Option<f64>,
        /// Target internal gain K.
        #[arg(long)]
        gain: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        leak: f64,
        /// Emit a CSV staircase table over "lo:hi" instead of one design.
        #[arg(long)]
        gain_range: Option<String>,
        /// Number of rows in the staircase table.
        #[arg(long, default_value_t = 50)]
        table_points: usize,
    },
    /// Integrate the cascade and stream the trajectory as CSV.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        input: String,
        #[arg(long)]
        t_end: f64,
        /// Integration step; defaults to the stability budget (or the
        /// CASCADE_LAB_PRECISION environment variable when set).
        #[arg(long)]
        dt: Option<f64>,
        /// Run the saturating model with these per-stage totals.
        #[arg(long, value_delimiter = ',', requires = "nonlinear")]
        xtot: Option<Vec<f64>>,
        #[arg(long, requires = "xtot")]
        nonlinear: bool,
        /// Per-equation transmission delays (n+1 values).
        #[arg(long, value_delimiter = ',')]
        delays: Option<Vec<f64>>,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Append a JSON footer comparing empirical moments and norm
        /// against the closed forms.
        #[arg(long)]
        check: bool,
    },
    /// Eigenvalues, stability verdict, and the feedback bound.
    Stability {
        #[command(flatten)]
        config: ConfigArg,
        /// JSON perturbation spec {"entries":[[row,col,value],...]}.
        #[arg(long)]
        perturbation: Option<String>,
    },
    /// Frequency response |G(j w)| as CSV.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        omega_max: Option<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Round to 9 significant digits for report emission.
fn sig9(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap()
}

fn num(x: f64) -> Value {
    json!(sig9(x))
}

/// Read a JSON document from a path, or parse it inline when the argument
/// itself looks like JSON.
fn load_json(arg: &str) -> Result<Value, CliError> {
    let text = if arg.trim_start().starts_with(['{', '[']) {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)
            .map_err(|e| CliError::config(format!("cannot read {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(CliError::config)
}

fn load_cascade(arg: &str) -> Result<Cascade, CliError> {
    serde_json::from_value(load_json(arg)?).map_err(CliError::config)
}

fn load_input(arg: &str) -> Result<InputSignal, CliError> {
    serde_json::from_value(load_json(arg)?).map_err(CliError::config)
}

fn default_dt(c: &Cascade) -> f64 {
    if let Ok(v) = std::env::var(PRECISION_ENV) {
        if let Ok(dt) = v.parse::<f64>() {
            if dt > 0.0 {
                return dt;
            }
        }
    }
    let fastest = c.beta().iter().copied().fold(c.leak().max(1.0), f64::max);
    0.05 / fastest
}

fn emit(text: String, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::numeric(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn trajectory_csv(traj: &Trajectory) -> String {
    let n_states = traj.n_states();
    let mut csv = String::from("t,R");
    for i in 1..=n_states {
        let _ = write!(csv, ",X{i}");
    }
    csv.push('\n');
    for (k, t) in traj.times.iter().enumerate() {
        let _ = write!(csv, "{:.8e},{:.8e}", t, traj.input[k]);
        for v in &traj.states[k] {
            let _ = write!(csv, ",{v:.8e}");
        }
        csv.push('\n');
    }
    csv
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Gain {
            config,
            sweep,
            omega_max,
        } => {
            let c = load_cascade(&config.config)?;
            let k = xfer::hinf_norm(&c).map_err(|e| match e {
                xfer::XferError::InfiniteGain => CliError::analytic(format!(
                    "{e}; for a pure integrator use the truncated gain over the kinase stages"
                )),
                _ => CliError::analytic(e),
            })?;
            let mut report = json!({
                "k": num(k),
                "amplifies": xfer::amplifies(&c),
            });
            if let Some(points) = sweep {
                let fastest = c.beta().iter().copied().fold(c.leak().max(1.0), f64::max);
                let table = xfer::frequency_sweep(
                    &c,
                    omega_max.unwrap_or(100.0 * fastest),
                    points,
                )
                .map_err(CliError::analytic)?;
                report["sweep"] = table
                    .into_iter()
                    .map(|(w, m)| json!([num(w), num(m)]))
                    .collect();
            }
            println!("{report}");
            Ok(())
        }
        Cmd::Metrics {
            config,
            input,
            norm,
            step,
        } => {
            let c = load_cascade(&config.config)?;
            let r = load_input(&input)?;
            let report = match step {
                Some(i) => {
                    let (tau, sigma) =
                        metrics::step_metrics(&c, &r, i).map_err(CliError::analytic)?;
                    json!({"stage": i, "tau": num(tau), "sigma": num(sigma)})
                }
                None => {
                    let m = metrics::signal_metrics(&c, &r, norm.into())
                        .map_err(CliError::analytic)?;
                    json!({
                        "k": num(m.gain),
                        "tau": num(m.tau),
                        "sigma": num(m.sigma),
                        "amplitude": num(m.amplitude),
                        "sigma0": num(m.sigma0),
                    })
                }
            };
            println!("{report}");
            Ok(())
        }
        Cmd::Design {
            alpha,
            alpha_product,
            alphas,
            feedback,
            gain,
            leak,
            gain_range,
            table_points,
        } => {
            if let Some(range) = gain_range {
                let (lo, hi) = range
                    .split_once(':')
                    .and_then(|(a, b)| Some((a.parse::<f64>().ok()?, b.parse::<f64>().ok()?)))
                    .ok_or_else(|| CliError::config("--gain-range must be lo:hi"))?;
                let a = alpha
                    .ok_or_else(|| CliError::config("--gain-range requires --alpha"))?;
                let mut csv = String::from("gain,m,n_star,beta_star\n");
                for i in 0..table_points {
                    let k = lo + (hi - lo) * i as f64 / (table_points - 1).max(1) as f64;
                    let d = design::optimal_design(DesignMode::FixedAlpha { alpha: a }, k, leak);
                    let _ = writeln!(
                        csv,
                        "{:.8e},{:.8e},{},{:.8e}",
                        k, d.m_value, d.n_star, d.beta_star
                    );
                }
                print!("{csv}");
                return Ok(());
            }
            let gain = gain.ok_or_else(|| CliError::config("--gain is required"))?;
            let d = match (alpha, alpha_product, &alphas, feedback) {
                (_, _, Some(list), Some(eps)) => {
                    if list.is_empty() {
                        return Err(CliError::config("--alphas must be non-empty"));
                    }
                    design::feedback_design(list, eps, gain, leak)
                }
                (Some(a), None, _, None) => {
                    design::optimal_design(DesignMode::FixedAlpha { alpha: a }, gain, leak)
                }
                (None, Some(p), _, None) => {
                    design::optimal_design(DesignMode::FixedProduct { alpha_product: p }, gain, leak)
                }
                _ => {
                    return Err(CliError::config(
                        "provide --alpha, --alpha-product, or --alphas with --feedback",
                    ))
                }
            };
            println!(
                "{}",
                json!({
                    "n_star": d.n_star,
                    "beta_star": num(d.beta_star),
                    "sigma0_star": num(d.sigma0_star),
                    "m": num(d.m_value),
                })
            );
            Ok(())
        }
        Cmd::Simulate {
            config,
            input,
            t_end,
            dt,
            xtot,
            nonlinear,
            delays,
            out,
            check,
        } => {
            let c = load_cascade(&config.config)?;
            let r = load_input(&input)?;
            let dt = dt.unwrap_or_else(|| default_dt(&c));
            let traj = if nonlinear {
                sim::simulate_nonlinear(&c, xtot.as_deref().unwrap_or(&[]), &r, t_end, dt)
            } else if let Some(d) = &delays {
                sim::simulate_delayed(&c, d, &r, t_end, dt)
            } else {
                sim::simulate_linear(&c, &r, t_end, dt)
            }
            .map_err(CliError::numeric)?;
            let mut text = trajectory_csv(&traj);
            if check {
                let output_state = c.n() + 1;
                let (tau_hat, sigma_hat) =
                    sim::empirical_moments(&traj, output_state).map_err(CliError::numeric)?;
                let norm_hat = sim::norm2_time(&traj, Channel::State(output_state))
                    .map_err(CliError::numeric)?;
                let tau = metrics::signaling_time(&c, &r).map_err(CliError::analytic)?;
                let sigma = metrics::signal_duration(&c, &r).map_err(CliError::analytic)?;
                let rel = |a: f64, b: f64| num((a - b).abs() / b.abs().max(f64::MIN_POSITIVE));
                let footer = json!({
                    "tau_hat": num(tau_hat),
                    "sigma_hat": num(sigma_hat),
                    "norm2_hat": num(norm_hat),
                    "tau": num(tau),
                    "sigma": num(sigma),
                    "tau_rel_err": rel(tau_hat, tau),
                    "sigma_rel_err": rel(sigma_hat, sigma),
                });
                let _ = writeln!(text, "{footer}");
            }
            emit(text, out.as_ref())
        }
        Cmd::Stability {
            config,
            perturbation,
        } => {
            let c = load_cascade(&config.config)?;
            let pert: Option<stability::PerturbationSpec> = perturbation
                .as_deref()
                .map(|p| serde_json::from_value(load_json(p)?).map_err(CliError::config))
                .transpose()?;
            let mut a = stability::build_system_matrix(&c);
            if let Some(p) = &pert {
                for &(row, col, value) in &p.entries {
                    if row >= a.nrows() || col >= a.ncols() || row == col {
                        return Err(CliError::config(format!(
                            "perturbation entry ({row}, {col}) is out of range or diagonal"
                        )));
                    }
                    a[(row, col)] += value;
                }
            }
            let eigs = stability::eigenvalues(&a).map_err(CliError::analytic)?;
            let max_re = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            let mut report = json!({
                "eigenvalues": eigs.iter().map(|z| json!([num(z.re), num(z.im)])).collect::<Value>(),
                "max_real_part": num(max_re),
                "stable": max_re < 0.0,
            });
            if c.feedback() > 0.0 {
                report["eps_max"] = num(stability::feedback_stability_bound(&c));
            }
            println!("{report}");
            Ok(())
        }
        Cmd::Sweep {
            config,
            omega_max,
            points,
            out,
        } => {
            let c = load_cascade(&config.config)?;
            let fastest = c.beta().iter().copied().fold(c.leak().max(1.0), f64::max);
            let table =
                xfer::frequency_sweep(&c, omega_max.unwrap_or(100.0 * fastest), points)
                    .map_err(CliError::analytic)?;
            let mut csv = String::from("omega,magnitude\n");
            for (w, m) in table {
                let _ = writeln!(csv, "{w:.8e},{m:.8e}");
            }
            emit(csv, out.as_ref())
        }
    }
}
