//! Command-line front end.
//!
//! Exit status is 0 on success, 2 on library errors (one `E:<module>:<code>:`
//! line on stderr) and 64 on usage errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::convolution::transform_s;
use crate::error::{Error, Module, Result};
use crate::io::{self, CoeffFile, RecordSet, State};
use crate::parity::{parity_operator, radon_parity};
use crate::phasespace::{
    dense_grid_axes, evaluate_direct, evaluate_grid, planar_limit_error, planar_limit_profile,
    to_spherical_coeffs, LimitState, SphericalFunction, LIMIT_SAMPLES,
};
use crate::radon::{radon_forward, radon_inverse};
use crate::specialfn::{HalfInteger, RotationAngles};
use crate::spinstates::{make_named_state, random_hs, random_pure, NamedState};
use crate::tomography::{
    conditioning_report, full_tomography, grid_values, probabilities, reconstruct_density,
    run_ensemble_experiment, sample_counts, stream_rng, ExperimentConfig, ExperimentMode,
    GridSpec, Repetitions, TracePolicy,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Default directory for relative `--out` paths.
pub const OUT_DIR_ENV: &str = "SPINPHASE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "spinphase", version, about = "Phase-space functions of spin-J states")]
pub struct Cli {
    /// Master seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent. Relative paths resolve under $SPINPHASE_OUT_DIR.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    /// 8-bit grayscale raster.
    Pgm,
    /// 8-bit red/green raster.
    Ppm,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or check state files.
    #[command(subcommand)]
    State(StateCmd),
    /// Parity operator diagonals.
    #[command(subcommand)]
    Parity(ParityCmd),
    /// Evaluate phase-space functions.
    #[command(subcommand)]
    Ps(PsCmd),
    /// Spherical convolution.
    #[command(subcommand)]
    Conv(ConvCmd),
    /// Simulated Stern-Gerlach tomography.
    #[command(subcommand)]
    Tomo(TomoCmd),
    /// Spherical Radon transform.
    #[command(subcommand)]
    Radon(RadonCmd),
    /// Large-J comparison with planar phase space.
    #[command(subcommand)]
    Limits(LimitsCmd),
}

#[derive(Debug, Subcommand)]
pub enum StateCmd {
    /// spin_up, dicke (--m), ghz, squeezed (--squeeze), rnd_J4_fixture,
    /// random_pure or random_hs (--seed).
    Make {
        #[arg(long)]
        name: String,
        #[arg(long, value_parser = half_integer)]
        j: HalfInteger,
        #[arg(long, value_parser = half_integer, allow_hyphen_values = true)]
        m: Option<HalfInteger>,
        #[arg(long)]
        squeeze: Option<f64>,
        /// Write a density matrix even for pure states.
        #[arg(long)]
        density: bool,
    },
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ParityCmd {
    /// CSV with columns m, weight.
    Dump {
        #[arg(long, value_parser = half_integer)]
        j: HalfInteger,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        /// Radon-transformed kernel.
        #[arg(long)]
        radon: bool,
    },
}

#[derive(Debug, Args)]
pub struct StateAndS {
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub s: f64,
}

#[derive(Debug, Subcommand)]
pub enum PsCmd {
    /// F(θ, φ; s) evaluated from the parity operator.
    Eval {
        #[command(flatten)]
        src: StateAndS,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
    },
    /// Samples on an n × n grid, θ including both poles.
    Grid {
        #[arg(long, conflicts_with = "input", requires = "s")]
        state: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
        /// Coefficient file instead of a state.
        #[arg(long = "in", required_unless_present = "state")]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Spherical-harmonic coefficients.
    Coeffs {
        #[command(flatten)]
        src: StateAndS,
    },
}

#[derive(Debug, Subcommand)]
pub enum ConvCmd {
    /// Convolve with the spin-up kernel of parameter s'.
    Apply {
        #[arg(long = "kernel-s", allow_hyphen_values = true)]
        kernel_s: f64,
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum TomoCmd {
    /// Ensemble error study driven by a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Band-limited reconstruction on an equiangular grid.
    Full {
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, conflicts_with = "records")]
        state: Option<PathBuf>,
        /// Repetitions per point, or "inf" for exact probabilities.
        #[arg(long, default_value = "1000", value_parser = repetitions)]
        reps: Repetitions,
        #[arg(long = "n-p")]
        n_p: Option<usize>,
        /// Read counts instead of simulating them.
        #[arg(long, required_unless_present = "state")]
        records: Option<PathBuf>,
        /// Save the simulated counts.
        #[arg(long = "records-out")]
        records_out: Option<PathBuf>,
    },
    /// Direct vs converted reconstructions among Q, W and P.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Density matrix from a coefficient file or from a state's F(·, s).
    Density {
        #[arg(long = "in", conflicts_with = "state")]
        input: Option<PathBuf>,
        #[arg(long, required_unless_present = "input", requires = "s")]
        state: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
        /// Rescale to unit trace instead of checking it.
        #[arg(long)]
        normalize: bool,
        /// Clip negative eigenvalues before writing.
        #[arg(long)]
        project: bool,
        /// Write the conditioning report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum RadonCmd {
    Fwd {
        #[arg(long = "in")]
        input: PathBuf,
    },
    Inv {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum LimitsCmd {
    /// max |F_spin − F_planar| along a meridian for each J.
    Compare {
        /// spin_up or dicke (|J, J−1⟩).
        #[arg(long)]
        state: String,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, value_delimiter = ',', value_parser = half_integer, required = true)]
        j: Vec<HalfInteger>,
        /// Emit the full profile (theta, a, spin, planar) for a single J.
        #[arg(long)]
        profile: bool,
    },
}

fn half_integer(s: &str) -> std::result::Result<HalfInteger, String> {
    s.parse::<HalfInteger>().map_err(|e| e.to_string())
}

fn repetitions(s: &str) -> std::result::Result<Repetitions, String> {
    if s == "inf" {
        return Ok(Repetitions::Exact);
    }
    match s.parse::<u64>() {
        Ok(0) | Err(_) => Err(format!("expected a positive integer or \"inf\", got {s:?}")),
        Ok(n) => Ok(Repetitions::Finite(n)),
    }
}

fn cli_error(msg: impl Into<String>) -> Error {
    Error::domain(Module::Cli, msg)
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let msg = e.to_string();
            let prefix = format!("{}: ", e.module());
            let msg = msg.strip_prefix(&prefix).unwrap_or(&msg);
            eprintln!("E:{}:{}: {msg}", e.module(), e.code());
            EXIT_ERROR
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(cli_error("--threads must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| cli_error(format!("thread pool: {e}")))?;
    let ctx = Context {
        seed: cli.seed,
        out: cli.out.map(resolve_out),
        format: cli.format,
    };
    pool.install(|| dispatch(&ctx, cli.command))
}

struct Context {
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
}

fn resolve_out(p: PathBuf) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if p.is_relative() && !dir.is_empty() => Path::new(&dir).join(p),
        _ => p,
    }
}

impl Context {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn format(&self, default: Format, allowed: &[Format]) -> Result<Format> {
        let f = self.format.unwrap_or(default);
        if !allowed.contains(&f) {
            return Err(cli_error(format!(
                "format {:?} is not available here (use one of {allowed:?})",
                f
            )));
        }
        Ok(f)
    }

    fn emit(&self, bytes: &[u8]) -> Result<()> {
        match &self.out {
            Some(path) => write_file(path, bytes),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(bytes)?;
                stdout.flush()?;
                Ok(())
            }
        }
    }

    fn emit_json<T: Serialize>(&self, value: &T) -> Result<()> {
        self.format(Format::Json, &[Format::Json])?;
        self.emit(io::to_json(value)?.as_bytes())
    }

    fn emit_function(&self, f: &SphericalFunction) -> Result<()> {
        self.emit_json(&CoeffFile::from_function(f))
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn dispatch(ctx: &Context, command: Command) -> Result<()> {
    match command {
        Command::State(cmd) => state_cmd(ctx, cmd),
        Command::Parity(ParityCmd::Dump { j, s, radon }) => {
            ctx.format(Format::Csv, &[Format::Csv])?;
            let op = if radon { radon_parity(j, s)? } else { parity_operator(j, s)? };
            let mut text = String::from("m,weight\n");
            for (m, w) in j.projections().zip(op.diag()) {
                text.push_str(&format!("{:?},{:?}\n", m.value(), w));
            }
            ctx.emit(text.as_bytes())
        }
        Command::Ps(cmd) => ps_cmd(ctx, cmd),
        Command::Conv(ConvCmd::Apply { kernel_s, input }) => {
            ctx.emit_function(&transform_s(&io::read_coeffs(&input)?, kernel_s)?)
        }
        Command::Tomo(cmd) => tomo_cmd(ctx, cmd),
        Command::Radon(RadonCmd::Fwd { input }) => {
            ctx.emit_function(&radon_forward(&io::read_coeffs(&input)?))
        }
        Command::Radon(RadonCmd::Inv { input }) => {
            ctx.emit_function(&radon_inverse(&io::read_coeffs(&input)?)?)
        }
        Command::Limits(LimitsCmd::Compare { state, s, j, profile }) => {
            limits_cmd(ctx, &state, s, &j, profile)
        }
    }
}

fn state_cmd(ctx: &Context, cmd: StateCmd) -> Result<()> {
    match cmd {
        StateCmd::Make { name, j, m, squeeze, density } => {
            let j = HalfInteger::spin(j.twice())?;
            let state = match name.as_str() {
                "random_pure" => State::Pure(random_pure(j, ctx.seed())),
                "random_hs" => State::Density(random_hs(j, ctx.seed())),
                other => State::Pure(make_named_state(&NamedState::parse(other, m, squeeze)?, j)?),
            };
            let state = if density { State::Density(state.density()) } else { state };
            ctx.emit_json(&state.to_file())
        }
        StateCmd::Validate { input } => {
            let state = io::read_state(&input)?;
            let rho = state.density();
            #[derive(Serialize)]
            struct Summary {
                #[serde(rename = "twice_J")]
                twice_j: i32,
                kind: &'static str,
                purity: f64,
            }
            ctx.emit_json(&Summary {
                twice_j: state.j().twice(),
                kind: match state {
                    State::Pure(_) => "pure",
                    State::Density(_) => "density",
                },
                purity: rho.purity(),
            })
        }
    }
}

fn ps_cmd(ctx: &Context, cmd: PsCmd) -> Result<()> {
    match cmd {
        PsCmd::Eval { src, theta, phi } => {
            ctx.format(Format::Csv, &[Format::Csv, Format::Json])?;
            let rho = io::read_state(&src.state)?.density();
            let v = evaluate_direct(&rho, &RotationAngles::new(theta, phi)?, src.s)?;
            ctx.emit(format!("{v:?}\n").as_bytes())
        }
        PsCmd::Grid { state, s, input, n } => {
            if n < 2 {
                return Err(cli_error("--n must be at least 2"));
            }
            let f = match (state, input) {
                (Some(path), _) => {
                    let s = s.ok_or_else(|| cli_error("--state needs --s"))?;
                    to_spherical_coeffs(&io::read_state(&path)?.density(), s)?
                }
                (None, Some(path)) => io::read_coeffs(&path)?,
                (None, None) => return Err(cli_error("give --state or --in")),
            };
            let (thetas, phis) = dense_grid_axes(n, n);
            let values = evaluate_grid(&f, &thetas, &phis)?;
            let mut buf = Vec::new();
            match ctx.format(Format::Csv, &[Format::Csv, Format::Json, Format::Pgm, Format::Ppm])? {
                Format::Csv => io::write_grid_csv(&mut buf, &io::grid_rows(&thetas, &phis, &values)?)?,
                Format::Json => buf = io::to_json(&io::grid_rows(&thetas, &phis, &values)?)?.into_bytes(),
                Format::Pgm => io::write_pgm(&mut buf, n, n, &values)?,
                Format::Ppm => io::write_ppm(&mut buf, n, n, &values)?,
            }
            ctx.emit(&buf)
        }
        PsCmd::Coeffs { src } => {
            let rho = io::read_state(&src.state)?.density();
            ctx.emit_function(&to_spherical_coeffs(&rho, src.s)?)
        }
    }
}

fn load_config(ctx: &Context, path: &Path) -> Result<ExperimentConfig> {
    let mut config: ExperimentConfig = io::read_json(path)?;
    if let Some(seed) = ctx.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn tomo_cmd(ctx: &Context, cmd: TomoCmd) -> Result<()> {
    match cmd {
        TomoCmd::Simulate { config } => {
            let config = load_config(ctx, &config)?;
            ctx.emit_json(&run_ensemble_experiment(&config)?)
        }
        TomoCmd::Compare { config } => {
            let mut config = load_config(ctx, &config)?;
            config.mode = ExperimentMode::Compare3x3;
            ctx.emit_json(&run_ensemble_experiment(&config)?)
        }
        TomoCmd::Full { s, state, reps, n_p, records, records_out } => {
            let (j, grid, freqs) = match (state, records) {
                (Some(path), _) => {
                    let rho = io::read_state(&path)?.density();
                    let j = rho.j();
                    let grid = match n_p {
                        Some(n) => GridSpec::new(n, j)?,
                        None => GridSpec::minimal(j),
                    };
                    let points = grid.points();
                    let freqs: Vec<Vec<f64>> = match reps {
                        Repetitions::Exact => {
                            if records_out.is_some() {
                                return Err(cli_error("--records-out needs finite --reps"));
                            }
                            points.iter().map(|p| probabilities(&rho, p)).collect::<Result<_>>()?
                        }
                        Repetitions::Finite(n) => {
                            let recs = points
                                .iter()
                                .enumerate()
                                .map(|(k, p)| {
                                    sample_counts(&rho, p, n, &mut stream_rng(ctx.seed(), &[k as u64]))
                                })
                                .collect::<Result<Vec<_>>>()?;
                            let freqs = recs.iter().map(|r| r.frequencies()).collect();
                            if let Some(out) = records_out {
                                let set = RecordSet {
                                    twice_j: j.twice(),
                                    n_p: grid.n_p(),
                                    records: recs,
                                };
                                write_file(&resolve_out(out), io::to_json(&set)?.as_bytes())?;
                            }
                            freqs
                        }
                    };
                    (j, grid, freqs)
                }
                (None, Some(path)) => {
                    let set: RecordSet = io::read_json(&path)?;
                    set.validate()?;
                    let j = HalfInteger::spin(set.twice_j)?;
                    let grid = GridSpec::new(set.n_p, j)?;
                    for (r, p) in set.records.iter().zip(grid.points()) {
                        if (r.theta - p.theta).abs() > 1e-12 || (r.phi - p.phi).abs() > 1e-12 {
                            return Err(Error::integrity(
                                Module::Tomography,
                                format!("record at ({}, {}) is off the grid", r.theta, r.phi),
                            ));
                        }
                    }
                    (j, grid, set.records.iter().map(|r| r.frequencies()).collect())
                }
                (None, None) => return Err(cli_error("give --state or --records")),
            };
            let values = grid_values(&parity_operator(j, s)?, &freqs);
            ctx.emit_function(&full_tomography(&values, &grid, j, Some(s))?)
        }
        TomoCmd::Density { input, state, s, normalize, project, report } => {
            let f = match (input, state) {
                (Some(path), _) => io::read_coeffs(&path)?,
                (None, Some(path)) => {
                    let s = s.ok_or_else(|| cli_error("--state needs --s"))?;
                    to_spherical_coeffs(&io::read_state(&path)?.density(), s)?
                }
                (None, None) => return Err(cli_error("give --in or --state")),
            };
            let s_tag = f
                .s_tag()
                .ok_or_else(|| cli_error("coefficient file has no s value"))?;
            let cond = conditioning_report(f.j(), s_tag)?;
            if cond.precarious {
                eprintln!(
                    "W:tomography:precarious: kernel M_{} has {:.4} times the peak weight of the Wigner kernel",
                    cond.kernel_s, cond.amplification
                );
            }
            if let Some(path) = report {
                write_file(&resolve_out(path), io::to_json(&cond)?.as_bytes())?;
            }
            let policy = if normalize { TracePolicy::Normalize } else { TracePolicy::default() };
            let est = reconstruct_density(&f, policy)?;
            let rho = if project { est.into_physical_density()? } else { est.into_density()? };
            ctx.emit_json(&State::Density(rho).to_file())
        }
    }
}

fn limits_cmd(ctx: &Context, state: &str, s: f64, js: &[HalfInteger], profile: bool) -> Result<()> {
    let state = LimitState::parse(state)?;
    let format = ctx.format(Format::Csv, &[Format::Csv, Format::Json])?;
    if profile {
        let [j] = js else {
            return Err(cli_error("--profile takes exactly one J"));
        };
        let rows = planar_limit_profile(*j, s, state, LIMIT_SAMPLES)?;
        let text = match format {
            Format::Json => io::to_json(&rows)?,
            _ => {
                let mut t = String::from("theta,a,spin,planar\n");
                for r in rows {
                    t.push_str(&format!("{:?},{:?},{:?},{:?}\n", r[0], r[1], r[2], r[3]));
                }
                t
            }
        };
        return ctx.emit(text.as_bytes());
    }
    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "twice_J")]
        twice_j: i32,
        max_abs_difference: f64,
    }
    let rows = js
        .iter()
        .map(|&j| {
            Ok(Row {
                twice_j: HalfInteger::spin(j.twice())?.twice(),
                max_abs_difference: planar_limit_error(j, s, state)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let text = match format {
        Format::Json => io::to_json(&rows)?,
        _ => {
            let mut t = String::from("twice_J,max_abs_difference\n");
            for r in rows {
                t.push_str(&format!("{},{:?}\n", r.twice_j, r.max_abs_difference));
            }
            t
        }
    };
    ctx.emit(text.as_bytes())
}
