use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Number, Value};

use flowdepth::circle::{self, CircleMap};
use flowdepth::contour::{self, ContourMetric};
use flowdepth::flow::{self, RealizeConfig};
use flowdepth::l1_interp::{self, InterpProblem};
use flowdepth::lift2d::{verify_factorization, LiftConfig, LiftTarget};
use flowdepth::relu1d;
use flowdepth::so3::{d_l1_bounds, Rotation3};
use flowdepth::verify::{self, Fault, VerifyOptions};
use flowdepth::{Error, GridFunction, MapSpec};

const EXIT_USAGE: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_VERIFY: u8 = 4;

/// Minimal flow time between 1D diffeomorphisms and related bounds.
#[derive(Parser)]
#[command(name = "flowdepth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form flow distance between two maps (builtin name or x,y CSV).
    Dist {
        #[arg(long, default_value = "identity")]
        psi1: String,
        #[arg(long)]
        psi2: String,
    },
    /// Length of the discretised geodesic between two maps.
    Geodesic {
        #[arg(long, default_value = "identity")]
        psi1: String,
        #[arg(long)]
        psi2: String,
        /// Time steps.
        #[arg(long, default_value_t = relu1d::DEFAULT_STEPS)]
        k: usize,
        /// Quadrature cells per geodesic point.
        #[arg(long, env = "FLOWDEPTH_GRID", default_value_t = relu1d::DEFAULT_GRID)]
        grid: usize,
    },
    /// Distance to the centre over the barycentric family (CSV: a,b,c,value).
    Contour {
        /// Subdivisions per triangle edge.
        #[arg(long, default_value_t = contour::DEFAULT_SUBDIVISIONS)]
        bary: usize,
        #[arg(long, default_value = "flow")]
        metric: String,
        /// Quadrature cells of the L² metric.
        #[arg(long, env = "FLOWDEPTH_GRID", default_value_t = contour::DEFAULT_L2_GRID)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Write to this file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// ℓ1-minimal ReLU interpolation of x,u samples on a uniform grid.
    Interp {
        #[arg(long)]
        input: PathBuf,
    },
    /// Realise the geodesic from the identity as a schedule of family flows.
    Realize {
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 0.15)]
        delta: f64,
        #[arg(long, default_value_t = 32)]
        k: usize,
        /// Interpolation cells per step.
        #[arg(long = "n", default_value_t = 64)]
        n: usize,
        /// Quadrature cells of the geodesic points.
        #[arg(long, env = "FLOWDEPTH_GRID", default_value_t = 4096)]
        grid: usize,
        #[arg(long)]
        first_order: bool,
        /// Dump the trajectories of uniform starting points as t,x0,x_t CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Starting points for the trajectory dump.
        #[arg(long, default_value_t = 16)]
        trajectory_points: usize,
    },
    /// Dimension-doubling factorization check for a scalar target.
    Lift {
        /// Target: x2, sin3 or zero.
        #[arg(long = "fn", default_value = "x2")]
        target: String,
        /// Compact set as `lo,hi`.
        #[arg(long, default_value = "-1,1", allow_hyphen_values = true)]
        domain: String,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        /// Evaluation points on the compact set.
        #[arg(long, env = "FLOWDEPTH_GRID", default_value_t = 1000)]
        grid: usize,
    },
    /// Angle and ℓ1 transport bounds of a rotation relative to the identity.
    So3 {
        /// `axis=x,y,z;angle=r`
        #[arg(long, conflicts_with = "matrix", allow_hyphen_values = true)]
        rotation: Option<String>,
        /// 3×3 matrix CSV without header.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Global upper-bound functional for a pair of circle maps.
    CircleBound {
        #[arg(long, default_value = "identity")]
        psi1: String,
        #[arg(long, default_value = "identity")]
        psi2: String,
        #[arg(long)]
        beta: Option<f64>,
        /// Mode cap (default grid/4).
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long, env = "FLOWDEPTH_GRID", default_value_t = 1024)]
        grid: usize,
        #[arg(long, default_value_t = 1.0)]
        c3: f64,
        #[arg(long, default_value_t = 1.0)]
        c4: f64,
    },
    /// Run the invariant suite; exits 4 if any property fails.
    Verify {
        /// Property name prefix, e.g. `so3`.
        #[arg(long)]
        filter: Option<String>,
        /// Test hook: `min-sn-sign`.
        #[arg(long)]
        inject_fault: Option<String>,
        #[arg(long, default_value_t = verify::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Floats carry 17 significant digits; non-finite values become strings.
fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(
            format!("{x:.16e}")
                .parse::<Number>()
                .expect("formatted float is valid JSON"),
        )
    } else if x.is_nan() {
        Value::String("nan".into())
    } else {
        Value::String("infinite".into())
    }
}

/// Rewrites every float in a serialized value with [`num`].
fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if !n.is_i64() && !n.is_u64() => num(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect::<Map<_, _>>()),
        other => other,
    }
}

fn print_json(v: &Value) -> io::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)
}

enum Failure {
    Lib(Error),
    Io(io::Error),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::Io(e.into())
    }
}

/// Distance-type quantity that renders a map outside the metric's domain as
/// infinite instead of failing.
fn or_infinite(r: flowdepth::Result<f64>) -> Result<f64, Failure> {
    match r {
        Ok(v) => Ok(v),
        Err(Error::NonPositiveSlope { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e.into()),
    }
}

fn load_map(s: &str) -> Result<Option<MapSpec>, Failure> {
    match MapSpec::parse(s) {
        Ok(m) => Ok(Some(m)),
        Err(Error::NonPositiveSlope { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Dist { psi1, psi2 } => {
            let (a, b) = (load_map(&psi1)?, load_map(&psi2)?);
            let (d, legacy, grid) = match (&a, &b) {
                (Some(a), Some(b)) => {
                    let exact = matches!((a, b), (MapSpec::Pwl(_), MapSpec::Pwl(_)));
                    (
                        or_infinite(relu1d::distance(a, b))?,
                        or_infinite(relu1d::legacy_upper_pair(a, b))?,
                        if exact { "exact" } else { "adaptive" },
                    )
                }
                _ => (f64::INFINITY, f64::INFINITY, "none"),
            };
            print_json(&json!({
                "psi1": psi1,
                "psi2": psi2,
                "d_F": num(d),
                "legacy_upper": num(legacy),
                "grid": grid,
            }))?;
        }
        Command::Geodesic { psi1, psi2, k, grid } => {
            let (a, b) = (MapSpec::parse(&psi1)?, MapSpec::parse(&psi2)?);
            let length = relu1d::geodesic_length(&a, &b, k, grid)?;
            print_json(&json!({
                "psi1": psi1,
                "psi2": psi2,
                "k": k,
                "grid": grid,
                "length": num(length),
                "d_F": num(relu1d::distance(&a, &b)?),
            }))?;
        }
        Command::Contour {
            bary,
            metric,
            grid,
            format,
            output,
        } => {
            let metric: ContourMetric = metric.parse()?;
            let rows = contour::run_contour(bary, metric, grid)?;
            let sink: Box<dyn Write> = match output {
                Some(p) => Box::new(File::create(p)?),
                None => Box::new(io::stdout().lock()),
            };
            let mut sink = BufWriter::new(sink);
            match format {
                Format::Csv => contour::write_csv(&rows, &mut sink)?,
                Format::Json => {
                    let v = normalize(json!({ "metric": metric.to_string(), "rows": serde_json::to_value(&rows)? }));
                    serde_json::to_writer_pretty(&mut sink, &v)?;
                    writeln!(sink)?;
                }
            }
            sink.flush()?;
        }
        Command::Interp { input } => {
            let g = GridFunction::read_csv(File::open(input)?)?;
            let p = InterpProblem::new(g.values().to_vec())?;
            let mw = l1_interp::min_weight(&p);
            let w = l1_interp::witness(&p);
            let lp = if p.n() < l1_interp::LP_MAX_NODES {
                num(l1_interp::lp_oracle(&p)?)
            } else {
                Value::Null
            };
            print_json(&json!({
                "N": p.n(),
                "min_weight": num(mw),
                "lp_oracle": lp,
                "witness_feasible": w.residual(p.u_vals()) < 1e-10 && (w.cost() - mw).abs() <= 1e-10 * (1.0 + mw),
            }))?;
        }
        Command::Realize {
            target,
            delta,
            k,
            n,
            grid,
            first_order,
            trajectory,
            trajectory_points,
        } => {
            let psi = MapSpec::parse(&target)?;
            let cfg = RealizeConfig {
                delta,
                k,
                n,
                geodesic_grid: grid,
                second_order: !first_order,
                ..RealizeConfig::default()
            };
            let r = flow::realize_geodesic(&psi, &cfg)?;
            if let Some(path) = trajectory {
                let rows = flow::trajectory(&r.schedule, trajectory_points.max(1));
                flow::write_trajectory_csv(&rows, BufWriter::new(File::create(path)?))?;
            }
            print_json(&json!({
                "target": r.target,
                "k": r.k,
                "N": r.n,
                "complexity": num(r.complexity),
                "total_time": num(r.total_time),
                "budget": num(r.budget),
                "sup_error": num(r.sup_error),
                "depth_tv": num(r.depth_tv),
            }))?;
        }
        Command::Lift {
            target,
            domain,
            lambda,
            kappa,
            grid,
        } => {
            let target: LiftTarget = target.parse()?;
            let bad = || Error::InvalidInput(format!("domain must be 'lo,hi', got '{domain}'"));
            let (lo, hi) = domain.split_once(',').ok_or_else(bad)?;
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            let cfg = LiftConfig::new(target, (lo, hi), lambda, kappa)?;
            let r = verify_factorization(&cfg, grid)?;
            print_json(&json!({
                "fn": target.to_string(),
                "lambda": num(cfg.lambda),
                "kappa": num(cfg.kappa),
                "sup_error": num(r.sup_error),
                "segment_margin": num(r.segment_margin),
            }))?;
        }
        Command::So3 { rotation, matrix } => {
            let r = match (rotation, matrix) {
                (Some(s), None) => Rotation3::parse_axis_angle(&s)?,
                (None, Some(p)) => Rotation3::read_csv(File::open(p)?)?,
                _ => return Err(Error::InvalidInput("pass exactly one of --rotation or --matrix".into()).into()),
            };
            let b = d_l1_bounds(&Rotation3::identity(), &r);
            print_json(&json!({
                "theta": num(b.lower),
                "l1_lower": num(b.lower),
                "l1_log_upper": num(b.log_upper),
                "l1_euler_upper": num(b.euler_upper),
                "euler_convention": b.euler.convention(),
            }))?;
        }
        Command::CircleBound {
            psi1,
            psi2,
            beta,
            modes,
            grid,
            c3,
            c4,
        } => {
            let (a, b): (CircleMap, CircleMap) = (psi1.parse()?, psi2.parse()?);
            let beta = beta.unwrap_or_else(circle::default_beta);
            let modes = modes.unwrap_or(grid / 4);
            if modes >= grid / 2 {
                return Err(Error::InvalidInput(format!("--modes must be below grid/2 = {}", grid / 2)).into());
            }
            let g = circle::global_bound_functional(&a, &b, grid, (c3, c4))?;
            print_json(&json!({
                "J": num(g.j),
                "sup_term": num(g.sup_term),
                "bound": num(g.value),
                "a_n_checksum": num(circle::gb_checksum(beta, modes)),
            }))?;
        }
        Command::Verify {
            filter,
            inject_fault,
            seed,
        } => {
            let fault = inject_fault.as_deref().map(str::parse::<Fault>).transpose()?;
            let report = verify::run_verify(&VerifyOptions { filter, fault, seed })?;
            print_json(&normalize(serde_json::to_value(&report)?))?;
            for p in report.failures() {
                eprintln!("property failed: {}", p.name);
            }
            if !report.passed {
                return Err(Failure::Verify);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(EXIT_VERIFY),
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidInput(_) | Error::UnknownBuiltin(_) => ExitCode::from(EXIT_USAGE),
                _ => ExitCode::from(EXIT_DOMAIN),
            }
        }
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DOMAIN)
        }
    }
}
