//! Batch front end: every computation of the library as a subcommand with
//! machine-readable output. JSON goes to stdout (or `--output`); geodesic
//! trajectories can also be dumped as CSV.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure,
//! 3 invariant-battery failure.

// `!(x < y)` rejects NaN inputs, which `x >= y` would accept
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use phigeo::checks::{run_battery, BatteryConfig, CheckResult};
use phigeo::{divergence, geometry, transport, validate_phi, GeomError};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(GeomError),
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        CliError::Numeric(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numeric(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "phigeo",
    version,
    about = "Geometry of deformed-exponential families: divergence, metric, connections, curvature, geodesics, transport"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Write output to this file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configured deformation against the defining axioms
    ValidatePhi {
        #[command(flatten)]
        common: CommonArgs,
        /// Convexity slack
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        grid_min: Option<f64>,
        #[arg(long)]
        grid_max: Option<f64>,
        #[arg(long)]
        grid_points: Option<usize>,
    },
    /// phi-divergence between the densities `p` and `q` of the config
    Divergence {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Metric tensor and its inverse at a parameter point
    Metric {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated parameter point, e.g. `0.3,-0.5`
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
    },
    /// Christoffel symbols of a chosen connection at a parameter point
    Christoffel {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
        /// `plus1`, `minus1`, `levi-civita`, or a numeric alpha
        #[arg(long, allow_hyphen_values = true)]
        connection: Option<String>,
        /// Step for the Levi-Civita metric derivatives
        #[arg(long)]
        fd_step: Option<f64>,
    },
    /// Riemann curvature tensor of the alpha-connection
    Curvature {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long)]
        fd_step: Option<f64>,
    },
    /// Integrate a geodesic of the alpha-connection
    Geodesic {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        theta0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// `json` (default) or `csv`
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Parallel-transport a tangent vector between parameter points
    Transport {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        from: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<String>,
        /// Coordinate components of the vector at the start point
        #[arg(long, allow_hyphen_values = true)]
        vector: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long)]
        steps_per_segment: Option<usize>,
    },
    /// Natural-gradient descent of the divergence to the target density `p`
    Natgrad {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        theta0: Option<String>,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Stop when the step moves less than this
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run the full invariant battery on the configured family
    CheckAll {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not errors
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e @ CliError::Config(_)) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
        Err(e @ CliError::Numeric(_)) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::ValidatePhi {
            mut common,
            tol,
            grid_min,
            grid_max,
            grid_points,
        } => {
            let (cfg, base) = load(&mut common)?;
            let phi = cfg.build_phi()?;
            let (min, max, points) = match &cfg.grid {
                Some(g) => (
                    grid_min.unwrap_or(g.min),
                    grid_max.unwrap_or(g.max),
                    grid_points.unwrap_or(g.points),
                ),
                None => (
                    grid_min.unwrap_or(-10.0),
                    grid_max.unwrap_or(10.0),
                    grid_points.unwrap_or(201),
                ),
            };
            if points < 3 || !(min < max) {
                return Err(CliError::Config(
                    "validation grid needs min < max and at least 3 points".into(),
                ));
            }
            let tol = tol.or(cfg.tol).unwrap_or(1e-9);
            let grid: Vec<f64> = (0..points)
                .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
                .collect();
            let report = validate_phi(&phi, &grid, tol)?;

            #[derive(Serialize)]
            struct ValidateOut {
                phi: String,
                tol: f64,
                grid: GridOut,
                checks: Vec<phigeo::phi::AxiomCheck>,
                all_passed: bool,
            }
            #[derive(Serialize)]
            struct GridOut {
                min: f64,
                max: f64,
                points: usize,
            }
            let out = ValidateOut {
                phi: phi.name(),
                tol,
                grid: GridOut { min, max, points },
                checks: report.checks,
                all_passed: report.all_passed,
            };
            write_json(&common, &out)?;
            let _ = base;
            Ok(0)
        }

        Command::Divergence { mut common } => {
            let (cfg, base) = load(&mut common)?;
            let phi = cfg.build_phi()?;
            let p = cfg
                .p
                .as_ref()
                .ok_or_else(|| CliError::Config("divergence needs a `p` density".into()))?;
            let q = cfg
                .q
                .as_ref()
                .ok_or_else(|| CliError::Config("divergence needs a `q` density".into()))?;
            let p = cfg.load_density(p, &base)?;
            let q = cfg.load_density(q, &base)?;
            let value = divergence::phi_divergence(&phi, &cfg.u0_values(), &p, &q)?;

            #[derive(Serialize)]
            struct DivergenceOut {
                value: f64,
                phi: String,
                u0_kind: &'static str,
            }
            write_json(
                &common,
                &DivergenceOut {
                    value,
                    phi: phi.name(),
                    u0_kind: cfg.u0_kind(),
                },
            )?;
            Ok(0)
        }

        Command::Metric { mut common, theta } => {
            let (cfg, base) = load(&mut common)?;
            let family = cfg.build_family(&base)?;
            let theta = resolve_vec(theta.as_deref(), cfg.theta.clone(), "theta")?;
            let point = family.point_at(&theta)?;
            let tensor = geometry::metric(&point)?;
            write_json(&common, &tensor)?;
            Ok(0)
        }

        Command::Christoffel {
            mut common,
            theta,
            connection,
            fd_step,
        } => {
            let (cfg, base) = load(&mut common)?;
            let family = cfg.build_family(&base)?;
            let theta = resolve_vec(theta.as_deref(), cfg.theta.clone(), "theta")?;
            let connection = connection
                .or_else(|| cfg.alpha.map(|a| a.to_string()))
                .ok_or_else(|| {
                    CliError::Config("missing --connection (plus1|minus1|levi-civita|alpha)".into())
                })?;

            let tensor = match connection.as_str() {
                "plus1" => geometry::christoffel_pm1(&family.point_at(&theta)?)?.0,
                "minus1" => geometry::christoffel_pm1(&family.point_at(&theta)?)?.1,
                "levi-civita" | "levi_civita" => {
                    let h = fd_step
                        .or(cfg.fd_step)
                        .unwrap_or_else(|| geometry::default_fd_step(&theta));
                    geometry::levi_civita(&family, &theta, h)?
                }
                other => {
                    let alpha: f64 = other.parse().map_err(|_| {
                        CliError::Config(format!(
                            "connection must be plus1, minus1, levi-civita or a numeric alpha; got `{other}`"
                        ))
                    })?;
                    geometry::christoffel_alpha(&family.point_at(&theta)?, alpha)?
                }
            };

            #[derive(Serialize)]
            struct ChristoffelOut {
                indices: &'static str,
                #[serde(flatten)]
                tensor: geometry::ChristoffelTensor<f64>,
            }
            write_json(
                &common,
                &ChristoffelOut {
                    indices: "(i,j,k)",
                    tensor,
                },
            )?;
            Ok(0)
        }

        Command::Curvature {
            mut common,
            theta,
            alpha,
            fd_step,
        } => {
            let (cfg, base) = load(&mut common)?;
            let family = cfg.build_family(&base)?;
            let theta = resolve_vec(theta.as_deref(), cfg.theta.clone(), "theta")?;
            let alpha = alpha
                .or(cfg.alpha)
                .ok_or_else(|| CliError::Config("missing --alpha".into()))?;
            let h = fd_step
                .or(cfg.fd_step)
                .unwrap_or_else(|| geometry::default_fd_step(&theta));
            let riemann = geometry::riemann_curvature(&family, &theta, alpha, h)?;
            let max_abs = riemann
                .iter()
                .flatten()
                .flatten()
                .flatten()
                .fold(0.0_f64, |acc, &v| acc.max(v.abs()));

            #[derive(Serialize)]
            struct CurvatureOut {
                theta: Vec<f64>,
                alpha: f64,
                step: f64,
                indices: &'static str,
                max_abs: f64,
                riemann: Vec<Vec<Vec<Vec<f64>>>>,
            }
            write_json(
                &common,
                &CurvatureOut {
                    theta,
                    alpha,
                    step: h,
                    indices: "(l,k,i,j)",
                    max_abs,
                    riemann,
                },
            )?;
            Ok(0)
        }

        Command::Geodesic {
            mut common,
            theta0,
            v0,
            alpha,
            t_end,
            steps,
            format,
        } => {
            let (cfg, base) = load(&mut common)?;
            let family = cfg.build_family(&base)?;
            let theta0 = resolve_vec(theta0.as_deref(), cfg.theta0.clone(), "theta0")?;
            let v0 = resolve_vec(v0.as_deref(), cfg.v0.clone(), "v0")?;
            let alpha = alpha
                .or(cfg.alpha)
                .ok_or_else(|| CliError::Config("missing --alpha".into()))?;
            let t_end = t_end.or(cfg.t_end).unwrap_or(1.0);
            let steps = steps.or(cfg.steps).unwrap_or(100);
            let path = geometry::geodesic(&family, &theta0, &v0, alpha, t_end, steps)?;

            match format.as_str() {
                "json" => {
                    #[derive(Serialize)]
                    struct GeodesicOut {
                        alpha: f64,
                        t_end: f64,
                        steps: usize,
                        path: Vec<PathNode>,
                    }
                    #[derive(Serialize)]
                    struct PathNode {
                        t: f64,
                        theta: Vec<f64>,
                    }
                    let out = GeodesicOut {
                        alpha,
                        t_end,
                        steps,
                        path: path
                            .into_iter()
                            .map(|(t, theta)| PathNode { t, theta })
                            .collect(),
                    };
                    write_json(&common, &out)?;
                }
                "csv" => {
                    let n = family.dimension();
                    let mut text = String::from("t");
                    for i in 1..=n {
                        text.push_str(&format!(",theta{i}"));
                    }
                    text.push('\n');
                    for (t, theta) in &path {
                        text.push_str(&format!("{t}"));
                        for v in theta {
                            text.push_str(&format!(",{v}"));
                        }
                        text.push('\n');
                    }
                    write_text(&common, &text)?;
                }
                other => {
                    return Err(CliError::Config(format!(
                        "format must be json or csv, got `{other}`"
                    )))
                }
            }
            Ok(0)
        }

        Command::Transport {
            mut common,
            from,
            to,
            vector,
            alpha,
            steps_per_segment,
        } => {
            let (cfg, base) = load(&mut common)?;
            let family = cfg.build_family(&base)?;
            let alpha = alpha.or(cfg.alpha).unwrap_or(1.0);
            let vector = resolve_vec(vector.as_deref(), cfg.vector.clone(), "vector")?;

            let polyline: Vec<Vec<f64>> = match &cfg.curve {
                Some(curve) if from.is_none() && to.is_none() => curve.clone(),
                _ => {
                    let from = resolve_vec(from.as_deref(), cfg.from.clone(), "from")?;
                    let to = resolve_vec(to.as_deref(), cfg.to.clone(), "to")?;
                    vec![from, to]
                }
            };
            if polyline.len() < 2 {
                return Err(CliError::Config("curve needs at least two vertices".into()));
            }
            let start = polyline.first().unwrap().clone();
            let end = polyline.last().unwrap().clone();

            let norm_at = |theta: &[f64], comps: &[f64]| -> Result<f64, CliError> {
                let g = geometry::metric(&family.point_at(theta)?)?.g;
                let mut s = 0.0;
                for i in 0..comps.len() {
                    for j in 0..comps.len() {
                        s += g[i][j] * comps[i] * comps[j];
                    }
                }
                Ok(s)
            };

            let (after, target_tangency, projection_residual) = if alpha == 1.0 {
                // closed form: path independent
                let from_point = family.point_at(&start)?;
                let to_point = family.point_at(&end)?;
                let x = transport::from_coordinates(&from_point, &vector)?;
                let moved = transport::transport_1(&to_point, &x)?;
                let tangency = to_point.kernel()?.e1(moved.values());
                let (comps, residual) = transport::to_coordinates(&to_point, &moved)?;
                (comps, Some(tangency), Some(residual))
            } else {
                let steps = steps_per_segment
                    .or(cfg.steps)
                    .unwrap_or(transport::DEFAULT_STEPS_PER_SEGMENT);
                let vs = transport::transport_ode(&family, &polyline, alpha, &vector, steps)?;
                (vs.last().unwrap().clone(), None, None)
            };

            #[derive(Serialize)]
            struct TransportOut {
                alpha: f64,
                from: Vec<f64>,
                to: Vec<f64>,
                curve: Vec<Vec<f64>>,
                vector_before: Vec<f64>,
                vector_after: Vec<f64>,
                diagnostics: Diagnostics,
            }
            #[derive(Serialize)]
            struct Diagnostics {
                norm_before: f64,
                norm_after: f64,
                target_tangency: Option<f64>,
                projection_residual: Option<f64>,
            }
            let out = TransportOut {
                alpha,
                from: start.clone(),
                to: end.clone(),
                curve: polyline,
                vector_before: vector.clone(),
                vector_after: after.clone(),
                diagnostics: Diagnostics {
                    norm_before: norm_at(&start, &vector)?,
                    norm_after: norm_at(&end, &after)?,
                    target_tangency,
                    projection_residual,
                },
            };
            write_json(&common, &out)?;
            Ok(0)
        }

        Command::Natgrad {
            mut common,
            theta0,
            rate,
            max_steps,
            tol,
        } => {
            let (cfg, base) = load(&mut common)?;
            let family = cfg.build_family(&base)?;
            let target = cfg
                .p
                .as_ref()
                .ok_or_else(|| CliError::Config("natgrad needs a target density `p`".into()))?;
            let target = cfg.load_density(target, &base)?;
            let theta0 = resolve_vec(theta0.as_deref(), cfg.theta0.clone(), "theta0")?;
            let rate = rate.or(cfg.rate).unwrap_or(1.0);
            let max_steps = max_steps.or(cfg.max_steps).unwrap_or(200);
            let tol = tol.or(cfg.tol).unwrap_or(1e-12);

            let mut theta = theta0.clone();
            let mut steps_taken = 0;
            let mut converged = false;
            for _ in 0..max_steps {
                let (_, grad) = divergence::target_divergence_with_grad(&family, &target, &theta)?;
                let next = geometry::natural_gradient_step(&family, &theta, &grad, rate)?;
                let moved = next
                    .iter()
                    .zip(&theta)
                    .fold(0.0_f64, |acc, (&a, &b)| acc.max((a - b).abs()));
                theta = next;
                steps_taken += 1;
                if moved < tol {
                    converged = true;
                    break;
                }
            }
            let (objective, gradient) =
                divergence::target_divergence_with_grad(&family, &target, &theta)?;

            #[derive(Serialize)]
            struct NatgradOut {
                theta0: Vec<f64>,
                rate: f64,
                max_steps: usize,
                steps_taken: usize,
                converged: bool,
                theta: Vec<f64>,
                objective: f64,
                gradient: Vec<f64>,
            }
            write_json(
                &common,
                &NatgradOut {
                    theta0,
                    rate,
                    max_steps,
                    steps_taken,
                    converged,
                    theta,
                    objective,
                    gradient,
                },
            )?;
            Ok(0)
        }

        Command::CheckAll { mut common, seed } => {
            let (cfg, base) = load(&mut common)?;
            let family = cfg.build_family(&base)?;
            let defaults = BatteryConfig::default();
            let battery = BatteryConfig {
                seed: seed.or(cfg.seed).unwrap_or(0),
                random_points: cfg.random_points.unwrap_or(defaults.random_points),
                theta_range: cfg.theta_range.unwrap_or(defaults.theta_range),
                density_pairs: cfg.density_pairs.unwrap_or(defaults.density_pairs),
            };
            let checks = run_battery(&family, &battery)?;
            let all_passed = checks.iter().all(|c| c.passed);

            #[derive(Serialize)]
            struct CheckAllOut {
                seed: u64,
                all_passed: bool,
                checks: Vec<CheckResult>,
            }
            write_json(
                &common,
                &CheckAllOut {
                    seed: battery.seed,
                    all_passed,
                    checks: checks.clone(),
                },
            )?;

            // human-readable table on stderr so stdout stays machine-parseable
            eprintln!("{:<34} {:>12} {:>10}  status", "check", "observed", "tolerated");
            for c in &checks {
                eprintln!(
                    "{:<34} {:>12.3e} {:>10.1e}  {}",
                    c.name,
                    c.observed,
                    c.tolerance,
                    if c.passed { "pass" } else { "FAIL" }
                );
            }
            Ok(if all_passed { 0 } else { 3 })
        }
    }
}

/// Load the config and resolve the output target: the `--output` flag wins
/// over the config's `output` field; neither means stdout.
fn load(common: &mut CommonArgs) -> Result<(RunConfig, PathBuf), CliError> {
    let cfg = RunConfig::load(&common.config)?;
    let base = common
        .config
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();
    if common.output.is_none() {
        common.output = cfg.output.as_ref().map(|p| {
            if p.is_absolute() {
                p.clone()
            } else {
                base.join(p)
            }
        });
    }
    Ok((cfg, base))
}

/// `--flag "0.3,-0.5"` wins over the config default.
fn resolve_vec(
    flag: Option<&str>,
    config_value: Option<Vec<f64>>,
    name: &str,
) -> Result<Vec<f64>, CliError> {
    match flag {
        Some(text) => parse_list(text, name),
        None => config_value.ok_or_else(|| CliError::Config(format!("missing --{name}"))),
    }
}

fn parse_list(text: &str, name: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("cannot parse --{name} entry `{part}`: {e}")))
        })
        .collect()
}

fn write_json<T: Serialize>(common: &CommonArgs, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_text(common, &text)
}

fn write_text(common: &CommonArgs, text: &str) -> Result<(), CliError> {
    match &common.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
