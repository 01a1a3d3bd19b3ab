mod input;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use netdetect::demo;
use netdetect::network::{analyze, augment, Verdict};
use netdetect::synthesis::{
    closed_loop_matrix, certify_stabilizable, default_step, simulate_closed_loop,
    spectral_abscissa,
};
use netdetect::Error;
use serde::Serialize;

use input::{SystemDescription, ToleranceOverrides};

/// Detectability analysis for plants observed through networks of
/// consensus-coupled observers.
#[derive(Parser)]
#[command(name = "netdetect", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Decide detectability of the augmented observer network.
    ///
    /// Exit status: 0 detectable, 1 not detectable (a witness is included
    /// in the report), 2 input error, 3 internal-consistency failure.
    Analyze {
        /// Path to a system description (JSON).
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Override the rank tolerance.
        #[arg(long)]
        rank_tol: Option<f64>,
        /// Override the stability boundary.
        #[arg(long)]
        eps_stab: Option<f64>,
        /// Override the stabilization margin.
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Print the reach decomposition of the communication graph.
    Reaches {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Integrate the interconnected estimation-error dynamics.
    ///
    /// Gains are taken from the input file; with --certify a dense
    /// stabilizing injection is computed instead (requires a detectable
    /// network).
    Simulate {
        input: PathBuf,
        /// Horizon in seconds.
        #[arg(long = "T", default_value_t = 10.0)]
        t_final: f64,
        /// Step size; defaults to 1e-3 / max(1, spectral radius).
        #[arg(long)]
        dt: Option<f64>,
        /// Write the sampled trajectory to this CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use a computed stabilizing gain instead of file gains.
        #[arg(long)]
        certify: bool,
        /// Keep every k-th sample in the CSV (default: at most ~2000 rows).
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        rank_tol: Option<f64>,
        #[arg(long)]
        eps_stab: Option<f64>,
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Print a bundled example system, or list the available names.
    Examples { name: Option<String> },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Analyze {
            input,
            format,
            rank_tol,
            eps_stab,
            margin,
        } => cmd_analyze(&input, format, ToleranceOverrides { rank_tol, eps_stab, margin }),
        Command::Reaches { input, format } => cmd_reaches(&input, format),
        Command::Simulate {
            input,
            t_final,
            dt,
            out,
            certify,
            stride,
            rank_tol,
            eps_stab,
            margin,
        } => cmd_simulate(
            &input,
            t_final,
            dt,
            out.as_deref(),
            certify,
            stride,
            ToleranceOverrides { rank_tol, eps_stab, margin },
        ),
        Command::Examples { name } => cmd_examples(name.as_deref()),
    }
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn core_error(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::InvalidInput(_) | Error::DimensionMismatch(_) => ExitCode::from(2),
        Error::Precondition(_) => ExitCode::from(1),
        Error::Numerical(_) | Error::Inconsistent(_) => ExitCode::from(3),
    }
}

fn load(path: &std::path::Path) -> Result<SystemDescription, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    SystemDescription::parse(&text)
}

fn cmd_analyze(path: &std::path::Path, format: Format, flags: ToleranceOverrides) -> ExitCode {
    let desc = match load(path) {
        Ok(d) => d,
        Err(e) => return input_error(e),
    };
    let net = match desc.to_network() {
        Ok(n) => n,
        Err(e) => return input_error(e),
    };
    let tol = match desc.resolve_tolerances(&flags) {
        Ok(t) => t,
        Err(e) => return input_error(e),
    };
    let report = match analyze(&net, &tol) {
        Ok(r) => r,
        Err(e) => return core_error(e),
    };
    match format {
        Format::Text => print!("{}", render::render_report(&report)),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serialization")
        ),
    }
    match report.verdict {
        Verdict::Detectable => ExitCode::SUCCESS,
        Verdict::NotDetectable => ExitCode::from(1),
        Verdict::Inconsistent => ExitCode::from(3),
    }
}

#[derive(Serialize)]
struct ReachJson {
    id: usize,
    vertices: Vec<usize>,
    exclusive: Vec<usize>,
    common: Vec<usize>,
    kernel_vector: Vec<f64>,
}

#[derive(Serialize)]
struct ComponentReachesJson {
    vertices: Vec<usize>,
    spanning_tree: bool,
    reaches: Vec<ReachJson>,
}

#[derive(Serialize)]
struct ReachesJson {
    decoupled: bool,
    n_reaches: usize,
    spanning_tree: bool,
    components: Vec<ComponentReachesJson>,
}

fn cmd_reaches(path: &std::path::Path, format: Format) -> ExitCode {
    let desc = match load(path) {
        Ok(d) => d,
        Err(e) => return input_error(e),
    };
    let net = match desc.to_network() {
        Ok(n) => n,
        Err(e) => return input_error(e),
    };
    let decomposition = match net.graph().reaches() {
        Ok(d) => d,
        Err(e) => return core_error(e),
    };
    match format {
        Format::Text => print!(
            "{}",
            render::render_reaches(&decomposition, net.num_nodes())
        ),
        Format::Json => {
            let up = |v: &[usize]| v.iter().map(|x| x + 1).collect::<Vec<_>>();
            let components = decomposition
                .components
                .iter()
                .map(|comp| {
                    let reaches: Vec<ReachJson> = decomposition
                        .reaches
                        .iter()
                        .enumerate()
                        .filter(|(_, r)| comp.contains(&r.vertices[0]))
                        .map(|(s, r)| ReachJson {
                            id: s + 1,
                            vertices: up(&r.vertices),
                            exclusive: up(&r.exclusive),
                            common: up(&r.common),
                            kernel_vector: decomposition.kernel_basis[s]
                                .iter()
                                .copied()
                                .collect(),
                        })
                        .collect();
                    ComponentReachesJson {
                        vertices: up(comp),
                        spanning_tree: reaches.len() == 1,
                        reaches,
                    }
                })
                .collect();
            let payload = ReachesJson {
                decoupled: decomposition.decoupled,
                n_reaches: decomposition.n_reaches(),
                spanning_tree: decomposition.n_reaches() == 1,
                components,
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&payload).expect("reaches serialization")
            );
        }
    }
    ExitCode::SUCCESS
}

fn cmd_simulate(
    path: &std::path::Path,
    t_final: f64,
    dt: Option<f64>,
    out: Option<&std::path::Path>,
    certify: bool,
    stride: Option<usize>,
    flags: ToleranceOverrides,
) -> ExitCode {
    let desc = match load(path) {
        Ok(d) => d,
        Err(e) => return input_error(e),
    };
    let net = match desc.to_network() {
        Ok(n) => n,
        Err(e) => return input_error(e),
    };
    let tol = match desc.resolve_tolerances(&flags) {
        Ok(t) => t,
        Err(e) => return input_error(e),
    };

    let m = if certify {
        let pair = match augment(&net) {
            Ok(p) => p,
            Err(e) => return core_error(e),
        };
        let cert = match certify_stabilizable(&pair, &tol) {
            Ok(c) => c,
            Err(e) => return core_error(e),
        };
        println!("certified gain: spectral abscissa {:.6e}", cert.spectral_abscissa);
        pair.abar() - &cert.gain * pair.stacked_outputs()
    } else {
        let gains = match desc.gain_set(&net) {
            Ok(Some(g)) => g,
            Ok(None) => {
                return input_error("no gains in the input file; pass --certify to compute one")
            }
            Err(e) => return input_error(e),
        };
        match closed_loop_matrix(&net, &gains) {
            Ok(m) => m,
            Err(e) => return core_error(e),
        }
    };

    let abscissa = spectral_abscissa(&m);
    let step = dt.unwrap_or_else(|| default_step(&m));
    let e0 = DVector::from_element(m.nrows(), 1.0);
    let trajectory = match simulate_closed_loop(&m, &e0, t_final, step, net.state_dim(), net.num_nodes())
    {
        Ok(t) => t,
        Err(e) => return core_error(e),
    };

    println!("spectral abscissa: {abscissa:.6e}");
    println!(
        "final norm ratio |e(T)|/|e(0)|: {:.6e} over T = {:.6} with dt = {:.6e}",
        trajectory.final_ratio(),
        trajectory.times.last().unwrap_or(&0.0),
        step
    );
    if let Some(step_idx) = trajectory.diverged_at {
        println!("divergence: error norm overflowed at step {step_idx}");
    }
    if let Some(out_path) = out {
        let auto = trajectory.times.len().div_ceil(2000);
        let thinned = trajectory.decimate(stride.unwrap_or(auto));
        let mut file = match std::fs::File::create(out_path) {
            Ok(f) => f,
            Err(e) => return input_error(format!("cannot write {}: {e}", out_path.display())),
        };
        if let Err(e) = thinned.write_csv(&mut file) {
            return input_error(format!("cannot write {}: {e}", out_path.display()));
        }
        println!(
            "trajectory written to {} ({} samples)",
            out_path.display(),
            thinned.times.len()
        );
    }
    ExitCode::SUCCESS
}

const EXAMPLE_NAMES: [&str; 4] = [
    "slam2",
    "ring_h_identity",
    "ring_h_rows35",
    "ring_h_rows25",
];

fn cmd_examples(name: Option<&str>) -> ExitCode {
    let Some(name) = name else {
        for n in EXAMPLE_NAMES {
            println!("{n}");
        }
        return ExitCode::SUCCESS;
    };
    let net = match name {
        "slam2" => demo::slam_two_robot(),
        "ring_h_identity" => demo::directed_ring(demo::RingComm::Identity),
        "ring_h_rows35" => demo::directed_ring(demo::RingComm::Rows35),
        "ring_h_rows25" => demo::directed_ring(demo::RingComm::Rows25),
        other => {
            return input_error(format!(
                "unknown example {other:?}; available: {}",
                EXAMPLE_NAMES.join(", ")
            ))
        }
    };
    let desc = SystemDescription::from_network(&net);
    println!(
        "{}",
        serde_json::to_string_pretty(&desc).expect("example serialization")
    );
    ExitCode::SUCCESS
}
