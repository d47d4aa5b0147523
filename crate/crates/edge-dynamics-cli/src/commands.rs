//! Argument definitions and the implementation of each subcommand. The run
//! functions are plain library calls so the manifest runner and the
//! integration tests can reuse them without spawning processes.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::{Array1, Array2};
use serde::Deserialize;

use edge_dynamics::cubic_map::{iterate_orbit, MapParam, Orbit};
use edge_dynamics::data_gen::{derive_seed, gaussian_matrix, load_dataset, DataKind, Dataset};
use edge_dynamics::diagnostics::{bifurcation_sweep, lyapunov_sweep, SweepGrid};
use edge_dynamics::phase_analysis::{
    classify_by_parameter, classify_loss_curve, classify_trajectory, estimate_chaos_onset,
    find_attracting_orbit, li_yorke_witness, monotonic_boundary, chaos_onset_reference,
    ClassifyConfig, Phase, PhaseEvidence, PhaseReport,
};
use edge_dynamics::predictor::test_loss_series;
use edge_dynamics::quad_models::{
    derive_map_params_pr, derive_map_params_qn, eta_for_target_amax_pr, eta_for_target_amax_qn,
    loss_floor, train_pr, train_qn, PhaseRetrievalSpec, QuadNetSpec, RecordConfig, TrainTrace,
};
use edge_dynamics::{Error, Result};

use crate::manifest;
use crate::{csv_out, svg};

/// Seed stream for initial weights, distinct from the dataset streams.
const INIT_STREAM: u64 = 100;
/// Seed stream for held-out test points.
const TEST_STREAM: u64 = 7;

#[derive(Parser, Debug)]
#[command(
    name = "edge-dynamics",
    version,
    about = "Cubic-map dynamics and gradient descent at large step sizes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Iterate the map z -> z((z+a)(z-2)+1) and store the trajectory
    Orbit(OrbitArgs),
    /// Sweep the parameter axis for attractor scatter and Lyapunov data
    Bifurcation(BifurcationArgs),
    /// Train a quadratic model by gradient descent and record its map
    /// coordinates
    Train(TrainArgs),
    /// Classify a parameter analytically or a stored trajectory empirically
    Phase(PhaseArgs),
    /// Execute every run listed in a TOML manifest
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct OrbitArgs {
    /// Map parameter a > 0
    #[arg(long)]
    pub a: f64,
    #[arg(long, default_value_t = 0.1)]
    pub z0: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Trajectory CSV destination
    #[arg(long)]
    pub out: PathBuf,
    /// Optional line-plot SVG
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct BifurcationArgs {
    #[arg(long, default_value_t = 0.001)]
    pub a_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub a_max: f64,
    /// Number of parameter grid cells
    #[arg(long, default_value_t = 2000)]
    pub grid_steps: usize,
    #[arg(long, default_value_t = 0.1)]
    pub z0: f64,
    #[arg(long, default_value_t = 2000)]
    pub burn_in: usize,
    /// Attractor samples retained per cell
    #[arg(long, default_value_t = 200)]
    pub keep: usize,
    /// Seed for the per-cell z0 jitter
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scatter CSV destination
    #[arg(long)]
    pub out: PathBuf,
    /// Optional scatter SVG
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Optional Lyapunov-exponent CSV over the same grid
    #[arg(long)]
    pub lyapunov_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Quadnet,
    Pr,
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Quadnet)]
    pub model: ModelKind,
    /// Input dimension (ignored when --data is a file)
    #[arg(long, default_value_t = 100)]
    pub d: usize,
    /// Network width; also the teacher width for synthesized labels
    #[arg(long, default_value_t = 25)]
    pub m: usize,
    /// Training-set size (ignored when --data is a file)
    #[arg(long, default_value_t = 80)]
    pub n: usize,
    /// "orthogonal", "gaussian", or a dataset CSV path
    #[arg(long, default_value = "orthogonal")]
    pub data: String,
    /// Label-noise variance for synthesized data
    #[arg(long, default_value_t = 0.0)]
    pub noise_var: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Choose the step size so that max_i a_i hits this value
    #[arg(long, conflicts_with = "eta")]
    pub target_amax: Option<f64>,
    /// Explicit step size (overrides --target-amax)
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    /// Phase retrieval curvature (pr only)
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
    /// Phase retrieval linear offset (pr only)
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    /// Held-out Gaussian test points (0 disables prediction recording)
    #[arg(long, default_value_t = 0)]
    pub test_n: usize,
    /// Keep every k-th prediction row
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Trace CSV destination
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-sample z CSV destination
    #[arg(long)]
    pub z_out: Option<PathBuf>,
}

impl Default for TrainArgs {
    fn default() -> Self {
        TrainArgs {
            model: ModelKind::Quadnet,
            d: 100,
            m: 25,
            n: 80,
            data: "orthogonal".into(),
            noise_var: 0.0,
            seed: 0,
            target_amax: None,
            eta: None,
            steps: 2000,
            gamma: 2.0,
            c: 0.0,
            test_n: 0,
            stride: 1,
            out: None,
            z_out: None,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct PhaseArgs {
    /// Classify this parameter analytically
    #[arg(long)]
    pub a: Option<f64>,
    /// Classify a trajectory stored by the orbit command
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// TOML manifest listing the runs
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory receiving every output file
    #[arg(long, default_value = "runs")]
    pub out_dir: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Orbit(args) => run_orbit(&args),
        Command::Bifurcation(args) => run_bifurcation(&args),
        Command::Train(args) => {
            let outcome = run_train(&args)?;
            print!("{}", train_summary(&args, &outcome));
            Ok(())
        }
        Command::Phase(args) => run_phase(&args),
        Command::Sweep(args) => manifest::run_manifest(&args.manifest, &args.out_dir),
    }
}

fn run_orbit(args: &OrbitArgs) -> Result<()> {
    MapParam::new(args.a)?;
    let orbit = iterate_orbit(args.a, args.z0, args.steps);
    let cfg = ClassifyConfig::default();
    let label = match classify_trajectory(&orbit, &cfg) {
        Ok(report) => report.phase.name().to_string(),
        Err(Error::Inconclusive { .. }) => "inconclusive".to_string(),
        Err(e) => return Err(e),
    };
    csv_out::write_orbit_csv(&args.out, &orbit, &label)?;
    if let Some(svg_path) = &args.svg {
        let pts: Vec<(f64, f64)> = orbit
            .points
            .iter()
            .enumerate()
            .map(|(t, &z)| (t as f64, z))
            .collect();
        svg::write_line_svg(svg_path, &pts, "step", "z", false)?;
    }
    println!(
        "a={} z0={} steps={} phase={label}{}",
        args.a,
        args.z0,
        orbit.points.len() - 1,
        match orbit.divergence_step {
            Some(s) => format!(" diverged_at={s}"),
            None => String::new(),
        }
    );
    Ok(())
}

fn run_bifurcation(args: &BifurcationArgs) -> Result<()> {
    let divergent = run_bifurcation_quiet(args)?;
    println!(
        "cells={} kept_per_cell<={} divergent_cells={divergent}",
        args.grid_steps, args.keep
    );
    Ok(())
}

/// Sweep and write files without narrating; returns the divergent-cell
/// count for the caller's own reporting.
pub fn run_bifurcation_quiet(args: &BifurcationArgs) -> Result<usize> {
    let grid = SweepGrid {
        a_min: args.a_min,
        a_max: args.a_max,
        steps: args.grid_steps,
        z0: args.z0,
        burn_in: args.burn_in,
        keep: args.keep,
        seed: args.seed,
    };
    let cells = bifurcation_sweep(&grid)?;
    csv_out::write_bifurcation_csv(&args.out, &grid, &cells)?;
    if let Some(svg_path) = &args.svg {
        let pts: Vec<(f64, f64)> = cells
            .iter()
            .flat_map(|c| c.points.iter().map(move |&z| (c.a, z)))
            .collect();
        svg::write_scatter_svg(svg_path, &pts, "a", "z", 50_000)?;
    }
    if let Some(lyap_path) = &args.lyapunov_out {
        let lcells = lyapunov_sweep(&grid)?;
        csv_out::write_lyapunov_csv(lyap_path, &grid, &lcells)?;
    }
    Ok(cells.iter().filter(|c| c.diverged).count())
}

/// Everything a finished training run exposes to callers.
pub struct TrainOutcome {
    pub eta: f64,
    pub a_max: f64,
    /// Unreachable-loss offset; None when the design is not orthogonal.
    pub loss_floor: Option<f64>,
    /// Loss-curve phase label; None when the design is not orthogonal.
    pub shape: Option<Phase>,
    pub trace: TrainTrace,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        *self.trace.loss.last().expect("trace holds step 0")
    }
}

fn resolve_dataset(args: &TrainArgs) -> Result<Dataset> {
    match args.data.as_str() {
        "orthogonal" => Dataset::synthesize(
            DataKind::OrthonormalRows,
            args.n,
            args.d,
            args.m,
            args.noise_var,
            args.seed,
        ),
        "gaussian" => Dataset::synthesize(
            DataKind::Gaussian,
            args.n,
            args.d,
            args.m,
            args.noise_var,
            args.seed,
        ),
        path => {
            let p = Path::new(path);
            load_dataset(p).map_err(|e| match e {
                Error::Io(msg) => Error::Io(format!("{}: {msg}", p.display())),
                other => other,
            })
        }
    }
}

fn test_points(n_test: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut tx = gaussian_matrix(n_test, d, derive_seed(seed, TEST_STREAM));
    for mut row in tx.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
    tx
}

pub fn run_train(args: &TrainArgs) -> Result<TrainOutcome> {
    let ds = resolve_dataset(args)?;
    let d = ds.d();
    let record = if args.test_n == 0 {
        RecordConfig::none()
    } else {
        RecordConfig {
            test_x: Some(test_points(args.test_n, d, args.seed)),
            stride: args.stride.max(1),
        }
    };
    let orthogonal = edge_dynamics::data_gen::max_offdiag_dot(&ds.x) <= 1e-10;
    let (trace, eta) = match args.model {
        ModelKind::Quadnet => {
            let spec = QuadNetSpec::new(ds.x.clone(), ds.y.clone(), args.m)?;
            let eta = match args.eta {
                Some(e) => e,
                None => eta_for_target_amax_qn(&spec, args.target_amax.unwrap_or(0.9))?,
            };
            let u0 = gaussian_matrix(d, args.m, derive_seed(args.seed, INIT_STREAM));
            (train_qn(&spec, eta, args.steps, &u0, &record)?, eta)
        }
        ModelKind::Pr => {
            let spec = PhaseRetrievalSpec::with_scalar_offset(
                args.gamma,
                args.c,
                ds.x.clone(),
                ds.y.clone(),
            )?;
            let eta = match args.eta {
                Some(e) => e,
                None => eta_for_target_amax_pr(&spec, args.target_amax.unwrap_or(0.9))?,
            };
            let w0 = Array1::from_iter(
                gaussian_matrix(d, 1, derive_seed(args.seed, INIT_STREAM))
                    .iter()
                    .map(|v| 0.1 * v),
            );
            (train_pr(&spec, eta, args.steps, &w0, &record)?, eta)
        }
    };
    let a_max = trace.a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (floor, shape) = if orthogonal {
        // a and kappa already live on the trace; rebuild the coordinate
        // struct only to price the unrealizable labels
        let coords = match args.model {
            ModelKind::Quadnet => {
                let spec = QuadNetSpec::new(ds.x.clone(), ds.y.clone(), args.m)?;
                let u0 = gaussian_matrix(d, args.m, derive_seed(args.seed, INIT_STREAM));
                derive_map_params_qn(&spec, eta, &u0)?
            }
            ModelKind::Pr => {
                let spec = PhaseRetrievalSpec::with_scalar_offset(
                    args.gamma,
                    args.c,
                    ds.x.clone(),
                    ds.y.clone(),
                )?;
                let w0 = Array1::zeros(d);
                derive_map_params_pr(&spec, eta, &w0)?
            }
        };
        let floor = loss_floor(&coords);
        let shape = classify_loss_curve(&trace.loss, floor, trace.diverged_at.is_some());
        (Some(floor), Some(shape))
    } else {
        (None, None)
    };
    let outcome = TrainOutcome {
        eta,
        a_max,
        loss_floor: floor,
        shape,
        trace,
    };
    write_train_outputs(args, &ds, &outcome)?;
    Ok(outcome)
}

fn write_train_outputs(args: &TrainArgs, ds: &Dataset, outcome: &TrainOutcome) -> Result<()> {
    if args.out.is_none() && args.z_out.is_none() {
        return Ok(());
    }
    let params = train_params(args, ds, outcome);
    let pairs: Vec<(&str, String)> = params.iter().map(|(k, v)| (*k, v.clone())).collect();
    if let Some(out) = &args.out {
        let (raw, avg) = match (&outcome.trace.predictions, &ds.ground_truth) {
            (Some(series), Some(u_star)) => {
                let tx = test_points(args.test_n, ds.d(), args.seed);
                let y_test = edge_dynamics::data_gen::generate_labels(&tx, u_star, 0.0, 0)?;
                (
                    Some(test_loss_series(series, &y_test, false)?),
                    Some(test_loss_series(series, &y_test, true)?),
                )
            }
            _ => (None, None),
        };
        csv_out::write_trace_csv(out, &pairs, &outcome.trace, raw.as_deref(), avg.as_deref())?;
    }
    if let Some(z_out) = &args.z_out {
        csv_out::write_z_csv(z_out, &pairs, &outcome.trace)?;
    }
    Ok(())
}

fn train_params(args: &TrainArgs, ds: &Dataset, outcome: &TrainOutcome) -> Vec<(&'static str, String)> {
    let mut p = vec![
        (
            "model",
            match args.model {
                ModelKind::Quadnet => "quadnet".to_string(),
                ModelKind::Pr => "pr".to_string(),
            },
        ),
        ("d", ds.d().to_string()),
        ("m", args.m.to_string()),
        ("n", ds.n().to_string()),
        ("data", args.data.clone()),
        ("noise_var", args.noise_var.to_string()),
        ("seed", args.seed.to_string()),
        ("eta", outcome.eta.to_string()),
        ("steps", args.steps.to_string()),
        ("a_max", outcome.a_max.to_string()),
    ];
    if let Some(t) = args.target_amax {
        p.push(("target_amax", t.to_string()));
    }
    if args.model == ModelKind::Pr {
        p.push(("gamma", args.gamma.to_string()));
        p.push(("c", args.c.to_string()));
    }
    if args.test_n > 0 {
        p.push(("test_n", args.test_n.to_string()));
        p.push(("stride", args.stride.max(1).to_string()));
    }
    if let Some(f) = outcome.loss_floor {
        p.push(("loss_floor", f.to_string()));
    }
    p.push((
        "diverged",
        match outcome.trace.diverged_at {
            Some(s) => s.to_string(),
            None => String::new(),
        },
    ));
    p
}

pub fn train_summary(args: &TrainArgs, outcome: &TrainOutcome) -> String {
    let model = match args.model {
        ModelKind::Quadnet => "quadnet",
        ModelKind::Pr => "pr",
    };
    let mut s = format!(
        "model={model} data={} n={} d={} m={} seed={}\n",
        args.data, args.n, args.d, args.m, args.seed
    );
    s.push_str(&format!(
        "eta={} a_max={} final_loss={}\n",
        outcome.eta,
        outcome.a_max,
        outcome.final_loss()
    ));
    if let (Some(floor), Some(shape)) = (outcome.loss_floor, outcome.shape) {
        s.push_str(&format!("loss_floor={floor} shape={shape}\n"));
    } else {
        s.push_str("shape=n/a (non-orthogonal design carries no map claims)\n");
    }
    if let Some(step) = outcome.trace.diverged_at {
        s.push_str(&format!("diverged_at={step}\n"));
    }
    s
}

fn run_phase(args: &PhaseArgs) -> Result<()> {
    match (&args.a, &args.trajectory) {
        (Some(_), Some(_)) | (None, None) => Err(Error::InvalidParam(
            "pass exactly one of --a or --trajectory".into(),
        )),
        (Some(a), None) => {
            let a = *a;
            let cfg = ClassifyConfig::default();
            let phase = classify_by_parameter(a, &cfg)?;
            let evidence = match phase {
                Phase::Periodic => match find_attracting_orbit(a, &cfg)? {
                    Some(orbit) => PhaseEvidence::Cycle(orbit),
                    None => PhaseEvidence::None,
                },
                Phase::Chaotic => match li_yorke_witness(a)? {
                    Some(w) => PhaseEvidence::Witness(w),
                    None => PhaseEvidence::None,
                },
                _ => PhaseEvidence::None,
            };
            let report = PhaseReport {
                phase,
                evidence,
                config: cfg,
            };
            println!("{report}");
            println!("monotone_boundary={}", monotonic_boundary());
            println!(
                "chaos_onset_reference={} chaos_onset_estimate={}",
                chaos_onset_reference(),
                estimate_chaos_onset()
            );
            Ok(())
        }
        (None, Some(path)) => {
            let orbit: Orbit = csv_out::read_orbit_csv(path)?;
            let report = classify_trajectory(&orbit, &ClassifyConfig::default())?;
            println!("{report}");
            Ok(())
        }
    }
}
