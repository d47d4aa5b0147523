//! TOML manifest runner: a manifest is a list of `[[run]]` tables, each one
//! a train or bifurcation job. Entries run sequentially and the first
//! failure aborts the sweep (everything finished so far stays on disk).

use std::fs;
use std::path::Path;

use serde::Deserialize;

use edge_dynamics::{Error, Result};

use crate::commands::{self, BifurcationArgs, ModelKind, TrainArgs};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub run: Vec<RunEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    Train,
    Bifurcation,
}

/// One `[[run]]` table. Unset fields fall back to the same defaults the
/// corresponding subcommand uses.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunEntry {
    pub name: String,
    pub kind: RunKind,
    // train fields
    pub model: Option<ModelKind>,
    pub d: Option<usize>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub data: Option<String>,
    pub noise_var: Option<f64>,
    pub seed: Option<u64>,
    pub target_amax: Option<f64>,
    pub eta: Option<f64>,
    pub steps: Option<usize>,
    pub gamma: Option<f64>,
    pub c: Option<f64>,
    pub test_n: Option<usize>,
    pub stride: Option<usize>,
    pub out: Option<String>,
    pub z_out: Option<String>,
    // bifurcation fields
    pub a_min: Option<f64>,
    pub a_max: Option<f64>,
    pub grid_steps: Option<usize>,
    pub z0: Option<f64>,
    pub burn_in: Option<usize>,
    pub keep: Option<usize>,
    pub svg: Option<String>,
    pub lyapunov_out: Option<String>,
}

impl RunEntry {
    /// Materialize the train arguments, rooting output files in `out_dir`.
    pub fn to_train_args(&self, out_dir: &Path) -> TrainArgs {
        let defaults = TrainArgs::default();
        let out_name = self
            .out
            .clone()
            .unwrap_or_else(|| format!("{}.csv", self.name));
        TrainArgs {
            model: self.model.unwrap_or(defaults.model),
            d: self.d.unwrap_or(defaults.d),
            m: self.m.unwrap_or(defaults.m),
            n: self.n.unwrap_or(defaults.n),
            data: self.data.clone().unwrap_or(defaults.data),
            noise_var: self.noise_var.unwrap_or(defaults.noise_var),
            seed: self.seed.unwrap_or(defaults.seed),
            target_amax: self.target_amax,
            eta: self.eta,
            steps: self.steps.unwrap_or(defaults.steps),
            gamma: self.gamma.unwrap_or(defaults.gamma),
            c: self.c.unwrap_or(defaults.c),
            test_n: self.test_n.unwrap_or(defaults.test_n),
            stride: self.stride.unwrap_or(defaults.stride),
            out: Some(out_dir.join(out_name)),
            z_out: self.z_out.as_ref().map(|z| out_dir.join(z)),
        }
    }

    fn to_bifurcation_args(&self, out_dir: &Path) -> BifurcationArgs {
        let out_name = self
            .out
            .clone()
            .unwrap_or_else(|| format!("{}.csv", self.name));
        BifurcationArgs {
            a_min: self.a_min.unwrap_or(0.001),
            a_max: self.a_max.unwrap_or(2.0),
            grid_steps: self.grid_steps.unwrap_or(2000),
            z0: self.z0.unwrap_or(0.1),
            burn_in: self.burn_in.unwrap_or(2000),
            keep: self.keep.unwrap_or(200),
            seed: self.seed.unwrap_or(0),
            out: out_dir.join(out_name),
            svg: self.svg.as_ref().map(|s| out_dir.join(s)),
            lyapunov_out: self.lyapunov_out.as_ref().map(|s| out_dir.join(s)),
        }
    }
}

/// Parse a manifest file.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        line: 0,
        col: 0,
        msg: format!("{}: {e}", path.display()),
    })
}

/// Run every entry in order, printing one summary row per finished run.
pub fn run_manifest(path: &Path, out_dir: &Path) -> Result<()> {
    let manifest = load_manifest(path)?;
    if manifest.run.is_empty() {
        println!("manifest {} lists no runs", path.display());
        return Ok(());
    }
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    println!("{:<28} {:<12} detail", "name", "kind");
    for entry in &manifest.run {
        let detail = run_entry(entry, out_dir).map_err(|e| {
            eprintln!("run {} failed: {e}", entry.name);
            e
        })?;
        let kind = match entry.kind {
            RunKind::Train => "train",
            RunKind::Bifurcation => "bifurcation",
        };
        println!("{:<28} {:<12} {detail}", entry.name, kind);
    }
    Ok(())
}

fn run_entry(entry: &RunEntry, out_dir: &Path) -> Result<String> {
    match entry.kind {
        RunKind::Train => {
            let args = entry.to_train_args(out_dir);
            let outcome = commands::run_train(&args)?;
            let shape = match outcome.shape {
                Some(s) => s.name().to_string(),
                None => "n/a".to_string(),
            };
            Ok(format!(
                "a_max={:.4} final_loss={:.6e} shape={shape}{}",
                outcome.a_max,
                outcome.final_loss(),
                match outcome.trace.diverged_at {
                    Some(s) => format!(" diverged_at={s}"),
                    None => String::new(),
                }
            ))
        }
        RunKind::Bifurcation => {
            let args = entry.to_bifurcation_args(out_dir);
            commands::run_bifurcation_quiet(&args)?;
            Ok(format!(
                "grid=[{}, {}] cells={}",
                args.a_min, args.a_max, args.grid_steps
            ))
        }
    }
}
