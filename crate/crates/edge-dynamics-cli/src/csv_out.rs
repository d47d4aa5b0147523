//! CSV writers for every artifact the binary produces, plus a reader for
//! orbit files so they can be re-classified later. All numeric fields go
//! through `{}` formatting (shortest round-trippable representation) and
//! nothing time- or host-dependent is ever written, so identical runs
//! produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use edge_dynamics::cubic_map::{MapParam, Orbit};
use edge_dynamics::diagnostics::{BifurcationCell, LyapunovCell, SweepGrid};
use edge_dynamics::quad_models::TrainTrace;
use edge_dynamics::{Error, Result};

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn preamble(kind: &str, params: &[(&str, String)]) -> String {
    let mut s = format!("# edge-dynamics {kind} v{VERSION}\n");
    for (k, v) in params {
        let _ = writeln!(s, "# {k}={v}");
    }
    s
}

/// `step,z,abs_z` rows with the map parameter and divergence outcome in the
/// preamble and the trajectory's phase label as a trailing comment.
pub fn write_orbit_csv(path: &Path, orbit: &Orbit, phase_label: &str) -> Result<()> {
    let diverged = match orbit.divergence_step {
        Some(step) => step.to_string(),
        None => String::new(),
    };
    let mut s = preamble(
        "orbit",
        &[
            ("a", orbit.param.a().to_string()),
            ("z0", orbit.z0.to_string()),
            ("steps", (orbit.points.len() - 1).to_string()),
            ("diverged", diverged),
        ],
    );
    s.push_str("step,z,abs_z\n");
    for (t, z) in orbit.points.iter().enumerate() {
        let _ = writeln!(s, "{t},{z},{}", z.abs());
    }
    let _ = writeln!(s, "# phase={phase_label}");
    fs::write(path, s)?;
    Ok(())
}

/// Rebuild an [`Orbit`] from a file written by [`write_orbit_csv`].
pub fn read_orbit_csv(path: &Path) -> Result<Orbit> {
    let text = fs::read_to_string(path)?;
    let mut a = None;
    let mut z0 = None;
    let mut diverged: Option<usize> = None;
    let mut points = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let err = |col: usize, msg: String| Error::Parse {
            line: lineno + 1,
            col,
            msg,
        };
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                match k.trim() {
                    "a" => a = Some(parse_field(v, lineno + 1, 1)?),
                    "z0" => z0 = Some(parse_field(v, lineno + 1, 1)?),
                    "diverged" if !v.trim().is_empty() => {
                        diverged = Some(v.trim().parse().map_err(|e| {
                            err(1, format!("bad divergence step {v:?}: {e}"))
                        })?)
                    }
                    _ => {}
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if line != "step,z,abs_z" {
                return Err(err(1, format!("expected orbit header, got {line:?}")));
            }
            saw_header = true;
            continue;
        }
        let mut fields = line.split(',');
        let step: usize = fields
            .next()
            .ok_or_else(|| err(1, "missing step field".into()))?
            .parse()
            .map_err(|e| err(1, format!("bad step: {e}")))?;
        if step != points.len() {
            return Err(err(1, format!("step {step} out of order")));
        }
        let z = parse_field(
            fields.next().ok_or_else(|| err(2, "missing z field".into()))?,
            lineno + 1,
            2,
        )?;
        points.push(z);
    }
    let a = a.ok_or_else(|| Error::Parse {
        line: 1,
        col: 1,
        msg: "orbit file lacks an `# a=` line".into(),
    })?;
    if points.is_empty() {
        return Err(Error::Parse {
            line: 1,
            col: 1,
            msg: "orbit file holds no points".into(),
        });
    }
    Ok(Orbit {
        param: MapParam::new(a)?,
        z0: z0.unwrap_or(points[0]),
        terminated_divergent: diverged.is_some(),
        divergence_step: diverged,
        points,
    })
}

fn parse_field(raw: &str, line: usize, col: usize) -> Result<f64> {
    raw.trim().parse().map_err(|e| Error::Parse {
        line,
        col,
        msg: format!("bad float {raw:?}: {e}"),
    })
}

/// Long-form scatter data: one `a,z` row per retained attractor sample.
pub fn write_bifurcation_csv(path: &Path, grid: &SweepGrid, cells: &[BifurcationCell]) -> Result<()> {
    let mut s = preamble("bifurcation", &grid_params(grid));
    s.push_str("a,z\n");
    for cell in cells {
        for z in &cell.points {
            let _ = writeln!(s, "{},{z}", cell.a);
        }
    }
    fs::write(path, s)?;
    Ok(())
}

/// `a,lyapunov,diverged` rows; divergent cells carry `nan,1`.
pub fn write_lyapunov_csv(path: &Path, grid: &SweepGrid, cells: &[LyapunovCell]) -> Result<()> {
    let mut s = preamble("lyapunov", &grid_params(grid));
    s.push_str("a,lyapunov,diverged\n");
    for cell in cells {
        let _ = writeln!(
            s,
            "{},{},{}",
            cell.a,
            cell.lambda,
            if cell.diverged { 1 } else { 0 }
        );
    }
    fs::write(path, s)?;
    Ok(())
}

fn grid_params(grid: &SweepGrid) -> Vec<(&'static str, String)> {
    vec![
        ("a_min", grid.a_min.to_string()),
        ("a_max", grid.a_max.to_string()),
        ("grid_steps", grid.steps.to_string()),
        ("z0", grid.z0.to_string()),
        ("burn_in", grid.burn_in.to_string()),
        ("keep", grid.keep.to_string()),
        ("seed", grid.seed.to_string()),
    ]
}

/// `step,train_loss,sharpness,test_loss_raw,test_loss_avg`. The test
/// columns are empty on steps where no prediction was recorded (or when no
/// test set was supplied).
pub fn write_trace_csv(
    path: &Path,
    params: &[(&str, String)],
    trace: &TrainTrace,
    test_raw: Option<&[f64]>,
    test_avg: Option<&[f64]>,
) -> Result<()> {
    let mut s = preamble("train", params);
    s.push_str("step,train_loss,sharpness,test_loss_raw,test_loss_avg\n");
    let mut test_at = std::collections::HashMap::new();
    if let (Some(series), Some(raw), Some(avg)) = (&trace.predictions, test_raw, test_avg) {
        for (r, &step) in series.steps.iter().enumerate() {
            test_at.insert(step, (raw[r], avg[r]));
        }
    }
    for t in 0..trace.loss.len() {
        let (raw_s, avg_s) = match test_at.get(&t) {
            Some((r, a)) => (r.to_string(), a.to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(s, "{t},{},{},{raw_s},{avg_s}", trace.loss[t], trace.sharpness[t]);
    }
    fs::write(path, s)?;
    Ok(())
}

/// Long-form per-sample coordinates: `step,i,z`.
pub fn write_z_csv(path: &Path, params: &[(&str, String)], trace: &TrainTrace) -> Result<()> {
    let mut s = preamble("per-sample-z", params);
    s.push_str("step,i,z\n");
    for t in 0..trace.z.nrows() {
        for i in 0..trace.z.ncols() {
            let _ = writeln!(s, "{t},{i},{}", trace.z[(t, i)]);
        }
    }
    fs::write(path, s)?;
    Ok(())
}
