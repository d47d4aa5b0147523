//! Parameter sweeps and quantitative diagnostics for the cubic map:
//! Lyapunov exponents, bifurcation scatter data, and the interval partition
//! that explains one-step catapults.

use rayon::prelude::*;

use crate::cubic_map::{eval_f, eval_f_prime, iterate_orbit, DIVERGE_THRESHOLD};
use crate::data_gen::{derive_seed, PortableRng};
use crate::error::{Error, Result};
use crate::phase_analysis::monotonic_boundary;

/// `|f'|` below this is treated as a superattracting hit and the exponent
/// reported as -inf.
const DERIV_UNDERFLOW: f64 = 1e-300;

/// A uniform, inclusive grid of map parameters plus orbit settings.
///
/// `seed` drives a per-cell jitter of `z0` by ±1e-9: it breaks ties for
/// measure-zero starts that land exactly on an unstable periodic point,
/// while keeping every sweep bit-reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub a_min: f64,
    pub a_max: f64,
    pub steps: usize,
    pub z0: f64,
    pub burn_in: usize,
    pub keep: usize,
    pub seed: u64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            a_min: 0.001,
            a_max: 2.0,
            steps: 2000,
            z0: 0.1,
            burn_in: 2000,
            keep: 200,
            seed: 0,
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_min.is_finite() && self.a_max.is_finite()) || self.a_min <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "sweep needs finite parameters with a_min > 0, got [{}, {}]",
                self.a_min, self.a_max
            )));
        }
        if self.a_max < self.a_min {
            return Err(Error::InvalidParam(format!(
                "sweep needs a_max >= a_min, got [{}, {}]",
                self.a_min, self.a_max
            )));
        }
        if self.steps == 0 || self.keep == 0 {
            return Err(Error::InvalidParam(
                "sweep needs steps >= 1 and keep >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Grid values, inclusive of both endpoints.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.a_min];
        }
        (0..self.steps)
            .map(|i| {
                self.a_min + (self.a_max - self.a_min) * (i as f64) / ((self.steps - 1) as f64)
            })
            .collect()
    }

    fn jittered_z0(&self, cell: usize) -> f64 {
        let mut rng = PortableRng::new(derive_seed(self.seed, cell as u64));
        self.z0 + (rng.uniform() - 0.5) * 2e-9
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationCell {
    pub a: f64,
    /// Post-burn-in iterates; empty when the orbit diverged.
    pub points: Vec<f64>,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCell {
    pub a: f64,
    /// Mean of `ln|f'|` along the orbit; -inf marks a superattracting hit,
    /// NaN a divergent cell (see `diverged`).
    pub lambda: f64,
    pub diverged: bool,
}

/// Lyapunov exponent along the orbit of `z0`: `burn_in` discarded steps,
/// then the mean of `ln|f'(z_t)|` over the next `n` points.
///
/// Returns -inf as soon as the orbit touches a point with `|f'| < 1e-300`
/// (superattracting convergence), and `Diverged` if `|z|` leaves the
/// bounded region during either stage.
pub fn lyapunov_exponent(a: f64, z0: f64, burn_in: usize, n: usize) -> Result<f64> {
    if !a.is_finite() || a <= 0.0 || n == 0 {
        return Err(Error::InvalidParam(format!(
            "Lyapunov estimate needs finite a > 0 and n >= 1, got a={a}, n={n}"
        )));
    }
    let mut z = z0;
    for step in 0..burn_in {
        z = eval_f(a, z);
        if z.abs() > DIVERGE_THRESHOLD || !z.is_finite() {
            return Err(Error::Diverged { step: step + 1 });
        }
    }
    let mut acc = 0.0;
    for step in 0..n {
        let d = eval_f_prime(a, z).abs();
        if d < DERIV_UNDERFLOW {
            return Ok(f64::NEG_INFINITY);
        }
        acc += d.ln();
        z = eval_f(a, z);
        if z.abs() > DIVERGE_THRESHOLD || !z.is_finite() {
            return Err(Error::Diverged {
                step: burn_in + step + 1,
            });
        }
    }
    Ok(acc / n as f64)
}

/// Orbit tails over the parameter grid, for bifurcation scatter plots.
/// Cells run in parallel; output order matches the grid.
pub fn bifurcation_sweep(grid: &SweepGrid) -> Result<Vec<BifurcationCell>> {
    grid.validate()?;
    let values = grid.values();
    Ok(values
        .par_iter()
        .enumerate()
        .map(|(i, &a)| {
            let orbit = iterate_orbit(a, grid.jittered_z0(i), grid.burn_in + grid.keep);
            if orbit.terminated_divergent {
                BifurcationCell {
                    a,
                    points: Vec::new(),
                    diverged: true,
                }
            } else {
                BifurcationCell {
                    a,
                    points: orbit.points[grid.burn_in + 1..].to_vec(),
                    diverged: false,
                }
            }
        })
        .collect())
}

/// Lyapunov exponents over the parameter grid. Divergent cells carry
/// `lambda = NaN` and the flag; superattracting cells carry -inf.
pub fn lyapunov_sweep(grid: &SweepGrid) -> Result<Vec<LyapunovCell>> {
    grid.validate()?;
    let values = grid.values();
    Ok(values
        .par_iter()
        .enumerate()
        .map(|(i, &a)| {
            match lyapunov_exponent(a, grid.jittered_z0(i), grid.burn_in, grid.keep.max(1000)) {
                Ok(lambda) => LyapunovCell {
                    a,
                    lambda,
                    diverged: false,
                },
                Err(_) => LyapunovCell {
                    a,
                    lambda: f64::NAN,
                    diverged: true,
                },
            }
        })
        .collect())
}

/// The five-interval partition of `[-a, 2]` that drives the catapult
/// mechanism on `2√2-2 < a <= 1`: cuts at the roots `b∓ = (2-a ∓ √(a²+4a))/2`
/// of `g`, at 0, and at 1/4.
///
/// `I2 = [b-, 0]` and `I3 = [0, 1/4]` exchange under the map with two-step
/// contraction; `I4 = [1/4, b+]` hosts the single catapult step back into
/// `I1 ∪ I2`; `I5 = [b+, 2]` drains toward the origin from the right.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPartition {
    pub a: f64,
    /// Ascending: `[-a, b-, 0, 1/4, b+, 2]`.
    pub cuts: [f64; 6],
}

impl IntervalPartition {
    /// The five intervals as (lo, hi) pairs, I1 through I5.
    pub fn intervals(&self) -> [(f64, f64); 5] {
        [
            (self.cuts[0], self.cuts[1]),
            (self.cuts[1], self.cuts[2]),
            (self.cuts[2], self.cuts[3]),
            (self.cuts[3], self.cuts[4]),
            (self.cuts[4], self.cuts[5]),
        ]
    }
}

/// Build the catapult partition; defined on `2√2-2 < a <= 1` only.
pub fn catapult_partition(a: f64) -> Result<IntervalPartition> {
    if !(a > monotonic_boundary() && a <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "catapult partition is defined for {} < a <= 1, got {a}",
            monotonic_boundary()
        )));
    }
    let s = (a * a + 4.0 * a).sqrt();
    let b_minus = (2.0 - a - s) / 2.0;
    let b_plus = (2.0 - a + s) / 2.0;
    Ok(IntervalPartition {
        a,
        cuts: [-a, b_minus, 0.0, 0.25, b_plus, 2.0],
    })
}

/// The open band of positive `z` where `|g_a(z)| > 1`, i.e. where one map
/// step grows `|z|`. Exists exactly for `a > 2√2-2`; its closure stays
/// strictly above 0 while `a < 1`, which is why small-`a` catapult orbits
/// can converge without ever expanding.
pub fn growth_band(a: f64) -> Option<(f64, f64)> {
    let disc = a * a + 4.0 * a - 4.0;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some(((2.0 - a - s) / 2.0, (2.0 - a + s) / 2.0))
}

const PARTITION_SAMPLES: usize = 10_000;
const PARTITION_SLACK: f64 = 1e-12;

/// Dense-sampling verification of the partition's mapping chain:
/// `f(I1) ⊆ [-a, 0]`, `f(I2) ⊆ I3`, `f(I3) ⊆ I2`, `f(I4) ⊆ [-a, 0]`,
/// `f(I5) ⊆ [0, 2]`, plus the two-step contraction `|f²(z)| ≤ |z|` on
/// `I2 ∪ I3`.
pub fn verify_partition(part: &IntervalPartition) -> Result<()> {
    let a = part.a;
    let [i1, i2, i3, i4, i5] = part.intervals();
    for w in part.cuts.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::ConstructionFailed(format!(
                "partition cuts out of order at a={a}: {:?}",
                part.cuts
            )));
        }
    }
    let check_range = |(lo, hi): (f64, f64), flo: f64, fhi: f64, name: &str| -> Result<()> {
        for k in 0..=PARTITION_SAMPLES {
            let z = lo + (hi - lo) * (k as f64) / (PARTITION_SAMPLES as f64);
            let fz = eval_f(a, z);
            if fz < flo - PARTITION_SLACK || fz > fhi + PARTITION_SLACK {
                return Err(Error::ConstructionFailed(format!(
                    "{name} violated at a={a}: f({z}) = {fz} outside [{flo}, {fhi}]"
                )));
            }
        }
        Ok(())
    };
    check_range(i1, -a, 0.0, "f(I1) in [-a, 0]")?;
    check_range(i2, i3.0, i3.1, "f(I2) in I3")?;
    check_range(i3, i2.0, i2.1, "f(I3) in I2")?;
    check_range(i4, -a, 0.0, "f(I4) in [-a, 0]")?;
    check_range(i5, 0.0, 2.0, "f(I5) in [0, 2]")?;
    for k in 0..=PARTITION_SAMPLES {
        let z = i2.0 + (i3.1 - i2.0) * (k as f64) / (PARTITION_SAMPLES as f64);
        let f2z = eval_f(a, eval_f(a, z));
        if f2z.abs() > z.abs() * (1.0 + PARTITION_SLACK) + PARTITION_SLACK {
            return Err(Error::ConstructionFailed(format!(
                "two-step contraction violated at a={a}: |f²({z})| = {} > |z|",
                f2z.abs()
            )));
        }
    }
    Ok(())
}
