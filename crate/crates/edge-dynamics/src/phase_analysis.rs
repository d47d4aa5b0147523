//! Phase classification for the cubic map: by parameter (closed-form
//! boundaries), by trajectory (empirical), periodic-orbit solving, and a
//! constructive chaos certificate in the Li–Yorke style.

use std::fmt;

use crate::cubic_map::{
    critical_points, eval_f, eval_f_prime, iterate_orbit, local_extrema_values, preimages, Orbit,
};
use crate::error::{Error, Result};

/// Parameter boundary below which every orbit in `[-a, 2]` decays
/// monotonically: `2√2 - 2 ≈ 0.8284`.
pub fn monotonic_boundary() -> f64 {
    2.0 * std::f64::consts::SQRT_2 - 2.0
}

/// Parameter at which the interior peak of the map reaches 1 and the chaos
/// certificate first exists: the root of `4c³+12c²-15c-23` in (1,2), in
/// closed form `(3√3-2)/2 ≈ 1.5980762113533`.
pub fn chaos_onset_reference() -> f64 {
    0.5 * (3.0 * 3.0_f64.sqrt() - 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Monotonic,
    Catapult,
    Periodic,
    Chaotic,
    Divergent,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Monotonic => "Monotonic",
            Phase::Catapult => "Catapult",
            Phase::Periodic => "Periodic",
            Phase::Chaotic => "Chaotic",
            Phase::Divergent => "Divergent",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Tolerances used by trajectory classification; recorded in every report.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyConfig {
    /// `|z|` below this counts as converged to the fixed point 0.
    pub eps_conv: f64,
    /// Absolute tolerance for tail cycle matching.
    pub cycle_tol: f64,
    /// Largest period searched for.
    pub max_period: usize,
    /// Trajectories shorter than this are refused as inconclusive.
    pub min_length: usize,
    /// Periodic/Chaotic split used by parameter classification. Above it the
    /// chaos certificate exists; isolated periodic windows above it make the
    /// parameter-based label advisory there.
    pub chaos_onset: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            eps_conv: 1e-10,
            cycle_tol: 1e-8,
            max_period: 64,
            min_length: 1000,
            chaos_onset: chaos_onset_reference(),
        }
    }
}

/// A period-k cycle with its stability multiplier `Π f'(z_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub period: usize,
    /// Forward orbit order: `f(points[i]) = points[(i+1) % period]`.
    pub points: Vec<f64>,
    pub multiplier: f64,
}

/// A three-step expansion certificate: `f³(x0) ≤ x0 < f(x0) < f²(x0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosWitness {
    pub x0: f64,
    /// `[x0, f(x0), f²(x0), f³(x0)]`.
    pub iterates: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseEvidence {
    None,
    Cycle(PeriodicOrbit),
    Witness(ChaosWitness),
    Divergence { step: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    pub phase: Phase,
    pub evidence: PhaseEvidence,
    pub config: ClassifyConfig,
}

impl fmt::Display for PhaseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.phase)?;
        match &self.evidence {
            PhaseEvidence::None => {}
            PhaseEvidence::Cycle(c) => {
                let pts: Vec<String> = c.points.iter().map(|p| format!("{p:.9}")).collect();
                write!(
                    f,
                    " (period {} cycle [{}], multiplier {:.6})",
                    c.period,
                    pts.join(", "),
                    c.multiplier
                )?;
            }
            PhaseEvidence::Witness(w) => {
                write!(f, " (witness x0={:.9})", w.x0)?;
            }
            PhaseEvidence::Divergence { step } => {
                write!(f, " (diverged at step {step})")?;
            }
        }
        write!(
            f,
            "; chaos_onset={:.6} eps_conv={:e} cycle_tol={:e} max_period={}",
            self.config.chaos_onset, self.config.eps_conv, self.config.cycle_tol,
            self.config.max_period
        )
    }
}

/// Closed-form phase boundaries in the parameter `a`.
///
/// Boundary membership: the monotone bound belongs to Monotonic, 1 to
/// Catapult, the chaos onset and 2 to Chaotic.
pub fn classify_by_parameter(a: f64, cfg: &ClassifyConfig) -> Result<Phase> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "phase classification needs a finite a > 0, got {a}"
        )));
    }
    Ok(if a <= monotonic_boundary() {
        Phase::Monotonic
    } else if a <= 1.0 {
        Phase::Catapult
    } else if a < cfg.chaos_onset {
        Phase::Periodic
    } else if a <= 2.0 {
        Phase::Chaotic
    } else {
        Phase::Divergent
    })
}

const MONO_SLACK: f64 = 1e-12;

/// Empirical classification of a stored orbit.
pub fn classify_trajectory(orbit: &Orbit, cfg: &ClassifyConfig) -> Result<PhaseReport> {
    if orbit.terminated_divergent {
        return Ok(PhaseReport {
            phase: Phase::Divergent,
            evidence: PhaseEvidence::Divergence {
                step: orbit.divergence_step.unwrap_or(orbit.points.len() - 1),
            },
            config: cfg.clone(),
        });
    }
    if orbit.points.len() < cfg.min_length {
        return Err(Error::Inconclusive {
            needed: cfg.min_length,
            got: orbit.points.len(),
        });
    }
    let monotone = orbit
        .points
        .windows(2)
        .all(|w| w[1].abs() <= w[0].abs() * (1.0 + MONO_SLACK));
    let final_abs = orbit.last().abs();
    if final_abs < cfg.eps_conv {
        return Ok(PhaseReport {
            phase: if monotone {
                Phase::Monotonic
            } else {
                Phase::Catapult
            },
            evidence: PhaseEvidence::None,
            config: cfg.clone(),
        });
    }
    if let Some(cycle) = detect_cycle(orbit, cfg.max_period, cfg.cycle_tol) {
        return Ok(PhaseReport {
            phase: Phase::Periodic,
            evidence: PhaseEvidence::Cycle(cycle),
            config: cfg.clone(),
        });
    }
    Ok(PhaseReport {
        phase: Phase::Chaotic,
        evidence: PhaseEvidence::None,
        config: cfg.clone(),
    })
}

/// Product of `f'` along a cycle.
pub fn orbit_multiplier(a: f64, points: &[f64]) -> f64 {
    points.iter().map(|&z| eval_f_prime(a, z)).product()
}

/// Smallest period `p ≤ max_period` such that the orbit tail repeats with
/// period `p` within `tol` over three consecutive windows. The cycle points
/// are averaged over the matched tail; their accuracy is of order `tol`.
pub fn detect_cycle(orbit: &Orbit, max_period: usize, tol: f64) -> Option<PeriodicOrbit> {
    let z = &orbit.points;
    let len = z.len();
    let window = len.min(4 * max_period);
    let t_end = len - 1;
    for p in 1..=max_period {
        if 3 * p > window {
            break;
        }
        let matches = (0..2 * p).all(|i| (z[t_end - i] - z[t_end - i - p]).abs() <= tol);
        if !matches {
            continue;
        }
        // the match above covers the last 3p points; average the three
        // copies of each cycle position, ordered forward in time from
        // t_end - p + 1
        let mut points = vec![0.0; p];
        for (j, point) in points.iter_mut().enumerate() {
            let base = t_end - p + 1 + j;
            *point = (z[base] + z[base - p] + z[base - 2 * p]) / 3.0;
        }
        let a = orbit.param.a();
        return Some(PeriodicOrbit {
            period: p,
            points: points.clone(),
            multiplier: orbit_multiplier(a, &points),
        });
    }
    None
}

const CYCLE_VERIFY_TOL: f64 = 1e-9;

/// All period-2 cycles of `f_a`, each verified to satisfy `f²(p) = p` within
/// 1e-9 while `f(p) ≠ p` (fixed points excluded).
///
/// The principal cycle solves `z² + (a-1)z + (1-a) = 0` in closed form (it
/// exists for a > 1); any further cycles are found by a sign-change scan of
/// `f²(z) - z` and polished by Newton steps on the two-step displacement.
pub fn find_period2_points(a: f64) -> Result<Vec<PeriodicOrbit>> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "period-2 search needs a finite a > 0, got {a}"
        )));
    }
    let mut candidates: Vec<f64> = Vec::new();

    let disc = (a - 1.0) * (a + 3.0);
    if disc > 0.0 {
        let s = disc.sqrt();
        candidates.push((-(a - 1.0) + s) / 2.0);
        candidates.push((-(a - 1.0) - s) / 2.0);
    }

    // scan for any remaining 2-cycles (secondary branches)
    let h = |z: f64| eval_f(a, eval_f(a, z)) - z;
    let lo = -a - 1.0;
    let hi = 3.0;
    const GRID: usize = 10_000;
    let mut prev_z = lo;
    let mut prev_h = h(lo);
    for k in 1..=GRID {
        let zk = lo + (hi - lo) * (k as f64) / (GRID as f64);
        let hk = h(zk);
        if prev_h == 0.0 {
            candidates.push(prev_z);
        } else if prev_h * hk < 0.0 {
            let (mut u, mut v, mut hu) = (prev_z, zk, prev_h);
            loop {
                let mid = 0.5 * (u + v);
                if !(u < mid && mid < v) {
                    break;
                }
                let hm = h(mid);
                if hm == 0.0 {
                    u = mid;
                    v = mid;
                    break;
                }
                if (hm > 0.0) == (hu > 0.0) {
                    u = mid;
                    hu = hm;
                } else {
                    v = mid;
                }
            }
            candidates.push(0.5 * (u + v));
        }
        prev_z = zk;
        prev_h = hk;
    }

    let mut cycles: Vec<PeriodicOrbit> = Vec::new();
    for mut z in candidates {
        // polish on the two-step displacement; the derivative of f²(z) - z
        // is the cycle multiplier minus one, bounded away from zero off the
        // bifurcation points
        for _ in 0..3 {
            let fz = eval_f(a, z);
            let g = eval_f(a, fz) - z;
            let dg = eval_f_prime(a, fz) * eval_f_prime(a, z) - 1.0;
            if dg.abs() > 1e-8 {
                z -= g / dg;
            }
        }
        let fz = eval_f(a, z);
        if (fz - z).abs() <= CYCLE_VERIFY_TOL {
            continue; // fixed point, not a 2-cycle
        }
        if (eval_f(a, fz) - z).abs() > CYCLE_VERIFY_TOL {
            continue; // spurious root from the scan
        }
        let lead = z.min(fz);
        if cycles.iter().any(|c| (c.points[0] - lead).abs() < 1e-7) {
            continue;
        }
        let first = lead;
        let second = eval_f(a, first);
        cycles.push(PeriodicOrbit {
            period: 2,
            points: vec![first, second],
            multiplier: eval_f_prime(a, first) * eval_f_prime(a, second),
        });
    }
    cycles.sort_by(|l, r| l.points[0].partial_cmp(&r.points[0]).unwrap());
    Ok(cycles)
}

/// Hunt for an attracting cycle by following the orbit of the interior
/// critical point `(1-2a)/3`, which converges to one whenever it exists.
/// Returns None when no cycle up to `cfg.max_period` is reached (chaotic
/// parameters) or the reached cycle is not attracting.
pub fn find_attracting_orbit(a: f64, cfg: &ClassifyConfig) -> Result<Option<PeriodicOrbit>> {
    if !(a > 0.0 && a <= 2.0) {
        return Err(Error::InvalidParam(format!(
            "attracting-orbit search needs 0 < a <= 2, got {a}"
        )));
    }
    let z0 = critical_points(a)[0];
    let orbit = iterate_orbit(a, z0, 20_000);
    if orbit.terminated_divergent {
        return Ok(None);
    }
    let Some(rough) = detect_cycle(&orbit, cfg.max_period, cfg.cycle_tol) else {
        return Ok(None);
    };
    // polish each point by Newton on the p-step displacement
    let p = rough.period;
    let mut z = rough.points[0];
    for _ in 0..4 {
        let mut w = z;
        let mut deriv = 1.0;
        for _ in 0..p {
            deriv *= eval_f_prime(a, w);
            w = eval_f(a, w);
        }
        let denom = deriv - 1.0;
        if denom.abs() > 1e-8 {
            z -= (w - z) / denom;
        }
    }
    let mut points = Vec::with_capacity(p);
    let mut w = z;
    for _ in 0..p {
        points.push(w);
        w = eval_f(a, w);
    }
    if (w - z).abs() > CYCLE_VERIFY_TOL {
        return Ok(None);
    }
    let multiplier = orbit_multiplier(a, &points);
    if multiplier.abs() >= 1.0 {
        return Ok(None);
    }
    Ok(Some(PeriodicOrbit {
        period: p,
        points,
        multiplier,
    }))
}

const WITNESS_MARGIN: f64 = 1e-9;

/// Constructive three-step expansion certificate for a > the onset: picks
/// `y0 ∈ ((1-2a)/3, 0)` with `f(y0) = 1` and `x0 ∈ (-a, (1-2a)/3)` with
/// `f(x0) = y0`, so that `f³(x0) ≤ x0 < f(x0) < f²(x0)`.
///
/// Returns None when the interior peak is below 1 (no certificate exists).
pub fn li_yorke_witness(a: f64) -> Result<Option<ChaosWitness>> {
    if !(a > 1.0 && a <= 2.0) {
        return Err(Error::InvalidParam(format!(
            "chaos certificate needs 1 < a <= 2, got {a}"
        )));
    }
    let (peak, _) = local_extrema_values(a);
    if peak < 1.0 {
        return Ok(None);
    }
    let crit = critical_points(a)[0];
    let y0 = *preimages(a, 1.0, crit, 0.0)
        .map_err(|_| Error::ConstructionFailed(format!("no preimage of 1 in ({crit}, 0) at a={a}")))?
        .first()
        .expect("preimages returns at least one root");
    let x0 = *preimages(a, y0, -a, crit)
        .map_err(|_| {
            Error::ConstructionFailed(format!("no preimage of {y0} in (-{a}, {crit}) at a={a}"))
        })?
        .first()
        .expect("preimages returns at least one root");
    let f1 = eval_f(a, x0);
    let f2 = eval_f(a, f1);
    let f3 = eval_f(a, f2);
    let witness = ChaosWitness {
        x0,
        iterates: [x0, f1, f2, f3],
    };
    let ok = f3 <= x0 + WITNESS_MARGIN
        && f1 - x0 > WITNESS_MARGIN
        && f2 - f1 > WITNESS_MARGIN;
    if !ok {
        return Err(Error::ConstructionFailed(format!(
            "certificate ordering failed at a={a}: iterates {:?}",
            witness.iterates
        )));
    }
    Ok(Some(witness))
}

/// Bisection estimate of the chaos onset: the root of
/// `q(c) = 4c³ + 12c² - 15c - 23` in (1, 2), resolved to 1e-10.
pub fn estimate_chaos_onset() -> f64 {
    let q = |c: f64| 4.0 * c * c * c + 12.0 * c * c - 15.0 * c - 23.0;
    let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if q(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

const LOSS_DECAY_RATIO: f64 = 1e-4;
const LOSS_MONO_GUARD: f64 = 1e-10;
const LOSS_CYCLE_REL_TOL: f64 = 1e-6;

/// Shape label for a training-loss curve, measured as excess over the
/// best-achievable floor (nonzero when labels are unrealizable).
///
/// Decay to ≤1e-4 of the peak excess counts as converged; convergence is
/// monotone-labelled only if the excess never rose while above 1e-10 of the
/// peak (below that, cross-sample rounding jitter is expected). Bounded
/// non-converging curves are split into cycling vs irregular tails.
pub fn classify_loss_curve(losses: &[f64], floor: f64, diverged: bool) -> Phase {
    if diverged {
        return Phase::Divergent;
    }
    let excess: Vec<f64> = losses.iter().map(|l| (l - floor).max(0.0)).collect();
    let peak = excess.iter().cloned().fold(0.0_f64, f64::max);
    if peak == 0.0 {
        return Phase::Monotonic;
    }
    let decayed = *excess.last().unwrap() <= LOSS_DECAY_RATIO * peak;
    let monotone = excess.windows(2).all(|w| {
        w[0] <= LOSS_MONO_GUARD * peak || w[1] <= w[0] * (1.0 + MONO_SLACK)
    });
    if decayed {
        return if monotone {
            Phase::Monotonic
        } else {
            Phase::Catapult
        };
    }
    // cycle detection on the tail
    let len = excess.len();
    let window = len.min(512);
    let tail = &excess[len - window..];
    let scale = tail.iter().cloned().fold(0.0_f64, f64::max).max(1e-300);
    let t_end = window - 1;
    for p in 1..=64 {
        if 3 * p > window {
            break;
        }
        if (0..2 * p).all(|i| (tail[t_end - i] - tail[t_end - i - p]).abs() <= LOSS_CYCLE_REL_TOL * scale)
        {
            return Phase::Periodic;
        }
    }
    Phase::Chaotic
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubic_map::eval_f;

    #[test]
    fn parameter_boundaries_fall_on_the_documented_side() {
        let cfg = ClassifyConfig::default();
        let b = monotonic_boundary();
        assert_eq!(classify_by_parameter(0.5, &cfg).unwrap(), Phase::Monotonic);
        assert_eq!(classify_by_parameter(b, &cfg).unwrap(), Phase::Monotonic);
        assert_eq!(
            classify_by_parameter(b + 1e-9, &cfg).unwrap(),
            Phase::Catapult
        );
        assert_eq!(classify_by_parameter(1.0, &cfg).unwrap(), Phase::Catapult);
        assert_eq!(
            classify_by_parameter(1.0 + 1e-9, &cfg).unwrap(),
            Phase::Periodic
        );
        assert_eq!(
            classify_by_parameter(cfg.chaos_onset - 1e-6, &cfg).unwrap(),
            Phase::Periodic
        );
        assert_eq!(
            classify_by_parameter(cfg.chaos_onset, &cfg).unwrap(),
            Phase::Chaotic
        );
        assert_eq!(classify_by_parameter(2.0, &cfg).unwrap(), Phase::Chaotic);
        assert_eq!(
            classify_by_parameter(2.0 + 1e-9, &cfg).unwrap(),
            Phase::Divergent
        );
        assert!(classify_by_parameter(0.0, &cfg).is_err());
        assert!(classify_by_parameter(-1.0, &cfg).is_err());
    }

    #[test]
    fn trajectory_monotonic_phase() {
        let cfg = ClassifyConfig::default();
        let orbit = iterate_orbit(0.5, 1.9, 2000);
        let report = classify_trajectory(&orbit, &cfg).unwrap();
        assert_eq!(report.phase, Phase::Monotonic);
    }

    #[test]
    fn trajectory_catapult_phase() {
        let cfg = ClassifyConfig::default();
        // start inside the expansion band at a = 0.9: one growth step, then decay
        let orbit = iterate_orbit(0.9, 0.5, 4000);
        let report = classify_trajectory(&orbit, &cfg).unwrap();
        assert_eq!(report.phase, Phase::Catapult);
    }

    #[test]
    fn trajectory_periodic_phase_with_cycle_evidence() {
        let cfg = ClassifyConfig::default();
        let orbit = iterate_orbit(1.2, 0.1, 3000);
        let report = classify_trajectory(&orbit, &cfg).unwrap();
        assert_eq!(report.phase, Phase::Periodic);
        match report.evidence {
            PhaseEvidence::Cycle(c) => {
                assert_eq!(c.period, 2);
                let mut pts = c.points.clone();
                pts.sort_by(|l, r| l.partial_cmp(r).unwrap());
                assert!((pts[1] - 0.358257569495584).abs() < 1e-6);
                assert!((pts[0] + 0.558257569495584).abs() < 1e-6);
                assert!((c.multiplier + 0.68).abs() < 1e-6);
            }
            other => panic!("expected cycle evidence, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_chaotic_phase() {
        let cfg = ClassifyConfig::default();
        let orbit = iterate_orbit(1.6, 0.1, 3000);
        let report = classify_trajectory(&orbit, &cfg).unwrap();
        assert_eq!(report.phase, Phase::Chaotic);
    }

    #[test]
    fn trajectory_divergent_phase() {
        let cfg = ClassifyConfig::default();
        let z0 = critical_points(2.1)[0];
        let orbit = iterate_orbit(2.1, z0, 5000);
        let report = classify_trajectory(&orbit, &cfg).unwrap();
        assert_eq!(report.phase, Phase::Divergent);
        assert!(matches!(report.evidence, PhaseEvidence::Divergence { .. }));
    }

    #[test]
    fn short_trajectory_is_inconclusive() {
        let cfg = ClassifyConfig::default();
        let orbit = iterate_orbit(1.2, 0.1, 100);
        assert!(matches!(
            classify_trajectory(&orbit, &cfg),
            Err(Error::Inconclusive { .. })
        ));
    }

    #[test]
    fn period2_principal_cycle_at_a12() {
        let cycles = find_period2_points(1.2).unwrap();
        assert_eq!(cycles.len(), 1);
        let c = &cycles[0];
        assert_eq!(c.period, 2);
        assert!((c.points[0] + 0.558257569495584).abs() < 1e-9);
        assert!((c.points[1] - 0.358257569495584).abs() < 1e-9);
        assert!((c.multiplier + 0.68).abs() < 1e-9);
        // cycle closes and is not a fixed point
        for &p in &c.points {
            assert!((eval_f(1.2, eval_f(1.2, p)) - p).abs() <= 1e-9);
            assert!((eval_f(1.2, p) - p).abs() > 1e-9);
        }
    }

    #[test]
    fn no_period2_cycles_at_or_below_one() {
        assert!(find_period2_points(0.8).unwrap().is_empty());
        assert!(find_period2_points(1.0).unwrap().is_empty());
        assert!(find_period2_points(0.3).unwrap().is_empty());
    }

    #[test]
    fn attracting_orbit_superattracting_fixed_point() {
        let cfg = ClassifyConfig::default();
        let orbit = find_attracting_orbit(0.5, &cfg).unwrap().unwrap();
        assert_eq!(orbit.period, 1);
        assert!(orbit.points[0].abs() < 1e-9);
        assert!(orbit.multiplier.abs() < 1e-6);
    }

    #[test]
    fn attracting_orbit_period2_at_a12() {
        let cfg = ClassifyConfig::default();
        let orbit = find_attracting_orbit(1.2, &cfg).unwrap().unwrap();
        assert_eq!(orbit.period, 2);
        assert!((orbit.multiplier + 0.68).abs() < 1e-9);
    }

    #[test]
    fn attracting_orbit_none_in_chaotic_regime() {
        let cfg = ClassifyConfig::default();
        assert!(find_attracting_orbit(1.9, &cfg).unwrap().is_none());
    }

    #[test]
    fn attracting_orbit_rejects_out_of_range() {
        let cfg = ClassifyConfig::default();
        assert!(find_attracting_orbit(2.1, &cfg).is_err());
        assert!(find_attracting_orbit(0.0, &cfg).is_err());
    }

    #[test]
    fn witness_exists_above_onset_with_margins() {
        for &a in &[1.6, 1.75, 2.0] {
            let w = li_yorke_witness(a).unwrap().unwrap();
            let [w0, w1, w2, w3] = w.iterates;
            assert_eq!(w0, w.x0);
            assert!(w3 <= w0 + 1e-9, "f3 {w3} vs x0 {w0} at a={a}");
            assert!(w1 - w0 > 1e-9);
            assert!(w2 - w1 > 1e-9);
            // the constructed chain hits 1 and then -a
            assert!((w2 - 1.0).abs() < 1e-10);
            assert!((w3 + a).abs() < 1e-9);
        }
    }

    #[test]
    fn witness_absent_below_onset() {
        assert!(li_yorke_witness(1.2).unwrap().is_none());
        assert!(li_yorke_witness(1.5).unwrap().is_none());
    }

    #[test]
    fn witness_rejects_out_of_range() {
        assert!(li_yorke_witness(1.0).is_err());
        assert!(li_yorke_witness(2.5).is_err());
    }

    #[test]
    fn onset_estimate_matches_closed_form() {
        let c = estimate_chaos_onset();
        assert!((c - chaos_onset_reference()).abs() <= 1e-10);
        let q = 4.0 * c * c * c + 12.0 * c * c - 15.0 * c - 23.0;
        assert!(q.abs() < 1e-8, "polynomial residual {q}");
        // the closed form is exact: (c+1)(4c²+8c-23) has the same root
        let c2 = chaos_onset_reference();
        assert!((4.0 * c2 * c2 + 8.0 * c2 - 23.0).abs() < 1e-13);
    }

    #[test]
    fn loss_shapes() {
        let mono: Vec<f64> = (0..1200).map(|t| 0.5_f64.powi(t.min(900)) + 1e-30).collect();
        assert_eq!(classify_loss_curve(&mono, 0.0, false), Phase::Monotonic);

        let mut catapult = vec![1.0, 0.6, 1.4, 0.9, 0.3];
        catapult.extend((0..1200).map(|t| 0.3 * 0.5_f64.powi(t.min(900))));
        assert_eq!(classify_loss_curve(&catapult, 0.0, false), Phase::Catapult);

        let periodic: Vec<f64> = (0..1200).map(|t| if t % 2 == 0 { 1.0 } else { 2.0 }).collect();
        assert_eq!(classify_loss_curve(&periodic, 0.0, false), Phase::Periodic);

        // losses from an actual chaotic-parameter orbit
        let orbit = iterate_orbit(1.9, 0.1, 1200);
        let chaotic: Vec<f64> = orbit.points.iter().map(|z| z * z).collect();
        assert_eq!(classify_loss_curve(&chaotic, 0.0, false), Phase::Chaotic);

        assert_eq!(classify_loss_curve(&mono, 0.0, true), Phase::Divergent);
    }
}
