//! The cubic map `f_a(z) = z·g_a(z)`, `g_a(z) = (z+a)(z-2)+1`, its
//! derivatives, distinguished points, orbits and preimages.
//!
//! Everything here is a pure function; orbits are immutable once built.

use crate::error::{Error, Result};

/// Iteration stops once `|z|` exceeds this; every bounded-phase orbit stays
/// inside `[-a, 2]` with `a <= 2`, six orders of magnitude below.
pub const DIVERGE_THRESHOLD: f64 = 1e6;

/// The map parameter. Construction rejects non-positive or non-finite values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParam {
    a: f64,
}

impl MapParam {
    pub fn new(a: f64) -> Result<Self> {
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "map parameter a must be finite and > 0, got {a}"
            )));
        }
        Ok(MapParam { a })
    }

    pub(crate) fn new_unchecked(a: f64) -> Self {
        MapParam { a }
    }

    pub fn a(self) -> f64 {
        self.a
    }
}

/// A finite iterate sequence `z_0 .. z_T` of `f_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub param: MapParam,
    pub z0: f64,
    /// `points[t+1] = eval_f(a, points[t])` exactly as computed, for all t.
    pub points: Vec<f64>,
    /// True when iteration stopped early because `|z| > DIVERGE_THRESHOLD`;
    /// the offending point is the last one stored.
    pub terminated_divergent: bool,
    pub divergence_step: Option<usize>,
}

impl Orbit {
    pub fn last(&self) -> f64 {
        *self.points.last().expect("orbit holds at least z0")
    }
}

/// `g_a(z) = (z+a)(z-2) + 1`, evaluated in factored form.
pub fn eval_g(a: f64, z: f64) -> f64 {
    (z + a) * (z - 2.0) + 1.0
}

/// `f_a(z) = z·g_a(z)`. The factored form is exact at the fixed points
/// `{-a, 0, 2}` and better conditioned near the roots of `g` than the
/// expanded cubic.
pub fn eval_f(a: f64, z: f64) -> f64 {
    z * eval_g(a, z)
}

/// `f_a'(z) = (z-1)(3z+2a-1)`; roots are the two critical points.
pub fn eval_f_prime(a: f64, z: f64) -> f64 {
    (z - 1.0) * (3.0 * z + 2.0 * a - 1.0)
}

/// `f_a''(z) = 6z + 2a - 4`.
pub fn eval_f_second(a: f64, z: f64) -> f64 {
    6.0 * z + 2.0 * a - 4.0
}

const SCHWARZIAN_DERIV_FLOOR: f64 = 1e-12;

/// Schwarzian derivative `f'''/f' - 1.5(f''/f')²` (with `f''' = 6`).
///
/// Undefined at critical points; rejects `|f'(z)| < 1e-12`.
pub fn eval_schwarzian(a: f64, z: f64) -> Result<f64> {
    let d1 = eval_f_prime(a, z);
    if d1.abs() < SCHWARZIAN_DERIV_FLOOR {
        return Err(Error::CriticalPoint { a, z });
    }
    let d2 = eval_f_second(a, z);
    Ok(6.0 / d1 - 1.5 * (d2 / d1) * (d2 / d1))
}

/// Roots of `f_a(z) - z = z(z+a)(z-2)`: always `{-a, 0, 2}`, ascending.
pub fn fixed_points(a: f64) -> [f64; 3] {
    [-a, 0.0, 2.0]
}

/// Roots of `f_a'`: the local maximum at `(1-2a)/3` and local minimum at 1.
pub fn critical_points(a: f64) -> [f64; 2] {
    [(1.0 - 2.0 * a) / 3.0, 1.0]
}

/// Values of `f_a` at the critical points: the local-max ("peak") value
/// `(4a³+12a²-15a+4)/27` and the local-min value `-a`.
pub fn local_extrema_values(a: f64) -> (f64, f64) {
    let peak = (4.0 * a * a * a + 12.0 * a * a - 15.0 * a + 4.0) / 27.0;
    (peak, -a)
}

/// Iterate `z_{t+1} = f_a(z_t)` for `steps` steps (so up to `steps + 1`
/// stored points), stopping early once `|z| > DIVERGE_THRESHOLD`.
pub fn iterate_orbit(a: f64, z0: f64, steps: usize) -> Orbit {
    let mut points = Vec::with_capacity(steps + 1);
    points.push(z0);
    let mut terminated_divergent = z0.abs() > DIVERGE_THRESHOLD || !z0.is_finite();
    let mut divergence_step = if terminated_divergent { Some(0) } else { None };
    if !terminated_divergent {
        for t in 0..steps {
            let z = eval_f(a, points[t]);
            points.push(z);
            if z.abs() > DIVERGE_THRESHOLD || !z.is_finite() {
                terminated_divergent = true;
                divergence_step = Some(t + 1);
                break;
            }
        }
    }
    Orbit {
        param: MapParam::new_unchecked(a),
        z0,
        points,
        terminated_divergent,
        divergence_step,
    }
}

/// All solutions of `f_a(z) = target` in `[lo, hi]`.
///
/// `[lo, hi]` is split at the critical points and each monotone piece is
/// bisected to floating-point convergence, so each root `r` satisfies
/// `|f_a(r) - target| <= 1e-12·max(1, |target|)`. Tangential roots (no sign
/// change) are not reported.
pub fn preimages(a: f64, target: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo < hi) {
        return Err(Error::InvalidParam(format!(
            "preimage interval needs lo < hi, got [{lo}, {hi}]"
        )));
    }
    let mut cuts = vec![lo];
    for c in critical_points(a) {
        if c > lo && c < hi {
            cuts.push(c);
        }
    }
    cuts.push(hi);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let h = |z: f64| eval_f(a, z) - target;
    let mut roots: Vec<f64> = Vec::new();
    let push_root = |r: f64, roots: &mut Vec<f64>| {
        const DEDUPE_GAP: f64 = 1e-10;
        if !roots.iter().any(|&q| (q - r).abs() <= DEDUPE_GAP) {
            roots.push(r);
        }
    };
    for w in cuts.windows(2) {
        let (mut u, mut v) = (w[0], w[1]);
        let (hu, hv) = (h(u), h(v));
        if hu == 0.0 {
            push_root(u, &mut roots);
        }
        if hv == 0.0 {
            push_root(v, &mut roots);
        }
        if hu * hv < 0.0 {
            // Bisect until the midpoint collides with an endpoint: that is
            // full double-precision resolution on a monotone piece.
            let mut hu = hu;
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
            push_root(0.5 * (u + v), &mut roots);
        }
    }
    if roots.is_empty() {
        return Err(Error::NoRoot { target, lo, hi });
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(roots)
}
