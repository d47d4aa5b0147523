//! Quadratic regression models trained by full-batch gradient descent, and
//! the change of coordinates that maps each sample's residual evolution onto
//! the cubic map: `z_i = κ_i·e_i` with per-sample parameter `a_i`.
//!
//! Two models share the machinery: generalized phase retrieval
//! `g(w; X) = γ(Xᵀw)²/2 + c·Xᵀw` and a two-layer quadratic-activation
//! network `g(U; X) = (1/(√m·d))·Σ_j (Xᵀu_j)²`.

use ndarray::{Array1, Array2, Axis};

use crate::data_gen::PortableRng;
use crate::error::{Error, Result};
use crate::predictor::PredictionSeries;

/// Off-diagonal tolerance for the row-orthogonality check.
pub const ORTHO_TOL: f64 = 1e-10;
/// Training aborts with a divergence flag once the loss exceeds this.
pub const DIVERGE_LOSS: f64 = 1e12;

fn check_rows_orthogonal(x: &Array2<f64>) -> Result<()> {
    let n = x.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let dot = x.row(i).dot(&x.row(j)).abs();
            if dot > ORTHO_TOL {
                return Err(Error::Orthogonality {
                    i,
                    j,
                    dot,
                    tol: ORTHO_TOL,
                });
            }
        }
    }
    Ok(())
}

fn row_norms_sq(x: &Array2<f64>) -> Vec<f64> {
    x.rows().into_iter().map(|r| r.dot(&r)).collect()
}

/// Generalized phase retrieval: `g(w; X_i) = γ(X_iᵀw)²/2 + c_i·X_iᵀw`.
/// `c` is per-sample; classical phase retrieval is `γ=2, c=0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRetrievalSpec {
    pub gamma: f64,
    pub c: Vec<f64>,
    pub x: Array2<f64>,
    pub y: Vec<f64>,
}

impl PhaseRetrievalSpec {
    pub fn new(gamma: f64, c: Vec<f64>, x: Array2<f64>, y: Vec<f64>) -> Result<Self> {
        if gamma == 0.0 || !gamma.is_finite() {
            return Err(Error::InvalidParam(format!(
                "gamma must be finite and nonzero, got {gamma}"
            )));
        }
        if y.len() != x.nrows() || c.len() != x.nrows() {
            return Err(Error::Dimension(format!(
                "design has {} rows but |y| = {}, |c| = {}",
                x.nrows(),
                y.len(),
                c.len()
            )));
        }
        Ok(PhaseRetrievalSpec { gamma, c, x, y })
    }

    /// Convenience constructor broadcasting one offset to every sample.
    pub fn with_scalar_offset(gamma: f64, c: f64, x: Array2<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.nrows();
        Self::new(gamma, vec![c; n], x, y)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn check_orthogonality(&self) -> Result<()> {
        check_rows_orthogonal(&self.x)
    }
}

/// Two-layer quadratic-activation network with frozen outer layer:
/// `g(U; X_j) = (1/(√m·d))·Σ_i (X_jᵀu_i)²` with `U` of shape d×m.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadNetSpec {
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub x: Array2<f64>,
    pub y: Vec<f64>,
}

impl QuadNetSpec {
    pub fn new(x: Array2<f64>, y: Vec<f64>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParam("network width m must be >= 1".into()));
        }
        if y.len() != x.nrows() {
            return Err(Error::Dimension(format!(
                "design has {} rows but |y| = {}",
                x.nrows(),
                y.len()
            )));
        }
        Ok(QuadNetSpec {
            d: x.ncols(),
            m,
            n: x.nrows(),
            x,
            y,
        })
    }

    fn scale(&self) -> f64 {
        1.0 / ((self.m as f64).sqrt() * self.d as f64)
    }

    pub fn check_orthogonality(&self) -> Result<()> {
        check_rows_orthogonal(&self.x)
    }
}

/// Per-sample map coordinates: `z_i = κ_i e_i`, parameter `a_i`, scaling
/// `κ_i`. Samples with `a_i <= 0` (possible when noise drives a label
/// negative) are listed in `nonpositive_a`; they simulate fine but carry no
/// phase claims.
#[derive(Debug, Clone, PartialEq)]
pub struct MapCoordinates {
    pub a: Vec<f64>,
    pub z: Vec<f64>,
    pub kappa: Vec<f64>,
    pub nonpositive_a: Vec<usize>,
}

/// What a trainer records beyond the loss curve.
#[derive(Debug, Clone, Default)]
pub struct RecordConfig {
    /// Held-out points to predict on every step.
    pub test_x: Option<Array2<f64>>,
    /// Keep every `stride`-th prediction row (the running mean stays exact
    /// regardless). 0 is treated as 1.
    pub stride: usize,
}

impl RecordConfig {
    pub fn none() -> Self {
        RecordConfig::default()
    }
}

/// Per-step training record. Index t covers 0..=steps unless divergence
/// truncated the run at `diverged_at`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub loss: Vec<f64>,
    pub sharpness: Vec<f64>,
    /// Row t holds the per-sample `z_i` at step t.
    pub z: Array2<f64>,
    pub a: Vec<f64>,
    pub kappa: Vec<f64>,
    pub diverged_at: Option<usize>,
    /// d×1 for phase retrieval, d×m for the network.
    pub final_weights: Array2<f64>,
    pub predictions: Option<PredictionSeries>,
}

/// `g(w; X_i)` for one sample.
pub fn pr_forward(spec: &PhaseRetrievalSpec, w: &Array1<f64>, i: usize) -> Result<f64> {
    if w.len() != spec.d() {
        return Err(Error::Dimension(format!(
            "w has length {}, expected d={}",
            w.len(),
            spec.d()
        )));
    }
    if i >= spec.n() {
        return Err(Error::Dimension(format!(
            "sample index {i} out of range for n={}",
            spec.n()
        )));
    }
    let t = spec.x.row(i).dot(w);
    Ok(spec.gamma * t * t / 2.0 + spec.c[i] * t)
}

fn pr_residuals(spec: &PhaseRetrievalSpec, w: &Array1<f64>) -> (Array1<f64>, Array1<f64>) {
    let t = spec.x.dot(w);
    let mut e = Array1::zeros(spec.n());
    let mut alpha = Array1::zeros(spec.n());
    for i in 0..spec.n() {
        let ti = t[i];
        e[i] = spec.gamma * ti * ti / 2.0 + spec.c[i] * ti - spec.y[i];
        alpha[i] = spec.c[i] + spec.gamma * ti;
    }
    (e, alpha)
}

/// One gradient-descent step `w - (η/n)·Σ e_i α_i X_i` (mean-loss
/// convention; for n=1 this is the plain single-sample update).
pub fn gd_step_pr(spec: &PhaseRetrievalSpec, w: &Array1<f64>, eta: f64) -> Result<Array1<f64>> {
    if w.len() != spec.d() {
        return Err(Error::Dimension(format!(
            "w has length {}, expected d={}",
            w.len(),
            spec.d()
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParam(format!("step size must be > 0, got {eta}")));
    }
    let (e, alpha) = pr_residuals(spec, w);
    let coef = (&e * &alpha) * (eta / spec.n() as f64);
    Ok(w - &spec.x.t().dot(&coef))
}

/// Map coordinates for phase retrieval: `κ_i = ηγ‖X_i‖²/n`,
/// `a_i = (y_i + c_i²/(2γ))·κ_i`, `z_i = κ_i·e_i`. Requires orthogonal rows
/// (the coordinates carry no meaning otherwise).
pub fn derive_map_params_pr(
    spec: &PhaseRetrievalSpec,
    eta: f64,
    w: &Array1<f64>,
) -> Result<MapCoordinates> {
    spec.check_orthogonality()?;
    let (a, kappa) = pr_theory_coords(spec, eta);
    let (e, _) = pr_residuals(spec, w);
    let z: Vec<f64> = kappa.iter().zip(e.iter()).map(|(k, ei)| k * ei).collect();
    let nonpositive_a = flag_nonpositive(&a);
    Ok(MapCoordinates {
        a,
        z,
        kappa,
        nonpositive_a,
    })
}

fn pr_theory_coords(spec: &PhaseRetrievalSpec, eta: f64) -> (Vec<f64>, Vec<f64>) {
    let n = spec.n() as f64;
    let norms = row_norms_sq(&spec.x);
    let kappa: Vec<f64> = norms.iter().map(|q| eta * spec.gamma * q / n).collect();
    let a: Vec<f64> = kappa
        .iter()
        .zip(spec.y.iter().zip(&spec.c))
        .map(|(k, (y, c))| (y + c * c / (2.0 * spec.gamma)) * k)
        .collect();
    (a, kappa)
}

fn flag_nonpositive(a: &[f64]) -> Vec<usize> {
    a.iter()
        .enumerate()
        .filter(|(_, v)| **v <= 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// `g(U; X_j)` for one sample.
pub fn qn_forward(spec: &QuadNetSpec, u: &Array2<f64>, j: usize) -> Result<f64> {
    if u.nrows() != spec.d || u.ncols() != spec.m {
        return Err(Error::Dimension(format!(
            "U is {}×{}, expected {}×{}",
            u.nrows(),
            u.ncols(),
            spec.d,
            spec.m
        )));
    }
    if j >= spec.n {
        return Err(Error::Dimension(format!(
            "sample index {j} out of range for n={}",
            spec.n
        )));
    }
    let p = spec.x.row(j).dot(u);
    Ok(p.dot(&p) * spec.scale())
}

/// One gradient-descent step `(I - A)U` with
/// `A = (2η/(√m·d·n))·Σ_j e_j X_j X_jᵀ`, applied as a rank-n update
/// (the d×d matrix is never formed).
pub fn gd_step_qn(spec: &QuadNetSpec, u: &Array2<f64>, eta: f64) -> Result<Array2<f64>> {
    if u.nrows() != spec.d || u.ncols() != spec.m {
        return Err(Error::Dimension(format!(
            "U is {}×{}, expected {}×{}",
            u.nrows(),
            u.ncols(),
            spec.d,
            spec.m
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParam(format!("step size must be > 0, got {eta}")));
    }
    let p = spec.x.dot(u);
    let scale = spec.scale();
    let coef: Array1<f64> = p
        .rows()
        .into_iter()
        .zip(&spec.y)
        .map(|(r, y)| (r.dot(&r) * scale - y) * 2.0 * eta * scale / spec.n as f64)
        .collect();
    let scaled = &p * &coef.view().insert_axis(Axis(1));
    Ok(u - &spec.x.t().dot(&scaled))
}

/// Map coordinates for the network: `κ_i = 2η‖X_i‖²/(√m·d·n)`,
/// `a_i = κ_i·y_i`, `z_i = κ_i·e_i`.
pub fn derive_map_params_qn(
    spec: &QuadNetSpec,
    eta: f64,
    u: &Array2<f64>,
) -> Result<MapCoordinates> {
    spec.check_orthogonality()?;
    let (a, kappa) = qn_theory_coords(spec, eta);
    let p = spec.x.dot(u);
    let scale = spec.scale();
    let z: Vec<f64> = p
        .rows()
        .into_iter()
        .zip(spec.y.iter().zip(&kappa))
        .map(|(r, (y, k))| (r.dot(&r) * scale - y) * k)
        .collect();
    let nonpositive_a = flag_nonpositive(&a);
    Ok(MapCoordinates {
        a,
        z,
        kappa,
        nonpositive_a,
    })
}

fn qn_theory_coords(spec: &QuadNetSpec, eta: f64) -> (Vec<f64>, Vec<f64>) {
    let norms = row_norms_sq(&spec.x);
    let kappa: Vec<f64> = norms
        .iter()
        .map(|q| 2.0 * eta * q * spec.scale() / spec.n as f64)
        .collect();
    let a: Vec<f64> = kappa.iter().zip(&spec.y).map(|(k, y)| k * y).collect();
    (a, kappa)
}

/// Training loss reconstructed from map coordinates:
/// `(1/2n)·Σ z_i²/κ_i²`.
pub fn loss_from_z(z: &[f64], kappa: &[f64]) -> f64 {
    let n = z.len() as f64;
    z.iter()
        .zip(kappa)
        .map(|(zi, k)| (zi / k) * (zi / k))
        .sum::<f64>()
        / (2.0 * n)
}

/// Closed-form sharpness `max_i (3z_i + 2a_i)/η`.
pub fn sharpness_formula(z: &[f64], a: &[f64], eta: f64) -> f64 {
    z.iter()
        .zip(a)
        .map(|(zi, ai)| (3.0 * zi + 2.0 * ai) / eta)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Best-achievable mean loss given the coordinates: samples whose effective
/// label `a_i/κ_i` is negative can never be fit by a non-negative model
/// output, leaving `(1/2n)·Σ min(a_i/κ_i, 0)²` on the floor.
pub fn loss_floor(coords: &MapCoordinates) -> f64 {
    let n = coords.a.len() as f64;
    coords
        .a
        .iter()
        .zip(&coords.kappa)
        .map(|(a, k)| {
            let beta = a / k;
            if beta < 0.0 {
                beta * beta
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / (2.0 * n)
}

struct PredictionRecorder {
    steps: Vec<usize>,
    raw: Vec<f64>,
    averaged: Vec<f64>,
    mean: Vec<f64>,
    count: usize,
    stride: usize,
    n_test: usize,
}

impl PredictionRecorder {
    fn new(n_test: usize, stride: usize) -> Self {
        PredictionRecorder {
            steps: Vec::new(),
            raw: Vec::new(),
            averaged: Vec::new(),
            mean: vec![0.0; n_test],
            count: 0,
            stride: stride.max(1),
            n_test,
        }
    }

    fn push(&mut self, step: usize, row: &[f64]) {
        self.count += 1;
        let w = 1.0 / self.count as f64;
        for (m, &v) in self.mean.iter_mut().zip(row) {
            *m += (v - *m) * w;
        }
        if step % self.stride == 0 {
            self.steps.push(step);
            self.raw.extend_from_slice(row);
            self.averaged.extend_from_slice(&self.mean);
        }
    }

    fn finish(self) -> Option<PredictionSeries> {
        if self.steps.is_empty() {
            return None;
        }
        let rows = self.steps.len();
        Some(PredictionSeries {
            steps: self.steps,
            raw: Array2::from_shape_vec((rows, self.n_test), self.raw)
                .expect("recorder row bookkeeping"),
            averaged: Array2::from_shape_vec((rows, self.n_test), self.averaged)
                .expect("recorder row bookkeeping"),
        })
    }
}

/// Run gradient descent on phase retrieval for `steps` steps, recording the
/// loss, the sharpness formula, the per-sample `z_i`, and optionally
/// held-out predictions. Aborts with `diverged_at` set once the loss passes
/// `DIVERGE_LOSS`. Prediction on held-out points requires a constant offset
/// `c` (a per-sample offset does not extend to new points).
pub fn train_pr(
    spec: &PhaseRetrievalSpec,
    eta: f64,
    steps: usize,
    w0: &Array1<f64>,
    record: &RecordConfig,
) -> Result<TrainTrace> {
    if w0.len() != spec.d() {
        return Err(Error::Dimension(format!(
            "w0 has length {}, expected d={}",
            w0.len(),
            spec.d()
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParam(format!("step size must be > 0, got {eta}")));
    }
    if let Some(tx) = &record.test_x {
        if tx.ncols() != spec.d() {
            return Err(Error::Dimension(format!(
                "test points have dimension {}, expected {}",
                tx.ncols(),
                spec.d()
            )));
        }
        if spec.c.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::InvalidParam(
                "held-out prediction needs a constant offset c".into(),
            ));
        }
    }
    let (a, kappa) = pr_theory_coords(spec, eta);
    let n = spec.n();
    let mut w = w0.clone();
    let mut loss = Vec::with_capacity(steps + 1);
    let mut sharp = Vec::with_capacity(steps + 1);
    let mut zs: Vec<f64> = Vec::with_capacity((steps + 1) * n);
    let mut recorder = record
        .test_x
        .as_ref()
        .map(|tx| PredictionRecorder::new(tx.nrows(), record.stride));
    let mut diverged_at = None;
    for t in 0..=steps {
        let (e, alpha) = pr_residuals(spec, &w);
        let l = e.dot(&e) / (2.0 * n as f64);
        loss.push(l);
        let z_now: Vec<f64> = kappa.iter().zip(e.iter()).map(|(k, ei)| k * ei).collect();
        sharp.push(sharpness_formula(&z_now, &a, eta));
        zs.extend_from_slice(&z_now);
        if let (Some(rec), Some(tx)) = (recorder.as_mut(), record.test_x.as_ref()) {
            let c0 = spec.c.first().copied().unwrap_or(0.0);
            let tv = tx.dot(&w);
            let row: Vec<f64> = tv
                .iter()
                .map(|ti| spec.gamma * ti * ti / 2.0 + c0 * ti)
                .collect();
            rec.push(t, &row);
        }
        if !l.is_finite() || l > DIVERGE_LOSS {
            diverged_at = Some(t);
            break;
        }
        if t < steps {
            let coef = (&e * &alpha) * (eta / n as f64);
            w -= &spec.x.t().dot(&coef);
        }
    }
    let rows = loss.len();
    Ok(TrainTrace {
        loss,
        sharpness: sharp,
        z: Array2::from_shape_vec((rows, n), zs).expect("z row bookkeeping"),
        a,
        kappa,
        diverged_at,
        final_weights: w.insert_axis(Axis(1)),
        predictions: recorder.and_then(PredictionRecorder::finish),
    })
}

/// Run gradient descent on the quadratic-activation network; mirrors
/// [`train_pr`].
pub fn train_qn(
    spec: &QuadNetSpec,
    eta: f64,
    steps: usize,
    u0: &Array2<f64>,
    record: &RecordConfig,
) -> Result<TrainTrace> {
    if u0.nrows() != spec.d || u0.ncols() != spec.m {
        return Err(Error::Dimension(format!(
            "U0 is {}×{}, expected {}×{}",
            u0.nrows(),
            u0.ncols(),
            spec.d,
            spec.m
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParam(format!("step size must be > 0, got {eta}")));
    }
    if let Some(tx) = &record.test_x {
        if tx.ncols() != spec.d {
            return Err(Error::Dimension(format!(
                "test points have dimension {}, expected {}",
                tx.ncols(),
                spec.d
            )));
        }
    }
    let (a, kappa) = qn_theory_coords(spec, eta);
    let scale = spec.scale();
    let n = spec.n;
    let mut u = u0.clone();
    let mut loss = Vec::with_capacity(steps + 1);
    let mut sharp = Vec::with_capacity(steps + 1);
    let mut zs: Vec<f64> = Vec::with_capacity((steps + 1) * n);
    let mut recorder = record
        .test_x
        .as_ref()
        .map(|tx| PredictionRecorder::new(tx.nrows(), record.stride));
    let mut diverged_at = None;
    for t in 0..=steps {
        let p = spec.x.dot(&u);
        let e: Array1<f64> = p
            .rows()
            .into_iter()
            .zip(&spec.y)
            .map(|(r, y)| r.dot(&r) * scale - y)
            .collect();
        let l = e.dot(&e) / (2.0 * n as f64);
        loss.push(l);
        let z_now: Vec<f64> = kappa.iter().zip(e.iter()).map(|(k, ei)| k * ei).collect();
        sharp.push(sharpness_formula(&z_now, &a, eta));
        zs.extend_from_slice(&z_now);
        if let (Some(rec), Some(tx)) = (recorder.as_mut(), record.test_x.as_ref()) {
            let tp = tx.dot(&u);
            let row: Vec<f64> = tp.rows().into_iter().map(|r| r.dot(&r) * scale).collect();
            rec.push(t, &row);
        }
        if !l.is_finite() || l > DIVERGE_LOSS {
            diverged_at = Some(t);
            break;
        }
        if t < steps {
            let coef: Array1<f64> =
                e.iter().map(|ei| ei * 2.0 * eta * scale / n as f64).collect();
            let scaled = &p * &coef.view().insert_axis(Axis(1));
            u -= &spec.x.t().dot(&scaled);
        }
    }
    let rows = loss.len();
    Ok(TrainTrace {
        loss,
        sharpness: sharp,
        z: Array2::from_shape_vec((rows, n), zs).expect("z row bookkeeping"),
        a,
        kappa,
        diverged_at,
        final_weights: u,
        predictions: recorder.and_then(PredictionRecorder::finish),
    })
}

/// A model whose loss Hessian the oracle can probe.
pub enum OracleModel<'a> {
    PhaseRetrieval(&'a PhaseRetrievalSpec),
    QuadNet(&'a QuadNetSpec),
    /// `loss = ‖p‖²/2`; its Hessian is the identity. Calibration model.
    QuadraticBowl { dim: usize },
}

impl OracleModel<'_> {
    fn dim(&self) -> usize {
        match self {
            OracleModel::PhaseRetrieval(s) => s.d(),
            OracleModel::QuadNet(s) => s.d * s.m,
            OracleModel::QuadraticBowl { dim } => *dim,
        }
    }

    fn gradient(&self, p: &Array1<f64>) -> Array1<f64> {
        match self {
            OracleModel::PhaseRetrieval(spec) => {
                let (e, alpha) = pr_residuals(spec, p);
                let coef = (&e * &alpha) / spec.n() as f64;
                spec.x.t().dot(&coef)
            }
            OracleModel::QuadNet(spec) => {
                let u = p
                    .view()
                    .into_shape_with_order((spec.d, spec.m))
                    .expect("param vector has d*m entries");
                let pm = spec.x.dot(&u);
                let scale = spec.scale();
                let coef: Array1<f64> = pm
                    .rows()
                    .into_iter()
                    .zip(&spec.y)
                    .map(|(r, y)| (r.dot(&r) * scale - y) * 2.0 * scale / spec.n as f64)
                    .collect();
                let scaled = &pm * &coef.view().insert_axis(Axis(1));
                let grad = spec.x.t().dot(&scaled);
                Array1::from_iter(grad.iter().copied())
            }
            OracleModel::QuadraticBowl { .. } => p.clone(),
        }
    }
}

const POWER_REL_TOL: f64 = 1e-7;

fn power_iterate(
    apply: impl Fn(&Array1<f64>) -> Array1<f64>,
    dim: usize,
    iters: usize,
) -> Result<f64> {
    let mut rng = PortableRng::new(0x0e1_5eed);
    let mut v = Array1::from_shape_fn(dim, |_| rng.normal());
    let norm = v.dot(&v).sqrt();
    v.mapv_inplace(|t| t / norm);
    for _ in 0..iters {
        let hv = apply(&v);
        let lambda = v.dot(&hv);
        let resid = (&hv - &(&v * lambda)).mapv(|t| t * t).sum().sqrt();
        if resid <= POWER_REL_TOL * lambda.abs().max(1.0) {
            return Ok(lambda);
        }
        let norm = hv.dot(&hv).sqrt();
        if norm < 1e-300 {
            return Ok(0.0);
        }
        v = hv / norm;
    }
    Err(Error::NonConverged(format!(
        "power iteration did not settle in {iters} iterations"
    )))
}

/// Largest Hessian eigenvalue measured independently of the closed form:
/// Hessian-vector products by central differences of the analytic gradient,
/// resolved by power iteration with a residual stopping rule. A negative
/// dominant eigenvalue triggers a shifted second pass so the *largest*
/// (not largest-magnitude) eigenvalue is returned.
pub fn hessian_sharpness_oracle(
    model: &OracleModel,
    params: &[f64],
    fd_step: f64,
    power_iters: usize,
) -> Result<f64> {
    if !(fd_step > 0.0) {
        return Err(Error::InvalidParam(format!(
            "finite-difference step must be > 0, got {fd_step}"
        )));
    }
    let dim = model.dim();
    if params.len() != dim {
        return Err(Error::Dimension(format!(
            "parameter vector has length {}, expected {dim}",
            params.len()
        )));
    }
    let p = Array1::from_iter(params.iter().copied());
    let h = fd_step * (1.0 + p.iter().fold(0.0_f64, |acc, t| acc.max(t.abs())));
    let hvp = |v: &Array1<f64>| {
        let plus = model.gradient(&(&p + &(v * h)));
        let minus = model.gradient(&(&p - &(v * h)));
        (plus - minus) / (2.0 * h)
    };
    let lambda = power_iterate(hvp, dim, power_iters)?;
    if lambda >= 0.0 {
        return Ok(lambda);
    }
    // dominant eigenvalue is negative: shift the spectrum up by -lambda and
    // rerun, so the true maximum dominates
    let mu = lambda;
    let shifted = |v: &Array1<f64>| {
        let plus = model.gradient(&(&p + &(v * h)));
        let minus = model.gradient(&(&p - &(v * h)));
        (plus - minus) / (2.0 * h) - &(v * mu)
    };
    let top = power_iterate(shifted, dim, power_iters)?;
    Ok(top + mu)
}

/// Step size that places `max_i a_i` exactly at `target` (a_i is linear in
/// η). Fails with `NoPositiveLabel` when no sample has a positive
/// coefficient.
pub fn eta_for_target_amax_pr(spec: &PhaseRetrievalSpec, target: f64) -> Result<f64> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::InvalidParam(format!(
            "target for max a must be finite and > 0, got {target}"
        )));
    }
    let (a_unit, _) = pr_theory_coords(spec, 1.0);
    let smax = a_unit.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if smax <= 0.0 {
        return Err(Error::NoPositiveLabel);
    }
    Ok(target / smax)
}

/// Network counterpart of [`eta_for_target_amax_pr`].
pub fn eta_for_target_amax_qn(spec: &QuadNetSpec, target: f64) -> Result<f64> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::InvalidParam(format!(
            "target for max a must be finite and > 0, got {target}"
        )));
    }
    let (a_unit, _) = qn_theory_coords(spec, 1.0);
    let smax = a_unit.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if smax <= 0.0 {
        return Err(Error::NoPositiveLabel);
    }
    Ok(target / smax)
}

/// Largest step size whose `trial_steps`-step run stays below the
/// divergence cutoff, located by doubling (at most 60 times) and bisection
/// to 1% relative width. The caller supplies the starting bracket
/// `[lo, hi]`; `lo` itself must not diverge.
pub fn tune_eta_max_qn(
    spec: &QuadNetSpec,
    u0: &Array2<f64>,
    trial_steps: usize,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if !(lo > 0.0 && lo < hi) || !hi.is_finite() {
        return Err(Error::InvalidParam(format!(
            "bracket needs 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let diverges = |eta: f64| -> Result<bool> {
        let trace = train_qn(spec, eta, trial_steps, u0, &RecordConfig::none())?;
        Ok(trace.diverged_at.is_some())
    };
    if diverges(lo)? {
        return Err(Error::Bracket(format!(
            "training already diverges at the lower endpoint {lo}"
        )));
    }
    let mut lo = lo;
    let mut hi = hi;
    let mut doublings = 0;
    while !diverges(hi)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Bracket(format!(
                "no divergence found below {hi} after 60 doublings"
            )));
        }
    }
    while hi / lo > 1.01 {
        let mid = 0.5 * (lo + hi);
        if diverges(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_gen::{gaussian_matrix, random_orthonormal_rows, Dataset, DataKind};
    use ndarray::{arr1, arr2};

    fn eye_rows(n: usize, d: usize) -> Array2<f64> {
        let mut x = Array2::zeros((n, d));
        for i in 0..n {
            x[(i, i)] = 1.0;
        }
        x
    }

    #[test]
    fn pr_forward_examples() {
        let spec =
            PhaseRetrievalSpec::with_scalar_offset(2.0, 0.0, arr2(&[[1.0, 0.0]]), vec![0.0])
                .unwrap();
        assert_eq!(pr_forward(&spec, &arr1(&[0.0, 0.0]), 0).unwrap(), 0.0);
        // classical phase retrieval: (Xᵀw)²
        assert_eq!(pr_forward(&spec, &arr1(&[0.3, 9.0]), 0).unwrap(), 0.09);
        let spec2 =
            PhaseRetrievalSpec::with_scalar_offset(1.0, 1.0, arr2(&[[1.0, 0.0]]), vec![0.0])
                .unwrap();
        assert_eq!(pr_forward(&spec2, &arr1(&[2.0, 0.0]), 0).unwrap(), 4.0);
        assert!(pr_forward(&spec2, &arr1(&[2.0]), 0).is_err());
        assert!(pr_forward(&spec2, &arr1(&[2.0, 0.0]), 5).is_err());
    }

    #[test]
    fn gd_step_pr_hand_computed() {
        let spec =
            PhaseRetrievalSpec::with_scalar_offset(2.0, 0.0, arr2(&[[1.0, 0.0]]), vec![0.5])
                .unwrap();
        let w = arr1(&[0.1, 0.0]);
        let w1 = gd_step_pr(&spec, &w, 1.0).unwrap();
        assert!((w1[0] - 0.198).abs() < 1e-15);
        assert_eq!(w1[1], 0.0);
    }

    #[test]
    fn gd_step_pr_stationary_at_zero_residual() {
        let x = eye_rows(2, 3);
        let spec = PhaseRetrievalSpec::with_scalar_offset(2.0, 0.0, x, vec![0.04, 0.09]).unwrap();
        let w = arr1(&[0.2, 0.3, 0.7]);
        // residuals are exactly zero: (0.2)² = 0.04, (0.3)² = 0.09
        let w1 = gd_step_pr(&spec, &w, 0.5).unwrap();
        assert_eq!(w, w1);
    }

    #[test]
    fn gd_step_pr_sign_symmetry() {
        let x = arr2(&[[0.6, 0.8], [0.8, -0.6]]);
        let spec = PhaseRetrievalSpec::with_scalar_offset(2.0, 0.0, x, vec![0.3, 0.1]).unwrap();
        let w = arr1(&[0.4, -0.2]);
        let plus = gd_step_pr(&spec, &w, 0.7).unwrap();
        let minus = gd_step_pr(&spec, &(-w), 0.7).unwrap();
        assert_eq!(minus, -plus);
    }

    #[test]
    fn derive_pr_map_params_formula() {
        let spec =
            PhaseRetrievalSpec::with_scalar_offset(2.0, 0.0, arr2(&[[1.0, 0.0]]), vec![0.5])
                .unwrap();
        let coords = derive_map_params_pr(&spec, 1.0, &arr1(&[0.0, 0.0])).unwrap();
        assert!((coords.a[0] - 1.0).abs() < 1e-15);
        assert!((coords.kappa[0] - 2.0).abs() < 1e-15);
        // z = κe with e = -y at w = 0
        assert!((coords.z[0] + 1.0).abs() < 1e-15);
        assert!(coords.nonpositive_a.is_empty());

        // degenerate label: a = 0 is flagged and rejected by MapParam
        let degenerate =
            PhaseRetrievalSpec::with_scalar_offset(2.0, 0.0, arr2(&[[1.0, 0.0]]), vec![0.0])
                .unwrap();
        let coords0 = derive_map_params_pr(&degenerate, 1.0, &arr1(&[0.1, 0.0])).unwrap();
        assert_eq!(coords0.nonpositive_a, vec![0]);
        assert!(crate::cubic_map::MapParam::new(coords0.a[0]).is_err());
    }

    #[test]
    fn map_params_scale_linearly_in_eta() {
        let x = random_orthonormal_rows(3, 6, 5).unwrap();
        let spec =
            PhaseRetrievalSpec::with_scalar_offset(1.5, 0.3, x, vec![0.4, 0.2, 0.9]).unwrap();
        let w = Array1::from_iter((0..6).map(|i| 0.05 * (i as f64 + 1.0)));
        let c1 = derive_map_params_pr(&spec, 0.8, &w).unwrap();
        let c2 = derive_map_params_pr(&spec, 1.6, &w).unwrap();
        for i in 0..3 {
            assert!((c2.a[i] - 2.0 * c1.a[i]).abs() < 1e-12 * c1.a[i].abs().max(1.0));
            assert!((c2.z[i] - 2.0 * c1.z[i]).abs() < 1e-12 * c1.z[i].abs().max(1.0));
        }
    }

    #[test]
    fn orthogonality_violation_is_reported() {
        let x = arr2(&[[1.0, 0.0], [0.9, 0.1]]);
        let spec = PhaseRetrievalSpec::with_scalar_offset(2.0, 0.0, x, vec![0.1, 0.2]).unwrap();
        assert!(matches!(
            derive_map_params_pr(&spec, 1.0, &arr1(&[0.0, 0.0])),
            Err(Error::Orthogonality { .. })
        ));
    }

    #[test]
    fn train_pr_monotone_phase_decreases() {
        let x = eye_rows(3, 5);
        let y = vec![0.9, 0.5, 0.7];
        let spec = PhaseRetrievalSpec::with_scalar_offset(2.0, 0.0, x, y).unwrap();
        let eta = eta_for_target_amax_pr(&spec, 0.7).unwrap();
        let w0 = arr1(&[0.1, 0.1, 0.1, 0.0, 0.0]);
        let trace = train_pr(&spec, eta, 600, &w0, &RecordConfig::none()).unwrap();
        assert!(trace.diverged_at.is_none());
        for w in trace.loss.windows(2) {
            if w[0] > 1e-25 {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "loss rose: {} -> {}", w[0], w[1]);
            }
        }
        assert!(*trace.loss.last().unwrap() <= 1e-20 * trace.loss[0]);
    }

    #[test]
    fn train_pr_bounded_nonconvergent_phase() {
        let x = eye_rows(3, 5);
        let y = vec![0.5, 0.5, 0.5];
        let spec = PhaseRetrievalSpec::with_scalar_offset(2.0, 0.0, x, y).unwrap();
        let eta = eta_for_target_amax_pr(&spec, 1.2).unwrap();
        let w0 = arr1(&[0.1, 0.07, 0.13, 0.0, 0.0]);
        let trace = train_pr(&spec, eta, 3000, &w0, &RecordConfig::none()).unwrap();
        assert!(trace.diverged_at.is_none());
        assert!(*trace.loss.last().unwrap() > 1e-6);
    }

    #[test]
    fn train_pr_divergent_phase_flags() {
        let x = eye_rows(2, 4);
        let y = vec![0.5, 0.5];
        let spec = PhaseRetrievalSpec::with_scalar_offset(2.0, 0.0, x, y).unwrap();
        let eta = eta_for_target_amax_pr(&spec, 2.2).unwrap();
        let w0 = arr1(&[0.11, 0.13, 0.0, 0.0]);
        let trace = train_pr(&spec, eta, 3000, &w0, &RecordConfig::none()).unwrap();
        assert!(trace.diverged_at.is_some());
        assert_eq!(trace.loss.len(), trace.diverged_at.unwrap() + 1);
    }

    #[test]
    fn qn_forward_examples() {
        let spec = QuadNetSpec::new(arr2(&[[1.0]]), vec![0.0], 1).unwrap();
        let u = arr2(&[[2.0]]);
        assert_eq!(qn_forward(&spec, &u, 0).unwrap(), 4.0);
        let zero = arr2(&[[0.0]]);
        assert_eq!(qn_forward(&spec, &zero, 0).unwrap(), 0.0);

        // column permutation leaves the output unchanged
        let spec2 = QuadNetSpec::new(arr2(&[[0.6, 0.8]]), vec![0.0], 2).unwrap();
        let u2 = arr2(&[[1.0, -0.3], [0.2, 0.9]]);
        let permuted = arr2(&[[-0.3, 1.0], [0.9, 0.2]]);
        assert_eq!(
            qn_forward(&spec2, &u2, 0).unwrap(),
            qn_forward(&spec2, &permuted, 0).unwrap()
        );
    }

    #[test]
    fn gd_step_qn_zero_residual_is_stationary() {
        let x = eye_rows(2, 3);
        let u = arr2(&[[0.4, 0.1], [0.0, 0.5], [0.3, 0.3]]);
        let spec_probe = QuadNetSpec::new(x.clone(), vec![0.0, 0.0], 2).unwrap();
        let y = vec![
            qn_forward(&spec_probe, &u, 0).unwrap(),
            qn_forward(&spec_probe, &u, 1).unwrap(),
        ];
        let spec = QuadNetSpec::new(x, y, 2).unwrap();
        let u1 = gd_step_qn(&spec, &u, 0.9).unwrap();
        assert_eq!(u, u1);
    }

    #[test]
    fn gd_step_qn_scalar_contraction_per_sample() {
        let x = random_orthonormal_rows(4, 9, 21).unwrap();
        let y = vec![0.2, 0.4, 0.1, 0.3];
        let spec = QuadNetSpec::new(x.clone(), y.clone(), 3).unwrap();
        let u = gaussian_matrix(9, 3, 8);
        let eta = 40.0;
        let u1 = gd_step_qn(&spec, &u, eta).unwrap();
        let scale = 1.0 / (3.0_f64.sqrt() * 9.0);
        for j in 0..4 {
            let pj = x.row(j).dot(&u);
            let e_j = pj.dot(&pj) * scale - y[j];
            let factor = 1.0 - 2.0 * eta * e_j * x.row(j).dot(&x.row(j)) * scale / 4.0;
            let got = x.row(j).dot(&u1);
            for i in 0..3 {
                assert!(
                    (got[i] - factor * pj[i]).abs() < 1e-10,
                    "sample {j} unit {i}"
                );
            }
        }
    }

    #[test]
    fn gd_step_qn_commutes_with_rotations() {
        let x = random_orthonormal_rows(3, 8, 2).unwrap();
        let spec = QuadNetSpec::new(x, vec![0.3, 0.2, 0.5], 4).unwrap();
        let u = gaussian_matrix(8, 4, 12);
        let q = random_orthonormal_rows(4, 4, 7).unwrap();
        let left = gd_step_qn(&spec, &u.dot(&q), 25.0).unwrap();
        let right = gd_step_qn(&spec, &u, 25.0).unwrap().dot(&q);
        for (l, r) in left.iter().zip(right.iter()) {
            assert!((l - r).abs() < 1e-10);
        }
    }

    #[test]
    fn derive_qn_map_params_formula_inversion() {
        let x = eye_rows(2, 4);
        let spec = QuadNetSpec::new(x, vec![1.0, 1.0], 4).unwrap();
        // η = √m·d·n/2 makes a_i = y_i = 1
        let eta = 2.0 * 4.0 * 2.0 / 2.0;
        let u = gaussian_matrix(4, 4, 3);
        let coords = derive_map_params_qn(&spec, eta, &u).unwrap();
        for i in 0..2 {
            assert!((coords.a[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derive_qn_zero_residual_gives_zero_z() {
        let x = eye_rows(2, 3);
        let u = gaussian_matrix(3, 2, 4);
        let probe = QuadNetSpec::new(x.clone(), vec![0.0, 0.0], 2).unwrap();
        let y = vec![
            qn_forward(&probe, &u, 0).unwrap(),
            qn_forward(&probe, &u, 1).unwrap(),
        ];
        let spec = QuadNetSpec::new(x, y, 2).unwrap();
        let coords = derive_map_params_qn(&spec, 10.0, &u).unwrap();
        assert_eq!(coords.z, vec![0.0, 0.0]);
    }

    #[test]
    fn qn_a_scales_with_row_norm_squared() {
        let x = eye_rows(2, 3);
        let spec1 = QuadNetSpec::new(x.clone(), vec![0.7, 0.4], 2).unwrap();
        let scaled = QuadNetSpec::new(&x * 2.0, vec![0.7, 0.4], 2).unwrap();
        let u = gaussian_matrix(3, 2, 4);
        let c1 = derive_map_params_qn(&spec1, 5.0, &u).unwrap();
        let c2 = derive_map_params_qn(&scaled, 5.0, &u).unwrap();
        for i in 0..2 {
            assert!((c2.a[i] - 4.0 * c1.a[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_from_z_examples() {
        assert_eq!(loss_from_z(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
        assert!((loss_from_z(&[0.2], &[0.1]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn loss_identity_on_orthogonal_instance() {
        let ds = Dataset::synthesize(DataKind::OrthonormalRows, 6, 10, 3, 0.25, 44).unwrap();
        let spec = QuadNetSpec::new(ds.x.clone(), ds.y.clone(), 3).unwrap();
        let eta = eta_for_target_amax_qn(&spec, 0.9).unwrap();
        let u0 = gaussian_matrix(10, 3, 5);
        let trace = train_qn(&spec, eta, 50, &u0, &RecordConfig::none()).unwrap();
        for t in 0..trace.loss.len() {
            let z_row: Vec<f64> = trace.z.row(t).to_vec();
            let rebuilt = loss_from_z(&z_row, &trace.kappa);
            let rel = (rebuilt - trace.loss[t]).abs() / trace.loss[t].abs().max(1e-300);
            assert!(rel <= 1e-10, "loss identity broke at step {t}: rel {rel}");
        }
    }

    #[test]
    fn sharpness_formula_examples() {
        assert!((sharpness_formula(&[0.1], &[1.0], 0.5) - 4.6).abs() < 1e-15);
        // z → 0 limit
        assert!((sharpness_formula(&[0.0, 0.0], &[0.5, 0.8], 2.0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn oracle_on_identity_hessian() {
        let model = OracleModel::QuadraticBowl { dim: 7 };
        let p = vec![0.3; 7];
        let lam = hessian_sharpness_oracle(&model, &p, 1e-5, 200).unwrap();
        assert!((lam - 1.0).abs() < 1e-9, "lambda {lam}");
    }

    #[test]
    fn oracle_matches_single_point_closed_form() {
        let x = arr2(&[[1.0, 0.5]]);
        let spec = PhaseRetrievalSpec::with_scalar_offset(2.0, 0.0, x, vec![0.3]).unwrap();
        let w = [0.8, 0.1];
        let t = 0.8 + 0.5 * 0.1;
        let e = t * t - 0.3;
        let alpha = 2.0 * t;
        let expected = (alpha * alpha + 2.0 * e) * 1.25;
        let model = OracleModel::PhaseRetrieval(&spec);
        let lam = hessian_sharpness_oracle(&model, &w, 1e-5, 500).unwrap();
        let rel = (lam - expected).abs() / expected.abs();
        assert!(rel <= 1e-6, "rel {rel}");
    }

    #[test]
    fn oracle_matches_sharpness_formula_near_convergence() {
        let ds = Dataset::synthesize(DataKind::OrthonormalRows, 8, 20, 5, 0.0, 6).unwrap();
        let spec = QuadNetSpec::new(ds.x.clone(), ds.y.clone(), 5).unwrap();
        let eta = eta_for_target_amax_qn(&spec, 0.9).unwrap();
        let u0 = gaussian_matrix(20, 5, 77);
        let trace = train_qn(&spec, eta, 1500, &u0, &RecordConfig::none()).unwrap();
        assert!(*trace.loss.last().unwrap() < 1e-16);
        let formula = *trace.sharpness.last().unwrap();
        assert!(formula > 0.0);
        let params: Vec<f64> = trace.final_weights.iter().copied().collect();
        let model = OracleModel::QuadNet(&spec);
        let lam = hessian_sharpness_oracle(&model, &params, 1e-5, 2000).unwrap();
        let rel = (lam - formula).abs() / formula.abs();
        assert!(rel <= 1e-4, "oracle {lam} vs formula {formula}, rel {rel}");
    }

    #[test]
    fn oracle_needs_iterations() {
        let model = OracleModel::QuadraticBowl { dim: 3 };
        assert!(matches!(
            hessian_sharpness_oracle(&model, &[0.1, 0.2, 0.3], 1e-5, 0),
            Err(Error::NonConverged(_))
        ));
    }

    #[test]
    fn eta_for_target_examples() {
        let x = random_orthonormal_rows(80, 100, 13).unwrap();
        let mut y = vec![1.0; 80];
        y[17] = 2.0;
        let spec = QuadNetSpec::new(x, y, 25).unwrap();
        let eta = eta_for_target_amax_qn(&spec, 1.6).unwrap();
        assert!((eta - 1.6 * 10_000.0).abs() < 1e-6 * eta);
        let eta_half = eta_for_target_amax_qn(&spec, 0.8).unwrap();
        assert!((eta - 2.0 * eta_half).abs() < 1e-9 * eta);
    }

    #[test]
    fn eta_for_target_rejects_nonpositive_labels() {
        let x = eye_rows(2, 3);
        let spec = QuadNetSpec::new(x, vec![-0.5, -0.1], 2).unwrap();
        assert!(matches!(
            eta_for_target_amax_qn(&spec, 1.0),
            Err(Error::NoPositiveLabel)
        ));
    }

    #[test]
    fn tuned_eta_max_sits_at_the_divergence_threshold() {
        let ds = Dataset::synthesize(DataKind::OrthonormalRows, 4, 8, 2, 0.0, 10).unwrap();
        let spec = QuadNetSpec::new(ds.x.clone(), ds.y.clone(), 2).unwrap();
        // small init keeps z(0) near -a for every candidate step size, so the
        // divergence threshold is decided by the asymptotic phase alone
        let u0 = gaussian_matrix(8, 2, 3) * 0.1;
        let eta1 = eta_for_target_amax_qn(&spec, 1.0).unwrap();
        let tuned = tune_eta_max_qn(&spec, &u0, 500, eta1, 2.0 * eta1).unwrap();
        let eta2 = eta_for_target_amax_qn(&spec, 2.0).unwrap();
        assert!(
            (tuned - eta2).abs() <= 0.05 * eta2,
            "tuned {tuned} vs a=2 step size {eta2}"
        );
        // the returned step size trains without divergence; 10% above it diverges
        let ok = train_qn(&spec, tuned, 500, &u0, &RecordConfig::none()).unwrap();
        assert!(ok.diverged_at.is_none());
        let bad = train_qn(&spec, 1.1 * tuned, 500, &u0, &RecordConfig::none()).unwrap();
        assert!(bad.diverged_at.is_some());
    }

    #[test]
    fn tune_rejects_divergent_lower_endpoint() {
        let ds = Dataset::synthesize(DataKind::OrthonormalRows, 4, 8, 2, 0.0, 10).unwrap();
        let spec = QuadNetSpec::new(ds.x.clone(), ds.y.clone(), 2).unwrap();
        let u0 = gaussian_matrix(8, 2, 3) * 0.1;
        let eta3 = eta_for_target_amax_qn(&spec, 3.0).unwrap();
        assert!(matches!(
            tune_eta_max_qn(&spec, &u0, 500, eta3, 2.0 * eta3),
            Err(Error::Bracket(_))
        ));
    }

    #[test]
    fn per_sample_independence_under_exact_orthogonality() {
        let x = eye_rows(3, 6);
        let y1 = vec![0.4, 0.3, 0.2];
        let mut y2 = y1.clone();
        y2[1] = 0.9;
        let u0 = gaussian_matrix(6, 2, 9);
        let spec1 = QuadNetSpec::new(x.clone(), y1, 2).unwrap();
        let spec2 = QuadNetSpec::new(x, y2, 2).unwrap();
        let eta = 8.0;
        let t1 = train_qn(&spec1, eta, 50, &u0, &RecordConfig::none()).unwrap();
        let t2 = train_qn(&spec2, eta, 50, &u0, &RecordConfig::none()).unwrap();
        for t in 0..=50 {
            assert_eq!(t1.z[(t, 0)], t2.z[(t, 0)]);
            assert_eq!(t1.z[(t, 2)], t2.z[(t, 2)]);
            assert_ne!(t1.z[(t, 1)], t2.z[(t, 1)]);
        }
    }

    #[test]
    fn loss_floor_counts_negative_effective_labels() {
        let coords = MapCoordinates {
            a: vec![0.5, -0.2, 0.0],
            z: vec![0.0; 3],
            kappa: vec![0.1, 0.1, 0.1],
            nonpositive_a: vec![1, 2],
        };
        let floor = loss_floor(&coords);
        // only a = -0.2 → β = -2 contributes: (1/6)·4
        assert!((floor - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn recorder_stride_keeps_running_mean_exact() {
        let x = eye_rows(2, 4);
        let spec = QuadNetSpec::new(x, vec![0.5, 0.5], 2).unwrap();
        let u0 = gaussian_matrix(4, 2, 3);
        let test_x = gaussian_matrix(5, 4, 14);
        let every = RecordConfig {
            test_x: Some(test_x.clone()),
            stride: 1,
        };
        let strided = RecordConfig {
            test_x: Some(test_x),
            stride: 10,
        };
        let eta = eta_for_target_amax_qn(&spec, 1.2).unwrap();
        let t1 = train_qn(&spec, eta, 100, &u0, &every).unwrap();
        let t2 = train_qn(&spec, eta, 100, &u0, &strided).unwrap();
        let p1 = t1.predictions.unwrap();
        let p2 = t2.predictions.unwrap();
        assert_eq!(p2.steps, vec![0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100]);
        for (r, &step) in p2.steps.iter().enumerate() {
            for j in 0..5 {
                assert_eq!(p2.raw[(r, j)], p1.raw[(step, j)]);
                assert_eq!(p2.averaged[(r, j)], p1.averaged[(step, j)]);
            }
        }
    }
}
