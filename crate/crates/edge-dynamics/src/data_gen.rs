//! Reproducible dataset synthesis: orthonormal-row and Gaussian designs,
//! quadratic-network labels with optional noise, and CSV persistence.
//!
//! All randomness flows through [`PortableRng`], a ChaCha20 stream with a
//! documented seed expansion and documented uniform/normal transforms, so a
//! `(kind, n, d, m, noise_var, seed)` tuple reproduces bit-identically on
//! any platform.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

const UNIT: f64 = 1.0 / 9007199254740992.0; // 2^-53

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Hash a master seed and a stream index into an independent sub-seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut s = master ^ stream.wrapping_mul(0x9E3779B97F4A7C15);
    splitmix64(&mut s)
}

/// Deterministic, platform-independent random source.
///
/// A u64 seed is expanded to 32 bytes through four splitmix64 steps and fed
/// to ChaCha20. Uniforms take the top 53 bits of each u64 draw; normals are
/// Box–Muller transforms of those uniforms (one spare cached).
pub struct PortableRng {
    inner: ChaCha20Rng,
    spare_normal: Option<f64>,
}

impl PortableRng {
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let mut bytes = [0u8; 32];
        for chunk in bytes.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        PortableRng {
            inner: ChaCha20Rng::from_seed(bytes),
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1) with 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * UNIT
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        if let Some(x) = self.spare_normal.take() {
            return x;
        }
        // first uniform shifted into (0, 1] so the log stays finite
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * UNIT;
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        let (s, c) = theta.sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    OrthonormalRows,
    Gaussian,
}

impl DataKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DataKind::OrthonormalRows => "orthonormal_rows",
            DataKind::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for DataKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DataKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orthonormal_rows" => Ok(DataKind::OrthonormalRows),
            "gaussian" => Ok(DataKind::Gaussian),
            other => Err(Error::InvalidParam(format!("unknown data kind {other:?}"))),
        }
    }
}

/// A design matrix with labels and everything needed to regenerate it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub kind: DataKind,
    pub noise_var: f64,
    pub seed: u64,
    /// The d×m weight matrix that generated the labels, when known.
    pub ground_truth: Option<Array2<f64>>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Generate a full dataset from one master seed. Sub-seeds for the
    /// design, ground truth and noise come from [`derive_seed`] streams
    /// 1, 2 and 3 respectively.
    pub fn synthesize(
        kind: DataKind,
        n: usize,
        d: usize,
        m: usize,
        noise_var: f64,
        seed: u64,
    ) -> Result<Dataset> {
        let x = match kind {
            DataKind::OrthonormalRows => random_orthonormal_rows(n, d, derive_seed(seed, 1))?,
            DataKind::Gaussian => gaussian_matrix(n, d, derive_seed(seed, 1)),
        };
        let u_star = gaussian_matrix(d, m, derive_seed(seed, 2));
        let y = generate_labels(&x, &u_star, noise_var, derive_seed(seed, 3))?;
        Ok(Dataset {
            x,
            y,
            kind,
            noise_var,
            seed,
            ground_truth: Some(u_star),
        })
    }
}

/// First `n` rows of an orthogonal d×d matrix obtained by modified
/// Gram–Schmidt (with one reorthogonalization pass) on a seeded Gaussian
/// matrix. Only the first `n` Gaussian rows are drawn: Gram–Schmidt is
/// sequential, so later rows cannot influence earlier ones.
pub fn random_orthonormal_rows(n: usize, d: usize, seed: u64) -> Result<Array2<f64>> {
    if n > d {
        return Err(Error::Dimension(format!(
            "cannot build {n} orthonormal rows in dimension {d}"
        )));
    }
    let mut q = gaussian_matrix(n, d, seed);
    for i in 0..n {
        let mut v = q.row(i).to_owned();
        for _pass in 0..2 {
            for j in 0..i {
                let row_j = q.row(j);
                let proj = v.dot(&row_j);
                v.scaled_add(-proj, &row_j);
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm < 1e-8 {
            return Err(Error::InvalidParam(format!(
                "degenerate random matrix: row {i} lies in the span of earlier rows"
            )));
        }
        v.mapv_inplace(|t| t / norm);
        q.row_mut(i).assign(&v);
    }
    Ok(q)
}

/// n×d matrix of i.i.d. standard normals, filled row-major.
pub fn gaussian_matrix(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = PortableRng::new(seed);
    Array2::from_shape_fn((n, d), |_| rng.normal())
}

/// Quadratic-network labels `y_i = (1/(√m·d))·Σ_j (X_i·u_j)² + ε_i` with
/// `ε_i ~ N(0, noise_var)` from the seeded generator.
pub fn generate_labels(
    x: &Array2<f64>,
    u_star: &Array2<f64>,
    noise_var: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if x.ncols() != u_star.nrows() {
        return Err(Error::Dimension(format!(
            "design has d={} but ground truth has {} rows",
            x.ncols(),
            u_star.nrows()
        )));
    }
    if noise_var < 0.0 {
        return Err(Error::InvalidParam(format!(
            "noise variance must be >= 0, got {noise_var}"
        )));
    }
    let m = u_star.ncols();
    let scale = 1.0 / ((m as f64).sqrt() * x.ncols() as f64);
    let p = x.dot(u_star);
    let sd = noise_var.sqrt();
    let mut rng = PortableRng::new(seed);
    Ok(p
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|t| t * t).sum::<f64>() * scale + sd * rng.normal())
        .collect())
}

/// Largest off-diagonal |X_i·X_j|; 0.0 for a single row.
pub fn max_offdiag_dot(x: &Array2<f64>) -> f64 {
    let n = x.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max(x.row(i).dot(&x.row(j)).abs());
        }
    }
    worst
}

const DATASET_MAGIC: &str = "# edge-dynamics dataset v1";

/// Write a dataset as CSV: a commented metadata block, an `x_1,..,x_d,y`
/// header row, one row per sample, then an optional commented ground-truth
/// block. Numbers are shortest round-trip decimal, so save→load is bitwise.
pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(DATASET_MAGIC);
    out.push('\n');
    out.push_str(&format!("# kind={}\n", ds.kind));
    out.push_str(&format!("# seed={}\n", ds.seed));
    out.push_str(&format!("# noise_var={}\n", ds.noise_var));
    let m = ds.ground_truth.as_ref().map_or(0, |u| u.ncols());
    out.push_str(&format!("# d={} m={} n={}\n", ds.d(), m, ds.n()));
    for j in 1..=ds.d() {
        out.push_str(&format!("x_{j},"));
    }
    out.push_str("y\n");
    for (row, yi) in ds.x.rows().into_iter().zip(&ds.y) {
        for v in row.iter() {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{yi}\n"));
    }
    if let Some(u) = &ds.ground_truth {
        out.push_str(&format!(
            "# ground_truth rows={} cols={}\n",
            u.nrows(),
            u.ncols()
        ));
        for row in u.rows() {
            let vals: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&format!("# {}\n", vals.join(",")));
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

fn parse_field(tok: &str, line: usize, col: usize) -> Result<f64> {
    tok.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        col,
        msg: format!("expected a number, found {tok:?}"),
    })
}

fn meta_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.strip_prefix("# ")
        .and_then(|rest| rest.strip_prefix(key))
        .and_then(|rest| rest.strip_prefix('='))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        col: 1,
        msg: "empty file".into(),
    })?;
    if first != DATASET_MAGIC {
        return Err(Error::Parse {
            line: 1,
            col: 1,
            msg: format!("expected {DATASET_MAGIC:?}"),
        });
    }

    let mut kind: Option<DataKind> = None;
    let mut seed: Option<u64> = None;
    let mut noise_var: Option<f64> = None;
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut header_line = 0usize;
    for (idx, line) in lines.by_ref() {
        let lineno = idx + 1;
        if let Some(v) = meta_value(line, "kind") {
            kind = Some(v.parse()?);
        } else if let Some(v) = meta_value(line, "seed") {
            seed = Some(v.parse().map_err(|_| Error::Parse {
                line: lineno,
                col: 1,
                msg: format!("bad seed {v:?}"),
            })?);
        } else if let Some(v) = meta_value(line, "noise_var") {
            noise_var = Some(parse_field(v, lineno, 1)?);
        } else if let Some(v) = meta_value(line, "d") {
            // parse "d=.. m=.. n=.." with the "d=" prefix already stripped
            let mut d = 0usize;
            let mut m = 0usize;
            let mut n = 0usize;
            let full = format!("d={v}");
            for piece in full.split_whitespace() {
                let (k, val) = piece.split_once('=').ok_or(Error::Parse {
                    line: lineno,
                    col: 1,
                    msg: format!("bad dimension field {piece:?}"),
                })?;
                let parsed: usize = val.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    col: 1,
                    msg: format!("bad dimension value {val:?}"),
                })?;
                match k {
                    "d" => d = parsed,
                    "m" => m = parsed,
                    "n" => n = parsed,
                    _ => {
                        return Err(Error::Parse {
                            line: lineno,
                            col: 1,
                            msg: format!("unknown dimension key {k:?}"),
                        })
                    }
                }
            }
            dims = Some((d, m, n));
        } else if !line.starts_with('#') {
            header_line = lineno;
            // this is the column header row; validate its shape below
            let fields: Vec<&str> = line.split(',').collect();
            let (d, _, _) = dims.ok_or(Error::Parse {
                line: lineno,
                col: 1,
                msg: "missing `# d=.. m=.. n=..` before header".into(),
            })?;
            if fields.len() != d + 1 || fields.last() != Some(&"y") {
                return Err(Error::Parse {
                    line: lineno,
                    col: fields.len(),
                    msg: format!("header must be x_1..x_{d},y"),
                });
            }
            break;
        }
    }
    let kind = kind.ok_or(Error::Parse {
        line: header_line,
        col: 1,
        msg: "missing `# kind=` field".into(),
    })?;
    let seed = seed.ok_or(Error::Parse {
        line: header_line,
        col: 1,
        msg: "missing `# seed=` field".into(),
    })?;
    let noise_var = noise_var.ok_or(Error::Parse {
        line: header_line,
        col: 1,
        msg: "missing `# noise_var=` field".into(),
    })?;
    let (d, m, n) = dims.ok_or(Error::Parse {
        line: header_line,
        col: 1,
        msg: "missing `# d=.. m=.. n=..` field".into(),
    })?;

    let mut x = Array2::zeros((n, d));
    let mut y = vec![0.0; n];
    let mut row = 0usize;
    let mut gt: Option<Array2<f64>> = None;
    let mut gt_row = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if let Some(v) = meta_value(line, "ground_truth rows") {
            // "# ground_truth rows=R cols=C"
            let full = format!("rows={v}");
            let mut rows = 0usize;
            let mut cols = 0usize;
            for piece in full.split_whitespace() {
                let (k, val) = piece.split_once('=').ok_or(Error::Parse {
                    line: lineno,
                    col: 1,
                    msg: format!("bad ground-truth field {piece:?}"),
                })?;
                let parsed: usize = val.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    col: 1,
                    msg: format!("bad ground-truth value {val:?}"),
                })?;
                match k {
                    "rows" => rows = parsed,
                    "cols" => cols = parsed,
                    _ => {
                        return Err(Error::Parse {
                            line: lineno,
                            col: 1,
                            msg: format!("unknown ground-truth key {k:?}"),
                        })
                    }
                }
            }
            if rows != d || cols != m {
                return Err(Error::Parse {
                    line: lineno,
                    col: 1,
                    msg: format!("ground truth must be {d}×{m}, file says {rows}×{cols}"),
                });
            }
            gt = Some(Array2::zeros((rows, cols)));
            gt_row = 0;
        } else if let Some(vals) = line.strip_prefix("# ") {
            if let Some(u) = gt.as_mut() {
                if gt_row >= u.nrows() {
                    return Err(Error::Parse {
                        line: lineno,
                        col: 1,
                        msg: "too many ground-truth rows".into(),
                    });
                }
                let fields: Vec<&str> = vals.split(',').collect();
                if fields.len() != u.ncols() {
                    return Err(Error::Parse {
                        line: lineno,
                        col: fields.len(),
                        msg: format!("expected {} ground-truth values", u.ncols()),
                    });
                }
                for (c, tok) in fields.iter().enumerate() {
                    u[(gt_row, c)] = parse_field(tok, lineno, c + 1)?;
                }
                gt_row += 1;
            }
        } else if line.starts_with('#') || line.trim().is_empty() {
            continue;
        } else {
            if row >= n {
                return Err(Error::Parse {
                    line: lineno,
                    col: 1,
                    msg: format!("more than n={n} data rows"),
                });
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d + 1 {
                return Err(Error::Parse {
                    line: lineno,
                    col: fields.len(),
                    msg: format!("expected {} fields, found {}", d + 1, fields.len()),
                });
            }
            for (c, tok) in fields.iter().take(d).enumerate() {
                x[(row, c)] = parse_field(tok, lineno, c + 1)?;
            }
            y[row] = parse_field(fields[d], lineno, d + 1)?;
            row += 1;
        }
    }
    if row != n {
        return Err(Error::Parse {
            line: 0,
            col: 1,
            msg: format!("truncated file: found {row} of n={n} data rows"),
        });
    }
    if let Some(u) = &gt {
        if gt_row != u.nrows() {
            return Err(Error::Parse {
                line: 0,
                col: 1,
                msg: format!(
                    "truncated ground truth: found {gt_row} of {} rows",
                    u.nrows()
                ),
            });
        }
    }
    if kind == DataKind::OrthonormalRows {
        let worst = max_offdiag_dot(&x);
        if worst > 1e-10 {
            return Err(Error::Orthogonality {
                i: 0,
                j: 0,
                dot: worst,
                tol: 1e-10,
            });
        }
        for (i, r) in x.rows().into_iter().enumerate() {
            let sq = r.dot(&r);
            if (sq - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParam(format!(
                    "row {i} of an orthonormal design has squared norm {sq}"
                )));
            }
        }
    }
    Ok(Dataset {
        x,
        y,
        kind,
        noise_var,
        seed,
        ground_truth: gt,
    })
}
