//! Minimal self-contained SVG renderer for the two figure kinds the binary
//! emits: line plots (orbits, loss curves) and dense scatters (bifurcation
//! diagrams). No styling knobs beyond what those figures need.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use edge_dynamics::Result;

const W: f64 = 800.0;
const H: f64 = 500.0;
const MARGIN: f64 = 60.0;
/// Values at or below this are clipped before a log transform; f64 has no
/// positive values below it anyway.
const LOG_CLIP: f64 = 1e-300;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn from_bounds(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Frame {
        let pad = |lo: f64, hi: f64| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, lo + 0.5)
            }
        };
        let (x_min, x_max) = pad(x_min, x_max);
        let (y_min, y_max) = pad(y_min, y_max);
        Frame {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / (self.x_max - self.x_min) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y_min) / (self.y_max - self.y_min) * (H - 2.0 * MARGIN)
    }
}

fn open_svg(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"monospace\" font-size=\"12\">\n<title>{title}</title>\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    )
}

fn axes(s: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let _ = writeln!(
        s,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
         fill=\"none\" stroke=\"black\"/>",
        MARGIN,
        MARGIN,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    for k in 0..=4 {
        let fx = frame.x_min + (frame.x_max - frame.x_min) * k as f64 / 4.0;
        let fy = frame.y_min + (frame.y_max - frame.y_min) * k as f64 / 4.0;
        let px = frame.px(fx);
        let py = frame.py(fy);
        let _ = writeln!(
            s,
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\
             <text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{fx:.4}</text>",
            H - MARGIN,
            H - MARGIN + 5.0,
            H - MARGIN + 20.0
        );
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"black\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{fy:.4}</text>",
            MARGIN - 5.0,
            MARGIN,
            MARGIN - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{x_label}</text>",
        W / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        s,
        "<text x=\"15\" y=\"{:.2}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 15 {:.2})\">{y_label}</text>",
        H / 2.0,
        H / 2.0
    );
}

/// One polyline through (x, y) pairs. With `log_y` the ordinate is plotted
/// as log10(max(y, 1e-300)) and the label says so.
pub fn write_line_svg(
    path: &Path,
    points: &[(f64, f64)],
    x_label: &str,
    y_label: &str,
    log_y: bool,
) -> Result<()> {
    let transformed: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| (x, if log_y { y.max(LOG_CLIP).log10() } else { y }))
        .collect();
    let y_label = if log_y {
        format!("log10 {y_label}")
    } else {
        y_label.to_string()
    };
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &transformed {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let frame = Frame::from_bounds(x0, x1, y0, y1);
    let mut s = open_svg(&y_label);
    axes(&mut s, &frame, x_label, &y_label);
    s.push_str("<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\" points=\"");
    for &(x, y) in &transformed {
        let _ = write!(s, "{:.2},{:.2} ", frame.px(x), frame.py(y));
    }
    s.push_str("\"/>\n</svg>\n");
    fs::write(path, s)?;
    Ok(())
}

/// Dense point cloud. Inputs beyond `max_points` are thinned with a fixed
/// stride so the file stays viewable; thinning is deterministic.
pub fn write_scatter_svg(
    path: &Path,
    points: &[(f64, f64)],
    x_label: &str,
    y_label: &str,
    max_points: usize,
) -> Result<()> {
    let stride = points.len().div_ceil(max_points.max(1)).max(1);
    let kept: Vec<(f64, f64)> = points.iter().copied().step_by(stride).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &kept {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let frame = Frame::from_bounds(x0, x1, y0, y1);
    let mut s = open_svg(y_label);
    axes(&mut s, &frame, x_label, y_label);
    for &(x, y) in &kept {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"0.6\" fill=\"black\"/>",
            frame.px(x),
            frame.py(y)
        );
    }
    s.push_str("</svg>\n");
    fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_deterministic_and_well_formed() {
        let dir = tempfile::tempdir().unwrap();
        let pts: Vec<(f64, f64)> = (0..40).map(|i| (i as f64, (i as f64).sin())).collect();
        let (p1, p2) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
        write_line_svg(&p1, &pts, "step", "value", false).unwrap();
        write_line_svg(&p2, &pts, "step", "value", false).unwrap();
        let s = fs::read_to_string(&p1).unwrap();
        assert_eq!(s, fs::read_to_string(&p2).unwrap());
        assert!(s.starts_with("<svg"));
        assert!(s.ends_with("</svg>\n"));
        assert!(s.contains("<polyline"));
        assert!(!s.contains("NaN"));
    }

    #[test]
    fn log_scale_survives_exact_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.svg");
        let pts = vec![(0.0, 1.0), (1.0, 0.0), (2.0, 1e-12)];
        write_line_svg(&p, &pts, "step", "loss", true).unwrap();
        let s = fs::read_to_string(&p).unwrap();
        assert!(!s.contains("NaN") && !s.contains("inf"));
        assert!(s.contains("log10 loss"));
    }

    #[test]
    fn scatter_thins_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let pts: Vec<(f64, f64)> = (0..5000).map(|i| (i as f64, (i % 7) as f64)).collect();
        let p = dir.path().join("s.svg");
        write_scatter_svg(&p, &pts, "a", "z", 1000).unwrap();
        let s = fs::read_to_string(&p).unwrap();
        let circles = s.matches("<circle").count();
        assert!(circles <= 1000, "kept {circles} points");
        assert!(circles >= 900);
    }
}
