//! Minimal hand-written SVG plots of work loops in the (x, load) plane.
//!
//! Output is a fixed 800×600 canvas with linear axes autoscaled to the data
//! plus 5% margins. Every number is printed with fixed precision so identical
//! inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::plants::ElasticityProfile;
use crate::work_loop::WorkLoop;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const PLOT_LEFT: f64 = 80.0;
const PLOT_RIGHT: f64 = 620.0;
const PLOT_TOP: f64 = 40.0;
const PLOT_BOTTOM: f64 = 540.0;
const OVERLAY_POINTS: usize = 201;
const TICKS: usize = 5;

const LOOP_COLOURS: [&str; 6] = [
    "#1f4e99", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e", "#17202a",
];
const OVERLAY_COLOURS: [&str; 6] = [
    "#5dade2", "#ec7063", "#58d68d", "#af7ac5", "#f5b041", "#808b96",
];

#[derive(Debug, Error)]
pub enum SvgError {
    #[error("nothing to plot: at least one loop is required")]
    NoLoops,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A labelled loop for the plot.
#[derive(Debug, Clone, Copy)]
pub struct LoopTrace<'a> {
    pub label: &'a str,
    pub curve: &'a WorkLoop,
}

/// A labelled elasticity, drawn as `−Fs(x)` over the loops' x-range.
#[derive(Debug, Clone, Copy)]
pub struct OverlayTrace<'a> {
    pub label: &'a str,
    pub profile: &'a ElasticityProfile,
}

struct Polyline {
    label: String,
    colour: &'static str,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

/// Writes the plot to `path`.
pub fn render_svg(
    loops: &[LoopTrace<'_>],
    overlays: &[OverlayTrace<'_>],
    path: &Path,
) -> Result<(), SvgError> {
    let doc = svg_document(loops, overlays)?;
    fs::write(path, doc).map_err(|source| SvgError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// The SVG text for the plot.
pub fn svg_document(
    loops: &[LoopTrace<'_>],
    overlays: &[OverlayTrace<'_>],
) -> Result<String, SvgError> {
    if loops.is_empty() {
        return Err(SvgError::NoLoops);
    }
    let mut lines = Vec::new();
    for (i, tr) in loops.iter().enumerate() {
        let wl = tr.curve;
        // closed outline: upper branch left to right, lower branch back
        let mut points: Vec<(f64, f64)> = wl
            .x_grid()
            .iter()
            .copied()
            .zip(wl.upper().iter().copied())
            .collect();
        points.extend(
            wl.x_grid()
                .iter()
                .copied()
                .zip(wl.lower().iter().copied())
                .rev(),
        );
        lines.push(Polyline {
            label: tr.label.to_string(),
            colour: LOOP_COLOURS[i % LOOP_COLOURS.len()],
            dashed: false,
            points,
        });
    }
    let x_lo = loops
        .iter()
        .map(|t| t.curve.min_x())
        .fold(f64::INFINITY, f64::min);
    let x_hi = loops
        .iter()
        .map(|t| t.curve.max_x())
        .fold(f64::NEG_INFINITY, f64::max);
    for (i, ov) in overlays.iter().enumerate() {
        let (lo, hi) = match ov.profile.span() {
            Some((a, b)) => (a.max(x_lo), b.min(x_hi)),
            None => (x_lo, x_hi),
        };
        if !(hi > lo) {
            continue;
        }
        let points = (0..OVERLAY_POINTS)
            .map(|k| {
                let x = lo + (hi - lo) * k as f64 / (OVERLAY_POINTS - 1) as f64;
                (x, -ov.profile.eval_clamped(x))
            })
            .collect();
        lines.push(Polyline {
            label: ov.label.to_string(),
            colour: OVERLAY_COLOURS[i % OVERLAY_COLOURS.len()],
            dashed: true,
            points,
        });
    }
    for line in &lines {
        if line
            .points
            .iter()
            .any(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(SvgError::NonFinite(line.label.clone()));
        }
    }

    let (xmin, xmax) = padded_range(lines.iter().flat_map(|l| l.points.iter().map(|p| p.0)));
    let (ymin, ymax) = padded_range(lines.iter().flat_map(|l| l.points.iter().map(|p| p.1)));
    let sx = |x: f64| PLOT_LEFT + (x - xmin) / (xmax - xmin) * (PLOT_RIGHT - PLOT_LEFT);
    let sy = |y: f64| PLOT_BOTTOM - (y - ymin) / (ymax - ymin) * (PLOT_BOTTOM - PLOT_TOP);

    let mut s = String::new();
    // writing into a String cannot fail
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{PLOT_LEFT}" y="{PLOT_TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        PLOT_RIGHT - PLOT_LEFT,
        PLOT_BOTTOM - PLOT_TOP
    );
    if xmin < 0.0 && xmax > 0.0 {
        let x0 = sx(0.0);
        let _ = writeln!(
            s,
            r##"<line x1="{x0:.3}" y1="{PLOT_TOP}" x2="{x0:.3}" y2="{PLOT_BOTTOM}" stroke="#cccccc"/>"##
        );
    }
    if ymin < 0.0 && ymax > 0.0 {
        let y0 = sy(0.0);
        let _ = writeln!(
            s,
            r##"<line x1="{PLOT_LEFT}" y1="{y0:.3}" x2="{PLOT_RIGHT}" y2="{y0:.3}" stroke="#cccccc"/>"##
        );
    }
    for k in 0..TICKS {
        let f = k as f64 / (TICKS - 1) as f64;
        let xv = xmin + f * (xmax - xmin);
        let yv = ymin + f * (ymax - ymin);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.3}" y1="{PLOT_BOTTOM}" x2="{px:.3}" y2="{:.3}" stroke="black"/>"#,
            PLOT_BOTTOM + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{px:.3}" y="{:.3}" font-size="12" text-anchor="middle">{}</text>"#,
            PLOT_BOTTOM + 20.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.3}" y1="{py:.3}" x2="{PLOT_LEFT}" y2="{py:.3}" stroke="black"/>"#,
            PLOT_LEFT - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-size="12" text-anchor="end">{}</text>"#,
            PLOT_LEFT - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-size="14" text-anchor="middle">x</text>"#,
        0.5 * (PLOT_LEFT + PLOT_RIGHT),
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.3}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {:.3})">load</text>"#,
        0.5 * (PLOT_TOP + PLOT_BOTTOM),
        0.5 * (PLOT_TOP + PLOT_BOTTOM)
    );

    for line in &lines {
        let pts: Vec<String> = line
            .points
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y)))
            .collect();
        let (tag, dash) = if line.dashed {
            ("polyline", r#" stroke-dasharray="6 4""#)
        } else {
            ("polygon", "")
        };
        let _ = writeln!(
            s,
            r#"<{tag} points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
            pts.join(" "),
            line.colour
        );
    }

    for (i, line) in lines.iter().enumerate() {
        let y = PLOT_TOP + 10.0 + 20.0 * i as f64;
        let dash = if line.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<line x1="635" y1="{y:.3}" x2="665" y2="{y:.3}" stroke="{}" stroke-width="1.5"{dash}/>"#,
            line.colour
        );
        let _ = writeln!(
            s,
            r#"<text x="672" y="{:.3}" font-size="12">{}</text>"#,
            y + 4.0,
            escape(&line.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    let span = hi - lo;
    // degenerate data still needs a non-zero axis
    let pad = if span > 0.0 {
        0.05 * span
    } else {
        0.5 * lo.abs().max(1.0)
    };
    (lo - pad, hi + pad)
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::PeriodicSignal;
    use crate::work_loop::{build_loop, BranchKind};

    fn ellipse(delta: f64) -> WorkLoop {
        let s = PeriodicSignal::simple_harmonic(1.0, 2.0).unwrap();
        let load = |t: f64| s.acceleration(t) + delta * s.velocity(t);
        build_loop(&s, load, BranchKind::InelasticLoad, 65).unwrap()
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(svg_document(&[], &[]), Err(SvgError::NoLoops)));
    }

    #[test]
    fn zero_area_loop_draws_one_curve_twice() {
        let wl = ellipse(0.0);
        let doc = svg_document(
            &[LoopTrace {
                label: "flat",
                curve: &wl,
            }],
            &[],
        )
        .unwrap();
        let poly = doc.lines().find(|l| l.starts_with("<polygon")).unwrap();
        let start = poly.find("points=\"").unwrap() + 8;
        let end = poly[start..].find('"').unwrap() + start;
        let pts: Vec<&str> = poly[start..end].split(' ').collect();
        let n = pts.len() / 2;
        let forward = &pts[..n];
        let mut back: Vec<&str> = pts[n..].to_vec();
        back.reverse();
        assert_eq!(forward, &back[..]);
    }

    #[test]
    fn deterministic_and_fixed_canvas() {
        let wl = ellipse(2.0);
        let fs = ElasticityProfile::duffing(4.0, 0.0);
        let loops = [LoopTrace {
            label: "G <a&b>",
            curve: &wl,
        }];
        let ovs = [OverlayTrace {
            label: "-Fs",
            profile: &fs,
        }];
        let a = svg_document(&loops, &ovs).unwrap();
        let b = svg_document(&loops, &ovs).unwrap();
        assert_eq!(a, b);
        assert!(
            a.starts_with(r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="600""#)
        );
        assert!(a.contains("G &lt;a&amp;b&gt;"));
        assert!(a.contains("stroke-dasharray"));
    }

    #[test]
    fn writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("loop.svg");
        let wl = ellipse(1.0);
        render_svg(
            &[LoopTrace {
                label: "G",
                curve: &wl,
            }],
            &[],
            &path,
        )
        .unwrap();
        assert!(fs::read_to_string(&path).unwrap().ends_with("</svg>\n"));
    }
}
