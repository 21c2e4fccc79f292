//! Self-contained SVG line plots (no external assets, no scripts).
//!
//! Coordinates are formatted to fixed precision so plot files are
//! byte-stable for a given input.

use std::fmt::Write as _;
use std::path::Path;

use crate::util::fmt_f64;
use crate::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 70.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
struct Range {
    min: f64,
    max: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Range {
        let mut r = Range {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        };
        for v in values {
            if v.is_finite() {
                r.min = r.min.min(v);
                r.max = r.max.max(v);
            }
        }
        if !r.min.is_finite() {
            r = Range { min: 0.0, max: 1.0 };
        }
        if r.max - r.min < 1e-12 {
            r.min -= 1.0;
            r.max += 1.0;
        }
        r
    }

    fn to_px(self, v: f64, lo_px: f64, hi_px: f64) -> f64 {
        lo_px + (v - self.min) / (self.max - self.min) * (hi_px - lo_px)
    }
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn axis_ticks(r: &Range, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| r.min + (r.max - r.min) * i as f64 / n as f64)
        .collect()
}

fn svg_header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    )
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn polyline(points: &[(f64, f64)], xr: &Range, yr: &Range, color: &str, dashed: bool) -> String {
    let mut coords = String::new();
    for (x, y) in points {
        let sx = xr.to_px(*x, MARGIN_L, WIDTH - MARGIN_R);
        let sy = yr.to_px(*y, HEIGHT - MARGIN_B, MARGIN_T);
        let _ = write!(coords, "{},{} ", px(sx), px(sy));
    }
    let dash = if dashed {
        " stroke-dasharray=\"6 3\""
    } else {
        ""
    };
    let mut out = format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash} points=\"{}\"/>\n",
        coords.trim_end()
    );
    for (x, y) in points {
        let sx = xr.to_px(*x, MARGIN_L, WIDTH - MARGIN_R);
        let sy = yr.to_px(*y, HEIGHT - MARGIN_B, MARGIN_T);
        let _ = writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>",
            px(sx),
            px(sy)
        );
    }
    out
}

fn x_axis(xr: &Range, label: &str) -> String {
    let y0 = HEIGHT - MARGIN_B;
    let mut out = format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        px(MARGIN_L),
        px(y0),
        px(WIDTH - MARGIN_R),
        px(y0)
    );
    for t in axis_ticks(xr, 5) {
        let sx = xr.to_px(t, MARGIN_L, WIDTH - MARGIN_R);
        let _ = write!(
            out,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n\
             <text x=\"{0}\" y=\"{3}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{4}</text>\n",
            px(sx),
            px(y0),
            px(y0 + 5.0),
            px(y0 + 18.0),
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        px((MARGIN_L + WIDTH - MARGIN_R) / 2.0),
        px(HEIGHT - 12.0),
        xml_escape(label)
    );
    out
}

fn y_axis(yr: &Range, label: &str, side_right: bool, color: &str) -> String {
    let x0 = if side_right {
        WIDTH - MARGIN_R
    } else {
        MARGIN_L
    };
    let mut out = format!(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"{color}\"/>\n",
        px(x0),
        px(MARGIN_T),
        px(HEIGHT - MARGIN_B)
    );
    let (tick_dx, anchor, text_dx) = if side_right {
        (5.0, "start", 8.0)
    } else {
        (-5.0, "end", -8.0)
    };
    for t in axis_ticks(yr, 5) {
        let sy = yr.to_px(t, HEIGHT - MARGIN_B, MARGIN_T);
        let _ = write!(
            out,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{color}\"/>\n\
             <text x=\"{3}\" y=\"{4}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{anchor}\" fill=\"{color}\">{5}</text>\n",
            px(x0),
            px(sy),
            px(x0 + tick_dx),
            px(x0 + text_dx),
            px(sy + 4.0),
            fmt_tick(t)
        );
    }
    let (lx, rot) = if side_right {
        (WIDTH - 16.0, 90.0)
    } else {
        (18.0, -90.0)
    };
    let ly = (MARGIN_T + HEIGHT - MARGIN_B) / 2.0;
    let _ = writeln!(
        out,
        "<text x=\"{0}\" y=\"{1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" fill=\"{color}\" transform=\"rotate({rot} {0} {1})\">{2}</text>",
        px(lx),
        px(ly),
        xml_escape(label)
    );
    out
}

fn fmt_tick(v: f64) -> String {
    let rounded = (v * 100.0).round() / 100.0;
    fmt_f64(rounded)
}

fn legend(entries: &[(String, &str)]) -> String {
    let mut out = String::new();
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = MARGIN_T + 6.0 + 18.0 * i as f64;
        let _ = write!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"3\" fill=\"{color}\"/>\n\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            px(MARGIN_L + 10.0),
            px(y),
            px(MARGIN_L + 28.0),
            px(y + 5.0),
            xml_escape(label)
        );
    }
    out
}

/// Multi-series line chart with one shared y axis.
pub fn line_chart(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> Result<()> {
    let xr = Range::of(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let yr = Range::of(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let mut svg = svg_header(title);
    svg.push_str(&x_axis(&xr, x_label));
    svg.push_str(&y_axis(&yr, y_label, false, "black"));
    let mut entries = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        svg.push_str(&polyline(&s.points, &xr, &yr, color, false));
        entries.push((s.label.clone(), color));
    }
    if series.len() > 1 {
        svg.push_str(&legend(&entries));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

/// Twin-axis overlay: the left series against the left axis, the right
/// series (dashed) against an independent right axis.
pub fn twin_axis_chart(
    path: &Path,
    title: &str,
    x_label: &str,
    left: &Series,
    left_label: &str,
    right: &Series,
    right_label: &str,
) -> Result<()> {
    let xr = Range::of(
        left.points
            .iter()
            .map(|p| p.0)
            .chain(right.points.iter().map(|p| p.0)),
    );
    let lyr = Range::of(left.points.iter().map(|p| p.1));
    let ryr = Range::of(right.points.iter().map(|p| p.1));
    let (lc, rc) = (PALETTE[0], PALETTE[1]);
    let mut svg = svg_header(title);
    svg.push_str(&x_axis(&xr, x_label));
    svg.push_str(&y_axis(&lyr, left_label, false, lc));
    svg.push_str(&y_axis(&ryr, right_label, true, rc));
    svg.push_str(&polyline(&left.points, &xr, &lyr, lc, false));
    svg.push_str(&polyline(&right.points, &xr, &ryr, rc, true));
    svg.push_str(&legend(&[
        (left.label.clone(), lc),
        (right.label.clone(), rc),
    ]));
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_deterministic_and_self_contained() {
        let dir = tempfile::tempdir().unwrap();
        let s = Series {
            label: "ivs".into(),
            points: vec![(15.0, 92.0), (25.0, 40.0), (35.0, 88.0)],
        };
        let p1 = dir.path().join("a.svg");
        let p2 = dir.path().join("b.svg");
        line_chart(
            &p1,
            "IVS vs Q",
            "q (W/cm^2)",
            "percent",
            std::slice::from_ref(&s),
        )
        .unwrap();
        line_chart(
            &p2,
            "IVS vs Q",
            "q (W/cm^2)",
            "percent",
            std::slice::from_ref(&s),
        )
        .unwrap();
        let a = std::fs::read(&p1).unwrap();
        assert_eq!(a, std::fs::read(&p2).unwrap());
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(
            !text.contains("http://") || text.contains("xmlns"),
            "no external refs"
        );
        assert!(text.contains("polyline"));

        let t = dir.path().join("twin.svg");
        let phi = Series {
            label: "phi".into(),
            points: vec![(15.0, 0.4), (25.0, 0.0), (35.0, 0.3)],
        };
        twin_axis_chart(&t, "IVS and phi", "q", &s, "IVS", &phi, "phi").unwrap();
        let text = std::fs::read_to_string(&t).unwrap();
        assert!(text.contains("stroke-dasharray"));
        // Degenerate flat range must not divide by zero.
        let flat = Series {
            label: "flat".into(),
            points: vec![(1.0, 5.0), (2.0, 5.0)],
        };
        line_chart(&dir.path().join("flat.svg"), "t", "x", "y", &[flat]).unwrap();
    }
}
