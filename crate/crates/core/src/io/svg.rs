//! Standalone SVG line plots of pressure histories and marker paths.

use std::fmt::Write as _;

use crate::arm::Trajectory;
use crate::error::{Error, Result};
use crate::pneumatics::PressureSeries;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

const PALETTE: [&str; 9] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#17becf",
];

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Rounds to a short fixed representation so documents stay compact and
/// byte-stable.
pub(crate) fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Step of 1, 2 or 5 × 10^k giving roughly `target` intervals.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

#[derive(Clone, Copy, Debug)]
struct Axis {
    lo: f64,
    hi: f64,
    step: f64,
}

impl Axis {
    fn fit(lo: f64, hi: f64) -> Axis {
        let (lo, hi) = if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        };
        let step = tick_step(hi - lo, 6.0);
        Axis {
            lo: (lo / step).floor() * step,
            hi: (hi / step).ceil() * step,
            step,
        }
    }

    fn ticks(&self) -> Vec<f64> {
        let first = (self.lo / self.step - 1e-9).ceil() as i64;
        let last = (self.hi / self.step + 1e-9).floor() as i64;
        (first..=last).map(|i| i as f64 * self.step).collect()
    }
}

struct Frame {
    x: Axis,
    y: Axis,
    /// Forces equal cm-per-pixel on both axes.
    equal_aspect: bool,
}

impl Frame {
    fn plot_w() -> f64 {
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    }

    fn plot_h() -> f64 {
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    }

    fn scales(&self) -> (f64, f64) {
        let sx = Self::plot_w() / (self.x.hi - self.x.lo);
        let sy = Self::plot_h() / (self.y.hi - self.y.lo);
        if self.equal_aspect {
            let s = sx.min(sy);
            (s, s)
        } else {
            (sx, sy)
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let (sx, sy) = self.scales();
        (
            MARGIN_LEFT + (x - self.x.lo) * sx,
            HEIGHT - MARGIN_BOTTOM - (y - self.y.lo) * sy,
        )
    }
}

struct Series<'a> {
    label: &'a str,
    points: Vec<(f64, f64)>,
}

fn render(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>], equal_aspect: bool) -> String {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let mut frame = Frame {
        x: Axis::fit(x0, x1),
        y: Axis::fit(y0, y1),
        equal_aspect,
    };
    if equal_aspect {
        // widen the shorter axis so the square scale still fills the box
        let (sx, sy) = frame.scales();
        let s = sx.min(sy);
        let want_x = Frame::plot_w() / s;
        let want_y = Frame::plot_h() / s;
        let cx = 0.5 * (frame.x.lo + frame.x.hi);
        let cy = 0.5 * (frame.y.lo + frame.y.hi);
        frame.x = Axis {
            lo: cx - want_x / 2.0,
            hi: cx + want_x / 2.0,
            step: frame.x.step,
        };
        frame.y = Axis {
            lo: cy - want_y / 2.0,
            hi: cy + want_y / 2.0,
            step: frame.y.step,
        };
    }

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(out, "  <title>{}</title>", escape(title));
    let _ = writeln!(
        out,
        r#"  <rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (left, bottom) = (MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM);
    let (right, top) = (MARGIN_LEFT + Frame::plot_w(), MARGIN_TOP);
    let _ = writeln!(
        out,
        r#"  <rect class="plot-area" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        num(left),
        num(top),
        num(right - left),
        num(bottom - top)
    );

    let _ = writeln!(out, r##"  <g class="axes" stroke="#ccc" stroke-width="0.5">"##);
    let tick_text = |v: f64, step: f64| {
        let decimals = if step >= 1.0 {
            0
        } else {
            (-step.log10()).ceil() as usize
        };
        format!("{v:.decimals$}")
    };
    let mut labels = String::new();
    for t in frame.x.ticks() {
        if t < frame.x.lo - 1e-9 || t > frame.x.hi + 1e-9 {
            continue;
        }
        let (px, _) = frame.map(t, frame.y.lo);
        let _ = writeln!(
            out,
            r#"    <line x1="{0}" y1="{1}" x2="{0}" y2="{2}"/>"#,
            num(px),
            num(top),
            num(bottom)
        );
        let _ = writeln!(
            labels,
            r#"    <text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(px),
            num(bottom + 16.0),
            tick_text(t, frame.x.step)
        );
    }
    for t in frame.y.ticks() {
        if t < frame.y.lo - 1e-9 || t > frame.y.hi + 1e-9 {
            continue;
        }
        let (_, py) = frame.map(frame.x.lo, t);
        let _ = writeln!(
            out,
            r#"    <line x1="{1}" y1="{0}" x2="{2}" y2="{0}"/>"#,
            num(py),
            num(left),
            num(right)
        );
        let _ = writeln!(
            labels,
            r#"    <text x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(left - 6.0),
            num(py + 4.0),
            tick_text(t, frame.y.step)
        );
    }
    let _ = writeln!(out, "  </g>");
    let _ = writeln!(out, r#"  <g class="tick-labels">"#);
    out.push_str(&labels);
    let _ = writeln!(out, "  </g>");
    let _ = writeln!(
        out,
        r#"  <text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        num(WIDTH / 2.0 - (MARGIN_RIGHT - MARGIN_LEFT) / 2.0),
        num(MARGIN_TOP - 14.0),
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"  <text class="x-label" x="{}" y="{}" text-anchor="middle">{}</text>"#,
        num((left + right) / 2.0),
        num(HEIGHT - 12.0),
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"  <text class="y-label" x="{0}" y="{1}" text-anchor="middle" transform="rotate(-90 {0} {1})">{2}</text>"#,
        num(18.0),
        num((top + bottom) / 2.0),
        escape(y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| {
                let (px, py) = frame.map(x, y);
                format!("{},{}", num(px), num(py))
            })
            .collect();
        let _ = writeln!(
            out,
            r#"  <polyline class="series" data-label="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            escape(s.label),
            pts.join(" ")
        );
        let ly = MARGIN_TOP + 10.0 + i as f64 * 16.0;
        let _ = writeln!(
            out,
            r#"  <line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="2"/>"#,
            num(right + 12.0),
            num(ly),
            num(right + 32.0)
        );
        let _ = writeln!(
            out,
            r#"  <text x="{}" y="{}">{}</text>"#,
            num(right + 38.0),
            num(ly + 4.0),
            escape(s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Pressure against time, one polyline per series.
pub fn pressure_plot_svg(title: &str, series: &[PressureSeries]) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.t_s.is_empty()) {
        return Err(Error::domain("pressure plot needs at least one non-empty series"));
    }
    let lines: Vec<Series<'_>> = series
        .iter()
        .map(|s| Series {
            label: &s.label,
            points: s.t_s.iter().copied().zip(s.p_kpa.iter().copied()).collect(),
        })
        .collect();
    Ok(render(title, "Time (s)", "Pressure (kPa)", &lines, false))
}

/// End-effector paths in the plane, drawn at equal scale on both axes.
pub fn trajectory_plot_svg(title: &str, trajectories: &[(String, &Trajectory)]) -> Result<String> {
    if trajectories.is_empty() || trajectories.iter().any(|(_, t)| t.is_empty()) {
        return Err(Error::domain("trajectory plot needs at least one non-empty trajectory"));
    }
    let lines: Vec<Series<'_>> = trajectories
        .iter()
        .map(|(label, t)| Series {
            label,
            points: t.end_effector.iter().map(|p| (p.x, p.y)).collect(),
        })
        .collect();
    Ok(render(title, "x (cm)", "y (cm)", &lines, true))
}
