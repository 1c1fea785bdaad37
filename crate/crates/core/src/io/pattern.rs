//! Cut-and-seal patterns for the two fabric panels of an actuator.
//!
//! Document frame: x along the actuator axis, y down, units cm. Each cell sits
//! in a slot of length `p + 2·margin`; neighbouring cells are joined by a
//! straight air channel centred on the shared slot edge, and the last cell
//! has a second channel running out to the tube port on the panel edge.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::actuator::{ActuatorSpec, CellShape};
use crate::arm::Point2;
use crate::error::{Error, Result};
use crate::io::svg::{escape, num};

pub const DEFAULT_CHANNEL_WIDTH_CM: f64 = 0.5;
/// Vertical gap between the two panels in the document.
pub const PANEL_SPACING_CM: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Segment {
    Line {
        from: Point2,
        to: Point2,
    },
    /// Counter-clockwise in the y-down frame means increasing angle.
    Arc {
        center: Point2,
        radius: f64,
        start_rad: f64,
        end_rad: f64,
    },
}

impl Segment {
    pub fn start(&self) -> Point2 {
        match *self {
            Segment::Line { from, .. } => from,
            Segment::Arc {
                center,
                radius,
                start_rad,
                ..
            } => center + Point2::new(start_rad.cos(), start_rad.sin()) * radius,
        }
    }

    pub fn end(&self) -> Point2 {
        match *self {
            Segment::Line { to, .. } => to,
            Segment::Arc {
                center,
                radius,
                end_rad,
                ..
            } => center + Point2::new(end_rad.cos(), end_rad.sin()) * radius,
        }
    }

    /// Axis-aligned bounds as (min, max).
    pub fn bounds(&self) -> (Point2, Point2) {
        match *self {
            Segment::Line { from, to } => (
                Point2::new(from.x.min(to.x), from.y.min(to.y)),
                Point2::new(from.x.max(to.x), from.y.max(to.y)),
            ),
            Segment::Arc {
                center,
                radius,
                start_rad,
                end_rad,
            } => {
                let mut pts = vec![self.start(), self.end()];
                let first = (start_rad / (PI / 2.0)).ceil() as i64;
                let last = (end_rad / (PI / 2.0)).floor() as i64;
                for k in first..=last {
                    let a = k as f64 * PI / 2.0;
                    pts.push(center + Point2::new(a.cos(), a.sin()) * radius);
                }
                let lo = pts.iter().fold(Point2::new(f64::INFINITY, f64::INFINITY), |m, p| {
                    Point2::new(m.x.min(p.x), m.y.min(p.y))
                });
                let hi = pts
                    .iter()
                    .fold(Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY), |m, p| {
                        Point2::new(m.x.max(p.x), m.y.max(p.y))
                    });
                (lo, hi)
            }
        }
    }
}

/// Seal outline of one cell, split into open pieces where channels enter.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSeal {
    pub center: Point2,
    pub pieces: Vec<Vec<Segment>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    pub origin: Point2,
    pub width_cm: f64,
    pub height_cm: f64,
    pub cells: Vec<CellSeal>,
    /// Pairs of parallel seal lines forming each channel, port channel last.
    pub channels: Vec<[Segment; 2]>,
    pub port: Point2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternLayout {
    pub spec: ActuatorSpec,
    pub seam_margin_cm: f64,
    pub channel_width_cm: f64,
    pub panels: [Panel; 2],
}

/// Cell extent across the actuator axis.
pub fn cell_height(shape: CellShape, p: f64) -> f64 {
    match shape {
        CellShape::Rectangle => p / 2.0,
        CellShape::Square | CellShape::Circle => p,
    }
}

/// Closed-form panel size (length, height).
pub fn panel_dimensions(spec: &ActuatorSpec, seam_margin_cm: f64) -> (f64, f64) {
    let p = spec.cell_length_cm;
    (
        spec.n_cells as f64 * (p + 2.0 * seam_margin_cm),
        cell_height(spec.shape, p) + 2.0 * seam_margin_cm,
    )
}

pub fn emit_pattern(spec: &ActuatorSpec, seam_margin_cm: f64, channel_width_cm: f64) -> Result<PatternLayout> {
    spec.validate()?;
    if !(seam_margin_cm >= 0.0 && seam_margin_cm.is_finite()) {
        return Err(Error::Geometry(format!(
            "seam margin {seam_margin_cm} must be finite and non-negative"
        )));
    }
    let h = cell_height(spec.shape, spec.cell_length_cm);
    if !(channel_width_cm > 0.0) {
        return Err(Error::Geometry(format!(
            "channel width {channel_width_cm} must be positive"
        )));
    }
    if channel_width_cm >= h {
        return Err(Error::Geometry(format!(
            "channel width {channel_width_cm} cm does not fit a {} cell of height {h} cm",
            spec.label()
        )));
    }
    let (_, panel_h) = panel_dimensions(spec, seam_margin_cm);
    let first = panel(spec, seam_margin_cm, channel_width_cm, Point2::new(0.0, 0.0));
    let second = panel(
        spec,
        seam_margin_cm,
        channel_width_cm,
        Point2::new(0.0, panel_h + PANEL_SPACING_CM),
    );
    Ok(PatternLayout {
        spec: *spec,
        seam_margin_cm,
        channel_width_cm,
        panels: [first, second],
    })
}

fn line(a: Point2, b: Point2) -> Segment {
    Segment::Line { from: a, to: b }
}

fn panel(spec: &ActuatorSpec, m: f64, w: f64, origin: Point2) -> Panel {
    let p = spec.cell_length_cm;
    let h = cell_height(spec.shape, p);
    let (width, height) = panel_dimensions(spec, m);
    let n = spec.n_cells as usize;
    let cy = origin.y + height / 2.0;
    let half_w = w / 2.0;
    // x offset of a channel mouth from the cell centre
    let mouth = match spec.shape {
        CellShape::Circle => (p / 2.0) * (w / p).asin().cos(),
        _ => p / 2.0,
    };

    let mut cells = Vec::with_capacity(n);
    let mut channels = Vec::with_capacity(n);
    for i in 0..n {
        let cx = origin.x + m + p / 2.0 + i as f64 * (p + 2.0 * m);
        let center = Point2::new(cx, cy);
        cells.push(CellSeal {
            center,
            pieces: cell_pieces(spec.shape, center, p, h, w, i > 0),
        });
        let exit_x = if i + 1 < n {
            cx + p + 2.0 * m - mouth
        } else {
            origin.x + width
        };
        channels.push([
            line(Point2::new(cx + mouth, cy - half_w), Point2::new(exit_x, cy - half_w)),
            line(Point2::new(cx + mouth, cy + half_w), Point2::new(exit_x, cy + half_w)),
        ]);
    }
    Panel {
        origin,
        width_cm: width,
        height_cm: height,
        cells,
        channels,
        port: Point2::new(origin.x + width, cy),
    }
}

/// Outline pieces of a cell with a gap on the right edge and optionally on
/// the left edge. Each piece runs in increasing angle about the centre.
fn cell_pieces(shape: CellShape, c: Point2, p: f64, h: f64, w: f64, left_gap: bool) -> Vec<Vec<Segment>> {
    let hw = w / 2.0;
    match shape {
        CellShape::Circle => {
            let r = p / 2.0;
            let phi = (w / p).asin();
            let arc = |a: f64, b: f64| Segment::Arc {
                center: c,
                radius: r,
                start_rad: a,
                end_rad: b,
            };
            if left_gap {
                vec![vec![arc(phi, PI - phi)], vec![arc(PI + phi, 2.0 * PI - phi)]]
            } else {
                vec![vec![arc(phi, 2.0 * PI - phi)]]
            }
        }
        CellShape::Square | CellShape::Rectangle => {
            let (x0, x1) = (c.x - p / 2.0, c.x + p / 2.0);
            let (y0, y1) = (c.y - h / 2.0, c.y + h / 2.0);
            let right_low = Point2::new(x1, c.y + hw);
            let right_high = Point2::new(x1, c.y - hw);
            let bottom_right = Point2::new(x1, y1);
            let bottom_left = Point2::new(x0, y1);
            let top_left = Point2::new(x0, y0);
            let top_right = Point2::new(x1, y0);
            if left_gap {
                vec![
                    vec![
                        line(right_low, bottom_right),
                        line(bottom_right, bottom_left),
                        line(bottom_left, Point2::new(x0, c.y + hw)),
                    ],
                    vec![
                        line(Point2::new(x0, c.y - hw), top_left),
                        line(top_left, top_right),
                        line(top_right, right_high),
                    ],
                ]
            } else {
                vec![vec![
                    line(right_low, bottom_right),
                    line(bottom_right, bottom_left),
                    line(bottom_left, top_left),
                    line(top_left, top_right),
                    line(top_right, right_high),
                ]]
            }
        }
    }
}

impl Panel {
    /// Bounds of every drawn seal, channel and port, as (min, max).
    pub fn content_bounds(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let segments = self
            .cells
            .iter()
            .flat_map(|c| c.pieces.iter().flatten())
            .chain(self.channels.iter().flatten());
        for s in segments {
            let (a, b) = s.bounds();
            lo = Point2::new(lo.x.min(a.x), lo.y.min(a.y));
            hi = Point2::new(hi.x.max(b.x), hi.y.max(b.y));
        }
        lo = Point2::new(lo.x.min(self.port.x), lo.y.min(self.port.y));
        hi = Point2::new(hi.x.max(self.port.x), hi.y.max(self.port.y));
        (lo, hi)
    }
}

fn path_data(piece: &[Segment]) -> String {
    let mut d = String::new();
    let start = piece[0].start();
    let _ = write!(d, "M {} {}", num(start.x), num(start.y));
    for s in piece {
        match *s {
            Segment::Line { to, .. } => {
                let _ = write!(d, " L {} {}", num(to.x), num(to.y));
            }
            Segment::Arc {
                radius,
                start_rad,
                end_rad,
                ..
            } => {
                let end = s.end();
                let large = if end_rad - start_rad > PI { 1 } else { 0 };
                let _ = write!(
                    d,
                    " A {r} {r} 0 {large} 1 {} {}",
                    num(end.x),
                    num(end.y),
                    r = num(radius)
                );
            }
        }
    }
    d
}

impl PatternLayout {
    /// Width and height of the whole document in cm.
    pub fn document_size(&self) -> (f64, f64) {
        let last = &self.panels[1];
        (last.width_cm, last.origin.y + last.height_cm)
    }

    pub fn to_svg(&self) -> String {
        let (w, h) = self.document_size();
        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}cm" height="{h}cm" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(
            out,
            "  <title>{} cut pattern, seam margin {} cm, channel {} cm</title>",
            escape(&self.spec.label()),
            self.seam_margin_cm,
            self.channel_width_cm
        );
        for (k, panel) in self.panels.iter().enumerate() {
            let _ = writeln!(out, r#"  <g class="panel" id="panel-{}">"#, k + 1);
            let _ = writeln!(
                out,
                r#"    <rect class="cut" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="red" stroke-width="0.02"/>"#,
                panel.origin.x, panel.origin.y, panel.width_cm, panel.height_cm
            );
            for (i, cell) in panel.cells.iter().enumerate() {
                for piece in &cell.pieces {
                    let _ = writeln!(
                        out,
                        r#"    <path class="seal" data-cell="{}" d="{}" fill="none" stroke="black" stroke-width="0.03"/>"#,
                        i + 1,
                        path_data(piece)
                    );
                }
            }
            for (i, pair) in panel.channels.iter().enumerate() {
                let kind = if i + 1 == panel.channels.len() {
                    "port-channel"
                } else {
                    "channel"
                };
                for s in pair {
                    let (a, b) = (s.start(), s.end());
                    let _ = writeln!(
                        out,
                        r#"    <line class="{kind}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="blue" stroke-width="0.03"/>"#,
                        num(a.x),
                        num(a.y),
                        num(b.x),
                        num(b.y)
                    );
                }
            }
            let _ = writeln!(
                out,
                r#"    <circle class="port" cx="{}" cy="{}" r="{}" fill="none" stroke="green" stroke-width="0.03"/>"#,
                num(panel.port.x),
                num(panel.port.y),
                num(self.channel_width_cm / 2.0)
            );
            let _ = writeln!(out, "  </g>");
        }
        out.push_str("</svg>\n");
        out
    }
}
