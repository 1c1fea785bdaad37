//! Variant lattice enumeration and constraint-based down-selection.

use std::fmt::Write as _;

use crate::actuator::{estimated_elongation, ActuatorSpec, CellDisplacementTable, CellShape};
use crate::error::Result;

pub const PAPER_CELL_LENGTHS_CM: [f64; 4] = [1.0, 2.0, 3.0, 4.0];
pub const PAPER_CELL_COUNTS: [u32; 6] = [1, 6, 8, 10, 12, 14];

/// Largest cell dimension that fits an infant's arm (cm).
pub const MAX_CELL_DIMENSION_CM: f64 = 4.0;
/// Smallest cell length that can be heat-sealed reliably (cm).
pub const MIN_CELL_LENGTH_CM: f64 = 3.0;
pub const MIN_CELLS: u32 = 8;
pub const MAX_CELLS: u32 = 12;

/// A named admissibility rule over actuator variants.
pub struct Constraint {
    pub id: &'static str,
    pub rationale: &'static str,
    pub anchor: &'static str,
    predicate: fn(&ActuatorSpec) -> bool,
}

impl Constraint {
    pub fn new(
        id: &'static str,
        rationale: &'static str,
        anchor: &'static str,
        predicate: fn(&ActuatorSpec) -> bool,
    ) -> Self {
        Constraint {
            id,
            rationale,
            anchor,
            predicate,
        }
    }

    /// True when the variant satisfies the constraint.
    pub fn holds(&self, spec: &ActuatorSpec) -> bool {
        (self.predicate)(spec)
    }
}

impl std::fmt::Debug for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Constraint").field("id", &self.id).finish()
    }
}

/// Shapes × {1,2,3,4} cm × {1,6,8,10,12,14} cells in (shape, p, n) order.
pub fn enumerate_paper_space() -> Vec<ActuatorSpec> {
    enumerate(&CellShape::ALL, &PAPER_CELL_LENGTHS_CM, &PAPER_CELL_COUNTS)
}

pub fn enumerate(shapes: &[CellShape], lengths: &[f64], counts: &[u32]) -> Vec<ActuatorSpec> {
    let mut out = Vec::with_capacity(shapes.len() * lengths.len() * counts.len());
    for &shape in shapes {
        for &p in lengths {
            for &n in counts {
                out.push(ActuatorSpec::new(shape, p, n));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

pub fn paper_constraints() -> Vec<Constraint> {
    vec![
        Constraint::new(
            "C1",
            "maximum cell dimension must fit the infant arm diameter",
            "designs with maximum cell dimension over 4 cm ruled out",
            |s| s.cell_length_cm <= MAX_CELL_DIMENSION_CM,
        ),
        Constraint::new(
            "C2",
            "cells shorter than 3 cm cannot be sealed reliably",
            "1 cm and 2 cm cell length actuators excluded",
            |s| s.cell_length_cm >= MIN_CELL_LENGTH_CM,
        ),
        Constraint::new(
            "C3",
            "fewer than 8 cells cannot provide the minimum elongation",
            "6-cell actuators excluded",
            |s| s.n_cells >= MIN_CELLS,
        ),
        Constraint::new(
            "C4",
            "more than 12 cells is too bulky and too slow to fill",
            "14-cell actuators excluded",
            |s| s.n_cells <= MAX_CELLS,
        ),
    ]
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SelectionReport {
    pub viable: Vec<ActuatorSpec>,
    /// Each rejected variant with the ids of every constraint it violates.
    pub rejected: Vec<(ActuatorSpec, Vec<&'static str>)>,
}

impl SelectionReport {
    /// All variants in input order with their violations (empty when viable).
    pub fn rows(&self) -> Vec<(ActuatorSpec, Vec<&'static str>)> {
        let mut rows: Vec<_> = self
            .viable
            .iter()
            .map(|s| (*s, Vec::new()))
            .chain(self.rejected.iter().cloned())
            .collect();
        rows.sort_by_key(|r| r.0);
        rows
    }

    /// `shape,p_cm,n,viable,violations` with violations joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("shape,p_cm,n,viable,violations\n");
        for (spec, violations) in self.rows() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                spec.shape.name(),
                spec.cell_length_cm,
                spec.n_cells,
                violations.is_empty(),
                violations.join(";")
            );
        }
        out
    }
}

pub fn violations(spec: &ActuatorSpec, constraints: &[Constraint]) -> Vec<&'static str> {
    constraints.iter().filter(|c| !c.holds(spec)).map(|c| c.id).collect()
}

pub fn downselect(specs: &[ActuatorSpec], constraints: &[Constraint]) -> SelectionReport {
    let mut report = SelectionReport::default();
    for spec in specs {
        let v = violations(spec, constraints);
        if v.is_empty() {
            report.viable.push(*spec);
        } else {
            report.rejected.push((*spec, v));
        }
    }
    report
}

/// Arc length (cm) the actuator must cover to swing the joint through
/// `theta_deg` at attachment distance `d_cm`.
pub fn required_elongation(theta_deg: f64, d_cm: f64) -> f64 {
    d_cm * theta_deg.to_radians()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Screen {
    Pass,
    Marginal,
}

/// Advisory check of estimated elongation against the arc requirement.
/// Never used to reject variants.
pub fn advisory_elongation_screen(
    spec: &ActuatorSpec,
    table: &CellDisplacementTable,
    d_cm: f64,
    theta_deg: f64,
) -> Result<Screen> {
    let have = estimated_elongation(spec, table)?;
    let need = required_elongation(theta_deg, d_cm);
    Ok(if have >= need { Screen::Pass } else { Screen::Marginal })
}
