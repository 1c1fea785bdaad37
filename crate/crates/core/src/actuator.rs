//! Geometry and quasi-static elongation, volume and mass of a multi-cell
//! bellow actuator.
//!
//! A variant is described by its cell shape, its cell length `p` (side of a
//! square, diameter of a circle, long side of a rectangle) and the number of
//! cells stacked in series. Per-cell displacement is tabulated data rather
//! than something computed here; elongation of a multi-cell actuator is the
//! per-cell displacement times the number of cells.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::csvutil::{read_rows, read_rows_from_path};

pub const DEFAULT_REST_THICKNESS_CM: f64 = 0.05;
pub const DEFAULT_SEAM_WIDTH_CM: f64 = 0.10;
pub const DEFAULT_SEAM_MARGIN_CM: f64 = 0.5;

/// Fabric areal density (g/cm²) chosen by [`calibrate_areal_density`] over
/// the 18 viable variants.
pub const DEFAULT_AREAL_DENSITY: f64 = 0.0253;

/// Published actuator mass range in grams.
pub const MASS_BAND_G: (f64, f64) = (3.5, 28.0);

const KEY_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellShape {
    Square,
    Rectangle,
    Circle,
}

impl CellShape {
    pub const ALL: [CellShape; 3] = [CellShape::Square, CellShape::Rectangle, CellShape::Circle];

    /// Lowercase name used in CSV files and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            CellShape::Square => "square",
            CellShape::Rectangle => "rectangle",
            CellShape::Circle => "circle",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            CellShape::Square => "Square",
            CellShape::Rectangle => "Rectangle",
            CellShape::Circle => "Circle",
        }
    }

    /// Extent of the cell across the actuator axis: `p` for square and
    /// circle, `p/2` for the rectangle.
    pub fn cross_width(self, p: f64) -> f64 {
        match self {
            CellShape::Rectangle => p / 2.0,
            _ => p,
        }
    }
}

impl fmt::Display for CellShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

impl FromStr for CellShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "square" | "sq" | "s" => Ok(CellShape::Square),
            "rectangle" | "rect" | "r" => Ok(CellShape::Rectangle),
            "circle" | "circ" | "c" => Ok(CellShape::Circle),
            other => Err(Error::domain(format!("unknown cell shape `{other}`"))),
        }
    }
}

/// One actuator variant.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ActuatorSpec {
    pub shape: CellShape,
    pub cell_length_cm: f64,
    pub n_cells: u32,
    pub rest_thickness_cm: f64,
    pub seam_width_cm: f64,
}

impl ActuatorSpec {
    /// A variant with default rest thickness and seam width.
    pub fn new(shape: CellShape, cell_length_cm: f64, n_cells: u32) -> Self {
        ActuatorSpec {
            shape,
            cell_length_cm,
            n_cells,
            rest_thickness_cm: DEFAULT_REST_THICKNESS_CM,
            seam_width_cm: DEFAULT_SEAM_WIDTH_CM,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_length_cm > 0.0 && self.cell_length_cm.is_finite()) {
            return Err(Error::domain(format!(
                "cell length must be positive, got {}",
                self.cell_length_cm
            )));
        }
        if !(self.rest_thickness_cm > 0.0) {
            return Err(Error::domain("rest thickness must be positive"));
        }
        if !(self.seam_width_cm >= 0.0) {
            return Err(Error::domain("seam width must be non-negative"));
        }
        Ok(())
    }

    /// `Square-4-12` style label.
    pub fn label(&self) -> String {
        format!("{}-{}-{}", self.shape.title(), self.cell_length_cm, self.n_cells)
    }

    /// `square,4,12` style key, the inverse of [`ActuatorSpec::from_str`].
    pub fn key(&self) -> String {
        format!("{},{},{}", self.shape.name(), self.cell_length_cm, self.n_cells)
    }

    /// Ordering used by every report: cell length, then cell count, then shape.
    pub fn report_cmp(&self, other: &Self) -> Ordering {
        self.cell_length_cm
            .total_cmp(&other.cell_length_cm)
            .then(self.n_cells.cmp(&other.n_cells))
            .then(self.shape.cmp(&other.shape))
    }

    pub fn same_variant(&self, shape: CellShape, p: f64, n: u32) -> bool {
        self.shape == shape && (self.cell_length_cm - p).abs() < KEY_EPS && self.n_cells == n
    }
}

impl fmt::Display for ActuatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses `shape,p,n` (also accepts `-` as separator).
impl FromStr for ActuatorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split([',', '-']).map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::domain(format!("variant `{s}` must look like `shape,p_cm,n`")));
        }
        let shape: CellShape = parts[0].parse()?;
        let p: f64 = parts[1]
            .parse()
            .map_err(|_| Error::domain(format!("bad cell length `{}`", parts[1])))?;
        let n: u32 = parts[2]
            .parse()
            .map_err(|_| Error::domain(format!("bad cell count `{}`", parts[2])))?;
        let spec = ActuatorSpec::new(shape, p, n);
        spec.validate()?;
        Ok(spec)
    }
}

impl PartialEq for ActuatorSpec {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ActuatorSpec {}

impl Hash for ActuatorSpec {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.shape.hash(state);
        self.cell_length_cm.to_bits().hash(state);
        self.n_cells.hash(state);
        self.rest_thickness_cm.to_bits().hash(state);
        self.seam_width_cm.to_bits().hash(state);
    }
}

impl PartialOrd for ActuatorSpec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic (shape, p, n), then the secondary geometric parameters.
impl Ord for ActuatorSpec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.shape
            .cmp(&other.shape)
            .then(self.cell_length_cm.total_cmp(&other.cell_length_cm))
            .then(self.n_cells.cmp(&other.n_cells))
            .then(self.rest_thickness_cm.total_cmp(&other.rest_thickness_cm))
            .then(self.seam_width_cm.total_cmp(&other.seam_width_cm))
    }
}

/// Cross-section area of one cell in cm².
pub fn cross_section_area(shape: CellShape, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::domain(format!("cell length must be positive, got {p}")));
    }
    Ok(match shape {
        CellShape::Square => p * p,
        CellShape::Rectangle => p * (p / 2.0),
        CellShape::Circle => PI * p * p / 4.0,
    })
}

/// Per-cell displacement δ (cm) keyed by shape and cell length.
#[derive(Clone, Debug, PartialEq)]
pub struct CellDisplacementTable {
    entries: Vec<(CellShape, f64, f64)>,
}

const DISPLACEMENT_HEADER: &[&str] = &["shape", "p_cm", "delta_cm"];

impl CellDisplacementTable {
    /// Builds a table, checking δ > 0 and that δ strictly increases with `p`
    /// within each shape.
    pub fn new(entries: impl IntoIterator<Item = (CellShape, f64, f64)>) -> Result<Self> {
        let mut entries: Vec<_> = entries.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        for &(shape, p, delta) in &entries {
            if !(p > 0.0) {
                return Err(Error::Validation(format!(
                    "{shape} p={p}: cell length must be positive"
                )));
            }
            if !(delta > 0.0) {
                return Err(Error::Validation(format!(
                    "{shape} p={p}: displacement must be positive"
                )));
            }
        }
        for pair in entries.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.0 != b.0 {
                continue;
            }
            if (a.1 - b.1).abs() < KEY_EPS {
                return Err(Error::Validation(format!("duplicate entry for {} p={}", a.0, a.1)));
            }
            if b.2 <= a.2 {
                return Err(Error::Validation(format!(
                    "{}: displacement must increase with cell length ({} cm at p={} vs {} cm at p={})",
                    a.0, a.2, a.1, b.2, b.1
                )));
            }
        }
        Ok(CellDisplacementTable { entries })
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        Self::from_rows(read_rows(reader, DISPLACEMENT_HEADER)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_rows(read_rows_from_path(path, DISPLACEMENT_HEADER)?)
    }

    fn from_rows(rows: Vec<crate::io::csvutil::Row>) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows.len());
        for row in rows {
            entries.push((row.shape("shape")?, row.f64("p_cm")?, row.f64("delta_cm")?));
        }
        Self::new(entries)
    }

    pub fn to_csv(&self) -> String {
        let mut out = DISPLACEMENT_HEADER.join(",");
        out.push('\n');
        for (shape, p, delta) in &self.entries {
            out.push_str(&format!("{},{},{}\n", shape.name(), p, delta));
        }
        out
    }

    pub fn entries(&self) -> &[(CellShape, f64, f64)] {
        &self.entries
    }

    pub fn per_cell_displacement(&self, shape: CellShape, p: f64) -> Result<f64> {
        self.entries
            .iter()
            .find(|(s, q, _)| *s == shape && (q - p).abs() < KEY_EPS)
            .map(|e| e.2)
            .ok_or_else(|| Error::Lookup(format!("(shape={}, p_cm={p})", shape.name())))
    }
}

impl Default for CellDisplacementTable {
    /// The six entries derived from the published estimates for 3 and 4 cm cells.
    fn default() -> Self {
        Self::from_reader(include_str!("../data/cell_displacement.csv").as_bytes())
            .expect("bundled displacement table is valid")
    }
}

/// Measured elongation (cm) of individual variants.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasuredElongationTable {
    entries: Vec<(CellShape, f64, u32, f64)>,
}

const MEASURED_HEADER: &[&str] = &["shape", "p_cm", "n", "elongation_cm"];

impl MeasuredElongationTable {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let rows = read_rows(reader, MEASURED_HEADER)?;
        let mut entries = Vec::with_capacity(rows.len());
        for row in rows {
            let e = row.f64("elongation_cm")?;
            if e < 0.0 {
                return Err(Error::Parse {
                    line: row.line,
                    column: "elongation_cm".into(),
                    message: "elongation must be non-negative".into(),
                });
            }
            entries.push((row.shape("shape")?, row.f64("p_cm")?, row.u32("n")?, e));
        }
        Ok(MeasuredElongationTable { entries })
    }

    pub fn elongation(&self, spec: &ActuatorSpec) -> Result<f64> {
        self.entries
            .iter()
            .find(|(s, p, n, _)| spec.same_variant(*s, *p, *n))
            .map(|e| e.3)
            .ok_or_else(|| Error::Lookup(format!("measured elongation of {}", spec.label())))
    }
}

impl Default for MeasuredElongationTable {
    fn default() -> Self {
        Self::from_reader(include_str!("../data/measured_elongation.csv").as_bytes())
            .expect("bundled elongation table is valid")
    }
}

/// Which elongation drives downstream models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ElongationSource {
    /// n × per-cell displacement.
    Estimated,
    /// Bench-measured elongation of the fabricated variant.
    #[default]
    Measured,
}

impl FromStr for ElongationSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimated" => Ok(ElongationSource::Estimated),
            "measured" => Ok(ElongationSource::Measured),
            _ => Err(Error::domain(format!("unknown elongation source `{s}`"))),
        }
    }
}

/// Both elongation tables bundled together.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ElongationData {
    pub displacement: CellDisplacementTable,
    pub measured: MeasuredElongationTable,
}

impl ElongationData {
    pub fn elongation(&self, spec: &ActuatorSpec, source: ElongationSource) -> Result<f64> {
        match source {
            ElongationSource::Estimated => estimated_elongation(spec, &self.displacement),
            ElongationSource::Measured => self.measured.elongation(spec),
        }
    }
}

/// Maximum free elongation (cm): cell count times per-cell displacement.
pub fn estimated_elongation(spec: &ActuatorSpec, table: &CellDisplacementTable) -> Result<f64> {
    let delta = table.per_cell_displacement(spec.shape, spec.cell_length_cm)?;
    Ok(spec.n_cells as f64 * delta)
}

/// Deflated stack length (cm).
pub fn rest_length(spec: &ActuatorSpec) -> f64 {
    spec.n_cells as f64 * (spec.rest_thickness_cm + spec.seam_width_cm)
}

/// Volume (cm³) of one cell at a given fill fraction, using a lens
/// approximation `(2/3)·A·(t + f·δ)`.
pub fn inflated_cell_volume(spec: &ActuatorSpec, table: &CellDisplacementTable, fill_fraction: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fill_fraction) {
        return Err(Error::domain(format!(
            "fill fraction must lie in [0, 1], got {fill_fraction}"
        )));
    }
    let area = cross_section_area(spec.shape, spec.cell_length_cm)?;
    let delta = table.per_cell_displacement(spec.shape, spec.cell_length_cm)?;
    Ok(2.0 / 3.0 * area * (spec.rest_thickness_cm + fill_fraction * delta))
}

/// Volume of all cells at full inflation.
pub fn total_inflated_volume(spec: &ActuatorSpec, table: &CellDisplacementTable) -> Result<f64> {
    Ok(spec.n_cells as f64 * inflated_cell_volume(spec, table, 1.0)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassModel {
    /// g/cm²
    pub areal_density: f64,
    pub seam_margin_cm: f64,
}

impl Default for MassModel {
    fn default() -> Self {
        MassModel {
            areal_density: DEFAULT_AREAL_DENSITY,
            seam_margin_cm: DEFAULT_SEAM_MARGIN_CM,
        }
    }
}

/// Two fabric panels per cell, each a square of side `p + 2·margin`.
pub fn estimate_mass(spec: &ActuatorSpec, model: &MassModel) -> Result<f64> {
    if !(model.areal_density > 0.0) {
        return Err(Error::domain("areal density must be positive"));
    }
    let side = spec.cell_length_cm + 2.0 * model.seam_margin_cm;
    Ok(2.0 * spec.n_cells as f64 * side * side * model.areal_density)
}

/// Picks the areal density that centres the mass range of `specs` inside
/// `band` on a log scale, by a 1-D scan over candidate densities.
///
/// Returns an error if no density fits the whole range into the band.
pub fn calibrate_areal_density(specs: &[ActuatorSpec], seam_margin_cm: f64, band: (f64, f64)) -> Result<f64> {
    if specs.is_empty() {
        return Err(Error::Calibration("no variants to calibrate against".into()));
    }
    let unit = MassModel {
        areal_density: 1.0,
        seam_margin_cm,
    };
    let masses: Vec<f64> = specs.iter().map(|s| estimate_mass(s, &unit)).collect::<Result<_>>()?;
    let lo = masses.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = masses.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0) {
        return Err(Error::Calibration("a variant has zero mass".into()));
    }

    // Score = worst log-distance from the band edges; maximise it.
    let score = |rho: f64| ((lo * rho) / band.0).ln().min((band.1 / (hi * rho)).ln());
    let (mut best_rho, mut best) = (f64::NAN, f64::NEG_INFINITY);
    let steps = 4000;
    let (rho_min, rho_max) = (1e-4_f64, 1.0_f64);
    for i in 0..=steps {
        let rho = rho_min * (rho_max / rho_min).powf(i as f64 / steps as f64);
        let s = score(rho);
        if s > best {
            best = s;
            best_rho = rho;
        }
    }
    if best < 0.0 {
        return Err(Error::Calibration(format!(
            "mass spread {lo:.3}..{hi:.3} g per unit density does not fit in {}..{} g",
            band.0, band.1
        )));
    }
    Ok(best_rho)
}
