//! First-order pressure dynamics and fill-time classification.
//!
//! Each variant fills with a single time constant
//! `τ = r(shape) · V / Q`, where `V` is the fully inflated volume of all
//! cells, `Q` the supply flow at full duty and `r` a per-shape resistance
//! factor. Inflation follows `p_ss·(1 − e^{−t/τ})`, venting `p₀·e^{−t/τ}`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actuator::{total_inflated_volume, ActuatorSpec, CellDisplacementTable, CellShape};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeFactors {
    pub square: f64,
    pub rectangle: f64,
    pub circle: f64,
}

impl ShapeFactors {
    pub fn uniform(value: f64) -> Self {
        ShapeFactors {
            square: value,
            rectangle: value,
            circle: value,
        }
    }

    pub fn get(&self, shape: CellShape) -> f64 {
        match shape {
            CellShape::Square => self.square,
            CellShape::Rectangle => self.rectangle,
            CellShape::Circle => self.circle,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PneumaticConfig {
    pub steady_pressure_kpa: f64,
    /// Supply flow at 100% duty (cm³/s).
    pub supply_flow_cm3_s: f64,
    pub completion_fraction: f64,
    pub window_s: f64,
    pub shape_resistance: ShapeFactors,
}

impl Default for PneumaticConfig {
    /// The calibrated configuration committed in `data/pneumatics.toml`.
    fn default() -> Self {
        Self::from_toml(include_str!("../data/pneumatics.toml")).expect("bundled pneumatic config is valid")
    }
}

impl PneumaticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.steady_pressure_kpa > 0.0) {
            return Err(Error::Validation("steady pressure must be positive".into()));
        }
        if !(self.supply_flow_cm3_s > 0.0) {
            return Err(Error::Validation("supply flow must be positive".into()));
        }
        let f = &self.shape_resistance;
        if !(f.square > 0.0 && f.rectangle > 0.0 && f.circle > 0.0) {
            return Err(Error::Validation("resistance factors must be positive".into()));
        }
        if !(self.completion_fraction > 0.0 && self.completion_fraction < 1.0) {
            return Err(Error::Validation("completion fraction must lie in (0, 1)".into()));
        }
        if !(self.window_s > 0.0) {
            return Err(Error::Validation("actuation window must be positive".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PneumaticConfig =
            toml::from_str(text).map_err(|e| Error::Validation(format!("pneumatic config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        let mut out = String::from("# Pneumatic model parameters. Regenerate with `bellowlab calibrate`.\n");
        out.push_str(&toml::to_string(self).expect("config serializes"));
        out
    }

    /// `ln(1/(1 − completion_fraction))`: number of time constants to completion.
    pub fn completion_multiple(&self) -> f64 {
        -(1.0 - self.completion_fraction).ln()
    }
}

/// Fill time constant τ in seconds.
pub fn time_constant(spec: &ActuatorSpec, table: &CellDisplacementTable, cfg: &PneumaticConfig) -> Result<f64> {
    if !(cfg.supply_flow_cm3_s > 0.0) {
        return Err(Error::domain("supply flow must be positive"));
    }
    let volume = total_inflated_volume(spec, table)?;
    Ok(cfg.shape_resistance.get(spec.shape) * volume / cfg.supply_flow_cm3_s)
}

/// Time to reach the completion fraction of steady state.
pub fn fill_time(spec: &ActuatorSpec, table: &CellDisplacementTable, cfg: &PneumaticConfig) -> Result<f64> {
    Ok(time_constant(spec, table, cfg)? * cfg.completion_multiple())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Inflate,
    Deflate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Completion {
    Complete,
    Incomplete,
}

pub fn classify_completion(
    spec: &ActuatorSpec,
    table: &CellDisplacementTable,
    cfg: &PneumaticConfig,
) -> Result<Completion> {
    Ok(if fill_time(spec, table, cfg)? > cfg.window_s {
        Completion::Incomplete
    } else {
        Completion::Complete
    })
}

/// Exponential response with time constant `tau`, tolerating `tau == 0`.
pub(crate) fn decay(t: f64, tau: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if tau <= 0.0 {
        0.0
    } else {
        (-t / tau).exp()
    }
}

/// A pressure time series in kPa.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PressureSeries {
    pub label: String,
    pub t_s: Vec<f64>,
    pub p_kpa: Vec<f64>,
}

impl PressureSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,p_kPa\n");
        for (t, p) in self.t_s.iter().zip(&self.p_kpa) {
            let _ = writeln!(out, "{t},{p}");
        }
        out
    }
}

fn sample_times(duration_s: f64, dt_s: f64) -> Result<Vec<f64>> {
    if !(duration_s > 0.0) || !(dt_s > 0.0) {
        return Err(Error::domain("duration and time step must be positive"));
    }
    let steps = (duration_s / dt_s + 1e-9).floor() as usize;
    Ok((0..=steps).map(|i| i as f64 * dt_s).collect())
}

/// Pressure during one phase. Inflation starts empty, deflation starts at
/// steady pressure.
pub fn pressure_profile(
    spec: &ActuatorSpec,
    table: &CellDisplacementTable,
    cfg: &PneumaticConfig,
    phase: Phase,
    duration_s: f64,
    dt_s: f64,
) -> Result<PressureSeries> {
    let tau = time_constant(spec, table, cfg)?;
    let t_s = sample_times(duration_s, dt_s)?;
    let p_ss = cfg.steady_pressure_kpa;
    let p_kpa = t_s
        .iter()
        .map(|&t| match phase {
            Phase::Inflate => p_ss * (1.0 - decay(t, tau)),
            Phase::Deflate => p_ss * decay(t, tau),
        })
        .collect();
    Ok(PressureSeries {
        label: spec.label(),
        t_s,
        p_kpa,
    })
}

/// Inflation for `phase_s` followed by venting for `phase_s`, continuous at
/// the switch.
pub fn cycle_profile(
    spec: &ActuatorSpec,
    table: &CellDisplacementTable,
    cfg: &PneumaticConfig,
    phase_s: f64,
    dt_s: f64,
) -> Result<PressureSeries> {
    let tau = time_constant(spec, table, cfg)?;
    let t_s = sample_times(2.0 * phase_s, dt_s)?;
    let p_ss = cfg.steady_pressure_kpa;
    let p_switch = p_ss * (1.0 - decay(phase_s, tau));
    let p_kpa = t_s
        .iter()
        .map(|&t| {
            if t <= phase_s {
                p_ss * (1.0 - decay(t, tau))
            } else {
                p_switch * decay(t - phase_s, tau)
            }
        })
        .collect();
    Ok(PressureSeries {
        label: spec.label(),
        t_s,
        p_kpa,
    })
}

/// Candidate values for [`calibrate_resistances`]. The square factor is held
/// fixed; the other two factors and the supply flow are searched in
/// lexicographic (circle, rectangle, flow) order.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchGrid {
    pub square: f64,
    pub circle: Vec<f64>,
    pub rectangle: Vec<f64>,
    pub flow: Vec<f64>,
    /// Relative slack required on both sides of the window: flagged variants
    /// need fill time ≥ window·(1+margin), the others ≤ window/(1+margin).
    pub margin: f64,
}

pub(crate) fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

impl Default for SearchGrid {
    fn default() -> Self {
        SearchGrid {
            square: 1.0,
            circle: linspace_step(0.80, 2.00, 0.02),
            rectangle: linspace_step(1.00, 4.00, 0.05),
            flow: linspace_step(50.0, 200.0, 1.0),
            margin: 0.05,
        }
    }
}

impl SearchGrid {
    /// All shapes share the same factor: a pure volume/flow model.
    pub fn equal_resistance() -> Self {
        SearchGrid {
            square: 1.0,
            circle: vec![1.0],
            rectangle: vec![1.0],
            flow: linspace_step(1.0, 1000.0, 0.5),
            margin: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.circle.len() * self.rectangle.len() * self.flow.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Outcome of an exhaustive sweep of a [`SearchGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridScan {
    pub evaluated: usize,
    pub feasible: usize,
    /// First feasible configuration in grid order.
    pub first_feasible: Option<PneumaticConfig>,
    /// Fewest violated targets seen, with the violations at that point.
    pub best_violations: Vec<String>,
}

fn target_violations(
    flagged: &[(ActuatorSpec, f64)],
    unflagged: &[(ActuatorSpec, f64)],
    cfg: &PneumaticConfig,
    margin: f64,
    limit: usize,
) -> Vec<String> {
    // fill_time = r · V · ln(1/(1-c)) / Q, with V precomputed
    let mult = cfg.completion_multiple() / cfg.supply_flow_cm3_s;
    let hi = cfg.window_s * (1.0 + margin);
    let lo = cfg.window_s / (1.0 + margin);
    let mut out = Vec::new();
    for (spec, volume) in flagged {
        let t = cfg.shape_resistance.get(spec.shape) * volume * mult;
        let ok = if margin > 0.0 { t >= hi } else { t > cfg.window_s };
        if !ok {
            out.push(format!("{} must be incomplete (fill {t:.3} s)", spec.label()));
            if out.len() >= limit {
                return out;
            }
        }
    }
    for (spec, volume) in unflagged {
        let t = cfg.shape_resistance.get(spec.shape) * volume * mult;
        if t > lo {
            out.push(format!("{} must be complete (fill {t:.3} s)", spec.label()));
            if out.len() >= limit {
                return out;
            }
        }
    }
    out
}

fn with_volumes(specs: &[ActuatorSpec], table: &CellDisplacementTable) -> Result<Vec<(ActuatorSpec, f64)>> {
    specs
        .iter()
        .map(|s| Ok((*s, total_inflated_volume(s, table)?)))
        .collect()
}

/// Evaluates every grid point.
pub fn scan_grid(
    target_flagged: &[ActuatorSpec],
    target_unflagged: &[ActuatorSpec],
    grid: &SearchGrid,
    base: &PneumaticConfig,
    table: &CellDisplacementTable,
) -> Result<GridScan> {
    if let Some(s) = target_flagged.iter().find(|s| target_unflagged.contains(s)) {
        return Err(Error::Calibration(format!("{} appears in both target sets", s.label())));
    }
    let flagged = with_volumes(target_flagged, table)?;
    let unflagged = with_volumes(target_unflagged, table)?;
    let mut scan = GridScan {
        evaluated: 0,
        feasible: 0,
        first_feasible: None,
        best_violations: Vec::new(),
    };
    let mut best = usize::MAX;
    for &circle in &grid.circle {
        for &rectangle in &grid.rectangle {
            for &flow in &grid.flow {
                let cfg = PneumaticConfig {
                    supply_flow_cm3_s: flow,
                    shape_resistance: ShapeFactors {
                        square: grid.square,
                        rectangle,
                        circle,
                    },
                    ..base.clone()
                };
                scan.evaluated += 1;
                let v = target_violations(&flagged, &unflagged, &cfg, grid.margin, usize::MAX);
                if v.is_empty() {
                    scan.feasible += 1;
                    if scan.first_feasible.is_none() {
                        scan.first_feasible = Some(cfg);
                    }
                } else if v.len() < best {
                    best = v.len();
                    scan.best_violations = v;
                }
            }
        }
    }
    if scan.feasible > 0 {
        scan.best_violations.clear();
    }
    Ok(scan)
}

/// Returns the first configuration in grid order under which exactly
/// `target_flagged` fail to complete within the window.
pub fn calibrate_resistances(
    target_flagged: &[ActuatorSpec],
    target_unflagged: &[ActuatorSpec],
    grid: &SearchGrid,
    base: &PneumaticConfig,
    table: &CellDisplacementTable,
) -> Result<PneumaticConfig> {
    let scan = scan_grid(target_flagged, target_unflagged, grid, base, table)?;
    match scan.first_feasible {
        Some(cfg) => Ok(cfg),
        None if scan.evaluated == 0 => Err(Error::Calibration("search grid is empty".into())),
        None => Err(Error::Calibration(format!(
            "none of {} grid points separates the targets; closest point violates: {}",
            scan.evaluated,
            scan.best_violations.join("; ")
        ))),
    }
}

/// Checks whether any flow at all can separate the targets for fixed shape
/// factors. Returns the offending (flagged, unflagged) pair when the flagged
/// variant with the smallest weighted volume fills no slower than the
/// unflagged variant with the largest.
pub fn separation_conflict(
    target_flagged: &[ActuatorSpec],
    target_unflagged: &[ActuatorSpec],
    factors: &ShapeFactors,
    table: &CellDisplacementTable,
) -> Result<Option<(ActuatorSpec, ActuatorSpec)>> {
    let weighted = |specs: &[ActuatorSpec]| -> Result<Vec<(ActuatorSpec, f64)>> {
        specs
            .iter()
            .map(|s| Ok((*s, factors.get(s.shape) * total_inflated_volume(s, table)?)))
            .collect()
    };
    let min_flagged = weighted(target_flagged)?.into_iter().min_by(|a, b| a.1.total_cmp(&b.1));
    let max_unflagged = weighted(target_unflagged)?
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1));
    Ok(match (min_flagged, max_unflagged) {
        (Some(f), Some(u)) if f.1 <= u.1 => Some((f.0, u.0)),
        _ => None,
    })
}

/// The four variants that did not finish filling within five seconds.
pub fn target_flagged() -> Vec<ActuatorSpec> {
    vec![
        ActuatorSpec::new(CellShape::Square, 4.0, 10),
        ActuatorSpec::new(CellShape::Square, 4.0, 12),
        ActuatorSpec::new(CellShape::Rectangle, 4.0, 12),
        ActuatorSpec::new(CellShape::Circle, 4.0, 12),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn s(shape: CellShape, p: f64, n: u32) -> ActuatorSpec {
        ActuatorSpec::new(shape, p, n)
    }

    fn viable() -> Vec<ActuatorSpec> {
        crate::design::enumerate(&CellShape::ALL, &[3.0, 4.0], &[8, 10, 12])
    }

    fn split_targets() -> (Vec<ActuatorSpec>, Vec<ActuatorSpec>) {
        let flagged = target_flagged();
        let rest = viable().into_iter().filter(|v| !flagged.contains(v)).collect();
        (flagged, rest)
    }

    #[test]
    fn shipped_config_is_valid() {
        let cfg = PneumaticConfig::default();
        assert!((34.0..=36.0).contains(&cfg.steady_pressure_kpa));
        assert_eq!(cfg.window_s, 5.0);
        assert_eq!(cfg.completion_fraction, 0.95);
        let back = PneumaticConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn shipped_config_equals_calibration() {
        let (flagged, rest) = split_targets();
        let base = PneumaticConfig::default();
        let cfg = calibrate_resistances(
            &flagged,
            &rest,
            &SearchGrid::default(),
            &base,
            &CellDisplacementTable::default(),
        )
        .unwrap();
        assert_eq!(cfg, base);
    }

    #[test]
    fn tau_linear_and_monotone() {
        let t = CellDisplacementTable::default();
        let cfg = PneumaticConfig::default();
        let tau = |sp| time_constant(&sp, &t, &cfg).unwrap();
        assert_abs_diff_eq!(
            tau(s(CellShape::Square, 3.0, 16)),
            2.0 * tau(s(CellShape::Square, 3.0, 8)),
            epsilon = 1e-12
        );
        assert!(tau(s(CellShape::Square, 4.0, 12)) > tau(s(CellShape::Square, 4.0, 10)));
        assert!(tau(s(CellShape::Square, 4.0, 10)) > tau(s(CellShape::Square, 4.0, 8)));
        assert!(tau(s(CellShape::Rectangle, 4.0, 12)) > tau(s(CellShape::Circle, 4.0, 10)));
        for shape in CellShape::ALL {
            assert!(tau(s(shape, 4.0, 8)) > tau(s(shape, 3.0, 8)));
        }
        let dead = PneumaticConfig {
            supply_flow_cm3_s: 0.0,
            ..cfg
        };
        assert!(matches!(
            time_constant(&s(CellShape::Square, 3.0, 8), &t, &dead),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn inflate_profile_identities() {
        let t = CellDisplacementTable::default();
        let cfg = PneumaticConfig::default();
        let spec = s(CellShape::Circle, 3.0, 10);
        let tau = time_constant(&spec, &t, &cfg).unwrap();
        let series = pressure_profile(&spec, &t, &cfg, Phase::Inflate, 3.0 * tau, tau / 1000.0).unwrap();
        assert_eq!(series.p_kpa[0], 0.0);
        let last = *series.p_kpa.last().unwrap();
        assert_abs_diff_eq!(last / cfg.steady_pressure_kpa, 1.0 - (-3.0f64).exp(), epsilon = 1e-3);
        assert_abs_diff_eq!(1.0 - (-3.0f64).exp(), 0.9502, epsilon = 1e-4);
        let long = pressure_profile(&spec, &t, &cfg, Phase::Inflate, 60.0 * tau, tau).unwrap();
        assert_abs_diff_eq!(*long.p_kpa.last().unwrap(), cfg.steady_pressure_kpa, epsilon = 1e-9);
        assert!(series.p_kpa.windows(2).all(|w| w[1] >= w[0]));
        assert!(pressure_profile(&spec, &t, &cfg, Phase::Inflate, 0.0, 0.1).is_err());
        assert!(pressure_profile(&spec, &t, &cfg, Phase::Deflate, 1.0, 0.0).is_err());
    }

    #[test]
    fn deflate_profile_decays() {
        let t = CellDisplacementTable::default();
        let cfg = PneumaticConfig::default();
        let spec = s(CellShape::Square, 3.0, 8);
        let series = pressure_profile(&spec, &t, &cfg, Phase::Deflate, 5.0, 0.01).unwrap();
        assert_eq!(series.p_kpa[0], cfg.steady_pressure_kpa);
        assert!(series.p_kpa.windows(2).all(|w| w[1] <= w[0]));
        assert!(series.p_kpa.iter().all(|p| (0.0..=cfg.steady_pressure_kpa).contains(p)));
    }

    #[test]
    fn cycle_returns_low_for_complete_variants() {
        let t = CellDisplacementTable::default();
        let cfg = PneumaticConfig::default();
        for spec in viable() {
            let series = cycle_profile(&spec, &t, &cfg, 5.0, 1.0 / 60.0).unwrap();
            let end = *series.p_kpa.last().unwrap();
            let complete = classify_completion(&spec, &t, &cfg).unwrap() == Completion::Complete;
            if complete {
                assert!(end < 0.05 * cfg.steady_pressure_kpa, "{spec}: {end}");
            }
            // continuity at the switch: neighbouring samples close
            let k = series.t_s.iter().position(|&x| x > 5.0).unwrap();
            assert!((series.p_kpa[k] - series.p_kpa[k - 1]).abs() < cfg.steady_pressure_kpa * 0.2);
        }
    }

    #[test]
    fn classification_examples() {
        let t = CellDisplacementTable::default();
        let cfg = PneumaticConfig::default();
        let c = |sp| classify_completion(&sp, &t, &cfg).unwrap();
        assert_eq!(c(s(CellShape::Square, 4.0, 12)), Completion::Incomplete);
        assert_eq!(c(s(CellShape::Rectangle, 3.0, 8)), Completion::Complete);
        assert_eq!(c(s(CellShape::Circle, 4.0, 10)), Completion::Complete);
        let flagged: Vec<_> = viable()
            .into_iter()
            .filter(|v| c(*v) == Completion::Incomplete)
            .collect();
        let mut expected = target_flagged();
        expected.sort();
        assert_eq!(flagged, expected);
    }

    #[test]
    fn volume_only_model_is_infeasible() {
        let (flagged, rest) = split_targets();
        let t = CellDisplacementTable::default();
        let conflict = separation_conflict(&flagged, &rest, &ShapeFactors::uniform(1.0), &t).unwrap();
        let (f, u) = conflict.expect("equal factors cannot separate the targets");
        assert_eq!(f, s(CellShape::Rectangle, 4.0, 12));
        assert!(u.shape != CellShape::Rectangle);

        let scan = scan_grid(
            &flagged,
            &rest,
            &SearchGrid::equal_resistance(),
            &PneumaticConfig::default(),
            &t,
        )
        .unwrap();
        assert_eq!(scan.evaluated, SearchGrid::equal_resistance().len());
        assert_eq!(scan.feasible, 0);
        assert!(!scan.best_violations.is_empty());
        let err = calibrate_resistances(
            &flagged,
            &rest,
            &SearchGrid::equal_resistance(),
            &PneumaticConfig::default(),
            &t,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Calibration(_)));
        assert!(err.to_string().contains("must be"));

        let calibrated = PneumaticConfig::default().shape_resistance;
        assert!(separation_conflict(&flagged, &rest, &calibrated, &t).unwrap().is_none());
    }

    #[test]
    fn trivial_and_contradictory_targets() {
        let t = CellDisplacementTable::default();
        let grid = SearchGrid {
            flow: vec![1e6],
            ..SearchGrid::default()
        };
        let cfg = calibrate_resistances(&[], &viable(), &grid, &PneumaticConfig::default(), &t).unwrap();
        assert_eq!(cfg.supply_flow_cm3_s, 1e6);

        let contradiction = calibrate_resistances(
            &[s(CellShape::Circle, 4.0, 10)],
            &[s(CellShape::Circle, 4.0, 12)],
            &SearchGrid::default(),
            &PneumaticConfig::default(),
            &t,
        );
        assert!(matches!(contradiction, Err(Error::Calibration(_))));

        let overlap = calibrate_resistances(
            &target_flagged(),
            &target_flagged(),
            &grid,
            &PneumaticConfig::default(),
            &t,
        );
        assert!(matches!(overlap, Err(Error::Calibration(_))));
    }

    #[test]
    fn grid_steps_are_exact() {
        let g = SearchGrid::default();
        assert_eq!(g.circle.first(), Some(&0.8));
        assert_eq!(g.circle.last(), Some(&2.0));
        assert!(g.circle.contains(&1.02));
        assert_eq!(g.flow.len(), 151);
    }

    proptest! {
        #[test]
        fn completion_monotone_in_cells(shape_idx in 0usize..3, p in prop::sample::select(vec![3.0, 4.0]), n in 1u32..30, extra in 1u32..10) {
            let t = CellDisplacementTable::default();
            let cfg = PneumaticConfig::default();
            let a = classify_completion(&s(CellShape::ALL[shape_idx], p, n), &t, &cfg).unwrap();
            let b = classify_completion(&s(CellShape::ALL[shape_idx], p, n + extra), &t, &cfg).unwrap();
            prop_assert!(!(a == Completion::Incomplete && b == Completion::Complete));
        }
    }
}
