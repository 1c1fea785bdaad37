use std::collections::BTreeSet;

use bellowlab::actuator::{ActuatorSpec, CellDisplacementTable, CellShape, ElongationData, ElongationSource};
use bellowlab::arm::{simulate_trial, ArmModel, Point2, Trajectory, TrialTiming};
use bellowlab::design::{downselect, enumerate_paper_space, paper_constraints};
use bellowlab::experiment::{run_sweep, Experiment};
use bellowlab::io::imu::{imu_from_reader, imu_to_csv, ImuSample};
use bellowlab::io::pattern::{emit_pattern, panel_dimensions, DEFAULT_CHANNEL_WIDTH_CM};
use bellowlab::io::report::{render_report, MetricTable, ReportInput};
use bellowlab::io::trajectory::{trajectory_from_reader, trajectory_to_csv};
use bellowlab::metrics::{metrics_from_csv, metrics_to_csv, summarize, MeanSd, Metric, TrialMetrics};
use bellowlab::pneumatics::{classify_completion, cycle_profile, Completion, PneumaticConfig};
use bellowlab::stats::{compare_by_factor, Factor, Pooling, DEFAULT_ALPHA};
use bellowlab::ExperimentConfig;
use proptest::prelude::*;

fn viable() -> Vec<ActuatorSpec> {
    downselect(&enumerate_paper_space(), &paper_constraints()).viable
}

fn shapes() -> [CellShape; 3] {
    [CellShape::Square, CellShape::Rectangle, CellShape::Circle]
}

#[test]
fn pressure_monotone_per_phase_and_continuous_at_switch() {
    let table = CellDisplacementTable::default();
    let cfg = PneumaticConfig::default();
    let timing = TrialTiming::default();
    for spec in viable() {
        let s = cycle_profile(&spec, &table, &cfg, timing.phase_s, timing.dt_s).unwrap();
        let switch = s.t_s.iter().rposition(|&t| t <= timing.phase_s).unwrap();
        assert!(s.p_kpa[..=switch].windows(2).all(|w| w[1] >= w[0]), "{}", spec.label());
        assert!(s.p_kpa[switch..].windows(2).all(|w| w[1] <= w[0]), "{}", spec.label());
        let biggest_step = s.p_kpa.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        let jump = (s.p_kpa[switch + 1] - s.p_kpa[switch]).abs();
        assert!(jump <= biggest_step + 1e-12);
        assert!(s.p_kpa.iter().all(|&p| (0.0..=cfg.steady_pressure_kpa).contains(&p)));
    }
}

#[test]
fn steady_pressure_in_band() {
    let cfg = PneumaticConfig::default();
    assert!((34.0..=36.0).contains(&cfg.steady_pressure_kpa));
    let table = CellDisplacementTable::default();
    for spec in viable() {
        let s = cycle_profile(&spec, &table, &cfg, 200.0, 0.5).unwrap();
        let peak = s.p_kpa.iter().cloned().fold(0.0, f64::max);
        assert!((34.0..=36.0).contains(&peak), "{} peaks at {peak}", spec.label());
    }
}

#[test]
fn incompleteness_is_monotone_in_cell_count() {
    let table = CellDisplacementTable::default();
    let cfg = PneumaticConfig::default();
    for shape in shapes() {
        for p in [3.0, 4.0] {
            let mut seen = false;
            for n in 1..=20 {
                let c = classify_completion(&ActuatorSpec::new(shape, p, n), &table, &cfg).unwrap();
                if seen {
                    assert_eq!(c, Completion::Incomplete, "{shape:?} {p} {n}");
                }
                seen |= c == Completion::Incomplete;
            }
        }
    }
}

fn noiseless_trial(spec: &ActuatorSpec) -> Trajectory {
    simulate_trial(
        spec,
        &ElongationData::default(),
        &PneumaticConfig::default(),
        &ArmModel::default(),
        TrialTiming::default(),
        ElongationSource::Measured,
    )
    .unwrap()
}

// Holds for variants that complete their cycle; a variant that cannot vent
// in time travels less than its shorter sibling.
#[test]
fn path_nondecreasing_in_cell_count_for_complete_variants() {
    let table = CellDisplacementTable::default();
    let cfg = PneumaticConfig::default();
    for shape in shapes() {
        for p in [3.0, 4.0] {
            let complete: Vec<ActuatorSpec> = [8, 10, 12]
                .into_iter()
                .map(|n| ActuatorSpec::new(shape, p, n))
                .filter(|s| classify_completion(s, &table, &cfg).unwrap() == Completion::Complete)
                .collect();
            let paths: Vec<f64> = complete
                .iter()
                .map(|s| {
                    let traj = noiseless_trial(s);
                    let r = traj.flexion_range();
                    bellowlab::metrics::path_length(&traj.end_effector[r]).unwrap()
                })
                .collect();
            assert!(
                paths.windows(2).all(|w| w[1] >= w[0] - 1e-9),
                "{shape:?} {p}: {paths:?}"
            );
        }
    }
}

#[test]
fn simulated_trials_keep_rigid_links_and_joint_stop() {
    let arm = ArmModel::default();
    for spec in viable() {
        let traj = noiseless_trial(&spec);
        assert!(traj.max_link_error(&arm) <= 1e-9);
        for i in 0..traj.len() {
            let a =
                bellowlab::metrics::elbow_flexion_angle(traj.shoulder[i], traj.elbow[i], traj.end_effector[i]).unwrap();
            assert!(a <= arm.passive_rom_deg + 1e-9);
        }
        assert!(traj.t_s.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn report_is_deterministic_and_order_free() {
    let mut exp = Experiment::standard(11);
    exp.trials = 3;
    let rows = run_sweep(&exp).unwrap();
    let mut reversed = rows.clone();
    reversed.reverse();
    let render = |rows: &[TrialMetrics]| {
        let table = MetricTable::from_summaries(&summarize(rows));
        let cmp: Vec<_> = [Factor::Shape, Factor::Size, Factor::CellCount]
            .into_iter()
            .map(|f| compare_by_factor(rows, Metric::PathLength, f, Pooling::Trials, DEFAULT_ALPHA).unwrap())
            .collect();
        let input = ReportInput {
            title: "Sweep".into(),
            variants: exp.variants.clone(),
            elongation: Some(&exp.data),
            metrics: &table,
            flagged: BTreeSet::new(),
            comparisons: &cmp,
            notes: vec![],
        };
        render_report(&input).unwrap()
    };
    let a = render(&rows);
    assert_eq!(a, render(&rows));
    assert_eq!(a, render(&reversed));
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        -1.0..1.0f64,
        Just(0.0),
        Just(1e-300),
        Just(-123456.789e10)
    ]
}

fn point() -> impl Strategy<Value = Point2> {
    (finite(), finite()).prop_map(|(x, y)| Point2::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectory_csv_round_trips(pts in proptest::collection::vec((point(), point(), point()), 2..40), dt in 0.001..0.1f64) {
        let n = pts.len();
        let t_s: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let traj = Trajectory {
            accel_ms2: bellowlab::arm::acceleration_magnitudes(&t_s, &pts.iter().map(|p| p.2).collect::<Vec<_>>()),
            t_s,
            shoulder: pts.iter().map(|p| p.0).collect(),
            elbow: pts.iter().map(|p| p.1).collect(),
            end_effector: pts.iter().map(|p| p.2).collect(),
            flexion_start: None,
        };
        let back = trajectory_from_reader(trajectory_to_csv(&traj).as_bytes()).unwrap();
        prop_assert!(back.warnings.is_empty());
        prop_assert_eq!(back.trajectory, traj);
    }

    #[test]
    fn imu_csv_round_trips(acc in proptest::collection::vec((finite(), finite(), finite()), 2..40)) {
        let samples: Vec<ImuSample> = acc
            .iter()
            .enumerate()
            .map(|(i, &(ax, ay, az))| ImuSample { t_s: i as f64 / 60.0, ax, ay, az })
            .collect();
        let back = imu_from_reader(imu_to_csv(&samples).as_bytes(), None).unwrap();
        prop_assert_eq!(back.samples, samples);
    }

    #[test]
    fn metrics_csv_round_trips(
        rows in proptest::collection::vec((0usize..18, 1u32..100, finite(), finite(), finite(), finite()), 0..30)
    ) {
        let specs = viable();
        let rows: Vec<TrialMetrics> = rows
            .into_iter()
            .map(|(v, trial, a, b, c, d)| TrialMetrics {
                variant: specs[v],
                trial,
                path_length_cm: a,
                straightness_index: b,
                mean_abs_jerk_ms3: c,
                flexion_range_deg: d,
            })
            .collect();
        prop_assert_eq!(metrics_from_csv(metrics_to_csv(&rows).as_bytes()).unwrap(), rows);
    }

    #[test]
    fn summary_csv_round_trips(values in proptest::collection::vec((0usize..18, 0usize..4, finite(), 0.0..1e3f64), 0..40)) {
        let specs = viable();
        let mut table = MetricTable::default();
        for (v, m, mean, sd) in values {
            table.insert(specs[v], Metric::ALL[m], MeanSd { mean, sd });
        }
        prop_assert_eq!(MetricTable::from_reader(table.to_csv().as_bytes()).unwrap(), table);
    }

    #[test]
    fn displacement_table_round_trips(deltas in proptest::collection::vec(0.01..5.0f64, 3)) {
        let mut entries = Vec::new();
        for (shape, &d) in shapes().iter().zip(&deltas) {
            entries.push((*shape, 3.0, d));
            entries.push((*shape, 4.0, d * 1.5));
        }
        let table = CellDisplacementTable::new(entries).unwrap();
        prop_assert_eq!(CellDisplacementTable::from_reader(table.to_csv().as_bytes()).unwrap(), table);
    }

    #[test]
    fn pneumatic_config_round_trips(sq in 0.1..10.0f64, re in 0.1..10.0f64, ci in 0.1..10.0f64, q in 1.0..1e3f64) {
        let mut cfg = PneumaticConfig::default();
        cfg.shape_resistance.square = sq;
        cfg.shape_resistance.rectangle = re;
        cfg.shape_resistance.circle = ci;
        cfg.supply_flow_cm3_s = q;
        prop_assert_eq!(PneumaticConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn experiment_config_round_trips(trials in 1u32..50, seed in any::<u64>(), phase in 0.5..20.0f64, cv in 0.0..0.2f64) {
        let mut cfg = ExperimentConfig { trials, seed, phase_s: phase, ..Default::default() };
        cfg.noise.flow_cv = cv;
        cfg.variants = vec!["rectangle,4,12".into(), "circle,3,8".into()];
        prop_assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn pattern_panels_match_closed_form(v in 0usize..18, margin in 0.0..1.5f64) {
        let spec = viable()[v];
        let layout = emit_pattern(&spec, margin, DEFAULT_CHANNEL_WIDTH_CM).unwrap();
        let (w, h) = panel_dimensions(&spec, margin);
        let n = spec.n_cells as f64;
        let p = spec.cell_length_cm;
        let cell_h = if spec.shape == CellShape::Rectangle { p / 2.0 } else { p };
        prop_assert_eq!(w, n * (p + 2.0 * margin));
        prop_assert_eq!(h, cell_h + 2.0 * margin);
        for panel in &layout.panels {
            prop_assert_eq!((panel.width_cm, panel.height_cm), (w, h));
            let (lo, hi) = panel.content_bounds();
            prop_assert!(lo.x >= panel.origin.x - 1e-9 && lo.y >= panel.origin.y - 1e-9);
            prop_assert!(hi.x <= panel.origin.x + w + 1e-9 && hi.y <= panel.origin.y + h + 1e-9);
        }
        prop_assert!(roxmltree::Document::parse(&layout.to_svg()).is_ok());
    }
}
