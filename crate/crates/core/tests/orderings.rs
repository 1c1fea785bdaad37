use bellowlab::experiment::run_sweep;
use bellowlab::{CellShape, Experiment, Metric, TrialMetrics};

fn mean_where(rows: &[TrialMetrics], metric: Metric, pred: impl Fn(&TrialMetrics) -> bool) -> f64 {
    let vals: Vec<f64> = rows.iter().filter(|r| pred(r)).map(|r| metric.value(r)).collect();
    vals.iter().sum::<f64>() / vals.len() as f64
}

#[test]
fn sweep_reproduces_published_orderings() {
    for seed in [7u64, 1, 2, 3, 42] {
        let rows = run_sweep(&Experiment::standard(seed)).unwrap();
        let by_shape = |m, s| mean_where(&rows, m, |r| r.variant.shape == s);
        let by_n = |m, n| mean_where(&rows, m, |r| r.variant.n_cells == n);
        let by_p = |m, p| mean_where(&rows, m, |r| r.variant.cell_length_cm == p);
        let path = Metric::PathLength;
        let si = Metric::StraightnessIndex;
        let ang = Metric::FlexionAngle;
        eprintln!(
            "seed {seed}: path S/R/C {:.3} {:.3} {:.3}; path n {:.3} {:.3} {:.3}; si n {:.4} {:.4} {:.4}; ang p {:.2} {:.2}; ang R/C {:.2} {:.2}",
            by_shape(path, CellShape::Square), by_shape(path, CellShape::Rectangle), by_shape(path, CellShape::Circle),
            by_n(path, 8), by_n(path, 10), by_n(path, 12),
            by_n(si, 8), by_n(si, 10), by_n(si, 12),
            by_p(ang, 3.0), by_p(ang, 4.0),
            by_shape(ang, CellShape::Rectangle), by_shape(ang, CellShape::Circle)
        );
        assert!(by_shape(path, CellShape::Circle) > by_shape(path, CellShape::Square));
        assert!(by_shape(path, CellShape::Circle) > by_shape(path, CellShape::Rectangle));
        assert!(by_n(path, 8) < by_n(path, 10));
        assert!(by_n(path, 8) < by_n(path, 12));
        assert!(by_n(si, 8) < by_n(si, 10) && by_n(si, 10) < by_n(si, 12));
        assert!(by_p(ang, 4.0) > by_p(ang, 3.0));
        assert!(by_shape(ang, CellShape::Circle) > by_shape(ang, CellShape::Rectangle));
    }
}
