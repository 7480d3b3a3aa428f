use lisafit::fit::OffsetMethod;
use lisafit::geom::Point;
use lisafit::gof::{mise, pearson_chi2, run_study, Metric, Outcome, QuadratPartition, StudyConfig};
use lisafit::raster::surface_integral;
use lisafit::simulate::{Family, ScenarioSpec};
use lisafit::{Error, ObservationWindow, PointPattern, RasterDims, RasterSurface};

fn unit() -> ObservationWindow {
    ObservationWindow::unit_square()
}

fn piled() -> PointPattern {
    let pts = [(0.1, 0.1), (0.2, 0.3), (0.3, 0.2), (0.4, 0.4)];
    PointPattern::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect(), unit()).unwrap()
}

#[test]
fn chi2_hand_values() {
    let fitted = RasterSurface::constant(unit(), RasterDims::square(4), 4.0).unwrap();
    let q = QuadratPartition::new(unit(), 2, 2).unwrap();
    let spread = PointPattern::new(
        vec![Point::new(0.25, 0.25), Point::new(0.75, 0.25), Point::new(0.25, 0.75), Point::new(0.75, 0.75)],
        unit(),
    )
    .unwrap();
    assert_eq!(pearson_chi2(&spread, &fitted, &q).unwrap(), 0.0);
    assert_eq!(pearson_chi2(&piled(), &fitted, &q).unwrap(), 12.0);
}

#[test]
fn refining_partition_does_not_decrease_concentrated_statistic() {
    let fitted = RasterSurface::constant(unit(), RasterDims::square(8), 4.0).unwrap();
    let coarse = pearson_chi2(&piled(), &fitted, &QuadratPartition::new(unit(), 2, 2).unwrap()).unwrap();
    // 16 tiles of expected 0.25; the four points fill four distinct tiles of the lower-left block.
    let fine = pearson_chi2(&piled(), &fitted, &QuadratPartition::new(unit(), 4, 4).unwrap()).unwrap();
    let hand = 4.0 * (1.0 - 0.25f64).powi(2) / 0.25 + 12.0 * 0.25;
    assert!((fine - hand).abs() < 1e-12, "{fine} vs {hand}");
    assert!(fine >= coarse);
}

#[test]
fn oversized_mass_is_penalised() {
    let matched = RasterSurface::constant(unit(), RasterDims::square(8), 4.0).unwrap();
    let huge = matched.map(|v| 10.0 * v).unwrap();
    let q = QuadratPartition::new(unit(), 2, 2).unwrap();
    assert!(pearson_chi2(&piled(), &huge, &q).unwrap() > pearson_chi2(&piled(), &matched, &q).unwrap());
}

#[test]
fn zero_mass_tile_is_named() {
    let values = vec![0.0, 1.0, 1.0, 1.0];
    let fitted = RasterSurface::new(unit(), RasterDims::square(2), values).unwrap();
    let q = QuadratPartition::new(unit(), 2, 2).unwrap();
    match pearson_chi2(&piled(), &fitted, &q) {
        Err(Error::DegenerateTile { row: 0, col: 0 }) => {}
        other => panic!("expected degenerate tile (0, 0), got {other:?}"),
    }
}

#[test]
fn mise_hand_value_and_permutation() {
    let truth = RasterSurface::constant(unit(), RasterDims::square(2), 1.0).unwrap();
    let a = RasterSurface::new(unit(), RasterDims::square(2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let b = RasterSurface::constant(unit(), RasterDims::square(2), 3.0).unwrap();
    // a: (0 + 1 + 4 + 9) / 4 = 3.5; b: 4.
    let m = mise(&[a.clone(), b.clone()], &truth).unwrap();
    assert!((m - 3.75).abs() < 1e-12);
    assert_eq!(m, mise(&[b, a], &truth).unwrap());
    let s = RasterSurface::new(unit(), RasterDims::square(2), vec![0.0, 1.0, 2.0, 3.0]).unwrap();
    assert!((surface_integral(&s) - 1.5).abs() < 1e-15);
}

#[test]
fn study_is_deterministic_and_single_replicate_mean_is_the_value() {
    let spec = ScenarioSpec::new(Family::PoissonHomog, &[("rho", 80.0)], 5);
    let mut cfg = StudyConfig::new(1, Metric::Chi2);
    cfg.methods = vec![OffsetMethod::None];
    let r = run_study(&spec, &cfg).unwrap();
    let Outcome::Ok { value } = r.records[0].outcomes[&OffsetMethod::None] else {
        panic!("replicate failed");
    };
    assert_eq!(r.summary(OffsetMethod::None).unwrap().mean, value);

    let mut cfg = StudyConfig::new(4, Metric::Mise);
    cfg.methods = OffsetMethod::ALL.to_vec();
    let a = run_study(&spec, &cfg).unwrap();
    let b = run_study(&spec, &cfg).unwrap();
    assert_eq!(a, b);
    for rec in &a.records {
        assert_eq!(rec.outcomes.len(), 4);
    }
}

#[test]
fn mise_rejected_without_known_truth() {
    let spec = ScenarioSpec::new(Family::Thomas, &[("kappa", 10.0)], 5);
    assert!(run_study(&spec, &StudyConfig::new(2, Metric::Mise)).is_err());
}
