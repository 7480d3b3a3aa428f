use lisafit::fit::{
    fit_poisson, fit_with_method, make_quadrature, Covariates, EstimationSettings, ModelSpec,
    OffsetMethod,
};
use lisafit::geom::Point;
use lisafit::simulate::{replicate_seed, sim_poisson_homog, sim_poisson_inhom};
use lisafit::{ObservationWindow, RasterDims, RasterSurface};

/// Exact slope MLE for `rho = exp(a + b x)` on the unit square: solves
/// `mean(x) = e^b / (e^b - 1) - 1/b` by bisection.
fn exact_slope(mean_x: f64) -> f64 {
    let g = |t: f64| {
        if t.abs() > 1e-6 {
            t.exp() / t.exp_m1() - 1.0 / t
        } else {
            0.5 + t / 12.0
        }
    };
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < mean_x {
            lo = mid
        } else {
            hi = mid
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn slope_matches_exact_likelihood() {
    let w = ObservationWindow::unit_square();
    let names = vec!["x".to_string()];
    let cov = Covariates::builtin(&names).unwrap();
    let settings = EstimationSettings {
        dummy_grid: Some(256),
        ..EstimationSettings::default()
    };
    let intensity = |u: &Point| (4.0 + u.x).exp();
    for i in 0..20 {
        let p = sim_poisson_inhom(&intensity, 5f64.exp(), &w, replicate_seed(17, i)).unwrap();
        let fit = fit_with_method(&p, &cov, &names, OffsetMethod::None, None, &settings).unwrap().fit;
        let mean_x = p.points().iter().map(|q| q.x).sum::<f64>() / p.len() as f64;
        let b = exact_slope(mean_x);
        assert!((fit.theta[1] - b).abs() < 1e-3, "replicate {i}: {} vs {b}", fit.theta[1]);
        let a = (p.len() as f64 * b / b.exp_m1()).ln();
        assert!((fit.theta[0] - a).abs() < 1e-3, "replicate {i}: {} vs {a}", fit.theta[0]);
    }
}

#[test]
fn intercept_closed_form_on_rectangles() {
    for (i, (wd, ht)) in [(1.0, 1.0), (2.5, 0.7), (0.4, 3.0)].into_iter().enumerate() {
        let w = ObservationWindow::new(-1.0, -1.0 + wd, 2.0, 2.0 + ht).unwrap();
        let p = sim_poisson_homog(80.0, &w, i as u64).unwrap();
        let q = make_quadrature(&p, 20).unwrap();
        let f = fit_poisson(&p, &Covariates::new(), &ModelSpec::homogeneous(), &q).unwrap();
        assert!((f.theta[0] - (p.len() as f64 / w.area()).ln()).abs() < 1e-10);
        assert!(f.converged);
        let c = 3.7;
        let b = RasterSurface::constant(w, RasterDims::square(16), c).unwrap();
        let g = fit_poisson(&p, &Covariates::new(), &ModelSpec::homogeneous().with_surface(b).unwrap(), &q).unwrap();
        assert!((g.theta[0] - f.theta[0] + c.ln()).abs() < 1e-10);
        assert!((g.log_likelihood - f.log_likelihood).abs() < 1e-8 * f.log_likelihood.abs().max(1.0));
    }
}

#[test]
fn offset_methods_agree_without_interaction_signal() {
    let w = ObservationWindow::unit_square();
    let p = sim_poisson_homog(150.0, &w, 99).unwrap();
    let settings = EstimationSettings::default();
    let marks = lisafit::fit::point_marks(&p, &settings).unwrap();
    let base = fit_with_method(&p, &Covariates::new(), &[], OffsetMethod::None, None, &settings).unwrap();
    for m in [OffsetMethod::Indicator, OffsetMethod::Idw, OffsetMethod::Kernel] {
        let f = fit_with_method(&p, &Covariates::new(), &[], m, Some(&marks), &settings).unwrap();
        assert!(f.fit.converged, "{m}");
        assert!((f.fit.theta[0] - base.fit.theta[0]).abs() < 0.1, "{m}: {}", f.fit.theta[0]);
    }
}
