//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use lisafit::fit::{
    fit_poisson, fit_with_method, make_quadrature, point_marks, Covariates, EstimationSettings,
    ModelSpec, OffsetMethod,
};
use lisafit::geom::Point;
use lisafit::gof::{pearson_chi2, run_study, Metric, QuadratPartition, StudyConfig};
use lisafit::interaction::{discrepancy, DiscrepancyKind, DiscrepancySpec};
use lisafit::localstats::{global_k, local_k, local_k_all, LocalKFunction};
use lisafit::simulate::{
    replicate_seed, sim_poisson_homog, sim_poisson_inhom, sim_strauss, Family, LgcpSampler,
    Scenario, ScenarioSpec,
};
use lisafit::{ObservationWindow, PointPattern, RadiusGrid, RasterDims, RasterSurface};
use lisafit_cli::report::{build_report, redwood, ReportOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LOCAL_K_TOL: f64 = 1e-12;
const POISSON_K_REL_TOL: f64 = 0.05;
const PHI_DIRECTION_MIN_PAIRS: usize = 95;
const MLE_TOL: f64 = 1e-8;
const SLOPE_RANGE: (f64, f64) = (0.9, 1.1);
const INTERCEPT_RANGE: (f64, f64) = (3.9, 4.1);
const POISSON_TIE_SE: f64 = 2.0;
const STRAUSS_TIE_SE: f64 = 1.0;
const SIM_CONTRACT_SE: f64 = 3.0;

type Verdict = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Verdict,
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pooled_se(a: f64, b: f64) -> f64 {
    ((a * a + b * b) / 2.0).sqrt()
}

fn unit() -> ObservationWindow {
    ObservationWindow::unit_square()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

fn brute_local_k(p: &PointPattern, i: usize, r: &[f64]) -> Vec<f64> {
    let w = p.window();
    let pts = p.points();
    let n = pts.len() as f64;
    r.iter()
        .map(|&rk| {
            let mut s = 0.0;
            for (j, xj) in pts.iter().enumerate() {
                if j == i {
                    continue;
                }
                let (dx, dy) = (xj.x - pts[i].x, xj.y - pts[i].y);
                if (dx * dx + dy * dy).sqrt() <= rk {
                    let overlap = (w.width() - dx.abs()) * (w.height() - dy.abs());
                    s += w.area() / overlap;
                }
            }
            w.area() * s / (n - 1.0)
        })
        .collect()
}

fn c1_local_k_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (x0, y0) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (wd, ht) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
        let w = ObservationWindow::new(x0, x0 + wd, y0, y0 + ht).unwrap();
        let n = rng.random_range(2..=30);
        let pts = (0..n)
            .map(|_| Point::new(x0 + wd * rng.random::<f64>(), y0 + ht * rng.random::<f64>()))
            .collect();
        let p = PointPattern::new(pts, w).unwrap();
        let g = RadiusGrid::for_window(&w, None, 50).unwrap();
        for i in 0..n {
            let got = local_k(&p, i, &g).unwrap();
            let want = brute_local_k(&p, i, g.values());
            for (a, b) in got.k_values.iter().zip(&want) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    check(worst <= LOCAL_K_TOL, format!("max abs deviation {worst:.3e} (tol {LOCAL_K_TOL:e})"))
}

fn c2_poisson_k() -> Verdict {
    let w = unit();
    let g = RadiusGrid::linspace(0.01, 0.125, 24).unwrap();
    let reps = 200;
    let mut sum = vec![0.0; g.len()];
    for i in 0..reps {
        let p = sim_poisson_homog(250.0, &w, replicate_seed(202, i)).unwrap();
        let k = global_k(&local_k_all(&p, &g).unwrap()).unwrap();
        for (s, v) in sum.iter_mut().zip(&k.k_values) {
            *s += v / reps as f64;
        }
    }
    let worst = g
        .values()
        .iter()
        .zip(&sum)
        .map(|(r, k)| (k - PI * r * r).abs() / (PI * r * r))
        .fold(0.0, f64::max);
    check(
        worst < POISSON_K_REL_TOL,
        format!("max relative deviation {:.2}% (tol {:.0}%)", 100.0 * worst, 100.0 * POISSON_K_REL_TOL),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Expected Thomas count on the unit square by midpoint quadrature over the parent window.
fn thomas_expected_count(kappa: f64, sigma: f64, mu0: f64, mu_x: f64, mu_c: f64) -> f64 {
    let margin = 4.0 * sigma;
    let m = 400;
    let side = 1.0 + 2.0 * margin;
    let h = side / m as f64;
    let keep = |c: f64| normal_cdf((1.0 - c) / sigma) - normal_cdf(-c / sigma);
    let mut total = 0.0;
    for a in 0..m {
        let cx = -margin + (a as f64 + 0.5) * h;
        for b in 0..m {
            let cy = -margin + (b as f64 + 0.5) * h;
            total += mu0 * (mu_x * cx + mu_c).exp() * keep(cx) * keep(cy);
        }
    }
    kappa * total * h * h
}

fn c3_discrepancy() -> Verdict {
    let g = RadiusGrid::default_for(&unit());
    let benchmark = LocalKFunction {
        owner_index: 0,
        grid: g.clone(),
        k_values: g.values().iter().map(|r| PI * r * r).collect(),
    };
    let kinds = [
        (DiscrepancyKind::ExpNormalized, 1.0),
        (DiscrepancyKind::ExpSquared, 1.0),
        (DiscrepancyKind::UniformMetric, 0.0),
        (DiscrepancyKind::L2Metric, 0.0),
    ];
    for (kind, want) in kinds {
        let got = discrepancy(&benchmark, &DiscrepancySpec::new(kind)).unwrap();
        if got != want {
            return Err(format!("{kind:?} of the benchmark is {got}, expected {want}"));
        }
    }

    let thomas = Scenario::resolve(&ScenarioSpec::new(Family::Thomas, &[("kappa", 20.0)], 303)).unwrap();
    let rho = thomas_expected_count(20.0, 0.2, 5.0, 2.0, -1.0);
    let poisson = Scenario::resolve(&ScenarioSpec::new(Family::PoissonHomog, &[("rho", rho)], 303)).unwrap();
    let s = EstimationSettings::default();
    let mut wins = 0;
    for i in 0..100 {
        let a = median(point_marks(&thomas.replicate(i).unwrap(), &s).unwrap().marks().to_vec());
        let b = median(point_marks(&poisson.replicate(i).unwrap(), &s).unwrap().marks().to_vec());
        if a > b {
            wins += 1;
        }
    }
    check(
        wins >= PHI_DIRECTION_MIN_PAIRS,
        format!("benchmark nullity exact; Thomas median phi* above Poisson (E[N] = {rho:.1}) in {wins}/100 pairs"),
    )
}

fn c4_mle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let dims = RasterDims::square(32);
    let (mut worst_mle, mut worst_shift) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let (wd, ht) = (rng.random_range(0.5..3.0), rng.random_range(0.5..3.0));
        let w = ObservationWindow::new(0.0, wd, 0.0, ht).unwrap();
        let rho = rng.random_range(20.0..200.0);
        let p = sim_poisson_homog(rho, &w, replicate_seed(404, i)).unwrap();
        if p.is_empty() {
            continue;
        }
        let q = make_quadrature(&p, 16).unwrap();
        let cov = Covariates::new();
        let base = fit_poisson(&p, &cov, &ModelSpec::homogeneous(), &q).unwrap();
        let want = (p.len() as f64 / w.area()).ln();
        worst_mle = worst_mle.max((base.theta[0] - want).abs());

        let c = rng.random_range(0.2..5.0);
        let offset = RasterSurface::constant(w, dims, c).unwrap();
        let shifted = fit_poisson(&p, &cov, &ModelSpec::homogeneous().with_surface(offset).unwrap(), &q).unwrap();
        worst_shift = worst_shift.max((shifted.theta[0] - (want - c.ln())).abs());
    }
    check(
        worst_mle <= MLE_TOL && worst_shift <= MLE_TOL,
        format!("max |theta0 - log(n/|W|)| {worst_mle:.2e}; max offset shift error {worst_shift:.2e}"),
    )
}

fn c5_slope() -> Verdict {
    let w = unit();
    let s = EstimationSettings::default();
    let names = vec!["x".to_string()];
    let cov = Covariates::builtin(&names).unwrap();
    let intensity = |u: &Point| (4.0 + u.x).exp();
    let (mut t0, mut t1) = (Vec::new(), Vec::new());
    for i in 0..100 {
        let p = sim_poisson_inhom(&intensity, 5f64.exp(), &w, replicate_seed(505, i)).unwrap();
        let f = fit_with_method(&p, &cov, &names, OffsetMethod::None, None, &s).unwrap();
        t0.push(f.fit.theta[0]);
        t1.push(f.fit.theta[1]);
    }
    let (m0, m1) = (mean_sd(&t0).0, mean_sd(&t1).0);
    check(
        (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&m1) && (INTERCEPT_RANGE.0..=INTERCEPT_RANGE.1).contains(&m0),
        format!("mean theta0 {m0:.4}, mean theta1 {m1:.4}"),
    )
}

struct Pair {
    none: (f64, f64),
    indicator: (f64, f64),
}

fn paired_study(spec: &ScenarioSpec, replicates: usize, metric: Metric) -> Pair {
    let mut cfg = StudyConfig::new(replicates, metric);
    cfg.methods = vec![OffsetMethod::None, OffsetMethod::Indicator];
    let report = run_study(spec, &cfg).unwrap();
    let get = |m| {
        let s = report.summary(m).unwrap();
        assert_eq!(s.used, replicates, "{m} excluded replicates");
        (s.mean, s.std_error)
    };
    Pair {
        none: get(OffsetMethod::None),
        indicator: get(OffsetMethod::Indicator),
    }
}

fn c6_table1() -> Verdict {
    let lgcp = ScenarioSpec::new(
        Family::Lgcp,
        &[("sigma2", 5.0), ("beta", 20.0), ("target_n", 125.0)],
        606,
    );
    let a = paired_study(&lgcp, 50, Metric::Mise);
    let homog = ScenarioSpec::new(Family::PoissonHomog, &[("rho", 125.0)], 606);
    let b = paired_study(&homog, 50, Metric::Mise);
    let se = pooled_se(b.none.1, b.indicator.1);
    let gap = (b.indicator.0 - b.none.0).abs();
    check(
        a.indicator.0 < a.none.0 && gap < POISSON_TIE_SE * se,
        format!(
            "LGCP MISE I {:.1} vs none {:.1}; Poisson |diff| {gap:.4} vs {POISSON_TIE_SE} x pooled SE {se:.3}",
            a.indicator.0, a.none.0
        ),
    )
}

fn c7_table2() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, kappa) in [20.0, 25.0, 50.0].into_iter().enumerate() {
        let spec = ScenarioSpec::new(Family::Thomas, &[("kappa", kappa)], 707);
        let r = paired_study(&spec, 50, Metric::Chi2);
        let pass = r.indicator.0 <= r.none.0;
        ok &= pass;
        parts.push(format!(
            "Thomas {} I {:.4} vs none {:.4} {}",
            k + 1,
            r.indicator.0,
            r.none.0,
            if pass { "ok" } else { "wrong order" }
        ));
    }
    for (k, (gamma, target)) in [(0.3, 120.0), (0.5, 200.0), (0.7, 400.0)].into_iter().enumerate() {
        let spec = ScenarioSpec::new(
            Family::Strauss,
            &[("gamma", gamma), ("r", 0.05), ("target_n", target)],
            707,
        );
        let r = paired_study(&spec, 50, Metric::Chi2);
        let se = pooled_se(r.none.1, r.indicator.1);
        let gap = (r.indicator.0 - r.none.0).abs();
        let pass = gap < STRAUSS_TIE_SE * se;
        ok &= pass;
        parts.push(format!(
            "Strauss {} |diff| {gap:.4} vs SE {se:.3} {}",
            k + 1,
            if pass { "ok" } else { "not a tie" }
        ));
    }
    check(ok, parts.join("; "))
}

fn c8_redwood() -> Verdict {
    let art = build_report(&redwood(), &ReportOptions::default()).unwrap();
    let aic = |m| art.summary.models.iter().find(|r| r.method == m).unwrap().aic;
    let (i, ks, idw, none) = (
        aic(OffsetMethod::Indicator),
        aic(OffsetMethod::Kernel),
        aic(OffsetMethod::Idw),
        aic(OffsetMethod::None),
    );
    check(
        i < ks && ks < idw && idw < none,
        format!("AIC I {i:.3}, KS {ks:.3}, IDW {idw:.3}, none {none:.3}"),
    )
}

fn same_points(a: &PointPattern, b: &PointPattern) -> bool {
    a.len() == b.len()
        && a.points()
            .iter()
            .zip(b.points())
            .all(|(p, q)| p.x.to_bits() == q.x.to_bits() && p.y.to_bits() == q.y.to_bits())
}

fn c9_simulators() -> Verdict {
    let w = unit();
    let r = 0.05;
    for i in 0..200 {
        let p = sim_strauss(300.0, 0.0, r, 200_000, &w, replicate_seed(909, i)).unwrap();
        let v = p.close_pairs(r);
        if v != 0 {
            return Err(format!("hard-core replicate {i} has {v} close pairs"));
        }
    }

    let beta = 150.0;
    let counts: Vec<f64> = (0..200)
        .map(|i| sim_strauss(beta, 1.0, r, 200_000, &w, replicate_seed(910, i)).unwrap().len() as f64)
        .collect();
    let (m, sd) = mean_sd(&counts);
    let se = sd / (counts.len() as f64).sqrt();
    if (m - beta * w.area()).abs() > SIM_CONTRACT_SE * se {
        return Err(format!("gamma = 1 mean count {m:.2} vs {beta} (SE {se:.2})"));
    }

    let log_mean = |u: &Point| 100f64.ln() + u.x;
    let intensity = |u: &Point| 100.0 * u.x.exp();
    let sampler = LgcpSampler::new(&log_mean, 1e-8, 2.0, RasterDims::square(64), w).unwrap();
    let (mut lc, mut lx, mut pc, mut px) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 0..200 {
        let a = sampler.sample(replicate_seed(911, i));
        let b = sim_poisson_inhom(&intensity, 100f64 * 1f64.exp(), &w, replicate_seed(912, i)).unwrap();
        lc.push(a.len() as f64);
        pc.push(b.len() as f64);
        lx.extend(a.points().iter().map(|p| p.x));
        px.extend(b.points().iter().map(|p| p.x));
    }
    let z = |a: &[f64], b: &[f64]| {
        let ((ma, sa), (mb, sb)) = (mean_sd(a), mean_sd(b));
        (ma - mb).abs() / (sa * sa / a.len() as f64 + sb * sb / b.len() as f64).sqrt()
    };
    let (zc, zx) = (z(&lc, &pc), z(&lx, &px));
    if zc > SIM_CONTRACT_SE || zx > SIM_CONTRACT_SE {
        return Err(format!("LGCP vs thinning: count z {zc:.2}, mean-x z {zx:.2}"));
    }

    let specs = [
        ScenarioSpec::new(Family::PoissonHomog, &[("rho", 100.0)], 9),
        ScenarioSpec::new(Family::PoissonLinear, &[("alpha", 200.0)], 9),
        ScenarioSpec::new(Family::PoissonModulated, &[("alpha", 150.0)], 9),
        ScenarioSpec::new(Family::Lgcp, &[("sigma2", 0.5), ("beta", 2.0), ("target_n", 100.0), ("grid", 64.0)], 9),
        ScenarioSpec::new(Family::Thomas, &[("kappa", 20.0)], 9),
        ScenarioSpec::new(Family::Strauss, &[("gamma", 0.5), ("beta_rate", 150.0), ("iterations", 20_000.0)], 9),
    ];
    for spec in &specs {
        let s = Scenario::resolve(spec).unwrap();
        for i in 0..3 {
            if !same_points(&s.replicate(i).unwrap(), &s.replicate(i).unwrap()) {
                return Err(format!("{:?} replicate {i} not reproducible", spec.family));
            }
        }
    }
    check(
        true,
        format!("hard core clean on 200; gamma = 1 mean {m:.2} (SE {se:.2}); LGCP z {zc:.2}/{zx:.2}; seeds reproducible"),
    )
}

fn c10_chi2_oracle() -> Verdict {
    let w = unit();
    let fitted = RasterSurface::constant(w, RasterDims::square(8), 4.0).unwrap();
    let q = QuadratPartition::new(w, 2, 2).unwrap();
    let spread = PointPattern::new(
        vec![Point::new(0.25, 0.25), Point::new(0.75, 0.25), Point::new(0.25, 0.75), Point::new(0.75, 0.75)],
        w,
    )
    .unwrap();
    let piled = PointPattern::new(
        vec![Point::new(0.1, 0.1), Point::new(0.2, 0.3), Point::new(0.3, 0.2), Point::new(0.4, 0.4)],
        w,
    )
    .unwrap();
    let (a, b) = (pearson_chi2(&spread, &fitted, &q).unwrap(), pearson_chi2(&piled, &fitted, &q).unwrap());
    check(a == 0.0 && b == 12.0, format!("one per tile {a}, all in one tile {b}"))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "local K oracle equivalence", budget: Duration::from_secs(10), run: c1_local_k_oracle },
        Criterion { id: 2, name: "Poisson K benchmark", budget: Duration::from_secs(60), run: c2_poisson_k },
        Criterion { id: 3, name: "discrepancy nullity and direction", budget: Duration::from_secs(300), run: c3_discrepancy },
        Criterion { id: 4, name: "MLE exactness", budget: Duration::from_secs(30), run: c4_mle },
        Criterion { id: 5, name: "slope recovery", budget: Duration::from_secs(300), run: c5_slope },
        Criterion { id: 6, name: "MISE ordering (LGCP, Poisson)", budget: Duration::from_secs(1200), run: c6_table1 },
        Criterion { id: 7, name: "chi-square ordering (Thomas, Strauss)", budget: Duration::from_secs(1800), run: c7_table2 },
        Criterion { id: 8, name: "Redwood AIC ordering", budget: Duration::from_secs(60), run: c8_redwood },
        Criterion { id: 9, name: "simulator contracts", budget: Duration::from_secs(600), run: c9_simulators },
        Criterion { id: 10, name: "chi-square hand oracle", budget: Duration::from_secs(1), run: c10_chi2_oracle },
    ];
    let mut failed = 0;
    for c in &criteria {
        let t = Instant::now();
        let verdict = (c.run)();
        let elapsed = t.elapsed();
        let (ok, detail) = match verdict {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} budget", c.budget)),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {}: {} [{:.2}s]",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.name,
            detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
