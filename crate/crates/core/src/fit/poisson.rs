use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::model::{aic, Covariates, FitResult, ModelSpec, Offset};
use super::quadrature::QuadratureScheme;
use crate::error::{Error, Result};
use crate::pattern::PointPattern;
use crate::raster::{RasterDims, RasterSurface};

pub const MAX_ITERATIONS: usize = 100;
pub const GRADIENT_TOL: f64 = 1e-8;
pub const RELATIVE_OBJECTIVE_TOL: f64 = 1e-10;
/// Offset values are floored here before taking logarithms.
pub const OFFSET_FLOOR: f64 = 1e-10;
const MAX_HALVINGS: usize = 50;
const COLLINEAR_TOL: f64 = 1e-10;

struct Design {
    k: usize,
    /// Row-major, one row per quadrature node.
    z: Vec<f64>,
    weights: Vec<f64>,
    log_offset: Vec<f64>,
    n_data: usize,
}

struct Eval {
    objective: f64,
    gradient: DVector<f64>,
    neg_hessian: DMatrix<f64>,
}

impl Design {
    fn row(&self, j: usize) -> &[f64] {
        &self.z[j * self.k..(j + 1) * self.k]
    }

    fn eta(&self, j: usize, theta: &DVector<f64>) -> f64 {
        self.row(j).iter().zip(theta.iter()).map(|(z, t)| z * t).sum::<f64>() + self.log_offset[j]
    }

    fn evaluate(&self, theta: &DVector<f64>) -> Eval {
        let k = self.k;
        let mut objective = 0.0;
        let mut gradient = DVector::zeros(k);
        let mut neg_hessian = DMatrix::zeros(k, k);
        for j in 0..self.weights.len() {
            let eta = self.eta(j, theta);
            let z = self.row(j);
            if j < self.n_data {
                objective += eta;
                for a in 0..k {
                    gradient[a] += z[a];
                }
            }
            let mu = self.weights[j] * eta.exp();
            objective -= mu;
            for a in 0..k {
                gradient[a] -= mu * z[a];
                for b in 0..=a {
                    neg_hessian[(a, b)] += mu * z[a] * z[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                neg_hessian[(b, a)] = neg_hessian[(a, b)];
            }
        }
        Eval {
            objective,
            gradient,
            neg_hessian,
        }
    }

    /// Terms whose weighted column is (numerically) spanned by earlier columns.
    fn collinear_terms(&self, names: &[String]) -> Vec<String> {
        let k = self.k;
        let m = self.weights.len();
        let sw: Vec<f64> = (0..m)
            .map(|j| (self.weights[j] * self.log_offset[j].exp()).sqrt())
            .collect();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut out = Vec::new();
        for (a, name) in names.iter().enumerate().take(k) {
            let mut v: Vec<f64> = (0..m).map(|j| sw[j] * self.row(j)[a]).collect();
            let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for _ in 0..2 {
                for b in &basis {
                    let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                    for (x, y) in v.iter_mut().zip(b) {
                        *x -= dot * y;
                    }
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm0 == 0.0 || norm <= COLLINEAR_TOL * norm0 {
                out.push(name.clone());
            } else {
                basis.push(v.into_iter().map(|x| x / norm).collect());
            }
        }
        out
    }
}

fn build_design(
    p: &PointPattern,
    cov: &Covariates,
    m: &ModelSpec,
    q: &QuadratureScheme,
) -> Result<Design> {
    if q.n_data() != p.len() || q.window() != p.window() {
        return Err(Error::Config(
            "quadrature scheme was built for a different pattern".into(),
        ));
    }
    let surfaces = m
        .covariate_names
        .iter()
        .map(|name| cov.get(name))
        .collect::<Result<Vec<_>>>()?;
    let k = 1 + surfaces.len();
    let mut z = Vec::with_capacity(q.len() * k);
    for node in q.nodes() {
        z.push(1.0);
        for (s, name) in surfaces.iter().zip(&m.covariate_names) {
            let v = s.at(node).map_err(|_| {
                Error::Config(format!(
                    "covariate `{name}` does not cover node ({}, {})",
                    node.x, node.y
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite("covariate surface"));
            }
            z.push(v);
        }
    }
    let log_offset = match &m.offset {
        Offset::None => vec![0.0; q.len()],
        Offset::Indicator { point_offsets } => {
            if point_offsets.len() != p.len() {
                return Err(Error::MarkCount {
                    marks: point_offsets.len(),
                    points: p.len(),
                });
            }
            (0..q.len())
                .map(|j| {
                    if q.is_data(j) {
                        point_offsets[j].max(OFFSET_FLOOR).ln()
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        offset @ (Offset::Surface(_) | Offset::Field { .. }) => q
            .nodes()
            .par_iter()
            .map(|node| {
                offset
                    .weight_at(node)
                    .map(|v| v.max(OFFSET_FLOOR).ln())
                    .map_err(|_| Error::Config("offset surface does not cover the window".into()))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(Design {
        k,
        z,
        weights: q.weights().to_vec(),
        log_offset,
        n_data: q.n_data(),
    })
}

/// Maximises the quadrature approximation of the (weighted) Poisson log-likelihood
/// `sum_data log(nu(x) phi(x)) - sum_nodes w nu(node) phi(node)` by damped Newton.
///
/// In indicator mode `phi` is the point offset at data nodes and one at dummy nodes.
pub fn fit_poisson(
    p: &PointPattern,
    cov: &Covariates,
    m: &ModelSpec,
    q: &QuadratureScheme,
) -> Result<FitResult> {
    if p.is_empty() {
        return Err(Error::NoData("cannot fit a model to an empty pattern"));
    }
    let d = build_design(p, cov, m, q)?;
    let names = m.term_names();
    let collinear = d.collinear_terms(&names);
    if !collinear.is_empty() {
        return Err(Error::RankDeficient { terms: collinear });
    }

    let mass: f64 = (0..q.len()).map(|j| d.weights[j] * d.log_offset[j].exp()).sum();
    let mut theta = DVector::zeros(d.k);
    theta[0] = (p.len() as f64 / mass).ln();
    let mut cur = d.evaluate(&theta);
    let mut trace = vec![cur.objective];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        if cur.gradient.amax() < GRADIENT_TOL {
            converged = true;
            break;
        }
        let chol = cur
            .neg_hessian
            .clone()
            .cholesky()
            .ok_or_else(|| Error::RankDeficient {
                terms: names.clone(),
            })?;
        let delta = chol.solve(&cur.gradient);
        let predicted_gain = delta.dot(&cur.gradient);
        let mut step = 1.0;
        let mut next = None;
        for _ in 0..MAX_HALVINGS {
            let cand = &theta + &delta * step;
            let e = d.evaluate(&cand);
            if e.objective.is_finite() && e.objective >= cur.objective {
                next = Some((cand, e));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, e)) = next else {
            // No representable improvement along the Newton direction.
            converged = predicted_gain <= RELATIVE_OBJECTIVE_TOL * cur.objective.abs().max(1.0);
            break;
        };
        iterations += 1;
        let rel = (e.objective - cur.objective).abs() / cur.objective.abs().max(1.0);
        theta = cand;
        cur = e;
        trace.push(cur.objective);
        if rel < RELATIVE_OBJECTIVE_TOL || cur.gradient.amax() < GRADIENT_TOL {
            converged = true;
            break;
        }
    }

    let cov_matrix = cur
        .neg_hessian
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::RankDeficient {
            terms: names.clone(),
        })?;
    let k = d.k;
    let covariance = (0..k)
        .map(|a| (0..k).map(|b| 0.5 * (cov_matrix[(a, b)] + cov_matrix[(b, a)])).collect())
        .collect();
    let log_likelihood = cur.objective;
    Ok(FitResult {
        theta: theta.iter().copied().collect(),
        term_names: names,
        covariance,
        log_likelihood,
        aic: aic(k, log_likelihood),
        model: m.clone(),
        window: *p.window(),
        converged,
        iterations,
        objective_trace: trace,
    })
}

/// Cellwise `exp(theta . (1, z(u))) B(u)`, with `B = 1` unless the model carries a surface offset.
pub fn predict_intensity(
    f: &FitResult,
    cov: &Covariates,
    dims: RasterDims,
) -> Result<RasterSurface> {
    let surfaces = f
        .model
        .covariate_names
        .iter()
        .map(|name| cov.get(name))
        .collect::<Result<Vec<_>>>()?;
    let grid = RasterSurface::constant(f.window, dims, 0.0)?;
    let mut values = Vec::with_capacity(dims.cells());
    for (u, _) in grid.cells() {
        let mut eta = f.theta[0];
        for (s, t) in surfaces.iter().zip(&f.theta[1..]) {
            eta += t * s.at(&u)?;
        }
        let b = match &f.model.offset {
            Offset::Surface(_) | Offset::Field { .. } => f.model.offset.weight_at(&u)?.max(OFFSET_FLOOR),
            _ => 1.0,
        };
        values.push(eta.exp() * b);
    }
    RasterSurface::new(f.window, dims, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::quadrature::make_quadrature;
    use crate::geom::{ObservationWindow, Point};
    use crate::raster::surface_integral;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_pattern(n: usize, seed: u64) -> PointPattern {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..n)
            .map(|_| Point::new(rng.random::<f64>(), rng.random::<f64>()))
            .collect();
        PointPattern::new(pts, ObservationWindow::unit_square()).unwrap()
    }

    fn covs(names: &[&str]) -> Covariates {
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        Covariates::builtin(&names)
            .unwrap()
    }

    #[test]
    fn intercept_only_closed_form() {
        let p = uniform_pattern(100, 1);
        let q = make_quadrature(&p, 16).unwrap();
        let f = fit_poisson(&p, &Covariates::new(), &ModelSpec::homogeneous(), &q).unwrap();
        assert!(f.converged);
        assert!((f.theta[0] - 100f64.ln()).abs() < 1e-8);
        assert_eq!(f.aic, 2.0 * 1.0 - 2.0 * f.log_likelihood);
    }

    #[test]
    fn constant_offset_shifts_intercept() {
        let p = uniform_pattern(80, 2);
        let q = make_quadrature(&p, 16).unwrap();
        let c = covs(&["x"]);
        let base = ModelSpec::new(vec!["x".into()]);
        let f0 = fit_poisson(&p, &c, &base, &q).unwrap();
        let s = RasterSurface::constant(ObservationWindow::unit_square(), RasterDims::square(32), 3.5)
            .unwrap();
        let f1 = fit_poisson(&p, &c, &base.clone().with_surface(s).unwrap(), &q).unwrap();
        assert!((f1.theta[0] - (f0.theta[0] - 3.5f64.ln())).abs() < 1e-8);
        assert!((f1.theta[1] - f0.theta[1]).abs() < 1e-8);
        let d = RasterDims::square(32);
        let p0 = predict_intensity(&f0, &c, d).unwrap();
        let p1 = predict_intensity(&f1, &c, d).unwrap();
        for (a, b) in p0.values().iter().zip(p1.values()) {
            assert!((a - b).abs() / a < 1e-8);
        }
    }

    #[test]
    fn prediction_mass_matches_count() {
        let p = uniform_pattern(150, 3);
        let q = make_quadrature(&p, 64).unwrap();
        let f = fit_poisson(&p, &Covariates::new(), &ModelSpec::homogeneous(), &q).unwrap();
        let s = predict_intensity(&f, &Covariates::new(), RasterDims::square(128)).unwrap();
        assert!((surface_integral(&s) - 150.0).abs() / 150.0 < 0.01);
    }

    #[test]
    fn duplicated_covariate_is_named() {
        let p = uniform_pattern(50, 4);
        let q = make_quadrature(&p, 16).unwrap();
        let xs = RasterSurface::from_fn(ObservationWindow::unit_square(), RasterDims::square(64), |u| u.x)
            .unwrap();
        let c = Covariates::new().with("a", xs.clone()).with("b", xs.map(|v| 2.0 * v).unwrap());
        let err = fit_poisson(&p, &c, &ModelSpec::new(vec!["a".into(), "b".into()]), &q).unwrap_err();
        match err {
            Error::RankDeficient { terms } => assert_eq!(terms, vec!["b".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_covariate_is_config_error() {
        let p = uniform_pattern(10, 5);
        let q = make_quadrature(&p, 8).unwrap();
        let err = fit_poisson(&p, &Covariates::new(), &ModelSpec::new(vec!["x".into()]), &q)
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn objective_never_decreases(seed in 0u64..1000, n in 5usize..120) {
            let p = uniform_pattern(n, seed);
            let q = make_quadrature(&p, 12).unwrap();
            let f = fit_poisson(&p, &covs(&["x", "y2"]), &ModelSpec::new(vec!["x".into(), "y2".into()]), &q).unwrap();
            for w in f.objective_trace.windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
            for a in 0..f.theta.len() {
                for b in 0..f.theta.len() {
                    prop_assert_eq!(f.covariance[a][b], f.covariance[b][a]);
                }
                prop_assert!(f.covariance[a][a] >= 0.0);
            }
        }

        #[test]
        fn score_identity_intercept_only(seed in 0u64..1000, n in 1usize..200) {
            let p = uniform_pattern(n, seed);
            let q = make_quadrature(&p, 10).unwrap();
            let f = fit_poisson(&p, &Covariates::new(), &ModelSpec::homogeneous(), &q).unwrap();
            let mass: f64 = q.weights().iter().map(|w| w * f.theta[0].exp()).sum();
            prop_assert!((mass - n as f64).abs() < 1e-8);
        }
    }
}
