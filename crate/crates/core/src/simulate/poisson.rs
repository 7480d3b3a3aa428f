use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::rng::{rng_from_seed, SimRng};
use crate::error::{Error, Result};
use crate::geom::{ObservationWindow, Point};
use crate::pattern::PointPattern;
use crate::raster::RasterSurface;

/// Relative slack allowed above the dominating bound before it counts as violated.
const BOUND_SLACK: f64 = 1e-12;

/// An intensity evaluated at locations inside the window.
pub trait IntensityFn: Sync {
    fn intensity(&self, u: &Point) -> f64;
}

impl<F: Fn(&Point) -> f64 + Sync> IntensityFn for F {
    fn intensity(&self, u: &Point) -> f64 {
        self(u)
    }
}

impl IntensityFn for RasterSurface {
    fn intensity(&self, u: &Point) -> f64 {
        self.at(u).unwrap_or(f64::NAN)
    }
}

pub(crate) fn poisson_count(rng: &mut SimRng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as usize
}

pub(crate) fn uniform_in(rng: &mut SimRng, w: &ObservationWindow) -> Point {
    Point::new(
        w.x_min() + w.width() * rng.random::<f64>(),
        w.y_min() + w.height() * rng.random::<f64>(),
    )
}

pub(crate) fn homog_points(rng: &mut SimRng, rho: f64, w: &ObservationWindow) -> Vec<Point> {
    let n = poisson_count(rng, rho * w.area());
    (0..n).map(|_| uniform_in(rng, w)).collect()
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, "must be a finite non-negative rate"))
    }
}

/// `N ~ Poisson(rho |W|)` points placed uniformly on the window.
pub fn sim_poisson_homog(rho: f64, w: &ObservationWindow, seed: u64) -> Result<PointPattern> {
    check_rate("rho", rho)?;
    let mut rng = rng_from_seed(seed);
    Ok(PointPattern::from_trusted(homog_points(&mut rng, rho, w), *w))
}

pub(crate) fn thin_with(
    rng: &mut SimRng,
    intensity: &dyn IntensityFn,
    lambda_max: f64,
    w: &ObservationWindow,
) -> Result<Vec<Point>> {
    let proposals = homog_points(rng, lambda_max, w);
    let mut kept = Vec::with_capacity(proposals.len());
    for u in proposals {
        let v = intensity.intensity(&u);
        if !v.is_finite() || v < 0.0 {
            return Err(Error::NonFinite("intensity (must be finite and non-negative)"));
        }
        if v > lambda_max * (1.0 + BOUND_SLACK) {
            return Err(Error::DominatingBound {
                value: v,
                bound: lambda_max,
            });
        }
        if rng.random::<f64>() * lambda_max < v {
            kept.push(u);
        }
    }
    Ok(kept)
}

/// Thinning of a homogeneous `Poisson(lambda_max)` sample with retention `intensity(u) / lambda_max`.
pub fn sim_poisson_inhom(
    intensity: &dyn IntensityFn,
    lambda_max: f64,
    w: &ObservationWindow,
    seed: u64,
) -> Result<PointPattern> {
    check_rate("lambda_max", lambda_max)?;
    let mut rng = rng_from_seed(seed);
    Ok(PointPattern::from_trusted(thin_with(&mut rng, intensity, lambda_max, w)?, *w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_pattern() {
        let w = ObservationWindow::unit_square();
        assert_eq!(
            sim_poisson_homog(125.0, &w, 7).unwrap(),
            sim_poisson_homog(125.0, &w, 7).unwrap()
        );
        assert_ne!(
            sim_poisson_homog(125.0, &w, 7).unwrap(),
            sim_poisson_homog(125.0, &w, 8).unwrap()
        );
    }

    #[test]
    fn tiny_rate_gives_empty_pattern() {
        let w = ObservationWindow::unit_square();
        assert!(sim_poisson_homog(1e-9, &w, 3).unwrap().is_empty());
        assert!(sim_poisson_inhom(&|_: &Point| 0.0, 50.0, &w, 3).unwrap().is_empty());
    }

    #[test]
    fn bound_violation_detected() {
        let w = ObservationWindow::unit_square();
        let err = sim_poisson_inhom(&|u: &Point| 200.0 * u.x, 100.0, &w, 1).unwrap_err();
        assert!(matches!(err, Error::DominatingBound { .. }));
    }

    #[test]
    fn negative_rate_rejected() {
        let w = ObservationWindow::unit_square();
        assert!(sim_poisson_homog(-1.0, &w, 1).is_err());
    }
}
