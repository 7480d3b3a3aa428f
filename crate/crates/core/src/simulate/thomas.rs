use rand_distr::{Distribution, Normal};

use super::poisson::{homog_points, poisson_count, IntensityFn};
use super::rng::{rng_from_seed, SimRng};
use crate::error::{Error, Result};
use crate::geom::{ObservationWindow, Point};
use crate::pattern::PointPattern;

/// Parents are generated on the window grown by this many displacement deviations.
pub const PARENT_MARGIN_SIGMAS: f64 = 4.0;

pub(crate) fn thomas_points(
    rng: &mut SimRng,
    kappa: f64,
    sigma: f64,
    offspring_mean: &dyn IntensityFn,
    w: &ObservationWindow,
) -> Result<Vec<Point>> {
    let parents = homog_points(rng, kappa, &w.expanded(PARENT_MARGIN_SIGMAS * sigma));
    let disp = Normal::new(0.0, sigma).expect("positive sigma");
    let mut pts = Vec::new();
    for c in parents {
        let m = offspring_mean.intensity(&c);
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::NonFinite("offspring mean (must be finite and non-negative)"));
        }
        for _ in 0..poisson_count(rng, m) {
            let u = Point::new(c.x + disp.sample(rng), c.y + disp.sample(rng));
            if w.contains(&u) {
                pts.push(u);
            }
        }
    }
    Ok(pts)
}

/// Poisson(`kappa`) parents, Poisson(`offspring_mean(parent)`) offspring each, displaced by
/// isotropic Gaussian noise with deviation `sigma`; offspring outside the window are dropped.
pub fn sim_thomas(
    kappa: f64,
    sigma: f64,
    offspring_mean: &dyn IntensityFn,
    w: &ObservationWindow,
    seed: u64,
) -> Result<PointPattern> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::param("kappa", "must be positive"));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::param("sigma", "must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    Ok(PointPattern::from_trusted(
        thomas_points(&mut rng, kappa, sigma, offspring_mean, w)?,
        *w,
    ))
}
