//! One-dimensional minimisation used by the bandwidth selectors.

/// Minimises `f` over `[lo, hi]`: scans a log-spaced grid of `grid` points,
/// then refines around the best grid point by golden-section search in `log h`.
pub(crate) fn minimise_scalar(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize) -> f64 {
    if hi <= lo {
        return lo;
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let at = |k: usize| (llo + (lhi - llo) * k as f64 / (grid - 1) as f64).exp();
    let scores: Vec<f64> = (0..grid).map(|k| f(at(k))).collect();
    let best = scores
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| {
            if v < bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0;

    let a = at(best.saturating_sub(1)).ln();
    let b = at((best + 1).min(grid - 1)).ln();
    let refined = golden_section(|t| f(t.exp()), a, b, 1e-7).exp();
    if f(refined) <= scores[best] {
        refined
    } else {
        at(best)
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
