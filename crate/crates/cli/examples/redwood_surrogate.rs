//! Regenerates the bundled `data/redwood.csv` fixture.
//!
//! 120 points in Thomas-type clusters (sd 0.02, about five per cluster) inside the
//! upper-left region `y - x > 0.2`, and 75 points with minimum spacing 0.04 in the
//! rest of the unit square. Seed 1975.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

const SEED: u64 = 1975;
const CLUSTERED: usize = 120;
const REGULAR: usize = 75;
const CLUSTER_SD: f64 = 0.02;
const MEAN_EXTRA_PER_CLUSTER: f64 = 4.0;
const SPACING: f64 = 0.04;

fn upper_left(x: f64, y: f64) -> bool {
    y - x > 0.2
}

fn inside(x: f64, y: f64) -> bool {
    (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)
}

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/redwood.csv"));
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let disp = Normal::new(0.0, CLUSTER_SD).unwrap();
    let extra = Poisson::new(MEAN_EXTRA_PER_CLUSTER).unwrap();
    let mut pts: Vec<(f64, f64)> = Vec::new();

    while pts.len() < CLUSTERED {
        let (px, py) = loop {
            let (x, y) = (rng.random::<f64>(), rng.random::<f64>());
            if upper_left(x, y) {
                break (x, y);
            }
        };
        let size = 1 + extra.sample(&mut rng) as usize;
        let mut placed = 0;
        while placed < size && pts.len() < CLUSTERED {
            let (x, y) = (px + disp.sample(&mut rng), py + disp.sample(&mut rng));
            if inside(x, y) && upper_left(x, y) {
                pts.push((x, y));
                placed += 1;
            }
        }
    }

    let mut regular = 0;
    while regular < REGULAR {
        let (x, y) = (rng.random::<f64>(), rng.random::<f64>());
        if upper_left(x, y) {
            continue;
        }
        let clear = pts
            .iter()
            .all(|&(a, b)| (a - x).hypot(b - y) >= SPACING);
        if clear {
            pts.push((x, y));
            regular += 1;
        }
    }

    let mut text = String::new();
    text.push_str("# Synthetic stand-in for the 195-point Redwood seedling pattern on the unit square.\n");
    text.push_str("# The published coordinates were not reachable from the build environment, so this\n");
    text.push_str("# fixture imitates the documented structure: clustered in the upper-left region,\n");
    text.push_str("# mildly regular elsewhere. Generated by `cargo run -p lisafit-cli --example\n");
    text.push_str(&format!(
        "# redwood_surrogate` (seed {SEED}): {CLUSTERED} points in Thomas-type clusters (sd {CLUSTER_SD})\n"
    ));
    text.push_str(&format!(
        "# with y - x > 0.2 and {REGULAR} points at minimum spacing {SPACING} in the rest.\n"
    ));
    text.push_str("x,y\n");
    for (x, y) in &pts {
        writeln!(text, "{x:.4},{y:.4}").unwrap();
    }
    std::fs::write(&out, text).expect("write fixture");
    let window = out.with_extension("window.json");
    std::fs::write(
        &window,
        "{\n  \"x_min\": 0.0,\n  \"x_max\": 1.0,\n  \"y_min\": 0.0,\n  \"y_max\": 1.0\n}\n",
    )
    .expect("write window");
    println!("wrote {} points to {}", pts.len(), out.display());
}
