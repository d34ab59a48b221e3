//! Seeded random jet points away from the singular hyperplanes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jet::{JetContext, JetPoint};

/// Magnitude range of sampled coordinates; the sign is uniform.
pub const MAGNITUDE: (f64, f64) = (0.5, 2.0);

/// Coordinates closer than this to zero for `z`, `z_y`, `z_u` are resampled.
pub const SINGULAR_MARGIN: f64 = 0.1;

/// Independent stream for sample `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn coordinate<R: Rng>(rng: &mut R) -> f64 {
    let m = rng.gen_range(MAGNITUDE.0..=MAGNITUDE.1);
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

/// A point of J^k with every coordinate in ±[0.5, 2].
pub fn regular_point<R: Rng>(rng: &mut R, order: usize) -> JetPoint {
    loop {
        let mut p = JetPoint::new();
        for c in JetContext::new(order).coordinates() {
            p.set(&c, coordinate(rng));
        }
        let clear = ["z", "z_y", "z_u"]
            .iter()
            .all(|n| p.get_name(n).is_none_or(|v| v.abs() >= SINGULAR_MARGIN));
        if clear {
            return p;
        }
    }
}

/// `count` points, point `i` drawn from stream `i`.
pub fn regular_points(seed: u64, count: usize, order: usize) -> Vec<JetPoint> {
    (0..count)
        .map(|i| regular_point(&mut stream(seed, i as u64), order))
        .collect()
}
