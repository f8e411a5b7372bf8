//! Seeded world generators for tests, benchmarks and the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{GridWorld, RelevanceAlphabet};
use crate::quadtree::{NodeId, TreeSelection};

/// Parameters of [`random_world`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomWorld {
    pub depth: u8,
    pub outcomes: usize,
    /// Uniform `p(x)` instead of a random prior.
    pub uniform_prior: bool,
    /// Probability that a cell gets zero mass under a random prior.
    pub zero_mass: f64,
}

impl RandomWorld {
    pub fn new(depth: u8) -> Self {
        RandomWorld {
            depth,
            outcomes: 2,
            uniform_prior: false,
            zero_mass: 0.0,
        }
    }
}

/// A world with independent random `p(x)` and `p(y|x)`.
pub fn random_world(params: RandomWorld, seed: u64) -> Result<GridWorld> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = 1usize << (2 * params.depth as usize);
    let m = params.outcomes;

    let mut p_x: Vec<f64> = (0..cells)
        .map(|_| {
            if params.uniform_prior {
                1.0
            } else if rng.gen_bool(params.zero_mass) {
                0.0
            } else {
                rng.gen_range(0.05..1.0)
            }
        })
        .collect();
    if p_x.iter().all(|&v| v == 0.0) {
        p_x[0] = 1.0;
    }
    let total: f64 = p_x.iter().sum();
    p_x.iter_mut().for_each(|v| *v /= total);

    let mut p_y = Vec::with_capacity(cells * m);
    for _ in 0..cells {
        if m == 2 {
            let v: f64 = rng.gen();
            p_y.extend([1.0 - v, v]);
        } else {
            let raw: Vec<f64> = (0..m).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
            let s: f64 = raw.iter().sum();
            p_y.extend(raw.iter().map(|v| v / s));
        }
    }
    GridWorld::new(params.depth, RelevanceAlphabet::new(m)?, p_x, p_y)
}

/// Values of `p(y=1|x)` resembling an elevation map: a sum of Gaussian
/// bumps over a flat sea level, quantized to 8 bits so flat regions are
/// exactly constant.
pub fn blobs_intensity(depth: u8, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 1usize << depth;
    let count = rng.gen_range(4..=9);
    let bumps: Vec<(f64, f64, f64, f64)> = (0..count)
        .map(|_| {
            (
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.04..0.22),
                rng.gen_range(0.5..1.2),
            )
        })
        .collect();
    let mut out = Vec::with_capacity(side * side);
    for row in 0..side {
        for col in 0..side {
            let y = (row as f64 + 0.5) / side as f64;
            let x = (col as f64 + 0.5) / side as f64;
            let h: f64 = bumps
                .iter()
                .map(|&(cx, cy, r, a)| {
                    let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                    a * (-d2 / (2.0 * r * r)).exp()
                })
                .sum();
            let h = if h < 0.15 { 0.0 } else { h.min(1.0) };
            out.push((h * 255.0).round() / 255.0);
        }
    }
    out
}

/// Binary blob world with a uniform prior.
pub fn blobs(depth: u8, seed: u64) -> Result<GridWorld> {
    GridWorld::from_binary(depth, &blobs_intensity(depth, seed))
}

/// A random valid tree: each reached node is expanded with probability
/// `p_expand`.
pub fn random_selection<R: Rng>(depth: u8, p_expand: f64, rng: &mut R) -> TreeSelection {
    let mut z = TreeSelection::empty(depth);
    let mut frontier = vec![NodeId::ROOT];
    while let Some(n) = frontier.pop() {
        if n.level < depth && rng.gen_bool(p_expand) {
            z.set(n, true);
            frontier.extend(n.children(depth).expect("interior node"));
        }
    }
    z
}
