#![allow(dead_code)]

use gabor_walnut::window::build_window;
use gabor_walnut::{build_grid, GaborLattice, Grid, Signal, WindowSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub name: &'static str,
    pub g: Signal,
    pub lat: GaborLattice,
}

pub fn chi(grid: Grid) -> Signal {
    build_window(&WindowSpec::Characteristic { length: 1.0 }, grid).unwrap()
}

pub fn gaussian(grid: Grid) -> Signal {
    let center = grid.units() as f64 / 2.0;
    build_window(&WindowSpec::Gaussian { width: 1.0, center }, grid).unwrap()
}

pub fn hat(grid: Grid) -> Signal {
    build_window(&WindowSpec::Hat, grid).unwrap()
}

pub fn random_window(grid: Grid, seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..grid.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    Signal::new(grid, v).unwrap()
}

pub fn random_signal(grid: Grid, rng: &mut ChaCha8Rng) -> Signal {
    random_window(grid, rng.random())
}

fn instance(name: &'static str, g: Signal, a: usize, b: usize) -> Instance {
    let lat = GaborLattice::new(g.grid(), a, b).unwrap();
    Instance { name, g, lat }
}

/// The scalar instance: chi on Grid{8,4}, a = 2, b = 2, where S = 2I.
pub fn scalar_instance() -> Instance {
    instance("chi L=8 s=4 a=2 b=2", chi(build_grid(8, 4).unwrap()), 2, 2)
}

/// Frame instances shared by the acceptance suite and the invariant tests.
pub fn corpus() -> Vec<Instance> {
    let g8 = build_grid(8, 4).unwrap();
    let g48 = build_grid(48, 4).unwrap();
    let g64 = build_grid(64, 8).unwrap();
    let g256 = build_grid(256, 16).unwrap();
    vec![
        scalar_instance(),
        instance("chi L=8 s=4 a=2 b=1 (tight)", chi(g8), 2, 1),
        instance("gaussian L=48 s=4 a=4 b=4", gaussian(g48), 4, 4),
        instance("gaussian L=64 s=8 a=4 b=4", gaussian(g64), 4, 4),
        instance("gaussian L=64 s=8 a=2 b=8", gaussian(g64), 2, 8),
        instance("hat L=64 s=8 a=4 b=8", hat(g64), 4, 8),
        instance("random L=48 s=4 a=2 b=6", random_window(g48, 17), 2, 6),
        instance("gaussian L=256 s=16 a=8 b=8", gaussian(g256), 8, 8),
    ]
}

pub fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}
