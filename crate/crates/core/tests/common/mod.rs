#![allow(dead_code)]

pub mod curves;
pub mod linalg;
pub mod lp;
pub mod simplex_grid;

use diftrans_core::PricePmf;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Flat Dirichlet masses via normalised Gamma(1) draws.
pub fn dirichlet<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let g = Gamma::<f64>::new(1.0, 1.0).unwrap();
    let raw: Vec<f64> = (0..k).map(|_| g.sample(rng).max(1e-300)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

/// Random PMF on `k` distinct prices drawn from `0..range`.
pub fn random_pmf<R: Rng>(rng: &mut R, k: usize, range: u64) -> PricePmf {
    let mut support: Vec<u64> = sample(rng, range as usize, k).into_iter().map(|x| x as u64).collect();
    support.sort_unstable();
    let mass = dirichlet(rng, k);
    PricePmf::new(support, mass, 1000).unwrap()
}

/// Half the L1 distance over the union support.
pub fn half_l1(a: &PricePmf, b: &PricePmf) -> f64 {
    let mut prices: Vec<u64> = a.support().iter().chain(b.support()).copied().collect();
    prices.sort_unstable();
    prices.dedup();
    0.5 * prices.iter().map(|&x| (a.mass_at(x) - b.mass_at(x)).abs()).sum::<f64>()
}
