//! Deterministic quasi-random points (Halton with a seeded Cranley–Patterson
//! rotation).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % b) as f64 * factor;
        index /= b;
        factor *= inv;
    }
    value
}

/// Halton sequence in `[0,1)^dim`, shifted modulo one by a per-seed offset so
/// that points avoid rational coordinates such as expression kinks at 0.
#[derive(Debug, Clone)]
pub struct Halton {
    dim: usize,
    shift: Vec<f64>,
    next: u64,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 1 && dim <= PRIMES.len(), "Halton dimension {dim} unsupported");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        Halton { dim, shift, next: 1 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn next_point(&mut self, out: &mut [f64]) {
        let i = self.next;
        self.next += 1;
        for (k, o) in out.iter_mut().enumerate().take(self.dim) {
            let v = radical_inverse(i, PRIMES[k]) + self.shift[k];
            *o = v - v.floor();
        }
    }

    pub fn take_points(&mut self, n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                let mut p = vec![0.0; self.dim];
                self.next_point(&mut p);
                p
            })
            .collect()
    }
}
