//! Seeded generators for random states, operators and models.
//!
//! Everything here is driven by a [`ChaCha8Rng`] so that a seed fully
//! determines the output across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::{c, CMatrix, Ket, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed normalized ket.
pub fn random_ket(rng: &mut impl Rng, dim: usize) -> Ket {
    let amps = (0..dim).map(|_| gaussian(rng)).collect();
    Ket::new(amps)
        .and_then(|k| k.normalized())
        .expect("gaussian ket is finite and nonzero")
}

/// Ginibre matrix: i.i.d. complex Gaussian entries.
pub fn random_matrix(rng: &mut impl Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| gaussian(rng))
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    random_matrix(rng, n).hermitian_part()
}

/// Haar unitary from Gram-Schmidt on a Ginibre matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    let g = random_matrix(rng, n);
    let mut cols: Vec<Ket> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        // two passes keep the columns orthonormal to roundoff
        for _ in 0..2 {
            for u in &cols {
                let proj = u.inner(&v);
                v = v.add(&u.scale(-proj));
            }
        }
        cols.push(v.normalized().expect("Ginibre columns are independent"));
    }
    CMatrix::from_fn(n, n, |i, j| cols[j].amps()[i])
}

/// Uniform point on the unit sphere.
pub fn random_axis(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-6 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Point on the probability simplex with `n` entries.
pub fn random_simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}
