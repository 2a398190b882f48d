//! Seeded random draws shared by the generators and solvers.

use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::normalize;

pub type SolverRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SolverRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Circular complex normal with unit variance, E|z|² = 1.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    C64::new(normal(rng) * s, normal(rng) * s)
}

/// Uniformly distributed unit vector; real-valued when `real` is set.
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, n: usize, real: bool) -> Vec<C64> {
    loop {
        let mut v: Vec<C64> = (0..n)
            .map(|_| if real { C64::new(normal(rng), 0.0) } else { complex_normal(rng) })
            .collect();
        if normalize(&mut v) > 1e-8 {
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    #[test]
    fn unit_vectors_are_unit() {
        let mut rng = seeded(1);
        for n in 1..6 {
            let v = random_unit(&mut rng, n, false);
            assert!((norm(&v) - 1.0).abs() < 1e-14);
            let r = random_unit(&mut rng, n, true);
            assert!(r.iter().all(|z| z.im == 0.0));
        }
    }

    #[test]
    fn complex_normal_has_unit_power() {
        let mut rng = seeded(9);
        let n = 200_000;
        let p: f64 = (0..n).map(|_| complex_normal(&mut rng).norm_sqr()).sum::<f64>() / n as f64;
        assert!((p - 1.0).abs() < 0.01, "{p}");
    }
}
