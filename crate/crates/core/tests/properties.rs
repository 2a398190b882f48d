//! Property tests against oracles written out directly from the definitions.

#![allow(clippy::needless_range_loop)]

use pka_core::linalg::{fix_phase, inner, norm, phase_aligned_distance, CMatrix};
use pka_core::metrics::{eigen_cosine, isi_matrix, sdr_parts};
use pka_core::rng::{complex_normal, normal, random_unit, seeded};
use pka_core::separators::{fixed_point_step, pka_step, PkaConfig};
use pka_core::signal::{mix, random_mixing_matrix, ComplexDataMatrix, Signal, SourceSet};
use pka_core::tensor::{fourth_moment_tensor, random_statistical_tensor};
use pka_core::whitening::{whiten, whiteness_error};
use pka_core::C64;
use proptest::prelude::*;

fn data(n: usize, l: usize, seed: u64, real: bool) -> ComplexDataMatrix {
    let mut rng = seeded(seed);
    let m = CMatrix::from_fn(n, l, |_, _| {
        // uniform-ish, non-Gaussian
        let u = normal(&mut rng).powi(3);
        if real {
            C64::new(u, 0.0)
        } else {
            C64::new(u, normal(&mut rng).powi(3))
        }
    });
    ComplexDataMatrix::new(m, 1.0).unwrap()
}

/// `(1/L) Σ |wᴴz|⁴` computed sample by sample.
fn direct_kurtosis(z: &ComplexDataMatrix, w: &[C64]) -> f64 {
    let l = z.samples();
    let mut acc = 0.0;
    for t in 0..l {
        let mut y = C64::new(0.0, 0.0);
        for i in 0..z.channels() {
            y += w[i].conj() * z.row(i)[t];
        }
        acc += y.norm_sqr() * y.norm_sqr();
    }
    acc / l as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cw4_is_the_projected_kurtosis(n in 1usize..=5, extra in 0usize..150, seed in any::<u64>(), real in any::<bool>()) {
        let l = (n + extra).max(n + 1);
        let white = whiten(&data(n, l, seed, real), None);
        prop_assume!(white.is_ok());
        let z = white.unwrap().z;
        let t = fourth_moment_tensor(&z).unwrap();
        let mut rng = seeded(seed ^ 1);
        let w = random_unit(&mut rng, n, false);
        let direct = direct_kurtosis(&z, &w);
        let via = t.cw4(&w).unwrap();
        prop_assert!((via - direct).abs() <= 1e-10 * direct.abs().max(1.0), "{via} vs {direct}");
    }

    #[test]
    fn moment_tensor_symmetries(n in 1usize..=4, seed in any::<u64>(), real in any::<bool>()) {
        let z = data(n, 60, seed, real);
        let t = fourth_moment_tensor(&z).unwrap();
        prop_assert!(t.moment_symmetry_residual() <= 1e-12);
        let chain = t.symmetry_residuals();
        // swapping the two unconjugated or the two conjugated indices always holds
        prop_assert!(chain[1] <= 1e-12 && chain[4] <= 1e-12);
        if real {
            prop_assert!(chain.iter().all(|&r| r <= 1e-12), "{chain:?}");
        }
        let mut rng = seeded(seed);
        for _ in 0..10 {
            let w = random_unit(&mut rng, n, false);
            let q = t.quartic_form(&w);
            prop_assert!(q.im.abs() <= 1e-10 * q.re.abs().max(1.0));
        }
    }

    #[test]
    fn mixing_is_the_matrix_product(n in 2usize..=4, extra in 0usize..40, seed in any::<u64>()) {
        let l = n + extra;
        let mut rng = seeded(seed);
        let sigs: Vec<Signal> = (0..n)
            .map(|_| Signal::new((0..l).map(|_| complex_normal(&mut rng)).collect(), 10.0).unwrap())
            .collect();
        let s = SourceSet::unlabeled(sigs).unwrap();
        let a = random_mixing_matrix(n, true, seed).unwrap();
        let x = mix(&s, &a).unwrap();
        for i in 0..n {
            for t in 0..l {
                let mut v = C64::new(0.0, 0.0);
                for j in 0..n {
                    v += a.matrix()[(i, j)] * s.signals()[j].samples()[t];
                }
                prop_assert!((x.row(i)[t] - v).norm() <= 1e-12 * v.norm().max(1.0));
            }
        }
    }

    #[test]
    fn whitening_gives_identity_covariance(n in 1usize..=5, seed in any::<u64>(), real in any::<bool>()) {
        let w = whiten(&data(n, 300, seed, real), None).unwrap();
        prop_assert!(whiteness_error(&w.z) < 1e-10);
    }

    #[test]
    fn isi_ignores_permutations(n in 2usize..=5, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let p = CMatrix::from_fn(n, n, |_, _| complex_normal(&mut rng));
        let base = isi_matrix(&p).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left((seed % n as u64) as usize);
        let scales: Vec<C64> = (0..n).map(|_| complex_normal(&mut rng) + C64::new(0.1, 0.0)).collect();
        let q = CMatrix::from_fn(n, n, |i, j| p[(perm[i], perm[(j + 1) % n])] * C64::from_polar(1.0, i as f64));
        prop_assert!((isi_matrix(&q).unwrap() - base).abs() <= 1e-9 * base.max(1.0));
        let pd = CMatrix::from_fn(n, n, |i, j| if perm[i] == j { scales[i] } else { C64::new(0.0, 0.0) });
        prop_assert_eq!(isi_matrix(&pd).unwrap(), 0.0);
    }

    #[test]
    fn sdr_decomposition_closes(n in 2usize..=4, seed in any::<u64>()) {
        let l = 64;
        let mut rng = seeded(seed);
        let sigs: Vec<Signal> = (0..n)
            .map(|_| Signal::new((0..l).map(|_| complex_normal(&mut rng)).collect(), 1.0).unwrap())
            .collect();
        let truth = SourceSet::unlabeled(sigs).unwrap();
        let est: Vec<C64> = (0..l).map(|_| complex_normal(&mut rng)).collect();
        let parts = sdr_parts(&truth, 0, &est).unwrap();
        let sum = parts.target + parts.interference + parts.artifact;
        prop_assert!((sum - parts.estimate).abs() <= 1e-8 * parts.estimate);
        prop_assert!((parts.interference + parts.artifact - parts.distortion).abs() <= 1e-8 * parts.estimate);
    }

    #[test]
    fn eigen_cosine_ignores_global_phase(seed in any::<u64>(), phase in -3.2f64..3.2) {
        let t = random_statistical_tensor(3, seed % 50, 2000).unwrap();
        let mut rng = seeded(seed);
        let w = random_unit(&mut rng, 3, false);
        let rot: Vec<C64> = w.iter().map(|x| x * C64::from_polar(1.0, phase)).collect();
        let a = eigen_cosine(&t, &w).unwrap();
        let b = eigen_cosine(&t, &rot).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!(a <= 1.0 + 1e-12);
    }
}

#[test]
fn eigenvectors_are_fixed_points_of_both_updates() {
    let cfg = PkaConfig::default();
    let mut checked = 0;
    for seed in 0..10 {
        let t = random_statistical_tensor(3, seed, 5000).unwrap();
        let mut rng = seeded(seed);
        let mut w = random_unit(&mut rng, 3, false);
        for _ in 0..5000 {
            w = fixed_point_step(&t, &[], &w);
        }
        fix_phase(&mut w);
        let (_, r) = t.eigen_residual(&w);
        if r > 1e-10 {
            continue;
        }
        checked += 1;
        let next = pka_step(&t, &[], &w, &cfg);
        assert!(phase_aligned_distance(&w, &next) <= 1e-9);
        assert!((norm(&next) - 1.0).abs() < 1e-12);
        assert!(inner(&w, &next).norm() > 1.0 - 1e-12);
    }
    assert!(checked >= 5, "only {checked} fixed-point runs converged");
}
