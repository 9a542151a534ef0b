//! Under the null hypothesis each test must reject at close to its nominal
//! rate. 1000 meta-replicas at alpha = 0.01 give about 10 rejections; the
//! accepted band [2, 30] is more than six binomial standard deviations wide.

use dustwalk::stats::{chi_square_uniform, ks_test, ks_test_two_sample, Reference, DEFAULT_ALPHA};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

const META: usize = 1_000;
const BAND: (usize, usize) = (2, 30);

fn rejections(mut reject: impl FnMut(&mut ChaCha8Rng) -> bool) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..META).filter(|_| reject(&mut rng)).count()
}

fn assert_calibrated(name: &str, r: usize) {
    assert!((BAND.0..=BAND.1).contains(&r), "{name}: {r} rejections out of {META}");
}

#[test]
fn ks_one_sample_is_calibrated() {
    let law = Exp::new(2.0).unwrap();
    let r = rejections(|rng| {
        let xs: Vec<f64> = (0..300).map(|_| law.sample(rng)).collect();
        !ks_test(&xs, Reference::Exponential { rate: 2.0 }, DEFAULT_ALPHA).unwrap().pass
    });
    assert_calibrated("ks one-sample", r);
}

#[test]
fn ks_two_sample_is_calibrated() {
    // unequal sizes avoid the lattice of the equal-size statistic
    let r = rejections(|rng| {
        let a: Vec<f64> = (0..300).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..411).map(|_| rng.random()).collect();
        !ks_test_two_sample(&a, &b, DEFAULT_ALPHA).unwrap().pass
    });
    assert_calibrated("ks two-sample", r);
}

#[test]
fn chi_square_is_calibrated() {
    let r = rejections(|rng| {
        let mut counts = vec![0u64; 12];
        for _ in 0..600 {
            counts[rng.random_range(0..12)] += 1;
        }
        !chi_square_uniform(&counts, DEFAULT_ALPHA).unwrap().pass
    });
    assert_calibrated("chi-square", r);
}

#[test]
fn ks_one_sample_has_power() {
    let law = Exp::new(1.6).unwrap();
    let r = rejections(|rng| {
        let xs: Vec<f64> = (0..2_000).map(|_| law.sample(rng)).collect();
        !ks_test(&xs, Reference::Exponential { rate: 2.0 }, DEFAULT_ALPHA).unwrap().pass
    });
    assert!(r > 900, "{r}");
}
