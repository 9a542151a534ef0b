use dustwalk::point_process::{sample_interval, DEFAULT_CELL_LEN};
use dustwalk::stats::{chi_square_uniform, correlation, ks_test, Reference, DEFAULT_ALPHA};
use dustwalk::{MarkLaw, PalmVariant, PoissonLine, RngStream, Side};
use proptest::prelude::*;

fn line(seed: u64, intensity: f64, p: f64) -> PoissonLine {
    PoissonLine::new(RngStream::new(seed, 0), intensity, MarkLaw::two_point(p).unwrap()).unwrap()
}

#[test]
fn gaps_are_exponential() {
    for intensity in [0.5, 1.0, 3.0] {
        let cfg = line(11, intensity, 0.5).realize(0.0, 20_000.0 / intensity).unwrap();
        let xs: Vec<f64> = cfg.positions().collect();
        let gaps: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let r = ks_test(&gaps, Reference::Exponential { rate: intensity }, DEFAULT_ALPHA).unwrap();
        assert!(r.pass, "intensity {intensity}: {r:?}");
    }
}

#[test]
fn counts_are_stationary_across_cells() {
    // unit bins straddling cell boundaries, including negative cells
    let cfg = line(12, 1.0, 0.5).realize(-64.0, 64.0).unwrap();
    let mut counts = vec![0u64; 16];
    for x in cfg.positions() {
        counts[((x + 64.0) / 8.0) as usize] += 1;
    }
    assert!(chi_square_uniform(&counts, DEFAULT_ALPHA).unwrap().pass, "{counts:?}");

    let mut totals = vec![0u64; 8];
    for seed in 0..400 {
        let cfg = line(seed, 1.0, 0.5).realize(-2.0 * DEFAULT_CELL_LEN, 2.0 * DEFAULT_CELL_LEN).unwrap();
        for x in cfg.positions() {
            totals[((x + 2.0 * DEFAULT_CELL_LEN) / 8.0) as usize] += 1;
        }
    }
    assert!(chi_square_uniform(&totals, DEFAULT_ALPHA).unwrap().pass, "{totals:?}");
}

#[test]
fn thinning_fraction_and_independence() {
    let p = 0.3;
    let cfg = line(13, 1.0, p).realize(0.0, 100_000.0).unwrap();
    let marks: Vec<f64> = cfg.points.iter().map(|q| q.marks as f64).collect();
    let n = marks.len() as f64;
    let doubles = marks.iter().filter(|&&m| m == 2.0).count() as f64;
    let se = (p * (1.0 - p) / n).sqrt();
    assert!((doubles / n - p).abs() < 4.0 * se);
    // marks independent of the preceding gap and of the neighbour's marks
    let xs: Vec<f64> = cfg.positions().collect();
    let gaps: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let band = 4.0 / n.sqrt();
    assert!(correlation(&gaps, &marks[1..]).unwrap().abs() < band);
    assert!(correlation(&marks[..marks.len() - 1], &marks[1..]).unwrap().abs() < band);
}

#[test]
fn exact_interval_sampler_matches_law() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let counts: Vec<f64> =
        (0..5_000).map(|_| sample_interval(2.0, 0.0, 3.0, &mut rng).unwrap().len() as f64).collect();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    // Poisson(6): standard error of the mean is sqrt(6 / 5000)
    assert!((mean - 6.0).abs() < 4.0 * (6.0f64 / 5_000.0).sqrt(), "mean {mean}");
}

#[test]
fn palm_point_sits_at_the_origin() {
    for seed in 0..20 {
        let l = line(seed, 1.0, 0.5);
        for variant in [PalmVariant::P1, PalmVariant::P2] {
            let cfg = l.realize_palm(-16.0, 16.0, variant).unwrap();
            assert_eq!(cfg.marks_at(0.0), Some(l.palm_marks(variant)));
        }
        assert_eq!(l.palm_marks(PalmVariant::P2), 2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stretch_order_does_not_change_the_sample(seed in 0u64..1000, steps in prop::collection::vec((any::<bool>(), 1.0f64..40.0), 1..8)) {
        let l = line(seed, 1.3, 0.4);
        let mut cfg = l.realize(-1.0, 1.0).unwrap();
        for (left, len) in steps {
            cfg = cfg.extend_frontier(if left { Side::Left } else { Side::Right }, len, &l).unwrap();
        }
        let direct = l.realize(cfg.left_frontier, cfg.right_frontier).unwrap();
        prop_assert_eq!(cfg.points, direct.points);
    }
}
