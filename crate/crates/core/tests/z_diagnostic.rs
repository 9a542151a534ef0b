use dustwalk::observables::{palm_environment, z_horizon_diagnostic};
use dustwalk::{MarkLaw, PalmVariant, PoissonLine, RngStream};

fn wilson(successes: usize, n: usize, z: f64) -> (f64, f64) {
    let (s, n) = (successes as f64, n as f64);
    let p = s / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Staying right of the start is a decreasing event in the horizon, so the
/// finite-horizon estimates are non-increasing and each run's exit step is the
/// same at every horizon that sees it.
#[test]
fn stay_right_fraction_decreases_with_horizon() {
    let horizons = [100u64, 10_000, 1_000_000];
    let runs = 1_000;
    let mut stayed = [0usize; 3];
    for seed in 0..runs {
        let line = PoissonLine::new(RngStream::new(77, seed), 1.0, MarkLaw::two_point(0.5).unwrap()).unwrap();
        let mut exit = None;
        for (h, count) in horizons.iter().zip(stayed.iter_mut()) {
            let d = z_horizon_diagnostic(palm_environment(&line, PalmVariant::P2).unwrap(), 0.0, *h).unwrap();
            assert!(d.heuristic);
            if let Some(e) = exit {
                assert_eq!(d.exit_step, Some(e));
            }
            exit = exit.or(d.exit_step);
            *count += d.stayed_right as usize;
        }
    }
    assert!(stayed.windows(2).all(|w| w[1] <= w[0]), "{stayed:?}");
    let (lo, hi) = wilson(stayed[2], runs as usize, 3.0);
    assert!(0.0 <= lo && lo <= hi && hi <= 1.0);
    println!("stayed right at horizons {horizons:?}: {stayed:?}");
    println!("stay-right fraction at 10^6 steps: {:.3} in [{lo:.3}, {hi:.3}]", stayed[2] as f64 / runs as f64);
}

#[test]
fn first_step_left_never_stays_right() {
    for seed in 0..200 {
        let line = PoissonLine::new(RngStream::new(78, seed), 1.0, MarkLaw::two_point(0.5).unwrap()).unwrap();
        let d = z_horizon_diagnostic(palm_environment(&line, PalmVariant::P2).unwrap(), 0.0, 1).unwrap();
        if d.exit_step == Some(1) {
            for h in [1, 10, 1_000] {
                let again = z_horizon_diagnostic(palm_environment(&line, PalmVariant::P2).unwrap(), 0.0, h).unwrap();
                assert!(!again.stayed_right);
            }
        }
    }
}

#[test]
fn single_marked_start_is_rejected() {
    let line = PoissonLine::new(RngStream::new(1, 0), 1.0, MarkLaw::two_point(0.0).unwrap()).unwrap();
    assert!(z_horizon_diagnostic(palm_environment(&line, PalmVariant::P1).unwrap(), 0.0, 10).is_err());
}
