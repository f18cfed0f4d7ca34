use coalab::frequencies::*;
use coalab::limits::block_count_limits;
use coalab::montecarlo::stream;
use coalab::slack::{GridSpec, SlackDistribution};
use coalab::special::gamma;
use rand::Rng;

fn slack(alpha: f64) -> SlackDistribution {
    SlackDistribution::build(alpha, GridSpec::default()).unwrap()
}

/// Coalescent time at which the surrogate has mean atom count `g`.
fn time_for_atoms(alpha: f64, g: f64) -> f64 {
    alpha * gamma(alpha) * g.powf(1.0 - alpha)
}

#[test]
fn atom_count_mean() {
    let alpha = 1.5;
    let d = slack(alpha);
    let s = time_for_atoms(alpha, 100.0);
    assert!((surrogate_atom_mean(alpha, s) - 100.0).abs() < 1e-9);
    // α = 1.5: (s/(αΓ(α)))^{-2}
    assert!((surrogate_atom_mean(alpha, 0.01) - (0.01_f64 / (1.5 * gamma(1.5_f64))).powi(-2)).abs() < 1e-6);
    let mut rng = stream(3, "atoms", 0);
    let reps = 10_000;
    let total: usize = (0..reps)
        .map(|_| {
            let draw = small_time_frequencies(s, &d, &mut rng).unwrap();
            assert!((draw.freqs.freqs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(draw.freqs.freqs().windows(2).all(|w| w[0] >= w[1]));
            draw.freqs.len()
        })
        .sum();
    let ratio = total as f64 / reps as f64 / 100.0;
    assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
}

#[test]
fn empty_draws_are_redrawn_then_fail() {
    let alpha = 1.5;
    let d = slack(alpha);
    let mut rng = stream(3, "empty", 0);
    // mean 1e-3 atoms: almost every draw is empty
    let s = time_for_atoms(alpha, 1e-3);
    assert!(matches!(small_time_frequencies(s, &d, &mut rng), Err(coalab::Error::Degenerate(_))));
    let s = time_for_atoms(alpha, 0.5);
    let draw = small_time_frequencies(s, &d, &mut rng).unwrap();
    assert!(draw.freqs.len() >= 1);
}

#[test]
fn paintbox_mean_matches_exact_moments() {
    let mut rng = stream(5, "paint", 0);
    let w: Vec<f64> = (0..20).map(|_| rng.random::<f64>() + 0.01).collect();
    let f = FrequencyVector::from_weights(w, FrequencyOrigin::External).unwrap();
    let n = 30;
    let (mean, var) = conditional_block_count_moments(&f, n).unwrap();
    assert!((conditional_block_count_mean(&f, n) - mean).abs() < 1e-12);
    let reps = 10_000;
    let ks: Vec<f64> = (0..reps)
        .map(|_| paintbox(&f, n, 2, &mut rng).unwrap().block_count() as f64)
        .collect();
    let m = ks.iter().sum::<f64>() / reps as f64;
    let v = ks.iter().map(|k| (k - m).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let se = (var / reps as f64).sqrt();
    assert!((m - mean).abs() < 3.0 * se, "{m} vs {mean}");
    assert!((v / var - 1.0).abs() < 0.1, "{v} vs {var}");
}

#[test]
fn single_ball_lands_with_frequency_probability() {
    let f = FrequencyVector::new(vec![0.5, 0.3, 0.2], FrequencyOrigin::External).unwrap();
    let mut rng = stream(6, "one", 0);
    let reps = 100_000;
    let mut hits = [0usize; 3];
    for i in 0..reps {
        // alternate tracked and untracked paths
        let p = paintbox(&f, 1, i % 2, &mut rng).unwrap();
        assert_eq!(p.block_count(), 1);
        hits[p.occupancy.iter().position(|&c| c == 1).unwrap()] += 1;
    }
    for (h, want) in hits.iter().zip([0.5, 0.3, 0.2]) {
        let se = (want * (1.0 - want) / reps as f64).sqrt();
        assert!((*h as f64 / reps as f64 - want).abs() < 4.0 * se);
    }
}

#[test]
fn tracked_labels_follow_their_blocks() {
    let f = FrequencyVector::new(vec![0.6, 0.4], FrequencyOrigin::External).unwrap();
    let mut rng = stream(7, "tracked", 0);
    let p = paintbox(&f, 1000, 5, &mut rng).unwrap();
    assert_eq!(p.occupancy.iter().sum::<u32>(), 1000);
    for i in 0..5 {
        assert!(p.tracked_block_size(i) > 0);
    }
}

#[test]
fn size_biased_pick_examples() {
    let mut rng = stream(8, "pick", 0);
    let one = FrequencyVector::new(vec![1.0], FrequencyOrigin::External).unwrap();
    assert_eq!(size_biased_pick(&one, &mut rng), 1.0);
    let two = FrequencyVector::new(vec![0.6, 0.4], FrequencyOrigin::External).unwrap();
    let reps = 100_000;
    let big = (0..reps).filter(|_| size_biased_pick(&two, &mut rng) == 0.6).count();
    let se = (0.24 / reps as f64).sqrt();
    assert!((big as f64 / reps as f64 - 0.6).abs() < 4.0 * se);
}

#[test]
fn scaled_pick_follows_size_biased_slack() {
    let alpha = 1.5;
    let d = slack(alpha);
    let s = time_for_atoms(alpha, 1e5);
    let scale = s.powf(-1.0 / (alpha - 1.0)) * (alpha * gamma(alpha)).powf(1.0 / (alpha - 1.0));
    let reps = 2000;
    let mut xs: Vec<f64> = (0..reps)
        .map(|i| {
            let mut rng = stream(9, "sbpick", i);
            let draw = small_time_frequencies(s, &d, &mut rng).unwrap();
            size_biased_pick(&draw.freqs, &mut rng) * scale
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    let f = d.functions();
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = f.size_biased_cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value
    assert!(ks < 1.63 / n.sqrt(), "{ks}");
}

#[test]
fn surrogate_block_count_ratio() {
    let (alpha, t) = (1.5, 1.0);
    let d = slack(alpha);
    let n = 10_000usize;
    let s = (n as f64).powf(1.0 - alpha) * t;
    let want = block_count_limits(alpha, t).unwrap().mean_ratio;
    let reps = 200;
    let mut exact = 0.0;
    let mut painted = 0.0;
    for i in 0..reps {
        let mut rng = stream(10, "kratio", i);
        let draw = small_time_frequencies(s, &d, &mut rng).unwrap();
        exact += conditional_block_count_mean(&draw.freqs, n) / n as f64;
        painted += paintbox(&draw.freqs, n, 0, &mut rng).unwrap().block_count() as f64 / n as f64;
    }
    exact /= reps as f64;
    painted /= reps as f64;
    assert!((exact / want - 1.0).abs() < 0.02, "{exact} vs {want}");
    assert!((painted / want - 1.0).abs() < 0.02, "{painted} vs {want}");
}

#[test]
fn exact_conditional_variance_matches_fixed_n_limit() {
    let alpha = 1.5;
    let d = slack(alpha);
    let n = 500;
    let t = 1.0;
    let s = (n as f64).powf(1.0 - alpha) * t;
    let reps = 200;
    let mut v = 0.0;
    for i in 0..reps {
        let mut rng = stream(17, "condvar", i);
        let draw = small_time_frequencies(s, &d, &mut rng).unwrap();
        v += conditional_block_count_moments(&draw.freqs, n).unwrap().1 / n as f64;
    }
    v /= reps as f64;
    let want = coalab::limits::fixed_n_variance_ratio(alpha, t).unwrap();
    let poissonised = block_count_limits(alpha, t).unwrap().var_ratio;
    assert!((v / want - 1.0).abs() < 0.03, "{v} vs {want}");
    // the Poissonised limit is visibly larger
    assert!(poissonised / v > 1.2, "{poissonised} vs {v}");
}
