//! Closed-form rates against direct quadrature of the defining integrals.

use coalab::rates::*;
use coalab::special::gamma;
use coalab::Measure;

fn de(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let rough = quadrature::double_exponential::integrate(&f, a, b, 1e-12).integral;
    quadrature::double_exponential::integrate(&f, a, b, rough.abs() * 1e-15).integral
}

/// ∫_0^1 x^p (1-x)^q h(x) dx with p, q > -1 and h smooth. A negative
/// exponent is removed on its half interval by `x = u^{1/(p+1)}` (resp. the
/// mirror image).
fn power_integral(p: f64, q: f64, h: impl Fn(f64) -> f64) -> f64 {
    let half = |p: f64, q: f64, h: &dyn Fn(f64) -> f64| {
        if p < 0.0 {
            let e = 1.0 / (p + 1.0);
            de(
                |u| {
                    let x = u.powf(e);
                    e * (1.0 - x).powf(q) * h(x)
                },
                0.0,
                0.5_f64.powf(p + 1.0),
            )
        } else {
            de(|x| x.powf(p) * (1.0 - x).powf(q) * h(x), 0.0, 0.5)
        }
    };
    half(p, q, &h) + half(q, p, &|y| h(1.0 - y))
}

/// ∫_0^1 x^{k-2} (1-x)^{j} h(x) Λ(dx) for Λ = Beta(2-α, α), normaliser
/// computed by the same quadrature so nothing is shared with the log-gamma path.
fn beta_integral(alpha: f64, k: u64, j: u64, h: impl Fn(f64) -> f64) -> f64 {
    let norm = power_integral(1.0 - alpha, alpha - 1.0, |_| 1.0);
    power_integral(k as f64 - 1.0 - alpha, j as f64 + alpha - 1.0, h) / norm
}

fn lambda_oracle(alpha: f64, b: u64, k: u64) -> f64 {
    beta_integral(alpha, k, b - k, |_| 1.0)
}

#[test]
fn lambda_matches_quadrature_up_to_b_200() {
    for alpha in [1.2, 1.5, 1.8] {
        let m = Measure::beta(alpha).unwrap();
        for b in (2..=200_u64).step_by(7).chain([199, 200]) {
            for k in [2, 3, 4, b / 2, b - 1, b]
                .into_iter()
                .filter(|&k| (2..=b).contains(&k))
            {
                let want = lambda_oracle(alpha, b, k);
                let got = lambda_bk(&m, b, k).unwrap();
                let rel = (got - want).abs() / want;
                assert!(
                    rel < 1e-10,
                    "alpha={alpha} b={b} k={k}: {got} vs {want} rel {rel:e}"
                );
            }
        }
    }
}

#[test]
fn lambda_example_b5_k3() {
    let m = Measure::beta(1.5).unwrap();
    let want = lambda_oracle(1.5, 5, 3);
    // B(1.5, 3.5)/B(0.5, 1.5) = (Γ(1.5)Γ(3.5)/Γ(5)) / (Γ(0.5)Γ(1.5))
    let exact = gamma(3.5_f64) / (24.0 * gamma(0.5_f64));
    assert!((want - exact).abs() / exact < 1e-12);
    assert!((lambda_bk(&m, 5, 3).unwrap() - exact).abs() / exact < 1e-13);
}

#[test]
fn consistency_identity() {
    for alpha in [0.5, 1.2, 1.5, 1.8] {
        let m = Measure::beta(alpha).unwrap();
        for b in 2..=120_u64 {
            for k in 2..=b {
                let lhs = lambda_bk(&m, b + 1, k).unwrap() + lambda_bk(&m, b + 1, k + 1).unwrap();
                let rhs = lambda_bk(&m, b, k).unwrap();
                assert!((lhs - rhs).abs() / rhs < 1e-12, "alpha={alpha} b={b} k={k}");
            }
        }
    }
}

#[test]
fn total_rate_matches_quadrature_route() {
    let alpha = 1.5;
    let m = Measure::beta(alpha).unwrap();
    let oracle: f64 = (2..=10_u64)
        .map(|k| {
            let binom = (1..=k).fold(1.0, |c, i| c * (10 - k + i) as f64 / i as f64);
            binom * lambda_oracle(alpha, 10, k)
        })
        .sum();
    let got = total_rate(&m, 10).unwrap();
    assert!((got - oracle).abs() / oracle < 1e-11, "{got} vs {oracle}");
}

#[test]
fn singleton_rate_gamma_ratio_and_quadrature() {
    let alpha = 1.5;
    let m = Measure::beta(alpha).unwrap();
    let (b, k) = (20_u64, 4_u64);
    let binom = (1..k).fold(1.0, |c, i| c * (b - k + i) as f64 / i as f64);
    let quad = binom * lambda_oracle(alpha, b, k);
    let closed = gamma(k as f64 - alpha) * gamma(b as f64 - k as f64 + alpha)
        / (gamma(alpha) * gamma(2.0 - alpha) * gamma(k as f64) * gamma((b - k + 1) as f64));
    let got = singleton_merge_rate(&m, b, k).unwrap();
    assert!((got - quad).abs() / quad < 1e-10);
    assert!((got - closed).abs() / closed < 1e-12);
}

#[test]
fn singleton_total_rate_integral_form() {
    for alpha in [1.2, 1.5, 1.8] {
        let m = Measure::beta(alpha).unwrap();
        for b in [2_u64, 3, 10, 37, 100] {
            let bm1 = (b - 1) as f64;
            // g_{1,b} = ∫ (1 - (1-x)^{b-1}) x^{-1} Λ(dx)
            let want = beta_integral(alpha, 2, 0, |x| -((bm1 * (-x).ln_1p()).exp_m1()) / x);
            let got = singleton_total_rate(&m, b).unwrap();
            assert!(
                (got - want).abs() / want < 1e-10,
                "alpha={alpha} b={b}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn singleton_total_rate_asymptotic_at_b_1e4() {
    let m = Measure::beta(1.5).unwrap();
    let b = 10_000;
    let direct = singleton_total_rate(&m, b).unwrap();
    let asym = singleton_total_rate_asymptotic(1.5, b).unwrap();
    assert!(
        (direct / asym - 1.0).abs() < 0.01,
        "ratio {}",
        direct / asym
    );
}

#[test]
fn singleton_merge_ratio_tends_to_q() {
    let alpha = 1.5;
    let m = Measure::beta(alpha).unwrap();
    let b = 100_000;
    let g1 = singleton_total_rate_closed_form(&m, b).unwrap();
    for k in 2..=10_u64 {
        let q = (alpha - 1.0) * gamma(k as f64 - alpha) / (gamma(k as f64) * gamma(2.0 - alpha));
        let ratio = singleton_merge_rate(&m, b, k).unwrap() / g1;
        assert!((ratio - q).abs() <= 0.01, "k={k}: {ratio} vs {q}");
    }
}

#[test]
fn generic_single_precision_tracks_double() {
    let m32 = coalab::Measure32::beta(1.5).unwrap();
    let m64 = Measure::beta(1.5).unwrap();
    for (b, k) in [(10_u64, 2_u64), (10, 5), (40, 3)] {
        let a = lambda_bk(&m32, b, k).unwrap() as f64;
        let c = lambda_bk(&m64, b, k).unwrap();
        assert!((a - c).abs() / c < 1e-4);
    }
}
