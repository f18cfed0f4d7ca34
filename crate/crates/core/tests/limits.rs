use coalab::limits::*;
use coalab::slack::SlackFunctions;
use num_complex::Complex64;
use quadrature::double_exponential;

fn gam(x: f64) -> f64 {
    coalab::special::gamma(x)
}

/// `∫_0^∞ f` through `x = s/(1-s)`.
fn de_half_line<F: Fn(f64) -> f64>(f: F) -> f64 {
    de(
        |s| {
            let x = s / (1.0 - s);
            let v = f(x) / ((1.0 - s) * (1.0 - s));
            if v.is_finite() { v } else { 0.0 }
        },
        0.0,
        1.0,
    )
}

fn de<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let rough = double_exponential::integrate(&f, a, b, 1e-6).integral.abs();
    double_exponential::integrate(&f, a, b, (rough * 1e-14).max(1e-300)).integral
}

/// Taylor coefficients by a direct Cauchy sum on radius `r`.
fn cauchy_coefficients(f: impl Fn(Complex64) -> Complex64, r: f64, n: usize, len: usize) -> Vec<f64> {
    let vals: Vec<Complex64> = (0..n)
        .map(|j| f(Complex64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / n as f64)))
        .collect();
    (0..len)
        .map(|m| {
            let s: Complex64 = vals
                .iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (j * m) as f64 / n as f64))
                .sum();
            s.re / n as f64 / r.powi(m as i32)
        })
        .collect()
}

#[test]
fn external_length_examples() {
    let total = de(|t| external_length_pdf(1.5, t).unwrap(), 0.0, 1e3)
        + external_length_survival(1.5, 1e3).unwrap();
    assert!((total - 1.0).abs() < 1e-10);
    assert_eq!(external_length_cdf(1.5, 0.0).unwrap(), 0.0);
    assert_eq!(external_length_survival(1.5, 0.0).unwrap(), 1.0);
    let f0 = external_length_pdf(1.5, 0.0).unwrap();
    assert!((f0 - 1.0 / (0.5 * gam(1.5))).abs() < 1e-13);
    assert!((f0 - 2.256_758_334_191_025).abs() < 1e-12);
    assert!(external_length_pdf(2.0, 1.0).is_err());
    // f32 path
    let f32v: f32 = external_length_pdf(1.5_f32, 0.0).unwrap();
    assert!((f32v as f64 - f0).abs() < 1e-5);
}

#[test]
fn q_examples() {
    for alpha in [1.2, 1.5, 1.8] {
        assert!((q_pmf::<f64>(alpha, 2).unwrap() - (alpha - 1.0)).abs() < 1e-15);
        let partial: f64 = (2..=1000).map(|k| q_pmf(alpha, k).unwrap()).sum();
        let tail = q_survival(alpha, 1000).unwrap();
        assert!((partial + tail - 1.0).abs() < 1e-12);
        // direct Gamma evaluation
        for k in [3u64, 7, 40] {
            let kf = k as f64;
            let direct = (alpha - 1.0) * gam(kf - alpha) / (gam(kf) * gam(2.0 - alpha));
            assert!((q_pmf(alpha, k).unwrap() / direct - 1.0).abs() < 1e-12);
        }
    }
    assert!((q_pmf(1.5_f64, 3).unwrap() - 0.125).abs() < 1e-15);
    assert!(q_pmf(1.5_f64, 1).is_err());
}

#[test]
fn q_laplace_examples_and_series() {
    assert_eq!(q_laplace(1.5, 0.0).unwrap(), 1.0);
    assert!(q_laplace(1.5, 800.0).unwrap() < 1e-300);
    let v = q_laplace(1.5, 2_f64.ln()).unwrap();
    assert!((v - 0.5 * (1.0 - 0.5_f64.sqrt())).abs() < 1e-15);
    assert!((v - 0.146_446_609_406_726_2).abs() < 1e-15);
    for alpha in [1.2, 1.5, 1.8] {
        for lam in [0.1, 1.0] {
            let kmax = 2000u64;
            let series: f64 = (2..=kmax).map(|k| (-lam * k as f64).exp() * q_pmf(alpha, k).unwrap()).sum();
            // remaining terms bounded by e^{-λ(kmax+1)} P(Q > kmax)
            let bound = (-lam * (kmax + 1) as f64).exp() * q_survival(alpha, kmax).unwrap();
            let closed = q_laplace(alpha, lam).unwrap();
            assert!(bound < 1e-12);
            assert!((series - closed).abs() <= 1e-8, "alpha={alpha} lam={lam}");
        }
    }
}

#[test]
fn beta_t_two_routes_agree() {
    for alpha in [1.2, 1.5, 1.8] {
        let funcs = SlackFunctions::new(alpha).unwrap();
        for t in [0.1, 1.0, 10.0] {
            let table = beta_t_pmf_table(alpha, t, 30).unwrap();
            for k in 1..=30u64 {
                let slack = beta_t_pmf_slack(&funcs, t, k).unwrap();
                let pgf = table[k as usize - 1];
                assert!((slack - pgf).abs() <= 1e-8, "alpha={alpha} t={t} k={k}: {slack} vs {pgf}");
            }
        }
    }
}

#[test]
fn beta_t_closed_values_and_tail() {
    let (alpha, t) = (1.5_f64, 1.0_f64);
    let beta = alpha - 1.0;
    let ta = t_alpha(alpha, t);
    let p1 = (1.0 + ta.powf(beta)).powf(-alpha / beta);
    assert!((beta_t_pmf(alpha, t, 1).unwrap() - p1).abs() < 1e-15);
    // independent coefficient extraction
    let cc = cauchy_coefficients(|z| beta_t_pgf(alpha, t, z), 0.5, 256, 12);
    let table = beta_t_pmf_table(alpha, t, 11).unwrap();
    for k in 1..=11 {
        assert!((cc[k] - table[k - 1]).abs() < 1e-12, "k={k}");
    }
    // pgf normalisation and the heavy tail of the truncated mass
    assert!((beta_t_pgf(alpha, t, Complex64::new(1.0, 0.0)).re - 1.0).abs() < 1e-15);
    let deficit = 1.0 - beta_t_pmf_table(alpha, t, 200).unwrap().iter().sum::<f64>();
    let tau = t / (alpha * gam(alpha));
    let asym = alpha / beta * tau * 200_f64.powf(-beta) / gam(1.0 - beta);
    assert!((deficit / asym - 1.0).abs() < 0.05, "{deficit} vs {asym}");
    // t → 0+
    assert!(beta_t_pmf(alpha, 1e-8, 1).unwrap() > 1.0 - 1e-6);
}

#[test]
fn q_from_beta_limit_converges() {
    let alpha = 1.5;
    for k in 2..=5u64 {
        let q = q_pmf(alpha, k).unwrap();
        let a = q_from_beta_limit(alpha, k, 1e-4).unwrap();
        let b = q_from_beta_limit(alpha, k, 5e-5).unwrap();
        assert!((a / q - 1.0).abs() < 0.01, "k={k}: {a} vs {q}");
        assert!((b - q).abs() < (a - q).abs(), "k={k}");
    }
    for lam in [0.1, 1.0] {
        let lim = q_laplace_from_beta_limit(alpha, lam, 1e-4).unwrap();
        let q = q_laplace(alpha, lam).unwrap();
        assert!((lim / q - 1.0).abs() < 0.01, "lam={lam}");
    }
}

/// `P(Y = l)` by the literal mixture formula: explicit (k-1)-fold
/// convolutions of the β(t) pmf, weighted by q_k, integrated against f_T.
fn y_by_convolution(alpha: f64, l: usize) -> f64 {
    let beta = alpha - 1.0;
    let unit = alpha * gam(alpha);
    let q: Vec<f64> = (0..=l)
        .map(|k| if k < 2 { 0.0 } else { (alpha - 1.0) * gam(k as f64 - alpha) / (gam(k as f64) * gam(2.0 - alpha)) })
        .collect();
    let inner = |t: f64| {
        let pmf = cauchy_coefficients(|z| beta_t_pgf(alpha, t, z), 0.5, 128, l);
        let mut conv = vec![0.0; l];
        conv[0] = 1.0;
        let mut acc = 0.0;
        for k in 2..=l {
            let mut next = vec![0.0; l];
            for i in 0..l {
                for j in 1..l - i {
                    next[i + j] += conv[i] * pmf[j];
                }
            }
            conv = next;
            acc += q[k] * conv[l - 1];
        }
        acc
    };
    let r = alpha / beta;
    de(
        |u| {
            let t = unit * (1.0 - u) / u;
            inner(t) * r * u.powf(r - 1.0)
        },
        0.0,
        1.0,
    )
}

#[test]
fn y_pmf_matches_convolution_oracle() {
    for alpha in [1.3, 1.5, 1.8] {
        let table = y_pmf_table(alpha, 10, 1e-11).unwrap();
        for l in [2usize, 3, 5, 8, 10] {
            let oracle = y_by_convolution(alpha, l);
            assert!((table.pmf[l - 2] - oracle).abs() < 1e-9, "alpha={alpha} l={l}");
        }
    }
}

#[test]
fn y_two_closed_form() {
    // q_2 P(β(T)=1) integrated by the quadrature crate on the t axis
    let alpha = 1.5_f64;
    let beta = alpha - 1.0;
    let oracle = beta
        * de_half_line(
            |t| {
                let p1 = (1.0 + t_alpha(alpha, t).powf(beta)).powf(-alpha / beta);
                p1 * external_length_pdf(alpha, t).unwrap()
            });
    let v = y_pmf(alpha, 2).unwrap();
    assert!((v - oracle).abs() < 1e-10);
    assert!((v - 0.25).abs() < 1e-12);
}

#[test]
fn y_mass_tail_and_laplace() {
    let alpha = 1.5;
    let big = y_pmf_table_fft(alpha, 10_000, 1e-9).unwrap();
    let small = y_pmf_table(alpha, 300, 1e-10).unwrap();
    for l in 2..=300 {
        assert!((big.get(l).unwrap() - small.get(l).unwrap()).abs() < 1e-10, "l={l}");
    }
    let tail = y_tail(alpha).unwrap();
    let mass: f64 = big.pmf.iter().sum();
    let total = mass + tail.constant * 10_000_f64.powf(-tail.exponent);
    assert!((0.99..=1.01).contains(&total), "{total}");

    // Laplace transform from the truncated pmf vs the mixture quadrature
    let from_pmf: f64 = big.pmf.iter().enumerate().map(|(i, p)| p * (-((i + 2) as f64)).exp()).sum();
    let direct = y_laplace(alpha, 1.0, 1e-12).unwrap();
    assert!((from_pmf - direct).abs() <= 1e-4);

    // survival slope over [10, 300]
    let surv = |k: usize| 1.0 - small.pmf[..k - 1].iter().sum::<f64>();
    let pts: Vec<(f64, f64)> = (0..30)
        .map(|i| {
            let k = (10.0 * 30_f64.powf(i as f64 / 29.0)).round() as usize;
            ((k as f64).ln(), surv(k).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.25).abs() <= 0.15 * 0.25, "{slope}");
}

#[test]
fn y_tail_constant() {
    for alpha in [1.2, 1.5, 1.8] {
        let t = y_tail(alpha).unwrap();
        assert!((t.exponent - (alpha - 1.0).powi(2)).abs() < 1e-15);
        assert!((t.moment / t.moment_closed_form - 1.0).abs() < 1e-8, "alpha={alpha}");
        // independent t-axis quadrature of ∫ t^{α-1} f_T
        let m = de_half_line(|s| s.powf(alpha - 1.0) * external_length_pdf(alpha, s).unwrap());
        assert!((m / t.moment_closed_form - 1.0).abs() < 1e-8, "alpha={alpha}");
    }
    assert!(y_tail(1.001).unwrap().exponent < 1e-5);
}

#[test]
fn gumbel_examples() {
    let (alpha, t) = (1.5_f64, 1.0_f64);
    assert!((gumbel_w_cdf(alpha, t, 1.0).unwrap() - 0.754_202_188_981_191).abs() < 1e-14);
    assert!((gumbel_w_cdf(alpha, t, 1.0).unwrap() - (-0.5 / gam(0.5)).exp()).abs() < 1e-15);
    let x0 = ((alpha - 1.0) * t / gam(2.0 - alpha)).powf(1.0 / alpha);
    assert!((gumbel_w_cdf(alpha, t, x0).unwrap() - (-1.0_f64).exp()).abs() < 1e-14);
    assert!(gumbel_w_cdf(alpha, t, 1e12).unwrap() > 1.0 - 1e-12);
}

#[test]
fn wtilde_examples() {
    let alpha = 1.5;
    assert!(wtilde_cdf(alpha, 1e12).unwrap() > 1.0 - 1e-12);
    assert!(wtilde_cdf(alpha, 1e-6).unwrap() < 1e-6);
    let a = wtilde_cdf_with(alpha, 1.0, 1e-8).unwrap();
    let b = wtilde_cdf_with(alpha, 1.0, 1e-12).unwrap();
    assert!((a - b).abs() < 1e-8);
    // mixture of Gumbel laws at the oracle's own nodes
    let unit = alpha * gam(alpha);
    let oracle = de_half_line(
        |t| gumbel_w_cdf(alpha, t.max(1e-300) / (unit * (alpha - 1.0)), 1.0).unwrap() * external_length_pdf(alpha, t).unwrap());
    assert!((b - oracle).abs() < 1e-9);
    let mut last = 0.0;
    for i in 0..1000 {
        let x = 10_f64.powf(-3.0 + 6.0 * i as f64 / 999.0);
        let v = wtilde_cdf(alpha, x).unwrap();
        assert!(v >= last - 1e-12, "x={x}");
        last = v;
    }
}

#[test]
fn block_count_examples() {
    let l = block_count_limits(1.5_f64, 1.0).unwrap();
    let want = (1.0 + 1.0 / (1.5 * gam(1.5))).powf(-2.0);
    assert!((l.mean_ratio - want).abs() < 1e-15);
    assert!((block_count_limits(1.5_f64, 1e-12).unwrap().mean_ratio - 1.0).abs() < 1e-11);
    for alpha in [1.1, 1.5, 1.9] {
        for t in [1e-3, 0.1, 1.0, 10.0, 1e3] {
            assert!(block_count_limits(alpha, t).unwrap().var_ratio >= 0.0);
        }
    }
    let u = l.unrestricted_count;
    assert!((u - (1.0 / (1.5 * gam(1.5))).powf(-2.0)).abs() < 1e-14);
}

#[test]
fn law_handles_are_distributions() {
    let s = LimitSettings::default();
    for kind in [
        LawKind::ExternalLengthT,
        LawKind::MergerQ,
        LawKind::BetaT(1.0),
        LawKind::MinimalCladeY,
        LawKind::GumbelW(1.0),
        LawKind::WTilde,
        LawKind::BlockCountLimit(1.0),
    ] {
        let h = LawHandle::new(kind, 1.5, s).unwrap();
        let rows = h.table(1000).unwrap();
        assert!(!rows.is_empty());
        assert!(rows.windows(2).all(|w| w[1].cdf >= w[0].cdf));
        if h.is_discrete() {
            assert!(h.truncated_mass() >= -1e-12);
            assert_eq!(h.cdf(0.5).unwrap(), 0.0);
            let k = h.support_min();
            assert!((h.cdf(k as f64).unwrap() - h.pmf(k).unwrap()).abs() < 1e-15);
        } else {
            assert_eq!(h.cdf(0.0).unwrap(), 0.0);
        }
    }
    let q = LawHandle::new(LawKind::MergerQ, 1.5, s).unwrap();
    assert!((q.cdf(1e4).unwrap() - (1.0 - q_survival(1.5, 10_000).unwrap())).abs() < 1e-15);
    assert!((q.pmf(300).unwrap() - q_pmf(1.5, 300).unwrap()).abs() < 1e-15);
    assert!(LawHandle::new(LawKind::MergerQ, 0.5, s).is_err());
}
