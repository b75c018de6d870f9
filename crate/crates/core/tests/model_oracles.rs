//! Closed-form facts about the shipped reference models: quantile/CDF
//! inversion, scale-function normalization and limits, second-order branch
//! selection, and distributional checks on the samplers.

use evtlab_core::linalg::{mahalanobis_norm, SpdMatrix};
use evtlab_core::models::{sphere_sample, EllipticalModel, QBranch, TailModel};
use evtlab_core::rng::SimRng;

fn shipped_models() -> Vec<TailModel> {
    vec![
        TailModel::pareto(1.0).unwrap(),
        TailModel::pareto(2.0).unwrap(),
        TailModel::pareto(5.0).unwrap(),
        TailModel::frechet(1.0).unwrap(),
        TailModel::frechet(2.0).unwrap(),
        TailModel::frechet(5.0).unwrap(),
        TailModel::exponential(1.0).unwrap(),
        TailModel::exponential(2.5).unwrap(),
        TailModel::bounded(2.0, -0.25).unwrap(),
        TailModel::bounded(2.0, -0.5).unwrap(),
        TailModel::bounded(3.0, -0.75).unwrap(),
    ]
}

#[test]
fn quantile_cdf_inverse_pair() {
    for m in shipped_models() {
        for t in [2.0, 10.0, 1e3, 1e6, 1e8] {
            let err = (m.cdf(m.quantile(t)) - (1.0 - 1.0 / t)).abs();
            assert!(err <= 1e-10, "{} t={t}: {err:e}", m.name());
        }
    }
}

#[test]
fn scale_function_power_normalization() {
    // t^{-gamma} a(t) converges to a positive constant: the ratio between
    // t = 1e6 and t = 1e8 is within 1% of 1 for every gamma != 0 model.
    for m in shipped_models() {
        let g = m.gamma();
        if g == 0.0 {
            continue;
        }
        let v6 = m.scale(1e6) * 1e6f64.powf(-g);
        let v8 = m.scale(1e8) * 1e8f64.powf(-g);
        let ratio = v8 / v6;
        assert!(
            (ratio - 1.0).abs() <= 1e-2,
            "{}: normalized scale ratio {ratio}",
            m.name()
        );
        assert!(v8 > 0.0);
    }
}

#[test]
fn scale_over_quantile_limits() {
    for m in shipped_models() {
        let g = m.gamma();
        if g > 0.0 {
            // a(t)/U(t) -> gamma
            let r = m.scale(1e8) / m.quantile(1e8);
            assert!(
                (r - g).abs() <= 1e-3,
                "{}: a/U = {r}, gamma = {g}",
                m.name()
            );
        } else if g == 0.0 {
            // a(t)/U(t) -> 0, decreasing
            let r6 = m.scale(1e6) / m.quantile(1e6);
            let r8 = m.scale(1e8) / m.quantile(1e8);
            assert!(r8 <= 1e-1, "{}: a/U at 1e8 = {r8}", m.name());
            assert!(r8 < r6);
        } else {
            // a(t) -> 0; the power-law closed form puts gamma = -0.25 above
            // 1e-3 at t = 1e8 (a(1e8) = 2.5e-3), so the hard bound is checked
            // deeper in the tail for slow rates.
            assert!(m.scale(1e8) < m.scale(1e6), "{}: a not decaying", m.name());
            if g <= -0.5 {
                assert!(
                    m.scale(1e8) <= 1e-3,
                    "{}: a(1e8) = {}",
                    m.name(),
                    m.scale(1e8)
                );
            } else {
                assert!(
                    m.scale(1e12) <= 1e-3,
                    "{}: a(1e12) = {}",
                    m.name(),
                    m.scale(1e12)
                );
            }
        }
    }
}

#[test]
fn frechet_shift_constant_vanishes() {
    // l = lim U(t) - a(t)/gamma decides the second-order branch for
    // 0 < gamma < -rho. For Frechet(2) the sequence decays like t^{-1/2}
    // toward zero, freezing the scaled-rate branch.
    let m = TailModel::frechet(2.0).unwrap();
    let g = m.gamma();
    let mut prev = f64::INFINITY;
    for t in [1e4, 1e6, 1e8, 1e10] {
        let l_t = (m.quantile(t) - m.scale(t) / g).abs();
        assert!(l_t < prev, "no decay at t={t}");
        prev = l_t;
    }
    assert!(prev < 1e-4, "l estimate {prev} not vanishing");

    let oracle = m.second_order_oracle().unwrap();
    assert_eq!(oracle.branch(), QBranch::ScaledRate);
    assert_eq!(oracle.rho_prime, -1.0);
}

#[test]
fn frechet_branches_by_alpha() {
    // alpha < 1: gamma > -rho
    let o = TailModel::frechet(0.5)
        .unwrap()
        .second_order_oracle()
        .unwrap();
    assert_eq!(o.branch(), QBranch::ScaledRate);
    // alpha = 1: gamma = -rho
    let o = TailModel::frechet(1.0)
        .unwrap()
        .second_order_oracle()
        .unwrap();
    assert_eq!(o.branch(), QBranch::HillGap);
    // Q(t) = 1 - t (-ln(1 - 1/t)) ~ -1/(2t), negative and vanishing
    let q4 = o.q(1e4);
    let q6 = o.q(1e6);
    assert!(q4 < 0.0 && q6 < 0.0);
    assert!((q4 * 2.0 * 1e4 + 1.0).abs() < 1e-2, "q(1e4) = {q4}");
    assert!(q6.abs() < q4.abs());
}

#[test]
fn frechet_second_order_rate_frozen_form() {
    // A(t) = ((gamma - 1)/2)/t and Q(t) = rho/(gamma+rho) A(t) = -1/(2t)
    // for alpha = 2 (gamma = 0.5, rho = -1).
    let o = TailModel::frechet(2.0)
        .unwrap()
        .second_order_oracle()
        .unwrap();
    for t in [1e2, 1e4, 1e6] {
        assert!((o.second_order_rate(t) * t + 0.25).abs() < 1e-12);
        assert!((o.q(t) * t + 0.5).abs() < 1e-12);
    }
}

#[test]
fn exact_models_have_zero_second_order_rate() {
    for m in [
        TailModel::pareto(2.0).unwrap(),
        TailModel::exponential(1.0).unwrap(),
        TailModel::bounded(2.0, -0.5).unwrap(),
    ] {
        assert_eq!(m.rho(), f64::NEG_INFINITY);
        let o = m.second_order_oracle().unwrap();
        assert_eq!(o.second_order_rate(1e6), 0.0);
    }
}

#[test]
fn sphere_empirical_moments() {
    let mut rng = SimRng::new(2024);
    let pts = sphere_sample(2, 100_000, &mut rng);
    let mut mean = [0.0f64; 2];
    for p in &pts {
        mean[0] += p[0];
        mean[1] += p[1];
    }
    for m in mean.iter_mut() {
        *m /= pts.len() as f64;
    }
    assert!(
        mean[0].abs() < 0.02 && mean[1].abs() < 0.02,
        "mean {mean:?}"
    );

    let pts3 = sphere_sample(3, 100_000, &mut rng);
    let frac = pts3.iter().filter(|p| p[0] > 0.0).count() as f64 / pts3.len() as f64;
    assert!((frac - 0.5).abs() < 0.01, "frac {frac}");
}

#[test]
fn elliptical_norms_reproduce_generator_median() {
    let gen = TailModel::pareto(2.0).unwrap();
    let model = EllipticalModel::new(vec![0.0, 0.0], SpdMatrix::identity(2), gen).unwrap();
    let mut rng = SimRng::new(31);
    let pts = model.sample(100_000, &mut rng);
    let mut norms: Vec<f64> = pts
        .iter()
        .map(|p| mahalanobis_norm(p, &model.mu, &model.sigma).unwrap())
        .collect();
    norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = norms[norms.len() / 2];
    let expect = gen.quantile(2.0);
    assert!(
        (median / expect - 1.0).abs() < 0.03,
        "median {median} vs U(2) = {expect}"
    );
}

#[test]
fn elliptical_radial_law_kolmogorov_smirnov() {
    // KS distance between the Mahalanobis residuals under the true
    // parameters and the generator CDF, n = 1e4: below 1.63/sqrt(n)
    // (the 1% critical value), one fixed seed.
    let gen = TailModel::frechet(3.0).unwrap();
    let sigma = SpdMatrix::new(2, vec![1.25, 0.35, 0.35, 0.898])
        .unwrap()
        .det_normalized();
    let model = EllipticalModel::new(vec![1.0, -2.0], sigma, gen).unwrap();
    let mut rng = SimRng::new(77_177);
    let n = 10_000;
    let pts = model.sample(n, &mut rng);
    let mut norms: Vec<f64> = pts
        .iter()
        .map(|p| mahalanobis_norm(p, &model.mu, &model.sigma).unwrap())
        .collect();
    norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut ks = 0.0f64;
    for (i, &r) in norms.iter().enumerate() {
        let f = gen.cdf(r);
        ks = ks.max((f - i as f64 / n as f64).abs());
        ks = ks.max(((i + 1) as f64 / n as f64 - f).abs());
    }
    let bound = 1.63 / (n as f64).sqrt();
    assert!(ks <= bound, "KS {ks} > {bound}");
}
