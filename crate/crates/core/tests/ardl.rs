mod common;

use common::{rng, Process};
use ecomal::ardl::{build_design, fit_ols, write_multipliers_csv};
use ecomal::ols::CovarianceKind;
use ecomal::{
    dynamic_multipliers, fit_ardl, long_run_multiplier, ArdlFit, ArdlOrders, Error, ModelData,
    Regressor, Transform,
};
use proptest::prelude::*;
use rand::Rng;

fn recovery_process() -> Process {
    Process {
        alpha: 0.0,
        beta: vec![0.5],
        gamma: vec![1.0],
        phi: vec![-0.3],
        rho: vec![0.2],
        sigma: 0.1,
    }
}

#[test]
fn recovers_ardl_1000_coefficients() {
    let data = recovery_process().simulate(7, 5000);
    let fit = fit_ardl(
        &data,
        ArdlOrders::new(1, 0, 0, 0).unwrap(),
        Transform::Identity,
    )
    .unwrap();
    assert!((fit.beta()[0] - 0.5).abs() < 0.05);
    assert!((fit.gamma()[0] - 1.0).abs() < 0.05);
    assert!((fit.phi()[0] + 0.3).abs() < 0.05);
    assert!((fit.rho()[0] - 0.2).abs() < 0.05);
    assert!(fit.alpha().abs() < 0.05);
    assert!(fit.r_squared > 0.9);
    assert!((fit.sigma2.sqrt() - 0.1).abs() < 0.01);
}

#[test]
fn residual_invariants() {
    let data = recovery_process().simulate(11, 800);
    let fit = fit_ardl(
        &data,
        ArdlOrders::new(2, 1, 0, 3).unwrap(),
        Transform::Identity,
    )
    .unwrap();
    assert_eq!(fit.residuals.len(), 800 - 3);
    assert_eq!(fit.first_index, 3);
    let mean = fit.residuals.iter().sum::<f64>() / fit.residuals.len() as f64;
    assert!(mean.abs() < 1e-12);
    assert!((0.0..=1.0).contains(&fit.r_squared));
    for i in 0..fit.fitted.len() {
        let observed = data.y[fit.first_index + i];
        assert_eq!(fit.observed[i], observed);
        let sum = fit.fitted[i] + fit.residuals[i];
        assert!((sum - observed).abs() <= 4.0 * f64::EPSILON * observed.abs().max(1.0));
    }
    assert_eq!(fit.dof, 797 - 1 - 2 - 2 - 1 - 4);
}

#[test]
fn log_transform_is_applied_to_every_term() {
    let mut r = rng(3);
    let n = 300;
    let counts = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..n)
            .map(|_| f64::from(r.random_range(0..50u32)))
            .collect()
    };
    let data = ModelData::new(
        counts(&mut r),
        counts(&mut r),
        counts(&mut r),
        counts(&mut r),
    )
    .unwrap();
    let orders = ArdlOrders::new(1, 1, 0, 0).unwrap();
    let d = build_design(&data, orders, Transform::LogPlusOne).unwrap();
    for i in 0..d.matrix.nrows() {
        let t = d.first_index + i;
        assert_eq!(d.response[i], data.y[t].ln_1p());
        assert_eq!(d.matrix[(i, 1)], data.y[t - 1].ln_1p());
        assert_eq!(d.matrix[(i, 2)], data.eco[t].ln_1p());
        assert_eq!(d.matrix[(i, 3)], data.eco[t - 1].ln_1p());
        assert_eq!(d.matrix[(i, 5)], data.art[t].ln_1p());
    }
}

// Deterministic data set; reference values from an independent ARDL
// implementation (statsmodels 0.14, OLS on the same lag layout).
fn reference_data() -> ModelData {
    let n = 120usize;
    let eco: Vec<f64> = (0..n).map(|t| ((t * 37) % 7) as f64).collect();
    let adv: Vec<f64> = (0..n)
        .map(|t| (((t * 53) % 11) + ((t * t) % 5)) as f64)
        .collect();
    let art: Vec<f64> = (0..n).map(|t| ((t * 29) % 13) as f64).collect();
    let mut y = vec![0.0; n];
    for t in 0..n {
        let e = ((t * 7919) % 1009) as f64 / 1009.0 - 0.5;
        let l = |x: &[f64], j: usize| if t >= j { x[t - j] } else { 0.0 };
        y[t] = 1.0 + 0.4 * l(&y, 1) - 0.2 * l(&y, 2) + 0.3 * eco[t] + 0.1 * l(&eco, 1)
            - 0.05 * adv[t]
            + 0.02 * art[t]
            + 0.04 * l(&art, 2)
            + e;
    }
    ModelData::new(y, eco, adv, art).unwrap()
}

#[test]
fn matches_reference_implementation() {
    let data = reference_data();
    let orders = ArdlOrders::new(2, 1, 0, 2).unwrap();
    let design = build_design(&data, orders, Transform::Identity).unwrap();
    let fit = fit_ols(&design, CovarianceKind::Classical).unwrap();
    let params = [
        1.3524911778789988,
        0.5281702823978719,
        -0.3618815649949821,
        0.29437720987448185,
        0.037308606988933395,
        -0.05507687086878381,
        0.03082102954815158,
        -0.005341818398146863,
        0.03182958970183037,
    ];
    let bse = [
        0.17903682202736876,
        0.055741679098066814,
        0.04951077969413951,
        0.014377229107861354,
        0.023183524989026087,
        0.007234618503561245,
        0.008120832305951679,
        0.006883455566844823,
        0.008140113467985119,
    ];
    let hc1 = [
        0.18714206488465937,
        0.051802054133194574,
        0.038736585217096414,
        0.015049421947887666,
        0.02099541468388015,
        0.00669399301779292,
        0.00694766314408614,
        0.006923622713994136,
        0.007317672592704882,
    ];
    assert_eq!(
        fit.names,
        ["const", "y.L1", "y.L2", "eco.L0", "eco.L1", "adv.L0", "art.L0", "art.L1", "art.L2"]
    );
    let se = fit.std_errors();
    for i in 0..params.len() {
        assert!((fit.coefficients[i] - params[i]).abs() < 1e-10, "coef {i}");
        assert!((se[i] - bse[i]).abs() < 1e-10, "se {i}");
    }
    assert!((fit.r_squared - 0.8790774908315832).abs() < 1e-10);
    assert!((fit.sigma2 - 0.07530929177093955).abs() < 1e-10);
    assert_eq!(fit.dof, 109);

    let robust = fit_ols(&design, CovarianceKind::Hc1).unwrap();
    let se = robust.std_errors();
    for i in 0..hc1.len() {
        assert!((se[i] - hc1[i]).abs() < 1e-10, "hc1 se {i}");
    }
}

#[test]
fn agrees_with_normal_equations_oracle() {
    let data = Process {
        alpha: 0.3,
        beta: vec![0.4, 0.2],
        gamma: vec![0.5, 0.5],
        phi: vec![0.1],
        rho: vec![-0.2, 0.0, 0.3],
        sigma: 1.0,
    }
    .simulate(21, 400);
    let orders = ArdlOrders::new(2, 1, 0, 2).unwrap();
    let design = build_design(&data, orders, Transform::Identity).unwrap();
    let fit = fit_ols(&design, CovarianceKind::Classical).unwrap();
    let rows: Vec<Vec<f64>> = (0..design.matrix.nrows())
        .map(|i| design.matrix.row(i).iter().copied().collect())
        .collect();
    let y: Vec<f64> = design.response.iter().copied().collect();
    let (b, se) = common::normal_equations(&y, &rows);
    let fse = fit.std_errors();
    for i in 0..b.len() {
        assert!((fit.coefficients[i] - b[i]).abs() < 1e-9);
        assert!((fse[i] - se[i]).abs() < 1e-9);
    }
}

#[test]
fn perfect_fit_when_response_copies_a_column() {
    let mut r = rng(5);
    let eco = common::white_noise(&mut r, 60, 1.0);
    let data = ModelData::new(
        eco.clone(),
        eco,
        common::white_noise(&mut r, 60, 1.0),
        common::white_noise(&mut r, 60, 1.0),
    )
    .unwrap();
    let fit = fit_ardl(
        &data,
        ArdlOrders::new(1, 0, 0, 0).unwrap(),
        Transform::Identity,
    )
    .unwrap();
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
    assert!((fit.gamma()[0] - 1.0).abs() < 1e-10);
}

#[test]
fn collinear_regressors_are_singular() {
    let mut r = rng(6);
    let eco = common::white_noise(&mut r, 60, 1.0);
    let adv: Vec<f64> = eco.iter().map(|v| 2.0 * v).collect();
    let data = ModelData::new(
        common::white_noise(&mut r, 60, 1.0),
        eco,
        adv,
        common::white_noise(&mut r, 60, 1.0),
    )
    .unwrap();
    let err = fit_ardl(
        &data,
        ArdlOrders::new(1, 0, 0, 0).unwrap(),
        Transform::Identity,
    )
    .unwrap_err();
    match err {
        Error::Singular { column } => assert_eq!(column, "adv.L0"),
        other => panic!("unexpected {other:?}"),
    }
}

/// Random stationary coefficient vector with non-negative betas summing to `s`.
fn random_fit(r: &mut rand_chacha::ChaCha8Rng) -> ArdlFit {
    let orders = ArdlOrders::new(
        r.random_range(1..=4),
        r.random_range(0..=3),
        r.random_range(0..=3),
        r.random_range(0..=3),
    )
    .unwrap();
    let s: f64 = r.random_range(0.0..0.9);
    let weights: Vec<f64> = (0..orders.p1).map(|_| r.random_range(0.01..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut coefficients = vec![r.random_range(-1.0..1.0)];
    coefficients.extend(weights.iter().map(|w| s * w / total));
    for _ in orders.beta_range().end..orders.n_params() {
        coefficients.push(r.random_range(-2.0..2.0));
    }
    ArdlFit::from_coefficients(orders, Transform::Identity, coefficients).unwrap()
}

#[test]
fn dynamic_multipliers_sum_to_long_run_multiplier() {
    let mut r = rng(2024);
    for _ in 0..100 {
        let fit = random_fit(&mut r);
        for reg in Regressor::ALL {
            let lrm = long_run_multiplier(&fit, reg).unwrap().value;
            // spectral radius can approach 0.9^(1/4) here, so use a long horizon
            let dm = dynamic_multipliers(&fit, reg, 2000).unwrap();
            assert_eq!(dm.len(), 2001);
            let sum: f64 = dm.iter().sum();
            assert!(
                (sum - lrm).abs() < 1e-9 * lrm.abs().max(1.0),
                "{} {reg}: {sum} vs {lrm}",
                fit.orders
            );
        }
    }
}

#[test]
fn first_order_dm_sum_converges_within_200_steps() {
    let mut r = rng(2025);
    for _ in 0..100 {
        let beta: f64 = r.random_range(0.0..0.9);
        let c: Vec<f64> = (0..4).map(|_| r.random_range(-2.0..2.0)).collect();
        let fit = ArdlFit::from_coefficients(
            ArdlOrders::new(1, 3, 0, 0).unwrap(),
            Transform::Identity,
            vec![0.0, beta, c[0], c[1], c[2], c[3], 0.0, 0.0],
        )
        .unwrap();
        let lrm = long_run_multiplier(&fit, Regressor::Eco).unwrap().value;
        let sum: f64 = dynamic_multipliers(&fit, Regressor::Eco, 200)
            .unwrap()
            .iter()
            .sum();
        assert!((sum - lrm).abs() < 1e-6 * lrm.abs().max(1.0));
    }
}

#[test]
fn dm_matches_brute_force_impulse() {
    let mut r = rng(99);
    for _ in 0..20 {
        let fit = random_fit(&mut r);
        for reg in Regressor::ALL {
            let dm = dynamic_multipliers(&fit, reg, 30).unwrap();
            // simulate the deterministic part with a unit impulse at t = 0
            let c = fit.regressor_coefficients(reg);
            let beta = fit.beta();
            let mut y = vec![0.0; 31];
            for t in 0..=30 {
                let mut v = if t < c.len() { c[t] } else { 0.0 };
                for (j, b) in beta.iter().enumerate() {
                    if t > j {
                        v += b * y[t - j - 1];
                    }
                }
                y[t] = v;
            }
            for i in 0..=30 {
                assert!((dm[i] - y[i]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn lrm_scale_equivariance() {
    let mut r = rng(17);
    for _ in 0..50 {
        let fit = random_fit(&mut r);
        let s: f64 = r.random_range(-5.0..5.0);
        for reg in Regressor::ALL {
            let base = long_run_multiplier(&fit, reg).unwrap().value;
            let mut scaled = fit.clone();
            for j in fit.orders.regressor_range(reg) {
                scaled.coefficients[j] *= s;
            }
            let v = long_run_multiplier(&scaled, reg).unwrap().value;
            assert!((v - s * base).abs() <= 1e-12 * (s * base).abs().max(1.0));
        }
    }
}

#[test]
fn lrm_hand_cases() {
    let fit = ArdlFit::from_coefficients(
        ArdlOrders::new(1, 1, 0, 0).unwrap(),
        Transform::Identity,
        vec![0.0, 0.5, 1.0, 0.5, 0.0, 0.0],
    )
    .unwrap();
    assert_eq!(
        long_run_multiplier(&fit, Regressor::Eco).unwrap().value,
        3.0
    );

    let empty = ArdlFit::from_coefficients(
        ArdlOrders {
            p1: 0,
            p2: 2,
            p3: 0,
            p4: 0,
        },
        Transform::Identity,
        vec![0.0, 0.7, 0.2, 0.1, 0.0, 0.0],
    )
    .unwrap();
    let gamma_sum: f64 = [0.7, 0.2, 0.1].iter().sum();
    assert_eq!(
        long_run_multiplier(&empty, Regressor::Eco).unwrap().value,
        gamma_sum
    );
}

#[test]
fn contemporaneous_only_regressor_has_a_multiplier() {
    let data = recovery_process().simulate(8, 600);
    let fit = fit_ardl(
        &data,
        ArdlOrders::new(3, 0, 1, 0).unwrap(),
        Transform::Identity,
    )
    .unwrap();
    let m = long_run_multiplier(&fit, Regressor::Eco).unwrap();
    assert!((m.value - 1.0 / 0.5).abs() < 0.2);
    assert!(m.significant_95);
}

#[test]
fn significance_flag_matches_t_ratio() {
    let data = recovery_process().simulate(9, 300);
    let fit = fit_ardl(
        &data,
        ArdlOrders::new(1, 1, 1, 1).unwrap(),
        Transform::Identity,
    )
    .unwrap();
    let crit = ecomal::dist::student_t_critical(0.95, fit.dof);
    for reg in Regressor::ALL {
        let m = long_run_multiplier(&fit, reg).unwrap();
        assert!(m.std_error >= 0.0);
        assert_eq!(m.significant_95, m.value.abs() / m.std_error > crit);
    }
}

#[test]
fn delta_method_error_shrinks_with_sample_size() {
    let p = recovery_process();
    let mut small = 0.0;
    let mut large = 0.0;
    for seed in 0..10 {
        let o = ArdlOrders::new(1, 0, 0, 0).unwrap();
        let s = fit_ardl(&p.simulate(100 + seed, 300), o, Transform::Identity).unwrap();
        let l = fit_ardl(&p.simulate(200 + seed, 3000), o, Transform::Identity).unwrap();
        small += long_run_multiplier(&s, Regressor::Adv).unwrap().std_error;
        large += long_run_multiplier(&l, Regressor::Adv).unwrap().std_error;
    }
    assert!(large > 0.0);
    assert!(large < small / 2.0, "{large} vs {small}");
}

#[test]
fn multiplier_csv_round_trips() {
    let fit = ArdlFit::from_coefficients(
        ArdlOrders::new(1, 0, 0, 0).unwrap(),
        Transform::Identity,
        vec![0.0, 0.3, 1.0 / 3.0, 0.0, 0.0],
    )
    .unwrap();
    let dm = dynamic_multipliers(&fit, Regressor::Eco, 50).unwrap();
    let mut buf = Vec::new();
    write_multipliers_csv(&dm, &mut buf).unwrap();
    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    let back: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap()[1].parse().unwrap())
        .collect();
    assert_eq!(back, dm);
}

proptest! {
    #[test]
    fn prop_dm_geometric_decay(beta in 0.0f64..0.95, c in -10.0f64..10.0) {
        let fit = ArdlFit::from_coefficients(
            ArdlOrders::new(1, 0, 0, 0).unwrap(),
            Transform::Identity,
            vec![0.0, beta, c, 0.0, 0.0],
        ).unwrap();
        let dm = dynamic_multipliers(&fit, Regressor::Eco, 20).unwrap();
        for (i, v) in dm.iter().enumerate() {
            prop_assert!((v - c * beta.powi(i as i32)).abs() <= 1e-12 * c.abs().max(1.0));
        }
    }
}
