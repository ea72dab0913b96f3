//! Structural invariants over randomized inputs.

use cpgp_core::basis::Constant;
use cpgp_core::estimator::{fit, SearchConfig, Sequential, Variant};
use cpgp_core::fft::FftPlan;
use cpgp_core::kernel::{build_kernel_blocks, periodic_correlation, Hyperparams, PeriodSpec, Signal};
use cpgp_core::likelihood::{remainder_terms, segment, SegmentCovariance};
use cpgp_core::linalg::circulant_eigenvalues;
use cpgp_core::predictor::PredictorState;
use cpgp_core::signals::{add_noise, synthesize, NoiseSpec, SyntheticSpec};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn signal_from(values: Vec<f64>, fs: f64) -> Signal {
    Signal::new(values, fs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_row_is_symmetric_circulant_and_psd(p in 1usize..40, d in 1usize..6, theta in 0.5f64..30.0) {
        let spec = PeriodSpec::new(p, d, 1.0, 3 * p).unwrap();
        let blocks = build_kernel_blocks(&spec, &Hyperparams::new(theta, 1.0).unwrap());
        let row = &blocks.circ_row;
        prop_assert_eq!(row[0], 1.0);
        for j in 1..p {
            prop_assert_eq!(row[j], row[p - j]);
        }
        // every entry of the full matrix depends on (i - j) mod p only
        for i in 0..p {
            for j in 0..p {
                let direct = periodic_correlation(i as i64 - j as i64, theta, p, d).unwrap();
                prop_assert_eq!(direct, row[(j + p - i) % p]);
            }
        }
        let eig = circulant_eigenvalues(row).unwrap();
        for &l in &eig {
            prop_assert!(l >= -1e-9 * p as f64, "eigenvalue {}", l);
        }
        let trace: f64 = eig.iter().sum();
        prop_assert!((trace - p as f64).abs() <= 1e-9 * p as f64);
    }

    #[test]
    fn remainder_covariance_is_toeplitz(
        p in 2usize..14,
        k in 1usize..5,
        m_frac in 0.05f64..0.95,
        theta in 1.0f64..20.0,
        delta in 0.1f64..5.0,
    ) {
        let m = ((p as f64 * m_frac) as usize).clamp(1, p - 1);
        let n = k * p + m;
        let values: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect();
        let signal = signal_from(values, 1.0);
        let spec = PeriodSpec::for_signal(&signal, p, 1).unwrap();
        let hyper = Hyperparams::new(theta, delta).unwrap();
        let blocks = build_kernel_blocks(&spec, &hyper);
        let cov = SegmentCovariance::new(&blocks, k, &hyper, FftPlan::new(p)).unwrap();
        let seg = segment(&signal, p, &Constant).unwrap();
        let rem = remainder_terms(&seg, &blocks, &cov, &hyper).unwrap();

        let kern = DMatrix::from_fn(n, n, |i, j| {
            periodic_correlation(i as i64 - j as i64, theta, p, 1).unwrap()
        });
        let kp = k * p;
        let sigma = kern.view((0, 0), (kp, kp)) + DMatrix::identity(kp, kp) * (delta * delta);
        let xi = kern.view((0, kp), (kp, m)).into_owned();
        let pi = kern.view((kp, kp), (m, m)) + DMatrix::identity(m, m) * (delta * delta)
            - xi.transpose() * sigma.try_inverse().unwrap() * &xi;
        for i in 0..m {
            for j in 0..m {
                prop_assert!((pi[(i, j)] - pi[(i.abs_diff(j), 0)]).abs() < 1e-9);
                prop_assert!((pi[(i, j)] - rem.pi_first_col[i.abs_diff(j)]).abs() < 1e-9);
            }
        }
        prop_assert!(rem.pi_logdet.is_finite());
    }

    #[test]
    fn prediction_variance_is_nonnegative(
        values in prop::collection::vec(-2.0f64..2.0, 3..40),
        p in 1usize..12,
        theta in 0.5f64..25.0,
        delta in 0.01f64..5.0,
        t in -10.0f64..60.0,
    ) {
        let signal = signal_from(values, 1.0);
        let state = PredictorState::new(&signal, Hyperparams::new(theta, delta).unwrap(), p, 1, Constant).unwrap();
        let pr = state.predict(t).unwrap();
        prop_assert!(pr.variance >= 0.0 && pr.variance.is_finite());
        prop_assert!(pr.mean.is_finite());
        for g in state.denoise_training_grid().unwrap() {
            prop_assert!(g.variance >= 0.0);
        }
    }

    #[test]
    fn prediction_is_periodic_without_remainder(
        k in 2usize..5,
        p in 1usize..10,
        seed in 0u64..1000,
        t in 0.0f64..20.0,
    ) {
        let n = k * p;
        let values: Vec<f64> = (0..n).map(|i| ((i as u64 * 2654435761 + seed) % 101) as f64 / 50.0 - 1.0).collect();
        let signal = signal_from(values, 1.0);
        let state = PredictorState::new(&signal, Hyperparams::new(3.0, 0.7).unwrap(), p, 1, Constant).unwrap();
        let a = state.predict(t).unwrap();
        let b = state.predict(t + p as f64).unwrap();
        prop_assert!((a.mean - b.mean).abs() <= 1e-9 * (1.0 + a.mean.abs()));
        prop_assert!((a.variance - b.variance).abs() <= 1e-9 * (1.0 + a.variance));
    }
}

#[test]
fn fit_is_deterministic_under_fixed_seeds() {
    let clean = synthesize(&SyntheticSpec::default().with_length(1200.0)).unwrap();
    let config = SearchConfig::new(250, (1.0, 30.0), (2.0, 20.0));
    let run = |seed| {
        let noisy = add_noise(&clean, &NoiseSpec { snr_db: -5.0, seed }).unwrap();
        fit(&noisy, &config, &Constant, Variant::Cpgp, &Sequential).unwrap()
    };
    let a = run(3);
    assert_eq!(a, run(3));
    assert_eq!(a.p_hat, 200);
    assert_ne!(a.scan_trace, run(4).scan_trace);
}

#[test]
fn decimal_period_is_recovered_with_fine_resolution() {
    let spec = SyntheticSpec {
        t0: 40.2,
        length: 2010.0,
        ..SyntheticSpec::default()
    };
    let clean = synthesize(&spec).unwrap();
    let noisy = add_noise(&clean, &NoiseSpec { snr_db: 10.0, seed: 1 }).unwrap();
    let config = SearchConfig::new(60, (1.0, 30.0), (0.05, 5.0)).with_resolution(5, 1);
    let r = fit(&noisy, &config, &Constant, Variant::Cpgp, &Sequential).unwrap();
    assert_eq!(r.p_hat, 201);
    assert_eq!(r.period_fraction, (201, 5));
    assert!((r.period - 40.2).abs() < 1e-12);
}
