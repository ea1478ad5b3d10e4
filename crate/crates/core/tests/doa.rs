use crt_array::designs::{spinner_array, t_array};
use crt_array::sensing::montecarlo::{trial_data, trial_spectrum};
use crt_array::sensing::{
    sample_covariance, steering_matrix, wrap_angle, Coupling, RmseConfig, Source,
};
use crt_array::smoothing::{method1_subarrays, method2_subarrays};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn deg(t: f64, p: f64) -> Source {
    Source::new(t.to_radians(), p.to_radians(), 1.0).unwrap()
}

fn six() -> Vec<Source> {
    [(-150.0, 30.0), (-90.0, 55.0), (-20.0, 40.0), (30.0, 65.0), (95.0, 25.0), (150.0, 50.0)]
        .iter()
        .map(|&(t, p)| deg(t, p))
        .collect()
}

/// Every true source has an estimate within `cells` grid cells in both angles.
fn all_within(est: &[[f64; 2]], truth: &[Source], cells: f64) -> bool {
    let tol = cells * 1f64.to_radians();
    truth.iter().all(|s| {
        est.iter()
            .any(|e| wrap_angle(e[0] - s.theta).abs() <= tol && (e[1] - s.phi).abs() <= tol)
    })
}

#[test]
fn six_sources_t_array_snr0_l200() {
    let arr = t_array(13).unwrap();
    let plan = method1_subarrays(7, 7, 7, 7).unwrap();
    let cfg = RmseConfig {
        trials: 1,
        snapshots: vec![200],
        fixed_sources: Some(six()),
        seed: 17,
        ..RmseConfig::default()
    };
    for t in 0..5 {
        let (_, res) = trial_spectrum(&arr, &plan, &cfg, t, 200).unwrap();
        assert_eq!(res.estimates.len(), 6);
        assert!(all_within(&res.estimates, &six(), 2.0), "trial {t}: {:?}", res.estimates);
    }
}

#[test]
fn six_sources_spinner_method_two() {
    let arr = spinner_array(13).unwrap();
    let plan = method2_subarrays(7, 3).unwrap();
    let cfg = RmseConfig {
        trials: 1,
        snapshots: vec![200],
        fixed_sources: Some(six()),
        seed: 17,
        ..RmseConfig::default()
    };
    let (_, res) = trial_spectrum(&arr, &plan, &cfg, 0, 200).unwrap();
    assert!(all_within(&res.estimates, &six(), 2.0), "{:?}", res.estimates);
}

#[test]
fn sample_covariance_converges_noiseless() {
    // K = 1, unit power, no noise: R → C a aᴴ Cᴴ within O(1/√L)
    let arr = t_array(13).unwrap();
    let src = vec![deg(35.0, 40.0)];
    let cfg = RmseConfig {
        fixed_sources: Some(src.clone()),
        sources: 1,
        snr_db: 300.0,
        coupling: Coupling { c_max: 0.2, radius_multiple: 3.0 },
        seed: 3,
        ..RmseConfig::default()
    };
    let (_, x) = trial_data(&arr, &cfg, 0, 10_000).unwrap();
    let r = sample_covariance(&x);
    let c = crt_array::sensing::coupling_matrix(&arr, 0.2, 3.0).unwrap();
    let ca: DMatrix<Complex64> = c * steering_matrix(&arr, &src).unwrap();
    let ideal = &ca * ca.adjoint();
    let rel = (r - &ideal).norm() / ideal.trace().re;
    assert!(rel < 0.05, "{rel}");
}

#[test]
fn multi_source_covariance_with_noise() {
    // Frobenius error below 5% of the trace for the six-source, 0 dB setup
    let arr = t_array(13).unwrap();
    let cfg = RmseConfig { fixed_sources: Some(six()), seed: 9, ..RmseConfig::default() };
    let (_, x) = trial_data(&arr, &cfg, 0, 10_000).unwrap();
    let r = sample_covariance(&x);
    let c = crt_array::sensing::coupling_matrix(&arr, 0.2, 3.0).unwrap();
    let ca = c * steering_matrix(&arr, &six()).unwrap();
    let n = arr.len();
    let ensemble = &ca * ca.adjoint() + DMatrix::<Complex64>::identity(n, n);
    let rel = (r - &ensemble).norm() / ensemble.trace().re;
    assert!(rel < 0.05, "{rel}");
}

#[test]
fn coarray_signal_zero_lag_and_symmetry() {
    use crt_array::sensing::vectorized_coarray_signal;
    let arr = t_array(13).unwrap();
    let cfg = RmseConfig {
        fixed_sources: Some(six()),
        coupling: Coupling::NONE,
        seed: 4,
        ..RmseConfig::default()
    };
    let (_, x) = trial_data(&arr, &cfg, 0, 10_000).unwrap();
    let sig = vectorized_coarray_signal(&sample_covariance(&x), &arr.sensors).unwrap();
    // Σσ² + η² = 6 + 1
    let z = sig[&[0, 0]];
    assert!((z.re / 7.0 - 1.0).abs() < 0.03, "{z}");
    for (d, v) in &sig {
        let m = sig[&[-d[0], -d[1]]];
        assert!((m - v.conj()).norm() < 1e-12);
    }
}
