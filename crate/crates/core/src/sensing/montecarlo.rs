//! Seeded Monte-Carlo RMSE runs: coupled snapshots, coarray smoothing, MUSIC.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coarray::difference_coarray;
use crate::designs::SensorArray;
use crate::error::{Error, Result};
use crate::smoothing::{smoothed_covariance, SmoothingPlan};

use super::music::{music_2d, Manifold, MusicGrid, MusicResult};
use super::{rmse, sample_covariance, simulate_with_rng, vectorized_coarray_signal, Coupling, Source};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseConfig {
    pub trials: usize,
    /// Snapshot counts `L`, each scored on the same trials.
    pub snapshots: Vec<usize>,
    pub sources: usize,
    pub snr_db: f64,
    pub coupling: Coupling,
    pub seed: u64,
    pub grid: MusicGrid,
    /// Minimum distance between source wave vectors.
    pub min_separation: f64,
    /// Elevation range in degrees; azimuth is uniform on `[−180°, 180°)`.
    pub phi_range_deg: [f64; 2],
    /// Same sources in every trial instead of random draws.
    pub fixed_sources: Option<Vec<Source>>,
}

impl Default for RmseConfig {
    fn default() -> Self {
        RmseConfig {
            trials: 100,
            snapshots: vec![50, 100, 200, 500],
            sources: 6,
            snr_db: 0.0,
            coupling: Coupling {
                c_max: 0.2,
                radius_multiple: 3.0,
            },
            seed: 0,
            grid: MusicGrid::default(),
            min_separation: 0.2,
            phi_range_deg: [15.0, 75.0],
            fixed_sources: None,
        }
    }
}

impl RmseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.snapshots.is_empty() || self.snapshots.contains(&0) {
            return Err(Error::arg("trials and snapshot counts must be positive"));
        }
        if self.sources == 0 {
            return Err(Error::arg("at least one source is required"));
        }
        if let Some(fixed) = &self.fixed_sources {
            if fixed.len() != self.sources {
                return Err(Error::arg("source count differs from the fixed source list"));
            }
            for s in fixed {
                Source::new(s.theta, s.phi, s.power)?;
            }
        }
        if !(0.0..1.0).contains(&self.coupling.c_max) || !self.snr_db.is_finite() {
            return Err(Error::arg("coupling c_max must lie in [0, 1) and snr must be finite"));
        }
        let [lo, hi] = self.phi_range_deg;
        if !(0.0 <= lo && lo <= hi && hi <= 90.0) {
            return Err(Error::arg("elevation range must satisfy 0 <= lo <= hi <= 90"));
        }
        if !(self.min_separation >= 0.0 && self.min_separation < 1.0) {
            return Err(Error::arg("min_separation must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmsePoint {
    pub snapshots: usize,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// `[theta, phi]` in radians.
    pub truth: Vec<[f64; 2]>,
    /// One estimate set per entry of `snapshots`.
    pub estimates: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseReport {
    pub scenario: RmseConfig,
    pub rmse: Vec<RmsePoint>,
    pub per_trial_estimates: Vec<TrialRecord>,
}

/// Random sources on the configured elevation band with separated wave vectors.
pub fn draw_sources<R: Rng>(rng: &mut R, cfg: &RmseConfig) -> Result<Vec<Source>> {
    if let Some(fixed) = &cfg.fixed_sources {
        return Ok(fixed.clone());
    }
    let [lo, hi] = cfg.phi_range_deg.map(f64::to_radians);
    let mut out: Vec<Source> = Vec::with_capacity(cfg.sources);
    let mut attempts = 0usize;
    while out.len() < cfg.sources {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::arg("cannot place sources with the requested separation"));
        }
        let theta = rng.random_range(-PI..PI);
        let phi = if hi > lo { rng.random_range(lo..hi) } else { lo };
        let s = Source::new(theta, phi, 1.0)?;
        let v = s.wave_vector();
        let far = out.iter().all(|o| {
            let w = o.wave_vector();
            (v[0] - w[0]).hypot(v[1] - w[1]) >= cfg.min_separation
        });
        if far {
            out.push(s);
        }
    }
    Ok(out)
}

/// Sources and an `L`-column snapshot block for trial `t` (stream `t` of the seed).
pub fn trial_data(
    arr: &SensorArray,
    cfg: &RmseConfig,
    t: usize,
    snapshots: usize,
) -> Result<(Vec<Source>, DMatrix<Complex64>)> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng.set_stream(t as u64);
    let sources = draw_sources(&mut rng, cfg)?;
    let x = simulate_with_rng(arr, &sources, cfg.snr_db, snapshots, cfg.coupling, &mut rng)?;
    Ok((sources, x))
}

fn check_plan(arr: &SensorArray, plan: &SmoothingPlan, cfg: &RmseConfig) -> Result<Manifold> {
    cfg.validate()?;
    plan.ensure_identifiable(cfg.sources)?;
    let support = difference_coarray(arr).support();
    if let Some(d) = plan.required_lags().iter().find(|d| !support.contains(*d)) {
        return Err(Error::input(format!(
            "smoothing plan needs lag ({}, {}) outside the difference coarray",
            d[0], d[1]
        )));
    }
    Manifold::from_plan(plan, arr.ring, arr.pitch)
}

/// Full MUSIC output of one trial at `snapshots` columns.
pub fn trial_spectrum(
    arr: &SensorArray,
    plan: &SmoothingPlan,
    cfg: &RmseConfig,
    t: usize,
    snapshots: usize,
) -> Result<(Vec<Source>, MusicResult)> {
    let manifold = check_plan(arr, plan, cfg)?;
    let (sources, x) = trial_data(arr, cfg, t, snapshots)?;
    let rs = smoothed_covariance(plan, &vectorized_coarray_signal(&sample_covariance(&x), &arr.sensors)?)?;
    Ok((sources, music_2d(&rs, &manifold, cfg.sources, &cfg.grid)?))
}

/// Runs `cfg.trials` independent trials; trial `t` uses stream `t` of the
/// seed, so results do not depend on thread count.
pub fn run_rmse(arr: &SensorArray, plan: &SmoothingPlan, cfg: &RmseConfig) -> Result<RmseReport> {
    let manifold = check_plan(arr, plan, cfg)?;
    let l_max = *cfg.snapshots.iter().max().expect("validated");

    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let (sources, x) = trial_data(arr, cfg, t, l_max)?;
            let estimates = cfg
                .snapshots
                .iter()
                .map(|&l| estimate(&x.columns(0, l).into_owned(), arr, plan, &manifold, cfg))
                .collect::<Result<_>>()?;
            Ok(TrialRecord {
                trial: t,
                truth: sources.iter().map(|s| [s.theta, s.phi]).collect(),
                estimates,
            })
        })
        .collect::<Result<_>>()?;

    let truth: Vec<Vec<[f64; 2]>> = records.iter().map(|r| r.truth.clone()).collect();
    let rmse = cfg
        .snapshots
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let est: Vec<Vec<[f64; 2]>> = records.iter().map(|r| r.estimates[i].clone()).collect();
            Ok(RmsePoint {
                snapshots: l,
                rmse: rmse(&est, &truth)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RmseReport {
        scenario: cfg.clone(),
        rmse,
        per_trial_estimates: records,
    })
}

fn estimate(
    x: &DMatrix<Complex64>,
    arr: &SensorArray,
    plan: &SmoothingPlan,
    manifold: &Manifold,
    cfg: &RmseConfig,
) -> Result<Vec<[f64; 2]>> {
    let r = sample_covariance(x);
    let signal = vectorized_coarray_signal(&r, &arr.sensors)?;
    let rs = smoothed_covariance(plan, &signal)?;
    Ok(music_2d(&rs, manifold, cfg.sources, &cfg.grid)?.estimates)
}
