//! Narrow-band signal model, coarray processing and MIMO patterns.
//!
//! Angles are in radians: `theta` is azimuth, `phi` elevation from broadside.
//! The wavelength is 1, so physical positions are in wavelengths.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::designs::SensorArray;
use crate::error::{Error, Result};
use crate::rings::Point;

pub mod montecarlo;
pub mod music;
pub mod pattern;

pub use montecarlo::{run_rmse, RmseConfig, RmseReport};
pub use music::{music_2d, Manifold, MusicGrid, MusicResult};
pub use pattern::{
    array_factor, hpbw, pattern_metrics, sls, two_way_pattern, AfForm, ElementPattern, Pattern,
    PatternGrid, PatternMetrics, Sls,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub theta: f64,
    pub phi: f64,
    pub power: f64,
}

impl Source {
    pub fn new(theta: f64, phi: f64, power: f64) -> Result<Self> {
        if !(power > 0.0) || !theta.is_finite() || !phi.is_finite() {
            return Err(Error::arg("source needs finite angles and positive power"));
        }
        Ok(Source { theta, phi, power })
    }

    /// Direction cosines `sin φ (cos θ, sin θ)`.
    pub fn wave_vector(&self) -> [f64; 2] {
        wave_vector(self.theta, self.phi)
    }
}

pub fn wave_vector(theta: f64, phi: f64) -> [f64; 2] {
    [phi.sin() * theta.cos(), phi.sin() * theta.sin()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub c_max: f64,
    pub radius_multiple: f64,
}

impl Coupling {
    pub const NONE: Coupling = Coupling {
        c_max: 0.0,
        radius_multiple: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub sources: Vec<Source>,
    pub snr_db: f64,
    pub snapshots: usize,
    pub coupling: Coupling,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.snapshots == 0 {
            return Err(Error::arg("snapshots must be positive"));
        }
        if !(0.0..1.0).contains(&self.coupling.c_max) {
            return Err(Error::arg("coupling c_max must lie in [0, 1)"));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::arg("snr must be finite"));
        }
        for s in &self.sources {
            Source::new(s.theta, s.phi, s.power)?;
        }
        Ok(())
    }

    /// `η² = mean source power / 10^(SNR/10)`; unit reference without sources.
    pub fn noise_variance(&self) -> f64 {
        noise_variance(&self.sources, self.snr_db)
    }
}

pub fn noise_variance(sources: &[Source], snr_db: f64) -> f64 {
    let reference = if sources.is_empty() {
        1.0
    } else {
        sources.iter().map(|s| s.power).sum::<f64>() / sources.len() as f64
    };
    reference / 10f64.powf(snr_db / 10.0)
}

/// `A[q, k] = exp(−i 2π ⟨v_k, z_q⟩)` for physical positions `z_q`.
pub fn steering_from_positions(positions: &[[f64; 2]], sources: &[Source]) -> DMatrix<Complex64> {
    DMatrix::from_fn(positions.len(), sources.len(), |q, k| {
        let v = sources[k].wave_vector();
        let z = positions[q];
        Complex64::cis(-2.0 * PI * (v[0] * z[0] + v[1] * z[1]))
    })
}

pub fn steering_matrix(arr: &SensorArray, sources: &[Source]) -> Result<DMatrix<Complex64>> {
    Ok(steering_from_positions(&arr.physical_positions()?, sources))
}

/// Real symmetric coupling: `c_max · d / r` within `radius_multiple · d`.
pub fn coupling_matrix(arr: &SensorArray, c_max: f64, radius_multiple: f64) -> Result<DMatrix<Complex64>> {
    if !(0.0..1.0).contains(&c_max) {
        return Err(Error::arg("coupling c_max must lie in [0, 1)"));
    }
    let pos = arr.physical_positions()?;
    let d = arr.pitch;
    let cutoff = radius_multiple * d * (1.0 + 1e-9);
    Ok(DMatrix::from_fn(pos.len(), pos.len(), |j, k| {
        if j == k {
            return Complex64::new(1.0, 0.0);
        }
        let r = (pos[j][0] - pos[k][0]).hypot(pos[j][1] - pos[k][1]);
        if r <= cutoff {
            Complex64::new(c_max * d / r, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

fn circular_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `X = C A S + E` drawn from `rng`, sources first then noise, column by column.
pub fn simulate_with_rng<R: Rng>(
    arr: &SensorArray,
    sources: &[Source],
    snr_db: f64,
    snapshots: usize,
    coupling: Coupling,
    rng: &mut R,
) -> Result<DMatrix<Complex64>> {
    let n = arr.len();
    let k = sources.len();
    let a = steering_matrix(arr, sources)?;
    let ca = if coupling.c_max > 0.0 {
        coupling_matrix(arr, coupling.c_max, coupling.radius_multiple)? * a
    } else {
        a
    };
    let mut s = DMatrix::<Complex64>::zeros(k, snapshots);
    for t in 0..snapshots {
        for (i, src) in sources.iter().enumerate() {
            s[(i, t)] = circular_gaussian(rng, src.power);
        }
    }
    let eta2 = noise_variance(sources, snr_db);
    let mut x = &ca * s;
    for t in 0..snapshots {
        for q in 0..n {
            x[(q, t)] += circular_gaussian(rng, eta2);
        }
    }
    Ok(x)
}

/// Seeded snapshot matrix; stream 0 of the scenario seed.
pub fn simulate(arr: &SensorArray, scenario: &Scenario) -> Result<DMatrix<Complex64>> {
    scenario.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(scenario.seed);
    simulate_with_rng(
        arr,
        &scenario.sources,
        scenario.snr_db,
        scenario.snapshots,
        scenario.coupling,
        &mut rng,
    )
}

/// `X Xᴴ / L`.
pub fn sample_covariance(x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let l = x.ncols().max(1) as f64;
    (x * x.adjoint()) / Complex64::new(l, 0.0)
}

/// Averages covariance entries `R[m, n]` over equal lags `u_m − u_n`.
pub fn vectorized_coarray_signal(
    r: &DMatrix<Complex64>,
    sensors: &[Point],
) -> Result<BTreeMap<Point, Complex64>> {
    if r.nrows() != sensors.len() || r.ncols() != sensors.len() {
        return Err(Error::arg("covariance size does not match the array"));
    }
    let mut acc: BTreeMap<Point, (Complex64, u32)> = BTreeMap::new();
    for (m, a) in sensors.iter().enumerate() {
        for (n, b) in sensors.iter().enumerate() {
            let e = acc.entry([a[0] - b[0], a[1] - b[1]]).or_default();
            e.0 += r[(m, n)];
            e.1 += 1;
        }
    }
    Ok(acc
        .into_iter()
        .map(|(d, (s, w))| (d, s / w as f64))
        .collect())
}

/// Noise-free coarray signal `Σ σ² a_k(d)` on the given lags.
pub fn analytic_coarray_signal(
    lags: impl IntoIterator<Item = Point>,
    manifold_of: impl Fn(Point) -> [f64; 2],
    sources: &[Source],
) -> BTreeMap<Point, Complex64> {
    lags.into_iter()
        .map(|d| {
            let z = manifold_of(d);
            let v: Complex64 = sources
                .iter()
                .map(|s| {
                    let w = s.wave_vector();
                    Complex64::cis(-2.0 * PI * (w[0] * z[0] + w[1] * z[1])) * s.power
                })
                .sum();
            (d, v)
        })
        .collect()
}

/// Wraps an angle difference into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Root-mean-square angular error over trials, pairing estimates to truth by
/// the assignment with least total squared error (azimuth error wrapped).
pub fn rmse(estimates: &[Vec<[f64; 2]>], truth: &[Vec<[f64; 2]>]) -> Result<f64> {
    if estimates.len() != truth.len() || estimates.is_empty() {
        return Err(Error::arg("estimate and truth trial counts differ"));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (est, tru) in estimates.iter().zip(truth) {
        if est.len() != tru.len() {
            return Err(Error::arg(format!(
                "trial has {} estimates for {} sources",
                est.len(),
                tru.len()
            )));
        }
        total += best_assignment_cost(est, tru);
        count += tru.len();
    }
    if count == 0 {
        return Err(Error::arg("no sources to score"));
    }
    Ok((total / count as f64).sqrt())
}

fn pair_cost(e: [f64; 2], t: [f64; 2]) -> f64 {
    wrap_angle(e[0] - t[0]).powi(2) + (e[1] - t[1]).powi(2)
}

fn best_assignment_cost(est: &[[f64; 2]], tru: &[[f64; 2]]) -> f64 {
    let k = tru.len();
    if k > 8 {
        // greedy nearest pairing keeps large K tractable
        let mut free: Vec<bool> = vec![true; k];
        return tru
            .iter()
            .map(|&t| {
                let (j, c) = est
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| free[*j])
                    .map(|(j, &e)| (j, pair_cost(e, t)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("equal lengths");
                free[j] = false;
                c
            })
            .sum();
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let c: f64 = p.iter().enumerate().map(|(i, &j)| pair_cost(est[j], tru[i])).sum();
        best = best.min(c);
    });
    if k == 0 {
        0.0
    } else {
        best
    }
}

fn permute(v: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
    if start == v.len() {
        f(v);
        return;
    }
    for i in start..v.len() {
        v.swap(start, i);
        permute(v, start + 1, f);
        v.swap(start, i);
    }
}
