//! Gridded 2D MUSIC on a smoothed coarray covariance.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::output::fmt_sig;
use crate::rings::RingSpec;
use crate::smoothing::SmoothingPlan;

use super::wave_vector;

/// Physical positions (wavelengths) of the subarray elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifold {
    pub positions: Vec<[f64; 2]>,
}

impl Manifold {
    /// Reference subarray of `plan`, embedded with `pitch · G`.
    pub fn from_plan(plan: &SmoothingPlan, ring: RingSpec, pitch: f64) -> Result<Self> {
        let positions = plan
            .reference()
            .iter()
            .map(|&d| ring.embed(d).map(|[x, y]| [pitch * x, pitch * y]))
            .collect::<Result<_>>()?;
        Ok(Manifold { positions })
    }

    fn phases(&self, theta: f64, phi: f64) -> impl Iterator<Item = Complex64> + '_ {
        let v = wave_vector(theta, phi);
        self.positions
            .iter()
            .map(move |z| Complex64::cis(-2.0 * PI * (v[0] * z[0] + v[1] * z[1])))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MusicGrid {
    pub theta_step_deg: f64,
    pub phi_step_deg: f64,
    /// Minimum peak separation in grid cells.
    pub separation: usize,
    /// Polish each grid peak by successive local refinement.
    pub refine: bool,
}

impl Default for MusicGrid {
    fn default() -> Self {
        MusicGrid {
            theta_step_deg: 1.0,
            phi_step_deg: 1.0,
            separation: 3,
            refine: true,
        }
    }
}

impl MusicGrid {
    /// Azimuths `[−180°, 180°)` and elevations `(0°, 90°]`, in degrees.
    pub fn axes(&self) -> (Vec<f64>, Vec<f64>) {
        let nt = (360.0 / self.theta_step_deg).round() as usize;
        let np = (90.0 / self.phi_step_deg).round() as usize;
        let thetas = (0..nt).map(|i| -180.0 + i as f64 * self.theta_step_deg).collect();
        let phis = (1..=np).map(|j| j as f64 * self.phi_step_deg).collect();
        (thetas, phis)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MusicResult {
    pub thetas_deg: Vec<f64>,
    pub phis_deg: Vec<f64>,
    /// Pseudo-spectrum, row-major over `(theta, phi)`.
    pub spectrum: Vec<f64>,
    /// Estimated `[theta, phi]` in radians, strongest first.
    pub estimates: Vec<[f64; 2]>,
}

impl MusicResult {
    /// `theta,phi,value_db` rows normalised to a 0 dB maximum.
    pub fn to_csv(&self) -> String {
        let peak = self.spectrum.iter().copied().fold(f64::MIN, f64::max);
        let mut out = String::from("theta,phi,value_db\n");
        let np = self.phis_deg.len();
        for (i, t) in self.thetas_deg.iter().enumerate() {
            for (j, p) in self.phis_deg.iter().enumerate() {
                let db = 10.0 * (self.spectrum[i * np + j] / peak).log10();
                out.push_str(&format!("{},{},{}\n", fmt_sig(*t), fmt_sig(*p), fmt_sig(db)));
            }
        }
        out
    }
}

struct Projector<'a> {
    manifold: &'a Manifold,
    /// Signal-subspace basis, conjugate-transposed (`K × n`).
    es_h: DMatrix<Complex64>,
}

impl Projector<'_> {
    fn value(&self, theta: f64, phi: f64) -> f64 {
        let a: Vec<Complex64> = self.manifold.phases(theta, phi).collect();
        let n = a.len() as f64;
        let mut captured = 0.0;
        for k in 0..self.es_h.nrows() {
            let c: Complex64 = self
                .es_h
                .row(k)
                .iter()
                .zip(&a)
                .map(|(e, x)| e * x)
                .sum();
            captured += c.norm_sqr();
        }
        1.0 / (n - captured).max(n * 1e-14)
    }
}

/// Eigen-decompose `r`, scan `1/‖E_nᴴ a‖²` on the grid and return the `k`
/// strongest separated local maxima.
pub fn music_2d(
    r: &DMatrix<Complex64>,
    manifold: &Manifold,
    k: usize,
    grid: &MusicGrid,
) -> Result<MusicResult> {
    let n = r.nrows();
    if r.ncols() != n || n != manifold.positions.len() {
        return Err(Error::arg("covariance and manifold sizes differ"));
    }
    if k == 0 || k >= n {
        return Err(Error::arg(format!("need 0 < K < {n} sources, got {k}")));
    }
    let eig = SymmetricEigen::new(r.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let es_h = DMatrix::from_fn(k, n, |row, col| eig.eigenvectors[(col, order[row])].conj());
    let proj = Projector { manifold, es_h };

    let (thetas, phis) = grid.axes();
    let np = phis.len();
    let spectrum: Vec<f64> = thetas
        .par_iter()
        .flat_map_iter(|&t| {
            let proj = &proj;
            phis.iter()
                .map(move |&p| proj.value(t.to_radians(), p.to_radians()))
        })
        .collect();

    let candidates = local_maxima(&spectrum, thetas.len(), np, grid.separation);
    let step = grid.theta_step_deg.max(grid.phi_step_deg).to_radians();
    let min_gap = grid.separation.max(1) as f64 * step;
    let mut estimates: Vec<[f64; 2]> = Vec::with_capacity(k);
    for (i, j) in candidates {
        if estimates.len() == k {
            break;
        }
        let start = [thetas[i].to_radians(), phis[j].to_radians()];
        let est = if grid.refine {
            refine(&proj, start, grid.theta_step_deg.to_radians())
        } else {
            start
        };
        // two grid peaks climbing onto the same maximum count once
        let distinct = estimates.iter().all(|e| {
            super::wrap_angle(e[0] - est[0]).abs() >= min_gap || (e[1] - est[1]).abs() >= min_gap
        });
        if distinct {
            estimates.push(est);
        }
    }
    if estimates.len() < k {
        // too few separated maxima: fall back to the strongest remaining cells
        let mut all: Vec<(usize, usize)> =
            (0..thetas.len()).flat_map(|i| (0..np).map(move |j| (i, j))).collect();
        all.sort_by(|a, b| spectrum[b.0 * np + b.1].total_cmp(&spectrum[a.0 * np + a.1]).then(a.cmp(b)));
        for (i, j) in all {
            if estimates.len() == k {
                break;
            }
            let cell = [thetas[i].to_radians(), phis[j].to_radians()];
            if !estimates.contains(&cell) {
                estimates.push(cell);
            }
        }
    }

    Ok(MusicResult {
        thetas_deg: thetas,
        phis_deg: phis,
        spectrum,
        estimates,
    })
}

/// Local maxima (azimuth wraps), strongest first, thinned greedily so no two
/// lie within `sep` cells of each other.
fn local_maxima(s: &[f64], nt: usize, np: usize, sep: usize) -> Vec<(usize, usize)> {
    let at = |i: usize, j: usize| s[i * np + j];
    let mut maxima: Vec<(usize, usize)> = Vec::new();
    for i in 0..nt {
        for j in 0..np {
            let v = at(i, j);
            let mut is_max = true;
            'nb: for di in [nt - 1, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    let jj = j as i64 + dj;
                    if (di == 0 && dj == 0) || jj < 0 || jj >= np as i64 {
                        continue;
                    }
                    if at((i + di) % nt, jj as usize) > v {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                maxima.push((i, j));
            }
        }
    }
    maxima.sort_by(|a, b| at(b.0, b.1).total_cmp(&at(a.0, a.1)).then(a.cmp(b)));

    let close = |a: (usize, usize), b: (usize, usize)| {
        let di = a.0.abs_diff(b.0);
        let di = di.min(nt - di);
        di < sep && a.1.abs_diff(b.1) < sep
    };
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    for m in maxima {
        if chosen.iter().all(|&c| !close(c, m)) {
            chosen.push(m);
        }
    }
    chosen
}

fn refine(proj: &Projector<'_>, start: [f64; 2], step0: f64) -> [f64; 2] {
    let clamp_phi = |p: f64| p.clamp(0.0, PI / 2.0);
    let wrap = |t: f64| (t + PI).rem_euclid(2.0 * PI) - PI;
    let mut best = start;
    let mut best_v = proj.value(best[0], best[1]);
    let mut step = step0 / 2.0;
    while step > 1e-7 {
        let mut moved = false;
        for dt in [-1.0, 0.0, 1.0] {
            for dp in [-1.0, 0.0, 1.0] {
                let cand = [wrap(best[0] + dt * step), clamp_phi(best[1] + dp * step)];
                let v = proj.value(cand[0], cand[1]);
                if v > best_v {
                    best_v = v;
                    best = cand;
                    moved = true;
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    best
}
