//! Array factors, two-way MIMO radiation patterns and their beam metrics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::fmt_sig;

/// Half-power level of an amplitude pattern, `−10 log₁₀ 2` dB.
pub const HALF_POWER_DB: f64 = -3.010_299_956_639_812;

/// Phase term used inside the array-factor sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AfForm {
    /// `⟨sin φ (cos θ, sin θ), z⟩`.
    Planar,
    /// Transmit form, `z_x sin φ cos θ`.
    TransmitX,
    /// Receive form, `z_y sin φ sin θ`.
    ReceiveY,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementPattern {
    Isotropic,
    /// `C_E = cos φ`, entering the two-way pattern squared.
    Cosine,
}

/// `Σ I_q exp(+i 2π ⟨v, z_q⟩)`; unit weights when `weights` is `None`.
pub fn array_factor(
    positions: &[[f64; 2]],
    weights: Option<&[f64]>,
    theta: f64,
    phi: f64,
    form: AfForm,
) -> Result<Complex64> {
    if let Some(w) = weights {
        if w.len() != positions.len() {
            return Err(Error::arg("one weight per sensor is required"));
        }
    }
    let (sp, ct, st) = (phi.sin(), theta.cos(), theta.sin());
    let proj = |z: &[f64; 2]| match form {
        AfForm::Planar => sp * (ct * z[0] + st * z[1]),
        AfForm::TransmitX => sp * ct * z[0],
        AfForm::ReceiveY => sp * st * z[1],
    };
    Ok(positions
        .iter()
        .enumerate()
        .map(|(q, z)| Complex64::cis(2.0 * PI * proj(z)) * weights.map_or(1.0, |w| w[q]))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternGrid {
    pub theta_step_deg: f64,
    pub phi_step_deg: f64,
}

impl Default for PatternGrid {
    fn default() -> Self {
        PatternGrid {
            theta_step_deg: 0.25,
            phi_step_deg: 0.25,
        }
    }
}

impl PatternGrid {
    /// Azimuths `[−180°, 180°)` and elevations `[0°, 90°]`.
    pub fn axes(&self) -> (Vec<f64>, Vec<f64>) {
        let nt = (360.0 / self.theta_step_deg).round() as usize;
        let np = (90.0 / self.phi_step_deg).round() as usize;
        (
            (0..nt).map(|i| -180.0 + i as f64 * self.theta_step_deg).collect(),
            (0..=np).map(|j| j as f64 * self.phi_step_deg).collect(),
        )
    }
}

/// Normalised two-way pattern in dB (peak exactly 0 dB).
#[derive(Debug, Clone, Serialize)]
pub struct Pattern {
    pub thetas_deg: Vec<f64>,
    pub phis_deg: Vec<f64>,
    /// Row-major over `(theta, phi)`.
    pub db: Vec<f64>,
    /// Linear peak before normalisation.
    pub peak: f64,
}

impl Pattern {
    /// Elevation cut at azimuth index `i`.
    pub fn cut(&self, i: usize) -> &[f64] {
        let np = self.phis_deg.len();
        &self.db[i * np..(i + 1) * np]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,phi,value_db\n");
        for (i, t) in self.thetas_deg.iter().enumerate() {
            for (p, v) in self.phis_deg.iter().zip(self.cut(i)) {
                out.push_str(&format!("{},{},{}\n", fmt_sig(*t), fmt_sig(*p), fmt_sig(*v)));
            }
        }
        out
    }
}

/// `C_E² |AF_tx| |AF_rx|`, normalised to its maximum.
pub fn two_way_pattern(
    tx: &[[f64; 2]],
    rx: &[[f64; 2]],
    grid: &PatternGrid,
    element: ElementPattern,
    forms: (AfForm, AfForm),
) -> Result<Pattern> {
    if tx.is_empty() || rx.is_empty() {
        return Err(Error::arg("transmit and receive arrays must be non-empty"));
    }
    let (thetas, phis) = grid.axes();
    let lin: Vec<f64> = thetas
        .par_iter()
        .flat_map_iter(|&t| {
            phis.iter().map(move |&p| {
                let (tr, pr) = (t.to_radians(), p.to_radians());
                let a = array_factor(tx, None, tr, pr, forms.0).expect("unit weights");
                let b = array_factor(rx, None, tr, pr, forms.1).expect("unit weights");
                let ce = match element {
                    ElementPattern::Isotropic => 1.0,
                    ElementPattern::Cosine => pr.cos().max(0.0),
                };
                ce * ce * a.norm() * b.norm()
            })
        })
        .collect();
    let peak = lin.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::arg("pattern vanishes everywhere"));
    }
    let db = lin
        .iter()
        .map(|&v| 20.0 * (v / peak).max(1e-300).log10())
        .collect();
    Ok(Pattern {
        thetas_deg: thetas,
        phis_deg: phis,
        db,
        peak,
    })
}

/// Elevation where a broadside-peaked cut first falls to half power,
/// linearly interpolated; `None` if it never does.
pub fn hpbw(cut: &[f64], phis_deg: &[f64]) -> Option<f64> {
    let k = cut.iter().position(|&v| v < HALF_POWER_DB)?;
    if k == 0 {
        return Some(phis_deg[0]);
    }
    let f = (HALF_POWER_DB - cut[k - 1]) / (cut[k] - cut[k - 1]);
    Some(phis_deg[k - 1] + f * (phis_deg[k] - phis_deg[k - 1]))
}

/// Highest sidelobe of one cut: the main lobe runs from broadside to the
/// first local minimum.
fn cut_sidelobe(cut: &[f64]) -> Option<f64> {
    let j = (1..cut.len()).find(|&j| cut[j] > cut[j - 1])?;
    cut[j - 1..].iter().copied().reduce(f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", content = "db", rename_all = "snake_case")]
pub enum Sls {
    Db(f64),
    NoSidelobe,
}

impl Sls {
    pub fn db(self) -> Option<f64> {
        match self {
            Sls::Db(v) => Some(v),
            Sls::NoSidelobe => None,
        }
    }
}

/// Peak level minus the highest sidelobe over every azimuth cut.
pub fn sls(p: &Pattern) -> Sls {
    match worst_sidelobe(p) {
        Some((_, level)) => Sls::Db(-level),
        None => Sls::NoSidelobe,
    }
}

fn worst_sidelobe(p: &Pattern) -> Option<(usize, f64)> {
    (0..p.thetas_deg.len())
        .filter_map(|i| cut_sidelobe(p.cut(i)).map(|v| (i, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternMetrics {
    pub sls: Sls,
    /// Azimuth of the cut holding the largest sidelobe.
    pub sidelobe_theta_deg: Option<f64>,
    /// Full beamwidth on that cut (`θ` and `θ + 180°` halves).
    pub hpbw_deg: Option<f64>,
    pub hpbw_max_deg: Option<f64>,
    pub hpbw_min_deg: Option<f64>,
}

pub fn pattern_metrics(p: &Pattern) -> PatternMetrics {
    let nt = p.thetas_deg.len();
    let half = nt / 2;
    let halves: Vec<Option<f64>> = (0..nt).map(|i| hpbw(p.cut(i), &p.phis_deg)).collect();
    let widths: Vec<Option<f64>> = (0..half)
        .map(|i| Some(halves[i]? + halves[i + half]?))
        .collect();
    let defined = widths.iter().flatten().copied();
    let hpbw_max_deg = defined.clone().reduce(f64::max);
    let hpbw_min_deg = defined.reduce(f64::min);
    let worst = worst_sidelobe(p);
    PatternMetrics {
        sls: worst.map_or(Sls::NoSidelobe, |(_, v)| Sls::Db(-v)),
        sidelobe_theta_deg: worst.map(|(i, _)| p.thetas_deg[i]),
        hpbw_deg: worst.and_then(|(i, _)| widths[i % half]),
        hpbw_max_deg,
        hpbw_min_deg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PatternGrid {
        PatternGrid {
            theta_step_deg: 1.0,
            phi_step_deg: 0.25,
        }
    }

    #[test]
    fn array_factor_examples() {
        let pos = [[0.0, 0.0], [0.5, 0.0], [1.0, 1.5]];
        let af = array_factor(&pos, Some(&[1.0, 2.0, 0.5]), 0.0, 0.0, AfForm::Planar).unwrap();
        assert!((af - Complex64::new(3.5, 0.0)).norm() < 1e-12);
        let origin = [[0.0, 0.0]];
        for (t, p) in [(0.3, 1.1), (-2.0, 0.2)] {
            let af = array_factor(&origin, Some(&[0.7]), t, p, AfForm::ReceiveY).unwrap();
            assert!((af - Complex64::new(0.7, 0.0)).norm() < 1e-12);
        }
        let pair = [[-0.5, 0.0], [0.5, 0.0]];
        let af = array_factor(&pair, None, 0.0, 0.0, AfForm::Planar).unwrap();
        assert!((af.re - 2.0).abs() < 1e-12);
        assert!(array_factor(&pair, Some(&[1.0]), 0.0, 0.0, AfForm::Planar).is_err());
    }

    #[test]
    fn forms_differ_only_in_projection() {
        let pos = [[0.3, 0.0], [0.0, 0.8]];
        let (t, p) = (0.4, 0.9);
        let x = array_factor(&pos[..1], None, t, p, AfForm::TransmitX).unwrap();
        let planar = array_factor(&pos[..1], None, t, p, AfForm::Planar).unwrap();
        assert!((x - planar).norm() < 1e-12);
        let y = array_factor(&pos[1..], None, t, p, AfForm::ReceiveY).unwrap();
        let planar = array_factor(&pos[1..], None, t, p, AfForm::Planar).unwrap();
        assert!((y - planar).norm() < 1e-12);
    }

    #[test]
    fn two_element_beamwidth() {
        // |cos(π/2 · sin φ)| falls to half power at φ = 30° on the array axis
        let p = two_way_pattern(
            &[[0.0, 0.0]],
            &[[-0.25, 0.0], [0.25, 0.0]],
            &grid(),
            ElementPattern::Isotropic,
            (AfForm::Planar, AfForm::Planar),
        )
        .unwrap();
        let i0 = p.thetas_deg.iter().position(|&t| t == 0.0).unwrap();
        let h = hpbw(p.cut(i0), &p.phis_deg).unwrap();
        assert!((h - 30.0).abs() < 0.02, "{h}");
        assert_eq!(p.db.iter().copied().fold(f64::MIN, f64::max), 0.0);
        assert_eq!(sls(&p), Sls::NoSidelobe);
    }

    #[test]
    fn centrosymmetric_pattern_symmetry() {
        let pos = [[0.0, 0.0], [0.5, 0.0], [-0.5, 0.0], [0.5, 1.0], [-0.5, -1.0]];
        let p = two_way_pattern(&pos, &pos, &grid(), ElementPattern::Cosine, (AfForm::Planar, AfForm::Planar))
            .unwrap();
        let half = p.thetas_deg.len() / 2;
        for i in 0..half {
            for (a, b) in p.cut(i).iter().zip(p.cut(i + half)) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sidelobe_of_uniform_line() {
        // 4-element half-wavelength line: first sidelobe near −11.3 dB one way
        let line: Vec<[f64; 2]> = (0..4).map(|i| [0.5 * i as f64, 0.0]).collect();
        let p = two_way_pattern(
            &[[0.0, 0.0]],
            &line,
            &PatternGrid { theta_step_deg: 90.0, phi_step_deg: 0.05 },
            ElementPattern::Isotropic,
            (AfForm::Planar, AfForm::Planar),
        )
        .unwrap();
        let v = sls(&p).db().unwrap();
        assert!((v - 11.3).abs() < 0.1, "{v}");
    }
}
