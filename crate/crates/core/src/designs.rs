//! Sensor-array families built from coprime ideals of a quadratic ring.
//!
//! Sensor coordinates are exact ring-lattice pairs; the physical position of
//! `u` is `pitch · G · u` with `G` the ring's embedding generator.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{enumerate_points, reflect, CellSpec, Convention, SubLattice};
use crate::output::fmt_sig;
use crate::rings::{is_prime, Point, QuadInt, RingSpec};

/// Default pitch in wavelengths.
pub const HALF_WAVELENGTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    QTuple,
    Hscrt,
    TArray,
    Spinner,
    Z2Cross,
    A2Cross,
    Nested2d,
    Custom,
}

impl DesignKind {
    pub const ALL: [DesignKind; 8] = [
        DesignKind::QTuple,
        DesignKind::Hscrt,
        DesignKind::TArray,
        DesignKind::Spinner,
        DesignKind::Z2Cross,
        DesignKind::A2Cross,
        DesignKind::Nested2d,
        DesignKind::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DesignKind::QTuple => "q_tuple",
            DesignKind::Hscrt => "hscrt",
            DesignKind::TArray => "t_array",
            DesignKind::Spinner => "spinner",
            DesignKind::Z2Cross => "z2_cross",
            DesignKind::A2Cross => "a2_cross",
            DesignKind::Nested2d => "nested_2d",
            DesignKind::Custom => "custom",
        }
    }

    /// Closed-form sensor count for the prime-indexed families.
    pub fn expected_count(self, p: u64) -> Option<u64> {
        match self {
            DesignKind::Hscrt => Some(5 * p - 4),
            DesignKind::TArray | DesignKind::Spinner => Some(3 * p - 2),
            DesignKind::Z2Cross => Some((5 * p - 3) / 2),
            DesignKind::A2Cross => Some((8 * p - 5) / 3),
            DesignKind::QTuple | DesignKind::Nested2d | DesignKind::Custom => None,
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DesignKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        DesignKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s || (s == "spinner_array" && *k == DesignKind::Spinner))
            .ok_or_else(|| Error::input(format!("unknown design kind {s:?}")))
    }
}

/// Labeled sensor positions. Labels are `p1`, `p2`, ... for the generating
/// ideal, `ext` for reflected extension points, `dense`/`sparse` for the
/// nested baseline. A position shared by several ideals carries the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorArray {
    pub ring: RingSpec,
    pub kind: DesignKind,
    pub p: Option<u64>,
    pub pitch: f64,
    pub generators: Vec<QuadInt>,
    pub sensors: Vec<Point>,
    pub labels: Vec<String>,
}

impl SensorArray {
    fn from_labeled(
        ring: RingSpec,
        kind: DesignKind,
        p: Option<u64>,
        generators: Vec<QuadInt>,
        labeled: impl IntoIterator<Item = (Point, String)>,
    ) -> Self {
        let mut map: BTreeMap<Point, String> = BTreeMap::new();
        for (u, l) in labeled {
            map.entry(u).or_insert(l);
        }
        let (sensors, labels) = map.into_iter().unzip();
        SensorArray {
            ring,
            kind,
            p,
            pitch: HALF_WAVELENGTH,
            generators,
            sensors,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn with_pitch(mut self, pitch: f64) -> Self {
        self.pitch = pitch;
        self
    }

    /// Positions in wavelengths, `pitch · G · u`.
    pub fn physical_positions(&self) -> Result<Vec<[f64; 2]>> {
        self.sensors
            .iter()
            .map(|&u| {
                let [x, y] = self.ring.embed(u)?;
                Ok([self.pitch * x, self.pitch * y])
            })
            .collect()
    }

    /// Transmit and receive subarrays for the two-way pattern: the first
    /// ideal (with its extension, or the dense grid) transmits and the rest
    /// receives. The nested sparse grid keeps its shared origin corner.
    pub fn mimo_split(&self) -> (Vec<Point>, Vec<Point>) {
        let mut tx = Vec::new();
        let mut rx = Vec::new();
        for (u, l) in self.sensors.iter().zip(&self.labels) {
            match l.as_str() {
                "p1" | "ext" | "dense" => tx.push(*u),
                _ => rx.push(*u),
            }
        }
        if self.kind == DesignKind::Nested2d && !rx.is_empty() && !rx.contains(&[0, 0]) {
            rx.insert(0, [0, 0]);
        }
        (tx, rx)
    }

    /// Sensors carrying `label`.
    pub fn labeled(&self, label: &str) -> Vec<Point> {
        self.sensors
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| l.as_str() == label)
            .map(|(u, _)| *u)
            .collect()
    }

    /// A copy keeping only the sensors whose index passes `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(usize) -> bool) -> SensorArray {
        let (sensors, labels) = self
            .sensors
            .iter()
            .zip(&self.labels)
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, (u, l))| (*u, l.clone()))
            .unzip();
        SensorArray {
            sensors,
            labels,
            generators: self.generators.clone(),
            ..*self
        }
    }

    /// Arbitrary positions on the ring lattice, labeled `custom`.
    pub fn custom(ring: RingSpec, sensors: Vec<Point>) -> Result<Self> {
        let mut s = sensors.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != sensors.len() {
            return Err(Error::input("duplicate sensor coordinates"));
        }
        let labels = vec!["custom".to_string(); s.len()];
        Ok(SensorArray {
            ring,
            kind: DesignKind::Custom,
            p: None,
            pitch: HALF_WAVELENGTH,
            generators: Vec::new(),
            sensors: s,
            labels,
        })
    }

    /// Physical coordinates as CSV (`x,y` in wavelengths).
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::from("x,y\n");
        for [x, y] in self.physical_positions()? {
            out.push_str(&format!("{},{}\n", fmt_sig(x), fmt_sig(y)));
        }
        Ok(out)
    }
}

fn require_imaginary(ring: RingSpec) -> Result<()> {
    if ring.is_imaginary() {
        Ok(())
    } else {
        Err(Error::UnsupportedRing(format!(
            "{ring} is not imaginary quadratic; arrays need a planar embedding"
        )))
    }
}

/// Inclusion-exclusion count of the Q-tuple array.
pub fn q_tuple_expected_count(ring: RingSpec, generators: &[QuadInt]) -> Result<i64> {
    let q = generators.len();
    if q > 20 {
        return Err(Error::arg("too many generators"));
    }
    let total = ring.norm(ring.product(generators)?)?.abs();
    let mut count = 0i64;
    for mask in 1u32..(1 << q) {
        let subset: Vec<QuadInt> = (0..q)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| generators[i])
            .collect();
        let n = ring.norm(ring.product(&subset)?)?.abs();
        let term = total / n;
        if subset.len() % 2 == 1 {
            count += term;
        } else {
            count -= term;
        }
    }
    Ok(count)
}

/// Union of each ideal lattice inside the half-open cell of the product ideal.
pub fn q_tuple_crt(ring: RingSpec, generators: &[QuadInt]) -> Result<SensorArray> {
    require_imaginary(ring)?;
    if generators.is_empty() {
        return Err(Error::arg("at least one generator is required"));
    }
    if let Some(z) = generators.iter().position(|g| g.is_zero()) {
        return Err(Error::arg(format!("generator {} is zero", z + 1)));
    }
    for i in 0..generators.len() {
        for j in i + 1..generators.len() {
            if !ring.is_coprime(generators[i], generators[j])? {
                return Err(Error::InvalidDesign(format!(
                    "generators {} ({}) and {} ({}) are not coprime",
                    i + 1,
                    generators[i],
                    j + 1,
                    generators[j]
                )));
            }
        }
    }
    let big = ring.product(generators)?;
    let cell = CellSpec::new(SubLattice::principal(ring, big)?, Convention::HalfOpen);
    let mut labeled = Vec::new();
    for (k, &g) in generators.iter().enumerate() {
        let sub = SubLattice::principal(ring, g)?;
        let label = format!("p{}", k + 1);
        labeled.extend(
            enumerate_points(&sub, &cell)
                .into_iter()
                .map(|u| (u, label.clone())),
        );
    }
    Ok(SensorArray::from_labeled(
        ring,
        DesignKind::QTuple,
        None,
        generators.to_vec(),
        labeled,
    ))
}

/// The two building blocks `Z₁ = σ(𝔭₁) ∩ V̄(pΛ)` and `Z₂ = σ(𝔭₂) ∩ V°(2pΛ)`.
#[derive(Debug, Clone)]
pub struct HscrtParts {
    pub ring: RingSpec,
    pub p: u64,
    pub generators: (QuadInt, QuadInt),
    pub z1: Vec<Point>,
    pub z2: Vec<Point>,
}

pub fn hscrt_parts(ring: RingSpec, p: u64) -> Result<HscrtParts> {
    require_imaginary(ring)?;
    let (m, mbar) = ring.split_prime(p)?;
    let pi = p as i64;
    let z1 = enumerate_points(
        &SubLattice::principal(ring, m)?,
        &CellSpec::scaled(ring, pi, Convention::Closed)?,
    );
    let z2 = enumerate_points(
        &SubLattice::principal(ring, mbar)?,
        &CellSpec::scaled(ring, 2 * pi, Convention::Open)?,
    );
    if z1.len() as u64 != p {
        return Err(Error::InvalidDesign(format!(
            "small subarray has {} points, expected {p}",
            z1.len()
        )));
    }
    Ok(HscrtParts {
        ring,
        p,
        generators: (m, mbar),
        z1,
        z2,
    })
}

impl HscrtParts {
    fn assemble(
        &self,
        kind: DesignKind,
        z2_keep: impl Fn(Point) -> bool,
        ext: Vec<Point>,
    ) -> SensorArray {
        let labeled = self
            .z1
            .iter()
            .map(|&u| (u, "p1".to_string()))
            .chain(ext.into_iter().map(|u| (u, "ext".to_string())))
            .chain(
                self.z2
                    .iter()
                    .filter(|&&u| z2_keep(u))
                    .map(|&u| (u, "p2".to_string())),
            );
        SensorArray::from_labeled(
            self.ring,
            kind,
            Some(self.p),
            vec![self.generators.0, self.generators.1],
            labeled,
        )
    }
}

/// Hole-free symmetric CRT array, `5p − 4` sensors.
pub fn hscrt(ring: RingSpec, p: u64) -> Result<SensorArray> {
    let parts = hscrt_parts(ring, p)?;
    Ok(parts.assemble(DesignKind::Hscrt, |_| true, Vec::new()))
}

fn require_residue(p: u64, modulus: u64, ring: &str) -> Result<()> {
    if is_prime(p) && p % modulus == 1 {
        Ok(())
    } else {
        Err(Error::UnsupportedPrime {
            p,
            reason: format!("{ring} designs need a prime p = 1 mod {modulus}"),
        })
    }
}

/// `Z₁` plus the upper half of `Z₂`, `3p − 2` sensors.
pub fn t_array(p: u64) -> Result<SensorArray> {
    require_residue(p, 4, "Gaussian")?;
    let parts = hscrt_parts(RingSpec::GAUSSIAN, p)?;
    Ok(parts.assemble(DesignKind::TArray, |z| z[1] > 0, Vec::new()))
}

/// `Z₁` plus three alternating 60° sectors of `Z₂`, `3p − 2` sensors.
pub fn spinner_array(p: u64) -> Result<SensorArray> {
    require_residue(p, 3, "Eisenstein")?;
    let parts = hscrt_parts(RingSpec::EISENSTEIN, p)?;
    // sectors [0°,60°), [120°,180°), [240°,300°) in the basis {1, ω}
    let keep = |[a, b]: Point| {
        (a > 0 && b > 0) || (b > 0 && a + b < 0) || (a > 0 && a + b < 0)
    };
    Ok(parts.assemble(DesignKind::Spinner, keep, Vec::new()))
}

fn cross(ring: RingSpec, p: u64, kind: DesignKind) -> Result<SensorArray> {
    let parts = hscrt_parts(ring, p)?;
    let e: Point = [0, 1];
    let ee = ring.ip2(e, e);
    let t: Point = [0, p as i64];
    let ext: Vec<Point> = parts
        .z1
        .iter()
        .filter(|&&h| ring.ip2(h, e) > 0)
        .map(|&h| reflect(h, t))
        .collect();
    let pp = p as i128;
    let band = move |z: Point| {
        let s = ring.ip2(z, e);
        s > 0 && 2 * s < pp * ee
    };
    Ok(parts.assemble(kind, band, ext))
}

/// Gaussian cross array, `(5p − 3)/2` sensors.
pub fn z2_cross(p: u64) -> Result<SensorArray> {
    require_residue(p, 4, "Gaussian")?;
    cross(RingSpec::GAUSSIAN, p, DesignKind::Z2Cross)
}

/// Eisenstein cross array, `(8p − 5)/3` sensors.
pub fn a2_cross(p: u64) -> Result<SensorArray> {
    require_residue(p, 3, "Eisenstein")?;
    cross(RingSpec::EISENSTEIN, p, DesignKind::A2Cross)
}

/// Baseline: dense `n1 × n1` grid plus sparse `n2 × n2` grid at pitch `n1 + 1`.
pub fn nested_2d(n1: u32, n2: u32) -> Result<SensorArray> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::arg("nested grid sizes must be at least 1"));
    }
    let (n1, n2) = (n1 as i64, n2 as i64);
    let dense = (0..n1).flat_map(|i| (0..n1).map(move |j| ([i, j], "dense".to_string())));
    let step = n1 + 1;
    let sparse = (0..n2)
        .flat_map(move |i| (0..n2).map(move |j| ([step * i, step * j], "sparse".to_string())));
    Ok(SensorArray::from_labeled(
        RingSpec::GAUSSIAN,
        DesignKind::Nested2d,
        None,
        Vec::new(),
        dense.chain(sparse),
    ))
}

/// Build any prime-indexed family by kind.
pub fn build(kind: DesignKind, ring: RingSpec, p: u64) -> Result<SensorArray> {
    let check_ring = |want: RingSpec| {
        if ring == want {
            Ok(())
        } else {
            Err(Error::UnsupportedRing(format!("{kind} is defined over {want}, not {ring}")))
        }
    };
    match kind {
        DesignKind::Hscrt => hscrt(ring, p),
        DesignKind::TArray => check_ring(RingSpec::GAUSSIAN).and_then(|_| t_array(p)),
        DesignKind::Z2Cross => check_ring(RingSpec::GAUSSIAN).and_then(|_| z2_cross(p)),
        DesignKind::Spinner => check_ring(RingSpec::EISENSTEIN).and_then(|_| spinner_array(p)),
        DesignKind::A2Cross => check_ring(RingSpec::EISENSTEIN).and_then(|_| a2_cross(p)),
        DesignKind::QTuple | DesignKind::Nested2d | DesignKind::Custom => Err(Error::arg(format!(
            "{kind} is not indexed by a prime"
        ))),
    }
}
