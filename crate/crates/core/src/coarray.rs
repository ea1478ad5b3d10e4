//! Difference and sum coarrays, hole checks and sensor essentialness.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designs::SensorArray;
use crate::error::{Error, Result};
use crate::lattice::{scaled_region, Convention};
use crate::rings::{Point, RingSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarrayKind {
    Difference,
    Sum,
}

/// Multiset of integer lag vectors with their weights `w(d)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coarray {
    pub kind: CoarrayKind,
    pub ring: RingSpec,
    pub weights: BTreeMap<Point, u64>,
}

impl Coarray {
    pub fn weight(&self, d: Point) -> u64 {
        self.weights.get(&d).copied().unwrap_or(0)
    }

    pub fn support(&self) -> BTreeSet<Point> {
        self.weights.keys().copied().collect()
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.values().sum()
    }

    /// Number of lags realised by exactly `w` pairs, keyed by `w`.
    pub fn weight_histogram(&self) -> BTreeMap<u64, u64> {
        let mut h = BTreeMap::new();
        for &w in self.weights.values() {
            *h.entry(w).or_insert(0) += 1;
        }
        h
    }

    /// Largest `k` with `Λ ∩ V̄(kΛ)` fully covered, and that region's size.
    pub fn contiguous_extent(&self) -> Result<(i64, usize)> {
        let mut best = (0, usize::from(self.weight([0, 0]) > 0));
        if best.1 == 0 {
            return Ok(best);
        }
        let reach = self
            .weights
            .keys()
            .map(|d| d[0].abs().max(d[1].abs()))
            .max()
            .unwrap_or(0);
        for k in 1..=2 * reach + 2 {
            let region = scaled_region(self.ring, k, Convention::Closed)?;
            if region.iter().all(|d| self.weights.contains_key(d)) {
                best = (k, region.len());
            } else {
                break;
            }
        }
        Ok(best)
    }
}

pub fn difference_of(ring: RingSpec, sensors: &[Point]) -> Coarray {
    let mut weights = BTreeMap::new();
    for a in sensors {
        for b in sensors {
            *weights.entry([a[0] - b[0], a[1] - b[1]]).or_insert(0) += 1;
        }
    }
    Coarray {
        kind: CoarrayKind::Difference,
        ring,
        weights,
    }
}

pub fn sum_of(ring: RingSpec, tx: &[Point], rx: &[Point]) -> Coarray {
    let mut weights = BTreeMap::new();
    for a in tx {
        for b in rx {
            *weights.entry([a[0] + b[0], a[1] + b[1]]).or_insert(0) += 1;
        }
    }
    Coarray {
        kind: CoarrayKind::Sum,
        ring,
        weights,
    }
}

/// `{z_m − z_n}` over all ordered sensor pairs.
pub fn difference_coarray(arr: &SensorArray) -> Coarray {
    difference_of(arr.ring, &arr.sensors)
}

/// `{z_m + z_n}` over transmit-receive pairs.
pub fn sum_coarray(tx: &SensorArray, rx: &SensorArray) -> Result<Coarray> {
    if tx.ring != rx.ring {
        return Err(Error::arg("transmit and receive arrays use different rings"));
    }
    Ok(sum_of(tx.ring, &tx.sensors, &rx.sensors))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoleCheck {
    pub hole_free: bool,
    pub missing: Vec<Point>,
}

/// Every point of `Λ ∩ V̄(pΛ)` must carry positive weight.
pub fn hole_free_check(c: &Coarray, p: u64, ring: RingSpec) -> Result<HoleCheck> {
    let p = i64::try_from(p).map_err(|_| Error::arg("p too large"))?;
    let missing: Vec<Point> = scaled_region(ring, p, Convention::Closed)?
        .into_iter()
        .filter(|d| c.weight(*d) == 0)
        .collect();
    Ok(HoleCheck {
        hole_free: missing.is_empty(),
        missing,
    })
}

/// Sensors whose removal shrinks the difference-coarray support.
///
/// A sensor `s` is essential iff some nonzero lag is realised only by pairs
/// involving `s`, so each candidate costs one pass over the array.
pub fn essential_set(arr: &SensorArray) -> Result<Vec<Point>> {
    if arr.len() < 2 {
        return Err(Error::arg("essentialness needs at least two sensors"));
    }
    let c = difference_coarray(arr);
    let s = &arr.sensors;
    let flags: Vec<bool> = s
        .par_iter()
        .map(|&a| {
            let mut own: BTreeMap<Point, u64> = BTreeMap::new();
            for &z in s.iter().filter(|&&z| z != a) {
                *own.entry([a[0] - z[0], a[1] - z[1]]).or_insert(0) += 1;
                *own.entry([z[0] - a[0], z[1] - a[1]]).or_insert(0) += 1;
            }
            own.iter().any(|(d, &n)| c.weight(*d) == n)
        })
        .collect();
    Ok(s.iter()
        .zip(flags)
        .filter(|(_, f)| *f)
        .map(|(u, _)| *u)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fragility {
    pub essential: u64,
    pub total: u64,
}

impl Fragility {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.essential, self.total)
    }

    pub fn value(&self) -> f64 {
        self.essential as f64 / self.total as f64
    }
}

impl Serialize for Fragility {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Fragility", 4)?;
        st.serialize_field("essential", &self.essential)?;
        st.serialize_field("total", &self.total)?;
        st.serialize_field("ratio", &self.ratio().to_string())?;
        st.serialize_field("value", &self.value())?;
        st.end()
    }
}

pub fn fragility(arr: &SensorArray) -> Result<Fragility> {
    let ess = essential_set(arr)?;
    Ok(Fragility {
        essential: ess.len() as u64,
        total: arr.len() as u64,
    })
}

/// Summary emitted by the `analyze` command.
#[derive(Debug, Clone, Serialize)]
pub struct CoarrayReport {
    pub kind: CoarrayKind,
    pub support_size: usize,
    pub dof: usize,
    pub contiguous_extent: i64,
    pub holes: Option<HoleCheck>,
    pub fragility: Option<Fragility>,
    pub weight_histogram: BTreeMap<u64, u64>,
}

pub fn report(arr: &SensorArray) -> Result<CoarrayReport> {
    let c = difference_coarray(arr);
    let (extent, dof) = c.contiguous_extent()?;
    let holes = arr.p.map(|p| hole_free_check(&c, p, arr.ring)).transpose()?;
    let fragility = if arr.len() >= 2 {
        Some(fragility(arr)?)
    } else {
        None
    };
    Ok(CoarrayReport {
        kind: c.kind,
        support_size: c.support_size(),
        dof,
        contiguous_extent: extent,
        holes,
        fragility,
        weight_histogram: c.weight_histogram(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{hscrt, hscrt_parts, t_array, z2_cross};
    use proptest::prelude::*;

    const G: RingSpec = RingSpec::GAUSSIAN;

    /// Removal-and-recompute definition of essentialness.
    fn essential_brute(ring: RingSpec, s: &[Point]) -> Vec<Point> {
        let full = difference_of(ring, s).support();
        (0..s.len())
            .filter(|&i| {
                let rest: Vec<Point> = s
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, u)| *u)
                    .collect();
                difference_of(ring, &rest).support() != full
            })
            .map(|i| s[i])
            .collect()
    }

    #[test]
    fn single_sensor() {
        let c = difference_of(G, &[[3, 4]]);
        assert_eq!(c.weights, BTreeMap::from([([0, 0], 1)]));
    }

    #[test]
    fn zero_lag_weight_is_sensor_count() {
        let arr = t_array(13).unwrap();
        let c = difference_coarray(&arr);
        assert_eq!(c.weight([0, 0]), 37);
        assert_eq!(c.total_weight(), 37 * 37);
    }

    #[test]
    fn hscrt_covers_region() {
        let c = difference_coarray(&hscrt(G, 5).unwrap());
        let chk = hole_free_check(&c, 5, G).unwrap();
        assert!(chk.hole_free);
        let region = scaled_region(G, 5, Convention::Closed).unwrap();
        assert_eq!(region.len(), 25);
    }

    #[test]
    fn two_sensor_holes() {
        let c = difference_of(G, &[[0, 0], [1, 0]]);
        let chk = hole_free_check(&c, 5, G).unwrap();
        assert!(!chk.hole_free);
        assert_eq!(chk.missing.len(), 22);
    }

    #[test]
    fn sum_equals_difference_for_hscrt() {
        let parts = hscrt_parts(G, 13).unwrap();
        let s = sum_of(G, &parts.z1, &parts.z2).support();
        let arr = hscrt(G, 13).unwrap();
        let d = difference_coarray(&arr).support();
        let region: BTreeSet<Point> = scaled_region(G, 13, Convention::Closed)
            .unwrap()
            .into_iter()
            .collect();
        assert!(region.is_subset(&s));
        assert!(region.is_subset(&d));
    }

    #[test]
    fn sum_with_origin_transmitter() {
        let rx = vec![[1, 2], [-3, 4]];
        let c = sum_of(G, &[[0, 0]], &rx);
        assert_eq!(c.support(), rx.iter().copied().collect());
    }

    #[test]
    fn fragility_values() {
        let t = fragility(&t_array(13).unwrap()).unwrap();
        assert_eq!(t.ratio(), Ratio::from_integer(1));
        let h = fragility(&hscrt(G, 13).unwrap()).unwrap();
        assert!((h.value() - 0.26).abs() <= 0.02, "{}", h.value());
        let pair = SensorArray::custom(G, vec![[0, 0], [2, 1]]).unwrap();
        assert_eq!(fragility(&pair).unwrap().ratio(), Ratio::from_integer(1));
        let one = SensorArray::custom(G, vec![[0, 0]]).unwrap();
        assert!(matches!(fragility(&one), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn fast_essentialness_matches_definition() {
        for arr in [z2_cross(5).unwrap(), hscrt(G, 5).unwrap()] {
            assert_eq!(essential_set(&arr).unwrap(), essential_brute(G, &arr.sensors));
        }
    }

    #[test]
    fn contiguous_extent_of_t_array() {
        let c = difference_coarray(&t_array(13).unwrap());
        let (k, dof) = c.contiguous_extent().unwrap();
        assert!(k >= 13);
        assert_eq!(dof, scaled_region(G, k, Convention::Closed).unwrap().len());
    }

    proptest! {
        #[test]
        fn essentialness_oracle(pts in proptest::collection::btree_set((-4i64..5, -4i64..5), 2..9)) {
            let s: Vec<Point> = pts.into_iter().map(|(a, b)| [a, b]).collect();
            let arr = SensorArray::custom(G, s.clone()).unwrap();
            prop_assert_eq!(essential_set(&arr).unwrap(), essential_brute(G, &s));
        }

        #[test]
        fn difference_weights_symmetric(pts in proptest::collection::btree_set((-6i64..7, -6i64..7), 1..12)) {
            let s: Vec<Point> = pts.into_iter().map(|(a, b)| [a, b]).collect();
            let c = difference_of(G, &s);
            for (d, w) in &c.weights {
                prop_assert_eq!(c.weight([-d[0], -d[1]]), *w);
            }
            prop_assert_eq!(c.total_weight(), (s.len() * s.len()) as u64);
        }
    }
}
