//! u-space indexing of the coarray and two-dimensional spatial smoothing.
//!
//! In u-space a lag is its integer coordinate pair `d' = G⁻¹ d`, so the
//! hexagonal coarray of an Eisenstein array becomes an integer polygon and
//! rectangular or hexagonal subarrays can be cut out by index arithmetic.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coarray::Coarray;
use crate::error::{Error, Result};
use crate::rings::Point;

const INTEGRALITY_TOL: f64 = 1e-9;

/// Integer lag coordinates after the u-space transform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct USpaceCoarray {
    pub points: BTreeSet<Point>,
}

/// Maps physical lags (in units of the pitch) to u-space; every image must
/// be integral.
pub fn to_u_space(g: &Matrix2<f64>, lags: &[[f64; 2]]) -> Result<USpaceCoarray> {
    let inv = g
        .try_inverse()
        .ok_or_else(|| Error::arg("embedding generator is singular"))?;
    let mut points = BTreeSet::new();
    for d in lags {
        let u = inv * Vector2::new(d[0], d[1]);
        let r = u.map(f64::round);
        if (u - r).abs().max() > INTEGRALITY_TOL {
            return Err(Error::input(format!(
                "lag ({}, {}) is not on the lattice (u-space image ({}, {}))",
                d[0], d[1], u[0], u[1]
            )));
        }
        points.insert([r[0] as i64, r[1] as i64]);
    }
    Ok(USpaceCoarray { points })
}

impl USpaceCoarray {
    /// Exact route for coarrays already held in ring coordinates.
    pub fn from_coarray(c: &Coarray) -> Self {
        USpaceCoarray {
            points: c.support(),
        }
    }

    /// Largest `l` with the hexagon `{|x|, |y|, |x+y| ≤ l}` fully present.
    pub fn hexagon_radius(&self) -> i64 {
        largest_filled(&self.points, hexagon)
    }

    /// Largest `l` with the square `[−l, l]²` fully present.
    pub fn square_radius(&self) -> i64 {
        largest_filled(&self.points, square)
    }
}

fn largest_filled(points: &BTreeSet<Point>, shape: fn(Point, i64) -> Vec<Point>) -> i64 {
    if !points.contains(&[0, 0]) {
        return -1;
    }
    let mut l = 0;
    while shape([0, 0], l + 1).iter().all(|u| points.contains(u)) {
        l += 1;
    }
    l
}

/// Hexagon of radius `l` about `c` in lexicographic (x, then y) order.
pub fn hexagon(c: Point, l: i64) -> Vec<Point> {
    let mut out = Vec::new();
    for dx in -l..=l {
        for dy in -l..=l {
            if (dx + dy).abs() <= l {
                out.push([c[0] + dx, c[1] + dy]);
            }
        }
    }
    out
}

fn square(c: Point, l: i64) -> Vec<Point> {
    (-l..=l)
        .flat_map(|dx| (-l..=l).map(move |dy| [c[0] + dx, c[1] + dy]))
        .collect()
}

fn in_hexagon(u: Point, l: i64) -> bool {
    u[0].abs() <= l && u[1].abs() <= l && (u[0] + u[1]).abs() <= l
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Geometry {
    /// Rectangular windows over `[−x_g, x_g] × [−y_g, y_g]`.
    MethodI { x_g: i64, y_g: i64, l_x: i64, l_y: i64 },
    /// Hexagonal windows of radius `l_p` inside the hexagon of radius `l_r`.
    MethodII { l_r: i64, l_p: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subarray {
    pub index: (i64, i64),
    pub elements: Vec<Point>,
}

/// Element order inside every subarray.
pub const ELEMENT_ORDERING: &str = "lexicographic: d'_x ascending, then d'_y ascending";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmoothingPlan {
    pub geometry: Geometry,
    pub ordering: &'static str,
    pub subarrays: Vec<Subarray>,
}

impl SmoothingPlan {
    /// Elements per subarray.
    pub fn dim(&self) -> usize {
        self.subarrays.first().map_or(0, |s| s.elements.len())
    }

    /// Element lags of the `(0, 0)` subarray, the steering reference.
    pub fn reference(&self) -> &[Point] {
        let s = self
            .subarrays
            .iter()
            .find(|s| s.index == (0, 0))
            .unwrap_or(&self.subarrays[0]);
        &s.elements
    }

    /// Every lag any subarray reads.
    pub fn required_lags(&self) -> BTreeSet<Point> {
        self.subarrays
            .iter()
            .flat_map(|s| s.elements.iter().copied())
            .collect()
    }

    /// Rejects source counts the smoothed covariance cannot resolve.
    pub fn ensure_identifiable(&self, sources: usize) -> Result<()> {
        let limit = match self.geometry {
            Geometry::MethodI { l_x, l_y, .. } => ((l_x + 1) * (l_y + 1)) as usize,
            Geometry::MethodII { .. } => self.dim(),
        };
        if sources == 0 || sources >= limit.min(self.dim()) {
            return Err(Error::arg(format!(
                "{sources} sources cannot be identified with {} elements per subarray",
                self.dim()
            )));
        }
        Ok(())
    }
}

pub fn method1_subarrays(x_g: i64, y_g: i64, l_x: i64, l_y: i64) -> Result<SmoothingPlan> {
    if !(0 < l_x && l_x <= 2 * x_g && 0 < l_y && l_y <= 2 * y_g) {
        return Err(Error::arg(format!(
            "method I needs 0 < l_x <= 2 x_g and 0 < l_y <= 2 y_g (got x_g={x_g}, y_g={y_g}, l_x={l_x}, l_y={l_y})"
        )));
    }
    let mut subarrays = Vec::new();
    for i1 in 0..=2 * x_g - l_x {
        for i2 in 0..=2 * y_g - l_y {
            let (x0, y0) = (-x_g + i1, -y_g + i2);
            let elements = (x0..=x0 + l_x)
                .flat_map(|x| (y0..=y0 + l_y).map(move |y| [x, y]))
                .collect();
            subarrays.push(Subarray {
                index: (i1, i2),
                elements,
            });
        }
    }
    Ok(SmoothingPlan {
        geometry: Geometry::MethodI { x_g, y_g, l_x, l_y },
        ordering: ELEMENT_ORDERING,
        subarrays,
    })
}

pub fn method2_subarrays(l_r: i64, l_p: i64) -> Result<SmoothingPlan> {
    if !(0 < l_p && l_p < l_r) {
        return Err(Error::arg(format!(
            "method II needs 0 < l_p < l_R (got l_R={l_r}, l_p={l_p})"
        )));
    }
    let mut subarrays = Vec::new();
    for i1 in 0..=2 * l_r {
        for i2 in -l_r..=l_r {
            let c = [l_p - l_r + i1, i2];
            // admitted only when the whole window sits inside the region
            if in_hexagon(c, l_r - l_p) {
                subarrays.push(Subarray {
                    index: (i1, i2),
                    elements: hexagon(c, l_p),
                });
            }
        }
    }
    Ok(SmoothingPlan {
        geometry: Geometry::MethodII { l_r, l_p },
        ordering: ELEMENT_ORDERING,
        subarrays,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRole {
    X1,
    X2,
    Y1,
    Y2,
}

/// Binary `rows × cols` matrix with one unit entry per row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelectionMatrix {
    pub role: SelectionRole,
    pub rows: usize,
    pub cols: usize,
    /// Zero-based column of the unit entry in each row.
    pub columns: Vec<usize>,
}

impl SelectionMatrix {
    /// One-based element numbers that the matrix selects.
    pub fn selected_numbers(&self) -> Vec<usize> {
        self.columns.iter().map(|c| c + 1).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (r, &c) in self.columns.iter().enumerate() {
            m[(r, c)] = 1.0;
        }
        m
    }

    /// Sparse triplets `role,row,col,value` (zero-based indices).
    pub fn to_triplet_csv(&self) -> String {
        let role = match self.role {
            SelectionRole::X1 => "x1",
            SelectionRole::X2 => "x2",
            SelectionRole::Y1 => "y1",
            SelectionRole::Y2 => "y2",
        };
        self.columns
            .iter()
            .enumerate()
            .map(|(r, c)| format!("{role},{r},{c},1\n"))
            .collect()
    }
}

/// Shift-invariance selections over the `(0, 0)` Method-II subarray.
pub fn selection_matrices(l_r: i64, l_p: i64) -> Result<[SelectionMatrix; 4]> {
    let plan = method2_subarrays(l_r, l_p)?;
    let elems = plan.reference();
    let pos: BTreeMap<Point, usize> = elems.iter().enumerate().map(|(i, u)| (*u, i)).collect();
    let build = |role, shift: Point, image: bool| {
        let columns: Vec<usize> = elems
            .iter()
            .filter(|u| pos.contains_key(&[u[0] + shift[0], u[1] + shift[1]]))
            .map(|u| {
                if image {
                    pos[&[u[0] + shift[0], u[1] + shift[1]]]
                } else {
                    pos[u]
                }
            })
            .collect();
        SelectionMatrix {
            role,
            rows: columns.len(),
            cols: elems.len(),
            columns,
        }
    };
    Ok([
        build(SelectionRole::X1, [1, 0], false),
        build(SelectionRole::X2, [1, 0], true),
        build(SelectionRole::Y1, [0, 1], false),
        build(SelectionRole::Y2, [0, 1], true),
    ])
}

/// Mean of `v_j v_jᴴ` over the plan's subarrays, `v_j` read from the
/// coarray signal in element order.
pub fn smoothed_covariance(
    plan: &SmoothingPlan,
    signal: &BTreeMap<Point, Complex64>,
) -> Result<DMatrix<Complex64>> {
    if plan.subarrays.is_empty() {
        return Err(Error::arg("smoothing plan has no subarrays"));
    }
    let n = plan.dim();
    let vectors: Vec<DMatrix<Complex64>> = plan
        .subarrays
        .iter()
        .map(|s| {
            let vals: Result<Vec<Complex64>> = s
                .elements
                .iter()
                .map(|d| {
                    signal.get(d).copied().ok_or_else(|| {
                        Error::input(format!(
                            "coarray hole at lag ({}, {}) needed by subarray {:?}",
                            d[0], d[1], s.index
                        ))
                    })
                })
                .collect();
            Ok(DMatrix::from_vec(n, 1, vals?))
        })
        .collect::<Result<_>>()?;

    let outer: Vec<DMatrix<Complex64>> = vectors.par_iter().map(|v| v * v.adjoint()).collect();
    let mut r = DMatrix::<Complex64>::zeros(n, n);
    for o in &outer {
        r += o;
    }
    r /= Complex64::new(plan.subarrays.len() as f64, 0.0);
    let rh = r.adjoint();
    Ok((r + rh) * Complex64::new(0.5, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarray::difference_coarray;
    use crate::designs::{a2_cross, spinner_array};
    use crate::rings::RingSpec;

    #[test]
    fn u_space_images() {
        let g = RingSpec::EISENSTEIN.embedding_generator().unwrap();
        let s3 = 3f64.sqrt();
        let u = to_u_space(&g, &[[0.5, s3 / 2.0], [1.0, 0.0]]).unwrap();
        assert_eq!(u.points, BTreeSet::from([[0, 1], [1, 0]]));
        let id = Matrix2::identity();
        let z = to_u_space(&id, &[[3.0, -4.0]]).unwrap();
        assert_eq!(z.points, BTreeSet::from([[3, -4]]));
        assert!(matches!(to_u_space(&g, &[[0.5, 0.0]]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn eisenstein_coarrays_map_to_integers() {
        let ring = RingSpec::EISENSTEIN;
        let g = ring.embedding_generator().unwrap();
        for arr in [spinner_array(7).unwrap(), a2_cross(13).unwrap()] {
            let c = difference_coarray(&arr);
            let phys: Vec<[f64; 2]> = c.weights.keys().map(|&d| ring.embed(d).unwrap()).collect();
            let u = to_u_space(&g, &phys).unwrap();
            assert_eq!(u, USpaceCoarray::from_coarray(&c));
            assert!(u.hexagon_radius() >= arr.p.unwrap() as i64 / 2);
        }
    }

    #[test]
    fn method1_counts() {
        let p = method1_subarrays(7, 7, 7, 7).unwrap();
        assert_eq!(p.subarrays.len(), 64);
        assert!(p.subarrays.iter().all(|s| s.elements.len() == 64));
        assert_eq!(method1_subarrays(3, 2, 6, 4).unwrap().subarrays.len(), 1);
        let small = method1_subarrays(1, 1, 1, 1).unwrap();
        assert_eq!(small.subarrays.len(), 4);
        assert_eq!(small.dim(), 4);
        assert!(method1_subarrays(2, 2, 5, 1).is_err());
        assert!(method1_subarrays(2, 2, 0, 1).is_err());
    }

    #[test]
    fn method2_counts() {
        for l_r in 2..=9 {
            for l_p in 1..l_r {
                let plan = method2_subarrays(l_r, l_p).unwrap();
                let want = (3 * l_p * l_p + 3 * l_p + 1) as usize;
                assert!(plan.subarrays.iter().all(|s| s.elements.len() == want));
                assert!(plan
                    .required_lags()
                    .iter()
                    .all(|&u| in_hexagon(u, l_r)));
                let centers = hexagon([0, 0], l_r - l_p).len();
                assert_eq!(plan.subarrays.len(), centers);
            }
        }
        assert_eq!(method2_subarrays(7, 3).unwrap().subarrays.len(), 61);
        assert!(method2_subarrays(3, 3).is_err());
    }

    #[test]
    fn method2_reference_vertices() {
        let (l_r, l_p) = (7, 3);
        let plan = method2_subarrays(l_r, l_p).unwrap();
        let s: BTreeSet<Point> = plan.reference().iter().copied().collect();
        let verts = [
            [-l_r, 0],
            [-l_r, l_p],
            [l_p - l_r, l_p],
            [2 * l_p - l_r, 0],
            [2 * l_p - l_r, -l_p],
            [l_p - l_r, -l_p],
        ];
        assert!(verts.iter().all(|v| s.contains(v)));
        let xs: Vec<i64> = s.iter().map(|u| u[0]).collect();
        assert_eq!(*xs.iter().min().unwrap(), -l_r);
        assert_eq!(*xs.iter().max().unwrap(), 2 * l_p - l_r);
    }

    #[test]
    fn selection_excludes_right_edge() {
        let [x1, x2, y1, y2] = selection_matrices(7, 3).unwrap();
        let excluded: Vec<usize> = (1..=37).filter(|n| !x1.selected_numbers().contains(n)).collect();
        assert_eq!(excluded, vec![22, 28, 33, 34, 35, 36, 37]);
        assert_eq!(x1.rows, 30);
        assert_eq!(x2.rows, 30);
        assert_eq!(y1.rows, y2.rows);
        for m in [&x1, &x2, &y1, &y2] {
            let d = m.to_dense();
            for r in 0..m.rows {
                assert_eq!(d.row(r).sum(), 1.0);
            }
        }
        let [x1, ..] = selection_matrices(3, 1).unwrap();
        assert_eq!(x1.rows, 4);
    }

    #[test]
    fn single_subarray_outer_product() {
        let plan = method1_subarrays(1, 1, 2, 2).unwrap();
        assert_eq!(plan.subarrays.len(), 1);
        let signal: BTreeMap<Point, Complex64> = plan.subarrays[0]
            .elements
            .iter()
            .enumerate()
            .map(|(i, &d)| (d, Complex64::new(i as f64, 1.0 - i as f64)))
            .collect();
        let r = smoothed_covariance(&plan, &signal).unwrap();
        let v = DMatrix::from_iterator(9, 1, plan.subarrays[0].elements.iter().map(|d| signal[d]));
        assert!((r - &v * v.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn missing_lag_is_named() {
        let plan = method1_subarrays(1, 1, 1, 1).unwrap();
        let signal = BTreeMap::from([([0, 0], Complex64::new(1.0, 0.0))]);
        match smoothed_covariance(&plan, &signal) {
            Err(Error::InvalidInput(m)) => assert!(m.contains("lag (-1, -1)"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identifiability_guard() {
        let plan = method1_subarrays(7, 7, 7, 7).unwrap();
        assert!(plan.ensure_identifiable(6).is_ok());
        assert!(plan.ensure_identifiable(64).is_err());
        assert!(plan.ensure_identifiable(0).is_err());
    }
}
