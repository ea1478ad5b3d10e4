//! Sublattices of a ring lattice and exact Voronoi-cell membership.
//!
//! All distances are compared through [`RingSpec::ip2`], twice the embedded
//! inner product, which is integral for every supported ring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rings::{Point, QuadInt, RingSpec};

/// Points `M k` for `k ∈ Z²`; the columns of `basis` are the generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubLattice {
    pub basis: [[i64; 2]; 2],
    pub ring: RingSpec,
}

impl SubLattice {
    pub fn new(basis: [[i64; 2]; 2], ring: RingSpec) -> Result<Self> {
        let s = SubLattice { basis, ring };
        if s.det() == 0 {
            return Err(Error::arg("sublattice basis is singular"));
        }
        Ok(s)
    }

    /// The whole ring lattice `Λ`.
    pub fn full(ring: RingSpec) -> Self {
        SubLattice {
            basis: [[1, 0], [0, 1]],
            ring,
        }
    }

    /// The principal ideal lattice `σ(⟨m⟩)`.
    pub fn principal(ring: RingSpec, m: QuadInt) -> Result<Self> {
        SubLattice::new(ring.matrix_rep(m)?, ring)
    }

    /// `k Λ`.
    pub fn scaled(ring: RingSpec, k: i64) -> Result<Self> {
        SubLattice::principal(ring, QuadInt::new(k, 0))
    }

    pub fn det(&self) -> i128 {
        let m = &self.basis;
        (m[0][0] as i128) * (m[1][1] as i128) - (m[0][1] as i128) * (m[1][0] as i128)
    }

    /// Index in the ring lattice.
    pub fn index(&self) -> u128 {
        self.det().unsigned_abs()
    }

    pub fn column(&self, j: usize) -> Point {
        [self.basis[0][j], self.basis[1][j]]
    }

    pub fn point(&self, k: [i64; 2]) -> Point {
        let m = &self.basis;
        [
            m[0][0] * k[0] + m[0][1] * k[1],
            m[1][0] * k[0] + m[1][1] * k[1],
        ]
    }

    pub fn contains(&self, u: Point) -> bool {
        let m = &self.basis;
        let det = self.det();
        let (u0, u1) = (u[0] as i128, u[1] as i128);
        let k0 = (m[1][1] as i128) * u0 - (m[0][1] as i128) * u1;
        let k1 = -(m[1][0] as i128) * u0 + (m[0][0] as i128) * u1;
        k0 % det == 0 && k1 % det == 0
    }

    /// Lagrange-Gauss reduced basis `(b1, b2)` with `|b1| ≤ |b2|`.
    pub fn reduced_basis(&self) -> (Point, Point) {
        let r = self.ring;
        let (mut b1, mut b2) = (self.column(0), self.column(1));
        loop {
            if r.ip2(b2, b2) < r.ip2(b1, b1) {
                std::mem::swap(&mut b1, &mut b2);
            }
            let num = r.ip2(b1, b2);
            let den = r.ip2(b1, b1);
            let mu = div_round(num, den) as i64;
            if mu == 0 {
                return (b1, b2);
            }
            b2 = [b2[0] - mu * b1[0], b2[1] - mu * b1[1]];
        }
    }
}

fn div_round(n: i128, d: i128) -> i128 {
    // nearest integer, halves toward zero keep the loop terminating
    let q = n.div_euclid(d);
    let r = n.rem_euclid(d);
    if 2 * r > d {
        q + 1
    } else {
        q
    }
}

/// Boundary handling of a Voronoi cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    Closed,
    Open,
    HalfOpen,
}

/// Voronoi cell of a center lattice about the origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSpec {
    pub center_lattice: SubLattice,
    pub convention: Convention,
    relevant: Vec<Point>,
}

impl CellSpec {
    pub fn new(center_lattice: SubLattice, convention: Convention) -> Self {
        let relevant = relevant_vectors(&center_lattice);
        CellSpec {
            center_lattice,
            convention,
            relevant,
        }
    }

    /// `V(kΛ)` with the given convention.
    pub fn scaled(ring: RingSpec, k: i64, convention: Convention) -> Result<Self> {
        Ok(CellSpec::new(SubLattice::scaled(ring, k)?, convention))
    }

    pub fn relevant(&self) -> &[Point] {
        &self.relevant
    }

    pub fn contains(&self, u: Point) -> bool {
        voronoi_membership(self, u)
    }

    /// Squared circumradius bound in `ip2` units.
    fn radius_ip2(&self) -> i128 {
        let r = self.center_lattice.ring;
        let (b1, b2) = self.center_lattice.reduced_basis();
        (r.ip2(b1, b1) + r.ip2(b2, b2)) / 4 + 1
    }
}

fn lex_negative(v: Point) -> bool {
    v[0] < 0 || (v[0] == 0 && v[1] < 0)
}

/// Vectors whose bisectors bound the Voronoi cell: `±b1`, `±b2` of a reduced
/// basis and the shorter of `±(b1 ± b2)` (both when they tie).
pub fn relevant_vectors(center: &SubLattice) -> Vec<Point> {
    let r = center.ring;
    let (b1, b2) = center.reduced_basis();
    let sum = [b1[0] + b2[0], b1[1] + b2[1]];
    let diff = [b1[0] - b2[0], b1[1] - b2[1]];
    let mut base = vec![b1, b2];
    match r.ip2(sum, sum).cmp(&r.ip2(diff, diff)) {
        std::cmp::Ordering::Less => base.push(sum),
        std::cmp::Ordering::Greater => base.push(diff),
        std::cmp::Ordering::Equal => base.extend([sum, diff]),
    }
    let mut out: Vec<Point> = base
        .into_iter()
        .flat_map(|v| [v, [-v[0], -v[1]]])
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Exact test of `u` against every relevant bisector of the cell.
pub fn voronoi_membership(cell: &CellSpec, u: Point) -> bool {
    let r = cell.center_lattice.ring;
    let mut all_ties_negative = true;
    let mut tied = false;
    for &v in &cell.relevant {
        let lhs = 2 * r.ip2(u, v);
        let rhs = r.ip2(v, v);
        if lhs > rhs {
            return false;
        }
        if lhs == rhs {
            tied = true;
            all_ties_negative &= lex_negative(v);
        }
    }
    match cell.convention {
        _ if !tied => true,
        Convention::Closed => true,
        Convention::Open => false,
        Convention::HalfOpen => all_ties_negative,
    }
}

/// All points of `sub` inside `cell`, sorted lexicographically.
pub fn enumerate_points(sub: &SubLattice, cell: &CellSpec) -> Vec<Point> {
    let r = sub.ring;
    let (c1, c2) = (sub.column(0), sub.column(1));
    let g11 = r.ip2(c1, c1) as f64;
    let g12 = r.ip2(c1, c2) as f64;
    let g22 = r.ip2(c2, c2) as f64;
    let det = g11 * g22 - g12 * g12;
    let rad = cell.radius_ip2() as f64;
    // extent of the ellipsoid k^T Gram k <= R^2 along each axis
    let k0 = ((rad * g22 / det).sqrt()).ceil() as i64 + 1;
    let k1 = ((rad * g11 / det).sqrt()).ceil() as i64 + 1;

    let mut out = Vec::new();
    for i in -k0..=k0 {
        for j in -k1..=k1 {
            let u = sub.point([i, j]);
            if voronoi_membership(cell, u) {
                out.push(u);
            }
        }
    }
    out.sort_unstable();
    out
}

/// `Λ ∩ V(pΛ)` under the given convention.
pub fn scaled_region(ring: RingSpec, p: i64, convention: Convention) -> Result<Vec<Point>> {
    let cell = CellSpec::scaled(ring, p, convention)?;
    Ok(enumerate_points(&SubLattice::full(ring), &cell))
}

/// Point reflection `t − u` (reflection through the midpoint `t/2`).
pub fn reflect(u: Point, t: Point) -> Point {
    [t[0] - u[0], t[1] - u[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    const G: RingSpec = RingSpec::GAUSSIAN;
    const E: RingSpec = RingSpec::EISENSTEIN;

    #[test]
    fn square_cell_membership() {
        let c = CellSpec::scaled(G, 5, Convention::Closed).unwrap();
        assert!(c.contains([2, 1]));
        assert!(c.contains([0, 0]));
        assert!(!c.contains([3, 0]));
        let open = CellSpec::scaled(G, 10, Convention::Open).unwrap();
        assert!(!open.contains([5, 0]));
        assert!(open.contains([4, 4]));
        let closed = CellSpec::scaled(G, 10, Convention::Closed).unwrap();
        assert!(closed.contains([5, 5]));
    }

    #[test]
    fn relevant_vector_sets() {
        let five = relevant_vectors(&SubLattice::scaled(G, 5).unwrap());
        let mut want = vec![
            [5, 0], [-5, 0], [0, 5], [0, -5], [5, 5], [5, -5], [-5, 5], [-5, -5],
        ];
        want.sort();
        assert_eq!(five, want);

        let hex = relevant_vectors(&SubLattice::scaled(E, 13).unwrap());
        assert_eq!(hex.len(), 6);
        assert!(hex.iter().all(|&v| E.ip2(v, v) == 2 * 169));

        assert_eq!(relevant_vectors(&SubLattice::full(G)).len(), 8);
    }

    #[test]
    fn relevant_vectors_of_ideal_are_rotated_units() {
        let m = QuadInt::new(3, -4);
        let sub = SubLattice::principal(E, m).unwrap();
        let got: BTreeSet<Point> = relevant_vectors(&sub).into_iter().collect();
        let units = [[1, 0], [0, 1], [-1, 1], [-1, 0], [0, -1], [1, -1]];
        let want: BTreeSet<Point> = units
            .iter()
            .map(|&u| E.multiply(m, u.into()).unwrap().coords())
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn q_tuple_cell_count() {
        let gens = [QuadInt::new(-1, -2), QuadInt::new(-1, 2), QuadInt::new(-1, 4)];
        let big = G.product(&gens).unwrap();
        assert_eq!(G.norm(big).unwrap(), 425);
        let cell = CellSpec::new(SubLattice::principal(G, big).unwrap(), Convention::HalfOpen);
        let sub = SubLattice::principal(G, gens[0]).unwrap();
        assert_eq!(enumerate_points(&sub, &cell).len(), 85);
    }

    #[test]
    fn half_open_counts_are_indices() {
        for ring in [G, E] {
            for p in [5, 13, 7] {
                let pts = scaled_region(ring, p, Convention::HalfOpen).unwrap();
                assert_eq!(pts.len() as i64, p * p, "{ring} {p}");
            }
        }
        let sub = SubLattice::principal(E, QuadInt::new(2, 1)).unwrap();
        let cell = CellSpec::new(sub.clone(), Convention::HalfOpen);
        assert_eq!(enumerate_points(&sub, &cell), vec![[0, 0]]);
    }

    #[test]
    fn closed_region_sizes() {
        assert_eq!(scaled_region(G, 5, Convention::Closed).unwrap().len(), 25);
        assert_eq!(scaled_region(E, 7, Convention::Closed).unwrap().len(), 55);
        assert_eq!(scaled_region(E, 13, Convention::Closed).unwrap().len(), 181);
    }

    #[test]
    fn cosets_partition_double_cell() {
        for ring in [G, E] {
            for p in [5i64, 13] {
                let small = CellSpec::scaled(ring, p, Convention::HalfOpen).unwrap();
                let big = CellSpec::scaled(ring, 2 * p, Convention::HalfOpen).unwrap();
                let coarse = SubLattice::scaled(ring, p).unwrap();
                let reps = enumerate_points(&coarse, &big);
                assert_eq!(reps.len(), 4);
                let mut wraps = vec![[0, 0]];
                wraps.extend_from_slice(big.relevant());

                for u in scaled_region(ring, 2 * p, Convention::HalfOpen).unwrap() {
                    let hits = reps
                        .iter()
                        .flat_map(|c| wraps.iter().map(move |w| (c, w)))
                        .filter(|(c, w)| small.contains([u[0] - c[0] - w[0], u[1] - c[1] - w[1]]))
                        .count();
                    assert_eq!(hits, 1, "{ring} p={p} u={u:?}");
                }
            }
        }
    }

    #[test]
    fn reflection() {
        assert_eq!(reflect([3, 1], [0, 13]), [-3, 12]);
        assert_eq!(reflect([1, 3], [2, 6]), [1, 3]);
    }

    #[test]
    fn sublattice_membership() {
        let s = SubLattice::principal(G, QuadInt::new(3, 2)).unwrap();
        assert_eq!(s.index(), 13);
        assert!(s.contains([3, 2]));
        assert!(s.contains([-2, 3]));
        assert!(!s.contains([1, 0]));
        assert!(SubLattice::new([[1, 2], [2, 4]], G).is_err());
    }

    proptest! {
        #[test]
        fn closed_cells_are_centrosymmetric(
            ring in prop_oneof![Just(G), Just(E)],
            k in 1i64..20,
            u in (-30i64..30, -30i64..30),
        ) {
            let cell = CellSpec::scaled(ring, k, Convention::Closed).unwrap();
            let u = [u.0, u.1];
            prop_assert_eq!(cell.contains(u), cell.contains([-u[0], -u[1]]));
        }

        #[test]
        fn reflect_is_involution(u in (-99i64..99, -99i64..99), t in (-99i64..99, -99i64..99)) {
            let (u, t) = ([u.0, u.1], [t.0, t.1]);
            prop_assert_eq!(reflect(reflect(u, t), t), u);
        }

        #[test]
        fn open_within_half_open_within_closed(
            ring in prop_oneof![Just(G), Just(E)],
            k in 1i64..12,
            u in (-15i64..15, -15i64..15),
        ) {
            let u = [u.0, u.1];
            let sub = SubLattice::scaled(ring, k).unwrap();
            let o = CellSpec::new(sub.clone(), Convention::Open).contains(u);
            let h = CellSpec::new(sub.clone(), Convention::HalfOpen).contains(u);
            let c = CellSpec::new(sub, Convention::Closed).contains(u);
            prop_assert!(!o || h);
            prop_assert!(!h || c);
        }
    }
}
