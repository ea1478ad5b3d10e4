//! Release-gate oracle suites run by the `verify` command.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::coarray::{difference_coarray, hole_free_check};
use crate::designs::{build, q_tuple_crt, q_tuple_expected_count, DesignKind};
use crate::error::Result;
use crate::lattice::{scaled_region, Convention};
use crate::rings::{QuadInt, RingSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(suite: &'static str, name: String, passed: bool, detail: String) -> Self {
        Check { suite, name, passed, detail }
    }
}

/// Prime-indexed families and the primes they are checked at.
pub const FAMILY_PRIMES: [(DesignKind, RingSpec, &[u64]); 6] = [
    (DesignKind::Hscrt, RingSpec::GAUSSIAN, &[5, 13, 17]),
    (DesignKind::Hscrt, RingSpec::EISENSTEIN, &[7, 13]),
    (DesignKind::TArray, RingSpec::GAUSSIAN, &[5, 13, 17]),
    (DesignKind::Spinner, RingSpec::EISENSTEIN, &[7, 13]),
    (DesignKind::Z2Cross, RingSpec::GAUSSIAN, &[5, 13, 17]),
    (DesignKind::A2Cross, RingSpec::EISENSTEIN, &[7, 13]),
];

/// Every ordered pair of nonzero elements with coordinates in `[−r, r]²`:
/// the two GCD conditions agree and match the Smith-form oracle.
pub fn coprimality_sweep(ring: RingSpec, r: i64) -> Result<Check> {
    let elems: Vec<QuadInt> = (-r..=r)
        .flat_map(|a| (-r..=r).map(move |b| QuadInt::new(a, b)))
        .filter(|m| !m.is_zero())
        .collect();
    let mismatches: Vec<(QuadInt, QuadInt)> = elems
        .par_iter()
        .map(|&m| -> Result<Vec<(QuadInt, QuadInt)>> {
            let mut bad = Vec::new();
            for &n in &elems {
                let (c1, c2) = ring.coprime_conditions(m, n)?;
                if c1 != c2 || c1 != ring.coprime_oracle(m, n)? || ring.is_coprime(m, n)? != c1 {
                    bad.push((m, n));
                }
            }
            Ok(bad)
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    let pairs = elems.len() * elems.len();
    let detail = match mismatches.first() {
        None => format!("{pairs} pairs agree"),
        Some((m, n)) => format!("{} of {pairs} pairs disagree, first ({m}, {n})", mismatches.len()),
    };
    Ok(Check::new(
        "coprimality",
        format!("{ring} [-{r},{r}]^2"),
        mismatches.is_empty(),
        detail,
    ))
}

pub fn q_tuple_example() -> Result<Check> {
    let g = RingSpec::GAUSSIAN;
    let gens = [QuadInt::new(-1, -2), QuadInt::new(-1, 2), QuadInt::new(-1, 4)];
    let arr = q_tuple_crt(g, &gens)?;
    let norm = g.norm(g.product(&gens)?)?;
    let expected = q_tuple_expected_count(g, &gens)?;
    Ok(Check::new(
        "counts",
        "q_tuple {-1-2i, -1+2i, -1+4i}".into(),
        arr.len() == 169 && expected == 169 && norm == 425,
        format!("{} sensors (inclusion-exclusion {expected}), N = {norm}", arr.len()),
    ))
}

pub fn family_counts() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (kind, ring, primes) in FAMILY_PRIMES {
        for &p in primes {
            let arr = build(kind, ring, p)?;
            let want = kind.expected_count(p).expect("prime family");
            out.push(Check::new(
                "counts",
                format!("{kind} {ring} p={p}"),
                arr.len() as u64 == want,
                format!("{} sensors, closed form {want}", arr.len()),
            ));
        }
    }
    Ok(out)
}

/// Zero holes in `Λ ∩ V̄(pΛ)`, and the support there equals the HSCRT one.
pub fn hole_free_suite() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (kind, ring, primes) in FAMILY_PRIMES {
        for &p in primes {
            let c = difference_coarray(&build(kind, ring, p)?);
            let holes = hole_free_check(&c, p, ring)?;
            let region: BTreeSet<_> = scaled_region(ring, p as i64, Convention::Closed)?
                .into_iter()
                .collect();
            let reference = difference_coarray(&build(DesignKind::Hscrt, ring, p)?);
            let restricted: BTreeSet<_> = c.support().intersection(&region).copied().collect();
            let hscrt_restricted: BTreeSet<_> =
                reference.support().intersection(&region).copied().collect();
            let same = restricted == hscrt_restricted;
            out.push(Check::new(
                "hole_free",
                format!("{kind} {ring} p={p}"),
                holes.hole_free && same,
                format!(
                    "{} holes in {} region points; support {} HSCRT support",
                    holes.missing.len(),
                    region.len(),
                    if same { "equals" } else { "differs from" }
                ),
            ));
        }
    }
    Ok(out)
}

pub fn run_all() -> Result<Vec<Check>> {
    let mut out = vec![
        coprimality_sweep(RingSpec::GAUSSIAN, 5)?,
        coprimality_sweep(RingSpec::EISENSTEIN, 5)?,
        q_tuple_example()?,
    ];
    out.extend(family_counts()?);
    out.extend(hole_free_suite()?);
    Ok(out)
}
