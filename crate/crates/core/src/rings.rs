//! Quadratic integer rings `Z[q]` with `q² + B q + C = 0`.
//!
//! Elements are stored as exact coordinate pairs `(a, b)` meaning `a + b q`.
//! Every operation that can grow its operands (norms, products, GCD inputs)
//! runs in checked `i128` and reports [`Error::Overflow`] instead of wrapping.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_integer::{Integer, Roots};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smith;

/// Integer coordinate pair in the ring-lattice basis `{1, q}`.
pub type Point = [i64; 2];

/// The ring `Z[q]` defined by the minimal polynomial `X² + B X + C`.
/// Serialises as its name (`"gaussian"`, `"eisenstein"` or `"B,C"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RingSpec {
    b: i64,
    c: i64,
    disc: i64,
}

impl TryFrom<String> for RingSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RingSpec> for String {
    fn from(r: RingSpec) -> Self {
        r.to_string()
    }
}

/// Element `a + b q`; the ring is supplied by context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadInt {
    pub a: i64,
    pub b: i64,
}

impl QuadInt {
    pub const ZERO: QuadInt = QuadInt { a: 0, b: 0 };
    pub const ONE: QuadInt = QuadInt { a: 1, b: 0 };
    pub const Q: QuadInt = QuadInt { a: 0, b: 1 };

    pub const fn new(a: i64, b: i64) -> Self {
        QuadInt { a, b }
    }

    pub const fn coords(self) -> Point {
        [self.a, self.b]
    }

    pub fn is_zero(self) -> bool {
        self.a == 0 && self.b == 0
    }
}

impl From<Point> for QuadInt {
    fn from(p: Point) -> Self {
        QuadInt { a: p[0], b: p[1] }
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a, self.b) {
            (a, 0) => write!(f, "{a}"),
            (0, 1) => write!(f, "q"),
            (0, -1) => write!(f, "-q"),
            (0, b) => write!(f, "{b}q"),
            (a, 1) => write!(f, "{a}+q"),
            (a, -1) => write!(f, "{a}-q"),
            (a, b) if b > 0 => write!(f, "{a}+{b}q"),
            (a, b) => write!(f, "{a}{b}q"),
        }
    }
}

/// Accepts `"a,b"`, `"(a,b)"` or additive forms such as `"-1+2i"`, `"3-2w"`,
/// `"q"`. Any of `i`, `w`, `ω`, `q` denotes the ring generator.
impl FromStr for QuadInt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let t = t.trim_start_matches('(').trim_end_matches(')');
        if t.is_empty() {
            return Err(Error::input("empty quadratic integer"));
        }
        let bad = || Error::input(format!("cannot parse quadratic integer {s:?}"));
        if let Some((x, y)) = t.split_once(',') {
            return Ok(QuadInt {
                a: x.parse().map_err(|_| bad())?,
                b: y.parse().map_err(|_| bad())?,
            });
        }

        let mut terms = Vec::new();
        let mut start = 0;
        for (i, ch) in t.char_indices() {
            if i > 0 && (ch == '+' || ch == '-') {
                terms.push(&t[start..i]);
                start = i;
            }
        }
        terms.push(&t[start..]);

        let (mut a, mut b) = (0i64, 0i64);
        for term in terms {
            let unit = term
                .strip_suffix(['i', 'w', 'q', 'ω'])
                .map(|coef| match coef {
                    "" | "+" => Ok(1),
                    "-" => Ok(-1),
                    c => c.trim_start_matches('+').trim_end_matches('*').parse(),
                });
            match unit {
                Some(coef) => b = b.checked_add(coef.map_err(|_| bad())?).ok_or_else(bad)?,
                None => {
                    let v: i64 = term.trim_start_matches('+').parse().map_err(|_| bad())?;
                    a = a.checked_add(v).ok_or_else(bad)?;
                }
            }
        }
        Ok(QuadInt { a, b })
    }
}

fn narrow(x: i128, what: &'static str) -> Result<i64> {
    i64::try_from(x).map_err(|_| Error::Overflow(what))
}

fn gcd3(x: i128, y: i128, z: i128) -> i128 {
    x.gcd(&y).gcd(&z)
}

impl RingSpec {
    pub const GAUSSIAN: RingSpec = RingSpec { b: 0, c: 1, disc: -4 };
    pub const EISENSTEIN: RingSpec = RingSpec { b: -1, c: 1, disc: -3 };

    /// Ring for `X² + bX + c`; a zero discriminant is rejected.
    pub fn new(b: i64, c: i64) -> Result<Self> {
        let disc = (b as i128) * (b as i128) - 4 * (c as i128);
        if disc == 0 {
            return Err(Error::UnsupportedRing(format!(
                "X^2{b:+}X{c:+} has a repeated root"
            )));
        }
        Ok(RingSpec {
            b,
            c,
            disc: narrow(disc, "discriminant")?,
        })
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    pub fn c(&self) -> i64 {
        self.c
    }

    /// `B² − 4C`.
    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn is_imaginary(&self) -> bool {
        self.disc < 0
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    /// `a² − B a b + C b²`.
    pub fn norm(&self, m: QuadInt) -> Result<i64> {
        let (a, b) = (m.a as i128, m.b as i128);
        let (bb, cc) = (self.b as i128, self.c as i128);
        let n = a
            .checked_mul(a)
            .and_then(|aa| {
                let bab = bb.checked_mul(a)?.checked_mul(b)?;
                let cbb = cc.checked_mul(b)?.checked_mul(b)?;
                aa.checked_sub(bab)?.checked_add(cbb)
            })
            .ok_or(Error::Overflow("norm"))?;
        narrow(n, "norm")
    }

    pub fn conjugate(&self, m: QuadInt) -> Result<QuadInt> {
        let a = (m.a as i128) - (self.b as i128) * (m.b as i128);
        Ok(QuadInt {
            a: narrow(a, "conjugate")?,
            b: m.b.checked_neg().ok_or(Error::Overflow("conjugate"))?,
        })
    }

    pub fn multiply(&self, m: QuadInt, n: QuadInt) -> Result<QuadInt> {
        let (a1, b1, a2, b2) = (m.a as i128, m.b as i128, n.a as i128, n.b as i128);
        let (bb, cc) = (self.b as i128, self.c as i128);
        let ov = || Error::Overflow("multiply");
        let b1b2 = b1.checked_mul(b2).ok_or_else(ov)?;
        let re = a1
            .checked_mul(a2)
            .and_then(|x| x.checked_sub(cc.checked_mul(b1b2)?))
            .ok_or_else(ov)?;
        let im = a1
            .checked_mul(b2)
            .and_then(|x| x.checked_add(a2.checked_mul(b1)?))
            .and_then(|x| x.checked_sub(bb.checked_mul(b1b2)?))
            .ok_or_else(ov)?;
        Ok(QuadInt {
            a: narrow(re, "multiply")?,
            b: narrow(im, "multiply")?,
        })
    }

    /// Product of a list; the empty product is 1.
    pub fn product(&self, ms: &[QuadInt]) -> Result<QuadInt> {
        ms.iter()
            .try_fold(QuadInt::ONE, |acc, &m| self.multiply(acc, m))
    }

    /// Multiplication-by-`m` in the basis `{1, q}`: columns are `m` and `m q`.
    pub fn matrix_rep(&self, m: QuadInt) -> Result<[[i64; 2]; 2]> {
        let mq = self.multiply(m, QuadInt::Q)?;
        Ok([[m.a, mq.a], [m.b, mq.b]])
    }

    /// Both GCD conditions of the coprimality criterion, in order
    /// (cross-coordinate form, conjugate-pairing form).
    pub fn coprime_conditions(&self, m: QuadInt, n: QuadInt) -> Result<(bool, bool)> {
        if m.is_zero() || n.is_zero() {
            return Err(Error::arg("coprimality of zero is undefined"));
        }
        let nm = self.norm(m)? as i128;
        let nn = self.norm(n)? as i128;
        let (m1, m2, n1, n2) = (m.a as i128, m.b as i128, n.a as i128, n.b as i128);
        let (bb, cc) = (self.b as i128, self.c as i128);
        let ov = || Error::Overflow("coprimality test");

        let cross = m1
            .checked_mul(n2)
            .and_then(|x| x.checked_sub(m2.checked_mul(n1)?))
            .ok_or_else(ov)?;
        let pairing = m1
            .checked_mul(n1)
            .and_then(|x| x.checked_sub(bb.checked_mul(m1)?.checked_mul(n2)?))
            .and_then(|x| x.checked_add(cc.checked_mul(m2)?.checked_mul(n2)?))
            .ok_or_else(ov)?;
        Ok((gcd3(nm, nn, cross) == 1, gcd3(nm, nn, pairing) == 1))
    }

    pub fn is_coprime(&self, m: QuadInt, n: QuadInt) -> Result<bool> {
        let (first, second) = self.coprime_conditions(m, n)?;
        // the pairing form is only equivalent in the two named rings
        if *self == RingSpec::GAUSSIAN || *self == RingSpec::EISENSTEIN {
            debug_assert_eq!(
                first, second,
                "coprimality conditions disagree for {m}, {n} in {self}"
            );
        }
        Ok(first)
    }

    /// Independent check: `⟨m, n⟩` is the whole ring iff the stacked matrix
    /// representations have unit invariant factors.
    pub fn coprime_oracle(&self, m: QuadInt, n: QuadInt) -> Result<bool> {
        if m.is_zero() || n.is_zero() {
            return Err(Error::arg("coprimality of zero is undefined"));
        }
        let rm = self.matrix_rep(m)?;
        let rn = self.matrix_rep(n)?;
        let stacked: Vec<Vec<i64>> = rm.iter().chain(rn.iter()).map(|r| r.to_vec()).collect();
        Ok(smith::invariant_factors(&stacked)?.iter().all(|&d| d == 1))
    }

    /// Canonical conjugate pair `(m, m̄)` with `N(m) = p`.
    ///
    /// In imaginary rings the preferred representative is `x + y √disc` with
    /// `x, y > 0`, smallest `y` first; otherwise the lexicographically smallest
    /// solution with `a > 0` among `|a|, |b| ≤ p`.
    pub fn split_prime(&self, p: u64) -> Result<(QuadInt, QuadInt)> {
        let unsupported = |reason: &str| Error::UnsupportedPrime {
            p,
            reason: reason.to_string(),
        };
        if !is_prime(p) {
            return Err(unsupported("not a rational prime"));
        }
        let pi = i64::try_from(p).map_err(|_| unsupported("too large"))?;

        let m = self
            .split_by_disc_form(pi)?
            .or(self.split_by_search(pi)?)
            .ok_or_else(|| unsupported("no element of this norm (inert prime)"))?;
        let mbar = self.conjugate(m)?;
        if !self.is_coprime(m, mbar)? {
            return Err(unsupported("conjugate factors are not coprime (ramified prime)"));
        }
        Ok((m, mbar))
    }

    fn split_by_disc_form(&self, p: i64) -> Result<Option<QuadInt>> {
        if self.disc >= 0 {
            return Ok(None);
        }
        // x + y(2q + B) has coordinates (x + B y, 2y) and norm x² − disc·y²
        let d = -(self.disc as i128);
        let p = p as i128;
        let mut y: i128 = 1;
        while d * y * y < p {
            let rem = p - d * y * y;
            let x = rem.sqrt();
            if x > 0 && x * x == rem {
                let m = QuadInt {
                    a: narrow(x + (self.b as i128) * y, "split_prime")?,
                    b: narrow(2 * y, "split_prime")?,
                };
                if self.norm(m)? == p as i64 {
                    return Ok(Some(m));
                }
            }
            y += 1;
        }
        Ok(None)
    }

    fn split_by_search(&self, p: i64) -> Result<Option<QuadInt>> {
        for a in 1..=p {
            for b in -p..=p {
                let m = QuadInt { a, b };
                if self.norm(m)? == p {
                    return Ok(Some(m));
                }
            }
        }
        Ok(None)
    }

    /// Real generator `G` of the embedded ring lattice (columns are `1` and `q`).
    pub fn embedding_generator(&self) -> Result<Matrix2<f64>> {
        if self.disc >= 0 {
            return Err(Error::UnsupportedRing(format!(
                "{self} is not imaginary quadratic (disc = {})",
                self.disc
            )));
        }
        let half_b = -(self.b as f64) / 2.0;
        let h = ((-self.disc) as f64).sqrt() / 2.0;
        Ok(Matrix2::new(1.0, half_b, 0.0, h))
    }

    /// Physical (unit-pitch) coordinates `G u`.
    pub fn embed(&self, u: Point) -> Result<[f64; 2]> {
        let g = self.embedding_generator()?;
        let (x, y) = (u[0] as f64, u[1] as f64);
        Ok([g[(0, 0)] * x + g[(0, 1)] * y, g[(1, 0)] * x + g[(1, 1)] * y])
    }

    /// Twice the embedded inner product `2⟨G u, G v⟩`, always an integer.
    pub fn ip2(&self, u: Point, v: Point) -> i128 {
        let (u1, u2, v1, v2) = (u[0] as i128, u[1] as i128, v[0] as i128, v[1] as i128);
        2 * u1 * v1 - (self.b as i128) * (u1 * v2 + u2 * v1) + 2 * (self.c as i128) * u2 * v2
    }
}

impl fmt::Display for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RingSpec::GAUSSIAN => f.write_str("gaussian"),
            RingSpec::EISENSTEIN => f.write_str("eisenstein"),
            RingSpec { b, c, .. } => write!(f, "{b},{c}"),
        }
    }
}

impl FromStr for RingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "z2" | "z^2" => Ok(RingSpec::GAUSSIAN),
            "eisenstein" | "a2" => Ok(RingSpec::EISENSTEIN),
            other => {
                let (b, c) = other
                    .trim_matches(|c| c == '(' || c == ')')
                    .split_once(',')
                    .ok_or_else(|| Error::input(format!("unknown ring {s:?}")))?;
                let parse = |x: &str| {
                    x.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::input(format!("unknown ring {s:?}")))
                };
                RingSpec::new(parse(b)?, parse(c)?)
            }
        }
    }
}

/// Trial-division primality.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}
