//! Smith normal form of small integer matrices.
//!
//! Used as an independent coprimality check: two quadratic integers are
//! coprime exactly when the lattice spanned by their matrix representations
//! is the whole ring lattice, i.e. every invariant factor equals one.

use crate::error::{Error, Result};

/// Invariant factors `d1 | d2 | ...` of `rows` (non-negative, length
/// `min(nrows, ncols)`; trailing zeros mark rank deficiency).
pub fn invariant_factors(rows: &[Vec<i64>]) -> Result<Vec<i64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::arg("ragged matrix"));
    }
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();

    let rank_bound = nrows.min(ncols);
    for t in 0..rank_bound {
        loop {
            // smallest non-zero |entry| in the trailing block becomes the pivot
            let Some((pi, pj)) = smallest_nonzero(&a, t) else {
                return finish(&a, rank_bound);
            };
            a.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }

            let pivot = a[t][t];
            let mut clean = true;
            for i in t + 1..nrows {
                let q = a[i][t].div_euclid(pivot);
                if q != 0 {
                    for j in t..ncols {
                        a[i][j] = checked_sub_mul(a[i][j], q, a[t][j])?;
                    }
                }
                clean &= a[i][t] == 0;
            }
            for j in t + 1..ncols {
                let q = a[t][j].div_euclid(pivot);
                if q != 0 {
                    for i in t..nrows {
                        a[i][j] = checked_sub_mul(a[i][j], q, a[i][t])?;
                    }
                }
                clean &= a[t][j] == 0;
            }
            if !clean {
                continue;
            }

            // pivot must divide the whole trailing block
            let offender = (t + 1..nrows)
                .flat_map(|i| (t + 1..ncols).map(move |j| (i, j)))
                .find(|&(i, j)| a[i][j] % pivot != 0);
            match offender {
                Some((i, _)) => {
                    for j in t..ncols {
                        a[t][j] = a[t][j]
                            .checked_add(a[i][j])
                            .ok_or(Error::Overflow("smith normal form"))?;
                    }
                }
                None => break,
            }
        }
    }
    finish(&a, rank_bound)
}

fn smallest_nonzero(a: &[Vec<i128>], t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, i128)> = None;
    for (i, row) in a.iter().enumerate().skip(t) {
        for (j, &v) in row.iter().enumerate().skip(t) {
            if v != 0 && best.is_none_or(|(_, _, b)| v.abs() < b) {
                best = Some((i, j, v.abs()));
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

fn checked_sub_mul(x: i128, q: i128, y: i128) -> Result<i128> {
    q.checked_mul(y)
        .and_then(|qy| x.checked_sub(qy))
        .ok_or(Error::Overflow("smith normal form"))
}

fn finish(a: &[Vec<i128>], rank_bound: usize) -> Result<Vec<i64>> {
    (0..rank_bound)
        .map(|t| i64::try_from(a[t][t].abs()).map_err(|_| Error::Overflow("smith normal form")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_input_is_normalised() {
        let m = vec![vec![4, 0], vec![0, 6]];
        assert_eq!(invariant_factors(&m).unwrap(), vec![2, 12]);
    }

    #[test]
    fn rank_deficient() {
        let m = vec![vec![2, 4], vec![1, 2], vec![3, 6], vec![-1, -2]];
        assert_eq!(invariant_factors(&m).unwrap(), vec![1, 0]);
    }

    #[test]
    fn unimodular_rows() {
        let m = vec![vec![2, 3], vec![1, 2]];
        assert_eq!(invariant_factors(&m).unwrap(), vec![1, 1]);
    }

    #[test]
    fn determinant_is_product_of_factors() {
        // det = 6*5 - 4*3 = 18
        let m = vec![vec![6, 4], vec![3, 5]];
        let f = invariant_factors(&m).unwrap();
        assert_eq!(f[0] * f[1], 18);
        assert_eq!(f[1] % f[0], 0);
    }
}
