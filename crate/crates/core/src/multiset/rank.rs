//! Exact rank of integer vectors by fraction-free elimination.

use crate::error::{Error, Result};

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Incremental echelon basis over the integers.
///
/// Each stored row has zeros at the pivot columns of all earlier rows, so a
/// candidate reduced against the rows in insertion order ends with zeros at
/// every pivot. Rows are divided by their content (gcd of entries) to keep
/// magnitudes small; no division ever leaves the integers.
pub(crate) struct EchelonBasis {
    dim: usize,
    rows: Vec<(usize, Vec<i128>)>,
}

impl EchelonBasis {
    pub fn new(dim: usize) -> Self {
        EchelonBasis { dim, rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.dim
    }

    /// Adds `row` if it is independent of the current basis; returns whether it was.
    pub fn insert(&mut self, row: &[i64]) -> Result<bool> {
        debug_assert_eq!(row.len(), self.dim);
        let mut r: Vec<i128> = row.iter().map(|&x| x as i128).collect();
        for (p, b) in &self.rows {
            let rp = r[*p];
            if rp == 0 {
                continue;
            }
            let bp = b[*p];
            for (x, &y) in r.iter_mut().zip(b) {
                let lhs = bp.checked_mul(*x).ok_or(Error::RankOverflow)?;
                let rhs = rp.checked_mul(y).ok_or(Error::RankOverflow)?;
                *x = lhs.checked_sub(rhs).ok_or(Error::RankOverflow)?;
            }
            let g = r.iter().fold(0, |g, &x| gcd(g, x));
            if g > 1 {
                r.iter_mut().for_each(|x| *x /= g);
            }
        }
        match r.iter().position(|&x| x != 0) {
            Some(p) => {
                self.rows.push((p, r));
                Ok(true)
            }
            None => Ok(false),
        }
    }
}

/// Rank of `rows` (each of length `dim`); stops early once full.
pub fn integer_rank<I>(rows: I, dim: usize) -> Result<usize>
where
    I: IntoIterator,
    I::Item: AsRef<[i64]>,
{
    let mut basis = EchelonBasis::new(dim);
    for row in rows {
        basis.insert(row.as_ref())?;
        if basis.is_full() {
            break;
        }
    }
    Ok(basis.rank())
}
