//! Exact linear algebra: a streaming sparse echelon form over the integers
//! (fraction-free, rows kept primitive) and a small dense rational matrix.

use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Sparse integer row: strictly increasing column indices, no zero values.
pub type IntRow = Vec<(usize, BigInt)>;

/// Sparse rational vector with the same layout as [`IntRow`].
pub type RatRow = Vec<(usize, BigRational)>;

/// Rough per-entry footprint used by the memory ceiling.
const BYTES_PER_ENTRY: usize = 64;

/// Row echelon form built one row at a time.
///
/// Every stored row is primitive with a positive leading coefficient, and no
/// two stored rows share a leading column. Rows are reduced only until their
/// leading column is new, so the stored form depends on insertion order; the
/// normal form of a vector modulo the row space does not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Echelon {
    ncols: usize,
    rows: Vec<IntRow>,
    pivot_row: Vec<Option<usize>>,
    entries: usize,
    mem_limit: Option<usize>,
}

impl Echelon {
    pub fn new(ncols: usize) -> Self {
        Echelon {
            ncols,
            rows: Vec::new(),
            pivot_row: vec![None; ncols],
            entries: 0,
            mem_limit: None,
        }
    }

    /// Refuse to grow past roughly `bytes` of stored entries.
    pub fn with_memory_limit(mut self, bytes: Option<usize>) -> Self {
        self.mem_limit = bytes;
        self
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[IntRow] {
        &self.rows
    }

    /// Leading column of each stored row, in storage order.
    pub fn pivot_columns(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r[0].0).collect()
    }

    #[inline]
    pub fn is_pivot(&self, col: usize) -> bool {
        self.pivot_row[col].is_some()
    }

    /// Reduce `row` against the stored rows and keep it if something is
    /// left. Returns whether the rank grew.
    pub fn insert(&mut self, row: IntRow) -> Result<bool> {
        let mut row = row;
        row.retain(|(_, v)| !v.is_zero());
        loop {
            let Some((col, _)) = row.first() else {
                return Ok(false);
            };
            let col = *col;
            debug_assert!(col < self.ncols);
            match self.pivot_row[col] {
                Some(p) => row = eliminate_int(&row, &self.rows[p]),
                None => {
                    make_primitive(&mut row);
                    self.entries += row.len();
                    if let Some(limit) = self.mem_limit {
                        if self.entries * BYTES_PER_ENTRY > limit {
                            return Err(Error::Resource(format!(
                                "echelon storage exceeds {} MB after {} rows",
                                limit >> 20,
                                self.rows.len()
                            )));
                        }
                    }
                    self.pivot_row[col] = Some(self.rows.len());
                    self.rows.push(row);
                    return Ok(true);
                }
            }
        }
    }

    /// Unique representative of `v` modulo the row space: no entry sits in a
    /// pivot column.
    pub fn normal_form(&self, v: &RatRow) -> RatRow {
        let mut v = v.clone();
        let mut pos = 0;
        while pos < v.len() {
            let col = v[pos].0;
            match self.pivot_row[col] {
                Some(p) => {
                    let pivot = &self.rows[p];
                    let factor = &v[pos].1 / BigRational::from_integer(pivot[0].1.clone());
                    v = axpy_rat(&v, &factor, pivot);
                    // entries before `pos` are untouched since the pivot row starts at `col`
                }
                None => pos += 1,
            }
        }
        v
    }

    /// Rebuild from stored parts (used when loading a cache).
    pub(crate) fn from_rows(ncols: usize, rows: Vec<IntRow>) -> Result<Self> {
        let mut pivot_row = vec![None; ncols];
        let mut entries = 0;
        for (i, r) in rows.iter().enumerate() {
            let Some((c, lead)) = r.first() else {
                return Err(Error::InvalidBasis("empty stored row".into()));
            };
            if *c >= ncols || pivot_row[*c].is_some() || !lead.is_positive() {
                return Err(Error::InvalidBasis(format!("malformed stored row {i}")));
            }
            if r.windows(2).any(|w| w[0].0 >= w[1].0) || r.last().unwrap().0 >= ncols {
                return Err(Error::InvalidBasis(format!("unsorted stored row {i}")));
            }
            pivot_row[*c] = Some(i);
            entries += r.len();
        }
        Ok(Echelon {
            ncols,
            rows,
            pivot_row,
            entries,
            mem_limit: None,
        })
    }
}

/// `lead(p) * r - r[c] * p`, scaled down by the gcd of the two multipliers,
/// where `c` is the leading column of both.
fn eliminate_int(r: &IntRow, p: &IntRow) -> IntRow {
    let a = &p[0].1;
    let b = &r[0].1;
    let g = a.gcd(b);
    let ra = a / &g;
    let pb = b / &g;
    let mut out = Vec::with_capacity(r.len() + p.len());
    let (mut i, mut j) = (1, 1);
    while i < r.len() || j < p.len() {
        let ci = r.get(i).map(|e| e.0).unwrap_or(usize::MAX);
        let cj = p.get(j).map(|e| e.0).unwrap_or(usize::MAX);
        let (col, val) = if ci < cj {
            i += 1;
            (ci, &ra * &r[i - 1].1)
        } else if cj < ci {
            j += 1;
            (cj, -(&pb * &p[j - 1].1))
        } else {
            i += 1;
            j += 1;
            (ci, &ra * &r[i - 1].1 - &pb * &p[j - 1].1)
        };
        if !val.is_zero() {
            out.push((col, val));
        }
    }
    make_primitive(&mut out);
    out
}

fn make_primitive(row: &mut IntRow) {
    if row.is_empty() {
        return;
    }
    let mut g = BigInt::zero();
    for (_, v) in row.iter() {
        g = g.gcd(v);
        if g.is_one() {
            break;
        }
    }
    if row[0].1.is_negative() {
        g = -g;
    }
    if !g.is_one() {
        for (_, v) in row.iter_mut() {
            *v = &*v / &g;
        }
    }
}

/// `v - factor * p` for a rational `v` and integer `p`.
fn axpy_rat(v: &RatRow, factor: &BigRational, p: &IntRow) -> RatRow {
    let mut out = Vec::with_capacity(v.len() + p.len());
    let (mut i, mut j) = (0, 0);
    while i < v.len() || j < p.len() {
        let ci = v.get(i).map(|e| e.0).unwrap_or(usize::MAX);
        let cj = p.get(j).map(|e| e.0).unwrap_or(usize::MAX);
        let (col, val) = if ci < cj {
            i += 1;
            (ci, v[i - 1].1.clone())
        } else if cj < ci {
            j += 1;
            (cj, -(factor * BigRational::from_integer(p[j - 1].1.clone())))
        } else {
            i += 1;
            j += 1;
            (
                ci,
                &v[i - 1].1 - factor * BigRational::from_integer(p[j - 1].1.clone()),
            )
        };
        if !val.is_zero() {
            out.push((col, val));
        }
    }
    out
}

/// Convert a small signed coefficient map into a sorted sparse integer row.
pub fn int_row_from_pairs(mut pairs: Vec<(usize, i64)>) -> IntRow {
    pairs.sort_by_key(|p| p.0);
    let mut out: IntRow = Vec::with_capacity(pairs.len());
    for (c, v) in pairs {
        match out.last_mut() {
            Some((lc, lv)) if *lc == c => *lv += v,
            _ => out.push((c, BigInt::from(v))),
        }
    }
    out.retain(|(_, v)| !v.is_zero());
    out
}

/// Dense matrix of exact rationals, row-major.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigRational::one());
        }
        m
    }

    pub fn diagonal(entries: &[i64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, BigRational::from_integer(e.into()));
        }
        m
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        QMatrix {
            rows: r,
            cols: c,
            data: rows
                .iter()
                .flatten()
                .map(|&v| BigRational::from_integer(v.into()))
                .collect(),
        }
    }

    /// Builds the matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(columns: &[Vec<BigRational>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.len());
        let mut m = Self::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "ragged columns");
            for (i, v) in col.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<BigRational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.data
    }

    pub fn trace(&self) -> BigRational {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i).clone())
            .fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|v| v.is_integer())
    }

    /// Least common multiple of all entry denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        self.data
            .iter()
            .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
    }

    /// Entries times `scale`, which must clear every denominator.
    pub fn scaled_integers(&self, scale: &BigInt) -> Vec<BigInt> {
        let s = BigRational::from_integer(scale.clone());
        self.data
            .iter()
            .map(|v| {
                let w = v * &s;
                assert!(w.is_integer(), "scale does not clear denominators");
                w.to_integer()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn add_scaled_identity(&self, c: &BigRational) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            let v = m.get(i, i) + c;
            m.set(i, i, v);
        }
        m
    }

    /// Exact rank by Gaussian elimination over the rationals.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            let Some(p) = (rank..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            for j in 0..m.cols {
                m.data.swap(rank * m.cols + j, p * m.cols + j);
            }
            let inv = m.get(rank, col).recip();
            for r in rank + 1..m.rows {
                if m.get(r, col).is_zero() {
                    continue;
                }
                let f = m.get(r, col) * &inv;
                for j in col..m.cols {
                    let v = m.get(r, j) - &f * m.get(rank, j);
                    m.set(r, j, v);
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn to_f64(&self) -> Vec<f64> {
        use num_traits::ToPrimitive;
        self.data.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

impl Mul for &QMatrix {
    type Output = QMatrix;

    fn mul(self, rhs: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out = QMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx] = &out.data[idx] + a * b;
                }
            }
        }
        out
    }
}

impl fmt::Display for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.data.iter().map(|v| v.to_string()).collect();
        let width = cells.iter().map(|c| c.len()).max().unwrap_or(1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{:>width$}", cells[i * self.cols + j])?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// `"num/den"` with a positive denominator; the serialization used by the
/// cache and the matrix dumps.
pub fn rational_to_string(v: &BigRational) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

pub fn rational_from_str(s: &str) -> Option<BigRational> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn echelon_rank_and_normal_form() {
        let mut e = Echelon::new(3);
        assert!(e.insert(int_row_from_pairs(vec![(0, 2), (1, 4)])).unwrap());
        assert!(!e.insert(int_row_from_pairs(vec![(0, 1), (1, 2)])).unwrap());
        assert!(e.insert(int_row_from_pairs(vec![(1, 3), (2, -3)])).unwrap());
        assert_eq!(e.rank(), 2);
        assert_eq!(e.rows()[0], int_row_from_pairs(vec![(0, 1), (1, 2)]));
        // e_0 = -2 e_1 = -2 e_2 modulo the rows
        let nf = e.normal_form(&vec![(0, q(1, 1))]);
        assert_eq!(nf, vec![(2, q(-2, 1))]);
        let nf = e.normal_form(&vec![(0, q(1, 2)), (2, q(1, 1))]);
        assert!(nf.is_empty());
    }

    #[test]
    fn memory_ceiling_trips() {
        let mut e = Echelon::new(4).with_memory_limit(Some(BYTES_PER_ENTRY * 2));
        assert!(e.insert(int_row_from_pairs(vec![(0, 1), (1, 1)])).is_ok());
        assert!(matches!(
            e.insert(int_row_from_pairs(vec![(1, 1), (2, 1)])),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn dense_product_and_rank() {
        let a = QMatrix::from_i64_rows(&[vec![1, 2], vec![3, 4]]);
        let b = QMatrix::from_i64_rows(&[vec![0, 1], vec![1, 0]]);
        assert_eq!(&a * &b, QMatrix::from_i64_rows(&[vec![2, 1], vec![4, 3]]));
        assert_eq!(a.rank(), 2);
        assert_eq!(QMatrix::from_i64_rows(&[vec![1, 2], vec![2, 4]]).rank(), 1);
        assert_eq!(a.trace(), q(5, 1));
    }

    #[test]
    fn rational_strings() {
        assert_eq!(rational_to_string(&q(-6, 4)), "-3/2");
        assert_eq!(rational_from_str("-3/2"), Some(q(-3, 2)));
        assert_eq!(rational_from_str("7"), Some(q(7, 1)));
        assert_eq!(rational_from_str("1/0"), None);
    }
}
