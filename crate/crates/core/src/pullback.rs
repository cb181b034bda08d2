//! Matrices of `g_rho^*`, `s^*` and `f_rho^* = s^* g_rho^*` acting on basis
//! coordinate columns.

use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::combinat::{apply_permutation, Permutation};
use crate::error::{Error, Result};
use crate::keel::{Basis, Limits, Quotient, RelationSpace};
use crate::linalg::{rational_from_str, rational_to_string, QMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    GRho,
    SMap,
    FRho,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PullbackMatrix {
    pub entries: QMatrix,
    pub n: usize,
    pub k: usize,
    pub provenance: Provenance,
}

impl PullbackMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// Topological degree `2^{n-3}` of `f_rho`.
pub fn top_degree(n: usize) -> u64 {
    assert!(n >= 3, "at least three points");
    1u64 << (n - 3)
}

/// Whether `(n, k)` is in the range where `f_rho^*` is available.
pub fn is_supported(n: usize, k: usize) -> bool {
    matches!((n, k), (5..=9, 1) | (6, 2))
}

/// Relations, basis and reduction table for one `(n, k)`, shared read-only
/// across permutations.
#[derive(Debug)]
pub struct DynamicsContext {
    n: usize,
    k: usize,
    quotient: Quotient,
    s_star: QMatrix,
}

impl DynamicsContext {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        Self::with_options(n, k, &Limits::default(), None)
    }

    pub fn with_options(n: usize, k: usize, limits: &Limits, cache: Option<&Path>) -> Result<Self> {
        if !is_supported(n, k) {
            return Err(Error::UnsupportedDegree { n, k });
        }
        let relations = RelationSpace::load_or_build(n, k, limits, cache)?;
        let (basis, s_star) = if k == 1 {
            (Basis::b1(n)?, s_pullback_h11(n))
        } else {
            (Basis::b2_x3(), s_pullback_h22_x3())
        };
        let quotient = Quotient::new(relations, basis)?;
        quotient.reduction_table();
        Ok(DynamicsContext {
            n,
            k,
            quotient,
            s_star,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn basis(&self) -> &Basis {
        self.quotient.basis()
    }

    pub fn quotient(&self) -> &Quotient {
        &self.quotient
    }

    pub fn dim(&self) -> usize {
        self.quotient.dim()
    }

    fn check(&self, rho: &Permutation) -> Result<()> {
        if rho.n() != self.n {
            return Err(Error::InvalidPermutation(format!(
                "permutation of {} points used at n = {}",
                rho.n(),
                self.n
            )));
        }
        Ok(())
    }

    /// Column `j` is the reduced class of `g_rho^* B_j`.
    pub fn g_pullback(&self, rho: &Permutation) -> Result<PullbackMatrix> {
        self.check(rho)?;
        let table = self.quotient.reduction_table();
        let rel = self.quotient.relations();
        let columns: Vec<Vec<BigRational>> = self
            .basis()
            .elements()
            .iter()
            .map(|z| {
                let image = apply_permutation(rho, z);
                let col = rel
                    .column_of(&image)
                    .ok_or_else(|| Error::InconsistentClass(image.to_string()))?;
                Ok(table[col].clone())
            })
            .collect::<Result<_>>()?;
        Ok(PullbackMatrix {
            entries: QMatrix::from_columns(&columns),
            n: self.n,
            k: self.k,
            provenance: Provenance::GRho,
        })
    }

    pub fn s_pullback(&self) -> PullbackMatrix {
        PullbackMatrix {
            entries: self.s_star.clone(),
            n: self.n,
            k: self.k,
            provenance: Provenance::SMap,
        }
    }

    /// `f_rho^* = s^* g_rho^*`.
    pub fn f_pullback(&self, rho: &Permutation) -> Result<PullbackMatrix> {
        let g = self.g_pullback(rho)?;
        Ok(PullbackMatrix {
            entries: &self.s_star * &g.entries,
            n: self.n,
            k: self.k,
            provenance: Provenance::FRho,
        })
    }

    pub fn dump(&self, m: &PullbackMatrix) -> MatrixDump {
        MatrixDump {
            n: m.n,
            k: m.k,
            basis: self
                .basis()
                .elements()
                .iter()
                .map(|z| z.descriptor())
                .collect(),
            rows: (0..m.dim())
                .map(|i| m.entries.row(i).iter().map(rational_to_string).collect())
                .collect(),
        }
    }
}

/// `diag(2, ..., 2, 1, ..., 1)` in the basis [`Basis::b1`]: ramified
/// divisors pull back with multiplicity two.
pub fn s_pullback_h11(n: usize) -> QMatrix {
    let len = (1usize << (n - 1)) - n * (n - 1) / 2 - 1;
    let ramified = Basis::b1_ramified_count(n);
    let diag: Vec<i64> = (0..len).map(|i| if i < ramified { 2 } else { 1 }).collect();
    QMatrix::diagonal(&diag)
}

/// `s^*` on `H^{2,2}` at n = 6 in the basis [`Basis::b2_x3`]. Upper
/// triangular; the class `Z_16` also picks up `Z_14` and `Z_15`.
pub fn s_pullback_h22_x3() -> QMatrix {
    let mut rows = vec![vec![0i64; 16]; 16];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = match i {
            0..=10 => 4,
            11..=14 => 2,
            _ => 1,
        };
    }
    rows[13][15] = 1;
    rows[14][15] = 1;
    QMatrix::from_i64_rows(&rows)
}

/// Serialized matrix: rows of `"num/den"` strings, basis as descriptors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub n: usize,
    pub k: usize,
    pub basis: Vec<Vec<Vec<usize>>>,
    pub rows: Vec<Vec<String>>,
}

impl MatrixDump {
    pub fn to_matrix(&self) -> Result<QMatrix> {
        let d = self.rows.len();
        let mut m = QMatrix::zeros(d, d);
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Parse {
                    token: format!("row {i}"),
                    position: i,
                    reason: "matrix is not square".into(),
                });
            }
            for (j, s) in row.iter().enumerate() {
                let v = rational_from_str(s).ok_or_else(|| Error::Parse {
                    token: s.clone(),
                    position: j,
                    reason: "not a rational".into(),
                })?;
                m.set(i, j, v);
            }
        }
        Ok(m)
    }
}

/// Largest absolute column sum, a crude bound on the spectral radius.
pub fn max_column_sum(m: &QMatrix) -> BigRational {
    use num_traits::Signed;
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<BigRational>())
        .max()
        .unwrap_or_else(|| BigRational::from_integer(BigInt::from(0)))
}
