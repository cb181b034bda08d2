//! Keel's presentation of the cohomology of M̄_{0,n} in degrees 1 and 2.
//!
//! Degree-1 classes live in the free span of boundary divisors, degree-2
//! classes in the free span of codimension-2 strata. Products of divisors are
//! expanded with the vanishing rule for incompatible pairs, and squares
//! `[D]^2` are rewritten through [`square_reduce`], so every relation is a
//! plain linear relation among strata.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::combinat::{
    check_point_count, compatible, enumerate_divisors, enumerate_strata, BoundaryDivisor,
    Stratum,
};
use crate::error::{Error, Result};
use crate::linalg::{int_row_from_pairs, rational_from_str, rational_to_string, Echelon, IntRow, RatRow};

/// Codimension-2 strata count at n = 8.
pub const DEFAULT_MAX_STRATA: usize = 1918;

/// Size limits for building relation spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_strata: usize,
    pub mem_limit_bytes: Option<usize>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_strata: DEFAULT_MAX_STRATA,
            mem_limit_bytes: None,
        }
    }
}

/// A cohomology class written in stratum classes of one codimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassVector {
    n: usize,
    k: usize,
    coords: BTreeMap<Stratum, BigRational>,
}

impl ClassVector {
    pub fn zero(n: usize, k: usize) -> Self {
        ClassVector {
            n,
            k,
            coords: BTreeMap::new(),
        }
    }

    pub fn from_stratum(z: Stratum) -> Self {
        let mut v = Self::zero(z.n(), z.codim());
        v.coords.insert(z, BigRational::one());
        v
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coeff(&self, z: &Stratum) -> BigRational {
        self.coords.get(z).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Stratum, &BigRational)> {
        self.coords.iter()
    }

    /// Adds `c [z]`.
    pub fn add_term(&mut self, z: Stratum, c: BigRational) {
        assert_eq!(z.codim(), self.k, "degree mismatch");
        assert_eq!(z.n(), self.n, "point count mismatch");
        if c.is_zero() {
            return;
        }
        let entry = self.coords.entry(z);
        match entry {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &ClassVector, c: &BigRational) {
        for (z, v) in other.iter() {
            self.add_term(z.clone(), v * c);
        }
    }

    pub fn scaled(&self, c: &BigRational) -> ClassVector {
        let mut out = ClassVector::zero(self.n, self.k);
        out.add_scaled(self, c);
        out
    }
}

/// The degree-1 relation `sum_{ab|cd} [D] - sum_{ac|bd} [D]` style sums: all
/// divisors with `a, b` on one side and `c, d` on the other.
fn separating(divisors: &[BoundaryDivisor], a: usize, b: usize, c: usize, d: usize) -> Vec<usize> {
    divisors
        .iter()
        .enumerate()
        .filter(|(_, div)| {
            let s = div.rep();
            let t = s.complement();
            (s.contains(a) && s.contains(b) && t.contains(c) && t.contains(d))
                || (t.contains(a) && t.contains(b) && s.contains(c) && s.contains(d))
        })
        .map(|(i, _)| i)
        .collect()
}

/// Two relations per 4-subset `{i<j<k<l}`: `ij|kl - ik|jl` and
/// `ij|kl - il|jk`, as rows over [`enumerate_divisors`].
pub fn degree1_generators(n: usize) -> Vec<IntRow> {
    let divisors = enumerate_divisors(n);
    let mut rows = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            for k in j + 1..=n {
                for l in k + 1..=n {
                    let a = separating(&divisors, i, j, k, l);
                    let b = separating(&divisors, i, k, j, l);
                    let c = separating(&divisors, i, l, j, k);
                    for other in [b, c] {
                        let pairs = a
                            .iter()
                            .map(|&x| (x, 1))
                            .chain(other.iter().map(|&x| (x, -1)))
                            .collect();
                        rows.push(int_row_from_pairs(pairs));
                    }
                }
            }
        }
    }
    rows
}

/// `[D]^2` in the free span of codimension-2 strata.
///
/// With `i, j` the two smallest labels of the canonical side and `k, l` the
/// two smallest outside it, multiplying `sum_{ij|kl} [T] = sum_{ik|jl} [T]`
/// by `[D]` gives
/// `[D]^2 = sum_{ik|jl} [T][D] - sum_{ij|kl, T != D} [T][D]`.
pub fn square_reduce(d: &BoundaryDivisor) -> ClassVector {
    let n = d.n();
    let divisors = enumerate_divisors(n);
    square_reduce_with(&divisors, d)
}

fn square_reduce_with(divisors: &[BoundaryDivisor], d: &BoundaryDivisor) -> ClassVector {
    let n = d.n();
    let inside = d.rep().labels();
    let outside = d.rep().complement().labels();
    let (i, j) = (inside[0], inside[1]);
    let (k, l) = (outside[0], outside[1]);
    let mut out = ClassVector::zero(n, 2);
    for t in separating(divisors, i, k, j, l) {
        if let Some(z) = Stratum::pair(divisors[t], *d) {
            out.add_term(z, BigRational::one());
        }
    }
    for t in separating(divisors, i, j, k, l) {
        if divisors[t] == *d {
            continue;
        }
        if let Some(z) = Stratum::pair(divisors[t], *d) {
            out.add_term(z, -BigRational::one());
        }
    }
    out
}

/// The product of a degree-1 relation (a row over [`enumerate_divisors`])
/// with `[E]`, expanded into codimension-2 strata.
pub fn relation_times_divisor(n: usize, relation: &IntRow, e: &BoundaryDivisor) -> ClassVector {
    let divisors = enumerate_divisors(n);
    let square = square_reduce_with(&divisors, e);
    relation_times_divisor_with(&divisors, relation, e, &square)
}

fn relation_times_divisor_with(
    divisors: &[BoundaryDivisor],
    relation: &IntRow,
    e: &BoundaryDivisor,
    square: &ClassVector,
) -> ClassVector {
    let mut out = ClassVector::zero(e.n(), 2);
    for (col, c) in relation {
        let t = divisors[*col];
        let c = BigRational::from_integer(c.clone());
        if t == *e {
            out.add_scaled(square, &c);
        } else if compatible(&t, e) {
            out.add_term(Stratum::pair(t, *e).expect("compatible distinct pair"), c);
        }
    }
    out
}

/// Linear relations among the codimension-`k` strata, in echelon form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationSpace {
    n: usize,
    k: usize,
    strata: Vec<Stratum>,
    index: HashMap<Stratum, usize>,
    echelon: Echelon,
}

impl RelationSpace {
    /// Keel's linear relations on the divisors.
    pub fn degree1(n: usize) -> Result<Self> {
        check_point_count(n)?;
        let strata = enumerate_strata(n, 1);
        let mut echelon = Echelon::new(strata.len());
        for row in degree1_generators(n) {
            echelon.insert(row)?;
        }
        Ok(Self::assemble(n, 1, strata, echelon))
    }

    /// Degree-1 relations times every divisor class.
    pub fn degree2(n: usize, limits: &Limits) -> Result<Self> {
        check_point_count(n)?;
        if n < 5 {
            return Err(Error::UnsupportedDegree { n, k: 2 });
        }
        let strata = enumerate_strata(n, 2);
        if strata.len() > limits.max_strata {
            return Err(Error::Resource(format!(
                "{} codimension-2 strata at n = {n} exceed the ceiling of {}",
                strata.len(),
                limits.max_strata
            )));
        }
        let divisors = enumerate_divisors(n);
        let index: HashMap<Stratum, usize> =
            strata.iter().cloned().enumerate().map(|(i, z)| (z, i)).collect();

        // Products with a spanning subset of the degree-1 relations span the
        // same space as products with all of them.
        let mut deg1 = Echelon::new(divisors.len());
        let mut independent = Vec::new();
        for row in degree1_generators(n) {
            if deg1.insert(row.clone())? {
                independent.push(row);
            }
        }

        let mut echelon = Echelon::new(strata.len()).with_memory_limit(limits.mem_limit_bytes);
        for e in &divisors {
            let square = square_reduce_with(&divisors, e);
            for r in &independent {
                let product = relation_times_divisor_with(&divisors, r, e, &square);
                echelon.insert(class_to_int_row(&index, &product))?;
            }
        }
        Ok(Self::assemble(n, 2, strata, echelon))
    }

    pub fn build(n: usize, k: usize, limits: &Limits) -> Result<Self> {
        match k {
            1 => Self::degree1(n),
            2 => Self::degree2(n, limits),
            _ => Err(Error::UnsupportedDegree { n, k }),
        }
    }

    fn assemble(n: usize, k: usize, strata: Vec<Stratum>, echelon: Echelon) -> Self {
        let index = strata.iter().cloned().enumerate().map(|(i, z)| (z, i)).collect();
        RelationSpace {
            n,
            k,
            strata,
            index,
            echelon,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn column_of(&self, z: &Stratum) -> Option<usize> {
        self.index.get(z).copied()
    }

    pub fn rank(&self) -> usize {
        self.echelon.rank()
    }

    /// `dim H^{k,k}`: number of strata minus the rank of the relations.
    pub fn corank(&self) -> usize {
        self.strata.len() - self.echelon.rank()
    }

    pub fn echelon(&self) -> &Echelon {
        &self.echelon
    }

    pub fn pivot_columns(&self) -> Vec<usize> {
        self.echelon.pivot_columns()
    }

    fn to_rat_row(&self, v: &ClassVector) -> Result<RatRow> {
        if v.n() != self.n || v.degree() != self.k {
            return Err(Error::UnsupportedDegree {
                n: v.n(),
                k: v.degree(),
            });
        }
        let mut row: RatRow = v
            .iter()
            .map(|(z, c)| {
                self.column_of(z)
                    .map(|i| (i, c.clone()))
                    .ok_or_else(|| Error::InconsistentClass(z.to_string()))
            })
            .collect::<Result<_>>()?;
        row.sort_by_key(|e| e.0);
        Ok(row)
    }

    /// Whether `v` vanishes in cohomology.
    pub fn is_relation(&self, v: &ClassVector) -> Result<bool> {
        Ok(self.echelon.normal_form(&self.to_rat_row(v)?).is_empty())
    }

    /// The basis of strata whose columns carry no pivot.
    pub fn standard_basis(&self) -> Basis {
        let elements = self
            .strata
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.echelon.is_pivot(*i))
            .map(|(_, z)| z.clone())
            .collect();
        Basis {
            n: self.n,
            k: self.k,
            tag: BasisTag::Auto,
            elements,
        }
    }

    pub fn cache_path(dir: &Path, n: usize, k: usize) -> PathBuf {
        dir.join(format!("keel-n{n}-k{k}.json"))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CacheFile {
            format: CACHE_FORMAT.to_string(),
            version: CACHE_VERSION,
            n: self.n,
            k: self.k,
            strata: self.strata.iter().map(Stratum::descriptor).collect(),
            pivot_columns: self.echelon.pivot_columns(),
            rows: self
                .echelon
                .rows()
                .iter()
                .map(|r| {
                    let mut dense = vec!["0/1".to_string(); self.strata.len()];
                    for (c, v) in r {
                        dense[*c] = rational_to_string(&BigRational::from_integer(v.clone()));
                    }
                    dense
                })
                .collect(),
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    /// Loads a cached relation space, checking it against the expected
    /// `(n, k)` and stratum ordering.
    pub fn load(path: &Path, n: usize, k: usize) -> Result<Self> {
        let bad = |reason: String| Error::Cache {
            path: path.display().to_string(),
            reason,
        };
        let file: CacheFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        if file.format != CACHE_FORMAT || file.version != CACHE_VERSION {
            return Err(bad(format!("unknown format {} v{}", file.format, file.version)));
        }
        if file.n != n || file.k != k {
            return Err(bad(format!("holds (n, k) = ({}, {})", file.n, file.k)));
        }
        let strata = enumerate_strata(n, k);
        let expected: Vec<Vec<Vec<usize>>> = strata.iter().map(Stratum::descriptor).collect();
        if expected != file.strata {
            return Err(bad("stratum ordering differs".into()));
        }
        let mut rows = Vec::with_capacity(file.rows.len());
        for (i, dense) in file.rows.iter().enumerate() {
            if dense.len() != strata.len() {
                return Err(bad(format!("row {i} has {} entries", dense.len())));
            }
            let mut row: IntRow = Vec::new();
            for (c, s) in dense.iter().enumerate() {
                let v = rational_from_str(s).ok_or_else(|| bad(format!("bad entry {s:?}")))?;
                if !v.is_integer() {
                    return Err(bad(format!("non-integral entry {s:?}")));
                }
                if !v.is_zero() {
                    row.push((c, v.to_integer()));
                }
            }
            rows.push(row);
        }
        let echelon = Echelon::from_rows(strata.len(), rows).map_err(|e| bad(e.to_string()))?;
        if echelon.pivot_columns() != file.pivot_columns {
            return Err(bad("pivot columns do not match rows".into()));
        }
        Ok(Self::assemble(n, k, strata, echelon))
    }

    /// Reads `dir/keel-n{n}-k{k}.json` when present, otherwise builds and
    /// writes it.
    pub fn load_or_build(n: usize, k: usize, limits: &Limits, dir: Option<&Path>) -> Result<Self> {
        let Some(dir) = dir else {
            return Self::build(n, k, limits);
        };
        let path = Self::cache_path(dir, n, k);
        if path.exists() {
            return Self::load(&path, n, k);
        }
        let space = Self::build(n, k, limits)?;
        space.save(&path)?;
        Ok(space)
    }
}

const CACHE_FORMAT: &str = "m0n-keel-relations";
const CACHE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format: String,
    version: u32,
    n: usize,
    k: usize,
    strata: Vec<Vec<Vec<usize>>>,
    pivot_columns: Vec<usize>,
    rows: Vec<Vec<String>>,
}

fn class_to_int_row(index: &HashMap<Stratum, usize>, v: &ClassVector) -> IntRow {
    let mut row: IntRow = v
        .iter()
        .map(|(z, c)| {
            debug_assert!(c.is_integer());
            (index[z], c.to_integer())
        })
        .collect();
    row.sort_by_key(|e| e.0);
    row
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisTag {
    B1,
    B2X3,
    Auto,
}

/// An ordered list of strata whose classes form a basis of `H^{k,k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis {
    n: usize,
    k: usize,
    tag: BasisTag,
    elements: Vec<Stratum>,
}

impl Basis {
    pub fn new(n: usize, k: usize, tag: BasisTag, elements: Vec<Stratum>) -> Result<Self> {
        if elements.iter().any(|z| z.n() != n || z.codim() != k) {
            return Err(Error::InvalidBasis("element of the wrong (n, k)".into()));
        }
        Ok(Basis {
            n,
            k,
            tag,
            elements,
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

    #[inline]
    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn elements(&self) -> &[Stratum] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `[D^{1,3}]` (the hyperplane `z_1 = 0`) followed by every side `S`
    /// with `2 < |S| <= n - 2` avoiding point 2; the sides containing point 1
    /// come first.
    pub fn b1(n: usize) -> Result<Self> {
        check_point_count(n)?;
        let first = BoundaryDivisor::from_labels(n, &[1, 3])?;
        let big: Vec<BoundaryDivisor> = enumerate_divisors(n)
            .into_iter()
            .filter(|d| d.rep().len() > 2)
            .collect();
        let (ramified, unramified): (Vec<_>, Vec<_>) =
            big.into_iter().partition(|d| d.is_ramified());
        let elements = std::iter::once(first)
            .chain(ramified)
            .chain(unramified)
            .map(Stratum::divisor)
            .collect();
        Ok(Basis {
            n,
            k: 1,
            tag: BasisTag::B1,
            elements,
        })
    }

    /// Number of ramified elements leading [`Basis::b1`]: `2^{n-2} - n + 1`.
    pub fn b1_ramified_count(n: usize) -> usize {
        (1usize << (n - 2)) + 1 - n
    }

    /// The sixteen codimension-2 strata `Z_1, ..., Z_16` at n = 6.
    pub fn b2_x3() -> Self {
        const SIDES: [&[usize]; 18] = [
            &[1, 3, 4, 5],
            &[1, 3, 4, 6],
            &[1, 3, 5, 6],
            &[1, 4, 5, 6],
            &[1, 3],
            &[1, 3, 4],
            &[1, 3, 5],
            &[1, 3, 6],
            &[1, 4, 5],
            &[1, 4, 6],
            &[1, 5, 6],
            &[1, 2],
            &[1, 2, 3],
            &[1, 2, 4],
            &[1, 2, 5],
            &[1, 2, 6],
            &[1, 4],
            &[3, 4],
        ];
        // (i, j) means D^{S_i} ∩ D^{S_j}, 1-based as in the standard listing
        const PAIRS: [(usize, usize); 16] = [
            (1, 5),
            (1, 7),
            (1, 9),
            (2, 5),
            (2, 6),
            (2, 8),
            (2, 10),
            (3, 5),
            (3, 11),
            (4, 17),
            (5, 7),
            (1, 16),
            (2, 15),
            (3, 14),
            (4, 13),
            (12, 18),
        ];
        let elements = PAIRS
            .iter()
            .map(|&(i, j)| {
                Stratum::from_label_sets(6, &[SIDES[i - 1], SIDES[j - 1]])
                    .expect("listed strata are valid")
            })
            .collect();
        Basis {
            n: 6,
            k: 2,
            tag: BasisTag::B2X3,
            elements,
        }
    }
}

/// A relation space together with a basis of the quotient; solves for basis
/// coordinates exactly.
///
/// Internally the columns are reordered so that the basis strata come last,
/// and the relations are re-echelonized in that order. The basis is valid
/// exactly when every other column carries a pivot; the normal form of any
/// class then lives on the basis columns and is its coordinate vector.
#[derive(Debug)]
pub struct Quotient {
    relations: RelationSpace,
    basis: Basis,
    position: Vec<usize>,
    offset: usize,
    echelon: Echelon,
    table: OnceLock<Vec<Vec<BigRational>>>,
}

impl Quotient {
    pub fn new(relations: RelationSpace, basis: Basis) -> Result<Self> {
        if basis.n != relations.n || basis.k != relations.k {
            return Err(Error::InvalidBasis(format!(
                "basis for (n, k) = ({}, {}) used with relations for ({}, {})",
                basis.n, basis.k, relations.n, relations.k
            )));
        }
        let m = relations.strata.len();
        let d = basis.len();
        if d > m {
            return Err(Error::InvalidBasis("more basis elements than strata".into()));
        }
        let offset = m - d;
        let mut position = vec![usize::MAX; m];
        for (i, z) in basis.elements.iter().enumerate() {
            let col = relations
                .column_of(z)
                .ok_or_else(|| Error::InvalidBasis(format!("{z} is not a stratum")))?;
            if position[col] != usize::MAX {
                return Err(Error::InvalidBasis(format!("{z} listed twice")));
            }
            position[col] = offset + i;
        }
        let mut next = 0;
        for p in position.iter_mut() {
            if *p == usize::MAX {
                *p = next;
                next += 1;
            }
        }

        let mut echelon = Echelon::new(m);
        for row in relations.echelon.rows() {
            let mut permuted: IntRow = row.iter().map(|(c, v)| (position[*c], v.clone())).collect();
            permuted.sort_by_key(|e| e.0);
            echelon.insert(permuted)?;
        }
        if echelon.rank() != offset {
            return Err(Error::InvalidBasis(format!(
                "{d} elements but the quotient has dimension {}",
                m - echelon.rank()
            )));
        }
        if let Some(col) = (0..offset).find(|&c| !echelon.is_pivot(c)) {
            let z = position.iter().position(|&p| p == col).unwrap();
            return Err(Error::InvalidBasis(format!(
                "classes are dependent; {} is not reached",
                relations.strata[z]
            )));
        }
        Ok(Quotient {
            relations,
            basis,
            position,
            offset,
            echelon,
            table: OnceLock::new(),
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn relations(&self) -> &RelationSpace {
        &self.relations
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn coordinates(&self, row: RatRow) -> Result<Vec<BigRational>> {
        let nf = self.echelon.normal_form(&row);
        let mut out = vec![BigRational::zero(); self.dim()];
        for (c, v) in nf {
            if c < self.offset {
                let z = self.position.iter().position(|&p| p == c).unwrap();
                return Err(Error::InconsistentClass(self.relations.strata[z].to_string()));
            }
            out[c - self.offset] = v;
        }
        Ok(out)
    }

    /// Coordinates of `v` in the basis, modulo the relations.
    pub fn reduce(&self, v: &ClassVector) -> Result<Vec<BigRational>> {
        let row = self.relations.to_rat_row(v)?;
        let mut permuted: RatRow = row.into_iter().map(|(c, x)| (self.position[c], x)).collect();
        permuted.sort_by_key(|e| e.0);
        self.coordinates(permuted)
    }

    pub fn reduce_stratum(&self, z: &Stratum) -> Result<Vec<BigRational>> {
        let col = self
            .relations
            .column_of(z)
            .ok_or_else(|| Error::InconsistentClass(z.to_string()))?;
        self.coordinates(vec![(self.position[col], BigRational::one())])
    }

    /// Coordinates of every stratum, indexed like [`RelationSpace::strata`].
    pub fn reduction_table(&self) -> &[Vec<BigRational>] {
        self.table.get_or_init(|| {
            self.relations
                .strata
                .iter()
                .map(|z| self.reduce_stratum(z).expect("basis spans every stratum"))
                .collect()
        })
    }
}

/// Coordinates of `v` in the basis held by `q`.
pub fn reduce_to_basis(v: &ClassVector, q: &Quotient) -> Result<Vec<BigRational>> {
    q.reduce(v)
}

/// The coefficient vector of a basis element as a `BigInt` unit vector, for
/// callers that need integral coordinates.
pub fn unit(dim: usize, i: usize) -> Vec<BigRational> {
    let mut v = vec![BigRational::zero(); dim];
    v[i] = BigRational::from_integer(BigInt::one());
    v
}
