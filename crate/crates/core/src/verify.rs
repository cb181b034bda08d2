//! Tabulated dynamical degrees and minimal polynomials, and the sweeps that
//! reproduce them.
//!
//! Records live in `fixtures/tables.json`. A record whose listed polynomial
//! disagrees with its own listed degree carries an `erratum`; the effective
//! polynomial is then the corrected one, and reports say which was used.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinat::Permutation;
use crate::error::{Error, Result};
use crate::keel::Limits;
use crate::pullback::{max_column_sum, DynamicsContext};
use crate::spectral::{max_root_modulus, spectral_radius, IntPolynomial};

/// Agreement required between a computed degree and a tabulated one.
pub const RADIUS_TOLERANCE: f64 = 1e-6;

const FIXTURE: &str = include_str!("../fixtures/tables.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TableId {
    T1,
    TN3,
    TN4,
    TN5,
}

impl TableId {
    pub const ALL: [TableId; 4] = [TableId::T1, TableId::TN3, TableId::TN4, TableId::TN5];

    pub fn n(self) -> usize {
        match self {
            TableId::T1 => 5,
            TableId::TN3 => 6,
            TableId::TN4 => 7,
            TableId::TN5 => 8,
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TableId::T1 => "T1",
            TableId::TN3 => "T_N3",
            TableId::TN4 => "T_N4",
            TableId::TN5 => "T_N5",
        };
        f.write_str(s)
    }
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('_', "").as_str() {
            "T1" => Ok(TableId::T1),
            "TN3" => Ok(TableId::TN3),
            "TN4" => Ok(TableId::TN4),
            "TN5" => Ok(TableId::TN5),
            _ => Err(Error::Parse {
                token: s.to_string(),
                position: 0,
                reason: "expected one of T1, T_N3, T_N4, T_N5".into(),
            }),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
struct RawErratum {
    min_poly: Vec<String>,
    note: String,
}

#[derive(Clone, Debug, Deserialize)]
struct RawRecord {
    key: String,
    table: TableId,
    n: usize,
    k: usize,
    cycles: String,
    approx: String,
    min_poly: Vec<String>,
    erratum: Option<RawErratum>,
}

#[derive(Clone, Debug, Deserialize)]
struct RawFixture {
    format: String,
    version: u32,
    records: Vec<RawRecord>,
}

/// Which polynomial a record is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Certificate {
    Listed,
    Erratum,
}

/// One tabulated degree.
#[derive(Clone, Debug, Serialize)]
pub struct TableRecord {
    pub key: String,
    pub table: TableId,
    pub n: usize,
    pub k: usize,
    pub cycles: String,
    pub approx: f64,
    /// Digits as listed.
    pub approx_text: String,
    #[serde(serialize_with = "serialize_poly")]
    pub listed_poly: IntPolynomial,
    #[serde(serialize_with = "serialize_opt_poly")]
    pub corrected_poly: Option<IntPolynomial>,
    pub erratum_note: Option<String>,
    /// Dominant root of the listed polynomial.
    pub listed_root: f64,
}

fn serialize_poly<S: serde::Serializer>(p: &IntPolynomial, s: S) -> std::result::Result<S::Ok, S::Error> {
    p.to_strings().serialize(s)
}

fn serialize_opt_poly<S: serde::Serializer>(
    p: &Option<IntPolynomial>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    p.as_ref().map(|p| p.to_strings()).serialize(s)
}

impl TableRecord {
    pub fn permutation(&self) -> Result<Permutation> {
        Permutation::parse_cycles(self.n, &self.cycles)
    }

    /// The polynomial that certifies the row.
    pub fn effective_poly(&self) -> &IntPolynomial {
        self.corrected_poly.as_ref().unwrap_or(&self.listed_poly)
    }

    pub fn certificate(&self) -> Certificate {
        if self.corrected_poly.is_some() {
            Certificate::Erratum
        } else {
            Certificate::Listed
        }
    }
}

/// Parses and self-checks a fixture: each effective polynomial's dominant
/// root must agree with the listed degree, and an erratum is accepted only
/// when the listed polynomial fails that check.
pub fn parse_records(text: &str) -> Result<Vec<TableRecord>> {
    let raw: RawFixture = serde_json::from_str(text)?;
    if raw.format != "m0n-table-records" || raw.version != 1 {
        return Err(Error::InconsistentClass(format!(
            "unknown record format {} v{}",
            raw.format, raw.version
        )));
    }
    raw.records
        .into_iter()
        .map(|r| {
            let approx: f64 = r.approx.parse().map_err(|_| Error::Parse {
                token: r.approx.clone(),
                position: 0,
                reason: format!("degree of {}", r.key),
            })?;
            let listed = IntPolynomial::from_strings(&r.min_poly)?;
            let (listed_root, _) = max_root_modulus(&listed)?;
            let listed_ok = (listed_root - approx).abs() <= RADIUS_TOLERANCE;
            let (corrected, note) = match r.erratum {
                Some(e) => {
                    if listed_ok {
                        return Err(Error::InconsistentClass(format!(
                            "{}: erratum given for a consistent row",
                            r.key
                        )));
                    }
                    let p = IntPolynomial::from_strings(&e.min_poly)?;
                    let (root, _) = max_root_modulus(&p)?;
                    if (root - approx).abs() > RADIUS_TOLERANCE {
                        return Err(Error::InconsistentClass(format!(
                            "{}: corrected polynomial has dominant root {root}",
                            r.key
                        )));
                    }
                    (Some(p), Some(e.note))
                }
                None if listed_ok => (None, None),
                None => {
                    return Err(Error::InconsistentClass(format!(
                        "{}: listed polynomial has dominant root {listed_root}, expected {approx}",
                        r.key
                    )))
                }
            };
            Ok(TableRecord {
                key: r.key,
                table: r.table,
                n: r.n,
                k: r.k,
                cycles: r.cycles,
                approx,
                approx_text: r.approx,
                listed_poly: listed,
                corrected_poly: corrected,
                erratum_note: note,
                listed_root,
            })
        })
        .collect()
}

/// The embedded records, checked once.
pub fn records() -> &'static [TableRecord] {
    static RECORDS: OnceLock<Vec<TableRecord>> = OnceLock::new();
    RECORDS.get_or_init(|| parse_records(FIXTURE).expect("embedded records are self-consistent"))
}

pub fn records_for(table: TableId) -> Vec<&'static TableRecord> {
    records().iter().filter(|r| r.table == table).collect()
}

/// Shared dynamics contexts keyed by `(n, k)`.
#[derive(Debug, Default)]
pub struct ContextPool {
    limits: Limits,
    cache_dir: Option<PathBuf>,
    built: Mutex<HashMap<(usize, usize), Arc<DynamicsContext>>>,
}

impl ContextPool {
    pub fn new(limits: Limits, cache_dir: Option<PathBuf>) -> Self {
        ContextPool {
            limits,
            cache_dir,
            built: Mutex::new(HashMap::new()),
        }
    }

    pub fn get(&self, n: usize, k: usize) -> Result<Arc<DynamicsContext>> {
        if let Some(c) = self.built.lock().unwrap().get(&(n, k)) {
            return Ok(c.clone());
        }
        let ctx = Arc::new(DynamicsContext::with_options(
            n,
            k,
            &self.limits,
            self.cache_dir.as_deref(),
        )?);
        Ok(self
            .built
            .lock()
            .unwrap()
            .entry((n, k))
            .or_insert(ctx)
            .clone())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RowOutcome {
    pub key: String,
    pub n: usize,
    pub k: usize,
    pub cycles: String,
    pub approx: String,
    pub spectral_radius: f64,
    pub radius_error: f64,
    pub certificate: Certificate,
    pub listed_divides: bool,
    pub divides: bool,
    pub factor_degree: usize,
    pub char_poly: Vec<String>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableReport {
    pub table: TableId,
    pub rows: Vec<RowOutcome>,
}

impl TableReport {
    pub fn passed(&self) -> usize {
        self.rows.iter().filter(|r| r.pass).count()
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("table {}: {}/{} rows pass\n", self.table, self.passed(), self.rows.len());
        out.push_str(&format!(
            "{:<12} {:<22} {:>2} {:>13} {:>13} {:>9} {:>4} {:<8} {}\n",
            "key", "cycles", "k", "listed", "computed", "error", "deg", "cert", "status"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<12} {:<22} {:>2} {:>13} {:>13.9} {:>9.1e} {:>4} {:<8} {}\n",
                r.key,
                r.cycles,
                r.k,
                r.approx,
                r.spectral_radius,
                r.radius_error,
                r.factor_degree,
                match r.certificate {
                    Certificate::Listed => "listed",
                    Certificate::Erratum => "erratum",
                },
                if r.pass { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

/// Recomputes `f_rho^*` for one record and checks divisibility and the
/// dominant root.
pub fn check_record(rec: &TableRecord, pool: &ContextPool) -> Result<RowOutcome> {
    let ctx = pool.get(rec.n, rec.k)?;
    let f = ctx.f_pullback(&rec.permutation()?)?;
    let sr = spectral_radius(&f.entries)?;
    let divides = rec.effective_poly().divides(&sr.poly);
    let listed_divides = rec.listed_poly.divides(&sr.poly);
    let err = (sr.spectral_radius - rec.approx).abs();
    Ok(RowOutcome {
        key: rec.key.clone(),
        n: rec.n,
        k: rec.k,
        cycles: rec.cycles.clone(),
        approx: rec.approx_text.clone(),
        spectral_radius: sr.spectral_radius,
        radius_error: err,
        certificate: rec.certificate(),
        listed_divides,
        divides,
        factor_degree: rec.effective_poly().degree(),
        char_poly: sr.char_poly,
        pass: divides && err <= RADIUS_TOLERANCE,
    })
}

pub fn verify_table(table: TableId, pool: &ContextPool) -> Result<TableReport> {
    let recs = records_for(table);
    let rows = recs
        .par_iter()
        .map(|r| check_record(r, pool))
        .collect::<Result<Vec<_>>>()?;
    Ok(TableReport { table, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    All,
    Cyclic,
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(Scope::All),
            "cyclic" => Ok(Scope::Cyclic),
            _ => Err(Error::Parse {
                token: s.to_string(),
                position: 0,
                reason: "expected all or cyclic".into(),
            }),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::All => "all",
            Scope::Cyclic => "cyclic",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", content = "record", rename_all = "lowercase")]
pub enum Match {
    Trivial,
    Matched(String),
    Unmatched,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub cycles: String,
    pub char_poly: Vec<String>,
    pub spectral_radius: f64,
    /// `1 <= radius <= |s^*|_1 |g_rho^*|_1` in the column-sum norm.
    pub within_bounds: bool,
    #[serde(rename = "match")]
    pub matched: Match,
}

#[derive(Clone, Debug, Serialize)]
pub struct PolyGroup {
    pub char_poly: Vec<String>,
    pub spectral_radius: f64,
    pub count: usize,
    pub first: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub n: usize,
    pub k: usize,
    pub scope: Scope,
    pub total: usize,
    pub entries: Vec<SweepEntry>,
    pub groups: Vec<PolyGroup>,
}

impl SweepReport {
    pub fn unmatched(&self) -> Vec<&SweepEntry> {
        self.entries
            .iter()
            .filter(|e| matches!(e.matched, Match::Unmatched))
            .collect()
    }

    pub fn out_of_bounds(&self) -> Vec<&SweepEntry> {
        self.entries.iter().filter(|e| !e.within_bounds).collect()
    }

    pub fn trivial_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e.matched, Match::Trivial))
            .count()
    }

    /// Distinct nontrivial degrees, ascending, with the matching record.
    pub fn distinct_degrees(&self) -> Vec<(f64, String)> {
        let mut seen: BTreeMap<String, f64> = BTreeMap::new();
        for e in &self.entries {
            if let Match::Matched(key) = &e.matched {
                seen.entry(key.clone()).or_insert(e.spectral_radius);
            }
        }
        let mut v: Vec<(f64, String)> = seen.into_iter().map(|(k, r)| (r, k)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v
    }

    /// `UnmatchedDegree` naming every permutation whose degree is neither
    /// trivial nor tabulated, or whose radius breaks the sanity bound.
    pub fn check(&self) -> Result<()> {
        let bad: Vec<String> = self
            .entries
            .iter()
            .filter(|e| matches!(e.matched, Match::Unmatched) || !e.within_bounds)
            .map(|e| format!("{} ({:.9})", e.cycles, e.spectral_radius))
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::UnmatchedDegree(bad))
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "sweep n={} k={} scope={}: {} maps, {} trivial, {} unmatched\n",
            self.n,
            self.k,
            self.scope,
            self.total,
            self.trivial_count(),
            self.unmatched().len()
        );
        out.push_str(&format!("{:>6} {:>13} {:<24} char poly\n", "count", "radius", "first"));
        for g in &self.groups {
            out.push_str(&format!(
                "{:>6} {:>13.9} {:<24} {}\n",
                g.count,
                g.spectral_radius,
                g.first,
                g.char_poly.join(",")
            ));
        }
        for e in self.unmatched() {
            out.push_str(&format!("unmatched {} {:.9}\n", e.cycles, e.spectral_radius));
        }
        out
    }
}

fn to_f64(x: &num_rational::BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::INFINITY)
}

/// Whether `(n, k, scope)` may be swept. The full n = 8 sweep needs an
/// explicit opt-in.
pub fn check_sweep_gate(n: usize, k: usize, scope: Scope, allow_full_n8: bool) -> Result<()> {
    let ok = matches!((n, k), (5..=8, 1) | (6, 2));
    if !ok {
        return Err(Error::UnsupportedDegree { n, k });
    }
    if n == 8 && scope == Scope::All && !allow_full_n8 {
        return Err(Error::Resource(
            "the full sweep at n = 8 covers 40320 maps; pass the opt-in flag or use the cyclic scope"
                .into(),
        ));
    }
    Ok(())
}

/// The permutations in scope, in lexicographic order of image lists.
pub fn sweep_permutations(n: usize, scope: Scope) -> Vec<Permutation> {
    match scope {
        Scope::All => Permutation::all(n),
        Scope::Cyclic => Permutation::full_cycles(n),
    }
}

/// Computes `lambda_k` for every permutation in scope. Entry order follows
/// [`sweep_permutations`] regardless of scheduling.
pub fn sweep(n: usize, k: usize, scope: Scope, allow_full_n8: bool, pool: &ContextPool) -> Result<SweepReport> {
    check_sweep_gate(n, k, scope, allow_full_n8)?;
    let ctx = pool.get(n, k)?;
    let targets: Vec<&TableRecord> = records().iter().filter(|r| r.n == n && r.k == k).collect();
    let trivial = (1u64 << k) as f64;
    let perms = sweep_permutations(n, scope);
    let s_norm = to_f64(&max_column_sum(&ctx.s_pullback().entries));
    let entries = perms
        .par_iter()
        .map(|rho| {
            let g = ctx.g_pullback(rho)?;
            let f = ctx.f_pullback(rho)?;
            let sr = spectral_radius(&f.entries)?;
            let r = sr.spectral_radius;
            let bound = s_norm * to_f64(&max_column_sum(&g.entries));
            let matched = if (r - trivial).abs() <= RADIUS_TOLERANCE {
                Match::Trivial
            } else {
                targets
                    .iter()
                    .find(|t| (t.approx - r).abs() <= RADIUS_TOLERANCE)
                    .map(|t| Match::Matched(t.key.clone()))
                    .unwrap_or(Match::Unmatched)
            };
            Ok(SweepEntry {
                cycles: rho.to_string(),
                char_poly: sr.char_poly,
                spectral_radius: r,
                within_bounds: r >= 1.0 - RADIUS_TOLERANCE && r <= bound + RADIUS_TOLERANCE,
                matched,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut index: HashMap<&[String], usize> = HashMap::new();
    let mut groups: Vec<PolyGroup> = Vec::new();
    for e in &entries {
        match index.get(e.char_poly.as_slice()) {
            Some(&i) => groups[i].count += 1,
            None => {
                index.insert(&e.char_poly, groups.len());
                groups.push(PolyGroup {
                    char_poly: e.char_poly.clone(),
                    spectral_radius: e.spectral_radius,
                    count: 1,
                    first: e.cycles.clone(),
                });
            }
        }
    }
    Ok(SweepReport {
        n,
        k,
        scope,
        total: entries.len(),
        entries,
        groups,
    })
}
