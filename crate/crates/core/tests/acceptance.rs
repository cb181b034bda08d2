//! Acceptance suite. Prints one line per criterion and exits nonzero on any
//! unexpected outcome. Set `M0N_SLOW=1` for the optional n = 8 H^{2,2} gate.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use m0n_core::combinat::{compatible, enumerate_divisors, enumerate_strata, Permutation};
use m0n_core::keel::{Basis, ClassVector, Limits, Quotient, RelationSpace};
use m0n_core::linalg::QMatrix;
use m0n_core::pullback::{s_pullback_h11, s_pullback_h22_x3};
use m0n_core::spectral::{char_poly, eval_at_matrix, max_root_modulus, spectral_radius, IntPolynomial};
use m0n_core::verify::{records, sweep, verify_table, Certificate, ContextPool, Match, Scope, TableId};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Radius agreement with tabulated values, which are truncated to 7-8 digits.
const TABLE_TOL: f64 = 1e-6;
/// Agreement between two computations of the same radius.
const INTERNAL_TOL: f64 = 1e-7;

type Check = Result<String, String>;

struct Criterion {
    id: &'static str,
    title: &'static str,
    budget: Duration,
    /// Set when the criterion is known not to hold; the text names the reason.
    known_failure: Option<&'static str>,
    run: fn(&ContextPool) -> Check,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn double_factorial(mut m: u64) -> u64 {
    let mut acc = 1;
    while m > 1 {
        acc *= m;
        m -= 2;
    }
    acc
}

fn c01_dimensions(_: &ContextPool) -> Check {
    let mut h11 = Vec::new();
    for (n, want) in [(5, 5), (6, 16), (7, 42), (8, 99)] {
        let got = RelationSpace::degree1(n).map_err(e)?.corank();
        ensure(got == want, || format!("H11 n={n}: {got} != {want}"))?;
        h11.push(got);
    }
    let mut h22 = Vec::new();
    let mut want22 = vec![(5, 1), (6, 16), (7, 127)];
    if std::env::var_os("M0N_SLOW").is_some() {
        want22.push((8, 715));
    }
    for (n, want) in want22 {
        let got = RelationSpace::degree2(n, &Limits::default()).map_err(e)?.corank();
        ensure(got == want, || format!("H22 n={n}: {got} != {want}"))?;
        h22.push(got);
    }
    Ok(format!("H11 {h11:?}, H22 {h22:?}"))
}

fn c02_strata_counts(_: &ContextPool) -> Check {
    let mut divs = Vec::new();
    for (n, want) in [(5, 10), (6, 25), (7, 56), (8, 119)] {
        let got = enumerate_divisors(n).len();
        ensure(got == want && got == (1 << (n - 1)) - n - 1, || format!("divisors n={n}: {got}"))?;
        divs.push(got);
    }
    // brute force: all (n-3)-subsets of divisors that are pairwise compatible
    let mut tops = Vec::new();
    for n in [5usize, 6] {
        let ds = enumerate_divisors(n);
        let k = n - 3;
        let mut count = 0u64;
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let ok = idx
                .iter()
                .enumerate()
                .all(|(a, &i)| idx[a + 1..].iter().all(|&j| compatible(&ds[i], &ds[j])));
            count += ok as u64;
            // next combination
            let mut p = k;
            while p > 0 && idx[p - 1] == ds.len() - k + p - 1 {
                p -= 1;
            }
            if p == 0 {
                break;
            }
            idx[p - 1] += 1;
            for q in p..k {
                idx[q] = idx[q - 1] + 1;
            }
        }
        let enumerated = enumerate_strata(n, k).len() as u64;
        let want = double_factorial(2 * n as u64 - 5);
        ensure(count == want && enumerated == want, || {
            format!("top strata n={n}: brute {count}, enumerated {enumerated}, want {want}")
        })?;
        tops.push(count);
    }
    Ok(format!("divisors {divs:?}, top strata {tops:?}"))
}

fn c03_s_structure(_: &ContextPool) -> Check {
    for n in 5..=8 {
        let basis = Basis::b1(n).map_err(e)?;
        let s = s_pullback_h11(n);
        let d = basis.len();
        let mut ramified = 0;
        for (i, z) in basis.elements().iter().enumerate() {
            let r = z.divisors()[0].is_ramified();
            ramified += r as usize;
            for j in 0..d {
                let want = if i != j { 0 } else if r { 2 } else { 1 };
                ensure(*s.get(i, j) == BigRational::from_integer(want.into()), || {
                    format!("s* H11 n={n} entry ({i},{j})")
                })?;
            }
        }
        let want = (1usize << (n - 2)) - n + 1;
        ensure(ramified == want, || format!("n={n}: {ramified} ramified basis divisors, want {want}"))?;
    }
    let mut rows = vec![vec![0i64; 16]; 16];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = [4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 2, 2, 2, 2, 1][i];
    }
    rows[13][15] = 1;
    rows[14][15] = 1;
    ensure(s_pullback_h22_x3() == QMatrix::from_i64_rows(&rows), || "s* on H22 differs".into())?;
    let expect = IntPolynomial::linear(4)
        .pow(11)
        .mul(&IntPolynomial::linear(2).pow(4))
        .mul(&IntPolynomial::linear(1));
    let got = char_poly(&s_pullback_h22_x3()).map_err(e)?;
    ensure(got == expect, || format!("H22 s* char poly {}", got.pretty()))?;
    Ok("H11 diag for n=5..8, H22 matrix and (λ-4)^11 (λ-2)^4 (λ-1)".into())
}

fn table(id: TableId, pool: &ContextPool) -> Check {
    let report = verify_table(id, pool).map_err(e)?;
    let errata: Vec<&str> = report
        .rows
        .iter()
        .filter(|r| r.certificate == Certificate::Erratum)
        .map(|r| r.key.as_str())
        .collect();
    let worst = report.rows.iter().map(|r| r.radius_error).fold(0.0, f64::max);
    if !report.all_pass() {
        return Err(report.to_text());
    }
    ensure(worst <= TABLE_TOL, || format!("radius error {worst:e}"))?;
    let mut msg = format!("{}/{} rows, max |Δ| {:.1e}", report.passed(), report.rows.len(), worst);
    if !errata.is_empty() {
        msg.push_str(&format!(", corrected polynomial used for {}", errata.join(" ")));
    }
    Ok(msg)
}

fn c04(pool: &ContextPool) -> Check {
    table(TableId::T1, pool)
}

fn c05(pool: &ContextPool) -> Check {
    let msg = table(TableId::TN3, pool)?;
    let six = records()
        .iter()
        .find(|r| r.table == TableId::TN3 && r.k == 2 && r.cycles.replace(' ', "") == "(123456)")
        .ok_or("no 6-cycle λ2 row")?;
    ensure(six.effective_poly().degree() == 14, || "6-cycle λ2 factor is not degree 14".into())?;
    Ok(format!("{msg}, λ2 of the 6-cycle via its degree-14 factor"))
}

fn c06(pool: &ContextPool) -> Check {
    table(TableId::TN4, pool)
}

fn c07(pool: &ContextPool) -> Check {
    table(TableId::TN5, pool)
}

fn sweep_line(n: usize, k: usize, pool: &ContextPool) -> Check {
    let r = sweep(n, k, Scope::All, false, pool).map_err(e)?;
    let oob = r.out_of_bounds().len();
    ensure(oob == 0, || format!("{oob} maps break the norm bound"))?;
    let unmatched = r.unmatched();
    if !unmatched.is_empty() {
        let mut classes: BTreeMap<String, usize> = BTreeMap::new();
        for u in &unmatched {
            *classes.entry(format!("{:.9}", u.spectral_radius)).or_default() += 1;
        }
        return Err(format!(
            "{}/{} maps unmatched, by radius {:?}",
            unmatched.len(),
            r.total,
            classes
        ));
    }
    Ok(format!(
        "{} maps: {} trivial, {} tabulated degrees",
        r.total,
        r.trivial_count(),
        r.distinct_degrees().len()
    ))
}

fn c08a(pool: &ContextPool) -> Check {
    sweep_line(5, 1, pool)
}

fn c08b(pool: &ContextPool) -> Check {
    sweep_line(6, 1, pool)
}

fn c08c(pool: &ContextPool) -> Check {
    sweep_line(6, 2, pool)
}

fn c08d(pool: &ContextPool) -> Check {
    sweep_line(7, 1, pool)
}

/// Integer entries mod p; every denominator is a unit mod these primes.
fn reduce_mod(m: &QMatrix, p: u64) -> Vec<Vec<u64>> {
    let pb = BigInt::from(p);
    let red = |x: &BigInt| -> u64 { (((x % &pb) + &pb) % &pb).to_u64().unwrap() };
    let inv = |a: u64| -> u64 {
        let (mut acc, mut b, mut ex) = (1u128, a as u128, (p - 2) as u128);
        while ex > 0 {
            if ex & 1 == 1 {
                acc = acc * b % p as u128;
            }
            b = b * b % p as u128;
            ex >>= 1;
        }
        acc as u64
    };
    (0..m.nrows())
        .map(|i| {
            m.row(i)
                .iter()
                .map(|x| (red(x.numer()) as u128 * inv(red(x.denom())) as u128 % p as u128) as u64)
                .collect()
        })
        .collect()
}

fn cayley_hamilton_mod(q: &IntPolynomial, m: &QMatrix) -> bool {
    [1_000_000_007u64, 998_244_353].iter().all(|&p| {
        let a = reduce_mod(m, p);
        let d = a.len();
        let pb = BigInt::from(p);
        let mut acc = vec![vec![0u64; d]; d];
        for c in q.coeffs() {
            let mut next = vec![vec![0u64; d]; d];
            for i in 0..d {
                for k in 0..d {
                    let x = acc[i][k] as u128;
                    if x != 0 {
                        for j in 0..d {
                            next[i][j] = ((next[i][j] as u128 + x * a[k][j] as u128) % p as u128) as u64;
                        }
                    }
                }
            }
            let c = (((c % &pb) + &pb) % &pb).to_u64().unwrap();
            for (i, row) in next.iter_mut().enumerate() {
                row[i] = (row[i] + c) % p;
            }
            acc = next;
        }
        acc.iter().flatten().all(|&x| x == 0)
    })
}

fn random_perm(rng: &mut ChaCha8Rng, n: usize) -> Permutation {
    let mut images: Vec<usize> = (1..=n).collect();
    images.shuffle(rng);
    Permutation::from_images(&images).unwrap()
}

fn c09_properties(pool: &ContextPool) -> Check {
    let mut notes = Vec::new();

    // Cayley-Hamilton on every pullback matrix at n = 5, 6 and on every table row
    let mut checked = 0usize;
    for (n, k) in [(5, 1), (6, 1), (6, 2)] {
        let ctx = pool.get(n, k).map_err(e)?;
        let bad: Vec<String> = Permutation::all(n)
            .par_iter()
            .filter_map(|rho| {
                let mats = [
                    ctx.g_pullback(rho).map(|m| m.entries),
                    ctx.f_pullback(rho).map(|m| m.entries),
                ];
                for m in mats {
                    let m = match m {
                        Ok(m) => m,
                        Err(err) => return Some(err.to_string()),
                    };
                    match char_poly(&m) {
                        Ok(q) if cayley_hamilton_mod(&q, &m) => {}
                        _ => return Some(format!("n={n} k={k} {rho}")),
                    }
                }
                None
            })
            .collect();
        ensure(bad.is_empty(), || format!("Cayley-Hamilton fails: {bad:?}"))?;
        checked += 2 * Permutation::all(n).len();
    }
    for rec in records() {
        let ctx = pool.get(rec.n, rec.k).map_err(e)?;
        let f = ctx.f_pullback(&rec.permutation().map_err(e)?).map_err(e)?.entries;
        let sr = spectral_radius(&f).map_err(e)?;
        ensure(cayley_hamilton_mod(&sr.poly, &f), || format!("Cayley-Hamilton fails on {}", rec.key))?;
        // radius from the matrix and from the certified factor
        let (root, _) = max_root_modulus(rec.effective_poly()).map_err(e)?;
        ensure((root - sr.spectral_radius).abs() <= INTERNAL_TOL, || {
            format!("{}: factor root {root} vs matrix radius {}", rec.key, sr.spectral_radius)
        })?;
        // power compatibility
        let sq = spectral_radius(&(&f * &f)).map_err(e)?.spectral_radius;
        let r2 = sr.spectral_radius * sr.spectral_radius;
        ensure(((sq - r2) / r2).abs() <= 1e-6, || format!("{}: radius of square {sq} vs {r2}", rec.key))?;
        checked += 1;
    }
    notes.push(format!("Cayley-Hamilton on {checked} matrices"));

    // exact Cayley-Hamilton on random 5x5 rational matrices D^-1 A D, A
    // integral, so the char poly stays integral
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let scale: Vec<i64> = (0..5).map(|_| rng.gen_range(1..=7)).collect();
        let mut m = QMatrix::zeros(5, 5);
        for i in 0..5 {
            for j in 0..5 {
                let a: i64 = rng.gen_range(-9..=9);
                m.set(i, j, BigRational::new((a * scale[j]).into(), scale[i].into()));
            }
        }
        let q = char_poly(&m).map_err(e)?;
        ensure(eval_at_matrix(&q, &m).is_zero(), || "Cayley-Hamilton fails on a random matrix".into())?;
    }

    // contravariance and invertibility of g* at n = 6
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 1..=2 {
        let ctx = pool.get(6, k).map_err(e)?;
        let d = ctx.dim();
        for _ in 0..40 {
            let rho = random_perm(&mut rng, 6);
            let sigma = random_perm(&mut rng, 6);
            let g = |p: &Permutation| ctx.g_pullback(p).map(|m| m.entries).map_err(e);
            ensure(g(&rho.compose(&sigma))? == &g(&sigma)? * &g(&rho)?, || {
                format!("g* not contravariant for {rho}, {sigma} at k={k}")
            })?;
            ensure(&g(&rho)? * &g(&rho.inverse())? == QMatrix::identity(d), || {
                format!("g*({rho}) not inverted by g*({})", rho.inverse())
            })?;
        }
    }
    notes.push("g* functorial at n=6".into());

    // conjugacy invariance, exhaustive at n = 5
    let ctx = pool.get(5, 1).map_err(e)?;
    let sigmas: Vec<Permutation> = Permutation::all(5)
        .into_iter()
        .filter(|s| s.apply(1) == 1 && s.apply(2) == 2)
        .collect();
    for rho in Permutation::all(5) {
        let base = char_poly(&ctx.f_pullback(&rho).map_err(e)?.entries).map_err(e)?;
        for s in &sigmas {
            let conj = s.compose(&rho).compose(&s.inverse());
            let q = char_poly(&ctx.f_pullback(&conj).map_err(e)?.entries).map_err(e)?;
            ensure(q == base, || format!("conjugating {rho} by {s} changes the char poly"))?;
        }
    }
    notes.push(format!("conjugacy over 120x{}", sigmas.len()));

    // linearity of reduction
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 1..=2 {
        let ctx = pool.get(6, k).map_err(e)?;
        let q = ctx.quotient();
        let strata = q.relations().strata();
        for _ in 0..50 {
            let mut v = ClassVector::zero(6, k);
            let mut expect = vec![BigRational::zero(); q.dim()];
            for _ in 0..rng.gen_range(1..8) {
                let c = BigRational::new(rng.gen_range(-9i64..=9).into(), rng.gen_range(1i64..=7).into());
                let z = &strata[rng.gen_range(0..strata.len())];
                v.add_term(z.clone(), c.clone());
                for (x, y) in expect.iter_mut().zip(q.reduce_stratum(z).map_err(e)?) {
                    *x += &c * y;
                }
            }
            ensure(q.reduce(&v).map_err(e)? == expect, || format!("reduction not linear at k={k}"))?;
        }
    }
    notes.push("reduction linear".into());

    // cache round trip
    let dir = tempfile::tempdir().map_err(e)?;
    for (n, k) in [(6, 1), (6, 2), (7, 1)] {
        let fresh = RelationSpace::build(n, k, &Limits::default()).map_err(e)?;
        let path = RelationSpace::cache_path(dir.path(), n, k);
        fresh.save(&path).map_err(e)?;
        let bytes = std::fs::read(&path).map_err(e)?;
        let loaded = RelationSpace::load(&path, n, k).map_err(e)?;
        ensure(loaded == fresh, || format!("cache n={n} k={k} differs after load"))?;
        loaded.save(&path).map_err(e)?;
        ensure(std::fs::read(&path).map_err(e)? == bytes, || format!("cache n={n} k={k} not bit-identical"))?;
        let basis = if k == 1 { Basis::b1(n).map_err(e)? } else { Basis::b2_x3() };
        let a = Quotient::new(fresh, basis.clone()).map_err(e)?;
        let b = Quotient::new(loaded, basis).map_err(e)?;
        ensure(a.reduction_table() == b.reduction_table(), || "reduction tables differ".into())?;
    }
    notes.push("cache bit-identical".into());
    Ok(notes.join(", "))
}

fn c10_factor_degree(pool: &ContextPool) -> Check {
    let r = sweep(6, 1, Scope::All, false, pool).map_err(e)?;
    let mut max_deg = 0;
    let mut certified = 0;
    for entry in &r.entries {
        if let Match::Matched(key) = &entry.matched {
            let rec = records().iter().find(|x| &x.key == key).ok_or("unknown record")?;
            let d = rec.effective_poly().degree();
            ensure(d <= 6, || format!("{}: certified factor of degree {d}", entry.cycles))?;
            max_deg = max_deg.max(d);
            certified += 1;
        }
    }
    ensure(certified > 0, || "no certified rows".into())?;
    Ok(format!("{certified} maps with a certified factor, max degree {max_deg}"))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: "1", title: "cohomology dimensions", budget: Duration::from_secs(130), known_failure: None, run: c01_dimensions },
        Criterion { id: "2", title: "divisor and top strata counts", budget: Duration::from_secs(10), known_failure: None, run: c02_strata_counts },
        Criterion { id: "3", title: "s* structure", budget: Duration::from_secs(10), known_failure: None, run: c03_s_structure },
        Criterion { id: "4", title: "n=5 table", budget: Duration::from_secs(5), known_failure: None, run: c04 },
        Criterion { id: "5", title: "n=6 table (λ1 and λ2)", budget: Duration::from_secs(30), known_failure: None, run: c05 },
        Criterion { id: "6", title: "n=7 table", budget: Duration::from_secs(60), known_failure: None, run: c06 },
        Criterion { id: "7", title: "n=8 cyclic table", budget: Duration::from_secs(120), known_failure: None, run: c07 },
        Criterion { id: "8a", title: "sweep n=5 k=1", budget: Duration::from_secs(60), known_failure: None, run: c08a },
        Criterion { id: "8b", title: "sweep n=6 k=1", budget: Duration::from_secs(120), known_failure: None, run: c08b },
        Criterion { id: "8c", title: "sweep n=6 k=2", budget: Duration::from_secs(120), known_failure: None, run: c08c },
        Criterion {
            id: "8d",
            title: "sweep n=7 k=1",
            budget: Duration::from_secs(600),
            known_failure: Some(
                "720 maps in three conjugacy-stable classes have degrees 2.346155041, 2.414459343 and 2.584132243, none tabulated",
            ),
            run: c08d,
        },
        Criterion { id: "9", title: "property suites", budget: Duration::from_secs(300), known_failure: None, run: c09_properties },
        Criterion { id: "10", title: "certified factor degree at n=6", budget: Duration::from_secs(120), known_failure: None, run: c10_factor_degree },
    ];

    let pool = ContextPool::default();
    let mut unexpected = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)(&pool);
        let took = start.elapsed();
        let slow = took > c.budget;
        let (status, detail) = match (&outcome, c.known_failure) {
            (Ok(msg), None) if !slow => ("PASS", msg.clone()),
            (Ok(msg), None) => {
                unexpected += 1;
                ("FAIL", format!("{msg}; over budget {:?}", c.budget))
            }
            (Ok(msg), Some(_)) => {
                unexpected += 1;
                ("XPASS", format!("{msg}; expected failure no longer fails"))
            }
            (Err(err), Some(why)) if known_pattern(c.id, err) => {
                ("FAIL", format!("known: {why}; {err}"))
            }
            (Err(err), _) => {
                unexpected += 1;
                ("FAIL", err.clone())
            }
        };
        println!("criterion {:<3} {:<5} {:<32} {:>8.2?}  {}", c.id, status, c.title, took, detail);
    }
    if unexpected == 0 {
        println!("acceptance: no unexpected outcomes");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {unexpected} unexpected outcome(s)");
        ExitCode::FAILURE
    }
}

/// A known failure only counts as expected when it fails the analyzed way.
fn known_pattern(id: &str, err: &str) -> bool {
    match id {
        "8d" => {
            err.starts_with("720/5040 maps unmatched")
                && ["2.346155041", "2.414459343", "2.584132243"]
                    .iter()
                    .all(|r| err.contains(&format!("\"{r}\": 240")))
        }
        _ => false,
    }
}
