use m0n_core::combinat::Permutation;
use m0n_core::linalg::QMatrix;
use m0n_core::pullback::DynamicsContext;
use m0n_core::spectral::{char_poly, IntPolynomial};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 2] = [1_000_000_007, 998_244_353];

fn mod_p(x: &BigInt, p: u64) -> u64 {
    let r = x % BigInt::from(p);
    let r = if r < BigInt::from(0) { r + p } else { r };
    r.to_u64().unwrap()
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * b as u128 % p as u128) as u64;
        }
        b = (b as u128 * b as u128 % p as u128) as u64;
        e >>= 1;
    }
    acc
}

/// Entries of `m` in `Z/p`; every denominator is a unit there.
fn reduce_matrix(m: &QMatrix, p: u64) -> Vec<Vec<u64>> {
    (0..m.nrows())
        .map(|i| {
            m.row(i)
                .iter()
                .map(|x| {
                    let den = mod_p(x.denom(), p);
                    assert_ne!(den, 0);
                    let inv = pow_mod(den, p - 2, p);
                    (mod_p(x.numer(), p) as u128 * inv as u128 % p as u128) as u64
                })
                .collect()
        })
        .collect()
}

/// `q(M) mod p` by Horner.
fn eval_mod_p(q: &IntPolynomial, m: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let d = m.len();
    let mut acc = vec![vec![0u64; d]; d];
    for c in q.coeffs() {
        let mut next = vec![vec![0u64; d]; d];
        for i in 0..d {
            for k in 0..d {
                if acc[i][k] == 0 {
                    continue;
                }
                for j in 0..d {
                    next[i][j] = ((next[i][j] as u128 + acc[i][k] as u128 * m[k][j] as u128) % p as u128) as u64;
                }
            }
        }
        let c = mod_p(c, p);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] = (row[i] + c) % p;
        }
        acc = next;
    }
    acc
}

fn random_perm(rng: &mut ChaCha8Rng, n: usize) -> Permutation {
    let mut images: Vec<usize> = (1..=n).collect();
    images.shuffle(rng);
    Permutation::from_images(&images).unwrap()
}

#[test]
fn conjugation_fixing_two_points_preserves_char_poly() {
    let ctx = DynamicsContext::new(5, 1).unwrap();
    // sigma fixes 1 and 2, so it commutes with the squaring map's symmetry
    let sigmas: Vec<Permutation> = Permutation::all(5)
        .into_iter()
        .filter(|s| s.apply(1) == 1 && s.apply(2) == 2)
        .collect();
    assert_eq!(sigmas.len(), 6);
    for rho in Permutation::all(5) {
        let base = char_poly(&ctx.f_pullback(&rho).unwrap().entries).unwrap();
        for sigma in &sigmas {
            let conj = sigma.compose(&rho).compose(&sigma.inverse());
            let p = char_poly(&ctx.f_pullback(&conj).unwrap().entries).unwrap();
            assert_eq!(p, base, "rho = {rho}, sigma = {sigma}");
        }
    }
}

#[test]
fn cayley_hamilton_mod_primes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (n, k, trials) in [(5, 1, 6), (6, 1, 6), (6, 2, 6), (7, 1, 3), (8, 1, 2)] {
        let ctx = DynamicsContext::new(n, k).unwrap();
        for _ in 0..trials {
            let rho = random_perm(&mut rng, n);
            let f = ctx.f_pullback(&rho).unwrap().entries;
            let q = char_poly(&f).unwrap();
            assert_eq!(q.degree(), ctx.dim());
            assert!(q.is_monic());
            for p in PRIMES {
                let m = reduce_matrix(&f, p);
                let z = eval_mod_p(&q, &m, p);
                assert!(z.iter().flatten().all(|&x| x == 0), "n={n} k={k} rho={rho} p={p}");
            }
        }
    }
}

#[test]
fn trace_matches_second_coefficient() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ctx = DynamicsContext::new(7, 1).unwrap();
    for _ in 0..10 {
        let f = ctx.f_pullback(&random_perm(&mut rng, 7)).unwrap().entries;
        let q = char_poly(&f).unwrap();
        let tr = f.trace();
        assert!(tr.is_integer());
        assert_eq!(q.coeff(q.degree() - 1), -tr.to_integer());
    }
}

/// Fails: 720 maps at n = 7 have degrees outside the tabulated set.
#[test]
#[ignore = "known incomplete table at n = 7; run with --ignored"]
fn strict_n7_completeness() {
    use m0n_core::verify::{sweep, ContextPool, Scope};
    let report = sweep(7, 1, Scope::All, false, &ContextPool::default()).unwrap();
    report.check().unwrap();
}
