//! Exact characteristic polynomials by Hessenberg reduction modulo word-size
//! primes and Chinese remaindering.
//!
//! Every eigenvalue of an integer matrix `A` is bounded by the largest
//! absolute row sum `R`, so the coefficient of `x^{d-k}` is at most
//! `C(d, k) R^k` in absolute value. Primes are added until their product
//! exceeds twice that bound, which makes the symmetric lift exact.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::poly::IntPolynomial;
use crate::error::{Error, Result};
use crate::linalg::QMatrix;

/// `det(x I - M)`, verified integral.
pub fn char_poly(m: &QMatrix) -> Result<IntPolynomial> {
    assert!(m.is_square(), "characteristic polynomial of a non-square matrix");
    let d = m.nrows();
    let scale = m.denominator_lcm();
    let a = m.scaled_integers(&scale);
    let scaled = charpoly_integer(&a, d);
    if scale.is_one() {
        return Ok(IntPolynomial::new(scaled));
    }
    // coefficient of x^{d-k} picks up scale^k
    let mut out = Vec::with_capacity(d + 1);
    let mut power = BigInt::one();
    for (k, c) in scaled.into_iter().enumerate() {
        let q = BigRational::new(c, power.clone());
        if !q.is_integer() {
            return Err(Error::NonIntegralCharPoly {
                degree: d - k,
                value: q.to_string(),
            });
        }
        out.push(q.to_integer());
        power *= &scale;
    }
    Ok(IntPolynomial::new(out))
}

/// Descending coefficients of `det(x I - A)` for a row-major integer matrix.
pub fn charpoly_integer(a: &[BigInt], d: usize) -> Vec<BigInt> {
    assert_eq!(a.len(), d * d);
    if d == 0 {
        return vec![BigInt::one()];
    }
    let bits = coefficient_bits(a, d);
    let mut modulus = BigInt::one();
    let mut acc: Vec<BigInt> = vec![BigInt::zero(); d + 1];
    let mut primes = PrimeStream::new();
    while (modulus.bits() as f64) < bits {
        let p = primes.next_prime();
        let reduced: Vec<u64> = a.iter().map(|x| reduce_mod(x, p)).collect();
        let residues = charpoly_mod_p(&reduced, d, p);
        crt_accumulate(&mut acc, &modulus, &residues, p);
        modulus *= BigInt::from(p);
    }
    let half = &modulus >> 1;
    acc.into_iter()
        .map(|c| if c > half { c - &modulus } else { c })
        .collect()
}

/// `log2` of twice the coefficient bound, plus slack.
fn coefficient_bits(a: &[BigInt], d: usize) -> f64 {
    let mut row_max = 0f64;
    for i in 0..d {
        let s: BigInt = a[i * d..(i + 1) * d].iter().map(|x| x.abs()).sum();
        row_max = row_max.max(big_log2(&s));
    }
    // max_k log2(C(d,k)) + k log2(R)
    let mut best = 0f64;
    let mut log_binom = 0f64;
    for k in 0..=d {
        if k > 0 {
            log_binom += ((d - k + 1) as f64).log2() - (k as f64).log2();
        }
        let r = if row_max == f64::NEG_INFINITY { 0.0 } else { row_max };
        best = best.max(log_binom + k as f64 * r.max(0.0));
    }
    best + 4.0
}

fn big_log2(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits < 1000 {
        x.to_f64().unwrap().log2()
    } else {
        let shifted: BigInt = x >> (bits - 64);
        shifted.to_f64().unwrap().log2() + (bits - 64) as f64
    }
}

fn reduce_mod(x: &BigInt, p: u64) -> u64 {
    let r = x.mod_floor(&BigInt::from(p));
    r.to_u64().unwrap()
}

/// Garner step: fold residues modulo `p` into values known modulo `m`.
fn crt_accumulate(acc: &mut [BigInt], m: &BigInt, residues: &[u64], p: u64) {
    let bp = BigInt::from(p);
    let m_mod_p = reduce_mod(m, p);
    let inv = mod_inv(m_mod_p, p);
    for (x, &r) in acc.iter_mut().zip(residues) {
        let x_mod_p = reduce_mod(x, p);
        let delta = (r + p - x_mod_p) % p;
        let t = mul_mod(delta, inv, p);
        *x += m * BigInt::from(t);
        debug_assert!(*x < m * &bp);
    }
}

#[inline]
fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

#[inline]
fn mod_inv(a: u64, p: u64) -> u64 {
    debug_assert!(!a.is_multiple_of(p));
    pow_mod(a, p - 2, p)
}

/// Descending coefficients of the characteristic polynomial of `a` over
/// `Z/p`, via reduction to upper Hessenberg form.
pub(crate) fn charpoly_mod_p(a: &[u64], d: usize, p: u64) -> Vec<u64> {
    let mut h = a.to_vec();
    let at = |i: usize, j: usize| i * d + j;
    for m in 1..d.saturating_sub(1) {
        let Some(piv) = (m..d).find(|&i| h[at(i, m - 1)] != 0) else {
            continue;
        };
        if piv != m {
            for j in 0..d {
                h.swap(at(piv, j), at(m, j));
            }
            for i in 0..d {
                h.swap(at(i, piv), at(i, m));
            }
        }
        let inv = mod_inv(h[at(m, m - 1)], p);
        for i in m + 1..d {
            let u = mul_mod(h[at(i, m - 1)], inv, p);
            if u == 0 {
                continue;
            }
            for j in 0..d {
                let s = mul_mod(u, h[at(m, j)], p);
                h[at(i, j)] = (h[at(i, j)] + p - s) % p;
            }
            for r in 0..d {
                let s = mul_mod(u, h[at(r, i)], p);
                h[at(r, m)] = (h[at(r, m)] + s) % p;
            }
        }
    }

    // polys[m] is the characteristic polynomial of the leading m x m block,
    // ascending coefficients
    let mut polys: Vec<Vec<u64>> = Vec::with_capacity(d + 1);
    polys.push(vec![1]);
    for m in 1..=d {
        let hm = h[at(m - 1, m - 1)];
        let prev = &polys[m - 1];
        let mut next = vec![0u64; m + 1];
        for (i, &c) in prev.iter().enumerate() {
            next[i + 1] = (next[i + 1] + c) % p;
            next[i] = (next[i] + p - mul_mod(hm, c, p)) % p;
        }
        let mut t = 1u64;
        for i in (1..m).rev() {
            t = mul_mod(t, h[at(i, i - 1)], p);
            if t == 0 {
                break;
            }
            let coef = mul_mod(h[at(i - 1, m - 1)], t, p);
            if coef == 0 {
                continue;
            }
            for (j, &c) in polys[i - 1].iter().enumerate() {
                next[j] = (next[j] + p - mul_mod(coef, c, p)) % p;
            }
        }
        polys.push(next);
    }
    let mut out = polys.pop().unwrap();
    out.reverse();
    out
}

/// Primes just below `2^62`, in decreasing order.
struct PrimeStream {
    next: u64,
}

impl PrimeStream {
    fn new() -> Self {
        PrimeStream { next: (1u64 << 62) - 1 }
    }

    fn next_prime(&mut self) -> u64 {
        loop {
            let c = self.next;
            self.next -= 2;
            if is_prime_u64(c) {
                return c;
            }
        }
    }
}

/// Deterministic Miller-Rabin for 64-bit integers.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
