use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Polynomial with arbitrary-precision integer coefficients, stored in
/// descending degree with a nonzero leading coefficient. The zero polynomial
/// has no coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct IntPolynomial {
    coeffs: Vec<BigInt>,
}

impl IntPolynomial {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        let lead = coeffs.iter().position(|c| !c.is_zero()).unwrap_or(coeffs.len());
        coeffs.drain(..lead);
        IntPolynomial { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        IntPolynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_i64(&[1])
    }

    /// `x - r`.
    pub fn linear(r: i64) -> Self {
        Self::from_i64(&[1, -r])
    }

    /// Descending coefficients.
    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> BigInt {
        self.coeffs.first().cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.first().is_some_and(|c| c.is_one())
    }

    /// Coefficient of `x^i`.
    pub fn coeff(&self, i: usize) -> BigInt {
        if i > self.degree() || self.is_zero() {
            return BigInt::zero();
        }
        self.coeffs[self.degree() - i].clone()
    }

    /// Descending coefficients as decimal strings.
    pub fn to_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(|c| c.to_string()).collect()
    }

    pub fn from_strings<S: AsRef<str>>(items: &[S]) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(items.len());
        let mut offset = 0;
        for s in items {
            let t = s.as_ref().trim();
            coeffs.push(t.parse::<BigInt>().map_err(|_| Error::Parse {
                token: t.to_string(),
                position: offset,
                reason: "not an integer coefficient".into(),
            })?);
            offset += s.as_ref().len() + 1;
        }
        Ok(Self::new(coeffs))
    }

    pub fn content(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Divides out the content and makes the leading coefficient positive.
    pub fn primitive(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut g = self.content();
        if self.coeffs[0].is_negative() {
            g = -g;
        }
        IntPolynomial {
            coeffs: self.coeffs.iter().map(|c| c / &g).collect(),
        }
    }

    pub fn derivative(&self) -> Self {
        let d = self.degree();
        Self::new(
            self.coeffs
                .iter()
                .take(d)
                .enumerate()
                .map(|(i, c)| c * BigInt::from(d - i))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| acc.mul(self))
    }

    /// Pseudo-remainder of `self` by `d`: `lc(d)^e * self mod d` for some
    /// `e >= 0`, reduced to its primitive part. Zero iff `d | self` over Q.
    fn pseudo_remainder(&self, d: &Self) -> Self {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let mut r = self.clone();
        let dl = d.coeffs[0].clone();
        while !r.is_zero() && r.degree() >= d.degree() {
            let rl = r.coeffs[0].clone();
            let g = rl.gcd(&dl);
            let a = &dl / &g;
            let b = &rl / &g;
            let mut next: Vec<BigInt> = r.coeffs.iter().map(|c| c * &a).collect();
            for (i, c) in d.coeffs.iter().enumerate() {
                next[i] -= c * &b;
            }
            debug_assert!(next[0].is_zero());
            r = Self::new(next).primitive();
        }
        r
    }

    /// Whether `self` divides `q` over the rationals.
    pub fn divides(&self, q: &Self) -> bool {
        q.pseudo_remainder(self).is_zero()
    }

    /// Exact quotient `self / d` when it exists over the integers.
    pub fn div_exact(&self, d: &Self) -> Option<Self> {
        assert!(!d.is_zero(), "division by the zero polynomial");
        if self.is_zero() {
            return Some(Self::zero());
        }
        if self.degree() < d.degree() {
            return None;
        }
        let mut r = self.coeffs.clone();
        let qlen = self.degree() - d.degree() + 1;
        let mut q = Vec::with_capacity(qlen);
        for i in 0..qlen {
            let (c, rem) = r[i].div_rem(&d.coeffs[0]);
            if !rem.is_zero() {
                return None;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                r[i + j] -= &c * dc;
            }
            q.push(c);
        }
        r.iter().all(Zero::is_zero).then(|| Self::new(q))
    }

    /// Primitive greatest common divisor with positive leading coefficient.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = if self.degree() >= other.degree() {
            (self.primitive(), other.primitive())
        } else {
            (other.primitive(), self.primitive())
        };
        while !b.is_zero() {
            let r = a.pseudo_remainder(&b);
            a = b;
            b = r;
        }
        a.primitive()
    }

    /// Product of the distinct irreducible factors (primitive).
    pub fn square_free_part(&self) -> Self {
        if self.degree() < 1 {
            return self.primitive();
        }
        let g = self.gcd(&self.derivative());
        let p = self.primitive();
        if g.degree() == 0 {
            return p;
        }
        // primitive parts divide exactly by Gauss's lemma
        p.div_exact(&g).expect("gcd divides").primitive()
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, c| {
            acc * z + c.to_f64().unwrap_or(f64::NAN)
        })
    }

    pub fn eval_int(&self, x: &BigInt) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    /// Descending coefficients as `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    /// The conventional rendering in the variable `λ`, e.g.
    /// `λ^4 + λ^3 - 2λ^2 - 8λ - 8`.
    pub fn pretty(&self) -> String {
        self.render("λ")
    }

    pub fn render(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let d = self.degree();
        let mut out = String::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = d - i;
            let neg = c.is_negative();
            let abs = c.abs();
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if !abs.is_one() || e == 0 {
                out.push_str(&abs.to_string());
            }
            match e {
                0 => {}
                1 => out.push_str(var),
                _ => out.push_str(&format!("{var}^{e}")),
            }
        }
        out
    }
}

/// Comma-separated descending coefficients: `"1,1,-2,-8,-8"`.
impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_strings().join(","))
    }
}

impl FromStr for IntPolynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::zero());
        }
        let items: Vec<&str> = s.split(',').collect();
        Self::from_strings(&items)
    }
}
