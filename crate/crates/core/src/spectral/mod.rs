//! Characteristic polynomials and spectral radii of rational matrices.

mod charpoly;
mod poly;
mod roots;

pub use charpoly::{char_poly, charpoly_integer};
pub use poly::IntPolynomial;
pub use roots::{max_root_modulus, roots_by_modulus, Root};

use serde::Serialize;

use crate::linalg::QMatrix;
use crate::Result;

#[derive(Clone, Debug, Serialize)]
pub struct SpectralResult {
    /// Descending coefficients as decimal strings.
    pub char_poly: Vec<String>,
    pub spectral_radius: f64,
    pub dominant_root_residual: f64,
    #[serde(skip)]
    pub poly: IntPolynomial,
}

/// Exact characteristic polynomial and the largest root modulus.
pub fn spectral_radius(m: &QMatrix) -> Result<SpectralResult> {
    let poly = char_poly(m)?;
    let (radius, residual) = max_root_modulus(&poly)?;
    Ok(SpectralResult {
        char_poly: poly.to_strings(),
        spectral_radius: radius,
        dominant_root_residual: residual,
        poly,
    })
}

/// `p(M)` by Horner's rule.
pub fn eval_at_matrix(p: &IntPolynomial, m: &QMatrix) -> QMatrix {
    let d = m.nrows();
    let mut acc = QMatrix::zeros(d, d);
    for c in p.coeffs() {
        let prod = &acc * m;
        acc = prod.add_scaled_identity(&num_rational::BigRational::from_integer(c.clone()));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::{One, Zero};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Faddeev-LeVerrier over the rationals: independent of the modular path.
    fn faddeev(m: &QMatrix) -> Vec<BigRational> {
        let d = m.nrows();
        let mut c = vec![BigRational::one()];
        let mut mk = QMatrix::zeros(d, d);
        for k in 1..=d {
            let prev = c[k - 1].clone();
            let t = (m * &mk).add_scaled_identity(&prev);
            mk = t;
            let amk = m * &mk;
            let ck = -amk.trace() / BigRational::from_integer((k as i64).into());
            c.push(ck);
        }
        c
    }

    fn random_matrix(rng: &mut ChaCha8Rng, d: usize, den: i64) -> QMatrix {
        let mut m = QMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let v: i64 = rng.gen_range(-9..=9);
                m.set(i, j, BigRational::new(v.into(), den.into()));
            }
        }
        m
    }

    #[test]
    fn matches_faddeev_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..12 {
            let m = random_matrix(&mut rng, d, 1);
            let got = char_poly(&m).unwrap();
            let want: Vec<String> = faddeev(&m).iter().map(|c| c.to_integer().to_string()).collect();
            assert_eq!(got.to_strings(), want, "d = {d}");
        }
    }

    #[test]
    fn cayley_hamilton() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_matrix(&mut rng, 9, 1);
        let p = char_poly(&m).unwrap();
        assert!(eval_at_matrix(&p, &m).is_zero());
    }

    #[test]
    fn square_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(&mut rng, 7, 1);
        let r1 = spectral_radius(&m).unwrap().spectral_radius;
        let r2 = spectral_radius(&(&m * &m)).unwrap().spectral_radius;
        assert!((r2 - r1 * r1).abs() < 1e-8 * r2.max(1.0));
    }

    #[test]
    fn block_triangular_factors() {
        let a = QMatrix::from_i64_rows(&[vec![0, 1], vec![8, 1]]);
        let b = QMatrix::from_i64_rows(&[vec![2, 5, 1], vec![0, 1, 3], vec![1, 0, 0]]);
        let mut m = QMatrix::zeros(5, 5);
        for i in 0..2 {
            for j in 0..2 {
                m.set(i, j, a.get(i, j).clone());
            }
            for j in 2..5 {
                m.set(i, j, BigRational::from_integer(7.into()));
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                m.set(i + 2, j + 2, b.get(i, j).clone());
            }
        }
        let whole = char_poly(&m).unwrap();
        let parts = char_poly(&a).unwrap().mul(&char_poly(&b).unwrap());
        assert_eq!(whole, parts);
    }

    #[test]
    fn nalgebra_cross_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 8, 1);
        let ours = spectral_radius(&m).unwrap().spectral_radius;
        let f = m.to_f64();
        let na = nalgebra::DMatrix::from_row_slice(8, 8, &f);
        let theirs = na
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!((ours - theirs).abs() < 1e-7 * theirs.max(1.0));
    }

    #[test]
    fn zero_matrix() {
        let r = spectral_radius(&QMatrix::zeros(3, 3)).unwrap();
        assert_eq!(r.char_poly, vec!["1", "0", "0", "0"]);
        assert!(r.spectral_radius.is_zero());
    }
}
