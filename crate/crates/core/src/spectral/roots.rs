//! Complex roots of integer polynomials by simultaneous Aberth-Ehrlich
//! iteration, refined by Newton steps on the original polynomial.

use num_complex::Complex64;

use super::poly::IntPolynomial;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 2000;
const STEP_TOLERANCE: f64 = 1e-15;

/// A root together with its relative residual `|q(r)| / sum |c_i| |r|^i`.
#[derive(Clone, Copy, Debug)]
pub struct Root {
    pub value: Complex64,
    pub residual: f64,
}

/// Distinct roots of `q`, sorted by decreasing modulus.
pub fn roots_by_modulus(q: &IntPolynomial) -> Result<Vec<Root>> {
    if q.degree() == 0 {
        return Ok(Vec::new());
    }
    let sf = q.square_free_part();
    let coeffs = sf.to_f64();
    let mut z = aberth(&coeffs)?;
    z.sort_by(|a, b| b.norm().total_cmp(&a.norm()));

    let original = q.to_f64();
    let out = z
        .into_iter()
        .map(|r| {
            let r = newton_polish(&coeffs, r, 8);
            Root {
                value: r,
                residual: relative_residual(&original, r),
            }
        })
        .collect();
    Ok(out)
}

/// Largest root modulus and its relative residual.
pub fn max_root_modulus(q: &IntPolynomial) -> Result<(f64, f64)> {
    let roots = roots_by_modulus(q)?;
    Ok(roots
        .first()
        .map(|r| (r.value.norm(), r.residual))
        .unwrap_or((0.0, 0.0)))
}

fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

pub(crate) fn relative_residual(c: &[f64], z: Complex64) -> f64 {
    let (p, _) = horner(c, z);
    let r = z.norm();
    let scale = c.iter().fold(0.0, |acc, a| acc * r + a.abs());
    if scale == 0.0 {
        0.0
    } else {
        p.norm() / scale
    }
}

/// Starting points on circles whose radii come from the upper convex hull
/// of `(i, log|c_i|)` (ascending powers), spread evenly in angle.
fn initial_guesses(c: &[f64]) -> Vec<Complex64> {
    let d = c.len() - 1;
    // ascending index i -> log|coefficient of z^i|
    let pts: Vec<(usize, f64)> = (0..=d)
        .filter_map(|i| {
            let a = c[d - i].abs();
            (a > 0.0).then(|| (i, a.ln()))
        })
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (i1, y1) = hull[hull.len() - 2];
            let (i2, y2) = hull[hull.len() - 1];
            let cross = (i2 - i1) as f64 * (p.1 - y1) - (p.0 - i1) as f64 * (y2 - y1);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut z = Vec::with_capacity(d);
    for w in hull.windows(2) {
        let (i1, y1) = w[0];
        let (i2, y2) = w[1];
        let m = i2 - i1;
        let radius = ((y1 - y2) / m as f64).exp();
        for j in 0..m {
            let theta = 2.0 * std::f64::consts::PI * (j as f64) / m as f64
                + 2.0 * std::f64::consts::PI * i2 as f64 / d as f64
                + 0.4;
            z.push(Complex64::from_polar(radius, theta));
        }
    }
    // zero roots are removed by square-freeness except a single z = 0
    while z.len() < d {
        z.push(Complex64::new(0.0, 0.0));
    }
    z
}

fn aberth(c: &[f64]) -> Result<Vec<Complex64>> {
    let d = c.len() - 1;
    if d == 1 {
        return Ok(vec![Complex64::new(-c[1] / c[0], 0.0)]);
    }
    let mut z = initial_guesses(c);
    let mut done = vec![false; d];
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let mut max_step = 0f64;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (p, dp) = horner(c, z[i]);
            if p.norm() == 0.0 {
                done[i] = true;
                continue;
            }
            let ratio = p / dp;
            let sum: Complex64 = (0..d)
                .filter(|&j| j != i)
                .map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if !w.is_finite() {
                continue;
            }
            z[i] -= w;
            let step = w.norm() / z[i].norm().max(f64::MIN_POSITIVE);
            if step < STEP_TOLERANCE {
                done[i] = true;
            }
            max_step = max_step.max(step);
        }
        last_step = max_step;
        if done.iter().all(|&x| x) {
            return Ok(z);
        }
    }
    // stalled steps are acceptable once every residual is at rounding level
    if z.iter().all(|&r| relative_residual(c, r) < 1e-12) {
        return Ok(z);
    }
    Err(Error::Convergence {
        iterations: MAX_ITERATIONS,
        last_step,
    })
}

fn newton_polish(c: &[f64], mut z: Complex64, steps: usize) -> Complex64 {
    for _ in 0..steps {
        let (p, dp) = horner(c, z);
        if dp.norm() == 0.0 {
            break;
        }
        let next = z - p / dp;
        if !next.is_finite() || relative_residual(c, next) > relative_residual(c, z) {
            break;
        }
        z = next;
    }
    z
}
