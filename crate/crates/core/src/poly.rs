//! Dense univariate polynomials and an all-roots finder.
//!
//! Coefficients are stored lowest degree first.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::C64;

/// Polynomial with real coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RealPoly(pub Vec<f64>);

impl RealPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        RealPoly(coeffs)
    }

    pub fn constant(c: f64) -> Self {
        RealPoly(vec![c])
    }

    /// `c * z^k`.
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut v = vec![0.0; k + 1];
        v[k] = c;
        RealPoly(v)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    /// Index of the highest stored coefficient, ignoring exact zeros.
    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|c| *c != 0.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        RealPoly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.0
            .iter()
            .rev()
            .fold(C64::zero(), |acc, &c| acc * z + c)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn to_complex(&self) -> Vec<C64> {
        self.0.iter().map(|&c| C64::new(c, 0.0)).collect()
    }
}

impl Add for &RealPoly {
    type Output = RealPoly;
    fn add(self, rhs: &RealPoly) -> RealPoly {
        let n = self.0.len().max(rhs.0.len());
        let mut out = vec![0.0; n];
        for (i, c) in self.0.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in rhs.0.iter().enumerate() {
            out[i] += c;
        }
        RealPoly(out)
    }
}

impl Sub for &RealPoly {
    type Output = RealPoly;
    fn sub(self, rhs: &RealPoly) -> RealPoly {
        self + &(-rhs)
    }
}

impl Neg for &RealPoly {
    type Output = RealPoly;
    fn neg(self) -> RealPoly {
        self.scale(-1.0)
    }
}

impl Mul for &RealPoly {
    type Output = RealPoly;
    fn mul(self, rhs: &RealPoly) -> RealPoly {
        if self.0.is_empty() || rhs.0.is_empty() {
            return RealPoly::default();
        }
        let mut out = vec![0.0; self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RealPoly(out)
    }
}

/// Horner evaluation of a complex polynomial together with its derivative
/// and the backward-error scale `sum |c_i| |z|^i`.
pub fn eval_with_scale(coeffs: &[C64], z: C64) -> (C64, C64, f64) {
    let r = z.norm();
    let mut p = C64::zero();
    let mut dp = C64::zero();
    let mut s = 0.0;
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
        s = s * r + c.norm();
    }
    (p, dp, s)
}

/// Relative backward error `|p(z)| / sum |c_i| |z|^i`.
pub fn backward_error(coeffs: &[C64], z: C64) -> f64 {
    let (p, _, s) = eval_with_scale(coeffs, z);
    if s == 0.0 {
        0.0
    } else {
        p.norm() / s
    }
}

/// Drops trailing coefficients below `rel_tol * max |c|`.
pub fn truncate(coeffs: &[C64], rel_tol: f64) -> Vec<C64> {
    let max = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
    let keep = coeffs
        .iter()
        .rposition(|c| c.norm() > rel_tol * max)
        .map_or(0, |i| i + 1);
    coeffs[..keep].to_vec()
}

/// Divides out the factor `(z - root)`, discarding the remainder.
///
/// Forward (top-down) division is stable for `|root| <= 1`; otherwise the
/// quotient is built from the constant term upward.
pub fn deflate(coeffs: &[C64], root: C64) -> Vec<C64> {
    let n = coeffs.len();
    if n < 2 {
        return Vec::new();
    }
    let mut q = vec![C64::zero(); n - 1];
    if root.norm() <= 1.0 {
        let mut acc = coeffs[n - 1];
        q[n - 2] = acc;
        for i in (1..n - 1).rev() {
            acc = coeffs[i] + root * acc;
            q[i - 1] = acc;
        }
    } else {
        // c_0 = -root q_0, c_i = q_{i-1} - root q_i.
        let inv = C64::new(1.0, 0.0) / root;
        q[0] = -coeffs[0] * inv;
        for i in 1..n - 1 {
            q[i] = (q[i - 1] - coeffs[i]) * inv;
        }
    }
    q
}

/// Builds the monic polynomial with the given roots.
pub fn from_roots(roots: &[C64]) -> Vec<C64> {
    let mut p = vec![C64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![C64::zero(); p.len() + 1];
        for (i, c) in p.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= r * c;
        }
        p = next;
    }
    p
}

/// Options for [`roots`].
#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            max_iter: 500,
            tol: 1e-10,
        }
    }
}

/// All complex roots by Aberth-Ehrlich simultaneous iteration, each
/// polished by Newton steps on the undeflated polynomial.
///
/// Fails if any root ends with a relative backward error above `opts.tol`.
pub fn roots(coeffs: &[C64], opts: RootOptions) -> Result<Vec<C64>> {
    let coeffs = truncate(coeffs, 0.0);
    let n = match coeffs.len() {
        0 | 1 => return Err(Error::Degenerate("polynomial has degree zero")),
        l => l - 1,
    };
    // Exact zero roots first.
    let lead_zeros = coeffs.iter().position(|c| *c != C64::zero()).unwrap_or(0);
    let reduced = &coeffs[lead_zeros..];
    let m = reduced.len() - 1;
    let mut z: Vec<C64> = Vec::with_capacity(n);

    if m > 0 {
        let lead = reduced[m];
        let monic: Vec<C64> = reduced.iter().map(|c| c / lead).collect();
        // Initial guesses on a circle of the geometric-mean root radius.
        let radius = (monic[0].norm()).powf(1.0 / m as f64).max(1e-3);
        let mut w: Vec<C64> = (0..m)
            .map(|k| {
                let theta = core::f64::consts::TAU * (k as f64 + 0.25) / m as f64 + 0.4;
                C64::from_polar(radius, theta)
            })
            .collect();
        let mut converged = vec![false; m];
        for _ in 0..opts.max_iter {
            let mut all = true;
            for i in 0..m {
                if converged[i] {
                    continue;
                }
                let (p, dp, s) = eval_with_scale(&monic, w[i]);
                if p.norm() <= 4.0 * f64::EPSILON * s {
                    converged[i] = true;
                    continue;
                }
                all = false;
                let ratio = p / dp;
                let mut sum = C64::zero();
                for j in 0..m {
                    if j != i {
                        let d = w[i] - w[j];
                        if d != C64::zero() {
                            sum += C64::new(1.0, 0.0) / d;
                        }
                    }
                }
                let step = ratio / (C64::new(1.0, 0.0) - ratio * sum);
                if step.is_finite() {
                    w[i] -= step;
                    if step.norm() <= 4.0 * f64::EPSILON * w[i].norm() {
                        converged[i] = true;
                    }
                } else {
                    let bump = C64::new(1e-8, 1e-8) * (1.0 + w[i].norm());
                    w[i] += bump;
                }
            }
            if all {
                break;
            }
        }
        for wi in w.iter_mut() {
            *wi = newton_polish(&monic, *wi, 8);
        }
        z.extend(w);
    }
    z.extend(core::iter::repeat_n(C64::zero(), lead_zeros));

    for &r in &z {
        let be = backward_error(&coeffs, r);
        if !(be < opts.tol) {
            return Err(Error::Numerical {
                stage: "roots",
                detail: "backward error above tolerance after polishing",
                value: be,
            });
        }
    }
    Ok(z)
}

/// Newton refinement that keeps the best iterate by backward error.
pub fn newton_polish(coeffs: &[C64], z0: C64, steps: usize) -> C64 {
    let mut best = z0;
    let mut best_err = backward_error(coeffs, z0);
    let mut z = z0;
    for _ in 0..steps {
        let (p, dp, _) = eval_with_scale(coeffs, z);
        if dp == C64::zero() {
            break;
        }
        z -= p / dp;
        let e = backward_error(coeffs, z);
        if e < best_err {
            best = z;
            best_err = e;
        }
        if e == 0.0 {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn contains(set: &[C64], z: C64, tol: f64) -> bool {
        set.iter().any(|r| (r - z).norm() < tol * (1.0 + z.norm()))
    }

    #[test]
    fn square_minus_one() {
        let r = roots(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], RootOptions::default()).unwrap();
        assert!(contains(&r, c(1.0, 0.0), 1e-14));
        assert!(contains(&r, c(-1.0, 0.0), 1e-14));
    }

    #[test]
    fn synthetic_degree_eight() {
        let want = [
            c(0.5, 0.0),
            c(2.0, 0.0),
            c(0.0, 0.3),
            c(0.0, -0.3),
            c(-1.5, 0.7),
            c(-1.5, -0.7),
            c(0.9, 0.1),
            c(0.9, -0.1),
        ];
        let p = from_roots(&want);
        let got = roots(&p, RootOptions::default()).unwrap();
        assert_eq!(got.len(), 8);
        for w in want {
            assert!(contains(&got, w, 1e-10), "{w}");
        }
    }

    #[test]
    fn zero_roots_and_truncation() {
        let p = [c(0.0, 0.0), c(0.0, 0.0), c(-4.0, 0.0), c(1.0, 0.0), c(1e-20, 0.0)];
        let t = truncate(&p, 1e-10);
        assert_eq!(t.len(), 4);
        let r = roots(&t, RootOptions::default()).unwrap();
        assert_eq!(r.iter().filter(|z| z.norm() == 0.0).count(), 2);
        assert!(contains(&r, c(4.0, 0.0), 1e-14));
    }

    #[test]
    fn deflation_both_directions() {
        let p = from_roots(&[c(0.3, 0.1), c(3.0, -1.0), c(-0.7, 0.0)]);
        let q = deflate(&p, c(0.3, 0.1));
        let want = from_roots(&[c(3.0, -1.0), c(-0.7, 0.0)]);
        for (a, b) in q.iter().zip(&want) {
            assert!((a - b).norm() < 1e-13);
        }
        let q = deflate(&p, c(3.0, -1.0));
        let want = from_roots(&[c(0.3, 0.1), c(-0.7, 0.0)]);
        for (a, b) in q.iter().zip(&want) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn real_poly_arithmetic() {
        let a = RealPoly::new(vec![1.0, 2.0]);
        let b = RealPoly::new(vec![-1.0, 0.0, 3.0]);
        assert_eq!((&a * &b).0, vec![-1.0, -2.0, 3.0, 6.0]);
        assert_eq!((&a + &b).0, vec![0.0, 2.0, 3.0]);
        assert_eq!((&a - &a).degree(), None);
        assert_eq!(RealPoly::monomial(2.0, 3).eval(c(0.0, 1.0)), c(0.0, -2.0));
    }

    #[test]
    fn degree_zero_is_rejected() {
        assert!(roots(&[c(1.0, 0.0)], RootOptions::default()).is_err());
    }
}
