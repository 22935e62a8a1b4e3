//! Closed-form asymptotes of the resonance branches near `K = 0, 2 pi` and
//! near the band-edge singularities `K = 2 phi, 2 pi - 2 phi`.

use crate::error::{Error, Result};
use crate::model::{ModelParams, PairMomentum};
use crate::C64;

/// Sign selecting one member of a complex-conjugate asymptote pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Which band edge an edge asymptote belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `K` near `2 phi`, perturbative in `gamma_l`.
    Forward,
    /// `K` near `2 pi - 2 phi`, perturbative in `gamma_r`.
    Backward,
}

/// Small-`K` pair
/// `(gamma_l - gamma_r +- 2 i sqrt(gamma_r gamma_l)) / (2K) + (gamma_1d / 2) cot phi`.
///
/// `K` is used as given; near `2 pi` pass `K - 2 pi`.
pub fn omega_k0(params: &ModelParams, k: f64, sign: Sign) -> Result<C64> {
    if k == 0.0 || !k.is_finite() {
        return Err(Error::Domain("small-K asymptote needs finite nonzero K"));
    }
    let gr = params.gamma_r();
    let gl = params.gamma_l();
    let lead = C64::new(gl - gr, sign.value() * 2.0 * (gr * gl).sqrt()) / (2.0 * k);
    Ok(lead + 0.5 * params.gamma_1d() / params.phi().tan())
}

/// Double roots of the small-`K` dispersion discriminant,
/// `Omega = (gamma_r - gamma_l)/2 +- i sqrt(gamma_r gamma_l)`, returned as
/// `(plus, minus)`. `|Omega|^2 = gamma_1d^2` for every chirality.
///
/// The leading term of [`omega_k0`] with sign `s` equals `-Omega_{-s} / K`.
pub fn discriminant_omega(params: &ModelParams) -> (C64, C64) {
    let gr = params.gamma_r();
    let gl = params.gamma_l();
    let re = 0.5 * (gr - gl);
    let im = (gr * gl).sqrt();
    (C64::new(re, im), C64::new(re, -im))
}

/// First-order correction `Sigma` to the chiral branch in closed form:
/// `-i g (1 - beta^2 cos 2 phi_a) / (2 (1 - mu beta)^2)` with
/// `mu = cos phi_a`, `beta = exp(i phi_b)`, where `a` is the dominant
/// direction and `g` the weak rate.
fn sigma_closed(g: f64, phi_a: f64, phi_b: f64) -> Result<C64> {
    let mu = phi_a.cos();
    let beta = C64::from_polar(1.0, phi_b);
    let den = C64::new(1.0, 0.0) - beta * mu;
    if den.norm() < 1e-14 {
        return Err(Error::Domain("edge asymptote denominator vanishes"));
    }
    let num = C64::new(1.0, 0.0) - beta * beta * (2.0 * phi_a).cos();
    Ok(-C64::i() * g * num / (den * den * 2.0))
}

fn directed(params: &ModelParams, k: &PairMomentum, direction: Direction) -> (f64, f64, f64, f64) {
    match direction {
        Direction::Forward => (params.gamma_r(), params.gamma_l(), k.phi_r(), k.phi_l()),
        Direction::Backward => (params.gamma_l(), params.gamma_r(), k.phi_l(), k.phi_r()),
    }
}

/// Edge asymptote `omega = g_a cot phi_a + Sigma` for the chosen direction.
pub fn omega_edge(params: &ModelParams, k: &PairMomentum, direction: Direction) -> Result<C64> {
    let (ga, gb, pa, pb) = directed(params, k, direction);
    let s = pa.sin();
    if s.abs() < 1e-14 {
        return Err(Error::Domain("edge asymptote diverges at this K"));
    }
    Ok(sigma_closed(gb, pa, pb)? + ga * pa.cos() / s)
}

fn mu_beta(k: &PairMomentum, direction: Direction) -> (f64, C64) {
    let (pa, pb) = match direction {
        Direction::Forward => (k.phi_r(), k.phi_l()),
        Direction::Backward => (k.phi_l(), k.phi_r()),
    };
    (pa.cos(), C64::from_polar(1.0, pb))
}

/// `Sigma` from the expectation value of the weak kernel in the chiral
/// state `chi_n = mu^n`, summed term by term over `n, n' <= n_terms`.
pub fn sigma_numeric(params: &ModelParams, k: &PairMomentum, direction: Direction, n_terms: usize) -> Result<C64> {
    let (_, gb, _, _) = directed(params, k, direction);
    let (mu, beta) = mu_beta(k, direction);
    if mu.abs() >= 1.0 {
        return Err(Error::Domain("chiral state does not decay"));
    }
    // Truncated tails are of relative size |mu|^n (1 - mu^2).
    if mu.abs().powi(n_terms as i32) * (1.0 - mu * mu) > 1e-11 {
        return Err(Error::invalid("n_terms", n_terms as f64, "too few terms for convergence"));
    }
    // Both sums carry a common factor mu^2, removed so that mu = 0 is exact.
    let mut pow_mu = alloc::vec::Vec::with_capacity(2 * n_terms);
    let mut pow_beta = alloc::vec::Vec::with_capacity(2 * n_terms + 1);
    let mut m = 1.0;
    let mut b = C64::new(1.0, 0.0);
    for _ in 0..=2 * n_terms {
        pow_mu.push(m);
        pow_beta.push(b);
        m *= mu;
        b *= beta;
    }
    let mut num = C64::new(0.0, 0.0);
    let mut norm = 0.0;
    for n in 1..=n_terms {
        norm += pow_mu[2 * n - 2];
        for np in 1..=n_terms {
            let w = pow_mu[n + np - 2];
            if w == 0.0 {
                continue;
            }
            num += (pow_beta[n.abs_diff(np)] + pow_beta[n + np]) * w;
        }
    }
    Ok(-C64::i() * 0.5 * gb * num / norm)
}

/// `Sigma` from the two closed geometric sums and the closed normalization.
pub fn sigma_closed_sums(params: &ModelParams, k: &PairMomentum, direction: Direction) -> Result<C64> {
    let (_, gb, _, _) = directed(params, k, direction);
    let (mu, beta) = mu_beta(k, direction);
    if mu.abs() >= 1.0 {
        return Err(Error::Domain("chiral state does not decay"));
    }
    let one = C64::new(1.0, 0.0);
    let mb = beta * mu;
    if (one - mb).norm() < 1e-14 {
        return Err(Error::Domain("geometric sum diverges"));
    }
    // Each sum divided by the normalization mu^2 / (1 - mu^2).
    let first = (one + mb) / (one - mb);
    let second = beta * beta * (1.0 - mu * mu) / ((one - mb) * (one - mb));
    Ok(-C64::i() * 0.5 * gb * (first + second))
}

/// All four asymptotes at one `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoteEval {
    pub k: f64,
    pub omega_plus: C64,
    pub omega_minus: C64,
    pub omega_fwd: C64,
    pub omega_bwd: C64,
}

impl AsymptoteEval {
    /// The small-`K` pair uses `K - 2 pi` above `pi`. Edge asymptotes that
    /// diverge at this `K` are reported as `NaN`.
    pub fn new(params: &ModelParams, k: &PairMomentum) -> Result<Self> {
        let kk = k.k();
        let kr = if kk > core::f64::consts::PI {
            kk - core::f64::consts::TAU
        } else {
            kk
        };
        let nan = C64::new(f64::NAN, f64::NAN);
        Ok(AsymptoteEval {
            k: kk,
            omega_plus: omega_k0(params, kr, Sign::Plus)?,
            omega_minus: omega_k0(params, kr, Sign::Minus)?,
            omega_fwd: omega_edge(params, k, Direction::Forward).unwrap_or(nan),
            omega_bwd: omega_edge(params, k, Direction::Backward).unwrap_or(nan),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn params(xi: f64) -> ModelParams {
        ModelParams::new(0.3 * PI, 1.0, xi).unwrap()
    }

    #[test]
    fn k0_value_quarter_chirality() {
        let p = params(0.25);
        let plus = omega_k0(&p, 0.1, Sign::Plus).unwrap();
        assert!((plus - C64::new(-6.0 + 0.5 / (0.3 * PI).tan(), 8.0)).norm() < 1e-12);
        assert!((plus.re + 5.6367).abs() < 1e-4);
        let minus = omega_k0(&p, 0.1, Sign::Minus).unwrap();
        assert!((plus - minus.conj()).norm() < 1e-14);
        assert!(omega_k0(&p, 0.0, Sign::Plus).is_err());
    }

    #[test]
    fn k0_leading_term_non_chiral() {
        let p = params(1.0);
        let w = omega_k0(&p, 0.05, Sign::Plus).unwrap() - 0.5 / (0.3 * PI).tan();
        assert!(w.re.abs() < 1e-14);
        assert!((w.im - 1.0 / 0.05).abs() < 1e-12);
    }

    #[test]
    fn discriminant_modulus() {
        for xi in [0.0, 0.1, 0.37, 1.0] {
            let (a, b) = discriminant_omega(&params(xi));
            assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
            assert_eq!(a, b.conj());
            // Relation to the small-K leading term.
            let k = 0.01;
            let lead = omega_k0(&params(xi), k, Sign::Plus).unwrap() - 0.5 / (0.3 * PI).tan();
            assert!((lead * k + b).norm() < 1e-12);
        }
        assert_eq!(discriminant_omega(&params(0.0)).0, C64::new(1.0, 0.0));
    }

    #[test]
    fn edge_reduces_to_chiral() {
        let p = params(0.0);
        let k = PairMomentum::new(&p, 1.3).unwrap();
        let w = omega_edge(&p, &k, Direction::Forward).unwrap();
        assert_eq!(w, C64::new(2.0 / k.phi_r().tan(), 0.0));
    }

    #[test]
    fn three_way_sigma() {
        let p = params(0.2);
        let k = PairMomentum::new(&p, 0.6 * PI + 0.3).unwrap();
        let a = sigma_numeric(&p, &k, Direction::Forward, 2000).unwrap();
        let b = sigma_closed_sums(&p, &k, Direction::Forward).unwrap();
        assert!((a - b).norm() < 1e-10);
        let direct = omega_edge(&p, &k, Direction::Forward).unwrap() - p.gamma_r() / k.phi_r().tan();
        assert!((a - direct).norm() < 1e-10);
    }

    #[test]
    fn sigma_single_site_limit() {
        let p = params(0.3);
        let k = PairMomentum::new(&p, 0.6 * PI + PI).unwrap();
        let a = sigma_numeric(&p, &k, Direction::Forward, 10).unwrap();
        let b = sigma_closed_sums(&p, &k, Direction::Forward).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn sigma_linear_in_weak_rate() {
        let p1 = ModelParams::from_rates(0.3 * PI, 1.5, 0.2).unwrap();
        let p2 = ModelParams::from_rates(0.3 * PI, 1.5, 0.1).unwrap();
        let k = PairMomentum::new(&p1, 0.6 * PI + 0.2).unwrap();
        let base = 1.5 / k.phi_r().tan();
        let s1 = omega_edge(&p1, &k, Direction::Forward).unwrap() - base;
        let s2 = omega_edge(&p2, &k, Direction::Forward).unwrap() - base;
        assert!((s1 - s2 * 2.0).norm() < 1e-12);
    }

    #[test]
    fn edge_real_part_flips_across_2phi() {
        let p = params(0.2);
        let below = PairMomentum::new(&p, 0.6 * PI - 1e-4).unwrap();
        let above = PairMomentum::new(&p, 0.6 * PI + 1e-4).unwrap();
        assert!(omega_edge(&p, &below, Direction::Forward).unwrap().re > 1e3);
        assert!(omega_edge(&p, &above, Direction::Forward).unwrap().re < -1e3);
    }
}
