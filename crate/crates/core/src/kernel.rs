//! Tight-binding reduction of the pair problem.
//!
//! Writing the relative-coordinate amplitude as `psi = F_l chi`, the pair
//! eigenproblem becomes a pentadiagonal semi-infinite chain whose couplings
//! `t_r` are affine in `omega`, with corrections on the first two rows.

use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{Denominator, Error, Result};
use crate::model::{ModelParams, PairMomentum};
use crate::solver::PairEigenstate;
use crate::C64;

/// Smallest trigonometric denominator accepted by [`CoeffParts::new`].
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// `constant + slope * omega`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Affine {
    pub constant: f64,
    pub slope: f64,
}

impl Affine {
    pub const fn new(constant: f64, slope: f64) -> Self {
        Affine { constant, slope }
    }

    pub fn at(&self, omega: C64) -> C64 {
        omega * self.slope + self.constant
    }
}

/// Frequency-independent parts of the hopping coefficients at fixed `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffParts {
    pub t2: Affine,
    pub t1: Affine,
    pub t0: Affine,
    pub dt0: Affine,
    pub dt1: Affine,
    pub dtm1: Affine,
    pub phi_r: f64,
    pub phi_l: f64,
}

impl CoeffParts {
    pub fn new(params: &ModelParams, k: &PairMomentum) -> Result<Self> {
        let pr = k.phi_r();
        let pl = k.phi_l();
        let gr = params.gamma_r();
        let gl = params.gamma_l();
        let sr = checked(pr.sin(), k.k(), Denominator::SinRight)?;
        let sl = checked(pl.sin(), k.k(), Denominator::SinLeft)?;
        let s2r = checked((2.0 * pr).sin(), k.k(), Denominator::Sin2Right)?;
        let s2l = checked((2.0 * pl).sin(), k.k(), Denominator::Sin2Left)?;
        let cr = pr.cos() / sr;
        let cl = pl.cos() / sl;
        let c2r = (2.0 * pr).cos() / s2r;
        let c2l = (2.0 * pl).cos() / s2l;
        let ss = sr * sl;
        Ok(CoeffParts {
            t2: Affine::new(0.0, 0.5 / ss),
            t1: Affine::new(
                -0.5 * gr / sl - 0.5 * gl / sr,
                -(pr.cos() + pl.cos()) / ss,
            ),
            t0: Affine::new(gr * cl + gl * cr, 2.0 * cr * cl + 1.0 / ss),
            dt0: Affine::new(
                -gr / s2l - gl / s2r,
                2.0 * (c2r * c2l - cr * cl - 0.25 / ss),
            ),
            dt1: Affine::new(0.0, 1.0 / (s2r * sl)),
            dtm1: Affine::new(0.0, 1.0 / (sr * s2l)),
            phi_r: pr,
            phi_l: pl,
        })
    }

    pub fn at(&self, omega: C64) -> HoppingCoeffs {
        HoppingCoeffs {
            t2: self.t2.at(omega),
            t1: self.t1.at(omega),
            t0: self.t0.at(omega),
            dt0: self.dt0.at(omega),
            dt1: self.dt1.at(omega),
            dtm1: self.dtm1.at(omega),
        }
    }

    /// Copy with the row-1 edge hopping rescaled. Only used to check that
    /// downstream validation notices a wrong coefficient.
    pub fn with_dt1_scale(mut self, factor: f64) -> Self {
        self.dt1.slope *= factor;
        self
    }

    /// Frequency-independent and frequency-linear parts of `D(z)`.
    fn dispersion_parts(&self, z: C64) -> (C64, C64) {
        let w = z + z.inv();
        let w2 = w * w - 2.0;
        let a = w * self.t1.constant + self.t0.constant;
        let b = w2 * self.t2.slope + w * self.t1.slope + self.t0.slope;
        (a, b)
    }
}

fn checked(value: f64, k: f64, denominator: Denominator) -> Result<f64> {
    if value.abs() < DENOMINATOR_FLOOR {
        Err(Error::SingularMomentum { k, denominator })
    } else {
        Ok(value)
    }
}

/// Hopping coefficients at fixed `(K, omega)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoppingCoeffs {
    pub t2: C64,
    pub t1: C64,
    pub t0: C64,
    pub dt0: C64,
    pub dt1: C64,
    pub dtm1: C64,
}

impl HoppingCoeffs {
    pub fn as_array(&self) -> [C64; 6] {
        [self.t2, self.t1, self.t0, self.dt0, self.dt1, self.dtm1]
    }
}

pub fn coeffs(params: &ModelParams, k: &PairMomentum, omega: C64) -> Result<HoppingCoeffs> {
    Ok(CoeffParts::new(params, k)?.at(omega))
}

fn nonzero(z: C64) -> Result<()> {
    if z == C64::zero() || !z.is_finite() {
        Err(Error::Domain("Bloch factor must be finite and nonzero"))
    } else {
        Ok(())
    }
}

/// `D(z) = t2 (z^2 + z^-2) + t1 (z + z^-1) + t0`.
pub fn dispersion_value(c: &HoppingCoeffs, z: C64) -> Result<C64> {
    nonzero(z)?;
    Ok(dispersion_unchecked(c, z))
}

pub(crate) fn dispersion_unchecked(c: &HoppingCoeffs, z: C64) -> C64 {
    let w = z + z.inv();
    c.t2 * (w * w - 2.0) + c.t1 * w + c.t0
}

/// Coefficients of `z^2 D(z)`, lowest degree first.
pub fn quartic(c: &HoppingCoeffs) -> [C64; 5] {
    [c.t2, c.t1, c.t0, c.t1, c.t2]
}

/// The frequency at which `z` solves the bulk dispersion relation.
pub fn omega_of_z(parts: &CoeffParts, z: C64) -> Result<C64> {
    nonzero(z)?;
    let (a, b) = parts.dispersion_parts(z);
    let scale = a.norm().max(1.0);
    if b.norm() < 1e-14 * scale {
        return Err(Error::Degenerate("dispersion is independent of omega at this z"));
    }
    Ok(-a / b)
}

/// Second root of `t2 (w^2 - 2) + t1 w + t0 = 0` given the first.
pub fn partner_w(c: &HoppingCoeffs, w_a: C64) -> Result<C64> {
    if c.t2.norm() < 1e-300 {
        return Err(Error::Degenerate("t2 vanishes (omega = 0)"));
    }
    Ok(-c.t1 / c.t2 - w_a)
}

/// Both `z` with `z + 1/z = w`, ordered so the first has modulus `<= 1`.
pub fn z_from_w(w: C64) -> (C64, C64) {
    let s = (w * w - 4.0).sqrt();
    let p = (w + s) * 0.5;
    let m = (w - s) * 0.5;
    // The product is exactly one; recompute the smaller from the larger.
    if p.norm() >= m.norm() {
        (p.inv(), p)
    } else {
        (m, m.inv())
    }
}

/// Row-1 boundary polynomial.
pub fn f1(c: &HoppingCoeffs, z: C64) -> C64 {
    c.t0 + c.dt0 + (c.t1 + c.dt1) * z + c.t2 * z * z
}

/// Row-2 boundary polynomial.
pub fn f2(c: &HoppingCoeffs, z: C64) -> C64 {
    (c.t1 + c.dtm1) / z + c.t0 + c.t1 * z + c.t2 * z * z
}

/// Determinant of the 2x2 edge system for `chi_n = A z_a^n + B z_b^n`.
pub fn boundary_det(c: &HoppingCoeffs, z_a: C64, z_b: C64) -> Result<C64> {
    nonzero(z_a)?;
    nonzero(z_b)?;
    Ok(z_b * f1(c, z_a) * f2(c, z_b) - z_a * f1(c, z_b) * f2(c, z_a))
}

/// The 2x2 edge matrix: rows are the two boundary equations, columns the
/// two exponentials.
pub fn boundary_matrix(c: &HoppingCoeffs, z_a: C64, z_b: C64) -> [[C64; 2]; 2] {
    [
        [z_a * f1(c, z_a), z_b * f1(c, z_b)],
        [z_a * z_a * f2(c, z_a), z_b * z_b * f2(c, z_b)],
    ]
}

/// `det * z_a^2 z_b^2 / (z_a - z_b)`, valid when both roots solve the bulk
/// dispersion. Unlike the determinant it does not vanish at `z_a = z_b`.
pub fn boundary_quotient(c: &HoppingCoeffs, z: C64, y: C64) -> C64 {
    let p = c.dt1 * z * z * z + c.dt0 * z * z - c.t1 * z - c.t2;
    let u = z * (c.dtm1 * z - c.t2);
    u * (c.dt1 * (z * z + z * y + y * y) + c.dt0 * (z + y) - c.t1)
        - p * (c.dtm1 * (z + y) - c.t2)
}

/// Banded inverse of the semi-infinite waveguide kernel truncated to `n`
/// sites. Indices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseF {
    pub n: usize,
    pub off: f64,
    pub diag: Vec<C64>,
}

pub fn inverse_f(phase: f64, n: usize) -> Result<InverseF> {
    if n < 2 {
        return Err(Error::invalid("N", n as f64, "must be at least 2"));
    }
    let s = phase.sin();
    let s2 = (2.0 * phase).sin();
    if s.abs() < DENOMINATOR_FLOOR || s2.abs() < DENOMINATOR_FLOOR {
        return Err(Error::Domain("sin(phase) or sin(2 phase) vanishes"));
    }
    let cot = phase.cos() / s;
    let mut diag = alloc::vec![C64::new(-cot, 0.0); n];
    diag[0] = C64::new(-(2.0 * phase).cos() / s2, 0.0);
    diag[n - 1] = C64::new(-0.5 * cot, 0.5);
    Ok(InverseF {
        n,
        off: 0.5 / s,
        diag,
    })
}

impl InverseF {
    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i == j {
            self.diag[i]
        } else if i.abs_diff(j) == 1 {
            C64::new(self.off, 0.0)
        } else {
            C64::zero()
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n.min(x.len());
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += x[i - 1] * self.off;
            }
            if i + 1 < n {
                acc += x[i + 1] * self.off;
            }
            y.push(acc);
        }
        y
    }
}

/// Relative-coordinate amplitudes `chi_1, chi_2, ...`; `chi_0 = 0` is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeWave {
    pub chi: Vec<C64>,
}

impl RelativeWave {
    pub fn norm(&self) -> f64 {
        self.chi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `chi_n = A z_a^n + B z_b^n` for `n = 1..=n_max`.
pub fn assemble_chi(z_a: C64, z_b: C64, a: C64, b: C64, n_max: usize) -> Result<RelativeWave> {
    if n_max < 4 {
        return Err(Error::invalid("n_max", n_max as f64, "must be at least 4"));
    }
    let mut pa = z_a;
    let mut pb = z_b;
    let mut chi = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        chi.push(a * pa + b * pb);
        pa *= z_a;
        pb *= z_b;
    }
    Ok(RelativeWave { chi })
}

/// Amplitude of a tight-binding solution in the original pair basis,
/// `F_l^-1 psi`, on the first `n` sites.
pub fn hk_wave(parts: &CoeffParts, state: &PairEigenstate, n: usize) -> Result<RelativeWave> {
    let psi = assemble_chi(state.z_a, state.z_b, state.a, state.b, n + 1)?;
    let p = parts.phi_l;
    let off = 0.5 / p.sin();
    let cot = p.cos() / p.sin();
    let cot2 = (2.0 * p).cos() / (2.0 * p).sin();
    let x = &psi.chi;
    let mut chi = Vec::with_capacity(n);
    chi.push(x[1] * off - x[0] * cot2);
    for i in 1..n {
        chi.push((x[i - 1] + x[i + 1]) * off - x[i] * cot);
    }
    Ok(RelativeWave { chi })
}

/// Largest componentwise-relative residual over the first `n_rows` rows of
/// the semi-infinite chain, edge rows included.
pub fn residuals(parts: &CoeffParts, state: &PairEigenstate, n_rows: usize) -> Result<f64> {
    let n_rows = n_rows.max(3);
    let c = parts.at(state.omega);
    let psi = assemble_chi(state.z_a, state.z_b, state.a, state.b, n_rows + 2)?.chi;
    let mut worst = 0.0_f64;
    for r in 0..n_rows {
        let terms: [(C64, Option<usize>); 5] = match r {
            0 => [
                (c.t0 + c.dt0, Some(0)),
                (c.t1 + c.dt1, Some(1)),
                (c.t2, Some(2)),
                (C64::zero(), None),
                (C64::zero(), None),
            ],
            1 => [
                (c.t1 + c.dtm1, Some(0)),
                (c.t0, Some(1)),
                (c.t1, Some(2)),
                (c.t2, Some(3)),
                (C64::zero(), None),
            ],
            _ => [
                (c.t2, Some(r - 2)),
                (c.t1, Some(r - 1)),
                (c.t0, Some(r)),
                (c.t1, Some(r + 1)),
                (c.t2, Some(r + 2)),
            ],
        };
        let mut sum = C64::zero();
        let mut scale = 0.0;
        for (coef, idx) in terms {
            if let Some(i) = idx {
                sum += coef * psi[i];
                scale += coef.norm() * psi[i].norm();
            }
        }
        if scale > 0.0 {
            worst = worst.max(sum.norm() / scale);
        }
    }
    Ok(worst)
}
