//! Discrete pair states from the degree-8 elimination polynomial.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::kernel::{self, CoeffParts, HoppingCoeffs};
use crate::model::{ModelParams, PairMomentum, DEFAULT_SINGULAR_WINDOW};
use crate::poly::{self, RealPoly, RootOptions};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// `|Im omega|` below this counts as real.
    pub eps_im: f64,
    /// Unit-circle exclusion for `|z|`.
    pub eps_z: f64,
    pub residual_gate: f64,
    /// `|z_a - z_b|` below this flags an exceptional point.
    pub ep_threshold: f64,
    /// Exponentials whose share of the physical amplitude falls below this
    /// are ignored when classifying.
    pub weight_floor: f64,
    /// Roots with `|omega|` below this are skipped (`t2` vanishes).
    pub omega_floor: f64,
    pub residual_rows: usize,
    pub singular_window: f64,
    /// Debug mutation: scale the row-1 edge hopping used by the solver.
    pub corrupt_dt1: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            eps_im: 1e-8,
            eps_z: 1e-6,
            residual_gate: 1e-9,
            ep_threshold: 1e-6,
            weight_floor: 1e-6,
            omega_floor: 1e-10,
            residual_rows: 12,
            singular_window: DEFAULT_SINGULAR_WINDOW,
            corrupt_dt1: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateClass {
    Bound,
    Antibound,
    Resonance,
    Unclassified,
}

impl StateClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            StateClass::Bound => "bound",
            StateClass::Antibound => "antibound",
            StateClass::Resonance => "resonance",
            StateClass::Unclassified => "unclassified",
        }
    }
}

impl core::fmt::Display for StateClass {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One discrete solution `psi_n = a z_a^n + b z_b^n` of the tight-binding
/// chain, with `|a|^2 + |b|^2 = 1`.
///
/// `weight_a` and `weight_b` are the moduli of the same two exponentials in
/// the original pair amplitude; an exponential the kernel maps to zero
/// carries no physical weight even when its chain amplitude is finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEigenstate {
    pub omega: C64,
    pub z_a: C64,
    pub z_b: C64,
    pub a: C64,
    pub b: C64,
    pub weight_a: f64,
    pub weight_b: f64,
    pub class: StateClass,
    pub residual: f64,
    pub ep_degenerate: bool,
}

impl PairEigenstate {
    pub fn max_abs_z(&self) -> f64 {
        self.z_a.norm().max(self.z_b.norm())
    }

    /// `(A, B)` of the physical pair amplitude in the bulk.
    pub fn physical_amplitudes(&self, parts: &CoeffParts) -> (C64, C64) {
        (self.a * g_left(parts, self.z_a), self.b * g_left(parts, self.z_b))
    }
}

/// Factor by which the original-basis amplitude of `z^n` differs from the
/// chain amplitude in the bulk.
fn g_left(parts: &CoeffParts, z: C64) -> C64 {
    let p = parts.phi_l;
    (z + z.inv()) / (2.0 * p.sin()) - p.cos() / p.sin()
}

/// Degree-8 polynomial in `z` whose roots include both Bloch factors of
/// every discrete solution.
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationPoly {
    pub coeffs: Vec<C64>,
}

impl EliminationPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, z: C64) -> C64 {
        poly::eval_with_scale(&self.coeffs, z).0
    }
}

const TRUNCATION: f64 = 1e-10;

/// Sample count of the circle used by the sampled elimination.
const SAMPLES: usize = 64;

fn parts_for(params: &ModelParams, k: &PairMomentum, opts: &SolverOptions) -> Result<CoeffParts> {
    params.check_momentum(k.k(), opts.singular_window)?;
    let parts = CoeffParts::new(params, k)?;
    Ok(match opts.corrupt_dt1 {
        Some(f) => parts.with_dt1_scale(f),
        None => parts,
    })
}

/// The numerator `a(z) = z A(z)` and denominator `b(z) = z^2 B(z)` of
/// `omega(z) = -z a / b`.
fn omega_polys(parts: &CoeffParts) -> Result<(RealPoly, RealPoly)> {
    let a1 = parts.t1.constant;
    let a0 = parts.t0.constant;
    if a1.abs() < 1e-12 * a0.abs().max(1.0) {
        return Err(Error::Degenerate("frequency-independent hopping vanishes"));
    }
    let b2 = parts.t2.slope;
    let b1 = parts.t1.slope;
    let b0 = parts.t0.slope;
    Ok((
        RealPoly::new(alloc::vec![a1, a0, a1]),
        RealPoly::new(alloc::vec![b2, b1, b0, b1, b2]),
    ))
}

/// Closed-form elimination of `omega` and `z_b`.
///
/// Each coefficient `alpha + beta omega` becomes `T / b` with
/// `T = alpha b - beta z a`. The edge quotient is then a polynomial in the
/// partner root whose remainder modulo the partner's quadratic, multiplied
/// over both partners, gives a polynomial of true degree 24 with a factor
/// `z^8 a^4`.
pub fn eliminate(params: &ModelParams, k: &PairMomentum) -> Result<EliminationPoly> {
    eliminate_with(params, k, &SolverOptions::default())
}

fn eliminate_with(params: &ModelParams, k: &PairMomentum, opts: &SolverOptions) -> Result<EliminationPoly> {
    let parts = parts_for(params, k, opts)?;
    eliminate_parts(&parts)
}

fn eliminate_parts(parts: &CoeffParts) -> Result<EliminationPoly> {
    let (a, b) = omega_polys(parts)?;
    let z = RealPoly::monomial(1.0, 1);
    let za = &z * &a;
    let t = |c: &kernel::Affine| &b.scale(c.constant) - &za.scale(c.slope);
    let t2 = t(&parts.t2);
    let t1 = t(&parts.t1);
    let td0 = t(&parts.dt0);
    let td1 = t(&parts.dt1);
    let tdm1 = t(&parts.dtm1);
    let z2 = RealPoly::monomial(1.0, 2);
    let z3 = RealPoly::monomial(1.0, 3);

    // p(x) and u(x) of the edge quotient, written in the common scale.
    let pz = &(&(&(&td1 * &z3) + &(&td0 * &z2)) - &(&t1 * &z)) - &t2;
    let qz = &(&tdm1 * &z) - &t2;
    let zq = &z * &qz;
    // Quotient as a cubic in the partner root y: m3 y^3 + m2 y^2 + m1 y + m0.
    let m3 = -&(&zq * &td1);
    let m2 = &(&pz * &tdm1) - &(&zq * &td0);
    let m1 = &(&zq * &t1) - &(&pz * &t2);
    // Reduce modulo y^2 - w_b y + 1 with w_b = Wn / Wd (after dividing out
    // the known root y = z of the remainder).
    let s2 = m3;
    let s1 = &m2 + &(&z * &s2);
    let s0 = &m1 + &(&z * &s1);
    let one_plus_z2 = RealPoly::new(alloc::vec![1.0, 0.0, 1.0]);
    let wn = -&(&(&z * &t1) + &(&one_plus_z2 * &t2));
    let wd = &z * &t2;

    let c_dd = &(&(&(&s2 * &s2) + &(&s1 * &s1)) + &(&s0 * &s0)) - &(&s2 * &s0).scale(2.0);
    let c_nd = &(&s2 * &s1) + &(&s1 * &s0);
    let c_nn = &s2 * &s0;
    let h = &(&(&c_dd * &(&wd * &wd)) + &(&c_nd * &(&wn * &wd))) + &(&c_nn * &(&wn * &wn));

    let hc = h.coeffs();
    let scale = h.max_abs();
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Numerical {
            stage: "eliminate",
            detail: "elimination polynomial vanishes identically",
            value: scale,
        });
    }
    if let Some(extra) = hc.iter().rposition(|c| c.abs() > TRUNCATION * scale) {
        if extra > 24 {
            return Err(Error::EliminationDegree(extra - 16));
        }
    }
    if let Some(&low) = hc[..8.min(hc.len())]
        .iter()
        .max_by(|x, y| x.abs().total_cmp(&y.abs()))
    {
        if low.abs() > 1e-8 * scale {
            return Err(Error::Numerical {
                stage: "eliminate",
                detail: "expected factor z^8 is missing",
                value: low.abs() / scale,
            });
        }
    }
    let mut g: Vec<C64> = hc[8..25.min(hc.len())].iter().map(|&c| C64::new(c, 0.0)).collect();
    let a_roots = poly::roots(&a.to_complex(), RootOptions::default())?;
    for _ in 0..4 {
        for &r in &a_roots {
            g = poly::deflate(&g, r);
        }
    }
    let g: Vec<C64> = g.into_iter().map(|c| C64::new(c.re, 0.0)).collect();
    let g = poly::truncate(&g, TRUNCATION);
    if g.len() > 9 {
        return Err(Error::EliminationDegree(g.len() - 1));
    }
    Ok(EliminationPoly { coeffs: g })
}

/// Sampled elimination: `R(z) b(z)^4 / (z^4 a(z)^2)` on a circle, then a
/// discrete Fourier transform. Agrees with [`eliminate`] up to scale.
pub fn eliminate_sampled(params: &ModelParams, k: &PairMomentum, samples: usize) -> Result<EliminationPoly> {
    if samples < 17 {
        return Err(Error::invalid("samples", samples as f64, "must be at least 17"));
    }
    let parts = parts_for(params, k, &SolverOptions::default())?;
    eliminate_sampled_parts(&parts, samples)
}

fn eliminate_sampled_parts(parts: &CoeffParts, samples: usize) -> Result<EliminationPoly> {
    let (a, b) = omega_polys(parts)?;
    let mut poles = poly::roots(&a.to_complex(), RootOptions::default())?;
    poles.extend(poly::roots(&b.to_complex(), RootOptions::default())?);
    // Pick a rotation of the sample circle that stays off every pole.
    let m = samples as f64;
    let offset = (0..16)
        .map(|i| TAU * (i as f64) / (16.0 * m))
        .max_by(|x, y| {
            let d = |o: f64| {
                (0..samples)
                    .map(|j| C64::from_polar(1.0, o + TAU * j as f64 / m))
                    .flat_map(|z| poles.iter().map(move |p| (z - p).norm()))
                    .fold(f64::INFINITY, f64::min)
            };
            d(*x).total_cmp(&d(*y))
        })
        .unwrap_or(0.0);
    let mut values = Vec::with_capacity(samples);
    for j in 0..samples {
        let theta = offset + TAU * j as f64 / m;
        let z = C64::from_polar(1.0, theta);
        let omega = kernel::omega_of_z(parts, z)?;
        let c = parts.at(omega);
        let w_b = kernel::partner_w(&c, z + z.inv())?;
        let s = (w_b * w_b - 4.0).sqrt();
        let r = kernel::boundary_quotient(&c, z, (w_b + s) * 0.5)
            * kernel::boundary_quotient(&c, z, (w_b - s) * 0.5);
        let bz = b.eval(z);
        let az = a.eval(z);
        values.push(r * bz * bz * bz * bz / (z * z * z * z * az * az));
    }
    let mut coeffs = Vec::with_capacity(samples);
    for kk in 0..samples {
        let mut acc = C64::zero();
        for (j, v) in values.iter().enumerate() {
            let theta = offset + TAU * j as f64 / m;
            acc += v * C64::from_polar(1.0, -(kk as f64) * theta);
        }
        coeffs.push(acc / m);
    }
    let scale = coeffs.iter().fold(0.0_f64, |s, c| s.max(c.norm()));
    if let Some(extra) = coeffs.iter().rposition(|c| c.norm() > 1e-8 * scale) {
        if extra > 8 {
            return Err(Error::EliminationDegree(extra));
        }
    }
    coeffs.truncate(9);
    let coeffs: Vec<C64> = coeffs.into_iter().map(|c| C64::new(c.re, 0.0)).collect();
    Ok(EliminationPoly {
        coeffs: poly::truncate(&coeffs, TRUNCATION),
    })
}

/// All roots of the elimination polynomial, polished against it.
pub fn roots(p: &EliminationPoly) -> Result<Vec<C64>> {
    if p.degree() < 1 {
        return Err(Error::Degenerate("elimination polynomial is constant"));
    }
    poly::roots(&p.coeffs, RootOptions::default())
}

/// A solution of the bulk-plus-edge system before filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawSolution {
    pub omega: C64,
    pub z_a: C64,
    pub z_b: C64,
    /// Largest scaled residual of the three defining equations.
    pub defect: f64,
}

fn dispersion_scaled(c: &HoppingCoeffs, z: C64) -> (C64, f64) {
    let r = z.norm();
    let scale = c.t2.norm() * (r * r + 1.0 / (r * r)) + c.t1.norm() * (r + 1.0 / r) + c.t0.norm();
    (kernel::dispersion_unchecked(c, z), scale)
}

fn quotient_scaled(c: &HoppingCoeffs, z: C64, y: C64) -> (C64, f64) {
    let abs = HoppingCoeffs {
        t2: C64::new(c.t2.norm(), 0.0),
        t1: C64::new(c.t1.norm(), 0.0),
        t0: C64::new(c.t0.norm(), 0.0),
        dt0: C64::new(c.dt0.norm(), 0.0),
        dt1: C64::new(c.dt1.norm(), 0.0),
        dtm1: C64::new(c.dtm1.norm(), 0.0),
    };
    let zr = C64::new(z.norm(), 0.0);
    let yr = C64::new(y.norm(), 0.0);
    // Every monomial with its modulus; an upper bound on the magnitude of
    // the terms that cancel.
    let p = abs.dt1 * zr * zr * zr + abs.dt0 * zr * zr + abs.t1 * zr + abs.t2;
    let u = zr * (abs.dtm1 * zr + abs.t2);
    let bound = u * (abs.dt1 * (zr * zr + zr * yr + yr * yr) + abs.dt0 * (zr + yr) + abs.t1)
        + p * (abs.dtm1 * (zr + yr) + abs.t2);
    (kernel::boundary_quotient(c, z, y), bound.re)
}

/// Bulk relation for `z_a`, the sum rule placing `z_b` on the partner
/// reciprocal pair, and the edge quotient, each divided by the magnitude of
/// its terms. The sum rule keeps the iteration off the spurious coincident
/// solutions `z_a = z_b` of the quotient.
fn system(parts: &CoeffParts, x: [C64; 3], scales: Option<[f64; 3]>) -> ([C64; 3], [f64; 3]) {
    let c = parts.at(x[0]);
    let (d1, s1) = dispersion_scaled(&c, x[1]);
    let w_a = x[1] + x[1].inv();
    let w_b = x[2] + x[2].inv();
    let vieta = c.t2 * (w_a + w_b) + c.t1;
    let s2 = c.t2.norm() * (w_a.norm() + w_b.norm()) + c.t1.norm();
    let (q, s3) = quotient_scaled(&c, x[1], x[2]);
    let s = scales.unwrap_or([s1, s2, s3]);
    ([d1 / s[0], vieta / s[1], q / s[2]], [s1, s2, s3])
}

fn defect(parts: &CoeffParts, x: [C64; 3]) -> f64 {
    let (f, _) = system(parts, x, None);
    f.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
}

fn solve3(mut m: [[C64; 3]; 3], mut rhs: [C64; 3]) -> Option<[C64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))?;
        if m[piv][col].norm() == 0.0 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for c in col..3 {
                let v = m[col][c];
                m[row][c] -= f * v;
            }
            let v = rhs[col];
            rhs[row] -= f * v;
        }
    }
    let mut x = [C64::zero(); 3];
    for row in (0..3).rev() {
        let mut acc = rhs[row];
        for c in row + 1..3 {
            acc -= m[row][c] * x[c];
        }
        x[row] = acc / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Newton refinement of `(omega, z_a, z_b)` on the two bulk relations and
/// the edge quotient. Returns the best iterate and its defect.
pub(crate) fn polish(parts: &CoeffParts, omega: C64, z_a: C64, z_b: C64) -> ([C64; 3], f64) {
    let mut x = [omega, z_a, z_b];
    let mut best = x;
    let mut best_d = defect(parts, x);
    let mut stalls = 0;
    for _ in 0..40 {
        if best_d == 0.0 {
            break;
        }
        let (f, s) = system(parts, x, None);
        let mut jac = [[C64::zero(); 3]; 3];
        for v in 0..3 {
            let h = 1e-6 * x[v].norm().max(1e-3);
            let mut xp = x;
            let mut xm = x;
            xp[v] += h;
            xm[v] -= h;
            let (fp, _) = system(parts, xp, Some(s));
            let (fm, _) = system(parts, xm, Some(s));
            for e in 0..3 {
                jac[e][v] = (fp[e] - fm[e]) / (2.0 * h);
            }
        }
        let Some(dx) = solve3(jac, [-f[0], -f[1], -f[2]]) else {
            break;
        };
        let mut tiny = true;
        for v in 0..3 {
            x[v] += dx[v];
            tiny &= dx[v].norm() <= 4.0 * f64::EPSILON * x[v].norm();
        }
        if x.iter().any(|v| !v.is_finite() || v.norm() == 0.0) {
            break;
        }
        let d = defect(parts, x);
        if d < best_d {
            best = x;
            best_d = d;
            stalls = 0;
        } else {
            stalls += 1;
            if stalls > 3 || d > 1e3 * best_d {
                break;
            }
        }
        if tiny {
            break;
        }
    }
    (best, best_d)
}

/// Partner root completing a solution with first root `z`, chosen among
/// `{y, 1/y}` by the smaller edge quotient.
fn partner(c: &HoppingCoeffs, z: C64) -> Result<C64> {
    let w_b = kernel::partner_w(c, z + z.inv())?;
    let (y1, y2) = kernel::z_from_w(w_b);
    let q1 = kernel::boundary_quotient(c, z, y1).norm();
    let q2 = kernel::boundary_quotient(c, z, y2).norm();
    Ok(if q1 <= q2 { y1 } else { y2 })
}

/// Accept threshold on the polished defect; anything above is not a
/// solution of the system.
const DEFECT_ACCEPT: f64 = 1e-10;

/// Every solution reconstructed from the elimination polynomial, in
/// canonical order `|z_a| <= |z_b|`, with duplicates removed and both
/// members of conjugate pairs kept.
pub fn raw_solutions(params: &ModelParams, k: &PairMomentum, opts: &SolverOptions) -> Result<Vec<RawSolution>> {
    let parts = parts_for(params, k, opts)?;
    raw_from_parts(&parts, opts)
}

fn raw_from_parts(parts: &CoeffParts, opts: &SolverOptions) -> Result<Vec<RawSolution>> {
    // The sampled route divides out the spurious factor pointwise and keeps
    // clustered roots accurate; the closed form supplies extra seeds.
    let sampled = eliminate_sampled_parts(parts, SAMPLES).and_then(|g| roots(&g));
    let closed = eliminate_parts(parts).and_then(|g| roots(&g));
    let zs: Vec<C64> = match (sampled, closed) {
        (Ok(mut a), Ok(b)) => {
            a.extend(b);
            a
        }
        (Ok(a), Err(_)) | (Err(_), Ok(a)) => a,
        (Err(e), Err(_)) => return Err(e),
    };
    let mut out: Vec<RawSolution> = Vec::new();
    for z in zs {
        if z.norm() == 0.0 || !z.is_finite() {
            continue;
        }
        let Ok(omega) = kernel::omega_of_z(parts, z) else {
            continue;
        };
        if omega.norm() < opts.omega_floor {
            continue;
        }
        let c = parts.at(omega);
        let Ok(y) = partner(&c, z) else {
            continue;
        };
        push_polished(&mut out, parts, [omega, z, y], opts);
    }
    // Near a band edge the elimination polynomial has clustered roots and
    // a nearly coalesced partner state can be lost. Seeding with one root
    // reflected through the unit circle recovers it.
    let found = out.len();
    for i in 0..found {
        let s = out[i];
        push_polished(&mut out, parts, [s.omega, s.z_a, s.z_b.inv()], opts);
        push_polished(&mut out, parts, [s.omega, s.z_a.inv(), s.z_b], opts);
    }
    out.sort_by(|x, y| {
        x.omega
            .re
            .total_cmp(&y.omega.re)
            .then(x.omega.im.total_cmp(&y.omega.im))
    });
    Ok(out)
}

fn push_polished(out: &mut Vec<RawSolution>, parts: &CoeffParts, seed: [C64; 3], opts: &SolverOptions) {
    let ([omega, mut z_a, mut z_b], d) = polish(parts, seed[0], seed[1], seed[2]);
    if !(d < DEFECT_ACCEPT) || omega.norm() < opts.omega_floor {
        return;
    }
    if z_a.norm() > z_b.norm() {
        core::mem::swap(&mut z_a, &mut z_b);
    }
    let cand = RawSolution {
        omega,
        z_a,
        z_b,
        defect: d,
    };
    if let Some(prev) = out.iter_mut().find(|s| same_solution(s, &cand)) {
        if cand.defect < prev.defect {
            *prev = cand;
        }
    } else {
        out.push(cand);
    }
}

fn same_solution(x: &RawSolution, y: &RawSolution) -> bool {
    let tol = 1e-7;
    (x.omega - y.omega).norm() < tol * (1.0 + x.omega.norm())
        && (x.z_a - y.z_a).norm() < 1e-5 * (1.0 + x.z_a.norm())
        && (x.z_b - y.z_b).norm() < 1e-5 * (1.0 + x.z_b.norm())
}

/// Null vector of the 2x2 edge system, normalized with the larger
/// component real and positive.
fn null_vector(c: &HoppingCoeffs, z_a: C64, z_b: C64) -> (C64, C64) {
    let m = kernel::boundary_matrix(c, z_a, z_b);
    let r0 = m[0][0].norm_sqr() + m[0][1].norm_sqr();
    let r1 = m[1][0].norm_sqr() + m[1][1].norm_sqr();
    let (p, q) = if r0 >= r1 { (m[0][0], m[0][1]) } else { (m[1][0], m[1][1]) };
    let (mut a, b) = (-q, p);
    if a.norm() == 0.0 && b.norm() == 0.0 {
        a = C64::new(1.0, 0.0);
    }
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let lead = if a.norm() >= b.norm() { a } else { b };
    let phase = lead.conj() / lead.norm();
    (a * phase / n, b * phase / n)
}

/// Builds and classifies the eigenstate for one solution of the system.
/// Returns `None` for scattering states and trivial solutions.
fn build_state(
    true_parts: &CoeffParts,
    solver_parts: &CoeffParts,
    sol: &RawSolution,
    gamma_1d: f64,
    opts: &SolverOptions,
) -> Result<Option<PairEigenstate>> {
    let c = solver_parts.at(sol.omega);
    let (a, b) = null_vector(&c, sol.z_a, sol.z_b);
    let mut state = PairEigenstate {
        omega: sol.omega,
        z_a: sol.z_a,
        z_b: sol.z_b,
        a,
        b,
        weight_a: 0.0,
        weight_b: 0.0,
        class: StateClass::Unclassified,
        residual: 0.0,
        ep_degenerate: (sol.z_a - sol.z_b).norm() < opts.ep_threshold,
    };
    let (pa, pb) = state.physical_amplitudes(true_parts);
    let total = pa.norm() + pb.norm();
    if !(total > 1e-12) {
        return Ok(None);
    }
    state.weight_a = pa.norm() / total;
    state.weight_b = pb.norm() / total;
    let active: Vec<f64> = [(state.weight_a, sol.z_a), (state.weight_b, sol.z_b)]
        .iter()
        .filter(|(w, _)| *w > opts.weight_floor)
        .map(|(_, z)| z.norm())
        .collect();
    if active.iter().any(|r| (r - 1.0).abs() < opts.eps_z) {
        return Ok(None);
    }
    let max_r = active.iter().fold(0.0_f64, |m, r| m.max(*r));
    state.class = if state.omega.im.abs() < opts.eps_im {
        if max_r < 1.0 - opts.eps_z {
            StateClass::Bound
        } else {
            StateClass::Antibound
        }
    } else if state.omega.im < -opts.eps_im && max_r > 1.0 + opts.eps_z {
        StateClass::Resonance
    } else {
        StateClass::Unclassified
    };
    state.residual = kernel::residuals(true_parts, &state, opts.residual_rows)?;
    if is_degenerate(&state, gamma_1d) && !(state.residual < DEGENERATE_RESIDUAL.min(opts.residual_gate)) {
        return Ok(None);
    }
    if !(state.residual < opts.residual_gate) {
        return Err(Error::Numerical {
            stage: "solve_states",
            detail: "residual gate failed",
            value: state.residual,
        });
    }
    Ok(Some(state))
}

pub fn solve_states(params: &ModelParams, k: &PairMomentum) -> Result<Vec<PairEigenstate>> {
    solve_states_with(params, k, &SolverOptions::default())
}

/// Discrete states with `Im omega <= eps_im`, sorted by `Re omega`.
pub fn solve_states_with(
    params: &ModelParams,
    k: &PairMomentum,
    opts: &SolverOptions,
) -> Result<Vec<PairEigenstate>> {
    params.check_momentum(k.k(), opts.singular_window)?;
    let true_parts = CoeffParts::new(params, k)?;
    let solver_parts = parts_for(params, k, opts)?;
    let raw = if params.gamma_l() == 0.0 || params.gamma_r() == 0.0 {
        chiral_raw(params, k, &solver_parts)?
    } else {
        raw_from_parts(&solver_parts, opts)?
    };
    let mut out: Vec<PairEigenstate> = Vec::new();
    for sol in raw.iter().filter(|s| s.omega.im <= opts.eps_im) {
        // A real solution may surface as a conjugate pair split by roundoff.
        if sol.omega.im.abs() < opts.eps_im
            && out.iter().any(|s| {
                (s.omega - sol.omega.conj()).norm() < 1e-7 * (1.0 + sol.omega.norm())
                    && (s.z_a - sol.z_a.conj()).norm() < 1e-5
                    && (s.z_b - sol.z_b.conj()).norm() < 1e-5 * (1.0 + sol.z_b.norm())
            })
        {
            continue;
        }
        if let Some(state) = build_state(&true_parts, &solver_parts, sol, params.gamma_1d(), opts)? {
            out.push(state);
        }
    }
    // One degenerate state may be reached from several seeds with slightly
    // different Bloch factors; keep the most accurate.
    let mut kept: Vec<PairEigenstate> = Vec::with_capacity(out.len());
    for s in out {
        if !is_degenerate(&s, params.gamma_1d()) {
            kept.push(s);
            continue;
        }
        let twin = kept.iter_mut().find(|t| {
            is_degenerate(t, params.gamma_1d()) && (t.omega - s.omega).norm() < 1e-9 * params.gamma_1d()
        });
        match twin {
            Some(t) if s.residual < t.residual => *t = s,
            Some(_) => {}
            None => kept.push(s),
        }
    }
    Ok(kept)
}

/// Near `omega = 0` the second-neighbor hopping vanishes and one Bloch
/// factor runs to 0 or infinity; the system is ill-conditioned there and
/// admits spurious near-solutions.
const DEGENERATE_OMEGA: f64 = 1e-4;
const DEGENERATE_Z: f64 = 1e-3;
/// Residual a degenerate solution must reach to count as a state.
const DEGENERATE_RESIDUAL: f64 = 1e-11;

fn is_degenerate(s: &PairEigenstate, gamma_1d: f64) -> bool {
    let lo = s.z_a.norm().min(s.z_b.norm());
    let hi = s.z_a.norm().max(s.z_b.norm());
    s.omega.norm() < DEGENERATE_OMEGA * gamma_1d && (lo < DEGENERATE_Z || hi > 1.0 / DEGENERATE_Z)
}

/// In the fully chiral limit the elimination degenerates; the single
/// solution is known in closed form and only the partner root is searched.
fn chiral_raw(params: &ModelParams, k: &PairMomentum, parts: &CoeffParts) -> Result<Vec<RawSolution>> {
    let omega = chiral_omega(params, k)?;
    if omega.norm() == 0.0 {
        return Ok(Vec::new());
    }
    let c = parts.at(omega);
    let (z0, z1) = quartic_pairs(&c);
    let mut best: Option<RawSolution> = None;
    for za in [z0.0, z0.1] {
        for zb in [z1.0, z1.1] {
            let x = [omega, za, zb];
            let d = defect(parts, x);
            if best.is_none_or(|b| d < b.defect) {
                best = Some(RawSolution {
                    omega,
                    z_a: za,
                    z_b: zb,
                    defect: d,
                });
            }
        }
    }
    let mut sol = best.expect("four candidates");
    if sol.z_a.norm() > sol.z_b.norm() {
        core::mem::swap(&mut sol.z_a, &mut sol.z_b);
    }
    // Pin the closed-form root exactly.
    let exact = if params.gamma_l() == 0.0 {
        k.phi_r().cos()
    } else {
        k.phi_l().cos()
    };
    let exact = C64::new(exact, 0.0);
    if (sol.z_a - exact).norm() < (sol.z_b - exact).norm() {
        sol.z_a = exact;
    } else {
        sol.z_b = exact;
        if sol.z_a.norm() > sol.z_b.norm() {
            core::mem::swap(&mut sol.z_a, &mut sol.z_b);
        }
    }
    Ok(alloc::vec![sol])
}

/// The two reciprocal pairs of roots of `z^2 D(z)` at these coefficients.
fn quartic_pairs(c: &HoppingCoeffs) -> ((C64, C64), (C64, C64)) {
    // t2 (w^2 - 2) + t1 w + t0 = 0.
    let disc = (c.t1 * c.t1 - c.t2 * (c.t0 - c.t2 * 2.0) * 4.0).sqrt();
    let w1 = (-c.t1 + disc) / (c.t2 * 2.0);
    let w2 = (-c.t1 - disc) / (c.t2 * 2.0);
    (kernel::z_from_w(w1), kernel::z_from_w(w2))
}

fn chiral_omega(params: &ModelParams, k: &PairMomentum) -> Result<C64> {
    let (g, p) = if params.gamma_l() == 0.0 {
        (params.gamma_r(), k.phi_r())
    } else if params.gamma_r() == 0.0 {
        (params.gamma_l(), k.phi_l())
    } else {
        return Err(Error::invalid("xi", params.xi(), "closed form needs a fully chiral array"));
    };
    let s = p.sin();
    if s.abs() < kernel::DENOMINATOR_FLOOR {
        return Err(Error::SingularMomentum {
            k: k.k(),
            denominator: if params.gamma_l() == 0.0 {
                crate::Denominator::SinRight
            } else {
                crate::Denominator::SinLeft
            },
        });
    }
    Ok(C64::new(g * p.cos() / s, 0.0))
}

/// Closed-form state of the fully chiral array:
/// `omega = gamma_r cot(phi - K/2)` and `z_a = cos(phi - K/2)`, with no
/// weight on the partner exponential. The mirrored array (`gamma_r = 0`) is
/// handled with the two directions exchanged.
///
/// Where the chain coefficients are singular (`sin 2 phi_r = 0`), the state
/// is returned with a `NaN` residual.
pub fn chiral_solve(params: &ModelParams, k: &PairMomentum) -> Result<PairEigenstate> {
    let omega = chiral_omega(params, k)?;
    let z_exact = if params.gamma_l() == 0.0 {
        k.phi_r().cos()
    } else {
        k.phi_l().cos()
    };
    let opts = SolverOptions::default();
    let parts = match CoeffParts::new(params, k) {
        Ok(p) if omega.norm() > opts.omega_floor => p,
        _ => {
            let z = C64::new(z_exact, 0.0);
            return Ok(PairEigenstate {
                omega,
                z_a: z,
                z_b: z,
                a: C64::new(1.0, 0.0),
                b: C64::zero(),
                weight_a: 1.0,
                weight_b: 0.0,
                class: if z_exact.abs() < 1.0 - opts.eps_z {
                    StateClass::Bound
                } else {
                    StateClass::Unclassified
                },
                residual: f64::NAN,
                ep_degenerate: false,
            });
        }
    };
    let raw = chiral_raw(params, k, &parts)?;
    let gate = SolverOptions {
        residual_gate: f64::INFINITY,
        ..opts
    };
    let state = build_state(&parts, &parts, &raw[0], 0.0, &gate)?;
    state.ok_or(Error::Degenerate("chiral state lies on the scattering continuum"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn setup(xi: f64, k: f64) -> (ModelParams, PairMomentum) {
        let p = ModelParams::new(0.3 * PI, 1.0, xi).unwrap();
        let m = PairMomentum::new(&p, k).unwrap();
        (p, m)
    }

    #[test]
    fn chiral_value_at_k_pi() {
        let (p, k) = setup(0.0, PI);
        let s = chiral_solve(&p, &k).unwrap();
        assert!((s.omega.re + 2.0 / (0.5 * PI - 0.3 * PI).tan()).abs() < 1e-12);
        assert!((s.omega.re + 2.752_763_840_942_347).abs() < 1e-12);
        assert!((s.z_a.re - (0.3 * PI - 0.5 * PI).cos()).abs() < 1e-15);
        assert_eq!(s.class, StateClass::Bound);
        assert!(s.weight_b < 1e-12);
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn chiral_maximally_localized() {
        let (p, k) = setup(0.0, 0.6 * PI + PI);
        let s = chiral_solve(&p, &k).unwrap();
        assert!(s.omega.norm() < 1e-12);
        assert!(s.z_a.norm() < 1e-12);
        assert_eq!(s.class, StateClass::Bound);
    }

    #[test]
    fn chiral_root_of_elimination() {
        // Tiny but nonzero counter-propagating rate keeps the elimination
        // regular; the chiral root survives continuously.
        let (p, k) = setup(1e-9, 1.1 * PI);
        let g = eliminate(&p, &k).unwrap();
        let z = C64::new(k.phi_r().cos(), 0.0);
        let r = roots(&g).unwrap();
        assert!(r.iter().any(|x| (x - z).norm() < 1e-5), "{r:?}");
    }

    #[test]
    fn symbolic_and_sampled_agree() {
        for (xi, kk) in [(0.4, PI), (0.9, PI), (0.1, 1.2 * PI), (0.4, 0.1 * PI)] {
            let (p, k) = setup(xi, kk);
            let a = roots(&eliminate(&p, &k).unwrap()).unwrap();
            let b = roots(&eliminate_sampled(&p, &k, 32).unwrap()).unwrap();
            let parts = CoeffParts::new(&p, &k).unwrap();
            // Compare the polished solutions reached from each root set.
            for z in b {
                let omega = kernel::omega_of_z(&parts, z).unwrap();
                let y = partner(&parts.at(omega), z).unwrap();
                let (xb, _) = polish(&parts, omega, z, y);
                let hit = a.iter().any(|za| {
                    let w = kernel::omega_of_z(&parts, *za).unwrap();
                    let y = partner(&parts.at(w), *za).unwrap();
                    let (x, _) = polish(&parts, w, *za, y);
                    (x[0] - xb[0]).norm() < 1e-8 * (1.0 + xb[0].norm())
                });
                assert!(hit, "xi {xi} K {kk} z {z}");
            }
        }
    }

    #[test]
    fn bound_and_antibound_at_xi_09() {
        let (p, k) = setup(0.9, PI);
        let s = solve_states(&p, &k).unwrap();
        let bound: Vec<_> = s.iter().filter(|x| x.class == StateClass::Bound).collect();
        let anti: Vec<_> = s.iter().filter(|x| x.class == StateClass::Antibound).collect();
        assert_eq!(bound.len(), 1);
        assert_eq!(anti.len(), 1);
        assert!((bound[0].omega.re + 0.643_072_345_3).abs() < 1e-8);
        assert!((anti[0].omega.re + 1.253_003_974_4).abs() < 1e-8);
        assert!(anti[0].max_abs_z() > 1.0);
    }

    #[test]
    fn resonance_at_small_k() {
        let (p, k) = setup(0.4, 0.1 * PI);
        let s = solve_states(&p, &k).unwrap();
        assert!(s
            .iter()
            .any(|x| x.class == StateClass::Resonance && (x.omega - C64::new(-1.023_085_44, -2.707_491_67)).norm() < 1e-6));
    }

    #[test]
    fn corrupted_edge_trips_gate() {
        let (p, k) = setup(0.9, PI);
        let opts = SolverOptions {
            corrupt_dt1: Some(1.01),
            ..Default::default()
        };
        assert!(matches!(
            solve_states_with(&p, &k, &opts),
            Err(Error::Numerical { .. })
        ));
    }

    #[test]
    fn solve3_fixture() {
        let m = [
            [C64::new(2.0, 0.0), C64::new(1.0, 0.0), C64::zero()],
            [C64::new(1.0, 0.0), C64::new(3.0, 1.0), C64::new(1.0, 0.0)],
            [C64::zero(), C64::new(1.0, 0.0), C64::new(4.0, 0.0)],
        ];
        let x = [C64::new(1.0, 1.0), C64::new(-2.0, 0.0), C64::new(0.5, 0.0)];
        let rhs: [C64; 3] = core::array::from_fn(|i| (0..3).map(|j| m[i][j] * x[j]).sum());
        let got = solve3(m, rhs).unwrap();
        for i in 0..3 {
            assert!((got[i] - x[i]).norm() < 1e-14);
        }
    }
}
