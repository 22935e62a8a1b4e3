//! Brute-force cross-checks: dense diagonalization of the truncated pair
//! operator, the banded generalized form, and lattice sums for the
//! single-excitation dispersion.

use nalgebra::{DMatrix, DVector, Schur};
use wqed_core::kernel::{self, CoeffParts};
use wqed_core::model::{self, ModelParams, PairMomentum};
use wqed_core::{PairEigenstate, C64};

use crate::error::{Error, Result};

/// How a [`DenseOperator`] was assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    HkDirect,
    GeneralizedBanded,
    FDense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub entries: DMatrix<C64>,
    pub provenance: Provenance,
}

impl DenseOperator {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }
}

/// Dense waveguide kernel `-i (e^{i phase |r - r'|} + e^{i phase (r + r')})`
/// on `r, r' = 1..=n`.
pub fn dense_f(phase: f64, n: usize) -> DenseOperator {
    let entries = DMatrix::from_fn(n, n, |i, j| {
        let (r, s) = ((i + 1) as f64, (j + 1) as f64);
        let g = C64::from_polar(1.0, phase * (r - s).abs()) + C64::from_polar(1.0, phase * (r + s));
        -C64::i() * g
    });
    DenseOperator {
        entries,
        provenance: Provenance::FDense,
    }
}

/// The truncated pair operator `H_K = gamma_r F(phi_r) + gamma_l F(phi_l)`;
/// its eigenvalues approximate `2 omega`.
pub fn build_hk(params: &ModelParams, k: &PairMomentum, n: usize) -> Result<DenseOperator> {
    if n < 2 {
        return Err(Error::Config(format!("oracle truncation N = {n} must be at least 2")));
    }
    params.check_momentum(k.k(), 0.0)?;
    let fr = dense_f(k.phi_r(), n).entries;
    let fl = dense_f(k.phi_l(), n).entries;
    Ok(DenseOperator {
        entries: fr * C64::from(params.gamma_r()) + fl * C64::from(params.gamma_l()),
        provenance: Provenance::HkDirect,
    })
}

/// Eigenvalues `lambda` of a dense operator, with optional right
/// eigenvectors of unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub lambda: Vec<C64>,
    pub vectors: Option<Vec<DVector<C64>>>,
}

impl Spectrum {
    /// Per-photon energies `lambda / 2`.
    pub fn omegas(&self) -> Vec<C64> {
        self.lambda.iter().map(|l| l * 0.5).collect()
    }
}

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 1_000_000;

fn schur(m: DMatrix<C64>) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    Schur::try_new(m, SCHUR_EPS, SCHUR_MAX_ITER)
        .map(Schur::unpack)
        .ok_or(Error::Eigen("Schur iteration did not converge"))
}

/// Complex Schur decomposition, then eigenvectors of the triangular factor
/// by back substitution when `vectors` is set.
pub fn eig_all(op: &DenseOperator, vectors: bool) -> Result<Spectrum> {
    let norm = op.entries.norm();
    let (q, t) = schur(op.entries.clone())?;
    let n = t.nrows();
    let lambda: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    if !vectors {
        return Ok(Spectrum {
            lambda,
            vectors: None,
        });
    }
    let small = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(n);
    let mut y = vec![C64::new(0.0, 0.0); n];
    for k in 0..n {
        let l = lambda[k];
        y[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * y[j];
            }
            let mut d = t[(i, i)] - l;
            if d.norm() < small {
                d = C64::new(small, 0.0);
            }
            y[i] = -s / d;
        }
        let v = q.columns(0, k + 1) * DVector::from_column_slice(&y[..=k]);
        out.push(v.normalize());
    }
    Ok(Spectrum {
        lambda,
        vectors: Some(out),
    })
}

/// Treatment of the complex `(N, N)` corner of the banded inverses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corners {
    Complex,
    /// Corners replaced by their real parts; the pencil becomes real.
    Real,
}

/// The pencil `Q psi = 2 omega P psi` with `P = F_r^-1 F_l^-1` and
/// `Q = gamma_r F_l^-1 + gamma_l F_r^-1`, acting on `psi = F_l chi`. It is
/// similar to [`build_hk`] at equal `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    pub p: DenseOperator,
    pub q: DenseOperator,
}

fn banded_inverse(phase: f64, n: usize, corners: Corners) -> Result<DMatrix<C64>> {
    let inv = kernel::inverse_f(phase, n)?;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let v = inv.get(i, j);
        match corners {
            Corners::Complex => v,
            Corners::Real => C64::new(v.re, 0.0),
        }
    }))
}

pub fn build_generalized(params: &ModelParams, k: &PairMomentum, n: usize, corners: Corners) -> Result<Pencil> {
    params.check_momentum(k.k(), 0.0)?;
    let ir = banded_inverse(k.phi_r(), n, corners)?;
    let il = banded_inverse(k.phi_l(), n, corners)?;
    let p = &ir * &il;
    let q = il * C64::from(params.gamma_r()) + ir * C64::from(params.gamma_l());
    Ok(Pencil {
        p: DenseOperator {
            entries: p,
            provenance: Provenance::GeneralizedBanded,
        },
        q: DenseOperator {
            entries: q,
            provenance: Provenance::GeneralizedBanded,
        },
    })
}

/// Eigenvalues `lambda = 2 omega` of the pencil, via `P^-1 Q`.
pub fn eig_generalized(pencil: &Pencil) -> Result<Spectrum> {
    let x = pencil
        .p
        .entries
        .clone()
        .lu()
        .solve(&pencil.q.entries)
        .ok_or(Error::Eigen("singular left-hand matrix of the pencil"))?;
    eig_all(
        &DenseOperator {
            entries: x,
            provenance: Provenance::GeneralizedBanded,
        },
        false,
    )
}

/// Largest distance from an element of `a` to its partner in `b` under a
/// greedy nearest matching. Sets of different size give infinity.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(d);
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateMatch {
    /// Index of the nearest eigenvalue.
    pub index: usize,
    pub distance: f64,
    pub overlap: f64,
}

/// Nearest dense eigenpair to a solver state: distance in `omega` and the
/// normalized overlap of the eigenvector with the state's pair amplitude on
/// the first `n_compare` sites.
pub fn match_state(spectrum: &Spectrum, target: &PairEigenstate, parts: &CoeffParts, n_compare: usize) -> Result<StateMatch> {
    let vectors = spectrum
        .vectors
        .as_ref()
        .ok_or(Error::Eigen("eigenvectors were not computed"))?;
    let (index, distance) = spectrum
        .omegas()
        .iter()
        .map(|w| (w - target.omega).norm())
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::Eigen("empty spectrum"))?;
    let v = &vectors[index];
    let n = n_compare.min(v.len());
    let chi = kernel::hk_wave(parts, target, n)?.chi;
    let dot: C64 = v.iter().zip(&chi).map(|(a, b)| a.conj() * b).sum();
    let nv = v.rows(0, n).norm();
    let nc = chi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    Ok(StateMatch {
        index,
        distance,
        overlap: dot.norm() / (nv * nc),
    })
}

/// Abel sum of `sum_{s >= 1} e^{i theta s}`: damped lattice sums at
/// geometrically shrinking damping, extrapolated to zero damping.
fn lattice_tail(theta: f64) -> C64 {
    let d = model::wrap_tau(theta).min(std::f64::consts::TAU - model::wrap_tau(theta));
    let eta0 = (0.25 * d).min(0.25);
    let mut table: Vec<Vec<C64>> = Vec::new();
    let mut best = C64::new(0.0, 0.0);
    for level in 0..10 {
        let eta = eta0 / f64::powi(2.0, level);
        let terms = (38.0 / eta).ceil() as usize;
        let mut acc = C64::new(0.0, 0.0);
        for s in (1..=terms).rev() {
            let s = s as f64;
            acc += C64::from_polar((-eta * s).exp(), theta * s);
        }
        let mut row = vec![acc];
        for m in 1..=level as usize {
            let f = f64::powi(2.0, m as i32);
            let prev = &table[level as usize - 1];
            row.push((row[m - 1] * f - prev[m - 1]) / (f - 1.0));
        }
        let est = row[level as usize];
        let converged = level > 2 && (est - best).norm() < 1e-15 * (1.0 + est.norm());
        best = est;
        table.push(row);
        if converged {
            break;
        }
    }
    best
}

/// Bloch eigenvalue of the single-excitation kernel, summed on the lattice.
pub fn bloch_sum(params: &ModelParams, q: f64) -> C64 {
    let phi = params.phi();
    let right = lattice_tail(phi - q) + 0.5;
    let left = lattice_tail(phi + q) + 0.5;
    -C64::i() * (right * params.gamma_r() + left * params.gamma_l())
}

/// `|Delta_closed(q) - Delta_sum(q)|`.
pub fn single_excitation_check(params: &ModelParams, q: f64) -> Result<f64> {
    let closed = model::polariton_dispersion(params, q)?;
    Ok((bloch_sum(params, q) - closed).norm())
}

/// Coefficients of `1 / (q - phi)` in the dispersion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleFit {
    pub from_sum: f64,
    pub from_closed: f64,
    /// `-gamma_r`.
    pub expected: f64,
}

impl PoleFit {
    pub fn worst_relative(&self) -> f64 {
        let e = self.expected.abs();
        ((self.from_sum - self.expected).abs() / e)
            .max((self.from_closed - self.expected).abs() / e)
            .max((self.from_sum - self.from_closed).abs() / e)
    }
}

/// Pole coefficient at `q = phi` from the values at `phi + delta` and
/// `phi + delta / 2`, with the linear term extrapolated away.
pub fn pole_fit(params: &ModelParams, delta: f64) -> Result<PoleFit> {
    let phi = params.phi();
    let fit = |f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
        let c1 = delta * f(phi + delta)?;
        let c2 = 0.5 * delta * f(phi + 0.5 * delta)?;
        Ok(2.0 * c2 - c1)
    };
    Ok(PoleFit {
        from_sum: fit(&|q| Ok(bloch_sum(params, q).re))?,
        from_closed: fit(&|q| Ok(model::polariton_dispersion(params, q)?))?,
        expected: -params.gamma_r(),
    })
}
