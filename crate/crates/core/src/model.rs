//! Physical parameters, single-polariton dispersion and the two-polariton
//! scattering continua.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::error::{Denominator, Error, Result};
use crate::C64;

/// Default half-width of the excluded neighborhood around each singular `K`.
pub const DEFAULT_SINGULAR_WINDOW: f64 = 1e-3 * TAU;

/// Single-polariton poles closer than this are rejected.
pub const POLE_TOLERANCE: f64 = 1e-10;

/// Continuum sampling keeps this distance from every pole.
const POLE_EXCLUSION: f64 = 1e-6;

/// Array phase `phi = omega_0 d / c` and the two directional emission rates.
///
/// The rates are stored directly so that the mirror image (right and left
/// exchanged) is representable; [`ModelParams::new`] only builds the
/// canonical `xi <= 1` half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    phi: f64,
    gamma_r: f64,
    gamma_l: f64,
}

impl ModelParams {
    /// `gamma_r = 2 gamma_1d / (1 + xi)`, `gamma_l = 2 gamma_1d xi / (1 + xi)`.
    pub fn new(phi: f64, gamma_1d: f64, xi: f64) -> Result<Self> {
        if !(xi.is_finite() && (0.0..=1.0).contains(&xi)) {
            return Err(Error::invalid("xi", xi, "must lie in [0, 1]"));
        }
        if !(gamma_1d.is_finite() && gamma_1d > 0.0) {
            return Err(Error::invalid("gamma_1d", gamma_1d, "must be positive"));
        }
        let gamma_r = 2.0 * gamma_1d / (1.0 + xi);
        let gamma_l = 2.0 * gamma_1d * xi / (1.0 + xi);
        Self::from_rates(phi, gamma_r, gamma_l)
    }

    /// Arbitrary non-negative rates; `gamma_l > gamma_r` is the mirror image
    /// of a canonical configuration.
    pub fn from_rates(phi: f64, gamma_r: f64, gamma_l: f64) -> Result<Self> {
        if !(phi.is_finite() && phi > 0.0 && phi < PI) {
            return Err(Error::invalid("phi", phi, "must lie in (0, pi)"));
        }
        if !(gamma_r.is_finite() && gamma_r >= 0.0) {
            return Err(Error::invalid("gamma_r", gamma_r, "must be non-negative"));
        }
        if !(gamma_l.is_finite() && gamma_l >= 0.0) {
            return Err(Error::invalid("gamma_l", gamma_l, "must be non-negative"));
        }
        if gamma_r + gamma_l <= 0.0 {
            return Err(Error::invalid("gamma_r + gamma_l", gamma_r + gamma_l, "must be positive"));
        }
        Ok(ModelParams {
            phi,
            gamma_r,
            gamma_l,
        })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn gamma_r(&self) -> f64 {
        self.gamma_r
    }

    pub fn gamma_l(&self) -> f64 {
        self.gamma_l
    }

    pub fn gamma_1d(&self) -> f64 {
        0.5 * (self.gamma_r + self.gamma_l)
    }

    /// `gamma_l / gamma_r`; infinite for the mirrored fully chiral case.
    pub fn xi(&self) -> f64 {
        if self.gamma_r == 0.0 {
            f64::INFINITY
        } else {
            self.gamma_l / self.gamma_r
        }
    }

    /// Right and left rates exchanged. Paired with `K -> 2 pi - K` this is a
    /// symmetry of every spectrum computed here.
    pub fn mirrored(&self) -> Self {
        ModelParams {
            phi: self.phi,
            gamma_r: self.gamma_l,
            gamma_l: self.gamma_r,
        }
    }

    pub fn is_chiral(&self) -> bool {
        self.gamma_l == 0.0 || self.gamma_r == 0.0
    }

    /// The four `K` in `[0, 2 pi)` where one of `sin(phi -+ K/2)` or
    /// `sin(2 phi -+ K)` vanishes, sorted and deduplicated.
    pub fn singular_set(&self) -> Vec<(f64, Denominator)> {
        let two_phi = 2.0 * self.phi;
        let mut set = Vec::with_capacity(4);
        let raw = [
            (two_phi, Denominator::SinRight),
            (TAU - two_phi, Denominator::SinLeft),
            (two_phi + PI, Denominator::Sin2Right),
            (TAU - two_phi + PI, Denominator::Sin2Left),
        ];
        for (k, d) in raw {
            let k = wrap_tau(k);
            if !set.iter().any(|&(s, _): &(f64, Denominator)| circular_distance(s, k) < 1e-14) {
                set.push((k, d));
            }
        }
        set.sort_by(|a, b| a.0.total_cmp(&b.0));
        set
    }

    /// Circular distance of `k` from the singular set and the offending
    /// denominator.
    pub fn singular_distance(&self, k: f64) -> (f64, Denominator) {
        self.singular_set()
            .into_iter()
            .map(|(s, d)| (circular_distance(s, k), d))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("singular set is never empty")
    }

    /// Rejects `k` within `window` of the singular set.
    pub fn check_momentum(&self, k: f64, window: f64) -> Result<()> {
        let (dist, denominator) = self.singular_distance(k);
        if dist < window.max(1e-14) {
            return Err(Error::SingularMomentum { k, denominator });
        }
        Ok(())
    }
}

/// `x` reduced to `[0, 2 pi)`.
pub fn wrap_tau(x: f64) -> f64 {
    let r = x % TAU;
    if r < 0.0 {
        r + TAU
    } else {
        r
    }
}

pub(crate) fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_tau(a - b);
    d.min(TAU - d)
}

/// Pair center-of-mass momentum together with the two shifted phases
/// `phi_r = phi - K/2` and `phi_l = phi + K/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMomentum {
    k: f64,
    phi: f64,
}

impl PairMomentum {
    pub fn new(params: &ModelParams, k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::invalid("K", k, "must be finite"));
        }
        Ok(PairMomentum {
            k,
            phi: params.phi(),
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn phi_r(&self) -> f64 {
        self.phi - 0.5 * self.k
    }

    pub fn phi_l(&self) -> f64 {
        self.phi + 0.5 * self.k
    }
}

/// Per-photon detuning of a Bloch polariton with wavevector `q`:
/// `(gamma_r/2) cot((phi - q)/2) + (gamma_l/2) cot((phi + q)/2)`.
pub fn polariton_dispersion(params: &ModelParams, q: f64) -> Result<f64> {
    if !q.is_finite() {
        return Err(Error::invalid("q", q, "must be finite"));
    }
    let phi = params.phi();
    if circular_distance(q, phi) < POLE_TOLERANCE
        || circular_distance(q, -phi) < POLE_TOLERANCE
    {
        return Err(Error::Domain("polariton wavevector sits on a dispersion pole"));
    }
    let right = 0.5 * params.gamma_r() / (0.5 * (phi - q)).tan();
    let left = 0.5 * params.gamma_l() / (0.5 * (phi + q)).tan();
    Ok(right + left)
}

/// Upper or lower single-polariton band: `q` in `(-phi, phi)` is upper.
fn is_upper(phi: f64, q: f64) -> bool {
    let q = wrap_tau(q + PI) - PI;
    q.abs() < phi
}

/// Band content of a two-polariton scattering state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BandPair {
    UU,
    UL,
    LL,
}

impl BandPair {
    pub const ALL: [BandPair; 3] = [BandPair::UU, BandPair::UL, BandPair::LL];

    pub fn as_str(&self) -> &'static str {
        match self {
            BandPair::UU => "UU",
            BandPair::UL => "UL",
            BandPair::LL => "LL",
        }
    }

    fn from_bands(first_upper: bool, second_upper: bool) -> Self {
        match (first_upper, second_upper) {
            (true, true) => BandPair::UU,
            (false, false) => BandPair::LL,
            _ => BandPair::UL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub label: BandPair,
}

/// Real-energy intervals of two-polariton scattering states at fixed `K`.
/// Bands extending to a dispersion pole carry infinite ends.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumBands {
    pub k: f64,
    pub bands: Vec<Band>,
}

/// Subset of [`BandPair`] labels, as a small bit set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct LabelSet(u8);

impl LabelSet {
    pub fn insert(&mut self, label: BandPair) {
        self.0 |= 1 << label as u8;
    }

    pub fn contains(&self, label: BandPair) -> bool {
        self.0 & (1 << label as u8) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = BandPair> + '_ {
        BandPair::ALL.into_iter().filter(move |l| self.contains(*l))
    }
}

impl core::fmt::Display for LabelSet {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let mut first = true;
        for l in self.iter() {
            if !first {
                f.write_str("+")?;
            }
            f.write_str(l.as_str())?;
            first = false;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyRegion {
    InGap,
    InContinuum(LabelSet),
}

impl core::fmt::Display for EnergyRegion {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EnergyRegion::InGap => f.write_str("gap"),
            EnergyRegion::InContinuum(set) => write!(f, "{set}"),
        }
    }
}

impl ContinuumBands {
    pub fn labels_at(&self, energy: f64) -> LabelSet {
        let mut set = LabelSet::default();
        for b in &self.bands {
            if b.lo <= energy && energy <= b.hi {
                set.insert(b.label);
            }
        }
        set
    }

    /// Bounded holes of the union of all bands, in ascending order.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        let mut spans: Vec<(f64, f64)> = self.bands.iter().map(|b| (b.lo, b.hi)).collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in spans {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        merged.windows(2).map(|w| (w[0].1, w[1].0)).collect()
    }
}

/// Two-polariton continua at momentum `k`.
///
/// The per-photon energy of a scattering pair is
/// `(Delta(q) + Delta(K - q)) / 2`. Critical momenta (where either
/// constituent sits on a pole) split `[0, 2 pi)` into arcs of constant band
/// content; each arc is sampled on its interior and the divergent ends are
/// closed off from the residues of the poles.
pub fn continuum_bands(
    params: &ModelParams,
    k: &PairMomentum,
    q_samples: usize,
) -> Result<ContinuumBands> {
    if q_samples < 1000 {
        return Err(Error::invalid("q_samples", q_samples as f64, "must be at least 1000"));
    }
    let phi = params.phi();
    let kk = k.k();
    let gr = params.gamma_r();
    let gl = params.gamma_l();

    // Near each critical q the pair energy behaves like residue / (q - c).
    let mut critical: Vec<(f64, f64)> = Vec::with_capacity(4);
    for (c, residue) in [(phi, -gr), (-phi, gl), (kk - phi, gr), (kk + phi, -gl)] {
        let c = wrap_tau(c);
        match critical
            .iter_mut()
            .find(|(s, _)| circular_distance(*s, c) < 1e-12)
        {
            Some(entry) => entry.1 += residue,
            None => critical.push((c, residue)),
        }
    }
    critical.sort_by(|a, b| a.0.total_cmp(&b.0));

    let energy = |q: f64| -> f64 {
        let right = |x: f64| 0.5 * gr / (0.5 * (phi - x)).tan() + 0.5 * gl / (0.5 * (phi + x)).tan();
        0.5 * (right(q) + right(kk - q))
    };
    let scale = gr + gl;

    let mut raw: Vec<Band> = Vec::new();
    let n = critical.len();
    for i in 0..n {
        let (a, res_a) = critical[i];
        let (mut b, res_b) = critical[(i + 1) % n];
        if i + 1 == n {
            b += TAU;
        }
        let width = b - a;
        if width <= 2.0 * POLE_EXCLUSION {
            continue;
        }
        let mid = 0.5 * (a + b);
        let label = BandPair::from_bands(is_upper(phi, mid), is_upper(phi, kk - mid));
        let n_arc = ((q_samples as f64) * width / TAU).ceil().max(16.0) as usize;
        let lo_q = a + POLE_EXCLUSION;
        let hi_q = b - POLE_EXCLUSION;
        let step = (hi_q - lo_q) / (n_arc as f64);
        let (mut lo, mut lo_at) = (f64::INFINITY, lo_q);
        let (mut hi, mut hi_at) = (f64::NEG_INFINITY, lo_q);
        for j in 0..=n_arc {
            let q = lo_q + step * (j as f64);
            let e = energy(q);
            if e.is_finite() {
                if e < lo {
                    (lo, lo_at) = (e, q);
                }
                if e > hi {
                    (hi, hi_at) = (e, q);
                }
            }
        }
        // Sampling is only second-order accurate at an interior extremum.
        let window = |q: f64| ((q - step).max(lo_q), (q + step).min(hi_q));
        let (a0, b0) = window(lo_at);
        lo = lo.min(golden_min(&energy, a0, b0));
        let (a0, b0) = window(hi_at);
        hi = hi.max(-golden_min(&|q| -energy(q), a0, b0));
        // Leaving `a` upward the energy tends to sign(res_a) * inf; arriving
        // at `b` from below it tends to -sign(res_b) * inf.
        let tiny = 1e-12 * scale;
        for end in [res_a, -res_b] {
            if end > tiny {
                hi = f64::INFINITY;
            } else if end < -tiny {
                lo = f64::NEG_INFINITY;
            }
        }
        if lo <= hi {
            raw.push(Band { lo, hi, label });
        }
    }

    let mut bands: Vec<Band> = Vec::new();
    for label in BandPair::ALL {
        let mut own: Vec<Band> = raw.iter().copied().filter(|b| b.label == label).collect();
        own.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for band in own {
            match bands.last_mut() {
                Some(last) if last.label == label && band.lo <= last.hi => {
                    last.hi = last.hi.max(band.hi);
                }
                _ => bands.push(band),
            }
        }
    }
    Ok(ContinuumBands { k: kk, bands })
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if b - a < 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    fc.min(fd)
}

/// Membership of `Re omega` in the scattering continua.
pub fn classify_energy(bands: &ContinuumBands, omega: C64) -> EnergyRegion {
    let set = bands.labels_at(omega.re);
    if set.is_empty() {
        EnergyRegion::InGap
    } else {
        EnergyRegion::InContinuum(set)
    }
}
