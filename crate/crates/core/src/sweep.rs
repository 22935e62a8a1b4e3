//! Sweeps over the pair momentum: branch linking, exceptional points and
//! edge coalescence.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::model::{ModelParams, PairMomentum};
use crate::solver::{self, PairEigenstate, SolverOptions, StateClass};
use crate::C64;

/// Uniform grid of `n` momenta from `k_min` to `k_max`, both included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KGrid {
    pub k_min: f64,
    pub k_max: f64,
    pub n: usize,
}

impl KGrid {
    pub fn new(k_min: f64, k_max: f64, n: usize) -> Result<Self> {
        if !(k_min > 0.0 && k_min < TAU) {
            return Err(Error::invalid("k_min", k_min, "must lie in (0, 2 pi)"));
        }
        if !(k_max > 0.0 && k_max < TAU) {
            return Err(Error::invalid("k_max", k_max, "must lie in (0, 2 pi)"));
        }
        if !(k_max > k_min) && n > 1 {
            return Err(Error::invalid("k_max", k_max, "must exceed k_min"));
        }
        if n == 0 {
            return Err(Error::invalid("n", 0.0, "grid needs at least one point"));
        }
        Ok(KGrid { k_min, k_max, n })
    }

    /// The full open zone `(0, 2 pi)` sampled at cell midpoints.
    pub fn zone(n: usize) -> Result<Self> {
        let h = TAU / n.max(1) as f64;
        KGrid::new(0.5 * h, TAU - 0.5 * h, n)
    }

    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return alloc::vec![self.k_min];
        }
        let h = (self.k_max - self.k_min) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.k_min + h * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Half-width of the excluded neighborhoods of the singular set.
    pub window: f64,
    /// States with `|omega|` above this are dropped and their branch ends.
    pub omega_cap: f64,
    /// Branches ending and starting beside a singular point with `|omega|`
    /// above this are recorded as joined through infinity.
    pub divergence: f64,
    pub solver: SolverOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        let solver = SolverOptions::default();
        SweepOptions {
            window: solver.singular_window,
            omega_cap: 1e3,
            divergence: 10.0,
            solver,
        }
    }
}

impl SweepOptions {
    fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            singular_window: self.window,
            ..self.solver
        }
    }
}

/// Discrete states found at one momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct KSlice {
    pub k: f64,
    pub states: Vec<PairEigenstate>,
}

/// Solves one grid momentum. `Ok(None)` marks a point inside a singular
/// window.
pub fn solve_slice(params: &ModelParams, k: f64, opts: &SweepOptions) -> Result<Option<KSlice>> {
    if params.check_momentum(k, opts.window).is_err() {
        return Ok(None);
    }
    let m = PairMomentum::new(params, k)?;
    let states = solver::solve_states_with(params, &m, &opts.solver_options())?;
    Ok(Some(KSlice { k, states }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Zero-based creation index; [`Branch::label`] gives the roman form.
    pub id: usize,
    pub points: Vec<(f64, PairEigenstate)>,
}

impl Branch {
    pub fn label(&self) -> String {
        roman(self.id + 1)
    }

    pub fn k_range(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    pub fn classes(&self) -> impl Iterator<Item = StateClass> + '_ {
        self.points.iter().map(|(_, s)| s.class)
    }
}

fn roman(mut n: usize) -> String {
    const TABLE: [(usize, &str); 13] = [
        (1000, "M"),
        (900, "CM"),
        (500, "D"),
        (400, "CD"),
        (100, "C"),
        (90, "XC"),
        (50, "L"),
        (40, "XL"),
        (10, "X"),
        (9, "IX"),
        (5, "V"),
        (4, "IV"),
        (1, "I"),
    ];
    let mut s = String::new();
    for (v, r) in TABLE {
        while n >= v {
            s.push_str(r);
            n -= v;
        }
    }
    s
}

/// Two branches that diverge on either side of a singular momentum and
/// form one dispersion curve through `omega = infinity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconnection {
    pub k_singular: f64,
    pub before: usize,
    pub after: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub branches: Vec<Branch>,
    pub reconnections: Vec<Reconnection>,
    /// Grid momenta that fell inside a singular window.
    pub skipped: Vec<f64>,
}

impl SweepResult {
    /// Every emitted point as `(K, branch id, state)`, ordered by `K` and
    /// then branch id.
    pub fn rows(&self) -> Vec<(f64, usize, &PairEigenstate)> {
        let mut rows: Vec<_> = self
            .branches
            .iter()
            .flat_map(|b| b.points.iter().map(move |(k, s)| (*k, b.id, s)))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        rows
    }
}

/// Solves every grid point in order and links the states into branches.
pub fn sweep_k(params: &ModelParams, grid: &KGrid, opts: &SweepOptions) -> Result<SweepResult> {
    let mut slices = Vec::with_capacity(grid.n);
    for k in grid.points() {
        slices.push((k, solve_slice(params, k, opts)?));
    }
    Ok(link_branches(params, &slices, opts))
}

struct Track {
    branch: usize,
    /// Slice index of the last point.
    last: usize,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Linear extrapolation of a branch to `k` and the tolerated deviation.
fn predict(points: &[(f64, PairEigenstate)], k: f64) -> (C64, f64) {
    let n = points.len();
    let (k1, s1) = &points[n - 1];
    if n < 2 {
        return (s1.omega, 0.25 * (1.0 + s1.omega.norm()));
    }
    let (k0, s0) = &points[n - 2];
    let v = (s1.omega - s0.omega) / (k1 - k0);
    let pred = s1.omega + v * (k - k1);
    let mut steps: Vec<f64> = points[n.saturating_sub(9)..]
        .windows(2)
        .map(|w| (w[1].1.omega - w[0].1.omega).norm() / (w[1].0 - w[0].0))
        .collect();
    let rate = median(&mut steps).max(v.norm());
    let tol = 10.0 * rate * (k - k1) + 1e-6 * (1.0 + s1.omega.norm());
    (pred, tol)
}

/// Links per-momentum states into branches. Each slice is `(K, states)`
/// with `None` for a skipped singular window; slices must be ordered by
/// `K`. Deterministic: depends only on the input order.
pub fn link_branches(params: &ModelParams, slices: &[(f64, Option<KSlice>)], opts: &SweepOptions) -> SweepResult {
    let mut branches: Vec<Branch> = Vec::new();
    let mut open: Vec<Track> = Vec::new();
    let mut skipped = Vec::new();
    let mut prev_idx: Option<usize> = None;

    for (idx, (k, slice)) in slices.iter().enumerate() {
        let Some(slice) = slice else {
            skipped.push(*k);
            continue;
        };
        let states: Vec<&PairEigenstate> = slice
            .states
            .iter()
            .filter(|s| s.omega.norm() <= opts.omega_cap)
            .collect();
        // Only branches alive at the previous computed slice may continue.
        open.retain(|t| Some(t.last) == prev_idx);

        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, t) in open.iter().enumerate() {
            let pts = &branches[t.branch].points;
            let (pred, tol) = predict(pts, *k);
            let last_class = pts[pts.len() - 1].1.class;
            for (si, s) in states.iter().enumerate() {
                let d = (s.omega - pred).norm();
                if d > tol {
                    continue;
                }
                let mut cost = d / tol;
                if s.class != last_class {
                    cost = 2.0 * cost + 1e-3;
                }
                cands.push((cost, ti, si));
            }
        }
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut track_used = alloc::vec![false; open.len()];
        let mut state_used = alloc::vec![false; states.len()];
        for (_, ti, si) in cands {
            if track_used[ti] || state_used[si] {
                continue;
            }
            track_used[ti] = true;
            state_used[si] = true;
            branches[open[ti].branch].points.push((*k, *states[si]));
            open[ti].last = idx;
        }
        for (si, s) in states.iter().enumerate() {
            if state_used[si] {
                continue;
            }
            let id = branches.len();
            branches.push(Branch {
                id,
                points: alloc::vec![(*k, **s)],
            });
            open.push(Track { branch: id, last: idx });
        }
        prev_idx = Some(idx);
    }

    let reconnections = find_reconnections(params, &branches, opts);
    SweepResult {
        branches,
        reconnections,
        skipped,
    }
}

fn find_reconnections(params: &ModelParams, branches: &[Branch], opts: &SweepOptions) -> Vec<Reconnection> {
    let mut out = Vec::new();
    for (s, _) in params.singular_set() {
        let ending: Vec<&Branch> = branches
            .iter()
            .filter(|b| {
                let (k, st) = b.points[b.points.len() - 1];
                k < s && s - k < 2.0 * opts.window + 0.05 && st.omega.norm() >= opts.divergence
            })
            .collect();
        let starting: Vec<&Branch> = branches
            .iter()
            .filter(|b| {
                let (k, st) = b.points[0];
                k > s && k - s < 2.0 * opts.window + 0.05 && st.omega.norm() >= opts.divergence
            })
            .collect();
        // Opposite signs of Re omega on the two sides; the largest moduli
        // are paired first.
        let mut used = alloc::vec![false; starting.len()];
        let mut ending = ending;
        ending.sort_by(|a, b| {
            let wa = a.points[a.points.len() - 1].1.omega.norm();
            let wb = b.points[b.points.len() - 1].1.omega.norm();
            wb.total_cmp(&wa).then(a.id.cmp(&b.id))
        });
        for e in ending {
            let we = e.points[e.points.len() - 1].1.omega;
            let best = starting
                .iter()
                .enumerate()
                .filter(|(i, b)| !used[*i] && b.points[0].1.omega.re * we.re < 0.0)
                .max_by(|a, b| {
                    a.1.points[0]
                        .1
                        .omega
                        .norm()
                        .total_cmp(&b.1.points[0].1.omega.norm())
                        .then(b.1.id.cmp(&a.1.id))
                });
            if let Some((i, b)) = best {
                used[i] = true;
                out.push(Reconnection {
                    k_singular: s,
                    before: e.id,
                    after: b.id,
                });
            }
        }
    }
    out
}

/// Position of the exceptional point where the two resonance branches of
/// the window `(2 pi - 2 phi, 2 pi)` swap partners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpResult {
    pub phi: f64,
    /// Critical `gamma_l / gamma_r`.
    pub ratio_ep: f64,
    pub k_ep: f64,
    /// Smallest distance between the two branches at `(ratio_ep, k_ep)`.
    pub min_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpOptions {
    /// Bisection stops once the bracket is narrower than this.
    pub ratio_tol: f64,
    /// Largest continuation step in `K`.
    pub max_step: f64,
    pub min_step: f64,
    pub solver: SolverOptions,
}

impl Default for EpOptions {
    fn default() -> Self {
        EpOptions {
            ratio_tol: 1e-6,
            max_step: 2e-3 * PI,
            min_step: 1e-9,
            solver: SolverOptions::default(),
        }
    }
}

/// Default continuation range for [`find_ep`]: the window between the
/// singular momentum `2 pi - 2 phi` and the zone edge, trimmed at both ends.
pub fn ep_k_range(phi: f64) -> Result<KGrid> {
    let lo = TAU - 2.0 * phi;
    let width = TAU - lo;
    KGrid::new(lo + 0.02 * width, TAU - 0.04 * width, 200)
}

fn ratio_params(phi: f64, ratio: f64) -> Result<ModelParams> {
    ModelParams::new(phi, 1.0, ratio)
}

fn states_at(params: &ModelParams, k: f64, opts: &SolverOptions) -> Result<Vec<PairEigenstate>> {
    let m = PairMomentum::new(params, k)?;
    Ok(solver::solve_states_with(params, &m, opts)?
        .into_iter()
        .filter(|s| s.omega.im < -opts.eps_im)
        .collect())
}

/// End point of a continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TrackEnd {
    omega: C64,
    /// The state merged into a continuum before the end of the range.
    lost: bool,
    /// Largest `|omega|` among the remaining resonances.
    others: f64,
}

/// Follows the slowest-moving resonance at `k0` towards `k1` with
/// adaptive, ambiguity-aware steps. The other branch enters the range from
/// `omega = infinity` and is recognized by its steep slope.
fn follow(params: &ModelParams, k0: f64, k1: f64, opts: &EpOptions) -> Result<TrackEnd> {
    let so = &opts.solver;
    let first = states_at(params, k0, so)?;
    let probe = states_at(params, k0 + 1e-2 * opts.max_step, so)?;
    let slope = |w: C64| {
        probe
            .iter()
            .map(|s| (s.omega - w).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let start = first
        .iter()
        .min_by(|a, b| slope(a.omega).total_cmp(&slope(b.omega)))
        .ok_or(Error::Domain("no resonance at the start of the continuation range"))?;
    let mut hist: Vec<(f64, C64)> = alloc::vec![(k0, start.omega)];
    let mut k = k0;
    let mut h = opts.max_step;
    let mut others = 0.0;
    while k < k1 {
        let mut kn = (k + h).min(k1);
        while params.check_momentum(kn, so.singular_window).is_err() {
            kn += so.singular_window;
        }
        let n = hist.len();
        let (kl, wl) = hist[n - 1];
        let pred = if n >= 2 {
            let (kp, wp) = hist[n - 2];
            wl + (wl - wp) * ((kn - kl) / (kl - kp))
        } else {
            wl
        };
        let states = states_at(params, kn, so)?;
        let mut d: Vec<(f64, C64)> = states.iter().map(|s| ((s.omega - pred).norm(), s.omega)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let step = (pred - wl).norm().max(1e-12);
        let near = |x: f64| x < 0.5 * (1.0 + wl.norm());
        let accept = match d.as_slice() {
            [] => false,
            [only] => near(only.0) && only.0 < 2.0 * step + 1e-9,
            [best, second, ..] => best.0 < 0.25 * second.0 && best.0 < 2.0 * step + 1e-9,
        };
        if !accept && h > opts.min_step {
            h *= 0.5;
            continue;
        }
        match d.first() {
            Some(&(dist, w)) if accept || near(dist) => {
                hist.push((kn, w));
                if hist.len() > 3 {
                    hist.remove(0);
                }
                others = d.iter().skip(1).map(|x| x.1.norm()).fold(0.0, f64::max);
                k = kn;
                h = (1.5 * h).min(opts.max_step);
            }
            _ => {
                return Ok(TrackEnd {
                    omega: wl,
                    lost: true,
                    others: d.iter().map(|x| x.1.norm()).fold(0.0, f64::max),
                })
            }
        }
    }
    Ok(TrackEnd {
        omega: hist[hist.len() - 1].1,
        lost: false,
        others,
    })
}

/// True when the track starting from the finite end runs off to large
/// `|omega|` near the zone edge instead of settling onto a continuum.
fn signature(phi: f64, ratio: f64, grid: &KGrid, opts: &EpOptions) -> Result<bool> {
    let params = ratio_params(phi, ratio)?;
    let end = follow(&params, grid.k_min, grid.k_max, opts)?;
    Ok(!end.lost && end.omega.norm() > end.others)
}

/// Smallest pairwise resonance distance at `k`.
fn pair_distance(params: &ModelParams, k: f64, opts: &SolverOptions) -> f64 {
    let Ok(states) = states_at(params, k, opts) else {
        return f64::INFINITY;
    };
    let mut best = f64::INFINITY;
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            best = best.min((states[i].omega - states[j].omega).norm());
        }
    }
    best
}

/// Bisects the chirality ratio on the connectivity signature, then locates
/// `K_ep` as the closest approach of the two branches.
pub fn find_ep(phi: f64, bracket: (f64, f64), grid: &KGrid, opts: &EpOptions) -> Result<EpResult> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi < 1.0 && lo < hi) {
        return Err(Error::invalid("ratio_bracket", lo, "must satisfy 0 < lo < hi < 1"));
    }
    let s_lo = signature(phi, lo, grid, opts)?;
    let s_hi = signature(phi, hi, grid, opts)?;
    if s_lo == s_hi {
        return Err(Error::Bracket { lo, hi });
    }
    while hi - lo > opts.ratio_tol {
        let mid = 0.5 * (lo + hi);
        if signature(phi, mid, grid, opts)? == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ratio = 0.5 * (lo + hi);
    let params = ratio_params(phi, ratio)?;
    let so = &opts.solver;

    let ks: Vec<f64> = grid
        .points()
        .into_iter()
        .filter(|&k| params.check_momentum(k, so.singular_window).is_ok())
        .collect();
    let (mut best_i, mut best_d) = (0, f64::INFINITY);
    for (i, &k) in ks.iter().enumerate() {
        let d = pair_distance(&params, k, so);
        if d < best_d {
            best_i = i;
            best_d = d;
        }
    }
    if !best_d.is_finite() {
        return Err(Error::Domain("no resonance pair found at the critical ratio"));
    }
    // Golden-section refinement between the grid neighbors.
    let mut a = ks[best_i.saturating_sub(1)];
    let mut b = ks[(best_i + 1).min(ks.len() - 1)];
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = pair_distance(&params, c, so);
    let mut fd = pair_distance(&params, d, so);
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = pair_distance(&params, c, so);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = pair_distance(&params, d, so);
        }
        if b - a < 1e-12 {
            break;
        }
    }
    let (k_ep, dist) = if fc < fd { (c, fc) } else { (d, fd) };
    let (k_ep, dist) = if dist < best_d { (k_ep, dist) } else { (ks[best_i], best_d) };
    Ok(EpResult {
        phi,
        ratio_ep: ratio,
        k_ep,
        min_distance: dist,
    })
}

/// [`find_ep`] over a list of angles with the default range per angle.
pub fn ep_curve(phis: &[f64], bracket: (f64, f64), opts: &EpOptions) -> Vec<(f64, Result<EpResult>)> {
    phis.iter()
        .map(|&phi| (phi, ep_k_range(phi).and_then(|g| find_ep(phi, bracket, &g, opts))))
        .collect()
}

/// Band edge of the bound-state window `(2 phi, 2 pi - 2 phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Lower,
    Upper,
}

/// `|omega_bound - omega_antibound|` at momenta `offset` inside the given
/// edge. Points where either state is missing are omitted.
pub fn edge_coalescence(params: &ModelParams, side: Edge, offsets: &[f64]) -> Result<Vec<(f64, f64)>> {
    if offsets.iter().any(|&o| !(o > 0.0)) {
        return Err(Error::invalid("offset", 0.0, "offsets must be positive"));
    }
    let smallest = offsets.iter().copied().fold(f64::INFINITY, f64::min);
    let opts = SolverOptions {
        singular_window: 0.1 * smallest,
        ..SolverOptions::default()
    };
    let mut out = Vec::new();
    for &off in offsets {
        let k = match side {
            Edge::Lower => 2.0 * params.phi() + off,
            Edge::Upper => TAU - 2.0 * params.phi() - off,
        };
        let m = PairMomentum::new(params, k)?;
        let states = solver::solve_states_with(params, &m, &opts)?;
        let bound = states.iter().filter(|s| s.class == StateClass::Bound);
        let mut best = f64::INFINITY;
        for b in bound {
            for a in states.iter().filter(|s| s.class == StateClass::Antibound) {
                best = best.min((b.omega - a.omega).norm());
            }
        }
        if best.is_finite() {
            out.push((k, best));
        }
    }
    Ok(out)
}

/// Least-squares slope of `ln gap` against `ln offset`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let den = n * sxx - sx * sx;
    (den.abs() > 0.0).then(|| (n * sxy - sx * sy) / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roman_labels() {
        assert_eq!(roman(1), "I");
        assert_eq!(roman(2), "II");
        assert_eq!(roman(4), "IV");
        assert_eq!(roman(14), "XIV");
    }

    #[test]
    fn grid_endpoints() {
        let g = KGrid::new(0.1, 0.5, 5).unwrap();
        let p = g.points();
        assert_eq!(p.len(), 5);
        assert!((p[4] - 0.5).abs() < 1e-15);
        assert!(KGrid::new(0.0, 1.0, 3).is_err());
        assert!(KGrid::new(1.0, 0.5, 3).is_err());
    }

    #[test]
    fn slope_of_square_root() {
        let pts: Vec<(f64, f64)> = [1e-4, 1e-3, 1e-2].iter().map(|&x: &f64| (x, 3.0 * x.sqrt())).collect();
        assert!((log_log_slope(&pts).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bound_branch_becomes_resonance() {
        let p = ModelParams::new(0.3 * PI, 1.0, 0.9).unwrap();
        let grid = KGrid::new(0.3 * PI, 1.7 * PI, 141).unwrap();
        let r = sweep_k(&p, &grid, &SweepOptions::default()).unwrap();
        let b = r
            .branches
            .iter()
            .find(|b| {
                b.points
                    .iter()
                    .any(|(k, s)| (k - PI).abs() < 1e-9 && s.class == StateClass::Bound)
            })
            .unwrap();
        for (k, s) in &b.points {
            if *k > 0.62 * PI && *k < 1.38 * PI {
                assert_eq!(s.class, StateClass::Bound, "K/pi = {}", k / PI);
            }
        }
        assert!(b.classes().any(|c| c == StateClass::Resonance));
    }
}
