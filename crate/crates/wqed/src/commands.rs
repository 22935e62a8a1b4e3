//! The subcommands, as library functions returning a one-paragraph
//! summary.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use rayon::prelude::*;
use wqed_core::asymptotics::{self, AsymptoteEval, Direction};
use wqed_core::kernel::{self, CoeffParts};
use wqed_core::model::{self, ModelParams, PairMomentum};
use wqed_core::sweep::{self, EpOptions, KGrid, KSlice, SweepOptions, SweepResult};
use wqed_core::{solver, ContinuumBands, StateClass, C64};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::oracle::{self, Corners};
use crate::output::{AsymptoteRow, ContinuumRow, EpRow, OutputSet, SpectrumRow};

/// Samples of the single-photon momentum per continuum evaluation.
pub const CONTINUUM_SAMPLES: usize = 4000;
/// Ratio bracket of the exceptional-point bisection.
pub const EP_BRACKET: (f64, f64) = (0.01, 0.95);

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

/// Per-slice states and continua.
#[derive(Debug, Clone)]
pub struct SweepData {
    pub result: SweepResult,
    pub continua: Vec<ContinuumBands>,
}

/// Solves every grid point on `jobs` threads, then links branches in one
/// deterministic pass.
pub fn parallel_sweep(params: &ModelParams, grid: &KGrid, opts: &SweepOptions, jobs: usize) -> Result<SweepData> {
    let points = grid.points();
    let solved: Vec<(f64, Option<KSlice>, Option<ContinuumBands>)> = pool(jobs)?.install(|| {
        points
            .par_iter()
            .map(|&k| -> Result<_> {
                let Some(slice) = sweep::solve_slice(params, k, opts)? else {
                    return Ok((k, None, None));
                };
                let m = PairMomentum::new(params, k)?;
                let bands = model::continuum_bands(params, &m, CONTINUUM_SAMPLES)?;
                Ok((k, Some(slice), Some(bands)))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let continua = solved.iter().filter_map(|s| s.2.clone()).collect();
    let slices: Vec<(f64, Option<KSlice>)> = solved.into_iter().map(|(k, s, _)| (k, s)).collect();
    Ok(SweepData {
        result: sweep::link_branches(params, &slices, opts),
        continua,
    })
}

fn spectrum_rows(data: &SweepData, emit_antibound: bool) -> Vec<SpectrumRow> {
    data.result
        .rows()
        .into_iter()
        .filter(|(_, _, s)| emit_antibound || s.class != StateClass::Antibound)
        .map(|(k, id, s)| {
            let region = data
                .continua
                .iter()
                .find(|c| c.k == k)
                .map_or_else(String::new, |c| model::classify_energy(c, s.omega).to_string());
            SpectrumRow {
                k,
                branch_id: id,
                class: s.class.as_str(),
                re_omega: s.omega.re,
                im_omega: s.omega.im,
                re_za: s.z_a.re,
                im_za: s.z_a.im,
                re_zb: s.z_b.re,
                im_zb: s.z_b.im,
                abs_za: s.z_a.norm(),
                abs_zb: s.z_b.norm(),
                residual: s.residual,
                region,
            }
        })
        .collect()
}

fn continuum_rows(data: &SweepData) -> Vec<ContinuumRow> {
    data.continua
        .iter()
        .flat_map(|c| c.bands.iter().map(move |b| ContinuumRow::new(c.k, b.label.as_str(), b.lo, b.hi)))
        .collect()
}

/// `phi` and `xi` are echoed as configured rather than recomputed.
fn write_sweep(cfg: &RunConfig, xi: f64, data: &SweepData) -> Result<String> {
    let rows = spectrum_rows(data, cfg.emit_antibound);
    let mut out = OutputSet::new();
    out.add("spectrum", &rows, cfg.format)?;
    out.add("continuum", &continuum_rows(data), cfg.format)?;
    let paths = out.commit(&cfg.out_dir)?;
    let mut s = format!(
        "phi = {}pi, xi = {}: {} K points ({} skipped), {} branches, {} states",
        cfg.phi()?,
        xi,
        cfg.k_n,
        data.result.skipped.len(),
        data.result.branches.len(),
        rows.len()
    );
    if !data.result.reconnections.is_empty() {
        let _ = write!(s, ", {} joined through infinity", data.result.reconnections.len());
    }
    for p in paths {
        let _ = write!(s, "\n  wrote {}", p.display());
    }
    Ok(s)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<String> {
    cfg.phi()?;
    let params = cfg.params()?;
    let data = parallel_sweep(&params, &cfg.grid()?, &cfg.sweep_options(), cfg.jobs)?;
    write_sweep(cfg, cfg.xi, &data)
}

/// The sweep of the fully chiral array (`xi = 0`), checked against the
/// closed form.
pub fn cmd_chiral(cfg: &RunConfig) -> Result<String> {
    cfg.phi()?;
    let params = ModelParams::new(cfg.params()?.phi(), cfg.gamma_1d, 0.0)?;
    let data = parallel_sweep(&params, &cfg.grid()?, &cfg.sweep_options(), cfg.jobs)?;
    let mut worst = 0.0_f64;
    for (k, _, s) in data.result.rows() {
        let x = params.phi() - 0.5 * k;
        let exact = params.gamma_r() * x.cos() / x.sin();
        worst = worst.max((s.omega.re - exact).abs() / exact.abs().max(1.0)).max(s.omega.im.abs());
    }
    let mut s = write_sweep(cfg, 0.0, &data)?;
    let _ = write!(s, "\n  largest relative deviation from gamma_r cot(phi - K/2): {worst:.3e}");
    Ok(s)
}

pub fn cmd_ep(cfg: &RunConfig) -> Result<String> {
    let phis = cfg.ep_phis()?;
    let opts = EpOptions {
        solver: cfg.solver_options(),
        ..EpOptions::default()
    };
    let results: Vec<(f64, Result<sweep::EpResult>)> = pool(cfg.jobs)?.install(|| {
        phis.par_iter()
            .map(|&phi| {
                let r = sweep::ep_k_range(phi * PI)
                    .and_then(|grid| sweep::find_ep(phi * PI, EP_BRACKET, &grid, &opts))
                    .map_err(Error::from);
                (phi, r)
            })
            .collect::<Vec<_>>()
    });
    let rows: Vec<EpRow> = results
        .iter()
        .map(|(phi, r)| match r {
            Ok(ep) => EpRow {
                phi_over_pi: *phi,
                ratio_ep: Some(ep.ratio_ep),
                k_ep_over_pi: Some(ep.k_ep / PI),
                error: None,
            },
            Err(e) => EpRow {
                phi_over_pi: *phi,
                ratio_ep: None,
                k_ep_over_pi: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let ok = rows.iter().filter(|r| r.error.is_none()).count();
    if ok == 0 {
        let first = results.into_iter().find_map(|(_, r)| r.err());
        return Err(first.unwrap_or_else(|| Error::Config("phi list is empty".into())));
    }
    let mut out = OutputSet::new();
    out.add("ep_curve", &rows, cfg.format)?;
    let paths = out.commit(&cfg.out_dir)?;
    let mut s = format!("exceptional points: {ok} of {} phases", rows.len());
    for r in &rows {
        match (&r.error, r.ratio_ep, r.k_ep_over_pi) {
            (None, Some(ratio), Some(k)) => {
                let _ = write!(s, "\n  phi = {}pi: ratio {ratio:.5}, K = {k:.5}pi", r.phi_over_pi);
            }
            (Some(e), ..) => {
                let _ = write!(s, "\n  phi = {}pi: failed ({e})", r.phi_over_pi);
            }
            _ => {}
        }
    }
    for p in paths {
        let _ = write!(s, "\n  wrote {}", p.display());
    }
    Ok(s)
}

pub fn cmd_asymptotes(cfg: &RunConfig) -> Result<String> {
    cfg.phi()?;
    let params = cfg.params()?;
    let window = cfg.window_over_pi * PI;
    let mut rows = Vec::new();
    for k in cfg.grid()?.points() {
        if params.check_momentum(k, window).is_err() {
            continue;
        }
        let m = PairMomentum::new(&params, k)?;
        let a = match AsymptoteEval::new(&params, &m) {
            Ok(a) => a,
            Err(wqed_core::Error::Domain(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        for (branch, w) in [
            ("omega_plus", a.omega_plus),
            ("omega_minus", a.omega_minus),
            ("omega_fwd", a.omega_fwd),
            ("omega_bwd", a.omega_bwd),
        ] {
            if w.re.is_finite() && w.im.is_finite() {
                rows.push(AsymptoteRow {
                    k,
                    branch,
                    re_omega: w.re,
                    im_omega: w.im,
                });
            }
        }
    }
    let mut out = OutputSet::new();
    out.add("asymptotes", &rows, cfg.format)?;
    let paths = out.commit(&cfg.out_dir)?;
    let mut s = format!("asymptotes: {} rows over {} K points", rows.len(), cfg.k_n);
    for p in paths {
        let _ = write!(s, "\n  wrote {}", p.display());
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut s = String::new();
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{mark}  {:width$}  {}", c.name, c.detail);
        }
        s
    }
}

fn check(name: &'static str, r: Result<(bool, String)>) -> Check {
    match r {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Phases / pi of the inverse-identity check.
pub const INVERSE_PHASES: [f64; 16] = [
    0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9,
];

/// `max |F F^-1 - I|` at truncation `n`.
pub fn inverse_identity_error(phase: f64, n: usize) -> Result<f64> {
    let f = oracle::dense_f(phase, n).entries;
    let inv = kernel::inverse_f(phase, n)?;
    let mut worst = 0.0_f64;
    for i in 0..n {
        // Row i of F times the banded inverse.
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for l in j.saturating_sub(1)..(j + 2).min(n) {
                acc += f[(i, l)] * inv.get(l, j);
            }
            if i == j {
                acc -= 1.0;
            }
            worst = worst.max(acc.norm());
        }
    }
    Ok(worst)
}

fn check_inverse() -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for p in INVERSE_PHASES {
        worst = worst.max(inverse_identity_error(p * PI, 200)?);
    }
    Ok((worst < 1e-10, format!("max |F F^-1 - I| = {worst:.2e} at N = 200")))
}

/// Worst eigenvalue mismatch between the dense operator and the pencil, the
/// largest `Im omega` of the pencil, and the conjugation defect with real
/// corners.
pub fn similarity_errors(params: &ModelParams, k: f64, n: usize) -> Result<(f64, f64, f64)> {
    let m = PairMomentum::new(params, k)?;
    let dense = oracle::eig_all(&oracle::build_hk(params, &m, n)?, false)?.omegas();
    let pencil = oracle::eig_generalized(&oracle::build_generalized(params, &m, n, Corners::Complex)?)?.omegas();
    let real = oracle::eig_generalized(&oracle::build_generalized(params, &m, n, Corners::Real)?)?.omegas();
    let conj: Vec<C64> = real.iter().map(|w| w.conj()).collect();
    let max_im = pencil.iter().map(|w| w.im).fold(f64::NEG_INFINITY, f64::max);
    Ok((
        oracle::multiset_distance(&dense, &pencil),
        max_im,
        oracle::multiset_distance(&real, &conj),
    ))
}

fn check_similarity(params: &ModelParams) -> Result<(bool, String)> {
    let (d, im, c) = similarity_errors(params, PI, 200)?;
    Ok((
        d < 1e-8 && im <= 1e-10 && c < 1e-8,
        format!("eigenvalue mismatch {d:.2e}, max Im omega {im:.2e}, real-corner conjugation {c:.2e}"),
    ))
}

/// Dense-oracle comparison of every bound state at one `K`: the largest
/// distance and the smallest overlap.
pub fn bound_state_match(params: &ModelParams, k: f64, n: usize) -> Result<Option<(f64, f64)>> {
    let m = PairMomentum::new(params, k)?;
    let bound: Vec<_> = solver::solve_states(params, &m)?
        .into_iter()
        .filter(|s| s.class == StateClass::Bound)
        .collect();
    if bound.is_empty() {
        return Ok(None);
    }
    let spec = oracle::eig_all(&oracle::build_hk(params, &m, n)?, true)?;
    let parts = CoeffParts::new(params, &m)?;
    let mut dist = 0.0_f64;
    let mut overlap = 1.0_f64;
    for s in &bound {
        let hit = oracle::match_state(&spec, s, &parts, n / 2)?;
        dist = dist.max(hit.distance);
        overlap = overlap.min(hit.overlap);
    }
    Ok(Some((dist, overlap)))
}

fn check_bound(params: &ModelParams, n: usize) -> Result<(bool, String)> {
    Ok(match bound_state_match(params, PI, n)? {
        None => (false, "no bound state at K = pi".into()),
        Some((d, o)) => (
            d < 1e-6 * params.gamma_1d() && o > 0.999,
            format!("distance {d:.2e}, overlap {o:.9} at K = pi, N = {n}"),
        ),
    })
}

fn check_single_excitation(params: &ModelParams) -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for q in [0.0, PI, 0.5, -1.3, 2.0] {
        worst = worst.max(oracle::single_excitation_check(params, q)?);
    }
    let pole = oracle::pole_fit(params, 1e-3)?.worst_relative();
    Ok((
        worst < 1e-10 * params.gamma_1d() && pole < 1e-6,
        format!("max |closed - lattice sum| = {worst:.2e}, pole coefficient error {pole:.2e}"),
    ))
}

/// Largest pairwise disagreement among the closed edge asymptote, the
/// direct double sum and the closed geometric sums.
pub fn edge_three_way(params: &ModelParams, k: f64, direction: Direction) -> Result<f64> {
    let m = PairMomentum::new(params, k)?;
    let (g, pa) = match direction {
        Direction::Forward => (params.gamma_r(), m.phi_r()),
        Direction::Backward => (params.gamma_l(), m.phi_l()),
    };
    let direct = asymptotics::omega_edge(params, &m, direction)? - g * pa.cos() / pa.sin();
    let numeric = asymptotics::sigma_numeric(params, &m, direction, 2000)?;
    let sums = asymptotics::sigma_closed_sums(params, &m, direction)?;
    Ok((direct - numeric).norm().max((direct - sums).norm()).max((numeric - sums).norm()))
}

fn check_edge(params: &ModelParams) -> Result<(bool, String)> {
    let phi = params.phi();
    let a = edge_three_way(params, 2.0 * phi + 0.3, Direction::Forward)?;
    let b = edge_three_way(params, TAU - 2.0 * phi - 0.3, Direction::Backward)?;
    let worst = a.max(b);
    Ok((worst < 1e-10, format!("max disagreement {worst:.2e}")))
}

fn check_residuals(cfg: &RunConfig, params: &ModelParams) -> Result<(bool, String)> {
    let opts = cfg.solver_options();
    let mut worst = 0.0_f64;
    let mut count = 0;
    for k in [0.3 * PI, 0.5 * PI, PI, 1.2 * PI, 1.5 * PI, 1.8 * PI] {
        if params.check_momentum(k, opts.singular_window).is_err() {
            continue;
        }
        let m = PairMomentum::new(params, k)?;
        match solver::solve_states_with(params, &m, &opts) {
            Ok(states) => {
                for s in states {
                    worst = worst.max(s.residual);
                    count += 1;
                }
            }
            Err(e @ wqed_core::Error::Numerical { .. }) => {
                return Ok((false, format!("K = {}pi: {e}", k / PI)));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((worst < 1e-9, format!("{count} states, largest residual {worst:.2e}")))
}

pub fn verify_report(cfg: &RunConfig) -> Result<VerifyReport> {
    cfg.phi()?;
    let params = cfg.params()?;
    Ok(VerifyReport {
        checks: vec![
            check("inverse identity", check_inverse()),
            check("similarity consistency", check_similarity(&params)),
            check("bound-state match", check_bound(&params, cfg.oracle_n)),
            check("single-excitation dispersion", check_single_excitation(&params)),
            check("edge asymptote three-way", check_edge(&params)),
            check("residual gate", check_residuals(cfg, &params)),
        ],
    })
}

/// Prints nothing itself; a failing report becomes [`Error::Verify`]
/// carrying the table.
pub fn cmd_verify(cfg: &RunConfig) -> Result<String> {
    let report = verify_report(cfg)?;
    let table = report.table();
    if report.passed() {
        Ok(table.trim_end().to_string())
    } else {
        let names: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(Error::Verify {
            failed: names.join(", "),
            table: table.trim_end().to_string(),
        })
    }
}
