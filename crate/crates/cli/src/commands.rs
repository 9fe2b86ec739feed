//! The experiment subcommands. Each writes a CSV table, a gnuplot script and
//! a JSON run record into the output directory and returns its summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use spheregate_core::error_budget::{
    analytic_budget, decay_error, k_control_decay_error, numeric_decomposition, ErrorBudget,
};
use spheregate_core::fidelity::{etalon, FidelityReport};
use spheregate_core::geometry::{
    mhz, sample_extra_control, to_mhz, SphericalLayout, DEFAULT_MAX_ATTEMPTS,
};
use spheregate_core::model::{basis_digits, basis_index, format_digits};
use spheregate_core::scenario::{unit_pairs, PairSelection};
use spheregate_core::solver::trajectory_seed;
use spheregate_core::{gate_fidelity, GateParameters, Mode, Overrides, RunSettings, VERSION};

use crate::config::{RunConfig, SweepConfig};
use crate::output::{gnuplot_script, num, prepare_dir, write_record, write_text, RunRecord, Table};

/// Largest register simulated without `--force` (eight atoms).
pub const MAX_DIM: usize = 6561;

/// Bound on the control-control shift of a sampled seventh control, MHz.
pub const SEVENTH_MAX_UCC_MHZ: f64 = 1.0;

/// Heights (as h/R) compared by the chi sweep.
pub const CHI_SWEEP_HEIGHTS: [f64; 2] = [0.37, 0.68];

/// Result of a command: its summary, the files written and any sweep points
/// that failed.
#[derive(Debug, Clone)]
pub struct Outcome<S> {
    pub summary: S,
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

/// Gate parameters for `controls` of `layout` using the configured drive,
/// decay and overrides.
pub fn gate_parameters(
    cfg: &RunConfig,
    layout: SphericalLayout,
    controls: Vec<usize>,
    chi: f64,
) -> GateParameters {
    let mut p = GateParameters::new(layout, controls);
    p.coefficients = cfg.geometry.coefficients();
    p.omega_t = mhz(cfg.drive.omega_t_mhz);
    p.chi = chi;
    p.rates = cfg.decay.rates();
    p.jump_model = cfg.decay.jump_model;
    p.overrides = cfg.overrides;
    p
}

fn run_gate(params: &GateParameters, settings: &RunSettings) -> Result<FidelityReport> {
    let system = params.build()?;
    Ok(gate_fidelity(&system, settings)?)
}

fn finish<S: Serialize>(
    command: &str,
    cfg: &RunConfig,
    dir: &Path,
    stem: &str,
    table: &Table,
    script: &str,
    summary: S,
    failures: Vec<String>,
) -> Result<Outcome<S>> {
    let csv = dir.join(format!("{stem}.csv"));
    let gp = dir.join(format!("{stem}.gp"));
    let json = dir.join(format!("{stem}.json"));
    table.write(&csv)?;
    write_text(&gp, script)?;
    write_record(
        &json,
        &RunRecord {
            command,
            version: VERSION,
            config: cfg,
            summary: &summary,
            failed_points: &failures,
        },
    )?;
    Ok(Outcome {
        summary,
        files: vec![csv, gp, json],
        failures,
    })
}

/// Splits per-point results into values and `label: error` messages.
fn partition<T>(results: Vec<(String, Result<T>)>) -> (Vec<T>, Vec<String>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (label, r) in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failed.push(format!("{label}: {e:#}")),
        }
    }
    (ok, failed)
}

/// Interior local maxima `(x, y)` of a sampled curve.
pub fn local_maxima(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    (1..ys.len().saturating_sub(1))
        .filter(|&i| ys[i] > ys[i - 1] && ys[i] >= ys[i + 1])
        .map(|i| (xs[i], ys[i]))
        .collect()
}

/// Gate fidelities of the three (2+1) units of one layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitFidelities {
    pub h_over_r: f64,
    pub f_linear: f64,
    pub se_linear: f64,
    pub f_acute: f64,
    pub se_acute: f64,
    pub f_obtuse: f64,
    pub se_obtuse: f64,
    pub f_av: f64,
    pub se_av: f64,
    /// `U_ct / U_cc` of each unit.
    pub ratio_linear: f64,
    pub ratio_acute: f64,
    pub ratio_obtuse: f64,
}

/// Runs the antipodal, cross-ring and same-ring units at height `h_over_r`.
/// The closer of the two non-antipodal pairs is reported as the acute unit.
pub fn unit_fidelities(
    cfg: &RunConfig,
    h_over_r: f64,
    chi: f64,
    settings: &RunSettings,
) -> Result<UnitFidelities> {
    let layout = cfg.geometry.layout_at(h_over_r * cfg.geometry.radius_um)?;
    let mut pairs = unit_pairs(&layout)?.to_vec();
    pairs[1..].sort_by(|a, b| a.distance.total_cmp(&b.distance));
    let mut f = [0.0; 3];
    let mut se = [0.0; 3];
    let mut ratio = [0.0; 3];
    for (i, pair) in pairs.iter().enumerate() {
        let params = gate_parameters(cfg, layout.clone(), pair.controls.to_vec(), chi);
        let ints = params.interactions()?;
        ratio[i] = ints.u_ct[0] / ints.u_cc[0][1];
        let r = run_gate(&params, settings)?;
        f[i] = r.average;
        se[i] = r.std_error;
    }
    debug_assert_eq!(pairs[0].selection, PairSelection::Antipodal);
    Ok(UnitFidelities {
        h_over_r,
        f_linear: f[0],
        se_linear: se[0],
        f_acute: f[1],
        se_acute: se[1],
        f_obtuse: f[2],
        se_obtuse: se[2],
        f_av: f.iter().sum::<f64>() / 3.0,
        se_av: se.iter().map(|s| s * s).sum::<f64>().sqrt() / 3.0,
        ratio_linear: ratio[0],
        ratio_acute: ratio[1],
        ratio_obtuse: ratio[2],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepHSummary {
    pub chi: f64,
    pub mode: Mode,
    pub points: Vec<UnitFidelities>,
    /// Interior local maxima of the averaged fidelity, `(h/R, F_av)`.
    pub maxima: Vec<(f64, f64)>,
    pub best: Option<(f64, f64)>,
}

/// Averaged (2+1) fidelity against ring height.
pub fn sweep_h(cfg: &RunConfig, out: &Path) -> Result<Outcome<SweepHSummary>> {
    let dir = prepare_dir(out)?;
    let chi = cfg.chi_or(1.0);
    let settings = cfg.settings(Mode::Mcwf);
    let grid = cfg.sweep_or("h_over_r", SweepConfig::new(0.01, 0.99, 60))?.grid();
    let results: Vec<(String, Result<UnitFidelities>)> = grid
        .par_iter()
        .map(|&x| (format!("h/R={x}"), unit_fidelities(cfg, x, chi, &settings)))
        .collect();
    let (points, failures) = partition(results);

    let mut table = Table::new(&[
        "h_over_r",
        "h_um",
        "f_linear",
        "se_linear",
        "f_acute",
        "se_acute",
        "f_obtuse",
        "se_obtuse",
        "f_av",
        "se_av",
        "uct_over_ucc_linear",
        "uct_over_ucc_acute",
        "uct_over_ucc_obtuse",
    ]);
    table.comment(format!("chi = {chi}, mode = {}, trajectories = {}", settings.mode, settings.trajectories));
    for p in &points {
        table.push(vec![
            num(p.h_over_r),
            num(p.h_over_r * cfg.geometry.radius_um),
            num(p.f_linear),
            num(p.se_linear),
            num(p.f_acute),
            num(p.se_acute),
            num(p.f_obtuse),
            num(p.se_obtuse),
            num(p.f_av),
            num(p.se_av),
            num(p.ratio_linear),
            num(p.ratio_acute),
            num(p.ratio_obtuse),
        ]);
    }
    let xs: Vec<f64> = points.iter().map(|p| p.h_over_r).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.f_av).collect();
    let maxima = local_maxima(&xs, &ys);
    let best = points
        .iter()
        .max_by(|a, b| a.f_av.total_cmp(&b.f_av))
        .map(|p| (p.h_over_r, p.f_av));
    let script = gnuplot_script(
        "sweep_h.csv",
        "sweep_h.png",
        "h / R_ct",
        "fidelity",
        &[(3, "linear"), (5, "acute"), (7, "obtuse"), (9, "average")],
        &["set yrange [0:1.02]"],
    );
    let summary = SweepHSummary {
        chi,
        mode: settings.mode,
        points,
        maxima,
        best,
    };
    finish("sweep-h", &cfg.resolved(chi, settings.mode), &dir, "sweep_h", &table, &script, summary, failures)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiPoint {
    pub chi: f64,
    /// `(F_av, SE)` at each of [`CHI_SWEEP_HEIGHTS`].
    pub fidelities: Vec<(f64, f64)>,
    pub decay_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepChiSummary {
    pub heights: Vec<f64>,
    pub mode: Mode,
    pub points: Vec<ChiPoint>,
}

/// Averaged (2+1) fidelity against the Rabi ratio chi at two heights.
pub fn sweep_chi(cfg: &RunConfig, out: &Path) -> Result<Outcome<SweepChiSummary>> {
    let dir = prepare_dir(out)?;
    let settings = cfg.settings(Mode::Mcwf);
    let grid = cfg.sweep_or("chi", SweepConfig::new(1.0, 10.0, 20))?.grid();
    let rates = cfg.decay.rates();
    let omega_t = mhz(cfg.drive.omega_t_mhz);
    let results: Vec<(String, Result<ChiPoint>)> = grid
        .par_iter()
        .map(|&chi| {
            let point = || -> Result<ChiPoint> {
                if !(chi > 0.0) {
                    bail!("chi must be positive");
                }
                let fidelities = CHI_SWEEP_HEIGHTS
                    .iter()
                    .map(|&h| unit_fidelities(cfg, h, chi, &settings).map(|u| (u.f_av, u.se_av)))
                    .collect::<Result<Vec<_>>>()?;
                let decay_bound =
                    1.0 - decay_error(omega_t, chi * omega_t, rates.gamma_t, rates.gamma_c)?;
                Ok(ChiPoint {
                    chi,
                    fidelities,
                    decay_bound,
                })
            };
            (format!("chi={chi}"), point())
        })
        .collect();
    let (points, failures) = partition(results);

    let mut table = Table::new(&[
        "chi",
        "f_av_h037",
        "se_h037",
        "f_av_h068",
        "se_h068",
        "one_minus_e_sp",
    ]);
    table.comment(format!(
        "omega_t_MHz = {}, mode = {}, trajectories = {}",
        cfg.drive.omega_t_mhz, settings.mode, settings.trajectories
    ));
    for p in &points {
        let mut row = vec![num(p.chi)];
        for (f, se) in &p.fidelities {
            row.push(num(*f));
            row.push(num(*se));
        }
        row.push(num(p.decay_bound));
        table.push(row);
    }
    let script = gnuplot_script(
        "sweep_chi.csv",
        "sweep_chi.png",
        "chi = Omega_c / Omega_t",
        "average fidelity",
        &[(2, "h/R = 0.37"), (4, "h/R = 0.68"), (6, "1 - e_sp")],
        &[],
    );
    let summary = SweepChiSummary {
        heights: CHI_SWEEP_HEIGHTS.to_vec(),
        mode: settings.mode,
        points,
    };
    let mut resolved = cfg.resolved(1.0, settings.mode);
    resolved.drive.chi = None;
    finish("sweep-chi", &resolved, &dir, "sweep_chi", &table, &script, summary, failures)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaPoint {
    pub omega_t_mhz: f64,
    pub e_sp_analytic: f64,
    pub e_bl_env: f64,
    /// Worst pairwise antiblockade estimate over the three units.
    pub e_abl_analytic: f64,
    /// Decomposition averaged over the three units.
    pub numeric: ErrorBudget,
    /// Decomposition of each unit: antipodal, cross-ring, same-ring.
    pub per_unit: Vec<ErrorBudget>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOmegaSummary {
    pub chi: f64,
    pub h_over_r: f64,
    pub mode: Mode,
    pub points: Vec<OmegaPoint>,
}

/// Error budget of the three units at height `h`, target Rabi `omega_t_mhz`.
pub fn omega_point(
    cfg: &RunConfig,
    omega_t_mhz: f64,
    chi: f64,
    settings: &RunSettings,
) -> Result<OmegaPoint> {
    if !(omega_t_mhz > 0.0) {
        bail!("omega_t must be positive");
    }
    let layout = cfg.geometry.layout()?;
    let units: Vec<GateParameters> = unit_pairs(&layout)?
        .iter()
        .map(|p| {
            let mut g = gate_parameters(cfg, layout.clone(), p.controls.to_vec(), chi);
            g.omega_t = mhz(omega_t_mhz);
            g.overrides = Overrides::default();
            g
        })
        .collect();
    let analytic = units
        .iter()
        .map(|u| analytic_budget(u, true))
        .collect::<spheregate_core::Result<Vec<_>>>()?;
    let per_unit = units
        .iter()
        .map(|u| numeric_decomposition(std::slice::from_ref(u), settings))
        .collect::<spheregate_core::Result<Vec<_>>>()?;
    let n = per_unit.len() as f64;
    let mean = |f: fn(&ErrorBudget) -> f64| per_unit.iter().map(f).sum::<f64>() / n;
    let comb = |f: fn(&ErrorBudget) -> f64| per_unit.iter().map(|b| f(b).powi(2)).sum::<f64>().sqrt() / n;
    let numeric = ErrorBudget {
        e_sp: mean(|b| b.e_sp),
        e_bl: mean(|b| b.e_bl),
        e_abl: mean(|b| b.e_abl),
        e_tot: mean(|b| b.e_tot),
        se_sp: comb(|b| b.se_sp),
        se_bl: comb(|b| b.se_bl),
        se_abl: comb(|b| b.se_abl),
        se_tot: comb(|b| b.se_tot),
        source: per_unit[0].source,
    };
    Ok(OmegaPoint {
        omega_t_mhz,
        e_sp_analytic: analytic[0].e_sp,
        e_bl_env: analytic.iter().map(|a| a.e_bl).fold(0.0, f64::max),
        e_abl_analytic: analytic.iter().map(|a| a.e_abl).fold(0.0, f64::max),
        numeric,
        per_unit,
    })
}

/// Numeric error decomposition against the target Rabi frequency.
pub fn sweep_omega(cfg: &RunConfig, out: &Path) -> Result<Outcome<SweepOmegaSummary>> {
    let dir = prepare_dir(out)?;
    let chi = cfg.chi_or(10.0);
    let settings = cfg.settings(Mode::Nojump);
    let grid = cfg.sweep_or("omega_t_MHz", SweepConfig::new(1.0, 20.0, 20))?.grid();
    let results: Vec<(String, Result<OmegaPoint>)> = grid
        .par_iter()
        .map(|&w| (format!("omega_t_MHz={w}"), omega_point(cfg, w, chi, &settings)))
        .collect();
    let (points, failures) = partition(results);

    let mut table = Table::new(&[
        "omega_t_MHz",
        "e_sp_analytic",
        "e_sp_num",
        "e_bl_env",
        "e_bl_num",
        "e_abl_analytic",
        "e_abl_num",
        "e_tot_num",
    ]);
    table.comment(format!(
        "chi = {chi}, h_over_r = {}, mode = {}, trajectories = {}",
        cfg.geometry.height() / cfg.geometry.radius_um,
        settings.mode,
        settings.trajectories
    ));
    for p in &points {
        table.push(vec![
            num(p.omega_t_mhz),
            num(p.e_sp_analytic),
            num(p.numeric.e_sp),
            num(p.e_bl_env),
            num(p.numeric.e_bl),
            num(p.e_abl_analytic),
            num(p.numeric.e_abl),
            num(p.numeric.e_tot),
        ]);
    }
    let script = gnuplot_script(
        "sweep_omega.csv",
        "sweep_omega.png",
        "Omega_t / 2pi (MHz)",
        "error",
        &[
            (2, "e_sp analytic"),
            (3, "e_sp numeric"),
            (4, "e_bl envelope"),
            (5, "e_bl numeric"),
            (7, "e_abl numeric"),
            (8, "e_tot numeric"),
        ],
        &["set logscale y"],
    );
    let summary = SweepOmegaSummary {
        chi,
        h_over_r: cfg.geometry.height() / cfg.geometry.radius_um,
        mode: settings.mode,
        points,
    };
    finish("sweep-omega", &cfg.resolved(chi, settings.mode), &dir, "sweep_omega", &table, &script, summary, failures)
}

fn check_dim(controls: usize, force: bool) -> Result<()> {
    let dim = 3usize
        .checked_pow(controls as u32 + 1)
        .context("register dimension overflows")?;
    if dim > MAX_DIM && !force {
        bail!("register dimension {dim} exceeds {MAX_DIM}; pass --force to run anyway");
    }
    Ok(())
}

fn outcome_rows(table: &mut Table, report: &FidelityReport) -> Result<()> {
    let n = report.n_qubits;
    for o in &report.outcomes {
        let et = etalon(&o.input)?;
        let (dom, pop) = o.dominant_output().unwrap_or((basis_index(&o.input)?, 0.0));
        table.push(vec![
            o.input_bits(),
            format_digits(&et.digits),
            num(o.fidelity),
            num(o.std_error),
            format_digits(&basis_digits(dom, n)),
            num(pop),
        ]);
    }
    Ok(())
}

const OUTCOME_COLUMNS: [&str; 6] = [
    "input",
    "etalon",
    "fidelity",
    "std_error",
    "dominant_output",
    "dominant_population",
];

#[derive(Debug, Clone, Serialize)]
pub struct GateSummary {
    pub controls: usize,
    pub dim: usize,
    pub chi: f64,
    pub mode: Mode,
    pub fidelity: f64,
    pub std_error: f64,
    /// `1 - e_k_sp(k)`.
    pub decay_bound: f64,
    pub report: FidelityReport,
}

/// Full truth-table fidelity of the first `k` controls of the layout.
pub fn gate(cfg: &RunConfig, out: &Path, k: usize, force: bool) -> Result<Outcome<GateSummary>> {
    let layout = cfg.geometry.layout()?;
    if k == 0 || k > layout.control_count() {
        bail!("controls must be in 1..={}, got {k}", layout.control_count());
    }
    check_dim(k, force)?;
    let dir = prepare_dir(out)?;
    let chi = cfg.chi_or(10.0);
    let settings = cfg.settings(Mode::Mcwf);
    let params = gate_parameters(cfg, layout, (0..k).collect(), chi);
    let report = run_gate(&params, &settings)?;
    let rates = params.effective_rates();
    let decay_bound =
        1.0 - k_control_decay_error(k, params.omega_t, params.omega_c(), rates.gamma_t, rates.gamma_c)?;

    let mut table = Table::new(&OUTCOME_COLUMNS);
    table.comment(format!(
        "controls = {k}, chi = {chi}, mode = {}, trajectories = {}, F = {}, SE = {}, 1 - e_k_sp = {}",
        settings.mode, settings.trajectories, report.average, report.std_error, decay_bound
    ));
    outcome_rows(&mut table, &report)?;
    let stem = format!("gate_k{k}");
    let script = format!(
        "set datafile separator ','\nset terminal pngcairo size 900,600\nset output '{stem}.png'\n\
set xlabel 'input index'\nset ylabel 'fidelity'\nset grid\n\
plot '{stem}.csv' using 0:3 skip 1 with impulses title 'per-input fidelity', \\\n     {decay_bound} title '1 - e_k_sp'\n"
    );
    let summary = GateSummary {
        controls: k,
        dim: params.build()?.dim(),
        chi,
        mode: settings.mode,
        fidelity: report.average,
        std_error: report.std_error,
        decay_bound,
        report,
    };
    finish("gate", &cfg.resolved(chi, settings.mode), &dir, &stem, &table, &script, summary, Vec::new())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeventhSample {
    pub sample: usize,
    pub position_um: [f64; 3],
    pub u_ct_mhz: f64,
    pub max_ucc_mhz: f64,
    pub fidelity: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeventhSummary {
    pub chi: f64,
    pub mode: Mode,
    pub samples: Vec<SeventhSample>,
    pub mean: f64,
    pub spread: f64,
    pub se_mean: f64,
    /// `1 - e_k_sp(k)` for the full register.
    pub decay_bound: f64,
    /// `mean(1 - F) - e_k_sp(k)`.
    pub gap: f64,
}

/// Seed of seventh-control sample `s`.
pub fn sample_seed(master_seed: u64, s: usize) -> u64 {
    trajectory_seed(master_seed, u64::MAX, s as u64)
}

/// Adds one randomly placed control to the full two-ring layout and
/// measures the gate fidelity for each of `samples` placements.
pub fn seventh(cfg: &RunConfig, out: &Path, samples: usize, force: bool) -> Result<Outcome<SeventhSummary>> {
    if samples == 0 {
        bail!("need at least one sample");
    }
    let base = cfg.geometry.layout()?;
    let k = base.control_count() + 1;
    check_dim(k, force)?;
    let dir = prepare_dir(out)?;
    let chi = cfg.chi_or(10.0);
    let settings = cfg.settings(Mode::Mcwf);
    let c6 = cfg.geometry.coefficients().c6;

    let results: Vec<(String, Result<SeventhSample>)> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let run = || -> Result<SeventhSample> {
                let pos = sample_extra_control(
                    &base,
                    mhz(SEVENTH_MAX_UCC_MHZ),
                    c6,
                    sample_seed(cfg.master_seed, s),
                    DEFAULT_MAX_ATTEMPTS,
                )?;
                let layout = base.with_extra_control(pos)?;
                let params = gate_parameters(cfg, layout, (0..k).collect(), chi);
                let ints = params.interactions()?;
                let report = run_gate(&params, &settings)?;
                let max_ucc = ints.u_cc[k - 1][..k - 1].iter().fold(0.0f64, |m, u| m.max(u.abs()));
                Ok(SeventhSample {
                    sample: s,
                    position_um: pos,
                    u_ct_mhz: to_mhz(ints.u_ct[k - 1]),
                    max_ucc_mhz: to_mhz(max_ucc),
                    fidelity: report.average,
                    std_error: report.std_error,
                })
            };
            (format!("sample {s}"), run())
        })
        .collect();
    let (done, failures) = partition(results);

    let m = done.len() as f64;
    let mean = done.iter().map(|s| s.fidelity).sum::<f64>() / m;
    let spread = if done.len() > 1 {
        (done.iter().map(|s| (s.fidelity - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    let se_mean = spread / m.sqrt();
    let p = gate_parameters(cfg, base, Vec::new(), chi);
    let rates = p.effective_rates();
    let e_k = k_control_decay_error(k, p.omega_t, p.omega_c(), rates.gamma_t, rates.gamma_c)?;

    let mut table = Table::new(&[
        "sample",
        "x_um",
        "y_um",
        "z_um",
        "u_ct_MHz",
        "max_ucc_MHz",
        "fidelity",
        "std_error",
    ]);
    table.comment(format!(
        "controls = {k}, chi = {chi}, mode = {}, trajectories = {}, mean F = {mean}, 1 - e_k_sp = {}",
        settings.mode,
        settings.trajectories,
        1.0 - e_k
    ));
    for s in &done {
        table.push(vec![
            s.sample.to_string(),
            num(s.position_um[0]),
            num(s.position_um[1]),
            num(s.position_um[2]),
            num(s.u_ct_mhz),
            num(s.max_ucc_mhz),
            num(s.fidelity),
            num(s.std_error),
        ]);
    }
    let script = format!(
        "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n\
set output 'seventh.png'\nset xlabel 'sample'\nset ylabel 'fidelity'\nset grid\n\
plot 'seventh.csv' using 1:7:8 with yerrorbars title 'F', {mean} title 'mean', {} title '1 - e_k_sp'\n",
        1.0 - e_k
    );
    let summary = SeventhSummary {
        chi,
        mode: settings.mode,
        samples: done,
        mean,
        spread,
        se_mean,
        decay_bound: 1.0 - e_k,
        gap: (1.0 - mean) - e_k,
    };
    finish("seventh", &cfg.resolved(chi, settings.mode), &dir, "seventh", &table, &script, summary, failures)
}

#[derive(Debug, Clone, Serialize)]
pub struct TruthTableSummary {
    pub controls: usize,
    pub ideal: bool,
    pub mode: Mode,
    pub report: FidelityReport,
    /// Human-readable table.
    pub text: String,
}

/// Per-input dominant output and etalon population of the first `k` controls.
/// With `ideal`, decay and control-control shifts are removed and the
/// blockade is made near-perfect.
pub fn truth_table(
    cfg: &RunConfig,
    out: &Path,
    k: usize,
    ideal: bool,
    force: bool,
) -> Result<Outcome<TruthTableSummary>> {
    let layout = cfg.geometry.layout()?;
    if k == 0 || k > layout.control_count() {
        bail!("controls must be in 1..={}, got {k}", layout.control_count());
    }
    check_dim(k, force)?;
    let dir = prepare_dir(out)?;
    let chi = cfg.chi_or(10.0);
    let settings = cfg.settings(Mode::Mcwf);
    let mut params = gate_parameters(cfg, layout, (0..k).collect(), chi);
    if ideal {
        params.overrides = Overrides::ideal();
    }
    let report = run_gate(&params, &settings)?;

    let mut table = Table::new(&OUTCOME_COLUMNS);
    table.comment(format!(
        "controls = {k}, chi = {chi}, ideal = {ideal}, mode = {}, trajectories = {}",
        settings.mode, settings.trajectories
    ));
    outcome_rows(&mut table, &report)?;

    let mut text = String::new();
    writeln!(text, "{:<10} {:<10} {:<10} {:>10} {:>10}", "input", "etalon", "dominant", "pop", "fidelity")?;
    for row in &table.rows {
        writeln!(text, "{:<10} {:<10} {:<10} {:>10.6} {:>10.6}",
            row[0], row[1], row[4],
            row[5].parse::<f64>().unwrap_or(f64::NAN),
            row[2].parse::<f64>().unwrap_or(f64::NAN))?;
    }
    writeln!(text, "average fidelity {:.6} +/- {:.6}", report.average, report.std_error)?;

    let stem = format!("truth_table_k{k}");
    let script = format!(
        "set datafile separator ','\nset terminal pngcairo size 900,600\nset output '{stem}.png'\n\
set xlabel 'input index'\nset ylabel 'population'\nset yrange [0:1.02]\nset grid\n\
plot '{stem}.csv' using 0:3 skip 1 with impulses title 'etalon population', \\\n     '' using 0:6 skip 1 with points title 'dominant output'\n"
    );
    let summary = TruthTableSummary {
        controls: k,
        ideal,
        mode: settings.mode,
        report,
        text,
    };
    finish("truth-table", &cfg.resolved(chi, settings.mode), &dir, &stem, &table, &script, summary, Vec::new())
}
