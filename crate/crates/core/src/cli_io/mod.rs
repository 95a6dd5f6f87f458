//! Configuration, run orchestration, persistence and the experiment subcommands.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;

pub use config::{
    load_config, CellRuleName, DiagnosticsSection, GridConfig, InitialConfig, InitialKind,
    IntegratorName, OutputsConfig, PhysicsConfig, PlanConfig, RunConfig, ScatteringConfig,
};
pub use output::{
    decode_snapshot, encode_snapshot, fmt_f64, read_csv, read_snapshot, timeseries_csv,
    timeseries_header, write_atomic, write_snapshot, write_text, Metadata, FORMAT_VERSION,
    SNAPSHOT_MAGIC, SNAPSHOT_VERSION,
};

use crate::diagnostics::{
    diagnostics_record, log_log_fit, scattering_norm, sobolev_norm, wk_inf_norms,
    DiagnosticsConfig, DiagnosticsRecord,
};
use crate::error::{Error, Result};
use crate::evolve::{evolve, Observer, SimState};
use crate::hartree::HartreeOperator;
use crate::oracle::{self, OracleCheck};
use crate::scattering::{
    limit_profile_field, make_profile, scattering_report, CauchyMetric, FrequencySet,
    PhaseRateEvaluator, PhaseTracker, ProfileSnapshot, ScatteringReport,
};
use crate::spectral::{forward_ft, japanese, ComplexField, Space, SpectralGrid};

pub const GAUGE_NOTE: &str = "kernel zero mode removed; W has zero spatial mean, so solutions \
differ from the free-space gauge by a spatially uniform time-dependent phase";
pub const ENERGY_NOTE: &str = "energy_paper = 1/2<u,<D>u> + lambda/4 int W|u|^2; \
energy_cons = 1/2<u,<D>u> - lambda/4 int W|u|^2 (conserved by the flow)";
pub const B_NOTE: &str = "B(t,xi) integrates |u_hat(s,sigma)|^2 at the running time s";

/// Command-line overrides applied on top of a loaded configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub probes: Vec<[f64; 2]>,
    pub full_lattice: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(out) = &self.out {
            cfg.outputs.directory = out.clone();
        }
        if !self.probes.is_empty() {
            cfg.scattering.probe_xis = self.probes.clone();
        }
        if self.full_lattice {
            cfg.scattering.full_lattice = true;
        }
    }
}

/// Parses a `--probe` argument of the form `"ξ1,ξ2"`.
pub fn parse_probe(s: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!(
            "probe must be two comma-separated numbers, got {s:?}"
        )));
    }
    let p = |v: &str| {
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::Config(format!("bad probe component {v:?}")))
    };
    Ok([p(parts[0])?, p(parts[1])?])
}

/// Initial data described by the configuration.
pub fn initial_field(cfg: &RunConfig, grid: &SpectralGrid) -> Result<ComplexField> {
    let ic = &cfg.initial;
    match ic.kind {
        InitialKind::Gaussian => {
            let s = 0.5 / (ic.width * ic.width);
            let [c1, c2] = ic.center;
            let [k1, k2] = ic.momentum;
            Ok(grid.sample_physical(|x, y| {
                let r2 = (x - c1).powi(2) + (y - c2).powi(2);
                Complex64::from_polar(ic.amplitude * (-r2 * s).exp(), k1 * x + k2 * y)
            }))
        }
        InitialKind::File => {
            let path = ic.path.as_ref().expect("validated");
            let (u, _) = read_snapshot(path)
                .map_err(|e| Error::Config(format!("initial.path {}: {e}", path.display())))?;
            if u.space() != Space::Physical {
                return Err(Error::Config(
                    "initial snapshot must be in physical space".into(),
                ));
            }
            if u.grid().n() != grid.n() || u.grid().half_width() != grid.half_width() {
                return Err(Error::Config(format!(
                    "initial snapshot grid (n={}, L={}) differs from grid (n={}, L={})",
                    u.grid().n(),
                    u.grid().half_width(),
                    grid.n(),
                    grid.half_width()
                )));
            }
            Ok(ComplexField::new(grid, u.into_values(), Space::Physical))
        }
    }
}

/// The three seminorms bounding the initial data: `‖u₀‖_{H^{n_d}}`,
/// `‖⟨x⟩²u₀‖_{H²}`, `‖⟨ξ⟩^k û₀‖_∞`.
pub fn initial_seminorms(u0: &ComplexField, sobolev_order: f64, k: u32) -> Result<[f64; 3]> {
    let grid = u0.grid();
    let xs = grid.xs();
    let mut weighted = u0.clone();
    let v = weighted.values_mut();
    for (i, &x1) in xs.iter().enumerate() {
        for (j, &x2) in xs.iter().enumerate() {
            v[grid.index(i, j)] *= 1.0 + x1 * x1 + x2 * x2;
        }
    }
    Ok([
        sobolev_norm(u0, sobolev_order)?,
        sobolev_norm(&weighted, 2.0)?,
        scattering_norm(u0, k)?,
    ])
}

/// Header shared by all outputs of a run.
pub fn run_metadata(cfg: &RunConfig, command: &str, u0: &ComplexField) -> Result<Metadata> {
    let mut m = Metadata::new();
    m.push("tool", "relhartree2d")
        .push("format_version", FORMAT_VERSION)
        .push("command", command)
        .push("config_hash", cfg.hash())
        .push(
            "grid",
            format!("n={} L={}", cfg.grid.n, cfg.grid.half_width),
        )
        .push(
            "physics",
            format!(
                "lambda={} gamma={} n_index={} k_index={} delta0={} dealias={}",
                cfg.physics.lambda,
                cfg.physics.gamma,
                cfg.physics.n_index,
                cfg.physics.k_index,
                cfg.physics.delta0,
                cfg.physics.dealias
            ),
        )
        .push("gauge", GAUGE_NOTE)
        .push("energy_conventions", ENERGY_NOTE)
        .push("phase_correction_reading", B_NOTE);
    let [hn, wx, s] = initial_seminorms(u0, cfg.diagnostics.sobolev_order, cfg.physics.k_index)?;
    m.push("u0_hn", fmt_f64(hn))
        .push("u0_weighted_h2", fmt_f64(wx))
        .push("u0_scattering_norm", fmt_f64(s));
    for (k, v) in cfg.echo() {
        m.push(format!("config.{k}"), v);
    }
    Ok(m)
}

/// Frequencies tracked for `B`: the probes first (in configured order), then
/// either the whole lattice or the coarse sublattice restricted to where
/// `⟨ξ⟩^k|û₀|` is non-negligible.
pub fn tracked_points(
    cfg: &RunConfig,
    grid: &SpectralGrid,
    u0: &ComplexField,
    with_metric_set: bool,
) -> Result<(FrequencySet, Vec<usize>)> {
    let probes = FrequencySet::probes(grid, &cfg.scattering.probe_xis);
    let set = if cfg.scattering.full_lattice {
        probes.union(&FrequencySet::full(grid))
    } else if with_metric_set {
        let uh = forward_ft(u0)?;
        let k = cfg.physics.k_index as i32;
        let xis = grid.xis();
        let weight = |a: usize, b: usize| japanese(xis[a], xis[b]).powi(k) * uh.at(a, b).norm();
        let peak = FrequencySet::full(grid)
            .indices()
            .iter()
            .map(|&(a, b)| weight(a, b))
            .fold(0.0, f64::max);
        let thr = cfg.scattering.support_threshold * peak;
        let coarse =
            FrequencySet::coarse(grid, cfg.scattering.coarsen).retain(|(a, b)| weight(a, b) >= thr);
        probes.union(&coarse)
    } else {
        probes
    };
    let positions = cfg
        .scattering
        .probe_xis
        .iter()
        .map(|&xi| {
            set.position(grid.nearest_frequency_index(xi))
                .expect("probes are part of the tracked set")
        })
        .collect();
    Ok((set, positions))
}

fn tracker(cfg: &RunConfig, grid: &SpectralGrid, points: FrequencySet) -> PhaseTracker {
    let ev = PhaseRateEvaluator::new(grid, points, cfg.scattering.singular_cell.into())
        .with_sigma_threshold(cfg.scattering.sigma_threshold);
    PhaseTracker::new(Arc::new(ev)).with_stride(cfg.scattering.b_stride)
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.outputs.directory.join(name)
}

/// Fitted power-law slope over the configured window.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub label: String,
    pub slope: f64,
    pub stderr: f64,
    pub samples: usize,
}

fn fit_window(cfg: &RunConfig, t: &[f64], v: &[f64]) -> Vec<(f64, f64)> {
    let lo = cfg.diagnostics.fit_t_min;
    let hi = cfg.diagnostics.fit_t_max.unwrap_or(f64::INFINITY);
    t.iter()
        .zip(v)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(t, v)| (*t, *v))
        .collect()
}

fn decay_fits(cfg: &RunConfig, t: &[f64], series: &[(String, Vec<f64>)]) -> Vec<DecayFit> {
    series
        .iter()
        .filter_map(|(label, v)| {
            let pts = fit_window(cfg, t, v);
            log_log_fit(&pts, 3).ok().map(|(slope, stderr)| DecayFit {
                label: label.clone(),
                slope,
                stderr,
                samples: pts.len(),
            })
        })
        .collect()
}

fn decay_csv(fits: &[DecayFit]) -> String {
    let mut s = String::from("quantity,slope,stderr,samples\n");
    for f in fits {
        s.push_str(&format!(
            "{},{},{},{}\n",
            f.label,
            fmt_f64(f.slope),
            fmt_f64(f.stderr),
            f.samples
        ));
    }
    s
}

/// Result of `simulate`.
#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub records: Vec<DiagnosticsRecord>,
    pub fits: Vec<DecayFit>,
    pub final_state: SimState,
    pub metadata: Metadata,
}

struct Recorder<'a> {
    op: &'a HartreeOperator,
    dcfg: DiagnosticsConfig,
    records: Vec<DiagnosticsRecord>,
    profiles: Option<Vec<ProfileSnapshot>>,
    snapshot_cadence: usize,
    snapshot_dir: Option<PathBuf>,
    seen: usize,
}

impl Observer for Recorder<'_> {
    fn observe(&mut self, state: &SimState) -> Result<()> {
        self.records
            .push(diagnostics_record(state, self.op, &self.dcfg)?);
        if let Some(p) = self.profiles.as_mut() {
            p.push(make_profile(state)?);
        }
        self.seen += 1;
        if let Some(dir) = &self.snapshot_dir {
            if self.snapshot_cadence > 0 && self.seen.is_multiple_of(self.snapshot_cadence) {
                write_snapshot(
                    &dir.join(format!("snapshot_{:04}.rh2d", self.seen)),
                    &state.u,
                    state.t,
                )?;
            }
        }
        Ok(())
    }
}

struct RunProducts {
    records: Vec<DiagnosticsRecord>,
    profiles: Vec<ProfileSnapshot>,
    final_state: SimState,
}

/// Shared driver: evolves with a recorder, persisting the last finite state
/// if the run goes non-finite.
fn drive(
    cfg: &RunConfig,
    state: SimState,
    probe_positions: Vec<usize>,
    keep_profiles: bool,
    write_snapshots: bool,
) -> Result<RunProducts> {
    let plan = cfg.run_plan();
    let op = HartreeOperator::new(state.grid(), state.params)?;
    let mut rec = Recorder {
        op: &op,
        dcfg: DiagnosticsConfig {
            sobolev_order: cfg.diagnostics.sobolev_order,
            probe_positions,
        },
        records: Vec::new(),
        profiles: keep_profiles.then(Vec::new),
        snapshot_cadence: cfg.outputs.snapshot_cadence,
        snapshot_dir: write_snapshots.then(|| cfg.outputs.directory.clone()),
        seen: 0,
    };
    if plan.output_times.first().is_none_or(|&t| t > 0.0) {
        rec.observe(&state)?;
    }
    let result = evolve(state, &plan, &mut [&mut rec]);
    match result {
        Ok(final_state) => Ok(RunProducts {
            records: rec.records,
            profiles: rec.profiles.unwrap_or_default(),
            final_state,
        }),
        Err(Error::NonFinite { t, last_good }) => {
            if write_snapshots {
                write_snapshot(&out_path(cfg, "last_good.rh2d"), &last_good.u, last_good.t)?;
            }
            Err(Error::NonFinite { t, last_good })
        }
        Err(e) => Err(e),
    }
}

fn initial_state(cfg: &RunConfig) -> Result<(SpectralGrid, SimState)> {
    let grid = cfg.grid()?;
    let u0 = initial_field(cfg, &grid)?;
    Ok((grid, SimState::new(u0, cfg.nonlinearity(), cfg.indices())))
}

fn record_columns(records: &[DiagnosticsRecord]) -> (Vec<f64>, Vec<(String, Vec<f64>)>) {
    let t = records.iter().map(|r| r.t).collect();
    let mut series = vec![("sup".to_string(), records.iter().map(|r| r.sup).collect())];
    for l in 0..4 {
        series.push((
            format!("wk{}", l + 1),
            records.iter().map(|r| r.wk[l]).collect(),
        ));
    }
    (t, series)
}

/// Full nonlinear run: CSV time series, `B` at the probes, snapshots.
pub fn simulate(cfg: &RunConfig) -> Result<SimulateOutcome> {
    let (grid, state) = initial_state(cfg)?;
    let meta = run_metadata(cfg, "simulate", &state.u)?;
    let (points, positions) = tracked_points(cfg, &grid, &state.u, false)?;
    let state = state.with_phase(tracker(cfg, &grid, points));
    let products = drive(cfg, state, positions, false, true)?;
    let probes = cfg.scattering.probe_xis.len();
    let mut m = meta.clone();
    for (i, xi) in cfg.scattering.probe_xis.iter().enumerate() {
        m.push(format!("B_probe_{i}"), format!("{},{}", xi[0], xi[1]));
    }
    write_text(
        &out_path(cfg, "timeseries.csv"),
        &m,
        &timeseries_csv(&products.records, probes),
    )?;
    let (t, series) = record_columns(&products.records);
    let fits = decay_fits(cfg, &t, &series);
    write_text(&out_path(cfg, "decay.csv"), &meta, &decay_csv(&fits))?;
    write_snapshot(
        &out_path(cfg, "final.rh2d"),
        &products.final_state.u,
        products.final_state.t,
    )?;
    Ok(SimulateOutcome {
        records: products.records,
        fits,
        final_state: products.final_state,
        metadata: meta,
    })
}

/// Result of `linear`.
#[derive(Debug, Clone)]
pub struct LinearOutcome {
    pub times: Vec<f64>,
    /// `norms[i][ℓ] = ‖u(tᵢ)‖_{W^{ℓ,∞}}`
    pub norms: Vec<Vec<f64>>,
    pub fits: Vec<DecayFit>,
}

/// Free flow (λ forced to 0): decay slopes of `‖u‖_{W^{ℓ,∞}}` for `ℓ ≤ k`.
pub fn linear(cfg: &RunConfig) -> Result<LinearOutcome> {
    let mut cfg = cfg.clone();
    cfg.physics.lambda = 0.0;
    let (_, state) = initial_state(&cfg)?;
    let meta = run_metadata(&cfg, "linear", &state.u)?;
    let k = cfg.physics.k_index;
    let mut times = Vec::new();
    let mut norms = Vec::new();
    let mut obs = |s: &SimState| -> Result<()> {
        times.push(s.t);
        norms.push(wk_inf_norms(&s.u, k)?);
        Ok(())
    };
    let plan = cfg.run_plan();
    if plan.output_times.first().is_none_or(|&t| t > 0.0) {
        obs(&state)?;
    }
    evolve(state, &plan, &mut [&mut obs])?;

    let mut header = String::from("t");
    for l in 0..=k {
        header.push_str(&format!(",w{l}"));
    }
    let mut body = header + "\n";
    for (t, row) in times.iter().zip(&norms) {
        body.push_str(&fmt_f64(*t));
        for v in row {
            body.push(',');
            body.push_str(&fmt_f64(*v));
        }
        body.push('\n');
    }
    write_text(&out_path(&cfg, "linear.csv"), &meta, &body)?;
    let series: Vec<(String, Vec<f64>)> = (0..=k as usize)
        .map(|l| {
            let label = if l == 0 {
                "sup".to_string()
            } else {
                format!("wk{l}")
            };
            (label, norms.iter().map(|r| r[l]).collect())
        })
        .collect();
    let fits = decay_fits(&cfg, &times, &series);
    write_text(&out_path(&cfg, "decay.csv"), &meta, &decay_csv(&fits))?;
    Ok(LinearOutcome { times, norms, fits })
}

/// Result of `scatter`.
#[derive(Debug, Clone)]
pub struct ScatterOutcome {
    pub report: ScatteringReport,
    pub records: Vec<DiagnosticsRecord>,
    pub tracked_points: usize,
}

fn cauchy_csv(rows: &[CauchyMetric]) -> String {
    let mut s = String::from("t1,t2,d_modified,d_unmodified,d_modified_gauge\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(r.t1),
            fmt_f64(r.t2),
            fmt_f64(r.d_modified),
            fmt_f64(r.d_unmodified),
            fmt_f64(r.d_modified_gauge)
        ));
    }
    s
}

/// Dyadic-schedule run producing Cauchy metrics, the decay fit and the
/// scattering-state surrogate.
pub fn scatter(cfg: &RunConfig) -> Result<ScatterOutcome> {
    let (grid, state) = initial_state(cfg)?;
    let mut meta = run_metadata(cfg, "scatter", &state.u)?;
    let (points, positions) = tracked_points(cfg, &grid, &state.u, true)?;
    let tracked = points.len();
    let state = state.with_phase(tracker(cfg, &grid, points));
    let products = drive(cfg, state, positions, true, true)?;
    // the t = 0 record is not part of the dyadic schedule
    let profiles: Vec<ProfileSnapshot> = products
        .profiles
        .into_iter()
        .filter(|p| p.t > 0.0)
        .collect();
    let report = scattering_report(&profiles, cfg.physics.k_index)?;
    meta.push("tracked_points", tracked);
    meta.push("free_flow", report.free_flow);
    let fit_text = |f: Option<(f64, f64)>| match f {
        Some((d, e)) => format!("{} +- {}", fmt_f64(d), fmt_f64(e)),
        None => "undefined".into(),
    };
    meta.push("delta_hat", fit_text(report.delta_hat));
    meta.push("delta_hat_gauge", fit_text(report.delta_hat_gauge));
    write_text(
        &out_path(cfg, "cauchy.csv"),
        &meta,
        &cauchy_csv(&report.rows),
    )?;
    let probes = cfg.scattering.probe_xis.len();
    write_text(
        &out_path(cfg, "timeseries.csv"),
        &meta,
        &timeseries_csv(&products.records, probes),
    )?;
    let u_inf = limit_profile_field(&products.final_state)?;
    write_snapshot(&out_path(cfg, "u_inf.rh2d"), &u_inf, products.final_state.t)?;
    write_snapshot(
        &out_path(cfg, "final.rh2d"),
        &products.final_state.u,
        products.final_state.t,
    )?;
    Ok(ScatterOutcome {
        report,
        records: products.records,
        tracked_points: tracked,
    })
}

/// Unmodified Cauchy metrics for one kernel exponent.
#[derive(Debug, Clone)]
pub struct GammaRun {
    pub gamma: f64,
    pub rows: Vec<CauchyMetric>,
}

/// Same data, one run per γ; `d_unmodified` over each dyadic window.
pub fn sweep_gamma(cfg: &RunConfig, gammas: &[f64]) -> Result<Vec<GammaRun>> {
    let mut runs = Vec::new();
    let mut meta = None;
    for &gamma in gammas {
        let mut c = cfg.clone();
        c.physics.gamma = gamma;
        c.validate()?;
        let (_, state) = initial_state(&c)?;
        if meta.is_none() {
            meta = Some(run_metadata(cfg, "sweep-gamma", &state.u)?);
        }
        let mut profiles = Vec::new();
        let mut obs = |s: &SimState| -> Result<()> {
            profiles.push(make_profile(s)?);
            Ok(())
        };
        evolve(state, &c.run_plan(), &mut [&mut obs])?;
        let rows = profiles
            .windows(2)
            .map(|w| crate::scattering::cauchy_metric(&w[0], &w[1], c.physics.k_index))
            .collect::<Result<Vec<_>>>()?;
        runs.push(GammaRun { gamma, rows });
    }
    let mut body = String::from("gamma,t1,t2,d_unmodified\n");
    for r in &runs {
        for m in &r.rows {
            body.push_str(&format!(
                "{},{},{},{}\n",
                r.gamma,
                fmt_f64(m.t1),
                fmt_f64(m.t2),
                fmt_f64(m.d_unmodified)
            ));
        }
    }
    if let Some(m) = meta {
        write_text(&out_path(cfg, "sweep_gamma.csv"), &m, &body)?;
    }
    Ok(runs)
}

/// Runs the oracle suite on the configured grid and writes `oracle.txt`.
/// Fails with [`Error::OracleFailure`] if any check misses its tolerance.
pub fn oracle_suite(cfg: &RunConfig) -> Result<Vec<OracleCheck>> {
    let grid = cfg.grid()?;
    let u0 = initial_field(cfg, &grid)?;
    let meta = run_metadata(cfg, "oracle", &u0)?;
    let checks = oracle::run_all(&grid)?;
    write_text(&out_path(cfg, "oracle.txt"), &meta, &oracle_table(&checks))?;
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if !failed.is_empty() {
        return Err(Error::OracleFailure(failed.join(", ")));
    }
    Ok(checks)
}

pub fn oracle_table(checks: &[OracleCheck]) -> String {
    let mut s = String::from("check,measured,tolerance,result\n");
    for c in checks {
        s.push_str(&format!(
            "{},{},{},{}\n",
            c.name,
            fmt_f64(c.measured),
            c.tolerance,
            if c.passed { "pass" } else { "FAIL" }
        ));
    }
    s
}

/// Subcommand names accepted by the front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Linear,
    Scatter,
    SweepGamma,
    Oracle,
}

/// Loads the config, applies overrides, runs `cmd` and returns a short
/// human-readable summary.
pub fn run_command(cmd: Command, config: &Path, overrides: &Overrides) -> Result<String> {
    let mut cfg = load_config(config)?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    let dir = cfg.outputs.directory.display().to_string();
    Ok(match cmd {
        Command::Simulate => {
            let o = simulate(&cfg)?;
            let last = o.records.last().expect("at least the initial record");
            let first = &o.records[0];
            format!(
                "simulate: {} records to {dir}; t = {}, relative mass drift {:e}",
                o.records.len(),
                last.t,
                (last.mass - first.mass).abs() / first.mass.max(f64::MIN_POSITIVE)
            )
        }
        Command::Linear => {
            let o = linear(&cfg)?;
            let mut s = format!("linear: {} samples to {dir}", o.times.len());
            for f in &o.fits {
                s.push_str(&format!(
                    "\n  {} slope {:.4} +- {:.2e}",
                    f.label, f.slope, f.stderr
                ));
            }
            s
        }
        Command::Scatter => {
            let o = scatter(&cfg)?;
            let mut s = format!(
                "scatter: {} tracked frequencies, output in {dir}",
                o.tracked_points
            );
            for r in &o.report.rows {
                s.push_str(&format!(
                    "\n  [{}, {}] d_modified {:.4e} d_unmodified {:.4e}",
                    r.t1, r.t2, r.d_modified, r.d_unmodified
                ));
            }
            s
        }
        Command::SweepGamma => {
            let gammas = cfg.scattering.gammas.clone();
            let runs = sweep_gamma(&cfg, &gammas)?;
            let mut s = format!("sweep-gamma: output in {dir}");
            for r in &runs {
                for m in &r.rows {
                    s.push_str(&format!(
                        "\n  gamma {} [{}, {}] d_unmodified {:.4e}",
                        r.gamma, m.t1, m.t2, m.d_unmodified
                    ));
                }
            }
            s
        }
        Command::Oracle => {
            let checks = oracle_suite(&cfg)?;
            oracle_table(&checks)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_parsing() {
        assert_eq!(parse_probe("0.5, -1").unwrap(), [0.5, -1.0]);
        assert!(parse_probe("1").is_err());
        assert!(parse_probe("a,b").is_err());
        assert!(parse_probe("1,inf").is_err());
    }

    #[test]
    fn probe_positions_follow_configuration() {
        let cfg = RunConfig::parse(
            "grid.n = 32\ngrid.L = 16.0\nplan.dt = 0.1\nplan.t_end = 1.0\n\
             scattering.probe_xis = [[0.5, 0.0], [0.0, 0.0], [0.52, 0.01]]\n",
        )
        .unwrap();
        let grid = cfg.grid().unwrap();
        let u0 = initial_field(&cfg, &grid).unwrap();
        let (set, pos) = tracked_points(&cfg, &grid, &u0, true).unwrap();
        assert_eq!(pos.len(), 3);
        assert_eq!(pos[0], pos[2]);
        assert_ne!(pos[0], pos[1]);
        assert!(set.len() > 2);
    }
}
