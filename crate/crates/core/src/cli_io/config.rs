//! Run configuration: a flat file of dotted `section.key = value` lines.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolve::{IndexBundle, Integrator, RunPlan};
use crate::hartree::NonlinearityParams;
use crate::scattering::SingularCellRule;
use crate::spectral::SpectralGrid;

/// Relative amplitude at which a Gaussian is considered to have ended when
/// estimating the radius `r₀` for the wrap guard.
const RADIUS_TAIL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    pub plan: PlanConfig,
    #[serde(default)]
    pub scattering: ScatteringConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub n_index: f64,
    pub k_index: u32,
    pub delta0: f64,
    pub dealias: bool,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        let p = NonlinearityParams::default();
        let i = IndexBundle::default();
        PhysicsConfig {
            lambda: p.lambda,
            gamma: p.gamma,
            n_index: i.n_index,
            k_index: i.k_index,
            delta0: i.delta0,
            dealias: p.dealias,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    Gaussian,
    File,
}

/// `u₀(x) = A exp(-|x - c|²/(2w²)) e^{i ξ_c·x}`, or a physical-space snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub amplitude: f64,
    pub width: f64,
    pub momentum: [f64; 2],
    pub center: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Overrides the estimated radius `r₀` used by the wrap guard.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kind: InitialKind::Gaussian,
            amplitude: 0.02,
            width: 1.0,
            momentum: [0.0, 0.0],
            center: [0.0, 0.0],
            path: None,
            radius: None,
        }
    }
}

impl InitialConfig {
    /// Radius of the disc holding the initial data, for the wrap guard.
    pub fn effective_radius(&self) -> f64 {
        if let Some(r) = self.radius {
            return r;
        }
        match self.kind {
            InitialKind::Gaussian => {
                let c = self.center[0].hypot(self.center[1]);
                c + self.width * (2.0 * (1.0 / RADIUS_TAIL).ln()).sqrt()
            }
            InitialKind::File => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorName {
    Strang,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Explicit output times; takes precedence over the other schedules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_times: Option<Vec<f64>>,
    /// Geometric schedule `T, 2T, 4T, … ≤ t_end`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dyadic_start: Option<f64>,
    /// Evenly spaced outputs (default: `t_end / 20`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_interval: Option<f64>,
    #[serde(default = "default_integrator")]
    pub integrator: IntegratorName,
    #[serde(default = "default_wrap_margin")]
    pub wrap_margin: f64,
    #[serde(default = "default_true")]
    pub wrap_guard: bool,
}

fn default_integrator() -> IntegratorName {
    IntegratorName::Strang
}

fn default_wrap_margin() -> f64 {
    2.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellRuleName {
    Epstein,
    Disc,
    Omit,
}

impl From<CellRuleName> for SingularCellRule {
    fn from(r: CellRuleName) -> Self {
        match r {
            CellRuleName::Epstein => SingularCellRule::Epstein,
            CellRuleName::Disc => SingularCellRule::Disc,
            CellRuleName::Omit => SingularCellRule::Omit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatteringConfig {
    pub probe_xis: Vec<[f64; 2]>,
    pub full_lattice: bool,
    /// Stride of the coarsened sublattice used for the Cauchy metrics.
    pub coarsen: usize,
    /// Coarse points where `⟨ξ⟩^k|û₀|` is below this fraction of its maximum are dropped.
    pub support_threshold: f64,
    /// σ-cells with `|û|²` below this fraction of the peak are skipped.
    pub sigma_threshold: f64,
    pub singular_cell: CellRuleName,
    /// Evaluate `∂ₛB` every `b_stride` steps.
    pub b_stride: usize,
    /// Kernel exponents for `sweep-gamma`.
    pub gammas: Vec<f64>,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        ScatteringConfig {
            probe_xis: vec![[0.0, 0.0], [0.5, 0.0]],
            full_lattice: false,
            coarsen: 4,
            support_threshold: 1e-6,
            sigma_threshold: 1e-16,
            singular_cell: CellRuleName::Epstein,
            b_stride: 1,
            gammas: vec![0.5, 1.0, 1.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    pub sobolev_order: f64,
    /// Decay fits use samples with `fit_t_min ≤ t ≤ fit_t_max`.
    pub fit_t_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_t_max: Option<f64>,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            sobolev_order: 8.0,
            fit_t_min: 5.0,
            fit_t_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsConfig {
    pub directory: PathBuf,
    /// Write a field snapshot every this many output times (0: final state only).
    pub snapshot_cadence: usize,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            directory: PathBuf::from("out"),
            snapshot_cadence: 0,
        }
    }
}

impl RunConfig {
    /// Parses configuration text, materialising defaults and validating.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.grid.n, self.grid.half_width)
    }

    pub fn nonlinearity(&self) -> NonlinearityParams {
        NonlinearityParams {
            lambda: self.physics.lambda,
            gamma: self.physics.gamma,
            dealias: self.physics.dealias,
        }
    }

    pub fn indices(&self) -> IndexBundle {
        IndexBundle {
            n_index: self.physics.n_index,
            k_index: self.physics.k_index,
            delta0: self.physics.delta0,
        }
    }

    /// Output times from whichever schedule is configured.
    pub fn output_times(&self) -> Vec<f64> {
        let p = &self.plan;
        if let Some(times) = &p.output_times {
            return times.clone();
        }
        if let Some(start) = p.dyadic_start {
            let mut out = Vec::new();
            let mut t = start;
            while t <= p.t_end * (1.0 + 1e-12) {
                out.push(t);
                t *= 2.0;
            }
            return out;
        }
        let step = p.output_interval.unwrap_or(p.t_end / 20.0);
        if step.is_nan() || step <= 0.0 {
            return vec![p.t_end];
        }
        let count = (p.t_end / step + 1e-9).floor() as usize;
        let mut out: Vec<f64> = (1..=count).map(|i| i as f64 * step).collect();
        if out.last().is_none_or(|&t| t < p.t_end - 1e-9) {
            out.push(p.t_end);
        }
        out
    }

    pub fn run_plan(&self) -> RunPlan {
        let mut plan = RunPlan::new(self.plan.dt, self.plan.t_end, self.output_times());
        plan.integrator = match self.plan.integrator {
            IntegratorName::Strang => Integrator::Strang,
            IntegratorName::Rk4 => Integrator::Rk4Ref,
        };
        plan.wrap_guard_margin = self.plan.wrap_margin;
        plan.initial_radius = self.initial.effective_radius();
        plan.enforce_wrap_guard = self.plan.wrap_guard;
        plan
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be finite, got {v}")))
            }
        };
        finite("grid.L", self.grid.half_width)?;
        for (name, v) in [
            ("physics.lambda", self.physics.lambda),
            ("physics.gamma", self.physics.gamma),
            ("physics.n_index", self.physics.n_index),
            ("physics.delta0", self.physics.delta0),
            ("initial.amplitude", self.initial.amplitude),
            ("initial.width", self.initial.width),
            ("plan.dt", self.plan.dt),
            ("plan.t_end", self.plan.t_end),
            ("plan.wrap_margin", self.plan.wrap_margin),
        ] {
            finite(name, v)?;
        }
        let grid = self.grid().map_err(|e| Error::Config(e.to_string()))?;
        self.nonlinearity()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.physics.n_index <= 0.0 {
            return Err(Error::Config("physics.n_index must be positive".into()));
        }
        match self.initial.kind {
            InitialKind::Gaussian if self.initial.width.is_nan() || self.initial.width <= 0.0 => {
                return Err(Error::Config("initial.width must be positive".into()))
            }
            InitialKind::File if self.initial.path.is_none() => {
                return Err(Error::Config(
                    "initial.kind = \"file\" requires initial.path".into(),
                ))
            }
            _ => {}
        }
        if self.scattering.coarsen == 0 {
            return Err(Error::Config(
                "scattering.coarsen must be at least 1".into(),
            ));
        }
        let plan = self.run_plan();
        match plan.validate(&grid) {
            Err(Error::WrapGuard(msg)) => Err(Error::WrapGuard(msg)),
            Err(e) => Err(Error::Config(e.to_string())),
            Ok(()) => Ok(()),
        }
    }

    /// Every setting (defaults included) as sorted `dotted.key=value` pairs.
    pub fn echo(&self) -> Vec<(String, String)> {
        let value = toml::Value::try_from(self).expect("config is serialisable");
        let mut out = Vec::new();
        flatten("", &value, &mut out);
        out.sort();
        out
    }

    /// SHA-256 of the echoed settings, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.echo() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, child) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, child, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::parse(&text)
}
