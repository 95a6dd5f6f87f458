//! Phase correction `B(t, ξ)`, the modified profile `𝗏 = e^{-iB} e^{it⟨ξ⟩} û`,
//! and Cauchy metrics comparing corrected and uncorrected profiles.
//!
//! The σ-integral `∫ |ξ/⟨ξ⟩ - σ/⟨σ⟩|^{-1} |û(σ)|² dσ` is evaluated as a lattice
//! sum over σ ≠ ξ plus a correction for the cell containing the singularity.
//! Near σ = ξ the kernel behaves like `|J(σ - ξ)|^{-1}` with `J` the Jacobian of
//! `σ ↦ σ/⟨σ⟩` at ξ, so the exact lattice defect is `-dxi · Z_J(1/2)` where
//! `Z_J` is the Epstein zeta function of the lattice `J·ℤ²`, evaluated here by
//! Ewald summation.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::evolve::{IndexBundle, SimState};
use crate::hartree::NonlinearityParams;
use crate::spectral::{
    bump, forward_in_place, inverse_ft, japanese, ComplexField, Space, SpectralGrid,
};

/// `|ξ/⟨ξ⟩ - σ/⟨σ⟩|^{-1}`; the diagonal `ξ = σ` is rejected.
pub fn z_kernel(xi: [f64; 2], sigma: [f64; 2]) -> Result<f64> {
    let p = velocity(xi);
    let q = velocity(sigma);
    let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    if d == 0.0 {
        return Err(Error::InvalidParameter(
            "kernel is singular on the diagonal xi = sigma".into(),
        ));
    }
    Ok(1.0 / d)
}

/// Group velocity `ξ/⟨ξ⟩` of the half-wave flow.
#[inline]
pub fn velocity(xi: [f64; 2]) -> [f64; 2] {
    let w = japanese(xi[0], xi[1]);
    [xi[0] / w, xi[1] / w]
}

/// Jacobian of `ξ ↦ ξ/⟨ξ⟩`: `I/⟨ξ⟩ - ξξᵀ/⟨ξ⟩³`.
pub fn velocity_jacobian(xi: [f64; 2]) -> [[f64; 2]; 2] {
    let w = japanese(xi[0], xi[1]);
    let w3 = w * w * w;
    [
        [1.0 / w - xi[0] * xi[0] / w3, -xi[0] * xi[1] / w3],
        [-xi[0] * xi[1] / w3, 1.0 / w - xi[1] * xi[1] / w3],
    ]
}

fn singular_values(m: [[f64; 2]; 2]) -> (f64, f64) {
    // eigenvalues of MᵀM
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let d = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let tr = a + d;
    let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
    let hi = 0.5 * (tr + disc);
    let lo = (0.5 * (tr - disc)).max(0.0);
    (lo.sqrt(), hi.sqrt())
}

fn lattice_sum(m: [[f64; 2]; 2], radius: f64, term: impl Fn(f64) -> f64) -> f64 {
    let (smin, _) = singular_values(m);
    let bound = (radius / smin).ceil() as i64;
    let mut total = 0.0;
    for j1 in -bound..=bound {
        for j2 in -bound..=bound {
            if j1 == 0 && j2 == 0 {
                continue;
            }
            let (a, b) = (j1 as f64, j2 as f64);
            let v0 = m[0][0] * a + m[0][1] * b;
            let v1 = m[1][0] * a + m[1][1] * b;
            let r = (v0 * v0 + v1 * v1).sqrt();
            if r < radius {
                total += term(r);
            }
        }
    }
    total
}

/// Analytically continued `Σ'_{j∈ℤ²} |M j|^{-1}` with an explicit Ewald
/// splitting parameter; the result does not depend on `split`.
pub fn lattice_zeta_half_with(m: [[f64; 2]; 2], split: f64) -> f64 {
    const CUT: f64 = 6.5;
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let vol = det.abs();
    // dual lattice M^{-T} ℤ²
    let dual = [
        [m[1][1] / det, -m[1][0] / det],
        [-m[0][1] / det, m[0][0] / det],
    ];
    let direct = lattice_sum(m, CUT / split, |r| erfc(split * r) / r);
    let recip = lattice_sum(dual, CUT * split / PI, |r| erfc(PI * r / split) / r);
    direct + recip / vol - 2.0 * PI.sqrt() / (split * vol) - 2.0 * split / PI.sqrt()
}

/// Epstein zeta `Z_{Mℤ²}(1/2)`.
pub fn lattice_zeta_half(m: [[f64; 2]; 2]) -> f64 {
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
    lattice_zeta_half_with(m, (PI / det).sqrt())
}

/// Treatment of the lattice cell that contains the kernel singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularCellRule {
    /// Exact lattice defect from the Epstein zeta function of `J·ℤ²`.
    Epstein,
    /// Polar disc of the image cell's area in the linearised variable `J(σ-ξ)`.
    Disc,
    /// Drop the cell.
    Omit,
}

impl SingularCellRule {
    /// Weight multiplying `|û(ξ)|²` for a lattice of spacing `dxi`.
    pub fn cell_weight(self, xi: [f64; 2], dxi: f64) -> f64 {
        let j = velocity_jacobian(xi);
        match self {
            SingularCellRule::Epstein => -dxi * lattice_zeta_half(j),
            SingularCellRule::Disc => {
                let det = (j[0][0] * j[1][1] - j[0][1] * j[1][0]).abs();
                2.0 * PI.sqrt() * dxi / det.sqrt()
            }
            SingularCellRule::Omit => 0.0,
        }
    }
}

/// Lattice frequencies at which `B` is tracked.
#[derive(Debug, Clone)]
pub struct FrequencySet {
    indices: Vec<(usize, usize)>,
    xis: Vec<[f64; 2]>,
}

impl FrequencySet {
    pub fn from_indices(grid: &SpectralGrid, indices: Vec<(usize, usize)>) -> Self {
        let xs = grid.xis();
        let xis = indices.iter().map(|&(a, b)| [xs[a], xs[b]]).collect();
        FrequencySet { indices, xis }
    }

    pub fn empty() -> Self {
        FrequencySet {
            indices: Vec::new(),
            xis: Vec::new(),
        }
    }

    pub fn full(grid: &SpectralGrid) -> Self {
        let n = grid.n();
        let idx = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
        Self::from_indices(grid, idx)
    }

    /// Every `step`-th lattice point per axis, aligned so that ξ = 0 is included.
    pub fn coarse(grid: &SpectralGrid, step: usize) -> Self {
        let step = step.max(1);
        let z = grid.zero_index();
        let axis: Vec<usize> = (0..grid.n())
            .filter(|a| a.abs_diff(z) % step == 0)
            .collect();
        let idx = axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| (a, b)))
            .collect();
        Self::from_indices(grid, idx)
    }

    /// Lattice points nearest to the requested frequencies (duplicates removed).
    pub fn probes(grid: &SpectralGrid, xis: &[[f64; 2]]) -> Self {
        let mut idx: Vec<(usize, usize)> = Vec::new();
        for &xi in xis {
            let k = grid.nearest_frequency_index(xi);
            if !idx.contains(&k) {
                idx.push(k);
            }
        }
        Self::from_indices(grid, idx)
    }

    /// Keeps points for which `keep(index)` holds.
    pub fn retain(&self, keep: impl Fn((usize, usize)) -> bool) -> Self {
        let (indices, xis) = self
            .indices
            .iter()
            .zip(&self.xis)
            .filter(|(k, _)| keep(**k))
            .map(|(k, x)| (*k, *x))
            .unzip();
        FrequencySet { indices, xis }
    }

    /// Set union, preserving the order of `self` first.
    pub fn union(&self, other: &FrequencySet) -> Self {
        let mut out = self.clone();
        let mut seen: HashSet<(usize, usize)> = self.indices.iter().copied().collect();
        for (k, x) in other.indices.iter().zip(&other.xis) {
            if seen.insert(*k) {
                out.indices.push(*k);
                out.xis.push(*x);
            }
        }
        out
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    pub fn xis(&self) -> &[[f64; 2]] {
        &self.xis
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Position of a lattice index in this set.
    pub fn position(&self, k: (usize, usize)) -> Option<usize> {
        self.indices.iter().position(|&i| i == k)
    }
}

/// Evaluates `∂ₛB(s, ξ)` on a fixed frequency set.
#[derive(Debug)]
pub struct PhaseRateEvaluator {
    grid: SpectralGrid,
    points: FrequencySet,
    point_velocity: Vec<[f64; 2]>,
    cell_weights: Vec<f64>,
    lattice_velocity: Vec<[f64; 2]>,
    rule: SingularCellRule,
    /// σ-cells with `|û(σ)|² ≤ threshold · max|û|²` are skipped.
    sigma_threshold: f64,
}

impl PhaseRateEvaluator {
    pub fn new(grid: &SpectralGrid, points: FrequencySet, rule: SingularCellRule) -> Self {
        let dxi = grid.dxi();
        let point_velocity = points.xis().iter().map(|&x| velocity(x)).collect();
        let cell_weights = points
            .xis()
            .iter()
            .map(|&x| rule.cell_weight(x, dxi))
            .collect();
        let xis = grid.xis();
        let mut lattice_velocity = Vec::with_capacity(grid.len());
        for &k1 in xis {
            for &k2 in xis {
                lattice_velocity.push(velocity([k1, k2]));
            }
        }
        PhaseRateEvaluator {
            grid: grid.clone(),
            points,
            point_velocity,
            cell_weights,
            lattice_velocity,
            rule,
            sigma_threshold: 1e-16,
        }
    }

    pub fn with_sigma_threshold(mut self, threshold: f64) -> Self {
        self.sigma_threshold = threshold;
        self
    }

    pub fn points(&self) -> &FrequencySet {
        &self.points
    }

    pub fn rule(&self) -> SingularCellRule {
        self.rule
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    /// `∫ |ξ/⟨ξ⟩ - σ/⟨σ⟩|^{-1} |û(σ)|² dσ` at every tracked ξ, from frequency samples.
    pub fn sigma_integral(&self, u_hat: &ComplexField) -> Result<Vec<f64>> {
        u_hat.expect_space(Space::Frequency)?;
        if u_hat.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let dens: Vec<f64> = u_hat.values().iter().map(|v| v.norm_sqr()).collect();
        let peak = dens.iter().copied().fold(0.0, f64::max);
        let cell = self.grid.dxi() * self.grid.dxi();
        let cutoff = peak * self.sigma_threshold;
        let mut vx = Vec::new();
        let mut vy = Vec::new();
        let mut wt = Vec::new();
        for (k, &d) in dens.iter().enumerate() {
            if d > cutoff {
                let p = self.lattice_velocity[k];
                vx.push(p[0]);
                vy.push(p[1]);
                wt.push(d * cell);
            }
        }
        let mut out = Vec::with_capacity(self.points.len());
        for (i, &(a, b)) in self.points.indices().iter().enumerate() {
            let p = self.point_velocity[i];
            let mut acc = 0.0;
            for ((&x, &y), &w) in vx.iter().zip(&vy).zip(&wt) {
                let dx = p[0] - x;
                let dy = p[1] - y;
                let r2 = dx * dx + dy * dy;
                if r2 > 0.0 {
                    acc += w / r2.sqrt();
                }
            }
            acc += dens[self.grid.index(a, b)] * self.cell_weights[i];
            out.push(acc);
        }
        Ok(out)
    }

    /// `∂ₛB = λ/(2π)² · (σ-integral) · ρ(s^{-2/n}ξ) / ⟨s⟩`.
    pub fn rate(
        &self,
        u: &ComplexField,
        s: f64,
        params: &NonlinearityParams,
        indices: &IndexBundle,
    ) -> Result<Vec<f64>> {
        u.expect_space(Space::Physical)?;
        if params.lambda == 0.0 {
            return Ok(vec![0.0; self.points.len()]);
        }
        let mut data = u.values().to_vec();
        forward_in_place(&self.grid, &mut data);
        let u_hat = ComplexField::new(&self.grid, data, Space::Frequency);
        let integral = self.sigma_integral(&u_hat)?;
        let pref = params.lambda / (4.0 * PI * PI) / japanese(s, 0.0);
        Ok(integral
            .iter()
            .zip(self.points.xis())
            .map(|(v, xi)| pref * v * time_cutoff(*xi, s, indices.n_index))
            .collect())
    }
}

/// `ρ(s^{-2/n} ξ)`. At `s = 0` the factor `s^{-2/n}` is taken as 1: the
/// boundary layer where it differs appreciably from 1 has width ~`|ξ|^{n/2}`.
pub fn time_cutoff(xi: [f64; 2], s: f64, n_index: f64) -> f64 {
    let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    if s <= 0.0 {
        return bump(r);
    }
    bump(s.powf(-2.0 / n_index) * r)
}

/// Stand-alone evaluation of `∂ₛB` on `points` (builds an evaluator each call).
pub fn b_rate(
    u: &ComplexField,
    s: f64,
    params: &NonlinearityParams,
    indices: &IndexBundle,
    points: &FrequencySet,
) -> Result<Vec<f64>> {
    PhaseRateEvaluator::new(u.grid(), points.clone(), SingularCellRule::Epstein)
        .rate(u, s, params, indices)
}

/// Accumulated `B(t, ξ)` on a frequency set, integrated online with the trapezoid rule.
#[derive(Debug, Clone)]
pub struct PhaseTracker {
    evaluator: Option<Arc<PhaseRateEvaluator>>,
    values: Vec<f64>,
    last_rate: Option<(f64, Vec<f64>)>,
    stride: usize,
    pending: usize,
}

impl PhaseTracker {
    /// Tracks nothing; `B` is never evaluated.
    pub fn disabled(_grid: &SpectralGrid) -> Self {
        PhaseTracker {
            evaluator: None,
            values: Vec::new(),
            last_rate: None,
            stride: 1,
            pending: 0,
        }
    }

    pub fn new(evaluator: Arc<PhaseRateEvaluator>) -> Self {
        let n = evaluator.points().len();
        PhaseTracker {
            evaluator: Some(evaluator),
            values: vec![0.0; n],
            last_rate: None,
            stride: 1,
            pending: 0,
        }
    }

    /// Integrate over `stride` steps at a time (the rate is evaluated less often).
    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn is_enabled(&self) -> bool {
        self.evaluator.is_some()
    }

    pub fn points(&self) -> Option<&FrequencySet> {
        self.evaluator.as_ref().map(|e| e.points())
    }

    pub fn evaluator(&self) -> Option<&Arc<PhaseRateEvaluator>> {
        self.evaluator.as_ref()
    }

    /// Current `B` on the tracked points.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Records the rate at the start of a run.
    pub fn prime(
        &mut self,
        u: &ComplexField,
        t: f64,
        params: &NonlinearityParams,
        indices: &IndexBundle,
    ) -> Result<()> {
        if let Some(ev) = &self.evaluator {
            if self.last_rate.is_none() {
                self.last_rate = Some((t, ev.rate(u, t, params, indices)?));
            }
        }
        Ok(())
    }

    /// Adds the trapezoid contribution between the last rate sample and `t`.
    /// With a stride above 1 the rate is only sampled every `stride` calls or
    /// when `force` is set.
    pub fn advance(
        &mut self,
        u: &ComplexField,
        t: f64,
        params: &NonlinearityParams,
        indices: &IndexBundle,
        force: bool,
    ) -> Result<()> {
        let Some(ev) = self.evaluator.clone() else {
            return Ok(());
        };
        self.pending += 1;
        if !force && self.pending < self.stride {
            return Ok(());
        }
        self.pending = 0;
        let rate = ev.rate(u, t, params, indices)?;
        match self.last_rate.take() {
            Some((t0, r0)) => self.accumulate(&r0, &rate, t - t0),
            None => {
                return Err(Error::InvalidParameter(
                    "phase tracker advanced before being primed".into(),
                ))
            }
        }
        self.last_rate = Some((t, rate));
        Ok(())
    }

    /// `B += ½(r₀ + r₁)·dt`.
    pub fn accumulate(&mut self, rate_start: &[f64], rate_end: &[f64], dt: f64) {
        for ((b, r0), r1) in self.values.iter_mut().zip(rate_start).zip(rate_end) {
            *b += 0.5 * (r0 + r1) * dt;
        }
    }
}

/// `(t, f̂, 𝗏, B)` on the tracked frequency set.
#[derive(Debug, Clone)]
pub struct ProfileSnapshot {
    pub t: f64,
    pub points: Arc<FrequencySet>,
    pub f_hat: Vec<Complex64>,
    pub v_hat: Vec<Complex64>,
    pub b: Vec<f64>,
    pub u_hat_abs: Vec<f64>,
}

/// Builds `f̂ = e^{it⟨ξ⟩}û` and `𝗏 = e^{-iB}f̂`. Without a tracker the whole
/// lattice is used with `B = 0`.
pub fn make_profile(state: &SimState) -> Result<ProfileSnapshot> {
    let grid = state.grid();
    let points = match state.phase.points() {
        Some(p) => Arc::new(p.clone()),
        None => Arc::new(FrequencySet::full(grid)),
    };
    let b = if state.phase.is_enabled() {
        state.phase.values().to_vec()
    } else {
        vec![0.0; points.len()]
    };
    let mut data = state.u.values().to_vec();
    forward_in_place(grid, &mut data);
    let mut f_hat = Vec::with_capacity(points.len());
    let mut v_hat = Vec::with_capacity(points.len());
    let mut u_hat_abs = Vec::with_capacity(points.len());
    for ((&(a, c), xi), bv) in points.indices().iter().zip(points.xis()).zip(&b) {
        let uh = data[grid.index(a, c)];
        let f = uh * Complex64::from_polar(1.0, state.t * japanese(xi[0], xi[1]));
        f_hat.push(f);
        v_hat.push(f * Complex64::from_polar(1.0, -bv));
        u_hat_abs.push(uh.norm());
    }
    Ok(ProfileSnapshot {
        t: state.t,
        points,
        f_hat,
        v_hat,
        b,
        u_hat_abs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyMetric {
    pub t1: f64,
    pub t2: f64,
    /// `sup ⟨ξ⟩^k |𝗏(t₂) - 𝗏(t₁)|`
    pub d_modified: f64,
    /// `sup ⟨ξ⟩^k |f̂(t₂) - f̂(t₁)|`
    pub d_unmodified: f64,
    /// `min_θ sup ⟨ξ⟩^k |𝗏(t₂) - e^{iθ}𝗏(t₁)|`
    pub d_modified_gauge: f64,
}

fn weights(points: &FrequencySet, k: u32) -> Vec<f64> {
    points
        .xis()
        .iter()
        .map(|x| japanese(x[0], x[1]).powi(k as i32))
        .collect()
}

fn sup_diff(w: &[f64], a: &[Complex64], b: &[Complex64], rot: Complex64) -> f64 {
    w.iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * (y - rot * x).norm())
        .fold(0.0, f64::max)
}

fn gauge_quotient(w: &[f64], a: &[Complex64], b: &[Complex64]) -> f64 {
    let eval = |th: f64| sup_diff(w, a, b, Complex64::from_polar(1.0, th));
    const SCAN: usize = 720;
    let step = 2.0 * PI / SCAN as f64;
    let (mut best_th, mut best) = (0.0, eval(0.0));
    for i in 1..SCAN {
        let th = i as f64 * step;
        let v = eval(th);
        if v < best {
            best = v;
            best_th = th;
        }
    }
    // golden-section refinement around the best scan point
    let (mut lo, mut hi) = (best_th - step, best_th + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = eval(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = eval(d);
        }
    }
    best.min(fc).min(fd)
}

pub fn cauchy_metric(
    p1: &ProfileSnapshot,
    p2: &ProfileSnapshot,
    k_index: u32,
) -> Result<CauchyMetric> {
    if p1.points.indices() != p2.points.indices() {
        return Err(Error::GridMismatch);
    }
    if p1.t > p2.t {
        return Err(Error::InvalidParameter(format!(
            "Cauchy metric expects t1 <= t2, got {} > {}",
            p1.t, p2.t
        )));
    }
    let w = weights(&p1.points, k_index);
    let one = Complex64::new(1.0, 0.0);
    Ok(CauchyMetric {
        t1: p1.t,
        t2: p2.t,
        d_modified: sup_diff(&w, &p1.v_hat, &p2.v_hat, one),
        d_unmodified: sup_diff(&w, &p1.f_hat, &p2.f_hat, one),
        d_modified_gauge: gauge_quotient(&w, &p1.v_hat, &p2.v_hat),
    })
}

/// `sup ⟨ξ⟩^k |f̂|` over a snapshot's points.
pub fn snapshot_scattering_norm(p: &ProfileSnapshot, k_index: u32) -> f64 {
    weights(&p.points, k_index)
        .iter()
        .zip(&p.f_hat)
        .map(|(w, f)| w * f.norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct ScatteringReport {
    pub rows: Vec<CauchyMetric>,
    /// Fitted decay exponent δ̂ of `d_modified` against `t₁`, with its standard error.
    pub delta_hat: Option<(f64, f64)>,
    /// Same fit for the gauge-quotiented metric.
    pub delta_hat_gauge: Option<(f64, f64)>,
    pub free_flow: bool,
    /// `𝗏(t_max)` on the tracked points.
    pub limit_profile: ProfileSnapshot,
}

/// Tabulates Cauchy metrics between consecutive snapshots and fits their decay.
pub fn scattering_report(snapshots: &[ProfileSnapshot], k_index: u32) -> Result<ScatteringReport> {
    if snapshots.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "scattering report needs at least 3 snapshots, got {}",
            snapshots.len()
        )));
    }
    let rows = snapshots
        .windows(2)
        .map(|w| cauchy_metric(&w[0], &w[1], k_index))
        .collect::<Result<Vec<_>>>()?;
    let scale = snapshots
        .iter()
        .map(|p| snapshot_scattering_norm(p, k_index))
        .fold(0.0, f64::max);
    let free_flow = rows
        .iter()
        .all(|r| r.d_modified <= 1e-10 * scale.max(1e-300));
    let fit = |sel: fn(&CauchyMetric) -> f64| {
        if free_flow {
            return None;
        }
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.t1 > 0.0 && sel(r) > 0.0)
            .map(|r| (r.t1, sel(r)))
            .collect();
        crate::diagnostics::log_log_fit(&pts, 2)
            .ok()
            .map(|(slope, err)| (-slope, err))
    };
    let delta_hat = fit(|r| r.d_modified);
    let delta_hat_gauge = fit(|r| r.d_modified_gauge);
    Ok(ScatteringReport {
        rows,
        delta_hat,
        delta_hat_gauge,
        free_flow,
        limit_profile: snapshots.last().cloned().expect("non-empty"),
    })
}

/// Extends `B` from the tracked points to the whole lattice (nearest tracked
/// point along each axis, 0 where nothing is tracked nearby) and returns the
/// physical-space surrogate `F⁻¹(e^{-iB} f̂)` of the scattering state.
pub fn limit_profile_field(state: &SimState) -> Result<ComplexField> {
    let grid = state.grid();
    let n = grid.n();
    let mut bfull = vec![0.0; grid.len()];
    if let Some(points) = state.phase.points() {
        let step = tracked_step(points, grid);
        let vals = state.phase.values();
        let lookup: HashMap<(usize, usize), usize> = points
            .indices()
            .iter()
            .enumerate()
            .map(|(i, &k)| (k, i))
            .collect();
        let z = grid.zero_index() as i64;
        for a in 0..n {
            for c in 0..n {
                let snap = |v: usize| {
                    let off = v as i64 - z;
                    let q = (off as f64 / step as f64).round() as i64 * step as i64 + z;
                    q.clamp(0, n as i64 - 1) as usize
                };
                if let Some(&pos) = lookup.get(&(snap(a), snap(c))) {
                    bfull[grid.index(a, c)] = vals[pos];
                }
            }
        }
    }
    let mut data = state.u.values().to_vec();
    forward_in_place(grid, &mut data);
    let xis = grid.xis();
    for a in 0..n {
        for c in 0..n {
            let k = grid.index(a, c);
            let ph = state.t * japanese(xis[a], xis[c]) - bfull[k];
            data[k] *= Complex64::from_polar(1.0, ph);
        }
    }
    inverse_ft(&ComplexField::new(grid, data, Space::Frequency))
}

fn tracked_step(points: &FrequencySet, grid: &SpectralGrid) -> usize {
    let z = grid.zero_index();
    points
        .indices()
        .iter()
        .map(|&(a, _)| a.abs_diff(z))
        .filter(|&d| d > 0)
        .min()
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn z_kernel_examples() {
        let v = z_kernel([0.0, 0.0], [3f64.sqrt(), 0.0]).unwrap();
        assert!((v - 2.0 / 3f64.sqrt()).abs() < 1e-15);
        let a = z_kernel([0.3, -1.2], [2.0, 0.7]).unwrap();
        let b = z_kernel([2.0, 0.7], [0.3, -1.2]).unwrap();
        assert_eq!(a, b);
        assert!(z_kernel([0.5, 0.5], [0.5, 0.5]).is_err());
    }

    #[test]
    fn z_kernel_near_diagonal_follows_jacobian() {
        let sigma = [0.8, -0.4];
        let dir = [0.6, 0.8];
        let j = velocity_jacobian(sigma);
        let jd = [
            j[0][0] * dir[0] + j[0][1] * dir[1],
            j[1][0] * dir[0] + j[1][1] * dir[1],
        ];
        let c = 1.0 / (jd[0] * jd[0] + jd[1] * jd[1]).sqrt();
        for eps in [1e-3, 1e-4, 1e-5] {
            let xi = [sigma[0] + eps * dir[0], sigma[1] + eps * dir[1]];
            let ratio = z_kernel(xi, sigma).unwrap() * eps / c;
            assert!((ratio - 1.0).abs() < 10.0 * eps, "{ratio}");
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let xi = [0.7, -1.3];
        let j = velocity_jacobian(xi);
        let h = 1e-6;
        for col in 0..2 {
            let mut a = xi;
            let mut b = xi;
            a[col] += h;
            b[col] -= h;
            let (va, vb) = (velocity(a), velocity(b));
            for row in 0..2 {
                let fd = (va[row] - vb[row]) / (2.0 * h);
                assert!((fd - j[row][col]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn square_lattice_zeta_matches_known_value() {
        // Z_{ℤ²}(s) = 4 ζ(s) β(s)
        let expected = -3.900_264_920_001_956;
        let z = lattice_zeta_half([[1.0, 0.0], [0.0, 1.0]]);
        // erfc is accurate to a few ulps times the number of terms
        assert!((z - expected).abs() < 1e-10, "{z} vs {expected}");
    }

    #[test]
    fn lattice_zeta_is_split_independent_and_homogeneous() {
        let m = velocity_jacobian([1.7, 0.9]);
        let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
        let a = lattice_zeta_half_with(m, (PI / det).sqrt());
        let b = lattice_zeta_half_with(m, 0.6 * (PI / det).sqrt());
        assert!((a - b).abs() < 1e-11 * a.abs(), "{a} {b}");
        let scaled = [
            [2.0 * m[0][0], 2.0 * m[0][1]],
            [2.0 * m[1][0], 2.0 * m[1][1]],
        ];
        assert!((lattice_zeta_half(scaled) - a / 2.0).abs() < 1e-11 * a.abs());
    }

    #[test]
    fn cell_rules_coincide_at_origin_up_to_shape() {
        let e = SingularCellRule::Epstein.cell_weight([0.0, 0.0], 1.0);
        let d = SingularCellRule::Disc.cell_weight([0.0, 0.0], 1.0);
        assert!((e - 3.900_264_92).abs() < 1e-7);
        assert!((d - 2.0 * PI.sqrt()).abs() < 1e-14);
        assert_eq!(SingularCellRule::Omit.cell_weight([0.3, 0.0], 1.0), 0.0);
    }

    #[test]
    fn time_cutoff_behaviour() {
        // plateau for |ξ| < 1 at any s > 0 with the default index
        assert_eq!(time_cutoff([0.5, 0.0], 50.0, 1000.0), 1.0);
        // small index: the cutoff radius s^{2/n} grows quickly
        assert_eq!(time_cutoff([1.5, 0.0], 1.0, 4.0), bump(1.5));
        assert_eq!(time_cutoff([1.5, 0.0], 4.0, 4.0), 1.0);
        assert!(time_cutoff([3.0, 0.0], 4.0, 4.0) < 1.0);
        assert_eq!(time_cutoff([3.0, 0.0], 0.5, 4.0), 0.0);
    }

    #[test]
    fn frequency_sets() {
        let g = make_grid(16, PI).unwrap();
        let c = FrequencySet::coarse(&g, 4);
        assert_eq!(c.len(), 16);
        assert!(c.position((8, 8)).is_some());
        let p = FrequencySet::probes(&g, &[[0.0, 0.0], [0.1, 0.0], [1.2, -2.9]]);
        assert_eq!(p.indices(), &[(8, 8), (9, 5)]);
        assert_eq!(FrequencySet::full(&g).len(), 256);
        let u = c.union(&p);
        assert_eq!(u.len(), 17);
    }

    #[test]
    fn weighted_sup_metrics() {
        let g = make_grid(16, PI).unwrap();
        let pts = Arc::new(FrequencySet::probes(&g, &[[0.0, 0.0], [1.0, 0.0]]));
        let mk = |t: f64, f: Vec<Complex64>| ProfileSnapshot {
            t,
            points: pts.clone(),
            v_hat: f.clone(),
            u_hat_abs: f.iter().map(|v| v.norm()).collect(),
            f_hat: f,
            b: vec![0.0; 2],
        };
        let one = Complex64::new(1.0, 0.0);
        let a = mk(1.0, vec![one, one]);
        let b = mk(2.0, vec![one * 1.5, one]);
        let m = cauchy_metric(&a, &a, 3).unwrap();
        assert_eq!((m.d_modified, m.d_unmodified), (0.0, 0.0));
        let m = cauchy_metric(&a, &b, 2).unwrap();
        assert!((m.d_unmodified - 0.5).abs() < 1e-15);
        assert!(cauchy_metric(&b, &a, 2).is_err());
        let rot = mk(2.0, vec![one * Complex64::from_polar(1.0, 0.4); 2]);
        let m = cauchy_metric(&a, &rot, 2).unwrap();
        assert!(m.d_modified > 0.1);
        assert!(m.d_modified_gauge < 1e-12, "{}", m.d_modified_gauge);
    }
}
