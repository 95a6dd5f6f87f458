//! Norms and conserved quantities of a snapshot, and power-law decay fits.
//!
//! Every function here is a pure function of its inputs.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolve::SimState;
use crate::hartree::{HartreeOperator, NonlinearityParams};
use crate::spectral::{
    forward_ft, forward_in_place, half_wave_symbol, inverse_in_place, japanese, lp_weight,
    ComplexField, Space, SpectralGrid,
};

/// Sign of the quartic term in the energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyConvention {
    /// `½⟨u,⟨D⟩u⟩ + (λ/4)∫W|u|²`, as displayed alongside the equation.
    PaperPlus,
    /// `½⟨u,⟨D⟩u⟩ - (λ/4)∫W|u|²`, the Hamiltonian of `∂ₜu = -i⟨D⟩u + iλWu`.
    ConservedMinus,
}

/// `M(u) = ‖u‖_{L²}` (Riemann sum with cell `h²`).
pub fn mass(u: &ComplexField) -> f64 {
    u.l2_norm_sq().sqrt()
}

fn frequency_samples(u: &ComplexField) -> Result<Vec<Complex64>> {
    u.expect_space(Space::Physical)?;
    let mut data = u.values().to_vec();
    forward_in_place(u.grid(), &mut data);
    Ok(data)
}

/// `½⟨u, ⟨D⟩u⟩ ± (λ/4)∫(|x|^{-γ} * |u|²)|u|²`.
pub fn energy(
    u: &ComplexField,
    p: &NonlinearityParams,
    convention: EnergyConvention,
) -> Result<f64> {
    let op = HartreeOperator::new(u.grid(), *p)?;
    energy_with(&op, u, convention)
}

pub fn energy_with(
    op: &HartreeOperator,
    u: &ComplexField,
    convention: EnergyConvention,
) -> Result<f64> {
    let grid = u.grid();
    let uh = frequency_samples(u)?;
    let xis = grid.xis();
    let n = grid.n();
    let mut kin = 0.0;
    for a in 0..n {
        for b in 0..n {
            kin += japanese(xis[a], xis[b]) * uh[grid.index(a, b)].norm_sqr();
        }
    }
    let cell_xi = grid.dxi() * grid.dxi();
    let kinetic = 0.5 * kin * cell_xi / (4.0 * PI * PI);
    let lambda = op.params().lambda;
    if lambda == 0.0 {
        return Ok(kinetic);
    }
    let w = op.potential_real(u)?;
    let h2 = grid.spacing() * grid.spacing();
    let quartic: f64 = w
        .iter()
        .zip(u.values())
        .map(|(w, v)| w * v.norm_sqr())
        .sum::<f64>()
        * h2;
    let sign = match convention {
        EnergyConvention::PaperPlus => 1.0,
        EnergyConvention::ConservedMinus => -1.0,
    };
    Ok(kinetic + sign * 0.25 * lambda * quartic)
}

/// `‖g‖_{H^s} = ((2π)^{-2} ∫ ⟨ξ⟩^{2s} |ĝ|² dξ)^{1/2}` from frequency samples.
fn sobolev_from_hat(grid: &SpectralGrid, g_hat: &[Complex64], s: f64) -> f64 {
    let xis = grid.xis();
    let n = grid.n();
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            let w = (1.0 + xis[a] * xis[a] + xis[b] * xis[b]).powf(s);
            acc += w * g_hat[grid.index(a, b)].norm_sqr();
        }
    }
    (acc * grid.dxi() * grid.dxi() / (4.0 * PI * PI)).sqrt()
}

/// `‖u‖_{H^s}`.
pub fn sobolev_norm(u: &ComplexField, s: f64) -> Result<f64> {
    let uh = frequency_samples(u)?;
    Ok(sobolev_from_hat(u.grid(), &uh, s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNorms {
    /// `‖u‖_{H^{n_d}} + ‖x f‖_{H²}`
    pub e1: f64,
    /// `‖x² f‖_{H²}`
    pub e2: f64,
    /// `‖x f‖_{L²}`
    pub xf_l2: f64,
    /// Share of `∫|x|²|f|²` that sits within two cells of the box edge.
    pub boundary_fraction: f64,
}

impl WeightedNorms {
    /// Whether the sawtooth weight `x` can be trusted on this snapshot.
    pub fn window_ok(&self) -> bool {
        self.boundary_fraction <= 1e-8
    }
}

/// Weighted norms of the profile `f = e^{it⟨D⟩}u`, with `x` taken as the box coordinate.
pub fn weighted_norms(u: &ComplexField, t: f64, sobolev_order: f64) -> Result<WeightedNorms> {
    let grid = u.grid();
    let n = grid.n();
    let mut uh = frequency_samples(u)?;
    let hn = sobolev_from_hat(grid, &uh, sobolev_order);
    // f = e^{it⟨D⟩}u
    half_wave_symbol(grid, -t).multiply_in_place(&mut uh);
    let mut f = uh;
    inverse_in_place(grid, &mut f);

    let xs = grid.xs();
    let weighted = |wfn: &dyn Fn(f64, f64) -> f64| -> Vec<Complex64> {
        let mut out = Vec::with_capacity(grid.len());
        for (i, &x1) in xs.iter().enumerate() {
            for (j, &x2) in xs.iter().enumerate() {
                out.push(f[grid.index(i, j)] * wfn(x1, x2));
            }
        }
        out
    };
    let h2_of = |mut g: Vec<Complex64>| {
        forward_in_place(grid, &mut g);
        sobolev_from_hat(grid, &g, 2.0)
    };
    let l2_of = |g: &[Complex64]| {
        (g.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.spacing().powi(2)).sqrt()
    };

    let x1f = weighted(&|x, _| x);
    let x2f = weighted(&|_, y| y);
    let xf_l2 = (l2_of(&x1f).powi(2) + l2_of(&x2f).powi(2)).sqrt();
    let xf_h2 = (h2_of(x1f).powi(2) + h2_of(x2f).powi(2)).sqrt();
    let xx = h2_of(weighted(&|x, _| x * x));
    let xy = h2_of(weighted(&|x, y| x * y));
    let yy = h2_of(weighted(&|_, y| y * y));
    let e2 = (xx * xx + 2.0 * xy * xy + yy * yy).sqrt();

    let mut edge = 0.0;
    let mut total = 0.0;
    for (i, &x1) in xs.iter().enumerate() {
        for (j, &x2) in xs.iter().enumerate() {
            let v = (x1 * x1 + x2 * x2) * f[grid.index(i, j)].norm_sqr();
            total += v;
            if i < 2 || j < 2 || i >= n - 2 || j >= n - 2 {
                edge += v;
            }
        }
    }
    let boundary_fraction = if total > 0.0 { edge / total } else { 0.0 };
    Ok(WeightedNorms {
        e1: hn + xf_h2,
        e2,
        xf_l2,
        boundary_fraction,
    })
}

/// `‖u‖_S = sup_ξ ⟨ξ⟩^k |û(ξ)|`.
pub fn scattering_norm(u: &ComplexField, k_index: u32) -> Result<f64> {
    let uh = forward_ft(u)?;
    let grid = u.grid();
    let xis = grid.xis();
    let n = grid.n();
    let mut best: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let w = japanese(xis[a], xis[b]).powi(k_index as i32);
            best = best.max(w * uh.at(a, b).norm());
        }
    }
    Ok(best)
}

/// `‖u‖_{L^∞}`.
pub fn sup_norm(u: &ComplexField) -> f64 {
    u.max_abs()
}

/// `‖u‖_{W^{ℓ,∞}} = max_{|α|≤ℓ} ‖∂^α u‖_∞` for every `ℓ = 0..=max_order`,
/// with spectral derivatives.
pub fn wk_inf_norms(u: &ComplexField, max_order: u32) -> Result<Vec<f64>> {
    let grid = u.grid();
    let uh = frequency_samples(u)?;
    let xis = grid.xis();
    let n = grid.n();
    let mut per_order = vec![0.0f64; max_order as usize + 1];
    per_order[0] = u.max_abs();
    let i = Complex64::new(0.0, 1.0);
    for order in 1..=max_order {
        let mut best: f64 = 0.0;
        for a1 in 0..=order {
            let a2 = order - a1;
            let mut d = uh.clone();
            for p in 0..n {
                let m1 = (i * xis[p]).powu(a1);
                for q in 0..n {
                    d[grid.index(p, q)] *= m1 * (i * xis[q]).powu(a2);
                }
            }
            inverse_in_place(grid, &mut d);
            best = best.max(d.iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
        per_order[order as usize] = best;
    }
    // cumulative maximum over |α| ≤ ℓ
    for l in 1..per_order.len() {
        per_order[l] = per_order[l].max(per_order[l - 1]);
    }
    Ok(per_order)
}

pub fn wk_inf_norm(u: &ComplexField, order: u32) -> Result<f64> {
    Ok(wk_inf_norms(u, order)?[order as usize])
}

/// `‖P_N u‖_∞` for a dyadic `N`.
pub fn lp_sup_norm(u: &ComplexField, dyad: f64) -> Result<f64> {
    let grid = u.grid();
    let mut uh = frequency_samples(u)?;
    let xis = grid.xis();
    let n = grid.n();
    for a in 0..n {
        for b in 0..n {
            let r = (xis[a] * xis[a] + xis[b] * xis[b]).sqrt();
            uh[grid.index(a, b)] *= lp_weight(r, dyad);
        }
    }
    inverse_in_place(grid, &mut uh);
    Ok(uh.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// Least-squares slope of `log(value)` against `log(t)` with its standard
/// error; at least `min_samples` points are required.
pub fn log_log_fit(series: &[(f64, f64)], min_samples: usize) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, v)| *t > 0.0 && *v > 0.0 && t.is_finite() && v.is_finite())
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < min_samples.max(2) {
        return Err(Error::DegenerateSeries(format!(
            "need at least {} positive samples, got {}",
            min_samples.max(2),
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateSeries("all sample times coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let stderr = if pts.len() > 2 {
        let ssr: f64 = pts
            .iter()
            .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
            .sum();
        (ssr / (m - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok((slope, stderr))
}

/// Power-law decay fit over samples with `t ≥ t_min` (at least five).
pub fn decay_exponent_fit(series: &[(f64, f64)], t_min: f64) -> Result<(f64, f64)> {
    if t_min.is_nan() || t_min <= 0.0 {
        return Err(Error::DegenerateSeries(format!(
            "t_min must be positive, got {t_min}"
        )));
    }
    let sel: Vec<(f64, f64)> = series.iter().copied().filter(|p| p.0 >= t_min).collect();
    log_log_fit(&sel, 5)
}

/// Settings for [`diagnostics_record`].
#[derive(Debug, Clone)]
pub struct DiagnosticsConfig {
    /// Discrete Sobolev order `n_d` used in `E₁`.
    pub sobolev_order: f64,
    /// Positions (within the phase tracker's set) of the probe frequencies.
    pub probe_positions: Vec<usize>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            sobolev_order: 8.0,
            probe_positions: Vec::new(),
        }
    }
}

/// All tracked quantities at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy_paper: f64,
    pub energy_cons: f64,
    pub sup: f64,
    /// `‖u‖_{W^{ℓ,∞}}` for ℓ = 1..=4.
    pub wk: [f64; 4],
    pub hn: f64,
    pub e1: f64,
    pub e2: f64,
    pub s_norm: f64,
    pub ratio_e1: f64,
    pub ratio_e2: f64,
    pub boundary_fraction: f64,
    pub b_probes: Vec<f64>,
}

pub fn diagnostics_record(
    state: &SimState,
    op: &HartreeOperator,
    cfg: &DiagnosticsConfig,
) -> Result<DiagnosticsRecord> {
    let u = &state.u;
    let t = state.t;
    let wk = wk_inf_norms(u, 4)?;
    let weighted = weighted_norms(u, t, cfg.sobolev_order)?;
    let hn = sobolev_norm(u, cfg.sobolev_order)?;
    let bracket = japanese(t, 0.0);
    let d0 = state.indices.delta0;
    let b_probes = cfg
        .probe_positions
        .iter()
        .map(|&i| state.phase.values().get(i).copied().unwrap_or(0.0))
        .collect();
    Ok(DiagnosticsRecord {
        t,
        mass: mass(u),
        energy_paper: energy_with(op, u, EnergyConvention::PaperPlus)?,
        energy_cons: energy_with(op, u, EnergyConvention::ConservedMinus)?,
        sup: wk[0],
        wk: [wk[1], wk[2], wk[3], wk[4]],
        hn,
        e1: weighted.e1,
        e2: weighted.e2,
        s_norm: scattering_norm(u, state.indices.k_index)?,
        ratio_e1: bracket.powf(-d0) * weighted.e1,
        ratio_e2: bracket.powf(-2.0 * d0) * weighted.e2,
        boundary_fraction: weighted.boundary_fraction,
        b_probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    fn gaussian(grid: &SpectralGrid, amp: f64, width: f64) -> ComplexField {
        grid.sample_physical(|x, y| {
            Complex64::new(amp * (-(x * x + y * y) / (2.0 * width * width)).exp(), 0.0)
        })
    }

    #[test]
    fn mass_examples() {
        let g = make_grid(64, 12.0).unwrap();
        assert_eq!(mass(&g.zeros(Space::Physical)), 0.0);
        let m1 = mass(&gaussian(&g, 1.0, 1.3));
        let m3 = mass(&gaussian(&g, 3.0, 1.3));
        assert!((m3 / m1 - 3.0).abs() < 1e-13);
        // ∫ e^{-r²/w²} = π w²
        assert!((m1 * m1 - PI * 1.69).abs() < 1e-10);
    }

    #[test]
    fn free_energy_bounds() {
        let g = make_grid(64, 12.0).unwrap();
        let u = gaussian(&g, 0.7, 1.0);
        let p = NonlinearityParams::new(0.0, 1.0);
        let e = energy(&u, &p, EnergyConvention::ConservedMinus).unwrap();
        assert!(e >= 0.5 * mass(&u).powi(2));
        assert_eq!(
            energy(&g.zeros(Space::Physical), &p, EnergyConvention::PaperPlus).unwrap(),
            0.0
        );
        let p = NonlinearityParams::new(0.5, 1.0);
        let plus = energy(&u, &p, EnergyConvention::PaperPlus).unwrap();
        let minus = energy(&u, &p, EnergyConvention::ConservedMinus).unwrap();
        assert!(plus > minus);
    }

    #[test]
    fn first_moment_of_gaussian() {
        let g = make_grid(128, 16.0).unwrap();
        let w = 1.5;
        let u = gaussian(&g, 1.0, w);
        let norms = weighted_norms(&u, 0.0, 8.0).unwrap();
        // ∫|x|² e^{-|x|²/w²} dx = π w⁴
        let exact = (PI * w.powi(4)).sqrt();
        assert!((norms.xf_l2 - exact).abs() < 1e-8 * exact);
        assert!(norms.window_ok());
        let zero = weighted_norms(&g.zeros(Space::Physical), 3.0, 8.0).unwrap();
        assert_eq!((zero.e1, zero.e2), (0.0, 0.0));
    }

    #[test]
    fn scattering_norm_examples() {
        let g = make_grid(64, 16.0).unwrap();
        assert_eq!(scattering_norm(&g.zeros(Space::Physical), 10).unwrap(), 0.0);
        let u = gaussian(&g, 1.0, 1.0);
        let s0 = scattering_norm(&u, 0).unwrap();
        assert!((s0 - forward_ft(&u).unwrap().max_abs()).abs() < 1e-14);
        // equal mass, wider in x ⇒ narrower in ξ
        let narrow = gaussian(&g, 1.0, 1.0);
        let wide = gaussian(&g, 0.5, 2.0);
        assert!((mass(&narrow) - mass(&wide)).abs() < 1e-10);
        assert!(scattering_norm(&wide, 10).unwrap() < scattering_norm(&narrow, 10).unwrap());
    }

    #[test]
    fn wk_examples() {
        let g = make_grid(32, 8.0).unwrap();
        let u = gaussian(&g, 1.0, 1.0);
        let w = wk_inf_norms(&u, 2).unwrap();
        assert_eq!(w[0], sup_norm(&u));
        let (a1, a2) = (g.zero_index() + 3, g.zero_index() - 5);
        let (k1, k2) = (g.xis()[a1], g.xis()[a2]);
        let wave = g.sample_physical(|x, y| Complex64::from_polar(1.0, k1 * x + k2 * y));
        let w = wk_inf_norms(&wave, 1).unwrap();
        let expected = k1.abs().max(k2.abs());
        assert!((w[1] / w[0] - expected.max(1.0)).abs() < 1e-12);
    }

    #[test]
    fn fits() {
        let series: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 3.0 / i as f64)).collect();
        let (slope, err) = decay_exponent_fit(&series, 1.0).unwrap();
        assert!((slope + 1.0).abs() < 1e-12 && err < 1e-12);
        let flat: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 2.5)).collect();
        assert!(decay_exponent_fit(&flat, 1.0).unwrap().0.abs() < 1e-14);
        assert!(decay_exponent_fit(&series[..4], 1.0).is_err());
        assert!(decay_exponent_fit(&series, 8.0).is_err());
    }
}
