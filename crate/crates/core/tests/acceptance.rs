//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Reference values come from closed forms and one-dimensional quadratures
//! written out here, independent of the solver's own code paths.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relhartree2d::cli_io::{self, RunConfig};
use relhartree2d::diagnostics::{energy, mass, EnergyConvention};
use relhartree2d::evolve::{evolve, Integrator, RunPlan, SimState, Stepper};
use relhartree2d::scattering::{
    b_rate, cauchy_metric, make_profile, FrequencySet, PhaseRateEvaluator, PhaseTracker,
    SingularCellRule,
};
use relhartree2d::spectral::{
    dyads_above, forward_ft, inverse_ft, lp_low_symbol, lp_projection_symbol, ComplexField,
    SpectralGrid,
};
use relhartree2d::{IndexBundle, NonlinearityParams};

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Result<Outcome, String>;

fn gaussian(grid: &SpectralGrid, amp: f64, w: f64) -> ComplexField {
    grid.sample_physical(|x, y| Complex64::new(amp * (-(x * x + y * y) / (2.0 * w * w)).exp(), 0.0))
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn transforms() -> Result<Outcome, String> {
    let grid = SpectralGrid::new(256, 64.0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // smooth random data: random coefficients on a band of low modes
    let coeffs: Vec<(f64, f64, Complex64)> = (0..12)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
        })
        .collect();
    let u = grid.sample_physical(|x, y| {
        let env = (-(x * x + y * y) / 200.0).exp();
        coeffs
            .iter()
            .map(|(k1, k2, c)| c * Complex64::from_polar(env, k1 * x + k2 * y))
            .sum()
    });
    let uh = forward_ft(&u).map_err(|e| e.to_string())?;
    let planch = (uh.l2_norm_sq() / u.l2_norm_sq() / (4.0 * PI * PI) - 1.0).abs();
    let back = inverse_ft(&uh).map_err(|e| e.to_string())?;
    let rt = max_diff(u.values(), back.values()) / u.max_abs();

    // ∫ e^{-|x|²/(2w²)} e^{-ix·ξ} dx = 2πw² e^{-w²|ξ|²/2}
    let w = 3.0;
    let g = forward_ft(&gaussian(&grid, 1.0, w)).map_err(|e| e.to_string())?;
    let xis = grid.xis();
    let mut gerr: f64 = 0.0;
    for (a, &k1) in xis.iter().enumerate() {
        for (b, &k2) in xis.iter().enumerate() {
            let exact = 2.0 * PI * w * w * (-0.5 * w * w * (k1 * k1 + k2 * k2)).exp();
            gerr = gerr.max((g.at(a, b).re - exact).abs().max(g.at(a, b).im.abs()));
        }
    }
    gerr /= 2.0 * PI * w * w;
    Ok(Outcome {
        pass: planch < 1e-10 && rt < 1e-12 && gerr < 1e-8,
        detail: format!(
            "plancherel {planch:.2e} (<1e-10), round trip {rt:.2e} (<1e-12), gaussian FT {gerr:.2e} (<1e-8)"
        ),
    })
}

/// Max relative mass drift and max absolute energy drift over `t ∈ [0, 100]`.
fn conservation_run(dt: f64) -> Result<(f64, f64), String> {
    let grid = SpectralGrid::new(256, 64.0).map_err(|e| e.to_string())?;
    let p = NonlinearityParams::new(0.1, 1.0);
    let u0 = gaussian(&grid, 0.02, 1.0);
    let m0 = mass(&u0);
    let e0 = energy(&u0, &p, EnergyConvention::ConservedMinus).map_err(|e| e.to_string())?;
    let t_end = 100.0;
    let times: Vec<f64> = (1..=100).map(|i| i as f64).collect();
    let mut plan = RunPlan::new(dt, t_end, times);
    plan.enforce_wrap_guard = false;
    let (mut dm, mut de) = (0.0f64, 0.0f64);
    let mut obs = |s: &SimState| -> relhartree2d::Result<()> {
        dm = dm.max((mass(&s.u) - m0).abs() / m0);
        de = de.max((energy(&s.u, &p, EnergyConvention::ConservedMinus)? - e0).abs());
        Ok(())
    };
    let s0 = SimState::new(u0, p, IndexBundle::default());
    evolve(s0, &plan, &mut [&mut obs]).map_err(|e| e.to_string())?;
    Ok((dm, de))
}

fn conservation() -> Result<Outcome, String> {
    let (dm1, de1) = conservation_run(0.01)?;
    let (dm2, de2) = conservation_run(0.005)?;
    let ratio = de1 / de2;
    Ok(Outcome {
        pass: dm1 < 1e-9 && (3.0..=5.0).contains(&ratio),
        detail: format!(
            "mass drift {dm1:.2e} over 1e4 steps (<1e-9; {dm2:.2e} at dt/2), energy drift {de1:.3e} -> {de2:.3e}, ratio {ratio:.3} (in [3,5])"
        ),
    })
}

fn linear_decay() -> Result<Outcome, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg =
        RunConfig::parse(include_str!("../configs/linear.toml")).map_err(|e| e.to_string())?;
    cfg.outputs.directory = dir.path().to_path_buf();
    let out = cli_io::linear(&cfg).map_err(|e| e.to_string())?;
    let slope = |label: &str| {
        out.fits
            .iter()
            .find(|f| f.label == label)
            .map(|f| f.slope)
            .unwrap_or(f64::NAN)
    };
    let (s0, s2) = (slope("sup"), slope("wk2"));
    Ok(Outcome {
        pass: (-1.15..=-0.85).contains(&s0) && (-1.2..=-0.8).contains(&s2),
        detail: format!(
            "n=512 L=96, t in [5,40]: sup slope {s0:.4} (in [-1.15,-0.85]), W^(2,inf) slope {s2:.4} (in [-1.2,-0.8])"
        ),
    })
}

fn splitting_order() -> Result<Outcome, String> {
    let grid = SpectralGrid::new(128, 32.0).map_err(|e| e.to_string())?;
    let p = NonlinearityParams::new(0.1, 1.0);
    let u0 =
        grid.sample_physical(|x, y| Complex64::from_polar((-(x * x + y * y) / 2.0).exp(), 0.5 * x));
    let mut st = Stepper::new(&grid, p).map_err(|e| e.to_string())?;
    let mut run = |integ: Integrator, dt: f64, steps: usize| -> Result<ComplexField, String> {
        let mut u = u0.clone();
        for _ in 0..steps {
            st.step(integ, &mut u, dt).map_err(|e| e.to_string())?;
        }
        Ok(u)
    };
    // Strang at dt and dt/2 to t = 1 against RK4 at dt/50
    let dt = 0.1;
    let reference = run(Integrator::Rk4Ref, dt / 50.0, 500)?;
    let e1 = max_diff(
        run(Integrator::Strang, dt, 10)?.values(),
        reference.values(),
    );
    let e2 = max_diff(
        run(Integrator::Strang, dt / 2.0, 20)?.values(),
        reference.values(),
    );
    let strang = e1 / e2;
    // one RK4 step at h and h/2 against 100 substeps
    let h = 0.2;
    let one = |run: &mut dyn FnMut(Integrator, f64, usize) -> Result<ComplexField, String>,
               h: f64|
     -> Result<f64, String> {
        let r = run(Integrator::Rk4Ref, h / 100.0, 100)?;
        Ok(max_diff(
            run(Integrator::Rk4Ref, h, 1)?.values(),
            r.values(),
        ))
    };
    let r1 = one(&mut run, h)?;
    let r2 = one(&mut run, h / 2.0)?;
    let rk = r1 / r2;
    Ok(Outcome {
        pass: (3.4..=4.6).contains(&strang) && (32.0 * 0.7..=32.0 * 1.3).contains(&rk),
        detail: format!(
            "Strang errors {e1:.3e} -> {e2:.3e}, ratio {strang:.3} (in [3.4,4.6]); RK4 one-step ratio {rk:.2} (32 +- 30%)"
        ),
    })
}

fn b_integral() -> Result<Outcome, String> {
    let grid = SpectralGrid::new(256, 64.0).map_err(|e| e.to_string())?;
    // balanced width: physical and frequency tails equally resolved
    let w = relhartree2d::oracle::resolved_width(&grid);
    let uh = forward_ft(&gaussian(&grid, 1.0, w)).map_err(|e| e.to_string())?;
    // at ξ = 0 the kernel is ⟨σ⟩/|σ|; polar coordinates give 2π∫₀^∞ ⟨r⟩|û(r)|² dr
    let c = 2.0 * PI * w * w;
    let exact = 2.0
        * PI
        * simpson(
            |r| (1.0 + r * r).sqrt() * c * c * (-w * w * r * r).exp(),
            0.0,
            12.0 / w,
            100_000,
        );
    let origin = FrequencySet::probes(&grid, &[[0.0, 0.0]]);
    let err = |rule| -> Result<f64, String> {
        let v = PhaseRateEvaluator::new(&grid, origin.clone(), rule)
            .with_sigma_threshold(0.0)
            .sigma_integral(&uh)
            .map_err(|e| e.to_string())?[0];
        Ok((v - exact).abs() / exact)
    };
    let (ep, disc, omit) = (
        err(SingularCellRule::Epstein)?,
        err(SingularCellRule::Disc)?,
        err(SingularCellRule::Omit)?,
    );
    Ok(Outcome {
        pass: ep < 1e-4 && disc < omit,
        detail: format!(
            "n=256 L=64 w={w:.3}: lattice rule error {ep:.2e} (<1e-4); disc {disc:.2e} < omit {omit:.2e}"
        ),
    })
}

fn modified_scattering() -> Result<Outcome, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg =
        RunConfig::parse(include_str!("../configs/scatter.toml")).map_err(|e| e.to_string())?;
    cfg.outputs.directory = dir.path().to_path_buf();
    let out = cli_io::scatter(&cfg).map_err(|e| e.to_string())?;
    let rows = &out.report.rows;
    let find = |t1: f64| rows.iter().find(|r| (r.t1 - t1).abs() < 1e-9);
    let (Some(a), Some(b), Some(c)) = (find(8.0), find(16.0), find(32.0)) else {
        return Err("missing dyadic windows".into());
    };
    let decreasing = a.d_modified > b.d_modified && b.d_modified > c.d_modified;
    let beats = c.d_modified < 0.5 * c.d_unmodified;
    Ok(Outcome {
        pass: decreasing && beats,
        detail: format!(
            "d_modified {:.3e}, {:.3e}, {:.3e} (strictly decreasing); [32,64] d_modified {:.3e} < 0.5 x d_unmodified {:.3e}",
            a.d_modified, b.d_modified, c.d_modified, c.d_modified, c.d_unmodified
        ),
    })
}

fn gamma_regimes() -> Result<Outcome, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg =
        RunConfig::parse(include_str!("../configs/sweep.toml")).map_err(|e| e.to_string())?;
    cfg.outputs.directory = dir.path().to_path_buf();
    let runs = cli_io::sweep_gamma(&cfg, &[0.5, 1.0, 1.5]).map_err(|e| e.to_string())?;
    let d: Vec<f64> = runs
        .iter()
        .map(|r| {
            r.rows
                .iter()
                .find(|m| (m.t1 - 16.0).abs() < 1e-9)
                .map(|m| m.d_unmodified)
                .unwrap_or(f64::NAN)
        })
        .collect();
    Ok(Outcome {
        pass: d[2] < d[1] && d[1] < d[0],
        detail: format!(
            "d_unmodified[16,32]: gamma 0.5 {:.3e} > gamma 1 {:.3e} > gamma 1.5 {:.3e}",
            d[0], d[1], d[2]
        ),
    })
}

fn properties() -> Result<Outcome, String> {
    let e = |e: relhartree2d::Error| e.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = [0.0f64; 5];
    for case in 0..8 {
        let n = [16, 32, 64][case % 3];
        let l = rng.gen_range(2.0..20.0);
        let grid = SpectralGrid::new(n, l).map_err(e)?;

        // partition of unity
        let n0 = 2f64.powi(rng.gen_range(-2..2));
        let mut sum = lp_low_symbol(&grid, n0).map_err(e)?.real_values();
        for dy in dyads_above(&grid, n0) {
            for (s, v) in sum
                .iter_mut()
                .zip(lp_projection_symbol(&grid, dy).map_err(e)?.real_values())
            {
                *s += v;
            }
        }
        worst[0] = worst[0].max(sum.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max));

        // random smooth data
        let w = l / 6.0;
        let (k1, k2) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let amp = rng.gen_range(0.1..2.0);
        let u = grid.sample_physical(|x, y| {
            Complex64::from_polar(
                amp * (-(x * x + y * y) / (2.0 * w * w)).exp(),
                k1 * x + k2 * y,
            )
        });
        let p = NonlinearityParams::new(rng.gen_range(0.05..1.0), rng.gen_range(0.3..1.7));
        let idx = IndexBundle::default();
        let pts = FrequencySet::coarse(&grid, 2);

        // unimodularity |𝗏| = |û| after a short run
        let ev = PhaseRateEvaluator::new(&grid, pts.clone(), SingularCellRule::Epstein);
        let s0 = SimState::new(u.clone(), p, idx).with_phase(PhaseTracker::new(ev.into()));
        let plan = RunPlan::new(0.05, 0.5, vec![0.25, 0.5]);
        let mut profiles = Vec::new();
        let mut obs = |s: &SimState| -> relhartree2d::Result<()> {
            profiles.push(make_profile(s)?);
            Ok(())
        };
        let mut plan = plan;
        plan.enforce_wrap_guard = false;
        evolve(s0, &plan, &mut [&mut obs]).map_err(e)?;
        for pr in &profiles {
            for ((v, f), a) in pr.v_hat.iter().zip(&pr.f_hat).zip(&pr.u_hat_abs) {
                worst[1] = worst[1].max((v.norm() - a).abs() / a.max(1e-300) * a.min(1.0));
                worst[1] = worst[1].max((f.norm() - a).abs() * a.min(1.0) / a.max(1e-300));
            }
        }

        // gauge invariance of the metrics under a global phase
        let th = rng.gen_range(0.0..2.0 * PI);
        let rot = Complex64::from_polar(1.0, th);
        let m = cauchy_metric(&profiles[0], &profiles[1], 4).map_err(e)?;
        let mut p0 = profiles[0].clone();
        let mut p1 = profiles[1].clone();
        for pr in [&mut p0, &mut p1] {
            pr.f_hat.iter_mut().for_each(|v| *v *= rot);
            pr.v_hat.iter_mut().for_each(|v| *v *= rot);
        }
        let m2 = cauchy_metric(&p0, &p1, 4).map_err(e)?;
        let scale = m.d_unmodified.max(1e-300);
        worst[2] = worst[2].max(
            [
                (m.d_modified - m2.d_modified).abs(),
                (m.d_unmodified - m2.d_unmodified).abs(),
                (m.d_modified_gauge - m2.d_modified_gauge).abs(),
            ]
            .into_iter()
            .fold(0.0, f64::max)
                / scale,
        );

        // b_rate: linear in λ, quadratic in amplitude
        let s = rng.gen_range(0.0..5.0);
        let r1 = b_rate(&u, s, &p, &idx, &pts).map_err(e)?;
        let mut p3 = p;
        p3.lambda *= 3.0;
        let r3 = b_rate(&u, s, &p3, &idx, &pts).map_err(e)?;
        let mut u2 = u.clone();
        u2.scale(Complex64::new(2.0, 0.0));
        let r4 = b_rate(&u2, s, &p, &idx, &pts).map_err(e)?;
        let top = r1.iter().copied().fold(0.0, f64::max);
        for ((a, b), c) in r1.iter().zip(&r3).zip(&r4) {
            worst[3] = worst[3]
                .max((b - 3.0 * a).abs() / top)
                .max((c - 4.0 * a).abs() / top);
        }

        // B ≡ 0 when λ = 0
        let p0 = NonlinearityParams::new(0.0, p.gamma);
        let ev = PhaseRateEvaluator::new(&grid, pts.clone(), SingularCellRule::Epstein);
        let s0 = SimState::new(u, p0, idx).with_phase(PhaseTracker::new(ev.into()));
        let fin = evolve(s0, &plan, &mut []).map_err(e)?;
        worst[4] = worst[4].max(
            fin.phase
                .values()
                .iter()
                .map(|b| b.abs())
                .fold(0.0, f64::max),
        );
    }
    Ok(Outcome {
        pass: worst[0] < 1e-12
            && worst[1] < 1e-13
            && worst[2] < 1e-12
            && worst[3] < 1e-13
            && worst[4] == 0.0,
        detail: format!(
            "partition {:.1e}, |v|=|u_hat| {:.1e}, phase invariance {:.1e}, b_rate scaling {:.1e}, B at lambda=0 {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    })
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 8] = [
        ("transform correctness", transforms),
        ("mass and energy conservation", conservation),
        ("linear dispersive decay", linear_decay),
        ("splitting order", splitting_order),
        ("phase-rate integral oracle", b_integral),
        ("modified-scattering ordering", modified_scattering),
        ("gamma-regime discrimination", gamma_regimes),
        ("property suites", properties),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let (status, detail) = match check() {
            Ok(o) if o.pass => ("PASS", o.detail),
            Ok(o) => ("FAIL", o.detail),
            Err(msg) => ("FAIL", format!("error: {msg}")),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {} {name}: {status} | {detail} | {:.1}s",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
