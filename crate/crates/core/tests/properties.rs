use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use relhartree2d::cli_io::{decode_snapshot, encode_snapshot};
use relhartree2d::diagnostics::mass;
use relhartree2d::evolve::Stepper;
use relhartree2d::scattering::{
    b_rate, cauchy_metric, make_profile, FrequencySet, PhaseRateEvaluator, PhaseTracker,
    SingularCellRule,
};
use relhartree2d::spectral::{dyads_above, lp_low_symbol, lp_projection_symbol};
use relhartree2d::{
    evolve, forward_ft, inverse_ft, ComplexField, HartreeOperator, IndexBundle, Integrator,
    NonlinearityParams, RunPlan, SimState, SpectralGrid,
};

fn grid_strategy() -> impl Strategy<Value = SpectralGrid> {
    (prop::sample::select(vec![16usize, 32, 48]), 2.0f64..20.0)
        .prop_map(|(n, l)| SpectralGrid::new(n, l).unwrap())
}

/// A few modulated Gaussian bumps; smooth and well inside the box.
fn field_on(grid: &SpectralGrid, bumps: &[(f64, f64, f64, f64, f64)]) -> ComplexField {
    let l = grid.half_width();
    let w = l / 5.0;
    grid.sample_physical(|x, y| {
        bumps
            .iter()
            .map(|&(a, cx, cy, k1, k2)| {
                let (dx, dy) = (x - cx * l * 0.3, y - cy * l * 0.3);
                Complex64::from_polar(
                    a * (-(dx * dx + dy * dy) / (2.0 * w * w)).exp(),
                    k1 * x + k2 * y,
                )
            })
            .sum()
    })
}

fn bumps() -> impl Strategy<Value = Vec<(f64, f64, f64, f64, f64)>> {
    prop::collection::vec(
        (
            0.05f64..1.5,
            -1.0f64..1.0,
            -1.0f64..1.0,
            -1.0f64..1.0,
            -1.0f64..1.0,
        ),
        1..4,
    )
}

fn tracked_run(
    u: ComplexField,
    p: NonlinearityParams,
    times: Vec<f64>,
) -> Vec<relhartree2d::scattering::ProfileSnapshot> {
    let grid = u.grid().clone();
    let ev = PhaseRateEvaluator::new(
        &grid,
        FrequencySet::coarse(&grid, 2),
        SingularCellRule::Epstein,
    );
    let s0 = SimState::new(u, p, IndexBundle::default()).with_phase(PhaseTracker::new(ev.into()));
    let t_end = *times.last().unwrap();
    let mut plan = RunPlan::new(0.05, t_end, times);
    plan.enforce_wrap_guard = false;
    let mut out = Vec::new();
    let mut obs = |s: &SimState| -> relhartree2d::Result<()> {
        out.push(make_profile(s)?);
        Ok(())
    };
    evolve(s0, &plan, &mut [&mut obs]).unwrap();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn plancherel_and_round_trip(grid in grid_strategy(), b in bumps()) {
        let u = field_on(&grid, &b);
        let uh = forward_ft(&u).unwrap();
        let rel = (uh.l2_norm_sq() / (4.0 * PI * PI) - u.l2_norm_sq()).abs() / u.l2_norm_sq();
        prop_assert!(rel < 1e-12, "plancherel {rel}");
        let back = inverse_ft(&uh).unwrap();
        let err = u.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-13 * u.max_abs().max(1.0));
    }

    #[test]
    fn littlewood_paley_sums_to_one(grid in grid_strategy(), e in -3i32..2) {
        let n0 = 2f64.powi(e);
        let mut total = lp_low_symbol(&grid, n0).unwrap().real_values();
        for d in dyads_above(&grid, n0) {
            for (t, v) in total.iter_mut().zip(lp_projection_symbol(&grid, d).unwrap().real_values()) {
                *t += v;
            }
        }
        let worst = total.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn hartree_potential_is_real(grid in grid_strategy(), b in bumps(), gamma in 0.2f64..1.8) {
        let u = field_on(&grid, &b);
        let op = HartreeOperator::new(&grid, NonlinearityParams::new(0.3, gamma)).unwrap();
        let w = op.potential(&u).unwrap();
        let scale = w.max_abs().max(1e-300);
        let im = w.values().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        prop_assert!(im / scale < 1e-12, "{im}");
    }

    #[test]
    fn strang_conserves_mass(grid in grid_strategy(), b in bumps(), lambda in -1.0f64..1.0, dt in 0.01f64..0.3) {
        let mut u = field_on(&grid, &b);
        let m0 = mass(&u);
        let mut st = Stepper::new(&grid, NonlinearityParams::new(lambda, 1.0)).unwrap();
        for _ in 0..20 {
            st.step(Integrator::Strang, &mut u, dt).unwrap();
        }
        prop_assert!(((mass(&u) - m0) / m0).abs() < 1e-12);
    }

    #[test]
    fn snapshot_round_trip_is_exact(grid in grid_strategy(), b in bumps(), t in -1e3f64..1e3) {
        let u = field_on(&grid, &b);
        let (v, t2) = decode_snapshot(&encode_snapshot(&u, t)).unwrap();
        prop_assert_eq!(t2.to_bits(), t.to_bits());
        prop_assert_eq!(v.grid(), u.grid());
        for (a, c) in u.values().iter().zip(v.values()) {
            prop_assert_eq!(a.re.to_bits(), c.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), c.im.to_bits());
        }
    }

    #[test]
    fn b_rate_linear_in_lambda_quadratic_in_amplitude(
        grid in grid_strategy(), b in bumps(), lambda in 0.01f64..2.0, c in 0.1f64..5.0, s in 0.0f64..10.0
    ) {
        let u = field_on(&grid, &b);
        let pts = FrequencySet::coarse(&grid, 2);
        let idx = IndexBundle::default();
        let p = NonlinearityParams::new(lambda, 1.0);
        let base = b_rate(&u, s, &p, &idx, &pts).unwrap();
        let mut pc = p;
        pc.lambda *= c;
        let by_lambda = b_rate(&u, s, &pc, &idx, &pts).unwrap();
        let mut uc = u.clone();
        uc.scale(Complex64::new(c, 0.0));
        let by_amp = b_rate(&uc, s, &p, &idx, &pts).unwrap();
        let top = base.iter().copied().fold(0.0, f64::max).max(1e-300);
        for ((r, l), a) in base.iter().zip(&by_lambda).zip(&by_amp) {
            prop_assert!((l - c * r).abs() / (c * top) < 1e-12);
            prop_assert!((a - c * c * r).abs() / (c * c * top) < 1e-12);
        }
    }
}

proptest! {
    // each case runs the tracked evolution, so fewer cases
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn modified_profile_has_transform_modulus(grid in grid_strategy(), b in bumps(), lambda in -1.0f64..1.0) {
        for pr in tracked_run(field_on(&grid, &b), NonlinearityParams::new(lambda, 1.0), vec![0.25, 0.5]) {
            for ((v, f), a) in pr.v_hat.iter().zip(&pr.f_hat).zip(&pr.u_hat_abs) {
                prop_assert!((v.norm() - a).abs() <= 1e-13 * a.max(1.0));
                prop_assert!((f.norm() - a).abs() <= 1e-13 * a.max(1.0));
            }
        }
    }

    #[test]
    fn metrics_ignore_global_phase(grid in grid_strategy(), b in bumps(), theta in 0.0f64..(2.0 * PI)) {
        let ps = tracked_run(field_on(&grid, &b), NonlinearityParams::new(0.5, 1.0), vec![0.25, 0.5]);
        let m = cauchy_metric(&ps[0], &ps[1], 4).unwrap();
        let rot = Complex64::from_polar(1.0, theta);
        let (mut p0, mut p1) = (ps[0].clone(), ps[1].clone());
        for p in [&mut p0, &mut p1] {
            p.f_hat.iter_mut().for_each(|z| *z *= rot);
            p.v_hat.iter_mut().for_each(|z| *z *= rot);
        }
        let r = cauchy_metric(&p0, &p1, 4).unwrap();
        let tol = 1e-12 * m.d_unmodified.max(1e-300);
        prop_assert!((m.d_modified - r.d_modified).abs() <= tol);
        prop_assert!((m.d_unmodified - r.d_unmodified).abs() <= tol);
        prop_assert!((m.d_modified_gauge - r.d_modified_gauge).abs() <= tol);
    }

    #[test]
    fn phase_correction_vanishes_without_coupling(grid in grid_strategy(), b in bumps(), gamma in 0.2f64..1.8) {
        let ps = tracked_run(field_on(&grid, &b), NonlinearityParams::new(0.0, gamma), vec![0.5]);
        prop_assert!(ps[0].b.iter().all(|&x| x == 0.0));
        for (v, f) in ps[0].v_hat.iter().zip(&ps[0].f_hat) {
            prop_assert_eq!(v, f);
        }
    }
}
