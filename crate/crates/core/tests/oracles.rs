//! Closed-form impact solutions checked against independent numerics:
//! a fixed-step RK4 integrator, dense grid maximization and trapezoidal
//! energy integrals.

use crashfit_core::energy::{partition, PayloadClearance};
use crashfit_core::msd::{
    closed_form_state, init_from_altitude, max_displacement, simulate, ImpactInit, ImpactSolution,
    ModelParams, SimulationOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn frame() -> ModelParams {
    ModelParams::new(0.241, 46.0, 7040.0).unwrap()
}

/// Classic RK4 on (x, v) for m·x'' + c·x' + k·x = m·g.
fn rk4(
    p: &ModelParams,
    x0: f64,
    v0: f64,
    dt: f64,
    steps: usize,
    mut visit: impl FnMut(usize, f64, f64),
) {
    let (m, c, k, g) = (p.mass(), p.damping(), p.stiffness(), p.gravity());
    let accel = |x: f64, v: f64| g - (c * v + k * x) / m;
    let (mut x, mut v) = (x0, v0);
    visit(0, x, v);
    for i in 1..=steps {
        let (k1x, k1v) = (v, accel(x, v));
        let (k2x, k2v) = (
            v + 0.5 * dt * k1v,
            accel(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v),
        );
        let (k3x, k3v) = (
            v + 0.5 * dt * k2v,
            accel(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v),
        );
        let (k4x, k4v) = (v + dt * k3v, accel(x + dt * k3x, v + dt * k3v));
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        visit(i, x, v);
    }
}

#[test]
fn closed_form_matches_rk4_on_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let dt = 1e-6;
    let steps = 100_000;
    for _ in 0..20 {
        let m: f64 = rng.random_range(0.1..1.0);
        let k = rng.random_range(1000.0..20000.0);
        let zeta: f64 = rng.random_range(0.1..3.0);
        let c = 2.0 * zeta * (k * m).sqrt();
        let h = rng.random_range(0.1..2.0);
        let p = ModelParams::new(m, c, k).unwrap();
        let init = init_from_altitude(&p, h).unwrap();
        let sol = ImpactSolution::new(&p, &init);
        let mut worst = (0.0f64, 0.0f64);
        rk4(&p, init.x0, init.v0, dt, steps, |i, x, v| {
            if i % 50 == 0 {
                let (xe, ve) = sol.displacement_velocity(i as f64 * dt);
                worst.0 = worst.0.max((xe - x).abs());
                worst.1 = worst.1.max((ve - v).abs());
            }
        });
        assert!(worst.0 < 1e-6, "zeta {zeta}: x error {}", worst.0);
        assert!(worst.1 < 1e-4, "zeta {zeta}: v error {}", worst.1);
    }
}

#[test]
fn branches_agree_around_critical_damping() {
    let (m, k) = (0.241f64, 7040.0f64);
    let c_crit = 2.0 * (k * m).sqrt();
    let critical = ModelParams::new(m, c_crit, k).unwrap();
    assert!((critical.damping_ratio() - 1.0).abs() < 1e-9);
    let init = init_from_altitude(&critical, 1.0).unwrap();
    let reference = ImpactSolution::new(&critical, &init);
    for factor in [1.0 - 1e-7, 1.0 + 1e-7] {
        let p = ModelParams::new(m, c_crit * factor, k).unwrap();
        let sol = ImpactSolution::new(&p, &init);
        for i in 1..=1000 {
            let t = i as f64 * 1e-4;
            let x_ref = reference.displacement_velocity(t).0;
            let x = sol.displacement_velocity(t).0;
            assert!(
                (x - x_ref).abs() <= 1e-6 * x_ref.abs(),
                "t={t}: {x} vs {x_ref}"
            );
        }
    }
}

#[test]
fn max_displacement_matches_dense_scan() {
    let p = frame();
    for h in [0.5, 1.0, 1.5, 2.0] {
        let init = init_from_altitude(&p, h).unwrap();
        let sol = ImpactSolution::new(&p, &init);
        let dense = (0..=200_000)
            .map(|i| sol.displacement_velocity(i as f64 * 1e-7).0)
            .fold(f64::NEG_INFINITY, f64::max);
        let got = max_displacement(&p, h).unwrap();
        assert!((got - dense).abs() < 1e-10, "h={h}: {got} vs {dense}");
    }
    // 1.5 m: about 16.6 mm by the scan above.
    let x = max_displacement(&p, 1.5).unwrap();
    assert!((x - 0.0168).abs() < 0.5e-3, "{x}");
}

#[test]
fn max_displacement_monotone_in_altitude_and_stiffness() {
    for c in [10.0, 46.0, 120.0] {
        for k in [3000.0, 7040.0, 15000.0] {
            let p = ModelParams::new(0.241, c, k).unwrap();
            let heights: Vec<f64> = (1..=20).map(|i| i as f64 * 0.25).collect();
            let xs: Vec<f64> = heights
                .iter()
                .map(|&h| max_displacement(&p, h).unwrap())
                .collect();
            assert!(xs.windows(2).all(|w| w[1] > w[0]), "c={c} k={k}");
        }
    }
    for h in [0.5, 1.0, 1.5] {
        let xs: Vec<f64> = (0..20)
            .map(|i| {
                let p = ModelParams::new(0.241, 46.0, 2000.0 + 1000.0 * i as f64).unwrap();
                max_displacement(&p, h).unwrap()
            })
            .collect();
        assert!(xs.windows(2).all(|w| w[1] < w[0]), "h={h}");
    }
}

#[test]
fn ode_residual_on_every_trace_sample() {
    for (c, h) in [(46.0, 1.5), (5.0, 0.3), (400.0, 2.0)] {
        let p = ModelParams::new(0.241, c, 7040.0).unwrap();
        let trace = simulate(
            &p,
            &init_from_altitude(&p, h).unwrap(),
            &SimulationOptions::default(),
        )
        .unwrap();
        for s in &trace.samples {
            let st = s.state;
            let r = p.mass() * st.a + p.damping() * st.v + p.stiffness() * st.x - p.weight();
            assert!(r.abs() < 1e-6 * p.weight());
            assert!((s.sensor - (p.gravity() - st.a)).abs() < 1e-9 * s.sensor.abs().max(1.0));
        }
    }
}

#[test]
fn energy_balance_along_trace() {
    for (c, h) in [(46.0, 1.0), (150.0, 1.5), (10.0, 0.5)] {
        let p = ModelParams::new(0.241, c, 7040.0).unwrap();
        let init = init_from_altitude(&p, h).unwrap();
        let opts = SimulationOptions {
            dt: 1e-5,
            t_max: 0.05,
            ..Default::default()
        };
        let trace = simulate(&p, &init, &opts).unwrap();
        let (m, k) = (p.mass(), p.stiffness());
        let mut dissipated = 0.0;
        for (i, s) in trace.samples.iter().enumerate() {
            if i > 0 {
                let prev = trace.samples[i - 1].state.v;
                dissipated += 0.5 * opts.dt * c * (prev * prev + s.state.v * s.state.v);
            }
            let st = s.state;
            let lhs = 0.5 * m * st.v * st.v + 0.5 * k * st.x * st.x + dissipated;
            let rhs = 0.5 * m * init.v0 * init.v0 + m * p.gravity() * st.x;
            assert!(
                (lhs - rhs).abs() <= 1e-4 * rhs,
                "c={c} t={}: {lhs} vs {rhs}",
                st.t
            );
        }
    }
}

#[test]
fn damper_work_equals_closure_plus_gravity_work() {
    let p = frame();
    let dt = 1e-6;
    for h in [0.25, 0.5, 0.75, 1.0] {
        let part = partition(&p, h, &PayloadClearance::default()).unwrap();
        assert!(!part.collided);
        let init = init_from_altitude(&p, h).unwrap();
        let sol = ImpactSolution::new(&p, &init);
        let t_peak = sol.peak().time.unwrap();
        let n = (t_peak / dt).ceil() as usize;
        let step = t_peak / n as f64;
        let mut work = 0.0;
        let mut prev = init.v0;
        for i in 1..=n {
            let v = sol.displacement_velocity(i as f64 * step).1;
            work += 0.5 * step * p.damping() * (prev * prev + v * v);
            prev = v;
        }
        let gravity_work = p.weight() * part.displacement;
        let expected = part.total + gravity_work - part.spring;
        assert!((work - expected).abs() < 0.01 * expected, "h={h}");
        assert!(
            ((work - part.damper) - gravity_work).abs() < 0.01 * gravity_work,
            "h={h}"
        );
    }
}

#[test]
fn closed_form_long_time_limit() {
    let p = frame();
    let init = init_from_altitude(&p, 1.5).unwrap();
    let s = closed_form_state(&p, &init, 1.0).unwrap();
    assert!((s.x * 1e3 - 0.336).abs() < 1e-3);
    // Rest drop, starting compressed past equilibrium.
    let init = ImpactInit::new(0.01, 0.0).unwrap();
    let s = closed_form_state(&p, &init, 2.0).unwrap();
    assert!((s.x - p.static_sag()).abs() < 1e-12);
}
