mod common;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use ringlab::error::Error;
use ringlab::integrate::*;
use ringlab::network::{FhnNetwork, FhnParams, CouplingConfig, Topology, initial_condition};
use ringlab::waves::single_node_period;

fn decay(_: f64, x: &[f64], dx: &mut [f64]) {
    dx[0] = -x[0];
}

#[test]
fn exponential_decay_hits_inverse_e() {
    let x = integrate_final(decay, &[1.0], (0.0, 1.0), &IntegratorConfig::with_tolerance(1e-8)).unwrap();
    assert!((x[0] - (-1f64).exp()).abs() < 1e-6);
    let x = integrate_final(decay, &[1.0], (0.0, 1.0), &IntegratorConfig::default()).unwrap();
    assert!((x[0] - 0.3678794).abs() < 1e-5);
}

#[test]
fn error_scales_with_tolerance() {
    let err = |tol: f64| {
        let tr = integrate(decay, &[1.0], (0.0, 10.0), &IntegratorConfig::with_tolerance(tol)).unwrap();
        tr.states().map(|(t, x)| (x[0] - (-t).exp()).abs()).fold(0.0, f64::max)
    };
    let tols = [1e-4, 1e-6, 1e-8, 1e-10];
    let errs: Vec<f64> = tols.iter().map(|&t| err(t)).collect();
    for w in errs.windows(2) {
        // two decades of tolerance buy at least one decade of accuracy
        assert!(w[1] < w[0] / 10.0, "{errs:?}");
    }
    for (e, t) in errs.iter().zip(&tols) {
        assert!(*e < 100.0 * t, "{errs:?}");
    }
}

#[test]
fn samples_follow_dense_grid() {
    let cfg = IntegratorConfig {
        dense_output_dt: 0.25,
        ..IntegratorConfig::with_tolerance(1e-10)
    };
    let tr = integrate(decay, &[1.0], (0.0, 3.0), &cfg).unwrap();
    assert_eq!(tr.len(), 13);
    for (t, x) in tr.states() {
        assert!((x[0] - (-t).exp()).abs() < 1e-9, "t = {t}");
    }
    assert_eq!(tr.t_end(), 3.0);
}

#[test]
fn runs_are_deterministic() {
    let net = FhnNetwork::ring(6, 0.75).unwrap();
    let x0 = initial_condition(6, 5).to_flat();
    let cfg = IntegratorConfig::default();
    let a = integrate(net.field(), &x0, (0.0, 300.0), &cfg).unwrap();
    let b = integrate(net.field(), &x0, (0.0, 300.0), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn harmonic_oscillator_conserves_energy() {
    let f = |_: f64, x: &[f64], dx: &mut [f64]| {
        dx[0] = x[1];
        dx[1] = -x[0];
    };
    let tr = integrate(f, &[1.0, 0.0], (0.0, 20.0 * PI), &IntegratorConfig::with_tolerance(1e-10)).unwrap();
    for (_, x) in tr.states() {
        assert!((x[0] * x[0] + x[1] * x[1] - 1.0).abs() < 1e-8);
    }
}

#[test]
fn failures_are_reported() {
    // x' = x² blows up at t = 1
    let blow = |_: f64, x: &[f64], dx: &mut [f64]| dx[0] = x[0] * x[0];
    let err = integrate(blow, &[1.0], (0.0, 2.0), &IntegratorConfig::default()).unwrap_err();
    assert!(err.is_numerical(), "{err}");
    assert!(integrate(decay, &[f64::NAN], (0.0, 1.0), &IntegratorConfig::default()).is_err());
    assert!(integrate(decay, &[1.0], (1.0, 1.0), &IntegratorConfig::default()).is_err());
    let bad = IntegratorConfig {
        rtol: 0.0,
        ..Default::default()
    };
    assert!(matches!(integrate(decay, &[1.0], (0.0, 1.0), &bad), Err(Error::Config(_) | Error::Domain(_))));
}

#[test]
fn csv_has_header_and_full_precision() {
    let tr = Trajectory::from_parts(vec![0.0, 0.1], 2, vec![1.0 / 3.0, -2.0, 0.5, 1e-20]).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf, Some("{\"a\":1}")).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# {\"a\":1}"));
    assert_eq!(lines.next(), Some("t,z1,y1"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(row, vec![0.0, 1.0 / 3.0, -2.0]);
}

#[test]
fn config_json_round_trip() {
    let cfg = IntegratorConfig::default();
    let text = serde_json::to_string(&cfg).unwrap();
    assert!(text.contains("\"max_step\":null"));
    let back: IntegratorConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn single_node_period_matches_rk4() {
    let p = FhnParams::default();
    let oracle = common::fhn_period_rk4(p.alpha, p.beta, p.gamma, 1e-4);
    for rtol in [1e-5, 1e-7] {
        let cfg = IntegratorConfig::with_tolerance(rtol);
        let t0 = single_node_period(&p, &cfg).unwrap();
        assert!(((t0 - oracle) / oracle).abs() < 1e-3, "rtol {rtol}: {t0} vs {oracle}");
    }
}

#[test]
fn constant_jacobian_monodromy() {
    let (a, b, t) = (-0.3, 0.2, 2.5);
    let m = integrate_variational(
        |_, j: &mut DMatrix<f64>| {
            j.fill(0.0);
            j[(0, 0)] = a;
            j[(1, 1)] = b;
        },
        2,
        (0.0, t),
        &IntegratorConfig::with_tolerance(1e-10),
    )
    .unwrap();
    assert!((m.matrix[(0, 0)] - (a * t).exp()).abs() < 1e-8);
    assert!((m.matrix[(1, 1)] - (b * t).exp()).abs() < 1e-8);
    assert!(m.matrix[(0, 1)].abs() < 1e-10 && m.matrix[(1, 0)].abs() < 1e-10);
    assert!((m.log_abs_det - (a + b) * t).abs() < 1e-8);
}

#[test]
fn mathieu_monodromy_obeys_liouville() {
    // Mathieu-type system with trace sin t - c, which integrates to -2πc
    let c = 0.2;
    let jac = |t: f64, j: &mut DMatrix<f64>| {
        j[(0, 0)] = t.sin();
        j[(0, 1)] = 1.0;
        j[(1, 0)] = -(1.0 + 0.5 * t.cos());
        j[(1, 1)] = -c;
    };
    let period = 2.0 * PI;
    let m = integrate_variational(jac, 2, (0.0, period), &IntegratorConfig::with_tolerance(1e-10)).unwrap();
    let want = (-c * period).exp();
    assert!((m.matrix.determinant() - want).abs() < 1e-4);
    assert!((m.log_abs_det - (-c * period)).abs() < 1e-6);
}

#[test]
fn autonomous_orbit_has_unit_multiplier() {
    let p = FhnParams::default();
    let t0 = single_node_period(&p, &IntegratorConfig::with_tolerance(1e-10)).unwrap();
    // a point on the cycle: integrate past the transient
    let field = move |_: f64, x: &[f64], dx: &mut [f64]| {
        let (a, b) = p.node_field(x[0], x[1]);
        dx[0] = a;
        dx[1] = b;
    };
    let cfg = IntegratorConfig {
        dense_output_dt: t0 / 4000.0,
        ..IntegratorConfig::with_tolerance(1e-11)
    };
    let x_on = integrate_final(field, &[0.0, 0.1], (0.0, 600.0), &cfg).unwrap();
    let orbit = integrate(field, &x_on, (0.0, t0), &cfg).unwrap();
    let len = orbit.len();
    let y = orbit.component(1);
    let jac = |t: f64, j: &mut DMatrix<f64>| {
        let i = ((t / orbit.dt()).round() as usize).min(len - 1);
        let k = p.node_jacobian(y[i]);
        for r in 0..2 {
            for c in 0..2 {
                j[(r, c)] = k[r][c];
            }
        }
    };
    let m = integrate_variational(jac, 2, (0.0, t0), &IntegratorConfig::with_tolerance(1e-10)).unwrap();
    let ev = ringlab::linalg::eigenvalues(&m.matrix).unwrap();
    let closest = ev.iter().map(|l| (l - 1.0).norm()).fold(f64::INFINITY, f64::min);
    assert!(closest < 5e-3, "{ev:?}");
}

#[test]
fn delayed_exponential_matches_series() {
    let h = DelayHistory::from_fn(1.0, 1, |_, out| out[0] = 1.0).unwrap();
    let cfg = IntegratorConfig {
        dense_output_dt: 0.05,
        ..IntegratorConfig::with_tolerance(1e-10)
    };
    let tr = integrate_dde(|_, _, xd, dx| dx[0] = -xd[0], &h, (0.0, 6.0), &cfg).unwrap();
    let mut worst: f64 = 0.0;
    for (t, x) in tr.states() {
        worst = worst.max((x[0] - common::delayed_exponential(t)).abs());
    }
    assert!(worst < 1e-8, "worst {worst}");
    let i2 = tr.times().iter().position(|&t| (t - 2.0).abs() < 1e-9).unwrap();
    // s(2) = 1 - 2 + 1/2 = -1/2
    assert!((tr.value(i2, 0) + 0.5).abs() < 1e-4);
    assert!((common::delayed_exponential(2.0) + 0.5).abs() < 1e-15);
}

#[test]
fn delay_series_oracle_sanity() {
    // on [0, 1]: x = 1 - t
    for t in [0.0, 0.3, 1.0] {
        assert!((common::delayed_exponential(t) - (1.0 - t)).abs() < 1e-15);
    }
    // on [1, 2]: x = 1 - t + (t - 1)² / 2
    let t = 1.7;
    assert!((common::delayed_exponential(t) - (1.0 - t + 0.49 / 2.0)).abs() < 1e-14);
}

#[test]
fn uncoupled_delay_system_matches_plain_integration() {
    let p = FhnParams::default();
    let node = move |_: f64, x: &[f64], dx: &mut [f64]| {
        let (a, b) = p.node_field(x[0], x[1]);
        dx[0] = a;
        dx[1] = b;
    };
    let cfg = IntegratorConfig::with_tolerance(1e-10);
    let h = DelayHistory::from_fn(4.0, 2, |_, out| {
        out[0] = 0.0;
        out[1] = 0.1;
    })
    .unwrap();
    let sigma = 0.0;
    let dde = integrate_dde(
        |_, s, sd, ds| {
            node(0.0, s, ds);
            ds[1] -= sigma * (s[1] - sd[1]);
        },
        &h,
        (0.0, 100.0),
        &cfg,
    )
    .unwrap();
    let ode = integrate(node, &[0.0, 0.1], (0.0, 100.0), &cfg).unwrap();
    assert_eq!(dde.len(), ode.len());
    for i in 0..ode.len() {
        assert_eq!(dde.times()[i], ode.times()[i]);
        for c in 0..2 {
            assert!((dde.value(i, c) - ode.value(i, c)).abs() < 1e-6);
        }
    }
}

#[test]
fn history_errors() {
    assert!(DelayHistory::from_fn(0.0, 1, |_, o| o[0] = 0.0).is_err());
    assert!(DelayHistory::from_samples(1.0, -0.5, 0.1, 1, vec![1.0; 6]).is_err());
}

#[test]
fn coupled_network_sampling_is_uniform() {
    let net = FhnNetwork::new(FhnParams::default(), CouplingConfig::new(Topology::chain(4), 1.5).unwrap()).unwrap();
    let tr = integrate(net.field(), &initial_condition(4, 1).to_flat(), (0.0, 50.0), &IntegratorConfig::default()).unwrap();
    assert_eq!(tr.len(), 501);
    for w in tr.times().windows(2) {
        assert!((w[1] - w[0] - 0.1).abs() < 1e-9);
    }
}
