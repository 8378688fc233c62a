use std::sync::OnceLock;

use ringlab::detect::{ORBIT_TOL, PHASE_TOL};
use ringlab::network::*;
use ringlab::waves::*;

fn wave_10() -> &'static PeriodicOrbit {
    static ORBIT: OnceLock<PeriodicOrbit> = OnceLock::new();
    ORBIT.get_or_init(|| {
        find_wave_orbit(10, 0.75, 0, &WaveSearch::default())
            .unwrap()
            .expect("Mode-1 wave at (10, 0.75)")
    })
}

/// `∫ trace J dt` from the orbit samples by the periodic trapezoid rule,
/// with `trace J = n(1 - αβ) - 3γ Σ y_j² - σ trace L`.
fn trace_integral(orbit: &PeriodicOrbit, laplacian_trace: f64) -> f64 {
    let p = orbit.params;
    let n = orbit.n;
    let per_sample = |x: &[f64]| {
        n as f64 * (1.0 - p.alpha * p.beta) - 3.0 * p.gamma * x[n..].iter().map(|y| y * y).sum::<f64>()
            - orbit.sigma * laplacian_trace
    };
    orbit.dt() * (0..orbit.len()).map(|i| per_sample(orbit.sample(i))).sum::<f64>()
}

#[test]
fn wave_orbit_structure() {
    let o = wave_10();
    let n = 10;
    assert!(o.period > 0.0);
    assert!(o.residual <= MAX_RESIDUAL);
    assert!((n as f64 * o.tau - o.period).abs() < PHASE_TOL);
    assert!(o.symmetry_defect <= ORBIT_TOL);
    // independent check of the shift symmetry: x_{j+1}(t + τ) = x_j(t)
    let mut worst: f64 = 0.0;
    for i in 0..o.len() {
        let t = i as f64 * o.dt();
        for j in 0..n {
            let next = (j + 1) % n;
            worst = worst.max((o.component_at(t + o.tau, n + next) - o.sample(i)[n + j]).abs());
            worst = worst.max((o.component_at(t + o.tau, next) - o.sample(i)[j]).abs());
        }
    }
    assert!(worst < 1e-3, "pointwise shift defect {worst}");
}

#[test]
fn wave_satisfies_aux_relation() {
    let o = wave_10();
    assert!(check_aux_relation(o, 10));
    let delay = o.period - o.tau;
    let oracle = (o.period / delay * 9.0 - 10.0).abs();
    assert!((aux_relation_defect(o.period, o.tau, 10) - oracle).abs() < 1e-12);
    assert!(oracle < AUX_EPS);
}

#[test]
fn aux_relation_arithmetic() {
    let t = 12.0;
    assert!(aux_relation_defect(t, t / 10.0, 10) < 1e-12);
    // τ off by 1% at n = 10: 9 / 0.899 - 10 ≈ 0.0111
    let d = aux_relation_defect(t, 1.01 * t / 10.0, 10);
    assert!((d - 0.0111).abs() < 1e-3, "{d}");
    assert!(d > AUX_EPS);
    let d = aux_relation_defect(t, 1.1 * t / 10.0, 10);
    assert!((d - 0.1124).abs() < 1e-3, "{d}");
}

#[test]
fn wave_floquet_multipliers() {
    let o = wave_10();
    let coupling = CouplingConfig::new(Topology::ring(10), 0.75).unwrap();
    let f = floquet_multipliers(o, &coupling, &FhnParams::default()).unwrap();
    assert_eq!(f.multipliers.len(), 20);
    assert!(f.trivial_defect < TRIVIAL_TOL);
    assert!(f.stable && f.max_nontrivial_modulus < 1.0);
    assert!(f.liouville_defect < 1e-3);
    // Liouville against an independently integrated trace: ring L has unit diagonal
    let oracle = trace_integral(o, 10.0);
    let rel = ((f.log_abs_det - oracle).exp() - 1.0).abs();
    assert!(rel < 1e-3, "det vs exp(∫ tr J): {rel}");
}

#[test]
fn aux_system_stays_periodic() {
    let d = aux_periodicity_defect(wave_10()).unwrap();
    assert!(d <= 1e-3, "{d}");
}

#[test]
fn orbit_export() {
    let o = wave_10();
    let h = o.header();
    for key in ["n", "sigma", "T", "tau", "residual"] {
        assert!(h.get(key).is_some(), "{key}");
    }
    let tr = o.to_trajectory();
    assert_eq!(tr.len(), o.len() + 1);
    assert!((tr.t_end() - o.period).abs() < 1e-9);
    let (a, b) = (tr.state(0), tr.last_state().unwrap());
    assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-5));
}

#[test]
fn strong_coupling_small_ring_has_no_wave() {
    assert!(find_wave_orbit(3, 10.0, 0, &WaveSearch::default()).unwrap().is_none());
    assert!(find_wave_orbit(2, 0.5, 0, &WaveSearch::default()).is_err());
}

#[test]
fn five_node_wave_in_stable_region() {
    let o = find_wave_orbit(5, 0.375, 1, &WaveSearch::default()).unwrap().expect("wave at (5, 0.375)");
    assert!((5.0 * o.tau - o.period).abs() < PHASE_TOL);
    assert!(o.symmetry_defect <= ORBIT_TOL);
    let f = floquet_multipliers(&o, &CouplingConfig::new(Topology::ring(5), 0.375).unwrap(), &o.params).unwrap();
    assert!(f.trivial_defect < TRIVIAL_TOL && f.stable);
}

#[test]
fn synchronous_orbit_above_threshold_is_stable() {
    let n = 4;
    let sigma = 1.2 * sync_threshold(&Topology::ring(n)).unwrap();
    let o = PeriodicOrbit::synchronous(n, sigma, &FhnParams::default()).unwrap();
    let f = floquet_multipliers(&o, &CouplingConfig::new(Topology::ring(n), sigma).unwrap(), &o.params).unwrap();
    assert!(f.trivial_defect < TRIVIAL_TOL);
    assert!(f.max_nontrivial_modulus < 1.0, "{}", f.max_nontrivial_modulus);
    assert!(f.liouville_defect < 1e-3);
}

#[test]
fn floquet_rejects_bad_inputs() {
    let o = wave_10();
    let wrong = CouplingConfig::new(Topology::ring(9), 0.75).unwrap();
    assert!(floquet_multipliers(o, &wrong, &FhnParams::default()).is_err());
    let mut rough = o.clone();
    rough.residual = 1e-3;
    let c = CouplingConfig::new(Topology::ring(10), 0.75).unwrap();
    assert!(matches!(
        floquet_multipliers(&rough, &c, &FhnParams::default()),
        Err(ringlab::Error::Precondition(_))
    ));
}

#[test]
fn boundary_bisection_postcondition() {
    let search = WaveSearch::default();
    let step = 0.25;
    let rows = wave_stability_boundary(&[3, 5, 6], (0.25, 1.0), step, 7, &search).unwrap();
    assert_eq!(rows[0].status, BoundaryStatus::NoStableWave);
    let mut last = 0.0;
    for row in &rows[1..] {
        assert_eq!(row.status, BoundaryStatus::Resolved, "n = {}", row.n);
        let sc = row.sigma_critical.unwrap();
        assert!(row.max_multiplier_below.unwrap() <= 1.0 - STABILITY_MARGIN);
        assert!(row.max_multiplier_above.is_none_or(|m| m > 1.0 - STABILITY_MARGIN));
        assert!(sc >= last, "boundary not monotone at n = {}", row.n);
        last = sc;
        // one coarse step either side of the boundary
        let scan = wave_stability_scan(row.n, &[sc - step / 2.0, sc + step / 2.0], 7, &search);
        assert!(scan[0].stable, "n = {}: unstable below", row.n);
        assert!(!scan[1].stable, "n = {}: stable above", row.n);
    }
    assert!(wave_stability_boundary(&[2], (0.25, 1.0), step, 7, &search).is_err());
    assert!(wave_stability_boundary(&[], (0.25, 1.0), step, 7, &search).is_err());
}

#[test]
fn two_rings_competition() {
    let report = two_rings_demo(&TwoRingsDemo::default()).unwrap();
    assert!(report.ring1.sync_error < NEAR_SYNC_TOL);
    let tau = report.ring2.tau.unwrap();
    assert!(report.ring2.mean_shift.unwrap() > tau / 2.0);
    assert!(report.competing());
    // neither ring reaches its manifold exactly
    assert!(report.ring1.sync_error > ringlab::detect::SYNC_TOL);
}
