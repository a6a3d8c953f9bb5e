use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rews::stability::{distance_criterion, frequency_response, log_grid, CircleSpec};
use rews::turbine::step_plant;
use rews::{CpCurve, PlantState, TurbineParams};

/// Integrate the drivetrain with a fixed generator torque over `horizon`.
/// The trajectory stays inside one interpolation interval (λ ∈ [7.5, 7.6]
/// at 7 m/s), where the right-hand side is smooth; across nodes the C¹
/// interpolant caps the observable order.
fn integrate(dt: f64, horizon: f64) -> f64 {
    let p = TurbineParams::case_study();
    let c = CpCurve::synthetic();
    let u = 7.0;
    let w = |lambda: f64| lambda * u / p.rotor_radius;
    // torque that balances the rotor at λ = 7.52; start at λ = 7.595
    let t_g = p.aero_torque(&c, w(7.52), u).unwrap() / p.gear_ratio;
    let mut s = PlantState { omega_r: w(7.595), t: 0.0 };
    let n = (horizon / dt).round() as usize;
    for _ in 0..n {
        s = step_plant(&p, &c, s, t_g, u, dt).unwrap();
    }
    s.omega_r
}

#[test]
fn rk4_converges_at_fourth_order() {
    let (a, b, c) = (integrate(2.0, 16.0), integrate(1.0, 16.0), integrate(0.5, 16.0));
    let order = ((a - b) / (b - c)).abs().log2();
    assert!((3.9..4.5).contains(&order), "observed order {order}");
}

#[test]
fn cp_prime_matches_central_differences() {
    let c = CpCurve::synthetic();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-6;
    for _ in 0..500 {
        let l: f64 = rng.gen_range(2.0 + 2.0 * h..10.0 - 2.0 * h);
        let fd = (c.cp(l + h).unwrap() - c.cp(l - h).unwrap()) / (2.0 * h);
        let d = c.cp_prime(l).unwrap();
        assert!((d - fd).abs() <= 1e-4 * d.abs().max(1e-2), "λ={l}: {d} vs {fd}");
    }
}

#[test]
fn distance_is_stable_under_grid_refinement() {
    let circle = CircleSpec::case_study();
    for &(g, b, t) in &[(40.0, 10.0, 0.3), (100.0, 10.0, 0.3), (100.0, 200.0, 0.3), (40.0, 10.0, 2.0)] {
        let coarse = frequency_response(g, b, t, &log_grid(1e-3, 1e3, 4000)).unwrap();
        let fine = frequency_response(g, b, t, &log_grid(1e-3, 1e3, 8000)).unwrap();
        let a = distance_criterion(&coarse, &circle).unwrap();
        let f = distance_criterion(&fine, &circle).unwrap();
        assert!((a.min_distance - f.min_distance).abs() <= 1e-3 * f.min_distance, "{a:?} {f:?}");
        assert_eq!(a.verdict, f.verdict);
    }
}
