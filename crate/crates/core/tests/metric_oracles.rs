//! Metrics against independent oracles on simulated trajectories.

use flybench_core::bridge::{builtin, StraightLine};
use flybench_core::geometry::{rasterize_occupancy, Bounds, ObstacleMap, World};
use flybench_core::mapgen::{generate_map, generate_trial, MapSpec, TrialConstraints, TrialSpec};
use flybench_core::metrics::{average_goal_velocity, energy_optimality};
use flybench_core::path::shortest_free_path;
use flybench_core::sim::{run_trial, DroneParams, DroneState, Outcome, SimConfig};
use flybench_core::{Vec2, Vec3};

/// Fritsch-Carlson monotone cubic slopes.
fn pchip_slopes(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > (3.0 * d0).abs() {
            3.0 * d0
        } else {
            s
        }
    };
    if n > 2 {
        d[0] = end(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    } else {
        d[0] = delta[0];
        d[1] = delta[0];
    }
    d
}

/// Integral of the norm of the spline derivative, 16-point composite
/// Gauss-Legendre on each interval.
fn spline_jerk_integral(states: &[DroneState]) -> f64 {
    let t: Vec<f64> = states.iter().map(|s| s.t).collect();
    let comps: Vec<(Vec<f64>, Vec<f64>)> = (0..3)
        .map(|c| {
            let y: Vec<f64> = states.iter().map(|s| s.acceleration[c]).collect();
            let d = pchip_slopes(&t, &y);
            (y, d)
        })
        .collect();
    let gl = [(-0.861_136_311_594_052_6, 0.347_854_845_137_453_8), (-0.339_981_043_584_856_3, 0.652_145_154_862_546_2), (0.339_981_043_584_856_3, 0.652_145_154_862_546_2), (0.861_136_311_594_052_6, 0.347_854_845_137_453_8)];
    let mut total = 0.0;
    for k in 0..t.len() - 1 {
        let h = t[k + 1] - t[k];
        for sub in 0..4 {
            for (x, w) in gl {
                let s = (sub as f64 + 0.5 * (x + 1.0)) / 4.0;
                let mut j2 = 0.0;
                for (y, d) in &comps {
                    // Derivative of the cubic Hermite basis.
                    let dy = (6.0 * s * s - 6.0 * s) / h * y[k]
                        + (3.0 * s * s - 4.0 * s + 1.0) * d[k]
                        + (-6.0 * s * s + 6.0 * s) / h * y[k + 1]
                        + (3.0 * s * s - 2.0 * s) * d[k + 1];
                    j2 += dy * dy;
                }
                total += j2.sqrt() * w * 0.5 * h / 4.0;
            }
        }
    }
    total
}

#[test]
fn energy_optimality_agrees_with_spline_oracle() {
    let spec = MapSpec::indoor(Bounds::centered(60.0, 60.0), 3.5, 11, 0.6);
    let world = World::new(generate_map(&spec).unwrap());
    let c = TrialConstraints { d_lo: 20.0, d_hi: 30.0, max_time: 60.0, altitude: 1.5, d_drone: 0.6 };
    let cfg = SimConfig::default();
    let mut checked = 0;
    for seed in 0..20 {
        let trial = generate_trial(&world, seed, &c).unwrap();
        for name in ["straight-line", "reactive"] {
            let rec = run_trial(&world, &trial, "t", builtin(name).unwrap().as_mut(), &cfg);
            if rec.outcome != Outcome::Finished {
                continue;
            }
            let eo = energy_optimality(&rec.states).unwrap();
            let oracle = spline_jerk_integral(&rec.states);
            assert!((eo - oracle).abs() <= 0.02 * oracle, "{name} seed {seed}: EO {eo} vs spline {oracle}");
            checked += 1;
        }
    }
    assert!(checked >= 10, "only {checked} finished trials");
}

/// Continuous solution of the lag model from rest towards a constant
/// setpoint `v`: time to cover `dist`.
fn lag_time(dist: f64, v: f64, a_max: f64, tau: f64) -> f64 {
    let v1 = v - a_max * tau;
    let t1 = v1 / a_max;
    let x1 = 0.5 * a_max * t1 * t1;
    let x = |s: f64| x1 + v * s - (v - v1) * tau * (1.0 - (-s / tau).exp());
    let (mut lo, mut hi) = (0.0, dist / v + 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if x(mid) > dist {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    t1 + 0.5 * (lo + hi)
}

#[test]
fn straight_line_goal_velocity_is_slightly_below_v_max() {
    let world = World::new(ObstacleMap::empty(Bounds::centered(160.0, 160.0)));
    let drone = DroneParams { v_max: 2.0, ..DroneParams::default() };
    let cfg = SimConfig { drone, goal_tolerance: 0.1, ..SimConfig::default() };
    let trial = TrialSpec { start: Vec3::new(-25.0, 0.0, 1.5), goal: Vec3::new(25.0, 0.0, 1.5), max_time: 60.0, trial_seed: 0 };
    let rec = run_trial(&world, &trial, "t", &mut StraightLine::default(), &cfg);
    assert_eq!(rec.outcome, Outcome::Finished);

    let grid = rasterize_occupancy(&world, 0.2, 0.6, 1.5);
    let d_min = shortest_free_path(&grid, Vec2::new(-25.0, 0.0), Vec2::new(25.0, 0.0)).unwrap().d_min;
    assert!((d_min - 50.0).abs() < 1e-9);

    let agv = average_goal_velocity(d_min, rec.t_trial).unwrap();
    let expected = d_min / lag_time(50.0 - 0.1, 2.0, drone.a_max, drone.velocity_time_constant);
    assert!(agv < 2.0 && agv > 1.95, "AGV {agv}");
    assert!((agv - expected).abs() < 2e-3 * expected, "AGV {agv} vs closed form {expected}");
}
