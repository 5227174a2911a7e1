use doa_cert::ode::{integrate, integrate_field, rk4_step, IntegrateOptions, Stepper, TerminalStatus};
use doa_cert::{fixtures, parse_system};
use proptest::prelude::*;

fn decay(x: &[f64]) -> Option<Vec<f64>> {
    Some(x.iter().map(|v| -v).collect())
}

fn plain(horizon: f64, stepper: Stepper) -> IntegrateOptions {
    IntegrateOptions {
        horizon,
        stepper,
        escape_box: None,
        stop_on_converge: false,
        record_every: 1,
    }
}

fn rk4_error(h: f64) -> f64 {
    let traj = integrate(&decay, &[1.0], &plain(1.0, Stepper::Rk4 { h }));
    (traj.final_state()[0] - (-1.0f64).exp()).abs()
}

#[test]
fn rk4_matches_exponential() {
    assert!(rk4_error(1e-3) <= 1e-10);
}

#[test]
fn rk4_is_fourth_order() {
    let linear = parse_system(fixtures::LINEAR).unwrap();
    for h in [0.1, 0.05, 0.025] {
        let err = |h: f64| {
            let t = integrate_field(&linear, &[1.0, -0.5], &plain(2.0, Stepper::Rk4 { h }));
            let e = (-2.0f64).exp();
            (t.final_state()[0] - e).abs().max((t.final_state()[1] + 0.5 * e).abs())
        };
        assert!(err(h) / err(h / 2.0) >= 8.0, "h={h}");
    }
}

#[test]
fn adaptive_and_fixed_steppers_agree() {
    let starts = [[0.3, -0.2], [0.5, 0.5], [-0.4, 0.1]];
    for &(name, text) in &fixtures::ALL {
        let vf = parse_system(text).unwrap();
        for x0 in starts {
            let bounded = |stepper| IntegrateOptions {
                escape_box: Some(vec![(-10.0, 10.0); 2]),
                ..plain(10.0, stepper)
            };
            let a = integrate_field(&vf, &x0, &bounded(Stepper::Rk4 { h: 1e-3 }));
            let b = integrate_field(&vf, &x0, &bounded(Stepper::rkf45_default()));
            assert_eq!(a.status, b.status, "{name} {x0:?}");
            if a.status == TerminalStatus::EscapedBox {
                continue;
            }
            for (p, q) in a.final_state().iter().zip(b.final_state()) {
                assert!((p - q).abs() <= 1e-6, "{name} {x0:?}: {p} vs {q}");
            }
        }
    }
}

#[test]
fn hopf_outside_unit_circle_does_not_converge() {
    let vf = parse_system(fixtures::HOPF).unwrap();
    let b = [(-1.0, 1.0), (-1.0, 1.0)];
    let t = integrate_field(&vf, &[2.0, 0.0], &IntegrateOptions::for_box(&b, 100.0));
    assert_ne!(t.status, TerminalStatus::Converged);
}

#[test]
fn decay_converges_within_twenty() {
    let b = [(-1.0, 1.0), (-1.0, 1.0)];
    let t = integrate(&decay, &[1.0, 0.0], &IntegrateOptions::for_box(&b, 20.0));
    assert_eq!(t.status, TerminalStatus::Converged);
    assert!(t.final_time() < 20.0);
}

#[test]
fn example1_beyond_hyperbola_escapes() {
    let vf = parse_system(fixtures::EXAMPLE1).unwrap();
    let b = [(-2.0, 2.0), (-2.0, 2.0)];
    let t = integrate_field(&vf, &[1.5, 1.5], &IntegrateOptions::for_box(&b, 100.0));
    assert_eq!(t.status, TerminalStatus::EscapedBox);
}

proptest! {
    #[test]
    fn rk4_step_is_exact_for_constant_fields(x in prop::collection::vec(-5.0..5.0f64, 1..4), h in 0.0..1.0f64) {
        let c: Vec<f64> = (0..x.len()).map(|i| i as f64 - 1.0).collect();
        let f = |_: &[f64]| Some(c.clone());
        let y = rk4_step(&f, &x, h).unwrap();
        for i in 0..x.len() {
            prop_assert!((y[i] - (x[i] + h * c[i])).abs() <= 1e-12);
        }
    }

    #[test]
    fn recorded_times_are_increasing(x0 in prop::collection::vec(-1.0..1.0f64, 2), every in 1usize..50) {
        let vf = parse_system(fixtures::VANDERPOL).unwrap();
        let mut opts = IntegrateOptions::for_box(&[(-1.0, 1.0), (-1.0, 1.0)], 5.0);
        opts.record_every = every;
        let t = integrate_field(&vf, &x0, &opts);
        prop_assert_eq!(t.times.len(), t.states.len());
        prop_assert!(t.times.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(&t.states[0], &x0);
    }
}
