use rrcv::cvdist::{cv2_moments, Cv2Law};
use rrcv::design::{arl_at_shift, solve_design, DEFAULT_ARL0};
use rrcv::mcsim::{estimate_run_length, sample_cv2, SimConfig};
use rrcv::merror::observed_cv_incontrol;
use rrcv::{Direction, Execution, MeasurementErrorModel, ProcessModel, RunRule, ShiftSpec};

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

#[test]
fn mean_of_squared_cv_matches_second_order_expansion() {
    let (n, gamma) = (5, 0.1);
    let v = sample_cv2(
        n,
        gamma,
        &ShiftSpec::in_control(),
        &MeasurementErrorModel::identity(),
        10_000_000,
        2024,
    )
    .unwrap();
    let (m, sd) = mean_sd(&v);
    let se = sd / (v.len() as f64).sqrt();
    let g2 = gamma * gamma;
    let target = g2 * (1.0 + 3.0 * g2 / n as f64);
    assert!((m - target).abs() < 3.0 * se, "{m} vs {target} (se {se})");
    // the chart moments carry the opposite-sign 3γ²/n term
    let formula = cv2_moments(&ProcessModel::new(gamma, n).unwrap())
        .unwrap()
        .mean;
    assert!((formula - (g2 - (target - g2))).abs() < 1e-15);
}

#[test]
fn moment_formulas_against_simulation() {
    for gamma in [0.05, 0.1, 0.2] {
        for n in [5, 10, 15] {
            let v = sample_cv2(
                n,
                gamma,
                &ShiftSpec::in_control(),
                &MeasurementErrorModel::identity(),
                1_000_000,
                8,
            )
            .unwrap();
            let (m, sd) = mean_sd(&v);
            let f = cv2_moments(&ProcessModel::new(gamma, n).unwrap()).unwrap();
            assert!(
                (f.std / sd - 1.0).abs() < 0.01,
                "γ₀={gamma} n={n}: std {} vs {sd}",
                f.std
            );
            // mean bias is 6γ₀²/n, inside 1% only for small γ₀²/n
            if 6.0 * gamma * gamma / (n as f64) < 0.005 {
                assert!(
                    (f.mean / m - 1.0).abs() < 0.01,
                    "γ₀={gamma} n={n}: mean {} vs {m}",
                    f.mean
                );
            }
        }
    }
}

#[test]
fn squared_cv_follows_exact_law() {
    let (n, gamma) = (5, 0.1);
    let mut v = sample_cv2(
        n,
        gamma,
        &ShiftSpec::in_control(),
        &MeasurementErrorModel::identity(),
        1_000_000,
        99,
    )
    .unwrap();
    v.sort_by(f64::total_cmp);
    let law = Cv2Law::new(n, gamma).unwrap();
    let len = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = law.cdf(x).unwrap();
        d = d.max(f - i as f64 / len).max((i + 1) as f64 / len - f);
    }
    // Kolmogorov critical value at α = 0.001
    let crit = 1.949 / len.sqrt();
    assert!(d < crit, "D = {d}, critical {crit}");
}

#[test]
fn observed_incontrol_cv_matches_model() {
    let gamma0 = 0.1;
    let me = MeasurementErrorModel::new(0.05, 0.28, 1.1, 3).unwrap();
    let count = 4_000_000;
    // one huge subgroup: its sample CV estimates γ₀* directly
    let v = sample_cv2(count, gamma0, &ShiftSpec::in_control(), &me, 1, 5).unwrap();
    let cv = v[0].sqrt();
    let target = observed_cv_incontrol(gamma0, &me).unwrap();
    let se = target * (0.5 / count as f64 + target * target / count as f64).sqrt();
    assert!((cv - target).abs() < 3.0 * se, "{cv} vs {target} (se {se})");
}

#[test]
fn simulated_arl_matches_exact_for_a_small_cv_decrease() {
    let pm = ProcessModel::new(0.05, 5).unwrap();
    let me = MeasurementErrorModel::identity();
    let d = solve_design(
        RunRule::new(2, 3, Direction::Lower).unwrap(),
        &pm,
        &me,
        DEFAULT_ARL0,
    )
    .unwrap();
    let shift = ShiftSpec::from_tau(0.5, 0.05).unwrap();
    let exact = arl_at_shift(&d, &pm, &me, &shift).unwrap().arl;
    let rep =
        estimate_run_length(&d, &pm, &me, &shift, &SimConfig::new(1_000_000, 7).unwrap()).unwrap();
    let se = rep.metrics.stderr.unwrap();
    assert_eq!(rep.truncated, 0);
    assert!(
        (rep.metrics.arl - exact).abs() < 3.0 * se,
        "{} vs {exact} (se {se})",
        rep.metrics.arl
    );
}

#[test]
fn simulation_is_reproducible_across_schedules() {
    let pm = ProcessModel::new(0.1, 5).unwrap();
    let me = MeasurementErrorModel::new(0.05, 0.28, 1.0, 2).unwrap();
    let d = solve_design(
        RunRule::new(3, 4, Direction::Upper).unwrap(),
        &pm,
        &me,
        DEFAULT_ARL0,
    )
    .unwrap();
    let shift = ShiftSpec::from_tau(1.5, 0.1).unwrap();
    let cfg = SimConfig::new(20_000, 3).unwrap();
    let a = estimate_run_length(
        &d,
        &pm,
        &me,
        &shift,
        &cfg.with_execution(Execution::Sequential),
    )
    .unwrap();
    let b = estimate_run_length(
        &d,
        &pm,
        &me,
        &shift,
        &cfg.with_execution(Execution::Parallel),
    )
    .unwrap();
    let c = estimate_run_length(&d, &pm, &me, &shift, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let other =
        estimate_run_length(&d, &pm, &me, &shift, &SimConfig::new(20_000, 4).unwrap()).unwrap();
    assert_ne!(a.metrics.arl, other.metrics.arl);
}
