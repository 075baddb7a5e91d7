use rrcv::design::{arl_at_tau, solve_design, DEFAULT_ARL0};
use rrcv::{Direction, MeasurementErrorModel, ProcessModel, RunRule};

// (r, s, γ₀, n, k_d, k_u) from an independent scipy ncf + brentq solve
const CONSTANTS: [(u32, u32, f64, usize, f64, f64); 18] = [
    (2, 3, 0.05, 5, 1.19000273, 2.16842871),
    (2, 3, 0.05, 15, 1.47165581, 2.01158086),
    (2, 3, 0.1, 5, 1.16861950, 2.18376031),
    (2, 3, 0.1, 15, 1.45779427, 2.02339448),
    (2, 3, 0.2, 5, 1.08737883, 2.24505322),
    (2, 3, 0.2, 15, 1.40410084, 2.06922892),
    (3, 4, 0.05, 5, 1.02027376, 1.29423210),
    (3, 4, 0.05, 15, 1.15055687, 1.29978264),
    (3, 4, 0.1, 5, 1.00148012, 1.30188478),
    (3, 4, 0.1, 15, 1.13955032, 1.30680130),
    (3, 4, 0.2, 5, 0.93008414, 1.33077693),
    (3, 4, 0.2, 15, 1.09691432, 1.33338970),
    (4, 5, 0.05, 5, 0.86454650, 0.80271415),
    (4, 5, 0.05, 15, 0.90893671, 0.87370072),
    (4, 5, 0.1, 5, 0.84791770, 0.80893399),
    (4, 5, 0.1, 15, 0.89972418, 0.87913832),
    (4, 5, 0.2, 5, 0.78478908, 0.83181966),
    (4, 5, 0.2, 15, 0.86408696, 0.89951843),
];

// (r, s, γ₀, n, τ, ARL, SDRL) from the same oracle
const SHIFTED: [(u32, u32, f64, usize, f64, f64, f64); 16] = [
    (2, 3, 0.05, 5, 0.5, 7.91371346, 6.37794602),
    (2, 3, 0.05, 5, 0.8, 85.93302285, 84.14109742),
    (2, 3, 0.05, 5, 1.1, 95.89353883, 94.09229867),
    (2, 3, 0.05, 5, 2.0, 3.37593407, 1.85622169),
    (2, 3, 0.2, 15, 0.5, 2.09431781, 0.32701590),
    (2, 3, 0.2, 15, 0.8, 17.98930246, 16.36242512),
    (2, 3, 0.2, 15, 1.1, 48.53971499, 46.80161446),
    (2, 3, 0.2, 15, 2.0, 2.12221368, 0.37829728),
    (4, 5, 0.05, 5, 0.5, 5.36249659, 2.10021545),
    (4, 5, 0.05, 5, 0.8, 46.59780495, 43.17986447),
    (4, 5, 0.05, 5, 1.1, 94.89658093, 91.32639448),
    (4, 5, 0.05, 5, 2.0, 5.34029366, 2.07478316),
    (4, 5, 0.2, 15, 0.5, 4.00451907, 0.06773152),
    (4, 5, 0.2, 15, 0.8, 11.55967698, 8.42748882),
    (4, 5, 0.2, 15, 1.1, 43.58431405, 40.18153310),
    (4, 5, 0.2, 15, 2.0, 4.06595624, 0.28183685),
];

fn design(r: u32, s: u32, dir: Direction, g: f64, n: usize) -> rrcv::ChartDesign {
    let pm = ProcessModel::new(g, n).unwrap();
    let rule = RunRule::new(r, s, dir).unwrap();
    solve_design(rule, &pm, &MeasurementErrorModel::identity(), DEFAULT_ARL0).unwrap()
}

#[test]
fn chart_constants_match_independent_solver() {
    for (r, s, g, n, kd, ku) in CONSTANTS {
        let lower = design(r, s, Direction::Lower, g, n).k;
        let upper = design(r, s, Direction::Upper, g, n).k;
        assert!(
            (lower - kd).abs() < 2e-6,
            "({r},{s}) γ₀={g} n={n}: k_d {lower} vs {kd}"
        );
        assert!(
            (upper - ku).abs() < 2e-6,
            "({r},{s}) γ₀={g} n={n}: k_u {upper} vs {ku}"
        );
    }
}

#[test]
fn shifted_run_lengths_match_independent_solver() {
    for (r, s, g, n, tau, arl, sdrl) in SHIFTED {
        let dir = if tau < 1.0 {
            Direction::Lower
        } else {
            Direction::Upper
        };
        let d = design(r, s, dir, g, n);
        let pm = ProcessModel::new(g, n).unwrap();
        let m = arl_at_tau(&d, &pm, &MeasurementErrorModel::identity(), tau).unwrap();
        assert!(
            (m.arl / arl - 1.0).abs() < 2e-5,
            "({r},{s}) γ₀={g} n={n} τ={tau}: {} vs {arl}",
            m.arl
        );
        assert!(
            (m.sdrl / sdrl - 1.0).abs() < 2e-4,
            "({r},{s}) γ₀={g} n={n} τ={tau}: {} vs {sdrl}",
            m.sdrl
        );
    }
}
