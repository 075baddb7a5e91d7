use proptest::prelude::*;
use rrcv::cvdist::{cv2_cdf, cv_cdf, Cv2Law};
use rrcv::design::{arl_at_tau, solve_design, DEFAULT_ARL0};
use rrcv::runrules::{arl, build_chain, RuleChain, RuleTracker};
use rrcv::specfun::noncentral_t_cdf;
use rrcv::{Direction, MeasurementErrorModel, ProcessModel, RunRule};

fn rules() -> Vec<RunRule> {
    let mut out = Vec::new();
    for s in 1..=8 {
        for r in 1..=s {
            out.push(RunRule::new(r, s, Direction::Upper).unwrap());
        }
    }
    out
}

#[test]
fn chain_rows_are_stochastic() {
    for rule in rules() {
        for i in 0..=10 {
            let p = i as f64 / 10.0;
            let chain = build_chain(rule, p).unwrap();
            let absorb = chain.absorption();
            for (row, &a) in absorb.iter().enumerate() {
                let sum: f64 = (0..chain.len()).map(|j| chain.q(row, j)).sum();
                assert!((0..chain.len()).all(|j| chain.q(row, j) >= 0.0));
                assert!(a >= -1e-15);
                assert!((sum + a - 1.0).abs() < 1e-15, "{} p={p}", rule.label());
            }
        }
    }
}

#[test]
fn all_outside_signals_at_r() {
    for rule in rules() {
        let m = arl(&build_chain(rule, 0.0).unwrap()).unwrap();
        assert!((m.arl - rule.r as f64).abs() < 1e-12, "{}", rule.label());
        assert!(m.sdrl < 1e-6, "{}: {}", rule.label(), m.sdrl);
    }
}

#[test]
fn shewhart_is_geometric() {
    let rule = RunRule::shewhart(Direction::Lower);
    for p in [0.1, 0.5, 0.9, 0.99] {
        let m = arl(&build_chain(rule, p).unwrap()).unwrap();
        let q = 1.0 - p;
        assert!((m.arl - 1.0 / q).abs() < 1e-10);
        assert!((m.sdrl - p.sqrt() / q).abs() < 1e-8);
    }
}

#[test]
fn certain_inside_is_singular() {
    let chain = build_chain(RunRule::new(2, 3, Direction::Upper).unwrap(), 1.0).unwrap();
    assert!(matches!(arl(&chain), Err(rrcv::Error::Singular)));
}

fn permuted(chain: &RuleChain, perm: &[usize]) -> RuleChain {
    let n = chain.len();
    let mut transition = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            transition[perm[i] * n + perm[j]] = chain.q(i, j);
        }
    }
    let mut states = vec![0; n];
    for i in 0..n {
        states[perm[i]] = chain.states[i];
    }
    RuleChain {
        rule: chain.rule,
        p: chain.p,
        states,
        transition,
        initial_index: perm[chain.initial_index],
    }
}

/// Monte Carlo run length of a Bernoulli(1 − p) outside sequence through the tracker.
fn tracked_mean(rule: RunRule, p: f64, reps: usize) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut total = 0u64;
    for _ in 0..reps {
        let mut t = RuleTracker::new(rule);
        let mut len = 0u64;
        loop {
            len += 1;
            if t.push(rng.random::<f64>() >= p) {
                break;
            }
        }
        total += len;
    }
    total as f64 / reps as f64
}

#[test]
fn tracker_agrees_with_chain() {
    for (r, s) in [(2, 3), (3, 4), (4, 5), (2, 5)] {
        let rule = RunRule::new(r, s, Direction::Upper).unwrap();
        let p = 0.7;
        let m = arl(&build_chain(rule, p).unwrap()).unwrap();
        let reps = 200_000;
        let est = tracked_mean(rule, p, reps);
        let se = m.sdrl / (reps as f64).sqrt();
        assert!(
            (est - m.arl).abs() < 4.0 * se,
            "({r},{s}): {est} vs {}",
            m.arl
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arl_invariant_under_state_permutation(
        idx in 0usize..36,
        p in 0.0f64..0.999,
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let rule = rules()[idx];
        let chain = build_chain(rule, p).unwrap();
        let mut perm: Vec<usize> = (0..chain.len()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = arl(&chain).unwrap();
        let b = arl(&permuted(&chain, &perm)).unwrap();
        // rounding grows with the condition number of I − Q, which scales with the ARL
        let tol = 1e-14 * a.arl.max(1e4);
        prop_assert!((a.arl / b.arl - 1.0).abs() < tol);
        prop_assert!((a.sdrl / b.sdrl - 1.0).abs() < 1e3 * tol);
    }

    #[test]
    fn arl_increases_with_inside_probability(idx in 0usize..36, p in 0.0f64..0.95, dp in 1e-3f64..0.04) {
        let rule = rules()[idx];
        let a = arl(&build_chain(rule, p).unwrap()).unwrap().arl;
        let b = arl(&build_chain(rule, p + dp).unwrap()).unwrap().arl;
        prop_assert!(b > a);
    }

    #[test]
    fn cv2_cdf_is_monotone_and_bounded(
        n in 2usize..40,
        gamma in 0.01f64..0.49,
        x in 1e-6f64..2.0,
        dx in 1e-6f64..0.5,
    ) {
        let law = Cv2Law::new(n, gamma).unwrap();
        let (c, s) = law.cdf_sf(x).unwrap();
        let c2 = law.cdf(x + dx).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert!(c2 >= c - 1e-15);
        prop_assert!((c + s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cv2_law_adds_the_mirrored_t_tail(n in 2usize..40, gamma in 0.01f64..0.49, x in 0.001f64..1.0) {
        // γ̂² ≤ x² also holds when √n X̄/S ≤ −√n/x, which the CV law leaves out
        let nf = n as f64;
        let mirrored = noncentral_t_cdf(-nf.sqrt() / x, nf - 1.0, nf.sqrt() / gamma).unwrap();
        let a = cv_cdf(x, n, gamma).unwrap() + mirrored;
        let b = cv2_cdf(x * x, n, gamma).unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn cv_and_cv2_laws_agree(n in 5usize..40, gamma in 0.01f64..0.3, u in 0.05f64..4.0) {
        let x = u * gamma;
        let a = cv_cdf(x, n, gamma).unwrap();
        let b = cv2_cdf(x * x, n, gamma).unwrap();
        prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn pdf_is_derivative_of_cdf(n in 3usize..30, gamma in 0.03f64..0.4, u in 0.2f64..3.0) {
        let law = Cv2Law::new(n, gamma).unwrap();
        let x = u * gamma * gamma;
        let h = 1e-5 * x;
        let fd = (law.cdf(x + h).unwrap() - law.cdf(x - h).unwrap()) / (2.0 * h);
        let pdf = law.pdf(x).unwrap();
        prop_assert!((fd - pdf).abs() <= 1e-5 * pdf.max(1.0 / x), "{} vs {}", fd, pdf);
    }
}

#[test]
fn cdf_normalizes() {
    for n in [2, 5, 15, 50] {
        for gamma in [0.05, 0.2, 0.45] {
            let law = Cv2Law::new(n, gamma).unwrap();
            // n = 2 has a √x lower tail and a heavy upper tail
            assert!(law.cdf(1e-30).unwrap() < 1e-12);
            assert!(law.sf(1e14).unwrap() < 1e-6);
        }
    }
}

#[test]
fn design_round_trip_all_cells() {
    let me = MeasurementErrorModel::new(0.05, 0.28, 1.0, 1).unwrap();
    for (r, s) in [(1, 1), (2, 3), (3, 4), (4, 5)] {
        for dir in [Direction::Lower, Direction::Upper] {
            for (g, n) in [(0.05, 5), (0.1, 10), (0.2, 15)] {
                let pm = ProcessModel::new(g, n).unwrap();
                let rule = RunRule::new(r, s, dir).unwrap();
                let d = solve_design(rule, &pm, &me, DEFAULT_ARL0).unwrap();
                let back = arl_at_tau(&d, &pm, &me, 1.0).unwrap().arl;
                assert!(
                    (back / DEFAULT_ARL0 - 1.0).abs() < 1e-4,
                    "{} γ₀={g}: {back}",
                    rule.label()
                );
            }
        }
    }
}
