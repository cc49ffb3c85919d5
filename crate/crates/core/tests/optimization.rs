use uavnet::config::{Config, CAT0_TOML};
use uavnet::scmd::{solve_max_min, solve_sum_ee, ScMdProblem, Tier};
use uavnet::scsd::{optimize_bs_power, Binding, ScSdProblem};
use uavnet::units::{db_to_linear, dbm_to_watts};

/// Single threshold, ground-to-air exponent 2 and loose power bounds.
fn quadratic_problem(tau_db: f64) -> ScSdProblem<f64> {
    let cfg = Config::from_toml(
        CAT0_TOML,
        &["channel.alpha_a=2.0".into(), format!("iot.thresholds_db=[{tau_db}]"), "protection.rho_db=40".into()],
    )
    .unwrap();
    let mut pr = cfg.scsd_problem_at(50.0, dbm_to_watts(46.0)).unwrap();
    pr.p_min = 1e-12;
    pr.p_max = 1e6;
    pr
}

/// Derivative of `ln EE` for the single-threshold, `α_A = 2` problem, assembled by hand.
fn dlog_ee(pr: &ScSdProblem<f64>, p: f64) -> f64 {
    let tau = pr.thresholds[0];
    let lt = pr.consts.l_m_tilde;
    let a = std::f64::consts::PI * pr.lambda_b * pr.p_b * pr.consts.l_b;
    let m = p * lt / tau - pr.p_n;
    a * (lt / tau) / (m * m) - (1.0 / pr.eta) / (pr.p_cp + p / pr.eta)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(lo) > 0.0 && f(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 { lo = mid } else { hi = mid }
    }
    0.5 * (lo + hi)
}

#[test]
fn closed_form_matches_derivative_root() {
    for tau_db in [-5.0, 0.0, 5.0] {
        let pr = quadratic_problem(tau_db);
        let (p, binding) = pr.closed_form_pstar().unwrap();
        assert_eq!(binding, Binding::Interior);
        let tau = pr.thresholds[0];
        let floor = tau * pr.p_n / pr.consts.l_m_tilde;
        let sat = tau * (pr.p_b * pr.consts.l_b / (pr.h_d * pr.h_d) + pr.p_n) / pr.consts.l_m_tilde;
        let root = bisect(|x| dlog_ee(&pr, x), floor * (1.0 + 1e-9), sat);
        assert!((p / root - 1.0).abs() < 1e-9, "{p} vs {root}");
    }
}

#[test]
fn closed_form_noise_and_circuit_free_limit() {
    let mut pr = quadratic_problem(0.0);
    pr.p_n = 0.0;
    pr.p_cp = 1e-300;
    let (p, _) = pr.closed_form_pstar().unwrap();
    let tau = pr.thresholds[0];
    let expect = tau * std::f64::consts::PI * pr.lambda_b * pr.p_b * pr.consts.l_b / pr.consts.l_m_tilde;
    assert!((p / expect - 1.0).abs() < 1e-9, "{p} vs {expect}");
}

#[test]
fn closed_form_increases_with_threshold() {
    let mut prev = 0.0;
    for tau_db in [-10.0, -5.0, 0.0, 5.0, 10.0] {
        let (p, _) = quadratic_problem(tau_db).closed_form_pstar().unwrap();
        assert!(p > prev);
        prev = p;
    }
}

#[test]
fn line_search_agrees_with_closed_form() {
    for tau_db in [-5.0, 0.0, 5.0] {
        let pr = quadratic_problem(tau_db);
        let (p, _) = pr.closed_form_pstar().unwrap();
        let s = pr.solve().unwrap();
        assert!((10.0 * (s.p_star / p).log10()).abs() < 0.05);
    }
}

#[test]
fn line_search_is_grid_optimal_on_defaults() {
    let cfg = Config::cat0();
    for h in [50.0, 120.0, 250.0] {
        let pr = cfg.scsd_problem_at(h, dbm_to_watts(46.0)).unwrap();
        let s = pr.solve().unwrap();
        let (lo, hi, _) = pr.feasible_interval().unwrap();
        for i in 0..1000 {
            let p = lo + (hi - lo) * i as f64 / 999.0;
            assert!(pr.avg_ee(p) <= s.ee_star * (1.0 + 1e-9), "h {h}, p {p}");
        }
    }
}

#[test]
fn cap_below_maximizer_binds() {
    let cfg = Config::from_toml(CAT0_TOML, &["protection.rho_db=-30".into(), "iot.p_min_dbm=-20".into()]).unwrap();
    let pr = cfg.scsd_problem().unwrap();
    let s = pr.solve().unwrap();
    assert_eq!(s.binding, Binding::IsrCap);
    assert_eq!(s.p_star, pr.isr_power_cap().unwrap());
}

#[test]
fn binding_cap_at_full_bs_power_is_a_fixed_point() {
    let cfg = Config::from_toml(CAT0_TOML, &["protection.rho_db=-30".into(), "iot.p_min_dbm=-20".into()]).unwrap();
    let pr = cfg.scsd_problem().unwrap();
    let p_b_max = dbm_to_watts(46.0);
    let r = optimize_bs_power(&pr, dbm_to_watts(30.0), p_b_max, 1e-6, 20).unwrap();
    assert!(r.trace.len() <= 2, "{} iterations", r.trace.len());
    assert!((r.p_b / p_b_max - 1.0).abs() < 1e-12);
}

#[test]
fn protection_cap_returns_target_probability() {
    let cfg = Config::cat0();
    for eps in [0.05, 0.2, 0.5, 0.8] {
        let mut pr = cfg.scsd_problem().unwrap();
        pr.epsilon = eps;
        let cap = pr.cap_per_bs_watt() * pr.p_b;
        assert!((pr.isr_tail(pr.rho, cap) - eps).abs() < 1e-12);
    }
    // At ε = 1/2 the odds factor disappears.
    let pr = cfg.scsd_problem().unwrap();
    let direct = pr.rho * f64::from(pr.delta_b) / f64::from(pr.u_b)
        * (pr.lambda_b / pr.lambda_u).powf(1.0 / pr.consts.delta_g);
    assert!((pr.cap_per_bs_watt() / direct - 1.0).abs() < 1e-14);
    assert!((pr.rho - db_to_linear(-6.0)).abs() < 1e-15);
}

fn two_tier(h: [f64; 2]) -> ScMdProblem<f64> {
    let cfg = Config::cat0();
    let ch = cfg.channel_params().unwrap();
    let tiers = h
        .iter()
        .map(|&hd| Tier::new(&ch, 50.0, hd, cfg.lambda_b(), cfg.steering().unwrap(), &cfg.quad()).unwrap())
        .collect();
    ScMdProblem { base: cfg.scsd_problem().unwrap(), tiers }
}

#[test]
fn two_tier_ee_matches_hand_assembly() {
    let m = two_tier([50.0, 150.0]);
    let b = &m.base;
    let p = [0.03, 0.07];
    for l in 0..2 {
        let other = 1 - l;
        let i0 = b.p_b * b.consts.l_b + p[other] * m.tiers[other].l_m_tilde;
        let pl = std::f64::consts::PI * b.lambda_b;
        let h = m.tiers[l].h_d;
        let mut rate = 0.0;
        let mut prev = 0.0;
        for &tau in &b.thresholds {
            let mu = (1.0 + tau).log2() - prev;
            prev = (1.0 + tau).log2();
            let x = (p[l] * m.tiers[l].l_m_tilde / tau - b.p_n) / i0;
            let cov = if x <= 0.0 {
                0.0
            } else if x >= h.powf(-2.0 / b.consts.delta_a) {
                1.0
            } else {
                (pl * h * h - pl * x.powf(-b.consts.delta_a)).exp().min(1.0)
            };
            rate += mu * cov;
        }
        let ee = b.beta_iot * rate / (b.p_cp + p[l] / b.eta);
        assert!((m.ee_tier(l, &p) / ee - 1.0).abs() < 1e-12);
    }
}

#[test]
fn symmetric_tiers_get_equal_power() {
    let m = two_tier([100.0, 100.0]);
    let s = solve_max_min(&m, 1e-9, 50).unwrap();
    assert!((s.powers[0] / s.powers[1] - 1.0).abs() < 1e-3, "{:?}", s.powers);
    assert!((s.tier_ee[0] / s.tier_ee[1] - 1.0).abs() < 1e-3);
}

#[test]
fn sum_objective_dominates_at_its_optimum() {
    for h in [[50.0, 150.0], [50.0, 250.0], [100.0, 200.0]] {
        let m = two_tier(h);
        let mm = solve_max_min(&m, 1e-9, 50).unwrap();
        let se = solve_sum_ee(&m, 1e-9, 50).unwrap();
        let at_mm: f64 = mm.tier_ee.iter().sum();
        assert!(se.value >= at_mm * (1.0 - 1e-9), "{} < {at_mm}", se.value);
        assert!(mm.value <= mm.tier_ee.iter().cloned().fold(f64::INFINITY, f64::min) * (1.0 + 1e-12));
    }
}
