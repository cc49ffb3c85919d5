//! Reproducible checks of the analytic results against simulation and brute force,
//! with pinned tolerances. Each check returns a pass/fail outcome with a one-line detail.

use std::fmt;

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist, Normal};

use crate::config::Config;
use crate::coverage::{gil_pelaez_cdf, median_sir_db, ue_coverage_no_iot, ue_coverage_proposed};
use crate::error::Result;
use crate::geometry::{stream_rng, Stream};
use crate::lifetime::lifetime_campaign;
use crate::montecarlo::{
    estimate_coverage, isr_tail_mc, realize, run_campaign, scsd_coverage_mc, CampaignSummary, CoverageMcSpec,
};
use crate::quadrature::QuadratureCfg;
use crate::report::{campaign_cdf_table, campaign_summary_table};
use crate::resources::{scheduler_oracle, shares, Densities, ProtocolKind, ResourceShares};
use crate::scmd::{solve_max_min, solve_sum_ee, ScMdProblem};
use crate::scsd::{optimize_bs_power, Binding, ScSdProblem};
use crate::units::{db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] criterion {}: {} | {}", self.id, self.title, self.detail)
    }
}

/// Simulation effort per check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub coverage_trials: u64,
    pub scsd_samples: u64,
    pub isr_trials: u64,
    pub campaign_trials: u64,
    pub sweep_trials: u64,
    pub lifetime_trials: u64,
    pub topologies: u64,
    pub frames: usize,
    pub oracle_window_factor: f64,
    pub random_instances: usize,
}

impl Budget {
    /// Effort at which the tolerances are meant to be judged.
    pub fn full() -> Self {
        Self {
            coverage_trials: 2000,
            scsd_samples: 200_000,
            isr_trials: 20_000,
            campaign_trials: 60,
            sweep_trials: 30,
            lifetime_trials: 60,
            topologies: 20,
            frames: 400,
            oracle_window_factor: 15.0,
            random_instances: 200,
        }
    }

    /// Smoke-test effort; statistical checks may fail at this size.
    pub fn quick() -> Self {
        Self {
            coverage_trials: 100,
            scsd_samples: 20_000,
            isr_trials: 2000,
            campaign_trials: 6,
            sweep_trials: 4,
            lifetime_trials: 6,
            topologies: 2,
            frames: 100,
            oracle_window_factor: 6.0,
            random_instances: 20,
        }
    }
}

fn outcome(id: u8, title: &'static str, result: Result<(bool, String)>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome { id, title, passed, detail },
        Err(e) => CheckOutcome { id, title, passed: false, detail: format!("error: {e}") },
    }
}

fn coverage_mc_spec(cfg: &Config, ratio: f64, trials: u64, seed: u64) -> Result<CoverageMcSpec> {
    Ok(CoverageMcSpec {
        channel: cfg.channel_params()?,
        lambda_b: cfg.lambda_b(),
        lambda_d: ratio * cfg.lambda_b(),
        p_b: dbm_to_watts(cfg.radio.bs_power_dbm),
        p_m: dbm_to_watts(cfg.coverage.iot_power_dbm),
        window_factor: cfg.network.window_factor,
        probes_per_trial: cfg.coverage.probes_per_trial,
        trials,
        seed,
        batches: cfg.montecarlo.batches,
    })
}

pub const C1: &str = "downlink coverage with drone interference vs Monte Carlo";

/// Analytic vs simulated UE downlink CCDF at drone-to-BS ratios 1 and 5, plus median-SIR shifts.
pub fn check_downlink_coverage(cfg: &Config, b: &Budget) -> CheckOutcome {
    outcome(1, C1, (|| {
        let quad = cfg.quad();
        let seed = cfg.scenario.seed;
        let base = estimate_coverage(&coverage_mc_spec(cfg, 0.0, b.coverage_trials, seed)?)?;
        let q0 = cfg.coverage_query(0.0, 1.0)?;
        let med0 = median_sir_db(&q0, false, -20.0, 40.0, 1e-3, &quad)?;
        let mut ok = true;
        let mut parts = Vec::new();
        for (ratio, lo, hi) in [(1.0, 0.0, 0.6), (5.0, 1.2, 2.2)] {
            let est = estimate_coverage(&coverage_mc_spec(cfg, ratio, b.coverage_trials, seed)?)?;
            let mut worst: f64 = 0.0;
            for &db in &cfg.coverage.tau_db {
                let q = cfg.coverage_query(db, ratio)?;
                let a = ue_coverage_proposed(&q, &quad)?;
                worst = worst.max((a - est.ccdf(q.tau).0).abs());
            }
            let q = cfg.coverage_query(0.0, ratio)?;
            let shift = med0 - median_sir_db(&q, true, -20.0, 40.0, 1e-3, &quad)?;
            let shift_mc = base.median_db() - est.median_db();
            let pass = worst <= 0.02 && (lo..=hi).contains(&shift) && (lo..=hi).contains(&shift_mc);
            ok &= pass;
            parts.push(format!(
                "ratio {ratio}: max gap {:.2} pp (<= 2), median shift {shift:.2} dB analytic / {shift_mc:.2} dB MC (in [{lo}, {hi}])",
                100.0 * worst
            ));
        }
        // The no-IoT curve is checked as well since every shift is measured from it.
        let mut worst0: f64 = 0.0;
        for &db in &cfg.coverage.tau_db {
            let q = cfg.coverage_query(db, 1.0)?;
            worst0 = worst0.max((ue_coverage_no_iot(&q, &quad)? - base.ccdf(q.tau).0).abs());
        }
        ok &= worst0 <= 0.02;
        parts.push(format!("no IoT: max gap {:.2} pp", 100.0 * worst0));
        Ok((ok, parts.join("; ")))
    })())
}

pub const C2: &str = "single-cell IoT coverage vs Monte Carlo, clamp rate";

/// Single-cell IoT coverage at 50 m and 120 m against a direct simulation, and the share of
/// evaluations that needed clamping over a dense power/threshold grid.
pub fn check_iot_coverage(cfg: &Config, b: &Budget) -> CheckOutcome {
    outcome(2, C2, (|| {
        let p_b = dbm_to_watts(cfg.radio.bs_power_dbm);
        let mut worst: f64 = 0.0;
        let (mut evals, mut clamped, mut saturated) = (0_usize, 0_usize, 0_usize);
        for (i, h) in [50.0, 120.0].into_iter().enumerate() {
            let pr = cfg.scsd_problem_at(h, p_b)?;
            let p_star = pr.solve()?.p_star;
            for p in [pr.p_min, dbm_to_watts(10.0), p_star, pr.p_max] {
                for (k, &tau) in pr.thresholds.iter().enumerate() {
                    let seed = cfg.scenario.seed ^ ((i as u64) << 32 | (k as u64) << 16);
                    let mc = scsd_coverage_mc(&pr, p, tau, b.scsd_samples, seed)?;
                    worst = worst.max((pr.iot_coverage(p, tau) - mc).abs());
                }
            }
            for j in 0..=40 {
                let p = pr.p_min * (pr.p_max / pr.p_min).powf(j as f64 / 40.0);
                for &tau in &pr.thresholds {
                    let e = pr.iot_coverage_detail(p, tau);
                    evals += 1;
                    clamped += usize::from(e.clamped);
                    saturated += usize::from(e.saturated);
                }
            }
        }
        let rate = clamped as f64 / evals as f64;
        Ok((
            worst <= 0.05 && rate < 0.01,
            format!(
                "max gap {:.2} pp (<= 5) at h in {{50, 120}} m; clamp rate {:.2}% (< 1%), support saturation {:.1}% of {evals}",
                100.0 * worst,
                100.0 * rate,
                100.0 * saturated as f64 / evals as f64
            ),
        ))
    })())
}

/// Random single-cell problem around `cfg` with uniformly drawn height, BS power,
/// protection level, cluster size and threshold subset.
fn random_problem<R: Rng>(cfg: &Config, rng: &mut R, single_threshold: bool) -> Result<ScSdProblem<f64>> {
    let h = rng.random_range(30.0..300.0);
    let p_b = dbm_to_watts(rng.random_range(30.0..46.0));
    let mut pr = cfg.scsd_problem_at(h, p_b)?;
    pr.rho = db_to_linear(rng.random_range(-12.0..0.0));
    pr.epsilon = rng.random_range(0.1..0.9);
    pr.beta_iot = cfg.radio.bandwidth_hz * cfg.radio.t2 / rng.random_range(5.0..60.0);
    if single_threshold {
        pr.thresholds = vec![db_to_linear(rng.random_range(-5.0..10.0))];
    } else {
        let all: Vec<f64> = pr.thresholds.clone();
        let k = rng.random_range(1..=all.len());
        let start = rng.random_range(0..=all.len() - k);
        pr.thresholds = all[start..start + k].to_vec();
    }
    Ok(pr)
}

pub const C3: &str = "closed-form optimal power vs golden-section search";

/// The one-threshold, free-space closed form against the line search on random feasible
/// instances.
pub fn check_closed_form(cfg: &Config) -> CheckOutcome {
    outcome(3, C3, (|| {
        let mut c = cfg.clone();
        c.channel.alpha_a = 2.0;
        let mut rng = stream_rng(cfg.scenario.seed, 3, Stream::Auxiliary);
        let target = 100;
        let (mut tested, mut drawn, mut interior) = (0, 0, 0);
        let mut worst: f64 = 0.0;
        while tested < target && drawn < 50 * target {
            drawn += 1;
            let pr = random_problem(&c, &mut rng, true)?;
            let Ok(sol) = pr.solve() else { continue };
            if !(sol.ee_star > 0.0) {
                continue;
            }
            let (p_cf, binding) = pr.closed_form_pstar()?;
            worst = worst.max(linear_to_db(p_cf / sol.p_star).abs());
            interior += usize::from(binding == Binding::Interior);
            tested += 1;
        }
        Ok((
            tested == target && worst <= 0.05,
            format!(
                "{tested} feasible instances ({drawn} drawn, {interior} interior optima), max |closed form - search| = {worst:.4} dB (<= 0.05)"
            ),
        ))
    })())
}

/// Average EE from simulated coverage, common random numbers across powers.
fn ee_mc(pr: &ScSdProblem<f64>, p: f64, samples: u64, seed: u64) -> Result<f64> {
    let mu = pr.rate_weights();
    let mut s = 0.0;
    for (k, (&tau, &m)) in pr.thresholds.iter().zip(&mu).enumerate() {
        s += m * scsd_coverage_mc(pr, p, tau, samples, seed.wrapping_add(k as u64))?;
    }
    Ok(pr.beta_iot * s / pr.consumption(p))
}

pub const C4: &str = "EE gain of the optimal power over maximum power";

pub fn check_ee_gain(cfg: &Config, b: &Budget) -> CheckOutcome {
    outcome(4, C4, (|| {
        let p_b = dbm_to_watts(cfg.radio.bs_power_dbm);
        let mut ok = true;
        let mut parts = Vec::new();
        for (h, lo, hi) in [(50.0, 3.6, 5.4), (120.0, 2.6, 4.0)] {
            let pr = cfg.scsd_problem_at(h, p_b)?;
            let sol = pr.solve()?;
            let analytic = sol.ee_star / pr.avg_ee(pr.p_max);
            let seed = cfg.scenario.seed.wrapping_add(4);
            let mc = ee_mc(&pr, sol.p_star, b.scsd_samples, seed)? / ee_mc(&pr, pr.p_max, b.scsd_samples, seed)?;
            let pass = (lo..=hi).contains(&analytic) && (lo..=hi).contains(&mc);
            ok &= pass;
            parts.push(format!(
                "h {h} m: P* {:.2} dBm ({}), gain {analytic:.2} analytic / {mc:.2} MC (in [{lo}, {hi}])",
                watts_to_dbm(sol.p_star),
                sol.binding.as_str()
            ));
        }
        Ok((ok, parts.join("; ")))
    })())
}

pub const C5: &str = "UE protection cap calibration";

pub fn check_isr_cap(cfg: &Config, b: &Budget) -> CheckOutcome {
    outcome(5, C5, (|| {
        let ch = cfg.channel_params()?;
        let mut ok = true;
        let mut parts = Vec::new();
        for (i, eps) in [cfg.protection.epsilon, 0.2].into_iter().enumerate() {
            let mut pr = cfg.scsd_problem()?;
            pr.epsilon = eps;
            // The cap is evaluated without the lower power bound so every ε is testable.
            let cap = pr.cap_per_bs_watt() * pr.p_b;
            let seed = cfg.scenario.seed.wrapping_add(50 + i as u64);
            let p = isr_tail_mc(&ch, pr.lambda_b, pr.lambda_u, pr.p_b, cap, pr.rho, b.isr_trials, seed)?;
            ok &= (p - eps).abs() <= 0.02;
            parts.push(format!("eps {eps}: cap {:.2} dBm, MC tail {p:.4} (+-0.02)", watts_to_dbm(cap)));
        }
        Ok((ok, parts.join("; ")))
    })())
}

pub const C6: &str = "alternating BS/IoT power optimization";

pub fn check_bs_power(cfg: &Config, nbiot: &Config) -> CheckOutcome {
    outcome(6, C6, (|| {
        let mut monotone = true;
        let mut runs = 0;
        for c in [cfg, nbiot] {
            let p_b_max = dbm_to_watts(c.bs_power.p_b_max_dbm);
            for h in [50.0, 120.0, 200.0] {
                for p_b_min_dbm in [c.bs_power.p_b_min_dbm, c.bs_power.p_b_min_dbm - 10.0] {
                    let pr = c.scsd_problem_at(h, p_b_max)?;
                    let zeta = c.bs_power.zeta;
                    let r = optimize_bs_power(&pr, dbm_to_watts(p_b_min_dbm), p_b_max, zeta, c.bs_power.max_iterations)?;
                    runs += 1;
                    monotone &= r.trace.windows(2).all(|w| w[1].ee >= w[0].ee * (1.0 - 1e-12));
                }
            }
        }
        let pr = cfg.scsd_problem_at(cfg.iot.drone_height_m, dbm_to_watts(cfg.bs_power.p_b_max_dbm))?;
        let r = optimize_bs_power(
            &pr,
            dbm_to_watts(cfg.bs_power.p_b_min_dbm),
            dbm_to_watts(cfg.bs_power.p_b_max_dbm),
            cfg.bs_power.zeta,
            cfg.bs_power.max_iterations,
        )?;
        let gain = r.ee / r.trace[0].ee;
        Ok((
            monotone && gain >= 1.25,
            format!(
                "{runs} instances, traces monotone: {monotone}; reference gain {gain:.3} (>= 1.25) at P_B {:.1} dBm, P_M {:.2} dBm after {} iterations",
                watts_to_dbm(r.p_b),
                watts_to_dbm(r.p_m),
                r.trace.len()
            ),
        ))
    })())
}

/// Brute-force max-min over a log grid on the box plus the joint-cap line. Returns the best
/// value and the largest change of the objective across one grid step at the best point.
fn brute_max_min(pr: &ScMdProblem<f64>, n: usize) -> Result<(f64, f64)> {
    let b = &pr.base;
    let cap = pr.joint_cap()?;
    let grid: Vec<f64> = (0..n).map(|i| b.p_min * (b.p_max / b.p_min).powf(i as f64 / (n - 1) as f64)).collect();
    let f = |p: &[f64]| pr.tier_ee(p).into_iter().fold(f64::INFINITY, f64::min);
    let mut vals = vec![f64::NEG_INFINITY; n * n];
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for i in 0..n {
        for j in 0..n {
            let p = [grid[i], grid[j]];
            if pr.is_feasible(&p, cap) {
                let v = f(&p);
                vals[i * n + j] = v;
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
    }
    let (_, bi, bj) = best;
    let mut step: f64 = 0.0;
    for (di, dj) in [(-1_i64, 0_i64), (1, 0), (0, -1), (0, 1), (-1, -1), (1, 1), (-1, 1), (1, -1)] {
        let (i, j) = (bi as i64 + di, bj as i64 + dj);
        if (0..n as i64).contains(&i) && (0..n as i64).contains(&j) {
            let v = vals[i as usize * n + j as usize];
            if v.is_finite() {
                step = step.max((v - best.0).abs());
            }
        }
    }
    let mut value = best.0;
    for &p1 in &grid {
        let p2 = cap - p1;
        let p = [p1, p2];
        if pr.is_feasible(&p, cap) {
            value = value.max(f(&p));
        }
    }
    Ok((value, step))
}

pub const C7: &str = "multi-drone max-min and sum-EE allocation";

pub fn check_multi(cfg: &Config) -> CheckOutcome {
    outcome(7, C7, (|| {
        let ladder = cfg.scmd_problem()?;
        let tol = cfg.multi.tolerance;
        let iters = cfg.multi.max_iterations;
        let mut ok = true;
        let mut parts = Vec::new();
        for pair in [[0, 1], [0, 2], [1, 4]] {
            let pr = ScMdProblem { base: ladder.base.clone(), tiers: pair.iter().map(|&i| ladder.tiers[i]).collect() };
            let sol = solve_max_min(&pr, tol, iters)?;
            let (brute, step) = brute_max_min(&pr, 241)?;
            let pass = (sol.value - brute).abs() <= step + 1e-9 * brute.abs();
            ok &= pass;
            parts.push(format!(
                "N=2 h {}/{} m: Dinkelbach {:.4e} vs grid {brute:.4e} (step {step:.2e})",
                pr.tiers[0].h_d, pr.tiers[1].h_d, sol.value
            ));
        }
        let argmin = |v: &[f64]| (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0);
        let argmax = |v: &[f64]| (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0);
        let heights: Vec<f64> = ladder.tiers.iter().map(|t| t.h_d).collect();
        let highest = argmax(&heights);
        let lowest = argmin(&heights);
        let mm = solve_max_min(&ladder, tol, iters)?;
        let se = solve_sum_ee(&ladder, tol, iters)?;
        let ladder_ok = argmin(&mm.tier_ee) == highest && argmax(&se.tier_ee) == lowest;
        ok &= ladder_ok;
        parts.push(format!(
            "ladder {heights:?} m: max-min weakest tier {} m, sum-EE strongest tier {} m",
            heights[argmin(&mm.tier_ee)],
            heights[argmax(&se.tier_ee)]
        ));
        Ok((ok, parts.join("; ")))
    })())
}

fn campaign(cfg: &Config, trials: u64) -> Result<CampaignSummary> {
    let mut spec = cfg.campaign_spec()?;
    spec.trials = trials;
    run_campaign(&spec)
}

fn scheme<'a>(s: &'a CampaignSummary, name: &str) -> Result<&'a crate::montecarlo::SchemeSummary> {
    s.get(name).ok_or_else(|| crate::Error::Config(format!("protocol.schemes must include {name}")))
}

pub const C8: &str = "protocol comparison of UE rates";

pub fn check_protocols(cfg: &Config, b: &Budget) -> CheckOutcome {
    outcome(8, C8, (|| {
        let s = campaign(cfg, b.campaign_trials)?;
        let bench = scheme(&s, "benchmark")?;
        let prop = scheme(&s, "proposed")?;
        let share = scheme(&s, "sharing")?;
        let terr = scheme(&s, "terrestrial")?;
        let ul = prop.ue_ul_rate.mean / share.ue_ul_rate.mean;
        let dl_loss = 1.0 - prop.ue_dl_rate.mean / bench.ue_dl_rate.mean;
        let terr_gap = 1.0 - terr.ue_dl_rate.mean / prop.ue_dl_rate.mean;
        let pass = ul >= 2.0 && dl_loss <= 0.05 && (0.05..=0.15).contains(&terr_gap);
        Ok((
            pass,
            format!(
                "{} devices/cluster, {} trials: UL proposed/sharing {ul:.2} (>= 2); DL loss vs benchmark {:.1}% (<= 5); terrestrial DL below proposed by {:.1}% (5 to 15)",
                cfg.network.devices_per_cluster,
                b.campaign_trials,
                100.0 * dl_loss,
                100.0 * terr_gap
            ),
        ))
    })())
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

pub const C9: &str = "EE ordering and trends in cluster size and altitude";

pub fn check_ee_trends(cfg: &Config, b: &Budget) -> CheckOutcome {
    outcome(9, C9, (|| {
        let s = campaign(cfg, b.campaign_trials)?;
        let ratio = scheme(&s, "proposed")?.iot_ee.median() / scheme(&s, "terrestrial")?.iot_ee.median();
        let mut ok = ratio >= 2.0;
        let mut parts = vec![format!("median EE aerial/terrestrial {ratio:.2} (>= 2)")];

        let sizes = [10.0, 30.0, 50.0];
        let mut by_size: Vec<CampaignSummary> = Vec::new();
        for m in sizes {
            let mut c = cfg.clone();
            c.network.devices_per_cluster = m;
            c.protocol.schemes.retain(|n| n != "benchmark");
            by_size.push(campaign(&c, b.sweep_trials)?);
        }
        for run in &by_size[0].schemes {
            let name = run.name();
            let med: Vec<f64> =
                by_size.iter().map(|s| scheme(s, name).map(|r| r.iot_ee.median())).collect::<Result<_>>()?;
            let dec = strictly_decreasing(&med);
            ok &= dec;
            parts.push(format!("{name} vs size {sizes:?}: decreasing {dec}"));
        }

        let heights = [50.0, 100.0, 150.0, 200.0, 300.0];
        let mut med = Vec::new();
        for h in heights {
            let mut c = cfg.clone();
            c.iot.drone_height_m = h;
            c.network.devices_per_cluster = 10.0;
            c.protocol.schemes = vec!["proposed".into()];
            med.push(scheme(&campaign(&c, b.sweep_trials)?, "proposed")?.iot_ee.median());
        }
        let dec = strictly_decreasing(&med);
        ok &= dec;
        let shown: Vec<String> = med.iter().map(|v| format!("{v:.3e}")).collect();
        parts.push(format!("proposed vs altitude {heights:?} m: [{}] decreasing {dec}", shown.join(", ")));
        Ok((ok, parts.join("; ")))
    })())
}

pub const C10: &str = "average resource shares vs frame-level scheduler";

/// Scheduler shares `[ue_ul, ue_dl, iot]` per protocol pooled over topologies, and the
/// realized densities averaged over the same topologies.
fn pooled_oracle(
    c: &Config,
    kinds: &[ProtocolKind<f64>],
    b: &Budget,
    seed: u64,
) -> Result<(Vec<[f64; 3]>, Densities<f64>)> {
    let net = c.network_spec()?;
    let per_topo = (0..b.topologies)
        .into_par_iter()
        .map(|t| -> Result<(Vec<[f64; 5]>, [f64; 5])> {
            let real = realize(&net, seed, t)?;
            let mut out = Vec::new();
            for (k, kind) in kinds.iter().enumerate() {
                let pc = c.protocol_config(*kind)?;
                let mut rng = stream_rng(seed, t * 8 + k as u64, Stream::Auxiliary);
                let e = scheduler_oracle(&real, &pc, b.frames, &mut rng)?;
                let (nu, ni) = (e.ue_samples as f64, e.iot_samples as f64);
                out.push([e.shares.ue_ul * nu, e.shares.ue_dl * nu, e.shares.iot * ni, nu, ni]);
            }
            let area = real.window.area();
            let n_cl = real.clusters.parents.len() as f64;
            let realized = [
                real.bs.len() as f64 / area,
                real.ue.len() as f64 / area,
                n_cl / area,
                real.n_devices() as f64,
                n_cl,
            ];
            Ok((out, realized))
        })
        .collect::<Result<Vec<_>>>()?;
    let emp = (0..kinds.len())
        .map(|k| {
            let sum = |j: usize| per_topo.iter().map(|(o, _)| o[k][j]).sum::<f64>();
            [sum(0) / sum(3), sum(1) / sum(3), sum(2) / sum(4)]
        })
        .collect();
    let n = per_topo.len() as f64;
    let avg = |j: usize| per_topo.iter().map(|(_, r)| r[j]).sum::<f64>() / n;
    let total = |j: usize| per_topo.iter().map(|(_, r)| r[j]).sum::<f64>();
    let realized = Densities {
        lambda_b: avg(0),
        lambda_u: avg(1),
        lambda_d: avg(2),
        lambda_cl: avg(2),
        lambda_m: total(3) / total(4).max(1.0),
    };
    Ok((emp, realized))
}

fn rel_errs(f: &ResourceShares<f64>, emp: &[f64; 3]) -> [f64; 3] {
    let r = |a: f64, e: f64| (a / e - 1.0).abs();
    [r(f.ue_ul, emp[0]), r(f.ue_dl, emp[1]), r(f.iot, emp[2])]
}

/// Pooled scheduler shares over independent topologies against the density formulas.
pub fn check_resources(cfg: &Config, b: &Budget) -> CheckOutcome {
    outcome(10, C10, (|| {
        let mut c = cfg.clone();
        c.network.window_factor = b.oracle_window_factor;
        let kinds = [ProtocolKind::Proposed, c.protocol_kind("sharing")?, c.protocol_kind("orthogonal")?];
        let seed = cfg.scenario.seed.wrapping_add(10);
        let (emp, realized) = pooled_oracle(&c, &kinds, b, seed)?;
        let d = c.densities();
        let mut ok = true;
        let (mut parts, mut plug) = (Vec::new(), 0.0_f64);
        for (kind, e) in kinds.iter().zip(&emp) {
            let pc = c.protocol_config(*kind)?;
            let r = rel_errs(&shares(&d, &pc)?, e);
            ok &= r.iter().all(|&x| x <= 0.03);
            plug = rel_errs(&shares(&realized, &pc)?, e).into_iter().fold(plug, f64::max);
            parts.push(format!(
                "{} ul/dl/iot {:.1}/{:.1}/{:.1}%",
                kind.name(),
                100.0 * r[0],
                100.0 * r[1],
                100.0 * r[2]
            ));
        }
        // Same comparison with devices spread over several cells instead of tight clusters.
        let mut spread = c.clone();
        spread.network.cluster_radius_m = 4.0 / spread.lambda_b().sqrt();
        let (emp_s, _) = pooled_oracle(&spread, &kinds[1..], b, seed)?;
        let mut spread_worst = 0.0_f64;
        for (kind, e) in kinds[1..].iter().zip(&emp_s) {
            let f = shares(&spread.densities(), &spread.protocol_config(*kind)?)?;
            spread_worst = rel_errs(&f, e).into_iter().fold(spread_worst, f64::max);
        }
        Ok((
            ok,
            format!(
                "{} topologies, window factor {}: {} (each <= 3%); realized-density plug-in worst {:.1}%; with spread-out clusters worst {:.1}%",
                b.topologies,
                b.oracle_window_factor,
                parts.join(", "),
                100.0 * plug,
                100.0 * spread_worst
            ),
        ))
    })())
}

pub const C11: &str = "device battery lifetime";

pub fn check_lifetime(nbiot: &Config, b: &Budget) -> CheckOutcome {
    outcome(11, C11, (|| {
        let s = campaign(nbiot, b.lifetime_trials)?;
        let params = nbiot.lifetime_params();
        let th: Vec<f64> = nbiot.iot.thresholds_db.iter().map(|&t| db_to_linear(t)).collect();
        let mut dists = Vec::new();
        for run in s.schemes.iter().filter(|r| r.run.scheme.has_iot()) {
            let d = lifetime_campaign(&run.devices, &params, nbiot.iot.circuit_power_w, nbiot.iot.pa_efficiency, &th)?;
            dists.push((run.name(), run.run.scheme.uses_aggregators(), d));
        }
        let get = |n: &str| {
            dists.iter().find(|(m, ..)| *m == n).map(|(.., d)| d).ok_or_else(|| {
                crate::Error::Config(format!("protocol.schemes must include {n}"))
            })
        };
        let gap = get("proposed")?.median() - get("sharing")?.median();
        let agg_max = dists.iter().filter(|x| x.1).map(|x| x.2.iqr()).fold(f64::NEG_INFINITY, f64::max);
        let other_min = dists.iter().filter(|x| !x.1).map(|x| x.2.iqr()).fold(f64::INFINITY, f64::min);
        let censor_max = dists.iter().map(|x| x.2.censored_fraction()).fold(0.0, f64::max);
        let pass = gap >= 2.0 && agg_max < other_min && censor_max < 0.02;
        let rows: Vec<String> = dists
            .iter()
            .map(|(n, _, d)| {
                format!("{n} median {:.2} y IQR {:.2} censored {:.1}%", d.median(), d.iqr(), 100.0 * d.censored_fraction())
            })
            .collect();
        Ok((
            pass,
            format!(
                "median gap proposed - sharing {gap:.2} y (>= 2); largest aggregator IQR {agg_max:.2} vs smallest other {other_min:.2} (must be smaller); max censored {:.1}% (< 2); {}",
                100.0 * censor_max,
                rows.join(", ")
            ),
        ))
    })())
}

fn gil_pelaez_errors(quad: &QuadratureCfg<f64>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 1..=5_i32 {
        let g = GammaDist::new(f64::from(k), 1.0).map_err(|e| crate::Error::Config(e.to_string()))?;
        for x in [0.5, std::f64::consts::LN_2, 1.0, 3.0, 6.0] {
            let cf = |t: f64| Ok(Complex::new(1.0, -t).powi(-k));
            let f = gil_pelaez_cdf(cf, x, 1.0, quad)?;
            worst = worst.max((f - g.cdf(x)).abs());
        }
    }
    let (mu, sigma) = (1.0, 2.0);
    let n = Normal::new(mu, sigma).map_err(|e| crate::Error::Config(e.to_string()))?;
    for x in [-3.0, -0.5, 1.0, 2.5, 6.0] {
        let cf = |t: f64| Ok(Complex::new(-0.5 * sigma * sigma * t * t, mu * t).exp());
        let f = gil_pelaez_cdf(cf, x, 0.5, quad)?;
        worst = worst.max((f - n.cdf(x)).abs());
    }
    Ok(worst)
}

/// Whether `v` rises then falls: no increase after the first decrease, with `tol` slack.
pub fn is_unimodal(v: &[f64], tol: f64) -> bool {
    let mut falling = false;
    for w in v.windows(2) {
        let d = w[1] - w[0];
        if d < -tol {
            falling = true;
        } else if d > tol && falling {
            return false;
        }
    }
    true
}

fn determinism_bytes(cfg: &Config) -> Result<String> {
    let mut c = cfg.clone();
    c.montecarlo.measured_ues = 40;
    c.montecarlo.measured_devices = 40;
    c.montecarlo.batches = 2;
    let s = campaign(&c, 4)?;
    let cov = estimate_coverage(&CoverageMcSpec {
        probes_per_trial: 10,
        batches: 2,
        ..coverage_mc_spec(&c, 5.0, 8, c.scenario.seed)?
    })?;
    let mut out = campaign_summary_table(&s).to_csv_string(&[]);
    out.push_str(&campaign_cdf_table(&s).to_csv_string(&[]));
    for v in &cov.sir.sorted {
        out.push_str(&format!("{v:e}\n"));
    }
    Ok(out)
}

pub const C12: &str = "inversion accuracy, EE unimodality, determinism";

pub fn check_properties(cfg: &Config, b: &Budget) -> CheckOutcome {
    outcome(12, C12, (|| {
        let quad = cfg.quad();
        let gp = gil_pelaez_errors(&quad)?;

        let mut rng = stream_rng(cfg.scenario.seed, 12, Stream::Auxiliary);
        let (mut tested, mut unimodal, mut multi_threshold_only, mut solver_ok) = (0, 0, true, 0);
        while tested < b.random_instances {
            let pr = random_problem(cfg, &mut rng, false)?;
            let Ok((lo, hi, _)) = pr.feasible_interval() else { continue };
            let v: Vec<f64> = (0..=400).map(|i| pr.avg_ee(lo * (hi / lo).powf(f64::from(i) / 400.0))).collect();
            let top = v.iter().copied().fold(0.0, f64::max);
            tested += 1;
            let uni = is_unimodal(&v, 1e-9 * top);
            unimodal += usize::from(uni);
            multi_threshold_only &= uni || pr.thresholds.len() > 1;
            solver_ok += usize::from(pr.solve()?.ee_star >= top * (1.0 - 1e-9));
        }

        let pool = |n: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))
        };
        let one = pool(1)?.install(|| determinism_bytes(cfg))?;
        let four = pool(4)?.install(|| determinism_bytes(cfg))?;
        let again = pool(4)?.install(|| determinism_bytes(cfg))?;
        let same = one == four && four == again;
        Ok((
            gp <= 1e-6 && unimodal == tested && same,
            format!(
                "inversion max error {gp:.2e} (<= 1e-6); unimodal EE in {unimodal}/{tested} problems (exceptions only with several thresholds: {multi_threshold_only}; line search reaches the grid maximum in {solver_ok}); outputs byte-identical across 1/4 threads and reruns: {same} ({} bytes)",
                one.len()
            ),
        ))
    })())
}

/// Every check in order. `cfg` is the CAT-0 scenario, `nbiot` the lifetime scenario.
pub fn run_all(cfg: &Config, nbiot: &Config, b: &Budget) -> Vec<CheckOutcome> {
    vec![
        check_downlink_coverage(cfg, b),
        check_iot_coverage(cfg, b),
        check_closed_form(cfg),
        check_ee_gain(cfg, b),
        check_isr_cap(cfg, b),
        check_bs_power(cfg, nbiot),
        check_multi(cfg),
        check_protocols(cfg, b),
        check_ee_trends(cfg, b),
        check_resources(cfg, b),
        check_lifetime(nbiot, b),
        check_properties(cfg, b),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unimodality_detector() {
        assert!(is_unimodal(&[1.0, 2.0, 3.0, 2.0, 1.0], 0.0));
        assert!(is_unimodal(&[3.0, 2.0, 1.0], 0.0));
        assert!(is_unimodal(&[1.0, 1.0, 1.0], 0.0));
        assert!(!is_unimodal(&[1.0, 3.0, 2.0, 4.0], 0.0));
        assert!(is_unimodal(&[1.0, 3.0, 2.0, 2.0 + 1e-12], 1e-9));
    }

    #[test]
    fn outcome_line_format() {
        let o = CheckOutcome { id: 3, title: C3, passed: true, detail: "x".into() };
        assert_eq!(o.to_string(), format!("[PASS] criterion 3: {C3} | x"));
        let e = outcome(4, C4, Err(crate::Error::Config("boom".into())));
        assert!(!e.passed && e.detail.contains("boom"));
    }

    #[test]
    fn multi_check_passes() {
        let o = check_multi(&Config::cat0());
        assert!(o.passed, "{o}");
    }
}
