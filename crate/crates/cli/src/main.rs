use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use uavnet::config::{Config, CAT0_TOML, NBIOT_TOML};
use uavnet::coverage::{ue_coverage_no_iot, ue_coverage_proposed};
use uavnet::geometry::{stream_rng, Stream};
use uavnet::lifetime::lifetime_campaign;
use uavnet::montecarlo::{estimate_coverage, realize, run_campaign, CoverageMcSpec};
use uavnet::report::{campaign_cdf_table, campaign_summary_table, lifetime_table, num, realization_table, Table};
use uavnet::resources::{scheduler_oracle, shares};
use uavnet::scmd::{solve_max_min, solve_sum_ee};
use uavnet::scsd::optimize_bs_power;
use uavnet::units::{db_to_linear, dbm_to_watts, watts_to_dbm};
use uavnet::validation::{run_all, Budget};

/// Coverage, energy efficiency, protocol comparison and lifetime for drone-aggregated IoT
/// sharing spectrum with a cellular network.
#[derive(Parser, Debug)]
#[command(name = "uavnet", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Config file, a run manifest, or a built-in scenario (`cat0`, `nbiot`).
    #[arg(long, global = true, default_value = "cat0")]
    config: String,
    /// Override one key, e.g. `--set network.devices_per_cluster=10`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed (overrides `scenario.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials (overrides `scenario.trials`).
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// UE downlink coverage with and without drone-aggregated IoT, analytic and simulated.
    Coverage {
        /// Skip the Monte Carlo columns.
        #[arg(long)]
        analytic_only: bool,
    },
    /// Optimal IoT transmit power and energy efficiency.
    Ee {
        /// Allocate powers across the configured altitude tiers.
        #[arg(long)]
        multi: bool,
        /// Jointly lower the BS power.
        #[arg(long)]
        optimize_bs: bool,
        /// Points in the EE-vs-power sweep.
        #[arg(long, default_value_t = 101)]
        sweep: usize,
    },
    /// Network simulation of every configured protocol.
    Compare {
        /// Also write the first trial's topology.
        #[arg(long)]
        dump_realization: bool,
    },
    /// Battery lifetime distribution per protocol.
    Lifetime,
    /// Analytic-vs-simulation cross-checks with a pass/fail table.
    Validate {
        /// Small budget for smoke runs; statistical checks may fail.
        #[arg(long)]
        quick: bool,
        /// Scenario used for the lifetime check.
        #[arg(long, default_value = "nbiot")]
        lifetime_config: String,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Coverage { .. } => "coverage",
            Self::Ee { .. } => "ee",
            Self::Compare { .. } => "compare",
            Self::Lifetime => "lifetime",
            Self::Validate { .. } => "validate",
        }
    }
}

/// Reads a config source. A manifest written by this tool embeds its config under `[config]`.
fn config_text(source: &str) -> Result<String> {
    match source {
        "cat0" => return Ok(CAT0_TOML.to_string()),
        "nbiot" => return Ok(NBIOT_TOML.to_string()),
        _ => {}
    }
    let text = fs::read_to_string(source).with_context(|| format!("reading config `{source}`"))?;
    let mut table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing `{source}`"))?;
    if table.contains_key("run") {
        if let Some(toml::Value::Table(cfg)) = table.remove("config") {
            return Ok(toml::to_string(&cfg)?);
        }
    }
    Ok(text)
}

fn load(source: &str, common: &Common) -> Result<Config> {
    let mut overrides = common.overrides.clone();
    if let Some(s) = common.seed {
        overrides.push(format!("scenario.seed={s}"));
    }
    if let Some(t) = common.trials {
        overrides.push(format!("scenario.trials={t}"));
    }
    Ok(Config::from_toml(&config_text(source)?, &overrides)?)
}

struct Run {
    out: PathBuf,
    hash: String,
    comments: Vec<String>,
    files: Vec<String>,
}

impl Run {
    fn new(out: &Path, cfg: &Config, command: &str) -> Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("creating `{}`", out.display()))?;
        let hash: String = Sha256::digest(cfg.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        let comments = vec![
            format!("config_sha256: {hash}"),
            format!("scenario: {}", cfg.scenario.name),
            format!("command: {command}"),
            format!("seed: {}", cfg.scenario.seed),
        ];
        Ok(Self { out: out.to_path_buf(), hash, comments, files: Vec::new() })
    }

    fn write(&mut self, name: &str, table: &Table) -> Result<()> {
        let path = self.out.join(name);
        let mut f = fs::File::create(&path).with_context(|| format!("creating `{}`", path.display()))?;
        table.write_csv(&mut f, &self.comments)?;
        log::info!("wrote {} ({} rows)", path.display(), table.rows.len());
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish(self, cfg: &Config, command: &str, started: Instant) -> Result<()> {
        let mut run = toml::Table::new();
        run.insert("command".into(), command.into());
        run.insert("config_sha256".into(), self.hash.into());
        run.insert("seed".into(), toml::Value::Integer(cfg.scenario.seed as i64));
        run.insert("trials".into(), toml::Value::Integer(cfg.scenario.trials as i64));
        run.insert("uavnet_version".into(), env!("CARGO_PKG_VERSION").into());
        run.insert("wall_time_s".into(), started.elapsed().as_secs_f64().into());
        run.insert("files".into(), toml::Value::Array(self.files.into_iter().map(Into::into).collect()));
        let mut doc = toml::Table::new();
        doc.insert("run".into(), run.into());
        doc.insert("config".into(), toml::Value::Table(toml::from_str(&cfg.to_toml())?));
        fs::write(self.out.join("manifest.toml"), toml::to_string(&doc)?)?;
        Ok(())
    }
}

fn coverage(cfg: &Config, run: &mut Run, analytic_only: bool) -> Result<()> {
    let quad = cfg.quad();
    let mut t = Table::new(&["drone_ratio", "tau_db", "coverage_proposed", "coverage_no_iot", "mc_estimate", "mc_ci95"]);
    for &ratio in &cfg.coverage.drone_ratios {
        let est = if analytic_only {
            None
        } else {
            Some(estimate_coverage(&CoverageMcSpec {
                channel: cfg.channel_params()?,
                lambda_b: cfg.lambda_b(),
                lambda_d: ratio * cfg.lambda_b(),
                p_b: dbm_to_watts(cfg.radio.bs_power_dbm),
                p_m: dbm_to_watts(cfg.coverage.iot_power_dbm),
                window_factor: cfg.network.window_factor,
                probes_per_trial: cfg.coverage.probes_per_trial,
                trials: cfg.scenario.trials,
                seed: cfg.scenario.seed,
                batches: cfg.montecarlo.batches,
            })?)
        };
        for &db in &cfg.coverage.tau_db {
            let q = cfg.coverage_query(db, ratio)?;
            let (mc, ci) = match &est {
                Some(e) => {
                    let (p, ci) = e.ccdf(q.tau);
                    (num(p), num(ci))
                }
                None => (String::new(), String::new()),
            };
            t.push(vec![
                num(ratio),
                num(db),
                num(ue_coverage_proposed(&q, &quad)?),
                num(ue_coverage_no_iot(&q, &quad)?),
                mc,
                ci,
            ]);
        }
    }
    run.write("coverage.csv", &t)
}

fn ee(cfg: &Config, run: &mut Run, multi: bool, optimize_bs: bool, sweep: usize) -> Result<()> {
    let pr = cfg.scsd_problem()?;
    let sol = pr.solve()?;
    let mut t = Table::new(&["h_m", "p_star_dbm", "ee_bit_per_j", "binding", "iterations", "ee_at_p_max", "gain_vs_p_max"]);
    let at_max = pr.avg_ee(pr.p_max);
    t.push(vec![
        num(pr.h_d),
        num(watts_to_dbm(sol.p_star)),
        num(sol.ee_star),
        sol.binding.as_str().into(),
        sol.evaluations.to_string(),
        num(at_max),
        num(sol.ee_star / at_max),
    ]);
    run.write("ee.csv", &t)?;
    println!(
        "P* = {:.2} dBm ({}), EE = {:.4e} bit/J, {:.2}x the EE at maximum power",
        watts_to_dbm(sol.p_star),
        sol.binding.as_str(),
        sol.ee_star,
        sol.ee_star / at_max
    );

    if sweep >= 2 {
        let cap = pr.isr_power_cap()?;
        let mut s = Table::new(&["p_dbm", "ee_bit_per_j", "rate_bps", "consumption_w", "feasible"]);
        for i in 0..sweep {
            let p = pr.p_min * (pr.p_max / pr.p_min).powf(i as f64 / (sweep - 1) as f64);
            s.push(vec![
                num(watts_to_dbm(p)),
                num(pr.avg_ee(p)),
                num(pr.rate(p)),
                num(pr.consumption(p)),
                (p <= cap).to_string(),
            ]);
        }
        run.write("ee_sweep.csv", &s)?;
    }

    if multi {
        let mp = cfg.scmd_problem()?;
        let mut m = Table::new(&["objective", "tier", "h_m", "power_dbm", "ee_bit_per_j", "certified_global"]);
        for (name, sol) in [
            ("max_min", solve_max_min(&mp, cfg.multi.tolerance, cfg.multi.max_iterations)?),
            ("sum", solve_sum_ee(&mp, cfg.multi.tolerance, cfg.multi.max_iterations)?),
        ] {
            for (l, tier) in mp.tiers.iter().enumerate() {
                m.push(vec![
                    name.into(),
                    l.to_string(),
                    num(tier.h_d),
                    num(watts_to_dbm(sol.powers[l])),
                    num(sol.tier_ee[l]),
                    sol.certified_global.to_string(),
                ]);
            }
        }
        run.write("ee_multi.csv", &m)?;
    }

    if optimize_bs {
        let base = cfg.scsd_problem_at(cfg.iot.drone_height_m, dbm_to_watts(cfg.bs_power.p_b_max_dbm))?;
        let r = optimize_bs_power(
            &base,
            dbm_to_watts(cfg.bs_power.p_b_min_dbm),
            dbm_to_watts(cfg.bs_power.p_b_max_dbm),
            cfg.bs_power.zeta,
            cfg.bs_power.max_iterations,
        )?;
        let mut b = Table::new(&["iteration", "p_b_dbm", "cap_dbm", "p_m_dbm", "ee_bit_per_j", "binding"]);
        for (i, it) in r.trace.iter().enumerate() {
            b.push(vec![
                i.to_string(),
                num(watts_to_dbm(it.p_b)),
                num(watts_to_dbm(it.cap)),
                num(watts_to_dbm(it.p_m)),
                num(it.ee),
                it.binding.as_str().into(),
            ]);
        }
        run.write("bs_power.csv", &b)?;
        println!(
            "BS power {:.1} dBm, IoT power {:.2} dBm, EE {:.4e} bit/J ({:.2}x the full-power EE)",
            watts_to_dbm(r.p_b),
            watts_to_dbm(r.p_m),
            r.ee,
            r.ee / r.trace[0].ee
        );
    }
    Ok(())
}

fn compare(cfg: &Config, run: &mut Run, dump_realization: bool) -> Result<()> {
    let spec = cfg.campaign_spec()?;
    let summary = run_campaign(&spec)?;
    run.write("compare_summary.csv", &campaign_summary_table(&summary))?;
    run.write("compare_cdf.csv", &campaign_cdf_table(&summary))?;

    // Analytic shares against the scheduler on the first topology.
    let real = realize(&spec.network, cfg.scenario.seed, 0)?;
    let d = cfg.densities();
    let mut t = Table::new(&["scenario", "protocol", "share", "analytic_hz", "empirical_hz"]);
    for name in ["proposed", "sharing", "orthogonal"] {
        let pc = cfg.protocol_config(cfg.protocol_kind(name)?)?;
        let a = shares(&d, &pc)?;
        let mut rng = stream_rng(cfg.scenario.seed, 0, Stream::Auxiliary);
        let e = scheduler_oracle(&real, &pc, 200, &mut rng)?.shares;
        for (share, x, y) in [("ue_ul", a.ue_ul, e.ue_ul), ("ue_dl", a.ue_dl, e.ue_dl), ("iot", a.iot, e.iot)] {
            t.push(vec![cfg.scenario.name.clone(), name.into(), share.into(), num(x), num(y)]);
        }
    }
    run.write("shares.csv", &t)?;
    if dump_realization {
        run.write("realization.csv", &realization_table(&real))?;
    }
    for s in &summary.schemes {
        let ee = if s.iot_ee.is_empty() { "-".to_string() } else { format!("{:.3e}", s.iot_ee.median()) };
        println!(
            "{:<12} DL {:.3e} bit/s  UL {:.3e} bit/s  median IoT EE {ee} bit/J",
            s.name(),
            s.ue_dl_rate.mean,
            s.ue_ul_rate.mean
        );
    }
    Ok(())
}

fn lifetime(cfg: &Config, run: &mut Run) -> Result<()> {
    let summary = run_campaign(&cfg.campaign_spec()?)?;
    let params = cfg.lifetime_params();
    let th: Vec<f64> = cfg.iot.thresholds_db.iter().map(|&t| db_to_linear(t)).collect();
    let mut dists = Vec::new();
    for s in summary.schemes.iter().filter(|s| s.run.scheme.has_iot()) {
        let d = lifetime_campaign(&s.devices, &params, cfg.iot.circuit_power_w, cfg.iot.pa_efficiency, &th)?;
        println!(
            "{:<12} median {:.2} y  IQR {:.2} y  censored {:.1}%",
            s.name(),
            d.median(),
            d.iqr(),
            100.0 * d.censored_fraction()
        );
        dists.push((s.name(), d));
    }
    let rows: Vec<_> = dists.iter().map(|(n, d)| (*n, d)).collect();
    run.write("lifetime.csv", &lifetime_table(&rows))
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn validate(cfg: &Config, common: &Common, run: &mut Run, quick: bool, lifetime_config: &str) -> Result<bool> {
    let nbiot = load(lifetime_config, common)?;
    let budget = if quick { Budget::quick() } else { Budget::full() };
    let outcomes = run_all(cfg, &nbiot, &budget);
    let mut t = Table::new(&["criterion", "passed", "title", "detail"]);
    for o in &outcomes {
        println!("{o}");
        t.push(vec![o.id.to_string(), o.passed.to_string(), quote(o.title), quote(&o.detail)]);
    }
    let met = outcomes.iter().filter(|o| o.passed).count();
    println!("{met}/{} checks passed", outcomes.len());
    run.write("validate.csv", &t)?;
    Ok(met == outcomes.len())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    let started = Instant::now();
    let cfg = load(&cli.common.config, &cli.common)?;
    let name = cli.command.name();
    let mut run = Run::new(&cli.common.out, &cfg, name)?;
    let ok = match &cli.command {
        Command::Coverage { analytic_only } => coverage(&cfg, &mut run, *analytic_only).map(|()| true),
        Command::Ee { multi, optimize_bs, sweep } => ee(&cfg, &mut run, *multi, *optimize_bs, *sweep).map(|()| true),
        Command::Compare { dump_realization } => compare(&cfg, &mut run, *dump_realization).map(|()| true),
        Command::Lifetime => lifetime(&cfg, &mut run).map(|()| true),
        Command::Validate { quick, lifetime_config } => {
            validate(&cfg, &cli.common, &mut run, *quick, lifetime_config)
        }
    }?;
    run.finish(&cfg, name, started)?;
    Ok(ok)
}
