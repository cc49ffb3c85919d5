//! Multi-trial campaigns and targeted Monte Carlo estimators.

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::channel::{gamma_distribution, ChannelParams};
use crate::error::{invalid, Result};
use crate::geometry::{sample_disk, sample_hppp, stream_rng, GridIndex, Point2, Stream, Window};
use crate::montecarlo::{evaluate_trial, realize, NetworkSpec, RadioSpec, Scheme, TrialMetrics};
use crate::scsd::ScSdProblem;

/// A scheme together with the nominal IoT transmit power (W) it runs at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeRun {
    pub scheme: Scheme,
    pub iot_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSpec {
    pub network: NetworkSpec,
    pub radio: RadioSpec,
    pub runs: Vec<SchemeRun>,
    pub trials: u64,
    pub seed: u64,
    /// Number of contiguous trial batches used for confidence intervals.
    pub batches: usize,
}

/// Empirical distribution of one metric with a batch-means 95% interval on the mean.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricSummary {
    /// Samples in ascending order.
    pub sorted: Vec<f64>,
    pub mean: f64,
    pub ci95: f64,
}

impl MetricSummary {
    /// `batches` holds the samples grouped by trial batch.
    pub fn from_batches(batches: &[Vec<f64>]) -> Self {
        let mut sorted: Vec<f64> = batches.iter().flatten().copied().collect();
        sorted.sort_by(f64::total_cmp);
        let mean = if sorted.is_empty() { f64::NAN } else { sorted.iter().sum::<f64>() / sorted.len() as f64 };
        let means: Vec<f64> = batches
            .iter()
            .filter(|b| !b.is_empty())
            .map(|b| b.iter().sum::<f64>() / b.len() as f64)
            .collect();
        Self { sorted, mean, ci95: batch_ci95(&means) }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Empirical quantile with linear interpolation between order statistics.
    pub fn quantile(&self, q: f64) -> f64 {
        quantile_sorted(&self.sorted, q)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Fraction of samples `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return f64::NAN;
        }
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }
}

/// Quantile of an ascending slice; NaN when empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

/// Student-t 95% half-width from independent batch means.
pub fn batch_ci95(means: &[f64]) -> f64 {
    let b = means.len();
    if b < 2 {
        return f64::INFINITY;
    }
    let m = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (b - 1) as f64).map(|d| d.inverse_cdf(0.975)).unwrap_or(1.96);
    t * (var / b as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub run: SchemeRun,
    pub ue_dl_rate: MetricSummary,
    pub ue_ul_rate: MetricSummary,
    pub iot_rate: MetricSummary,
    pub iot_ee: MetricSummary,
    pub iot_sinr: MetricSummary,
    pub isr: MetricSummary,
    /// Total IoT transmitters seen in the uplink slot across all trials.
    pub iot_uplink_interferers: usize,
    pub max_scheduled_per_aggregator: usize,
    /// Per-device samples of all trials, concatenated in trial order.
    pub devices: TrialMetrics,
}

impl SchemeSummary {
    pub fn name(&self) -> &'static str {
        self.run.scheme.name()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub trials: u64,
    pub seed: u64,
    pub schemes: Vec<SchemeSummary>,
}

impl CampaignSummary {
    /// First summary whose scheme matches `name`.
    pub fn get(&self, name: &str) -> Option<&SchemeSummary> {
        self.schemes.iter().find(|s| s.name() == name)
    }
}

fn batch_bounds(trials: usize, batches: usize) -> Vec<(usize, usize)> {
    let b = batches.clamp(1, trials.max(1));
    (0..b).map(|i| (i * trials / b, (i + 1) * trials / b)).collect()
}

/// Runs every scheme on the same `trials` realizations.
///
/// Trials run in parallel; results are collected in trial order, so the summary depends
/// only on the spec and seed.
pub fn run_campaign(spec: &CampaignSpec) -> Result<CampaignSummary> {
    if spec.trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    if spec.runs.is_empty() {
        return Err(invalid("schemes", "at least one scheme is required"));
    }
    spec.network.validate()?;
    spec.radio.validate()?;
    let per_trial: Vec<Vec<TrialMetrics>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let real = realize(&spec.network, spec.seed, t)?;
            spec.runs
                .iter()
                .map(|r| evaluate_trial(&real, r.scheme, r.iot_power, &spec.radio, spec.seed, t))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let bounds = batch_bounds(per_trial.len(), spec.batches);
    let schemes = spec
        .runs
        .iter()
        .enumerate()
        .map(|(k, &run)| {
            let metric = |get: fn(&TrialMetrics) -> &Vec<f64>| {
                let groups: Vec<Vec<f64>> = bounds
                    .iter()
                    .map(|&(a, b)| per_trial[a..b].iter().flat_map(|t| get(&t[k]).iter().copied()).collect())
                    .collect();
                MetricSummary::from_batches(&groups)
            };
            let mut devices = TrialMetrics::default();
            let mut interferers = 0;
            let mut max_sched = 0;
            for t in &per_trial {
                let m = &t[k];
                devices.iot_sinr.extend(&m.iot_sinr);
                devices.iot_share.extend(&m.iot_share);
                devices.iot_power.extend(&m.iot_power);
                devices.iot_rate.extend(&m.iot_rate);
                devices.iot_ee.extend(&m.iot_ee);
                interferers += m.iot_uplink_interferers;
                max_sched = max_sched.max(m.max_scheduled_per_aggregator);
            }
            SchemeSummary {
                run,
                ue_dl_rate: metric(|m| &m.ue_dl_rate),
                ue_ul_rate: metric(|m| &m.ue_ul_rate),
                iot_rate: metric(|m| &m.iot_rate),
                iot_ee: metric(|m| &m.iot_ee),
                iot_sinr: metric(|m| &m.iot_sinr),
                isr: metric(|m| &m.isr),
                iot_uplink_interferers: interferers,
                max_scheduled_per_aggregator: max_sched,
                devices,
            }
        })
        .collect();
    Ok(CampaignSummary { trials: spec.trials, seed: spec.seed, schemes })
}

/// Downlink SIR experiment: BS and drone-served IoT interferers on a torus, interference
/// limited.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMcSpec {
    pub channel: ChannelParams<f64>,
    pub lambda_b: f64,
    /// Density of simultaneously active IoT transmitters (one per drone).
    pub lambda_d: f64,
    pub p_b: f64,
    pub p_m: f64,
    pub window_factor: f64,
    pub probes_per_trial: usize,
    pub trials: u64,
    pub seed: u64,
    pub batches: usize,
}

/// Empirical SIR distribution at typical downlink UEs.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageEstimate {
    /// Linear SIR samples grouped by trial batch.
    pub sir: MetricSummary,
    batch_samples: Vec<Vec<f64>>,
}

impl CoverageEstimate {
    /// `P(SIR ≥ τ)` and its batch-means 95% half-width.
    pub fn ccdf(&self, tau: f64) -> (f64, f64) {
        let p = 1.0 - self.sir.cdf(tau - tau * f64::EPSILON);
        let means: Vec<f64> = self
            .batch_samples
            .iter()
            .filter(|b| !b.is_empty())
            .map(|b| b.iter().filter(|&&s| s >= tau).count() as f64 / b.len() as f64)
            .collect();
        (p, batch_ci95(&means))
    }

    pub fn median_db(&self) -> f64 {
        10.0 * self.sir.median().log10()
    }
}

/// Estimates the downlink SIR distribution with (`lambda_d > 0`) or without IoT interference.
pub fn estimate_coverage(spec: &CoverageMcSpec) -> Result<CoverageEstimate> {
    spec.channel.validate()?;
    if spec.trials == 0 || spec.probes_per_trial == 0 {
        return Err(invalid("trials", "trials and probes per trial must be positive"));
    }
    if !(spec.lambda_d >= 0.0) {
        return Err(invalid("lambda_d", "must be non-negative"));
    }
    let window = Window::for_density(spec.lambda_b, spec.window_factor, true)?;
    let ch = &spec.channel;
    let desired = gamma_distribution(ch.delta_b)?;
    let interferer = gamma_distribution(ch.psi_b)?;
    let per_stream = spec.p_b / f64::from(ch.psi_b);
    let gain = |d: f64| ch.l0 * d.max(1.0).powf(-ch.alpha_g);
    let per_trial: Vec<Vec<f64>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<f64>> {
            let bs = sample_hppp(spec.lambda_b, &window, &mut stream_rng(spec.seed, t, Stream::BaseStations))?;
            if bs.is_empty() {
                return Ok(Vec::new());
            }
            let iot = sample_hppp(spec.lambda_d, &window, &mut stream_rng(spec.seed, t, Stream::Clusters))?;
            let index = GridIndex::new(window, &bs);
            let mut probes = stream_rng(spec.seed, t, Stream::Probes);
            let mut fading = stream_rng(spec.seed, t, Stream::Fading);
            let mut out = Vec::with_capacity(spec.probes_per_trial);
            for _ in 0..spec.probes_per_trial {
                let u = window.sample_uniform_central(&mut probes);
                let (b0, x) = index.nearest(u)?;
                let s = per_stream * rand_distr::Distribution::sample(&desired, &mut fading) * gain(x);
                let mut i = 0.0;
                for (b, &q) in bs.points.iter().enumerate() {
                    if b != b0 {
                        i += per_stream * rand_distr::Distribution::sample(&interferer, &mut fading) * gain(window.distance(u, q));
                    }
                }
                for &q in &iot.points {
                    let f: f64 = rand_distr::Distribution::sample(&rand_distr::Exp1, &mut fading);
                    i += spec.p_m * f * gain(window.distance(u, q));
                }
                out.push(s / i);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let bounds = batch_bounds(per_trial.len(), spec.batches);
    let batch_samples: Vec<Vec<f64>> =
        bounds.iter().map(|&(a, b)| per_trial[a..b].iter().flatten().copied().collect()).collect();
    Ok(CoverageEstimate { sir: MetricSummary::from_batches(&batch_samples), batch_samples })
}

/// Simulated `P(ISR ≥ ρ)`: a device at the window centre, its nearest UE as the victim, and
/// that UE's nearest BS as the desired transmitter.
#[allow(clippy::too_many_arguments)]
pub fn isr_tail_mc(
    channel: &ChannelParams<f64>,
    lambda_b: f64,
    lambda_u: f64,
    p_b: f64,
    p_m: f64,
    rho: f64,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    channel.validate()?;
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let window = Window::for_density(lambda_b, 4.0, true)?;
    let origin = Point2::new(0.0, 0.0);
    let a = channel.alpha_g;
    let scale = f64::from(channel.delta_b) * p_b / f64::from(channel.psi_b);
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<u64> {
            let bs = sample_hppp(lambda_b, &window, &mut stream_rng(seed, t, Stream::BaseStations))?;
            let ue = sample_hppp(lambda_u, &window, &mut stream_rng(seed, t, Stream::UserEquipment))?;
            if bs.is_empty() || ue.is_empty() {
                return Ok(0);
            }
            let (u, z_m) = GridIndex::new(window, &ue).nearest(origin)?;
            let (_, z_b) = GridIndex::new(window, &bs).nearest(ue.points[u])?;
            let isr = p_m * z_m.max(1e-9).powf(-a) / (scale * z_b.max(1e-9).powf(-a));
            Ok(u64::from(isr >= rho))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(hits as f64 / trials as f64)
}

/// Simulated single-cell IoT coverage at the drone: a device uniform on the cluster disk
/// with mean-LOS gain at its true distance, and the nearest BS as the only interferer.
pub fn scsd_coverage_mc(problem: &ScSdProblem<f64>, p: f64, tau: f64, samples: u64, seed: u64) -> Result<f64> {
    problem.validate()?;
    let c = &problem.consts;
    let h2 = problem.h_d * problem.h_d;
    let exp = -2.0 / c.delta_a;
    let mut rng = stream_rng(seed, 0, Stream::Auxiliary);
    let mut hits = 0_u64;
    for _ in 0..samples {
        let dev = sample_disk(problem.radius, &mut rng);
        let s = p * c.l_m * (dev.x * dev.x + dev.y * dev.y + h2).powf(exp / 2.0);
        // Nearest-BS ground distance of a PPP: Rayleigh with πλr² ~ Exp(1).
        let e: f64 = -(1.0 - rng.random::<f64>()).ln();
        let r2 = e / (std::f64::consts::PI * problem.lambda_b);
        let i = problem.p_b * c.l_b * (r2 + h2).powf(exp / 2.0);
        if s / (i + problem.p_n) >= tau {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}
