//! Per-trial SINR, rate, and EE evaluation for every access scheme.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use crate::channel::{gamma_distribution, los_probability, ChannelParams};
use crate::error::{invalid, Result};
use crate::geometry::{stream_rng, GridIndex, Point2, Stream};
use crate::montecarlo::NetworkRealization;
use crate::units::noise_power_watts;

/// Line-of-sight treatment of ground-to-air links in the simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkLos {
    /// Area-averaged LOS probabilities for device→drone and BS→drone links.
    Mean { m2d: f64, b2d: f64 },
    /// LOS-probability-weighted gain at each link's own distance.
    Expected,
    /// Bernoulli LOS state per link.
    Sampled,
}

/// Access scheme compared in the simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// UEs only.
    Benchmark,
    /// IoT devices transmit to drones in the downlink slot.
    Proposed,
    /// As proposed, with aggregators mounted at a fixed low height.
    Terrestrial,
    /// IoT devices contend for uplink resources, admitted with probability `kappa`.
    Sharing { kappa: f64 },
    /// Uplink band split; UEs get `w_u` Hz.
    Orthogonal { w_u: f64 },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Benchmark => "benchmark",
            Self::Proposed => "proposed",
            Self::Terrestrial => "terrestrial",
            Self::Sharing { .. } => "sharing",
            Self::Orthogonal { .. } => "orthogonal",
        }
    }

    pub fn has_iot(&self) -> bool {
        !matches!(self, Self::Benchmark)
    }

    pub fn uses_aggregators(&self) -> bool {
        matches!(self, Self::Proposed | Self::Terrestrial)
    }
}

/// Radio and measurement settings for trial evaluation. Powers in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioSpec {
    pub channel: ChannelParams<f64>,
    pub los: LinkLos,
    /// Log-normal shadowing standard deviation in dB; zero disables it.
    pub shadowing_sigma_db: f64,
    /// Gamma/Rayleigh small-scale fading; when off, links use mean gains.
    pub fast_fading: bool,
    pub bandwidth: f64,
    pub t1: f64,
    pub t2: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub p_b: f64,
    pub p_ue: f64,
    pub p_iot_min: f64,
    pub p_iot_max: f64,
    pub p_cp: f64,
    pub eta: f64,
    /// Linear UE SINR thresholds, increasing.
    pub ue_thresholds: Vec<f64>,
    /// Linear IoT SINR thresholds, increasing.
    pub iot_thresholds: Vec<f64>,
    pub terrestrial_height: f64,
    /// Fractional power-control factor applied around the optimized nominal power of the
    /// proposed scheme (baselines transmit at their fixed power); `None` disables it.
    pub fpc_factor: Option<f64>,
    /// UEs measured per trial (sampled from the central sub-window); 0 means all.
    pub measured_ues: usize,
    /// IoT devices measured per trial; 0 means all.
    pub measured_devices: usize,
}

impl RadioSpec {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        for (name, v) in [
            ("bandwidth_hz", self.bandwidth),
            ("bs_power_dbm", self.p_b),
            ("ue_power_dbm", self.p_ue),
            ("p_min_dbm", self.p_iot_min),
            ("circuit_power_w", self.p_cp),
            ("terrestrial_height_m", self.terrestrial_height),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid("pa_efficiency", "must lie in (0, 1]"));
        }
        if self.p_iot_min > self.p_iot_max {
            return Err(invalid("p_min_dbm", "must not exceed p_max_dbm"));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(invalid("shadowing_sigma_db", "must be non-negative"));
        }
        for (name, t) in [("ue_thresholds_db", &self.ue_thresholds), ("iot thresholds_db", &self.iot_thresholds)] {
            if t.is_empty() || t.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid(name, "must be non-empty and strictly increasing"));
            }
        }
        if let Some(f) = self.fpc_factor {
            if !(0.0..=1.0).contains(&f) {
                return Err(invalid("fpc_factor", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Spectral efficiency of the highest threshold met: `Σ_k μ_k 1{sinr ≥ τ_k}`.
pub fn bracket_se(sinr: f64, thresholds: &[f64]) -> f64 {
    match thresholds.iter().rposition(|&t| sinr >= t) {
        Some(k) => (1.0 + thresholds[k]).log2(),
        None => 0.0,
    }
}

/// Per-device outputs of one trial under one scheme. Rates in bit/s, EE in bit/J.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialMetrics {
    pub ue_dl_sinr: Vec<f64>,
    pub ue_dl_rate: Vec<f64>,
    pub ue_ul_sinr: Vec<f64>,
    pub ue_ul_rate: Vec<f64>,
    pub iot_sinr: Vec<f64>,
    /// Resource share of each measured device in Hz.
    pub iot_share: Vec<f64>,
    /// Transmit power of each measured device in W.
    pub iot_power: Vec<f64>,
    pub iot_rate: Vec<f64>,
    pub iot_ee: Vec<f64>,
    /// ISR at the UE nearest to each measured device (aggregator schemes only).
    pub isr: Vec<f64>,
    /// IoT transmitters active in the uplink slot (must be zero under aggregator schemes).
    pub iot_uplink_interferers: usize,
    /// Largest number of devices scheduled on one aggregator in the downlink slot.
    pub max_scheduled_per_aggregator: usize,
}

struct Links<'a> {
    ch: &'a ChannelParams<f64>,
    los: LinkLos,
    sigma: f64,
    los_rng: ChaCha8Rng,
    shadow_rng: ChaCha8Rng,
}

impl Links<'_> {
    fn shadow(&mut self) -> f64 {
        if self.sigma > 0.0 {
            let z: f64 = StandardNormal.sample(&mut self.shadow_rng);
            10f64.powf(self.sigma * z / 10.0)
        } else {
            1.0
        }
    }

    fn g2g(&mut self, d: f64) -> f64 {
        self.ch.l0 * d.max(1.0).powf(-self.ch.alpha_g) * self.shadow()
    }

    /// Ground-to-air gain at ground distance `r` and height `h`; `bs` selects the BS→drone
    /// law (steering loss and its mean-LOS constant).
    fn g2a(&mut self, r: f64, h: f64, bs: bool) -> f64 {
        let p = match self.los {
            LinkLos::Mean { m2d, b2d } => if bs { b2d } else { m2d },
            LinkLos::Expected => los_probability(r, self.ch),
            LinkLos::Sampled => {
                if self.los_rng.random::<f64>() < los_probability(r, self.ch) { 1.0 } else { 0.0 }
            }
        };
        let d = (r * r + h * h).sqrt().max(1.0);
        let mix = (1.0 - self.ch.l_nlos) * p + self.ch.l_nlos;
        let steer = if bs { self.ch.l_str } else { 1.0 };
        steer * self.ch.l0 * mix * d.powf(-self.ch.alpha_a) * self.shadow()
    }
}

/// Small-scale fading draws; with fading disabled every gain is replaced by its mean.
struct Fader {
    enabled: bool,
    desired: Gamma<f64>,
    interferer: Gamma<f64>,
    desired_mean: f64,
    interferer_mean: f64,
    rng: ChaCha8Rng,
}

impl Fader {
    fn desired(&mut self) -> f64 {
        if self.enabled { self.desired.sample(&mut self.rng) } else { self.desired_mean }
    }

    fn interferer(&mut self) -> f64 {
        if self.enabled { self.interferer.sample(&mut self.rng) } else { self.interferer_mean }
    }

    fn rayleigh(&mut self) -> f64 {
        if self.enabled { Exp1.sample(&mut self.rng) } else { 1.0 }
    }
}

/// Random subset of `candidates` of size `k` (all when `k == 0` or too few), in index order.
fn pick(candidates: Vec<usize>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if k == 0 || candidates.len() <= k {
        return candidates;
    }
    let mut idx: Vec<usize> = sample_indices(rng, candidates.len(), k).into_iter().map(|i| candidates[i]).collect();
    idx.sort_unstable();
    idx
}

/// One uplink transmitter active in the first slot.
#[derive(Debug, Clone, Copy)]
enum UlTx {
    Ue(usize),
    Aggregator(usize),
    Device(usize, usize),
}

/// Evaluates one realization under `scheme` with nominal IoT power `iot_power` (W).
///
/// Random draws come from streams keyed by `(seed, trial)`, so every scheme evaluated on
/// the same realization sees the same scheduling, fading, and LOS sequences as far as
/// their code paths coincide.
pub fn evaluate_trial(
    real: &NetworkRealization,
    scheme: Scheme,
    iot_power: f64,
    radio: &RadioSpec,
    seed: u64,
    trial: u64,
) -> Result<TrialMetrics> {
    radio.validate()?;
    let ch = &radio.channel;
    let w = real.window;
    let n_bs = real.bs.len();
    let ub = ch.psi_b as usize;
    let mut sched = stream_rng(seed, trial, Stream::Scheduling);
    let mut admit = stream_rng(seed, trial, Stream::Admission);
    let mut probes = stream_rng(seed, trial, Stream::Probes);
    let mut links = Links {
        ch,
        los: radio.los,
        sigma: radio.shadowing_sigma_db,
        los_rng: stream_rng(seed, trial, Stream::LineOfSight),
        shadow_rng: stream_rng(seed, trial, Stream::Shadowing),
    };
    let mut fading = Fader {
        enabled: radio.fast_fading,
        desired: gamma_distribution(ch.delta_b)?,
        interferer: gamma_distribution(ch.psi_b)?,
        desired_mean: f64::from(ch.delta_b),
        interferer_mean: f64::from(ch.psi_b),
        rng: stream_rng(seed, trial, Stream::Fading),
    };
    let wband = radio.bandwidth;
    let (w_ue, w_iot_ul) = match scheme {
        Scheme::Orthogonal { w_u } => {
            if !(0.0..=wband).contains(&w_u) {
                return Err(invalid("orthogonal_ue_fraction", "UE band must lie in [0, W]"));
            }
            (w_u, wband - w_u)
        }
        _ => (wband, wband),
    };
    let noise = |band: f64| if band > 0.0 { noise_power_watts(radio.noise_psd_dbm_per_hz, band) } else { 0.0 };
    let h_agg = match scheme {
        Scheme::Terrestrial => radio.terrestrial_height,
        _ => real.drones.stop_points.first().map_or(radio.terrestrial_height, |s| s.z),
    };

    // Measured UEs and devices in the central sub-window.
    let central_ues: Vec<usize> = (0..real.ue.len()).filter(|&i| w.in_central(real.ue.points[i])).collect();
    let ues = pick(central_ues, radio.measured_ues, &mut probes);
    let mut central_devs = Vec::new();
    for (c, d) in real.clusters.daughters.iter().enumerate() {
        for (k, p) in d.iter().enumerate() {
            if w.in_central(*p) {
                central_devs.push(c << 32 | k);
            }
        }
    }
    let devs: Vec<(usize, usize)> =
        pick(central_devs, radio.measured_devices, &mut probes).into_iter().map(|v| (v >> 32, v & 0xFFFF_FFFF)).collect();

    let mut ue_load = vec![0_usize; n_bs];
    for &b in &real.ue_bs {
        ue_load[b] += 1;
    }

    // Own-link gains (path loss, LOS, shadowing) and transmit powers of all devices.
    let mut own_gain: Vec<Vec<f64>> = Vec::with_capacity(real.clusters.daughters.len());
    if scheme.has_iot() {
        for (c, d) in real.clusters.daughters.iter().enumerate() {
            let mut g = Vec::with_capacity(d.len());
            for (k, &p) in d.iter().enumerate() {
                g.push(match scheme {
                    Scheme::Proposed => {
                        let r = w.distance(p, real.drones.stop_points[c].ground());
                        links.g2a(r, h_agg, false)
                    }
                    Scheme::Terrestrial => {
                        let r = w.distance(p, real.drones.stop_points[c].ground());
                        links.g2g((r * r + h_agg * h_agg).sqrt())
                    }
                    _ => links.g2g(w.distance(p, real.bs.points[real.iot_bs[c][k]])),
                });
            }
            own_gain.push(g);
        }
    }
    let power: Vec<Vec<f64>> = match radio.fpc_factor {
        Some(f) if scheme == Scheme::Proposed => {
            let mut all: Vec<f64> = own_gain.iter().flatten().copied().collect();
            let reference = if all.is_empty() {
                1.0
            } else {
                let m = all.len() / 2;
                *all.select_nth_unstable_by(m, f64::total_cmp).1
            };
            own_gain
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|&gi| (iot_power * (reference / gi).powf(f)).clamp(radio.p_iot_min, radio.p_iot_max))
                        .collect()
                })
                .collect()
        }
        _ => own_gain.iter().map(|g| vec![iot_power; g.len()]).collect(),
    };

    let mut m = TrialMetrics::default();

    // ---- Second slot: UE downlink, IoT uplink to aggregators. ----
    let scheduled: Vec<Option<usize>> = if scheme.uses_aggregators() {
        real.clusters
            .daughters
            .iter()
            .map(|d| if d.is_empty() { None } else { Some(sched.random_range(0..d.len())) })
            .collect()
    } else {
        Vec::new()
    };
    m.max_scheduled_per_aggregator = scheduled.iter().map(|s| usize::from(s.is_some())).max().unwrap_or(0);
    let active_devices: Vec<(usize, usize)> =
        scheduled.iter().enumerate().filter_map(|(c, s)| s.map(|k| (c, k))).collect();

    let per_stream = radio.p_b / ub as f64;
    let n_dl = noise(wband);
    for &u in &ues {
        let p = real.ue.points[u];
        let b0 = real.ue_bs[u];
        let s = per_stream * fading.desired() * links.g2g(w.distance(p, real.bs.points[b0]));
        let mut i = 0.0;
        for (b, &q) in real.bs.points.iter().enumerate() {
            if b != b0 {
                i += per_stream * fading.interferer() * links.g2g(w.distance(p, q));
            }
        }
        for &(c, k) in &active_devices {
            let q = real.clusters.daughters[c][k];
            i += power[c][k] * fading.rayleigh() * links.g2g(w.distance(p, q));
        }
        let sinr = s / (i + n_dl);
        let n = ue_load[b0] as f64;
        let share = wband * radio.t2 * (ub as f64).min(n) / n;
        m.ue_dl_sinr.push(sinr);
        m.ue_dl_rate.push(share * bracket_se(sinr, &radio.ue_thresholds));
    }

    if scheme.uses_aggregators() {
        let n_iot = noise(wband);
        for &(c, k) in &devs {
            let agg = real.drones.stop_points[c].ground();
            let fade = if scheme == Scheme::Terrestrial { fading.rayleigh() } else { 1.0 };
            let s = power[c][k] * own_gain[c][k] * fade;
            let mut i = 0.0;
            for &q in &real.bs.points {
                let r = w.distance(q, agg);
                i += if scheme == Scheme::Terrestrial {
                    per_stream * fading.interferer() * links.g2g((r * r + h_agg * h_agg).sqrt())
                } else {
                    radio.p_b * links.g2a(r, h_agg, true)
                };
            }
            for &(c2, k2) in &active_devices {
                if c2 == c {
                    continue;
                }
                let r = w.distance(real.clusters.daughters[c2][k2], agg);
                i += power[c2][k2]
                    * if scheme == Scheme::Terrestrial {
                        fading.rayleigh() * links.g2g((r * r + h_agg * h_agg).sqrt())
                    } else {
                        links.g2a(r, h_agg, false)
                    };
            }
            let sinr = s / (i + n_iot);
            let share = wband * radio.t2 / real.clusters.daughters[c].len() as f64;
            let rate = share * bracket_se(sinr, &radio.iot_thresholds);
            m.iot_sinr.push(sinr);
            m.iot_share.push(share);
            m.iot_power.push(power[c][k]);
            m.iot_rate.push(rate);
            m.iot_ee.push(rate / (radio.p_cp + power[c][k] / radio.eta));
        }
        // ISR at the UE nearest to each measured device.
        if !real.ue.is_empty() {
            let index = GridIndex::new(w, &real.ue);
            for &(c, k) in &devs {
                let p = real.clusters.daughters[c][k];
                let (u, z_m) = index.nearest(p)?;
                let z_b = w.distance(real.ue.points[u], real.bs.points[real.ue_bs[u]]);
                let num = power[c][k] * z_m.max(1.0).powf(-ch.alpha_g);
                let den = f64::from(ch.delta_b) * per_stream * z_b.max(1.0).powf(-ch.alpha_g);
                m.isr.push(num / den);
            }
        }
    }

    // ---- First slot: uplink. ----
    let mut contenders: Vec<Vec<UlTx>> = vec![Vec::new(); n_bs];
    let mut iot_band: Vec<Vec<UlTx>> = vec![Vec::new(); n_bs];
    for (u, &b) in real.ue_bs.iter().enumerate() {
        contenders[b].push(UlTx::Ue(u));
    }
    match scheme {
        Scheme::Proposed | Scheme::Terrestrial => {
            for (a, &b) in real.drone_bs.iter().enumerate() {
                contenders[b].push(UlTx::Aggregator(a));
            }
        }
        Scheme::Sharing { kappa } => {
            if !(0.0..=1.0).contains(&kappa) {
                return Err(invalid("kappa", "must lie in [0, 1]"));
            }
            for (c, bs) in real.iot_bs.iter().enumerate() {
                for (k, &b) in bs.iter().enumerate() {
                    if kappa >= 1.0 || admit.random::<f64>() < kappa {
                        contenders[b].push(UlTx::Device(c, k));
                    }
                }
            }
        }
        Scheme::Orthogonal { .. } => {
            for (c, bs) in real.iot_bs.iter().enumerate() {
                for (k, &b) in bs.iter().enumerate() {
                    iot_band[b].push(UlTx::Device(c, k));
                }
            }
        }
        Scheme::Benchmark => {}
    }
    let choose = |set: &Vec<UlTx>, rng: &mut ChaCha8Rng| -> Vec<UlTx> {
        if set.len() <= ub {
            set.clone()
        } else {
            let mut idx = sample_indices(rng, set.len(), ub).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| set[i]).collect()
        }
    };
    let active: Vec<Vec<UlTx>> = contenders.iter().map(|s| choose(s, &mut sched)).collect();
    let active_iot: Vec<Vec<UlTx>> = iot_band.iter().map(|s| choose(s, &mut sched)).collect();
    m.iot_uplink_interferers = active
        .iter()
        .flatten()
        .chain(active_iot.iter().flatten())
        .filter(|t| matches!(t, UlTx::Device(..)))
        .count();

    let tx_pos = |t: UlTx| -> (Point2, bool) {
        match t {
            UlTx::Ue(u) => (real.ue.points[u], false),
            UlTx::Aggregator(a) => (real.drones.stop_points[a].ground(), true),
            UlTx::Device(c, k) => (real.clusters.daughters[c][k], false),
        }
    };
    let interference_at = |b0: usize, set: &[Vec<UlTx>], links: &mut Links<'_>, fading: &mut Fader| -> f64 {
        let rx = real.bs.points[b0];
        let mut i = 0.0;
        for (b, txs) in set.iter().enumerate() {
            if b == b0 {
                continue;
            }
            for &t in txs {
                let (p, air) = tx_pos(t);
                let r = w.distance(p, rx);
                i += match t {
                    UlTx::Ue(_) => radio.p_ue * fading.rayleigh() * links.g2g(r),
                    UlTx::Aggregator(_) if air && scheme == Scheme::Proposed => radio.p_ue * links.g2a(r, h_agg, true),
                    UlTx::Aggregator(_) => radio.p_ue * fading.rayleigh() * links.g2g((r * r + h_agg * h_agg).sqrt()),
                    UlTx::Device(c, k) => power[c][k] * fading.rayleigh() * links.g2g(r),
                };
            }
        }
        i
    };

    let n_ul = noise(w_ue);
    for &u in &ues {
        let b0 = real.ue_bs[u];
        let g = links.g2g(w.distance(real.ue.points[u], real.bs.points[b0]));
        let s = radio.p_ue * fading.desired() * g;
        let i = interference_at(b0, &active, &mut links, &mut fading);
        let sinr = s / (i + n_ul);
        let n = contenders[b0].len() as f64;
        let share = w_ue * radio.t1 * (ub as f64).min(n) / n;
        m.ue_ul_sinr.push(sinr);
        m.ue_ul_rate.push(share * bracket_se(sinr, &radio.ue_thresholds));
    }

    match scheme {
        Scheme::Sharing { .. } | Scheme::Orthogonal { .. } => {
            let (orth, kappa) = match scheme {
                Scheme::Sharing { kappa } => (false, kappa),
                _ => (true, 1.0),
            };
            let n_b = noise(if orth { w_iot_ul } else { wband });
            for &(c, k) in &devs {
                let b0 = real.iot_bs[c][k];
                let s = power[c][k] * fading.desired() * own_gain[c][k];
                let set = if orth { &active_iot } else { &active };
                let i = interference_at(b0, set, &mut links, &mut fading);
                let sinr = s / (i + n_b);
                let share = if orth {
                    let n = iot_band[b0].len() as f64;
                    w_iot_ul * radio.t1 * (ub as f64).min(n) / n
                } else {
                    // Long-run share: admitted with probability κ, then a fair slice of the cell.
                    let with_me = contenders[b0].len() as f64
                        + if contenders[b0].iter().any(|t| matches!(t, UlTx::Device(a, b) if *a == c && *b == k)) { 0.0 } else { 1.0 };
                    kappa * wband * radio.t1 * (ub as f64).min(with_me) / with_me
                };
                let rate = share * bracket_se(sinr, &radio.iot_thresholds);
                m.iot_sinr.push(sinr);
                m.iot_share.push(share);
                m.iot_power.push(power[c][k]);
                m.iot_rate.push(rate);
                m.iot_ee.push(rate / (radio.p_cp + power[c][k] / radio.eta));
            }
        }
        _ => {}
    }
    Ok(m)
}
