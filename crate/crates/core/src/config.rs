//! TOML run configuration. Every key is required; unknown keys are rejected.
//!
//! Unit suffixes: `_db`/`_dbm` are decibel values, `_m` meters, `_hz` hertz, `_w` watts,
//! `_s` seconds, `_wh` watt-hours.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, DerivedConstants, Steering};
use crate::coverage::CoverageQuery;
use crate::error::{Error, Result};
use crate::lifetime::LifetimeParams;
use crate::montecarlo::{CampaignSpec, Layout, LinkLos, NetworkSpec, RadioSpec, Scheme, SchemeRun};
use crate::quadrature::QuadratureCfg;
use crate::resources::{Densities, ProtocolConfig, ProtocolKind};
use crate::scmd::{ScMdProblem, Tier};
use crate::scsd::ScSdProblem;
use crate::units::{db_to_linear, dbm_to_watts, noise_power_watts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioSection,
    pub network: NetworkSection,
    pub channel: ChannelSection,
    pub radio: RadioSection,
    pub iot: IotSection,
    pub protocol: ProtocolSection,
    pub protection: ProtectionSection,
    pub bs_power: BsPowerSection,
    pub multi: MultiSection,
    pub quadrature: QuadratureSection,
    pub coverage: CoverageSection,
    pub montecarlo: MonteCarloSection,
    pub lifetime: LifetimeSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub seed: u64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// Poisson BS density is `1/(π r²)` with this mean cell radius.
    pub cell_radius_m: f64,
    pub ues_per_bs: f64,
    pub clusters_per_bs: f64,
    pub drones_per_bs: f64,
    pub devices_per_cluster: f64,
    pub cluster_radius_m: f64,
    /// `"poisson"` or `"hexagonal"`.
    pub layout: String,
    pub hex_isd_m: f64,
    pub window_factor: f64,
    pub wrap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub alpha_g: f64,
    pub alpha_a: f64,
    pub l0_db: f64,
    pub l_nlos_db: f64,
    pub l_str_db: f64,
    pub xi1_m: f64,
    pub xi2_m: f64,
    /// `"whole_link"` or `"nlos_only"`.
    pub steering: String,
    /// `"sampled"`, `"expected"` or `"mean"` (simulation only).
    pub los_mode: String,
    pub shadowing_sigma_db: f64,
    /// Small-scale fading in the network simulation; off gives mean-gain (geometry) SINR.
    pub fast_fading: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub bandwidth_hz: f64,
    pub bs_power_dbm: f64,
    pub bs_antennas: u32,
    pub streams_per_bs: u32,
    pub ue_power_dbm: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub t1: f64,
    pub t2: f64,
    pub ue_thresholds_db: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IotSection {
    pub p_min_dbm: f64,
    pub p_max_dbm: f64,
    pub circuit_power_w: f64,
    pub pa_efficiency: f64,
    pub thresholds_db: Vec<f64>,
    pub drone_height_m: f64,
    pub terrestrial_height_m: f64,
    pub fpc: bool,
    pub fpc_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub kappa: f64,
    pub orthogonal_ue_fraction: f64,
    /// Any of `benchmark`, `proposed`, `terrestrial`, `sharing`, `orthogonal`.
    pub schemes: Vec<String>,
    /// `"optimized"` runs the proposed scheme at the single-cell optimum; `"max"` at `p_max`.
    pub proposed_power: String,
    /// Nominal device power of the sharing, orthogonal and terrestrial schemes.
    pub baseline_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtectionSection {
    pub rho_db: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsPowerSection {
    pub p_b_min_dbm: f64,
    pub p_b_max_dbm: f64,
    /// Stop when consecutive EE values differ by at most this many bit/J.
    pub zeta: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiSection {
    pub tier_heights_m: Vec<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageSection {
    pub tau_db: Vec<f64>,
    /// Drone-to-BS density ratios evaluated by the `coverage` command.
    pub drone_ratios: Vec<f64>,
    /// Active IoT power in the downlink coverage analysis.
    pub iot_power_dbm: f64,
    pub probes_per_trial: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    pub batches: usize,
    pub measured_ues: usize,
    pub measured_devices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeSection {
    pub battery_wh: f64,
    pub report_bytes: f64,
    pub reports_per_day: f64,
    pub p_rx_w: f64,
    pub p_idle_w: f64,
    pub p_sleep_w: f64,
    pub t_rx_s: f64,
    pub t_idle_s: f64,
    pub t_sleep_s: f64,
}

/// Built-in CAT-0 scenario: the IoT device shares the full 20 MHz band.
pub const CAT0_TOML: &str = include_str!("../../../configs/cat0.toml");
/// Built-in NB-IoT scenario: one 180 kHz resource block, lower BS power.
pub const NBIOT_TOML: &str = include_str!("../../../configs/nbiot.toml");

fn parse_value(raw: &str) -> toml::Value {
    // Bare words that are not valid TOML values are taken as strings.
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets `section.key = value` in a parsed table. The key must already exist.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form section.key=value")))?;
    let path = path.trim();
    let parts: Vec<&str> = path.split('.').collect();
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for p in parents {
        cur = cur
            .get_mut(*p)
            .and_then(toml::Value::as_table_mut)
            .ok_or_else(|| Error::Config(format!("unknown section `{p}` in override `{path}`")))?;
    }
    if !cur.contains_key(*last) {
        return Err(Error::Config(format!("unknown key `{path}` in override")));
    }
    cur.insert((*last).to_string(), parse_value(raw.trim()));
    Ok(())
}

impl Config {
    /// Parses TOML text, applies `section.key=value` overrides, and validates.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Config = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn cat0() -> Self {
        Self::from_toml(CAT0_TOML, &[]).expect("built-in CAT-0 config is valid")
    }

    pub fn nbiot() -> Self {
        Self::from_toml(NBIOT_TOML, &[]).expect("built-in NB-IoT config is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every derived object once so errors surface at load time.
    pub fn validate(&self) -> Result<()> {
        self.channel_params()?;
        self.steering()?;
        self.los()?;
        self.layout()?;
        self.quad().validate()?;
        self.network_spec()?.validate()?;
        self.radio_spec()?.validate()?;
        for name in ["proposed", "sharing", "orthogonal"] {
            self.protocol_config(self.protocol_kind(name)?)?.validate()?;
        }
        self.schemes()?;
        self.lifetime_params().validate()?;
        if !matches!(self.protocol.proposed_power.as_str(), "optimized" | "max") {
            return Err(Error::Config(format!(
                "protocol.proposed_power must be \"optimized\" or \"max\", got {:?}",
                self.protocol.proposed_power
            )));
        }
        if !(self.protection.epsilon > 0.0 && self.protection.epsilon < 1.0) {
            return Err(Error::Config("protection.epsilon must lie in (0, 1)".into()));
        }
        if self.scenario.trials == 0 {
            return Err(Error::Config("scenario.trials must be at least 1".into()));
        }
        Ok(())
    }

    /// BS density: `1/(π r²)` for Poisson sites, one site per hexagon for the lattice.
    pub fn lambda_b(&self) -> f64 {
        if self.network.layout == "hexagonal" {
            2.0 / (3f64.sqrt() * self.network.hex_isd_m.powi(2))
        } else {
            1.0 / (std::f64::consts::PI * self.network.cell_radius_m.powi(2))
        }
    }

    pub fn channel_params(&self) -> Result<ChannelParams<f64>> {
        let c = &self.channel;
        ChannelParams::from_db(
            c.alpha_g,
            c.alpha_a,
            c.l0_db,
            c.l_nlos_db,
            c.l_str_db,
            c.xi1_m,
            c.xi2_m,
            self.radio.bs_antennas,
            self.radio.streams_per_bs,
        )
    }

    pub fn steering(&self) -> Result<Steering> {
        match self.channel.steering.as_str() {
            "whole_link" => Ok(Steering::WholeLink),
            "nlos_only" => Ok(Steering::NlosOnly),
            s => Err(Error::Config(format!("channel.steering must be \"whole_link\" or \"nlos_only\", got {s:?}"))),
        }
    }

    fn los(&self) -> Result<&'static str> {
        match self.channel.los_mode.as_str() {
            "sampled" => Ok("sampled"),
            "expected" => Ok("expected"),
            "mean" => Ok("mean"),
            s => Err(Error::Config(format!("channel.los_mode must be sampled, expected or mean, got {s:?}"))),
        }
    }

    fn layout(&self) -> Result<Layout> {
        match self.network.layout.as_str() {
            "poisson" => Ok(Layout::Poisson),
            "hexagonal" => Ok(Layout::Hexagonal { isd: self.network.hex_isd_m }),
            s => Err(Error::Config(format!("network.layout must be \"poisson\" or \"hexagonal\", got {s:?}"))),
        }
    }

    pub fn quad(&self) -> QuadratureCfg<f64> {
        let q = &self.quadrature;
        QuadratureCfg { abs_tol: q.abs_tol, rel_tol: q.rel_tol, max_subdivisions: q.max_subdivisions, t_max: q.t_max }
    }

    pub fn densities(&self) -> Densities<f64> {
        let lb = self.lambda_b();
        let n = &self.network;
        Densities {
            lambda_b: lb,
            lambda_u: n.ues_per_bs * lb,
            lambda_d: n.drones_per_bs * lb,
            lambda_cl: n.clusters_per_bs * lb,
            lambda_m: n.devices_per_cluster,
        }
    }

    pub fn protocol_config(&self, kind: ProtocolKind<f64>) -> Result<ProtocolConfig<f64>> {
        Ok(ProtocolConfig {
            kind,
            t1: self.radio.t1,
            t2: self.radio.t2,
            bandwidth: self.radio.bandwidth_hz,
            u_b: self.radio.streams_per_bs,
        })
    }

    pub fn protocol_kind(&self, name: &str) -> Result<ProtocolKind<f64>> {
        Ok(match name {
            "proposed" => ProtocolKind::Proposed,
            "terrestrial" => ProtocolKind::Terrestrial,
            "sharing" => ProtocolKind::Sharing { kappa: self.protocol.kappa },
            "benchmark" => ProtocolKind::Sharing { kappa: 0.0 },
            "orthogonal" => ProtocolKind::Orthogonal {
                w_u: self.protocol.orthogonal_ue_fraction * self.radio.bandwidth_hz,
            },
            s => return Err(Error::Config(format!("unknown scheme {s:?}"))),
        })
    }

    pub fn scheme(&self, name: &str) -> Result<Scheme> {
        Ok(match name {
            "benchmark" => Scheme::Benchmark,
            "proposed" => Scheme::Proposed,
            "terrestrial" => Scheme::Terrestrial,
            "sharing" => Scheme::Sharing { kappa: self.protocol.kappa },
            "orthogonal" => Scheme::Orthogonal { w_u: self.protocol.orthogonal_ue_fraction * self.radio.bandwidth_hz },
            s => return Err(Error::Config(format!("protocol.schemes: unknown scheme {s:?}"))),
        })
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>> {
        if self.protocol.schemes.is_empty() {
            return Err(Error::Config("protocol.schemes must not be empty".into()));
        }
        self.protocol.schemes.iter().map(|s| self.scheme(s)).collect()
    }

    /// Single-cell problem at drone height `h_d` and BS power `p_b` (W).
    pub fn scsd_problem_at(&self, h_d: f64, p_b: f64) -> Result<ScSdProblem<f64>> {
        let ch = self.channel_params()?;
        let lb = self.lambda_b();
        let d = self.densities();
        let consts =
            DerivedConstants::new(&ch, self.network.cluster_radius_m, h_d, lb, self.steering()?, &self.quad())?;
        let beta = self.radio.bandwidth_hz * self.radio.t2 / d.lambda_m;
        let p = ScSdProblem {
            lambda_b: lb,
            lambda_u: d.lambda_u,
            p_b,
            u_b: ch.psi_b,
            delta_b: ch.delta_b,
            radius: self.network.cluster_radius_m,
            h_d,
            consts,
            thresholds: self.iot.thresholds_db.iter().map(|&t| db_to_linear(t)).collect(),
            p_cp: self.iot.circuit_power_w,
            eta: self.iot.pa_efficiency,
            p_n: noise_power_watts(self.radio.noise_psd_dbm_per_hz, self.radio.bandwidth_hz),
            rho: db_to_linear(self.protection.rho_db),
            epsilon: self.protection.epsilon,
            p_min: dbm_to_watts(self.iot.p_min_dbm),
            p_max: dbm_to_watts(self.iot.p_max_dbm),
            beta_iot: beta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn scsd_problem(&self) -> Result<ScSdProblem<f64>> {
        self.scsd_problem_at(self.iot.drone_height_m, dbm_to_watts(self.radio.bs_power_dbm))
    }

    pub fn scmd_problem(&self) -> Result<ScMdProblem<f64>> {
        let base = self.scsd_problem()?;
        let ch = self.channel_params()?;
        let tiers = self
            .multi
            .tier_heights_m
            .iter()
            .map(|&h| Tier::new(&ch, self.network.cluster_radius_m, h, self.lambda_b(), self.steering()?, &self.quad()))
            .collect::<Result<Vec<_>>>()?;
        let p = ScMdProblem { base, tiers };
        p.validate()?;
        Ok(p)
    }

    /// Downlink coverage query at threshold `tau_db` with `ratio` drones per BS.
    pub fn coverage_query(&self, tau_db: f64, ratio: f64) -> Result<CoverageQuery<f64>> {
        let ch = self.channel_params()?;
        let lb = self.lambda_b();
        let q = CoverageQuery {
            tau: db_to_linear(tau_db),
            lambda_b: lb,
            lambda_d: ratio * lb,
            p_b: dbm_to_watts(self.radio.bs_power_dbm),
            p_m: dbm_to_watts(self.coverage.iot_power_dbm),
            u_b: ch.psi_b,
            delta_b: ch.delta_b,
            psi_b: ch.psi_b,
            alpha_g: ch.alpha_g,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn network_spec(&self) -> Result<NetworkSpec> {
        let d = self.densities();
        Ok(NetworkSpec {
            lambda_b: d.lambda_b,
            lambda_u: d.lambda_u,
            lambda_cl: d.lambda_cl,
            lambda_d: d.lambda_d,
            lambda_m: d.lambda_m,
            cluster_radius: self.network.cluster_radius_m,
            aggregator_height: self.iot.drone_height_m,
            window_factor: self.network.window_factor,
            wrap: self.network.wrap,
            layout: self.layout()?,
        })
    }

    pub fn radio_spec(&self) -> Result<RadioSpec> {
        let ch = self.channel_params()?;
        let los = match self.los()? {
            "sampled" => LinkLos::Sampled,
            "expected" => LinkLos::Expected,
            _ => {
                let c = DerivedConstants::new(
                    &ch,
                    self.network.cluster_radius_m,
                    self.iot.drone_height_m,
                    self.lambda_b(),
                    self.steering()?,
                    &self.quad(),
                )?;
                LinkLos::Mean { m2d: c.p_los_m, b2d: c.p_los_b }
            }
        };
        Ok(RadioSpec {
            channel: ch,
            los,
            shadowing_sigma_db: self.channel.shadowing_sigma_db,
            fast_fading: self.channel.fast_fading,
            bandwidth: self.radio.bandwidth_hz,
            t1: self.radio.t1,
            t2: self.radio.t2,
            noise_psd_dbm_per_hz: self.radio.noise_psd_dbm_per_hz,
            p_b: dbm_to_watts(self.radio.bs_power_dbm),
            p_ue: dbm_to_watts(self.radio.ue_power_dbm),
            p_iot_min: dbm_to_watts(self.iot.p_min_dbm),
            p_iot_max: dbm_to_watts(self.iot.p_max_dbm),
            p_cp: self.iot.circuit_power_w,
            eta: self.iot.pa_efficiency,
            ue_thresholds: self.radio.ue_thresholds_db.iter().map(|&t| db_to_linear(t)).collect(),
            iot_thresholds: self.iot.thresholds_db.iter().map(|&t| db_to_linear(t)).collect(),
            terrestrial_height: self.iot.terrestrial_height_m,
            fpc_factor: self.iot.fpc.then_some(self.iot.fpc_factor),
            measured_ues: self.montecarlo.measured_ues,
            measured_devices: self.montecarlo.measured_devices,
        })
    }

    /// Nominal IoT power of the proposed scheme: the single-cell optimum or `p_max`.
    pub fn proposed_power(&self) -> Result<f64> {
        if self.protocol.proposed_power == "max" {
            return Ok(dbm_to_watts(self.iot.p_max_dbm));
        }
        Ok(self.scsd_problem()?.solve()?.p_star)
    }

    /// Campaign over the configured schemes with their nominal powers.
    pub fn campaign_spec(&self) -> Result<CampaignSpec> {
        let baseline = dbm_to_watts(self.protocol.baseline_power_dbm);
        let mut proposed = None;
        let runs = self
            .schemes()?
            .into_iter()
            .map(|scheme| -> Result<SchemeRun> {
                let iot_power = match scheme {
                    Scheme::Proposed => *match &proposed {
                        Some(p) => p,
                        None => proposed.insert(self.proposed_power()?),
                    },
                    _ => baseline,
                };
                Ok(SchemeRun { scheme, iot_power })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CampaignSpec {
            network: self.network_spec()?,
            radio: self.radio_spec()?,
            runs,
            trials: self.scenario.trials,
            seed: self.scenario.seed,
            batches: self.montecarlo.batches,
        })
    }

    pub fn lifetime_params(&self) -> LifetimeParams {
        let l = &self.lifetime;
        LifetimeParams {
            battery_wh: l.battery_wh,
            report_bits: l.report_bytes * 8.0,
            reports_per_day: l.reports_per_day,
            p_rx: l.p_rx_w,
            p_idle: l.p_idle_w,
            p_sleep: l.p_sleep_w,
            t_rx: l.t_rx_s,
            t_idle: l.t_idle_s,
            t_sleep: l.t_sleep_s,
        }
    }
}
