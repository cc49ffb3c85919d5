//! Battery lifetime from per-report transmission time and stage energies.

use crate::error::{invalid, Result};
use crate::montecarlo::{bracket_se, quantile_sorted, TrialMetrics};
use crate::scalar::Real;

/// Daily report cycle. Powers in W, durations in s, battery in Wh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeParams {
    pub battery_wh: f64,
    pub report_bits: f64,
    pub reports_per_day: f64,
    pub p_rx: f64,
    pub p_idle: f64,
    pub p_sleep: f64,
    pub t_rx: f64,
    pub t_idle: f64,
    pub t_sleep: f64,
}

impl LifetimeParams {
    /// NB-IoT reference cycle: 5 Wh, 229-byte reports, 12 per day.
    pub fn nb_iot() -> Self {
        Self {
            battery_wh: 5.0,
            report_bits: 229.0 * 8.0,
            reports_per_day: 12.0,
            p_rx: 0.09,
            p_idle: 0.003,
            p_sleep: 1.5e-5,
            t_rx: 0.565,
            t_idle: 22.451,
            t_sleep: 86_400.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lifetime.battery_wh", self.battery_wh),
            ("lifetime.report_bytes", self.report_bits),
            ("lifetime.reports_per_day", self.reports_per_day),
            ("lifetime.p_rx_w", self.p_rx),
            ("lifetime.p_idle_w", self.p_idle),
            ("lifetime.p_sleep_w", self.p_sleep),
            ("lifetime.t_rx_s", self.t_rx),
            ("lifetime.t_idle_s", self.t_idle),
            ("lifetime.t_sleep_s", self.t_sleep),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Seconds to send `bits` over a share of `share_hz` at the spectral efficiency of the
/// highest threshold `sinr` meets. `None` when the rate is zero.
pub fn tx_duration<T: Real>(bits: T, share_hz: T, sinr: T, thresholds: &[T]) -> Option<T> {
    let se = match thresholds.iter().rposition(|&t| sinr >= t) {
        Some(k) => (T::one() + thresholds[k]).log2(),
        None => return None,
    };
    let rate = share_hz * se;
    (rate > T::zero()).then(|| bits / rate)
}

/// Transmit-stage power `P_CP + p/η`.
pub fn tx_power<T: Real>(p_cp: T, eta: T, p: T) -> T {
    p_cp + p / eta
}

/// Joules per day: `N_rep(T_TX P_TX + T_RX P_RX + T_I P_I) + T_S P_S`.
pub fn daily_energy(params: &LifetimeParams, t_tx: f64, p_tx: f64) -> f64 {
    params.reports_per_day * (t_tx * p_tx + params.t_rx * params.p_rx + params.t_idle * params.p_idle)
        + params.t_sleep * params.p_sleep
}

/// Years of operation on one battery: `(C/E)·3600/365`.
pub fn lifetime_years(params: &LifetimeParams, energy_j_per_day: f64) -> f64 {
    params.battery_wh / energy_j_per_day * 3600.0 / 365.0
}

/// Lifetime distribution over devices; zero-rate devices are counted but excluded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LifetimeDistribution {
    /// Ascending lifetimes in years.
    pub years: Vec<f64>,
    pub censored: usize,
}

impl LifetimeDistribution {
    pub fn total(&self) -> usize {
        self.years.len() + self.censored
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.total() == 0 { 0.0 } else { self.censored as f64 / self.total() as f64 }
    }

    pub fn quantile(&self, q: f64) -> f64 {
        quantile_sorted(&self.years, q)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn iqr(&self) -> f64 {
        self.quantile(0.75) - self.quantile(0.25)
    }
}

/// Lifetimes of the devices in `devices` (per-device SINR, share and power).
pub fn lifetime_campaign(
    devices: &TrialMetrics,
    params: &LifetimeParams,
    p_cp: f64,
    eta: f64,
    thresholds: &[f64],
) -> Result<LifetimeDistribution> {
    params.validate()?;
    let n = devices.iot_sinr.len();
    if devices.iot_share.len() != n || devices.iot_power.len() != n {
        return Err(invalid("devices", "SINR, share and power vectors differ in length"));
    }
    let mut out = LifetimeDistribution::default();
    for i in 0..n {
        // Same bracket as the rate computation in the simulation.
        debug_assert_eq!(bracket_se(devices.iot_sinr[i], thresholds) > 0.0, devices.iot_sinr[i] >= thresholds[0]);
        match tx_duration(params.report_bits, devices.iot_share[i], devices.iot_sinr[i], thresholds) {
            Some(t) => {
                let e = daily_energy(params, t, tx_power(p_cp, eta, devices.iot_power[i]));
                out.years.push(lifetime_years(params, e));
            }
            None => out.censored += 1,
        }
    }
    out.years.sort_by(f64::total_cmp);
    Ok(out)
}
