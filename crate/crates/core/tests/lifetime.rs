use uavnet::lifetime::{daily_energy, lifetime_campaign, lifetime_years, tx_duration, tx_power, LifetimeParams};
use uavnet::montecarlo::TrialMetrics;
use uavnet::units::dbm_to_watts;

const TAU: [f64; 4] = [0.316_227_766_016_837_94, 1.0, 3.162_277_660_168_379_5, 10.0];

#[test]
fn idle_floor_matches_hand_calculation() {
    let p = LifetimeParams::nb_iot();
    // 12·(0.565·0.09 + 22.451·0.003) + 86400·1.5e-5
    let e = daily_energy(&p, 0.0, 0.0);
    assert!((e - 2.714436).abs() < 1e-12);
    assert!((lifetime_years(&p, e) - 18.167_703_527_786_5).abs() < 1e-9);
}

#[test]
fn transmit_power_at_23_dbm() {
    let p: f64 = tx_power(0.09, 0.44, dbm_to_watts(23.0));
    assert!((p - 0.5435).abs() < 5e-5, "{p}");
}

#[test]
fn duration_scales_with_rate() {
    let bits = 229.0 * 8.0;
    let a = tx_duration(bits, 1e5, 2.0, &TAU).unwrap();
    let b = tx_duration(bits, 2e5, 2.0, &TAU).unwrap();
    assert!((a / b - 2.0).abs() < 1e-12);
    // SINR 2 falls in the 0 dB bracket: one bit per second per hertz.
    assert!((a - bits / 1e5).abs() < 1e-12);
}

#[test]
fn below_first_threshold_is_censored() {
    assert!(tx_duration(1832.0, 1e5, 0.3, &TAU).is_none());
    let devices = TrialMetrics {
        iot_sinr: vec![0.3, 2.0, 50.0],
        iot_share: vec![1e5; 3],
        iot_power: vec![0.1; 3],
        ..Default::default()
    };
    let d = lifetime_campaign(&devices, &LifetimeParams::nb_iot(), 0.09, 0.44, &TAU).unwrap();
    assert_eq!(d.censored, 1);
    assert_eq!(d.total(), 3);
    assert!(d.years[0] <= d.years[1]);
}

#[test]
fn reports_add_linearly() {
    let mut p = LifetimeParams::nb_iot();
    let (t, ptx) = (0.2, 0.5435);
    let e1 = daily_energy(&p, t, ptx);
    p.reports_per_day *= 2.0;
    let e2 = daily_energy(&p, t, ptx);
    let per_report = t * ptx + p.t_rx * p.p_rx + p.t_idle * p.p_idle;
    assert!((e2 - e1 - 12.0 * per_report).abs() < 1e-12);
}

#[test]
fn mismatched_inputs_are_rejected() {
    let devices = TrialMetrics { iot_sinr: vec![1.0], ..Default::default() };
    assert!(lifetime_campaign(&devices, &LifetimeParams::nb_iot(), 0.09, 0.44, &TAU).is_err());
    let mut bad = LifetimeParams::nb_iot();
    bad.battery_wh = 0.0;
    assert!(bad.validate().is_err());
}
