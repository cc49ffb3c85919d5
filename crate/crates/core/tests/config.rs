use uavnet::config::{Config, CAT0_TOML, NBIOT_TOML};

#[test]
fn builtins_are_valid() {
    for text in [CAT0_TOML, NBIOT_TOML] {
        Config::from_toml(text, &[]).unwrap();
    }
}

#[test]
fn round_trip_preserves_everything() {
    for cfg in [Config::cat0(), Config::nbiot()] {
        let back = Config::from_toml(&cfg.to_toml(), &[]).unwrap();
        assert_eq!(back, cfg);
    }
}

#[test]
fn overrides_replace_values() {
    let cfg = Config::from_toml(CAT0_TOML, &["iot.drone_height_m=120".into(), "network.layout=hexagonal".into()]).unwrap();
    assert_eq!(cfg.iot.drone_height_m, 120.0);
    assert_eq!(cfg.network.layout, "hexagonal");
}

#[test]
fn unknown_keys_are_named() {
    let e = Config::from_toml(CAT0_TOML, &["iot.height=3".into()]).unwrap_err().to_string();
    assert!(e.contains("iot.height"), "{e}");
    let e = Config::from_toml(CAT0_TOML, &["nosuch.key=3".into()]).unwrap_err().to_string();
    assert!(e.contains("nosuch"), "{e}");
    let e = Config::from_toml(CAT0_TOML, &["no_equals_sign".into()]).unwrap_err().to_string();
    assert!(e.contains("no_equals_sign"), "{e}");
}

#[test]
fn missing_key_is_rejected() {
    let text: String = CAT0_TOML.lines().filter(|l| !l.starts_with("bs_power_dbm")).collect::<Vec<_>>().join("\n");
    let e = Config::from_toml(&text, &[]).unwrap_err().to_string();
    assert!(e.contains("bs_power_dbm"), "{e}");
}

#[test]
fn out_of_range_values_are_rejected() {
    for o in ["radio.t1=0.7", "iot.pa_efficiency=1.5", "protocol.kappa=2", "network.drones_per_bs=3"] {
        assert!(Config::from_toml(CAT0_TOML, &[o.into()]).is_err(), "{o}");
    }
}

#[test]
fn bs_density_from_cell_radius_and_lattice() {
    let cfg = Config::cat0();
    let r = cfg.network.cell_radius_m;
    assert!((cfg.lambda_b() * std::f64::consts::PI * r * r - 1.0).abs() < 1e-12);
    // One hexagonal cell of inter-site distance 500 m covers (√3/2)·500² m².
    let hex = Config::from_toml(CAT0_TOML, &["network.layout=hexagonal".into(), "network.hex_isd_m=500".into()]).unwrap();
    assert!((hex.lambda_b() - 4.6188e-6).abs() < 1e-9);
}
