use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uavnet::config::Config;
use uavnet::geometry::{ClusterSet, DronePlan, Point2, PointSet, Window};
use uavnet::montecarlo::{realize, NetworkRealization};
use uavnet::resources::{
    scheduler_oracle, shares, shares_orthogonal, shares_proposed, shares_sharing, Densities, ProtocolConfig,
    ProtocolKind,
};

const W: f64 = 20e6;

fn cfg(kind: ProtocolKind<f64>, u_b: u32) -> ProtocolConfig<f64> {
    ProtocolConfig { kind, t1: 0.5, t2: 0.5, bandwidth: W, u_b }
}

fn dens(lambda_b: f64, ue: f64, drones: f64, per_cluster: f64) -> Densities<f64> {
    Densities {
        lambda_b,
        lambda_u: ue * lambda_b,
        lambda_d: drones * lambda_b,
        lambda_cl: drones * lambda_b,
        lambda_m: per_cluster,
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

#[test]
fn proposed_arithmetic() {
    let s = shares_proposed(&dens(1e-5, 5.0, 1.0, 20.0), &cfg(ProtocolKind::Proposed, 4)).unwrap();
    assert!(close(s.ue_ul, 20e6 * 4.0 * 0.5 / 6.0));
    assert!(close(s.ue_dl, 20e6 * 4.0 * 0.5 / 5.0));
    assert!(close(s.iot, 0.5e6));
    let none = shares_proposed(&dens(1e-5, 5.0, 0.0, 20.0), &cfg(ProtocolKind::Proposed, 4)).unwrap();
    assert!(close(none.ue_ul, W * 4.0 * 0.5 / 5.0));
}

#[test]
fn sharing_limits() {
    let d = dens(1e-5, 50.0, 5.0, 30.0);
    let c = cfg(ProtocolKind::Sharing { kappa: 0.0 }, 4);
    let s = shares_sharing(&d, &c, 0.0).unwrap();
    assert_eq!(s.iot, 0.0);
    assert!(close(s.ue_ul, W * 4.0 * 0.5 / 50.0));
    // κ = 1: every device is an ordinary contender.
    let one = shares_sharing(&d, &c, 1.0).unwrap();
    assert!(close(one.ue_ul, W * 4.0 * 0.5 / (50.0 + 150.0)));
    assert_eq!(one.iot, one.ue_ul);
    assert!(shares_sharing(&d, &c, 1.5).is_err());
}

#[test]
fn orthogonal_limits_and_arithmetic() {
    let d = dens(1e-5, 50.0, 5.0, 30.0);
    let full = shares_orthogonal(&d, &cfg(ProtocolKind::Orthogonal { w_u: W }, 4), W).unwrap();
    assert_eq!(full.iot, 0.0);
    let half = shares_orthogonal(&d, &cfg(ProtocolKind::Orthogonal { w_u: W / 2.0 }, 4), W / 2.0).unwrap();
    assert!(close(half.ue_ul, 10e6 * 4.0 * 0.5 / 50.0));
    assert!(close(half.iot, 10e6 * 4.0 * 0.5 / 150.0));
}

#[test]
fn missing_typical_device_is_an_error() {
    let c = cfg(ProtocolKind::Proposed, 4);
    assert!(shares(&dens(1e-5, 0.0, 5.0, 30.0), &c).is_err());
    assert!(shares(&dens(1e-5, 50.0, 5.0, 0.0), &c).is_err());
}

proptest! {
    #[test]
    fn comparison_conditions_hold(
        ue in 40.0..200.0_f64,
        drones in 0.5..20.0_f64,
        per_cluster in 1.5..100.0_f64,
        k_frac in 0.01..0.99_f64,
        w_frac in 0.01..0.99_f64,
        u_b in 1u32..5,
    ) {
        let d = dens(1e-5, ue.max(10.0 * f64::from(u_b)), drones, per_cluster);
        let c = cfg(ProtocolKind::Proposed, u_b);
        let p = shares_proposed(&d, &c).unwrap();
        let kappa = k_frac / per_cluster;
        let s = shares_sharing(&d, &c, kappa).unwrap();
        prop_assert!(s.ue_ul > p.ue_ul);
        let lo = d.lambda_u / (d.lambda_u + d.lambda_d);
        let w_u = W * (lo + w_frac * (1.0 - lo));
        let o = shares_orthogonal(&d, &c, w_u).unwrap();
        prop_assert!(o.ue_ul > p.ue_ul);
        for r in [p, s, o] {
            prop_assert!(r.ue_ul >= 0.0 && r.ue_dl >= 0.0 && r.iot >= 0.0);
        }
    }
}

fn toy(bs: Vec<Point2>, ue: Vec<Point2>, ue_bs: Vec<usize>) -> NetworkRealization {
    NetworkRealization {
        window: Window::new(1000.0, false).unwrap(),
        bs: PointSet { points: bs },
        ue: PointSet { points: ue },
        clusters: ClusterSet { parents: PointSet::default(), daughters: vec![], radius: 50.0, mean_per_cluster: 0.0 },
        drones: DronePlan { stop_points: vec![], cluster_index: vec![] },
        ue_bs,
        drone_bs: vec![],
        iot_bs: vec![],
    }
}

#[test]
fn two_users_split_one_stream() {
    let real = toy(vec![Point2::new(0.0, 0.0)], vec![Point2::new(10.0, 0.0), Point2::new(-10.0, 0.0)], vec![0, 0]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let e = scheduler_oracle(&real, &cfg(ProtocolKind::Proposed, 1), 100, &mut rng).unwrap();
    assert_eq!(e.ue_samples, 2);
    assert!(close(e.shares.ue_ul, W * 0.5 / 2.0));
    assert!(close(e.shares.ue_dl, W * 0.5 / 2.0));
}

#[test]
fn empty_cells_add_no_samples() {
    let bs = vec![Point2::new(0.0, 0.0), Point2::new(300.0, 0.0)];
    let real = toy(bs, vec![Point2::new(10.0, 0.0)], vec![0]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let e = scheduler_oracle(&real, &cfg(ProtocolKind::Proposed, 1), 10, &mut rng).unwrap();
    assert_eq!(e.ue_samples, 1);
    assert!(close(e.shares.ue_ul, W * 0.5));
    assert!(scheduler_oracle(&toy(vec![], vec![], vec![]), &cfg(ProtocolKind::Proposed, 1), 10, &mut rng).is_err());
}

#[test]
fn oracle_runs_on_sampled_topologies() {
    let c = Config::cat0();
    let spec = c.network_spec().unwrap();
    for t in 0..3 {
        let real = realize(&spec, 5, t).unwrap();
        for name in ["proposed", "sharing", "orthogonal", "benchmark"] {
            let pc = c.protocol_config(c.protocol_kind(name).unwrap()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(t);
            let e = scheduler_oracle(&real, &pc, 50, &mut rng).unwrap();
            assert!(e.ue_samples > 0);
            let s = e.shares;
            assert!(s.ue_ul <= W * 4.0 * 0.5 && s.ue_ul >= 0.0 && s.ue_dl >= 0.0);
            assert!(s.iot >= 0.0 && s.iot <= W * 0.5);
        }
    }
}
