//! Sampling one complete topology with its association maps.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{
    hex_lattice, plan_stop_points, sample_hppp, sample_matern, stream_rng, ClusterSet, DronePlan,
    GridIndex, PointSet, Stream, Window,
};

/// BS placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    Poisson,
    /// Deterministic hexagonal lattice with the given inter-site distance in meters.
    Hexagonal { isd: f64 },
}

/// Inputs of [`realize`]. Densities per m²; `lambda_m` is the mean cluster size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkSpec {
    pub lambda_b: f64,
    pub lambda_u: f64,
    pub lambda_cl: f64,
    pub lambda_d: f64,
    pub lambda_m: f64,
    pub cluster_radius: f64,
    /// Height of the aggregator serving each cluster (drone altitude or mast height).
    pub aggregator_height: f64,
    /// Window half-width in units of `1/sqrt(lambda_b)`.
    pub window_factor: f64,
    pub wrap: bool,
    pub layout: Layout,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_b", self.lambda_b),
            ("cluster_radius_m", self.cluster_radius),
            ("aggregator height", self.aggregator_height),
            ("window_factor", self.window_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("lambda_u", self.lambda_u), ("lambda_cl", self.lambda_cl), ("lambda_m", self.lambda_m)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        if (self.lambda_d - self.lambda_cl).abs() > 1e-12 * self.lambda_cl.max(1e-300) {
            return Err(invalid("drones_per_bs", "the simulator assigns one drone per cluster; set it equal to clusters_per_bs"));
        }
        if let Layout::Hexagonal { isd } = self.layout {
            if !(isd > 0.0) {
                return Err(invalid("hex_isd_m", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn window(&self) -> Result<Window> {
        Window::for_density(self.lambda_b, self.window_factor, self.wrap)
    }
}

/// One sampled topology: BSs, UEs, IoT clusters, aggregators, and nearest-receiver maps.
#[derive(Debug, Clone)]
pub struct NetworkRealization {
    pub window: Window,
    pub bs: PointSet,
    pub ue: PointSet,
    pub clusters: ClusterSet,
    pub drones: DronePlan,
    /// Serving BS of each UE.
    pub ue_bs: Vec<usize>,
    /// Serving BS of each aggregator (nearest in the ground plane).
    pub drone_bs: Vec<usize>,
    /// Nearest BS of each IoT device, indexed `[cluster][device]`.
    pub iot_bs: Vec<Vec<usize>>,
}

impl NetworkRealization {
    pub fn n_devices(&self) -> usize {
        self.clusters.device_count()
    }
}

fn sample_bs<R: Rng + ?Sized>(spec: &NetworkSpec, window: &Window, rng: &mut R) -> Result<PointSet> {
    match spec.layout {
        Layout::Poisson => {
            // One resample if the window came out empty.
            for _ in 0..2 {
                let s = sample_hppp(spec.lambda_b, window, rng)?;
                if !s.is_empty() {
                    return Ok(s);
                }
            }
            Err(Error::NoBaseStations)
        }
        Layout::Hexagonal { isd } => {
            let s = hex_lattice(isd, window)?;
            if s.is_empty() { Err(Error::NoBaseStations) } else { Ok(s) }
        }
    }
}

/// Samples trial `trial` of the run keyed by `seed`. Each process uses its own stream.
pub fn realize(spec: &NetworkSpec, seed: u64, trial: u64) -> Result<NetworkRealization> {
    spec.validate()?;
    let window = spec.window()?;
    let bs = sample_bs(spec, &window, &mut stream_rng(seed, trial, Stream::BaseStations))?;
    let ue = sample_hppp(spec.lambda_u, &window, &mut stream_rng(seed, trial, Stream::UserEquipment))?;
    let clusters = sample_matern(
        spec.lambda_cl,
        spec.lambda_m,
        spec.cluster_radius,
        &window,
        &mut stream_rng(seed, trial, Stream::Clusters),
    )?;
    let drones = plan_stop_points(&window, &clusters, spec.aggregator_height);
    let index = GridIndex::new(window, &bs);
    let near = |p| index.nearest(p).map(|(i, _)| i);
    let ue_bs = ue.points.iter().map(|&p| near(p)).collect::<Result<Vec<_>>>()?;
    let drone_bs = drones.stop_points.iter().map(|s| near(s.ground())).collect::<Result<Vec<_>>>()?;
    let iot_bs = clusters
        .daughters
        .iter()
        .map(|d| d.iter().map(|&p| near(p)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkRealization { window, bs, ue, clusters, drones, ue_bs, drone_bs, iot_bs })
}
