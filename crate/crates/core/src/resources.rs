//! Average time-frequency-space shares per device under each access protocol,
//! and a frame-level round-robin scheduler used to check them.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::montecarlo::NetworkRealization;
use crate::scalar::Real;

/// Access protocol for IoT traffic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProtocolKind<T> {
    /// IoT uplink to drones during the downlink slot; drones relay in the uplink slot.
    Proposed,
    /// IoT devices contend with UEs for uplink resources, admitted with probability κ.
    Sharing { kappa: T },
    /// Uplink band split: `w_u` Hz for UEs, the rest for IoT.
    Orthogonal { w_u: T },
    /// Proposed slot structure with ground-mounted aggregators.
    Terrestrial,
}

impl<T: Real> ProtocolKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Proposed => "proposed",
            Self::Sharing { .. } => "sharing",
            Self::Orthogonal { .. } => "orthogonal",
            Self::Terrestrial => "terrestrial",
        }
    }

    /// Whether IoT devices transmit in the downlink slot towards an aggregator.
    pub fn uses_aggregators(&self) -> bool {
        matches!(self, Self::Proposed | Self::Terrestrial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig<T> {
    pub kind: ProtocolKind<T>,
    pub t1: T,
    pub t2: T,
    /// System bandwidth W in Hz.
    pub bandwidth: T,
    pub u_b: u32,
}

impl<T: Real> ProtocolConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        if self.t1 < z || self.t2 < z || ((self.t1 + self.t2) - T::one()).abs() > T::lit(1e-9) {
            return Err(invalid("t1", "t1 and t2 must be non-negative and sum to 1"));
        }
        if !(self.bandwidth > z) {
            return Err(invalid("bandwidth_hz", "must be positive"));
        }
        if self.u_b == 0 {
            return Err(invalid("u_b", "must be at least 1"));
        }
        match self.kind {
            ProtocolKind::Sharing { kappa } if !(kappa >= z && kappa <= T::one()) => {
                Err(invalid("kappa", "must lie in [0, 1]"))
            }
            ProtocolKind::Orthogonal { w_u } if !(w_u >= z && w_u <= self.bandwidth) => {
                Err(invalid("orthogonal_ue_fraction", "UE band must lie in [0, W]"))
            }
            _ => Ok(()),
        }
    }
}

/// Densities in points per m², except `lambda_m` which is the mean devices per cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Densities<T> {
    pub lambda_b: T,
    pub lambda_u: T,
    pub lambda_d: T,
    pub lambda_cl: T,
    pub lambda_m: T,
}

impl<T: Real> Densities<T> {
    fn check(&self) -> Result<()> {
        if !(self.lambda_b > T::zero()) {
            return Err(invalid("lambda_b", "must be positive"));
        }
        if !(self.lambda_u > T::zero()) {
            return Err(invalid("lambda_u", "typical-UE shares need a positive UE density"));
        }
        if !(self.lambda_m > T::zero()) {
            return Err(invalid("lambda_m", "typical-device shares need a positive cluster size"));
        }
        if self.lambda_d < T::zero() || self.lambda_cl < T::zero() {
            return Err(invalid("lambda_d", "densities must be non-negative"));
        }
        Ok(())
    }
}

/// Pre-log resource terms in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResourceShares<T> {
    pub ue_ul: T,
    pub ue_dl: T,
    pub iot: T,
}

fn u<T: Real>(cfg: &ProtocolConfig<T>) -> T {
    T::lit(f64::from(cfg.u_b))
}

pub fn shares_proposed<T: Real>(d: &Densities<T>, cfg: &ProtocolConfig<T>) -> Result<ResourceShares<T>> {
    d.check()?;
    cfg.validate()?;
    let w = cfg.bandwidth;
    Ok(ResourceShares {
        ue_ul: w * u(cfg) * cfg.t1 * d.lambda_b / (d.lambda_u + d.lambda_d),
        ue_dl: w * u(cfg) * cfg.t2 * d.lambda_b / d.lambda_u,
        iot: w * cfg.t2 / d.lambda_m,
    })
}

pub fn shares_sharing<T: Real>(
    d: &Densities<T>,
    cfg: &ProtocolConfig<T>,
    kappa: T,
) -> Result<ResourceShares<T>> {
    d.check()?;
    cfg.validate()?;
    if !(kappa >= T::zero() && kappa <= T::one()) {
        return Err(invalid("kappa", "must lie in [0, 1]"));
    }
    let w = cfg.bandwidth;
    let ul = w * u(cfg) * cfg.t1 * d.lambda_b / (d.lambda_u + kappa * d.lambda_m * d.lambda_cl);
    Ok(ResourceShares { ue_ul: ul, ue_dl: w * u(cfg) * cfg.t2 * d.lambda_b / d.lambda_u, iot: kappa * ul })
}

pub fn shares_orthogonal<T: Real>(
    d: &Densities<T>,
    cfg: &ProtocolConfig<T>,
    w_u: T,
) -> Result<ResourceShares<T>> {
    d.check()?;
    cfg.validate()?;
    if !(w_u >= T::zero() && w_u <= cfg.bandwidth) {
        return Err(invalid("orthogonal_ue_fraction", "UE band must lie in [0, W]"));
    }
    let iot_density = d.lambda_m * d.lambda_cl;
    let iot = if iot_density > T::zero() {
        (cfg.bandwidth - w_u) * u(cfg) * cfg.t1 * d.lambda_b / iot_density
    } else {
        T::zero()
    };
    Ok(ResourceShares {
        ue_ul: w_u * u(cfg) * cfg.t1 * d.lambda_b / d.lambda_u,
        ue_dl: cfg.bandwidth * u(cfg) * cfg.t2 * d.lambda_b / d.lambda_u,
        iot,
    })
}

/// Shares under the protocol in `cfg.kind`. The benchmark (no IoT) is `Sharing { kappa: 0 }`.
pub fn shares<T: Real>(d: &Densities<T>, cfg: &ProtocolConfig<T>) -> Result<ResourceShares<T>> {
    match cfg.kind {
        ProtocolKind::Proposed | ProtocolKind::Terrestrial => shares_proposed(d, cfg),
        ProtocolKind::Sharing { kappa } => shares_sharing(d, cfg, kappa),
        ProtocolKind::Orthogonal { w_u } => shares_orthogonal(d, cfg, w_u),
    }
}

/// Empirical shares from the scheduler together with the number of devices measured.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EmpiricalShares {
    pub shares: ResourceShares<f64>,
    pub ue_samples: usize,
    pub iot_samples: usize,
}

/// Round-robin over a contender list: each frame hands `slots` resource units to the
/// next contenders in cyclic order. Returns per-contender unit counts.
fn round_robin(n: usize, slots: usize, frames: usize) -> Vec<u64> {
    let mut got = vec![0_u64; n];
    if n == 0 {
        return got;
    }
    let mut ptr = 0;
    let per_frame = slots.min(n);
    for _ in 0..frames {
        for _ in 0..per_frame {
            got[ptr] += 1;
            ptr = (ptr + 1) % n;
        }
    }
    got
}

/// Simulates `n_frames` TDD frames of per-cell round-robin scheduling with the actual
/// per-cell populations of `real`, returning the long-run share of the average device
/// in the central sub-window.
///
/// Each uplink slot offers `U_B` spatial streams of the slot bandwidth; each downlink slot
/// serves `U_B` UEs. Under the aggregator protocols every drone serves one device of its
/// cluster per frame over the whole band. Sharing-protocol devices pass the admission gate
/// independently every frame.
pub fn scheduler_oracle<R: Rng + ?Sized>(
    real: &NetworkRealization,
    cfg: &ProtocolConfig<f64>,
    n_frames: usize,
    rng: &mut R,
) -> Result<EmpiricalShares> {
    cfg.validate()?;
    if real.bs.is_empty() {
        return Err(crate::Error::NoBaseStations);
    }
    if n_frames == 0 {
        return Err(invalid("n_frames", "must be positive"));
    }
    let n_bs = real.bs.len();
    let ub = cfg.u_b as usize;
    let frames = n_frames as f64;
    let w = cfg.bandwidth;

    let mut ue_by_cell: Vec<Vec<usize>> = vec![Vec::new(); n_bs];
    for (i, &b) in real.ue_bs.iter().enumerate() {
        ue_by_cell[b].push(i);
    }
    let mut drones_by_cell: Vec<usize> = vec![0; n_bs];
    for &b in &real.drone_bs {
        drones_by_cell[b] += 1;
    }
    let mut iot_by_cell: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_bs];
    for (c, devs) in real.iot_bs.iter().enumerate() {
        for (k, &b) in devs.iter().enumerate() {
            iot_by_cell[b].push((c, k));
        }
    }

    // The band split only applies to the uplink slot.
    let (w_ul, w_dl) = match cfg.kind {
        ProtocolKind::Orthogonal { w_u } => (w_u, w),
        _ => (w, w),
    };

    let mut ue_ul = vec![0.0; real.ue.len()];
    let mut ue_dl = vec![0.0; real.ue.len()];
    let mut iot: Vec<Vec<f64>> = real.clusters.daughters.iter().map(|d| vec![0.0; d.len()]).collect();

    for cell in 0..n_bs {
        let ues = &ue_by_cell[cell];
        // Downlink: U_B UEs per frame.
        for (&i, &n) in ues.iter().zip(&round_robin(ues.len(), ub, n_frames)) {
            ue_dl[i] = w_dl * cfg.t2 * n as f64 / frames;
        }
        match cfg.kind {
            ProtocolKind::Proposed | ProtocolKind::Terrestrial => {
                // UEs and drones contend for the uplink streams.
                let n = ues.len() + drones_by_cell[cell];
                let got = round_robin(n, ub, n_frames);
                for (&i, &g) in ues.iter().zip(&got) {
                    ue_ul[i] = w_ul * cfg.t1 * g as f64 / frames;
                }
            }
            ProtocolKind::Orthogonal { w_u } => {
                let got = round_robin(ues.len(), ub, n_frames);
                for (&i, &g) in ues.iter().zip(&got) {
                    ue_ul[i] = w_u * cfg.t1 * g as f64 / frames;
                }
                let devs = &iot_by_cell[cell];
                let got = round_robin(devs.len(), ub, n_frames);
                for (&(c, k), &g) in devs.iter().zip(&got) {
                    iot[c][k] = (w - w_u) * cfg.t1 * g as f64 / frames;
                }
            }
            ProtocolKind::Sharing { kappa } => {
                let devs = &iot_by_cell[cell];
                let n = ues.len() + devs.len();
                let mut got = vec![0_u64; n];
                let mut ptr = 0_usize;
                let mut active = Vec::with_capacity(n);
                for _ in 0..n_frames {
                    active.clear();
                    active.extend(0..ues.len());
                    for j in 0..devs.len() {
                        if kappa >= 1.0 || rng.random::<f64>() < kappa {
                            active.push(ues.len() + j);
                        }
                    }
                    if active.is_empty() {
                        continue;
                    }
                    // Serve the next contenders in global cyclic order among the active ones.
                    let start = active.partition_point(|&a| a < ptr);
                    let take = ub.min(active.len());
                    for s in 0..take {
                        let who = active[(start + s) % active.len()];
                        got[who] += 1;
                        ptr = who + 1;
                    }
                    if ptr >= n {
                        ptr = 0;
                    }
                }
                for (&i, &g) in ues.iter().zip(&got) {
                    ue_ul[i] = w * cfg.t1 * g as f64 / frames;
                }
                for (&(c, k), &g) in devs.iter().zip(&got[ues.len()..]) {
                    iot[c][k] = w * cfg.t1 * g as f64 / frames;
                }
            }
        }
    }
    if cfg.kind.uses_aggregators() {
        // One device per cluster per frame over the whole band in the downlink slot.
        for (c, devs) in real.clusters.daughters.iter().enumerate() {
            let got = round_robin(devs.len(), 1, n_frames);
            for (k, &g) in got.iter().enumerate() {
                iot[c][k] = w * cfg.t2 * g as f64 / frames;
            }
        }
    }

    // Per-slot conservation: a cell never hands out more than U_B streams per slot.
    debug_assert!(ue_by_cell.iter().all(|c| {
        c.iter().map(|&i| ue_ul[i]).sum::<f64>() <= w * ub as f64 * cfg.t1 * (1.0 + 1e-9)
    }));

    let mut out = EmpiricalShares::default();
    let (mut s_ul, mut s_dl) = (0.0, 0.0);
    for (i, p) in real.ue.points.iter().enumerate() {
        if real.window.in_central(*p) {
            s_ul += ue_ul[i];
            s_dl += ue_dl[i];
            out.ue_samples += 1;
        }
    }
    let mut s_iot = 0.0;
    for (c, devs) in real.clusters.daughters.iter().enumerate() {
        for (k, p) in devs.iter().enumerate() {
            if real.window.in_central(*p) {
                s_iot += iot[c][k];
                out.iot_samples += 1;
            }
        }
    }
    if out.ue_samples > 0 {
        out.shares.ue_ul = s_ul / out.ue_samples as f64;
        out.shares.ue_dl = s_dl / out.ue_samples as f64;
    }
    if out.iot_samples > 0 {
        out.shares.iot = s_iot / out.iot_samples as f64;
    }
    Ok(out)
}
