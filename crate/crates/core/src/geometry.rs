//! Spatial point processes for one network realization.
//!
//! Everything here is `f64`: sampling goes through `rand_distr`, and the
//! simulation loops gain nothing from a generic scalar.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn ground(self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Square observation window `[-half_width, half_width]²`.
///
/// With `wrap` set, distances use the minimum-image (torus) convention so the
/// window has no edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub half_width: f64,
    pub wrap: bool,
}

impl Window {
    pub fn new(half_width: f64, wrap: bool) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid("half_width", format!("must be positive and finite, got {half_width}")));
        }
        Ok(Self { half_width, wrap })
    }

    /// Window sized as `factor / sqrt(density)` half-width.
    pub fn for_density(density: f64, factor: f64, wrap: bool) -> Result<Self> {
        if !(density > 0.0) {
            return Err(invalid("lambda_b", "must be positive"));
        }
        Self::new(factor / density.sqrt(), wrap)
    }

    pub fn side(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn area(&self) -> f64 {
        self.side() * self.side()
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x.abs() <= self.half_width && p.y.abs() <= self.half_width
    }

    /// Half-width of the central sub-window holding half of the window area.
    pub fn central_half_width(&self) -> f64 {
        self.half_width / std::f64::consts::SQRT_2
    }

    pub fn in_central(&self, p: Point2) -> bool {
        let c = self.central_half_width();
        p.x.abs() <= c && p.y.abs() <= c
    }

    fn wrap_coord(&self, v: f64) -> f64 {
        let s = self.side();
        let w = (v + self.half_width).rem_euclid(s) - self.half_width;
        // rem_euclid can return s itself for tiny negative inputs.
        if w >= self.half_width { w - s } else { w }
    }

    /// Maps a point into the window (identity when wrap is off).
    pub fn fold(&self, p: Point2) -> Point2 {
        if self.wrap {
            Point2::new(self.wrap_coord(p.x), self.wrap_coord(p.y))
        } else {
            p
        }
    }

    /// Displacement `b - a` under the window metric.
    pub fn delta(&self, a: Point2, b: Point2) -> Point2 {
        let mut dx = b.x - a.x;
        let mut dy = b.y - a.y;
        if self.wrap {
            let s = self.side();
            dx -= s * (dx / s).round();
            dy -= s * (dy / s).round();
        }
        Point2::new(dx, dy)
    }

    pub fn distance(&self, a: Point2, b: Point2) -> f64 {
        self.delta(a, b).norm()
    }

    pub fn distance_sq(&self, a: Point2, b: Point2) -> f64 {
        let d = self.delta(a, b);
        d.x * d.x + d.y * d.y
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2 {
        let h = self.half_width;
        Point2::new(rng.random_range(-h..h), rng.random_range(-h..h))
    }

    pub fn sample_uniform_central<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2 {
        let h = self.central_half_width();
        Point2::new(rng.random_range(-h..h), rng.random_range(-h..h))
    }

    /// Nearest member of `set` to `p` under this window's metric; ties go to the lower index.
    pub fn nearest(&self, p: Point2, set: &PointSet) -> Result<(usize, f64)> {
        let mut best = None::<(usize, f64)>;
        for (i, &q) in set.points.iter().enumerate() {
            let d2 = self.distance_sq(p, q);
            if best.is_none_or(|(_, b)| d2 < b) {
                best = Some((i, d2));
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt())).ok_or(Error::EmptySet)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointSet {
    pub points: Vec<Point2>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Nearest member under the plain Euclidean metric; ties go to the lower index.
pub fn nearest(point: Point2, set: &PointSet) -> Result<(usize, f64)> {
    let mut best = None::<(usize, f64)>;
    for (i, q) in set.points.iter().enumerate() {
        let dx = q.x - point.x;
        let dy = q.y - point.y;
        let d2 = dx * dx + dy * dy;
        if best.is_none_or(|(_, b)| d2 < b) {
            best = Some((i, d2));
        }
    }
    best.map(|(i, d2)| (i, d2.sqrt())).ok_or(Error::EmptySet)
}

/// Bucket grid over a window for nearest-neighbour queries on large sets.
///
/// Answers agree exactly with [`Window::nearest`], including the tie rule.
#[derive(Debug, Clone)]
pub struct GridIndex {
    window: Window,
    cells: usize,
    cell_size: f64,
    buckets: Vec<Vec<usize>>,
    points: Vec<Point2>,
}

impl GridIndex {
    pub fn new(window: Window, set: &PointSet) -> Self {
        let n = set.len().max(1);
        let cells = ((n as f64).sqrt().ceil() as usize).clamp(1, 512);
        let cell_size = window.side() / cells as f64;
        let mut buckets = vec![Vec::new(); cells * cells];
        let mut idx = Self { window, cells, cell_size, buckets: Vec::new(), points: set.points.clone() };
        for (i, &p) in set.points.iter().enumerate() {
            let (cx, cy) = idx.cell_of(p);
            buckets[cy * cells + cx].push(i);
        }
        idx.buckets = buckets;
        idx
    }

    fn cell_of(&self, p: Point2) -> (usize, usize) {
        let p = self.window.fold(p);
        let f = |v: f64| {
            let c = ((v + self.window.half_width) / self.cell_size).floor();
            (c.max(0.0) as usize).min(self.cells - 1)
        };
        (f(p.x), f(p.y))
    }

    pub fn nearest(&self, p: Point2) -> Result<(usize, f64)> {
        if self.points.is_empty() {
            return Err(Error::EmptySet);
        }
        let (cx, cy) = self.cell_of(p);
        let n = self.cells as isize;
        let mut best: Option<(usize, f64)> = None;
        let mut ring = 0_isize;
        loop {
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    let (x, y) = (cx as isize + dx, cy as isize + dy);
                    let (x, y) = if self.window.wrap {
                        (x.rem_euclid(n), y.rem_euclid(n))
                    } else if x < 0 || y < 0 || x >= n || y >= n {
                        continue;
                    } else {
                        (x, y)
                    };
                    for &i in &self.buckets[(y * n + x) as usize] {
                        let d2 = self.window.distance_sq(p, self.points[i]);
                        let better = match best {
                            None => true,
                            Some((bi, bd)) => d2 < bd || (d2 == bd && i < bi),
                        };
                        if better {
                            best = Some((i, d2));
                        }
                    }
                }
            }
            // Unscanned cells lie at least `ring * cell_size` away from `p`.
            let covered = ring as f64 * self.cell_size;
            let exhausted = if self.window.wrap { 2 * ring + 1 >= n } else { ring >= n - 1 };
            if let Some((i, d2)) = best {
                if exhausted || d2.sqrt() < covered {
                    return Ok((i, d2.sqrt()));
                }
            }
            ring += 1;
        }
    }
}

/// Matérn cluster realization: parents plus per-parent daughter points.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub parents: PointSet,
    pub daughters: Vec<Vec<Point2>>,
    pub radius: f64,
    pub mean_per_cluster: f64,
}

impl ClusterSet {
    pub fn device_count(&self) -> usize {
        self.daughters.iter().map(Vec::len).sum()
    }
}

/// Drone stop points, one per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct DronePlan {
    pub stop_points: Vec<Point3>,
    pub cluster_index: Vec<usize>,
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite Poisson mean");
    d.sample(rng) as usize
}

/// Homogeneous Poisson point process on the window.
pub fn sample_hppp<R: Rng + ?Sized>(density: f64, window: &Window, rng: &mut R) -> Result<PointSet> {
    if !(density >= 0.0) || !density.is_finite() {
        return Err(invalid("density", format!("must be finite and non-negative, got {density}")));
    }
    let n = poisson_count(density * window.area(), rng);
    let points = (0..n).map(|_| window.sample_uniform(rng)).collect();
    Ok(PointSet { points })
}

/// Uniform point on a disk of radius `r` (area-uniform: radial CDF ρ²/r²).
pub fn sample_disk<R: Rng + ?Sized>(r: f64, rng: &mut R) -> Point2 {
    let rho = r * rng.random::<f64>().sqrt();
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    Point2::new(rho * phi.cos(), rho * phi.sin())
}

/// Matérn cluster process: HPPP parents, Poisson(λ_M) daughters uniform on a disk around each.
///
/// Daughters are folded into the window when it wraps.
pub fn sample_matern<R: Rng + ?Sized>(
    lambda_cl: f64,
    lambda_m: f64,
    radius: f64,
    window: &Window,
    rng: &mut R,
) -> Result<ClusterSet> {
    if !(radius > 0.0) {
        return Err(invalid("radius", format!("must be positive, got {radius}")));
    }
    if !(lambda_m >= 0.0) || !lambda_m.is_finite() {
        return Err(invalid("lambda_m", format!("must be finite and non-negative, got {lambda_m}")));
    }
    let parents = sample_hppp(lambda_cl, window, rng)?;
    let daughters = parents
        .points
        .iter()
        .map(|&c| {
            let n = poisson_count(lambda_m, rng);
            (0..n)
                .map(|_| {
                    let o = sample_disk(radius, rng);
                    window.fold(Point2::new(c.x + o.x, c.y + o.y))
                })
                .collect()
        })
        .collect();
    Ok(ClusterSet { parents, daughters, radius, mean_per_cluster: lambda_m })
}

/// Arithmetic mean of a non-empty point list.
pub fn centroid(points: &[Point2]) -> Result<Point2> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
    Ok(Point2::new(sx / n, sy / n))
}

/// Centroid of a cluster computed from offsets relative to its parent, so clusters
/// straddling a wrapped edge stay intact. Empty clusters return the parent.
pub fn cluster_centroid(window: &Window, parent: Point2, daughters: &[Point2]) -> Point2 {
    if daughters.is_empty() {
        return parent;
    }
    let offsets: Vec<Point2> = daughters.iter().map(|&d| window.delta(parent, d)).collect();
    let c = centroid(&offsets).expect("non-empty");
    window.fold(Point2::new(parent.x + c.x, parent.y + c.y))
}

/// One aggregator per cluster at the cluster centroid, hovering (or mounted) at `height`.
pub fn plan_stop_points(window: &Window, clusters: &ClusterSet, height: f64) -> DronePlan {
    let stop_points = clusters
        .parents
        .points
        .iter()
        .zip(&clusters.daughters)
        .map(|(&p, d)| {
            let c = cluster_centroid(window, p, d);
            Point3 { x: c.x, y: c.y, z: height }
        })
        .collect();
    DronePlan { stop_points, cluster_index: (0..clusters.parents.len()).collect() }
}

/// Hexagonal lattice of sites with inter-site distance `isd`, clipped to the window.
///
/// With wrap enabled the lattice is only periodic when the window side is a multiple of
/// the lattice periods; the site set is still a valid deterministic layout.
pub fn hex_lattice(isd: f64, window: &Window) -> Result<PointSet> {
    if !(isd > 0.0) {
        return Err(invalid("isd", "must be positive"));
    }
    let h = window.half_width;
    let row = isd * 3.0_f64.sqrt() / 2.0;
    let rows = (h / row).floor() as i64;
    let cols = (h / isd).ceil() as i64 + 1;
    let mut points = Vec::new();
    for j in -rows..=rows {
        let shift = if j.rem_euclid(2) == 1 { isd / 2.0 } else { 0.0 };
        for i in -cols..=cols {
            let p = Point2::new(i as f64 * isd + shift, j as f64 * row);
            if p.x.abs() < h && p.y.abs() < h {
                points.push(p);
            }
        }
    }
    Ok(PointSet { points })
}

/// SplitMix64 finalizer, used to decorrelate seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE5_E9B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Identifies one random process within a trial so each gets its own stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    BaseStations = 1,
    UserEquipment = 2,
    Clusters = 3,
    Scheduling = 4,
    Fading = 5,
    LineOfSight = 6,
    Probes = 7,
    Shadowing = 8,
    Admission = 9,
    Auxiliary = 10,
}

/// Generator for `stream` of trial `trial` under `master_seed`.
///
/// Streams are disjoint ChaCha8 streams over one trial key, so adding a process never
/// perturbs the draws of another.
pub fn stream_rng(master_seed: u64, trial: u64, stream: Stream) -> ChaCha8Rng {
    let key = splitmix64(master_seed ^ splitmix64(trial.wrapping_add(0xA076_1D64_78BD_642F)));
    let mut seed = [0_u8; 32];
    let mut s = key;
    for chunk in seed.chunks_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Writes points as CSV rows `kind,cluster,x,y,z`.
pub fn write_points_csv<W: Write>(
    out: &mut W,
    bs: &PointSet,
    ue: &PointSet,
    clusters: &ClusterSet,
    drones: &DronePlan,
) -> std::io::Result<()> {
    writeln!(out, "kind,cluster,x,y,z")?;
    for p in &bs.points {
        writeln!(out, "bs,,{},{},0", p.x, p.y)?;
    }
    for p in &ue.points {
        writeln!(out, "ue,,{},{},0", p.x, p.y)?;
    }
    for (k, d) in clusters.daughters.iter().enumerate() {
        for p in d {
            writeln!(out, "iot,{k},{},{},0", p.x, p.y)?;
        }
    }
    for (s, &k) in drones.stop_points.iter().zip(&drones.cluster_index) {
        writeln!(out, "drone,{k},{},{},{}", s.x, s.y, s.z)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        stream_rng(seed, 0, Stream::Auxiliary)
    }

    #[test]
    fn zero_density_is_empty() {
        let w = Window::new(1000.0, false).unwrap();
        assert!(sample_hppp(0.0, &w, &mut rng(1)).unwrap().is_empty());
        assert!(sample_hppp(-1.0, &w, &mut rng(1)).is_err());
    }

    #[test]
    fn hppp_is_seed_deterministic() {
        let w = Window::new(1000.0, true).unwrap();
        let a = sample_hppp(1e-5, &w, &mut rng(7)).unwrap();
        let b = sample_hppp(1e-5, &w, &mut rng(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nearest_ties_and_coincidence() {
        let set = PointSet { points: vec![Point2::new(1.0, 0.0), Point2::new(-1.0, 0.0)] };
        assert_eq!(nearest(Point2::new(0.0, 0.0), &set).unwrap().0, 0);
        let (i, d) = nearest(Point2::new(-1.0, 0.0), &set).unwrap();
        assert_eq!((i, d), (1, 0.0));
        assert!(nearest(Point2::default(), &PointSet::default()).is_err());
    }

    #[test]
    fn centroid_cases() {
        let p = Point2::new(3.0, -2.0);
        assert_eq!(centroid(&[p]).unwrap(), p);
        let sq = [
            Point2::new(1.0, 1.0),
            Point2::new(-1.0, 1.0),
            Point2::new(-1.0, -1.0),
            Point2::new(1.0, -1.0),
        ];
        assert_eq!(centroid(&sq).unwrap(), Point2::new(0.0, 0.0));
        assert!(centroid(&[]).is_err());
    }

    #[test]
    fn wrapped_cluster_centroid_stays_near_parent() {
        let w = Window::new(100.0, true).unwrap();
        let parent = Point2::new(99.0, 0.0);
        let d = [Point2::new(-99.0, 0.0), Point2::new(97.0, 0.0)];
        let c = cluster_centroid(&w, parent, &d);
        assert!((c.x - 99.0).abs() < 1e-12);
    }

    #[test]
    fn fold_keeps_points_inside() {
        let w = Window::new(10.0, true).unwrap();
        for v in [-30.0, -10.0, -1e-18, 0.0, 9.999, 10.0, 25.0] {
            let p = w.fold(Point2::new(v, -v));
            assert!(p.x >= -10.0 && p.x < 10.0, "{v} -> {}", p.x);
        }
    }

    #[test]
    fn hex_lattice_spacing() {
        let w = Window::new(1000.0, false).unwrap();
        let s = hex_lattice(500.0, &w).unwrap();
        let (i, _) = nearest(Point2::new(0.0, 0.0), &s).unwrap();
        let others = PointSet {
            points: s.points.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| *p).collect(),
        };
        let (_, d) = nearest(s.points[i], &others).unwrap();
        assert!((d - 500.0).abs() < 1e-9);
    }

    #[test]
    fn streams_are_distinct() {
        let a: u64 = stream_rng(1, 0, Stream::BaseStations).random();
        let b: u64 = stream_rng(1, 0, Stream::UserEquipment).random();
        let c: u64 = stream_rng(1, 1, Stream::BaseStations).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
