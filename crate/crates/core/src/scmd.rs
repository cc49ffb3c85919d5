//! Single-cell multi-drone EE: per-tier EE with the other tiers' devices merged into the
//! BS interference term, and max-min / sum-EE power allocation by generalized Dinkelbach
//! iterations.

use crate::channel::{ChannelParams, DerivedConstants, Steering};
use crate::error::{invalid, Error, Result};
use crate::quadrature::QuadratureCfg;
use crate::scalar::Real;
use crate::scsd::{coverage_with_prefactor, ScSdProblem};

/// One drone tier: altitude, cluster radius, and its median-signal prefactor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tier<T> {
    pub h_d: T,
    pub radius: T,
    pub l_m_tilde: T,
}

impl<T: Real> Tier<T> {
    pub fn new(
        params: &ChannelParams<T>,
        radius: T,
        h_d: T,
        lambda_b: T,
        steering: Steering,
        quad: &QuadratureCfg<T>,
    ) -> Result<Self> {
        let c = DerivedConstants::new(params, radius, h_d, lambda_b, steering, quad)?;
        Ok(Self { h_d, radius, l_m_tilde: c.l_m_tilde })
    }
}

/// Multi-tier problem. Shared constants (densities, BS power, thresholds, bounds, cap
/// inputs) come from `base`; its own altitude and radius are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ScMdProblem<T> {
    pub base: ScSdProblem<T>,
    pub tiers: Vec<Tier<T>>,
}

/// Result of a Dinkelbach run.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSolution<T> {
    pub powers: Vec<T>,
    pub tier_ee: Vec<T>,
    /// Objective at `powers`: the minimum tier EE or the EE sum.
    pub value: T,
    /// Parameter sequence of the outer iteration.
    pub trace: Vec<T>,
    /// Whether the result is certified globally optimal (max-min) or only stationary (sum).
    pub certified_global: bool,
}

impl<T: Real> ScMdProblem<T> {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.tiers.is_empty() {
            return Err(invalid("tier_heights_m", "need at least one tier"));
        }
        if self.tiers.iter().any(|t| !(t.h_d > T::zero() && t.radius > T::zero() && t.l_m_tilde > T::zero())) {
            return Err(invalid("tier_heights_m", "tier constants must be positive"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.tiers.len()
    }

    /// Joint cap on the sum of tier powers.
    pub fn joint_cap(&self) -> Result<T> {
        self.base.isr_power_cap()
    }

    pub fn is_feasible(&self, p: &[T], cap: T) -> bool {
        let b = &self.base;
        p.len() == self.n()
            && p.iter().all(|&x| x >= b.p_min * (T::one() - T::lit(1e-12)) && x <= b.p_max * (T::one() + T::lit(1e-12)))
            && p.iter().fold(T::zero(), |a, &x| a + x) <= cap * (T::one() + T::lit(1e-12))
    }

    /// Rate numerator of tier `l` in bit/s.
    pub fn rate_tier(&self, l: usize, p: &[T]) -> T {
        let b = &self.base;
        let tier = &self.tiers[l];
        let i0 = self
            .tiers
            .iter()
            .zip(p)
            .enumerate()
            .filter(|(n, _)| *n != l)
            .fold(b.p_b * b.consts.l_b, |acc, (_, (t, &pn))| acc + pn * t.l_m_tilde);
        let mu = b.rate_weights();
        let s = b.thresholds.iter().zip(&mu).fold(T::zero(), |acc, (&tau, &m)| {
            let c = coverage_with_prefactor(p[l], tau, tier.l_m_tilde, tier.h_d, i0, b.lambda_b, b.p_n, b.consts.delta_a);
            acc + m * c.value
        });
        b.beta_iot * s
    }

    pub fn consumption_tier(&self, l: usize, p: &[T]) -> T {
        self.base.consumption(p[l])
    }

    /// Average EE of a typical device in tier `l`.
    pub fn ee_tier(&self, l: usize, p: &[T]) -> T {
        self.rate_tier(l, p) / self.consumption_tier(l, p)
    }

    pub fn tier_ee(&self, p: &[T]) -> Vec<T> {
        (0..self.n()).map(|l| self.ee_tier(l, p)).collect()
    }

    fn min_ee(&self, p: &[T]) -> T {
        self.tier_ee(p).into_iter().fold(T::infinity(), T::min)
    }

    fn sum_ee(&self, p: &[T]) -> T {
        self.tier_ee(p).into_iter().fold(T::zero(), |a, b| a + b)
    }
}

/// Derivative-free maximizer over log-powers on the box `[p_min, p_max]^N` intersected
/// with `Σ P ≤ cap`.
struct InnerSolver<T> {
    lo: T,
    hi: T,
    cap: T,
    n: usize,
    grid: usize,
}

impl<T: Real> InnerSolver<T> {
    fn feasible(&self, x: &[T]) -> bool {
        let slack = T::one() + T::lit(1e-12);
        let sum = x.iter().fold(T::zero(), |a, &v| a + v.exp());
        x.iter().all(|&v| v >= self.lo.ln() - T::lit(1e-12) && v <= self.hi.ln() + T::lit(1e-12))
            && sum <= self.cap * slack
    }

    fn project(&self, p: &mut [T]) {
        for v in p.iter_mut() {
            *v = v.max(self.lo).min(self.hi);
        }
        let sum = p.iter().fold(T::zero(), |a, &v| a + v);
        if sum > self.cap {
            let s = self.cap / sum;
            for v in p.iter_mut() {
                *v = (*v * s).max(self.lo);
            }
        }
    }

    fn starts(&self, seed: Option<&[T]>) -> Vec<Vec<T>> {
        let mut out = Vec::new();
        if let Some(s) = seed {
            out.push(s.to_vec());
        }
        out.push(vec![self.lo; self.n]);
        out.push(vec![(self.cap / T::lit(self.n as f64)).min(self.hi); self.n]);
        // Halton points in the log box.
        let primes = [2_u32, 3, 5, 7, 11, 13, 17, 19];
        let (a, b) = (self.lo.ln(), self.hi.ln());
        let mut k = 1_u32;
        while out.len() < 8 {
            let p: Vec<T> = (0..self.n)
                .map(|d| {
                    let base = primes[d % primes.len()];
                    let (mut f, mut r, mut i) = (1.0_f64, 0.0_f64, k);
                    while i > 0 {
                        f /= f64::from(base);
                        r += f * f64::from(i % base);
                        i /= base;
                    }
                    (a + (b - a) * T::lit(r)).exp()
                })
                .collect();
            out.push(p);
            k += 1;
        }
        for s in &mut out {
            self.project(s);
        }
        out
    }

    fn maximize<F: Fn(&[T]) -> T>(&self, f: &F, seed: Option<&[T]>) -> (Vec<T>, T) {
        let mut best: Option<(Vec<T>, T)> = None;
        for start in self.starts(seed) {
            let (x, v) = self.climb(f, start.iter().map(|p| p.ln()).collect());
            if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                best = Some((x.iter().map(|v| v.exp()).collect(), v));
            }
        }
        best.expect("at least one start")
    }

    fn climb<F: Fn(&[T]) -> T>(&self, f: &F, mut x: Vec<T>) -> (Vec<T>, T) {
        let eval = |x: &[T]| -> T {
            if !self.feasible(x) {
                return T::neg_infinity();
            }
            let p: Vec<T> = x.iter().map(|v| v.exp()).collect();
            f(&p)
        };
        let (lo, hi) = (self.lo.ln(), self.hi.ln());
        let mut fx = eval(&x);
        let mut width = hi - lo;
        // Coordinate ascent on a log grid, then two refinements around the incumbent.
        for _level in 0..3 {
            for _sweep in 0..20 {
                let mut improved = false;
                for l in 0..self.n {
                    let c = x[l];
                    let a = (c - width / T::lit(2.0)).max(lo);
                    let b = (c + width / T::lit(2.0)).min(hi);
                    for g in 0..=self.grid {
                        let v = a + (b - a) * T::lit(g as f64 / self.grid as f64);
                        let old = x[l];
                        x[l] = v;
                        let fv = eval(&x);
                        if fv > fx {
                            fx = fv;
                            improved = true;
                        } else {
                            x[l] = old;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            width = width * T::lit(4.0) / T::lit(self.grid as f64);
        }
        // Compass search including pairwise and all-ones directions; the min() objective
        // can only be raised by moving several coordinates together.
        let mut dirs: Vec<Vec<T>> = Vec::new();
        for i in 0..self.n {
            let mut e = vec![T::zero(); self.n];
            e[i] = T::one();
            dirs.push(e);
            for j in (i + 1)..self.n {
                for s in [T::one(), -T::one()] {
                    let mut e = vec![T::zero(); self.n];
                    e[i] = T::one();
                    e[j] = s;
                    dirs.push(e);
                }
            }
        }
        dirs.push(vec![T::one(); self.n]);
        let mut step = width;
        while step > T::lit(1e-9) {
            let mut moved = false;
            for d in &dirs {
                for sgn in [T::one(), -T::one()] {
                    let y: Vec<T> = x.iter().zip(d).map(|(&a, &b)| a + sgn * step * b).collect();
                    let fy = eval(&y);
                    if fy > fx {
                        x = y;
                        fx = fy;
                        moved = true;
                    }
                }
            }
            if !moved {
                step = step / T::lit(2.0);
            }
        }
        (x, fx)
    }
}

fn inner_for<T: Real>(problem: &ScMdProblem<T>) -> Result<InnerSolver<T>> {
    problem.validate()?;
    let cap = problem.joint_cap()?;
    let b = &problem.base;
    let n = problem.n();
    if T::lit(n as f64) * b.p_min > cap {
        return Err(Error::Infeasible { cap_w: cap.to_f64_lossy(), p_min_w: (T::lit(n as f64) * b.p_min).to_f64_lossy() });
    }
    Ok(InnerSolver { lo: b.p_min, hi: b.p_max, cap, n, grid: 32 })
}

/// Maximizes the minimum tier EE. Each outer step solves
/// `max_P min_l (r_l(P) − λ c_l(P))` and sets `λ` to the smallest tier ratio at the new powers.
pub fn solve_max_min<T: Real>(problem: &ScMdProblem<T>, tol: T, max_iterations: usize) -> Result<MultiSolution<T>> {
    let inner = inner_for(problem)?;
    let n = problem.n();
    let mut p = inner.starts(None).swap_remove(1);
    let mut lambda = problem.min_ee(&p);
    let mut trace = vec![lambda];
    for _ in 0..max_iterations {
        let obj = |q: &[T]| -> T {
            (0..n)
                .map(|l| problem.rate_tier(l, q) - lambda * problem.consumption_tier(l, q))
                .fold(T::infinity(), T::min)
        };
        let (q, f) = inner.maximize(&obj, Some(&p));
        let scale = (0..n).map(|l| problem.rate_tier(l, &q)).fold(T::zero(), T::max).max(T::min_positive_value());
        let next = problem.min_ee(&q);
        if next >= lambda {
            p = q;
        }
        if f <= tol * scale || next <= lambda {
            let tier_ee = problem.tier_ee(&p);
            let value = tier_ee.iter().copied().fold(T::infinity(), T::min);
            return Ok(MultiSolution { powers: p, tier_ee, value, trace, certified_global: true });
        }
        lambda = next;
        trace.push(lambda);
    }
    Err(Error::IterationLimit {
        what: "max-min Dinkelbach",
        limit: max_iterations,
        trace: trace.iter().map(|v| v.to_f64_lossy()).collect(),
    })
}

/// Stationary point of the EE sum by the weighted sum-of-ratios fixed point: with
/// `λ_l = r_l/c_l` and weights `1/c_l` frozen at the incumbent, maximize
/// `Σ (r_l − λ_l c_l)/c_l` and accept the result only if the sum improves.
pub fn solve_sum_ee<T: Real>(problem: &ScMdProblem<T>, tol: T, max_iterations: usize) -> Result<MultiSolution<T>> {
    let inner = inner_for(problem)?;
    let n = problem.n();
    let direct = |q: &[T]| problem.sum_ee(q);
    let (mut p, mut best) = inner.maximize(&direct, None);
    let mut trace = vec![best];
    for _ in 0..max_iterations {
        let lam: Vec<T> = problem.tier_ee(&p);
        let w: Vec<T> = (0..n).map(|l| T::one() / problem.consumption_tier(l, &p)).collect();
        let obj = |q: &[T]| -> T {
            (0..n).fold(T::zero(), |acc, l| {
                acc + w[l] * (problem.rate_tier(l, q) - lam[l] * problem.consumption_tier(l, q))
            })
        };
        let (q, _) = inner.maximize(&obj, Some(&p));
        let v = problem.sum_ee(&q);
        if v <= best * (T::one() + tol) {
            if v > best {
                p = q;
                best = v;
                trace.push(best);
            }
            let tier_ee = problem.tier_ee(&p);
            return Ok(MultiSolution { powers: p, tier_ee, value: best, trace, certified_global: false });
        }
        p = q;
        best = v;
        trace.push(best);
    }
    Err(Error::IterationLimit {
        what: "sum-EE Dinkelbach",
        limit: max_iterations,
        trace: trace.iter().map(|v| v.to_f64_lossy()).collect(),
    })
}
