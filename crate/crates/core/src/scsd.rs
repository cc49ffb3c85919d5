//! Single-cell single-drone analysis: signal/interference distributions at the drone,
//! IoT coverage and average EE, the UE-protection power cap, the power line search,
//! the K = 1 closed form, and alternating BS/IoT power optimization.

use crate::channel::DerivedConstants;
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::search::bracketed_golden_max;

/// Every constant of the single-cell EE problem. Powers in watts, densities per m².
#[derive(Debug, Clone, PartialEq)]
pub struct ScSdProblem<T> {
    pub lambda_b: T,
    pub lambda_u: T,
    pub p_b: T,
    pub u_b: u32,
    pub delta_b: u32,
    pub radius: T,
    pub h_d: T,
    pub consts: DerivedConstants<T>,
    /// Linear SINR thresholds, strictly increasing.
    pub thresholds: Vec<T>,
    pub p_cp: T,
    pub eta: T,
    pub p_n: T,
    /// Linear ISR level protected at the UE.
    pub rho: T,
    pub epsilon: T,
    pub p_min: T,
    pub p_max: T,
    /// IoT resource share in Hz.
    pub beta_iot: T,
}

/// Outcome of one coverage evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageEval<T> {
    pub value: T,
    /// The target interference level lies beyond the largest possible interference,
    /// so coverage is exactly one.
    pub saturated: bool,
    /// The expression exceeded one inside its support and was clamped.
    pub clamped: bool,
}

/// Which constraint determines the optimal power.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    Interior,
    IsrCap,
    PMax,
    PMin,
}

impl Binding {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Interior => "interior",
            Self::IsrCap => "isr-cap",
            Self::PMax => "p-max",
            Self::PMin => "p-min",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EeSolution<T> {
    pub p_star: T,
    pub ee_star: T,
    pub binding: Binding,
    pub evaluations: usize,
}

/// Coverage with a merged interference prefactor `i0` (watts × gain), shared by the
/// single- and multi-drone analyses.
pub(crate) fn coverage_with_prefactor<T: Real>(
    p: T,
    tau: T,
    l_tilde: T,
    h_d: T,
    i0: T,
    lambda_b: T,
    p_n: T,
    delta_a: T,
) -> CoverageEval<T> {
    let margin = p * l_tilde / tau - p_n;
    if margin <= T::zero() {
        return CoverageEval { value: T::zero(), saturated: false, clamped: false };
    }
    let x = margin / i0;
    // Largest interference the nearest BS can produce corresponds to distance h_D.
    let alpha_a = T::lit(2.0) / delta_a;
    if x >= h_d.powf(-alpha_a) {
        return CoverageEval { value: T::one(), saturated: true, clamped: false };
    }
    let pl = T::PI() * lambda_b;
    let raw = (pl * h_d * h_d - pl * x.powf(-delta_a)).exp();
    if raw > T::one() {
        log::debug!("coverage {raw} clamped to 1 at p = {p}, tau = {tau}");
        return CoverageEval { value: T::one(), saturated: false, clamped: true };
    }
    CoverageEval { value: raw, saturated: false, clamped: false }
}

impl<T: Real> ScSdProblem<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        for (name, v) in [
            ("lambda_b", self.lambda_b),
            ("lambda_u", self.lambda_u),
            ("p_b", self.p_b),
            ("radius_m", self.radius),
            ("h_d_m", self.h_d),
            ("p_cp", self.p_cp),
            ("rho", self.rho),
            ("p_min", self.p_min),
            ("beta_iot", self.beta_iot),
        ] {
            if !(v > z) || !v.is_finite() {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.eta > z && self.eta <= T::one()) {
            return Err(invalid("eta", "efficiency must lie in (0, 1]"));
        }
        if !(self.epsilon > z && self.epsilon < T::one()) {
            return Err(invalid("epsilon", "must lie in (0, 1)"));
        }
        if self.p_n < z {
            return Err(invalid("p_n", "noise must be non-negative"));
        }
        if self.p_min > self.p_max {
            return Err(invalid("p_min", "must not exceed p_max"));
        }
        if self.thresholds.is_empty() {
            return Err(invalid("thresholds", "need at least one threshold"));
        }
        if self.thresholds.iter().any(|&t| !(t > z))
            || self.thresholds.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(invalid("thresholds", "must be positive and strictly increasing"));
        }
        if self.u_b == 0 || self.delta_b == 0 {
            return Err(invalid("u_b", "must be at least 1"));
        }
        Ok(())
    }

    /// Rate weights: `μ_1 = log₂(1+τ_1)`, `μ_k = log₂(1+τ_k) − log₂(1+τ_{k−1})`.
    pub fn rate_weights(&self) -> Vec<T> {
        let mut prev = T::zero();
        self.thresholds
            .iter()
            .map(|&t| {
                let l = (T::one() + t).log2();
                let mu = l - prev;
                prev = l;
                mu
            })
            .collect()
    }

    /// CDF of the desired signal power at the drone (uniform device on the disk, mean LOS).
    pub fn iot_signal_cdf(&self, tau: T, p: T) -> T {
        let d = self.consts.delta_a;
        let v = ((p * self.consts.l_m / tau).powf(d) - self.h_d * self.h_d) / (self.radius * self.radius);
        (T::one() - v).max(T::zero()).min(T::one())
    }

    /// Median of the desired signal power: `p·L̃_M`.
    pub fn iot_signal_median(&self, p: T) -> T {
        p * self.consts.l_m_tilde
    }

    /// CDF of the interference from the nearest BS at the drone.
    pub fn bs_interference_cdf(&self, tau: T) -> T {
        if tau <= T::zero() {
            return T::zero();
        }
        let top = self.p_b * self.consts.l_b * self.h_d.powf(-T::lit(2.0) / self.consts.delta_a);
        if tau >= top {
            return T::one();
        }
        let pl = T::PI() * self.lambda_b;
        let v = (pl * self.h_d * self.h_d - pl * (self.p_b * self.consts.l_b / tau).powf(self.consts.delta_a)).exp();
        v.min(T::one())
    }

    /// IoT coverage with its saturation/clamp classification.
    pub fn iot_coverage_detail(&self, p: T, tau: T) -> CoverageEval<T> {
        coverage_with_prefactor(
            p,
            tau,
            self.consts.l_m_tilde,
            self.h_d,
            self.p_b * self.consts.l_b,
            self.lambda_b,
            self.p_n,
            self.consts.delta_a,
        )
    }

    pub fn iot_coverage(&self, p: T, tau: T) -> T {
        self.iot_coverage_detail(p, tau).value
    }

    /// Expected rate numerator `β Σ μ_k C(τ_k)` in bit/s.
    pub fn rate(&self, p: T) -> T {
        let mu = self.rate_weights();
        let s = self
            .thresholds
            .iter()
            .zip(&mu)
            .fold(T::zero(), |acc, (&t, &m)| acc + m * self.iot_coverage(p, t));
        self.beta_iot * s
    }

    /// Power consumption `P_CP + p/η`.
    pub fn consumption(&self, p: T) -> T {
        self.p_cp + p / self.eta
    }

    /// Average energy efficiency in bit/J.
    pub fn avg_ee(&self, p: T) -> T {
        self.rate(p) / self.consumption(p)
    }

    /// `P(ISR ≥ ρ)` at the victim UE for IoT power `p`.
    pub fn isr_tail(&self, rho: T, p: T) -> T {
        let s = rho * T::lit(f64::from(self.delta_b)) * self.p_b / (T::lit(f64::from(self.u_b)) * p);
        T::one() / (T::one() + self.lambda_b / self.lambda_u * s.powf(self.consts.delta_g))
    }

    /// Ratio between the cap and the BS power: `ρ(Δ_B/U_B)(λ_B/λ_U · ε/(1−ε))^{1/δ_G}`.
    pub fn cap_per_bs_watt(&self) -> T {
        let odds = self.epsilon / (T::one() - self.epsilon);
        self.rho * T::lit(f64::from(self.delta_b)) / T::lit(f64::from(self.u_b))
            * (self.lambda_b / self.lambda_u * odds).powf(T::one() / self.consts.delta_g)
    }

    /// Largest IoT power keeping `P(ISR ≥ ρ) ≤ ε`. Errors when it lies below `p_min`.
    pub fn isr_power_cap(&self) -> Result<T> {
        let cap = self.cap_per_bs_watt() * self.p_b;
        if cap < self.p_min {
            return Err(Error::Infeasible { cap_w: cap.to_f64_lossy(), p_min_w: self.p_min.to_f64_lossy() });
        }
        Ok(cap)
    }

    /// Feasible power interval `[p_min, min(p_max, cap)]`.
    pub fn feasible_interval(&self) -> Result<(T, T, bool)> {
        let cap = self.isr_power_cap()?;
        let capped = cap < self.p_max;
        Ok((self.p_min, if capped { cap } else { self.p_max }, capped))
    }

    /// Maximizes the average EE over the feasible interval by golden-section search on
    /// `ln p` to relative width 1e-6.
    pub fn solve(&self) -> Result<EeSolution<T>> {
        self.validate()?;
        let (lo, hi, capped) = self.feasible_interval()?;
        let (a, b) = (lo.ln(), hi.ln());
        let found = bracketed_golden_max(|x: T| self.avg_ee(x.exp()), a, b, 64, T::lit(1e-6));
        let p_star = found.x.exp().max(lo).min(hi);
        let tol = T::lit(1e-6);
        let binding = if (found.x - b).abs() <= tol {
            if capped { Binding::IsrCap } else { Binding::PMax }
        } else if (found.x - a).abs() <= tol {
            Binding::PMin
        } else {
            Binding::Interior
        };
        let p_star = match binding {
            Binding::IsrCap | Binding::PMax => hi,
            Binding::PMin => lo,
            Binding::Interior => p_star,
        };
        Ok(EeSolution { p_star, ee_star: self.avg_ee(p_star), binding, evaluations: found.evaluations })
    }

    /// Stationary point of the EE for one threshold and `α_A = 2`, projected onto the
    /// feasible set and the coverage-saturation edge.
    pub fn closed_form_pstar(&self) -> Result<(T, Binding)> {
        self.validate()?;
        if self.thresholds.len() != 1 {
            return Err(Error::ClosedFormPrecondition("exactly one SINR threshold"));
        }
        if self.consts.delta_a != T::one() {
            return Err(Error::ClosedFormPrecondition("ground-to-air exponent equal to 2"));
        }
        let tau = self.thresholds[0];
        let lt = self.consts.l_m_tilde;
        let a = T::PI() * self.lambda_b * self.p_b * self.consts.l_b;
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let disc = a * a * tau * tau + four * tau * a * (lt * self.eta * self.p_cp + tau * self.p_n);
        let p_u = (tau * self.p_n + a * tau / two + disc.sqrt() / two) / lt;
        let p_sat = tau * (self.p_b * self.consts.l_b / (self.h_d * self.h_d) + self.p_n) / lt;
        let cap = self.isr_power_cap()?;
        let mut best = (p_u, Binding::Interior);
        if p_sat < best.0 {
            best = (p_sat, Binding::Interior);
        }
        if cap < best.0 {
            best = (cap, Binding::IsrCap);
        }
        if self.p_max < best.0 && self.p_max <= cap {
            best = (self.p_max, Binding::PMax);
        }
        if best.0 < self.p_min {
            best = (self.p_min, Binding::PMin);
        }
        Ok(best)
    }

    pub fn with_bs_power(&self, p_b: T) -> Self {
        let mut s = self.clone();
        s.p_b = p_b;
        s
    }
}

/// One iteration of the alternating BS/IoT power optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsIterate<T> {
    pub p_b: T,
    pub cap: T,
    pub p_m: T,
    pub ee: T,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsPowerResult<T> {
    pub p_m: T,
    pub p_b: T,
    pub ee: T,
    pub trace: Vec<BsIterate<T>>,
}

/// Alternates between the IoT power line search under the current cap and resetting the
/// BS power to the smallest value whose cap still admits the chosen IoT power, clamped to
/// `[p_b_min, p_b_max]`. Stops when consecutive EE values differ by at most `zeta`.
pub fn optimize_bs_power<T: Real>(
    problem: &ScSdProblem<T>,
    p_b_min: T,
    p_b_max: T,
    zeta: T,
    max_iterations: usize,
) -> Result<BsPowerResult<T>> {
    if !(zeta > T::zero()) {
        return Err(invalid("zeta", "must be positive"));
    }
    if !(p_b_min > T::zero()) || p_b_min > p_b_max {
        return Err(invalid("p_b_min", "need 0 < p_b_min <= p_b_max"));
    }
    let k = problem.cap_per_bs_watt();
    let mut p_b = p_b_max;
    let mut trace: Vec<BsIterate<T>> = Vec::new();
    for _ in 0..max_iterations {
        let pr = problem.with_bs_power(p_b);
        let sol = pr.solve()?;
        let it = BsIterate { p_b, cap: k * p_b, p_m: sol.p_star, ee: sol.ee_star, binding: sol.binding };
        let done = trace.last().is_some_and(|prev| (it.ee - prev.ee).abs() <= zeta);
        trace.push(it);
        if done {
            return Ok(BsPowerResult { p_m: it.p_m, p_b: it.p_b, ee: it.ee, trace });
        }
        p_b = (sol.p_star / k).max(p_b_min).min(p_b_max);
    }
    Err(Error::IterationLimit {
        what: "BS power optimization",
        limit: max_iterations,
        trace: trace.iter().map(|i| i.ee.to_f64_lossy()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelParams, Steering};
    use crate::units::{db_to_linear, dbm_to_watts, noise_power_watts};

    pub(crate) fn cat0(h: f64) -> ScSdProblem<f64> {
        let ch = ChannelParams::<f64>::urban_macro();
        let lambda_b = 1.0 / (std::f64::consts::PI * 300.0 * 300.0);
        let consts = DerivedConstants::new(&ch, 50.0, h, lambda_b, Steering::WholeLink, &Default::default())
            .unwrap();
        ScSdProblem {
            lambda_b,
            lambda_u: 50.0 * lambda_b,
            p_b: dbm_to_watts(46.0),
            u_b: 4,
            delta_b: 29,
            radius: 50.0,
            h_d: h,
            consts,
            thresholds: [-5.0, 0.0, 5.0, 10.0].iter().map(|&d| db_to_linear(d)).collect(),
            p_cp: 0.09,
            eta: 0.44,
            p_n: noise_power_watts(-174.0, 20e6),
            rho: db_to_linear(-6.0),
            epsilon: 0.5,
            p_min: dbm_to_watts(1.0),
            p_max: dbm_to_watts(23.0),
            beta_iot: 1e6,
        }
    }

    const DG: f64 = 2.0 / 3.5;

    #[test]
    fn signal_cdf_support_edges_and_median() {
        let pr = cat0(50.0);
        let p = 0.05;
        let lo = p * pr.consts.l_m * (50.0_f64.powi(2) + 50.0_f64.powi(2)).powf(-1.1);
        let hi = p * pr.consts.l_m * 50.0_f64.powf(-2.2);
        assert!(pr.iot_signal_cdf(lo, p).abs() < 1e-12);
        assert!((pr.iot_signal_cdf(hi, p) - 1.0).abs() < 1e-12);
        assert!((pr.iot_signal_cdf(pr.iot_signal_median(p), p) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn interference_cdf_edges() {
        let pr = cat0(50.0);
        let top = pr.p_b * pr.consts.l_b * 50.0_f64.powf(-2.2);
        assert_eq!(pr.bs_interference_cdf(top), 1.0);
        assert!(pr.bs_interference_cdf(top * (1.0 - 1e-12)) > 0.999_999);
        assert!(pr.bs_interference_cdf(1e-300) < 1e-12);
    }

    #[test]
    fn coverage_zero_region_and_limits() {
        let pr = cat0(50.0);
        let tau = 1.0;
        let p_zero = tau * pr.p_n / pr.consts.l_m_tilde;
        assert_eq!(pr.iot_coverage(p_zero, tau), 0.0);
        let big = pr.iot_coverage_detail(1e9, tau);
        assert_eq!(big.value, 1.0);
        assert!(big.saturated);
    }

    #[test]
    fn isr_identities() {
        let pr = cat0(50.0);
        let cap = pr.isr_power_cap().unwrap();
        assert!((pr.isr_tail(pr.rho, cap) - pr.epsilon).abs() < 1e-9);
        // ε = 1/2 removes the odds factor.
        let expect = pr.rho * (29.0 * pr.p_b / 4.0) * (1.0_f64 / 50.0).powf(1.0 / DG);
        assert!((cap / expect - 1.0).abs() < 1e-12);
        assert!(pr.isr_tail(1e12, 0.1) < 1e-6);
        // (λ_B/λ_U)(ρΔP_B/(U p))^δ = 1 gives 1/2.
        let p = pr.rho * 29.0 * pr.p_b / 4.0 * (1.0_f64 / 50.0).powf(1.0 / DG);
        assert!((pr.isr_tail(pr.rho, p) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cat0_cap_is_near_19_dbm() {
        let cap = cat0(50.0).isr_power_cap().unwrap();
        let dbm = crate::units::watts_to_dbm(cap);
        // Independent re-derivation in dB: −6 + 46 + 10log10(29/4) − (3.5/2)·10log10(50).
        let expect = -6.0 + 46.0 + 10.0 * (29.0_f64 / 4.0).log10() - 1.75 * 10.0 * 50.0_f64.log10();
        assert!((dbm - expect).abs() < 1e-9, "{dbm} vs {expect}");
    }

    #[test]
    fn infeasible_cap_is_an_error() {
        let mut pr = cat0(50.0);
        pr.p_min = 10.0;
        pr.p_max = 20.0;
        assert!(matches!(pr.solve(), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn weights_telescope() {
        let pr = cat0(50.0);
        let mu = pr.rate_weights();
        let total: f64 = mu.iter().sum();
        assert!((total - (1.0 + 10.0_f64).log2()).abs() < 1e-12);
        assert!((mu[0] - (1.0 + db_to_linear(-5.0_f64)).log2()).abs() < 1e-15);
    }

    #[test]
    fn ee_vanishes_at_extremes() {
        let pr = cat0(50.0);
        assert_eq!(pr.avg_ee(1e-15), 0.0);
        assert!(pr.avg_ee(1e12) < 1e-3 * pr.avg_ee(0.01));
    }

    #[test]
    fn solver_beats_grid_and_reports_binding() {
        let pr = cat0(50.0);
        let sol = pr.solve().unwrap();
        let (lo, hi, _) = pr.feasible_interval().unwrap();
        for i in 0..=1000 {
            let p = (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / 1000.0).exp();
            assert!(pr.avg_ee(p) <= sol.ee_star * (1.0 + 1e-9));
        }
        let mut tight = pr.clone();
        tight.p_b = dbm_to_watts(20.0);
        tight.p_min = dbm_to_watts(-20.0);
        let s = tight.solve().unwrap();
        assert_eq!(s.binding, Binding::IsrCap);
        assert!((s.p_star - tight.isr_power_cap().unwrap()).abs() < 1e-15);
    }

    #[test]
    fn bs_power_trace_is_monotone() {
        let pr = cat0(50.0);
        let r = optimize_bs_power(&pr, dbm_to_watts(30.0), dbm_to_watts(46.0), 1e-6, 100).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1].ee >= w[0].ee * (1.0 - 1e-9));
        }
    }
}
