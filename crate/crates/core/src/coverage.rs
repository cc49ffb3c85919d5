//! Downlink UE coverage with and without drone-aggregated IoT interference,
//! computed by characteristic-function inversion.

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, integrate_semi_infinite, ComplexQuadratureCfg};
use crate::scalar::{sinc_pi, Real};

/// Inputs of one coverage evaluation. Powers in watts, densities per m², `tau` linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageQuery<T> {
    pub tau: T,
    pub lambda_b: T,
    pub lambda_d: T,
    pub p_b: T,
    pub p_m: T,
    pub u_b: u32,
    pub delta_b: u32,
    pub psi_b: u32,
    pub alpha_g: T,
}

impl<T: Real> CoverageQuery<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > T::zero()) {
            return Err(invalid("tau", "threshold must be positive"));
        }
        if !(self.lambda_b > T::zero()) {
            return Err(invalid("lambda_b", "must be positive"));
        }
        if self.lambda_d < T::zero() {
            return Err(invalid("lambda_d", "must be non-negative"));
        }
        if !(self.p_b > T::zero()) || self.p_m < T::zero() {
            return Err(invalid("p_b", "powers must be positive"));
        }
        if self.u_b == 0 || self.delta_b == 0 || self.psi_b == 0 {
            return Err(invalid("u_b", "counts and shapes must be at least 1"));
        }
        if !(self.alpha_g > T::lit(2.0)) {
            return Err(invalid("alpha_g", "must exceed 2"));
        }
        Ok(())
    }

    pub fn delta_g(&self) -> T {
        T::lit(2.0) / self.alpha_g
    }

    pub fn with_tau(mut self, tau: T) -> Self {
        self.tau = tau;
        self
    }

    /// Weight of the drone-interference term in the inversion denominator:
    /// `(λ_D/λ_B) · (P_M U_B / P_B)^{δ_G} / sinc(δ_G)`.
    pub fn drone_term(&self) -> T {
        let d = self.delta_g();
        let ratio = self.p_m * T::lit(f64::from(self.u_b)) / self.p_b;
        self.lambda_d / self.lambda_b * ratio.powf(d) / sinc_pi(d)
    }
}

fn cpow<T: Real>(z: Complex<T>, e: T) -> Complex<T> {
    // Via logarithm so large |z| underflows to zero instead of overflowing.
    (z.ln() * e).exp()
}

/// `E_f[₁F₁(−δ; 1−δ; j t f)]` for `f ~ Gamma(ψ, 1)`.
///
/// Uses `₁F₁(−δ;1−δ;z) = 1 + δ∫₀¹(1 − e^{zu})u^{−δ−1}du`, takes the Gamma expectation inside
/// (`E[e^{jtuf}] = (1 − jtu)^{−ψ}`), and integrates in `v = u^{1−δ}` to remove the endpoint
/// singularity.
pub fn interferer_cf_factor<T: Real>(
    t: T,
    delta: T,
    psi: u32,
    quad: &ComplexQuadratureCfg<T>,
) -> Result<Complex<T>> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(invalid("delta_g", "must lie in (0, 1)"));
    }
    if psi == 0 {
        return Err(invalid("psi_b", "must be at least 1"));
    }
    if t == T::zero() {
        return Ok(Complex::new(T::one(), T::zero()));
    }
    let one = Complex::new(T::one(), T::zero());
    let p = T::lit(f64::from(psi));
    let expo = T::one() / (T::one() - delta);
    let j = Complex::new(T::zero(), T::one());
    let g_over_u = |v: T| -> Complex<T> {
        let u = v.powf(expo);
        let x = t * u;
        if x.abs() < T::lit(1e-9) {
            // 1 − (1 − jx)^{−ψ} ≈ −jψx
            return -j * t * p;
        }
        (one - cpow(one - j * x, -p)) / u
    };
    let est = integrate(g_over_u, T::zero(), T::one(), quad).map_err(|e| Error::Quadrature {
        context: format!("interferer factor at t = {t}: {e}"),
        estimate: f64::NAN,
        error: f64::NAN,
    })?;
    Ok(one + est.value * (delta / (T::one() - delta)))
}

/// CDF at `x` of the distribution with characteristic function `cf`:
/// `F(x) = 1/2 − (1/π)∫₀^∞ Im{cf(t)e^{−jtx}}/t dt`.
///
/// `t0` is the width of the first panel; later panels double. Errors from `cf` abort.
pub fn gil_pelaez_cdf<T, F>(mut cf: F, x: T, t0: T, quad: &ComplexQuadratureCfg<T>) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<Complex<T>>,
{
    let mut failure = None;
    let integrand = |t: T| -> T {
        if failure.is_some() {
            return T::zero();
        }
        match cf(t) {
            Ok(c) => (c * Complex::new(T::zero(), -t * x).exp()).im / t,
            Err(e) => {
                failure = Some(e);
                T::zero()
            }
        }
    };
    let est = integrate_semi_infinite(integrand, t0, quad);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(T::lit(0.5) - est?.value / T::PI())
}

fn coverage_integral<T: Real>(q: &CoverageQuery<T>, drone: T, quad: &ComplexQuadratureCfg<T>) -> Result<T> {
    q.validate()?;
    let delta = q.delta_g();
    let psi = q.psi_b;
    let neg_delta_b = -T::lit(f64::from(q.delta_b));
    let rot = Complex::from_polar(T::one(), -T::PI() * delta / T::lit(2.0));
    let j = Complex::new(T::zero(), T::one());
    let one = Complex::new(T::one(), T::zero());
    let eval = |t: T| -> Result<T> {
        let omega = interferer_cf_factor(t, delta, psi, quad)?;
        let num = cpow(one + j * (t / q.tau), neg_delta_b);
        let den = omega + rot * (drone * t.powf(delta));
        Ok((num / den).im / t)
    };
    let mut failure = None;
    let mut integrand = |t: T| -> T {
        if failure.is_some() {
            return T::zero();
        }
        eval(t).unwrap_or_else(|e| {
            failure = Some(e);
            T::zero()
        })
    };
    // The desired-signal factor decays like (t/τ)^{−Δ_B}, so τ sets the scale.
    let est = integrate_semi_infinite(&mut integrand, q.tau, quad);
    if let Some(e) = failure {
        return Err(e);
    }
    let est = est?;
    let t_end = q.tau * T::lit(1024.0);
    let tail = (eval(t_end)? * t_end).abs();
    if !(tail < T::lit(1e-3)) {
        return Err(Error::Quadrature {
            context: format!("integrand not decaying: t·|f(t)| = {tail} at t = {t_end}"),
            estimate: est.value.to_f64_lossy(),
            error: est.error.to_f64_lossy(),
        });
    }
    let c = T::lit(0.5) - est.value / T::PI();
    if c < T::zero() || c > T::one() {
        log::debug!("coverage {c} clamped to [0, 1] at tau = {}", q.tau);
    }
    Ok(c.max(T::zero()).min(T::one()))
}

/// Downlink UE coverage `P(SIR ≥ τ)` with drone-scheduled IoT devices transmitting in the
/// downlink slot.
pub fn ue_coverage_proposed<T: Real>(q: &CoverageQuery<T>, quad: &ComplexQuadratureCfg<T>) -> Result<T> {
    coverage_integral(q, q.drone_term(), quad)
}

/// Downlink UE coverage without IoT interference.
pub fn ue_coverage_no_iot<T: Real>(q: &CoverageQuery<T>, quad: &ComplexQuadratureCfg<T>) -> Result<T> {
    coverage_integral(q, T::zero(), quad)
}

/// Threshold in dB at which the coverage curve crosses 1/2 (the median SIR), by bisection
/// on `[lo_db, hi_db]` to `tol_db`.
pub fn median_sir_db<T: Real>(
    q: &CoverageQuery<T>,
    with_iot: bool,
    lo_db: T,
    hi_db: T,
    tol_db: T,
    quad: &ComplexQuadratureCfg<T>,
) -> Result<T> {
    let eval = |db: T| -> Result<T> {
        let tau = crate::units::db_to_linear(db);
        let qq = q.with_tau(tau);
        if with_iot { ue_coverage_proposed(&qq, quad) } else { ue_coverage_no_iot(&qq, quad) }
    };
    let (mut a, mut b) = (lo_db, hi_db);
    let half = T::lit(0.5);
    if eval(a)? < half || eval(b)? > half {
        return Err(invalid("median bracket", "coverage does not cross 1/2 inside the bracket"));
    }
    while b - a > tol_db {
        let m = (a + b) * half;
        if eval(m)? >= half {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((a + b) * half)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> ComplexQuadratureCfg<f64> {
        ComplexQuadratureCfg { abs_tol: 1e-10, rel_tol: 1e-10, ..Default::default() }
    }

    fn query(tau: f64, ratio: f64) -> CoverageQuery<f64> {
        let lambda_b = 1e-5;
        CoverageQuery {
            tau,
            lambda_b,
            lambda_d: ratio * lambda_b,
            p_b: 39.81,
            p_m: 0.1995,
            u_b: 4,
            delta_b: 29,
            psi_b: 4,
            alpha_g: 3.5,
        }
    }

    #[test]
    fn cf_factor_at_zero_and_conjugate_symmetry() {
        let q = quad();
        let d = 2.0 / 3.5;
        assert_eq!(interferer_cf_factor(0.0, d, 4, &q).unwrap(), Complex::new(1.0, 0.0));
        let a = interferer_cf_factor(1.7, d, 4, &q).unwrap();
        let b = interferer_cf_factor(-1.7, d, 4, &q).unwrap();
        assert!((a - b.conj()).norm() < 1e-9);
    }

    #[test]
    fn zero_drone_density_matches_baseline() {
        let q = quad();
        let qq = query(3.0, 0.0);
        let a = ue_coverage_proposed(&qq, &q).unwrap();
        let b = ue_coverage_no_iot(&qq, &q).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn dominance_and_monotonicity() {
        let q = quad();
        let mut prev = 1.0;
        for db in [-5.0, 0.0, 5.0, 10.0, 20.0] {
            let tau = 10f64.powf(db / 10.0);
            let n = ue_coverage_no_iot(&query(tau, 5.0), &q).unwrap();
            let p = ue_coverage_proposed(&query(tau, 5.0), &q).unwrap();
            assert!(p <= n + 1e-9);
            assert!(n <= prev + 1e-9);
            prev = n;
        }
    }

    #[test]
    fn gamma_cdf_by_inversion() {
        // Gamma(4, 1): F(3) = 1 − e^{−3}(1 + 3 + 9/2 + 27/6).
        let q = quad();
        let cf = |t: f64| Ok(Complex::new(1.0, -t).powi(-4));
        let f = gil_pelaez_cdf(cf, 3.0, 1.0, &q).unwrap();
        let exact = 1.0 - (-3f64).exp() * 13.0;
        assert!((f - exact).abs() < 1e-7, "{f} vs {exact}");
    }
}
