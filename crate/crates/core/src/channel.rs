//! Path-loss laws and fading gains.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, integrate_semi_infinite, QuadratureCfg};
use crate::scalar::Real;
use crate::units::db_to_linear;

/// Propagation constants. Gains (`l0`, `l_nlos`, `l_str`) are linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams<T> {
    pub alpha_g: T,
    pub alpha_a: T,
    pub l0: T,
    pub l_nlos: T,
    pub l_str: T,
    pub xi1: T,
    pub xi2: T,
    /// Desired-link Gamma shape `M_B − U_B + 1`.
    pub delta_b: u32,
    /// Interferer Gamma shape `U_B`.
    pub psi_b: u32,
}

impl<T: Real> ChannelParams<T> {
    /// Builds the parameter set from dB-valued inputs and the antenna/user counts.
    #[allow(clippy::too_many_arguments)]
    pub fn from_db(
        alpha_g: T,
        alpha_a: T,
        l0_db: T,
        l_nlos_db: T,
        l_str_db: T,
        xi1: T,
        xi2: T,
        m_b: u32,
        u_b: u32,
    ) -> Result<Self> {
        if u_b == 0 || u_b > m_b {
            return Err(invalid("u_b", format!("need 1 <= u_b <= m_b, got u_b={u_b}, m_b={m_b}")));
        }
        let p = Self {
            alpha_g,
            alpha_a,
            l0: db_to_linear(l0_db),
            l_nlos: db_to_linear(l_nlos_db),
            l_str: db_to_linear(l_str_db),
            xi1,
            xi2,
            delta_b: m_b - u_b + 1,
            psi_b: u_b,
        };
        p.validate()?;
        Ok(p)
    }

    /// Default urban macro constants: α_G 3.5, α_A 2.2, L0 −38 dB, NLOS −20 dB,
    /// steering −30 dB, ξ = (18, 63) m, 32 antennas serving 4 users.
    pub fn urban_macro() -> Self {
        Self::from_db(
            T::lit(3.5),
            T::lit(2.2),
            T::lit(-38.0),
            T::lit(-20.0),
            T::lit(-30.0),
            T::lit(18.0),
            T::lit(63.0),
            32,
            4,
        )
        .expect("built-in constants are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let one = T::one();
        if !(self.alpha_g > T::lit(2.0)) {
            return Err(invalid("alpha_g", "must exceed 2"));
        }
        if !(self.alpha_a >= T::lit(2.0)) {
            return Err(invalid("alpha_a", "must be at least 2"));
        }
        if !(self.l0 > T::zero()) {
            return Err(invalid("l0_db", "gain must be positive"));
        }
        if !(self.l_nlos > T::zero() && self.l_nlos <= one) {
            return Err(invalid("l_nlos_db", "must lie in (-inf, 0] dB"));
        }
        if !(self.l_str > T::zero() && self.l_str <= one) {
            return Err(invalid("l_str_db", "must lie in (-inf, 0] dB"));
        }
        if !(self.xi1 > T::zero()) {
            return Err(invalid("xi1_m", "must be positive"));
        }
        if !(self.xi2 > T::zero()) {
            return Err(invalid("xi2_m", "must be positive"));
        }
        if self.delta_b == 0 || self.psi_b == 0 {
            return Err(invalid("m_b", "Gamma shapes must be at least 1"));
        }
        Ok(())
    }

    pub fn delta_g(&self) -> T {
        T::lit(2.0) / self.alpha_g
    }

    pub fn delta_a(&self) -> T {
        T::lit(2.0) / self.alpha_a
    }
}

/// How the line-of-sight state of a ground-to-air link is resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LosMode<T> {
    /// LOS-probability-weighted mix at the link's own distance.
    Expected,
    /// Bernoulli draw of the LOS state.
    Sampled,
    /// A fixed LOS probability, e.g. an area average.
    Fixed(T),
}

/// LOS probability at 2D distance `r`.
pub fn los_probability<T: Real>(r_2d: T, params: &ChannelParams<T>) -> T {
    if r_2d <= T::zero() {
        return T::one();
    }
    let e = (-r_2d / params.xi2).exp();
    let near = (params.xi1 / r_2d).min(T::one());
    (near * (T::one() - e) + e).min(T::one()).max(T::zero())
}

fn clamp_distance<T: Real>(d: T) -> T {
    d.max(T::one())
}

/// Ground-to-ground gain `L0·d^{−α_G}` with `d` clamped to at least 1 m.
pub fn pathloss_g2g<T: Real>(d: T, params: &ChannelParams<T>) -> T {
    params.l0 * clamp_distance(d).powf(-params.alpha_g)
}

/// Ground-to-air gain for a given LOS probability (the convex mix of both branches).
pub fn pathloss_m2d_with_probability<T: Real>(d_3d: T, p_los: T, params: &ChannelParams<T>) -> T {
    let mix = (T::one() - params.l_nlos) * p_los + params.l_nlos;
    params.l0 * mix * clamp_distance(d_3d).powf(-params.alpha_a)
}

/// Device-to-drone gain at 3D distance `d_3d` for a drone at altitude `h_d`.
pub fn pathloss_m2d<T: Real, R: Rng + ?Sized>(
    d_3d: T,
    h_d: T,
    params: &ChannelParams<T>,
    mode: LosMode<T>,
    rng: &mut R,
) -> Result<T> {
    if d_3d < h_d {
        return Err(Error::BelowAltitude { d_3d: d_3d.to_f64_lossy(), h_d: h_d.to_f64_lossy() });
    }
    let r = (d_3d * d_3d - h_d * h_d).max(T::zero()).sqrt();
    let p = match mode {
        LosMode::Expected => los_probability(r, params),
        LosMode::Fixed(p) => p,
        LosMode::Sampled => {
            let p = los_probability(r, params).to_f64_lossy();
            if rng.random::<f64>() < p { T::one() } else { T::zero() }
        }
    };
    Ok(pathloss_m2d_with_probability(d_3d, p, params))
}

/// BS-to-drone gain: the device-to-drone law scaled by the steering loss.
pub fn pathloss_b2d<T: Real, R: Rng + ?Sized>(
    d_3d: T,
    h_d: T,
    params: &ChannelParams<T>,
    mode: LosMode<T>,
    rng: &mut R,
) -> Result<T> {
    Ok(params.l_str * pathloss_m2d(d_3d, h_d, params, mode, rng)?)
}

/// Average LOS probability for a device uniform on a disk of radius `radius` around
/// the point under the drone.
pub fn mean_los_m2d<T: Real>(
    radius: T,
    _h_d: T,
    params: &ChannelParams<T>,
    quad: &QuadratureCfg<T>,
) -> Result<T> {
    if !(radius > T::zero()) {
        return Err(invalid("radius_m", "must be positive"));
    }
    let density = |r: T| los_probability(r, params) * T::lit(2.0) * r / (radius * radius);
    // The min() in the LOS law has a kink at ξ1.
    let split = params.xi1.min(radius);
    let a = integrate(density, T::zero(), split, quad)?.value;
    let b = integrate(density, split, radius, quad)?.value;
    Ok(a + b)
}

/// Average LOS probability over the nearest-BS ground distance of a PPP of density `lambda_b`
/// (density `2πλ y e^{−πλ y²}`).
pub fn mean_los_b2d<T: Real>(
    lambda_b: T,
    _h_d: T,
    params: &ChannelParams<T>,
    quad: &QuadratureCfg<T>,
) -> Result<T> {
    if !(lambda_b > T::zero()) {
        return Err(invalid("lambda_b", "must be positive"));
    }
    let pi_l = T::PI() * lambda_b;
    let density =
        |y: T| los_probability(y, params) * T::lit(2.0) * pi_l * y * (-pi_l * y * y).exp();
    let head = integrate(density, T::zero(), params.xi1, quad)?.value;
    // Tail starts at ξ1, so shift the variable to reuse the semi-infinite integrator.
    let scale = T::one() / pi_l.sqrt();
    let tail = integrate_semi_infinite(|s: T| density(params.xi1 + s), scale, quad)?.value;
    Ok(head + tail)
}

/// How the steering loss enters the BS-to-drone prefactor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Steering {
    /// `L0·L_STR((1−L_NLOS)P̄ + L_NLOS)`: the steering loss scales the whole link.
    #[default]
    WholeLink,
    /// `L0((1−L_NLOS L_STR)P̄ + L_NLOS L_STR)`: steering loss applied to the NLOS term only.
    NlosOnly,
}

/// Mean-LOS prefactors used by the single-cell analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants<T> {
    pub delta_g: T,
    pub delta_a: T,
    pub p_los_m: T,
    pub p_los_b: T,
    pub l_m: T,
    pub l_b: T,
    /// Median-signal prefactor `L_M (R²/2 + h²)^{−1/δ_A}`.
    pub l_m_tilde: T,
}

impl<T: Real> DerivedConstants<T> {
    pub fn new(
        params: &ChannelParams<T>,
        radius: T,
        h_d: T,
        lambda_b: T,
        steering: Steering,
        quad: &QuadratureCfg<T>,
    ) -> Result<Self> {
        if !(h_d > T::zero()) {
            return Err(invalid("h_d_m", "must be positive"));
        }
        let p_los_m = mean_los_m2d(radius, h_d, params, quad)?;
        let p_los_b = mean_los_b2d(lambda_b, h_d, params, quad)?;
        Ok(Self::from_mean_los(params, radius, h_d, p_los_m, p_los_b, steering))
    }

    pub fn from_mean_los(
        params: &ChannelParams<T>,
        radius: T,
        h_d: T,
        p_los_m: T,
        p_los_b: T,
        steering: Steering,
    ) -> Self {
        let one = T::one();
        let l_m = params.l0 * ((one - params.l_nlos) * p_los_m + params.l_nlos);
        let l_b = match steering {
            Steering::WholeLink => {
                params.l0 * params.l_str * ((one - params.l_nlos) * p_los_b + params.l_nlos)
            }
            Steering::NlosOnly => {
                let ns = params.l_nlos * params.l_str;
                params.l0 * ((one - ns) * p_los_b + ns)
            }
        };
        let delta_a = params.delta_a();
        let l_m_tilde = l_m * (radius * radius / T::lit(2.0) + h_d * h_d).powf(-one / delta_a);
        Self { delta_g: params.delta_g(), delta_a, p_los_m, p_los_b, l_m, l_b, l_m_tilde }
    }
}

/// Gamma(shape, 1) power gain.
pub fn sample_gamma_gain<R: Rng + ?Sized>(shape: u32, rng: &mut R) -> Result<f64> {
    Ok(gamma_distribution(shape)?.sample(rng))
}

/// Reusable Gamma(shape, 1) distribution for hot loops.
pub fn gamma_distribution(shape: u32) -> Result<Gamma<f64>> {
    if shape == 0 {
        return Err(invalid("shape", "must be at least 1"));
    }
    Gamma::new(f64::from(shape), 1.0).map_err(|e| invalid("shape", e.to_string()))
}
