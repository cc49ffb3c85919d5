//! Decibel and power-unit conversions.

use crate::scalar::Real;

pub fn db_to_linear<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

pub fn linear_to_db<T: Real>(x: T) -> T {
    T::lit(10.0) * x.log10()
}

pub fn dbm_to_watts<T: Real>(dbm: T) -> T {
    db_to_linear(dbm - T::lit(30.0))
}

pub fn watts_to_dbm<T: Real>(w: T) -> T {
    linear_to_db(w) + T::lit(30.0)
}

/// Thermal noise power in watts over `bandwidth_hz` for a noise density given in dBm/Hz.
pub fn noise_power_watts<T: Real>(psd_dbm_per_hz: T, bandwidth_hz: T) -> T {
    dbm_to_watts(psd_dbm_per_hz + linear_to_db(bandwidth_hz))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_round_trip() {
        assert!((dbm_to_watts(23.0_f64) - 0.199_526_231).abs() < 1e-9);
        assert!((watts_to_dbm(1.0_f64) - 30.0).abs() < 1e-12);
        assert!((watts_to_dbm(dbm_to_watts(-7.25_f64)) + 7.25).abs() < 1e-12);
    }

    #[test]
    fn thermal_noise_20mhz() {
        // -174 dBm/Hz + 73.01 dB
        let n = noise_power_watts(-174.0_f64, 20e6);
        assert!((watts_to_dbm(n) - (-174.0 + 10.0 * 20e6_f64.log10())).abs() < 1e-12);
    }
}
