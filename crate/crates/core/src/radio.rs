//! Shared PHY abstraction: pathloss, block fading, threshold decoding,
//! RSRP/RSRQ and Shannon rate.

use rand_chacha::rand_core::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::exponential;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadioError {
    #[error("bandwidth must be positive, got {0} Hz")]
    NonPositiveBandwidth(f64),
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("total received power {total} is below the RSRP contribution {rsrp}")]
    TotalBelowRsrp { rsrp: f64, total: f64 },
    #[error("SINR must be non-negative, got {0}")]
    NegativeSinr(f64),
}

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

/// Thermal noise over `bandwidth_hz` with a receiver noise figure, in dBm.
pub fn noise_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    -174.0 + linear_to_db(bandwidth_hz) + noise_figure_db
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fading {
    /// I.i.d. Rayleigh block fading per slot: exponential power.
    #[default]
    Rayleigh,
    /// Deterministic channel at the mean SNR.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkModel {
    pub mean_snr_db: f64,
    pub target_snr_db: f64,
    pub fading: Fading,
}

impl Default for LinkModel {
    fn default() -> Self {
        Self {
            mean_snr_db: 10.0,
            target_snr_db: 0.0,
            fading: Fading::Rayleigh,
        }
    }
}

impl LinkModel {
    pub fn mean_snr(&self) -> f64 {
        db_to_linear(self.mean_snr_db)
    }

    pub fn target_snr(&self) -> f64 {
        db_to_linear(self.target_snr_db)
    }

    /// Closed-form per-attempt failure probability of this link.
    pub fn outage_probability(&self) -> f64 {
        match self.fading {
            Fading::Rayleigh => rayleigh_outage(self.mean_snr(), self.target_snr()),
            Fading::None => {
                if self.mean_snr() >= self.target_snr() {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn draw_snr<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        draw_snr(self, rng)
    }
}

/// `P(SNR < target)` for exponential SNR with the given linear mean.
pub fn rayleigh_outage(mean: f64, target: f64) -> f64 {
    -(-target / mean).exp_m1()
}

/// Instantaneous linear SNR of one slot.
pub fn draw_snr<R: RngCore + ?Sized>(link: &LinkModel, rng: &mut R) -> f64 {
    match link.fading {
        Fading::Rayleigh => exponential(rng, link.mean_snr()),
        Fading::None => link.mean_snr(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decode {
    Success,
    Failure,
}

impl Decode {
    pub fn is_success(self) -> bool {
        matches!(self, Decode::Success)
    }
}

/// Outage-threshold decoding; the boundary counts as success.
#[inline]
pub fn decode_outcome(snr: f64, target: f64) -> Decode {
    if snr >= target {
        Decode::Success
    } else {
        Decode::Failure
    }
}

#[inline]
pub fn rsrp(tx_power_dbm: f64, pathloss_db: f64) -> f64 {
    tx_power_dbm - pathloss_db
}

/// RSRQ in dB as the ratio of the cell's RSRP to the total received power on
/// the carrier. Both arguments are linear (mW).
pub fn rsrq(rsrp_linear: f64, total_rx_power_linear: f64) -> Result<f64, RadioError> {
    if total_rx_power_linear < rsrp_linear || !(total_rx_power_linear > 0.0) {
        return Err(RadioError::TotalBelowRsrp {
            rsrp: rsrp_linear,
            total: total_rx_power_linear,
        });
    }
    Ok(linear_to_db(rsrp_linear / total_rx_power_linear))
}

pub fn shannon_rate(sinr_linear: f64, bandwidth_hz: f64) -> Result<f64, RadioError> {
    if !(bandwidth_hz > 0.0) {
        return Err(RadioError::NonPositiveBandwidth(bandwidth_hz));
    }
    if sinr_linear < 0.0 {
        return Err(RadioError::NegativeSinr(sinr_linear));
    }
    Ok(bandwidth_hz * (1.0 + sinr_linear).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathlossModel {
    pub intercept_db: f64,
    /// dB per decade of distance in km.
    pub slope_db: f64,
    pub min_coupling_loss_db: f64,
}

impl PathlossModel {
    pub const fn macro_urban() -> Self {
        Self {
            intercept_db: 128.1,
            slope_db: 37.6,
            min_coupling_loss_db: 70.0,
        }
    }

    pub const fn small_urban() -> Self {
        Self {
            intercept_db: 140.7,
            slope_db: 36.7,
            min_coupling_loss_db: 70.0,
        }
    }

    pub fn pathloss_db(&self, distance_m: f64) -> Result<f64, RadioError> {
        if !(distance_m > 0.0) {
            return Err(RadioError::NonPositiveDistance(distance_m));
        }
        let pl = self.intercept_db + self.slope_db * (distance_m / 1000.0).log10();
        Ok(pl.max(self.min_coupling_loss_db))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSignal {
    pub rsrp_dbm: f64,
    pub rsrq_db: f64,
    pub sinr_db: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::spawn_stream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rayleigh_mean_matches_linear_mean() {
        let link = LinkModel::default();
        let mut rng = spawn_stream(1, "snr");
        let n = 1_000_000;
        let mean = (0..n).map(|_| draw_snr(&link, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 10.0).abs() / 10.0 < 0.01, "mean = {mean}");
    }

    #[test]
    fn no_fading_returns_mean() {
        let link = LinkModel {
            fading: Fading::None,
            ..LinkModel::default()
        };
        let mut rng = spawn_stream(1, "snr");
        for _ in 0..10 {
            assert_relative_eq!(draw_snr(&link, &mut rng), 10.0, epsilon = 1e-12);
        }
        assert_eq!(link.outage_probability(), 0.0);
    }

    #[test]
    fn outage_closed_form_at_defaults() {
        let link = LinkModel::default();
        let p = link.outage_probability();
        assert_relative_eq!(p, 1.0 - (-0.1f64).exp(), epsilon = 1e-15);
        assert!((p - 0.09516).abs() < 1e-5);
    }

    #[test]
    fn empirical_failure_rate_matches_closed_form() {
        let link = LinkModel::default();
        let target = link.target_snr();
        let mut rng = spawn_stream(2, "decode");
        let n = 1_000_000;
        let fails = (0..n)
            .filter(|_| !decode_outcome(draw_snr(&link, &mut rng), target).is_success())
            .count();
        let rate = fails as f64 / n as f64;
        assert!((rate - 0.09516).abs() < 0.001, "rate = {rate}");
    }

    #[test]
    fn decode_boundary_is_inclusive() {
        assert_eq!(decode_outcome(1.0, 1.0), Decode::Success);
        assert_eq!(decode_outcome(0.0, 1.0), Decode::Failure);
    }

    #[test]
    fn rsrp_rsrq_and_rate_examples() {
        assert_eq!(rsrp(46.0, 100.0), -54.0);
        assert_eq!(shannon_rate(0.0, 1.4e6).unwrap(), 0.0);
        assert_relative_eq!(shannon_rate(1.0, 1.4e6).unwrap(), 1.4e6);
        assert!(shannon_rate(1.0, 0.0).is_err());
        assert!(shannon_rate(1.0, -5.0).is_err());
        assert_relative_eq!(rsrq(1.0, 2.0).unwrap(), -3.0103, epsilon = 1e-4);
        assert!(rsrq(2.0, 1.0).is_err());
    }

    #[test]
    fn pathloss_defaults() {
        let m = PathlossModel::macro_urban();
        assert_relative_eq!(m.pathloss_db(1000.0).unwrap(), 128.1);
        assert!(m.pathloss_db(0.0).is_err());
        // Very close in, the coupling-loss floor applies.
        assert_eq!(m.pathloss_db(1.0).unwrap(), 70.0);
    }

    proptest! {
        #[test]
        fn pathloss_non_decreasing(d1 in 0.1f64..5000.0, d2 in 0.1f64..5000.0) {
            let m = PathlossModel::small_urban();
            let (a, b) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(m.pathloss_db(a).unwrap() <= m.pathloss_db(b).unwrap());
        }

        #[test]
        fn rsrq_decreasing_in_total_and_non_positive(r in 1e-12f64..1.0, extra1 in 0.0f64..10.0, extra2 in 0.0f64..10.0) {
            let (lo, hi) = if extra1 <= extra2 { (extra1, extra2) } else { (extra2, extra1) };
            let a = rsrq(r, r * (1.0 + lo)).unwrap();
            let b = rsrq(r, r * (1.0 + hi)).unwrap();
            prop_assert!(a >= b);
            prop_assert!(a <= 0.0);
        }

        #[test]
        fn rate_increasing(s in 0.0f64..1e3, ds in 1e-6f64..10.0, bw in 1e3f64..1e8, dbw in 1.0f64..1e6) {
            let base = shannon_rate(s, bw).unwrap();
            prop_assert!(shannon_rate(s + ds, bw).unwrap() > base);
            if s > 0.0 {
                prop_assert!(shannon_rate(s, bw + dbw).unwrap() > base);
            }
        }
    }
}
