//! AWGN data channel with free-space path loss.
//!
//! Converts between transmission rate and the power the EHD must radiate:
//! `p(dBm) = 10 log10(2^(r/B) - 1) + FSPL + N_l`, with the noise floor
//! `N_l = N_0 + 10 log10(B)` and `FSPL = 20 log10(d) + 20 log10(f) - 147.55`.
//! Rates are bits per second throughout this module.

use serde::{Deserialize, Serialize};

/// Data-link parameters between the EHD and its receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Carrier frequency (hertz).
    pub carrier_hz: f64,
    /// Channel bandwidth (hertz).
    pub bandwidth_hz: f64,
    /// Noise spectral density (dBm per hertz).
    pub noise_density_dbm_hz: f64,
    /// EHD-to-receiver distance (meter).
    pub distance_m: f64,
}

impl ChannelModel {
    /// Noise power over the full bandwidth (dBm).
    pub fn noise_floor_dbm(&self) -> f64 {
        self.noise_density_dbm_hz + 10.0 * self.bandwidth_hz.log10()
    }

    /// Free-space path loss (dB) for the configured distance and carrier.
    pub fn fspl_db(&self) -> f64 {
        20.0 * self.distance_m.log10() + 20.0 * self.carrier_hz.log10() - 147.55
    }

    /// Linear path-gain factor folding FSPL and the noise floor into watts:
    /// `power_w = k * (2^(r/B) - 1)` with `k = 10^((FSPL + N_l - 30) / 10)`.
    fn rate_power_scale_w(&self) -> f64 {
        10f64.powf((self.fspl_db() + self.noise_floor_dbm() - 30.0) / 10.0)
    }

    /// Transmit power (watt) needed to sustain `rate_bps` bits per second.
    pub fn power_for_rate_w(&self, rate_bps: f64) -> f64 {
        if rate_bps <= 0.0 {
            return 0.0;
        }
        self.rate_power_scale_w() * ((rate_bps / self.bandwidth_hz).exp2() - 1.0)
    }

    /// Rate (bits per second) achievable with `power_w` watts; inverse of
    /// [`Self::power_for_rate_w`].
    pub fn rate_for_power_bps(&self, power_w: f64) -> f64 {
        if power_w <= 0.0 {
            return 0.0;
        }
        self.bandwidth_hz * (1.0 + power_w / self.rate_power_scale_w()).log2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// f_d = 2.4 GHz, B = 50 kHz, N_0 = -174 dBm/Hz, d = 30 ft.
    pub(crate) fn reference_channel() -> ChannelModel {
        ChannelModel {
            carrier_hz: 2.4e9,
            bandwidth_hz: 5e4,
            noise_density_dbm_hz: -174.0,
            distance_m: 9.144,
        }
    }

    #[test]
    fn fspl_reference_distance() {
        let ch = reference_channel();
        // 19.22 + 187.60 - 147.55
        assert!((ch.fspl_db() - 59.277).abs() < 5e-3, "got {}", ch.fspl_db());
    }

    #[test]
    fn fspl_cancellation_at_unit_distance() {
        let ch = ChannelModel { distance_m: 1.0, carrier_hz: 10f64.powf(147.55 / 20.0), ..reference_channel() };
        assert!(ch.fspl_db().abs() < 1e-9);
    }

    #[test]
    fn fspl_doubling_distance_adds_six_db() {
        let ch = reference_channel();
        let ch2 = ChannelModel { distance_m: 2.0 * ch.distance_m, ..ch };
        assert!((ch2.fspl_db() - ch.fspl_db() - 6.0206).abs() < 1e-3);
    }

    #[test]
    fn noise_floor_from_density_and_bandwidth() {
        let ch = reference_channel();
        assert!((ch.noise_floor_dbm() - (-127.0103)).abs() < 1e-3);
    }

    #[test]
    fn power_for_reference_rate() {
        let ch = reference_channel();
        assert_eq!(ch.power_for_rate_w(0.0), 0.0);
        // r/B = 1.2288, 10 log10(2^1.2288 - 1) = 1.28 dB -> -66.45 dBm
        let p = ch.power_for_rate_w(61440.0);
        assert!((p / 2.2644e-10 - 1.0).abs() < 1e-3, "got {p:e}");
    }

    #[test]
    fn rate_power_round_trip() {
        let ch = reference_channel();
        for r in [1e3, 3.1e3, 1e4, 6.144e4, 2.5e5, 1e6] {
            let back = ch.rate_for_power_bps(ch.power_for_rate_w(r));
            assert!((back / r - 1.0).abs() < 1e-9, "round trip failed for {r}: {back}");
        }
    }

    #[test]
    fn power_monotone_in_rate() {
        let ch = reference_channel();
        assert!(ch.power_for_rate_w(61440.0) > ch.power_for_rate_w(15360.0));
        assert!(ch.power_for_rate_w(15360.0) > 0.0);
    }
}
