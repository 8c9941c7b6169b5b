use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Free-space path loss in dB for a 3-D distance in metres and a carrier
/// frequency in Hz.
pub fn path_loss_db(distance_m: f64, frequency_hz: f64) -> Result<f64> {
    if !(distance_m > 0.0) || !(frequency_hz > 0.0) {
        return Err(Error::contract(format!(
            "path loss needs positive distance and frequency, got d={distance_m}, f={frequency_hz}"
        )));
    }
    Ok(20.0 * distance_m.log10() + 20.0 * frequency_hz.log10() - 147.55)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioParams {
    pub carrier_frequency_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub snr_threshold_db: f64,
    pub altitude_m: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            carrier_frequency_hz: 2e9,
            tx_power_dbm: 46.0,
            noise_power_dbm: -99.0,
            snr_threshold_db: 5.0,
            altitude_m: 40.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.carrier_frequency_hz,
            self.tx_power_dbm,
            self.noise_power_dbm,
            self.snr_threshold_db,
            self.altitude_m,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite || self.altitude_m <= 0.0 || self.carrier_frequency_hz <= 0.0 {
            return Err(Error::config(
                "radio parameters must be finite with positive altitude and frequency",
            ));
        }
        Ok(())
    }

    /// Link SNR between a UAV and a ground user, both given as ground-plane
    /// coordinates. The UAV flies at `altitude_m`.
    pub fn snr_db(&self, uav: (f64, f64), user: (f64, f64)) -> f64 {
        let (dx, dy) = (uav.0 - user.0, uav.1 - user.1);
        let d = (dx * dx + dy * dy + self.altitude_m * self.altitude_m).sqrt();
        let pl = path_loss_db(d, self.carrier_frequency_hz).expect("altitude keeps d positive");
        self.tx_power_dbm - pl - self.noise_power_dbm
    }

    /// Ground distance at which the SNR falls to the serving threshold, or
    /// zero if even the nadir link misses it.
    pub fn service_radius_m(&self) -> f64 {
        let budget = self.tx_power_dbm - self.noise_power_dbm - self.snr_threshold_db;
        let log_d = (budget + 147.55 - 20.0 * self.carrier_frequency_hz.log10()) / 20.0;
        let d = 10f64.powf(log_d);
        (d * d - self.altitude_m * self.altitude_m).max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nadir_path_loss() {
        // 20log10(40) + 20log10(2e9) − 147.55
        let expect = 20.0 * 40f64.log10() + 20.0 * 2e9f64.log10() - 147.55;
        let pl = path_loss_db(40.0, 2e9).unwrap();
        assert!((pl - expect).abs() < 1e-12);
        assert!((pl - 70.5).abs() < 0.1);
    }

    #[test]
    fn doubling_distance_adds_six_db() {
        let a = path_loss_db(123.0, 2e9).unwrap();
        let b = path_loss_db(246.0, 2e9).unwrap();
        assert!((b - a - 20.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn unit_constants() {
        assert!((path_loss_db(1.0, 1.0).unwrap() + 147.55).abs() < 1e-12);
        assert!(path_loss_db(0.0, 1.0).is_err());
        assert!(path_loss_db(-3.0, 1.0).is_err());
    }

    #[test]
    fn nadir_snr() {
        let r = RadioParams::default();
        let snr = r.snr_db((100.0, 100.0), (100.0, 100.0));
        assert!((snr - (46.0 - path_loss_db(40.0, 2e9).unwrap() + 99.0)).abs() < 1e-12);
        assert!((snr - 74.5).abs() < 0.1);
    }

    #[test]
    fn snr_is_monotone_and_symmetric() {
        let r = RadioParams::default();
        let far = r.snr_db((0.0, 0.0), (700.0, 700.0));
        let near = r.snr_db((0.0, 0.0), (300.0, 10.0));
        assert!(far < near);
        let a = r.snr_db((350.0, 350.0), (400.0, 350.0));
        let b = r.snr_db((350.0, 350.0), (350.0, 300.0));
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn service_radius_inverts_snr() {
        let r = RadioParams {
            snr_threshold_db: 64.0,
            ..RadioParams::default()
        };
        let rad = r.service_radius_m();
        assert!((r.snr_db((0.0, 0.0), (rad, 0.0)) - 64.0).abs() < 1e-9);
    }
}
