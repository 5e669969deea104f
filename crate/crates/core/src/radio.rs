//! Link-budget arithmetic for direct and RIS-reflected mmWave hops.
//!
//! Everything is kept in dB. Noise-limited links only: no fading, shadowing
//! or interference.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadioError {
    #[error("distance {d} m is below the reference distance {d0} m")]
    BelowReferenceDistance { d: f64, d0: f64 },
    #[error("invalid radio parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("required rate must be positive, got {0} bit/s")]
    NonPositiveRate(f64),
}

/// Every constant of the link budget. Defaults reproduce the 38 GHz
/// out-of-band backhaul setup: 20 dBm transmit power, 15 dB RIS beamforming
/// gain, -131 dBm noise, 0.82 throughput efficiency over 18.72 MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    /// Path loss at the reference distance (dB).
    pub pl_ref_db: f64,
    /// Reference distance (m).
    pub d0: f64,
    /// Direct-link path-loss exponent.
    pub alpha: f64,
    /// RIS-link path-loss exponent.
    pub beta: f64,
    /// Meta-surfaces per RIS.
    pub m_surfaces: u32,
    /// RIS beamforming gain (dB).
    pub g_bf_db: f64,
    pub p_tx_dbm: f64,
    pub p_max_dbm: f64,
    pub g_tx_db: f64,
    pub g_rx_db: f64,
    pub noise_dbm: f64,
    /// Throughput efficiency in (0, 1].
    pub eta: f64,
    /// Effective bandwidth (Hz).
    pub b_eff_hz: f64,
    /// When true, distances enter the log term as `d / d0` so that
    /// `pl_ref_db` really is the loss at `d0`. When false, as raw meters.
    pub normalized_log: bool,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            pl_ref_db: 39.0,
            d0: 5.0,
            alpha: 2.13,
            beta: 2.13,
            m_surfaces: 3,
            g_bf_db: 15.0,
            p_tx_dbm: 20.0,
            p_max_dbm: 20.0,
            g_tx_db: 0.0,
            g_rx_db: 0.0,
            noise_dbm: -131.0,
            eta: 0.82,
            b_eff_hz: 18.72e6,
            normalized_log: true,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<(), RadioError> {
        let bad = |name: &'static str, reason: &str| {
            Err(RadioError::InvalidParam {
                name,
                reason: reason.to_string(),
            })
        };
        let finite = [
            ("pl_ref_db", self.pl_ref_db),
            ("g_bf_db", self.g_bf_db),
            ("p_tx_dbm", self.p_tx_dbm),
            ("p_max_dbm", self.p_max_dbm),
            ("g_tx_db", self.g_tx_db),
            ("g_rx_db", self.g_rx_db),
            ("noise_dbm", self.noise_dbm),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return bad(name, "must be finite");
            }
        }
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            return bad("d0", "must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha", "must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta", "must be positive");
        }
        if self.m_surfaces < 1 {
            return bad("m_surfaces", "must be at least 1");
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta", "must lie in (0, 1]");
        }
        if !(self.b_eff_hz > 0.0 && self.b_eff_hz.is_finite()) {
            return bad("b_eff_hz", "must be positive");
        }
        if self.p_tx_dbm > self.p_max_dbm {
            return bad("p_tx_dbm", "exceeds p_max_dbm");
        }
        Ok(())
    }

    fn log_distance(&self, d: f64) -> f64 {
        if self.normalized_log {
            (d / self.d0).log10()
        } else {
            d.log10()
        }
    }

    /// Rate at 0 dB SNR, i.e. `eta * B`.
    pub fn unit_rate_bps(&self) -> f64 {
        self.eta * self.b_eff_hz
    }
}

/// Path loss, SNR and achievable rate of one hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub pl_db: f64,
    pub snr_db: f64,
    pub rate_bps: f64,
}

impl LinkBudget {
    pub fn from_path_loss(pl_db: f64, p: &RadioParams) -> Self {
        let snr = snr_db(pl_db, p);
        Self {
            pl_db,
            snr_db: snr,
            rate_bps: rate_bps(snr, p),
        }
    }
}

/// Close-in path loss of a direct LOS hop of length `d` meters.
pub fn pl_direct_db(d: f64, p: &RadioParams) -> Result<f64, RadioError> {
    if !(d >= p.d0) {
        return Err(RadioError::BelowReferenceDistance { d, d0: p.d0 });
    }
    Ok(p.pl_ref_db + 10.0 * p.alpha * p.log_distance(d))
}

/// Path loss of a hop reflected by a RIS, with legs `d1` (Tx to RIS) and `d2`
/// (RIS to Rx). Only the summed length matters.
pub fn pl_ris_db(d1: f64, d2: f64, p: &RadioParams) -> Result<f64, RadioError> {
    let m = f64::from(p.m_surfaces);
    let effective = m * m * (d1 + d2);
    if !(d1 > 0.0 && d2 > 0.0 && effective >= p.d0) {
        return Err(RadioError::BelowReferenceDistance {
            d: effective,
            d0: p.d0,
        });
    }
    Ok(p.pl_ref_db + 10.0 * p.beta * p.log_distance(effective) - p.g_bf_db)
}

pub fn snr_db(pl_db: f64, p: &RadioParams) -> f64 {
    p.p_tx_dbm + p.g_tx_db + p.g_rx_db - pl_db - p.noise_dbm
}

/// Modified Shannon rate `eta * B * log2(1 + snr)`.
pub fn rate_bps(snr_db: f64, p: &RadioParams) -> f64 {
    let linear = 10f64.powf(snr_db / 10.0);
    p.unit_rate_bps() * linear.ln_1p() / std::f64::consts::LN_2
}

/// SNR needed to reach `c_min` bit/s; exact inverse of [`rate_bps`].
pub fn min_snr_for_rate_db(c_min: f64, p: &RadioParams) -> Result<f64, RadioError> {
    if !(c_min > 0.0) {
        return Err(RadioError::NonPositiveRate(c_min));
    }
    let spectral = c_min / p.unit_rate_bps();
    Ok(10.0 * (spectral * std::f64::consts::LN_2).exp_m1().log10())
}

/// Per-hop availability: the SNR of a hop with loss `pl_db` meets `snr_min_db`.
pub fn link_feasible(pl_db: f64, snr_min_db: f64, p: &RadioParams) -> bool {
    snr_db(pl_db, p) >= snr_min_db
}

/// A throughput requirement, held as the equivalent minimum SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRequirement {
    pub snr_min_db: f64,
}

impl LinkRequirement {
    pub fn from_snr_db(snr_min_db: f64) -> Self {
        Self { snr_min_db }
    }

    pub fn from_rate(c_min_bps: f64, p: &RadioParams) -> Result<Self, RadioError> {
        min_snr_for_rate_db(c_min_bps, p).map(Self::from_snr_db)
    }

    pub fn min_rate_bps(&self, p: &RadioParams) -> f64 {
        rate_bps(self.snr_min_db, p)
    }

    pub fn admits(&self, snr_db: f64) -> bool {
        snr_db >= self.snr_min_db
    }
}
