//! Air-to-ground channel: geometry, LoS probability and path loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{AbsPosition, User};

/// Default free-space propagation speed, m/s.
pub const LIGHT_SPEED: f64 = 3.0e8;

/// Environment and radio constants shared by every link.
///
/// The noise density is held linearly in W/Hz; the serialized form carries it
/// in dBm/Hz and is converted (and validated) on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelSpec", into = "ChannelSpec")]
pub struct ChannelParams {
    pub alpha: f64,
    pub beta: f64,
    pub path_loss_exponent: f64,
    pub carrier_hz: f64,
    pub light_speed: f64,
    pub xi_los_db: f64,
    pub xi_nlos_db: f64,
    /// W/Hz
    pub noise_psd: f64,
    pub target_ber: f64,
    pub los_threshold: f64,
}

/// On-disk form of [`ChannelParams`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_exponent")]
    pub path_loss_exponent: f64,
    pub carrier_hz: f64,
    #[serde(default = "default_light_speed")]
    pub light_speed: f64,
    pub xi_los_db: f64,
    pub xi_nlos_db: f64,
    pub noise_dbm_per_hz: f64,
    pub target_ber: f64,
    pub los_threshold: f64,
}

fn default_exponent() -> f64 {
    2.0
}

fn default_light_speed() -> f64 {
    LIGHT_SPEED
}

impl TryFrom<ChannelSpec> for ChannelParams {
    type Error = Error;

    fn try_from(s: ChannelSpec) -> Result<Self> {
        let p = ChannelParams {
            alpha: s.alpha,
            beta: s.beta,
            path_loss_exponent: s.path_loss_exponent,
            carrier_hz: s.carrier_hz,
            light_speed: s.light_speed,
            xi_los_db: s.xi_los_db,
            xi_nlos_db: s.xi_nlos_db,
            noise_psd: dbm_per_hz_to_watts(s.noise_dbm_per_hz),
            target_ber: s.target_ber,
            los_threshold: s.los_threshold,
        };
        p.validate()?;
        Ok(p)
    }
}

impl From<ChannelParams> for ChannelSpec {
    fn from(p: ChannelParams) -> Self {
        ChannelSpec {
            alpha: p.alpha,
            beta: p.beta,
            path_loss_exponent: p.path_loss_exponent,
            carrier_hz: p.carrier_hz,
            light_speed: p.light_speed,
            xi_los_db: p.xi_los_db,
            xi_nlos_db: p.xi_nlos_db,
            noise_dbm_per_hz: watts_to_dbm_per_hz(p.noise_psd),
            target_ber: p.target_ber,
            los_threshold: p.los_threshold,
        }
    }
}

pub fn dbm_per_hz_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm_per_hz(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}

impl ChannelParams {
    /// Urban preset: alpha 9.61, beta 0.16 at 2.1 GHz, -170 dBm/Hz noise,
    /// 1.6 / 23 dB excess losses, BER target 1e-8, LoS threshold 0.99.
    pub fn urban() -> Self {
        ChannelParams {
            alpha: 9.61,
            beta: 0.16,
            path_loss_exponent: 2.0,
            carrier_hz: 2.1e9,
            light_speed: LIGHT_SPEED,
            xi_los_db: 1.6,
            xi_nlos_db: 23.0,
            noise_psd: dbm_per_hz_to_watts(-170.0),
            target_ber: 1e-8,
            los_threshold: 0.99,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        let finite = [
            self.alpha,
            self.beta,
            self.path_loss_exponent,
            self.carrier_hz,
            self.light_speed,
            self.xi_los_db,
            self.xi_nlos_db,
            self.noise_psd,
            self.target_ber,
            self.los_threshold,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("channel parameters must be finite");
        }
        if self.alpha <= 0.0 || self.beta <= 0.0 {
            return bad("alpha and beta must be positive");
        }
        if !(self.los_threshold > 0.0 && self.los_threshold < 1.0) {
            return bad("LoS threshold must lie in (0, 1)");
        }
        if self.xi_nlos_db < self.xi_los_db {
            return bad("NLoS excess loss must not be below the LoS excess loss");
        }
        if !(self.target_ber > 0.0 && self.target_ber < 0.5) {
            return bad("target BER must lie in (0, 0.5)");
        }
        if self.carrier_hz <= 0.0 || self.noise_psd <= 0.0 || self.light_speed <= 0.0 {
            return bad("carrier frequency, noise density and propagation speed must be positive");
        }
        if self.path_loss_exponent <= 0.0 {
            return bad("path-loss exponent must be positive");
        }
        Ok(())
    }

    /// (xi_LoS - xi_NLoS) / 10, non-positive.
    pub fn eta(&self) -> f64 {
        (self.xi_los_db - self.xi_nlos_db) / 10.0
    }

    /// (4 pi f_c / c), the free-space factor inside the path-loss logarithm.
    pub fn free_space_factor(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.carrier_hz / self.light_speed
    }

    /// sin of the minimum elevation angle that meets the LoS threshold.
    pub fn coverage_sine(&self) -> f64 {
        let theta = inverse_los_probability(self.los_threshold, self)
            .expect("validated threshold lies in (0, 1)");
        theta.to_radians().sin()
    }

    /// Ratio r/h at which a user sits exactly on the LoS coverage boundary,
    /// i.e. s / sqrt(1 - s^2) inverted: horizontal radius = h * sqrt(1 - s^2) / s.
    pub fn coverage_altitude_per_radius(&self) -> f64 {
        let s = self.coverage_sine();
        s / (1.0 - s * s).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Los,
    Nlos,
}

pub fn horizontal_distance(user: &User, p: &AbsPosition) -> f64 {
    (p.x - user.x).hypot(p.y - user.y)
}

pub fn distance(user: &User, p: &AbsPosition) -> f64 {
    let dx = p.x - user.x;
    let dy = p.y - user.y;
    (dx * dx + dy * dy + p.h * p.h).sqrt()
}

/// Elevation angle in degrees.
pub fn elevation_angle(user: &User, p: &AbsPosition) -> Result<f64> {
    let d = distance(user, p);
    if d <= 0.0 || !d.is_finite() {
        return Err(Error::Domain(format!("elevation angle undefined at distance {d}")));
    }
    Ok((p.h / d).clamp(-1.0, 1.0).asin().to_degrees())
}

pub fn los_probability(theta_deg: f64, ch: &ChannelParams) -> f64 {
    1.0 / (1.0 + ch.alpha * (-ch.beta * (theta_deg - ch.alpha)).exp())
}

/// Elevation angle (degrees) at which the LoS probability equals `eps`.
pub fn inverse_los_probability(eps: f64, ch: &ChannelParams) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("LoS probability {eps} outside (0, 1)")));
    }
    Ok(ch.alpha + (ch.alpha * eps / (1.0 - eps)).ln() / ch.beta)
}

/// Path loss in dB at distance `d` meters.
pub fn pathloss(d: f64, ch: &ChannelParams, link: LinkKind) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("path loss needs a positive distance, got {d}")));
    }
    let xi = match link {
        LinkKind::Los => ch.xi_los_db,
        LinkKind::Nlos => ch.xi_nlos_db,
    };
    Ok(free_space_db(d, ch) + xi)
}

fn free_space_db(d: f64, ch: &ChannelParams) -> f64 {
    10.0 * ch.path_loss_exponent * (ch.free_space_factor() * d).log10()
}

/// LoS-probability weighted path loss in dB.
pub fn average_pathloss(user: &User, p: &AbsPosition, ch: &ChannelParams) -> Result<f64> {
    let d = distance(user, p);
    let pr = los_probability(elevation_angle(user, p)?, ch);
    Ok(average_pathloss_at(d, pr, ch))
}

pub(crate) fn average_pathloss_at(d: f64, pr_los: f64, ch: &ChannelParams) -> f64 {
    free_space_db(d, ch) + pr_los * (ch.xi_los_db - ch.xi_nlos_db) + ch.xi_nlos_db
}

/// Whether the link meets the LoS-probability threshold, i.e.
/// d <= h / sin(theta*).
pub fn los_feasible(user: &User, p: &AbsPosition, ch: &ChannelParams) -> bool {
    distance(user, p) <= p.h / ch.coverage_sine()
}
