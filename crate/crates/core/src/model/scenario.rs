use serde::{Deserialize, Serialize};

use super::{ChannelParams, User};
use crate::error::{Error, Result};

/// Rectangular region in which ABSs may hover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Area {
    pub fn square(side: f64) -> Self {
        Area { x_min: 0.0, x_max: side, y_min: 0.0, y_max: side }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    pub fn clamp(&self, x: f64, y: f64) -> (f64, f64) {
        (x.clamp(self.x_min, self.x_max), y.clamp(self.y_min, self.y_max))
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }
}

/// How the subcarrier pool is shared between ABSs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubcarrierMode {
    /// One pool for the whole network; every subcarrier carries exactly one link.
    #[default]
    Global,
    /// Each ABS owns its own `L` subcarriers, each used at most once.
    PerAbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub users: Vec<User>,
    pub num_abs: usize,
    /// Number of modulation orders available (QPSK, 8PSK, ...).
    pub modulation_count: usize,
    pub subcarriers: usize,
    /// Per-user minimum bit rate, bit/s.
    pub rate_threshold: Vec<f64>,
    /// Symbols per second on every subcarrier.
    pub symbol_rate: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub area: Area,
    #[serde(default)]
    pub mode: SubcarrierMode,
    pub channel: ChannelParams,
}

impl Scenario {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        self.channel.validate()?;
        if self.users.is_empty() {
            return bad("at least one user is required".into());
        }
        if self.num_abs == 0 || self.modulation_count == 0 || self.subcarriers == 0 {
            return bad("ABS, modulation and subcarrier counts must be at least 1".into());
        }
        if self.rate_threshold.len() != self.users.len() {
            return bad(format!(
                "{} rate thresholds for {} users",
                self.rate_threshold.len(),
                self.users.len()
            ));
        }
        if self.rate_threshold.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return bad("rate thresholds must be positive and finite".into());
        }
        if !(self.symbol_rate.is_finite() && self.symbol_rate > 0.0) {
            return bad("symbol rate must be positive".into());
        }
        if !(self.h_min > 0.0 && self.h_min < self.h_max && self.h_max.is_finite()) {
            return bad(format!("altitude box [{}, {}] is invalid", self.h_min, self.h_max));
        }
        let a = &self.area;
        if !(a.x_min < a.x_max && a.y_min < a.y_max) || ![a.x_min, a.x_max, a.y_min, a.y_max].iter().all(|v| v.is_finite()) {
            return bad("area bounds are invalid".into());
        }
        for (i, u) in self.users.iter().enumerate() {
            if !(u.x.is_finite() && u.y.is_finite()) {
                return bad(format!("user {i} has a non-finite coordinate"));
            }
            if !(u.x > 0.0 && u.y > 0.0) {
                return bad(format!("user {i} coordinates must be strictly positive"));
            }
        }
        Ok(())
    }

    /// Shifts users and area so every user coordinate is at least `margin`.
    /// A no-op when that already holds.
    pub fn translated_positive(mut self, margin: f64) -> Self {
        let min_x = self.users.iter().map(|u| u.x).fold(f64::INFINITY, f64::min);
        let min_y = self.users.iter().map(|u| u.y).fold(f64::INFINITY, f64::min);
        let dx = if min_x < margin { margin - min_x } else { 0.0 };
        let dy = if min_y < margin { margin - min_y } else { 0.0 };
        for u in &mut self.users {
            u.x += dx;
            u.y += dy;
        }
        self.area.x_min += dx;
        self.area.x_max += dx;
        self.area.y_min += dy;
        self.area.y_max += dy;
        self
    }

    /// Bits per second one subcarrier carries at modulation index `k`.
    pub fn link_rate(&self, k: usize) -> f64 {
        self.symbol_rate * super::bits_per_symbol(k)
    }

    /// Number of rate units a user needs, where one unit is `symbol_rate` bit/s.
    /// Every modulation carries an integer number of units.
    pub fn rate_units(&self, user: usize) -> usize {
        let q = self.rate_threshold[user] / self.symbol_rate;
        (q - 1e-9 * q.max(1.0)).ceil().max(0.0) as usize
    }
}
