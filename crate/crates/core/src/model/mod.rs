//! Domain types and the channel / power mathematics shared by every solver.

mod channel;
mod power;
mod scenario;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use channel::{
    average_pathloss, dbm_per_hz_to_watts, distance, elevation_angle, horizontal_distance,
    inverse_los_probability, los_feasible, los_probability, pathloss, watts_to_dbm_per_hz,
    ChannelParams, ChannelSpec, LinkKind, LIGHT_SPEED,
};
pub use power::{
    ber_mpsk, bits_per_symbol, link_power, modulation_constants, total_power, total_power_with,
    transmit_power, ModulationTable,
};
pub use scenario::{Area, Scenario, SubcarrierMode};

use crate::error::{Error, Result};

/// Ground IoT device location, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub x: f64,
    pub y: f64,
}

/// Position of one aerial base station, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsPosition {
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub positions: Vec<AbsPosition>,
}

impl Placement {
    pub fn new(positions: Vec<AbsPosition>) -> Self {
        Placement { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Checks the altitude box and the padded horizontal bounds.
    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        if self.positions.len() != scenario.num_abs {
            return Err(Error::InvalidParameter(format!(
                "placement has {} ABSs, scenario has {}",
                self.positions.len(),
                scenario.num_abs
            )));
        }
        for (j, p) in self.positions.iter().enumerate() {
            if !(p.h >= scenario.h_min && p.h <= scenario.h_max) {
                return Err(Error::InvalidParameter(format!(
                    "ABS {j} altitude {} outside [{}, {}]",
                    p.h, scenario.h_min, scenario.h_max
                )));
            }
            if !scenario.area.contains(p.x, p.y) {
                return Err(Error::InvalidParameter(format!(
                    "ABS {j} at ({}, {}) lies outside the area",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }

    /// Mean altitude over the ABSs that serve at least one user, or over all
    /// ABSs when the assignment is empty.
    pub fn average_altitude(&self, assignment: &Assignment) -> f64 {
        let active: Vec<f64> = (0..self.positions.len())
            .filter(|&j| assignment.serves(j))
            .map(|j| self.positions[j].h)
            .collect();
        let hs: Vec<f64> = if active.is_empty() {
            self.positions.iter().map(|p| p.h).collect()
        } else {
            active
        };
        if hs.is_empty() {
            return 0.0;
        }
        hs.iter().sum::<f64>() / hs.len() as f64
    }
}

/// One active entry of the binary allocation tensor: `user` transmits on
/// `subcarrier` to ABS `abs` with modulation index `modulation`
/// (0-based; index k is 2^(k+2)-PSK, carrying k + 2 bits per symbol).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    pub user: usize,
    pub modulation: usize,
    pub abs: usize,
    pub subcarrier: usize,
}

/// Sparse form of the allocation tensor, kept sorted by (user, modulation, abs, subcarrier).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Assignment {
    pub entries: Vec<Link>,
}

impl Assignment {
    pub fn new(mut entries: Vec<Link>) -> Self {
        entries.sort_unstable();
        entries.dedup();
        Assignment { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn serves(&self, abs: usize) -> bool {
        self.entries.iter().any(|l| l.abs == abs)
    }

    /// ABS serving `user`, if any (the first one found).
    pub fn abs_of(&self, user: usize) -> Option<usize> {
        self.entries.iter().find(|l| l.user == user).map(|l| l.abs)
    }

    /// Distinct (user, abs) pairs, sorted.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = self.entries.iter().map(|l| (l.user, l.abs)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Sum over entries of `weight(modulation)` for each (user, abs) pair,
    /// as a dense `users x abs` matrix in row-major order.
    pub fn pair_weights(&self, users: usize, abs: usize, weight: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut w = vec![0.0; users * abs];
        for l in &self.entries {
            w[l.user * abs + l.abs] += weight(l.modulation);
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Every link must meet the LoS-probability threshold; LoS path loss.
    Los,
    /// LoS-probability weighted path loss, no coverage constraint.
    Generalized,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Los => "los",
            Scheme::Generalized => "generalized",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "los" => Ok(Scheme::Los),
            "generalized" | "general" => Ok(Scheme::Generalized),
            other => Err(Error::InvalidParameter(format!("unknown scheme {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_is_canonical() {
        let a = Assignment::new(vec![
            Link { user: 1, modulation: 0, abs: 0, subcarrier: 2 },
            Link { user: 0, modulation: 1, abs: 1, subcarrier: 0 },
            Link { user: 1, modulation: 0, abs: 0, subcarrier: 2 },
        ]);
        assert_eq!(a.len(), 2);
        assert_eq!(a.entries[0].user, 0);
        assert_eq!(a.pairs(), vec![(0, 1), (1, 0)]);
        assert_eq!(a.abs_of(1), Some(0));
        assert!(!a.serves(2));
    }

    #[test]
    fn average_altitude_ignores_idle() {
        let p = Placement::new(vec![
            AbsPosition { x: 0.0, y: 0.0, h: 100.0 },
            AbsPosition { x: 0.0, y: 0.0, h: 900.0 },
        ]);
        let a = Assignment::new(vec![Link { user: 0, modulation: 0, abs: 0, subcarrier: 0 }]);
        assert_eq!(p.average_altitude(&a), 100.0);
        assert_eq!(p.average_altitude(&Assignment::default()), 500.0);
    }

    #[test]
    fn scheme_parses() {
        assert_eq!("LoS".parse::<Scheme>().unwrap(), Scheme::Los);
        assert_eq!("generalized".parse::<Scheme>().unwrap(), Scheme::Generalized);
        assert!("x".parse::<Scheme>().is_err());
    }
}
