//! MPSK error rate and the minimum transmit power that meets a BER target.

use serde::{Deserialize, Serialize};

use super::channel::{distance, los_probability};
use super::{AbsPosition, Assignment, ChannelParams, Placement, Scenario, Scheme, User};
use crate::error::{Error, Result};
use crate::oracle::{q_function, q_inverse};

/// Per-modulation power constants, W*s/(bit*m^2).
///
/// `los[k]` multiplies r*d^2 under pure LoS loss, `nlos[k]` under pure NLoS loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationTable {
    pub los: Vec<f64>,
    pub nlos: Vec<f64>,
}

impl ModulationTable {
    pub fn len(&self) -> usize {
        self.los.len()
    }

    pub fn is_empty(&self) -> bool {
        self.los.is_empty()
    }
}

/// Bits per symbol of modulation index `k` (k = 0 is QPSK).
pub fn bits_per_symbol(k: usize) -> f64 {
    (k + 2) as f64
}

fn phase_sine(k: usize) -> f64 {
    // sin(pi / 2^(m+1)) with m = k + 1
    (std::f64::consts::PI / 2f64.powi(k as i32 + 2)).sin()
}

/// Bit error rate of 2^(k+2)-PSK at received power `p_receive` (W).
pub fn ber_mpsk(p_receive: f64, k: usize, symbol_rate: f64, ch: &ChannelParams) -> f64 {
    let bits = bits_per_symbol(k);
    let snr = (2.0 * p_receive.max(0.0) / (symbol_rate * ch.noise_psd)).sqrt();
    2.0 / bits * q_function(snr * phase_sine(k))
}

/// Power constants for the first `count` modulation indices.
pub fn modulation_constants(ch: &ChannelParams, count: usize) -> Result<ModulationTable> {
    let mut los = Vec::with_capacity(count);
    let mut nlos = Vec::with_capacity(count);
    let spread = ch.free_space_factor().powf(ch.path_loss_exponent);
    for k in 0..count {
        let bits = bits_per_symbol(k);
        let arg = ch.target_ber * bits / 2.0;
        if arg >= 0.5 {
            return Err(Error::ModulationOrder { m: k as u32 + 1, arg });
        }
        let qi = q_inverse(arg)?;
        let base = (qi / phase_sine(k)).powi(2) / bits * ch.noise_psd / 2.0 * spread;
        los.push(base * 10f64.powf(ch.xi_los_db / 10.0));
        nlos.push(base * 10f64.powf(ch.xi_nlos_db / 10.0));
    }
    Ok(ModulationTable { los, nlos })
}

/// Transmit power for a link of length `d` with LoS probability `pr_los`.
///
/// `rate` is the bit rate r = symbol_rate * bits_per_symbol(k).
pub fn link_power(
    table: &ModulationTable,
    k: usize,
    rate: f64,
    d: f64,
    pr_los: f64,
    exponent: f64,
    eta: f64,
    scheme: Scheme,
) -> f64 {
    let spread = rate * d.powf(exponent);
    match scheme {
        Scheme::Los => table.los[k] * spread,
        Scheme::Generalized => table.nlos[k] * spread * 10f64.powf(eta * pr_los),
    }
}

fn los_prob_at(p: &AbsPosition, d: f64, ch: &ChannelParams) -> f64 {
    let theta = if d > 0.0 { (p.h / d).clamp(-1.0, 1.0).asin().to_degrees() } else { 90.0 };
    los_probability(theta, ch)
}

/// Minimum transmit power (W) of `user` at modulation index `k` towards an ABS at `p`.
pub fn transmit_power(
    user: &User,
    k: usize,
    p: &AbsPosition,
    symbol_rate: f64,
    ch: &ChannelParams,
    table: &ModulationTable,
    scheme: Scheme,
) -> f64 {
    let d = distance(user, p);
    let pr = match scheme {
        Scheme::Los => 1.0,
        Scheme::Generalized => los_prob_at(p, d, ch),
    };
    let rate = symbol_rate * bits_per_symbol(k);
    link_power(table, k, rate, d, pr, ch.path_loss_exponent, ch.eta(), scheme)
}

/// Total uplink transmit power of an assignment (W).
pub fn total_power(
    scenario: &Scenario,
    placement: &Placement,
    assignment: &Assignment,
    scheme: Scheme,
) -> Result<f64> {
    let table = modulation_constants(&scenario.channel, scenario.modulation_count)?;
    Ok(total_power_with(scenario, &table, placement, assignment, scheme))
}

/// [`total_power`] with a precomputed table.
pub fn total_power_with(
    scenario: &Scenario,
    table: &ModulationTable,
    placement: &Placement,
    assignment: &Assignment,
    scheme: Scheme,
) -> f64 {
    assignment
        .entries
        .iter()
        .map(|l| {
            transmit_power(
                &scenario.users[l.user],
                l.modulation,
                &placement.positions[l.abs],
                scenario.symbol_rate,
                &scenario.channel,
                table,
                scheme,
            )
        })
        .sum()
}
