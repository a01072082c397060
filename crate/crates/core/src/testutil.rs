use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{AbsPosition, Area, ChannelParams, Placement, Scenario, SubcarrierMode, User};

pub fn scenario(users: &[(f64, f64)], num_abs: usize, modulations: usize, subcarriers: usize) -> Scenario {
    Scenario {
        users: users.iter().map(|&(x, y)| User { x, y }).collect(),
        num_abs,
        modulation_count: modulations,
        subcarriers,
        rate_threshold: vec![5e5; users.len()],
        symbol_rate: 2.5e5,
        h_min: 100.0,
        h_max: 2000.0,
        area: Area::square(1002.0),
        mode: SubcarrierMode::Global,
        channel: ChannelParams::urban(),
    }
}

/// Small random instance with mixed rate demands and a random placement.
pub fn random_small(rng: &mut ChaCha8Rng, mode: SubcarrierMode) -> (Scenario, Placement) {
    let ni = rng.random_range(1..=3);
    let nj = rng.random_range(1..=2);
    let nm = rng.random_range(1..=2);
    let nl = rng.random_range(1..=3);
    let pts: Vec<(f64, f64)> = (0..ni).map(|_| (rng.random_range(1.0..1001.0), rng.random_range(1.0..1001.0))).collect();
    let mut s = scenario(&pts, nj, nm, nl);
    s.mode = mode;
    for t in &mut s.rate_threshold {
        *t = s.symbol_rate * rng.random_range(1..=5) as f64;
    }
    let p = Placement::new(
        (0..nj)
            .map(|_| AbsPosition {
                x: rng.random_range(0.0..1002.0),
                y: rng.random_range(0.0..1002.0),
                h: rng.random_range(100.0..1500.0),
            })
            .collect(),
    );
    (s, p)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
