//! Joint 3D placement, subcarrier / modulation allocation and user association
//! for aerial base stations collecting uplink traffic from ground IoT devices.

pub mod bilp;
pub mod error;
pub mod experiments;
pub mod gp;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod sdr;

pub use error::{Error, Result};

#[cfg(test)]
pub(crate) mod testutil;
