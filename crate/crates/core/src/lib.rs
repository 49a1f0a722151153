//! Physical-layer simulator of a dual-channel fiber–THz–fiber 2×2 MIMO link.
//!
//! The chain runs DP-QPSK transmitters through a first fiber span, photonic
//! up-conversion to 385/435 GHz in saturable photomixers, a 2×2 wireless hop,
//! electronic down-conversion to a 25 GHz IF, OCS remodulation on a DP-MZM
//! with sideband selection, a second fiber span and a coherent DSP receiver.
//! Every optical channel is tracked as its own complex envelope with an
//! absolute center frequency; see [`sigcore`].

pub mod error;
pub mod fiberchan;
pub mod harness;
pub mod rxdsp;
pub mod sigcore;
pub mod thz_ot;
pub mod thz_to;
pub mod thz_wireless;
pub mod txchain;
pub mod units;

pub use error::{Error, Result};
pub use sigcore::{Rng, Signal};
