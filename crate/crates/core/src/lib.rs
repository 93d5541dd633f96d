//! Core library for simulating the plug-in/plug-out of an EV charging
//! connector under orientation error.
//!
//! The crate is split by concern:
//!
//! - [`pose`]: rigid transforms and the tilt-angle extraction used to
//!   express charger/socket misalignment,
//! - [`contact`]: a quasi-static contact model of the connector/socket
//!   pair plus a force-torque sensor measurement model,
//! - [`control`]: open-loop rocking strategies and the second-order
//!   force-feedback plug-in controller,
//! - [`analysis`]: force-trace signal analysis (extrema, deltas,
//!   strategy classification) and the statistics used to compare
//!   strategies.
//!
//! Everything here is `no_std` + `alloc`: the controller and contact
//! model are usable from embedded targets, and all randomness enters
//! through caller-provided RNGs so results are reproducible.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod contact;
pub mod control;
pub mod pose;

pub use contact::{ContactPhase, ContactState, MotionCommand, SensorModel, SocketModel, Wrench};
pub use control::{
    AxisState, CompliantCarrier, ControllerGains, GainConvention, OscillationParams,
    PluginController, SecondOrderParams, StrategyKind,
};
pub use pose::{RotationMatrix, TiltPair, Transform};
