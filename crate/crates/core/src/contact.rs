//! Quasi-static contact model of the connector/socket pair and the
//! force-torque sensor measurement model.
//!
//! The pin-level geometry is abstracted into a tilt cone that shrinks
//! linearly with insertion depth: wide at the chamfered entry, tight at
//! full depth. While the commanded tilt stays inside the cone the
//! connector slides with a velocity-proportional axial resistance and a
//! depth-scaled lateral spring reaction; outside it the depth holds and
//! the wall pushes back on the excess. All randomness (sensor noise,
//! initial misalignment) enters through caller-provided RNGs.

use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::pose::TiltPair;

/// Errors from the contact model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactError {
    NonPositiveDt,
    InvalidModel,
}

impl fmt::Display for ContactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContactError::NonPositiveDt => write!(f, "dt must be positive"),
            ContactError::InvalidModel => write!(f, "socket model parameters out of range"),
        }
    }
}

/// Forces (N) and torques (Nm) at the tool center point, expressed in
/// the connector frame: z along the insertion axis, reactions on the
/// connector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Wrench {
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
}

impl Wrench {
    pub const ZERO: Wrench = Wrench {
        fx: 0.0,
        fy: 0.0,
        fz: 0.0,
        tx: 0.0,
        ty: 0.0,
        tz: 0.0,
    };

    pub fn new(fx: f64, fy: f64, fz: f64, tx: f64, ty: f64, tz: f64) -> Self {
        Self { fx, fy, fz, tx, ty, tz }
    }
}

/// Geometry and stiffness of the socket/connector pair.
///
/// Depths are millimetres, cone angles degrees. The admissible tilt
/// interpolates linearly from `capture_cone` at zero depth down to
/// `clearance_cone` at full depth. `tilt_anisotropy` widens the x tilt
/// axis relative to the y axis (ratio of admissible plays; the keyed
/// connector shell admits more left-right rocking than up-down, which
/// is also what the human rocking amplitudes show at roughly 9.5/6.8).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SocketModel {
    /// Full insertion depth, mm.
    pub full_depth: f64,
    /// Admissible total tilt at zero depth, degrees.
    pub capture_cone: f64,
    /// Admissible total tilt at full depth, degrees.
    pub clearance_cone: f64,
    /// Ratio of x-axis to y-axis admissible tilt (1 = round cone).
    pub tilt_anisotropy: f64,
    /// Lateral reaction per degree of tilt at full engagement, N/deg.
    pub lateral_stiffness: f64,
    /// Wall reaction per degree of tilt beyond the cone, N/deg.
    pub jam_stiffness: f64,
    /// Axial sliding resistance, N per mm/s of feed.
    pub sliding_resistance: f64,
    /// Extra axial reaction spike when the connector seats, N.
    pub seat_detent: f64,
    /// Lever arm from the sensed frame to the contact, m; couples
    /// lateral forces into torques.
    pub torque_arm: f64,
}

impl Default for SocketModel {
    fn default() -> Self {
        Self {
            full_depth: 30.0,
            capture_cone: 6.0,
            clearance_cone: 1.0,
            tilt_anisotropy: 1.4,
            lateral_stiffness: 6.0,
            jam_stiffness: 5.0,
            sliding_resistance: 8.0,
            seat_detent: 40.0,
            torque_arm: 0.3,
        }
    }
}

impl SocketModel {
    pub fn validate(&self) -> Result<(), ContactError> {
        let ok = self.full_depth > 0.0
            && self.capture_cone > self.clearance_cone
            && self.clearance_cone > 0.0
            && self.tilt_anisotropy > 0.0
            && self.lateral_stiffness > 0.0
            && self.jam_stiffness > 0.0
            && self.sliding_resistance > 0.0
            && self.seat_detent >= 0.0
            && self.torque_arm >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(ContactError::InvalidModel)
        }
    }

    /// Admissible total tilt at `depth`, degrees; strictly decreasing
    /// from the capture cone to the clearance cone.
    pub fn allowed_tilt(&self, depth: f64) -> f64 {
        let frac = (depth / self.full_depth).clamp(0.0, 1.0);
        self.capture_cone + (self.clearance_cone - self.capture_cone) * frac
    }

    /// Anisotropy-weighted tilt magnitude comparable against
    /// [`allowed_tilt`](Self::allowed_tilt).
    pub fn tilt_utilization(&self, tilt: &TiltPair) -> f64 {
        let ax = self.tilt_anisotropy.sqrt();
        let ay = 1.0 / ax;
        (tilt.theta_x / ax).hypot(tilt.theta_y / ay)
    }

    /// How far the tilt reaches beyond the admissible cone at `depth`,
    /// degrees; positive means wedged.
    pub fn jam_excess(&self, tilt: &TiltPair, depth: f64) -> f64 {
        self.tilt_utilization(tilt) - self.allowed_tilt(depth)
    }

    pub fn admissible(&self, tilt: &TiltPair, depth: f64) -> bool {
        self.jam_excess(tilt, depth) <= 0.0
    }

    /// Radially scales a tilt back into the admissible cone at `depth`.
    pub fn clamp_tilt(&self, tilt: &TiltPair, depth: f64) -> TiltPair {
        let util = self.tilt_utilization(tilt);
        let allowed = self.allowed_tilt(depth);
        if util <= allowed {
            *tilt
        } else {
            let scale = allowed / util;
            TiltPair::new(tilt.theta_x * scale, tilt.theta_y * scale)
        }
    }
}

/// Engagement phase of the connector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ContactPhase {
    Free,
    Engaged,
    Seated,
}

/// Simulator state: insertion depth, actual tilt, phase, elapsed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactState {
    /// Insertion depth, mm, in `[0, full_depth]`.
    pub depth: f64,
    /// Actual connector tilt (signed), degrees.
    pub tilt: TiltPair,
    pub phase: ContactPhase,
    /// Elapsed simulation time, s.
    pub time: f64,
}

impl ContactState {
    /// Initial state: connector at the socket mouth with the given tilt.
    pub fn at_mouth(tilt: TiltPair) -> Self {
        Self {
            depth: 0.0,
            tilt,
            phase: ContactPhase::Free,
            time: 0.0,
        }
    }

    pub fn is_seated(&self) -> bool {
        self.phase == ContactPhase::Seated
    }

    pub fn is_free(&self) -> bool {
        self.phase == ContactPhase::Free
    }

    fn phase_for(depth: f64, full_depth: f64) -> ContactPhase {
        if depth >= full_depth {
            ContactPhase::Seated
        } else if depth <= 0.0 {
            ContactPhase::Free
        } else {
            ContactPhase::Engaged
        }
    }
}

/// Commanded motion for one control period.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MotionCommand {
    /// Absolute tilt setpoint (signed), degrees; reached within the
    /// step (no actuator lag is modelled).
    pub tilt: TiltPair,
    /// Axial feed, mm/s; positive inserts.
    pub v_z: f64,
    /// Axial force budget when wedged, N.
    pub push_force: f64,
}

/// Advances the contact state by `dt` under a motion command and
/// returns the new state with the reaction wrench on the connector.
///
/// Inside the admissible cone the depth follows the feed and the
/// reactions are `F_z = -k_slide * v_z`, plus lateral spring forces
/// proportional to tilt and engagement. Wedged (tilt beyond the cone)
/// the depth holds, the axial reaction saturates at the push budget,
/// and the wall adds a jam reaction proportional to the excess along
/// the tilt direction. Lateral forces couple into torques through the
/// lever arm: `tau_x = -L * F_y`, `tau_y = L * F_x`. Seating adds a
/// one-step detent spike on top of the sliding resistance.
pub fn step(
    socket: &SocketModel,
    state: &ContactState,
    cmd: &MotionCommand,
    dt: f64,
) -> Result<(ContactState, Wrench), ContactError> {
    if dt <= 0.0 {
        return Err(ContactError::NonPositiveDt);
    }
    let tilt = cmd.tilt;
    let excess = socket.jam_excess(&tilt, state.depth);

    let mut fz;
    let (fx, fy);
    let depth;

    if state.depth <= 0.0 && cmd.v_z <= 0.0 {
        // Clear of the socket and not pressing in: no contact at all.
        depth = 0.0;
        fz = 0.0;
        fx = 0.0;
        fy = 0.0;
    } else if excess <= 0.0 {
        depth = (state.depth + cmd.v_z * dt).clamp(0.0, socket.full_depth);
        fz = -socket.sliding_resistance * cmd.v_z;
        let engagement = depth / socket.full_depth;
        fy = -socket.lateral_stiffness * tilt.theta_x * engagement;
        fx = -socket.lateral_stiffness * tilt.theta_y * engagement;
        if depth >= socket.full_depth && state.depth < socket.full_depth && cmd.v_z > 0.0 {
            fz -= socket.seat_detent;
        }
    } else {
        depth = state.depth;
        fz = if cmd.v_z > 0.0 {
            -cmd.push_force
        } else if cmd.v_z < 0.0 {
            cmd.push_force
        } else {
            0.0
        };
        let total = tilt.total();
        let (ux, uy) = (tilt.theta_x / total, tilt.theta_y / total);
        let engagement = depth / socket.full_depth;
        fy = -socket.lateral_stiffness * tilt.theta_x * engagement
            - socket.jam_stiffness * excess * ux;
        fx = -socket.lateral_stiffness * tilt.theta_y * engagement
            - socket.jam_stiffness * excess * uy;
    }

    let wrench = Wrench {
        fx,
        fy,
        fz,
        tx: -socket.torque_arm * fy,
        ty: socket.torque_arm * fx,
        tz: 0.0,
    };
    // A fully seated connector is confined to the clearance cone no
    // matter what tilt is commanded; shallower engagement follows the
    // setpoint (the body can tilt while only the tip binds).
    let stored_tilt = if depth >= socket.full_depth {
        socket.clamp_tilt(&tilt, depth)
    } else {
        tilt
    };
    let next = ContactState {
        depth,
        tilt: stored_tilt,
        phase: ContactState::phase_for(depth, socket.full_depth),
        time: state.time + dt,
    };
    Ok((next, wrench))
}

/// Force-torque sensor model: per-channel bias plus zero-mean Gaussian
/// noise, saturated to the sensor ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SensorModel {
    /// Noise standard deviation per force channel, N.
    pub noise_sigma_force: f64,
    /// Noise standard deviation per torque channel, Nm.
    pub noise_sigma_torque: f64,
    /// Static per-channel offset.
    pub bias: Wrench,
    /// Force saturation, N (the sensed range is +-150 N).
    pub force_range: f64,
    /// Torque saturation, Nm (+-15 Nm).
    pub torque_range: f64,
    /// Output rate, Hz.
    pub sample_rate: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            noise_sigma_force: 0.0,
            noise_sigma_torque: 0.0,
            bias: Wrench::ZERO,
            force_range: 150.0,
            torque_range: 15.0,
            sample_rate: 100.0,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<(), ContactError> {
        let ok = self.noise_sigma_force >= 0.0
            && self.noise_sigma_torque >= 0.0
            && self.force_range > 0.0
            && self.torque_range > 0.0
            && self.sample_rate > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ContactError::InvalidModel)
        }
    }

    /// Sensor period, s.
    pub fn period(&self) -> f64 {
        1.0 / self.sample_rate
    }
}

/// One sensor reading of a true wrench: bias + Gaussian noise, then
/// saturation to the sensor ranges.
pub fn sample_sensor(sensor: &SensorModel, w: &Wrench, rng: &mut impl Rng) -> Wrench {
    let nf = Normal::new(0.0, sensor.noise_sigma_force).expect("sigma validated non-negative");
    let nt = Normal::new(0.0, sensor.noise_sigma_torque).expect("sigma validated non-negative");
    let fr = sensor.force_range;
    let tr = sensor.torque_range;
    Wrench {
        fx: (w.fx + sensor.bias.fx + nf.sample(rng)).clamp(-fr, fr),
        fy: (w.fy + sensor.bias.fy + nf.sample(rng)).clamp(-fr, fr),
        fz: (w.fz + sensor.bias.fz + nf.sample(rng)).clamp(-fr, fr),
        tx: (w.tx + sensor.bias.tx + nt.sample(rng)).clamp(-tr, tr),
        ty: (w.ty + sensor.bias.ty + nt.sample(rng)).clamp(-tr, tr),
        tz: (w.tz + sensor.bias.tz + nt.sample(rng)).clamp(-tr, tr),
    }
}

/// Draws a random initial misalignment: direction uniform on the
/// circle, total magnitude uniform below `max_total` degrees.
pub fn sample_initial_error(rng: &mut impl Rng, max_total: f64) -> TiltPair {
    let direction = rng.random_range(0.0..core::f64::consts::TAU);
    let magnitude = rng.random_range(0.0..max_total);
    TiltPair::new(magnitude * direction.cos(), magnitude * direction.sin())
}
