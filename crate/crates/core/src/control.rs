//! Insertion strategies and the haptic plug-in controller.
//!
//! Three open-loop rocking strategies (left-right, up-down, spiral)
//! mirror how human operators wiggle the connector home, plus a
//! straight-back mode used for plug-out. The closed-loop controller
//! maps sensed lateral forces to tilt commands through a second-order
//! response tuned from human timing data: settle time picks the
//! natural frequency via `t_s = 4 / (zeta * omega_n)`, damping is
//! critical so steps never overshoot.

use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::analysis::DeltaStats;
use crate::contact::{MotionCommand, SocketModel, Wrench};
use crate::pose::TiltPair;

/// Errors from controller configuration and stepping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlError {
    /// `dt` must be positive and at most `1 / (10 * omega_n)`.
    StepTooLarge,
    NonPositiveDt,
    /// Gains/statistics fed to `controller_init` must be positive.
    InvalidStats,
    InvalidParams,
}

impl fmt::Display for ControlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlError::StepTooLarge => write!(f, "dt exceeds the 1/(10 omega_n) resolution guard"),
            ControlError::NonPositiveDt => write!(f, "dt must be positive"),
            ControlError::InvalidStats => write!(f, "response statistics must be positive"),
            ControlError::InvalidParams => write!(f, "invalid controller parameters"),
        }
    }
}

/// The insertion strategies observed in the human study, plus the
/// straight backward motion used by many participants for plug-out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StrategyKind {
    /// Rocks about the x-axis; shows up in `F_y` and `tau_x`.
    LeftRight,
    /// Rocks about the y-axis; shows up in `F_x` and `tau_y`.
    UpDown,
    /// Rocks both axes with a 90 degree phase offset (circular motion).
    Spiral,
    /// No rocking at all; straight axial motion.
    StraightBack,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::LeftRight,
        StrategyKind::UpDown,
        StrategyKind::Spiral,
        StrategyKind::StraightBack,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::LeftRight => "lr",
            StrategyKind::UpDown => "ud",
            StrategyKind::Spiral => "sp",
            StrategyKind::StraightBack => "straight_back",
        }
    }

    /// Which tilt axes the strategy actively rocks. Rocking an axis is
    /// what lets wall reactions re-align that axis of the carried
    /// connector; a held axis stays friction-locked.
    pub fn rocked_axes(&self) -> (bool, bool) {
        match self {
            StrategyKind::LeftRight => (true, false),
            StrategyKind::UpDown => (false, true),
            StrategyKind::Spiral => (true, true),
            StrategyKind::StraightBack => (false, false),
        }
    }
}

/// Amplitudes and timing of the open-loop rocking motion.
///
/// Defaults reproduce the human spiral-strategy statistics: rocking
/// ranges of 9.5 deg / 6.8 deg peak-to-peak and 0.26 s between force
/// extrema (half the oscillation period).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct OscillationParams {
    /// Amplitude on the x tilt axis, degrees.
    pub amplitude_x: f64,
    /// Amplitude on the y tilt axis, degrees.
    pub amplitude_y: f64,
    /// Oscillation period, seconds.
    pub period: f64,
    /// Phase offset of the y axis relative to the x axis, degrees.
    /// The spiral motion uses 90.
    pub phase_offset: f64,
}

impl Default for OscillationParams {
    fn default() -> Self {
        Self {
            amplitude_x: 4.75,
            amplitude_y: 3.4,
            period: 0.52,
            phase_offset: 90.0,
        }
    }
}

impl OscillationParams {
    pub fn validate(&self) -> Result<(), ControlError> {
        if self.amplitude_x < 0.0 || self.amplitude_y < 0.0 || self.period <= 0.0 {
            return Err(ControlError::InvalidParams);
        }
        Ok(())
    }

    /// Spiral motion needs both amplitudes and the quarter-turn offset.
    pub fn validate_for(&self, kind: StrategyKind) -> Result<(), ControlError> {
        self.validate()?;
        if kind == StrategyKind::Spiral
            && (self.amplitude_x <= 0.0 || self.amplitude_y <= 0.0 || self.phase_offset != 90.0)
        {
            return Err(ControlError::InvalidParams);
        }
        Ok(())
    }
}

/// Open-loop tilt command at time `t` (seconds from strategy start).
///
/// Left-right rocks only the x tilt axis, up-down only the y axis, and
/// the spiral both with the configured phase offset. Straight-back
/// commands no tilt.
pub fn open_loop_command(kind: StrategyKind, params: &OscillationParams, t: f64) -> TiltPair {
    let phase = core::f64::consts::TAU * t / params.period;
    match kind {
        StrategyKind::LeftRight => TiltPair::new(params.amplitude_x * phase.sin(), 0.0),
        StrategyKind::UpDown => TiltPair::new(0.0, params.amplitude_y * phase.sin()),
        StrategyKind::Spiral => TiltPair::new(
            params.amplitude_x * phase.sin(),
            params.amplitude_y * (phase + params.phase_offset.to_radians()).sin(),
        ),
        StrategyKind::StraightBack => TiltPair::ZERO,
    }
}

/// Parameters of the second-order force-to-angle response
/// `theta_dd + 2 zeta omega_n theta_d + omega_n^2 theta = K omega_n^2 F`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SecondOrderParams {
    /// Steady-state gain, degrees per newton.
    pub gain: f64,
    /// Natural frequency, rad/s.
    pub natural_freq: f64,
    /// Damping factor (1 = critically damped, no overshoot).
    pub damping: f64,
}

impl SecondOrderParams {
    pub fn validate(&self) -> Result<(), ControlError> {
        if !self.gain.is_finite() || self.natural_freq <= 0.0 || self.damping <= 0.0 {
            return Err(ControlError::InvalidParams);
        }
        Ok(())
    }

    /// Largest step the resolution guard admits.
    pub fn max_dt(&self) -> f64 {
        1.0 / (10.0 * self.natural_freq)
    }
}

/// One axis of the controller: angle and angular rate, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AxisState {
    pub angle: f64,
    pub rate: f64,
}

impl AxisState {
    pub const AT_REST: AxisState = AxisState { angle: 0.0, rate: 0.0 };
}

fn check_dt(params: &SecondOrderParams, dt: f64) -> Result<(), ControlError> {
    if dt <= 0.0 {
        return Err(ControlError::NonPositiveDt);
    }
    if dt > params.max_dt() * (1.0 + 1e-12) {
        return Err(ControlError::StepTooLarge);
    }
    Ok(())
}

/// Advances one axis by `dt` with the drive force held constant.
///
/// Uses the exact zero-order-hold discretization of the two-state
/// system (closed forms for the under-, critically and over-damped
/// cases), so the only approximation in a sampled run is holding the
/// force constant between samples.
pub fn second_order_step(
    params: &SecondOrderParams,
    state: &AxisState,
    force: f64,
    dt: f64,
) -> Result<AxisState, ControlError> {
    check_dt(params, dt)?;
    let target = params.gain * force;
    let w = params.natural_freq;
    let z = params.damping;
    let e0 = state.angle - target;
    let v0 = state.rate;

    let (e, v) = if (z - 1.0).abs() < 1e-9 {
        // Repeated root -w.
        let c2 = v0 + w * e0;
        let decay = (-w * dt).exp();
        (
            (e0 + c2 * dt) * decay,
            (c2 - w * (e0 + c2 * dt)) * decay,
        )
    } else if z < 1.0 {
        let wd = w * (1.0 - z * z).sqrt();
        let a = (v0 + z * w * e0) / wd;
        let decay = (-z * w * dt).exp();
        let (s, c) = (wd * dt).sin_cos();
        (
            decay * (e0 * c + a * s),
            decay * (v0 * c - (e0 * wd + z * w * a) * s),
        )
    } else {
        let disc = w * (z * z - 1.0).sqrt();
        let r1 = -z * w + disc;
        let r2 = -z * w - disc;
        let c1 = (v0 - r2 * e0) / (r1 - r2);
        let c2 = (r1 * e0 - v0) / (r1 - r2);
        let (e1, e2) = ((r1 * dt).exp(), (r2 * dt).exp());
        (c1 * e1 + c2 * e2, c1 * r1 * e1 + c2 * r2 * e2)
    };

    Ok(AxisState {
        angle: target + e,
        rate: v,
    })
}

/// Same system advanced with classic fourth-order Runge-Kutta.
///
/// The zero-order-hold step above is exact for piecewise-constant
/// forces; this variant exists as an independent integration route for
/// cross-checks and convergence studies.
pub fn second_order_step_rk4(
    params: &SecondOrderParams,
    state: &AxisState,
    force: f64,
    dt: f64,
) -> Result<AxisState, ControlError> {
    check_dt(params, dt)?;
    let w2 = params.natural_freq * params.natural_freq;
    let two_zw = 2.0 * params.damping * params.natural_freq;
    let drive = params.gain * w2 * force;
    let f = |angle: f64, rate: f64| (rate, drive - two_zw * rate - w2 * angle);

    let (k1a, k1r) = f(state.angle, state.rate);
    let (k2a, k2r) = f(state.angle + 0.5 * dt * k1a, state.rate + 0.5 * dt * k1r);
    let (k3a, k3r) = f(state.angle + 0.5 * dt * k2a, state.rate + 0.5 * dt * k2r);
    let (k4a, k4r) = f(state.angle + dt * k3a, state.rate + dt * k3r);

    Ok(AxisState {
        angle: state.angle + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a),
        rate: state.rate + dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r),
    })
}

/// Which reading of the gain table the controller uses.
///
/// The governing second-order model wants a steady-state gain in
/// degrees per newton (`delta_theta / delta_F`); the literal
/// pseudo-code assignment is the reciprocal. Both are selectable; the
/// dimensionally consistent form is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GainConvention {
    #[default]
    Eq3,
    Alg1Literal,
}

/// Plug-in controller gains and thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControllerGains {
    /// Gain of the y tilt axis driven by `F_x`, deg/N under the `Eq3`
    /// convention ("lr"/"ud" are axis labels inherited from the
    /// strategy the data came from, not from the driven axis).
    pub k_lr: f64,
    /// Gain of the x tilt axis driven by `F_y`, deg/N under `Eq3`.
    pub k_ud: f64,
    /// Axial feed while plugging in, mm/s.
    pub v_const: f64,
    /// Plug-in stops once `F_z` falls to this level, N (negative).
    pub f_z_plugin: f64,
    /// Plug-out anomaly threshold, N (positive).
    pub f_z_plugout: f64,
    /// Settle time of the tilt response, s.
    pub settle_time: f64,
    /// Damping factor of the tilt response.
    pub damping: f64,
}

impl ControllerGains {
    /// `omega_n = 4 / (zeta * t_s)`.
    pub fn natural_freq(&self) -> f64 {
        4.0 / (self.damping * self.settle_time)
    }

    /// Response parameters of the x tilt axis (driven by `F_y`).
    pub fn axis_x_params(&self) -> SecondOrderParams {
        SecondOrderParams {
            gain: self.k_ud,
            natural_freq: self.natural_freq(),
            damping: self.damping,
        }
    }

    /// Response parameters of the y tilt axis (driven by `F_x`).
    pub fn axis_y_params(&self) -> SecondOrderParams {
        SecondOrderParams {
            gain: self.k_lr,
            natural_freq: self.natural_freq(),
            damping: self.damping,
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        // NaN thresholds must fail, so the comparisons are phrased to
        // reject anything that is not strictly signed.
        let plugin_ok = self.f_z_plugin < 0.0;
        let plugout_ok = self.f_z_plugout > 0.0;
        if self.settle_time <= 0.0
            || self.v_const <= 0.0
            || self.damping <= 0.0
            || !plugin_ok
            || !plugout_ok
        {
            return Err(ControlError::InvalidParams);
        }
        Ok(())
    }
}

/// Derives controller gains from measured response statistics.
///
/// Settle time equals the measured response time, damping is critical,
/// and the per-axis gains come from the force/angle deltas: the x axis
/// pairs `delta_theta_x` with `delta_F_y`, the y axis `delta_theta_y`
/// with `delta_F_x`. Thresholds are taken from the axial-force stats.
pub fn controller_init(
    stats: &DeltaStats,
    convention: GainConvention,
    v_const: f64,
) -> Result<ControllerGains, ControlError> {
    if stats.t_response_mean <= 0.0
        || stats.delta_theta_x <= 0.0
        || stats.delta_theta_y <= 0.0
        || stats.delta_f_x <= 0.0
        || stats.delta_f_y <= 0.0
        || v_const <= 0.0
    {
        return Err(ControlError::InvalidStats);
    }
    let (k_lr, k_ud) = match convention {
        GainConvention::Eq3 => (
            stats.delta_theta_y / stats.delta_f_x,
            stats.delta_theta_x / stats.delta_f_y,
        ),
        GainConvention::Alg1Literal => (
            stats.delta_f_x / stats.delta_theta_y,
            stats.delta_f_y / stats.delta_theta_x,
        ),
    };
    Ok(ControllerGains {
        k_lr,
        k_ud,
        v_const,
        f_z_plugin: stats.f_z_plugin,
        f_z_plugout: stats.f_z_plugout,
        settle_time: stats.t_response_mean,
        damping: 1.0,
    })
}

/// Plug-in loop condition: keep going while `F_z` stays above the
/// (negative) threshold; stop as soon as it reaches it.
pub fn plugin_terminated(sample: &Wrench, gains: &ControllerGains) -> bool {
    sample.fz <= gains.f_z_plugin
}

/// Plug-out anomaly condition: an axial reaction at or beyond the
/// (positive) threshold means the connector is snagging instead of
/// sliding out.
pub fn plugout_terminated(sample: &Wrench, gains: &ControllerGains) -> bool {
    sample.fz >= gains.f_z_plugout
}

/// The closed-loop plug-in controller.
///
/// Each control step integrates the two tilt axes against the sensed
/// lateral forces (y axis against `F_x`, x axis against `F_y`) and
/// commands the result together with a constant axial feed. Once the
/// axial force reaches the plug-in threshold the controller freezes
/// the previously sent tilt and stops the feed.
#[derive(Debug, Clone)]
pub struct PluginController {
    gains: ControllerGains,
    push_force: f64,
    axis_x: AxisState,
    axis_y: AxisState,
    last_sent: TiltPair,
    terminated: bool,
}

impl PluginController {
    pub fn new(gains: ControllerGains, push_force: f64) -> Result<Self, ControlError> {
        gains.validate()?;
        if push_force <= 0.0 {
            return Err(ControlError::InvalidParams);
        }
        Ok(Self {
            gains,
            push_force,
            axis_x: AxisState::AT_REST,
            axis_y: AxisState::AT_REST,
            last_sent: TiltPair::ZERO,
            terminated: false,
        })
    }

    pub fn gains(&self) -> &ControllerGains {
        &self.gains
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    pub fn axes(&self) -> (AxisState, AxisState) {
        (self.axis_x, self.axis_y)
    }

    /// Tilt values retained for the freeze after termination.
    pub fn held_tilt(&self) -> TiltPair {
        self.last_sent
    }

    /// One control step against a sensed wrench.
    ///
    /// Checks the loop condition first, so the terminating sample does
    /// not get integrated; the emitted command then holds the last sent
    /// tilt with zero feed, exactly and forever.
    pub fn step(&mut self, sample: &Wrench, dt: f64) -> Result<MotionCommand, ControlError> {
        if self.terminated || plugin_terminated(sample, &self.gains) {
            self.terminated = true;
            return Ok(MotionCommand {
                tilt: self.last_sent,
                v_z: 0.0,
                push_force: self.push_force,
            });
        }
        let params_x = self.gains.axis_x_params();
        let params_y = self.gains.axis_y_params();
        // Substep so the resolution guard holds for any control period;
        // the zero-order-hold step is exact, so substeps compose without
        // changing the result.
        let substeps = (dt / params_x.max_dt()).ceil().max(1.0) as usize;
        let sub_dt = dt / substeps as f64;
        for _ in 0..substeps {
            self.axis_x = second_order_step(&params_x, &self.axis_x, sample.fy, sub_dt)?;
            self.axis_y = second_order_step(&params_y, &self.axis_y, sample.fx, sub_dt)?;
        }
        self.last_sent = TiltPair::new(self.axis_x.angle, self.axis_y.angle);
        Ok(MotionCommand {
            tilt: self.last_sent,
            v_z: self.gains.v_const,
            push_force: self.push_force,
        })
    }
}

/// Tilt behaviour during plug-out.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PlugoutMode {
    /// Hold the tilt frozen at the end of plug-in and back straight out.
    StraightBack,
    /// Keep the spiral rocking superposed on the frozen tilt.
    Spiral(OscillationParams),
}

/// Open-loop plug-out procedure: reverse feed with either frozen tilt
/// or continued spiral rocking around it.
#[derive(Debug, Clone)]
pub struct PlugoutProcedure {
    mode: PlugoutMode,
    base_tilt: TiltPair,
    v_const: f64,
    push_force: f64,
    elapsed: f64,
}

impl PlugoutProcedure {
    pub fn new(mode: PlugoutMode, base_tilt: TiltPair, v_const: f64, push_force: f64) -> Self {
        Self {
            mode,
            base_tilt,
            v_const,
            push_force,
            elapsed: 0.0,
        }
    }

    /// Command for the next control period. `rocking_envelope` scales
    /// the superposed rocking to the play the socket leaves at the
    /// current depth (1 = full amplitude); the frozen base tilt is
    /// never scaled.
    pub fn step(&mut self, dt: f64, rocking_envelope: f64) -> MotionCommand {
        let tilt = match &self.mode {
            PlugoutMode::StraightBack => self.base_tilt,
            PlugoutMode::Spiral(params) => {
                let osc = open_loop_command(StrategyKind::Spiral, params, self.elapsed);
                TiltPair::new(
                    self.base_tilt.theta_x + rocking_envelope * osc.theta_x,
                    self.base_tilt.theta_y + rocking_envelope * osc.theta_y,
                )
            }
        };
        self.elapsed += dt;
        MotionCommand {
            tilt,
            v_z: -self.v_const,
            push_force: self.push_force,
        }
    }
}

/// The compliant carrier holding the connector.
///
/// `error` is the persistent misalignment between the frame the
/// operator commands in and the true socket frame. While the commanded
/// tilt is wedged against the socket (jam excess positive), wall
/// reactions backdrive the carrier on the axes that are being actively
/// driven; a motionless axis stays friction-locked and its error
/// persists. This is what lets single-axis strategies correct only
/// their own axis.
///
/// The yield has two parts: a term proportional to the jam excess (the
/// wall spring pushing back through the compliant wrist) and a constant
/// chamfer term (the axial push sliding the wedged tip down the entry
/// ramp). The chamfer term is what lets a pressed connector cross the
/// cone boundary instead of approaching it asymptotically as the
/// excess, and with it the wall force, vanishes.
#[derive(Debug, Clone, Copy)]
pub struct CompliantCarrier {
    /// Persistent misalignment, degrees (signed).
    pub error: TiltPair,
    /// Whether the x / y tilt axes yield under wall contact.
    pub yields_x: bool,
    pub yields_y: bool,
    /// Excess-proportional yield rate, 1/s.
    pub rate: f64,
    /// Push-driven alignment rate while wedged, deg/s.
    pub chamfer_rate: f64,
}

impl CompliantCarrier {
    pub const DEFAULT_YIELD_RATE: f64 = 3.0;
    pub const DEFAULT_CHAMFER_RATE: f64 = 3.0;

    pub fn new(
        error: TiltPair,
        (yields_x, yields_y): (bool, bool),
        rate: f64,
        chamfer_rate: f64,
    ) -> Self {
        Self {
            error,
            yields_x,
            yields_y,
            rate,
            chamfer_rate,
        }
    }

    /// Carrier for an open-loop strategy: the rocked axes yield.
    pub fn for_strategy(error: TiltPair, kind: StrategyKind) -> Self {
        Self::new(
            error,
            kind.rocked_axes(),
            Self::DEFAULT_YIELD_RATE,
            Self::DEFAULT_CHAMFER_RATE,
        )
    }

    /// Carrier for the closed-loop controller, which actively servos
    /// both axes.
    pub fn for_closed_loop(error: TiltPair) -> Self {
        Self::new(
            error,
            (true, true),
            Self::DEFAULT_YIELD_RATE,
            Self::DEFAULT_CHAMFER_RATE,
        )
    }

    /// Relaxes the carrier error against the socket wall for one
    /// control period of a pressed connector. `commanded` is the
    /// absolute tilt sent to the plant this period (carrier error
    /// already included).
    pub fn relax(&mut self, socket: &SocketModel, commanded: TiltPair, depth: f64, dt: f64) {
        let excess = socket.jam_excess(&commanded, depth);
        if excess <= 0.0 {
            return;
        }
        let total = commanded.total();
        if total <= 0.0 {
            return;
        }
        let pull = (self.rate * excess + self.chamfer_rate) * dt;
        if self.yields_x {
            self.error.theta_x -= pull * commanded.theta_x / total;
        }
        if self.yields_y {
            self.error.theta_y -= pull * commanded.theta_y / total;
        }
    }
}
