//! Seeded trial execution and the Monte Carlo strategy-comparison
//! campaign.
//!
//! One trial runs the plug-in phase (an open-loop rocking strategy or
//! the closed-loop controller) until seated, terminated, or timeout,
//! then backs the connector out, recording a sensor trace throughout.
//! Everything is derived from the trial seed, so a rerun reproduces
//! the trace bit for bit. A campaign runs every arm over the same
//! per-index seeds: each trial index sees the identical initial
//! misalignment in every arm, which is what makes the per-index times
//! a paired design.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use plugsim_core::analysis::{
    delta_stats, force_ranges, paired_ttest, rm_anova, summarize, AnovaResult, ForceRangeRow,
    SummaryStats, TTestResult, Trace, TraceMeta, TracePhase, TraceSample,
};
use plugsim_core::contact::{sample_initial_error, sample_sensor, step, ContactState, MotionCommand, Wrench};
use plugsim_core::control::{
    open_loop_command, plugout_terminated, CompliantCarrier, PluginController, PlugoutMode,
    PlugoutProcedure, StrategyKind,
};
use plugsim_core::pose::TiltPair;

use crate::config::Config;

/// How the plug-in phase is driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    OpenLoop(StrategyKind),
    ClosedLoop,
}

impl ControlMode {
    pub fn label(&self) -> &'static str {
        match self {
            ControlMode::OpenLoop(kind) => kind.label(),
            ControlMode::ClosedLoop => "closed_loop",
        }
    }

    pub fn parse(s: &str) -> Option<ControlMode> {
        match s {
            "lr" | "left-right" | "left_right" => Some(ControlMode::OpenLoop(StrategyKind::LeftRight)),
            "ud" | "up-down" | "up_down" => Some(ControlMode::OpenLoop(StrategyKind::UpDown)),
            "sp" | "spiral" => Some(ControlMode::OpenLoop(StrategyKind::Spiral)),
            "straight-back" | "straight_back" => {
                Some(ControlMode::OpenLoop(StrategyKind::StraightBack))
            }
            "closed-loop" | "closed_loop" | "cl" => Some(ControlMode::ClosedLoop),
            _ => None,
        }
    }
}

/// Everything one trial needs.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub mode: ControlMode,
    pub base: Config,
    pub seed: u64,
    /// Fixed initial misalignment; sampled from the seed when absent.
    pub initial_error: Option<TiltPair>,
    /// Keep the spiral rocking during plug-out instead of backing
    /// straight out.
    pub plugout_spiral: bool,
}

impl TrialConfig {
    pub fn new(mode: ControlMode, base: Config, seed: u64) -> Self {
        Self {
            mode,
            base,
            seed,
            initial_error: None,
            plugout_spiral: false,
        }
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrialResult {
    /// Whether the connector seated during plug-in.
    pub success: bool,
    /// Plug-in duration, s (the timeout when it never seated).
    pub plugin_time: f64,
    /// Plug-out duration, s.
    pub plugout_time: f64,
    pub initial_error: TiltPair,
    /// Per-channel minima over the whole trace.
    pub force_min: Wrench,
    /// Per-channel maxima over the whole trace.
    pub force_max: Wrench,
}

/// Runs one seeded trial: plug-in, then plug-out, with the trace
/// recorded at the control rate. Deterministic given the config.
pub fn run_trial(cfg: &TrialConfig) -> anyhow::Result<(TrialResult, Trace)> {
    cfg.base.validate()?;
    let socket = cfg.base.socket;
    let sensor = cfg.base.sensor;
    let osc = cfg.base.oscillation;
    if let ControlMode::OpenLoop(kind) = cfg.mode {
        osc.validate_for(kind)
            .map_err(|e| anyhow::anyhow!("oscillation params for {}: {e}", kind.label()))?;
    }
    let gains = cfg.base.gains()?;
    let push_force = cfg.base.controller.push_force;
    let yield_rate = cfg.base.controller.carrier_yield_rate;
    let chamfer_rate = cfg.base.controller.chamfer_align_rate;
    let dt = cfg.base.campaign.dt_control;
    let timeout = cfg.base.campaign.timeout;
    let steps_budget = (timeout / dt).ceil() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial_error = cfg
        .initial_error
        .unwrap_or_else(|| sample_initial_error(&mut rng, cfg.base.campaign.max_error));

    let mut state = ContactState::at_mouth(initial_error);
    let mut samples: Vec<TraceSample> = Vec::with_capacity(steps_budget);

    // Plug-in phase.
    match cfg.mode {
        ControlMode::OpenLoop(kind) => {
            let mut carrier =
                CompliantCarrier::new(initial_error, kind.rocked_axes(), yield_rate, chamfer_rate);
            for step_idx in 0..steps_budget {
                if state.is_seated() {
                    break;
                }
                // The operator rocks within the play the socket leaves
                // at the current depth.
                let envelope = socket.allowed_tilt(state.depth) / socket.capture_cone;
                let rock = open_loop_command(kind, &osc, step_idx as f64 * dt);
                let tilt = TiltPair::new(
                    carrier.error.theta_x + envelope * rock.theta_x,
                    carrier.error.theta_y + envelope * rock.theta_y,
                );
                let depth_before = state.depth;
                let cmd = MotionCommand {
                    tilt,
                    v_z: gains.v_const,
                    push_force,
                };
                let (next, wrench) = step(&socket, &state, &cmd, dt)
                    .map_err(|e| anyhow::anyhow!("contact step: {e}"))?;
                state = next;
                let sensed = sample_sensor(&sensor, &wrench, &mut rng);
                samples.push(TraceSample {
                    t: state.time,
                    wrench: sensed,
                    tilt: state.tilt.abs(),
                    depth: state.depth,
                });
                carrier.relax(&socket, tilt, depth_before, dt);
            }
        }
        ControlMode::ClosedLoop => {
            let mut carrier =
                CompliantCarrier::new(initial_error, (true, true), yield_rate, chamfer_rate);
            let mut ctrl = PluginController::new(gains, push_force)
                .map_err(|e| anyhow::anyhow!("controller init: {e}"))?;
            let mut sensed = sample_sensor(&sensor, &Wrench::ZERO, &mut rng);
            for _ in 0..steps_budget {
                if state.is_seated() {
                    break;
                }
                let commanded = ctrl
                    .step(&sensed, dt)
                    .map_err(|e| anyhow::anyhow!("controller step: {e}"))?;
                if ctrl.terminated() {
                    break;
                }
                let tilt = TiltPair::new(
                    carrier.error.theta_x + commanded.tilt.theta_x,
                    carrier.error.theta_y + commanded.tilt.theta_y,
                );
                let depth_before = state.depth;
                let cmd = MotionCommand {
                    tilt,
                    v_z: commanded.v_z,
                    push_force,
                };
                let (next, wrench) = step(&socket, &state, &cmd, dt)
                    .map_err(|e| anyhow::anyhow!("contact step: {e}"))?;
                state = next;
                sensed = sample_sensor(&sensor, &wrench, &mut rng);
                samples.push(TraceSample {
                    t: state.time,
                    wrench: sensed,
                    tilt: state.tilt.abs(),
                    depth: state.depth,
                });
                carrier.relax(&socket, tilt, depth_before, dt);
            }
        }
    }
    let success = state.is_seated();
    let plugin_time = state.time.min(timeout);

    // Plug-out phase: straight back by default, with the tilt frozen
    // where plug-in left it.
    let plugout_mode = if cfg.plugout_spiral {
        PlugoutMode::Spiral(osc)
    } else {
        PlugoutMode::StraightBack
    };
    let mut procedure = PlugoutProcedure::new(plugout_mode, state.tilt, gains.v_const, push_force);
    let plugout_start = state.time;
    for _ in 0..steps_budget {
        if state.is_free() {
            break;
        }
        let envelope = socket.allowed_tilt(state.depth) / socket.capture_cone;
        let cmd = procedure.step(dt, envelope);
        let (next, wrench) = step(&socket, &state, &cmd, dt)
            .map_err(|e| anyhow::anyhow!("contact step: {e}"))?;
        state = next;
        let sensed = sample_sensor(&sensor, &wrench, &mut rng);
        samples.push(TraceSample {
            t: state.time,
            wrench: sensed,
            tilt: state.tilt.abs(),
            depth: state.depth,
        });
        if plugout_terminated(&sensed, &gains) {
            break;
        }
    }
    let plugout_time = (state.time - plugout_start).min(timeout);

    let mut force_min = Wrench::new(
        f64::INFINITY,
        f64::INFINITY,
        f64::INFINITY,
        f64::INFINITY,
        f64::INFINITY,
        f64::INFINITY,
    );
    let mut force_max = Wrench::new(
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for s in &samples {
        let w = &s.wrench;
        force_min.fx = force_min.fx.min(w.fx);
        force_min.fy = force_min.fy.min(w.fy);
        force_min.fz = force_min.fz.min(w.fz);
        force_min.tx = force_min.tx.min(w.tx);
        force_min.ty = force_min.ty.min(w.ty);
        force_min.tz = force_min.tz.min(w.tz);
        force_max.fx = force_max.fx.max(w.fx);
        force_max.fy = force_max.fy.max(w.fy);
        force_max.fz = force_max.fz.max(w.fz);
        force_max.tx = force_max.tx.max(w.tx);
        force_max.ty = force_max.ty.max(w.ty);
        force_max.tz = force_max.tz.max(w.tz);
    }

    let meta = TraceMeta {
        strategy: match cfg.mode {
            ControlMode::OpenLoop(kind) => Some(kind),
            ControlMode::ClosedLoop => None,
        },
        seed: cfg.seed,
        phase: TracePhase::Full,
    };
    let result = TrialResult {
        success,
        plugin_time,
        plugout_time,
        initial_error,
        force_min,
        force_max,
    };
    Ok((result, Trace::new(samples, meta)))
}

/// The four campaign arms: the three human strategies plus the
/// closed-loop controller.
pub const CAMPAIGN_ARMS: [ControlMode; 4] = [
    ControlMode::OpenLoop(StrategyKind::LeftRight),
    ControlMode::OpenLoop(StrategyKind::UpDown),
    ControlMode::OpenLoop(StrategyKind::Spiral),
    ControlMode::ClosedLoop,
];

/// The arms the repeated-measures comparison runs over (the human
/// strategies, as in the study design).
pub const COMPARISON_ARMS: [&str; 3] = ["lr", "ud", "sp"];

/// Results and traces of one campaign arm, ordered by trial index.
#[derive(Debug, Clone)]
pub struct ArmRun {
    pub mode: ControlMode,
    pub results: Vec<TrialResult>,
    pub traces: Vec<Trace>,
}

/// Per-arm slice of the campaign report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmReport {
    pub label: String,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Per trial index; `null` where the trial failed.
    pub plugin_times: Vec<Option<f64>>,
    pub plugout_times: Vec<Option<f64>>,
    pub plugin_time_mean: Option<f64>,
    pub plugin_time_std: Option<f64>,
    pub plugout_time_mean: Option<f64>,
    /// Force extremes averaged over successful trials.
    pub force_ranges: Option<ForceRangeRow>,
    /// Wave statistics summarized over successful trials.
    pub wave_summary: Option<SummaryStats>,
}

/// A pairwise plug-in time comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: String,
    pub b: String,
    pub result: TTestResult,
}

/// The full campaign report: per-arm tables plus the repeated-measures
/// comparison of plug-in times over the trials every compared arm
/// completed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignReport {
    pub base_seed: u64,
    pub trials_per_arm: usize,
    pub arms: Vec<ArmReport>,
    pub comparison_arms: Vec<String>,
    /// Trials completed by every compared arm (the paired subjects).
    pub n_common_success: usize,
    pub plugin_time_anova: Option<AnovaResult>,
    pub pairwise_plugin_time: Vec<PairwiseTest>,
}

/// Runs the full campaign: every arm over the same seeded trial
/// indices, in parallel. The per-trial seed is `base_seed + index`, so
/// results are independent of scheduling.
pub fn run_campaign(config: &Config) -> anyhow::Result<(CampaignReport, Vec<ArmRun>)> {
    config.validate()?;
    let n = config.campaign.trials;
    let base_seed = config.campaign.base_seed;
    let arms: Vec<ArmRun> = CAMPAIGN_ARMS
        .par_iter()
        .map(|&mode| -> anyhow::Result<ArmRun> {
            let pairs: Vec<(TrialResult, Trace)> = (0..n)
                .into_par_iter()
                .map(|index| {
                    let cfg = TrialConfig::new(
                        mode,
                        config.clone(),
                        base_seed.wrapping_add(index as u64),
                    );
                    run_trial(&cfg)
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let (results, traces): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            Ok(ArmRun {
                mode,
                results,
                traces,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let report = build_report(config, &arms)?;
    Ok((report, arms))
}

/// Builds the report tables from raw arm runs.
pub fn build_report(config: &Config, arms: &[ArmRun]) -> anyhow::Result<CampaignReport> {
    let mut arm_reports = Vec::with_capacity(arms.len());
    for arm in arms {
        let trials = arm.results.len();
        let successes = arm.results.iter().filter(|r| r.success).count();
        let plugin_times: Vec<Option<f64>> = arm
            .results
            .iter()
            .map(|r| r.success.then_some(r.plugin_time))
            .collect();
        let plugout_times: Vec<Option<f64>> = arm
            .results
            .iter()
            .map(|r| r.success.then_some(r.plugout_time))
            .collect();
        let succeeded: Vec<f64> = plugin_times.iter().flatten().copied().collect();
        let (plugin_time_mean, plugin_time_std) = mean_std(&succeeded);
        let (plugout_time_mean, _) =
            mean_std(&plugout_times.iter().flatten().copied().collect::<Vec<_>>());

        let successful_traces: Vec<Trace> = arm
            .traces
            .iter()
            .zip(&arm.results)
            .filter(|(_, r)| r.success)
            .map(|(t, _)| t.clone())
            .collect();
        let force_ranges_row = if successful_traces.is_empty() {
            None
        } else {
            Some(force_ranges(&successful_traces).map_err(|e| anyhow::anyhow!("{e}"))?)
        };
        let wave_summary = if successful_traces.is_empty() {
            None
        } else {
            let stats: Vec<_> = successful_traces
                .iter()
                .map(delta_stats)
                .collect::<Result<_, _>>()
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            Some(summarize(&stats).map_err(|e| anyhow::anyhow!("{e}"))?)
        };

        arm_reports.push(ArmReport {
            label: arm.mode.label().to_string(),
            trials,
            successes,
            success_rate: successes as f64 / trials.max(1) as f64,
            plugin_times,
            plugout_times,
            plugin_time_mean,
            plugin_time_std,
            plugout_time_mean,
            force_ranges: force_ranges_row,
            wave_summary,
        });
    }

    let comparison: Vec<&ArmReport> = COMPARISON_ARMS
        .iter()
        .filter_map(|label| arm_reports.iter().find(|a| a.label == *label))
        .collect();
    let (n_common, anova, pairwise) = plugin_time_comparison(&comparison)?;

    Ok(CampaignReport {
        base_seed: config.campaign.base_seed,
        trials_per_arm: config.campaign.trials,
        arms: arm_reports,
        comparison_arms: COMPARISON_ARMS.iter().map(|s| s.to_string()).collect(),
        n_common_success: n_common,
        plugin_time_anova: anova,
        pairwise_plugin_time: pairwise,
    })
}

/// Repeated-measures comparison of plug-in times across arms, over the
/// trial indices every arm completed (listwise pairing).
pub fn plugin_time_comparison(
    arms: &[&ArmReport],
) -> anyhow::Result<(usize, Option<AnovaResult>, Vec<PairwiseTest>)> {
    if arms.len() < 2 {
        return Ok((0, None, Vec::new()));
    }
    let n_trials = arms.iter().map(|a| a.plugin_times.len()).min().unwrap_or(0);
    let common: Vec<usize> = (0..n_trials)
        .filter(|&i| arms.iter().all(|a| a.plugin_times[i].is_some()))
        .collect();
    let n_common = common.len();
    if n_common < 2 {
        return Ok((n_common, None, Vec::new()));
    }
    let matrix: Vec<Vec<f64>> = common
        .iter()
        .map(|&i| arms.iter().map(|a| a.plugin_times[i].unwrap()).collect())
        .collect();
    let anova = rm_anova(&matrix).map_err(|e| anyhow::anyhow!("anova: {e}"))?;
    let mut pairwise = Vec::new();
    for i in 0..arms.len() {
        for j in i + 1..arms.len() {
            let a: Vec<f64> = matrix.iter().map(|row| row[i]).collect();
            let b: Vec<f64> = matrix.iter().map(|row| row[j]).collect();
            let result = paired_ttest(&a, &b).map_err(|e| anyhow::anyhow!("t-test: {e}"))?;
            pairwise.push(PairwiseTest {
                a: arms[i].label.clone(),
                b: arms[j].label.clone(),
                result,
            });
        }
    }
    Ok((n_common, Some(anova), pairwise))
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        Some(
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt(),
        )
    } else {
        None
    };
    (Some(mean), std)
}
