use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use plugsim_cli::config::Config;
use plugsim_cli::report::render_text;
use plugsim_cli::trace_io::{load_trace, save_trace};
use plugsim_cli::trial::{
    plugin_time_comparison, run_campaign, run_trial, CampaignReport, ControlMode, TrialConfig,
};
use plugsim_core::analysis::{classify_strategy, delta_stats, ClassifierConfig};
use plugsim_core::pose::TiltPair;

/// Simulator and analysis toolkit for plugging an EV charging
/// connector under orientation error.
#[derive(Parser)]
#[command(name = "plugsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Config file (TOML); defaults come from the PLUGSIM_CONFIG
    /// environment variable, else built-in values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and write its trace.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        /// Plug-in mode: lr, ud, sp, straight-back, or closed-loop.
        #[arg(long)]
        strategy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trace output path (CSV).
        #[arg(long)]
        out: PathBuf,
        /// Also write the trial result as JSON.
        #[arg(long)]
        result: Option<PathBuf>,
        /// Fix the initial misalignment instead of sampling it (degrees).
        #[arg(long, requires = "error_y")]
        error_x: Option<f64>,
        #[arg(long, requires = "error_x")]
        error_y: Option<f64>,
        /// Keep the spiral rocking during plug-out.
        #[arg(long)]
        plugout_spiral: bool,
    },
    /// Run the full strategy-comparison campaign.
    Campaign {
        #[command(flatten)]
        config: ConfigArg,
        /// Trials per arm (overrides the config).
        #[arg(long)]
        trials: Option<usize>,
        /// Base seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for report.json and report.txt.
        #[arg(long)]
        out: PathBuf,
        /// Also persist every trial trace under <out>/traces/.
        #[arg(long)]
        save_traces: bool,
    },
    /// Analyze trace files: wave statistics and strategy classification.
    Analyze {
        /// Trace CSV files.
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Recompute the plug-in time ANOVA and pairwise t-tests of saved
    /// campaign reports.
    Compare {
        /// report.json files.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            strategy,
            seed,
            out,
            result,
            error_x,
            error_y,
            plugout_spiral,
        } => {
            let mode = ControlMode::parse(&strategy).ok_or_else(|| {
                anyhow::anyhow!(
                    "unknown strategy `{strategy}` (expected lr, ud, sp, straight-back, or closed-loop)"
                )
            })?;
            let base = Config::load(config.config.as_deref())?;
            let mut trial = TrialConfig::new(mode, base, seed);
            if let (Some(x), Some(y)) = (error_x, error_y) {
                trial.initial_error = Some(TiltPair::new(x, y));
            }
            trial.plugout_spiral = plugout_spiral;
            let (outcome, trace) = run_trial(&trial)?;
            save_trace(&trace, &out)?;
            let json = serde_json::to_string_pretty(&outcome)?;
            if let Some(path) = result {
                std::fs::write(path, &json)?;
            }
            println!("{json}");
            Ok(())
        }
        Command::Campaign {
            config,
            trials,
            seed,
            out,
            save_traces,
        } => {
            let mut base = Config::load(config.config.as_deref())?;
            if let Some(n) = trials {
                base.campaign.trials = n;
            }
            if let Some(s) = seed {
                base.campaign.base_seed = s;
            }
            let (report, arms) = run_campaign(&base)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(
                out.join("report.json"),
                serde_json::to_string_pretty(&report)?,
            )?;
            let text = render_text(&report);
            std::fs::write(out.join("report.txt"), &text)?;
            if save_traces {
                let trace_dir = out.join("traces");
                std::fs::create_dir_all(&trace_dir)?;
                for arm in &arms {
                    for (index, trace) in arm.traces.iter().enumerate() {
                        let name = format!("{}_{index:04}.csv", arm.mode.label());
                        save_trace(trace, &trace_dir.join(name))?;
                    }
                }
            }
            print!("{text}");
            Ok(())
        }
        Command::Analyze { traces, json } => {
            for path in &traces {
                analyze_one(path, json)?;
            }
            Ok(())
        }
        Command::Compare { reports } => {
            for path in &reports {
                let text = std::fs::read_to_string(path)?;
                let report: CampaignReport = serde_json::from_str(&text)?;
                let comparison: Vec<_> = report
                    .comparison_arms
                    .iter()
                    .filter_map(|label| report.arms.iter().find(|a| &a.label == label))
                    .collect();
                let (n_common, anova, pairwise) = plugin_time_comparison(&comparison)?;
                println!("{}: {} paired trials", path.display(), n_common);
                match anova {
                    Some(a) => println!(
                        "  ANOVA: F({}, {}) = {:.4}, p = {:.4}",
                        a.df.0, a.df.1, a.f_statistic, a.p_value
                    ),
                    None => println!("  ANOVA: not enough paired successes"),
                }
                for pair in pairwise {
                    println!(
                        "  {} vs {}: t = {:.4}, df = {}, p = {:.4}",
                        pair.a, pair.b, pair.result.t_statistic, pair.result.df, pair.result.p_value
                    );
                }
            }
            Ok(())
        }
    }
}

fn analyze_one(path: &Path, as_json: bool) -> anyhow::Result<()> {
    let trace = load_trace(path)?;
    let stats = delta_stats(&trace).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let classification = classify_strategy(&trace, &ClassifierConfig::default());
    if as_json {
        let value = serde_json::json!({
            "file": path.display().to_string(),
            "classification": classification.as_ref().ok().map(|k| k.label()),
            "classification_error": classification.as_ref().err().map(|e| e.to_string()),
            "stats": stats,
        });
        println!("{}", serde_json::to_string_pretty(&value)?);
    } else {
        println!("{}:", path.display());
        match &classification {
            Ok(kind) => println!("  classification: {}", kind.label()),
            Err(e) => println!("  classification: unavailable ({e})"),
        }
        println!(
            "  delta_theta_x = {:.3} deg, delta_theta_y = {:.3} deg",
            stats.delta_theta_x, stats.delta_theta_y
        );
        println!(
            "  delta_f_x = {:.3} N, delta_f_y = {:.3} N",
            stats.delta_f_x, stats.delta_f_y
        );
        println!(
            "  f_z plug-in = {:.3} N, plug-out = {:.3} N",
            stats.f_z_plugin, stats.f_z_plugout
        );
        println!(
            "  t_response mean = {:.3} s, max = {:.3} s{}",
            stats.t_response_mean,
            stats.t_response_max,
            if stats.degenerate { " (degenerate)" } else { "" }
        );
    }
    Ok(())
}
