//! Plain-text rendering of campaign reports, laid out so the force
//! and wave tables can sit next to their measured counterparts.

use std::fmt::Write as _;

use crate::trial::CampaignReport;

fn fmt_opt(value: Option<f64>, width: usize, precision: usize) -> String {
    match value {
        Some(v) => format!("{v:>width$.precision$}"),
        None => format!("{:>width$}", "-"),
    }
}

/// Renders the human-readable report.
pub fn render_text(report: &CampaignReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Campaign: {} trials per arm, base seed {}",
        report.trials_per_arm, report.base_seed
    );
    let _ = writeln!(out);

    let _ = writeln!(
        out,
        "{:<14} {:>8} {:>9} {:>16} {:>12}",
        "arm", "success", "rate", "plug-in s", "plug-out s"
    );
    for arm in &report.arms {
        let plugin = match (arm.plugin_time_mean, arm.plugin_time_std) {
            (Some(m), Some(s)) => format!("{m:.2} +/- {s:.2}"),
            (Some(m), None) => format!("{m:.2}"),
            _ => "-".to_string(),
        };
        let _ = writeln!(
            out,
            "{:<14} {:>5}/{:<3} {:>8.1}% {:>16} {:>12}",
            arm.label,
            arm.successes,
            arm.trials,
            100.0 * arm.success_rate,
            plugin,
            fmt_opt(arm.plugout_time_mean, 12, 2),
        );
    }
    let _ = writeln!(out);

    let _ = writeln!(out, "Force ranges over successful trials (N):");
    let _ = writeln!(
        out,
        "{:<14} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "arm", "min Fx", "min Fy", "min Fz", "max Fx", "max Fy", "max Fz"
    );
    for arm in &report.arms {
        match &arm.force_ranges {
            Some(row) => {
                let _ = writeln!(
                    out,
                    "{:<14} {:>8.1} {:>8.1} {:>8.1} {:>8.1} {:>8.1} {:>8.1}",
                    arm.label,
                    row.mean_min_fx,
                    row.mean_min_fy,
                    row.mean_min_fz,
                    row.mean_max_fx,
                    row.mean_max_fy,
                    row.mean_max_fz
                );
            }
            None => {
                let _ = writeln!(out, "{:<14} (no successful trials)", arm.label);
            }
        }
    }
    let _ = writeln!(out);

    for arm in &report.arms {
        let Some(summary) = &arm.wave_summary else {
            continue;
        };
        let _ = writeln!(
            out,
            "Wave statistics, arm {} (n = {}):",
            arm.label, summary.n
        );
        let _ = writeln!(
            out,
            "  {:<16} {:>10} {:>10} {:>10} {:>6}",
            "quantity", "mean", "extreme", "std", "unit"
        );
        let rows = [
            ("delta_theta_x", summary.delta_theta_x, "deg"),
            ("delta_theta_y", summary.delta_theta_y, "deg"),
            ("delta_f_x", summary.delta_f_x, "N"),
            ("delta_f_y", summary.delta_f_y, "N"),
            ("f_z_plug_in", summary.f_z_plugin, "N"),
            ("f_z_plug_out", summary.f_z_plugout, "N"),
            ("t_response", summary.t_response, "s"),
        ];
        for (name, q, unit) in rows {
            let _ = writeln!(
                out,
                "  {:<16} {:>10.3} {:>10.3} {:>10.3} {:>6}",
                name, q.mean, q.extreme, q.std, unit
            );
        }
        let _ = writeln!(out);
    }

    let arms = report.comparison_arms.join(", ");
    match &report.plugin_time_anova {
        Some(anova) => {
            let _ = writeln!(
                out,
                "Plug-in time ANOVA over [{arms}], {} paired trials: F({}, {}) = {:.4}, p = {:.4}",
                report.n_common_success, anova.df.0, anova.df.1, anova.f_statistic, anova.p_value
            );
        }
        None => {
            let _ = writeln!(
                out,
                "Plug-in time ANOVA over [{arms}]: not enough paired successes (n = {})",
                report.n_common_success
            );
        }
    }
    for pair in &report.pairwise_plugin_time {
        let r = &pair.result;
        let _ = writeln!(
            out,
            "  {} vs {}: t = {:.4}, df = {}, p = {:.4}{}",
            pair.a,
            pair.b,
            r.t_statistic,
            r.df,
            r.p_value,
            if r.degenerate { " (degenerate)" } else { "" }
        );
    }
    out
}
