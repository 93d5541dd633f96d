//! Trace persistence.
//!
//! Traces are CSV files with the fixed header
//! `t,fx,fy,fz,tx,ty,tz,theta_x,theta_y,depth` (units: s, N, Nm, deg,
//! mm), one row per sensor sample. Values are written with Rust's
//! shortest round-trip float formatting, so a load reproduces every
//! field exactly. Metadata rides in a leading `# key=value` comment
//! line; files without it load with default metadata.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use plugsim_core::analysis::{Trace, TraceMeta, TracePhase, TraceSample};
use plugsim_core::contact::Wrench;
use plugsim_core::control::StrategyKind;
use plugsim_core::pose::TiltPair;

pub const TRACE_HEADER: &str = "t,fx,fy,fz,tx,ty,tz,theta_x,theta_y,depth";

/// Errors from reading or writing trace files.
#[derive(Debug, thiserror::Error)]
pub enum TraceIoError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected header `{TRACE_HEADER}`, found `{found}`")]
    HeaderMismatch { line: usize, found: String },
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("line {line}: timestamps must strictly increase")]
    NonMonotonicTime { line: usize },
    #[error("no samples in trace file")]
    Empty,
}

fn phase_label(phase: TracePhase) -> &'static str {
    match phase {
        TracePhase::PlugIn => "plug_in",
        TracePhase::PlugOut => "plug_out",
        TracePhase::Full => "full",
    }
}

fn parse_phase(s: &str) -> Option<TracePhase> {
    match s {
        "plug_in" => Some(TracePhase::PlugIn),
        "plug_out" => Some(TracePhase::PlugOut),
        "full" => Some(TracePhase::Full),
        _ => None,
    }
}

fn parse_strategy(s: &str) -> Option<StrategyKind> {
    StrategyKind::ALL.into_iter().find(|k| k.label() == s)
}

/// Renders a trace to the CSV format.
pub fn trace_to_csv(trace: &Trace) -> String {
    let mut out = String::new();
    let strategy = trace
        .meta
        .strategy
        .map(|k| k.label())
        .unwrap_or("none");
    let _ = writeln!(
        out,
        "# strategy={} seed={} phase={}",
        strategy,
        trace.meta.seed,
        phase_label(trace.meta.phase)
    );
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for s in &trace.samples {
        let w = &s.wrench;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            s.t, w.fx, w.fy, w.fz, w.tx, w.ty, w.tz, s.tilt.theta_x, s.tilt.theta_y, s.depth
        );
    }
    out
}

/// Writes a trace to `path`.
pub fn save_trace(trace: &Trace, path: &Path) -> Result<(), TraceIoError> {
    fs::write(path, trace_to_csv(trace))?;
    Ok(())
}

/// Parses a trace from CSV text. Errors carry 1-based line numbers.
pub fn trace_from_csv(text: &str) -> Result<Trace, TraceIoError> {
    let mut meta = TraceMeta::default();
    let mut lines = text.lines().enumerate().peekable();

    // Leading comment lines may carry metadata.
    while let Some((_, line)) = lines.peek() {
        let Some(comment) = line.strip_prefix('#') else {
            break;
        };
        for token in comment.split_whitespace() {
            match token.split_once('=') {
                Some(("strategy", v)) => meta.strategy = parse_strategy(v),
                Some(("seed", v)) => meta.seed = v.parse().unwrap_or(0),
                Some(("phase", v)) => {
                    if let Some(p) = parse_phase(v) {
                        meta.phase = p;
                    }
                }
                _ => {}
            }
        }
        lines.next();
    }

    let (header_idx, header) = lines.next().ok_or(TraceIoError::Empty)?;
    if header.trim() != TRACE_HEADER {
        return Err(TraceIoError::HeaderMismatch {
            line: header_idx + 1,
            found: header.trim().to_string(),
        });
    }

    let mut samples = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(TraceIoError::Row {
                line: line_no,
                message: format!("expected 10 fields, found {}", fields.len()),
            });
        }
        let mut values = [0.0f64; 10];
        for (i, field) in fields.iter().enumerate() {
            values[i] = field.trim().parse().map_err(|e| TraceIoError::Row {
                line: line_no,
                message: format!("field {} (`{}`): {e}", i + 1, field.trim()),
            })?;
        }
        if values[0] <= last_t {
            return Err(TraceIoError::NonMonotonicTime { line: line_no });
        }
        last_t = values[0];
        samples.push(TraceSample {
            t: values[0],
            wrench: Wrench::new(values[1], values[2], values[3], values[4], values[5], values[6]),
            tilt: TiltPair::new(values[7], values[8]),
            depth: values[9],
        });
    }
    if samples.is_empty() {
        return Err(TraceIoError::Empty);
    }
    Ok(Trace::new(samples, meta))
}

/// Loads a trace from `path`.
pub fn load_trace(path: &Path) -> Result<Trace, TraceIoError> {
    let text = fs::read_to_string(path)?;
    trace_from_csv(&text)
}
