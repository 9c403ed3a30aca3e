//! Tracking-quality metrics, deterministic CSV export, dependency-free
//! SVG figures and controller comparison tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use crate::sim::{ControllerKind, SimTrace, TraceRecord};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("trace has no records")]
    EmptyTrace,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv parse error: {0}")]
    Parse(String),
}

/// Per-joint tracking metrics over one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct JointMetrics {
    pub rms_error: f64,
    pub max_abs_error: f64,
    /// First time after which |e| stays below the threshold; `None` when
    /// the error is still above it at the end of the horizon.
    pub settling_time: Option<f64>,
    /// Peak excursion past the target, percent of |target − initial|;
    /// zero for non-step references.
    pub overshoot_percent: f64,
    /// ∫e² dt, trapezoid rule.
    pub ise: f64,
    /// ∫τ² dt, trapezoid rule.
    pub control_effort: f64,
    /// Time from disturbance onset until |e| stays below the threshold.
    pub recovery_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub joints: [JointMetrics; 3],
}

/// Same scalar threshold applied to every joint.
pub fn compute_metrics(
    trace: &SimTrace,
    threshold: f64,
    disturbance_onset: Option<f64>,
) -> Result<MetricsSummary, ReportError> {
    compute_metrics_per_joint(trace, &[threshold; 3], disturbance_onset)
}

pub fn compute_metrics_per_joint(
    trace: &SimTrace,
    thresholds: &[f64; 3],
    disturbance_onset: Option<f64>,
) -> Result<MetricsSummary, ReportError> {
    if trace.records.is_empty() {
        return Err(ReportError::EmptyTrace);
    }
    let dt = trace.dt;
    let n = trace.records.len();
    let joints = std::array::from_fn(|j| {
        let thr = thresholds[j];
        let e = |r: &TraceRecord| r.e[j];
        let records = &trace.records;

        let mut sum_sq = 0.0;
        let mut ise = 0.0;
        let mut effort = 0.0;
        let mut max_abs: f64 = 0.0;
        for (k, r) in records.iter().enumerate() {
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            sum_sq += e(r) * e(r);
            ise += w * e(r) * e(r) * dt;
            effort += w * r.tau[j] * r.tau[j] * dt;
            max_abs = max_abs.max(e(r).abs());
        }
        let rms = (sum_sq / n as f64).sqrt();

        // settling: last sample with |e| >= threshold, plus one dt
        let last_violation = records.iter().rposition(|r| e(r).abs() >= thr);
        let settling_time = match last_violation {
            None => Some(0.0),
            Some(k) if k == n - 1 => None, // not settled
            Some(k) => Some(records[k].t + dt),
        };

        let overshoot_percent = if trace.step_reference {
            let target = records[n - 1].q_d[j];
            let initial = records[0].q[j];
            let span = (target - initial).abs();
            if span == 0.0 {
                0.0
            } else {
                let dir = (target - initial).signum();
                let over = records
                    .iter()
                    .map(|r| dir * (r.q[j] - target))
                    .fold(0.0_f64, f64::max);
                100.0 * over.max(0.0) / span
            }
        } else {
            0.0
        };

        let recovery_time = disturbance_onset.map(|onset| {
            let last = records
                .iter()
                .rposition(|r| r.t >= onset && e(r).abs() >= thr);
            match last {
                None => Some(0.0),
                Some(k) if k == n - 1 => None,
                Some(k) => Some(records[k].t + dt - onset),
            }
        });

        JointMetrics {
            rms_error: rms,
            max_abs_error: max_abs,
            settling_time,
            overshoot_percent,
            ise,
            control_effort: effort,
            recovery_time: recovery_time.flatten(),
        }
    });
    Ok(MetricsSummary { joints })
}

/// RMS of the per-joint error restricted to t ∈ [t0, t1].
pub fn rms_error_window(trace: &SimTrace, joint: usize, t0: f64, t1: f64) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in &trace.records {
        if r.t >= t0 && r.t <= t1 {
            sum += r.e[joint] * r.e[joint];
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

pub const CSV_HEADER: &str = "t,q1,q2,q3,qd1,qd2,qd3,e1,e2,e3,s1,s2,s3,tau1,tau2,tau3,\
taueq1,taueq2,taueq3,tausw1,tausw2,tausw3,taunn1,taunn2,taunn3,fext1,fext2,fext3,V";

fn push_vec3(line: &mut String, v: &Vector3<f64>) {
    for i in 0..3 {
        let _ = write!(line, ",{}", v[i]);
    }
}

/// Renders the trace as CSV, full double precision (shortest
/// round-trip decimals), LF line endings, byte deterministic.
pub fn csv_string(trace: &SimTrace) -> String {
    let mut out = String::with_capacity(trace.records.len() * 256);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &trace.records {
        let mut line = String::with_capacity(256);
        let _ = write!(line, "{}", r.t);
        push_vec3(&mut line, &r.q);
        push_vec3(&mut line, &r.q_d);
        push_vec3(&mut line, &r.e);
        push_vec3(&mut line, &r.s);
        push_vec3(&mut line, &r.tau);
        push_vec3(&mut line, &r.tau_eq);
        push_vec3(&mut line, &r.tau_sw);
        push_vec3(&mut line, &r.tau_nn);
        push_vec3(&mut line, &r.f_ext);
        let _ = write!(line, ",{}", r.v);
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn write_csv(trace: &SimTrace, path: &Path) -> Result<(), ReportError> {
    std::fs::write(path, csv_string(trace))?;
    Ok(())
}

/// Parses a trace CSV produced by `csv_string`. Metadata (scenario,
/// controller) is not stored in the file and must be supplied.
pub fn parse_csv(
    text: &str,
    scenario: &str,
    controller: ControllerKind,
    step_reference: bool,
) -> Result<SimTrace, ReportError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(ReportError::EmptyTrace)?;
    if header != CSV_HEADER {
        return Err(ReportError::Parse("unexpected header".into()));
    }
    let mut records = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
        let cells = cells.map_err(|e| ReportError::Parse(format!("line {}: {}", ln + 2, e)))?;
        if cells.len() != 29 {
            return Err(ReportError::Parse(format!(
                "line {}: expected 29 columns, found {}",
                ln + 2,
                cells.len()
            )));
        }
        let v3 = |o: usize| Vector3::new(cells[o], cells[o + 1], cells[o + 2]);
        records.push(TraceRecord {
            t: cells[0],
            q: v3(1),
            q_d: v3(4),
            e: v3(7),
            s: v3(10),
            tau: v3(13),
            tau_eq: v3(16),
            tau_sw: v3(19),
            tau_nn: v3(22),
            f_ext: v3(25),
            v: cells[28],
        });
    }
    let dt = if records.len() > 1 {
        records[1].t - records[0].t
    } else {
        0.0
    };
    Ok(SimTrace {
        scenario: scenario.to_string(),
        controller,
        dt,
        step_reference,
        records,
    })
}

const FIG_WIDTH: f64 = 860.0;
const PANEL_HEIGHT: f64 = 250.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 46.0;
const PANEL_GAP: f64 = 42.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const JOINT_LABELS_Q: [&str; 3] = ["q1 [rad]", "q2 [m]", "q3 [m]"];
const JOINT_LABELS_E: [&str; 3] = ["e1 [rad]", "e2 [m]", "e3 [m]"];

fn fmt_tick(v: f64) -> String {
    let s = format!("{:.4}", v);
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    if trimmed == "-0" {
        "0".into()
    } else {
        trimmed.to_string()
    }
}

struct Panel {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    tmin: f64,
    tmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Panel {
    fn sx(&self, t: f64) -> f64 {
        self.x0 + (t - self.tmin) / (self.tmax - self.tmin) * self.w
    }
    fn sy(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.ymin) / (self.ymax - self.ymin) * self.h
    }

    fn polyline(&self, points: impl Iterator<Item = (f64, f64)>, style: &str) -> String {
        let mut d = String::new();
        for (t, y) in points {
            let _ = write!(d, "{:.2},{:.2} ", self.sx(t), self.sy(y));
        }
        format!("<polyline fill=\"none\" {} points=\"{}\"/>\n", style, d.trim_end())
    }

    fn frame(&self, ylabel: &str) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
            self.x0, self.y0, self.w, self.h
        );
        // ticks: 5 on each axis
        for k in 0..=4 {
            let t = self.tmin + (self.tmax - self.tmin) * k as f64 / 4.0;
            let x = self.sx(t);
            let _ = write!(
                out,
                "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
                self.y0 + self.h,
                self.y0 + self.h + 5.0
            );
            let _ = write!(
                out,
                "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333333\">{}</text>\n",
                self.y0 + self.h + 18.0,
                fmt_tick(t)
            );
            let yv = self.ymin + (self.ymax - self.ymin) * k as f64 / 4.0;
            let y = self.sy(yv);
            let _ = write!(
                out,
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
                self.x0 - 5.0,
                self.x0
            );
            let _ = write!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\" fill=\"#333333\">{}</text>\n",
                self.x0 - 8.0,
                y + 4.0,
                fmt_tick(yv)
            );
        }
        let _ = write!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#333333\" transform=\"rotate(-90 {:.2} {:.2})\">{}</text>\n",
            self.x0 - 48.0,
            self.y0 + self.h / 2.0,
            self.x0 - 48.0,
            self.y0 + self.h / 2.0,
            ylabel
        );
        let _ = write!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#333333\">t [s]</text>\n",
            self.x0 + self.w / 2.0,
            self.y0 + self.h + 34.0
        );
        out
    }
}

fn value_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn svg_open(title: &str, height: f64) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{FIG_WIDTH}\" height=\"{height}\" viewBox=\"0 0 {FIG_WIDTH} {height}\">\n\
<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n\
<text x=\"{:.2}\" y=\"22\" font-size=\"15\" text-anchor=\"middle\" fill=\"#111111\">{}</text>\n",
        FIG_WIDTH / 2.0,
        xml_escape(title)
    )
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn legend(traces: &[&SimTrace], with_reference: bool) -> String {
    let mut out = String::new();
    let mut x = MARGIN_LEFT;
    let y = MARGIN_TOP - 12.0;
    for (i, tr) in traces.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let _ = write!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#333333\">{}</text>\n",
            x + 24.0,
            x + 30.0,
            y + 4.0,
            tr.controller.name()
        );
        x += 110.0;
    }
    if with_reference {
        let _ = write!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#777777\" stroke-width=\"2\" stroke-dasharray=\"6 4\"/>\n\
<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#333333\">reference</text>\n",
            x + 24.0,
            x + 30.0,
            y + 4.0
        );
    }
    out
}

fn figure(
    traces: &[&SimTrace],
    title: &str,
    labels: &[&str; 3],
    select: impl Fn(&TraceRecord, usize) -> f64,
    draw_reference: bool,
    guide: Option<&[f64; 3]>,
) -> String {
    let height = MARGIN_TOP + 3.0 * PANEL_HEIGHT + 3.0 * PANEL_GAP;
    let mut out = svg_open(title, height);
    out.push_str(&legend(traces, draw_reference));
    let tmin = traces[0].records.first().map_or(0.0, |r| r.t);
    let tmax = traces[0].records.last().map_or(1.0, |r| r.t);
    for j in 0..3 {
        let mut values: Vec<f64> = traces
            .iter()
            .flat_map(|tr| tr.records.iter().map(|r| select(r, j)))
            .collect();
        if draw_reference {
            values.extend(traces[0].records.iter().map(|r| r.q_d[j]));
        }
        if let Some(g) = guide {
            values.push(g[j]);
            values.push(-g[j]);
        }
        let (ymin, ymax) = value_range(values.into_iter());
        let panel = Panel {
            x0: MARGIN_LEFT,
            y0: MARGIN_TOP + j as f64 * (PANEL_HEIGHT + PANEL_GAP),
            w: FIG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
            h: PANEL_HEIGHT,
            tmin,
            tmax,
            ymin,
            ymax,
        };
        out.push_str(&panel.frame(labels[j]));
        if let Some(g) = guide {
            for sign in [1.0, -1.0] {
                let y = panel.sy(sign * g[j]);
                let _ = write!(
                    out,
                    "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#bbbbbb\" stroke-width=\"1\" stroke-dasharray=\"2 3\"/>\n",
                    panel.x0,
                    panel.x0 + panel.w
                );
            }
        }
        if draw_reference {
            out.push_str(&panel.polyline(
                traces[0].records.iter().map(|r| (r.t, r.q_d[j])),
                "stroke=\"#777777\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"",
            ));
        }
        for (i, tr) in traces.iter().enumerate() {
            let style = format!("stroke=\"{}\" stroke-width=\"1.5\"", COLORS[i % COLORS.len()]);
            out.push_str(&panel.polyline(tr.records.iter().map(|r| (r.t, select(r, j))), &style));
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Joint responses q_i with the reference overlaid, three stacked panels.
pub fn response_figure(traces: &[&SimTrace], scenario: &str) -> String {
    figure(
        traces,
        &format!("Joint responses - {scenario} scenario"),
        &JOINT_LABELS_Q,
        |r, j| r.q[j],
        true,
        None,
    )
}

/// Tracking errors e_i, optionally with per-joint threshold guides.
pub fn error_figure(traces: &[&SimTrace], scenario: &str, thresholds: Option<&[f64; 3]>) -> String {
    figure(
        traces,
        &format!("Tracking errors - {scenario} scenario"),
        &JOINT_LABELS_E,
        |r, j| r.e[j],
        false,
        thresholds,
    )
}

/// Writes the response and error figures for one scenario. Returns the
/// created file paths.
pub fn render_figures(
    traces: &[&SimTrace],
    scenario: &str,
    thresholds: Option<&[f64; 3]>,
    out_dir: &Path,
) -> Result<Vec<std::path::PathBuf>, ReportError> {
    if traces.is_empty() || traces.iter().any(|t| t.is_empty()) {
        return Err(ReportError::EmptyTrace);
    }
    let tag: String = traces
        .iter()
        .map(|t| t.controller.name().replace('-', ""))
        .collect::<Vec<_>>()
        .join("-");
    let response = out_dir.join(format!("{scenario}_{tag}_response.svg"));
    let errors = out_dir.join(format!("{scenario}_{tag}_errors.svg"));
    std::fs::write(&response, response_figure(traces, scenario))?;
    std::fs::write(&errors, error_figure(traces, scenario, thresholds))?;
    Ok(vec![response, errors])
}

fn fmt_metric(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => "not-settled".into(),
    }
}

pub const METRIC_NAMES: [&str; 7] = [
    "rms_error",
    "max_abs_error",
    "settling_time",
    "overshoot_percent",
    "ise",
    "control_effort",
    "recovery_time",
];

fn metric_value(m: &JointMetrics, name: &str) -> Option<f64> {
    match name {
        "rms_error" => Some(m.rms_error),
        "max_abs_error" => Some(m.max_abs_error),
        "settling_time" => m.settling_time,
        "overshoot_percent" => Some(m.overshoot_percent),
        "ise" => Some(m.ise),
        "control_effort" => Some(m.control_effort),
        "recovery_time" => m.recovery_time,
        _ => unreachable!(),
    }
}

/// Aligned text table plus its machine-readable CSV twin. Rows are
/// ordered lexicographically by controller, then joint, then metric.
pub fn comparison_table(summaries: &BTreeMap<String, MetricsSummary>) -> (String, String) {
    let mut csv = String::from("controller,joint,metric,value\n");
    let mut rows: Vec<[String; 4]> = Vec::new();
    for (controller, summary) in summaries {
        for (j, m) in summary.joints.iter().enumerate() {
            for name in METRIC_NAMES {
                if name == "recovery_time" && m.recovery_time.is_none() {
                    // only reported for disturbance runs
                    continue;
                }
                let value = fmt_metric(metric_value(m, name));
                let _ = writeln!(csv, "{controller},{},{name},{value}", j + 1);
                rows.push([
                    controller.clone(),
                    (j + 1).to_string(),
                    name.to_string(),
                    value,
                ]);
            }
        }
    }
    let mut widths = [10usize, 5, 6, 5];
    let header = ["controller", "joint", "metric", "value"];
    for row in &rows {
        for (k, cell) in row.iter().enumerate() {
            widths[k] = widths[k].max(cell.len());
        }
    }
    let mut text = String::new();
    for (k, h) in header.iter().enumerate() {
        let _ = write!(text, "{:<width$}  ", h, width = widths[k]);
    }
    text.push('\n');
    for (k, _) in header.iter().enumerate() {
        let _ = write!(text, "{}  ", "-".repeat(widths[k]));
    }
    text.push('\n');
    for row in &rows {
        for (k, cell) in row.iter().enumerate() {
            let _ = write!(text, "{:<width$}  ", cell, width = widths[k]);
        }
        text.push('\n');
    }
    (text, csv)
}
