//! CSV trajectories and text/JSON certificate reports.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::certificates::CertificateReport;
use crate::flow::Liminf;
use crate::inflow::SupMethod;
use crate::simulator::Trajectory;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed trajectory csv: {0}")]
    Format(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Structured,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "structured" | "json" => Ok(ReportFormat::Structured),
            other => Err(format!("unknown format `{other}` (expected text or structured)")),
        }
    }
}

/// Shortest decimal that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("x_{i}")));
    h.extend((1..=n).map(|i| format!("z_{i}")));
    h.push("V_uniform".into());
    h.push("V_capacity".into());
    h
}

/// Writes one row per sample: `t, x_1..x_n, z_1..z_n, V_uniform, V_capacity`.
/// `V_capacity` is empty for unbounded flow fields.
pub fn write_trajectory_to<W: Write>(traj: &Trajectory, out: W) -> Result<(), ExportError> {
    let n = traj.link_count();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(n))?;
    let mut row = Vec::with_capacity(2 * n + 3);
    for k in 0..traj.times.len() {
        row.clear();
        row.push(num(traj.times[k]));
        row.extend(traj.states[k].iter().map(|v| num(*v)));
        row.extend(traj.outflows[k].iter().map(|v| num(*v)));
        row.push(num(traj.lyapunov_uniform[k]));
        row.push(
            traj.lyapunov_capacity
                .as_ref()
                .map_or(String::new(), |v| num(v[k])),
        );
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| ExportError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<(), ExportError> {
    let file = std::fs::File::create(path).map_err(|source| ExportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_trajectory_to(traj, std::io::BufWriter::new(file))
}

/// Columns of a trajectory CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryTable {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub outflows: Vec<Vec<f64>>,
    pub lyapunov_uniform: Vec<f64>,
    pub lyapunov_capacity: Option<Vec<f64>>,
}

impl TrajectoryTable {
    /// True when every stored value equals the trajectory's bit for bit.
    pub fn matches(&self, traj: &Trajectory) -> bool {
        let same = |a: &[f64], b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        };
        let rows = |a: &[Vec<f64>], b: &[Vec<f64>]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| same(x, y))
        };
        same(&self.times, &traj.times)
            && rows(&self.states, &traj.states)
            && rows(&self.outflows, &traj.outflows)
            && same(&self.lyapunov_uniform, &traj.lyapunov_uniform)
            && match (&self.lyapunov_capacity, &traj.lyapunov_capacity) {
                (Some(a), Some(b)) => same(a, b),
                (None, None) => true,
                _ => false,
            }
    }
}

pub fn read_trajectory_from<R: Read>(input: R) -> Result<TrajectoryTable, ExportError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < 3 || (header.len() - 3) % 2 != 0 {
        return Err(ExportError::Format(format!("unexpected column count {}", header.len())));
    }
    let n = (header.len() - 3) / 2;
    if header != trajectory_header(n) {
        return Err(ExportError::Format("unexpected header".into()));
    }
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| ExportError::Format(format!("bad number `{s}`")))
    };
    let mut table = TrajectoryTable {
        times: Vec::new(),
        states: Vec::new(),
        outflows: Vec::new(),
        lyapunov_uniform: Vec::new(),
        lyapunov_capacity: Some(Vec::new()),
    };
    for record in r.records() {
        let record = record?;
        let fields: Vec<&str> = record.iter().collect();
        table.times.push(parse(fields[0])?);
        table.states.push(
            fields[1..=n]
                .iter()
                .map(|s| parse(s))
                .collect::<Result<_, _>>()?,
        );
        table.outflows.push(
            fields[n + 1..=2 * n]
                .iter()
                .map(|s| parse(s))
                .collect::<Result<_, _>>()?,
        );
        table.lyapunov_uniform.push(parse(fields[2 * n + 1])?);
        let cap = fields[2 * n + 2];
        if cap.is_empty() {
            table.lyapunov_capacity = None;
        } else if let Some(v) = table.lyapunov_capacity.as_mut() {
            v.push(parse(cap)?);
        }
    }
    Ok(table)
}

pub fn read_trajectory(path: &Path) -> Result<TrajectoryTable, ExportError> {
    let file = std::fs::File::open(path).map_err(|source| ExportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_trajectory_from(std::io::BufReader::new(file))
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    schema_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_unix: Option<u64>,
    reports: &'a [CertificateReport],
}

/// Seconds since the Unix epoch, for report timestamps.
pub fn unix_timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub fn render_report_text(report: &CertificateReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "condition: {}", report.condition);
    let _ = writeln!(s, "verdict:   {}", report.verdict);
    let method = match &report.lhs_method {
        SupMethod::Analytic => "analytic".to_string(),
        SupMethod::Sampled { samples, horizon } => {
            format!("sampled, {samples} points over [0, {horizon}]")
        }
    };
    let _ = writeln!(s, "lhs:       {} ({method})", report.lhs);
    let mut rhs = report.rhs.to_string();
    if let Some(p) = &report.rhs_provenance {
        if matches!(report.rhs, Liminf::Finite { .. } | Liminf::Infinite) {
            let _ = write!(rhs, " ({}", p.method);
            if let Some(k) = p.binding_ray {
                let _ = write!(rhs, ", binding link {}", k + 1);
            }
            rhs.push(')');
        }
    }
    let _ = writeln!(s, "rhs:       {rhs}");
    match report.margin {
        Some(m) => {
            let _ = writeln!(s, "margin:    {m}");
        }
        None => {
            let _ = writeln!(s, "margin:    n/a");
        }
    }
    for note in &report.notes {
        let _ = writeln!(s, "note:      {note}");
    }
    s
}

/// Renders reports deterministically; `timestamp` is included only when set.
pub fn render_reports(
    reports: &[CertificateReport],
    format: ReportFormat,
    scenario: Option<&str>,
    timestamp: Option<u64>,
) -> String {
    match format {
        ReportFormat::Text => {
            let mut s = String::new();
            if let Some(name) = scenario {
                let _ = writeln!(s, "scenario: {name}");
            }
            if let Some(t) = timestamp {
                let _ = writeln!(s, "generated_at_unix: {t}");
            }
            for r in reports {
                s.push('\n');
                s.push_str(&render_report_text(r));
            }
            s
        }
        ReportFormat::Structured => {
            let doc = ReportDocument {
                schema_version: REPORT_SCHEMA_VERSION,
                scenario,
                generated_at_unix: timestamp,
                reports,
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

pub fn write_report(
    reports: &[CertificateReport],
    path: &Path,
    format: ReportFormat,
    scenario: Option<&str>,
    timestamp: Option<u64>,
) -> Result<(), ExportError> {
    std::fs::write(path, render_reports(reports, format, scenario, timestamp)).map_err(|source| {
        ExportError::Io {
            path: path.display().to_string(),
            source,
        }
    })
}
