use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use flownet_core::analysis::{certify_scenario, is_certified, simulate_scenario, SimulationOutput};
use flownet_core::export::{render_reports, unix_timestamp, write_trajectory, ReportFormat};
use flownet_core::flow::{check_assumption2, standard_samples};
use flownet_core::network::spectral_radius;
use flownet_core::reproduce::{format_params, reproduce};
use flownet_core::scenario::{
    bundled_file, bundled_names, parse_param_assignment, resolve_scenario, Scenario, ScenarioModel,
};
use flownet_core::simulator::{Mode, RunVerdict, SimConfig};

const EXIT_NOT_CERTIFIED: u8 = 2;
const EXIT_DIVERGING: u8 = 3;

#[derive(Parser)]
#[command(name = "flownet", version, about = "Stability certificates and simulation for dynamical flow networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check routing, topology and flow functions of a scenario.
    Validate(Common),
    /// Evaluate every applicable stability condition.
    Certify(Common),
    /// Integrate the dynamics and write the trajectory and monitor ledger.
    Simulate(Common),
    /// Certify and simulate a bundled scenario and compare with reference outcomes.
    Reproduce {
        /// Bundled scenario name.
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// List bundled scenarios.
    ListScenarios,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file, or the name of a bundled scenario.
    #[arg(long)]
    scenario: Option<String>,
    /// Output directory.
    #[arg(long, env = "FLOWNET_OUT_DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long, default_value = "text", value_parser = parse_format)]
    format: ReportFormat,
    /// Override a declared scenario parameter, e.g. `--param A=0.45` or `--param phi=pi`.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Omit the timestamp from written reports.
    #[arg(long)]
    no_timestamp: bool,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}

impl Common {
    fn overrides(&self) -> Result<Vec<(String, f64)>> {
        self.params
            .iter()
            .map(|p| parse_param_assignment(p).map_err(Into::into))
            .collect()
    }

    fn scenario(&self) -> Result<Scenario> {
        let spec = self
            .scenario
            .as_deref()
            .context("--scenario is required")?;
        Ok(resolve_scenario(spec, &self.overrides()?)?)
    }

    fn configure(&self, cfg: &mut SimConfig) {
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
    }

    fn sim_config(&self, scenario: &Scenario) -> Result<SimConfig> {
        let mut cfg = scenario.sim.clone();
        self.configure(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    fn timestamp(&self) -> Option<u64> {
        (!self.no_timestamp).then(unix_timestamp)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("flownet-out"))
    }

    fn extension(&self) -> &'static str {
        match self.format {
            ReportFormat::Text => "txt",
            ReportFormat::Structured => "json",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Validate(c) => validate(&c),
        Command::Certify(c) => certify(&c),
        Command::Simulate(c) => simulate(&c),
        Command::Reproduce { name, common } => run_reproduce(&name, &common),
        Command::ListScenarios => {
            for name in bundled_names() {
                let file = bundled_file(name)?;
                println!("{name:<16} {}", file.description);
            }
            Ok(0)
        }
    }
}

fn validate(c: &Common) -> Result<u8> {
    let s = c.scenario()?;
    println!("scenario {} ({})", s.name(), s.origin);
    let (graph, field, routings) = match &s.model {
        ScenarioModel::Single { network, .. } => {
            (network.graph(), network.field(), vec![("routing".to_string(), network.routing())])
        }
        ScenarioModel::Multi { network, .. } => (
            network.graph(),
            network.field(),
            (0..network.commodity_count())
                .map(|k| (format!("commodity {}", network.spec(k).name), &network.spec(k).routing))
                .collect(),
        ),
    };
    println!("  {} nodes, {} links", graph.node_count(), graph.link_count());
    for (label, r) in routings {
        let rho = spectral_radius(r);
        println!("  {label}: valid, spectral radius {:.6}", rho.radius);
    }
    let report = check_assumption2(field, &standard_samples(field.len()))?;
    if report.passes() {
        println!("  flow functions: work-conserving on {} samples", report.samples_checked);
    } else if report.inclusion_only {
        println!(
            "  flow functions: serve empty links ({} sample violations); use inclusion mode",
            report.violations.len()
        );
    } else {
        anyhow::bail!(
            "flow functions are not work-conserving ({} violations)",
            report.violations.len()
        );
    }
    println!("valid");
    Ok(0)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn certify(c: &Common) -> Result<u8> {
    let s = c.scenario()?;
    let reports = certify_scenario(&s)?;
    let rendered = render_reports(&reports, c.format, Some(s.name()), c.timestamp());
    print!("{rendered}");
    if c.out.is_some() {
        let dir = c.out_dir();
        ensure_dir(&dir)?;
        let path = dir.join(format!("{}-certificates.{}", s.name(), c.extension()));
        std::fs::write(&path, &rendered).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(if is_certified(&reports) {
        0
    } else {
        EXIT_NOT_CERTIFIED
    })
}

fn write_simulation(
    dir: &Path,
    stem: &str,
    output: &SimulationOutput,
    c: &Common,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    for (label, traj) in output.trajectories() {
        let name = match label {
            Some(l) => format!("{stem}-{l}-trajectory.csv"),
            None => format!("{stem}-trajectory.csv"),
        };
        let path = dir.join(name);
        write_trajectory(traj, &path)?;
        written.push(path);
    }
    let path = dir.join(format!("{stem}-monitors.{}", c.extension()));
    std::fs::write(&path, render_ledger(output, c.format, c.timestamp()))
        .with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(written)
}

fn render_ledger(output: &SimulationOutput, format: ReportFormat, timestamp: Option<u64>) -> String {
    match format {
        ReportFormat::Structured => {
            let series: Vec<_> = output
                .trajectories()
                .into_iter()
                .map(|(label, t)| {
                    json!({
                        "commodity": label,
                        "verdict": t.verdict,
                        "final_state": t.final_state(),
                        "stats": t.stats,
                        "monitors": t.monitors,
                    })
                })
                .collect();
            let mut doc = json!({
                "schema_version": 1,
                "verdict": output.verdict(),
                "series": series,
            });
            if let Some(t) = timestamp {
                doc["generated_at_unix"] = json!(t);
            }
            let mut s = serde_json::to_string_pretty(&doc).expect("ledger serializes");
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let mut s = String::new();
            if let Some(t) = timestamp {
                s.push_str(&format!("generated_at_unix: {t}\n"));
            }
            s.push_str(&format!("verdict: {}\n", output.verdict()));
            for (label, t) in output.trajectories() {
                if let Some(l) = label {
                    s.push_str(&format!("commodity {l}: {}\n", t.verdict));
                }
                for m in &t.monitors {
                    s.push_str(&format!(
                        "  {}: {} ({} samples, {} violations, max excess {:e})\n",
                        m.name,
                        if m.holds() { "holds" } else { "VIOLATED" },
                        m.samples_checked,
                        m.violation_count,
                        m.max_excess
                    ));
                    for v in &m.violations {
                        s.push_str(&format!(
                            "    t = {}: value {} > bound {}{}\n",
                            v.time,
                            v.value,
                            v.bound,
                            v.link.map_or(String::new(), |l| format!(" (link {})", l + 1))
                        ));
                    }
                }
            }
            s
        }
    }
}

fn verdict_code(v: RunVerdict) -> u8 {
    if v == RunVerdict::Diverging {
        EXIT_DIVERGING
    } else {
        0
    }
}

fn simulate(c: &Common) -> Result<u8> {
    let s = c.scenario()?;
    let cfg = c.sim_config(&s)?;
    let output = simulate_scenario(&s, &cfg)?;
    let written = write_simulation(&c.out_dir(), s.name(), &output, c)?;
    println!(
        "{}: {} over [0, {}] (dt {}, {} mode); monitors {}",
        s.name(),
        output.verdict(),
        cfg.horizon,
        cfg.dt,
        cfg.mode,
        if output.monitors_hold() { "hold" } else { "VIOLATED" }
    );
    for p in written {
        println!("  wrote {}", p.display());
    }
    Ok(verdict_code(output.verdict()))
}

fn run_reproduce(name: &str, c: &Common) -> Result<u8> {
    if c.scenario.is_some() {
        anyhow::bail!("reproduce takes a bundled scenario name, not --scenario");
    }
    let overrides = c.overrides()?;
    let configure = |cfg: &mut SimConfig| c.configure(cfg);
    let summary = reproduce(name, &overrides, &configure)?;
    let text = summary.render();
    print!("{text}");
    let dir = c.out_dir().join(name);
    ensure_dir(&dir)?;
    for (k, v) in summary.variants.iter().enumerate() {
        let stem = format!("{name}-run{}", k + 1);
        let reports = render_reports(
            &v.certificates,
            c.format,
            Some(&format!("{name} {}", format_params(&v.params))),
            c.timestamp(),
        );
        std::fs::write(dir.join(format!("{stem}-certificates.{}", c.extension())), reports)?;
        write_simulation(&dir, &stem, &v.simulation, c)?;
    }
    let summary_path = dir.join(match c.format {
        ReportFormat::Text => "summary.txt".to_string(),
        ReportFormat::Structured => "summary.json".to_string(),
    });
    let body = match c.format {
        ReportFormat::Text => text,
        ReportFormat::Structured => {
            let runs: Vec<_> = summary
                .variants
                .iter()
                .map(|v| {
                    json!({
                        "params": v.params,
                        "verdict": v.simulation.verdict(),
                        "certificates": v.certificates,
                    })
                })
                .collect();
            let mut doc = json!({
                "schema_version": 1,
                "scenario": name,
                "runs": runs,
                "items": summary.items,
            });
            if let Some(t) = c.timestamp() {
                doc["generated_at_unix"] = json!(t);
            }
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };
    std::fs::write(&summary_path, body)?;
    println!("wrote {}", dir.display());
    Ok(if summary.any_diverging() {
        EXIT_DIVERGING
    } else {
        0
    })
}
