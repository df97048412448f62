//! Running every applicable certificate and the simulation for a scenario.

use crate::certificates::{
    check_inclusion_theorem, check_local_necessity, check_thm1, check_thm2_normalized,
    CertificateReport, Verdict,
};
use crate::error::Result;
use crate::multicommodity::{mc_certify, mc_simulate, McTrajectory};
use crate::scenario::{Scenario, ScenarioModel};
use crate::simulator::{simulate, MonitorReport, RunVerdict, SimConfig, Trajectory};

/// All certificates that apply to the scenario's network and inflow.
pub fn certify_scenario(scenario: &Scenario) -> Result<Vec<CertificateReport>> {
    match &scenario.model {
        ScenarioModel::Single {
            network, inflow, ..
        } => {
            let mut out = vec![check_thm1(network, inflow)?];
            if network.field().is_bounded() {
                out.push(check_thm2_normalized(network, inflow)?);
            }
            if network.field().is_inclusion_only() {
                out.push(check_inclusion_theorem(network, inflow)?);
            }
            if network.is_local() {
                if let Some(lambda) = inflow.as_constant() {
                    out.push(check_local_necessity(network, &lambda)?);
                }
            }
            Ok(out)
        }
        ScenarioModel::Multi { network, .. } => Ok(vec![mc_certify(network)?]),
    }
}

/// Some applicable condition certifies ISS and none proves instability.
pub fn is_certified(reports: &[CertificateReport]) -> bool {
    reports.iter().any(CertificateReport::is_certified)
        && !reports
            .iter()
            .any(|r| r.verdict == Verdict::NecessarilyUnstable)
}

#[derive(Clone, Debug)]
pub enum SimulationOutput {
    Single(Trajectory),
    Multi(McTrajectory),
}

impl SimulationOutput {
    pub fn verdict(&self) -> RunVerdict {
        match self {
            SimulationOutput::Single(t) => t.verdict,
            SimulationOutput::Multi(t) => t.verdict,
        }
    }

    /// `(label, trajectory)` for each exported series.
    pub fn trajectories(&self) -> Vec<(Option<&str>, &Trajectory)> {
        match self {
            SimulationOutput::Single(t) => vec![(None, t)],
            SimulationOutput::Multi(t) => t
                .names
                .iter()
                .map(|n| Some(n.as_str()))
                .zip(&t.commodities)
                .collect(),
        }
    }

    pub fn monitors(&self) -> Vec<&MonitorReport> {
        match self {
            SimulationOutput::Single(t) => t.monitors.iter().collect(),
            SimulationOutput::Multi(t) => t.commodities.iter().flat_map(|c| &c.monitors).collect(),
        }
    }

    pub fn monitors_hold(&self) -> bool {
        self.monitors().iter().all(|m| m.holds())
    }
}

pub fn simulate_scenario(scenario: &Scenario, cfg: &SimConfig) -> Result<SimulationOutput> {
    match &scenario.model {
        ScenarioModel::Single {
            network,
            inflow,
            initial,
        } => simulate(network, inflow, initial, cfg).map(SimulationOutput::Single),
        ScenarioModel::Multi { network, initial } => {
            mc_simulate(network, initial, cfg).map(SimulationOutput::Multi)
        }
    }
}
