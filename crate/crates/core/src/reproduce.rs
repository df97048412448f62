//! Reference outcomes for the bundled scenarios and a runner that checks
//! computed verdicts against them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::analysis::{certify_scenario, simulate_scenario, SimulationOutput};
use crate::certificates::{CertificateReport, Condition, Verdict};
use crate::scenario::{load_bundled, ScenarioError, ScenarioModel};
use crate::simulator::{RunVerdict, SimConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Check {
    Valid,
    LeontiefInverse { rows: Vec<Vec<f64>> },
    Simulation { verdict: RunVerdict },
    Certificate { condition: Condition, verdict: Verdict },
}

#[derive(Clone, Debug, Serialize)]
pub struct Expectation {
    pub id: String,
    /// Parameter values the item applies to.
    pub params: Vec<(String, f64)>,
    pub claim: String,
    pub check: Check,
}

fn item(id: &str, params: &[(&str, f64)], claim: &str, check: Check) -> Expectation {
    Expectation {
        id: id.to_string(),
        params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        claim: claim.to_string(),
        check,
    }
}

fn sim(verdict: RunVerdict) -> Check {
    Check::Simulation { verdict }
}

fn cert(condition: Condition, verdict: Verdict) -> Check {
    Check::Certificate { condition, verdict }
}

/// Reference outcomes for a bundled scenario.
pub fn expectations(scenario: &str) -> Vec<Expectation> {
    use std::f64::consts::PI;
    use RunVerdict::{Bounded, Diverging};
    match scenario {
        "example1" => vec![
            item("valid", &[], "the routing is outflow-connected", Check::Valid),
            item(
                "leontief",
                &[],
                "a1 = 10 l1 + 10 l2 and a2 = 9 l1 + 10 l2",
                Check::LeontiefInverse {
                    rows: vec![vec![10.0, 10.0], vec![9.0, 10.0]],
                },
            ),
        ],
        "junction" => vec![
            item(
                "overload-diverges",
                &[("lambda1", 1.9)],
                "trajectory is unbounded at l1 = 1.9",
                sim(Diverging),
            ),
            item(
                "overload-smooth-not-applicable",
                &[("lambda1", 1.9)],
                "the smooth condition does not apply to this flow field",
                cert(Condition::SmoothIss, Verdict::Uncertifiable),
            ),
            item(
                "overload-inclusion-fails",
                &[("lambda1", 1.9)],
                "the inclusion condition is not met at l1 = 1.9",
                cert(Condition::InclusionIss, Verdict::NotCertified),
            ),
            item(
                "light-certified",
                &[("lambda1", 0.5)],
                "the inclusion condition holds at l1 = 0.5",
                cert(Condition::InclusionIss, Verdict::CertifiedIss),
            ),
            item(
                "light-bounded",
                &[("lambda1", 0.5)],
                "trajectory stays bounded at l1 = 0.5",
                sim(Bounded),
            ),
        ],
        "timevarying" => {
            let mut v = Vec::new();
            for (phi, label) in [(0.0, "0"), (PI, "pi")] {
                for (a, verdict) in [(0.24, Bounded), (0.45, Bounded), (0.51, Diverging)] {
                    v.push(item(
                        &format!("sim-A{a}-phi{label}"),
                        &[("A", a), ("phi", phi)],
                        if verdict == Bounded {
                            "trajectory stays bounded"
                        } else {
                            "trajectory diverges"
                        },
                        sim(verdict),
                    ));
                }
            }
            for (a, phi, label, verdict) in [
                (0.24, 0.0, "0", Verdict::CertifiedIss),
                (0.45, 0.0, "0", Verdict::NotCertified),
                (0.51, 0.0, "0", Verdict::NotCertified),
                (0.24, PI, "pi", Verdict::CertifiedIss),
                (0.45, PI, "pi", Verdict::CertifiedIss),
                (0.51, PI, "pi", Verdict::NotCertified),
            ] {
                let claim = if phi == 0.0 {
                    "condition equivalent to A < 0.25"
                } else {
                    "condition equivalent to A < 0.5"
                };
                v.push(item(
                    &format!("cert-A{a}-phi{label}"),
                    &[("A", a), ("phi", phi)],
                    claim,
                    cert(Condition::SmoothIss, verdict),
                ));
            }
            v
        }
        "local-node" => vec![
            item(
                "overload-unstable",
                &[("lambda1", 0.5), ("lambda2", 0.4), ("lambda3", 0.3)],
                "sum l_i / c_i = 1.2 > 1 violates the necessary condition",
                cert(Condition::LocalNecessity, Verdict::NecessarilyUnstable),
            ),
            item(
                "overload-diverges",
                &[("lambda1", 0.5), ("lambda2", 0.4), ("lambda3", 0.3)],
                "trajectory diverges at total load 1.2",
                sim(Diverging),
            ),
            item(
                "light-certified",
                &[("lambda1", 0.4), ("lambda2", 0.3), ("lambda3", 0.2)],
                "the normalized condition certifies total load 0.9",
                cert(Condition::NormalizedIss, Verdict::CertifiedIss),
            ),
            item(
                "light-bounded",
                &[("lambda1", 0.4), ("lambda2", 0.3), ("lambda3", 0.2)],
                "trajectory stays bounded at total load 0.9",
                sim(Bounded),
            ),
        ],
        "multicommodity" => vec![
            item(
                "certified",
                &[],
                "the multi-commodity condition is satisfied",
                cert(Condition::MultiCommodityNormalized, Verdict::CertifiedIss),
            ),
            item("bounded", &[], "both commodity trajectories stay bounded", sim(Bounded)),
        ],
        _ => Vec::new(),
    }
}

#[derive(Clone, Debug)]
pub struct VariantRun {
    pub params: BTreeMap<String, f64>,
    pub valid: bool,
    pub leontief: Option<Vec<Vec<f64>>>,
    pub certificates: Vec<CertificateReport>,
    pub simulation: SimulationOutput,
}

#[derive(Clone, Debug, Serialize)]
pub struct ItemOutcome {
    pub id: String,
    pub claim: String,
    pub expected: String,
    pub observed: String,
    pub matches: bool,
}

#[derive(Clone, Debug)]
pub struct ReproduceSummary {
    pub scenario: String,
    pub variants: Vec<VariantRun>,
    pub items: Vec<ItemOutcome>,
}

impl ReproduceSummary {
    pub fn any_diverging(&self) -> bool {
        self.variants
            .iter()
            .any(|v| v.simulation.verdict() == RunVerdict::Diverging)
    }

    pub fn mismatches(&self) -> usize {
        self.items.iter().filter(|i| !i.matches).count()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "reproduce {}", self.scenario);
        for v in &self.variants {
            let _ = writeln!(
                s,
                "  run {}: simulation {}",
                format_params(&v.params),
                v.simulation.verdict()
            );
            for c in &v.certificates {
                let _ = writeln!(
                    s,
                    "    {}: lhs {} vs rhs {} -> {}",
                    c.condition, c.lhs, c.rhs, c.verdict
                );
            }
        }
        for i in &self.items {
            let tag = if i.matches {
                "matches reference"
            } else {
                "MISMATCH with reference"
            };
            let _ = writeln!(
                s,
                "  [{}] {tag}: {} (expected {}, observed {})",
                i.id, i.claim, i.expected, i.observed
            );
        }
        let _ = writeln!(
            s,
            "{} of {} reference items match",
            self.items.len() - self.mismatches(),
            self.items.len()
        );
        s
    }
}

pub fn format_params(params: &BTreeMap<String, f64>) -> String {
    if params.is_empty() {
        return "(defaults)".into();
    }
    params
        .iter()
        .map(|(k, v)| {
            if (*v - std::f64::consts::PI).abs() < 1e-12 {
                format!("{k}=pi")
            } else {
                format!("{k}={v}")
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn applies(e: &Expectation, params: &BTreeMap<String, f64>) -> bool {
    e.params
        .iter()
        .all(|(k, v)| params.get(k).is_some_and(|p| (p - v).abs() <= 1e-12))
}

fn evaluate(e: &Expectation, run: &VariantRun) -> ItemOutcome {
    let (expected, observed, matches) = match &e.check {
        Check::Valid => (
            "valid".to_string(),
            if run.valid { "valid" } else { "invalid" }.to_string(),
            run.valid,
        ),
        Check::LeontiefInverse { rows } => {
            let ok = run.leontief.as_ref().is_some_and(|l| {
                l.len() == rows.len()
                    && l.iter()
                        .flatten()
                        .zip(rows.iter().flatten())
                        .all(|(a, b)| (a - b).abs() <= 1e-12)
            });
            let observed = run
                .leontief
                .as_ref()
                .map_or("not available".to_string(), |l| format!("{l:?}"));
            (format!("{rows:?}"), observed, ok)
        }
        Check::Simulation { verdict } => {
            let got = run.simulation.verdict();
            (verdict.to_string(), got.to_string(), got == *verdict)
        }
        Check::Certificate { condition, verdict } => {
            match run.certificates.iter().find(|c| c.condition == *condition) {
                Some(c) => (
                    verdict.to_string(),
                    format!("{} (lhs {})", c.verdict, c.lhs),
                    c.verdict == *verdict,
                ),
                None => (verdict.to_string(), "not applicable".into(), false),
            }
        }
    };
    ItemOutcome {
        id: e.id.clone(),
        claim: e.claim.clone(),
        expected,
        observed,
        matches,
    }
}

fn run_variant(
    name: &str,
    overrides: &[(String, f64)],
    configure: &(dyn Fn(&mut SimConfig) + Sync),
) -> Result<VariantRun, ReproduceError> {
    let scenario = load_bundled(name, overrides)?;
    let mut cfg = scenario.sim.clone();
    configure(&mut cfg);
    cfg.validate()?;
    let certificates = certify_scenario(&scenario)?;
    let simulation = simulate_scenario(&scenario, &cfg)?;
    let leontief = match &scenario.model {
        ScenarioModel::Single { network, .. } => Some(network.leontief().inverse_rows()),
        ScenarioModel::Multi { .. } => None,
    };
    Ok(VariantRun {
        params: scenario.source.parameters.clone(),
        // Building the scenario validates the network.
        valid: true,
        leontief,
        certificates,
        simulation,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum ReproduceError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Model(#[from] crate::error::Error),
}

/// Runs the bundled scenario at the given parameters, or at every parameter
/// set of its reference table when `overrides` is empty. Variants run on
/// separate threads.
pub fn reproduce(
    name: &str,
    overrides: &[(String, f64)],
    configure: &(dyn Fn(&mut SimConfig) + Sync),
) -> Result<ReproduceSummary, ReproduceError> {
    let table = expectations(name);
    let mut variants: Vec<Vec<(String, f64)>> = Vec::new();
    if overrides.is_empty() {
        for e in &table {
            if !variants.contains(&e.params) {
                variants.push(e.params.clone());
            }
        }
    }
    if variants.is_empty() {
        variants.push(overrides.to_vec());
    }
    let results: Vec<Result<VariantRun, ReproduceError>> = std::thread::scope(|s| {
        let handles: Vec<_> = variants
            .iter()
            .map(|v| s.spawn(move || run_variant(name, v, configure)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("variant thread panicked"))
            .collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut items = Vec::new();
    for e in &table {
        if let Some(run) = runs.iter().find(|r| applies(e, &r.params)) {
            items.push(evaluate(e, run));
        }
    }
    Ok(ReproduceSummary {
        scenario: name.to_string(),
        variants: runs,
        items,
    })
}
