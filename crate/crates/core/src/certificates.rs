//! Sufficient (and, for local networks, necessary) stability conditions,
//! evaluated mechanically, plus the Lyapunov functions behind them.
//!
//! Every sufficient condition has the shape
//! `sup_t sum_i w_i a_i(t) < liminf_{|x| -> inf} sum_i g_i(x)` where
//! `a(t) = (I - R^T)^{-1} lambda(t)`. The left-hand side is linear in the
//! inflow, so it is evaluated as the supremum of a nonnegative combination of
//! the inflow signals with coefficients `(I - R^T)^{-T} w`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{
    check_state, liminf_normalized_flow, liminf_total_flow, FlowFamily, FlowField, Liminf,
    LiminfMode, LiminfProvenance, LiminfResult,
};
use crate::inflow::{weighted_sup, InflowVector, SupEstimate, SupMethod};
use crate::model::FlowNetwork;
use crate::network::Leontief;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `sup sum_i a_i < liminf sum_i f_i`.
    SmoothIss,
    /// `sup sum_i a_i / c_i < liminf sum_i f_i / c_i`.
    NormalizedIss,
    /// `sum_i lambda_i / c_i <= liminf` is necessary on a local network.
    LocalNecessity,
    /// `sup sum_i a_i < liminf sum_i 1(x_i > 0) f_i`.
    InclusionIss,
    /// `sup sum_i sum_k a^k_i / c_i < liminf sum_i f_i / c_i`.
    MultiCommodityNormalized,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::SmoothIss => "smooth-iss",
            Condition::NormalizedIss => "normalized-iss",
            Condition::LocalNecessity => "local-necessity",
            Condition::InclusionIss => "inclusion-iss",
            Condition::MultiCommodityNormalized => "multicommodity-normalized",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    #[serde(rename = "certified-ISS")]
    CertifiedIss,
    NotCertified,
    NecessarilyUnstable,
    Uncertifiable,
    /// The necessity check passed, which decides nothing by itself.
    NotDetermined,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::CertifiedIss => "certified-ISS",
            Verdict::NotCertified => "not-certified",
            Verdict::NecessarilyUnstable => "necessarily-unstable",
            Verdict::Uncertifiable => "uncertifiable",
            Verdict::NotDetermined => "not-determined",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub condition: Condition,
    pub lhs: f64,
    pub lhs_method: SupMethod,
    pub rhs: Liminf,
    pub rhs_provenance: Option<LiminfProvenance>,
    /// `rhs - lhs`; absent when the right-hand side is infinite or unknown.
    pub margin: Option<f64>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl CertificateReport {
    fn sufficient(condition: Condition, lhs: SupEstimate, rhs: LiminfResult) -> Self {
        let verdict = if !rhs.value.is_known() {
            Verdict::Uncertifiable
        } else if lhs.value.is_finite() && rhs.value.exceeds(lhs.value) {
            Verdict::CertifiedIss
        } else {
            Verdict::NotCertified
        };
        let mut notes = Vec::new();
        if let SupMethod::Sampled { samples, horizon } = lhs.method {
            notes.push(format!(
                "lhs is a sampled supremum ({samples} points over [0, {horizon}]) and may underestimate"
            ));
        }
        if let Liminf::Unknown { reason } = &rhs.value {
            notes.push(format!("uncertifiable: {reason}"));
        }
        if rhs.value == Liminf::Infinite {
            notes.push("unbounded outflow: any finite lhs is certified".into());
        }
        Self {
            condition,
            lhs: lhs.value,
            margin: rhs.value.finite().map(|r| r - lhs.value),
            lhs_method: lhs.method,
            rhs: rhs.value,
            rhs_provenance: Some(rhs.provenance),
            verdict,
            notes,
        }
    }

    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::CertifiedIss
    }
}

/// `sup_t sum_i w_i a^k_i(t)` summed over `(leontief, inflow)` pairs.
pub fn weighted_net_inflow_sup(
    parts: &[(&Leontief, &InflowVector)],
    weights: &[f64],
) -> Result<SupEstimate> {
    let mut terms = Vec::new();
    for (leontief, inflow) in parts {
        if inflow.len() != leontief.dim() || weights.len() != leontief.dim() {
            return Err(Error::DimensionMismatch {
                what: "inflow/weights vs Leontief operator",
                expected: leontief.dim(),
                actual: inflow.len().min(weights.len()),
            });
        }
        let coefficients = leontief.weighted_row(weights);
        for (c, s) in coefficients.into_iter().zip(inflow.signals()) {
            terms.push((c.max(0.0), s));
        }
    }
    Ok(weighted_sup(&terms))
}

fn inclusion_refusal(report: &mut CertificateReport) {
    let naive = report.verdict == Verdict::CertifiedIss;
    report.verdict = Verdict::Uncertifiable;
    report.notes.push(format!(
        "flow field serves empty links (inclusion-only); the smooth condition does not apply{}. Use the inclusion condition.",
        if naive {
            " even though lhs < rhs here"
        } else {
            ""
        }
    ));
}

/// Smooth ISS condition with uniform weights.
pub fn check_thm1(network: &FlowNetwork, inflow: &InflowVector) -> Result<CertificateReport> {
    let n = network.link_count();
    let lhs = weighted_net_inflow_sup(&[(network.leontief(), inflow)], &vec![1.0; n])?;
    let rhs = liminf_total_flow(network.field(), LiminfMode::Smooth);
    let mut report = CertificateReport::sufficient(Condition::SmoothIss, lhs, rhs);
    if network.field().is_inclusion_only() {
        inclusion_refusal(&mut report);
    }
    Ok(report)
}

/// Capacity-normalized ISS condition. The right-hand side is the liminf of
/// the normalized total outflow `sum_i f_i / c_i`.
pub fn check_thm2_normalized(
    network: &FlowNetwork,
    inflow: &InflowVector,
) -> Result<CertificateReport> {
    let Some(caps) = network.field().finite_capacities() else {
        let n = network.link_count();
        let lhs = weighted_net_inflow_sup(&[(network.leontief(), inflow)], &vec![1.0; n])?;
        let mut report = CertificateReport::sufficient(
            Condition::NormalizedIss,
            lhs,
            liminf_normalized_flow(network.field(), LiminfMode::Smooth),
        );
        report.lhs = f64::NAN;
        report.notes.push("unbounded flow field: use the smooth ISS condition instead".into());
        return Ok(report);
    };
    let weights: Vec<f64> = caps.iter().map(|c| 1.0 / c).collect();
    let lhs = weighted_net_inflow_sup(&[(network.leontief(), inflow)], &weights)?;
    let rhs = liminf_normalized_flow(network.field(), LiminfMode::Smooth);
    let mut report = CertificateReport::sufficient(Condition::NormalizedIss, lhs, rhs);
    if network.field().is_inclusion_only() {
        inclusion_refusal(&mut report);
    }
    Ok(report)
}

/// Inclusion-dynamics ISS condition: only links holding mass count toward
/// the liminf.
pub fn check_inclusion_theorem(
    network: &FlowNetwork,
    inflow: &InflowVector,
) -> Result<CertificateReport> {
    let n = network.link_count();
    let lhs = weighted_net_inflow_sup(&[(network.leontief(), inflow)], &vec![1.0; n])?;
    let rhs = liminf_total_flow(network.field(), LiminfMode::InclusionIndicator);
    Ok(CertificateReport::sufficient(Condition::InclusionIss, lhs, rhs))
}

/// Returns `(sum a_i / b_i <= min c_i / b_i, sum a_i / c_i < 1)`.
pub fn check_prop1_optimality(a: &[f64], c: &[f64], b: &[f64]) -> Result<(bool, bool)> {
    if a.len() != c.len() || b.len() != c.len() {
        return Err(Error::DimensionMismatch {
            what: "normalization vectors",
            expected: a.len(),
            actual: c.len().min(b.len()),
        });
    }
    if a.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Domain("net inflow vector must be >= 0".into()));
    }
    if c.iter().chain(b).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain("normalization weights must be > 0".into()));
    }
    let lhs_b: f64 = a.iter().zip(b).map(|(a, b)| a / b).sum();
    let min_cb = c.iter().zip(b).map(|(c, b)| c / b).fold(f64::INFINITY, f64::min);
    let lhs_c: f64 = a.iter().zip(c).map(|(a, c)| a / c).sum();
    Ok((lhs_b <= min_cb, lhs_c < 1.0))
}

/// Whether `sum_i f_i(x) <= liminf sum_i f_i` holds on the whole orthant for a
/// local node (normalized flows).
fn local_hypothesis(field: &FlowField) -> std::result::Result<(), String> {
    let families = field.families();
    if families
        .iter()
        .all(|f| matches!(f, FlowFamily::NodeProportional { .. }))
    {
        // sum_i f_i = S / (S + kappa) < 1 = liminf.
        return Ok(());
    }
    if families.len() == 1 && matches!(families[0], FlowFamily::SaturatingExp { .. }) {
        return Ok(());
    }
    if families
        .iter()
        .all(|f| matches!(f, FlowFamily::SaturatingExp { .. }))
    {
        return Err(format!(
            "independent saturating links reach a normalized total of {} > liminf 1",
            families.len()
        ));
    }
    Err("total outflow bound not established for these flow families".into())
}

/// Necessary condition for a local network with constant inflows.
pub fn check_local_necessity(network: &FlowNetwork, lambda: &[f64]) -> Result<CertificateReport> {
    if !network.is_local() {
        return Err(Error::NotLocal(
            "links must share a single head node and the routing matrix must be zero".into(),
        ));
    }
    let n = network.link_count();
    if lambda.len() != n {
        return Err(Error::DimensionMismatch {
            what: "constant inflow",
            expected: n,
            actual: lambda.len(),
        });
    }
    if lambda.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Domain("inflow must be >= 0".into()));
    }
    let field = network.field();
    let caps = field.finite_capacities();
    let lhs = caps.as_ref().map_or(f64::NAN, |c| {
        lambda.iter().zip(c).map(|(l, c)| l / c).sum::<f64>()
    });
    let rhs = liminf_normalized_flow(field, LiminfMode::Smooth);
    let mut notes = Vec::new();
    let verdict = if caps.is_none() {
        notes.push("unbounded outflow: the local network cannot be overloaded".into());
        Verdict::NotDetermined
    } else if let Err(reason) = local_hypothesis(field) {
        notes.push(format!("necessity hypothesis fails: {reason}"));
        Verdict::Uncertifiable
    } else {
        match rhs.value.finite() {
            Some(r) if lhs > r => Verdict::NecessarilyUnstable,
            _ => Verdict::NotDetermined,
        }
    };
    Ok(CertificateReport {
        condition: Condition::LocalNecessity,
        lhs,
        lhs_method: SupMethod::Analytic,
        margin: rhs.value.finite().map(|r| r - lhs).filter(|m| m.is_finite()),
        rhs: rhs.value,
        rhs_provenance: Some(rhs.provenance),
        verdict,
        notes,
    })
}

/// Weights `w` of the Lyapunov function `V(x) = w^T (I - R^T)^{-1} x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovWeights(Vec<f64>);

impl LyapunovWeights {
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    /// `w = 1 / c`; fails for unbounded fields.
    pub fn capacity(field: &FlowField) -> Result<Self> {
        field
            .finite_capacities()
            .map(|c| Self(c.iter().map(|c| 1.0 / c).collect()))
            .ok_or_else(|| Error::Domain("capacity weights need a bounded flow field".into()))
    }

    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain("Lyapunov weights must be > 0".into()));
        }
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Row vector `(I - R^T)^{-T} w`, so that `V(x) = row . x`.
    pub fn row(&self, leontief: &Leontief) -> Vec<f64> {
        leontief.weighted_row(&self.0)
    }
}

pub fn lyapunov_value(weights: &LyapunovWeights, leontief: &Leontief, x: &[f64]) -> Result<f64> {
    check_state(x, leontief.dim())?;
    if weights.0.len() != x.len() {
        return Err(Error::DimensionMismatch {
            what: "Lyapunov weights",
            expected: x.len(),
            actual: weights.0.len(),
        });
    }
    let y = leontief.solve(x)?;
    Ok(weights.0.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>().max(0.0))
}

/// `dV/dt = sum_i w_i a_i - sum_i w_i f_i(x)` along the smooth dynamics.
pub fn lyapunov_derivative(
    weights: &LyapunovWeights,
    leontief: &Leontief,
    field: &FlowField,
    lambda_now: &[f64],
    x: &[f64],
) -> Result<f64> {
    let a = leontief.net_inflow(lambda_now)?;
    let f = field.eval(x)?;
    Ok(weights
        .0
        .iter()
        .zip(a.iter().zip(&f))
        .map(|(w, (a, f))| w * (a - f))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inflow::InflowSignal;
    use crate::network::{FlowGraph, RoutingMatrix};
    use std::f64::consts::PI;

    fn example1() -> FlowNetwork {
        let g = FlowGraph::new(2, &[(0, 1), (1, 0)]).unwrap();
        let r = RoutingMatrix::from_rows(&[vec![0.0, 0.9], vec![1.0, 0.0]]).unwrap();
        let f = FlowField::new(
            &g,
            vec![
                FlowFamily::SaturatingExp { capacity: 1.0 },
                FlowFamily::SaturatingExp { capacity: 100.0 },
            ],
        )
        .unwrap();
        FlowNetwork::new(g, r, f).unwrap()
    }

    pub(crate) fn two_stage() -> FlowNetwork {
        let g = FlowGraph::new(3, &[(0, 1), (0, 1), (1, 2), (1, 2)]).unwrap();
        let mut r = RoutingMatrix::zeros(4);
        r.set(0, 2, 0.5);
        r.set(0, 3, 0.5);
        r.set(1, 3, 1.0);
        let f = FlowField::new(&g, vec![FlowFamily::NodeProportional { kappa: 1.0 }; 4]).unwrap();
        FlowNetwork::new(g, r, f).unwrap()
    }

    fn sinusoids(amplitude: f64, phase: f64) -> InflowVector {
        let s = |phase| InflowSignal::Sinusoid {
            amplitude,
            frequency: 1.0,
            phase,
        };
        InflowVector::new(vec![s(0.0), s(phase), InflowSignal::zero(), InflowSignal::zero()])
            .unwrap()
    }

    fn local(n: usize, family: FlowFamily) -> FlowNetwork {
        let links: Vec<(usize, usize)> = (0..n).map(|i| (i + 1, 0)).collect();
        let g = FlowGraph::new(n + 1, &links).unwrap();
        let f = FlowField::new(&g, vec![family; n]).unwrap();
        FlowNetwork::new(g, RoutingMatrix::zeros(n), f).unwrap()
    }

    #[test]
    fn zero_inflow_is_certified() {
        let net = example1();
        let r = check_thm1(&net, &InflowVector::zero(2)).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.is_certified());
        assert!(check_thm2_normalized(&net, &InflowVector::zero(2))
            .unwrap()
            .is_certified());
    }

    #[test]
    fn example1_conditions() {
        let net = example1();
        // Smooth condition: 19 l1 + 20 l2 < 1.
        let r = check_thm1(&net, &InflowVector::constant(&[0.02, 0.03]).unwrap()).unwrap();
        assert!((r.lhs - (19.0 * 0.02 + 20.0 * 0.03)).abs() < 1e-12);
        assert_eq!(r.rhs, Liminf::Finite { value: 1.0 });
        assert!(r.is_certified());
        let r = check_thm1(&net, &InflowVector::constant(&[0.08, 0.0]).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::NotCertified);
        let r2 = check_thm2_normalized(&net, &InflowVector::constant(&[0.08, 0.0]).unwrap())
            .unwrap();
        assert!((r2.lhs - (0.8 + 0.72 / 100.0)).abs() < 1e-12);
        assert!(r2.is_certified());
    }

    #[test]
    fn boundary_is_not_certified() {
        let net = example1();
        // lhs = 19 * (1/19) = 1 = rhs.
        let r = check_thm1(&net, &InflowVector::constant(&[1.0 / 19.0, 0.0]).unwrap()).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12);
        let single = local(1, FlowFamily::SaturatingExp { capacity: 1.0 });
        let exact = check_thm1(&single, &InflowVector::constant(&[1.0]).unwrap()).unwrap();
        assert_eq!(exact.lhs, 1.0);
        assert_eq!(exact.margin, Some(0.0));
        assert_eq!(exact.verdict, Verdict::NotCertified);
    }

    #[test]
    fn two_stage_lhs_is_twice_the_inflow_sum() {
        let net = two_stage();
        let r = check_thm1(&net, &sinusoids(0.1, 0.0)).unwrap();
        assert!((r.lhs - 8.0 * 0.1).abs() < 1e-12);
        let r = check_thm1(&net, &sinusoids(0.1, PI)).unwrap();
        assert!((r.lhs - 4.0 * 0.1).abs() < 1e-12);
        assert_eq!(r.rhs, Liminf::Finite { value: 1.0 });
    }

    #[test]
    fn thm1_and_thm2_agree_for_unit_capacities() {
        let net = two_stage();
        for a in [0.05, 0.1, 0.124, 0.126, 0.2] {
            let inflow = sinusoids(a, 0.0);
            let r1 = check_thm1(&net, &inflow).unwrap();
            let r2 = check_thm2_normalized(&net, &inflow).unwrap();
            assert_eq!(r1.verdict, r2.verdict);
            assert!((r1.lhs - r2.lhs).abs() < 1e-12);
        }
    }

    #[test]
    fn unbounded_field_is_uncertifiable_under_normalization() {
        let net = local(2, FlowFamily::Linear { rate: 1.0 });
        let r = check_thm2_normalized(&net, &InflowVector::constant(&[1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Uncertifiable);
        let r1 = check_thm1(&net, &InflowVector::constant(&[100.0, 1.0]).unwrap()).unwrap();
        assert_eq!(r1.rhs, Liminf::Infinite);
        assert!(r1.is_certified());
        assert!(r1.margin.is_none());
    }

    #[test]
    fn prop1_examples() {
        assert_eq!(
            check_prop1_optimality(&[0.0; 3], &[1.0, 2.0, 3.0], &[2.0, 1.0, 5.0]).unwrap(),
            (true, true)
        );
        let c = [1.0, 2.0];
        assert_eq!(check_prop1_optimality(&c, &c, &c).unwrap(), (false, false));
        assert!(check_prop1_optimality(&[0.1], &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn local_necessity_examples() {
        let net = local(3, FlowFamily::NodeProportional { kappa: 1.0 });
        let r = check_local_necessity(&net, &[0.5, 0.4, 0.3]).unwrap();
        assert!((r.lhs - 1.2).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::NecessarilyUnstable);
        let r = check_local_necessity(&net, &[0.0; 3]).unwrap();
        assert_eq!(r.verdict, Verdict::NotDetermined);
        let r = check_local_necessity(&net, &[0.3; 3]).unwrap();
        assert_eq!(r.verdict, Verdict::NotDetermined);
        let inflow = InflowVector::constant(&[0.3; 3]).unwrap();
        assert!(check_thm2_normalized(&net, &inflow).unwrap().is_certified());
    }

    #[test]
    fn local_necessity_refuses_independent_saturating_links() {
        let net = local(2, FlowFamily::SaturatingExp { capacity: 1.0 });
        let r = check_local_necessity(&net, &[0.8, 0.8]).unwrap();
        assert_eq!(r.verdict, Verdict::Uncertifiable);
        let single = local(1, FlowFamily::SaturatingExp { capacity: 2.0 });
        let r = check_local_necessity(&single, &[2.5]).unwrap();
        assert_eq!(r.verdict, Verdict::NecessarilyUnstable);
    }

    #[test]
    fn local_necessity_requires_local_network() {
        assert!(matches!(
            check_local_necessity(&example1(), &[0.1, 0.1]),
            Err(Error::NotLocal(_))
        ));
    }

    #[test]
    fn junction_smooth_refused_inclusion_decides() {
        let fam = |phase| FlowFamily::PhaseProportional { phase, kappa: 0.1 };
        let g = FlowGraph::new(5, &[(1, 0), (2, 0), (3, 0), (4, 0)]).unwrap();
        let f = FlowField::new(&g, vec![fam(0), fam(1), fam(0), fam(1)]).unwrap();
        let net = FlowNetwork::new(g, RoutingMatrix::zeros(4), f).unwrap();
        let inflow = InflowVector::constant(&[1.9, 0.0, 0.0, 0.0]).unwrap();
        let smooth = check_thm1(&net, &inflow).unwrap();
        assert!((smooth.lhs - 1.9).abs() < 1e-15);
        assert_eq!(smooth.rhs, Liminf::Finite { value: 2.0 });
        assert_eq!(smooth.verdict, Verdict::Uncertifiable);
        let inc = check_inclusion_theorem(&net, &inflow).unwrap();
        assert_eq!(inc.rhs, Liminf::Finite { value: 1.0 });
        assert_eq!(inc.verdict, Verdict::NotCertified);
        let low = InflowVector::constant(&[0.5, 0.0, 0.0, 0.0]).unwrap();
        assert!(check_inclusion_theorem(&net, &low).unwrap().is_certified());
        assert!(check_inclusion_theorem(&net, &InflowVector::zero(4))
            .unwrap()
            .is_certified());
    }

    #[test]
    fn lyapunov_examples() {
        let net = example1();
        let w = LyapunovWeights::uniform(2);
        assert_eq!(lyapunov_value(&w, net.leontief(), &[0.0, 0.0]).unwrap(), 0.0);
        assert!((lyapunov_value(&w, net.leontief(), &[1.0, 0.0]).unwrap() - 19.0).abs() < 1e-12);
        assert!(lyapunov_value(&w, net.leontief(), &[-1.0, 0.0]).is_err());
        let zero = local(3, FlowFamily::Linear { rate: 1.0 });
        let v = lyapunov_value(&LyapunovWeights::uniform(3), zero.leontief(), &[1.0, 2.0, 3.5])
            .unwrap();
        assert!((v - 6.5).abs() < 1e-15);
    }

    #[test]
    fn lyapunov_derivative_matches_finite_difference() {
        let net = example1();
        let lambda = [0.01, 0.0];
        let x = [1.0, 1.0];
        for w in [
            LyapunovWeights::uniform(2),
            LyapunovWeights::capacity(net.field()).unwrap(),
        ] {
            let d = lyapunov_derivative(&w, net.leontief(), net.field(), &lambda, &x).unwrap();
            // Vector field lambda - (I - R^T) f(x), central difference along it.
            let f = net.field().eval(&x).unwrap();
            let mut field = vec![0.0; 2];
            net.routing().leave_operator_into(&f, &mut field);
            let rate: Vec<f64> = lambda.iter().zip(&field).map(|(l, g)| l - g).collect();
            let h = 1e-6;
            let plus: Vec<f64> = x.iter().zip(&rate).map(|(x, r)| x + h * r).collect();
            let minus: Vec<f64> = x.iter().zip(&rate).map(|(x, r)| x - h * r).collect();
            let fd = (lyapunov_value(&w, net.leontief(), &plus).unwrap()
                - lyapunov_value(&w, net.leontief(), &minus).unwrap())
                / (2.0 * h);
            assert!((fd - d).abs() <= 1e-4 * d.abs().max(1e-12), "{fd} vs {d}");
        }
        let w = LyapunovWeights::uniform(2);
        assert_eq!(
            lyapunov_derivative(&w, net.leontief(), net.field(), &[0.0, 0.0], &[0.0, 0.0])
                .unwrap(),
            0.0
        );
    }
}
