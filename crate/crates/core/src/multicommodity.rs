//! Several commodities sharing the aggregate outflow of each link, split in
//! proportion to their share of the link's mass.

use serde::{Deserialize, Serialize};

use crate::certificates::{
    lyapunov_value, weighted_net_inflow_sup, CertificateReport, Condition, LyapunovWeights,
    Verdict,
};
use crate::error::{Error, Result};
use crate::flow::{check_state, liminf_normalized_flow, FlowField, LiminfMode};
use crate::inflow::{InflowVector, SupEstimate, SupMethod};
use crate::network::{validate_network, FlowGraph, Leontief, RoutingMatrix};
use crate::simulator::{
    classify_series, integrate, lyapunov_series, monitor_iiss_bound, monitor_prop3_bound,
    Dynamics, Mode, RunVerdict, SimConfig, Stage, Trajectory,
};

#[derive(Clone, Debug)]
pub struct CommoditySpec {
    pub name: String,
    pub routing: RoutingMatrix,
    pub inflow: InflowVector,
}

#[derive(Clone, Debug)]
struct Commodity {
    spec: CommoditySpec,
    leontief: Leontief,
}

/// A graph and flow field shared by commodities with individual routing.
#[derive(Clone, Debug)]
pub struct MultiCommodityNetwork {
    graph: FlowGraph,
    field: FlowField,
    commodities: Vec<Commodity>,
}

impl MultiCommodityNetwork {
    pub fn new(graph: FlowGraph, field: FlowField, specs: Vec<CommoditySpec>) -> Result<Self> {
        let n = graph.link_count();
        if field.len() != n {
            return Err(Error::DimensionMismatch {
                what: "flow field vs link count",
                expected: n,
                actual: field.len(),
            });
        }
        if specs.is_empty() {
            return Err(Error::Domain("at least one commodity is required".into()));
        }
        let mut commodities = Vec::with_capacity(specs.len());
        for spec in specs {
            let report = validate_network(&graph, &spec.routing)?;
            if !report.is_valid() {
                return Err(Error::InvalidNetwork(report));
            }
            if spec.inflow.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "commodity inflow",
                    expected: n,
                    actual: spec.inflow.len(),
                });
            }
            let leontief = Leontief::new(&spec.routing)?;
            commodities.push(Commodity { spec, leontief });
        }
        Ok(Self {
            graph,
            field,
            commodities,
        })
    }

    pub fn graph(&self) -> &FlowGraph {
        &self.graph
    }

    pub fn field(&self) -> &FlowField {
        &self.field
    }

    pub fn link_count(&self) -> usize {
        self.graph.link_count()
    }

    pub fn commodity_count(&self) -> usize {
        self.commodities.len()
    }

    pub fn spec(&self, k: usize) -> &CommoditySpec {
        &self.commodities[k].spec
    }

    pub fn leontief(&self, k: usize) -> &Leontief {
        &self.commodities[k].leontief
    }

    /// Rates of all commodities at a state, plus the aggregate rate under
    /// the share-weighted routing `sum_k diag(share^k) R^k`.
    pub fn rates(&self, t: f64, x: &McState) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        self.check(x)?;
        let n = self.link_count();
        let dynamics = self.dynamics();
        let flat: Vec<f64> = x.per_commodity.concat();
        let mut stage = Stage::new(flat.len());
        dynamics.rates(t, &flat, &mut stage)?;
        let per: Vec<Vec<f64>> = stage.rate.chunks(n).map(<[f64]>::to_vec).collect();

        let agg = x.aggregate();
        let f = self.field.eval(&agg)?;
        let mut mixed = RoutingMatrix::zeros(n);
        let mut lambda = vec![0.0; n];
        for (k, c) in self.commodities.iter().enumerate() {
            for i in 0..n {
                let share = if agg[i] > 0.0 {
                    x.per_commodity[k][i] / agg[i]
                } else {
                    0.0
                };
                for j in 0..n {
                    mixed.set(i, j, mixed.get(i, j) + share * c.spec.routing.get(i, j));
                }
            }
            for (l, v) in lambda.iter_mut().zip(c.spec.inflow.eval(t)) {
                *l += v;
            }
        }
        let mut moved = vec![0.0; n];
        mixed.leave_operator_into(&f, &mut moved);
        let aggregate = lambda.iter().zip(&moved).map(|(l, m)| l - m).collect();
        Ok((per, aggregate))
    }

    fn check(&self, x: &McState) -> Result<()> {
        if x.per_commodity.len() != self.commodities.len() {
            return Err(Error::DimensionMismatch {
                what: "commodities in state",
                expected: self.commodities.len(),
                actual: x.per_commodity.len(),
            });
        }
        for xk in &x.per_commodity {
            check_state(xk, self.link_count())?;
        }
        Ok(())
    }

    fn dynamics(&self) -> McDynamics<'_> {
        McDynamics { network: self }
    }
}

/// Per-commodity link masses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McState {
    per_commodity: Vec<Vec<f64>>,
}

impl McState {
    pub fn new(per_commodity: Vec<Vec<f64>>) -> Result<Self> {
        let n = per_commodity.first().map_or(0, Vec::len);
        for xk in &per_commodity {
            check_state(xk, n)?;
        }
        Ok(Self { per_commodity })
    }

    pub fn zeros(commodities: usize, links: usize) -> Self {
        Self {
            per_commodity: vec![vec![0.0; links]; commodities],
        }
    }

    pub fn commodity(&self, k: usize) -> &[f64] {
        &self.per_commodity[k]
    }

    pub fn commodities(&self) -> &[Vec<f64>] {
        &self.per_commodity
    }

    /// `x_i = sum_k x^k_i`.
    pub fn aggregate(&self) -> Vec<f64> {
        let n = self.per_commodity.first().map_or(0, Vec::len);
        let mut out = vec![0.0; n];
        for xk in &self.per_commodity {
            for (o, v) in out.iter_mut().zip(xk) {
                *o += v;
            }
        }
        out
    }
}

struct McDynamics<'a> {
    network: &'a MultiCommodityNetwork,
}

impl Dynamics for McDynamics<'_> {
    fn dim(&self) -> usize {
        self.network.link_count() * self.network.commodities.len()
    }

    fn rates(&self, t: f64, x: &[f64], s: &mut Stage) -> Result<()> {
        let n = self.network.link_count();
        for (c, v) in s.clamped.iter_mut().zip(x) {
            *c = v.max(0.0);
        }
        let (agg, _) = s.tmp.split_at_mut(n);
        agg.fill(0.0);
        for block in s.clamped.chunks(n) {
            for (a, v) in agg.iter_mut().zip(block) {
                *a += v;
            }
        }
        self.network.field.eval_into(agg, &mut s.flow[..n]);
        for (k, c) in self.network.commodities.iter().enumerate() {
            let range = k * n..(k + 1) * n;
            c.spec.inflow.eval_into(t, &mut s.lambda[range.clone()]);
            for i in 0..n {
                s.z[k * n + i] = if agg[i] > 0.0 {
                    s.clamped[k * n + i] / agg[i] * s.flow[i]
                } else {
                    0.0
                };
            }
            c.spec
                .routing
                .leave_operator_into(&s.z[range.clone()], &mut s.rate[range.clone()]);
            for i in range {
                s.rate[i] = s.lambda[i] - s.rate[i];
            }
        }
        Ok(())
    }

    fn leave(&self, v: &[f64], out: &mut [f64]) {
        let n = self.network.link_count();
        for (k, c) in self.network.commodities.iter().enumerate() {
            let range = k * n..(k + 1) * n;
            c.spec
                .routing
                .leave_operator_into(&v[range.clone()], &mut out[range]);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McTrajectory {
    pub names: Vec<String>,
    pub commodities: Vec<Trajectory>,
    /// Capacity-weighted joint Lyapunov function at each sample.
    pub lyapunov: Vec<f64>,
    /// Verdict on the summed uniform-weight Lyapunov series.
    pub verdict: RunVerdict,
}

impl McTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.commodities[0].times
    }

    pub fn aggregate_states(&self) -> Vec<Vec<f64>> {
        let mut out = self.commodities[0].states.clone();
        for traj in &self.commodities[1..] {
            for (row, xk) in out.iter_mut().zip(&traj.states) {
                for (o, v) in row.iter_mut().zip(xk) {
                    *o += v;
                }
            }
        }
        out
    }
}

pub fn mc_simulate(
    network: &MultiCommodityNetwork,
    x0: &McState,
    cfg: &SimConfig,
) -> Result<McTrajectory> {
    cfg.validate()?;
    network.check(x0)?;
    if cfg.mode == Mode::Inclusion || network.field.is_inclusion_only() {
        return Err(Error::InvalidConfig(
            "multi-commodity dynamics are only defined in smooth mode".into(),
        ));
    }
    let capacity = LyapunovWeights::capacity(&network.field)
        .map_err(|_| Error::Domain("multi-commodity dynamics need a bounded flow field".into()))?;
    let n = network.link_count();
    let flat: Vec<f64> = x0.per_commodity.concat();
    let raw = integrate(&network.dynamics(), &flat, cfg, false)?;
    let split = |rows: &[Vec<f64>], k: usize| -> Vec<Vec<f64>> {
        rows.iter().map(|r| r[k * n..(k + 1) * n].to_vec()).collect()
    };
    let mut commodities = Vec::with_capacity(network.commodities.len());
    let samples = raw.times.len();
    let mut total_uniform = vec![0.0; samples];
    let mut lyapunov = vec![0.0; samples];
    for (k, c) in network.commodities.iter().enumerate() {
        let states = split(&raw.states, k);
        let uniform = LyapunovWeights::uniform(n);
        let v_uniform = lyapunov_series(&states, &uniform.row(&c.leontief));
        let v_capacity = lyapunov_series(&states, &capacity.row(&c.leontief));
        for s in 0..samples {
            total_uniform[s] += v_uniform[s];
            lyapunov[s] += v_capacity[s];
        }
        let mut traj = Trajectory {
            times: raw.times.clone(),
            states,
            outflows: split(&raw.outflows, k),
            cumulative_inflow: split(&raw.cumulative_inflow, k),
            cumulative_outflow: split(&raw.cumulative_outflow, k),
            verdict: classify_series(&v_uniform, &cfg.divergence),
            lyapunov_uniform: v_uniform,
            lyapunov_capacity: Some(v_capacity),
            monitors: Vec::new(),
            stats: raw.stats,
        };
        if cfg.monitors.iiss {
            traj.monitors
                .push(monitor_iiss_bound(&traj, &c.leontief, &c.spec.inflow, &uniform)?);
        }
        if cfg.monitors.growth_bound {
            traj.monitors
                .push(monitor_prop3_bound(&traj, &c.leontief, &c.spec.inflow)?);
        }
        commodities.push(traj);
    }
    Ok(McTrajectory {
        names: network.commodities.iter().map(|c| c.spec.name.clone()).collect(),
        commodities,
        lyapunov,
        verdict: classify_series(&total_uniform, &cfg.divergence),
    })
}

/// `sup_t sum_i sum_k a^k_i(t) / c_i` against the liminf of the normalized
/// total outflow.
pub fn mc_certify(network: &MultiCommodityNetwork) -> Result<CertificateReport> {
    let rhs = liminf_normalized_flow(&network.field, LiminfMode::Smooth);
    let Some(caps) = network.field.finite_capacities() else {
        return Ok(CertificateReport {
            condition: Condition::MultiCommodityNormalized,
            lhs: f64::NAN,
            lhs_method: SupMethod::Analytic,
            rhs: rhs.value,
            rhs_provenance: Some(rhs.provenance),
            margin: None,
            verdict: Verdict::Uncertifiable,
            notes: vec!["unbounded flow field: the normalized condition does not apply".into()],
        });
    };
    let weights: Vec<f64> = caps.iter().map(|c| 1.0 / c).collect();
    let parts: Vec<(&Leontief, &InflowVector)> = network
        .commodities
        .iter()
        .map(|c| (&c.leontief, &c.spec.inflow))
        .collect();
    let lhs: SupEstimate = weighted_net_inflow_sup(&parts, &weights)?;
    let mut report = CertificateReport {
        condition: Condition::MultiCommodityNormalized,
        lhs: lhs.value,
        lhs_method: lhs.method.clone(),
        rhs: rhs.value.clone(),
        rhs_provenance: Some(rhs.provenance),
        margin: rhs.value.finite().map(|r| r - lhs.value),
        verdict: if !rhs.value.is_known() {
            Verdict::Uncertifiable
        } else if rhs.value.exceeds(lhs.value) {
            Verdict::CertifiedIss
        } else {
            Verdict::NotCertified
        },
        notes: vec![
            "rhs is the liminf of the capacity-normalized total outflow sum_i f_i / c_i".into(),
        ],
    };
    if let SupMethod::Sampled { samples, horizon } = lhs.method {
        report.notes.push(format!(
            "lhs is a sampled supremum ({samples} points over [0, {horizon}]) and may underestimate"
        ));
    }
    Ok(report)
}

/// `sum_k w^T (I - (R^k)^T)^{-1} x^k`.
pub fn mc_lyapunov(
    network: &MultiCommodityNetwork,
    weights: &LyapunovWeights,
    x: &McState,
) -> Result<f64> {
    network.check(x)?;
    network
        .commodities
        .iter()
        .zip(&x.per_commodity)
        .map(|(c, xk)| lyapunov_value(weights, &c.leontief, xk))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowFamily;
    use crate::model::FlowNetwork;
    use crate::simulator::simulate;

    fn graph() -> FlowGraph {
        FlowGraph::new(3, &[(0, 1), (1, 2), (1, 0)]).unwrap()
    }

    fn routing(p: f64) -> RoutingMatrix {
        let mut r = RoutingMatrix::zeros(3);
        r.set(0, 1, p);
        r.set(0, 2, 1.0 - p);
        r.set(2, 0, 0.5);
        r
    }

    fn field() -> FlowField {
        FlowField::new(&graph(), vec![FlowFamily::SaturatingExp { capacity: 2.0 }; 3]).unwrap()
    }

    fn spec(name: &str, p: f64, l: f64) -> CommoditySpec {
        CommoditySpec {
            name: name.into(),
            routing: routing(p),
            inflow: InflowVector::constant(&[l, 0.0, 0.0]).unwrap(),
        }
    }

    #[test]
    fn single_commodity_matches_simulate() {
        let s = spec("a", 0.6, 0.3);
        let mc = MultiCommodityNetwork::new(graph(), field(), vec![s.clone()]).unwrap();
        let single = FlowNetwork::new(graph(), s.routing.clone(), field()).unwrap();
        let cfg = SimConfig::new(0.01, 20.0).unwrap();
        let x0 = [0.5, 1.0, 0.0];
        let a = mc_simulate(&mc, &McState::new(vec![x0.to_vec()]).unwrap(), &cfg).unwrap();
        let b = simulate(&single, &s.inflow, &x0, &cfg).unwrap();
        for (xa, xb) in a.commodities[0].states.iter().zip(&b.states) {
            for (u, v) in xa.iter().zip(xb) {
                assert!((u - v).abs() < 1e-12);
            }
        }
        let w = LyapunovWeights::capacity(&field()).unwrap();
        let x = McState::new(vec![vec![0.2, 0.3, 0.4]]).unwrap();
        let v1 = mc_lyapunov(&mc, &w, &x).unwrap();
        let v2 = lyapunov_value(&w, single.leontief(), x.commodity(0)).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn aggregate_rate_matches_mixed_routing() {
        let mc = MultiCommodityNetwork::new(
            graph(),
            field(),
            vec![spec("a", 0.2, 0.3), spec("b", 0.9, 0.1)],
        )
        .unwrap();
        let x = McState::new(vec![vec![0.5, 0.0, 2.0], vec![0.25, 0.0, 0.1]]).unwrap();
        let (per, agg) = mc.rates(0.0, &x).unwrap();
        for i in 0..3 {
            assert!((per[0][i] + per[1][i] - agg[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_inflow_drains() {
        let mut a = spec("a", 0.2, 0.0);
        a.inflow = InflowVector::zero(3);
        let mut b = spec("b", 0.9, 0.0);
        b.inflow = InflowVector::zero(3);
        let mc = MultiCommodityNetwork::new(graph(), field(), vec![a, b]).unwrap();
        let x0 = McState::new(vec![vec![1.0; 3], vec![2.0; 3]]).unwrap();
        let cfg = SimConfig::new(0.01, 60.0).unwrap().with_record_every(10);
        let traj = mc_simulate(&mc, &x0, &cfg).unwrap();
        let v = &traj.lyapunov;
        assert!(v.last().unwrap() < &(1e-3 * v[0]));
        assert_eq!(traj.verdict, RunVerdict::Bounded);
        let c = mc_certify(&mc).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.is_certified());
    }

    #[test]
    fn certificate_is_additive() {
        let a = spec("a", 0.2, 0.3);
        let b = spec("b", 0.9, 0.1);
        let both = MultiCommodityNetwork::new(graph(), field(), vec![a.clone(), b.clone()])
            .unwrap();
        let la = mc_certify(&MultiCommodityNetwork::new(graph(), field(), vec![a]).unwrap())
            .unwrap()
            .lhs;
        let lb = mc_certify(&MultiCommodityNetwork::new(graph(), field(), vec![b]).unwrap())
            .unwrap()
            .lhs;
        assert!((mc_certify(&both).unwrap().lhs - la - lb).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut bad = spec("a", 0.5, 0.1);
        bad.routing.set(0, 1, 0.9);
        assert!(MultiCommodityNetwork::new(graph(), field(), vec![bad]).is_err());
        assert!(MultiCommodityNetwork::new(graph(), field(), vec![]).is_err());
        assert!(McState::new(vec![vec![0.0, -1.0]]).is_err());
        let mc = MultiCommodityNetwork::new(graph(), field(), vec![spec("a", 0.5, 0.1)]).unwrap();
        let cfg = SimConfig::new(0.1, 1.0).unwrap().with_mode(Mode::Inclusion);
        assert!(mc_simulate(&mc, &McState::zeros(1, 3), &cfg).is_err());
        assert!(mc_lyapunov(&mc, &LyapunovWeights::uniform(3), &McState::zeros(2, 3)).is_err());
    }
}
