//! Directed multigraph, routing matrix and the Leontief operator `(I - R^T)^{-1}`.
//!
//! Links are the state-carrying objects: every link has a tail and a head
//! node, and the routing matrix is indexed by links (row = source link,
//! column = destination link). Parallel links between the same pair of nodes
//! are distinct indices.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Entry tolerance used by the range and row-sum checks.
pub const ROUTING_TOLERANCE: f64 = 1e-12;

/// Leontief construction is refused once the spectral radius estimate of `R`
/// exceeds `1 - SPECTRAL_MARGIN`.
pub const SPECTRAL_MARGIN: f64 = 1e-9;

/// Iteration cap of the spectral radius power iteration.
pub const SPECTRAL_MAX_ITER: usize = 10_000;

/// Width of the Collatz-Wielandt bracket at which the power iteration stops.
pub const SPECTRAL_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LinkId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Link {
    pub tail: NodeId,
    pub head: NodeId,
}

/// Directed multigraph without self loops.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowGraph {
    node_count: usize,
    links: Vec<Link>,
    incoming: Vec<Vec<LinkId>>,
}

impl FlowGraph {
    /// Builds a graph from `(tail, head)` node index pairs.
    pub fn new(node_count: usize, links: &[(usize, usize)]) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::InvalidGraph("graph has no links".into()));
        }
        let mut incoming = vec![Vec::new(); node_count];
        let mut out = Vec::with_capacity(links.len());
        for (index, &(tail, head)) in links.iter().enumerate() {
            if tail >= node_count || head >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "link {index} references node outside 0..{node_count}"
                )));
            }
            if tail == head {
                return Err(Error::InvalidGraph(format!(
                    "link {index} is a self loop at node {tail}"
                )));
            }
            incoming[head].push(LinkId(index));
            out.push(Link {
                tail: NodeId(tail),
                head: NodeId(head),
            });
        }
        Ok(Self {
            node_count,
            links: out,
            incoming,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> Link {
        self.links[id.0]
    }

    /// Links whose head is `node`.
    pub fn incoming(&self, node: NodeId) -> &[LinkId] {
        &self.incoming[node.0]
    }
}

/// Dense routing matrix, row-indexed by source link.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutingMatrix {
    n: usize,
    data: Vec<f64>,
}

impl RoutingMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "routing matrix row",
                    expected: n,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.n + to]
    }

    pub fn set(&mut self, from: usize, to: usize, value: f64) {
        self.data[from * self.n + to] = value;
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.data[from * self.n..(from + 1) * self.n]
    }

    pub fn row_sum(&self, from: usize) -> f64 {
        self.row(from).iter().sum()
    }

    /// Fraction of link `from`'s outflow that leaves the network.
    pub fn exit_fraction(&self, from: usize) -> f64 {
        (1.0 - self.row_sum(from)).max(0.0)
    }

    /// `out = R^T v`, i.e. `out[j] = sum_i R[i][j] v[i]`.
    pub fn transpose_mul_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &r) in out.iter_mut().zip(self.row(i)) {
                *o += r * vi;
            }
        }
    }

    pub fn transpose_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.transpose_mul_into(v, &mut out);
        out
    }

    /// `out = v - R^T v`.
    pub fn leave_operator_into(&self, v: &[f64], out: &mut [f64]) {
        self.transpose_mul_into(v, out);
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = vi - *o;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&r| r == 0.0)
    }

    /// Successors of link `i` over positive entries.
    fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i)
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > 0.0)
            .map(|(j, _)| j)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Range { from: usize, to: usize, value: f64 },
    RowSum { link: usize, sum: f64 },
    Topology { from: usize, to: usize },
    Disconnected { link: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Range { from, to, value } => {
                write!(f, "R[{from}][{to}] = {value} outside [0, 1]")
            }
            Violation::RowSum { link, sum } => write!(f, "row {link} sums to {sum} > 1"),
            Violation::Topology { from, to } => write!(
                f,
                "R[{from}][{to}] > 0 but head of link {from} is not the tail of link {to}"
            ),
            Violation::Disconnected { link } => write!(
                f,
                "link {link} has no routing path to a link where mass leaves the network"
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks range, row sums, topology consistency and outflow connectivity.
///
/// A dimension mismatch is a structural error; every other problem is listed
/// in the returned report.
pub fn validate_network(graph: &FlowGraph, routing: &RoutingMatrix) -> Result<ValidationReport> {
    let n = graph.link_count();
    if routing.dim() != n {
        return Err(Error::DimensionMismatch {
            what: "routing matrix vs link count",
            expected: n,
            actual: routing.dim(),
        });
    }
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let r = routing.get(i, j);
            if !r.is_finite() || r < -ROUTING_TOLERANCE || r > 1.0 + ROUTING_TOLERANCE {
                violations.push(Violation::Range {
                    from: i,
                    to: j,
                    value: r,
                });
            }
            if r > 0.0 && graph.links[i].head != graph.links[j].tail {
                violations.push(Violation::Topology { from: i, to: j });
            }
        }
        let sum = routing.row_sum(i);
        if sum > 1.0 + ROUTING_TOLERANCE {
            violations.push(Violation::RowSum { link: i, sum });
        }
    }

    // Reverse reachability from the links that lose mass.
    let mut predecessors = vec![Vec::new(); n];
    for i in 0..n {
        for j in routing.successors(i) {
            predecessors[j].push(i);
        }
    }
    let mut reaches_exit: Vec<bool> = (0..n)
        .map(|i| routing.row_sum(i) < 1.0 - ROUTING_TOLERANCE)
        .collect();
    let mut stack: Vec<usize> = (0..n).filter(|&i| reaches_exit[i]).collect();
    while let Some(j) = stack.pop() {
        for &i in &predecessors[j] {
            if !reaches_exit[i] {
                reaches_exit[i] = true;
                stack.push(i);
            }
        }
    }
    violations.extend(
        reaches_exit
            .iter()
            .enumerate()
            .filter(|(_, &ok)| !ok)
            .map(|(link, _)| Violation::Disconnected { link }),
    );
    Ok(ValidationReport { violations })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralEstimate {
    pub radius: f64,
    /// Collatz-Wielandt bracket of the dominant irreducible block.
    pub lower: f64,
    pub upper: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Spectral radius of a nonnegative matrix.
///
/// The radius of a nonnegative matrix is the largest radius over its
/// irreducible diagonal blocks, so the positive-entry graph is split into
/// strongly connected components first. Each nontrivial component `B` is
/// handled by power iteration on `I + B` (primitive, so the iteration
/// converges), stopped when the Collatz-Wielandt bracket
/// `min (Mv)_i / v_i <= rho(M) <= max (Mv)_i / v_i` is narrower than
/// [`SPECTRAL_TOLERANCE`] or after [`SPECTRAL_MAX_ITER`] iterations.
pub fn spectral_radius(routing: &RoutingMatrix) -> SpectralEstimate {
    let n = routing.dim();
    let mut best = SpectralEstimate {
        radius: 0.0,
        lower: 0.0,
        upper: 0.0,
        converged: true,
        iterations: 0,
    };
    for component in strongly_connected_components(routing) {
        let estimate = if component.len() == 1 {
            let r = routing.get(component[0], component[0]).abs();
            SpectralEstimate {
                radius: r,
                lower: r,
                upper: r,
                converged: true,
                iterations: 0,
            }
        } else {
            block_power_iteration(routing, &component)
        };
        best.iterations += estimate.iterations;
        if estimate.radius > best.radius {
            best.radius = estimate.radius;
            best.lower = estimate.lower;
            best.upper = estimate.upper;
        }
        best.converged &= estimate.converged;
    }
    debug_assert!(n == 0 || best.radius >= 0.0);
    best
}

fn block_power_iteration(routing: &RoutingMatrix, component: &[usize]) -> SpectralEstimate {
    let m = component.len();
    let mut v = vec![1.0 / m as f64; m];
    let mut next = vec![0.0; m];
    let (mut lower, mut upper) = (0.0, f64::INFINITY);
    let mut iterations = 0;
    while iterations < SPECTRAL_MAX_ITER {
        iterations += 1;
        for (a, &i) in component.iter().enumerate() {
            let mut acc = v[a];
            for (b, &j) in component.iter().enumerate() {
                acc += routing.get(i, j).abs() * v[b];
            }
            next[a] = acc;
        }
        lower = f64::INFINITY;
        upper = 0.0;
        for a in 0..m {
            let ratio = next[a] / v[a];
            lower = lower.min(ratio);
            upper = upper.max(ratio);
        }
        let norm: f64 = next.iter().sum();
        for (vi, ni) in v.iter_mut().zip(&next) {
            *vi = ni / norm;
        }
        if upper - lower < SPECTRAL_TOLERANCE {
            break;
        }
    }
    SpectralEstimate {
        radius: (0.5 * (lower + upper) - 1.0).max(0.0),
        lower: (lower - 1.0).max(0.0),
        upper: upper - 1.0,
        converged: upper - lower < SPECTRAL_TOLERANCE,
        iterations,
    }
}

/// Tarjan's algorithm over the positive entries of `routing`.
fn strongly_connected_components(routing: &RoutingMatrix) -> Vec<Vec<usize>> {
    struct State<'a> {
        routing: &'a RoutingMatrix,
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }

    fn visit(s: &mut State<'_>, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        let successors: Vec<usize> = s.routing.successors(v).collect();
        for w in successors {
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut component = Vec::new();
            while let Some(w) = s.stack.pop() {
                s.on_stack[w] = false;
                component.push(w);
                if w == v {
                    break;
                }
            }
            component.sort_unstable();
            s.out.push(component);
        }
    }

    let n = routing.dim();
    let mut state = State {
        routing,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if state.index[v].is_none() {
            visit(&mut state, v);
        }
    }
    state.out
}

/// Factorized `(I - R^T)` together with its explicit inverse.
#[derive(Clone, Debug)]
pub struct Leontief {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    inverse: DMatrix<f64>,
    spectral: SpectralEstimate,
}

impl Leontief {
    /// Factorizes `(I - R^T)`. Refuses matrices whose spectral radius is not
    /// safely below one.
    pub fn new(routing: &RoutingMatrix) -> Result<Self> {
        let n = routing.dim();
        let spectral = spectral_radius(routing);
        if spectral.radius > 1.0 - SPECTRAL_MARGIN {
            return Err(Error::SingularLeontief {
                spectral_radius: spectral.radius,
            });
        }
        let system = DMatrix::from_fn(n, n, |i, j| {
            let identity = if i == j { 1.0 } else { 0.0 };
            identity - routing.get(j, i)
        });
        let lu = system.lu();
        let inverse = lu.try_inverse().ok_or(Error::SingularLeontief {
            spectral_radius: spectral.radius,
        })?;
        if inverse.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularLeontief {
                spectral_radius: spectral.radius,
            });
        }
        Ok(Self {
            lu,
            inverse,
            spectral,
        })
    }

    pub fn dim(&self) -> usize {
        self.inverse.nrows()
    }

    pub fn spectral(&self) -> SpectralEstimate {
        self.spectral
    }

    /// Entry `(i, j)` of `(I - R^T)^{-1}`.
    pub fn inverse_entry(&self, i: usize, j: usize) -> f64 {
        self.inverse[(i, j)]
    }

    /// Row-major copy of `(I - R^T)^{-1}`.
    pub fn inverse_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.inverse[(i, j)]).collect())
            .collect()
    }

    /// Solves `(I - R^T) y = v` through the LU factors.
    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v.len())?;
        let rhs = DVector::from_column_slice(v);
        let y = self.lu.solve(&rhs).ok_or(Error::SingularLeontief {
            spectral_radius: self.spectral.radius,
        })?;
        Ok(y.iter().copied().collect())
    }

    /// Cumulative net inflow `a = (I - R^T)^{-1} lambda`.
    pub fn net_inflow(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(lambda.len())?;
        if let Some((i, v)) = lambda.iter().enumerate().find(|(_, &v)| !(v >= 0.0)) {
            return Err(Error::Domain(format!("inflow entry {i} is {v}, must be >= 0")));
        }
        // Entrywise nonnegative solution; clamp rounding dust below zero.
        Ok(self
            .solve(lambda)?
            .into_iter()
            .map(|a| a.max(0.0))
            .collect())
    }

    /// `(I - R^T)^{-T} w`, the linear functional `x -> w^T (I - R^T)^{-1} x`.
    pub fn weighted_row(&self, weights: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|j| {
                weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w * self.inverse[(i, j)])
                    .sum()
            })
            .collect()
    }

    /// Dense product `(I - R^T)^{-1} v` using the explicit inverse.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| v.iter().enumerate().map(|(j, x)| self.inverse[(i, j)] * x).sum())
            .collect()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "vector vs Leontief operator",
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }
}

/// Convenience wrapper: `a = (I - R^T)^{-1} lambda`.
pub fn net_inflow_transform(leontief: &Leontief, lambda: &[f64]) -> Result<Vec<f64>> {
    leontief.net_inflow(lambda)
}
