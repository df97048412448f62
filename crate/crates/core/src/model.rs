use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::network::{validate_network, FlowGraph, Leontief, RoutingMatrix};

/// Validated static description of a dynamical flow network: graph, routing
/// matrix, outflow functions and the factorized Leontief operator.
#[derive(Clone, Debug)]
pub struct FlowNetwork {
    graph: FlowGraph,
    routing: RoutingMatrix,
    field: FlowField,
    leontief: Leontief,
}

impl FlowNetwork {
    pub fn new(graph: FlowGraph, routing: RoutingMatrix, field: FlowField) -> Result<Self> {
        let report = validate_network(&graph, &routing)?;
        if !report.is_valid() {
            return Err(Error::InvalidNetwork(report));
        }
        if field.len() != graph.link_count() {
            return Err(Error::DimensionMismatch {
                what: "flow field vs link count",
                expected: graph.link_count(),
                actual: field.len(),
            });
        }
        let leontief = Leontief::new(&routing)?;
        Ok(Self {
            graph,
            routing,
            field,
            leontief,
        })
    }

    pub fn graph(&self) -> &FlowGraph {
        &self.graph
    }

    pub fn routing(&self) -> &RoutingMatrix {
        &self.routing
    }

    pub fn field(&self) -> &FlowField {
        &self.field
    }

    pub fn leontief(&self) -> &Leontief {
        &self.leontief
    }

    pub fn link_count(&self) -> usize {
        self.graph.link_count()
    }

    /// All links share one head node and nothing is routed.
    pub fn is_local(&self) -> bool {
        let head = self.graph.links()[0].head;
        self.graph.links().iter().all(|l| l.head == head) && self.routing.is_zero()
    }
}
