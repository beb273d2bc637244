//! Extended operators for partial-decision information: selection matrices,
//! step-size bounds, preconditioners, theory constants, and the matrix-form
//! forward/backward machinery used as the solvers' cross-check engine.

mod engine;
mod layout;
mod precond;
mod profile;
mod selection;
mod theory;

pub use engine::{GradEval, MatrixEngine};
pub use layout::StateLayout;
pub use precond::{assemble_preconditioner, assemble_preconditioner_unchecked, Preconditioner};
pub use profile::{step_size_bounds, StepSizeBounds, StepSizeProfile};
pub use selection::SelectionMatrices;
pub use theory::{metric_compatibility, theory_constants, MetricCompatibility, TheoryConstants};

/// The four distributed algorithm families: dual consensus imposed through
/// the Laplacian (node-based) or the incidence matrix (edge-based), for
/// network or aggregative games.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmVariant {
    NodeNetwork,
    EdgeNetwork,
    NodeAggregative,
    EdgeAggregative,
}

impl AlgorithmVariant {
    pub const ALL: [AlgorithmVariant; 4] = [
        AlgorithmVariant::NodeNetwork,
        AlgorithmVariant::EdgeNetwork,
        AlgorithmVariant::NodeAggregative,
        AlgorithmVariant::EdgeAggregative,
    ];

    pub fn is_edge_based(self) -> bool {
        matches!(self, AlgorithmVariant::EdgeNetwork | AlgorithmVariant::EdgeAggregative)
    }

    pub fn is_aggregative(self) -> bool {
        matches!(
            self,
            AlgorithmVariant::NodeAggregative | AlgorithmVariant::EdgeAggregative
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmVariant::NodeNetwork => "node-net",
            AlgorithmVariant::EdgeNetwork => "edge-net",
            AlgorithmVariant::NodeAggregative => "node-agg",
            AlgorithmVariant::EdgeAggregative => "edge-agg",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "node-net" => Some(AlgorithmVariant::NodeNetwork),
            "edge-net" => Some(AlgorithmVariant::EdgeNetwork),
            "node-agg" => Some(AlgorithmVariant::NodeAggregative),
            "edge-agg" => Some(AlgorithmVariant::EdgeAggregative),
            _ => None,
        }
    }
}

impl std::fmt::Display for AlgorithmVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Sign of the auxiliary term in the edge-based dual update.
///
/// `Derived` follows the resolvent of the operator/preconditioner pair
/// (`+(2z⁺ - z)`); `Printed` follows the algorithm listings' `-(2z⁺ - z)`,
/// exposed for side-by-side comparison only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignConvention {
    #[default]
    Derived,
    Printed,
}
