//! Per-iteration run metrics.

/// Metrics recorded after each iteration. `dist_to_ref` and `residual` are
/// `NaN` when no reference solution / residual probe is attached;
/// `batch_size` is zero on exact-gradient runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// Iteration index of the step that produced this record (0-based).
    pub iter: u64,
    /// `‖x^k - x*‖` against the supplied reference.
    pub dist_to_ref: f64,
    /// Max pairwise estimate (or average-tracking) gap.
    pub primal_gap: f64,
    /// Max pairwise multiplier gap.
    pub dual_gap: f64,
    /// `‖max(A x - b, 0)‖_∞`.
    pub violation: f64,
    /// Deterministic forward-backward residual, when a probe is attached.
    pub residual: f64,
    /// Gradient samples averaged per agent this iteration.
    pub batch_size: usize,
    /// Elapsed wall time since the run started (not reproducible).
    pub wallclock_ms: f64,
}

/// All records of one run, one per iteration.
#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub records: Vec<TraceRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// First iteration at which `dist_to_ref / ‖x*‖` drops below `rel`.
    pub fn first_below_relative_distance(&self, reference_norm: f64, rel: f64) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.dist_to_ref <= rel * reference_norm)
            .map(|r| r.iter)
    }
}
