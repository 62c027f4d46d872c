//! The heuristic design space and the adaptive decision rule.
//!
//! Fixed heuristics trade exploration breadth against overhead:
//!
//! * `onehop-a` — unmodified beam search; explores every 1st-degree
//!   neighbor, selected or not.
//! * `onehop-s` — explores only selected 1st-degree neighbors. Cheapest,
//!   but the selected projection of the graph disconnects at low
//!   selectivity.
//! * `blind` — selected 1st-degree neighbors first, then selected
//!   2nd-degree neighbors reached through unselected "bridge" neighbors in
//!   adjacency order, until `M` selected vectors are explored.
//! * `directed` — like `blind`, but pays a distance computation for every
//!   1st-degree neighbor so bridges can be expanded nearest-first.
//!
//! The adaptive rule picks among the last three from a selectivity
//! estimate: `onehop-s` when selectivity is at least `ub_onehop`, otherwise
//! `directed` when the expected number of selected vectors within two hops
//! (`esv`) is large enough to justify its overhead, otherwise `blind`.

use crate::error::Error;
use crate::Result;

/// Search heuristic requested by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Heuristic {
    OnehopA,
    OnehopS,
    Blind,
    Directed,
    /// Resolve once per query from global selectivity.
    AdaptiveGlobal,
    /// Resolve per popped candidate from its local selectivity.
    AdaptiveLocal,
}

impl Heuristic {
    pub fn as_str(&self) -> &'static str {
        match self {
            Heuristic::OnehopA => "onehop-a",
            Heuristic::OnehopS => "onehop-s",
            Heuristic::Blind => "blind",
            Heuristic::Directed => "directed",
            Heuristic::AdaptiveGlobal => "adaptive-g",
            Heuristic::AdaptiveLocal => "adaptive-l",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "onehop-a" => Heuristic::OnehopA,
            "onehop-s" => Heuristic::OnehopS,
            "blind" => Heuristic::Blind,
            "directed" => Heuristic::Directed,
            "adaptive-g" | "adaptive-global" => Heuristic::AdaptiveGlobal,
            "adaptive-l" | "adaptive-local" => Heuristic::AdaptiveLocal,
            other => {
                return Err(Error::usage(alloc::format!(
                    "unknown heuristic '{other}'"
                )))
            }
        })
    }
}

impl core::fmt::Display for Heuristic {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of the adaptive decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedChoice {
    OnehopS,
    Blind,
    Directed,
}

/// Estimated number of selected vectors among the 1st- and 2nd-degree
/// neighbors of a candidate: `σ · (M + 1) · M`.
#[inline]
pub fn esv(sigma: f64, m: usize) -> f64 {
    sigma * (m as f64 + 1.0) * m as f64
}

/// The decision rule: `onehop-s` iff `σ ≥ ub_onehop`; otherwise `directed`
/// iff `esv(σ, M) ≥ M · lf`; otherwise `blind`. Both comparisons are
/// inclusive at the boundary.
#[inline]
pub fn choose_fixed(sigma: f64, m: usize, lf: f64, ub_onehop: f64) -> FixedChoice {
    if sigma >= ub_onehop {
        FixedChoice::OnehopS
    } else if esv(sigma, m) >= lf * m as f64 {
        FixedChoice::Directed
    } else {
        FixedChoice::Blind
    }
}
