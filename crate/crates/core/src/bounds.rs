//! Shared batch-size search window.
//!
//! Knowledge about feasible batch sizes is an interval with asymmetric
//! semantics: `lo` is the largest batch known to work on every client that
//! probed it, and `hi` is the smallest batch known to fail somewhere. `hi` is
//! exclusive, so the open interval `(lo, hi)` is exactly the set of unresolved
//! candidates and the search is finished when it is empty, i.e. when
//! `hi - lo == 1`. The final shared batch size is then `lo`.
//!
//! Keeping the failing edge exclusive avoids the classic off-by-one trap of
//! closed-interval binary search: a failure at `b` and a success at `b - 1`
//! land in the same, converged state instead of an inverted window.

use crate::error::{Error, Result};
use rand::Rng;

/// One client's probe result: it tried `batch` and either trained or ran out
/// of memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeOutcome {
    pub batch: usize,
    pub succeeded: bool,
}

/// The server's (or a client's local) current search window.
///
/// Invariant: `1 <= lo < hi`. `lo` never decreases and `hi` never increases
/// over the life of a search, so the window only narrows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchBounds {
    lo: usize,
    hi: usize,
}

impl BatchBounds {
    /// Builds a window from a known-good floor and an exclusive failing edge.
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo < 1 {
            return Err(Error::Invalid(format!("bounds lo must be >= 1, got {lo}")));
        }
        if hi <= lo {
            return Err(Error::Invalid(format!(
                "bounds need lo < hi, got lo={lo} hi={hi}"
            )));
        }
        Ok(BatchBounds { lo, hi })
    }

    /// Initial window for a federation: the configured range, truncated by the
    /// smallest client dataset (a batch cannot exceed the data it runs on).
    ///
    /// `b_max` is the largest batch the search may ever certify, so the
    /// exclusive failing edge starts one above it.
    pub fn init(b_min: usize, b_max: usize, min_dataset_size: usize) -> Result<Self> {
        let top = b_max.min(min_dataset_size);
        if b_min < 1 {
            return Err(Error::Invalid(format!("b_min must be >= 1, got {b_min}")));
        }
        if b_min > top {
            return Err(Error::Invalid(format!(
                "b_min ({b_min}) exceeds the usable window top ({top}) \
                 = min(b_max {b_max}, smallest dataset {min_dataset_size})"
            )));
        }
        BatchBounds::new(b_min, top + 1)
    }

    /// Degenerate, already-converged window pinning the batch at `b`. Used by
    /// fixed-batch federations so they share the round machinery.
    pub fn pinned(b: usize) -> Result<Self> {
        BatchBounds::new(b, b + 1)
    }

    /// Largest batch size known to work.
    pub fn lo(&self) -> usize {
        self.lo
    }

    /// Smallest batch size known to fail (exclusive edge).
    pub fn hi(&self) -> usize {
        self.hi
    }

    /// Number of still-undecided candidate sizes.
    pub fn width(&self) -> usize {
        self.hi - self.lo - 1
    }

    /// The search is done: no candidate between the known-good floor and the
    /// failing edge remains.
    pub fn converged(&self) -> bool {
        self.hi - self.lo == 1
    }

    /// Draws a probe uniformly from the open window `(lo, hi)`.
    ///
    /// Every value in the open window is informative: a success raises `lo`,
    /// a failure lowers `hi`. Probing `lo` itself (already known good) or `hi`
    /// (already known bad) would waste a round, so neither is ever drawn.
    ///
    /// Panics if the window is converged; callers only probe open windows.
    pub fn sample_probe<R: Rng>(&self, rng: &mut R) -> usize {
        assert!(
            !self.converged(),
            "sample_probe on a converged window [{}, {})",
            self.lo, self.hi
        );
        rng.random_range(self.lo + 1..self.hi)
    }

    /// Folds one probe result into the window.
    ///
    /// A probe outside the open window is rejected: it carries no new
    /// information and, in the protocol, indicates a stale report that the
    /// caller should discard rather than treat as a failure.
    pub fn apply_outcome(&self, outcome: ProbeOutcome) -> Result<Self> {
        let b = outcome.batch;
        if b <= self.lo || b >= self.hi {
            return Err(Error::Invalid(format!(
                "probe at {b} is outside the open window ({}, {})",
                self.lo, self.hi
            )));
        }
        if outcome.succeeded {
            BatchBounds::new(b, self.hi)
        } else {
            BatchBounds::new(self.lo, b)
        }
    }

    /// Combines the windows reported by all clients after a round.
    ///
    /// The merged floor is the highest success anywhere and the merged edge is
    /// the lowest failure anywhere. If those conflict - one client succeeded
    /// at a size another client failed at, which can happen under unequal
    /// memory capacities - failure evidence wins: the edge keeps the lowest
    /// failure and the floor drops to just below it, since a shared batch
    /// size must work for every client.
    pub fn merge(reports: &[BatchBounds]) -> Result<Self> {
        let first = reports
            .first()
            .ok_or_else(|| Error::Invalid("merge of an empty report list".into()))?;
        let mut lo = first.lo;
        let mut hi = first.hi;
        for r in &reports[1..] {
            lo = lo.max(r.lo);
            hi = hi.min(r.hi);
        }
        if lo >= hi {
            lo = hi - 1;
        }
        BatchBounds::new(lo, hi)
    }
}

impl std::fmt::Display for BatchBounds {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}
