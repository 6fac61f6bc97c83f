//! Round state machines for the collaborative batch-size search.
//!
//! Each synchronous round, every client is either a searcher or shielded.
//! Searchers draw a batch size from the open window and attempt it: success
//! raises their local lower bound and doubles as the round's training pass;
//! an out-of-memory failure lowers their local upper bound and forfeits the
//! round's work on that client. Shielded clients skip probing entirely and
//! train at the known-good lower bound, which keeps the global model moving
//! even when every probe fails. The server merges the returned bounds and
//! aggregates whatever updates arrived.
//!
//! Two baselines share the machinery: `single_prober` shields everyone but
//! one randomly drawn client per round, and `fixed(b)` pins the window so no
//! one ever probes.

use crate::bounds::{BatchBounds, ProbeOutcome};
use crate::client::ClientProfile;
use crate::error::{Error, Result};
use rand::Rng;

/// How the federation picks its batch size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Collaborative randomized search with a shielded fraction.
    Rasba,
    /// One randomly chosen client probes per round; the rest stay shielded.
    SingleProber,
    /// No search at all: every client trains at the given batch size.
    Fixed(usize),
}

impl Strategy {
    /// Parses the config syntax: `rasba`, `single_prober`, or `fixed(N)`.
    pub fn parse(text: &str) -> Result<Strategy> {
        let t = text.trim();
        match t {
            "rasba" => Ok(Strategy::Rasba),
            "single_prober" => Ok(Strategy::SingleProber),
            _ => {
                if let Some(inner) = t.strip_prefix("fixed(").and_then(|s| s.strip_suffix(')')) {
                    let b: usize = inner.trim().parse().map_err(|_| {
                        Error::Config(format!("strategy: '{inner}' is not a batch size"))
                    })?;
                    if b == 0 {
                        return Err(Error::Config("strategy: fixed batch must be >= 1".into()));
                    }
                    Ok(Strategy::Fixed(b))
                } else {
                    Err(Error::Config(format!(
                        "strategy: '{t}' is not one of rasba, single_prober, fixed(N)"
                    )))
                }
            }
        }
    }

    /// True for strategies that actually probe.
    pub fn searches(&self) -> bool {
        !matches!(self, Strategy::Fixed(_))
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Strategy::Rasba => write!(f, "rasba"),
            Strategy::SingleProber => write!(f, "single_prober"),
            Strategy::Fixed(b) => write!(f, "fixed({b})"),
        }
    }
}

/// A client's part in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Searcher,
    Shielded,
}

/// Number of clients held out of the search: `ceil(f * m)`.
///
/// The tiny slack absorbs cases like 0.3 * 10 landing a hair above 3.0 in
/// floating point, which would otherwise shield one client too many.
pub fn shielded_count(m: usize, f: f64) -> usize {
    (((f * m as f64) - 1e-9).ceil().max(0.0) as usize).min(m)
}

/// Draws the round's role assignment.
///
/// Shielded clients are sampled without replacement from `rng`, so the
/// shielded set rotates from round to round instead of pinning the same
/// clients forever. `single_prober` inverts the draw: one searcher, chosen
/// the same way. `fixed` shields everyone.
pub fn roles_for_round<R: Rng>(strategy: Strategy, m: usize, f: f64, rng: &mut R) -> Vec<Role> {
    let n_shielded = match strategy {
        Strategy::Fixed(_) => m,
        Strategy::SingleProber => m.saturating_sub(1),
        Strategy::Rasba => shielded_count(m, f),
    };
    let mut roles = vec![Role::Searcher; m];
    for i in rand::seq::index::sample(rng, m, n_shielded) {
        roles[i] = Role::Shielded;
    }
    roles
}

/// What one client did in one round: its post-round view of the bounds, the
/// probe it made (searchers only), the batch it trained at if training
/// happened, and the simulated seconds it spent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundReport {
    pub client_id: usize,
    pub bounds: BatchBounds,
    pub probe: Option<ProbeOutcome>,
    pub train_batch: Option<usize>,
    pub time: f64,
}

impl RoundReport {
    /// A client that neither trained nor probed hit its memory limit at the
    /// supposedly safe lower bound.
    pub fn silent_oom(&self) -> bool {
        self.train_batch.is_none() && self.probe.is_none()
    }
}

/// Executes one client's round against the broadcast bounds.
///
/// Searchers with an open window sample from it and attempt the draw; the
/// attempt is simultaneously the probe and (on success) the round's training
/// batch, so probing costs nothing extra. A failed attempt burns one
/// batch-load's worth of time and produces no update. Shielded clients, and
/// everyone once the window is closed, train at the lower bound. A shielded
/// client whose memory cannot even hold the lower bound reports neither
/// update nor probe: the round is simply lost on that client.
pub fn client_round<R: Rng>(
    client_id: usize,
    profile: &ClientProfile,
    shared: BatchBounds,
    role: Role,
    local_epochs: usize,
    rng: &mut R,
) -> RoundReport {
    let probing = role == Role::Searcher && !shared.converged();
    if probing {
        let b = shared.sample_probe(rng);
        let attempt = profile.try_batch(b);
        let outcome = ProbeOutcome { batch: b, succeeded: attempt.succeeded() };
        let bounds = shared
            .apply_outcome(outcome)
            .expect("a probe drawn from the open window is never stale");
        if attempt.succeeded() {
            let epoch = profile
                .epoch_time(b)
                .expect("a feasible batch is within the shard");
            RoundReport {
                client_id,
                bounds,
                probe: Some(outcome),
                train_batch: Some(b),
                time: local_epochs as f64 * epoch,
            }
        } else {
            RoundReport {
                client_id,
                bounds,
                probe: Some(outcome),
                train_batch: None,
                time: profile.failed_attempt_time(),
            }
        }
    } else {
        let b = shared.lo().min(profile.n_samples);
        if profile.try_batch(b).succeeded() {
            let epoch = profile.epoch_time(b).expect("clamped batch is within the shard");
            RoundReport {
                client_id,
                bounds: shared,
                probe: None,
                train_batch: Some(b),
                time: local_epochs as f64 * epoch,
            }
        } else {
            RoundReport {
                client_id,
                bounds: shared,
                probe: None,
                train_batch: None,
                time: profile.failed_attempt_time(),
            }
        }
    }
}

/// The server's view of a finished round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSummary {
    /// Merged bounds to broadcast next round.
    pub bounds: BatchBounds,
    /// Attempts that ran out of memory, probes and shielded failures alike.
    pub oom_events: usize,
    /// Clients whose local pass completed and will enter the aggregate.
    pub updates: usize,
    /// Wall-clock seconds for the round: the synchronous barrier waits for
    /// the slowest client.
    pub time: f64,
}

/// Reduces a round's reports: merge the bounds, count failures and updates,
/// take the barrier time. Order-independent, so reports may arrive in any
/// client order.
pub fn summarize_round(reports: &[RoundReport]) -> Result<RoundSummary> {
    if reports.is_empty() {
        return Err(Error::Invalid("round with no client reports".into()));
    }
    let all_bounds: Vec<BatchBounds> = reports.iter().map(|r| r.bounds).collect();
    let bounds = BatchBounds::merge(&all_bounds)?;
    let oom_events = reports
        .iter()
        .filter(|r| r.probe.is_some_and(|p| !p.succeeded) || r.silent_oom())
        .count();
    let updates = reports.iter().filter(|r| r.train_batch.is_some()).count();
    let time = reports.iter().map(|r| r.time).fold(0.0, f64::max);
    Ok(RoundSummary { bounds, oom_events, updates, time })
}
