//! Deterministic simulator for collaborative batch-size search in synchronous
//! federated learning.
//!
//! A federation of simulated clients performs randomized binary search over a
//! shared mini-batch size window: each round, searching clients probe a batch
//! size drawn from the open window and report success or out-of-memory, while a
//! shielded fraction keeps training at the largest known-good size so the model
//! always makes progress. The server merges per-client bounds, aggregates model
//! updates with sample-count-weighted FedAvg, and advances a simulated clock in
//! which a round costs the slowest client's wall time.
//!
//! Modules, bottom-up:
//!
//! * [`bounds`] - the shared search window and its merge rules
//! * [`client`] - per-client hardware model (memory feasibility, epoch timing)
//! * [`trainer`] - synthetic task, multinomial logistic regression, FedAvg
//! * [`search`] - per-round protocol: roles, client step, server step
//! * [`config`] - flat key-value run configuration
//! * [`harness`] - experiment loop, Monte Carlo ensembles, CSV output
//!
//! Everything downstream of a master seed is deterministic: RNG streams are
//! derived per purpose (dataset, partition, role draw, probe, shuffle), so two
//! runs with the same configuration produce byte-identical output files.

pub mod bounds;
pub mod client;
pub mod config;
pub mod error;
pub mod harness;
pub mod rng;
pub mod search;
pub mod trainer;

pub use bounds::{BatchBounds, ProbeOutcome};
pub use client::{BatchAttempt, ClientProfile};
pub use config::RunConfig;
pub use error::Error;
pub use search::{RoundReport, Strategy};
pub use trainer::{Dataset, ModelParams};
