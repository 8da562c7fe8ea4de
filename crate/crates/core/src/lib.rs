//! Bitcoin address behaviour analysis on a directed heterogeneous
//! transaction multigraph.
//!
//! Blocks are ingested from NDJSON ([`ledger`]), turned into an
//! address/transaction multigraph ([`graph`]), cut into k-hop neighbourhoods
//! ([`subgraph`]) and summarised as 148 indicators per address
//! ([`features`]). [`dataset`] and [`classify`] cover the tabular pipeline
//! and the KNN baseline.

pub mod classify;
pub mod dataset;
pub mod error;
pub mod features;
pub mod graph;
pub mod labels;
pub mod ledger;
pub mod subgraph;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
pub use graph::{Direction, EdgeId, NodeId, NodeKind, TxGraph};
pub use labels::{Label, LabelRecord, Strength};
pub use ledger::{parse_ledger, write_ledger, RawBlock, RawTx, TxEntry};
pub use subgraph::{gk_batch, gk_generate, GkParams, KHopSubgraph};
pub use synth::{synth_ledger, Archetype, SynthConfig, SynthLedger};
