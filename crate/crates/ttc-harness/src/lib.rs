//! Experiment harness: configuration, datasets, ledgers, remote backends, and
//! artifact emission for the test-time compute library.
//!
//! The harness wraps the `ttc-core` algorithms in everything an experiment
//! needs on a real machine: strict TOML configs ([`config`]), JSONL question
//! sets ([`dataset`]), a resumable append-only results ledger ([`ledger`]),
//! an HTTP proposer/verifier backend ([`remote`]), the staged pipeline that
//! runs sweeps and selects compute-optimal policies ([`runner`]), and tidy
//! CSV figure data ([`plots`]).

pub mod config;
pub mod dataset;
pub mod ledger;
pub mod plots;
pub mod remote;
pub mod runner;
