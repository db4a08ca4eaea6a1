#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod budget;
pub mod distance;
pub mod flops;
pub mod math;
pub mod proposer;
pub mod results;
pub mod revisions;
pub mod rng;
pub mod search;
pub mod stats;
pub mod strategy;
pub mod types;
pub mod verifier;
