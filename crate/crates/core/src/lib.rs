//! Interference-aware DAG orchestration for heterogeneous, unreliable edge
//! fleets, five comparison schedulers, and a seeded discrete-event simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dag;
pub mod device;
pub mod orchestrator;
pub mod scheduler;
pub mod sim;
pub mod workloads;
