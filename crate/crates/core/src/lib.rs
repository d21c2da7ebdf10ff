//! Donkey and smuggler optimization.
//!
//! The *smuggler* scores every candidate once and fixes the best one
//! ([`fitness::rank`]). The *donkey* keeps that choice in service while
//! conditions change, reacting with [`donkey::Reaction::Run`],
//! [`donkey::Reaction::FaceAndSuicide`] or [`donkey::Reaction::FaceAndSupport`].
//!
//! Applications: traveling salesman ([`tsp`]), packet and ambulance routing
//! ([`routing`]) and a benchmark-function harness ([`benchmarks`]).

pub mod benchmarks;
pub mod donkey;
pub mod fitness;
pub mod routing;
pub mod tsp;

/// Seed used whenever the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20190501;
