#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Kuramoto stochastic block model toolkit.
//!
//! Simulates coupled phase oscillators on block-structured random graphs,
//! computes path signatures and lead matrices of the phase series on the
//! clusterization, transient and steady-state windows, and estimates the
//! community structure from those matrices.

pub mod clustering;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod figures;
pub mod graphgen;
pub mod io;
pub mod pipeline;
pub mod rng;
pub mod signatures;
pub mod spikes;

pub use error::{KsbmError, Result};
