//! Day-ahead energy offering for a price-taker generation unit under
//! market-price uncertainty.
//!
//! The crate covers the full pipeline:
//!
//! - [`units`]: the single-unit technical model (bounds, ramps, minimum
//!   up/down times, startup costs), cost evaluation and schedule
//!   feasibility checking;
//! - [`prices`]: historical price ingestion, trimmed nominal/deviation
//!   statistics, rolling train/test windows and a synthetic price generator;
//! - [`robust`]: nominal, budget-robust (Bertsimas–Sim style) and
//!   full-protection problem variants plus the worst-case deviation
//!   evaluators;
//! - [`solver`]: a deterministic branch-and-bound MIQP solver over the
//!   commitment binaries with convex QP relaxations, and an independent
//!   grid-enumeration oracle for testing;
//! - [`barcon`]: the Baringo–Conejo curve-building method (sequence of
//!   full-protection counterparts over a nested price ladder) and an
//!   auditor for its infeasible/suboptimal clearing outcomes;
//! - [`offering`]: single-solve zero-price offering from trimmed
//!   historical statistics;
//! - [`backtest`]: the rolling (4+1)-week evaluation protocol with
//!   profit accounting and report formatting.

pub mod backtest;
pub mod barcon;
pub mod offering;
pub mod prices;
pub mod robust;
pub mod solver;
pub mod units;
