//! A stateless model checker for MCIR, a small textual concurrent IR.
//!
//! The pipeline has three stages:
//!
//! 1. [`ir`]: parse `.mcir` modules and link them into a [`ir::Program`].
//! 2. [`passes`]: rewrite the program into a verifiable form (threading-call
//!    interception, loop bounding, memory-intrinsic lowering, undef
//!    initialization, dead-allocation elimination).
//! 3. [`explore`]: enumerate every sequentially consistent execution up to
//!    trace equivalence with source-set DPOR and sleep sets, checking for
//!    data races, assertion failures, out-of-bounds and uninitialized reads.
//!
//! [`exec`] is the deterministic replay interpreter that the explorer drives,
//! and [`report`] renders verdicts, witnesses and execution graphs.

pub mod cli;
pub mod driver;
pub mod exec;
pub mod explore;
pub mod ir;
pub mod passes;
pub mod report;
