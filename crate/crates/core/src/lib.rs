//! Desk-scale Fraïssé theory: finite structures and their ages, amalgamation
//! and joint-embedding checks, Fraïssé chains with truncation-aware
//! verification, back-and-forth weaves, finite-category diagnostics for the
//! atomic topology, and the stabilizer/coset-category audit.

pub mod age;
pub mod backforth;
pub mod chain;
pub mod cli;
pub mod fincat;
pub mod format;
pub mod galois;
pub mod structures;
pub mod verdict;
