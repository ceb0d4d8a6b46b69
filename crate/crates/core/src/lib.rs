//! Matching mathematical proofs to their statements.

pub mod assignment;
pub mod cli;
pub mod corpus;
pub mod decoding;
pub mod encoders;
pub mod evalharness;
pub mod seed;
pub mod symbols;
pub mod training;
