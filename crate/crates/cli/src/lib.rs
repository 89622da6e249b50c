//! Row-format helpers shared by the `heavycs` binary and its integration
//! tests: float and set serialization with exact round-tripping, and input
//! row parsing.

pub mod format;
pub mod input;
