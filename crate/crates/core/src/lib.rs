//! Harness for adaptive program repair: dataset construction, Code Diff
//! bug-location labels, execution traces for self-debug prompts, a two-stage
//! locate-then-repair pipeline over a pluggable model gateway, judging and
//! metrics, and training-data export.

pub mod corpus;
pub mod diffkit;
pub mod exec;
pub mod jsonl;
pub mod judge;
pub mod seed;
pub mod trace;
pub mod tracefmt;
pub mod promptkit;
pub mod modelgw;
pub mod trainprep;
pub mod pipeline;
