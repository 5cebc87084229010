//! File formats, self-contained reports, seeded cross-validation
//! campaigns, and trajectory CSV for the `posdelay` command-line tool.
//! The numerical work all lives in the core library; this crate is the
//! plumbing around it.

pub mod crossval;
pub mod csvout;
pub mod report;
pub mod sampler;
pub mod schema;
