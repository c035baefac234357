//! Data sources: the synthetic loan benchmark, CSV ingestion, and the
//! financial utility tables.

pub mod csvio;
pub mod finance;
pub mod synthetic;
