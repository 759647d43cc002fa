pub mod java;
pub mod ingest;
pub mod jindex;
pub mod store;
pub mod repo;
pub mod llm;
pub mod enhance;
pub mod eval;
