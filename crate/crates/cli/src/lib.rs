//! Library surface of the `colorbatch` tool: file formats, report
//! assembly and the HTTP simulator service. The binary in `main.rs` is a
//! thin clap wrapper over these plus `colorbatch-core`.

pub mod files;
pub mod report;
pub mod server;
