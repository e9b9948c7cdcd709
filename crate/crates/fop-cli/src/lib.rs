//! IO, file formats and workflow drivers around `fop-core`.
//!
//! The `fop` binary wires these together; the library form exists so the
//! formats and drivers can be exercised directly by tests.

pub mod commands;
pub mod driver;
pub mod manifest;
pub mod meta;
pub mod modelfile;
pub mod pnm;
pub mod posterior;
pub mod report;
