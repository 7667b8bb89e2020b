//! Front end for grassmann-core: flat file formats, reports, and the
//! theorem-verification harness behind the `grass` binary.

pub mod commands;
pub mod formats;
pub mod harness;
pub mod report;
