//! File formats, run manifests and the command implementations behind the
//! `wiretap-region` binary.

pub mod args;
pub mod commands;
pub mod exit;
pub mod formats;
pub mod manifest;
