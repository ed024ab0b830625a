// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line front end and HTTP labeling service for `vexad-core`.

pub mod api;
pub mod commands;
pub mod projection;
pub mod store;
