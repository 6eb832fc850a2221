//! Library half of the `slowlight` command-line tool: configuration
//! parsing/emission, deterministic CSV/JSON output, named presets, and the
//! per-command drivers. The binary in `main.rs` is a thin clap wrapper
//! around [`run::execute`].

// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form is also true for NaN, which must be rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod run;
