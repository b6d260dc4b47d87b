//! The `shotdesk` command-line tool and its `/v1` evaluation service.

// `!(a < b)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod service;
