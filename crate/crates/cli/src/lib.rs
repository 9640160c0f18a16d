//! HTTP service over one loaded knowledge base, plus the report types the
//! `kopl` binary prints.

pub mod report;
pub mod service;
