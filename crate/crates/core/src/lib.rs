//! Temporal extension of web-archive collections.
//!
//! Builds longitudinal snapshot tuples (by default 2008/2016/2020 triplets of
//! successful captures of the same URL) from several candidate sources, and
//! analyzes term additions and deletions across administration windows.

pub mod agency;
pub mod assembler;
pub mod backend;
pub mod cdx;
pub mod change;
pub mod crawler;
pub mod curation;
pub mod epoch;
pub mod fixture;
pub mod live;
pub mod memento;
pub mod pipeline;
pub mod provenance;
pub mod rate;
pub mod url_keys;
