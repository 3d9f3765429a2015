//! Files: the count-table cache, ranking CSVs and fit result documents.

pub mod cache;
pub mod csv;
pub mod result;
