//! Object universe and request workloads.

mod catalog;
mod trace;
mod zipf;

pub use catalog::{
    build_catalog, read_catalog, write_catalog, Catalog, CatalogObject, CatalogSpec, ObjectKind, SizeDist,
};
pub use trace::{generate_trace, read_trace, write_trace, OriginUpdate, Request, Trace, WorkloadSpec};
pub use zipf::{zipf_sample, ZipfParams, ZipfSampler};
