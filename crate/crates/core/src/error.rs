use std::path::PathBuf;

use crate::types::{NodeId, ObjectId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("catalog: {0}")]
    Catalog(String),

    #[error("workload: {0}")]
    Workload(String),

    #[error("topology: {0}")]
    Topology(String),

    #[error("{path}:{line}: {msg}")]
    TraceParse { path: PathBuf, line: usize, msg: String },

    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error("request #{position} (time {time_us} us) references unknown object {object}")]
    UnknownObject { position: usize, time_us: u64, object: ObjectId },

    #[error(
        "request #{position} (time {time_us} us) comes from client {client}, but the topology has {clients} clients"
    )]
    UnknownClient { position: usize, time_us: u64, client: crate::types::ClientId, clients: u32 },

    #[error("origin update #{position} references unknown object {object}")]
    UnknownUpdate { position: usize, object: ObjectId },

    #[error("audit failed after event #{event} on node {node}: {msg}")]
    Audit { event: usize, node: NodeId, msg: String },

    #[error("sweep: {0}")]
    Sweep(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
