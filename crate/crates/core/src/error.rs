use thiserror::Error;

use crate::network::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown node id {node}")]
    UnknownNode { line: usize, node: u32 },
    #[error("line {line}: duplicate edge {u}-{v}")]
    DuplicateEdge { line: usize, u: NodeId, v: NodeId },
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: NodeId },
    #[error("topology is disconnected: node {0} cannot reach node 1")]
    Disconnected(NodeId),
    #[error("invalid session: {0}")]
    Session(String),
    #[error("reference topology check failed: {0}")]
    Reference(String),
    #[error("config: {0}")]
    Config(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
