//! The two reference topologies shipped with the crate, checked against the
//! node degrees they are known to have.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::network::{parse_topology, NetworkGraph, NodeId};

pub const NSF_TOPOLOGY: &str = include_str!("../../../topologies/nsf.topo");
pub const LONGHAUL_TOPOLOGY: &str = include_str!("../../../topologies/longhaul.topo");

/// Nodes treated as splitter sites in the high-degree condition.
pub const NSF_HIGH_DEGREE: [u32; 2] = [6, 10];
pub const LONGHAUL_HIGH_DEGREE: [u32; 8] = [10, 12, 13, 14, 15, 18, 21, 26];

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Reference {
    Nsf,
    Longhaul,
}

impl Reference {
    pub fn text(self) -> &'static str {
        match self {
            Reference::Nsf => NSF_TOPOLOGY,
            Reference::Longhaul => LONGHAUL_TOPOLOGY,
        }
    }

    pub fn high_degree_nodes(self) -> BTreeSet<NodeId> {
        let ids: &[u32] = match self {
            Reference::Nsf => &NSF_HIGH_DEGREE,
            Reference::Longhaul => &LONGHAUL_HIGH_DEGREE,
        };
        ids.iter().map(|&i| NodeId(i)).collect()
    }

    /// Checks node count and that exactly the high-degree nodes reach
    /// degree 4 (NSF: exactly 4; Longhaul: at least 4).
    pub fn verify(self, g: &NetworkGraph) -> Result<()> {
        let (n, name) = match self {
            Reference::Nsf => (14, "NSF"),
            Reference::Longhaul => (28, "Longhaul"),
        };
        if g.node_count() != n {
            return Err(Error::Reference(format!(
                "{name} must have {n} nodes, found {}",
                g.node_count()
            )));
        }
        let hubs = self.high_degree_nodes();
        for v in g.node_ids() {
            let d = g.degree(v);
            let ok = match (self, hubs.contains(&v)) {
                (Reference::Nsf, true) => d == 4,
                (Reference::Longhaul, true) => d >= 4,
                (_, false) => d < 4,
            };
            if !ok {
                return Err(Error::Reference(format!(
                    "{name} node {v} has unexpected degree {d}"
                )));
            }
        }
        Ok(())
    }

    pub fn load(self) -> Result<NetworkGraph> {
        let g = parse_topology(self.text())?;
        self.verify(&g)?;
        Ok(g)
    }
}

/// The 14-node NSF network.
pub fn nsf() -> NetworkGraph {
    Reference::Nsf
        .load()
        .expect("bundled NSF topology is valid")
}

/// The 28-node USA long-haul network.
pub fn longhaul() -> NetworkGraph {
    Reference::Longhaul
        .load()
        .expect("bundled Longhaul topology is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nsf_degree_facts() {
        let g = nsf();
        assert_eq!(g.node_count(), 14);
        assert_eq!(g.degree(NodeId(6)), 4);
        assert_eq!(g.degree(NodeId(10)), 4);
    }

    #[test]
    fn longhaul_degree_facts() {
        let g = longhaul();
        assert_eq!(g.node_count(), 28);
        for v in LONGHAUL_HIGH_DEGREE {
            assert!(g.degree(NodeId(v)) >= 4);
        }
    }

    #[test]
    fn wrong_file_is_rejected() {
        // NSF with the 6-13 link moved to 7-13 gives node 6 degree 3
        let tampered = NSF_TOPOLOGY.replace("edge 6 13", "edge 7 13");
        let g = parse_topology(&tampered).unwrap();
        assert!(Reference::Nsf.verify(&g).is_err());
        assert!(Reference::Longhaul.verify(&nsf()).is_err());
    }
}
