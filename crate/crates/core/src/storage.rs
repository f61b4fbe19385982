//! Storage systems with an MDS core and their minimal repair groups.
//!
//! A system stores `K` files on `N` nodes. Systematic nodes hold a plain
//! copy of one file; coded nodes belong to the MDS core. A set of nodes gives
//! access to file `k` when it contains a systematic `k` node, or when it holds
//! systematic nodes for `n` distinct other files together with at least
//! `K - n` coded nodes.

use std::fmt;

use itertools::Itertools;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Rational;

pub type FileIndex = usize;

/// Zero-based node index. Displays 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Systematic(FileIndex),
    Coded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StorageSystem {
    files: usize,
    nodes: Vec<NodeKind>,
    mu: Rational,
}

impl StorageSystem {
    /// Canonical layout: systematic blocks in file order, coded nodes last.
    pub fn mds_core(systematic: &[usize], coded: usize, mu: Rational) -> Result<Self> {
        let mut nodes = Vec::with_capacity(systematic.iter().sum::<usize>() + coded);
        for (file, &count) in systematic.iter().enumerate() {
            nodes.extend(std::iter::repeat(NodeKind::Systematic(file)).take(count));
        }
        nodes.extend(std::iter::repeat(NodeKind::Coded).take(coded));
        Self::from_nodes(systematic.len(), nodes, mu)
    }

    /// Arbitrary node order, e.g. the `[a, a, a+b, b]` layout.
    pub fn from_nodes(files: usize, nodes: Vec<NodeKind>, mu: Rational) -> Result<Self> {
        if files == 0 {
            return Err(Error::InvalidSystem("a system stores at least one file".into()));
        }
        if !mu.is_positive() {
            return Err(Error::InvalidParameter(format!("service rate must be positive, got {mu}")));
        }
        if let Some(bad) = nodes.iter().find_map(|kind| match kind {
            NodeKind::Systematic(file) if *file >= files => Some(*file),
            _ => None,
        }) {
            return Err(Error::InvalidSystem(format!("systematic node for file {} but only {files} files", bad + 1)));
        }
        Ok(Self { files, nodes, mu })
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeKind] {
        &self.nodes
    }

    pub fn kind(&self, node: NodeId) -> NodeKind {
        self.nodes[node.0]
    }

    pub fn mu(&self) -> &Rational {
        &self.mu
    }

    /// Same roster with a different service rate.
    pub fn with_mu(&self, mu: Rational) -> Result<Self> {
        Self::from_nodes(self.files, self.nodes.clone(), mu)
    }

    pub fn coded_count(&self) -> usize {
        self.nodes.iter().filter(|k| **k == NodeKind::Coded).count()
    }

    pub fn systematic_count(&self, file: FileIndex) -> usize {
        self.nodes.iter().filter(|k| **k == NodeKind::Systematic(file)).count()
    }

    pub fn systematic_counts(&self) -> Vec<usize> {
        (0..self.files).map(|f| self.systematic_count(f)).collect()
    }

    pub fn systematic_nodes(&self, file: FileIndex) -> Vec<NodeId> {
        self.nodes_where(|k| k == NodeKind::Systematic(file))
    }

    pub fn coded_nodes(&self) -> Vec<NodeId> {
        self.nodes_where(|k| k == NodeKind::Coded)
    }

    fn nodes_where(&self, pred: impl Fn(NodeKind) -> bool) -> Vec<NodeId> {
        self.nodes.iter().enumerate().filter(|(_, k)| pred(**k)).map(|(i, _)| NodeId(i)).collect()
    }

    /// True when no file has systematic nodes.
    pub fn is_all_coded(&self) -> bool {
        self.nodes.iter().all(|k| *k == NodeKind::Coded)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RepairGroup {
    pub file: FileIndex,
    /// Sorted ascending.
    pub members: Vec<NodeId>,
}

impl RepairGroup {
    pub fn contains(&self, node: NodeId) -> bool {
        self.members.binary_search(&node).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl fmt::Display for RepairGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.members.iter().join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairGroupTable {
    node_count: usize,
    groups: Vec<Vec<RepairGroup>>,
}

impl RepairGroupTable {
    pub fn files(&self) -> usize {
        self.groups.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of repair groups for `file`.
    pub fn gamma(&self, file: FileIndex) -> usize {
        self.groups[file].len()
    }

    pub fn gammas(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn groups(&self, file: FileIndex) -> &[RepairGroup] {
        &self.groups[file]
    }

    pub fn total_groups(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Indicator of node `node` belonging to group `group` of `file`.
    pub fn delta(&self, file: FileIndex, group: usize, node: NodeId) -> Result<bool> {
        let groups = self.groups.get(file).ok_or_else(|| Error::Index(format!("file {file} of {}", self.groups.len())))?;
        let group = groups.get(group).ok_or_else(|| Error::Index(format!("group {group} of {} for file {file}", groups.len())))?;
        if node.0 >= self.node_count {
            return Err(Error::Index(format!("node {} of {}", node.0, self.node_count)));
        }
        Ok(group.contains(node))
    }

    /// Position of the group with exactly these (sorted) members.
    pub fn position(&self, file: FileIndex, members: &[NodeId]) -> Option<usize> {
        self.groups.get(file)?.iter().position(|g| g.members == members)
    }
}

impl fmt::Display for RepairGroupTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (file, groups) in self.groups.iter().enumerate() {
            writeln!(f, "f{} (gamma={}): {}", file + 1, groups.len(), groups.iter().join(","))?;
        }
        Ok(())
    }
}

/// Minimal repair groups of every file, in canonical order: singletons first,
/// then by number of systematic helpers, then lexicographically by members.
pub fn enumerate_repair_groups(system: &StorageSystem) -> RepairGroupTable {
    let k = system.files();
    let coded = system.coded_nodes();
    let systematic: Vec<Vec<NodeId>> = (0..k).map(|f| system.systematic_nodes(f)).collect();

    let groups = (0..k)
        .map(|file| {
            let mut out: Vec<RepairGroup> = systematic[file].iter().map(|&node| RepairGroup { file, members: vec![node] }).collect();
            let helpers: Vec<FileIndex> = (0..k).filter(|&f| f != file && !systematic[f].is_empty()).collect();

            for n in 0..=helpers.len().min(k - 1) {
                let need = k - n;
                if coded.len() < need {
                    continue;
                }
                let mut batch = Vec::new();
                for chosen in helpers.iter().copied().combinations(n) {
                    let pools: Vec<&[NodeId]> = chosen.iter().map(|&f| systematic[f].as_slice()).collect();
                    for picks in cartesian(&pools) {
                        for subset in coded.iter().copied().combinations(need) {
                            let mut members = picks.clone();
                            members.extend(subset);
                            members.sort_unstable();
                            batch.push(members);
                        }
                    }
                }
                batch.sort();
                out.extend(batch.into_iter().map(|members| RepairGroup { file, members }));
            }
            out
        })
        .collect();

    RepairGroupTable { node_count: system.node_count(), groups }
}

/// One element from each pool. A single empty pick when there are no pools.
fn cartesian(pools: &[&[NodeId]]) -> Vec<Vec<NodeId>> {
    pools.iter().fold(vec![Vec::new()], |acc, pool| {
        acc.into_iter()
            .flat_map(|prefix| {
                pool.iter().map(move |&node| {
                    let mut next = prefix.clone();
                    next.push(node);
                    next
                })
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::int;

    fn ids(nodes: &[usize]) -> Vec<NodeId> {
        nodes.iter().map(|&n| NodeId(n)).collect()
    }

    fn member_sets(table: &RepairGroupTable, file: FileIndex) -> Vec<Vec<NodeId>> {
        table.groups(file).iter().map(|g| g.members.clone()).collect()
    }

    pub(crate) fn example_one() -> StorageSystem {
        use NodeKind::*;
        StorageSystem::from_nodes(2, vec![Systematic(0), Systematic(0), Coded, Systematic(1)], int(1)).unwrap()
    }

    #[test]
    fn canonical_layout() {
        let sys = StorageSystem::mds_core(&[3, 1, 1], 3, int(1)).unwrap();
        assert_eq!(sys.node_count(), 8);
        assert_eq!(sys.systematic_nodes(0), ids(&[0, 1, 2]));
        assert_eq!(sys.systematic_nodes(1), ids(&[3]));
        assert_eq!(sys.systematic_nodes(2), ids(&[4]));
        assert_eq!(sys.coded_nodes(), ids(&[5, 6, 7]));

        let all_coded = StorageSystem::mds_core(&[0, 0], 4, int(1)).unwrap();
        assert_eq!(all_coded.files(), 2);
        assert!(all_coded.is_all_coded());
        assert_eq!(all_coded.coded_count(), 4);

        let ex = StorageSystem::mds_core(&[2, 1], 1, int(1)).unwrap();
        assert_eq!(ex.systematic_counts(), vec![2, 1]);
        assert_eq!(ex.coded_count(), 1);
    }

    #[test]
    fn rejects_invalid_systems() {
        assert!(matches!(StorageSystem::mds_core(&[], 3, int(1)), Err(Error::InvalidSystem(_))));
        assert!(matches!(StorageSystem::mds_core(&[1], 3, int(0)), Err(Error::InvalidParameter(_))));
        assert!(matches!(StorageSystem::mds_core(&[1], 3, int(-1)), Err(Error::InvalidParameter(_))));
        assert!(StorageSystem::from_nodes(1, vec![NodeKind::Systematic(1)], int(1)).is_err());
    }

    #[test]
    fn example_one_groups() {
        let table = enumerate_repair_groups(&example_one());
        assert_eq!(member_sets(&table, 0), vec![ids(&[0]), ids(&[1]), ids(&[2, 3])]);
        assert_eq!(member_sets(&table, 1), vec![ids(&[3]), ids(&[0, 2]), ids(&[1, 2])]);
        assert_eq!(table.to_string(), "f1 (gamma=3): {1},{2},{3,4}\nf2 (gamma=3): {4},{1,3},{2,3}\n");
    }

    #[test]
    fn unrecoverable_all_coded() {
        let table = enumerate_repair_groups(&StorageSystem::mds_core(&[0, 0, 0], 2, int(1)).unwrap());
        assert_eq!(table.gammas(), vec![0, 0, 0]);
    }

    #[test]
    fn mixed_group_count() {
        let table = enumerate_repair_groups(&StorageSystem::mds_core(&[2, 0, 0], 3, int(1)).unwrap());
        assert_eq!(table.gamma(1), 7);
        assert_eq!(table.gamma(2), 7);
        // f1: two singletons plus the single all-coded triple
        assert_eq!(table.gamma(0), 3);
    }

    #[test]
    fn delta_indicator() {
        let table = enumerate_repair_groups(&example_one());
        assert!(table.delta(0, 2, NodeId(2)).unwrap());
        assert!(!table.delta(0, 2, NodeId(0)).unwrap());
        assert!(table.delta(1, 0, NodeId(3)).unwrap());
        assert!(matches!(table.delta(2, 0, NodeId(0)), Err(Error::Index(_))));
        assert!(matches!(table.delta(0, 3, NodeId(0)), Err(Error::Index(_))));
        assert!(matches!(table.delta(0, 0, NodeId(4)), Err(Error::Index(_))));
    }

    #[test]
    fn all_coded_counts() {
        for c in 0..8usize {
            for k in 1..5usize {
                let sys = StorageSystem::mds_core(&vec![0; k], c, int(1)).unwrap();
                let table = enumerate_repair_groups(&sys);
                let expected = crate::numeric::binomial(c, k);
                for file in 0..k {
                    assert_eq!(num_bigint::BigInt::from(table.gamma(file)), expected);
                    for node in sys.coded_nodes() {
                        let hits = table.groups(file).iter().filter(|g| g.contains(node)).count();
                        let per_node = if c >= k { crate::numeric::binomial(c - 1, k - 1) } else { 0.into() };
                        assert_eq!(num_bigint::BigInt::from(hits), per_node);
                    }
                }
            }
        }
    }

    #[test]
    fn groups_are_minimal_and_distinct() {
        let table = enumerate_repair_groups(&StorageSystem::mds_core(&[2, 1, 3], 4, int(1)).unwrap());
        for file in 0..3 {
            let groups = table.groups(file);
            for (i, a) in groups.iter().enumerate() {
                for (j, b) in groups.iter().enumerate() {
                    if i != j {
                        assert_ne!(a.members, b.members);
                        assert!(!a.members.iter().all(|n| b.contains(*n)), "{a} within {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn relabeling_files_permutes_table() {
        let counts = [2usize, 1, 3];
        let base = enumerate_repair_groups(&StorageSystem::mds_core(&counts, 3, int(1)).unwrap());
        let base_sys = StorageSystem::mds_core(&counts, 3, int(1)).unwrap();
        // file order (2, 0, 1)
        let perm = [2usize, 0, 1];
        let permuted_counts: Vec<usize> = perm.iter().map(|&f| counts[f]).collect();
        let sys = StorageSystem::mds_core(&permuted_counts, 3, int(1)).unwrap();
        let table = enumerate_repair_groups(&sys);

        // map every node of the permuted system back to the base system
        let mut node_map = vec![NodeId(0); sys.node_count()];
        for (new_file, &old_file) in perm.iter().enumerate() {
            for (a, b) in sys.systematic_nodes(new_file).into_iter().zip(base_sys.systematic_nodes(old_file)) {
                node_map[a.0] = b;
            }
        }
        for (a, b) in sys.coded_nodes().into_iter().zip(base_sys.coded_nodes()) {
            node_map[a.0] = b;
        }

        for (new_file, &old_file) in perm.iter().enumerate() {
            let mut mapped: Vec<Vec<NodeId>> = table
                .groups(new_file)
                .iter()
                .map(|g| {
                    let mut m: Vec<NodeId> = g.members.iter().map(|n| node_map[n.0]).collect();
                    m.sort();
                    m
                })
                .collect();
            let mut expected = member_sets(&base, old_file);
            mapped.sort();
            expected.sort();
            assert_eq!(mapped, expected);
        }
    }
}
