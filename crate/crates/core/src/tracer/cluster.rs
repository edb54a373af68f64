use std::collections::{BTreeMap, BTreeSet};

use super::graph::{Holder, TxGraph};
use crate::ledger::Address;

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        match self.rank[a].cmp(&self.rank[b]) {
            std::cmp::Ordering::Less => self.parent[a] = b,
            std::cmp::Ordering::Greater => self.parent[b] = a,
            std::cmp::Ordering::Equal => {
                self.parent[b] = a;
                self.rank[a] += 1;
            }
        }
    }
}

/// Common-input-ownership heuristic: addresses whose outputs are spent
/// together in one transparent transaction share an owner. Returns the
/// transitive closure as a partition of every address in the graph, each
/// cluster sorted, clusters ordered by their smallest member.
pub fn cluster_common_input(graph: &TxGraph) -> Vec<BTreeSet<Address>> {
    let addresses: Vec<Address> = graph.addresses().iter().copied().collect();
    let index: BTreeMap<Address, usize> = addresses.iter().enumerate().map(|(i, a)| (*a, i)).collect();
    let mut sets = DisjointSets::new(addresses.len());
    for tx in graph.txs() {
        let mut owners = tx.inputs.iter().filter_map(|op| match graph.output(op)?.holder {
            Holder::Address(a) => index.get(&a).copied(),
            Holder::Note(_) => None,
        });
        if let Some(first) = owners.next() {
            for other in owners {
                sets.union(first, other);
            }
        }
    }
    let mut clusters: BTreeMap<usize, BTreeSet<Address>> = BTreeMap::new();
    for (i, address) in addresses.iter().enumerate() {
        clusters.entry(sets.find(i)).or_default().insert(*address);
    }
    let mut out: Vec<_> = clusters.into_values().collect();
    out.sort();
    out
}
