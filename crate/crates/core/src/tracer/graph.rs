use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::group::Group;
use crate::ledger::{Address, Amount, Block, LedgerGroup, OutPoint, ShieldedRef, Transaction, TxId, TxOutput};
use crate::regmap::AnonymousId;

/// Who an output is paid to, as far as the chain reveals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Holder {
    Address(Address),
    Note(ShieldedRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxKind {
    Mint,
    Transparent,
    Shielded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphOutput {
    pub outpoint: OutPoint,
    pub holder: Holder,
    pub amount: Amount,
    pub height: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphTx {
    pub txid: TxId,
    pub height: u64,
    pub kind: TxKind,
    /// Transparent inputs that resolved to known outputs.
    pub inputs: Vec<OutPoint>,
    /// Ring members of a shielded spend.
    pub ring: Vec<ShieldedRef>,
    pub outputs: Vec<OutPoint>,
    pub fee: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNote {
    pub reference: ShieldedRef,
    pub outpoint: OutPoint,
    pub onetime_public: Vec<u8>,
    pub subject: AnonymousId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Address(Address),
    Note(ShieldedRef),
    Tx(TxId),
    FeeSink,
}

impl From<Holder> for Node {
    fn from(holder: Holder) -> Self {
        match holder {
            Holder::Address(a) => Node::Address(a),
            Holder::Note(r) => Node::Note(r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeKind {
    /// Transaction creates an output for a holder.
    Pay,
    /// Address spends one of its outputs into a transaction.
    Spend,
    /// Stealth output appears in a transaction's ring.
    RingMember,
    Fee,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: Node,
    pub to: Node,
    pub kind: EdgeKind,
    pub amount: Amount,
    pub height: u64,
}

/// Value-flow graph of a chain: holders, transactions and a fee sink.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TxGraph {
    txs: Vec<GraphTx>,
    tx_index: BTreeMap<TxId, usize>,
    outputs: BTreeMap<OutPoint, GraphOutput>,
    notes: Vec<GraphNote>,
    addresses: BTreeSet<Address>,
}

/// Builds the graph from blocks in chain order. Shielded outputs are numbered
/// in the same order the ledger registers them.
pub fn build_graph(blocks: &[Block]) -> TxGraph {
    let group = LedgerGroup::default();
    let mut graph = TxGraph::default();
    for block in blocks {
        for tx in block.transactions() {
            let txid = tx.txid();
            let (kind, inputs, ring) = match tx {
                Transaction::Mint(_) => (TxKind::Mint, Vec::new(), Vec::new()),
                Transaction::Transparent(t) => (
                    TxKind::Transparent,
                    t.inputs.iter().map(|i| i.prev).filter(|op| graph.outputs.contains_key(op)).collect(),
                    Vec::new(),
                ),
                Transaction::Shielded(t) => (
                    TxKind::Shielded,
                    Vec::new(),
                    t.ring_member_refs.iter().copied().filter(|r| (r.0 as usize) < graph.notes.len()).collect(),
                ),
            };
            let mut outputs = Vec::with_capacity(tx.outputs().len());
            for (index, output) in tx.outputs().iter().enumerate() {
                let outpoint = OutPoint { txid, index: index as u32 };
                let holder = match output {
                    TxOutput::Transparent { address, .. } => {
                        graph.addresses.insert(*address);
                        Holder::Address(*address)
                    }
                    TxOutput::Stealth { meta, .. } => {
                        let reference = ShieldedRef(graph.notes.len() as u64);
                        graph.notes.push(GraphNote {
                            reference,
                            outpoint,
                            onetime_public: group.encode_point(&meta.onetime_public),
                            subject: AnonymousId::for_stealth(meta),
                        });
                        Holder::Note(reference)
                    }
                };
                graph.outputs.insert(
                    outpoint,
                    GraphOutput { outpoint, holder, amount: output.amount(), height: block.height() },
                );
                outputs.push(outpoint);
            }
            graph.tx_index.insert(txid, graph.txs.len());
            graph.txs.push(GraphTx { txid, height: block.height(), kind, inputs, ring, outputs, fee: tx.fee() });
        }
    }
    graph
}

impl TxGraph {
    pub fn txs(&self) -> &[GraphTx] {
        &self.txs
    }

    pub fn tx(&self, txid: &TxId) -> Option<&GraphTx> {
        self.tx_index.get(txid).map(|&i| &self.txs[i])
    }

    pub fn output(&self, outpoint: &OutPoint) -> Option<&GraphOutput> {
        self.outputs.get(outpoint)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &GraphOutput> {
        self.outputs.values()
    }

    pub fn note(&self, reference: ShieldedRef) -> Option<&GraphNote> {
        self.notes.get(reference.0 as usize)
    }

    pub fn notes(&self) -> &[GraphNote] {
        &self.notes
    }

    pub fn addresses(&self) -> &BTreeSet<Address> {
        &self.addresses
    }

    pub fn contains_address(&self, address: &Address) -> bool {
        self.addresses.contains(address)
    }

    fn note_amount(&self, reference: ShieldedRef) -> Amount {
        self.note(reference).and_then(|n| self.outputs.get(&n.outpoint)).map_or(0, |o| o.amount)
    }

    /// Addresses, notes, transactions, then the fee sink if any fee was paid.
    pub fn nodes(&self) -> Vec<Node> {
        let mut nodes: Vec<Node> = self.addresses.iter().map(|a| Node::Address(*a)).collect();
        nodes.extend(self.notes.iter().map(|n| Node::Note(n.reference)));
        nodes.extend(self.txs.iter().map(|t| Node::Tx(t.txid)));
        if self.txs.iter().any(|t| t.fee > 0) {
            nodes.push(Node::FeeSink);
        }
        nodes
    }

    /// Edges per transaction in chain order: spends or ring members, then
    /// payments, then the fee.
    pub fn edges(&self) -> Vec<Edge> {
        let mut edges = Vec::new();
        for tx in &self.txs {
            let to = Node::Tx(tx.txid);
            for input in &tx.inputs {
                let spent = &self.outputs[input];
                edges.push(Edge { from: spent.holder.into(), to, kind: EdgeKind::Spend, amount: spent.amount, height: tx.height });
            }
            for member in &tx.ring {
                let amount = self.note_amount(*member);
                edges.push(Edge { from: Node::Note(*member), to, kind: EdgeKind::RingMember, amount, height: tx.height });
            }
            for outpoint in &tx.outputs {
                let out = &self.outputs[outpoint];
                edges.push(Edge { from: to, to: out.holder.into(), kind: EdgeKind::Pay, amount: out.amount, height: tx.height });
            }
            if tx.fee > 0 {
                edges.push(Edge { from: to, to: Node::FeeSink, kind: EdgeKind::Fee, amount: tx.fee, height: tx.height });
            }
        }
        edges
    }

    /// Graphviz rendering; identical graphs render to identical text.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph fogtrace {\n  rankdir=LR;\n");
        for node in self.nodes() {
            let (shape, label) = match node {
                Node::Address(_) => ("ellipse", short(&node_id(&node))),
                Node::Note(r) => ("diamond", r.to_string()),
                Node::Tx(_) => ("box", short(&node_id(&node))),
                Node::FeeSink => ("octagon", "fees".to_string()),
            };
            let _ = writeln!(out, "  \"{}\" [shape={shape}, label=\"{label}\"];", node_id(&node));
        }
        for edge in self.edges() {
            let style = match edge.kind {
                EdgeKind::Pay => "solid",
                EdgeKind::Spend => "bold",
                EdgeKind::RingMember => "dashed",
                EdgeKind::Fee => "dotted",
            };
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [style={style}, label=\"{} @{}\"];",
                node_id(&edge.from),
                node_id(&edge.to),
                edge.amount,
                edge.height
            );
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) fn node_id(node: &Node) -> String {
    match node {
        Node::Address(a) => a.encode(),
        Node::Note(r) => format!("note{}", r.0),
        Node::Tx(t) => format!("tx:{t}"),
        Node::FeeSink => "fee-sink".to_string(),
    }
}

fn short(text: &str) -> String {
    text.chars().take(12).collect()
}
