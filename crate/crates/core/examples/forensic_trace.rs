//! Poison and haircut taint from one address, plus common-input clustering.

use fogtrace::ledger::{build_transparent_tx, produce_block, Chain, Transaction, TransparentWallet, TxOutput};
use fogtrace::tracer::{build_graph, cluster_common_input, taint_trace, TaintPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let wallet = |name: &str| TransparentWallet::from_seed(name.as_bytes(), 1);
    let (thief, b, c, d) = (wallet("thief"), wallet("b"), wallet("c"), wallet("d"));
    let mut chain = Chain::with_genesis(vec![
        TxOutput::Transparent { address: thief.primary_address(), amount: 100 },
        TxOutput::Transparent { address: b.primary_address(), amount: 20 },
    ])?;
    let split = build_transparent_tx(&thief, &[(b.primary_address(), 60), (c.primary_address(), 40)], 0, chain.state())?;
    chain.push(produce_block(&[Transaction::Transparent(split)], chain.state()).block)?;
    let onward = build_transparent_tx(&b, &[(d.primary_address(), 50)], 2, chain.state())?;
    chain.push(produce_block(&[Transaction::Transparent(onward)], chain.state()).block)?;

    let graph = build_graph(chain.blocks());
    for policy in [TaintPolicy::Poison, TaintPolicy::Haircut] {
        let report = taint_trace(&graph, &thief.primary_address(), policy, None)?;
        println!("{}:", policy.name());
        for (name, w) in [("b", &b), ("c", &c), ("d", &d)] {
            println!("  {name} {}", report.fraction(&w.primary_address()));
        }
        println!("  fee sink {}", report.fee_sink);
    }
    for cluster in cluster_common_input(&graph) {
        println!("cluster of {}", cluster.len());
    }
    std::fs::write(std::env::temp_dir().join("forensic_trace.dot"), graph.to_dot())?;
    Ok(())
}
