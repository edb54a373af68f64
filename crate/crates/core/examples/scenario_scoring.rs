//! Generate a seeded economy and score poison tracing against its ground truth.

use std::collections::BTreeSet;

use fogtrace::ledger::Address;
use fogtrace::scenario::{address_owners, generate_scenario, truth_descendants, ScenarioSpec, SetScore};
use fogtrace::tracer::{build_graph, taint_trace, TaintPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec { blocks: 20, mixer: true, chain_hop: true, ..ScenarioSpec::default() };
    let scenario = generate_scenario(&spec)?;
    let graph = build_graph(scenario.chain.blocks());
    println!("{} blocks, {} txs, {} addresses", scenario.chain.blocks().len(), graph.txs().len(), graph.addresses().len());

    for (source, owner) in address_owners(&scenario.truth) {
        let found: BTreeSet<Address> =
            taint_trace(&graph, &source, TaintPolicy::Poison, None)?.addresses.keys().copied().collect();
        let onchain = SetScore::compare(&found, &truth_descendants(&scenario.truth, &source, false));
        let linked = SetScore::compare(&found, &truth_descendants(&scenario.truth, &source, true));
        println!(
            "{owner:>14} {source}: on-chain recall {:.2} precision {:.2}, with off-chain links recall {:.2}",
            onchain.recall(),
            onchain.precision(),
            linked.recall()
        );
    }
    Ok(())
}
