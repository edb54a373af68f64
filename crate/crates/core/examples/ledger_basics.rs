//! Transparent payments on a fresh chain, and what happens to a double spend.

use fogtrace::ledger::{build_transparent_tx, produce_block, Chain, Transaction, TransparentWallet, TxOutput};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alice = TransparentWallet::from_seed(b"alice", 1);
    let bob = TransparentWallet::from_seed(b"bob", 1);
    let carol = TransparentWallet::from_seed(b"carol", 1);
    let mut chain = Chain::with_genesis(vec![TxOutput::Transparent { address: alice.primary_address(), amount: 100 }])?;
    println!("alice {} holds {}", alice.primary_address(), chain.state().balance(&alice.primary_address()));

    let to_bob = build_transparent_tx(&alice, &[(bob.primary_address(), 60)], 1, chain.state())?;
    // Built from the same view, so it spends the same coin.
    let to_carol = build_transparent_tx(&alice, &[(carol.primary_address(), 60)], 1, chain.state())?;
    let produced = produce_block(&[Transaction::Transparent(to_bob), Transaction::Transparent(to_carol)], chain.state());
    for (txid, reason) in &produced.rejected {
        println!("rejected {txid}: {reason}");
    }
    chain.push(produced.block)?;

    let state = chain.state();
    for (name, wallet) in [("alice", &alice), ("bob", &bob), ("carol", &carol)] {
        println!("{name}: {}", state.balance(&wallet.primary_address()));
    }
    println!("fees {}, supply {}, height {}", state.fees_collected(), state.total_supply(), chain.height());

    let replayed = Chain::from_store_str(&chain.to_store_string())?;
    println!("replay digest matches: {}", replayed.state().digest() == state.digest());
    Ok(())
}
