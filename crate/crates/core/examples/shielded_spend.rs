//! Spend a stealth note inside a ring of equal-value decoys.

use fogtrace::group::Ristretto;
use fogtrace::ledger::{
    build_shielded_spend, produce_block, scan_notes, Chain, Payment, Transaction, TransparentWallet, TxOutput,
};
use fogtrace::stealth::{derive_onetime_output, stealth_keygen};
use fogtrace::tracer::{build_graph, shielded_candidates};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let group = Ristretto;
    let holders: Vec<_> = (0..8).map(|i| stealth_keygen(&group, format!("holder-{i}").as_bytes())).collect();
    let notes = holders
        .iter()
        .enumerate()
        .map(|(i, k)| Ok(TxOutput::Stealth { meta: derive_onetime_output(&group, &k.address(), &[i as u8])?, amount: 50 }))
        .collect::<Result<Vec<_>, fogtrace::stealth::StealthError>>()?;
    let mut chain = Chain::with_genesis(notes)?;

    let spender = &holders[5];
    let note = scan_notes(spender, chain.state())[0].reference;
    let shop = TransparentWallet::from_seed(b"shop", 1);
    let tx = build_shielded_spend(spender, note, 5, &[Payment::transparent(shop.primary_address(), 48)], 2, chain.state(), b"spend")?;
    let txid = Transaction::Shielded(tx.clone()).txid();
    println!("ring: {:?}", tx.ring_member_refs.iter().map(|r| r.0).collect::<Vec<_>>());
    chain.push(produce_block(&[Transaction::Shielded(tx)], chain.state()).block)?;
    println!("shop balance {}", chain.state().balance(&shop.primary_address()));

    let graph = build_graph(chain.blocks());
    println!("anonymity set size {}", shielded_candidates(&graph, &txid)?.size());

    let again = build_shielded_spend(spender, note, 3, &[Payment::transparent(shop.primary_address(), 50)], 0, chain.state(), b"again");
    println!("second spend of the note: {}", again.map(|_| "built".to_string()).unwrap_or_else(|e| e.to_string()));
    Ok(())
}
