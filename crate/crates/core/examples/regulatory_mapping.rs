//! Register identities, reveal one under a warrant, and detect a tampered audit log.

use std::collections::BTreeSet;

use ed25519_dalek::SigningKey;
use fogtrace::regmap::{verify_audit_chain, AnonymousId, Registry, Warrant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let authority = SigningKey::from_bytes(&[7; 32]);
    let mut registry = Registry::new(SigningKey::from_bytes(&[1; 32]), authority.verifying_key());
    let alice = AnonymousId::new("1AliceAnonymousAddress");
    let bob = AnonymousId::new("1BobAnonymousAddress");
    registry.register_mapping("Alice Smith", alice.clone(), 1)?;
    registry.register_mapping("Bob Jones", bob.clone(), 2)?;

    match registry.reveal_mapping(&alice, None, 5) {
        Ok(_) => println!("revealed without a warrant"),
        Err(e) => println!("no warrant: {e}"),
    }
    let warrant = Warrant::issue(&authority, "district-court", BTreeSet::from([alice.clone()]), 100)?;
    let (reveal, entry) = registry.reveal_mapping(&alice, Some(&warrant), 5)?;
    println!("{} is {} (audit entry {})", reveal.subject, reveal.real_identity, entry.seq);
    if let Err(e) = registry.reveal_mapping(&bob, Some(&warrant), 5) {
        println!("bob: {e}");
    }

    let mut log = registry.log().to_vec();
    println!("log of {}: {:?}", log.len(), verify_audit_chain(&log, None));
    log[1].subject = AnonymousId::new("1SomeoneElse");
    println!("after editing entry 1: {:?}", verify_audit_chain(&log, None));
    Ok(())
}
