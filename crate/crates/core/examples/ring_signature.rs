//! Sign a message for a ring of four RSA keys and verify it without learning the signer.

use fogtrace::ring::{ring_sign, ring_verify, RingPublicKey, TrapdoorKeyPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let keys: Vec<TrapdoorKeyPair> =
        (0..4).map(|i| TrapdoorKeyPair::generate(512, format!("member-{i}").as_bytes())).collect::<Result<_, _>>()?;
    let ring: Vec<RingPublicKey> = keys.iter().map(|k| k.public_key().clone()).collect();

    let message = b"the committee approves the budget";
    let sig = ring_sign(message, &ring, 2, &keys[2], b"nonce")?;
    println!("ring of {}, domain {} bits, {} bytes encoded", ring.len(), sig.domain_bits(), sig.to_bytes().len());
    println!("verifies: {}", ring_verify(message, &sig)?);
    println!("verifies a different message: {}", ring_verify(b"the committee rejects the budget", &sig)?);
    Ok(())
}
