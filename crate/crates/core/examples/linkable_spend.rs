//! Two LSAG signatures by the same key carry the same key image, whatever the ring.

use fogtrace::group::{Ristretto, ToySchnorr};
use fogtrace::lsag::{is_linked, lsag_keygen, lsag_sign, lsag_verify, KeyImageSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let group = Ristretto;
    let spender = lsag_keygen(&group, b"spender");
    let decoys: Vec<_> = (0..5).map(|i| *lsag_keygen(&group, format!("decoy-{i}").as_bytes()).public()).collect();

    let mut ring = decoys[..3].to_vec();
    ring.insert(1, *spender.public());
    let first = lsag_sign(&group, b"pay alice", &ring, 1, &spender, b"r1")?;

    let mut ring = decoys[2..].to_vec();
    ring.push(*spender.public());
    let second = lsag_sign(&group, b"pay bob", &ring, 3, &spender, b"r2")?;

    println!("first verifies: {}", lsag_verify(&group, b"pay alice", &first)?);
    println!("second verifies: {}", lsag_verify(&group, b"pay bob", &second)?);
    println!("linked: {}", is_linked(first.key_image(), second.key_image())?);

    let mut spent = KeyImageSet::new(group);
    println!("first spend accepted: {}", spent.insert(first.key_image())?);
    println!("second spend accepted: {}", spent.insert(second.key_image())?);

    // Same protocol over the order-11 toy group, small enough to check by hand.
    let toy = ToySchnorr::order_11();
    let kp = lsag_keygen(&toy, b"toy");
    let other = lsag_keygen(&toy, b"other");
    let sig = lsag_sign(&toy, b"m", &[*other.public(), *kp.public()], 1, &kp, b"t")?;
    println!("toy group: image {:?}, verifies {}", sig.key_image().point(), lsag_verify(&toy, b"m", &sig)?);
    Ok(())
}
