//! A sender pays a published stealth address; only the recipient can find and spend the output.

use fogtrace::group::{Group, Ristretto};
use fogtrace::stealth::{derive_onetime_output, recover_onetime_secret, scan_output, stealth_keygen};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let group = Ristretto;
    let victor = stealth_keygen(&group, b"victor");
    let eve = stealth_keygen(&group, b"eve");

    let published = victor.address();
    let meta = derive_onetime_output(&group, &published, b"payment-1")?;
    println!("one-time key: {}", hex::encode(group.encode_point(&meta.onetime_public)));
    println!("victor scans: {:?}", scan_output(&group, &meta, &victor));
    println!("eve scans: {:?}", scan_output(&group, &meta, &eve));

    let x = recover_onetime_secret(&group, &meta, &victor)?;
    println!("x*G equals the one-time key: {}", group.mul_generator(&x) == meta.onetime_public);
    println!("eve recovers a secret: {}", recover_onetime_secret(&group, &meta, &eve).is_ok());
    Ok(())
}
