//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the library's permutation, ring equation or LSAG
//! verification code; they are rebuilt from their definitions so that the
//! tests compare two separate computations.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fogtrace::group::{Group, ToyElement, ToySchnorr};
use fogtrace::ledger::{Address, OutPoint};
use fogtrace::lsag::{key_image_base, LsagSignature};
use fogtrace::ring::RingSignature;
use fogtrace::scenario::{TruthHolder, TruthRecord};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};

fn be_bytes(value: &BigUint, width: usize) -> Vec<u8> {
    let mut out = vec![0u8; width];
    if !value.is_zero() {
        let raw = value.to_bytes_be();
        out[width - raw.len()..].copy_from_slice(&raw);
    }
    out
}

/// Round function: SHA-256 stream over `key || round || R` (plus a counter
/// for blocks past the first), cut to `half` bits.
fn feistel_round(key: &[u8], round: u8, right: &BigUint, half: u64) -> BigUint {
    let width = half.div_ceil(8) as usize;
    let r = be_bytes(right, width);
    let mut stream = Vec::new();
    let mut counter = 0u32;
    while stream.len() < width {
        let mut h = Sha256::new();
        h.update(key);
        h.update([round]);
        h.update(&r);
        if counter > 0 {
            h.update(counter.to_be_bytes());
        }
        stream.extend_from_slice(&h.finalize());
        counter += 1;
    }
    stream.truncate(width);
    BigUint::from_bytes_be(&stream) % (BigUint::one() << half)
}

pub fn feistel_encrypt(key: &[u8], block: &BigUint, bits: u64) -> BigUint {
    let half = bits / 2;
    let modulus = BigUint::one() << half;
    let (mut l, mut r) = (block / &modulus, block % &modulus);
    for round in 0..4u8 {
        let f = feistel_round(key, round, &r, half);
        (l, r) = (r, l ^ f);
    }
    l * modulus + r
}

/// `m = q*n + r` maps to `q*n + r^e mod n` when the whole block `[q*n, (q+1)*n)`
/// fits below `2^b`, and to itself otherwise.
pub fn extended_rsa(n: &BigUint, exponent: &BigUint, m: &BigUint, bits: u64) -> BigUint {
    let q = m / n;
    let r = m % n;
    if (&q + 1u32) * n <= BigUint::one() << bits {
        q * n + r.modpow(exponent, n)
    } else {
        m.clone()
    }
}

/// Repeated multiplication, for toy moduli only.
pub fn naive_pow(base: u64, exponent: u64, modulus: u64) -> u64 {
    (0..exponent).fold(1 % modulus, |acc, _| acc * base % modulus)
}

pub fn message_key(message: &[u8]) -> Vec<u8> {
    Sha256::digest(message).to_vec()
}

/// Recombines the ring from scratch and returns the value it lands on.
pub fn ring_close(message: &[u8], sig: &RingSignature) -> BigUint {
    let bits = u64::from(sig.domain_bits());
    let key = message_key(message);
    sig.ring().iter().zip(sig.x_values()).fold(sig.glue().clone(), |c, (pk, x)| {
        let y = extended_rsa(pk.modulus(), pk.public_exponent(), x, bits);
        feistel_encrypt(&key, &(c ^ y), bits)
    })
}

/// Discrete-log table of the toy group: element value -> exponent.
pub fn dlog_table(group: &ToySchnorr) -> BTreeMap<u64, u64> {
    let g = group.generator().0;
    (0..group.order()).map(|k| (naive_pow(g, k, group.modulus()), k)).collect()
}

/// Toy-group LSAG verification done entirely in the exponent.
///
/// Every point is replaced by its discrete log, the commitments
/// `L = s + c*x` and `R = s*h + c*i` are formed mod `q`, and only then turned
/// back into elements to be hashed into the next challenge.
pub fn dlog_verify(group: &ToySchnorr, message: &[u8], sig: &LsagSignature<ToySchnorr>) -> bool {
    let table = dlog_table(group);
    let (p, q, g) = (group.modulus(), group.order(), group.generator().0);
    let log = |e: &ToyElement| table[&e.0];
    let image = log(sig.key_image().point());
    if image == 0 {
        return false;
    }
    let mut c = sig.c1().0;
    for (member, s) in sig.ring().iter().zip(sig.responses()) {
        let x = log(member);
        let h = log(&key_image_base(group, member));
        let l = (s.0 + c * x) % q;
        let r = (s.0 * h + c * image) % q;
        c = toy_challenge(group, message, naive_pow(g, l, p), naive_pow(g, r, p));
    }
    c == sig.c1().0
}

fn toy_challenge(group: &ToySchnorr, message: &[u8], l: u64, r: u64) -> u64 {
    let width = group.encode_point(&ToyElement(1)).len();
    let point = |v: u64| v.to_be_bytes()[8 - width..].to_vec();
    let mut data = b"fogtrace/lsag".to_vec();
    data.extend_from_slice(&(message.len() as u32).to_be_bytes());
    data.extend_from_slice(message);
    for v in [l, r] {
        data.extend_from_slice(&(width as u16).to_be_bytes());
        data.extend_from_slice(&point(v));
    }
    let digest = Sha256::digest(&data);
    digest.iter().fold(0u64, |acc, &b| (acc * 256 + u64::from(b)) % group.order())
}

/// Every address reachable from `source` along some spend path, found by
/// enumerating the paths one by one. Returns the addresses and the number of
/// paths walked; gives up (None) past `budget` paths.
pub fn path_enumeration(records: &[TruthRecord], source: &Address, budget: usize) -> Option<(BTreeSet<Address>, usize)> {
    let mut spender: BTreeMap<OutPoint, usize> = BTreeMap::new();
    let mut transfers = Vec::new();
    for record in records {
        if let TruthRecord::Transfer { spent, outputs, .. } = record {
            for op in spent {
                spender.insert(*op, transfers.len());
            }
            transfers.push(outputs);
        }
    }
    let seeds: Vec<OutPoint> = transfers
        .iter()
        .flat_map(|outputs| outputs.iter())
        .filter(|o| o.holder == TruthHolder::Address(*source))
        .map(|o| o.outpoint)
        .collect();

    let mut reached = BTreeSet::new();
    let mut paths = 0usize;
    // Each stack entry is one partial path, identified by its last output.
    let mut stack: Vec<OutPoint> = seeds;
    let holder_of: BTreeMap<OutPoint, TruthHolder> =
        transfers.iter().flat_map(|outputs| outputs.iter()).map(|o| (o.outpoint, o.holder)).collect();
    while let Some(op) = stack.pop() {
        paths += 1;
        if paths > budget {
            return None;
        }
        if let Some(TruthHolder::Address(a)) = holder_of.get(&op) {
            reached.insert(*a);
        }
        if let Some(&tx) = spender.get(&op) {
            stack.extend(transfers[tx].iter().map(|o| o.outpoint));
        }
    }
    Some((reached, paths))
}
