//! RSA-style trapdoor permutations and their extension to a common bit domain.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use super::RingError;
use crate::hashing::seeded_rng;

/// Smallest modulus size accepted by [`TrapdoorKeyPair::generate`].
pub const MIN_KEY_BITS: u64 = 16;

const DEFAULT_PUBLIC_EXPONENT: u32 = 65_537;
const MILLER_RABIN_ROUNDS: usize = 40;
const SMALL_PRIMES: [u32; 24] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Public half of a trapdoor permutation `m -> m^e mod n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingPublicKey {
    modulus: BigUint,
    public_exponent: BigUint,
}

impl RingPublicKey {
    pub fn new(modulus: BigUint, public_exponent: BigUint) -> Result<Self, RingError> {
        if modulus <= BigUint::one() {
            return Err(RingError::InvalidKey("modulus must exceed 1"));
        }
        if public_exponent <= BigUint::one() {
            return Err(RingError::InvalidKey("public exponent must exceed 1"));
        }
        Ok(Self { modulus, public_exponent })
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn public_exponent(&self) -> &BigUint {
        &self.public_exponent
    }

    /// Bit length of the modulus.
    pub fn bits(&self) -> u64 {
        self.modulus.bits()
    }

    /// The raw permutation on `[0, n)`.
    pub fn apply(&self, m: &BigUint) -> BigUint {
        m.modpow(&self.public_exponent, &self.modulus)
    }
}

/// A trapdoor keypair. The primes are kept when known so that the keypair can
/// be validated against `e * d = 1 mod phi(n)` exactly.
#[derive(Clone, PartialEq, Eq)]
pub struct TrapdoorKeyPair {
    public: RingPublicKey,
    secret_exponent: BigUint,
    primes: Option<(BigUint, BigUint)>,
}

impl std::fmt::Debug for TrapdoorKeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrapdoorKeyPair")
            .field("public", &self.public)
            .field("key_bits", &self.key_bits())
            .finish_non_exhaustive()
    }
}

impl TrapdoorKeyPair {
    /// Deterministically generates a keypair whose modulus has exactly `bits` bits.
    pub fn generate(bits: u64, seed: &[u8]) -> Result<Self, RingError> {
        if bits < MIN_KEY_BITS {
            return Err(RingError::BitsTooSmall { bits, min: MIN_KEY_BITS });
        }
        if bits % 2 != 0 {
            return Err(RingError::OddKeyBits(bits));
        }
        let mut rng = seeded_rng(seed);
        let e = BigUint::from(DEFAULT_PUBLIC_EXPONENT);
        loop {
            let p = random_prime(bits / 2, &mut rng);
            let q = random_prime(bits / 2, &mut rng);
            if p == q {
                continue;
            }
            let phi = (&p - 1u32) * (&q - 1u32);
            if !e.gcd(&phi).is_one() {
                continue;
            }
            let keypair = Self::from_primes(p, q, e.clone())?;
            debug_assert_eq!(keypair.key_bits(), bits);
            return Ok(keypair);
        }
    }

    /// Builds a keypair from two distinct primes and a public exponent.
    pub fn from_primes(p: BigUint, q: BigUint, e: BigUint) -> Result<Self, RingError> {
        if p == q {
            return Err(RingError::InvalidKey("primes must be distinct"));
        }
        let phi = (&p - 1u32) * (&q - 1u32);
        let d = e
            .modinv(&phi)
            .ok_or(RingError::InvalidKey("public exponent is not invertible mod phi(n)"))?;
        let public = RingPublicKey::new(&p * &q, e)?;
        let keypair = Self { public, secret_exponent: d, primes: Some((p, q)) };
        keypair.validate()?;
        Ok(keypair)
    }

    /// Builds a keypair from externally supplied `(n, e, d)`.
    pub fn from_components(n: BigUint, e: BigUint, d: BigUint) -> Result<Self, RingError> {
        let public = RingPublicKey::new(n, e)?;
        let keypair = Self { public, secret_exponent: d, primes: None };
        keypair.validate()?;
        Ok(keypair)
    }

    /// Checks the keypair. With known primes this is exact; otherwise a fixed
    /// sample of points is round-tripped through the permutation.
    pub fn validate(&self) -> Result<(), RingError> {
        let n = self.public.modulus();
        if let Some((p, q)) = &self.primes {
            if &(p * q) != n || p == q || p.is_even() || q.is_even() {
                return Err(RingError::InvalidKey("modulus is not a product of the retained odd primes"));
            }
            let phi = (p - 1u32) * (q - 1u32);
            if !(self.public.public_exponent() * &self.secret_exponent % &phi).is_one() {
                return Err(RingError::InvalidKey("e * d != 1 mod phi(n)"));
            }
            return Ok(());
        }
        let mut rng = seeded_rng(b"fogtrace/trapdoor-validate");
        for i in 0u32..16 {
            let m = if i < 4 { BigUint::from(i + 2) % n } else { rng.gen_biguint_below(n) };
            if self.invert(&self.public.apply(&m)) != m {
                return Err(RingError::InvalidKey("trapdoor roundtrip failed"));
            }
        }
        Ok(())
    }

    pub fn public_key(&self) -> &RingPublicKey {
        &self.public
    }

    pub fn secret_exponent(&self) -> &BigUint {
        &self.secret_exponent
    }

    pub fn primes(&self) -> Option<(&BigUint, &BigUint)> {
        self.primes.as_ref().map(|(p, q)| (p, q))
    }

    pub fn key_bits(&self) -> u64 {
        self.public.bits()
    }

    /// The raw inverse permutation on `[0, n)`.
    pub fn invert(&self, y: &BigUint) -> BigUint {
        y.modpow(&self.secret_exponent, self.public.modulus())
    }
}

/// Extends `m -> m^e mod n` to a permutation of `[0, 2^domain_bits)`.
///
/// Values in the last partial block of width `n` are left fixed; everything
/// else is permuted within its own `n`-sized block.
pub fn extended_apply(pk: &RingPublicKey, m: &BigUint, domain_bits: u64) -> Result<BigUint, RingError> {
    extend(pk.modulus(), m, domain_bits, |r| pk.apply(r))
}

/// Inverse of [`extended_apply`], using the secret exponent.
pub fn extended_invert(kp: &TrapdoorKeyPair, y: &BigUint, domain_bits: u64) -> Result<BigUint, RingError> {
    extend(kp.public_key().modulus(), y, domain_bits, |r| kp.invert(r))
}

fn extend(
    n: &BigUint,
    value: &BigUint,
    domain_bits: u64,
    permute: impl Fn(&BigUint) -> BigUint,
) -> Result<BigUint, RingError> {
    let domain = BigUint::one() << domain_bits;
    if &domain <= n {
        return Err(RingError::DomainTooSmall { domain_bits, modulus_bits: n.bits() });
    }
    if value >= &domain {
        return Err(RingError::ValueOutOfDomain { domain_bits });
    }
    let (q, r) = value.div_rem(n);
    if (&q + 1u32) * n <= domain {
        Ok(q * n + permute(&r))
    } else {
        Ok(value.clone())
    }
}

fn random_prime(bits: u64, rng: &mut impl RngCore) -> BigUint {
    assert!(bits >= 3, "prime size too small");
    loop {
        let mut candidate = rng.gen_biguint(bits);
        // Top two bits set so that the product of two such primes has exactly 2*bits bits.
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(bits - 2, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, rng) {
            return candidate;
        }
    }
}

/// Miller-Rabin with trial division by small primes first.
pub(crate) fn is_probable_prime(n: &BigUint, rng: &mut impl RngCore) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for &p in &SMALL_PRIMES {
        let p = BigUint::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    if n.is_even() {
        return n == &two;
    }
    let n_minus_one = n - 1u32;
    let trailing = n_minus_one.trailing_zeros().unwrap_or(0);
    let odd_part = &n_minus_one >> trailing;
    'witness: for _ in 0..MILLER_RABIN_ROUNDS {
        let a = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = a.modpow(&odd_part, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..trailing {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_key() -> TrapdoorKeyPair {
        TrapdoorKeyPair::from_components(33u32.into(), 3u32.into(), 7u32.into()).unwrap()
    }

    fn big(v: u32) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn toy_key_passes_validation() {
        // e*d = 21 = 1 mod phi(33) = 20
        toy_key();
        let from_primes = TrapdoorKeyPair::from_primes(big(3), big(11), big(3)).unwrap();
        assert_eq!(from_primes.secret_exponent(), &big(7));
    }

    #[test]
    fn wrong_secret_exponent_is_rejected() {
        let err = TrapdoorKeyPair::from_components(big(33), big(3), big(9)).unwrap_err();
        assert!(matches!(err, RingError::InvalidKey(_)));
    }

    #[test]
    fn keygen_boundaries() {
        assert!(matches!(TrapdoorKeyPair::generate(8, &[1]), Err(RingError::BitsTooSmall { bits: 8, .. })));
        assert!(matches!(TrapdoorKeyPair::generate(17, &[1]), Err(RingError::OddKeyBits(17))));
        let kp = TrapdoorKeyPair::generate(16, &[0x01]).unwrap();
        assert_eq!(kp.key_bits(), 16);
        assert_eq!(kp.invert(&kp.public_key().apply(&big(5))), big(5));
        let (p, q) = kp.primes().unwrap();
        assert_eq!(&(p * q), kp.public_key().modulus());
        assert_ne!(p, q);
    }

    #[test]
    fn keygen_is_deterministic() {
        let a = TrapdoorKeyPair::generate(64, b"seed").unwrap();
        let b = TrapdoorKeyPair::generate(64, b"seed").unwrap();
        let c = TrapdoorKeyPair::generate(64, b"other").unwrap();
        assert_eq!(a, b);
        assert_ne!(a.public_key(), c.public_key());
    }

    #[test]
    fn extended_apply_vectors() {
        let kp = toy_key();
        let pk = kp.public_key();
        assert_eq!(extended_apply(pk, &big(2), 8).unwrap(), big(8));
        assert_eq!(extended_apply(pk, &big(4), 8).unwrap(), big(31));
        // 250 = 7*33 + 19 and 8*33 = 264 > 256, so it sits in the fixed tail.
        assert_eq!(extended_apply(pk, &big(250), 8).unwrap(), big(250));
        assert_eq!(extended_invert(&kp, &big(8), 8).unwrap(), big(2));
        assert_eq!(extended_invert(&kp, &big(250), 8).unwrap(), big(250));
    }

    #[test]
    fn extended_domain_errors() {
        let kp = toy_key();
        assert!(matches!(
            extended_apply(kp.public_key(), &big(1), 5),
            Err(RingError::DomainTooSmall { domain_bits: 5, modulus_bits: 6 })
        ));
        assert!(matches!(
            extended_apply(kp.public_key(), &big(256), 8),
            Err(RingError::ValueOutOfDomain { domain_bits: 8 })
        ));
    }

    #[test]
    fn extended_roundtrip_exhaustive_toy() {
        let kp = toy_key();
        for m in 0u32..256 {
            let y = extended_apply(kp.public_key(), &big(m), 8).unwrap();
            assert_eq!(extended_invert(&kp, &y, 8).unwrap(), big(m));
        }
    }

    #[test]
    fn primality_agrees_with_trial_division() {
        let mut rng = seeded_rng(b"mr");
        for n in 0u32..2000 {
            let naive = n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0);
            assert_eq!(is_probable_prime(&big(n), &mut rng), naive, "n = {n}");
        }
    }
}
