//! Modular arithmetic, toy RSA keys, the repeated-squaring powers sequence,
//! decryption of the least significant bit from that sequence, and a classical
//! semiprime factoring routine used as the trapdoor oracle.
//!
//! Key material is held in arbitrary-precision integers. Factoring and
//! primality testing are restricted to moduli that fit in 64 bits.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumError {
    #[error("modulus must be at least 2")]
    ModulusTooSmall,
    #[error("bits per prime must be at least 2, got {0}")]
    BitsTooSmall(u32),
    #[error("bits per prime must be at most 63, got {0}")]
    BitsTooLarge(u32),
    #[error("no valid key at this size ({bits} bits per prime)")]
    NoValidKey { bits: u32 },
    #[error("value {value} is outside Z_{modulus}")]
    OutOfRange { value: BigUint, modulus: BigUint },
    #[error("prime input {0} has no nontrivial factorization")]
    PrimeInput(BigUint),
    #[error("factoring input must be at least 4, got {0}")]
    FactorInputTooSmall(BigUint),
    #[error("factoring is limited to 64-bit moduli")]
    FactorInputTooLarge,
    #[error("factoring budget exhausted for {0}")]
    FactorBudgetExhausted(BigUint),
    #[error("{e} is not invertible modulo {phi}")]
    NotInvertible { e: BigUint, phi: BigUint },
    #[error("secret exponent needs {needed} powers but only {available} are available")]
    NotEnoughPowers { needed: u64, available: usize },
    #[error("invalid key: {0}")]
    InvalidKey(String),
    #[error("malformed hex string {0:?}")]
    BadHex(String),
}

pub type Result<T> = std::result::Result<T, NumError>;

/// Number of bits needed to write `value`, i.e. `ceil(log2(value + 1))`.
pub fn bit_length(value: &BigUint) -> u64 {
    value.bits()
}

/// `ceil(log2(value))` for `value >= 1`.
pub fn ceil_log2(value: &BigUint) -> u64 {
    if value <= &BigUint::one() {
        0
    } else {
        (value - 1u32).bits()
    }
}

/// Lowercase hex without prefix or leading zeros ("0" for zero).
pub fn to_hex(value: &BigUint) -> String {
    value.to_str_radix(16)
}

pub fn from_hex(text: &str) -> Result<BigUint> {
    let valid = !text.is_empty()
        && text.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
        && (text == "0" || !text.starts_with('0'));
    if !valid {
        return Err(NumError::BadHex(text.to_string()));
    }
    BigUint::parse_bytes(text.as_bytes(), 16).ok_or_else(|| NumError::BadHex(text.to_string()))
}

/// `base^exponent mod modulus` by left-to-right square-and-multiply.
/// `0^0` is taken to be 1.
pub fn mod_pow(base: &BigUint, exponent: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    if modulus < &BigUint::from(2u32) {
        return Err(NumError::ModulusTooSmall);
    }
    let base = base % modulus;
    let mut acc = BigUint::one();
    for bit in (0..exponent.bits()).rev() {
        acc = (&acc * &acc) % modulus;
        if exponent.bit(bit) {
            acc = (&acc * &base) % modulus;
        }
    }
    Ok(acc)
}

/// Bezout coefficients: returns `(g, s, t)` with `g = gcd(a, b) >= 0` and
/// `g = s*a + t*b`.
pub fn extended_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let (mut old_r, mut r) = (a.clone(), b.clone());
    let (mut old_s, mut s) = (BigInt::one(), BigInt::zero());
    let (mut old_t, mut t) = (BigInt::zero(), BigInt::one());
    while !r.is_zero() {
        let quotient = old_r.div_floor(&r);
        let next_r = &old_r - &quotient * &r;
        old_r = std::mem::replace(&mut r, next_r);
        let next_s = &old_s - &quotient * &s;
        old_s = std::mem::replace(&mut s, next_s);
        let next_t = &old_t - &quotient * &t;
        old_t = std::mem::replace(&mut t, next_t);
    }
    if old_r.sign() == Sign::Minus {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Inverse of `value` modulo `modulus`, if it exists.
pub fn mod_inverse(value: &BigUint, modulus: &BigUint) -> Option<BigUint> {
    let m = BigInt::from(modulus.clone());
    let (g, s, _) = extended_gcd(&BigInt::from(value.clone()), &m);
    if !g.is_one() {
        return None;
    }
    s.mod_floor(&m).to_biguint()
}

/// Toy RSA key. `p < q` by construction in [`keygen`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsaKey {
    pub p: BigUint,
    pub q: BigUint,
    pub modulus: BigUint,
    pub public_exponent: BigUint,
    pub secret_exponent: BigUint,
    /// Bit length of the modulus.
    pub bits: u64,
}

impl RsaKey {
    pub fn phi(&self) -> BigUint {
        (&self.p - 1u32) * (&self.q - 1u32)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(NumError::InvalidKey(msg.to_string()));
        let (p, q) = match (self.p.to_u64(), self.q.to_u64()) {
            (Some(p), Some(q)) => (p, q),
            _ => return bad("primes exceed 64 bits"),
        };
        if !is_prime_u64(p) || !is_prime_u64(q) {
            return bad("p and q must be prime");
        }
        if p == q {
            return bad("p and q must differ");
        }
        if self.modulus != &self.p * &self.q {
            return bad("N != p*q");
        }
        let phi = self.phi();
        let one = BigUint::one();
        if !(self.public_exponent > one && self.public_exponent < phi) {
            return bad("e out of range");
        }
        if !(self.secret_exponent > one && self.secret_exponent < phi) {
            return bad("d out of range");
        }
        if !self.public_exponent.gcd(&phi).is_one() {
            return bad("gcd(e, phi) != 1");
        }
        if !((&self.public_exponent * &self.secret_exponent) % &phi).is_one() {
            return bad("e*d != 1 mod phi");
        }
        if self.bits != bit_length(&self.modulus) {
            return bad("bit length does not match N");
        }
        Ok(())
    }

    pub fn to_file(&self) -> KeyFile {
        KeyFile {
            p: to_hex(&self.p),
            q: to_hex(&self.q),
            modulus: to_hex(&self.modulus),
            e: to_hex(&self.public_exponent),
            d: to_hex(&self.secret_exponent),
            n: self.bits,
        }
    }

    pub fn from_file(file: &KeyFile) -> Result<Self> {
        let key = RsaKey {
            p: from_hex(&file.p)?,
            q: from_hex(&file.q)?,
            modulus: from_hex(&file.modulus)?,
            public_exponent: from_hex(&file.e)?,
            secret_exponent: from_hex(&file.d)?,
            bits: file.n,
        };
        key.validate()?;
        Ok(key)
    }
}

/// On-disk key layout; all integers are lowercase hex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyFile {
    pub p: String,
    pub q: String,
    #[serde(rename = "N")]
    pub modulus: String,
    pub e: String,
    pub d: String,
    pub n: u64,
}

/// Smallest `e >= 3` with `gcd(e, phi) = 1` and `e < phi`.
pub fn smallest_public_exponent(phi: &BigUint) -> Option<BigUint> {
    let mut e = BigUint::from(3u32);
    while &e < phi {
        if e.gcd(phi).is_one() {
            return Some(e);
        }
        e += 1u32;
    }
    None
}

const KEYGEN_ATTEMPTS: usize = 256;
const PRIME_DRAWS: usize = 4096;

fn random_prime(rng: &mut ChaCha8Rng, bits: u32) -> Option<u64> {
    let low = 1u64 << (bits - 1);
    let high = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
    (0..PRIME_DRAWS)
        .map(|_| rng.gen_range(low..=high))
        .find(|&candidate| is_prime_u64(candidate))
}

/// Deterministic key generation: both primes have exactly `bits_per_prime`
/// bits, `e` is the smallest admissible public exponent.
pub fn keygen(bits_per_prime: u32, seed: u64) -> Result<RsaKey> {
    if bits_per_prime < 2 {
        return Err(NumError::BitsTooSmall(bits_per_prime));
    }
    if bits_per_prime > 63 {
        return Err(NumError::BitsTooLarge(bits_per_prime));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..KEYGEN_ATTEMPTS {
        let (Some(a), Some(b)) = (random_prime(&mut rng, bits_per_prime), random_prime(&mut rng, bits_per_prime))
        else {
            continue;
        };
        if a == b {
            continue;
        }
        let (p, q) = (BigUint::from(a.min(b)), BigUint::from(a.max(b)));
        let phi = (&p - 1u32) * (&q - 1u32);
        let Some(e) = smallest_public_exponent(&phi) else {
            continue;
        };
        let d = mod_inverse(&e, &phi).expect("e coprime to phi");
        let modulus = &p * &q;
        let key = RsaKey { bits: bit_length(&modulus), p, q, modulus, public_exponent: e, secret_exponent: d };
        debug_assert!(key.validate().is_ok());
        return Ok(key);
    }
    Err(NumError::NoValidKey { bits: bits_per_prime })
}

/// `entries[0] = y`, `entries[t] = entries[t-1]^2 mod N`, with
/// `ceil(log2 N) + 1` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowersSequence {
    pub modulus: BigUint,
    pub entries: Vec<BigUint>,
}

impl PowersSequence {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Index of the first entry that breaks the squaring chain or leaves `Z_N`.
    pub fn first_violation(&self) -> Option<usize> {
        for (t, entry) in self.entries.iter().enumerate() {
            if entry >= &self.modulus {
                return Some(t);
            }
            if t > 0 {
                let prev = &self.entries[t - 1];
                if &((prev * prev) % &self.modulus) != entry {
                    return Some(t);
                }
            }
        }
        None
    }
}

pub fn powers_len(modulus: &BigUint) -> usize {
    ceil_log2(modulus) as usize + 1
}

pub fn powers(y: &BigUint, modulus: &BigUint) -> Result<PowersSequence> {
    if modulus < &BigUint::from(2u32) {
        return Err(NumError::ModulusTooSmall);
    }
    if y >= modulus {
        return Err(NumError::OutOfRange { value: y.clone(), modulus: modulus.clone() });
    }
    let len = powers_len(modulus);
    let mut entries = Vec::with_capacity(len);
    entries.push(y.clone());
    for t in 1..len {
        let prev = &entries[t - 1];
        entries.push((prev * prev) % modulus);
    }
    Ok(PowersSequence { modulus: modulus.clone(), entries })
}

/// Least significant bit of the product of the powers selected by the set
/// bits of `d`. With `ps = powers(x^e mod N)` and the matching secret `d`
/// this is `x mod 2`.
pub fn decrypt_lsb(ps: &PowersSequence, modulus: &BigUint, d: &BigUint) -> Result<bool> {
    if modulus < &BigUint::from(2u32) {
        return Err(NumError::ModulusTooSmall);
    }
    let needed = d.bits();
    if needed > ps.entries.len() as u64 {
        return Err(NumError::NotEnoughPowers { needed, available: ps.entries.len() });
    }
    let mut acc = BigUint::one() % modulus;
    for t in 0..needed {
        if d.bit(t) {
            acc = (&acc * &ps.entries[t as usize]) % modulus;
        }
    }
    Ok(acc.bit(0))
}

/// `d` with `e*d = 1 mod (p-1)(q-1)` and `0 < d < (p-1)(q-1)`.
pub fn recover_secret_exponent(e: &BigUint, p: &BigUint, q: &BigUint) -> Result<BigUint> {
    let one = BigUint::one();
    if p <= &one || q <= &one {
        return Err(NumError::InvalidKey("factors must exceed 1".into()));
    }
    let phi = (p - 1u32) * (q - 1u32);
    if phi.is_one() {
        // Z_1: every exponent is its own inverse; 1 is the canonical choice.
        return Ok(one);
    }
    mod_inverse(e, &phi).ok_or_else(|| NumError::NotInvertible { e: e.clone(), phi })
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for all 64-bit inputs.
pub fn is_prime_u64(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

const TRIAL_DIVISION_LIMIT: u64 = 1 << 16;
const RHO_SEEDS: u64 = 64;
const RHO_ITERATIONS: u64 = 1 << 22;

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// One Brent-cycle Pollard rho run with `f(y) = y^2 + c mod n`.
fn pollard_brent(n: u64, c: u64, start: u64) -> Option<u64> {
    const BATCH: u64 = 128;
    let f = |y: u64| (mul_mod(y, y, n) + c) % n;
    let (mut y, mut r, mut q) = (start % n, 1u64, 1u64);
    let (mut x, mut ys) = (y, y);
    let mut g = 1;
    let mut spent = 0u64;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..BATCH.min(r - k) {
                y = f(y);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            g = gcd_u64(q, n);
            k += BATCH;
        }
        r *= 2;
        spent += r;
        if spent > RHO_ITERATIONS {
            return None;
        }
    }
    if g == n {
        // The batch overshot; step back one element at a time.
        loop {
            ys = f(ys);
            g = gcd_u64(x.abs_diff(ys), n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

/// Finds some nontrivial divisor of a composite 64-bit `n`.
fn find_divisor(n: u64) -> Option<u64> {
    if n % 2 == 0 {
        return Some(2);
    }
    let limit = TRIAL_DIVISION_LIMIT.min(n);
    let mut d = 3u64;
    while d < limit && d.saturating_mul(d) <= n {
        if n % d == 0 {
            return Some(d);
        }
        d += 2;
    }
    (1..=RHO_SEEDS).find_map(|seed| pollard_brent(n, seed, seed + 1))
}

/// Splits `n` as `(p, q)` with `p <= q` and `p*q = n`. For semiprimes this is
/// the prime factorization; for other composites it is the first split found.
pub fn factor_semiprime(n: &BigUint) -> Result<(BigUint, BigUint)> {
    let small = n.to_u64().ok_or(NumError::FactorInputTooLarge)?;
    if small < 4 {
        return Err(NumError::FactorInputTooSmall(n.clone()));
    }
    if is_prime_u64(small) {
        return Err(NumError::PrimeInput(n.clone()));
    }
    let d = find_divisor(small).ok_or_else(|| NumError::FactorBudgetExhausted(n.clone()))?;
    let (p, q) = (d.min(small / d), d.max(small / d));
    Ok((BigUint::from(p), BigUint::from(q)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn two_bit_primes_have_no_key() {
        assert_eq!(keygen(2, 0), Err(NumError::NoValidKey { bits: 2 }));
        assert_eq!(keygen(2, 99), Err(NumError::NoValidKey { bits: 2 }));
        assert_eq!(keygen(1, 0), Err(NumError::BitsTooSmall(1)));
    }

    #[test]
    fn four_bit_key_is_11_13() {
        let key = keygen(4, 7).unwrap();
        assert_eq!((key.p.clone(), key.q.clone()), (big(11), big(13)));
        assert_eq!(key.modulus, big(143));
        assert_eq!(key.public_exponent, big(7));
        assert_eq!(key.secret_exponent, big(103));
        assert_eq!(key.bits, 8);
        key.validate().unwrap();
    }

    #[test]
    fn keygen_is_deterministic() {
        for seed in 0..20 {
            assert_eq!(keygen(8, seed).unwrap(), keygen(8, seed).unwrap());
        }
        let key = keygen(8, 3).unwrap();
        assert_eq!(key.p.bits(), 8);
        assert_eq!(key.q.bits(), 8);
    }

    #[test]
    fn mod_pow_examples() {
        assert_eq!(mod_pow(&big(2), &big(3), &big(33)).unwrap(), big(8));
        assert_eq!(mod_pow(&big(0), &big(0), &big(7)).unwrap(), big(1));
        assert_eq!(mod_pow(&big(5), &big(1), &big(7)).unwrap(), big(5));
        assert_eq!(mod_pow(&big(5), &big(1), &big(1)), Err(NumError::ModulusTooSmall));
    }

    #[test]
    fn powers_examples() {
        let ps = powers(&big(8), &big(33)).unwrap();
        let expected: Vec<_> = [8u64, 31, 4, 16, 25, 31, 4].iter().map(|&v| big(v)).collect();
        assert_eq!(ps.entries, expected);
        assert!(powers(&big(0), &big(33)).unwrap().entries.iter().all(Zero::is_zero));
        assert!(powers(&big(1), &big(33)).unwrap().entries.iter().all(One::is_one));
        assert!(matches!(powers(&big(33), &big(33)), Err(NumError::OutOfRange { .. })));
    }

    #[test]
    fn extended_gcd_examples() {
        let (g, s, t) = extended_gcd(&BigInt::from(3), &BigInt::from(20));
        assert_eq!((g, s.clone(), t.clone()), (BigInt::from(1), BigInt::from(7), BigInt::from(-1)));
        assert_eq!(
            extended_gcd(&BigInt::from(9), &BigInt::from(0)),
            (BigInt::from(9), BigInt::from(1), BigInt::from(0))
        );
        let (g, s, t) = extended_gcd(&BigInt::from(6), &BigInt::from(4));
        assert_eq!(g, BigInt::from(2));
        assert_eq!(s * 6 + t * 4, BigInt::from(2));
        let (g, s, t) = extended_gcd(&BigInt::from(-6), &BigInt::from(4));
        assert_eq!(g, BigInt::from(2));
        assert_eq!(s * -6 + t * 4, BigInt::from(2));
    }

    #[test]
    fn factor_examples() {
        assert_eq!(factor_semiprime(&big(33)).unwrap(), (big(3), big(11)));
        assert_eq!(factor_semiprime(&big(143)).unwrap(), (big(11), big(13)));
        assert_eq!(factor_semiprime(&big(13)), Err(NumError::PrimeInput(big(13))));
        assert_eq!(factor_semiprime(&big(3)), Err(NumError::FactorInputTooSmall(big(3))));
        assert_eq!(factor_semiprime(&big(4)).unwrap(), (big(2), big(2)));
    }

    #[test]
    fn pollard_path_splits_large_semiprimes() {
        // Both factors exceed the trial-division limit.
        let p = 1_000_003u64;
        let q = 2_147_483_647u64;
        assert_eq!(factor_semiprime(&big(p * q)).unwrap(), (big(p), big(q)));
        assert_eq!(find_divisor(4_294_967_291 * 65_537).map(|d| d == 65_537 || d == 4_294_967_291), Some(true));
    }

    #[test]
    fn secret_exponent_examples() {
        assert_eq!(recover_secret_exponent(&big(3), &big(3), &big(11)).unwrap(), big(7));
        assert_eq!(recover_secret_exponent(&big(1), &big(5), &big(7)).unwrap(), big(1));
        assert_eq!(recover_secret_exponent(&big(7), &big(11), &big(13)).unwrap(), big(103));
        assert!(matches!(
            recover_secret_exponent(&big(3), &big(7), &big(11)),
            Err(NumError::NotInvertible { .. })
        ));
    }

    #[test]
    fn decrypt_lsb_examples() {
        let ps = powers(&big(8), &big(33)).unwrap();
        assert!(!decrypt_lsb(&ps, &big(33), &big(7)).unwrap());
        let ones = powers(&big(1), &big(33)).unwrap();
        assert!(decrypt_lsb(&ones, &big(33), &big(23)).unwrap());
        assert!(decrypt_lsb(&ps, &big(33), &big(0)).unwrap());
        assert!(matches!(decrypt_lsb(&ps, &big(33), &big(1 << 7)), Err(NumError::NotEnoughPowers { .. })));
    }

    #[test]
    fn hex_round_trip_rejects_noncanonical() {
        assert_eq!(from_hex("8f").unwrap(), big(0x8f));
        assert_eq!(to_hex(&big(0x8f)), "8f");
        assert!(from_hex("08f").is_err());
        assert!(from_hex("0x8f").is_err());
        assert!(from_hex("8F").is_err());
        assert!(from_hex("").is_err());
        assert_eq!(from_hex("0").unwrap(), big(0));
    }

    #[test]
    fn key_file_round_trip() {
        let key = keygen(8, 11).unwrap();
        let json = serde_json::to_string(&key.to_file()).unwrap();
        let back: KeyFile = serde_json::from_str(&json).unwrap();
        assert_eq!(RsaKey::from_file(&back).unwrap(), key);
        assert!(json.contains("\"N\":"));
    }

    #[test]
    fn miller_rabin_matches_sieve() {
        let limit = 20_000usize;
        let mut sieve = vec![true; limit];
        sieve[0] = false;
        sieve[1] = false;
        for i in 2..limit {
            if sieve[i] {
                for j in (i * i..limit).step_by(i) {
                    sieve[j] = false;
                }
            }
        }
        for (n, &prime) in sieve.iter().enumerate() {
            assert_eq!(is_prime_u64(n as u64), prime, "n = {n}");
        }
        assert!(is_prime_u64(18_446_744_073_709_551_557));
        assert!(!is_prime_u64(3_215_031_751)); // strong pseudoprime to bases 2,3,5,7
    }
}
