//! Labeled samples of the RSA-LSB concept class.
//!
//! An example string packs, in order, the powers sequence of the ciphertext
//! `x^e mod N`, then `N`, then `e`. Every field is `n` bits wide (the bit
//! length of `N`), big-endian and zero-padded. The label is `x mod 2`.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;
use crate::numtheory::{self, bit_length, ceil_log2, from_hex, to_hex, NumError, PowersSequence, RsaKey};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("modulus must be at least 4")]
    ModulusTooSmall,
    #[error("exponent does not fit in {bits} bits")]
    ExponentTooWide { bits: usize },
    #[error("sample size {m} exceeds the number of residues {modulus}")]
    TooManyExamples { m: usize, modulus: BigUint },
    #[error("sample size must be positive")]
    EmptySample,
    #[error("example has {actual} bits, layout expects {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("power field {field} breaks the squaring chain")]
    Corrupted { field: usize },
    #[error("example {index} disagrees with the sample's public key")]
    ForeignKey { index: usize },
    #[error("example {index} duplicates an earlier example string")]
    DuplicateExample { index: usize },
    #[error("example {index} does not match its plaintext")]
    PlaintextMismatch { index: usize },
    #[error("layout in file does not match the modulus")]
    LayoutMismatch,
    #[error(transparent)]
    Num(#[from] NumError),
}

pub type Result<T> = std::result::Result<T, InstanceError>;

/// Field packing of one example string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitLayout {
    /// Bit length of `N`, also the width of every field.
    pub n: usize,
    /// `ceil(log2 N) + 1`.
    pub power_fields: usize,
    pub total_bits: usize,
    /// 1-based position of the least significant bit of the `N` field.
    pub lsb_of_n_position: usize,
    /// Number of concatenated copies of the payload; always 1.
    pub repetitions: u32,
}

impl BitLayout {
    pub fn fields_per_example(&self) -> usize {
        self.power_fields + 2
    }

    /// 1-based position of the first bit of field `index`.
    fn field_start(&self, index: usize) -> usize {
        index * self.n + 1
    }
}

pub fn make_layout(modulus: &BigUint, e: &BigUint) -> Result<BitLayout> {
    if modulus < &BigUint::from(4u32) {
        return Err(InstanceError::ModulusTooSmall);
    }
    let n = bit_length(modulus) as usize;
    if bit_length(e) as usize > n {
        return Err(InstanceError::ExponentTooWide { bits: n });
    }
    let log = ceil_log2(modulus) as usize;
    Ok(BitLayout {
        n,
        power_fields: log + 1,
        total_bits: n * (log + 3),
        lsb_of_n_position: n * (log + 2),
        repetitions: 1,
    })
}

fn push_field(out: &mut Vec<bool>, value: &BigUint, width: usize) {
    out.extend((0..width as u64).rev().map(|bit| value.bit(bit)));
}

fn read_field(w: &Bits, layout: &BitLayout, index: usize) -> BigUint {
    let start = layout.field_start(index);
    let mut value = BigUint::zero();
    for position in start..start + layout.n {
        value <<= 1u32;
        if w.at(position) {
            value |= BigUint::from(1u32);
        }
    }
    value
}

/// Packs `powers(ciphertext) || N || e`.
pub fn encode_payload(ps: &PowersSequence, modulus: &BigUint, e: &BigUint, layout: &BitLayout) -> Bits {
    let mut out = Vec::with_capacity(layout.total_bits);
    for entry in &ps.entries {
        push_field(&mut out, entry, layout.n);
    }
    push_field(&mut out, modulus, layout.n);
    push_field(&mut out, e, layout.n);
    debug_assert_eq!(out.len(), layout.total_bits);
    Bits(out)
}

/// Example string for plaintext `x` under the public key `(N, e)`.
pub fn encode_plaintext(x: &BigUint, modulus: &BigUint, e: &BigUint, layout: &BitLayout) -> Result<Bits> {
    let ciphertext = numtheory::mod_pow(x, e, modulus)?;
    let ps = numtheory::powers(&ciphertext, modulus)?;
    Ok(encode_payload(&ps, modulus, e, layout))
}

/// Inverse of the packing. Fails on a length mismatch or when the decoded
/// powers do not form a squaring chain modulo the decoded `N`.
pub fn decode_example(w: &Bits, layout: &BitLayout) -> Result<(PowersSequence, BigUint, BigUint)> {
    if w.len() != layout.total_bits {
        return Err(InstanceError::LengthMismatch { expected: layout.total_bits, actual: w.len() });
    }
    let modulus = read_field(w, layout, layout.power_fields);
    let e = read_field(w, layout, layout.power_fields + 1);
    if modulus < BigUint::from(4u32) {
        return Err(InstanceError::ModulusTooSmall);
    }
    let entries = (0..layout.power_fields).map(|t| read_field(w, layout, t)).collect();
    let ps = PowersSequence { modulus: modulus.clone(), entries };
    if let Some(field) = ps.first_violation() {
        return Err(InstanceError::Corrupted { field });
    }
    Ok((ps, modulus, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub w: Bits,
    pub b: bool,
    /// Plaintext; only present on the trapdoor side.
    pub x: Option<BigUint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSample {
    pub modulus: BigUint,
    pub public_exponent: BigUint,
    pub layout: BitLayout,
    pub examples: Vec<LabeledExample>,
}

impl LabeledSample {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn strings(&self) -> Vec<Bits> {
        self.examples.iter().map(|ex| ex.w.clone()).collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.examples.iter().map(|ex| ex.b).collect()
    }

    /// Copy with every plaintext removed.
    pub fn public(&self) -> LabeledSample {
        let mut out = self.clone();
        for ex in &mut out.examples {
            ex.x = None;
        }
        out
    }

    /// Checks layout, shared key fields, distinctness and plaintext agreement.
    pub fn validate(&self) -> Result<()> {
        if self.examples.is_empty() {
            return Err(InstanceError::EmptySample);
        }
        if make_layout(&self.modulus, &self.public_exponent)? != self.layout {
            return Err(InstanceError::LayoutMismatch);
        }
        let mut seen = HashSet::new();
        for (index, ex) in self.examples.iter().enumerate() {
            let (_, modulus, e) = decode_example(&ex.w, &self.layout)?;
            if modulus != self.modulus || e != self.public_exponent {
                return Err(InstanceError::ForeignKey { index });
            }
            if !seen.insert(&ex.w) {
                return Err(InstanceError::DuplicateExample { index });
            }
            if let Some(x) = &ex.x {
                let expected = encode_plaintext(x, &self.modulus, &self.public_exponent, &self.layout)?;
                if expected != ex.w || x.bit(0) != ex.b {
                    return Err(InstanceError::PlaintextMismatch { index });
                }
            }
        }
        Ok(())
    }

    pub fn to_file(&self) -> SampleFile {
        SampleFile {
            modulus: to_hex(&self.modulus),
            e: to_hex(&self.public_exponent),
            layout: LayoutFile {
                n: self.layout.n,
                total_bits: self.layout.total_bits,
                repetitions: self.layout.repetitions,
            },
            examples: self
                .examples
                .iter()
                .map(|ex| ExampleFile { w: ex.w.clone(), b: u8::from(ex.b), x: ex.x.as_ref().map(to_hex) })
                .collect(),
        }
    }

    pub fn from_file(file: &SampleFile) -> Result<Self> {
        let modulus = from_hex(&file.modulus)?;
        let public_exponent = from_hex(&file.e)?;
        let layout = make_layout(&modulus, &public_exponent)?;
        if layout.n != file.layout.n
            || layout.total_bits != file.layout.total_bits
            || layout.repetitions != file.layout.repetitions
        {
            return Err(InstanceError::LayoutMismatch);
        }
        let examples = file
            .examples
            .iter()
            .map(|ex| {
                Ok(LabeledExample { w: ex.w.clone(), b: ex.b != 0, x: ex.x.as_deref().map(from_hex).transpose()? })
            })
            .collect::<Result<Vec<_>>>()?;
        let sample = LabeledSample { modulus, public_exponent, layout, examples };
        sample.validate()?;
        Ok(sample)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutFile {
    pub n: usize,
    pub total_bits: usize,
    pub repetitions: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleFile {
    pub w: Bits,
    pub b: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFile {
    #[serde(rename = "N")]
    pub modulus: String,
    pub e: String,
    pub layout: LayoutFile,
    pub examples: Vec<ExampleFile>,
}

fn uniform_below(rng: &mut ChaCha8Rng, bound: &BigUint) -> BigUint {
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill(buf.as_mut_slice());
        let mut candidate = BigUint::from_bytes_be(&buf);
        candidate >>= (bytes as u64 * 8 - bits) as usize;
        if &candidate < bound {
            return candidate;
        }
    }
}

/// Draws `m` distinct plaintexts uniformly from `Z_N` and labels each with
/// its least significant bit. Plaintexts are retained on the examples.
pub fn generate_sample(key: &RsaKey, m: usize, seed: u64) -> Result<LabeledSample> {
    if m == 0 {
        return Err(InstanceError::EmptySample);
    }
    let modulus = &key.modulus;
    let e = &key.public_exponent;
    if BigUint::from(m) > *modulus {
        return Err(InstanceError::TooManyExamples { m, modulus: modulus.clone() });
    }
    let layout = make_layout(modulus, e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plaintexts: Vec<BigUint> = match modulus.to_usize() {
        Some(size) => rand::seq::index::sample(&mut rng, size, m).into_iter().map(BigUint::from).collect(),
        None => {
            let mut seen = HashSet::new();
            let mut out = Vec::with_capacity(m);
            while out.len() < m {
                let x = uniform_below(&mut rng, modulus);
                if seen.insert(x.clone()) {
                    out.push(x);
                }
            }
            out
        }
    };
    let examples = plaintexts
        .into_iter()
        .map(|x| {
            let w = encode_plaintext(&x, modulus, e, &layout)?;
            Ok(LabeledExample { w, b: x.bit(0), x: Some(x) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledSample { modulus: modulus.clone(), public_exponent: e.clone(), layout, examples })
}
