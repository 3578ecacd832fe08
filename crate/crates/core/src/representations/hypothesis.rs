use num_bigint::BigUint;

use super::{ReprError, Result};
use crate::bits::Bits;
use crate::instances::{decode_example, make_layout, BitLayout};
use crate::numtheory::{decrypt_lsb, to_hex};

/// Decrypting hypothesis with the secret exponent hard-wired: unpack the
/// example, multiply the powers selected by the bits of `d`, output the LSB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrsaHypothesis {
    pub modulus: BigUint,
    pub public_exponent: BigUint,
    pub secret_exponent: BigUint,
    pub layout: BitLayout,
}

impl CrsaHypothesis {
    pub fn eval(&self, w: &Bits) -> Result<bool> {
        let (ps, modulus, e) = decode_example(w, &self.layout)?;
        if modulus != self.modulus || e != self.public_exponent {
            return Err(ReprError::ForeignExample { found: format!("N={}, e={}", to_hex(&modulus), to_hex(&e)) });
        }
        Ok(decrypt_lsb(&ps, &self.modulus, &self.secret_exponent)?)
    }

    /// Modular-multiply stages (set bits of `d`) plus one decode stage per
    /// packed field.
    pub fn size(&self) -> usize {
        self.multiply_stages() + self.layout.fields_per_example()
    }

    pub fn multiply_stages(&self) -> usize {
        self.secret_exponent.count_ones() as usize
    }
}

pub fn build_crsa_hypothesis(modulus: &BigUint, e: &BigUint, d: &BigUint) -> Result<CrsaHypothesis> {
    Ok(CrsaHypothesis {
        modulus: modulus.clone(),
        public_exponent: e.clone(),
        secret_exponent: d.clone(),
        layout: make_layout(modulus, e)?,
    })
}
