//! Penalty Hamiltonians for formula coloring: a multilinear polynomial over
//! binary color indicators `b_{v,c}` and color-usage bits `w_c`, its Ising
//! form under `b = (1 - Z) / 2`, and exhaustive ground-state search.

mod ground;
mod hamiltonian;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ground::{ground_states, GroundStates, DEFAULT_MAX_VARS};
pub use hamiltonian::{
    decode_coloring, default_weight, fc_to_hamiltonian, hard_penalty, min_colors_increasing_k, var_name, IncreasingK,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuboError {
    #[error("color budget must be at least 1")]
    EmptyBudget,
    #[error("penalty weight {weight} is below k + 1 = {min}")]
    WeightTooSmall { weight: BigRational, min: usize },
    #[error("assignment has {actual} bits, polynomial has {expected} variables")]
    MissingVariable { expected: usize, actual: usize },
    #[error("{count} variables exceed the enumeration limit of {max}")]
    TooManyVars { count: usize, max: usize },
    #[error("term refers to variable {index} of {count}")]
    BadIndex { index: u32, count: usize },
    #[error("bad rational {0:?}")]
    BadRational(String),
    #[error("term {0:?} is not a sorted, nonempty index set")]
    BadTerm(Vec<u32>),
    #[error("coefficients too large for exhaustive search")]
    Overflow,
}

pub type Result<T> = std::result::Result<T, QuboError>;

/// Sum of `coeff * prod(vars)` over sorted, repetition-free index sets,
/// plus a constant. Shared by the binary and the Ising forms.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Multilinear {
    names: Vec<String>,
    terms: BTreeMap<Vec<u32>, BigRational>,
    offset: BigRational,
}

impl Multilinear {
    pub fn new(names: Vec<String>) -> Self {
        Multilinear { names, terms: BTreeMap::new(), offset: BigRational::zero() }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn var_count(&self) -> usize {
        self.names.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &BigRational)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, vars: &[u32]) -> BigRational {
        if vars.is_empty() {
            return self.offset.clone();
        }
        self.terms.get(vars).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn offset(&self) -> &BigRational {
        &self.offset
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Adds `coeff` to the monomial over `vars`. Repeated indices collapse
    /// (`b * b = b` for binaries); callers of the Ising form pass sets.
    fn add(&mut self, vars: &[u32], coeff: BigRational) -> Result<()> {
        if let Some(&index) = vars.iter().find(|&&v| v as usize >= self.names.len()) {
            return Err(QuboError::BadIndex { index, count: self.names.len() });
        }
        let mut key = vars.to_vec();
        key.sort_unstable();
        key.dedup();
        if key.is_empty() {
            self.offset += coeff;
            return Ok(());
        }
        let total = self.terms.remove(&key).unwrap_or_else(BigRational::zero) + coeff;
        if !total.is_zero() {
            self.terms.insert(key, total);
        }
        Ok(())
    }

    fn add_scaled(&mut self, other: &Multilinear, scale: &BigRational) {
        self.offset += &other.offset * scale;
        for (vars, coeff) in &other.terms {
            self.add(vars, coeff * scale).expect("same registry");
        }
    }
}

/// Polynomial in binary variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialFile", into = "PolynomialFile")]
pub struct BinaryPolynomial(Multilinear);

/// Polynomial in spins `Z_i = 1 - 2 b_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialFile", into = "PolynomialFile")]
pub struct IsingPolynomial(Multilinear);

impl std::ops::Deref for BinaryPolynomial {
    type Target = Multilinear;

    fn deref(&self) -> &Multilinear {
        &self.0
    }
}

impl std::ops::Deref for IsingPolynomial {
    type Target = Multilinear;

    fn deref(&self) -> &Multilinear {
        &self.0
    }
}

impl BinaryPolynomial {
    pub fn new(names: Vec<String>) -> Self {
        BinaryPolynomial(Multilinear::new(names))
    }

    pub fn add_term(&mut self, vars: &[u32], coeff: BigRational) -> Result<()> {
        self.0.add(vars, coeff)
    }

    pub fn add_scaled(&mut self, other: &BinaryPolynomial, scale: &BigRational) {
        self.0.add_scaled(&other.0, scale)
    }

    /// Exact value at a 0/1 assignment.
    pub fn energy(&self, assignment: &[bool]) -> Result<BigRational> {
        check_width(self.var_count(), assignment.len())?;
        let mut total = self.offset.clone();
        for (vars, coeff) in self.terms() {
            if vars.iter().all(|&v| assignment[v as usize]) {
                total += coeff;
            }
        }
        Ok(total)
    }

    /// Substitutes `b_i = (1 - Z_i) / 2` and expands.
    pub fn to_ising(&self) -> IsingPolynomial {
        let mut out = Multilinear::new(self.names.clone());
        out.offset = self.offset.clone();
        for (vars, coeff) in self.terms() {
            let scale = coeff / BigRational::from_integer(BigInt::one() << vars.len());
            // prod (1 - Z_i) = sum over subsets S of (-1)^|S| prod_{i in S} Z_i
            for mask in 0u32..1 << vars.len() {
                let subset: Vec<u32> = (0..vars.len()).filter(|&i| mask >> i & 1 == 1).map(|i| vars[i]).collect();
                let signed = if subset.len() % 2 == 0 { scale.clone() } else { -scale.clone() };
                out.add(&subset, signed).expect("same registry");
            }
        }
        IsingPolynomial(out)
    }
}

impl IsingPolynomial {
    /// Exact value at spins `z_i` in `{-1, +1}`.
    pub fn eval_spins(&self, spins: &[i8]) -> Result<BigRational> {
        check_width(self.var_count(), spins.len())?;
        let mut total = self.offset.clone();
        for (vars, coeff) in self.terms() {
            let sign: i32 = vars.iter().map(|&v| i32::from(spins[v as usize])).product();
            if sign > 0 {
                total += coeff;
            } else {
                total -= coeff;
            }
        }
        Ok(total)
    }

    /// Value at the spins of a binary assignment, `Z = 1 - 2b`.
    pub fn eval_bits(&self, bits: &[bool]) -> Result<BigRational> {
        let spins: Vec<i8> = bits.iter().map(|&b| if b { -1 } else { 1 }).collect();
        self.eval_spins(&spins)
    }
}

fn check_width(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(QuboError::MissingVariable { expected, actual });
    }
    Ok(())
}

/// Rational as `"p/q"`, always with an explicit denominator.
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(text: &str) -> Result<BigRational> {
    let bad = || QuboError::BadRational(text.to_string());
    let (p, q) = text.split_once('/').unwrap_or((text, "1"));
    let p: BigInt = p.trim().parse().map_err(|_| bad())?;
    let q: BigInt = q.trim().parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(p, q))
}

#[derive(Serialize, Deserialize)]
struct TermFile {
    vars: Vec<u32>,
    coeff: String,
}

#[derive(Serialize, Deserialize)]
struct PolynomialFile {
    vars: Vec<String>,
    terms: Vec<TermFile>,
    offset: String,
}

impl From<Multilinear> for PolynomialFile {
    fn from(p: Multilinear) -> Self {
        PolynomialFile {
            terms: p.terms().map(|(vars, c)| TermFile { vars: vars.to_vec(), coeff: format_rational(c) }).collect(),
            offset: format_rational(&p.offset),
            vars: p.names,
        }
    }
}

impl TryFrom<PolynomialFile> for Multilinear {
    type Error = QuboError;

    fn try_from(file: PolynomialFile) -> Result<Self> {
        let mut p = Multilinear::new(file.vars);
        p.offset = parse_rational(&file.offset)?;
        for term in file.terms {
            let mut sorted = term.vars.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted != term.vars || sorted.is_empty() {
                return Err(QuboError::BadTerm(term.vars));
            }
            p.add(&term.vars, parse_rational(&term.coeff)?)?;
        }
        Ok(p)
    }
}

impl From<BinaryPolynomial> for PolynomialFile {
    fn from(p: BinaryPolynomial) -> Self {
        p.0.into()
    }
}

impl From<IsingPolynomial> for PolynomialFile {
    fn from(p: IsingPolynomial) -> Self {
        p.0.into()
    }
}

impl TryFrom<PolynomialFile> for BinaryPolynomial {
    type Error = QuboError;

    fn try_from(file: PolynomialFile) -> Result<Self> {
        Ok(BinaryPolynomial(file.try_into()?))
    }
}

impl TryFrom<PolynomialFile> for IsingPolynomial {
    type Error = QuboError;

    fn try_from(file: PolynomialFile) -> Result<Self> {
        Ok(IsingPolynomial(file.try_into()?))
    }
}

impl fmt::Display for BinaryPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.offset)?;
        for (vars, coeff) in self.terms() {
            let names: Vec<&str> = vars.iter().map(|&v| self.names[v as usize].as_str()).collect();
            write!(f, " + ({coeff}) {}", names.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("b_{i}")).collect()
    }

    #[test]
    fn single_variable_ising() {
        let mut h = BinaryPolynomial::new(names(1));
        h.add_term(&[0], q(1, 1)).unwrap();
        let z = h.to_ising();
        assert_eq!(z.offset(), &q(1, 2));
        assert_eq!(z.coefficient(&[0]), q(-1, 2));
        assert_eq!(z.term_count(), 1);
    }

    #[test]
    fn product_ising() {
        let mut h = BinaryPolynomial::new(names(2));
        h.add_term(&[1, 0], q(1, 1)).unwrap();
        let z = h.to_ising();
        assert_eq!(z.offset(), &q(1, 4));
        assert_eq!(z.coefficient(&[0]), q(-1, 4));
        assert_eq!(z.coefficient(&[1]), q(-1, 4));
        assert_eq!(z.coefficient(&[0, 1]), q(1, 4));
    }

    #[test]
    fn repeated_indices_collapse_and_zeros_vanish() {
        let mut h = BinaryPolynomial::new(names(2));
        h.add_term(&[1, 1, 0], q(3, 1)).unwrap();
        h.add_term(&[0, 1], q(-3, 1)).unwrap();
        assert_eq!(h.term_count(), 0);
        assert_eq!(h.add_term(&[2], q(1, 1)), Err(QuboError::BadIndex { index: 2, count: 2 }));
        assert_eq!(h.energy(&[true]), Err(QuboError::MissingVariable { expected: 2, actual: 1 }));
    }

    #[test]
    fn json_round_trip() {
        let mut h = BinaryPolynomial::new(names(2));
        h.add_term(&[0, 1], q(-3, 2)).unwrap();
        h.add_term(&[], q(2, 1)).unwrap();
        let text = serde_json::to_string(&h).unwrap();
        assert_eq!(text, r#"{"vars":["b_1","b_2"],"terms":[{"vars":[0,1],"coeff":"-3/2"}],"offset":"2/1"}"#);
        assert_eq!(serde_json::from_str::<BinaryPolynomial>(&text).unwrap(), h);
        assert!(serde_json::from_str::<BinaryPolynomial>(
            r#"{"vars":["b_1","b_2"],"terms":[{"vars":[1,0],"coeff":"1"}],"offset":"0"}"#
        )
        .is_err());
        assert_eq!(parse_rational("7").unwrap(), q(7, 1));
        assert!(parse_rational("1/0").is_err());
    }
}
