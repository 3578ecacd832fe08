use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::{BinaryPolynomial, QuboError, Result};

/// Exhaustive search refuses more variables than this.
pub const DEFAULT_MAX_VARS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundStates {
    pub energy: BigRational,
    /// Every minimizing assignment, sorted lexicographically with variable 0
    /// most significant and `false < true`.
    pub states: Vec<Vec<bool>>,
}

/// Walks all `2^n` assignments in Gray-code order, so each step flips one
/// bit and only the terms through that bit are touched. Coefficients are
/// scaled to integers by the common denominator first.
pub fn ground_states(h: &BinaryPolynomial, max_vars: usize) -> Result<GroundStates> {
    let n = h.var_count();
    if n > max_vars || n > 31 {
        return Err(QuboError::TooManyVars { count: n, max: max_vars.min(31) });
    }
    let denom = h.terms().fold(h.offset().denom().clone(), |acc, (_, c)| acc.lcm(c.denom()));
    let scale = |c: &BigRational| -> Result<i128> {
        (c.numer() * (&denom / c.denom())).to_i128().ok_or(QuboError::Overflow)
    };

    let mut budget: i128 = 0;
    let mut by_var: Vec<Vec<(u32, i128)>> = vec![Vec::new(); n];
    for (vars, c) in h.terms() {
        let coeff = scale(c)?;
        budget = budget.checked_add(coeff.abs()).ok_or(QuboError::Overflow)?;
        let mask = vars.iter().fold(0u32, |m, &v| m | 1 << v);
        for &v in vars {
            by_var[v as usize].push((mask, coeff));
        }
    }
    let offset = scale(h.offset())?;
    budget.checked_add(offset.abs()).ok_or(QuboError::Overflow)?;

    let mut state = 0u32;
    let mut energy = offset;
    let mut best = energy;
    let mut argmins = vec![state];
    for step in 1u64..1 << n {
        let bit = step.trailing_zeros() as usize;
        let flag = 1u32 << bit;
        let delta: i128 = by_var[bit]
            .iter()
            .filter(|(mask, _)| (state | flag) & mask == *mask)
            .map(|(_, c)| c)
            .sum();
        state ^= flag;
        energy += if state & flag != 0 { delta } else { -delta };
        if energy < best {
            best = energy;
            argmins.clear();
        }
        if energy == best {
            argmins.push(state);
        }
    }

    let mut states: Vec<Vec<bool>> =
        argmins.into_iter().map(|s| (0..n).map(|i| s >> i & 1 == 1).collect()).collect();
    states.sort_unstable();
    Ok(GroundStates { energy: BigRational::new(BigInt::from(best), denom), states })
}
