use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{ground_states, BinaryPolynomial, GroundStates, QuboError, Result};
use crate::fc::{Coloring, FcClause, FcInstance};

/// Registry name of bit `index` for `m` formula variables and `k` colors:
/// `b_{v}_{c}` at `(v-1)k + c-1`, then `w_{c}` at `mk + c-1`.
pub fn var_name(index: usize, m: usize, k: usize) -> String {
    if index < m * k {
        format!("b_{}_{}", index / k + 1, index % k + 1)
    } else {
        format!("w_{}", index - m * k + 1)
    }
}

fn registry(m: usize, k: usize) -> Vec<String> {
    (0..m * k + k).map(|i| var_name(i, m, k)).collect()
}

/// `k + 1`: one broken hard term outweighs any saving on the at most `k`
/// usage bits.
pub fn default_weight(k: usize) -> BigRational {
    BigRational::from_integer((k as i64 + 1).into())
}

/// The unweighted hard block: one-hot rows, Neq and Impl clause terms, and
/// the usage coupling `b_{v,c} - b_{v,c} w_c`.
pub fn hard_penalty(f: &FcInstance, k: usize) -> Result<BinaryPolynomial> {
    if k == 0 {
        return Err(QuboError::EmptyBudget);
    }
    let m = f.var_count();
    let b = |v: usize, c: usize| ((v * k) + c) as u32;
    let w = |c: usize| (m * k + c) as u32;
    let one = BigRational::one;
    let int = |n: i64| BigRational::from_integer(n.into());
    let mut h = BinaryPolynomial::new(registry(m, k));

    // (1 - sum_c b_{v,c})^2 = 1 - sum_c b_{v,c} + 2 sum_{c<d} b_{v,c} b_{v,d}
    for v in 0..m {
        h.add_term(&[], one())?;
        for c in 0..k {
            h.add_term(&[b(v, c)], -one())?;
            for d in c + 1..k {
                h.add_term(&[b(v, c), b(v, d)], int(2))?;
            }
        }
    }
    for clause in f.clauses() {
        match *clause {
            FcClause::Neq { a, b: other } => {
                let (u, v) = (f.index(a), f.index(other));
                for c in 0..k {
                    h.add_term(&[b(u, c), b(v, c)], one())?;
                }
            }
            FcClause::Impl { u, v, k: p, l: q } => {
                let (u, v, p, q) = (f.index(u), f.index(v), f.index(p), f.index(q));
                // (sum_c b_u b_v)(1 - sum_d b_p b_q)
                for c in 0..k {
                    h.add_term(&[b(u, c), b(v, c)], one())?;
                    for d in 0..k {
                        h.add_term(&[b(u, c), b(v, c), b(p, d), b(q, d)], -one())?;
                    }
                }
            }
        }
    }
    for v in 0..m {
        for c in 0..k {
            h.add_term(&[b(v, c)], one())?;
            h.add_term(&[b(v, c), w(c)], -one())?;
        }
    }
    Ok(h)
}

/// `H = A * hard + sum_c w_c`, expanded to multilinear normal form.
pub fn fc_to_hamiltonian(f: &FcInstance, k: usize, weight: &BigRational) -> Result<BinaryPolynomial> {
    if k == 0 {
        return Err(QuboError::EmptyBudget);
    }
    if *weight < default_weight(k) {
        return Err(QuboError::WeightTooSmall { weight: weight.clone(), min: k + 1 });
    }
    let hard = hard_penalty(f, k)?;
    let mut h = BinaryPolynomial::new(hard.names().to_vec());
    h.add_scaled(&hard, weight);
    let m = f.var_count();
    for c in 0..k {
        h.add_term(&[(m * k + c) as u32], BigRational::one())?;
    }
    Ok(h)
}

/// Reads a coloring off the `b` rows of an assignment; `None` unless every
/// row has exactly one bit set.
pub fn decode_coloring(f: &FcInstance, k: usize, bits: &[bool]) -> Option<Coloring> {
    let m = f.var_count();
    if bits.len() != m * k + k {
        return None;
    }
    let mut colors = Vec::with_capacity(m);
    for v in 0..m {
        let row = &bits[v * k..(v + 1) * k];
        if row.iter().filter(|&&b| b).count() != 1 {
            return None;
        }
        colors.push(row.iter().position(|&b| b).expect("one bit set"));
    }
    Some(Coloring::from_classes(&colors))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncreasingK {
    pub k: usize,
    pub ground: GroundStates,
}

/// Alternative to the usage-bit objective: raise the budget `k` until the
/// ground states of `H` include one with zero hard penalty.
pub fn min_colors_increasing_k(f: &FcInstance, max_k: usize, max_vars: usize) -> Result<Option<IncreasingK>> {
    for k in 1..=max_k {
        let h = fc_to_hamiltonian(f, k, &default_weight(k))?;
        let hard = hard_penalty(f, k)?;
        let ground = ground_states(&h, max_vars)?;
        let mut zero_hard = false;
        for state in &ground.states {
            if hard.energy(state)?.is_zero() {
                zero_hard = true;
                break;
            }
        }
        if zero_hard {
            return Ok(Some(IncreasingK { k, ground }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fc::{verify_coloring, FcVar};

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn all_bits(n: usize) -> impl Iterator<Item = Vec<bool>> {
        (0..1u32 << n).map(move |mask| (0..n).map(|i| mask >> i & 1 == 1).collect())
    }

    #[test]
    fn registry_layout() {
        assert_eq!(registry(2, 2), ["b_1_1", "b_1_2", "b_2_1", "b_2_2", "w_1", "w_2"]);
    }

    #[test]
    fn single_variable_single_color() {
        let f = FcInstance::flat(1, vec![]).unwrap();
        let a = q(2);
        let h = fc_to_hamiltonian(&f, 1, &a).unwrap();
        // A(1 - b)^2 + A(b - b w) + w, with b^2 = b
        for bits in all_bits(2) {
            let (b, w) = (i64::from(bits[0]), i64::from(bits[1]));
            let direct = q(2) * q((1 - b) * (1 - b)) + q(2) * q(b - b * w) + q(w);
            assert_eq!(h.energy(&bits).unwrap(), direct);
        }
        assert_eq!(h.energy(&[false, false]).unwrap(), a);
        let gs = ground_states(&h, 20).unwrap();
        assert_eq!(gs.energy, q(1));
        assert_eq!(gs.states, vec![vec![true, true]]);
    }

    #[test]
    fn neq_pair_two_colors() {
        let f = FcInstance::flat(2, vec![FcClause::neq(FcVar::Flat(1), FcVar::Flat(2))]).unwrap();
        let h = fc_to_hamiltonian(&f, 2, &q(3)).unwrap();
        assert_eq!(h.degree(), 2);
        let gs = ground_states(&h, 20).unwrap();
        assert_eq!(gs.energy, q(2));
        assert_eq!(gs.states.len(), 2);
        for state in &gs.states {
            assert!(state[4] && state[5]);
            let p = decode_coloring(&f, 2, state).unwrap();
            assert!(verify_coloring(&f, &p).unwrap().is_valid());
        }
        let one = fc_to_hamiltonian(&f, 1, &q(2)).unwrap();
        assert!(ground_states(&one, 20).unwrap().energy >= q(2));
    }

    #[test]
    fn weight_and_budget_are_checked() {
        let f = FcInstance::flat(1, vec![]).unwrap();
        assert_eq!(fc_to_hamiltonian(&f, 0, &q(5)), Err(QuboError::EmptyBudget));
        assert!(matches!(fc_to_hamiltonian(&f, 2, &q(2)), Err(QuboError::WeightTooSmall { min: 3, .. })));
    }

    #[test]
    fn increasing_k_finds_triangle() {
        let z = FcVar::Flat;
        let f = FcInstance::flat(3, vec![FcClause::neq(z(1), z(2)), FcClause::neq(z(2), z(3)), FcClause::neq(z(1), z(3))])
            .unwrap();
        let found = min_colors_increasing_k(&f, 4, 20).unwrap().unwrap();
        assert_eq!(found.k, 3);
        assert_eq!(found.ground.energy, q(3));
    }
}
