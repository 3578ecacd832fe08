//! Corpora and slow-but-obvious reference computations shared by the
//! integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trapdoor_core::fc::{FcClause, FcInstance, FcVar};
use trapdoor_core::qubo::Multilinear;

fn z(id: usize) -> FcVar {
    FcVar::Flat(id as u32)
}

/// Every distinct clause over `n` variables up to the symmetry of `=` and
/// `!=`: `u != v` (including `u != u`), `(u = v) -> (k = l)` with distinct
/// pairs, and the bare equality `(k = k) -> (k = l)`. Tautologies
/// `(u = v) -> (k = k)` are left out.
pub fn clause_pool(n: usize) -> Vec<FcClause> {
    let pairs: Vec<(usize, usize)> = (1..=n).flat_map(|u| (u + 1..=n).map(move |v| (u, v))).collect();
    let mut pool: Vec<FcClause> = (1..=n).flat_map(|u| (u..=n).map(move |v| FcClause::neq(z(u), z(v)))).collect();
    for &(u, v) in &pairs {
        for &(k, l) in &pairs {
            if (u, v) != (k, l) {
                pool.push(FcClause::implies(z(u), z(v), z(k), z(l)));
            }
        }
    }
    for &(k, l) in &pairs {
        pool.push(FcClause::implies(z(k), z(k), z(k), z(l)));
    }
    pool
}

/// All instances with 1 to `max_vars` variables and at most `max_clauses`
/// distinct clauses from [`clause_pool`].
pub fn exhaustive_corpus(max_vars: usize, max_clauses: usize) -> Vec<FcInstance> {
    let mut out = Vec::new();
    for n in 1..=max_vars {
        let pool = clause_pool(n);
        let mut chosen = Vec::new();
        subsets(&pool, 0, max_clauses, &mut chosen, &mut |clauses| {
            out.push(FcInstance::flat(n, clauses.to_vec()).unwrap());
        });
    }
    out
}

fn subsets(pool: &[FcClause], from: usize, left: usize, chosen: &mut Vec<FcClause>, emit: &mut dyn FnMut(&[FcClause])) {
    emit(chosen);
    if left == 0 {
        return;
    }
    for i in from..pool.len() {
        chosen.push(pool[i]);
        subsets(pool, i + 1, left - 1, chosen, emit);
        chosen.pop();
    }
}

/// Seeded random flat instances with `1..=max_vars` variables and
/// `0..=max_clauses` clauses, each clause Neq or Impl with equal odds and
/// uniformly chosen variables.
pub fn random_corpus(count: usize, max_vars: usize, max_clauses: usize, seed: u64) -> Vec<FcInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_vars);
            let r = rng.gen_range(0..=max_clauses);
            let clauses = (0..r)
                .map(|_| {
                    let neq = rng.gen_bool(0.5);
                    let mut v = [0usize; 4];
                    for slot in &mut v {
                        *slot = rng.gen_range(1..=n);
                    }
                    if neq {
                        FcClause::neq(z(v[0]), z(v[1]))
                    } else {
                        FcClause::implies(z(v[0]), z(v[1]), z(v[2]), z(v[3]))
                    }
                })
                .collect();
            FcInstance::flat(n, clauses).unwrap()
        })
        .collect()
}

/// Common denominator of every coefficient of the given polynomials.
pub fn common_denominator(polys: &[&Multilinear]) -> BigInt {
    let mut d = BigInt::one();
    for p in polys {
        d = d.lcm(p.offset().denom());
        for (_, c) in p.terms() {
            d = d.lcm(c.denom());
        }
    }
    d
}

fn scaled(c: &BigRational, denom: &BigInt) -> i128 {
    (c.numer() * (denom / c.denom())).to_i128().expect("coefficient fits in i128")
}

/// `denom * p(b)` for every assignment `b`, indexed by the bit mask with
/// variable `i` at bit `i`, via the subset-sum (zeta) transform.
pub fn binary_table(p: &Multilinear, denom: &BigInt) -> Vec<i128> {
    let n = p.var_count();
    let mut table = vec![0i128; 1 << n];
    table[0] = scaled(p.offset(), denom);
    for (vars, c) in p.terms() {
        table[mask(vars)] += scaled(c, denom);
    }
    for i in 0..n {
        for s in 0..table.len() {
            if s >> i & 1 == 1 {
                table[s] += table[s ^ 1 << i];
            }
        }
    }
    table
}

/// `denom * p(Z)` at `Z_i = 1 - 2 b_i` for every assignment `b`, via the
/// Walsh-Hadamard transform.
pub fn ising_table(p: &Multilinear, denom: &BigInt) -> Vec<i128> {
    let n = p.var_count();
    let mut table = vec![0i128; 1 << n];
    table[0] = scaled(p.offset(), denom);
    for (vars, c) in p.terms() {
        table[mask(vars)] += scaled(c, denom);
    }
    for i in 0..n {
        for s in 0..table.len() {
            if s >> i & 1 == 0 {
                let (a, b) = (table[s], table[s | 1 << i]);
                table[s] = a + b;
                table[s | 1 << i] = a - b;
            }
        }
    }
    table
}

fn mask(vars: &[u32]) -> usize {
    vars.iter().fold(0, |m, &v| m | 1 << v)
}

pub fn bits_of(mask: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

pub fn rational(numer: i128, denom: &BigInt) -> BigRational {
    BigRational::new(BigInt::from(numer), denom.clone())
}

pub fn is_zero(r: &BigRational) -> bool {
    r.is_zero()
}
