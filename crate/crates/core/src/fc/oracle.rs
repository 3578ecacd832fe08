use super::{Coloring, FcError, FcInstance, Result};

pub const DEFAULT_MAX_VARS: usize = 12;

/// Exhaustive minimum coloring over set partitions written as restricted
/// growth strings. Tries `k = 1, 2, ...` and returns the lexicographically
/// least valid string with `k` blocks for the first `k` that admits one.
pub fn brute_force_min_coloring(f: &FcInstance, max_vars: usize) -> Result<Coloring> {
    let n = f.var_count();
    if n > max_vars {
        return Err(FcError::TooManyVars { count: n, max: max_vars });
    }
    // Each clause is checked once its highest variable has been assigned.
    let mut due: Vec<Vec<[usize; 4]>> = vec![Vec::new(); n];
    for clause in f.clauses() {
        let idx: Vec<usize> = clause.vars().into_iter().map(|v| f.index(v)).collect();
        let packed = match idx[..] {
            [a, b] => [a, b, usize::MAX, usize::MAX],
            [u, v, k, l] => [u, v, k, l],
            _ => unreachable!("clauses have two or four operands"),
        };
        let last = *idx.iter().max().expect("clauses have operands");
        due[last].push(packed);
    }

    let mut rgs = vec![0usize; n];
    for k in 1..=n.max(1) {
        if search(&due, &mut rgs, 0, 0, k) {
            return Ok(Coloring::from_classes(&rgs));
        }
    }
    Err(FcError::NoValidColoring)
}

fn holds(c: &[usize; 4], rgs: &[usize]) -> bool {
    if c[2] == usize::MAX {
        rgs[c[0]] != rgs[c[1]]
    } else {
        rgs[c[0]] != rgs[c[1]] || rgs[c[2]] == rgs[c[3]]
    }
}

fn search(due: &[Vec<[usize; 4]>], rgs: &mut [usize], pos: usize, used: usize, k: usize) -> bool {
    if pos == rgs.len() {
        return true;
    }
    // Remaining positions must still be able to open the missing blocks.
    if k - used > rgs.len() - pos {
        return false;
    }
    for value in 0..=used.min(k - 1) {
        rgs[pos] = value;
        if due[pos].iter().all(|c| holds(c, rgs)) && search(due, rgs, pos + 1, used.max(value + 1), k) {
            return true;
        }
    }
    false
}
