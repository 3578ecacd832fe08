use super::{Coloring, FcClause, FcError, FcInstance, FcVar, Result, VarUniverse};
use crate::bits::Bits;
use crate::representations::{run_dfa, Dfa};

fn structured_shape(f: &FcInstance) -> Result<(usize, usize)> {
    match *f.vars() {
        VarUniverse::Structured { m, len } => Ok((m, len)),
        VarUniverse::Flat { .. } => Err(FcError::NotStructured),
    }
}

/// Reads the example strings back out of a sample formula.
///
/// `w_1` has a known one at the anchor, so every Impl clause pairing the
/// anchor step `z_1^{a-1} -> z_1^a` with a step `z_i^j -> z_i^{j+1}` proves
/// that bit `j + 1` of `w_i` is also one. Positions without such a clause
/// are zero.
pub fn infer_strings(f: &FcInstance) -> Result<Vec<Bits>> {
    let anchor = f.provenance().ok_or(FcError::MissingProvenance)?.anchor;
    let (m, len) = structured_shape(f)?;
    if anchor == 0 || anchor > len {
        return Err(FcError::BadAnchor { anchor, len });
    }
    let from = FcVar::z(1, anchor - 1);
    let to = FcVar::z(1, anchor);
    let step = |a: FcVar, b: FcVar| match (a, b) {
        (FcVar::Structured(i, j), FcVar::Structured(i2, j2)) if i == i2 && j + 1 == j2 => Some((i as usize, j2 as usize)),
        _ => None,
    };

    let mut strings = vec![Bits::zeros(len); m];
    strings[0].set(anchor, true);
    let mut matched = false;
    for clause in f.clauses() {
        let FcClause::Impl { u, v, k, l } = *clause else { continue };
        let hit = if (u, k) == (from, to) {
            step(v, l)
        } else if (v, l) == (from, to) {
            step(u, k)
        } else {
            None
        };
        if let Some((i, pos)) = hit {
            strings[i - 1].set(pos, true);
            matched = true;
        }
    }
    if !matched {
        return Err(FcError::AnchorFamilyEmpty);
    }
    Ok(strings)
}

/// Colors `z_i^j` with the state `t` reaches after the first `j` bits of
/// `w_i`, renumbered by first appearance.
pub fn coloring_from_dfa(f: &FcInstance, strings: &[Bits], t: &Dfa) -> Result<Coloring> {
    let (m, len) = structured_shape(f)?;
    if strings.len() != m || strings.iter().any(|w| w.len() != len) {
        return Err(FcError::ShapeMismatch { m, len });
    }
    let mut states = Vec::with_capacity(f.var_count());
    for w in strings {
        states.extend(run_dfa(t, w.as_slice()).1);
    }
    for (index, clause) in f.clauses().iter().enumerate() {
        if let FcClause::Neq { a, b } = *clause {
            if states[f.index(a)] == states[f.index(b)] {
                return Err(FcError::InconsistentDfa { clause: index });
            }
        }
    }
    Ok(Coloring::from_classes(&states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fc::{tau4, tau4_from_strings, verify_coloring};
    use crate::instances::generate_sample;
    use crate::numtheory::keygen;
    use crate::representations::{build_prefix_tree_dfa, minimize_dfa};

    fn bits(text: &str) -> Bits {
        text.parse().unwrap()
    }

    #[test]
    fn recovers_generated_strings() {
        for (b, m, seed) in [(4, 5, 1), (5, 1, 2), (6, 3, 9)] {
            let key = keygen(b, seed).unwrap();
            let sample = generate_sample(&key, m, seed).unwrap();
            let f = tau4(&sample).unwrap();
            assert_eq!(infer_strings(&f).unwrap(), sample.strings());
        }
    }

    #[test]
    fn requires_provenance() {
        let f = tau4_from_strings(&[bits("01")], &[true], None).unwrap();
        assert_eq!(infer_strings(&f), Err(FcError::MissingProvenance));
    }

    #[test]
    fn prefix_tree_coloring_is_valid() {
        let strings = vec![bits("00"), bits("01"), bits("11")];
        let labels = [false, true, true];
        let f = tau4_from_strings(&strings, &labels, None).unwrap();
        let pairs: Vec<(Bits, bool)> = strings.iter().cloned().zip(labels).collect();
        let t = minimize_dfa(&build_prefix_tree_dfa(&pairs).unwrap());
        let p = coloring_from_dfa(&f, &strings, &t).unwrap();
        assert!(verify_coloring(&f, &p).unwrap().is_valid());
        assert!(p.k() as usize <= t.state_count());
        // Shared prefix "0" gives z_1^1 and z_2^1 one color.
        assert_eq!(p.color(f.index(FcVar::z(1, 1))), p.color(f.index(FcVar::z(2, 1))));
    }

    #[test]
    fn inconsistent_dfa_is_refused() {
        let strings = vec![bits("0"), bits("1")];
        let f = tau4_from_strings(&strings, &[false, true], None).unwrap();
        let accept_all = Dfa::new(vec![true], vec![[0, 0]]).unwrap();
        assert_eq!(coloring_from_dfa(&f, &strings, &accept_all), Err(FcError::InconsistentDfa { clause: 1 }));
        assert_eq!(
            coloring_from_dfa(&f, &strings[..1], &accept_all),
            Err(FcError::ShapeMismatch { m: 2, len: 1 })
        );
    }
}
