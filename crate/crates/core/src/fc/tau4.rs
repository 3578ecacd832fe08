use super::{FcClause, FcError, FcInstance, FcVar, Provenance, Result, VarUniverse};
use crate::bits::Bits;
use crate::instances::LabeledSample;

/// Formula whose colorings are exactly the state assignments of DFAs
/// consistent with the sample.
pub fn tau4(sample: &LabeledSample) -> Result<FcInstance> {
    let provenance = Provenance { layout: sample.layout, anchor: sample.layout.lsb_of_n_position };
    tau4_from_strings(&sample.strings(), &sample.labels(), Some(provenance))
}

/// Same construction for arbitrary equal-length labeled strings.
///
/// First `m - 1` clauses `(z_1^0 = z_1^0) -> (z_1^0 = z_i^0)` pin every
/// string to one start state; without them each string could keep a private
/// chain of states and two colors would always suffice. Then one Impl clause
/// per unordered pair of distinct positions whose next bits agree, in
/// lexicographic order of `(i, j)`; the mirrored ordered pair would give the
/// same clause up to symmetry, so none is generated. Neq clauses come last.
pub fn tau4_from_strings(strings: &[Bits], labels: &[bool], provenance: Option<Provenance>) -> Result<FcInstance> {
    let first = strings.first().ok_or(FcError::EmptySample)?;
    let len = first.len();
    if strings.iter().any(|w| w.len() != len) || labels.len() != strings.len() {
        return Err(FcError::RaggedSample);
    }
    let m = strings.len();

    // Positions (i, j) in lexicographic order, split by the bit read next.
    let mut groups: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
    let mut rank = vec![0usize; m * len];
    for (i, w) in strings.iter().enumerate() {
        for (j, bit) in w.iter().enumerate() {
            let g = &mut groups[usize::from(bit)];
            rank[i * len + j] = g.len();
            g.push((i + 1, j));
        }
    }
    let mut clauses = Vec::with_capacity(tau4_clause_count(strings, labels));
    let start = FcVar::z(1, 0);
    for i in 2..=m {
        clauses.push(FcClause::implies(start, start, start, FcVar::z(i, 0)));
    }
    for (i, w) in strings.iter().enumerate() {
        for (j, bit) in w.iter().enumerate() {
            let group = &groups[usize::from(bit)];
            for &(i2, j2) in &group[rank[i * len + j] + 1..] {
                clauses.push(FcClause::implies(
                    FcVar::z(i + 1, j),
                    FcVar::z(i2, j2),
                    FcVar::z(i + 1, j + 1),
                    FcVar::z(i2, j2 + 1),
                ));
            }
        }
    }
    for i1 in 0..m {
        for i2 in i1 + 1..m {
            if labels[i1] != labels[i2] {
                clauses.push(FcClause::neq(FcVar::z(i1 + 1, len), FcVar::z(i2 + 1, len)));
            }
        }
    }
    Ok(FcInstance::from_parts_unchecked(VarUniverse::Structured { m, len }, clauses, provenance))
}

/// `m - 1` start clauses, `C(zeros, 2) + C(ones, 2)` Impl clauses over all
/// `m * L` positions, and one Neq clause per positive/negative pair.
pub fn tau4_clause_count(strings: &[Bits], labels: &[bool]) -> usize {
    let ones: usize = strings.iter().map(|w| w.iter().filter(|&b| b).count()).sum();
    let zeros = strings.iter().map(Bits::len).sum::<usize>() - ones;
    let pos = labels.iter().filter(|&&b| b).count();
    let pairs = |n: usize| n * n.saturating_sub(1) / 2;
    labels.len().saturating_sub(1) + pairs(zeros) + pairs(ones) + pos * (labels.len() - pos)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(text: &str) -> Bits {
        text.parse().unwrap()
    }

    #[test]
    fn two_single_bit_strings() {
        let f = tau4_from_strings(&[bits("0"), bits("1")], &[false, true], None).unwrap();
        assert_eq!(f.var_count(), 4);
        let start = FcVar::z(1, 0);
        assert_eq!(
            f.clauses(),
            &[FcClause::implies(start, start, start, FcVar::z(2, 0)), FcClause::neq(FcVar::z(1, 1), FcVar::z(2, 1))]
        );
        assert_eq!(f.clauses().len(), tau4_clause_count(&[bits("0"), bits("1")], &[false, true]));
    }

    #[test]
    fn single_string_has_no_neq() {
        let f = tau4_from_strings(&[bits("0110")], &[true], None).unwrap();
        assert_eq!(f.neq_count(), 0);
        assert_eq!(f.impl_count(), 2);
        assert_eq!(f.clauses().len(), tau4_clause_count(&[bits("0110")], &[true]));
    }

    #[test]
    fn ragged_or_empty_samples_fail() {
        assert_eq!(tau4_from_strings(&[bits("0"), bits("01")], &[false, true], None), Err(FcError::RaggedSample));
        assert_eq!(tau4_from_strings(&[bits("0")], &[], None), Err(FcError::RaggedSample));
        assert_eq!(tau4_from_strings(&[], &[], None), Err(FcError::EmptySample));
    }
}
