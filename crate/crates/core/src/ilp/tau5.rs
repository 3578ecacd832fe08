use std::collections::BTreeMap;

use super::{
    Family, FcOrigin, IlpAssignment, IlpError, IlpModel, LinearConstraint, ModelStats, Relation, Result, Tag,
    VarLayout,
};
use crate::fc::{Coloring, FcClause, FcInstance};

/// Encodes minimum coloring of `f` as an ILP whose optimum is the minimum
/// number of colors.
///
/// Variable `u` (1-based, in universe order) gets an integer color
/// `zhat_u` in `1..=M` and one-hot indicators `x_{u,i}`. The indicator link
/// is only encoded in the direction `x_{u,i} = 1 => zhat_u = i`; the other
/// direction follows from the one-hot row, since the single active
/// indicator must be the one matching `zhat_u`. Impl clauses use big-M
/// gadgets with `L = 2M`, which bounds `zhat_u + zhat_v`.
pub fn tau5(f: &FcInstance) -> Result<IlpModel> {
    let m = f.var_count();
    if m == 0 {
        return Err(IlpError::EmptyUniverse);
    }
    let stats = ModelStats { m, q: f.neq_count(), r: f.impl_count() };
    let origin = FcOrigin { vars: *f.vars(), provenance: f.provenance().copied() };
    let mut model = IlpModel::new(stats, Some(origin));
    let lay = VarLayout { m, r: stats.r };
    let big = 2 * m as i64;
    let mut row = |terms: Vec<(i64, usize)>, relation, rhs, family, clause| {
        model
            .push(LinearConstraint { terms, relation, rhs, tag: Tag::new(family, clause) })
            .expect("indices come from the layout")
    };

    for u in 1..=m {
        row((1..=m).map(|i| (1, lay.x(u, i))).collect(), Relation::Eq, 1, Family::OneHot, None);
    }
    for u in 1..=m {
        for i in 1..=m {
            let color = i as i64;
            row(vec![(1, lay.zhat(u)), (big, lay.x(u, i))], Relation::Le, color + big, Family::LinkUp, None);
            row(vec![(1, lay.zhat(u)), (-big, lay.x(u, i))], Relation::Ge, color - big, Family::LinkLo, None);
            row(vec![(1, lay.x(u, i)), (-1, lay.w(i))], Relation::Le, 0, Family::Usage, None);
        }
    }

    let mut j = 0;
    for (c, clause) in f.clauses().iter().enumerate() {
        let at = |v| f.index(v) + 1;
        match *clause {
            FcClause::Neq { a, b } => {
                let (u, v) = (at(a), at(b));
                for i in 1..=m {
                    row(vec![(1, lay.x(u, i)), (1, lay.x(v, i))], Relation::Le, 1, Family::Neq, Some(c));
                }
            }
            FcClause::Impl { u, v, k, l } => {
                j += 1;
                let (zu, zv, zk, zl) = (lay.zhat(at(u)), lay.zhat(at(v)), lay.zhat(at(k)), lay.zhat(at(l)));
                let (a, b, s, q, qp) = (lay.a(j), lay.b(j), lay.s(j), lay.q(j), lay.qp(j));
                let c = Some(c);
                // a = 1 <=> zhat_k = zhat_l
                row(vec![(1, zk), (-1, zl), (big, a)], Relation::Le, big, Family::EqFu, c);
                row(vec![(1, zk), (-1, zl), (-big, a)], Relation::Ge, -big, Family::EqFl, c);
                row(vec![(1, zk), (-1, zl), (big, q), (-big, a)], Relation::Le, big - 1, Family::EqBl, c);
                row(vec![(1, zk), (-1, zl), (big, q), (big, a)], Relation::Ge, 1, Family::EqBg, c);
                // b = 1 <=> zhat_u != zhat_v
                row(vec![(1, zu), (-1, zv), (big, qp), (big, b)], Relation::Le, 2 * big - 1, Family::NeFl, c);
                row(vec![(1, zu), (-1, zv), (big, qp), (-big, b)], Relation::Ge, 1 - big, Family::NeFg, c);
                row(vec![(1, zu), (-1, zv), (-big, b)], Relation::Le, 0, Family::NeBu, c);
                row(vec![(1, zu), (-1, zv), (big, b)], Relation::Ge, 0, Family::NeBl, c);
                // s = a or b, s >= 1
                row(vec![(1, s), (-1, a)], Relation::Ge, 0, Family::OrA, c);
                row(vec![(1, s), (-1, b)], Relation::Ge, 0, Family::OrB, c);
                row(vec![(1, s), (-1, a), (-1, b)], Relation::Le, 0, Family::OrUp, c);
                row(vec![(1, s)], Relation::Ge, 1, Family::Clause, c);
            }
        }
    }
    Ok(model)
}

/// Rebuilds the formula behind a model from its origin header and the
/// clause tags. Inverse of [`tau5`] on its image, except that an Impl
/// clause `(u = u) -> (k = l)` comes back as `(k = k) -> (k = l)`, and one
/// with `k = l` cannot be recovered at all.
pub fn reconstruct_fc(model: &IlpModel) -> Result<FcInstance> {
    let origin = model.origin().ok_or_else(|| IlpError::NotTau5("no origin recorded".into()))?;
    let stats = model.stats();
    let lay = *model.layout();
    if origin.vars.len() != stats.m {
        return Err(IlpError::NotTau5(format!("origin has {} variables, model {}", origin.vars.len(), stats.m)));
    }
    let zhat_of = |var: usize| {
        let first = lay.zhat(1);
        (first..first + lay.m).contains(&var).then(|| var - first)
    };
    // Signed colors in a row: the +1 and -1 zhat terms.
    let pair = |row: usize, clause: usize| -> Result<(usize, usize)> {
        let c = model.constraint(row);
        let pick = |sign: i64| c.terms().find(|&(coef, v)| coef == sign && zhat_of(v).is_some()).map(|(_, v)| v);
        match (pick(1), pick(-1)) {
            (Some(p), Some(n)) => Ok((zhat_of(p).unwrap(), zhat_of(n).unwrap())),
            _ => Err(IlpError::Degenerate { clause }),
        }
    };
    let var = |index: usize| origin.vars.var(index);

    let mut clauses: BTreeMap<usize, FcClause> = BTreeMap::new();
    let mut neq_rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut consequent: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for row in 0..model.constraint_count() {
        let c = model.constraint(row);
        let Some(clause) = c.tag.clause else {
            if c.tag.family.is_clause_family() {
                return Err(IlpError::NotTau5(format!("row {row} lacks a clause index")));
            }
            continue;
        };
        match c.tag.family {
            Family::Neq => {
                let count = neq_rows.entry(clause).or_insert(0);
                *count += 1;
                if *count == 1 {
                    let bad = || IlpError::NotTau5(format!("row {row} is not a Neq row"));
                    let mut ends = Vec::with_capacity(2);
                    for (coef, v) in c.terms() {
                        if v < lay.x(1, 1) || v >= lay.zhat(1) || !(1..=2).contains(&coef) {
                            return Err(bad());
                        }
                        ends.extend(std::iter::repeat_n((v - lay.x(1, 1)) / lay.m, coef as usize));
                    }
                    if ends.len() != 2 {
                        return Err(bad());
                    }
                    clauses.insert(clause, FcClause::neq(var(ends[0]), var(ends[1])));
                }
            }
            Family::EqFu => {
                consequent.insert(clause, pair(row, clause)?);
            }
            Family::NeBu => {
                let (k, l) = *consequent
                    .get(&clause)
                    .ok_or_else(|| IlpError::NotTau5(format!("clause {clause} lacks its consequent rows")))?;
                // A repeated antecedent cancels out of every row; the clause
                // then just says k = l, written back as (k = k) -> (k = l).
                let (u, v) = if c.terms().any(|(_, v)| zhat_of(v).is_some()) { pair(row, clause)? } else { (k, k) };
                clauses.insert(clause, FcClause::implies(var(u), var(v), var(k), var(l)));
            }
            f if f.is_clause_family() => {}
            f => return Err(IlpError::NotTau5(format!("row {row}: {} rows carry no clause", f.code()))),
        }
    }
    if let Some((&clause, _)) = neq_rows.iter().find(|(_, &n)| n != lay.m) {
        return Err(IlpError::NotTau5(format!("Neq clause {clause} has the wrong number of rows")));
    }
    if clauses.keys().enumerate().any(|(pos, &c)| pos != c) {
        return Err(IlpError::NotTau5("clause indices are not contiguous".into()));
    }
    // Counted before construction: canonical write-back can merge clauses.
    let q = clauses.values().filter(|c| matches!(c, FcClause::Neq { .. })).count();
    let rebuilt = ModelStats { m: origin.vars.len(), q, r: clauses.len() - q };
    if rebuilt != stats || model.constraint_count() != stats.constraint_count() {
        return Err(IlpError::NotTau5("row counts do not match the recovered formula".into()));
    }
    Ok(FcInstance::new(origin.vars, clauses.into_values().collect(), origin.provenance)?)
}

/// Feasible assignment for a valid coloring: active colors `1..=k`, `zhat`
/// equal to the colors, one-hot indicators, and each Impl clause's gadget
/// variables set to the truth values they encode.
pub fn assignment_from_coloring(model: &IlpModel, f: &FcInstance, p: &Coloring) -> Result<IlpAssignment> {
    let lay = *model.layout();
    if lay.m != f.var_count() || lay.r != f.impl_count() || p.len() != f.var_count() {
        return Err(IlpError::NotTau5("model, formula and coloring sizes disagree".into()));
    }
    let mut values = vec![0i64; lay.len()];
    let k = p.k() as usize;
    for i in 1..=k.min(lay.m) {
        values[lay.w(i)] = 1;
    }
    for u in 1..=lay.m {
        let color = p.color(u - 1) as usize;
        values[lay.zhat(u)] = color as i64;
        values[lay.x(u, color)] = 1;
    }
    let mut j = 0;
    for clause in f.clauses() {
        if let FcClause::Impl { u, v, k, l } = *clause {
            j += 1;
            let color = |var| i64::from(p.color(f.index(var)));
            let (cu, cv, ck, cl) = (color(u), color(v), color(k), color(l));
            let a = i64::from(ck == cl);
            let b = i64::from(cu != cv);
            values[lay.a(j)] = a;
            values[lay.b(j)] = b;
            values[lay.s(j)] = a | b;
            values[lay.q(j)] = i64::from(a == 0 && ck < cl);
            values[lay.qp(j)] = i64::from(b == 1 && cu < cv);
        }
    }
    Ok(IlpAssignment::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fc::{FcVar, VarUniverse};
    use crate::ilp::VarName;

    fn z(id: u32) -> FcVar {
        FcVar::Flat(id)
    }

    #[test]
    fn neq_model_shape() {
        let f = FcInstance::flat(2, vec![FcClause::neq(z(1), z(2))]).unwrap();
        let model = tau5(&f).unwrap();
        let names: Vec<String> = model.vars().map(|v| v.name.to_string()).collect();
        assert_eq!(names, ["w_1", "w_2", "x_1_1", "x_1_2", "x_2_1", "x_2_2", "zhat_1", "zhat_2"]);
        assert_eq!(model.constraint_count(), model.stats().constraint_count());
        assert_eq!(model.constraint_count(), 3 * 4 + 2 + 2);
        assert_eq!(model.stats().bidirectional_constraint_count(), 2 * (8 + 1 + 1));
    }

    #[test]
    fn counts_match_closed_forms() {
        let f = FcInstance::flat(
            4,
            vec![
                FcClause::neq(z(1), z(2)),
                FcClause::implies(z(1), z(3), z(2), z(4)),
                FcClause::implies(z(2), z(3), z(1), z(4)),
            ],
        )
        .unwrap();
        let model = tau5(&f).unwrap();
        let stats = model.stats();
        assert_eq!((stats.m, stats.q, stats.r), (4, 1, 2));
        assert_eq!(model.constraint_count(), stats.constraint_count());
        assert_eq!(model.var_count(), stats.var_count());
        assert_eq!(stats.var_count(), 16 + 8 + 10);
        assert_eq!(stats.bidirectional_var_count(), 40 + 10);
        assert_eq!(model.constraints().filter(|c| c.tag.clause.is_some()).count(), 4 + 24);
    }

    #[test]
    fn empty_universe_is_refused() {
        assert_eq!(tau5(&FcInstance::flat(0, vec![]).unwrap()), Err(IlpError::EmptyUniverse));
    }

    #[test]
    fn reconstruction_round_trips() {
        let f = FcInstance::new(
            VarUniverse::Structured { m: 2, len: 1 },
            vec![
                FcClause::implies(FcVar::z(2, 0), FcVar::z(1, 0), FcVar::z(2, 1), FcVar::z(1, 1)),
                FcClause::neq(FcVar::z(2, 1), FcVar::z(1, 1)),
            ],
            None,
        )
        .unwrap();
        assert_eq!(reconstruct_fc(&tau5(&f).unwrap()).unwrap(), f);
    }

    #[test]
    fn degenerate_consequent_cannot_be_recovered() {
        let f = FcInstance::flat(3, vec![FcClause::implies(z(1), z(2), z(3), z(3))]).unwrap();
        assert_eq!(reconstruct_fc(&tau5(&f).unwrap()), Err(IlpError::Degenerate { clause: 0 }));
    }

    #[test]
    fn repeated_antecedent_is_written_back_canonically() {
        let f = FcInstance::flat(3, vec![FcClause::implies(z(2), z(2), z(1), z(3))]).unwrap();
        let back = reconstruct_fc(&tau5(&f).unwrap()).unwrap();
        assert_eq!(back.clauses(), [FcClause::implies(z(1), z(1), z(1), z(3))]);
    }

    #[test]
    fn self_neq_keeps_a_doubled_term() {
        let f = FcInstance::flat(2, vec![FcClause::neq(z(2), z(2))]).unwrap();
        let model = tau5(&f).unwrap();
        assert_eq!(reconstruct_fc(&model).unwrap(), f);
        let last = model.constraint(model.constraint_count() - 1);
        assert_eq!(last.terms().collect::<Vec<_>>(), vec![(2, model.layout().x(2, 2))]);
    }

    #[test]
    fn forward_assignment_sets_gadgets() {
        let f = FcInstance::flat(4, vec![FcClause::implies(z(1), z(2), z(3), z(4))]).unwrap();
        let model = tau5(&f).unwrap();
        let p = Coloring::from_classes(&[1, 2, 1, 2]);
        let a = assignment_from_coloring(&model, &f, &p).unwrap();
        let lay = model.layout();
        let get = |name| a.value(lay.index(name).unwrap());
        assert_eq!((get(VarName::W(1)), get(VarName::W(2)), get(VarName::W(3))), (1, 1, 0));
        assert_eq!((get(VarName::A(1)), get(VarName::B(1)), get(VarName::S(1))), (0, 1, 1));
        assert_eq!((get(VarName::Q(1)), get(VarName::Qp(1))), (1, 1));
        assert_eq!(model.objective(&a), 2);
    }
}
