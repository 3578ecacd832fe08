//! Integer linear programs produced from formula coloring instances.
//!
//! Every model here has the shape emitted by [`tau5`]: the variable list is
//! fixed by the number of formula variables `M` and Impl clauses `R`, so it
//! is computed on demand rather than stored. Constraints live in a
//! compressed row store; models from realistic samples reach millions of
//! rows.

mod brute;
mod json;
mod lp;
mod tau5;
mod verify;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use brute::{brute_force_ilp, IlpOptimum};
pub use json::{AssignmentFile, ModelFile};
pub use lp::{parse_lp, write_lp};
pub use tau5::{assignment_from_coloring, reconstruct_fc, tau5};
pub use verify::{g2, verify_assignment, AssignmentVerdict};

use crate::fc::{FcError, Provenance, VarUniverse};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IlpError {
    #[error("formula has no variables")]
    EmptyUniverse,
    #[error("assignment has {actual} values, model declares {expected} variables")]
    MissingVariable { expected: usize, actual: usize },
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("variable {0} is declared twice")]
    DuplicateVariable(String),
    #[error("model is infeasible")]
    Infeasible,
    #[error("search budget of {budget} nodes exhausted")]
    BudgetExceeded { budget: u64 },
    #[error("assignment is not feasible: {0}")]
    Infeasibility(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("model is not a formula coloring encoding: {0}")]
    NotTau5(String),
    #[error("clause {clause} has cancelling terms and cannot be recovered")]
    Degenerate { clause: usize },
    #[error(transparent)]
    Fc(#[from] FcError),
}

pub type Result<T> = std::result::Result<T, IlpError>;

/// Structured variable names; all indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarName {
    /// Color `i` is used.
    W(usize),
    /// Formula variable `u` has color `i`.
    X(usize, usize),
    /// Color of formula variable `u`.
    Zhat(usize),
    /// Impl clause `j`: consequent holds.
    A(usize),
    /// Impl clause `j`: antecedent fails.
    B(usize),
    /// Impl clause `j`: clause holds.
    S(usize),
    /// Impl clause `j`: order of the consequent colors when they differ.
    Q(usize),
    /// Impl clause `j`: order of the antecedent colors when they differ.
    Qp(usize),
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VarName::W(i) => write!(f, "w_{i}"),
            VarName::X(u, i) => write!(f, "x_{u}_{i}"),
            VarName::Zhat(u) => write!(f, "zhat_{u}"),
            VarName::A(j) => write!(f, "a_{j}"),
            VarName::B(j) => write!(f, "b_{j}"),
            VarName::S(j) => write!(f, "s_{j}"),
            VarName::Q(j) => write!(f, "q_{j}"),
            VarName::Qp(j) => write!(f, "qp_{j}"),
        }
    }
}

impl FromStr for VarName {
    type Err = IlpError;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || IlpError::UnknownVariable(text.to_string());
        let (prefix, rest) = text.split_once('_').ok_or_else(bad)?;
        let index = |s: &str| -> Result<usize> {
            // Canonical decimal only, so that names map back one-to-one.
            if s.is_empty() || s.starts_with('0') || !s.bytes().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            s.parse().map_err(|_| bad())
        };
        Ok(match prefix {
            "x" => {
                let (u, i) = rest.split_once('_').ok_or_else(bad)?;
                VarName::X(index(u)?, index(i)?)
            }
            "w" => VarName::W(index(rest)?),
            "zhat" => VarName::Zhat(index(rest)?),
            "a" => VarName::A(index(rest)?),
            "b" => VarName::B(index(rest)?),
            "s" => VarName::S(index(rest)?),
            "q" => VarName::Q(index(rest)?),
            "qp" => VarName::Qp(index(rest)?),
            _ => return Err(bad()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IlpVar {
    pub name: VarName,
    pub lower: i64,
    pub upper: i64,
}

impl IlpVar {
    pub fn is_binary(&self) -> bool {
        self.lower == 0 && self.upper == 1 && !matches!(self.name, VarName::Zhat(_))
    }
}

/// Declared variable order: `w_1..w_M`, `x_{u,i}` (u-major), `zhat_1..zhat_M`,
/// then `a_j, b_j, s_j, q_j, qp_j` for each Impl clause `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub m: usize,
    pub r: usize,
}

impl VarLayout {
    pub fn len(&self) -> usize {
        self.m * self.m + 2 * self.m + 5 * self.r
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn w(&self, i: usize) -> usize {
        i - 1
    }

    pub fn x(&self, u: usize, i: usize) -> usize {
        self.m + (u - 1) * self.m + (i - 1)
    }

    pub fn zhat(&self, u: usize) -> usize {
        self.m + self.m * self.m + (u - 1)
    }

    fn impl_base(&self, j: usize) -> usize {
        2 * self.m + self.m * self.m + 5 * (j - 1)
    }

    pub fn a(&self, j: usize) -> usize {
        self.impl_base(j)
    }

    pub fn b(&self, j: usize) -> usize {
        self.impl_base(j) + 1
    }

    pub fn s(&self, j: usize) -> usize {
        self.impl_base(j) + 2
    }

    pub fn q(&self, j: usize) -> usize {
        self.impl_base(j) + 3
    }

    pub fn qp(&self, j: usize) -> usize {
        self.impl_base(j) + 4
    }

    pub fn var(&self, index: usize) -> IlpVar {
        let m = self.m;
        let binary = |name| IlpVar { name, lower: 0, upper: 1 };
        if index < m {
            binary(VarName::W(index + 1))
        } else if index < m + m * m {
            let k = index - m;
            binary(VarName::X(k / m + 1, k % m + 1))
        } else if index < 2 * m + m * m {
            IlpVar { name: VarName::Zhat(index - m - m * m + 1), lower: 1, upper: m as i64 }
        } else {
            let k = index - 2 * m - m * m;
            let j = k / 5 + 1;
            binary(match k % 5 {
                0 => VarName::A(j),
                1 => VarName::B(j),
                2 => VarName::S(j),
                3 => VarName::Q(j),
                _ => VarName::Qp(j),
            })
        }
    }

    pub fn index(&self, name: VarName) -> Option<usize> {
        let (m, r) = (self.m, self.r);
        let ok = |i: usize, n: usize| i >= 1 && i <= n;
        match name {
            VarName::W(i) if ok(i, m) => Some(self.w(i)),
            VarName::X(u, i) if ok(u, m) && ok(i, m) => Some(self.x(u, i)),
            VarName::Zhat(u) if ok(u, m) => Some(self.zhat(u)),
            VarName::A(j) if ok(j, r) => Some(self.a(j)),
            VarName::B(j) if ok(j, r) => Some(self.b(j)),
            VarName::S(j) if ok(j, r) => Some(self.s(j)),
            VarName::Q(j) if ok(j, r) => Some(self.q(j)),
            VarName::Qp(j) if ok(j, r) => Some(self.qp(j)),
            _ => None,
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = IlpVar> + '_ {
        (0..self.len()).map(|i| self.var(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Relation {
    pub fn holds(&self, lhs: i128, rhs: i128) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

/// Constraint family; each one is a piece of the encoding of one formula
/// clause or one variable-color pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Every variable takes exactly one color.
    OneHot,
    /// `x_{u,i} = 1` forces `zhat_u <= i`.
    LinkUp,
    /// `x_{u,i} = 1` forces `zhat_u >= i`.
    LinkLo,
    /// A variable may only use an active color.
    Usage,
    /// The two sides of a Neq clause differ in color `i`.
    Neq,
    /// `a = 1` forces `zhat_k <= zhat_l`.
    EqFu,
    /// `a = 1` forces `zhat_k >= zhat_l`.
    EqFl,
    /// `a = 0, q = 1` forces `zhat_k < zhat_l`.
    EqBl,
    /// `a = 0, q = 0` forces `zhat_k > zhat_l`.
    EqBg,
    /// `b = 1, q' = 1` forces `zhat_u < zhat_v`.
    NeFl,
    /// `b = 1, q' = 0` forces `zhat_u > zhat_v`.
    NeFg,
    /// `b = 0` forces `zhat_u <= zhat_v`.
    NeBu,
    /// `b = 0` forces `zhat_u >= zhat_v`.
    NeBl,
    /// `s >= a`.
    OrA,
    /// `s >= b`.
    OrB,
    /// `s <= a + b`.
    OrUp,
    /// `s >= 1`.
    Clause,
}

impl Family {
    pub const ALL: [Family; 17] = [
        Family::OneHot,
        Family::LinkUp,
        Family::LinkLo,
        Family::Usage,
        Family::Neq,
        Family::EqFu,
        Family::EqFl,
        Family::EqBl,
        Family::EqBg,
        Family::NeFl,
        Family::NeFg,
        Family::NeBu,
        Family::NeBl,
        Family::OrA,
        Family::OrB,
        Family::OrUp,
        Family::Clause,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            Family::OneHot => "onehot",
            Family::LinkUp => "linkup",
            Family::LinkLo => "linklo",
            Family::Usage => "usage",
            Family::Neq => "neq",
            Family::EqFu => "eqfu",
            Family::EqFl => "eqfl",
            Family::EqBl => "eqbl",
            Family::EqBg => "eqbg",
            Family::NeFl => "nefl",
            Family::NeFg => "nefg",
            Family::NeBu => "nebu",
            Family::NeBl => "nebl",
            Family::OrA => "ora",
            Family::OrB => "orb",
            Family::OrUp => "orup",
            Family::Clause => "clause",
        }
    }

    pub fn from_code(code: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.code() == code)
    }

    /// Families emitted once per formula clause.
    pub fn is_clause_family(&self) -> bool {
        !matches!(self, Family::OneHot | Family::LinkUp | Family::LinkLo | Family::Usage)
    }
}

/// Provenance label of a constraint: its family and, for clause families,
/// the 0-based index of the formula clause it encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tag {
    pub family: Family,
    pub clause: Option<usize>,
}

impl Tag {
    pub fn new(family: Family, clause: Option<usize>) -> Self {
        Tag { family, clause }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    /// `(coefficient, variable index)` pairs.
    pub terms: Vec<(i64, usize)>,
    pub relation: Relation,
    pub rhs: i64,
    pub tag: Tag,
}

/// Borrowed row of the constraint store.
#[derive(Debug, Clone, Copy)]
pub struct ConstraintRef<'a> {
    coefs: &'a [i64],
    vars: &'a [u32],
    pub relation: Relation,
    pub rhs: i64,
    pub tag: Tag,
}

impl<'a> ConstraintRef<'a> {
    pub fn terms(&self) -> impl Iterator<Item = (i64, usize)> + 'a {
        self.coefs.iter().copied().zip(self.vars.iter().map(|&v| v as usize))
    }

    pub fn len(&self) -> usize {
        self.coefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefs.is_empty()
    }

    pub fn lhs(&self, values: &[i64]) -> i128 {
        self.terms().map(|(c, v)| i128::from(c) * i128::from(values[v])).sum()
    }

    pub fn holds(&self, values: &[i64]) -> bool {
        self.relation.holds(self.lhs(values), i128::from(self.rhs))
    }

    pub fn to_owned(&self) -> LinearConstraint {
        LinearConstraint { terms: self.terms().collect(), relation: self.relation, rhs: self.rhs, tag: self.tag }
    }
}

/// Where a model came from: the formula's variable universe and sample
/// provenance, enough to rebuild the formula from the tagged rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcOrigin {
    pub vars: VarUniverse,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "R")]
    pub r: usize,
}

impl ModelStats {
    /// Rows emitted here: one-hot (`M`), two big-M links and one usage row
    /// per variable-color pair (`3M^2`), `M` per Neq clause, 12 per Impl.
    pub fn constraint_count(&self) -> usize {
        3 * self.m * self.m + self.m + self.q * self.m + 12 * self.r
    }

    pub fn var_count(&self) -> usize {
        self.m * self.m + 2 * self.m + 5 * self.r
    }

    /// Count claimed for the fully bidirectional variable-color link.
    pub fn bidirectional_constraint_count(&self) -> usize {
        self.m * (4 * self.m + self.q + 1) + 12 * self.r
    }

    pub fn bidirectional_var_count(&self) -> usize {
        2 * self.m * (self.m + 1) + 5 * self.r
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct RowStore {
    offsets: Vec<u32>,
    coefs: Vec<i64>,
    vars: Vec<u32>,
    relations: Vec<Relation>,
    rhs: Vec<i64>,
    tags: Vec<Tag>,
}

/// Minimize `sum_i w_i` subject to the stored rows and the layout's bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpModel {
    origin: Option<FcOrigin>,
    layout: VarLayout,
    q: usize,
    rows: RowStore,
}

impl IlpModel {
    pub fn new(stats: ModelStats, origin: Option<FcOrigin>) -> Self {
        let mut rows = RowStore { offsets: vec![0], ..RowStore::default() };
        rows.offsets.reserve(stats.constraint_count());
        rows.relations.reserve(stats.constraint_count());
        rows.rhs.reserve(stats.constraint_count());
        rows.tags.reserve(stats.constraint_count());
        IlpModel { origin, layout: VarLayout { m: stats.m, r: stats.r }, q: stats.q, rows }
    }

    /// Appends a row. Repeated variables are merged into their first
    /// occurrence and zero coefficients dropped; term order is otherwise kept.
    pub fn push(&mut self, c: LinearConstraint) -> Result<()> {
        let n = self.layout.len();
        if let Some(&(_, var)) = c.terms.iter().find(|&&(_, var)| var >= n) {
            return Err(IlpError::UnknownVariable(format!("#{var}")));
        }
        let mut merged: Vec<(i64, usize)> = Vec::with_capacity(c.terms.len());
        let mut slot = std::collections::HashMap::new();
        for (coef, var) in c.terms {
            let existing = if merged.len() < 16 {
                merged.iter().position(|t| t.1 == var)
            } else {
                if slot.is_empty() {
                    slot.extend(merged.iter().enumerate().map(|(at, t)| (t.1, at)));
                }
                slot.get(&var).copied()
            };
            match existing {
                Some(at) => merged[at].0 += coef,
                None => {
                    if !slot.is_empty() {
                        slot.insert(var, merged.len());
                    }
                    merged.push((coef, var));
                }
            }
        }
        for (coef, var) in merged.into_iter().filter(|&(coef, _)| coef != 0) {
            self.rows.coefs.push(coef);
            self.rows.vars.push(var as u32);
        }
        let end = self.rows.coefs.len();
        self.rows.offsets.push(u32::try_from(end).expect("term count fits in 32 bits"));
        self.rows.relations.push(c.relation);
        self.rows.rhs.push(c.rhs);
        self.rows.tags.push(c.tag);
        Ok(())
    }

    pub fn origin(&self) -> Option<&FcOrigin> {
        self.origin.as_ref()
    }

    pub fn layout(&self) -> &VarLayout {
        &self.layout
    }

    pub fn stats(&self) -> ModelStats {
        ModelStats { m: self.layout.m, q: self.q, r: self.layout.r }
    }

    pub fn var_count(&self) -> usize {
        self.layout.len()
    }

    pub fn var(&self, index: usize) -> IlpVar {
        self.layout.var(index)
    }

    pub fn vars(&self) -> impl Iterator<Item = IlpVar> + '_ {
        self.layout.vars()
    }

    pub fn constraint_count(&self) -> usize {
        self.rows.tags.len()
    }

    pub fn term_count(&self) -> usize {
        self.rows.coefs.len()
    }

    pub fn constraint(&self, row: usize) -> ConstraintRef<'_> {
        let (lo, hi) = (self.rows.offsets[row] as usize, self.rows.offsets[row + 1] as usize);
        ConstraintRef {
            coefs: &self.rows.coefs[lo..hi],
            vars: &self.rows.vars[lo..hi],
            relation: self.rows.relations[row],
            rhs: self.rows.rhs[row],
            tag: self.rows.tags[row],
        }
    }

    pub fn constraints(&self) -> impl Iterator<Item = ConstraintRef<'_>> + '_ {
        (0..self.constraint_count()).map(|row| self.constraint(row))
    }

    /// Indices of the objective variables `w_1..w_M`.
    pub fn objective_vars(&self) -> std::ops::Range<usize> {
        0..self.layout.m
    }

    pub fn objective(&self, a: &IlpAssignment) -> i64 {
        a.values[self.objective_vars()].iter().sum()
    }

    /// LP-format row name, e.g. `r17_eqfu_c3`.
    pub fn row_name(&self, row: usize) -> String {
        let tag = self.rows.tags[row];
        match tag.clause {
            Some(c) => format!("r{row}_{}_c{c}", tag.family.code()),
            None => format!("r{row}_{}", tag.family.code()),
        }
    }
}

/// Values for every model variable, in declared order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpAssignment {
    pub values: Vec<i64>,
}

impl IlpAssignment {
    pub fn new(values: Vec<i64>) -> Self {
        IlpAssignment { values }
    }

    pub fn value(&self, index: usize) -> i64 {
        self.values[index]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_a_bijection() {
        let layout = VarLayout { m: 3, r: 2 };
        assert_eq!(layout.len(), 9 + 6 + 10);
        for idx in 0..layout.len() {
            let v = layout.var(idx);
            assert_eq!(layout.index(v.name), Some(idx));
            assert_eq!(v.name.to_string().parse::<VarName>().unwrap(), v.name);
        }
        assert_eq!(layout.var(layout.x(2, 3)).name, VarName::X(2, 3));
        assert_eq!(layout.var(layout.qp(2)).name, VarName::Qp(2));
        assert_eq!(layout.var(layout.zhat(1)), IlpVar { name: VarName::Zhat(1), lower: 1, upper: 3 });
        assert_eq!(layout.index(VarName::A(3)), None);
        assert_eq!(layout.index(VarName::X(4, 1)), None);
    }

    #[test]
    fn names_parse_canonically() {
        assert_eq!("x_12_3".parse::<VarName>().unwrap(), VarName::X(12, 3));
        assert_eq!("qp_7".parse::<VarName>().unwrap(), VarName::Qp(7));
        for bad in ["x_1", "w_01", "w_", "zhat_1_2", "y_1", "w_1a", "q_0"] {
            assert!(bad.parse::<VarName>().is_err(), "{bad}");
        }
    }

    #[test]
    fn push_merges_and_drops_zeros() {
        let mut model = IlpModel::new(ModelStats { m: 2, q: 0, r: 0 }, None);
        let tag = Tag::new(Family::Neq, Some(0));
        model
            .push(LinearConstraint { terms: vec![(1, 2), (1, 2), (3, 0), (-3, 0)], relation: Relation::Le, rhs: 1, tag })
            .unwrap();
        let row = model.constraint(0);
        assert_eq!(row.terms().collect::<Vec<_>>(), vec![(2, 2)]);
        assert!(model
            .push(LinearConstraint { terms: vec![(1, 99)], relation: Relation::Le, rhs: 1, tag })
            .is_err());
        assert_eq!(model.constraint_count(), 1);
        assert_eq!(model.term_count(), 1);
    }

    #[test]
    fn family_codes_are_distinct() {
        for f in Family::ALL {
            assert_eq!(Family::from_code(f.code()), Some(f));
        }
        let codes: std::collections::HashSet<_> = Family::ALL.iter().map(Family::code).collect();
        assert_eq!(codes.len(), Family::ALL.len());
    }
}
