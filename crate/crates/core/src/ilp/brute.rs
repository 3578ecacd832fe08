use super::{IlpAssignment, IlpError, IlpModel, Relation, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpOptimum {
    pub assignment: IlpAssignment,
    pub objective: i64,
    /// Search nodes visited.
    pub nodes: u64,
}

/// Depth-first enumeration in declared variable order, smallest value
/// first. Each row tracks the range its left-hand side can still reach, so
/// a branch dies as soon as some row can no longer be satisfied; this also
/// propagates equalities such as the one-hot rows. Only strictly better
/// objectives replace the incumbent, so the result is the lexicographically
/// least optimal value vector. `budget` caps the number of search nodes.
pub fn brute_force_ilp(model: &IlpModel, budget: u64) -> Result<IlpOptimum> {
    let mut search = Search::new(model, budget);
    search.descend(0)?;
    let nodes = search.nodes;
    match search.best {
        Some((values, objective)) => Ok(IlpOptimum { assignment: IlpAssignment::new(values), objective, nodes }),
        None => Err(IlpError::Infeasible),
    }
}

struct Search {
    lower: Vec<i64>,
    upper: Vec<i64>,
    /// Per variable: `(row, coefficient)`.
    occurs: Vec<Vec<(usize, i64)>>,
    relation: Vec<Relation>,
    rhs: Vec<i128>,
    /// Per row: reachable `[lo, hi]` of the left-hand side given the
    /// current partial assignment.
    lo: Vec<i128>,
    hi: Vec<i128>,
    objective: Vec<i64>,
    values: Vec<i64>,
    best: Option<(Vec<i64>, i64)>,
    nodes: u64,
    budget: u64,
}

impl Search {
    fn new(model: &IlpModel, budget: u64) -> Self {
        let n = model.var_count();
        let (lower, upper): (Vec<i64>, Vec<i64>) = model.vars().map(|v| (v.lower, v.upper)).unzip();
        let mut occurs = vec![Vec::new(); n];
        let rows = model.constraint_count();
        let (mut lo, mut hi) = (vec![0i128; rows], vec![0i128; rows]);
        let mut relation = Vec::with_capacity(rows);
        let mut rhs = Vec::with_capacity(rows);
        for (row, c) in model.constraints().enumerate() {
            for (coef, var) in c.terms() {
                occurs[var].push((row, coef));
                let (a, b) = span(coef, lower[var], upper[var]);
                lo[row] += a;
                hi[row] += b;
            }
            relation.push(c.relation);
            rhs.push(i128::from(c.rhs));
        }
        let mut objective = vec![0; n];
        for var in model.objective_vars() {
            objective[var] = 1;
        }
        Search {
            lower,
            upper,
            occurs,
            relation,
            rhs,
            lo,
            hi,
            objective,
            values: vec![0; n],
            best: None,
            nodes: 0,
            budget,
        }
    }

    fn satisfiable(&self, row: usize) -> bool {
        let (lo, hi, rhs) = (self.lo[row], self.hi[row], self.rhs[row]);
        match self.relation[row] {
            Relation::Le => lo <= rhs,
            Relation::Ge => hi >= rhs,
            Relation::Eq => lo <= rhs && rhs <= hi,
        }
    }

    /// Narrows `var` from its full range to `value` (or back, with `undo`).
    fn fix(&mut self, var: usize, value: i64, undo: bool) -> bool {
        let mut ok = true;
        for &(row, coef) in &self.occurs[var] {
            let (a, b) = span(coef, self.lower[var], self.upper[var]);
            let exact = i128::from(coef) * i128::from(value);
            if undo {
                self.lo[row] += a - exact;
                self.hi[row] += b - exact;
            } else {
                self.lo[row] += exact - a;
                self.hi[row] += exact - b;
                ok &= self.satisfiable(row);
            }
        }
        ok
    }

    /// Objective bound for the current prefix; objective coefficients are
    /// nonnegative and later variables contribute at least their lower bound.
    fn objective_floor(&self, fixed: usize) -> i64 {
        let done: i64 = (0..fixed).map(|v| self.objective[v] * self.values[v]).sum();
        let rest: i64 = (fixed..self.values.len()).map(|v| self.objective[v] * self.lower[v]).sum();
        done + rest
    }

    fn descend(&mut self, var: usize) -> Result<()> {
        if var == self.values.len() {
            let objective = self.objective_floor(var);
            if self.best.as_ref().is_none_or(|(_, b)| objective < *b) {
                self.best = Some((self.values.clone(), objective));
            }
            return Ok(());
        }
        for value in self.lower[var]..=self.upper[var] {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(IlpError::BudgetExceeded { budget: self.budget });
            }
            self.values[var] = value;
            let ok = self.fix(var, value, false);
            let promising = match &self.best {
                Some((_, b)) => self.objective_floor(var + 1) < *b,
                None => true,
            };
            if ok && promising {
                self.descend(var + 1)?;
            }
            self.fix(var, value, true);
        }
        self.values[var] = 0;
        Ok(())
    }
}

fn span(coef: i64, lower: i64, upper: i64) -> (i128, i128) {
    let (a, b) = (i128::from(coef) * i128::from(lower), i128::from(coef) * i128::from(upper));
    (a.min(b), a.max(b))
}
