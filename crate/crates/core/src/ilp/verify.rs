use super::{IlpAssignment, IlpError, IlpModel, Result, Tag};
use crate::fc::Coloring;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssignmentVerdict {
    Feasible,
    /// First variable (in declared order) outside its bounds.
    OutOfBounds { var: String, value: i64 },
    /// First violated row.
    Violated { row: usize, name: String, tag: Tag },
}

impl AssignmentVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, AssignmentVerdict::Feasible)
    }
}

/// Exact check of every bound, then every row.
pub fn verify_assignment(model: &IlpModel, a: &IlpAssignment) -> Result<AssignmentVerdict> {
    if a.values.len() != model.var_count() {
        return Err(IlpError::MissingVariable { expected: model.var_count(), actual: a.values.len() });
    }
    for (var, &value) in model.vars().zip(&a.values) {
        if value < var.lower || value > var.upper {
            return Ok(AssignmentVerdict::OutOfBounds { var: var.name.to_string(), value });
        }
    }
    for row in 0..model.constraint_count() {
        let c = model.constraint(row);
        if !c.holds(&a.values) {
            return Ok(AssignmentVerdict::Violated { row, name: model.row_name(row), tag: c.tag });
        }
    }
    Ok(AssignmentVerdict::Feasible)
}

/// Colors formula variables by their `zhat` values, equal values sharing a
/// class. Refuses infeasible assignments.
///
/// The number of classes never exceeds the objective and equals it at an
/// optimum; a feasible but wasteful assignment may switch on colors no
/// variable uses.
pub fn g2(a: &IlpAssignment, model: &IlpModel) -> Result<Coloring> {
    match verify_assignment(model, a)? {
        AssignmentVerdict::Feasible => {}
        verdict => return Err(IlpError::Infeasibility(format!("{verdict:?}"))),
    }
    let lay = model.layout();
    let first = lay.zhat(1);
    Ok(Coloring::from_classes(&a.values[first..first + lay.m]))
}
