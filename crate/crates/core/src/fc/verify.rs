use super::{Coloring, FcClause, FcError, FcInstance, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColoringVerdict {
    Valid,
    /// First clause (in instance order) the coloring breaks.
    Violated { index: usize, clause: FcClause },
}

impl ColoringVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, ColoringVerdict::Valid)
    }
}

pub fn verify_coloring(f: &FcInstance, p: &Coloring) -> Result<ColoringVerdict> {
    if p.len() != f.var_count() {
        return Err(FcError::UncoloredVariable { expected: f.var_count(), actual: p.len() });
    }
    let color = |v| p.color(f.index(v));
    Ok(f.clauses()
        .iter()
        .position(|c| !c.holds(color))
        .map_or(ColoringVerdict::Valid, |index| ColoringVerdict::Violated { index, clause: f.clauses()[index] }))
}
