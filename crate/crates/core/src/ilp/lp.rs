//! CPLEX-style LP text. Two header comments carry what the plain format
//! cannot: the formula origin and the model statistics. Rows are named
//! `r{row}_{family}` with a `_c{clause}` suffix for clause rows.

use std::collections::HashSet;
use std::io::{self, Write};

use super::{
    Family, FcOrigin, IlpError, IlpModel, LinearConstraint, ModelStats, Relation, Result, Tag, VarLayout, VarName,
};

const WIDTH: usize = 100;

/// Accumulates space-separated tokens, breaking lines near [`WIDTH`].
struct Wrapped<W: Write> {
    out: W,
    col: usize,
    fresh: bool,
}

impl<W: Write> Wrapped<W> {
    /// Begins an indented statement; `head` may be empty.
    fn start(&mut self, head: &str) -> io::Result<()> {
        write!(self.out, " {head}")?;
        self.col = head.len() + 1;
        self.fresh = head.is_empty();
        Ok(())
    }

    fn token(&mut self, tok: &str) -> io::Result<()> {
        if self.fresh {
            self.fresh = false;
        } else if self.col + tok.len() + 1 > WIDTH {
            write!(self.out, "\n   ")?;
            self.col = 3;
        } else {
            write!(self.out, " ")?;
            self.col += 1;
        }
        write!(self.out, "{tok}")?;
        self.col += tok.len();
        Ok(())
    }

    fn end(&mut self) -> io::Result<()> {
        writeln!(self.out)?;
        self.col = 0;
        Ok(())
    }
}

fn term_tokens(first: bool, coef: i64, name: &str) -> Vec<String> {
    let mut toks = Vec::with_capacity(3);
    match (first, coef < 0) {
        (true, false) => {}
        (true, true) => toks.push("-".to_string()),
        (false, neg) => toks.push(if neg { "-" } else { "+" }.to_string()),
    }
    if coef.unsigned_abs() != 1 {
        toks.push(coef.unsigned_abs().to_string());
    }
    toks.push(name.to_string());
    toks
}

pub fn write_lp<W: Write>(model: &IlpModel, out: W) -> io::Result<()> {
    let mut w = Wrapped { out, col: 0, fresh: false };
    if let Some(origin) = model.origin() {
        writeln!(w.out, "\\ origin: {}", serde_json::to_string(origin).expect("serializable"))?;
    }
    writeln!(w.out, "\\ stats: {}", serde_json::to_string(&model.stats()).expect("serializable"))?;
    writeln!(w.out, "Minimize")?;
    w.start("obj:")?;
    for (n, var) in model.objective_vars().enumerate() {
        for tok in term_tokens(n == 0, 1, &model.var(var).name.to_string()) {
            w.token(&tok)?;
        }
    }
    w.end()?;
    writeln!(w.out, "Subject To")?;
    for row in 0..model.constraint_count() {
        let c = model.constraint(row);
        w.start(&format!("{}:", model.row_name(row)))?;
        if c.is_empty() {
            w.token("0")?;
        }
        for (n, (coef, var)) in c.terms().enumerate() {
            for tok in term_tokens(n == 0, coef, &model.var(var).name.to_string()) {
                w.token(&tok)?;
            }
        }
        w.token(c.relation.symbol())?;
        w.token(&c.rhs.to_string())?;
        w.end()?;
    }
    writeln!(w.out, "Bounds")?;
    for var in model.vars() {
        writeln!(w.out, " {} <= {} <= {}", var.lower, var.name, var.upper)?;
    }
    for (title, want_binary) in [("General", false), ("Binary", true)] {
        writeln!(w.out, "{title}")?;
        let mut names = model.vars().filter(|v| v.is_binary() == want_binary).peekable();
        if names.peek().is_some() {
            w.start("")?;
            for var in names {
                w.token(&var.name.to_string())?;
            }
            w.end()?;
        }
    }
    writeln!(w.out, "End")?;
    w.out.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    Objective,
    Constraints,
    Bounds,
    General,
    Binary,
    End,
}

/// Parses text written by [`write_lp`] back into the identical model.
pub fn parse_lp(text: &str) -> Result<IlpModel> {
    let mut origin: Option<FcOrigin> = None;
    let mut stats: Option<ModelStats> = None;
    let mut section = Section::Header;
    // Logical statements (continuation lines joined) with their first line.
    let mut objective: Vec<(usize, String)> = Vec::new();
    let mut rows: Vec<(usize, String)> = Vec::new();
    let mut bounds: Vec<(usize, String)> = Vec::new();
    let mut general: Vec<(usize, String)> = Vec::new();
    let mut binary: Vec<(usize, String)> = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| IlpError::Parse { line, message };
        if let Some(comment) = raw.strip_prefix('\\') {
            let comment = comment.trim();
            if let Some(json) = comment.strip_prefix("origin:") {
                origin = Some(serde_json::from_str(json.trim()).map_err(|e| err(e.to_string()))?);
            } else if let Some(json) = comment.strip_prefix("stats:") {
                stats = Some(serde_json::from_str(json.trim()).map_err(|e| err(e.to_string()))?);
            }
            continue;
        }
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let next = match trimmed {
            "Minimize" => Some(Section::Objective),
            "Subject To" => Some(Section::Constraints),
            "Bounds" => Some(Section::Bounds),
            "General" => Some(Section::General),
            "Binary" => Some(Section::Binary),
            "End" => Some(Section::End),
            _ => None,
        };
        if let Some(s) = next {
            if s as u8 <= section as u8 {
                return Err(err(format!("section {trimmed} out of order")));
            }
            section = s;
            continue;
        }
        let continuation = raw.starts_with("   ");
        let target = match section {
            Section::Objective => &mut objective,
            Section::Constraints => &mut rows,
            Section::Bounds => &mut bounds,
            Section::General => &mut general,
            Section::Binary => &mut binary,
            Section::Header | Section::End => return Err(err(format!("unexpected text {trimmed:?}"))),
        };
        match target.last_mut() {
            Some((_, stmt)) if continuation => {
                stmt.push(' ');
                stmt.push_str(trimmed);
            }
            _ => target.push((line, trimmed.to_string())),
        }
    }
    if section != Section::End {
        return Err(IlpError::Parse { line: text.lines().count(), message: "missing End".into() });
    }
    let stats = stats.ok_or(IlpError::Parse { line: 1, message: "missing stats header".into() })?;
    let layout = VarLayout { m: stats.m, r: stats.r };
    let lookup = |line: usize, name: &str| -> Result<usize> {
        let err = || IlpError::Parse { line, message: format!("unknown variable {name}") };
        layout.index(name.parse::<VarName>().map_err(|_| err())?).ok_or_else(err)
    };

    // Objective: exactly w_1 + ... + w_M.
    let want: Vec<usize> = (0..layout.m).collect();
    match objective.as_slice() {
        [(line, stmt)] => {
            let body = stmt.strip_prefix("obj:").ok_or(IlpError::Parse { line: *line, message: "expected obj:".into() })?;
            let (terms, rest) = parse_terms(*line, body, &lookup)?;
            let vars: Vec<usize> = terms.iter().map(|&(_, v)| v).collect();
            if !rest.is_empty() || terms.iter().any(|&(c, _)| c != 1) || vars != want {
                return Err(IlpError::Parse { line: *line, message: "objective must be the sum of w_i".into() });
            }
        }
        _ => return Err(IlpError::Parse { line: 1, message: "expected a single objective".into() }),
    }

    let mut model = IlpModel::new(stats, origin);
    for (row, (line, stmt)) in rows.iter().enumerate() {
        let line = *line;
        let err = |message: String| IlpError::Parse { line, message };
        let (name, body) = stmt.split_once(':').ok_or_else(|| err("expected a row name".into()))?;
        let tag = parse_row_name(name, row).ok_or_else(|| err(format!("bad row name {name:?}")))?;
        let (terms, rest) = parse_terms(line, body, &lookup)?;
        let (relation, rhs) = match rest.as_slice() {
            [rel, rhs] => {
                let relation = match rel.as_str() {
                    "<=" => Relation::Le,
                    ">=" => Relation::Ge,
                    "=" => Relation::Eq,
                    other => return Err(err(format!("bad relation {other:?}"))),
                };
                (relation, rhs.parse::<i64>().map_err(|_| err(format!("bad right-hand side {rhs:?}")))?)
            }
            _ => return Err(err("expected relation and right-hand side".into())),
        };
        let mut seen = HashSet::new();
        if terms.iter().any(|&(c, v)| c == 0 || !seen.insert(v)) {
            return Err(err("terms must be distinct and nonzero".into()));
        }
        model.push(LinearConstraint { terms, relation, rhs, tag })?;
    }

    // Declarations must match the layout exactly.
    if bounds.len() != layout.len() {
        return Err(IlpError::Parse { line: 1, message: format!("expected {} bounds", layout.len()) });
    }
    for (idx, (line, stmt)) in bounds.iter().enumerate() {
        let var = layout.var(idx);
        if *stmt != format!("{} <= {} <= {}", var.lower, var.name, var.upper) {
            return Err(IlpError::Parse { line: *line, message: format!("expected bounds for {}", var.name) });
        }
    }
    for (stmts, want_binary) in [(&general, false), (&binary, true)] {
        let listed: Vec<&str> = stmts.iter().flat_map(|(_, s)| s.split_whitespace()).collect();
        let expected: Vec<String> =
            layout.vars().filter(|v| v.is_binary() == want_binary).map(|v| v.name.to_string()).collect();
        if listed != expected.iter().map(String::as_str).collect::<Vec<_>>() {
            let line = stmts.first().map_or(1, |(l, _)| *l);
            return Err(IlpError::Parse { line, message: "integrality section does not match the layout".into() });
        }
    }
    Ok(model)
}

/// Reads `[+|-] [coef] name` terms; returns them and the unread tokens.
fn parse_terms(
    line: usize,
    body: &str,
    lookup: &impl Fn(usize, &str) -> Result<usize>,
) -> Result<(Vec<(i64, usize)>, Vec<String>)> {
    let err = |message: String| IlpError::Parse { line, message };
    let tokens: Vec<&str> = body.split_whitespace().collect();
    let mut terms = Vec::new();
    let mut at = 0;
    // A lone "0" stands for an empty left-hand side.
    if tokens.first() == Some(&"0") && tokens.get(1).is_some_and(|t| matches!(*t, "<=" | ">=" | "=")) {
        return Ok((terms, tokens[1..].iter().map(|t| t.to_string()).collect()));
    }
    while at < tokens.len() && !matches!(tokens[at], "<=" | ">=" | "=") {
        let mut sign = 1i64;
        if matches!(tokens[at], "+" | "-") {
            if tokens[at] == "-" {
                sign = -1;
            }
            at += 1;
        } else if !terms.is_empty() {
            return Err(err(format!("expected + or - before {:?}", tokens[at])));
        }
        let mut coef = 1i64;
        if let Some(tok) = tokens.get(at).filter(|t| t.bytes().all(|c| c.is_ascii_digit())) {
            coef = tok.parse().map_err(|_| err(format!("bad coefficient {tok:?}")))?;
            at += 1;
        }
        let name = tokens.get(at).ok_or_else(|| err("dangling coefficient".into()))?;
        terms.push((sign * coef, lookup(line, name)?));
        at += 1;
    }
    Ok((terms, tokens[at..].iter().map(|t| t.to_string()).collect()))
}

fn parse_row_name(name: &str, row: usize) -> Option<Tag> {
    let rest = name.strip_prefix('r')?;
    let (index, rest) = rest.split_once('_')?;
    if index.parse::<usize>().ok()? != row || index != row.to_string() {
        return None;
    }
    let (family, clause) = match rest.split_once("_c") {
        Some((family, clause)) => {
            let c: usize = clause.parse().ok()?;
            if clause != c.to_string() {
                return None;
            }
            (family, Some(c))
        }
        None => (rest, None),
    };
    let family = Family::from_code(family)?;
    (family.is_clause_family() == clause.is_some()).then_some(Tag { family, clause })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fc::{FcClause, FcInstance, FcVar};
    use crate::ilp::tau5;

    fn lp_text(model: &IlpModel) -> String {
        let mut buf = Vec::new();
        write_lp(model, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn golden_single_variable() {
        let model = tau5(&FcInstance::flat(1, vec![]).unwrap()).unwrap();
        let text = lp_text(&model);
        assert_eq!(text, include_str!("../../tests/fixtures/single_var.lp"));
        assert_eq!(parse_lp(&text).unwrap(), model);
    }

    #[test]
    fn round_trip_with_wrapping() {
        let z = |i| FcVar::Flat(i);
        let f = FcInstance::flat(
            30,
            vec![FcClause::neq(z(3), z(3)), FcClause::implies(z(1), z(2), z(29), z(30)), FcClause::neq(z(30), z(1))],
        )
        .unwrap();
        let model = tau5(&f).unwrap();
        let text = lp_text(&model);
        assert!(text.lines().all(|l| l.len() <= WIDTH + 20));
        assert!(text.lines().any(|l| l.starts_with("   ")));
        assert_eq!(parse_lp(&text).unwrap(), model);
    }

    #[test]
    fn rejects_tampering() {
        let model = tau5(&FcInstance::flat(1, vec![]).unwrap()).unwrap();
        let text = lp_text(&model);
        for (from, to) in [
            ("r3_usage", "r4_usage"),
            ("r3_usage", "r3_bogus"),
            ("1 <= zhat_1 <= 1", "1 <= zhat_1 <= 2"),
            ("obj: w_1", "obj: 2 w_1"),
            ("End", ""),
            ("x_1_1 - w_1 <= 0", "x_1_1 - w_2 <= 0"),
        ] {
            let bad = text.replacen(from, to, 1);
            assert_ne!(bad, text, "{from}");
            assert!(matches!(parse_lp(&bad), Err(IlpError::Parse { .. })), "{from} -> {to}");
        }
    }

    #[test]
    fn row_names() {
        assert_eq!(parse_row_name("r17_eqfu_c3", 17), Some(Tag::new(Family::EqFu, Some(3))));
        assert_eq!(parse_row_name("r0_onehot", 0), Some(Tag::new(Family::OneHot, None)));
        assert_eq!(parse_row_name("r0_onehot_c1", 0), None);
        assert_eq!(parse_row_name("r0_neq", 0), None);
        assert_eq!(parse_row_name("r01_onehot", 1), None);
    }
}
