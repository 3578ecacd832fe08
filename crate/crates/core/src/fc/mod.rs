//! Formula coloring: conjunctions of `(z_a != z_b)` and
//! `((z_u = z_v) -> (z_k = z_l))` clauses, solved by partitioning the
//! variables into color classes.
//!
//! Instances built from a labeled sample use structured variables `z_i^j`
//! (example `i` in `1..=m`, prefix length `j` in `0..=L`); all other
//! instances use flat variables `1..=count`.

mod infer;
mod oracle;
mod tau4;
mod verify;

use std::collections::HashSet;
use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use infer::{coloring_from_dfa, infer_strings};
pub use oracle::{brute_force_min_coloring, DEFAULT_MAX_VARS};
pub use tau4::{tau4, tau4_clause_count, tau4_from_strings};
pub use verify::{verify_coloring, ColoringVerdict};

use crate::instances::BitLayout;
use crate::representations::ReprError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FcError {
    #[error("variable {0} is outside the declared universe")]
    VarOutOfBounds(FcVar),
    #[error("{count} variables exceed the brute-force limit of {max}")]
    TooManyVars { count: usize, max: usize },
    #[error("no coloring satisfies the formula")]
    NoValidColoring,
    #[error("coloring covers {actual} variables, formula has {expected}")]
    UncoloredVariable { expected: usize, actual: usize },
    #[error("color ids must be positive")]
    ZeroColor,
    #[error("sample strings have different lengths")]
    RaggedSample,
    #[error("sample is empty")]
    EmptySample,
    #[error("instance carries no sample provenance")]
    MissingProvenance,
    #[error("instance does not use structured variables")]
    NotStructured,
    #[error("no clause matches the anchor pattern")]
    AnchorFamilyEmpty,
    #[error("anchor position {anchor} is outside 2..={len}")]
    BadAnchor { anchor: usize, len: usize },
    #[error("strings do not match the instance shape (m = {m}, L = {len})")]
    ShapeMismatch { m: usize, len: usize },
    #[error("DFA puts both endpoints of clause {clause} in one state")]
    InconsistentDfa { clause: usize },
    #[error("bad variable key {0:?}")]
    BadVarKey(String),
    #[error(transparent)]
    Repr(#[from] ReprError),
}

pub type Result<T> = std::result::Result<T, FcError>;

/// A formula variable. Serialized as `[i, j]` or as a bare integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FcVar {
    /// `z_i^j`: example `i` (1-based) after reading `j` bits.
    Structured(u32, u32),
    /// Flat variable id, 1-based.
    Flat(u32),
}

impl FcVar {
    pub fn z(i: usize, j: usize) -> Self {
        FcVar::Structured(i as u32, j as u32)
    }

    fn key(&self) -> String {
        match self {
            FcVar::Structured(i, j) => format!("{i},{j}"),
            FcVar::Flat(id) => id.to_string(),
        }
    }

    fn from_key(text: &str) -> Result<Self> {
        let bad = || FcError::BadVarKey(text.to_string());
        match text.split_once(',') {
            Some((i, j)) => Ok(FcVar::Structured(i.parse().map_err(|_| bad())?, j.parse().map_err(|_| bad())?)),
            None => Ok(FcVar::Flat(text.parse().map_err(|_| bad())?)),
        }
    }
}

impl fmt::Display for FcVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FcVar::Structured(i, j) => write!(f, "z_{i}^{j}"),
            FcVar::Flat(id) => write!(f, "z{id}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VarUniverse {
    Structured {
        m: usize,
        #[serde(rename = "L")]
        len: usize,
    },
    Flat {
        count: usize,
    },
}

impl VarUniverse {
    pub fn len(&self) -> usize {
        match *self {
            VarUniverse::Structured { m, len } => m * (len + 1),
            VarUniverse::Flat { count } => count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dense 0-based index of a variable; structured variables are laid out
    /// example-major.
    pub fn index(&self, var: FcVar) -> Option<usize> {
        match (*self, var) {
            (VarUniverse::Structured { m, len }, FcVar::Structured(i, j)) => {
                let (i, j) = (i as usize, j as usize);
                (i >= 1 && i <= m && j <= len).then(|| (i - 1) * (len + 1) + j)
            }
            (VarUniverse::Flat { count }, FcVar::Flat(id)) => {
                let id = id as usize;
                (id >= 1 && id <= count).then(|| id - 1)
            }
            _ => None,
        }
    }

    pub fn var(&self, index: usize) -> FcVar {
        match *self {
            VarUniverse::Structured { len, .. } => FcVar::z(index / (len + 1) + 1, index % (len + 1)),
            VarUniverse::Flat { .. } => FcVar::Flat(index as u32 + 1),
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = FcVar> + '_ {
        (0..self.len()).map(|idx| self.var(idx))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "lowercase")]
pub enum FcClause {
    /// `a != b`
    Neq { a: FcVar, b: FcVar },
    /// `(u = v) -> (k = l)`
    Impl { u: FcVar, v: FcVar, k: FcVar, l: FcVar },
}

impl FcClause {
    pub fn neq(a: FcVar, b: FcVar) -> Self {
        FcClause::Neq { a, b }
    }

    pub fn implies(u: FcVar, v: FcVar, k: FcVar, l: FcVar) -> Self {
        FcClause::Impl { u, v, k, l }
    }

    pub fn vars(&self) -> Vec<FcVar> {
        match *self {
            FcClause::Neq { a, b } => vec![a, b],
            FcClause::Impl { u, v, k, l } => vec![u, v, k, l],
        }
    }

    /// Representative of the clause up to the symmetry of `=` and `!=`.
    fn normalized(&self) -> FcClause {
        let sorted = |x: FcVar, y: FcVar| if x <= y { (x, y) } else { (y, x) };
        match *self {
            FcClause::Neq { a, b } => {
                let (a, b) = sorted(a, b);
                FcClause::Neq { a, b }
            }
            FcClause::Impl { u, v, k, l } => {
                let (u, v) = sorted(u, v);
                let (k, l) = sorted(k, l);
                FcClause::Impl { u, v, k, l }
            }
        }
    }

    /// Whether colors (indexed by the universe) satisfy the clause.
    pub fn holds(&self, color: impl Fn(FcVar) -> u32) -> bool {
        match *self {
            FcClause::Neq { a, b } => color(a) != color(b),
            FcClause::Impl { u, v, k, l } => color(u) != color(v) || color(k) == color(l),
        }
    }
}

/// Where a structured instance came from: the packing of its example
/// strings and the 1-based position of the known-one anchor bit in `w_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub layout: BitLayout,
    pub anchor: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FcFile", into = "FcFile")]
pub struct FcInstance {
    vars: VarUniverse,
    clauses: Vec<FcClause>,
    provenance: Option<Provenance>,
}

#[derive(Serialize, Deserialize)]
struct FcFile {
    vars: VarUniverse,
    clauses: Vec<FcClause>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

impl TryFrom<FcFile> for FcInstance {
    type Error = FcError;

    fn try_from(file: FcFile) -> Result<Self> {
        FcInstance::new(file.vars, file.clauses, file.provenance)
    }
}

impl From<FcInstance> for FcFile {
    fn from(f: FcInstance) -> Self {
        FcFile { vars: f.vars, clauses: f.clauses, provenance: f.provenance }
    }
}

impl FcInstance {
    /// Checks every variable against the universe and drops clauses that
    /// repeat an earlier one up to symmetry of `=` / `!=`.
    pub fn new(vars: VarUniverse, clauses: Vec<FcClause>, provenance: Option<Provenance>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(clauses.len());
        let mut kept = Vec::with_capacity(clauses.len());
        for clause in clauses {
            if let Some(bad) = clause.vars().into_iter().find(|&v| vars.index(v).is_none()) {
                return Err(FcError::VarOutOfBounds(bad));
            }
            if seen.insert(clause.normalized()) {
                kept.push(clause);
            }
        }
        Ok(FcInstance { vars, clauses: kept, provenance })
    }

    /// Flat instance over `z1..=z{count}`.
    pub fn flat(count: usize, clauses: Vec<FcClause>) -> Result<Self> {
        Self::new(VarUniverse::Flat { count }, clauses, None)
    }

    pub(crate) fn from_parts_unchecked(
        vars: VarUniverse,
        clauses: Vec<FcClause>,
        provenance: Option<Provenance>,
    ) -> Self {
        FcInstance { vars, clauses, provenance }
    }

    pub fn vars(&self) -> &VarUniverse {
        &self.vars
    }

    pub fn clauses(&self) -> &[FcClause] {
        &self.clauses
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn neq_count(&self) -> usize {
        self.clauses.iter().filter(|c| matches!(c, FcClause::Neq { .. })).count()
    }

    pub fn impl_count(&self) -> usize {
        self.clauses.len() - self.neq_count()
    }

    /// Dense index of a variable known to be in the universe.
    pub fn index(&self, var: FcVar) -> usize {
        self.vars.index(var).expect("variable validated at construction")
    }

    /// Same universe and the same clauses up to order and `=` / `!=`
    /// symmetry. Provenance is ignored.
    pub fn same_clauses(&self, other: &FcInstance) -> bool {
        let set = |f: &FcInstance| f.clauses.iter().map(FcClause::normalized).collect::<HashSet<_>>();
        self.vars == other.vars && self.clauses.len() == other.clauses.len() && set(self) == set(other)
    }

    /// SHA-256 over a canonical binary encoding of the instance.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        let json_head = serde_json::to_string(&(&self.vars, &self.provenance)).expect("serializable");
        hasher.update(json_head.as_bytes());
        for clause in &self.clauses {
            let (tag, vars) = match clause {
                FcClause::Neq { .. } => (0u8, clause.vars()),
                FcClause::Impl { .. } => (1u8, clause.vars()),
            };
            hasher.update([tag]);
            for v in vars {
                hasher.update((self.index(v) as u64).to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }
}

/// Partition of the universe into color classes `1..=k`, indexed densely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    colors: Vec<u32>,
    k: u32,
}

impl Coloring {
    /// Renumbers arbitrary class labels to `1..=k` by first appearance.
    pub fn from_classes<T: Eq + std::hash::Hash + Copy>(classes: &[T]) -> Self {
        let mut ids = std::collections::HashMap::new();
        let colors = classes
            .iter()
            .map(|c| {
                let next = ids.len() as u32 + 1;
                *ids.entry(*c).or_insert(next)
            })
            .collect();
        Coloring { colors, k: ids.len() as u32 }
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    pub fn color(&self, index: usize) -> u32 {
        self.colors[index]
    }

    /// Number of colors in use.
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn to_file(&self, vars: &VarUniverse) -> ColoringFile {
        ColoringFile(vars.vars().zip(self.colors.iter().copied()).collect())
    }

    /// Reads a coloring for `vars`; every variable must be present.
    pub fn from_file(file: &ColoringFile, vars: &VarUniverse) -> Result<Self> {
        let mut raw = vec![0u32; vars.len()];
        for &(var, color) in &file.0 {
            let idx = vars.index(var).ok_or(FcError::VarOutOfBounds(var))?;
            if color == 0 {
                return Err(FcError::ZeroColor);
            }
            raw[idx] = color;
        }
        let covered = raw.iter().filter(|&&c| c != 0).count();
        if covered != vars.len() {
            return Err(FcError::UncoloredVariable { expected: vars.len(), actual: covered });
        }
        Ok(Coloring::from_classes(&raw))
    }
}

/// Coloring on disk: a JSON object from variable key (`"i,j"` or `"id"`) to
/// color id, in universe order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoringFile(pub Vec<(FcVar, u32)>);

impl Serialize for ColoringFile {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (var, color) in &self.0 {
            map.serialize_entry(&var.key(), color)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for ColoringFile {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = ColoringFile;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from variable keys to colors")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Self::Value, A::Error> {
                let mut entries = Vec::new();
                while let Some((key, color)) = access.next_entry::<String, u32>()? {
                    entries.push((FcVar::from_key(&key).map_err(serde::de::Error::custom)?, color));
                }
                Ok(ColoringFile(entries))
            }
        }

        deserializer.deserialize_map(EntriesVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_indexing_round_trips() {
        let u = VarUniverse::Structured { m: 3, len: 4 };
        assert_eq!(u.len(), 15);
        for idx in 0..u.len() {
            assert_eq!(u.index(u.var(idx)), Some(idx));
        }
        assert_eq!(u.index(FcVar::z(1, 0)), Some(0));
        assert_eq!(u.index(FcVar::z(2, 0)), Some(5));
        assert_eq!(u.index(FcVar::z(0, 0)), None);
        assert_eq!(u.index(FcVar::z(1, 5)), None);
        assert_eq!(u.index(FcVar::Flat(1)), None);
    }

    #[test]
    fn construction_rejects_unknown_vars_and_dedups() {
        let err = FcInstance::flat(2, vec![FcClause::neq(FcVar::Flat(1), FcVar::Flat(3))]).unwrap_err();
        assert_eq!(err, FcError::VarOutOfBounds(FcVar::Flat(3)));
        let (a, b, c, d) = (FcVar::Flat(1), FcVar::Flat(2), FcVar::Flat(3), FcVar::Flat(4));
        let f = FcInstance::flat(
            4,
            vec![
                FcClause::neq(a, b),
                FcClause::neq(b, a),
                FcClause::implies(a, b, c, d),
                FcClause::implies(b, a, d, c),
                FcClause::implies(a, c, b, d),
            ],
        )
        .unwrap();
        assert_eq!(f.clauses().len(), 3);
        assert_eq!((f.neq_count(), f.impl_count()), (1, 2));
    }

    #[test]
    fn fc_file_format() {
        let f = FcInstance::new(
            VarUniverse::Structured { m: 2, len: 1 },
            vec![FcClause::neq(FcVar::z(1, 1), FcVar::z(2, 1))],
            None,
        )
        .unwrap();
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, r#"{"vars":{"kind":"structured","m":2,"L":1},"clauses":[{"t":"neq","a":[1,1],"b":[2,1]}]}"#);
        assert_eq!(serde_json::from_str::<FcInstance>(&text).unwrap(), f);
        let flat = r#"{"vars":{"kind":"flat","count":4},"clauses":[{"t":"impl","u":1,"v":2,"k":3,"l":4}]}"#;
        let g: FcInstance = serde_json::from_str(flat).unwrap();
        assert_eq!(serde_json::to_string(&g).unwrap(), flat);
        assert!(serde_json::from_str::<FcInstance>(
            r#"{"vars":{"kind":"flat","count":1},"clauses":[{"t":"neq","a":1,"b":2}]}"#
        )
        .is_err());
    }

    #[test]
    fn coloring_renumbers_and_round_trips() {
        let p = Coloring::from_classes(&[7, 7, 3, 9, 3]);
        assert_eq!(p.colors(), &[1, 1, 2, 3, 2]);
        assert_eq!(p.k(), 3);
        let u = VarUniverse::Flat { count: 5 };
        let text = serde_json::to_string(&p.to_file(&u)).unwrap();
        assert_eq!(text, r#"{"1":1,"2":1,"3":2,"4":3,"5":2}"#);
        let back: ColoringFile = serde_json::from_str(&text).unwrap();
        assert_eq!(Coloring::from_file(&back, &u).unwrap(), p);
        let partial: ColoringFile = serde_json::from_str(r#"{"1":1,"2":1}"#).unwrap();
        assert_eq!(
            Coloring::from_file(&partial, &u),
            Err(FcError::UncoloredVariable { expected: 5, actual: 2 })
        );
        let structured = VarUniverse::Structured { m: 1, len: 1 };
        let q = Coloring::from_classes(&[0, 1]);
        assert_eq!(serde_json::to_string(&q.to_file(&structured)).unwrap(), r#"{"1,0":1,"1,1":2}"#);
    }
}
