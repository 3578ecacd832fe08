use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{
    FcOrigin, IlpAssignment, IlpError, IlpModel, LinearConstraint, ModelStats, Relation, Result, Tag, VarLayout,
    VarName,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarFile {
    pub name: String,
    pub lower: i64,
    pub upper: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintFile {
    pub name: String,
    pub terms: Vec<(i64, String)>,
    pub rel: Relation,
    pub rhs: i64,
    pub tag: Tag,
}

/// JSON form of a model, mirroring its structure with names spelled out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<FcOrigin>,
    pub stats: ModelStats,
    pub vars: Vec<VarFile>,
    pub objective: Vec<String>,
    pub constraints: Vec<ConstraintFile>,
}

fn var_file(model: &IlpModel, index: usize) -> VarFile {
    let v = model.var(index);
    VarFile { name: v.name.to_string(), lower: v.lower, upper: v.upper }
}

fn constraint_file(model: &IlpModel, row: usize) -> ConstraintFile {
    let c = model.constraint(row);
    ConstraintFile {
        name: model.row_name(row),
        terms: c.terms().map(|(coef, v)| (coef, model.var(v).name.to_string())).collect(),
        rel: c.relation,
        rhs: c.rhs,
        tag: c.tag,
    }
}

/// Streams the model without materializing a [`ModelFile`].
impl Serialize for IlpModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct Seq<F>(F);
        impl<F, I, T> Serialize for Seq<F>
        where
            F: Fn() -> I,
            I: Iterator<Item = T>,
            T: Serialize,
        {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                serializer.collect_seq((self.0)())
            }
        }

        let fields = if self.origin().is_some() { 5 } else { 4 };
        let mut s = serializer.serialize_struct("IlpModel", fields)?;
        if let Some(origin) = self.origin() {
            s.serialize_field("origin", origin)?;
        }
        s.serialize_field("stats", &self.stats())?;
        s.serialize_field("vars", &Seq(|| (0..self.var_count()).map(|i| var_file(self, i))))?;
        s.serialize_field("objective", &Seq(|| self.objective_vars().map(|i| self.var(i).name.to_string())))?;
        s.serialize_field("constraints", &Seq(|| (0..self.constraint_count()).map(|r| constraint_file(self, r))))?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for IlpModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = ModelFile::deserialize(deserializer)?;
        IlpModel::try_from(file).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<ModelFile> for IlpModel {
    type Error = IlpError;

    fn try_from(file: ModelFile) -> Result<Self> {
        let layout = VarLayout { m: file.stats.m, r: file.stats.r };
        let mismatch = |what: &str| IlpError::NotTau5(format!("{what} do not match the declared statistics"));
        let expected: Vec<VarFile> = layout
            .vars()
            .map(|v| VarFile { name: v.name.to_string(), lower: v.lower, upper: v.upper })
            .collect();
        if file.vars != expected {
            return Err(mismatch("variables"));
        }
        let objective: Vec<String> = (1..=layout.m).map(|i| VarName::W(i).to_string()).collect();
        if file.objective != objective {
            return Err(mismatch("objective variables"));
        }
        let mut model = IlpModel::new(file.stats, file.origin);
        for (row, c) in file.constraints.into_iter().enumerate() {
            let mut terms = Vec::with_capacity(c.terms.len());
            for (coef, name) in &c.terms {
                let var = layout
                    .index(name.parse::<VarName>()?)
                    .ok_or_else(|| IlpError::UnknownVariable(name.clone()))?;
                terms.push((*coef, var));
            }
            let count = terms.len();
            model.push(LinearConstraint { terms, relation: c.rel, rhs: c.rhs, tag: c.tag })?;
            if model.constraint(row).len() != count {
                return Err(IlpError::NotTau5(format!("row {row} repeats a variable or has a zero coefficient")));
            }
            if model.row_name(row) != c.name {
                return Err(IlpError::NotTau5(format!("row {row} is named {:?}", c.name)));
            }
        }
        Ok(model)
    }
}

/// Assignment on disk: a JSON object from variable name to value, in
/// declared order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentFile(pub Vec<(String, i64)>);

impl AssignmentFile {
    pub fn from_assignment(model: &IlpModel, a: &IlpAssignment) -> Self {
        AssignmentFile(model.vars().map(|v| v.name.to_string()).zip(a.values.iter().copied()).collect())
    }

    /// Dense assignment for `model`; every variable must be present once.
    pub fn to_assignment(&self, model: &IlpModel) -> Result<IlpAssignment> {
        let layout = model.layout();
        let mut values = vec![None; model.var_count()];
        for (name, value) in &self.0 {
            let idx = layout
                .index(name.parse::<VarName>()?)
                .ok_or_else(|| IlpError::UnknownVariable(name.clone()))?;
            if values[idx].replace(*value).is_some() {
                return Err(IlpError::DuplicateVariable(name.clone()));
            }
        }
        let present = values.iter().flatten().count();
        if present != values.len() {
            return Err(IlpError::MissingVariable { expected: values.len(), actual: present });
        }
        Ok(IlpAssignment::new(values.into_iter().flatten().collect()))
    }
}

impl Serialize for AssignmentFile {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (name, value) in &self.0 {
            map.serialize_entry(name, value)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for AssignmentFile {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = AssignmentFile;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from variable names to integers")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Self::Value, A::Error> {
                let mut entries = Vec::new();
                while let Some(entry) = access.next_entry::<String, i64>()? {
                    entries.push(entry);
                }
                Ok(AssignmentFile(entries))
            }
        }

        deserializer.deserialize_map(EntriesVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fc::{FcClause, FcInstance, FcVar};
    use crate::ilp::tau5;

    fn model() -> IlpModel {
        let f = FcInstance::flat(
            3,
            vec![FcClause::neq(FcVar::Flat(1), FcVar::Flat(2)), FcClause::implies(FcVar::Flat(1), FcVar::Flat(3), FcVar::Flat(2), FcVar::Flat(3))],
        )
        .unwrap();
        tau5(&f).unwrap()
    }

    #[test]
    fn model_json_round_trips() {
        let m = model();
        let text = serde_json::to_string(&m).unwrap();
        let file: ModelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(file.constraints[0].name, "r0_onehot");
        assert_eq!(file.vars[0], VarFile { name: "w_1".into(), lower: 0, upper: 1 });
        assert_eq!(serde_json::from_str::<IlpModel>(&text).unwrap(), m);
        let tampered = text.replacen("\"r0_onehot\"", "\"r0_usage\"", 1);
        assert!(serde_json::from_str::<IlpModel>(&tampered).is_err());
    }

    #[test]
    fn assignment_json() {
        let m = model();
        let a = IlpAssignment::new((0..m.var_count() as i64).collect());
        let text = serde_json::to_string(&AssignmentFile::from_assignment(&m, &a)).unwrap();
        assert!(text.starts_with(r#"{"w_1":0,"w_2":1,"w_3":2,"x_1_1":3"#));
        let back: AssignmentFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_assignment(&m).unwrap(), a);
        let short: AssignmentFile = serde_json::from_str(r#"{"w_1":1}"#).unwrap();
        assert!(matches!(short.to_assignment(&m), Err(IlpError::MissingVariable { .. })));
        let dup = AssignmentFile(vec![("w_1".into(), 1), ("w_1".into(), 1)]);
        assert_eq!(dup.to_assignment(&m), Err(IlpError::DuplicateVariable("w_1".into())));
    }
}
