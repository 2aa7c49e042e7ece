//! Schema-typed tabular data and protected-group splitting.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    Feature,
    Protected,
    Target,
    Ignored,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default)]
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_order: Option<Vec<String>>,
}

impl FeatureSchema {
    pub fn numeric(name: &str, role: Role) -> Self {
        Self {
            name: name.to_owned(),
            kind: FeatureKind::Numeric,
            role,
            category_order: None,
        }
    }

    pub fn categorical(name: &str, role: Role) -> Self {
        Self {
            name: name.to_owned(),
            kind: FeatureKind::Categorical,
            role,
            category_order: None,
        }
    }

    pub fn with_order<S: AsRef<str>>(mut self, order: &[S]) -> Self {
        self.category_order = Some(order.iter().map(|s| s.as_ref().to_owned()).collect());
        self
    }
}

/// Ordered column declarations; the JSON form is `{"features":[...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub features: Vec<FeatureSchema>,
}

impl Schema {
    pub fn new(features: Vec<FeatureSchema>) -> Result<Self> {
        let schema = Self { features };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for f in &self.features {
            if f.name.is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", f.name)));
            }
            if let Some(order) = &f.category_order {
                if f.kind != FeatureKind::Categorical {
                    return Err(Error::Schema(format!(
                        "column `{}` is numeric but declares a category_order",
                        f.name
                    )));
                }
                let distinct: BTreeSet<&str> = order.iter().map(String::as_str).collect();
                if distinct.len() != order.len() {
                    return Err(Error::Schema(format!(
                        "category_order of `{}` repeats a label",
                        f.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.features
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    }

    pub fn get(&self, name: &str) -> Result<&FeatureSchema> {
        self.index_of(name).map(|i| &self.features[i])
    }

    /// The single column with role `protected`.
    pub fn protected(&self) -> Result<usize> {
        let mut hits = self
            .features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.role == Role::Protected);
        match (hits.next(), hits.next()) {
            (Some((i, _)), None) => Ok(i),
            (None, _) => Err(Error::Schema("no column has role `protected`".into())),
            (Some(_), Some(_)) => Err(Error::Schema(
                "more than one column has role `protected`".into(),
            )),
        }
    }

    pub fn target(&self) -> Option<usize> {
        self.features.iter().position(|f| f.role == Role::Target)
    }
}

/// One cell: a real number for numeric columns, a label for categorical ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl Value {
    pub fn kind(&self) -> FeatureKind {
        match self {
            Value::Num(_) => FeatureKind::Numeric,
            Value::Cat(_) => FeatureKind::Categorical,
        }
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Cat(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Value::Cat(s) => Some(s),
            Value::Num(_) => None,
        }
    }

    /// Compares against a textual label, parsing it as a number for numeric cells.
    pub fn matches_label(&self, label: &str) -> bool {
        match self {
            Value::Cat(s) => s == label,
            Value::Num(v) => label.trim().parse::<f64>().is_ok_and(|l| l == *v),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Cat(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Instance {
    pub values: Vec<Value>,
}

impl Instance {
    pub fn new(values: Vec<Value>) -> Self {
        Self { values }
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }

    /// Copy of `self` with column `column` overwritten by `value`.
    pub fn with_value(&self, column: usize, value: &Value) -> Instance {
        let mut out = self.clone();
        out.values[column] = value.clone();
        out
    }
}

/// An immutable table whose rows conform to `schema`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<Instance>,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Instance>) -> Result<Self> {
        schema.validate()?;
        for (r, row) in rows.iter().enumerate() {
            check_row(&schema, r + 1, row)?;
        }
        Ok(Self { schema, rows })
    }

    /// Builds a dataset from textual records whose columns follow `header`.
    /// Columns are reordered into schema order.
    pub fn from_text_records<I, R, S>(schema: Schema, header: &[&str], records: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[S]>,
        S: AsRef<str>,
    {
        let parser = RecordParser::new(&schema, header)?;
        let rows = records
            .into_iter()
            .enumerate()
            .map(|(r, rec)| parser.parse(r + 1, rec.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { schema, rows })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Instance] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.schema.index_of(name)
    }

    pub fn numeric_column(&self, column: usize) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                r.values[column].as_num().ok_or_else(|| {
                    Error::Config(format!(
                        "column `{}` is not numeric",
                        self.schema.features[column].name
                    ))
                })
            })
            .collect()
    }

    pub fn label_column(&self, column: usize) -> Result<Vec<&str>> {
        self.rows
            .iter()
            .map(|r| {
                r.values[column].as_label().ok_or_else(|| {
                    Error::Config(format!(
                        "column `{}` is not categorical",
                        self.schema.features[column].name
                    ))
                })
            })
            .collect()
    }

    /// Reads a binary 0/1 column (numeric 0/1 or labels "0"/"1").
    pub fn binary_column(&self, column: usize) -> Result<Vec<bool>> {
        let name = &self.schema.features[column].name;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| match &row.values[column] {
                Value::Num(v) if *v == 0.0 => Ok(false),
                Value::Num(v) if *v == 1.0 => Ok(true),
                Value::Cat(s) if s == "0" => Ok(false),
                Value::Cat(s) if s == "1" => Ok(true),
                other => Err(Error::Target(format!(
                    "row {}, column `{name}`: value {other} is not binary 0/1",
                    r + 1
                ))),
            })
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

fn check_row(schema: &Schema, row: usize, inst: &Instance) -> Result<()> {
    if inst.arity() != schema.len() {
        return Err(Error::RowArity {
            row,
            expected: schema.len(),
            found: inst.arity(),
        });
    }
    for (f, v) in schema.features.iter().zip(&inst.values) {
        let cell_err = |message: String| Error::Cell {
            row,
            column: f.name.clone(),
            message,
        };
        match (f.kind, v) {
            (FeatureKind::Numeric, Value::Num(x)) if x.is_finite() => {}
            (FeatureKind::Numeric, Value::Num(x)) => {
                return Err(cell_err(format!("non-finite numeric value {x}")))
            }
            (FeatureKind::Categorical, Value::Cat(label)) => {
                check_label(f, label).map_err(cell_err)?
            }
            (kind, _) => {
                return Err(cell_err(format!(
                    "value does not match declared kind {kind:?}"
                )))
            }
        }
    }
    Ok(())
}

fn check_label(f: &FeatureSchema, label: &str) -> core::result::Result<(), String> {
    if label.is_empty() {
        return Err("missing value".into());
    }
    match &f.category_order {
        Some(order) if !order.iter().any(|o| o == label) => {
            Err(format!("unknown category `{label}`"))
        }
        _ => Ok(()),
    }
}

/// Maps a header to schema order and parses cells per declared kind.
struct RecordParser<'s> {
    schema: &'s Schema,
    /// For each schema column, its position in the source record.
    source: Vec<usize>,
}

impl<'s> RecordParser<'s> {
    fn new(schema: &'s Schema, header: &[&str]) -> Result<Self> {
        schema.validate()?;
        for h in header {
            if schema.index_of(h.trim()).is_err() {
                return Err(Error::UnexpectedColumn((*h).to_owned()));
            }
        }
        let source = schema
            .features
            .iter()
            .map(|f| {
                header
                    .iter()
                    .position(|h| h.trim() == f.name)
                    .ok_or_else(|| Error::MissingColumn(f.name.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { schema, source })
    }

    fn parse<S: AsRef<str>>(&self, row: usize, cells: &[S]) -> Result<Instance> {
        if cells.len() != self.source.len() {
            return Err(Error::RowArity {
                row,
                expected: self.source.len(),
                found: cells.len(),
            });
        }
        let values = self
            .schema
            .features
            .iter()
            .zip(&self.source)
            .map(|(f, &src)| {
                let raw = cells[src].as_ref().trim();
                let cell_err = |message: String| Error::Cell {
                    row,
                    column: f.name.clone(),
                    message,
                };
                match f.kind {
                    FeatureKind::Numeric => {
                        if raw.is_empty() {
                            return Err(cell_err("missing value".into()));
                        }
                        match raw.parse::<f64>() {
                            Ok(v) if v.is_finite() => Ok(Value::Num(v)),
                            _ => Err(cell_err(format!("cannot parse `{raw}` as a number"))),
                        }
                    }
                    FeatureKind::Categorical => {
                        check_label(f, raw).map_err(cell_err)?;
                        Ok(Value::Cat(raw.to_owned()))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Instance { values })
    }
}

/// Which value of the protected attribute means `A = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtectedSpec {
    pub attribute: String,
    pub protected_value: String,
    pub non_protected_value: String,
}

impl ProtectedSpec {
    pub fn new(attribute: &str, protected_value: &str, non_protected_value: &str) -> Self {
        Self {
            attribute: attribute.to_owned(),
            protected_value: protected_value.to_owned(),
            non_protected_value: non_protected_value.to_owned(),
        }
    }
}

/// Parses `ATTR=PROTVAL/NONPROTVAL`.
impl FromStr for ProtectedSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("expected ATTR=PROTECTED/NONPROTECTED, got `{s}`"));
        let (attr, values) = s.split_once('=').ok_or_else(bad)?;
        let (prot, nonprot) = values.split_once('/').ok_or_else(bad)?;
        if attr.is_empty() || prot.is_empty() || nonprot.is_empty() {
            return Err(bad());
        }
        Ok(Self::new(attr, prot, nonprot))
    }
}

impl fmt::Display for ProtectedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}={}/{}",
            self.attribute, self.protected_value, self.non_protected_value
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    NonProtected,
    Protected,
}

/// Row indices for `A = 0` and `A = 1`, ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupSplit {
    pub non_protected: Vec<usize>,
    pub protected: Vec<usize>,
    /// Rows whose attribute matched neither value.
    pub excluded: usize,
    membership: Vec<Option<Group>>,
}

impl GroupSplit {
    pub fn group_of(&self, row: usize) -> Option<Group> {
        self.membership.get(row).copied().flatten()
    }

    pub fn retained(&self) -> usize {
        self.non_protected.len() + self.protected.len()
    }
}

pub fn split_by_protected(ds: &Dataset, spec: &ProtectedSpec) -> Result<GroupSplit> {
    let column = ds.column_index(&spec.attribute)?;
    if ds.schema().features[column].role != Role::Protected {
        return Err(Error::Config(format!(
            "column `{}` does not have role `protected`",
            spec.attribute
        )));
    }
    if spec.protected_value == spec.non_protected_value {
        return Err(Error::Config(format!(
            "protected and non-protected values are both `{}`",
            spec.protected_value
        )));
    }
    let mut split = GroupSplit {
        non_protected: Vec::new(),
        protected: Vec::new(),
        excluded: 0,
        membership: Vec::with_capacity(ds.row_count()),
    };
    for (i, row) in ds.rows().iter().enumerate() {
        let v = &row.values[column];
        let group = if v.matches_label(&spec.protected_value) {
            split.protected.push(i);
            Some(Group::Protected)
        } else if v.matches_label(&spec.non_protected_value) {
            split.non_protected.push(i);
            Some(Group::NonProtected)
        } else {
            split.excluded += 1;
            None
        };
        split.membership.push(group);
    }
    if split.non_protected.is_empty() {
        return Err(Error::EmptyGroup("non-protected"));
    }
    if split.protected.is_empty() {
        return Err(Error::EmptyGroup("protected"));
    }
    Ok(split)
}

/// Seeded shuffle into `(train, test)` index lists, each ascending.
pub fn train_test_split(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = libm::round(n as f64 * test_fraction.clamp(0.0, 1.0)) as usize;
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}
