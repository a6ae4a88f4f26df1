use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense mapping between category text and integer codes `0..c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "Vec<String>", try_from = "Vec<String>")]
pub struct CodeMap {
    values: Vec<String>,
    index: HashMap<String, u32>,
}

impl CodeMap {
    /// Codes assigned in lexicographic order of the distinct values.
    pub fn from_values<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let distinct: BTreeSet<String> = values.into_iter().map(|v| v.as_ref().to_owned()).collect();
        Self::from_ordered(distinct.into_iter().collect()).expect("distinct values")
    }

    /// Codes assigned in the given order; values must be distinct.
    pub fn from_ordered(values: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(values.len());
        for (code, v) in values.iter().enumerate() {
            if index.insert(v.clone(), code as u32).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate category `{v}`")));
            }
        }
        Ok(CodeMap { values, index })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn code(&self, value: &str) -> Option<u32> {
        self.index.get(value).copied()
    }

    /// Code for `value`, or the shared out-of-vocabulary code `len()`.
    /// The flag is true when the value was not seen at fit time.
    pub fn encode(&self, value: &str) -> (u32, bool) {
        match self.code(value) {
            Some(c) => (c, false),
            None => (self.values.len() as u32, true),
        }
    }

    pub fn decode(&self, code: u32) -> Option<&str> {
        self.values.get(code as usize).map(String::as_str)
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }
}

impl PartialEq for CodeMap {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl From<CodeMap> for Vec<String> {
    fn from(c: CodeMap) -> Self {
        c.values
    }
}

impl TryFrom<Vec<String>> for CodeMap {
    type Error = Error;

    fn try_from(values: Vec<String>) -> Result<Self> {
        CodeMap::from_ordered(values)
    }
}

/// Ordinal coding of a text column.
pub fn numericalize<S: AsRef<str>>(column: &[S]) -> (Vec<u32>, CodeMap) {
    let map = CodeMap::from_values(column.iter().map(AsRef::as_ref));
    let codes = column
        .iter()
        .map(|v| map.code(v.as_ref()).expect("value was inserted"))
        .collect();
    (codes, map)
}
