//! Column schema: declared kinds, roles, and observed ranges.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declared measurement kind of a column.
///
/// Non-categorical kinds are compared with a range-normalized Manhattan
/// distance, categorical kinds with the overlap measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Categorical,
    Continuous,
    Ordinal,
    Interval,
}

impl AttributeKind {
    /// True for kinds whose cells are stored as numbers.
    pub fn is_numeric(self) -> bool {
        !matches!(self, AttributeKind::Categorical)
    }
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AttributeKind::Categorical => "categorical",
            AttributeKind::Continuous => "continuous",
            AttributeKind::Ordinal => "ordinal",
            AttributeKind::Interval => "interval",
        };
        f.write_str(s)
    }
}

/// Role a column plays in an audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeRole {
    /// Attribute covered by non-discrimination law; excluded from distances.
    Protected,
    /// Attribute the decision-maker is allowed to use; enters the distance.
    NonProtected,
    /// The binary decision outcome (0/1).
    Outcome,
}

/// Recorded 0/1 recoding of a binary protected column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtectedEncoding {
    /// Original value mapped to 1 (the group whose claims are tested).
    pub one: String,
    /// Original value mapped to 0.
    pub zero: String,
}

/// Schema of one column, including ranges observed in the loaded data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    pub role: AttributeRole,
    /// Minimum over all rows; `None` for categorical columns.
    pub observed_min: Option<f64>,
    /// Maximum over all rows; `None` for categorical columns.
    pub observed_max: Option<f64>,
    /// Set by [`encode_protected`](crate::data::encode_protected).
    pub encoding: Option<ProtectedEncoding>,
}

impl AttributeSchema {
    pub fn new(name: impl Into<String>, kind: AttributeKind, role: AttributeRole) -> Self {
        AttributeSchema {
            name: name.into(),
            kind,
            role,
            observed_min: None,
            observed_max: None,
            encoding: None,
        }
    }

    /// Observed (min, max) range; `None` for categorical columns.
    pub fn range(&self) -> Option<(f64, f64)> {
        match (self.observed_min, self.observed_max) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            _ => None,
        }
    }
}

/// One column entry of a schema config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnConfig {
    pub name: String,
    pub kind: AttributeKind,
    pub role: AttributeRole,
    /// For protected columns: the original value to recode as 1.
    #[serde(default)]
    pub coded_one: Option<String>,
}

/// Declarative description of the expected columns, read from TOML:
///
/// ```toml
/// [[column]]
/// name = "race"
/// kind = "categorical"
/// role = "protected"
/// coded_one = "nonwhite"
///
/// [[column]]
/// name = "UGPA"
/// kind = "continuous"
/// role = "non_protected"
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaConfig {
    #[serde(rename = "column")]
    pub columns: Vec<ColumnConfig>,
}

impl SchemaConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: SchemaConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("schema config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::Schema("schema declares no columns".into()));
        }
        for (i, a) in self.columns.iter().enumerate() {
            for b in &self.columns[i + 1..] {
                if a.name == b.name {
                    return Err(Error::Schema(format!("duplicate column '{}'", a.name)));
                }
            }
            if a.coded_one.is_some() && a.kind != AttributeKind::Categorical {
                return Err(Error::Schema(format!(
                    "column '{}' sets coded_one but is not categorical",
                    a.name
                )));
            }
        }
        let protected = self.count_role(AttributeRole::Protected);
        let non_protected = self.count_role(AttributeRole::NonProtected);
        let outcome = self.count_role(AttributeRole::Outcome);
        if protected == 0 {
            return Err(Error::Schema(
                "at least one protected column required".into(),
            ));
        }
        if non_protected == 0 {
            return Err(Error::Schema(
                "at least one non-protected column required".into(),
            ));
        }
        if outcome > 1 {
            return Err(Error::Schema(
                "more than one outcome column declared".into(),
            ));
        }
        Ok(())
    }

    fn count_role(&self, role: AttributeRole) -> usize {
        self.columns.iter().filter(|c| c.role == role).count()
    }
}
