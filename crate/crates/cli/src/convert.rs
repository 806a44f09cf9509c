//! Column-mapping converter from raw upstream exports to the canonical
//! interaction log.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::Deserialize;

use hetrec_core::io::parse_timestamp;
use hetrec_core::{Error, InteractionRecord, Result};

#[derive(Debug, Clone, Deserialize)]
pub struct Target {
    pub interaction: String,
    pub object_tag: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mapping {
    /// Refuse inputs whose content hash differs, so upstream layout drift
    /// fails loudly instead of being misread.
    #[serde(default)]
    pub input_sha256: Option<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    pub user_column: String,
    pub object_column: String,
    pub timestamp_column: String,
    /// `rfc3339`, `unix`, `unix_ms`, or a strftime pattern read as UTC.
    #[serde(default = "default_format")]
    pub timestamp_format: String,
    #[serde(default)]
    pub interaction_column: Option<String>,
    #[serde(default)]
    pub interactions: BTreeMap<String, Target>,
    /// Used for every row when there is no interaction column.
    #[serde(default)]
    pub constant: Option<Target>,
    #[serde(default)]
    pub skip_unmapped: bool,
}

fn default_delimiter() -> char {
    ','
}

fn default_format() -> String {
    "rfc3339".into()
}

impl Mapping {
    fn validate(&self) -> Result<()> {
        match (&self.interaction_column, &self.constant) {
            (Some(_), None) if !self.interactions.is_empty() => {}
            (None, Some(_)) => {}
            _ => {
                return Err(Error::Config(
                    "mapping needs either `interaction_column` with `interactions`, or `constant`".into(),
                ))
            }
        }
        if !self.delimiter.is_ascii() {
            return Err(Error::Config("delimiter must be a single ASCII character".into()));
        }
        Ok(())
    }

    fn timestamp(&self, raw: &str) -> std::result::Result<DateTime<Utc>, String> {
        let raw = raw.trim();
        match self.timestamp_format.as_str() {
            "rfc3339" => parse_timestamp(raw).map_err(|e| e.to_string()),
            "unix" | "unix_ms" => {
                let n: i64 = raw.parse().map_err(|e| format!("{e}"))?;
                let t = if self.timestamp_format == "unix" {
                    DateTime::from_timestamp(n, 0)
                } else {
                    DateTime::from_timestamp_millis(n)
                };
                t.ok_or_else(|| "out of range".to_string())
            }
            fmt => NaiveDateTime::parse_from_str(raw, fmt)
                .map(|t| t.and_utc())
                .map_err(|e| e.to_string()),
        }
    }
}

pub struct Converted {
    pub records: Vec<InteractionRecord>,
    pub skipped: usize,
}

pub fn convert(mapping: &Mapping, input: &Path, bytes: &[u8], digest: &str) -> Result<Converted> {
    mapping.validate()?;
    let label = input.display().to_string();
    if let Some(expected) = &mapping.input_sha256 {
        if !expected.eq_ignore_ascii_case(digest) {
            return Err(Error::Data(format!(
                "{label}: content hash {digest} does not match the recorded {expected}; upstream layout may have changed"
            )));
        }
    }

    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let row_err = |row: usize, message: String| Error::Row {
        path: label.clone(),
        row,
        message,
    };
    let headers = rdr.headers().map_err(|e| row_err(1, e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| row_err(1, format!("missing column `{name}` (have: {})", headers.iter().collect::<Vec<_>>().join(","))))
    };
    let user = column(&mapping.user_column)?;
    let object = column(&mapping.object_column)?;
    let ts = column(&mapping.timestamp_column)?;
    let kind = mapping.interaction_column.as_deref().map(column).transpose()?;

    let mut records = Vec::new();
    let mut skipped = 0;
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| row_err(line, e.to_string()))?;
        let field = |idx: usize| row.get(idx).unwrap_or("");
        let target = match kind {
            None => mapping.constant.as_ref().expect("validated"),
            Some(idx) => match mapping.interactions.get(field(idx)) {
                Some(t) => t,
                None if mapping.skip_unmapped => {
                    skipped += 1;
                    continue;
                }
                None => return Err(row_err(line, format!("unmapped interaction value `{}`", field(idx)))),
            },
        };
        let timestamp = mapping
            .timestamp(field(ts))
            .map_err(|e| row_err(line, format!("malformed timestamp `{}`: {e}", field(ts))))?;
        if field(user).is_empty() || field(object).is_empty() {
            return Err(row_err(line, "empty user or object id".into()));
        }
        records.push(InteractionRecord::new(
            field(user),
            field(object),
            &target.object_tag,
            &target.interaction,
            timestamp,
        ));
    }
    Ok(Converted { records, skipped })
}
