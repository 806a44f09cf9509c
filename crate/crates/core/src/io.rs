//! File formats: the interaction-log CSV, schema and weight JSON documents.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::graph::{Direction, EdgeKey, EdgeTypeRegistry, InteractionRecord, Schema, WeightVector};

pub const LOG_HEADER: [&str; 5] = ["user_id", "object_id", "object_tag", "interaction", "timestamp"];

#[derive(Deserialize)]
struct RawRecord {
    user_id: String,
    object_id: String,
    object_tag: String,
    interaction: String,
    timestamp: String,
}

pub fn parse_timestamp(s: &str) -> std::result::Result<DateTime<Utc>, chrono::ParseError> {
    DateTime::parse_from_rfc3339(s.trim()).map(|t| t.with_timezone(&Utc))
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Parses an interaction log. `label` names the source in error messages;
/// rows are numbered by file line.
pub fn parse_records<R: Read>(reader: R, label: &str) -> Result<Vec<InteractionRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let row_err = |row: usize, message: String| Error::Row {
        path: label.to_string(),
        row,
        message,
    };
    let headers = rdr.headers().map_err(|e| row_err(1, e.to_string()))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(row_err(1, "empty file: missing header".into()));
    }
    if headers.iter().collect::<Vec<_>>() != LOG_HEADER {
        return Err(row_err(
            1,
            format!("header must be `{}`, got `{}`", LOG_HEADER.join(","), headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let mut records = Vec::new();
    for row in rdr.deserialize::<RawRecord>() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            row_err(line, e.to_string())
        })?;
        let line = records.len() + 2;
        let timestamp = parse_timestamp(&row.timestamp)
            .map_err(|e| row_err(line, format!("malformed timestamp `{}`: {e}", row.timestamp)))?;
        for (field, value) in [("user_id", &row.user_id), ("object_id", &row.object_id), ("interaction", &row.interaction)] {
            if value.is_empty() {
                return Err(row_err(line, format!("empty {field}")));
            }
        }
        records.push(InteractionRecord {
            user_id: row.user_id,
            object_id: row.object_id,
            object_tag: row.object_tag,
            interaction: row.interaction,
            timestamp,
        });
    }
    Ok(records)
}

pub fn read_records(path: &Path) -> Result<Vec<InteractionRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_records(std::io::BufReader::new(file), &path.display().to_string())
}

pub fn write_records<W: Write>(writer: W, records: &[InteractionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Data(format!("writing interaction log: {e}"));
    w.write_record(LOG_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.user_id.as_str(),
            r.object_id.as_str(),
            r.object_tag.as_str(),
            r.interaction.as_str(),
            &format_timestamp(&r.timestamp),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Data(format!("writing interaction log: {e}")))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_schema(path: &Path) -> Result<Schema> {
    read_json(path)
}

/// Turns a weight document into a weight vector. Keys are
/// `<interaction>:<out|in>`; a bare `<interaction>` sets both directions.
/// Every registered edge type must end up with a weight.
pub fn parse_weights(doc: &BTreeMap<String, f64>, registry: &EdgeTypeRegistry) -> Result<WeightVector> {
    let mut map = BTreeMap::new();
    for (key, &value) in doc {
        let keys: Vec<EdgeKey> = if key.contains(':') {
            vec![key.parse()?]
        } else {
            let def = registry
                .interaction(key)
                .ok_or_else(|| Error::Config(format!("weight for unknown interaction `{key}`")))?;
            let mut v = vec![EdgeKey::out(key)];
            if def.two_way {
                v.push(EdgeKey::inbound(key));
            }
            v
        };
        for k in keys {
            if !registry.contains(&k) {
                return Err(Error::Config(format!("weight for unregistered edge type `{k}`")));
            }
            if map.insert(k.clone(), value).is_some() {
                return Err(Error::Config(format!("edge type `{k}` weighted twice")));
            }
        }
    }
    let weights = WeightVector::new(map)?;
    weights.check_covers(registry)?;
    Ok(weights)
}

pub fn read_weights(path: &Path, registry: &EdgeTypeRegistry) -> Result<WeightVector> {
    let doc: BTreeMap<String, f64> = read_json(path)?;
    parse_weights(&doc, registry).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Weight document with one `<interaction>:<direction>` entry per edge type.
pub fn weights_document(weights: &WeightVector) -> BTreeMap<String, f64> {
    weights.iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Weight document with one bare `<interaction>` entry when both directions
/// share a weight.
pub fn undirected_weights_document(weights: &WeightVector) -> BTreeMap<String, f64> {
    let mut doc = BTreeMap::new();
    for (k, v) in weights.iter() {
        match k.direction {
            Direction::Out => {
                let paired = weights.get(&EdgeKey::inbound(&k.interaction));
                if paired.is_none_or(|w| w == v) {
                    doc.insert(k.interaction.clone(), v);
                } else {
                    doc.insert(k.to_string(), v);
                }
            }
            Direction::In => {
                if weights.get(&EdgeKey::out(&k.interaction)) != Some(v) {
                    doc.insert(k.to_string(), v);
                }
            }
        }
    }
    doc
}

pub fn to_json_pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Data(format!("serializing JSON: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{register_schema, InteractionDef};

    const LOG: &str = "user_id,object_id,object_tag,interaction,timestamp\n\
                       u1,c1,course,follow_course,2020-03-17T09:00:00Z\n\
                       u2,c1,course,follow_course,2020-03-18T10:30:00Z\n";

    fn registry() -> EdgeTypeRegistry {
        register_schema(&Schema {
            user_tag: "user".into(),
            tags: vec!["user".into(), "course".into()],
            interactions: vec![
                InteractionDef {
                    name: "follow_course".into(),
                    source: "user".into(),
                    target: "course".into(),
                    two_way: true,
                },
                InteractionDef {
                    name: "follow_user".into(),
                    source: "user".into(),
                    target: "user".into(),
                    two_way: false,
                },
            ],
        })
        .unwrap()
    }

    #[test]
    fn parses_log() {
        let recs = parse_records(LOG.as_bytes(), "log").unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(format_timestamp(&recs[0].timestamp), "2020-03-17T09:00:00Z");
        let mut out = Vec::new();
        write_records(&mut out, &recs).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), LOG);
    }

    #[test]
    fn empty_file_is_rejected() {
        let err = parse_records("".as_bytes(), "empty.csv").unwrap_err();
        assert!(matches!(err, Error::Row { row: 1, .. }), "{err}");
    }

    #[test]
    fn bad_timestamp_names_the_row() {
        let log = "user_id,object_id,object_tag,interaction,timestamp\n\
                   u1,c1,course,follow_course,2020-03-17T09:00:00Z\n\
                   u1,c2,course,follow_course,yesterday\n";
        match parse_records(log.as_bytes(), "x.csv").unwrap_err() {
            Error::Row { row, message, .. } => {
                assert_eq!(row, 3);
                assert!(message.contains("yesterday"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn wrong_header() {
        assert!(parse_records("a,b,c\n1,2,3\n".as_bytes(), "x").is_err());
    }

    #[test]
    fn weight_documents() {
        let reg = registry();
        let doc: BTreeMap<String, f64> =
            serde_json::from_str(r#"{"follow_course:out": 0.73, "follow_course:in": 1.88, "follow_user:out": 0.95}"#).unwrap();
        let w = parse_weights(&doc, &reg).unwrap();
        assert_eq!(w.get(&EdgeKey::out("follow_course")), Some(0.73));
        assert_eq!(weights_document(&w), doc);

        let bare: BTreeMap<String, f64> = serde_json::from_str(r#"{"follow_course": 0.5, "follow_user": 1.5}"#).unwrap();
        let w = parse_weights(&bare, &reg).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(undirected_weights_document(&w), bare);

        let missing: BTreeMap<String, f64> = serde_json::from_str(r#"{"follow_course": 0.5}"#).unwrap();
        assert!(parse_weights(&missing, &reg).is_err());
        let unknown: BTreeMap<String, f64> =
            serde_json::from_str(r#"{"follow_course": 0.5, "follow_user": 1.0, "nope:out": 1.0}"#).unwrap();
        assert!(parse_weights(&unknown, &reg).is_err());
        let one_way_in: BTreeMap<String, f64> =
            serde_json::from_str(r#"{"follow_course": 0.5, "follow_user": 1.0, "follow_user:in": 1.0}"#).unwrap();
        assert!(parse_weights(&one_way_in, &reg).is_err());
    }
}
