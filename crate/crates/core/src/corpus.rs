//! LLaVA pretrain corpus records: parsing, validation, and serialization.
//!
//! The on-disk schema is a top-level JSON array of records
//! `{ "id": str, "image": str, "conversations": [{ "from": "human"|"gpt", "value": str }] }`.
//! Unknown fields on records and on conversation entries are carried through
//! a round trip unchanged.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::{self, DeserializeSeed, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::language::LanguageCode;

/// Literal placeholder that marks where the image goes in a turn.
pub const IMAGE_TOKEN: &str = "<image>";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed input at line {line}, column {column}: {message}")]
    MalformedInput { line: usize, column: usize, message: String },
    #[error("record {index}: {message}")]
    SchemaViolation { index: usize, message: String },
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("sample {id:?} is tagged {found} but the dataset is being written as {expected}")]
    LanguageMismatch { id: String, expected: LanguageCode, found: LanguageCode },
    #[error("failed to write dataset: {0}")]
    SinkFailure(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Human,
    Assistant,
}

impl Speaker {
    fn from_label(label: &str) -> Option<Self> {
        match label {
            "human" => Some(Speaker::Human),
            "gpt" => Some(Speaker::Assistant),
            _ => None,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Speaker::Human => "human",
            Speaker::Assistant => "gpt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    /// Turn text with the image placeholder removed.
    pub text: String,
    /// Byte offset in `text` where the placeholder was found.
    pub image_marker: Option<usize>,
    /// Unrecognized fields of the conversation entry.
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub extra: Map<String, Value>,
}

impl Turn {
    pub fn new(speaker: Speaker, text: impl Into<String>) -> Self {
        Turn { speaker, text: text.into(), image_marker: None, extra: Map::new() }
    }

    /// Builds a turn from raw text, lifting a single placeholder token into
    /// `image_marker`. One newline adjacent to the token is consumed with it.
    fn lift(speaker: Speaker, raw: &str) -> Result<Self, String> {
        let Some(pos) = raw.find(IMAGE_TOKEN) else {
            return Ok(Turn::new(speaker, raw));
        };
        let after = pos + IMAGE_TOKEN.len();
        if raw[after..].contains(IMAGE_TOKEN) {
            return Err("more than one image placeholder in a turn".into());
        }
        let (before, rest) = (&raw[..pos], &raw[after..]);
        let (text, marker) = if before.is_empty() {
            let rest = rest.strip_prefix('\n').unwrap_or(rest);
            (rest.to_string(), 0)
        } else if rest.is_empty() {
            let before = before.strip_suffix('\n').unwrap_or(before);
            (before.to_string(), before.len())
        } else {
            (format!("{before}{rest}"), before.len())
        };
        Ok(Turn { speaker, text, image_marker: Some(marker), extra: Map::new() })
    }

    /// Raw text with the placeholder re-inserted at the marker.
    pub fn raw_text(&self) -> String {
        match self.image_marker {
            None => self.text.clone(),
            Some(0) => format!("{IMAGE_TOKEN}\n{}", self.text),
            Some(m) if m >= self.text.len() => format!("{}\n{IMAGE_TOKEN}", self.text),
            Some(m) => {
                let m = floor_char_boundary(&self.text, m);
                format!("{}{IMAGE_TOKEN}{}", &self.text[..m], &self.text[m..])
            }
        }
    }

    /// Copy of this turn carrying `text` instead. A marker is re-anchored to
    /// the start or end of the new text, whichever side it was nearer.
    pub fn with_text(&self, text: String) -> Turn {
        let image_marker = self.image_marker.map(|m| if m * 2 <= self.text.len() { 0 } else { text.len() });
        Turn { speaker: self.speaker, text, image_marker, extra: self.extra.clone() }
    }
}

fn floor_char_boundary(s: &str, mut i: usize) -> usize {
    while !s.is_char_boundary(i) {
        i -= 1;
    }
    i
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub image: String,
    pub turns: Vec<Turn>,
    pub language: LanguageCode,
    /// Unrecognized record fields, preserved in order.
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub extra: Map<String, Value>,
}

impl Sample {
    pub fn assistant_turns(&self) -> impl Iterator<Item = (usize, &Turn)> {
        self.turns.iter().enumerate().filter(|(_, t)| t.speaker == Speaker::Assistant)
    }

    fn to_record(&self) -> Value {
        let mut record = Map::new();
        record.insert("id".into(), Value::String(self.id.clone()));
        record.insert("image".into(), Value::String(self.image.clone()));
        let conversations = self
            .turns
            .iter()
            .map(|t| {
                let mut entry = Map::new();
                entry.insert("from".into(), Value::String(t.speaker.label().into()));
                entry.insert("value".into(), Value::String(t.raw_text()));
                for (k, v) in &t.extra {
                    entry.insert(k.clone(), v.clone());
                }
                Value::Object(entry)
            })
            .collect();
        record.insert("conversations".into(), Value::Array(conversations));
        for (k, v) in &self.extra {
            record.insert(k.clone(), v.clone());
        }
        Value::Object(record)
    }

    fn from_record(value: Value, index: usize, language: &LanguageCode) -> Result<Self, CorpusError> {
        let violation = |message: String| CorpusError::SchemaViolation { index, message };
        let Value::Object(mut record) = value else {
            return Err(violation("record is not an object".into()));
        };
        let mut take_string = |key: &str| match record.shift_remove(key) {
            Some(Value::String(s)) => Ok(s),
            Some(_) => Err(violation(format!("field `{key}` is not a string"))),
            None => Err(violation(format!("missing field `{key}`"))),
        };
        let id = take_string("id")?;
        let image = take_string("image")?;
        if id.is_empty() {
            return Err(violation("empty id".into()));
        }
        let conversations = match record.shift_remove("conversations") {
            Some(Value::Array(items)) => items,
            Some(_) => return Err(violation("field `conversations` is not an array".into())),
            None => return Err(violation("missing field `conversations`".into())),
        };

        let mut turns = Vec::with_capacity(conversations.len());
        for (i, entry) in conversations.into_iter().enumerate() {
            let Value::Object(mut entry) = entry else {
                return Err(violation(format!("conversation {i} is not an object")));
            };
            let from = match entry.shift_remove("from") {
                Some(Value::String(s)) => s,
                _ => return Err(violation(format!("conversation {i}: missing string `from`"))),
            };
            let speaker = Speaker::from_label(&from)
                .ok_or_else(|| violation(format!("conversation {i}: unknown speaker {from:?}")))?;
            let raw = match entry.shift_remove("value") {
                Some(Value::String(s)) => s,
                _ => return Err(violation(format!("conversation {i}: missing string `value`"))),
            };
            let expected = if i % 2 == 0 { Speaker::Human } else { Speaker::Assistant };
            if speaker != expected {
                return Err(violation(format!(
                    "conversation {i}: expected {} turn, found {}",
                    expected.label(),
                    speaker.label()
                )));
            }
            let mut turn = Turn::lift(speaker, &raw).map_err(|m| violation(format!("conversation {i}: {m}")))?;
            turn.extra = entry;
            turns.push(turn);
        }
        if !turns.iter().any(|t| t.speaker == Speaker::Assistant) {
            return Err(violation("no assistant turn".into()));
        }

        Ok(Sample { id, image, turns, language: language.clone(), extra: record })
    }
}

/// One assistant response addressed for translation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssistantPayload {
    pub sample_id: String,
    pub turn_index: usize,
    pub text: String,
}

/// Parses an English dataset from a byte slice.
pub fn parse_dataset(input: &[u8]) -> Result<Vec<Sample>, CorpusError> {
    parse_dataset_from_reader(input, &LanguageCode::english())
}

/// Streams records out of `reader`, tagging each sample with `language`.
/// Records are converted one at a time, so the raw JSON tree of the whole
/// file is never held in memory.
pub fn parse_dataset_from_reader<R: Read>(reader: R, language: &LanguageCode) -> Result<Vec<Sample>, CorpusError> {
    let mut de = serde_json::Deserializer::from_reader(std::io::BufReader::new(reader));
    let mut schema_error = None;
    let seed = RecordsSeed { language, schema_error: &mut schema_error };
    let parsed = seed.deserialize(&mut de).and_then(|samples| de.end().map(|_| samples));
    match parsed {
        Ok(samples) => Ok(samples),
        Err(e) => Err(schema_error.take().unwrap_or_else(|| CorpusError::MalformedInput {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })),
    }
}

struct RecordsSeed<'a> {
    language: &'a LanguageCode,
    schema_error: &'a mut Option<CorpusError>,
}

impl<'de> DeserializeSeed<'de> for RecordsSeed<'_> {
    type Value = Vec<Sample>;

    fn deserialize<D: de::Deserializer<'de>>(self, deserializer: D) -> Result<Self::Value, D::Error> {
        deserializer.deserialize_seq(self)
    }
}

impl<'de> Visitor<'de> for RecordsSeed<'_> {
    type Value = Vec<Sample>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a JSON array of LLaVA records")
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
        let mut samples = Vec::with_capacity(seq.size_hint().unwrap_or(0));
        let mut seen = HashSet::new();
        while let Some(value) = seq.next_element::<Value>()? {
            let index = samples.len();
            let sample = match Sample::from_record(value, index, self.language) {
                Ok(s) => s,
                Err(e) => {
                    let msg = e.to_string();
                    *self.schema_error = Some(e);
                    return Err(de::Error::custom(msg));
                }
            };
            if !seen.insert(sample.id.clone()) {
                *self.schema_error = Some(CorpusError::DuplicateId(sample.id.clone()));
                return Err(de::Error::custom("duplicate id"));
            }
            samples.push(sample);
        }
        Ok(samples)
    }
}

/// One payload per assistant turn, in sample order then turn order.
pub fn extract_assistant_payloads(samples: &[Sample]) -> Vec<AssistantPayload> {
    samples
        .iter()
        .flat_map(|s| {
            s.assistant_turns().map(move |(i, t)| AssistantPayload {
                sample_id: s.id.clone(),
                turn_index: i,
                text: t.text.clone(),
            })
        })
        .collect()
}

/// Writes `samples` as a LLaVA JSON array, one record per line, and
/// returns the number of records written.
pub fn write_dataset<W: Write>(samples: &[Sample], language: &LanguageCode, sink: W) -> Result<usize, CorpusError> {
    for s in samples {
        if &s.language != language {
            return Err(CorpusError::LanguageMismatch {
                id: s.id.clone(),
                expected: language.clone(),
                found: s.language.clone(),
            });
        }
    }
    let mut sink = std::io::BufWriter::new(sink);
    if samples.is_empty() {
        sink.write_all(b"[]\n")?;
    } else {
        sink.write_all(b"[\n")?;
        for (i, s) in samples.iter().enumerate() {
            if i > 0 {
                sink.write_all(b",\n")?;
            }
            serde_json::to_writer(&mut sink, &s.to_record()).map_err(std::io::Error::from)?;
        }
        sink.write_all(b"\n]\n")?;
    }
    sink.flush()?;
    Ok(samples.len())
}

/// `<dataset-stem>.<lang>.json`
pub fn output_file_name(stem: &str, language: &LanguageCode) -> String {
    format!("{stem}.{language}.json")
}

pub fn dataset_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into())
}

/// Counts reported by `ingest`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DatasetStats {
    pub samples: usize,
    pub turns: usize,
    pub assistant_turns: usize,
    pub anomalies: BTreeMap<String, usize>,
}

pub fn dataset_stats(samples: &[Sample]) -> DatasetStats {
    let mut stats = DatasetStats { samples: samples.len(), ..Default::default() };
    let mut bump = |key: &str| *stats.anomalies.entry(key.to_string()).or_insert(0) += 1;
    let mut turns = 0;
    let mut assistant = 0;
    for s in samples {
        turns += s.turns.len();
        assistant += s.assistant_turns().count();
        if s.turns.iter().all(|t| t.image_marker.is_none()) {
            bump("no_image_placeholder");
        }
        if s.turns.len() > 2 {
            bump("multi_turn");
        }
        if s.assistant_turns().any(|(_, t)| t.text.trim().is_empty()) {
            bump("empty_assistant_text");
        }
        if s.turns.len() % 2 == 1 {
            bump("trailing_human_turn");
        }
        if !s.extra.is_empty() {
            bump("extra_fields");
        }
    }
    stats.turns = turns;
    stats.assistant_turns = assistant;
    stats
}
