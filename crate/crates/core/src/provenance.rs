//! Append-only, hash-chained ledger of pipeline steps and curation decisions.
//!
//! Each record's `digest` covers every field except the timestamp, so two
//! runs over identical inputs chain identically. The timestamp is bound to
//! the record by a separate `seal = H(digest || timestamp)`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::digest::{canonical_bytes, Digest, DIGEST_ALGORITHM};

pub const LEDGER_FORMAT: &str = "capta-provenance";
pub const LEDGER_FORMAT_VERSION: u32 = 1;
pub const AUTO_ACTOR: &str = "auto";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Parse,
    Extract,
    Resolve,
    Decision,
    Build,
    Filter,
    Communities,
    Layout,
    Export,
}

impl StepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepKind::Parse => "parse",
            StepKind::Extract => "extract",
            StepKind::Resolve => "resolve",
            StepKind::Decision => "decision",
            StepKind::Build => "build",
            StepKind::Filter => "filter",
            StepKind::Communities => "communities",
            StepKind::Layout => "layout",
            StepKind::Export => "export",
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything a step contributes to a record; the ledger adds sequencing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordBody {
    pub step: StepKind,
    pub params: Value,
    pub input_digest: Digest,
    pub output_digest: Digest,
    pub actor: String,
    pub rationale: String,
    pub timestamp: String,
}

impl RecordBody {
    pub fn auto(step: StepKind, params: Value, input_digest: Digest, output_digest: Digest) -> Self {
        Self {
            step,
            params,
            input_digest,
            output_digest,
            actor: AUTO_ACTOR.into(),
            rationale: String::new(),
            timestamp: String::new(),
        }
    }

    pub fn is_human(&self) -> bool {
        self.actor != AUTO_ACTOR || self.step == StepKind::Decision
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceRecord {
    pub seq: u64,
    pub step: StepKind,
    pub params: Value,
    pub input_digest: Digest,
    pub output_digest: Digest,
    pub actor: String,
    pub rationale: String,
    pub timestamp: String,
    pub prev_digest: Digest,
    pub digest: Digest,
    pub seal: Digest,
}

#[derive(Serialize)]
struct DigestedFields<'a> {
    seq: u64,
    step: StepKind,
    params: &'a Value,
    input_digest: &'a Digest,
    output_digest: &'a Digest,
    actor: &'a str,
    rationale: &'a str,
    prev_digest: &'a Digest,
}

impl ProvenanceRecord {
    fn compute_digest(&self) -> Digest {
        Digest::of_value(&DigestedFields {
            seq: self.seq,
            step: self.step,
            params: &self.params,
            input_digest: &self.input_digest,
            output_digest: &self.output_digest,
            actor: &self.actor,
            rationale: &self.rationale,
            prev_digest: &self.prev_digest,
        })
    }

    fn compute_seal(&self) -> Digest {
        Digest::of_parts([&self.digest.0[..], self.timestamp.as_bytes()])
    }

    pub fn body(&self) -> RecordBody {
        RecordBody {
            step: self.step,
            params: self.params.clone(),
            input_digest: self.input_digest,
            output_digest: self.output_digest,
            actor: self.actor.clone(),
            rationale: self.rationale.clone(),
            timestamp: self.timestamp.clone(),
        }
    }

    pub fn to_line(&self) -> String {
        String::from_utf8(canonical_bytes(self)).expect("JSON is UTF-8")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("record {seq}: previous digest does not match ledger head")]
    ChainMismatch { seq: u64 },
    #[error("record {seq}: expected sequence number {expected}")]
    Sequence { seq: u64, expected: u64 },
    #[error("record {seq}: digest does not match contents")]
    Tampered { seq: u64 },
    #[error("record {seq}: human step without rationale")]
    MissingRationale { seq: u64 },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("bad ledger header: {0}")]
    Header(String),
}

impl LedgerError {
    /// Sequence number of the offending record; lines count from the first
    /// record line, so line n is record n.
    pub fn seq(&self) -> Option<u64> {
        match self {
            LedgerError::Sequence { expected, .. } => Some(*expected),
            LedgerError::ChainMismatch { seq }
            | LedgerError::Tampered { seq }
            | LedgerError::MissingRationale { seq } => Some(*seq),
            LedgerError::Malformed { line, .. } => Some(*line as u64),
            LedgerError::Header(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    pub digest: String,
}

impl LogHeader {
    pub fn new(format: &str) -> Self {
        Self {
            format: format.into(),
            version: LEDGER_FORMAT_VERSION,
            digest: DIGEST_ALGORITHM.into(),
        }
    }

    pub fn to_line(&self) -> String {
        String::from_utf8(canonical_bytes(self)).expect("JSON is UTF-8")
    }

    /// Parse and check a header line against the expected format name.
    pub fn check(line: &str, format: &str) -> Result<Self, String> {
        let header: LogHeader = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if header.to_line() != line {
            return Err("header is not in canonical form".into());
        }
        if header.format != format {
            return Err(alloc::format!("expected format {format:?}, found {:?}", header.format));
        }
        if header.version != LEDGER_FORMAT_VERSION {
            return Err(alloc::format!("unsupported version {}", header.version));
        }
        if header.digest != DIGEST_ALGORITHM {
            return Err(alloc::format!("unsupported digest {:?}", header.digest));
        }
        Ok(header)
    }
}

/// Split a line-delimited log into its header and record lines. Every line,
/// including the last, must end with `\n`.
pub fn split_log_lines<'a>(text: &'a str, format: &str) -> Result<Vec<&'a str>, LedgerError> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let Some(body) = text.strip_suffix('\n') else {
        return Err(LedgerError::Header("log does not end with a newline".into()));
    };
    let mut lines = body.split('\n');
    let header = lines.next().unwrap_or_default();
    LogHeader::check(header, format).map_err(LedgerError::Header)?;
    Ok(lines.collect())
}

/// Parse one record line, requiring it to be byte-identical to the canonical
/// re-serialization.
pub fn parse_canonical_line<T>(line: &str, number: usize) -> Result<T, LedgerError>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    let value: T = serde_json::from_str(line).map_err(|e| LedgerError::Malformed {
        line: number,
        message: e.to_string(),
    })?;
    if canonical_bytes(&value) != line.as_bytes() {
        return Err(LedgerError::Malformed {
            line: number,
            message: "record is not in canonical form".into(),
        });
    }
    Ok(value)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger {
    records: Vec<ProvenanceRecord>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[ProvenanceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Digest of the last record, or zero for an empty ledger.
    pub fn head(&self) -> Digest {
        self.records.last().map_or(Digest::ZERO, |r| r.digest)
    }

    pub fn next_seq(&self) -> u64 {
        self.records.len() as u64 + 1
    }

    /// Build the record that would follow the current head.
    pub fn seal(&self, body: RecordBody) -> ProvenanceRecord {
        let mut record = ProvenanceRecord {
            seq: self.next_seq(),
            step: body.step,
            params: body.params,
            input_digest: body.input_digest,
            output_digest: body.output_digest,
            actor: body.actor,
            rationale: body.rationale,
            timestamp: body.timestamp,
            prev_digest: self.head(),
            digest: Digest::ZERO,
            seal: Digest::ZERO,
        };
        record.digest = record.compute_digest();
        record.seal = record.compute_seal();
        record
    }

    fn check_next(&self, record: &ProvenanceRecord) -> Result<(), LedgerError> {
        let seq = record.seq;
        if record.prev_digest != self.head() {
            return Err(LedgerError::ChainMismatch { seq });
        }
        if seq != self.next_seq() {
            return Err(LedgerError::Sequence {
                seq,
                expected: self.next_seq(),
            });
        }
        if record.compute_digest() != record.digest || record.compute_seal() != record.seal {
            return Err(LedgerError::Tampered { seq });
        }
        if record.body().is_human() && record.rationale.trim().is_empty() {
            return Err(LedgerError::MissingRationale { seq });
        }
        Ok(())
    }

    /// Append a pre-built record; its previous digest must equal the head.
    pub fn record(&mut self, record: ProvenanceRecord) -> Result<(), LedgerError> {
        self.check_next(&record)?;
        self.records.push(record);
        Ok(())
    }

    pub fn append(&mut self, body: RecordBody) -> Result<&ProvenanceRecord, LedgerError> {
        let record = self.seal(body);
        self.record(record)?;
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn from_records<I: IntoIterator<Item = ProvenanceRecord>>(records: I) -> Result<Self, LedgerError> {
        let mut ledger = Ledger::new();
        for r in records {
            ledger.record(r)?;
        }
        Ok(ledger)
    }

    pub fn header_line() -> String {
        LogHeader::new(LEDGER_FORMAT).to_line()
    }

    /// Full file contents: header plus one record per line.
    pub fn to_text(&self) -> String {
        let mut out = Self::header_line();
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.to_line());
            out.push('\n');
        }
        out
    }

    /// Parse and verify a ledger file end to end.
    pub fn parse(text: &str) -> Result<Self, LedgerError> {
        let mut ledger = Ledger::new();
        for (i, line) in split_log_lines(text, LEDGER_FORMAT)?.into_iter().enumerate() {
            let record: ProvenanceRecord = parse_canonical_line(line, i + 1)?;
            ledger.record(record)?;
        }
        Ok(ledger)
    }
}

/// Digest of several named artifacts, order-sensitive.
pub fn digest_named<'a, I>(parts: I) -> Digest
where
    I: IntoIterator<Item = (&'a str, &'a [u8])>,
{
    let mut flat: Vec<&[u8]> = Vec::new();
    for (name, bytes) in parts {
        flat.push(name.as_bytes());
        flat.push(bytes);
    }
    Digest::of_parts(flat)
}

impl fmt::Display for ProvenanceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {} by {}", self.seq, self.step, self.actor)?;
        if !self.rationale.is_empty() {
            write!(f, ": {}", self.rationale)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn body(step: StepKind, n: u64) -> RecordBody {
        let mut b = RecordBody::auto(step, json!({ "n": n, "gamma": 1.0 }), Digest::of(&n.to_le_bytes()), Digest::ZERO);
        b.timestamp = "2026-01-01T00:00:00Z".into();
        b
    }

    #[test]
    fn append_to_empty() {
        let mut l = Ledger::new();
        let rec = l.seal(body(StepKind::Parse, 1));
        assert_eq!(rec.prev_digest, Digest::ZERO);
        l.record(rec).unwrap();
        assert_eq!(l.len(), 1);
    }

    #[test]
    fn stale_previous_digest_rejected() {
        let mut l = Ledger::new();
        let stale = l.seal(body(StepKind::Parse, 1));
        l.append(body(StepKind::Parse, 1)).unwrap();
        let mut second = stale.clone();
        second.seq = 2;
        assert_eq!(l.record(second), Err(LedgerError::ChainMismatch { seq: 2 }));
    }

    #[test]
    fn text_round_trip() {
        let mut l = Ledger::new();
        for (i, s) in [StepKind::Parse, StepKind::Extract, StepKind::Build].into_iter().enumerate() {
            l.append(body(s, i as u64)).unwrap();
        }
        let text = l.to_text();
        assert_eq!(Ledger::parse(&text).unwrap(), l);
        assert!(Ledger::parse("").unwrap().is_empty());
    }

    #[test]
    fn human_steps_need_rationale() {
        let mut l = Ledger::new();
        let mut b = body(StepKind::Decision, 0);
        b.actor = "curator".into();
        assert_eq!(l.append(b.clone()).unwrap_err(), LedgerError::MissingRationale { seq: 1 });
        b.rationale = "same steamer captain".into();
        l.append(b).unwrap();
    }

    #[test]
    fn timestamps_do_not_affect_the_chain() {
        let mut a = Ledger::new();
        let mut b = Ledger::new();
        let mut other = body(StepKind::Parse, 1);
        other.timestamp = "2030-06-06T00:00:00Z".into();
        a.append(body(StepKind::Parse, 1)).unwrap();
        b.append(other).unwrap();
        assert_eq!(a.head(), b.head());
        assert_ne!(a.records()[0].seal, b.records()[0].seal);
    }

    #[test]
    fn timestamp_edit_is_detected() {
        let mut l = Ledger::new();
        l.append(body(StepKind::Parse, 1)).unwrap();
        let text = l.to_text().replace("2026-01-01", "2026-01-02");
        assert_eq!(Ledger::parse(&text).unwrap_err(), LedgerError::Tampered { seq: 1 });
    }
}
